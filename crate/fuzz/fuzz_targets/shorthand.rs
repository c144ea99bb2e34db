#![no_main]

use libfuzzer_sys::fuzz_target;

use lacuna_core::sequences::{build_sequence, SequenceSpec};
use lacuna_core::trigpoly::poly_from_shorthand;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1024 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };

    if let Ok(spec) = SequenceSpec::from_shorthand(text) {
        if let Ok(seq) = build_sequence(&spec, 8) {
            for w in seq.terms().windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    if let Ok(poly) = poly_from_shorthand(text) {
        assert!(poly.degree() >= 1);
        assert!(poly.eval(0.125).is_finite());
    }
});
