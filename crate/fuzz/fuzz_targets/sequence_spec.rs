#![no_main]

use libfuzzer_sys::fuzz_target;

use lacuna_core::sequences::{build_sequence, SequenceSpec};

fuzz_target!(|data: &[u8]| {
    // Megabyte integers only prove that big integers are slow.
    if data.len() > 4096 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = SequenceSpec::from_json(text) else {
        return;
    };
    // Keep one fuzz iteration cheap regardless of the spec's own count.
    for n in [1usize, 2, 16] {
        if let Ok(seq) = build_sequence(&spec, n) {
            let terms = seq.terms();
            assert_eq!(terms.len(), n);
            assert!(terms[0] >= 1u32.into(), "terms must be positive");
            for w in terms.windows(2) {
                assert!(w[1] > w[0], "terms must strictly increase");
            }
        }
    }
});
