#![no_main]

use libfuzzer_sys::fuzz_target;

use lacuna_core::exact::{rat, rat_to_f64};
use lacuna_core::trigpoly::poly_from_json;

fuzz_target!(|data: &[u8]| {
    if data.len() > 4096 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(poly) = poly_from_json(text) else {
        return;
    };
    // Construction invariants: positive degree, nonvanishing energy, the
    // top stored coefficient actually nonzero.
    assert!(poly.degree() >= 1);
    assert!(poly.second_moment() > rat(0, 1));
    assert!(poly.half_coeffs()[poly.degree() as usize - 1] != rat(0, 1));

    // Analytic invariants on a few points: 1-periodicity and the sup bound.
    let a = rat_to_f64(&poly.sup_bound());
    for x in [0.0f64, 0.37, 0.5, 0.9231] {
        let v = poly.eval(x);
        assert!(v.is_finite());
        assert!((v - poly.eval(x + 1.0)).abs() <= 1e-9 * (1.0 + v.abs()));
        assert!(v.abs() <= a * (1.0 + 1e-9) + 1e-9);
    }
});
