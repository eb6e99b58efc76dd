//! Fuzz parse + validation + model construction: any input that parses
//! must either build valid distribution models or return a spec error.

#![no_main]

use gwlife::modelspec::parse_and_build;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((off, life)) = parse_and_build(text) {
            // built models must satisfy their basic invariants
            let m = off.mean();
            assert!(m.is_finite() && m >= 0.0);
            let l = life.mean();
            assert!(l >= 0.0);
            for k in 1..=8u64 {
                let q = life.hazard(k);
                assert!((0.0..=1.0).contains(&q), "hazard {q} at {k}");
            }
        }
    }
});
