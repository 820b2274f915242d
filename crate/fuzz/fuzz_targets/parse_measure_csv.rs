#![no_main]

use libfuzzer_sys::fuzz_target;

use circle_derivs::measure::{mass_in_disk, EmpiricalMeasure};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(m) = EmpiricalMeasure::from_csv(s) {
            let total: f64 = m.weights().iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
            assert!(mass_in_disk(&m, f64::INFINITY) <= 1.0);
        }
    }
});
