#![no_main]

use libfuzzer_sys::fuzz_target;

use circle_derivs::experiments::{parse_config, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(pairs) = parse_config(s) {
            // Validation may reject, but must not panic.
            let _ = ExperimentConfig::from_pairs(&pairs);
        }
    }
});
