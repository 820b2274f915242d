#![no_main]

use libfuzzer_sys::fuzz_target;

use circle_derivs::experiments::SchemeSpec;
use circle_derivs::polynomial::WeightScheme;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(w) = s.parse::<WeightScheme>() {
            let again: WeightScheme = w.to_string().parse().expect("display form parses");
            assert_eq!(again, w);
        }
        let _ = s.parse::<SchemeSpec>();
    }
});
