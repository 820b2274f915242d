#![no_main]

use libfuzzer_sys::fuzz_target;

use circle_derivs::circle_dist::CircleLaw;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(law) = s.parse::<CircleLaw>() {
            // Display output must parse back to the same law.
            let again: CircleLaw = law.to_string().parse().expect("display form parses");
            assert_eq!(again, law);
        }
    }
});
