#![no_main]

use kltext::ga::Chromosome;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = s.parse::<Chromosome>() {
            assert_eq!(c.to_string(), s);
        }
    }
});
