#![no_main]

use libfuzzer_sys::fuzz_target;
use reluapprox::parse_input_line;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(values) = parse_input_line(line) {
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
