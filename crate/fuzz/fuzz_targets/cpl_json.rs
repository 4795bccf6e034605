#![no_main]

use libfuzzer_sys::fuzz_target;
use reluapprox::CplFunction;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = CplFunction::from_json_bytes(data) {
        let (a, b) = f.domain();
        let _ = f.eval(0.5 * (a + b));
        let _ = f.sup_abs();
        let _ = f.simplify(1e-9);
    }
});
