#![no_main]

use libfuzzer_sys::fuzz_target;
use reluapprox_cli::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = ExperimentConfig::from_json_bytes(data) {
        let _ = cfg.delta_policy();
        let _ = cfg.grid(cfg.target_spec().1.clamp(1, 3)).validate();
        let _ = cfg.echo_json();
    }
});
