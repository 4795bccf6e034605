//! Replays the checked-in fuzz corpus through the same entry points as the
//! fuzz targets, so the seeds stay exercised on stable toolchains.

use std::fs;
use std::path::PathBuf;

use reluapprox::{parse_input_line, CplFunction, ReluNetwork};
use reluapprox_cli::config::ExperimentConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn network_json_seeds() {
    let mut parsed = 0;
    for (name, data) in seeds("network_json") {
        if let Ok(net) = ReluNetwork::deserialize(&data) {
            net.evaluate(&vec![0.5; net.input_dim()]).unwrap();
            assert_eq!(ReluNetwork::deserialize(&net.serialize()).unwrap(), net, "{name}");
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn cpl_json_seeds() {
    let mut parsed = 0;
    for (_, data) in seeds("cpl_json") {
        if let Ok(f) = CplFunction::from_json_bytes(&data) {
            let (a, b) = f.domain();
            f.eval(0.5 * (a + b));
            f.sup_abs();
            f.simplify(1e-9);
            parsed += 1;
        }
    }
    assert_eq!(parsed, 1);
}

#[test]
fn input_line_seeds() {
    for (name, data) in seeds("input_line") {
        let line = String::from_utf8(data).unwrap();
        match name.as_str() {
            "non_finite.txt" => assert!(parse_input_line(&line).is_err()),
            "separators_only.txt" => assert!(parse_input_line(&line).unwrap().is_empty()),
            _ => assert!(!parse_input_line(&line).unwrap().is_empty()),
        }
    }
}

#[test]
fn experiment_config_seeds() {
    for (name, data) in seeds("experiment_config") {
        match ExperimentConfig::from_json_bytes(&data) {
            Ok(cfg) => {
                cfg.delta_policy().unwrap();
                cfg.grid(cfg.target_spec().1.clamp(1, 3)).validate().unwrap();
                cfg.echo_json();
            }
            Err(_) => assert!(name == "invalid_values.json" || name == "unknown_key.json", "{name}"),
        }
    }
}
