use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use reluapprox::construct::{construct, Construction};
use reluapprox::cost::{fmt_f64, regime_table, rows_to_csv, CostParams};
use reluapprox::metrics::{holder_family, measure, rate_fit, Measurement};
use reluapprox::{parse_input_line, Error, ReluNetwork};

use crate::config::ExperimentConfig;
use crate::{CliError, TOOL, VERSION};

/// Errors at or below this size are treated as exact reconstructions.
pub const ERROR_FLOOR: f64 = 1e-14;

/// A finished construction together with its measured error.
#[derive(Debug, Clone)]
pub struct ConstructOutput {
    pub construction: Construction,
    pub measurement: Measurement,
    pub pass: bool,
    pub meta: Value,
}

fn build_and_measure(cfg: &ExperimentConfig, n: usize) -> Result<ConstructOutput, Error> {
    let (name, d, alpha, nu) = cfg.target_spec();
    let target = holder_family(&name, d, alpha, nu)?;
    target.spot_check(1000, cfg.seed());
    let policy = cfg.delta_policy()?;
    let c = construct(&target, n, &policy)?;
    let grid = cfg.grid(d);
    let f = target.function();
    let m = measure(&**f, &c.network, &grid)?;
    let widthvec = c.network.widths();
    let pass = m.l1 <= c.bound;
    let meta = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": cfg.echo(),
        "target": name,
        "widthvec": widthvec,
        "width_bound": c.width_bound,
        "parameter_count": c.network.parameter_count(),
        "delta": c.delta,
        "bound": c.bound,
        "l1": m.l1,
        "linf": m.linf,
        "h_certificate": c.h_certificate,
        "interpolant_sup": c.interpolant_sup,
        "grid": grid,
        "pass": pass,
    });
    Ok(ConstructOutput {
        construction: c,
        measurement: m,
        pass,
        meta,
    })
}

pub fn run_construct(cfg: &ExperimentConfig) -> Result<ConstructOutput, CliError> {
    let n = cfg
        .n
        .ok_or_else(|| CliError::usage("construct needs --N"))?;
    Ok(build_and_measure(cfg, n)?)
}

/// Path of the metadata file written next to a network file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

pub fn cmd_construct(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("network.json"));
    match run_construct(cfg) {
        Ok(o) => {
            fs::write(&out, o.construction.network.to_json_pretty())?;
            fs::write(sidecar_path(&out), serde_json::to_string_pretty(&o.meta)? + "\n")?;
            if let Some(path) = &cfg.trace {
                fs::write(path, o.construction.trace.to_json())?;
            }
            if o.pass {
                Ok(0)
            } else {
                eprintln!(
                    "measured L1 error {:e} exceeds the bound {:e}",
                    o.measurement.l1, o.construction.bound
                );
                Ok(1)
            }
        }
        Err(e) => {
            if e.code == 3 {
                fs::write(out.with_extension("error.json"), e.record(cfg).to_string() + "\n")?;
            }
            Err(e)
        }
    }
}

/// One line of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub result: Result<ConstructOutput, String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv: String,
    pub summary: Value,
}

pub const SWEEP_HEADER: &str = "name,d,alpha,nu,N,widthvec,l1,linf,bound,pass,status";

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, CliError> {
    let ns = cfg.n_list.clone().unwrap_or_default();
    if ns.len() < 3 {
        return Err(CliError::usage("sweep needs at least three values in --N-list"));
    }
    let (name, d, alpha, nu) = cfg.target_spec();
    holder_family(&name, d, alpha, nu)?;
    cfg.delta_policy()?;

    let rows: Vec<SweepRow> = ns
        .par_iter()
        .map(|&n| SweepRow {
            n,
            result: build_and_measure(cfg, n).map_err(|e| e.to_string()),
        })
        .collect();

    let mut csv = format!("# {TOOL} {VERSION} config={}\n{SWEEP_HEADER}\n", cfg.echo_json());
    let mut pairs = Vec::new();
    let mut failed = 0;
    let mut all_pass = true;
    for row in &rows {
        match &row.result {
            Ok(o) => {
                let wv = o.construction.network.widthvec().map(|w| w.to_string()).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{name},{d},{},{},{},{wv},{},{},{},{},ok",
                    fmt_f64(alpha),
                    fmt_f64(nu),
                    row.n,
                    fmt_f64(o.measurement.l1),
                    fmt_f64(o.measurement.linf),
                    fmt_f64(o.construction.bound),
                    o.pass
                );
                all_pass &= o.pass;
                pairs.push((row.n, o.measurement.l1));
            }
            Err(msg) => {
                failed += 1;
                all_pass = false;
                let _ = writeln!(
                    csv,
                    "{name},{d},{},{},{},,,,,false,error: {}",
                    fmt_f64(alpha),
                    fmt_f64(nu),
                    row.n,
                    csv_safe(msg)
                );
            }
        }
    }
    let floored: Vec<(usize, f64)> = pairs
        .iter()
        .map(|&(n, e)| (n, if e <= ERROR_FLOOR { 0.0 } else { e }))
        .collect();
    let fit = rate_fit(&floored);
    let summary = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": cfg.echo(),
        "theoretical_slope": -2.0 * alpha / d as f64,
        "rate_defined": fit.is_ok(),
        "fit": fit.as_ref().ok(),
        "rate_error": fit.as_ref().err().map(|e| e.to_string()),
        "partial": failed > 0,
        "failed_rows": failed,
        "all_pass": all_pass,
    });
    Ok(SweepOutput { rows, csv, summary })
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let summary_path = cfg
        .summary
        .clone()
        .unwrap_or_else(|| out.with_extension("summary.json"));
    let s = run_sweep(cfg)?;
    fs::write(&out, &s.csv)?;
    fs::write(&summary_path, serde_json::to_string_pretty(&s.summary)? + "\n")?;
    Ok(if s.summary["all_pass"] == Value::Bool(true) { 0 } else { 1 })
}

pub fn run_cost(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let params = CostParams {
        t_s: cfg.t_s.unwrap_or(1.0),
        t_w: cfg.t_w.unwrap_or(1.0),
        c_flop: cfg.c_flop.unwrap_or(1.0),
    };
    let widths = cfg.n_list.clone().unwrap_or_else(|| vec![16, 32, 64]);
    let depth = cfg.depth.unwrap_or(4);
    let cores = cfg.cores.clone().unwrap_or_default();
    let rows = regime_table(cfg.d.unwrap_or(1), &widths, depth, &cores, &params)?;
    Ok(format!("# {TOOL} {VERSION} config={}\n{}", cfg.echo_json(), rows_to_csv(&rows)))
}

pub fn cmd_cost(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("cost.csv"));
    fs::write(out, run_cost(cfg)?)?;
    Ok(0)
}

/// Evaluates a stored network on every nonblank input line.
pub fn cmd_eval(network: &Path, input: impl BufRead, mut output: impl Write) -> Result<i32, CliError> {
    let net = ReluNetwork::deserialize(&fs::read(network)?)?;
    let mut scratch = net.scratch();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let x = parse_input_line(&line).map_err(|e| CliError::from(e).context(format!("line {}", i + 1)))?;
        if x.len() != net.input_dim() {
            return Err(CliError::from(Error::InputShape {
                expected: net.input_dim(),
                got: x.len(),
            })
            .context(format!("line {}", i + 1)));
        }
        writeln!(output, "{}", fmt_f64(net.eval_with(&x, &mut scratch)))?;
    }
    Ok(0)
}
