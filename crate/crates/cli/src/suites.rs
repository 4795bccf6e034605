//! Property suites run by the `check` command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reluapprox::construct::delta::{choose_delta, DeltaContext};
use reluapprox::construct::lemma2::{lemma2_interpolant, Lemma2Plan};
use reluapprox::construct::{construct, corollary32_check, piece_capacity, DeltaPolicy};
use reluapprox::cost::{dist_mem, dist_time, shared_mem, shared_time, ArchSpec, CostParams};
use reluapprox::metrics::{holder_family, measure, GridSpec, QuadratureRule};
use reluapprox::{extract_cpl, lemma1_interpolant, CplFunction, ReluNetwork, SampleSet};

use crate::config::ExperimentConfig;

pub const SUITES: [&str; 7] = ["lemma1", "lemma2", "corollary", "bounds", "delta", "cost", "roundtrip"];

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub suite: String,
    pub name: String,
    pub outcome: Result<(), String>,
    pub seconds: f64,
}

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Strictly increasing abscissae starting at `0` with gaps in `[min_gap, 1]`
/// and values in `[lo, hi)`.
pub fn random_samples(rng: &mut ChaCha8Rng, count: usize, min_gap: f64, lo: f64, hi: f64) -> SampleSet {
    let mut xs = Vec::with_capacity(count);
    let mut x = 0.0;
    for _ in 0..count {
        xs.push(x);
        x += rng.gen_range(min_gap..1.0);
    }
    let ys = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
    SampleSet::new(xs, ys).expect("generated samples are valid")
}

/// CPL function on `[0, 1]` with `pieces` pieces, breaks at least `1e-3`
/// apart and values in `[−1, 1)`.
pub fn random_cpl(rng: &mut ChaCha8Rng, pieces: usize) -> CplFunction {
    loop {
        let mut inner: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.01..0.99)).collect();
        inner.sort_by(f64::total_cmp);
        let mut breaks = vec![0.0];
        breaks.extend(inner);
        breaks.push(1.0);
        if breaks.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            let values = (0..=pieces).map(|_| rng.gen_range(-1.0..1.0)).collect();
            return CplFunction::new(breaks, values).expect("generated CPL is valid");
        }
    }
}

/// Largest deviation of `net` from the chord between `a` and `b`, relative
/// to the endpoint magnitude.
pub fn chord_deviation(net: &ReluNetwork, a: f64, b: f64, probes: usize) -> f64 {
    let (fa, fb) = (net.eval1(a), net.eval1(b));
    let scale = 1.0 + fa.abs() + fb.abs();
    (1..probes)
        .map(|k| {
            let t = k as f64 / probes as f64;
            let x = a + t * (b - a);
            (net.eval1(x) - (fa + t * (fb - fa))).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn lemma1(seed: u64) -> Vec<(String, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    let mut bent = 0.0f64;
    for _ in 0..50 {
        let count = rng.gen_range(2..=51);
        let s = random_samples(&mut rng, count, 1e-3, -5.0, 5.0);
        let net = lemma1_interpolant(&s).expect("interpolant builds");
        for (x, y) in s.xs().iter().zip(s.ys()) {
            worst = worst.max((net.eval1(*x) - y).abs());
        }
        for w in s.xs().windows(2) {
            bent = bent.max(chord_deviation(&net, w[0], w[1], 8));
        }
    }
    out.push(("node_exactness".into(), ensure(worst <= 1e-9, || format!("max node error {worst:e}"))));
    out.push(("segment_linearity".into(), ensure(bent <= 1e-9, || format!("max chord deviation {bent:e}"))));
    out
}

fn lemma2(seed: u64, shapes: &[(usize, usize)]) -> Vec<(String, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exact = Ok(());
    let mut linear = Ok(());
    let mut sup = Ok(());
    let mut schedule = Ok(());
    let mut exclusive = Ok(());
    for &(m, n) in shapes {
        let s = random_samples(&mut rng, m * (n + 1) + 1, 0.05, 0.0, 1.0);
        let plan = Lemma2Plan::new(s, m, n).expect("shaped samples");
        let (net, trace) = lemma2_interpolant(&plan).expect("interpolant builds");
        let xs = plan.samples().xs();
        let ys = plan.samples().ys();
        let tag = format!("(m, n) = ({m}, {n})");
        let err = xs.iter().zip(ys).map(|(x, y)| (net.eval1(*x) - y).abs()).fold(0.0, f64::max);
        if err > 1e-8 && exact.is_ok() {
            exact = Err(format!("{tag}: node error {err:e}"));
        }
        for j in 0..m {
            for l in 1..=n {
                let i = j * (n + 1) + l;
                let dev = chord_deviation(&net, xs[i - 1], xs[i], 16);
                if dev > 1e-7 && linear.is_ok() {
                    linear = Err(format!("{tag}: interval {i} deviates by {dev:e}"));
                }
            }
        }
        let bound = plan.sup_bound();
        let actual = extract_cpl(&net, xs[0], *xs.last().unwrap()).map(|c| c.sup_abs());
        match actual {
            Ok(v) if v <= bound => {}
            Ok(v) if sup.is_ok() => sup = Err(format!("{tag}: sup {v:e} above bound {bound:e}")),
            Err(e) if sup.is_ok() => sup = Err(format!("{tag}: {e}")),
            _ => {}
        }
        for k in 0..=n {
            for i in trace.vanishing_set(m, n, k) {
                let r = trace.residuals[k + 1][i];
                if r.abs() > 1e-8 && schedule.is_ok() {
                    schedule = Err(format!("{tag}: f_{} at sample {i} is {r:e}", k + 1));
                }
            }
        }
        for (gp, gm) in trace.g_plus_at_samples.iter().zip(&trace.g_minus_at_samples) {
            if gp.iter().zip(gm).any(|(a, b)| *a != 0.0 && *b != 0.0) && exclusive.is_ok() {
                exclusive = Err(format!("{tag}: both signed rows active at one sample"));
            }
        }
    }
    vec![
        ("node_exactness".into(), exact),
        ("kept_interval_linearity".into(), linear),
        ("sup_bound".into(), sup),
        ("residual_schedule".into(), schedule),
        ("signed_rows_exclusive".into(), exclusive),
    ]
}

fn corollary(seed: u64) -> Vec<(String, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (m, n) in [(2, 2), (3, 4), (4, 4)] {
        let mut res = Ok(());
        for _ in 0..5 {
            let g = random_cpl(&mut rng, piece_capacity(m, n));
            match corollary32_check(&g, m, n, 1e-3, &DeltaPolicy::default()) {
                Ok(r) if r.achieved_l1 <= 1e-3 => {}
                Ok(r) => res = Err(format!("achieved {:e}", r.achieved_l1)),
                Err(e) => res = Err(e.to_string()),
            }
        }
        out.push((format!("l1_budget_m{m}_n{n}"), res));
    }
    out
}

fn bounds() -> Vec<(String, Check)> {
    let mut out = Vec::new();
    let cases: [(usize, f64, usize, usize); 7] = [
        (1, 0.5, 2, 100_000),
        (1, 0.5, 4, 100_000),
        (1, 0.5, 8, 100_000),
        (1, 1.0, 2, 100_000),
        (1, 1.0, 4, 100_000),
        (1, 1.0, 8, 100_000),
        (2, 1.0, 4, 512),
    ];
    for (d, alpha, n, pts) in cases {
        let name = format!("cone_d{d}_alpha{alpha}_N{n}");
        let res = (|| -> Check {
            let t = holder_family("cone", d, alpha, 1.0).map_err(|e| e.to_string())?;
            let c = construct(&t, n, &DeltaPolicy::default()).map_err(|e| e.to_string())?;
            let grid = GridSpec::new(d, pts, QuadratureRule::Midpoint);
            let m = measure(&**t.function(), &c.network, &grid).map_err(|e| e.to_string())?;
            ensure(m.l1 <= c.bound, || format!("L1 {:e} above bound {:e}", m.l1, c.bound))?;
            let wv = c.network.widthvec().ok_or("network has no hidden layer")?;
            ensure(wv.fits_within(&c.width_bound), || format!("widths {wv} exceed {}", c.width_bound))
        })();
        out.push((name, res));
    }
    out
}

fn delta() -> Vec<(String, Check)> {
    let ctx = DeltaContext::one_dim(2, 1.0);
    let paper = choose_delta(&DeltaPolicy::paper(), &ctx, |_| Ok(0.0)).map_err(|e| e.to_string());
    let small = paper.and_then(|c| {
        ensure((c.delta - 0.25 / 76.0).abs() <= 1e-15, || format!("delta {:e}", c.delta))
    });
    let ctx16 = DeltaContext::one_dim(16, 1.0);
    let clamp = choose_delta(&DeltaPolicy::paper(), &ctx16, |_| Ok(0.0))
        .map_err(|e| e.to_string())
        .and_then(|c| ensure(c.clamped, || "N = 16 was not clamped".into()));
    let mut below = Ok(());
    for n in 1..=32 {
        let ctx = DeltaContext::one_dim(n, 1.0);
        if let Ok(c) = choose_delta(&DeltaPolicy::empirical(), &ctx, |_| Ok(0.0)) {
            if c.delta >= 0.5 * ctx.min_grid_gap {
                below = Err(format!("N = {n}: delta {:e} not below half gap", c.delta));
            }
        }
    }
    vec![
        ("sufficient_small_width".into(), small),
        ("sufficient_clamp".into(), clamp),
        ("empirical_below_half_gap".into(), below),
    ]
}

fn cost() -> Vec<(String, Check)> {
    let p = CostParams {
        t_s: 1.0,
        t_w: 0.5,
        c_flop: 1.0,
    };
    let mut mono = Ok(());
    let mut flat = Ok(());
    let mut mem = Ok(());
    for n in [2usize, 8, 16] {
        let ms: Vec<usize> = std::iter::successors(Some(1usize), |m| Some(m * 2))
            .take_while(|&m| m <= 2 * n * n)
            .collect();
        for w in ms.windows(2) {
            let a = ArchSpec::new(n, 3, w[0]).unwrap();
            let b = ArchSpec::new(n, 3, w[1]).unwrap();
            if shared_time(&b, &p) > shared_time(&a, &p) {
                mono = Err(format!("shared time grows from m = {} to {}", w[0], w[1]));
            }
        }
        let big = ArchSpec::new(n, 3, n * n + 1).unwrap();
        let bigger = ArchSpec::new(n, 3, 100 * n * n).unwrap();
        if shared_time(&big, &p) != shared_time(&bigger, &p) {
            flat = Err(format!("N = {n}: shared time varies past N²"));
        }
        for &m in &ms {
            let a = ArchSpec::new(n, 3, m).unwrap();
            let mf = m as f64;
            if dist_mem(&a, &p) * mf + p.c_flop * mf < shared_mem(&a, &p) {
                mem = Err(format!("N = {n}, m = {m}: distributed memory below shared"));
            }
            if m <= n * n && dist_time(&a, &p) < shared_time(&a, &p) {
                mem = Err(format!("N = {n}, m = {m}: distributed time below shared"));
            }
        }
    }
    vec![
        ("time_nonincreasing".into(), mono),
        ("time_flat_past_saturation".into(), flat),
        ("memory_and_time_ordering".into(), mem),
    ]
}

fn roundtrip() -> Vec<(String, Check)> {
    let mut res = Ok(());
    for (d, n) in [(1, 2), (1, 3), (1, 5), (2, 4), (2, 5)] {
        let t = holder_family("cone", d, 0.7, 1.3).unwrap();
        match construct(&t, n, &DeltaPolicy::default()) {
            Ok(c) => match ReluNetwork::deserialize(&c.network.serialize()) {
                Ok(back) if back == c.network => {}
                Ok(_) => res = Err(format!("d = {d}, N = {n}: weights changed")),
                Err(e) => res = Err(e.to_string()),
            },
            Err(e) => res = Err(e.to_string()),
        }
    }
    vec![("bit_exact".into(), res)]
}

/// Interpolant shapes for the run: the configured one or all of `{1..6}²`.
fn shapes(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    match (cfg.m, cfg.n_blocks) {
        (Some(m), Some(n)) => vec![(m, n)],
        (Some(m), None) => (1..=6).map(|n| (m, n)).collect(),
        (None, Some(n)) => (1..=6).map(|m| (m, n)).collect(),
        (None, None) => (1..=6).flat_map(|m| (1..=6).map(move |n| (m, n))).collect(),
    }
}

/// Runs the named suites (all when `names` is empty). Unknown names are an
/// error.
pub fn run_suites(names: &[String], cfg: &ExperimentConfig) -> Result<Vec<PropertyResult>, String> {
    for n in names {
        if !SUITES.contains(&n.as_str()) {
            return Err(format!("unknown suite `{n}`; known suites: {}", SUITES.join(", ")));
        }
    }
    let selected: Vec<&str> = if names.is_empty() {
        SUITES.to_vec()
    } else {
        SUITES.iter().copied().filter(|s| names.iter().any(|n| n == s)).collect()
    };
    let seed = cfg.seed();
    let mut results = Vec::new();
    for suite in selected {
        let start = Instant::now();
        let props = match suite {
            "lemma1" => lemma1(seed),
            "lemma2" => lemma2(seed, &shapes(cfg)),
            "corollary" => corollary(seed),
            "bounds" => bounds(),
            "delta" => delta(),
            "cost" => cost(),
            "roundtrip" => roundtrip(),
            _ => unreachable!(),
        };
        let per = start.elapsed().as_secs_f64() / props.len().max(1) as f64;
        results.extend(props.into_iter().map(|(name, outcome)| PropertyResult {
            suite: suite.to_string(),
            name,
            outcome,
            seconds: per,
        }));
    }
    Ok(results)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// JUnit-style XML report.
pub fn junit_xml(results: &[PropertyResult], cfg: &ExperimentConfig) -> String {
    let failures = results.iter().filter(|r| r.outcome.is_err()).count();
    let total: f64 = results.iter().map(|r| r.seconds).sum();
    let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    xml += &format!(
        "<testsuites name=\"{} {}\" tests=\"{}\" failures=\"{failures}\" time=\"{total:.3}\">\n",
        crate::TOOL,
        crate::VERSION,
        results.len()
    );
    xml += &format!(
        "  <properties><property name=\"config\" value=\"{}\"/></properties>\n",
        xml_escape(&cfg.echo_json())
    );
    let mut suites: Vec<&str> = results.iter().map(|r| r.suite.as_str()).collect();
    suites.dedup();
    for s in suites {
        let members: Vec<&PropertyResult> = results.iter().filter(|r| r.suite == s).collect();
        let f = members.iter().filter(|r| r.outcome.is_err()).count();
        xml += &format!("  <testsuite name=\"{s}\" tests=\"{}\" failures=\"{f}\">\n", members.len());
        for r in members {
            xml += &format!(
                "    <testcase classname=\"{s}\" name=\"{}\" time=\"{:.3}\"",
                xml_escape(&r.name),
                r.seconds
            );
            match &r.outcome {
                Ok(()) => xml += "/>\n",
                Err(msg) => {
                    xml += &format!(
                        ">\n      <failure message=\"{}\"/>\n    </testcase>\n",
                        xml_escape(msg)
                    );
                }
            }
        }
        xml += "  </testsuite>\n";
    }
    xml += "</testsuites>\n";
    xml
}
