//! Fixed-architecture approximants for Hölder targets on `[0,1]^d`.
//!
//! `d = 1`: a two-hidden-layer interpolant on the grid
//! `{i/N²} ∪ {i/N − δ}` with widths `[2N, 2N+1]`.
//!
//! `d > 1`: a one-hidden-layer quantizer `ψ` mapping the cube onto a 1-D
//! lattice, fused with a two-hidden-layer interpolant of the lattice values.

use serde::Serialize;

use crate::construct::delta::{choose_delta, DeltaChoice, DeltaContext, DeltaPolicy};
use crate::construct::lemma2::{lemma2_interpolant, Lemma2Plan, ResidualTrace};
use crate::construct::target::HolderTarget;
use crate::cpl::{extract_cpl, lemma1_interpolant, SampleSet};
use crate::error::{Error, Result};
use crate::network::{Layer, ReluNetwork, WidthVec};

/// Largest supported dimension for the projection construction.
pub const MAX_DIM: usize = 3;
/// Largest supported cells-per-axis `n` for the projection construction.
pub const MAX_CELLS: usize = 16;

/// Output of a full approximation construction.
#[derive(Debug, Clone, Serialize)]
pub struct Construction {
    #[serde(skip)]
    pub network: ReluNetwork,
    pub d: usize,
    pub n_param: usize,
    pub alpha: f64,
    pub nu: f64,
    pub delta: DeltaChoice,
    /// Guaranteed L¹ error bound in the target's units.
    pub bound: f64,
    /// Width vector the network must fit within.
    pub width_bound: WidthVec,
    /// Error certificate on the don't-care region, in normalized units.
    pub h_certificate: f64,
    /// `sup |φ̄|` over the interpolation interval, normalized units.
    pub interpolant_sup: f64,
    #[serde(skip)]
    pub trace: ResidualTrace,
}

fn check_target(target: &HolderTarget, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    let f0 = target.eval(&vec![0.0; target.d()]);
    if !f0.is_finite() {
        return Err(Error::Precondition("target is not finite at the origin".into()));
    }
    Ok(())
}

/// Rejects normalized samples that the Hölder certificate says cannot occur.
fn check_normalized(values: &[f64], hi: f64) -> Result<()> {
    let slack = 1e-9 * (1.0 + hi);
    for (i, &v) in values.iter().enumerate() {
        if !(v >= -slack && v <= 2.0 * hi + slack) {
            return Err(Error::CertificateViolation(format!(
                "normalized sample {i} equals {v}, outside [0, {}]",
                2.0 * hi
            )));
        }
    }
    Ok(())
}

/// Grid `{i/N²} ∪ {i/N − δ}`, ordered into `N` blocks of `N+1` points.
pub fn d1_grid(blocks: usize, delta: f64) -> Vec<f64> {
    let n = blocks;
    let nsq = (n * n) as f64;
    let mut xs = Vec::with_capacity(n * (n + 1) + 1);
    for j in 0..n {
        for k in 0..n {
            xs.push((j * n + k) as f64 / nsq);
        }
        xs.push((j + 1) as f64 / n as f64 - delta);
    }
    xs.push(1.0);
    xs
}

/// One-dimensional construction with widths `[2N, 2N+1]` and sup bound
/// `2 ν N^{−2α}`.
pub fn theorem_d1(target: &HolderTarget, n: usize, policy: &DeltaPolicy) -> Result<Construction> {
    if target.d() != 1 {
        return Err(Error::InputShape {
            expected: 1,
            got: target.d(),
        });
    }
    check_target(target, n)?;
    let (alpha, nu) = (target.alpha(), target.nu());
    let f0 = target.eval(&[0.0]);
    let norm = |x: f64| (target.eval(&[x]) - f0) / nu + 1.0;

    let build = |delta: f64| -> Result<(ReluNetwork, ResidualTrace, f64)> {
        let xs = d1_grid(n, delta);
        let ys: Vec<f64> = xs.iter().map(|&x| norm(x)).collect();
        check_normalized(&ys, 1.0)?;
        let plan = Lemma2Plan::new(SampleSet::new(xs, ys)?, n, n)?;
        let (net, trace) = lemma2_interpolant(&plan)?;
        let sup = extract_cpl(&net, 0.0, 1.0)?.sup_abs();
        Ok((net, trace, sup))
    };
    // The don't-care region has measure Nδ; on it the error is at most
    // sup f̄ + sup |φ̄| with sup f̄ ≤ 2.
    let certificate = |delta: f64, sup: f64| n as f64 * delta * (2.0 + sup);

    let ctx = DeltaContext::one_dim(n, alpha);
    let choice = choose_delta(policy, &ctx, |delta| {
        let (_, _, sup) = build(delta)?;
        Ok(certificate(delta, sup))
    })?;
    let (net, trace, sup) = build(choice.delta)?;
    let network = net.affine_post(nu, f0 - nu)?;
    let width_bound = WidthVec::new(vec![2 * n, 2 * n + 1])?;
    Ok(Construction {
        network,
        d: 1,
        n_param: n,
        alpha,
        nu,
        h_certificate: certificate(choice.delta, sup),
        delta: choice,
        bound: 2.0 * nu * (n as f64).powf(-2.0 * alpha),
        width_bound,
        interpolant_sup: sup,
        trace,
    })
}

/// Largest `n` with `n^d ≤ N²`.
pub fn cells_per_axis(big_n: usize, d: usize) -> usize {
    let target = (big_n as u128) * (big_n as u128);
    let mut n: u128 = (big_n as f64).powf(2.0 / d as f64).floor() as u128;
    while n > 0 && n.pow(d as u32) > target {
        n -= 1;
    }
    while (n + 1).pow(d as u32) <= target {
        n += 1;
    }
    n as usize
}

/// Smallest `K` with `K² ≥ n^d`.
pub fn interpolant_size(n: usize, d: usize) -> usize {
    let cells = (n as u128).pow(d as u32);
    let mut k = (cells as f64).sqrt().ceil() as u128;
    while k > 0 && (k - 1) * (k - 1) >= cells {
        k -= 1;
    }
    while k * k < cells {
        k += 1;
    }
    k as usize
}

/// Staircase `ψ₀` on `[0,1]`: equal to `i` on `[i/n, (i+1)/n − δ]`, linear
/// on the slivers, and `n − 1` at `1`. Width `2n`.
pub fn psi0(n: usize, delta: f64) -> Result<ReluNetwork> {
    if n < 2 {
        return Err(Error::DegenerateGrid(format!("staircase needs n ≥ 2, got {n}")));
    }
    if !(delta > 0.0 && delta < 0.5 / n as f64) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0, 1/(2n)), got {delta}"
        )));
    }
    let nf = n as f64;
    let mut pts = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        pts.push((i as f64 / nf, i as f64));
        pts.push(((i + 1) as f64 / nf - delta, i as f64));
    }
    // The last value is n − 1, so the final pair is (1 − δ, n−1), (1, n−1).
    pts.push((1.0, (n - 1) as f64));
    lemma1_interpolant(&SampleSet::from_points(&pts)?)
}

/// Quantizer `ψ(x) = Σ_i n^{−(i+1)} ψ₀(x_i)` on `[0,1]^d`, one hidden layer
/// of width `2nd`.
pub fn psi(d: usize, n: usize, delta: f64) -> Result<ReluNetwork> {
    if d == 0 {
        return Err(Error::Parameter("d must be positive".into()));
    }
    let base = psi0(n, delta)?;
    let (l1, l2) = (&base.layers()[0], &base.layers()[1]);
    let h = l1.rows();
    let mut w1 = vec![0.0; d * h * d];
    let mut b1 = Vec::with_capacity(d * h);
    let mut w2 = Vec::with_capacity(d * h);
    let mut b2 = 0.0;
    let mut scale = 1.0;
    for i in 0..d {
        scale /= n as f64;
        for r in 0..h {
            w1[(i * h + r) * d + i] = l1.weight_at(r, 0);
            b1.push(l1.bias()[r]);
            w2.push(l2.weight_at(0, r) * scale);
        }
        b2 += l2.bias()[0] * scale;
    }
    ReluNetwork::new(
        d,
        vec![
            Layer::new(d * h, d, w1, b1)?,
            Layer::new(1, d * h, w2, vec![b2])?,
        ],
    )
}

/// Lattice cell digits of `k` in base `n`, most significant first.
fn digits(mut k: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for slot in out.iter_mut().rev() {
        *slot = k % n;
        k /= n;
    }
    out
}

/// 1-D sample set for the projection construction: lattice values at
/// `k/n^d`, the anchor `(1, 0)`, and linear padding on `[1 − n^{−d}, 1]`
/// up to `K(K+1)+1` points.
pub fn lattice_samples(
    d: usize,
    n: usize,
    values: impl Fn(&[f64]) -> f64,
) -> Result<(SampleSet, usize)> {
    let cells = n.pow(d as u32);
    let k = interpolant_size(n, d);
    let total = k * (k + 1) + 1;
    let mut xs = Vec::with_capacity(total);
    let mut ys = Vec::with_capacity(total);
    let mut point = vec![0.0; d];
    for idx in 0..cells {
        for (p, digit) in point.iter_mut().zip(digits(idx, n, d)) {
            *p = digit as f64 / n as f64;
        }
        xs.push(idx as f64 / cells as f64);
        ys.push(values(&point));
    }
    let surplus = total - (cells + 1);
    let (t0, y0) = (*xs.last().unwrap(), *ys.last().unwrap());
    for q in 1..=surplus {
        let s = q as f64 / (surplus + 1) as f64;
        xs.push(t0 + (1.0 - t0) * s);
        ys.push(y0 * (1.0 - s));
    }
    xs.push(1.0);
    ys.push(0.0);
    Ok((SampleSet::new(xs, ys)?, k))
}

/// Projection construction with widths `[2dn, 2K, 2K+1]` and sup bound
/// `2 (2√d)^α ν N^{−2α/d}` where `n = ⌊N^{2/d}⌋`, `K = ⌈n^{d/2}⌉`.
pub fn theorem_dd(target: &HolderTarget, big_n: usize, policy: &DeltaPolicy) -> Result<Construction> {
    let d = target.d();
    if d < 2 {
        return Err(Error::Parameter("use the one-dimensional construction for d = 1".into()));
    }
    check_target(target, big_n)?;
    if d > MAX_DIM {
        return Err(Error::Resolution(format!(
            "dimension {d} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let n = cells_per_axis(big_n, d);
    if n < 2 {
        return Err(Error::DegenerateGrid(format!(
            "N = {big_n} gives {n} cell(s) per axis in dimension {d}"
        )));
    }
    if n > MAX_CELLS {
        return Err(Error::Resolution(format!(
            "N = {big_n} gives {n} cells per axis, above the supported {MAX_CELLS}"
        )));
    }
    let (alpha, nu) = (target.alpha(), target.nu());
    let sqrt_d = (d as f64).sqrt();
    let f0 = target.eval(&vec![0.0; d]);
    let (samples, k) = lattice_samples(d, n, |x| (target.eval(x) - f0) / nu + sqrt_d)?;
    check_normalized(samples.ys(), sqrt_d)?;
    let plan = Lemma2Plan::new(samples, k, k)?;
    let (phi, trace) = lemma2_interpolant(&plan)?;
    let sup = extract_cpl(&phi, 0.0, 1.0)?.sup_abs();

    // Measure of the don't-care region {x : some x_i within a sliver}.
    let certificate =
        |delta: f64| (1.0 - (1.0 - n as f64 * delta).powi(d as i32)) * (2.0 * sqrt_d + sup);
    let ctx = DeltaContext::multi_dim(d, n, k, alpha);
    let choice = choose_delta(policy, &ctx, |delta| Ok(certificate(delta)))?;
    let quantizer = psi(d, n, choice.delta)?;
    let fused = ReluNetwork::compose(&phi, &quantizer)?;
    let network = fused.affine_post(nu, f0 - nu * sqrt_d)?;
    let width_bound = WidthVec::new(vec![2 * d * n, 2 * big_n + 2, 2 * big_n + 3])?;
    Ok(Construction {
        network,
        d,
        n_param: big_n,
        alpha,
        nu,
        h_certificate: certificate(choice.delta),
        delta: choice,
        bound: 2.0 * (2.0 * sqrt_d).powf(alpha) * nu * (big_n as f64).powf(-2.0 * alpha / d as f64),
        width_bound,
        interpolant_sup: sup,
        trace,
    })
}

/// Dispatches on the target dimension.
pub fn construct(target: &HolderTarget, n: usize, policy: &DeltaPolicy) -> Result<Construction> {
    if target.d() == 1 {
        theorem_d1(target, n, policy)
    } else {
        theorem_dd(target, n, policy)
    }
}
