//! Two-hidden-layer interpolant of width `[2m, 2n+1]` for `m(n+1)+1`
//! nonnegative samples.
//!
//! Samples are grouped into `m` blocks of `n+1` points. The last interval of
//! each block (and nothing else) is a don't-care region: the network matches
//! the samples everywhere on the grid and is linear between consecutive
//! samples inside a block.

use serde::Serialize;

use crate::cpl::{break_point_layer, fit_output_row, SampleSet};
use crate::error::{Error, Result};
use crate::network::{Layer, ReluNetwork};

/// Index bookkeeping for a shaped sample set.
#[derive(Debug, Clone)]
pub struct Lemma2Plan {
    m: usize,
    n: usize,
    samples: SampleSet,
}

impl Lemma2Plan {
    pub fn new(samples: SampleSet, m: usize, n: usize) -> Result<Self> {
        let samples = samples.with_shape(m, n)?;
        Ok(Self { m, n, samples })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    /// Block starts `j(n+1)`, `j = 0..m`.
    pub fn block_starts(&self) -> Vec<usize> {
        (0..=self.m).map(|j| j * (self.n + 1)).collect()
    }

    /// Block ends `j(n+1)+n`, `j = 0..m−1`.
    pub fn block_ends(&self) -> Vec<usize> {
        (0..self.m).map(|j| j * (self.n + 1) + self.n).collect()
    }

    /// The `2m+1` indices where the second-layer rows are fitted, sorted.
    pub fn break_indices(&self) -> Vec<usize> {
        let mut idx = Vec::with_capacity(2 * self.m + 1);
        for j in 0..self.m {
            idx.push(j * (self.n + 1));
            idx.push(j * (self.n + 1) + self.n);
        }
        idx.push(self.m * (self.n + 1));
        idx
    }

    /// Don't-care intervals `[x_{j(n+1)+n}, x_{(j+1)(n+1)}]`.
    pub fn dont_care_intervals(&self) -> Vec<(f64, f64)> {
        let xs = self.samples.xs();
        self.block_ends()
            .into_iter()
            .map(|e| (xs[e], xs[e + 1]))
            .collect()
    }

    /// Upper bound on `sup |φ|` over `[x_0, x_{m(n+1)}]`:
    /// `3 max y ∏_k (1 + maxspan_k / mingap_k)`.
    pub fn sup_bound(&self) -> f64 {
        let xs = self.samples.xs();
        let ymax = self.samples.ys().iter().fold(0.0f64, |a, &b| a.max(b));
        let mut prod = 1.0;
        for k in 1..=self.n {
            let mut span: f64 = 0.0;
            let mut gap = f64::INFINITY;
            for j in 0..self.m {
                let s = j * (self.n + 1);
                span = span.max(xs[s + self.n] - xs[s + k - 1]);
                gap = gap.min(xs[s + k] - xs[s + k - 1]);
            }
            prod *= 1.0 + span / gap;
        }
        3.0 * ymax * prod
    }
}

/// Residual bookkeeping of the construction, indexed by step `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualTrace {
    /// `residuals[k][i] = f_k(x_i)` for `k = 0..=n+1`.
    pub residuals: Vec<Vec<f64>>,
    /// Block indices `j` with `f_k(x_{j(n+1)+k}) ≥ 0`, for `k = 1..=n`.
    pub lambda_plus: Vec<Vec<usize>>,
    pub lambda_minus: Vec<Vec<usize>>,
    /// Values of `g₀` at the break points.
    pub g0_controls: Vec<f64>,
    /// Values of `g⁺ₖ`, `g⁻ₖ` at the break points, for `k = 1..=n`.
    pub g_plus_controls: Vec<Vec<f64>>,
    pub g_minus_controls: Vec<Vec<f64>>,
    /// `σ(g⁺ₖ(x_i))` and `σ(g⁻ₖ(x_i))` for every sample, `k = 1..=n`.
    pub g_plus_at_samples: Vec<Vec<f64>>,
    pub g_minus_at_samples: Vec<Vec<f64>>,
}

impl ResidualTrace {
    /// Sample indices where `f_{k+1}` must vanish: offsets `0..=k` of every
    /// block plus the last sample.
    pub fn vanishing_set(&self, m: usize, n: usize, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..m)
            .flat_map(|j| (0..=k.min(n)).map(move |l| j * (n + 1) + l))
            .collect();
        out.push(m * (n + 1));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// Value at `x` of the line through `(x0, 0)` and `(x1, v)`.
fn line(x0: f64, x1: f64, v: f64, x: f64) -> f64 {
    v * (x - x0) / (x1 - x0)
}

/// Builds the interpolant and its residual trace.
pub fn lemma2_interpolant(plan: &Lemma2Plan) -> Result<(ReluNetwork, ResidualTrace)> {
    let (m, n) = (plan.m, plan.n);
    let xs = plan.samples.xs();
    let ys = plan.samples.ys();
    let total = xs.len();
    let bidx = plan.break_indices();
    let bxs: Vec<f64> = bidx.iter().map(|&i| xs[i]).collect();

    let mut trace = ResidualTrace {
        residuals: Vec::with_capacity(n + 2),
        lambda_plus: Vec::with_capacity(n),
        lambda_minus: Vec::with_capacity(n),
        g0_controls: bidx.iter().map(|&i| ys[i]).collect(),
        g_plus_controls: Vec::with_capacity(n),
        g_minus_controls: Vec::with_capacity(n),
        g_plus_at_samples: Vec::with_capacity(n),
        g_minus_at_samples: Vec::with_capacity(n),
    };

    // f_0 = y, and g_0 is the interpolant of f_0 on the break points.
    trace.residuals.push(ys.to_vec());
    let g0_at = |i: usize| -> f64 {
        if i == m * (n + 1) {
            return ys[i];
        }
        let s = (i / (n + 1)) * (n + 1);
        let (xl, xr) = (xs[s], xs[s + n]);
        ys[s] + (ys[s + n] - ys[s]) * (xs[i] - xl) / (xr - xl)
    };
    let f1: Vec<f64> = (0..total).map(|i| ys[i] - g0_at(i).max(0.0)).collect();
    trace.residuals.push(f1);

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2 * n + 1);
    rows.push(fit_output_row(&bxs, &trace.g0_controls));

    for k in 1..=n {
        let f = trace.residuals[k].clone();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut cp = Vec::with_capacity(bxs.len());
        let mut cm = Vec::with_capacity(bxs.len());
        let mut gp = vec![0.0; total];
        let mut gm = vec![0.0; total];
        for j in 0..m {
            let s = j * (n + 1);
            let v = f[s + k];
            let (x0, x1) = (xs[s + k - 1], xs[s + k]);
            let positive = v >= 0.0;
            if positive {
                plus.push(j);
            } else {
                minus.push(j);
            }
            let amp = v.abs();
            let (lo, hi) = (line(x0, x1, amp, xs[s]), line(x0, x1, amp, xs[s + n]));
            let (pl, ph, ml, mh) = if positive {
                (lo, hi, 0.0, 0.0)
            } else {
                (0.0, 0.0, lo, hi)
            };
            cp.push(pl);
            cp.push(ph);
            cm.push(ml);
            cm.push(mh);
            for i in s..=s + n {
                let g = line(x0, x1, amp, xs[i]).max(0.0);
                if positive {
                    gp[i] = g;
                } else {
                    gm[i] = g;
                }
            }
        }
        cp.push(0.0);
        cm.push(0.0);
        let next: Vec<f64> = (0..total).map(|i| f[i] - gp[i] + gm[i]).collect();
        rows.push(fit_output_row(&bxs, &cp));
        rows.push(fit_output_row(&bxs, &cm));
        trace.lambda_plus.push(plus);
        trace.lambda_minus.push(minus);
        trace.g_plus_controls.push(cp);
        trace.g_minus_controls.push(cm);
        trace.g_plus_at_samples.push(gp);
        trace.g_minus_at_samples.push(gm);
        trace.residuals.push(next);
    }

    let first = break_point_layer(&bxs);
    let hidden = 2 * m;
    let mut w2 = Vec::with_capacity((2 * n + 1) * hidden);
    let mut b2 = Vec::with_capacity(2 * n + 1);
    for (a, c) in &rows {
        w2.extend_from_slice(a);
        b2.push(*c);
    }
    let second = Layer::new(2 * n + 1, hidden, w2, b2)?;
    let mut w3 = vec![1.0; 2 * n + 1];
    for k in 1..=n {
        w3[2 * k] = -1.0;
    }
    let third = Layer::new(1, 2 * n + 1, w3, vec![0.0])?;
    let net = ReluNetwork::new(1, vec![first, second, third])?;
    if net.widths() != [2 * m, 2 * n + 1] {
        return Err(Error::Shape(format!(
            "interpolant has widths {:?}, expected [{}, {}]",
            net.widths(),
            2 * m,
            2 * n + 1
        )));
    }
    Ok((net, trace))
}
