//! Realizing a given CPL function on `[0,1]` with a `[2m, 2n+1]` network up
//! to an `L¹` budget.

use serde::Serialize;

use crate::construct::delta::{choose_delta, DeltaChoice, DeltaContext, DeltaPolicy};
use crate::construct::lemma2::{lemma2_interpolant, Lemma2Plan};
use crate::cpl::{exact_l1_cpl, extract_cpl, CplFunction, SampleSet};
use crate::error::{Error, Result};
use crate::network::ReluNetwork;

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryResult {
    #[serde(skip)]
    pub network: ReluNetwork,
    /// Exact `∫_0^1 |g − φ|`.
    pub achieved_l1: f64,
    /// `None` when the layout needs no don't-care slivers (`n = 1`).
    pub delta: Option<DeltaChoice>,
    pub grid: Vec<f64>,
}

/// Number of pieces a `[2m, 2n+1]` network can match exactly up to slivers.
pub fn piece_capacity(m: usize, n: usize) -> usize {
    if n == 1 {
        2 * m
    } else {
        m * n
    }
}

/// Splits the largest gap of `pts` until it holds `want` points.
fn subdivide(mut pts: Vec<f64>, want: usize) -> Vec<f64> {
    while pts.len() < want {
        let (i, _) = pts
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1] - w[0]))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let mid = 0.5 * (pts[i] + pts[i + 1]);
        pts.insert(i + 1, mid);
    }
    pts
}

/// Block layout before slivers are cut: `m` blocks as junction lists. The
/// end of one block is the sliver centre shared with the next.
struct Layout {
    blocks: Vec<Vec<f64>>,
}

fn layout(breaks: &[f64], m: usize, n: usize) -> Layout {
    let mut centres = Vec::with_capacity(m.saturating_sub(1));
    let mut internal: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut p = 0;
    for j in 0..m {
        let take = (n - 1).min(breaks.len() - p);
        internal.push(breaks[p..p + take].to_vec());
        p += take;
        if j + 1 < m && p < breaks.len() {
            centres.push(breaks[p]);
            p += 1;
        }
    }
    // Remaining centres go evenly into the tail, away from every break.
    let free = m - 1 - centres.len();
    let t0 = breaks.last().copied().unwrap_or(0.0);
    for q in 1..=free {
        centres.push(t0 + (1.0 - t0) * q as f64 / (free + 1) as f64);
    }
    let mut blocks = Vec::with_capacity(m);
    for j in 0..m {
        let lo = if j == 0 { 0.0 } else { centres[j - 1] };
        let hi = if j + 1 == m { 1.0 } else { centres[j] };
        let mut pts = vec![lo];
        pts.extend(internal[j].iter().copied());
        pts.push(hi);
        blocks.push(subdivide(pts, n + 1));
    }
    Layout { blocks }
}

impl Layout {
    fn min_gap(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Concrete grid with slivers `[c − δ/2, c + δ/2]` and a last sample at
    /// `1 + δ` so the final sliver lies outside `[0, 1]`.
    fn grid(&self, delta: f64) -> Vec<f64> {
        let m = self.blocks.len();
        let mut xs = Vec::new();
        for (j, block) in self.blocks.iter().enumerate() {
            let last = block.len() - 1;
            for (l, &x) in block.iter().enumerate() {
                let x = if l == 0 && j > 0 {
                    x + 0.5 * delta
                } else if l == last && j + 1 < m {
                    x - 0.5 * delta
                } else {
                    x
                };
                xs.push(x);
            }
        }
        xs.push(1.0 + delta);
        xs
    }
}

fn interior_breaks(g: &CplFunction) -> Vec<f64> {
    g.breaks()
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < 1.0)
        .collect()
}

/// Builds `φ` realizing `g` (up to slivers) with widths `[2m, 2n+1]` and
/// checks `∫_0^1 |g − φ| ≤ ε`.
pub fn corollary32_check(
    g: &CplFunction,
    m: usize,
    n: usize,
    epsilon: f64,
    policy: &DeltaPolicy,
) -> Result<CorollaryResult> {
    if m == 0 || n == 0 {
        return Err(Error::Shape("m and n must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let (a, b) = g.domain();
    if a > 0.0 || b < 1.0 {
        return Err(Error::Precondition(format!(
            "g is defined on [{a}, {b}], which does not cover [0, 1]"
        )));
    }
    let breaks = interior_breaks(g);
    let cap = piece_capacity(m, n);
    if breaks.len() + 1 > cap {
        return Err(Error::Precondition(format!(
            "g has {} pieces on [0, 1] but widths [{}, {}] realize at most {cap}",
            breaks.len() + 1,
            2 * m,
            2 * n + 1
        )));
    }
    let lift = breaks
        .iter()
        .chain(&[0.0, 1.0])
        .map(|&x| g.eval(x))
        .fold(f64::INFINITY, f64::min)
        .min(0.0);

    let realize = |xs: Vec<f64>| -> Result<ReluNetwork> {
        let ys: Vec<f64> = xs.iter().map(|&x| (g.eval(x) - lift).max(0.0)).collect();
        let plan = Lemma2Plan::new(SampleSet::new(xs, ys)?, m, n)?;
        let (net, _) = lemma2_interpolant(&plan)?;
        net.affine_post(1.0, lift)
    };
    let l1 = |net: &ReluNetwork| -> Result<f64> { exact_l1_cpl(g, &extract_cpl(net, 0.0, 1.0)?, 0.0, 1.0) };

    if n == 1 {
        // Every interval is kept, so samples can sit on the breaks directly.
        let mut pts = vec![0.0];
        pts.extend(breaks.iter().copied());
        pts.push(1.0);
        let grid = subdivide(pts, 2 * m + 1);
        let network = realize(grid.clone())?;
        let achieved_l1 = l1(&network)?;
        if achieved_l1 > epsilon {
            return Err(Error::ConstructionInfeasible {
                achieved: achieved_l1,
                budget: epsilon,
                delta: 0.0,
            });
        }
        return Ok(CorollaryResult {
            network,
            achieved_l1,
            delta: None,
            grid,
        });
    }

    let lay = layout(&breaks, m, n);
    let min_gap = lay.min_gap();
    let ymax = breaks
        .iter()
        .chain(&[0.0, 1.0])
        .map(|&x| g.eval(x) - lift)
        .fold(0.0, f64::max);
    let probe = Lemma2Plan::new(
        SampleSet::new(lay.grid(0.25 * min_gap), vec![ymax; m * (n + 1) + 1])?,
        m,
        n,
    )?;
    let ctx = DeltaContext {
        min_grid_gap: min_gap,
        target: epsilon,
        ln_factor: ((m as f64) * (2.0 * ymax + probe.sup_bound() + 1.0)).ln(),
    };
    let choice = choose_delta(policy, &ctx, |delta| l1(&realize(lay.grid(delta))?))?;
    let grid = lay.grid(choice.delta);
    let network = realize(grid.clone())?;
    let achieved_l1 = l1(&network)?;
    if achieved_l1 > epsilon {
        return Err(Error::ConstructionInfeasible {
            achieved: achieved_l1,
            budget: epsilon,
            delta: choice.delta,
        });
    }
    Ok(CorollaryResult {
        network,
        achieved_l1,
        delta: Some(choice),
        grid,
    })
}
