//! Continuous piecewise-linear (CPL) functions on an interval, the
//! one-hidden-layer interpolant, and exact piecewise integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{parse_error, Layer, ReluNetwork};

/// Adjacent abscissae closer than this are treated as a collision.
pub const MIN_GAP: f64 = 1e-13;

/// Relative slope jump above which [`cpl_from_net_1d`] reports a break.
pub const SLOPE_BREAK_TOL: f64 = 1e-6;

/// A CPL function given by strictly increasing break points and node values.
///
/// Outside `[breaks[0], breaks[last]]` the end segments extend linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CplFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

fn check_abscissae(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("non-finite abscissa".into()));
    }
    for (i, w) in xs.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap <= 0.0 {
            return Err(Error::Precondition(format!(
                "abscissae not strictly increasing at index {}",
                i + 1
            )));
        }
        if gap < MIN_GAP {
            return Err(Error::Precondition(format!(
                "abscissae {} and {} collide (gap {gap:e})",
                i,
                i + 1
            )));
        }
    }
    Ok(())
}

impl CplFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} breaks but {} values",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.len() < 2 {
            return Err(Error::Precondition(
                "a CPL function needs at least two break points".into(),
            ));
        }
        check_abscissae(&breaks)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite value".into()));
        }
        Ok(Self { breaks, values })
    }

    /// The constant function `c` on `[a, b]`.
    pub fn constant(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![c, c])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of linear pieces between the first and last break.
    pub fn pieces(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn slope(&self, segment: usize) -> f64 {
        (self.values[segment + 1] - self.values[segment])
            / (self.breaks[segment + 1] - self.breaks[segment])
    }

    /// Linear interpolation on the containing segment.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breaks.len();
        let seg = match self.breaks.partition_point(|&b| b <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.breaks[seg], self.breaks[seg + 1]);
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let t = (x - x0) / (x1 - x0);
        y0 + t * (y1 - y0)
    }

    /// Largest `|f|` over the break points (the exact sup on the domain).
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Removes interior break points at which the slope does not change
    /// (relative tolerance `tol`).
    pub fn simplify(&self, tol: f64) -> CplFunction {
        let mut breaks = vec![self.breaks[0]];
        let mut values = vec![self.values[0]];
        for i in 1..self.breaks.len() - 1 {
            let left = (self.values[i] - values[values.len() - 1])
                / (self.breaks[i] - breaks[breaks.len() - 1]);
            let right = self.slope(i);
            let scale = left.abs().max(right.abs()).max(1.0);
            if (left - right).abs() > tol * scale {
                breaks.push(self.breaks[i]);
                values.push(self.values[i]);
            }
        }
        breaks.push(*self.breaks.last().unwrap());
        values.push(*self.values.last().unwrap());
        CplFunction { breaks, values }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite values always serialize")
    }

    /// Parses `{"breaks": [...], "values": [...]}` and validates it.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            breaks: Vec<f64>,
            values: Vec<f64>,
        }
        let doc: Doc = serde_json::from_slice(bytes).map_err(|e| parse_error(bytes, &e))?;
        Self::new(doc.breaks, doc.values)
    }
}

/// Ordered samples `(x_i, y_i)`, optionally tagged with the `(m, n)` shape
/// of the two-hidden-layer interpolant (`m(n+1)+1` points, all `y ≥ 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    xs: Vec<f64>,
    ys: Vec<f64>,
    shape: Option<(usize, usize)>,
}

impl SampleSet {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Shape(format!(
                "{} abscissae but {} values",
                xs.len(),
                ys.len()
            )));
        }
        check_abscissae(&xs)?;
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Precondition("non-finite sample value".into()));
        }
        Ok(Self { xs, ys, shape: None })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
    }

    /// Tags the set with shape `(m, n)`; checks the count and nonnegativity.
    pub fn with_shape(mut self, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Shape("m and n must be positive".into()));
        }
        let want = m * (n + 1) + 1;
        if self.xs.len() != want {
            return Err(Error::Shape(format!(
                "(m, n) = ({m}, {n}) needs {want} samples, got {}",
                self.xs.len()
            )));
        }
        if let Some(i) = self.ys.iter().position(|&y| y < 0.0) {
            return Err(Error::Precondition(format!(
                "sample {i} has negative value {}",
                self.ys[i]
            )));
        }
        self.shape = Some((m, n));
        Ok(self)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// The CPL function through all samples.
    pub fn to_cpl(&self) -> Result<CplFunction> {
        CplFunction::new(self.xs.clone(), self.ys.clone())
    }
}

/// Output weights `a` and bias `c` such that
/// `c + Σ_j a_j σ(x − x_j)` (j = 0..N−1) interpolates `(x_i, y_i)` and is
/// linear between consecutive nodes.
pub(crate) fn fit_output_row(xs: &[f64], ys: &[f64]) -> (Vec<f64>, f64) {
    let n = xs.len() - 1;
    let mut a = Vec::with_capacity(n);
    let mut prev = 0.0;
    for j in 0..n {
        let s = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
        a.push(s - prev);
        prev = s;
    }
    (a, ys[0])
}

/// First layer with an all-ones weight column and biases `−x_0, …, −x_{N−1}`.
pub(crate) fn break_point_layer(xs: &[f64]) -> Layer {
    let n = xs.len() - 1;
    Layer::new(n, 1, vec![1.0; n], xs[..n].iter().map(|x| -x).collect())
        .expect("finite break points")
}

/// One-hidden-layer network of width `N` interpolating `N + 1` samples, with
/// break points exactly at the sample abscissae on `[x_0, x_N]`.
pub fn lemma1_interpolant(samples: &SampleSet) -> Result<ReluNetwork> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "the interpolant needs at least two samples".into(),
        ));
    }
    let first = break_point_layer(samples.xs());
    let (a, c) = fit_output_row(samples.xs(), samples.ys());
    let out = Layer::new(1, a.len(), a, vec![c])?;
    ReluNetwork::new(1, vec![first, out])
}

/// Exact `∫_a^b |f − g|` for two CPL functions.
pub fn exact_l1_cpl(f: &CplFunction, g: &CplFunction, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got [{a}, {b}]")));
    }
    let mut knots: Vec<f64> = f
        .breaks
        .iter()
        .chain(&g.breaks)
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    knots.push(a);
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (l, r) = (w[0], w[1]);
        total += linear_abs_integral(f.eval(l) - g.eval(l), f.eval(r) - g.eval(r), r - l);
    }
    Ok(total)
}

/// `∫ |d|` over a segment of width `w` where `d` is linear from `dl` to `dr`.
pub(crate) fn linear_abs_integral(dl: f64, dr: f64, w: f64) -> f64 {
    if dl * dr >= 0.0 {
        0.5 * (dl.abs() + dr.abs()) * w
    } else {
        // Sign change: two triangles meeting at the root.
        0.5 * w * (dl * dl + dr * dr) / (dl.abs() + dr.abs())
    }
}

/// Reconstructs a CPL approximation of a scalar-input network on `[a, b]` by
/// dense probing and slope-change detection. A probing oracle for tests.
pub fn cpl_from_net_1d(net: &ReluNetwork, a: f64, b: f64, probe_count: usize) -> Result<CplFunction> {
    if probe_count < 3 {
        return Err(Error::Precondition("probe_count must be at least 3".into()));
    }
    if net.input_dim() != 1 {
        return Err(Error::InputShape {
            expected: 1,
            got: net.input_dim(),
        });
    }
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got [{a}, {b}]")));
    }
    let h = (b - a) / (probe_count - 1) as f64;
    let ps: Vec<f64> = (0..probe_count)
        .map(|i| if i + 1 == probe_count { b } else { a + i as f64 * h })
        .collect();
    let mut scratch = net.scratch();
    let vs: Vec<f64> = ps.iter().map(|&x| net.eval_with(&[x], &mut scratch)).collect();
    let slopes: Vec<f64> = (0..ps.len() - 1)
        .map(|i| (vs[i + 1] - vs[i]) / (ps[i + 1] - ps[i]))
        .collect();
    let same = |s: f64, t: f64| (s - t).abs() <= SLOPE_BREAK_TOL * s.abs().max(t.abs()).max(1.0);

    // Runs of consecutive probe intervals sharing a slope.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=slopes.len() {
        if i == slopes.len() || !same(slopes[start], slopes[i]) {
            runs.push((start, i - 1));
            start = i;
        }
    }
    // Reliable runs span at least two intervals, or touch the ends.
    let reliable: Vec<(usize, usize)> = runs
        .iter()
        .copied()
        .filter(|&(s, e)| e > s || s == 0 || e == slopes.len() - 1)
        .collect();

    let mut breaks = vec![a];
    for pair in reliable.windows(2) {
        let (_, le) = pair[0];
        let (rs, _) = pair[1];
        let (xl, yl, sl) = (ps[le + 1], vs[le + 1], slopes[le]);
        let (xr, yr, sr) = (ps[rs], vs[rs], slopes[rs]);
        if rs - (le + 1) <= 1 && !same(sl, sr) {
            // At most one unresolved interval: intersect the two lines.
            let x = (yr - yl + sl * xl - sr * xr) / (sl - sr);
            breaks.push(x.clamp(xl, xr.max(xl)));
        } else {
            breaks.extend_from_slice(&ps[le + 1..=rs]);
        }
    }
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(breaks.len());
    for x in breaks {
        if merged.last().map_or(true, |&l| x - l >= MIN_GAP.max(1e-9 * h)) {
            merged.push(x);
        }
    }
    if *merged.last().unwrap() != b {
        let n = merged.len();
        if n >= 2 {
            merged[n - 1] = b;
        } else {
            merged.push(b);
        }
    }
    let values = merged.iter().map(|&x| net.eval_with(&[x], &mut scratch)).collect();
    CplFunction::new(merged, values)
}

/// Exact CPL form of a scalar-input network on `[a, b]`.
///
/// Tracks every activation kink layer by layer: pre-activations are linear
/// between known break points, so each sign change adds one root.
pub fn extract_cpl(net: &ReluNetwork, a: f64, b: f64) -> Result<CplFunction> {
    if net.input_dim() != 1 {
        return Err(Error::InputShape {
            expected: 1,
            got: net.input_dim(),
        });
    }
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got [{a}, {b}]")));
    }
    let mut xs = vec![a, b];
    // acts[p] holds the current layer activations at break point p.
    let mut acts: Vec<Vec<f64>> = vec![vec![a], vec![b]];
    let last = net.layers().len() - 1;
    for (li, layer) in net.layers().iter().enumerate() {
        let mut pre: Vec<Vec<f64>> = acts
            .iter()
            .map(|h| {
                (0..layer.rows())
                    .map(|r| {
                        layer
                            .row(r)
                            .iter()
                            .zip(h)
                            .fold(layer.bias()[r], |s, (w, v)| s + w * v)
                    })
                    .collect()
            })
            .collect();
        if li < last {
            let mut nxs = Vec::with_capacity(xs.len());
            let mut npre = Vec::with_capacity(xs.len());
            for p in 0..xs.len() {
                nxs.push(xs[p]);
                npre.push(pre[p].clone());
                if p + 1 == xs.len() {
                    break;
                }
                let (l, r) = (&pre[p], &pre[p + 1]);
                let mut roots: Vec<f64> = (0..layer.rows())
                    .filter(|&k| (l[k] > 0.0 && r[k] < 0.0) || (l[k] < 0.0 && r[k] > 0.0))
                    .map(|k| l[k] / (l[k] - r[k]))
                    .filter(|&t| t > 0.0 && t < 1.0)
                    .collect();
                roots.sort_by(f64::total_cmp);
                roots.dedup();
                for t in roots {
                    let x = xs[p] + t * (xs[p + 1] - xs[p]);
                    let v: Vec<f64> = l.iter().zip(r).map(|(u, w)| u + t * (w - u)).collect();
                    nxs.push(x);
                    npre.push(v);
                }
            }
            xs = nxs;
            pre = npre;
            for v in pre.iter_mut().flatten() {
                *v = v.max(0.0);
            }
        }
        acts = pre;
    }
    // Collapse points that are numerically coincident.
    let mut breaks: Vec<f64> = Vec::with_capacity(xs.len());
    let mut values: Vec<f64> = Vec::with_capacity(xs.len());
    for (x, v) in xs.into_iter().zip(acts) {
        match breaks.last() {
            Some(&l) if x - l < MIN_GAP => {
                if x == b {
                    let n = breaks.len();
                    if n >= 2 {
                        breaks[n - 1] = x;
                        values[n - 1] = v[0];
                    }
                }
            }
            _ => {
                breaks.push(x);
                values.push(v[0]);
            }
        }
    }
    CplFunction::new(breaks, values)
}
