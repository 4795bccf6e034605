//! Grid quadrature of approximation errors, built-in target families and
//! log-log rate fits.
//!
//! Quadrature is split into fixed-size chunks whose partial sums are
//! combined by pairwise reduction in index order, so results do not depend
//! on the rayon thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::HolderTarget;
use crate::error::{Error, Result};
use crate::network::ReluNetwork;

/// Largest number of grid points a single measurement may visit.
pub const MAX_GRID_POINTS: u64 = 10_000_000;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Midpoint,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub points_per_axis: usize,
    pub rule: QuadratureRule,
}

impl GridSpec {
    pub fn new(d: usize, points_per_axis: usize, rule: QuadratureRule) -> Self {
        Self {
            d,
            points_per_axis,
            rule,
        }
    }

    /// Midpoint grid with `10⁶`, `2048²` or `256³` points.
    pub fn default_for(d: usize) -> Self {
        let p = match d {
            1 => 1_000_000,
            2 => 2048,
            _ => 256,
        };
        Self::new(d, p, QuadratureRule::Midpoint)
    }

    pub fn total_points(&self) -> Option<u64> {
        (self.points_per_axis as u64).checked_pow(self.d as u32)
    }

    /// Checks the grid and returns its total point count.
    pub fn validate(&self) -> Result<u64> {
        if self.d == 0 {
            return Err(Error::Parameter("grid dimension must be positive".into()));
        }
        if self.points_per_axis < 2 {
            return Err(Error::Parameter("a grid needs at least 2 points per axis".into()));
        }
        match self.total_points() {
            Some(t) if t <= MAX_GRID_POINTS => Ok(t),
            _ => Err(Error::Resource(format!(
                "{}^{} grid points exceed the limit of {MAX_GRID_POINTS}",
                self.points_per_axis, self.d
            ))),
        }
    }

    /// Nodes and weights along one axis.
    pub fn axis(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.points_per_axis;
        match self.rule {
            QuadratureRule::Midpoint => {
                let h = 1.0 / p as f64;
                ((0..p).map(|k| (k as f64 + 0.5) * h).collect(), vec![h; p])
            }
            QuadratureRule::Trapezoid => {
                let h = 1.0 / (p - 1) as f64;
                let mut w = vec![h; p];
                w[0] = 0.5 * h;
                w[p - 1] = 0.5 * h;
                ((0..p).map(|k| k as f64 * h).collect(), w)
            }
        }
    }
}

/// `L¹` and `L^∞` errors on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub l1: f64,
    pub linf: f64,
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Measures `f − net` on `grid` in both norms with one pass.
pub fn measure<F>(f: &F, net: &ReluNetwork, grid: &GridSpec) -> Result<Measurement>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if net.input_dim() != grid.d {
        return Err(Error::InputShape {
            expected: net.input_dim(),
            got: grid.d,
        });
    }
    let total = grid.validate()? as usize;
    let (nodes, weights) = grid.axis();
    let (d, p) = (grid.d, grid.points_per_axis);
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = net.scratch();
            let mut x = vec![0.0; d];
            let mut partial = Vec::with_capacity(CHUNK);
            let mut worst: f64 = 0.0;
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let mut rest = idx;
                let mut w = 1.0;
                for slot in x.iter_mut().rev() {
                    let k = rest % p;
                    rest /= p;
                    *slot = nodes[k];
                    w *= weights[k];
                }
                let e = (f(&x) - net.eval_with(&x, &mut scratch)).abs();
                worst = worst.max(e);
                partial.push(w * e);
            }
            (pairwise_sum(&partial), worst)
        })
        .collect();
    let sums: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let linf = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(Measurement {
        l1: pairwise_sum(&sums),
        linf,
    })
}

pub fn l1_error<F>(f: &F, net: &ReluNetwork, grid: &GridSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    Ok(measure(f, net, grid)?.l1)
}

pub fn linf_error<F>(f: &F, net: &ReluNetwork, grid: &GridSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    Ok(measure(f, net, grid)?.linf)
}

/// Names accepted by [`holder_family`].
pub const FAMILIES: [&str; 3] = ["cone", "linear", "zero"];

/// Built-in targets:
/// - `cone`: `ν ‖x − c‖^α` with `c = (½, …, ½)`,
/// - `linear`: `ν x₁` (needs `α = 1`),
/// - `zero`: the zero function.
pub fn holder_family(name: &str, d: usize, alpha: f64, nu: f64) -> Result<HolderTarget> {
    match name {
        "cone" => HolderTarget::new(name, d, alpha, nu, move |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
            nu * r2.sqrt().powf(alpha)
        }),
        "linear" => {
            let t = HolderTarget::new(name, d, alpha, nu, move |x: &[f64]| {
                nu * x[0]
            })?;
            if alpha != 1.0 {
                return Err(Error::CertificateViolation(format!(
                    "a nonconstant linear function is not {alpha}-Hölder on the cube"
                )));
            }
            Ok(t)
        }
        "zero" => HolderTarget::new(name, d, alpha, nu, |_: &[f64]| 0.0),
        other => Err(Error::Registry(other.to_string())),
    }
}

/// Least-squares fit of `log err = slope · log N + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub pairs: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn rate_fit(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Shape(format!(
            "a rate fit needs at least two points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, e)) = points.iter().find(|(n, e)| *n == 0 || !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Domain(format!(
            "cannot take logarithms of N = {n}, error = {e}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Shape("all N values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        pairs: points.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}
