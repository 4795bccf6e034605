//! Parallel time and memory cost model for one training step, in units of a
//! single constant `c`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::WidthVec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Message start-up time.
    pub t_s: f64,
    /// Per-word transfer time.
    pub t_w: f64,
    pub c_flop: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            t_s: 1.0,
            t_w: 1.0,
            c_flop: 1.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_s", self.t_s), ("t_w", self.t_w)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(self.c_flop > 0.0 && self.c_flop.is_finite()) {
            return Err(Error::Parameter(format!("c_flop must be positive, got {}", self.c_flop)));
        }
        Ok(())
    }
}

/// Width `n`, depth `l` and core count `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub n: usize,
    pub l: usize,
    pub m: usize,
}

impl ArchSpec {
    pub fn new(n: usize, l: usize, m: usize) -> Result<Self> {
        if n == 0 || l == 0 || m == 0 {
            return Err(Error::Parameter(format!(
                "width, depth and cores must be positive, got N={n}, L={l}, m={m}"
            )));
        }
        Ok(Self { n, l, m })
    }

    fn f(&self) -> (f64, f64, f64) {
        (self.n as f64, self.l as f64, self.m as f64)
    }

    fn saturated(&self) -> bool {
        (self.m as u128) > (self.n as u128) * (self.n as u128)
    }

    /// `ln N`, with `1` standing in for `N = 1`.
    fn ln_width(&self) -> f64 {
        if self.n == 1 {
            1.0
        } else {
            (self.n as f64).ln()
        }
    }
}

pub fn shared_time(a: &ArchSpec, p: &CostParams) -> f64 {
    let (n, l, m) = a.f();
    if a.saturated() {
        p.c_flop * l * a.ln_width()
    } else {
        p.c_flop * l * (n * n / m + (m / n).ln().max(0.0))
    }
}

pub fn dist_time(a: &ArchSpec, p: &CostParams) -> f64 {
    let (n, l, m) = a.f();
    if a.saturated() {
        p.c_flop * l * a.ln_width()
    } else {
        let lm = m.ln();
        p.c_flop * l * (n * n / m + p.t_s * lm + p.t_w * n * lm / m.sqrt())
    }
}

pub fn shared_mem(a: &ArchSpec, p: &CostParams) -> f64 {
    let (n, l, _) = a.f();
    p.c_flop * l * n * n
}

/// Memory per core.
pub fn dist_mem(a: &ArchSpec, p: &CostParams) -> f64 {
    let (n, l, m) = a.f();
    p.c_flop * (l * n * n / m + 1.0)
}

/// The three architecture families compared by the cost tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `[2d⌊N^{2/d}⌋, 2N, 2N]`
    Shallow,
    /// `[N]^L`
    Uniform,
    /// `[2d+10]^N`
    NarrowDeep,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Shallow, Family::Uniform, Family::NarrowDeep];

    pub fn name(self) -> &'static str {
        match self {
            Family::Shallow => "shallow",
            Family::Uniform => "uniform",
            Family::NarrowDeep => "narrow-deep",
        }
    }

    pub fn widthvec(self, d: usize, n: usize, l: usize) -> Result<WidthVec> {
        match self {
            Family::Shallow => {
                let cells = crate::construct::theorem::cells_per_axis(n, d);
                WidthVec::new(vec![2 * d * cells, 2 * n, 2 * n])
            }
            Family::Uniform => WidthVec::new(vec![n; l]),
            Family::NarrowDeep => WidthVec::new(vec![2 * d + 10; n]),
        }
    }

    /// Width and depth fed to the cost formulas. Constant factors in the
    /// shallow family's widths are dropped, matching the tables.
    pub fn arch(self, d: usize, n: usize, l: usize, m: usize) -> Result<ArchSpec> {
        match self {
            Family::Shallow => ArchSpec::new(n, 3, m),
            Family::Uniform => ArchSpec::new(n, l, m),
            Family::NarrowDeep => ArchSpec::new(2 * d + 10, n, m),
        }
    }
}

/// Core-count regime relative to the thresholds `(2d+10)²` and `N²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Small,
    Medium,
    Large,
}

impl Regime {
    pub fn classify(d: usize, n: usize, m: usize) -> Self {
        let narrow = (2 * d + 10) * (2 * d + 10);
        if m <= narrow {
            Regime::Small
        } else if m <= n * n {
            Regime::Medium
        } else {
            Regime::Large
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Small => "small",
            Regime::Medium => "medium",
            Regime::Large => "large",
        }
    }
}

/// Representative core counts: `1`, `(2d+10)²`, `N²` and `2N²`.
pub fn default_cores(d: usize, n: usize) -> Vec<usize> {
    let mut m = vec![1, (2 * d + 10) * (2 * d + 10), n * n, 2 * n * n];
    m.sort_unstable();
    m.dedup();
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub family: Family,
    pub n: usize,
    /// Depth of the architecture the costs were evaluated for.
    pub l: usize,
    pub m: usize,
    pub regime: Regime,
    pub t_shared: f64,
    pub t_dist: f64,
    pub m_shared: f64,
    pub m_dist_per_core: f64,
    /// Affine parameter count of the family's network.
    pub weights: usize,
}

/// Costs of every family for each `N` in `widths` and each core count in
/// `cores` (or [`default_cores`] when empty).
pub fn regime_table(
    d: usize,
    widths: &[usize],
    depth: usize,
    cores: &[usize],
    p: &CostParams,
) -> Result<Vec<RegimeRow>> {
    p.validate()?;
    if d == 0 {
        return Err(Error::Parameter("d must be positive".into()));
    }
    let mut rows = Vec::new();
    for family in Family::ALL {
        for &n in widths {
            let weights = family.widthvec(d, n, depth)?.parameter_count(d);
            let ms = if cores.is_empty() {
                default_cores(d, n)
            } else {
                cores.to_vec()
            };
            for m in ms {
                let a = family.arch(d, n, depth, m)?;
                rows.push(RegimeRow {
                    family,
                    n,
                    l: a.l,
                    m,
                    regime: Regime::classify(d, n, m),
                    t_shared: shared_time(&a, p),
                    t_dist: dist_time(&a, p),
                    m_shared: shared_mem(&a, p),
                    m_dist_per_core: dist_mem(&a, p),
                    weights,
                });
            }
        }
    }
    Ok(rows)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str = "family,N,L,m,T_shared,T_dist,M_shared,M_dist_per_core,regime,weights";

pub fn rows_to_csv(rows: &[RegimeRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family.name(),
            r.n,
            r.l,
            r.m,
            fmt_f64(r.t_shared),
            fmt_f64(r.t_dist),
            fmt_f64(r.m_shared),
            fmt_f64(r.m_dist_per_core),
            r.regime.name(),
            r.weights
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> CostParams {
        CostParams {
            t_s: 0.0,
            t_w: 0.0,
            c_flop: 1.0,
        }
    }

    #[test]
    fn shared_time_regimes() {
        let p = unit();
        let a = ArchSpec::new(8, 3, 1).unwrap();
        assert_eq!(shared_time(&a, &p), 3.0 * 64.0);
        let a = ArchSpec::new(8, 3, 128).unwrap();
        assert!((shared_time(&a, &p) - 6.238324625039508).abs() < 1e-12);
        let a = ArchSpec::new(1, 2, 5).unwrap();
        assert_eq!(shared_time(&a, &p), 2.0);
    }

    #[test]
    fn boundary_is_continuous_up_to_factor_two() {
        let p = unit();
        let at = shared_time(&ArchSpec::new(16, 1, 256).unwrap(), &p);
        let past = shared_time(&ArchSpec::new(16, 1, 257).unwrap(), &p);
        assert!((at - (1.0 + 16f64.ln())).abs() < 1e-12);
        assert!(at / past <= 2.0 && past / at <= 2.0);
    }

    #[test]
    fn dist_time_example() {
        let p = CostParams {
            t_s: 1.0,
            t_w: 0.5,
            c_flop: 1.0,
        };
        let a = ArchSpec::new(16, 2, 16).unwrap();
        let want = 2.0 * (16.0 + 16f64.ln() + 0.5 * 16.0 * 16f64.ln() / 4.0);
        assert!((dist_time(&a, &p) - want).abs() < 1e-12);
        assert!((want - 48.636).abs() < 1e-3);
        assert_eq!(dist_time(&ArchSpec::new(16, 2, 1).unwrap(), &p), 2.0 * 256.0);
    }

    #[test]
    fn memory() {
        let p = CostParams {
            c_flop: 2.0,
            ..unit()
        };
        let a1 = ArchSpec::new(10, 3, 1).unwrap();
        let big = ArchSpec::new(10, 3, 1_000_000).unwrap();
        assert_eq!(shared_mem(&a1, &p), shared_mem(&big, &p));
        assert_eq!(dist_mem(&a1, &p), shared_mem(&a1, &p) + 2.0);
        assert!(dist_mem(&big, &p) >= 2.0);
    }

    #[test]
    fn table_rows_and_csv() {
        let rows = regime_table(1, &[16], 4, &[], &CostParams::default()).unwrap();
        assert_eq!(rows.len(), 3 * 4);
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("family,N,L,m,T_shared,T_dist,M_shared,M_dist_per_core"));
        assert_eq!(csv.lines().count(), 13);
        let uniform = rows.iter().find(|r| r.family == Family::Uniform).unwrap();
        assert_eq!(uniform.weights, WidthVec::new(vec![16; 4]).unwrap().parameter_count(1));
    }

    #[test]
    fn validation() {
        assert!(ArchSpec::new(0, 1, 1).is_err());
        let bad = CostParams {
            t_s: -1.0,
            ..unit()
        };
        assert!(bad.validate().is_err());
    }
}
