//! Selection of the don't-care gap δ.
//!
//! The sufficient conditions that make the constructions provably accurate
//! contain factorials, so the exact recipe underflows 64-bit floats once the
//! width passes roughly a dozen. Two modes are offered: the closed-form
//! recipe (evaluated in log space and clamped at a floor) and an empirical
//! search that shrinks δ until a measured error certificate fits the budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    PaperSufficient,
    EmpiricalShrink,
}

impl std::str::FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-sufficient" | "paper" => Ok(Self::PaperSufficient),
            "empirical-shrink" | "empirical" => Ok(Self::EmpiricalShrink),
            other => Err(Error::Parameter(format!("unknown delta mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaPolicy {
    pub mode: DeltaMode,
    /// Right-hand side of the δ inequality. `None` uses the construction's own.
    pub target: Option<f64>,
    pub floor: f64,
    pub shrink: f64,
    pub max_iterations: usize,
}

impl Default for DeltaPolicy {
    fn default() -> Self {
        Self {
            mode: DeltaMode::EmpiricalShrink,
            target: None,
            floor: 1e-12,
            shrink: 0.5,
            max_iterations: 200,
        }
    }
}

impl DeltaPolicy {
    pub fn paper() -> Self {
        Self {
            mode: DeltaMode::PaperSufficient,
            ..Self::default()
        }
    }

    pub fn empirical() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::Parameter(format!(
                "delta floor must be positive, got {}",
                self.floor
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Parameter(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if let Some(t) = self.target {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Parameter(format!("delta target must be positive, got {t}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Construction-specific inputs to δ selection.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaContext {
    /// Smallest gap of the grid that the slivers puncture.
    pub min_grid_gap: f64,
    /// Default right-hand side of the δ inequality.
    pub target: f64,
    /// `ln` of the factor multiplying δ on the left-hand side.
    pub ln_factor: f64,
}

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `ln(a + b·k!)` for positive `a`, `b`.
fn ln_affine_factorial(a: f64, b: f64, k: u64) -> f64 {
    let big = b.ln() + ln_factorial(k);
    big + (a * (-big).exp()).ln_1p()
}

impl DeltaContext {
    /// One-dimensional construction with `N` blocks and Hölder order `alpha`:
    /// `N δ (2 + 6 (N+1)!) ≤ N^{−2α}`.
    pub fn one_dim(blocks: usize, alpha: f64) -> Self {
        let n = blocks as f64;
        Self {
            min_grid_gap: 1.0 / (n * n),
            target: n.powf(-2.0 * alpha),
            ln_factor: n.ln() + ln_affine_factorial(2.0, 6.0, blocks as u64 + 1),
        }
    }

    /// Projection construction in `d` dimensions with `n` cells per axis and
    /// interpolant size `k = ⌈n^{d/2}⌉`:
    /// `2 n δ d √d (1 + 3 (k+1)!) ≤ d^{α/2} n^{−α}`.
    pub fn multi_dim(d: usize, n: usize, k: usize, alpha: f64) -> Self {
        let (df, nf) = (d as f64, n as f64);
        Self {
            min_grid_gap: 1.0 / nf,
            target: df.powf(alpha / 2.0) * nf.powf(-alpha),
            ln_factor: (2.0 * nf * df * df.sqrt()).ln()
                + ln_affine_factorial(1.0, 3.0, k as u64 + 1),
        }
    }

    /// Exact δ solving the inequality at equality, in log space.
    pub fn paper_delta(&self, target: f64) -> f64 {
        (target.ln() - self.ln_factor).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaChoice {
    pub delta: f64,
    pub mode: DeltaMode,
    /// True when the floor (or the grid limit) overrode the requested value.
    pub clamped: bool,
    /// Unclamped closed-form value (paper-sufficient mode only).
    pub exact: Option<f64>,
    /// Certificate measured at the returned δ (empirical mode only).
    pub measured: Option<f64>,
    pub budget: f64,
    pub iterations: usize,
}

/// Picks δ for a construction.
///
/// `measure(δ)` must return an upper estimate of the error contributed by
/// the don't-care region when the construction is built with that δ. It is
/// only called in empirical mode.
pub fn choose_delta(
    policy: &DeltaPolicy,
    ctx: &DeltaContext,
    mut measure: impl FnMut(f64) -> Result<f64>,
) -> Result<DeltaChoice> {
    policy.validate()?;
    let budget = policy.target.unwrap_or(ctx.target);
    let half_gap = 0.5 * ctx.min_grid_gap;
    let start = half_gap * policy.shrink;
    match policy.mode {
        DeltaMode::PaperSufficient => {
            let exact = ctx.paper_delta(budget);
            let mut delta = exact;
            let mut clamped = false;
            if delta < policy.floor {
                log::warn!(
                    "sufficient delta {exact:e} is below the floor {:e}; clamping",
                    policy.floor
                );
                delta = policy.floor;
                clamped = true;
            }
            if delta >= half_gap {
                delta = start;
                clamped = true;
            }
            Ok(DeltaChoice {
                delta,
                mode: policy.mode,
                clamped,
                exact: Some(exact),
                measured: None,
                budget,
                iterations: 0,
            })
        }
        DeltaMode::EmpiricalShrink => {
            let mut delta = start.max(policy.floor);
            if delta >= half_gap {
                return Err(Error::DegenerateGrid(format!(
                    "delta floor {:e} does not fit below half the grid gap {half_gap:e}",
                    policy.floor
                )));
            }
            let mut last = f64::INFINITY;
            for it in 1..=policy.max_iterations {
                last = measure(delta)?;
                if last <= budget {
                    return Ok(DeltaChoice {
                        delta,
                        mode: policy.mode,
                        clamped: delta == policy.floor && start > policy.floor,
                        exact: None,
                        measured: Some(last),
                        budget,
                        iterations: it,
                    });
                }
                if delta == policy.floor {
                    break;
                }
                delta = (delta * policy.shrink).max(policy.floor);
            }
            Err(Error::ConstructionInfeasible {
                achieved: last,
                budget,
                delta,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sufficient_delta_small_width() {
        let ctx = DeltaContext::one_dim(2, 1.0);
        let c = choose_delta(&DeltaPolicy::paper(), &ctx, |_| unreachable!()).unwrap();
        assert!((c.delta - 0.25 / 76.0).abs() <= 1e-15);
        assert!(!c.clamped);
        assert!(c.delta < 0.5 * ctx.min_grid_gap);
    }

    #[test]
    fn sufficient_delta_clamps_for_wide_grid() {
        let ctx = DeltaContext::one_dim(16, 1.0);
        let c = choose_delta(&DeltaPolicy::paper(), &ctx, |_| unreachable!()).unwrap();
        assert!(c.clamped);
        assert_eq!(c.delta, 1e-12);
        let exact = c.exact.unwrap();
        let fact17: f64 = (1..=17).map(|i| i as f64).product();
        let direct = (1.0 / 256.0) / (16.0 * (2.0 + 6.0 * fact17));
        assert!((exact / direct - 1.0).abs() < 1e-12, "{exact:e} vs {direct:e}");
    }

    #[test]
    fn empirical_keeps_initial_delta_when_budget_met() {
        let ctx = DeltaContext::one_dim(4, 1.0);
        let c = choose_delta(&DeltaPolicy::empirical(), &ctx, |_| Ok(0.0)).unwrap();
        assert_eq!(c.delta, 0.25 * ctx.min_grid_gap);
        assert_eq!(c.iterations, 1);
    }

    #[test]
    fn empirical_shrinks_until_budget() {
        let ctx = DeltaContext::one_dim(4, 1.0);
        let c = choose_delta(&DeltaPolicy::empirical(), &ctx, |d| Ok(100.0 * d)).unwrap();
        assert!(100.0 * c.delta <= ctx.target);
        assert!(100.0 * c.delta * 2.0 > ctx.target);
    }

    #[test]
    fn empirical_reports_infeasible() {
        let ctx = DeltaContext::one_dim(4, 1.0);
        let err = choose_delta(&DeltaPolicy::empirical(), &ctx, |_| Ok(1.0)).unwrap_err();
        match err {
            Error::ConstructionInfeasible { achieved, delta, .. } => {
                assert_eq!(achieved, 1.0);
                assert_eq!(delta, 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn policy_validation() {
        let mut p = DeltaPolicy::default();
        p.floor = 0.0;
        assert!(p.validate().is_err());
        let mut p = DeltaPolicy::default();
        p.shrink = 1.0;
        assert!(p.validate().is_err());
        assert_eq!("paper-sufficient".parse::<DeltaMode>().unwrap(), DeltaMode::PaperSufficient);
        assert!("other".parse::<DeltaMode>().is_err());
    }

    #[test]
    fn ln_factorial_matches_direct_product() {
        assert!((ln_factorial(10) - 3628800f64.ln()).abs() < 1e-12);
        assert_eq!(ln_factorial(0), 0.0);
    }
}
