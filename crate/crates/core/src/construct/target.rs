use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type TargetFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar function on `[0,1]^d` together with a caller-supplied Hölder
/// certificate `|f(x) − f(y)| ≤ ν ‖x − y‖₂^α`.
///
/// The certificate is trusted; [`HolderTarget::spot_check`] only samples it.
#[derive(Clone)]
pub struct HolderTarget {
    name: String,
    d: usize,
    alpha: f64,
    nu: f64,
    f: TargetFn,
}

impl fmt::Debug for HolderTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolderTarget")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("alpha", &self.alpha)
            .field("nu", &self.nu)
            .finish_non_exhaustive()
    }
}

/// A sampled pair that breaks the Hölder certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `|f(x) − f(y)| / (ν ‖x − y‖^α)`, greater than one.
    pub ratio: f64,
}

impl HolderTarget {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        alpha: f64,
        nu: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension d must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "Hölder order alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Parameter(format!(
                "Hölder constant nu must be positive and finite, got {nu}"
            )));
        }
        Ok(Self {
            name: name.into(),
            d,
            alpha,
            nu,
            f: Arc::new(f),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn function(&self) -> &TargetFn {
        &self.f
    }

    /// Samples `pairs` random point pairs in the unit cube and returns the
    /// worst violation of the certificate, if any. Violations are logged.
    pub fn spot_check(&self, pairs: usize, seed: u64) -> Option<HolderViolation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: Option<HolderViolation> = None;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..self.d).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..self.d).map(|_| rng.gen::<f64>()).collect();
            let dist = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist == 0.0 {
                continue;
            }
            let lhs = (self.eval(&x) - self.eval(&y)).abs();
            let ratio = lhs / (self.nu * dist.powf(self.alpha));
            // allow rounding slack
            if ratio > 1.0 + 1e-9 && worst.as_ref().map_or(true, |w| ratio > w.ratio) {
                worst = Some(HolderViolation { x, y, ratio });
            }
        }
        if let Some(w) = &worst {
            log::warn!(
                "target `{}` breaks its Hölder certificate by a factor {:.6}",
                self.name,
                w.ratio
            );
        }
        worst
    }
}
