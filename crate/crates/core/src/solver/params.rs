use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feedback {
    FullInfo,
    TwoPointBandit,
}

impl Feedback {
    pub fn label(self) -> &'static str {
        match self {
            Feedback::FullInfo => "full-info",
            Feedback::TwoPointBandit => "two-point-bandit",
        }
    }
}

/// Query offset `zeta`, shrink factor `alpha` and interior radius `r` of
/// the two-point scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditParams {
    pub zeta: f64,
    pub alpha: f64,
    pub interior_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub horizon: usize,
    /// Stepsize scale `a` in `eta = a / sqrt(T)`.
    pub a: f64,
    pub eta: f64,
    /// Dual regularization weight `delta`.
    pub delta: f64,
    pub bandit: Option<BanditParams>,
}

impl SolverParams {
    pub fn full_info(horizon: usize, a: f64, delta: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("stepsize scale must be positive, got {a}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(Self {
            horizon,
            a,
            eta: a / (horizon as f64).sqrt(),
            delta,
            bandit: None,
        })
    }

    /// Two-point feedback with `zeta = 1/T` and `alpha = 1/(r T)`.
    pub fn bandit(horizon: usize, a: f64, delta: f64, interior_radius: f64) -> Result<Self> {
        let t = horizon as f64;
        Self::bandit_with(horizon, a, delta, 1.0 / t, 1.0 / (interior_radius * t), interior_radius)
    }

    pub fn bandit_with(
        horizon: usize,
        a: f64,
        delta: f64,
        zeta: f64,
        alpha: f64,
        interior_radius: f64,
    ) -> Result<Self> {
        let mut params = Self::full_info(horizon, a, delta)?;
        if !(interior_radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interior radius must be positive, got {interior_radius}"
            )));
        }
        if !(zeta > 0.0 && zeta < interior_radius) {
            return Err(Error::InvalidArgument(format!(
                "zeta = {zeta} must lie in (0, r = {interior_radius})"
            )));
        }
        // tolerate the rounding of alpha = zeta / r computed elsewhere
        if !(alpha >= zeta / interior_radius * (1.0 - 1e-12) && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha = {alpha} must lie in [zeta / r, 1) = [{}, 1)",
                zeta / interior_radius
            )));
        }
        params.bandit = Some(BanditParams { zeta, alpha, interior_radius });
        Ok(params)
    }

    pub fn feedback(&self) -> Feedback {
        if self.bandit.is_some() {
            Feedback::TwoPointBandit
        } else {
            Feedback::FullInfo
        }
    }
}
