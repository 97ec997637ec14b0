//! Closed-form outage analysis of the majority scheme for three users and
//! two transmit antennas.
//!
//! Outage of user `l` reduces to the selected-gain CDF evaluated at
//! `beta * theta*_l`, where `theta*_l` collects the SIC thresholds of every
//! user decoded up to and including `l`. Each CDF is a polynomial in the
//! single-link Gamma CDF (see [`zeta`]).

pub mod zeta;

use num_traits::Zero;
use serde::Serialize;

use crate::channel::{ImpairmentState, SystemConfig};
use crate::error::ModelError;
use crate::special_math::{
    factorial, poly_power_coefficients, regularized_lower_gamma, regularized_upper_gamma, DoubleDouble, PolyCoeffs,
};

pub use zeta::{derive_zeta_decision_sets, derive_zeta_order_statistics, mixture_cdf, zeta_table, MixtureCdf, ZetaSet};

/// Relative tolerance between the direct and expanded outage forms.
pub const CROSS_CHECK_RTOL: f64 = 1e-9;
/// Below this outage the expanded form is not compared.
pub const CROSS_CHECK_MIN_OP: f64 = 1e-14;
/// Above this normalized argument the expansion under/overflows; outage is
/// then indistinguishable from one.
const CROSS_CHECK_MAX_ARG: f64 = 500.0;

/// Decodability threshold on the normalized gain of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThetaStar {
    Feasible(f64),
    /// Some stage's SINR ceiling is at or below its threshold.
    Infeasible,
}

impl ThetaStar {
    pub fn value(self) -> Option<f64> {
        match self {
            ThetaStar::Feasible(t) => Some(t),
            ThetaStar::Infeasible => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, ThetaStar::Feasible(_))
    }
}

/// `max_{j<=user} th_j / (gamma (a_j - th_j sum_{i>j} a_i))` for a zero-based
/// `user`.
pub fn theta_star(user: usize, gamma: f64, cfg: &SystemConfig) -> ThetaStar {
    assert!(user < cfg.num_users(), "user {user} out of range");
    let mut worst = 0.0f64;
    for j in 0..=user {
        let residual: f64 = cfg.powers[j + 1..].iter().sum();
        let margin = cfg.powers[j] - cfg.thresholds[j] * residual;
        if margin <= 0.0 {
            return ThetaStar::Infeasible;
        }
        worst = worst.max(cfg.thresholds[j] / (gamma * margin));
    }
    ThetaStar::Feasible(worst)
}

/// `gamma * theta*`, which does not depend on the SNR.
pub fn alpha(user: usize, cfg: &SystemConfig) -> ThetaStar {
    theta_star(user, 1.0, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorFloor {
    /// Selected-gain CDF at the high-SNR limit of its argument.
    pub exact: f64,
    /// Leading-term expression for the same limit.
    pub upper: f64,
    /// Both values are zero because the channel is ideal.
    pub ideal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserOutage {
    pub exact: f64,
    /// High-SNR expression, clamped to `[0, 1]`.
    pub upper: f64,
    /// Ideal channels only.
    pub asymptotic: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutagePoint {
    pub gamma: f64,
    pub users: Vec<UserOutage>,
}

/// Analytic model for one configuration and impairment state.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    cfg: SystemConfig,
    imp: ImpairmentState,
    set: ZetaSet,
    shape: u32,
    mixtures: Vec<MixtureCdf>,
    /// `(sum_{k<shape} y^k / k!)^n` for `n = 0..=6`, in double-double.
    truncated_exp_powers: Vec<PolyCoeffs<DoubleDouble>>,
}

impl AnalyticModel {
    pub fn new(cfg: &SystemConfig, imp: &ImpairmentState, set: ZetaSet) -> Result<Self, ModelError> {
        let problems = cfg.problems();
        if !problems.is_empty() {
            return Err(ModelError::InvalidConfig(problems));
        }
        let mut unsupported = Vec::new();
        if cfg.n_t != 2 {
            unsupported.push(format!("closed forms need n_t = 2, got {}", cfg.n_t));
        }
        if cfg.num_users() != zeta::NUM_USERS {
            unsupported.push(format!("closed forms need 3 users, got {}", cfg.num_users()));
        }
        let shape = cfg.integer_shape();
        if shape.is_none() {
            unsupported.push(format!("closed forms need an integer m * n_r, got {}", cfg.m * cfg.n_r as f64));
        }
        if !unsupported.is_empty() {
            return Err(ModelError::Unsupported(unsupported.join("; ")));
        }
        let shape = shape.unwrap_or(1);
        if shape > 64 {
            return Err(ModelError::Unsupported(format!("m * n_r = {shape} is too large for the closed forms")));
        }
        let mixtures = (0..zeta::NUM_USERS).map(|u| mixture_cdf(set, u)).collect::<Result<Vec<_>, _>>()?;
        let base = PolyCoeffs::new((0..shape).map(|k| DoubleDouble::from_f64(1.0) / factorial(k)).collect());
        let truncated_exp_powers = (0..=zeta::NUM_TERMS as u32).map(|n| poly_power_coefficients(&base, n)).collect();
        Ok(Self { cfg: cfg.clone(), imp: *imp, set, shape, mixtures, truncated_exp_powers })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn impairments(&self) -> &ImpairmentState {
        &self.imp
    }

    pub fn zeta_set(&self) -> ZetaSet {
        self.set
    }

    /// `m * n_r`.
    pub fn shape(&self) -> u32 {
        self.shape
    }

    pub fn mixture(&self, user: usize) -> Result<&MixtureCdf, ModelError> {
        self.mixtures
            .get(user)
            .ok_or_else(|| ModelError::Unsupported(format!("no user {} in a three-user network", user + 1)))
    }

    fn normalized(&self, x: f64) -> f64 {
        self.cfg.m * x / self.imp.omega_hat()
    }

    /// Single-link gain CDF, `P(m n_r, m x / omega_hat)`.
    pub fn marginal_cdf(&self, x: f64) -> Result<f64, ModelError> {
        if !(x >= 0.0) {
            return Err(ModelError::Contract(format!("gain must be >= 0, got {x}")));
        }
        Ok(regularized_lower_gamma(self.shape, self.normalized(x))?)
    }

    fn marginal_tails(&self, x: f64) -> Result<(f64, f64), ModelError> {
        let f = self.marginal_cdf(x)?;
        let s = regularized_upper_gamma(self.shape, self.normalized(x))?;
        Ok((f, s))
    }

    /// CDF of the zero-based `user`'s gain on the majority antenna.
    pub fn majority_cdf(&self, x: f64, user: usize) -> Result<f64, ModelError> {
        let mixture = self.mixture(user)?;
        let (f, s) = self.marginal_tails(x)?;
        Ok(mixture.eval_split(f, s))
    }

    /// `beta * theta*`, or `None` when decoding can never succeed.
    pub fn outage_argument(&self, user: usize, gamma: f64) -> Result<Option<f64>, ModelError> {
        self.mixture(user)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ModelError::Contract(format!("SNR must be positive and finite, got {gamma}")));
        }
        Ok(theta_star(user, gamma, &self.cfg).value().map(|t| self.imp.beta(gamma) * t))
    }

    /// Outage probability of `user` at linear SNR `gamma`.
    ///
    /// Evaluated from the selected-gain CDF and confirmed against the
    /// expanded multinomial form wherever the outage is at least
    /// [`CROSS_CHECK_MIN_OP`].
    pub fn outage_exact(&self, user: usize, gamma: f64) -> Result<f64, ModelError> {
        let Some(arg) = self.outage_argument(user, gamma)? else {
            return Ok(1.0);
        };
        let (f, s) = self.marginal_tails(arg)?;
        let direct = self.mixtures[user].eval_split(f, s);
        if direct >= CROSS_CHECK_MIN_OP && self.normalized(arg) <= CROSS_CHECK_MAX_ARG {
            let expanded = self.expanded_outage(user, arg);
            if (direct - expanded).abs() > CROSS_CHECK_RTOL * direct.abs() {
                return Err(ModelError::CrossCheck { user: user + 1, gamma, direct, multinomial: expanded });
            }
        }
        Ok(direct)
    }

    /// Same quantity through the expanded multinomial sum.
    pub fn outage_exact_multinomial(&self, user: usize, gamma: f64) -> Result<f64, ModelError> {
        match self.outage_argument(user, gamma)? {
            None => Ok(1.0),
            Some(arg) => Ok(self.expanded_outage(user, arg)),
        }
    }

    /// `sum_q zeta_q sum_n C(q, n) (-1)^n e^{-n y} sum_k c_{n,k} y^k`, with
    /// `c_{n,k}` the coefficients of the `n`-th power of the truncated
    /// exponential series. Summed in double-double.
    fn expanded_outage(&self, user: usize, arg: f64) -> f64 {
        let y = DoubleDouble::from_f64(self.normalized(arg));
        let mut total = DoubleDouble::zero();
        for (qi, z) in self.mixtures[user].zeta().iter().enumerate() {
            if *z == 0.0 {
                continue;
            }
            let q = qi + 1;
            let mut inner = DoubleDouble::zero();
            let mut binom = 1.0;
            for n in 0..=q {
                let series = self.truncated_exp_powers[n].eval(y);
                let decay = (-(y * n as f64)).exp();
                let term = decay * series * binom;
                inner = if n % 2 == 0 { inner + term } else { inner - term };
                binom = binom * (q - n) as f64 / (n + 1) as f64;
            }
            total = total + inner * *z;
        }
        total.to_f64()
    }

    /// `sum_q zeta_q (u)^q` with `u = (m arg / omega_hat)^{m n_r} / (m n_r)!`.
    fn leading_term_sum(&self, user: usize, arg: f64) -> f64 {
        let u = self.normalized(arg).powi(self.shape as i32) / factorial(self.shape);
        self.mixtures[user].eval_unclamped(u)
    }

    /// High-SNR expression obtained from the small-argument form of the
    /// incomplete gamma function. Unclamped.
    pub fn outage_upper(&self, user: usize, gamma: f64) -> Result<f64, ModelError> {
        match self.outage_argument(user, gamma)? {
            None => Ok(1.0),
            Some(arg) => Ok(self.leading_term_sum(user, arg)),
        }
    }

    /// [`Self::outage_upper`] with `beta = 1`. Defined for ideal channels only.
    pub fn outage_asymptotic(&self, user: usize, gamma: f64) -> Result<f64, ModelError> {
        if !self.imp.is_ideal() {
            return Err(ModelError::Unsupported("the asymptotic expression assumes an ideal channel".into()));
        }
        self.mixture(user)?;
        match theta_star(user, gamma, &self.cfg) {
            ThetaStar::Infeasible => Ok(1.0),
            ThetaStar::Feasible(t) => Ok(self.leading_term_sum(user, t)),
        }
    }

    /// High-SNR limit of the outage under impairments, reached as the
    /// argument tends to `sigma2_e * alpha / rho^2`.
    pub fn error_floor(&self, user: usize) -> Result<ErrorFloor, ModelError> {
        self.mixture(user)?;
        if self.imp.sigma2_e() == 0.0 {
            return Ok(ErrorFloor { exact: 0.0, upper: 0.0, ideal: true });
        }
        let Some(a) = alpha(user, &self.cfg).value() else {
            return Ok(ErrorFloor { exact: 1.0, upper: 1.0, ideal: false });
        };
        let rho = self.imp.rho();
        let limit = self.imp.sigma2_e() * a / (rho * rho);
        Ok(ErrorFloor {
            exact: self.majority_cdf(limit, user)?,
            upper: self.leading_term_sum(user, limit),
            ideal: false,
        })
    }

    pub fn outage_point(&self, gamma: f64) -> Result<OutagePoint, ModelError> {
        let users = (0..zeta::NUM_USERS)
            .map(|u| {
                Ok(UserOutage {
                    exact: self.outage_exact(u, gamma)?,
                    upper: self.outage_upper(u, gamma)?.clamp(0.0, 1.0),
                    asymptotic: if self.imp.is_ideal() {
                        Some(self.outage_asymptotic(u, gamma)?.clamp(0.0, 1.0))
                    } else {
                        None
                    },
                    feasible: theta_star(u, gamma, &self.cfg).is_feasible(),
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(OutagePoint { gamma, users })
    }
}

/// Single-link gain CDF for `cfg` under `imp`.
pub fn marginal_cdf(x: f64, cfg: &SystemConfig, imp: &ImpairmentState) -> Result<f64, ModelError> {
    AnalyticModel::new(cfg, imp, ZetaSet::Published)?.marginal_cdf(x)
}

pub fn majority_cdf(x: f64, user: usize, cfg: &SystemConfig, imp: &ImpairmentState) -> Result<f64, ModelError> {
    AnalyticModel::new(cfg, imp, ZetaSet::Published)?.majority_cdf(x, user)
}

pub fn outage_exact(user: usize, gamma: f64, cfg: &SystemConfig, imp: &ImpairmentState) -> Result<f64, ModelError> {
    AnalyticModel::new(cfg, imp, ZetaSet::Published)?.outage_exact(user, gamma)
}

pub fn outage_upper(user: usize, gamma: f64, cfg: &SystemConfig, imp: &ImpairmentState) -> Result<f64, ModelError> {
    AnalyticModel::new(cfg, imp, ZetaSet::Published)?.outage_upper(user, gamma)
}

pub fn error_floor(user: usize, cfg: &SystemConfig, imp: &ImpairmentState) -> Result<ErrorFloor, ModelError> {
    AnalyticModel::new(cfg, imp, ZetaSet::Published)?.error_floor(user)
}
