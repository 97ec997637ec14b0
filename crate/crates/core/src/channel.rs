//! System configuration, impairment model and random channel generation.
//!
//! Gains are the MRC-combined squared norms `phi = |h|^2` of the estimated
//! (and feedback-delayed) channel vectors. With Nakagami-m fading on each of
//! the `n_r` receive branches, `phi ~ Gamma(m * n_r, omega_hat / m)`.

use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::ModelError;
use crate::special_math::bessel_j0;

/// First positive zero of `J0`; the time correlation must stay positive.
const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
const POWER_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Nakagami fading parameter.
    pub m: f64,
    /// Mean-square channel power per receive element.
    pub omega: f64,
    pub n_t: usize,
    pub n_r: usize,
    /// NOMA power coefficients `a_1 >= ... >= a_L`, summing to one.
    pub powers: Vec<f64>,
    /// SINR thresholds `gamma_th,l`.
    pub thresholds: Vec<f64>,
}

impl SystemConfig {
    pub fn new(
        m: f64,
        omega: f64,
        n_t: usize,
        n_r: usize,
        powers: Vec<f64>,
        thresholds: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let cfg = Self { m, omega, n_t, n_r, powers, thresholds };
        let problems = cfg.problems();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ModelError::InvalidConfig(problems))
        }
    }

    /// Three users, `a = (0.6, 0.3, 0.1)`, `gamma_th = (1.4, 2.2, 2.5)`,
    /// `omega = 1`, two transmit antennas.
    pub fn three_user(m: f64, n_r: usize) -> Self {
        Self::new(m, 1.0, 2, n_r, vec![0.6, 0.3, 0.1], vec![1.4, 2.2, 2.5]).expect("three-user preset is valid")
    }

    /// Five users, `a = (9, 5, 3, 2, 1) / 20`,
    /// `gamma_th = (0.8, 0.8, 0.9, 1.5, 2)`, `omega = 1`, two transmit antennas.
    pub fn five_user(m: f64, n_r: usize) -> Self {
        let powers = [9.0, 5.0, 3.0, 2.0, 1.0].iter().map(|a| a / 20.0).collect();
        Self::new(m, 1.0, 2, n_r, powers, vec![0.8, 0.8, 0.9, 1.5, 2.0]).expect("five-user preset is valid")
    }

    pub fn num_users(&self) -> usize {
        self.powers.len()
    }

    /// `m * n_r` when it is a positive integer (within 1e-9).
    pub fn integer_shape(&self) -> Option<u32> {
        let shape = self.m * self.n_r as f64;
        let rounded = shape.round();
        ((shape - rounded).abs() <= 1e-9 && rounded >= 1.0 && rounded <= f64::from(u32::MAX)).then_some(rounded as u32)
    }

    /// Every constraint violation, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.m.is_finite() && self.m >= 0.5) {
            out.push(format!("Nakagami m must be a finite value >= 0.5, got {}", self.m));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            out.push(format!("omega must be positive, got {}", self.omega));
        }
        if self.n_t < 2 {
            out.push(format!("n_t must be at least 2, got {}", self.n_t));
        }
        if self.n_r < 1 {
            out.push(format!("n_r must be at least 1, got {}", self.n_r));
        }
        let l = self.powers.len();
        if l < 2 {
            out.push(format!("at least two users are required, got {l}"));
        }
        if self.thresholds.len() != l {
            out.push(format!("{} power coefficients but {} thresholds", l, self.thresholds.len()));
        }
        if self.powers.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            out.push("power coefficients must be positive".into());
        }
        let sum: f64 = self.powers.iter().sum();
        if (sum - 1.0).abs() > POWER_SUM_TOL {
            out.push(format!("power coefficients must sum to 1, got {sum}"));
        }
        if self.powers.windows(2).any(|w| w[0] < w[1]) {
            out.push("power coefficients must be non-increasing (a_1 >= a_2 >= ...)".into());
        }
        if self.thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            out.push("SINR thresholds must be positive".into());
        }
        out
    }
}

/// Channel estimation error and feedback delay, with derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentState {
    sigma2_cee: f64,
    fd_tau: f64,
    rho: f64,
    omega_hat: f64,
    sigma2_e: f64,
}

/// Builds the impairment state for `cfg`.
///
/// `rho = J0(2 pi fd_tau)`, `omega_hat = omega - sigma2_cee` and the total
/// error variance is `sigma2_cee + (1 - rho^2) omega_hat`.
pub fn derive_impairments(cfg: &SystemConfig, sigma2_cee: f64, fd_tau: f64) -> Result<ImpairmentState, ModelError> {
    if !(sigma2_cee.is_finite() && sigma2_cee >= 0.0) {
        return Err(ModelError::InvalidImpairment(format!("estimation error variance must be >= 0, got {sigma2_cee}")));
    }
    if sigma2_cee >= cfg.omega {
        return Err(ModelError::InvalidImpairment(format!(
            "estimation error variance {sigma2_cee} must be below omega {}",
            cfg.omega
        )));
    }
    if !(fd_tau.is_finite() && fd_tau >= 0.0) {
        return Err(ModelError::InvalidImpairment(format!("normalized Doppler must be >= 0, got {fd_tau}")));
    }
    let arg = 2.0 * std::f64::consts::PI * fd_tau;
    if arg >= J0_FIRST_ZERO {
        return Err(ModelError::Math(crate::error::MathError::Domain(format!(
            "normalized Doppler {fd_tau} puts the time correlation at or below zero"
        ))));
    }
    let rho = bessel_j0(arg)?;
    let omega_hat = cfg.omega - sigma2_cee;
    let sigma2_e = sigma2_cee + (1.0 - rho * rho) * omega_hat;
    Ok(ImpairmentState { sigma2_cee, fd_tau, rho, omega_hat, sigma2_e })
}

impl ImpairmentState {
    pub fn ideal(cfg: &SystemConfig) -> Self {
        Self { sigma2_cee: 0.0, fd_tau: 0.0, rho: 1.0, omega_hat: cfg.omega, sigma2_e: 0.0 }
    }

    pub fn sigma2_cee(&self) -> f64 {
        self.sigma2_cee
    }

    pub fn fd_tau(&self) -> f64 {
        self.fd_tau
    }

    /// Time correlation coefficient.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mean-square power of the estimated channel per element.
    pub fn omega_hat(&self) -> f64 {
        self.omega_hat
    }

    /// Total error variance per element.
    pub fn sigma2_e(&self) -> f64 {
        self.sigma2_e
    }

    pub fn is_ideal(&self) -> bool {
        self.sigma2_e == 0.0 && self.rho == 1.0
    }

    /// Noise inflation `beta = sigma2_e * gamma / rho^2 + 1 / rho^2`.
    pub fn beta(&self, gamma: f64) -> f64 {
        let r2 = self.rho * self.rho;
        self.sigma2_e * gamma / r2 + 1.0 / r2
    }
}

/// Free-function form of [`ImpairmentState::beta`].
pub fn beta_of_snr(imp: &ImpairmentState, gamma: f64) -> f64 {
    imp.beta(gamma)
}

/// One channel realization: `gains[l][i]` is user `l`'s combined gain from
/// transmit antenna `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    users: usize,
    antennas: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn zeros(users: usize, antennas: usize) -> Self {
        Self { users, antennas, data: vec![0.0; users * antennas] }
    }

    /// Builds a matrix from per-user rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ModelError> {
        let users = rows.len();
        let antennas = rows.first().map_or(0, |r| r.as_ref().len());
        if users == 0 || antennas == 0 {
            return Err(ModelError::Contract("gain matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(users * antennas);
        for row in rows {
            let row = row.as_ref();
            if row.len() != antennas {
                return Err(ModelError::Contract("gain matrix rows differ in length".into()));
            }
            if row.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(ModelError::Contract("gains must be finite and non-negative".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { users, antennas, data })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn get(&self, user: usize, antenna: usize) -> f64 {
        self.data[user * self.antennas + antenna]
    }

    #[inline]
    pub fn row(&self, user: usize) -> &[f64] {
        &self.data[user * self.antennas..(user + 1) * self.antennas]
    }

    pub fn column(&self, antenna: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.users).map(move |l| self.get(l, antenna))
    }

    /// Multiplies every gain by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { data: self.data.iter().map(|g| g * c).collect(), ..self.clone() }
    }

    fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Gamma variate generator, fixed shape and scale.
///
/// Integer shapes up to [`GammaSampler::MAX_EXP_SUM`] sum exponentials;
/// everything else uses Marsaglia-Tsang (with the `U^{1/a}` boost below
/// shape one).
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    scale: f64,
    method: GammaMethod,
}

#[derive(Debug, Clone, Copy)]
enum GammaMethod {
    ExpSum(u32),
    MarsagliaTsang { d: f64, c: f64, boost: Option<f64> },
}

impl GammaSampler {
    pub const MAX_EXP_SUM: u32 = 16;

    pub fn new(shape: f64, scale: f64) -> Result<Self, ModelError> {
        if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(ModelError::Contract(format!(
                "gamma shape and scale must be positive, got ({shape}, {scale})"
            )));
        }
        let rounded = shape.round();
        let method = if shape == rounded && rounded <= f64::from(Self::MAX_EXP_SUM) {
            GammaMethod::ExpSum(rounded as u32)
        } else {
            let (base, boost) = if shape < 1.0 { (shape + 1.0, Some(1.0 / shape)) } else { (shape, None) };
            let d = base - 1.0 / 3.0;
            GammaMethod::MarsagliaTsang { d, c: 1.0 / (9.0 * d).sqrt(), boost }
        };
        Ok(Self { scale, method })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = match self.method {
            GammaMethod::ExpSum(k) => (0..k).map(|_| rng.sample::<f64, _>(Exp1)).sum(),
            GammaMethod::MarsagliaTsang { d, c, boost } => {
                let g = marsaglia_tsang(d, c, rng);
                match boost {
                    Some(inv_shape) => g * rng.sample::<f64, _>(Open01).powf(inv_shape),
                    None => g,
                }
            }
        };
        unit * self.scale
    }
}

fn marsaglia_tsang<R: Rng + ?Sized>(d: f64, c: f64, rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One Gamma(shape, scale) draw.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64, ModelError> {
    Ok(GammaSampler::new(shape, scale)?.sample(rng))
}

/// Sampler for the per-entry gain distribution `Gamma(m n_r, omega_hat / m)`.
pub fn gain_sampler(cfg: &SystemConfig, imp: &ImpairmentState) -> Result<GammaSampler, ModelError> {
    GammaSampler::new(cfg.m * cfg.n_r as f64, imp.omega_hat() / cfg.m)
}

/// Overwrites `gains` with fresh i.i.d. draws.
#[inline]
pub fn fill_gain_matrix<R: Rng + ?Sized>(gains: &mut GainMatrix, sampler: &GammaSampler, rng: &mut R) {
    for g in gains.as_mut_slice() {
        *g = sampler.sample(rng);
    }
}

/// A fresh `L x N_t` matrix of i.i.d. estimated-channel gains.
pub fn sample_gain_matrix<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    imp: &ImpairmentState,
    rng: &mut R,
) -> Result<GainMatrix, ModelError> {
    let sampler = gain_sampler(cfg, imp)?;
    let mut gains = GainMatrix::zeros(cfg.num_users(), cfg.n_t);
    fill_gain_matrix(&mut gains, &sampler, rng);
    Ok(gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::special_math::regularized_lower_gamma;
    use crate::stats::ks_distance;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn ideal_state() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let imp = derive_impairments(&cfg, 0.0, 0.0).unwrap();
        assert_eq!(imp.rho(), 1.0);
        assert_eq!(imp.omega_hat(), 1.0);
        assert_eq!(imp.sigma2_e(), 0.0);
        assert!(imp.is_ideal());
        for g in [1e-3, 1.0, 1e3, 1e9] {
            assert_eq!(imp.beta(g), 1.0);
        }
        assert_eq!(imp, ImpairmentState::ideal(&cfg));
    }

    #[test]
    fn impaired_states() {
        let cfg = SystemConfig::three_user(1.0, 1);
        // rho = J0(2 pi 0.01); sigma2_e from mpmath at 50 digits
        let imp = derive_impairments(&cfg, 0.01, 0.01).unwrap();
        assert!((imp.rho() - 0.999_013_283_055_915).abs() < 1e-14);
        assert!((imp.omega_hat() - 0.99).abs() < 1e-15);
        assert!((imp.sigma2_e() - 0.011_952_735_675_063_752).abs() < 1e-14);
        assert!((imp.beta(100.0) - 2.199_612_215_227_568).abs() < 1e-12);

        let fig2 = derive_impairments(&cfg, 0.001, 0.01).unwrap();
        assert!((fig2.omega_hat() - 0.999).abs() < 1e-15);
        assert!((fig2.sigma2_e() - 0.002_970_487_817_564_331_5).abs() < 1e-14);
        assert!(imp.beta(100.0) > imp.beta(10.0));
    }

    #[test]
    fn impairment_errors() {
        let cfg = SystemConfig::three_user(1.0, 1);
        assert!(matches!(derive_impairments(&cfg, 1.0, 0.0), Err(ModelError::InvalidImpairment(_))));
        assert!(matches!(derive_impairments(&cfg, -0.1, 0.0), Err(ModelError::InvalidImpairment(_))));
        assert!(matches!(derive_impairments(&cfg, 0.0, 0.4), Err(ModelError::Math(_))));
        assert!(derive_impairments(&cfg, 0.0, 0.38).is_ok());
    }

    #[test]
    fn error_variance_grows_with_both_impairments() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.005).collect();
        for &cee in &grid {
            let mut last = -1.0;
            for &fd in &grid {
                let s = derive_impairments(&cfg, cee / 2.0, fd).unwrap().sigma2_e();
                assert!(s >= last);
                last = s;
            }
        }
        for &fd in &grid {
            let mut last = -1.0;
            for &cee in &grid {
                let s = derive_impairments(&cfg, cee / 2.0, fd).unwrap().sigma2_e();
                assert!(s >= last);
                last = s;
            }
        }
    }

    #[test]
    fn config_validation_reports_everything() {
        let err = SystemConfig::new(0.2, 1.0, 1, 1, vec![0.5, 0.4, 0.2], vec![1.0, 1.0]).unwrap_err();
        let ModelError::InvalidConfig(problems) = err else { panic!("wrong error") };
        assert!(problems.len() >= 4, "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("sum to 1")));
        let inc = SystemConfig::new(1.0, 1.0, 2, 1, vec![0.3, 0.7], vec![1.0, 1.0]).unwrap_err();
        assert!(inc.to_string().contains("non-increasing"));
    }

    #[test]
    fn integer_shape_detection() {
        assert_eq!(SystemConfig::three_user(1.0, 2).integer_shape(), Some(2));
        assert_eq!(SystemConfig::three_user(1.5, 2).integer_shape(), Some(3));
        assert_eq!(SystemConfig::three_user(1.5, 1).integer_shape(), None);
    }

    #[test]
    fn exponential_mean() {
        let mut rng = substream(1, 0, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(1.0, 1.0, &mut rng).unwrap()).collect();
        let (mean, _) = moments(&xs);
        assert!((0.997..=1.003).contains(&mean), "mean {mean}");
    }

    #[test]
    fn gamma_variance() {
        let mut rng = substream(2, 0, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(2.0, 0.5, &mut rng).unwrap()).collect();
        let (mean, var) = moments(&xs);
        assert!((mean - 1.0).abs() < 0.005);
        assert!((var / 0.5 - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn non_integer_shapes_use_rejection_sampler() {
        for (i, &(shape, scale)) in [(0.7, 2.0), (1.5, 1.0 / 1.5), (3.25, 0.2), (40.0, 0.025)].iter().enumerate() {
            let mut rng = substream(3, i as u64, 0);
            let xs: Vec<f64> = (0..400_000).map(|_| sample_gamma(shape, scale, &mut rng).unwrap()).collect();
            let (mean, var) = moments(&xs);
            assert!((mean / (shape * scale) - 1.0).abs() < 0.01, "shape {shape}: mean {mean}");
            assert!((var / (shape * scale * scale) - 1.0).abs() < 0.02, "shape {shape}: var {var}");
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let draw = || {
            let mut rng = substream(99, 1, 2);
            (0..16).map(|_| sample_gamma(2.5, 1.0, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    fn gain_draws(cfg: &SystemConfig, n: usize, seed: u64) -> Vec<GainMatrix> {
        let imp = ImpairmentState::ideal(cfg);
        (0..n).map(|t| sample_gain_matrix(cfg, &imp, &mut substream(seed, 0, t as u64)).unwrap()).collect()
    }

    #[test]
    fn rayleigh_single_branch_marginal_is_exponential() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let mut xs: Vec<f64> =
            gain_draws(&cfg, 1_000_000 / 6 + 1, 5).iter().flat_map(|g| g.data.clone()).take(1_000_000).collect();
        xs.sort_by(f64::total_cmp);
        let d = ks_distance(&xs, |x| 1.0 - (-x).exp());
        assert!(d <= 0.002, "KS {d}");
    }

    #[test]
    fn two_branch_mean() {
        let cfg = SystemConfig::three_user(1.0, 2);
        let xs: Vec<f64> = gain_draws(&cfg, 200_000, 6).iter().flat_map(|g| g.data.clone()).collect();
        let (mean, _) = moments(&xs);
        assert!((mean / 2.0 - 1.0).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn marginal_matches_gamma_cdf_for_integer_m() {
        for (m, n_r) in [(2.0, 1usize), (2.0, 2), (3.0, 1)] {
            let cfg = SystemConfig::three_user(m, n_r);
            let shape = cfg.integer_shape().unwrap();
            let mut xs: Vec<f64> =
                gain_draws(&cfg, 1_000_000 / 6 + 1, 7).iter().flat_map(|g| g.data.clone()).take(1_000_000).collect();
            xs.sort_by(f64::total_cmp);
            let d = ks_distance(&xs, |x| regularized_lower_gamma(shape, m * x).unwrap());
            assert!(d <= 3.0 * 1.36 / 1000.0, "m={m} n_r={n_r}: KS {d}");
        }
    }

    #[test]
    fn entries_are_uncorrelated() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let draws = gain_draws(&cfg, 1_000_000, 8);
        let pairs = [((0, 0), (0, 1)), ((0, 0), (1, 0)), ((1, 1), (2, 0))];
        for ((la, ia), (lb, ib)) in pairs {
            let a: Vec<f64> = draws.iter().map(|g| g.get(la, ia)).collect();
            let b: Vec<f64> = draws.iter().map(|g| g.get(lb, ib)).collect();
            let (ma, va) = moments(&a);
            let (mb, vb) = moments(&b);
            let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
            let corr = cov / (va * vb).sqrt();
            assert!(corr.abs() <= 0.01, "corr {corr}");
        }
    }
}
