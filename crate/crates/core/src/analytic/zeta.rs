//! Mixture coefficients `zeta_(l,q)` of the selected-gain CDFs.
//!
//! For two transmit antennas and three users, the CDF of user `l`'s gain on
//! the majority antenna is a polynomial in the single-link CDF `F`:
//! `F_l(x) = sum_{q=1}^{6} zeta_(l,q) F(x)^q`.
//!
//! Two coefficient sets are provided:
//!
//! * [`ZetaSet::Published`], the closed-form table together with its
//!   derivation ([`derive_zeta_decision_sets`]), which composes per-antenna
//!   order statistics, the dissenting user's minimum, and the 1/4 vs 3/4
//!   decision-set weights.
//! * [`ZetaSet::OrderStatistic`], obtained by conditioning on the vote
//!   pattern: a voter's gain on the winning antenna is the maximum of its two
//!   links (CDF `F^2`), a dissenter's is the minimum (CDF `2F - F^2`), and the
//!   users are independent. The ordered-gain CDFs then follow from the
//!   distribution of the number of users below `x`.
//!
//! The two sets agree for the strongest user. For users 1 and 2 they share
//! the leading (lowest-power) term, hence the diversity order, but differ
//! elsewhere; the Monte Carlo engine tracks the order-statistic set.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::special_math::{poly_power_coefficients, PolyCoeffs};

/// Number of mixture terms, `N_t * L`.
pub const NUM_TERMS: usize = 6;
pub const NUM_USERS: usize = 3;

type RPoly = PolyCoeffs<Rational64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaSet {
    #[default]
    Published,
    OrderStatistic,
}

impl ZetaSet {
    pub fn name(self) -> &'static str {
        match self {
            ZetaSet::Published => "published",
            ZetaSet::OrderStatistic => "order-statistic",
        }
    }
}

impl fmt::Display for ZetaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZetaSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "published" => Ok(ZetaSet::Published),
            "order-statistic" => Ok(ZetaSet::OrderStatistic),
            other => Err(format!("unknown coefficient set `{other}` (expected published or order-statistic)")),
        }
    }
}

/// `F_l(x) = sum_q zeta_q F(x)^q` for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCdf {
    user: usize,
    exact: Vec<Rational64>,
    zeta: Vec<f64>,
    /// `1 - F_l` as a polynomial in the survival `S = 1 - F`; entry `k` is the
    /// coefficient of `S^k`.
    complement: Vec<f64>,
}

impl MixtureCdf {
    /// `zeta[q - 1]` is the coefficient of `F^q`.
    pub fn from_rational(user: usize, exact: Vec<Rational64>) -> Self {
        let to_f64 = |r: &Rational64| *r.numer() as f64 / *r.denom() as f64;
        let zeta = exact.iter().map(to_f64).collect();
        // 1 - sum_q zeta_q (1 - S)^q, expanded exactly
        let mut complement = vec![Rational64::zero(); exact.len() + 1];
        complement[0] = Rational64::one();
        for (qi, z) in exact.iter().enumerate() {
            let q = qi as i64 + 1;
            for k in 0..=q {
                let sign = if k % 2 == 0 { -1 } else { 1 };
                complement[k as usize] += *z * Rational64::from_integer(sign * binomial(q, k));
            }
        }
        let complement = complement.iter().map(to_f64).collect();
        Self { user, exact, zeta, complement }
    }

    /// Zero-based user index.
    pub fn user(&self) -> usize {
        self.user
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn zeta_exact(&self) -> &[Rational64] {
        &self.exact
    }

    /// Smallest power `q` with a non-zero coefficient.
    pub fn leading_power(&self) -> usize {
        self.exact.iter().position(|z| !z.is_zero()).map_or(0, |i| i + 1)
    }

    /// Mixture value at marginal CDF value `f`, clamped to `[0, 1]`.
    pub fn eval(&self, f: f64) -> f64 {
        self.eval_unclamped(f).clamp(0.0, 1.0)
    }

    pub fn eval_unclamped(&self, f: f64) -> f64 {
        self.zeta.iter().rev().fold(0.0, |acc, z| (acc + z) * f)
    }

    /// Mixture value from both tails of the marginal, `f + s = 1`. The upper
    /// half goes through the complement polynomial in `s`, which keeps
    /// values near one monotone.
    pub fn eval_split(&self, f: f64, s: f64) -> f64 {
        if f <= 0.5 {
            self.eval_unclamped(f).clamp(0.0, 1.0)
        } else {
            let tail = self.complement.iter().rev().fold(0.0, |acc, c| acc * s + c);
            (1.0 - tail).clamp(0.0, 1.0)
        }
    }

    pub fn row_sum(&self) -> Rational64 {
        self.exact.iter().copied().sum()
    }
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn published_row(user: usize) -> Option<[Rational64; NUM_TERMS]> {
    let z = Rational64::zero();
    match user {
        0 => Some([r(3, 2), r(3, 2), r(-9, 2), r(15, 4), r(-3, 2), r(1, 4)]),
        1 => Some([z, z, r(3, 1), r(-3, 4), r(-9, 4), r(1, 1)]),
        2 => Some([z, z, z, z, r(3, 2), r(-1, 2)]),
        _ => None,
    }
}

/// The published coefficient table for zero-based `user`.
pub fn zeta_table(user: usize) -> Result<MixtureCdf, ModelError> {
    published_row(user).map(|row| MixtureCdf::from_rational(user, row.to_vec())).ok_or_else(|| {
        ModelError::Unsupported(format!("mixture coefficients exist for users 1..=3 only, got user {}", user + 1))
    })
}

pub fn mixture_cdf(set: ZetaSet, user: usize) -> Result<MixtureCdf, ModelError> {
    match set {
        ZetaSet::Published => zeta_table(user),
        ZetaSet::OrderStatistic => {
            let rows = derive_zeta_order_statistics(NUM_USERS)?;
            rows.into_iter()
                .nth(user)
                .ok_or_else(|| ModelError::Unsupported(format!("no user {} in a three-user network", user + 1)))
        }
    }
}

fn poly(coeffs: &[Rational64]) -> RPoly {
    PolyCoeffs::new(coeffs.to_vec())
}

fn f_power(q: usize) -> RPoly {
    let mut c = vec![Rational64::zero(); q + 1];
    c[q] = Rational64::one();
    poly(&c)
}

fn add(a: &RPoly, b: &RPoly) -> RPoly {
    let n = a.len().max(b.len());
    let get = |p: &RPoly, i: usize| p.coeffs().get(i).copied().unwrap_or_else(Rational64::zero);
    poly(&(0..n).map(|i| get(a, i) + get(b, i)).collect::<Vec<_>>())
}

fn scale(a: &RPoly, k: Rational64) -> RPoly {
    poly(&a.coeffs().iter().map(|c| *c * k).collect::<Vec<_>>())
}

fn one_minus(a: &RPoly) -> RPoly {
    add(&poly(&[Rational64::one()]), &scale(a, r(-1, 1)))
}

fn factorial(n: i64) -> i64 {
    (2..=n).product::<i64>().max(1)
}

fn binomial(n: i64, k: i64) -> i64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Mixture coefficients `q = 1..=degree` from a polynomial in `F` with no
/// constant term.
fn into_zeta(user: usize, p: &RPoly, degree: usize) -> MixtureCdf {
    debug_assert!(p.coeffs().first().is_none_or(|c| c.is_zero()));
    let coeffs: Vec<Rational64> =
        (1..=degree).map(|q| p.coeffs().get(q).copied().unwrap_or_else(Rational64::zero)).collect();
    MixtureCdf::from_rational(user, coeffs)
}

/// CDF polynomial of the `(l - s)`-th smallest of `L - s` i.i.d. gains,
/// with one-based `l`:
/// `Q sum_t (-1)^t / (l - s + t) C(L - l, t) F^{l - s + t}`,
/// `Q = (L - s)! / ((L - l)! (l - s - 1)!)`.
pub fn ordered_cdf_poly(l: i64, s: i64, users: i64) -> RPoly {
    assert!(l - s >= 1 && l <= users, "order statistic out of range");
    let q = r(factorial(users - s), factorial(users - l) * factorial(l - s - 1));
    (0..=users - l).fold(poly(&[Rational64::zero()]), |acc, t| {
        let sign = if t % 2 == 0 { 1 } else { -1 };
        let coeff = q * r(sign * binomial(users - l, t), l - s + t);
        add(&acc, &scale(&f_power((l - s + t) as usize), coeff))
    })
}

/// Rebuilds the published table step by step: per-antenna order statistics,
/// the dissenter's minimum `2F - F^2`, and the decision-set weights
/// `P(s=0) = 1/4`, `P(s=1) = 3/4`.
pub fn derive_zeta_decision_sets() -> [MixtureCdf; NUM_USERS] {
    let users = NUM_USERS as i64;
    let f = f_power(1);
    let f2 = f_power(2);
    // minimum of the dissenting user's two links
    let dissenter_min = add(&scale(&f, r(2, 1)), &scale(&f2, r(-1, 1)));
    let weight_s0 = r(binomial(3, 0), binomial(3, 0) + binomial(3, 1));
    let weight_s1 = r(binomial(3, 1), binomial(3, 0) + binomial(3, 1));
    assert_eq!((weight_s0, weight_s1), (r(1, 4), r(3, 4)));

    let squared = |p: RPoly| poly_power_coefficients(&p, 2);

    // strongest user: both antennas' maxima, times the dissenter when s = 1
    let u3_s0 = squared(ordered_cdf_poly(3, 0, users));
    let u3_s1 = squared(ordered_cdf_poly(3, 1, users)).mul(&dissenter_min);
    // middle user
    let u2_s0 = squared(ordered_cdf_poly(2, 0, users));
    let u2_s1 = squared(ordered_cdf_poly(2, 1, users)).mul(&f);
    // weakest user: the dissenter itself when s = 1
    let u1_s0 = squared(ordered_cdf_poly(1, 0, users));
    let u1_s1 = dissenter_min.clone();

    let mix = |a: &RPoly, b: &RPoly| add(&scale(a, weight_s0), &scale(b, weight_s1));
    [
        into_zeta(0, &mix(&u1_s0, &u1_s1), NUM_TERMS),
        into_zeta(1, &mix(&u2_s0, &u2_s1), NUM_TERMS),
        into_zeta(2, &mix(&u3_s0, &u3_s1), NUM_TERMS),
    ]
}

/// Exact ordered-gain mixture CDFs for two transmit antennas and an odd
/// number of users.
///
/// Given that `k > L/2` users vote for the winning antenna, the selected
/// column holds `k` independent maxima (CDF `F^2`) and `L - k` independent
/// minima (CDF `2F - F^2`). `P(k) = 2 C(L, k) / 2^L`.
pub fn derive_zeta_order_statistics(users: usize) -> Result<Vec<MixtureCdf>, ModelError> {
    if users < 3 || users % 2 == 0 || users > 15 {
        return Err(ModelError::Unsupported(format!(
            "exact majority CDFs need an odd user count in 3..=15, got {users}"
        )));
    }
    let l_users = users as i64;
    let max_cdf = f_power(2);
    let min_cdf = add(&scale(&f_power(1), r(2, 1)), &scale(&f_power(2), r(-1, 1)));
    let mut totals = vec![poly(&[Rational64::zero()]); users];
    for voters in (users / 2 + 1)..=users {
        let weight = r(2 * binomial(l_users, voters as i64), 1 << users);
        let components = std::iter::repeat_n(&max_cdf, voters).chain(std::iter::repeat_n(&min_cdf, users - voters));
        // below[j]: probability (as a polynomial in F) that exactly j of the
        // selected gains are <= x
        let mut below = vec![poly(&[Rational64::one()])];
        for c in components {
            let mut next = vec![poly(&[Rational64::zero()]); below.len() + 1];
            for (j, p) in below.iter().enumerate() {
                next[j] = add(&next[j], &p.mul(&one_minus(c)));
                next[j + 1] = add(&next[j + 1], &p.mul(c));
            }
            below = next;
        }
        for (l, total) in totals.iter_mut().enumerate() {
            // l-th smallest <= x  <=>  at least l + 1 gains <= x
            let at_least = below[l + 1..].iter().fold(poly(&[Rational64::zero()]), |acc, p| add(&acc, p));
            *total = add(total, &scale(&at_least, weight));
        }
    }
    Ok(totals.iter().enumerate().map(|(l, p)| into_zeta(l, p, 2 * users)).collect())
}
