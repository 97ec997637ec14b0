//! Transmit antenna selection for the whole NOMA cluster.
//!
//! All indices are zero-based: user `l` is row `l` of the [`GainMatrix`],
//! antenna `i` is column `i`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::GainMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Each user votes for its best antenna; the most-voted antenna wins.
    Majority,
    /// Max-max-max: the antenna carrying the single largest gain.
    A3,
    /// Max-min-max: the antenna whose weakest user is strongest.
    Aia,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Majority, Scheme::A3, Scheme::Aia];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Majority => "majority",
            Scheme::A3 => "a3",
            Scheme::Aia => "aia",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(Scheme::Majority),
            "a3" => Ok(Scheme::A3),
            "aia" => Ok(Scheme::Aia),
            other => Err(format!("unknown scheme `{other}` (expected majority, a3 or aia)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub antenna: usize,
    /// Per-user best antenna.
    pub votes: Vec<usize>,
    /// Number of users whose vote differs from the chosen antenna.
    pub dissenters: usize,
    /// Gains on the chosen antenna, ascending. Position `l` is user `l`.
    pub ordered_gains: Vec<f64>,
}

/// Best antenna for user `l`; ties go to the lowest index.
pub fn per_user_vote(gains: &GainMatrix, l: usize) -> usize {
    argmax_first(gains.row(l).iter().copied())
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Reusable buffers for allocation-free selection in hot loops.
#[derive(Debug, Default, Clone)]
pub struct SelectionScratch {
    counts: Vec<usize>,
    voter_max: Vec<f64>,
    col_a: Vec<f64>,
    col_b: Vec<f64>,
    /// Ascending gains on the most recently selected antenna.
    pub ordered: Vec<f64>,
}

impl SelectionScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Chosen antenna for `scheme`, leaving the ordered column in
/// `scratch.ordered`.
pub fn select_into(scheme: Scheme, gains: &GainMatrix, scratch: &mut SelectionScratch) -> usize {
    let antenna = match scheme {
        Scheme::Majority => majority_antenna(gains, scratch),
        Scheme::A3 => a3_antenna(gains),
        Scheme::Aia => aia_antenna(gains, scratch),
    };
    scratch.ordered.clear();
    scratch.ordered.extend(gains.column(antenna));
    scratch.ordered.sort_by(f64::total_cmp);
    antenna
}

fn majority_antenna(gains: &GainMatrix, scratch: &mut SelectionScratch) -> usize {
    let n_t = gains.antennas();
    scratch.counts.clear();
    scratch.counts.resize(n_t, 0);
    scratch.voter_max.clear();
    scratch.voter_max.resize(n_t, f64::NEG_INFINITY);
    for l in 0..gains.users() {
        let v = per_user_vote(gains, l);
        scratch.counts[v] += 1;
        scratch.voter_max[v] = scratch.voter_max[v].max(gains.get(l, v));
    }
    // Plurality; ties go to the larger best voter gain, then lowest index.
    let mut best = 0;
    for i in 1..n_t {
        let by_count = scratch.counts[i].cmp(&scratch.counts[best]);
        let wins = match by_count {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => scratch.voter_max[i] > scratch.voter_max[best],
        };
        if wins {
            best = i;
        }
    }
    best
}

fn a3_antenna(gains: &GainMatrix) -> usize {
    argmax_first((0..gains.antennas()).map(|i| gains.column(i).fold(f64::NEG_INFINITY, f64::max)))
}

fn aia_antenna(gains: &GainMatrix, scratch: &mut SelectionScratch) -> usize {
    // Lexicographic on ascending columns: minimum first, then next-smallest.
    let SelectionScratch { col_a, col_b, .. } = scratch;
    let mut best = 0;
    col_a.clear();
    col_a.extend(gains.column(0));
    col_a.sort_by(f64::total_cmp);
    for i in 1..gains.antennas() {
        col_b.clear();
        col_b.extend(gains.column(i));
        col_b.sort_by(f64::total_cmp);
        if lexicographic(col_b, col_a) == Ordering::Greater {
            best = i;
            std::mem::swap(col_a, col_b);
        }
    }
    best
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
}

fn result_for(scheme: Scheme, gains: &GainMatrix) -> SelectionResult {
    let mut scratch = SelectionScratch::new();
    let antenna = select_into(scheme, gains, &mut scratch);
    let votes: Vec<usize> = (0..gains.users()).map(|l| per_user_vote(gains, l)).collect();
    let dissenters = votes.iter().filter(|&&v| v != antenna).count();
    SelectionResult { antenna, votes, dissenters, ordered_gains: scratch.ordered }
}

/// Majority (plurality) vote over per-user best antennas.
pub fn majority_select(gains: &GainMatrix) -> SelectionResult {
    result_for(Scheme::Majority, gains)
}

/// Max-max-max selection.
pub fn a3_select(gains: &GainMatrix) -> SelectionResult {
    result_for(Scheme::A3, gains)
}

/// Max-min-max selection.
pub fn aia_select(gains: &GainMatrix) -> SelectionResult {
    result_for(Scheme::Aia, gains)
}

pub fn select(scheme: Scheme, gains: &GainMatrix) -> SelectionResult {
    result_for(scheme, gains)
}

/// Ascending gains of column `antenna`; entry `l` is user `l`'s gain.
pub fn order_users(gains: &GainMatrix, antenna: usize) -> Vec<f64> {
    let mut col: Vec<f64> = gains.column(antenna).collect();
    col.sort_by(f64::total_cmp);
    col
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_gain_matrix, ImpairmentState, SystemConfig};
    use crate::rng::substream;
    use proptest::prelude::*;

    fn gm(rows: &[[f64; 2]]) -> GainMatrix {
        GainMatrix::from_rows(rows).unwrap()
    }

    /// The three-user, two-antenna decision rules written out case by case.
    ///
    /// Each candidate gain is grouped with the antenna it physically sits on
    /// and the antenna holding the overall maximum wins.
    fn brute_force_three_by_two(g: &GainMatrix) -> usize {
        let votes: Vec<usize> = (0..3).map(|l| if g.get(l, 1) > g.get(l, 0) { 1 } else { 0 }).collect();
        let argmax2 = |first: f64, second: f64| if second > first { 1 } else { 0 };
        if votes.iter().all(|&v| v == votes[0]) {
            let x = (0..3).map(|l| g.get(l, 0)).fold(f64::MIN, f64::max);
            let y = (0..3).map(|l| g.get(l, 1)).fold(f64::MIN, f64::max);
            return argmax2(x, y);
        }
        let ones = votes.iter().filter(|&&v| v == 1).count();
        let dissent_vote = if ones == 1 { 1 } else { 0 };
        let k = votes.iter().position(|&v| v == dissent_vote).unwrap();
        let x = (0..3).filter(|&l| l != k).map(|l| g.get(l, 0)).fold(f64::MIN, f64::max);
        let y = (0..3).filter(|&l| l != k).map(|l| g.get(l, 1)).fold(f64::MIN, f64::max);
        let z = g.get(k, 0).min(g.get(k, 1));
        if dissent_vote == 0 {
            // The dissenter's minimum lies on the second antenna.
            argmax2(x, y.max(z))
        } else {
            argmax2(x.max(z), y)
        }
    }

    #[test]
    fn votes() {
        assert_eq!(per_user_vote(&gm(&[[2.0, 1.0]]), 0), 0);
        assert_eq!(per_user_vote(&gm(&[[1.0, 1.0]]), 0), 0);
        assert_eq!(per_user_vote(&gm(&[[0.3, 0.9]]), 0), 1);
    }

    #[test]
    fn unanimous_vote() {
        let r = majority_select(&gm(&[[3.0, 1.0], [2.0, 0.5], [4.0, 3.0]]));
        assert_eq!(r.votes, vec![0, 0, 0]);
        assert_eq!((r.antenna, r.dissenters), (0, 0));
    }

    #[test]
    fn one_dissenter_loses() {
        let r = majority_select(&gm(&[[0.1, 2.0], [3.0, 1.0], [4.0, 3.0]]));
        assert_eq!(r.votes, vec![1, 0, 0]);
        assert_eq!((r.antenna, r.dissenters), (0, 1));
    }

    #[test]
    fn hand_traced_majority() {
        let g = gm(&[[5.0, 1.0], [4.0, 2.0], [1.0, 6.0]]);
        let r = majority_select(&g);
        assert_eq!(r.votes, vec![0, 0, 1]);
        assert_eq!(r.antenna, 0);
        assert_eq!(r.ordered_gains, vec![1.0, 4.0, 5.0]);
        assert_eq!(brute_force_three_by_two(&g), 0);
    }

    #[test]
    fn a3_examples() {
        assert_eq!(a3_select(&gm(&[[5.0, 1.0], [4.0, 2.0], [1.0, 6.0]])).antenna, 1);
        assert_eq!(a3_select(&gm(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])).antenna, 0);
        assert_eq!(a3_select(&gm(&[[9.0, 1.0], [1.0, 1.0], [1.0, 1.0]])).antenna, 0);
    }

    #[test]
    fn aia_examples() {
        // Minimums tie at 1; next-smallest 4 > 2.
        assert_eq!(aia_select(&gm(&[[5.0, 1.0], [4.0, 2.0], [1.0, 6.0]])).antenna, 0);
        assert_eq!(aia_select(&gm(&[[5.0, 3.0], [4.0, 2.0], [6.0, 1.0]])).antenna, 0);
        assert_eq!(aia_select(&gm(&[[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]])).antenna, 0);
        assert_eq!(aia_select(&gm(&[[1.0, 3.0], [4.0, 2.0], [6.0, 2.5]])).antenna, 1);
    }

    #[test]
    fn ordering_examples() {
        let col = |c: [f64; 3]| GainMatrix::from_rows(&[[c[0]], [c[1]], [c[2]]]).unwrap();
        assert_eq!(order_users(&col([3.0, 1.0, 2.0]), 0), vec![1.0, 2.0, 3.0]);
        assert_eq!(order_users(&col([1.0, 1.0, 1.0]), 0), vec![1.0, 1.0, 1.0]);
        assert_eq!(order_users(&col([0.2, 5.0, 0.9]), 0), vec![0.2, 0.9, 5.0]);
    }

    #[test]
    fn plurality_tie_breaks_on_voter_gain() {
        // Two users, split vote: antenna 1's voter holds the larger gain.
        let r = majority_select(&gm(&[[2.0, 1.0], [0.5, 3.0]]));
        assert_eq!(r.antenna, 1);
        // Three antennas, one vote each: antenna 2's voter is strongest.
        let g = GainMatrix::from_rows(&[[4.0, 1.0, 0.0], [0.0, 5.0, 1.0], [1.0, 0.0, 7.0]]).unwrap();
        assert_eq!(majority_select(&g).antenna, 2);
        // Equal voter maxima fall back to the lowest index.
        assert_eq!(majority_select(&gm(&[[2.0, 1.0], [1.0, 2.0]])).antenna, 0);
    }

    #[test]
    fn majority_matches_case_rules_on_random_matrices() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let imp = ImpairmentState::ideal(&cfg);
        for t in 0..100_000u64 {
            let g = sample_gain_matrix(&cfg, &imp, &mut substream(42, 0, t)).unwrap();
            assert_eq!(majority_select(&g).antenna, brute_force_three_by_two(&g), "{g:?}");
        }
    }

    #[test]
    fn unanimous_decision_set_has_probability_one_quarter() {
        let cfg = SystemConfig::three_user(1.0, 1);
        let imp = ImpairmentState::ideal(&cfg);
        let n = 1_000_000u64;
        let unanimous = (0..n)
            .filter(|&t| {
                let g = sample_gain_matrix(&cfg, &imp, &mut substream(43, 0, t)).unwrap();
                majority_select(&g).dissenters == 0
            })
            .count();
        let freq = unanimous as f64 / n as f64;
        assert!((freq - 0.25).abs() <= 0.005, "P(s=0) = {freq}");
    }

    fn matrix_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (2usize..6, 2usize..4)
            .prop_flat_map(|(l, n_t)| (Just(l), Just(n_t), proptest::collection::vec(0.001f64..10.0, l * n_t)))
    }

    fn build(l: usize, n_t: usize, data: &[f64]) -> GainMatrix {
        let rows: Vec<Vec<f64>> = data.chunks(n_t).map(<[f64]>::to_vec).collect();
        assert_eq!(rows.len(), l);
        GainMatrix::from_rows(&rows).unwrap()
    }

    proptest! {
        #[test]
        fn selection_is_scale_invariant((l, n_t, data) in matrix_strategy(), c in 0.01f64..100.0) {
            let g = build(l, n_t, &data);
            // Powers of two scale exactly, so ties are preserved bit for bit.
            let c = 2f64.powi(c.log2().round() as i32);
            let scaled = g.scaled(c);
            for scheme in Scheme::ALL {
                let a = select(scheme, &g);
                let b = select(scheme, &scaled);
                prop_assert_eq!(a.antenna, b.antenna);
                prop_assert_eq!(&a.votes, &b.votes);
                let scaled_back: Vec<f64> = b.ordered_gains.iter().map(|x| x / c).collect();
                prop_assert_eq!(a.ordered_gains, scaled_back);
            }
        }

        #[test]
        fn majority_ignores_user_order((l, n_t, data) in matrix_strategy(), rot in 0usize..6) {
            let g = build(l, n_t, &data);
            let mut rows: Vec<Vec<f64>> = data.chunks(n_t).map(<[f64]>::to_vec).collect();
            rows.rotate_left(rot % l);
            rows.reverse();
            let permuted = GainMatrix::from_rows(&rows).unwrap();
            prop_assert_eq!(majority_select(&g).antenna, majority_select(&permuted).antenna);
            prop_assert_eq!(aia_select(&g).antenna, aia_select(&permuted).antenna);
            prop_assert_eq!(a3_select(&g).antenna, a3_select(&permuted).antenna);
        }

        #[test]
        fn result_invariants((l, n_t, data) in matrix_strategy()) {
            let g = build(l, n_t, &data);
            let r = majority_select(&g);
            let mut counts = vec![0usize; n_t];
            for &v in &r.votes { counts[v] += 1; }
            prop_assert!(counts.iter().all(|&c| c <= counts[r.antenna]));
            prop_assert!(counts[r.antenna] >= l.div_ceil(n_t));
            prop_assert!(r.ordered_gains.windows(2).all(|w| w[0] <= w[1]));
            let mut col: Vec<f64> = g.column(r.antenna).collect();
            col.sort_by(f64::total_cmp);
            prop_assert_eq!(&col, &r.ordered_gains);
            prop_assert_eq!(r.dissenters, l - counts[r.antenna]);
        }
    }
}
