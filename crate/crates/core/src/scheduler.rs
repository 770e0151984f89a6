//! Per-frame user selection.
//!
//! Each scheduler sees only a population snapshot (`u0` and `α` per user)
//! and returns the chosen user with its link design. Schedulers are pure:
//! no randomness, no shared state.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::LinkDesign;
use crate::optimizer::{fixed_length_design, solve_operating_point, OptimalityInputs, SolverOptions};

/// Lengths scanned when the fixed-point solver cannot be used.
pub const FALLBACK_MAX_LENGTH: usize = 200;

/// What the base station knows about one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: u64,
    pub u0: f64,
    pub alpha: f64,
}

/// A nonempty set of users sharing one transmit power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    users: Vec<UserState>,
    power: f64,
}

impl Population {
    pub fn new(users: Vec<UserState>, power: f64) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::Config("population must contain at least one user".into()));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "power",
                value: power,
                expected: "finite power > 0",
            });
        }
        let mut seen = HashSet::with_capacity(users.len());
        for u in &users {
            if !seen.insert(u.id) {
                return Err(Error::Config(format!("duplicate user id {}", u.id)));
            }
            if !(u.u0 >= 0.0 && u.u0.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "u0",
                    value: u.u0,
                    expected: "finite u0 >= 0",
                });
            }
            if !(u.alpha > 0.0 && u.alpha < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    value: u.alpha,
                    expected: "0 < alpha < 1",
                });
            }
        }
        Ok(Self { users, power })
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&UserState> {
        self.users.iter().find(|u| u.id == id)
    }
}

/// Selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Strongest user, common fixed codeword length.
    I,
    /// Strongest user, rate and length optimized for that user.
    II,
    /// Most correlated user above a gain threshold, adaptive design.
    III,
    /// User with the largest optimized throughput.
    Optimal,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::I, Strategy::II, Strategy::III, Strategy::Optimal];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::I => "I",
            Strategy::II => "II",
            Strategy::III => "III",
            Strategy::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Some(Strategy::I),
            "ii" | "2" => Some(Strategy::II),
            "iii" | "3" => Some(Strategy::III),
            "optimal" | "opt" => Some(Strategy::Optimal),
            _ => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Result of one scheduling decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleOutcome {
    pub chosen_id: u64,
    /// `None` when the chosen user supports no positive rate; the frame is
    /// still spent on that user and delivers nothing.
    pub design: Option<LinkDesign>,
    pub strategy: Strategy,
    /// Strategy III only: no user cleared the threshold.
    pub fallback_used: bool,
}

impl ScheduleOutcome {
    /// Model throughput of the design, zero for an idle frame.
    pub fn throughput(&self) -> f64 {
        self.design.map_or(0.0, |d| d.throughput)
    }
}

/// Common codeword length for strategy I:
/// `max(1, round(sqrt(log log log K / E[log(1/α)])))`, and 1 below `K = 16`.
pub fn strategy1_codeword_length(k_users: u64, mean_log_alpha_inv: f64) -> usize {
    if k_users < 16 || mean_log_alpha_inv.is_nan() || mean_log_alpha_inv <= 0.0 {
        return 1;
    }
    let lll = (k_users as f64).ln().ln().ln();
    ((lll / mean_log_alpha_inv).sqrt().round() as usize).max(1)
}

/// Feedback threshold on `u0²` for strategy III:
/// `log K - log log K - log log log K`, floored at `log K / 2`.
pub fn strategy3_threshold(k_users: u64) -> f64 {
    let lk = (k_users.max(1) as f64).ln();
    if k_users < 16 {
        return 0.5 * lk;
    }
    let theta = lk - lk.ln() - lk.ln().ln();
    theta.max(0.5 * lk)
}

fn by_gain(a: &UserState, b: &UserState) -> Ordering {
    a.u0.total_cmp(&b.u0).then_with(|| b.id.cmp(&a.id))
}

fn by_correlation(a: &UserState, b: &UserState) -> Ordering {
    a.alpha.total_cmp(&b.alpha).then_with(|| b.id.cmp(&a.id))
}

fn strongest<'a>(users: impl Iterator<Item = &'a UserState>) -> Option<&'a UserState> {
    users.max_by(|a, b| by_gain(a, b))
}

/// Rate adapted to a fixed length; `None` if no positive rate exists.
pub fn fixed_length_user_design(user: &UserState, power: f64, length: usize) -> Option<LinkDesign> {
    let inputs = OptimalityInputs::new(user.u0, user.alpha, power).ok()?;
    fixed_length_design(&inputs, length, &SolverOptions::default()).ok().flatten()
}

fn scan_lengths(inputs: &OptimalityInputs) -> Option<LinkDesign> {
    let opts = SolverOptions::default();
    let mut best: Option<LinkDesign> = None;
    for n in 1..=FALLBACK_MAX_LENGTH {
        if let Ok(Some(d)) = fixed_length_design(inputs, n, &opts) {
            if best.is_none_or(|b| d.throughput > b.throughput) {
                best = Some(d);
            }
        }
    }
    best
}

/// Jointly optimized integer-length design; `None` if no positive rate exists.
///
/// Users outside the solver's regime, or on which it fails to converge,
/// are served by the best fixed-length design over `N = 1..=200`.
pub fn adaptive_user_design(user: &UserState, power: f64) -> Option<LinkDesign> {
    let inputs = OptimalityInputs::new(user.u0, user.alpha, power).ok()?;
    match solve_operating_point(&inputs) {
        Ok(op) => Some(op.rounded),
        Err(Error::NoPositiveRate) => None,
        Err(_) => scan_lengths(&inputs),
    }
}

/// Strategy I: strongest user, common length `fixed_n`.
pub fn schedule_strategy1(pop: &Population, fixed_n: usize) -> ScheduleOutcome {
    let user = strongest(pop.users().iter()).expect("population is nonempty");
    ScheduleOutcome {
        chosen_id: user.id,
        design: fixed_length_user_design(user, pop.power(), fixed_n.max(1)),
        strategy: Strategy::I,
        fallback_used: false,
    }
}

/// Strategy II: strongest user, adaptive design.
pub fn schedule_strategy2(pop: &Population) -> ScheduleOutcome {
    let user = strongest(pop.users().iter()).expect("population is nonempty");
    ScheduleOutcome {
        chosen_id: user.id,
        design: adaptive_user_design(user, pop.power()),
        strategy: Strategy::II,
        fallback_used: false,
    }
}

/// Strategy III: among users with `u0² >= theta`, the most correlated one;
/// strategy II when nobody qualifies.
pub fn schedule_strategy3(pop: &Population, theta: f64) -> ScheduleOutcome {
    let chosen = pop
        .users()
        .iter()
        .filter(|u| u.u0 * u.u0 >= theta)
        .max_by(|a, b| by_correlation(a, b));
    match chosen {
        Some(user) => ScheduleOutcome {
            chosen_id: user.id,
            design: adaptive_user_design(user, pop.power()),
            strategy: Strategy::III,
            fallback_used: false,
        },
        None => ScheduleOutcome {
            strategy: Strategy::III,
            fallback_used: true,
            ..schedule_strategy2(pop)
        },
    }
}

/// Reference rule: the user whose adaptive design has the largest throughput.
///
/// Users are visited in order of the rate ceiling `log(P u0²) + 2 log α`,
/// which bounds every design's throughput, and the scan stops once the
/// ceiling drops below the best value found.
pub fn schedule_optimal(pop: &Population) -> ScheduleOutcome {
    let power = pop.power();
    let ceiling = |u: &UserState| (power * u.u0 * u.u0).ln() + 2.0 * u.alpha.ln();
    let mut order: Vec<(f64, &UserState)> = pop.users().iter().map(|u| (ceiling(u), u)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));

    let mut best: Option<(f64, u64, Option<LinkDesign>)> = None;
    for (ub, user) in order {
        if let Some((t, _, _)) = best {
            if ub < t {
                break;
            }
        }
        let design = adaptive_user_design(user, power);
        let t = design.map_or(0.0, |d| d.throughput);
        let better = match best {
            None => true,
            Some((bt, bid, _)) => t > bt || (t == bt && user.id < bid),
        };
        if better {
            best = Some((t, user.id, design));
        }
    }
    let (_, chosen_id, design) = best.expect("population is nonempty");
    ScheduleOutcome {
        chosen_id,
        design,
        strategy: Strategy::Optimal,
        fallback_used: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use proptest::strategy::Strategy as _;

    fn user(id: u64, u0sq: f64, alpha: f64) -> UserState {
        UserState {
            id,
            u0: u0sq.sqrt(),
            alpha,
        }
    }

    fn pop(users: Vec<UserState>) -> Population {
        Population::new(users, 1.0).unwrap()
    }

    #[test]
    fn population_validation() {
        assert!(Population::new(vec![], 1.0).is_err());
        assert!(Population::new(vec![user(1, 4.0, 0.5), user(1, 9.0, 0.5)], 1.0).is_err());
        assert!(Population::new(vec![user(1, 4.0, 1.0)], 1.0).is_err());
        assert!(Population::new(vec![user(1, 4.0, 0.5)], 0.0).is_err());
    }

    #[test]
    fn strategy1_length_formula() {
        let k = (1f64.exp().exp().exp()).ceil() as u64;
        assert_eq!(strategy1_codeword_length(k, 1.0), 1);
        // sqrt(log log log 1e6) = sqrt(0.9666) rounds to 1.
        assert_eq!(strategy1_codeword_length(1_000_000, 1.0), 1);
        assert_eq!(strategy1_codeword_length(10, 1.0), 1);
        assert_eq!(strategy1_codeword_length(1_000_000, 0.01), 10);
        let mut prev = 0;
        for e in 2..19 {
            let n = strategy1_codeword_length(10u64.pow(e), 0.05);
            assert!(n >= prev);
            prev = n;
        }
        assert!(strategy1_codeword_length(10u64.pow(9), 0.01) >= strategy1_codeword_length(10u64.pow(9), 0.1));
    }

    #[test]
    fn threshold_values() {
        let lk = 1e6f64.ln();
        let want = lk - lk.ln() - lk.ln().ln();
        assert!((strategy3_threshold(1_000_000) - want).abs() < 1e-12);
        assert!((strategy3_threshold(1_000_000) - 10.224).abs() < 1e-3);
        for k in [16u64, 100, 1000, 1_000_000, 1_000_000_000] {
            assert!(strategy3_threshold(k) < (k as f64).ln());
        }
        let ratios: Vec<f64> = [1e3, 1e6, 1e9]
            .iter()
            .map(|&k: &f64| strategy3_threshold(k as u64) / k.ln())
            .collect();
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);
    }

    #[test]
    fn single_user_is_chosen() {
        let p = pop(vec![user(7, 100.0, 0.9)]);
        assert_eq!(schedule_strategy1(&p, 3).chosen_id, 7);
        assert_eq!(schedule_strategy2(&p).chosen_id, 7);
        assert_eq!(schedule_strategy3(&p, 1.0).chosen_id, 7);
        assert_eq!(schedule_optimal(&p).chosen_id, 7);
    }

    #[test]
    fn strongest_user_ignores_alpha() {
        let p = pop(vec![user(1, 25.0, 0.5), user(2, 16.0, 0.999)]);
        assert_eq!(schedule_strategy1(&p, 2).chosen_id, 1);
        assert_eq!(schedule_strategy2(&p).chosen_id, 1);
    }

    #[test]
    fn strategy2_delegates_to_solver() {
        let u = user(3, 1e4, 0.9);
        let p = pop(vec![u]);
        let op = solve_operating_point(&OptimalityInputs::new(u.u0, u.alpha, 1.0).unwrap()).unwrap();
        assert_eq!(schedule_strategy2(&p).design, Some(op.rounded));
    }

    #[test]
    fn threshold_rule_prefers_correlation() {
        let p = pop(vec![user(1, 12.0, 0.3), user(2, 11.0, 0.95)]);
        let out = schedule_strategy3(&p, 10.0);
        assert_eq!(out.chosen_id, 2);
        assert!(!out.fallback_used);
    }

    #[test]
    fn empty_threshold_set_falls_back() {
        let p = pop(vec![user(1, 12.0, 0.3), user(2, 11.0, 0.95)]);
        let out = schedule_strategy3(&p, 50.0);
        let s2 = schedule_strategy2(&p);
        assert!(out.fallback_used);
        assert_eq!(out.chosen_id, s2.chosen_id);
        assert_eq!(out.design, s2.design);
    }

    #[test]
    fn zero_threshold_is_pure_correlation_rule() {
        let p = pop(vec![user(1, 0.0, 0.3), user(2, 0.01, 0.97), user(3, 50.0, 0.6)]);
        assert_eq!(schedule_strategy3(&p, 0.0).chosen_id, 2);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let p = pop(vec![user(5, 100.0, 0.9), user(2, 100.0, 0.9), user(9, 100.0, 0.9)]);
        assert_eq!(schedule_strategy1(&p, 1).chosen_id, 2);
        assert_eq!(schedule_strategy3(&p, 1.0).chosen_id, 2);
        assert_eq!(schedule_optimal(&p).chosen_id, 2);
    }

    #[test]
    fn dead_user_occupies_frame() {
        let p = pop(vec![user(4, 0.5, 0.2)]);
        let out = schedule_strategy2(&p);
        assert_eq!(out.chosen_id, 4);
        assert_eq!(out.design, None);
        assert_eq!(out.throughput(), 0.0);
        assert_eq!(schedule_strategy1(&p, 1).throughput(), 0.0);
    }

    #[test]
    fn optimal_reference_matches_exhaustive_scan() {
        let users: Vec<UserState> = (0..40)
            .map(|i| {
                let x = i as f64;
                user(i, 1.0 + (x * 7.3) % 30.0, 0.3 + 0.69 * ((x * 0.618) % 1.0))
            })
            .collect();
        let p = pop(users.clone());
        let out = schedule_optimal(&p);
        let best = users
            .iter()
            .map(|u| adaptive_user_design(u, 1.0).map_or(0.0, |d| d.throughput))
            .fold(0.0, f64::max);
        assert_eq!(out.throughput(), best);
        assert!(out.throughput() >= schedule_strategy2(&p).throughput());
        assert!(out.throughput() >= schedule_strategy3(&p, 3.0).throughput());
    }

    fn population_strategy() -> impl proptest::strategy::Strategy<Value = Vec<UserState>> {
        prop::collection::vec((0.0f64..8.0, 0.05f64..0.999), 1..12).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (lg, a))| UserState {
                    id: i as u64,
                    u0: (lg.exp() - 1.0).sqrt(),
                    alpha: a,
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn permutation_invariance(users in population_strategy(), seed in any::<u64>()) {
            let a = pop(users.clone());
            let mut shuffled = users;
            let len = shuffled.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = pop(shuffled);
            prop_assert_eq!(schedule_strategy1(&a, 2), schedule_strategy1(&b, 2));
            prop_assert_eq!(schedule_strategy2(&a), schedule_strategy2(&b));
            prop_assert_eq!(schedule_strategy3(&a, 4.0), schedule_strategy3(&b, 4.0));
            prop_assert_eq!(schedule_optimal(&a), schedule_optimal(&b));
        }

        #[test]
        fn adaptive_never_loses_to_fixed(users in population_strategy(), n in 1usize..50) {
            let p = pop(users);
            let s1 = schedule_strategy1(&p, n);
            let s2 = schedule_strategy2(&p);
            prop_assert_eq!(s1.chosen_id, s2.chosen_id);
            prop_assert!(s2.throughput() >= s1.throughput() - 1e-12,
                "{} < {}", s2.throughput(), s1.throughput());
        }

        #[test]
        fn common_scaling_keeps_choice(users in population_strategy(), c in 0.1f64..10.0) {
            let a = pop(users.clone());
            let b = pop(users.into_iter().map(|u| UserState { u0: u.u0 * c, ..u }).collect());
            prop_assert_eq!(schedule_strategy1(&a, 3).chosen_id, schedule_strategy1(&b, 3).chosen_id);
        }
    }
}
