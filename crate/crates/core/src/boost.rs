//! Boost factors and the induced (utility) games they produce.
//!
//! Two families are provided:
//!
//! * **offset** lifts a player's goal payoffs so that the worst goal state sits
//!   `Δ` above the best non-goal state, keeping distances among goal states.
//!   It rises with the non-goal payoffs.
//! * **regret** adds `ε + μ_i`, with `μ_i` the worst effective cost of the
//!   player over all profiles. It rises as the worst outcome gets worse, and
//!   reduces to the classic boolean-game boost when payoffs are negated costs.
//!
//! Both are evaluated on whatever game they are handed, so after a transfer
//! the boost responds to the updated payoffs.

use crate::error::GameError;
use crate::game::{BudgetConstraints, GoalAssignment, StrategicGame};
use crate::TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoostSpec {
    Offset { delta: f64 },
    Regret { epsilon: f64 },
}

impl BoostSpec {
    pub fn offset(delta: f64) -> Result<Self, GameError> {
        Self::Offset { delta }.validated()
    }

    pub fn regret(epsilon: f64) -> Result<Self, GameError> {
        Self::Regret { epsilon }.validated()
    }

    pub fn validated(self) -> Result<Self, GameError> {
        let v = match self {
            BoostSpec::Offset { delta } => delta,
            BoostSpec::Regret { epsilon } => epsilon,
        };
        if v > 0.0 && v.is_finite() {
            Ok(self)
        } else {
            Err(GameError::InvalidBoost(v))
        }
    }
}

/// One boost spec per player.
#[derive(Debug, Clone, PartialEq)]
pub struct Boosts(pub Vec<BoostSpec>);

impl Boosts {
    pub fn uniform(spec: BoostSpec, players: usize) -> Self {
        Boosts(vec![spec; players])
    }

    pub fn get(&self, player: usize) -> BoostSpec {
        self.0[player]
    }

    pub fn validate(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.0.len() != game.num_players() {
            return Err(GameError::PlayerCount {
                expected: game.num_players(),
                got: self.0.len(),
            });
        }
        for s in &self.0 {
            s.validated()?;
        }
        Ok(())
    }
}

/// Affine lift `x ↦ x + lift` that a boost applies to a player's goal payoffs.
#[derive(Debug, Clone, Copy)]
struct Lift(f64);

fn lift_for(
    payoffs: &[f64],
    n: usize,
    player: usize,
    goal: &[bool],
    spec: BoostSpec,
) -> Option<Lift> {
    match spec {
        BoostSpec::Offset { delta } => {
            let mut min_goal = f64::INFINITY;
            let mut max_other = f64::NEG_INFINITY;
            for (k, &g) in goal.iter().enumerate() {
                let x = payoffs[k * n + player];
                if g {
                    min_goal = min_goal.min(x);
                } else {
                    max_other = max_other.max(x);
                }
            }
            if min_goal == f64::INFINITY {
                return None;
            }
            if max_other == f64::NEG_INFINITY {
                max_other = 0.0;
            }
            Some(Lift(max_other - min_goal + delta))
        }
        BoostSpec::Regret { epsilon } => {
            if !goal.iter().any(|&g| g) {
                return None;
            }
            let worst = (0..goal.len())
                .map(|k| -payoffs[k * n + player])
                .fold(f64::NEG_INFINITY, f64::max);
            Some(Lift(epsilon + worst))
        }
    }
}

/// `ω_i(x)` for the given game, goals and boost family.
pub fn boost_value(
    game: &StrategicGame,
    goals: &GoalAssignment,
    spec: BoostSpec,
    player: usize,
    x: f64,
) -> Result<f64, GameError> {
    game.check_player(player)?;
    goals.check_compatible(game)?;
    spec.validated()?;
    if !x.is_finite() {
        return Err(GameError::NonFinite(x));
    }
    let lift = lift_for(
        game.payoffs(),
        game.num_players(),
        player,
        goals.mask(player),
        spec,
    )
    .ok_or(GameError::NoGoals(player))?;
    Ok(x + lift.0)
}

/// Writes the induced utilities of `payoffs` into `out` (same layout).
pub(crate) fn induce_into(
    payoffs: &[f64],
    n: usize,
    goals: &GoalAssignment,
    boosts: &Boosts,
    out: &mut [f64],
) {
    out.copy_from_slice(payoffs);
    for i in 0..n {
        let mask = goals.mask(i);
        if let Some(Lift(l)) = lift_for(payoffs, n, i, mask, boosts.get(i)) {
            for (k, &g) in mask.iter().enumerate() {
                if g {
                    out[k * n + i] += l;
                }
            }
        }
    }
}

/// The induced strategic game `(N, Σ, u)`.
pub fn instantiate(
    game: &StrategicGame,
    goals: &GoalAssignment,
    boosts: &Boosts,
) -> Result<StrategicGame, GameError> {
    goals.check_compatible(game)?;
    boosts.validate(game)?;
    let mut out = vec![0.0; game.payoffs().len()];
    induce_into(game.payoffs(), game.num_players(), goals, boosts, &mut out);
    Ok(game.with_payoffs_unchecked(out))
}

/// Punishment factor `κ` and the set `D` of maximal budget violators.
#[derive(Debug, Clone, PartialEq)]
pub struct Punishment {
    pub kappa: f64,
    pub violators: Vec<usize>,
}

impl Punishment {
    pub fn charge(&self) -> f64 {
        self.violators.len() as f64 * self.kappa
    }
}

pub(crate) fn punishment_of(updated: &[f64], budgets: &[f64], n: usize) -> Punishment {
    let mut kappa = 0.0f64;
    for (&p, &b) in updated.iter().zip(budgets) {
        kappa = kappa.max(p - b);
    }
    if kappa <= TOL {
        return Punishment {
            kappa: 0.0,
            violators: Vec::new(),
        };
    }
    let mut hit = vec![false; n];
    for (k, (&p, &b)) in updated.iter().zip(budgets).enumerate() {
        if (p - b - kappa).abs() <= TOL {
            hit[k % n] = true;
        }
    }
    Punishment {
        kappa,
        violators: (0..n).filter(|&i| hit[i]).collect(),
    }
}

/// `|D|·κ` without building the violator set.
pub(crate) fn charge_of(updated: &[f64], budgets: &[f64], n: usize) -> f64 {
    if n > 64 {
        return punishment_of(updated, budgets, n).charge();
    }
    let mut kappa = 0.0f64;
    for (&p, &b) in updated.iter().zip(budgets) {
        kappa = kappa.max(p - b);
    }
    if kappa <= TOL {
        return 0.0;
    }
    let mut hit = 0u64;
    for (k, (&p, &b)) in updated.iter().zip(budgets).enumerate() {
        if (p - b - kappa).abs() <= TOL {
            hit |= 1 << (k % n);
        }
    }
    hit.count_ones() as f64 * kappa
}

/// Utilities of an updated game under budget constraints declared on `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalized {
    pub game: StrategicGame,
    pub punishment: Punishment,
}

pub fn penalized_utility(
    updated: &StrategicGame,
    base: &StrategicGame,
    goals: &GoalAssignment,
    boosts: &Boosts,
    budgets: &BudgetConstraints,
) -> Result<Penalized, GameError> {
    if !updated.same_shape(base) {
        return Err(GameError::ShapeMismatch(
            "updated game and base game differ in shape".into(),
        ));
    }
    if budgets.bounds().len() != base.payoffs().len() {
        return Err(GameError::ShapeMismatch(
            "budgets do not match the base game".into(),
        ));
    }
    goals.check_compatible(updated)?;
    boosts.validate(updated)?;
    let n = updated.num_players();
    let punishment = punishment_of(updated.payoffs(), budgets.bounds(), n);
    let mut out = vec![0.0; updated.payoffs().len()];
    induce_into(updated.payoffs(), n, goals, boosts, &mut out);
    let charge = punishment.charge();
    if charge != 0.0 {
        out.iter_mut().for_each(|x| *x -= charge);
    }
    Ok(Penalized {
        game: updated.with_payoffs_unchecked(out),
        punishment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig2_offset_values() {
        let (g, goals) = fixtures::fig2_left();
        let off = BoostSpec::offset(3.0).unwrap();
        let col = 1;
        assert_eq!(boost_value(&g, &goals, off, col, -1.0).unwrap(), 0.0);
        assert_eq!(boost_value(&g, &goals, off, col, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn all_goal_player_uses_zero_for_best_non_goal() {
        let g = StrategicGame::from_fn(&[3], |p| vec![p[0] as f64 + 2.0]).unwrap();
        let goals = GoalAssignment::from_indices(&g, &[vec![0, 1, 2]]).unwrap();
        let off = BoostSpec::offset(3.0).unwrap();
        // min payoff is 2, best non-goal defaults to 0
        assert_eq!(
            boost_value(&g, &goals, off, 0, 5.0).unwrap(),
            5.0 - 2.0 + 0.0 + 3.0
        );
    }

    #[test]
    fn boost_value_errors() {
        let (g, goals) = fixtures::fig2_left();
        let off = BoostSpec::offset(3.0).unwrap();
        assert!(matches!(
            boost_value(&g, &goals, off, 0, f64::NAN),
            Err(GameError::NonFinite(_))
        ));
        let empty = GoalAssignment::empty(&g);
        assert_eq!(
            boost_value(&g, &empty, off, 0, 1.0),
            Err(GameError::NoGoals(0))
        );
        assert!(BoostSpec::offset(0.0).is_err());
        assert!(BoostSpec::regret(-1.0).is_err());
    }

    #[test]
    fn fig2_instantiation() {
        let (g, goals) = fixtures::fig2_left();
        let u = instantiate(
            &g,
            &goals,
            &Boosts::uniform(BoostSpec::offset(3.0).unwrap(), 2),
        )
        .unwrap();
        assert_eq!(u.payoffs(), &[-3., -3., 0., -5., -5., 1., 3., 0.]);
    }

    #[test]
    fn empty_goals_leave_payoffs_alone() {
        let (g, _) = fixtures::fig2_left();
        let u = instantiate(
            &g,
            &GoalAssignment::empty(&g),
            &Boosts::uniform(BoostSpec::regret(1.0).unwrap(), 2),
        )
        .unwrap();
        assert_eq!(u, g);
    }

    #[test]
    fn regret_boost_uses_worst_cost() {
        let (g, goals) = fixtures::fig3_cost_game();
        let r = BoostSpec::regret(1.0).unwrap();
        // Row's worst cost is 5, so a goal payoff of -1 lifts to 5.
        assert_eq!(boost_value(&g, &goals, r, 0, -1.0).unwrap(), 5.0);
    }

    #[test]
    fn penalized_single_profile() {
        let base = StrategicGame::from_fn(&[1, 1], |_| vec![0.0, 0.0]).unwrap();
        let updated = base.with_payoffs(vec![4.0, 0.0]).unwrap();
        let budgets = BudgetConstraints::new(&base, vec![1.0, 5.0]).unwrap();
        let goals = GoalAssignment::empty(&base);
        let boosts = Boosts::uniform(BoostSpec::offset(1.0).unwrap(), 2);
        let p = penalized_utility(&updated, &base, &goals, &boosts, &budgets).unwrap();
        assert_eq!(p.punishment.kappa, 3.0);
        assert_eq!(p.punishment.violators, vec![0]);
        assert_eq!(p.game.payoffs(), &[1.0, -3.0]);
    }

    #[test]
    fn penalized_without_excess_is_instantiate() {
        let (g, goals) = fixtures::fig2_left();
        let boosts = Boosts::uniform(BoostSpec::offset(3.0).unwrap(), 2);
        let p = penalized_utility(
            &g,
            &g,
            &goals,
            &boosts,
            &BudgetConstraints::from_payoffs(&g),
        )
        .unwrap();
        assert_eq!(p.punishment.kappa, 0.0);
        assert!(p.punishment.violators.is_empty());
        assert_eq!(p.game, instantiate(&g, &goals, &boosts).unwrap());
    }

    #[test]
    fn penalized_shape_mismatch() {
        let (g, goals) = fixtures::fig2_left();
        let other = StrategicGame::zeros(&[2, 3]).unwrap();
        let boosts = Boosts::uniform(BoostSpec::offset(3.0).unwrap(), 2);
        assert!(matches!(
            penalized_utility(
                &other,
                &g,
                &goals,
                &boosts,
                &BudgetConstraints::from_payoffs(&g)
            ),
            Err(GameError::ShapeMismatch(_))
        ));
    }
}
