//! Side-payments between players and taxes imposed by a principal.

use crate::boost::{instantiate, punishment_of, Boosts};
use crate::error::GameError;
use crate::game::{BudgetConstraints, GoalAssignment, StrategicGame};

/// Outcome-contingent payments: `pay(giver, profile, receiver) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    n: usize,
    profiles: usize,
    // pay[(giver * profiles + profile) * n + receiver]
    pay: Vec<f64>,
}

impl TransferFunction {
    /// The zero transfer `τ⁰`.
    pub fn zero(game: &StrategicGame) -> Self {
        Self::zero_for(game.num_players(), game.num_profiles())
    }

    pub fn zero_for(players: usize, profiles: usize) -> Self {
        Self {
            n: players,
            profiles,
            pay: vec![0.0; players * profiles * players],
        }
    }

    pub fn num_players(&self) -> usize {
        self.n
    }

    pub fn num_profiles(&self) -> usize {
        self.profiles
    }

    fn slot(&self, giver: usize, profile: usize, receiver: usize) -> usize {
        (giver * self.profiles + profile) * self.n + receiver
    }

    fn check(
        &self,
        giver: usize,
        profile: usize,
        receiver: usize,
        amount: f64,
    ) -> Result<(), GameError> {
        for p in [giver, receiver] {
            if p >= self.n {
                return Err(GameError::PlayerOutOfRange {
                    player: p,
                    players: self.n,
                });
            }
        }
        if profile >= self.profiles {
            return Err(GameError::InvalidProfile(vec![profile]));
        }
        if !amount.is_finite() {
            return Err(GameError::NonFinite(amount));
        }
        if amount < 0.0 {
            return Err(GameError::NegativeAmount(amount));
        }
        if giver == receiver && amount != 0.0 {
            return Err(GameError::SelfTransfer(giver));
        }
        Ok(())
    }

    pub fn get(&self, giver: usize, profile: usize, receiver: usize) -> f64 {
        self.pay[self.slot(giver, profile, receiver)]
    }

    pub fn set(
        &mut self,
        giver: usize,
        profile: usize,
        receiver: usize,
        amount: f64,
    ) -> Result<(), GameError> {
        self.check(giver, profile, receiver, amount)?;
        let k = self.slot(giver, profile, receiver);
        self.pay[k] = amount;
        Ok(())
    }

    pub fn add(
        &mut self,
        giver: usize,
        profile: usize,
        receiver: usize,
        amount: f64,
    ) -> Result<(), GameError> {
        let cur = if giver < self.n && receiver < self.n && profile < self.profiles {
            self.get(giver, profile, receiver)
        } else {
            0.0
        };
        self.set(giver, profile, receiver, cur + amount)
    }

    pub fn is_zero(&self) -> bool {
        self.pay.iter().all(|&x| x == 0.0)
    }

    /// Non-zero entries as `(giver, profile, receiver, amount)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.pay
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(move |(k, &x)| {
                let receiver = k % self.n;
                let rest = k / self.n;
                (rest / self.profiles, rest % self.profiles, receiver, x)
            })
    }

    /// Received minus paid by `player` at `profile`.
    pub fn net(&self, profile: usize, player: usize) -> f64 {
        (0..self.n)
            .map(|j| self.get(j, profile, player) - self.get(player, profile, j))
            .sum()
    }

    /// Keeps `giver`'s payments from `self` and everyone else's from `other`.
    pub fn with_giver_from(&self, giver: usize, other: &TransferFunction) -> TransferFunction {
        let mut out = other.clone();
        let block = self.profiles * self.n;
        out.pay[giver * block..(giver + 1) * block]
            .copy_from_slice(&self.pay[giver * block..(giver + 1) * block]);
        out
    }

    /// Entrywise sum of two transfer functions.
    pub fn combined(&self, other: &TransferFunction) -> Result<TransferFunction, GameError> {
        if self.n != other.n || self.profiles != other.profiles {
            return Err(GameError::ShapeMismatch(
                "transfer functions differ in shape".into(),
            ));
        }
        let mut out = self.clone();
        out.pay
            .iter_mut()
            .zip(&other.pay)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    fn check_game(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.n != game.num_players() || self.profiles != game.num_profiles() {
            return Err(GameError::ShapeMismatch(
                "transfer function does not match the game".into(),
            ));
        }
        Ok(())
    }
}

/// Non-negative sanctions `α_i(σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxationMechanism {
    n: usize,
    profiles: usize,
    // tax[profile * n + player], same layout as payoffs
    tax: Vec<f64>,
}

impl TaxationMechanism {
    pub fn zero(game: &StrategicGame) -> Self {
        Self {
            n: game.num_players(),
            profiles: game.num_profiles(),
            tax: vec![0.0; game.payoffs().len()],
        }
    }

    pub fn num_players(&self) -> usize {
        self.n
    }

    pub fn num_profiles(&self) -> usize {
        self.profiles
    }

    pub fn get(&self, player: usize, profile: usize) -> f64 {
        self.tax[profile * self.n + player]
    }

    pub fn set(&mut self, player: usize, profile: usize, amount: f64) -> Result<(), GameError> {
        if player >= self.n {
            return Err(GameError::PlayerOutOfRange {
                player,
                players: self.n,
            });
        }
        if profile >= self.profiles {
            return Err(GameError::InvalidProfile(vec![profile]));
        }
        if !amount.is_finite() {
            return Err(GameError::NonFinite(amount));
        }
        if amount < 0.0 {
            return Err(GameError::NegativeAmount(amount));
        }
        self.tax[profile * self.n + player] = amount;
        Ok(())
    }

    pub fn add(&mut self, player: usize, profile: usize, amount: f64) -> Result<(), GameError> {
        let cur = if player < self.n && profile < self.profiles {
            self.get(player, profile)
        } else {
            0.0
        };
        self.set(player, profile, cur + amount)
    }

    pub fn is_zero(&self) -> bool {
        self.tax.iter().all(|&x| x == 0.0)
    }

    /// Total tax charged to `player` over all profiles.
    pub fn total(&self, player: usize) -> f64 {
        self.tax.iter().skip(player).step_by(self.n).sum()
    }

    /// Non-zero entries as `(player, profile, amount)` in profile-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.tax
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(move |(k, &x)| (k % self.n, k / self.n, x))
    }

    fn check_game(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.n != game.num_players() || self.profiles != game.num_profiles() {
            return Err(GameError::ShapeMismatch(
                "taxation mechanism does not match the game".into(),
            ));
        }
        Ok(())
    }
}

/// Adds each player's net receipts under `t` to `payoffs` in place.
pub(crate) fn add_net_into(t: &TransferFunction, out: &mut [f64]) {
    let n = t.n;
    let block = t.profiles * n;
    for giver in 0..n {
        let rows = &t.pay[giver * block..(giver + 1) * block];
        for (k, &x) in rows.iter().enumerate() {
            if x != 0.0 {
                let profile = k / n;
                out[profile * n + k % n] += x;
                out[profile * n + giver] -= x;
            }
        }
    }
}

/// The game updated by the play of `t`.
pub fn apply_transfers(
    game: &StrategicGame,
    t: &TransferFunction,
) -> Result<StrategicGame, GameError> {
    t.check_game(game)?;
    let mut out = game.payoffs().to_vec();
    add_net_into(t, &mut out);
    Ok(game.with_payoffs_unchecked(out))
}

pub fn apply_tax(game: &StrategicGame, a: &TaxationMechanism) -> Result<StrategicGame, GameError> {
    a.check_game(game)?;
    let out = game
        .payoffs()
        .iter()
        .zip(&a.tax)
        .map(|(x, t)| x - t)
        .collect();
    Ok(game.with_payoffs_unchecked(out))
}

/// Folds `t` and its budget penalty into the payoffs of `base`.
///
/// The penalty subtracted is `|D|·κ`, the full charge made by the penalized
/// utility, so the zero-transfer utilities of the output agree with the
/// `t`-utilities of the input whenever the boost shifts along with a uniform
/// shift of a player's payoffs (offset boosts with at least one non-goal
/// profile per goal player) or `κ = 0`.
pub fn normalize(
    base: &StrategicGame,
    t: &TransferFunction,
    budgets: &BudgetConstraints,
    goals: &GoalAssignment,
    boosts: &Boosts,
) -> Result<StrategicGame, GameError> {
    t.check_game(base)?;
    goals.check_compatible(base)?;
    boosts.validate(base)?;
    if budgets.bounds().len() != base.payoffs().len() {
        return Err(GameError::ShapeMismatch(
            "budgets do not match the base game".into(),
        ));
    }
    let mut out = base.payoffs().to_vec();
    add_net_into(t, &mut out);
    let charge = punishment_of(&out, budgets.bounds(), base.num_players()).charge();
    if charge != 0.0 {
        out.iter_mut().for_each(|x| *x -= charge);
    }
    Ok(base.with_payoffs_unchecked(out))
}

/// A tax whose taxed game differs from the transferred game by a per-player constant.
///
/// `α_i(σ) = π_i(σ) − π'_i(σ) + K_i` with `K_i = max_σ (π'_i(σ) − π_i(σ))`.
pub fn tax_from_transfers(
    game: &StrategicGame,
    t: &TransferFunction,
) -> Result<TaxationMechanism, GameError> {
    let updated = apply_transfers(game, t)?;
    let n = game.num_players();
    let mut k = vec![f64::NEG_INFINITY; n];
    for (idx, (a, b)) in updated.payoffs().iter().zip(game.payoffs()).enumerate() {
        k[idx % n] = k[idx % n].max(a - b);
    }
    let tax = updated
        .payoffs()
        .iter()
        .zip(game.payoffs())
        .enumerate()
        .map(|(idx, (a, b))| (b - a + k[idx % n]).max(0.0))
        .collect();
    Ok(TaxationMechanism {
        n,
        profiles: game.num_profiles(),
        tax,
    })
}

/// Instantiates after transferring and, separately, transfers after instantiating.
///
/// Returns `(u^{τ(S)}, τ(u^S))`; the two differ in general because the boost
/// is evaluated on different payoffs.
pub fn composition_orders(
    game: &StrategicGame,
    goals: &GoalAssignment,
    boosts: &Boosts,
    t: &TransferFunction,
) -> Result<(StrategicGame, StrategicGame), GameError> {
    let first = instantiate(&apply_transfers(game, t)?, goals, boosts)?;
    let second = apply_transfers(&instantiate(game, goals, boosts)?, t)?;
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::{penalized_utility, BoostSpec};
    use crate::equilibria::pure_ne;
    use crate::fixtures;

    #[test]
    fn zero_transfer_is_identity() {
        let (g, _) = fixtures::fig1();
        assert_eq!(apply_transfers(&g, &TransferFunction::zero(&g)).unwrap(), g);
        assert!(tax_from_transfers(&g, &TransferFunction::zero(&g))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn motivating_transfer() {
        let b = fixtures::motivating_boolean();
        let e = b.to_goal_game();
        let on = b.profile_of(b.parse_valuation("sa=1,sb=1").unwrap());
        let mut t = TransferFunction::zero(&e.game);
        t.set(1, on, 0, 3.0).unwrap();
        let g = apply_transfers(&e.game, &t).unwrap();
        assert_eq!(g.payoff(on, 0), -2.0);
        assert_eq!(g.payoff(on, 1), -5.0);
        let p = penalized_utility(&g, &e.game, &e.goals, &e.boosts, &e.budgets).unwrap();
        assert_eq!(p.punishment.kappa, 0.0);
    }

    #[test]
    fn rejects_bad_entries() {
        let (g, _) = fixtures::fig1();
        let mut t = TransferFunction::zero(&g);
        assert_eq!(t.set(0, 0, 0, 1.0), Err(GameError::SelfTransfer(0)));
        assert_eq!(t.set(0, 0, 1, -1.0), Err(GameError::NegativeAmount(-1.0)));
        assert!(t.set(0, 9, 1, 1.0).is_err());
        assert!(t.set(0, 0, 5, 1.0).is_err());
        let other = StrategicGame::zeros(&[3, 2]).unwrap();
        assert!(apply_transfers(&other, &t).is_err());
        let mut a = TaxationMechanism::zero(&g);
        assert!(a.set(0, 0, -2.0).is_err());
        assert!(apply_tax(&other, &a).is_err());
    }

    #[test]
    fn fig1_tax_example() {
        let (g, _) = fixtures::fig1();
        let dr = g.profile_index(&[1, 1]).unwrap();
        let mut a = TaxationMechanism::zero(&g);
        for p in (0..4).filter(|&p| p != dr) {
            a.set(0, p, 1.0).unwrap();
        }
        let taxed = apply_tax(&g, &a).unwrap();
        let row: Vec<f64> = (0..4).map(|p| taxed.payoff(p, 0)).collect();
        assert_eq!(row, vec![2.0, -1.0, 4.0, 1.0]);
        assert_eq!(a.total(0), 3.0);
    }

    #[test]
    fn tax_and_transfer_commute() {
        let (g, _) = fixtures::fig1();
        let mut t = TransferFunction::zero(&g);
        t.set(0, 2, 1, 2.5).unwrap();
        let mut a = TaxationMechanism::zero(&g);
        a.set(1, 3, 4.0).unwrap();
        let x = apply_transfers(&apply_tax(&g, &a).unwrap(), &t).unwrap();
        let y = apply_tax(&apply_transfers(&g, &t).unwrap(), &a).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn normalize_examples() {
        let (g, goals) = fixtures::fig1();
        let boosts = Boosts::uniform(BoostSpec::offset(1.0).unwrap(), 2);
        let budgets = BudgetConstraints::constant(&g, 10.0);
        let zero = TransferFunction::zero(&g);
        assert_eq!(normalize(&g, &zero, &budgets, &goals, &boosts).unwrap(), g);
        let mut t = TransferFunction::zero(&g);
        t.set(1, 0, 0, 2.0).unwrap();
        assert_eq!(
            normalize(&g, &t, &budgets, &goals, &boosts).unwrap(),
            apply_transfers(&g, &t).unwrap()
        );
    }

    #[test]
    fn motivating_tax_simulation() {
        let b = fixtures::motivating_boolean();
        let e = b.to_goal_game();
        let on = b.profile_of(b.parse_valuation("sa=1,sb=1").unwrap());
        let mut t = TransferFunction::zero(&e.game);
        t.set(1, on, 0, 3.0).unwrap();
        let a = tax_from_transfers(&e.game, &t).unwrap();
        let x = instantiate(&apply_transfers(&e.game, &t).unwrap(), &e.goals, &e.boosts).unwrap();
        let y = instantiate(&apply_tax(&e.game, &a).unwrap(), &e.goals, &e.boosts).unwrap();
        assert_eq!(
            pure_ne(&apply_transfers(&e.game, &t).unwrap()),
            pure_ne(&apply_tax(&e.game, &a).unwrap())
        );
        assert_eq!(pure_ne(&x), pure_ne(&y));
    }

    #[test]
    fn dynamic_asymmetry() {
        let (g, goals, t) = fixtures::asymmetry_instance();
        let boosts = Boosts::uniform(BoostSpec::offset(1.0).unwrap(), 2);
        let (a, b) = composition_orders(&g, &goals, &boosts, &t).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn combined_and_split_application_agree() {
        let (g, _) = fixtures::fig1();
        let mut t1 = TransferFunction::zero(&g);
        t1.set(0, 1, 1, 1.0).unwrap();
        let mut t2 = TransferFunction::zero(&g);
        t2.set(1, 1, 0, 3.0).unwrap();
        t2.set(0, 1, 1, 0.5).unwrap();
        let both = apply_transfers(&g, &t1.combined(&t2).unwrap()).unwrap();
        let split = apply_transfers(&apply_transfers(&g, &t1).unwrap(), &t2).unwrap();
        assert_eq!(both, split);
        assert_eq!(t1.combined(&t2).unwrap().get(0, 1, 1), 1.5);
        let e: Vec<_> = t2.entries().collect();
        assert_eq!(e, vec![(0, 1, 1, 0.5), (1, 1, 0, 3.0)]);
    }
}
