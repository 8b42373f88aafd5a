//! Strategic (normal form) games stored as dense payoff tensors.
//!
//! Profiles are addressed either as strategy tuples or by their flat index.
//! The flat index is mixed-radix with player 0 as the most significant
//! digit, so iterating indices walks profiles in lexicographic order.

use crate::error::GameError;
use crate::TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategicGame {
    labels: Vec<Vec<String>>,
    strides: Vec<usize>,
    num_profiles: usize,
    // payoffs[profile * n + player]
    payoffs: Vec<f64>,
}

impl StrategicGame {
    pub fn new(labels: Vec<Vec<String>>, payoffs: Vec<f64>) -> Result<Self, GameError> {
        if labels.is_empty() {
            return Err(GameError::NoPlayers);
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(GameError::NoStrategies(i));
            }
        }
        let n = labels.len();
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * labels[i + 1].len();
        }
        let num_profiles = strides[0] * labels[0].len();
        if payoffs.len() != num_profiles * n {
            return Err(GameError::PayoffLength {
                got: payoffs.len(),
                expected: num_profiles * n,
            });
        }
        if let Some(&x) = payoffs.iter().find(|x| !x.is_finite()) {
            return Err(GameError::NonFinite(x));
        }
        Ok(Self {
            labels,
            strides,
            num_profiles,
            payoffs,
        })
    }

    /// Game with default labels `s0, s1, ...` and all payoffs zero.
    pub fn zeros(shape: &[usize]) -> Result<Self, GameError> {
        let labels = default_labels(shape);
        let profiles: usize = shape.iter().product();
        Self::new(labels, vec![0.0; profiles * shape.len()])
    }

    /// Builds a game from a per-profile payoff function.
    pub fn from_fn<F>(shape: &[usize], mut f: F) -> Result<Self, GameError>
    where
        F: FnMut(&[usize]) -> Vec<f64>,
    {
        let labels = default_labels(shape);
        let n = shape.len();
        let profiles: usize = shape.iter().product();
        let mut payoffs = Vec::with_capacity(profiles * n);
        let mut g = Self::zeros(shape)?;
        for idx in 0..profiles {
            let p = g.profile(idx);
            let v = f(&p);
            if v.len() != n {
                return Err(GameError::PayoffLength {
                    got: v.len(),
                    expected: n,
                });
            }
            payoffs.extend(v);
        }
        g = Self::new(labels, payoffs)?;
        Ok(g)
    }

    pub fn num_players(&self) -> usize {
        self.labels.len()
    }

    pub fn num_strategies(&self, player: usize) -> usize {
        self.labels[player].len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    pub fn labels(&self, player: usize) -> &[String] {
        &self.labels[player]
    }

    pub fn all_labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn same_shape(&self, other: &StrategicGame) -> bool {
        self.shape() == other.shape()
    }

    pub fn check_player(&self, player: usize) -> Result<(), GameError> {
        if player < self.num_players() {
            Ok(())
        } else {
            Err(GameError::PlayerOutOfRange {
                player,
                players: self.num_players(),
            })
        }
    }

    pub fn profile_index(&self, profile: &[usize]) -> Result<usize, GameError> {
        if profile.len() != self.num_players()
            || profile.iter().zip(&self.labels).any(|(&s, l)| s >= l.len())
        {
            return Err(GameError::InvalidProfile(profile.to_vec()));
        }
        Ok(profile
            .iter()
            .zip(&self.strides)
            .map(|(s, st)| s * st)
            .sum())
    }

    pub fn profile(&self, index: usize) -> Vec<usize> {
        self.labels
            .iter()
            .zip(&self.strides)
            .map(|(l, st)| (index / st) % l.len())
            .collect()
    }

    /// Strategy of `player` in the profile with flat index `index`.
    pub fn strategy_of(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.labels[player].len()
    }

    /// Flat index of the profile obtained from `index` by letting `player` switch to `strategy`.
    pub fn deviate(&self, index: usize, player: usize, strategy: usize) -> usize {
        let cur = self.strategy_of(index, player);
        index - cur * self.strides[player] + strategy * self.strides[player]
    }

    pub fn profile_labels(&self, index: usize) -> Vec<&str> {
        self.profile(index)
            .iter()
            .enumerate()
            .map(|(i, &s)| self.labels[i][s].as_str())
            .collect()
    }

    pub fn payoff(&self, index: usize, player: usize) -> f64 {
        self.payoffs[index * self.num_players() + player]
    }

    pub fn payoff_vec(&self, index: usize) -> &[f64] {
        let n = self.num_players();
        &self.payoffs[index * n..(index + 1) * n]
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn set_payoff(&mut self, index: usize, player: usize, x: f64) -> Result<(), GameError> {
        if !x.is_finite() {
            return Err(GameError::NonFinite(x));
        }
        let n = self.num_players();
        self.payoffs[index * n + player] = x;
        Ok(())
    }

    /// Same players and strategies, different payoff tensor.
    pub fn with_payoffs(&self, payoffs: Vec<f64>) -> Result<Self, GameError> {
        Self::new(self.labels.clone(), payoffs)
    }

    pub(crate) fn with_payoffs_unchecked(&self, payoffs: Vec<f64>) -> Self {
        debug_assert_eq!(payoffs.len(), self.payoffs.len());
        Self {
            labels: self.labels.clone(),
            strides: self.strides.clone(),
            num_profiles: self.num_profiles,
            payoffs,
        }
    }
}

impl StrategicGame {
    /// Subgame keeping only the listed strategies of each player (in the given order).
    ///
    /// Returns the subgame and, for each of its profiles, the original profile index.
    pub fn restrict(&self, kept: &[Vec<usize>]) -> Result<(StrategicGame, Vec<usize>), GameError> {
        if kept.len() != self.num_players() {
            return Err(GameError::PlayerCount {
                expected: self.num_players(),
                got: kept.len(),
            });
        }
        let mut labels = Vec::with_capacity(kept.len());
        for (i, ks) in kept.iter().enumerate() {
            if ks.is_empty() {
                return Err(GameError::NoStrategies(i));
            }
            if let Some(&s) = ks.iter().find(|&&s| s >= self.num_strategies(i)) {
                return Err(GameError::InvalidProfile(vec![s]));
            }
            labels.push(
                ks.iter()
                    .map(|&s| self.labels[i][s].clone())
                    .collect::<Vec<_>>(),
            );
        }
        let shape: Vec<usize> = kept.iter().map(Vec::len).collect();
        let skeleton = StrategicGame::zeros(&shape)?;
        let n = self.num_players();
        let mut map = Vec::with_capacity(skeleton.num_profiles());
        let mut payoffs = Vec::with_capacity(skeleton.num_profiles() * n);
        for idx in 0..skeleton.num_profiles() {
            let p = skeleton.profile(idx);
            let orig: usize = p
                .iter()
                .enumerate()
                .map(|(i, &s)| kept[i][s] * self.strides[i])
                .sum();
            map.push(orig);
            payoffs.extend_from_slice(self.payoff_vec(orig));
        }
        Ok((StrategicGame::new(labels, payoffs)?, map))
    }
}

fn default_labels(shape: &[usize]) -> Vec<Vec<String>> {
    shape
        .iter()
        .map(|&k| (0..k).map(|s| format!("s{s}")).collect())
        .collect()
}

/// Per-player goal profiles `G_i`, stored as membership masks over flat profile indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalAssignment {
    mask: Vec<Vec<bool>>,
}

impl GoalAssignment {
    /// Goals carried over to a subgame, given its profile map from [`StrategicGame::restrict`].
    pub fn restrict(&self, map: &[usize]) -> Self {
        Self {
            mask: self
                .mask
                .iter()
                .map(|m| map.iter().map(|&k| m[k]).collect())
                .collect(),
        }
    }

    pub fn empty(game: &StrategicGame) -> Self {
        Self {
            mask: vec![vec![false; game.num_profiles()]; game.num_players()],
        }
    }

    pub fn from_indices(game: &StrategicGame, goals: &[Vec<usize>]) -> Result<Self, GameError> {
        if goals.len() != game.num_players() {
            return Err(GameError::PlayerCount {
                expected: game.num_players(),
                got: goals.len(),
            });
        }
        let mut g = Self::empty(game);
        for (i, set) in goals.iter().enumerate() {
            for &p in set {
                if p >= game.num_profiles() {
                    return Err(GameError::InvalidProfile(vec![p]));
                }
                g.mask[i][p] = true;
            }
        }
        Ok(g)
    }

    pub fn from_profiles(
        game: &StrategicGame,
        goals: &[Vec<Vec<usize>>],
    ) -> Result<Self, GameError> {
        let idx = goals
            .iter()
            .map(|set| {
                set.iter()
                    .map(|p| game.profile_index(p))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_indices(game, &idx)
    }

    pub fn num_players(&self) -> usize {
        self.mask.len()
    }

    pub fn num_profiles(&self) -> usize {
        self.mask.first().map_or(0, Vec::len)
    }

    pub fn contains(&self, player: usize, profile: usize) -> bool {
        self.mask[player][profile]
    }

    pub fn insert(&mut self, player: usize, profile: usize) {
        self.mask[player][profile] = true;
    }

    pub fn mask(&self, player: usize) -> &[bool] {
        &self.mask[player]
    }

    pub fn goals(&self, player: usize) -> impl Iterator<Item = usize> + '_ {
        self.mask[player]
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| g.then_some(i))
    }

    pub fn has_goals(&self, player: usize) -> bool {
        self.mask[player].iter().any(|&g| g)
    }

    pub fn is_empty(&self) -> bool {
        self.mask.iter().all(|m| m.iter().all(|&g| !g))
    }

    pub fn check_compatible(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.num_players() != game.num_players() || self.num_profiles() != game.num_profiles() {
            return Err(GameError::ShapeMismatch(
                "goal assignment does not match the game".into(),
            ));
        }
        Ok(())
    }
}

/// Per-player, per-profile payoff ceilings `b_i(σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetConstraints {
    bounds: Vec<f64>,
    n: usize,
}

impl BudgetConstraints {
    /// `b_i(σ) = π_i(σ)`: no player may end up with a net gain anywhere.
    pub fn from_payoffs(game: &StrategicGame) -> Self {
        Self {
            bounds: game.payoffs().to_vec(),
            n: game.num_players(),
        }
    }

    /// Constant ceiling for every player and profile.
    pub fn constant(game: &StrategicGame, bound: f64) -> Self {
        Self {
            bounds: vec![bound; game.payoffs().len()],
            n: game.num_players(),
        }
    }

    /// Validates `b_i(σ) ≥ π_i(σ)` on the game the budgets are declared on.
    pub fn new(game: &StrategicGame, bounds: Vec<f64>) -> Result<Self, GameError> {
        if bounds.len() != game.payoffs().len() {
            return Err(GameError::PayoffLength {
                got: bounds.len(),
                expected: game.payoffs().len(),
            });
        }
        let b = Self {
            bounds,
            n: game.num_players(),
        };
        b.check_declared_on(game)?;
        Ok(b)
    }

    pub fn check_declared_on(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.bounds.len() != game.payoffs().len() {
            return Err(GameError::ShapeMismatch(
                "budgets do not match the game".into(),
            ));
        }
        let n = game.num_players();
        for (k, (&b, &p)) in self.bounds.iter().zip(game.payoffs()).enumerate() {
            if !b.is_finite() {
                return Err(GameError::NonFinite(b));
            }
            if b < p - TOL {
                return Err(GameError::BudgetBelowPayoff {
                    player: k % n,
                    profile: k / n,
                    bound: b,
                    payoff: p,
                });
            }
        }
        Ok(())
    }

    pub fn bound(&self, profile: usize, player: usize) -> f64 {
        self.bounds[profile * self.n + player]
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }
}

/// One probability vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    pub probs: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn new(game: &StrategicGame, probs: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let m = Self { probs };
        m.validate(game)?;
        Ok(m)
    }

    pub fn pure(game: &StrategicGame, index: usize) -> Self {
        let p = game.profile(index);
        let probs = p
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut v = vec![0.0; game.num_strategies(i)];
                v[s] = 1.0;
                v
            })
            .collect();
        Self { probs }
    }

    pub fn uniform(game: &StrategicGame) -> Self {
        let probs = (0..game.num_players())
            .map(|i| {
                let k = game.num_strategies(i);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { probs }
    }

    pub fn validate(&self, game: &StrategicGame) -> Result<(), GameError> {
        if self.probs.len() != game.num_players() {
            return Err(GameError::PlayerCount {
                expected: game.num_players(),
                got: self.probs.len(),
            });
        }
        for (i, p) in self.probs.iter().enumerate() {
            if p.len() != game.num_strategies(i) {
                return Err(GameError::InvalidMixed {
                    player: i,
                    reason: format!(
                        "{} entries for {} strategies",
                        p.len(),
                        game.num_strategies(i)
                    ),
                });
            }
            if p.iter().any(|&x| !x.is_finite() || x < -TOL) {
                return Err(GameError::InvalidMixed {
                    player: i,
                    reason: "negative or non-finite probability".into(),
                });
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > TOL {
                return Err(GameError::InvalidMixed {
                    player: i,
                    reason: format!("probabilities sum to {s}"),
                });
            }
        }
        Ok(())
    }

    /// Probability of the pure profile with flat index `index`.
    pub fn prob_of(&self, game: &StrategicGame, index: usize) -> f64 {
        (0..game.num_players())
            .map(|i| self.probs[i][game.strategy_of(index, i)])
            .product()
    }

    /// Pure profile index, if every player puts all mass on one strategy.
    pub fn as_pure(&self, game: &StrategicGame) -> Option<usize> {
        let mut p = Vec::with_capacity(self.probs.len());
        for v in &self.probs {
            let s = v.iter().position(|&x| (x - 1.0).abs() <= TOL)?;
            p.push(s);
        }
        game.profile_index(&p).ok()
    }
}

/// `E_i(δ) = Σ_σ π_i(σ) δ(σ)`.
pub fn expected_utility(
    game: &StrategicGame,
    delta: &MixedProfile,
    player: usize,
) -> Result<f64, GameError> {
    game.check_player(player)?;
    delta.validate(game)?;
    Ok(expected_unchecked(game, delta, player))
}

pub(crate) fn expected_unchecked(game: &StrategicGame, delta: &MixedProfile, player: usize) -> f64 {
    (0..game.num_profiles())
        .map(|idx| {
            let p = delta.prob_of(game, idx);
            if p > 0.0 {
                p * game.payoff(idx, player)
            } else {
                0.0
            }
        })
        .sum()
}

/// `π'_i(σ) = scale_i π_i(σ) + shift_i`.
pub fn affine_transform(
    game: &StrategicGame,
    scale: &[f64],
    shift: &[f64],
) -> Result<StrategicGame, GameError> {
    let n = game.num_players();
    if scale.len() != n || shift.len() != n {
        return Err(GameError::PlayerCount {
            expected: n,
            got: scale.len().min(shift.len()),
        });
    }
    for (i, &s) in scale.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(GameError::NonPositiveScale {
                player: i,
                scale: s,
            });
        }
    }
    let payoffs = game
        .payoffs()
        .iter()
        .enumerate()
        .map(|(k, &x)| scale[k % n] * x + shift[k % n])
        .collect();
    game.with_payoffs(payoffs)
}
