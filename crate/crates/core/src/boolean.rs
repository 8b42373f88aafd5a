//! Boolean games: players control disjoint sets of atoms, pay costs that
//! depend on the whole valuation, and pursue a propositional goal.
//!
//! Valuations are numbered in binary over the declared atom order, first atom
//! most significant, `false < true`. A player's choice is numbered the same
//! way over its own atoms, so the induced strategic game lists `~p` before
//! `p`.

use crate::boost::{BoostSpec, Boosts};
use crate::endogenous::EndogenousGame;
use crate::error::GameError;
use crate::formula::Formula;
use crate::game::{BudgetConstraints, GoalAssignment, StrategicGame};
use crate::transfers::TaxationMechanism;

/// Which budget ceilings a boolean game declares on its induced game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetMode {
    /// `b_i(v) = 0`: effective costs may not turn negative.
    #[default]
    Effective,
    /// `b_i(v) = −c_i(v)`: no player may end up with a net receipt.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BooleanGame {
    atoms: Vec<String>,
    control: Vec<Vec<usize>>,
    owner: Vec<usize>,
    goals: Vec<Formula>,
    // costs[valuation * n + player]
    costs: Vec<f64>,
    epsilon: f64,
    budget_mode: BudgetMode,
}

impl BooleanGame {
    /// `control[i]` lists the atoms of player `i`; they are kept in declared atom order.
    pub fn new(
        atoms: Vec<String>,
        mut control: Vec<Vec<usize>>,
        goals: Vec<Formula>,
        costs: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, GameError> {
        let n = control.len();
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if atoms.len() > 24 {
            return Err(GameError::InvalidBoolean(format!(
                "{} atoms is too many to enumerate",
                atoms.len()
            )));
        }
        for (k, a) in atoms.iter().enumerate() {
            if atoms[..k].contains(a) {
                return Err(GameError::InvalidBoolean(format!(
                    "atom `{a}` declared twice"
                )));
            }
        }
        let mut owner = vec![usize::MAX; atoms.len()];
        for (i, set) in control.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(GameError::InvalidBoolean(format!(
                    "player {i} controls no atoms"
                )));
            }
            set.sort_unstable();
            for &a in set.iter() {
                if a >= atoms.len() {
                    return Err(GameError::InvalidBoolean(format!("unknown atom #{a}")));
                }
                if owner[a] != usize::MAX {
                    return Err(GameError::InvalidBoolean(format!(
                        "atom `{}` controlled twice",
                        atoms[a]
                    )));
                }
                owner[a] = i;
            }
        }
        if let Some(a) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(GameError::InvalidBoolean(format!(
                "atom `{}` has no controller",
                atoms[a]
            )));
        }
        if goals.len() != n {
            return Err(GameError::PlayerCount {
                expected: n,
                got: goals.len(),
            });
        }
        if let Some(k) = goals.iter().filter_map(Formula::max_atom).max() {
            if k >= atoms.len() {
                return Err(GameError::InvalidBoolean(format!(
                    "goal mentions unknown atom #{k}"
                )));
            }
        }
        let expected = (1usize << atoms.len()) * n;
        if costs.len() != expected {
            return Err(GameError::PayoffLength {
                got: costs.len(),
                expected,
            });
        }
        for &c in &costs {
            if !c.is_finite() {
                return Err(GameError::NonFinite(c));
            }
            if c < 0.0 {
                return Err(GameError::NegativeAmount(c));
            }
        }
        BoostSpec::regret(epsilon)?;
        Ok(Self {
            atoms,
            control,
            owner,
            goals,
            costs,
            epsilon,
            budget_mode: BudgetMode::default(),
        })
    }

    /// Builds the cost table from `cost(valuation_bits, player)`.
    pub fn from_cost_fn<F>(
        atoms: Vec<String>,
        control: Vec<Vec<usize>>,
        goals: Vec<Formula>,
        epsilon: f64,
        mut cost: F,
    ) -> Result<Self, GameError>
    where
        F: FnMut(&[bool], usize) -> f64,
    {
        let n = control.len();
        let m = atoms.len().min(24);
        let mut costs = Vec::with_capacity((1 << m) * n);
        for v in 0..1usize << m {
            let bits = bits_of(v, m);
            costs.extend((0..n).map(|i| cost(&bits, i)));
        }
        Self::new(atoms, control, goals, costs, epsilon)
    }

    pub fn with_budget_mode(mut self, mode: BudgetMode) -> Self {
        self.budget_mode = mode;
        self
    }

    pub fn budget_mode(&self) -> BudgetMode {
        self.budget_mode
    }

    pub fn num_players(&self) -> usize {
        self.control.len()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn control(&self, player: usize) -> &[usize] {
        &self.control[player]
    }

    pub fn owner(&self, atom: usize) -> usize {
        self.owner[atom]
    }

    pub fn goal(&self, player: usize) -> &Formula {
        &self.goals[player]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_valuations(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn cost(&self, valuation: usize, player: usize) -> f64 {
        self.costs[valuation * self.num_players() + player]
    }

    /// Cost table laid out as `[valuation * n + player]`.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn bits(&self, valuation: usize) -> Vec<bool> {
        bits_of(valuation, self.atoms.len())
    }

    /// All valuations in enumeration order, as truth vectors over the atoms.
    pub fn valuations(&self) -> Vec<Vec<bool>> {
        (0..self.num_valuations()).map(|v| self.bits(v)).collect()
    }

    pub fn atom_value(&self, valuation: usize, atom: usize) -> bool {
        (valuation >> (self.atoms.len() - 1 - atom)) & 1 == 1
    }

    pub fn satisfies(&self, valuation: usize, player: usize) -> bool {
        self.goals[player].eval_unchecked(&self.bits(valuation))
    }

    pub fn num_choices(&self, player: usize) -> usize {
        1 << self.control[player].len()
    }

    /// Player's choice in `valuation`, numbered over its own atoms.
    pub fn choice_of(&self, valuation: usize, player: usize) -> usize {
        self.control[player].iter().fold(0, |acc, &a| {
            (acc << 1) | self.atom_value(valuation, a) as usize
        })
    }

    /// Valuation obtained from `valuation` by letting `player` switch to `choice`.
    pub fn with_choice(&self, valuation: usize, player: usize, choice: usize) -> usize {
        let own = &self.control[player];
        let m = self.atoms.len();
        let mut v = valuation;
        for (j, &a) in own.iter().enumerate() {
            let bit = (choice >> (own.len() - 1 - j)) & 1;
            let mask = 1 << (m - 1 - a);
            v = if bit == 1 { v | mask } else { v & !mask };
        }
        v
    }

    /// Number of players whose choices differ between two valuations.
    pub fn players_differing(&self, v: usize, w: usize) -> usize {
        (0..self.num_players())
            .filter(|&i| self.choice_of(v, i) != self.choice_of(w, i))
            .count()
    }

    /// Label of a choice, e.g. `~p&q`.
    pub fn choice_label(&self, player: usize, choice: usize) -> String {
        let own = &self.control[player];
        own.iter()
            .enumerate()
            .map(|(j, &a)| {
                if (choice >> (own.len() - 1 - j)) & 1 == 1 {
                    self.atoms[a].clone()
                } else {
                    format!("~{}", self.atoms[a])
                }
            })
            .collect::<Vec<_>>()
            .join("&")
    }

    /// `p=1,q=0,...` over the declared atoms.
    pub fn valuation_label(&self, valuation: usize) -> String {
        self.atoms
            .iter()
            .enumerate()
            .map(|(k, a)| format!("{a}={}", self.atom_value(valuation, k) as u8))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Inverse of [`valuation_label`](Self::valuation_label); every atom must be assigned once.
    pub fn parse_valuation(&self, text: &str) -> Result<usize, GameError> {
        let m = self.atoms.len();
        let mut seen = vec![false; m];
        let mut v = 0usize;
        for part in text.split(',') {
            let bad = || GameError::InvalidBoolean(format!("bad atom assignment `{part}`"));
            let (name, val) = part.trim().split_once('=').ok_or_else(bad)?;
            let k = self
                .atoms
                .iter()
                .position(|a| a == name.trim())
                .ok_or_else(bad)?;
            if seen[k] {
                return Err(GameError::InvalidBoolean(format!(
                    "atom `{name}` assigned twice"
                )));
            }
            seen[k] = true;
            match val.trim() {
                "1" => v |= 1 << (m - 1 - k),
                "0" => {}
                _ => return Err(bad()),
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(GameError::InvalidBoolean(format!(
                "atom `{}` unassigned",
                self.atoms[k]
            )));
        }
        Ok(v)
    }

    pub fn strategic_shape(&self) -> Vec<usize> {
        (0..self.num_players())
            .map(|i| self.num_choices(i))
            .collect()
    }

    fn strides(&self) -> Vec<usize> {
        let shape = self.strategic_shape();
        let mut s = vec![1; shape.len()];
        for i in (0..shape.len() - 1).rev() {
            s[i] = s[i + 1] * shape[i + 1];
        }
        s
    }

    /// Profile index in the induced strategic game.
    pub fn profile_of(&self, valuation: usize) -> usize {
        self.strides()
            .iter()
            .enumerate()
            .map(|(i, st)| self.choice_of(valuation, i) * st)
            .sum()
    }

    /// Valuation realized by a profile of the induced strategic game.
    pub fn valuation_of(&self, profile: usize) -> usize {
        let shape = self.strategic_shape();
        self.strides().iter().enumerate().fold(0, |v, (i, st)| {
            self.with_choice(v, i, (profile / st) % shape[i])
        })
    }

    /// `μ_i = max_v effective_cost_i(v)`, with costs laid out like [`costs`](Self::costs).
    pub fn mu(&self, effective_cost: &[f64], player: usize) -> f64 {
        let n = self.num_players();
        effective_cost
            .iter()
            .skip(player)
            .step_by(n)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Induced strategic game with goals: `π = −c`, `G_i = {v ⊨ γ_i}`, regret boost `ε`.
    pub fn to_goal_game(&self) -> EndogenousGame {
        let n = self.num_players();
        let labels = (0..n)
            .map(|i| {
                (0..self.num_choices(i))
                    .map(|c| self.choice_label(i, c))
                    .collect()
            })
            .collect();
        let profiles = self.num_valuations();
        let mut payoffs = vec![0.0; profiles * n];
        let mut goal_sets = vec![Vec::new(); n];
        for v in 0..profiles {
            let p = self.profile_of(v);
            let bits = self.bits(v);
            for i in 0..n {
                payoffs[p * n + i] = -self.cost(v, i);
                if self.goals[i].eval_unchecked(&bits) {
                    goal_sets[i].push(p);
                }
            }
        }
        let game = StrategicGame::new(labels, payoffs)
            .expect("valid boolean game has a valid strategic form");
        let goals = GoalAssignment::from_indices(&game, &goal_sets).expect("profiles in range");
        let budgets = match self.budget_mode {
            BudgetMode::Effective => BudgetConstraints::constant(&game, 0.0),
            BudgetMode::Literal => BudgetConstraints::from_payoffs(&game),
        };
        EndogenousGame {
            boosts: Boosts::uniform(
                BoostSpec::Regret {
                    epsilon: self.epsilon,
                },
                n,
            ),
            goals,
            budgets,
            origin: Some(self.clone()),
            game,
        }
    }

    /// Taxes (indexed by induced-game profile) folded into the costs.
    pub fn with_tax(&self, tax: &TaxationMechanism) -> Result<Self, GameError> {
        let n = self.num_players();
        let profiles = self.num_valuations();
        if tax.num_players() != n || tax.num_profiles() != profiles {
            return Err(GameError::ShapeMismatch(
                "tax does not match the boolean game".into(),
            ));
        }
        let mut out = self.clone();
        for v in 0..profiles {
            let p = self.profile_of(v);
            for i in 0..n {
                out.costs[v * n + i] += tax.get(i, p);
            }
        }
        Ok(out)
    }

    /// Boolean game whose induced payoffs are `π − k`, with all goals `⊥`.
    ///
    /// Every strategy count must be a power of two and `k ≥ max π`.
    pub fn embed(game: &StrategicGame, k: f64) -> Result<Self, GameError> {
        let n = game.num_players();
        let mut atoms = Vec::new();
        let mut control = Vec::new();
        for i in 0..n {
            let s = game.num_strategies(i);
            if !s.is_power_of_two() || s < 2 {
                return Err(GameError::InvalidBoolean(format!(
                    "player {i} has {s} strategies, not a power of two above 1"
                )));
            }
            let bits = s.trailing_zeros() as usize;
            control.push((atoms.len()..atoms.len() + bits).collect());
            atoms.extend((0..bits).map(|b| format!("x{i}_{b}")));
        }
        let m = atoms.len();
        if m > 24 {
            return Err(GameError::InvalidBoolean("game too large to embed".into()));
        }
        let bottom = Formula::and(Formula::Atom(0), Formula::not(Formula::Atom(0)));
        // Atoms are assigned to players in order, so valuation and profile
        // indices coincide.
        let mut costs = Vec::with_capacity((1 << m) * n);
        for v in 0..1usize << m {
            costs.extend(game.payoff_vec(v).iter().map(|&x| k - x));
        }
        Self::new(atoms, control, vec![bottom; n], costs, 1.0)
    }
}

fn bits_of(v: usize, m: usize) -> Vec<bool> {
    (0..m).map(|k| (v >> (m - 1 - k)) & 1 == 1).collect()
}
