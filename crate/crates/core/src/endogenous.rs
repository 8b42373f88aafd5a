//! The two-phase game: players first commit to outcome-contingent transfers,
//! then play the updated game.
//!
//! The transfer space is continuous; every analysis here scans a finite
//! [`TransferGrid`] instead, so all verdicts are grid certificates.
//! Subgames are solved by pure equilibrium enumeration plus, for two
//! players, extreme mixed equilibria. A player's *guaranteed value* in a
//! subgame is its worst expected utility over the equilibria found.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use crate::boolean::{BooleanGame, BudgetMode};
use crate::boost::{charge_of, induce_into, penalized_utility, Boosts, Penalized};
use crate::equilibria::{bimatrix_equilibria, is_pure_ne_raw};
use crate::error::GameError;
use crate::game::{BudgetConstraints, GoalAssignment, StrategicGame};
use crate::par::{self, Exec};
use crate::transfers::{add_net_into, apply_tax, TaxationMechanism, TransferFunction};
use crate::TOL;

/// How budget ceilings follow the game when it is taxed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetPolicy {
    /// `b = π` of the (taxed) game.
    MatchPayoff,
    /// The same constant everywhere.
    Constant(f64),
    /// Ceilings fixed once; they stay valid under taxes since taxes only lower payoffs.
    Explicit,
}

/// A strategic game with goals, boosts and budgets, open to pre-play transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct EndogenousGame {
    pub game: StrategicGame,
    pub goals: GoalAssignment,
    pub boosts: Boosts,
    pub budgets: BudgetConstraints,
    /// Boolean game the strategic form was derived from, if any.
    pub origin: Option<BooleanGame>,
}

impl EndogenousGame {
    pub fn new(
        game: StrategicGame,
        goals: GoalAssignment,
        boosts: Boosts,
        budgets: BudgetConstraints,
    ) -> Result<Self, GameError> {
        goals.check_compatible(&game)?;
        boosts.validate(&game)?;
        budgets.check_declared_on(&game)?;
        Ok(Self {
            game,
            goals,
            boosts,
            budgets,
            origin: None,
        })
    }

    /// Budgets default to `b = π`.
    pub fn strategic(
        game: StrategicGame,
        goals: GoalAssignment,
        boosts: Boosts,
    ) -> Result<Self, GameError> {
        let budgets = BudgetConstraints::from_payoffs(&game);
        Self::new(game, goals, boosts, budgets)
    }

    pub fn num_players(&self) -> usize {
        self.game.num_players()
    }

    /// Penalized utilities after the play of `t`.
    pub fn utility(&self, t: &TransferFunction) -> Result<Penalized, GameError> {
        let updated = crate::transfers::apply_transfers(&self.game, t)?;
        penalized_utility(
            &updated,
            &self.game,
            &self.goals,
            &self.boosts,
            &self.budgets,
        )
    }

    /// Game under taxation `α`, with budgets following `policy` (boolean games use their own mode).
    pub fn with_tax(
        &self,
        tax: &TaxationMechanism,
        policy: BudgetPolicy,
    ) -> Result<Self, GameError> {
        if let Some(b) = &self.origin {
            return Ok(b.with_tax(tax)?.to_goal_game());
        }
        let game = apply_tax(&self.game, tax)?;
        let budgets = match policy {
            BudgetPolicy::MatchPayoff => BudgetConstraints::from_payoffs(&game),
            BudgetPolicy::Constant(c) => BudgetConstraints::constant(&game, c),
            BudgetPolicy::Explicit => self.budgets.clone(),
        };
        Self::new(game, self.goals.clone(), self.boosts.clone(), budgets)
    }

    /// The budget policy that reproduces this game's current budgets.
    pub fn budget_policy(&self) -> BudgetPolicy {
        if self.budgets.bounds() == self.game.payoffs() {
            return BudgetPolicy::MatchPayoff;
        }
        match self.budgets.bounds().first() {
            Some(&c) if self.budgets.bounds().iter().all(|&b| b == c) => BudgetPolicy::Constant(c),
            _ => BudgetPolicy::Explicit,
        }
    }
}

/// Discretized transfers of one player: every `(profile, receiver)` cell
/// takes a value in `{0, g, 2g, …, M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferGrid {
    pub step: f64,
    pub bound: f64,
    /// Profiles where payments may be non-zero; all profiles when `None`.
    pub support: Option<Vec<usize>>,
    /// Largest per-player grid that will be scanned.
    pub cap: usize,
}

pub const DEFAULT_GRID_CAP: usize = 10_000_000;
pub const DEFAULT_CANDIDATE_CAP: usize = 100_000_000;

impl TransferGrid {
    pub fn new(step: f64, bound: f64) -> Result<Self, GameError> {
        if !(step > 0.0) || !step.is_finite() || !bound.is_finite() || bound < step {
            return Err(GameError::InvalidGrid(format!(
                "need 0 < step <= bound, got step {step}, bound {bound}"
            )));
        }
        Ok(Self {
            step,
            bound,
            support: None,
            cap: DEFAULT_GRID_CAP,
        })
    }

    pub fn with_support(mut self, mut profiles: Vec<usize>) -> Self {
        profiles.sort_unstable();
        profiles.dedup();
        self.support = Some(profiles);
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Number of values per cell, `⌊M/g⌋ + 1`.
    pub fn levels(&self) -> usize {
        (self.bound / self.step + 1e-9).floor() as usize + 1
    }

    fn support_of(&self, game: &StrategicGame) -> Result<Vec<usize>, GameError> {
        match &self.support {
            None => Ok((0..game.num_profiles()).collect()),
            Some(s) => {
                if let Some(&p) = s.iter().find(|&&p| p >= game.num_profiles()) {
                    return Err(GameError::InvalidProfile(vec![p]));
                }
                Ok(s.clone())
            }
        }
    }

    /// `(profile, receiver)` cells of `player`, in scan order.
    pub fn cells(
        &self,
        game: &StrategicGame,
        player: usize,
    ) -> Result<Vec<(usize, usize)>, GameError> {
        let n = game.num_players();
        Ok(self
            .support_of(game)?
            .into_iter()
            .flat_map(|p| (0..n).filter(move |&j| j != player).map(move |j| (p, j)))
            .collect())
    }

    /// Per-player grid size, or an error above the cap.
    pub fn size(&self, game: &StrategicGame) -> Result<usize, GameError> {
        let cells = self.support_of(game)?.len() * (game.num_players() - 1);
        let levels = self.levels();
        let size = (levels as f64).powi(cells as i32);
        if size > self.cap as f64 {
            return Err(GameError::GridTooLarge {
                size,
                cap: self.cap,
            });
        }
        Ok(levels.pow(cells as u32))
    }

    /// The `index`-th grid transfer of `player` (other players pay nothing).
    pub fn transfer(
        &self,
        game: &StrategicGame,
        player: usize,
        index: usize,
    ) -> Result<TransferFunction, GameError> {
        let cells = self.cells(game, player)?;
        let mut t = TransferFunction::zero(game);
        let levels = self.levels();
        let mut k = index;
        for &(p, j) in &cells {
            let d = k % levels;
            k /= levels;
            if d > 0 {
                t.set(player, p, j, d as f64 * self.step)?;
            }
        }
        Ok(t)
    }
}

/// Immutable context for scanning transfers on one game.
struct Engine<'a> {
    n: usize,
    shape: Vec<usize>,
    strides: Vec<usize>,
    base: Vec<f64>,
    budgets: &'a [f64],
    goals: &'a GoalAssignment,
    boosts: &'a Boosts,
    step: f64,
    levels: usize,
    cells: Vec<Vec<(usize, usize)>>,
    ncells: usize,
}

/// Per-worker buffers.
struct Scratch {
    digits: Vec<u32>,
    pi: Vec<f64>,
    u: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    dev: Vec<u32>,
    last_hit: Option<(usize, DeviationKind, usize)>,
}

impl<'a> Engine<'a> {
    fn new(e: &'a EndogenousGame, grid: &TransferGrid, base: Vec<f64>) -> Result<Self, GameError> {
        let n = e.num_players();
        let cells = (0..n)
            .map(|i| grid.cells(&e.game, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            n,
            shape: e.game.shape(),
            strides: e.game.strides().to_vec(),
            base,
            budgets: e.budgets.bounds(),
            goals: &e.goals,
            boosts: &e.boosts,
            step: grid.step,
            levels: grid.levels(),
            ncells: cells[0].len(),
            cells,
        })
    }

    fn scratch(&self) -> Scratch {
        let len = self.base.len();
        let m = if self.n == 2 {
            self.shape[0] * self.shape[1]
        } else {
            0
        };
        Scratch {
            digits: vec![0; self.n * self.ncells],
            pi: vec![0.0; len],
            u: vec![0.0; len],
            a: vec![0.0; m],
            b: vec![0.0; m],
            dev: vec![0; self.ncells],
            last_hit: None,
        }
    }

    fn decode(&self, index: usize, out: &mut [u32]) {
        let mut k = index;
        for d in out.iter_mut() {
            *d = (k % self.levels) as u32;
            k /= self.levels;
        }
    }

    /// Fills `pi` and `u` for the transfer encoded in `digits`.
    fn load(&self, s: &mut Scratch) {
        let n = self.n;
        s.pi.copy_from_slice(&self.base);
        for i in 0..n {
            let ds = &s.digits[i * self.ncells..(i + 1) * self.ncells];
            for (&d, &(p, j)) in ds.iter().zip(&self.cells[i]) {
                if d > 0 {
                    let amt = d as f64 * self.step;
                    s.pi[p * n + j] += amt;
                    s.pi[p * n + i] -= amt;
                }
            }
        }
        induce_into(&s.pi, n, self.goals, self.boosts, &mut s.u);
        let charge = charge_of(&s.pi, self.budgets, n);
        if charge != 0.0 {
            s.u.iter_mut().for_each(|x| *x -= charge);
        }
    }

    fn is_ne(&self, s: &Scratch, profile: usize) -> bool {
        is_pure_ne_raw(&s.u, &self.shape, &self.strides, profile)
    }

    /// Worst expected utility of `player` over the equilibria found in the
    /// loaded subgame, and whether the pure min-max fallback was needed.
    fn guaranteed(&self, s: &mut Scratch, player: usize) -> (f64, bool) {
        let n = self.n;
        if n == 2 {
            let cols = self.shape[1];
            let m = self.shape[0] * cols;
            for k in 0..m {
                s.a[k] = s.u[2 * k];
                s.b[k] = s.u[2 * k + 1];
            }
            let eqs = bimatrix_equilibria(&s.a, &s.b, self.shape[0], cols);
            let mut worst = f64::INFINITY;
            for (x, y) in &eqs {
                let mut v = 0.0;
                for (r, &xr) in x.iter().enumerate() {
                    if xr > 0.0 {
                        for (c, &yc) in y.iter().enumerate() {
                            v += xr * yc * s.u[2 * (r * cols + c) + player];
                        }
                    }
                }
                worst = worst.min(v);
            }
            // every finite two-player game has an equilibrium
            debug_assert!(worst.is_finite());
            return (worst, false);
        }
        let profiles = self.base.len() / n;
        let mut worst = f64::INFINITY;
        for k in 0..profiles {
            if self.is_ne(s, k) {
                worst = worst.min(s.u[k * n + player]);
            }
        }
        if worst.is_finite() {
            return (worst, false);
        }
        // pure min-max: the others minimize the player's best response
        let stride = self.strides[player];
        let own = self.shape[player];
        let mut minmax = f64::INFINITY;
        for k in 0..profiles {
            if !(k / stride).is_multiple_of(own) {
                continue;
            }
            let best = (0..own)
                .map(|t| s.u[(k + t * stride) * n + player])
                .fold(f64::NEG_INFINITY, f64::max);
            minmax = minmax.min(best);
        }
        (minmax, true)
    }

    fn player_digits<'s>(&self, s: &'s mut Scratch, player: usize) -> &'s mut [u32] {
        &mut s.digits[player * self.ncells..(player + 1) * self.ncells]
    }

    fn to_transfer(&self, digits: &[u32], players: usize, profiles: usize) -> TransferFunction {
        let mut t = TransferFunction::zero_for(players, profiles);
        for i in 0..self.n {
            let ds = &digits[i * self.ncells..(i + 1) * self.ncells];
            for (&d, &(p, j)) in ds.iter().zip(&self.cells[i]) {
                if d > 0 {
                    t.add(i, p, j, d as f64 * self.step)
                        .expect("grid cells are valid");
                }
            }
        }
        t
    }
}

/// Best guaranteed value of a player over its grid transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct SoloPayoff {
    pub player: usize,
    pub value: f64,
    /// A transfer attaining `value` (lowest grid index among ties).
    pub transfer: TransferFunction,
    /// Some subgame had no pure equilibrium and its pure min-max value was used.
    pub approximate: bool,
}

/// `ŝ_i` on the grid: max over the player's grid transfers, others paying
/// nothing, of the player's worst equilibrium utility.
pub fn solo_payoff(
    e: &EndogenousGame,
    player: usize,
    grid: &TransferGrid,
    exec: Exec,
) -> Result<SoloPayoff, GameError> {
    e.game.check_player(player)?;
    let size = grid.size(&e.game)?;
    let engine = Engine::new(e, grid, e.game.payoffs().to_vec())?;
    solo_with(&engine, e, player, size, exec)
}

fn solo_with(
    engine: &Engine,
    e: &EndogenousGame,
    player: usize,
    size: usize,
    exec: Exec,
) -> Result<SoloPayoff, GameError> {
    let approx = AtomicBool::new(false);
    let (value, index) = par::max_by(
        exec,
        size,
        || engine.scratch(),
        |s, k| {
            let mut tmp = vec![0u32; engine.ncells];
            engine.decode(k, &mut tmp);
            engine.player_digits(s, player).copy_from_slice(&tmp);
            engine.load(s);
            let (v, a) = engine.guaranteed(s, player);
            if a {
                approx.store(true, AtomicOrdering::Relaxed);
            }
            v
        },
    )
    .expect("grid is never empty");
    let mut digits = vec![0u32; engine.n * engine.ncells];
    engine.decode(
        index,
        &mut digits[player * engine.ncells..(player + 1) * engine.ncells],
    );
    Ok(SoloPayoff {
        player,
        value,
        transfer: engine.to_transfer(&digits, e.num_players(), e.game.num_profiles()),
        approximate: approx.into_inner(),
    })
}

/// Outcome of [`check_survival_sufficient`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalVerdict {
    Certified,
    NotApplicable,
}

/// The trigger-strategy construction behind a survival verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCertificate {
    pub verdict: SurvivalVerdict,
    pub profile: usize,
    /// Utilities at the profile with no transfers.
    pub utilities: Vec<f64>,
    /// Solo payoffs, which are also the off-path punishment values.
    pub solo: Vec<SoloPayoff>,
    /// Players whose utility falls short of their solo payoff.
    pub short: Vec<usize>,
    /// Transfer played on the path: zero for strategic games, the sharing
    /// transfer for boolean ones.
    pub on_path: TransferFunction,
    /// Punishment factor of the on-path subgame.
    pub on_path_kappa: f64,
    /// For boolean games: goal players matched to cost-maximal valuations.
    pub sharing: Option<Vec<(usize, usize)>>,
    /// For boolean games: the profile is a pure equilibrium under the on-path transfer.
    pub on_path_equilibrium: bool,
}

/// Sufficient condition for survival: every player gets at least its solo
/// payoff at the profile (and, for boolean games, the outcome is shareable).
pub fn check_survival_sufficient(
    e: &EndogenousGame,
    profile: usize,
    grid: &TransferGrid,
    exec: Exec,
) -> Result<SurvivalCertificate, GameError> {
    if profile >= e.game.num_profiles() {
        return Err(GameError::InvalidProfile(vec![profile]));
    }
    let zero = TransferFunction::zero(&e.game);
    let at_zero = e.utility(&zero)?;
    if !crate::equilibria::is_pure_ne(&at_zero.game, profile) {
        return Err(GameError::NotNashEquilibrium(profile));
    }
    let n = e.num_players();
    let size = grid.size(&e.game)?;
    let engine = Engine::new(e, grid, e.game.payoffs().to_vec())?;
    let solo = (0..n)
        .map(|i| solo_with(&engine, e, i, size, exec))
        .collect::<Result<Vec<_>, _>>()?;
    let utilities = at_zero.game.payoff_vec(profile).to_vec();
    let short: Vec<usize> = (0..n)
        .filter(|&i| utilities[i] < solo[i].value - TOL)
        .collect();
    let mut cert = SurvivalCertificate {
        verdict: SurvivalVerdict::NotApplicable,
        profile,
        utilities,
        solo,
        short,
        on_path: zero,
        on_path_kappa: at_zero.punishment.kappa,
        sharing: None,
        on_path_equilibrium: true,
    };
    let mut ok = cert.short.is_empty();
    if let Some(b) = &e.origin {
        let v = b.valuation_of(profile);
        match is_shareable(b, v) {
            Some(assignment) => {
                let on_path = sharing_transfer(b, &e.game, &assignment)?;
                let p = e.utility(&on_path)?;
                cert.on_path_equilibrium = crate::equilibria::is_pure_ne(&p.game, profile);
                cert.on_path_kappa = p.punishment.kappa;
                cert.on_path = on_path;
                cert.sharing = Some(assignment);
                ok &= cert.on_path_equilibrium;
            }
            None => ok = false,
        }
    }
    if ok {
        cert.verdict = SurvivalVerdict::Certified;
    }
    Ok(cert)
}

/// Each goal player `j` pays every other player `k` its cost `c_k(vʲ)` at its matched valuation `vʲ`.
fn sharing_transfer(
    b: &BooleanGame,
    game: &StrategicGame,
    assignment: &[(usize, usize)],
) -> Result<TransferFunction, GameError> {
    let mut t = TransferFunction::zero(game);
    for &(j, w) in assignment {
        let p = b.profile_of(w);
        for k in (0..b.num_players()).filter(|&k| k != j) {
            let c = b.cost(w, k);
            if c > 0.0 {
                t.set(j, p, k, c)?;
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationKind {
    /// The deviator discards its on-path transfer and plays a grid transfer.
    Replace,
    /// The deviator adds a grid transfer on top of its on-path transfer.
    TopUp,
}

/// A pre-play deviation and the value it guarantees the deviator.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub player: usize,
    pub kind: DeviationKind,
    /// The deviator's full transfer after deviating.
    pub transfer: TransferFunction,
    pub value: f64,
    /// On-path utility the deviation improves upon.
    pub on_path: f64,
    pub approximate: bool,
}

/// Every grid candidate `(τ, σ)` was defeated by some deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NonSurvivalCertificate {
    pub profile: usize,
    /// Joint grid transfers examined.
    pub candidates: usize,
    /// Candidates under which the profile is an equilibrium, each defeated.
    pub on_path_candidates: usize,
    /// Defeats per `(player, kind)`.
    pub defeats: Vec<(usize, DeviationKind, usize)>,
    /// The strongest deviation from the zero transfer, when the profile is an
    /// equilibrium there; budget-respecting deviations take precedence.
    pub zero_witness: Option<Deviation>,
}

#[derive(Default)]
struct Tally {
    candidates: usize,
    on_path: usize,
    defeats: Vec<usize>,
}

/// Order in which deviations are tried: fewest non-zero cells, then smallest total.
fn deviation_order(engine: &Engine, size: usize) -> Vec<u32> {
    let mut keyed: Vec<(u32, u64, u32)> = (0..size)
        .map(|k| {
            let mut d = vec![0u32; engine.ncells];
            engine.decode(k, &mut d);
            let nz = d.iter().filter(|&&x| x > 0).count() as u32;
            let total: u64 = d.iter().map(|&x| x as u64).sum();
            (nz, total, k as u32)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, _, k)| k).collect()
}

impl Engine<'_> {
    /// Tries one deviation on top of the candidate digits saved in `cand`.
    fn try_deviation(
        &self,
        s: &mut Scratch,
        cand: &[u32],
        player: usize,
        kind: DeviationKind,
        k: usize,
    ) -> Option<(f64, bool)> {
        let nc = self.ncells;
        let own = &cand[player * nc..(player + 1) * nc];
        if kind == DeviationKind::TopUp && (k == 0 || own.iter().all(|&d| d == 0)) {
            return None;
        }
        self.decode(k, &mut s.dev);
        if kind == DeviationKind::Replace && s.dev == own {
            return None;
        }
        s.digits.copy_from_slice(cand);
        let (digits, dev) = (&mut s.digits[player * nc..(player + 1) * nc], &s.dev);
        for (c, d) in digits.iter_mut().zip(dev) {
            *c = if kind == DeviationKind::TopUp {
                *c + d
            } else {
                *d
            };
        }
        self.load(s);
        Some(self.guaranteed(s, player))
    }

    /// First deviation (in search order) beating `on_path[player]` for some player.
    fn defeat(
        &self,
        s: &mut Scratch,
        cand: &[u32],
        on_path: &[f64],
        order: &[u32],
    ) -> Option<(usize, DeviationKind, usize, f64, bool)> {
        if let Some((i, kind, k)) = s.last_hit {
            if let Some((v, a)) = self.try_deviation(s, cand, i, kind, k) {
                if v > on_path[i] + TOL {
                    return Some((i, kind, k, v, a));
                }
            }
        }
        for i in 0..self.n {
            for kind in [DeviationKind::Replace, DeviationKind::TopUp] {
                for &k in order {
                    if let Some((v, a)) = self.try_deviation(s, cand, i, kind, k as usize) {
                        if v > on_path[i] + TOL {
                            s.last_hit = Some((i, kind, k as usize));
                            return Some((i, kind, k as usize, v, a));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Improving replace-deviation from `cand` with the highest guaranteed value
/// over all players, earliest in search order among ties. Deviations that keep every
/// budget (`κ = 0`) are preferred over ones that trigger the punishment.
fn strongest_deviation(
    engine: &Engine,
    s: &mut Scratch,
    cand: &[u32],
    on_path: &[f64],
    order: &[u32],
) -> Option<(usize, usize, f64, bool)> {
    let mut feasible: Option<(usize, usize, f64, bool)> = None;
    let mut any: Option<(usize, usize, f64, bool)> = None;
    for i in 0..engine.n {
        for &k in order {
            let Some((v, a)) = engine.try_deviation(s, cand, i, DeviationKind::Replace, k as usize)
            else {
                continue;
            };
            if v > on_path[i] + TOL {
                let hit = Some((i, k as usize, v, a));
                if any.is_none_or(|b| v > b.2 + TOL) {
                    any = hit;
                }
                if charge_of(&s.pi, engine.budgets, engine.n) == 0.0
                    && feasible.is_none_or(|b| v > b.2 + TOL)
                {
                    feasible = hit;
                }
            }
        }
    }
    feasible.or(any)
}

/// Searches for a grid certificate that `profile` is not a surviving equilibrium.
///
/// Every joint grid transfer `τ` under which the profile is a pure
/// equilibrium is a candidate on-path pair; it is defeated when some player
/// has a grid deviation (replacing or topping up its own transfer) whose
/// guaranteed value strictly exceeds its on-path utility. A certificate is
/// returned only if every candidate is defeated.
pub fn find_nonsurvival_certificate(
    e: &EndogenousGame,
    profile: usize,
    grid: &TransferGrid,
    candidate_cap: usize,
    exec: Exec,
) -> Result<Option<NonSurvivalCertificate>, GameError> {
    if profile >= e.game.num_profiles() {
        return Err(GameError::InvalidProfile(vec![profile]));
    }
    let n = e.num_players();
    let size = grid.size(&e.game)?;
    let total = (size as f64).powi(n as i32);
    if total > candidate_cap as f64 {
        return Err(GameError::GridTooLarge {
            size: total,
            cap: candidate_cap,
        });
    }
    let total = size.pow(n as u32);
    let engine = Engine::new(e, grid, e.game.payoffs().to_vec())?;
    let order = deviation_order(&engine, size);
    let nc = engine.ncells;
    let stop = AtomicBool::new(false);
    let slots = n * 2;
    let kind_slot = |i: usize, kind: DeviationKind| i * 2 + (kind == DeviationKind::TopUp) as usize;

    let tally = par::fold(
        exec,
        total,
        || (engine.scratch(), vec![0u32; n * nc]),
        || Tally {
            defeats: vec![0; slots],
            ..Tally::default()
        },
        |(s, cand), acc, c| {
            if stop.load(AtomicOrdering::Relaxed) {
                return;
            }
            acc.candidates += 1;
            let mut rest = c;
            for i in 0..n {
                engine.decode(rest % size, &mut cand[i * nc..(i + 1) * nc]);
                rest /= size;
            }
            s.digits.copy_from_slice(cand);
            engine.load(s);
            if !engine.is_ne(s, profile) {
                return;
            }
            acc.on_path += 1;
            let on_path: Vec<f64> = s.u[profile * n..(profile + 1) * n].to_vec();
            match engine.defeat(s, cand, &on_path, &order) {
                Some((i, kind, ..)) => acc.defeats[kind_slot(i, kind)] += 1,
                None => stop.store(true, AtomicOrdering::Relaxed),
            }
        },
        |mut a, b| {
            a.candidates += b.candidates;
            a.on_path += b.on_path;
            a.defeats
                .iter_mut()
                .zip(&b.defeats)
                .for_each(|(x, y)| *x += y);
            a
        },
    );
    if stop.into_inner() {
        return Ok(None);
    }
    let mut s = engine.scratch();
    let zero = vec![0u32; n * nc];
    s.digits.copy_from_slice(&zero);
    engine.load(&mut s);
    let zero_witness = if engine.is_ne(&s, profile) {
        let on_path: Vec<f64> = s.u[profile * n..(profile + 1) * n].to_vec();
        strongest_deviation(&engine, &mut s, &zero, &on_path, &order).map(|(i, k, v, a)| {
            let mut digits = zero.clone();
            engine.decode(k, &mut digits[i * nc..(i + 1) * nc]);
            Deviation {
                player: i,
                kind: DeviationKind::Replace,
                transfer: engine.to_transfer(&digits, n, e.game.num_profiles()),
                value: v,
                on_path: on_path[i],
                approximate: a,
            }
        })
    } else {
        None
    };
    let mut defeats = Vec::new();
    for i in 0..n {
        for kind in [DeviationKind::Replace, DeviationKind::TopUp] {
            let c = tally.defeats[kind_slot(i, kind)];
            if c > 0 {
                defeats.push((i, kind, c));
            }
        }
    }
    Ok(Some(NonSurvivalCertificate {
        profile,
        candidates: tally.candidates,
        on_path_candidates: tally.on_path,
        defeats,
        zero_witness,
    }))
}

/// Grid deviations of `player` from the on-path pair `(on_path, profile)`
/// that guarantee it strictly more than its on-path utility. Each deviation
/// replaces the player's own payments; the other players keep theirs.
pub fn improving_deviations(
    e: &EndogenousGame,
    on_path: &TransferFunction,
    profile: usize,
    player: usize,
    grid: &TransferGrid,
    exec: Exec,
) -> Result<Vec<Deviation>, GameError> {
    e.game.check_player(player)?;
    if profile >= e.game.num_profiles() {
        return Err(GameError::InvalidProfile(vec![profile]));
    }
    let current = e.utility(on_path)?;
    let target = current.game.payoff(profile, player);
    // the deviator's own payments are replaced, everyone else's stay
    let others = TransferFunction::zero(&e.game).with_giver_from(player, on_path);
    let mut base = e.game.payoffs().to_vec();
    add_net_into(&others, &mut base);
    let size = grid.size(&e.game)?;
    let engine = Engine::new(e, grid, base)?;
    let found: Vec<Option<(usize, f64, bool)>> = par::map(
        exec,
        size,
        || engine.scratch(),
        |s, k| {
            let mut d = vec![0u32; engine.ncells];
            engine.decode(k, &mut d);
            s.digits.iter_mut().for_each(|x| *x = 0);
            engine.player_digits(s, player).copy_from_slice(&d);
            engine.load(s);
            let (v, a) = engine.guaranteed(s, player);
            (v > target + TOL).then_some((k, v, a))
        },
    );
    let nc = engine.ncells;
    Ok(found
        .into_iter()
        .flatten()
        .map(|(k, v, a)| {
            let mut digits = vec![0u32; engine.n * nc];
            engine.decode(k, &mut digits[player * nc..(player + 1) * nc]);
            Deviation {
                player,
                kind: DeviationKind::Replace,
                transfer: engine.to_transfer(&digits, e.num_players(), e.game.num_profiles()),
                value: v,
                on_path: target,
                approximate: a,
            }
        })
        .collect())
}

fn aggregate_cost(b: &BooleanGame, v: usize) -> f64 {
    (0..b.num_players()).map(|i| b.cost(v, i)).sum()
}

fn goal_players(b: &BooleanGame, v: usize) -> Vec<usize> {
    (0..b.num_players())
        .filter(|&i| b.satisfies(v, i))
        .collect()
}

/// Matches each goal player at `v` to a distinct valuation that differs from
/// `v` in at least two players' choices and has maximal aggregate cost.
pub fn is_shareable(b: &BooleanGame, v: usize) -> Option<Vec<(usize, usize)>> {
    let players = goal_players(b, v);
    if players.is_empty() {
        return Some(Vec::new());
    }
    let best = (0..b.num_valuations())
        .map(|w| aggregate_cost(b, w))
        .fold(f64::NEG_INFINITY, f64::max);
    let pool: Vec<usize> = (0..b.num_valuations())
        .filter(|&w| b.players_differing(v, w) >= 2 && aggregate_cost(b, w) >= best - TOL)
        .collect();
    // any goal player may take any pooled valuation, so a matching exists iff the pool is large enough
    (pool.len() >= players.len()).then(|| players.into_iter().zip(pool).collect())
}

/// Shareable under some cost function: enough valuations differ from `v` in
/// at least two players' choices to serve every goal player.
pub fn is_potentially_shareable(b: &BooleanGame, v: usize) -> bool {
    let far = (0..b.num_valuations())
        .filter(|&w| b.players_differing(v, w) >= 2)
        .count();
    far >= goal_players(b, v).len()
}

/// Result of a successful [`synth_tax`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxSynthesis {
    pub tax: TaxationMechanism,
    pub iterations: usize,
    pub certificate: SurvivalCertificate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("player {player} can reach a goal by deviating from the target profile")]
    Guard { player: usize },
    #[error("target outcome is not potentially shareable")]
    NotPotentiallyShareable,
    #[error("taxed target outcome is no longer shareable")]
    NotShareable { tax: Box<TaxationMechanism> },
    #[error("no certificate after {iterations} iterations; still blocked: players {blocking:?}")]
    CapExceeded {
        tax: Box<TaxationMechanism>,
        iterations: usize,
        blocking: Vec<usize>,
    },
}

/// Raises taxes off the target profile until it is certified surviving.
///
/// Each pass recomputes solo payoffs on the taxed game and, for every player
/// still short of its solo payoff (or with a profitable deviation from the
/// target), adds 1 to that player's tax at every other profile.
pub fn synth_tax(
    e: &EndogenousGame,
    profile: usize,
    grid: &TransferGrid,
    iteration_cap: usize,
    exec: Exec,
) -> Result<TaxSynthesis, SynthError> {
    if profile >= e.game.num_profiles() {
        return Err(GameError::InvalidProfile(vec![profile]).into());
    }
    let n = e.num_players();
    for i in 0..n {
        if e.goals.contains(i, profile) {
            continue;
        }
        let reachable = (0..e.game.num_strategies(i))
            .any(|t| e.goals.contains(i, e.game.deviate(profile, i, t)));
        if reachable {
            return Err(SynthError::Guard { player: i });
        }
    }
    if let Some(b) = &e.origin {
        if !is_potentially_shareable(b, b.valuation_of(profile)) {
            return Err(SynthError::NotPotentiallyShareable);
        }
    }
    let policy = e.budget_policy();
    let mut tax = TaxationMechanism::zero(&e.game);
    let mut iterations = 0;
    loop {
        let taxed = e.with_tax(&tax, policy)?;
        let zero = taxed.utility(&TransferFunction::zero(&taxed.game))?;
        let deviators: Vec<usize> = (0..n)
            .filter(|&i| {
                let cur = zero.game.payoff(profile, i);
                (0..taxed.game.num_strategies(i))
                    .any(|t| zero.game.payoff(taxed.game.deviate(profile, i, t), i) > cur + TOL)
            })
            .collect();
        let blocking = if deviators.is_empty() {
            let cert = check_survival_sufficient(&taxed, profile, grid, exec)?;
            if cert.verdict == SurvivalVerdict::Certified {
                return Ok(TaxSynthesis {
                    tax,
                    iterations,
                    certificate: cert,
                });
            }
            if cert.short.is_empty() {
                return Err(SynthError::NotShareable { tax: Box::new(tax) });
            }
            cert.short
        } else {
            deviators
        };
        if iterations >= iteration_cap {
            return Err(SynthError::CapExceeded {
                tax: Box::new(tax),
                iterations,
                blocking,
            });
        }
        for &i in &blocking {
            for p in (0..e.game.num_profiles()).filter(|&p| p != profile) {
                tax.add(i, p, 1.0)?;
            }
        }
        iterations += 1;
    }
}

/// Overall judgment on `(τ⁰, σ)` at a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionStatus {
    SurvivingCertified,
    NonSurvivingCertified,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Survival(SurvivalCertificate),
    NonSurvival(NonSurvivalCertificate),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseSolution {
    pub transfer: TransferFunction,
    pub profile: usize,
    pub status: SolutionStatus,
    pub certificate: Certificate,
}

/// Runs the survival check and, if it does not certify, the non-survival search.
pub fn analyze(
    e: &EndogenousGame,
    profile: usize,
    grid: &TransferGrid,
    candidate_cap: usize,
    exec: Exec,
) -> Result<TwoPhaseSolution, GameError> {
    let cert = check_survival_sufficient(e, profile, grid, exec)?;
    if cert.verdict == SurvivalVerdict::Certified {
        return Ok(TwoPhaseSolution {
            transfer: cert.on_path.clone(),
            profile,
            status: SolutionStatus::SurvivingCertified,
            certificate: Certificate::Survival(cert),
        });
    }
    let transfer = TransferFunction::zero(&e.game);
    Ok(
        match find_nonsurvival_certificate(e, profile, grid, candidate_cap, exec)? {
            Some(c) => TwoPhaseSolution {
                transfer,
                profile,
                status: SolutionStatus::NonSurvivingCertified,
                certificate: Certificate::NonSurvival(c),
            },
            None => TwoPhaseSolution {
                transfer,
                profile,
                status: SolutionStatus::Undecided,
                certificate: Certificate::None,
            },
        },
    )
}

impl BooleanGame {
    /// Budget mode name used in reports.
    pub fn budget_mode_name(&self) -> &'static str {
        match self.budget_mode() {
            BudgetMode::Effective => "effective",
            BudgetMode::Literal => "literal",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::BoostSpec;
    use crate::equilibria::pure_ne;
    use crate::fixtures;

    fn offset(n: usize, d: f64) -> Boosts {
        Boosts::uniform(BoostSpec::offset(d).unwrap(), n)
    }

    #[test]
    fn grid_sizes_and_cap() {
        let g = StrategicGame::zeros(&[2, 2]).unwrap();
        let grid = TransferGrid::new(1.0, 3.0).unwrap();
        assert_eq!(grid.levels(), 4);
        assert_eq!(grid.size(&g).unwrap(), 4usize.pow(4));
        assert!(matches!(
            grid.clone().with_cap(10).size(&g),
            Err(GameError::GridTooLarge { .. })
        ));
        assert_eq!(grid.clone().with_support(vec![3]).size(&g).unwrap(), 4);
        assert!(TransferGrid::new(0.0, 1.0).is_err());
        assert!(TransferGrid::new(2.0, 1.0).is_err());
        let t = grid.transfer(&g, 1, 4 + 3).unwrap();
        assert_eq!(t.get(1, 0, 0), 3.0);
        assert_eq!(t.get(1, 1, 0), 1.0);
    }

    #[test]
    fn solo_payoff_constant_player() {
        // player 1 has no goals and a constant payoff; paying only lowers it
        let g = StrategicGame::from_fn(&[2, 2], |p| vec![p[0] as f64, 2.0]).unwrap();
        let e = EndogenousGame::strategic(
            g,
            GoalAssignment::from_indices(
                &StrategicGame::zeros(&[2, 2]).unwrap(),
                &[vec![], vec![]],
            )
            .unwrap(),
            offset(2, 1.0),
        )
        .unwrap();
        let grid = TransferGrid::new(1.0, 2.0).unwrap();
        let s = solo_payoff(&e, 1, &grid, Exec::Sequential).unwrap();
        assert_eq!(s.value, 2.0);
        assert!(s.transfer.is_zero());
    }

    // Independent oracle: build every transfer explicitly and solve subgames
    // with the public equilibrium functions.
    fn solo_oracle(e: &EndogenousGame, player: usize, grid: &TransferGrid) -> f64 {
        let size = grid.size(&e.game).unwrap();
        let mut best = f64::NEG_INFINITY;
        for k in 0..size {
            let t = grid.transfer(&e.game, player, k).unwrap();
            let u = e.utility(&t).unwrap().game;
            let eqs = crate::equilibria::mixed_ne_2p(&u).unwrap();
            let worst = eqs
                .iter()
                .map(|d| crate::game::expected_utility(&u, d, player).unwrap())
                .fold(f64::INFINITY, f64::min);
            best = best.max(worst);
        }
        best
    }

    #[test]
    fn solo_payoff_matches_oracle() {
        let (g, goals) = fixtures::asymmetry_game();
        let e = EndogenousGame::strategic(g, goals, offset(2, 3.0)).unwrap();
        let grid = TransferGrid::new(1.0, 3.0).unwrap();
        for player in 0..2 {
            for exec in [Exec::Sequential, Exec::Parallel] {
                let s = solo_payoff(&e, player, &grid, exec).unwrap();
                assert_eq!(s.value, solo_oracle(&e, player, &grid));
                assert!(!s.approximate);
            }
        }
    }

    #[test]
    fn refining_the_grid_never_lowers_solo_payoff() {
        let b = fixtures::motivating_boolean();
        let e = b.to_goal_game();
        let coarse = TransferGrid::new(2.0, 4.0).unwrap();
        let fine = TransferGrid::new(1.0, 4.0).unwrap();
        for i in 0..2 {
            let c = solo_payoff(&e, i, &coarse, Exec::Sequential).unwrap().value;
            let f = solo_payoff(&e, i, &fine, Exec::Sequential).unwrap().value;
            assert!(f >= c - TOL);
        }
    }

    #[test]
    fn shareability_examples() {
        let b = fixtures::common_goal_boolean();
        let all = b.num_valuations() - 1;
        let a = is_shareable(&b, all).unwrap();
        assert_eq!(a.len(), 2);
        assert_ne!(a[0].1, a[1].1);
        for &(_, w) in &a {
            assert!(b.players_differing(all, w) >= 2);
        }
        // one atom each: only one valuation differs from v in both players' parts
        let small = fixtures::one_atom_common_goal();
        let v = small.num_valuations() - 1;
        assert!(!is_potentially_shareable(&small, v));
        assert!(is_shareable(&small, v).is_none());
        // no goal players at v: vacuous
        assert_eq!(is_shareable(&small, 0), Some(vec![]));
    }

    #[test]
    fn fig6_outcome_is_not_shareable() {
        let b = fixtures::fig6_boolean();
        let v = b.parse_valuation("p=1,q=1,r=1").unwrap();
        assert!(is_potentially_shareable(&b, v));
        assert!(is_shareable(&b, v).is_none());
    }

    #[test]
    fn fig6_synthesis_does_not_certify() {
        let b = fixtures::fig6_boolean();
        let v = b.parse_valuation("p=1,q=1,r=1").unwrap();
        let e = b.to_goal_game();
        let off = b.profile_of(b.parse_valuation("p=0,q=0,r=0").unwrap());
        let grid = TransferGrid::new(10.0, 30.0)
            .unwrap()
            .with_support(vec![off]);
        let sigma = b.profile_of(v);
        let shortfall = |e: &EndogenousGame| {
            let c = check_survival_sufficient(e, sigma, &grid, Exec::Parallel).unwrap();
            assert_eq!(c.verdict, SurvivalVerdict::NotApplicable);
            c.solo[0].value - c.utilities[0]
        };
        let before = shortfall(&e);
        let Err(SynthError::CapExceeded {
            tax,
            iterations,
            blocking,
        }) = synth_tax(&e, sigma, &grid, 5, Exec::Parallel)
        else {
            panic!("expected the cap to be hit");
        };
        assert_eq!((iterations, blocking), (5, vec![0, 1, 2]));
        assert_eq!(before, 30.0);
        // each round widens the gap between solo payoff and on-path utility by one
        let taxed = e.with_tax(&tax, e.budget_policy()).unwrap();
        assert!(before > 0.0);
        assert!((shortfall(&taxed) - before - 5.0).abs() < 1e-9);
    }

    #[test]
    fn joint_goal_survives_under_offset() {
        let (g, goals) = fixtures::joint_goal_game();
        let e = EndogenousGame::strategic(g, goals, offset(2, 1.0)).unwrap();
        let grid = TransferGrid::new(1.0, 2.0).unwrap();
        let cert = check_survival_sufficient(&e, 0, &grid, Exec::Parallel).unwrap();
        assert_eq!(cert.verdict, SurvivalVerdict::Certified);
        assert_eq!(cert.on_path_kappa, 0.0);
        let non = find_nonsurvival_certificate(&e, 0, &grid, DEFAULT_CANDIDATE_CAP, Exec::Parallel)
            .unwrap();
        assert!(non.is_none());
    }

    #[test]
    fn survival_requires_equilibrium() {
        let (g, goals) = fixtures::fig1();
        let e = EndogenousGame::strategic(g, goals, offset(2, 1.0)).unwrap();
        let grid = TransferGrid::new(1.0, 1.0).unwrap();
        assert_eq!(
            check_survival_sufficient(&e, 0, &grid, Exec::Sequential),
            Err(GameError::NotNashEquilibrium(0))
        );
    }

    #[test]
    fn synth_tax_guard() {
        let (g, goals) = fixtures::fig1();
        let e = EndogenousGame::strategic(g, goals, offset(2, 1.0)).unwrap();
        let grid = TransferGrid::new(1.0, 1.0).unwrap();
        // at (U,R) Row reaches its goal (D,R) by deviating
        let ur = e.game.profile_index(&[0, 1]).unwrap();
        assert!(matches!(
            synth_tax(&e, ur, &grid, 5, Exec::Sequential),
            Err(SynthError::Guard { player: 0 })
        ));
    }

    #[test]
    fn nonsurvival_two_player_toy() {
        let (g, goals) = fixtures::asymmetry_game();
        let e = EndogenousGame::strategic(g, goals, offset(2, 3.0)).unwrap();
        let grid = TransferGrid::new(1.0, 1.0).unwrap();
        let ne = pure_ne(&e.utility(&TransferFunction::zero(&e.game)).unwrap().game);
        for p in ne {
            let sol = analyze(&e, p, &grid, DEFAULT_CANDIDATE_CAP, Exec::Parallel).unwrap();
            assert_ne!(sol.status, SolutionStatus::Undecided, "profile {p}");
        }
    }
}
