//! Nash equilibria, the lexicographic preference over mixed profiles, and
//! iterated dominance.

use std::cmp::Ordering;

use crate::error::GameError;
use crate::game::{GoalAssignment, MixedProfile, StrategicGame};
use crate::TOL;

/// True iff no player gains more than [`TOL`] by a unilateral pure deviation.
pub fn is_pure_ne(game: &StrategicGame, index: usize) -> bool {
    is_pure_ne_raw(game.payoffs(), &game.shape(), game.strides(), index)
}

pub(crate) fn is_pure_ne_raw(
    payoffs: &[f64],
    shape: &[usize],
    strides: &[usize],
    index: usize,
) -> bool {
    let n = shape.len();
    for i in 0..n {
        let own = (index / strides[i]) % shape[i];
        let base = index - own * strides[i];
        let cur = payoffs[index * n + i];
        for t in 0..shape[i] {
            if t != own && payoffs[(base + t * strides[i]) * n + i] > cur + TOL {
                return false;
            }
        }
    }
    true
}

/// All pure Nash equilibria, as flat profile indices in increasing order.
pub fn pure_ne(game: &StrategicGame) -> Vec<usize> {
    let shape = game.shape();
    (0..game.num_profiles())
        .filter(|&k| is_pure_ne_raw(game.payoffs(), &shape, game.strides(), k))
        .collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(a: &mut [f64], b: &mut [f64], dim: usize) -> bool {
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r, &s| a[r * dim + col].abs().total_cmp(&a[s * dim + col].abs()))
            .unwrap();
        if a[pivot * dim + col].abs() < 1e-12 {
            return false;
        }
        if pivot != col {
            for c in 0..dim {
                a.swap(pivot * dim + c, col * dim + c);
            }
            b.swap(pivot, col);
        }
        let p = a[col * dim + col];
        for r in col + 1..dim {
            let f = a[r * dim + col] / p;
            if f != 0.0 {
                for c in col..dim {
                    a[r * dim + c] -= f * a[col * dim + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..dim).rev() {
        let mut s = b[r];
        for c in r + 1..dim {
            s -= a[r * dim + c] * b[c];
        }
        b[r] = s / a[r * dim + r];
    }
    true
}

/// Vertices of `{z ≥ 0, M z ≤ 1}` (`M` is `rows × dim`, row-major) with their label sets.
///
/// Label `k < dim` means `z_k = 0`; label `dim + r` means row `r` is tight.
/// Labels are returned as bitmasks over `dim + rows` positions.
fn polytope_vertices(m: &[f64], rows: usize, dim: usize) -> Vec<(Vec<f64>, u64)> {
    let total = dim + rows;
    let mut out: Vec<(Vec<f64>, u64)> = Vec::new();
    let mut a = vec![0.0; dim * dim];
    let mut b = vec![0.0; dim];
    let mut chosen: Vec<usize> = (0..dim).collect();
    loop {
        // Equality system from the chosen tight constraints.
        a.iter_mut().for_each(|x| *x = 0.0);
        for (r, &c) in chosen.iter().enumerate() {
            if c < dim {
                a[r * dim + c] = 1.0;
                b[r] = 0.0;
            } else {
                a[r * dim..(r + 1) * dim].copy_from_slice(&m[(c - dim) * dim..(c - dim + 1) * dim]);
                b[r] = 1.0;
            }
        }
        if solve(&mut a, &mut b, dim) {
            let z = &b;
            let feasible = z.iter().all(|&x| x >= -1e-9)
                && (0..rows).all(|r| {
                    let s: f64 = (0..dim).map(|c| m[r * dim + c] * z[c]).sum();
                    s <= 1.0 + 1e-9
                });
            if feasible {
                let mut labels = 0u64;
                for (k, &x) in z.iter().enumerate() {
                    if x.abs() <= 1e-9 {
                        labels |= 1 << k;
                    }
                }
                for r in 0..rows {
                    let s: f64 = (0..dim).map(|c| m[r * dim + c] * z[c]).sum();
                    if (s - 1.0).abs() <= 1e-9 {
                        labels |= 1 << (dim + r);
                    }
                }
                let zc: Vec<f64> = z.iter().map(|&x| x.max(0.0)).collect();
                if !out
                    .iter()
                    .any(|(w, _)| w.iter().zip(&zc).all(|(p, q)| (p - q).abs() <= 1e-9))
                {
                    out.push((zc, labels));
                }
            }
        }
        // next combination of `dim` out of `total`
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if chosen[i] != i + total - dim {
                break;
            }
        }
        chosen[i] += 1;
        for j in i + 1..dim {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

/// Mixed equilibria of a bimatrix given as row-major `m × n` payoff matrices.
///
/// Extreme equilibria are found by enumerating completely labeled vertex
/// pairs of the two best-response polytopes, so degenerate games are handled.
pub(crate) fn bimatrix_equilibria(
    a: &[f64],
    b: &[f64],
    m: usize,
    n: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert!(m + n <= 64, "bimatrix too large for label masks");
    let shift = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        v.iter().map(|x| x - lo + 1.0).collect::<Vec<f64>>()
    };
    let a = shift(a);
    let b = shift(b);
    // P = {x ∈ R^m : x ≥ 0, Bᵀ x ≤ 1}: labels 0..m for x_i = 0, m.. for columns.
    let mut bt = vec![0.0; n * m];
    for i in 0..m {
        for j in 0..n {
            bt[j * m + i] = b[i * n + j];
        }
    }
    let p = polytope_vertices(&bt, n, m);
    // Q = {y ∈ R^n : y ≥ 0, A y ≤ 1}: y_j = 0 is label m + j, row i tight is label i.
    let q: Vec<(Vec<f64>, u64)> = polytope_vertices(&a, m, n)
        .into_iter()
        .map(|(y, l)| {
            let zeros = l & ((1u64 << n) - 1);
            let rows = l >> n;
            (y, (zeros << m) | rows)
        })
        .collect();
    let full = if m + n == 64 {
        u64::MAX
    } else {
        (1u64 << (m + n)) - 1
    };
    let mut out = Vec::new();
    for (x, lx) in &p {
        let sx: f64 = x.iter().sum();
        if sx <= 1e-12 {
            continue;
        }
        for (y, ly) in &q {
            let sy: f64 = y.iter().sum();
            if sy <= 1e-12 || lx | ly != full {
                continue;
            }
            out.push((
                x.iter().map(|v| v / sx).collect(),
                y.iter().map(|v| v / sy).collect(),
            ));
        }
    }
    out
}

/// Largest gain any player can get from a pure deviation against `delta`.
pub fn best_response_gap(game: &StrategicGame, delta: &MixedProfile) -> f64 {
    let n = game.num_players();
    let mut gap = 0.0f64;
    for i in 0..n {
        let k = game.num_strategies(i);
        let mut vals = vec![0.0; k];
        for idx in 0..game.num_profiles() {
            let s = game.strategy_of(idx, i);
            let others: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| delta.probs[j][game.strategy_of(idx, j)])
                .product();
            vals[s] += others * game.payoff(idx, i);
        }
        let cur: f64 = vals.iter().zip(&delta.probs[i]).map(|(v, p)| v * p).sum();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - cur);
    }
    gap
}

/// Extreme mixed Nash equilibria of a two-player game, canonically sorted.
pub fn mixed_ne_2p(game: &StrategicGame) -> Result<Vec<MixedProfile>, GameError> {
    if game.num_players() != 2 {
        return Err(GameError::PlayerCount {
            expected: 2,
            got: game.num_players(),
        });
    }
    let (m, n) = (game.num_strategies(0), game.num_strategies(1));
    let a: Vec<f64> = (0..m * n).map(|k| game.payoff(k, 0)).collect();
    let b: Vec<f64> = (0..m * n).map(|k| game.payoff(k, 1)).collect();
    let mut out: Vec<MixedProfile> = bimatrix_equilibria(&a, &b, m, n)
        .into_iter()
        .map(|(x, y)| MixedProfile {
            probs: vec![clean(x), clean(y)],
        })
        .collect();
    out.sort_by(cmp_profiles);
    out.dedup_by(|p, q| cmp_profiles(p, q) == Ordering::Equal);
    Ok(out)
}

fn clean(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if x.abs() < 1e-12 {
            *x = 0.0;
        }
    }
    v
}

fn cmp_profiles(p: &MixedProfile, q: &MixedProfile) -> Ordering {
    for (a, b) in p.probs.iter().flatten().zip(q.probs.iter().flatten()) {
        if (a - b).abs() > 1e-9 {
            // larger weight on earlier strategies first, so pure profiles
            // come out in lexicographic order
            return b.total_cmp(a);
        }
    }
    Ordering::Equal
}

/// A player's view of a mixed profile: goal probability, then expected payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexValue {
    pub goal_prob: f64,
    pub exp_payoff: f64,
}

impl LexValue {
    pub fn of(
        game: &StrategicGame,
        goals: &GoalAssignment,
        delta: &MixedProfile,
        player: usize,
    ) -> Self {
        let mut g = 0.0;
        let mut e = 0.0;
        for idx in 0..game.num_profiles() {
            let p = delta.prob_of(game, idx);
            if p > 0.0 {
                e += p * game.payoff(idx, player);
                if goals.contains(player, idx) {
                    g += p;
                }
            }
        }
        LexValue {
            goal_prob: g,
            exp_payoff: e,
        }
    }

    /// Lexicographic comparison with tolerance [`TOL`] on each coordinate.
    pub fn compare(&self, other: &LexValue) -> Ordering {
        if (self.goal_prob - other.goal_prob).abs() > TOL {
            return self.goal_prob.total_cmp(&other.goal_prob);
        }
        if (self.exp_payoff - other.exp_payoff).abs() > TOL {
            return self.exp_payoff.total_cmp(&other.exp_payoff);
        }
        Ordering::Equal
    }
}

/// How `player` ranks `d1` against `d2`.
pub fn lex_compare(
    game: &StrategicGame,
    goals: &GoalAssignment,
    d1: &MixedProfile,
    d2: &MixedProfile,
    player: usize,
) -> Result<Ordering, GameError> {
    game.check_player(player)?;
    goals.check_compatible(game)?;
    d1.validate(game)?;
    d2.validate(game)?;
    Ok(LexValue::of(game, goals, d1, player).compare(&LexValue::of(game, goals, d2, player)))
}

/// All probability vectors over `k` strategies with entries in multiples of `1/res`.
pub fn simplex_grid(k: usize, res: usize) -> Vec<Vec<f64>> {
    fn go(k: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            go(k, left - c, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(k, res, res, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Per pure strategy of `player`: lex value against the others' part of `delta`.
fn pure_lex_values(
    game: &StrategicGame,
    goals: &GoalAssignment,
    delta: &[&[f64]],
    player: usize,
) -> Vec<LexValue> {
    let k = game.num_strategies(player);
    let mut vals = vec![
        LexValue {
            goal_prob: 0.0,
            exp_payoff: 0.0
        };
        k
    ];
    for idx in 0..game.num_profiles() {
        let mut w = 1.0;
        for (j, d) in delta.iter().enumerate() {
            if j != player {
                w *= d[game.strategy_of(idx, j)];
            }
        }
        if w == 0.0 {
            continue;
        }
        let v = &mut vals[game.strategy_of(idx, player)];
        v.exp_payoff += w * game.payoff(idx, player);
        if goals.contains(player, idx) {
            v.goal_prob += w;
        }
    }
    vals
}

fn mix(vals: &[LexValue], d: &[f64]) -> LexValue {
    let mut out = LexValue {
        goal_prob: 0.0,
        exp_payoff: 0.0,
    };
    for (v, &p) in vals.iter().zip(d) {
        out.goal_prob += p * v.goal_prob;
        out.exp_payoff += p * v.exp_payoff;
    }
    out
}

/// Grid profiles at which no player has a lex-improving deviation to a grid
/// or pure strategy. `None` when there is no such profile.
///
/// Only a certificate at resolution `k`: the preference has no utility
/// representation, so the scan cannot be replaced by an exact solver.
pub fn lex_ne_search(
    game: &StrategicGame,
    goals: &GoalAssignment,
    k: usize,
) -> Result<Option<Vec<MixedProfile>>, GameError> {
    goals.check_compatible(game)?;
    if k < 1 {
        return Err(GameError::InvalidMixed {
            player: 0,
            reason: "grid resolution must be positive".into(),
        });
    }
    let n = game.num_players();
    let grids: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| simplex_grid(game.num_strategies(i), k))
        .collect();
    let sizes: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut found = Vec::new();
    let mut pick = vec![0usize; n];
    for mut c in 0..total {
        for i in (0..n).rev() {
            pick[i] = c % sizes[i];
            c /= sizes[i];
        }
        let delta: Vec<&[f64]> = (0..n).map(|i| grids[i][pick[i]].as_slice()).collect();
        let stable = (0..n).all(|i| {
            let vals = pure_lex_values(game, goals, &delta, i);
            let cur = mix(&vals, delta[i]);
            grids[i]
                .iter()
                .all(|d| mix(&vals, d).compare(&cur) != Ordering::Greater)
        });
        if stable {
            found.push(MixedProfile {
                probs: delta.iter().map(|d| d.to_vec()).collect(),
            });
        }
    }
    Ok((!found.is_empty()).then_some(found))
}

/// Pure profiles from which no player has a lex-improving pure deviation.
pub fn pure_lex_ne(game: &StrategicGame, goals: &GoalAssignment) -> Result<Vec<usize>, GameError> {
    goals.check_compatible(game)?;
    let n = game.num_players();
    let value = |idx: usize, i: usize| LexValue {
        goal_prob: goals.contains(i, idx) as u8 as f64,
        exp_payoff: game.payoff(idx, i),
    };
    Ok((0..game.num_profiles())
        .filter(|&idx| {
            (0..n).all(|i| {
                let cur = value(idx, i);
                (0..game.num_strategies(i))
                    .all(|t| value(game.deviate(idx, i, t), i).compare(&cur) != Ordering::Greater)
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceMode {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominators {
    Pure,
    /// Mixtures of the player's surviving strategies in steps of `1/k`.
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub player: usize,
    /// Index of the removed strategy in the original game.
    pub strategy: usize,
    pub label: String,
    /// Dominating mixture as `(original strategy index, weight)` pairs.
    pub dominator: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub game: StrategicGame,
    pub goals: GoalAssignment,
    /// Surviving original strategy indices per player.
    pub kept: Vec<Vec<usize>>,
    pub trace: Vec<Elimination>,
}

/// Iterated elimination of lex-dominated strategies.
///
/// One strategy is removed per round, the first dominated one in declared
/// player and strategy order, and the scan restarts. Dominance is checked
/// against pure opponent profiles, which suffices because both lex
/// coordinates are linear in the opponents' mixture.
pub fn dominance_eliminate(
    game: &StrategicGame,
    goals: &GoalAssignment,
    mode: DominanceMode,
    dominators: Dominators,
) -> Result<Reduction, GameError> {
    goals.check_compatible(game)?;
    if let Dominators::Grid(0) = dominators {
        return Err(GameError::InvalidMixed {
            player: 0,
            reason: "grid resolution must be positive".into(),
        });
    }
    let n = game.num_players();
    let mut kept: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..game.num_strategies(i)).collect())
        .collect();
    let mut trace = Vec::new();
    'outer: loop {
        for i in 0..n {
            if kept[i].len() < 2 {
                continue;
            }
            // opponent pure profiles over surviving strategies, as profiles with i's slot at 0
            let mut others = kept.clone();
            others[i] = vec![0];
            let (_, opp) = game.restrict(&others)?;
            let val = |idx: usize| LexValue {
                goal_prob: goals.contains(i, idx) as u8 as f64,
                exp_payoff: game.payoff(idx, i),
            };
            for (pos, &s) in kept[i].iter().enumerate() {
                let rest: Vec<usize> = kept[i].iter().copied().filter(|&t| t != s).collect();
                let candidates: Vec<Vec<(usize, f64)>> = match dominators {
                    Dominators::Pure => rest.iter().map(|&t| vec![(t, 1.0)]).collect(),
                    Dominators::Grid(k) => simplex_grid(rest.len(), k)
                        .into_iter()
                        .map(|w| {
                            rest.iter()
                                .copied()
                                .zip(w)
                                .filter(|&(_, p)| p > 0.0)
                                .collect()
                        })
                        .collect(),
                };
                for d in candidates {
                    let mut strict_somewhere = false;
                    let mut ok = true;
                    for &o in &opp {
                        let mine = val(game.deviate(o, i, s));
                        let theirs = d.iter().fold(
                            LexValue {
                                goal_prob: 0.0,
                                exp_payoff: 0.0,
                            },
                            |acc, &(t, p)| {
                                let v = val(game.deviate(o, i, t));
                                LexValue {
                                    goal_prob: acc.goal_prob + p * v.goal_prob,
                                    exp_payoff: acc.exp_payoff + p * v.exp_payoff,
                                }
                            },
                        );
                        match theirs.compare(&mine) {
                            Ordering::Greater => strict_somewhere = true,
                            Ordering::Equal if mode == DominanceMode::Weak => {}
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && strict_somewhere {
                        trace.push(Elimination {
                            player: i,
                            strategy: s,
                            label: game.labels(i)[s].clone(),
                            dominator: d,
                        });
                        kept[i].remove(pos);
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    let (reduced, map) = game.restrict(&kept)?;
    Ok(Reduction {
        goals: goals.restrict(&map),
        game: reduced,
        kept,
        trace,
    })
}
