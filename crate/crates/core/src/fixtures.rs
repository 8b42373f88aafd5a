//! Small named instances used in tests, benches and the CLI demo.

use crate::boolean::BooleanGame;
use crate::formula::Formula;
use crate::game::{GoalAssignment, StrategicGame};
use crate::transfers::TransferFunction;

fn labels(rows: &[&str], cols: &[&str]) -> Vec<Vec<String>> {
    vec![
        rows.iter().map(|s| s.to_string()).collect(),
        cols.iter().map(|s| s.to_string()).collect(),
    ]
}

fn names(atoms: &[&str]) -> Vec<String> {
    atoms.iter().map(|s| s.to_string()).collect()
}

fn formula(text: &str, atoms: &[String]) -> Formula {
    crate::formula::parse(text, atoms).expect("fixture formulas parse")
}

/// Prisoner's-dilemma payoffs over `{U, D} × {L, R}`: Row wants (D,R),
/// Column wants (D,L) or (D,R).
pub fn fig1() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::new(
        labels(&["U", "D"], &["L", "R"]),
        vec![3.0, 3.0, 0.0, 5.0, 5.0, 0.0, 1.0, 1.0],
    )
    .expect("valid game");
    let goals = GoalAssignment::from_indices(&g, &[vec![3], vec![2, 3]]).expect("valid goals");
    (g, goals)
}

/// [`fig1`] with every payoff negated.
pub fn fig2_left() -> (StrategicGame, GoalAssignment) {
    let (g, goals) = fig1();
    let negated = g.payoffs().iter().map(|x| -x).collect();
    (g.with_payoffs(negated).expect("valid payoffs"), goals)
}

/// Strategic form of [`fig3_boolean`] over `{sR, ~sR} × {sC, ~sC}` with `π = −c`.
pub fn fig3_cost_game() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::new(
        labels(&["sR", "~sR"], &["sC", "~sC"]),
        vec![-3.0, -3.0, 0.0, -5.0, -5.0, 0.0, -1.0, -1.0],
    )
    .expect("valid game");
    let goals = GoalAssignment::from_indices(&g, &[vec![3], vec![2, 3]]).expect("valid goals");
    (g, goals)
}

/// Row controls `sR`, Column controls `sC`; goals `~sR & ~sC` and `~sR`.
pub fn fig3_boolean() -> BooleanGame {
    let atoms = names(&["sR", "sC"]);
    let goals = vec![formula("~sR & ~sC", &atoms), formula("~sR", &atoms)];
    BooleanGame::from_cost_fn(atoms, vec![vec![0], vec![1]], goals, 1.0, |v, i| {
        match (v[0], v[1]) {
            (true, true) => 3.0,
            (true, false) => [0.0, 5.0][i],
            (false, true) => [5.0, 0.0][i],
            (false, false) => 1.0,
        }
    })
    .expect("valid boolean game")
}

/// Matching-pennies style goals with a single non-zero payoff at (D,L) for Row.
pub fn fig5() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::new(
        labels(&["U", "D"], &["L", "R"]),
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    )
    .expect("valid game");
    let goals = GoalAssignment::from_indices(&g, &[vec![0, 3], vec![1, 2]]).expect("valid goals");
    (g, goals)
}

/// Player a controls `sa` and wants `sb`; b controls `sb` and wants both on.
/// Costs: a pays 5 with `sa` on and 4 otherwise, b always pays 2.
pub fn motivating_boolean() -> BooleanGame {
    let atoms = names(&["sa", "sb"]);
    let goals = vec![formula("sb", &atoms), formula("sa & sb", &atoms)];
    BooleanGame::from_cost_fn(atoms, vec![vec![0], vec![1]], goals, 1.0, |v, i| match i {
        0 if v[0] => 5.0,
        0 => 4.0,
        _ => 2.0,
    })
    .expect("valid boolean game")
}

/// Three players each controlling and wanting their own atom; everyone pays
/// 10 when all atoms are false and nothing otherwise.
pub fn fig6_boolean() -> BooleanGame {
    let atoms = names(&["p", "q", "r"]);
    let goals = vec![
        formula("p", &atoms),
        formula("q", &atoms),
        formula("r", &atoms),
    ];
    BooleanGame::from_cost_fn(
        atoms,
        vec![vec![0], vec![1], vec![2]],
        goals,
        1.0,
        |v, _| {
            if v.iter().any(|&b| b) {
                0.0
            } else {
                10.0
            }
        },
    )
    .expect("valid boolean game")
}

/// All-zero 2×2 game where only player 0 has a goal, at `(0, 0)`.
pub fn asymmetry_game() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::zeros(&[2, 2]).expect("valid shape");
    let goals = GoalAssignment::from_indices(&g, &[vec![0], vec![]]).expect("valid goals");
    (g, goals)
}

/// [`asymmetry_game`] with player 0 paying player 1 two units off its goal.
pub fn asymmetry_instance() -> (StrategicGame, GoalAssignment, TransferFunction) {
    let (g, goals) = asymmetry_game();
    let mut t = TransferFunction::zero(&g);
    for p in 1..g.num_profiles() {
        t.set(0, p, 1, 2.0).expect("valid transfer");
    }
    (g, goals, t)
}

/// All-zero 2×2 game where both players share the goal `(0, 0)`.
pub fn joint_goal_game() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::zeros(&[2, 2]).expect("valid shape");
    let goals = GoalAssignment::from_indices(&g, &[vec![0], vec![0]]).expect("valid goals");
    (g, goals)
}

/// Three players with an all-zero game; A and B have one strategy each, C
/// chooses between `c*` and `c'`. Only A has a goal, at `(a*, b*, c*)`.
pub fn three_player_single_goal() -> (StrategicGame, GoalAssignment) {
    let g = StrategicGame::new(
        vec![
            vec!["a*".into()],
            vec!["b*".into()],
            vec!["c*".into(), "c'".into()],
        ],
        vec![0.0; 6],
    )
    .expect("valid game");
    let goals = GoalAssignment::from_indices(&g, &[vec![0], vec![], vec![]]).expect("valid goals");
    (g, goals)
}

/// Two players with two atoms each, no costs, and the common goal that every atom is true.
pub fn common_goal_boolean() -> BooleanGame {
    let atoms = names(&["p1", "p2", "q1", "q2"]);
    let goal = formula("p1 & p2 & q1 & q2", &atoms);
    BooleanGame::from_cost_fn(
        atoms,
        vec![vec![0, 1], vec![2, 3]],
        vec![goal.clone(), goal],
        1.0,
        |_, _| 0.0,
    )
    .expect("valid boolean game")
}

/// Two players with one atom each, no costs, and the common goal `p & q`.
pub fn one_atom_common_goal() -> BooleanGame {
    let atoms = names(&["p", "q"]);
    let goal = formula("p & q", &atoms);
    BooleanGame::from_cost_fn(
        atoms,
        vec![vec![0], vec![1]],
        vec![goal.clone(), goal],
        1.0,
        |_, _| 0.0,
    )
    .expect("valid boolean game")
}
