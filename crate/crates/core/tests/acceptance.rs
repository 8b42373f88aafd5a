//! Acceptance suite: one PASS/FAIL line per criterion, each run against its
//! time limit. Run with `cargo test --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use goalgames::boost::{instantiate, penalized_utility, BoostSpec, Boosts};
use goalgames::endogenous::{
    check_survival_sufficient, find_nonsurvival_certificate, improving_deviations, synth_tax,
    EndogenousGame, SurvivalVerdict, TransferGrid, DEFAULT_CANDIDATE_CAP,
};
use goalgames::equilibria::{
    dominance_eliminate, is_pure_ne, lex_compare, lex_ne_search, pure_lex_ne, pure_ne,
    DominanceMode, Dominators,
};
use goalgames::fixtures;
use goalgames::game::{
    affine_transform, BudgetConstraints, GoalAssignment, MixedProfile, StrategicGame,
};
use goalgames::transfers::{
    apply_tax, apply_transfers, composition_orders, normalize, tax_from_transfers, TransferFunction,
};
use goalgames::{Exec, TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ms(x: f64) -> Duration {
    Duration::from_secs_f64(x / 1000.0)
}

fn crit1() -> Outcome {
    let (g, goals) = fixtures::fig2_left();
    let boosts = Boosts::uniform(BoostSpec::offset(3.0).unwrap(), 2);
    let u = instantiate(&g, &goals, &boosts).map_err(|e| e.to_string())?;
    let want = [-3.0, -3.0, 0.0, -5.0, -5.0, 1.0, 3.0, 0.0];
    ensure(u.payoffs() == want, || format!("got {:?}", u.payoffs()))?;
    Ok(format!("{:?}", u.payoffs()))
}

fn crit2() -> Outcome {
    let b = fixtures::fig3_boolean();
    let e = b.to_goal_game();
    let u = instantiate(&e.game, &e.goals, &e.boosts).map_err(|e| e.to_string())?;
    let at = |val: &str| {
        let p = b.profile_of(b.parse_valuation(val).unwrap());
        u.payoff_vec(p).to_vec()
    };
    let got = [
        at("sR=1,sC=1"),
        at("sR=1,sC=0"),
        at("sR=0,sC=1"),
        at("sR=0,sC=0"),
    ];
    let want = [
        vec![-3.0, -3.0],
        vec![0.0, -5.0],
        vec![-5.0, 6.0],
        vec![5.0, 5.0],
    ];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok(format!("{got:?}"))
}

fn crit3() -> Outcome {
    let b = fixtures::motivating_boolean();
    let e = b.to_goal_game();
    let on = b.profile_of(b.parse_valuation("sa=1,sb=1").unwrap());
    let mut t = TransferFunction::zero(&e.game);
    t.set(1, on, 0, 3.0).unwrap();
    let p = e.utility(&t).map_err(|e| e.to_string())?;
    ensure(is_pure_ne(&p.game, on), || {
        "(on,on) is not an equilibrium under the offer".into()
    })?;
    ensure(
        b.satisfies(b.valuation_of(on), 0) && b.satisfies(b.valuation_of(on), 1),
        || "goals unmet".into(),
    )?;
    ensure(p.punishment.kappa == 0.0, || {
        format!("kappa {}", p.punishment.kappa)
    })?;
    let here = p.game.payoff_vec(on).to_vec();
    let grid = TransferGrid::new(1.0, 5.0).unwrap();
    let devs =
        improving_deviations(&e, &t, on, 1, &grid, Exec::Parallel).map_err(|e| e.to_string())?;
    let cheaper: Vec<_> = devs
        .iter()
        .filter(|d| d.transfer.get(1, on, 0) < 3.0)
        .collect();
    ensure(!cheaper.is_empty(), || {
        format!("{} improving offers, none cheaper at (on,on)", devs.len())
    })?;
    let best = cheaper
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    Ok(format!(
        "offer utilities {here:?}; {} strictly improving offers for b, {} pay < 3 at (on,on); best guarantees {}",
        devs.len(),
        cheaper.len(),
        best.value
    ))
}

fn crit4_game() -> EndogenousGame {
    let (g, goals) = fixtures::three_player_single_goal();
    EndogenousGame::strategic(
        g,
        goals,
        Boosts::uniform(BoostSpec::offset(3.0).unwrap(), 3),
    )
    .unwrap()
}

fn crit4() -> Outcome {
    let e = crit4_game();
    let grid = TransferGrid::new(1.0, 3.0).unwrap();
    let u = e
        .utility(&TransferFunction::zero(&e.game))
        .map_err(|e| e.to_string())?;
    let star = 0;
    let others: Vec<usize> = pure_ne(&u.game)
        .into_iter()
        .filter(|&p| p != star)
        .collect();
    ensure(!others.is_empty(), || {
        "no equilibrium besides the goal profile".into()
    })?;
    let mut notes = Vec::new();
    for p in others {
        let cert =
            find_nonsurvival_certificate(&e, p, &grid, DEFAULT_CANDIDATE_CAP, Exec::Parallel)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| {
                    format!(
                        "profile {:?} has an undefeated candidate",
                        e.game.profile_labels(p)
                    )
                })?;
        notes.push(format!(
            "{:?}: {} candidates, {} on path, all defeated",
            e.game.profile_labels(p),
            cert.candidates,
            cert.on_path_candidates
        ));
    }
    Ok(notes.join("; "))
}

fn crit5() -> Outcome {
    let b = fixtures::fig6_boolean();
    let e = b.to_goal_game();
    let all_false = b.profile_of(0);
    let target = b.profile_of(b.parse_valuation("p=1,q=1,r=1").unwrap());
    let u = e
        .utility(&TransferFunction::zero(&e.game))
        .map_err(|e| e.to_string())?;
    ensure(pure_ne(&u.game) == vec![target], || {
        format!("equilibria {:?}", pure_ne(&u.game))
    })?;
    let grid = TransferGrid::new(10.0, 30.0)
        .unwrap()
        .with_support(vec![all_false]);
    let cert =
        find_nonsurvival_certificate(&e, target, &grid, DEFAULT_CANDIDATE_CAP, Exec::Parallel)
            .map_err(|e| e.to_string())?
            .ok_or("an on-path candidate is undefeated")?;
    let w = cert.zero_witness.ok_or("no witness at the zero transfer")?;
    ensure((w.value - 31.0).abs() <= TOL, || {
        format!(
            "witness value {} via {:?}",
            w.value,
            w.transfer.entries().collect::<Vec<_>>()
        )
    })?;
    Ok(format!(
        "{} candidates, {} on path; zero-transfer witness: player {} ({:?}) guarantees {}",
        cert.candidates, cert.on_path_candidates, w.player, w.kind, w.value
    ))
}

fn crit6() -> Outcome {
    let b = fixtures::common_goal_boolean();
    let e = b.to_goal_game();
    let v = b.num_valuations() - 1;
    let p = b.profile_of(v);
    ensure(goalgames::endogenous::is_shareable(&b, v).is_some(), || {
        "not shareable".into()
    })?;
    let grid = TransferGrid::new(1.0, 1.0).unwrap();
    let cert =
        check_survival_sufficient(&e, p, &grid, Exec::Parallel).map_err(|e| e.to_string())?;
    let solo: Vec<f64> = cert.solo.iter().map(|s| s.value).collect();
    ensure(cert.verdict == SurvivalVerdict::Certified, || {
        format!(
            "not certified: utilities {:?}, solo {:?}, short {:?}",
            cert.utilities, solo, cert.short
        )
    })?;
    Ok(format!(
        "utilities {:?} >= solo payoffs {:?}",
        cert.utilities, solo
    ))
}

fn crit7() -> Outcome {
    let e = crit4_game();
    let grid = TransferGrid::new(1.0, 3.0).unwrap();
    let star = 0;
    let s = synth_tax(&e, star, &grid, 50, Exec::Parallel).map_err(|e| e.to_string())?;
    let taxed = e
        .with_tax(&s.tax, e.budget_policy())
        .map_err(|e| e.to_string())?;
    let cert = check_survival_sufficient(&taxed, star, &grid, Exec::Parallel)
        .map_err(|e| e.to_string())?;
    ensure(cert.verdict == SurvivalVerdict::Certified, || {
        "taxed game not certified".into()
    })?;
    let non =
        find_nonsurvival_certificate(&taxed, star, &grid, DEFAULT_CANDIDATE_CAP, Exec::Parallel)
            .map_err(|e| e.to_string())?;
    ensure(non.is_none(), || "non-survival certificate found".into())?;
    Ok(format!(
        "certified after {} iterations, total tax {}",
        s.iterations,
        (0..3).map(|i| s.tax.total(i)).sum::<f64>()
    ))
}

fn crit8() -> Outcome {
    let (g, goals) = fixtures::fig5();
    for k in 2..=20 {
        let r = lex_ne_search(&g, &goals, k).map_err(|e| e.to_string())?;
        ensure(r.is_none(), || format!("grid {k} found {r:?}"))?;
    }
    let pure = pure_lex_ne(&g, &goals).map_err(|e| e.to_string())?;
    ensure(pure.is_empty(), || format!("pure lex equilibria {pure:?}"))?;
    Ok("no lex equilibrium for k = 2..20, none pure".into())
}

const SAMPLES: usize = 10_000;

fn random_game(rng: &mut ChaCha8Rng, max_players: usize, max_strats: usize) -> StrategicGame {
    let n = rng.gen_range(2..=max_players);
    let shape: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_strats)).collect();
    StrategicGame::from_fn(&shape, |_| {
        (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect()
    })
    .unwrap()
}

fn random_goals(rng: &mut ChaCha8Rng, g: &StrategicGame) -> GoalAssignment {
    let sets: Vec<Vec<usize>> = (0..g.num_players())
        .map(|_| {
            (0..g.num_profiles())
                .filter(|_| rng.gen_bool(0.3))
                .collect()
        })
        .collect();
    GoalAssignment::from_indices(g, &sets).unwrap()
}

fn random_boosts(rng: &mut ChaCha8Rng, n: usize, allow_regret: bool) -> Boosts {
    Boosts(
        (0..n)
            .map(|_| {
                let x = rng.gen_range(1..=4) as f64 * 0.5;
                if !allow_regret || rng.gen_bool(0.5) {
                    BoostSpec::offset(x).unwrap()
                } else {
                    BoostSpec::regret(x).unwrap()
                }
            })
            .collect(),
    )
}

fn random_transfer(rng: &mut ChaCha8Rng, g: &StrategicGame) -> TransferFunction {
    let n = g.num_players();
    let mut t = TransferFunction::zero(g);
    for giver in 0..n {
        for p in 0..g.num_profiles() {
            for r in (0..n).filter(|&r| r != giver) {
                if rng.gen_bool(0.25) {
                    t.set(giver, p, r, rng.gen_range(1..=6) as f64 * 0.5)
                        .unwrap();
                }
            }
        }
    }
    t
}

fn random_mixed(rng: &mut ChaCha8Rng, g: &StrategicGame) -> MixedProfile {
    let probs = (0..g.num_players())
        .map(|i| {
            let w: Vec<f64> = (0..g.num_strategies(i))
                .map(|_| rng.gen_range(0..=4) as f64)
                .collect();
            let s: f64 = w.iter().sum();
            if s == 0.0 {
                let k = w.len();
                vec![1.0 / k as f64; k]
            } else {
                w.iter().map(|x| x / s).collect()
            }
        })
        .collect();
    MixedProfile::new(g, probs).unwrap()
}

fn suite<F: FnMut(&mut ChaCha8Rng) -> Result<(), String>>(
    name: &str,
    seed: u64,
    mut f: F,
) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first = None;
    for k in 0..SAMPLES {
        if let Err(e) = f(&mut rng) {
            failures += 1;
            first.get_or_insert(format!("sample {k}: {e}"));
        }
    }
    ensure(failures == 0, || {
        format!("{name}: {failures} failures, first {}", first.unwrap())
    })
}

fn crit9() -> Outcome {
    suite("conservation", 1, |rng| {
        let g = random_game(rng, 4, 3);
        let t = random_transfer(rng, &g);
        let h = apply_transfers(&g, &t).map_err(|e| e.to_string())?;
        for p in 0..g.num_profiles() {
            let before: f64 = g.payoff_vec(p).iter().sum();
            let after: f64 = h.payoff_vec(p).iter().sum();
            ensure((before - after).abs() <= TOL, || {
                format!("profile {p}: {before} vs {after}")
            })?;
        }
        Ok(())
    })?;
    suite("quasi-dichotomy", 2, |rng| {
        let g = random_game(rng, 3, 3);
        // the regret boost separates goals only on cost games, so those get π ≤ 0
        let cost_game = rng.gen_bool(0.5);
        let g = if cost_game {
            g.with_payoffs(g.payoffs().iter().map(|x| -x.abs()).collect())
                .unwrap()
        } else {
            g
        };
        let goals = random_goals(rng, &g);
        let boosts = random_boosts(rng, g.num_players(), cost_game);
        let u = instantiate(&g, &goals, &boosts).map_err(|e| e.to_string())?;
        for i in 0..g.num_players() {
            for a in 0..g.num_profiles() {
                for b in 0..g.num_profiles() {
                    let (ga, gb) = (goals.contains(i, a), goals.contains(i, b));
                    let (ua, ub) = (u.payoff(a, i), u.payoff(b, i));
                    let ok = if ga && !gb {
                        ua > ub
                    } else if ga == gb {
                        (ua - ub - (g.payoff(a, i) - g.payoff(b, i))).abs() <= TOL
                    } else {
                        true
                    };
                    ensure(ok, || format!("player {i}, profiles {a} {b}"))?;
                }
            }
        }
        Ok(())
    })?;
    suite("affine invariance", 3, |rng| {
        let g = random_game(rng, 3, 3);
        let n = g.num_players();
        let scale: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=8) as f64 * 0.25).collect();
        let shift: Vec<f64> = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
        let h = affine_transform(&g, &scale, &shift).map_err(|e| e.to_string())?;
        ensure(pure_ne(&g) == pure_ne(&h), || "equilibria differ".into())
    })?;
    suite("tax from transfers", 4, |rng| {
        let g = random_game(rng, 3, 3);
        let t = random_transfer(rng, &g);
        let alpha = tax_from_transfers(&g, &t).map_err(|e| e.to_string())?;
        let a = apply_transfers(&g, &t).map_err(|e| e.to_string())?;
        let b = apply_tax(&g, &alpha).map_err(|e| e.to_string())?;
        ensure(pure_ne(&a) == pure_ne(&b), || "equilibria differ".into())
    })?;
    suite("normalize", 5, |rng| {
        let g = random_game(rng, 3, 3);
        let goals = random_goals(rng, &g);
        let n = g.num_players();
        // every player needs a non-goal profile for the identity to hold with offset boosts
        let goals = GoalAssignment::from_indices(
            &g,
            &(0..n)
                .map(|i| {
                    let mine: Vec<usize> = goals.goals(i).collect();
                    if mine.len() == g.num_profiles() {
                        mine[1..].to_vec()
                    } else {
                        mine
                    }
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let boosts = Boosts(
            (0..n)
                .map(|_| BoostSpec::offset(rng.gen_range(1..=4) as f64).unwrap())
                .collect(),
        );
        let t = random_transfer(rng, &g);
        let budgets = BudgetConstraints::constant(&g, rng.gen_range(0..=8) as f64);
        let budgets = BudgetConstraints::new(
            &g,
            budgets
                .bounds()
                .iter()
                .zip(g.payoffs())
                .map(|(b, p)| b.max(*p))
                .collect(),
        )
        .unwrap();
        let updated = apply_transfers(&g, &t).map_err(|e| e.to_string())?;
        let pen = penalized_utility(&updated, &g, &goals, &boosts, &budgets)
            .map_err(|e| e.to_string())?;
        let norm = normalize(&g, &t, &budgets, &goals, &boosts).map_err(|e| e.to_string())?;
        let direct = instantiate(&norm, &goals, &boosts).map_err(|e| e.to_string())?;
        for (a, b) in pen.game.payoffs().iter().zip(direct.payoffs()) {
            ensure((a - b).abs() <= 1e-7, || format!("{a} vs {b}"))?;
        }
        Ok(())
    })?;
    suite("lex order", 6, |rng| {
        let g = random_game(rng, 3, 3);
        let goals = random_goals(rng, &g);
        let i = rng.gen_range(0..g.num_players());
        let d: Vec<MixedProfile> = (0..3).map(|_| random_mixed(rng, &g)).collect();
        let c = |a: &MixedProfile, b: &MixedProfile| lex_compare(&g, &goals, a, b, i).unwrap();
        use std::cmp::Ordering::*;
        ensure(c(&d[0], &d[1]) == c(&d[1], &d[0]).reverse(), || {
            "not antisymmetric".into()
        })?;
        if c(&d[0], &d[1]) != Less && c(&d[1], &d[2]) != Less {
            ensure(c(&d[0], &d[2]) != Less, || "not transitive".into())?;
        }
        Ok(())
    })?;
    suite("elimination keeps lex equilibria", 7, |rng| {
        let g = StrategicGame::from_fn(&[2, 2], |_| {
            (0..2).map(|_| rng.gen_range(-3i32..=3) as f64).collect()
        })
        .unwrap();
        let goals = random_goals(rng, &g);
        let before = lex_ne_search(&g, &goals, 4)
            .map_err(|e| e.to_string())?
            .unwrap_or_default();
        let r = dominance_eliminate(&g, &goals, DominanceMode::Strict, Dominators::Pure)
            .map_err(|e| e.to_string())?;
        let after = lex_ne_search(&r.game, &r.goals, 4)
            .map_err(|e| e.to_string())?
            .unwrap_or_default();
        // lift reduced equilibria back and compare as probability vectors
        let lift = |d: &MixedProfile| -> Vec<Vec<f64>> {
            (0..2)
                .map(|i| {
                    let mut full = vec![0.0; 2];
                    for (k, &s) in r.kept[i].iter().enumerate() {
                        full[s] = d.probs[i][k];
                    }
                    full
                })
                .collect()
        };
        let lifted: Vec<Vec<Vec<f64>>> = after.iter().map(lift).collect();
        let original: Vec<Vec<Vec<f64>>> = before.iter().map(|d| d.probs.clone()).collect();
        ensure(lifted == original, || format!("{original:?} vs {lifted:?}"))
    })?;
    Ok(format!("7 suites x {SAMPLES} instances, 0 failures"))
}

fn crit10() -> Outcome {
    let (g, goals, t) = fixtures::asymmetry_instance();
    let boosts = Boosts::uniform(BoostSpec::offset(1.0).unwrap(), 2);
    let (a, b) = composition_orders(&g, &goals, &boosts, &t).map_err(|e| e.to_string())?;
    let want_a = [-1.0, 0.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0];
    let want_b = [1.0, 0.0, -2.0, 2.0, -2.0, 2.0, -2.0, 2.0];
    ensure(a.payoffs() == want_a, || {
        format!("instantiate after transfer {:?}", a.payoffs())
    })?;
    ensure(b.payoffs() == want_b, || {
        format!("transfer after instantiate {:?}", b.payoffs())
    })?;
    ensure(a != b, || "orders agree".into())?;
    Ok(format!("{:?} != {:?}", a.payoffs(), b.payoffs()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("1 figure 2 offset instantiation", ms(1.0), crit1),
        ("2 figure 3 translation", ms(1.0), crit2),
        (
            "3 motivating example is unstable",
            Duration::from_secs(1),
            crit3,
        ),
        (
            "4 three-player non-survival",
            Duration::from_secs(30),
            crit4,
        ),
        ("5 boolean non-survival", Duration::from_secs(60), crit5),
        ("6 common goal survives", Duration::from_secs(10), crit6),
        ("7 tax synthesis", Duration::from_secs(120), crit7),
        ("8 no lex equilibrium", Duration::from_secs(10), crit8),
        ("9 property suites", Duration::from_secs(600), crit9),
        ("10 dynamic asymmetry", ms(1000.0), crit10),
    ];
    let mut failed = Vec::new();
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(s) if took <= limit => Ok(s),
            Ok(s) => Err(format!("took {took:?}, limit {limit:?} ({s})")),
            Err(e) => Err(e),
        };
        match outcome {
            Ok(s) => println!("PASS criterion {name} [{took:.2?} / {limit:?}]: {s}"),
            Err(e) => {
                println!("FAIL criterion {name} [{took:.2?} / {limit:?}]: {e}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
