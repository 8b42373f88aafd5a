//! `goalgames` command-line front end.
//!
//! Every report starts with `key: value` lines and may end with a table.
//! Exit status: 0 success, 1 negative analysis result, 2 input error.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use goalgames::endogenous::EndogenousGame;
use goalgames::endogenous::{
    check_survival_sufficient, find_nonsurvival_certificate, is_potentially_shareable,
    is_shareable, solo_payoff, synth_tax, SurvivalVerdict, SynthError, TransferGrid,
    DEFAULT_CANDIDATE_CAP, DEFAULT_GRID_CAP,
};
use goalgames::equilibria::{
    dominance_eliminate, lex_ne_search, mixed_ne_2p, pure_lex_ne, pure_ne, DominanceMode,
    Dominators,
};
use goalgames::format::{
    parse_game_file, parse_stanzas, print_game_file, print_stanzas, GameFile, GameKind,
};
use goalgames::transfers::{apply_transfers, TransferFunction};
use goalgames::{BoostSpec, Boosts, BudgetConstraints, Exec, GoalAssignment, StrategicGame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "goalgames",
    version,
    about = "Analyze strategic and boolean games with goals"
)]
struct Cli {
    /// Run grid scans on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the induced utility game as a strategic game file.
    Translate { file: PathBuf },
    /// Print a game file in canonical form.
    Print { file: PathBuf },
    /// Pure Nash equilibria of the induced game.
    Ne { file: PathBuf },
    /// Mixed Nash equilibria of a two-player induced game.
    Mixedne { file: PathBuf },
    /// Lexicographic equilibria on a simplex grid.
    Lexne {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
    /// Iterated elimination of dominated strategies.
    Dominance {
        file: PathBuf,
        #[arg(long, conflicts_with = "weak")]
        strict: bool,
        #[arg(long)]
        weak: bool,
        /// Also try mixed dominators on a simplex grid of this resolution.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Apply transfers or taxes and print the updated game.
    Apply {
        file: PathBuf,
        #[arg(long, conflicts_with = "tax")]
        transfers: Option<PathBuf>,
        #[arg(long)]
        tax: Option<PathBuf>,
    },
    /// Analyses of the two-phase game.
    #[command(subcommand)]
    Endo(Endo),
    /// Taxation mechanisms.
    #[command(subcommand)]
    Tax(Tax),
    /// Structural checks.
    #[command(subcommand)]
    Check(Check),
    /// Print a random small game file.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        players: usize,
        #[arg(long, default_value_t = 2)]
        strategies: usize,
        /// Emit a boolean game with one atom per player instead.
        #[arg(long)]
        boolean: bool,
    },
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 1.0)]
    bound: f64,
    /// Profiles where payments may be non-zero (repeatable); all by default.
    #[arg(long = "support")]
    support: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    grid_cap: usize,
}

#[derive(Subcommand)]
enum Endo {
    /// Best guaranteed value of a unilateral grid transfer.
    Solo {
        file: PathBuf,
        #[arg(long)]
        player: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sufficient condition for survival of a pure equilibrium.
    Survive {
        file: PathBuf,
        #[arg(long)]
        profile: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Exhaustive grid certificate that an equilibrium does not survive.
    Nonsurvival {
        file: PathBuf,
        #[arg(long)]
        profile: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
        candidate_cap: usize,
    },
}

#[derive(Subcommand)]
enum Tax {
    /// Synthesize taxes under which a profile is certified surviving.
    Synth {
        file: PathBuf,
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the game with the synthesized tax stanzas here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Check {
    /// Whether a boolean outcome is shareable.
    Shareable {
        file: PathBuf,
        #[arg(long)]
        outcome: String,
    },
}

/// Failure modes mapped to exit codes.
enum Failure {
    Input(String),
}

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

#[derive(Default)]
struct Report {
    text: String,
    negative: bool,
}

impl Report {
    fn kv(&mut self, key: &str, value: impl Display) {
        self.text.push_str(&format!("{key}: {value}\n"));
    }

    fn raw(&mut self, text: &str) {
        self.text.push_str(text);
    }
}

fn load(path: &Path) -> Result<GameFile, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_game_file(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn fmt_num(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn fmt_vec(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" ")
}

/// Profile column plus one column per player.
fn table(file: &GameFile, game: &StrategicGame, title: &str) -> String {
    let n = game.num_players();
    let rows: Vec<(String, Vec<String>)> = (0..game.num_profiles())
        .map(|p| {
            (
                file.profile_label(p),
                game.payoff_vec(p).iter().map(|&x| fmt_num(x)).collect(),
            )
        })
        .collect();
    let first = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(7);
    let width = rows
        .iter()
        .flat_map(|r| r.1.iter().map(String::len))
        .max()
        .unwrap_or(1)
        .max(4);
    let mut out = format!("\n{title}\n{:<first$}", "profile");
    for i in 0..n {
        out.push_str(&format!("  {:>width$}", format!("u{i}")));
    }
    out.push('\n');
    for (label, vals) in rows {
        out.push_str(&format!("{label:<first$}"));
        for v in vals {
            out.push_str(&format!("  {v:>width$}"));
        }
        out.push('\n');
    }
    out
}

/// Penalized utilities of the (taxed) game under the file's own transfer.
fn utilities(file: &GameFile) -> Result<(EndogenousGame, goalgames::Penalized), Failure> {
    let e = file.taxed()?;
    let t = file
        .transfer
        .clone()
        .unwrap_or_else(|| TransferFunction::zero(&e.game));
    let p = e.utility(&t)?;
    Ok((e, p))
}

fn profile_arg(file: &GameFile, text: &str) -> Result<usize, Failure> {
    file.parse_profile(text).map_err(Failure::Input)
}

fn grid_of(file: &GameFile, args: &GridArgs) -> Result<TransferGrid, Failure> {
    let mut grid = TransferGrid::new(args.step, args.bound)?.with_cap(args.grid_cap);
    if !args.support.is_empty() {
        let support = args
            .support
            .iter()
            .map(|s| profile_arg(file, s))
            .collect::<Result<Vec<_>, _>>()?;
        grid = grid.with_support(support);
    }
    Ok(grid)
}

fn transfer_lines(file: &GameFile, t: &TransferFunction) -> String {
    let lines = print_stanzas(file, Some(t), None);
    if lines.is_empty() {
        "  (none)\n".into()
    } else {
        lines.lines().map(|l| format!("  {l}\n")).collect()
    }
}

fn run(cli: Cli) -> Result<Report, Failure> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let mut r = Report::default();
    match cli.command {
        Command::Print { file } => r.raw(&print_game_file(&load(&file)?)),
        Command::Translate { file } => {
            let f = load(&file)?;
            let (_, p) = utilities(&f)?;
            let induced = EndogenousGame::strategic(
                p.game.clone(),
                GoalAssignment::empty(&p.game),
                Boosts::uniform(BoostSpec::Offset { delta: 1.0 }, p.game.num_players()),
            )?;
            let mut out = GameFile::new(GameKind::Strategic(induced));
            out.transfer = None;
            r.raw(&print_game_file(&out));
        }
        Command::Ne { file } => {
            let f = load(&file)?;
            let (_, p) = utilities(&f)?;
            let ne = pure_ne(&p.game);
            r.kv("kappa", fmt_num(p.punishment.kappa));
            r.kv("equilibria", ne.len());
            for &k in &ne {
                r.kv(
                    "equilibrium",
                    format!("{} | {}", f.profile_label(k), fmt_vec(p.game.payoff_vec(k))),
                );
            }
            r.raw(&table(&f, &p.game, "induced utilities"));
            r.negative = ne.is_empty();
        }
        Command::Mixedne { file } => {
            let f = load(&file)?;
            let (_, p) = utilities(&f)?;
            let ne = mixed_ne_2p(&p.game)?;
            r.kv("equilibria", ne.len());
            for d in &ne {
                let parts: Vec<String> = d.probs.iter().map(|x| fmt_vec(x)).collect();
                let values: Vec<f64> = (0..2)
                    .map(|i| goalgames::expected_utility(&p.game, d, i))
                    .collect::<Result<_, _>>()?;
                r.kv(
                    "equilibrium",
                    format!("{} | {}", parts.join(" ; "), fmt_vec(&values)),
                );
            }
            r.raw(&table(&f, &p.game, "induced utilities"));
            r.negative = ne.is_empty();
        }
        Command::Lexne { file, grid } => {
            let f = load(&file)?;
            let e = f.taxed()?;
            let found = lex_ne_search(&e.game, &e.goals, grid)?;
            let pure = pure_lex_ne(&e.game, &e.goals)?;
            r.kv("grid", grid);
            r.kv("pure", pure.len());
            for &k in &pure {
                r.kv("pure_equilibrium", f.profile_label(k));
            }
            match &found {
                Some(eqs) => {
                    r.kv("grid_equilibria", eqs.len());
                    for d in eqs {
                        let parts: Vec<String> = d.probs.iter().map(|x| fmt_vec(x)).collect();
                        r.kv("grid_equilibrium", parts.join(" ; "));
                    }
                }
                None => r.kv("grid_equilibria", 0),
            }
            r.negative = found.is_none() && pure.is_empty();
        }
        Command::Dominance {
            file,
            strict: _,
            weak,
            grid,
        } => {
            let f = load(&file)?;
            let e = f.taxed()?;
            let mode = if weak {
                DominanceMode::Weak
            } else {
                DominanceMode::Strict
            };
            let dominators = grid.map_or(Dominators::Pure, Dominators::Grid);
            let red = dominance_eliminate(&e.game, &e.goals, mode, dominators)?;
            r.kv("mode", if weak { "weak" } else { "strict" });
            r.kv("eliminated", red.trace.len());
            for step in &red.trace {
                let by: Vec<String> = step
                    .dominator
                    .iter()
                    .map(|&(s, w)| format!("{}*{}", e.game.labels(step.player)[s], fmt_num(w)))
                    .collect();
                r.kv(
                    "step",
                    format!(
                        "player {} drops {} (by {})",
                        step.player,
                        step.label,
                        by.join(" + ")
                    ),
                );
            }
            for (i, kept) in red.kept.iter().enumerate() {
                let labels: Vec<&str> =
                    kept.iter().map(|&s| e.game.labels(i)[s].as_str()).collect();
                r.kv(&format!("kept {i}"), labels.join(" "));
            }
            let reduced = GameFile::new(GameKind::Strategic(EndogenousGame::strategic(
                red.game.clone(),
                red.goals.clone(),
                e.boosts.clone(),
            )?));
            r.raw(&table(&reduced, &red.game, "reduced game payoffs"));
        }
        Command::Apply {
            file,
            transfers,
            tax,
        } => {
            let f = load(&file)?;
            let (t, a) = match (&transfers, &tax) {
                (Some(path), None) | (None, Some(path)) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    parse_stanzas(&text, &f)
                        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
                }
                _ => (f.transfer.clone(), f.tax.clone()),
            };
            if transfers.is_some() && a.is_some() || tax.is_some() && t.is_some() {
                return Err(Failure::Input(
                    "stanza file holds the other kind of stanza".into(),
                ));
            }
            let updated = match (t, a) {
                (Some(t), _) => {
                    let base = f.base();
                    let game = apply_transfers(&base.game, &t)?;
                    let budgets = BudgetConstraints::from_payoffs(&game);
                    GameFile::new(GameKind::Strategic(EndogenousGame::new(
                        game,
                        base.goals,
                        base.boosts,
                        budgets,
                    )?))
                }
                (None, Some(a)) => match &f.kind {
                    GameKind::Boolean(b) => GameFile::new(GameKind::Boolean(b.with_tax(&a)?)),
                    GameKind::Strategic(e) => {
                        GameFile::new(GameKind::Strategic(e.with_tax(&a, e.budget_policy())?))
                    }
                },
                (None, None) => {
                    return Err(Failure::Input("no transfer or tax stanzas to apply".into()))
                }
            };
            r.raw(&print_game_file(&updated));
        }
        Command::Endo(Endo::Solo { file, player, grid }) => {
            let f = load(&file)?;
            let e = f.taxed()?;
            let g = grid_of(&f, &grid)?;
            let s = solo_payoff(&e, player, &g, exec)?;
            r.kv("player", player);
            r.kv("grid_size", g.size(&e.game)?);
            r.kv("solo", fmt_num(s.value));
            r.kv("approximate", s.approximate);
            r.raw("transfer:\n");
            r.raw(&transfer_lines(&f, &s.transfer));
        }
        Command::Endo(Endo::Survive {
            file,
            profile,
            grid,
        }) => {
            let f = load(&file)?;
            let e = f.taxed()?;
            let k = profile_arg(&f, &profile)?;
            let g = grid_of(&f, &grid)?;
            let c = check_survival_sufficient(&e, k, &g, exec)?;
            let certified = c.verdict == SurvivalVerdict::Certified;
            r.kv("profile", f.profile_label(k));
            r.kv(
                "verdict",
                if certified {
                    "certified"
                } else {
                    "not-applicable"
                },
            );
            r.kv("utilities", fmt_vec(&c.utilities));
            r.kv(
                "solo",
                fmt_vec(&c.solo.iter().map(|s| s.value).collect::<Vec<_>>()),
            );
            r.kv("approximate", c.solo.iter().any(|s| s.approximate));
            r.kv("short", format!("{:?}", c.short));
            if let Some(sharing) = &c.sharing {
                for &(j, w) in sharing {
                    r.kv("sharing", format!("player {j} -> {}", f.profile_label(w)));
                }
                r.kv("on_path_equilibrium", c.on_path_equilibrium);
            } else if matches!(f.kind, GameKind::Boolean(_)) {
                r.kv("sharing", "none");
            }
            r.kv("on_path_kappa", fmt_num(c.on_path_kappa));
            r.raw("on_path_transfer:\n");
            r.raw(&transfer_lines(&f, &c.on_path));
            r.negative = !certified;
        }
        Command::Endo(Endo::Nonsurvival {
            file,
            profile,
            grid,
            candidate_cap,
        }) => {
            let f = load(&file)?;
            let e = f.taxed()?;
            let k = profile_arg(&f, &profile)?;
            let g = grid_of(&f, &grid)?;
            r.kv("profile", f.profile_label(k));
            match find_nonsurvival_certificate(&e, k, &g, candidate_cap, exec)? {
                None => {
                    r.kv("certificate", "none");
                    r.negative = true;
                }
                Some(c) => {
                    r.kv("certificate", "found");
                    r.kv("candidates", c.candidates);
                    r.kv("on_path_candidates", c.on_path_candidates);
                    for (i, kind, count) in &c.defeats {
                        r.kv("defeats", format!("player {i} {kind:?} {count}"));
                    }
                    if let Some(w) = &c.zero_witness {
                        r.kv("witness_player", w.player);
                        r.kv("witness_value", fmt_num(w.value));
                        r.kv("witness_on_path", fmt_num(w.on_path));
                        r.raw("witness_transfer:\n");
                        r.raw(&transfer_lines(&f, &w.transfer));
                    }
                }
            }
        }
        Command::Tax(Tax::Synth {
            file,
            profile,
            cap,
            grid,
            out,
        }) => {
            let f = load(&file)?;
            if f.tax.is_some() {
                return Err(Failure::Input("input already carries tax stanzas".into()));
            }
            let e = f.base();
            let k = profile_arg(&f, &profile)?;
            let g = grid_of(&f, &grid)?;
            r.kv("profile", f.profile_label(k));
            match synth_tax(&e, k, &g, cap, exec) {
                Ok(s) => {
                    r.kv("status", "certified");
                    r.kv("iterations", s.iterations);
                    r.kv(
                        "tax_total",
                        fmt_num((0..f.num_players()).map(|i| s.tax.total(i)).sum()),
                    );
                    r.kv(
                        "solo",
                        fmt_vec(
                            &s.certificate
                                .solo
                                .iter()
                                .map(|x| x.value)
                                .collect::<Vec<_>>(),
                        ),
                    );
                    r.kv("utilities", fmt_vec(&s.certificate.utilities));
                    let mut taxed = f.clone();
                    taxed.tax = (!s.tax.is_zero()).then_some(s.tax);
                    let text = print_game_file(&taxed);
                    match out {
                        Some(path) => {
                            fs::write(&path, &text)
                                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                            r.kv("written", path.display());
                        }
                        None => {
                            r.raw("taxed_game:\n");
                            r.raw(&text);
                        }
                    }
                }
                Err(SynthError::Game(e)) => return Err(e.into()),
                Err(other) => {
                    let status = match &other {
                        SynthError::Guard { .. } => "guard-failed",
                        SynthError::NotPotentiallyShareable => "not-potentially-shareable",
                        SynthError::NotShareable { .. } => "not-shareable",
                        SynthError::CapExceeded { .. } => "cap-exceeded",
                        SynthError::Game(_) => unreachable!(),
                    };
                    r.kv("status", status);
                    r.kv("reason", &other);
                    r.negative = true;
                }
            }
        }
        Command::Check(Check::Shareable { file, outcome }) => {
            let f = load(&file)?;
            let GameKind::Boolean(b) = &f.kind else {
                return Err(Failure::Input(
                    "shareability applies to boolean games".into(),
                ));
            };
            let v = b.parse_valuation(&outcome)?;
            let potential = is_potentially_shareable(b, v);
            let sharing = is_shareable(b, v);
            r.kv("outcome", b.valuation_label(v));
            r.kv("potentially_shareable", potential);
            r.kv("shareable", sharing.is_some());
            for (j, w) in sharing.iter().flatten() {
                r.kv(
                    "assignment",
                    format!("player {j} -> {}", b.valuation_label(*w)),
                );
            }
            r.negative = sharing.is_none();
        }
        Command::Random {
            seed,
            players,
            strategies,
            boolean,
        } => {
            if players == 0 || strategies == 0 || players > 6 || strategies > 6 {
                return Err(Failure::Input(
                    "players and strategies must be between 1 and 6".into(),
                ));
            }
            r.raw(&random_game(seed, players, strategies, boolean)?);
        }
    }
    Ok(r)
}

fn random_game(seed: u64, n: usize, k: usize, boolean: bool) -> Result<String, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if boolean {
        let atoms: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let mut text = format!("game boolean\natoms {}\n", atoms.join(" "));
        for (i, a) in atoms.iter().enumerate() {
            text.push_str(&format!("control {i} {a}\n"));
        }
        for i in 0..n {
            let j = rng.gen_range(0..n);
            let lit = |a: &str, pos: bool| if pos { a.to_string() } else { format!("~{a}") };
            let f = format!(
                "{} & {}",
                lit(&atoms[i], rng.gen_bool(0.5)),
                lit(&atoms[j], rng.gen_bool(0.5))
            );
            text.push_str(&format!("goalformula {i} \"{f}\"\n"));
        }
        for i in 0..n {
            for v in 0..1usize << n {
                let c = rng.gen_range(0..=4);
                if c > 0 {
                    let pattern: Vec<String> = atoms
                        .iter()
                        .enumerate()
                        .map(|(b, a)| format!("{a}={}", (v >> (n - 1 - b)) & 1))
                        .collect();
                    text.push_str(&format!("cost {i} {} {c}\n", pattern.join(",")));
                }
            }
        }
        text.push_str("epsilon 1\n");
        return Ok(print_game_file(&parse_game_file(&text)?));
    }
    let shape = vec![k; n];
    let game = StrategicGame::from_fn(&shape, |_| {
        (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect()
    })?;
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            (0..game.num_profiles())
                .filter(|_| rng.gen_bool(0.25))
                .collect()
        })
        .collect();
    let goals = GoalAssignment::from_indices(&game, &sets)?;
    let boosts = Boosts(
        (0..n)
            .map(|_| BoostSpec::offset(rng.gen_range(1..=3) as f64))
            .collect::<Result<_, _>>()?,
    );
    let labels: Vec<Vec<String>> = (0..n)
        .map(|i| (0..k).map(|s| format!("s{i}{s}")).collect())
        .collect();
    let game = StrategicGame::new(labels, game.payoffs().to_vec())?;
    let e = EndogenousGame::strategic(game, goals, boosts)?;
    Ok(print_game_file(&GameFile::new(GameKind::Strategic(e))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(if report.negative { 1 } else { 0 })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
