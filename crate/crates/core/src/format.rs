//! Line-oriented text format for games, transfers and taxes.
//!
//! ```text
//! game strategic
//! players 2
//! strategy 0 U
//! strategy 0 D
//! strategy 1 L
//! strategy 1 R
//! payoff U,L 3 3
//! payoff U,R 0 5
//! payoff D,L 5 0
//! payoff D,R 1 1
//! goal 1 D,L
//! boost all offset 3
//! budget 0 D,R 4
//! transfer 0 D,R -> 1 : 1.5
//! ```
//!
//! ```text
//! game boolean
//! atoms p q
//! control 0 p
//! control 1 q
//! goalformula 0 "p & q"
//! cost all * 2
//! cost 0 p=1 5
//! epsilon 1
//! budgets effective
//! ```
//!
//! `#` starts a comment. Players are numbered from 0. Every profile of a
//! strategic game needs exactly one `payoff` line; without `boost` every
//! player gets `offset 1` and without `budget` lines budgets equal payoffs.
//! A cost pattern is `*` or a comma-separated list of `atom=0|1`; atoms it
//! leaves out are unconstrained and later lines override earlier ones.
//! Profiles are comma-separated strategy labels, or `atom=0|1` lists over
//! all atoms for boolean games.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::boolean::{BooleanGame, BudgetMode};
use crate::boost::{BoostSpec, Boosts};
use crate::endogenous::EndogenousGame;
use crate::error::GameError;
use crate::game::{BudgetConstraints, GoalAssignment, StrategicGame};
use crate::transfers::{TaxationMechanism, TransferFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

fn game_err(line: usize) -> impl Fn(GameError) -> ParseError {
    move |e| ParseError {
        line,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameKind {
    Strategic(EndogenousGame),
    Boolean(BooleanGame),
}

/// A parsed game file: the game plus optional transfer and tax stanzas.
#[derive(Debug, Clone, PartialEq)]
pub struct GameFile {
    pub kind: GameKind,
    pub transfer: Option<TransferFunction>,
    pub tax: Option<TaxationMechanism>,
}

impl GameFile {
    pub fn new(kind: GameKind) -> Self {
        Self {
            kind,
            transfer: None,
            tax: None,
        }
    }

    pub fn num_players(&self) -> usize {
        match &self.kind {
            GameKind::Strategic(e) => e.num_players(),
            GameKind::Boolean(b) => b.num_players(),
        }
    }

    /// The untaxed game with goals, boosts and budgets (boolean games are translated).
    pub fn base(&self) -> EndogenousGame {
        match &self.kind {
            GameKind::Strategic(e) => e.clone(),
            GameKind::Boolean(b) => b.to_goal_game(),
        }
    }

    /// The game with the file's taxes applied.
    pub fn taxed(&self) -> Result<EndogenousGame, GameError> {
        let base = self.base();
        match &self.tax {
            None => Ok(base),
            Some(t) => base.with_tax(t, base.budget_policy()),
        }
    }

    /// Profile index of `U,L` (strategic) or `p=1,q=0` (boolean) text.
    pub fn parse_profile(&self, text: &str) -> Result<usize, String> {
        match &self.kind {
            GameKind::Strategic(e) => strategic_profile(&e.game, text),
            GameKind::Boolean(b) => b
                .parse_valuation(text)
                .map(|v| b.profile_of(v))
                .map_err(|e| e.to_string()),
        }
    }

    pub fn profile_label(&self, profile: usize) -> String {
        match &self.kind {
            GameKind::Strategic(e) => e.game.profile_labels(profile).join(","),
            GameKind::Boolean(b) => b.valuation_label(b.valuation_of(profile)),
        }
    }
}

fn strategic_profile(game: &StrategicGame, text: &str) -> Result<usize, String> {
    let labels: Vec<&str> = text.split(',').map(str::trim).collect();
    let n = game.num_players();
    if labels.len() != n {
        return Err(format!("profile `{text}` needs {n} comma-separated labels"));
    }
    let mut idx = Vec::with_capacity(n);
    for (i, l) in labels.iter().enumerate() {
        match game.labels(i).iter().position(|s| s == l) {
            Some(k) => idx.push(k),
            None => return Err(format!("player {i} has no strategy `{l}`")),
        }
    }
    game.profile_index(&idx).map_err(|e| e.to_string())
}

struct Line {
    no: usize,
    words: Vec<String>,
}

/// Splits a line into words, keeping double-quoted text as one word.
fn words(line: &str, no: usize) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return err(no, "unterminated quote"),
                }
            }
            out.push(s);
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '"' {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            out.push(s);
        }
    }
    Ok(out)
}

fn lines(text: &str) -> Result<Vec<Line>, ParseError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let no = k + 1;
        let mut quoted = false;
        let cut = raw
            .char_indices()
            .find(|&(_, c)| {
                if c == '"' {
                    quoted = !quoted;
                }
                c == '#' && !quoted
            })
            .map_or(raw.len(), |(i, _)| i);
        let words = words(&raw[..cut], no)?;
        if !words.is_empty() {
            out.push(Line { no, words });
        }
    }
    Ok(out)
}

fn number(word: &str, no: usize) -> Result<f64, ParseError> {
    match word.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => err(no, format!("expected a number, found `{word}`")),
    }
}

fn player(word: &str, n: usize, no: usize) -> Result<usize, ParseError> {
    match word.parse::<usize>() {
        Ok(i) if i < n => Ok(i),
        _ => err(
            no,
            format!("expected a player index below {n}, found `{word}`"),
        ),
    }
}

fn arity(l: &Line, want: usize, usage: &str) -> Result<(), ParseError> {
    if l.words.len() == want {
        Ok(())
    } else {
        err(l.no, format!("expected `{usage}`"))
    }
}

pub fn parse_game_file(text: &str) -> Result<GameFile, ParseError> {
    let all = lines(text)?;
    let Some(first) = all.first() else {
        return err(1, "empty file");
    };
    if first.words[0] != "game" || first.words.len() != 2 {
        return err(
            first.no,
            "first directive must be `game strategic` or `game boolean`",
        );
    }
    let (body, stanzas): (Vec<&Line>, Vec<&Line>) = all[1..]
        .iter()
        .partition(|l| l.words[0] != "transfer" && l.words[0] != "tax");
    let kind = match first.words[1].as_str() {
        "strategic" => GameKind::Strategic(parse_strategic(&body, first.no)?),
        "boolean" => GameKind::Boolean(parse_boolean(&body, first.no)?),
        other => return err(first.no, format!("unknown game kind `{other}`")),
    };
    let mut file = GameFile::new(kind);
    let (transfer, tax) = stanzas_of(&file, &stanzas)?;
    file.transfer = transfer;
    file.tax = tax;
    Ok(file)
}

type Stanzas = (Option<TransferFunction>, Option<TaxationMechanism>);

/// Parses a file holding only `transfer` and `tax` lines for `game`.
pub fn parse_stanzas(text: &str, game: &GameFile) -> Result<Stanzas, ParseError> {
    let all = lines(text)?;
    let refs: Vec<&Line> = all.iter().collect();
    stanzas_of(game, &refs)
}

fn stanzas_of(file: &GameFile, stanzas: &[&Line]) -> Result<Stanzas, ParseError> {
    let n = file.num_players();
    let base = file.base();
    let mut transfer: Option<TransferFunction> = None;
    let mut tax: Option<TaxationMechanism> = None;
    for l in stanzas {
        let (no, w) = (l.no, &l.words);
        let profile = |word: &str| file.parse_profile(word).or_else(|m| err(no, m));
        match w[0].as_str() {
            "transfer" => {
                if w.len() != 7 || w[3] != "->" || w[5] != ":" {
                    return err(no, "expected `transfer GIVER PROFILE -> RECEIVER : AMOUNT`");
                }
                let giver = player(&w[1], n, no)?;
                let receiver = player(&w[4], n, no)?;
                let p = profile(&w[2])?;
                let t = transfer.get_or_insert_with(|| TransferFunction::zero(&base.game));
                t.add(giver, p, receiver, number(&w[6], no)?)
                    .map_err(game_err(no))?;
            }
            "tax" => {
                if w.len() != 5 || w[3] != ":" {
                    return err(no, "expected `tax PLAYER PROFILE : AMOUNT`");
                }
                let i = player(&w[1], n, no)?;
                let p = profile(&w[2])?;
                let t = tax.get_or_insert_with(|| TaxationMechanism::zero(&base.game));
                t.add(i, p, number(&w[4], no)?).map_err(game_err(no))?;
            }
            other => return err(no, format!("unknown directive `{other}`")),
        }
    }
    Ok((transfer, tax))
}

fn parse_boost(w: &[String], no: usize) -> Result<BoostSpec, ParseError> {
    let spec = match (w.first().map(String::as_str), w.get(1)) {
        (Some("offset"), Some(x)) if w.len() == 2 => BoostSpec::offset(number(x, no)?),
        (Some("regret"), Some(x)) if w.len() == 2 => BoostSpec::regret(number(x, no)?),
        _ => return err(no, "expected `offset DELTA` or `regret EPSILON`"),
    };
    spec.map_err(game_err(no))
}

fn parse_strategic(body: &[&Line], header: usize) -> Result<EndogenousGame, ParseError> {
    let mut n = None;
    for l in body.iter().filter(|l| l.words[0] == "players") {
        arity(l, 2, "players N")?;
        if n.is_some() {
            return err(l.no, "players declared twice");
        }
        match l.words[1].parse::<usize>() {
            Ok(k) if k > 0 => n = Some(k),
            _ => return err(l.no, format!("bad player count `{}`", l.words[1])),
        }
    }
    let Some(n) = n else {
        return err(header, "missing `players`");
    };
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); n];
    for l in body.iter().filter(|l| l.words[0] == "strategy") {
        arity(l, 3, "strategy PLAYER LABEL")?;
        let i = player(&l.words[1], n, l.no)?;
        let label = &l.words[2];
        if label.contains(',') || labels[i].contains(label) {
            return err(l.no, format!("bad or repeated strategy label `{label}`"));
        }
        labels[i].push(label.clone());
    }
    if let Some(i) = labels.iter().position(Vec::is_empty) {
        return err(header, format!("player {i} has no strategies"));
    }
    let profiles: usize = labels.iter().map(Vec::len).product();
    let mut game = StrategicGame::new(labels, vec![0.0; profiles * n]).map_err(game_err(header))?;
    let mut seen = vec![false; profiles];
    let mut goals = GoalAssignment::empty(&game);
    let mut boosts = Boosts::uniform(BoostSpec::Offset { delta: 1.0 }, n);
    let mut budget_lines = Vec::new();
    for l in body {
        let (no, w) = (l.no, &l.words);
        let profile = |text: &str, game: &StrategicGame| {
            strategic_profile(game, text).or_else(|m| err(no, m))
        };
        match w[0].as_str() {
            "players" | "strategy" => {}
            "payoff" => {
                if w.len() != n + 2 {
                    return err(no, format!("expected a profile and {n} payoffs"));
                }
                let p = profile(&w[1], &game)?;
                if std::mem::replace(&mut seen[p], true) {
                    return err(no, format!("duplicate payoff line for `{}`", w[1]));
                }
                for (i, v) in w[2..].iter().enumerate() {
                    game.set_payoff(p, i, number(v, no)?)
                        .map_err(game_err(no))?;
                }
            }
            "goal" => {
                arity(l, 3, "goal PLAYER PROFILE")?;
                let i = player(&w[1], n, no)?;
                goals.insert(i, profile(&w[2], &game)?);
            }
            "boost" => {
                if w.len() < 2 {
                    return err(no, "expected `boost PLAYER|all KIND VALUE`");
                }
                let spec = parse_boost(&w[2..], no)?;
                if w[1] == "all" {
                    boosts = Boosts::uniform(spec, n);
                } else {
                    boosts.0[player(&w[1], n, no)?] = spec;
                }
            }
            "budget" => budget_lines.push(*l),
            other => return err(no, format!("unknown directive `{other}`")),
        }
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return err(
            header,
            format!(
                "incomplete payoff tensor: no payoff line for `{}`",
                game.profile_labels(p).join(",")
            ),
        );
    }
    let mut bounds = game.payoffs().to_vec();
    for l in budget_lines {
        arity(l, 4, "budget PLAYER PROFILE BOUND")?;
        let i = player(&l.words[1], n, l.no)?;
        let p = strategic_profile(&game, &l.words[2]).or_else(|m| err(l.no, m))?;
        let b = number(&l.words[3], l.no)?;
        if b < game.payoff(p, i) {
            return err(
                l.no,
                format!("budget {b} is below the payoff {}", game.payoff(p, i)),
            );
        }
        bounds[p * n + i] = b;
    }
    let budgets = BudgetConstraints::new(&game, bounds).map_err(game_err(header))?;
    EndogenousGame::new(game, goals, boosts, budgets).map_err(game_err(header))
}

fn parse_boolean(body: &[&Line], header: usize) -> Result<BooleanGame, ParseError> {
    let mut atoms: Option<Vec<String>> = None;
    let mut declared_players = None;
    for l in body {
        match l.words[0].as_str() {
            "atoms" if atoms.is_some() => return err(l.no, "atoms declared twice"),
            "atoms" => {
                let list = l.words[1..].to_vec();
                let mut uniq = HashSet::new();
                if list.is_empty() || !list.iter().all(|a| uniq.insert(a.as_str())) {
                    return err(l.no, "atoms must be a non-empty list of distinct names");
                }
                atoms = Some(list);
            }
            "players" => {
                arity(l, 2, "players N")?;
                match l.words[1].parse::<usize>() {
                    Ok(k) if k > 0 => declared_players = Some((l.no, k)),
                    _ => return err(l.no, format!("bad player count `{}`", l.words[1])),
                }
            }
            _ => {}
        }
    }
    let Some(atoms) = atoms else {
        return err(header, "missing `atoms`");
    };
    let m = atoms.len();
    if m > 24 {
        return err(header, format!("{m} atoms is too many to enumerate"));
    }
    let atom = |name: &str, no: usize| match atoms.iter().position(|a| a == name) {
        Some(k) => Ok(k),
        None => err(no, format!("unknown atom `{name}`")),
    };
    // control lines fix the number of players
    let mut control: Vec<Vec<usize>> = Vec::new();
    for l in body.iter().filter(|l| l.words[0] == "control") {
        if l.words.len() < 3 {
            return err(l.no, "expected `control PLAYER ATOM...`");
        }
        let i = player(&l.words[1], m, l.no)?;
        if control.len() <= i {
            control.resize(i + 1, Vec::new());
        }
        if !control[i].is_empty() {
            return err(l.no, format!("control of player {i} declared twice"));
        }
        control[i] = l.words[2..]
            .iter()
            .map(|a| atom(a, l.no))
            .collect::<Result<_, _>>()?;
    }
    let n = control.len();
    if let Some((no, k)) = declared_players {
        if k != n {
            return err(
                no,
                format!("{k} players declared but control lines name {n}"),
            );
        }
    }
    if n == 0 {
        return err(header, "no `control` lines");
    }
    if let Some(i) = control.iter().position(Vec::is_empty) {
        return err(header, format!("missing control of player {i}"));
    }
    let mut goals: Vec<Option<crate::formula::Formula>> = vec![None; n];
    let mut costs = vec![0.0; (1usize << m) * n];
    let mut epsilon = 1.0;
    let mut mode = BudgetMode::default();
    for l in body {
        let (no, w) = (l.no, &l.words);
        match w[0].as_str() {
            "atoms" | "control" | "players" => {}
            "goalformula" => {
                arity(l, 3, "goalformula PLAYER \"FORMULA\"")?;
                let i = player(&w[1], n, no)?;
                match crate::formula::parse(&w[2], &atoms) {
                    Ok(f) => goals[i] = Some(f),
                    Err(e) => return err(no, e.to_string()),
                }
            }
            "cost" => {
                arity(l, 4, "cost PLAYER|all PATTERN VALUE")?;
                let who: Vec<usize> = if w[1] == "all" {
                    (0..n).collect()
                } else {
                    vec![player(&w[1], n, no)?]
                };
                let mut fixed: Vec<Option<bool>> = vec![None; m];
                if w[2] != "*" {
                    for part in w[2].split(',') {
                        let Some((name, val)) = part.split_once('=') else {
                            return err(no, format!("bad pattern entry `{part}`"));
                        };
                        let k = atom(name, no)?;
                        let bit = match val {
                            "1" => true,
                            "0" => false,
                            _ => return err(no, format!("bad pattern entry `{part}`")),
                        };
                        if fixed[k].replace(bit).is_some() {
                            return err(no, format!("atom `{name}` repeated in pattern"));
                        }
                    }
                }
                let c = number(&w[3], no)?;
                for v in 0..1usize << m {
                    let hit = fixed
                        .iter()
                        .enumerate()
                        .all(|(k, f)| f.is_none_or(|b| ((v >> (m - 1 - k)) & 1 == 1) == b));
                    if hit {
                        for &i in &who {
                            costs[v * n + i] = c;
                        }
                    }
                }
            }
            "epsilon" => {
                arity(l, 2, "epsilon VALUE")?;
                epsilon = number(&w[1], no)?;
            }
            "budgets" => {
                arity(l, 2, "budgets effective|literal")?;
                mode = match w[1].as_str() {
                    "effective" => BudgetMode::Effective,
                    "literal" => BudgetMode::Literal,
                    _ => return err(no, "expected `budgets effective|literal`"),
                }
            }
            other => return err(no, format!("unknown directive `{other}`")),
        }
    }
    let goals = goals
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            g.ok_or_else(|| ParseError {
                line: header,
                message: format!("missing goalformula of player {i}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    BooleanGame::new(atoms, control, goals, costs, epsilon)
        .map(|b| b.with_budget_mode(mode))
        .map_err(game_err(header))
}

/// Shortest decimal text that parses back to the same `f64`.
fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn print_boost(spec: BoostSpec) -> String {
    match spec {
        BoostSpec::Offset { delta } => format!("offset {}", num(delta)),
        BoostSpec::Regret { epsilon } => format!("regret {}", num(epsilon)),
    }
}

/// Canonical text of a game file; parsing it yields the same file.
pub fn print_game_file(file: &GameFile) -> String {
    let mut out = match &file.kind {
        GameKind::Strategic(e) => print_strategic(e),
        GameKind::Boolean(b) => print_boolean(b),
    };
    out.push_str(&print_stanzas(
        file,
        file.transfer.as_ref(),
        file.tax.as_ref(),
    ));
    out
}

/// `transfer` and `tax` lines, sorted by player, profile and receiver.
pub fn print_stanzas(
    file: &GameFile,
    transfer: Option<&TransferFunction>,
    tax: Option<&TaxationMechanism>,
) -> String {
    let mut out = String::new();
    if let Some(t) = transfer {
        for (g, p, r, amt) in t.entries() {
            let _ = writeln!(
                out,
                "transfer {g} {} -> {r} : {}",
                file.profile_label(p),
                num(amt)
            );
        }
    }
    if let Some(t) = tax {
        for (i, p, amt) in t.entries() {
            let _ = writeln!(out, "tax {i} {} : {}", file.profile_label(p), num(amt));
        }
    }
    out
}

fn print_strategic(e: &EndogenousGame) -> String {
    let g = &e.game;
    let n = g.num_players();
    let mut out = String::new();
    let label = |p: usize| g.profile_labels(p).join(",");
    let _ = writeln!(out, "game strategic");
    let _ = writeln!(out, "players {n}");
    for i in 0..n {
        for l in g.labels(i) {
            let _ = writeln!(out, "strategy {i} {l}");
        }
    }
    for p in 0..g.num_profiles() {
        let vals: Vec<String> = g.payoff_vec(p).iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "payoff {} {}", label(p), vals.join(" "));
    }
    for i in 0..n {
        for p in e.goals.goals(i) {
            let _ = writeln!(out, "goal {i} {}", label(p));
        }
    }
    let first = e.boosts.get(0);
    if (0..n).all(|i| e.boosts.get(i) == first) {
        let _ = writeln!(out, "boost all {}", print_boost(first));
    } else {
        for i in 0..n {
            let _ = writeln!(out, "boost {i} {}", print_boost(e.boosts.get(i)));
        }
    }
    for i in 0..n {
        for p in 0..g.num_profiles() {
            let b = e.budgets.bound(p, i);
            if b != g.payoff(p, i) {
                let _ = writeln!(out, "budget {i} {} {}", label(p), num(b));
            }
        }
    }
    out
}

fn print_boolean(b: &BooleanGame) -> String {
    let atoms = b.atoms();
    let mut out = String::new();
    let _ = writeln!(out, "game boolean");
    let _ = writeln!(out, "atoms {}", atoms.join(" "));
    for i in 0..b.num_players() {
        let own: Vec<&str> = b.control(i).iter().map(|&a| atoms[a].as_str()).collect();
        let _ = writeln!(out, "control {i} {}", own.join(" "));
    }
    for i in 0..b.num_players() {
        let _ = writeln!(out, "goalformula {i} \"{}\"", b.goal(i).display(atoms));
    }
    for i in 0..b.num_players() {
        for v in 0..b.num_valuations() {
            let c = b.cost(v, i);
            if c != 0.0 {
                let _ = writeln!(out, "cost {i} {} {}", b.valuation_label(v), num(c));
            }
        }
    }
    let _ = writeln!(out, "epsilon {}", num(b.epsilon()));
    if b.budget_mode() == BudgetMode::Literal {
        let _ = writeln!(out, "budgets literal");
    }
    out
}
