//! Match playout, evaluation campaigns, training runs and reports.
//!
//! Every match is driven by two random streams derived from its seed: one
//! for the board (generation and refills) and one for the player. Match `i`
//! of a campaign with base seed `s` uses seed `s + i`, so campaigns are
//! reproducible and different players face the same opening boards.

mod report;
mod selfcheck;

pub use report::{read_report, report_to_string, write_report, CurveWriter, REPORT_HEADER};
pub use selfcheck::{selfcheck, CheckResult};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::agents::{compute_reward, random_player_select, smart_player_select, JellyGym, RewardConfig, SelectMode};
use crate::engine::{Move, MoveOutcome};
use crate::error::{Error, Result};
use crate::levels::{init_match, step, LevelSpec, MatchState, Status};
use crate::rng::{board_stream, player_stream, GameRng};

/// Selection attempts allowed per unit of move budget.
pub const ATTEMPT_CAP_FACTOR: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Random,
    Smart,
    JellyGym,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Random, AgentKind::Smart, AgentKind::JellyGym];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::Smart => "smart",
            AgentKind::JellyGym => "jellygym",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown agent `{s}`")))
    }
}

/// A player ready to play matches.
#[derive(Clone, Debug)]
pub enum Agent {
    Random,
    Smart,
    JellyGym(Box<JellyGym<f64>>),
}

impl Agent {
    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Random => AgentKind::Random,
            Agent::Smart => AgentKind::Smart,
            Agent::JellyGym(_) => AgentKind::JellyGym,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlayMode {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub level: String,
    pub agent: String,
    pub won: bool,
    pub valid_moves_used: u32,
    pub invalid_attempts: u32,
    pub total_reward: f64,
    pub seed: u64,
}

/// Move choice plus what happens after each applied move.
trait Driver {
    fn select(&mut self, state: &MatchState, rng: &mut GameRng) -> Result<Move>;
    fn after(
        &mut self,
        before: &MatchState,
        mv: Move,
        after: &MatchState,
        outcome: &MoveOutcome,
        rng: &mut GameRng,
    ) -> Result<f64>;
}

/// Read-only player; JellyGym plays greedily.
struct Frozen<'a>(&'a Agent);

impl Driver for Frozen<'_> {
    fn select(&mut self, state: &MatchState, rng: &mut GameRng) -> Result<Move> {
        match self.0 {
            Agent::Random => random_player_select(state, rng),
            Agent::Smart => smart_player_select(state, rng),
            Agent::JellyGym(a) => a.greedy_move(state),
        }
    }

    fn after(
        &mut self,
        before: &MatchState,
        _: Move,
        after: &MatchState,
        o: &MoveOutcome,
        _: &mut GameRng,
    ) -> Result<f64> {
        Ok(compute_reward(
            before,
            after,
            &o.cascade,
            o.valid,
            &RewardConfig::default(),
        ))
    }
}

/// JellyGym in training: sampled moves, learning after every move.
struct Learner<'a>(&'a mut JellyGym<f64>);

impl Driver for Learner<'_> {
    fn select(&mut self, state: &MatchState, rng: &mut GameRng) -> Result<Move> {
        self.0.select_move(state, SelectMode::Train, rng)
    }

    fn after(
        &mut self,
        before: &MatchState,
        mv: Move,
        after: &MatchState,
        o: &MoveOutcome,
        rng: &mut GameRng,
    ) -> Result<f64> {
        self.0.observe(before, mv, after, o, rng)
    }
}

fn run_match<D: Driver>(driver: &mut D, agent: &str, level: &LevelSpec, seed: u64) -> Result<MatchResult> {
    let mut board_rng = board_stream(seed);
    let mut player_rng = player_stream(seed);
    let mut state = init_match(level, &mut board_rng)?;
    let cap = ATTEMPT_CAP_FACTOR * level.move_budget.max(1);
    let (mut attempts, mut invalid, mut total_reward) = (0u32, 0u32, 0.0);
    while !state.is_terminal() && attempts < cap {
        let mv = driver.select(&state, &mut player_rng)?;
        attempts += 1;
        let (next, outcome) = step(&state, mv, &mut board_rng)?;
        if !outcome.valid {
            invalid += 1;
        }
        total_reward += driver.after(&state, mv, &next, &outcome, &mut player_rng)?;
        state = next;
    }
    Ok(MatchResult {
        level: level.name.clone(),
        agent: agent.to_string(),
        won: state.status == Status::Won,
        valid_moves_used: state.moves_used(),
        invalid_attempts: invalid,
        total_reward,
        seed,
    })
}

/// Plays one match. In train mode a JellyGym agent learns after every move
/// and syncs its oracle at the end; other agents ignore the mode.
pub fn play_match(agent: &mut Agent, level: &LevelSpec, seed: u64, mode: PlayMode) -> Result<MatchResult> {
    match (agent, mode) {
        (Agent::JellyGym(a), PlayMode::Train) => {
            let result = run_match(&mut Learner(a), "jellygym", level, seed);
            a.finish_episode();
            result
        }
        (agent, _) => play_eval(agent, level, seed),
    }
}

/// Eval-mode match that leaves the agent untouched.
pub fn play_eval(agent: &Agent, level: &LevelSpec, seed: u64) -> Result<MatchResult> {
    run_match(&mut Frozen(agent), agent.name(), level, seed)
}

/// Aggregate of one (level, agent) campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationRow {
    pub level: String,
    pub agent: String,
    pub matches: u32,
    pub wins: u32,
    pub success_rate: f64,
    pub mean_moves: f64,
    pub seed: u64,
}

impl EvaluationRow {
    pub fn from_results(level: &str, agent: &str, seed: u64, results: &[MatchResult]) -> Self {
        let matches = results.len() as u32;
        let wins = results.iter().filter(|r| r.won).count() as u32;
        let moves: u64 = results.iter().map(|r| r.valid_moves_used as u64).sum();
        let n = matches.max(1) as f64;
        EvaluationRow {
            level: level.to_string(),
            agent: agent.to_string(),
            matches,
            wins,
            success_rate: wins as f64 / n,
            mean_moves: moves as f64 / n,
            seed,
        }
    }
}

pub type EvaluationReport = Vec<EvaluationRow>;

/// Eval-mode campaign over seeds `base_seed..base_seed + matches`, played in
/// parallel; results keep seed order.
pub fn evaluate_matches(agent: &Agent, level: &LevelSpec, matches: u32, base_seed: u64) -> Result<Vec<MatchResult>> {
    if matches == 0 {
        return Err(Error::Parameter("matches must be at least 1".into()));
    }
    (0..matches as u64)
        .into_par_iter()
        .map(|i| play_eval(agent, level, base_seed.wrapping_add(i)))
        .collect()
}

pub fn evaluate(agent: &Agent, level: &LevelSpec, matches: u32, base_seed: u64) -> Result<EvaluationRow> {
    let results = evaluate_matches(agent, level, matches, base_seed)?;
    Ok(EvaluationRow::from_results(
        &level.name,
        agent.name(),
        base_seed,
        &results,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub episode: u32,
    pub won: bool,
    pub cumulative_success_rate: f64,
    pub episode_reward: f64,
    pub valid_moves_used: u32,
}

pub type TrainingCurve = Vec<CurvePoint>;

/// Sequential training episodes with seeds `base_seed..`. Curve rows are
/// appended to `curve_path` as episodes finish; the final agent is saved to
/// `checkpoint_path`.
pub fn train(
    agent: &mut JellyGym<f64>,
    level: &LevelSpec,
    episodes: u32,
    base_seed: u64,
    curve_path: Option<&Path>,
    checkpoint_path: Option<&Path>,
) -> Result<TrainingCurve> {
    if episodes == 0 {
        return Err(Error::Parameter("episodes must be at least 1".into()));
    }
    let mut writer = curve_path.map(CurveWriter::create).transpose()?;
    let mut curve = Vec::with_capacity(episodes as usize);
    let mut wins = 0u32;
    for k in 0..episodes {
        let result = run_match(&mut Learner(agent), "jellygym", level, base_seed.wrapping_add(k as u64))?;
        agent.finish_episode();
        wins += result.won as u32;
        let point = CurvePoint {
            episode: k + 1,
            won: result.won,
            cumulative_success_rate: wins as f64 / (k + 1) as f64,
            episode_reward: result.total_reward,
            valid_moves_used: result.valid_moves_used,
        };
        if let Some(w) = writer.as_mut() {
            w.push(&point)?;
        }
        curve.push(point);
    }
    if let Some(path) = checkpoint_path {
        agent.save(path, base_seed)?;
    }
    Ok(curve)
}

/// Every (level, agent) pair, levels outermost, each over the same seeds.
pub fn compare(
    levels: &[LevelSpec],
    agents: &[Agent],
    matches: u32,
    base_seed: u64,
    report_path: Option<&Path>,
) -> Result<EvaluationReport> {
    if levels.is_empty() || agents.is_empty() {
        return Err(Error::Parameter(
            "compare needs at least one level and one agent".into(),
        ));
    }
    let mut rows = Vec::with_capacity(levels.len() * agents.len());
    for level in levels {
        for agent in agents {
            rows.push(evaluate(agent, level, matches, base_seed)?);
        }
    }
    if let Some(path) = report_path {
        write_report(path, &rows)?;
    }
    Ok(rows)
}

/// Level files (`*.json`) in a directory, sorted by file name.
pub fn load_level_dir(dir: &Path) -> Result<Vec<LevelSpec>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::file(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::file(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!("no level files in {}", dir.display())));
    }
    paths.iter().map(|p| LevelSpec::load(p)).collect()
}
