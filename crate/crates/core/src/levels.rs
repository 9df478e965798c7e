//! Level definitions, live match state and win/loss bookkeeping.
//!
//! Levels are JSON documents:
//!
//! ```json
//! {
//!   "name": "tier1", "rows": 9, "cols": 9, "palette": 6, "move_budget": 20,
//!   "objective": { "type": "collect_matches", "target": 10 },
//!   "layout": ["........."], "seed": 1
//! }
//! ```
//!
//! `layout` is optional; `.` is playable, `#` a hole, `B` a blocker.

use std::path::Path;

use rand::Rng;
use serde_json::{json, Map, Value};

use crate::engine::{
    apply_move, ensure_playable, generate_board, Board, CellKind, Move, MoveOutcome, MAX_DIM, MIN_DIM, NUM_COLORS,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    CollectMatches,
    CollectColor(u8),
    ClearBlockers,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub target: u32,
}

impl Objective {
    /// Objective units earned by one resolved move.
    pub fn units(&self, outcome: &MoveOutcome) -> u32 {
        let c = &outcome.cascade;
        let n = match self.kind {
            ObjectiveKind::CollectMatches => c.matches_resolved,
            ObjectiveKind::CollectColor(color) => c.colors_cleared[color as usize - 1],
            ObjectiveKind::ClearBlockers => c.blockers_cleared,
        };
        n as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub palette: u8,
    pub move_budget: u32,
    pub objective: Objective,
    /// Row-major, `rows * cols` cells.
    pub layout: Vec<CellKind>,
    pub seed: Option<u64>,
}

fn parse_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.to_string(),
        message: message.into(),
    }
}

fn int_field(obj: &Map<String, Value>, field: &str, path: &str) -> Result<Option<i64>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_i64()
            .map(Some)
            .ok_or_else(|| parse_err(path, format!("expected an integer, got {v}"))),
    }
}

fn required_int(obj: &Map<String, Value>, field: &str, path: &str) -> Result<i64> {
    int_field(obj, field, path)?.ok_or_else(|| parse_err(path, "missing"))
}

fn in_range(field: &str, v: i64, lo: i64, hi: i64) -> Result<i64> {
    if v < lo || v > hi {
        return Err(Error::Validation(format!("{field}={v} outside {lo}..={hi}")));
    }
    Ok(v)
}

impl LevelSpec {
    /// Parses and validates a level document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| parse_err("<document>", e.to_string()))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| parse_err("<document>", "expected an object"))?;

        let name = match obj.get("name") {
            None | Some(Value::Null) => "level".to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(v) => return Err(parse_err("name", format!("expected a string, got {v}"))),
        };
        let rows = in_range(
            "rows",
            required_int(obj, "rows", "rows")?,
            MIN_DIM as i64,
            MAX_DIM as i64,
        )? as usize;
        let cols = in_range(
            "cols",
            required_int(obj, "cols", "cols")?,
            MIN_DIM as i64,
            MAX_DIM as i64,
        )? as usize;
        let palette = in_range(
            "palette",
            required_int(obj, "palette", "palette")?,
            2,
            NUM_COLORS as i64,
        )? as u8;
        let move_budget = in_range(
            "move_budget",
            required_int(obj, "move_budget", "move_budget")?,
            1,
            u32::MAX as i64,
        )? as u32;

        let objective = {
            let o = obj
                .get("objective")
                .ok_or_else(|| parse_err("objective", "missing"))?
                .as_object()
                .ok_or_else(|| parse_err("objective", "expected an object"))?;
            let kind = o
                .get("type")
                .and_then(Value::as_str)
                .ok_or_else(|| parse_err("objective.type", "missing or not a string"))?;
            let target = in_range(
                "objective.target",
                required_int(o, "target", "objective.target")?,
                1,
                u32::MAX as i64,
            )? as u32;
            let kind = match kind {
                "collect_matches" => ObjectiveKind::CollectMatches,
                "clear_blockers" => ObjectiveKind::ClearBlockers,
                "collect_color" => {
                    let c = int_field(o, "color", "objective.color")?
                        .ok_or_else(|| parse_err("objective.color", "required for collect_color"))?;
                    ObjectiveKind::CollectColor(in_range("objective.color", c, 1, palette as i64)? as u8)
                }
                other => return Err(parse_err("objective.type", format!("unknown objective {other:?}"))),
            };
            Objective { kind, target }
        };

        let layout = match obj.get("layout") {
            None | Some(Value::Null) => vec![CellKind::Playable; rows * cols],
            Some(Value::Array(lines)) => {
                if lines.len() != rows {
                    return Err(Error::Validation(format!(
                        "layout has {} rows, expected {rows}",
                        lines.len()
                    )));
                }
                let mut cells = Vec::with_capacity(rows * cols);
                for (r, line) in lines.iter().enumerate() {
                    let line = line
                        .as_str()
                        .ok_or_else(|| parse_err("layout", format!("row {r} is not a string")))?;
                    if line.chars().count() != cols {
                        return Err(Error::Validation(format!(
                            "layout row {r} has {} cells, expected {cols}",
                            line.chars().count()
                        )));
                    }
                    for ch in line.chars() {
                        cells.push(match ch {
                            '.' => CellKind::Playable,
                            '#' => CellKind::Hole,
                            'B' => CellKind::Blocker,
                            other => return Err(parse_err("layout", format!("unknown cell {other:?} in row {r}"))),
                        });
                    }
                }
                cells
            }
            Some(v) => return Err(parse_err("layout", format!("expected a list of strings, got {v}"))),
        };

        let seed = match obj.get("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| parse_err("seed", format!("expected a non-negative integer, got {v}")))?,
            ),
        };

        let spec = LevelSpec {
            name,
            rows,
            cols,
            palette,
            move_budget,
            objective,
            layout,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let non_hole = self.layout.iter().filter(|k| **k != CellKind::Hole).count();
        if non_hole < 9 {
            return Err(Error::Validation(format!(
                "only {non_hole} playable cells, need at least 9"
            )));
        }
        if self.objective.kind == ObjectiveKind::ClearBlockers && self.blocker_count() < self.objective.target as usize
        {
            return Err(Error::Validation(format!(
                "clear_blockers target {} exceeds the {} blockers in the layout",
                self.objective.target,
                self.blocker_count()
            )));
        }
        Ok(())
    }

    pub fn blocker_count(&self) -> usize {
        self.layout.iter().filter(|k| **k == CellKind::Blocker).count()
    }

    pub fn to_json(&self) -> String {
        let objective = match self.objective.kind {
            ObjectiveKind::CollectMatches => json!({"type": "collect_matches", "target": self.objective.target}),
            ObjectiveKind::ClearBlockers => json!({"type": "clear_blockers", "target": self.objective.target}),
            ObjectiveKind::CollectColor(c) => {
                json!({"type": "collect_color", "target": self.objective.target, "color": c})
            }
        };
        let layout: Vec<String> = self
            .layout
            .chunks(self.cols)
            .map(|row| {
                row.iter()
                    .map(|k| match k {
                        CellKind::Playable => '.',
                        CellKind::Hole => '#',
                        CellKind::Blocker => 'B',
                    })
                    .collect()
            })
            .collect();
        let mut doc = json!({
            "name": self.name,
            "rows": self.rows,
            "cols": self.cols,
            "palette": self.palette,
            "move_budget": self.move_budget,
            "objective": objective,
            "layout": layout,
        });
        if let Some(seed) = self.seed {
            doc["seed"] = json!(seed);
        }
        serde_json::to_string_pretty(&doc).expect("level serializes")
    }
}

const BUILTIN: [(&str, &str); 5] = [
    ("tier1", include_str!("../levels/tier1.json")),
    ("tier2", include_str!("../levels/tier2.json")),
    ("tier3", include_str!("../levels/tier3.json")),
    ("tier4", include_str!("../levels/tier4.json")),
    ("tier5", include_str!("../levels/tier5.json")),
];

/// The five shipped levels of increasing difficulty.
pub fn builtin_tiers() -> Vec<LevelSpec> {
    BUILTIN
        .iter()
        .map(|(_, text)| LevelSpec::parse(text).expect("builtin level parses"))
        .collect()
}

/// Builtin name (`tier1`, `tier-1`) or a path to a level file.
pub fn resolve_level(name_or_path: &str) -> Result<LevelSpec> {
    let key = name_or_path.replace('-', "");
    if let Some((_, text)) = BUILTIN.iter().find(|(n, _)| *n == key) {
        return LevelSpec::parse(text);
    }
    LevelSpec::load(Path::new(name_or_path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    InPlay,
    Won,
    Lost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchState {
    pub board: Board,
    pub moves_left: u32,
    pub progress: u32,
    pub status: Status,
    pub objective: Objective,
    pub move_budget: u32,
}

impl MatchState {
    pub fn moves_used(&self) -> u32 {
        self.move_budget - self.moves_left
    }

    pub fn is_terminal(&self) -> bool {
        self.status != Status::InPlay
    }

    fn settle_status(&mut self) {
        self.status = if self.progress >= self.objective.target {
            Status::Won
        } else if self.moves_left == 0 {
            Status::Lost
        } else {
            Status::InPlay
        };
    }

    /// Remaining fraction of the objective, `max(0, target - progress) / target`.
    pub fn objective_scalar(&self) -> f64 {
        let target = self.objective.target as f64;
        (target - self.progress as f64).max(0.0) / target
    }
}

/// Fresh match: stable board with at least one valid move, full move budget.
pub fn init_match<R: Rng + ?Sized>(level: &LevelSpec, rng: &mut R) -> Result<MatchState> {
    let board = generate_board(level.rows, level.cols, level.palette, Some(&level.layout), rng)?;
    Ok(MatchState {
        board,
        moves_left: level.move_budget,
        progress: 0,
        status: Status::InPlay,
        objective: level.objective,
        move_budget: level.move_budget,
    })
}

/// Applies a move. Invalid moves leave the state untouched and do not use up
/// the move counter.
pub fn step<R: Rng + ?Sized>(state: &MatchState, mv: Move, rng: &mut R) -> Result<(MatchState, MoveOutcome)> {
    if state.is_terminal() {
        return Err(Error::Lifecycle(format!(
            "step on a finished match ({:?})",
            state.status
        )));
    }
    let outcome = apply_move(&state.board, mv, rng)?;
    if !outcome.valid {
        return Ok((state.clone(), outcome));
    }
    let mut next = state.clone();
    next.moves_left -= 1;
    next.progress = next.progress.saturating_add(state.objective.units(&outcome));
    next.settle_status();
    next.board = if next.status == Status::InPlay {
        ensure_playable(outcome.board(), rng)?
    } else {
        outcome.board().clone()
    };
    Ok((next, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{cascade_test_rng, find_matches, has_valid_move, valid_moves, Direction, Tile};
    use crate::rng::seeded;

    const MINIMAL: &str = r#"{"rows":9,"cols":9,"palette":6,"move_budget":20,
        "objective":{"type":"collect_matches","target":10}}"#;

    #[test]
    fn minimal_document_defaults() {
        let l = LevelSpec::parse(MINIMAL).unwrap();
        assert_eq!((l.rows, l.cols, l.palette, l.move_budget), (9, 9, 6, 20));
        assert_eq!(l.layout.len(), 81);
        assert!(l.layout.iter().all(|k| *k == CellKind::Playable));
        assert_eq!(l.objective.kind, ObjectiveKind::CollectMatches);
        assert_eq!(l.seed, None);
    }

    #[test]
    fn rows_out_of_range() {
        let doc = MINIMAL.replace("\"rows\":9", "\"rows\":2");
        assert!(matches!(LevelSpec::parse(&doc), Err(Error::Validation(_))));
    }

    #[test]
    fn errors_name_the_field() {
        let doc = MINIMAL.replace("\"palette\":6,", "");
        match LevelSpec::parse(&doc) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "palette"),
            other => panic!("{other:?}"),
        }
        let doc = MINIMAL.replace("\"move_budget\":20", "\"move_budget\":\"x\"");
        match LevelSpec::parse(&doc) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "move_budget"),
            other => panic!("{other:?}"),
        }
        let doc = MINIMAL.replace("collect_matches", "collect_gems");
        match LevelSpec::parse(&doc) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "objective.type"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collect_color_needs_color_in_palette() {
        let doc = r#"{"rows":5,"cols":5,"palette":4,"move_budget":5,
            "objective":{"type":"collect_color","target":3,"color":5}}"#;
        assert!(matches!(LevelSpec::parse(doc), Err(Error::Validation(_))));
    }

    #[test]
    fn layout_with_three_blockers() {
        let doc = r##"{"name":"b","rows":3,"cols":4,"palette":6,"move_budget":5,
            "objective":{"type":"clear_blockers","target":3},
            "layout":["B..B","....","#.B."]}"##;
        let l = LevelSpec::parse(doc).unwrap();
        assert_eq!(l.blocker_count(), 3);
        assert_eq!(l.layout[8], CellKind::Hole);
        assert_eq!(LevelSpec::parse(&l.to_json()).unwrap(), l);
    }

    #[test]
    fn too_few_cells() {
        let doc = r##"{"rows":3,"cols":3,"palette":6,"move_budget":5,
            "objective":{"type":"collect_matches","target":1},
            "layout":["..#","...","..."]}"##;
        assert!(matches!(LevelSpec::parse(doc), Err(Error::Validation(_))));
    }

    #[test]
    fn builtin_tiers_parse() {
        let tiers = builtin_tiers();
        assert_eq!(tiers.len(), 5);
        let t1 = &tiers[0];
        assert_eq!((t1.rows, t1.cols, t1.palette, t1.move_budget), (9, 9, 6, 20));
        assert_eq!(
            t1.objective,
            Objective {
                kind: ObjectiveKind::CollectMatches,
                target: 10
            }
        );
        assert_eq!(resolve_level("tier-3").unwrap(), tiers[2]);
    }

    #[test]
    fn tiers_grow_harder() {
        let tiers = builtin_tiers();
        let blockers = |l: &LevelSpec| l.layout.iter().filter(|&&k| k == CellKind::Blocker).count();
        for w in tiers.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert_eq!(a.objective.kind, b.objective.kind);
            assert!(b.move_budget < a.move_budget, "{} -> {}", a.name, b.name);
            assert!(b.objective.target >= a.objective.target, "{} -> {}", a.name, b.name);
            assert!(blockers(b) >= blockers(a), "{} -> {}", a.name, b.name);
        }
    }

    #[test]
    fn init_is_stable_playable_and_deterministic() {
        let l = LevelSpec::parse(MINIMAL).unwrap();
        for seed in 0..20 {
            let s = init_match(&l, &mut seeded(seed)).unwrap();
            assert!(find_matches(&s.board).is_empty());
            assert!(has_valid_move(&s.board));
            assert_eq!((s.moves_left, s.progress, s.status), (20, 0, Status::InPlay));
            assert_eq!(s, init_match(&l, &mut seeded(seed)).unwrap());
        }
    }

    #[test]
    fn all_blocker_level_is_unplayable() {
        let doc = r#"{"rows":3,"cols":3,"palette":6,"move_budget":5,
            "objective":{"type":"collect_matches","target":1},
            "layout":["BBB","BBB","BBB"]}"#;
        let l = LevelSpec::parse(doc).unwrap();
        assert!(matches!(init_match(&l, &mut seeded(0)), Err(Error::Unplayable { .. })));
    }

    fn state_on(board: &str, budget: u32, target: u32) -> MatchState {
        let rows: Vec<&str> = board.split('/').collect();
        MatchState {
            board: Board::parse(&rows).unwrap(),
            moves_left: budget,
            progress: 0,
            status: Status::InPlay,
            objective: Objective {
                kind: ObjectiveKind::CollectMatches,
                target,
            },
            move_budget: budget,
        }
    }

    #[test]
    fn invalid_move_keeps_state() {
        let s = state_on("11245/34163/56434", 5, 3);
        let (next, out) = step(&s, Move::new(1, 0, Direction::Right), &mut seeded(1)).unwrap();
        assert!(!out.valid);
        assert_eq!(next, s);
    }

    #[test]
    fn win_and_loss_thresholds() {
        let s = state_on("11245/34163/56434", 5, 1);
        let (won, _) = step(&s, Move::new(0, 2, Direction::Down), &mut seeded(1)).unwrap();
        assert_eq!(won.status, Status::Won);
        assert_eq!(won.moves_left, 4);
        assert!(step(&won, Move::new(0, 2, Direction::Down), &mut seeded(1)).is_err());

        let s = state_on("11245/34163/56434", 1, 50);
        let (lost, out) = step(&s, Move::new(0, 2, Direction::Down), &mut seeded(1)).unwrap();
        assert!(out.cascade.matches_resolved < 50);
        assert_eq!(lost.status, Status::Lost);
        assert_eq!(lost.moves_left, 0);
    }

    #[test]
    fn two_matches_reach_target_two() {
        let s = state_on("11245/34163/56434", 5, 2);
        // Refill 3 3 3 re-matches the top row once, then 5 6 5 settles.
        let mut r = cascade_test_rng(6, &[3, 3, 3, 5, 6, 5]);
        let (next, out) = step(&s, Move::new(0, 2, Direction::Down), &mut r).unwrap();
        assert_eq!(out.cascade.matches_resolved, 2);
        assert_eq!(next.status, Status::Won);
    }

    #[test]
    fn objective_scalar_values() {
        let mut s = state_on("11245/34163/56434", 5, 10);
        assert_eq!(s.objective_scalar(), 1.0);
        s.progress = 4;
        assert!((s.objective_scalar() - 0.6).abs() < 1e-15);
        s.progress = 10;
        assert_eq!(s.objective_scalar(), 0.0);
        s.progress = 12;
        assert_eq!(s.objective_scalar(), 0.0);
    }

    #[test]
    fn collect_color_counts_cleared_cells() {
        let mut s = state_on("11245/34163/56434", 5, 10);
        s.objective = Objective {
            kind: ObjectiveKind::CollectColor(1),
            target: 10,
        };
        let mut r = cascade_test_rng(6, &[5, 6, 5]);
        let (next, _) = step(&s, Move::new(0, 2, Direction::Down), &mut r).unwrap();
        assert_eq!(next.progress, 3);
    }

    #[test]
    fn valid_steps_bounded_by_budget() {
        let l = LevelSpec::parse(&MINIMAL.replace("\"target\":10", "\"target\":1000")).unwrap();
        let mut rng = seeded(5);
        let mut s = init_match(&l, &mut rng).unwrap();
        let mut valid = 0;
        while !s.is_terminal() {
            let mv = valid_moves(&s.board)[0];
            let (n, out) = step(&s, mv, &mut rng).unwrap();
            valid += out.valid as u32;
            assert!(n.progress >= s.progress);
            assert_eq!(n.moves_left + 1, s.moves_left);
            s = n;
        }
        assert_eq!(valid, 20);
        assert_eq!(s.status, Status::Lost);
        assert!(s.board.tiles().iter().all(|t| *t != Tile::Empty));
    }
}
