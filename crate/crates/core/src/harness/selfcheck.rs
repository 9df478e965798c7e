//! Fast invariant checks run by the `selfcheck` subcommand.

use rand::Rng;

use super::{evaluate_matches, Agent};
use crate::agents::{
    action_to_move, bellman_update, masked_distribution, positional_actions, valid_actions, AgentConfig, JellyGym,
    SelectMode, ACTIONS,
};
use crate::engine::theoretical_move_count;
use crate::engine::{generate_board, hamming_distance, is_valid_move, Board, CellKind, Tile, MAX_DIM, MIN_DIM};
use crate::levels::{builtin_tiers, MatchState, Status};
use crate::nn::{check_gradients, softmax, LossHead, Matrix, Network};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn full_board(rows: usize, cols: usize) -> Board {
    Board::from_layout(rows, cols, 6, &vec![CellKind::Playable; rows * cols]).expect("valid size")
}

fn random_tiles<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Board {
    let mut b = full_board(rows, cols);
    for p in b.positions().collect::<Vec<_>>() {
        b.set(p, Tile::Color(rng.gen_range(1..=6)));
    }
    b
}

fn random_match(seed: u64) -> Option<MatchState> {
    let mut rng = seeded(seed);
    let rows = rng.gen_range(MIN_DIM..=MAX_DIM);
    let cols = rng.gen_range(MIN_DIM..=MAX_DIM);
    let board = generate_board(rows, cols, 6, None, &mut rng).ok()?;
    let level = &builtin_tiers()[0];
    Some(MatchState {
        board,
        moves_left: level.move_budget,
        progress: 0,
        status: Status::InPlay,
        objective: level.objective,
        move_budget: level.move_budget,
    })
}

/// Runs every check; the suite passes when all entries pass.
pub fn selfcheck() -> Vec<CheckResult> {
    vec![
        check("move-count", || {
            for r in MIN_DIM..=MAX_DIM {
                for c in MIN_DIM..=MAX_DIM {
                    let n = positional_actions(&full_board(r, c)).len();
                    let t = theoretical_move_count(r, c).map_err(|e| e.to_string())?;
                    ensure(n == t, || format!("{r}x{c}: enumerated {n}, formula {t}"))?;
                }
            }
            Ok("49 sizes agree; 9x9 has 288".into())
        }),
        check("action-space", || {
            let forbidden = ACTIONS - positional_actions(&full_board(9, 9)).len();
            ensure(forbidden == 36, || format!("{forbidden} forbidden indices"))?;
            Ok("36 forbidden, 288 legal".into())
        }),
        check("bellman", || {
            let a = bellman_update(7.0, 2.0, 3.0, 1.0, 0.5).map_err(|e| e.to_string())?;
            let b = bellman_update(2.0, 4.0, 9.0, 0.5, 0.0).map_err(|e| e.to_string())?;
            let c = bellman_update(0.0f64, 5.0, 10.0, 0.001, 0.9).map_err(|e| e.to_string())?;
            ensure(a == 3.5 && b == 3.0 && (c - 0.014).abs() < 1e-12, || {
                format!("{a} {b} {c}")
            })?;
            Ok("examples hold".into())
        }),
        check("softmax", || {
            let p = softmax(&[3.0, -1.0, 0.0, 1e3]);
            let s: f64 = p.iter().sum();
            ensure((s - 1.0).abs() < 1e-9 && p.iter().all(|&v| v >= 0.0), || {
                format!("sum {s}")
            })?;
            Ok("normalized".into())
        }),
        check("hamming", || {
            let mut rng = seeded(17);
            for _ in 0..300 {
                let (r, c) = (rng.gen_range(3..=9), rng.gen_range(3..=9));
                let bs: Vec<Board> = (0..3).map(|_| random_tiles(r, c, &mut rng)).collect();
                let d = |a: &Board, b: &Board| hamming_distance(a, b).expect("same size");
                ensure(d(&bs[0], &bs[0]) == 0, || "identity".into())?;
                ensure(d(&bs[0], &bs[1]) == d(&bs[1], &bs[0]), || "symmetry".into())?;
                ensure(d(&bs[0], &bs[2]) <= d(&bs[0], &bs[1]) + d(&bs[1], &bs[2]), || {
                    "triangle".into()
                })?;
            }
            Ok("300 triples".into())
        }),
        check("masking", || {
            let mut agent = JellyGym::<f64>::new(AgentConfig::default(), &mut seeded(5)).map_err(|e| e.to_string())?;
            let mut rng = seeded(6);
            let mut boards = 0;
            for seed in 0..60 {
                let Some(state) = random_match(seed) else { continue };
                boards += 1;
                let valid = valid_actions(&state.board);
                let p = agent
                    .main()
                    .predict_probabilities(&crate::agents::encode_state(&state))
                    .map_err(|e| e.to_string())?;
                let m = masked_distribution(&p, &valid).map_err(|e| e.to_string())?;
                let s: f64 = m.iter().sum();
                ensure((s - 1.0).abs() < 1e-9, || format!("masked mass {s}"))?;
                for mode in [SelectMode::Train, SelectMode::Eval] {
                    let mv = agent.select_move(&state, mode, &mut rng).map_err(|e| e.to_string())?;
                    ensure(is_valid_move(&state.board, mv).unwrap_or(false), || {
                        format!("{mv} selected")
                    })?;
                }
            }
            ensure((0..ACTIONS).all(|i| action_to_move(i).is_ok()), || {
                "action decoding".into()
            })?;
            Ok(format!("{boards} boards, both modes"))
        }),
        check("gradients", || {
            let net = Network::<f64>::new(&[12, 16, 10, 8], &mut seeded(7)).map_err(|e| e.to_string())?;
            let mut rng = seeded(8);
            let x = Matrix::from_vec(4, 12, (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .map_err(|e| e.to_string())?;
            for head in [LossHead::Mse, LossHead::CrossEntropy] {
                let r = check_gradients(&net, &x, head, 60, 1e-5, 1e-4, 1e-6, &mut rng).map_err(|e| e.to_string())?;
                ensure(r.passed() && r.checked == 60, || format!("{head:?}: {:?}", r.failures))?;
            }
            Ok("MSE and cross-entropy heads".into())
        }),
        check("determinism", || {
            let level = &builtin_tiers()[0];
            let a = evaluate_matches(&Agent::Random, level, 8, 3).map_err(|e| e.to_string())?;
            let b = evaluate_matches(&Agent::Random, level, 8, 3).map_err(|e| e.to_string())?;
            ensure(a == b, || "two identical campaigns differ".into())?;
            Ok("repeatable campaigns".into())
        }),
    ]
}
