use proptest::prelude::*;
use rand::Rng;

use jellygym::agents::{
    argmax, compute_reward, encode_state, masked_distribution, valid_actions, ReplayMemory, RewardConfig, Transition,
};
use jellygym::engine::{
    apply_move, find_matches, generate_board, hamming_distance, is_valid_move, theoretical_move_count, valid_moves,
    zero_pad, Board, Direction, Move, Pos, Tile,
};
use jellygym::levels::{builtin_tiers, init_match, step, MatchState, Status};
use jellygym::nn::softmax;
use jellygym::rng::seeded;

const DIRS: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

fn stable_board(seed: u64, rows: usize, cols: usize) -> Option<Board> {
    generate_board(rows, cols, 6, None, &mut seeded(seed)).ok()
}

fn tier_state(seed: u64, tier: usize) -> MatchState {
    init_match(&builtin_tiers()[tier], &mut seeded(seed)).unwrap()
}

fn color(b: &Board, r: usize, c: usize) -> Option<u8> {
    match b.get(Pos::new(r, c)) {
        Tile::Color(k) => Some(k),
        _ => None,
    }
}

fn has_run(b: &Board) -> bool {
    let (rows, cols) = (b.rows(), b.cols());
    let same = |cells: [(usize, usize); 3]| {
        let k = color(b, cells[0].0, cells[0].1);
        k.is_some() && cells.iter().all(|&(r, c)| color(b, r, c) == k)
    };
    (0..rows).any(|r| (0..cols.saturating_sub(2)).any(|c| same([(r, c), (r, c + 1), (r, c + 2)])))
        || (0..rows.saturating_sub(2)).any(|r| (0..cols).any(|c| same([(r, c), (r + 1, c), (r + 2, c)])))
}

/// Validity on a joker-free stable board: both cells hold colors and the
/// swapped board has a run of three.
fn oracle_valid(b: &Board, r: usize, c: usize, d: usize) -> bool {
    let (dr, dc): (isize, isize) = [(-1, 0), (0, 1), (1, 0), (0, -1)][d];
    let (r2, c2) = (r as isize + dr, c as isize + dc);
    if r2 < 0 || c2 < 0 || r2 as usize >= b.rows() || c2 as usize >= b.cols() {
        return false;
    }
    let (p, q) = (Pos::new(r, c), Pos::new(r2 as usize, c2 as usize));
    if color(b, p.row, p.col).is_none() || color(b, q.row, q.col).is_none() {
        return false;
    }
    let mut s = b.clone();
    s.swap(p, q);
    has_run(&s)
}

fn well_formed(b: &Board) -> bool {
    b.positions().all(|p| match b.get(p) {
        Tile::Empty => !b.is_playable(p),
        Tile::Color(k) => (1..=6).contains(&k) && b.is_playable(p),
        _ => b.is_playable(p),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn move_count_formula(m in 3usize..=9, n in 3usize..=9) {
        let mut brute = 0;
        for r in 0..m {
            for c in 0..n {
                brute += (r > 0) as usize + (c + 1 < n) as usize + (r + 1 < m) as usize + (c > 0) as usize;
            }
        }
        prop_assert_eq!(theoretical_move_count(m, n).unwrap(), brute);
    }

    #[test]
    fn valid_moves_match_oracle(seed in any::<u64>(), m in 3usize..=9, n in 3usize..=9) {
        let Some(b) = stable_board(seed, m, n) else { return Ok(()) };
        prop_assert!(find_matches(&b).is_empty());
        for r in 0..m {
            for c in 0..n {
                for (d, &dir) in DIRS.iter().enumerate() {
                    let mv = Move::new(r, c, dir);
                    let lib = is_valid_move(&b, mv).unwrap_or(false);
                    prop_assert_eq!(lib, oracle_valid(&b, r, c, d), "{:?} on\n{}", mv, b);
                }
            }
        }
        let count = (0..m).flat_map(|r| (0..n).flat_map(move |c| (0..4).map(move |d| (r, c, d))))
            .filter(|&(r, c, d)| oracle_valid(&b, r, c, d)).count();
        prop_assert_eq!(valid_moves(&b).len(), count);
        prop_assert!(count >= 2);
    }

    #[test]
    fn tier_boards_validity_matches_oracle(seed in any::<u64>(), tier in 0usize..5) {
        let s = tier_state(seed, tier);
        let b = &s.board;
        prop_assert!(well_formed(b));
        prop_assert!(find_matches(b).is_empty());
        let count = (0..b.rows()).flat_map(|r| (0..b.cols()).flat_map(move |c| (0..4).map(move |d| (r, c, d))))
            .filter(|&(r, c, d)| oracle_valid(b, r, c, d)).count();
        prop_assert_eq!(valid_moves(b).len(), count);
        prop_assert!(count >= 1);
    }

    #[test]
    fn hamming_is_a_metric(seed in any::<u64>(), m in 3usize..=9, n in 3usize..=9) {
        let mut rng = seeded(seed);
        let mut boards = Vec::new();
        while boards.len() < 3 {
            if let Ok(b) = generate_board(m, n, 6, None, &mut rng) {
                boards.push(b);
            }
        }
        let d = |a: &Board, b: &Board| hamming_distance(a, b).unwrap();
        let brute = boards[0].positions().filter(|&p| boards[0].get(p) != boards[1].get(p)).count();
        prop_assert_eq!(d(&boards[0], &boards[1]), brute);
        prop_assert_eq!(d(&boards[0], &boards[0]), 0);
        prop_assert_eq!(d(&boards[0], &boards[1]), d(&boards[1], &boards[0]));
        prop_assert!(d(&boards[0], &boards[2]) <= d(&boards[0], &boards[1]) + d(&boards[1], &boards[2]));
        prop_assert!(d(&boards[0], &boards[1]) <= m * n);
    }

    #[test]
    fn moves_leave_stable_well_formed_boards(seed in any::<u64>(), tier in 0usize..5, pick in any::<prop::sample::Index>()) {
        let s = tier_state(seed, tier);
        let moves = valid_moves(&s.board);
        let mv = moves[pick.index(moves.len())];
        let out = apply_move(&s.board, mv, &mut seeded(seed ^ 1)).unwrap();
        prop_assert!(out.valid);
        prop_assert!(out.cascade.matches_resolved >= 1);
        prop_assert!(find_matches(out.board()).is_empty());
        prop_assert!(well_formed(out.board()));
        prop_assert_eq!(out.board().playable_mask(), s.board.playable_mask());
    }

    #[test]
    fn invalid_moves_change_nothing(seed in any::<u64>(), tier in 0usize..5) {
        let s = tier_state(seed, tier);
        let valid = valid_moves(&s.board);
        let invalid = s.board.positions()
            .flat_map(|p| DIRS.iter().map(move |&d| Move::new(p.row, p.col, d)))
            .find(|mv| s.board.target_of(*mv).is_some() && !valid.contains(mv));
        if let Some(mv) = invalid {
            let (after, outcome) = step(&s, mv, &mut seeded(seed)).unwrap();
            prop_assert!(!outcome.valid);
            prop_assert_eq!(after, s);
        }
    }

    #[test]
    fn step_accounting_and_status(seed in any::<u64>(), tier in 0usize..5, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..30)) {
        let mut s = tier_state(seed, tier);
        let mut rng = seeded(seed ^ 2);
        for pick in picks {
            if s.is_terminal() {
                prop_assert!(step(&s, Move::new(0, 0, Direction::Right), &mut rng).is_err());
                break;
            }
            let moves = valid_moves(&s.board);
            let (after, outcome) = step(&s, moves[pick.index(moves.len())], &mut rng).unwrap();
            prop_assert!(outcome.valid);
            prop_assert_eq!(after.moves_left + 1, s.moves_left);
            prop_assert!(after.progress >= s.progress);
            let won = after.progress >= after.objective.target;
            prop_assert_eq!(after.status == Status::Won, won);
            prop_assert_eq!(after.status == Status::Lost, !won && after.moves_left == 0);
            prop_assert!(after.is_terminal() || !valid_moves(&after.board).is_empty());
            let r = compute_reward(&s, &after, &outcome.cascade, true, &RewardConfig::default());
            prop_assert!((-1.0..=81.0).contains(&r));
            s = after;
        }
    }

    #[test]
    fn zero_pad_embeds_top_left(seed in any::<u64>(), m in 3usize..=9, n in 3usize..=9) {
        let Some(b) = stable_board(seed, m, n) else { return Ok(()) };
        let p = zero_pad(&b);
        prop_assert_eq!((p.rows(), p.cols()), (9, 9));
        for q in p.positions() {
            if q.row < m && q.col < n {
                prop_assert_eq!(p.get(q), b.get(q));
            } else {
                prop_assert_eq!(p.get(q), Tile::Empty);
                prop_assert!(!p.is_playable(q));
            }
        }
    }

    #[test]
    fn encoding_codes(seed in any::<u64>(), tier in 0usize..5) {
        let s = tier_state(seed, tier);
        let x: Vec<f64> = encode_state(&s);
        prop_assert_eq!(x.len(), 82);
        let allowed = |v: f64| (-1..=10).any(|k| k != 0 && (v - k as f64 / 6.0).abs() < 1e-12) || v == 0.0;
        prop_assert!(x[..81].iter().all(|&v| allowed(v)));
        prop_assert!((0.0..=1.0).contains(&x[81]));
    }

    #[test]
    fn softmax_normalized_and_shift_invariant(logits in prop::collection::vec(-50.0f64..50.0, 1..400), shift in -100.0f64..100.0) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masking_and_argmax_invariance(seed in any::<u64>(), tier in 0usize..5, scale in 1e-3f64..1e3) {
        let s = tier_state(seed, tier);
        let valid = valid_actions(&s.board);
        let mut rng = seeded(seed);
        let logits: Vec<f64> = (0..324).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let p = softmax(&logits);
        let m = masked_distribution(&p, &valid).unwrap();
        prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((0..324).all(|i| valid.contains(&i) || m[i] == 0.0));
        let scaled: Vec<f64> = p.iter().map(|v| v * scale).collect();
        let ms = masked_distribution(&scaled, &valid).unwrap();
        prop_assert_eq!(argmax(&m), argmax(&ms));
        prop_assert!(valid.contains(&argmax(&m)));
    }

    #[test]
    fn replay_memory_bounded_fifo(capacity in 1usize..40, pushes in 0usize..120, sample in 1usize..16, seed in any::<u64>()) {
        let mut mem = ReplayMemory::<f64>::new(capacity, sample);
        for k in 0..pushes {
            mem.push(Transition { state: vec![k as f64], action: k, reward: 0.0, next_state: vec![], next_valid: vec![], gamma: 0.5 });
            prop_assert!(mem.len() <= capacity);
        }
        let kept: Vec<usize> = mem.iter().map(|t| t.action).collect();
        let first = pushes.saturating_sub(capacity);
        prop_assert_eq!(kept, (first..pushes).collect::<Vec<_>>());
        let drawn = mem.sample(&mut seeded(seed));
        prop_assert_eq!(drawn.len(), mem.len().min(sample));
        let mut ids: Vec<usize> = drawn.iter().map(|t| t.action).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), drawn.len());
        prop_assert!(ids.iter().all(|&i| i >= first && i < pushes));
    }
}
