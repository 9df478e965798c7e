use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use super::board::{Board, JokerKind, Move, Pos, Tile};
use super::matching::{find_matches, is_valid_move, joker_for_group};
use super::NUM_COLORS;
use crate::error::Result;

/// Aggregate effect of one move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeOutcome {
    pub board: Board,
    /// Colored tiles and jokers removed.
    pub cleared: usize,
    /// Match groups resolved across all cascade waves; a joker swap counts as one.
    pub matches_resolved: usize,
    pub jokers_created: usize,
    pub blockers_cleared: usize,
    /// Cleared tiles per color, index `c - 1`.
    pub colors_cleared: [usize; NUM_COLORS as usize],
    /// Number of clear/fall/refill waves.
    pub waves: usize,
}

impl CascadeOutcome {
    fn unchanged(board: &Board) -> Self {
        CascadeOutcome {
            board: board.clone(),
            cleared: 0,
            matches_resolved: 0,
            jokers_created: 0,
            blockers_cleared: 0,
            colors_cleared: [0; NUM_COLORS as usize],
            waves: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveOutcome {
    pub valid: bool,
    pub cascade: CascadeOutcome,
}

impl MoveOutcome {
    pub fn board(&self) -> &Board {
        &self.cascade.board
    }
}

/// Swaps, then resolves matches, joker blasts, blocker damage, gravity and
/// refills until the board is stable. Invalid moves leave the board as is.
pub fn apply_move<R: Rng + ?Sized>(board: &Board, mv: Move, rng: &mut R) -> Result<MoveOutcome> {
    let target = board.legal_target(mv)?;
    if !is_valid_move(board, mv)? {
        return Ok(MoveOutcome {
            valid: false,
            cascade: CascadeOutcome::unchanged(board),
        });
    }

    let mut work = board.clone();
    work.swap(mv.pos, target);
    let mut out = CascadeOutcome::unchanged(board);

    // Jokers moved by the swap fire immediately.
    let mut blast = BTreeSet::new();
    let mut activated = BTreeSet::new();
    let (tile_src, tile_dst) = (work.get(mv.pos), work.get(target));
    let fired: Vec<(Pos, JokerKind, Tile)> = [(mv.pos, tile_src, tile_dst), (target, tile_dst, tile_src)]
        .into_iter()
        .filter_map(|(p, t, partner)| match t {
            Tile::Joker(k) => Some((p, k, partner)),
            _ => None,
        })
        .collect();
    if !fired.is_empty() {
        out.matches_resolved += 1;
        for (p, kind, partner) in fired {
            activated.insert(p);
            blast.extend(joker_effect(&work, p, kind, partner.color()));
        }
    }

    let swapped = [mv.pos, target];
    let mut first = true;
    loop {
        let groups = find_matches(&work);
        if groups.is_empty() && blast.is_empty() {
            break;
        }
        out.waves += 1;
        out.matches_resolved += groups.len();

        let mut clear: BTreeSet<Pos> = std::mem::take(&mut blast);
        let mut created = Vec::new();
        for g in &groups {
            clear.extend(g.cells.iter().copied());
            if let Some(kind) = joker_for_group(g) {
                let at = if first {
                    swapped.iter().copied().find(|&p| g.contains(p)).unwrap_or(g.pivot)
                } else {
                    g.pivot
                };
                created.push((at, kind));
            }
        }

        // Jokers caught in a clear fire in turn.
        let mut queue: VecDeque<Pos> = clear
            .iter()
            .copied()
            .filter(|p| matches!(work.get(*p), Tile::Joker(_)) && !activated.contains(p))
            .collect();
        while let Some(p) = queue.pop_front() {
            if !activated.insert(p) {
                continue;
            }
            let Tile::Joker(kind) = work.get(p) else { continue };
            for q in joker_effect(&work, p, kind, None) {
                if clear.insert(q) && matches!(work.get(q), Tile::Joker(_)) {
                    queue.push_back(q);
                }
            }
        }

        let mut broken = BTreeSet::new();
        for &p in &clear {
            match work.get(p) {
                Tile::Color(c) => {
                    out.colors_cleared[c as usize - 1] += 1;
                    out.cleared += 1;
                }
                Tile::Joker(_) => out.cleared += 1,
                Tile::Blocker => {
                    broken.insert(p);
                }
                Tile::Empty => continue,
            }
            work.set(p, Tile::Empty);
        }
        let adjacent: Vec<Pos> = clear
            .iter()
            .flat_map(|&p| neighbours(&work, p))
            .filter(|&q| work.get(q) == Tile::Blocker)
            .collect();
        for q in adjacent {
            broken.insert(q);
            work.set(q, Tile::Empty);
        }
        out.blockers_cleared += broken.len();

        for (at, kind) in created {
            work.set(at, Tile::Joker(kind));
            out.jokers_created += 1;
        }

        apply_gravity(&mut work);
        refill(&mut work, rng);
        first = false;
    }

    out.board = work;
    Ok(MoveOutcome {
        valid: true,
        cascade: out,
    })
}

fn neighbours(board: &Board, p: Pos) -> impl Iterator<Item = Pos> + '_ {
    super::board::Direction::ALL
        .into_iter()
        .filter_map(move |d| super::board::Move { pos: p, dir: d }.target())
        .filter(|q| board.is_playable(*q))
}

/// Cells cleared when the joker at `p` fires. A color bomb without a color
/// partner targets the most common color on the board.
fn joker_effect(board: &Board, p: Pos, kind: JokerKind, partner: Option<u8>) -> Vec<Pos> {
    let mut cells: Vec<Pos> = match kind {
        JokerKind::StripedRow => (0..board.cols()).map(|c| Pos::new(p.row, c)).collect(),
        JokerKind::StripedCol => (0..board.rows()).map(|r| Pos::new(r, p.col)).collect(),
        JokerKind::Wrapped => {
            let mut v = Vec::with_capacity(9);
            for r in p.row.saturating_sub(1)..=(p.row + 1).min(board.rows() - 1) {
                for c in p.col.saturating_sub(1)..=(p.col + 1).min(board.cols() - 1) {
                    v.push(Pos::new(r, c));
                }
            }
            v
        }
        JokerKind::ColorBomb => {
            let color = partner.or_else(|| most_common_color(board));
            let mut v: Vec<Pos> = match color {
                Some(c) => board.positions().filter(|&q| board.get(q) == Tile::Color(c)).collect(),
                None => Vec::new(),
            };
            v.push(p);
            v
        }
    };
    cells.retain(|&q| board.is_playable(q));
    cells
}

fn most_common_color(board: &Board) -> Option<u8> {
    let counts = board.count_colors();
    let best = counts.iter().copied().max().filter(|&n| n > 0)?;
    counts.iter().position(|&n| n == best).map(|i| i as u8 + 1)
}

/// Drops colors and jokers down each column. Blockers and holes stay put;
/// falling tiles pass over them into the next free playable cell below.
pub fn apply_gravity(board: &mut Board) {
    for c in 0..board.cols() {
        let slots: Vec<Pos> = (0..board.rows())
            .rev()
            .map(|r| Pos::new(r, c))
            .filter(|&p| board.is_playable(p) && board.get(p) != Tile::Blocker)
            .collect();
        let falling: Vec<Tile> = slots.iter().map(|&p| board.get(p)).filter(|t| t.is_movable()).collect();
        for (i, &p) in slots.iter().enumerate() {
            board.set(p, falling.get(i).copied().unwrap_or(Tile::Empty));
        }
    }
}

// Row-major, top to bottom.
fn refill<R: Rng + ?Sized>(board: &mut Board, rng: &mut R) {
    let palette = board.palette();
    for i in 0..board.rows() * board.cols() {
        let p = board.pos_of(i);
        if board.is_playable(p) && board.get(p) == Tile::Empty {
            board.set(p, Tile::Color(rng.gen_range(1..=palette)));
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::engine::hamming_distance;
    use crate::engine::Direction::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Replays a fixed list of refill colors through `gen_range(1..=palette)`,
    /// then yields zeros.
    pub(crate) struct ScriptRng {
        words: Vec<u32>,
        next: usize,
    }

    impl ScriptRng {
        pub(crate) fn colors(palette: u8, colors: &[u8]) -> Self {
            let words = colors
                .iter()
                .map(|&c| ((c as u64 - 1) << 32).div_ceil(palette as u64))
                .map(|w| w as u32)
                .collect();
            ScriptRng { words, next: 0 }
        }
    }

    impl RngCore for ScriptRng {
        fn next_u32(&mut self) -> u32 {
            let w = self.words.get(self.next).copied().unwrap_or(0);
            self.next += 1;
            w
        }
        fn next_u64(&mut self) -> u64 {
            self.next_u32() as u64
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            dest.fill(0);
            Ok(())
        }
    }

    #[test]
    fn script_rng_yields_requested_colors() {
        for palette in 2..=6u8 {
            let wanted: Vec<u8> = (1..=palette).rev().collect();
            let mut r = ScriptRng::colors(palette, &wanted);
            let got: Vec<u8> = wanted.iter().map(|_| r.gen_range(1..=palette)).collect();
            assert_eq!(got, wanted);
        }
    }

    fn seeded() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    // Swapping (0,2) down lifts the 1 into row 0: 1 1 1 4 5.
    fn top_triple_board() -> Board {
        Board::parse(&["11245", "34163", "56434"]).unwrap()
    }

    #[test]
    fn invalid_move_is_identity() {
        let b = Board::parse(&["123", "231", "312"]).unwrap();
        let out = apply_move(&b, Move::new(0, 0, Right), &mut seeded()).unwrap();
        assert!(!out.valid);
        assert_eq!(out.board(), &b);
        assert_eq!(out.cascade.cleared, 0);
        assert_eq!(out.cascade.matches_resolved, 0);
    }

    #[test]
    fn forbidden_move_errors() {
        let b = Board::parse(&["123", "231", "312"]).unwrap();
        assert!(apply_move(&b, Move::new(0, 0, Up), &mut seeded()).is_err());
        let holed = Board::parse(&["12#", "231", "312"]).unwrap();
        assert!(apply_move(&holed, Move::new(0, 1, Right), &mut seeded()).is_err());
    }

    #[test]
    fn single_triple_without_cascade() {
        let b = top_triple_board();
        let mut r = ScriptRng::colors(6, &[5, 6, 5]);
        let out = apply_move(&b, Move::new(0, 2, Down), &mut r).unwrap();
        assert!(out.valid);
        assert_eq!(out.cascade.cleared, 3);
        assert_eq!(out.cascade.matches_resolved, 1);
        assert_eq!(out.cascade.colors_cleared[0], 3);
        assert_eq!(out.cascade.waves, 1);
        assert_eq!(out.board().to_string(), "56545\n34263\n56434");
        // (0,0) (0,1) (0,2) refilled, (1,2) received the swapped 2.
        assert_eq!(hamming_distance(&b, out.board()).unwrap(), 4);
    }

    #[test]
    fn refill_triggers_second_match() {
        let b = top_triple_board();
        let mut r = ScriptRng::colors(6, &[3, 3, 3, 5, 6, 5]);
        let out = apply_move(&b, Move::new(0, 2, Down), &mut r).unwrap();
        assert_eq!(out.cascade.matches_resolved, 2);
        assert_eq!(out.cascade.cleared, 6);
        assert_eq!(out.cascade.colors_cleared[2], 3);
        assert_eq!(out.board().to_string(), "56545\n34263\n56434");
    }

    #[test]
    fn gravity_pulls_tiles_before_refill() {
        // Vertical triple in column 0 after swapping (2,0) right.
        let b = Board::parse(&["2345", "1562", "2134", "1456"]).unwrap();
        // col 0 after swap: 2,1,1,1 -> rows 1..3 clear, the 2 falls to row 3.
        let mut r = ScriptRng::colors(6, &[4, 6, 3]);
        let out = apply_move(&b, Move::new(2, 0, Right), &mut r).unwrap();
        assert_eq!(out.cascade.matches_resolved, 1);
        assert_eq!(out.board().to_string(), "4345\n6562\n3234\n2456");
    }

    #[test]
    fn four_in_line_leaves_striped_joker_on_swapped_cell() {
        let b = Board::parse(&["11213", "23145", "34562"]).unwrap();
        let mut r = ScriptRng::colors(6, &[4, 5, 2]);
        let out = apply_move(&b, Move::new(0, 2, Down), &mut r).unwrap();
        assert_eq!(out.cascade.jokers_created, 1);
        assert_eq!(out.cascade.cleared, 4);
        assert_eq!(out.board().to_string(), "45-23\n23245\n34562");

        // Firing it clears row 1.
        let mut r = ScriptRng::colors(6, &[1, 2, 3, 4, 5]);
        let fired = apply_move(out.board(), Move::new(0, 2, Down), &mut r).unwrap();
        assert!(fired.valid);
        assert_eq!(fired.cascade.matches_resolved, 1);
        assert_eq!(fired.cascade.cleared, 5);
    }

    #[test]
    fn cross_leaves_wrapped_joker() {
        // Swapping (2,0) down completes column 0 rows 0..2 and row 2 cols 0..2.
        let b = Board::parse(&["1234", "1345", "4116", "1256"]).unwrap();
        let mut r = ScriptRng::colors(6, &[5, 6, 1, 6]);
        let out = apply_move(&b, Move::new(2, 0, Down), &mut r).unwrap();
        assert_eq!(out.cascade.matches_resolved, 1);
        assert_eq!(out.cascade.jokers_created, 1);
        assert_eq!(out.cascade.cleared, 5);
        assert_eq!(out.board().to_string(), "5614\n6235\nW346\n4256");
    }

    #[test]
    fn color_bomb_clears_partner_color() {
        let b = Board::parse(&["*234", "2345", "3452", "4523"]).unwrap();
        assert_eq!(b.count_colors()[1], 4);
        let out = apply_move(&b, Move::new(0, 0, Right), &mut seeded()).unwrap();
        assert!(out.valid);
        assert!(out.cascade.colors_cleared[1] >= 4);
        assert!(out.cascade.cleared >= 5);
        assert!(out.cascade.matches_resolved >= 1);
        assert!(find_matches(out.board()).is_empty());
    }

    #[test]
    fn blocker_next_to_clear_breaks() {
        // Row 1 cols 0..2 clear; (0,0) sits on top of (1,0).
        let b = Board::parse(&["B3245", "11263", "56134"]).unwrap();
        let mut r = ScriptRng::colors(6, &[6, 1, 3, 4]);
        let out = apply_move(&b, Move::new(1, 2, Down), &mut r).unwrap();
        assert_eq!(out.cascade.blockers_cleared, 1);
        assert_eq!(out.cascade.cleared, 3);
        assert_eq!(out.board().to_string(), "61345\n43263\n56234");
    }

    #[test]
    fn distant_blocker_survives() {
        let b = Board::parse(&["11245", "34163", "5B434"]).unwrap();
        let mut r = ScriptRng::colors(6, &[5, 6, 5]);
        let out = apply_move(&b, Move::new(0, 2, Down), &mut r).unwrap();
        assert_eq!(out.cascade.blockers_cleared, 0);
        assert_eq!(out.board().count_blockers(), 1);
    }

    #[test]
    fn gravity_skips_blockers_and_holes() {
        let mut b = Board::parse(&["1.2", ".B.", "3.#"]).unwrap();
        apply_gravity(&mut b);
        assert_eq!(b.to_string(), "...\n1B2\n3.#");

        let mut b = Board::parse(&["123", "BBB", "..."]).unwrap();
        apply_gravity(&mut b);
        assert_eq!(b.to_string(), "...\nBBB\n123");
    }

    #[test]
    fn same_seed_same_outcome() {
        let b = top_triple_board();
        let a = apply_move(&b, Move::new(0, 2, Down), &mut seeded()).unwrap();
        let c = apply_move(&b, Move::new(0, 2, Down), &mut seeded()).unwrap();
        assert_eq!(a, c);
    }
}
