//! Discrete sliding-move mixing on the 2n x 2n torus.
//!
//! States are half-density subsets of Z²/2nZ². The generators are strip
//! shifts (every cell in rows a..=b moves one step in +x) and global quarter
//! turns. Cost is the move count. `bfs_min_moves` exhausts the state space
//! for tiny n modulo translations; `greedy_mix` runs a fixed shear cascade
//! as an upper-bound probe.

use crate::grid::disk_offsets_cells;
use crate::{MixError, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

/// A half-density subset of the 2n x 2n torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlideState {
    n: usize,
    /// Row-major cells, index y*(2n)+x.
    cells: Vec<bool>,
}

/// One generator: a strip shift or a global rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlideMove {
    /// Rows a..=b taken mod 2n move one step in +x; b >= a, and b may reach
    /// past the last row to wrap. Height b-a+1 is in 1..2n.
    StripShift { a: usize, b: usize },
    /// q counterclockwise quarter turns of the whole torus, q in 1..=3.
    Rotate { q: u8 },
}

impl SlideState {
    /// Side length 2n.
    pub fn side(&self) -> usize {
        2 * self.n
    }

    pub fn half_side(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * 2 * self.n + x]
    }

    /// The initial column block A0: cells with x in [1, n].
    pub fn columns(n: usize) -> Result<Self> {
        Self::from_fn(n, |x, _| (1..=n).contains(&x))
    }

    /// The parity target A1: cells with x+y even.
    pub fn parity(n: usize) -> Result<Self> {
        Self::from_fn(n, |x, y| (x + y) % 2 == 0)
    }

    /// Build from a predicate; the result must have exactly 2n² cells.
    pub fn from_fn(n: usize, pred: impl Fn(usize, usize) -> bool) -> Result<Self> {
        if n == 0 {
            return Err(MixError::BadSlide("half-side must be positive".into()));
        }
        let side = 2 * n;
        let cells: Vec<bool> = (0..side * side).map(|k| pred(k % side, k / side)).collect();
        let state = SlideState { n, cells };
        state.check_density()?;
        Ok(state)
    }

    fn check_density(&self) -> Result<()> {
        let c = self.cells.iter().filter(|&&v| v).count();
        if c != 2 * self.n * self.n {
            return Err(MixError::BadSlideState(format!(
                "{} true cells, need exactly {}",
                c,
                2 * self.n * self.n
            )));
        }
        Ok(())
    }

    /// True when membership depends only on the parity of x+y.
    pub fn is_parity_pattern(&self) -> bool {
        let side = 2 * self.n;
        let anchor = self.get(0, 0);
        (0..side).all(|y| (0..side).all(|x| self.get(x, y) == (anchor == ((x + y) % 2 == 0))))
    }

    /// Translate by (dx, dy).
    pub fn translated(&self, dx: usize, dy: usize) -> Self {
        let side = 2 * self.n;
        let mut cells = vec![false; side * side];
        for y in 0..side {
            for x in 0..side {
                if self.cells[y * side + x] {
                    cells[((y + dy) % side) * side + (x + dx) % side] = true;
                }
            }
        }
        SlideState { n: self.n, cells }
    }

    /// Lexicographically least translate; the canonical orbit label used by
    /// the search. Translations conjugate every generator to a generator, so
    /// successor orbits are well defined.
    pub fn canonical(&self) -> Self {
        let side = 2 * self.n;
        let mut best: Option<Vec<bool>> = None;
        for dy in 0..side {
            for dx in 0..side {
                let t = self.translated(dx, dy).cells;
                if best.as_ref().map_or(true, |b| t < *b) {
                    best = Some(t);
                }
            }
        }
        SlideState {
            n: self.n,
            cells: best.expect("side is positive"),
        }
    }

    /// Smallest cell radius m (1 <= m <= n) at which every closed disk of
    /// radius m cells has a true-cell fraction in [kappa, 1-kappa], or None.
    pub fn mixed_scale_cells(&self, kappa: f64) -> Option<usize> {
        let side = 2 * self.n;
        let mut finest = None;
        for m in (1..=self.n).rev() {
            let offsets = disk_offsets_cells(side, m as f64);
            let c = offsets.len() as f64;
            let ok = (0..side).all(|y| {
                (0..side).all(|x| {
                    let k = offsets
                        .iter()
                        .filter(|&&(dx, dy)| {
                            let zx = (x as i64 + dx as i64).rem_euclid(side as i64) as usize;
                            let zy = (y as i64 + dy as i64).rem_euclid(side as i64) as usize;
                            self.cells[zy * side + zx]
                        })
                        .count() as f64;
                    k >= kappa * c && k <= (1.0 - kappa) * c
                })
            });
            if ok {
                finest = Some(m);
            } else {
                break;
            }
        }
        finest
    }

    /// Serialize in the `mixlab-slide v1` format.
    pub fn to_text(&self) -> String {
        let side = 2 * self.n;
        let mut s = String::new();
        s.push_str("mixlab-slide v1\n");
        let _ = writeln!(s, "n {}", self.n);
        for y in 0..side {
            for x in 0..side {
                s.push(if self.cells[y * side + x] { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| MixError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        if header != "mixlab-slide v1" {
            return Err(MixError::Parse {
                line: 1,
                msg: format!("expected 'mixlab-slide v1', got '{header}'"),
            });
        }
        let (_, nline) = lines.next().ok_or_else(|| MixError::Parse {
            line: 2,
            msg: "missing size line".into(),
        })?;
        let n: usize = nline
            .strip_prefix("n ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MixError::Parse {
                line: 2,
                msg: format!("expected 'n <int>', got '{nline}'"),
            })?;
        if n == 0 {
            return Err(MixError::BadSlide("half-side must be positive".into()));
        }
        let side = 2 * n;
        let mut cells = Vec::with_capacity(side * side);
        for row in 0..side {
            let (lineno, line) = lines.next().ok_or_else(|| MixError::Parse {
                line: row + 3,
                msg: "missing row".into(),
            })?;
            if line.len() != side {
                return Err(MixError::Parse {
                    line: lineno + 1,
                    msg: format!("row has {} chars, expected {side}", line.len()),
                });
            }
            for ch in line.chars() {
                match ch {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    _ => {
                        return Err(MixError::Parse {
                            line: lineno + 1,
                            msg: format!("bad cell character '{ch}'"),
                        })
                    }
                }
            }
        }
        let state = SlideState { n, cells };
        state.check_density()?;
        Ok(state)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl SlideMove {
    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            SlideMove::StripShift { a, b } => {
                let side = 2 * n;
                if a >= side || b < a || b - a + 1 >= side {
                    return Err(MixError::BadSlide(format!(
                        "strip rows [{a}, {b}] invalid for side {side}"
                    )));
                }
            }
            SlideMove::Rotate { q } => {
                if !(1..=3).contains(&q) {
                    return Err(MixError::BadSlide(format!(
                        "quarter turns {q} not in 1..=3"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Apply one move; a bijection of the torus, so density is preserved.
pub fn apply_slide(state: &SlideState, mv: &SlideMove) -> Result<SlideState> {
    mv.validate(state.n)?;
    let side = 2 * state.n;
    let mut cells = vec![false; side * side];
    match *mv {
        SlideMove::StripShift { a, b } => {
            for y in 0..side {
                let in_strip = (y + side - a % side) % side <= b - a;
                for x in 0..side {
                    if state.cells[y * side + x] {
                        let nx = if in_strip { (x + 1) % side } else { x };
                        cells[y * side + nx] = true;
                    }
                }
            }
        }
        SlideMove::Rotate { q } => {
            for y in 0..side {
                for x in 0..side {
                    if state.cells[y * side + x] {
                        let (mut tx, mut ty) = (x, y);
                        for _ in 0..q {
                            // (x, y) -> (side-1-y, x), the cell-exact quarter turn
                            let t = tx;
                            tx = side - 1 - ty;
                            ty = t;
                        }
                        cells[ty * side + tx] = true;
                    }
                }
            }
        }
    }
    Ok(SlideState { n: state.n, cells })
}

/// All generators for half-side n, in the fixed search order: strip shifts
/// by ascending (a, height) including wrapped strips, then rotations by
/// ascending q.
pub fn all_moves(n: usize) -> Vec<SlideMove> {
    let side = 2 * n;
    let mut v = Vec::new();
    for a in 0..side {
        for height in 1..side {
            v.push(SlideMove::StripShift {
                a,
                b: a + height - 1,
            });
        }
    }
    for q in 1..=3 {
        v.push(SlideMove::Rotate { q });
    }
    v
}

/// Shortest move count from `start` to `goal`, both taken modulo torus
/// translations, or None if `max_depth` is exhausted. Exhaustive, so n is
/// capped at 2 (the canonical state space at n = 2 is already ~10⁴ states
/// per explored shell).
pub fn bfs_min_moves(
    start: &SlideState,
    goal: &SlideState,
    max_depth: usize,
) -> Result<Option<usize>> {
    if start.n != goal.n {
        return Err(MixError::BadSlide(format!(
            "state sizes differ: {} vs {}",
            start.n, goal.n
        )));
    }
    if start.n > 2 {
        return Err(MixError::BadSlide(format!(
            "exhaustive search is limited to n <= 2, got n = {}",
            start.n
        )));
    }
    let moves = all_moves(start.n);
    let goal_c = goal.canonical();
    let start_c = start.canonical();
    if start_c == goal_c {
        return Ok(Some(0));
    }
    let mut visited: HashMap<Vec<bool>, usize> = HashMap::new();
    visited.insert(start_c.cells.clone(), 0);
    let mut frontier = vec![start_c];
    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for state in &frontier {
            for mv in &moves {
                let succ = apply_slide(state, mv)?.canonical();
                if succ == goal_c {
                    return Ok(Some(depth));
                }
                if !visited.contains_key(&succ.cells) {
                    visited.insert(succ.cells.clone(), depth);
                    next.push(succ);
                }
            }
        }
        if next.is_empty() {
            return Ok(None);
        }
        frontier = next;
    }
    Ok(None)
}

/// Outcome of the greedy cascade.
#[derive(Debug, Clone)]
pub struct GreedyReport {
    pub state: SlideState,
    pub moves_used: usize,
    /// Finest cell radius at which the final state is 1/3-mixed, if any.
    pub mixed_scale_cells: Option<usize>,
    /// Whether the final state is a pure parity pattern.
    pub reached_parity: bool,
}

/// Budget-capped move applier used by the cascade.
struct Budgeted {
    state: SlideState,
    used: usize,
    budget: usize,
}

impl Budgeted {
    /// Apply a move if budget remains; returns false when out of budget.
    fn step(&mut self, mv: SlideMove) -> Result<bool> {
        if self.used >= self.budget {
            return Ok(false);
        }
        self.state = apply_slide(&self.state, &mv)?;
        self.used += 1;
        Ok(true)
    }

    /// Shift row y by f(y) where f is realized as stacked suffix strips:
    /// one +1 shift of rows [k, side-1] for every unit of rise at k.
    fn profile_shear(&mut self, rises: &[(usize, usize)]) -> Result<bool> {
        let side = self.state.side();
        for &(k, times) in rises {
            for _ in 0..times {
                if !self.step(SlideMove::StripShift { a: k, b: side - 1 })? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Shift every row with y ≡ r (mod 2) one step right.
    fn shift_row_class(&mut self, r: usize) -> Result<bool> {
        let side = self.state.side();
        for a in (r..side).step_by(2) {
            if !self.step(SlideMove::StripShift { a, b: a })? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether every row equals row 0 shifted by a constant, and if the state is
/// uniform vertical stripes, nothing to fix; returns the cleanup row class
/// (0 or 1) when odd and even rows disagree by exactly one cell, else None.
fn row_parity_lag(state: &SlideState) -> Option<usize> {
    let side = state.side();
    let row = |y: usize, x: usize| state.get(x % side, y);
    let equal = (0..side).all(|x| row(0, x) == row(1, x));
    if equal {
        return None;
    }
    // shifting class r right by one cell aligns it with the other class
    if (0..side).all(|x| row(0, x) == row(1, (x + side - 1) % side)) {
        return Some(1);
    }
    if (0..side).all(|x| row(1, x) == row(0, (x + side - 1) % side)) {
        return Some(0);
    }
    None
}

/// Deterministic halving cascade from the column block to the parity
/// pattern. Each level turns width-W vertical stripes into width-W/2
/// stripes: a slope-2 shear (row y moves 2y), one quarter turn, a half
/// shear (row y moves floor(y/2)), and a one-cell row-parity cleanup when
/// the two row classes disagree. A final odd-row shift converts unit
/// stripes into the parity pattern. Cost is Theta(n log n); n must be a
/// power of two. Stops early at the move budget.
pub fn greedy_mix(n: usize, budget: usize) -> Result<GreedyReport> {
    if n < 2 || !n.is_power_of_two() {
        return Err(MixError::BadSlide(format!(
            "cascade needs n a power of two with n >= 2, got {n}"
        )));
    }
    let side = 2 * n;
    let mut run = Budgeted {
        state: SlideState::columns(n)?,
        used: 0,
        budget,
    };
    let full_shear: Vec<(usize, usize)> = (1..side).map(|k| (k, 2)).collect();
    let half_shear: Vec<(usize, usize)> = (1..n).map(|k| (2 * k, 1)).collect();
    let mut w = n;
    'levels: while w >= 2 && !run.state.is_parity_pattern() {
        for done in [
            run.profile_shear(&full_shear)?,
            run.step(SlideMove::Rotate { q: 1 })?,
            run.profile_shear(&half_shear)?,
        ] {
            if !done {
                break 'levels;
            }
        }
        if let Some(class) = row_parity_lag(&run.state) {
            if !run.shift_row_class(class)? {
                break 'levels;
            }
        }
        w /= 2;
    }
    // unit vertical stripes to parity: offset the odd rows by one cell
    if !run.state.is_parity_pattern() && run.used < run.budget {
        run.shift_row_class(1)?;
    }
    let reached_parity = run.state.is_parity_pattern();
    let mixed_scale_cells = run.state.mixed_scale_cells(1.0 / 3.0);
    Ok(GreedyReport {
        state: run.state,
        moves_used: run.used,
        mixed_scale_cells,
        reached_parity,
    })
}
