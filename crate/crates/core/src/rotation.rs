//! Grid rotations on the torus: single moves, quadrisection, the recursive
//! mixing scheme, and per-move semi-norm accounting.
//!
//! A move rotates the open square (x-r, x+r)² by q quarter turns
//! counterclockwise, where the center x = (ci·h, cj·h) sits on a cell corner
//! and r = s·h for a halfwidth of s cells. Cells strictly inside the square
//! are permuted; everything else is fixed. The move is billed q·r².

use crate::grid::{min_rep, DiskStencil, GridSpec, IndicatorField};
use crate::seminorm::{bianchini_seminorm, mixing_scale, SemiNormParams};
use crate::{MixError, Result};
use rayon::prelude::*;
use std::fmt::Write as _;

/// One quarter-turn rotation move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationMove {
    /// Center, in cell-corner coordinates: x = (ci·h, cj·h).
    pub ci: i64,
    pub cj: i64,
    /// Halfwidth in cells; the square spans 2s cells per side.
    pub s: u32,
    /// Quarter turns counterclockwise, 1..=3.
    pub q: u8,
}

impl RotationMove {
    pub fn new(ci: i64, cj: i64, s: u32, q: u8) -> Self {
        RotationMove { ci, cj, s, q }
    }

    /// Cost q·(s·h)² for grid side n.
    pub fn cost(&self, n: usize) -> f64 {
        let r = self.s as f64 / n as f64;
        self.q as f64 * r * r
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.s < 1 || 4 * self.s as usize > n {
            return Err(MixError::BadRotation(format!(
                "halfwidth {} cells out of range [1, N/4] for N={n}",
                self.s
            )));
        }
        if !(1..=3).contains(&self.q) {
            return Err(MixError::BadRotation(format!(
                "quarter turn count {} not in 1..=3",
                self.q
            )));
        }
        Ok(())
    }

    /// Image of cell (a, b) under the move, all arithmetic mod n.
    /// Cells outside the open square are fixed.
    fn map_cell(&self, a: i64, b: i64, n: i64) -> (i64, i64) {
        let (ci, cj) = (self.ci, self.cj);
        let s = self.s as i64;
        // relative position in the block, wrapped to the square's frame
        let ra = min_rep(a - ci, n);
        let rb = min_rep(b - cj, n);
        if ra < -s || ra >= s || rb < -s || rb >= s {
            return (a.rem_euclid(n), b.rem_euclid(n));
        }
        let (ra, rb) = match self.q {
            1 => (-1 - rb, ra),
            2 => (-1 - ra, -1 - rb),
            3 => (rb, -1 - ra),
            _ => unreachable!("validated"),
        };
        ((ci + ra).rem_euclid(n), (cj + rb).rem_euclid(n))
    }
}

/// An ordered list of moves on a fixed grid, with exact total cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSequence {
    n: usize,
    moves: Vec<RotationMove>,
    /// Σ q·s², so the cost is cost_num / N² without rounding drift.
    cost_num: u64,
}

impl MoveSequence {
    pub fn new(spec: GridSpec) -> Self {
        MoveSequence {
            n: spec.side(),
            moves: Vec::new(),
            cost_num: 0,
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn moves(&self) -> &[RotationMove] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn push(&mut self, mv: RotationMove) -> Result<()> {
        mv.validate(self.n)?;
        let mv = RotationMove {
            ci: mv.ci.rem_euclid(self.n as i64),
            cj: mv.cj.rem_euclid(self.n as i64),
            ..mv
        };
        self.cost_num += mv.q as u64 * (mv.s as u64) * (mv.s as u64);
        self.moves.push(mv);
        Ok(())
    }

    /// Total cost Σ q·(s·h)², exact as (Σ q·s²)/N².
    pub fn total_cost(&self) -> f64 {
        self.cost_num as f64 / (self.n as f64 * self.n as f64)
    }

    /// Serialize in the `mixlab-moves v1` format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("mixlab-moves v1\n");
        let _ = writeln!(s, "N {}", self.n);
        for m in &self.moves {
            let _ = writeln!(s, "R {} {} {} {}", m.ci, m.cj, m.s, m.q);
        }
        s
    }

    /// Parse the `mixlab-moves v1` format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| MixError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        if header != "mixlab-moves v1" {
            return Err(MixError::Parse {
                line: 1,
                msg: format!("expected 'mixlab-moves v1', got '{header}'"),
            });
        }
        let (_, nline) = lines.next().ok_or_else(|| MixError::Parse {
            line: 2,
            msg: "missing size line".into(),
        })?;
        let n: usize = nline
            .strip_prefix("N ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MixError::Parse {
                line: 2,
                msg: format!("expected 'N <int>', got '{nline}'"),
            })?;
        let mut seq = MoveSequence::new(GridSpec::new(n)?);
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(' ').collect();
            let bad = || MixError::Parse {
                line: lineno + 1,
                msg: format!("expected 'R <ci> <cj> <s> <q>', got '{line}'"),
            };
            if parts.len() != 5 || parts[0] != "R" {
                return Err(bad());
            }
            let ci: i64 = parts[1].parse().map_err(|_| bad())?;
            let cj: i64 = parts[2].parse().map_err(|_| bad())?;
            let s: u32 = parts[3].parse().map_err(|_| bad())?;
            let q: u8 = parts[4].parse().map_err(|_| bad())?;
            seq.push(RotationMove::new(ci, cj, s, q))?;
        }
        Ok(seq)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Apply one move; a permutation of the cells inside the open square.
pub fn apply_rotation(field: &IndicatorField, mv: &RotationMove) -> Result<IndicatorField> {
    let spec = field.spec();
    let n = spec.side() as i64;
    mv.validate(spec.side())?;
    let mut out = field.clone();
    let s = mv.s as i64;
    for b in (mv.cj - s)..(mv.cj + s) {
        for a in (mv.ci - s)..(mv.ci + s) {
            let (ta, tb) = mv.map_cell(a, b, n);
            out.set(ta as usize, tb as usize, field.get_wrapped(a, b));
        }
    }
    Ok(out)
}

/// Apply a whole sequence in order.
pub fn apply_sequence(field: &IndicatorField, seq: &MoveSequence) -> Result<IndicatorField> {
    if field.spec().side() != seq.n {
        return Err(MixError::SpecMismatch(field.spec().side(), seq.n));
    }
    let mut cur = field.clone();
    for mv in &seq.moves {
        cur = apply_rotation(&cur, mv)?;
    }
    Ok(cur)
}

/// The three moves that scatter a full square of side S cells at cell origin
/// (ox, oy) into its four quadrants, placed at the corners of the doubled
/// square. S must be even (the rotation centers sit on cell corners) and the
/// rotation radius S·h/2 must not exceed 1/4. Total cost 6·(S·h/2)².
pub fn quadrisection_moves(
    spec: GridSpec,
    ox: i64,
    oy: i64,
    side_cells: u32,
) -> Result<Vec<RotationMove>> {
    let s = side_cells;
    if s < 2 || s % 2 != 0 {
        return Err(MixError::BadRotation(format!(
            "quadrisection needs an even side, got {s} cells"
        )));
    }
    if 2 * s as usize > spec.side() {
        return Err(MixError::BadRotation(format!(
            "quadrisection side {s} cells exceeds N/2 = {}",
            spec.side() / 2
        )));
    }
    let half = (s / 2).max(1);
    let s = s as i64;
    Ok(vec![
        RotationMove::new(ox + s, oy + s, half, 2),
        RotationMove::new(ox + s, oy + s / 2, half, 1),
        RotationMove::new(ox + s / 2, oy + s, half, 3),
    ])
}

/// Initial set for the recursive scheme: the quarter square (0, 1/2)².
pub fn quarter_square(spec: GridSpec) -> IndicatorField {
    let half = spec.side() / 2;
    IndicatorField::from_fn(spec, |i, j| i < half && j < half)
}

/// Per-level accounting for a mixing scheme run.
#[derive(Debug, Clone)]
pub struct SchemeRow {
    pub level: u32,
    pub moves: usize,
    pub level_cost: f64,
    pub seminorm_after: f64,
    pub mixing_scale_after: Option<f64>,
}

/// Ledger for a whole scheme run, including the diagnostics conventions used.
#[derive(Debug, Clone)]
pub struct SchemeLedger {
    pub kappa: f64,
    pub eps: f64,
    pub rows: Vec<SchemeRow>,
}

/// Run the recursive quadrisection scheme for `n_levels` levels on the
/// quarter square. Level k scans the dyadic squares of side N/2^k in
/// row-major origin order and quadrisects every fully occupied one. Per-level
/// cost is 3·4^{k-1}·2·(2^{-k-1})² = 3/8 at every level.
///
/// Diagnostics per level use kappa = 1/5 (the set has measure 1/4) on the
/// radius grid starting at max(2h, 2^{-n-2}), clamped to at most 1/16 so the
/// grid always spans at least two octaves.
pub fn recursive_scheme(n_levels: u32, spec: GridSpec) -> Result<(MoveSequence, SchemeLedger)> {
    let n = spec.side();
    if n_levels == 0 || (1usize << (n_levels + 1)) > n {
        return Err(MixError::BadSchemeDepth {
            n: n_levels,
            side: n,
        });
    }
    let eps = (2.0 * spec.h())
        .max(0.25 / (1u64 << n_levels) as f64)
        .min(1.0 / 16.0);
    let kappa = 0.2;
    let params = SemiNormParams::with_default_rho(eps, kappa)?;
    let mut seq = MoveSequence::new(spec);
    let mut field = quarter_square(spec);
    let mut rows = Vec::new();
    for level in 1..=n_levels {
        let side = n >> level;
        let mut level_moves = 0usize;
        let mut level_cost_num = 0u64;
        // snapshot scan: quadrisections within a level act on disjoint squares
        let mut squares = Vec::new();
        for oy in (0..n).step_by(side) {
            for ox in (0..n).step_by(side) {
                let full = (0..side).all(|dj| (0..side).all(|di| field.get(ox + di, oy + dj)));
                if full {
                    squares.push((ox as i64, oy as i64));
                }
            }
        }
        for (ox, oy) in squares {
            for mv in quadrisection_moves(spec, ox, oy, side as u32)? {
                field = apply_rotation(&field, &mv)?;
                level_cost_num += mv.q as u64 * (mv.s as u64) * (mv.s as u64);
                seq.push(mv)?;
                level_moves += 1;
            }
        }
        let seminorm_after = bianchini_seminorm(&field, &params);
        let report = mixing_scale(&field, &params);
        rows.push(SchemeRow {
            level,
            moves: level_moves,
            level_cost: level_cost_num as f64 / (n as f64 * n as f64),
            seminorm_after,
            mixing_scale_after: report.scale,
        });
    }
    Ok((seq, SchemeLedger { kappa, eps, rows }))
}

/// Per-move accounting over a move sequence.
#[derive(Debug, Clone)]
pub struct MoveRow {
    pub index: usize,
    pub cost: f64,
    pub seminorm_after: f64,
    /// Semi-norm increment produced by this move.
    pub delta: f64,
    pub delta_over_cost: f64,
    /// Discretized geometric bound on |delta| for this move (see
    /// [`rotation_defect_bound`]).
    pub defect_bound: f64,
}

#[derive(Debug, Clone)]
pub struct MoveLedger {
    pub seminorm_initial: f64,
    pub rows: Vec<MoveRow>,
}

/// Replay `seq` from `field`, recording per-move semi-norm deltas, the
/// delta-per-cost ratio, and the geometric defect bound.
pub fn seminorm_ledger(
    field: &IndicatorField,
    seq: &MoveSequence,
    params: &SemiNormParams,
) -> Result<MoveLedger> {
    if field.spec().side() != seq.n {
        return Err(MixError::SpecMismatch(field.spec().side(), seq.n));
    }
    let spec = field.spec();
    let seminorm_initial = bianchini_seminorm(field, params);
    let mut prev = seminorm_initial;
    let mut cur = field.clone();
    let mut rows = Vec::with_capacity(seq.len());
    for (index, mv) in seq.moves().iter().enumerate() {
        cur = apply_rotation(&cur, mv)?;
        let seminorm_after = bianchini_seminorm(&cur, params);
        let delta = seminorm_after - prev;
        let cost = mv.cost(seq.n);
        rows.push(MoveRow {
            index,
            cost,
            seminorm_after,
            delta,
            delta_over_cost: delta / cost,
            defect_bound: rotation_defect_bound(spec, mv, params)?,
        });
        prev = seminorm_after;
    }
    Ok(MoveLedger {
        seminorm_initial,
        rows,
    })
}

/// Count integers t in [lo, hi] whose minimal representative mod n lies in
/// [-w, w].
fn periodic_band_overlap(lo: i64, hi: i64, w: i64, n: i64) -> i64 {
    if lo > hi || w < 0 {
        return 0;
    }
    debug_assert!(2 * w < n, "band must be proper");
    let k_lo = (lo - w).div_euclid(n);
    let k_hi = (hi + w).div_euclid(n);
    let mut total = 0;
    for k in k_lo..=k_hi {
        let a = (k * n - w).max(lo);
        let b = (k * n + w).min(hi);
        if a <= b {
            total += b - a + 1;
        }
    }
    total
}

/// Largest integer m >= 0 with a² + m² <= rr, or None if a² > rr.
fn band_halfwidth(a: i64, rr: f64) -> Option<i64> {
    let aa = (a * a) as f64;
    if aa > rr {
        return None;
    }
    let mut m = (rr - aa).sqrt().floor() as i64;
    while ((a * a + (m + 1) * (m + 1)) as f64) <= rr {
        m += 1;
    }
    while m > 0 && ((a * a + m * m) as f64) > rr {
        m -= 1;
    }
    Some(m)
}

/// Σ_y #{z ∈ B_r(y) : u(z) ∉ B_r(u(y))} for the move u, via per-row interval
/// counting. Only pairs with exactly one endpoint inside the rotated square
/// can contribute; the square is translated to the torus center first.
fn defect_pair_count(spec: GridSpec, mv: &RotationMove, stencil: &DiskStencil) -> u64 {
    let n = spec.side() as i64;
    let s = mv.s as i64;
    let c = n / 2;
    // canonical frame: the move recentered at (c, c); counts are
    // translation invariant
    let (ci, cj) = (c, c);
    let (qx0, qx1) = (ci - s, ci + s - 1);
    let (qy0, qy1) = (cj - s, cj + s - 1);
    let rr = {
        let rc = stencil.radius() * n as f64;
        rc * rc
    };
    let reach = rr.sqrt().floor() as i64;
    let k_big = ci + cj - 1;
    let c_diff = cj - ci;

    // per-row halfwidths of the stencil
    let width = |dy: i64| band_halfwidth(dy, rr);

    let (y_lo, y_hi) = if 2 * (s + reach) + 2 >= n {
        (0, n - 1)
    } else {
        (c - s - reach - 1, c + s + reach)
    };

    let rows: Vec<i64> = (y_lo..=y_hi).collect();
    rows.par_iter()
        .map(|&yy| {
            let mut fails: i64 = 0;
            for yx in y_lo..=y_hi {
                let ywx = yx.rem_euclid(n);
                let ywy = yy.rem_euclid(n);
                let y_in_q = ywx >= qx0 && ywx <= qx1 && ywy >= qy0 && ywy <= qy1;
                if y_in_q {
                    // interior cells whose ball stays in the square never mix
                    let depth = (ywx - qx0).min(qx1 - ywx).min(ywy - qy0).min(qy1 - ywy);
                    if depth > reach {
                        continue;
                    }
                    // fixed image point p = u(y)
                    let (px, py) = rot_point(mv.q, ci, cj, ywx, ywy);
                    for dy in -reach..=reach {
                        let w = match width(dy) {
                            Some(w) => w,
                            None => continue,
                        };
                        let zy = yy + dy;
                        let zyw = zy.rem_euclid(n);
                        let (zx_a, zx_b) = (yx - w, yx + w);
                        // subsegments of the row outside Q
                        let db = band_halfwidth(min_rep(zy - py, n), rr);
                        let row_in_q = zyw >= qy0 && zyw <= qy1;
                        let mut segs: Vec<(i64, i64)> = vec![(zx_a, zx_b)];
                        if row_in_q {
                            for t in -1..=1i64 {
                                let (a, b) = (qx0 + t * n, qx1 + t * n);
                                segs = segs
                                    .into_iter()
                                    .flat_map(|(lo, hi)| {
                                        let mut out = Vec::new();
                                        if hi < a || lo > b {
                                            out.push((lo, hi));
                                        } else {
                                            if lo < a {
                                                out.push((lo, a - 1));
                                            }
                                            if hi > b {
                                                out.push((b + 1, hi));
                                            }
                                        }
                                        out
                                    })
                                    .collect();
                            }
                        }
                        for (a, b) in segs {
                            if a > b {
                                continue;
                            }
                            let len = b - a + 1;
                            match db {
                                None => fails += len,
                                Some(wb) => {
                                    fails += len - periodic_band_overlap(a - px, b - px, wb, n);
                                }
                            }
                        }
                    }
                } else {
                    for dy in -reach..=reach {
                        let w = match width(dy) {
                            Some(w) => w,
                            None => continue,
                        };
                        let zy = yy + dy;
                        let zyw = zy.rem_euclid(n);
                        if zyw < qy0 || zyw > qy1 {
                            continue;
                        }
                        let (zx_a, zx_b) = (yx - w, yx + w);
                        for t in -1..=1i64 {
                            let (a, b) = ((qx0 + t * n).max(zx_a), (qx1 + t * n).min(zx_b));
                            if a > b {
                                continue;
                            }
                            let len = b - a + 1;
                            // image difference u(z) - y with u(z) = rot(z);
                            // one coordinate fixed on the row, one affine in zx
                            let zx_off = -t * n; // wrapped zx = zx + zx_off... zx - t*n
                            let (fixed, var_lo, var_hi) = match mv.q {
                                1 => {
                                    let da = k_big - zyw - yx;
                                    let beta = c_diff - yy + zx_off;
                                    (da, a + beta, b + beta)
                                }
                                2 => {
                                    let db = 2 * cj - 1 - zyw - yy;
                                    let lo = 2 * ci - 1 - (b + zx_off) - yx;
                                    let hi = 2 * ci - 1 - (a + zx_off) - yx;
                                    (db, lo, hi)
                                }
                                3 => {
                                    let da = zyw + ci - cj - yx;
                                    let lo = k_big - (b + zx_off) - yy;
                                    let hi = k_big - (a + zx_off) - yy;
                                    (da, lo, hi)
                                }
                                _ => unreachable!("validated"),
                            };
                            match band_halfwidth(min_rep(fixed, n), rr) {
                                None => fails += len,
                                Some(wb) => {
                                    fails += len - periodic_band_overlap(var_lo, var_hi, wb, n);
                                }
                            }
                        }
                    }
                }
            }
            fails as u64
        })
        .sum()
}

/// Image of the wrapped point (x, y) under q quarter turns about (ci, cj),
/// without wrapping the result.
fn rot_point(q: u8, ci: i64, cj: i64, x: i64, y: i64) -> (i64, i64) {
    match q {
        1 => (ci + cj - 1 - y, cj - ci + x),
        2 => (2 * ci - 1 - x, 2 * cj - 1 - y),
        3 => (ci - cj + y, ci + cj - 1 - x),
        _ => unreachable!("validated"),
    }
}

/// Discretized geometric bound on the semi-norm increment of a single move:
/// Σ_j w_j · h² · |u(B_j(y)) △ B_j(u(y))|-count / count_j, summed over the
/// radius grid. Any indicator field satisfies |delta| <= this bound.
pub fn rotation_defect_bound(
    spec: GridSpec,
    mv: &RotationMove,
    params: &SemiNormParams,
) -> Result<f64> {
    mv.validate(spec.side())?;
    let h2 = spec.h() * spec.h();
    let mut total = 0.0;
    for (&r, &w) in params.radii().iter().zip(params.weights()) {
        let st = DiskStencil::new(spec, r)?;
        let fails = defect_pair_count(spec, mv, &st);
        // |△| = 2 · fails
        total += w * h2 * (2 * fails) as f64 / st.count() as f64;
    }
    Ok(total)
}

/// Seeded random move corpus for regression and stability runs.
pub fn random_corpus(spec: GridSpec, len: usize, seed: u64) -> MoveSequence {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = spec.side();
    let mut seq = MoveSequence::new(spec);
    for _ in 0..len {
        let mv = RotationMove::new(
            rng.gen_range(0..n as i64),
            rng.gen_range(0..n as i64),
            rng.gen_range(1..=(n / 4) as u32),
            rng.gen_range(1..=3u8),
        );
        seq.push(mv).expect("generated moves are in range");
    }
    seq
}

/// One probe case: a block-random field plus one move, both stated in
/// continuum terms so the same case can be realized at several resolutions.
#[derive(Debug, Clone)]
pub struct ProbeCase {
    /// Move center as a fraction of the torus side.
    pub u: f64,
    pub v: f64,
    /// Move radius as a fraction of the torus side, in [1/32, 1/4].
    pub radius: f64,
    pub q: u8,
    /// The field is constant on dyadic blocks of side 2^-block_log.
    pub block_log: u32,
    /// Row-major block values, (2^block_log)² entries.
    pub blocks: Vec<bool>,
}

/// Seeded corpus of probe cases. Block sides span 1/64 to 1/4 of the torus;
/// move radii stay at least 1/32 so every case resolves on grids with
/// N >= 128.
pub fn probe_corpus(len: usize, seed: u64) -> Vec<ProbeCase> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let u = rng.gen_range(0.0..1.0);
            let v = rng.gen_range(0.0..1.0);
            let radius = rng.gen_range(1.0 / 32.0..=0.25);
            let q = rng.gen_range(1..=3u8);
            let block_log = rng.gen_range(2..=6u32);
            let b = 1usize << block_log;
            let blocks = (0..b * b).map(|_| rng.gen_bool(0.5)).collect();
            ProbeCase {
                u,
                v,
                radius,
                q,
                block_log,
                blocks,
            }
        })
        .collect()
}

/// Realize a probe case on a concrete grid.
pub fn realize_probe(case: &ProbeCase, spec: GridSpec) -> Result<(IndicatorField, RotationMove)> {
    let n = spec.side();
    if (1usize << case.block_log) > n {
        return Err(MixError::BadGridSide(n));
    }
    let shift = n.trailing_zeros() - case.block_log;
    let b = 1usize << case.block_log;
    let field = IndicatorField::from_fn(spec, |i, j| case.blocks[(j >> shift) * b + (i >> shift)]);
    let s = ((case.radius * n as f64).round() as u32).clamp(1, (n / 4) as u32);
    let mv = RotationMove::new(
        (case.u * n as f64).round() as i64 % n as i64,
        (case.v * n as f64).round() as i64 % n as i64,
        s,
        case.q,
    );
    Ok((field, mv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ball_counts;

    fn cells_of(field: &IndicatorField) -> Vec<(usize, usize)> {
        let n = field.spec().side();
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if field.get(i, j) {
                    v.push((i, j));
                }
            }
        }
        v
    }

    #[test]
    fn quadrisection_on_four_grid_matches_hand_computation() {
        // N = 4: the 2×2 block at the origin scatters to the four corners
        // of (0,1)² at cost 6·(1/4)² = 0.375
        let spec = GridSpec::new(4).unwrap();
        let mut a = IndicatorField::empty(spec);
        for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            a.set(i, j, true);
        }
        let mut seq = MoveSequence::new(spec);
        for mv in quadrisection_moves(spec, 0, 0, 2).unwrap() {
            seq.push(mv).unwrap();
        }
        let out = apply_sequence(&a, &seq).unwrap();
        assert_eq!(
            cells_of(&out),
            vec![(0, 0), (2, 0), (0, 2), (2, 2)],
            "quadrisection image"
        );
        assert_eq!(seq.total_cost(), 0.375, "cost must be exactly 3/8");
    }

    #[test]
    fn rotation_is_measure_preserving_bijection() {
        let spec = GridSpec::new(32).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| (i * 5 + j * 3) % 7 < 3);
        let mv = RotationMove::new(9, 22, 6, 1);
        let g = apply_rotation(&f, &mv).unwrap();
        assert_eq!(f.count_true(), g.count_true());
        // q=1 four times is the identity
        let mut h = f.clone();
        for _ in 0..4 {
            h = apply_rotation(&h, &mv).unwrap();
        }
        assert_eq!(h, f);
        // q and 4-q are inverse to each other
        let inv = RotationMove::new(9, 22, 6, 3);
        assert_eq!(apply_rotation(&g, &inv).unwrap(), f);
    }

    #[test]
    fn rotation_wraps_across_the_torus_edge() {
        let spec = GridSpec::new(16).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| i == 15 && j == 15);
        let mv = RotationMove::new(0, 0, 2, 2);
        let g = apply_rotation(&f, &mv).unwrap();
        // (15,15) is at relative (-1,-1) from the corner center; q=2 sends it
        // to relative (0,0), the cell at the center itself
        assert_eq!(cells_of(&g), vec![(0, 0)]);
    }

    #[test]
    fn rotation_rejects_out_of_range_moves() {
        let spec = GridSpec::new(16).unwrap();
        let f = IndicatorField::empty(spec);
        assert!(apply_rotation(&f, &RotationMove::new(0, 0, 0, 1)).is_err());
        assert!(apply_rotation(&f, &RotationMove::new(0, 0, 5, 1)).is_err());
        assert!(apply_rotation(&f, &RotationMove::new(0, 0, 2, 0)).is_err());
        assert!(apply_rotation(&f, &RotationMove::new(0, 0, 2, 4)).is_err());
        assert!(apply_rotation(&f, &RotationMove::new(0, 0, 4, 3)).is_ok());
    }

    #[test]
    fn quadrisection_rejects_odd_or_oversized_sides() {
        let spec = GridSpec::new(16).unwrap();
        assert!(quadrisection_moves(spec, 0, 0, 3).is_err());
        assert!(quadrisection_moves(spec, 0, 0, 0).is_err());
        assert!(quadrisection_moves(spec, 0, 0, 10).is_err());
        assert!(quadrisection_moves(spec, 0, 0, 8).is_ok());
        assert!(quadrisection_moves(spec, 3, 5, 4).is_ok());
    }

    #[test]
    fn recursive_scheme_costs_are_flat() {
        let spec = GridSpec::new(16).unwrap();
        let (seq, ledger) = recursive_scheme(2, spec).unwrap();
        assert_eq!(ledger.rows.len(), 2);
        assert_eq!(ledger.rows[0].moves, 3);
        assert_eq!(ledger.rows[1].moves, 12);
        assert_eq!(ledger.rows[0].level_cost, 0.375);
        assert_eq!(ledger.rows[1].level_cost, 0.375);
        assert_eq!(seq.total_cost(), 0.75);
    }

    #[test]
    fn recursive_scheme_first_level_is_the_unit_quadrisection() {
        let spec = GridSpec::new(8).unwrap();
        let (seq, _) = recursive_scheme(1, spec).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.total_cost(), 0.375);
        let out = apply_sequence(&quarter_square(spec), &seq).unwrap();
        // four 2×2 squares at origins (0,0), (4,0), (0,4), (4,4)
        for (ox, oy) in [(0, 0), (4, 0), (0, 4), (4, 4)] {
            for dj in 0..2 {
                for di in 0..2 {
                    assert!(out.get(ox + di, oy + dj), "missing cell near ({ox},{oy})");
                }
            }
        }
        assert_eq!(out.count_true(), 16);
    }

    #[test]
    fn recursive_scheme_rejects_unresolvable_depth() {
        let spec = GridSpec::new(8).unwrap();
        assert!(recursive_scheme(2, spec).is_ok());
        assert!(recursive_scheme(3, spec).is_err());
        assert!(recursive_scheme(0, spec).is_err());
    }

    #[test]
    fn move_text_round_trip() {
        let spec = GridSpec::new(64).unwrap();
        let seq = random_corpus(spec, 17, 5);
        let text = seq.to_text();
        assert!(text.starts_with("mixlab-moves v1\nN 64\n"));
        let back = MoveSequence::from_text(&text).unwrap();
        assert_eq!(seq, back);
        assert!(MoveSequence::from_text("mixlab-moves v1\nN 64\nR 0 0 99 1\n").is_err());
    }

    fn brute_defect(spec: GridSpec, mv: &RotationMove, st: &DiskStencil) -> u64 {
        let n = spec.side() as i64;
        let mut fails = 0u64;
        for yy in 0..n {
            for yx in 0..n {
                let (uy_x, uy_y) = mv.map_cell(yx, yy, n);
                for &(dx, dy) in st.offsets() {
                    let (zx, zy) = (yx + dx as i64, yy + dy as i64);
                    let (uz_x, uz_y) = mv.map_cell(zx, zy, n);
                    let ddx = min_rep(uz_x - uy_x, n);
                    let ddy = min_rep(uz_y - uy_y, n);
                    let rc = st.radius() * n as f64;
                    if ((ddx * ddx + ddy * ddy) as f64) > rc * rc {
                        fails += 1;
                    }
                }
            }
        }
        fails
    }

    #[test]
    fn defect_count_matches_brute_force() {
        let spec = GridSpec::new(16).unwrap();
        let moves = [
            RotationMove::new(8, 8, 2, 1),
            RotationMove::new(8, 8, 4, 2),
            RotationMove::new(3, 13, 3, 3),
            RotationMove::new(0, 0, 4, 1),
            RotationMove::new(15, 2, 1, 2),
        ];
        for r in [1.0 / 16.0, 0.13, 0.2, 0.25] {
            let st = DiskStencil::new(spec, r).unwrap();
            for mv in &moves {
                assert_eq!(
                    defect_pair_count(spec, mv, &st),
                    brute_defect(spec, mv, &st),
                    "move {mv:?} at r={r}"
                );
            }
        }
    }

    #[test]
    fn defect_count_matches_brute_force_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let spec = GridSpec::new(32).unwrap();
        for _ in 0..12 {
            let mv = RotationMove::new(
                rng.gen_range(0..32),
                rng.gen_range(0..32),
                rng.gen_range(1..=8),
                rng.gen_range(1..=3),
            );
            let r = rng.gen_range(0.04..=0.25);
            let st = DiskStencil::new(spec, r).unwrap();
            assert_eq!(
                defect_pair_count(spec, &mv, &st),
                brute_defect(spec, &mv, &st),
                "move {mv:?} at r={r}"
            );
        }
    }

    #[test]
    fn seminorm_delta_respects_defect_bound() {
        let spec = GridSpec::new(32).unwrap();
        let params = SemiNormParams::with_default_rho(1.0 / 16.0, 1.0 / 3.0).unwrap();
        let field = IndicatorField::from_fn(spec, |i, j| (i / 4 + j / 4) % 2 == 0);
        let seq = random_corpus(spec, 12, 7);
        let ledger = seminorm_ledger(&field, &seq, &params).unwrap();
        for row in &ledger.rows {
            assert!(
                row.delta.abs() <= row.defect_bound + 1e-12,
                "move {}: |delta| {} exceeds bound {}",
                row.index,
                row.delta.abs(),
                row.defect_bound
            );
        }
    }

    #[test]
    fn probe_cases_realize_consistently_across_resolutions() {
        let corpus = probe_corpus(6, 3);
        let fine = GridSpec::new(256).unwrap();
        let coarse = GridSpec::new(128).unwrap();
        for case in &corpus {
            let (ff, fm) = realize_probe(case, fine).unwrap();
            let (cf, cm) = realize_probe(case, coarse).unwrap();
            for j in 0..128 {
                for i in 0..128 {
                    assert_eq!(cf.get(i, j), ff.get(2 * i, 2 * j), "same block field");
                }
            }
            assert_eq!(fm.q, cm.q);
            let (rf, rc) = (fm.s as f64 / 256.0, cm.s as f64 / 128.0);
            assert!(
                (rf - rc).abs() <= 0.5 / 128.0,
                "realized radii {rf} and {rc} drift more than half a coarse cell"
            );
        }
    }

    #[test]
    fn ball_counts_are_rotation_conjugation_invariant() {
        // rotating the field and the query cell together leaves counts fixed
        let spec = GridSpec::new(16).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| (i + j * j) % 5 < 2);
        let st = DiskStencil::new(spec, 0.2).unwrap();
        let a = ball_counts(&f, &st);
        let b = ball_counts(&f.rotated90(), &st);
        for j in 0..16i64 {
            for i in 0..16i64 {
                // (i,j) in rotated field corresponds to (j, -1-i) in f
                let si = j.rem_euclid(16) as usize;
                let sj = (-1 - i).rem_euclid(16) as usize;
                assert_eq!(b[j as usize * 16 + i as usize], a[sj * 16 + si]);
            }
        }
    }
}
