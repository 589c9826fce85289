//! Square grids on the 2-torus: indicator and scalar fields, disk stencils,
//! windowed ball sums.
//!
//! Cell (i, j) of an N×N grid covers [i·h, (i+1)·h) × [j·h, (j+1)·h) with
//! h = 1/N; its sampling point is the center ((i+1/2)·h, (j+1/2)·h). All
//! index arithmetic is mod N. Distances are geodesic: offsets are reduced to
//! minimal representatives in (-1/2, 1/2] before measuring.

use crate::{MixError, Result};
use std::fmt::Write as _;

/// Grid resolution. The side must be a power of two so that h = 1/N is exact
/// in binary floating point and h·N == 1 holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    /// Side must be a power of two, at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(MixError::BadGridSide(n));
        }
        Ok(GridSpec { n })
    }

    /// Cells per side.
    pub fn side(&self) -> usize {
        self.n
    }

    /// Cell width h = 1/N (exact).
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of cells.
    pub fn cells(&self) -> usize {
        self.n * self.n
    }
}

/// Reduce k mod n to the minimal representative in (-n/2, n/2].
pub(crate) fn min_rep(k: i64, n: i64) -> i64 {
    let m = k.rem_euclid(n);
    if 2 * m > n {
        m - n
    } else {
        m
    }
}

/// Indicator of a measurable union of grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorField {
    spec: GridSpec,
    cells: Vec<bool>,
}

/// Real-valued samples on grid cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl IndicatorField {
    /// All-false field.
    pub fn empty(spec: GridSpec) -> Self {
        IndicatorField {
            spec,
            cells: vec![false; spec.cells()],
        }
    }

    /// Build from a membership predicate on cell indices (i, j).
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize, usize) -> bool) -> Self {
        let n = spec.side();
        let mut cells = vec![false; spec.cells()];
        for j in 0..n {
            for i in 0..n {
                cells[j * n + i] = f(i, j);
            }
        }
        IndicatorField { spec, cells }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.spec.n + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[j * self.spec.n + i] = v;
    }

    /// Wrapping accessor for possibly out-of-range signed indices.
    pub fn get_wrapped(&self, i: i64, j: i64) -> bool {
        let n = self.spec.n as i64;
        self.get(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize)
    }

    /// Number of true cells.
    pub fn count_true(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Lebesgue measure of the covered set, h²·#true.
    pub fn measure(&self) -> f64 {
        self.spec.h() * self.spec.h() * self.count_true() as f64
    }

    /// Translate by (dx, dy) cells: output(i, j) = input(i-dx, j-dy).
    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        Self::from_fn(self.spec, |i, j| {
            self.get_wrapped(i as i64 - dx, j as i64 - dy)
        })
    }

    /// Rotate 90° counterclockwise about the torus origin:
    /// output(i, j) = input(j, -1-i).
    pub fn rotated90(&self) -> Self {
        Self::from_fn(self.spec, |i, j| self.get_wrapped(j as i64, -1 - i as i64))
    }

    /// Complement cell-by-cell.
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.cells {
            *c = !*c;
        }
        out
    }

    /// Serialize in the `mixlab-set v1` text format: header, side, then one
    /// line of N {0,1} characters per row, row j = 0 first, LF endings.
    pub fn to_text(&self) -> String {
        let n = self.spec.n;
        let mut s = String::with_capacity((n + 1) * n + 32);
        s.push_str("mixlab-set v1\n");
        let _ = writeln!(s, "N {n}");
        for j in 0..n {
            for i in 0..n {
                s.push(if self.get(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// Parse the `mixlab-set v1` text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| MixError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        if header != "mixlab-set v1" {
            return Err(MixError::Parse {
                line: 1,
                msg: format!("expected 'mixlab-set v1', got '{header}'"),
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
        let spec = GridSpec::new(n)?;
        let mut field = IndicatorField::empty(spec);
        for j in 0..n {
            let (lineno, row) = lines.next().ok_or_else(|| MixError::Parse {
                line: j + 3,
                msg: "missing row".into(),
            })?;
            if row.len() != n {
                return Err(MixError::Parse {
                    line: lineno + 1,
                    msg: format!("row has {} characters, expected {n}", row.len()),
                });
            }
            for (i, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => field.set(i, j, true),
                    _ => {
                        return Err(MixError::Parse {
                            line: lineno + 1,
                            msg: format!("unexpected character '{ch}'"),
                        })
                    }
                }
            }
        }
        Ok(field)
    }

    /// Write the text format to a file.
    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Read the text format from a file.
    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl ScalarField {
    /// Build from finite per-cell values, validating finiteness.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        assert_eq!(values.len(), spec.cells(), "value buffer length mismatch");
        let n = spec.side();
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(MixError::NonFiniteValue(k % n, k / n));
            }
        }
        Ok(ScalarField { spec, values })
    }

    /// Sample a function at cell centers.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = spec.side();
        let h = spec.h();
        let mut values = Vec::with_capacity(spec.cells());
        for j in 0..n {
            for i in 0..n {
                values.push(f((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        Self::new(spec, values)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.n + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean value, h²·Σ, summed in row-major order with compensation.
    pub fn mean(&self) -> f64 {
        let h = self.spec.h();
        kahan_sum(self.values.iter().copied()) * h * h
    }
}

/// Compensated (Kahan) summation in the iterator's order.
pub fn kahan_sum(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in it {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Offsets (di, dj) of cells whose center lies within `radius_cells` cells of
/// a center cell, on a torus of the given side. Closed ball: ties at distance
/// exactly `radius_cells` are included.
pub fn disk_offsets_cells(side: usize, radius_cells: f64) -> Vec<(i32, i32)> {
    let reach = radius_cells.floor() as i64;
    let reach = reach.min(side as i64 / 2);
    let rr = radius_cells * radius_cells;
    let mut offsets = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let d2 = (di * di + dj * dj) as f64;
            if d2 <= rr {
                offsets.push((di as i32, dj as i32));
            }
        }
    }
    offsets
}

/// A disk stencil: the set of cell offsets within geodesic distance r of a
/// center cell, plus the per-row half-widths used by the windowed fast path.
#[derive(Debug, Clone)]
pub struct DiskStencil {
    r: f64,
    offsets: Vec<(i32, i32)>,
    /// (dj, half-width w): row dj holds offsets di in [-w, w].
    row_widths: Vec<(i32, i32)>,
}

impl DiskStencil {
    /// Stencil for radius r in torus units, 0 < r <= 1/4.
    pub fn new(spec: GridSpec, r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 0.25) {
            return Err(MixError::BadRadius(r));
        }
        let offsets = disk_offsets_cells(spec.side(), r * spec.side() as f64);
        let mut row_widths = Vec::new();
        let mut dj_cur = i32::MIN;
        for &(di, dj) in &offsets {
            if dj != dj_cur {
                row_widths.push((dj, di.abs()));
                dj_cur = dj;
            } else {
                let last = row_widths.last_mut().unwrap();
                last.1 = last.1.max(di.abs());
            }
        }
        Ok(DiskStencil {
            r,
            offsets,
            row_widths,
        })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    pub(crate) fn row_widths(&self) -> &[(i32, i32)] {
        &self.row_widths
    }
}

/// Exact per-cell counts of true cells inside the stencil ball, computed with
/// cyclic row prefix sums. Integer arithmetic throughout, so the result equals
/// the brute-force double loop bit for bit.
pub fn ball_counts(field: &IndicatorField, stencil: &DiskStencil) -> Vec<u32> {
    let n = field.spec.side();
    let ni = n as i64;
    // prefix[j][i] = number of true cells in row j strictly left of column i
    let mut prefix = vec![0u32; n * (n + 1)];
    for j in 0..n {
        let row = &mut prefix[j * (n + 1)..(j + 1) * (n + 1)];
        for i in 0..n {
            row[i + 1] = row[i] + u32::from(field.get(i, j));
        }
    }
    let seg = |j: usize, lo: i64, hi: i64| -> u32 {
        // sum of row j over wrapped columns lo..=hi, hi - lo + 1 <= n
        let row = &prefix[j * (n + 1)..(j + 1) * (n + 1)];
        let total = row[n];
        let lo = lo.rem_euclid(ni) as usize;
        let hi = hi.rem_euclid(ni) as usize;
        if lo <= hi {
            row[hi + 1] - row[lo]
        } else {
            total - (row[lo] - row[hi + 1])
        }
    };
    let mut counts = vec![0u32; n * n];
    for j in 0..n {
        for &(dj, w) in stencil.row_widths() {
            let jj = (j as i64 + dj as i64).rem_euclid(ni) as usize;
            let w = w as i64;
            let out = &mut counts[j * n..(j + 1) * n];
            for (i, c) in out.iter_mut().enumerate() {
                *c += seg(jj, i as i64 - w, i as i64 + w);
            }
        }
    }
    counts
}

/// Ball averages of an indicator field: value at x is the fraction of stencil
/// cells around x that are true. Values lie in [0, 1] and the mean over the
/// grid equals the field's measure exactly (integer counting).
pub fn ball_sums(field: &IndicatorField, stencil: &DiskStencil) -> ScalarField {
    let counts = ball_counts(field, stencil);
    let c = stencil.count() as f64;
    let values = counts.iter().map(|&k| k as f64 / c).collect();
    ScalarField {
        spec: field.spec,
        values,
    }
}

/// Ball averages of a scalar field, same windowed scheme with per-row float
/// prefix sums. Summation order is fixed, so results do not depend on thread
/// count.
pub fn ball_sums_scalar(field: &ScalarField, stencil: &DiskStencil) -> ScalarField {
    let n = field.spec.side();
    let ni = n as i64;
    let mut prefix = vec![0.0f64; n * (n + 1)];
    for j in 0..n {
        let row = &mut prefix[j * (n + 1)..(j + 1) * (n + 1)];
        for i in 0..n {
            row[i + 1] = row[i] + field.values[j * n + i];
        }
    }
    let seg = |j: usize, lo: i64, hi: i64| -> f64 {
        let row = &prefix[j * (n + 1)..(j + 1) * (n + 1)];
        let total = row[n];
        let lo = lo.rem_euclid(ni) as usize;
        let hi = hi.rem_euclid(ni) as usize;
        if lo <= hi {
            row[hi + 1] - row[lo]
        } else {
            total - (row[lo] - row[hi + 1])
        }
    };
    let mut values = vec![0.0f64; n * n];
    for j in 0..n {
        for &(dj, w) in stencil.row_widths() {
            let jj = (j as i64 + dj as i64).rem_euclid(ni) as usize;
            let w = w as i64;
            let out = &mut values[j * n..(j + 1) * n];
            for (i, v) in out.iter_mut().enumerate() {
                *v += seg(jj, i as i64 - w, i as i64 + w);
            }
        }
    }
    let c = stencil.count() as f64;
    for v in &mut values {
        *v /= c;
    }
    ScalarField {
        spec: field.spec,
        values,
    }
}

/// Half torus: true iff i < N/2, the set (0, 1/2) × (0, 1).
pub fn make_half_torus(spec: GridSpec) -> IndicatorField {
    let half = spec.side() / 2;
    IndicatorField::from_fn(spec, |i, _| i < half)
}

/// Checkerboard with blocks of side 2^-m; requires 1 <= m and 2^m | N.
/// Measure is exactly 1/2.
pub fn make_checkerboard(spec: GridSpec, m: u32) -> Result<IndicatorField> {
    let n = spec.side();
    let blocks = 1usize
        .checked_shl(m)
        .filter(|&b| m >= 1 && b <= n)
        .ok_or(MixError::BadCheckerScale { m, n })?;
    let bs = n / blocks;
    Ok(IndicatorField::from_fn(spec, |i, j| {
        (i / bs + j / bs) % 2 == 0
    }))
}

/// h²·(number of differing cells). Errors if the grids differ.
pub fn symmetric_difference_measure(a: &IndicatorField, b: &IndicatorField) -> Result<f64> {
    if a.spec != b.spec {
        return Err(MixError::SpecMismatch(a.spec.side(), b.spec.side()));
    }
    let differing = a.cells.iter().zip(&b.cells).filter(|(x, y)| x != y).count();
    Ok(a.spec.h() * a.spec.h() * differing as f64)
}
