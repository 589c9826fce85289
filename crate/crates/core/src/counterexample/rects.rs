//! Rectangle unions on the two half-planes and the multiscale column sets.

use crate::error::MixError;
use crate::Result;

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Rect { x0, x1, y0, y1 };
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite())
            || x1 <= x0
            || y1 <= y0
        {
            return Err(MixError::BadRectUnion(format!(
                "degenerate rectangle [{x0},{x1}]x[{y0},{y1}]"
            )));
        }
        Ok(r)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Whether the open interiors intersect (shared edges do not count).
    pub fn interior_overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    /// Euclidean distance between two rectangles (0 if they touch).
    pub fn distance(&self, o: &Rect) -> f64 {
        let dx = (o.x0 - self.x1).max(self.x0 - o.x1).max(0.0);
        let dy = (o.y0 - self.y1).max(self.y0 - o.y1).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Which half-plane a union lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideTag {
    /// x <= 0 side, the domain (-1,0)x(-1,1).
    Left,
    /// x >= 0 side, the domain (0,1)x(-1,1).
    Right,
}

/// Interior-disjoint rectangles confined to one side of the x = 0 line.
#[derive(Debug, Clone, PartialEq)]
pub struct RectUnion {
    side: SideTag,
    rects: Vec<Rect>,
}

/// Materialized unions are capped so evaluation stays at desk scale.
pub const MAX_RECTS: usize = 500_000;

impl RectUnion {
    /// Validate side confinement and pairwise interior disjointness.
    pub fn new(side: SideTag, rects: Vec<Rect>) -> Result<Self> {
        if rects.len() > MAX_RECTS {
            return Err(MixError::BadRectUnion(format!(
                "{} rectangles exceeds the materialization cap {MAX_RECTS}",
                rects.len()
            )));
        }
        for r in &rects {
            let ok = match side {
                SideTag::Left => r.x1 <= 0.0 && r.x0 > -1.0 && r.y0 > -1.0 && r.y1 < 1.0,
                SideTag::Right => r.x0 >= 0.0 && r.x1 < 1.0 && r.y0 > -1.0 && r.y1 < 1.0,
            };
            if !ok {
                return Err(MixError::BadRectUnion(format!(
                    "rectangle [{},{}]x[{},{}] leaves the {side:?} domain",
                    r.x0, r.x1, r.y0, r.y1
                )));
            }
        }
        // sort by x then y so overlap candidates are neighbors in the scan
        let mut order: Vec<usize> = (0..rects.len()).collect();
        order.sort_by(|&i, &j| {
            (rects[i].x0, rects[i].y0)
                .partial_cmp(&(rects[j].x0, rects[j].y0))
                .unwrap()
        });
        for (pos, &i) in order.iter().enumerate() {
            for &j in &order[pos + 1..] {
                if rects[j].x0 >= rects[i].x1 && rects[j].x0 > rects[i].x0 {
                    break;
                }
                if rects[i].interior_overlaps(&rects[j]) {
                    return Err(MixError::BadRectUnion(format!(
                        "rectangles overlap near x={}, y={}",
                        rects[j].x0, rects[j].y0
                    )));
                }
            }
        }
        Ok(RectUnion { side, rects })
    }

    pub fn side(&self) -> SideTag {
        self.side
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.rects.iter().map(|r| r.width() * r.height()).sum()
    }

    /// Minimum Euclidean distance to another union (infinity when either
    /// side is empty).
    pub fn distance(&self, other: &RectUnion) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.rects {
            for b in &other.rects {
                best = best.min(a.distance(b));
            }
        }
        best
    }
}

/// Parameters of the two-exponent multiscale construction: scale exponent
/// M and level count L, with separation eps = 2^(-LM).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiscaleParams {
    m: u32,
    l: u32,
}

impl MultiscaleParams {
    pub fn new(m: u32, l: u32) -> Result<Self> {
        if m < 11 {
            return Err(MixError::BadMultiscale(format!(
                "scale exponent M={m} must be at least 11"
            )));
        }
        if l < 2 {
            return Err(MixError::BadMultiscale(format!(
                "level count L={l} must be at least 2"
            )));
        }
        if m > 24 || l > 8 || (l - 1) * m > 120 {
            return Err(MixError::BadMultiscale(format!(
                "M={m}, L={l} is beyond the exact-summation regime \
                 (need M <= 24, L <= 8, (L-1)M <= 120)"
            )));
        }
        Ok(MultiscaleParams { m, l })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// The guaranteed separation 2^(-LM); exact, every power of two is
    /// representable in this range.
    pub fn eps(&self) -> f64 {
        2f64.powi(-((self.l * self.m) as i32))
    }

    pub fn log_inv_eps(&self) -> f64 {
        (self.l * self.m) as f64 * std::f64::consts::LN_2
    }

    /// Column width scale 2^(-kM) at level k.
    pub fn t(&self, k: u32) -> f64 {
        2f64.powi(-((k * self.m) as i32))
    }

    /// Number of columns at level k: floor(2^(kM)/(M+1)) + 1.
    pub fn cols(&self, k: u32) -> u128 {
        let km = k * self.m;
        assert!(km <= 120, "level scale 2^{km} exceeds the u128 budget");
        (1u128 << km) / (self.m as u128 + 1) + 1
    }

    /// Remainder 2^(kM) mod (M+1); cols(k)*t(k) = 1/(M+1) + (M+1-rem)/((M+1) 2^(kM))
    /// exactly, which keeps differences of column spans at full precision.
    pub(crate) fn cols_rem(&self, k: u32) -> u128 {
        let km = k * self.m;
        assert!(km <= 120, "level scale 2^{km} exceeds the u128 budget");
        (1u128 << km) % (self.m as u128 + 1)
    }

    /// x-interval of level-k columns on the left: [-2^(-kM), -2^(-kM-1)].
    pub fn x_left(&self, k: u32) -> (f64, f64) {
        let t = self.t(k);
        (-t, -0.5 * t)
    }

    /// x-interval of level-k columns on the right: [2^(-kM-1), 2^(-kM)].
    pub fn x_right(&self, k: u32) -> (f64, f64) {
        let t = self.t(k);
        (0.5 * t, t)
    }

    /// y-interval of left column n at level k: [(Mn+2), (Mn+3)] * 2^(-kM).
    pub fn y_left(&self, k: u32, n: u128) -> (f64, f64) {
        let t = self.t(k);
        let base = self.m as f64 * n as f64;
        ((base + 2.0) * t, (base + 3.0) * t)
    }

    /// y-interval of right column n at level k: [Mn, Mn+1] * 2^(-kM).
    pub fn y_right(&self, k: u32, n: u128) -> (f64, f64) {
        let t = self.t(k);
        let base = self.m as f64 * n as f64;
        (base * t, (base + 1.0) * t)
    }
}

/// Materialize the multiscale pair (A, B). Fails when the total rectangle
/// count exceeds the desk-scale cap; the decomposition route never
/// materializes and has no such limit.
pub fn build_multiscale_sets(p: &MultiscaleParams) -> Result<(RectUnion, RectUnion)> {
    let total: u128 = (1..p.l()).map(|k| p.cols(k)).sum();
    if total > MAX_RECTS as u128 {
        return Err(MixError::BadMultiscale(format!(
            "{total} rectangles per side exceeds the materialization cap {MAX_RECTS}; \
             use the decomposition route"
        )));
    }
    let mut left = Vec::with_capacity(total as usize);
    let mut right = Vec::with_capacity(total as usize);
    for k in 1..p.l() {
        let (lx0, lx1) = p.x_left(k);
        let (rx0, rx1) = p.x_right(k);
        for n in 0..p.cols(k) {
            let (ly0, ly1) = p.y_left(k, n);
            let (ry0, ry1) = p.y_right(k, n);
            left.push(Rect::new(lx0, lx1, ly0, ly1)?);
            right.push(Rect::new(rx0, rx1, ry0, ry1)?);
        }
    }
    Ok((
        RectUnion::new(SideTag::Left, left)?,
        RectUnion::new(SideTag::Right, right)?,
    ))
}
