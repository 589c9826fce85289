//! Truncated Bianchini semi-norm, two-sided mixedness, and the Léger
//! spectral functional.
//!
//! The semi-norm of f at truncation eps is
//!     ∫_eps^{1/4} ∫_{T²} |f(x) − avg_{B_r(x)} f| dx dr/r,
//! discretized on a geometric radius grid with log-trapezoid weights. A set E
//! is kappa-mixed at scale r when every ball average of its indicator lies in
//! [kappa, 1-kappa].

use crate::grid::{
    ball_counts, ball_sums_scalar, kahan_sum, min_rep, DiskStencil, IndicatorField, ScalarField,
};
use crate::{MixError, Result};
use rayon::prelude::*;

/// Radius grid and weights for the truncated semi-norm.
#[derive(Debug, Clone)]
pub struct SemiNormParams {
    eps: f64,
    rho: f64,
    kappa: f64,
    radii: Vec<f64>,
    weights: Vec<f64>,
}

/// Default geometric step between consecutive radii.
pub const DEFAULT_RHO: f64 = 1.189207115002721; // 2^(1/4)

impl SemiNormParams {
    /// Geometric grid eps, rho·eps, ... with the last point clamped to 1/4.
    /// Weights are the log-trapezoid rule, so they sum to log((1/4)/eps).
    pub fn new(eps: f64, rho: f64, kappa: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.125) {
            return Err(MixError::BadEps(eps));
        }
        if !(rho > 1.0) || !rho.is_finite() {
            return Err(MixError::BadRho(rho));
        }
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(MixError::BadKappa(kappa));
        }
        let mut radii = vec![eps];
        loop {
            let next = radii.last().unwrap() * rho;
            if next >= 0.25 {
                radii.push(0.25);
                break;
            }
            radii.push(next);
        }
        // trapezoid in log r over the gaps g_j = log(r_{j+1}/r_j)
        let m = radii.len();
        let gaps: Vec<f64> = (0..m - 1).map(|j| (radii[j + 1] / radii[j]).ln()).collect();
        let mut weights = vec![0.0; m];
        weights[0] = 0.5 * gaps[0];
        weights[m - 1] = 0.5 * gaps[m - 2];
        for j in 1..m - 1 {
            weights[j] = 0.5 * (gaps[j - 1] + gaps[j]);
        }
        Ok(SemiNormParams {
            eps,
            rho,
            kappa,
            radii,
            weights,
        })
    }

    /// Grid with the default step 2^(1/4).
    pub fn with_default_rho(eps: f64, kappa: f64) -> Result<Self> {
        Self::new(eps, DEFAULT_RHO, kappa)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Per-radius extrema of ball averages, plus the resolved mixing scale.
#[derive(Debug, Clone)]
pub struct MixReport {
    pub kappa: f64,
    /// Smallest tested radius r such that the field is kappa-mixed at r and
    /// at every larger tested radius; None when even r = 1/4 fails.
    pub scale: Option<f64>,
    /// Rows (r, min average, max average) for every tested radius, ascending.
    pub per_radius: Vec<(f64, f64, f64)>,
}

/// Two-sided mixedness at one scale: every ball average in [kappa, 1-kappa].
/// Requires h <= r <= 1/4.
pub fn is_mixed(field: &IndicatorField, kappa: f64, r: f64) -> Result<bool> {
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(MixError::BadKappa(kappa));
    }
    let spec = field.spec();
    if r < spec.h() {
        return Err(MixError::BadRadius(r));
    }
    let st = DiskStencil::new(spec, r)?;
    let c = st.count() as f64;
    Ok(ball_counts(field, &st)
        .iter()
        .all(|&k| k as f64 >= kappa * c && k as f64 <= (1.0 - kappa) * c))
}

/// Scan the radius grid and report per-radius ball-average extrema and the
/// mixing scale (see [`MixReport::scale`]).
pub fn mixing_scale(field: &IndicatorField, params: &SemiNormParams) -> MixReport {
    let spec = field.spec();
    let kappa = params.kappa;
    let per_radius: Vec<(f64, f64, f64)> = params
        .radii
        .par_iter()
        .map(|&r| {
            let st = DiskStencil::new(spec, r).expect("grid radii are validated");
            let c = st.count() as f64;
            let counts = ball_counts(field, &st);
            let mut lo = u32::MAX;
            let mut hi = 0u32;
            for &k in &counts {
                lo = lo.min(k);
                hi = hi.max(k);
            }
            (r, lo as f64 / c, hi as f64 / c)
        })
        .collect();
    let mut scale = None;
    for &(r, lo, hi) in per_radius.iter().rev() {
        if lo >= kappa && hi <= 1.0 - kappa {
            scale = Some(r);
        } else {
            break;
        }
    }
    MixReport {
        kappa,
        scale,
        per_radius,
    }
}

/// Semi-norm of an indicator field. Per radius the integrand is assembled in
/// exact integer arithmetic, so the value is reproducible bit for bit and
/// independent of thread count.
pub fn bianchini_seminorm(field: &IndicatorField, params: &SemiNormParams) -> f64 {
    let spec = field.spec();
    let n = spec.side();
    let h2 = spec.h() * spec.h();
    let per_radius: Vec<f64> = params
        .radii
        .par_iter()
        .map(|&r| {
            let st = DiskStencil::new(spec, r).expect("grid radii are validated");
            let c = st.count() as u64;
            let counts = ball_counts(field, &st);
            let mut acc: u64 = 0;
            for j in 0..n {
                for i in 0..n {
                    let k = counts[j * n + i] as u64;
                    acc += if field.get(i, j) { c - k } else { k };
                }
            }
            (acc as f64 / c as f64) * h2
        })
        .collect();
    kahan_sum(per_radius.iter().zip(&params.weights).map(|(v, w)| v * w))
}

/// Semi-norm of a scalar field; float path with fixed summation order.
pub fn bianchini_seminorm_scalar(field: &ScalarField, params: &SemiNormParams) -> f64 {
    let spec = field.spec();
    let h2 = spec.h() * spec.h();
    let per_radius: Vec<f64> = params
        .radii
        .par_iter()
        .map(|&r| {
            let st = DiskStencil::new(spec, r).expect("grid radii are validated");
            let avg = ball_sums_scalar(field, &st);
            kahan_sum(
                field
                    .values()
                    .iter()
                    .zip(avg.values())
                    .map(|(f, a)| (f - a).abs()),
            ) * h2
        })
        .collect();
    kahan_sum(per_radius.iter().zip(&params.weights).map(|(v, w)| v * w))
}

/// The ±1 relabeling f_A = 1_A − 1_{A^c}.
pub fn fa_of(field: &IndicatorField) -> ScalarField {
    let spec = field.spec();
    let n = spec.side();
    let mut values = Vec::with_capacity(spec.cells());
    for j in 0..n {
        for i in 0..n {
            values.push(if field.get(i, j) { 1.0 } else { -1.0 });
        }
    }
    ScalarField::new(spec, values).expect("±1 values are finite")
}

/// Léger spectral functional V(f) = Σ_{ξ≠0} |f̂(ξ)|² log|ξ| on the integer
/// frequency lattice ξ ∈ [-N/2, N/2)², zero mode excluded. The transform is
/// normalized so that Σ_ξ |f̂(ξ)|² = h² Σ_x |f(x)|² (Parseval).
pub fn leger_v(field: &ScalarField) -> f64 {
    let spec = field.spec();
    let n = spec.side();
    let h2 = spec.h() * spec.h();
    let hat = crate::fft::fft2_forward_real(field.values(), n);
    // f̂(ξ) = h²·DFT; magnitudes are phase-free so cell-center offsets drop out
    let mut terms = Vec::with_capacity(n * n - 1);
    for k2 in 0..n {
        for k1 in 0..n {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let x1 = min_rep(k1 as i64, n as i64) as f64;
            let x2 = min_rep(k2 as i64, n as i64) as f64;
            let amp = hat[k2 * n + k1] * h2;
            terms.push(amp.norm_sqr() * 0.5 * (x1 * x1 + x2 * x2).ln());
        }
    }
    kahan_sum(terms.into_iter())
}

/// Parseval check helper: (Σ_ξ |f̂|², h² Σ_x |f|²).
pub fn spectral_energy(field: &ScalarField) -> (f64, f64) {
    let spec = field.spec();
    let n = spec.side();
    let h2 = spec.h() * spec.h();
    let hat = crate::fft::fft2_forward_real(field.values(), n);
    let lhs = kahan_sum(hat.iter().map(|z| (z * h2).norm_sqr()));
    let rhs = kahan_sum(field.values().iter().map(|v| v * v)) * h2;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_checkerboard, make_half_torus, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn params_weights_sum_to_log_range() {
        for eps in [1.0 / 64.0, 0.011, 1.0 / 16.0, 0.1] {
            let p = SemiNormParams::with_default_rho(eps, 1.0 / 3.0).unwrap();
            let total: f64 = p.weights().iter().sum();
            let expected = (0.25 / eps).ln();
            assert!(
                (total - expected).abs() < 1e-12,
                "eps={eps}: weight sum {total} vs {expected}"
            );
            assert_eq!(p.radii().last().copied(), Some(0.25));
            for w in p.radii().windows(2) {
                assert!(w[0] < w[1], "radii must increase");
            }
        }
    }

    #[test]
    fn params_reject_bad_inputs() {
        assert!(SemiNormParams::new(0.0, 2.0, 0.3).is_err());
        assert!(SemiNormParams::new(0.2, 2.0, 0.3).is_err());
        assert!(SemiNormParams::new(0.01, 1.0, 0.3).is_err());
        assert!(SemiNormParams::new(0.01, 2.0, 0.5).is_err());
        assert!(SemiNormParams::new(0.01, 2.0, 0.0).is_err());
    }

    #[test]
    fn checkerboard_is_mixed_at_coarse_scales() {
        let spec = GridSpec::new(256).unwrap();
        let e = make_checkerboard(spec, 5).unwrap();
        // blocks of side 1/32; balls of radius 1/8 straddle many blocks
        assert!(is_mixed(&e, 1.0 / 3.0, 0.125).unwrap());
        assert!(is_mixed(&e, 1.0 / 3.0, 0.25).unwrap());
        // at the block scale the centers of blocks are pure
        assert!(!is_mixed(&e, 1.0 / 3.0, 1.0 / 64.0).unwrap());
    }

    #[test]
    fn half_torus_is_not_mixed() {
        let spec = GridSpec::new(128).unwrap();
        let f = make_half_torus(spec);
        assert!(!is_mixed(&f, 1.0 / 3.0, 0.25).unwrap());
    }

    #[test]
    fn is_mixed_rejects_subcell_radius() {
        let spec = GridSpec::new(64).unwrap();
        let f = make_half_torus(spec);
        assert!(is_mixed(&f, 0.3, 0.5 * spec.h()).is_err());
        assert!(is_mixed(&f, 0.6, 0.25).is_err());
    }

    #[test]
    fn mixing_scale_of_checkerboard() {
        let spec = GridSpec::new(256).unwrap();
        let e = make_checkerboard(spec, 5).unwrap();
        let p = SemiNormParams::with_default_rho(1.0 / 128.0, 1.0 / 3.0).unwrap();
        let report = mixing_scale(&e, &p);
        let scale = report.scale.expect("checkerboard mixes at coarse scales");
        assert!(
            scale <= 1.0 / 16.0,
            "m=5 checkerboard should be mixed by r=1/16, got {scale}"
        );
        assert_eq!(report.per_radius.len(), p.radii().len());
        for &(_, lo, hi) in &report.per_radius {
            assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
        }
    }

    #[test]
    fn seminorm_complement_symmetry() {
        let spec = GridSpec::new(64).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| (3 * i + 5 * j) % 7 < 3);
        let p = SemiNormParams::with_default_rho(1.0 / 32.0, 1.0 / 3.0).unwrap();
        let a = bianchini_seminorm(&f, &p);
        let b = bianchini_seminorm(&f.complement(), &p);
        assert!((a - b).abs() < 1e-10, "complement symmetry: {a} vs {b}");
    }

    #[test]
    fn seminorm_translation_and_rotation_invariance() {
        let spec = GridSpec::new(64).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| (i * i + j) % 11 < 4);
        let p = SemiNormParams::with_default_rho(1.0 / 32.0, 1.0 / 3.0).unwrap();
        let base = bianchini_seminorm(&f, &p);
        let moved = bianchini_seminorm(&f.translated(13, -7), &p);
        let turned = bianchini_seminorm(&f.rotated90(), &p);
        assert_eq!(base, moved, "translation must not change the semi-norm");
        assert_eq!(base, turned, "rotation must not change the semi-norm");
    }

    #[test]
    fn seminorm_eps_monotone_on_nested_grids() {
        let spec = GridSpec::new(128).unwrap();
        let f = make_checkerboard(spec, 4).unwrap();
        let rho = DEFAULT_RHO;
        let mut prev = f64::INFINITY;
        let mut eps = 1.0 / 64.0;
        for _ in 0..6 {
            let p = SemiNormParams::new(eps, rho, 1.0 / 3.0).unwrap();
            let v = bianchini_seminorm(&f, &p);
            assert!(
                v <= prev + 1e-12,
                "seminorm must not increase with eps: {v} after {prev}"
            );
            prev = v;
            eps *= rho;
        }
    }

    #[test]
    fn fa_identity_half_factor() {
        let spec = GridSpec::new(64).unwrap();
        let f = IndicatorField::from_fn(spec, |i, j| (i + 3 * j) % 5 < 2);
        let p = SemiNormParams::with_default_rho(1.0 / 32.0, 1.0 / 3.0).unwrap();
        let ind = bianchini_seminorm(&f, &p);
        let fa = bianchini_seminorm_scalar(&fa_of(&f), &p);
        assert!(
            (fa - 2.0 * ind).abs() < 1e-10 * fa.max(1.0),
            "expected ||f_A|| = 2||1_A||: {fa} vs {}",
            2.0 * ind
        );
    }

    #[test]
    fn mixed_field_observation_floor() {
        // every radius at which the field is mixed contributes at least kappa
        // pointwise, so the seminorm on the eps/rho grid dominates
        // kappa * (weight mass of the radii >= eps)
        let spec = GridSpec::new(256).unwrap();
        let e = make_checkerboard(spec, 4).unwrap();
        let kappa = 1.0 / 3.0;
        let eps = 1.0 / 16.0; // the block side; balls this large straddle blocks
        let p = SemiNormParams::with_default_rho(eps / DEFAULT_RHO, kappa).unwrap();
        for &r in p.radii().iter().filter(|&&r| r >= eps) {
            assert!(is_mixed(&e, kappa, r).unwrap(), "not mixed at r={r}");
        }
        let v = bianchini_seminorm(&e, &p);
        let floor = kappa
            * p.radii()
                .iter()
                .zip(p.weights())
                .filter(|(&r, _)| r >= eps)
                .map(|(_, w)| w)
                .sum::<f64>();
        assert!(v >= floor, "observation floor violated: {v} < {floor}");
    }

    #[test]
    fn half_torus_seminorm_stays_small() {
        let spec = GridSpec::new(256).unwrap();
        let f = make_half_torus(spec);
        let p = SemiNormParams::with_default_rho(1.0 / 64.0, 1.0 / 3.0).unwrap();
        let v = bianchini_seminorm(&f, &p);
        assert!(v <= 3.0, "stripe seminorm should stay O(1), got {v}");
        assert!(v > 0.0);
    }

    #[test]
    fn leger_v_of_pure_modes() {
        let spec = GridSpec::new(64).unwrap();
        let f = ScalarField::from_fn(spec, |x, _| (2.0 * PI * 2.0 * x).cos()).unwrap();
        let v = leger_v(&f);
        let expected = 0.5 * 2.0f64.ln();
        assert!(
            (v - expected).abs() < 1e-10,
            "V(cos(4πx)) = {v}, expected {expected}"
        );
        let g = ScalarField::from_fn(spec, |x, _| (2.0 * PI * x).cos()).unwrap();
        assert!(leger_v(&g).abs() < 1e-10, "|ξ|=1 modes carry log 1 = 0");
        let c = ScalarField::from_fn(spec, |_, _| 0.7).unwrap();
        assert!(leger_v(&c).abs() < 1e-12, "constants have no nonzero modes");
    }

    #[test]
    fn parseval_normalization() {
        let spec = GridSpec::new(32).unwrap();
        let f = ScalarField::from_fn(spec, |x, y| {
            (2.0 * PI * x).sin() + 0.3 * (2.0 * PI * 3.0 * y).cos() + 0.1
        })
        .unwrap();
        let (lhs, rhs) = spectral_energy(&f);
        assert!(
            (lhs - rhs).abs() < 1e-10 * rhs.max(1.0),
            "Parseval: {lhs} vs {rhs}"
        );
    }
}
