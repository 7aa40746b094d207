//! Ground truth for the one-dimensional square well `q = -V0·1_{[-a,a]}`:
//! resonances are the zeros of the transmission denominator
//! `F(z) = cos(2κa) - i (z²+κ²)/(2zκ) sin(2κa)`, `κ² = z² + V0`,
//! counted by the argument principle and polished by Newton.
//!
//! Also hosts the seeded matrix fuzzer for the abstract resolvent estimates.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resolvent::{identity_plus, sigma_min, spectral_norm, ResolventError};
use crate::tiling::Rect;

/// Spacing of the `|F|` seed grid.
pub const SEED_SPACING: f64 = 0.02;
pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_STEP_TOL: f64 = 1e-13;
/// Allowed distance of the winding integral from an integer.
pub const WINDING_SLACK: f64 = 0.1;
pub const FUZZ_TOLERANCE: f64 = 1e-9;

const SERIES_RADIUS: f64 = 1.0;
const DEDUP_RADIUS: f64 = 1e-8;
const MAX_SEGMENTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("spectral parameter z = 0 is not allowed")]
    ZeroSpectralParameter,
    #[error("invalid well: {0}")]
    InvalidSpec(String),
    #[error("search box {0} contains z = 0")]
    BoxContainsOrigin(Rect),
    #[error("boundary of {0} passes through or too close to a zero of F")]
    ContourThroughZero(Rect),
    #[error("winding number over {rect} is {value}, not within {WINDING_SLACK} of an integer")]
    NonIntegerWinding { rect: Rect, value: f64 },
    #[error("argument principle counts {winding} zeros in {rect} but Newton found {found}")]
    CountMismatch {
        rect: Rect,
        winding: i64,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareWellSpec {
    pub v0: f64,
    pub a: f64,
}

impl SquareWellSpec {
    pub fn new(v0: f64, a: f64) -> Result<Self, OracleError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(OracleError::InvalidSpec(format!(
                "half-width must be positive, got {a}"
            )));
        }
        if !v0.is_finite() {
            return Err(OracleError::InvalidSpec(format!(
                "depth must be finite, got {v0}"
            )));
        }
        Ok(Self { v0, a })
    }
}

/// `cos w`, `sin w / w` and `(w cos w - sin w)/w³` as functions of `w²`;
/// all three are even, so no square-root branch enters.
fn even_trig(w2: Complex64) -> (Complex64, Complex64, Complex64) {
    if w2.norm() <= SERIES_RADIUS {
        let mut cos = Complex64::new(0.0, 0.0);
        let mut sinc = Complex64::new(0.0, 0.0);
        let mut t = Complex64::new(0.0, 0.0);
        // (-1)^k w^{2k}/(2k)! and (-1)^k 2k w^{2k-2}/(2k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut t_term = Complex64::new(-1.0 / 3.0, 0.0);
        for k in 0..20 {
            let kf = k as f64;
            cos += term;
            sinc += term / (2.0 * kf + 1.0);
            term *= -w2 / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            if k >= 1 {
                t += t_term;
                t_term *= -w2 / ((2.0 * kf) * (2.0 * kf + 3.0));
            }
        }
        (cos, sinc, t)
    } else {
        let w = w2.sqrt();
        let (s, c) = (w.sin(), w.cos());
        (c, s / w, (w * c - s) / (w2 * w))
    }
}

/// `F(z)` and `F'(z)`.
pub fn well_determinant_with_derivative(
    spec: &SquareWellSpec,
    z: Complex64,
) -> Result<(Complex64, Complex64), OracleError> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(OracleError::ZeroSpectralParameter);
    }
    let a = spec.a;
    let i = Complex64::i();
    let w2 = 4.0 * a * a * (z * z + spec.v0);
    let (cos, sinc, t) = even_trig(w2);
    // (z² + κ²)/(2zκ) · sin(2κa) = 2a·p·sinc with p = z + V0/(2z)
    let p = z + spec.v0 / (2.0 * z);
    let dp = 1.0 - spec.v0 / (2.0 * z * z);
    let f = cos - 2.0 * a * i * p * sinc;
    let df = -4.0 * a * a * z * sinc - 2.0 * a * i * (dp * sinc + p * 4.0 * a * a * z * t);
    Ok((f, df))
}

pub fn well_determinant(spec: &SquareWellSpec, z: Complex64) -> Result<Complex64, OracleError> {
    Ok(well_determinant_with_derivative(spec, z)?.0)
}

/// 15-point Kronrod nodes (non-negative half) with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate and `|K - G|` of `∫ F'/F dz` over the segment `[z0, z1]`.
fn gk15(spec: &SquareWellSpec, z0: Complex64, z1: Complex64) -> Option<(Complex64, f64)> {
    let mid = 0.5 * (z0 + z1);
    let half = 0.5 * (z1 - z0);
    let log_derivative = |t: f64| -> Option<Complex64> {
        let (f, df) = well_determinant_with_derivative(spec, mid + half * t).ok()?;
        let q = df / f;
        q.is_finite().then_some(q)
    };
    let center = log_derivative(0.0)?;
    let mut kronrod = center * WGK[7];
    let mut gauss = center * WG[3];
    for k in 0..7 {
        let pair = log_derivative(XGK[k])? + log_derivative(-XGK[k])?;
        kronrod += pair * WGK[k];
        if k % 2 == 1 {
            gauss += pair * WG[k / 2];
        }
    }
    Some((kronrod * half, ((kronrod - gauss) * half).norm()))
}

/// Adaptive `∮ F'/F dz` over the positively oriented boundary of `rect`.
fn contour_integral(spec: &SquareWellSpec, rect: &Rect, tol: f64) -> Option<Complex64> {
    let corners = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
    ];
    let perimeter = 2.0 * ((rect.re_max - rect.re_min) + (rect.im_max - rect.im_min));
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack: Vec<(Complex64, Complex64)> =
        (0..4).map(|k| (corners[k], corners[(k + 1) % 4])).collect();
    let mut segments = 0usize;
    while let Some((z0, z1)) = stack.pop() {
        segments += 1;
        if segments > MAX_SEGMENTS {
            return None;
        }
        let (value, err) = gk15(spec, z0, z1)?;
        let share = tol * (z1 - z0).norm() / perimeter;
        if err <= share.max(1e-15 * value.norm()) {
            total += value;
        } else {
            let m = 0.5 * (z0 + z1);
            if (m - z0).norm() < 1e-12 {
                return None;
            }
            stack.push((m, z1));
            stack.push((z0, m));
        }
    }
    Some(total)
}

/// Number of zeros of `F` inside `rect` from the argument principle.
pub fn winding_number(spec: &SquareWellSpec, rect: &Rect) -> Result<i64, OracleError> {
    if rect.contains_origin() {
        return Err(OracleError::BoxContainsOrigin(*rect));
    }
    let integral =
        contour_integral(spec, rect, 1e-9).ok_or(OracleError::ContourThroughZero(*rect))?;
    let value = (integral / Complex64::new(0.0, 2.0 * PI)).re;
    let rounded = value.round();
    if (value - rounded).abs() > WINDING_SLACK {
        return Err(OracleError::NonIntegerWinding { rect: *rect, value });
    }
    Ok(rounded as i64)
}

/// Newton from `z`; the converged point, or `None` on divergence.
pub fn newton_polish(spec: &SquareWellSpec, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..NEWTON_MAX_ITER {
        let (f, df) = well_determinant_with_derivative(spec, z).ok()?;
        if f == Complex64::new(0.0, 0.0) {
            return Some(z);
        }
        let step = f / df;
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= NEWTON_STEP_TOL {
            return Some(z);
        }
    }
    None
}

fn newton_zeros(spec: &SquareWellSpec, rect: &Rect, spacing: f64) -> Vec<Complex64> {
    // sample one step beyond the box so zeros near the edge get seeds
    let nr = ((rect.re_max - rect.re_min) / spacing).ceil() as i64 + 2;
    let ni = ((rect.im_max - rect.im_min) / spacing).ceil() as i64 + 2;
    let at = |kr: i64, ki: i64| {
        Complex64::new(
            rect.re_min + (kr - 1) as f64 * spacing,
            rect.im_min + (ki - 1) as f64 * spacing,
        )
    };
    let magnitude: Vec<Vec<f64>> = (0..=ni)
        .into_par_iter()
        .map(|ki| {
            (0..=nr)
                .map(|kr| {
                    well_determinant(spec, at(kr, ki))
                        .map(|f| f.norm())
                        .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    let mut seeds = Vec::new();
    for ki in 1..ni {
        for kr in 1..nr {
            let m = magnitude[ki as usize][kr as usize];
            let is_min = (-1..=1).all(|di: i64| {
                (-1..=1).all(|dr: i64| magnitude[(ki + di) as usize][(kr + dr) as usize] >= m)
            });
            if is_min {
                seeds.push(at(kr, ki));
            }
        }
    }
    let candidates: Vec<Complex64> = seeds
        .par_iter()
        .filter_map(|&s| newton_polish(spec, s))
        .collect();
    let mut zeros: Vec<Complex64> = Vec::new();
    for z in candidates {
        let inside = z.re >= rect.re_min - 1e-9
            && z.re <= rect.re_max + 1e-9
            && z.im >= rect.im_min - 1e-9
            && z.im <= rect.im_max + 1e-9;
        if inside && zeros.iter().all(|w| (w - z).norm() > DEDUP_RADIUS) {
            zeros.push(z);
        }
    }
    zeros
}

fn zeros_in(spec: &SquareWellSpec, rect: &Rect) -> Result<Vec<Complex64>, OracleError> {
    let winding = winding_number(spec, rect)?;
    let mut found = 0;
    for refinement in 0..3 {
        let mut zeros = newton_zeros(spec, rect, SEED_SPACING / f64::powi(2.0, refinement));
        found = zeros.len();
        if found as i64 == winding {
            zeros.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            return Ok(zeros);
        }
    }
    Err(OracleError::CountMismatch {
        rect: *rect,
        winding,
        found,
    })
}

/// All zeros of `F` in `rect`, sorted by real then imaginary part. If the
/// boundary runs through a zero the box is widened by half a seed step on
/// every side (shrunk instead if widening would cover the origin) and the
/// search repeated once.
pub fn find_zeros(spec: &SquareWellSpec, rect: &Rect) -> Result<Vec<Complex64>, OracleError> {
    if rect.contains_origin() {
        return Err(OracleError::BoxContainsOrigin(*rect));
    }
    match zeros_in(spec, rect) {
        Err(OracleError::ContourThroughZero(_)) => {
            // nudge the contour off the zero: outward by half a seed step,
            // or inward when growing the box would swallow the origin
            let s = 0.5 * SEED_SPACING;
            let widened = Rect {
                re_min: rect.re_min - s,
                re_max: rect.re_max + s,
                im_min: rect.im_min - s,
                im_max: rect.im_max + s,
            };
            if !widened.contains_origin() {
                return zeros_in(spec, &widened);
            }
            let shrunk = Rect {
                re_min: rect.re_min + s,
                re_max: rect.re_max - s,
                im_min: rect.im_min + s,
                im_max: rect.im_max - s,
            };
            if shrunk.re_min >= shrunk.re_max || shrunk.im_min >= shrunk.im_max {
                return Err(OracleError::ContourThroughZero(*rect));
            }
            zeros_in(spec, &shrunk)
        }
        other => other,
    }
}

/// Outcome of one fuzz instance; a margin is the relative slack of an
/// inequality (negative means violated), `None` when its hypothesis fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaMargins {
    pub pollution: Option<f64>,
    pub inclusion: Option<f64>,
    pub restriction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CheckTally {
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub trials: usize,
    pub seed: u64,
    pub pollution: CheckTally,
    pub inclusion: CheckTally,
    pub restriction: CheckTally,
    pub violations: usize,
    pub worst_margin: f64,
}

fn inverse_norm(k: &Mat<Complex64>) -> Result<f64, ResolventError> {
    let s = sigma_min(identity_plus(k.as_ref()).as_ref())?;
    Ok(if s == 0.0 { f64::INFINITY } else { 1.0 / s })
}

/// The three inequalities for one instance:
/// * perturbation `K' = K + E`: `(1 - ‖E‖ R) R' ≤ R` when `‖E‖ R < 1`,
///   `R = ‖(I+K)^{-1}‖`, `R' = ‖(I+K')^{-1}‖`;
/// * compression to the leading `m` coordinates with `δ = ‖K - PKP‖`:
///   `R ≥ 1/δ` implies `‖(I+PKP)^{-1}‖ ≥ 1/(2δ)`;
/// * the leading `m×m` block `A` of `K`: `‖(I_m+A)^{-1}‖ ≤ ‖(I+A⊕0)^{-1}‖`.
pub fn lemma_checks(
    k: &Mat<Complex64>,
    e: &Mat<Complex64>,
    m: usize,
) -> Result<LemmaMargins, ResolventError> {
    let n = k.nrows();
    assert!(m <= n, "leading block larger than matrix");
    let r = inverse_norm(k)?;

    let delta = spectral_norm(e.as_ref())?;
    let pollution = if r.is_finite() && 1.0 - delta * r > 0.0 {
        let perturbed = Mat::from_fn(n, n, |i, j| k[(i, j)] + e[(i, j)]);
        let r_pert = inverse_norm(&perturbed)?;
        Some(if r_pert.is_finite() {
            (r - (1.0 - delta * r) * r_pert) / r
        } else {
            f64::NEG_INFINITY
        })
    } else {
        None
    };

    let compressed = Mat::from_fn(n, n, |i, j| {
        if i < m && j < m {
            k[(i, j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let remainder = Mat::from_fn(n, n, |i, j| k[(i, j)] - compressed[(i, j)]);
    let delta_c = spectral_norm(remainder.as_ref())?;
    let inclusion = if delta_c > 0.0 && r >= 1.0 / delta_c {
        let r_c = inverse_norm(&compressed)?;
        let bound = 1.0 / (2.0 * delta_c);
        Some(if r_c.is_finite() {
            (r_c - bound) / bound
        } else {
            f64::INFINITY
        })
    } else {
        None
    };

    let restriction = if m > 0 {
        let block = Mat::from_fn(m, m, |i, j| k[(i, j)]);
        let r_block = inverse_norm(&block)?;
        let r_full = inverse_norm(&compressed)?;
        if r_block.is_finite() && r_full.is_finite() {
            Some((r_full - r_block) / r_full)
        } else {
            None
        }
    } else {
        None
    };
    Ok(LemmaMargins {
        pollution,
        inclusion,
        restriction,
    })
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Mat<Complex64> {
    Mat::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
}

fn fuzz_trial(seed: u64, trial: usize, max_dim: usize) -> Result<LemmaMargins, ResolventError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let n = rng.gen_range(1..=max_dim);
    let scale = rng.gen_range(0.05..2.0) / (n as f64).sqrt();
    let mut k = random_matrix(&mut rng, n, scale);
    // every fourth trial sits on the singular set: K ← K - (I+K)v vᴴ gives (I+K)v = 0
    if trial % 4 == 3 {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<Complex64> = v.iter().map(|x| x / norm).collect();
        let iv: Vec<Complex64> = (0..n)
            .map(|i| v[i] + (0..n).map(|j| k[(i, j)] * v[j]).sum::<Complex64>())
            .collect();
        k = Mat::from_fn(n, n, |i, j| k[(i, j)] - iv[i] * v[j].conj());
    }
    let e = random_matrix(&mut rng, n, 1.0);
    let norm = spectral_norm(e.as_ref())?;
    let target = 10f64.powf(rng.gen_range(-4.0..0.0));
    let e = Mat::from_fn(n, n, |i, j| e[(i, j)] * (target / norm));
    let m = rng.gen_range(0..=n);
    lemma_checks(&k, &e, m)
}

/// `trials` seeded random instances of dimension `1..=max_dim`.
pub fn lemma_fuzz(trials: usize, max_dim: usize, seed: u64) -> Result<FuzzReport, ResolventError> {
    assert!(
        trials >= 1 && max_dim >= 1,
        "need at least one trial of dimension at least one"
    );
    let margins = (0..trials)
        .into_par_iter()
        .map(|t| fuzz_trial(seed, t, max_dim))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = FuzzReport {
        trials,
        seed,
        pollution: CheckTally::default(),
        inclusion: CheckTally::default(),
        restriction: CheckTally::default(),
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for m in &margins {
        for (tally, margin) in [
            (&mut report.pollution, m.pollution),
            (&mut report.inclusion, m.inclusion),
            (&mut report.restriction, m.restriction),
        ] {
            match margin {
                None => tally.skipped += 1,
                Some(x) => {
                    tally.checked += 1;
                    if x < -FUZZ_TOLERANCE {
                        tally.violations += 1;
                    }
                    report.worst_margin = report.worst_margin.min(x);
                }
            }
        }
    }
    report.violations =
        report.pollution.violations + report.inclusion.violations + report.restriction.violations;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_well() -> SquareWellSpec {
        SquareWellSpec::new(1.0, 1.0).unwrap()
    }

    /// `F` straight from the formula with principal `κ`.
    fn direct(spec: &SquareWellSpec, z: Complex64, flip: bool) -> Complex64 {
        let mut kappa = (z * z + spec.v0).sqrt();
        if flip {
            kappa = -kappa;
        }
        let w = 2.0 * kappa * spec.a;
        w.cos() - Complex64::i() * (z * z + kappa * kappa) / (2.0 * z * kappa) * w.sin()
    }

    #[test]
    fn free_case_is_exponential() {
        let spec = SquareWellSpec::new(0.0, 1.0).unwrap();
        for z in [c(1.0, -0.5), c(-2.0, -1.0), c(0.3, 0.2)] {
            let f = well_determinant(&spec, z).unwrap();
            assert!((f - (-2.0 * Complex64::i() * z).exp()).norm() < 1e-13);
        }
        assert!(
            find_zeros(&spec, &Rect::new(0.1, 4.0, -2.0, -0.01).unwrap())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn matches_direct_formula_and_is_even_in_kappa() {
        let spec = SquareWellSpec::new(1.7, 0.8).unwrap();
        for z in [c(1.0, -0.5), c(-2.5, -1.2), c(0.4, 3.0), c(5.0, -0.1)] {
            let f = well_determinant(&spec, z).unwrap();
            let plus = direct(&spec, z, false);
            let minus = direct(&spec, z, true);
            assert!((f - plus).norm() <= 1e-12 * plus.norm().max(1.0));
            assert!((plus - minus).norm() <= 1e-12 * plus.norm().max(1.0));
        }
    }

    #[test]
    fn removable_point_at_kappa_zero() {
        let spec = unit_well();
        let branch = c(0.0, 1.0);
        let at = well_determinant(&spec, branch).unwrap();
        let near = well_determinant(&spec, branch + c(1e-7, 0.0)).unwrap();
        assert!(at.is_finite() && (at - near).norm() < 1e-6);
        // across the series radius
        for r in [0.49, 0.5, 0.51] {
            let z = (c(r * r / 4.0 - 1.0, 0.0)).sqrt();
            let series = well_determinant(&spec, z).unwrap();
            assert!((series - direct(&spec, z, false)).norm() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let spec = SquareWellSpec::new(2.0, 1.3).unwrap();
        for z in [c(1.0, -0.5), c(-0.3, -1.7), c(0.01, 1.41), c(3.0, 0.2)] {
            let (_, df) = well_determinant_with_derivative(&spec, z).unwrap();
            let h = 1e-4;
            let f = |w| well_determinant(&spec, w).unwrap();
            let fd = (f(z + h) - f(z - h) - Complex64::i() * (f(z + c(0.0, h)) - f(z - c(0.0, h))))
                / (4.0 * h);
            assert!(
                (df - fd).norm() < 1e-8 * df.norm().max(1.0),
                "{z}: {df} vs {fd}"
            );
        }
    }

    #[test]
    fn contour_through_a_zero_is_nudged() {
        let spec = unit_well();
        // the left edge passes through the zero at -i; widening would reach
        // the origin, so the box is shrunk and that zero drops out
        let zeros = find_zeros(&spec, &Rect::new(0.0, 3.0, -2.0, -0.005).unwrap()).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] - c(2.356_987_98, -1.909_078_40)).norm() < 1e-7);
        let widened = find_zeros(&spec, &Rect::new(0.0, 3.0, -2.0, -0.05).unwrap()).unwrap();
        assert_eq!(widened.len(), 2);
    }

    #[test]
    fn conjugate_reflection() {
        let spec = unit_well();
        for z in [c(1.3, -0.7), c(0.2, -1.9), c(2.0, 0.5)] {
            let f = well_determinant(&spec, z).unwrap();
            let g = well_determinant(&spec, -z.conj()).unwrap();
            assert!((g - f.conj()).norm() < 1e-13 * f.norm().max(1.0));
        }
    }

    #[test]
    fn zeros_of_standard_box_are_certified() {
        let spec = unit_well();
        let rect = Rect::new(0.1, 4.0, -2.0, -0.01).unwrap();
        let zeros = find_zeros(&spec, &rect).unwrap();
        assert_eq!(zeros.len() as i64, winding_number(&spec, &rect).unwrap());
        assert!(!zeros.is_empty());
        for z in &zeros {
            assert!(well_determinant(&spec, *z).unwrap().norm() <= 1e-10);
        }
        let mirrored = find_zeros(&spec, &Rect::new(-4.0, -0.1, -2.0, -0.01).unwrap()).unwrap();
        assert_eq!(mirrored.len(), zeros.len());
        for z in &zeros {
            assert!(mirrored.iter().any(|w| (*w + z.conj()).norm() < 1e-9));
        }
    }

    #[test]
    fn box_through_origin_is_rejected() {
        let rect = Rect::new(-1.0, 1.0, -1.0, 0.5).unwrap();
        assert_eq!(
            find_zeros(&unit_well(), &rect),
            Err(OracleError::BoxContainsOrigin(rect))
        );
        assert_eq!(
            well_determinant(&unit_well(), c(0.0, 0.0)),
            Err(OracleError::ZeroSpectralParameter)
        );
    }

    #[test]
    fn edge_through_zero_is_retried() {
        let spec = unit_well();
        let zeros = find_zeros(&spec, &Rect::new(0.1, 4.0, -2.0, -0.01).unwrap()).unwrap();
        let z = zeros[0];
        let rect = Rect::new(z.re, z.re + 1.0, z.im - 0.5, z.im + 0.5).unwrap();
        let retried = find_zeros(&spec, &rect).unwrap();
        assert!(retried.iter().any(|w| (w - z).norm() < 1e-9));
    }

    #[test]
    fn trivial_fuzz_instance_holds() {
        let zero = Mat::<Complex64>::zeros(3, 3);
        let m = lemma_checks(&zero, &zero, 2).unwrap();
        assert!(m.pollution.unwrap().abs() <= 1e-15);
        assert!(m.restriction.unwrap().abs() <= 1e-15);
        assert_eq!(m.inclusion, None);
    }

    #[test]
    fn fuzz_is_seeded_and_clean() {
        let a = lemma_fuzz(50, 8, 7).unwrap();
        let b = lemma_fuzz(50, 8, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert!(a.pollution.skipped + a.pollution.checked == 50);
        assert!(a.inclusion.checked > 0);
    }
}
