//! Smallest singular values of `I + K_n(z)` and the threshold test.
//!
//! The default route factors `A = PLU` once and runs Lanczos on
//! `(AᴴA)⁻¹ = A⁻¹A⁻ᴴ`, whose dominant eigenvalue is `σ_min⁻²`. A full SVD is
//! kept as the independent second route and as the fallback.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelMatrix;

/// Below this `σ_min` the resolvent norm is reported as `+∞`.
pub const SIGMA_UNDERFLOW: f64 = 1e-300;

/// Stop once the Ritz residual is below this fraction of the Ritz value.
const LANCZOS_RESIDUAL_TOLERANCE: f64 = 1e-11;
const LANCZOS_MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError {
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty matrix")]
    Empty,
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
    #[error("threshold cutoff must be positive and finite, got {0}")]
    InvalidCutoff(f64),
}

fn validate(a: MatRef<'_, Complex64>) -> Result<(), ResolventError> {
    if a.nrows() != a.ncols() {
        return Err(ResolventError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(ResolventError::Empty);
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(ResolventError::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// All singular values, descending.
pub fn singular_values(a: MatRef<'_, Complex64>) -> Result<Vec<f64>, ResolventError> {
    validate(a)?;
    let mut s = a.singular_values().map_err(|_| ResolventError::SvdFailed)?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// `σ_min` from a full singular value decomposition.
pub fn sigma_min_svd(a: MatRef<'_, Complex64>) -> Result<f64, ResolventError> {
    Ok(*singular_values(a)?.last().expect("nonempty"))
}

/// `‖A‖₂`.
pub fn spectral_norm(a: MatRef<'_, Complex64>) -> Result<f64, ResolventError> {
    Ok(singular_values(a)?[0])
}

/// `σ_min(A)` by LU-preconditioned Lanczos, falling back to the SVD when the
/// iteration does not settle.
pub fn sigma_min(a: MatRef<'_, Complex64>) -> Result<f64, ResolventError> {
    validate(a)?;
    match sigma_min_lanczos(a) {
        Some(s) => Ok(s),
        None => sigma_min_svd(a),
    }
}

/// Dense `PA = LU` factors with hand-written substitutions; per-solve cost
/// is two plain `O(N²)` sweeps with no workspace allocation.
struct LuFactors {
    n: usize,
    /// column-major, strictly lower part of `L` (unit diagonal implied)
    l: Vec<Complex64>,
    /// column-major upper triangle of `U`
    u: Vec<Complex64>,
}

impl LuFactors {
    fn new(a: MatRef<'_, Complex64>) -> Self {
        let n = a.nrows();
        let lu = a.partial_piv_lu();
        let (l_ref, u_ref) = (lu.L(), lu.U());
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        let mut u = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                if i > j {
                    l[j * n + i] = l_ref[(i, j)];
                } else {
                    u[j * n + i] = u_ref[(i, j)];
                }
            }
        }
        Self { n, l, u }
    }

    fn singular(&self) -> bool {
        (0..self.n).any(|k| self.u[k * self.n + k] == Complex64::new(0.0, 0.0))
    }

    /// `w ← A⁻¹ A⁻ᴴ v = (AᴴA)⁻¹ v`; the pivoting cancels since
    /// `AᴴA = Uᴴ Lᴴ L U`.
    fn normal_inverse(&self, v: &[Complex64], w: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        // Uᴴ t = v, then Lᴴ s = t (in place)
        let t = scratch;
        for i in 0..n {
            let col = &self.u[i * n..i * n + i];
            let mut acc = v[i];
            for (j, uji) in col.iter().enumerate() {
                acc -= uji.conj() * t[j];
            }
            t[i] = acc / self.u[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let col = &self.l[i * n..(i + 1) * n];
            let mut acc = t[i];
            for j in i + 1..n {
                acc -= col[j].conj() * t[j];
            }
            t[i] = acc;
        }
        // L U w = s
        w.copy_from_slice(t);
        for j in 0..n {
            let yj = w[j];
            let col = &self.l[j * n..(j + 1) * n];
            for i in j + 1..n {
                w[i] -= col[i] * yj;
            }
        }
        for j in (0..n).rev() {
            let col = &self.u[j * n..(j + 1) * n];
            w[j] /= col[j];
            let yj = w[j];
            for i in 0..j {
                w[i] -= col[i] * yj;
            }
        }
    }
}

fn sigma_min_lanczos(a: MatRef<'_, Complex64>) -> Option<f64> {
    let n = a.nrows();
    let lu = LuFactors::new(a);
    if lu.singular() {
        return Some(0.0);
    }

    let max_iter = n.min(LANCZOS_MAX_ITERATIONS);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_iter + 1);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_iter);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iter);
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];

    // deterministic real start vector
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.618_033_988_749_894_8;
            Complex64::new(1.0 + (t - t.floor()), 0.0)
        })
        .collect();
    let norm = norm_l2(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    basis.push(v);

    let mut previous = 0.0f64;
    for j in 0..max_iter {
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        lu.normal_inverse(&basis[j], &mut w, &mut scratch);

        let a_j = inner(&basis[j], &w).re;
        alpha.push(a_j);
        axpy(&mut w, -Complex64::new(a_j, 0.0), &basis[j]);
        if j > 0 {
            axpy(&mut w, -Complex64::new(beta[j - 1], 0.0), &basis[j - 1]);
        }
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                axpy(&mut w, -c, q);
            }
        }

        let theta = largest_tridiagonal_eigenvalue(&alpha, &beta, previous);
        if !theta.is_finite() || theta <= 0.0 {
            return None;
        }
        let b_j = norm_l2(&w);
        if !b_j.is_finite() {
            return None;
        }
        // exhausted Krylov space: θ is exact
        if b_j <= 1e-14 * theta || j + 1 == n {
            return Some(1.0 / theta.sqrt());
        }
        // the Ritz pair's residual norm bounds |θ - λ| for a Hermitian operator
        if b_j * ritz_last_component(&alpha, &beta, theta) <= LANCZOS_RESIDUAL_TOLERANCE * theta {
            return Some(1.0 / theta.sqrt());
        }
        previous = theta;
        beta.push(b_j);
        w.iter_mut().for_each(|x| *x /= b_j);
        basis.push(w);
    }
    None
}

fn norm_l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], c: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// `|s_m|` for the unit eigenvector `s` of the tridiagonal matrix belonging
/// to its largest eigenvalue `theta`: two inverse-iteration steps with the
/// positive definite `θ'I - T`, `θ'` just above `theta`, factored as `LDLᵀ`.
fn ritz_last_component(alpha: &[f64], beta: &[f64], theta: f64) -> f64 {
    let m = alpha.len();
    let shift = theta * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let mut pivots = Vec::with_capacity(m);
    for k in 0..m {
        let d = shift
            - alpha[k]
            - if k > 0 {
                beta[k - 1] * beta[k - 1] / pivots[k - 1]
            } else {
                0.0
            };
        pivots.push(if d > 0.0 { d } else { f64::MIN_POSITIVE });
    }
    let mut x = vec![1.0f64; m];
    for _ in 0..2 {
        // forward: L y = x with L_{k,k-1} = -β_{k-1}/D_{k-1}
        for k in 1..m {
            x[k] += beta[k - 1] / pivots[k - 1] * x[k - 1];
        }
        for k in 0..m {
            x[k] /= pivots[k];
        }
        for k in (0..m - 1).rev() {
            x[k] += beta[k] / pivots[k] * x[k + 1];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return f64::INFINITY;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x[m - 1].abs()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta` (only the first `alpha.len() - 1` used),
/// by Sturm-sequence bisection to relative width `4ε`. `floor` is a guess
/// for a lower bound (the previous Ritz value, by interlacing); it is only
/// used after the Sturm count confirms it.
fn largest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64], floor: f64) -> f64 {
    let m = alpha.len();
    let off = |k: usize| if k < m - 1 { beta[k].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..m {
        let r = off(k) + if k > 0 { off(k - 1) } else { 0.0 };
        lo = lo.min(alpha[k] - r);
        hi = hi.max(alpha[k] + r);
    }
    // number of eigenvalues strictly below x
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0f64;
        for k in 0..m {
            let b2 = if k > 0 { off(k - 1) * off(k - 1) } else { 0.0 };
            q = alpha[k] - x - if k > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let guess = floor * (1.0 - 1e-12);
    if guess > lo && guess < hi && count_below(guess) < m {
        lo = guess;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
        if count_below(mid) >= m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `‖A⁻¹‖₂ = 1/σ_min(A)`, `+∞` once `σ_min` underflows [`SIGMA_UNDERFLOW`].
pub fn resolvent_norm(a: MatRef<'_, Complex64>) -> Result<f64, ResolventError> {
    let s = sigma_min(a)?;
    Ok(if s < SIGMA_UNDERFLOW {
        f64::INFINITY
    } else {
        1.0 / s
    })
}

/// `I + K`.
pub fn identity_plus(k: MatRef<'_, Complex64>) -> Mat<Complex64> {
    let mut m = k.to_owned();
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    m
}

/// Cutoff schedule: the fixed practical `C`, or the asymptotic rule
/// `a_n = n^{-rate}`, `C_n = 1/(2√a_n)`, lattice spacing `e^{-1/a_n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdRule {
    Practical { cutoff: f64 },
    Theoretical { rate_exponent: f64 },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Practical { cutoff: 200.0 }
    }
}

impl ThresholdRule {
    pub fn practical(cutoff: f64) -> Result<Self, ResolventError> {
        if cutoff.is_finite() && cutoff > 0.0 {
            Ok(ThresholdRule::Practical { cutoff })
        } else {
            Err(ResolventError::InvalidCutoff(cutoff))
        }
    }

    /// Theoretical schedule with the dimension-matched rate `a_n = n^{-1/d}`.
    pub fn theoretical(d: usize) -> Self {
        ThresholdRule::Theoretical {
            rate_exponent: 1.0 / d as f64,
        }
    }

    /// `a_n`; `None` in practical mode.
    pub fn rate(&self, n: usize) -> Option<f64> {
        match *self {
            ThresholdRule::Practical { .. } => None,
            ThresholdRule::Theoretical { rate_exponent } => Some((n as f64).powf(-rate_exponent)),
        }
    }

    pub fn cutoff(&self, n: usize) -> f64 {
        match *self {
            ThresholdRule::Practical { cutoff } => cutoff,
            ThresholdRule::Theoretical { .. } => {
                1.0 / (2.0 * self.rate(n).expect("theoretical").sqrt())
            }
        }
    }

    /// `e^{-1/a_n}` in theoretical mode.
    pub fn lattice_spacing(&self, n: usize) -> Option<f64> {
        self.rate(n).map(|a| (-1.0 / a).exp())
    }
}

/// `(σ_min(I + K_n) ≤ 1/C, σ_min(I + K_n))`.
pub fn threshold_test(
    k: &KernelMatrix,
    rule: &ThresholdRule,
) -> Result<(bool, f64), ResolventError> {
    let sigma = sigma_min(identity_plus(k.entries().as_ref()).as_ref())?;
    Ok((flag_for(sigma, rule.cutoff(k.grid().n())), sigma))
}

/// Flag rule shared by all scans; ties flag.
pub fn flag_for(sigma: f64, cutoff: f64) -> bool {
    sigma <= 1.0 / cutoff
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: &[&[f64]]) -> Mat<Complex64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn small_examples() {
        for n in [1, 2, 7, 40] {
            let id = Mat::<Complex64>::identity(n, n);
            assert!((sigma_min(id.as_ref()).unwrap() - 1.0).abs() < 1e-15);
            assert!((resolvent_norm(id.as_ref()).unwrap() - 1.0).abs() < 1e-15);
        }
        let d = real(&[&[2.0, 0.0], &[0.0, 0.5]]);
        assert!((sigma_min(d.as_ref()).unwrap() - 0.5).abs() < 1e-15);
        let j = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((sigma_min(j.as_ref()).unwrap() - golden).abs() < 1e-14);
        assert!((resolvent_norm(j.as_ref()).unwrap() - (5f64.sqrt() + 1.0) / 2.0).abs() < 1e-14);
        let zero = Mat::<Complex64>::zeros(3, 3);
        assert_eq!(sigma_min(zero.as_ref()).unwrap(), 0.0);
        assert_eq!(resolvent_norm(zero.as_ref()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn error_paths() {
        let rect = Mat::<Complex64>::zeros(2, 3);
        assert!(matches!(
            sigma_min(rect.as_ref()),
            Err(ResolventError::NotSquare { .. })
        ));
        let mut bad = Mat::<Complex64>::identity(2, 2);
        bad[(1, 0)] = c(f64::NAN, 0.0);
        assert_eq!(
            sigma_min(bad.as_ref()),
            Err(ResolventError::NonFiniteEntry { row: 1, col: 0 })
        );
        assert!(ThresholdRule::practical(0.0).is_err());
    }

    #[test]
    fn lanczos_agrees_with_svd_on_clustered_spectrum() {
        // nearly repeated small singular values converge slowly
        let n = 60;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c(1.0 + 1e-6 * i as f64, 0.0)
            } else {
                c(0.0, 1e-3 / (1.0 + (i as f64 - j as f64).abs()))
            }
        });
        let s1 = sigma_min(a.as_ref()).unwrap();
        let s2 = sigma_min_svd(a.as_ref()).unwrap();
        assert!((s1 - s2).abs() <= 1e-10 * s2, "{s1} {s2}");
    }

    #[test]
    fn threshold_rules() {
        let t = ThresholdRule::theoretical(1);
        assert!((t.rate(4).unwrap() - 0.25).abs() < 1e-15);
        assert!((t.cutoff(4) - 1.0).abs() < 1e-15);
        assert!((t.lattice_spacing(3).unwrap() - (-3.0f64).exp()).abs() < 1e-18);
        let p = ThresholdRule::default();
        assert_eq!(p.cutoff(17), 200.0);
        assert_eq!(p.lattice_spacing(17), None);
        assert!(flag_for(0.005, 200.0));
        assert!(!flag_for(0.0051, 200.0));
    }
}
