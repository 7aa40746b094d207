//! Discretization of `K(z) = q(-Δ-z²)⁻¹χ` on the cell grid of `Q_M`.
//!
//! Cells are `S_{n,i} = [0,1/n)^d + i` with corners `i` on `-M/2 + (1/n)ℤ^d`;
//! the node-sampled matrix is `(K_n)_{ij} = n^{-d} q(i) G(|i-j|, z)`.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::greens::{green_eval, Dimension, GreensError, SheetPoint};
use crate::potential::{Potential, SupportBox};

/// Default Gauss–Legendre order per axis for the cell-averaged matrix.
pub const DEFAULT_QUAD_ORDER: usize = 16;

const ALIGNMENT_TOLERANCE: f64 = 1e-9;
const PARALLEL_ASSEMBLY_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("spectral parameter z = 0 is not allowed")]
    ZeroSpectralParameter,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("resolution n = {n} does not tile Q_M with M = {edge}: n·M must be an integer")]
    UnalignedResolution { n: usize, edge: f64 },
    #[error(transparent)]
    Greens(#[from] GreensError),
}

/// Cells per unit length `n` and the resulting node set on `Q_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationGrid {
    n: usize,
    support: SupportBox,
    per_axis: usize,
    /// integer cell indices along each axis, `d` per node
    indices: Vec<usize>,
}

/// Smallest `n' ≥ n` with `n'·M` an integer, searching up to `limit`.
pub fn aligned_resolution(n: usize, edge: f64, limit: usize) -> Option<usize> {
    (n.max(1)..=limit).find(|&k| cells_per_axis(k, edge).is_some())
}

fn cells_per_axis(n: usize, edge: f64) -> Option<usize> {
    let cells = n as f64 * edge;
    let rounded = cells.round();
    if rounded >= 1.0 && (cells - rounded).abs() <= ALIGNMENT_TOLERANCE * cells.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

/// Builds the lexicographically ordered node set (first axis slowest).
pub fn build_grid(support: SupportBox, n: usize) -> Result<DiscretizationGrid, KernelError> {
    let per_axis = if n == 0 {
        None
    } else {
        cells_per_axis(n, support.edge())
    }
    .ok_or(KernelError::UnalignedResolution {
        n,
        edge: support.edge(),
    })?;
    let d = support.dim().get();
    let count = per_axis.pow(d as u32);
    let mut indices = Vec::with_capacity(count * d);
    for flat in 0..count {
        let mut rest = flat;
        let mut node = vec![0usize; d];
        for k in (0..d).rev() {
            node[k] = rest % per_axis;
            rest /= per_axis;
        }
        indices.extend_from_slice(&node);
    }
    Ok(DiscretizationGrid {
        n,
        support,
        per_axis,
        indices,
    })
}

impl DiscretizationGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> SupportBox {
        self.support
    }

    pub fn dim(&self) -> Dimension {
        self.support.dim()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.dim().get()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[allow(clippy::should_implement_trait)]
    pub fn index(&self, node: usize) -> &[usize] {
        let d = self.dim().get();
        &self.indices[node * d..(node + 1) * d]
    }

    fn coordinate(&self, k: usize) -> f64 {
        -self.support.half_edge() + k as f64 / self.n as f64
    }

    /// Lower corner of cell `node`.
    pub fn node(&self, node: usize) -> Vec<f64> {
        self.index(node)
            .iter()
            .map(|&k| self.coordinate(k))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn cell_midpoint(&self, node: usize) -> Vec<f64> {
        let h = 0.5 / self.n as f64;
        self.index(node)
            .iter()
            .map(|&k| self.coordinate(k) + h)
            .collect()
    }

    fn squared_offset(&self, a: usize, b: usize) -> usize {
        self.index(a)
            .iter()
            .zip(self.index(b))
            .map(|(&x, &y)| {
                let t = x.abs_diff(y);
                t * t
            })
            .sum()
    }
}

/// `G(r, z)`; for odd `d` and `Re z < 0` taken as `conj G(r, -z̄)` so that
/// reflected spectral parameters produce exactly conjugated values.
fn green_canonical(dim: Dimension, r: f64, z: SheetPoint) -> Result<Complex64, GreensError> {
    if dim.is_odd() && z.value.re < 0.0 {
        let mirrored = SheetPoint::principal(-z.value.conj());
        Ok(green_eval(dim, r, mirrored)?.conj())
    } else {
        green_eval(dim, r, z)
    }
}

/// Dense `K_n(z)` together with the grid and spectral parameter it came from.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: DiscretizationGrid,
    z: SheetPoint,
    entries: Mat<Complex64>,
}

impl KernelMatrix {
    pub fn grid(&self) -> &DiscretizationGrid {
        &self.grid
    }

    pub fn z(&self) -> SheetPoint {
        self.z
    }

    pub fn entries(&self) -> &Mat<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<Complex64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Reusable assembler: potential samples and the offset table are computed
/// once per grid, `G` once per distinct node distance per `z`.
#[derive(Debug, Clone)]
pub struct KernelAssembler {
    grid: DiscretizationGrid,
    /// `n^{-d} q(i)` per node
    row_scale: Vec<Complex64>,
    /// squared integer distances that occur between nodes
    offsets: Vec<usize>,
    offset_slot: Vec<usize>,
}

impl KernelAssembler {
    pub fn new(potential: &Potential, grid: &DiscretizationGrid) -> Result<Self, KernelError> {
        if potential.support() != grid.support() {
            return Err(KernelError::GridMismatch(format!(
                "potential support {:?} differs from grid support {:?}",
                potential.support(),
                grid.support()
            )));
        }
        let d = grid.dim().get();
        let weight = (grid.n as f64).powi(d as i32).recip();
        let row_scale = (0..grid.len())
            .map(|i| weight * potential.eval(&grid.node(i)))
            .collect();

        // squared distances Σ Δk² with Δk ∈ 0..per_axis
        let span = grid.per_axis - 1;
        let max_sq = d * span * span;
        let mut present = vec![false; max_sq + 1];
        let squares: Vec<usize> = (0..=span).map(|t| t * t).collect();
        match d {
            1 => squares.iter().for_each(|&a| present[a] = true),
            2 => {
                for &a in &squares {
                    for &b in &squares {
                        present[a + b] = true;
                    }
                }
            }
            _ => {
                for &a in &squares {
                    for &b in &squares {
                        for &c in &squares {
                            present[a + b + c] = true;
                        }
                    }
                }
            }
        }
        let offsets: Vec<usize> = (0..=max_sq).filter(|&s| present[s]).collect();
        let mut offset_slot = vec![usize::MAX; max_sq + 1];
        for (slot, &s) in offsets.iter().enumerate() {
            offset_slot[s] = slot;
        }
        Ok(Self {
            grid: grid.clone(),
            row_scale,
            offsets,
            offset_slot,
        })
    }

    pub fn grid(&self) -> &DiscretizationGrid {
        &self.grid
    }

    /// True when `q` vanishes at every node, so `K_n ≡ 0`.
    pub fn is_trivial(&self) -> bool {
        self.row_scale
            .iter()
            .all(|q| *q == Complex64::new(0.0, 0.0))
    }

    fn green_table(&self, z: SheetPoint) -> Result<Vec<Complex64>, KernelError> {
        if z.value == Complex64::new(0.0, 0.0) {
            return Err(KernelError::ZeroSpectralParameter);
        }
        let dim = self.grid.dim();
        let h = self.grid.cell_width();
        self.offsets
            .iter()
            .map(|&s| {
                if s == 0 {
                    // zero diagonal for d ≥ 2; finite G(0, z) for d = 1
                    if dim == Dimension::One {
                        Ok(green_canonical(dim, 0.0, z)?)
                    } else {
                        Ok(Complex64::new(0.0, 0.0))
                    }
                } else {
                    Ok(green_canonical(dim, h * (s as f64).sqrt(), z)?)
                }
            })
            .collect()
    }

    pub fn assemble(&self, z: SheetPoint) -> Result<KernelMatrix, KernelError> {
        let table = self.green_table(z)?;
        let n = self.grid.len();
        let entry = |i: usize, j: usize| {
            let slot = self.offset_slot[self.grid.squared_offset(i, j)];
            self.row_scale[i] * table[slot]
        };
        let entries = if n >= PARALLEL_ASSEMBLY_THRESHOLD {
            let columns: Vec<Vec<Complex64>> = (0..n)
                .into_par_iter()
                .map(|j| (0..n).map(|i| entry(i, j)).collect())
                .collect();
            Mat::from_fn(n, n, |i, j| columns[j][i])
        } else {
            Mat::from_fn(n, n, entry)
        };
        check_finite(&entries)?;
        Ok(KernelMatrix {
            grid: self.grid.clone(),
            z,
            entries,
        })
    }
}

fn check_finite(m: &Mat<Complex64>) -> Result<(), KernelError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(KernelError::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// `(K_n)_{ij} = n^{-d} q(i) G(|i-j|, z)`, zero diagonal for `d ≥ 2`.
pub fn build_kernel_matrix(
    potential: &Potential,
    grid: &DiscretizationGrid,
    z: SheetPoint,
) -> Result<KernelMatrix, KernelError> {
    KernelAssembler::new(potential, grid)?.assemble(z)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = order as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule mapped to `[a, b]`.
fn mapped_rule<'a>(
    nodes: &'a [f64],
    weights: &'a [f64],
    a: f64,
    b: f64,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(move |(&x, &w)| (mid + half * x, half * w))
}

/// `n^{-d} ⟨K⟩_{ij}`, the matrix of `P_n K P_n` on the cell basis, with the
/// cell–cell means computed by tensor Gauss–Legendre quadrature. The `d = 1`
/// diagonal block is split at `x = y` where `G` has its kink; for `d ≥ 2` the
/// singular diagonal block is set to zero like the node-sampled matrix.
pub fn build_averaged_matrix(
    potential: &Potential,
    grid: &DiscretizationGrid,
    z: SheetPoint,
    quad_order: usize,
) -> Result<Mat<Complex64>, KernelError> {
    if z.value == Complex64::new(0.0, 0.0) {
        return Err(KernelError::ZeroSpectralParameter);
    }
    if quad_order == 0 {
        return Err(KernelError::GridMismatch(
            "quadrature order must be positive".into(),
        ));
    }
    if potential.support() != grid.support() {
        return Err(KernelError::GridMismatch(
            "potential and grid supports differ".into(),
        ));
    }
    let d = grid.dim().get();
    let dim = grid.dim();
    let n = grid.len();
    let hcell = grid.cell_width();
    let (gx, gw) = gauss_legendre(quad_order);

    // quadrature points and weights inside every cell; weights sum to 1 per cell
    let cell_points: Vec<Vec<(Vec<f64>, f64)>> = (0..n)
        .map(|c| {
            let lower = grid.node(c);
            let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
            for &lo in lower.iter().take(d) {
                let mut next = Vec::with_capacity(pts.len() * quad_order);
                for (p, w) in &pts {
                    for (x, wx) in mapped_rule(&gx, &gw, lo, lo + hcell) {
                        let mut q = p.clone();
                        q.push(x);
                        next.push((q, w * wx / hcell));
                    }
                }
                pts = next;
            }
            pts
        })
        .collect();
    let q_at: Vec<Vec<Complex64>> = cell_points
        .iter()
        .map(|pts| pts.iter().map(|(x, _)| potential.eval(x)).collect())
        .collect();

    // n^{-d} · mean over S_i × S_j of q(x) G(x - y)
    let scale = hcell.powi(d as i32);
    let distance = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let columns: Result<Vec<Vec<Complex64>>, KernelError> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for (i, slot) in col.iter_mut().enumerate() {
                if q_at[i].iter().all(|q| *q == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                if i == j {
                    if dim != Dimension::One {
                        continue;
                    }
                    // split the inner integral at the kink y = x
                    let lo = grid.node(i)[0];
                    let hi = lo + hcell;
                    for ((x, wx), qx) in cell_points[i].iter().zip(&q_at[i]) {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (a, b) in [(lo, x[0]), (x[0], hi)] {
                            for (y, wy) in mapped_rule(&gx, &gw, a, b) {
                                inner += wy * green_canonical(dim, (x[0] - y).abs(), z)?;
                            }
                        }
                        acc += *wx * qx * inner / hcell;
                    }
                } else {
                    for ((x, wx), qx) in cell_points[i].iter().zip(&q_at[i]) {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (y, wy) in &cell_points[j] {
                            inner += *wy * green_canonical(dim, distance(x, y), z)?;
                        }
                        acc += *wx * qx * inner;
                    }
                }
                *slot = scale * acc;
            }
            Ok(col)
        })
        .collect();
    let columns = columns?;
    let m = Mat::from_fn(n, n, |i, j| columns[j][i]);
    check_finite(&m)?;
    Ok(m)
}

/// Cell means of `f` on `target`, from values of `f` at the cell midpoints
/// of a refining `fine` grid (`P_n f` in the cell basis).
pub fn project_piecewise_constant(
    fine_samples: &[Complex64],
    fine: &DiscretizationGrid,
    target: &DiscretizationGrid,
) -> Result<Vec<Complex64>, KernelError> {
    if fine.support() != target.support() {
        return Err(KernelError::GridMismatch(
            "fine and target grids have different supports".into(),
        ));
    }
    if fine_samples.len() != fine.len() {
        return Err(KernelError::GridMismatch(format!(
            "{} samples for a fine grid of {} cells",
            fine_samples.len(),
            fine.len()
        )));
    }
    if !fine
        .cells_per_axis()
        .is_multiple_of(target.cells_per_axis())
    {
        return Err(KernelError::GridMismatch(format!(
            "fine grid ({} cells per axis) does not refine target ({} cells per axis)",
            fine.cells_per_axis(),
            target.cells_per_axis()
        )));
    }
    let ratio = fine.cells_per_axis() / target.cells_per_axis();
    let d = target.dim().get();
    let per_coarse = ratio.pow(d as u32) as f64;
    let per_axis = target.cells_per_axis();
    let mut sums = vec![Complex64::new(0.0, 0.0); target.len()];
    for (cell, value) in fine_samples.iter().enumerate() {
        let coarse = fine
            .index(cell)
            .iter()
            .fold(0usize, |acc, &k| acc * per_axis + k / ratio);
        sums[coarse] += value;
    }
    Ok(sums.into_iter().map(|s| s / per_coarse).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(d: usize, edge: f64) -> SupportBox {
        SupportBox::new(edge, Dimension::new(d).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_enumeration() {
        let g = build_grid(support(1, 2.0), 2).unwrap();
        assert_eq!(
            g.nodes(),
            vec![vec![-1.0], vec![-0.5], vec![0.0], vec![0.5]]
        );
        let g = build_grid(support(1, 2.0), 1).unwrap();
        assert_eq!(g.nodes(), vec![vec![-1.0], vec![0.0]]);
        let g = build_grid(support(2, 2.0), 1).unwrap();
        assert_eq!(
            g.nodes(),
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![0.0, 0.0]
            ]
        );
        assert!(build_grid(support(1, 1.5), 1).is_err());
        assert_eq!(aligned_resolution(1, 1.5, 100), Some(2));
        assert_eq!(aligned_resolution(3, 2.5, 100), Some(4));
    }

    #[test]
    fn two_by_two_hand_matrix() {
        let s = support(1, 2.0);
        let p = Potential::square_well(s, c(1.0, 0.0), 1.0).unwrap();
        let g = build_grid(s, 1).unwrap();
        let k = build_kernel_matrix(&p, &g, SheetPoint::principal(c(0.0, 1.0))).unwrap();
        let e = (-1.0f64).exp();
        let expected = [[-0.5, -e / 2.0], [-e / 2.0, -0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((k.entries()[(i, j)] - c(expected[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn d1_diagonal_and_zero_potential() {
        let s = support(1, 2.0);
        let z = SheetPoint::principal(c(1.3, -0.4));
        let q = c(0.7, 0.2);
        let p = Potential::custom(s, "const", Some(q.norm()), move |_| q);
        let g = build_grid(s, 5).unwrap();
        let k = build_kernel_matrix(&p, &g, z).unwrap();
        let expected = q * c(0.0, 1.0) / (2.0 * z.value * 5.0);
        for i in 0..g.len() {
            assert!((k.entries()[(i, i)] - expected).norm() < 1e-15);
        }
        let zero = build_kernel_matrix(&Potential::zero(s), &g, z).unwrap();
        assert!(zero.entries().norm_l2() == 0.0);
    }

    #[test]
    fn d2_diagonal_is_zero() {
        let s = support(2, 2.0);
        let p = Potential::square_well(s, c(1.0, 0.0), 1.0).unwrap();
        let g = build_grid(s, 2).unwrap();
        let k = build_kernel_matrix(&p, &g, SheetPoint::principal(c(1.0, -0.2))).unwrap();
        for i in 0..g.len() {
            assert_eq!(k.entries()[(i, i)], c(0.0, 0.0));
        }
        assert!(k.entries()[(0, 1)].norm() > 0.0);
    }

    #[test]
    fn zero_spectral_parameter_rejected() {
        let s = support(1, 2.0);
        let g = build_grid(s, 2).unwrap();
        let err = build_kernel_matrix(&Potential::zero(s), &g, SheetPoint::principal(c(0.0, 0.0)));
        assert_eq!(err.unwrap_err(), KernelError::ZeroSpectralParameter);
    }

    #[test]
    fn reflected_parameter_gives_conjugate_matrix() {
        let s = support(1, 2.0);
        let p = Potential::gaussian(s, c(3.0, 0.0), 0.5, 1.0).unwrap();
        let g = build_grid(s, 10).unwrap();
        let z = SheetPoint::principal(c(1.7, -0.3));
        let a = build_kernel_matrix(&p, &g, z).unwrap();
        let b = build_kernel_matrix(&p, &g, z.reflected()).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_eq!(a.entries()[(i, j)].conj(), b.entries()[(i, j)]);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((int - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn averaged_matrix_quadrature_self_consistent() {
        let s = support(1, 2.0);
        let p = Potential::square_well(s, c(1.0, 0.0), 1.0).unwrap();
        let g = build_grid(s, 1).unwrap();
        let z = SheetPoint::principal(c(0.0, 1.0));
        let a = build_averaged_matrix(&p, &g, z, 16).unwrap();
        let b = build_averaged_matrix(&p, &g, z, 32).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-10);
            }
        }
        // closed form: ∫₀¹∫₀¹ -e^{-|x-y|}/2 dy dx = -e^{-1}
        assert!((a[(0, 0)] - c(-(-1.0f64).exp(), 0.0)).norm() < 1e-12);
        let zero = build_averaged_matrix(&Potential::zero(s), &g, z, 16).unwrap();
        assert_eq!(zero.norm_l2(), 0.0);
    }

    #[test]
    fn averaged_matches_sampled_for_distant_cells() {
        let s = support(1, 8.0);
        let p = Potential::custom(s, "const", Some(1.0), |_| c(1.0, 0.0));
        let z = SheetPoint::principal(c(1.0, -0.1));
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let g = build_grid(s, n).unwrap();
            let k = build_kernel_matrix(&p, &g, z).unwrap();
            let a = build_averaged_matrix(&p, &g, z, 8).unwrap();
            let (i, j) = (0, g.len() - 1);
            // entrywise |K - ⟨K⟩| relative to the n^{-1} scale
            errs.push((k.entries()[(i, j)] - a[(i, j)]).norm() * n as f64);
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn projection_examples() {
        let s = support(1, 1.0);
        let coarse = build_grid(s, 1).unwrap();
        let fine = build_grid(s, 8).unwrap();
        let constant = vec![c(2.5, -1.0); 8];
        assert_eq!(
            project_piecewise_constant(&constant, &fine, &coarse).unwrap(),
            vec![c(2.5, -1.0)]
        );
        let linear: Vec<Complex64> = (0..8)
            .map(|k| c(fine.cell_midpoint(k)[0] + 0.5, 0.0))
            .collect();
        let mean = project_piecewise_constant(&linear, &fine, &coarse).unwrap();
        assert!((mean[0] - c(0.5, 0.0)).norm() < 1e-15);
        let indicator: Vec<Complex64> = (0..8)
            .map(|k| c(if k < 4 { 1.0 } else { 0.0 }, 0.0))
            .collect();
        assert_eq!(
            project_piecewise_constant(&indicator, &fine, &coarse).unwrap(),
            vec![c(0.5, 0.0)]
        );
        let odd = build_grid(s, 3).unwrap();
        let two = build_grid(s, 2).unwrap();
        assert!(matches!(
            project_piecewise_constant(&[c(0.0, 0.0); 3], &odd, &two),
            Err(KernelError::GridMismatch(_))
        ));
        assert!(project_piecewise_constant(&[c(0.0, 0.0); 2], &fine, &coarse).is_err());
    }

    #[test]
    fn projection_two_dimensional() {
        let s = support(2, 2.0);
        let coarse = build_grid(s, 1).unwrap();
        let fine = build_grid(s, 2).unwrap();
        let samples: Vec<Complex64> = (0..fine.len()).map(|k| c(k as f64, 0.0)).collect();
        let means = project_piecewise_constant(&samples, &fine, &coarse).unwrap();
        // fine cells (lexicographic, 4 per axis) grouped in 2×2 blocks
        assert_eq!(means[0], c((0.0 + 1.0 + 4.0 + 5.0) / 4.0, 0.0));
        assert_eq!(means[3], c((10.0 + 11.0 + 14.0 + 15.0) / 4.0, 0.0));
    }
}
