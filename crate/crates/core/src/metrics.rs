//! Attouch–Wets distance between finite point sets of `ℂ`:
//! `d_AW(A,B) = Σ_{i≥1} 2^{-i} min{1, sup_{|x|<i} |dist(x,A) - dist(x,B)|}`.
//!
//! Each inner supremum is bracketed by branch and bound over squares,
//! using that `x ↦ dist(x,A) - dist(x,B)` is 2-Lipschitz, so the reported
//! value is within `2δ` of the truncated sum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_I_MAX: usize = 30;
pub const DEFAULT_DELTA: f64 = 1e-3;

/// Finite set of points, duplicates removed, sorted by real part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    points: Vec<Complex64>,
}

impl PointSet {
    pub fn new(mut points: Vec<Complex64>) -> Self {
        points.retain(|p| p.is_finite());
        points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        points.dedup();
        Self { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `dist(x, A)`; `+∞` for the empty set.
    pub fn distance(&self, x: Complex64) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let start = self.points.partition_point(|p| p.re < x.re);
        let mut best = f64::INFINITY;
        for p in &self.points[start..] {
            if p.re - x.re >= best {
                break;
            }
            best = best.min((p - x).norm());
        }
        for p in self.points[..start].iter().rev() {
            if x.re - p.re >= best {
                break;
            }
            best = best.min((p - x).norm());
        }
        best
    }

    /// Points within `radius` of `x`, in storage order.
    fn within(&self, x: Complex64, radius: f64) -> impl Iterator<Item = &Complex64> {
        let lo = self.points.partition_point(|p| p.re < x.re - radius);
        self.points[lo..]
            .iter()
            .take_while(move |p| p.re <= x.re + radius)
            .filter(move |p| (*p - x).norm() <= radius)
    }
}

impl FromIterator<Complex64> for PointSet {
    fn from_iter<T: IntoIterator<Item = Complex64>>(iter: T) -> Self {
        PointSet::new(iter.into_iter().collect())
    }
}

/// Truncated `d_AW` with its error budget: the exact distance lies in
/// `[value - grid_error, value + grid_error + truncation_error]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwDistance {
    pub value: f64,
    pub truncation_error: f64,
    pub grid_error: f64,
}

/// Hausdorff distance; `0` for two empty sets and `+∞` if exactly one is empty.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => {
            let ab = a.points.iter().map(|&p| b.distance(p)).fold(0.0, f64::max);
            let ba = b.points.iter().map(|&p| a.distance(p)).fold(0.0, f64::max);
            ab.max(ba)
        }
    }
}

pub fn attouch_wets(a: &PointSet, b: &PointSet, i_max: usize, delta: f64) -> AwDistance {
    assert!(i_max >= 1, "i_max must be at least 1");
    assert!(delta > 0.0, "grid spacing must be positive");
    let truncation_error = 0.5f64.powi(i_max as i32);
    if a == b {
        return AwDistance {
            value: 0.0,
            truncation_error,
            grid_error: 0.0,
        };
    }
    let terms: Vec<f64> = if a.is_empty() || b.is_empty() {
        vec![1.0; i_max]
    } else {
        let cap = hausdorff(a, b).min(1.0);
        // candidate evaluation points shared by every radius, ordered so the
        // computation is symmetric in (A, B)
        let mut candidates: Vec<Complex64> = a.points.iter().chain(&b.points).copied().collect();
        candidates.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        candidates.dedup();
        candidates.push(Complex64::new(0.0, 0.0));
        (1..=i_max)
            .into_par_iter()
            .map(|i| disc_supremum(a, b, i as f64, delta, cap, &candidates))
            .collect()
    };
    let value = terms
        .iter()
        .enumerate()
        .map(|(k, t)| 0.5f64.powi(k as i32 + 1) * t.min(1.0))
        .sum();
    AwDistance {
        value,
        truncation_error,
        grid_error: 2.0 * delta,
    }
}

#[derive(PartialEq)]
struct Cell {
    upper: f64,
    center: Complex64,
    half_side: f64,
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then(self.center.re.total_cmp(&other.center.re))
            .then(self.center.im.total_cmp(&other.center.im))
    }
}

/// Lower bound on `min{1, sup_{|x|≤R} |dist(x,A) - dist(x,B)|}` that is within
/// `2δ` of the true value.
fn disc_supremum(
    a: &PointSet,
    b: &PointSet,
    radius: f64,
    delta: f64,
    cap: f64,
    candidates: &[Complex64],
) -> f64 {
    let gap = |x: Complex64| (a.distance(x) - b.distance(x)).abs();
    let mut lower = 0.0f64;
    for &c in candidates {
        if c.norm() <= radius {
            lower = lower.max(gap(c));
        }
    }
    if lower >= 1.0 || cap <= lower + 2.0 * delta {
        return lower.min(1.0);
    }

    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Cell>, lower: &mut f64, center: Complex64, half_side: f64| {
        let reach = half_side * std::f64::consts::SQRT_2;
        let dist = center.norm();
        if dist - reach > radius {
            return;
        }
        // every nearest point to the cell lies within dist(c,·) + 2·reach of
        // the centre; identical candidate lists mean the gap vanishes on the cell
        let da = a.distance(center);
        let db = b.distance(center);
        if da == db
            && a.within(center, da + 2.0 * reach)
                .eq(b.within(center, db + 2.0 * reach))
        {
            return;
        }
        let upper = if dist <= radius {
            let g = gap(center);
            *lower = lower.max(g);
            g + 2.0 * reach
        } else {
            // nearest disc point is within `reach` of the centre
            let p = center * (radius / dist);
            let g = gap(p);
            *lower = lower.max(g);
            g + 4.0 * reach
        };
        heap.push(Cell {
            upper: upper.min(cap),
            center,
            half_side,
        });
    };
    push(&mut heap, &mut lower, Complex64::new(0.0, 0.0), radius);
    while let Some(cell) = heap.pop() {
        if lower >= 1.0 || cell.upper <= lower + 2.0 * delta {
            break;
        }
        let h = 0.5 * cell.half_side;
        for (dx, dy) in [(-h, -h), (h, -h), (-h, h), (h, h)] {
            push(
                &mut heap,
                &mut lower,
                cell.center + Complex64::new(dx, dy),
                h,
            );
        }
    }
    lower.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(f64, f64)]) -> PointSet {
        points.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
    }

    #[test]
    fn identity_is_exact_zero() {
        let a = set(&[(0.0, 0.0), (1.0, -0.5)]);
        assert_eq!(attouch_wets(&a, &a.clone(), 30, 1e-3).value, 0.0);
        assert_eq!(
            attouch_wets(&PointSet::empty(), &PointSet::empty(), 30, 1e-3).value,
            0.0
        );
    }

    #[test]
    fn single_points_at_unit_distance() {
        let d = attouch_wets(&set(&[(0.0, 0.0)]), &set(&[(1.0, 0.0)]), 30, 1e-3);
        assert!((d.value - 1.0).abs() <= 2e-3 + 0.5f64.powi(30));
    }

    #[test]
    fn far_outlier_is_clamped() {
        let d = attouch_wets(
            &set(&[(0.0, 0.0)]),
            &set(&[(0.0, 0.0), (1e10, 0.0)]),
            30,
            1e-3,
        );
        assert!(d.value < 1.0);
        assert_eq!(
            hausdorff(&set(&[(0.0, 0.0)]), &set(&[(0.0, 0.0), (1e10, 0.0)])),
            1e10
        );
    }

    #[test]
    fn empty_versus_nonempty() {
        let d = attouch_wets(&PointSet::empty(), &set(&[(0.3, 0.1)]), 10, 1e-3);
        assert_eq!(d.value, 1.0 - 0.5f64.powi(10));
    }

    #[test]
    fn brute_force_grid_agrees() {
        let a = set(&[(0.2, -0.3), (1.1, 0.4), (-0.8, -1.2)]);
        let b = set(&[(0.25, -0.35), (1.0, 0.5), (2.5, 0.0)]);
        let delta = 1e-3;
        let d = attouch_wets(&a, &b, 4, delta);
        let mut brute = 0.0;
        for i in 1..=4 {
            let r = i as f64;
            let step = 0.01;
            let k = (r / step) as i64;
            let mut sup = 0.0f64;
            for x in -k..=k {
                for y in -k..=k {
                    let p = Complex64::new(x as f64 * step, y as f64 * step);
                    if p.norm() <= r {
                        sup = sup.max((a.distance(p) - b.distance(p)).abs());
                    }
                }
            }
            brute += 0.5f64.powi(i) * sup.min(1.0);
        }
        // brute grid error: 2 · step/√2 per term
        assert!(
            (d.value - brute).abs() <= 2.0 * delta + 0.015,
            "{} vs {brute}",
            d.value
        );
        assert!(d.value >= brute - 1e-12);
    }

    #[test]
    fn nearest_neighbour_search() {
        let a = set(&[(0.0, 5.0), (0.1, 0.0), (3.0, 0.0), (-2.0, 0.1)]);
        let x = Complex64::new(0.05, 0.0);
        assert!((a.distance(x) - 0.05).abs() < 1e-15);
        let y = Complex64::new(-1.0, 4.9);
        let brute = a
            .points()
            .iter()
            .map(|p| (p - y).norm())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a.distance(y), brute);
    }
}
