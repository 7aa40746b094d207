//! Spectral-parameter lattices and the tilings of `ℂ` (odd `d`) and of the
//! logarithmic cover (even `d`) that the scans are unioned over.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greens::SheetPoint;

const EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TilingError {
    #[error("lattice in {rect} with spacing {spacing} is empty after excluding |z| < {exclusion_radius}")]
    EmptyLattice {
        rect: Rect,
        spacing: f64,
        exclusion_radius: f64,
    },
    #[error("lattice spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
}

/// Closed axis-aligned rectangle in the `z`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}, {}]x[{}, {}]",
            self.re_min, self.re_max, self.im_min, self.im_max
        )
    }
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, TilingError> {
        let all_finite = [re_min, re_max, im_min, im_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || re_min > re_max || im_min > im_max {
            return Err(TilingError::InvalidRect(format!(
                "[{re_min}, {re_max}]x[{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn area(&self) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min)
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect {
            re_min: self.re_min.min(other.re_min),
            re_max: self.re_max.max(other.re_max),
            im_min: self.im_min.min(other.im_min),
            im_max: self.im_max.max(other.im_max),
        }
    }

    pub fn contains_origin(&self) -> bool {
        self.contains(Complex64::new(0.0, 0.0))
    }
}

/// Unit square `B_j^{(k)}`: spiral index `j` and sheet `k`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub index: usize,
    pub sheet: usize,
    pub rect: Rect,
}

impl Tile {
    /// Sheet of the logarithmic cover in [`SheetPoint`] numbering: tile sheets
    /// `1, 2, 3, 4, 5, …` map to `0, +1, -1, +2, -2, …`.
    pub fn log_sheet(&self) -> i32 {
        tile_sheet_to_log_sheet(self.sheet)
    }
}

pub fn tile_sheet_to_log_sheet(k: usize) -> i32 {
    assert!(k >= 1, "tile sheets are 1-based");
    let m = (k / 2) as i32;
    if k.is_multiple_of(2) {
        m
    } else {
        -m
    }
}

/// Integer lattice coordinates of a point `h·(kr + i·ki)` on a sheet; used to
/// deduplicate points shared by neighbouring tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeKey {
    pub sheet: i32,
    pub kr: i64,
    pub ki: i64,
}

impl LatticeKey {
    pub fn point(&self, spacing: f64) -> SheetPoint {
        SheetPoint::new(
            Complex64::new(self.kr as f64 * spacing, self.ki as f64 * spacing),
            self.sheet,
        )
    }
}

/// `h(ℤ + iℤ) ∩ B` on one sheet, minus the disc `|z| < exclusion_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rect: Rect,
    pub sheet: i32,
    pub spacing: f64,
    pub exclusion_radius: f64,
}

impl LatticeSpec {
    /// Spec with the default exclusion radius of one lattice spacing.
    pub fn new(rect: Rect, sheet: i32, spacing: f64) -> Self {
        Self {
            rect,
            sheet,
            spacing,
            exclusion_radius: spacing,
        }
    }
}

fn index_range(lo: f64, hi: f64, h: f64) -> (i64, i64) {
    (
        (lo / h - EDGE_SLACK).ceil() as i64,
        (hi / h + EDGE_SLACK).floor() as i64,
    )
}

/// Lattice keys in row-major order: `Im` ascending, then `Re` ascending.
pub fn lattice_keys(spec: &LatticeSpec) -> Result<Vec<LatticeKey>, TilingError> {
    let h = spec.spacing;
    if !(h.is_finite() && h > 0.0) {
        return Err(TilingError::InvalidSpacing(h));
    }
    let (r0, r1) = index_range(spec.rect.re_min, spec.rect.re_max, h);
    let (i0, i1) = index_range(spec.rect.im_min, spec.rect.im_max, h);
    let mut keys = Vec::new();
    for ki in i0..=i1 {
        for kr in r0..=r1 {
            let key = LatticeKey {
                sheet: spec.sheet,
                kr,
                ki,
            };
            if key.point(h).value.norm() >= spec.exclusion_radius {
                keys.push(key);
            }
        }
    }
    if keys.is_empty() {
        return Err(TilingError::EmptyLattice {
            rect: spec.rect,
            spacing: h,
            exclusion_radius: spec.exclusion_radius,
        });
    }
    Ok(keys)
}

pub fn lattice_points(spec: &LatticeSpec) -> Result<Vec<SheetPoint>, TilingError> {
    Ok(lattice_keys(spec)?
        .into_iter()
        .map(|k| k.point(spec.spacing))
        .collect())
}

/// Integer cell coordinates of the first `count` spiral squares; cell `(a, b)`
/// is `[a-1/2, a+1/2] × [b-1, b]`. The walk goes down 1, right 1, up 2,
/// left 2, down 3, right 3, … counterclockwise outwards from `(0, 0)`.
pub fn spiral_cells(count: usize) -> Vec<(i64, i64)> {
    let mut cells = Vec::with_capacity(count);
    if count == 0 {
        return cells;
    }
    let (mut a, mut b) = (0i64, 0i64);
    cells.push((a, b));
    let directions = [(0, -1), (1, 0), (0, 1), (-1, 0)];
    let mut leg = 0usize;
    while cells.len() < count {
        let (da, db) = directions[leg % 4];
        let length = leg / 2 + 1;
        for _ in 0..length {
            if cells.len() == count {
                break;
            }
            a += da;
            b += db;
            cells.push((a, b));
        }
        leg += 1;
    }
    cells
}

fn cell_rect(a: i64, b: i64) -> Rect {
    Rect {
        re_min: a as f64 - 0.5,
        re_max: a as f64 + 0.5,
        im_min: b as f64 - 1.0,
        im_max: b as f64,
    }
}

/// `B_1, …, B_count` on the principal sheet.
pub fn spiral_tiles(count: usize) -> Vec<Tile> {
    spiral_cells(count)
        .into_iter()
        .enumerate()
        .map(|(j, (a, b))| Tile {
            index: j + 1,
            sheet: 1,
            rect: cell_rect(a, b),
        })
        .collect()
}

/// `B_j^{(k)}` for `k = 1..n`, `j = 1..n-k+1`, sheet-major.
pub fn sheet_tiles(n: usize) -> Vec<Tile> {
    let cells = spiral_cells(n);
    let mut tiles = Vec::with_capacity(n * (n + 1) / 2);
    for k in 1..=n {
        for (j, &(a, b)) in cells.iter().take(n - k + 1).enumerate() {
            tiles.push(Tile {
                index: j + 1,
                sheet: k,
                rect: cell_rect(a, b),
            });
        }
    }
    tiles
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lattice_examples() {
        let spec = LatticeSpec {
            rect: Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            sheet: 0,
            spacing: 1.0,
            exclusion_radius: 0.0,
        };
        let pts: Vec<Complex64> = lattice_points(&spec)
            .unwrap()
            .iter()
            .map(|p| p.value)
            .collect();
        assert_eq!(
            pts,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]
        );

        let spec = LatticeSpec {
            rect: Rect::new(-0.4, 0.4, -0.4, 0.4).unwrap(),
            sheet: 0,
            spacing: 0.25,
            exclusion_radius: 0.3,
        };
        let pts: Vec<Complex64> = lattice_points(&spec)
            .unwrap()
            .iter()
            .map(|p| p.value)
            .collect();
        assert_eq!(
            pts,
            vec![
                c(-0.25, -0.25),
                c(0.25, -0.25),
                c(-0.25, 0.25),
                c(0.25, 0.25)
            ]
        );

        let empty = LatticeSpec {
            rect: Rect::new(-0.1, 0.1, -0.1, 0.1).unwrap(),
            sheet: 0,
            spacing: 1.0,
            exclusion_radius: 0.5,
        };
        assert!(matches!(
            lattice_points(&empty),
            Err(TilingError::EmptyLattice { .. })
        ));
        assert!(matches!(
            lattice_points(&LatticeSpec::new(spec.rect, 0, 0.0)),
            Err(TilingError::InvalidSpacing(_))
        ));
    }

    #[test]
    fn lattice_edges_tolerate_rounding() {
        // 0.1 * 3 is not exactly 0.3
        let spec = LatticeSpec::new(Rect::new(0.3, 0.6, -0.3, -0.1).unwrap(), 0, 0.1);
        let keys = lattice_keys(&spec).unwrap();
        assert_eq!(keys.len(), 4 * 3);
    }

    #[test]
    fn spiral_matches_first_squares() {
        let t = spiral_tiles(7);
        assert_eq!(t[0].rect, Rect::new(-0.5, 0.5, -1.0, 0.0).unwrap());
        assert_eq!(t[1].rect.center(), c(0.0, -1.5));
        assert_eq!(t[2].rect.center(), c(1.0, -1.5));
        assert_eq!(t[3].rect.center(), c(1.0, -0.5));
        assert_eq!(t[4].rect.center(), c(1.0, 0.5));
        assert_eq!(t[5].rect.center(), c(0.0, 0.5));
        assert_eq!(t[6].rect.center(), c(-1.0, 0.5));
        let more = spiral_cells(11);
        assert_eq!(&more[7..], &[(-1, 0), (-1, -1), (-1, -2), (0, -2)]);
    }

    #[test]
    fn sheet_enumeration() {
        assert_eq!(sheet_tiles(1).len(), 1);
        let two = sheet_tiles(2);
        assert_eq!(
            two.iter().map(|t| (t.sheet, t.index)).collect::<Vec<_>>(),
            vec![(1, 1), (1, 2), (2, 1)]
        );
        assert_eq!(sheet_tiles(3).len(), 6);
        let sheets: Vec<i32> = (1..=5).map(tile_sheet_to_log_sheet).collect();
        assert_eq!(sheets, vec![0, 1, -1, 2, -2]);
    }

    #[test]
    fn spiral_covers_discs() {
        for radius in 1..=5 {
            let r = radius as f64;
            let count = (1..2000)
                .find(|&k| {
                    let cells: HashSet<(i64, i64)> = spiral_cells(k).into_iter().collect();
                    // every cell meeting the disc must be present
                    let reach = r.ceil() as i64 + 1;
                    (-reach..=reach).all(|a| {
                        (-reach..=reach + 1).all(|b| {
                            let rect = cell_rect(a, b);
                            let dx = rect.re_min.max(-rect.re_max).max(0.0);
                            let dy = rect.im_min.max(-rect.im_max).max(0.0);
                            dx * dx + dy * dy >= r * r || cells.contains(&(a, b))
                        })
                    })
                })
                .expect("spiral eventually covers the disc");
            assert!(count < 2000);
        }
    }

    #[test]
    fn spiral_cells_disjoint_and_simply_connected() {
        for k in 1..=100 {
            let cells = spiral_cells(k);
            let set: HashSet<(i64, i64)> = cells.iter().copied().collect();
            assert_eq!(set.len(), k, "overlap at k = {k}");
            // complement inside a padded bounding box is connected (no holes)
            let amin = cells.iter().map(|c| c.0).min().unwrap() - 1;
            let amax = cells.iter().map(|c| c.0).max().unwrap() + 1;
            let bmin = cells.iter().map(|c| c.1).min().unwrap() - 1;
            let bmax = cells.iter().map(|c| c.1).max().unwrap() + 1;
            let mut seen = HashSet::new();
            let mut stack = vec![(amin, bmin)];
            while let Some((a, b)) = stack.pop() {
                if a < amin
                    || a > amax
                    || b < bmin
                    || b > bmax
                    || set.contains(&(a, b))
                    || !seen.insert((a, b))
                {
                    continue;
                }
                stack.extend([(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)]);
            }
            let box_cells = ((amax - amin + 1) * (bmax - bmin + 1)) as usize;
            assert_eq!(seen.len() + k, box_cells, "hole at k = {k}");
            // the cells themselves are edge-connected: each one touches an earlier one
            for (idx, &(a, b)) in cells.iter().enumerate().skip(1) {
                let earlier: HashSet<_> = cells[..idx].iter().copied().collect();
                assert!([(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)]
                    .iter()
                    .any(|n| earlier.contains(n)));
            }
        }
    }

    #[test]
    fn lattice_closed_under_reflection() {
        let spec = LatticeSpec::new(Rect::new(-1.0, 1.0, -0.7, 0.3).unwrap(), 0, 0.05);
        let keys: HashSet<(i64, i64)> = lattice_keys(&spec)
            .unwrap()
            .iter()
            .map(|k| (k.kr, k.ki))
            .collect();
        for &(kr, ki) in &keys {
            assert!(keys.contains(&(-kr, ki)));
        }
    }
}
