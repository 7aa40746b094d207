//! Lattice scans: `Θ_n^B` over one box, `Γ_n` over the tilings, clustering of
//! flagged points and the consecutive-`n` convergence diagnostic.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greens::SheetPoint;
use crate::kernel::{build_grid, KernelAssembler, KernelError};
use crate::metrics::{attouch_wets, AwDistance, PointSet};
use crate::potential::Potential;
use crate::resolvent::{flag_for, identity_plus, sigma_min, ResolventError, ThresholdRule};
use crate::tiling::{
    lattice_keys, sheet_tiles, spiral_tiles, LatticeKey, LatticeSpec, Rect, Tile, TilingError,
};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub key: LatticeKey,
    pub point: SheetPoint,
    pub sigma: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileId {
    pub sheet: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub n: usize,
    pub spacing: f64,
    pub cutoff: f64,
    pub tiles: Vec<TileId>,
    pub potential_id: String,
    pub dimension: usize,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub flagged: Vec<SheetPoint>,
    pub field: Vec<FieldPoint>,
    pub meta: ScanMeta,
}

impl ScanResult {
    /// Flagged values on one sheet as a point set.
    pub fn flagged_set(&self, sheet: i32) -> PointSet {
        self.flagged
            .iter()
            .filter(|p| p.sheet == sheet)
            .map(|p| p.value)
            .collect()
    }

    /// Largest `σ_min` seen, `0` for an empty field.
    pub fn max_sigma(&self) -> f64 {
        self.field.iter().map(|f| f.sigma).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroid: Complex64,
    pub sheet: i32,
    pub count: usize,
    pub min_sigma: f64,
}

/// Prepared scan state for one potential at one resolution.
struct Scanner {
    assembler: KernelAssembler,
    cutoff: f64,
}

impl Scanner {
    fn new(p: &Potential, n: usize, rule: &ThresholdRule) -> Result<Self, ScanError> {
        if n == 0 {
            return Err(ScanError::InvalidInput(
                "resolution n must be at least 1".into(),
            ));
        }
        let grid = build_grid(p.support(), n)?;
        Ok(Self {
            assembler: KernelAssembler::new(p, &grid)?,
            cutoff: rule.cutoff(n),
        })
    }

    fn point(&self, key: LatticeKey, spacing: f64) -> Result<FieldPoint, ScanError> {
        let point = key.point(spacing);
        let sigma = if self.assembler.is_trivial() {
            1.0
        } else {
            let k = self.assembler.assemble(point)?;
            sigma_min(identity_plus(k.entries().as_ref()).as_ref())?
        };
        Ok(FieldPoint {
            key,
            point,
            sigma,
            flagged: flag_for(sigma, self.cutoff),
        })
    }

    /// Independent per-point tasks, collected back in key order.
    fn run(&self, keys: &[LatticeKey], spacing: f64) -> Result<Vec<FieldPoint>, ScanError> {
        keys.par_iter()
            .map(|&key| self.point(key, spacing))
            .collect()
    }
}

fn finish(
    p: &Potential,
    n: usize,
    spacing: f64,
    cutoff: f64,
    tiles: Vec<TileId>,
    field: Vec<FieldPoint>,
    start: Instant,
) -> ScanResult {
    ScanResult {
        flagged: field
            .iter()
            .filter(|f| f.flagged)
            .map(|f| f.point)
            .collect(),
        field,
        meta: ScanMeta {
            n,
            spacing,
            cutoff,
            tiles,
            potential_id: p.id().to_string(),
            dimension: p.dim().get(),
            wall_time: start.elapsed().as_secs_f64(),
        },
    }
}

/// `Θ_n^B`: flag every lattice point of `spec` where `σ_min(I + K_n(z)) ≤ 1/C`.
pub fn theta_set(
    p: &Potential,
    n: usize,
    spec: &LatticeSpec,
    rule: &ThresholdRule,
) -> Result<ScanResult, ScanError> {
    let start = Instant::now();
    let scanner = Scanner::new(p, n, rule)?;
    let keys = lattice_keys(spec)?;
    let field = scanner.run(&keys, spec.spacing)?;
    Ok(finish(
        p,
        n,
        spec.spacing,
        scanner.cutoff,
        Vec::new(),
        field,
        start,
    ))
}

/// Tiles of `Γ_n` at depth `depth`: the spiral for odd `d`, the sheet
/// triangle for even `d`.
pub fn gamma_tiles(p: &Potential, depth: usize) -> Vec<Tile> {
    if p.dim().is_odd() {
        spiral_tiles(depth)
    } else {
        sheet_tiles(depth)
    }
}

pub fn gamma_n(
    p: &Potential,
    n: usize,
    depth: usize,
    spacing: f64,
    rule: &ThresholdRule,
) -> Result<ScanResult, ScanError> {
    gamma_n_with(p, n, depth, spacing, spacing, rule, |_, _| Ok(()))
}

/// `Γ_n` with an explicit exclusion radius around `z = 0` and a callback
/// receiving each tile's new field points as soon as the tile completes.
pub fn gamma_n_with<F>(
    p: &Potential,
    n: usize,
    depth: usize,
    spacing: f64,
    exclusion_radius: f64,
    rule: &ThresholdRule,
    mut on_tile: F,
) -> Result<ScanResult, ScanError>
where
    F: FnMut(&Tile, &[FieldPoint]) -> Result<(), ScanError>,
{
    if depth == 0 {
        return Err(ScanError::InvalidInput(
            "tile depth must be at least 1".into(),
        ));
    }
    let start = Instant::now();
    let scanner = Scanner::new(p, n, rule)?;
    let tiles = gamma_tiles(p, depth);
    let mut seen = HashSet::new();
    let mut field = Vec::new();
    for tile in &tiles {
        let spec = LatticeSpec {
            rect: tile.rect,
            sheet: tile.log_sheet(),
            spacing,
            exclusion_radius,
        };
        let keys: Vec<LatticeKey> = match lattice_keys(&spec) {
            Ok(keys) => keys.into_iter().filter(|k| seen.insert(*k)).collect(),
            Err(TilingError::EmptyLattice { .. }) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let points = scanner.run(&keys, spacing)?;
        on_tile(tile, &points)?;
        field.extend(points);
    }
    if field.is_empty() {
        let rect = tiles
            .iter()
            .skip(1)
            .fold(tiles[0].rect, |acc, t| acc.hull(&t.rect));
        return Err(TilingError::EmptyLattice {
            rect,
            spacing,
            exclusion_radius,
        }
        .into());
    }
    let ids = tiles
        .iter()
        .map(|t| TileId {
            sheet: t.sheet,
            index: t.index,
        })
        .collect();
    Ok(finish(p, n, spacing, scanner.cutoff, ids, field, start))
}

/// Connected components of flagged points under 8-neighbour lattice adjacency
/// on each sheet, ordered by centroid real part, then imaginary part.
pub fn cluster_flags(result: &ScanResult) -> Vec<ClusterSummary> {
    let flagged: Vec<&FieldPoint> = result.field.iter().filter(|f| f.flagged).collect();
    let index: HashMap<LatticeKey, usize> = flagged
        .iter()
        .enumerate()
        .map(|(i, f)| (f.key, i))
        .collect();
    let mut visited = vec![false; flagged.len()];
    let mut clusters = Vec::new();
    for seed in 0..flagged.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut stack = vec![seed];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            let k = flagged[i].key;
            for dr in -1..=1 {
                for di in -1..=1 {
                    let neighbour = LatticeKey {
                        sheet: k.sheet,
                        kr: k.kr + dr,
                        ki: k.ki + di,
                    };
                    if let Some(&j) = index.get(&neighbour) {
                        if !visited[j] {
                            visited[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        let sum: Complex64 = members.iter().map(|&i| flagged[i].point.value).sum();
        clusters.push(ClusterSummary {
            centroid: sum / members.len() as f64,
            sheet: flagged[seed].key.sheet,
            count: members.len(),
            min_sigma: members
                .iter()
                .map(|&i| flagged[i].sigma)
                .fold(f64::INFINITY, f64::min),
        });
    }
    clusters.sort_by(|a, b| {
        a.centroid
            .re
            .total_cmp(&b.centroid.re)
            .then(a.centroid.im.total_cmp(&b.centroid.im))
            .then(a.sheet.cmp(&b.sheet))
    });
    clusters
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub n_prev: usize,
    pub n: usize,
    pub distance: AwDistance,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub scans: Vec<ScanResult>,
    pub steps: Vec<ConvergenceStep>,
}

/// Scans the same box at every `n` (spacing from `spacing_for(n)`) and
/// reports `d_AW` between consecutive flagged sets on the box's sheet.
pub fn convergence_diagnostic<S>(
    p: &Potential,
    n_list: &[usize],
    rect: Rect,
    sheet: i32,
    spacing_for: S,
    rule: &ThresholdRule,
    i_max: usize,
    delta: f64,
) -> Result<ConvergenceReport, ScanError>
where
    S: Fn(usize) -> f64,
{
    if n_list.len() < 2 {
        return Err(ScanError::InvalidInput(format!(
            "convergence diagnostic needs at least two resolutions, got {}",
            n_list.len()
        )));
    }
    let scans = n_list
        .iter()
        .map(|&n| theta_set(p, n, &LatticeSpec::new(rect, sheet, spacing_for(n)), rule))
        .collect::<Result<Vec<_>, _>>()?;
    let sets: Vec<PointSet> = scans.iter().map(|s| s.flagged_set(sheet)).collect();
    let steps = n_list
        .windows(2)
        .zip(sets.windows(2))
        .map(|(ns, pair)| ConvergenceStep {
            n_prev: ns[0],
            n: ns[1],
            distance: attouch_wets(&pair[0], &pair[1], i_max, delta),
        })
        .collect();
    Ok(ConvergenceReport { scans, steps })
}
