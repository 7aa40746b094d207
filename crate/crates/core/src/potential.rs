//! Compactly supported complex potentials `q` on the cube `Q_M = [-M/2, M/2]^d`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::greens::Dimension;

/// Samples at or beyond the faces of `Q_M` must vanish to this tolerance.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

const GRID_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("invalid potential parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}: line {line}: {reason}")]
    MalformedFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: samples do not form a regular tensor grid: {reason}")]
    IrregularGrid { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    SupportMismatch { path: PathBuf, reason: String },
    #[error("cannot read potential file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The cube `Q_M` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    edge: f64,
    dim: Dimension,
}

impl SupportBox {
    pub fn new(edge: f64, dim: Dimension) -> Result<Self, PotentialError> {
        if !(edge.is_finite() && edge > 0.0) {
            return Err(PotentialError::InvalidParameter(format!(
                "support edge M must be positive, got {edge}"
            )));
        }
        Ok(Self { edge, dim })
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn half_edge(&self) -> f64 {
        0.5 * self.edge
    }

    /// Closed-cube membership; `χ_{Q_M}(x) = 1`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let h = self.half_edge();
        x.iter().all(|&c| c.abs() <= h)
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Zero,
    SquareWell {
        strength: Complex64,
        half_width: f64,
    },
    Gaussian {
        strength: Complex64,
        sigma: f64,
        cutoff_radius: f64,
    },
    DoubleBump {
        strength: Complex64,
        center: f64,
        width: f64,
    },
    Custom {
        evaluator: Evaluator,
        bound: Option<f64>,
    },
    Sampled(SampledGrid),
}

/// A potential with its declared support. Immutable once built.
#[derive(Clone)]
pub struct Potential {
    support: SupportBox,
    kind: Kind,
    id: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("id", &self.id)
            .field("support", &self.support)
            .finish()
    }
}

/// Smooth bump `exp(1 - 1/(1 - t²))` on `|t| < 1`, equal to 1 at `t = 0`.
pub fn bump(t: f64) -> f64 {
    let s = t * t;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s)).exp()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

impl Potential {
    pub fn zero(support: SupportBox) -> Self {
        Self {
            support,
            kind: Kind::Zero,
            id: "zero".into(),
        }
    }

    /// `q = -strength` on the cube `[-a, a]^d`, zero elsewhere. A negative
    /// strength gives a barrier.
    pub fn square_well(
        support: SupportBox,
        strength: Complex64,
        half_width: f64,
    ) -> Result<Self, PotentialError> {
        if !(half_width > 0.0 && half_width <= support.half_edge()) {
            return Err(PotentialError::InvalidParameter(format!(
                "square well half-width {half_width} must lie in (0, M/2 = {}]",
                support.half_edge()
            )));
        }
        Ok(Self {
            support,
            kind: Kind::SquareWell {
                strength,
                half_width,
            },
            id: format!(
                "square_well(strength={},half_width={half_width})",
                fmt_complex(strength)
            ),
        })
    }

    /// `q(x) = -strength · exp(-|x|²/σ²) · bump(|x|/R)`.
    pub fn gaussian(
        support: SupportBox,
        strength: Complex64,
        sigma: f64,
        cutoff_radius: f64,
    ) -> Result<Self, PotentialError> {
        if !(sigma > 0.0) {
            return Err(PotentialError::InvalidParameter(format!(
                "gaussian width {sigma} must be positive"
            )));
        }
        if !(cutoff_radius > 0.0 && cutoff_radius <= support.half_edge()) {
            return Err(PotentialError::InvalidParameter(format!(
                "gaussian cutoff radius {cutoff_radius} must lie in (0, M/2 = {}]",
                support.half_edge()
            )));
        }
        Ok(Self {
            support,
            kind: Kind::Gaussian {
                strength,
                sigma,
                cutoff_radius,
            },
            id: format!(
                "gaussian(strength={},sigma={sigma},cutoff_radius={cutoff_radius})",
                fmt_complex(strength)
            ),
        })
    }

    /// Radial barrier ring `q(x) = strength · bump((|x| - c)/w)`; in one
    /// dimension two bumps at `±c` trapping the region between them.
    pub fn double_bump(
        support: SupportBox,
        strength: Complex64,
        center: f64,
        width: f64,
    ) -> Result<Self, PotentialError> {
        if !(width > 0.0 && center >= width) {
            return Err(PotentialError::InvalidParameter(format!(
                "double bump needs 0 < width <= center, got center {center}, width {width}"
            )));
        }
        if center + width > support.half_edge() {
            return Err(PotentialError::InvalidParameter(format!(
                "double bump reaches |x| = {}, outside M/2 = {}",
                center + width,
                support.half_edge()
            )));
        }
        Ok(Self {
            support,
            kind: Kind::DoubleBump {
                strength,
                center,
                width,
            },
            id: format!(
                "double_bump(strength={},center={center},width={width})",
                fmt_complex(strength)
            ),
        })
    }

    /// Arbitrary evaluator, cut off to `Q_M`. `bound` is an optional known
    /// bound on `sup |q|`.
    pub fn custom<F>(support: SupportBox, id: impl Into<String>, bound: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            support,
            kind: Kind::Custom {
                evaluator: Arc::new(f),
                bound,
            },
            id: id.into(),
        }
    }

    pub fn support(&self) -> SupportBox {
        self.support
    }

    pub fn dim(&self) -> Dimension {
        self.support.dim
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// An upper bound on `sup |q|` when one is known.
    pub fn sup_bound(&self) -> Option<f64> {
        match &self.kind {
            Kind::Zero => Some(0.0),
            Kind::SquareWell { strength, .. }
            | Kind::Gaussian { strength, .. }
            | Kind::DoubleBump { strength, .. } => Some(strength.norm()),
            Kind::Custom { bound, .. } => *bound,
            Kind::Sampled(g) => Some(g.values.iter().map(|v| v.norm()).fold(0.0, f64::max)),
        }
    }

    /// `q(x)`; exactly zero outside `Q_M`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.support.dim.get());
        let zero = Complex64::new(0.0, 0.0);
        if !self.support.contains(x) {
            return zero;
        }
        match &self.kind {
            Kind::Zero => zero,
            Kind::SquareWell {
                strength,
                half_width,
            } => {
                if x.iter().all(|c| c.abs() <= *half_width) {
                    -strength
                } else {
                    zero
                }
            }
            Kind::Gaussian {
                strength,
                sigma,
                cutoff_radius,
            } => {
                let r = norm(x);
                let b = bump(r / cutoff_radius);
                if b == 0.0 {
                    zero
                } else {
                    -strength * ((-(r * r) / (sigma * sigma)).exp() * b)
                }
            }
            Kind::DoubleBump {
                strength,
                center,
                width,
            } => strength * bump((norm(x) - center) / width),
            Kind::Custom { evaluator, .. } => evaluator(x),
            Kind::Sampled(g) => g.interpolate(x),
        }
    }
}

/// Samples on a uniform tensor grid, interpolated multilinearly.
#[derive(Debug, Clone)]
struct SampledGrid {
    origin: Vec<f64>,
    step: Vec<f64>,
    counts: Vec<usize>,
    /// lexicographic, last axis fastest
    values: Vec<Complex64>,
}

impl SampledGrid {
    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn interpolate(&self, x: &[f64]) -> Complex64 {
        let d = x.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let t = (x[k] - self.origin[k]) / self.step[k];
            let last = self.counts[k] - 1;
            if t <= 0.0 {
                base[k] = 0;
                frac[k] = 0.0;
            } else if t >= last as f64 {
                base[k] = last;
                frac[k] = 0.0;
            } else {
                let f = t.floor();
                base[k] = f as usize;
                frac[k] = t - f;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            for k in 0..d {
                let upper = corner >> k & 1 == 1;
                if upper {
                    if frac[k] == 0.0 {
                        weight = 0.0;
                        break;
                    }
                    weight *= frac[k];
                    idx[k] = base[k] + 1;
                } else {
                    weight *= 1.0 - frac[k];
                    idx[k] = base[k];
                }
            }
            if weight != 0.0 {
                acc += self.values[self.flat_index(&idx)] * weight;
            }
        }
        acc
    }
}

/// Reads a sampled potential: one record per line, `x₁ … x_d Re(q) Im(q)`,
/// `#` comment lines ignored. The records must form the full tensor grid of
/// their sorted unique coordinates with uniform spacing per axis, cover
/// `Q_M`, and vanish on and beyond its faces.
pub fn load_sampled_potential(
    path: &Path,
    support: SupportBox,
) -> Result<Potential, PotentialError> {
    let text = fs::read_to_string(path).map_err(|source| PotentialError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let d = support.dim.get();
    let malformed = |line: usize, reason: String| PotentialError::MalformedFile {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let irregular = |reason: String| PotentialError::IrregularGrid {
        path: path.to_path_buf(),
        reason,
    };

    let mut records: Vec<(Vec<f64>, Complex64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != d + 2 {
            return Err(malformed(
                lineno + 1,
                format!(
                    "expected {} columns for d = {d}, found {}",
                    d + 2,
                    fields.len()
                ),
            ));
        }
        let mut nums = Vec::with_capacity(d + 2);
        for f in &fields {
            let v: f64 = f
                .parse()
                .map_err(|_| malformed(lineno + 1, format!("cannot parse '{f}' as a number")))?;
            if !v.is_finite() {
                return Err(malformed(lineno + 1, format!("non-finite value '{f}'")));
            }
            nums.push(v);
        }
        records.push((nums[..d].to_vec(), Complex64::new(nums[d], nums[d + 1])));
    }
    if records.is_empty() {
        return Err(malformed(0, "no sample records".into()));
    }

    let mut origin = Vec::with_capacity(d);
    let mut step = Vec::with_capacity(d);
    let mut counts = Vec::with_capacity(d);
    for k in 0..d {
        let mut coords: Vec<f64> = records.iter().map(|r| r.0[k]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        if coords.len() < 2 {
            return Err(irregular(format!(
                "axis {} has fewer than two distinct coordinates",
                k + 1
            )));
        }
        let h = (coords[coords.len() - 1] - coords[0]) / (coords.len() - 1) as f64;
        for (i, c) in coords.iter().enumerate() {
            let expected = coords[0] + i as f64 * h;
            if (c - expected).abs() > GRID_RELATIVE_TOLERANCE * h.max(1.0) {
                return Err(irregular(format!(
                    "axis {} coordinates are not uniformly spaced near {c}",
                    k + 1
                )));
            }
        }
        origin.push(coords[0]);
        step.push(h);
        counts.push(coords.len());
    }
    let total: usize = counts.iter().product();
    if total != records.len() {
        return Err(irregular(format!(
            "{} records for a {} tensor grid of {total} nodes",
            records.len(),
            counts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("x")
        )));
    }

    let mut values = vec![Complex64::new(0.0, 0.0); total];
    let mut seen = vec![false; total];
    let mut grid = SampledGrid {
        origin,
        step,
        counts,
        values: Vec::new(),
    };
    for (x, v) in &records {
        let mut idx = Vec::with_capacity(d);
        for k in 0..d {
            let t = (x[k] - grid.origin[k]) / grid.step[k];
            idx.push(t.round() as usize);
        }
        let flat = grid.flat_index(&idx);
        if seen[flat] {
            return Err(irregular(format!("duplicate sample at {x:?}")));
        }
        seen[flat] = true;
        values[flat] = *v;
    }

    let half = support.half_edge();
    let tol = GRID_RELATIVE_TOLERANCE * half.max(1.0);
    for k in 0..d {
        let lo = grid.origin[k];
        let hi = lo + grid.step[k] * (grid.counts[k] - 1) as f64;
        if lo > -half + tol || hi < half - tol {
            return Err(PotentialError::SupportMismatch {
                path: path.to_path_buf(),
                reason: format!(
                    "axis {} samples span [{lo}, {hi}] but Q_M is [{}, {half}]",
                    k + 1,
                    -half
                ),
            });
        }
    }
    for (x, v) in &records {
        let on_or_outside = x.iter().any(|c| c.abs() >= half - tol);
        if on_or_outside && v.norm() > BOUNDARY_TOLERANCE {
            return Err(PotentialError::SupportMismatch {
                path: path.to_path_buf(),
                reason: format!("nonzero sample {v} at {x:?} on or outside the boundary of Q_M"),
            });
        }
    }
    grid.values = values;

    Ok(Potential {
        support,
        kind: Kind::Sampled(grid),
        id: format!("sampled({})", path.display()),
    })
}
