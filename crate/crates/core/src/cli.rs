//! Batch front end behind the `rescan` binary: configuration, worker pool,
//! and the CSV/JSON artefacts of the scan, oracle, diagnostics and fuzz runs.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::greens::Dimension;
use crate::kernel::{aligned_resolution, KernelError};
use crate::oracle::{find_zeros, lemma_fuzz, well_determinant, OracleError, SquareWellSpec};
use crate::potential::{load_sampled_potential, Potential, PotentialError, SupportBox};
use crate::resolvent::{ResolventError, ThresholdRule};
use crate::scan::{
    cluster_flags, convergence_diagnostic, gamma_n_with, theta_set, ClusterSummary, FieldPoint,
    ScanError, ScanResult,
};
use crate::tiling::{LatticeSpec, Rect, TilingError};

pub const WORKERS_ENV: &str = "RESCAN_WORKERS";
/// Lattice size aimed for when no spacing is configured.
pub const DEFAULT_LATTICE_POINTS: f64 = 1e6;

pub const FIELD_HEADER: &str = "re,im,sheet,sigma,flagged";
pub const FLAGGED_HEADER: &str = "re,im,sheet,sigma";
pub const CLUSTER_HEADER: &str = "re_centroid,im_centroid,count,min_sigma";
pub const ORACLE_HEADER: &str = "re,im,abs_F";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<TilingError> for CliError {
    fn from(e: TilingError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::UnalignedResolution { .. } | KernelError::GridMismatch(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ResolventError> for CliError {
    fn from(e: ResolventError) -> Self {
        match e {
            ResolventError::InvalidCutoff(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Kernel(e) => e.into(),
            ScanError::Resolvent(e) => e.into(),
            ScanError::Tiling(e) => e.into(),
            ScanError::InvalidInput(m) => CliError::Config(m),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BoxContainsOrigin(_) | OracleError::InvalidSpec(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Box,
    Tiles,
}

/// Every run-level parameter; the flat `key=value` keys are the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// zero | square_well | gaussian | double_bump | file
    pub potential: String,
    pub potential_file: Option<PathBuf>,
    pub strength: f64,
    pub strength_im: f64,
    pub half_width: f64,
    pub sigma: f64,
    /// gaussian cutoff radius, `M/2` when unset
    pub cutoff_radius: Option<f64>,
    pub center: f64,
    pub width: f64,
    /// edge length `M` of the support cube
    pub edge: f64,
    pub dim: usize,
    pub n: usize,
    pub mode: ScanMode,
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_min: Option<f64>,
    pub im_max: Option<f64>,
    /// logarithmic sheet of the box (0 principal)
    pub sheet: i32,
    /// tile count (odd d) or sheet depth (even d)
    pub tiles: Option<usize>,
    pub spacing: Option<f64>,
    pub exclusion: Option<f64>,
    pub cutoff: f64,
    pub theoretical: bool,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub max_dim: usize,
    pub n_list: Vec<usize>,
    pub aw_i_max: usize,
    pub aw_delta: f64,
    /// clusters with `|Re z| > suspect_fraction·π·n` are reported as suspect
    pub suspect_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: "square_well".into(),
            potential_file: None,
            strength: 1.0,
            strength_im: 0.0,
            half_width: 1.0,
            sigma: 0.5,
            cutoff_radius: None,
            center: 0.6,
            width: 0.3,
            edge: 2.0,
            dim: 1,
            n: 100,
            mode: ScanMode::Box,
            re_min: None,
            re_max: None,
            im_min: None,
            im_max: None,
            sheet: 0,
            tiles: None,
            spacing: None,
            exclusion: None,
            cutoff: 200.0,
            theoretical: false,
            workers: None,
            out: PathBuf::from("rescan-out"),
            seed: 42,
            trials: 1000,
            max_dim: 20,
            n_list: Vec::new(),
            aw_i_max: 30,
            aw_delta: 1e-3,
            suspect_fraction: 0.8,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{origin}:{}: expected key=value, got {line:?}",
                number + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn typed_value(current: &Value, key: &str, raw: &str) -> Result<Value, CliError> {
    let bad = || CliError::Config(format!("invalid value {raw:?} for key {key}"));
    Ok(match current {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
        Value::Number(_) => serde_json::from_str::<serde_json::Number>(raw)
            .map(Value::Number)
            .map_err(|_| bad())?,
        Value::String(_) => Value::String(raw.to_string()),
        Value::Array(_) => Value::Array(
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    serde_json::from_str::<serde_json::Number>(s)
                        .map(Value::Number)
                        .map_err(|_| bad())
                })
                .collect::<Result<_, _>>()?,
        ),
        // unset optional: numeric if it parses as one
        _ => match serde_json::from_str::<serde_json::Number>(raw) {
            Ok(number) if key != "potential_file" && key != "out" => Value::Number(number),
            _ => Value::String(raw.to_string()),
        },
    })
}

impl RunConfig {
    /// Applies `key=value` pairs on top of `self`; later pairs win.
    pub fn apply(&self, pairs: &[(String, String)]) -> Result<RunConfig, CliError> {
        let defaults = serde_json::to_value(RunConfig::default()).expect("config serializes");
        let mut map: Map<String, Value> =
            match serde_json::to_value(self).expect("config serializes") {
                Value::Object(map) => map,
                _ => unreachable!("config is a struct"),
            };
        for (key, raw) in pairs {
            let template = defaults
                .get(key)
                .ok_or_else(|| CliError::Config(format!("unknown configuration key {key:?}")))?;
            let current = map.get(key).filter(|v| !v.is_null()).unwrap_or(template);
            map.insert(key.clone(), typed_value(current, key, raw)?);
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Defaults, then the manifest's config, then the config file, then the
    /// `key=value` overrides.
    pub fn load(
        config: Option<&Path>,
        manifest: Option<&Path>,
        overrides: &[String],
    ) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = manifest {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read manifest {}: {e}", path.display()))
            })?;
            let manifest: Manifest = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("malformed manifest {}: {e}", path.display()))
            })?;
            cfg = manifest.config;
        }
        if let Some(path) = config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            cfg = cfg.apply(&parse_key_values(&text, &path.display().to_string())?)?;
        }
        let pairs = overrides
            .iter()
            .map(|o| {
                o.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        cfg.apply(&pairs)
    }

    pub fn dimension(&self) -> Result<Dimension, CliError> {
        Dimension::new(self.dim).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn support(&self) -> Result<SupportBox, CliError> {
        Ok(SupportBox::new(self.edge, self.dimension()?)?)
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        let support = self.support()?;
        let s = Complex64::new(self.strength, self.strength_im);
        Ok(match self.potential.as_str() {
            "zero" => Potential::zero(support),
            "square_well" => Potential::square_well(support, s, self.half_width)?,
            "gaussian" => Potential::gaussian(
                support,
                s,
                self.sigma,
                self.cutoff_radius.unwrap_or(support.half_edge()),
            )?,
            "double_bump" => Potential::double_bump(support, s, self.center, self.width)?,
            "file" => {
                let path = self.potential_file.as_ref().ok_or_else(|| {
                    CliError::Config("potential=file requires potential_file".into())
                })?;
                load_sampled_potential(path, support)?
            }
            other => return Err(CliError::Config(format!("unknown potential {other:?}"))),
        })
    }

    /// Checks that `n·M` is an integer for `n`.
    pub fn check_resolution(&self, n: usize) -> Result<(), CliError> {
        if n == 0 {
            return Err(CliError::Config("resolution n must be at least 1".into()));
        }
        match aligned_resolution(n, self.edge, n) {
            Some(_) => Ok(()),
            None => {
                let hint = aligned_resolution(n, self.edge, 100 * n)
                    .map(|k| format!("; the next aligned resolution is n={k}"))
                    .unwrap_or_default();
                Err(CliError::Config(format!(
                    "n·M = {n}·{} is not an integer{hint}",
                    self.edge
                )))
            }
        }
    }

    pub fn rule(&self) -> Result<ThresholdRule, CliError> {
        if self.theoretical {
            Ok(ThresholdRule::theoretical(self.dim))
        } else {
            Ok(ThresholdRule::practical(self.cutoff)?)
        }
    }

    pub fn rect(&self) -> Result<Rect, CliError> {
        match (self.re_min, self.re_max, self.im_min, self.im_max) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok(Rect::new(a, b, c, d)?),
            _ => Err(CliError::Config(
                "box mode requires re_min, re_max, im_min and im_max".into(),
            )),
        }
    }

    /// Lattice spacing: configured, theoretical `e^{-1/a_n}`, or sized for
    /// about a million points over `area`.
    pub fn spacing_for(&self, n: usize, area: f64) -> Result<f64, CliError> {
        let h = match self.spacing {
            Some(h) => h,
            None if self.theoretical => self
                .rule()?
                .lattice_spacing(n)
                .expect("theoretical rule has a spacing"),
            None => (area / DEFAULT_LATTICE_POINTS).sqrt(),
        };
        if h.is_finite() && h > 0.0 {
            Ok(h)
        } else {
            Err(CliError::Config(format!(
                "lattice spacing must be positive, got {h}"
            )))
        }
    }

    /// Worker count: `RESCAN_WORKERS`, else `workers`, else all cores.
    pub fn worker_count(&self) -> Result<usize, CliError> {
        let requested = match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!("{WORKERS_ENV}={v:?} is not a worker count"))
            })?),
            Err(_) => self.workers,
        };
        match requested {
            Some(0) => Err(CliError::Config("worker count must be at least 1".into())),
            Some(k) => Ok(k),
            None => Ok(std::thread::available_parallelism()
                .map(|k| k.get())
                .unwrap_or(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub workers: usize,
    pub wall_time: f64,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

/// What a run produced, for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub lines: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct CsvFile {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &str) -> Result<Self, CliError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut csv = Self {
            path,
            writer: BufWriter::new(file),
        };
        csv.row(format_args!("{header}"))?;
        Ok(csv)
    }

    fn row(&mut self, line: std::fmt::Arguments<'_>) -> Result<(), CliError> {
        writeln!(self.writer, "{line}").map_err(io_err(&self.path))
    }

    fn flush(&mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(io_err(&self.path))
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.flush()?;
        Ok(self.path)
    }
}

fn field_rows(csv: &mut CsvFile, points: &[FieldPoint]) -> Result<(), CliError> {
    for f in points {
        csv.row(format_args!(
            "{},{},{},{},{}",
            f.point.value.re,
            f.point.value.im,
            f.point.sheet,
            f.sigma,
            u8::from(f.flagged)
        ))?;
    }
    Ok(())
}

fn cluster_rows(csv: &mut CsvFile, clusters: &[ClusterSummary]) -> Result<(), CliError> {
    for c in clusters {
        csv.row(format_args!(
            "{},{},{},{}",
            c.centroid.re, c.centroid.im, c.count, c.min_sigma
        ))?;
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_manifest(
    cfg: &RunConfig,
    command: &str,
    workers: usize,
    start: Instant,
    outputs: &mut Vec<PathBuf>,
    summary: Value,
) -> Result<(), CliError> {
    let path = cfg.out.join("manifest.json");
    outputs.push(path.clone());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        workers,
        wall_time: start.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        summary,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// `scan`: field, flagged points, clusters and manifest.
pub fn run_scan(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let potential = cfg.potential()?;
    cfg.check_resolution(cfg.n)?;
    let rule = cfg.rule()?;
    let workers = cfg.worker_count()?;
    prepare_out(&cfg.out)?;
    let mut field_csv = CsvFile::create(&cfg.out, "field.csv", FIELD_HEADER)?;

    let result: ScanResult = match cfg.mode {
        ScanMode::Box => {
            let rect = cfg.rect()?;
            let h = cfg.spacing_for(cfg.n, rect.area())?;
            let spec = LatticeSpec {
                rect,
                sheet: cfg.sheet,
                spacing: h,
                exclusion_radius: cfg.exclusion.unwrap_or(h),
            };
            let result = in_pool(workers, || theta_set(&potential, cfg.n, &spec, &rule))??;
            field_rows(&mut field_csv, &result.field)?;
            result
        }
        ScanMode::Tiles => {
            let depth = cfg
                .tiles
                .ok_or_else(|| CliError::Config("tile mode requires tiles".into()))?;
            let tile_count = if cfg.dim % 2 == 1 {
                depth
            } else {
                depth * (depth + 1) / 2
            };
            let h = cfg.spacing_for(cfg.n, tile_count as f64)?;
            let exclusion = cfg.exclusion.unwrap_or(h);
            let mut write_error = None;
            let result = in_pool(workers, || {
                gamma_n_with(
                    &potential,
                    cfg.n,
                    depth,
                    h,
                    exclusion,
                    &rule,
                    |_, points| {
                        // checkpoint: each finished tile reaches the disk
                        if let Err(e) =
                            field_rows(&mut field_csv, points).and_then(|_| field_csv.flush())
                        {
                            write_error = Some(e);
                            return Err(ScanError::InvalidInput("field output failed".into()));
                        }
                        Ok(())
                    },
                )
            })?;
            if let Some(e) = write_error {
                return Err(e);
            }
            result?
        }
    };
    let mut outputs = vec![field_csv.finish()?];

    let mut flagged_csv = CsvFile::create(&cfg.out, "flagged.csv", FLAGGED_HEADER)?;
    for f in result.field.iter().filter(|f| f.flagged) {
        flagged_csv.row(format_args!(
            "{},{},{},{}",
            f.point.value.re, f.point.value.im, f.point.sheet, f.sigma
        ))?;
    }
    outputs.push(flagged_csv.finish()?);

    let clusters = cluster_flags(&result);
    let mut cluster_csv = CsvFile::create(&cfg.out, "clusters.csv", CLUSTER_HEADER)?;
    cluster_rows(&mut cluster_csv, &clusters)?;
    outputs.push(cluster_csv.finish()?);

    let summary = serde_json::json!({
        "lattice_points": result.field.len(),
        "flagged": result.flagged.len(),
        "clusters": clusters.len(),
        "spacing": result.meta.spacing,
        "cutoff": result.meta.cutoff,
        "potential_id": result.meta.potential_id,
        "scan_wall_time": result.meta.wall_time,
    });
    write_manifest(cfg, "scan", workers, start, &mut outputs, summary)?;
    Ok(RunSummary {
        lines: vec![format!(
            "{} lattice points, {} flagged, {} clusters ({}, n={}, h={}, C={}) in {:.1}s",
            result.field.len(),
            result.flagged.len(),
            clusters.len(),
            result.meta.potential_id,
            cfg.n,
            result.meta.spacing,
            result.meta.cutoff,
            result.meta.wall_time
        )],
        outputs,
    })
}

/// `oracle`: square-well zeros with `|F|` at each, in the shared CSV layout.
pub fn run_oracle(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let spec = SquareWellSpec::new(cfg.strength, cfg.half_width)?;
    let rect = cfg.rect()?;
    let workers = cfg.worker_count()?;
    let zeros = in_pool(workers, || find_zeros(&spec, &rect))??;
    prepare_out(&cfg.out)?;
    let mut csv = CsvFile::create(&cfg.out, "oracle.csv", ORACLE_HEADER)?;
    for z in &zeros {
        csv.row(format_args!(
            "{},{},{}",
            z.re,
            z.im,
            well_determinant(&spec, *z)?.norm()
        ))?;
    }
    let mut outputs = vec![csv.finish()?];
    write_manifest(
        cfg,
        "oracle",
        workers,
        start,
        &mut outputs,
        serde_json::json!({ "zeros": zeros.len() }),
    )?;
    Ok(RunSummary {
        lines: vec![format!(
            "{} zeros of F in {rect} (V0={}, a={})",
            zeros.len(),
            spec.v0,
            spec.a
        )],
        outputs,
    })
}

/// `diagnostics`: `d_AW` between consecutive resolutions and the suspect
/// report for clusters beyond `suspect_fraction·π·n`.
pub fn run_diagnostics(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    if cfg.n_list.len() < 2 {
        return Err(CliError::Config(format!(
            "diagnostics needs at least two values in n_list, got {:?}",
            cfg.n_list
        )));
    }
    for &n in &cfg.n_list {
        cfg.check_resolution(n)?;
    }
    if !(cfg.aw_i_max >= 1 && cfg.aw_delta > 0.0) {
        return Err(CliError::Config(
            "aw_i_max must be ≥ 1 and aw_delta > 0".into(),
        ));
    }
    let potential = cfg.potential()?;
    let rule = cfg.rule()?;
    let rect = cfg.rect()?;
    let workers = cfg.worker_count()?;
    let spacings = cfg
        .n_list
        .iter()
        .map(|&n| cfg.spacing_for(n, rect.area()))
        .collect::<Result<Vec<_>, _>>()?;
    let spacing_of = |n: usize| {
        spacings[cfg
            .n_list
            .iter()
            .position(|&m| m == n)
            .expect("n from list")]
    };
    let report = in_pool(workers, || {
        convergence_diagnostic(
            &potential,
            &cfg.n_list,
            rect,
            cfg.sheet,
            spacing_of,
            &rule,
            cfg.aw_i_max,
            cfg.aw_delta,
        )
    })??;
    prepare_out(&cfg.out)?;

    let mut table = CsvFile::create(
        &cfg.out,
        "diagnostics.csv",
        "n_prev,n,distance,truncation_error,grid_error",
    )?;
    for s in &report.steps {
        table.row(format_args!(
            "{},{},{},{},{}",
            s.n_prev, s.n, s.distance.value, s.distance.truncation_error, s.distance.grid_error
        ))?;
    }
    let mut outputs = vec![table.finish()?];

    let mut suspects = CsvFile::create(
        &cfg.out,
        "suspects.csv",
        "n,re_centroid,im_centroid,count,min_sigma,suspect",
    )?;
    let mut lines = Vec::new();
    let mut text = String::new();
    for (n, scan) in cfg.n_list.iter().zip(&report.scans) {
        let bound = cfg.suspect_fraction * PI * *n as f64;
        let clusters = cluster_flags(scan);
        let suspect: Vec<&ClusterSummary> = clusters
            .iter()
            .filter(|c| c.centroid.re.abs() > bound)
            .collect();
        for c in &clusters {
            suspects.row(format_args!(
                "{n},{},{},{},{},{}",
                c.centroid.re,
                c.centroid.im,
                c.count,
                c.min_sigma,
                u8::from(c.centroid.re.abs() > bound)
            ))?;
        }
        let line = format!(
            "n={n}: {} clusters, {} suspect (|Re z| > {:.2})",
            clusters.len(),
            suspect.len(),
            bound
        );
        text.push_str(&line);
        text.push('\n');
        for c in suspect {
            text.push_str(&format!(
                "  suspect {} (count {}, min sigma {:e})\n",
                c.centroid, c.count, c.min_sigma
            ));
        }
        lines.push(line);
    }
    outputs.push(suspects.finish()?);
    for s in &report.steps {
        let line = format!("d_AW(n={}, n={}) = {:.6}", s.n_prev, s.n, s.distance.value);
        text.push_str(&line);
        text.push('\n');
        lines.push(line);
    }
    let report_path = cfg.out.join("report.txt");
    fs::write(&report_path, text).map_err(io_err(&report_path))?;
    outputs.push(report_path);
    let summary = serde_json::json!({ "steps": report.steps });
    write_manifest(cfg, "diagnostics", workers, start, &mut outputs, summary)?;
    Ok(RunSummary { lines, outputs })
}

/// `fuzz`: seeded matrix checks of the resolvent estimates. Any violation
/// is reported as a numerical failure after the report is written.
pub fn run_fuzz(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    if cfg.trials == 0 || cfg.max_dim == 0 {
        return Err(CliError::Config(
            "fuzz needs trials ≥ 1 and max_dim ≥ 1".into(),
        ));
    }
    let workers = cfg.worker_count()?;
    let report = in_pool(workers, || lemma_fuzz(cfg.trials, cfg.max_dim, cfg.seed))??;
    prepare_out(&cfg.out)?;
    let path = cfg.out.join("fuzz.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    let mut outputs = vec![path];
    write_manifest(
        cfg,
        "fuzz",
        workers,
        start,
        &mut outputs,
        serde_json::to_value(&report).expect("report serializes"),
    )?;
    if report.violations > 0 {
        return Err(CliError::Numerical(format!(
            "{} inequality violations in {} trials (seed {})",
            report.violations, report.trials, report.seed
        )));
    }
    Ok(RunSummary {
        lines: vec![format!(
            "{} trials, 0 violations, worst relative margin {:e}",
            report.trials, report.worst_margin
        )],
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn key_values_are_typed_by_field() {
        let cfg = RunConfig::default()
            .apply(&pairs(&[
                ("n", "50"),
                ("re_min", "-3"),
                ("mode", "tiles"),
                ("theoretical", "true"),
                ("n_list", "50, 100,200"),
                ("potential_file", "17"),
                ("out", "a/b"),
            ]))
            .unwrap();
        assert_eq!(cfg.n, 50);
        assert_eq!(cfg.re_min, Some(-3.0));
        assert_eq!(cfg.mode, ScanMode::Tiles);
        assert!(cfg.theoretical);
        assert_eq!(cfg.n_list, vec![50, 100, 200]);
        assert_eq!(cfg.potential_file, Some(PathBuf::from("17")));
        assert_eq!(cfg.out, PathBuf::from("a/b"));
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        for p in [
            ("nn", "3"),
            ("n", "x"),
            ("n", "-1"),
            ("mode", "grid"),
            ("theoretical", "yes"),
        ] {
            let err = RunConfig::default().apply(&pairs(&[p])).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{p:?}");
        }
    }

    #[test]
    fn file_parsing_skips_comments() {
        let text = "# run\nn = 40  # resolution\n\nre_min=-1\n";
        let p = parse_key_values(text, "cfg").unwrap();
        assert_eq!(p, pairs(&[("n", "40"), ("re_min", "-1")]));
        assert!(parse_key_values("n 40", "cfg").is_err());
    }

    #[test]
    fn resolution_alignment() {
        let cfg = RunConfig {
            edge: 2.5,
            ..RunConfig::default()
        };
        assert!(cfg.check_resolution(2).is_ok());
        let err = cfg.check_resolution(3).unwrap_err();
        assert!(err.to_string().contains("n=4"), "{err}");
    }

    #[test]
    fn default_spacing_targets_a_million_points() {
        let cfg = RunConfig::default();
        let h = cfg.spacing_for(100, 4.0).unwrap();
        assert!((4.0 / (h * h) - 1e6).abs() < 1.0);
    }

    #[test]
    fn missing_potential_file_names_the_path() {
        let cfg = RunConfig {
            potential: "file".into(),
            potential_file: Some(PathBuf::from("/nonexistent/q.dat")),
            ..RunConfig::default()
        };
        let err = cfg.potential().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/q.dat"));
    }
}
