//! Batch benchmark: datasets x noise variants x split seeds x methods, with
//! per-run CSV rows, median summary tables, method ranks and curve files.
//!
//! Every run is independent and deterministic given the config; runs are
//! executed on a rayon pool and collected in job order, so the emitted files
//! do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::admm::{write_trace_csv, AdmmConfig};
use crate::dataset::{
    inject_noise, iris, load_csv, load_idx, make_synthetic_fig1, normalize_minmax,
    parse_idx_with_shape, resample_bilinear, split, LabelColumn, LabeledDataset, NoiseSpec,
};
use crate::error::{Error, Result};
use crate::eval::{best_of, dim_sweep_traced, DimAccuracy, ExperimentReport};
use crate::projection::Method;

/// Where a benchmark dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        /// Column name, or a 0-based index. Defaults to `label`, or the last column.
        #[serde(default)]
        label_column: Option<LabelColumn>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// Bilinear resampling target `(rows, cols)`.
        #[serde(default)]
        resample: Option<(usize, usize)>,
        /// Keep only the first `max_samples` images.
        #[serde(default)]
        max_samples: Option<usize>,
    },
    Iris,
    Fig1 {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        with_outliers: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub source: DatasetSource,
    /// Per-dataset cap on the sweep, clipped to the feature count.
    #[serde(default)]
    pub d_max: Option<usize>,
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub n_seeds: usize,
    /// Split seeds are `first_seed, first_seed + 1, ...`.
    pub first_seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            n_seeds: 10,
            first_seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub datasets: Vec<DatasetEntry>,
    pub methods: Vec<Method>,
    /// Global cap on the sweep; a dataset's own `d_max` wins when set.
    #[serde(default)]
    pub d_max: Option<usize>,
    #[serde(default)]
    pub splits: SplitConfig,
    /// Noise variants, each run in addition to the clean one.
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
    #[serde(default)]
    pub admm: AdmmConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub emit_trace: bool,
    /// Worker threads; `None` uses rayon's default.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidParameter("config lists no datasets".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("config lists no methods".into()));
        }
        if self.splits.n_seeds == 0 {
            return Err(Error::InvalidParameter("n_seeds must be at least 1".into()));
        }
        if !(self.splits.train_fraction > 0.0 && self.splits.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction {} outside (0, 1)",
                self.splits.train_fraction
            )));
        }
        if self.d_max == Some(0) || self.datasets.iter().any(|d| d.d_max == Some(0)) {
            return Err(Error::InvalidParameter("d_max must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        self.admm.validate()
    }
}

/// Loads (and optionally min-max normalizes) one dataset entry.
pub fn load_dataset(entry: &DatasetEntry) -> Result<LabeledDataset> {
    let data = match &entry.source {
        DatasetSource::Csv { path, label_column } => {
            load_csv(path, &label_column.clone().unwrap_or_default())?
        }
        DatasetSource::Idx {
            images,
            labels,
            resample,
            max_samples,
        } => {
            let data = match resample {
                None => load_idx(images, labels)?,
                Some(to) => {
                    let img = fs::read(images).map_err(|e| Error::io(images, e))?;
                    let lab = fs::read(labels).map_err(|e| Error::io(labels, e))?;
                    let name = images
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let (data, shape) = parse_idx_with_shape(&name, &img, &lab)?;
                    resample_bilinear(&data, shape, *to)?
                }
            };
            match max_samples {
                Some(m) if *m < data.num_samples() => data.subset(&(0..*m).collect::<Vec<_>>()),
                _ => data,
            }
        }
        DatasetSource::Iris => iris(),
        DatasetSource::Fig1 {
            seed,
            with_outliers,
        } => make_synthetic_fig1(*seed, *with_outliers),
    };
    let data = data.with_name(entry.name.clone());
    Ok(if entry.normalize {
        normalize_minmax(&data)
    } else {
        data
    })
}

/// One (dataset, noise variant, seed, method) run.
#[derive(Debug, Clone)]
struct Job {
    dataset: usize,
    noise: Option<usize>,
    seed: u64,
    method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub dataset: String,
    pub noise: String,
    pub seed: u64,
    pub method: Method,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub reports: Vec<ExperimentReport>,
    pub failures: Vec<RunFailure>,
    pub files: Vec<PathBuf>,
}

pub const CLEAN: &str = "clean";

fn noise_tag(spec: Option<&NoiseSpec>) -> String {
    spec.map(NoiseSpec::label)
        .unwrap_or_else(|| CLEAN.to_string())
}

/// Noise seeds are offset by the split seed so every split gets its own draw.
fn noise_for_split(spec: &NoiseSpec, split_seed: u64) -> NoiseSpec {
    NoiseSpec {
        seed: spec.seed.wrapping_add(split_seed),
        ..spec.clone()
    }
}

fn run_job(
    job: &Job,
    data: &LabeledDataset,
    d_max: usize,
    cfg: &RunConfig,
) -> Result<(ExperimentReport, crate::eval::SweepTraces)> {
    let (train, test) = split(
        data,
        cfg.splits.train_fraction,
        job.seed,
        cfg.splits.stratified,
    )?;
    let noise = job.noise.map(|k| &cfg.noise[k]);
    let train = match noise {
        Some(spec) => inject_noise(&train, &noise_for_split(spec, job.seed))?,
        None => train,
    };
    let admm = AdmmConfig {
        seed: cfg.admm.seed.wrapping_add(job.seed),
        ..cfg.admm
    };
    let (mut report, traces) = dim_sweep_traced(&train, &test, job.method, d_max, &admm)?;
    report = report.with_noise(noise);
    report.seed = job.seed;
    report.dataset = data.name().to_string();
    Ok((report, traces))
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Ranks, 1 = best (highest score); tied scores share their average rank.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Median best accuracy and median best dimension across seeds, per
/// (noise, dataset, method), in config order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryCell {
    pub noise: String,
    pub dataset: String,
    pub method: Method,
    pub runs: usize,
    pub median_accuracy: f64,
    pub median_dim: f64,
}

pub fn summarize(
    reports: &[ExperimentReport],
    datasets: &[String],
    noises: &[String],
    methods: &[Method],
) -> Vec<SummaryCell> {
    let mut cells = Vec::new();
    for noise in noises {
        for dataset in datasets {
            for &method in methods {
                let group: Vec<&ExperimentReport> = reports
                    .iter()
                    .filter(|r| {
                        &r.dataset == dataset && r.method == method && noise_of(r) == noise.as_str()
                    })
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let acc: Vec<f64> = group.iter().map(|r| r.best.accuracy).collect();
                let dim: Vec<f64> = group.iter().map(|r| r.best.dim as f64).collect();
                cells.push(SummaryCell {
                    noise: noise.clone(),
                    dataset: dataset.clone(),
                    method,
                    runs: group.len(),
                    median_accuracy: median(&acc),
                    median_dim: median(&dim),
                });
            }
        }
    }
    cells
}

fn noise_of(r: &ExperimentReport) -> &str {
    r.noise.as_deref().unwrap_or(CLEAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub noise: String,
    pub dataset: String,
    pub method: Method,
    pub rank: f64,
}

/// Per-dataset ranks by median best accuracy, then one `average` row per
/// method over the datasets where every method has a result.
pub fn rank_methods(cells: &[SummaryCell], methods: &[Method]) -> Vec<RankRow> {
    let mut rows = Vec::new();
    let mut groups: Vec<(String, String)> = Vec::new();
    for c in cells {
        let key = (c.noise.clone(), c.dataset.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut sums: BTreeMap<(String, Method), (f64, usize)> = BTreeMap::new();
    let mut noises: Vec<String> = Vec::new();
    for (noise, dataset) in &groups {
        if !noises.contains(noise) {
            noises.push(noise.clone());
        }
        let scores: Option<Vec<f64>> = methods
            .iter()
            .map(|&m| {
                cells
                    .iter()
                    .find(|c| &c.noise == noise && &c.dataset == dataset && c.method == m)
                    .map(|c| c.median_accuracy)
            })
            .collect();
        let Some(scores) = scores else { continue };
        for (&method, rank) in methods.iter().zip(average_ranks(&scores)) {
            rows.push(RankRow {
                noise: noise.clone(),
                dataset: dataset.clone(),
                method,
                rank,
            });
            let e = sums.entry((noise.clone(), method)).or_insert((0.0, 0));
            e.0 += rank;
            e.1 += 1;
        }
    }
    for noise in &noises {
        for &method in methods {
            if let Some(&(sum, count)) = sums.get(&(noise.clone(), method)) {
                rows.push(RankRow {
                    noise: noise.clone(),
                    dataset: "average".into(),
                    method,
                    rank: sum / count as f64,
                });
            }
        }
    }
    rows
}

/// Median accuracy per dimension across seeds, one column per method.
fn curve_rows(
    reports: &[ExperimentReport],
    dataset: &str,
    noise: &str,
    methods: &[Method],
) -> Vec<Vec<String>> {
    let group: Vec<&ExperimentReport> = reports
        .iter()
        .filter(|r| r.dataset == dataset && noise_of(r) == noise)
        .collect();
    let d_max = group.iter().map(|r| r.per_dim.len()).max().unwrap_or(0);
    (1..=d_max)
        .map(|d| {
            let mut row = vec![d.to_string()];
            for &m in methods {
                let acc: Vec<f64> = group
                    .iter()
                    .filter(|r| r.method == m)
                    .filter_map(|r| r.per_dim.iter().find(|e| e.dim == d).map(|e| e.accuracy))
                    .collect();
                row.push(if acc.is_empty() {
                    String::new()
                } else {
                    median(&acc).to_string()
                });
            }
            row
        })
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Safe file-name fragment.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Serialize)]
struct RunRow<'a> {
    dataset: &'a str,
    noise: &'a str,
    seed: u64,
    method: Method,
    dim: usize,
    accuracy: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    started_unix: u64,
    finished_unix: u64,
    config: &'a RunConfig,
    runs: usize,
    failures: &'a [RunFailure],
    files: Vec<String>,
}

/// Writes `runs.csv`: one row per (dataset, noise, seed, method, dim).
pub fn write_runs_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    for r in reports {
        for e in &r.per_dim {
            wtr.serialize(RunRow {
                dataset: &r.dataset,
                noise: noise_of(r),
                seed: r.seed,
                method: r.method,
                dim: e.dim,
                accuracy: e.accuracy,
            })
            .map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Re-reads a `runs.csv` into per-run curves, keyed as in the file.
pub fn read_runs_csv(path: &Path) -> Result<Vec<ExperimentReport>> {
    #[derive(Deserialize)]
    struct Row {
        dataset: String,
        noise: String,
        seed: u64,
        method: Method,
        dim: usize,
        accuracy: f64,
    }
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    let mut out: Vec<ExperimentReport> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(csv_err)?;
        let noise = (row.noise != CLEAN).then(|| row.noise.clone());
        let entry = DimAccuracy {
            dim: row.dim,
            accuracy: row.accuracy,
        };
        match out.last_mut() {
            Some(r)
                if r.dataset == row.dataset
                    && r.noise == noise
                    && r.seed == row.seed
                    && r.method == row.method =>
            {
                r.per_dim.push(entry)
            }
            _ => out.push(ExperimentReport {
                method: row.method,
                per_dim: vec![entry],
                best: entry,
                dataset: row.dataset,
                noise,
                seed: row.seed,
            }),
        }
    }
    for r in &mut out {
        r.best = best_of(&r.per_dim).expect("nonempty curve");
    }
    Ok(out)
}

/// Runs every job of `cfg` and writes the report files into `cfg.output`.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let started = unix_seconds();
    let datasets: Vec<LabeledDataset> = cfg
        .datasets
        .iter()
        .map(load_dataset)
        .collect::<Result<_>>()?;
    let out_dir = &cfg.output;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut jobs = Vec::new();
    for (k, _) in datasets.iter().enumerate() {
        for noise in std::iter::once(None).chain((0..cfg.noise.len()).map(Some)) {
            for s in 0..cfg.splits.n_seeds as u64 {
                for &method in &cfg.methods {
                    jobs.push(Job {
                        dataset: k,
                        noise,
                        seed: cfg.splits.first_seed.wrapping_add(s),
                        method,
                    });
                }
            }
        }
    }
    let d_max_of = |k: usize| {
        let n = datasets[k].num_features();
        cfg.datasets[k].d_max.or(cfg.d_max).unwrap_or(n).min(n)
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cfg.workers {
            b = b.num_threads(w);
        }
        b.build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
    };
    let results: Vec<Result<(ExperimentReport, crate::eval::SweepTraces)>> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|job| run_job(job, &datasets[job.dataset], d_max_of(job.dataset), cfg))
            .collect()
    });

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut files = Vec::new();
    let trace_dir = out_dir.join("traces");
    for (job, result) in jobs.iter().zip(results) {
        let noise = noise_tag(job.noise.map(|k| &cfg.noise[k]));
        match result {
            Ok((report, traces)) => {
                if cfg.emit_trace && !traces.is_empty() {
                    fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
                    for (d, trace) in &traces {
                        let path = trace_dir.join(format!(
                            "{}__{}__seed{}__{}__d{d}.csv",
                            slug(&report.dataset),
                            slug(&noise),
                            job.seed,
                            job.method
                        ));
                        write_trace_csv(&path, trace)?;
                        files.push(path);
                    }
                }
                reports.push(report);
            }
            Err(e) => {
                log::warn!(
                    "run failed: {} {noise} seed={} {}: {e}",
                    datasets[job.dataset].name(),
                    job.seed,
                    job.method
                );
                failures.push(RunFailure {
                    dataset: datasets[job.dataset].name().to_string(),
                    noise,
                    seed: job.seed,
                    method: job.method,
                    error: e.to_string(),
                });
            }
        }
    }

    let runs_path = out_dir.join("runs.csv");
    write_runs_csv(&runs_path, &reports)?;
    files.push(runs_path);

    let names: Vec<String> = datasets.iter().map(|d| d.name().to_string()).collect();
    let noises: Vec<String> = std::iter::once(CLEAN.to_string())
        .chain(cfg.noise.iter().map(NoiseSpec::label))
        .collect();
    let cells = summarize(&reports, &names, &noises, &cfg.methods);
    for noise in &noises {
        let path = out_dir.join(format!("summary_{}.csv", slug(noise)));
        let mut wtr = csv_writer(&path)?;
        let mut header = vec!["dataset".to_string()];
        header.extend(cfg.methods.iter().map(|m| m.to_string()));
        wtr.write_record(&header).map_err(csv_err)?;
        for name in &names {
            let mut row = vec![name.clone()];
            for &m in &cfg.methods {
                row.push(
                    cells
                        .iter()
                        .find(|c| &c.noise == noise && &c.dataset == name && c.method == m)
                        .map(|c| format!("{:.2} ({})", c.median_accuracy, c.median_dim))
                        .unwrap_or_default(),
                );
            }
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    let cells_path = out_dir.join("summary_cells.csv");
    let mut wtr = csv_writer(&cells_path)?;
    for c in &cells {
        wtr.serialize(c).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(&cells_path, e))?;
    files.push(cells_path);

    let ranks_path = out_dir.join("ranks.csv");
    let mut wtr = csv_writer(&ranks_path)?;
    for row in rank_methods(&cells, &cfg.methods) {
        wtr.serialize(row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(&ranks_path, e))?;
    files.push(ranks_path);

    let curve_dir = out_dir.join("curves");
    fs::create_dir_all(&curve_dir).map_err(|e| Error::io(&curve_dir, e))?;
    for name in &names {
        for noise in &noises {
            let path = curve_dir.join(format!("{}__{}.csv", slug(name), slug(noise)));
            let mut wtr = csv_writer(&path)?;
            let mut header = vec!["dim".to_string()];
            header.extend(cfg.methods.iter().map(|m| m.to_string()));
            wtr.write_record(&header).map_err(csv_err)?;
            for row in curve_rows(&reports, name, noise, &cfg.methods) {
                wtr.write_record(&row).map_err(csv_err)?;
            }
            wtr.flush().map_err(|e| Error::io(&path, e))?;
            files.push(path);
        }
    }

    let failures_path = out_dir.join("failures.csv");
    let mut wtr = csv_writer(&failures_path)?;
    if failures.is_empty() {
        wtr.write_record(["dataset", "noise", "seed", "method", "error"])
            .map_err(csv_err)?;
    }
    for f in &failures {
        wtr.serialize(f).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(&failures_path, e))?;
    files.push(failures_path);

    let manifest_path = out_dir.join("manifest.json");
    let manifest = Manifest {
        tool: "blda",
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_seconds(),
        config: cfg,
        runs: jobs.len(),
        failures: &failures,
        files: files
            .iter()
            .map(|p| p.strip_prefix(out_dir).unwrap_or(p).display().to_string())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json(e.to_string()))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    files.push(manifest_path);

    Ok(BenchOutcome {
        reports,
        failures,
        files,
    })
}
