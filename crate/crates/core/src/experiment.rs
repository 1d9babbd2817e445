//! Prequential experiments over feature tables: single runs, leave-k-out and
//! per-channel sweeps, and the report files behind the CLI verbs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_recording, feature_names, BandTable, Normalizer, WindowFeatures, WindowSpec};
use crate::io::{FeatureTable, Manifest};
use crate::metrics::{interpretability, ConfusionMatrix, StreamMetrics, TraceRow};
use crate::network::{format_rules, HyperParams, Model};
use crate::selection::{leave_k_out_schedule, score_features, FeatureRanking};
use crate::synth::{box_stream, BoxStreamConfig};
use crate::ClassId;

/// Settings of one prequential run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Feature matrix CSV.
    pub features: PathBuf,
    /// Restrict to these channels (all when absent).
    #[serde(default)]
    pub channels: Option<Vec<String>>,
    /// Ranking JSON written by `rank`; with `n_features`, keeps the top
    /// features in ranking order.
    #[serde(default)]
    pub ranking: Option<PathBuf>,
    #[serde(default)]
    pub n_features: Option<usize>,
    #[serde(default)]
    pub hyper_params: HyperParams,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    pub output_dir: PathBuf,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Loads the feature table and applies the channel and ranking filters.
    pub fn load_features(&self) -> Result<FeatureTable> {
        let table = FeatureTable::load(&self.features)?;
        let mut columns: Vec<usize> = match &self.channels {
            Some(chs) => {
                let mut cols = Vec::new();
                for ch in chs {
                    let found = table.channel_columns(ch);
                    if found.is_empty() {
                        return Err(Error::MissingChannel(ch.clone()));
                    }
                    cols.extend(found);
                }
                cols
            }
            None => (0..table.names.len()).collect(),
        };
        if let Some(path) = &self.ranking {
            let ranking = load_ranking(path)?;
            let ranked: Vec<usize> = ranking
                .features
                .iter()
                .filter_map(|f| table.names.iter().position(|n| *n == f.meta.name))
                .filter(|i| columns.contains(i))
                .collect();
            columns = ranked;
        }
        if let Some(k) = self.n_features {
            if k == 0 || k > columns.len() {
                return Err(Error::Invalid(format!("n_features = {k} but {} features are available", columns.len())));
            }
            columns.truncate(k);
        }
        table.select(&columns)
    }
}

pub fn load_ranking(path: &Path) -> Result<FeatureRanking> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Summary of a run. Contains nothing time-dependent, so equal inputs give
/// byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instances: usize,
    pub features: Vec<String>,
    pub hyper_params: HyperParams,
    pub seed: u64,
    pub final_accuracy: f64,
    pub mean_accuracy: f64,
    pub c_avg: f64,
    pub final_granules: usize,
    pub final_rho: f64,
    /// Absent while the model has no granules.
    pub final_ii: Option<f64>,
    pub mean_ii: Option<f64>,
    pub confusion: ConfusionMatrix,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: Vec<TraceRow>,
    /// Wall-clock nanoseconds spent in predict + learn, per instance.
    pub latency_ns: Vec<u64>,
    pub model: Model,
}

/// Streams the table in row order: each instance is normalized, predicted,
/// scored and then learned.
pub fn run_table(table: &FeatureTable, hyper_params: &HyperParams, seed: u64, normalize: bool) -> Result<RunOutput> {
    if table.rows.is_empty() {
        return Err(Error::Invalid("feature table has no rows".into()));
    }
    let mut classes: Vec<ClassId> = table.labels();
    classes.sort_unstable();
    classes.dedup();
    let mut model = Model::new(hyper_params.clone())?.with_class_universe(classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normalizer = Normalizer::new();
    let mut metrics = StreamMetrics::new(hyper_params.hr);
    let mut trace = Vec::with_capacity(table.rows.len());
    let mut latency_ns = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let x = if normalize {
            normalizer.normalize(&row.values)?
        } else {
            row.values.clone()
        };
        let start = Instant::now();
        let outcome = model.learn(&x, row.label, &mut rng)?;
        latency_ns.push(start.elapsed().as_nanos() as u64);
        trace.push(metrics.record(row.label, outcome.predicted_class, &model));
    }
    let report = RunReport {
        instances: table.rows.len(),
        features: table.names.clone(),
        hyper_params: hyper_params.clone(),
        seed,
        final_accuracy: metrics.acc,
        mean_accuracy: mean(trace.iter().map(|t| t.acc)),
        c_avg: metrics.c_avg,
        final_granules: model.granule_count(),
        final_rho: model.rho,
        final_ii: interpretability(&model).map(|r| r.ii),
        mean_ii: metrics.mean_ii(),
        confusion: metrics.confusion,
    };
    Ok(RunOutput {
        report,
        trace,
        latency_ns,
        model,
    })
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let table = config.load_features()?;
    run_table(&table, &config.hyper_params, config.seed, config.normalize)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("h,acc,c,c_avg,rho,ii\n");
    for t in trace {
        let _ = writeln!(out, "{},{:?},{},{:?},{:?},{:?}", t.h, t.acc, t.c_now, t.c_avg, t.rho, t.ii);
    }
    out
}

/// Writes `report.json`, `trace.csv`, `timing.csv`, `model.json`,
/// `rules.json` and `rules.txt` into `dir`.
pub fn write_run(dir: &Path, output: &RunOutput) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("report.json"), &serde_json::to_string_pretty(&output.report)?)?;
    write(&dir.join("trace.csv"), &trace_csv(&output.trace))?;
    let mut timing = String::from("h,nanos\n");
    for (h, ns) in output.latency_ns.iter().enumerate() {
        let _ = writeln!(timing, "{},{}", h + 1, ns);
    }
    write(&dir.join("timing.csv"), &timing)?;
    output.model.save(&dir.join("model.json"))?;
    let rules = output.model.extract_rules();
    write(&dir.join("rules.json"), &serde_json::to_string_pretty(&rules)?)?;
    write(&dir.join("rules.txt"), &format_rules(&rules, Some(&output.report.features)))?;
    Ok(())
}

/// One cell of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho0: f64,
    pub hr: u64,
    pub eta: f64,
    /// Source feature file for per-channel sweeps, empty otherwise.
    pub source: String,
    /// Channel for per-channel sweeps, empty otherwise.
    pub channel: String,
    pub n_features: usize,
    pub accuracy_percent: f64,
    pub c_avg: f64,
    pub ii: Option<f64>,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub hyper_sets: Vec<HyperParams>,
    pub seed: u64,
    pub normalize: bool,
}

struct Cell {
    hyper: usize,
    source: String,
    channel: String,
    table: FeatureTable,
}

fn run_cells(plan: &SweepPlan, cells: Vec<Cell>) -> Result<Vec<SweepRow>> {
    cells
        .into_par_iter()
        .map(|cell| {
            let hp = &plan.hyper_sets[cell.hyper];
            let out = run_table(&cell.table, hp, plan.seed, plan.normalize)?;
            Ok(SweepRow {
                rho0: hp.rho0,
                hr: hp.hr,
                eta: hp.eta,
                source: cell.source,
                channel: cell.channel,
                n_features: cell.table.names.len(),
                accuracy_percent: 100.0 * out.report.final_accuracy,
                c_avg: out.report.c_avg,
                ii: out.report.final_ii,
                report: out.report,
            })
        })
        .collect()
}

/// Leave-k-out sweep: one run per nested prefix of `order`, for every
/// hyper-parameter set.
pub fn sweep_leave_k_out(table: &FeatureTable, order: &[usize], k: usize, min_size: usize, plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    let subsets = leave_k_out_schedule(order, k, min_size)?;
    let mut cells = Vec::new();
    for hyper in 0..plan.hyper_sets.len() {
        for subset in &subsets {
            cells.push(Cell {
                hyper,
                source: String::new(),
                channel: String::new(),
                table: table.select(subset)?,
            });
        }
    }
    run_cells(plan, cells)
}

/// One run per channel of every source table, using only that channel's
/// features.
pub fn sweep_per_channel(sources: &[(String, FeatureTable)], plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    let mut cells = Vec::new();
    for hyper in 0..plan.hyper_sets.len() {
        for (name, table) in sources {
            for channel in table.channels() {
                cells.push(Cell {
                    hyper,
                    source: name.clone(),
                    channel: channel.clone(),
                    table: table.select(&table.channel_columns(&channel))?,
                });
            }
        }
    }
    run_cells(plan, cells)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("rho0,hr,eta,source,channel,n_features,acc_percent,c_avg,ii\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{},{:?},{},{},{},{:.2},{:.2},{:.6}",
            r.rho0, r.hr, r.eta, r.source, r.channel, r.n_features, r.accuracy_percent, r.c_avg, r.ii.unwrap_or(f64::NAN)
        );
    }
    out
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("sweep.csv"), &sweep_csv(rows))?;
    write(&dir.join("sweep.json"), &serde_json::to_string_pretty(rows)?)
}

/// Extracts the feature table of every recording in the manifest, keeping
/// manifest order.
pub fn extract(manifest: &Manifest, window: WindowSpec, channels: Option<&[String]>) -> Result<FeatureTable> {
    let channels: Vec<String> = channels.map(<[String]>::to_vec).unwrap_or_else(|| manifest.channels());
    let bands = BandTable::default();
    let per_recording: Vec<Vec<WindowFeatures>> = manifest
        .recordings
        .par_iter()
        .map(|entry| {
            let rec = manifest.load_recording(entry, &channels)?;
            extract_recording(&rec, window, &bands)
        })
        .collect::<Result<_>>()?;
    Ok(FeatureTable {
        names: feature_names(&channels, &bands),
        rows: per_recording.into_iter().flatten().collect(),
    })
}

pub fn rank(table: &FeatureTable, lambda: f64) -> Result<FeatureRanking> {
    score_features(&table.columns(), &table.names, &table.labels(), lambda)
}

pub fn write_ranking(dir: &Path, ranking: &FeatureRanking) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("ranking.csv"), &ranking.to_csv())?;
    write(&dir.join("ranking.json"), &serde_json::to_string_pretty(ranking)?)?;
    let mut bands = String::from("band,total,left,right\n");
    for b in &ranking.band_sums {
        let _ = writeln!(bands, "{},{:.6},{:.6},{:.6}", b.band.name(), b.total, b.left, b.right);
    }
    write(&dir.join("band_sums.csv"), &bands)
}

/// Synthetic box stream as a feature table (columns `x1..xn`).
pub fn synth_table(config: &BoxStreamConfig) -> Result<FeatureTable> {
    let samples = box_stream(config)?;
    Ok(FeatureTable {
        names: (1..=config.dim()).map(|j| format!("x{j}")).collect(),
        rows: samples
            .into_iter()
            .enumerate()
            .map(|(i, s)| WindowFeatures {
                subject: "synth".into(),
                game: "0".into(),
                window: i,
                label: s.label,
                values: s.x,
            })
            .collect(),
    })
}

/// Plot-ready files derived from a run directory.
pub fn report(run_dir: &Path, out_dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    let trace_path = run_dir.join("trace.csv");
    if !trace_path.exists() {
        return Err(Error::Invalid(format!("missing trace: {}", trace_path.display())));
    }
    let trace = read_trace(&trace_path)?;
    let report_path = run_dir.join("report.json");
    let text = std::fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
    let run: RunReport = serde_json::from_str(&text)?;

    create_dir(out_dir)?;
    let mut written = Vec::new();
    let mut acc = String::from("h,acc\n");
    let mut gran = String::from("h,c,c_avg,rho\n");
    for t in &trace {
        let _ = writeln!(acc, "{},{:?}", t.h, t.acc);
        let _ = writeln!(gran, "{},{},{:?},{:?}", t.h, t.c_now, t.c_avg, t.rho);
    }
    for (name, body) in [
        ("accuracy_curve.csv", acc),
        ("granules_curve.csv", gran),
        ("confusion.csv", run.confusion.to_csv()),
    ] {
        let p = out_dir.join(name);
        write(&p, &body)?;
        written.push(p);
    }
    if svg {
        let p = out_dir.join("evolution.svg");
        write(&p, &evolution_svg(&trace))?;
        written.push(p);
    }
    Ok(written)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Malformed {
                    path: path.to_path_buf(),
                    row: r + 2,
                    column: i.to_string(),
                    message: "bad trace value".into(),
                })
        };
        out.push(TraceRow {
            h: parse(0)? as u64,
            acc: parse(1)?,
            c_now: parse(2)? as usize,
            c_avg: parse(3)?,
            rho: parse(4)?,
            ii: parse(5)?,
        });
    }
    Ok(out)
}

/// Accuracy (blue) and granule count (orange, scaled to its maximum) over
/// time as a bare SVG polyline chart.
fn evolution_svg(trace: &[TraceRow]) -> String {
    let (w, h) = (800.0, 300.0);
    let n = trace.len().max(2) as f64 - 1.0;
    let c_max = trace.iter().map(|t| t.c_now).max().unwrap_or(1).max(1) as f64;
    let line = |f: &dyn Fn(&TraceRow) -> f64| {
        trace
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{:.1},{:.1}", i as f64 / n * w, h - f(t) * h))
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <polyline fill=\"none\" stroke=\"#1f77b4\" points=\"{}\"/>\n\
         <polyline fill=\"none\" stroke=\"#ff7f0e\" points=\"{}\"/>\n</svg>\n",
        line(&|t| t.acc),
        line(&|t| t.c_now as f64 / c_max)
    )
}
