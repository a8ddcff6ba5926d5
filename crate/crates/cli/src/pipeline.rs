//! The pipeline stages behind each subcommand.
//!
//! Stages read their inputs through a [`Workspace`] and stage their outputs
//! in it; nothing touches the disk until [`Workspace::commit`], so a failing
//! command leaves the output directory as it was.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use regiofit::dynamics::peak_step;
use regiofit::identify::{default_weights, identify, IdentifiedModel, IdentifyError, ModelDocument, RegionWeights};
use regiofit::ingest::{
    group_series, parse_source, read_canonical, series_to_records, write_canonical, CanonicalRecord,
    SourceAdapterConfig,
};
use regiofit::lagfit::{lag_table_csv, validate_all, LagScaleFit, PairFailure, ValidationReport};
use regiofit::prep::{moving_average, prepare_region, LinearCorrection, RegionInputs};
use regiofit::{DailySeries, FitWindow, Indicator, RegionCode};
use serde::Serialize;

use crate::config::{PipelineConfig, WeightsMode};
use crate::svg::{self, Chart, Line};
use crate::CliError;

pub const CANONICAL_DIR: &str = "canonical";
pub const DERIVED: &str = "derived.csv";
pub const CORRECTIONS: &str = "corrections.json";
pub const MODEL: &str = "model.json";
pub const TRAJECTORIES: &str = "trajectories.csv";
pub const SIMULATION: &str = "simulation.csv";
pub const LAG_CSV: &str = "lag_table.csv";
pub const LAG_JSON: &str = "lag_table.json";
pub const PLOTS_DIR: &str = "plots";
pub const INDEX: &str = "index.html";

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Output directory view with staged, not yet written, files.
pub struct Workspace {
    root: PathBuf,
    staged: BTreeMap<PathBuf, Vec<u8>>,
}

impl Workspace {
    pub fn new(root: PathBuf) -> Self {
        Self {
            root,
            staged: BTreeMap::new(),
        }
    }

    pub fn stage(&mut self, rel: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.staged.insert(rel.into(), bytes.into());
    }

    pub fn read(&self, rel: &Path) -> Result<Vec<u8>, CliError> {
        if let Some(bytes) = self.staged.get(rel) {
            return Ok(bytes.clone());
        }
        let path = self.root.join(rel);
        std::fs::read(&path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
    }

    /// Files directly inside `dir` with the given extension, staged or on disk.
    pub fn list(&self, dir: &str, ext: &str) -> Vec<PathBuf> {
        let mut names: BTreeSet<PathBuf> = self
            .staged
            .keys()
            .filter(|p| p.parent() == Some(Path::new(dir)))
            .cloned()
            .collect();
        if let Ok(entries) = std::fs::read_dir(self.root.join(dir)) {
            for entry in entries.flatten() {
                if entry.path().is_file() {
                    names.insert(Path::new(dir).join(entry.file_name()));
                }
            }
        }
        names
            .into_iter()
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
            .collect()
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        for (rel, bytes) in self.staged {
            let path = self.root.join(&rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| input(format!("cannot create {}: {e}", parent.display())))?;
            }
            std::fs::write(&path, bytes).map_err(|e| input(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn read_records(ws: &Workspace, rel: &Path) -> Result<Vec<CanonicalRecord>, CliError> {
    let bytes = ws.read(rel)?;
    read_canonical(&bytes).map_err(|e| input(format!("{}: line {}: {}", rel.display(), e.line, e.message)))
}

/// Every canonical source file, concatenated.
fn load_canonical(ws: &Workspace) -> Result<Vec<CanonicalRecord>, CliError> {
    let files = ws.list(CANONICAL_DIR, "csv");
    if files.is_empty() {
        return Err(input(format!("no canonical files under {CANONICAL_DIR}/; run `ingest` first")));
    }
    let mut all = Vec::new();
    for f in files {
        all.extend(read_records(ws, &f)?);
    }
    Ok(all)
}

fn series_map(records: &[CanonicalRecord]) -> Result<BTreeMap<(RegionCode, Indicator), DailySeries>, CliError> {
    let grouped = group_series(records).map_err(|e| input(e.to_string()))?;
    Ok(grouped.into_iter().map(|(k, v)| (k, v.series)).collect())
}

pub fn ingest(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    if cfg.sources.is_empty() {
        return Err(input("the configuration lists no sources"));
    }
    let mut summary = Vec::new();
    let mut names = BTreeSet::new();
    for src in &cfg.sources {
        let path = cfg.data_dir.join(&src.file);
        let raw = std::fs::read(&path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        let adapter_text = std::fs::read_to_string(&src.adapter)
            .map_err(|e| input(format!("cannot read adapter {}: {e}", src.adapter.display())))?;
        let adapter = SourceAdapterConfig::from_json(&adapter_text)
            .map_err(|e| input(format!("{}: {e}", src.adapter.display())))?;
        let outcome = parse_source(&raw, &adapter).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let kept: Vec<CanonicalRecord> = outcome.records.into_iter().filter(|r| cfg.wants(r.region)).collect();
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| input(format!("unusable file name {}", path.display())))?
            .to_string();
        if !names.insert(stem.clone()) {
            return Err(input(format!("two sources share the file stem {stem:?}")));
        }
        summary.push(format!(
            "{}: {} records kept, {} rows outside mainland, {} rows filtered, {} empty cells",
            src.file.display(),
            kept.len(),
            outcome.dropped_region_rows,
            outcome.filtered_rows,
            outcome.skipped_values
        ));
        ws.stage(Path::new(CANONICAL_DIR).join(format!("{stem}.csv")), write_canonical(&kept));
    }
    Ok(summary)
}

#[derive(Serialize)]
struct CorrectionEntry {
    intercept: f64,
    slope: f64,
}

pub fn prep(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    let records = load_canonical(ws)?;
    let grouped = group_series(&records).map_err(|e| input(e.to_string()))?;
    let regions: BTreeSet<RegionCode> = grouped
        .keys()
        .filter(|(r, ind)| *ind == Indicator::Deces2020 && cfg.wants(*r))
        .map(|(r, _)| *r)
        .collect();
    if regions.is_empty() {
        return Err(input("no region with 2020 death counts in the canonical data"));
    }
    let mut summary = Vec::new();
    let mut derived = Vec::new();
    let mut corrections: BTreeMap<RegionCode, CorrectionEntry> = BTreeMap::new();
    for region in regions {
        let get = |ind: Indicator| {
            grouped
                .get(&(region, ind))
                .map(|f| &f.series)
                .ok_or_else(|| input(format!("region {region} has no {ind} data")))
        };
        for ind in [Indicator::Deces2018, Indicator::Deces2019, Indicator::Deces2020, Indicator::IncidDc] {
            if let Some(f) = grouped.get(&(region, ind)) {
                if !f.interpolated.is_empty() {
                    summary.push(format!("region {region}: {ind} has {} interpolated days", f.interpolated.len()));
                }
            }
        }
        let inputs = RegionInputs {
            deaths_2018: get(Indicator::Deces2018)?,
            deaths_2019: get(Indicator::Deces2019)?,
            deaths_2020: get(Indicator::Deces2020)?,
            incid_dc: get(Indicator::IncidDc)?,
            incid_inserm: grouped.get(&(region, Indicator::IncidInserm)).map(|f| &f.series),
        };
        let prepared = prepare_region(inputs, &cfg.smoothing, &cfg.window, cfg.tail_days)
            .map_err(|e| input(format!("region {region}: {e}")))?;
        let LinearCorrection { intercept, slope } = prepared.correction;
        summary.push(format!("region {region}: correction {intercept:.4} + {slope:.4}*(k-k0)"));
        corrections.insert(region, CorrectionEntry { intercept, slope });
        derived.extend(series_to_records(prepared.series()));
    }
    ws.stage(DERIVED, write_canonical(&derived));
    ws.stage(CORRECTIONS, json_bytes(&corrections));
    Ok(summary)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Last day any later stage may need from the model trajectories.
fn horizon(cfg: &PipelineConfig, window: &FitWindow) -> NaiveDate {
    let lag_end = cfg.lag_spec.window.end + Days::new(cfg.lag_spec.eta_min.min(0).unsigned_abs().into());
    window.end.max(lag_end)
}

fn trajectory_records(model: &IdentifiedModel, end: NaiveDate) -> Vec<CanonicalRecord> {
    let days = (end - model.window.start).num_days().max(0) as usize + 1;
    let traj = model.trajectories(days);
    series_to_records(traj.values().flat_map(|(f, d)| [f, d]))
}

pub fn identify_stage(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    let records = read_records(ws, Path::new(DERIVED))?;
    let series = series_map(&records)?;
    let data: BTreeMap<RegionCode, DailySeries> = series
        .into_iter()
        .filter(|((r, ind), _)| *ind == Indicator::MeanExcess20Corr && cfg.wants(*r))
        .map(|((r, _), s)| (r, s))
        .collect();
    if data.is_empty() {
        return Err(input(format!("{DERIVED} holds no mean_excess20_corr series for the selected regions")));
    }
    let windowed = data
        .iter()
        .map(|(r, s)| s.slice(&cfg.window).map(|w| (*r, w)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .map_err(|e| input(e.to_string()))?;
    let weights = match &cfg.weights_mode {
        WeightsMode::AutoInverseMaxSq => default_weights(&windowed).map_err(|e| input(e.to_string()))?,
        WeightsMode::Explicit(map) => {
            let chosen = windowed
                .keys()
                .map(|r| {
                    map.get(r)
                        .map(|q| (*r, *q))
                        .ok_or_else(|| input(format!("no explicit weight for region {r}")))
                })
                .collect::<Result<_, _>>()?;
            RegionWeights::new(chosen).map_err(|e| input(e.to_string()))?
        }
    };
    let model = identify(&windowed, &cfg.window, &weights, &cfg.solver).map_err(|e| match e {
        IdentifyError::Solver(inner) => CliError::Solver(inner.to_string()),
        other => input(other.to_string()),
    })?;
    if !model.cost.is_finite() {
        return Err(CliError::Solver("the search found no finite-cost point".into()));
    }
    let line = format!(
        "a={:.6e} u={:.6e} cost={:.6e} evals={}",
        model.params.a, model.params.u, model.cost, model.solver_evals
    );
    ws.stage(MODEL, json_bytes(&model.to_document()));
    ws.stage(TRAJECTORIES, write_canonical(&trajectory_records(&model, horizon(cfg, &cfg.window))));
    Ok(vec![line])
}

fn load_model(ws: &Workspace) -> Result<IdentifiedModel, CliError> {
    let bytes = ws.read(Path::new(MODEL))?;
    let doc: ModelDocument =
        serde_json::from_slice(&bytes).map_err(|e| input(format!("{MODEL}: {e}")))?;
    IdentifiedModel::from_document(doc).map_err(|e| input(format!("{MODEL}: {e}")))
}

pub fn simulate(cfg: &PipelineConfig, ws: &mut Workspace, days: Option<usize>) -> Result<Vec<String>, CliError> {
    let mut model = load_model(ws)?;
    model.inits.retain(|r, _| cfg.wants(*r));
    if model.inits.is_empty() {
        return Err(input("the model has none of the selected regions"));
    }
    let end = match days {
        Some(0) => return Err(input("--days must be positive")),
        Some(n) => model.window.start + Days::new(n as u64 - 1),
        None => horizon(cfg, &model.window),
    };
    let max_steps = (end - model.window.start).num_days() as usize;
    let summary = model
        .inits
        .iter()
        .map(|(r, init)| match peak_step(&model.params, init, max_steps) {
            Some(k) => format!("region {r}: peak at step {k} ({})", model.window.start + Days::new(k as u64)),
            None => format!("region {r}: no peak within {max_steps} steps"),
        })
        .collect();
    ws.stage(SIMULATION, write_canonical(&trajectory_records(&model, end)));
    Ok(summary)
}

#[derive(Serialize)]
struct LagCell {
    eta: i32,
    mu: f64,
    sse: f64,
    n_overlap: usize,
}

#[derive(Serialize)]
struct LagDocument<'a> {
    cells: BTreeMap<RegionCode, BTreeMap<Indicator, LagCell>>,
    failures: &'a [PairFailure],
}

fn lag_document(report: &ValidationReport) -> Vec<u8> {
    let mut cells: BTreeMap<RegionCode, BTreeMap<Indicator, LagCell>> = BTreeMap::new();
    for fit in &report.fits {
        cells.entry(fit.region).or_default().insert(
            fit.indicator,
            LagCell {
                eta: fit.eta,
                mu: fit.mu,
                sse: fit.sse,
                n_overlap: fit.n_overlap,
            },
        );
    }
    json_bytes(&LagDocument {
        cells,
        failures: &report.failures,
    })
}

struct Validation {
    model: IdentifiedModel,
    model_f: BTreeMap<RegionCode, DailySeries>,
    raw: BTreeMap<(RegionCode, Indicator), DailySeries>,
    smoothed: BTreeMap<(RegionCode, Indicator), DailySeries>,
    report: ValidationReport,
}

fn run_validation(cfg: &PipelineConfig, ws: &Workspace) -> Result<Validation, CliError> {
    let model = load_model(ws)?;
    let end = horizon(cfg, &model.window);
    let days = (end - model.window.start).num_days() as usize + 1;
    let model_f: BTreeMap<RegionCode, DailySeries> = model
        .trajectories(days)
        .into_iter()
        .filter(|(r, _)| cfg.wants(*r))
        .map(|(r, (f, _))| (r, f))
        .collect();
    let records = load_canonical(ws)?;
    let raw: BTreeMap<(RegionCode, Indicator), DailySeries> = series_map(&records)?
        .into_iter()
        .filter(|((r, ind), _)| Indicator::VALIDATION.contains(ind) && model_f.contains_key(r))
        .collect();
    if raw.is_empty() {
        return Err(input("no validation indicators for the modelled regions"));
    }
    let smoothed: BTreeMap<_, _> = raw.iter().map(|(k, s)| (*k, moving_average(s, &cfg.smoothing))).collect();
    let report = validate_all(&model_f, &smoothed, &cfg.lag_spec);
    if report.fits.is_empty() {
        let detail: Vec<String> = report
            .failures
            .iter()
            .map(|f| format!("{}/{}: {}", f.region, f.indicator, f.error))
            .collect();
        return Err(input(format!("every lag fit failed: {}", detail.join("; "))));
    }
    Ok(Validation {
        model,
        model_f,
        raw,
        smoothed,
        report,
    })
}

pub fn validate(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    let v = run_validation(cfg, ws)?;
    let mut summary = vec![format!("{} fits, {} failures", v.report.fits.len(), v.report.failures.len())];
    summary.extend(
        v.report
            .failures
            .iter()
            .map(|f| format!("warning: {}/{}: {}", f.region, f.indicator, f.error)),
    );
    ws.stage(LAG_CSV, lag_table_csv(&v.report.fits));
    ws.stage(LAG_JSON, lag_document(&v.report));
    Ok(summary)
}

fn is_smoothed(tag: Indicator) -> bool {
    matches!(
        tag,
        Indicator::MeanExcess20 | Indicator::MeanIncidDc | Indicator::MeanInserm | Indicator::MeanExcess20Corr
    )
}

fn points(s: &DailySeries) -> Vec<(NaiveDate, f64)> {
    s.values().iter().enumerate().map(|(k, v)| (s.date_at(k), *v)).collect()
}

fn series_line(s: &DailySeries) -> Line {
    Line {
        label: s.tag().to_string(),
        points: points(s),
        bold: is_smoothed(s.tag()),
        dashed: false,
    }
}

/// Every series the earlier stages have produced, by region and tag.
fn load_store(ws: &Workspace) -> Result<BTreeMap<(RegionCode, Indicator), DailySeries>, CliError> {
    let mut store = BTreeMap::new();
    if !ws.list(CANONICAL_DIR, "csv").is_empty() {
        store.extend(series_map(&load_canonical(ws)?)?);
    }
    for file in [DERIVED, TRAJECTORIES] {
        if let Ok(bytes) = ws.read(Path::new(file)) {
            let records = read_canonical(&bytes).map_err(|e| input(format!("{file}: line {}: {}", e.line, e.message)))?;
            store.extend(series_map(&records)?);
        }
    }
    Ok(store)
}

fn figure_path(region: RegionCode, name: &str) -> PathBuf {
    Path::new(PLOTS_DIR).join(format!("{region}-{name}.svg"))
}

pub fn plot(cfg: &PipelineConfig, ws: &mut Workspace, names: &[String]) -> Result<Vec<String>, CliError> {
    if names.is_empty() {
        return Err(input("no series requested; pass --series <indicator>"));
    }
    let tags = names
        .iter()
        .map(|n| n.parse::<Indicator>().map_err(|e| input(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let store = load_store(ws)?;
    for tag in &tags {
        if !store.keys().any(|(r, t)| t == tag && cfg.wants(*r)) {
            return Err(input(format!("unknown series {tag}: not present for the selected regions")));
        }
    }
    let regions: BTreeSet<RegionCode> = store
        .keys()
        .filter(|(r, t)| tags.contains(t) && cfg.wants(*r))
        .map(|(r, _)| *r)
        .collect();
    let mut summary = Vec::new();
    let name = tags.iter().map(|t| t.as_str()).collect::<Vec<_>>().join("-");
    for region in regions {
        let lines: Vec<Line> = tags.iter().filter_map(|t| store.get(&(region, *t))).map(series_line).collect();
        let chart = Chart {
            title: format!("{} ({region})", region.name()),
            y_label: "daily value".into(),
            lines,
        };
        let path = figure_path(region, &name);
        summary.push(path.display().to_string());
        ws.stage(path, svg::render(&chart));
    }
    Ok(summary)
}

/// `mu * f(t - eta)` on the dates of `f` shifted by `eta`.
fn shifted_model(f: &DailySeries, fit: &LagScaleFit) -> Vec<(NaiveDate, f64)> {
    points(f)
        .into_iter()
        .map(|(d, v)| {
            let t = if fit.eta >= 0 {
                d + Days::new(fit.eta as u64)
            } else {
                d - Days::new(fit.eta.unsigned_abs().into())
            };
            (t, fit.mu * v)
        })
        .collect()
}

fn clip(points: Vec<(NaiveDate, f64)>, window: &FitWindow) -> Vec<(NaiveDate, f64)> {
    points.into_iter().filter(|(d, _)| window.contains(*d)).collect()
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Runs every stage, draws the standard figures and writes an index page.
pub fn report(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<Vec<String>, CliError> {
    let mut summary = ingest(cfg, ws)?;
    summary.extend(prep(cfg, ws)?);
    summary.extend(identify_stage(cfg, ws)?);
    summary.extend(validate(cfg, ws)?);
    let v = run_validation(cfg, ws)?;
    let store = load_store(ws)?;

    let mut figures: Vec<(RegionCode, String, PathBuf)> = Vec::new();
    for (&region, f) in &v.model_f {
        let pick = |tags: &[Indicator]| -> Vec<Line> {
            tags.iter().filter_map(|t| store.get(&(region, *t))).map(series_line).collect()
        };
        let excess = Chart {
            title: format!("{}: excess deaths and hospital deaths", region.name()),
            y_label: "deaths/day".into(),
            lines: pick(&[Indicator::MeanExcess20, Indicator::MeanIncidDc, Indicator::MeanExcess20Corr]),
        };
        let mut fit_lines = pick(&[Indicator::MeanExcess20Corr]);
        fit_lines.push(Line {
            label: "fhat (identified model)".into(),
            points: clip(points(f), &v.model.window),
            bold: false,
            dashed: false,
        });
        let fit = Chart {
            title: format!("{}: identification over the fit window", region.name()),
            y_label: "deaths/day".into(),
            lines: fit_lines,
        };
        for (name, chart) in [("excess", excess), ("identification", fit)] {
            let path = figure_path(region, name);
            ws.stage(path.clone(), svg::render(&chart));
            figures.push((region, chart.title, path));
        }
        for lag in v.report.fits.iter().filter(|l| l.region == region) {
            let key = (region, lag.indicator);
            let lines = vec![
                Line {
                    label: format!("{} (daily)", lag.indicator),
                    points: clip(points(&v.raw[&key]), &cfg.lag_spec.window),
                    bold: false,
                    dashed: false,
                },
                Line {
                    label: format!("{} (average)", lag.indicator),
                    points: clip(points(&v.smoothed[&key]), &cfg.lag_spec.window),
                    bold: true,
                    dashed: false,
                },
                Line {
                    label: format!("{:.3} * fhat(t - {})", lag.mu, lag.eta),
                    points: clip(shifted_model(f, lag), &cfg.lag_spec.window),
                    bold: false,
                    dashed: true,
                },
            ];
            let chart = Chart {
                title: format!("{}: {}", region.name(), lag.indicator),
                y_label: lag.indicator.to_string(),
                lines,
            };
            let path = figure_path(region, &format!("validation-{}", lag.indicator));
            ws.stage(path.clone(), svg::render(&chart));
            figures.push((region, chart.title, path));
        }
    }

    let mut html = String::from("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>regiofit report</title></head><body>\n");
    let m = &v.model;
    writeln!(
        html,
        "<h1>Identified model</h1>\n<p>a = {:.6e}, u = {:.6e}, cost = {:.6e}, evaluations = {}, window {} to {}</p>",
        m.params.a, m.params.u, m.cost, m.solver_evals, m.window.start, m.window.end
    )
    .unwrap();
    html.push_str("<table border=\"1\"><tr><th>region</th><th>delta0</th><th>f0</th><th>q</th></tr>\n");
    for (r, init) in &m.inits {
        writeln!(
            html,
            "<tr><td>{r} {}</td><td>{:.4}</td><td>{:.4}</td><td>{:.4e}</td></tr>",
            html_escape(r.name()),
            init.delta0,
            init.f0,
            m.weights.get(*r).unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    html.push_str("</table>\n<h1>Lags and scales</h1>\n<table border=\"1\">\n");
    for row in lag_table_csv(&v.report.fits).lines() {
        let cells: Vec<String> = row.split(',').map(|c| format!("<td>{}</td>", html_escape(c))).collect();
        writeln!(html, "<tr>{}</tr>", cells.concat()).unwrap();
    }
    html.push_str("</table>\n");
    writeln!(
        html,
        "<p>Files: <a href=\"{MODEL}\">{MODEL}</a>, <a href=\"{TRAJECTORIES}\">{TRAJECTORIES}</a>, <a href=\"{LAG_CSV}\">{LAG_CSV}</a>, <a href=\"{LAG_JSON}\">{LAG_JSON}</a>, <a href=\"{DERIVED}\">{DERIVED}</a></p>\n<h1>Figures</h1>"
    )
    .unwrap();
    for (region, title, path) in &figures {
        let href = path.display().to_string().replace('\\', "/");
        writeln!(html, "<h2>{region}: {}</h2>\n<img src=\"{href}\" alt=\"{}\">", html_escape(title), html_escape(title)).unwrap();
    }
    html.push_str("</body></html>\n");
    ws.stage(INDEX, html);
    summary.push(format!("{} figures", figures.len()));
    Ok(summary)
}
