//! Experiment orchestration: seed management, the valid-run collection
//! protocol, aggregation into summary tables, and CSV/SVG/JSON output.
//!
//! Every run owns an RngStream derived from (master seed, dimension index,
//! run index), so a config reruns to identical tables no matter how runs are
//! scheduled.  "Valid" always means training accuracy exactly 1; the wide
//! aggregates additionally keep only runs whose |cos theta2| exceeds 0.9,
//! mirroring the published protocol.

use crate::analysis::{self, CompressionReport, ReportVectors, RunMetadata};
use crate::attacks::{iterative_gradient_attack, AttackOutcome};
use crate::datagen::{gen_hypercube, DatasetKind};
use crate::error::{Error, Result};
use crate::matrix;
use crate::models::{ideal_hypercube_net, train, Activation, MlpModel, TrainConfig, TrainReport};
use crate::reference;
use crate::rng::RngStream;
use crate::stats;
use crate::svg::LineChart;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table1,
    Table2,
    Fig2Trend,
    Table3Rho,
    Table4Perturb,
    Custom,
}

impl ExperimentKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::Table2 => "table2",
            ExperimentKind::Fig2Trend => "fig2_trend",
            ExperimentKind::Table3Rho => "table3_rho",
            ExperimentKind::Table4Perturb => "table4_perturb",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// Experiment description as read from a JSON config file.  Unset fields
/// fall back to the desk-scale defaults documented on the accessors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_list: Option<Vec<usize>>,
    /// Explicit per-run seeds; mutually exclusive with `d_list`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Seed budget per dimension when `seeds` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Stop early once this many valid runs are collected (per dimension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_valid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    /// Generator-chain depth; only meaningful for chain datasets in data
    /// generation configs, carried here so one config schema serves the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_alpha: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_inputs_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            d: None,
            d_list: None,
            seeds: None,
            seed_count: None,
            master_seed: None,
            target_valid: None,
            hidden_width: None,
            train: None,
            column_scale: None,
            sample_count: None,
            t: None,
            n_alpha: None,
            attack_inputs_per_class: None,
            attack_step: None,
            attack_max_steps: None,
            output_dir: None,
        }
    }

    fn d_values(&self) -> Vec<usize> {
        if let Some(list) = &self.d_list {
            return list.clone();
        }
        let default_d = match self.experiment {
            ExperimentKind::Table4Perturb => 17,
            ExperimentKind::Fig2Trend => return vec![8, 10, 12, 14, 16],
            _ => 12,
        };
        vec![self.d.unwrap_or(default_d)]
    }

    fn budget(&self) -> usize {
        if let Some(seeds) = &self.seeds {
            return seeds.len();
        }
        self.seed_count.unwrap_or(200)
    }

    fn target_valid(&self) -> usize {
        self.target_valid.unwrap_or(match self.experiment {
            ExperimentKind::Table2 | ExperimentKind::Table3Rho => 20,
            _ => 10,
        })
    }

    fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(1)
    }

    fn hidden_width(&self) -> usize {
        self.hidden_width.unwrap_or(256)
    }

    fn column_scale(&self) -> f64 {
        self.column_scale.unwrap_or(5.0)
    }

    fn sample_count(&self, d: usize) -> usize {
        self.sample_count
            .unwrap_or_else(|| (1usize << d.min(14)).min(1usize << 14))
    }

    fn n_alpha(&self) -> usize {
        self.n_alpha.unwrap_or(10)
    }

    fn base_train(&self) -> TrainConfig {
        self.train.clone().unwrap_or(TrainConfig {
            learning_rate: 1e-2,
            batch_size: Some(128),
            ..TrainConfig::new(0)
        })
    }

    fn seed_for(&self, d_index: usize, run_index: usize) -> u64 {
        if let Some(seeds) = &self.seeds {
            return seeds[run_index];
        }
        RngStream::new(self.master_seed())
            .child(d_index as u64)
            .child(run_index as u64)
            .seed()
    }

    fn validate(&self) -> Result<()> {
        if self.budget() == 0 {
            return Err(Error::Usage("empty seed set: nothing to run".into()));
        }
        if self.seeds.is_some() && self.d_list.is_some() {
            return Err(Error::Usage(
                "explicit seeds cannot be combined with d_list".into(),
            ));
        }
        for &d in &self.d_values() {
            if !(2..=63).contains(&d) {
                return Err(Error::Usage(format!("d must lie in [2, 63], got {d}")));
            }
            if let Some(s) = self.sample_count {
                if (s as u128) > (1u128 << d) {
                    return Err(Error::Usage(format!(
                        "sample_count {s} exceeds the 2^{d} available points"
                    )));
                }
                if s == 0 {
                    return Err(Error::Usage("sample_count must be positive".into()));
                }
            }
        }
        if self.n_alpha() < 2 {
            return Err(Error::Usage("n_alpha must be at least 2".into()));
        }
        if self.target_valid() == 0 {
            return Err(Error::Usage("target_valid must be at least 1".into()));
        }
        Ok(())
    }
}

/// Immutable parameters a single run was executed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub experiment: ExperimentKind,
    pub d: usize,
    pub hidden_width: usize,
    pub column_scale: f64,
    pub sample_count: usize,
    pub n_alpha: usize,
}

/// Per-attack row of the perturbation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub input_index: usize,
    pub source_class: usize,
    pub cos_theta_t: f64,
    pub delta: f64,
    pub m: f64,
    pub delta_over_m: f64,
    pub outcome: AttackOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub params: RunParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CompressionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_by_alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attacks: Vec<AttackRow>,
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn is_valid(&self) -> bool {
        self.train.as_ref().is_some_and(|t| t.valid)
    }

    fn is_filtered(&self) -> bool {
        self.is_valid()
            && self
                .report
                .as_ref()
                .is_some_and(|r| r.cos_theta2.abs() > 0.9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.6}"),
            Cell::Text(s) => s.replace(',', ";"),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

/// One named aggregate statistic, optionally paired with the published value
/// it reproduces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub label: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub aggregates: Vec<Aggregate>,
}

impl SummaryTable {
    /// Per-run rows as CSV with a header line; floats at six decimals.
    pub fn rows_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Aggregates as `statistic,value,reference` CSV.
    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("statistic,value,reference\n");
        for a in &self.aggregates {
            let reference = a
                .reference
                .map(|r| format!("{r:.6}"))
                .unwrap_or_default();
            let _ = writeln!(out, "{},{:.6},{}", a.label.replace(',', ";"), a.value, reference);
        }
        out
    }

    pub fn aggregate(&self, label: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.label == label)
            .map(|a| a.value)
    }
}

pub struct ExperimentOutput {
    pub table: SummaryTable,
    pub records: Vec<RunRecord>,
    /// True when the valid-run target was not reached within the seed budget.
    pub shortfall: bool,
    pub svg: Option<String>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Table1 | ExperimentKind::Table2 => angle_experiment(cfg),
        ExperimentKind::Custom => {
            if cfg.d_list.is_some() {
                trend_experiment(cfg)
            } else {
                angle_experiment(cfg)
            }
        }
        ExperimentKind::Fig2Trend => trend_experiment(cfg),
        ExperimentKind::Table3Rho => rho_experiment(cfg),
        ExperimentKind::Table4Perturb => perturb_experiment(cfg),
    }
}

fn run_params(cfg: &ExperimentConfig, d: usize) -> RunParams {
    RunParams {
        experiment: cfg.experiment,
        d,
        hidden_width: cfg.hidden_width(),
        column_scale: cfg.column_scale(),
        sample_count: cfg.sample_count(d),
        n_alpha: cfg.n_alpha(),
    }
}

/// Train one linear model on a fresh hypercube dataset and measure the
/// angle diagnostics.  A diverged run is recorded as invalid, not fatal.
fn angle_run(
    params: &RunParams,
    run_index: usize,
    seed: u64,
    base_train: &TrainConfig,
) -> Result<RunRecord> {
    let t0 = Instant::now();
    let root = RngStream::new(seed);
    let mut data_rng = root.child(0);
    let ds = gen_hypercube(&mut data_rng, params.d, params.sample_count, params.column_scale)?;
    let mut model_rng = root.child(1);
    let mut model = MlpModel::random(
        &mut model_rng,
        &[params.d, params.hidden_width, 2],
        Activation::Identity,
    )?;
    let mut tc = base_train.clone();
    tc.seed = root.child(2).seed();

    let (train_report, report) = match train(&mut model, &ds, &tc) {
        Ok(rep) => {
            let angles = analysis::linear_compression_angles(&model, &ds)?;
            let creport = CompressionReport {
                cos_theta1: angles.cos_theta1,
                cos_theta2: angles.cos_theta2,
                phi: angles.phi,
                rho: None,
                path_profile: None,
                m_signed: None,
                d_change: None,
                run_metadata: RunMetadata {
                    seed,
                    d: params.d,
                    kind: DatasetKind::Hypercube,
                    valid: rep.valid,
                },
                vectors: Some(ReportVectors {
                    w1: angles.w1,
                    decision_direction: angles.decision_direction,
                    critical_column: angles.critical_column,
                    inv_a_last_row: angles.inv_a_last_row,
                }),
            };
            (Some(rep), Some(creport))
        }
        Err(Error::Divergence { .. }) => (None, None),
        Err(e) => return Err(e),
    };

    Ok(RunRecord {
        run_index,
        seed,
        params: params.clone(),
        train: train_report,
        report,
        rho_by_alpha: None,
        attacks: Vec::new(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Run seeds for one dimension until the valid target is met or the budget
/// runs out.
fn collect_runs<F>(cfg: &ExperimentConfig, d_index: usize, mut one: F) -> Result<(Vec<RunRecord>, bool)>
where
    F: FnMut(usize, u64) -> Result<RunRecord>,
{
    let target = cfg.target_valid();
    let budget = cfg.budget();
    let mut records = Vec::new();
    let mut valid = 0usize;
    for i in 0..budget {
        if valid >= target {
            break;
        }
        let rec = one(i, cfg.seed_for(d_index, i))?;
        if rec.is_valid() {
            valid += 1;
        }
        records.push(rec);
    }
    Ok((records, valid < target))
}

const ANGLE_COLUMNS: [&str; 9] = [
    "run", "seed", "d", "valid", "filtered", "cos_theta1", "cos_theta2", "phi", "abs_gap",
];

fn angle_row(rec: &RunRecord) -> Vec<Cell> {
    let mut row = vec![
        Cell::Int(rec.run_index as i64),
        Cell::Text(rec.seed.to_string()),
        Cell::Int(rec.params.d as i64),
        Cell::Int(rec.is_valid() as i64),
        Cell::Int(rec.is_filtered() as i64),
    ];
    match &rec.report {
        Some(r) => {
            row.push(Cell::Float(r.cos_theta1));
            row.push(Cell::Float(r.cos_theta2));
            row.push(Cell::Float(r.phi));
            row.push(Cell::Float(r.abs_gap()));
        }
        None => row.extend(std::iter::repeat_n(Cell::Text(String::new()), 4)),
    }
    row
}

/// The published-protocol statistics over one batch of records: counts, the
/// filtered averages and medians, and both gap flavors.
fn angle_aggregates(records: &[&RunRecord], label_prefix: &str, with_reference: bool) -> Vec<Aggregate> {
    let filtered: Vec<&CompressionReport> = records
        .iter()
        .filter(|r| r.is_filtered())
        .filter_map(|r| r.report.as_ref())
        .collect();
    let abs_cos1: Vec<f64> = filtered.iter().map(|r| r.cos_theta1.abs()).collect();
    let phi: Vec<f64> = filtered.iter().map(|r| r.phi).collect();
    let gaps: Vec<f64> = filtered.iter().map(|r| r.abs_gap()).collect();
    let stat = |xs: &[f64], f: fn(&[f64]) -> f64| if xs.is_empty() { f64::NAN } else { f(xs) };

    let refs = if with_reference {
        Some(reference::WIDE_SUMMARY_D12)
    } else {
        None
    };
    let lbl = |name: &str| format!("{label_prefix}{name}");
    vec![
        Aggregate {
            label: lbl("runs_total"),
            value: records.len() as f64,
            reference: None,
        },
        Aggregate {
            label: lbl("runs_valid"),
            value: records.iter().filter(|r| r.is_valid()).count() as f64,
            reference: None,
        },
        Aggregate {
            label: lbl("runs_filtered"),
            value: filtered.len() as f64,
            reference: None,
        },
        Aggregate {
            label: lbl("avg_abs_cos_theta1"),
            value: stat(&abs_cos1, stats::mean),
            reference: refs.map(|r| r.avg_abs_cos_theta1),
        },
        Aggregate {
            label: lbl("median_abs_cos_theta1"),
            value: stat(&abs_cos1, stats::median),
            reference: None,
        },
        Aggregate {
            label: lbl("avg_phi"),
            value: stat(&phi, stats::mean),
            reference: refs.map(|r| r.avg_phi),
        },
        Aggregate {
            label: lbl("median_phi"),
            value: stat(&phi, stats::median),
            reference: None,
        },
        Aggregate {
            label: lbl("avg_abs_gap"),
            value: stat(&gaps, stats::mean),
            reference: refs.map(|r| r.avg_abs_gap),
        },
        Aggregate {
            label: lbl("gap_of_averages"),
            value: (stat(&abs_cos1, stats::mean) - stat(&phi, stats::mean)).abs(),
            reference: None,
        },
    ]
}

/// Aggregate a finished record set the way the published wide table does.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::Precondition("no records to summarize".into()));
    }
    let rows = records.iter().map(angle_row).collect();
    let refs: Vec<&RunRecord> = records.iter().collect();
    let with_reference = records.iter().all(|r| r.params.d == 12);
    let aggregates = angle_aggregates(&refs, "", with_reference);
    Ok(SummaryTable {
        title: format!(
            "{} (d={}, width {})",
            records[0].params.experiment.slug(),
            records[0].params.d,
            records[0].params.hidden_width
        ),
        columns: ANGLE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
        aggregates,
    })
}

fn angle_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d = cfg.d_values()[0];
    let params = run_params(cfg, d);
    let base_train = cfg.base_train();
    let (records, shortfall) =
        collect_runs(cfg, 0, |i, seed| angle_run(&params, i, seed, &base_train))?;
    let table = summarize(&records)?;
    Ok(ExperimentOutput {
        table,
        records,
        shortfall,
        svg: None,
    })
}

fn trend_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let base_train = cfg.base_train();
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    let mut shortfall = false;
    let mut phi_points = Vec::new();
    let mut cos_points = Vec::new();

    for (d_index, &d) in cfg.d_values().iter().enumerate() {
        let params = run_params(cfg, d);
        let (batch, short) =
            collect_runs(cfg, d_index, |i, seed| angle_run(&params, i, seed, &base_train))?;
        shortfall |= short;
        let refs: Vec<&RunRecord> = batch.iter().collect();
        let block = angle_aggregates(&refs, &format!("d={d} "), false);
        if let (Some(c), Some(p)) = (
            block.iter().find(|a| a.label.ends_with("avg_abs_cos_theta1")),
            block.iter().find(|a| a.label.ends_with("avg_phi")),
        ) {
            if c.value.is_finite() && p.value.is_finite() {
                cos_points.push((d as f64, c.value));
                phi_points.push((d as f64, p.value));
            }
        }
        aggregates.extend(block);
        records.extend(batch);
    }

    let rows = records.iter().map(angle_row).collect();
    let mut chart = LineChart::new(
        "Predicted compression vs trained compression",
        "d",
        "average over filtered runs",
    );
    chart.add_series("avg phi", phi_points);
    chart.add_series("avg |cos theta1|", cos_points);

    Ok(ExperimentOutput {
        table: SummaryTable {
            title: format!("{} (width {})", cfg.experiment.slug(), cfg.hidden_width()),
            columns: ANGLE_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows,
            aggregates,
        },
        records,
        shortfall,
        svg: Some(chart.render()),
    })
}

fn alpha_grid(n_alpha: usize) -> Vec<f64> {
    (0..n_alpha)
        .map(|j| j as f64 / (n_alpha - 1) as f64)
        .collect()
}

/// Train one ReLU model, then measure the local compression ratio along the
/// segment between a fresh code pair differing only in the labeled bit.
fn rho_run(
    params: &RunParams,
    run_index: usize,
    seed: u64,
    base_train: &TrainConfig,
    alphas: &[f64],
) -> Result<RunRecord> {
    let t0 = Instant::now();
    let root = RngStream::new(seed);
    let mut data_rng = root.child(0);
    let ds = gen_hypercube(&mut data_rng, params.d, params.sample_count, params.column_scale)?;
    let mut model_rng = root.child(1);
    let mut model = MlpModel::random(
        &mut model_rng,
        &[params.d, params.hidden_width, 2],
        Activation::Relu,
    )?;
    let mut tc = base_train.clone();
    tc.seed = root.child(2).seed();

    let mut record = RunRecord {
        run_index,
        seed,
        params: params.clone(),
        train: None,
        report: None,
        rho_by_alpha: None,
        attacks: Vec::new(),
        wall_seconds: 0.0,
    };

    match train(&mut model, &ds, &tc) {
        Ok(rep) => {
            let valid = rep.valid;
            record.train = Some(rep);
            if valid {
                let a = ds
                    .a_matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidData("hypercube dataset lacks A".into()))?;
                let mut code_rng = root.child(3);
                let mut z_plus: Vec<f64> = (0..params.d - 1)
                    .map(|_| if code_rng.below(2) == 0 { 1.0 } else { -1.0 })
                    .collect();
                let mut z_minus = z_plus.clone();
                z_plus.push(1.0);
                z_minus.push(-1.0);
                let b1 = a.matvec(&z_plus)?;
                let b2 = a.matvec(&z_minus)?;

                let rho: Vec<f64> = alphas
                    .iter()
                    .map(|&alpha| {
                        let x: Vec<f64> = b1
                            .iter()
                            .zip(&b2)
                            .map(|(p, q)| alpha * p + (1.0 - alpha) * q)
                            .collect();
                        let x1 = matrix::sub(&b1, &x);
                        let x2 = matrix::sub(&b2, &x);
                        match analysis::local_ratio_rho(&model, &x, &x1, &x2) {
                            Ok(r) => Ok(r),
                            // A dead ReLU region has no gradient to measure.
                            Err(Error::DegenerateProbe(_)) => Ok(f64::NAN),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?;
                record.rho_by_alpha = Some(rho);
            }
        }
        Err(Error::Divergence { .. }) => {}
        Err(e) => return Err(e),
    }

    record.wall_seconds = t0.elapsed().as_secs_f64();
    Ok(record)
}

fn rho_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d = cfg.d_values()[0];
    let params = run_params(cfg, d);
    let base_train = cfg.base_train();
    let alphas = alpha_grid(cfg.n_alpha());
    let (records, shortfall) = collect_runs(cfg, 0, |i, seed| {
        rho_run(&params, i, seed, &base_train, &alphas)
    })?;

    let mut columns = vec!["run".to_string(), "seed".to_string(), "d".to_string(), "valid".to_string()];
    for &a in &alphas {
        columns.push(format!("rho_{a:.3}"));
    }
    let rows: Vec<Vec<Cell>> = records
        .iter()
        .map(|rec| {
            let mut row = vec![
                Cell::Int(rec.run_index as i64),
                Cell::Text(rec.seed.to_string()),
                Cell::Int(rec.params.d as i64),
                Cell::Int(rec.is_valid() as i64),
            ];
            match &rec.rho_by_alpha {
                Some(rho) => row.extend(rho.iter().map(|&r| Cell::Float(r))),
                None => row.extend(std::iter::repeat_n(Cell::Text(String::new()), alphas.len())),
            }
            row
        })
        .collect();

    let published = (d == 12 && cfg.n_alpha() == 10).then_some(&reference::RHO_BY_ALPHA_D12);
    let mut aggregates = vec![
        Aggregate {
            label: "runs_total".into(),
            value: records.len() as f64,
            reference: None,
        },
        Aggregate {
            label: "runs_valid".into(),
            value: records.iter().filter(|r| r.is_valid()).count() as f64,
            reference: None,
        },
    ];
    let mut alpha_means = Vec::new();
    for (j, &a) in alphas.iter().enumerate() {
        let column: Vec<f64> = records
            .iter()
            .filter_map(|r| r.rho_by_alpha.as_ref())
            .map(|rho| rho[j])
            .filter(|v| v.is_finite())
            .collect();
        let (m, med) = if column.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (stats::mean(&column), stats::median(&column))
        };
        if m.is_finite() {
            alpha_means.push(m);
        }
        aggregates.push(Aggregate {
            label: format!("mean_rho_{a:.3}"),
            value: m,
            reference: published.map(|p| p.mean[j]),
        });
        aggregates.push(Aggregate {
            label: format!("median_rho_{a:.3}"),
            value: med,
            reference: published.map(|p| p.median[j]),
        });
    }
    let (overall, spread) = if alpha_means.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let max = alpha_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = alpha_means.iter().cloned().fold(f64::INFINITY, f64::min);
        (stats::mean(&alpha_means), max - min)
    };
    aggregates.push(Aggregate {
        label: "mean_rho_overall".into(),
        value: overall,
        reference: None,
    });
    aggregates.push(Aggregate {
        label: "spread_of_alpha_means".into(),
        value: spread,
        reference: None,
    });

    Ok(ExperimentOutput {
        table: SummaryTable {
            title: format!("{} (d={d}, width {})", cfg.experiment.slug(), cfg.hidden_width()),
            columns,
            rows,
            aggregates,
        },
        records,
        shortfall,
        svg: None,
    })
}

/// Gradient-attack analysis against the exact construction: attack sampled
/// inputs of each class, compare attack norm over feature magnitude with the
/// angle at the adversarial point.
fn perturb_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d = cfg.d_values()[0];
    let params = run_params(cfg, d);
    let per_class = cfg.attack_inputs_per_class.unwrap_or(10);
    let step = cfg.attack_step.unwrap_or(0.01);
    let max_steps = cfg.attack_max_steps.unwrap_or(200_000);

    let t0 = Instant::now();
    let seed = cfg.seed_for(0, 0);
    let root = RngStream::new(seed);
    let mut data_rng = root.child(0);
    let ds = gen_hypercube(&mut data_rng, d, params.sample_count, params.column_scale)?;
    let model = ideal_hypercube_net(&ds)?;
    let a = ds.a_matrix.as_ref().expect("hypercube dataset carries A");
    let critical = a.column(d - 1);
    let m = matrix::norm(&critical);

    let mut picks: Vec<usize> = Vec::new();
    for class in [0usize, 1] {
        let mut found = 0usize;
        for (i, &label) in ds.labels.iter().enumerate() {
            if label == class {
                picks.push(i);
                found += 1;
                if found == per_class {
                    break;
                }
            }
        }
        if found < per_class {
            return Err(Error::Precondition(format!(
                "dataset holds fewer than {per_class} points of class {class}"
            )));
        }
    }

    let mut attacks = Vec::new();
    for &idx in &picks {
        let x = &ds.inputs[idx];
        let source = ds.labels[idx];
        let target = 1 - source;
        let outcome = iterative_gradient_attack(&model, x, source, target, step, max_steps)?;
        let adv = matrix::add(x, &outcome.perturbation);
        let grad = model.input_gradient(&adv, 0, Some(1))?;
        let cos_theta_t = analysis::cosine(&grad, &critical)?;
        let delta = outcome.norm;
        attacks.push(AttackRow {
            input_index: idx,
            source_class: source,
            cos_theta_t,
            delta,
            m,
            delta_over_m: delta / m,
            outcome,
        });
    }

    let columns = ["input", "class", "cos_theta_t", "delta", "m", "delta_over_m", "success"];
    let mut rows: Vec<Vec<Cell>> = attacks
        .iter()
        .map(|at| {
            vec![
                Cell::Int(at.input_index as i64),
                Cell::Int(at.source_class as i64),
                Cell::Float(at.cos_theta_t),
                Cell::Float(at.delta),
                Cell::Float(at.m),
                Cell::Float(at.delta_over_m),
                Cell::Int(at.outcome.success as i64),
            ]
        })
        .collect();
    if d == 17 {
        for (k, p) in reference::PERTURBATION_D17.iter().enumerate() {
            rows.push(vec![
                Cell::Text(format!("published_{}", k + 1)),
                Cell::Text(String::new()),
                Cell::Float(p.cos_theta_t),
                Cell::Float(p.delta),
                Cell::Float(p.m),
                Cell::Float(p.delta_over_m),
                Cell::Text(String::new()),
            ]);
        }
    }

    let abs_cos: Vec<f64> = attacks.iter().map(|a| a.cos_theta_t.abs()).collect();
    let deltas: Vec<f64> = attacks.iter().map(|a| a.delta).collect();
    let ratios: Vec<f64> = attacks.iter().map(|a| a.delta_over_m).collect();
    let gaps: Vec<f64> = attacks
        .iter()
        .map(|a| (a.cos_theta_t.abs() - a.delta_over_m).abs())
        .collect();
    let published_ratio = (d == 17).then(|| {
        stats::mean(&reference::PERTURBATION_D17.map(|p| p.delta_over_m))
    });
    let aggregates = vec![
        Aggregate {
            label: "attacks_total".into(),
            value: attacks.len() as f64,
            reference: None,
        },
        Aggregate {
            label: "attacks_succeeded".into(),
            value: attacks.iter().filter(|a| a.outcome.success).count() as f64,
            reference: None,
        },
        Aggregate {
            label: "avg_abs_cos_theta_t".into(),
            value: stats::mean(&abs_cos),
            reference: None,
        },
        Aggregate {
            label: "avg_delta".into(),
            value: stats::mean(&deltas),
            reference: None,
        },
        Aggregate {
            label: "feature_magnitude_m".into(),
            value: m,
            reference: (d == 17).then_some(reference::PERTURBATION_D17[0].m),
        },
        Aggregate {
            label: "avg_delta_over_m".into(),
            value: stats::mean(&ratios),
            reference: published_ratio,
        },
        Aggregate {
            label: "max_abs_ratio_gap".into(),
            value: gaps.iter().cloned().fold(0.0, f64::max),
            reference: None,
        },
    ];

    let record = RunRecord {
        run_index: 0,
        seed,
        params,
        train: None,
        report: None,
        rho_by_alpha: None,
        attacks,
        wall_seconds: t0.elapsed().as_secs_f64(),
    };

    Ok(ExperimentOutput {
        table: SummaryTable {
            title: format!("{} (d={d})", cfg.experiment.slug()),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
            aggregates,
        },
        records: vec![record],
        shortfall: false,
        svg: None,
    })
}

/// Write an experiment's tables to `<dir>/<name>_runs.csv`,
/// `<name>_summary.csv`, `<name>_records.json`, and `<name>.svg` if a chart
/// was produced.  Returns the written paths.
pub fn write_outputs(out: &ExperimentOutput, name: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let runs = dir.join(format!("{name}_runs.csv"));
    std::fs::write(&runs, out.table.rows_csv())?;
    files.push(runs);

    let summary = dir.join(format!("{name}_summary.csv"));
    std::fs::write(&summary, out.table.aggregates_csv())?;
    files.push(summary);

    let records = dir.join(format!("{name}_records.json"));
    let mut json = serde_json::to_string_pretty(&out.records)?;
    json.push('\n');
    std::fs::write(&records, json)?;
    files.push(records);

    if let Some(svg) = &out.svg {
        let chart = dir.join(format!("{name}.svg"));
        std::fs::write(&chart, svg)?;
        files.push(chart);
    }
    Ok(files)
}

/// The canned desk-scale configuration behind `reproduce <name>`.
pub fn canned_config(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = match name {
        "table1" => {
            let mut c = ExperimentConfig::new(ExperimentKind::Table1);
            c.target_valid = Some(10);
            c.seed_count = Some(100);
            c.master_seed = Some(11);
            c
        }
        "table2" => {
            let mut c = ExperimentConfig::new(ExperimentKind::Table2);
            c.target_valid = Some(20);
            c.seed_count = Some(200);
            c.master_seed = Some(12);
            c
        }
        "fig2" => {
            let mut c = ExperimentConfig::new(ExperimentKind::Fig2Trend);
            c.d_list = Some(vec![8, 10, 12, 14, 16]);
            c.target_valid = Some(10);
            c.seed_count = Some(100);
            c.master_seed = Some(13);
            c
        }
        "table3" => {
            let mut c = ExperimentConfig::new(ExperimentKind::Table3Rho);
            c.target_valid = Some(20);
            c.seed_count = Some(200);
            c.n_alpha = Some(10);
            c.master_seed = Some(14);
            c
        }
        "table4" => {
            let mut c = ExperimentConfig::new(ExperimentKind::Table4Perturb);
            c.d = Some(17);
            c.sample_count = Some(512);
            c.attack_inputs_per_class = Some(10);
            c.master_seed = Some(15);
            c
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown reproduction target {other:?}; expected table1, table2, fig2, table3, or table4"
            )))
        }
    };
    cfg.d.get_or_insert(12);
    Ok(cfg)
}

pub struct ReproduceOutput {
    pub files: Vec<PathBuf>,
    pub shortfall: bool,
}

pub fn reproduce(name: &str, out_dir: &Path) -> Result<ReproduceOutput> {
    let cfg = canned_config(name)?;
    let out = run_experiment(&cfg)?;
    let files = write_outputs(&out, name, out_dir)?;
    Ok(ReproduceOutput {
        files,
        shortfall: out.shortfall,
    })
}
