use clap::{Parser, Subcommand, ValueEnum};
use fragility_lab::analysis::{self, CompressionReport, RunMetadata};
use fragility_lab::attacks;
use fragility_lab::datagen::{
    gen_generative_chain, gen_hypercube, gen_orthogonal_label, make_path, Dataset, DatasetKind,
};
use fragility_lab::error::{Error, Result};
use fragility_lab::harness::{self, ExperimentConfig};
use fragility_lab::matrix;
use fragility_lab::models::{training_accuracy, Activation, MlpModel, TrainConfig};
use fragility_lab::oracle;
use fragility_lab::rng::RngStream;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "fragility-lab",
    version,
    about = "Synthetic experiments on why accurate networks are adversarially fragile"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it to a JSON file.
    GenData {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train a model on a dataset; writes model JSON and prints the report.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one adversarial attack and print the outcome as JSON.
    Attack {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<AttackMethod>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Index of the dataset point to perturb.
        #[arg(long)]
        point: Option<usize>,
        #[arg(long)]
        target: Option<usize>,
        /// Step size of the iterative gradient attack.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compression diagnostics for a trained model on its dataset.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact flip radius of the minimum-distance classifier at a point.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        point: Option<usize>,
    },
    /// Re-run a published table or figure at desk scale.
    Reproduce {
        /// One of: table1, table2, fig2, table3, table4.
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Optional experiment config overriding the canned one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttackMethod {
    Thm1,
    Thm5,
    Probe,
    LocalProj,
    Grad,
}

enum Outcome {
    Done,
    Shortfall,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Done) => {}
        Ok(Outcome::Shortfall) => {
            eprintln!("warning: valid-run target not reached within the seed budget");
            std::process::exit(3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Usage(_) | Error::Json(_) | Error::InvalidData(_) => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::GenData { config } => gen_data(&config),
        Command::Train { config } => train_cmd(&config),
        Command::Attack {
            config,
            method,
            dataset,
            model,
            point,
            target,
            step,
            max_steps,
            out,
        } => attack_cmd(config, method, dataset, model, point, target, step, max_steps, out),
        Command::Analyze { config } => analyze_cmd(&config),
        Command::Oracle {
            config,
            dataset,
            point,
        } => oracle_cmd(config, dataset, point),
        Command::Reproduce {
            name,
            out_dir,
            config,
        } => reproduce_cmd(&name, &out_dir, config),
        Command::Run { config } => run_cmd(&config),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDataConfig {
    kind: DatasetKind,
    d: usize,
    seed: u64,
    #[serde(default)]
    sample_count: Option<usize>,
    #[serde(default)]
    column_scale: Option<f64>,
    /// Chain depth for generative-chain datasets.
    #[serde(default)]
    t: Option<usize>,
    out: PathBuf,
}

fn gen_data(config: &Path) -> Result<Outcome> {
    let cfg: GenDataConfig = load_json(config)?;
    let mut rng = RngStream::new(cfg.seed);
    let ds = match cfg.kind {
        DatasetKind::OrthogonalLabel => gen_orthogonal_label(&mut rng, cfg.d)?,
        DatasetKind::GenerativeChain => gen_generative_chain(&mut rng, cfg.d, cfg.t.unwrap_or(3))?,
        DatasetKind::Hypercube => {
            let samples = cfg
                .sample_count
                .unwrap_or_else(|| (1usize << cfg.d.min(14)).min(1 << 14));
            gen_hypercube(&mut rng, cfg.d, samples, cfg.column_scale.unwrap_or(5.0))?
        }
    };
    ds.save(&cfg.out)?;
    println!(
        "wrote {} ({} points, d={})",
        cfg.out.display(),
        ds.len(),
        ds.d
    );
    Ok(Outcome::Done)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainCmdConfig {
    dataset: PathBuf,
    model_out: PathBuf,
    #[serde(default)]
    report_out: Option<PathBuf>,
    #[serde(default)]
    hidden_width: Option<usize>,
    #[serde(default)]
    activation: Option<Activation>,
    #[serde(default)]
    train: Option<TrainConfig>,
}

fn train_cmd(config: &Path) -> Result<Outcome> {
    let cfg: TrainCmdConfig = load_json(config)?;
    let ds = Dataset::load(&cfg.dataset)?;
    let tc = cfg.train.unwrap_or_default();
    let width = cfg.hidden_width.unwrap_or(256);
    let dims = [ds.d, width, ds.num_classes()];
    let mut init_rng = RngStream::new(tc.seed).child(1);
    let mut model = MlpModel::random(
        &mut init_rng,
        &dims,
        cfg.activation.unwrap_or(Activation::Identity),
    )?;
    let report = fragility_lab::models::train(&mut model, &ds, &tc)?;
    model.save(&cfg.model_out)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &cfg.report_out {
        std::fs::write(path, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(Outcome::Done)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AttackFileConfig {
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    dataset: Option<PathBuf>,
    #[serde(default)]
    model: Option<PathBuf>,
    #[serde(default)]
    point: Option<usize>,
    #[serde(default)]
    target: Option<usize>,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    max_steps: Option<usize>,
    #[serde(default)]
    out: Option<PathBuf>,
}

#[allow(clippy::too_many_arguments)]
fn attack_cmd(
    config: Option<PathBuf>,
    method: Option<AttackMethod>,
    dataset: Option<PathBuf>,
    model: Option<PathBuf>,
    point: Option<usize>,
    target: Option<usize>,
    step: Option<f64>,
    max_steps: Option<usize>,
    out: Option<PathBuf>,
) -> Result<Outcome> {
    let file: AttackFileConfig = match &config {
        Some(path) => load_json(path)?,
        None => AttackFileConfig::default(),
    };
    let method = match method {
        Some(m) => m,
        None => match file.method.as_deref() {
            Some("thm1") => AttackMethod::Thm1,
            Some("thm5") => AttackMethod::Thm5,
            Some("probe") => AttackMethod::Probe,
            Some("local-proj") => AttackMethod::LocalProj,
            Some("grad") => AttackMethod::Grad,
            Some(other) => return Err(Error::Usage(format!("unknown attack method {other:?}"))),
            None => return Err(Error::Usage("--method is required".into())),
        },
    };
    let dataset_path = dataset
        .or(file.dataset)
        .ok_or_else(|| Error::Usage("--dataset is required".into()))?;
    let model_path = model
        .or(file.model)
        .ok_or_else(|| Error::Usage("--model is required".into()))?;
    let ds = Dataset::load(&dataset_path)?;
    let net = MlpModel::load(&model_path)?;
    let point = point.or(file.point).unwrap_or(0);
    if point >= ds.len() {
        return Err(Error::Usage(format!(
            "point {point} out of range for a dataset of {} points",
            ds.len()
        )));
    }
    let step = step.or(file.step).unwrap_or(0.01);
    let max_steps = max_steps.or(file.max_steps).unwrap_or(200_000);
    let target = target.or(file.target);

    let outcome = match method {
        AttackMethod::Thm1 => attacks::thm1_attack(&ds, &net)?,
        AttackMethod::Thm5 => attacks::thm5_attack(&ds, &net, point)?,
        AttackMethod::Probe => {
            let source = ds.labels[point];
            let target = target.unwrap_or_else(|| other_class(&ds, source));
            attacks::probe_subspace_attack(&net, &ds.inputs[point], source, target)?
        }
        AttackMethod::LocalProj => {
            let x = &ds.inputs[point];
            let x1 = nearest_of_class(&ds, x, point, 0)?;
            let x2 = nearest_of_class(&ds, x, point, 1)?;
            // Epsilon chosen to sit safely inside the local guard band.
            let span = matrix::norm(&matrix::sub(&ds.inputs[x2], &ds.inputs[x1]));
            if span <= 1e-12 {
                return Err(Error::DegenerateProbe(
                    "class representatives coincide".into(),
                ));
            }
            let epsilon = 0.05 * matrix::norm(x) / span;
            attacks::local_projection_attack(
                &net,
                x,
                &ds.inputs[x1],
                &ds.inputs[x2],
                epsilon,
            )?
        }
        AttackMethod::Grad => {
            let source = ds.labels[point];
            let target = target.unwrap_or_else(|| other_class(&ds, source));
            attacks::iterative_gradient_attack(
                &net,
                &ds.inputs[point],
                source,
                target,
                step,
                max_steps,
            )?
        }
    };

    let json = serde_json::to_string_pretty(&outcome)?;
    if let Some(path) = out.or(file.out) {
        std::fs::write(path, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(Outcome::Done)
}

fn other_class(ds: &Dataset, source: usize) -> usize {
    if ds.num_classes() == 2 {
        1 - source
    } else {
        // Default to the adjacent class the closed-form attack pairs with.
        if source == 0 {
            1
        } else {
            source - 1
        }
    }
}

fn nearest_of_class(ds: &Dataset, x: &[f64], exclude: usize, class: usize) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in ds.inputs.iter().enumerate() {
        if i == exclude || ds.labels[i] != class {
            continue;
        }
        let dist = matrix::norm(&matrix::sub(p, x));
        if best.map_or(true, |(b, _)| dist < b) {
            best = Some((dist, i));
        }
    }
    best.map(|(_, i)| i)
        .ok_or_else(|| Error::Usage(format!("dataset has no other point of class {class}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzePathConfig {
    from: usize,
    to: usize,
    #[serde(default)]
    n_alpha: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeRhoConfig {
    x: usize,
    x1: usize,
    x2: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeConfig {
    model: PathBuf,
    dataset: PathBuf,
    #[serde(default)]
    classes: Option<(usize, usize)>,
    #[serde(default)]
    rho: Option<AnalyzeRhoConfig>,
    #[serde(default)]
    path: Option<AnalyzePathConfig>,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn analyze_cmd(config: &Path) -> Result<Outcome> {
    let cfg: AnalyzeConfig = load_json(config)?;
    let ds = Dataset::load(&cfg.dataset)?;
    let model = MlpModel::load(&cfg.model)?;
    let classes = cfg.classes.unwrap_or((0, 1));

    let angles = analysis::linear_compression_angles(&model, &ds)?;
    let valid = (training_accuracy(&model, &ds)? - 1.0).abs() < f64::EPSILON;

    let rho = match &cfg.rho {
        Some(r) => {
            for idx in [r.x, r.x1, r.x2] {
                if idx >= ds.len() {
                    return Err(Error::Usage(format!("rho point {idx} out of range")));
                }
            }
            Some(analysis::local_ratio_rho(
                &model,
                &ds.inputs[r.x],
                &ds.inputs[r.x1],
                &ds.inputs[r.x2],
            )?)
        }
        None => None,
    };

    let (path_profile, m_signed, d_change) = match &cfg.path {
        Some(p) => {
            for idx in [p.from, p.to] {
                if idx >= ds.len() {
                    return Err(Error::Usage(format!("path point {idx} out of range")));
                }
            }
            let path = make_path(
                &ds.inputs[p.from],
                &ds.inputs[p.to],
                p.n_alpha.unwrap_or(11),
            )?;
            let profile = analysis::path_profile(&model, &path, classes)?;
            let start = profile
                .iter()
                .find(|pt| !pt.degenerate)
                .ok_or_else(|| Error::DegenerateProbe("gradient vanished on the whole path".into()))?;
            let m = analysis::path_integral_m(&profile, start.grad_norm, path.length())?;
            let d = analysis::d_change(&model, &path.endpoint_a, &path.endpoint_b, classes)?;
            (Some(profile), Some(m), Some(d))
        }
        None => (None, None, None),
    };

    let report = CompressionReport {
        cos_theta1: angles.cos_theta1,
        cos_theta2: angles.cos_theta2,
        phi: angles.phi,
        rho,
        path_profile,
        m_signed,
        d_change,
        run_metadata: RunMetadata {
            seed: ds.seed,
            d: ds.d,
            kind: ds.kind,
            valid,
        },
        vectors: Some(fragility_lab::analysis::ReportVectors {
            w1: angles.w1,
            decision_direction: angles.decision_direction,
            critical_column: angles.critical_column,
            inv_a_last_row: angles.inv_a_last_row,
        }),
    };

    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &cfg.out {
        std::fs::write(path, format!("{json}\n"))?;
    }
    println!("{json}");
    println!();
    println!("{}", CompressionReport::CSV_HEADER);
    println!("{}", report.csv_row());
    Ok(Outcome::Done)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OracleFileConfig {
    #[serde(default)]
    dataset: Option<PathBuf>,
    #[serde(default)]
    point: Option<usize>,
}

fn oracle_cmd(
    config: Option<PathBuf>,
    dataset: Option<PathBuf>,
    point: Option<usize>,
) -> Result<Outcome> {
    let file: OracleFileConfig = match &config {
        Some(path) => load_json(path)?,
        None => OracleFileConfig::default(),
    };
    let dataset_path = dataset
        .or(file.dataset)
        .ok_or_else(|| Error::Usage("--dataset is required".into()))?;
    let point = point
        .or(file.point)
        .ok_or_else(|| Error::Usage("--point is required".into()))?;
    let ds = Dataset::load(&dataset_path)?;
    if point >= ds.len() {
        return Err(Error::Usage(format!(
            "point {point} out of range for a dataset of {} points",
            ds.len()
        )));
    }
    let (radius, nearest) = oracle::oracle_flip_radius(&ds, point)?;
    println!(
        "{}",
        serde_json::json!({
            "point": point,
            "flip_radius": radius,
            "nearest_cross_class_index": nearest,
        })
    );
    Ok(Outcome::Done)
}

fn reproduce_cmd(name: &str, out_dir: &Path, config: Option<PathBuf>) -> Result<Outcome> {
    let result = match config {
        Some(path) => {
            harness::canned_config(name)?; // validate the name either way
            let cfg: ExperimentConfig = load_json(&path)?;
            let out = harness::run_experiment(&cfg)?;
            let files = harness::write_outputs(&out, name, out_dir)?;
            harness::ReproduceOutput {
                files,
                shortfall: out.shortfall,
            }
        }
        None => harness::reproduce(name, out_dir)?,
    };
    for f in &result.files {
        println!("wrote {}", f.display());
    }
    Ok(if result.shortfall {
        Outcome::Shortfall
    } else {
        Outcome::Done
    })
}

fn run_cmd(config: &Path) -> Result<Outcome> {
    let cfg: ExperimentConfig = load_json(config)?;
    let out = harness::run_experiment(&cfg)?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let files = harness::write_outputs(&out, cfg.experiment.slug(), &dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(if out.shortfall {
        Outcome::Shortfall
    } else {
        Outcome::Done
    })
}
