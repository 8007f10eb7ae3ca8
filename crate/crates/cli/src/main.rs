//! Operator-facing pipeline: simulate → fit / rank → validate → correct.
//!
//! Every subcommand computes all of its outputs before writing anything,
//! and each file lands via write-to-temp plus atomic rename, so a failing
//! run never leaves partial artifacts. Exit codes: 0 ok, 2 input error,
//! 3 degenerate data, 4 training/validation leakage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use thermdrift::correction::batch_correct_dataset;
use thermdrift::ingest::{
    dataset_tag, dataset_to_csv, load_dataset, read_json, to_json_pretty, write_atomic,
};
use thermdrift::regression::fit;
use thermdrift::selection::{pareto_front, rank_all};
use thermdrift::simulator::{default_gain, default_tau, simulate_scenario};
use thermdrift::validation::{cross_validate, trace_csv};
use thermdrift::{
    CorrectionSettingsF64, Error, ExpansionModelF64, ModelDocumentF64, OutlierPolicyF64,
    ScenarioDatasetF64, ScenarioSpecF64, SensorConfig, SensorId, ThermalPlantSpecF64,
    DEFAULT_Q0_MM, DEFAULT_STROKE_MM,
};

#[derive(Parser)]
#[command(
    name = "thermdrift",
    version,
    about = "Thermal drift calibration and setpoint compensation for telescopic actuators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenario datasets from a JSON config
    Simulate {
        /// Scenario and plant configuration file
        #[arg(long)]
        config: PathBuf,
        /// Master seed; scenario k runs with seed + k
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override every scenario's sample_dt_s
        #[arg(long = "grid-dt-s")]
        grid_dt_s: Option<f64>,
        /// Output directory (one CSV per scenario plus truth_model.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one sensor configuration; writes model.json and report.json
    Fit {
        /// Dataset CSVs, concatenated into one training design
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Sensor selection: a single id ("7") or a pair ("7,15")
        #[arg(long)]
        sensors: String,
        #[arg(long = "q0-mm", default_value_t = DEFAULT_Q0_MM)]
        q0_mm: f64,
        #[arg(long = "stroke-mm", default_value_t = DEFAULT_STROKE_MM)]
        stroke_mm: f64,
        /// Outlier threshold c (0 disables removal)
        #[arg(long = "outlier-c", default_value_t = 5.0)]
        outlier_c: f64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every single and pair; writes matrices, Pareto front and cell CSV
    Rank {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long = "q0-mm", default_value_t = DEFAULT_Q0_MM)]
        q0_mm: f64,
        #[arg(long = "stroke-mm", default_value_t = DEFAULT_STROKE_MM)]
        stroke_mm: f64,
        #[arg(long = "outlier-c", default_value_t = 5.0)]
        outlier_c: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a frozen model on held-out datasets
    Validate {
        /// Model JSON written by `fit`
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[arg(long = "stroke-mm", default_value_t = DEFAULT_STROKE_MM)]
        stroke_mm: f64,
        /// Output directory (report plus one trace CSV per dataset)
        #[arg(long)]
        out: PathBuf,
    },
    /// Write thermally corrected setpoints for one dataset
    Correct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "stroke-mm", default_value_t = DEFAULT_STROKE_MM)]
        stroke_mm: f64,
        /// Trailing moving-average window on ΔT, in samples (0 = raw)
        #[arg(long = "smooth-window", default_value_t = 0)]
        smooth_window: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Deserialize)]
struct SimulateConfig {
    #[serde(default = "default_stroke")]
    stroke_mm: f64,
    plant: PlantConfig,
    scenarios: Vec<ScenarioEntry>,
}

#[derive(Deserialize)]
struct ScenarioEntry {
    name: String,
    #[serde(flatten)]
    spec: ScenarioSpecF64,
}

#[derive(Deserialize)]
struct PlantConfig {
    #[serde(default = "default_n_sensors")]
    n_sensors: usize,
    /// Per-node time constants; defaults to the linear 200..2000 s profile.
    #[serde(default)]
    tau_s: Option<Vec<f64>>,
    /// Per-node heating gains; defaults to the linear 4.0..0.5 K profile.
    #[serde(default)]
    gain_k: Option<Vec<f64>>,
    #[serde(default)]
    ambient_amplitude_k: f64,
    #[serde(default = "default_rate_cap")]
    ambient_rate_cap_k_per_h: f64,
    true_model: ExpansionModelF64,
    #[serde(default)]
    beam_sigma_um: f64,
    #[serde(default)]
    beam_offsets_um: [f64; 3],
}

fn default_stroke() -> f64 {
    DEFAULT_STROKE_MM
}

fn default_n_sensors() -> usize {
    17
}

fn default_rate_cap() -> f64 {
    1.0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let (kind, code) = classify(&error);
            eprintln!("error[{kind}]: {error}");
            ExitCode::from(code)
        }
    }
}

fn classify(error: &Error) -> (&'static str, u8) {
    match error {
        Error::DegenerateData { .. }
        | Error::InsufficientData { .. }
        | Error::EmptyFront
        | Error::AllInvalid => ("degenerate-data", 3),
        Error::Leakage { .. } => ("leakage", 4),
        _ => ("input", 2),
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { config, seed, grid_dt_s, out } => {
            simulate(&config, seed, grid_dt_s, &out)
        }
        Command::Fit { datasets, sensors, q0_mm, stroke_mm, outlier_c, out } => {
            fit_cmd(&datasets, &sensors, q0_mm, stroke_mm, outlier_c, &out)
        }
        Command::Rank { datasets, q0_mm, stroke_mm, outlier_c, out } => {
            rank_cmd(&datasets, q0_mm, stroke_mm, outlier_c, &out)
        }
        Command::Validate { model, datasets, stroke_mm, out } => {
            validate_cmd(&model, &datasets, stroke_mm, &out)
        }
        Command::Correct { model, dataset, stroke_mm, smooth_window, out } => {
            correct_cmd(&model, &dataset, stroke_mm, smooth_window, &out)
        }
    }
}

/// Computed outputs are staged in memory and written in one pass at the
/// end, each file atomically.
fn write_all(outputs: Vec<(PathBuf, String)>) -> Result<(), Error> {
    for (path, contents) in outputs {
        write_atomic(&path, &contents)?;
    }
    Ok(())
}

fn simulate(
    config: &Path,
    seed: u64,
    grid_dt_s: Option<f64>,
    out: &Path,
) -> Result<(), Error> {
    let cfg: SimulateConfig = read_json(config)?;
    if cfg.scenarios.is_empty() {
        return Err(Error::InvalidInput("config lists no scenarios".into()));
    }
    let n = cfg.plant.n_sensors;
    let plant = ThermalPlantSpecF64 {
        n_sensors: n,
        tau: cfg.plant.tau_s.unwrap_or_else(|| default_tau(n)),
        gain: cfg.plant.gain_k.unwrap_or_else(|| default_gain(n)),
        ambient_amplitude: cfg.plant.ambient_amplitude_k,
        ambient_rate_cap: cfg.plant.ambient_rate_cap_k_per_h,
        true_model: cfg.plant.true_model,
        beam_sigma: cfg.plant.beam_sigma_um,
        beam_offsets: cfg.plant.beam_offsets_um,
    };

    let mut outputs = Vec::new();
    let mut summaries = Vec::new();
    for (k, entry) in cfg.scenarios.iter().enumerate() {
        if entry.name.is_empty()
            || !entry.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(Error::InvalidInput(format!(
                "scenario name `{}` must be non-empty and use only [A-Za-z0-9_-]",
                entry.name
            )));
        }
        let mut spec = entry.spec.clone();
        if let Some(dt) = grid_dt_s {
            spec.sample_dt = dt;
        }
        let dataset = simulate_scenario(&spec, &plant, cfg.stroke_mm, seed + k as u64)?;
        summaries.push(format!(
            "{}: {} samples ({} valid), tag {}",
            entry.name,
            dataset.n_samples(),
            dataset.n_valid(),
            dataset_tag(&dataset)
        ));
        outputs.push((out.join(format!("{}.csv", entry.name)), dataset_to_csv(&dataset)));
    }
    outputs.push((
        out.join("truth_model.json"),
        to_json_pretty(&ModelDocumentF64::new(&plant.true_model, Vec::new(), None, 0))?,
    ));

    write_all(outputs)?;
    for line in summaries {
        println!("{line}");
    }
    println!("wrote {} scenario(s) to {}", cfg.scenarios.len(), out.display());
    Ok(())
}

fn parse_sensors(spec: &str) -> Result<SensorConfig, Error> {
    let ids: Vec<u16> = spec
        .split([',', '-'])
        .map(|part| {
            part.trim()
                .parse::<u16>()
                .map_err(|_| Error::InvalidInput(format!("bad sensor id `{part}` in `{spec}`")))
        })
        .collect::<Result<_, _>>()?;
    match ids.as_slice() {
        [i] if *i >= 1 => Ok(SensorConfig::single(SensorId(*i))),
        [i, j] if *i >= 1 && *j >= 1 => SensorConfig::pair(SensorId(*i), SensorId(*j)),
        _ => Err(Error::InvalidInput(format!(
            "--sensors takes one id or a pair, e.g. `7` or `7,15`; got `{spec}`"
        ))),
    }
}

fn load_many(
    paths: &[PathBuf],
    q0: f64,
    stroke: f64,
) -> Result<(Vec<ScenarioDatasetF64>, Vec<String>), Error> {
    let mut datasets = Vec::with_capacity(paths.len());
    let mut tags = Vec::with_capacity(paths.len());
    for path in paths {
        let dataset = load_dataset(path, q0, stroke)?;
        tags.push(dataset_tag(&dataset));
        datasets.push(dataset);
    }
    Ok((datasets, tags))
}

fn fit_cmd(
    paths: &[PathBuf],
    sensors: &str,
    q0: f64,
    stroke: f64,
    outlier_c: f64,
    out: &Path,
) -> Result<(), Error> {
    let config = parse_sensors(sensors)?;
    let (datasets, tags) = load_many(paths, q0, stroke)?;
    let pooled = ScenarioDatasetF64::concat(&datasets)?;
    let policy = OutlierPolicyF64 { c: outlier_c };
    let (model, report) = fit(&pooled, &config, &policy)?;

    let document = ModelDocumentF64::new(
        &model,
        tags,
        (outlier_c > 0.0).then_some(outlier_c),
        report.n_outliers_removed(),
    );
    write_all(vec![
        (out.join("model.json"), to_json_pretty(&document)?),
        (out.join("report.json"), to_json_pretty(&report)?),
    ])?;

    for (id, coeffs) in model.config().sensors().iter().zip(model.coeffs()) {
        println!(
            "sensor {id}: A = {:.6e} µm/(mm·K), B = {:.6e} µm/(mm·K)",
            coeffs.a, coeffs.b
        );
    }
    println!(
        "rmse {:.4} µm, linf {:.4} µm over {} samples ({} outliers removed)",
        report.rmse(),
        report.linf(),
        report.n_samples(),
        report.n_outliers_removed()
    );
    Ok(())
}

fn rank_cmd(
    paths: &[PathBuf],
    q0: f64,
    stroke: f64,
    outlier_c: f64,
    out: &Path,
) -> Result<(), Error> {
    let (datasets, _) = load_many(paths, q0, stroke)?;
    let pooled = ScenarioDatasetF64::concat(&datasets)?;
    let policy = OutlierPolicyF64 { c: outlier_c };
    let matrices = rank_all(&pooled, &policy)?;
    let front = pareto_front(&matrices)?;

    write_all(vec![
        (out.join("criteria_matrices.json"), to_json_pretty(&matrices.to_document())?),
        (out.join("pareto.json"), to_json_pretty(&front)?),
        (out.join("criteria_cells.csv"), matrices.cells_csv()),
    ])?;

    println!(
        "{} fits over {} sensors; Pareto front ({} dominated):",
        matrices.n_fits(),
        matrices.n_sensors(),
        front.dominated_count
    );
    for entry in &front.front {
        println!(
            "  {:>6}: rmse {:.4} µm, linf {:.4} µm",
            entry.label, entry.rmse, entry.linf
        );
    }
    if let Some((config, rmse, linf)) = matrices.best_single() {
        println!("best single sensor {config}: rmse {rmse:.4} µm, linf {linf:.4} µm");
    }
    Ok(())
}

fn validate_cmd(
    model_path: &Path,
    paths: &[PathBuf],
    stroke: f64,
    out: &Path,
) -> Result<(), Error> {
    let document: ModelDocumentF64 = read_json(model_path)?;
    let model = document.to_model()?;
    let (datasets, _) = load_many(paths, document.q0_mm, stroke)?;
    let report = cross_validate(&model, &document.training_tags, &datasets)?;

    let mut outputs = vec![(out.join("validation_report.json"), to_json_pretty(&report)?)];
    for (path, dataset) in paths.iter().zip(&datasets) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        let mut name = format!("trace_{stem}.csv");
        let mut suffix = 1;
        while outputs.iter().any(|(p, _)| p == &out.join(&name)) {
            suffix += 1;
            name = format!("trace_{stem}_{suffix}.csv");
        }
        outputs.push((out.join(name), trace_csv(&model, dataset)?));
    }
    write_all(outputs)?;

    let show = |label: &str, s: &thermdrift::validation::ScenarioValidation<f64>| {
        let fmt = |r: Option<f64>| r.map_or("n/a".into(), |v| format!("{v:.1} %"));
        println!(
            "{label}: max drift {:.3} µm -> residual {:.3} µm ({}), mean {:.3} -> {:.3} µm ({})",
            s.max_drift_um,
            s.max_residual_um,
            fmt(s.reduction_max_pct),
            s.mean_abs_drift_um,
            s.mean_abs_residual_um,
            fmt(s.reduction_mean_pct),
        );
    };
    for scenario in &report.scenarios {
        show(&scenario.tag, scenario);
    }
    show("pooled", &report.pooled);
    Ok(())
}

fn correct_cmd(
    model_path: &Path,
    dataset_path: &Path,
    stroke: f64,
    smooth_window: usize,
    out: &Path,
) -> Result<(), Error> {
    let document: ModelDocumentF64 = read_json(model_path)?;
    let model = document.to_model()?;
    let dataset = load_dataset(dataset_path, document.q0_mm, stroke)?;
    let settings = CorrectionSettingsF64 { smooth_window, ..CorrectionSettingsF64::new(stroke) };
    let (corrected, predicted) = batch_correct_dataset(&model, &dataset, &settings)?;

    let mut csv = String::from("time_s,q_setpoint_mm,q_corrected_mm,predicted_um,valid\n");
    for k in 0..dataset.n_samples() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            dataset.time()[k],
            dataset.q()[k],
            corrected[k],
            predicted[k],
            u8::from(dataset.valid()[k]),
        ));
    }
    write_all(vec![(out.to_path_buf(), csv)])?;

    let largest = dataset
        .q()
        .iter()
        .zip(&corrected)
        .map(|(&q, &c)| (q - c).abs())
        .fold(0.0f64, f64::max);
    println!(
        "corrected {} setpoints (largest correction {:.4} µm) -> {}",
        dataset.n_samples(),
        largest * 1000.0,
        out.display()
    );
    Ok(())
}
