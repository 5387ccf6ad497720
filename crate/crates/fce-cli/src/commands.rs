//! Subcommand definitions and dispatch.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, bad data),
//! 2 I/O error, 3 internal invariant violation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fce_core::datagen::{self, Dataset, GenerationRanges, Provenance};
use fce_core::estimation::{self, GridSpec};
use fce_core::mlp::{self, MlpModel, TrainConfig};
use fce_core::svg::{trajectory_plot, PlotSeries};
use fce_core::trajectory::{self, Integrator, SimOptions, Termination};
use fce_core::{CoefficientPair, LaunchConfig, SimConfig};

use crate::manifest::RunManifest;

/// Trajectory simulation, force-coefficient estimation, synthetic data
/// generation, and launch-outcome classifier training.
#[derive(Parser)]
#[command(name = "fce", version, about)]
pub struct Cli {
    /// Physical constants file (key=value). Falls back to the FCE_CONFIG
    /// environment variable, then to built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap the worker thread count for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one launch and report its outcome.
    Simulate(SimulateArgs),
    /// Grid-search coefficient pairs against a labeled dataset.
    Estimate(EstimateArgs),
    /// Label the full synthetic configuration grid with a coefficient pair.
    Generate(GenerateArgs),
    /// Draw a class-balanced sample from a labeled pool.
    Sample(SampleArgs),
    /// Split a dataset into train and test sets.
    Split(SplitArgs),
    /// Generate a stand-in experimental dataset from a perturbed pair.
    MakePseudoExperimental(PseudoArgs),
    /// Train the 3-8-2 classifier on real + simulated data.
    Train(TrainArgs),
    /// Evaluate a trained model on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Train once per lambda and tabulate test metrics.
    SweepLambda(SweepLambdaArgs),
    /// Train once per simulated-data size and tabulate test metrics.
    SweepSimsize(SweepSimsizeArgs),
    /// Run the full pipeline end to end and emit a run manifest.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    distance: f64,
    #[arg(long)]
    motor: f64,
    #[arg(long)]
    angle: f64,
    #[arg(long, default_value_t = 0.06)]
    cl: f64,
    #[arg(long, default_value_t = 0.91)]
    cd: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    /// Integrate with RK4 instead of explicit Euler.
    #[arg(long)]
    rk4: bool,
    /// Write the trajectory as CSV (t,x,y,vx,vy).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write an SVG plot with the scoring bands.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Labeled dataset CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    grid_min: f64,
    #[arg(long, default_value_t = 5.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 0.005)]
    grid_step: f64,
    /// Drop the grid-min endpoint so a (0,5,0.005) grid has exactly 1000
    /// values per axis.
    #[arg(long)]
    paper_grid: bool,
    /// Keep only the best K rows in the output.
    #[arg(long)]
    top: Option<usize>,
    /// Scores CSV (cl,cd,acc3,acc2,mean_dev,median_dev), selection order.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Coefficient pair as `cl,cd`.
    #[arg(long, value_parser = parse_coeffs)]
    coeffs: CoefficientPair,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    n: usize,
    /// Dataset whose configurations must not appear in the sample.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable class-stratified splitting.
    #[arg(long)]
    no_stratify: bool,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
}

#[derive(Args)]
struct PseudoArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// The hidden "true" pair standing in for the physical ball, as `cl,cd`.
    #[arg(long, value_parser = parse_coeffs)]
    coeffs: CoefficientPair,
    /// Per-row probability of flipping the label to a different class.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Experimental (or pseudo-experimental) training CSV.
    #[arg(long)]
    real: PathBuf,
    /// Simulated training CSV; may contain zero rows.
    #[arg(long)]
    sim: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    #[arg(long)]
    out_model: PathBuf,
    /// Also write the per-step loss history as CSV.
    #[arg(long)]
    loss_history: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct SweepLambdaArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    sim: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated lambda values.
    #[arg(long, default_value = "0,0.001,0.01,0.1,0.5,1.0")]
    lambdas: String,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (lambda,overall_acc,f1_3pt,f1_2pt).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepSimsizeArgs {
    #[arg(long)]
    real_train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Labeled pool to draw balanced simulated samples from.
    #[arg(long)]
    pool: PathBuf,
    /// Comma-separated simulated dataset sizes (0 trains on real data only).
    #[arg(long, default_value = "0,500,600,750,900,1000,1250")]
    sizes: String,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (sim_size,overall_acc,f1_3pt,f1_2pt).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Directory for all artifacts (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hidden "true" pair for the pseudo-experimental stage, as `cl,cd`.
    #[arg(long, value_parser = parse_coeffs, default_value = "0.08,1.05")]
    true_coeffs: CoefficientPair,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 100)]
    n_real: usize,
    #[arg(long, default_value_t = 900)]
    sim_size: usize,
    /// Extra simulator-labeled rows mixed into the evaluation set, labeled
    /// with the hidden true pair.
    #[arg(long, default_value_t = 50)]
    n_verify: usize,
    #[arg(long, default_value_t = 0.0)]
    grid_min: f64,
    /// Desk-scale default; use 5.0 with step 0.005 for the full search.
    #[arg(long, default_value_t = 2.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 0.02)]
    grid_step: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
}

fn parse_coeffs(s: &str) -> Result<CoefficientPair, String> {
    let (cl, cd) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `cl,cd`, got `{s}`"))?;
    let cl: f64 = cl.trim().parse().map_err(|_| format!("invalid cl `{cl}`"))?;
    let cd: f64 = cd.trim().parse().map_err(|_| format!("invalid cd `{cd}`"))?;
    CoefficientPair::new(cl, cd).map_err(|e| e.to_string())
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number `{v}`"))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid count `{v}`"))
        })
        .collect()
}

fn load_sim_config(flag: &Option<PathBuf>) -> Result<SimConfig> {
    let path = flag
        .clone()
        .or_else(|| std::env::var_os("FCE_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => Ok(SimConfig::from_file(&p)?),
        None => Ok(SimConfig::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| fce_core::Error::io(path, e))?;
    Ok(())
}

pub fn run(cli: Cli) -> i32 {
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: failed to configure thread pool: {e}");
            return 3;
        }
    }
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<fce_core::Error>() {
        return match e {
            fce_core::Error::Validation(_) | fce_core::Error::Parse { .. } => 1,
            fce_core::Error::Io { .. } => 2,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    // anyhow contexts wrapping parse/validation issues raised locally.
    if err.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return 2;
    }
    1
}

fn dispatch(cli: Cli) -> Result<()> {
    let sim = load_sim_config(&cli.config)?;
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &sim),
        Command::Estimate(args) => cmd_estimate(args, &sim),
        Command::Generate(args) => cmd_generate(args, &sim),
        Command::Sample(args) => cmd_sample(args),
        Command::Split(args) => cmd_split(args),
        Command::MakePseudoExperimental(args) => cmd_pseudo(args, &sim),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::SweepLambda(args) => cmd_sweep_lambda(args),
        Command::SweepSimsize(args) => cmd_sweep_simsize(args),
        Command::Pipeline(args) => cmd_pipeline(args, &sim),
    }
}

fn cmd_simulate(args: SimulateArgs, sim: &SimConfig) -> Result<()> {
    let config = LaunchConfig::new(args.distance, args.motor, args.angle)?;
    let coeffs = CoefficientPair::new(args.cl, args.cd)?;
    let opts = SimOptions {
        dt: args.dt,
        t_max: args.t_max,
        integrator: if args.rk4 { Integrator::Rk4 } else { Integrator::Euler },
    };
    let target = sim.target();
    let traj = trajectory::simulate(&config, &coeffs, sim, &opts)?;
    let outcome = trajectory::score(&traj, &config, &target);
    let dev = trajectory::deviation(&traj, &config, &target);
    let termination = match traj.terminated_by {
        Termination::ReachedTargetPlane => "reached-target-plane",
        Termination::FellBelowFloor => "fell-below-floor",
        Termination::TimedOut => "timed-out",
        Termination::StalledBackward => "stalled",
    };
    println!(
        "termination={termination} steps={} t={:.4} outcome=({},{}) deviation={}",
        traj.states.len(),
        traj.last().t,
        outcome.hit2 as u8,
        outcome.hit3 as u8,
        if dev.is_finite() { format!("{dev:.4}") } else { "inf".into() },
    );
    if let Some(path) = args.csv {
        write_text(&path, &traj.to_csv())?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = args.svg {
        let svg = trajectory_plot(
            &[PlotSeries {
                label: format!("cl={} cd={}", args.cl, args.cd),
                trajectory: &traj,
            }],
            config.distance,
            &target,
            sim.floor_y(),
        );
        write_text(&path, &svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn estimate_grid(args_min: f64, args_max: f64, step: f64, paper_grid: bool) -> Result<GridSpec> {
    // --paper-grid drops the min endpoint: (0,5,0.005) becomes 1000 values
    // per axis instead of 1001.
    let min = if paper_grid { args_min + step } else { args_min };
    Ok(GridSpec::new(min, args_max, step)?)
}

fn cmd_estimate(args: EstimateArgs, sim: &SimConfig) -> Result<()> {
    let data = datagen::read_dataset(&args.data, Provenance::Experimental)?;
    let grid = estimate_grid(args.grid_min, args.grid_max, args.grid_step, args.paper_grid)?;
    let per_axis = grid.count();
    eprintln!(
        "grid: {per_axis} values per axis, {} pairs total",
        per_axis * per_axis
    );
    let opts = SimOptions::default();
    let scores = estimation::grid_search(&data, &grid, sim, &opts)?;
    let best = estimation::select_pair(&scores)?;
    write_text(&args.out, &estimation::scores_to_csv(&scores, args.top))?;
    println!("selected cl={} cd={}", best.lift, best.drag);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_generate(args: GenerateArgs, sim: &SimConfig) -> Result<()> {
    let ranges = GenerationRanges::default();
    let grid = datagen::generate_grid(&ranges);
    eprintln!("generated {} configurations", grid.len());
    let data = datagen::label_grid(&grid, &args.coeffs, sim, &SimOptions::default())?;
    let counts = data.class_counts();
    println!(
        "labeled {} rows: miss={} two-point={} three-point={}",
        data.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    datagen::write_dataset(&data, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let pool = datagen::read_dataset(&args.pool, Provenance::Simulated)?;
    let exclude = match &args.exclude {
        Some(path) => datagen::read_dataset(path, Provenance::Experimental)?,
        None => Dataset::new(Vec::new(), Provenance::Experimental),
    };
    let sample = datagen::balanced_sample(&pool, args.n, &exclude, args.seed)?;
    datagen::write_dataset(&sample, &args.out)?;
    let counts = sample.class_counts();
    println!(
        "sampled {} rows (per class: {}/{}/{})",
        sample.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let data = datagen::read_dataset(&args.data, Provenance::Experimental)?;
    let (train, test) = datagen::split(&data, args.test_frac, args.seed, !args.no_stratify)?;
    datagen::write_dataset(&train, &args.out_train)?;
    datagen::write_dataset(&test, &args.out_test)?;
    println!("train={} test={}", train.len(), test.len());
    Ok(())
}

fn cmd_pseudo(args: PseudoArgs, sim: &SimConfig) -> Result<()> {
    let data = datagen::make_pseudo_experimental(
        args.n,
        &args.coeffs,
        args.noise,
        args.seed,
        &GenerationRanges::default(),
        sim,
        &SimOptions::default(),
    )?;
    datagen::write_dataset(&data, &args.out)?;
    let counts = data.class_counts();
    println!(
        "generated {} pseudo-experimental rows (per class: {}/{}/{})",
        data.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let real = datagen::read_dataset(&args.real, Provenance::Experimental)?;
    let sim_data = datagen::read_dataset(&args.sim, Provenance::Simulated)?;
    let cfg = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch_size,
        lambda: args.lambda,
        epochs: args.epochs,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, history) = mlp::train(MlpModel::init(args.seed), &real, &sim_data, &cfg)?;
    mlp::write_model(&model, &args.out_model)?;
    println!(
        "trained {} steps, final loss {:.6}",
        history.len(),
        history.last().copied().unwrap_or(f64::NAN)
    );
    println!("wrote {}", args.out_model.display());
    if let Some(path) = args.loss_history {
        let mut csv = String::from("step,loss\n");
        for (i, l) in history.iter().enumerate() {
            csv.push_str(&format!("{i},{l}\n"));
        }
        write_text(&path, &csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = mlp::read_model(&args.model)?;
    let data = datagen::read_dataset(&args.data, Provenance::Experimental)?;
    let metrics = mlp::evaluate(&model, &data, 0.5)?;
    println!(
        "overall_acc={:.4} f1_3pt={:.4} f1_2pt={:.4}",
        metrics.overall_acc, metrics.f1_3pt, metrics.f1_2pt
    );
    Ok(())
}

fn cmd_sweep_lambda(args: SweepLambdaArgs) -> Result<()> {
    let real = datagen::read_dataset(&args.real, Provenance::Experimental)?;
    let sim_data = datagen::read_dataset(&args.sim, Provenance::Simulated)?;
    let test = datagen::read_dataset(&args.test, Provenance::Experimental)?;
    let lambdas = parse_f64_list(&args.lambdas)?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let rows = mlp::lambda_sweep(&real, &sim_data, &test, &lambdas, &cfg)?;
    let mut csv = String::from("lambda,overall_acc,f1_3pt,f1_2pt\n");
    for (lambda, m) in &rows {
        csv.push_str(&format!("{lambda},{},{},{}\n", m.overall_acc, m.f1_3pt, m.f1_2pt));
        println!(
            "lambda={lambda} overall_acc={:.4} f1_3pt={:.4} f1_2pt={:.4}",
            m.overall_acc, m.f1_3pt, m.f1_2pt
        );
    }
    write_text(&args.out, &csv)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_sweep_simsize(args: SweepSimsizeArgs) -> Result<()> {
    let real = datagen::read_dataset(&args.real_train, Provenance::Experimental)?;
    let test = datagen::read_dataset(&args.test, Provenance::Experimental)?;
    let pool = datagen::read_dataset(&args.pool, Provenance::Simulated)?;
    let sizes = parse_usize_list(&args.sizes)?;
    // Exclude everything the model will ever be judged against.
    let mut exclude_rows = real.rows.clone();
    exclude_rows.extend(test.rows.iter().copied());
    let exclude = Dataset::new(exclude_rows, Provenance::Experimental);

    let cfg = TrainConfig {
        lambda: args.lambda,
        epochs: args.epochs,
        learning_rate: args.lr,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let mut csv = String::from("sim_size,overall_acc,f1_3pt,f1_2pt\n");
    for &size in &sizes {
        let sim_data = if size == 0 {
            Dataset::new(Vec::new(), Provenance::Simulated)
        } else {
            datagen::balanced_sample(&pool, size, &exclude, args.seed)?
        };
        let (model, _) = mlp::train(MlpModel::init(args.seed), &real, &sim_data, &cfg)?;
        let m = mlp::evaluate(&model, &test, 0.5)?;
        csv.push_str(&format!("{size},{},{},{}\n", m.overall_acc, m.f1_3pt, m.f1_2pt));
        println!(
            "sim_size={size} overall_acc={:.4} f1_3pt={:.4} f1_2pt={:.4}",
            m.overall_acc, m.f1_3pt, m.f1_2pt
        );
    }
    write_text(&args.out, &csv)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs, sim: &SimConfig) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let dir = &args.out_dir;
    let opts = SimOptions::default();
    let ranges = GenerationRanges::default();
    let mut manifest = RunManifest::new(args.seed, sim.to_config_string());
    manifest
        .parameters
        .extend(pipeline_parameters(&args).into_iter());

    // Stage 1: pseudo-experimental data from the hidden true pair.
    let real_path = dir.join("real.csv");
    let real = manifest.time_stage("make-pseudo-experimental", || {
        let data = datagen::make_pseudo_experimental(
            args.n_real,
            &args.true_coeffs,
            args.noise,
            args.seed,
            &ranges,
            sim,
            &opts,
        )?;
        datagen::write_dataset(&data, &real_path)?;
        Ok(data)
    })?;
    manifest.record_output(&real_path)?;

    // Stage 2: 80/20 split.
    let train_path = dir.join("real_train.csv");
    let test_path = dir.join("real_test.csv");
    let (real_train, real_test) = manifest.time_stage("split", || {
        let (train, test) = datagen::split(&real, 0.2, args.seed, true)?;
        datagen::write_dataset(&train, &train_path)?;
        datagen::write_dataset(&test, &test_path)?;
        Ok((train, test))
    })?;
    manifest.record_output(&train_path)?;
    manifest.record_output(&test_path)?;

    // Stage 3: coefficient estimation on the training split.
    let scores_path = dir.join("pair_scores.csv");
    let fitted = manifest.time_stage("estimate", || {
        let grid = estimate_grid(args.grid_min, args.grid_max, args.grid_step, false)?;
        let scores = estimation::grid_search(&real_train, &grid, sim, &opts)?;
        write_text(&scores_path, &estimation::scores_to_csv(&scores, Some(50)))?;
        Ok(estimation::select_pair(&scores)?)
    })?;
    manifest.record_output(&scores_path)?;
    manifest.metrics.insert("fitted_cl".into(), fitted.lift);
    manifest.metrics.insert("fitted_cd".into(), fitted.drag);
    println!("fitted cl={} cd={}", fitted.lift, fitted.drag);

    // Stage 4: label the full synthetic grid with the fitted pair.
    let pool_path = dir.join("pool.csv");
    let pool = manifest.time_stage("generate", || {
        let grid = datagen::generate_grid(&ranges);
        let data = datagen::label_grid(&grid, &fitted, sim, &opts)?;
        datagen::write_dataset(&data, &pool_path)?;
        Ok(data)
    })?;
    manifest.record_output(&pool_path)?;

    // Stage 5: balanced simulated sample, excluding all real configurations.
    let sim_path = dir.join("sim.csv");
    let sim_data = manifest.time_stage("sample", || {
        let data = if args.sim_size == 0 {
            Dataset::new(Vec::new(), Provenance::Simulated)
        } else {
            datagen::balanced_sample(&pool, args.sim_size, &real, args.seed)?
        };
        datagen::write_dataset(&data, &sim_path)?;
        Ok(data)
    })?;
    manifest.record_output(&sim_path)?;

    // Stage 6: train.
    let model_path = dir.join("model.txt");
    let model = manifest.time_stage("train", || {
        let cfg = TrainConfig {
            lambda: args.lambda,
            epochs: args.epochs,
            seed: args.seed,
            ..TrainConfig::default()
        };
        let (model, _) = mlp::train(MlpModel::init(args.seed), &real_train, &sim_data, &cfg)?;
        mlp::write_model(&model, &model_path)?;
        Ok(model)
    })?;
    manifest.record_output(&model_path)?;

    // Stage 7: evaluate on the held-out real rows plus extra configurations
    // labeled with the hidden true pair (noise-free verification rows).
    let eval_path = dir.join("eval.csv");
    let metrics = manifest.time_stage("evaluate", || {
        let verify = datagen::make_pseudo_experimental(
            args.n_verify,
            &args.true_coeffs,
            0.0,
            args.seed.wrapping_add(1),
            &ranges,
            sim,
            &opts,
        )?;
        let mut rows = real_test.rows.clone();
        rows.extend(verify.rows.iter().copied());
        let eval_set = Dataset::new(rows, Provenance::Experimental);
        datagen::write_dataset(&eval_set, &eval_path)?;
        Ok(mlp::evaluate(&model, &eval_set, 0.5)?)
    })?;
    manifest.record_output(&eval_path)?;
    manifest.metrics.insert("overall_acc".into(), metrics.overall_acc);
    manifest.metrics.insert("f1_3pt".into(), metrics.f1_3pt);
    manifest.metrics.insert("f1_2pt".into(), metrics.f1_2pt);
    println!(
        "overall_acc={:.4} f1_3pt={:.4} f1_2pt={:.4}",
        metrics.overall_acc, metrics.f1_3pt, metrics.f1_2pt
    );

    let manifest_path = dir.join("manifest.json");
    manifest.write(&manifest_path)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn pipeline_parameters(args: &PipelineArgs) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("true_cl".into(), args.true_coeffs.lift.to_string()),
        ("true_cd".into(), args.true_coeffs.drag.to_string()),
        ("noise".into(), args.noise.to_string()),
        ("n_real".into(), args.n_real.to_string()),
        ("sim_size".into(), args.sim_size.to_string()),
        ("n_verify".into(), args.n_verify.to_string()),
        ("grid_min".into(), args.grid_min.to_string()),
        ("grid_max".into(), args.grid_max.to_string()),
        ("grid_step".into(), args.grid_step.to_string()),
        ("lambda".into(), args.lambda.to_string()),
        ("epochs".into(), args.epochs.to_string()),
    ])
}
