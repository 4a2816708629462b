//! Command-line interface for dataset synthesis, training, evaluation,
//! streaming inference, analysis exports, complexity accounting, and
//! gradient verification.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dbc_core::analysis::{self, Stage};
use dbc_core::data::{read_dataset_csv, write_dataset_csv};
use dbc_core::evaluator::{cross_dataset_eval, evaluate, loao_cv, EvalReport};
use dbc_core::featurizer::infer;
use dbc_core::model::{init_model, load_model, save_model, Dims, FilterBank, ModelParams, Variant};
use dbc_core::real::Real;
use dbc_core::stream::{
    measured_op_counts, op_count_report, read_samples_csv, stream_over_samples, write_stream_csv,
    OpCounts,
};
use dbc_core::synth::{default_config, gen_dataset};
use dbc_core::trainer::{gradcheck_report, train, write_loss_csv, Hyper};
use dbc_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dbc",
    version,
    about = "Behavior classification from triaxial accelerometry with learnable digital filters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset (CSV plus class manifest).
    Synth(SynthArgs),
    /// Train a model on a dataset CSV and write the model file.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset; prints a JSON report.
    Eval(EvalArgs),
    /// Leave-one-animal-out cross-validation; prints a JSON report.
    Loao(LoaoArgs),
    /// Train on one dataset, evaluate on another; prints a JSON report.
    CrossvalDatasets(CrossArgs),
    /// Predict classes for every segment of a dataset CSV.
    Infer(InferArgs),
    /// Stream raw samples through a model, one prediction per segment.
    Stream(StreamArgs),
    /// Spectral density, filter response, and feature exports.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Stored-parameter and per-inference operation counts.
    Complexity(ComplexityArgs),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    /// Five-class defaults: lr 2e-4, decay 2e-3, 60k iterations, L=6.
    #[value(name = "5class")]
    FiveClass,
    /// Six-class defaults: lr 5e-4, decay 4e-3, 40k iterations, L=7.
    #[value(name = "6class")]
    SixClass,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Nonlinear,
    Linear,
    SixFeature,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Nonlinear => Variant::Nonlinear,
            VariantArg::Linear => Variant::Linear,
            VariantArg::SixFeature => Variant::SixFeature,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Args)]
struct TrainOpts {
    /// Hyperparameter profile.
    #[arg(long, value_enum, default_value = "5class")]
    profile: ProfileArg,
    /// Filter structure for the third feature set.
    #[arg(long, value_enum, default_value = "nonlinear")]
    variant: VariantArg,
    /// Training arithmetic precision.
    #[arg(long, value_enum, default_value = "f32")]
    precision: PrecisionArg,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First FIR filter length.
    #[arg(long, default_value_t = 8)]
    k1: usize,
    /// Second FIR filter length.
    #[arg(long, default_value_t = 8)]
    k2: usize,
    /// Hidden layer width; defaults to the profile value (6 or 7).
    #[arg(long)]
    l: Option<usize>,
}

impl TrainOpts {
    fn hyper<T: Real>(&self) -> Hyper<T> {
        let mut hyper = match self.profile {
            ProfileArg::FiveClass => Hyper::<T>::five_class(),
            ProfileArg::SixClass => Hyper::<T>::six_class(),
        };
        if let Some(lr) = self.learning_rate {
            hyper.learning_rate = T::from_f64_lossy(lr);
        }
        if let Some(wd) = self.weight_decay {
            hyper.weight_decay = T::from_f64_lossy(wd);
        }
        if let Some(b) = self.batch_size {
            hyper.batch_size = b;
        }
        if let Some(i) = self.iterations {
            hyper.iterations = i;
        }
        hyper.seed = self.seed;
        hyper
    }

    fn dims(&self, n: usize, c: usize) -> Result<Dims> {
        let l = self.l.unwrap_or(match self.profile {
            ProfileArg::FiveClass => 6,
            ProfileArg::SixClass => 7,
        });
        let variant: Variant = self.variant.into();
        Dims::new(n, self.k1, self.k2, variant.feature_count(), l, c)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset CSV path (class manifest written alongside).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    animals: Option<usize>,
    /// Samples per segment.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Output model file.
    #[arg(long)]
    model_out: PathBuf,
    /// Optional per-iteration loss CSV.
    #[arg(long)]
    loss_out: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct LoaoArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct CrossArgs {
    /// Training dataset CSV.
    #[arg(long)]
    train_data: PathBuf,
    /// Evaluation dataset CSV.
    #[arg(long)]
    test_data: PathBuf,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    model: PathBuf,
    /// Segment CSV in the dataset format.
    #[arg(long)]
    data: PathBuf,
    /// Output predictions CSV (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    model: PathBuf,
    /// Sample CSV with rows t,ax,ay,az.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV of per-segment predictions.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Average amplitude spectral density per class and axis.
    Asd(AsdArgs),
    /// FIR filter magnitude responses.
    Freqz(FreqzArgs),
    /// Per-segment feature export.
    Features(FeatureArgs),
}

#[derive(Args)]
struct AsdArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// normalized | iir_filtered | nonlinear_filtered
    #[arg(long, default_value = "iir_filtered")]
    stage: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FreqzArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of frequency grid points.
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeatureArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Export only the six mean / mean-absolute features.
    #[arg(long)]
    six: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    k1: usize,
    #[arg(long, default_value_t = 8)]
    k2: usize,
    #[arg(long, default_value_t = 9)]
    f: usize,
    #[arg(long, default_value_t = 7)]
    l: usize,
    #[arg(long, default_value_t = 6)]
    c: usize,
    /// Also run the instrumented streaming engine and compare.
    #[arg(long)]
    measured: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random configurations.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Maximum relative error accepted.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Loao(args) => run_loao(args),
        Command::CrossvalDatasets(args) => run_cross(args),
        Command::Infer(args) => run_infer(args),
        Command::Stream(args) => run_stream(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Complexity(args) => run_complexity(args),
        Command::Gradcheck(args) => run_gradcheck(args),
    }
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut config = default_config();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(animals) = args.animals {
        config.animals = animals;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    let ds = gen_dataset(&config)?;
    write_dataset_csv(&ds, &args.out)?;
    println!(
        "wrote {} segments ({} classes, {} animals, N={}) to {}",
        ds.segments.len(),
        ds.class_count(),
        config.animals,
        ds.n,
        args.out.display()
    );
    Ok(())
}

fn train_to_f32<T: Real>(
    ds: &dbc_core::Dataset,
    opts: &TrainOpts,
) -> Result<(ModelParams<f32>, Vec<f64>)> {
    let dims = opts.dims(ds.n, ds.class_count())?;
    let hyper = opts.hyper::<T>();
    let (params, history) = train(ds, &hyper, dims, opts.variant.into())?;
    Ok((
        params.cast::<f32>(),
        history.iter().map(|v| v.to_f64_lossy()).collect(),
    ))
}

fn run_train(args: TrainArgs) -> Result<()> {
    let ds = read_dataset_csv(&args.data)?;
    let (params, history) = match args.opts.precision {
        PrecisionArg::F32 => train_to_f32::<f32>(&ds, &args.opts)?,
        PrecisionArg::F64 => train_to_f32::<f64>(&ds, &args.opts)?,
    };
    std::fs::write(&args.model_out, save_model(&params)?)?;
    if let Some(loss_out) = &args.loss_out {
        write_loss_csv(&history, loss_out)?;
    }
    println!(
        "trained {} model ({} iterations, final loss {:.6}); wrote {}",
        params.variant(),
        history.len(),
        history.last().copied().unwrap_or(f64::NAN),
        args.model_out.display()
    );
    Ok(())
}

fn emit_report(report: &EvalReport, out: Option<&PathBuf>) -> Result<()> {
    let json = report.to_json()?;
    match out {
        Some(path) => {
            std::fs::write(path, &json)?;
            println!(
                "overall MCC {:.4}; report written to {}",
                report.overall_mcc,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
    let ds = read_dataset_csv(&args.data)?;
    let report = evaluate(&ds, &params)?;
    emit_report(&report, args.report_out.as_ref())
}

fn run_loao(args: LoaoArgs) -> Result<()> {
    let ds = read_dataset_csv(&args.data)?;
    let dims = args.opts.dims(ds.n, ds.class_count())?;
    let report = match args.opts.precision {
        PrecisionArg::F32 => {
            loao_cv(&ds, &args.opts.hyper::<f32>(), dims, args.opts.variant.into())?
        }
        PrecisionArg::F64 => {
            loao_cv(&ds, &args.opts.hyper::<f64>(), dims, args.opts.variant.into())?
        }
    };
    emit_report(&report, args.report_out.as_ref())
}

fn run_cross(args: CrossArgs) -> Result<()> {
    let train_ds = read_dataset_csv(&args.train_data)?;
    let test_ds = read_dataset_csv(&args.test_data)?;
    let dims = args.opts.dims(train_ds.n, train_ds.class_count())?;
    let variant = args.opts.variant.into();
    let report = match args.opts.precision {
        PrecisionArg::F32 => {
            cross_dataset_eval(&train_ds, &test_ds, &args.opts.hyper::<f32>(), dims, variant)?
        }
        PrecisionArg::F64 => {
            cross_dataset_eval(&train_ds, &test_ds, &args.opts.hyper::<f64>(), dims, variant)?
        }
    };
    emit_report(&report, args.report_out.as_ref())
}

fn run_infer(args: InferArgs) -> Result<()> {
    let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
    let ds = read_dataset_csv(&args.data)?;
    let mut lines = vec!["segment_index,predicted_class,predicted_name,label".to_string()];
    for (i, seg) in ds.segments.iter().enumerate() {
        let class = infer(seg, &params)?;
        let name = ds
            .class_names
            .get(class)
            .map(String::as_str)
            .unwrap_or("unknown");
        lines.push(format!("{i},{class},{name},{}", seg.label));
    }
    let text = lines.join("\n") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_stream(args: StreamArgs) -> Result<()> {
    let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
    let samples = read_samples_csv(&args.input)?;
    let results = stream_over_samples(&params, &samples);
    write_stream_csv(&results, params.dims.f, &args.out)?;
    println!(
        "streamed {} samples -> {} segment predictions ({})",
        samples.len(),
        results.len(),
        args.out.display()
    );
    Ok(())
}

fn run_analyze(command: AnalyzeCommand) -> Result<()> {
    match command {
        AnalyzeCommand::Asd(args) => {
            let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
            let ds = read_dataset_csv(&args.data)?;
            let stage: Stage = args.stage.parse()?;
            let curves = analysis::asd(&ds, &params, stage)?;
            let expected = 3 * ds.class_count();
            if curves.len() < expected {
                eprintln!(
                    "notice: {} of {} class/axis curves skipped (empty classes)",
                    expected - curves.len(),
                    expected
                );
            }
            analysis::write_asd_csv(&curves, &args.out)?;
            println!("wrote {} curves to {}", curves.len(), args.out.display());
        }
        AnalyzeCommand::Freqz(args) => {
            let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
            let mut responses = Vec::new();
            match &params.filters {
                FilterBank::Nonlinear { h1, h2 } => {
                    for (d, taps) in h1.iter().enumerate() {
                        let (f, m) = analysis::fir_frequency_response(taps, args.points)?;
                        responses.push(("h1".to_string(), d, f, m));
                    }
                    for (d, taps) in h2.iter().enumerate() {
                        let (f, m) = analysis::fir_frequency_response(taps, args.points)?;
                        responses.push(("h2".to_string(), d, f, m));
                    }
                }
                FilterBank::Linear { h } => {
                    for (d, taps) in h.iter().enumerate() {
                        let (f, m) = analysis::fir_frequency_response(taps, args.points)?;
                        responses.push(("h".to_string(), d, f, m));
                    }
                }
                FilterBank::None => {
                    return Err(Error::Config(
                        "six-feature models have no FIR filters".into(),
                    ))
                }
            }
            analysis::write_freqz_csv(&responses, &args.out)?;
            println!(
                "wrote {} responses to {}",
                responses.len(),
                args.out.display()
            );
        }
        AnalyzeCommand::Features(args) => {
            let params: ModelParams<f32> = load_model(&std::fs::read(&args.model)?)?;
            let ds = read_dataset_csv(&args.data)?;
            let rows = analysis::export_features(&ds, &params, args.six)?;
            analysis::write_features_csv(&rows, &args.out)?;
            println!("wrote {} rows to {}", rows.len(), args.out.display());
        }
    }
    Ok(())
}

fn print_op_row(name: &str, norm: u64, feature: u64, classification: u64) {
    println!(
        "{name:<18} {norm:>14} {feature:>12} {classification:>15} {:>10}",
        norm + feature + classification
    );
}

fn run_complexity(args: ComplexityArgs) -> Result<()> {
    let dims = Dims::new(args.n, args.k1, args.k2, args.f, args.l, args.c)?;
    let report = op_count_report(dims)?;
    let p = report.params;
    println!(
        "config: N={} K1={} K2={} F={} L={} C={}",
        args.n, args.k1, args.k2, args.f, args.l, args.c
    );
    println!();
    println!(
        "{:<18} {:>14} {:>12} {:>15} {:>10}",
        "", "normalization", "feature", "classification", "total"
    );
    print_op_row(
        "parameters",
        p.normalization as u64,
        p.feature as u64,
        p.classification as u64,
    );
    let ops = report.ops;
    let row = |get: fn(&OpCounts) -> u64| {
        (
            get(&ops.normalization),
            get(&ops.feature),
            get(&ops.classification),
        )
    };
    let (n, f, c) = row(|o| o.adds);
    print_op_row("additions", n, f, c);
    let (n, f, c) = row(|o| o.abs_evals);
    print_op_row("abs", n, f, c);
    let (n, f, c) = row(|o| o.mults);
    print_op_row("multiplications", n, f, c);
    let (n, f, c) = row(|o| o.tanh_evals);
    print_op_row("tanh", n, f, c);
    let (n, f, c) = row(|o| o.relu_ops);
    print_op_row("relu", n, f, c);
    let (n, f, c) = row(|o| o.argmax_ops);
    print_op_row("argmax", n, f, c);

    if args.measured {
        if args.f != 9 {
            return Err(Error::Config(
                "instrumented measurement runs the full nonlinear pipeline (F=9)".into(),
            ));
        }
        let params = init_model::<f32>(dims, 0, Variant::Nonlinear)?;
        let measured = measured_op_counts(&params);
        println!();
        if measured == ops {
            println!("instrumented streaming engine matches the closed forms on every row");
        } else {
            println!("instrumented streaming engine DIFFERS from the closed forms:");
            println!("  measured: {measured:?}");
            println!("  formula:  {ops:?}");
        }
    }
    Ok(())
}

fn run_gradcheck(args: GradcheckArgs) -> Result<()> {
    let report = gradcheck_report(args.seed, args.runs, args.eps)?;
    for (i, run) in report.runs.iter().enumerate() {
        println!(
            "run {i:>2}: N={:<3} K1={} K2={} L={} C={} batch={} variant={:<9} max rel err {:.3e}",
            run.dims.n,
            run.dims.k1,
            run.dims.k2,
            run.dims.l,
            run.dims.c,
            run.batch_size,
            run.variant.to_string(),
            run.max_rel_err
        );
    }
    println!(
        "max relative error over {} runs: {:.3e} (tolerance {:.1e})",
        report.runs.len(),
        report.max_rel_err,
        args.tolerance
    );
    if report.max_rel_err < args.tolerance {
        println!("gradient check PASSED");
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "gradient check failed: {:.3e} >= {:.1e}",
            report.max_rel_err, args.tolerance
        )))
    }
}
