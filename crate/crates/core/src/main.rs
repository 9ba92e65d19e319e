use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fixsim::engine::{Arithmetic, FxConfig, MacPosition, NormShiftPolicy, DEFAULT_NORM_OVERFLOW_BITS};
use fixsim::fxcore::{AdjustMethod, FxFormat, RoundingMethod};
use fixsim::harness::{plot_data, report, sweep, write_csv, write_eval_csv, Experiment, SweepGrid};
use fixsim::hwcost::{self, Platform, Scope};
use fixsim::model_io::{load_cifar10, load_manifest, load_mnist, Dataset, Split};

#[derive(Parser)]
#[command(name = "fixsim", version, about = "Bit-exact fixed-point CNN inference simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one configuration on a test set.
    Eval(EvalArgs),
    /// Evaluate every cell of a configuration grid.
    Sweep(SweepArgs),
    /// Look up published hardware cost figures.
    Hwcost(HwcostArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Mnist,
    Cifar10,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdjustArg {
    Nbc,
    Bc,
    Norm,
}

#[derive(clap::Args)]
struct DataArgs {
    /// Model manifest (JSON).
    #[arg(long, default_value = "models/lenet5/manifest.json")]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "mnist")]
    dataset: DatasetKind,
    /// Directory with the dataset files.
    #[arg(long, env = "FIXSIM_DATA_DIR", default_value = "data/mnist")]
    data_dir: PathBuf,
    /// Record wall time per evaluation (makes CSV output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Evaluate in binary64 instead of fixed point.
    #[arg(long, conflicts_with_all = ["bits", "int_bits"])]
    real: bool,
    /// Total word width N.
    #[arg(long, default_value_t = 16)]
    bits: u32,
    /// Integer bits including the sign (default: half of N, rounded up).
    #[arg(long)]
    int_bits: Option<u32>,
    #[arg(long, default_value = "rn")]
    rounding: RoundingMethod,
    #[arg(long, value_enum, default_value = "bc")]
    adjust: AdjustArg,
    #[arg(long, default_value = "rmac")]
    position: MacPosition,
    #[arg(long, default_value_t = DEFAULT_NORM_OVERFLOW_BITS)]
    norm_overflow_bits: u32,
    /// Use this Norm shift for every layer instead of a calibrated plan.
    #[arg(long)]
    norm_shift: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of test images (default: all).
    #[arg(long)]
    limit: Option<usize>,
    /// Write the result as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Grid preset; `default` is widths 4, 6, 8, 10, 16 with every rounding,
    /// adjust and position.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Restrict widths (comma separated), integer bits split evenly.
    #[arg(long, value_delimiter = ',')]
    bits: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NORM_OVERFLOW_BITS)]
    norm_overflow_bits: u32,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Also write accuracy-vs-width series as JSON.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Suppress per-cell progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(clap::Args)]
struct HwcostArgs {
    #[arg(long)]
    rounding: Option<RoundingMethod>,
    /// Selects the accelerator rows when given.
    #[arg(long)]
    position: Option<MacPosition>,
    #[arg(long)]
    scope: Option<Scope>,
    #[arg(long, default_value = "asic")]
    platform: Platform,
    /// Print area and power ratios of `--rounding` over this method.
    #[arg(long)]
    compare_to: Option<RoundingMethod>,
}

type AnyError = Box<dyn std::error::Error>;

fn load_data(args: &DataArgs) -> Result<(Dataset, Option<Dataset>), AnyError> {
    let load = |split| match args.dataset {
        DatasetKind::Mnist => load_mnist(&args.data_dir, split),
        DatasetKind::Cifar10 => load_cifar10(&args.data_dir, split),
    };
    let test = load(Split::Test)?;
    // Calibration prefers training images; fall back to the test set.
    let calibration = load(Split::Train).ok();
    Ok((test, calibration))
}

fn experiment(args: &DataArgs) -> Result<Experiment, AnyError> {
    let model = load_manifest(&args.model)?;
    let (test, calibration) = load_data(args)?;
    Ok(Experiment::new(model, test, calibration)?.with_timing(args.timing))
}

fn create(path: &Path) -> Result<BufWriter<File>, AnyError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?))
}

fn eval(args: EvalArgs) -> Result<(), AnyError> {
    let arithmetic = if args.real {
        Arithmetic::Real
    } else {
        let int_bits = args.int_bits.unwrap_or(args.bits.div_ceil(2));
        let format = FxFormat::new(args.bits, int_bits)?;
        let (adjust, policy) = match (args.adjust, args.norm_shift) {
            (AdjustArg::Nbc, _) => (AdjustMethod::Nbc, NormShiftPolicy::Calibrated),
            (AdjustArg::Bc, _) => (AdjustMethod::Bc, NormShiftPolicy::Calibrated),
            (AdjustArg::Norm, None) => (AdjustMethod::Norm { shift: 0 }, NormShiftPolicy::Calibrated),
            (AdjustArg::Norm, Some(shift)) => (AdjustMethod::Norm { shift }, NormShiftPolicy::Fixed),
        };
        let cfg = FxConfig::new(format, args.rounding, adjust, args.position)
            .with_norm_policy(policy)
            .with_norm_overflow_bits(args.norm_overflow_bits)
            .with_seed(args.seed);
        cfg.validate()?;
        Arithmetic::Fixed(cfg)
    };
    let exp = experiment(&args.data)?;
    let r = exp.run_eval(&arithmetic, args.limit)?;
    let label = match &arithmetic {
        Arithmetic::Real => "real".to_string(),
        Arithmetic::Fixed(cfg) => cfg.to_string(),
    };
    println!(
        "{label}: accuracy {:.2}% ({}/{}), overflow events {}",
        r.accuracy * 100.0,
        r.correct,
        r.images,
        r.overflow_events
    );
    if let Some(path) = args.out {
        let mut w = create(&path)?;
        write_eval_csv(&[r], &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), AnyError> {
    if args.grid != "default" {
        return Err(format!("unknown grid `{}` (available: default)", args.grid).into());
    }
    let mut grid = SweepGrid { seed: args.seed, limit: args.limit, norm_overflow_bits: args.norm_overflow_bits, ..SweepGrid::default() };
    if let Some(bits) = &args.bits {
        grid.formats = bits.iter().map(|&n| FxFormat::half_split(n)).collect::<Result<_, _>>()?;
    }
    let exp = experiment(&args.data)?;
    let quiet = args.quiet;
    let cells = sweep(&exp, &grid, |i, n, cell| {
        if quiet {
            return;
        }
        match &cell.result {
            Ok(r) => eprintln!("[{i}/{n}] {}: {:.2}%", cell.config, r.accuracy * 100.0),
            Err(e) => eprintln!("[{i}/{n}] {}: error: {e}", cell.config),
        }
    })?;
    let mut w = create(&args.out)?;
    write_csv(&cells, &mut w)?;
    w.flush()?;
    if let Some(path) = &args.plot_data {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &plot_data(&cells))?;
        writeln!(w)?;
        w.flush()?;
    }
    print!("{}", report(&cells));
    let failed = cells.iter().filter(|c| c.result.is_err()).count();
    if failed > 0 {
        return Err(format!("{failed} of {} cells failed", cells.len()).into());
    }
    Ok(())
}

fn print_record(r: &hwcost::CostRecord) {
    let mut line = r.key();
    if let Some(a) = r.area {
        line += &format!("  area {a} {}", r.area_unit());
    }
    if let Some(p) = r.power {
        line += &format!("  power {p} {}", r.power_unit());
    }
    if let Some(f) = r.freq_mhz {
        line += &format!("  freq {f} MHz");
    }
    if let (Some(l), Some(f)) = (r.lut, r.ff) {
        line += &format!("  LUT {l}  FF {f}");
    }
    println!("{line}");
}

fn run_hwcost(args: HwcostArgs) -> Result<(), AnyError> {
    let scope = args.scope.unwrap_or(if args.position.is_some() { Scope::Diannao16bit } else { Scope::SingleMult8bit });
    if let Some(other) = args.compare_to {
        let a = args.rounding.ok_or("--compare-to needs --rounding")?;
        let c = hwcost::compare(a, other, scope, args.platform, args.position)?;
        print!("{a} / {other} ({scope}, {}): area x{:.4}", args.platform, c.area_ratio);
        match c.power_ratio {
            Some(p) => println!(", power x{p:.4}"),
            None => println!(),
        }
        return Ok(());
    }
    match args.rounding {
        Some(r) => print_record(hwcost::lookup(scope, args.platform, r, args.position)?),
        None => {
            for r in hwcost::records().iter().filter(|r| {
                args.scope.map_or(true, |s| s == r.scope) && args.position.map_or(true, |p| Some(p) == r.position)
            }) {
                print_record(r);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Hwcost(a) => run_hwcost(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
