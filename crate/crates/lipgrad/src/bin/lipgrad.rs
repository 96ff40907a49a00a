//! Command-line front end: solve single problems, run class benchmarks,
//! inspect generated test functions and plot solved-problem curves.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use lipgrad::bench::{
    self, emit_characteristic_csv, emit_plot, emit_records_csv, operating_characteristics,
    parse_characteristic_csv, run_class, summarize, MethodConfig,
};
use lipgrad::builtins;
use lipgrad::error::Error;
use lipgrad::gkls::{self, generate_function, ClassParams};
use lipgrad::smoothd::{solve_with_hooks, SolverConfig};
use lipgrad::{Problem, StopReason};

#[derive(Parser)]
#[command(name = "lipgrad", version, about = "Deterministic global optimization toolkit")]
struct Cli {
    /// Key = value config file mirroring the flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a named function or a generated test problem.
    Solve(SolveArgs),
    /// Run methods over whole test classes and emit CSV + SVG artifacts.
    Bench(BenchArgs),
    /// Inspect the test-function generator.
    Gkls {
        #[command(subcommand)]
        cmd: GklsCmd,
    },
    /// Combine solved-problem curves from CSV files into one SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in analytic function name.
    #[arg(long)]
    function: Option<String>,
    /// Dimension for scalable built-ins.
    #[arg(long)]
    dim: Option<usize>,
    /// Generated test problem as `class:index`.
    #[arg(long)]
    gkls: Option<String>,
    /// Generator seed (`LIPGRAD_SEED` overrides).
    #[arg(long)]
    seed: Option<u64>,
    /// Reliability base (> 1).
    #[arg(long)]
    rbar: Option<f64>,
    /// Adaptive reliability term.
    #[arg(long)]
    c: Option<f64>,
    /// Floor for the constant estimate.
    #[arg(long)]
    xi: Option<f64>,
    /// Relative diagonal tolerance of the stopping rule.
    #[arg(long)]
    eps: Option<f64>,
    /// Trial budget.
    #[arg(long)]
    max_trials: Option<u64>,
    /// Comma-separated ascending reliability ladder.
    #[arg(long)]
    ladder: Option<String>,
    /// Write the trial log CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stream per-iteration reports to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Classes, e.g. `1-8` or `1,2,5`.
    #[arg(long)]
    classes: Option<String>,
    /// Comma-separated methods among smoothd, direct, directl.
    #[arg(long)]
    methods: Option<String>,
    /// Per-problem trial budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory for CSV and SVG artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed (`LIPGRAD_SEED` overrides).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum GklsCmd {
    /// Print the full description of one generated function.
    Describe {
        #[arg(long)]
        class: Option<u8>,
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate one generated function at a point.
    Eval {
        #[arg(long)]
        class: Option<u8>,
        #[arg(long)]
        index: Option<usize>,
        /// Comma-separated coordinates.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct PlotArgs {
    /// Directory containing `oc_*.csv` curves.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Line-based `key = value` configuration.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "{}: line {}: expected `key = value`",
                        path.display(),
                        i + 1
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("config key '{key}' has invalid value '{raw}'"))
            }),
        }
    }
}

/// Flag value, then config file, then default.
fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn seed_of(flag: Option<u64>, file: &FileConfig) -> Result<u64, Error> {
    if let Ok(env) = std::env::var("LIPGRAD_SEED") {
        return env.parse().map_err(|_| {
            Error::InvalidConfig(format!("LIPGRAD_SEED has invalid value '{env}'"))
        });
    }
    Ok(pick(flag, file.get("seed")?, gkls::DEFAULT_SEED))
}

fn parse_ladder(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad ladder entry '{s}'")))
        })
        .collect()
}

fn parse_classes(text: &str) -> Result<Vec<u8>, Error> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once('-') {
            let lo: u8 = a.trim().parse().map_err(|_| bad_classes(text))?;
            let hi: u8 = b.trim().parse().map_err(|_| bad_classes(text))?;
            if lo == 0 || hi > 8 || lo > hi {
                return Err(bad_classes(text));
            }
            out.extend(lo..=hi);
        } else {
            let id: u8 = part.parse().map_err(|_| bad_classes(text))?;
            if !(1..=8).contains(&id) {
                return Err(bad_classes(text));
            }
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err(bad_classes(text));
    }
    Ok(out)
}

fn bad_classes(text: &str) -> Error {
    Error::InvalidConfig(format!("bad class list '{text}'; expected e.g. 1-8 or 1,2"))
}

fn parse_point(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad coordinate '{s}'")))
        })
        .collect()
}

fn parse_gkls_ref(text: &str) -> Result<(u8, usize), Error> {
    let (class, index) = text.split_once(':').ok_or_else(|| {
        Error::InvalidConfig(format!("bad test-problem reference '{text}'; expected class:index"))
    })?;
    let class = class.trim().parse().map_err(|_| {
        Error::InvalidConfig(format!("bad class in '{text}'"))
    })?;
    let index = index.trim().parse().map_err(|_| {
        Error::InvalidConfig(format!("bad index in '{text}'"))
    })?;
    Ok((class, index))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::InvalidConfig(_) | Error::Generation { .. } => 2,
                Error::DomainViolation { .. }
                | Error::NonFiniteEvaluation { .. }
                | Error::VertexCollision { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Solve(args) => cmd_solve(args, &file),
        Command::Bench(args) => cmd_bench(args, &file),
        Command::Gkls { cmd } => cmd_gkls(cmd, &file),
        Command::Plot(args) => cmd_plot(args, &file),
    }
}

fn cmd_solve(args: SolveArgs, file: &FileConfig) -> Result<ExitCode, Error> {
    let function = args.function.or(file.get("function")?);
    let gkls_ref = args.gkls.or(file.get("gkls")?);
    let problem: Problem = match (&function, &gkls_ref) {
        (Some(name), None) => builtins::by_name(name, pick(args.dim, file.get("dim")?, 2).into())?,
        (None, Some(reference)) => {
            let (class, index) = parse_gkls_ref(reference)?;
            let seed = seed_of(args.seed, file)?;
            let params = ClassParams::table_class(class, seed)?;
            generate_function(&params, index)?.to_problem()?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of --function or --gkls is required".into(),
            ))
        }
    };

    let ladder = match args.ladder.or(file.get("ladder")?) {
        Some(text) => Some(parse_ladder(&text)?),
        None => None,
    };
    let config = SolverConfig {
        r_bar: pick(args.rbar, file.get("rbar")?, 2.0),
        c: pick(args.c, file.get("c")?, 0.0),
        xi: pick(args.xi, file.get("xi")?, 1e-6),
        eps: pick(args.eps, file.get("eps")?, 1e-4),
        max_trials: pick(args.max_trials, file.get("max-trials")?, 1_000_000),
        r_ladder: ladder,
    };
    let verbose = args.verbose || file.get("verbose")?.unwrap_or(false);

    let result = solve_with_hooks(
        &problem,
        &config,
        |_, _| false,
        |report| {
            if verbose {
                eprintln!(
                    "iter k={} p={} M={} m={:.6e} t={} R={:.6e} new={}",
                    report.k, report.p, report.m_count, report.m, report.t, report.r_t,
                    report.new_trials
                );
            }
        },
    )?;

    println!("stop: {}", result.stop.as_str());
    println!("trials: {}", result.trials);
    println!("iterations: {}", result.iterations);
    println!("reuse_hits: {}", result.reuse_hits);
    print!("best_point:");
    for x in &result.best_point {
        print!(" {x}");
    }
    println!();
    println!("best_value: {}", result.best_value);

    if let Some(out) = args.out.or(file.get("out")?) {
        result.save_trial_csv(&out)?;
        println!("trial log written to {}", out.display());
    }
    if result.stop == StopReason::BudgetExhausted {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs, file: &FileConfig) -> Result<ExitCode, Error> {
    let classes = parse_classes(&pick(
        args.classes,
        file.get("classes")?,
        "1-8".to_string(),
    ))?;
    let methods_text = pick(
        args.methods,
        file.get("methods")?,
        "smoothd,direct,directl".to_string(),
    );
    let budget = pick(args.budget, file.get("budget")?, bench::DEFAULT_BUDGET);
    let out_dir = args
        .out
        .or(file.get("out")?)
        .ok_or_else(|| Error::InvalidConfig("--out directory is required".into()))?;
    let seed = seed_of(args.seed, file)?;

    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    for &class_id in &classes {
        let params = ClassParams::table_class(class_id, seed)?;
        let mut curves = Vec::new();
        for method_name in methods_text.split(',') {
            let method = match method_name.trim() {
                "smoothd" => MethodConfig::smoothd_default(&params),
                "direct" => MethodConfig::direct_default(false),
                "directl" => MethodConfig::direct_default(true),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown method '{other}'; expected smoothd, direct or directl"
                    )))
                }
            };
            let records = run_class(&method, &params, budget)?;
            let summary = summarize(&records);
            println!(
                "class {class_id} {:>8}: S={:>3}  p*={}  p_avg={}  [{}]",
                method.name(),
                summary.s,
                summary
                    .p_star
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
                summary
                    .p_avg
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into()),
                if method.evaluates_gradients() {
                    "trials evaluate f and gradient"
                } else {
                    "value-only trials"
                },
            );
            let records_path = out_dir.join(format!("records_class{class_id}_{}.csv", method.name()));
            emit_records_csv(&records, &records_path)?;
            let oc = operating_characteristics(&records);
            let oc_path = out_dir.join(format!("oc_class{class_id}_{}.csv", method.name()));
            emit_characteristic_csv(&oc, &oc_path)?;
            curves.push(oc);
        }
        emit_plot(&curves, &out_dir.join(format!("oc_class{class_id}.svg")))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gkls(cmd: GklsCmd, file: &FileConfig) -> Result<ExitCode, Error> {
    match cmd {
        GklsCmd::Describe { class, index, seed } => {
            let class = pick(class, file.get("class")?, 1);
            let index = pick(index, file.get("index")?, 1);
            let params = ClassParams::table_class(class, seed_of(seed, file)?)?;
            let f = generate_function(&params, index)?;
            let mut stdout = std::io::stdout().lock();
            f.describe(&mut stdout)
                .map_err(|e| Error::io("stdout", e))?;
        }
        GklsCmd::Eval {
            class,
            index,
            point,
            seed,
        } => {
            let class = pick(class, file.get("class")?, 1);
            let index = pick(index, file.get("index")?, 1);
            let point_text = point
                .or(file.get("point")?)
                .ok_or_else(|| Error::InvalidConfig("--point is required".into()))?;
            let x = parse_point(&point_text)?;
            let params = ClassParams::table_class(class, seed_of(seed, file)?)?;
            let f = generate_function(&params, index)?;
            let value = f.eval_f(&x)?;
            let grad = f.eval_grad(&x)?;
            println!("f: {value}");
            print!("grad:");
            for g in grad {
                print!(" {g}");
            }
            println!();
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(args: PlotArgs, file: &FileConfig) -> Result<ExitCode, Error> {
    let input = args
        .input
        .or(file.get("in")?)
        .ok_or_else(|| Error::InvalidConfig("--in directory is required".into()))?;
    let out = args
        .out
        .or(file.get("out")?)
        .ok_or_else(|| Error::InvalidConfig("--out file is required".into()))?;

    let mut paths: Vec<PathBuf> = std::fs::read_dir(&input)
        .map_err(|e| Error::io(input.display().to_string(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("oc_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no oc_*.csv files found in {}",
            input.display()
        )));
    }
    let mut curves = Vec::new();
    for path in &paths {
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("curve")
            .trim_start_matches("oc_")
            .to_string();
        curves.push(parse_characteristic_csv(path, &label)?);
    }
    emit_plot(&curves, &out)?;
    println!("plot written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}
