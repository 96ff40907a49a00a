//! Benchmark harness: the solved-check, class-level runs, the S / p* / p_avg
//! indicators, operating characteristics (solved-problem curves) and CSV/SVG
//! emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::direct::{run_direct, DirectVariant};
use crate::error::{Error, Result};
use crate::gkls::{generate_function, ClassParams, CLASS_SIZE};
use crate::run::StopReason;
use crate::smoothd::{solve_with_monitor, SolverConfig};

/// Maximal values of the reliability base per standard class, used as the
/// last rung of the default ladder.
pub const CLASS_R_MAX: [f64; 8] = [2.80, 5.80, 3.60, 4.30, 5.80, 6.60, 4.10, 7.80];

/// Default ladder start.
pub const LADDER_START: f64 = 1.1;

/// Default per-problem trial budget.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Default adaptive term, chosen in relation to the problem dimension.
pub fn default_c(dimension: usize) -> f64 {
    match dimension {
        0..=2 => 50.0,
        3 => 100.0,
        4 => 150.0,
        _ => 200.0,
    }
}

/// Default reliability ladder for a standard class: starts at 1.1, grows by
/// a factor of 1.4, and is clipped at the class maximum.
pub fn default_ladder(class_id: u8) -> Vec<f64> {
    let max = CLASS_R_MAX[(class_id.clamp(1, 8) - 1) as usize];
    let mut rungs = Vec::new();
    let mut r = LADDER_START;
    while r < max - 1e-9 {
        rungs.push(r);
        r *= 1.4;
    }
    rungs.push(max);
    rungs
}

/// Whether a trial point lies in the accuracy neighborhood of the known
/// minimizer: `|x(j) - x*(j)| <= eps^(1/N) * |b(j) - a(j)|` for every `j`.
pub fn solved_check(x: &[f64], x_star: &[f64], lower: &[f64], upper: &[f64], eps_class: f64) -> bool {
    debug_assert!(eps_class > 0.0 && eps_class < 1.0);
    let n = x.len() as f64;
    let threshold = eps_class.powf(1.0 / n);
    x.iter()
        .zip(x_star)
        .zip(lower.iter().zip(upper))
        .all(|((xi, si), (a, b))| (xi - si).abs() <= threshold * (b - a).abs())
}

/// Result of one problem run inside a class sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: String,
    pub class: String,
    pub problem: u32,
    /// Trials needed to hit the accuracy neighborhood; `None` marks a run
    /// that ended (by the internal rule or the budget) without solving.
    pub trials_to_solve: Option<u64>,
    pub solved: bool,
    pub best_value: f64,
    pub wall_time: f64,
}

/// A method entry for class runs.
#[derive(Debug, Clone)]
pub enum MethodConfig {
    SmoothD {
        /// Reliability bases tried in ascending order on a shared pool.
        r_values: Vec<f64>,
        c: f64,
        xi: f64,
        /// Internal stopping tolerance; defaults to the class accuracy
        /// coefficient when absent.
        eps: Option<f64>,
    },
    Direct {
        eps_bal: f64,
        locally_biased: bool,
    },
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::SmoothD { .. } => "smoothd",
            MethodConfig::Direct {
                locally_biased: false,
                ..
            } => "direct",
            MethodConfig::Direct {
                locally_biased: true,
                ..
            } => "directl",
        }
    }

    /// Trial cost model: whether one trial buys the gradient too. The
    /// gradient-free baselines never evaluate derivatives, so their trials
    /// are cheaper; reports carry this tag so the counts stay comparable.
    pub fn evaluates_gradients(&self) -> bool {
        matches!(self, MethodConfig::SmoothD { .. })
    }

    /// Default solver setup for a standard class: the reliability ladder
    /// plus the dimension-dependent adaptive term.
    pub fn smoothd_default(params: &ClassParams) -> Self {
        let r_values = match params.class_id {
            Some(id) => default_ladder(id),
            None => vec![LADDER_START, 2.0, 2.8, 4.0, 5.8],
        };
        MethodConfig::SmoothD {
            r_values,
            c: default_c(params.dimension),
            xi: 1e-6,
            eps: None,
        }
    }

    pub fn direct_default(locally_biased: bool) -> Self {
        MethodConfig::Direct {
            eps_bal: 1e-4,
            locally_biased,
        }
    }
}

/// Runs one method over all 100 functions of a class. A run is halted at the
/// first trial inside the accuracy neighborhood, at the method's internal
/// stop, or at the budget; internal stops without the neighborhood count as
/// unsolved.
pub fn run_class(method: &MethodConfig, params: &ClassParams, budget: u64) -> Result<Vec<RunRecord>> {
    params.validate()?;
    let mut records = Vec::with_capacity(CLASS_SIZE);
    for index in 1..=CLASS_SIZE {
        records.push(run_problem(method, params, index, budget));
    }
    Ok(records)
}

/// Runs one method on one function of a class.
pub fn run_problem(
    method: &MethodConfig,
    params: &ClassParams,
    index: usize,
    budget: u64,
) -> RunRecord {
    let started = Instant::now();
    let class = match params.class_id {
        Some(id) => id.to_string(),
        None => "custom".to_string(),
    };
    let base = RunRecord {
        method: method.name().to_string(),
        class,
        problem: index as u32,
        trials_to_solve: None,
        solved: false,
        best_value: f64::NAN,
        wall_time: 0.0,
    };
    match try_run_problem(method, params, index, budget) {
        Ok((trials_to_solve, best_value)) => RunRecord {
            trials_to_solve,
            solved: trials_to_solve.is_some(),
            best_value,
            wall_time: started.elapsed().as_secs_f64(),
            ..base
        },
        Err(_) => RunRecord {
            wall_time: started.elapsed().as_secs_f64(),
            ..base
        },
    }
}

fn try_run_problem(
    method: &MethodConfig,
    params: &ClassParams,
    index: usize,
    budget: u64,
) -> Result<(Option<u64>, f64)> {
    let f = generate_function(params, index)?;
    let problem = f.to_problem()?;
    let x_star = f.global_minimizer().0.to_vec();
    let lower = problem.lower().to_vec();
    let upper = problem.upper().to_vec();
    let eps_class = params.eps;

    match method {
        MethodConfig::SmoothD {
            r_values,
            c,
            xi,
            eps,
        } => {
            if r_values.is_empty() {
                return Err(Error::InvalidConfig("no reliability values".into()));
            }
            let config = SolverConfig {
                r_bar: r_values[0],
                c: *c,
                xi: *xi,
                eps: eps.unwrap_or(eps_class),
                max_trials: budget,
                r_ladder: if r_values.len() > 1 {
                    Some(r_values.clone())
                } else {
                    None
                },
            };
            let result = solve_with_monitor(&problem, &config, |_, rec| {
                solved_check(rec.point.coords(), &x_star, &lower, &upper, eps_class)
            })?;
            let solved_at = if result.stop == StopReason::TargetReached {
                result.target_trial
            } else {
                None
            };
            Ok((solved_at, result.best_value))
        }
        MethodConfig::Direct {
            eps_bal,
            locally_biased,
        } => {
            let variant = if *locally_biased {
                DirectVariant::LocallyBiased
            } else {
                DirectVariant::Standard
            };
            let result = run_direct(&problem, variant, *eps_bal, budget, |_, x, _| {
                solved_check(x, &x_star, &lower, &upper, eps_class)
            })?;
            let solved_at = if result.stop == StopReason::TargetReached {
                result.target_trial
            } else {
                None
            };
            Ok((solved_at, result.best_value))
        }
    }
}

/// Solved-problem curve: pairs `(p, S(p))` where `S(p)` counts problems
/// solved within `p` trials.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingCharacteristic {
    pub method: String,
    pub pairs: Vec<(u64, u32)>,
}

/// Builds the step curve from one method's class records.
pub fn operating_characteristics(records: &[RunRecord]) -> OperatingCharacteristic {
    let method = records
        .first()
        .map(|r| r.method.clone())
        .unwrap_or_default();
    let mut trials: Vec<u64> = records
        .iter()
        .filter(|r| r.solved)
        .filter_map(|r| r.trials_to_solve)
        .collect();
    trials.sort_unstable();
    let mut pairs = Vec::new();
    let mut count = 0u32;
    let mut i = 0;
    while i < trials.len() {
        let p = trials[i];
        while i < trials.len() && trials[i] == p {
            count += 1;
            i += 1;
        }
        pairs.push((p, count));
    }
    OperatingCharacteristic { method, pairs }
}

/// Class-level indicators: solved count, max and mean trials over solved.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub s: u32,
    pub p_star: Option<u64>,
    pub p_avg: Option<f64>,
}

pub fn summarize(records: &[RunRecord]) -> ClassSummary {
    let solved: Vec<u64> = records
        .iter()
        .filter(|r| r.solved)
        .filter_map(|r| r.trials_to_solve)
        .collect();
    if solved.is_empty() {
        return ClassSummary {
            s: 0,
            p_star: None,
            p_avg: None,
        };
    }
    let s = solved.len() as u32;
    let p_star = solved.iter().copied().max();
    let p_avg = Some(solved.iter().sum::<u64>() as f64 / solved.len() as f64);
    ClassSummary { s, p_star, p_avg }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(std::io::BufWriter::new(file))
}

/// Writes records as CSV with the stable column order
/// `method,class,problem,trials,solved,best_value,wall_time`. An unsolved
/// run leaves the trials cell empty.
pub fn emit_records_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(out, "method,class,problem,trials,solved,best_value,wall_time").map_err(io_err)?;
    for r in records {
        let trials = r
            .trials_to_solve
            .map(|t| t.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method, r.class, r.problem, trials, r.solved, r.best_value, r.wall_time
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Parses a records CSV produced by [`emit_records_csv`].
pub fn parse_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let bad = |line: usize, what: &str| {
        Error::InvalidConfig(format!(
            "{}: line {}: {}",
            path.display(),
            line + 1,
            what
        ))
    };
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(bad(i, "expected 7 columns"));
        }
        let trials_to_solve = if cells[3].is_empty() {
            None
        } else {
            Some(cells[3].parse().map_err(|_| bad(i, "bad trials"))?)
        };
        records.push(RunRecord {
            method: cells[0].to_string(),
            class: cells[1].to_string(),
            problem: cells[2].parse().map_err(|_| bad(i, "bad problem index"))?,
            trials_to_solve,
            solved: cells[4].parse().map_err(|_| bad(i, "bad solved flag"))?,
            best_value: cells[5].parse().map_err(|_| bad(i, "bad best value"))?,
            wall_time: cells[6].parse().map_err(|_| bad(i, "bad wall time"))?,
        });
    }
    Ok(records)
}

/// Writes a solved-problem curve as `p,S` rows.
pub fn emit_characteristic_csv(oc: &OperatingCharacteristic, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(out, "p,S").map_err(io_err)?;
    for (p, s) in &oc.pairs {
        writeln!(out, "{p},{s}").map_err(io_err)?;
    }
    Ok(())
}

/// Parses a `p,S` curve; the method label is supplied by the caller.
pub fn parse_characteristic_csv(path: &Path, method: &str) -> Result<OperatingCharacteristic> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let (p, s) = line.split_once(',').ok_or_else(|| {
            Error::InvalidConfig(format!("{}: line {}: expected p,S", path.display(), i + 1))
        })?;
        let parse_err = |_| {
            Error::InvalidConfig(format!("{}: line {}: bad number", path.display(), i + 1))
        };
        pairs.push((p.parse().map_err(parse_err)?, s.parse().map_err(parse_err)?));
    }
    Ok(OperatingCharacteristic {
        method: method.to_string(),
        pairs,
    })
}

const PLOT_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders operating characteristics as a static SVG: log-scaled trial axis,
/// solved count on 0..100, one labeled step polyline per method. Identical
/// input produces byte-identical output.
pub fn emit_plot(curves: &[OperatingCharacteristic], path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::InvalidConfig("no curves to plot".into()));
    }
    let svg = render_plot(curves);
    let mut out = create(path)?;
    out.write_all(svg.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn render_plot(curves: &[OperatingCharacteristic]) -> String {
    const WIDTH: f64 = 800.0;
    const HEIGHT: f64 = 520.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 630.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 470.0;

    let p_max = curves
        .iter()
        .flat_map(|c| c.pairs.iter().map(|&(p, _)| p))
        .max()
        .unwrap_or(10)
        .max(10);
    let decades = (p_max as f64).log10().ceil().max(1.0) as u32;
    let x = |p: u64| LEFT + (p as f64).log10() / decades as f64 * (RIGHT - LEFT);
    let y = |s: u32| BOTTOM - f64::from(s) / 100.0 * (BOTTOM - TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    // horizontal grid and labels every 20 solved problems
    for s in (0..=100).step_by(20) {
        let yy = y(s);
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{yy:.2}\" x2=\"{RIGHT}\" y2=\"{yy:.2}\" stroke=\"#dddddd\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{s}</text>",
            LEFT - 8.0,
            yy + 4.0
        );
    }
    // decade ticks on the trial axis
    for k in 0..=decades {
        let p = 10u64.pow(k);
        let xx = x(p);
        let _ = writeln!(
            svg,
            "<line x1=\"{xx:.2}\" y1=\"{TOP}\" x2=\"{xx:.2}\" y2=\"{BOTTOM}\" stroke=\"#dddddd\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{xx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{p}</text>",
            BOTTOM + 20.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">trials</text>",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">problems solved</text>",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = PLOT_COLORS[i % PLOT_COLORS.len()];
        if !curve.pairs.is_empty() {
            let mut d = String::new();
            let (p0, s0) = curve.pairs[0];
            let _ = write!(d, "M {:.2} {:.2}", x(p0), y(s0));
            for &(p, s) in &curve.pairs[1..] {
                let _ = write!(d, " H {:.2} V {:.2}", x(p), y(s));
            }
            let _ = writeln!(
                svg,
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>"
            );
        }
        let ly = TOP + 18.0 + 22.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            RIGHT + 12.0,
            RIGHT + 42.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            RIGHT + 48.0,
            ly + 4.0,
            curve.method
        );
    }
    svg.push_str("</svg>\n");
    svg
}
