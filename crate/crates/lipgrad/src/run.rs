//! Run results and the trial-log CSV shared by every solver in the crate.

use std::io::Write;

use crate::error::{Error, Result};

/// One logged trial. Gradient-free methods leave `gradient` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedTrial {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The internal stopping rule fired: the selected box's diagonal became
    /// small enough relative to the root diagonal.
    Converged,
    /// The trial budget was exhausted.
    BudgetExhausted,
    /// The external monitor requested a halt (e.g. the benchmark's
    /// solved-check succeeded).
    TargetReached,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::BudgetExhausted => "budget-exhausted",
            StopReason::TargetReached => "target-reached",
        }
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub best_value: f64,
    pub best_point: Vec<f64>,
    /// Total trials performed (cumulative across restarts on a shared pool).
    pub trials: u64,
    pub iterations: u64,
    pub stop: StopReason,
    /// 1-based index of the trial that satisfied the monitor, if any.
    pub target_trial: Option<u64>,
    /// Lookups served from the shared vertex database instead of evaluating.
    pub reuse_hits: u64,
    /// Full trial log in evaluation order.
    pub log: Vec<LoggedTrial>,
}

impl RunResult {
    /// Writes the trial log as CSV: `trial_index,x(1..N),f,grad(1..N)`,
    /// followed by a `#` summary line. Gradient cells are empty for
    /// gradient-free runs. LF line endings, `.` decimal separator.
    pub fn write_trial_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let dim = self.best_point.len();
        write!(out, "trial_index")?;
        for j in 1..=dim {
            write!(out, ",x{j}")?;
        }
        write!(out, ",f")?;
        for j in 1..=dim {
            write!(out, ",grad{j}")?;
        }
        writeln!(out)?;
        for (i, t) in self.log.iter().enumerate() {
            write!(out, "{}", i + 1)?;
            for x in &t.point {
                write!(out, ",{x}")?;
            }
            write!(out, ",{}", t.value)?;
            match &t.gradient {
                Some(g) => {
                    for v in g {
                        write!(out, ",{v}")?;
                    }
                }
                None => {
                    for _ in 0..dim {
                        write!(out, ",")?;
                    }
                }
            }
            writeln!(out)?;
        }
        write!(
            out,
            "# summary: trials={} iterations={} reuse_hits={} stop={} best_value={} best_point=",
            self.trials,
            self.iterations,
            self.reuse_hits,
            self.stop.as_str(),
            self.best_value
        )?;
        for (j, x) in self.best_point.iter().enumerate() {
            if j > 0 {
                write!(out, ";")?;
            }
            write!(out, "{x}")?;
        }
        writeln!(out)
    }

    /// Writes the trial log to a file path.
    pub fn save_trial_csv(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_trial_csv(&mut w)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}
