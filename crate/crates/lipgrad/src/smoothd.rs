//! The derivative-based diagonal solver: adaptive estimation of the
//! gradient's Lipschitz constant, smooth auxiliary characteristics along
//! main diagonals, minimal-characteristic selection, the stopping rule, the
//! adaptive reliability schedule and the restart procedure on a shared trial
//! pool.
//!
//! Each iteration estimates the constant from cached per-interval data,
//! scores every hyperinterval by the minimum of a smooth minorant built on
//! its main diagonal, subdivides the best-scoring box via the non-redundant
//! 2/3 scheme, and reuses previously evaluated vertices for free.

use crate::error::{Error, Result};
use crate::geometry::{VertexDB, VertexKey};
use crate::objective::{Point, Problem, TrialCounter, TrialRecord};
use crate::partition::{acquire_trials, AcquireHalt, Hyperinterval, PartitionSet};
use crate::run::{LoggedTrial, RunResult, StopReason};

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Reliability base, must exceed 1. Larger values trade trials for a
    /// higher chance of locating the global minimizer.
    pub r_bar: f64,
    /// Adaptive reliability term: the effective parameter at iteration `k`
    /// is `r_bar + c / k`.
    pub c: f64,
    /// Floor for the constant estimate when the data looks flat.
    pub xi: f64,
    /// Stopping tolerance: stop once the selected interval's diagonal is at
    /// most `eps` times the root diagonal. Zero disables the rule.
    pub eps: f64,
    /// Trial budget.
    pub max_trials: u64,
    /// Optional ascending ladder of reliability bases; the solver restarts
    /// on the shared trial pool at each successive value.
    pub r_ladder: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r_bar: 2.0,
            c: 0.0,
            xi: 1e-6,
            eps: 1e-4,
            max_trials: 1_000_000,
            r_ladder: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_bar > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "reliability base must exceed 1, got {}",
                self.r_bar
            )));
        }
        if !(self.c >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "adaptive term c must be non-negative, got {}",
                self.c
            )));
        }
        if !(self.xi > 0.0) {
            return Err(Error::InvalidConfig(format!("xi must be positive, got {}", self.xi)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if self.max_trials < 2 {
            return Err(Error::InvalidConfig(
                "max_trials must allow at least the two initial trials".into(),
            ));
        }
        if let Some(ladder) = &self.r_ladder {
            if ladder.is_empty() {
                return Err(Error::InvalidConfig("reliability ladder is empty".into()));
            }
            for w in ladder.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::InvalidConfig(
                        "reliability ladder must be strictly ascending".into(),
                    ));
                }
            }
            if !(ladder[0] > 1.0) {
                return Err(Error::InvalidConfig(
                    "every ladder value must exceed 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Reliability parameter in effect at iteration `k`: `r_bar + c / k`.
pub fn schedule_r(config: &SolverConfig, k: u64) -> f64 {
    debug_assert!(k >= 1);
    config.r_bar + config.c / k as f64
}

/// Local estimate of the gradient's Lipschitz constant from one interval's
/// endpoint data. For a quadratic restricted to the diagonal this recovers
/// the second derivative's magnitude exactly.
pub fn interval_w(f_a: f64, f_b: f64, dd_a: f64, dd_b: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let bracket = 2.0 * (f_a - f_b) + (dd_a + dd_b) * delta;
    let d = (bracket * bracket + (dd_b - dd_a) * (dd_b - dd_a) * delta * delta).sqrt();
    (bracket.abs() + d) / (delta * delta)
}

/// Global constant estimate: `m = r * max(xi, m_hat)`.
pub fn estimate_m(m_hat: f64, r_current: f64, xi: f64) -> f64 {
    debug_assert!(r_current > 1.0 && xi > 0.0 && m_hat >= 0.0);
    r_current * xi.max(m_hat)
}

/// Which rule produced a characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The minorant's derivative changes sign between the two probe points:
    /// the interior minimum competes with the endpoints.
    Interior,
    /// No sign change: the minimum over the diagonal is at an endpoint.
    Endpoints,
}

/// Interior-branch intermediates, kept for diagnostics and tests.
#[derive(Debug, Clone, Copy)]
pub struct InteriorData {
    pub y: f64,
    pub y_prime: f64,
    pub b_coef: f64,
    pub x_hat: f64,
    pub phi_at_x_hat: f64,
}

/// Merit of one hyperinterval: the minimum of the smooth auxiliary function
/// along its main diagonal.
#[derive(Debug, Clone)]
pub struct Characteristic {
    pub interval_id: usize,
    pub r_value: f64,
    pub branch: Branch,
    pub interior: Option<InteriorData>,
}

/// Characteristic from raw diagonal data. `m * delta + dd_b - dd_a` must be
/// positive, which holds whenever `m` comes from [`estimate_m`] with the
/// interval's own `w` included in `m_hat`.
pub fn characteristic_parts(
    f_a: f64,
    f_b: f64,
    dd_a: f64,
    dd_b: f64,
    delta: f64,
    m: f64,
) -> Result<(f64, Branch, Option<InteriorData>)> {
    let denom = m * delta + dd_b - dd_a;
    if !(denom > 0.0) {
        return Err(Error::Contract(format!(
            "auxiliary-function denominator must be positive (m={m}, delta={delta}, dd_a={dd_a}, dd_b={dd_b})"
        )));
    }
    let shared = (f_a - f_b + dd_b * delta + 0.5 * m * delta * delta) / denom;
    let lead = delta / 4.0 + (dd_b - dd_a) / (4.0 * m);
    let y = lead + shared;
    let y_prime = -lead + shared;
    let b_coef = dd_b - 2.0 * m * y + m * delta;
    let pi_y = m * y + b_coef;
    let pi_y_prime = m * y_prime + b_coef;
    if pi_y * pi_y_prime < 0.0 {
        let x_hat = 2.0 * y - dd_b / m - delta;
        let phi = f_b - dd_b * delta - 0.5 * m * delta * delta + m * y * y - 0.5 * m * x_hat * x_hat;
        let r_value = f_a.min(phi).min(f_b);
        Ok((
            r_value,
            Branch::Interior,
            Some(InteriorData {
                y,
                y_prime,
                b_coef,
                x_hat,
                phi_at_x_hat: phi,
            }),
        ))
    } else {
        Ok((f_a.min(f_b), Branch::Endpoints, None))
    }
}

/// Characteristic of a hyperinterval for the current constant estimate.
pub fn characteristic(interval: &Hyperinterval, m: f64) -> Result<Characteristic> {
    let (r_value, branch, interior) = characteristic_parts(
        interval.f_a,
        interval.f_b,
        interval.dir_deriv_a,
        interval.dir_deriv_b,
        interval.delta,
        m,
    )?;
    Ok(Characteristic {
        interval_id: interval.id,
        r_value,
        branch,
        interior,
    })
}

/// Interval with the minimal characteristic; ties go to the smallest id.
pub fn select_interval(characteristics: &[Characteristic]) -> Result<usize> {
    characteristics
        .iter()
        .min_by(|a, b| {
            a.r_value
                .total_cmp(&b.r_value)
                .then(a.interval_id.cmp(&b.interval_id))
        })
        .map(|c| c.interval_id)
        .ok_or_else(|| Error::Contract("no characteristics to select from".into()))
}

/// Stopping rule: the selected diagonal is small relative to the root's.
pub fn check_stop(selected: &Hyperinterval, root_diagonal: f64, eps: f64) -> bool {
    debug_assert!(root_diagonal > 0.0);
    selected.delta <= eps * root_diagonal
}

/// Live state of one solver run.
pub struct SolverState {
    /// Iteration counter, starting at 1.
    pub k: u64,
    /// Current constant estimate.
    pub m: f64,
    /// Max of the cached per-interval estimates over the current partition.
    pub m_hat: f64,
    pub partition: PartitionSet,
    pub db: VertexDB,
    pub counter: TrialCounter,
    pub incumbent_value: f64,
    pub incumbent_point: Point,
}

impl SolverState {
    /// Total trials so far (equals the vertex database size).
    pub fn trials(&self) -> u64 {
        self.db.len() as u64
    }
}

/// What one iteration did.
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// The iteration number that was just executed.
    pub k: u64,
    /// Trials after the iteration.
    pub p: u64,
    /// Intervals after the iteration.
    pub m_count: usize,
    /// Constant estimate used.
    pub m: f64,
    /// Selected interval id.
    pub t: usize,
    /// Its characteristic value.
    pub r_t: f64,
    /// Fresh evaluations this iteration (0, 1 or 2).
    pub new_trials: u8,
}

/// Outcome of one iteration.
#[derive(Debug)]
pub enum StepOutcome {
    Advanced(IterationReport),
    Stopped(StopReason),
}

type Monitor<'m> = dyn FnMut(u64, &TrialRecord) -> bool + 'm;

/// One full iteration: estimate the constant, score and select an interval,
/// test the stopping rule, generate and acquire the two split points, and
/// subdivide. Exactly one interval is replaced by three on success.
pub fn iterate(
    state: &mut SolverState,
    config: &SolverConfig,
    problem: &Problem,
) -> Result<StepOutcome> {
    iterate_monitored(state, config, problem, &mut |_, _| false)
}

pub(crate) fn iterate_monitored(
    state: &mut SolverState,
    config: &SolverConfig,
    problem: &Problem,
    monitor: &mut Monitor<'_>,
) -> Result<StepOutcome> {
    let r = schedule_r(config, state.k);
    state.m_hat = state
        .partition
        .intervals()
        .iter()
        .map(|iv| iv.w)
        .fold(0.0, f64::max);
    state.m = estimate_m(state.m_hat, r, config.xi);

    let mut best: Option<Characteristic> = None;
    for iv in state.partition.intervals() {
        let ch = characteristic(iv, state.m)?;
        let better = match &best {
            None => true,
            Some(b) => ch.r_value < b.r_value,
        };
        if better {
            best = Some(ch);
        }
    }
    let best = best.ok_or_else(|| Error::Contract("empty partition".into()))?;
    let t = best.interval_id;
    let r_t = best.r_value;

    let selected = state.partition.get(t)?;
    if check_stop(selected, problem.root_diagonal(), config.eps) {
        return Ok(StepOutcome::Stopped(StopReason::Converged));
    }
    let (u_key, v_key) = state.partition.generate_uv(selected)?;

    let db = &mut state.db;
    let counter = &mut state.counter;
    let incumbent_value = &mut state.incumbent_value;
    let incumbent_point = &mut state.incumbent_point;
    let acquired = acquire_trials(
        db,
        &u_key,
        &v_key,
        problem,
        counter,
        config.max_trials,
        |i, rec| {
            if rec.value < *incumbent_value {
                *incumbent_value = rec.value;
                *incumbent_point = rec.point.clone();
            }
            monitor(i, rec)
        },
    )?;

    match acquired.halt {
        Some(AcquireHalt::Target) => return Ok(StepOutcome::Stopped(StopReason::TargetReached)),
        Some(AcquireHalt::Budget) => {
            return Ok(StepOutcome::Stopped(StopReason::BudgetExhausted))
        }
        None => {}
    }

    let u_rec = state.db.record(acquired.u_index.expect("u acquired")).clone();
    let v_rec = state.db.record(acquired.v_index.expect("v acquired")).clone();
    state.partition.subdivide(t, u_key, &u_rec, v_key, &v_rec)?;

    let executed = state.k;
    state.k += 1;
    Ok(StepOutcome::Advanced(IterationReport {
        k: executed,
        p: state.trials(),
        m_count: state.partition.len(),
        m: state.m,
        t,
        r_t,
        new_trials: acquired.new_trials,
    }))
}

enum InitOutcome {
    Ready(SolverState),
    Halted {
        db: VertexDB,
        counter: TrialCounter,
        target_trial: Option<u64>,
    },
}

/// Evaluates (or re-reads) the two root corners and builds the initial
/// single-interval partition.
fn init_state(
    problem: &Problem,
    mut db: VertexDB,
    mut counter: TrialCounter,
    monitor: &mut Monitor<'_>,
) -> Result<InitOutcome> {
    let dim = problem.dimension();
    for key in [VertexKey::root_lower(dim), VertexKey::root_upper(dim)] {
        let (i, was_new) = db.find_or_evaluate(key, problem, &mut counter)?;
        if was_new && monitor((i + 1) as u64, db.record(i)) {
            return Ok(InitOutcome::Halted {
                db,
                counter,
                target_trial: Some((i + 1) as u64),
            });
        }
    }
    let a = db.get(&VertexKey::root_lower(dim)).expect("corner a").clone();
    let b = db.get(&VertexKey::root_upper(dim)).expect("corner b").clone();
    let partition = PartitionSet::new_root(
        problem.lower().to_vec(),
        problem.upper().to_vec(),
        &a,
        &b,
    )?;
    let (incumbent_value, incumbent_point) = pool_incumbent(&db);
    Ok(InitOutcome::Ready(SolverState {
        k: 1,
        m: 0.0,
        m_hat: 0.0,
        partition,
        db,
        counter,
        incumbent_value,
        incumbent_point,
    }))
}

fn pool_incumbent(db: &VertexDB) -> (f64, Point) {
    let mut best_value = f64::INFINITY;
    let mut best_point = None;
    for rec in db.trial_log() {
        if rec.value < best_value {
            best_value = rec.value;
            best_point = Some(rec.point.clone());
        }
    }
    let p = best_point.expect("pool has at least one trial");
    (best_value, p)
}

fn assemble_result(
    db: &VertexDB,
    iterations: u64,
    stop: StopReason,
    target_trial: Option<u64>,
) -> RunResult {
    let (best_value, best_point) = pool_incumbent(db);
    RunResult {
        best_value,
        best_point: best_point.into_coords(),
        trials: db.len() as u64,
        iterations,
        stop,
        target_trial,
        reuse_hits: db.reuse_hits(),
        log: db
            .trial_log()
            .map(|r| LoggedTrial {
                point: r.point.coords().to_vec(),
                value: r.value,
                gradient: Some(r.gradient.clone()),
            })
            .collect(),
    }
}

struct RunEnd {
    stop: StopReason,
    target_trial: Option<u64>,
    iterations: u64,
}

type IterObserver<'o> = dyn FnMut(&IterationReport) + 'o;

fn drive(
    problem: &Problem,
    config: &SolverConfig,
    db: VertexDB,
    counter: TrialCounter,
    monitor: &mut Monitor<'_>,
    on_iter: &mut IterObserver<'_>,
) -> Result<(RunEnd, VertexDB, TrialCounter)> {
    let mut target_trial = None;
    let mut wrapped = |i: u64, rec: &TrialRecord| {
        if monitor(i, rec) {
            target_trial = Some(i);
            true
        } else {
            false
        }
    };
    let mut state = match init_state(problem, db, counter, &mut wrapped)? {
        InitOutcome::Ready(s) => s,
        InitOutcome::Halted {
            db,
            counter,
            target_trial,
        } => {
            return Ok((
                RunEnd {
                    stop: StopReason::TargetReached,
                    target_trial,
                    iterations: 0,
                },
                db,
                counter,
            ))
        }
    };
    let mut iterations = 0;
    let stop = loop {
        match iterate_monitored(&mut state, config, problem, &mut wrapped)? {
            StepOutcome::Advanced(report) => {
                iterations += 1;
                on_iter(&report);
            }
            StepOutcome::Stopped(reason) => break reason,
        }
    };
    Ok((
        RunEnd {
            stop,
            target_trial,
            iterations,
        },
        state.db,
        state.counter,
    ))
}

/// A solver session: retains the trial pool so later runs with larger
/// reliability values reuse every evaluation already performed.
pub struct Session<'p> {
    problem: &'p Problem,
    config: SolverConfig,
    db: Option<VertexDB>,
    counter: Option<TrialCounter>,
    last_r_bar: Option<f64>,
    last_best_point: Option<Vec<f64>>,
}

/// Result of a restart, reporting whether the incumbent point changed.
#[derive(Debug)]
pub struct RestartOutcome {
    pub result: RunResult,
    pub incumbent_moved: bool,
}

impl<'p> Session<'p> {
    pub fn new(problem: &'p Problem, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            problem,
            config,
            db: None,
            counter: None,
            last_r_bar: None,
            last_best_point: None,
        })
    }

    fn take_pool(&mut self) -> (VertexDB, TrialCounter) {
        let db = self.db.take().unwrap_or_else(|| {
            VertexDB::new(
                self.problem.lower().to_vec(),
                self.problem.upper().to_vec(),
            )
        });
        let counter = self.counter.take().unwrap_or_default();
        (db, counter)
    }

    /// Runs the solver at reliability base `r_bar` on the retained pool.
    pub fn run(&mut self, r_bar: f64, monitor: &mut Monitor<'_>) -> Result<RunResult> {
        self.run_observed(r_bar, monitor, &mut |_| ())
    }

    /// Like [`Session::run`], streaming an [`IterationReport`] per iteration.
    pub fn run_observed(
        &mut self,
        r_bar: f64,
        monitor: &mut Monitor<'_>,
        on_iter: &mut IterObserver<'_>,
    ) -> Result<RunResult> {
        let mut cfg = self.config.clone();
        cfg.r_bar = r_bar;
        cfg.r_ladder = None;
        cfg.validate()?;
        let (db, counter) = self.take_pool();
        let (end, db, counter) = drive(self.problem, &cfg, db, counter, monitor, on_iter)?;
        let result = assemble_result(&db, end.iterations, end.stop, end.target_trial);
        self.db = Some(db);
        self.counter = Some(counter);
        self.last_r_bar = Some(r_bar);
        self.last_best_point = Some(result.best_point.clone());
        Ok(result)
    }

    /// Restarts on the same pool with a strictly larger reliability base.
    pub fn restart_with(
        &mut self,
        new_r_bar: f64,
        monitor: &mut Monitor<'_>,
    ) -> Result<RestartOutcome> {
        let prev_r = self.last_r_bar.ok_or_else(|| {
            Error::InvalidConfig("restart requires a completed prior run".into())
        })?;
        if !(new_r_bar > prev_r) {
            return Err(Error::InvalidConfig(format!(
                "restart reliability {new_r_bar} must exceed the previous value {prev_r}"
            )));
        }
        let prev_best = self.last_best_point.clone();
        let result = self.run(new_r_bar, monitor)?;
        let incumbent_moved = prev_best.as_deref() != Some(result.best_point.as_slice());
        Ok(RestartOutcome {
            result,
            incumbent_moved,
        })
    }

    /// Trials performed so far across all runs of this session.
    pub fn trials(&self) -> u64 {
        self.db.as_ref().map_or(0, |db| db.len() as u64)
    }
}

/// Minimizes `problem`. With a ladder configured, runs the whole ladder on a
/// shared pool and reports the final run (with cumulative counts).
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<RunResult> {
    solve_with_monitor(problem, config, |_, _| false)
}

/// Like [`solve`], invoking `monitor` after every fresh trial; returning
/// `true` halts the run with [`StopReason::TargetReached`].
pub fn solve_with_monitor(
    problem: &Problem,
    config: &SolverConfig,
    monitor: impl FnMut(u64, &TrialRecord) -> bool,
) -> Result<RunResult> {
    solve_with_hooks(problem, config, monitor, |_| ())
}

/// Full-control entry point: a trial monitor plus an iteration observer.
pub fn solve_with_hooks(
    problem: &Problem,
    config: &SolverConfig,
    mut monitor: impl FnMut(u64, &TrialRecord) -> bool,
    mut on_iter: impl FnMut(&IterationReport),
) -> Result<RunResult> {
    config.validate()?;
    let rungs = config
        .r_ladder
        .clone()
        .unwrap_or_else(|| vec![config.r_bar]);
    let mut session = Session::new(problem, config.clone())?;
    let mut total_iterations = 0;
    let mut last: Option<RunResult> = None;
    for &r_bar in &rungs {
        let result = session.run_observed(r_bar, &mut monitor, &mut on_iter)?;
        total_iterations += result.iterations;
        let stop = result.stop;
        last = Some(result);
        if matches!(stop, StopReason::TargetReached | StopReason::BudgetExhausted) {
            break;
        }
    }
    let mut result = last.expect("at least one rung ran");
    result.iterations = total_iterations;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    const XI: f64 = 1e-6;

    fn cfg(r_bar: f64, c: f64, eps: f64) -> SolverConfig {
        SolverConfig {
            r_bar,
            c,
            xi: XI,
            eps,
            max_trials: 1_000_000,
            r_ladder: None,
        }
    }

    #[test]
    fn interval_w_recovers_curvature() {
        // f = 0.5*2*x^2 on [0,1]
        assert!((interval_w(0.0, 1.0, 0.0, 2.0, 1.0) - 2.0).abs() < 1e-15);
        // f = x(x-1) on [0,1]
        assert!((interval_w(0.0, 0.0, -1.0, 1.0, 1.0) - 2.0).abs() < 1e-15);
        // linear f = x
        assert_eq!(interval_w(0.0, 1.0, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn estimate_m_applies_floor() {
        assert!((estimate_m(2.0, 1.5, XI) - 3.0).abs() < 1e-15);
        assert!((estimate_m(0.0, 2.0, XI) - 2e-6).abs() < 1e-21);
        assert!((estimate_m(1e-9, 1.5, XI) - 1.5e-6).abs() < 1e-21);
    }

    #[test]
    fn characteristic_exact_on_signed_quadratic() {
        // f(x) = x(x-1) on [0,1] with m = 2: interior branch recovers the
        // true diagonal minimum exactly.
        let (r, branch, interior) = characteristic_parts(0.0, 0.0, -1.0, 1.0, 1.0, 2.0).unwrap();
        let i = interior.unwrap();
        assert_eq!(branch, Branch::Interior);
        assert!((i.y - 1.0).abs() < 1e-12);
        assert!((i.y_prime - 0.0).abs() < 1e-12);
        assert!((i.b_coef + 1.0).abs() < 1e-12);
        assert!((i.x_hat - 0.5).abs() < 1e-12);
        assert!((i.phi_at_x_hat + 0.25).abs() < 1e-12);
        assert!((r + 0.25).abs() < 1e-12);
    }

    #[test]
    fn characteristic_monotone_linear_takes_endpoints() {
        for m in [1e-6, 1e-3, 0.1] {
            let (r, branch, _) = characteristic_parts(0.0, 1.0, 1.0, 1.0, 1.0, m).unwrap();
            assert_eq!(branch, Branch::Endpoints);
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn characteristic_flat_data_symmetric() {
        let m = 0.8;
        let delta = 2.0;
        let (r, branch, interior) =
            characteristic_parts(0.0, 0.0, 0.0, 0.0, delta, m).unwrap();
        let i = interior.unwrap();
        assert_eq!(branch, Branch::Interior);
        assert!((i.y - 0.75 * delta).abs() < 1e-12);
        assert!((i.y_prime - 0.25 * delta).abs() < 1e-12);
        assert!((i.x_hat - 0.5 * delta).abs() < 1e-12);
        assert!((r + m * delta * delta / 16.0).abs() < 1e-12);
    }

    #[test]
    fn characteristic_rejects_bad_denominator() {
        // dd_a - dd_b so large that m*delta cannot compensate
        let err = characteristic_parts(0.0, 0.0, 5.0, -5.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    fn ch(id: usize, r: f64) -> Characteristic {
        Characteristic {
            interval_id: id,
            r_value: r,
            branch: Branch::Endpoints,
            interior: None,
        }
    }

    #[test]
    fn selection_and_ties() {
        assert_eq!(select_interval(&[ch(1, 3.0), ch(2, 1.0), ch(3, 2.0)]).unwrap(), 2);
        assert_eq!(select_interval(&[ch(1, 1.0), ch(2, 1.0)]).unwrap(), 1);
        assert_eq!(select_interval(&[ch(9, 4.0)]).unwrap(), 9);
        assert!(select_interval(&[]).is_err());
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule_r(&cfg(1.7, 0.0, 0.0), 17), 1.7);
        assert!((schedule_r(&cfg(1.2, 50.0, 0.0), 100) - 1.7).abs() < 1e-15);
        assert!((schedule_r(&cfg(1.2, 50.0, 0.0), 1) - 51.2).abs() < 1e-15);
    }

    #[test]
    fn stop_rule_examples() {
        let problem = quadratic_1d();
        let mut monitor = |_: u64, _: &TrialRecord| false;
        let state = match init_state(
            &problem,
            VertexDB::new(vec![0.0], vec![1.0]),
            TrialCounter::new(),
            &mut monitor,
        )
        .unwrap()
        {
            InitOutcome::Ready(s) => s,
            _ => panic!(),
        };
        let mut iv = state.partition.get(1).unwrap().clone();
        iv.delta = 0.0009;
        assert!(check_stop(&iv, 1.0, 1e-3));
        iv.delta = 0.002;
        assert!(!check_stop(&iv, 1.0, 1e-3));
        // a zero tolerance never fires
        iv.delta = f64::MIN_POSITIVE;
        assert!(!check_stop(&iv, 1.0, 0.0));
    }

    fn quadratic_1d() -> Problem {
        Problem::new(vec![0.0], vec![1.0], |x| {
            (x[0] * (x[0] - 1.0), vec![2.0 * x[0] - 1.0])
        })
        .unwrap()
    }

    #[test]
    fn first_iteration_composition() {
        // On f(x)=x(x-1), r_bar=2, c=0: m = 2*max(xi, 2) = 4, then one
        // subdivision at u=2/3, v=1/3 with two fresh trials.
        let problem = quadratic_1d();
        let config = cfg(2.0, 0.0, 0.0);
        let mut monitor = |_: u64, _: &TrialRecord| false;
        let state = match init_state(
            &problem,
            VertexDB::new(vec![0.0], vec![1.0]),
            TrialCounter::new(),
            &mut monitor,
        )
        .unwrap()
        {
            InitOutcome::Ready(s) => s,
            _ => panic!("init must not halt"),
        };
        let mut state = state;
        assert_eq!(state.trials(), 2);
        assert_eq!(state.partition.len(), 1);
        let report = match iterate(&mut state, &config, &problem).unwrap() {
            StepOutcome::Advanced(r) => r,
            _ => panic!("must advance"),
        };
        assert_eq!(report.k, 1);
        assert!((report.m - 4.0).abs() < 1e-12);
        assert_eq!(report.t, 1);
        assert_eq!(report.new_trials, 2);
        assert_eq!(report.p, 4);
        assert_eq!(report.m_count, 3);
        assert_eq!(state.k, 2);
    }

    #[test]
    fn constant_objective_selects_first_interval() {
        let problem = Problem::new(vec![0.0, 0.0], vec![1.0, 1.0], |_| (3.5, vec![0.0, 0.0]))
            .unwrap();
        let config = cfg(2.0, 0.0, 0.0);
        let mut monitor = |_: u64, _: &TrialRecord| false;
        let mut state = match init_state(
            &problem,
            VertexDB::new(vec![0.0; 2], vec![1.0; 2]),
            TrialCounter::new(),
            &mut monitor,
        )
        .unwrap()
        {
            InitOutcome::Ready(s) => s,
            _ => panic!(),
        };
        // two iterations: all characteristics tie, so id 1 is always chosen
        for _ in 0..2 {
            let report = match iterate(&mut state, &config, &problem).unwrap() {
                StepOutcome::Advanced(r) => r,
                _ => panic!(),
            };
            assert_eq!(report.t, 1);
        }
    }

    #[test]
    fn eps_one_stops_immediately() {
        let problem = quadratic_1d();
        let result = solve(&problem, &cfg(2.0, 0.0, 1.0)).unwrap();
        assert_eq!(result.stop, StopReason::Converged);
        assert_eq!(result.iterations, 0);
        assert_eq!(result.trials, 2);
    }

    #[test]
    fn solve_quadratic_to_analytic_minimum() {
        let problem = quadratic_1d();
        let result = solve(&problem, &cfg(2.0, 0.0, 1e-4)).unwrap();
        assert_eq!(result.stop, StopReason::Converged);
        assert!((result.best_value + 0.25).abs() < 1e-6, "best {}", result.best_value);
    }

    #[test]
    fn solve_2d_shifted_paraboloid() {
        // Global minimum at (1/3, 1/3); a brute-force grid oracle over the
        // domain confirms there is no other basin.
        let problem = Problem::new(vec![0.0, 0.0], vec![1.0, 1.0], |x| {
            let dx = x[0] - 1.0 / 3.0;
            let dy = x[1] - 1.0 / 3.0;
            (dx * dx + dy * dy, vec![2.0 * dx, 2.0 * dy])
        })
        .unwrap();
        let mut oracle_best = (f64::INFINITY, [0.0, 0.0]);
        for i in 0..=100 {
            for j in 0..=100 {
                let x = [i as f64 / 100.0, j as f64 / 100.0];
                let v = (x[0] - 1.0 / 3.0).powi(2) + (x[1] - 1.0 / 3.0).powi(2);
                if v < oracle_best.0 {
                    oracle_best = (v, x);
                }
            }
        }
        assert!((oracle_best.1[0] - 1.0 / 3.0).abs() <= 0.005 + 1e-12);

        let mut config = cfg(2.0, 0.0, 1e-4);
        config.max_trials = 5000;
        let result = solve(&problem, &config).unwrap();
        assert!(result.trials <= 5000);
        assert!((result.best_point[0] - 1.0 / 3.0).abs() < 1e-2);
        assert!((result.best_point[1] - 1.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn budget_exhaustion_signals() {
        let problem = quadratic_1d();
        let mut config = cfg(2.0, 0.0, 0.0);
        config.max_trials = 7;
        let result = solve(&problem, &config).unwrap();
        assert_eq!(result.stop, StopReason::BudgetExhausted);
        assert!(result.trials <= 7);
        assert!(result.best_value < 0.0);
    }

    #[test]
    fn incumbent_never_increases() {
        let problem = Problem::new(vec![0.0], vec![1.0], |x| {
            let v = (7.0 * x[0]).sin() + 0.3 * x[0];
            (v, vec![7.0 * (7.0 * x[0]).cos() + 0.3])
        })
        .unwrap();
        let mut best_so_far = f64::INFINITY;
        let result = solve_with_monitor(&problem, &cfg(3.0, 0.0, 1e-5), |_, rec| {
            assert!(rec.value.is_finite());
            best_so_far = best_so_far.min(rec.value);
            false
        })
        .unwrap();
        assert_eq!(result.best_value, best_so_far);
    }

    #[test]
    fn single_rung_ladder_matches_plain_solve() {
        let problem = quadratic_1d();
        let plain = solve(&problem, &cfg(1.1, 0.0, 1e-4)).unwrap();
        let mut laddered_cfg = cfg(9.9, 0.0, 1e-4); // base ignored when ladder set
        laddered_cfg.r_ladder = Some(vec![1.1]);
        let laddered = solve(&problem, &laddered_cfg).unwrap();
        assert_eq!(plain.trials, laddered.trials);
        assert_eq!(plain.best_value.to_bits(), laddered.best_value.to_bits());
        assert_eq!(plain.log.len(), laddered.log.len());
    }

    #[test]
    fn restart_requires_larger_r() {
        let problem = quadratic_1d();
        let mut session = Session::new(&problem, cfg(1.5, 0.0, 1e-3)).unwrap();
        let mut no_mon = |_: u64, _: &TrialRecord| false;
        session.run(1.5, &mut no_mon).unwrap();
        assert!(session.restart_with(1.5, &mut no_mon).is_err());
        assert!(session.restart_with(1.4, &mut no_mon).is_err());
        assert!(session.restart_with(2.5, &mut no_mon).is_ok());
    }

    #[test]
    fn restart_reuses_pool() {
        let problem = quadratic_1d();
        let mut session = Session::new(&problem, cfg(1.5, 0.0, 1e-2)).unwrap();
        let mut no_mon = |_: u64, _: &TrialRecord| false;
        let first = session.run(1.5, &mut no_mon).unwrap();
        let trials_before = first.trials;
        let outcome = session.restart_with(3.0, &mut no_mon).unwrap();
        // the early search revisits known points; the pool guarantees the
        // shared prefix costs nothing
        assert!(outcome.result.reuse_hits > first.reuse_hits);
        assert!(outcome.result.trials >= trials_before);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Both branches keep the characteristic at or below the best
            /// endpoint value.
            #[test]
            fn endpoint_dominance(
                f_a in -20.0f64..20.0,
                f_b in -20.0f64..20.0,
                dd_a in -50.0f64..50.0,
                dd_b in -50.0f64..50.0,
                delta in 1e-3f64..10.0,
                r in 1.0001f64..10.0,
            ) {
                let w = interval_w(f_a, f_b, dd_a, dd_b, delta);
                let m = estimate_m(w, r, 1e-6);
                let (r_value, _, _) = characteristic_parts(f_a, f_b, dd_a, dd_b, delta, m).unwrap();
                prop_assert!(r_value <= f_a.min(f_b) + 1e-12);
            }

            /// The auxiliary denominator stays positive for any data once
            /// the estimate includes the interval's own local constant.
            #[test]
            fn denominator_positive(
                f_a in -20.0f64..20.0,
                f_b in -20.0f64..20.0,
                dd_a in -50.0f64..50.0,
                dd_b in -50.0f64..50.0,
                delta in 1e-3f64..10.0,
                r in 1.0001f64..10.0,
            ) {
                let w = interval_w(f_a, f_b, dd_a, dd_b, delta);
                let m = estimate_m(w, r, 1e-6);
                prop_assert!(m * delta + dd_b - dd_a > 0.0);
            }

            /// On a quadratic whose curvature equals the estimate, the
            /// characteristic is the exact minimum over the diagonal.
            #[test]
            fn exact_on_quadratics(
                alpha in 0.05f64..20.0,
                beta in -30.0f64..30.0,
                gamma in -5.0f64..5.0,
                delta in 0.1f64..8.0,
            ) {
                let f = |x: f64| alpha * x * x + beta * x + gamma;
                let d = |x: f64| 2.0 * alpha * x + beta;
                let m = 2.0 * alpha;
                let vertex = -beta / (2.0 * alpha);
                let true_min = if (0.0..=delta).contains(&vertex) {
                    f(vertex)
                } else {
                    f(0.0).min(f(delta))
                };
                let (r_value, branch, _) =
                    characteristic_parts(f(0.0), f(delta), d(0.0), d(delta), delta, m).unwrap();
                let scale = 1.0 + true_min.abs();
                prop_assert!(
                    (r_value - true_min).abs() / scale <= 1e-12,
                    "R {} vs true {} (branch {:?})", r_value, true_min, branch
                );
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SolverConfig::default();
        for bad in [
            SolverConfig { r_bar: 1.0, ..base.clone() },
            SolverConfig { xi: 0.0, ..base.clone() },
            SolverConfig { eps: -1.0, ..base.clone() },
            SolverConfig { max_trials: 1, ..base.clone() },
            SolverConfig { r_ladder: Some(vec![2.0, 1.5]), ..base.clone() },
            SolverConfig { r_ladder: Some(vec![]), ..base.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(base.validate().is_ok());
    }
}
