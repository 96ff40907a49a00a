//! Center-sampling DIRECT and its locally-biased variant, as value-only
//! comparison baselines. Neither variant ever evaluates gradients, and
//! neither has an internal stopping rule: runs end on the caller's
//! solved-predicate or on the trial budget.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::objective::{evaluate, Point, Problem, TrialCounter};
use crate::run::{LoggedTrial, RunResult, StopReason};

/// Which selection rule to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectVariant {
    /// Half-diagonal size measure; every box attaining a class minimum may
    /// be divided.
    Standard,
    /// Longest-side size measure; at most one box per distinct size is
    /// divided per sweep.
    LocallyBiased,
}

/// A box in the unit-cube normalization of the domain.
#[derive(Debug, Clone)]
pub struct DirectBox {
    pub id: usize,
    /// Center in unit coordinates.
    pub center: Vec<f64>,
    pub f_center: f64,
    /// Times each side has been trisected.
    pub side_thirds: Vec<u16>,
    /// Size measure used for potential optimality (variant-dependent).
    pub size: f64,
}

impl DirectBox {
    fn new(
        id: usize,
        center: Vec<f64>,
        f_center: f64,
        side_thirds: Vec<u16>,
        variant: DirectVariant,
    ) -> Self {
        let size = size_of(&side_thirds, variant);
        Self {
            id,
            center,
            f_center,
            side_thirds,
            size,
        }
    }
}

/// Size of a box with the given trisection counts: the half-diagonal for
/// standard DIRECT, the longest side for the locally-biased variant.
/// Summation runs over sorted depths so equal multisets give bit-identical
/// sizes.
fn size_of(side_thirds: &[u16], variant: DirectVariant) -> f64 {
    match variant {
        DirectVariant::Standard => {
            let mut depths = side_thirds.to_vec();
            depths.sort_unstable();
            let sum: f64 = depths.iter().map(|&d| 9.0f64.powi(-(d as i32))).sum();
            0.5 * sum.sqrt()
        }
        DirectVariant::LocallyBiased => {
            let min_depth = side_thirds.iter().min().copied().unwrap_or(0);
            3.0f64.powi(-(min_depth as i32))
        }
    }
}

/// Monotone bit pattern for totally ordering finite floats.
fn total_bits(f: f64) -> u64 {
    let b = f.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

#[derive(Default)]
struct Groups {
    by_size: HashMap<u64, Group>,
}

struct Group {
    size: f64,
    members: BTreeSet<(u64, usize)>,
}

impl Groups {
    fn insert(&mut self, b: &DirectBox) {
        self.by_size
            .entry(b.size.to_bits())
            .or_insert_with(|| Group {
                size: b.size,
                members: BTreeSet::new(),
            })
            .members
            .insert((total_bits(b.f_center), b.id));
    }

    fn remove(&mut self, b: &DirectBox) {
        let key = b.size.to_bits();
        if let Some(g) = self.by_size.get_mut(&key) {
            g.members.remove(&(total_bits(b.f_center), b.id));
            if g.members.is_empty() {
                self.by_size.remove(&key);
            }
        }
    }

    /// `(size, best f, ids...)` per class, ascending by size.
    fn class_list(&self, boxes: &[DirectBox], variant: DirectVariant) -> Vec<ClassEntry> {
        let mut classes: Vec<ClassEntry> = self
            .by_size
            .values()
            .map(|g| {
                let &(fbits, first_id) = g.members.iter().next().expect("non-empty group");
                let best_f = boxes[first_id].f_center;
                let ids = match variant {
                    DirectVariant::LocallyBiased => vec![first_id],
                    DirectVariant::Standard => g
                        .members
                        .iter()
                        .take_while(|(fb, _)| *fb == fbits)
                        .map(|&(_, id)| id)
                        .collect(),
                };
                ClassEntry {
                    size: g.size,
                    best_f,
                    ids,
                }
            })
            .collect();
        classes.sort_by(|a, b| a.size.total_cmp(&b.size));
        classes
    }
}

struct ClassEntry {
    size: f64,
    best_f: f64,
    ids: Vec<usize>,
}

/// Potential-optimality over size classes. Class `j` qualifies iff some
/// slope `K > 0` makes it undercut every other class and improve on the
/// incumbent by at least `eps_bal * |fmin|`.
fn select_classes(classes: &[ClassEntry], eps_bal: f64, fmin: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for (j, cj) in classes.iter().enumerate() {
        let mut k_low = 0.0f64;
        let mut k_high = f64::INFINITY;
        for (i, ci) in classes.iter().enumerate() {
            if i == j {
                continue;
            }
            let slope = (ci.best_f - cj.best_f) / (ci.size - cj.size);
            if ci.size < cj.size {
                k_low = k_low.max(slope);
            } else {
                k_high = k_high.min(slope);
            }
        }
        if k_low > k_high || k_high <= 0.0 {
            continue;
        }
        let improves = if k_high.is_infinite() {
            true
        } else {
            cj.best_f - k_high * cj.size <= fmin - eps_bal * fmin.abs()
        };
        if improves {
            out.extend_from_slice(&cj.ids);
        }
    }
    out.sort_unstable();
    out
}

/// Ids of the potentially optimal boxes among `boxes`.
pub fn potentially_optimal(
    boxes: &[DirectBox],
    eps_bal: f64,
    variant: DirectVariant,
) -> Vec<usize> {
    if boxes.is_empty() {
        return Vec::new();
    }
    let mut groups = Groups::default();
    for b in boxes {
        groups.insert(b);
    }
    let fmin = boxes
        .iter()
        .map(|b| b.f_center)
        .fold(f64::INFINITY, f64::min);
    let classes = groups.class_list(boxes, variant);
    select_classes(&classes, eps_bal, fmin)
}

enum Halt {
    Target,
    Budget,
}

/// Trisects `parent` along its longest sides, evaluating the two flanking
/// samples per side and handing out the larger children to the better
/// values. Children receive ids `next_id, next_id+1, ...`; the parent keeps
/// its id and shrinks to the fully divided center box.
fn trisect_core(
    parent: &mut DirectBox,
    next_id: usize,
    variant: DirectVariant,
    mut eval: impl FnMut(&[f64]) -> Result<ControlFlow<Halt, f64>>,
) -> Result<ControlFlow<Halt, Vec<DirectBox>>> {
    let dim = parent.center.len();
    let min_depth = *parent.side_thirds.iter().min().expect("non-empty box");
    let delta = 3.0f64.powi(-(min_depth as i32 + 1));

    struct Sample {
        dim: usize,
        w: f64,
        plus: Vec<f64>,
        f_plus: f64,
        minus: Vec<f64>,
        f_minus: f64,
    }

    let mut samples: Vec<Sample> = Vec::new();
    for j in 0..dim {
        if parent.side_thirds[j] != min_depth {
            continue;
        }
        let mut plus = parent.center.clone();
        plus[j] += delta;
        let mut minus = parent.center.clone();
        minus[j] -= delta;
        let f_plus = match eval(&plus)? {
            ControlFlow::Break(h) => return Ok(ControlFlow::Break(h)),
            ControlFlow::Continue(v) => v,
        };
        let f_minus = match eval(&minus)? {
            ControlFlow::Break(h) => return Ok(ControlFlow::Break(h)),
            ControlFlow::Continue(v) => v,
        };
        samples.push(Sample {
            dim: j,
            w: f_plus.min(f_minus),
            plus,
            f_plus,
            minus,
            f_minus,
        });
    }

    // Best sampled value first: its children keep the largest boxes.
    samples.sort_by(|a, b| a.w.total_cmp(&b.w).then(a.dim.cmp(&b.dim)));

    let mut children = Vec::with_capacity(2 * samples.len());
    let mut depths = parent.side_thirds.clone();
    let mut id = next_id;
    for s in &samples {
        let mut child_depths = depths.clone();
        child_depths[s.dim] += 1;
        children.push(DirectBox::new(
            id,
            s.plus.clone(),
            s.f_plus,
            child_depths.clone(),
            variant,
        ));
        id += 1;
        children.push(DirectBox::new(id, s.minus.clone(), s.f_minus, child_depths, variant));
        id += 1;
        depths[s.dim] += 1;
    }
    parent.side_thirds = depths;
    parent.size = size_of(&parent.side_thirds, variant);
    Ok(ControlFlow::Continue(children))
}

/// Public trisection: samples `c +/- side/3` along every longest side and
/// returns the new child boxes; the parent shrinks in place.
pub fn trisect_and_sample(
    parent: &mut DirectBox,
    next_id: usize,
    variant: DirectVariant,
    problem: &Problem,
    counter: &mut TrialCounter,
) -> Result<Vec<DirectBox>> {
    let flow = trisect_core(parent, next_id, variant, |unit| {
        let real = unit_to_real(unit, problem);
        let rec = evaluate(problem, Point::new(real)?, counter)?;
        Ok(ControlFlow::Continue(rec.value))
    })?;
    match flow {
        ControlFlow::Continue(children) => Ok(children),
        ControlFlow::Break(_) => unreachable!("unmonitored trisection cannot halt"),
    }
}

fn unit_to_real(unit: &[f64], problem: &Problem) -> Vec<f64> {
    unit.iter()
        .zip(problem.lower().iter().zip(problem.upper()))
        .map(|(c, (a, b))| a + c * (b - a))
        .collect()
}

/// Runs DIRECT on `problem`. `solved` sees every trial (index, real-space
/// point, value) and halts the run by returning `true`.
pub fn run_direct(
    problem: &Problem,
    variant: DirectVariant,
    eps_bal: f64,
    max_trials: u64,
    mut solved: impl FnMut(u64, &[f64], f64) -> bool,
) -> Result<RunResult> {
    if !(eps_bal >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "balancing parameter must be non-negative, got {eps_bal}"
        )));
    }
    if max_trials == 0 {
        return Err(Error::InvalidConfig("trial budget must be positive".into()));
    }
    let dim = problem.dimension();
    let mut counter = TrialCounter::new();
    let mut log: Vec<LoggedTrial> = Vec::new();
    let mut fmin = f64::INFINITY;
    let mut best_point = vec![0.0; dim];
    let mut target_trial = None;

    let mut boxes: Vec<DirectBox> = Vec::new();
    let mut groups = Groups::default();

    macro_rules! eval_unit {
        ($unit:expr) => {{
            if counter.count() >= max_trials {
                ControlFlow::Break(Halt::Budget)
            } else {
                let real = unit_to_real($unit, problem);
                let rec = evaluate(problem, Point::new(real)?, counter_ref(&mut counter))?;
                let value = rec.value;
                let coords = rec.point.into_coords();
                if value < fmin {
                    fmin = value;
                    best_point = coords.clone();
                }
                log.push(LoggedTrial {
                    point: coords.clone(),
                    value,
                    gradient: None,
                });
                let index = counter.count();
                if solved(index, &coords, value) {
                    target_trial = Some(index);
                    ControlFlow::Break(Halt::Target)
                } else {
                    ControlFlow::Continue(value)
                }
            }
        }};
    }

    fn counter_ref(c: &mut TrialCounter) -> &mut TrialCounter {
        c
    }

    let mut iterations = 0u64;
    let mut halt: Option<Halt> = None;

    // root box: the whole domain, sampled at its center
    let root_center = vec![0.5; dim];
    match eval_unit!(&root_center) {
        ControlFlow::Break(h) => halt = Some(h),
        ControlFlow::Continue(f) => {
            let b = DirectBox::new(0, root_center, f, vec![0u16; dim], variant);
            groups.insert(&b);
            boxes.push(b);
        }
    }

    while halt.is_none() {
        iterations += 1;
        let classes = groups.class_list(&boxes, variant);
        let selected = select_classes(&classes, eps_bal, fmin);
        debug_assert!(!selected.is_empty());
        'divide: for id in selected {
            let mut parent = boxes[id].clone();
            groups.remove(&parent);
            let next_id = boxes.len();
            let flow = trisect_core(&mut parent, next_id, variant, |unit| Ok(eval_unit!(unit)))?;
            match flow {
                ControlFlow::Break(h) => {
                    // keep the parent registered; the run is over anyway
                    groups.insert(&parent);
                    boxes[id] = parent;
                    halt = Some(h);
                    break 'divide;
                }
                ControlFlow::Continue(children) => {
                    groups.insert(&parent);
                    boxes[id] = parent;
                    for child in children {
                        groups.insert(&child);
                        boxes.push(child);
                    }
                }
            }
        }
    }

    let stop = match halt {
        Some(Halt::Target) => StopReason::TargetReached,
        Some(Halt::Budget) => StopReason::BudgetExhausted,
        None => unreachable!(),
    };
    Ok(RunResult {
        best_value: fmin,
        best_point,
        trials: counter.count(),
        iterations,
        stop,
        target_trial,
        reuse_hits: 0,
        log,
    })
}
