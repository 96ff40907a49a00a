//! The efficient (non-redundant) diagonal partition operator: hyperinterval
//! bookkeeping, diagonal quantities, point generation and the three-way
//! subdivision that replaces a selected box by its three children.
//!
//! Boxes are identified by the two endpoints of their main diagonal, stored
//! as exact ternary keys. Diagonal endpoints are deliberately kept as an
//! ordered pair without componentwise sorting: the subdivision produces
//! reversed-orientation middle diagonals, and side lengths use absolute
//! values so orientation never matters.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{split_two_thirds, VertexDB, VertexKey};
use crate::objective::{Problem, TrialCounter, TrialRecord};

/// A hyperinterval: diagonal vertices with cached endpoint data.
#[derive(Debug, Clone)]
pub struct Hyperinterval {
    pub id: usize,
    pub a_key: VertexKey,
    pub b_key: VertexKey,
    pub f_a: f64,
    pub f_b: f64,
    pub grad_a: Vec<f64>,
    pub grad_b: Vec<f64>,
    /// Euclidean length of the main diagonal in problem units.
    pub delta: f64,
    /// Directional derivative of f at `a` along the unit diagonal direction.
    pub dir_deriv_a: f64,
    /// Directional derivative of f at `b` along the same direction.
    pub dir_deriv_b: f64,
    /// Cached local estimate of the gradient's Lipschitz constant over this
    /// box; depends only on endpoint data.
    pub w: f64,
}

impl Hyperinterval {
    fn from_records(
        id: usize,
        a_key: VertexKey,
        b_key: VertexKey,
        a: &TrialRecord,
        b: &TrialRecord,
    ) -> Result<Self> {
        debug_assert!(
            a_key
                .fractions()
                .iter()
                .zip(b_key.fractions())
                .all(|(x, y)| x != y),
            "main diagonal endpoints must differ in every dimension"
        );
        let (delta, dir_deriv_a, dir_deriv_b) = diagonal_quantities(a, b)?;
        let w = crate::smoothd::interval_w(a.value, b.value, dir_deriv_a, dir_deriv_b, delta);
        Ok(Self {
            id,
            a_key,
            b_key,
            f_a: a.value,
            f_b: b.value,
            grad_a: a.gradient.clone(),
            grad_b: b.gradient.clone(),
            delta,
            dir_deriv_a,
            dir_deriv_b,
            w,
        })
    }
}

/// Diagonal length and the two directional derivatives along the diagonal:
/// `f'(a) = sum_j f'_j(a) (b(j) - a(j)) / delta`, same pattern at `b`.
pub fn diagonal_quantities(a: &TrialRecord, b: &TrialRecord) -> Result<(f64, f64, f64)> {
    let ax = a.point.coords();
    let bx = b.point.coords();
    let delta = ax
        .iter()
        .zip(bx)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    if delta == 0.0 {
        return Err(Error::DegenerateInterval);
    }
    let mut dd_a = 0.0;
    let mut dd_b = 0.0;
    for j in 0..ax.len() {
        let step = bx[j] - ax[j];
        dd_a += a.gradient[j] * step;
        dd_b += b.gradient[j] * step;
    }
    Ok((delta, dd_a / delta, dd_b / delta))
}

/// The current partition of the root domain.
pub struct PartitionSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    intervals: Vec<Hyperinterval>,
}

impl PartitionSet {
    /// Builds the initial single-interval partition spanning the whole
    /// domain, from the trials at the two root corners.
    pub fn new_root(
        lower: Vec<f64>,
        upper: Vec<f64>,
        a: &TrialRecord,
        b: &TrialRecord,
    ) -> Result<Self> {
        let dim = lower.len();
        let root = Hyperinterval::from_records(
            1,
            VertexKey::root_lower(dim),
            VertexKey::root_upper(dim),
            a,
            b,
        )?;
        Ok(Self {
            lower,
            upper,
            intervals: vec![root],
        })
    }

    /// Number of hyperintervals in the current partition.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Hyperinterval] {
        &self.intervals
    }

    /// Interval by 1-based id.
    pub fn get(&self, id: usize) -> Result<&Hyperinterval> {
        if id == 0 || id > self.intervals.len() {
            return Err(Error::UnknownInterval(id));
        }
        Ok(&self.intervals[id - 1])
    }

    /// Real-space length of side `j` of `interval`.
    pub fn side_length(&self, interval: &Hyperinterval, j: usize) -> f64 {
        let frac = interval.a_key.fraction(j).abs_diff(&interval.b_key.fraction(j));
        frac.value() * (self.upper[j] - self.lower[j])
    }

    /// Smallest index attaining the maximal absolute side length (0-based).
    pub fn longest_side_index(&self, interval: &Hyperinterval) -> usize {
        let mut best = 0;
        let mut best_len = self.side_length(interval, 0);
        for j in 1..interval.a_key.dim() {
            let len = self.side_length(interval, j);
            if len > best_len {
                best = j;
                best_len = len;
            }
        }
        best
    }

    /// Points `u` and `v` for partitioning `interval`: `u` is `a` with the
    /// longest-side coordinate moved two thirds of the way towards `b`, and
    /// `v` is the mirror image from `b` towards `a`. Exact in ternary space.
    pub fn generate_uv(&self, interval: &Hyperinterval) -> Result<(VertexKey, VertexKey)> {
        let i = self.longest_side_index(interval);
        let ta = interval.a_key.fraction(i);
        let tb = interval.b_key.fraction(i);
        let u = interval.a_key.with_fraction(i, split_two_thirds(ta, tb)?);
        let v = interval.b_key.with_fraction(i, split_two_thirds(tb, ta)?);
        Ok((u, v))
    }

    /// Replaces interval `t` by its three children: `[u, v]` keeps id `t`,
    /// `[a_t, v]` becomes id `M+1` and `[u, b_t]` becomes id `M+2`. Returns
    /// the three ids.
    pub fn subdivide(
        &mut self,
        t: usize,
        u_key: VertexKey,
        u_rec: &TrialRecord,
        v_key: VertexKey,
        v_rec: &TrialRecord,
    ) -> Result<[usize; 3]> {
        if t == 0 || t > self.intervals.len() {
            return Err(Error::UnknownInterval(t));
        }
        let m = self.intervals.len();
        let parent = self.intervals[t - 1].clone();
        let parent_a = TrialRecord {
            point: crate::geometry::to_real(&parent.a_key, &self.lower, &self.upper),
            value: parent.f_a,
            gradient: parent.grad_a.clone(),
        };
        let parent_b = TrialRecord {
            point: crate::geometry::to_real(&parent.b_key, &self.lower, &self.upper),
            value: parent.f_b,
            gradient: parent.grad_b.clone(),
        };
        let middle = Hyperinterval::from_records(t, u_key.clone(), v_key.clone(), u_rec, v_rec)?;
        let low_child =
            Hyperinterval::from_records(m + 1, parent.a_key.clone(), v_key, &parent_a, v_rec)?;
        let high_child =
            Hyperinterval::from_records(m + 2, u_key, parent.b_key.clone(), u_rec, &parent_b)?;
        self.intervals[t - 1] = middle;
        self.intervals.push(low_child);
        self.intervals.push(high_child);
        Ok([t, m + 1, m + 2])
    }

    /// Counts how many current intervals reference each vertex as a diagonal
    /// endpoint. Used to check the sharing bound (at most `2^N`).
    pub fn endpoint_reference_counts(&self) -> HashMap<&VertexKey, usize> {
        let mut counts = HashMap::new();
        for iv in &self.intervals {
            *counts.entry(&iv.a_key).or_insert(0) += 1;
            *counts.entry(&iv.b_key).or_insert(0) += 1;
        }
        counts
    }

    /// Plain-text dump, one line per interval:
    /// `id, a_key, b_key, f_a, f_b, delta, w`.
    pub fn dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for iv in &self.intervals {
            writeln!(
                out,
                "{}, {}, {}, {}, {}, {}, {}",
                iv.id, iv.a_key, iv.b_key, iv.f_a, iv.f_b, iv.delta, iv.w
            )?;
        }
        Ok(())
    }
}

/// Why trial acquisition stopped short of a full `(u, v)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquireHalt {
    /// The monitor asked to stop after a new trial.
    Target,
    /// A required evaluation would exceed the trial budget.
    Budget,
}

/// Result of acquiring the pair of trials needed for a subdivision.
#[derive(Debug)]
pub struct AcquiredTrials {
    pub u_index: Option<usize>,
    pub v_index: Option<usize>,
    /// New evaluations performed (0, 1 or 2).
    pub new_trials: u8,
    pub halt: Option<AcquireHalt>,
}

/// Obtains the records at `u` and `v`, evaluating only missing points. When
/// both are missing, `u` is evaluated first. `on_new` is invoked with the
/// 1-based trial index after each fresh evaluation; returning `true` halts
/// acquisition. Evaluations beyond `max_trials` halt with a budget signal.
pub fn acquire_trials(
    db: &mut VertexDB,
    u_key: &VertexKey,
    v_key: &VertexKey,
    problem: &Problem,
    counter: &mut TrialCounter,
    max_trials: u64,
    mut on_new: impl FnMut(u64, &TrialRecord) -> bool,
) -> Result<AcquiredTrials> {
    let mut acquired = AcquiredTrials {
        u_index: None,
        v_index: None,
        new_trials: 0,
        halt: None,
    };
    for (key, slot) in [(u_key, 0usize), (v_key, 1usize)] {
        let index = if db.contains(key) {
            let (i, _) = db.find_or_evaluate(key.clone(), problem, counter)?;
            i
        } else {
            if db.len() as u64 >= max_trials {
                acquired.halt = Some(AcquireHalt::Budget);
                break;
            }
            let (i, _) = db.find_or_evaluate(key.clone(), problem, counter)?;
            acquired.new_trials += 1;
            let stop = on_new((i + 1) as u64, db.record(i));
            if stop {
                acquired.halt = Some(AcquireHalt::Target);
            }
            i
        };
        if slot == 0 {
            acquired.u_index = Some(index);
        } else {
            acquired.v_index = Some(index);
        }
        if acquired.halt.is_some() {
            break;
        }
    }
    Ok(acquired)
}
