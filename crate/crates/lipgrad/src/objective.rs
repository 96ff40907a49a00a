//! Problem contract: a box-constrained objective evaluated jointly with its
//! gradient, plus trial accounting.
//!
//! One *trial* is one joint evaluation of `f(x)` and `f'(x)`. The gradient's
//! Lipschitz constant is never an input; the solver estimates it adaptively.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute per-coordinate slack for the domain membership check. Exact
/// ternary coordinates rounded back to floats may land marginally outside.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// A point in problem coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinate vectors.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidConfig("point must have dimension >= 1".into()));
        }
        if let Some((i, &v)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "point coordinate {i} is not finite: {v}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// One trial: the point, the objective value, and the full gradient there.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: Point,
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Counts evaluations for exactly one solver run.
#[derive(Debug, Default)]
pub struct TrialCounter {
    count: u64,
}

impl TrialCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of `evaluate` calls since creation.
    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Joint value-and-gradient evaluator. Must be pure and deterministic.
pub type Evaluator = dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync;

/// A box-constrained minimization problem.
pub struct Problem {
    dimension: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    evaluator: Box<Evaluator>,
    known_optimum: Option<(Point, f64)>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dimension", &self.dimension)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("known_optimum", &self.known_optimum)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Builds a problem over the box `[lower, upper]`. Every side must be
    /// non-degenerate (`lower[j] < upper[j]`).
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        evaluator: impl Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static,
    ) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidConfig(format!(
                "domain bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for j in 0..lower.len() {
            if !lower[j].is_finite() || !upper[j].is_finite() || lower[j] >= upper[j] {
                return Err(Error::InvalidConfig(format!(
                    "domain side {j} is degenerate: [{}, {}]",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self {
            dimension: lower.len(),
            lower,
            upper,
            evaluator: Box::new(evaluator),
            known_optimum: None,
        })
    }

    /// Attaches the known global optimum, for benchmarking only.
    pub fn with_known_optimum(mut self, x_star: Point, f_star: f64) -> Result<Self> {
        if x_star.dim() != self.dimension {
            return Err(Error::InvalidConfig(
                "known optimum dimension does not match the problem".into(),
            ));
        }
        self.known_optimum = Some((x_star, f_star));
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn known_optimum(&self) -> Option<(&Point, f64)> {
        self.known_optimum.as_ref().map(|(p, v)| (p, *v))
    }

    /// Euclidean length of the domain's main diagonal.
    pub fn root_diagonal(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    fn check_inside(&self, point: &Point) -> Result<()> {
        if point.dim() != self.dimension {
            return Err(Error::InvalidConfig(format!(
                "point dimension {} does not match problem dimension {}",
                point.dim(),
                self.dimension
            )));
        }
        for (j, &v) in point.coords().iter().enumerate() {
            if v < self.lower[j] - DOMAIN_SLACK || v > self.upper[j] + DOMAIN_SLACK {
                return Err(Error::DomainViolation {
                    point: point.coords().to_vec(),
                    coord: j,
                    value: v,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
        }
        Ok(())
    }
}

/// Performs one trial: evaluates the objective and its gradient at `point`,
/// incrementing `counter` by exactly one. Non-finite outputs are hard errors.
pub fn evaluate(problem: &Problem, point: Point, counter: &mut TrialCounter) -> Result<TrialRecord> {
    problem.check_inside(&point)?;
    let (value, gradient) = (problem.evaluator)(point.coords());
    counter.count += 1;
    if !value.is_finite()
        || gradient.len() != problem.dimension
        || gradient.iter().any(|g| !g.is_finite())
    {
        return Err(Error::NonFiniteEvaluation {
            point: point.coords().to_vec(),
            value,
            gradient,
        });
    }
    Ok(TrialRecord {
        point,
        value,
        gradient,
    })
}

/// Number of trials charged to `counter` so far.
pub fn trial_count(counter: &TrialCounter) -> u64 {
    counter.count()
}
