//! Generator of classes of continuously differentiable multiextremal test
//! functions with known local and global minima.
//!
//! Each function is a convex paraboloid systematically distorted inside a
//! set of pairwise-disjoint balls. Inside ball `i` the function is a cubic
//! in the distance to the ball center, blended so that the value and the
//! gradient match the paraboloid on the ball boundary, with a stationary
//! center at the prescribed minimum value. Ball 1 always carries the global
//! minimum. The canonical domain is `[-1, 1]^N`.
//!
//! Generation is deterministic: the class parameters, the seed and the
//! function index are hashed into a counter-based stream cipher, so the same
//! inputs reproduce the same function bit for bit on any platform.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objective::{Point, Problem};

/// Functions per class.
pub const CLASS_SIZE: usize = 100;

/// Default generator seed; override per class or via `LIPGRAD_SEED`.
pub const DEFAULT_SEED: u64 = 1729;

const PLACE_MARGIN: f64 = 0.05;
const RADIUS_MIN: f64 = 0.02;
const RADIUS_SHRINK: f64 = 0.99;
const GAP: f64 = 0.01;
const CENTER_EPS: f64 = 1e-13;
const VALUE_MARGIN: f64 = 0.1;

/// The eight standard class definitions: `(eps, dimension, minima, f_star,
/// dist_to_vertex, attraction_radius)`. Odd rows are the simple classes,
/// even rows the hard ones.
pub const TABLE_CLASSES: [(f64, usize, usize, f64, f64, f64); 8] = [
    (1e-4, 2, 10, -1.0, 0.90, 0.20),
    (1e-4, 2, 10, -1.0, 0.90, 0.10),
    (1e-6, 3, 10, -1.0, 0.66, 0.20),
    (1e-6, 3, 10, -1.0, 0.90, 0.20),
    (1e-6, 4, 10, -1.0, 0.66, 0.20),
    (1e-6, 4, 10, -1.0, 0.90, 0.20),
    (1e-7, 5, 10, -1.0, 0.66, 0.30),
    (1e-7, 5, 10, -1.0, 0.66, 0.20),
];

/// Parameters defining a 100-function test class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub dimension: usize,
    /// Total number of local minima, including the paraboloid vertex.
    pub num_local_minima: usize,
    /// Global minimum value.
    pub global_value: f64,
    /// Distance from the global minimizer to the paraboloid vertex.
    pub dist_to_vertex: f64,
    /// Radius of the global minimizer's ball.
    pub attraction_radius: f64,
    /// Accuracy coefficient used by the benchmark's solved check.
    pub eps: f64,
    /// Standard class id (1..=8) when applicable.
    pub class_id: Option<u8>,
    pub seed: u64,
}

impl ClassParams {
    /// One of the eight standard classes.
    pub fn table_class(id: u8, seed: u64) -> Result<Self> {
        if !(1..=8).contains(&id) {
            return Err(Error::InvalidConfig(format!(
                "standard class id must be 1..=8, got {id}"
            )));
        }
        let (eps, dimension, m, f_star, d, rho) = TABLE_CLASSES[(id - 1) as usize];
        Ok(Self {
            dimension,
            num_local_minima: m,
            global_value: f_star,
            dist_to_vertex: d,
            attraction_radius: rho,
            eps,
            class_id: Some(id),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if self.num_local_minima < 2 {
            return Err(Error::InvalidConfig(
                "at least two local minima are required (vertex plus global ball)".into(),
            ));
        }
        if !(self.global_value < 0.0) {
            return Err(Error::InvalidConfig(
                "global value must lie below the paraboloid value 0".into(),
            ));
        }
        if !(self.attraction_radius > 0.0) || !(self.dist_to_vertex > 0.0) {
            return Err(Error::InvalidConfig(
                "attraction radius and vertex distance must be positive".into(),
            ));
        }
        if self.attraction_radius >= self.dist_to_vertex {
            return Err(Error::InvalidConfig(
                "attraction radius must be smaller than the vertex distance".into(),
            ));
        }
        if self.dist_to_vertex + self.attraction_radius > 1.9 {
            return Err(Error::InvalidConfig(
                "global ball cannot fit in the canonical domain".into(),
            ));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig(
                "class accuracy coefficient must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn label(&self) -> String {
        match self.class_id {
            Some(id) => format!("{id}"),
            None => format!(
                "custom(N={},m={})",
                self.dimension, self.num_local_minima
            ),
        }
    }
}

/// One distortion ball: a local minimum with known location and value.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub min_value: f64,
}

/// A generated test function with fully known minima.
#[derive(Debug, Clone)]
pub struct GklsFunction {
    params: ClassParams,
    index: usize,
    /// Paraboloid vertex.
    vertex: Vec<f64>,
    /// Paraboloid value at the vertex.
    vertex_value: f64,
    /// Distortion balls; ball 0 carries the global minimum.
    balls: Vec<Ball>,
}

fn rng_for(params: &ClassParams, index: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"lipgrad-gkls-v1");
    h.update(params.seed.to_le_bytes());
    h.update((params.dimension as u64).to_le_bytes());
    h.update((params.num_local_minima as u64).to_le_bytes());
    h.update(params.global_value.to_le_bytes());
    h.update(params.dist_to_vertex.to_le_bytes());
    h.update(params.attraction_radius.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn random_unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Generates function `index` (1..=100) of the class. Deterministic in
/// `(params, index)`.
pub fn generate_function(params: &ClassParams, index: usize) -> Result<GklsFunction> {
    params.validate()?;
    if !(1..=CLASS_SIZE).contains(&index) {
        return Err(Error::InvalidConfig(format!(
            "function index must be 1..={CLASS_SIZE}, got {index}"
        )));
    }
    let gen_err = |reason: &str| Error::Generation {
        class: params.label(),
        index,
        reason: reason.into(),
    };

    let mut rng = rng_for(params, index);
    let dim = params.dimension;
    let d = params.dist_to_vertex;
    let rho = params.attraction_radius;

    // Paraboloid vertex and the global ball center at distance d from it.
    let mut vertex = Vec::new();
    let mut global_center = Vec::new();
    let mut placed = false;
    'outer: for _ in 0..64 {
        vertex = (0..dim)
            .map(|_| rng.random_range(-1.0 + PLACE_MARGIN..1.0 - PLACE_MARGIN))
            .collect();
        for _ in 0..256 {
            let dir = random_unit_direction(&mut rng, dim);
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = vertex
                    .iter()
                    .zip(&dir)
                    .map(|(t, e)| t + sign * d * e)
                    .collect();
                if cand.iter().all(|&c| c >= -1.0 + rho && c <= 1.0 - rho) {
                    global_center = cand;
                    placed = true;
                    break 'outer;
                }
            }
        }
    }
    if !placed {
        return Err(gen_err("could not place the global ball inside the domain"));
    }

    // Remaining ball centers, kept clear of the vertex, the global ball,
    // each other and the boundary.
    let extra = params.num_local_minima - 2;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(extra);
    for _ in 0..extra {
        let mut ok = false;
        for _ in 0..20_000 {
            let cand: Vec<f64> = (0..dim)
                .map(|_| rng.random_range(-1.0 + RADIUS_MIN..1.0 - RADIUS_MIN))
                .collect();
            let clear_global = dist(&cand, &global_center) > rho + RADIUS_MIN + GAP;
            let clear_vertex = dist(&cand, &vertex) > RADIUS_MIN + GAP;
            let clear_others = centers
                .iter()
                .all(|c| dist(&cand, c) > 2.0 * RADIUS_MIN + GAP);
            if clear_global && clear_vertex && clear_others {
                centers.push(cand);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(gen_err("ball placement did not converge; class too crowded"));
        }
    }

    // Radii, following the reference generator's scheme: start from half
    // the distance to the nearest neighbor, keep clear of the global ball,
    // then expand every region until the balls nearly touch. Large basins
    // are what make the classes genuinely multiextremal; balls may poke
    // past the domain boundary, but never swallow the vertex.
    let mut radii = vec![0.0f64; extra];
    for (i, center) in centers.iter().enumerate() {
        let mut nearest = dist(center, &global_center);
        for (j, other) in centers.iter().enumerate() {
            if i != j {
                nearest = nearest.min(dist(center, other));
            }
        }
        radii[i] = 0.5 * nearest;
        radii[i] = radii[i].min(dist(center, &global_center) - rho - GAP);
    }
    for (i, center) in centers.iter().enumerate() {
        let mut unclaimed = dist(center, &global_center) - rho;
        for (j, other) in centers.iter().enumerate() {
            if i != j {
                unclaimed = unclaimed.min(dist(center, other) - radii[j]);
            }
        }
        if unclaimed > radii[i] {
            radii[i] = unclaimed;
        }
        radii[i] = radii[i].min(dist(center, &vertex) - GAP);
        radii[i] *= RADIUS_SHRINK;
        if radii[i] < RADIUS_MIN * 0.5 {
            return Err(gen_err("a ball radius collapsed below the minimum"));
        }
    }

    // Local minimum values sit just below the paraboloid's floor over each
    // ball, by a dip scaled with the ball radius. Shallow dips keep the
    // global basin a genuine outlier, which is what makes the classes
    // deceptive for under-estimating searches.
    let mut balls = vec![Ball {
        center: global_center.clone(),
        radius: rho,
        min_value: params.global_value,
    }];
    for (center, &radius) in centers.iter().zip(&radii) {
        let floor = {
            let g = dist(center, &vertex);
            (g - radius) * (g - radius)
        };
        let u: f64 = rng.random_range(0.02..1.0);
        let dip = ((1.0 + u) * radius).min(u * (floor - params.global_value));
        let min_value = (floor - dip).max(params.global_value + VALUE_MARGIN);
        balls.push(Ball {
            center: center.clone(),
            radius,
            min_value,
        });
    }

    let function = GklsFunction {
        params: params.clone(),
        index,
        vertex,
        vertex_value: 0.0,
        balls,
    };
    function.check_geometry().map_err(|reason| Error::Generation {
        class: params.label(),
        index,
        reason,
    })?;
    Ok(function)
}

impl GklsFunction {
    pub fn dimension(&self) -> usize {
        self.params.dimension
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn params(&self) -> &ClassParams {
        &self.params
    }

    pub fn vertex(&self) -> &[f64] {
        &self.vertex
    }

    pub fn vertex_value(&self) -> f64 {
        self.vertex_value
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// The known global minimizer and its value.
    pub fn global_minimizer(&self) -> (&[f64], f64) {
        (&self.balls[0].center, self.balls[0].min_value)
    }

    /// Construction-time contract: pairwise-disjoint balls, vertex outside
    /// every ball, unique global minimum with the exact target value.
    fn check_geometry(&self) -> std::result::Result<(), String> {
        let global = &self.balls[0];
        if global.min_value != self.params.global_value {
            return Err("global ball does not carry the global value".into());
        }
        let d = dist(&global.center, &self.vertex);
        if (d - self.params.dist_to_vertex).abs() > 1e-12 {
            return Err(format!("global center sits at distance {d} from the vertex"));
        }
        for (i, a) in self.balls.iter().enumerate() {
            if !(a.radius > 0.0) {
                return Err(format!("ball {} has radius {}", i + 1, a.radius));
            }
            if dist(&a.center, &self.vertex) <= a.radius {
                return Err(format!("ball {} swallows the vertex", i + 1));
            }
            if i > 0 && a.min_value <= self.params.global_value {
                return Err(format!("ball {} undercuts the global value", i + 1));
            }
            for (j, b) in self.balls.iter().enumerate().skip(i + 1) {
                if dist(&a.center, &b.center) <= a.radius + b.radius {
                    return Err(format!("balls {} and {} overlap", i + 1, j + 1));
                }
            }
        }
        Ok(())
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.params.dimension {
            return Err(Error::InvalidConfig(format!(
                "point dimension {} does not match function dimension {}",
                x.len(),
                self.params.dimension
            )));
        }
        for (j, &v) in x.iter().enumerate() {
            if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::DomainViolation {
                    point: x.to_vec(),
                    coord: j,
                    value: v,
                    lower: -1.0,
                    upper: 1.0,
                });
            }
        }
        Ok(())
    }

    fn active_ball(&self, x: &[f64]) -> Option<&Ball> {
        self.balls.iter().find(|b| dist(x, &b.center) <= b.radius)
    }

    /// Objective value; `x` must lie in the canonical domain.
    pub fn eval_f(&self, x: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value_unchecked(x))
    }

    /// Gradient; `x` must lie in the canonical domain.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self.active_ball(x) {
            None => self.paraboloid(x),
            Some(ball) => {
                let r = dist(x, &ball.center);
                if r <= CENTER_EPS {
                    return ball.min_value;
                }
                let (scal, a, rho) = self.ball_terms(ball, x);
                (2.0 / (rho * rho) * scal / r - 2.0 * a / rho.powi(3)) * r.powi(3)
                    + (1.0 - 4.0 * scal / (r * rho) + 3.0 * a / (rho * rho)) * r * r
                    + ball.min_value
            }
        }
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self.active_ball(x) {
            None => x
                .iter()
                .zip(&self.vertex)
                .map(|(xi, ti)| 2.0 * (xi - ti))
                .collect(),
            Some(ball) => {
                let r = dist(x, &ball.center);
                if r <= CENTER_EPS {
                    return vec![0.0; x.len()];
                }
                let (scal, a, rho) = self.ball_terms(ball, x);
                let coeff_g = 2.0 * r * r / (rho * rho) - 4.0 * r / rho;
                let coeff_u = 4.0 * scal / (rho * rho) - 6.0 * a * r / rho.powi(3) + 2.0
                    - 4.0 * scal / (r * rho)
                    + 6.0 * a / (rho * rho);
                (0..x.len())
                    .map(|j| {
                        let u_j = x[j] - ball.center[j];
                        let g_j = self.vertex[j] - ball.center[j];
                        coeff_g * g_j + coeff_u * u_j
                    })
                    .collect()
            }
        }
    }

    fn paraboloid(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.vertex)
            .map(|(xi, ti)| (xi - ti) * (xi - ti))
            .sum::<f64>()
            + self.vertex_value
    }

    /// `(scal, A, rho)` for the cubic inside `ball`:
    /// `scal = <x - M, T - M>` and `A = |T - M|^2 + t - f_ball`.
    fn ball_terms(&self, ball: &Ball, x: &[f64]) -> (f64, f64, f64) {
        let mut scal = 0.0;
        let mut g_sq = 0.0;
        for ((xi, ci), ti) in x.iter().zip(&ball.center).zip(&self.vertex) {
            let u_j = xi - ci;
            let g_j = ti - ci;
            scal += u_j * g_j;
            g_sq += g_j * g_j;
        }
        let a = g_sq + self.vertex_value - ball.min_value;
        (scal, a, ball.radius)
    }

    /// Wraps the function as a [`Problem`] on `[-1, 1]^N` with the known
    /// optimum attached.
    pub fn to_problem(&self) -> Result<Problem> {
        let dim = self.params.dimension;
        let me = self.clone();
        let problem = Problem::new(vec![-1.0; dim], vec![1.0; dim], move |x| {
            (me.value_unchecked(x), me.gradient_unchecked(x))
        })?;
        let (x_star, f_star) = self.global_minimizer();
        problem.with_known_optimum(Point::new(x_star.to_vec())?, f_star)
    }

    /// Plain-text description: the vertex, its value, and every ball.
    pub fn describe(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "class {} index {} dimension {}",
            self.params.label(),
            self.index,
            self.params.dimension
        )?;
        write!(out, "paraboloid vertex:")?;
        for v in &self.vertex {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
        writeln!(out, "paraboloid value: {}", self.vertex_value)?;
        for (i, b) in self.balls.iter().enumerate() {
            write!(out, "ball {}: center", i + 1)?;
            for c in &b.center {
                write!(out, " {c}")?;
            }
            writeln!(out, " radius {} value {}", b.radius, b.min_value)?;
        }
        Ok(())
    }
}

/// Crude estimate of the gradient's Lipschitz constant by sampling random
/// short segments. Meant for test-suite assertions, not for the solver.
pub fn gradient_lipschitz_estimate(f: &GklsFunction, segments: usize, seed: u64) -> f64 {
    let dim = f.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4;
    let mut best: f64 = 0.0;
    for _ in 0..segments {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.999..0.999)).collect();
        let dir = random_unit_direction(&mut rng, dim);
        let y: Vec<f64> = x
            .iter()
            .zip(&dir)
            .map(|(xi, e)| (xi + h * e).clamp(-1.0, 1.0))
            .collect();
        let step = dist(&x, &y);
        if step < 1e-9 {
            continue;
        }
        let gx = f.gradient_unchecked(&x);
        let gy = f.gradient_unchecked(&y);
        let diff = gx
            .iter()
            .zip(&gy)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        best = best.max(diff / step);
    }
    best
}
