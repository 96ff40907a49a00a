//! Named analytic problems with hand-derived gradients, for the CLI and for
//! smoke tests. All are smooth on their boxes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::objective::{Point, Problem};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 7] = [
    "sphere",
    "shifted_sphere",
    "rosenbrock",
    "rastrigin",
    "branin",
    "camel",
    "double_well",
];

/// Builds a named problem. `dim` applies to the scalable functions and is
/// ignored by the fixed-dimension ones.
pub fn by_name(name: &str, dim: Option<usize>) -> Result<Problem> {
    let n = dim.unwrap_or(2);
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    match name {
        "sphere" => {
            let p = Problem::new(vec![-5.12; n], vec![5.12; n], |x| {
                (
                    x.iter().map(|v| v * v).sum(),
                    x.iter().map(|v| 2.0 * v).collect(),
                )
            })?;
            p.with_known_optimum(Point::new(vec![0.0; n])?, 0.0)
        }
        "shifted_sphere" => {
            let p = Problem::new(vec![0.0; n], vec![1.0; n], |x| {
                (
                    x.iter().map(|v| (v - 1.0 / 3.0) * (v - 1.0 / 3.0)).sum(),
                    x.iter().map(|v| 2.0 * (v - 1.0 / 3.0)).collect(),
                )
            })?;
            p.with_known_optimum(Point::new(vec![1.0 / 3.0; n])?, 0.0)
        }
        "rosenbrock" => {
            if n < 2 {
                return Err(Error::InvalidConfig(
                    "rosenbrock needs dimension >= 2".into(),
                ));
            }
            let p = Problem::new(vec![-2.048; n], vec![2.048; n], |x| {
                let mut f = 0.0;
                for i in 0..x.len() - 1 {
                    f += 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2);
                }
                let mut g = vec![0.0; x.len()];
                for i in 0..x.len() {
                    if i + 1 < x.len() {
                        g[i] += -400.0 * x[i] * (x[i + 1] - x[i] * x[i]) - 2.0 * (1.0 - x[i]);
                    }
                    if i > 0 {
                        g[i] += 200.0 * (x[i] - x[i - 1] * x[i - 1]);
                    }
                }
                (f, g)
            })?;
            p.with_known_optimum(Point::new(vec![1.0; n])?, 0.0)
        }
        "rastrigin" => {
            let p = Problem::new(vec![-5.12; n], vec![5.12; n], |x| {
                let f = 10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>();
                let g = x
                    .iter()
                    .map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin())
                    .collect();
                (f, g)
            })?;
            p.with_known_optimum(Point::new(vec![0.0; n])?, 0.0)
        }
        "branin" => {
            let a = 1.0;
            let b = 5.1 / (4.0 * PI * PI);
            let c = 5.0 / PI;
            let r = 6.0;
            let s = 10.0;
            let t = 1.0 / (8.0 * PI);
            let p = Problem::new(vec![-5.0, 0.0], vec![10.0, 15.0], move |x| {
                let inner = x[1] - b * x[0] * x[0] + c * x[0] - r;
                let f = a * inner * inner + s * (1.0 - t) * x[0].cos() + s;
                let g = vec![
                    2.0 * a * inner * (c - 2.0 * b * x[0]) - s * (1.0 - t) * x[0].sin(),
                    2.0 * a * inner,
                ];
                (f, g)
            })?;
            p.with_known_optimum(Point::new(vec![PI, 2.275])?, 0.397887)
        }
        "camel" => {
            let p = Problem::new(vec![-3.0, -2.0], vec![3.0, 2.0], |x| {
                let (x1, x2) = (x[0], x[1]);
                let f = (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1
                    + x1 * x2
                    + (-4.0 + 4.0 * x2 * x2) * x2 * x2;
                let g = vec![
                    8.0 * x1 - 8.4 * x1.powi(3) + 2.0 * x1.powi(5) + x2,
                    x1 - 8.0 * x2 + 16.0 * x2.powi(3),
                ];
                (f, g)
            })?;
            p.with_known_optimum(Point::new(vec![0.0898, -0.7126])?, -1.0316)
        }
        "double_well" => deceptive_double_well(),
        other => Err(Error::InvalidConfig(format!(
            "unknown function '{other}'; available: {}",
            NAMES.join(", ")
        ))),
    }
}

/// A deceptive 1-D objective on `[0, 1]`: a broad shallow parabolic well at
/// 0.2 and a narrow deep global well at 0.85, on a flat background. Low
/// reliability values converge to the shallow well; a restart with a larger
/// value relocates the incumbent.
pub fn deceptive_double_well() -> Result<Problem> {
    let p = Problem::new(vec![0.0], vec![1.0], |x| double_well_eval(x[0]))?;
    p.with_known_optimum(Point::new(vec![0.85])?, -1.0)
}

/// A C1 well of the given depth: a cubic smoothstep in the distance to the
/// center, flat outside the radius.
fn well(x: f64, center: f64, radius: f64, depth: f64) -> (f64, f64) {
    let r = (x - center).abs();
    if r >= radius {
        return (0.0, 0.0);
    }
    let t = r / radius;
    let v = depth * (1.0 - 3.0 * t * t + 2.0 * t * t * t);
    let dv = depth * (6.0 * t * t - 6.0 * t) / radius * (x - center).signum();
    (v, dv)
}

pub(crate) fn double_well_eval(x: f64) -> (f64, Vec<f64>) {
    let (broad, d_broad) = well(x, 0.2, 0.10, -0.6);
    let (narrow, d_narrow) = well(x, 0.85, 0.03, -1.0);
    (broad + narrow, vec![d_broad + d_narrow])
}
