//! Nonlinear conjugate gradients (Polak–Ribière+, strong-Wolfe line search).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgSettings {
    pub max_iterations: usize,
    /// Stop once the objective falls below this.
    pub f_tol: f64,
    /// Stop once the gradient norm falls below this.
    pub g_tol: f64,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self { max_iterations: 10_000, f_tol: 1e-16, g_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ObjectiveTolerance,
    GradientTolerance,
    MaxIterations,
    LineSearch,
    /// The acceptance guard rejected the next iterate.
    Guard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Objective after every accepted iterate, starting with `f(x0)`.
    pub history: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.1;
const MAX_BRACKET: usize = 40;
const MAX_ZOOM: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

struct Point {
    a: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct Search<'a, F> {
    objective: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    evaluations: usize,
}

impl<F, E> Search<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    /// Failed evaluations count as an infinitely bad point so the search backs off.
    fn eval(&mut self, a: f64) -> Point {
        self.evaluations += 1;
        match (self.objective)(&axpy(self.x, a, self.d)) {
            Ok((f, g)) if f.is_finite() => {
                let slope = dot(&g, self.d);
                Point { a, f, g, slope }
            }
            _ => Point { a, f: f64::INFINITY, g: vec![], slope: f64::NAN },
        }
    }

    fn run(&mut self, f0: f64, slope0: f64, a_init: f64) -> Option<Point> {
        let mut prev = Point { a: 0.0, f: f0, g: vec![], slope: slope0 };
        let mut a = a_init;
        for i in 0..MAX_BRACKET {
            let cur = self.eval(a);
            if cur.f > f0 + C1 * a * slope0 || (i > 0 && cur.f >= prev.f) {
                return self.zoom(prev, cur, f0, slope0);
            }
            if cur.slope.abs() <= -C2 * slope0 {
                return Some(cur);
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev, f0, slope0);
            }
            prev = cur;
            a *= 2.0;
        }
        (prev.a > 0.0).then_some(prev)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: Point, f0: f64, slope0: f64) -> Option<Point> {
        for _ in 0..MAX_ZOOM {
            let width = hi.a - lo.a;
            // quadratic through f(lo), f'(lo), f(hi), kept inside the bracket
            let denom = 2.0 * (hi.f - lo.f - lo.slope * width);
            let mut a = if hi.f.is_finite() && denom > 0.0 { lo.a - lo.slope * width * width / denom } else { lo.a + 0.5 * width };
            let (left, right) = if lo.a < hi.a { (lo.a, hi.a) } else { (hi.a, lo.a) };
            let margin = 0.1 * (right - left);
            if !(a > left + margin && a < right - margin) {
                a = 0.5 * (lo.a + hi.a);
            }
            if (right - left) <= f64::EPSILON * right.abs().max(1e-300) {
                break;
            }
            let cur = self.eval(a);
            if cur.f > f0 + C1 * a * slope0 || cur.f >= lo.f {
                hi = cur;
            } else {
                if cur.slope.abs() <= -C2 * slope0 {
                    return Some(cur);
                }
                if cur.slope * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        (lo.a > 0.0 && lo.f < f0).then_some(lo)
    }
}

/// Minimizes `objective` from `x0`. Every accepted iterate must pass `guard`;
/// the first rejected one ends the run at the previous iterate.
pub fn minimize<F, G, E>(mut objective: F, x0: &[f64], settings: &CgSettings, mut guard: G) -> Result<CgOutcome, E>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
    G: FnMut(&[f64]) -> bool,
{
    let (mut f, mut g) = objective(x0)?;
    let mut x = x0.to_vec();
    let mut evaluations = 1;
    let mut history = vec![f];
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut prev_f = f64::NAN;
    let mut iterations = 0;
    let stop = loop {
        if f < settings.f_tol {
            break StopReason::ObjectiveTolerance;
        }
        if norm(&g) < settings.g_tol {
            break StopReason::GradientTolerance;
        }
        if iterations >= settings.max_iterations {
            break StopReason::MaxIterations;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let fallback = (1.0 / norm(&g)).min(1.0);
        let a_init = match 2.02 * (f - prev_f) / slope {
            a if iterations > 0 && a.is_finite() && a > 0.0 => a.min(1.0),
            _ => fallback,
        };
        let mut search = Search { objective: &mut objective, x: &x, d: &d, evaluations: 0 };
        let found = search.run(f, slope, a_init);
        evaluations += search.evaluations;
        let Some(step) = found else {
            break StopReason::LineSearch;
        };
        let x_new = axpy(&x, step.a, &d);
        if !guard(&x_new) {
            break StopReason::Guard;
        }
        let g_new = step.g;
        let beta = (dot(&g_new, &g_new) - dot(&g_new, &g)) / dot(&g, &g);
        let beta = beta.max(0.0);
        d = g_new.iter().zip(&d).map(|(gi, di)| -gi + beta * di).collect();
        prev_f = f;
        x = x_new;
        f = step.f;
        g = g_new;
        history.push(f);
        iterations += 1;
    };
    Ok(CgOutcome { grad_norm: norm(&g), x, f, iterations, evaluations, stop, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>), Infallible> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(rosenbrock, &[-1.2, 1.0], &CgSettings::default(), |_| true).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{out:?}");
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_in_n_steps() {
        let diag = [1.0, 10.0, 100.0];
        let q = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            let f = x.iter().zip(&diag).map(|(v, d)| 0.5 * d * v * v).sum();
            Ok((f, x.iter().zip(&diag).map(|(v, d)| d * v).collect()))
        };
        let out = minimize(q, &[1.0, 1.0, 1.0], &CgSettings::default(), |_| true).unwrap();
        assert!(out.f < 1e-16);
        assert!(out.iterations < 40);
    }

    #[test]
    fn guard_stops_before_rejected_iterate() {
        let q = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> { Ok((x[0] * x[0], vec![2.0 * x[0]])) };
        let out = minimize(q, &[4.0], &CgSettings::default(), |x| x[0] > 1.0).unwrap();
        assert_eq!(out.stop, StopReason::Guard);
        assert_eq!(out.x, vec![4.0]);
    }

    #[test]
    fn failed_evaluations_shrink_the_step() {
        let q = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> {
            if x[0] < -0.5 {
                Err(())
            } else {
                Ok(((x[0] - 0.2).powi(2), vec![2.0 * (x[0] - 0.2)]))
            }
        };
        let out = minimize(q, &[3.0], &CgSettings::default(), |_| true).unwrap();
        assert!((out.x[0] - 0.2).abs() < 1e-6);
    }
}
