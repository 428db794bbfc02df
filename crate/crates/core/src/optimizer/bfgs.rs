use std::time::Instant;

use super::{dot, inf_norm, DifferentiableObjective, OptimizerSettings, RunRecord, Termination};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 30;
const MAX_STEP: f64 = 1e3;

struct Counter<'a, F: ?Sized> {
    f: &'a F,
    values: usize,
    gradients: usize,
}

enum Eval {
    Ok(f64),
    Bad(String),
}

impl<F: DifferentiableObjective + ?Sized> Counter<'_, F> {
    fn value(&mut self, x: &[f64]) -> Eval {
        self.values += 1;
        match self.f.value(x) {
            Ok(v) if v.is_finite() => Eval::Ok(v),
            Ok(v) => Eval::Bad(format!("objective returned {v}")),
            Err(e) => Eval::Bad(e.to_string()),
        }
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>, String> {
        self.gradients += 1;
        match self.f.gradient(x) {
            Ok(g) if g.iter().all(|v| v.is_finite()) => Ok(g),
            Ok(_) => Err("gradient has non-finite entries".into()),
            Err(e) => Err(e.to_string()),
        }
    }
}

struct Point {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

enum Search {
    Found(Point),
    Failed,
    Abort(String),
}

fn step(x: &[f64], p: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect()
}

/// Line search for the strong Wolfe conditions (bracketing then zoom).
fn wolfe_search<F: DifferentiableObjective + ?Sized>(
    obj: &mut Counter<'_, F>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    p: &[f64],
    alpha_init: f64,
) -> Search {
    let d0 = dot(g0, p);
    let mut prev = (0.0, f0, d0);
    let mut alpha = alpha_init;
    // Best point known to satisfy sufficient decrease, kept as a fallback.
    let mut armijo: Option<Point> = None;

    let eval_full = |obj: &mut Counter<'_, F>, alpha: f64| -> Result<Option<Point>, String> {
        let xa = step(x, p, alpha);
        let fa = match obj.value(&xa) {
            Eval::Ok(v) => v,
            Eval::Bad(msg) => return Err(msg),
        };
        if fa > f0 + C1 * alpha * d0 {
            return Ok(Some(Point {
                alpha,
                x: xa,
                f: fa,
                g: Vec::new(),
            }));
        }
        let ga = obj.gradient(&xa)?;
        Ok(Some(Point {
            alpha,
            x: xa,
            f: fa,
            g: ga,
        }))
    };

    let mut bracket: Option<((f64, f64, f64), (f64, f64))> = None;
    for i in 0..MAX_LINE_SEARCH {
        let pt = match eval_full(obj, alpha) {
            Ok(Some(pt)) => pt,
            Ok(None) => unreachable!(),
            Err(msg) => return Search::Abort(msg),
        };
        if pt.g.is_empty() || (i > 0 && pt.f >= prev.1) {
            bracket = Some((prev, (pt.alpha, pt.f)));
            break;
        }
        let da = dot(&pt.g, p);
        if da.abs() <= -C2 * d0 {
            return Search::Found(pt);
        }
        if da >= 0.0 {
            let lo = (pt.alpha, pt.f, da);
            armijo = Some(pt);
            bracket = Some((lo, (prev.0, prev.1)));
            break;
        }
        prev = (pt.alpha, pt.f, da);
        armijo = Some(pt);
        if alpha >= MAX_STEP {
            break;
        }
        alpha = (2.0 * alpha).min(MAX_STEP);
    }

    let Some((mut lo, mut hi)) = bracket else {
        return armijo.map_or(Search::Failed, Search::Found);
    };

    for _ in 0..MAX_LINE_SEARCH {
        let (a_lo, f_lo, d_lo) = lo;
        let (a_hi, f_hi) = hi;
        let width = a_hi - a_lo;
        if width.abs() < 1e-16 * a_lo.abs().max(1.0) {
            break;
        }
        // Quadratic interpolation, safeguarded towards bisection.
        let denom = 2.0 * (f_hi - f_lo - d_lo * width);
        let mut trial = if denom > 0.0 {
            a_lo - d_lo * width * width / denom
        } else {
            a_lo + 0.5 * width
        };
        let (left, right) = if a_lo < a_hi {
            (a_lo, a_hi)
        } else {
            (a_hi, a_lo)
        };
        let margin = 0.1 * (right - left);
        if !(trial > left + margin && trial < right - margin) {
            trial = 0.5 * (a_lo + a_hi);
        }
        let pt = match eval_full(obj, trial) {
            Ok(Some(pt)) => pt,
            Ok(None) => unreachable!(),
            Err(msg) => return Search::Abort(msg),
        };
        if pt.g.is_empty() || pt.f >= f_lo {
            hi = (pt.alpha, pt.f);
            continue;
        }
        let dt = dot(&pt.g, p);
        if dt.abs() <= -C2 * d0 {
            return Search::Found(pt);
        }
        if dt * (a_hi - a_lo) >= 0.0 {
            hi = (a_lo, f_lo);
        }
        lo = (pt.alpha, pt.f, dt);
        if armijo.as_ref().is_none_or(|a| pt.f < a.f) {
            armijo = Some(pt);
        }
    }
    armijo.map_or(Search::Failed, Search::Found)
}

/// Quasi-Newton minimization with inverse-Hessian BFGS updates.
///
/// Stops when the max-abs gradient drops below the tolerance, when the
/// iteration budget is spent, or when the line search fails twice in a row
/// (the second attempt restarts from steepest descent).
pub fn bfgs_minimize<F: DifferentiableObjective + ?Sized>(
    f: &F,
    x0: &[f64],
    settings: &OptimizerSettings,
) -> RunRecord {
    let start = Instant::now();
    let dim = x0.len();
    let max_iter = settings.max_iterations.unwrap_or(1000);
    let mut obj = Counter {
        f,
        values: 0,
        gradients: 0,
    };
    let finish =
        |x: Vec<f64>, fx: f64, obj: &Counter<'_, F>, iters: usize, term: Termination| RunRecord {
            run_index: 0,
            seed: 0,
            initial_params: x0.to_vec(),
            final_params: x,
            final_free_energy: fx,
            evaluation_count: obj.values,
            gradient_count: obj.gradients,
            calibration_evaluations: 0,
            iteration_count: iters,
            converged: term == Termination::Converged,
            termination: term,
            wall_time: start.elapsed().as_secs_f64(),
        };

    let mut x = x0.to_vec();
    let mut fx = match obj.value(&x) {
        Eval::Ok(v) => v,
        Eval::Bad(msg) => return finish(x, f64::NAN, &obj, 0, Termination::NonFinite(msg)),
    };
    let mut g = match obj.gradient(&x) {
        Ok(g) => g,
        Err(msg) => return finish(x, fx, &obj, 0, Termination::NonFinite(msg)),
    };
    let mut hinv = identity(dim);
    let mut fresh_h = true;

    for iter in 0..max_iter {
        if inf_norm(&g) < settings.gradient_tolerance {
            return finish(x, fx, &obj, iter, Termination::Converged);
        }
        let mut p = mat_vec(&hinv, &g, -1.0);
        if dot(&p, &g) >= 0.0 {
            hinv = identity(dim);
            fresh_h = true;
            p = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if fresh_h {
            (1.0 / inf_norm(&p)).min(1.0)
        } else {
            1.0
        };
        let mut found = wolfe_search(&mut obj, &x, fx, &g, &p, alpha0);
        if matches!(found, Search::Failed) && !fresh_h {
            hinv = identity(dim);
            fresh_h = true;
            p = g.iter().map(|v| -v).collect();
            found = wolfe_search(&mut obj, &x, fx, &g, &p, (1.0 / inf_norm(&p)).min(1.0));
        }
        let pt = match found {
            Search::Found(pt) => pt,
            Search::Failed => return finish(x, fx, &obj, iter, Termination::LineSearchFailed),
            Search::Abort(msg) => {
                log::warn!("BFGS aborted: {msg}");
                return finish(x, fx, &obj, iter, Termination::NonFinite(msg));
            }
        };
        let s: Vec<f64> = p.iter().map(|v| v * pt.alpha).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() {
            if fresh_h {
                let scale = sy / yy;
                hinv.iter_mut().for_each(|v| *v *= scale);
                fresh_h = false;
            }
            update_inverse_hessian(&mut hinv, &s, &y, sy);
        }
        let decrease = fx - pt.f;
        x = pt.x;
        fx = pt.f;
        g = pt.g;
        if decrease <= 1e-15 * fx.abs().max(1.0) && inf_norm(&g) >= settings.gradient_tolerance {
            return finish(x, fx, &obj, iter + 1, Termination::LineSearchFailed);
        }
    }
    let term = if inf_norm(&g) < settings.gradient_tolerance {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    finish(x, fx, &obj, max_iter, term)
}

fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], scale: f64) -> Vec<f64> {
    let dim = v.len();
    (0..dim)
        .map(|r| scale * dot(&m[r * dim..(r + 1) * dim], v))
        .collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T` for symmetric `H`.
fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, 1.0);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for r in 0..dim {
        for c in 0..dim {
            h[r * dim + c] += coef * s[r] * s[c] - rho * (hy[r] * s[c] + s[r] * hy[c]);
        }
    }
}
