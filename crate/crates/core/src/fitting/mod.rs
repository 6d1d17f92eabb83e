//! Bounded nonlinear least squares: Levenberg-Marquardt on transformed
//! parameters with a numerical Jacobian, falling back to a Nelder-Mead
//! simplex when the Jacobian is rank deficient.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::signal::SignalCurve;

pub mod models;
mod simplex;
mod transform;

pub use simplex::nelder_mead;
pub use transform::Bound;

const FD_STEP: f64 = 6e-6;

#[derive(Debug, Error, Clone)]
pub enum FitError {
    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),
    #[error("model evaluation failed: {0}")]
    ModelEvaluation(String),
    #[error("no convergence after {} iterations", .0.iterations)]
    MaxIterationsExceeded(Box<FitResult>),
    #[error("fit did not converge; no confidence intervals")]
    NotConverged,
}

impl FitError {
    /// Best parameters reached before giving up, if any.
    pub fn best_so_far(&self) -> Option<&FitResult> {
        match self {
            FitError::MaxIterationsExceeded(r) => Some(r),
            _ => None,
        }
    }
}

macro_rules! model_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for FitError {
            fn from(e: $t) -> Self {
                FitError::ModelEvaluation(e.to_string())
            }
        }
    )*};
}
model_error_from!(
    crate::motion_qubit::MotionError,
    crate::atom_optics::OpticsError,
    crate::trap_model::TrapError,
    crate::signal::SignalError
);

/// Parametric curve `y = f(params; x)`.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    fn param_names(&self) -> &[String];
    fn eval(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FitError>;
}

type ModelFn = dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>, FitError> + Send + Sync;

/// Model backed by a closure.
pub struct FnModel {
    name: String,
    params: Vec<String>,
    f: Box<ModelFn>,
}

impl FnModel {
    pub fn new(
        name: &str,
        params: &[&str],
        f: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>, FitError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|s| s.to_string()).collect(),
            f: Box::new(f),
        }
    }

    pub fn shared(self) -> Arc<dyn Model> {
        Arc::new(self)
    }
}

impl Model for FnModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn param_names(&self) -> &[String] {
        &self.params
    }

    fn eval(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FitError> {
        (self.f)(params, x)
    }
}

#[derive(Clone)]
pub struct FitProblem {
    pub model: Arc<dyn Model>,
    pub params_init: Vec<f64>,
    /// A bound with `lo == hi` holds that parameter fixed.
    pub bounds: Vec<Bound>,
    pub data: SignalCurve,
    pub weights: Option<Vec<f64>>,
}

impl FitProblem {
    pub fn new(model: Arc<dyn Model>, params_init: Vec<f64>, bounds: Vec<Bound>, data: SignalCurve) -> Result<Self, FitError> {
        let p = Self {
            model,
            params_init,
            bounds,
            data,
            weights: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, FitError> {
        self.weights = Some(weights);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let n = self.model.param_names().len();
        if self.params_init.len() != n || self.bounds.len() != n {
            return Err(FitError::InvalidProblem(format!(
                "model {} has {n} parameters, got {} initial values and {} bounds",
                self.model.name(),
                self.params_init.len(),
                self.bounds.len()
            )));
        }
        for (k, (p, b)) in self.params_init.iter().zip(&self.bounds).enumerate() {
            if !(b.lo <= b.hi) || !b.contains(*p) || !p.is_finite() {
                return Err(FitError::InvalidProblem(format!(
                    "parameter {} = {p} outside [{}, {}]",
                    self.model.param_names()[k],
                    b.lo,
                    b.hi
                )));
            }
        }
        if self.data.x.len() != self.data.y.len() || self.data.is_empty() {
            return Err(FitError::InvalidProblem("data x and y must be non-empty with equal lengths".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.data.len() || w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(FitError::InvalidProblem("weights must match data length and be >= 0".into()));
            }
        }
        Ok(())
    }

    fn sqrt_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.iter().map(|v| v.sqrt()).collect(),
            None => vec![1.0; self.data.len()],
        }
    }

    /// Weighted residuals `√wᵢ (f(xᵢ) − yᵢ)`.
    pub fn residuals(&self, params: &[f64]) -> Result<Vec<f64>, FitError> {
        let f = self.model.eval(params, &self.data.x)?;
        if f.len() != self.data.len() {
            return Err(FitError::ModelEvaluation(format!(
                "model {} returned {} points for {} inputs",
                self.model.name(),
                f.len(),
                self.data.len()
            )));
        }
        let sw = self.sqrt_weights();
        let r: Vec<f64> = f.iter().zip(&self.data.y).zip(&sw).map(|((m, y), w)| w * (m - y)).collect();
        if r.iter().any(|v| !v.is_finite()) {
            return Err(FitError::ModelEvaluation(format!("model {} produced non-finite values", self.model.name())));
        }
        Ok(r)
    }

    /// `√(Σ wᵢ rᵢ²)`.
    pub fn residual_norm(&self, params: &[f64]) -> Result<f64, FitError> {
        Ok(self.residuals(params)?.iter().map(|r| r * r).sum::<f64>().sqrt())
    }

    fn free(&self) -> Vec<usize> {
        (0..self.bounds.len()).filter(|&k| self.bounds[k].lo < self.bounds[k].hi).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            x_tol: 1e-10,
            f_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub covariance: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `"levenberg-marquardt"` or `"nelder-mead"`.
    pub method: &'static str,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names.iter().position(|n| n == name).map(|k| self.params[k])
    }

    pub fn std_error(&self, k: usize) -> f64 {
        self.covariance[(k, k)].max(0.0).sqrt()
    }
}

struct Engine<'a> {
    problem: &'a FitProblem,
    free: Vec<usize>,
}

impl Engine<'_> {
    fn external(&self, u: &[f64]) -> Vec<f64> {
        let mut p = self.problem.params_init.clone();
        for (j, &k) in self.free.iter().enumerate() {
            p[k] = self.problem.bounds[k].to_external(u[j]);
        }
        p
    }

    fn residuals(&self, u: &[f64]) -> Result<DVector<f64>, FitError> {
        Ok(DVector::from_vec(self.problem.residuals(&self.external(u))?))
    }

    fn sum_sq(&self, u: &[f64]) -> f64 {
        self.residuals(u).map(|r| r.norm_squared()).unwrap_or(f64::INFINITY)
    }

    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>, FitError> {
        let m = self.problem.data.len();
        let mut jac = DMatrix::zeros(m, u.len());
        let mut v = u.to_vec();
        for j in 0..u.len() {
            let h = FD_STEP * u[j].abs().max(1.0);
            v[j] = u[j] + h;
            let up = self.residuals(&v)?;
            v[j] = u[j] - h;
            let down = self.residuals(&v)?;
            v[j] = u[j];
            jac.set_column(j, &((up - down) / (2.0 * h)));
        }
        Ok(jac)
    }
}

/// Central-difference Jacobian of the weighted model with respect to the
/// external parameters, one-sided at a bound.
pub fn jacobian(problem: &FitProblem, params: &[f64]) -> Result<DMatrix<f64>, FitError> {
    let m = problem.data.len();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut p = params.to_vec();
    for j in 0..n {
        let b = problem.bounds[j];
        if b.lo == b.hi {
            continue;
        }
        let h = FD_STEP * params[j].abs().max(1e-3);
        let (hi, lo) = (params[j] + h, params[j] - h);
        let (a, c) = match (b.contains(hi), b.contains(lo)) {
            (true, true) => (hi, lo),
            (true, false) => (hi, params[j]),
            (false, true) => (params[j], lo),
            (false, false) => continue,
        };
        p[j] = a;
        let fa = DVector::from_vec(problem.residuals(&p)?);
        p[j] = c;
        let fc = DVector::from_vec(problem.residuals(&p)?);
        p[j] = params[j];
        jac.set_column(j, &((fa - fc) / (a - c)));
    }
    Ok(jac)
}

fn covariance(problem: &FitProblem, params: &[f64], sum_sq: f64) -> Result<DMatrix<f64>, FitError> {
    let n = params.len();
    let free = problem.free().len();
    let dof = problem.data.len().saturating_sub(free);
    if dof == 0 || sum_sq == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let j = jacobian(problem, params)?;
    let a = j.transpose() * &j;
    let inv = a
        .clone()
        .pseudo_inverse(1e-12 * a.amax().max(f64::MIN_POSITIVE))
        .map_err(|e| FitError::ModelEvaluation(e.to_string()))?;
    let cov = inv * (sum_sq / dof as f64);
    // symmetrise away rounding
    Ok((&cov + cov.transpose()) * 0.5)
}

/// Whether the column-scaled normal matrix is numerically singular.
fn ill_conditioned(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let d: Vec<f64> = (0..n).map(|k| a[(k, k)]).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return true;
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt());
    let eig = scaled.symmetric_eigenvalues();
    eig.min() < 1e-13 * eig.max()
}

/// Least-squares fit of `problem` from its initial parameters.
pub fn fit(problem: &FitProblem, options: &FitOptions) -> Result<FitResult, FitError> {
    problem.validate()?;
    let free = problem.free();
    let engine = Engine { problem, free };
    let init_sq = problem.residual_norm(&problem.params_init)?.powi(2);

    let mut u: Vec<f64> = engine
        .free
        .iter()
        .map(|&k| {
            let b = problem.bounds[k];
            b.to_internal(b.nudge_inside(problem.params_init[k]))
        })
        .collect();
    let mut r = engine.residuals(&u)?;
    let mut s = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = u.is_empty() || s == 0.0;
    let mut fallback = false;
    let mut method = "levenberg-marquardt";

    while !converged && iterations < options.max_iter {
        iterations += 1;
        let jac = engine.jacobian(&u)?;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if (0..u.len()).all(|j| g[j].abs() <= options.f_tol * (a[(j, j)] * s).sqrt()) {
            converged = true;
            break;
        }
        if ill_conditioned(&a) {
            fallback = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e20 {
            let mut m = a.clone();
            for j in 0..u.len() {
                m[(j, j)] += lambda * a[(j, j)];
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            let s_new = engine.sum_sq(&trial);
            if s_new < s {
                let rel = (s - s_new) / s;
                let small_step = u
                    .iter()
                    .zip(delta.iter())
                    .all(|(x, d)| d.abs() <= options.x_tol * (x.abs() + options.x_tol));
                // a heavily damped step is short for reasons other than
                // being at the minimum
                let undamped = lambda <= 1.0;
                u = trial;
                r = engine.residuals(&u)?;
                s = s_new;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                converged = (undamped && (rel <= options.f_tol || small_step)) || s == 0.0;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: at the numerical minimum
            // unless the gradient says otherwise
            let gmax = (0..u.len())
                .map(|j| g[j].abs() / (a[(j, j)] * s).sqrt().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if gmax <= 1e-4 {
                converged = true;
            } else {
                fallback = true;
            }
            break;
        }
    }

    if fallback {
        method = "nelder-mead";
        let budget = options.max_iter.saturating_sub(iterations).max(1) * 20;
        let mut f = |v: &[f64]| engine.sum_sq(v);
        let out = nelder_mead(&mut f, &u, budget, options.x_tol, options.f_tol);
        iterations += out.iterations;
        if out.value <= s {
            u = out.x;
            s = out.value;
        }
        converged = out.converged;
    }

    let mut params = engine.external(&u);
    if s > init_sq {
        params = problem.params_init.clone();
        s = init_sq;
    }
    let covariance = covariance(problem, &params, s)?;
    let result = FitResult {
        param_names: problem.model.param_names().to_vec(),
        params,
        residual_norm: s.sqrt(),
        covariance,
        converged,
        iterations,
        method,
    };
    if converged {
        Ok(result)
    } else {
        Err(FitError::MaxIterationsExceeded(Box::new(result)))
    }
}

/// Exhaustive search over the Cartesian product of per-parameter grids.
/// An empty grid keeps that parameter at its initial value.
pub fn grid_init(problem: &FitProblem, grid: &[Vec<f64>]) -> Result<Vec<f64>, FitError> {
    problem.validate()?;
    let n = problem.params_init.len();
    if grid.len() != n {
        return Err(FitError::InvalidProblem(format!("grid has {} axes for {n} parameters", grid.len())));
    }
    let axes: Vec<Vec<f64>> = grid
        .iter()
        .zip(&problem.params_init)
        .map(|(g, p0)| if g.is_empty() { vec![*p0] } else { g.clone() })
        .collect();
    if axes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(FitError::InvalidProblem("grid values must be finite".into()));
    }
    let mut index = vec![0usize; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let p: Vec<f64> = index.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
        if let Ok(v) = problem.residual_norm(&p) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, p));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return best
                    .map(|(_, p)| p)
                    .ok_or_else(|| FitError::ModelEvaluation("model failed at every grid point".into()));
            }
            index[k] += 1;
            if index[k] < axes[k].len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

/// Symmetric Gaussian intervals `p ± z·σ` at confidence `level`.
pub fn confidence_intervals(result: &FitResult, level: f64) -> Result<Vec<(f64, f64)>, FitError> {
    if !result.converged {
        return Err(FitError::NotConverged);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::InvalidProblem(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    Ok((0..result.params.len())
        .map(|k| {
            let h = z * result.std_error(k);
            (result.params[k] - h, result.params[k] + h)
        })
        .collect())
}

/// Plain-text report; intervals at 1σ (68.27 %).
pub fn render_report(model: &str, result: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model: {model}");
    let _ = writeln!(out, "method: {}", result.method);
    let _ = writeln!(out, "converged: {}", result.converged);
    let _ = writeln!(out, "iterations: {}", result.iterations);
    let _ = writeln!(out, "residual_norm: {:e}", result.residual_norm);
    let _ = writeln!(out, "intervals: 1 sigma (68.27%)");
    let width = result.param_names.iter().map(|s| s.len()).max().unwrap_or(0);
    for (k, name) in result.param_names.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name:<width$}  {:.6e} +/- {:.2e}",
            result.params[k],
            result.std_error(k)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Arc<dyn Model> {
        FnModel::new("line", &["a"], |p, x| Ok(x.iter().map(|v| p[0] * v).collect())).shared()
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let data = SignalCurve::from_fn(&x, |v| 2.0 * v);
        let p = FitProblem::new(line(), vec![0.5], vec![Bound::free()], data).unwrap();
        let r = fit(&p, &FitOptions::default()).unwrap();
        assert!((r.params[0] - 2.0).abs() < 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn init_outside_bounds_rejected() {
        let data = SignalCurve::from_fn(&[1.0], |v| v);
        assert!(FitProblem::new(line(), vec![5.0], vec![Bound::new(0.0, 1.0)], data).is_err());
    }
}
