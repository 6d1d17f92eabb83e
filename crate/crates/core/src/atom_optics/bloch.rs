//! Steady state and time evolution of the Lindblad generator.

use nalgebra::DVector;
use num_complex::Complex64;

use super::liouvillian::{CMatrix, Liouvillian};
use super::OpticsError;

/// Null-space dimension above this relative singular value counts as
/// degenerate.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BlochResult {
    pub populations: Vec<f64>,
    /// Full density matrix.
    pub coherences: CMatrix,
    /// Photons per second scattered from every decaying level with a dipole
    /// channel; for the Sr⁺ scheme this is P1/2 population times its decay
    /// rate.
    pub scattering_rate: f64,
    /// `‖L(ρ)‖ / ‖L‖` of the returned state.
    pub residual: f64,
}

impl BlochResult {
    fn from_rho(l: &Liouvillian, rho: CMatrix) -> Self {
        let populations: Vec<f64> = (0..l.dimension).map(|i| rho[(i, i)].re).collect();
        let scattering_rate = scattering_rate(l, &populations);
        let residual = l.apply(&rho).norm() / l.matrix.norm().max(f64::MIN_POSITIVE);
        Self {
            populations,
            coherences: rho,
            scattering_rate,
            residual,
        }
    }

    pub fn level_population(&self, l: &Liouvillian, level: usize) -> f64 {
        l.level_states[level].iter().map(|&i| self.populations[i]).sum()
    }

    pub fn trace(&self) -> f64 {
        self.populations.iter().sum()
    }

    /// Smallest eigenvalue of the density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.coherences
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.coherences - self.coherences.adjoint()).camax()
    }
}

/// Photon emission rate of levels with an electric-dipole decay (the
/// fluorescing levels).
fn scattering_rate(l: &Liouvillian, populations: &[f64]) -> f64 {
    l.level_states
        .iter()
        .zip(&l.decay_rates)
        .zip(&l.fluorescing)
        .filter(|(_, f)| **f)
        .map(|((states, rate), _)| rate.unwrap_or(0.0) * states.iter().map(|&i| populations[i]).sum::<f64>())
        .sum()
}

fn vec_to_matrix(n: usize, v: &[Complex64]) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

/// Unique stationary state of `l`.
///
/// The null-space dimension is checked with a singular value decomposition;
/// the state itself comes from an LU solve with the trace condition in
/// place of one population equation.
pub fn steady_state(l: &Liouvillian) -> Result<BlochResult, OpticsError> {
    let nullity = null_space_dimension(l);
    if nullity > 1 {
        return Err(OpticsError::DegenerateSteadyState { dimension: nullity });
    }
    steady_state_unchecked(l)
}

/// Number of singular values of `l` below `NULL_SPACE_TOLERANCE` relative to
/// the largest.
pub fn null_space_dimension(l: &Liouvillian) -> usize {
    let sv = l.matrix.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s <= NULL_SPACE_TOLERANCE * max).count()
}

/// Orthonormal basis of the numerical null space of `l`, as density-matrix
/// shaped blocks.
pub fn null_space(l: &Liouvillian) -> Vec<CMatrix> {
    let n = l.dimension;
    let svd = l.matrix.clone().svd(false, true);
    let max = svd.singular_values.max();
    let v_t = svd.v_t.expect("requested V");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= NULL_SPACE_TOLERANCE * max)
        .map(|(k, _)| {
            let row: Vec<Complex64> = v_t.row(k).iter().map(|c| c.conj()).collect();
            vec_to_matrix(n, &row)
        })
        .collect()
}

/// Stationary state by LU solve without the degeneracy check; used for
/// dense parameter sweeps. Returns `DegenerateSteadyState` only when the
/// bordered system is exactly singular.
pub fn steady_state_unchecked(l: &Liouvillian) -> Result<BlochResult, OpticsError> {
    let n = l.dimension;
    let mut a = l.matrix.clone();
    let mut b = DVector::<Complex64>::zeros(n * n);
    // the (0,0) population equation is redundant given trace preservation
    for j in 0..n * n {
        a[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..n {
        a[(0, i * n + i)] = Complex64::new(1.0, 0.0);
    }
    b[0] = Complex64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or(OpticsError::DegenerateSteadyState { dimension: 2 })?;
    if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(OpticsError::DegenerateSteadyState { dimension: 2 });
    }
    Ok(BlochResult::from_rho(l, vec_to_matrix(n, x.as_slice())))
}

/// `ρ(t) = exp(L t) ρ₀`.
pub fn evolve(l: &Liouvillian, rho0: &CMatrix, t: f64) -> Result<BlochResult, OpticsError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(OpticsError::InvalidField(format!("evolution time must be >= 0, got {t}")));
    }
    let prop = (&l.matrix * Complex64::new(t, 0.0)).exp();
    Ok(propagate(l, &prop, rho0))
}

/// Applies a precomputed propagator `exp(L t)` to `rho0`.
pub fn propagate(l: &Liouvillian, propagator: &CMatrix, rho0: &CMatrix) -> BlochResult {
    let n = l.dimension;
    let v = CMatrix::from_column_slice(n * n, 1, rho0.as_slice());
    let out = propagator * v;
    BlochResult::from_rho(l, vec_to_matrix(n, out.as_slice()))
}

/// Density matrix with the given diagonal.
pub fn diagonal_state(populations: &[f64]) -> CMatrix {
    let n = populations.len();
    let mut rho = CMatrix::zeros(n, n);
    for (i, p) in populations.iter().enumerate() {
        rho[(i, i)] = Complex64::new(*p, 0.0);
    }
    rho
}
