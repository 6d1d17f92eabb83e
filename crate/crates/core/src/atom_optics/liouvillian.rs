//! Lindblad generator for a multilevel atom driven by classical lasers, in
//! the frame rotating with every laser.
//!
//! Density matrices are vectorised column by column, so `vec(AρB) =
//! (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::angular::multipole_coefficient;
use super::levels::{LaserField, LevelScheme};
use super::OpticsError;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Generator `L` with `dvec(ρ)/dt = L vec(ρ)` together with the data needed
/// to interpret its steady state.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub matrix: CMatrix,
    pub dimension: usize,
    pub hamiltonian: CMatrix,
    /// Sublevel indices of each fine-structure level.
    pub level_states: Vec<Vec<usize>>,
    pub decay_rates: Vec<Option<f64>>,
    /// Levels with an electric-dipole decay channel.
    pub fluorescing: Vec<bool>,
}

/// Phase of each level in the rotating frame as integer multiples of each
/// laser frequency. Level 0 of every connected component is the reference.
fn frame_coefficients(scheme: &LevelScheme, fields: &[LaserField]) -> Result<Vec<Vec<i32>>, OpticsError> {
    let n = scheme.levels.len();
    let mut coef: Vec<Option<Vec<i32>>> = vec![None; n];
    for start in 0..n {
        if coef[start].is_some() {
            continue;
        }
        coef[start] = Some(vec![0; fields.len()]);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(level) = queue.pop_front() {
            let here = coef[level].clone().unwrap();
            for (f, field) in fields.iter().enumerate() {
                let (other, sign) = if field.lower == level {
                    (field.upper, 1)
                } else if field.upper == level {
                    (field.lower, -1)
                } else {
                    continue;
                };
                let mut next = here.clone();
                next[f] += sign;
                match &coef[other] {
                    None => {
                        coef[other] = Some(next);
                        queue.push_back(other);
                    }
                    Some(existing) if *existing != next => {
                        return Err(OpticsError::InvalidField(
                            "laser couplings form a closed loop; no common rotating frame".into(),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(coef.into_iter().map(Option::unwrap).collect())
}

fn check_fields(scheme: &LevelScheme, fields: &[LaserField]) -> Result<(), OpticsError> {
    for field in fields {
        field.validate()?;
        let declared = scheme.decay_channels.iter().any(|c| {
            c.rank == 1
                && ((c.upper == field.upper && c.lower == field.lower)
                    || (c.upper == field.lower && c.lower == field.upper))
        });
        if !declared {
            return Err(OpticsError::UnknownTransition {
                lower: field.lower,
                upper: field.upper,
            });
        }
    }
    Ok(())
}

/// Builds the Lindblad generator for `scheme` driven by `fields`.
///
/// The Rabi frequency of a field is `Γ √(s/2)` with `Γ` the total decay
/// rate of its upper level, distributed over sublevel pairs by the dipole
/// coupling coefficients and the polarisation components. Each laser's
/// linewidth dephases the coherences it drives at half its FWHM.
pub fn build_liouvillian(scheme: &LevelScheme, fields: &[LaserField]) -> Result<Liouvillian, OpticsError> {
    scheme.validate()?;
    check_fields(scheme, fields)?;
    let coef = frame_coefficients(scheme, fields)?;
    let states = scheme.states();
    let dim = states.len();

    let mut h = CMatrix::zeros(dim, dim);
    for (i, &(level, two_m)) in states.iter().enumerate() {
        let frame: f64 = coef[level]
            .iter()
            .zip(fields)
            .map(|(c, f)| *c as f64 * f.detuning)
            .sum();
        h[(i, i)] = Complex64::new(scheme.zeeman_shift(level, two_m) - frame, 0.0);
    }
    for field in fields {
        let gamma = scheme.decay_rate(field.upper).unwrap_or(0.0);
        let rabi = gamma * (field.saturation / 2.0).sqrt();
        let (two_je, two_jg) = (scheme.levels[field.upper].two_j, scheme.levels[field.lower].two_j);
        for two_me in scheme.levels[field.upper].two_m() {
            for two_mg in scheme.levels[field.lower].two_m() {
                let eps = field.polarization.component(two_me - two_mg);
                let c = multipole_coefficient(two_je, two_me, two_jg, two_mg, 1);
                if eps == ZERO || c == 0.0 {
                    continue;
                }
                let e = scheme.state_index(field.upper, two_me);
                let g = scheme.state_index(field.lower, two_mg);
                let v = eps * (0.5 * rabi * c);
                h[(e, g)] += v;
                h[(g, e)] += v.conj();
            }
        }
    }

    let mut jumps: Vec<CMatrix> = Vec::new();
    for ch in &scheme.decay_channels {
        let rate = ch.partial_rate();
        if rate == 0.0 {
            continue;
        }
        let (two_je, two_jg) = (scheme.levels[ch.upper].two_j, scheme.levels[ch.lower].two_j);
        for two_q in (-2 * ch.rank..=2 * ch.rank).step_by(2) {
            let mut op = CMatrix::zeros(dim, dim);
            let mut any = false;
            for two_me in scheme.levels[ch.upper].two_m() {
                let two_mg = two_me - two_q;
                if two_mg.abs() > two_jg {
                    continue;
                }
                let c = multipole_coefficient(two_je, two_me, two_jg, two_mg, ch.rank);
                if c != 0.0 {
                    let e = scheme.state_index(ch.upper, two_me);
                    let g = scheme.state_index(ch.lower, two_mg);
                    op[(g, e)] = Complex64::new(rate.sqrt() * c, 0.0);
                    any = true;
                }
            }
            if any {
                jumps.push(op);
            }
        }
    }
    for (f, field) in fields.iter().enumerate() {
        if field.linewidth == 0.0 {
            continue;
        }
        let mut op = CMatrix::zeros(dim, dim);
        for (i, &(level, _)) in states.iter().enumerate() {
            op[(i, i)] = Complex64::new(field.linewidth.sqrt() * coef[level][f] as f64, 0.0);
        }
        jumps.push(op);
    }

    let matrix = lindblad_generator(&h, &jumps);
    let level_states = (0..scheme.levels.len())
        .map(|l| {
            states
                .iter()
                .enumerate()
                .filter(|(_, s)| s.0 == l)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    Ok(Liouvillian {
        matrix,
        dimension: dim,
        hamiltonian: h,
        level_states,
        decay_rates: (0..scheme.levels.len()).map(|l| scheme.decay_rate(l)).collect(),
        fluorescing: (0..scheme.levels.len())
            .map(|l| scheme.decay_channels.iter().any(|c| c.upper == l && c.rank == 1))
            .collect(),
    })
}

/// `−i[H, ·] + Σ D[L_k]` as a matrix on column-stacked density matrices.
pub fn lindblad_generator(h: &CMatrix, jumps: &[CMatrix]) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
    for op in jumps {
        let ldl = op.adjoint() * op;
        l += op.conjugate().kronecker(op);
        l -= id.kronecker(&ldl) * Complex64::new(0.5, 0.0);
        l -= ldl.transpose().kronecker(&id) * Complex64::new(0.5, 0.0);
    }
    l
}

impl Liouvillian {
    /// `L(ρ)` for an `n × n` density matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = CMatrix::from_column_slice(self.dimension * self.dimension, 1, rho.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(self.dimension, self.dimension, out.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom_optics::levels::{Polarization, D32, P12, S12};
    use crate::constants::AtomicConstants;

    #[test]
    fn field_on_undeclared_pair_is_rejected() {
        let scheme = LevelScheme::sr88(&AtomicConstants::default(), 1.0);
        let mut f = LaserField::cooling_422(0.0, 1.0, Polarization::pi(), 0.0);
        f.lower = S12;
        f.upper = D32;
        assert!(matches!(
            build_liouvillian(&scheme, &[f]),
            Err(OpticsError::UnknownTransition { .. })
        ));
    }

    #[test]
    fn frame_follows_lasers() {
        let scheme = LevelScheme::sr88(&AtomicConstants::default(), 0.0);
        let fields = [
            LaserField::cooling_422(-10.0, 1.0, Polarization::pi(), 0.0),
            LaserField::repump_1092(-4.0, 1.0, Polarization::linear_perpendicular(), 0.0),
        ];
        let l = build_liouvillian(&scheme, &fields).unwrap();
        let w = crate::constants::TWO_PI * 1e6;
        let p = scheme.state_index(P12, 1);
        let d = scheme.state_index(D32, 3);
        assert!((l.hamiltonian[(p, p)].re - 10.0 * w).abs() < 1e-3);
        assert!((l.hamiltonian[(d, d)].re - 6.0 * w).abs() < 1e-3);
    }
}
