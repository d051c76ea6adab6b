//! Phase-space points, the leapfrog integrator, and the Euclidean kinetic energy
//! with a diagonal mass matrix.

use super::{LogDensity, Rejection};

#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    /// Evaluates the target at `position` with zero momentum.
    pub fn new<T: LogDensity + ?Sized>(target: &T, position: Vec<f64>) -> Result<Self, Rejection> {
        let mut grad = vec![0.0; position.len()];
        let log_density = target.log_density_and_grad(&position, &mut grad)?;
        if !log_density.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Rejection);
        }
        let momentum = vec![0.0; position.len()];
        Ok(Self { position, momentum, grad, log_density })
    }

    pub fn kinetic_energy(&self, inv_mass: &[f64]) -> f64 {
        0.5 * self.momentum.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
    }

    /// Hamiltonian `H = −log π(q) + ½ pᵀM⁻¹p`.
    pub fn energy(&self, inv_mass: &[f64]) -> f64 {
        -self.log_density + self.kinetic_energy(inv_mass)
    }

    /// Velocity `M⁻¹p`.
    pub fn velocity(&self, inv_mass: &[f64]) -> Vec<f64> {
        self.momentum.iter().zip(inv_mass).map(|(p, m)| p * m).collect()
    }
}

/// One leapfrog step of signed size `eps`, in place.
///
/// A rejection from the target leaves the point in a partially updated state;
/// callers treat it as infinite energy.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    point: &mut PhasePoint,
    inv_mass: &[f64],
    eps: f64,
) -> Result<(), Rejection> {
    let half = 0.5 * eps;
    for (p, g) in point.momentum.iter_mut().zip(&point.grad) {
        *p += half * g;
    }
    for ((q, p), m) in point.position.iter_mut().zip(&point.momentum).zip(inv_mass) {
        *q += eps * p * m;
    }
    let log_density = target.log_density_and_grad(&point.position, &mut point.grad)?;
    if !log_density.is_finite() || point.grad.iter().any(|g| !g.is_finite()) {
        return Err(Rejection);
    }
    point.log_density = log_density;
    for (p, g) in point.momentum.iter_mut().zip(&point.grad) {
        *p += half * g;
    }
    Ok(())
}

/// Energies along a fixed-length leapfrog trajectory starting at `start`.
pub fn trajectory_energies<T: LogDensity + ?Sized>(
    target: &T,
    start: &PhasePoint,
    inv_mass: &[f64],
    eps: f64,
    steps: usize,
) -> Result<Vec<f64>, Rejection> {
    let mut point = start.clone();
    let mut energies = Vec::with_capacity(steps + 1);
    energies.push(point.energy(inv_mass));
    for _ in 0..steps {
        leapfrog(target, &mut point, inv_mass, eps)?;
        energies.push(point.energy(inv_mass));
    }
    Ok(energies)
}
