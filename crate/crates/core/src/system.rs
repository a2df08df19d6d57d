//! Phase space of N point vortices on the unit sphere.

use nalgebra::{Rotation3, Vector3};
use crate::error::{Result, VortexError};

pub type Vec3 = Vector3<f64>;

/// Minimum chordal distance between two vortices.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-9;
/// Allowed deviation of a position from unit norm.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VortexState {
    positions: Vec<Vec3>,
    vorticities: Vec<f64>,
}

impl VortexState {
    pub fn new(positions: Vec<Vec3>, vorticities: Vec<f64>) -> Result<Self> {
        Self::build(positions, vorticities, false)
    }

    /// Same as [`VortexState::new`] but zero vorticities (passive tracers) are allowed.
    pub fn with_tracers(positions: Vec<Vec3>, vorticities: Vec<f64>) -> Result<Self> {
        Self::build(positions, vorticities, true)
    }

    /// Projects every position onto the sphere before validating.
    pub fn from_directions(positions: Vec<Vec3>, vorticities: Vec<f64>) -> Result<Self> {
        let mut unit = Vec::with_capacity(positions.len());
        for (i, p) in positions.into_iter().enumerate() {
            let r = p.norm();
            if !(r.is_finite() && r > 0.0) {
                return Err(VortexError::InvalidState(format!("position {i} has no direction")));
            }
            unit.push(p / r);
        }
        Self::build(unit, vorticities, true)
    }

    fn build(positions: Vec<Vec3>, vorticities: Vec<f64>, tracers: bool) -> Result<Self> {
        if positions.len() != vorticities.len() {
            return Err(VortexError::InvalidState(format!(
                "{} positions but {} vorticities",
                positions.len(),
                vorticities.len()
            )));
        }
        if positions.len() < 2 {
            return Err(VortexError::InvalidState("at least two vortices are required".into()));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) || (p.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(VortexError::InvalidState(format!("position {i} is not a unit vector")));
            }
        }
        for (i, k) in vorticities.iter().enumerate() {
            if !k.is_finite() || (*k == 0.0 && !tracers) {
                return Err(VortexError::InvalidState(format!("vorticity {i} must be finite and nonzero")));
            }
        }
        check_separation(&positions)?;
        Ok(Self { positions, vorticities })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn vorticities(&self) -> &[f64] {
        &self.vorticities
    }

    pub fn rotated(&self, r: &Rotation3<f64>) -> Self {
        Self {
            positions: self.positions.iter().map(|p| r * p).collect(),
            vorticities: self.vorticities.clone(),
        }
    }

    /// Reflection through the x-z plane, a time-reversing symmetry of the flow.
    pub fn reflected(&self) -> Self {
        Self {
            positions: self.positions.iter().map(|p| Vec3::new(p.x, -p.y, p.z)).collect(),
            vorticities: self.vorticities.clone(),
        }
    }
}

pub fn check_separation(positions: &[Vec3]) -> Result<()> {
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let d = (positions[i] - positions[j]).norm();
            if !(d > COINCIDENCE_THRESHOLD) {
                return Err(VortexError::CoincidentVortices { i, j, distance: d });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum(pub Vec3);

impl Momentum {
    pub fn components(&self) -> Vec3 {
        self.0
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }
}

/// H = -sum_{i<j} k_i k_j ln(|x_i - x_j|^2 / 2).
pub fn hamiltonian(state: &VortexState) -> Result<f64> {
    hamiltonian_raw(state.positions(), state.vorticities())
}

pub(crate) fn hamiltonian_raw(x: &[Vec3], k: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d2 = (x[i] - x[j]).norm_squared();
            if !(d2.sqrt() > COINCIDENCE_THRESHOLD) {
                return Err(VortexError::CoincidentVortices { i, j, distance: d2.sqrt() });
            }
            h -= k[i] * k[j] * (0.5 * d2).ln();
        }
    }
    Ok(h)
}

pub fn momentum_map(state: &VortexState) -> Momentum {
    Momentum(momentum_raw(state.positions(), state.vorticities()))
}

pub(crate) fn momentum_raw(x: &[Vec3], k: &[f64]) -> Vec3 {
    x.iter().zip(k).fold(Vec3::zeros(), |acc, (p, kk)| acc + p * *kk)
}

/// Velocities dx_i/dt = sum_{j != i} k_j (x_j x x_i) / (1 - x_i . x_j).
pub fn vector_field(state: &VortexState) -> Result<Vec<Vec3>> {
    let mut out = vec![Vec3::zeros(); state.len()];
    vector_field_raw(state.positions(), state.vorticities(), &mut out)?;
    Ok(out)
}

pub(crate) fn vector_field_raw(x: &[Vec3], k: &[f64], out: &mut [Vec3]) -> Result<()> {
    for v in out.iter_mut() {
        *v = Vec3::zeros();
    }
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d2 = (x[i] - x[j]).norm_squared();
            if !(d2.sqrt() > COINCIDENCE_THRESHOLD) {
                return Err(VortexError::CoincidentVortices { i, j, distance: d2.sqrt() });
            }
            let c = x[j].cross(&x[i]) / (0.5 * d2);
            out[i] += c * k[j];
            out[j] -= c * k[i];
        }
    }
    Ok(())
}
