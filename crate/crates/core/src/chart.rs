//! Local coordinates: (theta, phi) for ring vortices, (x, y) for polar ones.
//!
//! Derivatives of the augmented Hamiltonian are obtained by differentiating the
//! pairwise logarithms through the embedding chart -> R^3, so every family shares
//! one analytic code path.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VortexError};
use crate::system::{hamiltonian_raw, momentum_raw, Vec3, VortexState, COINCIDENCE_THRESHOLD};

/// Ring vortices closer than this to a pole (in radians) make the chart singular.
pub const CHART_SINGULARITY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartSlot {
    Ring { theta: f64, phi: f64 },
    /// Graph chart over the tangent plane of a pole: position (x, y, +-sqrt(1 - x^2 - y^2)).
    Polar { x: f64, y: f64, north: bool },
}

/// Position and first/second derivatives of one slot's embedding.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Embedding {
    pub pos: Vec3,
    pub d: [Vec3; 2],
    pub dd: [[Vec3; 2]; 2],
}

impl ChartSlot {
    pub fn coords(&self) -> [f64; 2] {
        match *self {
            ChartSlot::Ring { theta, phi } => [theta, phi],
            ChartSlot::Polar { x, y, .. } => [x, y],
        }
    }

    pub fn with_coords(&self, q: [f64; 2]) -> ChartSlot {
        match *self {
            ChartSlot::Ring { .. } => ChartSlot::Ring { theta: q[0], phi: q[1] },
            ChartSlot::Polar { north, .. } => ChartSlot::Polar { x: q[0], y: q[1], north },
        }
    }

    pub fn position(&self) -> Vec3 {
        self.embed().pos
    }

    pub(crate) fn embed(&self) -> Embedding {
        match *self {
            ChartSlot::Ring { theta, phi } => {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                let pos = Vec3::new(st * cp, st * sp, ct);
                let dth = Vec3::new(ct * cp, ct * sp, -st);
                let dph = Vec3::new(-st * sp, st * cp, 0.0);
                let dthph = Vec3::new(-ct * sp, ct * cp, 0.0);
                let dphph = Vec3::new(-st * cp, -st * sp, 0.0);
                Embedding { pos, d: [dth, dph], dd: [[-pos, dthph], [dthph, dphph]] }
            }
            ChartSlot::Polar { x, y, north } => {
                let sg = if north { 1.0 } else { -1.0 };
                let r = (1.0 - x * x - y * y).sqrt();
                let r3 = r * r * r;
                let pos = Vec3::new(x, y, sg * r);
                let dx = Vec3::new(1.0, 0.0, -sg * x / r);
                let dy = Vec3::new(0.0, 1.0, -sg * y / r);
                let dxx = Vec3::new(0.0, 0.0, -sg * (1.0 / r + x * x / r3));
                let dxy = Vec3::new(0.0, 0.0, -sg * x * y / r3);
                let dyy = Vec3::new(0.0, 0.0, -sg * (1.0 / r + y * y / r3));
                Embedding { pos, d: [dx, dy], dd: [[dxx, dxy], [dxy, dyy]] }
            }
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        match *self {
            ChartSlot::Ring { theta, phi } => {
                if !theta.is_finite() || !phi.is_finite() {
                    return Err(VortexError::ChartSingularity(format!("slot {i} has non-finite coordinates")));
                }
                if theta < CHART_SINGULARITY || theta > std::f64::consts::PI - CHART_SINGULARITY {
                    return Err(VortexError::ChartSingularity(format!(
                        "ring vortex {i} at theta={theta} is within {CHART_SINGULARITY} of a pole"
                    )));
                }
            }
            ChartSlot::Polar { x, y, .. } => {
                if !(x * x + y * y < 1.0) {
                    return Err(VortexError::ChartSingularity(format!("polar vortex {i} left its chart")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalChart {
    slots: Vec<ChartSlot>,
    vorticities: Vec<f64>,
}

impl SphericalChart {
    pub fn new(slots: Vec<ChartSlot>, vorticities: Vec<f64>) -> Result<Self> {
        if slots.len() != vorticities.len() || slots.len() < 2 {
            return Err(VortexError::InvalidState("chart needs at least two slots, one vorticity each".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            s.check(i)?;
        }
        Ok(Self { slots, vorticities })
    }

    pub fn slots(&self) -> &[ChartSlot] {
        &self.slots
    }

    pub fn vorticities(&self) -> &[f64] {
        &self.vorticities
    }

    pub fn dim(&self) -> usize {
        2 * self.slots.len()
    }

    pub fn coords(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.slots.iter().flat_map(|s| s.coords()))
    }

    pub fn with_coords(&self, q: &DVector<f64>) -> Result<Self> {
        assert_eq!(q.len(), self.dim(), "coordinate vector has wrong length");
        let slots = self
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| s.with_coords([q[2 * i], q[2 * i + 1]]))
            .collect();
        Self::new(slots, self.vorticities.clone())
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.slots.iter().map(|s| s.position()).collect()
    }

    pub fn to_state(&self) -> Result<VortexState> {
        VortexState::new(self.positions(), self.vorticities.clone())
    }

    /// Reads `state` back into a chart with the same slot kinds as `template`.
    pub fn from_state(state: &VortexState, template: &SphericalChart) -> Result<Self> {
        if state.len() != template.slots.len() {
            return Err(VortexError::InvalidState("state and chart sizes differ".into()));
        }
        let slots = state
            .positions()
            .iter()
            .zip(&template.slots)
            .map(|(p, t)| match *t {
                ChartSlot::Ring { phi: reference, .. } => {
                    // longitude on the branch nearest the template's
                    let d = p.y.atan2(p.x) - reference;
                    let phi = reference + (d - TAU * (d / TAU).round());
                    Ok(ChartSlot::Ring { theta: p.z.clamp(-1.0, 1.0).acos(), phi })
                }
                ChartSlot::Polar { north, .. } => {
                    if (p.z > 0.0) != north {
                        Err(VortexError::ChartSingularity("polar vortex changed hemisphere".into()))
                    } else {
                        Ok(ChartSlot::Polar { x: p.x, y: p.y, north })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slots, state.vorticities().to_vec())
    }

    fn embeddings(&self) -> Vec<Embedding> {
        self.slots.iter().map(|s| s.embed()).collect()
    }

    /// H - xi * Phi_z evaluated at the chart point.
    pub fn augmented_hamiltonian(&self, xi: f64) -> Result<f64> {
        let x = self.positions();
        Ok(hamiltonian_raw(&x, &self.vorticities)? - xi * momentum_raw(&x, &self.vorticities).z)
    }

    pub fn grad_augmented(&self, xi: f64) -> Result<DVector<f64>> {
        let e = self.embeddings();
        let k = &self.vorticities;
        let mut g = DVector::zeros(self.dim());
        for i in 0..e.len() {
            for a in 0..2 {
                g[2 * i + a] -= xi * k[i] * e[i].d[a].z;
            }
            for j in i + 1..e.len() {
                let fp = k[i] * k[j] / one_minus_dot(&e, i, j)?;
                for a in 0..2 {
                    g[2 * i + a] += fp * e[j].pos.dot(&e[i].d[a]);
                    g[2 * j + a] += fp * e[i].pos.dot(&e[j].d[a]);
                }
            }
        }
        Ok(g)
    }

    pub fn hessian_augmented(&self, xi: f64) -> Result<DMatrix<f64>> {
        let e = self.embeddings();
        let k = &self.vorticities;
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..e.len() {
            for a in 0..2 {
                for b in 0..2 {
                    h[(2 * i + a, 2 * i + b)] -= xi * k[i] * e[i].dd[a][b].z;
                }
            }
            for j in i + 1..e.len() {
                let omd = one_minus_dot(&e, i, j)?;
                let fp = k[i] * k[j] / omd;
                let fpp = fp / omd;
                let gi = [e[j].pos.dot(&e[i].d[0]), e[j].pos.dot(&e[i].d[1])];
                let gj = [e[i].pos.dot(&e[j].d[0]), e[i].pos.dot(&e[j].d[1])];
                for a in 0..2 {
                    for b in 0..2 {
                        h[(2 * i + a, 2 * i + b)] += fpp * gi[a] * gi[b] + fp * e[j].pos.dot(&e[i].dd[a][b]);
                        h[(2 * j + a, 2 * j + b)] += fpp * gj[a] * gj[b] + fp * e[i].pos.dot(&e[j].dd[a][b]);
                        let cross = fpp * gi[a] * gj[b] + fp * e[i].d[a].dot(&e[j].d[b]);
                        h[(2 * i + a, 2 * j + b)] += cross;
                        h[(2 * j + b, 2 * i + a)] += cross;
                    }
                }
            }
        }
        Ok(h)
    }

    /// Matrix of the symplectic form on chart tangent vectors: omega(u, v) = u^T W v.
    pub fn symplectic_matrix(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut w = DMatrix::zeros(dim, dim);
        for (i, (em, k)) in self.embeddings().iter().zip(&self.vorticities).enumerate() {
            let v = k * em.pos.dot(&em.d[0].cross(&em.d[1]));
            w[(2 * i, 2 * i + 1)] = v;
            w[(2 * i + 1, 2 * i)] = -v;
        }
        w
    }

    /// Jacobian of the momentum map, 3 x dim.
    pub fn momentum_jacobian(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3, self.dim());
        for (i, (em, k)) in self.embeddings().iter().zip(&self.vorticities).enumerate() {
            for a in 0..2 {
                for c in 0..3 {
                    j[(c, 2 * i + a)] = k * em.d[a][c];
                }
            }
        }
        j
    }

    /// Ambient displacement of every vortex produced by a chart tangent vector.
    pub fn push_forward(&self, v: &DVector<f64>) -> Vec<Vec3> {
        self.embeddings()
            .iter()
            .enumerate()
            .map(|(i, em)| em.d[0] * v[2 * i] + em.d[1] * v[2 * i + 1])
            .collect()
    }

    /// Chart components of ambient tangent vectors (one per vortex).
    pub fn pull_back(&self, u: &[Vec3]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for (i, (s, ui)) in self.slots.iter().zip(u).enumerate() {
            match *s {
                ChartSlot::Ring { theta, .. } => {
                    let em = s.embed();
                    v[2 * i] = ui.dot(&em.d[0]);
                    v[2 * i + 1] = ui.dot(&em.d[1]) / theta.sin().powi(2);
                }
                ChartSlot::Polar { .. } => {
                    v[2 * i] = ui.x;
                    v[2 * i + 1] = ui.y;
                }
            }
        }
        v
    }
}

fn one_minus_dot(e: &[Embedding], i: usize, j: usize) -> Result<f64> {
    let d2 = (e[i].pos - e[j].pos).norm_squared();
    if !(d2.sqrt() > COINCIDENCE_THRESHOLD) {
        return Err(VortexError::CoincidentVortices { i, j, distance: d2.sqrt() });
    }
    Ok(0.5 * d2)
}
