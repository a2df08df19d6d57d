//! Time integration of the vortex equations, conservation monitoring, and empirical
//! instability witnesses.

use nalgebra::{DVector, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::families::{build_ring, RelativeEquilibrium};
use crate::slice::basis_for;
use crate::system::{hamiltonian_raw, momentum_raw, vector_field_raw, Vec3, VortexState};

/// Drifts of the conserved quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationSample {
    /// |H - H0| / |H0| (absolute when H0 vanishes).
    pub h_drift: f64,
    /// |Phi - Phi0|.
    pub phi_drift: f64,
    /// Largest | |x_i| - 1 | seen before renormalization since the previous sample.
    pub sphere_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VortexState>,
    pub conservation_log: Vec<ConservationSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationSummary {
    pub max_h_drift: f64,
    pub max_phi_drift: f64,
    pub max_sphere_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &VortexState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn summary(&self) -> ConservationSummary {
        let mut s = ConservationSummary { max_h_drift: 0.0, max_phi_drift: 0.0, max_sphere_drift: 0.0 };
        for c in &self.conservation_log {
            s.max_h_drift = s.max_h_drift.max(c.h_drift);
            s.max_phi_drift = s.max_phi_drift.max(c.phi_drift);
            s.max_sphere_drift = s.max_sphere_drift.max(c.sphere_drift);
        }
        s
    }

    /// CSV: time, x,y,z per vortex, H, Phi_x, Phi_y, Phi_z.
    pub fn to_csv(&self) -> Result<String> {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("time");
        for i in 0..n {
            out.push_str(&format!(",x{i},y{i},z{i}"));
        }
        out.push_str(",H,Phi_x,Phi_y,Phi_z\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}"));
            for p in s.positions() {
                out.push_str(&format!(",{},{},{}", p.x, p.y, p.z));
            }
            let h = hamiltonian_raw(s.positions(), s.vorticities())?;
            let m = momentum_raw(s.positions(), s.vorticities());
            out.push_str(&format!(",{h},{},{},{}\n", m.x, m.y, m.z));
        }
        Ok(out)
    }
}

fn check_step(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(VortexError::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(VortexError::Domain(format!("integration time must be positive, got {t_end}")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0);
    if steps > 1e9 {
        return Err(VortexError::Domain("too many integration steps".into()));
    }
    Ok(steps as usize)
}

/// One classical Runge-Kutta stepper with scratch buffers.
struct Stepper {
    k: Vec<f64>,
    k1: Vec<Vec3>,
    k2: Vec<Vec3>,
    k3: Vec<Vec3>,
    k4: Vec<Vec3>,
    tmp: Vec<Vec3>,
}

impl Stepper {
    fn new(k: &[f64]) -> Self {
        let z = vec![Vec3::zeros(); k.len()];
        Self { k: k.to_vec(), k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances x by h and renormalizes; returns the largest pre-projection norm defect.
    fn step(&mut self, x: &mut [Vec3], h: f64) -> Result<f64> {
        let n = x.len();
        vector_field_raw(x, &self.k, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = x[i] + self.k1[i] * (0.5 * h);
        }
        vector_field_raw(&self.tmp, &self.k, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + self.k2[i] * (0.5 * h);
        }
        vector_field_raw(&self.tmp, &self.k, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + self.k3[i] * h;
        }
        vector_field_raw(&self.tmp, &self.k, &mut self.k4)?;
        let mut defect: f64 = 0.0;
        for i in 0..n {
            let y = x[i] + (self.k1[i] + self.k2[i] * 2.0 + self.k3[i] * 2.0 + self.k4[i]) * (h / 6.0);
            let r = y.norm();
            defect = defect.max((r - 1.0).abs());
            x[i] = y / r;
        }
        Ok(defect)
    }
}

/// Integrates to time `t_end` with `ceil(t_end/dt)` equal steps, recording every step.
pub fn integrate(state: &VortexState, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_sampled(state, t_end, dt, 1)
}

/// As [`integrate`], recording every `stride`-th step and the final state.
pub fn integrate_sampled(state: &VortexState, t_end: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    let steps = check_step(t_end, dt)?;
    let stride = stride.max(1);
    let h = t_end / steps as f64;
    let k = state.vorticities();
    let mut x = state.positions().to_vec();
    let h0 = hamiltonian_raw(&x, k)?;
    let m0 = momentum_raw(&x, k);
    let mut stepper = Stepper::new(k);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
        conservation_log: vec![ConservationSample { h_drift: 0.0, phi_drift: 0.0, sphere_drift: 0.0 }],
    };
    let mut defect: f64 = 0.0;
    for s in 1..=steps {
        defect = defect.max(stepper.step(&mut x, h)?);
        if s % stride == 0 || s == steps {
            let hh = hamiltonian_raw(&x, k)?;
            let dh = (hh - h0).abs();
            traj.conservation_log.push(ConservationSample {
                h_drift: if h0 != 0.0 { dh / h0.abs() } else { dh },
                phi_drift: (momentum_raw(&x, k) - m0).norm(),
                sphere_drift: defect,
            });
            traj.times.push(s as f64 * h);
            traj.states.push(VortexState::with_tracers(x.clone(), k.to_vec())?);
            defect = 0.0;
        }
    }
    Ok(traj)
}

/// Endpoint of the flow without storing intermediate states.
pub fn flow(state: &VortexState, t_end: f64, dt: f64) -> Result<VortexState> {
    let steps = check_step(t_end, dt)?;
    let h = t_end / steps as f64;
    let mut x = state.positions().to_vec();
    let mut stepper = Stepper::new(state.vorticities());
    for _ in 0..steps {
        stepper.step(&mut x, h)?;
    }
    VortexState::with_tracers(x, state.vorticities().to_vec())
}

fn max_chordal(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Integrates the relative equilibrium and returns the largest chordal distance between
/// the computed positions and the rigid rotation by xi t about the z axis.
pub fn verify_rigid_rotation(re: &RelativeEquilibrium, t_end: f64, dt: f64) -> Result<f64> {
    let steps = check_step(t_end, dt)?;
    let h = t_end / steps as f64;
    let x0 = re.state().positions().to_vec();
    let mut x = x0.clone();
    let mut stepper = Stepper::new(re.state().vorticities());
    let mut worst: f64 = 0.0;
    for s in 1..=steps {
        stepper.step(&mut x, h)?;
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), re.xi() * s as f64 * h);
        let expect: Vec<Vec3> = x0.iter().map(|p| r * p).collect();
        worst = worst.max(max_chordal(&x, &expect));
    }
    Ok(worst)
}

/// Integrates the reflected endpoint forward again; for a time-reversing symmetry the result
/// is the reflected initial state. Returns the largest chordal mismatch.
pub fn time_reversal_error(state: &VortexState, t_end: f64, dt: f64) -> Result<f64> {
    let end = flow(state, t_end, dt)?;
    let back = flow(&end.reflected(), t_end, dt)?;
    Ok(max_chordal(back.positions(), state.reflected().positions()))
}

/// max_i |R_z(alpha) x_i - e_i| minimized over alpha in closed form (least squares angle).
pub fn co_rotating_deviation(x: &[Vec3], e: &[Vec3]) -> f64 {
    let (mut sn, mut cs) = (0.0, 0.0);
    for (p, q) in x.iter().zip(e) {
        sn += q.y * p.x - q.x * p.y;
        cs += q.x * p.x + q.y * p.y;
    }
    let r = Rotation3::from_axis_angle(&Vec3::z_axis(), sn.atan2(cs));
    x.iter().zip(e).map(|(p, q)| (r * p - q).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthOptions {
    /// Largest initial ambient displacement.
    pub amplitude: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Stop once the deviation exceeds this value.
    pub saturation: f64,
    pub seed: u64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self { amplitude: 1e-6, t_max: 60.0, dt: 1e-3, saturation: 1e-3, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthEstimate {
    /// Least-squares slope of ln(deviation) over the fit window.
    pub exponent: f64,
    pub initial_deviation: f64,
    pub final_deviation: f64,
    /// Time at which integration stopped.
    pub t_end: f64,
    pub saturated: bool,
}

/// Floor below which a measured exponent is never called positive.
pub const MIN_NOISE_FLOOR: f64 = 1e-3;

/// Random slice-direction perturbation of the relative equilibrium, scaled to `amplitude`.
pub fn perturbed_state(re: &RelativeEquilibrium, amplitude: f64, seed: u64) -> Result<VortexState> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(VortexError::Domain(format!("amplitude must be positive, got {amplitude}")));
    }
    let basis = basis_for(re)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: DVector<f64> = if basis.dim() > 0 {
        let c = DVector::from_fn(basis.dim(), |_, _| rng.gen_range(-1.0..1.0));
        &basis.vectors * c
    } else {
        DVector::from_fn(re.dim(), |_, _| rng.gen_range(-1.0..1.0))
    };
    let amb = re.chart().push_forward(&dir);
    let m = amb.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return Err(VortexError::Numeric("perturbation direction vanished".into()));
    }
    let q = re.chart().coords() + dir * (amplitude / m);
    re.chart().with_coords(&q)?.to_state()
}

/// Integrates a random slice perturbation and fits the exponential growth rate of the
/// co-rotating deviation (first 10% of the run discarded, next 80% fitted).
pub fn perturbation_growth(re: &RelativeEquilibrium, opts: &GrowthOptions) -> Result<GrowthEstimate> {
    let steps = check_step(opts.t_max, opts.dt)?;
    let h = opts.t_max / steps as f64;
    let start = perturbed_state(re, opts.amplitude, opts.seed)?;
    let e = re.state().positions().to_vec();
    let mut x = start.positions().to_vec();
    let mut stepper = Stepper::new(re.state().vorticities());
    let d0 = co_rotating_deviation(&x, &e);
    let mut ts = vec![0.0];
    let mut ds = vec![d0];
    let mut saturated = false;
    for s in 1..=steps {
        stepper.step(&mut x, h)?;
        let d = co_rotating_deviation(&x, &e);
        ts.push(s as f64 * h);
        ds.push(d);
        if d > opts.saturation {
            saturated = true;
            break;
        }
    }
    let m = ts.len();
    let (a, b) = (m / 10, m - m / 10);
    let (a, b) = if b - a < 2 { (0, m) } else { (a, b) };
    let exponent = slope(&ts[a..b], &ds[a..b].iter().map(|d| d.max(1e-300).ln()).collect::<Vec<_>>());
    Ok(GrowthEstimate { exponent, initial_deviation: d0, final_deviation: ds[m - 1], t_end: ts[m - 1], saturated })
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    if t.len() < 2 {
        return 0.0;
    }
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sxy += (a - mt) * (b - my);
        sxx += (a - mt) * (a - mt);
    }
    if sxx == 0.0 { 0.0 } else { sxy / sxx }
}

/// |exponent| measured on a provably stable configuration (three-vortex ring at theta0 = pi/3).
pub fn calibrate_noise_floor(opts: &GrowthOptions) -> Result<f64> {
    let re = build_ring(3, std::f64::consts::FRAC_PI_3)?;
    Ok(perturbation_growth(&re, opts)?.exponent.abs())
}

/// Positive growth means an exponent beyond ten times the noise floor.
pub fn growth_is_positive(exponent: f64, noise_floor: f64) -> bool {
    exponent > 10.0 * noise_floor.max(MIN_NOISE_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn antipodal_pair_is_fixed() {
        let s = VortexState::new(vec![Vec3::z(), -Vec3::z()], vec![1.0, 2.0]).unwrap();
        let t = integrate(&s, 3.0, 0.01).unwrap();
        assert_eq!(t.final_state(), &s);
        assert_eq!(t.times.len(), 301);
    }

    #[test]
    fn ring_conserves_invariants() {
        let re = build_ring(5, FRAC_PI_4).unwrap();
        let t = integrate_sampled(re.state(), 10.0, 1e-3, 100).unwrap();
        let s = t.summary();
        assert!(s.max_h_drift < 1e-8 && s.max_phi_drift < 1e-8, "{s:?}");
        assert!((t.times.last().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let s = perturbed_state(&build_ring_pole(4, 1.0, 0.5).unwrap(), 0.05, 3).unwrap();
        let t = 1.0;
        let reference = flow(&s, t, 0.05 / 8.0).unwrap();
        let e1 = max_chordal(flow(&s, t, 0.05).unwrap().positions(), reference.positions());
        let e2 = max_chordal(flow(&s, t, 0.025).unwrap().positions(), reference.positions());
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn rigid_rotation_examples() {
        assert!(verify_rigid_rotation(&build_ring(4, FRAC_PI_2).unwrap(), 5.0, 1e-3).unwrap() < 1e-8);
        assert!(verify_rigid_rotation(&build_ring_pole(3, std::f64::consts::FRAC_PI_3, 1.0).unwrap(), 5.0, 1e-3).unwrap() < 1e-6);
        let c = (1.0f64 / 3.0).sqrt().acos();
        let cube = build_two_rings_with_kappa(4, c, std::f64::consts::PI - c, false, 1.0).unwrap();
        assert!(cube.xi().abs() < 1e-10);
        assert!(verify_rigid_rotation(&cube, 5.0, 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn reflection_reverses_time() {
        let s = perturbed_state(&build_ring_two_poles(5, 0.9, 0.4, -0.7).unwrap(), 0.05, 11).unwrap();
        assert!(time_reversal_error(&s, 2.0, 1e-3).unwrap() < 1e-9);
    }

    #[test]
    fn frame_equivariance() {
        let s = perturbed_state(&build_ring(6, 0.7).unwrap(), 0.02, 5).unwrap();
        let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let a = flow(&s.rotated(&r), 1.5, 1e-3).unwrap();
        let b = flow(&s, 1.5, 1e-3).unwrap().rotated(&r);
        assert!(max_chordal(a.positions(), b.positions()) < 1e-8);
    }

    #[test]
    fn co_rotating_deviation_removes_z_rotation() {
        let re = build_ring_pole(5, 1.0, 2.0).unwrap();
        let r = Rotation3::from_axis_angle(&Vec3::z_axis(), 0.7);
        let x: Vec<Vec3> = re.state().positions().iter().map(|p| r * p).collect();
        assert!(co_rotating_deviation(&x, re.state().positions()) < 1e-14);
    }

    #[test]
    fn growth_exponent_matches_spectrum() {
        let re = build_ring(7, FRAC_PI_2).unwrap();
        let rep = crate::stability::classify(&re).unwrap();
        let sigma = rep.blocks.iter().map(|b| b.max_real_part()).fold(0.0, f64::max);
        let g = perturbation_growth(&re, &GrowthOptions::default()).unwrap();
        assert!(g.saturated);
        assert!(g.exponent > sigma / 2.0 && g.exponent < 2.0 * sigma, "{} vs {sigma}", g.exponent);
        let floor = calibrate_noise_floor(&GrowthOptions::default()).unwrap();
        assert!(growth_is_positive(g.exponent, floor));
        let g3 = perturbation_growth(&build_ring(3, 1.2).unwrap(), &GrowthOptions::default()).unwrap();
        assert!(!growth_is_positive(g3.exponent, floor), "{} floor {floor}", g3.exponent);
    }

    #[test]
    fn invalid_steps_rejected() {
        let s = VortexState::new(vec![Vec3::z(), Vec3::x()], vec![1.0, 1.0]).unwrap();
        assert!(integrate(&s, 1.0, 0.0).is_err());
        assert!(integrate(&s, -1.0, 0.1).is_err());
    }
}
