//! Cross-module invariant suite: every closed form against an independent numeric oracle.

use std::f64::consts::PI;

use nalgebra::{DVector, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criteria::{inverse_sine_square_sum, mode_sine_square_sum, ring_mode_eigenvalues, ring_pole_quadratics};
use crate::error::Result;
use crate::families::{build, FamilyKind, FamilySpec, RelativeEquilibrium};
use crate::fd::{central_gradient, central_hessian, max_relative_error};
use crate::slice::{basis_for, d_momentum, mode_coefficients, orbit_tangent, Channel, Parity};
use crate::stability::{block_spectra, classify, has_hamiltonian_symmetry, restrict_hessian};
use crate::system::{hamiltonian, momentum_map, vector_field, Vec3, VortexState};

pub const ALL_KINDS: [FamilyKind; 5] =
    [FamilyKind::Ring, FamilyKind::RingPole, FamilyKind::RingTwoPoles, FamilyKind::TwoAlignedRings, FamilyKind::TwoStaggeredRings];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

/// Random member of a family with n in `ns`, resampled until it builds with nonzero momentum.
pub fn sample_family(kind: FamilyKind, ns: std::ops::RangeInclusive<usize>, rng: &mut ChaCha8Rng) -> RelativeEquilibrium {
    loop {
        let n = rng.gen_range(ns.clone());
        let t0 = rng.gen_range(0.15..PI - 0.15);
        let mut k = || {
            let k: f64 = rng.gen_range(0.1..3.0);
            k
        };
        let (ka, kb) = (k(), k());
        let sign = |rng: &mut ChaCha8Rng, v: f64| if rng.gen_bool(0.5) { v } else { -v };
        let spec = match kind {
            FamilyKind::Ring => FamilySpec::ring(n, t0),
            FamilyKind::RingPole => FamilySpec::ring_pole(n, t0, sign(rng, ka)),
            FamilyKind::RingTwoPoles => FamilySpec::ring_two_poles(n.max(3), t0, sign(rng, ka), sign(rng, kb)),
            FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => {
                let a = rng.gen_range(0.15..PI / 2.0);
                let b = rng.gen_range(0.15..PI - 0.15);
                if (a - b).abs() < 0.1 {
                    continue;
                }
                FamilySpec::two_rings(n, a, b, kind == FamilyKind::TwoStaggeredRings)
            }
        };
        if let Ok(re) = build(&spec) {
            if kind == FamilyKind::Ring || re.mu().z().abs() > 1e-3 {
                return re;
            }
        }
    }
}

/// Quadratic form of the closed-form normalization: v^T H v * (n/2) / |v|^2 for the
/// alpha theta and alpha phi vectors of mode l.
pub fn numeric_mode_eigenvalues(re: &RelativeEquilibrium, l: usize) -> Result<(f64, f64)> {
    let h = re.chart().hessian_augmented(re.xi())?;
    let half = re.n() as f64 / 2.0;
    let q = |ch| {
        let v = mode_coefficients(re, 0, l, ch, Parity::Alpha);
        (v.transpose() * &h * &v)[0] * half / v.norm_squared()
    };
    Ok((q(Channel::Theta), q(Channel::Phi)))
}

fn sum_identities() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for n in 2..=64usize {
        let base = (n * n - 1) as f64 / 3.0;
        worst = worst.max((inverse_sine_square_sum(n) - base).abs());
        for l in 0..n {
            worst = worst.max((mode_sine_square_sum(n, l) - (base - 2.0 * (l * (n - l)) as f64)).abs());
        }
    }
    CheckOutcome::new("sum identities (2 <= n <= 64)", worst < 1e-9, format!("max abs error {worst:.3e}"))
}

fn perturbed_coords(re: &RelativeEquilibrium, rng: &mut ChaCha8Rng) -> DVector<f64> {
    re.chart().coords() + DVector::from_fn(re.dim(), |_, _| rng.gen_range(-0.05..0.05))
}

fn fd_checks(rng: &mut ChaCha8Rng, draws: usize) -> Vec<CheckOutcome> {
    let (mut g, mut h, mut crit): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut failures = 0;
    for kind in ALL_KINDS {
        for _ in 0..draws {
            let re = sample_family(kind, 2..=7, rng);
            let xi = re.xi();
            crit = crit.max(re.chart().grad_augmented(xi).map(|v| v.amax()).unwrap_or(f64::INFINITY));
            let q = perturbed_coords(&re, rng);
            let chart = |p: &[f64]| re.chart().with_coords(&DVector::from_column_slice(p));
            let f = |p: &[f64]| chart(p).and_then(|c| c.augmented_hamiltonian(xi)).unwrap_or(f64::NAN);
            let grad = |p: &[f64]| chart(p).and_then(|c| c.grad_augmented(xi)).map(|v| v.as_slice().to_vec()).unwrap_or_else(|_| vec![f64::NAN; p.len()]);
            let Ok(c) = re.chart().with_coords(&q) else {
                failures += 1;
                continue;
            };
            let (Ok(ga), Ok(ha)) = (c.grad_augmented(xi), c.hessian_augmented(xi)) else {
                failures += 1;
                continue;
            };
            g = g.max(max_relative_error(ga.as_slice(), &central_gradient(f, q.as_slice(), 1e-5)));
            h = h.max(max_relative_error(ha.as_slice(), central_hessian(grad, q.as_slice(), 1e-5).as_slice()));
        }
    }
    vec![
        CheckOutcome::new("finite-difference gradient", failures == 0 && g < 1e-6, format!("max rel error {g:.3e} over {} points", 5 * draws)),
        CheckOutcome::new("finite-difference Hessian", failures == 0 && h < 1e-5, format!("max rel error {h:.3e} over {} points", 5 * draws)),
        CheckOutcome::new("criticality of constructed equilibria", crit < 1e-9, format!("max |grad H_xi| {crit:.3e}")),
    ]
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> VortexState {
    loop {
        let pos: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let k: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if let Ok(s) = VortexState::from_directions(pos, k) {
            if s.positions().iter().enumerate().all(|(i, p)| s.positions()[i + 1..].iter().all(|q| (p - q).norm() > 0.05)) {
                return s;
            }
        }
    }
}

fn symmetry_checks(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let (mut dh, mut dphi, mut tan, mut eqv): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..100 {
        let n = rng.gen_range(2..9);
        let s = random_state(rng, n);
        let r = Rotation3::from_euler_angles(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        let rs = s.rotated(&r);
        dh = dh.max((hamiltonian(&rs).unwrap() - hamiltonian(&s).unwrap()).abs());
        dphi = dphi.max((momentum_map(&rs).0 - r * momentum_map(&s).0).norm());
        let v = vector_field(&s).unwrap();
        let vr = vector_field(&rs).unwrap();
        for (i, (a, b)) in v.iter().zip(&vr).enumerate() {
            tan = tan.max(a.dot(&s.positions()[i]).abs());
            eqv = eqv.max((r * a - b).norm());
        }
    }
    let ok = dh < 1e-10 && dphi < 1e-12 && tan < 1e-12 && eqv < 1e-10;
    CheckOutcome::new(
        "rotation invariance, equivariance, tangency",
        ok,
        format!("dH {dh:.1e}, dPhi {dphi:.1e}, v.x {tan:.1e}, equivariance {eqv:.1e}"),
    )
}

fn mode_formula_check(rng: &mut ChaCha8Rng, draws: usize) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 4..=12 {
        for kind in [FamilyKind::Ring, FamilyKind::RingPole, FamilyKind::RingTwoPoles] {
            for _ in 0..draws {
                let re = sample_family(kind, n..=n, rng);
                let (kn, ks) = match kind {
                    FamilyKind::Ring => (None, None),
                    FamilyKind::RingPole => (re.spec().kappa, None),
                    _ => (re.spec().kappa_n, re.spec().kappa_s),
                };
                for l in 2..=n / 2 {
                    let (et, ep) = ring_mode_eigenvalues(n, re.spec().theta0, l, kn, ks).unwrap();
                    let (nt, np) = numeric_mode_eigenvalues(&re, l).unwrap();
                    worst = worst.max(max_relative_error(&[et, ep], &[nt, np]));
                    count += 1;
                }
            }
        }
    }
    CheckOutcome::new("mode eigenvalue formulas vs numeric Hessian", worst < 1e-8, format!("max rel error {worst:.3e} over {count} modes"))
}

fn pairing_table() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for n in 2..=12 {
        let t = 0.3 + 0.1 * n as f64;
        let Ok(re) = build(&FamilySpec::ring_two_poles(n.max(3), t, 0.7, -1.3)) else { continue };
        let n = re.n();
        let w = re.chart().symplectic_matrix();
        let pair = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * &w * v)[0];
        for l in 0..n {
            let m = |ch, p| mode_coefficients(&re, 0, l, ch, p);
            let (at, ap, bt, bp) = (m(Channel::Theta, Parity::Alpha), m(Channel::Phi, Parity::Alpha), m(Channel::Theta, Parity::Beta), m(Channel::Phi, Parity::Beta));
            let full = l == 0 || 2 * l == n;
            let expect = if full { n as f64 * t.sin() } else { n as f64 * t.sin() / 2.0 };
            worst = worst.max((pair(&at, &ap) - expect).abs());
            if !full {
                worst = worst.max((pair(&bt, &bp) - expect).abs());
                worst = worst.max(pair(&at, &bp).abs()).max(pair(&bt, &ap).abs()).max(pair(&at, &bt).abs());
            }
        }
        for (p, kappa, sign) in [(0, 0.7, 1.0), (1, -1.3, -1.0)] {
            let e = |dx, dy| crate::slice::PolarTangent { pole: p, dx, dy }.to_vector(&re);
            worst = worst.max((pair(&e(1.0, 0.0), &e(0.0, 1.0)) - sign * kappa).abs());
        }
    }
    CheckOutcome::new("pairing table (2 <= n <= 12)", worst < 1e-10, format!("max abs error {worst:.3e}"))
}

fn slice_checks(rng: &mut ChaCha8Rng, draws: usize) -> Vec<CheckOutcome> {
    let (mut dphi, mut orth, mut offblock, mut quad): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut ok_sym = true;
    for kind in ALL_KINDS {
        for _ in 0..draws {
            let re = sample_family(kind, 2..=8, rng);
            let Ok(b) = basis_for(&re) else { continue };
            let dm = d_momentum(&re);
            let w = re.chart().symplectic_matrix();
            let orbit = orbit_tangent(&re);
            for i in 0..b.dim() {
                let v = b.vector(i);
                let s = v.amax().max(1.0);
                dphi = dphi.max((&dm * &v).amax() / s);
                for t in &orbit {
                    orth = orth.max((t.transpose() * &w * &v)[0].abs() / s);
                }
            }
            let h = restrict_hessian(&re, &b).unwrap();
            let hs = h.amax().max(1.0);
            for x in &b.blocks {
                for y in &b.blocks {
                    if x.start != y.start {
                        offblock = offblock.max(h.view((x.start, y.start), (x.len, y.len)).amax() / hs);
                        offblock = offblock.max(b.pairing.view((x.start, y.start), (x.len, y.len)).amax() / b.pairing.amax().max(1.0));
                    }
                }
            }
            for s in block_spectra(&re, &b).unwrap() {
                if !has_hamiltonian_symmetry(&s.linearization_eigenvalues, 1e-8) {
                    ok_sym = false;
                }
            }
            if kind == FamilyKind::RingPole && re.n() >= 3 {
                let q = ring_pole_quadratics(re.n(), re.spec().theta0, re.spec().kappa.unwrap()).unwrap();
                let e = b.blocks.iter().find(|x| x.mode == 1 && x.len == 4 && x.hessian_groups.len() == 2);
                if let Some(e) = e {
                    let s = e.start;
                    let err = max_relative_error(&[h[(s, s)], h[(s, s + 1)], h[(s + 1, s + 1)]], &[q.q11, q.q12, q.q22]);
                    quad = quad.max(err);
                }
            }
        }
    }
    vec![
        CheckOutcome::new("slice vectors annihilate dPhi", dphi < 1e-9, format!("max |dPhi v| {dphi:.3e}")),
        CheckOutcome::new("slice omega-orthogonal to group orbit", orth < 1e-9, format!("max |omega(t, v)| {orth:.3e}")),
        CheckOutcome::new("block structure of Hessian and pairing", offblock < 1e-9, format!("max off-block entry {offblock:.3e}")),
        CheckOutcome::new("spectral quadruple symmetry", ok_sym, format!("{} families x {draws} draws", ALL_KINDS.len())),
        CheckOutcome::new("ring-pole quadratics vs numeric block", quad < 1e-8, format!("max rel error {quad:.3e}")),
    ]
}

fn determinism(seed: u64) -> CheckOutcome {
    let run = || -> Result<String> {
        let tol = crate::stability::Tolerances::default();
        let a = crate::scan::scan_ring_pole(5, (0.2, 2.9), (-3.0, 3.0), 12, &tol)?.to_csv(&[format!("seed={seed}")]);
        let b = crate::scan::scan_two_rings(3, (0.2, 1.5), (0.2, 2.9), true, 10, &tol)?.to_csv(&[]);
        let re = crate::families::build_ring(7, 1.0)?;
        let g = crate::dynamics::perturbation_growth(&re, &crate::dynamics::GrowthOptions { seed, t_max: 5.0, ..Default::default() })?;
        let r = classify(&re)?;
        Ok(format!("{a}{b}{}{:?}", g.exponent.to_bits(), r.blocks))
    };
    match (run(), run()) {
        (Ok(x), Ok(y)) => CheckOutcome::new("determinism of scans, classification and growth fits", x == y, format!("{} bytes compared", x.len())),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::new("determinism of scans, classification and growth fits", false, e.to_string()),
    }
}

/// Runs every invariant check; the outcome list depends only on `seed`.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![sum_identities()];
    out.extend(fd_checks(&mut rng, 20));
    out.push(symmetry_checks(&mut rng));
    out.push(mode_formula_check(&mut rng, 50));
    out.push(pairing_table());
    out.extend(slice_checks(&mut rng, 20));
    out.push(determinism(seed));
    out
}
