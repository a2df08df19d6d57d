//! Restriction to the symplectic slice and block-by-block stability classification.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::criteria::{criterion_ring, criterion_ring_pole, criterion_ring_two_poles, L2Verdict};
use crate::error::{Result, VortexError};
use crate::families::{build, build_two_rings, FamilyKind, FamilySpec, RelativeEquilibrium};
use crate::linalg::{general_eigenvalues, symmetric_eigenvalues};
use crate::slice::{basis_for, SliceBasis};

/// Default relative zero tolerance for block eigenvalues.
pub const EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    LyapunovStable,
    Elliptic,
    LinearlyUnstable,
    Degenerate,
}

impl Verdict {
    pub fn code(&self) -> char {
        match self {
            Verdict::LyapunovStable => 'S',
            Verdict::Elliptic => 'E',
            Verdict::LinearlyUnstable => 'U',
            Verdict::Degenerate => 'D',
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Verdict {
    type Err = VortexError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "S" | "LyapunovStable" => Verdict::LyapunovStable,
            "E" | "Elliptic" => Verdict::Elliptic,
            "U" | "LinearlyUnstable" => Verdict::LinearlyUnstable,
            "D" | "Degenerate" => Verdict::Degenerate,
            _ => return Err(VortexError::Domain(format!("unknown verdict '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// |lambda| below eig_rel * (spectral radius of the block) counts as zero.
    pub eig_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig_rel: EIGEN_TOL }
    }
}

impl Tolerances {
    pub fn new(eig_rel: f64) -> Result<Self> {
        if !(eig_rel > 0.0 && eig_rel < 1.0) {
            return Err(VortexError::Domain(format!("eigenvalue tolerance must lie in (0, 1), got {eig_rel}")));
        }
        Ok(Self { eig_rel })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    pub label: String,
    pub mode: usize,
    /// Ascending.
    pub hessian_eigenvalues: Vec<f64>,
    /// Sorted by (re, im).
    pub linearization_eigenvalues: Vec<Complex<f64>>,
    /// min |lambda_H| / rho_H.
    pub hessian_margin: f64,
    /// max |Re lambda_L| / rho_L.
    pub growth_margin: f64,
}

impl BlockSpectrum {
    fn hessian_radius(&self) -> f64 {
        self.hessian_eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn linear_radius(&self) -> f64 {
        self.linearization_eigenvalues.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_real_part(&self) -> f64 {
        self.linearization_eigenvalues.iter().fold(0.0, |m, v| m.max(v.re.abs()))
    }

    /// Verdict of this block alone.
    pub fn verdict(&self, tol: &Tolerances) -> Verdict {
        combine(std::slice::from_ref(self), tol).0
    }

    /// Margin reported for the block: growth margin if unstable, Hessian margin otherwise.
    pub fn margin(&self, tol: &Tolerances) -> f64 {
        if self.verdict(tol) == Verdict::LinearlyUnstable {
            self.growth_margin
        } else {
            self.hessian_margin
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub spec: FamilySpec,
    pub verdict: Verdict,
    pub kappa: Option<f64>,
    pub xi: f64,
    pub mu_z: f64,
    pub blocks: Vec<BlockSpectrum>,
    pub analytic_verdict: Option<Verdict>,
    /// None when no closed form applies.
    pub agreement: Option<bool>,
    /// Distance of the deciding eigenvalues from the decision boundary, relative to the block radius.
    pub margin: f64,
    pub tolerances: Tolerances,
}

/// B^T d^2 H_xi B over the basis columns, symmetrized.
pub fn restrict_hessian(re: &RelativeEquilibrium, basis: &SliceBasis) -> Result<DMatrix<f64>> {
    let h = re.chart().hessian_augmented(re.xi())?;
    let r = basis.vectors.transpose() * h * &basis.vectors;
    Ok((&r + r.transpose()) * 0.5)
}

/// L = W^{-1} H over the full slice.
pub fn linearization(re: &RelativeEquilibrium, basis: &SliceBasis) -> Result<DMatrix<f64>> {
    let h = restrict_hessian(re, basis)?;
    solve_pairing(&basis.pairing, &h)
}

fn solve_pairing(w: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let rcond = crate::linalg::reciprocal_condition(w);
    if !(rcond > crate::slice::PAIRING_RCOND_MIN) {
        return Err(VortexError::SingularPairing { rcond });
    }
    w.clone().lu().solve(h).ok_or(VortexError::SingularPairing { rcond })
}

/// Spectra of every block of the slice, each solved independently.
pub fn block_spectra(re: &RelativeEquilibrium, basis: &SliceBasis) -> Result<Vec<BlockSpectrum>> {
    let h = restrict_hessian(re, basis)?;
    let mut out = Vec::with_capacity(basis.blocks.len());
    for b in &basis.blocks {
        let hb = h.view((b.start, b.start), (b.len, b.len)).into_owned();
        let wb = basis.pairing.view((b.start, b.start), (b.len, b.len)).into_owned();
        let lb = solve_pairing(&wb, &hb)?;
        let he = symmetric_eigenvalues(&hb);
        let le = general_eigenvalues(&lb)?;
        if he.iter().any(|v| !v.is_finite()) || le.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(VortexError::Numeric(format!("non-finite spectrum in block {}", b.label)));
        }
        let mut s = BlockSpectrum {
            label: b.label.clone(),
            mode: b.mode,
            hessian_eigenvalues: he,
            linearization_eigenvalues: le,
            hessian_margin: 0.0,
            growth_margin: 0.0,
        };
        let rh = s.hessian_radius();
        let rl = s.linear_radius();
        s.hessian_margin = if rh > 0.0 { s.hessian_eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())) / rh } else { 0.0 };
        s.growth_margin = if rl > 0.0 { s.max_real_part() / rl } else { 0.0 };
        out.push(s);
    }
    Ok(out)
}

/// The classification lattice over a set of blocks: (verdict, margin).
pub fn combine(blocks: &[BlockSpectrum], tol: &Tolerances) -> (Verdict, f64) {
    let unstable = blocks.iter().filter(|b| b.growth_margin > tol.eig_rel).map(|b| b.growth_margin).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    if let Some(m) = unstable {
        return (Verdict::LinearlyUnstable, m);
    }
    let hm = blocks.iter().map(|b| b.hessian_margin).fold(f64::INFINITY, f64::min);
    if blocks.iter().any(|b| !b.hessian_eigenvalues.is_empty() && b.hessian_margin <= tol.eig_rel) {
        let gm = blocks.iter().map(|b| b.growth_margin).fold(0.0, f64::max);
        return (Verdict::Degenerate, hm.min(tol.eig_rel - gm));
    }
    let pos = blocks.iter().flat_map(|b| &b.hessian_eigenvalues).any(|v| *v > 0.0);
    let neg = blocks.iter().flat_map(|b| &b.hessian_eigenvalues).any(|v| *v < 0.0);
    let margin = if hm.is_finite() { hm } else { 1.0 };
    if pos && neg {
        (Verdict::Elliptic, margin)
    } else {
        (Verdict::LyapunovStable, margin)
    }
}

/// Closed-form verdict where one exists.
pub fn analytic_verdict(spec: &FamilySpec) -> Option<Verdict> {
    match spec.kind {
        FamilyKind::Ring => Some(criterion_ring(spec.n, spec.theta0)),
        FamilyKind::RingPole => spec.kappa.map(|k| criterion_ring_pole(spec.n, spec.theta0, k)),
        FamilyKind::RingTwoPoles => {
            let (kn, ks) = (spec.kappa_n?, spec.kappa_s?);
            match criterion_ring_two_poles(spec.n, spec.theta0, kn, ks) {
                Ok(L2Verdict::UnstableByL2Modes) => Some(Verdict::LinearlyUnstable),
                _ => None,
            }
        }
        FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => None,
    }
}

pub fn classify(re: &RelativeEquilibrium) -> Result<StabilityReport> {
    classify_with(re, &Tolerances::default())
}

pub fn classify_with(re: &RelativeEquilibrium, tol: &Tolerances) -> Result<StabilityReport> {
    let basis = basis_for(re)?;
    classify_in_basis(re, &basis, tol)
}

/// Classification using a caller-supplied slice basis (e.g. a rescaled one).
pub fn classify_in_basis(re: &RelativeEquilibrium, basis: &SliceBasis, tol: &Tolerances) -> Result<StabilityReport> {
    let blocks = block_spectra(re, basis)?;
    let (verdict, margin) = combine(&blocks, tol);
    let analytic = analytic_verdict(re.spec());
    Ok(StabilityReport {
        spec: re.spec().clone(),
        verdict,
        kappa: re.kappa(),
        xi: re.xi(),
        mu_z: re.mu().z(),
        blocks,
        analytic_verdict: analytic,
        agreement: analytic.map(|a| a == verdict),
        margin,
        tolerances: *tol,
    })
}

/// Builds and classifies a family member.
pub fn classify_spec(spec: &FamilySpec, tol: &Tolerances) -> Result<StabilityReport> {
    classify_with(&build(spec)?, tol)
}

/// Two rings with the vorticity ratio solved from the equilibrium condition.
pub fn classify_two_rings(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Result<StabilityReport> {
    classify(&build_two_rings(n, theta0, theta1, staggered)?)
}

/// True if the spectrum is closed under lambda -> -lambda and lambda -> conj(lambda) within `tol`
/// (relative to the spectral radius).
pub fn has_hamiltonian_symmetry(eigs: &[Complex<f64>], tol: f64) -> bool {
    let r = eigs.iter().fold(0.0, |m: f64, v| m.max(v.norm())).max(1e-300);
    let close = |a: Complex<f64>| eigs.iter().any(|b| (a - b).norm() <= tol * r);
    eigs.iter().all(|&e| close(-e) && close(e.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::ring_mode_eigenvalues;
    use crate::families::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn ring_examples() {
        let r = classify(&build_ring(4, 0.5f64.sqrt().acos()).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::LyapunovStable);
        assert_eq!(r.agreement, Some(true));
        for i in 0..20 {
            let t = 0.05 + 3.0 * i as f64 / 19.0;
            assert_eq!(classify(&build_ring(7, t).unwrap()).unwrap().verdict, Verdict::LinearlyUnstable);
            assert_eq!(classify(&build_ring(2, t).unwrap()).unwrap().verdict, Verdict::LyapunovStable);
        }
    }

    #[test]
    fn ring_hessian_is_diagonal_with_closed_form_entries() {
        let t = 0.6f64.sqrt().acos();
        let re = build_ring(5, t).unwrap();
        let b = basis_for(&re).unwrap();
        let h = restrict_hessian(&re, &b).unwrap();
        let scale = h.amax();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if i != j {
                    assert!(h[(i, j)].abs() < 1e-10 * scale, "{i},{j}: {}", h[(i, j)]);
                }
            }
        }
        let blk = b.blocks.iter().find(|x| x.label == "l=2").unwrap();
        let v0 = b.vector(blk.start);
        let v1 = b.vector(blk.start + 1);
        let (lt, lp) = ring_mode_eigenvalues(5, t, 2, None, None).unwrap();
        // mode vectors have squared norm n/2, so the quadratic form is the eigenvalue itself
        let nt = h[(blk.start, blk.start)] * 2.5 / v0.norm_squared();
        let np = h[(blk.start + 1, blk.start + 1)] * 2.5 / v1.norm_squared();
        assert!((nt / lt - 1.0).abs() < 1e-8, "{nt} {lt}");
        assert!((np / lp - 1.0).abs() < 1e-8, "{np} {lp}");
    }

    #[test]
    fn equatorial_n4_reduced_block_ratio() {
        let re = build_ring(4, FRAC_PI_2).unwrap();
        let b = basis_for(&re).unwrap();
        let h = restrict_hessian(&re, &b).unwrap();
        let d: Vec<f64> = (0..h.nrows()).map(|i| h[(i, i)] * 2.0 / b.vector(i).norm_squared()).collect();
        assert!((d[0] + 2.0).abs() < 1e-9 && (d[1] - 8.0).abs() < 1e-9, "{d:?}");
        assert_eq!(classify(&re).unwrap().verdict, Verdict::LinearlyUnstable);
    }

    #[test]
    fn n7_equator_l3_has_real_pair() {
        let r = classify(&build_ring(7, FRAC_PI_2).unwrap()).unwrap();
        let b = r.blocks.iter().find(|b| b.label == "l=3").unwrap();
        assert!(b.linearization_eigenvalues.iter().any(|e| e.re > 1e-3 && e.im.abs() < 1e-9));
    }

    #[test]
    fn n5_l2_block_imaginary_pair() {
        let t = 0.3;
        let r = classify(&build_ring(5, t).unwrap()).unwrap();
        let b = r.blocks.iter().find(|b| b.label == "l=2").unwrap();
        let (lt, lp) = ring_mode_eigenvalues(5, t, 2, None, None).unwrap();
        assert!(lt > 0.0);
        for e in &b.linearization_eigenvalues {
            assert!(e.re.abs() < 1e-9 * e.norm());
        }
        // all four eigenvalues have the same modulus, a positive multiple of sqrt(lt lp)
        let m0 = b.linearization_eigenvalues[0].norm();
        assert!(b.linearization_eigenvalues.iter().all(|e| (e.norm() / m0 - 1.0).abs() < 1e-9));
        assert!(m0 / (lt * lp).sqrt() > 0.0);
    }

    #[test]
    fn ring_pole_degenerate_example() {
        let r = classify(&build_ring_pole(4, FRAC_PI_2, 1.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert_eq!(r.analytic_verdict, Some(Verdict::Degenerate));
    }

    #[test]
    fn ring_pole_n2_examples() {
        let r = classify(&build_ring_pole(2, FRAC_PI_2, -1.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::LyapunovStable);
        assert_eq!(r.agreement, Some(true));
    }

    #[test]
    fn ring_pole_e_block_matches_quadratics() {
        use crate::criteria::ring_pole_quadratics;
        for &(n, t, k) in &[(5, 1.1, 0.7), (4, 0.5, -2.0), (8, 2.2, 3.3), (6, 0.9, 1.5)] {
            let re = build_ring_pole(n, t, k).unwrap();
            let b = basis_for(&re).unwrap();
            let e = b.blocks.iter().find(|x| x.mode == 1).unwrap();
            let h = restrict_hessian(&re, &b).unwrap();
            let q = ring_pole_quadratics(n, t, k).unwrap();
            let s = e.start;
            let tol = 1e-8 * h.amax();
            assert!((h[(s, s)] - q.q11).abs() < tol, "q11 {} {}", h[(s, s)], q.q11);
            assert!((h[(s, s + 1)] - q.q12).abs() < tol, "q12");
            assert!((h[(s + 1, s + 1)] - q.q22).abs() < tol, "q22");
            assert!((h[(s + 2, s + 2)] - q.q11).abs() < tol && (h[(s + 3, s + 3)] - q.q22).abs() < tol);
            assert!(h[(s, s + 2)].abs() < tol && h[(s + 1, s + 3)].abs() < tol);
            let w = &b.pairing;
            assert!((w[(s, s + 2)] - q.alpha).abs() < 1e-9 * q.alpha.abs().max(1.0));
            assert!((w[(s + 1, s + 3)] - q.beta).abs() < 1e-9 * q.beta.abs().max(1.0));
            assert!((w[(s, s + 3)] - q.gamma).abs() < 1e-9 * q.gamma.abs().max(1.0));
            assert!((w[(s + 1, s + 2)] - q.gamma).abs() < 1e-9 * q.gamma.abs().max(1.0));
        }
    }

    #[test]
    fn spectra_are_hamiltonian() {
        for spec in [
            FamilySpec::ring(6, 0.4),
            FamilySpec::ring_pole(5, 1.2, -0.6),
            FamilySpec::ring_two_poles(5, 0.8, 0.3, -1.2),
            FamilySpec::two_rings(4, 0.6, 2.0, false),
            FamilySpec::two_rings(3, 0.6, 1.3, true),
        ] {
            let r = classify_spec(&spec, &Tolerances::default()).unwrap();
            for b in &r.blocks {
                assert!(has_hamiltonian_symmetry(&b.linearization_eigenvalues, 1e-8), "{spec:?} {}", b.label);
            }
        }
    }

    #[test]
    fn combine_lattice() {
        let blk = |h: Vec<f64>, l: Vec<(f64, f64)>| {
            let le: Vec<Complex<f64>> = l.into_iter().map(|(a, b)| Complex::new(a, b)).collect();
            let rh = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let rl = le.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            BlockSpectrum {
                label: "x".into(),
                mode: 0,
                hessian_margin: h.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())) / rh,
                growth_margin: le.iter().fold(0.0, |m: f64, v| m.max(v.re.abs())) / rl,
                hessian_eigenvalues: h,
                linearization_eigenvalues: le,
            }
        };
        let t = Tolerances::default();
        assert_eq!(combine(&[], &t).0, Verdict::LyapunovStable);
        assert_eq!(combine(&[blk(vec![-2.0, -1.0], vec![(0.0, -1.0), (0.0, 1.0)])], &t).0, Verdict::LyapunovStable);
        assert_eq!(
            combine(&[blk(vec![1.0, 2.0], vec![(0.0, 1.0)]), blk(vec![-1.0, -3.0], vec![(0.0, 2.0)])], &t).0,
            Verdict::Elliptic
        );
        assert_eq!(combine(&[blk(vec![-1.0, 1.0], vec![(-1.0, 0.0), (1.0, 0.0)])], &t).0, Verdict::LinearlyUnstable);
        assert_eq!(combine(&[blk(vec![0.0, 1.0], vec![(0.0, 0.0), (0.0, 0.0)])], &t).0, Verdict::Degenerate);
    }

    #[test]
    fn verdict_text() {
        for v in [Verdict::LyapunovStable, Verdict::Elliptic, Verdict::LinearlyUnstable, Verdict::Degenerate] {
            assert_eq!(v.to_string().parse::<Verdict>().unwrap(), v);
            assert_eq!(v.code().to_string().parse::<Verdict>().unwrap(), v);
        }
        assert!(Tolerances::new(0.0).is_err());
    }
}
