//! Fourier-mode tangent vectors and symmetry-adapted bases of the symplectic slice.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VortexError};
use crate::families::{momentum_is_zero, FamilyKind, RelativeEquilibrium};
use crate::linalg::reciprocal_condition;
use crate::system::Vec3;

/// Minimum reciprocal condition number of the restricted symplectic matrix.
pub const PAIRING_RCOND_MIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Alpha,
    Beta,
}

/// Real or imaginary part of sum_s exp(2 pi i l s / n + i l phase_j) * delta(channel)_{j,s}.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    pub ring: usize,
    pub mode: usize,
    pub channel: Channel,
    pub parity: Parity,
    pub coefficients: DVector<f64>,
}

impl ModeVector {
    /// Rejects the combinations that vanish identically (beta at l = 0 and l = n/2).
    pub fn new(re: &RelativeEquilibrium, ring: usize, mode: usize, channel: Channel, parity: Parity) -> Result<Self> {
        if ring >= re.rings().len() || mode >= re.n() {
            return Err(VortexError::Domain(format!("no mode {mode} on ring {ring}")));
        }
        let coefficients = mode_coefficients(re, ring, mode, channel, parity);
        if coefficients.iter().all(|c| *c == 0.0) {
            return Err(VortexError::Domain(format!("mode vector l={mode} ring {ring} vanishes identically")));
        }
        Ok(Self { ring, mode, channel, parity, coefficients })
    }
}

/// Raw chart coefficients of a mode vector; may be the zero vector.
pub fn mode_coefficients(re: &RelativeEquilibrium, ring: usize, mode: usize, channel: Channel, parity: Parity) -> DVector<f64> {
    let n = re.n();
    let phase = re.rings()[ring].phase;
    let mut v = DVector::zeros(re.dim());
    let off = match channel {
        Channel::Theta => 0,
        Channel::Phi => 1,
    };
    for s in 0..n {
        let ang = 2.0 * PI * (mode * s) as f64 / n as f64 + mode as f64 * phase;
        v[2 * re.ring_slot(ring, s) + off] = match parity {
            Parity::Alpha => ang.cos(),
            Parity::Beta => ang.sin(),
        };
    }
    // exact zeros where the combination vanishes (only rounding survives there)
    if v.amax() < 1e-12 {
        v.fill(0.0);
    }
    v
}

/// All nonvanishing mode vectors at mode `l`, ring by ring in (alpha_theta, alpha_phi, beta_theta, beta_phi) order.
pub fn mode_vectors(re: &RelativeEquilibrium, l: usize) -> Result<Vec<ModeVector>> {
    if l >= re.n() {
        return Err(VortexError::Domain(format!("mode {l} outside 0..{}", re.n())));
    }
    let mut out = Vec::new();
    for j in 0..re.rings().len() {
        for (par, ch) in [
            (Parity::Alpha, Channel::Theta),
            (Parity::Alpha, Channel::Phi),
            (Parity::Beta, Channel::Theta),
            (Parity::Beta, Channel::Phi),
        ] {
            if let Ok(m) = ModeVector::new(re, j, l, ch, par) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarTangent {
    pub pole: usize,
    pub dx: f64,
    pub dy: f64,
}

impl PolarTangent {
    pub fn to_vector(&self, re: &RelativeEquilibrium) -> DVector<f64> {
        let mut v = DVector::zeros(re.dim());
        let slot = re.pole_slot(self.pole);
        v[2 * slot] = self.dx;
        v[2 * slot + 1] = self.dy;
        v
    }
}

/// Jacobian of the momentum map at the equilibrium (3 x dim).
pub fn d_momentum(re: &RelativeEquilibrium) -> DMatrix<f64> {
    re.chart().momentum_jacobian()
}

/// Generators of the group orbit through the equilibrium: the z-rotation when
/// mu != 0, all three infinitesimal rotations when mu = 0.
pub fn orbit_tangent(re: &RelativeEquilibrium) -> Vec<DVector<f64>> {
    let axes: Vec<Vec3> = if momentum_is_zero(re) { vec![Vec3::x(), Vec3::y(), Vec3::z()] } else { vec![Vec3::z()] };
    let pos = re.chart().positions();
    axes.iter()
        .map(|a| {
            let u: Vec<Vec3> = pos.iter().map(|p| a.cross(p)).collect();
            re.chart().pull_back(&u)
        })
        .collect()
}

/// One independent block of the slice linearization.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub label: String,
    pub mode: usize,
    pub start: usize,
    pub len: usize,
    /// Index groups (relative to `start`) on which the Hessian further splits.
    pub hessian_groups: Vec<Vec<usize>>,
}

impl BlockLayout {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceBasis {
    /// Basis vectors as columns (dim x k), in chart coordinates.
    pub vectors: DMatrix<f64>,
    pub labels: Vec<String>,
    pub blocks: Vec<BlockLayout>,
    /// W_ab = omega(v_a, v_b).
    pub pairing: DMatrix<f64>,
}

impl SliceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// Multiplies every vector by the given factor (used to test scale invariance).
    pub fn scaled(&self, factors: &[f64]) -> SliceBasis {
        let mut v = self.vectors.clone();
        for (i, f) in factors.iter().enumerate() {
            v.column_mut(i).scale_mut(*f);
        }
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(factors));
        SliceBasis { vectors: v, labels: self.labels.clone(), blocks: self.blocks.clone(), pairing: &d * &self.pairing * &d }
    }

    /// Writes the basis as labeled CSV columns (one row per chart coordinate).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("coordinate");
        for l in &self.labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for r in 0..self.vectors.nrows() {
            s.push_str(&format!("q{r}"));
            for c in 0..self.dim() {
                s.push_str(&format!(",{}", self.vectors[(r, c)]));
            }
            s.push('\n');
        }
        s
    }
}

struct Builder<'a> {
    re: &'a RelativeEquilibrium,
    vectors: Vec<DVector<f64>>,
    labels: Vec<String>,
    blocks: Vec<BlockLayout>,
}

impl<'a> Builder<'a> {
    fn new(re: &'a RelativeEquilibrium) -> Self {
        Self { re, vectors: vec![], labels: vec![], blocks: vec![] }
    }

    fn a(&self, j: usize, l: usize, ch: Channel) -> DVector<f64> {
        mode_coefficients(self.re, j, l, ch, Parity::Alpha)
    }

    fn b(&self, j: usize, l: usize, ch: Channel) -> DVector<f64> {
        mode_coefficients(self.re, j, l, ch, Parity::Beta)
    }

    fn pole(&self, p: usize, dx: f64, dy: f64) -> DVector<f64> {
        PolarTangent { pole: p, dx, dy }.to_vector(self.re)
    }

    fn block(&mut self, label: &str, mode: usize, vs: Vec<(String, DVector<f64>)>, groups: Vec<Vec<usize>>) {
        let start = self.vectors.len();
        let len = vs.len();
        for (name, v) in vs {
            self.labels.push(name);
            self.vectors.push(v);
        }
        self.blocks.push(BlockLayout { label: label.to_string(), mode, start, len, hessian_groups: groups });
    }

    /// Single-ring modes 2 <= l <= n/2, the part common to the one-ring families.
    fn ring_modes(&mut self) {
        use Channel::*;
        let n = self.re.n();
        for l in 2..=n / 2 {
            let mut vs = vec![(format!("a{l}_th"), self.a(0, l, Theta)), (format!("a{l}_ph"), self.a(0, l, Phi))];
            if 2 * l != n {
                vs.push((format!("b{l}_th"), self.b(0, l, Theta)));
                vs.push((format!("b{l}_ph"), self.b(0, l, Phi)));
            }
            let groups = (0..vs.len()).map(|i| vec![i]).collect();
            self.block(&format!("l={l}"), l, vs, groups);
        }
    }

    fn finish(mut self) -> Result<SliceBasis> {
        let sw = self.re.chart().symplectic_matrix();
        for bi in 0..self.blocks.len() {
            let b = self.blocks[bi].clone();
            let mut m = DMatrix::zeros(self.re.dim(), b.len);
            for i in 0..b.len {
                m.set_column(i, &self.vectors[b.start + i]);
            }
            let w = m.transpose() * &sw * &m;
            if reciprocal_condition(&w) > PAIRING_RCOND_MIN {
                continue;
            }
            // The closed-form vectors degenerate on isolated parameter lines (e.g. cos 2theta0 = 0);
            // the block is then rebuilt numerically from the same symmetry subspace.
            let vs = isotypic_slice_vectors(self.re, b.mode);
            if vs.len() != b.len {
                return Err(VortexError::SingularPairing { rcond: reciprocal_condition(&w) });
            }
            for (i, v) in vs.into_iter().enumerate() {
                self.vectors[b.start + i] = v;
                self.labels[b.start + i] = format!("{}_n{i}", b.label);
            }
            self.blocks[bi].hessian_groups = vec![(0..b.len).collect()];
        }
        let dim = self.re.dim();
        let k = self.vectors.len();
        let mut m = DMatrix::zeros(dim, k);
        for (i, v) in self.vectors.iter().enumerate() {
            m.set_column(i, v);
        }
        let pairing = restricted_symplectic(&m, self.re);
        let basis = SliceBasis { vectors: m, labels: self.labels, blocks: self.blocks, pairing };
        check_pairing(&basis)?;
        Ok(basis)
    }
}

/// Orthonormal basis of (mode-l subspace, plus polar tangents when l = 1) within
/// Ker dPhi and omega-orthogonal to the group orbit.
fn isotypic_slice_vectors(re: &RelativeEquilibrium, l: usize) -> Vec<DVector<f64>> {
    let mut span: Vec<DVector<f64>> = mode_vectors(re, l).map(|m| m.into_iter().map(|v| v.coefficients).collect()).unwrap_or_default();
    if l == 1 {
        for p in 0..re.poles().len() {
            span.push(PolarTangent { pole: p, dx: 1.0, dy: 0.0 }.to_vector(re));
            span.push(PolarTangent { pole: p, dx: 0.0, dy: 1.0 }.to_vector(re));
        }
    }
    if span.is_empty() {
        return span;
    }
    let mut g = DMatrix::zeros(re.dim(), span.len());
    for (i, v) in span.iter().enumerate() {
        g.set_column(i, v);
    }
    let sw = re.chart().symplectic_matrix();
    let orbit = orbit_tangent(re);
    let mut c = DMatrix::zeros(3 + orbit.len(), re.dim());
    c.rows_mut(0, 3).copy_from(&d_momentum(re));
    for (i, t) in orbit.iter().enumerate() {
        c.row_mut(3 + i).copy_from(&(&sw * t).transpose());
    }
    let cg = &c * &g;
    let eig = nalgebra::SymmetricEigen::new(cg.transpose() * &cg);
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut out: Vec<DVector<f64>> = Vec::new();
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        if *ev < 1e-12 * scale {
            let mut v = &g * eig.eigenvectors.column(i);
            for u in &out {
                let p = u.dot(&v);
                v -= u * p;
            }
            let nv = v.norm();
            if nv > 1e-8 {
                out.push(v / nv);
            }
        }
    }
    out
}

fn named(items: Vec<(&str, DVector<f64>)>) -> Vec<(String, DVector<f64>)> {
    items.into_iter().map(|(n, v)| (n.to_string(), v)).collect()
}

fn check_pairing(basis: &SliceBasis) -> Result<()> {
    for b in &basis.blocks {
        let w = basis.pairing.view((b.start, b.start), (b.len, b.len)).into_owned();
        let rcond = reciprocal_condition(&w);
        if !(rcond > PAIRING_RCOND_MIN) {
            return Err(VortexError::SingularPairing { rcond });
        }
    }
    Ok(())
}

/// Matrix of the symplectic form restricted to the columns of `vectors`.
pub fn restricted_symplectic(vectors: &DMatrix<f64>, re: &RelativeEquilibrium) -> DMatrix<f64> {
    let w = vectors.transpose() * re.chart().symplectic_matrix() * vectors;
    (&w - w.transpose()) * 0.5
}

/// Symmetry-adapted basis of the symplectic slice (requires mu != 0).
pub fn slice_basis(re: &RelativeEquilibrium) -> Result<SliceBasis> {
    if momentum_is_zero(re) {
        return Err(VortexError::ZeroMomentum);
    }
    use Channel::*;
    let n = re.n();
    let (s0, c0) = re.rings()[0].theta.sin_cos();
    let mut bld = Builder::new(re);
    match re.spec().kind {
        FamilyKind::Ring => {
            if n >= 3 {
                let e1 = bld.a(0, 1, Theta) * s0 + bld.b(0, 1, Phi) * c0;
                let e2 = bld.b(0, 1, Theta) * s0 - bld.a(0, 1, Phi) * c0;
                bld.block("e", 1, named(vec![("e1", e1), ("e2", e2)]), vec![vec![0], vec![1]]);
                bld.ring_modes();
            }
        }
        FamilyKind::RingPole => {
            let kappa = re.poles()[0].kappa;
            if n == 2 {
                let e1 = (bld.a(0, 1, Theta) * kappa) - bld.pole(0, 2.0 * c0, 0.0);
                let e2 = (bld.a(0, 1, Phi) * kappa) - bld.pole(0, 0.0, 2.0 * s0);
                bld.block("e", 1, named(vec![("e1", e1), ("e2", e2)]), vec![vec![0, 1]]);
            } else {
                let k = n as f64 * (2.0 * re.rings()[0].theta).cos() / (2.0 * kappa);
                let e1 = bld.b(0, 1, Theta) * c0 - bld.a(0, 1, Phi) * s0 - bld.pole(0, 0.0, k);
                let e2 = bld.b(0, 1, Theta) * s0 - bld.a(0, 1, Phi) * c0;
                let e3 = bld.a(0, 1, Theta) * c0 + bld.b(0, 1, Phi) * s0 - bld.pole(0, k, 0.0);
                let e4 = bld.a(0, 1, Theta) * s0 + bld.b(0, 1, Phi) * c0;
                let vs = named(vec![("e1", e1), ("e2", e2), ("e3", e3), ("e4", e4)]);
                bld.block("e", 1, vs, vec![vec![0, 1], vec![2, 3]]);
                bld.ring_modes();
            }
        }
        FamilyKind::RingTwoPoles => {
            if n == 2 {
                return Err(VortexError::Unsupported("ring with two poles needs n >= 3".into()));
            }
            let two_c = n as f64 * (2.0 * re.rings()[0].theta).cos() / 2.0;
            let kn = two_c / re.poles()[0].kappa;
            let ks = two_c / re.poles()[1].kappa;
            let u = bld.b(0, 1, Theta) * c0 - bld.a(0, 1, Phi) * s0;
            let w = bld.a(0, 1, Theta) * c0 + bld.b(0, 1, Phi) * s0;
            let e1 = &u - bld.pole(0, 0.0, kn);
            let e2 = &u - bld.pole(1, 0.0, ks);
            let e3 = bld.a(0, 1, Theta) * s0 + bld.b(0, 1, Phi) * c0;
            let e4 = &w - bld.pole(0, kn, 0.0);
            let e5 = &w - bld.pole(1, ks, 0.0);
            let e6 = bld.b(0, 1, Theta) * s0 - bld.a(0, 1, Phi) * c0;
            let vs = named(vec![("e1", e1), ("e2", e2), ("e3", e3), ("e4", e4), ("e5", e5), ("e6", e6)]);
            bld.block("e", 1, vs, vec![vec![0, 1, 5], vec![2, 3, 4]]);
            bld.ring_modes();
        }
        FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => two_ring_basis(&mut bld),
    }
    bld.finish()
}

fn two_ring_basis(bld: &mut Builder<'_>) {
    use Channel::*;
    let re = bld.re;
    let n = re.n();
    let staggered = re.spec().kind == FamilyKind::TwoStaggeredRings;
    let (s0, c0) = re.rings()[0].theta.sin_cos();
    let (s1, c1) = re.rings()[1].theta.sin_cos();
    let k = re.rings()[1].kappa;

    let e1 = bld.a(0, 0, Phi) - bld.a(1, 0, Phi);
    let e2 = bld.a(0, 0, Theta) * (k * s1) - bld.a(1, 0, Theta) * s0;
    let e3 = (bld.a(0, 1, Theta) * (k * c1) + bld.a(1, 1, Theta) * c0) * (s0 * s1)
        + (bld.b(0, 1, Phi) * (k * s1) + bld.b(1, 1, Phi) * s0) * (c0 * c1);
    let e4 = bld.a(0, 1, Theta) * (k * c1) - bld.a(1, 1, Theta) * c0;
    let e5 = bld.b(0, 1, Phi) * (k * s1) - bld.b(1, 1, Phi) * s0;
    let e6 = (bld.b(0, 1, Theta) * (k * c1) + bld.b(1, 1, Theta) * c0) * (s0 * s1)
        - (bld.a(0, 1, Phi) * (k * s1) + bld.a(1, 1, Phi) * s0) * (c0 * c1);
    let e7 = bld.b(0, 1, Theta) * (k * c1) - bld.b(1, 1, Theta) * c0;
    let e8 = bld.a(0, 1, Phi) * (k * s1) - bld.a(1, 1, Phi) * s0;

    if n == 2 {
        bld.block("l=0", 0, named(vec![("e1", e1), ("e2", e2)]), vec![vec![0], vec![1]]);
        if staggered {
            bld.block("l=1", 1, named(vec![("e3", e3), ("e6", e6)]), vec![vec![0], vec![1]]);
        } else {
            bld.block("l=1", 1, named(vec![("e4", e4), ("e8", e8)]), vec![vec![0], vec![1]]);
        }
        return;
    }
    bld.block("l=0", 0, named(vec![("e1", e1), ("e2", e2)]), vec![vec![0], vec![1]]);
    let vs = named(vec![("e3", e3), ("e4", e4), ("e5", e5), ("e6", e6), ("e7", e7), ("e8", e8)]);
    bld.block("l=1", 1, vs, vec![vec![0, 1, 2], vec![3, 4, 5]]);

    for l in 2..=n / 2 {
        let (a0t, a1t, a0p, a1p) = (bld.a(0, l, Theta), bld.a(1, l, Theta), bld.a(0, l, Phi), bld.a(1, l, Phi));
        let (b0t, b1t, b0p, b1p) = (bld.b(0, l, Theta), bld.b(1, l, Theta), bld.b(0, l, Phi), bld.b(1, l, Phi));
        if 2 * l == n {
            let vs = if staggered {
                // the second ring's alpha vectors vanish at l = n/2, its beta vectors take over
                vec![
                    (format!("a{l}_th0-a{l}_th1"), &a0t - &a1t),
                    (format!("a{l}_ph0-a{l}_ph1"), &a0p - &a1p),
                    (format!("b{l}_th1"), b1t),
                    (format!("b{l}_ph1"), b1p),
                ]
            } else {
                vec![
                    (format!("a{l}_th0"), a0t),
                    (format!("a{l}_th1"), a1t),
                    (format!("a{l}_ph0"), a0p),
                    (format!("a{l}_ph1"), a1p),
                ]
            };
            let groups = if staggered { vec![vec![0, 3], vec![1, 2]] } else { vec![vec![0, 1], vec![2, 3]] };
            bld.block(&format!("l={l}"), l, vs, groups);
        } else {
            let vs = vec![
                (format!("a{l}_th0-a{l}_th1"), &a0t - &a1t),
                (format!("b{l}_ph0+b{l}_ph1"), &b0p + &b1p),
                (format!("a{l}_ph0+a{l}_ph1"), &a0p + &a1p),
                (format!("b{l}_th0-b{l}_th1"), &b0t - &b1t),
                (format!("a{l}_th0+a{l}_th1"), &a0t + &a1t),
                (format!("b{l}_ph0-b{l}_ph1"), &b0p - &b1p),
                (format!("a{l}_ph0-a{l}_ph1"), &a0p - &a1p),
                (format!("b{l}_th0+b{l}_th1"), &b0t + &b1t),
            ];
            bld.block(&format!("l={l}"), l, vs, vec![vec![0, 1, 4, 5], vec![2, 3, 6, 7]]);
        }
    }
}

/// Slice basis at zero momentum, where the full SO(3) orbit is removed.
/// Only the single (equatorial) ring has one.
pub fn reduced_slice_basis(re: &RelativeEquilibrium) -> Result<SliceBasis> {
    if !momentum_is_zero(re) {
        return Err(VortexError::Domain("reduced slice requires zero momentum".into()));
    }
    if re.spec().kind != FamilyKind::Ring {
        return Err(VortexError::Unsupported(format!("no zero-momentum slice for {}", re.spec().kind.name())));
    }
    let mut bld = Builder::new(re);
    bld.ring_modes();
    bld.finish()
}

/// The slice used for stability: full slice for mu != 0, reduced slice for mu = 0.
pub fn basis_for(re: &RelativeEquilibrium) -> Result<SliceBasis> {
    if momentum_is_zero(re) {
        reduced_slice_basis(re)
    } else {
        slice_basis(re)
    }
}
