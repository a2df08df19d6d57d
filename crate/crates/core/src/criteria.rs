//! Closed-form stability criteria for the single-ring families.

use serde::Serialize;

use crate::error::{Result, VortexError};
use crate::stability::Verdict;

/// Relative width of the band around an exact criterion boundary reported as Degenerate.
pub const CRITERION_BAND: f64 = 1e-12;

/// n^2/4 for even n, (n^2 - 1)/4 for odd n.
pub fn c_n(n: usize) -> f64 {
    let n = n as u64;
    let v = if n % 2 == 0 { n * n / 4 } else { (n * n - 1) / 4 };
    v as f64
}

/// sum_{r=1}^{n-1} 1/sin^2(pi r/n), summed directly.
pub fn inverse_sine_square_sum(n: usize) -> f64 {
    (1..n).map(|r| 1.0 / (std::f64::consts::PI * r as f64 / n as f64).sin().powi(2)).sum()
}

/// sum_{j=1}^{n-1} cos(2 pi l j/n)/sin^2(pi j/n), summed directly.
pub fn mode_sine_square_sum(n: usize, l: usize) -> f64 {
    let pi = std::f64::consts::PI;
    (1..n).map(|j| (2.0 * pi * (l * j) as f64 / n as f64).cos() / (pi * j as f64 / n as f64).sin().powi(2)).sum()
}

fn sign(v: f64, scale: f64) -> i8 {
    if v.abs() <= CRITERION_BAND * scale {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Hessian eigenvalues (lambda_theta, lambda_phi) of ring mode l, optionally with polar vortices.
pub fn ring_mode_eigenvalues(
    n: usize,
    theta0: f64,
    l: usize,
    kappa_n: Option<f64>,
    kappa_s: Option<f64>,
) -> Result<(f64, f64)> {
    if l < 2 || 2 * l > n {
        return Err(VortexError::Domain(format!("mode {l} is outside 2..=n/2 for n={n}")));
    }
    let (nf, lf) = (n as f64, l as f64);
    let (s, c) = theta0.sin_cos();
    let kn = kappa_n.unwrap_or(0.0);
    let ks = kappa_s.unwrap_or(0.0);
    let lphi = nf * lf * (nf - lf) / 2.0;
    let bracket = -(lf - 1.0) * (nf - lf - 1.0) + (nf - 1.0) * c * c + kn * (1.0 + c).powi(2) + ks * (1.0 - c).powi(2);
    Ok((nf / (2.0 * s * s) * bracket, lphi))
}

/// Single ring: stable iff cos^2 theta0 > ([n/2]-1)(n-[n/2]-1)/(n-1).
pub fn criterion_ring(n: usize, theta0: f64) -> Verdict {
    if n <= 3 {
        return Verdict::LyapunovStable;
    }
    let h = n / 2;
    let t = ((h - 1) * (n - h - 1)) as f64 / (n - 1) as f64;
    let c2 = theta0.cos().powi(2);
    match sign(c2 - t, 1.0) {
        0 => Verdict::Degenerate,
        1 => Verdict::LyapunovStable,
        _ => Verdict::LinearlyUnstable,
    }
}

/// kappa_0: below it some l >= 2 mode of a ring with a North polar vortex is unstable.
pub fn ring_pole_kappa0(n: usize, theta0: f64) -> f64 {
    let c = theta0.cos();
    (c_n(n) - (n as f64 - 1.0) * (1.0 + c * c)) / (1.0 + c).powi(2)
}

/// a = (n cos - n + 2)(1 + cos)^2.
pub fn ring_pole_a(n: usize, theta0: f64) -> f64 {
    let nf = n as f64;
    let c = theta0.cos();
    (nf * c - nf + 2.0) * (1.0 + c).powi(2)
}

/// kappa_1 = (n-1) cos (n sin^2 + 2(n-1) cos) / a (infinite when a = 0).
pub fn ring_pole_kappa1(n: usize, theta0: f64) -> f64 {
    let nf = n as f64;
    let (s, c) = theta0.sin_cos();
    (nf - 1.0) * c * (nf * s * s + 2.0 * (nf - 1.0) * c) / ring_pole_a(n, theta0)
}

/// Ring plus North polar vortex of strength kappa.
pub fn criterion_ring_pole(n: usize, theta0: f64, kappa: f64) -> Verdict {
    let nf = n as f64;
    let (s, c) = theta0.sin_cos();
    if n == 2 {
        let q1 = 1.0 + 2.0 * c;
        let q2 = (1.0 + c).powi(2) * kappa + c * (2.0 + 3.0 * c);
        let sq = sign(q1, 3.0) * sign(q2, (1.0 + c).powi(2) * kappa.abs() + (c * (2.0 + 3.0 * c)).abs());
        return match sq {
            0 => Verdict::Degenerate,
            -1 => Verdict::LyapunovStable,
            _ => Verdict::LinearlyUnstable,
        };
    }
    let a = ring_pole_a(n, theta0);
    let t = nf * s * s + 4.0 * (nf - 1.0) * c;
    let r = sign(t * t - 8.0 * a * kappa, t * t + (8.0 * a * kappa).abs());
    let k0 = if n >= 4 { Some(ring_pole_kappa0(n, theta0)) } else { None };
    let above = k0.map(|k0| sign(kappa - k0, kappa.abs() + k0.abs()));
    if r < 0 || above == Some(-1) {
        return Verdict::LinearlyUnstable;
    }
    if r == 0 || above == Some(0) {
        return Verdict::Degenerate;
    }
    let a1 = (nf - 1.0) * c * (nf * s * s + 2.0 * (nf - 1.0) * c);
    let f2 = sign(kappa + nf * c, kappa.abs() + nf * c.abs());
    let f3 = sign(a * kappa - a1, (a * kappa).abs() + a1.abs());
    let p = sign(kappa, 0.0) * f2 * f3;
    match p {
        0 => Verdict::Degenerate,
        -1 => Verdict::LyapunovStable,
        _ => Verdict::Elliptic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum L2Verdict {
    UnstableByL2Modes,
    L2ModesStable,
    Boundary,
}

/// Ring with both polar vortices: verdict on the l >= 2 modes only (l = 1 needs the numeric block).
pub fn criterion_ring_two_poles(n: usize, theta0: f64, kappa_n: f64, kappa_s: f64) -> Result<L2Verdict> {
    if n < 4 {
        return Err(VortexError::Domain(format!("no l >= 2 modes for n={n}")));
    }
    let c = theta0.cos();
    let lhs = kappa_n * (1.0 + c).powi(2) + kappa_s * (1.0 - c).powi(2);
    let rhs = c_n(n) - (n as f64 - 1.0) * (1.0 + c * c);
    let scale = (kappa_n * (1.0 + c).powi(2)).abs() + (kappa_s * (1.0 - c).powi(2)).abs() + rhs.abs();
    Ok(match sign(lhs - rhs, scale) {
        0 => L2Verdict::Boundary,
        -1 => L2Verdict::UnstableByL2Modes,
        _ => L2Verdict::L2ModesStable,
    })
}

/// Quantities of the 4x4 l = 1 block of a ring with a North polar vortex, in the
/// slice basis (e1, e2, e3, e4) whose Hessian is diag(A, A) with A = [[q11, q12], [q12, q22]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingPoleQuadratics {
    pub q11: f64,
    pub q12: f64,
    pub q22: f64,
    pub nu: f64,
    pub sigma: f64,
    /// omega(e1, e3)
    pub alpha: f64,
    /// omega(e2, e4)
    pub beta: f64,
    /// omega(e1, e4) = omega(e2, e3)
    pub gamma: f64,
}

pub fn ring_pole_quadratics(n: usize, theta0: f64, kappa: f64) -> Result<RingPoleQuadratics> {
    if n < 3 {
        return Err(VortexError::Domain("the 4x4 l = 1 block needs n >= 3".into()));
    }
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(VortexError::Domain("kappa must be finite and nonzero".into()));
    }
    let nf = n as f64;
    let (s, c) = theta0.sin_cos();
    let xi = crate::families::ring_pole_xi(n, theta0, kappa);
    let cos2 = (2.0 * theta0).cos();
    let k = nf * cos2 / (2.0 * kappa);
    let lth = nf / (2.0 * s * s) * ((nf - 1.0) * c * c + kappa * (1.0 + c).powi(2));
    let lph = nf * (nf - 1.0) / 2.0;
    let q22 = s * s * lth + c * c * lph;
    let q12 = c * s * (lth + lph) + k * kappa * s * nf * (1.0 + c) / (2.0 * (1.0 - c));
    let q11 = c * c * lth + s * s * lph + k * k * kappa * (nf / 2.0 + xi) + k * kappa * nf * (c + s * s) / (1.0 - c);
    let alpha = nf * c * s * s - nf * nf * cos2 * cos2 / (4.0 * kappa);
    let beta = nf * c * s * s;
    let gamma = nf * s / 2.0;
    let a = beta * q11 - gamma * q12;
    let b = beta * q12 - gamma * q22;
    let cc = alpha * q12 - gamma * q11;
    let d = alpha * q22 - gamma * q12;
    let nu = a.powi(4) + 4.0 * a * a * b * cc - 2.0 * a * a * d * d + 4.0 * b * cc * d * d + d.powi(4) + 8.0 * a * d * b * cc;
    let sigma = -a * a - 2.0 * b * cc - d * d;
    Ok(RingPoleQuadratics { q11, q12, q22, nu, sigma, alpha, beta, gamma })
}

impl RingPoleQuadratics {
    /// q11 q22 - q12^2 = -n^2 cos^2(2 theta0) / (8 kappa^2 sin^2 theta0) * a kappa (kappa + n cos)(kappa - kappa1).
    pub fn determinant_closed_form(n: usize, theta0: f64, kappa: f64) -> f64 {
        let nf = n as f64;
        let (s, c) = theta0.sin_cos();
        let cos2 = (2.0 * theta0).cos();
        let p = kappa * (kappa + nf * c) * (ring_pole_a(n, theta0) * kappa - (nf - 1.0) * c * (nf * s * s + 2.0 * (nf - 1.0) * c));
        -nf * nf * cos2 * cos2 / (8.0 * kappa * kappa * s * s) * p
    }

    /// q22 = n (1 + cos)^2 / 2 * (kappa - kappa2), kappa2 = -2(n-1) cos^2 / (1 + cos)^2.
    pub fn q22_closed_form(n: usize, theta0: f64, kappa: f64) -> f64 {
        let nf = n as f64;
        let c = theta0.cos();
        let k2 = -2.0 * (nf - 1.0) * c * c / (1.0 + c).powi(2);
        nf * (1.0 + c).powi(2) / 2.0 * (kappa - k2)
    }
}
