//! The five symmetric families of relative equilibria.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chart::{ChartSlot, SphericalChart};
use crate::error::{Result, VortexError};
use crate::system::{momentum_map, Momentum, VortexState, COINCIDENCE_THRESHOLD};

/// Both two-ring expressions below this (relative) tolerance means any kappa works.
pub const KAPPA_DEGENERACY_TOL: f64 = 1e-8;
/// Residual below which the solved kappa is not determined by angles given to about four decimals:
/// both expressions vanish linearly at a degenerate point, and kappa depends on the direction of approach.
pub const KAPPA_NEAR_DEGENERACY: f64 = 1e-4;
/// |mu_z| below this counts as zero momentum.
pub const ZERO_MOMENTUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    Ring,
    RingPole,
    RingTwoPoles,
    TwoAlignedRings,
    TwoStaggeredRings,
}

impl FamilyKind {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Ring => "ring",
            FamilyKind::RingPole => "ring-pole",
            FamilyKind::RingTwoPoles => "ring-2poles",
            FamilyKind::TwoAlignedRings => "two-aligned-rings",
            FamilyKind::TwoStaggeredRings => "two-staggered-rings",
        }
    }

    pub fn is_two_ring(&self) -> bool {
        matches!(self, FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings)
    }
}

impl FromStr for FamilyKind {
    type Err = VortexError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ring" => FamilyKind::Ring,
            "ring-pole" => FamilyKind::RingPole,
            "ring-2poles" => FamilyKind::RingTwoPoles,
            "two-aligned-rings" => FamilyKind::TwoAlignedRings,
            "two-staggered-rings" => FamilyKind::TwoStaggeredRings,
            other => return Err(VortexError::Domain(format!("unknown family '{other}'"))),
        })
    }
}

/// Parameters of one family member.
///
/// `kappa` is the polar vorticity for `RingPole` and the second-ring vorticity
/// for the two-ring families (optional there: it is normally solved for).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub n: usize,
    pub theta0: f64,
    pub theta1: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_n: Option<f64>,
    pub kappa_s: Option<f64>,
}

impl FamilySpec {
    fn base(kind: FamilyKind, n: usize, theta0: f64) -> Self {
        Self { kind, n, theta0, theta1: None, kappa: None, kappa_n: None, kappa_s: None }
    }

    pub fn ring(n: usize, theta0: f64) -> Self {
        Self::base(FamilyKind::Ring, n, theta0)
    }

    pub fn ring_pole(n: usize, theta0: f64, kappa: f64) -> Self {
        Self { kappa: Some(kappa), ..Self::base(FamilyKind::RingPole, n, theta0) }
    }

    pub fn ring_two_poles(n: usize, theta0: f64, kappa_n: f64, kappa_s: f64) -> Self {
        Self { kappa_n: Some(kappa_n), kappa_s: Some(kappa_s), ..Self::base(FamilyKind::RingTwoPoles, n, theta0) }
    }

    pub fn two_rings(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Self {
        let kind = if staggered { FamilyKind::TwoStaggeredRings } else { FamilyKind::TwoAlignedRings };
        Self { theta1: Some(theta1), ..Self::base(kind, n, theta0) }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn staggered(&self) -> bool {
        self.kind == FamilyKind::TwoStaggeredRings
    }

    pub fn validate(&self) -> Result<()> {
        let dom = |m: String| Err(VortexError::Domain(m));
        if self.n < 2 {
            return dom(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.theta0 > 0.0 && self.theta0 < PI) {
            return dom(format!("theta0 must lie in (0, pi), got {}", self.theta0));
        }
        let nonzero = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(k) if k.is_finite() && k != 0.0 => Ok(()),
                Some(k) => Err(VortexError::Domain(format!("{name} must be finite and nonzero, got {k}"))),
                None => Err(VortexError::Domain(format!("{name} is required for {}", self.kind.name()))),
            }
        };
        let absent = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(VortexError::Domain(format!("{name} does not apply to {}", self.kind.name())))
            } else {
                Ok(())
            }
        };
        match self.kind {
            FamilyKind::Ring => {
                absent("theta1", self.theta1.is_some())?;
                absent("kappa", self.kappa.is_some())?;
                absent("kappaN", self.kappa_n.is_some())?;
                absent("kappaS", self.kappa_s.is_some())?;
            }
            FamilyKind::RingPole => {
                nonzero("kappa", self.kappa)?;
                absent("theta1", self.theta1.is_some())?;
                absent("kappaN", self.kappa_n.is_some())?;
                absent("kappaS", self.kappa_s.is_some())?;
            }
            FamilyKind::RingTwoPoles => {
                nonzero("kappaN", self.kappa_n)?;
                nonzero("kappaS", self.kappa_s)?;
                absent("theta1", self.theta1.is_some())?;
                absent("kappa", self.kappa.is_some())?;
                if self.theta0 > PI / 2.0 {
                    return dom("the ring must lie in the Northern hemisphere (theta0 <= pi/2)".into());
                }
            }
            FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => {
                absent("kappaN", self.kappa_n.is_some())?;
                absent("kappaS", self.kappa_s.is_some())?;
                if self.theta0 > PI / 2.0 {
                    return dom("the first ring must lie in the Northern hemisphere (theta0 <= pi/2)".into());
                }
                match self.theta1 {
                    Some(t) if t > 0.0 && t < PI => {}
                    Some(t) => return dom(format!("theta1 must lie in (0, pi), got {t}")),
                    None => return dom("theta1 is required for two-ring families".into()),
                }
                if self.kappa.is_some() {
                    nonzero("kappa", self.kappa)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for FamilySpec {
    /// Canonical `key=value` lines, the same keys the CLI config file uses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.kind {
            FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => "two-rings",
            k => k.name(),
        };
        writeln!(f, "family={family}")?;
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "theta0={}", self.theta0)?;
        if let Some(t) = self.theta1 {
            writeln!(f, "theta1={t}")?;
        }
        if let Some(k) = self.kappa {
            writeln!(f, "kappa={k}")?;
        }
        if let Some(k) = self.kappa_n {
            writeln!(f, "kappaN={k}")?;
        }
        if let Some(k) = self.kappa_s {
            writeln!(f, "kappaS={k}")?;
        }
        match self.kind {
            FamilyKind::TwoAlignedRings => writeln!(f, "aligned=true"),
            FamilyKind::TwoStaggeredRings => writeln!(f, "staggered=true"),
            _ => Ok(()),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = VortexError;

    /// Parses `key=value` pairs separated by newlines or whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let mut family = None;
        let mut n = None;
        let mut theta0 = None;
        let mut spec = FamilySpec::ring(0, 0.0);
        let mut staggered = None;
        let num = |k: &str, v: &str| {
            v.parse::<f64>().map_err(|_| VortexError::Domain(format!("{k}: '{v}' is not a number")))
        };
        let flag = |k: &str, v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(VortexError::Domain(format!("{k}: expected true or false, got '{v}'"))),
        };
        for tok in s.split_whitespace().filter(|t| !t.starts_with('#')) {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| VortexError::Domain(format!("expected key=value, got '{tok}'")))?;
            match k {
                "family" => family = Some(v.to_string()),
                "n" => n = Some(v.parse::<usize>().map_err(|_| VortexError::Domain(format!("n: '{v}'")))?),
                "theta0" => theta0 = Some(num(k, v)?),
                "theta1" => spec.theta1 = Some(num(k, v)?),
                "kappa" => spec.kappa = Some(num(k, v)?),
                "kappaN" => spec.kappa_n = Some(num(k, v)?),
                "kappaS" => spec.kappa_s = Some(num(k, v)?),
                "aligned" => staggered = Some(!flag(k, v)?),
                "staggered" => staggered = Some(flag(k, v)?),
                other => return Err(VortexError::Domain(format!("unknown key '{other}'"))),
            }
        }
        let family = family.ok_or_else(|| VortexError::Domain("family is required".into()))?;
        spec.kind = match family.as_str() {
            "two-rings" => {
                if staggered.unwrap_or(false) {
                    FamilyKind::TwoStaggeredRings
                } else {
                    FamilyKind::TwoAlignedRings
                }
            }
            other => {
                if staggered.is_some() {
                    return Err(VortexError::Domain("aligned/staggered only apply to two-rings".into()));
                }
                other.parse()?
            }
        };
        spec.n = n.ok_or_else(|| VortexError::Domain("n is required".into()))?;
        spec.theta0 = theta0.ok_or_else(|| VortexError::Domain("theta0 is required".into()))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGeometry {
    pub theta: f64,
    /// Longitude of the ring's first vortex: 0 for aligned rings, pi/n for staggered.
    pub phase: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleGeometry {
    pub north: bool,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeEquilibrium {
    spec: FamilySpec,
    state: VortexState,
    chart: SphericalChart,
    xi: f64,
    mu: Momentum,
    degenerate: bool,
    rings: Vec<RingGeometry>,
    poles: Vec<PoleGeometry>,
}

impl RelativeEquilibrium {
    fn assemble(
        spec: FamilySpec,
        rings: Vec<RingGeometry>,
        poles: Vec<PoleGeometry>,
        xi: f64,
        degenerate: bool,
    ) -> Result<Self> {
        let n = spec.n;
        let mut slots = Vec::new();
        let mut kappas = Vec::new();
        for r in &rings {
            for s in 0..n {
                slots.push(ChartSlot::Ring { theta: r.theta, phi: 2.0 * PI * s as f64 / n as f64 + r.phase });
                kappas.push(r.kappa);
            }
        }
        for p in &poles {
            slots.push(ChartSlot::Polar { x: 0.0, y: 0.0, north: p.north });
            kappas.push(p.kappa);
        }
        let chart = SphericalChart::new(slots, kappas)?;
        let state = chart.to_state()?;
        let mu = momentum_map(&state);
        if !xi.is_finite() {
            return Err(VortexError::Numeric("angular velocity is not finite".into()));
        }
        Ok(Self { spec, state, chart, xi, mu, degenerate, rings, poles })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }
    pub fn state(&self) -> &VortexState {
        &self.state
    }
    pub fn chart(&self) -> &SphericalChart {
        &self.chart
    }
    /// Angular velocity of the rigid rotation about z.
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn mu(&self) -> Momentum {
        self.mu
    }
    /// True at two-ring points where every kappa gives a relative equilibrium.
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
    pub fn n(&self) -> usize {
        self.spec.n
    }
    pub fn rings(&self) -> &[RingGeometry] {
        &self.rings
    }
    pub fn poles(&self) -> &[PoleGeometry] {
        &self.poles
    }
    /// Vortex index of vortex `s` on ring `j`.
    pub fn ring_slot(&self, j: usize, s: usize) -> usize {
        j * self.spec.n + s
    }
    pub fn pole_slot(&self, p: usize) -> usize {
        self.rings.len() * self.spec.n + p
    }
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
    /// The vorticity ratio shown in reports: polar strength or second-ring strength.
    pub fn kappa(&self) -> Option<f64> {
        match self.spec.kind {
            FamilyKind::RingPole => self.spec.kappa,
            FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => Some(self.rings[1].kappa),
            _ => None,
        }
    }
}

pub fn ring_xi(n: usize, theta0: f64) -> f64 {
    (n as f64 - 1.0) * theta0.cos() / theta0.sin().powi(2)
}

pub fn ring_pole_xi(n: usize, theta0: f64, kappa: f64) -> f64 {
    ring_two_poles_xi(n, theta0, kappa, 0.0)
}

pub fn ring_two_poles_xi(n: usize, theta0: f64, kappa_n: f64, kappa_s: f64) -> f64 {
    let c = theta0.cos();
    ((n as f64 - 1.0) * c + kappa_n * (1.0 + c) - kappa_s * (1.0 - c)) / theta0.sin().powi(2)
}

pub fn build_ring(n: usize, theta0: f64) -> Result<RelativeEquilibrium> {
    let spec = FamilySpec::ring(n, theta0);
    spec.validate()?;
    let ring = RingGeometry { theta: theta0, phase: 0.0, kappa: 1.0 };
    RelativeEquilibrium::assemble(spec, vec![ring], vec![], ring_xi(n, theta0), false)
}

pub fn build_ring_pole(n: usize, theta0: f64, kappa: f64) -> Result<RelativeEquilibrium> {
    let spec = FamilySpec::ring_pole(n, theta0, kappa);
    spec.validate()?;
    let ring = RingGeometry { theta: theta0, phase: 0.0, kappa: 1.0 };
    let pole = PoleGeometry { north: true, kappa };
    RelativeEquilibrium::assemble(spec, vec![ring], vec![pole], ring_pole_xi(n, theta0, kappa), false)
}

pub fn build_ring_two_poles(n: usize, theta0: f64, kappa_n: f64, kappa_s: f64) -> Result<RelativeEquilibrium> {
    let spec = FamilySpec::ring_two_poles(n, theta0, kappa_n, kappa_s);
    spec.validate()?;
    let ring = RingGeometry { theta: theta0, phase: 0.0, kappa: 1.0 };
    let poles = vec![PoleGeometry { north: true, kappa: kappa_n }, PoleGeometry { north: false, kappa: kappa_s }];
    let xi = ring_two_poles_xi(n, theta0, kappa_n, kappa_s);
    RelativeEquilibrium::assemble(spec, vec![ring], poles, xi, false)
}

/// Derivatives of the split H = H11 + kappa H12 + kappa^2 H22 restricted to the
/// symmetric two-ring configurations, in x = cos(theta0), y = cos(theta1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedDerivatives {
    pub n: usize,
    pub dx_h11: f64,
    pub dy_h22: f64,
    pub dx_h12: f64,
    pub dy_h12: f64,
}

impl RestrictedDerivatives {
    pub fn new(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Result<Self> {
        let nf = n as f64;
        let (sx, x) = theta0.sin_cos();
        let (sy, y) = theta1.sin_cos();
        let phase = if staggered { PI / nf } else { 0.0 };
        let (mut dx, mut dy) = (0.0, 0.0);
        for r in 0..n {
            let g = 2.0 * PI * r as f64 / nf + phase;
            let (sg, cg) = g.sin_cos();
            // 1 - p.q via the chord, accurate when the rings nearly touch
            let d2 = (sx - sy * cg).powi(2) + (sy * sg).powi(2) + (x - y).powi(2);
            if !(d2.sqrt() > COINCIDENCE_THRESHOLD) {
                return Err(VortexError::CoincidentVortices { i: 0, j: n + r, distance: d2.sqrt() });
            }
            let a = 0.5 * d2;
            dx += (-y + x / sx * sy * cg) / a;
            dy += (-x + y / sy * sx * cg) / a;
        }
        Ok(Self {
            n,
            dx_h11: nf * (nf - 1.0) * x / (sx * sx),
            dy_h22: nf * (nf - 1.0) * y / (sy * sy),
            dx_h12: -nf * dx,
            dy_h12: -nf * dy,
        })
    }

    /// Angular velocity for a given kappa (valid at any kappa when degenerate).
    pub fn xi(&self, kappa: f64) -> f64 {
        (self.dx_h11 + kappa * self.dx_h12) / self.n as f64
    }

    fn numerator(&self) -> f64 {
        self.dx_h11 - self.dy_h12
    }

    fn denominator(&self) -> f64 {
        self.dy_h22 - self.dx_h12
    }

    fn scale(&self) -> f64 {
        self.dx_h11.abs().max(self.dy_h12.abs()).max(self.dy_h22.abs()).max(self.dx_h12.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaSolution {
    Unique { kappa: f64, xi: f64 },
    /// Any kappa works; the angular velocity then follows from [`RestrictedDerivatives::xi`].
    Degenerate(RestrictedDerivatives),
    None,
}

pub fn solve_two_ring_kappa(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Result<KappaSolution> {
    FamilySpec::two_rings(n, theta0, theta1, staggered).validate()?;
    let d = RestrictedDerivatives::new(n, theta0, theta1, staggered)?;
    let scale = d.scale();
    let num = d.numerator();
    let den = d.denominator();
    let small = |v: f64| v.abs() <= KAPPA_DEGENERACY_TOL * scale;
    if small(den) {
        return Ok(if small(num) { KappaSolution::Degenerate(d) } else { KappaSolution::None });
    }
    let kappa = num / den;
    Ok(KappaSolution::Unique { kappa, xi: d.xi(kappa) })
}

/// max(|numerator|, |denominator|) of the kappa equation relative to its terms; zero at a degenerate point.
pub fn two_ring_kappa_residual(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Result<f64> {
    FamilySpec::two_rings(n, theta0, theta1, staggered).validate()?;
    let d = RestrictedDerivatives::new(n, theta0, theta1, staggered)?;
    Ok(d.numerator().abs().max(d.denominator().abs()) / d.scale())
}

fn two_ring_geometry(n: usize, theta0: f64, theta1: f64, staggered: bool, kappa: f64) -> Vec<RingGeometry> {
    let phase = if staggered { PI / n as f64 } else { 0.0 };
    vec![
        RingGeometry { theta: theta0, phase: 0.0, kappa: 1.0 },
        RingGeometry { theta: theta1, phase, kappa },
    ]
}

pub fn build_two_rings(n: usize, theta0: f64, theta1: f64, staggered: bool) -> Result<RelativeEquilibrium> {
    match solve_two_ring_kappa(n, theta0, theta1, staggered)? {
        KappaSolution::Unique { kappa, xi } => {
            let spec = FamilySpec::two_rings(n, theta0, theta1, staggered);
            let rings = two_ring_geometry(n, theta0, theta1, staggered, kappa);
            RelativeEquilibrium::assemble(spec, rings, vec![], xi, false)
        }
        KappaSolution::Degenerate(_) => Err(VortexError::DegenerateKappa),
        KappaSolution::None => Err(VortexError::NoKappa),
    }
}

/// Two-ring equilibrium with a prescribed kappa; it must equal the solved value
/// unless the point is degenerate.
pub fn build_two_rings_with_kappa(
    n: usize,
    theta0: f64,
    theta1: f64,
    staggered: bool,
    kappa: f64,
) -> Result<RelativeEquilibrium> {
    let spec = FamilySpec::two_rings(n, theta0, theta1, staggered).with_kappa(kappa);
    spec.validate()?;
    let (xi, degenerate) = match solve_two_ring_kappa(n, theta0, theta1, staggered)? {
        KappaSolution::Unique { kappa: k, xi } => {
            if (k - kappa).abs() > 1e-8 * k.abs().max(1.0) {
                return Err(VortexError::Domain(format!(
                    "kappa={kappa} does not give a relative equilibrium here; the only admissible value is {k}"
                )));
            }
            (xi, false)
        }
        KappaSolution::Degenerate(d) => (d.xi(kappa), true),
        KappaSolution::None => return Err(VortexError::NoKappa),
    };
    let rings = two_ring_geometry(n, theta0, theta1, staggered, kappa);
    RelativeEquilibrium::assemble(spec, rings, vec![], xi, degenerate)
}

pub fn build(spec: &FamilySpec) -> Result<RelativeEquilibrium> {
    spec.validate()?;
    let (n, t0) = (spec.n, spec.theta0);
    match spec.kind {
        FamilyKind::Ring => build_ring(n, t0),
        FamilyKind::RingPole => build_ring_pole(n, t0, spec.kappa.unwrap_or_default()),
        FamilyKind::RingTwoPoles => {
            build_ring_two_poles(n, t0, spec.kappa_n.unwrap_or_default(), spec.kappa_s.unwrap_or_default())
        }
        FamilyKind::TwoAlignedRings | FamilyKind::TwoStaggeredRings => {
            let t1 = spec.theta1.unwrap_or_default();
            match spec.kappa {
                Some(k) => build_two_rings_with_kappa(n, t0, t1, spec.staggered(), k),
                None => build_two_rings(n, t0, t1, spec.staggered()),
            }
        }
    }
}

pub fn momentum_is_zero(re: &RelativeEquilibrium) -> bool {
    re.mu.z().abs() < ZERO_MOMENTUM_TOL
}
