//! Parameter sweeps over the families, frontier extraction and figure output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{criterion_ring_two_poles, L2Verdict};
use crate::error::{Result, VortexError};
use crate::families::{build_ring_pole, build_ring_two_poles, build_two_rings_with_kappa, solve_two_ring_kappa, FamilyKind, KappaSolution};
use crate::stability::{classify_with, StabilityReport, Tolerances, Verdict};

/// Cell label: a verdict, or X for cells with no classifiable equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CellCode {
    S,
    E,
    U,
    D,
    X,
}

impl From<Verdict> for CellCode {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::LyapunovStable => CellCode::S,
            Verdict::Elliptic => CellCode::E,
            Verdict::LinearlyUnstable => CellCode::U,
            Verdict::Degenerate => CellCode::D,
        }
    }
}

impl CellCode {
    pub fn as_char(&self) -> char {
        match self {
            CellCode::S => 'S',
            CellCode::E => 'E',
            CellCode::U => 'U',
            CellCode::D => 'D',
            CellCode::X => 'X',
        }
    }

    fn color(&self) -> &'static str {
        match self {
            CellCode::S => "#2ca02c",
            CellCode::E => "#f2d43d",
            CellCode::U => "#d62728",
            CellCode::D => "#8c8c8c",
            CellCode::X => "#ffffff",
        }
    }
}

/// Inclusive, evenly spaced parameter range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(VortexError::Domain(format!("axis {name} needs at least one point")));
        }
        if !(min.is_finite() && max.is_finite()) || max < min || (resolution > 1 && max == min) {
            return Err(VortexError::Domain(format!("axis {name} has an invalid range [{min}, {max}]")));
        }
        Ok(Self { name: name.to_string(), min, max, resolution })
    }

    /// Value at a (possibly fractional, in halves) index. Refining r -> 2r - 1 reproduces
    /// the coarse points bit for bit.
    pub fn value(&self, i: usize) -> f64 {
        if self.resolution == 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * i as f64 / (self.resolution - 1) as f64
    }

    fn half_value(&self, k: usize) -> f64 {
        if self.resolution == 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * k as f64 / (2 * (self.resolution - 1)) as f64
    }

    fn step(&self) -> f64 {
        if self.resolution == 1 { 1.0 } else { (self.max - self.min) / (self.resolution - 1) as f64 }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.resolution).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub param1: f64,
    pub param2: f64,
    pub verdict: CellCode,
    /// None for X cells.
    pub margin: Option<f64>,
    pub kappa: Option<f64>,
    pub xi: Option<f64>,
    pub mu_z: Option<f64>,
    pub analytic: Option<Verdict>,
    /// Closed-form verdict on the l >= 2 modes (ring with two poles only).
    pub l2: Option<L2Verdict>,
}

impl Cell {
    fn invalid(p1: f64, p2: f64) -> Self {
        Self { param1: p1, param2: p2, verdict: CellCode::X, margin: None, kappa: None, xi: None, mu_z: None, analytic: None, l2: None }
    }

    fn from_report(p1: f64, p2: f64, r: &StabilityReport) -> Self {
        Self {
            param1: p1,
            param2: p2,
            verdict: r.verdict.into(),
            margin: Some(r.margin),
            kappa: r.kappa,
            xi: Some(r.xi),
            mu_z: Some(r.mu_z),
            analytic: r.analytic_verdict,
            l2: None,
        }
    }

    /// Inside the band around a decision boundary excluded from agreement statistics.
    pub fn in_boundary_band(&self, tol: &Tolerances) -> bool {
        self.margin.is_none_or(|m| m < 10.0 * tol.eig_rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub family: FamilyKind,
    pub n: usize,
    pub axes: [Axis; 2],
    /// Fixed parameters of the sweep (name, value).
    pub fixed: Vec<(String, f64)>,
    /// Row-major: param1 outer, param2 inner.
    pub cells: Vec<Cell>,
    pub tolerances: Tolerances,
    pub version: String,
}

fn sweep<F>(axes: &[Axis; 2], f: F) -> Vec<Cell>
where
    F: Fn(f64, f64) -> Cell + Sync,
{
    let (r1, r2) = (axes[0].resolution, axes[1].resolution);
    (0..r1 * r2).into_par_iter().map(|idx| f(axes[0].value(idx / r2), axes[1].value(idx % r2))).collect()
}

fn result(family: FamilyKind, n: usize, axes: [Axis; 2], fixed: Vec<(String, f64)>, cells: Vec<Cell>, tol: &Tolerances) -> ScanResult {
    ScanResult { family, n, axes, fixed, cells, tolerances: *tol, version: env!("CARGO_PKG_VERSION").to_string() }
}

/// (theta0, kappa) plane of a ring with a North polar vortex.
pub fn scan_ring_pole(n: usize, theta0: (f64, f64), kappa: (f64, f64), resolution: usize, tol: &Tolerances) -> Result<ScanResult> {
    let axes = [Axis::new("theta0", theta0.0, theta0.1, resolution)?, Axis::new("kappa", kappa.0, kappa.1, resolution)?];
    let cells = sweep(&axes, |t, k| match build_ring_pole(n, t, k).and_then(|re| classify_with(&re, tol)) {
        Ok(r) => Cell::from_report(t, k, &r),
        Err(_) => Cell::invalid(t, k),
    });
    Ok(result(FamilyKind::RingPole, n, axes, vec![], cells, tol))
}

/// (theta0, theta1) plane of two rings, with the vorticity ratio solved per cell.
pub fn scan_two_rings(n: usize, theta0: (f64, f64), theta1: (f64, f64), staggered: bool, resolution: usize, tol: &Tolerances) -> Result<ScanResult> {
    let axes = [Axis::new("theta0", theta0.0, theta0.1, resolution)?, Axis::new("theta1", theta1.0, theta1.1, resolution)?];
    let kind = if staggered { FamilyKind::TwoStaggeredRings } else { FamilyKind::TwoAlignedRings };
    let cells = sweep(&axes, |t0, t1| {
        let kappa = match solve_two_ring_kappa(n, t0, t1, staggered) {
            Ok(KappaSolution::Unique { kappa, .. }) => kappa,
            _ => return Cell::invalid(t0, t1),
        };
        match build_two_rings_with_kappa(n, t0, t1, staggered, kappa).and_then(|re| classify_with(&re, tol)) {
            Ok(r) => Cell::from_report(t0, t1, &r),
            Err(_) => {
                let mut c = Cell::invalid(t0, t1);
                c.kappa = Some(kappa);
                c
            }
        }
    });
    Ok(result(kind, n, axes, vec![], cells, tol))
}

/// (theta0, kappaN) plane of a ring with both polar vortices at fixed kappaS.
pub fn scan_ring_two_poles(n: usize, theta0: (f64, f64), kappa_n: (f64, f64), kappa_s: f64, resolution: usize, tol: &Tolerances) -> Result<ScanResult> {
    let axes = [Axis::new("theta0", theta0.0, theta0.1, resolution)?, Axis::new("kappaN", kappa_n.0, kappa_n.1, resolution)?];
    let cells = sweep(&axes, |t, kn| {
        let mut c = match build_ring_two_poles(n, t, kn, kappa_s).and_then(|re| classify_with(&re, tol)) {
            Ok(r) => Cell::from_report(t, kn, &r),
            Err(_) => Cell::invalid(t, kn),
        };
        c.l2 = criterion_ring_two_poles(n, t, kn, kappa_s).ok();
        c
    });
    Ok(result(FamilyKind::RingTwoPoles, n, axes, vec![("kappaS".into(), kappa_s)], cells, tol))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.axes[1].resolution + j]
    }

    pub fn count(&self, code: CellCode) -> usize {
        self.cells.iter().filter(|c| c.verdict == code).count()
    }

    /// `# key=value` lines describing the sweep.
    pub fn header_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("family={}", self.family.name()),
            format!("n={}", self.n),
        ];
        for a in &self.axes {
            v.push(format!("{}={},{},{}", a.name, a.min, a.max, a.resolution));
        }
        for (k, x) in &self.fixed {
            v.push(format!("{k}={x}"));
        }
        v.push(format!("tol_eig={}", self.tolerances.eig_rel));
        v.push(format!("version={}", self.version));
        v
    }

    /// CSV with `#` comment lines (the given extra lines first), then
    /// `param1,param2,verdict,margin,kappa,xi,mu_z` and one row per cell.
    pub fn to_csv(&self, extra_header: &[String]) -> String {
        let mut s = String::new();
        for l in extra_header.iter().chain(self.header_lines().iter()) {
            let _ = writeln!(s, "# {l}");
        }
        s.push_str("param1,param2,verdict,margin,kappa,xi,mu_z\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", c.param1, c.param2, c.verdict.as_char(), opt(c.margin), opt(c.kappa), opt(c.xi), opt(c.mu_z));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serialization cannot fail")
    }

    /// One rect per cell (param1 horizontal, param2 vertical, increasing upward) and the
    /// frontier polylines.
    pub fn to_svg(&self, frontier: &[Polyline]) -> String {
        let (r1, r2) = (self.axes[0].resolution, self.axes[1].resolution);
        let cell = (600.0 / r1.max(r2) as f64).max(1.0);
        let (w, h) = (cell * r1 as f64, cell * r2 as f64);
        let (ml, mb, mt) = (70.0, 50.0, 20.0);
        let px = |p1: f64| ml + (p1 - self.axes[0].min) / self.axes[0].step() * cell + cell / 2.0;
        let py = |p2: f64| mt + h - (p2 - self.axes[1].min) / self.axes[1].step() * cell - cell / 2.0;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#, w + ml + 20.0, h + mb + mt, w + ml + 20.0, h + mb + mt);
        let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
        for i in 0..r1 {
            for j in 0..r2 {
                let c = self.cell(i, j);
                let x = ml + i as f64 * cell;
                let y = mt + h - (j + 1) as f64 * cell;
                let _ = writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"/>"#, c.verdict.color());
            }
        }
        s.push_str("</g>\n");
        for line in frontier {
            let pts: Vec<String> = line.points.iter().map(|(a, b)| format!("{:.3},{:.3}", px(*a), py(*b))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{w:.3}" height="{h:.3}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{} [{}, {}]</text>"#, ml + w / 2.0, mt + h + 35.0, self.axes[0].name, self.axes[0].min, self.axes[0].max);
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.1})">{} [{}, {}]</text>"#,
            mt + h / 2.0,
            mt + h / 2.0,
            self.axes[1].name,
            self.axes[1].min,
            self.axes[1].max
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Frontier polyline in parameter coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
}

type Key = (usize, usize);

/// Marching squares over the verdict labels, with crossings at edge midpoints.
pub fn extract_frontier(result: &ScanResult) -> Vec<Polyline> {
    let (r1, r2) = (result.axes[0].resolution, result.axes[1].resolution);
    let mut segments: Vec<(Key, Key)> = Vec::new();
    if r1 < 2 || r2 < 2 {
        return vec![];
    }
    let code = |i: usize, j: usize| result.cell(i, j).verdict;
    for i in 0..r1 - 1 {
        for j in 0..r2 - 1 {
            // corners in cycle order and the edge midpoints between consecutive corners
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut crossings = Vec::new();
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                if code(a.0, a.1) != code(b.0, b.1) {
                    crossings.push((a.0 + b.0, a.1 + b.1));
                }
            }
            match crossings.len() {
                2 => segments.push((crossings[0], crossings[1])),
                3 | 4 => {
                    let center = (2 * i + 1, 2 * j + 1);
                    segments.extend(crossings.iter().map(|&c| (c, center)));
                }
                _ => {}
            }
        }
    }
    join_segments(&segments)
        .into_iter()
        .map(|keys| Polyline { points: keys.iter().map(|&(a, b)| (result.axes[0].half_value(a), result.axes[1].half_value(b))).collect() })
        .collect()
}

fn join_segments(segments: &[(Key, Key)]) -> Vec<Vec<Key>> {
    let mut adj: BTreeMap<Key, Vec<Key>> = BTreeMap::new();
    for &(a, b) in segments {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut used: BTreeSet<(Key, Key)> = BTreeSet::new();
    let edge = |a: Key, b: Key| if a < b { (a, b) } else { (b, a) };
    let mut lines = Vec::new();
    let walk = |start: Key, used: &mut BTreeSet<(Key, Key)>| -> Option<Vec<Key>> {
        let mut line = vec![start];
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|&nb| !used.contains(&edge(cur, nb)));
            match next {
                Some(nb) => {
                    used.insert(edge(cur, nb));
                    line.push(nb);
                    cur = nb;
                }
                None => break,
            }
        }
        (line.len() > 1).then_some(line)
    };
    // open chains start at nodes of odd degree or junctions
    let starts: Vec<Key> = adj.iter().filter(|(_, v)| v.len() != 2).map(|(k, _)| *k).collect();
    for s in starts {
        while let Some(l) = walk(s, &mut used) {
            lines.push(l);
        }
    }
    let rest: Vec<Key> = adj.keys().copied().collect();
    for s in rest {
        while let Some(l) = walk(s, &mut used) {
            lines.push(l);
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(r: usize, f: impl Fn(f64, f64) -> CellCode) -> ScanResult {
        let axes = [Axis::new("a", 0.0, 1.0, r).unwrap(), Axis::new("b", 0.0, 1.0, r).unwrap()];
        let cells = (0..r * r)
            .map(|idx| {
                let (p1, p2) = (axes[0].value(idx / r), axes[1].value(idx % r));
                let mut c = Cell::invalid(p1, p2);
                c.verdict = f(p1, p2);
                c
            })
            .collect();
        result(FamilyKind::Ring, 3, axes, vec![], cells, &Tolerances::default())
    }

    #[test]
    fn uniform_grid_has_no_frontier() {
        assert!(extract_frontier(&synthetic(10, |_, _| CellCode::S)).is_empty());
    }

    #[test]
    fn half_plane_gives_one_line_near_the_boundary() {
        let r = 41;
        let res = synthetic(r, |a, b| if b > 0.3 + 0.5 * a { CellCode::U } else { CellCode::S });
        let f = extract_frontier(&res);
        assert_eq!(f.len(), 1);
        let h = 1.0 / (r - 1) as f64;
        for (a, b) in &f[0].points {
            assert!((b - 0.3 - 0.5 * a).abs() < h, "{a} {b}");
        }
        assert!(f[0].points.len() >= r);
    }

    #[test]
    fn triple_junction_connects_through_center() {
        let res = synthetic(2, |a, b| if a < 0.5 { CellCode::S } else if b < 0.5 { CellCode::E } else { CellCode::U });
        let f = extract_frontier(&res);
        let n: usize = f.iter().map(|l| l.points.len() - 1).sum();
        assert_eq!(n, 3);
    }

    #[test]
    fn refinement_reproduces_grid_points() {
        let a = Axis::new("t", 0.1, 2.9, 17).unwrap();
        let b = Axis::new("t", 0.1, 2.9, 33).unwrap();
        for i in 0..17 {
            assert_eq!(a.value(i).to_bits(), b.value(2 * i).to_bits());
        }
        assert!(Axis::new("t", 1.0, 0.0, 3).is_err());
        assert!(Axis::new("t", 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let res = scan_ring_pole(4, (0.2, 2.8), (-2.0, 2.0), 5, &Tolerances::default()).unwrap();
        let csv = res.to_csv(&["seed=1".to_string()]);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 26);
        assert_eq!(rows[0], "param1,param2,verdict,margin,kappa,xi,mu_z");
        assert!(csv.starts_with("# seed=1\n# family=ring-pole\n"));
        // kappa = 0 column is a tracer and not a valid member of the family
        assert_eq!(res.cell(1, 2).verdict, CellCode::X);
        let svg = res.to_svg(&extract_frontier(&res));
        assert_eq!(svg.matches("<rect").count(), 26);
    }
}
