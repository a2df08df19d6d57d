use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use vortex_core::dynamics::{
    calibrate_noise_floor, growth_is_positive, integrate_sampled, perturbation_growth, perturbed_state, verify_rigid_rotation,
    GrowthOptions,
};
use vortex_core::families::{
    build_ring, build_ring_pole, build_ring_two_poles, build_two_rings, build_two_rings_with_kappa, solve_two_ring_kappa,
    two_ring_kappa_residual, KappaSolution, RelativeEquilibrium, KAPPA_NEAR_DEGENERACY,
};
use vortex_core::report::ReportDocument;
use vortex_core::scan::{extract_frontier, scan_ring_pole, scan_ring_two_poles, scan_two_rings, CellCode, ScanResult};
use vortex_core::stability::{classify_with, Tolerances};
use vortex_core::system::{Vec3, VortexState};
use vortex_core::verify::run_suite;

use crate::config::{parse_angle, parse_range, Family, Params};
use crate::error::CliError;

fn tolerances(p: &Params) -> Result<Tolerances, CliError> {
    Ok(match p.tol_eig {
        Some(t) => Tolerances::new(t)?,
        None => Tolerances::default(),
    })
}

/// True for staggered rings; exactly one of the two flags must be set.
fn staggered(p: &Params) -> Result<bool, CliError> {
    match (p.aligned, p.staggered) {
        (true, false) => Ok(false),
        (false, true) => Ok(true),
        _ => Err(CliError::Invalid("two-rings needs exactly one of --aligned or --staggered".into())),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Relative equilibrium named by the family flags (two-ring kappa solved unless given).
fn equilibrium(p: &Params) -> Result<RelativeEquilibrium, CliError> {
    let family = p.require(p.family, "family")?;
    let n = p.require(p.n, "n")?;
    let t0 = p.require(p.theta0, "theta0")?;
    Ok(match family {
        Family::Ring => build_ring(n, t0)?,
        Family::RingPole => build_ring_pole(n, t0, p.require(p.kappa, "kappa")?)?,
        Family::Ring2Poles => build_ring_two_poles(n, t0, p.require(p.kappa_n, "kappaN")?, p.require(p.kappa_s, "kappaS")?)?,
        Family::TwoRings => {
            let t1 = p.require(p.theta1, "theta1")?;
            match p.kappa {
                Some(k) => build_two_rings_with_kappa(n, t0, t1, staggered(p)?, k)?,
                None => build_two_rings(n, t0, t1, staggered(p)?)?,
            }
        }
    })
}

pub fn analyze(p: &Params) -> Result<(), CliError> {
    let tol = tolerances(p)?;
    let doc = if p.family == Some(Family::TwoRings) && p.kappa.is_none() {
        let (n, t0, t1) = (p.require(p.n, "n")?, p.require(p.theta0, "theta0")?, p.require(p.theta1, "theta1")?);
        let st = staggered(p)?;
        match solve_two_ring_kappa(n, t0, t1, st)? {
            KappaSolution::Unique { .. } if two_ring_kappa_residual(n, t0, t1, st)? < KAPPA_NEAR_DEGENERACY => {
                ReportDocument::undetermined_kappa("near-degenerate")
            }
            KappaSolution::Unique { .. } => ReportDocument::from_report(&classify_with(&equilibrium(p)?, &tol)?),
            KappaSolution::Degenerate(_) => ReportDocument::undetermined_kappa("degenerate"),
            KappaSolution::None => ReportDocument::undetermined_kappa("none"),
        }
    } else {
        let re = equilibrium(p)?;
        let doc = ReportDocument::from_report(&classify_with(&re, &tol)?);
        if re.degenerate() {
            doc.with_kappa_status("prescribed")
        } else {
            doc
        }
    };
    let mut json = doc.with_run_config(p.echo("analyze")).to_json();
    json.push('\n');
    write_output(p.out.as_deref(), &json)
}

fn angle_range(s: Option<&str>, default: (f64, f64), flag: &str) -> Result<(f64, f64), CliError> {
    let Some(s) = s else { return Ok(default) };
    for part in s.split(',') {
        parse_angle(part).map_err(|e| CliError::Invalid(format!("--{flag}: {e}")))?;
    }
    parse_range(s)
}

fn value_range(s: Option<&str>, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    s.map_or(Ok(default), parse_range)
}

pub fn scan(p: &Params) -> Result<(), CliError> {
    let tol = tolerances(p)?;
    let family = p.require(p.family, "family")?;
    let n = p.require(p.n, "n")?;
    let r = p.resolution.unwrap_or(200);
    let (r1, r2) = (p.range1.as_deref(), p.range2.as_deref());
    let result: ScanResult = match family {
        Family::Ring => return Err(CliError::Invalid("scan needs a two-parameter family: ring-pole, ring-2poles or two-rings".into())),
        Family::RingPole => scan_ring_pole(n, angle_range(r1, (0.01, PI - 0.01), "range1")?, value_range(r2, (-5.0, 5.0))?, r, &tol)?,
        Family::Ring2Poles => {
            let ks = p.require(p.kappa_s, "kappaS")?;
            scan_ring_two_poles(n, angle_range(r1, (0.01, FRAC_PI_2), "range1")?, value_range(r2, (-5.0, 5.0))?, ks, r, &tol)?
        }
        Family::TwoRings => {
            let t0 = angle_range(r1, (0.01, FRAC_PI_2), "range1")?;
            let t1 = angle_range(r2, (0.01, PI - 0.01), "range2")?;
            scan_two_rings(n, t0, t1, staggered(p)?, r, &tol)?
        }
    };
    let csv = result.to_csv(&[p.echo_line("scan")]);
    if p.svg {
        let out = p.out.as_ref().ok_or_else(|| CliError::Invalid("--svg needs --out (the SVG is written next to the CSV)".into()))?;
        let svg_path = out.with_extension("svg");
        write_output(Some(&svg_path), &result.to_svg(&extract_frontier(&result)))?;
    }
    write_output(p.out.as_deref(), &csv)?;
    let counts: Vec<String> =
        [CellCode::S, CellCode::E, CellCode::U, CellCode::D, CellCode::X].iter().map(|c| format!("{}={}", c.as_char(), result.count(*c))).collect();
    eprintln!("{} cells: {}", result.cells.len(), counts.join(" "));
    Ok(())
}

/// Reads "x y z kappa" lines; blank lines and `#` comments are skipped. Positions are normalized.
pub fn read_state(path: &Path) -> Result<VortexState, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let (mut pos, mut kap) = (vec![], vec![]);
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Invalid(format!("{}:{}: expected four numbers", path.display(), i + 1)))?;
        if v.len() != 4 {
            return Err(CliError::Invalid(format!("{}:{}: expected \"x y z kappa\"", path.display(), i + 1)));
        }
        pos.push(Vec3::new(v[0], v[1], v[2]));
        kap.push(v[3]);
    }
    Ok(VortexState::from_directions(pos, kap)?)
}

pub fn simulate(p: &Params) -> Result<(), CliError> {
    let t_end = p.t_end.unwrap_or(10.0);
    let dt = p.dt.unwrap_or(1e-3);
    let re = match (&p.state, p.family) {
        (Some(_), Some(_)) => return Err(CliError::Invalid("give either --state or --family, not both".into())),
        (Some(_), None) if p.perturb.is_some() || p.growth => {
            return Err(CliError::Invalid("--perturb and --growth need a family equilibrium".into()))
        }
        (Some(_), None) => None,
        (None, _) => Some(equilibrium(p)?),
    };
    let initial = match (&p.state, &re) {
        (Some(path), _) => read_state(path)?,
        (None, Some(re)) => match p.perturb {
            Some(a) => perturbed_state(re, a, p.seed())?,
            None => re.state().clone(),
        },
        (None, None) => unreachable!("family equilibrium is built above"),
    };
    let traj = integrate_sampled(&initial, t_end, dt, p.stride.unwrap_or(100))?;
    if let Some(out) = &p.out {
        let mut text = format!("# {}\n", p.echo_line("simulate"));
        text.push_str(&traj.to_csv()?);
        write_output(Some(out), &text)?;
    }
    let s = traj.summary();
    println!("vortices={} T={t_end} dt={dt} seed={}", initial.len(), p.seed());
    println!("max relative H drift {:.3e}, max Phi drift {:.3e}, max sphere drift {:.3e}", s.max_h_drift, s.max_phi_drift, s.max_sphere_drift);
    if let Some(re) = &re {
        println!("rigid-rotation deviation of the equilibrium {:.3e} (xi={})", verify_rigid_rotation(re, t_end, dt)?, re.xi());
        if p.growth {
            let opts = GrowthOptions {
                amplitude: p.perturb.unwrap_or(GrowthOptions::default().amplitude),
                t_max: p.t_end.unwrap_or(GrowthOptions::default().t_max),
                dt,
                seed: p.seed(),
                ..Default::default()
            };
            let floor = calibrate_noise_floor(&opts)?;
            let g = perturbation_growth(re, &opts)?;
            let verdict = classify_with(re, &tolerances(p)?)?.verdict;
            println!(
                "growth exponent {:.4e} (noise floor {floor:.1e}, t_end {:.2}): {}; linear verdict {verdict:?}",
                g.exponent,
                g.t_end,
                if growth_is_positive(g.exponent, floor) { "positive" } else { "not positive" }
            );
        }
    }
    Ok(())
}

pub fn verify(p: &Params) -> Result<(), CliError> {
    let out = run_suite(p.seed());
    let mut text = String::new();
    for c in &out {
        let _ = writeln!(text, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = out.iter().filter(|c| !c.passed).count();
    let _ = writeln!(text, "{}/{} checks passed (seed {})", out.len() - failed, out.len(), p.seed());
    write_output(p.out.as_deref(), &text)?;
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}
