//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p vortex-core --test acceptance -- --nocapture` (output is printed either way).

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortex_core::criteria::*;
use vortex_core::dynamics::*;
use vortex_core::families::*;
use vortex_core::fd::max_relative_error;
use vortex_core::scan::*;
use vortex_core::slice::basis_for;
use vortex_core::stability::*;
use vortex_core::verify::{numeric_mode_eigenvalues, run_suite, sample_family};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn ring_verdict(n: usize, cos2: f64) -> Verdict {
    classify(&build_ring(n, cos2.sqrt().acos()).unwrap()).unwrap().verdict
}

fn single_ring_thresholds() -> Outcome {
    let mut notes = vec![];
    let mut ok = true;
    for (n, t) in [(4, 1.0 / 3.0), (5, 0.5), (6, 0.8)] {
        let (mut lo, mut hi) = (t - 0.15, t + 0.15);
        if ring_verdict(n, lo) != Verdict::LinearlyUnstable || ring_verdict(n, hi) != Verdict::LyapunovStable {
            ok = false;
            notes.push(format!("n={n}: bracket does not straddle"));
            continue;
        }
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if ring_verdict(n, mid) == Verdict::LyapunovStable {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let err = (0.5 * (lo + hi) - t).abs();
        ok &= err < 1e-6;
        notes.push(format!("n={n} |d cos2|={err:.1e}"));
    }
    let lat = |i: usize| 0.02 + (PI - 0.04) * i as f64 / 49.0;
    let stable_small = (2..=3).all(|n| (0..50).all(|i| classify(&build_ring(n, lat(i)).unwrap()).unwrap().verdict == Verdict::LyapunovStable));
    let unstable_large = (7..=10).all(|n| (0..50).all(|i| classify(&build_ring(n, lat(i)).unwrap()).unwrap().verdict == Verdict::LinearlyUnstable));
    notes.push(format!("n=2,3 stable: {stable_small}; n=7..10 unstable: {unstable_large}"));
    outcome(ok && stable_small && unstable_large, notes.join(", "))
}

fn mode_formula_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for kind in [FamilyKind::Ring, FamilyKind::RingPole, FamilyKind::RingTwoPoles] {
        for n in 4..=12 {
            for _ in 0..50 {
                let re = sample_family(kind, n..=n, &mut rng);
                let s = re.spec();
                let (kn, ks) = match kind {
                    FamilyKind::Ring => (None, None),
                    FamilyKind::RingPole => (s.kappa, None),
                    _ => (s.kappa_n, s.kappa_s),
                };
                for l in 2..=n / 2 {
                    let (a, b) = ring_mode_eigenvalues(n, s.theta0, l, kn, ks).unwrap();
                    let (x, y) = numeric_mode_eigenvalues(&re, l).unwrap();
                    worst = worst.max(max_relative_error(&[a, b], &[x, y]));
                    count += 1;
                }
            }
        }
    }
    outcome(worst < 1e-8, format!("max rel error {worst:.2e} over {count} (family, n, l, draw) cases"))
}

/// Fraction of non-boundary valid cells where analytic and numeric verdicts agree.
fn agreement_rate(scan: &ScanResult) -> (f64, usize, usize) {
    let tol = scan.tolerances;
    let (mut agree, mut total) = (0, 0);
    for c in &scan.cells {
        if c.in_boundary_band(&tol) || c.verdict == CellCode::X {
            continue;
        }
        let Some(a) = c.analytic else { continue };
        if a == Verdict::Degenerate {
            continue;
        }
        total += 1;
        if CellCode::from(a) == c.verdict {
            agree += 1;
        }
    }
    (agree as f64 / total.max(1) as f64, agree, total)
}

fn ring_pole_regions() -> Outcome {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut notes = vec![];
    for n in [4, 5, 8] {
        let s = scan_ring_pole(n, (0.01, PI - 0.01), (-5.0, 5.0), 200, &tol).unwrap();
        let (rate, a, t) = agreement_rate(&s);
        ok &= rate >= 0.99;
        notes.push(format!("n={n}: {a}/{t} = {:.4}", rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mismatches, mut draws) = (0, 0);
    while draws < 1000 {
        let n = rng.gen_range(3..=12);
        let t: f64 = rng.gen_range(0.02..PI - 0.02);
        let k: f64 = rng.gen_range(-5.0..5.0);
        let Ok(re) = build_ring_pole(n, t, k) else { continue };
        let Ok(b) = basis_for(&re) else { continue };
        let Some(e) = b.blocks.iter().find(|x| x.mode == 1 && x.len == 4 && x.hessian_groups.len() == 2) else { continue };
        let spectra = block_spectra(&re, &b).unwrap();
        let sp = spectra.iter().find(|s| s.label == e.label).unwrap();
        let rho = sp.linearization_eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
        let imaginary = sp.linearization_eigenvalues.iter().all(|v| v.re.abs() <= tol.eig_rel * rho);
        let q = ring_pole_quadratics(n, t, k).unwrap();
        draws += 1;
        if (q.nu >= 0.0) != imaginary {
            mismatches += 1;
        }
    }
    notes.push(format!("nu-sign mismatches {mismatches}/{draws}"));
    outcome(ok && mismatches == 0, notes.join(", "))
}

fn special_cases() -> Outcome {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut notes = vec![];
    for n in [2, 3] {
        let s = scan_ring_pole(n, (0.01, PI - 0.01), (-5.0, 5.0), 200, &tol).unwrap();
        let (rate, a, t) = agreement_rate(&s);
        ok &= rate >= 0.99;
        notes.push(format!("n={n}: {a}/{t} = {:.4}", rate));
    }
    outcome(ok, notes.join(", "))
}

fn ring_two_poles_surface() -> Outcome {
    let tol = Tolerances::default();
    let (mut below, mut below_bad, mut above, mut above_bad) = (0, 0, 0, 0);
    for n in [4, 6, 8] {
        for ks in [-2.0, 0.5, 3.0] {
            let s = scan_ring_two_poles(n, (0.01, FRAC_PI_2), (-5.0, 5.0), ks, 100, &tol).unwrap();
            for c in &s.cells {
                match c.l2 {
                    Some(L2Verdict::UnstableByL2Modes) => {
                        below += 1;
                        if c.verdict != CellCode::U {
                            below_bad += 1;
                        }
                    }
                    Some(L2Verdict::L2ModesStable) => {
                        above += 1;
                        let re = build_ring_two_poles(n, c.param1, c.param2, ks).unwrap();
                        if (2..=n / 2).any(|l| numeric_mode_eigenvalues(&re, l).unwrap().0 < 0.0) {
                            above_bad += 1;
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    outcome(
        below_bad == 0 && above_bad == 0 && below > 0 && above > 0,
        format!("below surface: {below_bad}/{below} not unstable; above: {above_bad}/{above} with a negative l>=2 eigenvalue"),
    )
}

fn two_ring_structure() -> Outcome {
    let mut worst_m1: f64 = 0.0;
    let mut worst_p1: f64 = 0.0;
    let mut ok = true;
    for i in 0..20 {
        let t0 = 0.1 + 1.4 * i as f64 / 19.0;
        for staggered in [false, true] {
            for n in 2..=8 {
                if !staggered && n == 4 && (t0.cos() - 1.0 / 3f64.sqrt()).abs() < 1e-3 {
                    continue;
                }
                match solve_two_ring_kappa(n, t0, PI - t0, staggered) {
                    Ok(KappaSolution::Unique { kappa, .. }) => worst_m1 = worst_m1.max((kappa + 1.0).abs()),
                    _ if (t0 - FRAC_PI_2).abs() < 1e-12 => {}
                    _ => ok = false,
                }
            }
        }
        for n in 2..=8 {
            match solve_two_ring_kappa(n, t0, t0, true) {
                Ok(KappaSolution::Unique { kappa, .. }) => worst_p1 = worst_p1.max((kappa - 1.0).abs()),
                _ => ok = false,
            }
        }
    }
    let c = (1.0 / 3f64.sqrt()).acos();
    let cube = matches!(solve_two_ring_kappa(4, c, PI - c, false), Ok(KappaSolution::Degenerate(_)));
    let off = [-1e-4, 1e-4].iter().all(|d| matches!(solve_two_ring_kappa(4, c + d, PI - c - d, false), Ok(KappaSolution::Unique { .. })));
    ok &= worst_m1 < 1e-10 && worst_p1 < 1e-10 && cube && off;
    outcome(ok, format!("max |kappa+1| {worst_m1:.1e}, max |kappa-1| {worst_p1:.1e}, cube degenerate {cube}, unique 1e-4 off the cube {off}"))
}

fn dynamics_checks() -> Outcome {
    let reps = [
        build_ring(5, 0.8).unwrap(),
        build_ring_pole(4, 1.0, 1.5).unwrap(),
        build_ring_two_poles(5, 1.1, 0.6, -0.8).unwrap(),
        build_two_rings(4, 0.9, 2.0, false).unwrap(),
        build_two_rings(3, 0.6, 1.2, true).unwrap(),
    ];
    let (mut rigid, mut dh, mut dphi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for re in &reps {
        rigid = rigid.max(verify_rigid_rotation(re, 5.0, 1e-3).unwrap());
        let p = perturbed_state(re, 1e-2, 9).unwrap();
        let s = integrate_sampled(&p, 10.0, 1e-3, 100).unwrap().summary();
        dh = dh.max(s.max_h_drift);
        dphi = dphi.max(s.max_phi_drift);
    }
    // fast-rotating aligned pair (kappa about -6.2, xi about 25): reported, not gated
    let stiff = build_two_rings(4, 0.5, 2.3, false).unwrap();
    let stiff_phi = integrate_sampled(stiff.state(), 10.0, 1e-3, 100).unwrap().summary().max_phi_drift;
    let cases: Vec<RelativeEquilibrium> = vec![
        build_ring(7, FRAC_PI_2).unwrap(),
        build_ring(4, 0.2f64.sqrt().acos()).unwrap(),
        build_ring(8, 1.0).unwrap(),
        build_ring(5, 0.3f64.sqrt().acos()).unwrap(),
        build_ring_pole(2, PI / 4.0, 0.5).unwrap(),
        build_ring_pole(5, 1.0, -3.0).unwrap(),
        build_ring_two_poles(4, FRAC_PI_2, 0.3, 0.1).unwrap(),
        build_ring_two_poles(7, 1.0, -1.0, -1.0).unwrap(),
        build_two_rings(7, 1.0, 2.0, true).unwrap(),
        build_two_rings(4, 0.8, 1.2, false).unwrap(),
        build_ring(3, 1.2).unwrap(),
        build_ring(2, 0.7).unwrap(),
        build_ring(6, 0.9f64.sqrt().acos()).unwrap(),
        build_ring(4, 0.6f64.sqrt().acos()).unwrap(),
        build_ring(5, 0.7f64.sqrt().acos()).unwrap(),
        build_ring_pole(2, FRAC_PI_2, -1.0).unwrap(),
        build_ring_pole(3, PI / 3.0, 1.0).unwrap(),
        build_ring_pole(5, 0.5, 4.0).unwrap(),
        build_two_rings(4, 0.2, PI - 0.2, false).unwrap(),
        build_two_rings(2, 0.5, 0.9, true).unwrap(),
    ];
    let floor = calibrate_noise_floor(&GrowthOptions::default()).unwrap();
    let mut agree = 0;
    let mut notes = vec![];
    for re in &cases {
        let r = classify(re).unwrap();
        let sigma = r.blocks.iter().map(|b| b.max_real_part()).fold(0.0, f64::max);
        let t_max = if r.verdict == Verdict::LinearlyUnstable { (20.0 / sigma).clamp(60.0, 2000.0) } else { 60.0 };
        let g = perturbation_growth(re, &GrowthOptions { t_max, ..Default::default() }).unwrap();
        let pos = growth_is_positive(g.exponent, floor);
        if pos == (r.verdict == Verdict::LinearlyUnstable) {
            agree += 1;
        } else {
            notes.push(format!("{} n={} {:?}: exponent {:.3e} sigma {:.3e}", re.spec().kind.name(), re.n(), r.verdict, g.exponent, sigma));
        }
    }
    let ok = rigid < 1e-6 && dh < 1e-8 && dphi < 1e-8 && agree == cases.len();
    outcome(
        ok,
        format!(
            "rigid {rigid:.1e}, H drift {dh:.1e}, Phi drift {dphi:.1e}, growth sign {agree}/{} (floor {floor:.1e}), fast aligned pair Phi drift {stiff_phi:.1e}{}",
            cases.len(),
            if notes.is_empty() { String::new() } else { format!("; mismatches: {}", notes.join("; ")) }
        ),
    )
}

fn figure_properties() -> Outcome {
    let tol = Tolerances::default();
    let (r0, r1) = ((0.01, FRAC_PI_2), (0.01, PI - 0.01));
    let mut notes = vec![];
    let mut ok = true;

    let a4 = scan_two_rings(4, r0, r1, false, 200, &tol).unwrap();
    let s_cells: Vec<&Cell> = a4.cells.iter().filter(|c| c.verdict == CellCode::S).collect();
    let outside = s_cells.iter().filter(|c| !(c.param1 < 0.5 && c.param2 > PI - 0.7)).count();
    let same_hemi = s_cells.iter().filter(|c| c.param2 < FRAC_PI_2).count();
    ok &= !s_cells.is_empty() && outside == 0 && same_hemi == 0;
    notes.push(format!("aligned n=4: {} S cells, {outside} outside corner, {same_hemi} same-hemisphere", s_cells.len()));

    for n in [2, 3] {
        let s = scan_two_rings(n, r0, r1, true, 200, &tol).unwrap();
        let near: Vec<&Cell> = s.cells.iter().filter(|c| c.verdict == CellCode::S && (c.param1 - c.param2).abs() < 0.1).collect();
        // the scan diagonal itself: staggered rings with theta1 = theta0 form one ring of 2n vortices
        let mut diag_bad = 0;
        let mut diag = 0;
        for i in 0..40 {
            let t = 0.05 + (FRAC_PI_2 - 0.1) * i as f64 / 39.0;
            let Ok(re) = build_two_rings(n, t, t, true) else { continue };
            let r = classify(&re).unwrap();
            let a = criterion_ring(2 * n, t);
            if a == Verdict::Degenerate || r.margin < 10.0 * tol.eig_rel {
                continue;
            }
            diag += 1;
            if r.verdict != a {
                diag_bad += 1;
            }
        }
        ok &= !near.is_empty() && diag_bad == 0 && diag > 0;
        notes.push(format!("staggered n={n}: {} S cells within 0.1 of diagonal, diagonal vs ring of {}: {diag_bad}/{diag} mismatched", near.len(), 2 * n));
    }

    for staggered in [false, true] {
        let s = scan_two_rings(7, r0, r1, staggered, 200, &tol).unwrap();
        let count = s.count(CellCode::S);
        ok &= count == 0;
        notes.push(format!("{} n=7: {count} S cells", if staggered { "staggered" } else { "aligned" }));
    }
    outcome(ok, notes.join(", "))
}

fn invariant_suite() -> Outcome {
    let t = Instant::now();
    let out = run_suite(42);
    let failed: Vec<String> = out.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    let secs = t.elapsed().as_secs_f64();
    outcome(failed.is_empty() && secs < 300.0, format!("{}/{} checks in {secs:.1}s{}", out.len() - failed.len(), out.len(), if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join("; ")) }))
}

fn main() {
    // advisory criteria record expected observations: a failure is printed and flagged for review
    // but does not fail the run
    type Criterion = (&'static str, fn() -> Outcome, f64, bool);
    let criteria: [Criterion; 9] = [
        ("1 single-ring thresholds", single_ring_thresholds, 30.0, false),
        ("2 mode eigenvalue formulas", mode_formula_agreement, 60.0, false),
        ("3 ring-pole stability regions", ring_pole_regions, 600.0, false),
        ("4 ring-pole n=2 and n=3 criteria", special_cases, 600.0, false),
        ("5 ring with two poles, l>=2 surface", ring_two_poles_surface, 600.0, false),
        ("6 two-ring vorticity ratio", two_ring_structure, 600.0, false),
        ("7 dynamics and growth witness", dynamics_checks, 600.0, false),
        ("8 two-ring scan observations (advisory)", figure_properties, 600.0, true),
        ("9 invariant suite", invariant_suite, 300.0, false),
    ];
    let (mut passed_count, mut hard_failures, mut review) = (0, 0, vec![]);
    for (name, f, budget, advisory) in criteria {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        let passed = o.passed && secs < budget;
        if passed {
            passed_count += 1;
        } else if advisory {
            review.push(name);
        } else {
            hard_failures += 1;
        }
        println!("[{}] {name}: {} ({secs:.1}s, budget {budget:.0}s)", if passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{passed_count} of 9 criteria passed");
    if !review.is_empty() {
        println!("flagged for review (advisory): {}", review.join(", "));
    }
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
