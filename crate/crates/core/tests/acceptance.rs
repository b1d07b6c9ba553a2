//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! measured values and runtime; the test fails if any criterion fails.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geolab::ball::{
    ball_mobius, bidisc_projections_demo, geodesic_through, kobayashi_distance, kobayashi_metric, BallMobius, BallPoint, BallTangent, CVector,
    LempertDevice, Unitary,
};
use geolab::blochness::{sandwich_check, EstimatorConfig, SandwichVerdict};
use geolab::disc::{poincare_distance, DiscPoint, MobiusDisc, PlanarRegion};
use geolab::ifs::{schwarz_pick_check, MapSpec};
use geolab::sampling::{ball_point_by_depth, disc_point_by_depth, stream_rng};
use geolab::scenarios::{self, Tolerances, DEFAULT_SEED};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_budget = elapsed <= budget;
    let pass = out.pass && in_budget;
    println!(
        "[{}] {n}. {name}: {} ({:.2}s of {:.0}s budget)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn sandwich() -> Outcome {
    let cfg = EstimatorConfig::default();
    let mut pass = true;
    let mut detail = Vec::new();
    let mut slowest = Duration::ZERO;
    for r in [0.25, 0.5, 1.0, 2.0] {
        let start = Instant::now();
        let rep = sandwich_check(&PlanarRegion::hyper_ball(DiscPoint::origin(), r).unwrap(), &cfg).unwrap();
        slowest = slowest.max(start.elapsed());
        let mu = rep.mu_est;
        let ok = rep.verdict == SandwichVerdict::Pass
            && (r / 2.0).tanh() - 1e-2 <= mu
            && mu <= r.tanh() + 1e-2
            && (mu - r.tanh()).abs() <= 1e-2;
        pass &= ok;
        detail.push(format!("r={r}: mu={mu:.5} tanh r={:.5}", r.tanh()));
    }
    pass &= slowest <= Duration::from_secs(10);
    Outcome { pass, detail: format!("{}; slowest r {:.2}s", detail.join(", "), slowest.as_secs_f64()) }
}

fn schwarz_pick() -> Outcome {
    let est = EstimatorConfig { center_samples: 64, ..EstimatorConfig::default() };
    let mut rng = stream_rng(DEFAULT_SEED, 40);
    let (mut triples, mut worst) = (0usize, f64::NEG_INFINITY);
    let mut pass = true;
    for k in 0..50u64 {
        let (g, target) = match k % 3 {
            0 | 1 => {
                let m = MobiusDisc::new(DiscPoint::new(disc_point_by_depth(&mut rng, 2.0)).unwrap(), rng.random_range(0.0..6.3));
                let s: f64 = rng.random_range(0.05..0.95);
                let target = PlanarRegion::hyper_ball(m.apply(&DiscPoint::origin()), s.atanh()).unwrap();
                (MapSpec::disc_mobius_scale(m, s).unwrap(), target)
            }
            _ => {
                let j = rng.random_range(1..8u32);
                let target = PlanarRegion::hyper_ball(DiscPoint::origin(), (1.0 - 0.5f64.powi(j as i32)).atanh()).unwrap();
                (MapSpec::DiscAffineShrink { j }, target)
            }
        };
        let rep = schwarz_pick_check(&g, &target, 20, DEFAULT_SEED + k, &est).unwrap();
        triples += rep.pairs;
        worst = worst.max(rep.max_slack);
        pass &= rep.pass;
    }
    Outcome { pass: pass && triples == 1000, detail: format!("{triples} triples, max slack {worst:.3e} (allowed 1e-9)") }
}

fn scenario(id: &str) -> geolab::scenarios::ScenarioResult {
    scenarios::run_scenario(id, DEFAULT_SEED, &Tolerances::default()).unwrap()
}

fn metric(r: &geolab::scenarios::ScenarioResult, name: &str) -> f64 {
    r.metric(name).unwrap_or(f64::NAN)
}

fn contraction() -> Outcome {
    let r = scenario("contraction");
    Outcome {
        pass: r.pass && metric(&r, "systems_constant") == 50.0 && metric(&r, "identity_control_nonconstant") == 1.0,
        detail: format!(
            "{} of 50 constant, worst slope {:.4} vs bound {:.4} + 1e-3, identity control non-constant: {}",
            metric(&r, "systems_constant"),
            metric(&r, "worst_rate_fit"),
            metric(&r, "rate_bound"),
            metric(&r, "identity_control_nonconstant") == 1.0
        ),
    }
}

fn bloch_targets_force_constant_limits() -> Outcome {
    let r = scenario("main_theorem");
    Outcome {
        pass: r.pass,
        detail: format!(
            "bounds {:.5}/{:.5}/{:.5} in [0.99, 1.011], {} of 60 runs constant (worst diam {:.2e}), tracking {:.2e}{}",
            metric(&r, "certified_bound_c0"),
            metric(&r, "certified_bound_c1"),
            metric(&r, "certified_bound_c2"),
            metric(&r, "runs_constant"),
            metric(&r, "worst_final_diameter"),
            metric(&r, "worst_tracking_residual"),
            failed_suffix(&r)
        ),
    }
}

fn failed_suffix(r: &geolab::scenarios::ScenarioResult) -> String {
    if r.failed_checks.is_empty() {
        String::new()
    } else {
        format!("; failed: {}", r.failed_checks.join(", "))
    }
}

fn product_example() -> Outcome {
    let r = scenario("product_counterexample");
    let cap_ok = r.artifacts[1]["radius_cap"].as_f64() == Some(6.0);
    Outcome {
        pass: r.pass && cap_ok && (metric(&r, "product_constant") - 0.2887880951).abs() < 1e-6,
        detail: format!(
            "c = {:.10}, limit error {:.2e}, axis projection {}, slice Bloch radius {}{}",
            metric(&r, "product_constant"),
            metric(&r, "limit_error"),
            if metric(&r, "axis_projection_radius") < 0.0 { "UNBOUNDED (cap 6)".to_string() } else { metric(&r, "axis_projection_radius").to_string() },
            metric(&r, "slice_bloch_radius"),
            failed_suffix(&r)
        ),
    }
}

fn horosphere() -> Outcome {
    let r = scenario("horosphere");
    Outcome {
        pass: r.pass && metric(&r, "devices_kept") >= 50.0,
        detail: format!(
            "{} grid points, {} disagreements; c-Bloch max {:.4} doubled {:.4} over {} devices; 1-Bloch axis {}{}",
            metric(&r, "grid_points_compared"),
            metric(&r, "slice_disagreements"),
            metric(&r, "c_bloch_max_radius"),
            metric(&r, "c_bloch_doubled_max_radius"),
            metric(&r, "devices_kept"),
            if metric(&r, "one_bloch_axis_radius") < 0.0 { "UNBOUNDED" } else { "finite" },
            failed_suffix(&r)
        ),
    }
}

fn random_point(rng: &mut impl Rng, n: usize, depth: f64) -> BallPoint {
    BallPoint::new(ball_point_by_depth(rng, n, depth)).unwrap()
}

fn norm_diff(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm()
}

fn device_identities() -> Outcome {
    let mut rng = stream_rng(DEFAULT_SEED, 70);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [2, 3] {
        for _ in 0..100 {
            let d: LempertDevice = geodesic_through(&random_point(&mut rng, n, 2.5), &random_point(&mut rng, n, 2.5)).unwrap();
            count += 1;
            for _ in 0..5 {
                let zeta = disc_point_by_depth(&mut rng, 3.0);
                worst = worst.max((d.left_inverse_value(&d.phi_value(zeta)) - zeta).norm());
                let fixed = d.phi(&DiscPoint::new(zeta).unwrap());
                worst = worst.max(norm_diff(d.project(&fixed).unwrap().value(), fixed.value()));
                let x = random_point(&mut rng, n, 3.0);
                let y = random_point(&mut rng, n, 3.0);
                let px = d.project(&x).unwrap();
                worst = worst.max(norm_diff(d.project(&px).unwrap().value(), px.value()));
                let gap = poincare_distance(&d.left_inverse(&x).unwrap(), &d.left_inverse(&y).unwrap()) - kobayashi_distance(&x, &y).unwrap();
                worst = worst.max(gap);
            }
        }
    }
    let mut exact = true;
    for _ in 0..1000 {
        let z = disc_point_by_depth(&mut rng, 3.0);
        let w = disc_point_by_depth(&mut rng, 3.0);
        let (p1, p2) = bidisc_projections_demo(z, w).unwrap();
        exact &= bidisc_projections_demo(p1.0, p1.1).unwrap().0 == p1;
        exact &= bidisc_projections_demo(p2.0, p2.1).unwrap().1 == p2;
        exact &= bidisc_projections_demo(z, z).unwrap() == ((z, z), (z, z));
    }
    Outcome {
        pass: worst <= 1e-11 && exact && count == 200,
        detail: format!("{count} devices, worst identity residual {worst:.2e} (allowed 1e-11), bidisc identities exact: {exact}"),
    }
}

fn kernel_cross_checks() -> Outcome {
    let mut rng = stream_rng(DEFAULT_SEED, 80);
    let c = |re: f64| Complex64::new(re, 0.0);
    let mut slice: f64 = 0.0;
    for _ in 0..500 {
        let z = disc_point_by_depth(&mut rng, 4.0);
        let w = disc_point_by_depth(&mut rng, 4.0);
        let kd = poincare_distance(&DiscPoint::new(z).unwrap(), &DiscPoint::new(w).unwrap());
        let kb = kobayashi_distance(&BallPoint::new(vec![z, c(0.0)]).unwrap(), &BallPoint::new(vec![w, c(0.0)]).unwrap()).unwrap();
        slice = slice.max((kd - kb).abs());
    }
    let h = 1e-6;
    let mut fd: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..4);
        let z = random_point(&mut rng, n, 1.5);
        let v: Vec<Complex64> = ball_point_by_depth(&mut rng, n, 1.0);
        let vv = CVector::from_vec(v.clone());
        let kappa = kobayashi_metric(&BallTangent::new(z.clone(), v).unwrap());
        let a = BallPoint::new((z.value() - &vv * Complex64::from(h / 2.0)).iter().copied().collect()).unwrap();
        let b = BallPoint::new((z.value() + &vv * Complex64::from(h / 2.0)).iter().copied().collect()).unwrap();
        let quotient = kobayashi_distance(&a, &b).unwrap() / h;
        fd = fd.max((quotient - kappa).abs() / kappa.max(1.0));
    }
    let mut mobius: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..4);
        let a = random_point(&mut rng, n, 2.0);
        let m = BallMobius::new(a.clone(), Unitary::random(&mut rng, n)).unwrap();
        let (z, w) = (random_point(&mut rng, n, 3.0), random_point(&mut rng, n, 3.0));
        let before = kobayashi_distance(&z, &w).unwrap();
        let after = kobayashi_distance(&m.apply(&z).unwrap(), &m.apply(&w).unwrap()).unwrap();
        let inv = ball_mobius(&a);
        let after_inv = kobayashi_distance(&inv.apply(&z).unwrap(), &inv.apply(&w).unwrap()).unwrap();
        mobius = mobius.max((before - after).abs()).max((before - after_inv).abs());
    }
    Outcome {
        pass: slice <= 1e-12 && fd <= 1e-5 && mobius <= 1e-11,
        detail: format!("slice {slice:.2e} (1e-12), metric FD {fd:.2e} (1e-5 at h=1e-6), Mobius {mobius:.2e} (1e-11)"),
    }
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes = Vec::new();
    for d in &dirs {
        let out = Command::new(env!("CARGO_BIN_EXE_geolab"))
            .args(["--quiet", "--output-dir"])
            .arg(d.path())
            .arg("verify")
            .env_remove("GEOLAB_SEED")
            .output()
            .unwrap();
        codes.push(out.status.code());
    }
    let read = |p: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(p)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let (a, b) = (read(dirs[0].path()), read(dirs[1].path()));
    let identical = a == b && a.len() == 6;
    Outcome {
        pass: identical && codes == [Some(0), Some(0)],
        detail: format!("{} JSON files per run, bitwise identical: {identical}, exit codes {codes:?}", a.len()),
    }
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "sandwich bounds on centered hyperbolic discs", secs(40), sandwich),
        criterion(2, "Schwarz-Pick contraction into the target", secs(5), schwarz_pick),
        criterion(3, "uniform contraction gives constant limits", secs(30), contraction),
        criterion(4, "1-Bloch Kobayashi balls: certificate, degeneracy, tracking", secs(60), bloch_targets_force_constant_limits),
        criterion(5, "product system: non-constant limit, unbounded projection", secs(10), product_example),
        criterion(6, "horosphere difference: c-Bloch but not 1-Bloch", secs(120), horosphere),
        criterion(7, "complex geodesic device identities", secs(10), device_identities),
        criterion(8, "geometry kernel cross-checks", secs(10), kernel_cross_checks),
        criterion(9, "verify is bitwise deterministic", secs(600), determinism),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
