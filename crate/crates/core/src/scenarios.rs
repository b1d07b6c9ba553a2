//! Named, seeded experiments that exercise the library end to end. Each one
//! reports named metrics and passes on explicit numeric predicates only.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ball::{geodesic_tangent, BallPoint, BallRegion, BallTangent, LempertDevice, Unitary};
use crate::blochness::{
    bloch_radius, c_bloch_certify, lipschitz_constant, one_bloch_certify, one_bloch_certify_devices, sandwich_check_with_tolerance,
    BoundaryExclusion, DeviceSampleConfig, EstimatorConfig,
};
use crate::disc::{DiscPoint, MobiusDisc, PlanarRegion};
use crate::error::{GeoError, Result};
use crate::ifs::{
    compose_run, hyperbolic_diameter, product_limit_constant, reduce_system, uniform_contraction_run, ContractionOptions, Domain,
    IfsSpec, MapSpec, RunOptions,
};
use crate::point::Point;
use crate::sampling::{disc_point_by_depth, stream_rng};

pub use crate::ifs::example_product_ifs;

/// Every scenario, in `verify` order.
pub const SCENARIO_IDS: [&str; 6] = ["sandwich", "contraction", "main_theorem", "product_counterexample", "horosphere", "implications"];

/// Base seed of the scenario suite.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Numeric thresholds of the pass predicates. Overridable so that a harness can
/// check that a corrupted threshold makes `verify` fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub sandwich: f64,
    pub rate_slack: f64,
    pub certified_lower: f64,
    pub certified_upper_slack: f64,
    pub constant_diameter: f64,
    pub tracking: f64,
    pub limit_constant: f64,
    pub slice_margin: f64,
    pub lipschitz_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sandwich: 1e-2,
            rate_slack: 1e-3,
            certified_lower: 0.99,
            certified_upper_slack: 0.01,
            constant_diameter: 1e-8,
            tracking: 1e-9,
            limit_constant: 1e-6,
            slice_margin: 1e-9,
            lipschitz_slack: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    /// Plain statement of the property being exercised.
    pub statement_ref: String,
    pub pass: bool,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Names of the individual predicates that failed.
    pub failed_checks: Vec<String>,
    pub artifacts: Vec<Value>,
}

impl ScenarioResult {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

struct Builder {
    id: &'static str,
    statement: &'static str,
    seed: u64,
    metrics: Vec<Metric>,
    failed: Vec<String>,
    checks: usize,
    artifacts: Vec<Value>,
}

impl Builder {
    fn new(id: &'static str, statement: &'static str, seed: u64) -> Self {
        Self { id, statement, seed, metrics: Vec::new(), failed: Vec::new(), checks: 0, artifacts: Vec::new() }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failed.push(name.into());
        }
    }

    fn artifact<T: Serialize>(&mut self, value: &T) {
        self.artifacts.push(serde_json::to_value(value).expect("reports serialize"));
    }

    fn finish(self) -> ScenarioResult {
        ScenarioResult {
            scenario_id: self.id.into(),
            statement_ref: self.statement.into(),
            pass: self.checks > 0 && self.failed.is_empty(),
            seed: self.seed,
            metrics: self.metrics,
            failed_checks: self.failed,
            artifacts: self.artifacts,
        }
    }
}

/// Finite value for metrics, `+inf` is written as the cap-exceeded sentinel `-1`.
fn radius_metric(r: &crate::blochness::RadiusEstimate) -> f64 {
    r.finite().unwrap_or(-1.0)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn axis_device(dim: usize) -> Result<LempertDevice> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[0] = Complex64::new(1.0, 0.0);
    geodesic_tangent(&BallTangent::new(BallPoint::origin(dim), v)?)
}

/// Sandwich bounds `tanh(R/2) ≤ μ ≤ tanh R` on hyperbolic discs.
pub fn scenario_sandwich(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("sandwich", "tanh(R/2) <= mu <= tanh(R) for planar subdomains", seed);
    let cfg = EstimatorConfig { seed, ..EstimatorConfig::default() };
    let mut regions: Vec<(String, PlanarRegion)> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&r| Ok((format!("r{r}"), PlanarRegion::hyper_ball(DiscPoint::origin(), r)?)))
        .collect::<Result<_>>()?;
    regions.push(("offcenter_a".into(), PlanarRegion::hyper_ball(DiscPoint::from_re_im(0.5, 0.2)?, 1.0)?));
    regions.push(("offcenter_b".into(), PlanarRegion::hyper_ball(DiscPoint::from_re_im(-0.7, 0.0)?, 0.5)?));
    for (name, region) in &regions {
        let report = sandwich_check_with_tolerance(region, &cfg, tol.sandwich)?;
        b.metric(format!("mu_{name}"), report.mu_est);
        b.metric(format!("radius_{name}"), radius_metric(&report.r_est));
        b.check(format!("sandwich_{name}"), report.pass);
        b.artifact(&report);
    }
    Ok(b.finish())
}

fn scale_map(rng: &mut impl Rng, max_scale: f64) -> MapSpec {
    // Centers near the origin and scales not too small, so that the contraction per
    // step stays close to `s` and the diameter survives the burn-in of the rate fit.
    let a = DiscPoint::guarded(disc_point_by_depth(rng, 0.5));
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let s = rng.random_range(0.5 * max_scale..=max_scale);
    MapSpec::DiscMobiusScale { m: MobiusDisc::new(a, theta), s }
}

/// Disc system whose `j`-th map is drawn from stream `j` of `seed`.
pub fn random_contraction_system(seed: u64, max_scale: f64) -> IfsSpec {
    IfsSpec::new(format!("contraction-{seed}"), Domain::Disc, move |j| scale_map(&mut stream_rng(seed, j as u64), max_scale))
}

fn contraction_target(m: &MapSpec) -> PlanarRegion {
    m.image_region()
        .and_then(|r| match r {
            crate::ifs::ImageRegion::Planar(p) => Some(p),
            crate::ifs::ImageRegion::Ball(_) => None,
        })
        .unwrap_or_else(PlanarRegion::unit_disc)
}

/// Systems mapping into discs of Bloch radius `≤ C` have constant limits at rate `tanh C`.
pub fn scenario_contraction(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("contraction", "IFS into subdomains of Bloch radius <= C have only constant limits", seed);
    let bound = 0.5f64.atanh();
    let est = EstimatorConfig { seed, ..EstimatorConfig::default() };
    let opts = ContractionOptions { rate_slack: tol.rate_slack, seed, ..ContractionOptions::default() };
    let run = RunOptions { tol_constant: tol.constant_diameter, ..RunOptions::default() };
    let probe = vec![Point::disc(c(-0.6, 0.1)), Point::disc(c(0.0, 0.0)), Point::disc(c(0.4, 0.5))];
    let (mut constant, mut fitted, mut worst_rate) = (0usize, 0usize, f64::NEG_INFINITY);
    for k in 0..50 {
        let ifs = random_contraction_system(seed.wrapping_add(k), 0.5);
        let gen = ifs.clone();
        let report = uniform_contraction_run(&ifs, &move |j| contraction_target(&gen.map(j)), bound, &probe, &run, &opts, &est)?;
        if report.run.classification.is_constant() {
            constant += 1;
        }
        if let Some(r) = report.rate_fit {
            fitted += 1;
            worst_rate = worst_rate.max(r);
        }
        b.check(format!("system_{k}"), report.pass);
        b.check(format!("rate_fitted_{k}"), report.rate_fit.is_some());
        if k == 0 {
            b.artifact(&report);
        }
    }
    b.metric("systems_constant", constant as f64);
    b.metric("systems_with_rate_fit", fitted as f64);
    b.metric("worst_rate_fit", worst_rate);
    b.metric("rate_bound", bound.tanh().ln());

    let one_step = IfsSpec::repeated("constant", Domain::Disc, MapSpec::Constant { point: Point::disc(c(0.2, 0.1)) });
    let report = compose_run(&one_step, &probe, &run)?;
    b.metric("constant_map_iterations", report.iterations_used as f64);
    b.check("constant_map_one_step", report.classification.is_constant() && report.iterations_used == 1);

    let identity = IfsSpec::repeated("identity", Domain::Disc, MapSpec::Identity);
    let control = uniform_contraction_run(&identity, &|_| PlanarRegion::unit_disc(), bound, &probe, &run, &opts, &est)?;
    b.metric("identity_control_nonconstant", f64::from(u8::from(control.run.classification.is_non_constant())));
    b.check("identity_control_fails", control.run.classification.is_non_constant() && !control.hypothesis_holds && !control.pass);
    b.artifact(&control);
    Ok(b.finish())
}

/// Ball system whose maps send `𝔹ⁿ` into `B(c_j, artanh s)` with `c_j ∈ B(center, 0.5)`, `artanh s ≤ 0.5`.
pub fn random_ball_system(seed: u64, center: &BallPoint) -> Result<IfsSpec> {
    let dim = center.dim();
    let centers = BallRegion::kobayashi_ball(center.clone(), 0.5)?;
    Ok(IfsSpec::new(format!("ball-contraction-{seed}"), Domain::Ball { dim }, move |j| {
        let mut rng = stream_rng(seed, j as u64);
        let cj = centers.sample_exact(&mut rng).expect("kobayashi balls sample exactly");
        let s = rng.random_range(0.05..0.5f64.tanh());
        MapSpec::BallContraction { unitary: Unitary::random(&mut rng, dim), s, center: cj }
    }))
}

/// Kobayashi balls are 1-Bloch with bound their radius, and IFS into them degenerate.
pub fn scenario_main_theorem(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("main_theorem", "IFS into a 1-Bloch subset of the ball have only constant limits", seed);
    let centers = [
        BallPoint::origin(2),
        BallPoint::from_reals(&[0.3, 0.0])?,
        BallPoint::new(vec![c(0.0, 0.2), c(-0.4, 0.1)])?,
    ];
    let cfg = DeviceSampleConfig { seed, ..DeviceSampleConfig::default() };
    let run = RunOptions { max_iter: 200, tol_constant: tol.constant_diameter, ..RunOptions::default() };
    let (mut worst_tracking, mut worst_diam, mut runs_constant) = (0.0f64, 0.0f64, 0usize);
    for (ci, center) in centers.iter().enumerate() {
        let x = BallRegion::kobayashi_ball(center.clone(), 1.0)?;
        let cert = one_bloch_certify(&x, &cfg)?;
        let bound = cert.certified_bound.unwrap_or(f64::INFINITY);
        b.metric(format!("certified_bound_c{ci}"), cert.certified_bound.unwrap_or(-1.0));
        b.check(
            format!("certified_bound_c{ci}"),
            bound >= tol.certified_lower && bound <= 1.0 + tol.certified_upper_slack + cfg.fattening_eps,
        );
        b.artifact(&cert);

        let mut rng = stream_rng(seed, 100 + ci as u64);
        let probe: Vec<Point> = (0..4).map(|_| Point::from(x.sample_exact(&mut rng).expect("exact sampler"))).collect();
        for k in 0..20 {
            let ifs = random_ball_system(seed.wrapping_add(1000 * ci as u64 + k), center)?;
            let report = compose_run(&ifs, &probe, &run)?;
            let final_diam = hyperbolic_diameter(&report.final_points)?;
            let inside = report.final_points.iter().all(|p| p.as_ball().is_some_and(|q| x.contains(q)));
            worst_diam = worst_diam.max(final_diam);
            if report.classification.is_constant() {
                runs_constant += 1;
            }
            b.check(format!("run_c{ci}_{k}"), report.classification.is_constant() && final_diam < tol.constant_diameter && inside);

            let (z, w) = (probe[0].as_ball().expect("ball"), probe[1].as_ball().expect("ball"));
            let rs = reduce_system(&ifs, z, w, 50)?;
            worst_tracking = worst_tracking.max(rs.tracking_residual);
            b.check(format!("tracking_c{ci}_{k}"), rs.tracking_residual < tol.tracking);
        }
    }
    b.metric("runs_constant", runs_constant as f64);
    b.metric("worst_final_diameter", worst_diam);
    b.metric("worst_tracking_residual", worst_tracking);
    Ok(b.finish())
}

/// The product system `(1 − 2^{−j}) z₁` has a non-constant limit into a set that is Bloch but not 1-Bloch.
pub fn scenario_product_counterexample(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("product_counterexample", "product maps (g_j(z1), 0) have the non-constant limit (c z1, 0)", seed);
    let ifs = example_product_ifs(2);
    let grid: Vec<Point> = [-0.8, -0.4, 0.1, 0.3, 0.7]
        .iter()
        .enumerate()
        .map(|(i, &x)| Ok(Point::from(BallPoint::new(vec![c(x, 0.05 * i as f64), c(0.1, -0.2)])?)))
        .collect::<Result<_>>()?;
    let report = compose_run(&ifs, &grid, &RunOptions { max_iter: 60, ..RunOptions::default() })?;
    let constant = product_limit_constant(60);
    let limit_error = grid
        .iter()
        .zip(&report.final_points)
        .map(|(p, q)| {
            let (p, q) = (p.coords(), q.coords());
            (q[0] - p[0] * constant).norm().max(q[1].norm())
        })
        .fold(0.0, f64::max);
    b.metric("product_constant", constant);
    b.metric("limit_error", limit_error);
    b.check("nonconstant", report.classification.is_non_constant());
    b.check("limit_matches", limit_error < tol.limit_constant);
    b.artifact(&report);

    let slice = BallRegion::product_slice(PlanarRegion::unit_disc(), 2);
    let cfg = DeviceSampleConfig { seed, ..DeviceSampleConfig::default() };
    let cert = one_bloch_certify_devices(&slice, &[axis_device(2)?], &cfg)?;
    b.metric("axis_projection_radius", radius_metric(&cert.max_radius));
    b.check("axis_projection_unbounded", cert.max_radius.is_unbounded());
    b.artifact(&cert);

    let thin = bloch_radius(&slice, &cfg.estimator)?;
    b.metric("slice_bloch_radius", radius_metric(&thin.radius_estimate));
    b.check("slice_is_thin", thin.radius_estimate.finite().is_some_and(|r| r <= cfg.fattening_eps));
    b.artifact(&thin);
    Ok(b.finish())
}

/// Value of `|1 − ζ|² / (1 − |ζ|²)`; horodiscs at `1` are its sublevel sets.
fn horo_level(z: Complex64) -> f64 {
    (c(1.0, 0.0) - z).norm_sqr() / ((1.0 - z.norm()) * (1.0 + z.norm()))
}

/// The horosphere difference `E(2) \ E(1)` is c-Bloch but not 1-Bloch.
pub fn scenario_horosphere(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("horosphere", "the horosphere difference E(2) \\ E(1) in the ball is c-Bloch but not 1-Bloch", seed);
    let x = BallRegion::horosphere_difference(2.0, 1.0, 2)?;
    let planar = PlanarRegion::difference(PlanarRegion::horodisc(c(1.0, 0.0), 2.0)?, PlanarRegion::horodisc(c(1.0, 0.0), 1.0)?);
    let axis = axis_device(2)?;
    let (mut compared, mut disagreements) = (0usize, 0usize);
    for i in 0..100 {
        let r = (i as f64 + 0.5) / 100.0;
        for k in 0..100 {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 100.0);
            let level = horo_level(z);
            if (level - 1.0).abs() <= tol.slice_margin || (level - 2.0).abs() <= tol.slice_margin {
                continue;
            }
            compared += 1;
            if x.contains_vector(&axis.phi_value(z)) != planar.contains_value(z) {
                disagreements += 1;
            }
        }
    }
    b.metric("grid_points_compared", compared as f64);
    b.metric("slice_disagreements", disagreements as f64);
    b.check("slice_identity", disagreements == 0 && compared > 0);

    let cfg = DeviceSampleConfig {
        num_devices: 50,
        seed,
        avoid_boundary_point: Some(BoundaryExclusion { point: vec![c(1.0, 0.0), c(0.0, 0.0)], radius: 0.1 }),
        ..DeviceSampleConfig::default()
    };
    let cert = c_bloch_certify(&x, &cfg)?;
    let kept = cert.per_device.len();
    b.metric("c_bloch_max_radius", radius_metric(&cert.max_radius));
    b.metric("c_bloch_doubled_max_radius", radius_metric(&cert.doubled_max_radius));
    b.metric("devices_kept", kept as f64);
    b.metric("devices_rejected", cert.rejected_devices as f64);
    b.check("c_bloch_finite_and_stable", cert.max_radius.finite().is_some() && cert.stability_flag && kept >= 50);
    b.artifact(&cert);

    let one = one_bloch_certify_devices(&x, &[axis], &DeviceSampleConfig { seed, ..DeviceSampleConfig::default() })?;
    b.metric("one_bloch_axis_radius", radius_metric(&one.max_radius));
    b.check("one_bloch_unbounded", one.max_radius.is_unbounded());
    b.artifact(&one);
    Ok(b.finish())
}

/// 1-Bloch with bound `C` gives Lipschitz constant `≤ tanh C`, and Lipschitz gives c-Bloch.
pub fn scenario_implications(seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    let mut b = Builder::new("implications", "1-Bloch implies Lipschitz with constant tanh C, and Lipschitz implies c-Bloch", seed);
    let cfg = DeviceSampleConfig { seed, ..DeviceSampleConfig::default() };
    let est = EstimatorConfig { seed, ..EstimatorConfig::default() };
    for r in [0.5, 1.0] {
        let x = BallRegion::kobayashi_ball(BallPoint::origin(2), r)?;
        let one = one_bloch_certify(&x, &cfg)?;
        let mu = lipschitz_constant(&x, &est)?;
        let cb = c_bloch_certify(&x, &cfg)?;
        let bound = one.certified_bound.map(f64::tanh);
        b.metric(format!("one_bloch_bound_r{r}"), one.certified_bound.unwrap_or(-1.0));
        b.metric(format!("lipschitz_r{r}"), mu.mu_estimate);
        b.metric(format!("c_bloch_r{r}"), radius_metric(&cb.max_radius));
        b.check(format!("lipschitz_below_tanh_c_r{r}"), bound.is_some_and(|t| mu.mu_estimate <= t + tol.lipschitz_slack));
        b.check(format!("c_bloch_finite_r{r}"), cb.max_radius.finite().is_some());
        b.artifact(&mu);
    }
    let ambient = BallRegion::Whole { dim: 2 };
    let mu = lipschitz_constant(&ambient, &est)?;
    let one = one_bloch_certify(&ambient, &cfg)?;
    b.metric("ambient_lipschitz", mu.mu_estimate);
    b.metric("ambient_one_bloch", radius_metric(&one.max_radius));
    Ok(b.finish())
}

/// Runs one scenario by id.
pub fn run_scenario(id: &str, seed: u64, tol: &Tolerances) -> Result<ScenarioResult> {
    match id {
        "sandwich" => scenario_sandwich(seed, tol),
        "contraction" => scenario_contraction(seed, tol),
        "main_theorem" => scenario_main_theorem(seed, tol),
        "product_counterexample" => scenario_product_counterexample(seed, tol),
        "horosphere" => scenario_horosphere(seed, tol),
        "implications" => scenario_implications(seed, tol),
        other => Err(GeoError::InvalidConfig(format!("unknown scenario {other:?}; expected one of {}", SCENARIO_IDS.join(", ")))),
    }
}

/// `scenario_id,pass,statement_ref` table, one row per scenario.
pub fn summary_csv(results: &[ScenarioResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| GeoError::InvalidConfig(e.to_string());
    w.write_record(["scenario_id", "pass", "failed_checks", "statement_ref"]).map_err(err)?;
    for r in results {
        w.write_record([r.scenario_id.as_str(), if r.pass { "PASS" } else { "FAIL" }, &r.failed_checks.join(";"), &r.statement_ref])
            .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| GeoError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Long-format `scenario_id,metric,value` table.
pub fn metrics_csv(results: &[ScenarioResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| GeoError::InvalidConfig(e.to_string());
    w.write_record(["scenario_id", "metric", "value"]).map_err(err)?;
    for r in results {
        for m in &r.metrics {
            w.write_record([r.scenario_id.as_str(), &m.name, &m.value.to_string()]).map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| GeoError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
