//! Holomorphic iterated function systems `F_j = f_j ∘ … ∘ f_1` on the disc and
//! the ball: a closed catalogue of maps, composition runs with a probe-set
//! convergence proxy, Schwarz–Pick contraction checks and the reduction of a
//! ball system to a disc system along complex geodesics.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ball::{distance_unchecked, geodesic_through, involution, BallPoint, BallRegion, CVector, DeviceDescriptor, LempertDevice, Unitary};
use crate::blochness::{lipschitz_constant, projected_bloch_radius, BlochReport, DeviceSampleConfig, EstimatorConfig, RadiusEstimate};
use crate::disc::{poincare_distance, DiscPoint, MobiusDisc, PlanarRegion};
use crate::error::{GeoError, Result};
use crate::point::Point;
use crate::sampling::{disc_point_by_depth, stream, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Disc,
    Ball { dim: usize },
}

impl Domain {
    pub fn of(p: &Point) -> Domain {
        match p {
            Point::Disc(_) => Domain::Disc,
            Point::Ball(b) => Domain::Ball { dim: b.dim() },
        }
    }
}

/// The map catalogue. Every member is a holomorphic self-map of its domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    Constant { point: Point },
    /// `ζ ↦ m(sζ)`, image `B(m(0), artanh s)`.
    DiscMobiusScale { m: MobiusDisc, s: f64 },
    /// `ζ ↦ (1 − 2^{−j}) ζ`.
    DiscAffineShrink { j: u32 },
    /// `z ↦ φ_c(s U z)`, image `B(c, artanh s)`.
    BallContraction { unitary: Unitary, s: f64, center: BallPoint },
    /// `(z₁, …, z_n) ↦ (g(z₁), 0, …, 0)` for a disc map `g`.
    ProductEmbed { inner: Box<MapSpec>, dim: usize },
    /// Applied first to last.
    Composite { maps: Vec<MapSpec> },
}

/// Owned region of either model domain.
#[derive(Clone, Debug)]
pub enum ImageRegion {
    Planar(PlanarRegion),
    Ball(BallRegion),
}

impl ImageRegion {
    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (ImageRegion::Planar(r), Point::Disc(z)) => r.contains(z),
            (ImageRegion::Ball(r), Point::Ball(z)) => r.contains(z),
            _ => false,
        }
    }
}

fn shrink_factor(j: u32) -> f64 {
    1.0 - 2f64.powi(-(j as i32))
}

impl MapSpec {
    pub fn disc_mobius_scale(m: MobiusDisc, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(GeoError::InvalidConfig(format!("scale must lie in (0, 1], got {s}")));
        }
        Ok(MapSpec::DiscMobiusScale { m, s })
    }

    pub fn ball_contraction(unitary: Unitary, s: f64, center: BallPoint) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(GeoError::InvalidConfig(format!("scale must lie in (0, 1), got {s}")));
        }
        if unitary.dim() != center.dim() {
            return Err(GeoError::DimensionMismatch(unitary.dim(), center.dim()));
        }
        Ok(MapSpec::BallContraction { unitary, s, center })
    }

    pub fn product_embed(inner: MapSpec, dim: usize) -> Self {
        MapSpec::ProductEmbed { inner: Box::new(inner), dim }
    }

    fn disc(&self, z: Complex64) -> Result<Complex64> {
        match self {
            MapSpec::Identity => Ok(z),
            MapSpec::Constant { point: Point::Disc(p) } => Ok(p.value()),
            MapSpec::DiscMobiusScale { m, s } => Ok(m.apply_value(z * *s)),
            MapSpec::DiscAffineShrink { j } => Ok(z * shrink_factor(*j)),
            MapSpec::Composite { maps } => maps.iter().try_fold(z, |acc, m| m.disc(acc)),
            _ => Err(GeoError::DomainMismatch),
        }
    }

    fn ball(&self, v: &CVector) -> Result<CVector> {
        match self {
            MapSpec::Identity => Ok(v.clone()),
            MapSpec::Constant { point: Point::Ball(p) } if p.dim() == v.len() => Ok(p.value().clone()),
            MapSpec::BallContraction { unitary, s, center } if center.dim() == v.len() => {
                Ok(involution(center.value(), &(unitary.apply(v) * Complex64::from(*s))))
            }
            MapSpec::ProductEmbed { inner, dim } if *dim == v.len() => {
                let mut out = CVector::zeros(*dim);
                out[0] = inner.disc(v[0])?;
                Ok(out)
            }
            MapSpec::Composite { maps } => maps.iter().try_fold(v.clone(), |acc, m| m.ball(&acc)),
            _ => Err(GeoError::DomainMismatch),
        }
    }

    /// Evaluates the catalogue formula at `p`.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        match p {
            Point::Disc(z) => Ok(Point::disc(self.disc(z.value())?)),
            Point::Ball(z) => Ok(Point::ball(self.ball(z.value())?)),
        }
    }

    /// A region containing the image (equal to it where the kind has an exact description).
    pub fn image_region(&self) -> Option<ImageRegion> {
        match self {
            MapSpec::Identity | MapSpec::Constant { .. } => None,
            MapSpec::DiscMobiusScale { m, s } => Some(ImageRegion::Planar(if *s >= 1.0 {
                PlanarRegion::unit_disc()
            } else {
                PlanarRegion::hyper_ball(m.apply(&DiscPoint::origin()), s.atanh()).ok()?
            })),
            MapSpec::DiscAffineShrink { j } => {
                Some(ImageRegion::Planar(PlanarRegion::hyper_ball(DiscPoint::origin(), shrink_factor(*j).atanh()).ok()?))
            }
            MapSpec::BallContraction { s, center, .. } => {
                Some(ImageRegion::Ball(BallRegion::kobayashi_ball(center.clone(), s.atanh()).ok()?))
            }
            MapSpec::ProductEmbed { inner, dim } => {
                let planar = match inner.image_region() {
                    Some(ImageRegion::Planar(p)) => p,
                    _ => PlanarRegion::unit_disc(),
                };
                Some(ImageRegion::Ball(BallRegion::product_slice(planar, *dim)))
            }
            MapSpec::Composite { maps } => maps.last().and_then(|m| m.image_region()),
        }
    }
}

/// Free-function form of [`MapSpec::apply`].
pub fn apply_map(m: &MapSpec, p: &Point) -> Result<Point> {
    m.apply(p)
}

/// A generator `j ↦ f_j` (indices start at 1) on a fixed domain.
#[derive(Clone)]
pub struct IfsSpec {
    pub label: String,
    pub domain: Domain,
    generator: Arc<dyn Fn(usize) -> MapSpec + Send + Sync>,
}

impl fmt::Debug for IfsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IfsSpec").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

impl IfsSpec {
    pub fn new(label: impl Into<String>, domain: Domain, generator: impl Fn(usize) -> MapSpec + Send + Sync + 'static) -> Self {
        Self { label: label.into(), domain, generator: Arc::new(generator) }
    }

    /// The same map at every step.
    pub fn repeated(label: impl Into<String>, domain: Domain, map: MapSpec) -> Self {
        Self::new(label, domain, move |_| map.clone())
    }

    pub fn map(&self, j: usize) -> MapSpec {
        (self.generator)(j)
    }
}

/// `f_j = (g_j(z₁), 0, …, 0)` with `g_j(ζ) = (1 − 2^{−j}) ζ`.
pub fn example_product_ifs(dim: usize) -> IfsSpec {
    IfsSpec::new("product-shrink", Domain::Ball { dim }, move |j| {
        MapSpec::product_embed(MapSpec::DiscAffineShrink { j: j as u32 }, dim)
    })
}

/// Partial product `Π_{k=1}^{terms} (1 − 2^{−k})`.
pub fn product_limit_constant(terms: u32) -> f64 {
    (1..=terms).map(shrink_factor).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_iter: usize,
    pub tol_constant: f64,
    pub tol_stable: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol_constant: 1e-8, tol_stable: 1e-6 }
    }
}

/// Steps over which the diameter must stay put for a non-constant verdict.
pub const STABILITY_WINDOW: usize = 20;
/// Diameters below this never count as a non-constant limit.
pub const NONCONSTANT_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Constant { limit: Point },
    NonConstant { stable_diameter: f64, limit_samples: Vec<Point> },
    Undecided,
}

impl Classification {
    pub fn is_constant(&self) -> bool {
        matches!(self, Classification::Constant { .. })
    }

    pub fn is_non_constant(&self) -> bool {
        matches!(self, Classification::NonConstant { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classification::Constant { .. } => "constant",
            Classification::NonConstant { .. } => "non_constant",
            Classification::Undecided => "undecided",
        }
    }
}

/// Outcome of iterating one trajectory of `F_j` on a probe set.
///
/// Only the full sequence is observed; subsequential limits are not enumerated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub probe_points: Vec<Point>,
    pub diam_trace: Vec<(usize, f64)>,
    pub classification: Classification,
    pub iterations_used: usize,
    pub final_points: Vec<Point>,
    /// Largest step-to-step increase of the diameter (≤ 0 up to rounding by Schwarz–Pick).
    pub max_diameter_increase: f64,
}

fn distance(a: &Point, b: &Point) -> Result<f64> {
    match (a, b) {
        (Point::Disc(z), Point::Disc(w)) => Ok(poincare_distance(z, w)),
        (Point::Ball(z), Point::Ball(w)) if z.dim() == w.dim() => Ok(distance_unchecked(z.value(), w.value())),
        _ => Err(GeoError::DomainMismatch),
    }
}

/// Largest pairwise hyperbolic distance.
pub fn hyperbolic_diameter(points: &[Point]) -> Result<f64> {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(distance(p, q)?);
        }
    }
    Ok(d)
}

fn check_probe(domain: Domain, probe: &[Point]) -> Result<()> {
    if probe.len() < 2 {
        return Err(GeoError::InvalidConfig("a probe set needs at least two points".into()));
    }
    for (i, p) in probe.iter().enumerate() {
        if Domain::of(p) != domain {
            return Err(GeoError::DomainMismatch);
        }
        if probe[..i].contains(p) {
            return Err(GeoError::InvalidConfig("probe points must be pairwise distinct".into()));
        }
    }
    Ok(())
}

/// Iterates `F_j` on the probe set and classifies the trajectory.
///
/// Stops early once the probe diameter drops below `tol_constant`; otherwise
/// runs all `max_iter` steps and declares a non-constant limit when the
/// diameter stayed above the floor with relative change below `tol_stable`
/// over the last [`STABILITY_WINDOW`] steps.
pub fn compose_run(ifs: &IfsSpec, probe: &[Point], opts: &RunOptions) -> Result<RunReport> {
    check_probe(ifs.domain, probe)?;
    let mut points = probe.to_vec();
    let mut trace = vec![(0, hyperbolic_diameter(&points)?)];
    let mut max_increase = f64::NEG_INFINITY;
    let mut classification = Classification::Undecided;
    for j in 1..=opts.max_iter {
        let f = ifs.map(j);
        points = points.iter().map(|p| f.apply(p)).collect::<Result<_>>()?;
        let d = hyperbolic_diameter(&points)?;
        max_increase = max_increase.max(d - trace.last().map_or(d, |t| t.1));
        trace.push((j, d));
        if d < opts.tol_constant {
            classification = Classification::Constant { limit: points[0].clone() };
            break;
        }
    }
    let iterations = trace.len() - 1;
    if !classification.is_constant() && iterations >= STABILITY_WINDOW {
        let (_, last) = trace[iterations];
        let window = &trace[iterations - STABILITY_WINDOW..];
        let stable = last > NONCONSTANT_FLOOR && window.iter().all(|(_, d)| ((d - last) / last).abs() < opts.tol_stable);
        if stable {
            classification = Classification::NonConstant { stable_diameter: last, limit_samples: points.clone() };
        }
    }
    Ok(RunReport {
        label: ifs.label.clone(),
        probe_points: probe.to_vec(),
        diam_trace: trace,
        classification,
        iterations_used: iterations,
        final_points: points,
        max_diameter_increase: if max_increase.is_finite() { max_increase } else { 0.0 },
    })
}

/// Two-column CSV (`j,diameter`) of a run's diameter trace.
pub fn diam_trace_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| GeoError::InvalidConfig(e.to_string());
    w.write_record(["j", "diameter"]).map_err(io)?;
    for (j, d) in &report.diam_trace {
        w.write_record([j.to_string(), d.to_string()]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| GeoError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

// ---------------------------------------------------------------------------
// contraction checks

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchwarzPickReport {
    pub mu: f64,
    pub pairs: usize,
    pub max_slack: f64,
    pub pass: bool,
}

/// Allowed excess in `k(gζ, gη) ≤ μ(U) k(ζ, η)`.
pub const SCHWARZ_PICK_SLACK: f64 = 1e-9;

/// Largest `k(gζ, gη) − μ(U) k(ζ, η)` over seeded pairs, for a disc map `g` into `U`.
pub fn schwarz_pick_check(g: &MapSpec, target: &PlanarRegion, pairs: usize, seed: u64, est: &EstimatorConfig) -> Result<SchwarzPickReport> {
    let mu = lipschitz_constant(target, est)?.mu_estimate;
    let mut rng = stream_rng(seed, stream::PAIRS);
    let mut max_slack = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let zeta = DiscPoint::guarded(disc_point_by_depth(&mut rng, 3.0));
        let eta = DiscPoint::guarded(disc_point_by_depth(&mut rng, 3.0));
        let gz = DiscPoint::guarded(g.disc(zeta.value())?);
        let ge = DiscPoint::guarded(g.disc(eta.value())?);
        for image in [gz, ge] {
            if !target.contains(&image) {
                return Err(GeoError::ContainmentViolation(format!("{image} is outside {}", target.describe())));
            }
        }
        max_slack = max_slack.max(poincare_distance(&gz, &ge) - mu * poincare_distance(&zeta, &eta));
    }
    Ok(SchwarzPickReport { mu, pairs, max_slack, pass: max_slack <= SCHWARZ_PICK_SLACK })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionOptions {
    pub burn_in: usize,
    /// Added to `log(tanh C)` when testing the fitted rate.
    pub rate_slack: f64,
    /// Random disc points whose `f_j`-images are checked against `W_j`, per step.
    pub containment_samples: usize,
    pub seed: u64,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self { burn_in: 10, rate_slack: 1e-3, containment_samples: 16, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub run: RunReport,
    pub bloch_bound: f64,
    /// Least-squares slope of `log diam` after the burn-in; absent when too few positive diameters remain.
    pub rate_fit: Option<f64>,
    pub rate_bound: f64,
    pub rate_ok: bool,
    /// Every target `W_j` had Bloch radius ≤ C.
    pub hypothesis_holds: bool,
    pub max_target_radius: RadiusEstimate,
    /// The run did not reach a constant limit.
    pub counterexample: bool,
    pub pass: bool,
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Runs a disc IFS whose maps land in targets `W_j` of Bloch radius ≤ `bloch_bound`
/// and checks for a constant limit with geometric rate `tanh C`.
pub fn uniform_contraction_run(
    ifs: &IfsSpec,
    targets: &dyn Fn(usize) -> PlanarRegion,
    bloch_bound: f64,
    probe: &[Point],
    run: &RunOptions,
    opts: &ContractionOptions,
    est: &EstimatorConfig,
) -> Result<ContractionReport> {
    if ifs.domain != Domain::Disc {
        return Err(GeoError::DomainMismatch);
    }
    let report = compose_run(ifs, probe, run)?;
    let mut rng = stream_rng(opts.seed, stream::PAIRS);
    let mut max_radius: f64 = 0.0;
    for j in 1..=report.iterations_used {
        let f = ifs.map(j);
        let target = targets(j);
        let samples: Vec<Complex64> = (0..opts.containment_samples).map(|_| disc_point_by_depth(&mut rng, 4.0)).collect();
        for z in samples.into_iter().chain(probe.iter().filter_map(|p| p.as_disc().map(|d| d.value()))) {
            let image = f.disc(z)?;
            if !target.contains_value(image) {
                return Err(GeoError::ContainmentViolation(format!("f_{j}({z}) = {image} is outside {}", target.describe())));
            }
        }
        let r = match target.exact_bloch_radius() {
            Some(r) => r,
            None => crate::blochness::bloch_radius(&target, est)?.radius_estimate.as_f64(),
        };
        max_radius = max_radius.max(r);
    }
    let hypothesis_holds = max_radius <= bloch_bound + 1e-12;
    let fit_points: Vec<(f64, f64)> = report
        .diam_trace
        .iter()
        .filter(|(j, d)| *j > opts.burn_in && *d > 0.0)
        .map(|(j, d)| (*j as f64, d.ln()))
        .collect();
    let rate_fit = slope(&fit_points);
    let rate_bound = bloch_bound.tanh().ln();
    let rate_ok = rate_fit.is_none_or(|r| r <= rate_bound + opts.rate_slack);
    let constant = report.classification.is_constant();
    Ok(ContractionReport {
        bloch_bound,
        rate_fit,
        rate_bound,
        rate_ok,
        hypothesis_holds,
        max_target_radius: if max_radius.is_finite() { RadiusEstimate::Finite(max_radius) } else { RadiusEstimate::Unbounded },
        counterexample: !constant,
        pass: constant && rate_ok && hypothesis_holds,
        run: report,
    })
}

// ---------------------------------------------------------------------------
// reduction along complex geodesics

/// The disc system `g_j = ρ̃_{φ_{j+1}} ∘ f_j ∘ φ_j` built from a ball system and two points.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedSystem {
    pub label: String,
    pub devices: Vec<DeviceDescriptor>,
    /// `t_j` with `φ_j(t_j) = F_{j−1}(w)`.
    pub t_params: Vec<f64>,
    /// `ρ̃_{φ_{j+1}}(F_j(z))`, `j = 1..`.
    pub tracked_zero: Vec<Complex64>,
    /// `ρ̃_{φ_{j+1}}(F_j(w))`.
    pub tracked_t: Vec<Complex64>,
    /// `g_j ∘ … ∘ g_1(0)`.
    pub composed_zero: Vec<Complex64>,
    /// `g_j ∘ … ∘ g_1(t_1)`.
    pub composed_t: Vec<Complex64>,
    pub tracking_residual: f64,
    /// Largest of `‖φ_j(0) − F_{j−1}(z)‖` and `‖φ_j(t_j) − F_{j−1}(w)‖`.
    pub pin_residual: f64,
    pub orbit_z: Vec<BallPoint>,
    pub orbit_w: Vec<BallPoint>,
    pub maps: Vec<MapSpec>,
    pub steps_completed: usize,
    /// The orbits merged numerically before all steps were taken.
    pub collapsed: bool,
    #[serde(skip)]
    lempert: Vec<LempertDevice>,
}

impl ReducedSystem {
    pub fn device(&self, j: usize) -> &LempertDevice {
        &self.lempert[j - 1]
    }

    /// `g_j(ζ)` for `1 ≤ j ≤ steps_completed`.
    pub fn reduced_map(&self, j: usize, zeta: Complex64) -> Result<Complex64> {
        if j == 0 || j > self.steps_completed {
            return Err(GeoError::InvalidConfig(format!("reduced map index {j} out of range")));
        }
        let x = self.lempert[j - 1].phi_value(zeta);
        let y = self.maps[j - 1].ball(&x)?;
        Ok(self.lempert[j].left_inverse_value(&y))
    }
}

/// Builds the reduced disc system along the orbits of `z` and `w`.
pub fn reduce_system(ifs: &IfsSpec, z: &BallPoint, w: &BallPoint, steps: usize) -> Result<ReducedSystem> {
    let Domain::Ball { dim } = ifs.domain else {
        return Err(GeoError::DomainMismatch);
    };
    if z.dim() != dim || w.dim() != dim {
        return Err(GeoError::DimensionMismatch(dim, z.dim()));
    }
    let first = geodesic_through(z, w)?;
    let mut lempert = vec![first];
    let mut t_params = vec![lempert[0].t_param()];
    let (mut fz, mut fw) = (z.value().clone(), w.value().clone());
    let mut orbit_z = vec![z.clone()];
    let mut orbit_w = vec![w.clone()];
    let mut maps = Vec::new();
    let mut collapsed = false;
    for j in 1..=steps {
        let f = ifs.map(j);
        let nz = f.ball(&fz)?;
        let nw = f.ball(&fw)?;
        let next = match geodesic_through(&BallPoint::guarded(nz.clone()), &BallPoint::guarded(nw.clone())) {
            Ok(d) => d,
            Err(GeoError::DegenerateGeodesic) => {
                collapsed = true;
                break;
            }
            Err(e) => return Err(e),
        };
        t_params.push(next.t_param());
        lempert.push(next);
        maps.push(f);
        fz = nz;
        fw = nw;
        orbit_z.push(BallPoint::guarded(fz.clone()));
        orbit_w.push(BallPoint::guarded(fw.clone()));
    }
    let steps_completed = maps.len();
    let mut rs = ReducedSystem {
        label: ifs.label.clone(),
        devices: lempert.iter().map(|d| d.descriptor()).collect(),
        t_params,
        tracked_zero: Vec::with_capacity(steps_completed),
        tracked_t: Vec::with_capacity(steps_completed),
        composed_zero: Vec::with_capacity(steps_completed),
        composed_t: Vec::with_capacity(steps_completed),
        tracking_residual: 0.0,
        pin_residual: 0.0,
        orbit_z,
        orbit_w,
        maps,
        steps_completed,
        collapsed,
        lempert,
    };
    let (mut at_zero, mut at_t) = (Complex64::new(0.0, 0.0), Complex64::new(rs.t_params[0], 0.0));
    let mut tracking: f64 = 0.0;
    let mut pins: f64 = 0.0;
    for j in 1..=steps_completed {
        at_zero = rs.reduced_map(j, at_zero)?;
        at_t = rs.reduced_map(j, at_t)?;
        let tz = rs.lempert[j].left_inverse_value(rs.orbit_z[j].value());
        let tw = rs.lempert[j].left_inverse_value(rs.orbit_w[j].value());
        tracking = tracking.max((at_zero - tz).norm()).max((at_t - tw).norm());
        rs.tracked_zero.push(tz);
        rs.tracked_t.push(tw);
        rs.composed_zero.push(at_zero);
        rs.composed_t.push(at_t);
    }
    for (j, d) in rs.lempert.iter().enumerate() {
        let p0 = d.phi_value(Complex64::new(0.0, 0.0));
        let pt = d.phi_value(Complex64::new(d.t_param(), 0.0));
        pins = pins.max((p0 - rs.orbit_z[j].value()).norm()).max((pt - rs.orbit_w[j].value()).norm());
    }
    rs.tracking_residual = tracking;
    rs.pin_residual = pins;
    Ok(rs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBound {
    pub step: usize,
    pub radius: RadiusEstimate,
    pub report: BlochReport,
}

/// Bloch radius of `ρ̃_{φ_{j+1}}(X)` at every step of a reduced system.
pub fn reduced_image_bound(rs: &ReducedSystem, region: &BallRegion, cfg: &DeviceSampleConfig) -> Result<Vec<StepBound>> {
    reduced_image_bound_per_step(rs, &|_| region.clone(), cfg)
}

/// As [`reduced_image_bound`] with a target region that may change with the step.
pub fn reduced_image_bound_per_step(
    rs: &ReducedSystem,
    region: &dyn Fn(usize) -> BallRegion,
    cfg: &DeviceSampleConfig,
) -> Result<Vec<StepBound>> {
    (1..=rs.steps_completed)
        .map(|j| {
            let x = region(j);
            for p in [&rs.orbit_z[j], &rs.orbit_w[j]] {
                if !x.contains(p) {
                    return Err(GeoError::ContainmentViolation(format!("F_{j} orbit point {p} is outside {}", x.describe())));
                }
            }
            let report = projected_bloch_radius(&x, &rs.lempert[j], cfg)?;
            Ok(StepBound { step: j, radius: report.radius_estimate, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_examples() {
        let half = MapSpec::disc_mobius_scale(MobiusDisc::identity(), 0.5).unwrap();
        let out = half.apply(&Point::disc(Complex64::new(0.4, 0.0))).unwrap();
        assert!((out.coords()[0] - Complex64::new(0.2, 0.0)).norm() < 1e-16);

        let ball = MapSpec::ball_contraction(Unitary::identity(2), 0.5, BallPoint::origin(2)).unwrap();
        let out = ball.apply(&Point::ball(CVector::from_vec(vec![Complex64::new(0.4, 0.0), Complex64::new(0.0, 0.0)]))).unwrap();
        assert!((out.coords()[0] - Complex64::new(0.2, 0.0)).norm() < 1e-16);
        assert_eq!(out.coords()[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let half = MapSpec::disc_mobius_scale(MobiusDisc::identity(), 0.5).unwrap();
        assert_eq!(half.apply(&Point::ball(CVector::zeros(2))), Err(GeoError::DomainMismatch));
        let embed = MapSpec::product_embed(MapSpec::Identity, 3);
        assert_eq!(embed.apply(&Point::ball(CVector::zeros(2))), Err(GeoError::DomainMismatch));
        assert!(MapSpec::disc_mobius_scale(MobiusDisc::identity(), 1.5).is_err());
    }

    #[test]
    fn composite_applies_in_order() {
        let shift = MobiusDisc::from_origin(DiscPoint::from_re_im(0.5, 0.0).unwrap());
        let a = MapSpec::disc_mobius_scale(shift, 1.0).unwrap();
        let b = MapSpec::DiscAffineShrink { j: 1 };
        let both = MapSpec::Composite { maps: vec![a.clone(), b.clone()] };
        let p = Point::disc(Complex64::new(0.0, 0.0));
        assert_eq!(both.apply(&p).unwrap(), b.apply(&a.apply(&p).unwrap()).unwrap());
        assert!((both.apply(&p).unwrap().coords()[0].re - 0.25).abs() < 1e-16);
    }

    #[test]
    fn map_specs_round_trip_through_json() {
        let m = MapSpec::Composite {
            maps: vec![
                MapSpec::product_embed(MapSpec::DiscAffineShrink { j: 3 }, 2),
                MapSpec::ball_contraction(Unitary::identity(2), 0.3, BallPoint::from_reals(&[0.1, 0.2]).unwrap()).unwrap(),
            ],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MapSpec>(&text).unwrap(), m);
    }

    #[test]
    fn product_constant_partial_products() {
        assert!((product_limit_constant(60) - 0.288_788_095_086_602_4).abs() < 1e-15);
        assert!((product_limit_constant(60) - product_limit_constant(200)).abs() < 1e-16);
    }
}
