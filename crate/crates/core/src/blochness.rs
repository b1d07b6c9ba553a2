//! Bloch radius and hyperbolic Lipschitz estimators, the sandwich check and
//! the 1-Bloch / c-Bloch certifiers driven by sampled Lempert devices.
//!
//! Every estimate here is an inner approximation over a finite, seeded sample.
//! Reports carry their sample sizes and never claim more than "held on the sample".

use std::f64::consts::TAU;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::{
    geodesic_through, geodesic_tangent, involution, involution_differential, kobayashi_metric, BallPoint,
    BallRegion, BallTangent, CVector, DeviceDescriptor, LempertDevice,
};
use crate::disc::{one_minus_sq, DiscPoint, DiscTangent, PlanarRegion};
use crate::error::{GeoError, Result};
use crate::point::Point;
use crate::sampling::{ball_point_by_depth, disc_point_by_depth, stream, stream_rng, uniform_in_ball, unit_vector};

/// Concentric shells probed by every containment test.
const SHELLS: usize = 6;
/// Evaluations allowed to the pattern search that polishes the best center.
const REFINE_BUDGET: usize = 240;
/// Fiber depths scanned by the projected-set membership test: towards the
/// boundary of the fiber down to `1 − f = 2^{−40}`, towards its center down to `f = 2^{−10}`.
const FIBER_OUTER_LEVELS: i32 = 80;
const FIBER_INNER_LEVELS: i32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub center_samples: usize,
    pub radius_tolerance: f64,
    pub boundary_samples: usize,
    pub radius_cap: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { center_samples: 256, radius_tolerance: 1e-3, boundary_samples: 64, radius_cap: 6.0, seed: 1 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.center_samples == 0 || self.boundary_samples == 0 {
            return Err(GeoError::InvalidConfig("sample counts must be at least 1".into()));
        }
        if !(self.radius_tolerance > 0.0 && self.radius_tolerance.is_finite()) {
            return Err(GeoError::InvalidConfig("radius_tolerance must be positive".into()));
        }
        if !(self.radius_cap > 0.0 && self.radius_cap.is_finite()) {
            return Err(GeoError::InvalidConfig("radius_cap must be positive".into()));
        }
        Ok(())
    }

    /// Same configuration with every sample count doubled.
    pub fn doubled(&self) -> Self {
        Self { center_samples: 2 * self.center_samples, boundary_samples: 2 * self.boundary_samples, ..self.clone() }
    }
}

/// A radius that is either a finite estimate or beyond the configured cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadiusEstimate {
    Finite(f64),
    Unbounded,
}

impl RadiusEstimate {
    fn from_radius(r: f64, cap: f64) -> Self {
        if r >= cap {
            RadiusEstimate::Unbounded
        } else {
            RadiusEstimate::Finite(r)
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, RadiusEstimate::Unbounded)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            RadiusEstimate::Finite(r) => Some(*r),
            RadiusEstimate::Unbounded => None,
        }
    }

    /// Value usable in comparisons, `+∞` when unbounded.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for RadiusEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusEstimate::Finite(r) => write!(f, "{r}"),
            RadiusEstimate::Unbounded => write!(f, "UNBOUNDED"),
        }
    }
}

impl Serialize for RadiusEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RadiusEstimate::Finite(r) => s.serialize_f64(*r),
            RadiusEstimate::Unbounded => s.serialize_str("UNBOUNDED"),
        }
    }
}

impl<'de> Deserialize<'de> for RadiusEstimate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(RadiusEstimate::Finite(r)),
            Raw::Tag(t) if t == "UNBOUNDED" => Ok(RadiusEstimate::Unbounded),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unexpected radius tag {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochReport {
    pub radius_estimate: RadiusEstimate,
    pub radius_cap: f64,
    pub witness_center: Option<Point>,
    pub witness_radius: f64,
    /// Candidate centers examined.
    pub samples_used: usize,
    /// `(samples_used, running estimate)` after every improvement.
    pub monotone_trace: Vec<(usize, f64)>,
    /// No member of the region was found among the candidates.
    pub empty: bool,
}

/// Borrowed region of either model domain.
#[derive(Clone, Copy, Debug)]
pub enum RegionRef<'a> {
    Planar(&'a PlanarRegion),
    Ball(&'a BallRegion),
}

impl<'a> From<&'a PlanarRegion> for RegionRef<'a> {
    fn from(r: &'a PlanarRegion) -> Self {
        RegionRef::Planar(r)
    }
}

impl<'a> From<&'a BallRegion> for RegionRef<'a> {
    fn from(r: &'a BallRegion) -> Self {
        RegionRef::Ball(r)
    }
}

// ---------------------------------------------------------------------------
// containment search

/// A domain together with a membership test and a way to walk hyperbolic
/// distances away from a point.
trait Probe: Sync {
    type P: Clone;
    fn member(&self, p: &Self::P) -> bool;
    fn directions(&self) -> usize;
    /// Point at distance `s` from `center`, direction `k` of shell `shell`.
    fn offset(&self, center: &Self::P, shell: usize, k: usize, s: f64) -> Self::P;
    fn moves(&self) -> usize;
    /// Pattern-search move `k` of length `s`.
    fn step(&self, center: &Self::P, k: usize, s: f64) -> Self::P;
    fn to_point(&self, p: &Self::P) -> Point;
}

struct PlanarProbe<F> {
    test: F,
    directions: usize,
}

impl<F: Fn(Complex64) -> bool + Sync> Probe for PlanarProbe<F> {
    type P = Complex64;

    fn member(&self, p: &Complex64) -> bool {
        p.norm() < 1.0 && (self.test)(*p)
    }

    fn directions(&self) -> usize {
        self.directions
    }

    fn offset(&self, center: &Complex64, shell: usize, k: usize, s: f64) -> Complex64 {
        // stagger the shells so their directions interleave
        let stagger = (shell as f64 * 0.618_033_988_749_895).fract();
        let angle = TAU * (k as f64 + stagger) / self.directions as f64;
        let c = *center;
        let w = Complex64::from_polar(s.tanh(), angle);
        (w + c) / (1.0 + c.conj() * w)
    }

    fn moves(&self) -> usize {
        8
    }

    fn step(&self, center: &Complex64, k: usize, s: f64) -> Complex64 {
        let c = *center;
        let w = Complex64::from_polar(s.tanh(), TAU * k as f64 / 8.0);
        (w + c) / (1.0 + c.conj() * w)
    }

    fn to_point(&self, p: &Complex64) -> Point {
        Point::disc(*p)
    }
}

struct BallProbe<'a> {
    region: &'a BallRegion,
    directions: Vec<CVector>,
    moves: Vec<CVector>,
}

impl<'a> BallProbe<'a> {
    fn new(region: &'a BallRegion, count: usize, seed: u64, stream_base: u64) -> Self {
        let n = region.dim();
        let mut moves = Vec::with_capacity(4 * n);
        for k in 0..n {
            for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)] {
                let mut e = CVector::zeros(n);
                e[k] = phase;
                moves.push(e);
            }
        }
        let mut directions = moves.clone();
        let mut rng = stream_rng(seed, stream_base + stream::DIRECTIONS);
        while directions.len() < count.max(moves.len()) {
            directions.push(CVector::from_vec(unit_vector(&mut rng, n)));
        }
        Self { region, directions, moves }
    }
}

impl Probe for BallProbe<'_> {
    type P = CVector;

    fn member(&self, p: &CVector) -> bool {
        self.region.contains_vector(p)
    }

    fn directions(&self) -> usize {
        self.directions.len()
    }

    fn offset(&self, center: &CVector, shell: usize, k: usize, s: f64) -> CVector {
        let phase = Complex64::from_polar(s.tanh(), TAU * (shell as f64 * 0.618_033_988_749_895).fract());
        involution(center, &(&self.directions[k] * phase))
    }

    fn moves(&self) -> usize {
        self.moves.len()
    }

    fn step(&self, center: &CVector, k: usize, s: f64) -> CVector {
        involution(center, &(&self.moves[k] * Complex64::from(s.tanh())))
    }

    fn to_point(&self, p: &CVector) -> Point {
        Point::ball(p.clone())
    }
}

struct Search<'a, S: Probe> {
    probe: &'a S,
    cap: f64,
    tol: f64,
}

impl<S: Probe> Search<'_, S> {
    /// Sampled test of `B(center, r) ⊂ X` on concentric shells.
    fn contained(&self, center: &S::P, r: f64) -> bool {
        // outermost shell first: it is the one most likely to leave the region
        for shell in (1..=SHELLS).rev() {
            let s = r * shell as f64 / SHELLS as f64;
            for k in 0..self.probe.directions() {
                if !self.probe.member(&self.probe.offset(center, shell, k, s)) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest sampled radius at `center`, found by bisection above `floor`.
    fn radius_at(&self, center: &S::P, floor: f64) -> f64 {
        if self.contained(center, self.cap) {
            return self.cap;
        }
        let (mut lo, mut hi) = (floor, self.cap);
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            if self.contained(center, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Radius at a candidate, or `None` when it cannot beat `best` by the tolerance.
    fn consider(&self, center: &S::P, best: Option<f64>) -> Option<f64> {
        if !self.probe.member(center) {
            return None;
        }
        match best {
            None => Some(self.radius_at(center, 0.0)),
            Some(b) => {
                let floor = b + self.tol;
                if floor >= self.cap || !self.contained(center, floor) {
                    None
                } else {
                    Some(self.radius_at(center, floor))
                }
            }
        }
    }

    fn run(&self, candidates: impl IntoIterator<Item = S::P>) -> BlochReport {
        let mut best: Option<(S::P, f64)> = None;
        let mut trace = Vec::new();
        let mut used = 0usize;
        for c in candidates {
            if best.as_ref().is_some_and(|(_, r)| *r >= self.cap) {
                break;
            }
            used += 1;
            if let Some(r) = self.consider(&c, best.as_ref().map(|b| b.1)) {
                if best.as_ref().is_none_or(|(_, b)| r > *b) {
                    best = Some((c, r));
                    trace.push((used, r));
                }
            }
        }
        if let Some((mut center, mut r)) = best.clone() {
            let mut step = 0.25;
            let mut budget = REFINE_BUDGET;
            while step >= self.tol && budget > 0 && r < self.cap {
                let mut improved = false;
                for k in 0..self.probe.moves() {
                    if budget == 0 {
                        break;
                    }
                    budget -= 1;
                    used += 1;
                    let cand = self.probe.step(&center, k, step);
                    if let Some(r2) = self.consider(&cand, Some(r)) {
                        center = cand;
                        r = r2;
                        trace.push((used, r));
                        improved = true;
                        break;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best = Some((center, r));
        }
        match best {
            None => BlochReport {
                radius_estimate: RadiusEstimate::Finite(0.0),
                radius_cap: self.cap,
                witness_center: None,
                witness_radius: 0.0,
                samples_used: used,
                monotone_trace: vec![(used, 0.0)],
                empty: true,
            },
            Some((c, r)) => {
                trace.push((used, r));
                BlochReport {
                    radius_estimate: RadiusEstimate::from_radius(r, self.cap),
                    radius_cap: self.cap,
                    witness_center: Some(self.probe.to_point(&c)),
                    witness_radius: r,
                    samples_used: used,
                    monotone_trace: trace,
                    empty: false,
                }
            }
        }
    }
}

/// Hyperbolic polar grid of the disc plus seeded random points, all at depth ≤ `max_depth`.
fn disc_candidates(count: usize, max_depth: f64, seed: u64, stream_id: u64) -> Vec<Complex64> {
    let grid = count / 2;
    let rings = ((grid as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
    let per_ring = (grid / rings).max(1);
    let mut out = vec![Complex64::new(0.0, 0.0)];
    for i in 1..=rings {
        let depth = max_depth * i as f64 / rings as f64;
        let offset = if i % 2 == 0 { 0.5 } else { 0.0 };
        for k in 0..per_ring {
            out.push(Complex64::from_polar(depth.tanh(), TAU * (k as f64 + offset) / per_ring as f64));
        }
    }
    let mut rng = stream_rng(seed, stream_id);
    while out.len() < count.max(2) {
        out.push(disc_point_by_depth(&mut rng, max_depth));
    }
    out
}

fn estimate_planar<F: Fn(Complex64) -> bool + Sync>(
    test: F,
    hints: Vec<Complex64>,
    cfg: &EstimatorConfig,
    stream_id: u64,
) -> BlochReport {
    let probe = PlanarProbe { test, directions: cfg.boundary_samples };
    let search = Search { probe: &probe, cap: cfg.radius_cap, tol: cfg.radius_tolerance };
    let mut candidates = hints;
    candidates.extend(disc_candidates(cfg.center_samples, cfg.radius_cap + 1.0, cfg.seed, stream_id));
    search.run(candidates)
}

/// Members of a ball region: exact sampler where one exists, otherwise
/// rejection from points spread in hyperbolic depth.
fn sample_members<R: Rng + ?Sized>(region: &BallRegion, count: usize, max_depth: f64, rng: &mut R) -> Vec<CVector> {
    let n = region.dim();
    let mut out = Vec::with_capacity(count);
    if let BallRegion::ProductSlice { planar, .. } = region {
        for _ in 0..count * 50 {
            if out.len() == count {
                break;
            }
            let z = disc_point_by_depth(rng, max_depth);
            if planar.contains_value(z) {
                let mut v = CVector::zeros(n);
                v[0] = z;
                out.push(v);
            }
        }
        return out;
    }
    for _ in 0..count * 50 {
        if out.len() == count {
            break;
        }
        let v = match region.sample_exact(rng) {
            Some(p) => p.value().clone(),
            None => CVector::from_vec(ball_point_by_depth(rng, n, max_depth)),
        };
        if region.contains_vector(&v) {
            out.push(v);
        }
    }
    out
}

fn estimate_ball(region: &BallRegion, cfg: &EstimatorConfig) -> BlochReport {
    let probe = BallProbe::new(region, cfg.boundary_samples, cfg.seed, 0);
    let search = Search { probe: &probe, cap: cfg.radius_cap, tol: cfg.radius_tolerance };
    let mut candidates: Vec<CVector> = region.hint_points().into_iter().map(|p| p.value().clone()).collect();
    let mut rng = stream_rng(cfg.seed, stream::CENTERS);
    candidates.extend(sample_members(region, cfg.center_samples, cfg.radius_cap + 1.0, &mut rng));
    search.run(candidates)
}

/// Inner estimate of the Bloch radius `R(X) = sup{r : B(z, r) ⊂ X}`.
///
/// Returns an empty report (radius 0) when no sampled candidate lies in `X`.
pub fn bloch_radius<'a>(region: impl Into<RegionRef<'a>>, cfg: &EstimatorConfig) -> Result<BlochReport> {
    cfg.validate()?;
    Ok(match region.into() {
        RegionRef::Planar(p) => estimate_planar(|z| p.contains_value(z), p.hint_centers(), cfg, stream::CENTERS),
        RegionRef::Ball(b) => estimate_ball(b, cfg),
    })
}

// ---------------------------------------------------------------------------
// hyperbolic Lipschitz constant

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub mu_estimate: f64,
    pub witness_point: Point,
    pub witness_vector: Vec<Complex64>,
    pub samples_used: usize,
}

fn planar_ratio(region: &PlanarRegion, z: Complex64) -> Option<f64> {
    // beyond the boundary guard 1 − |z|² is rounding noise
    let base = DiscPoint::new(z).ok()?;
    if base.was_clamped() || !region.contains_value(z) {
        return None;
    }
    let t = DiscTangent::new(base, Complex64::new(1.0, 0.0)).ok()?;
    let density = region.hyperbolic_density(&t).ok()?;
    Some(1.0 / (one_minus_sq(z.norm()) * density))
}

fn planar_lipschitz(region: &PlanarRegion, cfg: &EstimatorConfig) -> Result<LipschitzReport> {
    if !region.has_density() {
        return Err(GeoError::UnsupportedRegion(format!("no closed-form density for {}", region.describe())));
    }
    let mut candidates = region.hint_centers();
    candidates.extend(region.hyperbolic_center().map(|c| c.value()));
    candidates.extend(disc_candidates(cfg.center_samples, cfg.radius_cap + 1.0, cfg.seed, stream::LIPSCHITZ));
    let mut best: Option<(Complex64, f64)> = None;
    let mut used = 0;
    for z in candidates {
        used += 1;
        if let Some(r) = planar_ratio(region, z) {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((z, r));
            }
        }
    }
    let (mut z, mut mu) = best.ok_or(GeoError::EmptyRegion)?;
    let mut step: f64 = 0.25;
    while step >= 1e-6 {
        used += 8;
        let moved = (0..8)
            .map(|k| {
                let w = Complex64::from_polar(step.tanh(), TAU * k as f64 / 8.0);
                (w + z) / (1.0 + z.conj() * w)
            })
            .filter_map(|w| planar_ratio(region, w).map(|r| (w, r)))
            .find(|(_, r)| *r > mu);
        match moved {
            Some((w, r)) => {
                z = w;
                mu = r;
            }
            None => step *= 0.5,
        }
    }
    Ok(LipschitzReport {
        mu_estimate: mu,
        witness_point: Point::disc(z),
        witness_vector: vec![Complex64::new(1.0, 0.0)],
        samples_used: used,
    })
}

fn ball_lipschitz(region: &BallRegion, cfg: &EstimatorConfig) -> Result<LipschitzReport> {
    let n = region.dim();
    let mut e1 = CVector::zeros(n);
    e1[0] = Complex64::new(1.0, 0.0);
    match region {
        BallRegion::Whole { .. } => Ok(LipschitzReport {
            mu_estimate: 1.0,
            witness_point: Point::ball(CVector::zeros(n)),
            witness_vector: e1.iter().copied().collect(),
            samples_used: 1,
        }),
        BallRegion::KobayashiBall { center, radius } => {
            // in coordinates centered at `center` the region is the round ball t𝔹ⁿ,
            // whose metric is κ_{t𝔹}(w; V) = κ_𝔹(w/t; V/t)
            let t = radius.tanh();
            let ratio = |w: &CVector, v: &CVector| -> Option<f64> {
                let scaled = BallPoint::from_vector(w / Complex64::from(t)).ok()?;
                let ambient = kobayashi_metric(&BallTangent::new(BallPoint::from_vector(w.clone()).ok()?, v.iter().copied().collect()).ok()?);
                let inner = kobayashi_metric(&BallTangent::new(scaled, (v / Complex64::from(t)).iter().copied().collect()).ok()?);
                Some(ambient / inner)
            };
            let mut rng = stream_rng(cfg.seed, stream::LIPSCHITZ);
            let mut best = (CVector::zeros(n), e1.clone(), ratio(&CVector::zeros(n), &e1).unwrap_or(t));
            for _ in 0..cfg.center_samples {
                let w = CVector::from_vec(uniform_in_ball(&mut rng, n, t * (1.0 - 1e-9)));
                let v = CVector::from_vec(unit_vector(&mut rng, n));
                if let Some(r) = ratio(&w, &v) {
                    if r > best.2 {
                        best = (w, v, r);
                    }
                }
            }
            let (w, v, mu) = best;
            let c = center.value();
            let point = involution(c, &w);
            let vector = involution_differential(c, &w, &v);
            Ok(LipschitzReport {
                mu_estimate: mu,
                witness_point: Point::ball(point),
                witness_vector: vector.iter().copied().collect(),
                samples_used: cfg.center_samples + 1,
            })
        }
        other => Err(GeoError::UnsupportedRegion(format!("no closed-form metric for {}", other.describe()))),
    }
}

/// Sampled `sup κ_ambient(z; v) / κ_Z(z; v)` for regions with a closed-form metric.
///
/// Regions without one are rejected with [`GeoError::UnsupportedRegion`].
pub fn lipschitz_constant<'a>(region: impl Into<RegionRef<'a>>, cfg: &EstimatorConfig) -> Result<LipschitzReport> {
    cfg.validate()?;
    match region.into() {
        RegionRef::Planar(p) => planar_lipschitz(p, cfg),
        RegionRef::Ball(b) => ball_lipschitz(b, cfg),
    }
}

// ---------------------------------------------------------------------------
// sandwich

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichVerdict {
    Pass,
    Fail,
    /// `R` reached the cap, so the bounds are saturated and not checked.
    SkippedUnbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub region: String,
    pub r_est: RadiusEstimate,
    pub mu_est: f64,
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub verdict: SandwichVerdict,
    pub pass: bool,
}

pub const SANDWICH_TOLERANCE: f64 = 1e-2;

/// Checks `tanh(R/2) ≤ μ ≤ tanh R` with both sides estimated.
pub fn sandwich_check(region: &PlanarRegion, cfg: &EstimatorConfig) -> Result<SandwichReport> {
    sandwich_check_with_tolerance(region, cfg, SANDWICH_TOLERANCE)
}

pub fn sandwich_check_with_tolerance(region: &PlanarRegion, cfg: &EstimatorConfig, tol: f64) -> Result<SandwichReport> {
    let bloch = bloch_radius(region, cfg)?;
    let mu = lipschitz_constant(region, cfg)?;
    let (lower, upper, verdict) = match bloch.radius_estimate {
        RadiusEstimate::Unbounded => (1.0, 1.0, SandwichVerdict::SkippedUnbounded),
        RadiusEstimate::Finite(r) => {
            let (lower, upper) = ((r / 2.0).tanh(), r.tanh());
            let ok = lower - tol <= mu.mu_estimate && mu.mu_estimate <= upper + tol;
            (lower, upper, if ok { SandwichVerdict::Pass } else { SandwichVerdict::Fail })
        }
    };
    Ok(SandwichReport {
        region: region.describe(),
        r_est: bloch.radius_estimate,
        mu_est: mu.mu_estimate,
        lower,
        upper,
        tolerance: tol,
        verdict,
        pass: verdict != SandwichVerdict::Fail,
    })
}

// ---------------------------------------------------------------------------
// device certifiers

/// Reject devices whose geodesic closure comes within `radius` of `point ∈ ∂𝔹ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryExclusion {
    pub point: Vec<Complex64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSampleConfig {
    /// Random devices, on top of the deterministic coordinate devices.
    pub num_devices: usize,
    /// Sampled members of `X` whose projections seed the per-device searches;
    /// also the size of the slice grid used to detect empty slices.
    pub points_per_region: usize,
    pub fattening_eps: f64,
    pub avoid_boundary_point: Option<BoundaryExclusion>,
    pub seed: u64,
    /// Estimator settings for the projected sets.
    pub estimator: EstimatorConfig,
}

impl Default for DeviceSampleConfig {
    fn default() -> Self {
        Self {
            num_devices: 16,
            points_per_region: 64,
            fattening_eps: 1e-3,
            avoid_boundary_point: None,
            seed: 1,
            estimator: EstimatorConfig { center_samples: 64, ..EstimatorConfig::default() },
        }
    }
}

impl DeviceSampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_devices == 0 || self.points_per_region == 0 {
            return Err(GeoError::InvalidConfig("device and point counts must be at least 1".into()));
        }
        if !(self.fattening_eps > 0.0 && self.fattening_eps.is_finite()) {
            return Err(GeoError::InvalidConfig("fattening_eps must be positive".into()));
        }
        if let Some(ex) = &self.avoid_boundary_point {
            let norm = ex.point.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(GeoError::InvalidBoundaryPoint(norm));
            }
            if !(ex.radius > 0.0) {
                return Err(GeoError::NonPositiveRadius(ex.radius));
            }
        }
        self.estimator.validate()
    }

    pub fn doubled(&self) -> Self {
        Self {
            num_devices: 2 * self.num_devices,
            points_per_region: 2 * self.points_per_region,
            estimator: self.estimator.doubled(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifierMode {
    /// Projections `ρ̃_φ(X)` of the whole set.
    OneBloch,
    /// Projections `ρ̃_φ(X ∩ φ(𝔻))` of the slices.
    CBloch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceEntry {
    pub device: DeviceDescriptor,
    /// `coordinate` for the deterministic devices, `random` otherwise.
    pub kind: String,
    pub report: BlochReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifierReport {
    pub mode: CertifierMode,
    pub region: String,
    pub per_device: Vec<DeviceEntry>,
    pub max_radius: RadiusEstimate,
    /// `max_radius + fattening_eps`, present only for a finite and stable maximum.
    pub certified_bound: Option<f64>,
    pub stability_flag: bool,
    pub doubled_max_radius: RadiusEstimate,
    pub fattening_eps: f64,
    pub empty_devices: usize,
    pub rejected_devices: usize,
    pub radius_cap: f64,
}

/// Relative change allowed between the base run and the doubled run.
pub const STABILITY_RATIO: f64 = 0.1;

struct DeviceSet {
    devices: Vec<(LempertDevice, &'static str)>,
    rejected: usize,
}

fn avoids(device: &LempertDevice, ex: &Option<BoundaryExclusion>) -> bool {
    match ex {
        None => true,
        Some(ex) => device.boundary_distance(&CVector::from_vec(ex.point.clone())) >= ex.radius,
    }
}

fn sample_devices(region: &BallRegion, cfg: &DeviceSampleConfig) -> Result<DeviceSet> {
    let n = region.dim();
    let mut bases = vec![BallPoint::origin(n)];
    for h in region.hint_points() {
        if bases.len() >= 4 {
            break;
        }
        if !bases.contains(&h) {
            bases.push(h);
        }
    }
    let mut devices = Vec::new();
    let mut rejected = 0;
    for b in &bases {
        for k in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = Complex64::new(1.0, 0.0);
            let d = geodesic_tangent(&BallTangent::new(b.clone(), e)?)?;
            if avoids(&d, &cfg.avoid_boundary_point) {
                devices.push((d, "coordinate"));
            } else {
                rejected += 1;
            }
        }
    }
    let random: Vec<(Option<LempertDevice>, usize)> = (0..cfg.num_devices as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, stream::DEVICE_SAMPLING_BASE + i);
            let mut misses = 0;
            for _ in 0..200 {
                let x = match sample_members(region, 1, cfg.estimator.radius_cap + 1.0, &mut rng).pop() {
                    Some(x) => x,
                    None => return (None, misses),
                };
                let y = CVector::from_vec(ball_point_by_depth(&mut rng, n, 3.0));
                let Ok(d) = geodesic_through(&BallPoint::guarded(x), &BallPoint::guarded(y)) else {
                    continue;
                };
                if avoids(&d, &cfg.avoid_boundary_point) {
                    return (Some(d), misses);
                }
                misses += 1;
            }
            (None, misses)
        })
        .collect();
    for (d, misses) in random {
        rejected += misses;
        if let Some(d) = d {
            devices.push((d, "random"));
        }
    }
    if devices.is_empty() {
        return Err(GeoError::EmptyRegion);
    }
    Ok(DeviceSet { devices, rejected })
}

/// Fiber of `ρ̃` over `ζ` in the device's normalized coordinates is
/// `{ζu + y : y ⊥ u, ‖y‖² < 1 − |ζ|²}`; we scan it on a geometric ladder of depths.
struct FiberLadder {
    fractions: Vec<f64>,
    directions: Vec<CVector>,
    /// Index of the last successful sample, tried first next time. Only the
    /// scan order depends on it, never the answer.
    last_hit: AtomicUsize,
}

impl FiberLadder {
    fn new(device: &LempertDevice) -> Self {
        let mut fractions = Vec::with_capacity((FIBER_OUTER_LEVELS + FIBER_INNER_LEVELS) as usize);
        for k in 0..FIBER_OUTER_LEVELS {
            fractions.push(1.0 - 2f64.powf(-(k as f64) / 2.0 - 0.5));
            if k < FIBER_INNER_LEVELS {
                fractions.push(2f64.powf(-(k as f64) / 2.0 - 1.0));
            }
        }
        let phases = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];
        let directions = device.complement().iter().flat_map(|e| phases.iter().map(move |p| e * *p)).collect();
        Self { fractions, directions, last_hit: AtomicUsize::new(0) }
    }

    fn sample(&self, device: &LempertDevice, base: &CVector, room: f64, index: usize) -> CVector {
        let (f, d) = (index / self.directions.len(), index % self.directions.len());
        let s = Complex64::from((self.fractions[f] * room).sqrt());
        device.from_normalized(&(base + &self.directions[d] * s))
    }

    fn hits(&self, device: &LempertDevice, region: &BallRegion, zeta: Complex64) -> bool {
        let r = zeta.norm();
        if !(r < 1.0) {
            return false;
        }
        let base = device.direction() * zeta;
        if region.contains_vector(&device.from_normalized(&base)) {
            return true;
        }
        let total = self.fractions.len() * self.directions.len();
        if total == 0 {
            return false;
        }
        let room = one_minus_sq(r);
        let start = self.last_hit.load(Ordering::Relaxed);
        if region.contains_vector(&self.sample(device, &base, room, start)) {
            return true;
        }
        for index in (0..total).filter(|&i| i != start) {
            if region.contains_vector(&self.sample(device, &base, room, index)) {
                self.last_hit.store(index, Ordering::Relaxed);
                return true;
            }
        }
        false
    }
}

fn slice_grid(count: usize, max_depth: f64) -> Vec<Complex64> {
    disc_candidates(count, max_depth, 0, 0).into_iter().take(count.max(1)).collect()
}

fn certify_device(
    region: &BallRegion,
    device: &LempertDevice,
    members: &[CVector],
    mode: CertifierMode,
    cfg: &DeviceSampleConfig,
    index: u64,
) -> BlochReport {
    let est = &cfg.estimator;
    let base = stream::PER_DEVICE_BASE + 4 * index;
    let slice = |z: Complex64| region.contains_vector(&device.phi_value(z));
    let mut projected_hints: Vec<Complex64> = vec![Complex64::new(0.0, 0.0), Complex64::new(device.t_param(), 0.0)];
    projected_hints.extend(region.hint_points().iter().map(|h| device.left_inverse_value(h.value())));
    projected_hints.extend(members.iter().map(|x| device.left_inverse_value(x)));

    let mut slice_hints: Vec<Complex64> = projected_hints.iter().copied().filter(|z| z.norm() < 1.0 && slice(*z)).collect();
    slice_hints.extend(slice_grid(cfg.points_per_region, est.radius_cap + 1.0).into_iter().filter(|z| slice(*z)));
    let slice_report = estimate_planar(slice, slice_hints, est, base + 1);
    if mode == CertifierMode::CBloch {
        return slice_report;
    }
    // the slice witness goes first, so the projected radius dominates the slice radius
    let ladder = FiberLadder::new(device);
    let mut hints: Vec<Complex64> = slice_report.witness_center.iter().flat_map(|p| p.coords()).collect();
    hints.extend(projected_hints);
    estimate_planar(|z| ladder.hits(device, region, z), hints, est, base + 2)
}

fn region_members(region: &BallRegion, cfg: &DeviceSampleConfig) -> Vec<CVector> {
    let mut rng = stream_rng(cfg.seed, stream::CENTERS);
    let mut members = sample_members(region, cfg.points_per_region, cfg.estimator.radius_cap + 1.0, &mut rng);
    members.extend(region.hint_points().into_iter().map(|p| p.value().clone()));
    members
}

/// Bloch radius of the projection `ρ̃_φ(X)` through a single device.
pub fn projected_bloch_radius(region: &BallRegion, device: &LempertDevice, cfg: &DeviceSampleConfig) -> Result<BlochReport> {
    cfg.validate()?;
    if device.dim() != region.dim() {
        return Err(GeoError::DimensionMismatch(region.dim(), device.dim()));
    }
    let members = region_members(region, cfg);
    Ok(certify_device(region, device, &members, CertifierMode::OneBloch, cfg, 0))
}

fn certify_pass(
    region: &BallRegion,
    devices: &[(LempertDevice, &'static str)],
    mode: CertifierMode,
    cfg: &DeviceSampleConfig,
) -> Vec<DeviceEntry> {
    let members = region_members(region, cfg);
    devices
        .par_iter()
        .enumerate()
        .map(|(i, (d, kind))| DeviceEntry {
            device: d.descriptor(),
            kind: kind.to_string(),
            report: certify_device(region, d, &members, mode, cfg, i as u64),
        })
        .collect()
}

fn max_radius(entries: &[DeviceEntry], cap: f64) -> RadiusEstimate {
    let r = entries.iter().filter(|e| !e.report.empty).map(|e| e.report.witness_radius).fold(0.0, f64::max);
    RadiusEstimate::from_radius(r, cap)
}

fn is_stable(a: RadiusEstimate, b: RadiusEstimate) -> bool {
    match (a, b) {
        (RadiusEstimate::Unbounded, RadiusEstimate::Unbounded) => true,
        (RadiusEstimate::Finite(a), RadiusEstimate::Finite(b)) => (a - b).abs() <= STABILITY_RATIO * a.max(b),
        _ => false,
    }
}

fn certify(
    region: &BallRegion,
    cfg: &DeviceSampleConfig,
    mode: CertifierMode,
    explicit: Option<&[LempertDevice]>,
) -> Result<CertifierReport> {
    cfg.validate()?;
    let build = |c: &DeviceSampleConfig| -> Result<DeviceSet> {
        match explicit {
            Some(list) => {
                for d in list {
                    if d.dim() != region.dim() {
                        return Err(GeoError::DimensionMismatch(region.dim(), d.dim()));
                    }
                }
                Ok(DeviceSet { devices: list.iter().map(|d| (d.clone(), "explicit")).collect(), rejected: 0 })
            }
            None => sample_devices(region, c),
        }
    };
    let base_set = build(cfg)?;
    let doubled_cfg = cfg.doubled();
    let doubled_set = build(&doubled_cfg)?;
    let per_device = certify_pass(region, &base_set.devices, mode, cfg);
    let doubled = certify_pass(region, &doubled_set.devices, mode, &doubled_cfg);
    let cap = cfg.estimator.radius_cap;
    if per_device.iter().all(|e| e.report.empty) && mode == CertifierMode::OneBloch {
        return Err(GeoError::EmptyRegion);
    }
    let max = max_radius(&per_device, cap);
    let doubled_max = max_radius(&doubled, doubled_cfg.estimator.radius_cap);
    let stable = is_stable(max, doubled_max);
    let certified_bound = match max {
        RadiusEstimate::Finite(r) if stable => Some(r + cfg.fattening_eps),
        _ => None,
    };
    Ok(CertifierReport {
        mode,
        region: region.describe(),
        empty_devices: per_device.iter().filter(|e| e.report.empty).count(),
        per_device,
        max_radius: max,
        certified_bound,
        stability_flag: stable,
        doubled_max_radius: doubled_max,
        fattening_eps: cfg.fattening_eps,
        rejected_devices: base_set.rejected,
        radius_cap: cap,
    })
}

/// Bloch radii of the projections `ρ̃_φ(X)` over sampled devices.
///
/// Membership of `ζ` in a projection is witnessed by a point of `X` on the fiber
/// over `ζ`; the fattening is reported as an additive slack on the bound.
pub fn one_bloch_certify(region: &BallRegion, cfg: &DeviceSampleConfig) -> Result<CertifierReport> {
    certify(region, cfg, CertifierMode::OneBloch, None)
}

/// Bloch radii of the slice projections `ρ̃_φ(X ∩ φ(𝔻))`; empty slices are recorded.
pub fn c_bloch_certify(region: &BallRegion, cfg: &DeviceSampleConfig) -> Result<CertifierReport> {
    certify(region, cfg, CertifierMode::CBloch, None)
}

/// [`one_bloch_certify`] over a given list of devices.
pub fn one_bloch_certify_devices(region: &BallRegion, devices: &[LempertDevice], cfg: &DeviceSampleConfig) -> Result<CertifierReport> {
    certify(region, cfg, CertifierMode::OneBloch, Some(devices))
}

/// [`c_bloch_certify`] over a given list of devices.
pub fn c_bloch_certify_devices(region: &BallRegion, devices: &[LempertDevice], cfg: &DeviceSampleConfig) -> Result<CertifierReport> {
    certify(region, cfg, CertifierMode::CBloch, Some(devices))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetConsistency {
    pub bloch: BlochReport,
    pub certified_bound: Option<f64>,
    /// No certified bound, so nothing to compare.
    pub vacuous: bool,
    pub holds: bool,
}

/// Checks `R(X) ≤ C + fattening + tolerance` against a 1-Bloch certificate `C`.
pub fn bloch_subset_consistency(region: &BallRegion, est: &EstimatorConfig, cfg: &DeviceSampleConfig) -> Result<SubsetConsistency> {
    let cert = one_bloch_certify(region, cfg)?;
    let bloch = bloch_radius(region, est)?;
    let holds = match cert.certified_bound {
        None => true,
        Some(c) => bloch.radius_estimate.as_f64() <= c + cfg.fattening_eps + est.radius_tolerance,
    };
    Ok(SubsetConsistency { bloch, certified_bound: cert.certified_bound, vacuous: cert.certified_bound.is_none(), holds })
}
