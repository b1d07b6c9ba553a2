//! Hyperbolic geometry of the unit disc.
//!
//! Normalization: curvature −4, so the Poincaré density is `|v| / (1 − |z|²)`
//! and the distance is `artanh |(z − w) / (1 − w̄ z)|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// Points are clamped so that `|z| ≤ 1 − BOUNDARY_GUARD`.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// Hyperbolic depths used for deterministic hint centers of unbounded regions.
pub(crate) const HINT_DEPTHS: [f64; 12] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.5, 10.0];

/// `1 − |z|²` computed without cancellation near the boundary.
#[inline]
pub(crate) fn one_minus_sq(r: f64) -> f64 {
    (1.0 - r) * (1.0 + r)
}

/// A point of the unit disc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscPoint {
    value: Complex64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    clamped: bool,
}

impl DiscPoint {
    /// Builds a point, pulling anything with `|z| > 1 − 1e−12` back onto that circle.
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        let r = z.norm();
        let max = 1.0 - BOUNDARY_GUARD;
        if r > max {
            Ok(Self { value: z * (max / r), clamped: true })
        } else {
            Ok(Self { value: z, clamped: false })
        }
    }

    pub fn from_re_im(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn origin() -> Self {
        Self { value: Complex64::new(0.0, 0.0), clamped: false }
    }

    /// Clamping constructor for values produced internally from valid inputs.
    pub(crate) fn guarded(z: Complex64) -> Self {
        Self::new(z).unwrap_or_else(|_| Self::origin())
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    /// True when the constructor had to pull the value inside the guard circle.
    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    pub(crate) fn one_minus_norm_sq(&self) -> f64 {
        one_minus_sq(self.value.norm())
    }
}

impl fmt::Display for DiscPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.value.re, self.value.im)
    }
}

/// A tangent vector of the disc at `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscTangent {
    pub base: DiscPoint,
    pub vector: Complex64,
}

impl DiscTangent {
    pub fn new(base: DiscPoint, vector: Complex64) -> Result<Self> {
        if !(vector.re.is_finite() && vector.im.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        Ok(Self { base, vector })
    }

    pub fn is_zero(&self) -> bool {
        self.vector.norm_sqr() == 0.0
    }
}

/// Poincaré distance.
///
/// Evaluated as `asinh(|z − w| / sqrt((1 − |z|²)(1 − |w|²)))`, which equals
/// `artanh |(z − w)/(1 − w̄z)|` and keeps full relative accuracy both for
/// nearby points and close to the boundary.
pub fn poincare_distance(z: &DiscPoint, w: &DiscPoint) -> f64 {
    let chord = (z.value - w.value).norm();
    (chord / (z.one_minus_norm_sq() * w.one_minus_norm_sq()).sqrt()).asinh()
}

/// Infinitesimal Poincaré metric `|v| / (1 − |z|²)`; zero vectors give 0.
pub fn poincare_metric(t: &DiscTangent) -> f64 {
    t.vector.norm() / t.base.one_minus_norm_sq()
}

/// The disc automorphism `ζ ↦ e^{iθ}(ζ − a)/(1 − āζ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusDisc {
    pub a: DiscPoint,
    pub theta: f64,
}

impl MobiusDisc {
    pub fn new(a: DiscPoint, theta: f64) -> Self {
        Self { a, theta }
    }

    pub fn identity() -> Self {
        Self { a: DiscPoint::origin(), theta: 0.0 }
    }

    /// The map sending `a` to 0 with no rotation.
    pub fn to_origin(a: DiscPoint) -> Self {
        Self { a, theta: 0.0 }
    }

    /// The map sending 0 to `c` (the inverse of [`MobiusDisc::to_origin`]).
    pub fn from_origin(c: DiscPoint) -> Self {
        Self::to_origin(c).invert()
    }

    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    pub fn apply_value(&self, z: Complex64) -> Complex64 {
        let a = self.a.value;
        self.rotation() * (z - a) / (1.0 - a.conj() * z)
    }

    pub fn apply(&self, z: &DiscPoint) -> DiscPoint {
        DiscPoint::guarded(self.apply_value(z.value))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusDisc) -> MobiusDisc {
        // the composite sends other⁻¹(self.a) to 0; its rotation comes from the
        // derivative at that point
        let a_new = other.invert().apply(&self.a);
        let theta = self.theta + other.theta - 2.0 * (1.0 - other.a.value.conj() * a_new.value).arg();
        MobiusDisc { a: a_new, theta }
    }

    pub fn invert(&self) -> MobiusDisc {
        let a = DiscPoint::guarded(-self.a.value * self.rotation());
        MobiusDisc { a, theta: -self.theta }
    }

    /// Complex derivative at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let a = self.a.value;
        let d = 1.0 - a.conj() * z;
        self.rotation() * one_minus_sq(a.norm()) / (d * d)
    }
}

/// Euclidean center and radius of the hyperbolic disc `B(center, r)`.
pub fn hyperball_euclidean(center: &DiscPoint, r: f64) -> (Complex64, f64) {
    let r = if r.is_nan() { 0.0 } else { r.max(0.0) };
    let t = r.tanh();
    let c = center.value;
    let denom = 1.0 - t * t * c.norm_sqr();
    let euclid_center = c * (one_minus_sq(t) / denom);
    let euclid_radius = t * center.one_minus_norm_sq() / denom;
    (euclid_center, euclid_radius)
}

fn check_boundary_point(b: Complex64) -> Result<()> {
    let m = b.norm();
    if !m.is_finite() || (m - 1.0).abs() > 1e-12 {
        return Err(GeoError::InvalidBoundaryPoint(m));
    }
    Ok(())
}

fn check_positive(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(GeoError::NonPositiveRadius(r));
    }
    Ok(())
}

/// Membership in the horodisc `E(b, R) = {z : |b − z|² < R (1 − |z|²)}`.
pub fn horodisc_membership(boundary_point: Complex64, size: f64, z: &DiscPoint) -> Result<bool> {
    check_boundary_point(boundary_point)?;
    check_positive(size)?;
    Ok(horodisc_test(boundary_point, size, z.value))
}

#[inline]
fn horodisc_test(b: Complex64, size: f64, z: Complex64) -> bool {
    (b - z).norm_sqr() < size * one_minus_sq(z.norm())
}

/// Euclidean realization of `E(b, R)`: the disc of center `b/(1+R)` and radius `R/(1+R)`.
pub fn horodisc_euclidean(boundary_point: Complex64, size: f64) -> (Complex64, f64) {
    (boundary_point / (1.0 + size), size / (1.0 + size))
}

/// An opaque membership test on the disc.
#[derive(Clone)]
pub struct PlanarPredicate {
    pub name: String,
    test: Arc<dyn Fn(Complex64) -> bool + Send + Sync>,
}

impl PlanarPredicate {
    pub fn new(name: impl Into<String>, test: impl Fn(Complex64) -> bool + Send + Sync + 'static) -> Self {
        Self { name: name.into(), test: Arc::new(test) }
    }

    pub fn test(&self, z: Complex64) -> bool {
        (self.test)(z)
    }
}

impl fmt::Debug for PlanarPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PlanarPredicate({})", self.name)
    }
}

/// Catalogued subsets of the disc.
#[derive(Clone, Debug)]
pub enum PlanarRegion {
    /// Euclidean disc, intersected with the unit disc.
    EuclidDisc { center: Complex64, radius: f64 },
    /// Hyperbolic disc `B(center, radius)`.
    HyperBall { center: DiscPoint, radius: f64 },
    /// Horodisc `E(boundary, size)`.
    Horodisc { boundary: Complex64, size: f64 },
    /// Round annulus `{inner < |z| < 1}`.
    Annulus { inner: f64 },
    Difference(Box<PlanarRegion>, Box<PlanarRegion>),
    Predicate(PlanarPredicate),
}

impl PlanarRegion {
    pub fn unit_disc() -> Self {
        PlanarRegion::EuclidDisc { center: Complex64::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn euclid_disc(center: Complex64, radius: f64) -> Result<Self> {
        check_positive(radius)?;
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        Ok(PlanarRegion::EuclidDisc { center, radius })
    }

    pub fn hyper_ball(center: DiscPoint, radius: f64) -> Result<Self> {
        check_positive(radius)?;
        Ok(PlanarRegion::HyperBall { center, radius })
    }

    pub fn horodisc(boundary: Complex64, size: f64) -> Result<Self> {
        check_boundary_point(boundary)?;
        check_positive(size)?;
        Ok(PlanarRegion::Horodisc { boundary, size })
    }

    pub fn annulus(inner: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < 1.0) {
            return Err(GeoError::InvalidConfig(format!("annulus inner radius {inner} not in (0,1)")));
        }
        Ok(PlanarRegion::Annulus { inner })
    }

    pub fn difference(outer: PlanarRegion, inner: PlanarRegion) -> Self {
        PlanarRegion::Difference(Box::new(outer), Box::new(inner))
    }

    pub fn predicate(name: impl Into<String>, test: impl Fn(Complex64) -> bool + Send + Sync + 'static) -> Self {
        PlanarRegion::Predicate(PlanarPredicate::new(name, test))
    }

    pub fn contains(&self, z: &DiscPoint) -> bool {
        self.contains_value(z.value)
    }

    /// Membership for a raw complex value; anything outside the open disc is rejected.
    pub fn contains_value(&self, z: Complex64) -> bool {
        if !(z.norm() < 1.0) {
            return false;
        }
        match self {
            PlanarRegion::EuclidDisc { center, radius } => (z - center).norm() < *radius,
            PlanarRegion::HyperBall { center, radius } => poincare_distance(center, &DiscPoint::guarded(z)) < *radius,
            PlanarRegion::Horodisc { boundary, size } => horodisc_test(*boundary, *size, z),
            PlanarRegion::Annulus { inner } => z.norm() > *inner,
            PlanarRegion::Difference(outer, inner) => outer.contains_value(z) && !inner.contains_value(z),
            PlanarRegion::Predicate(p) => p.test(z),
        }
    }

    /// The Euclidean disc equal to this region, when there is one inside the unit disc.
    pub fn euclidean_disc(&self) -> Option<(Complex64, f64)> {
        match self {
            PlanarRegion::EuclidDisc { center, radius } if center.norm() + radius <= 1.0 + 1e-12 => {
                Some((*center, *radius))
            }
            PlanarRegion::HyperBall { center, radius } => Some(hyperball_euclidean(center, *radius)),
            PlanarRegion::Horodisc { boundary, size } => Some(horodisc_euclidean(*boundary, *size)),
            _ => None,
        }
    }

    /// True when a closed-form hyperbolic density is available.
    pub fn has_density(&self) -> bool {
        matches!(self, PlanarRegion::Annulus { .. }) || self.euclidean_disc().is_some()
    }

    /// Closed-form hyperbolic density `κ_U(z; v)` of the region.
    pub fn hyperbolic_density(&self, t: &DiscTangent) -> Result<f64> {
        if !self.has_density() {
            return Err(GeoError::UnsupportedRegion(format!("no closed-form density for {}", self.describe())));
        }
        if !self.contains(&t.base) {
            return Err(GeoError::OutsideRegion);
        }
        let z = t.base.value;
        let v = t.vector.norm();
        if v == 0.0 {
            return Ok(0.0);
        }
        if let PlanarRegion::Annulus { inner } = self {
            let rho = z.norm();
            let width = -inner.ln();
            let s = (PI * rho.ln() / inner.ln()).sin();
            return Ok(PI * v / (2.0 * rho * width * s));
        }
        let (c, t0) = self.euclidean_disc().expect("checked by has_density");
        Ok(t0 * v / ((t0 - (z - c).norm()) * (t0 + (z - c).norm())))
    }

    /// Exact Bloch radius where it has a closed form (`f64::INFINITY` for unbounded kinds).
    pub fn exact_bloch_radius(&self) -> Option<f64> {
        match self {
            PlanarRegion::HyperBall { radius, .. } => Some(*radius),
            PlanarRegion::Horodisc { .. } | PlanarRegion::Annulus { .. } => Some(f64::INFINITY),
            PlanarRegion::EuclidDisc { center, radius } => {
                let m = center.norm();
                if m + radius >= 1.0 {
                    Some(f64::INFINITY)
                } else {
                    Some(((m + radius).atanh() - (m - radius).atanh()) / 2.0)
                }
            }
            _ => None,
        }
    }

    /// Hyperbolic center of a disc-like region, when it has one.
    pub fn hyperbolic_center(&self) -> Option<DiscPoint> {
        match self {
            PlanarRegion::HyperBall { center, .. } => Some(*center),
            PlanarRegion::EuclidDisc { center, radius } => {
                let m = center.norm();
                if m + radius >= 1.0 {
                    return None;
                }
                let dir = if m > 0.0 { center / m } else { Complex64::new(1.0, 0.0) };
                let mid = (((m + radius).atanh() + (m - radius).atanh()) / 2.0).tanh();
                Some(DiscPoint::guarded(dir * mid))
            }
            _ => None,
        }
    }

    /// Deterministic candidate centers for the Bloch and Lipschitz estimators.
    pub fn hint_centers(&self) -> Vec<Complex64> {
        let mut hints = Vec::new();
        match self {
            PlanarRegion::EuclidDisc { .. } | PlanarRegion::HyperBall { .. } => {
                if let Some(c) = self.hyperbolic_center() {
                    hints.push(c.value);
                } else if let PlanarRegion::EuclidDisc { center, .. } = self {
                    // touches the boundary: walk towards the tangency
                    let dir = if center.norm() > 0.0 { center / center.norm() } else { Complex64::new(1.0, 0.0) };
                    hints.extend(HINT_DEPTHS.iter().map(|d| dir * d.tanh()));
                }
            }
            PlanarRegion::Horodisc { boundary, size } => {
                let start = ((1.0 - size) / (1.0 + size)).atanh();
                hints.extend(HINT_DEPTHS.iter().map(|d| boundary * (start + d + 0.5).tanh()));
            }
            PlanarRegion::Annulus { inner } => {
                hints.push(Complex64::new(inner.sqrt(), 0.0));
                let start = inner.sqrt().atanh();
                hints.extend(HINT_DEPTHS.iter().map(|d| Complex64::new((start + d).tanh(), 0.0)));
            }
            PlanarRegion::Difference(outer, inner) => {
                if let (
                    PlanarRegion::Horodisc { boundary: b1, size: r1 },
                    PlanarRegion::Horodisc { boundary: b2, size: r2 },
                ) = (outer.as_ref(), inner.as_ref())
                {
                    if (b1 - b2).norm() < 1e-12 {
                        let p1 = ((1.0 - r1) / (1.0 + r1)).atanh();
                        let p2 = ((1.0 - r2) / (1.0 + r2)).atanh();
                        hints.push(b1 * ((p1 + p2) / 2.0).tanh());
                    }
                }
                hints.extend(outer.hint_centers());
            }
            PlanarRegion::Predicate(_) => hints.push(Complex64::new(0.0, 0.0)),
        }
        hints.retain(|z| self.contains_value(*z));
        hints
    }

    /// Region in the textual grammar used by the command line.
    pub fn describe(&self) -> String {
        match self {
            PlanarRegion::EuclidDisc { center, radius } => format!("euclid {},{} {}", center.re, center.im, radius),
            PlanarRegion::HyperBall { center, radius } => format!("hyperball {} {}", center, radius),
            PlanarRegion::Horodisc { boundary, size } => {
                if (boundary - Complex64::new(1.0, 0.0)).norm() == 0.0 {
                    format!("horodisc {}", size)
                } else {
                    format!("horodisc {} {},{}", size, boundary.re, boundary.im)
                }
            }
            PlanarRegion::Annulus { inner } => format!("annulus {}", inner),
            PlanarRegion::Difference(o, i) => format!("diff ({}) ({})", o.describe(), i.describe()),
            PlanarRegion::Predicate(p) => format!("custom {}", p.name),
        }
    }
}

/// Unit-circle boundary point validated for horodisc use.
pub fn boundary_point(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}
