//! Kobayashi geometry of the unit ball of `C^n`.
//!
//! Inner products are `⟨a, b⟩ = Σ aᵢ b̄ᵢ` (conjugate-linear in the second slot).
//! Complex geodesics are slices through the origin moved by an automorphism,
//! and the Lempert projection onto `φ(𝔻)` is the orthogonal projection onto
//! the slice in the coordinates where the geodesic passes through 0.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::disc::{one_minus_sq, DiscPoint, PlanarRegion, BOUNDARY_GUARD, HINT_DEPTHS};
use crate::error::{GeoError, Result};

pub type CVector = DVector<Complex64>;

/// `⟨a, b⟩ = Σ aᵢ b̄ᵢ`.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    b.dotc(a)
}

/// A point of the unit ball `𝔹ⁿ`, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint {
    value: CVector,
    clamped: bool,
}

impl BallPoint {
    /// Same guard policy as [`DiscPoint::new`].
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(coords))
    }

    pub fn from_vector(value: CVector) -> Result<Self> {
        if value.is_empty() {
            return Err(GeoError::EmptyPoint);
        }
        if value.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(GeoError::NonFinite);
        }
        let r = value.norm();
        let max = 1.0 - BOUNDARY_GUARD;
        if r > max {
            Ok(Self { value: value * Complex64::from(max / r), clamped: true })
        } else {
            Ok(Self { value, clamped: false })
        }
    }

    /// Point with real coordinates.
    pub fn from_reals(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        Self { value: CVector::zeros(n), clamped: false }
    }

    pub(crate) fn guarded(value: CVector) -> Self {
        let n = value.len();
        Self::from_vector(value).unwrap_or_else(|_| Self::origin(n.max(1)))
    }

    pub fn value(&self) -> &CVector {
        &self.value
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.value.iter().copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    pub(crate) fn one_minus_norm_sq(&self) -> f64 {
        one_minus_sq(self.value.norm())
    }

    fn check_dim(&self, other: &BallPoint) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(GeoError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl Serialize for BallPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BallPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<Complex64>::deserialize(d)?;
        BallPoint::new(coords).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for BallPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.value.iter().map(|c| format!("({}{:+}i)", c.re, c.im)).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A tangent vector at a point of the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallTangent {
    pub base: BallPoint,
    pub vector: CVector,
}

impl BallTangent {
    pub fn new(base: BallPoint, vector: Vec<Complex64>) -> Result<Self> {
        if vector.len() != base.dim() {
            return Err(GeoError::DimensionMismatch(base.dim(), vector.len()));
        }
        if vector.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(GeoError::NonFinite);
        }
        Ok(Self { base, vector: CVector::from_vec(vector) })
    }
}

/// An `n × n` unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary(DMatrix<Complex64>);

impl Unitary {
    pub fn identity(n: usize) -> Self {
        Unitary(DMatrix::identity(n, n))
    }

    /// Accepts `m` when `‖m* m − I‖ ≤ 1e−10`.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(GeoError::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let residual = (m.adjoint() * &m - DMatrix::identity(m.nrows(), m.nrows())).norm();
        if residual > 1e-10 {
            return Err(GeoError::NotUnitary(residual));
        }
        Ok(Unitary(m))
    }

    /// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let phases = DMatrix::from_diagonal(&CVector::from_fn(n, |i, _| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        }));
        Unitary(q * phases)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == DMatrix::identity(self.dim(), self.dim())
    }
}

/// Serialized as a list of rows.
impl Serialize for Unitary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Complex64>> = self.0.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Unitary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("unitary must be square"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Unitary::from_matrix(m).map_err(serde::de::Error::custom)
    }
}

/// The involutive automorphism `φ_a` with `φ_a(a) = 0` and `φ_a(0) = a`.
///
/// Written as `φ_a(z) = −(P_a δ + s_a Q_a δ) / (1 − ⟨z, a⟩)` with `δ = z − a`,
/// `P_a` the orthogonal projection onto `C a`, `Q_a = I − P_a` and
/// `s_a = sqrt(1 − ‖a‖²)`. `φ_0` is taken to be the identity.
pub fn involution(a: &CVector, z: &CVector) -> CVector {
    let an = a.norm();
    if an == 0.0 {
        return z.clone();
    }
    let unit = a / Complex64::from(an);
    let delta = z - a;
    let along = inner(&delta, &unit);
    let p = &unit * along;
    let q = &delta - &p;
    let s = one_minus_sq(an).sqrt();
    let denom = Complex64::new(1.0, 0.0) - inner(z, a);
    -(p + q * Complex64::from(s)) / denom
}

/// Differential of [`involution`] at `z` applied to `v`.
pub fn involution_differential(a: &CVector, z: &CVector, v: &CVector) -> CVector {
    let an = a.norm();
    if an == 0.0 {
        return v.clone();
    }
    let unit = a / Complex64::from(an);
    let s = one_minus_sq(an).sqrt();
    let pv = &unit * inner(v, &unit);
    let qv = v - &pv;
    let denom = Complex64::new(1.0, 0.0) - inner(z, a);
    let image = involution(a, z);
    (-(pv + qv * Complex64::from(s)) + image * inner(v, a)) / denom
}

/// Ball automorphism `z ↦ U φ_a(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMobius {
    pub a: BallPoint,
    pub unitary: Unitary,
}

/// The standard automorphism sending `a` to the origin (unitary part = identity).
pub fn ball_mobius(a: &BallPoint) -> BallMobius {
    BallMobius { a: a.clone(), unitary: Unitary::identity(a.dim()) }
}

impl BallMobius {
    pub fn new(a: BallPoint, unitary: Unitary) -> Result<Self> {
        if a.dim() != unitary.dim() {
            return Err(GeoError::DimensionMismatch(a.dim(), unitary.dim()));
        }
        Ok(Self { a, unitary })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn apply_vector(&self, z: &CVector) -> CVector {
        let image = involution(self.a.value(), z);
        if self.unitary.is_identity() {
            image
        } else {
            self.unitary.apply(&image)
        }
    }

    pub fn apply(&self, z: &BallPoint) -> Result<BallPoint> {
        self.a.check_dim(z)?;
        Ok(BallPoint::guarded(self.apply_vector(z.value())))
    }

    /// `(U φ_a)⁻¹ = φ_a U* = U* φ_{Ua}`.
    pub fn invert(&self) -> BallMobius {
        let ua = BallPoint::guarded(self.unitary.apply(self.a.value()));
        BallMobius { a: ua, unitary: self.unitary.adjoint() }
    }
}

/// Forwarder kept for symmetry with the disc API.
pub fn ball_mobius_apply(m: &BallMobius, z: &BallPoint) -> Result<BallPoint> {
    m.apply(z)
}

pub fn ball_mobius_invert(m: &BallMobius) -> BallMobius {
    m.invert()
}

/// Kobayashi distance of the ball, `artanh ‖φ_z(w)‖`.
///
/// Uses `‖φ_z(w)‖ / sqrt(1 − ‖φ_z(w)‖²) = ‖P_z δ + s_z Q_z δ‖ / sqrt((1 − ‖z‖²)(1 − ‖w‖²))`
/// so that the `asinh` form stays accurate for nearby and for near-boundary points.
pub fn kobayashi_distance(z: &BallPoint, w: &BallPoint) -> Result<f64> {
    z.check_dim(w)?;
    Ok(distance_unchecked(z.value(), w.value()))
}

pub(crate) fn distance_unchecked(z: &CVector, w: &CVector) -> f64 {
    let delta = w - z;
    let zn = z.norm();
    let numerator = if zn == 0.0 {
        delta.norm()
    } else {
        let unit = z / Complex64::from(zn);
        let along = inner(&delta, &unit);
        let q = &delta - &unit * along;
        (along.norm_sqr() + one_minus_sq(zn) * q.norm_squared()).sqrt()
    };
    let denom = (one_minus_sq(zn) * one_minus_sq(w.norm())).sqrt();
    (numerator / denom).asinh()
}

/// Kobayashi infinitesimal metric `sqrt(‖v‖²/(1−‖z‖²) + |⟨v,z⟩|²/(1−‖z‖²)²)`.
pub fn kobayashi_metric(t: &BallTangent) -> f64 {
    let d = t.base.one_minus_norm_sq();
    let vz = inner(&t.vector, t.base.value());
    (t.vector.norm_squared() / d + vz.norm_sqr() / (d * d)).sqrt()
}

/// A complex geodesic `φ(ζ) = to_origin⁻¹(ζ u)` with its left inverse
/// `ρ̃(x) = ⟨to_origin(x), u⟩` and Lempert projection `ρ = φ ∘ ρ̃`.
#[derive(Clone, Debug)]
pub struct LempertDevice {
    to_origin: BallMobius,
    from_origin: BallMobius,
    direction: CVector,
    complement: Vec<CVector>,
    t_param: f64,
}

/// Serializable summary of a device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceDescriptor {
    pub base: BallPoint,
    pub direction: Vec<Complex64>,
    pub t_param: f64,
}

impl LempertDevice {
    fn build(to_origin: BallMobius, direction: CVector, t_param: f64) -> Self {
        let from_origin = to_origin.invert();
        let complement = orthonormal_complement(&direction);
        Self { to_origin, from_origin, direction, complement, t_param }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn to_origin(&self) -> &BallMobius {
        &self.to_origin
    }

    pub fn direction(&self) -> &CVector {
        &self.direction
    }

    pub fn t_param(&self) -> f64 {
        self.t_param
    }

    /// Orthonormal basis of the complement of the direction, used to walk fibers.
    pub(crate) fn complement(&self) -> &[CVector] {
        &self.complement
    }

    pub fn phi_value(&self, zeta: Complex64) -> CVector {
        self.from_origin.apply_vector(&(&self.direction * zeta))
    }

    /// `φ(ζ)`.
    pub fn phi(&self, zeta: &DiscPoint) -> BallPoint {
        BallPoint::guarded(self.phi_value(zeta.value()))
    }

    /// Point of the ball with normalized coordinates `ζ u + y`, `y ⊥ u`.
    pub(crate) fn from_normalized(&self, normalized: &CVector) -> CVector {
        self.from_origin.apply_vector(normalized)
    }

    pub fn left_inverse_value(&self, x: &CVector) -> Complex64 {
        inner(&self.to_origin.apply_vector(x), &self.direction)
    }

    /// `ρ̃(x)`.
    pub fn left_inverse(&self, x: &BallPoint) -> Result<DiscPoint> {
        if x.dim() != self.dim() {
            return Err(GeoError::DimensionMismatch(self.dim(), x.dim()));
        }
        Ok(DiscPoint::guarded(self.left_inverse_value(x.value())))
    }

    /// `ρ(x) = φ(ρ̃(x))`.
    pub fn project(&self, x: &BallPoint) -> Result<BallPoint> {
        let zeta = self.left_inverse(x)?;
        Ok(self.phi(&zeta))
    }

    /// Euclidean distance from `b ∈ ∂𝔹ⁿ` to the boundary circle of `φ(𝔻)`.
    ///
    /// The image is the affine slice `L ∩ 𝔹ⁿ`; its boundary circle has center
    /// `p₀` (foot of the perpendicular from 0 to `L`) and radius `sqrt(1 − ‖p₀‖²)`.
    pub fn boundary_distance(&self, b: &CVector) -> f64 {
        let p = self.phi_value(Complex64::new(0.0, 0.0));
        let q = self.phi_value(Complex64::new(0.5, 0.0));
        let d = &q - &p;
        let d = &d / Complex64::from(d.norm());
        let p0 = &p - &d * inner(&p, &d);
        let rho = one_minus_sq(p0.norm()).max(0.0).sqrt();
        let e = b - &p0;
        let sq = e.norm_squared() + rho * rho - 2.0 * rho * inner(&e, &d).norm();
        sq.max(0.0).sqrt()
    }

    pub fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor {
            base: BallPoint::guarded(self.phi_value(Complex64::new(0.0, 0.0))),
            direction: self.direction.iter().copied().collect(),
            t_param: self.t_param,
        }
    }
}

fn orthonormal_complement(u: &CVector) -> Vec<CVector> {
    let n = u.len();
    let mut basis: Vec<CVector> = vec![u.clone()];
    for k in 0..n {
        let mut e = CVector::zeros(n);
        e[k] = Complex64::new(1.0, 0.0);
        for b in &basis {
            let c = inner(&e, b);
            e -= b * c;
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / Complex64::from(norm));
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Complex geodesic with `φ(0) = z` and `φ(t) = w`, `t = tanh k(z, w)`.
pub fn geodesic_through(z: &BallPoint, w: &BallPoint) -> Result<LempertDevice> {
    z.check_dim(w)?;
    let to_origin = ball_mobius(z);
    let y = to_origin.apply_vector(w.value());
    let t = y.norm();
    if t <= 1e-14 {
        return Err(GeoError::DegenerateGeodesic);
    }
    let u = y / Complex64::from(t);
    Ok(LempertDevice::build(to_origin, u, t))
}

/// Complex geodesic with `φ(0) = t.base` and `dφ₀(1)` a positive multiple of `t.vector`.
pub fn geodesic_tangent(t: &BallTangent) -> Result<LempertDevice> {
    let vn = t.vector.norm();
    if vn == 0.0 {
        return Err(GeoError::ZeroTangent);
    }
    let a = t.base.value();
    let an = a.norm();
    let u = if an == 0.0 {
        &t.vector / Complex64::from(vn)
    } else {
        // dφ_a(0) = −(s² P_a + s Q_a); invert it on v
        let unit = a / Complex64::from(an);
        let s = one_minus_sq(an).sqrt();
        let pv = &unit * inner(&t.vector, &unit);
        let qv = &t.vector - &pv;
        let raw = -(pv / Complex64::from(s * s) + qv / Complex64::from(s));
        let n = raw.norm();
        raw / Complex64::from(n)
    };
    Ok(LempertDevice::build(ball_mobius(&t.base), u, 0.0))
}

/// `ρ̃_φ(x)`.
pub fn device_left_inverse(d: &LempertDevice, x: &BallPoint) -> Result<DiscPoint> {
    d.left_inverse(x)
}

/// `ρ_φ(x)`.
pub fn device_project(d: &LempertDevice, x: &BallPoint) -> Result<BallPoint> {
    d.project(x)
}

/// Membership in the horosphere `E(e₁, R) = {z : |1 − z₁|² < R (1 − ‖z‖²)}`.
pub fn horosphere_membership(size: f64, z: &BallPoint) -> Result<bool> {
    if !(size.is_finite() && size > 0.0) {
        return Err(GeoError::NonPositiveRadius(size));
    }
    Ok(horosphere_test(size, z.value()))
}

#[inline]
pub(crate) fn horosphere_test(size: f64, z: &CVector) -> bool {
    (Complex64::new(1.0, 0.0) - z[0]).norm_sqr() < size * one_minus_sq(z.norm())
}

/// The two retractions of the bidisc onto its diagonal, `(z, z)` and the midpoint map.
pub fn bidisc_projections_demo(z: Complex64, w: Complex64) -> Result<((Complex64, Complex64), (Complex64, Complex64))> {
    for c in [z, w] {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if c.norm() >= 1.0 {
            return Err(GeoError::OutsideRegion);
        }
    }
    let mid = (z + w) / 2.0;
    Ok(((z, z), (mid, mid)))
}

/// An opaque membership test on the ball.
#[derive(Clone)]
pub struct BallPredicate {
    pub name: String,
    test: Arc<dyn Fn(&CVector) -> bool + Send + Sync>,
}

impl BallPredicate {
    pub fn new(name: impl Into<String>, test: impl Fn(&CVector) -> bool + Send + Sync + 'static) -> Self {
        Self { name: name.into(), test: Arc::new(test) }
    }
}

impl fmt::Debug for BallPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BallPredicate({})", self.name)
    }
}

/// Catalogued subsets of `𝔹ⁿ`.
#[derive(Clone, Debug)]
pub enum BallRegion {
    /// The whole ball.
    Whole { dim: usize },
    KobayashiBall { center: BallPoint, radius: f64 },
    /// `E(e₁, size)`.
    Horosphere { size: f64, dim: usize },
    /// `E(e₁, outer) \ E(e₁, inner)`.
    HorosphereDifference { outer: f64, inner: f64, dim: usize },
    /// `X′ × {0}` with `X′` planar, embedded in the first coordinate.
    ProductSlice { planar: PlanarRegion, dim: usize },
    Predicate { dim: usize, predicate: BallPredicate },
}

impl BallRegion {
    pub fn kobayashi_ball(center: BallPoint, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeoError::NonPositiveRadius(radius));
        }
        Ok(BallRegion::KobayashiBall { center, radius })
    }

    pub fn horosphere(size: f64, dim: usize) -> Result<Self> {
        if !(size.is_finite() && size > 0.0) {
            return Err(GeoError::NonPositiveRadius(size));
        }
        Ok(BallRegion::Horosphere { size, dim })
    }

    pub fn horosphere_difference(outer: f64, inner: f64, dim: usize) -> Result<Self> {
        for r in [outer, inner] {
            if !(r.is_finite() && r > 0.0) {
                return Err(GeoError::NonPositiveRadius(r));
            }
        }
        Ok(BallRegion::HorosphereDifference { outer, inner, dim })
    }

    pub fn product_slice(planar: PlanarRegion, dim: usize) -> Self {
        BallRegion::ProductSlice { planar, dim }
    }

    pub fn predicate(dim: usize, name: impl Into<String>, test: impl Fn(&CVector) -> bool + Send + Sync + 'static) -> Self {
        BallRegion::Predicate { dim, predicate: BallPredicate::new(name, test) }
    }

    pub fn dim(&self) -> usize {
        match self {
            BallRegion::KobayashiBall { center, .. } => center.dim(),
            BallRegion::Whole { dim }
            | BallRegion::Horosphere { dim, .. }
            | BallRegion::HorosphereDifference { dim, .. }
            | BallRegion::ProductSlice { dim, .. }
            | BallRegion::Predicate { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, z: &BallPoint) -> bool {
        z.dim() == self.dim() && self.contains_vector(z.value())
    }

    pub fn contains_vector(&self, z: &CVector) -> bool {
        if !(z.norm() < 1.0) {
            return false;
        }
        match self {
            BallRegion::Whole { .. } => true,
            BallRegion::KobayashiBall { center, radius } => distance_unchecked(center.value(), z) < *radius,
            BallRegion::Horosphere { size, .. } => horosphere_test(*size, z),
            BallRegion::HorosphereDifference { outer, inner, .. } => {
                horosphere_test(*outer, z) && !horosphere_test(*inner, z)
            }
            BallRegion::ProductSlice { planar, .. } => {
                z.iter().skip(1).all(|c| c.norm_sqr() == 0.0) && planar.contains_value(z[0])
            }
            BallRegion::Predicate { predicate, .. } => (predicate.test)(z),
        }
    }

    /// Exact sampler for Kobayashi balls: the automorphic image of a round ball.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<BallPoint> {
        match self {
            BallRegion::KobayashiBall { center, radius } => {
                let y = crate::sampling::uniform_in_ball(rng, center.dim(), radius.tanh());
                let x = involution(center.value(), &CVector::from_vec(y));
                Some(BallPoint::guarded(x))
            }
            _ => None,
        }
    }

    /// Deterministic candidate points, all members of the region.
    pub fn hint_points(&self) -> Vec<BallPoint> {
        let n = self.dim();
        let axis = |x: Complex64, y: Complex64| {
            let mut v = CVector::zeros(n);
            v[0] = x;
            if n > 1 {
                v[1] = y;
            }
            BallPoint::guarded(v)
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut hints = match self {
            BallRegion::Whole { .. } => vec![BallPoint::origin(n)],
            BallRegion::KobayashiBall { center, .. } => vec![center.clone()],
            BallRegion::Horosphere { size, .. } => {
                let start = ((1.0 - size) / (1.0 + size)).atanh();
                HINT_DEPTHS.iter().map(|d| axis(Complex64::new((start + d + 0.5).tanh(), 0.0), zero)).collect()
            }
            BallRegion::HorosphereDifference { outer, inner, .. } => {
                let mut pts = Vec::new();
                let p1 = ((1.0 - outer) / (1.0 + outer)).atanh();
                let p2 = ((1.0 - inner) / (1.0 + inner)).atanh();
                pts.push(axis(Complex64::new(((p1 + p2) / 2.0).tanh(), 0.0), zero));
                if n > 1 {
                    // deep points: choose the second coordinate so that
                    // 1 − ‖z‖² sits between |1 − z₁|²/outer and |1 − z₁|²/inner
                    for d in HINT_DEPTHS.iter().map(|d| d + 0.5) {
                        let x = d.tanh();
                        let gap = (1.0 - x) * (1.0 - x);
                        let target = gap * 0.5 * (1.0 / outer + 1.0 / inner);
                        let y2 = one_minus_sq(x) - target;
                        if y2 > 0.0 {
                            pts.push(axis(Complex64::new(x, 0.0), Complex64::new(y2.sqrt(), 0.0)));
                        }
                    }
                }
                pts
            }
            BallRegion::ProductSlice { planar, .. } => {
                planar.hint_centers().into_iter().map(|c| axis(c, zero)).collect()
            }
            BallRegion::Predicate { .. } => vec![BallPoint::origin(n)],
        };
        hints.retain(|p| self.contains(p));
        hints
    }

    pub fn describe(&self) -> String {
        match self {
            BallRegion::Whole { dim } => format!("ball {}", dim),
            BallRegion::KobayashiBall { center, radius } => {
                let coords: Vec<String> = center.value().iter().map(|c| format_complex(*c)).collect();
                format!("kball {} {}", coords.join(","), radius)
            }
            BallRegion::Horosphere { size, .. } => format!("horosphere {}", size),
            BallRegion::HorosphereDifference { outer, inner, .. } => format!("horodiff {} {}", outer, inner),
            BallRegion::ProductSlice { planar, .. } => format!("product {}", planar.describe()),
            BallRegion::Predicate { predicate, .. } => format!("custom {}", predicate.name),
        }
    }
}

pub(crate) fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}
