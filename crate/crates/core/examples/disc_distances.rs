//! Poincaré distance, metric and disc automorphisms.
use geolab::disc::{poincare_distance, poincare_metric, DiscPoint, DiscTangent, MobiusDisc, PlanarRegion};
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let o = DiscPoint::origin();
    for x in [0.5, 0.9, 0.99, 1.0 - 1e-9] {
        let p = DiscPoint::from_re_im(x, 0.0)?;
        println!("k(0, {x}) = {:.12}  (artanh = {:.12})", poincare_distance(&o, &p), f64::atanh(x));
    }

    let a = DiscPoint::from_re_im(0.3, -0.4)?;
    let m = MobiusDisc::new(a, 0.7);
    let (z, w) = (DiscPoint::from_re_im(0.1, 0.8)?, DiscPoint::from_re_im(-0.6, 0.2)?);
    println!(
        "automorphism invariance: k(z, w) = {:.15}, k(mz, mw) = {:.15}",
        poincare_distance(&z, &w),
        poincare_distance(&m.apply(&z), &m.apply(&w))
    );

    let t = DiscTangent::new(DiscPoint::from_re_im(0.5, 0.0)?, Complex64::new(1.0, 0.0))?;
    println!("metric at 0.5 in direction 1: {:.12} (= 1/0.75)", poincare_metric(&t));

    let ball = PlanarRegion::hyper_ball(a, 1.0)?;
    let (center, radius) = ball.euclidean_disc().expect("hyperbolic discs are Euclidean discs");
    println!("B({a}, 1) is the Euclidean disc |z - {center:.6}| < {radius:.6}");
    Ok(())
}
