//! Kobayashi distance of the ball, complex geodesics and their left inverses.
use geolab::ball::{geodesic_through, kobayashi_distance, BallPoint};
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let z = BallPoint::new(vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.0)])?;
    let w = BallPoint::new(vec![Complex64::new(0.5, -0.1), Complex64::new(0.2, 0.4)])?;
    let d = geodesic_through(&z, &w)?;
    println!("k(z, w) = {:.12}", kobayashi_distance(&z, &w)?);
    println!("device: t = {:.12}, artanh t = {:.12}", d.t_param(), d.t_param().atanh());
    println!("phi(0) = {}", BallPoint::new(d.phi_value(Complex64::new(0.0, 0.0)).iter().copied().collect())?);
    println!("phi(t) = {}", BallPoint::new(d.phi_value(Complex64::new(d.t_param(), 0.0)).iter().copied().collect())?);

    // the left inverse is a retraction onto the geodesic and does not expand distances
    let x = BallPoint::new(vec![Complex64::new(-0.2, 0.5), Complex64::new(0.1, 0.1)])?;
    let y = BallPoint::new(vec![Complex64::new(0.0, -0.7), Complex64::new(0.3, -0.2)])?;
    let (px, py) = (d.left_inverse(&x)?, d.left_inverse(&y)?);
    println!(
        "k_D(rho x, rho y) = {:.6} <= k_B(x, y) = {:.6}",
        geolab::disc::poincare_distance(&px, &py),
        kobayashi_distance(&x, &y)?
    );
    let p = d.project(&x)?;
    println!("projection is idempotent: |rho(rho x) - rho x| = {:e}", (d.project(&p)?.value() - p.value()).norm());
    Ok(())
}
