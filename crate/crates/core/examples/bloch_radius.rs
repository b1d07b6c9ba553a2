//! Bloch radius estimates for planar and ball regions.
use geolab::ball::{BallPoint, BallRegion};
use geolab::blochness::{bloch_radius, EstimatorConfig};
use geolab::disc::{DiscPoint, PlanarRegion};
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let cfg = EstimatorConfig::default();
    let one = Complex64::new(1.0, 0.0);
    let planar = [
        PlanarRegion::hyper_ball(DiscPoint::from_re_im(0.3, 0.3)?, 0.75)?,
        PlanarRegion::euclid_disc(Complex64::new(0.0, 0.0), 0.5)?,
        PlanarRegion::horodisc(one, 1.0)?,
        PlanarRegion::difference(PlanarRegion::horodisc(one, 2.0)?, PlanarRegion::horodisc(one, 1.0)?),
        PlanarRegion::annulus(0.5)?,
    ];
    for region in &planar {
        let r = bloch_radius(region, &cfg)?;
        println!("{:<40} R = {}", region.describe(), r.radius_estimate);
    }
    let ball = [
        BallRegion::kobayashi_ball(BallPoint::from_reals(&[0.2, -0.1])?, 1.0)?,
        BallRegion::horosphere_difference(2.0, 1.0, 2)?,
        BallRegion::product_slice(PlanarRegion::unit_disc(), 2),
    ];
    for region in &ball {
        let r = bloch_radius(region, &cfg)?;
        println!("{:<40} R = {}", region.describe(), r.radius_estimate);
    }
    Ok(())
}
