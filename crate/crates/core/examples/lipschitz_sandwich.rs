//! Hyperbolic Lipschitz constants against the bounds tanh(R/2) <= mu <= tanh R.
use geolab::blochness::{sandwich_check, EstimatorConfig};
use geolab::disc::{DiscPoint, PlanarRegion};
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let cfg = EstimatorConfig::default();
    let regions = [
        PlanarRegion::hyper_ball(DiscPoint::origin(), 0.5)?,
        PlanarRegion::hyper_ball(DiscPoint::origin(), 2.0)?,
        PlanarRegion::hyper_ball(DiscPoint::from_re_im(-0.7, 0.0)?, 0.5)?,
        PlanarRegion::euclid_disc(Complex64::new(0.2, 0.0), 0.6)?,
        PlanarRegion::annulus(0.3)?,
        PlanarRegion::horodisc(Complex64::new(1.0, 0.0), 1.0)?,
    ];
    println!("{:<36} {:>10} {:>9} {:>9} {:>9}  verdict", "region", "R", "lower", "mu", "upper");
    for region in &regions {
        let s = sandwich_check(region, &cfg)?;
        println!("{:<36} {:>10} {:>9.5} {:>9.5} {:>9.5}  {:?}", s.region, s.r_est.to_string(), s.lower, s.mu_est, s.upper, s.verdict);
    }
    Ok(())
}
