//! The horosphere difference E(2) \ E(1) in the 2-ball: c-Bloch but not 1-Bloch.
use geolab::ball::{geodesic_tangent, BallPoint, BallRegion, BallTangent};
use geolab::blochness::{c_bloch_certify, one_bloch_certify_devices, BoundaryExclusion, DeviceSampleConfig};
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let x = BallRegion::horosphere_difference(2.0, 1.0, 2)?;
    let c = |re: f64| Complex64::new(re, 0.0);
    let cfg = DeviceSampleConfig {
        num_devices: 50,
        avoid_boundary_point: Some(BoundaryExclusion { point: vec![c(1.0), c(0.0)], radius: 0.1 }),
        ..DeviceSampleConfig::default()
    };
    let report = c_bloch_certify(&x, &cfg)?;
    println!(
        "c-Bloch: {} devices kept, {} rejected near (1,0); max radius {} (doubled {}), stable {}",
        report.per_device.len(),
        report.rejected_devices,
        report.max_radius,
        report.doubled_max_radius,
        report.stability_flag
    );

    let axis = geodesic_tangent(&BallTangent::new(BallPoint::origin(2), vec![c(1.0), c(0.0)])?)?;
    let one = one_bloch_certify_devices(&x, &[axis], &DeviceSampleConfig::default())?;
    println!("1-Bloch through the axis geodesic: {}", one.max_radius);
    Ok(())
}
