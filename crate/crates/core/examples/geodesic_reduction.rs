//! Reduction of a ball IFS to a disc IFS along complex geodesics through two orbits.
use geolab::ball::{BallPoint, BallRegion};
use geolab::blochness::DeviceSampleConfig;
use geolab::ifs::{compose_run, reduce_system, reduced_image_bound, RunOptions};
use geolab::scenarios::random_ball_system;
use geolab::Point;
use num_complex::Complex64;

fn main() -> geolab::Result<()> {
    let center = BallPoint::origin(2);
    let ifs = random_ball_system(7, &center)?;
    let z = BallPoint::from_reals(&[0.2, 0.1])?;
    let w = BallPoint::new(vec![Complex64::new(-0.1, 0.4), Complex64::new(0.3, 0.0)])?;

    let run = compose_run(&ifs, &[Point::from(z.clone()), Point::from(w.clone())], &RunOptions::default())?;
    println!("ball IFS: {} after {} steps", run.classification.name(), run.iterations_used);

    let rs = reduce_system(&ifs, &z, &w, 12)?;
    println!("reduced system: {} steps, tracking residual {:e}, pin residual {:e}", rs.steps_completed, rs.tracking_residual, rs.pin_residual);
    for j in 1..=4 {
        println!("  t_{} = {:.6e}, g_j...g_1(t_1) = {:.6e}", j + 1, rs.t_params[j], rs.composed_t[j - 1]);
    }

    let x = BallRegion::kobayashi_ball(center, 1.0)?;
    for b in reduced_image_bound(&rs, &x, &DeviceSampleConfig::default())?.iter().take(3) {
        println!("  step {}: Bloch radius of the projected image {}", b.step, b.radius);
    }
    Ok(())
}
