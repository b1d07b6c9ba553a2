//! The product system f_j(z) = ((1 - 2^-j) z1, 0): a non-constant limit.
use geolab::ball::BallPoint;
use geolab::ifs::{compose_run, example_product_ifs, product_limit_constant, RunOptions};
use geolab::Point;

fn main() -> geolab::Result<()> {
    let probe: Vec<Point> = [[-0.8, 0.1], [-0.4, 0.0], [0.1, 0.3], [0.3, -0.2], [0.7, 0.2]]
        .iter()
        .map(|c| BallPoint::from_reals(c).map(Point::from))
        .collect::<geolab::Result<_>>()?;
    let run = compose_run(&example_product_ifs(2), &probe, &RunOptions { max_iter: 60, ..RunOptions::default() })?;
    println!("classification after {} steps: {}", run.iterations_used, run.classification.name());
    let c = product_limit_constant(60);
    println!("limit constant c = {c:.12}");
    for (p, q) in probe.iter().zip(&run.final_points) {
        println!("  {p} -> {q}   (c z1 = {:.12})", p.coords()[0].re * c);
    }
    for (j, d) in run.diam_trace.iter().step_by(10) {
        println!("  j = {j:>2}  diameter {d:.12}");
    }
    Ok(())
}
