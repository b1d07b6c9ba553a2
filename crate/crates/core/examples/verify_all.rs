//! Runs every scenario in-process and prints the summary table.
use geolab::scenarios::{run_scenario, Tolerances, DEFAULT_SEED, SCENARIO_IDS};

fn main() -> geolab::Result<()> {
    let tol = Tolerances::default();
    let mut all = true;
    for id in SCENARIO_IDS {
        let start = std::time::Instant::now();
        let r = run_scenario(id, DEFAULT_SEED, &tol)?;
        all &= r.pass;
        println!("{:<24} {:<5} {:>6.1}s  {}", id, if r.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), r.statement_ref);
        for m in &r.metrics {
            println!("    {:<32} {}", m.name, m.value);
        }
    }
    std::process::exit(if all { 0 } else { 4 });
}
