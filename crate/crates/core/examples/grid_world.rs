//! A seeded random 4x4 grid world checked as a black box against its
//! white-box optimum for `(!hole) U goal`.

use probcheck::bench::random_grid_world;
use probcheck::blackbox::wrap_whitebox;
use probcheck::ltl::parse;
use probcheck::orchestrator::{curve_csv, run, NullSink, RunConfig};
use probcheck::pmc;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let grid = random_grid_world(4, seed).unwrap();
    let formula = parse("(!hole) U goal").unwrap();
    let truth = pmc::check(&grid, &formula).unwrap().value;

    let mut sut = wrap_whitebox(grid, 0);
    let report = run(&mut sut, &formula, &RunConfig::default(), &mut NullSink).unwrap();
    let estimate = report.final_estimate.unwrap_or(0.0);
    println!("grid seed {seed}: truth {truth:.4}, estimate {estimate:.4} ({:.1}% of truth)", 100.0 * estimate / truth);
    println!("{} learned states, {} steps", report.hypothesis.mdp.num_states(), report.steps_taken);
    print!("{}", curve_csv(&report.curve));
}
