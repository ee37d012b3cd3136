//! Streaming the loop's progress as JSON lines.

use std::io;

use probcheck::blackbox::wrap_whitebox;
use probcheck::bench::crash_model;
use probcheck::ltl::parse;
use probcheck::orchestrator::{run, JsonLines, RunConfig};

fn main() {
    let mut sut = wrap_whitebox(crash_model(0.05).unwrap(), 2);
    let cfg = RunConfig {
        budget: 100_000,
        ..RunConfig::default()
    };
    let mut sink = JsonLines(io::stdout().lock());
    let report = run(&mut sut, &parse("F[0,10) crash").unwrap(), &cfg, &mut sink).unwrap();
    eprintln!("estimate {:?}", report.final_estimate);
}
