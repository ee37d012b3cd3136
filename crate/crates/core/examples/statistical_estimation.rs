//! Estimating the satisfaction probability of a fixed strategy by sampling,
//! with the Chernoff sample size and a one-sample t-test.

use probcheck::blackbox::{sample_scaffolded, wrap_whitebox};
use probcheck::ltl::{parse, Monitor, Verdict};
use probcheck::mdp::two_state_example;
use probcheck::pmc;
use probcheck::stats::{bernoulli_mean_std, chernoff_sample_size, t_test_one_sample};
use probcheck::validator::trace_verdict;

fn main() {
    let m = two_state_example();
    let f = parse("F[0,3) q").unwrap();
    let res = pmc::check(&m, &f).unwrap();
    let monitor = Monitor::new(&f).unwrap();
    let horizon = f.horizon().unwrap();

    let n = chernoff_sample_size(0.01, 0.01).unwrap();
    let mut sut = wrap_whitebox(m.clone(), 3);
    let hits = (0..n)
        .filter(|_| {
            let run = sample_scaffolded(&mut sut, &m, &res.strategy, horizon);
            trace_verdict(&m, &monitor, &run.trace) == Verdict::True
        })
        .count();
    let (mean, std) = bernoulli_mean_std(hits, n);
    let test = t_test_one_sample(res.value, mean, std, n, 0.025).unwrap();
    println!("N = {n}: estimate {mean:.4} vs exact {:.4}", res.value);
    println!("t = {:.3}, p = {:.3}, reject = {}", test.statistic, test.p_value, test.reject);
}
