//! Both counterexample sources: a witness from frequency deviations and
//! random equivalence testing that leaves the hypothesis.

use probcheck::blackbox::{wrap_whitebox, SampleMultiset, Sut};
use probcheck::mdp::two_state_example;
use probcheck::validator::{construct_witness, equivalence_test_random, EqTestParams};
use probcheck::{MdpBuilder, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let hyp = two_state_example();

    // the system moves p -a-> q with 0.8 where the hypothesis says 0.5
    let mut b = MdpBuilder::new();
    let p = b.state("p", "p");
    let q = b.state("q", "q");
    b.initial(p)
        .trans(p, "a", p, 0.2)
        .trans(p, "a", q, 0.8)
        .trans(p, "b", p, 1.0)
        .trans(q, "a", p, 0.4)
        .trans(q, "a", q, 0.6)
        .trans(q, "b", q, 1.0);
    let truth = b.build().unwrap();

    let mut sut = wrap_whitebox(truth.clone(), 5);
    let mut samples = SampleMultiset::new(sut.reset());
    for _ in 0..2000 {
        let head = sut.reset();
        let o = sut.step(0);
        samples.record(&Trace::from_steps(head, [(0, o)])).unwrap();
    }
    match construct_witness(&hyp, &samples, 0.025) {
        Some(w) => println!("witness: {}", w.display(hyp.alphabet())),
        None => println!("no witness"),
    }

    // the system keeps q under b, the hypothesis lets it return to p
    let mut params = EqTestParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let outcome = equivalence_test_random(&hyp, &mut sut, &mut params, &mut samples, 0.025, u64::MAX, &mut rng);
    println!("equivalence test: {}", serde_json::to_string(&outcome).unwrap());
}
