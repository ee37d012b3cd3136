//! Driving the learner directly: fill the table until closed and
//! consistent, then read off the hypothesis.

use probcheck::blackbox::{wrap_whitebox, Sut};
use probcheck::learner::{LearnerConfig, ObservationTable, Stabilization};
use probcheck::mdp::two_state_example;
use probcheck::model_file::write_mdp;

fn main() {
    let mut sut = wrap_whitebox(two_state_example(), 1);
    let root = sut.reset();
    let mut table = ObservationTable::new(sut.alphabet().clone(), root, LearnerConfig::default());
    let stab = table.close_and_consistentize(&mut sut, 50_000);
    assert_eq!(stab, Stabilization::Stable);

    let al = table.alphabet().clone();
    println!("rows:");
    for r in table.rows() {
        println!("  {}", r.display(&al));
    }
    println!("columns:");
    for c in table.columns() {
        println!("  {}", c.display(&al));
    }
    let hyp = table.build_hypothesis().unwrap();
    println!("representatives: {:?}", hyp.representatives);
    println!("{}", write_mdp(&hyp.mdp));
    println!("{} steps used", sut.steps_taken());
}
