//! Probabilistic model checking of a known MDP and the strategy it yields.

use probcheck::bench::{slot_machine, SlotSpec};
use probcheck::ltl::parse;
use probcheck::pmc;

fn main() {
    let slot = slot_machine(&SlotSpec::default()).unwrap();
    for n in [2, 4, 6, 8] {
        let f = parse(&format!("F[0,{n}) BAR3")).unwrap();
        let res = pmc::check(&slot, &f).unwrap();
        // the synthesized strategy attains the optimum exactly
        let achieved = pmc::strategy_value(&slot, &res.strategy, &f, 1e-12).unwrap();
        println!("{f}: max {:.4}, strategy attains {achieved:.4}", res.value);
    }
    let unsupported = parse("X BAR3").unwrap();
    println!("{}", pmc::check(&slot, &unsupported).unwrap_err());
}
