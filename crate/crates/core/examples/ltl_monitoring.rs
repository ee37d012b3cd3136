//! Parsing, desugaring and three-valued evaluation of finite traces.

use std::collections::BTreeSet;

use probcheck::ltl::{evaluate, parse};

fn word(letters: &[&[&'static str]]) -> Vec<BTreeSet<&'static str>> {
    letters.iter().map(|l| l.iter().copied().collect()).collect()
}

fn main() {
    let trace = word(&[&["concrete"], &["grass"], &["goal"]]);
    for text in ["(!hole) U goal", "F[0,2) goal", "G[0,3) !hole", "X X goal", "F[1,inf) grass"] {
        let f = parse(text).unwrap();
        println!(
            "{text:<16} desugars to {:<32} horizon {:<8} verdict {:?}",
            f.desugar().to_string(),
            f.horizon().map_or("inf".to_string(), |h| h.to_string()),
            evaluate(&trace, &f).unwrap()
        );
    }
    // neither goal nor hole yet
    let open = word(&[&["concrete"], &["grass"]]);
    println!("{:?}", evaluate(&open, &parse("(!hole) U goal").unwrap()).unwrap());
    println!("{}", parse("F[3,1) goal").unwrap_err());
}
