//! The plain-text model format: generate, write, parse back.

use probcheck::bench::Generator;
use probcheck::model_file::{parse_mdp, write_mdp};

fn main() {
    let text = "mdp\n\
                # a coin that can be re-tossed\n\
                label heads heads\n\
                label tails tails\n\
                state h heads init\n\
                state t tails\n\
                trans h toss h 0.5\n\
                trans h toss t 0.5\n\
                trans t toss h 0.5\n\
                trans t toss t 0.5\n";
    let coin = parse_mdp(text).unwrap();
    println!("{} states, inputs {:?}", coin.num_states(), coin.alphabet().inputs);

    let grid = "grid:3x3:seed=4".parse::<Generator>().unwrap().build().unwrap();
    let written = write_mdp(&grid);
    assert_eq!(write_mdp(&parse_mdp(&written).unwrap()), written);
    print!("{written}");

    println!("{}", parse_mdp("mdp\nstate a a init\n").unwrap_err());
}
