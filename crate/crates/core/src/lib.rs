//! Learning-based black-box checking for stochastic systems.
//!
//! A system under test is treated as an MDP whose state is hidden. The loop
//! in [`orchestrator`] learns a hypothesis MDP from sampled traces
//! ([`learner`]), synthesizes a strategy maximizing the probability of a
//! temporal property on it ([`pmc`]), and checks the hypothesis against the
//! real system under that strategy ([`validator`]).

pub mod bench;
pub mod blackbox;
pub mod cli;
pub mod learner;
pub mod ltl;
pub mod mdp;
pub mod model_file;
pub mod orchestrator;
pub mod pmc;
pub mod stats;
pub mod validator;

pub use mdp::{
    Alphabet, Distribution, FiniteMemoryStrategy, InputId, Mdp, MdpBuilder, MdpError, OutputId,
    OutputSymbol, Path, StateId, Trace,
};
