//! Simulation laboratory for human-model misspecification in reward
//! learning: literal and pedagogic demonstrators and robots on tile
//! gridworlds, cooperative-inference games with the best/improving
//! response hierarchy, predictive vs inferential likelihood, and the
//! estimation and experiment harness that ties them together.

pub mod agents;
pub mod coop;
pub mod estimation;
pub mod experiment;
pub mod grid;
pub mod likelihood;
pub mod qvalues;
pub mod rng;
