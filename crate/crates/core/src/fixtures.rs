//! Small networks bundled with the crate.

use crate::io::parse_network;
use crate::model::DiscreteBayesNet;

pub const FORK3_JSON: &str = include_str!("../fixtures/fork3.json");
pub const SYNTH8_JSON: &str = include_str!("../fixtures/synth8.json");

/// `A -> B`, `A -> C` with a ternary `B`; 7 free parameters.
pub fn fork3() -> DiscreteBayesNet {
    parse_network(FORK3_JSON).expect("bundled fixture parses")
}

/// Two ternary trees, `A -> B -> C`, `A -> D` and `E -> F -> G`, `E -> H`;
/// six edges out of 28 pairs and 40 free parameters.
pub fn synth8() -> DiscreteBayesNet {
    parse_network(SYNTH8_JSON).expect("bundled fixture parses")
}
