//! Nested differentiation: forward spatial jets inside a reverse parameter tape.

mod jet;
mod lanes;
mod tape;

pub use jet::{distance, sigmoid, SpatialJet, UnaryFn};
pub use lanes::{JetLanes, Lanes, LANES};
pub use tape::{NodeId, Tape};
