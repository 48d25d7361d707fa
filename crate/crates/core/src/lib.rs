//! Planning with sketches: PDDL grounding, state spaces, description-logic
//! features, width-based search, sketch verification and sketch learning.

pub mod pddl;
pub mod task;
pub mod statespace;
pub mod dl;
pub mod sketch;
pub mod search;
pub mod verify;
pub mod learn;
