//! Handcrafted sketches in the sketch DSL, one file per (domain, width bound).

pub const GRIPPER_K0: &str = include_str!("../sketches/gripper_k0.sketch");
pub const GRIPPER_K1: &str = include_str!("../sketches/gripper_k1.sketch");
pub const GRIPPER_K2: &str = include_str!("../sketches/gripper_k2.sketch");
pub const DELIVERY_K0: &str = include_str!("../sketches/delivery_k0.sketch");
pub const DELIVERY_K1: &str = include_str!("../sketches/delivery_k1.sketch");
pub const DELIVERY_K2: &str = include_str!("../sketches/delivery_k2.sketch");
pub const BLOCKS_ON_K1: &str = include_str!("../sketches/blocks_on_k1.sketch");
pub const CHILDSNACK_K1: &str = include_str!("../sketches/childsnack_k1.sketch");
pub const MICONIC_K1: &str = include_str!("../sketches/miconic_k1.sketch");
pub const VISITALL_K1: &str = include_str!("../sketches/visitall_k1.sketch");
pub const SPANNER_K1: &str = include_str!("../sketches/spanner_k1.sketch");
