pub mod automata;
pub mod business_map;
pub mod genetics;
pub mod geometry;
pub mod kinetics;
pub mod network;
pub mod registry;
pub mod scenario;
pub mod sourcing;
