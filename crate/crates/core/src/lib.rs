pub mod actionmap;
pub mod agents;
pub mod arena;
pub mod constants;
pub mod env;
pub mod geom;
pub mod mapgen;
pub mod metrics;
pub mod obs;
pub mod replay;
pub mod reward;
pub mod rules;
pub mod state;
