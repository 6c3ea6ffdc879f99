//! Simulation and exact analysis of asynchronous randomized gossip
//! averaging over unreliable two-way links.

pub mod dyadic;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod process;
pub mod rng;
pub mod schedule;
pub mod selection;
pub mod sim;
pub mod verify;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use graph::{induced_graph, Digraph};
pub use process::{CommModel, Selection};
pub use rng::{Purpose, RandomStream};
pub use schedule::{Schedule, ScheduleClass, SchedulePair};
pub use matrix::{StochasticMatrix, UpdateKind, UpdateMatrix};
pub use selection::{structural_constants, RowSumMode, SelectionMatrix, StructuralConstants};
