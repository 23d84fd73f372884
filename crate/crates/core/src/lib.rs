//! Exact divisor theory on metric graphs and tropical curves.
//!
//! Graphs carry exact rational (or infinite) edge lengths. On top of them
//! live divisors, piecewise-linear rational functions with integer slopes,
//! chip-firing reduction, ranks of divisors, and a cell enumerator for the
//! spaces of functions with bounded poles.

pub mod cells;
pub mod chip;
pub mod divisor;
pub mod error;
pub mod format;
pub mod function;
pub mod graph;
pub mod harness;
pub mod jacobian;
pub mod oracle;
pub mod polyhedron;
pub mod rank;
pub mod rational;

pub use cells::{enumerate_cells, max_cell_dimension, Cell, CellCaps, CellReport, CellSignature, Location};
pub use chip::{dhar_reduce, wins_effective, Reduction};
pub use divisor::{canonical, retract_divisor, Divisor};
pub use error::{Error, Result};
pub use function::{end_ramp, slope_bound, snap_ramp, EdgeFunction, ExtValue, RationalFunction};
pub use graph::{
    rescale, retract_core, unit_subdivide, Graph, GraphPoint, IntegerModel, Length, MetricGraph, Rescaling,
    Retraction,
};
pub use harness::{run_campaign, verify_rr, CampaignConfig, CampaignReport, InstanceRecord, Status};
pub use rational::Q;
pub use rank::{discrete_rank, linear_equiv, metric_rank, tropical_rank, RankMethod, RankOptions, RankReport};
