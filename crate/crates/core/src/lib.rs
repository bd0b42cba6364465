//! Branched transport and generalized urban planning on finite instances.
//!
//! The crate works with discrete measures in `R^n`, concave transportation
//! costs `tau`, street networks `(S, b)` and polyhedral mass fluxes. It
//! evaluates both problems and converts solutions of one into candidates
//! for the other:
//!
//! * [`cost`]: costs `tau`, the maintenance cost `eps(b) = sup_m tau(m) - b m`
//!   and Fenchel-Young residuals.
//! * [`measures`]: discrete measures and transport plans.
//! * [`network`]: street networks, routing graphs and the urban metric.
//! * [`transport`]: exact discrete optimal transport.
//! * [`flow`]: fluxes, energies and the linear Beckmann solver.
//! * [`branched`]: a tree-enumeration solver for branched transport.
//! * [`bridge`]: flux-to-network and network-to-flux constructions and the
//!   equivalence check.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.

// Negated comparisons are how the validators reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branched;
pub mod bridge;
pub mod cost;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod geometry;
pub mod measures;
pub mod network;
pub mod scalar;
pub mod transport;

mod mcf;
mod shortest;

pub use branched::{momentum_residual, solve_branched, BranchedConfig, BranchedSolution};
pub use bridge::{flux_to_urban, urban_cost, urban_to_flux, verify_equivalence, EquivalenceReport, Scenario};
pub use cost::{CostFamily, CostFunction, MaintenanceCost, Piece, PiecewiseTerm};
pub use error::{Error, Result};
pub use flow::{solve_beckmann, FluxEdge, MassFlux};
pub use geometry::Point;
pub use measures::{Atom, DiscreteMeasure, SignedDiscreteMeasure, TransportPlan};
pub use network::{build_routing_graph, RoutingGraph, Street, StreetNetwork};
pub use scalar::{ExtReal, Finite, PlusInfinity, Scalar};
pub use transport::{solve_ot, wasserstein_urban};

pub type PointF64 = Point<f64>;
pub type CostFunctionF64 = CostFunction<f64>;
pub type DiscreteMeasureF64 = DiscreteMeasure<f64>;
pub type StreetNetworkF64 = StreetNetwork<f64>;
pub type MassFluxF64 = MassFlux<f64>;
pub type ScenarioF64 = Scenario<f64>;

pub type PointF32 = Point<f32>;
pub type CostFunctionF32 = CostFunction<f32>;
pub type DiscreteMeasureF32 = DiscreteMeasure<f32>;
pub type StreetNetworkF32 = StreetNetwork<f32>;
pub type MassFluxF32 = MassFlux<f32>;
