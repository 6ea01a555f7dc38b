//! Closed-loop supply chain planning and simulation engine.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`netmodel`] — the network data model (echelons, arcs, products,
//!   demand, capacity buffers) and its validation.
//! * [`flowcore`] — time-expanded graph construction and an exact
//!   min-cost flow solver with an independent optimality certificate.
//! * [`tpm`] — the tactical planning model: profit maximisation,
//!   lead-time minimisation, profit-rate (SSCP) maximisation via
//!   Dinkelbach iteration, and an epsilon-constraint Pareto frontier.
//! * [`flexctl`] — buffer monitoring, the re-planning trigger, the
//!   flexibility actions, and lead-time-interval accounting.
//! * [`simloop`] — the discrete-period rolling-horizon simulator with
//!   deterministic counter-based uncertainty sampling.
//! * [`circmetrics`] — circular-economy material accounting over a
//!   simulation trace.
//!
//! The crate is `no_std` (alloc required); everything IO-related lives
//! in the companion CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circmetrics;
pub mod flexctl;
pub mod flowcore;
pub mod netmodel;
pub mod rng;
pub mod simloop;
pub mod tpm;

pub use netmodel::{
    Arc, ArcKey, CapacitySpec, DemandKey, Direction, Network, Node, NodeId, NodeKind,
    PlanningProblem, Product, ProductId, ResourceId, RouteKey, ValidationIssue, ValidationReport,
};
