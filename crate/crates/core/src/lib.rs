//! Hierarchical TSO-DSO optimal power flow coordination on convex grid models.
//!
//! The crate compares two ways of coordinating one transmission operator with a set
//! of radial distribution feeders against a centralized reference solve:
//!
//! * flexibility aggregation ([`adp`]): every DSO projects its feasible set onto the
//!   interface variables (p, q, squared voltage) with exact Fourier-Motzkin
//!   elimination ([`projection`]), fits a quadratic surrogate of its cost
//!   ([`value_function`]), and the TSO dispatches against those aggregates;
//! * consensus ADMM ([`admm`]) on copies of the interface variables.
//!
//! All solves go through the dense interior point kernel in [`opt`]; all
//! inter-agent traffic is accounted in [`messaging`].

pub mod admm;
pub mod bench;
pub mod adp;
pub mod grid;
pub mod messaging;
pub mod models;
pub mod opt;
pub mod projection;
pub mod value_function;

pub use grid::{GridCase, Interconnection, Partition};
pub use opt::{QpSolution, QpStatus, QuadraticProgram};
pub use projection::Polyhedron;
pub use value_function::QuadraticValueFn;
