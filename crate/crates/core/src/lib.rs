//! Compatible linear connections of Randers metrics `F = √α + β`.
//!
//! The crate decides whether a Randers metric admits a linear connection
//! whose parallel transports preserve `F`, builds the distinguished
//! compatible connection `∇° = ∇* + A` and the extremal (minimum-torsion)
//! compatible connection, and checks both against brute-force
//! minimum-norm solvers and parallel transport.

pub mod cli;
pub mod connection;
pub mod examples;
pub mod expr;
pub mod geometry;
pub mod oracle;
pub mod randers;
pub mod report;
pub mod tolerance;
pub mod transport;
