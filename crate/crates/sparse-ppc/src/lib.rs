//! Sparse packetized predictive control (PPC) of disturbed discrete-time
//! LTI plants over channels with bounded packet dropouts.
//!
//! The controller transmits the whole predicted input sequence as one packet
//! each step; an actuator-side buffer plays through stale packets during
//! dropout bursts. Packets come from sparsity-promoting optimization:
//!
//! * [`controllers::solve_l0_omp`] — minimum support subject to an ℓ²
//!   prediction-cost constraint, solved greedily by orthogonal matching
//!   pursuit;
//! * [`controllers::solve_l1l2_fista`] — ℓ¹-regularized quadratic cost,
//!   solved by FISTA.
//!
//! [`analysis`] evaluates the practical-stability certificates of both
//! designs (ultimate bounds Ψ₁ and Ψ on the state norm), and [`harness`]
//! runs the reference Monte-Carlo experiment with CSV/report/SVG outputs.

pub mod analysis;
pub mod controllers;
pub mod harness;
pub mod model;
pub mod network;
pub mod numerics;
