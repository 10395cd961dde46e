//! Modeling, control, and simulation toolkit for coupled tendon-driven
//! manipulators.
//!
//! A manipulator is described as a rigid-body chain actuated by wire routes.
//! Each route is a chain of geometric segments (straight spans between
//! anchor points on different links, circular wraps around joint pulleys)
//! whose total length depends on the joint configuration. The toolkit
//! provides:
//!
//! * [`model`] — model description, file format, validation
//! * [`kinematics`] — forward kinematics, point Jacobians, wire lengths and
//!   the muscle Jacobian `G(q) = ∂l/∂q`
//! * [`dynamics`] — joint-space dynamics, operational-space inertia,
//!   effective mass and contact-force bounds
//! * [`tension`] — box-constrained tension distribution (small dense QP)
//! * [`controller`] — computed-torque control with wire-space velocity
//!   feedback
//! * [`sim`] — closed-loop simulation with elastic or ideal transmission
//! * [`cli`] — command-line entry points
//!
//! Tensions are always pulling (`f ≥ 0`); the torque generated by a tension
//! vector `f` is `τ = −Gᵀ f`.

pub mod textfmt;
pub mod fixtures;
pub mod model;
pub mod kinematics;
pub mod dynamics;
pub mod tension;
pub mod controller;
pub mod sim;
pub mod cli;
