//! Strang splitting for vector- and matrix-valued Allen-Cahn equations on the
//! periodic torus, with pseudo-spectral heat flow and closed-form nonlinear flow.

pub mod harness;
pub mod matrix;
pub mod oracle;
pub mod potential;
pub mod spectral;
pub mod vector;
