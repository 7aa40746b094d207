//! Scattering resonances of compactly supported Schrödinger operators,
//! located as the points where the discretized resolvent norm blows up.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the matrix formulas
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision,
    clippy::too_many_arguments
)]

pub mod cli;
pub mod greens;
pub mod kernel;
pub mod metrics;
pub mod oracle;
pub mod potential;
pub mod resolvent;
pub mod scan;
pub mod tiling;
