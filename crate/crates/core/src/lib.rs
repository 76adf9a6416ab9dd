//! SPEAR-style PPG denoising: self-supervised training of a 1D convolutional
//! denoising autoencoder on clean signals with randomly erased patches, and
//! an inference path that detects artifacts, erases them, reconstructs only
//! the corrupted regions, and derives HR/HRV from the result.

pub mod corpus;
pub mod detect;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod signal;
pub mod synth;
pub mod train;

pub use signal::{BinaryMask, JoinedSignal, Segment, Signal};
