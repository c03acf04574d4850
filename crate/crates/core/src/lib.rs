//! Optimal precoding for the AWGN channel with discrete interference known
//! causally at the transmitter.
//!
//! The channel is `Y = X + S + N` with an `M`-point real constellation, a
//! `Q`-level interference `S` and Gaussian noise `N`. The transmitter sees the
//! current interference symbol, so the problem is recast over Shannon's
//! associated channel whose inputs are `Q`-tuples of constellation points.
//!
//! - [`model`]: problem instance, associated symbols, pmfs and precoders
//! - [`entropy`]: likelihoods, differential entropies, mutual information
//! - [`optimize`]: marginal-constrained LPs, Blahut–Arimoto, support reduction
//! - [`assign`]: Hungarian and multidimensional assignment
//! - [`noisefree`]: zero-error codes for `Y = X + S`
//! - [`sim`]: Monte Carlo validation of a precoder
//! - [`cli`]: command-line front end

pub mod assign;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod model;
pub mod noisefree;
pub mod optimize;
pub mod quadrature;
pub mod sim;
mod numfmt;
mod simplex;

pub use error::{Error, Result};
pub use model::{AssociatedSymbol, ChannelSpec, JointPmf, MarginalSet, PrecoderCode};
