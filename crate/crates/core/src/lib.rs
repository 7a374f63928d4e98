//! Dyad-wise fused-lasso multinomial models for dynamic directed networks.
//!
//! Every unordered pair of nodes carries three coefficient paths over time.
//! Paths are estimated either as a penalized MAP by Split Bregman ([`fused`])
//! or by Gibbs sampling with Pólya-Gamma augmentation ([`mcmc`]), and the
//! fitted paths drive one-step-ahead link prediction ([`select`]).

pub mod error;
pub mod fused;
pub mod mcmc;
pub mod model;
pub mod network;
pub mod rng;
pub mod select;
pub mod sim;
pub mod special;
pub mod workers;

pub use error::{Error, Result};
pub use model::{Coef, DyadCategory, DyadPaths, DyadSeries, InitMode, ThetaPath, ThetaTriple};
pub use network::NetworkSeries;
pub use workers::Workers;
