//! blightwave: simulation and analysis toolkit for a vector-borne
//! blossom-blight epidemic model.
//!
//! The model couples two diffusing pathogen fields (flower-surface
//! bacteria moved by pollinators, secreted ooze moved by crawling
//! vectors) to a susceptible/infected/removed flower-cluster compartment
//! model on a 1D row of trees. The crate provides:
//!
//! - the pointwise kinetics, analytic solution bounds, and the
//!   travelling-wave parameter constraints with the minimum wave speed
//!   ([`model`]);
//! - a method-of-lines integrator with zero-flux boundaries ([`solver`]);
//! - travelling-wave test statistics and the parameter-sampling wave
//!   experiment ([`wave`]);
//! - variance-based (Sobol) sensitivity analysis of the epidemic front
//!   position ([`sensitivity`]);
//! - a CLI with deterministic CSV/SVG outputs ([`cli`], [`config`]).

pub mod cli;
pub mod config;
pub mod error;
pub mod model;
pub mod sensitivity;
pub mod sobol_seq;
pub mod solver;
pub mod svg;
pub mod wave;

mod seeding;

pub use error::{Error, Result};
