//! Design numerics for quantum-dot micropillar single-photon sources.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! * [`multilayer`]: normal-incidence transfer matrices, DBR transmission,
//!   planar-cavity Q and mirror phase penetration depth.
//! * [`pillar_mode`]: scalar fundamental mode of a circular pillar, its
//!   sidewall intensity, effective area and far-field divergence.
//! * [`loss_budget`]: harmonic quality-factor budget, sidewall scattering and
//!   the least-squares fit of the scattering coefficient.
//! * [`coupling`]: Purcell factor and spontaneous-emission coupling β.
//! * [`efficiency`]: source efficiency η, diameter sweeps and the
//!   (diameter, Q_2D) optimizer.
//! * [`photon_mc`]: Monte Carlo photon-fate sampler used as an independent
//!   check of η.
//!
//! Every operation is a pure function of its inputs.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;

pub mod coupling;
pub mod efficiency;
pub mod loss_budget;
pub mod multilayer;
pub mod photon_mc;
pub mod pillar_mode;
pub mod special;

pub use crate::error::{Error, Result};
pub use num_complex;
