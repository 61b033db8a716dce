//! Off-the-grid sparse spike recovery.
//!
//! A signal `x = sum_i a_i delta_{t_i}` is observed through a linear operator `A` (random
//! Fourier samples or a multi-plane Gaussian PSF). [`comp`] places an over-parametrized
//! initial train on a grid, then either [`descent::pgd`] or [`bcd::bcd_run`] refines
//! amplitudes and positions continuously, merging spikes that collide. [`diagnostics`]
//! evaluates the dipole bounds that motivate the block selection, and [`harness`] runs
//! reproducible PGD-vs-BCD benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcd;
pub mod comp;
pub mod descent;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod objective;
pub mod operators;
pub mod spike;
