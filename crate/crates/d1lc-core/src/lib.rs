//! Deterministic (degree+1)-list coloring for the congested-clique model.
//!
//! The pipeline colors a graph in which every node `v` holds a private
//! palette of at least `deg(v) + 1` colors.  It alternates a randomized
//! color trial with a degree-based subsampling step and a recursive
//! bucket-descent phase, and removes all randomness with the method of
//! conditional expectations over small k-wise independent hash families.
//! Communication is never performed: a [`ledger::RoundLedger`] charges
//! every phase against the bandwidth model instead.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bits;
pub mod bucket;
pub mod derand;
pub mod driver;
pub mod hash;
pub mod instance;
pub mod ledger;
pub mod subsample;
pub mod trial;

mod mathx;
