//! Bilayer functions and the three-player reduction game between them.
//!
//! A bilayer function maps a public input and a secret input to a set of
//! acceptable values. `f` reduces to `g` when Arthur, who sees only public
//! data, and Nimue, who sees everything, can jointly answer every instance of
//! `f` by querying `g`, whatever the adversary Merlin answers.
//!
//! The crate is `no_std` with `alloc`. All tables are `BTreeMap`s so every
//! enumeration runs in one canonical order.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bilayer;
pub mod catalog;
pub mod combinators;
pub mod engine;
pub mod families;
pub mod solver;
pub mod tables;
pub mod term;
pub mod trees;

pub use bilayer::{refines, BilayerError, BilayerFn, CellOracle, MultiFn, ValueSet};
pub use term::{ParseTermError, Term};
