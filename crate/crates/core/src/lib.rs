//! Recognizability of R-trivial idempotent languages by decide-and-halt
//! probabilistic and quantum finite automata.
//!
//! The pipeline: an [`band::R1Language`] yields an [`ineq::InequalitySystem`];
//! [`lp::decide_consistency`] solves the boxed LP exactly; a consistent
//! witness drives the constructions in [`automata`], which the simulators in
//! [`sim`] and [`quantum`] execute. [`forbidden`] searches for the
//! combinatorial obstruction to recognition.

pub mod automata;
pub mod band;
pub mod error;
pub mod exec;
pub mod forbidden;
pub mod ineq;
pub mod lp;
pub mod quantum;
pub mod rational;
pub mod sim;
pub mod sparse;

pub use band::{Alphabet, BandWord, Letter, LetterSet, R1Language, Word};
pub use error::InputError;
pub use rational::Rational;
