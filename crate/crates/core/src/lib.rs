//! Exact degrees-of-freedom regions for the two-user MIMO broadcast channel with
//! partial CSIT, plus a desk-scale laboratory for the deterministic-model entropy
//! machinery behind its converse.
//!
//! | module | contents |
//! |---|---|
//! | [`power`] | power-level alphabets and the floor partition operators |
//! | [`forms`] | floor-sum linear forms, coefficient laws, lengths and range bounds |
//! | [`channel`] | canonical deterministic BC instances, splits and derived outputs |
//! | [`region`] | exact-rational DoF region, `beta_o`, vertices, membership |
//! | [`entropy`] | exact / Monte-Carlo entropies, sum-set and lemma checkers |
//! | [`ais`] | aligned image sets: alignment probabilities and growth fits |
//!
//! Everything that carries randomness takes an explicit seed; per-draw streams are
//! derived with [`seed::derive`] so results do not depend on thread scheduling.


pub mod ais;
pub mod channel;
pub mod entropy;
pub mod error;
pub mod forms;
pub mod power;
pub mod rational;
pub mod region;
pub mod seed;

pub use error::{Error, Result};
pub use power::{Level, PowerScale};
pub use rational::Rational;
