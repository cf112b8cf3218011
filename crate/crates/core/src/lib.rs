//! Runtime-parameter-aware driver fuzzing over a simulated kernel.
//!
//! The pipeline: parse a DMIR program ([`dmir`]), extract writable device
//! attributes, their valid values and module parameters ([`extractor`]),
//! boot the simulated kernel ([`vkernel`]), recover device relations from
//! its virtual sysfs ([`relations`]), generate call descriptions
//! ([`descgen`]) and fuzz with relation-aware concurrent mutation
//! ([`fuzzer`]).

pub mod case;
pub mod descgen;
pub mod dmir;
pub mod extractor;
pub mod fuzzer;
pub mod relations;
pub mod rng;
pub mod scenario;
pub mod vkernel;

pub use rng::SplitMix64;
