//! Slot-level uplink scheduling simulator for teleoperated-driving traffic,
//! with a small from-scratch multi-agent PPO stack (IPPO and MAPPO) that
//! learns per-UE priority levels for symbol-level allocators.
//!
//! Layout:
//!
//! - [`env`]: traffic, channel, link adaptation, buffers and the per-step
//!   decision interface.
//! - [`sched`]: proportional, greedy and round-robin OFDM-symbol allocators.
//! - [`nn`]: dense tanh networks, reverse-mode gradients and Adam.
//! - [`ppo`]: GAE, clipped surrogate loss and minibatch updates.
//! - [`marl`]: independent and parameter-shared agent pools.
//! - [`harness`]: run configuration, training/evaluation loops and metrics.

pub mod env;
pub mod error;
pub mod harness;
pub mod marl;
pub mod nn;
pub mod ppo;
pub mod rng;
pub mod sched;

pub use error::{Error, Result};
