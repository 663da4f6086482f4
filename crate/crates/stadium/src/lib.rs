//! Quantum and classical dynamics in the Bunimovich stadium billiard.
//!
//! The stadium (two semicircular caps of radius `R` joined by straight walls
//! of length `L`) is a fully chaotic billiard. This crate computes its
//! Dirichlet eigenstates with a boundary integral method, propagates classical
//! trajectories, projects quantum states onto phase space through Gaussian
//! pointer states, and measures how classical trajectories imprint themselves
//! on eigenstates and on long-time averages.

pub mod analysis;
pub mod classical;
pub mod cli;
pub mod geometry;
pub mod linalg;
pub mod render;
pub mod specfun;
pub mod spectral;
pub mod states;

use rand_chacha::rand_core::SeedableRng;

/// Deterministic RNG for stream `stream` of a root seed. Streams are
/// decorrelated by a splitmix finalizer, so parallel consumers can draw from
/// their own stream in any order without changing results.
pub fn stream_rng(root: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut z = root ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    for chunk in seed.chunks_mut(8) {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^= x >> 31;
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    rand_chacha::ChaCha8Rng::from_seed(seed)
}
