//! Brute-force ground truth: exact partition function, marginals, and the
//! Gibbs free energy, by enumeration over all 2^n spin configurations.
//!
//! Everything here works in the log domain with a max-shift, so results stay
//! accurate for strongly coupled instances. Enumeration is guarded at
//! n <= 24 vertices.

use crate::model::Instance;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on enumerable instance size.
pub const MAX_ENUM_VERTICES: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("instance too large to enumerate: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },

    #[error("joint distribution has length {got}, expected 2^{n} = {expected}")]
    JointLengthMismatch { got: usize, expected: usize, n: usize },

    #[error("joint distribution sums to {sum}, deviating from 1 by more than 1e-10")]
    UnnormalizedJoint { sum: f64 },
}

/// Exact quantities from full enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactResult {
    /// log Z at the instance's beta.
    pub log_partition: f64,
    /// Per-vertex [P*(+1), P*(-1)].
    pub one_node_marginals: Vec<[f64; 2]>,
    /// Per-triangle 8-vector over (x_i, x_j, x_k) in canonical order.
    pub three_node_marginals: Vec<[f64; 8]>,
}

/// Spin of `vertex` in the configuration encoded by `mask` (set bit = -1).
#[inline]
fn spin(mask: u32, vertex: usize) -> f64 {
    if mask >> vertex & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// E(X) for the configuration encoded by `mask`.
pub fn energy_of_mask(instance: &Instance, mask: u32) -> f64 {
    let mut e = 0.0;
    for (v, &h) in instance.fields().iter().enumerate() {
        e -= h * spin(mask, v);
    }
    for t in instance.triangles() {
        let [i, j, k] = t.vertices;
        e -= t.coupling * spin(mask, i) * spin(mask, j) * spin(mask, k);
    }
    e
}

/// Canonical 8-way configuration index of triangle `t` under `mask`.
#[inline]
fn triangle_config(mask: u32, vertices: [usize; 3]) -> usize {
    let [i, j, k] = vertices;
    (((mask >> i & 1) << 2) | ((mask >> j & 1) << 1) | (mask >> k & 1)) as usize
}

/// Enumerates all configurations: exact log Z plus one-node and three-node
/// marginals in a single weighted pass (after a max-shift pass).
pub fn enumerate(instance: &Instance) -> Result<ExactResult, ExactError> {
    let n = instance.n_vertices();
    if n > MAX_ENUM_VERTICES {
        return Err(ExactError::TooLarge {
            n,
            max: MAX_ENUM_VERTICES,
        });
    }
    let beta = instance.beta();
    let count: u64 = 1 << n;

    let mut max_logw = f64::NEG_INFINITY;
    for mask in 0..count {
        max_logw = max_logw.max(-beta * energy_of_mask(instance, mask as u32));
    }

    let mut z_shifted = 0.0;
    let mut plus_mass = vec![0.0f64; n];
    let mut tri_mass = vec![[0.0f64; 8]; instance.n_triangles()];
    for mask in 0..count {
        let mask = mask as u32;
        let w = (-beta * energy_of_mask(instance, mask) - max_logw).exp();
        z_shifted += w;
        for (v, pm) in plus_mass.iter_mut().enumerate() {
            if mask >> v & 1 == 0 {
                *pm += w;
            }
        }
        for (t, tri) in instance.triangles().iter().enumerate() {
            tri_mass[t][triangle_config(mask, tri.vertices)] += w;
        }
    }

    let one_node_marginals = plus_mass
        .iter()
        .map(|&m| {
            let p = m / z_shifted;
            [p, 1.0 - p]
        })
        .collect();
    let three_node_marginals = tri_mass
        .iter()
        .map(|m| std::array::from_fn(|c| m[c] / z_shifted))
        .collect();

    Ok(ExactResult {
        log_partition: max_logw + z_shifted.ln(),
        one_node_marginals,
        three_node_marginals,
    })
}

/// The Boltzmann distribution over configuration masks, normalized.
pub fn boltzmann_distribution(instance: &Instance) -> Result<Vec<f64>, ExactError> {
    let n = instance.n_vertices();
    if n > MAX_ENUM_VERTICES {
        return Err(ExactError::TooLarge {
            n,
            max: MAX_ENUM_VERTICES,
        });
    }
    let beta = instance.beta();
    let count: u64 = 1 << n;
    let mut logw: Vec<f64> = (0..count)
        .map(|mask| -beta * energy_of_mask(instance, mask as u32))
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for w in logw.iter_mut() {
        *w = (*w - max).exp();
        z += *w;
    }
    for w in logw.iter_mut() {
        *w /= z;
    }
    Ok(logw)
}

/// Gibbs free energy of an explicit joint distribution over all 2^n
/// configurations: `G(P) = -beta * U(P) + S(P)` with `U = sum P E` and
/// `S = -sum P log P` (0 log 0 = 0). Maximized, with value log Z, at the
/// Boltzmann distribution.
pub fn gibbs_free_energy(instance: &Instance, joint: &[f64]) -> Result<f64, ExactError> {
    let n = instance.n_vertices();
    if n > MAX_ENUM_VERTICES {
        return Err(ExactError::TooLarge {
            n,
            max: MAX_ENUM_VERTICES,
        });
    }
    let expected = 1usize << n;
    if joint.len() != expected {
        return Err(ExactError::JointLengthMismatch {
            got: joint.len(),
            expected,
            n,
        });
    }
    let sum: f64 = joint.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(ExactError::UnnormalizedJoint { sum });
    }

    let beta = instance.beta();
    let mut avg_energy = 0.0;
    let mut entropy = 0.0;
    for (mask, &p) in joint.iter().enumerate() {
        if p > 0.0 {
            avg_energy += p * energy_of_mask(instance, mask as u32);
            entropy -= p * p.ln();
        }
    }
    Ok(-beta * avg_energy + entropy)
}
