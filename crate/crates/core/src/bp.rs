//! Generalized belief propagation on triangle-motif hypergraphs.
//!
//! Messages are one real in [-1, 1] per directed (vertex -> incident
//! triangle) pair. The single-message update is
//!
//! ```text
//! nu_{i->jk} = tanh( beta*h_i
//!     + sum_{ {m,n} in di \ {j,k} } atanh( theta_imn * nu_{m->in} * nu_{n->im} ) )
//! ```
//!
//! where `theta = tanh(beta*J)` and the sum runs over the other triangles
//! attached to `i`. Because `|theta| < 1` for finite couplings, the `atanh`
//! argument always stays strictly inside (-1, 1) and the update never needs
//! clamping; outputs are strictly inside (-1, 1).
//!
//! The synchronous schedule applies the full map `phi` to a snapshot of the
//! previous vector and is the default; the sequential schedule updates in
//! canonical (triangle index, position) order, each update seeing prior ones.
//! Both are deterministic.

use crate::model::{Instance, Triangle};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when deciding whether a trajectory is coordinate-wise
/// non-increasing; absorbs floating-point noise.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Messages are clamped to `[-1 + CLAMP, 1 - CLAMP]` before any `atanh`
/// used in belief or free-energy computation. The all-ones state is a legal
/// message vector but has an infinite effective field; the update itself
/// never applies `atanh` to a message.
pub const CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum BpError {
    #[error("init value {0} outside (-1, 1]")]
    InvalidInitValue(f64),

    #[error("message value {value} at pair {pair} outside [-1, 1]")]
    MessageOutOfRange { pair: usize, value: f64 },

    #[error("message vector length {got} does not match 3 * n_triangles = {expected}")]
    ShapeMismatch { got: usize, expected: usize },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("damping {0} outside [0, 1)")]
    InvalidDamping(f64),

    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
}

/// Sweep order for [`run_bp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Every entry recomputed from the previous message vector (the map phi).
    #[default]
    Synchronous,
    /// Entries updated in (triangle index, position) order, in place.
    Sequential,
}

/// One real per directed (vertex, incident triangle) pair, indexed by
/// `3 * triangle_index + position`.
#[derive(Debug, Clone, PartialEq)]
pub struct Messages {
    values: Vec<f64>,
}

impl Messages {
    /// Wraps raw values, checking shape and range against `instance`.
    pub fn from_values(instance: &Instance, values: Vec<f64>) -> Result<Self, BpError> {
        let expected = 3 * instance.n_triangles();
        if values.len() != expected {
            return Err(BpError::ShapeMismatch {
                got: values.len(),
                expected,
            });
        }
        for (pair, &v) in values.iter().enumerate() {
            if !(-1.0..=1.0).contains(&v) || v.is_nan() {
                return Err(BpError::MessageOutOfRange { pair, value: v });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, triangle: usize, pos: usize) -> f64 {
        self.values[3 * triangle + pos]
    }

    pub fn set(&mut self, triangle: usize, pos: usize, value: f64) {
        self.values[3 * triangle + pos] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Max-abs coordinate distance to `other`.
    pub fn max_abs_diff(&self, other: &Messages) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Human-readable label for a directed pair index: `vertex->(i,j,k)`.
pub fn pair_label(instance: &Instance, pair: usize) -> String {
    let t = pair / 3;
    let pos = pair % 3;
    let tri = instance.triangle(t);
    let [a, b, c] = tri.vertices;
    format!("{}->({},{},{})", tri.vertices[pos], a, b, c)
}

/// Configuration for [`run_bp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BpConfig {
    pub schedule: Schedule,
    /// Convergence threshold on the max-abs message change per iteration.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Blend factor: next = damping * old + (1 - damping) * new.
    pub damping: f64,
    /// Initial value for every directed pair, in (-1, 1].
    pub init_value: f64,
    /// Record the full message trajectory (initial state included).
    pub record_trace: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::Synchronous,
            tolerance: 1e-10,
            max_iters: 10_000,
            damping: 0.0,
            init_value: 1.0,
            record_trace: false,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<(), BpError> {
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(BpError::InvalidTolerance(self.tolerance));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(BpError::InvalidDamping(self.damping));
        }
        if !(self.init_value > -1.0 && self.init_value <= 1.0) {
            return Err(BpError::InvalidInitValue(self.init_value));
        }
        Ok(())
    }
}

/// Result of a BP run.
#[derive(Debug, Clone)]
pub struct BpRunResult {
    pub final_messages: Messages,
    pub converged: bool,
    pub iterations: usize,
    /// Max-abs message change per iteration; length equals `iterations`.
    pub residual_trace: Vec<f64>,
    /// Message states when requested: initial state first, then one entry
    /// per iteration (length `iterations + 1`).
    pub message_trace: Option<Vec<Messages>>,
    /// Whether the whole trajectory was coordinate-wise non-increasing
    /// (within [`MONOTONE_SLACK`]).
    pub monotone_decreasing: bool,
}

/// All directed-pair entries set to `value`; `value` must lie in (-1, 1].
pub fn init_messages(instance: &Instance, value: f64) -> Result<Messages, BpError> {
    if !(value > -1.0 && value <= 1.0) {
        return Err(BpError::InvalidInitValue(value));
    }
    Ok(Messages {
        values: vec![value; 3 * instance.n_triangles()],
    })
}

#[inline]
fn triangle_term(tri: &Triangle, messages: &Messages, t_idx: usize, pos_of_vertex: usize) -> f64 {
    let [p, q] = Triangle::partner_positions(pos_of_vertex);
    tri.theta * messages.get(t_idx, p) * messages.get(t_idx, q)
}

/// The single-message update `phi(nu)_{i->jk}` for the directed pair
/// (`triangle`, `pos`). Does not mutate `messages`; output strictly in (-1, 1).
pub fn update_message(
    instance: &Instance,
    messages: &Messages,
    triangle: usize,
    pos: usize,
) -> f64 {
    let vertex = instance.triangle(triangle).vertices[pos];
    let mut arg = instance.beta() * instance.field(vertex);
    for &(t2, pos2) in instance.incident(vertex) {
        if t2 == triangle {
            continue;
        }
        arg += triangle_term(instance.triangle(t2), messages, t2, pos2).atanh();
    }
    arg.tanh()
}

/// Applies the full map once and returns the next message vector.
///
/// Synchronous: all entries from the old vector, then damped. Sequential:
/// in-place in canonical order, each update damped and visible to later ones.
pub fn sweep(instance: &Instance, messages: &Messages, config: &BpConfig) -> Messages {
    let d = config.damping;
    match config.schedule {
        Schedule::Synchronous => {
            let mut next = messages.clone();
            for t in 0..instance.n_triangles() {
                for pos in 0..3 {
                    let new = update_message(instance, messages, t, pos);
                    next.set(t, pos, d * messages.get(t, pos) + (1.0 - d) * new);
                }
            }
            next
        }
        Schedule::Sequential => {
            let mut state = messages.clone();
            for t in 0..instance.n_triangles() {
                for pos in 0..3 {
                    let new = update_message(instance, &state, t, pos);
                    state.set(t, pos, d * state.get(t, pos) + (1.0 - d) * new);
                }
            }
            state
        }
    }
}

/// Iterates sweeps until the residual drops to `config.tolerance` or
/// `config.max_iters` is reached. Non-convergence is reported, not an error.
pub fn run_bp(instance: &Instance, config: &BpConfig) -> Result<BpRunResult, BpError> {
    let initial = init_messages(instance, config.init_value)?;
    run_bp_from(instance, initial, config)
}

/// [`run_bp`] from an explicit initial message vector.
pub fn run_bp_from(
    instance: &Instance,
    initial: Messages,
    config: &BpConfig,
) -> Result<BpRunResult, BpError> {
    config.validate()?;
    let expected = 3 * instance.n_triangles();
    if initial.len() != expected {
        return Err(BpError::ShapeMismatch {
            got: initial.len(),
            expected,
        });
    }
    let mut current = initial;
    let mut residual_trace = Vec::new();
    let mut message_trace = config.record_trace.then(|| vec![current.clone()]);
    let mut monotone = true;
    let mut converged = false;

    for _ in 0..config.max_iters {
        let next = sweep(instance, &current, config);
        let residual = next.max_abs_diff(&current);
        monotone &= next
            .values
            .iter()
            .zip(&current.values)
            .all(|(new, old)| *new <= old + MONOTONE_SLACK);
        residual_trace.push(residual);
        if let Some(trace) = message_trace.as_mut() {
            trace.push(next.clone());
        }
        current = next;
        if residual <= config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(BpRunResult {
        final_messages: current,
        converged,
        iterations: residual_trace.len(),
        residual_trace,
        message_trace,
        monotone_decreasing: monotone,
    })
}

/// One-node belief `P_i` from messages: `P_i(x) ~ exp(m_i x)` with
/// `m_i = beta*h_i + sum over all incident triangles of atanh(theta nu nu)`.
/// Returns `[P_i(+1), P_i(-1)]`.
pub fn node_marginal(
    instance: &Instance,
    messages: &Messages,
    vertex: usize,
) -> Result<[f64; 2], BpError> {
    if vertex >= instance.n_vertices() {
        return Err(BpError::VertexOutOfRange(vertex));
    }
    let mut m = instance.beta() * instance.field(vertex);
    for &(t, pos) in instance.incident(vertex) {
        m += triangle_term(instance.triangle(t), messages, t, pos).atanh();
    }
    // p_plus = e^m / (e^m + e^-m), computed without overflow
    let p_plus = 1.0 / (1.0 + (-2.0 * m).exp());
    Ok([p_plus, 1.0 - p_plus])
}

/// Three-node belief over the 8 spin configurations of `triangle`, in
/// canonical order (+++, ++-, +-+, +--, -++, -+-, --+, ---):
/// `P ~ exp(beta J x_i x_j x_k + lam'_i x_i + lam'_j x_j + lam'_k x_k)`
/// with `lam' = atanh(nu)` after clamping.
pub fn triangle_belief(instance: &Instance, messages: &Messages, triangle: usize) -> [f64; 8] {
    let tri = instance.triangle(triangle);
    let lam: [f64; 3] =
        std::array::from_fn(|pos| clamp_message(messages.get(triangle, pos)).atanh());
    let bj = instance.beta() * tri.coupling;

    let mut logw = [0.0f64; 8];
    for (cfg, w) in logw.iter_mut().enumerate() {
        let s = config_spins(cfg);
        *w = bj * s[0] * s[1] * s[2] + lam[0] * s[0] + lam[1] * s[1] + lam[2] * s[2];
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0f64; 8];
    let mut z = 0.0;
    for (cfg, w) in logw.iter().enumerate() {
        p[cfg] = (w - max).exp();
        z += p[cfg];
    }
    for v in &mut p {
        *v /= z;
    }
    p
}

/// Spins (x_i, x_j, x_k) for a canonical configuration index: bit 2 flips
/// x_i, bit 1 flips x_j, bit 0 flips x_k.
pub fn config_spins(cfg: usize) -> [f64; 3] {
    [
        if cfg & 4 == 0 { 1.0 } else { -1.0 },
        if cfg & 2 == 0 { 1.0 } else { -1.0 },
        if cfg & 1 == 0 { 1.0 } else { -1.0 },
    ]
}

/// Clamp into `[-1 + CLAMP, 1 - CLAMP]` so `atanh` stays finite.
pub fn clamp_message(nu: f64) -> f64 {
    nu.clamp(-1.0 + CLAMP, 1.0 - CLAMP)
}
