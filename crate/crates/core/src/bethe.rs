//! Bethe free-energy functionals: primal (over beliefs), dual in effective
//! fields (lambda-form), dual in hyper-edge messages (nu-form), and the
//! analytic gradient of the nu-form.
//!
//! With triangle motifs every hyperedge appears in three vertex terms, so the
//! decomposition of the Bethe free energy into per-vertex and per-triangle
//! pieces carries the triangle term with multiplicity two:
//!
//! ```text
//! G*(lambda) = sum_i F_i(lambda) - 2 * sum_(i,j,k) F_ijk(lambda)
//! ```
//!
//! and likewise for the nu-form. The two dual forms then differ by the
//! message-independent constant `sum_T log cosh(beta J_T)`, so they share
//! gradients and maximizers, and the lambda-form equals the primal Bethe free
//! energy (and log Z on trees) at BP fixed points. Both are exposed; the
//! nu-form is the one differentiated by [`dual_gradient`].
//!
//! Gradient of the nu-form at the directed pair (j -> {i,k}) of triangle
//! (i,j,k): one bracket per co-vertex,
//!
//! ```text
//! d G*/d nu_j = [g(phi_i) - g(nu_i)] + [g'(phi_k) - g'(nu_k)]
//!   with g(x)  = theta nu_k x / (1 + theta nu_j nu_k x)
//!        g'(x) = theta nu_i x / (1 + theta nu_j nu_i x)
//! ```
//!
//! Each bracket vanishes at fixed points and is sign-definite on the
//! pre-/post-fixpoint regions, since `g` is monotone for non-negative
//! ferromagnetic arguments.

use crate::bp::{self, Messages};
use crate::model::Instance;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BetheError {
    #[error("beliefs shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("belief distribution {0} is not normalized (sum deviation {1:e})")]
    Unnormalized(String, f64),

    #[error("negative belief entry in distribution {0}")]
    NegativeEntry(String),

    #[error("degenerate denominator in gradient at pair {pair}")]
    DegenerateDenominator { pair: usize },
}

/// Locally consistent beliefs: one distribution per vertex and one per
/// triangle (canonical 8-way configuration order).
#[derive(Debug, Clone, PartialEq)]
pub struct Beliefs {
    pub one_node: Vec<[f64; 2]>,
    pub three_node: Vec<[f64; 8]>,
}

impl Beliefs {
    /// Shape, positivity, and normalization (1e-12) checks.
    pub fn validate(&self, instance: &Instance) -> Result<(), BetheError> {
        if self.one_node.len() != instance.n_vertices() {
            return Err(BetheError::ShapeMismatch(format!(
                "{} one-node beliefs for {} vertices",
                self.one_node.len(),
                instance.n_vertices()
            )));
        }
        if self.three_node.len() != instance.n_triangles() {
            return Err(BetheError::ShapeMismatch(format!(
                "{} three-node beliefs for {} triangles",
                self.three_node.len(),
                instance.n_triangles()
            )));
        }
        for (v, p) in self.one_node.iter().enumerate() {
            check_dist(&format!("P_{v}"), p)?;
        }
        for (t, p) in self.three_node.iter().enumerate() {
            check_dist(&format!("P_T{t}"), p)?;
        }
        Ok(())
    }

    /// Max deviation from the marginalization conditions
    /// `sum_{x_j,x_k} P_ijk = P_i` over all triangles and member vertices.
    pub fn consistency_gap(&self, instance: &Instance) -> f64 {
        let mut worst = 0.0f64;
        for (t, _tri) in instance.triangles().iter().enumerate() {
            let p8 = &self.three_node[t];
            for pos in 0..3 {
                let vertex = instance.triangle(t).vertices[pos];
                let shift = 2 - pos; // bit of this vertex in the config index
                let plus: f64 = (0..8)
                    .filter(|cfg| cfg >> shift & 1 == 0)
                    .map(|cfg| p8[cfg])
                    .sum();
                worst = worst.max((plus - self.one_node[vertex][0]).abs());
            }
        }
        worst
    }
}

fn check_dist(label: &str, p: &[f64]) -> Result<(), BetheError> {
    if p.iter().any(|&x| x < 0.0) {
        return Err(BetheError::NegativeEntry(label.to_string()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(BetheError::Unnormalized(label.to_string(), (sum - 1.0).abs()));
    }
    Ok(())
}

/// Beliefs induced by a message vector: node marginals and triangle beliefs.
pub fn beliefs_from_messages(instance: &Instance, messages: &Messages) -> Beliefs {
    let one_node = (0..instance.n_vertices())
        .map(|v| bp::node_marginal(instance, messages, v).expect("vertex in range"))
        .collect();
    let three_node = (0..instance.n_triangles())
        .map(|t| bp::triangle_belief(instance, messages, t))
        .collect();
    Beliefs {
        one_node,
        three_node,
    }
}

/// Average energy under the beliefs:
/// `U(P) = -sum_T J_T E[X_i X_j X_k] - sum_i h_i E[X_i]` (no beta factor).
pub fn average_energy(instance: &Instance, beliefs: &Beliefs) -> Result<f64, BetheError> {
    check_shapes(instance, beliefs)?;
    let mut u = 0.0;
    for (t, tri) in instance.triangles().iter().enumerate() {
        let mut moment = 0.0;
        for (cfg, &p) in beliefs.three_node[t].iter().enumerate() {
            let s = bp::config_spins(cfg);
            moment += p * s[0] * s[1] * s[2];
        }
        u -= tri.coupling * moment;
    }
    for (v, &h) in instance.fields().iter().enumerate() {
        let p = beliefs.one_node[v];
        u -= h * (p[0] - p[1]);
    }
    Ok(u)
}

/// Bethe entropy:
/// `S = -sum_T sum P_T log P_T + sum_i (q_i - 1) sum P_i log P_i`,
/// with the 0 log 0 = 0 convention. Exact on tree-like motif hypergraphs.
pub fn bethe_entropy(instance: &Instance, beliefs: &Beliefs) -> Result<f64, BetheError> {
    check_shapes(instance, beliefs)?;
    let mut s = 0.0;
    for p8 in &beliefs.three_node {
        for &p in p8 {
            if p > 0.0 {
                s -= p * p.ln();
            }
        }
    }
    for (v, p) in beliefs.one_node.iter().enumerate() {
        let q = instance.incident(v).len() as f64;
        for &x in p {
            if x > 0.0 {
                s += (q - 1.0) * x * x.ln();
            }
        }
    }
    Ok(s)
}

/// Primal Bethe free energy `G = -beta * U(P) + S_Bethe(P)`.
///
/// At exact marginals of a tree-like instance this equals log Z; at beta = 1
/// it is literally `-U + S`.
pub fn primal_bethe(instance: &Instance, beliefs: &Beliefs) -> Result<f64, BetheError> {
    Ok(-instance.beta() * average_energy(instance, beliefs)?
        + bethe_entropy(instance, beliefs)?)
}

fn check_shapes(instance: &Instance, beliefs: &Beliefs) -> Result<(), BetheError> {
    if beliefs.one_node.len() != instance.n_vertices()
        || beliefs.three_node.len() != instance.n_triangles()
    {
        return Err(BetheError::ShapeMismatch(format!(
            "beliefs ({}, {}) vs instance ({}, {})",
            beliefs.one_node.len(),
            beliefs.three_node.len(),
            instance.n_vertices(),
            instance.n_triangles()
        )));
    }
    Ok(())
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let max = a.max(b);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + ((a - max).exp() + (b - max).exp()).ln()
}

/// Per-triangle product term `theta_T * nu_m * nu_n` seen from vertex
/// position `pos` (the two partner messages of that triangle).
#[inline]
fn pair_product(instance: &Instance, messages: &Messages, t: usize, pos: usize) -> f64 {
    let tri = instance.triangle(t);
    let [p, q] = crate::model::Triangle::partner_positions(pos);
    tri.theta * messages.get(t, p) * messages.get(t, q)
}

/// Dual Bethe free energy in hyper-edge messages:
/// `G*(nu) = sum_i F_i(nu) - 2 * sum_T F_T(nu)` with
/// `F_T = log(1 + theta nu_i nu_j nu_k)` and
/// `F_i = log[ e^{beta h_i} prod_T (1 + theta nu nu) + e^{-beta h_i} prod_T (1 - theta nu nu) ]`.
pub fn dual_free_energy_nu(instance: &Instance, messages: &Messages) -> f64 {
    let beta = instance.beta();
    let mut total = 0.0;
    for v in 0..instance.n_vertices() {
        let mut log_plus = 0.0;
        let mut log_minus = 0.0;
        for &(t, pos) in instance.incident(v) {
            let x = pair_product(instance, messages, t, pos);
            log_plus += x.ln_1p();
            log_minus += (-x).ln_1p();
        }
        let bh = beta * instance.field(v);
        total += log_sum_exp2(bh + log_plus, -bh + log_minus);
    }
    for (t, tri) in instance.triangles().iter().enumerate() {
        let prod = tri.theta * messages.get(t, 0) * messages.get(t, 1) * messages.get(t, 2);
        total -= 2.0 * prod.ln_1p();
    }
    total
}

/// Dual Bethe free energy in effective fields `lambda' = atanh(nu)`:
/// `G*(lambda) = sum_i F_i(lambda) - 2 * sum_T F_T(lambda)`, with messages
/// clamped before `atanh`. Equals the primal Bethe free energy at BP fixed
/// points, and exceeds [`dual_free_energy_nu`] by the constant
/// `sum_T log cosh(beta J_T)` everywhere.
pub fn dual_free_energy_lambda(instance: &Instance, messages: &Messages) -> f64 {
    let beta = instance.beta();
    let lam: Vec<f64> = messages
        .values()
        .iter()
        .map(|&v| bp::clamp_message(v).atanh())
        .collect();

    let mut total = 0.0;
    for v in 0..instance.n_vertices() {
        // A(x_i) = beta h x_i + sum_T log S_T(x_i), combined by 2-way LSE
        let mut a = [0.0f64; 2];
        for (idx, &x_i) in [1.0f64, -1.0].iter().enumerate() {
            let mut acc = beta * instance.field(v) * x_i;
            for &(t, pos) in instance.incident(v) {
                acc += log_pair_sum(instance, &lam, t, pos, x_i, beta);
            }
            a[idx] = acc;
        }
        total += log_sum_exp2(a[0], a[1]);
    }

    for (t, tri) in instance.triangles().iter().enumerate() {
        let bj = beta * tri.coupling;
        let mut max = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 8];
        for (cfg, term) in terms.iter_mut().enumerate() {
            let s = bp::config_spins(cfg);
            *term = bj * s[0] * s[1] * s[2]
                + lam[3 * t] * s[0]
                + lam[3 * t + 1] * s[1]
                + lam[3 * t + 2] * s[2];
            max = max.max(*term);
        }
        let sum: f64 = terms.iter().map(|&w| (w - max).exp()).sum();
        total -= 2.0 * (max + sum.ln());
    }
    total
}

/// `log sum_{x_m, x_n} exp(beta J x_i x_m x_n + lam_m x_m + lam_n x_n)` for
/// the triangle `t` seen from vertex position `pos`.
fn log_pair_sum(
    instance: &Instance,
    lam: &[f64],
    t: usize,
    pos: usize,
    x_i: f64,
    beta: f64,
) -> f64 {
    let tri = instance.triangle(t);
    let [p, q] = crate::model::Triangle::partner_positions(pos);
    let (lm, ln_) = (lam[3 * t + p], lam[3 * t + q]);
    let bj = beta * tri.coupling;
    let mut max = f64::NEG_INFINITY;
    let mut terms = [0.0f64; 4];
    for (idx, term) in terms.iter_mut().enumerate() {
        let xm = if idx & 2 == 0 { 1.0 } else { -1.0 };
        let xn = if idx & 1 == 0 { 1.0 } else { -1.0 };
        *term = bj * x_i * xm * xn + lm * xm + ln_ * xn;
        max = max.max(*term);
    }
    let sum: f64 = terms.iter().map(|&w| (w - max).exp()).sum();
    max + sum.ln()
}

/// Gradient of [`dual_free_energy_nu`], one entry per directed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGradient {
    values: Vec<f64>,
}

impl DualGradient {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, triangle: usize, pos: usize) -> f64 {
        self.values[3 * triangle + pos]
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Analytic gradient of the nu-form dual free energy.
///
/// For the pair at position `pos` of triangle (i,j,k), each of the two
/// co-vertices contributes a bracket `g(phi_u) - g(nu_u)` (see module docs);
/// the algebraic form `theta nu x / (1 + theta nu nu x)` keeps every
/// denominator >= 1 - |theta| > 0, and an entry is exactly 0 whenever
/// `theta` or the relevant partner message vanishes.
pub fn dual_gradient(instance: &Instance, messages: &Messages) -> Result<DualGradient, BetheError> {
    let mut values = vec![0.0f64; messages.len()];
    // updates phi(nu) for every pair, reused across brackets
    let phi: Vec<f64> = (0..instance.n_triangles())
        .flat_map(|t| (0..3).map(move |pos| (t, pos)))
        .map(|(t, pos)| bp::update_message(instance, messages, t, pos))
        .collect();

    for t in 0..instance.n_triangles() {
        let theta = instance.triangle(t).theta;
        for pos in 0..3 {
            let pair = 3 * t + pos;
            let nu_self = messages.get(t, pos);
            let [a_pos, b_pos] = crate::model::Triangle::partner_positions(pos);
            let mut entry = 0.0;
            for (anchor, other) in [(a_pos, b_pos), (b_pos, a_pos)] {
                let nu_other = messages.get(t, other);
                let nu_anchor = messages.get(t, anchor);
                let phi_anchor = phi[3 * t + anchor];
                let bracket = grad_term(theta, nu_self, nu_other, phi_anchor, pair)?
                    - grad_term(theta, nu_self, nu_other, nu_anchor, pair)?;
                entry += bracket;
            }
            values[pair] = entry;
        }
    }
    Ok(DualGradient { values })
}

#[inline]
fn grad_term(theta: f64, nu_self: f64, nu_other: f64, x: f64, pair: usize) -> Result<f64, BetheError> {
    let denom = 1.0 + theta * nu_self * nu_other * x;
    if !denom.is_finite() || denom <= 0.0 {
        return Err(BetheError::DegenerateDenominator { pair });
    }
    Ok(theta * nu_other * x / denom)
}

/// Summary of the free energies at a message state, as reported by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub dual_nu: f64,
    pub dual_lambda: f64,
    pub primal: f64,
    pub grad_inf_norm: f64,
}

impl EnergyReport {
    pub fn at(instance: &Instance, messages: &Messages) -> Result<Self, BetheError> {
        let beliefs = beliefs_from_messages(instance, messages);
        Ok(Self {
            dual_nu: dual_free_energy_nu(instance, messages),
            dual_lambda: dual_free_energy_lambda(instance, messages),
            primal: primal_bethe(instance, &beliefs)?,
            grad_inf_norm: dual_gradient(instance, messages)?.inf_norm(),
        })
    }
}
