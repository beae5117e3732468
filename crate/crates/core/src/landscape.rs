//! Optimization-landscape diagnostics: the scalar monotone-region boundary
//! x*, pre-/post-fixpoint classification, gradient sign audits, and a
//! fixed-point census under many initializations.
//!
//! x* comes from the largest sign change of the scalar diagnostic
//!
//! ```text
//! g(x) = 1/x + x - 2 f(x) (1 + C (1 - x / f(x))),
//! f(x) = tanh(h + d * atanh(theta x^2))
//! ```
//!
//! scanned descending from 1 (grid then bisection). `f` scalarizes the
//! multivariate update: `d = q_i - 1` for an outgoing message and `theta` is
//! the pair's coupling tanh. The constant C defaults to its lower bound
//! `2 / sqrt(q_i q_j)` with `q_j` the larger partner degree, and can be
//! overridden. x* is a diagnostic, not a gate: BP runs regardless, and the
//! region-conditioned property checks only assert inside `[x*, 1)^n`.

use crate::bethe::{self, DualGradient};
use crate::bp::{self, BpConfig, Messages, Schedule};
use crate::model::Instance;
use crate::rng::SplitMix64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LandscapeError {
    #[error("x = {0} outside (0, 1)")]
    XOutOfDomain(f64),

    #[error("|theta x^2| = {0} not inside (0, 1): atanh undefined")]
    ThetaOutOfDomain(f64),

    #[error("scalar surrogate f(x) = 0 at x = {0}: g is undefined")]
    SurrogateZero(f64),

    #[error("step {step} too large: pair {pair} with value {value} is not 2*step inside (-1, 1)")]
    StepTooLarge { pair: usize, value: f64, step: f64 },

    #[error(transparent)]
    Bethe(#[from] bethe::BetheError),
}

/// The scalar diagnostic g from the monotone-concavity argument.
pub fn g_function(
    x: f64,
    h: f64,
    effective_degree: usize,
    theta: f64,
    c: f64,
) -> Result<f64, LandscapeError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(LandscapeError::XOutOfDomain(x));
    }
    let arg = theta * x * x;
    if arg.abs() >= 1.0 {
        return Err(LandscapeError::ThetaOutOfDomain(arg.abs()));
    }
    let fhat = (h + effective_degree as f64 * arg.atanh()).tanh();
    if fhat == 0.0 {
        return Err(LandscapeError::SurrogateZero(x));
    }
    Ok(1.0 / x + x - 2.0 * fhat * (1.0 + c * (1.0 - x / fhat)))
}

/// Scan configuration for [`estimate_xstar_with`].
#[derive(Debug, Clone)]
pub struct XStarConfig {
    /// Grid density over (0, 1).
    pub grid_points: usize,
    /// Override for the C constant (applied to every pair when set).
    pub c_override: Option<f64>,
}

impl Default for XStarConfig {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            c_override: None,
        }
    }
}

/// Per-pair roots of g and their max, the landscape threshold x*.
#[derive(Debug, Clone, Serialize)]
pub struct XStarEstimate {
    /// max over per-pair roots, in [0, 1).
    pub value: f64,
    /// Root estimate per directed pair (message indexing); 0 when the scan
    /// finds no constraint.
    pub per_pair_roots: Vec<f64>,
    /// The C constant used for each pair.
    pub per_pair_c: Vec<f64>,
}

/// [`estimate_xstar_with`] under the default scan configuration.
pub fn estimate_xstar(instance: &Instance) -> XStarEstimate {
    estimate_xstar_with(instance, &XStarConfig::default())
}

/// For each directed pair, scans g on a descending grid for the largest
/// transition from <= 0 (above) to > 0 (below), refines it by bisection to
/// 1e-12, and takes the max across pairs. Pairs with theta <= 0, with a
/// degenerate surrogate, or with no transition found yield root 0.
pub fn estimate_xstar_with(instance: &Instance, config: &XStarConfig) -> XStarEstimate {
    let n_pairs = 3 * instance.n_triangles();
    let mut per_pair_roots = vec![0.0f64; n_pairs];
    let mut per_pair_c = vec![0.0f64; n_pairs];

    for t in 0..instance.n_triangles() {
        let tri = *instance.triangle(t);
        for pos in 0..3 {
            let pair = 3 * t + pos;
            let vertex = tri.vertices[pos];
            let q_i = instance.incident(vertex).len();
            let [p1, p2] = crate::model::Triangle::partner_positions(pos);
            let q_partner = instance
                .incident(tri.vertices[p1])
                .len()
                .max(instance.incident(tri.vertices[p2]).len());
            let c = config
                .c_override
                .unwrap_or(2.0 / ((q_i * q_partner) as f64).sqrt());
            per_pair_c[pair] = c;

            let theta = tri.theta;
            let h = instance.beta() * instance.field(vertex);
            let degree = q_i - 1;
            if theta <= 0.0 || (h == 0.0 && degree == 0) {
                continue; // degenerate: no constraint from this pair
            }
            per_pair_roots[pair] = scan_root(h, degree, theta, c, config.grid_points);
        }
    }

    let value = per_pair_roots.iter().cloned().fold(0.0, f64::max);
    XStarEstimate {
        value,
        per_pair_roots,
        per_pair_c,
    }
}

/// Treats evaluation errors as "no certificate here" (positive side).
fn g_or_positive(x: f64, h: f64, d: usize, theta: f64, c: f64) -> f64 {
    g_function(x, h, d, theta, c).unwrap_or(f64::INFINITY)
}

fn scan_root(h: f64, degree: usize, theta: f64, c: f64, grid: usize) -> f64 {
    let pts: Vec<f64> = (1..grid).map(|m| m as f64 / grid as f64).collect();
    let gv: Vec<f64> = pts
        .iter()
        .map(|&x| g_or_positive(x, h, degree, theta, c))
        .collect();
    // walk down from 1; the first index with g > 0 below a g <= 0 point is
    // the largest root
    for m in (0..pts.len() - 1).rev() {
        if gv[m] > 0.0 && gv[m + 1] <= 0.0 {
            let (mut lo, mut hi) = (pts[m], pts[m + 1]);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if g_or_positive(mid, h, degree, theta, c) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
    }
    0.0
}

/// Membership of a message vector relative to the fixed-point structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    PreFixpoint,
    PostFixpoint,
    FixedPoint,
    /// Neither region; `witness` is the first directed pair violating the
    /// pre-fixpoint conditions.
    Neither { witness: usize },
}

/// The synchronous undamped map phi applied once.
pub fn apply_phi(instance: &Instance, messages: &Messages) -> Messages {
    bp::sweep(
        instance,
        messages,
        &BpConfig {
            schedule: Schedule::Synchronous,
            damping: 0.0,
            ..BpConfig::default()
        },
    )
}

/// Classifies `messages`: pre-fixpoint iff `x* <= phi(nu) <= nu + tol`
/// coordinate-wise, post-fixpoint iff `x* <= nu <= phi(nu) + tol`, fixed
/// point iff both.
pub fn classify_point(
    instance: &Instance,
    messages: &Messages,
    xstar: f64,
    tol: f64,
) -> RegionLabel {
    let phi = apply_phi(instance, messages);
    let mut pre = true;
    let mut post = true;
    let mut pre_witness = None;
    for pair in 0..messages.len() {
        let nu = messages.values()[pair];
        let ph = phi.values()[pair];
        if !(xstar <= ph && ph <= nu + tol) && pre {
            pre = false;
            pre_witness = Some(pair);
        }
        if !(xstar <= nu && nu <= ph + tol) {
            post = false;
        }
        if !pre && !post {
            break;
        }
    }
    match (pre, post) {
        (true, true) => RegionLabel::FixedPoint,
        (true, false) => RegionLabel::PreFixpoint,
        (false, true) => RegionLabel::PostFixpoint,
        (false, false) => RegionLabel::Neither {
            witness: pre_witness.unwrap_or(0),
        },
    }
}

/// Outcome of a gradient sign audit.
#[derive(Debug, Clone, Serialize)]
pub struct SignAuditReport {
    pub samples: usize,
    pub pre_count: usize,
    pub post_count: usize,
    pub fixed_count: usize,
    pub neither_count: usize,
    /// Largest gradient entry seen over pre-fixpoint (and fixed) samples;
    /// the sign lemma requires it to stay below +1e-10.
    pub max_entry_pre: f64,
    /// Smallest gradient entry seen over post-fixpoint (and fixed) samples;
    /// the sign lemma requires it to stay above -1e-10.
    pub min_entry_post: f64,
}

impl SignAuditReport {
    pub fn classified(&self) -> usize {
        self.pre_count + self.post_count + self.fixed_count
    }
}

/// Samples candidate message vectors (trajectory states from the all-ones
/// run, an ascending trajectory from the region floor, random interpolations
/// and uniform draws), classifies each with [`classify_point`], and records
/// the extreme gradient entries per region.
pub fn gradient_sign_audit(
    instance: &Instance,
    xstar: f64,
    samples: usize,
    seed: u64,
) -> Result<SignAuditReport, LandscapeError> {
    let mut rng = SplitMix64::new(seed);
    let n_pairs = 3 * instance.n_triangles();
    let mut candidates: Vec<Messages> = Vec::with_capacity(samples);

    let trace_config = BpConfig {
        record_trace: true,
        ..BpConfig::default()
    };
    let descend = bp::run_bp(instance, &trace_config).expect("valid default config");
    let descent_states = descend.message_trace.as_deref().unwrap_or(&[]);
    let quarter = (samples / 4).max(1);
    for state in thin(descent_states, quarter) {
        candidates.push(state.clone());
    }
    let fixed = descend.converged.then(|| descend.final_messages.clone());

    // ascending trajectory from just above the region floor, if the map
    // moves that corner upward
    let floor = (xstar + 0.01).clamp(0.02, 0.98);
    if let Ok(corner) = Messages::from_values(instance, vec![floor; n_pairs]) {
        let up = apply_phi(instance, &corner);
        if up
            .values()
            .iter()
            .zip(corner.values())
            .all(|(a, b)| a >= b)
        {
            let mut state = corner;
            for _ in 0..quarter {
                candidates.push(state.clone());
                let next = apply_phi(instance, &state);
                if next.max_abs_diff(&state) < 1e-12 {
                    break;
                }
                state = next;
            }
        }
    }

    while candidates.len() < samples {
        let draw: Vec<f64> = match (candidates.len() % 3, &fixed) {
            // interpolate between the all-ones fixed point and the corners
            (0, Some(fp)) => {
                let t = rng.next_f64();
                fp.values().iter().map(|&v| t + (1.0 - t) * v).collect()
            }
            (1, Some(fp)) => {
                let t = rng.next_f64();
                fp.values()
                    .iter()
                    .map(|&v| t * xstar.max(0.0) + (1.0 - t) * v)
                    .collect()
            }
            _ => (0..n_pairs)
                .map(|_| rng.uniform(xstar.max(0.0), 1.0))
                .collect(),
        };
        candidates.push(Messages::from_values(instance, draw).expect("values in range"));
    }
    candidates.truncate(samples);

    let mut report = SignAuditReport {
        samples: candidates.len(),
        pre_count: 0,
        post_count: 0,
        fixed_count: 0,
        neither_count: 0,
        max_entry_pre: f64::NEG_INFINITY,
        min_entry_post: f64::INFINITY,
    };
    for point in &candidates {
        let label = classify_point(instance, point, xstar, 1e-12);
        let (in_pre, in_post) = match label {
            RegionLabel::PreFixpoint => {
                report.pre_count += 1;
                (true, false)
            }
            RegionLabel::PostFixpoint => {
                report.post_count += 1;
                (false, true)
            }
            RegionLabel::FixedPoint => {
                report.fixed_count += 1;
                (true, true)
            }
            RegionLabel::Neither { .. } => {
                report.neither_count += 1;
                (false, false)
            }
        };
        if in_pre || in_post {
            let grad = bethe::dual_gradient(instance, point)?;
            for &g in grad.values() {
                if in_pre {
                    report.max_entry_pre = report.max_entry_pre.max(g);
                }
                if in_post {
                    report.min_entry_post = report.min_entry_post.min(g);
                }
            }
        }
    }
    Ok(report)
}

fn thin<T>(items: &[T], keep: usize) -> impl Iterator<Item = &T> {
    let stride = (items.len() / keep.max(1)).max(1);
    items.iter().step_by(stride).take(keep)
}

/// How a census run was initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    AllOnes,
    /// k-th random initialization in (0, 1)^n.
    UniformPositive(usize),
    /// k-th random initialization in (-1, 1)^n.
    UniformSymmetric(usize),
}

/// One deduplicated fixed point found by the census.
#[derive(Debug, Clone, Serialize)]
pub struct CensusPoint {
    pub messages: Vec<f64>,
    pub dual_nu: f64,
    pub dual_lambda: f64,
    pub reached_from: InitKind,
    /// All coordinates inside [x*, 1).
    pub in_region: bool,
}

/// Census of BP fixed points across initializations.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointCensus {
    /// Sorted by (dual_nu, lexicographic messages).
    pub points: Vec<CensusPoint>,
    /// Index into `points` of the fixed point reached from all-ones, when
    /// that run converged.
    pub dominant: Option<usize>,
    pub non_converged_runs: usize,
    /// The all-ones fixed point coordinate-wise dominates (within 1e-9)
    /// every other census point lying in [x*, 1)^n.
    pub dominance_holds: bool,
    /// The all-ones fixed point has the largest dual_nu among census points,
    /// within 1e-9.
    pub nu_maximal: bool,
}

/// Fixed points are merged when within this max-norm distance (three orders
/// above the default BP tolerance).
pub const DEDUP_TOL: f64 = 1e-7;

/// Runs BP from all-ones plus `n_inits` random initializations in (0,1)^n
/// and `n_inits` in (-1,1)^n, deduplicates the converged fixed points, and
/// checks the dominance and maximality claims against `xstar`.
pub fn fixed_point_census(
    instance: &Instance,
    xstar: f64,
    n_inits: usize,
    seed: u64,
    bp_config: &BpConfig,
) -> Result<FixedPointCensus, LandscapeError> {
    let mut rng = SplitMix64::new(seed);
    let n_pairs = 3 * instance.n_triangles();

    let mut runs: Vec<(InitKind, Messages)> = Vec::with_capacity(2 * n_inits + 1);
    runs.push((
        InitKind::AllOnes,
        bp::init_messages(instance, 1.0).expect("1.0 is a valid init"),
    ));
    for k in 0..n_inits {
        let vals: Vec<f64> = (0..n_pairs)
            .map(|_| 0.0005 + 0.999 * rng.next_f64())
            .collect();
        runs.push((
            InitKind::UniformPositive(k),
            Messages::from_values(instance, vals).expect("in range"),
        ));
    }
    for k in 0..n_inits {
        let vals: Vec<f64> = (0..n_pairs)
            .map(|_| -0.9995 + 1.999 * rng.next_f64())
            .collect();
        runs.push((
            InitKind::UniformSymmetric(k),
            Messages::from_values(instance, vals).expect("in range"),
        ));
    }

    let mut points: Vec<CensusPoint> = Vec::new();
    let mut non_converged = 0usize;
    let mut all_ones_messages: Option<Messages> = None;
    for (kind, initial) in runs {
        let result = bp::run_bp_from(instance, initial, bp_config).expect("validated config");
        if !result.converged {
            non_converged += 1;
            continue;
        }
        let final_messages = result.final_messages;
        if kind == InitKind::AllOnes {
            all_ones_messages = Some(final_messages.clone());
        }
        let duplicate = points.iter().any(|p| {
            p.messages
                .iter()
                .zip(final_messages.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                <= DEDUP_TOL
        });
        if !duplicate {
            points.push(CensusPoint {
                dual_nu: bethe::dual_free_energy_nu(instance, &final_messages),
                dual_lambda: bethe::dual_free_energy_lambda(instance, &final_messages),
                in_region: final_messages
                    .values()
                    .iter()
                    .all(|&v| v >= xstar && v < 1.0),
                messages: final_messages.values().to_vec(),
                reached_from: kind,
            });
        }
    }

    points.sort_by(|a, b| {
        a.dual_nu
            .partial_cmp(&b.dual_nu)
            .unwrap()
            .then_with(|| a.messages.partial_cmp(&b.messages).unwrap())
    });

    let dominant = all_ones_messages.as_ref().map(|msgs| {
        points
            .iter()
            .position(|p| {
                p.messages
                    .iter()
                    .zip(msgs.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    <= DEDUP_TOL
            })
            .expect("all-ones fixed point present in census")
    });

    let (dominance_holds, nu_maximal) = match dominant {
        Some(idx) => {
            let star = &points[idx];
            let dominance = points.iter().enumerate().all(|(i, p)| {
                i == idx
                    || !p.in_region
                    || p.messages
                        .iter()
                        .zip(&star.messages)
                        .all(|(mu, nu)| *mu <= nu + 1e-9)
            });
            let maximal = points.iter().all(|p| p.dual_nu <= star.dual_nu + 1e-9);
            (dominance, maximal)
        }
        None => (false, false),
    };

    Ok(FixedPointCensus {
        points,
        dominant,
        non_converged_runs: non_converged,
        dominance_holds,
        nu_maximal,
    })
}

/// Central finite differences of the nu-form dual free energy; the
/// verification oracle for [`bethe::dual_gradient`].
pub fn finite_diff_gradient(
    instance: &Instance,
    messages: &Messages,
    step: f64,
) -> Result<DualGradient, LandscapeError> {
    for (pair, &v) in messages.values().iter().enumerate() {
        if v.abs() > 1.0 - 2.0 * step {
            return Err(LandscapeError::StepTooLarge {
                pair,
                value: v,
                step,
            });
        }
    }
    let mut values = vec![0.0f64; messages.len()];
    let mut work = messages.values().to_vec();
    for pair in 0..work.len() {
        let center = work[pair];
        work[pair] = center + step;
        let up = bethe::dual_free_energy_nu(
            instance,
            &Messages::from_values(instance, work.clone()).expect("in range"),
        );
        work[pair] = center - step;
        let down = bethe::dual_free_energy_nu(
            instance,
            &Messages::from_values(instance, work.clone()).expect("in range"),
        );
        work[pair] = center;
        values[pair] = (up - down) / (2.0 * step);
    }
    Ok(DualGradient::from_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{self, GeneratorKind, GeneratorSpec, Law};
    use crate::model::Instance;

    fn star(n_triangles: usize, j: f64, h: f64) -> Instance {
        // n_triangles triangles all sharing vertex 0
        let mut tris = Vec::new();
        let mut next = 1;
        for _ in 0..n_triangles {
            tris.push(([0, next, next + 1], j));
            next += 2;
        }
        Instance::new(vec![h; next], tris, 1.0).unwrap()
    }

    fn shared_edge_pair(j: f64, h: f64) -> Instance {
        Instance::new(vec![h; 4], vec![([0, 1, 2], j), ([1, 2, 3], j)], 1.0).unwrap()
    }

    #[test]
    fn g_blows_up_near_zero() {
        let g = g_function(1e-6, 0.5, 2, 1.0f64.tanh(), 2.0).unwrap();
        assert!(g > 1e5);
    }

    #[test]
    fn g_negative_just_below_one_for_saturated_field() {
        // representative of the f ~ 1 regime: the diagnostic dips below zero
        // right before x = 1
        let g = g_function(1.0 - 1e-9, 20.0, 1, 1.0f64.tanh(), 2.0).unwrap();
        assert!(g < 0.0, "g = {g}");
        // while for a moderate field the same point is positive
        let g2 = g_function(1.0 - 1e-9, 0.5, 1, 1.0f64.tanh(), 2.0).unwrap();
        assert!(g2 > 0.0);
    }

    #[test]
    fn g_frozen_regression_value() {
        // x = 0.5, h = 0.1, degree 2, theta = tanh 1, C = 2; frozen from
        // direct evaluation, cross-checked by the rational tanh route
        let g = g_function(0.5, 0.1, 2, 1.0f64.tanh(), 2.0).unwrap();
        assert!((g - 1.7961683337865368).abs() < 1e-12);

        let t = 1.0f64.tanh() * 0.25;
        let mut fhat = 0.1f64.tanh();
        for _ in 0..2 {
            fhat = (fhat + t) / (1.0 + fhat * t);
        }
        let independent = 1.0 / 0.5 + 0.5 - 2.0 * fhat * (1.0 + 2.0 * (1.0 - 0.5 / fhat));
        assert!((g - independent).abs() < 1e-13);
    }

    #[test]
    fn g_domain_errors() {
        assert!(matches!(
            g_function(0.0, 0.5, 1, 0.5, 2.0),
            Err(LandscapeError::XOutOfDomain(_))
        ));
        assert!(matches!(
            g_function(1.0, 0.5, 1, 0.5, 2.0),
            Err(LandscapeError::XOutOfDomain(_))
        ));
        assert!(matches!(
            g_function(0.9, 0.0, 3, 0.0, 2.0),
            Err(LandscapeError::SurrogateZero(_))
        ));
        assert!(matches!(
            g_function(0.9, 0.5, 1, 1.5, 2.0),
            Err(LandscapeError::ThetaOutOfDomain(_))
        ));
    }

    #[test]
    fn xstar_zero_for_decoupled_instances() {
        let inst = star(2, 0.0, 0.4);
        let est = estimate_xstar(&inst);
        assert_eq!(est.value, 0.0);
        assert!(est.per_pair_roots.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn xstar_single_triangle_regression() {
        // q_i = 1 everywhere: the surrogate is constant tanh(h) and g stays
        // positive on the whole grid, so every root is 0 (frozen via a
        // 10^6-point scan)
        let inst = Instance::new(vec![0.5; 3], vec![([0, 1, 2], 1.0)], 1.0).unwrap();
        let est = estimate_xstar(&inst);
        let dense = estimate_xstar_with(
            &inst,
            &XStarConfig {
                grid_points: 1_000_000,
                c_override: None,
            },
        );
        assert_eq!(est.value, 0.0);
        assert_eq!(dense.value, 0.0);
        // roots equal across the three pairs by symmetry
        assert!(est.per_pair_roots.windows(2).all(|w| w[0] == w[1]));
        assert!((est.per_pair_c[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn xstar_star_instance_vs_dense_grid() {
        let inst = star(3, 2.0, 0.3);
        let est = estimate_xstar(&inst);
        let dense = estimate_xstar_with(
            &inst,
            &XStarConfig {
                grid_points: 1_000_000,
                c_override: None,
            },
        );
        assert!(est.value > 0.5 && est.value < 1.0);
        assert!((est.value - dense.value).abs() < 1e-9);
    }

    #[test]
    fn xstar_shrinks_with_field() {
        // the monotone region grows (x* shrinks) as the field strengthens
        let weak = estimate_xstar(&star(3, 2.0, 0.1));
        let strong = estimate_xstar(&star(3, 2.0, 5.0));
        assert!(strong.value < weak.value, "{} vs {}", strong.value, weak.value);
        assert!(weak.value > 0.0);
    }

    #[test]
    fn xstar_c_override() {
        let inst = star(3, 2.0, 0.3);
        let overridden = estimate_xstar_with(
            &inst,
            &XStarConfig {
                grid_points: 10_000,
                c_override: Some(5.0),
            },
        );
        assert!(overridden.per_pair_c.iter().all(|&c| c == 5.0));
        // larger C pushes g down, so the root moves left
        let default = estimate_xstar(&inst);
        assert!(overridden.value <= default.value);
    }

    #[test]
    fn classify_all_ones_is_pre() {
        let inst = shared_edge_pair(1.0, 0.3);
        let est = estimate_xstar(&inst);
        let ones = bp::init_messages(&inst, 1.0).unwrap();
        assert_eq!(
            classify_point(&inst, &ones, est.value, 1e-12),
            RegionLabel::PreFixpoint
        );
    }

    #[test]
    fn classify_converged_point_is_fixed() {
        let inst = shared_edge_pair(1.0, 0.3);
        let run = bp::run_bp(&inst, &BpConfig::default()).unwrap();
        assert!(run.converged);
        let label = classify_point(&inst, &run.final_messages, 0.0, 1e-9);
        assert_eq!(label, RegionLabel::FixedPoint);
    }

    #[test]
    fn classify_below_fixed_point_is_post() {
        let inst = shared_edge_pair(1.0, 0.3);
        let run = bp::run_bp(&inst, &BpConfig::default()).unwrap();
        let shrunk: Vec<f64> = run
            .final_messages
            .values()
            .iter()
            .map(|&v| v * 0.98)
            .collect();
        let point = Messages::from_values(&inst, shrunk).unwrap();
        // verified by explicit phi evaluation
        let phi = apply_phi(&inst, &point);
        assert!(phi
            .values()
            .iter()
            .zip(point.values())
            .all(|(p, v)| p >= v));
        assert_eq!(
            classify_point(&inst, &point, 0.0, 1e-12),
            RegionLabel::PostFixpoint
        );
    }

    #[test]
    fn classify_neither_reports_witness() {
        let inst = shared_edge_pair(1.0, 0.3);
        // far above phi in one coordinate, far below in another
        let mut vals = vec![0.9; 6];
        vals[3] = -0.9;
        let point = Messages::from_values(&inst, vals).unwrap();
        match classify_point(&inst, &point, 0.5, 1e-12) {
            RegionLabel::Neither { witness } => assert!(witness < 6),
            other => panic!("expected Neither, got {other:?}"),
        }
    }

    #[test]
    fn audit_zero_coupling_vacuous_pass() {
        let inst = star(2, 0.0, 0.5);
        let report = gradient_sign_audit(&inst, 0.0, 40, 99).unwrap();
        assert_eq!(report.samples, 40);
        // gradient identically zero wherever classified
        if report.classified() > 0 {
            assert!(report.max_entry_pre <= 1e-15 || report.max_entry_pre == f64::NEG_INFINITY);
            assert!(report.min_entry_post >= -1e-15 || report.min_entry_post == f64::INFINITY);
        }
    }

    #[test]
    fn audit_signs_on_loopy_ferromagnet() {
        let inst = shared_edge_pair(1.2, 0.4);
        let est = estimate_xstar(&inst);
        let report = gradient_sign_audit(&inst, est.value, 80, 7).unwrap();
        assert!(report.classified() > 0, "no classified samples");
        assert!(report.pre_count > 0);
        assert!(
            report.max_entry_pre <= 1e-10,
            "pre violation {}",
            report.max_entry_pre
        );
        if report.post_count + report.fixed_count > 0 {
            assert!(
                report.min_entry_post >= -1e-10,
                "post violation {}",
                report.min_entry_post
            );
        }
    }

    #[test]
    fn census_single_triangle_unique_fixed_point() {
        let inst = Instance::new(vec![0.3, 0.5, 0.1], vec![([0, 1, 2], 1.0)], 1.0).unwrap();
        let census =
            fixed_point_census(&inst, 0.0, 10, 42, &BpConfig::default()).unwrap();
        assert_eq!(census.points.len(), 1);
        assert_eq!(census.non_converged_runs, 0);
        assert!(census.dominance_holds);
        assert!(census.nu_maximal);
        // empty sums force nu_i = tanh(h_i)
        let point = &census.points[0];
        for (pos, &vertex) in inst.triangle(0).vertices.iter().enumerate() {
            let expect = inst.field(vertex).tanh();
            assert!((point.messages[pos] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn census_tree_matches_log_z() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::TriangleTree,
            n_triangles: 3,
            n_vertices: None,
            coupling_law: Law::Constant(1.0),
            field_law: Law::Constant(0.2),
            seed: 5,
            beta: 1.0,
            ferromagnetic: true,
        };
        let inst = generate::generate(&spec).unwrap();
        let est = estimate_xstar(&inst);
        let census =
            fixed_point_census(&inst, est.value, 8, 3, &BpConfig::default()).unwrap();
        let dominant = census.dominant.expect("all-ones run converged");
        let log_z = crate::exact::enumerate(&inst).unwrap().log_partition;
        assert!((census.points[dominant].dual_lambda - log_z).abs() < 1e-8);
    }

    #[test]
    fn census_loopy_strong_coupling_dominance() {
        // two triangles sharing an edge pair at strong coupling and weak
        // field: the stress case for the optimality claim
        let inst = shared_edge_pair(2.0, 0.05);
        let est = estimate_xstar(&inst);
        let census =
            fixed_point_census(&inst, est.value, 20, 11, &BpConfig::default()).unwrap();
        assert!(census.dominant.is_some());
        assert!(census.dominance_holds);
        assert!(census.nu_maximal);
    }

    #[test]
    fn finite_diff_zero_for_decoupled() {
        let inst = star(2, 0.0, 0.5);
        let msgs = bp::init_messages(&inst, 0.3).unwrap();
        let fd = finite_diff_gradient(&inst, &msgs, 1e-6).unwrap();
        assert!(fd.inf_norm() < 1e-12);
    }

    #[test]
    fn finite_diff_step_guard() {
        let inst = star(2, 1.0, 0.5);
        let msgs = bp::init_messages(&inst, 1.0 - 1e-9).unwrap();
        assert!(matches!(
            finite_diff_gradient(&inst, &msgs, 1e-6),
            Err(LandscapeError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn finite_diff_small_at_fixed_point() {
        let inst = shared_edge_pair(1.0, 0.3);
        let run = bp::run_bp(&inst, &BpConfig::default()).unwrap();
        assert!(run.converged);
        let fd = finite_diff_gradient(&inst, &run.final_messages, 1e-6).unwrap();
        assert!(fd.inf_norm() < 1e-6, "inf norm {}", fd.inf_norm());
    }
}
