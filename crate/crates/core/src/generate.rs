//! Reproducible instance construction.
//!
//! Three structural families:
//!
//! - `triangle_tree`: triangles attached one at a time, each sharing exactly
//!   one (uniformly chosen) vertex with the existing structure. The
//!   vertex-triangle incidence graph is acyclic.
//! - `random_motif`: `n_triangles` distinct vertex triples chosen uniformly
//!   among all triples on `n_vertices` vertices.
//! - `shared_edge_chain`: consecutive triangles share two vertices,
//!   deliberately producing short loops.
//!
//! Couplings and fields are drawn after the structure, first one coupling per
//! triangle in construction order, then one field per vertex in index order.
//! Identical specs (including seeds) produce identical instances.

use crate::model::{Instance, ModelError};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("n_triangles must be positive")]
    ZeroTriangles,

    #[error("random_motif requires n_vertices >= 3, got {0}")]
    TooFewVertices(usize),

    #[error("requested {requested} triangles but only {available} distinct triples exist")]
    NotEnoughTriples { requested: usize, available: usize },

    #[error("law range [{lo}, {hi}] is invalid")]
    BadRange { lo: f64, hi: f64 },

    #[error("spec asks for a ferromagnetic instance but the {0} law admits negative values")]
    NegativeLaw(&'static str),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How couplings or fields are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl Law {
    fn validate(&self, what: &'static str, ferromagnetic: bool) -> Result<(), GenError> {
        match *self {
            Law::Constant(c) => {
                if ferromagnetic && c < 0.0 {
                    return Err(GenError::NegativeLaw(what));
                }
            }
            Law::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(GenError::BadRange { lo, hi });
                }
                if ferromagnetic && lo < 0.0 {
                    return Err(GenError::NegativeLaw(what));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            Law::Constant(c) => c,
            Law::Uniform { lo, hi } => rng.uniform(lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    TriangleTree,
    RandomMotif,
    SharedEdgeChain,
}

/// Full description of a generated instance; serializable so run manifests
/// can embed it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n_triangles: usize,
    /// Vertex count, used by `random_motif` only (derived for the others).
    #[serde(default)]
    pub n_vertices: Option<usize>,
    pub coupling_law: Law,
    pub field_law: Law,
    pub seed: u64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Reject laws that can draw negative couplings or fields.
    #[serde(default = "yes")]
    pub ferromagnetic: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Generates the instance described by `spec`; deterministic in the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GenError> {
    if spec.n_triangles == 0 {
        return Err(GenError::ZeroTriangles);
    }
    spec.coupling_law.validate("coupling", spec.ferromagnetic)?;
    spec.field_law.validate("field", spec.ferromagnetic)?;
    let mut rng = SplitMix64::new(spec.seed);

    let (n_vertices, triples) = match spec.kind {
        GeneratorKind::TriangleTree => tree_structure(spec.n_triangles, &mut rng),
        GeneratorKind::SharedEdgeChain => chain_structure(spec.n_triangles),
        GeneratorKind::RandomMotif => {
            let n = spec.n_vertices.unwrap_or(0);
            if n < 3 {
                return Err(GenError::TooFewVertices(n));
            }
            let available = n * (n - 1) * (n - 2) / 6;
            if spec.n_triangles > available {
                return Err(GenError::NotEnoughTriples {
                    requested: spec.n_triangles,
                    available,
                });
            }
            (n, motif_structure(n, spec.n_triangles, &mut rng))
        }
    };

    let triangles: Vec<([usize; 3], f64)> = triples
        .into_iter()
        .map(|t| (t, spec.coupling_law.draw(&mut rng)))
        .collect();
    let fields: Vec<f64> = (0..n_vertices)
        .map(|_| spec.field_law.draw(&mut rng))
        .collect();

    Ok(Instance::new(fields, triangles, spec.beta)?)
}

/// Each new triangle attaches to one existing vertex and brings two fresh
/// ones, so any two triangles share at most one vertex.
fn tree_structure(n_triangles: usize, rng: &mut SplitMix64) -> (usize, Vec<[usize; 3]>) {
    let mut triples = vec![[0, 1, 2]];
    let mut n_vertices = 3;
    for _ in 1..n_triangles {
        let attach = rng.below(n_vertices);
        triples.push([attach, n_vertices, n_vertices + 1]);
        n_vertices += 2;
    }
    (n_vertices, triples)
}

/// Triangles (t, t+1, t+2): consecutive ones share two vertices.
fn chain_structure(n_triangles: usize) -> (usize, Vec<[usize; 3]>) {
    let triples = (0..n_triangles).map(|t| [t, t + 1, t + 2]).collect();
    (n_triangles + 2, triples)
}

/// Uniform choice of distinct triples: enumerate all, shuffle, take a prefix.
fn motif_structure(n: usize, n_triangles: usize, rng: &mut SplitMix64) -> Vec<[usize; 3]> {
    let mut all = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                all.push([i, j, k]);
            }
        }
    }
    rng.shuffle(&mut all);
    all.truncate(n_triangles);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_spec(n_triangles: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            kind: GeneratorKind::TriangleTree,
            n_triangles,
            n_vertices: None,
            coupling_law: Law::Uniform { lo: 0.0, hi: 2.0 },
            field_law: Law::Uniform { lo: 0.0, hi: 1.0 },
            seed,
            beta: 1.0,
            ferromagnetic: true,
        }
    }

    /// DFS cycle search on the bipartite vertex-triangle incidence graph.
    fn incidence_has_cycle(inst: &Instance) -> bool {
        // nodes: vertices [0, n), triangles [n, n + T)
        let n = inst.n_vertices();
        let total = n + inst.n_triangles();
        let mut adj = vec![Vec::new(); total];
        for (t, tri) in inst.triangles().iter().enumerate() {
            for &v in &tri.vertices {
                adj[v].push(n + t);
                adj[n + t].push(v);
            }
        }
        let mut seen = vec![false; total];
        for start in 0..total {
            if seen[start] {
                continue;
            }
            // (node, parent) stack
            let mut stack = vec![(start, usize::MAX)];
            seen[start] = true;
            while let Some((node, parent)) = stack.pop() {
                let mut parent_edges = 0;
                for &next in &adj[node] {
                    if next == parent && parent_edges == 0 {
                        parent_edges += 1;
                        continue;
                    }
                    if seen[next] {
                        return true;
                    }
                    seen[next] = true;
                    stack.push((next, node));
                }
            }
        }
        false
    }

    #[test]
    fn single_triangle_tree() {
        let inst = generate(&tree_spec(1, 3)).unwrap();
        assert_eq!(inst.n_vertices(), 3);
        assert_eq!(inst.n_triangles(), 1);
    }

    #[test]
    fn two_triangle_tree_shares_one_vertex() {
        let inst = generate(&tree_spec(2, 99)).unwrap();
        assert_eq!(inst.n_vertices(), 5);
        let shared: Vec<usize> = (0..5)
            .filter(|&v| inst.hyper_degree(v).unwrap() == 2)
            .collect();
        assert_eq!(shared.len(), 1);
    }

    #[test]
    fn trees_are_acyclic() {
        for seed in [0u64, 7, 41, 1234] {
            let inst = generate(&tree_spec(5, seed)).unwrap();
            assert_eq!(inst.n_vertices(), 3 + 2 * 4);
            assert!(!incidence_has_cycle(&inst), "seed {seed}");
        }
    }

    #[test]
    fn shared_edge_chain_is_loopy() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::SharedEdgeChain,
            n_triangles: 2,
            ..tree_spec(2, 5)
        };
        let inst = generate(&spec).unwrap();
        assert_eq!(inst.n_vertices(), 4);
        assert_eq!(inst.n_triangles(), 2);
        // the two middle vertices belong to both triangles
        let shared = (0..4)
            .filter(|&v| inst.hyper_degree(v).unwrap() == 2)
            .count();
        assert_eq!(shared, 2);
        assert!(incidence_has_cycle(&inst));
    }

    #[test]
    fn random_motif_complete_on_four_vertices() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::RandomMotif,
            n_triangles: 4,
            n_vertices: Some(4),
            ..tree_spec(4, 11)
        };
        let inst = generate(&spec).unwrap();
        assert_eq!(inst.n_triangles(), 4);
        // all four triples of K_4^(3) present
        let triples: Vec<[usize; 3]> = inst.triangles().iter().map(|t| t.vertices).collect();
        for expect in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            assert!(triples.contains(&expect));
        }
    }

    #[test]
    fn random_motif_too_many_triples() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::RandomMotif,
            n_triangles: 5,
            n_vertices: Some(4),
            ..tree_spec(5, 11)
        };
        assert_eq!(
            generate(&spec).unwrap_err(),
            GenError::NotEnoughTriples {
                requested: 5,
                available: 4
            }
        );
    }

    #[test]
    fn determinism_byte_identical() {
        let spec = tree_spec(5, 7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a.to_file()).unwrap();
        let jb = serde_json::to_string(&b.to_file()).unwrap();
        assert_eq!(ja, jb);
        // a different seed must change something
        let c = generate(&tree_spec(5, 8)).unwrap();
        assert_ne!(serde_json::to_string(&c.to_file()).unwrap(), ja);
    }

    #[test]
    fn ferromagnetic_flag_honored() {
        let inst = generate(&tree_spec(6, 13)).unwrap();
        assert!(inst.is_ferromagnetic());

        let bad = GeneratorSpec {
            coupling_law: Law::Uniform { lo: -1.0, hi: 1.0 },
            ..tree_spec(3, 1)
        };
        assert_eq!(generate(&bad).unwrap_err(), GenError::NegativeLaw("coupling"));

        // explicitly non-ferromagnetic draws are allowed when flagged off
        let mixed = GeneratorSpec {
            ferromagnetic: false,
            coupling_law: Law::Uniform { lo: -1.0, hi: 1.0 },
            ..tree_spec(3, 1)
        };
        assert!(generate(&mixed).is_ok());
    }

    #[test]
    fn zero_triangles_rejected() {
        assert_eq!(generate(&tree_spec(0, 1)).unwrap_err(), GenError::ZeroTriangles);
    }

    #[test]
    fn spec_serde_round_trip() {
        let spec = tree_spec(4, 9);
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, parsed);
    }
}
