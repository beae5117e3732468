//! Ising instances on triangle-motif hypergraphs.
//!
//! An [`Instance`] holds per-vertex external fields `h_i`, a set of triangle
//! hyperedges with three-spin couplings `J_ijk`, and an inverse temperature
//! `beta`. Triangles are canonicalized to sorted vertex triples on
//! construction, duplicate triangles are rejected, and the vertex-to-triangle
//! incidence lists are cached. Instances are immutable after construction and
//! safe to share across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from instance construction and model queries.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("vertex {vertex} out of range (n_vertices = {n_vertices})")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },

    #[error("triangle ({0}, {1}, {2}) repeats a vertex")]
    RepeatedVertex(usize, usize, usize),

    #[error("duplicate triangle ({0}, {1}, {2})")]
    DuplicateTriangle(usize, usize, usize),

    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),

    #[error("coupling for triangle ({0}, {1}, {2}) must be finite")]
    NonFiniteCoupling(usize, usize, usize),

    #[error("field h[{0}] must be finite")]
    NonFiniteField(usize),

    #[error("configuration length {got} does not match n_vertices {expected}")]
    ConfigLengthMismatch { got: usize, expected: usize },

    #[error("spin at index {0} must be +1 or -1")]
    InvalidSpin(usize),
}

/// A triangle hyperedge: sorted vertex triple, coupling, and cached
/// `theta = tanh(beta * J)`.
///
/// `|theta| < 1` holds for every finite coupling, which keeps the
/// `atanh` argument of the message update strictly inside (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub coupling: f64,
    pub theta: f64,
}

impl Triangle {
    /// Positions of the two vertices other than `pos` within the triple.
    pub fn partner_positions(pos: usize) -> [usize; 2] {
        match pos {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }
}

/// A spin configuration, one value in {+1, -1} per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    spins: Vec<i8>,
}

impl Configuration {
    pub fn new(spins: Vec<i8>) -> Result<Self, ModelError> {
        for (i, &s) in spins.iter().enumerate() {
            if s != 1 && s != -1 {
                return Err(ModelError::InvalidSpin(i));
            }
        }
        Ok(Self { spins })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spin(&self, vertex: usize) -> f64 {
        f64::from(self.spins[vertex])
    }

    /// Configuration encoded by the low `n` bits of `mask`: bit set means
    /// spin -1. Used by the exact enumerator.
    pub fn from_mask(mask: u32, n: usize) -> Self {
        let spins = (0..n)
            .map(|v| if mask >> v & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { spins }
    }
}

/// An immutable higher-order Ising instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    fields: Vec<f64>,
    triangles: Vec<Triangle>,
    beta: f64,
    /// incidence[v] lists (triangle index, position of v in that triple).
    incidence: Vec<Vec<(usize, usize)>>,
}

impl Instance {
    /// Builds a validated instance. Triangle triples are sorted and the
    /// triangle list is stored in lexicographic order; `theta` is cached.
    pub fn new(
        fields: Vec<f64>,
        triangles: Vec<([usize; 3], f64)>,
        beta: f64,
    ) -> Result<Self, ModelError> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(ModelError::InvalidBeta(beta));
        }
        let n = fields.len();
        for (i, h) in fields.iter().enumerate() {
            if !h.is_finite() {
                return Err(ModelError::NonFiniteField(i));
            }
        }

        let mut canon: Vec<Triangle> = Vec::with_capacity(triangles.len());
        for (verts, coupling) in triangles {
            let mut v = verts;
            v.sort_unstable();
            let [a, b, c] = v;
            if a == b || b == c {
                return Err(ModelError::RepeatedVertex(verts[0], verts[1], verts[2]));
            }
            if c >= n {
                return Err(ModelError::VertexOutOfRange {
                    vertex: c,
                    n_vertices: n,
                });
            }
            if !coupling.is_finite() {
                return Err(ModelError::NonFiniteCoupling(a, b, c));
            }
            canon.push(Triangle {
                vertices: v,
                coupling,
                theta: (beta * coupling).tanh(),
            });
        }
        canon.sort_by_key(|t| t.vertices);
        for w in canon.windows(2) {
            if w[0].vertices == w[1].vertices {
                let [a, b, c] = w[0].vertices;
                return Err(ModelError::DuplicateTriangle(a, b, c));
            }
        }

        let mut incidence = vec![Vec::new(); n];
        for (t, tri) in canon.iter().enumerate() {
            for (pos, &v) in tri.vertices.iter().enumerate() {
                incidence[v].push((t, pos));
            }
        }

        Ok(Self {
            fields,
            triangles: canon,
            beta,
            incidence,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.fields.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self, vertex: usize) -> f64 {
        self.fields[vertex]
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn triangle(&self, index: usize) -> &Triangle {
        &self.triangles[index]
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Triangles incident to `vertex`, as (triangle index, position) pairs.
    pub fn incident(&self, vertex: usize) -> &[(usize, usize)] {
        &self.incidence[vertex]
    }

    /// The hyper-degree `q_i`: number of triangles attached to `vertex`.
    pub fn hyper_degree(&self, vertex: usize) -> Result<usize, ModelError> {
        self.incidence
            .get(vertex)
            .map(Vec::len)
            .ok_or(ModelError::VertexOutOfRange {
                vertex,
                n_vertices: self.n_vertices(),
            })
    }

    /// True iff every coupling and every field is >= 0.
    pub fn is_ferromagnetic(&self) -> bool {
        self.triangles.iter().all(|t| t.coupling >= 0.0)
            && self.fields.iter().all(|&h| h >= 0.0)
    }

    /// The Hamiltonian `E(X) = -sum_i h_i X_i - sum_(i,j,k) J_ijk X_i X_j X_k`,
    /// each unordered triangle counted once.
    pub fn energy(&self, config: &Configuration) -> Result<f64, ModelError> {
        if config.len() != self.n_vertices() {
            return Err(ModelError::ConfigLengthMismatch {
                got: config.len(),
                expected: self.n_vertices(),
            });
        }
        let mut e = 0.0;
        for (v, &h) in self.fields.iter().enumerate() {
            e -= h * config.spin(v);
        }
        for t in &self.triangles {
            let [i, j, k] = t.vertices;
            e -= t.coupling * config.spin(i) * config.spin(j) * config.spin(k);
        }
        Ok(e)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            beta: self.beta,
            h: self.fields.clone(),
            triangles: self
                .triangles
                .iter()
                .map(|t| TriangleFile {
                    v: t.vertices,
                    coupling: t.coupling,
                })
                .collect(),
        }
    }
}

/// On-disk JSON form of an instance:
/// `{ "beta": 1.0, "h": [...], "triangles": [{"v": [i,j,k], "J": 1.0}, ...] }`.
///
/// Unknown fields are rejected; `beta` defaults to 1 when absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub h: Vec<f64>,
    pub triangles: Vec<TriangleFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleFile {
    pub v: [usize; 3],
    #[serde(rename = "J")]
    pub coupling: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance, ModelError> {
        Instance::new(
            self.h.clone(),
            self.triangles.iter().map(|t| (t.v, t.coupling)).collect(),
            self.beta,
        )
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = ModelError;

    fn try_from(file: InstanceFile) -> Result<Self, Self::Error> {
        file.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_triangle(j: f64, h: f64) -> Instance {
        Instance::new(vec![h; 3], vec![([0, 1, 2], j)], 1.0).unwrap()
    }

    #[test]
    fn theta_is_tanh_of_coupling() {
        let inst = single_triangle(1.0, 0.0);
        assert!((inst.triangle(0).theta - 1.0_f64.tanh()).abs() < 1e-15);
        assert!((inst.triangle(0).theta - 0.761594).abs() < 1e-6);
    }

    #[test]
    fn isolated_vertex_instance() {
        let inst = Instance::new(vec![0.7], vec![], 1.0).unwrap();
        assert_eq!(inst.n_vertices(), 1);
        assert_eq!(inst.hyper_degree(0).unwrap(), 0);
        assert!(inst.incident(0).is_empty());
    }

    #[test]
    fn repeated_vertex_rejected() {
        let err = Instance::new(vec![0.0; 2], vec![([0, 0, 1], 1.0)], 1.0).unwrap_err();
        assert_eq!(err, ModelError::RepeatedVertex(0, 0, 1));
    }

    #[test]
    fn duplicate_triangle_rejected() {
        let err = Instance::new(
            vec![0.0; 4],
            vec![([0, 1, 2], 1.0), ([2, 0, 1], 0.5)],
            1.0,
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateTriangle(0, 1, 2));
    }

    #[test]
    fn out_of_range_vertex_rejected() {
        let err = Instance::new(vec![0.0; 3], vec![([0, 1, 3], 1.0)], 1.0).unwrap_err();
        assert!(matches!(err, ModelError::VertexOutOfRange { vertex: 3, .. }));
    }

    #[test]
    fn non_positive_beta_rejected() {
        assert!(Instance::new(vec![0.0], vec![], 0.0).is_err());
        assert!(Instance::new(vec![0.0], vec![], -1.0).is_err());
        assert!(Instance::new(vec![0.0], vec![], f64::NAN).is_err());
    }

    #[test]
    fn infinite_coupling_rejected() {
        let err =
            Instance::new(vec![0.0; 3], vec![([0, 1, 2], f64::INFINITY)], 1.0).unwrap_err();
        assert!(matches!(err, ModelError::NonFiniteCoupling(..)));
    }

    #[test]
    fn hyper_degree_counts_incident_triangles() {
        let inst = single_triangle(1.0, 0.0);
        assert_eq!(inst.hyper_degree(0).unwrap(), 1);

        // vertex 0 shared by three triangles
        let inst = Instance::new(
            vec![0.0; 7],
            vec![([0, 1, 2], 1.0), ([0, 3, 4], 1.0), ([0, 5, 6], 1.0)],
            1.0,
        )
        .unwrap();
        assert_eq!(inst.hyper_degree(0).unwrap(), 3);
        assert_eq!(inst.hyper_degree(1).unwrap(), 1);
        assert!(inst.hyper_degree(7).is_err());
    }

    #[test]
    fn ferromagnetic_classification() {
        assert!(single_triangle(1.0, 0.0).is_ferromagnetic());
        assert!(!single_triangle(1.0, -0.1).is_ferromagnetic());
        assert!(!single_triangle(-0.5, 0.0).is_ferromagnetic());
        // J=0, h=0 is the inclusive boundary
        assert!(single_triangle(0.0, 0.0).is_ferromagnetic());
    }

    #[test]
    fn energy_direct_substitution() {
        let inst = single_triangle(1.0, 0.0);
        let ppp = Configuration::new(vec![1, 1, 1]).unwrap();
        let ppm = Configuration::new(vec![1, 1, -1]).unwrap();
        assert_eq!(inst.energy(&ppp).unwrap(), -1.0);
        assert_eq!(inst.energy(&ppm).unwrap(), 1.0);

        let inst = Instance::new(vec![0.5, 0.0, 0.0], vec![], 1.0).unwrap();
        assert_eq!(inst.energy(&ppp).unwrap(), -0.5);
    }

    #[test]
    fn energy_length_mismatch() {
        let inst = single_triangle(1.0, 0.0);
        let short = Configuration::new(vec![1, 1]).unwrap();
        assert!(matches!(
            inst.energy(&short),
            Err(ModelError::ConfigLengthMismatch { .. })
        ));
    }

    #[test]
    fn configuration_validation() {
        assert!(Configuration::new(vec![1, -1, 1]).is_ok());
        assert_eq!(
            Configuration::new(vec![1, 0]).unwrap_err(),
            ModelError::InvalidSpin(1)
        );
    }

    #[test]
    fn file_round_trip_and_unknown_fields() {
        let inst = single_triangle(1.5, 0.25);
        let json = serde_json::to_string(&inst.to_file()).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&json).unwrap();
        let rebuilt = parsed.build().unwrap();
        assert_eq!(inst, rebuilt);

        let bad = r#"{"beta": 1.0, "h": [0.0], "triangles": [], "extra": 1}"#;
        assert!(serde_json::from_str::<InstanceFile>(bad).is_err());

        // beta may be omitted and defaults to 1
        let no_beta = r#"{"h": [0.0], "triangles": []}"#;
        let parsed: InstanceFile = serde_json::from_str(no_beta).unwrap();
        assert_eq!(parsed.beta, 1.0);
    }

    #[test]
    fn triangles_canonicalized_sorted() {
        let inst = Instance::new(
            vec![0.0; 5],
            vec![([4, 2, 3], 1.0), ([2, 1, 0], 0.5)],
            1.0,
        )
        .unwrap();
        assert_eq!(inst.triangle(0).vertices, [0, 1, 2]);
        assert_eq!(inst.triangle(1).vertices, [2, 3, 4]);
    }
}
