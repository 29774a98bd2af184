//! (Mapped) polynomial chaos bases, pseudo-spectral projection and surrogate
//! evaluation.
//!
//! The mapped basis function for multi-index `m` is
//! `Phi_m(y) = prod_j Psi~_{m_j}(g_j^-1(y_j))`, where `Psi~_k` are orthonormal
//! with respect to the pullback density `rho~_j = rho_j(g_j) g_j'`. With the
//! identity map this is the classical gPC basis. Coefficients
//! `s_m = E[Phi_m Q]` are computed with the mapped tensor Gauss rule; at a
//! mapped node `y = g(s)` the basis value is `Psi~_m(s)`, so the preimages
//! are used directly and no inversion happens during projection.

mod persist;

use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::MultivariateMap;
use crate::density::JointDensity;
use crate::error::{check_unit, Error, Result};
use crate::models::ParametricModel;
use crate::orthopoly::OrthonormalBasis1D;
use crate::parallel::Execution;
use crate::quadrature::{mapped_rule, tensor_rule, TensorQuadrature};

pub use persist::{load, save, SurrogateFile};

/// Polynomial degrees per input dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dimension: usize) -> Self {
        MultiIndex(vec![0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    /// `max_j m_j`.
    pub fn max_norm(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// All multi-indices with `max_j m_j <= degree`, lexicographic with the last
/// dimension varying fastest.
pub fn tensor_index_set(dimension: usize, degree: usize) -> Vec<MultiIndex> {
    let count = (degree + 1).pow(dimension as u32);
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; dimension];
    for _ in 0..count {
        out.push(MultiIndex(idx.clone()));
        for j in (0..dimension).rev() {
            idx[j] += 1;
            if idx[j] <= degree {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Tensor-product (mapped) polynomial chaos basis of maximum degree `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PCBasis {
    input: JointDensity,
    map: MultivariateMap,
    univariate: Vec<OrthonormalBasis1D>,
    degree: usize,
    index_set: Vec<MultiIndex>,
}

/// Builds the basis for input density `d`, coordinate map `g` and maximum
/// degree `p`.
pub fn build_basis(d: &JointDensity, g: &MultivariateMap, p: usize) -> Result<PCBasis> {
    let pulled = d.transform(g)?;
    let univariate = pulled
        .factors()
        .iter()
        .map(|f| OrthonormalBasis1D::new(f.clone(), p))
        .collect::<Result<Vec<_>>>()?;
    PCBasis::from_parts(d.clone(), g.clone(), univariate, p)
}

impl PCBasis {
    pub(crate) fn from_parts(
        input: JointDensity,
        map: MultivariateMap,
        univariate: Vec<OrthonormalBasis1D>,
        degree: usize,
    ) -> Result<Self> {
        let n = input.dimension();
        if map.dimension() != n || univariate.len() != n {
            return Err(Error::Argument(format!(
                "dimension mismatch: density {n}, map {}, univariate bases {}",
                map.dimension(),
                univariate.len()
            )));
        }
        Ok(Self {
            index_set: tensor_index_set(n, degree),
            input,
            map,
            univariate,
            degree,
        })
    }

    pub fn dimension(&self) -> usize {
        self.input.dimension()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn input_density(&self) -> &JointDensity {
        &self.input
    }

    pub fn map(&self) -> &MultivariateMap {
        &self.map
    }

    /// Orthonormal families for the pullback densities, one per dimension.
    pub fn univariate(&self) -> &[OrthonormalBasis1D] {
        &self.univariate
    }

    pub fn index_set(&self) -> &[MultiIndex] {
        &self.index_set
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Position of `m` in the index set.
    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        if m.dimension() != self.dimension() || m.max_norm() > self.degree {
            return None;
        }
        Some(m.0.iter().fold(0, |acc, &k| acc * (self.degree + 1) + k))
    }

    /// `Psi~_k(g_j^-1(y_j))` for all `j` and `k <= degree`, row-major by dimension.
    fn tables_at(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dimension() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, basis has {}",
                y.len(),
                self.dimension()
            )));
        }
        let width = self.degree + 1;
        let mut table = vec![0.0; width * y.len()];
        for (j, (&v, g)) in y.iter().zip(self.map.maps()).enumerate() {
            check_unit("y", v)?;
            let s = g.inverse(v)?;
            self.univariate[j].fill(s, &mut table[j * width..(j + 1) * width]);
        }
        Ok(table)
    }

    /// `Phi_m(y)`.
    pub fn evaluate_basis_function(&self, m: &MultiIndex, y: &[f64]) -> Result<f64> {
        if self.position(m).is_none() {
            return Err(Error::Range {
                requested: m.max_norm(),
                max: self.degree,
            });
        }
        let table = self.tables_at(y)?;
        let width = self.degree + 1;
        Ok(m.0
            .iter()
            .enumerate()
            .map(|(j, &k)| table[j * width + k])
            .product())
    }

    /// Mapped tensor Gauss grid with `nodes_per_dim` nodes in each dimension.
    pub fn projection_grid(&self, nodes_per_dim: usize) -> Result<TensorQuadrature> {
        let rules = self
            .input
            .factors()
            .iter()
            .zip(self.map.maps())
            .map(|(d, g)| mapped_rule(d, g, nodes_per_dim))
            .collect::<Result<Vec<_>>>()?;
        tensor_rule(rules)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateMetadata {
    pub model: String,
    pub quad_nodes_per_dim: usize,
    pub model_evaluations: usize,
    /// Seconds since the Unix epoch.
    pub built_at: u64,
}

/// Coefficients of a (mapped) polynomial chaos expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    basis: PCBasis,
    coefficients: Vec<Complex64>,
    metadata: SurrogateMetadata,
}

impl Surrogate {
    pub fn new(basis: PCBasis, coefficients: Vec<Complex64>, metadata: SurrogateMetadata) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::Argument(format!(
                "{} coefficients for an index set of size {}",
                coefficients.len(),
                basis.len()
            )));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numerical("surrogate coefficients must be finite".into()));
        }
        Ok(Self {
            basis,
            coefficients,
            metadata,
        })
    }

    pub fn basis(&self) -> &PCBasis {
        &self.basis
    }

    /// Coefficients in index-set order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, m: &MultiIndex) -> Option<Complex64> {
        self.basis.position(m).map(|i| self.coefficients[i])
    }

    pub fn metadata(&self) -> &SurrogateMetadata {
        &self.metadata
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// `Q_p(y) = sum_m s_m Phi_m(y)`.
    pub fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        let table = self.basis.tables_at(y)?;
        let width = self.basis.degree + 1;
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in self.basis.index_set.iter().zip(&self.coefficients) {
            let phi: f64 = m
                .0
                .iter()
                .enumerate()
                .map(|(j, &k)| table[j * width + k])
                .product();
            acc += c * phi;
        }
        Ok(acc)
    }

    /// Per maximum-degree level `w = 0..=p`, the largest `|s_m|^2` with
    /// `max_j m_j = w`.
    pub fn coefficient_decay(&self) -> Vec<(usize, f64)> {
        let mut levels = vec![0.0_f64; self.basis.degree + 1];
        for (m, c) in self.basis.index_set.iter().zip(&self.coefficients) {
            let w = m.max_norm();
            levels[w] = levels[w].max(c.norm_sqr());
        }
        levels.into_iter().enumerate().collect()
    }
}

/// Free function form of [`Surrogate::coefficient_decay`].
pub fn coefficient_decay(s: &Surrogate) -> Vec<(usize, f64)> {
    s.coefficient_decay()
}

/// Default projection rule size: `p + 1` nodes per dimension.
pub fn default_nodes_per_dim(degree: usize) -> usize {
    degree + 1
}

/// Pseudo-spectral projection with the default execution policy.
pub fn project(
    model: &dyn ParametricModel,
    basis: &PCBasis,
    nodes_per_dim: usize,
) -> Result<Surrogate> {
    project_with(model, basis, nodes_per_dim, Execution::default())
}

/// Pseudo-spectral projection `s_m = sum_i Phi_m(y^(i)) Q(y^(i)) w^(i)` on the
/// mapped tensor grid. The model is evaluated exactly once per node.
pub fn project_with(
    model: &dyn ParametricModel,
    basis: &PCBasis,
    nodes_per_dim: usize,
    execution: Execution,
) -> Result<Surrogate> {
    if model.dimension() != basis.dimension() {
        return Err(Error::Argument(format!(
            "model {} has {} parameters, basis has {}",
            model.label(),
            model.dimension(),
            basis.dimension()
        )));
    }
    if nodes_per_dim == 0 {
        return Err(Error::Argument("projection needs at least one node per dimension".into()));
    }
    let grid = basis.projection_grid(nodes_per_dim)?;
    let values = evaluate_on_grid(model, &grid, execution)?;
    let coefficients = assemble_coefficients(basis, &grid, &values, execution);
    let metadata = SurrogateMetadata {
        model: model.label(),
        quad_nodes_per_dim: nodes_per_dim,
        model_evaluations: grid.len(),
        built_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    Surrogate::new(basis.clone(), coefficients, metadata)
}

/// Model values at every grid node, in grid order.
pub fn evaluate_on_grid(
    model: &dyn ParametricModel,
    grid: &TensorQuadrature,
    execution: Execution,
) -> Result<Vec<Complex64>> {
    execution.try_map_indexed(grid.len(), |i| {
        let y = grid.node(i);
        let fail = |message: String| Error::Model {
            site: "projection node",
            index: i,
            point: y.to_vec(),
            message,
        };
        let v = model.evaluate(y).map_err(|e| fail(e.to_string()))?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(fail(format!("non-finite value {v}")));
        }
        Ok(v)
    })
}

/// Projection of precomputed node values onto the basis.
pub fn assemble_coefficients(
    basis: &PCBasis,
    grid: &TensorQuadrature,
    values: &[Complex64],
    execution: Execution,
) -> Vec<Complex64> {
    let n = basis.dimension();
    let width = basis.degree + 1;
    // tables[j][i * width + k] = Psi~_k(s_i) on factor rule j
    let tables: Vec<Vec<f64>> = grid
        .factor_rules()
        .iter()
        .zip(&basis.univariate)
        .map(|(rule, b)| {
            let mut t = vec![0.0; rule.len() * width];
            for (i, &s) in rule.reference_nodes.iter().enumerate() {
                b.fill(s, &mut t[i * width..(i + 1) * width]);
            }
            t
        })
        .collect();
    let factor_idx: Vec<usize> = (0..grid.len()).flat_map(|i| grid.factor_indices(i)).collect();
    let weighted: Vec<Complex64> = values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v * w)
        .collect();

    execution.map_indexed(basis.len(), |k| {
        let m = &basis.index_set[k].0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, wq) in weighted.iter().enumerate() {
            let idx = &factor_idx[i * n..(i + 1) * n];
            let mut phi = 1.0;
            for j in 0..n {
                phi *= tables[j][idx[j] * width + m[j]];
            }
            acc += wq * phi;
        }
        acc
    })
}
