//! Gauss rules for a density, mapped Gauss rules and their tensor products.
//!
//! A mapped rule for density `rho` and map `g` is the Gauss rule of the
//! pullback density `rho~ = rho(g) g'`, with nodes pushed forward through `g`
//! and weights kept: `y^(i) = g(s^(i))`, `w^(i) = w~^(i)`. Then
//! `sum_i w^(i) f(y^(i))` approximates `∫ f rho dy`, exactly whenever `f ∘ g`
//! is a polynomial of degree `<= 2n - 1`.

use std::io::Write;

use crate::conformal::ConformalMap1D;
use crate::density::{transform_density, UnivariateDensity};
use crate::error::{Error, Result};
use crate::orthopoly::{golub_welsch, recurrence};

/// A univariate rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule1D {
    /// Nodes in the input variable `y`, ascending.
    pub nodes: Vec<f64>,
    /// Preimages `s = g^-1(y)` of the nodes; equal to `nodes` for unmapped rules.
    pub reference_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub density_tag: String,
    pub mapped: bool,
}

impl QuadratureRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, w)| w * f(y)).sum()
    }
}

/// The `n`-node Gauss rule of `d`, exact for polynomials of degree `2n - 1`.
pub fn gauss_rule(d: &UnivariateDensity, n: usize) -> Result<QuadratureRule1D> {
    if n == 0 {
        return Err(Error::Argument("a Gauss rule needs at least one node".into()));
    }
    let r = recurrence(d, n - 1)?;
    let (nodes, weights) = golub_welsch(&r, n)?;
    Ok(QuadratureRule1D {
        reference_nodes: nodes.clone(),
        nodes,
        weights,
        density_tag: d.describe(),
        mapped: false,
    })
}

/// Gauss rule of the pullback of `d` through `g`, with nodes mapped by `g`.
///
/// The identity map takes the same path as [`gauss_rule`] and returns a
/// bit-identical rule.
pub fn mapped_rule(d: &UnivariateDensity, g: &ConformalMap1D, n: usize) -> Result<QuadratureRule1D> {
    if g.is_identity() {
        return gauss_rule(d, n);
    }
    let pulled = transform_density(d, g)?;
    let rule = gauss_rule(&pulled, n)?;
    let nodes = rule
        .nodes
        .iter()
        .map(|&s| g.forward(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureRule1D {
        nodes,
        reference_nodes: rule.nodes,
        weights: rule.weights,
        density_tag: format!("{} mapped by {}", d.describe(), g.label()),
        mapped: true,
    })
}

/// Tensor product of univariate rules, flattened lexicographically with the
/// last dimension varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorQuadrature {
    factor_rules: Vec<QuadratureRule1D>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorQuadrature {
    pub fn dimension(&self) -> usize {
        self.factor_rules.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn factor_rules(&self) -> &[QuadratureRule1D] {
        &self.factor_rules
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.dimension();
        &self.nodes[i * n..(i + 1) * n]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks(self.dimension())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-dimension node indices of flat node `i`.
    pub fn factor_indices(&self, i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dimension()];
        let mut rest = i;
        for (j, rule) in self.factor_rules.iter().enumerate().rev() {
            out[j] = rest % rule.len();
            rest /= rule.len();
        }
        out
    }

    /// Writes `index,y1,...,yN,weight` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("index".to_string())
            .chain((1..=self.dimension()).map(|j| format!("y{j}")))
            .chain(std::iter::once("weight".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (i, (y, w)) in self.nodes().zip(&self.weights).enumerate() {
            write!(out, "{i}")?;
            for v in y {
                write!(out, ",{}", fmt_f64(*v))?;
            }
            writeln!(out, ",{}", fmt_f64(*w))?;
        }
        Ok(())
    }
}

/// Tensor product of `rules`.
pub fn tensor_rule(rules: Vec<QuadratureRule1D>) -> Result<TensorQuadrature> {
    if rules.is_empty() {
        return Err(Error::Argument("tensor rule needs at least one factor".into()));
    }
    if rules.iter().any(|r| r.is_empty()) {
        return Err(Error::Argument("tensor rule factor has no nodes".into()));
    }
    let n = rules.len();
    let total: usize = rules.iter().map(|r| r.len()).product();
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut w = 1.0;
        for (j, rule) in rules.iter().enumerate() {
            nodes.push(rule.nodes[idx[j]]);
            w *= rule.weights[idx[j]];
        }
        weights.push(w);
        // odometer, last dimension fastest
        for j in (0..n).rev() {
            idx[j] += 1;
            if idx[j] < rules[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(TensorQuadrature {
        factor_rules: rules,
        nodes,
        weights,
    })
}

/// Decimal form with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
