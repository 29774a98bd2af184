//! Probability densities on the reference interval `[-1, 1]` and their
//! products for independent inputs.
//!
//! Beta densities follow `rho(y) ∝ (1 - y)^(alpha - 1) (1 + y)^(beta - 1)`.
//! The pullback of a density through a conformal map `g` is
//! `rho~(s) = rho(g(s)) g'(s)`, again a probability density on `[-1, 1]`.
//!
//! Sampling uses `ChaCha8Rng` seeded with `seed_from_u64`; beta variates are
//! drawn by `rand_distr::Beta`. Draws are taken sample by sample, coordinate
//! by coordinate, so a seed fixes the whole sample sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::conformal::{ConformalMap1D, MultivariateMap};
use crate::error::{check_unit, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    Uniform,
    Beta { alpha: f64, beta: f64 },
    Transformed {
        base: Box<UnivariateDensity>,
        map: ConformalMap1D,
    },
}

/// A probability density supported on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateDensity {
    kind: DensityKind,
    /// Multiplier of the Jacobi factor `(1 - y)^a (1 + y)^b` of the base density.
    norm: f64,
}

impl UnivariateDensity {
    pub fn uniform() -> Self {
        Self {
            kind: DensityKind::Uniform,
            norm: 0.5,
        }
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidDensity(format!(
                "beta shape parameters must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        // integral of (1-y)^(alpha-1) (1+y)^(beta-1) over [-1,1] is 2^(alpha+beta-1) B(alpha, beta)
        let log_mass = (alpha + beta - 1.0) * std::f64::consts::LN_2 + ln_beta(alpha, beta);
        Ok(Self {
            kind: DensityKind::Beta { alpha, beta },
            norm: (-log_mass).exp(),
        })
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// The untransformed density underneath any number of maps.
    pub fn base(&self) -> &UnivariateDensity {
        match &self.kind {
            DensityKind::Transformed { base, .. } => base,
            _ => self,
        }
    }

    /// The map of a transformed density, identity otherwise.
    pub fn map(&self) -> ConformalMap1D {
        match &self.kind {
            DensityKind::Transformed { map, .. } => map.clone(),
            _ => ConformalMap1D::identity(),
        }
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        check_unit("y", y)?;
        Ok(self.pdf_unchecked(y))
    }

    pub(crate) fn pdf_unchecked(&self, y: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 0.5,
            DensityKind::Beta { alpha, beta } => {
                self.norm * (1.0 - y).powf(alpha - 1.0) * (1.0 + y).powf(beta - 1.0)
            }
            DensityKind::Transformed { base, map } => {
                base.pdf_unchecked(map.forward_unchecked(y)) * map.derivative_unchecked(y)
            }
        }
    }

    /// Exponents `(a, b)` of the endpoint factor `(1 - y)^a (1 + y)^b`.
    ///
    /// Conformal maps fix the endpoints with positive slope, so a transformed
    /// density keeps the exponents of its base.
    pub fn endpoint_exponents(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::Uniform => (0.0, 0.0),
            DensityKind::Beta { alpha, beta } => (alpha - 1.0, beta - 1.0),
            DensityKind::Transformed { base, .. } => base.endpoint_exponents(),
        }
    }

    /// `pdf(y) / ((1 - y)^a (1 + y)^b)`, a smooth positive function on `[-1, 1]`.
    pub(crate) fn smooth_factor(&self, y: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform | DensityKind::Beta { .. } => self.norm,
            DensityKind::Transformed { base, map } => {
                let (a, b) = base.endpoint_exponents();
                let mut v = base.norm * map.derivative_unchecked(y);
                if a != 0.0 {
                    v *= map.endpoint_ratio(y).powf(a);
                }
                if b != 0.0 {
                    // 1 + g(y) = 1 - g(-y) because g is odd
                    v *= map.endpoint_ratio(-y).powf(b);
                }
                v
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            DensityKind::Uniform => true,
            DensityKind::Beta { alpha, beta } => alpha == beta,
            DensityKind::Transformed { base, .. } => base.is_symmetric(),
        }
    }

    /// Whether the orthonormal recurrence is known in closed form (Jacobi family).
    pub fn is_classical(&self) -> bool {
        !matches!(self.kind, DensityKind::Transformed { .. })
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            DensityKind::Uniform => "uniform".to_string(),
            DensityKind::Beta { alpha, beta } => format!("beta({alpha},{beta})"),
            DensityKind::Transformed { base, map } => {
                format!("transformed({},{})", base.describe(), map.label())
            }
        }
    }

    pub fn spec(&self) -> DensitySpec {
        match &self.base().kind {
            DensityKind::Beta { alpha, beta } => DensitySpec::Beta {
                alpha: *alpha,
                beta: *beta,
            },
            _ => DensitySpec::Uniform,
        }
    }

    fn sample_one<R: Rng>(&self, rng: &mut R, beta_dist: Option<&Beta<f64>>) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 2.0 * rng.random::<f64>() - 1.0,
            DensityKind::Beta { .. } => {
                let x = beta_dist.expect("beta sampler").sample(rng);
                2.0 * x - 1.0
            }
            DensityKind::Transformed { base, map } => {
                let y = base.sample_one(rng, beta_dist);
                // S = g^-1(Y) has density rho(g(s)) g'(s)
                map.inverse(y).expect("sampled value lies in [-1, 1]")
            }
        }
    }

    fn beta_sampler(&self) -> Result<Option<Beta<f64>>> {
        match &self.base().kind {
            // y = 2x - 1 with x ~ Beta(beta, alpha) gives (1+y)^(beta-1) (1-y)^(alpha-1)
            DensityKind::Beta { alpha, beta } => Beta::new(*beta, *alpha)
                .map(Some)
                .map_err(|e| Error::InvalidDensity(e.to_string())),
            _ => Ok(None),
        }
    }
}

/// Pullback `rho~(s) = rho(g(s)) g'(s)` of `d` through `g`.
///
/// The identity map returns the input unchanged; transforming an already
/// transformed density composes the maps.
pub fn transform_density(d: &UnivariateDensity, g: &ConformalMap1D) -> Result<UnivariateDensity> {
    if g.is_identity() {
        return Ok(d.clone());
    }
    let (base, map) = match &d.kind {
        DensityKind::Transformed { base, map } => ((**base).clone(), map.compose(g)?),
        _ => (d.clone(), g.clone()),
    };
    Ok(UnivariateDensity {
        norm: base.norm,
        kind: DensityKind::Transformed {
            base: Box::new(base),
            map,
        },
    })
}

/// Product density of independent inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensity {
    factors: Vec<UnivariateDensity>,
}

impl JointDensity {
    pub fn new(factors: Vec<UnivariateDensity>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Argument("joint density needs at least one factor".into()));
        }
        Ok(Self { factors })
    }

    pub fn iid(factor: UnivariateDensity, dimension: usize) -> Result<Self> {
        Self::new(vec![factor; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[UnivariateDensity] {
        &self.factors
    }

    pub fn pdf(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.factors.len() {
            return Err(Error::Argument(format!(
                "point has {} coordinates, density has {}",
                y.len(),
                self.factors.len()
            )));
        }
        self.factors
            .iter()
            .zip(y)
            .try_fold(1.0, |acc, (f, &v)| Ok(acc * f.pdf(v)?))
    }

    /// Factor-wise pullback through a coordinate-wise map.
    pub fn transform(&self, g: &MultivariateMap) -> Result<JointDensity> {
        if g.dimension() != self.dimension() {
            return Err(Error::Argument(format!(
                "map dimension {} does not match density dimension {}",
                g.dimension(),
                self.dimension()
            )));
        }
        let factors = self
            .factors
            .iter()
            .zip(g.maps())
            .map(|(d, m)| transform_density(d, m))
            .collect::<Result<Vec<_>>>()?;
        JointDensity::new(factors)
    }

    /// `n` independent draws, reproducible for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::Argument("sample count must be at least 1".into()));
        }
        let samplers = self
            .factors
            .iter()
            .map(|f| f.beta_sampler())
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                self.factors
                    .iter()
                    .zip(&samplers)
                    .map(|(f, b)| f.sample_one(&mut rng, b.as_ref()))
                    .collect()
            })
            .collect())
    }
}

/// Serialized density: `{"kind":"uniform"}` or `{"kind":"beta","alpha":4,"beta":4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl DensitySpec {
    pub fn build(&self) -> Result<UnivariateDensity> {
        match *self {
            DensitySpec::Uniform => Ok(UnivariateDensity::uniform()),
            DensitySpec::Beta { alpha, beta } => UnivariateDensity::beta(alpha, beta),
        }
    }
}
