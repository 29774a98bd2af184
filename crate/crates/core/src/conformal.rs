//! Conformal maps of the reference interval onto itself.
//!
//! Every map is an odd polynomial `g(s) = c1 s + c3 s^3 + ...` normalized so
//! that `g(1) = 1`, strictly increasing on `[-1, 1]`. The sausage map of
//! degree 9 is the normalized degree-9 Taylor polynomial of `arcsin`.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Unnormalized odd coefficients of the degree-9 sausage map.
pub const SAUSAGE9_ODD_COEFFICIENTS: [f64; 5] = [40320.0, 6720.0, 3024.0, 1800.0, 1225.0];
/// Their sum, the normalization constant.
pub const SAUSAGE9_NORMALIZATION: f64 = 53089.0;

const INVERSE_TOLERANCE: f64 = 1e-14;
const INVERSE_MAX_ITERATIONS: usize = 100;
const MONOTONICITY_CHECK_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Identity,
    Sausage9,
    Custom,
}

/// A univariate conformal map `g: [-1, 1] -> [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMap1D {
    kind: MapKind,
    /// Coefficients of s, s^3, s^5, ... as supplied (custom maps only).
    raw: Vec<f64>,
    /// Normalized odd coefficients; `coeffs.iter().sum() == 1`.
    coeffs: Vec<f64>,
}

impl ConformalMap1D {
    pub fn identity() -> Self {
        Self {
            kind: MapKind::Identity,
            raw: vec![1.0],
            coeffs: vec![1.0],
        }
    }

    pub fn sausage9() -> Self {
        Self {
            kind: MapKind::Sausage9,
            raw: SAUSAGE9_ODD_COEFFICIENTS.to_vec(),
            coeffs: SAUSAGE9_ODD_COEFFICIENTS
                .iter()
                .map(|c| c / SAUSAGE9_NORMALIZATION)
                .collect(),
        }
    }

    /// Builds an odd polynomial map from the coefficients of `s, s^3, s^5, ...`
    /// before normalization. The polynomial is scaled so that `g(1) = 1` and
    /// must be strictly increasing on `[-1, 1]`.
    pub fn custom(odd_coefficients: Vec<f64>) -> Result<Self> {
        if odd_coefficients.is_empty() {
            return Err(Error::InvalidMap("no coefficients given".into()));
        }
        if odd_coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("coefficients must be finite".into()));
        }
        let total: f64 = odd_coefficients.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidMap(
                "coefficients sum to zero, g(1) = 1 cannot be enforced".into(),
            ));
        }
        let coeffs: Vec<f64> = odd_coefficients.iter().map(|c| c / total).collect();
        let map = Self {
            kind: MapKind::Custom,
            raw: odd_coefficients,
            coeffs,
        };
        map.check_monotone()?;
        Ok(map)
    }

    fn check_monotone(&self) -> Result<()> {
        // g' is even, so checking [0, 1] covers the interval.
        for i in 0..=MONOTONICITY_CHECK_POINTS {
            let s = i as f64 / MONOTONICITY_CHECK_POINTS as f64;
            let d = self.derivative_unchecked(s);
            if !(d > 0.0) {
                return Err(Error::InvalidMap(format!(
                    "map is not strictly increasing: g'({s}) = {d}"
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn is_identity(&self) -> bool {
        self.kind == MapKind::Identity
    }

    /// Normalized coefficients of `s, s^3, s^5, ...`.
    pub fn odd_coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Polynomial degree of the map.
    pub fn degree(&self) -> usize {
        2 * self.coeffs.len() - 1
    }

    pub fn forward(&self, s: f64) -> Result<f64> {
        check_unit("s", s)?;
        Ok(self.forward_unchecked(s))
    }

    pub(crate) fn forward_unchecked(&self, s: f64) -> f64 {
        if self.is_identity() || s == 1.0 || s == -1.0 {
            return s;
        }
        let s2 = s * s;
        let inner = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s2 + c);
        (s * inner).clamp(-1.0, 1.0)
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        check_unit("s", s)?;
        Ok(self.derivative_unchecked(s))
    }

    pub(crate) fn derivative_unchecked(&self, s: f64) -> f64 {
        if self.is_identity() {
            return 1.0;
        }
        let s2 = s * s;
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * s2 + (2 * k + 1) as f64 * c)
    }

    /// `(1 - g(s)) / (1 - s)`, evaluated without cancellation near `s = 1`.
    ///
    /// Since `g(1) = 1` the quotient is a polynomial whose coefficient of
    /// `s^k` is the sum of the map coefficients of degree above `k`.
    pub(crate) fn endpoint_ratio(&self, s: f64) -> f64 {
        if self.is_identity() {
            return 1.0;
        }
        let degree = self.degree();
        // tail[k] = sum of normalized coefficients of s^j for j > k.
        let mut acc = 0.0;
        let mut tail = 0.0;
        for k in (0..degree).rev() {
            let j = k + 1;
            if j % 2 == 1 {
                tail += self.coeffs[j / 2];
            }
            acc = acc * s + tail;
        }
        acc
    }

    /// Solves `g(s) = y` by Newton's method safeguarded with bisection on the
    /// bracket `[-1, 1]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        check_unit("y", y)?;
        if self.is_identity() || y == 1.0 || y == -1.0 || y == 0.0 {
            return Ok(y);
        }
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let mut s = (y / self.coeffs[0]).clamp(lo, hi);
        for _ in 0..INVERSE_MAX_ITERATIONS {
            let r = self.forward_unchecked(s) - y;
            if r == 0.0 {
                return Ok(s);
            }
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = self.derivative_unchecked(s);
            let mut next = s - r / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - s).abs();
            s = next;
            if step <= 2.0 * f64::EPSILON * s.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON
            {
                let residual = (self.forward_unchecked(s) - y).abs();
                if residual <= INVERSE_TOLERANCE {
                    return Ok(s);
                }
                return Err(Error::Numerical(format!(
                    "map inverse stalled at s = {s} with residual {residual:e} for y = {y}"
                )));
            }
        }
        Err(Error::Numerical(format!(
            "map inverse did not converge in {INVERSE_MAX_ITERATIONS} iterations for y = {y}"
        )))
    }

    /// The composition `self ∘ inner`, itself an odd increasing polynomial map.
    pub fn compose(&self, inner: &ConformalMap1D) -> Result<ConformalMap1D> {
        if self.is_identity() {
            return Ok(inner.clone());
        }
        if inner.is_identity() {
            return Ok(self.clone());
        }
        let outer = self.dense();
        let inner_dense = inner.dense();
        // Horner over polynomial coefficients.
        let mut result = vec![0.0];
        for &c in outer.iter().rev() {
            result = poly_mul(&result, &inner_dense);
            result[0] += c;
        }
        let odd: Vec<f64> = result.iter().skip(1).step_by(2).copied().collect();
        ConformalMap1D::custom(odd)
    }

    fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.degree() + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[2 * k + 1] = c;
        }
        out
    }

    pub fn spec(&self) -> MapSpec {
        let map = match self.kind {
            MapKind::Identity => MapChoice::Named(NamedMap::Identity),
            MapKind::Sausage9 => MapChoice::Named(NamedMap::Sausage9),
            MapKind::Custom => MapChoice::Custom {
                odd_coefficients: self.raw.clone(),
            },
        };
        MapSpec { map }
    }

    /// Short label used in reports: `identity`, `sausage9` or `custom`.
    pub fn label(&self) -> &'static str {
        match self.kind {
            MapKind::Identity => "identity",
            MapKind::Sausage9 => "sausage9",
            MapKind::Custom => "custom",
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Serialized form of a map: `"identity"`, `"sausage9"` or
/// `{"odd_coefficients":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapSpec {
    pub map: MapChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapChoice {
    Named(NamedMap),
    Custom { odd_coefficients: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedMap {
    Identity,
    Sausage9,
}

impl MapSpec {
    pub fn identity() -> Self {
        MapSpec {
            map: MapChoice::Named(NamedMap::Identity),
        }
    }

    pub fn sausage9() -> Self {
        MapSpec {
            map: MapChoice::Named(NamedMap::Sausage9),
        }
    }

    pub fn build(&self) -> Result<ConformalMap1D> {
        match &self.map {
            MapChoice::Named(NamedMap::Identity) => Ok(ConformalMap1D::identity()),
            MapChoice::Named(NamedMap::Sausage9) => Ok(ConformalMap1D::sausage9()),
            MapChoice::Custom { odd_coefficients } => {
                ConformalMap1D::custom(odd_coefficients.clone())
            }
        }
    }
}

impl std::str::FromStr for MapSpec {
    type Err = Error;

    /// Parses `identity`, `sausage9`, or a JSON map specification.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(MapSpec::identity()),
            "sausage9" => Ok(MapSpec::sausage9()),
            other => serde_json::from_str(other)
                .map_err(|e| Error::Parse(format!("map specification {other:?}: {e}"))),
        }
    }
}

/// Coordinate-wise map `g(s) = (g_1(s_1), ..., g_N(s_N))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateMap {
    maps: Vec<ConformalMap1D>,
}

impl MultivariateMap {
    pub fn new(maps: Vec<ConformalMap1D>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Argument("multivariate map needs at least one factor".into()));
        }
        Ok(Self { maps })
    }

    /// The same univariate map in every coordinate.
    pub fn uniform(map: ConformalMap1D, dimension: usize) -> Result<Self> {
        Self::new(vec![map; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[ConformalMap1D] {
        &self.maps
    }

    pub fn forward(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.check_len(s.len())?;
        self.maps.iter().zip(s).map(|(g, &x)| g.forward(x)).collect()
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        self.maps.iter().zip(y).map(|(g, &x)| g.inverse(x)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.maps.len() {
            return Err(Error::Argument(format!(
                "point has {len} coordinates, map has {}",
                self.maps.len()
            )));
        }
        Ok(())
    }
}
