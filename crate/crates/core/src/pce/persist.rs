//! JSON surrogate files.
//!
//! Coefficients and recurrence data are written with shortest round-trip
//! float formatting and read back with correctly rounded parsing, so a saved
//! surrogate evaluates bit-identically after loading.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{tensor_index_set, MultiIndex, PCBasis, Surrogate, SurrogateMetadata};
use crate::conformal::{MapSpec, MultivariateMap};
use crate::density::{transform_density, DensitySpec, JointDensity};
use crate::error::{Error, Result};
use crate::orthopoly::{OrthonormalBasis1D, RecurrenceCoefficients};

pub const FORMAT_TAG: &str = "mapc-surrogate";
pub const FORMAT_VERSION: u32 = 1;

/// On-disk layout of a surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateFile {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
    pub degree: usize,
    pub densities: Vec<DensitySpec>,
    pub maps: Vec<MapSpec>,
    /// Recurrence of the orthonormal family for each pullback density.
    pub recurrences: Vec<RecurrenceCoefficients>,
    pub multi_indices: Vec<MultiIndex>,
    pub coefficients_real: Vec<f64>,
    pub coefficients_imag: Vec<f64>,
    pub metadata: SurrogateMetadata,
}

impl SurrogateFile {
    pub fn from_surrogate(s: &Surrogate) -> Self {
        let b = s.basis();
        Self {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            dimension: b.dimension(),
            degree: b.degree(),
            densities: b.input_density().factors().iter().map(|d| d.spec()).collect(),
            maps: b.map().maps().iter().map(|g| g.spec()).collect(),
            recurrences: b.univariate().iter().map(|u| u.recurrence().clone()).collect(),
            multi_indices: b.index_set().to_vec(),
            coefficients_real: s.coefficients().iter().map(|c| c.re).collect(),
            coefficients_imag: s.coefficients().iter().map(|c| c.im).collect(),
            metadata: s.metadata().clone(),
        }
    }

    pub fn into_surrogate(self) -> Result<Surrogate> {
        let invalid = |field: &str, msg: String| Error::Parse(format!("field `{field}`: {msg}"));
        if self.format != FORMAT_TAG {
            return Err(invalid("format", format!("expected {FORMAT_TAG:?}, found {:?}", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(invalid("version", format!("unsupported version {}", self.version)));
        }
        let n = self.dimension;
        if n == 0 {
            return Err(invalid("dimension", "must be at least 1".into()));
        }
        for (field, len) in [
            ("densities", self.densities.len()),
            ("maps", self.maps.len()),
            ("recurrences", self.recurrences.len()),
        ] {
            if len != n {
                return Err(invalid(field, format!("has {len} entries, dimension is {n}")));
            }
        }
        let expected = tensor_index_set(n, self.degree);
        if let Some(pos) = self.multi_indices.iter().position(|m| m.dimension() != n) {
            return Err(invalid(
                "multi_indices",
                format!("entry {pos} has {} components, dimension is {n}", self.multi_indices[pos].dimension()),
            ));
        }
        if self.multi_indices != expected {
            return Err(invalid(
                "multi_indices",
                format!("not the tensor index set of degree {} in {n} dimensions", self.degree),
            ));
        }
        for (field, len) in [
            ("coefficients_real", self.coefficients_real.len()),
            ("coefficients_imag", self.coefficients_imag.len()),
        ] {
            if len != expected.len() {
                return Err(invalid(field, format!("has {len} entries, index set has {}", expected.len())));
            }
        }

        let densities = self
            .densities
            .iter()
            .map(|d| d.build())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| invalid("densities", e.to_string()))?;
        let maps = self
            .maps
            .iter()
            .map(|m| m.build())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| invalid("maps", e.to_string()))?;
        let univariate = densities
            .iter()
            .zip(&maps)
            .zip(self.recurrences)
            .map(|((d, g), r)| {
                let pulled = transform_density(d, g)?;
                let r = RecurrenceCoefficients::new(r.alpha, r.beta)?;
                OrthonormalBasis1D::from_recurrence(pulled, r, self.degree)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| invalid("recurrences", e.to_string()))?;
        let basis = PCBasis::from_parts(
            JointDensity::new(densities)?,
            MultivariateMap::new(maps)?,
            univariate,
            self.degree,
        )?;
        let coefficients = self
            .coefficients_real
            .into_iter()
            .zip(self.coefficients_imag)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        Surrogate::new(basis, coefficients, self.metadata)
    }
}

pub fn to_json(s: &Surrogate) -> Result<String> {
    serde_json::to_string_pretty(&SurrogateFile::from_surrogate(s))
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json(text: &str) -> Result<Surrogate> {
    let file: SurrogateFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("surrogate file: {e}")))?;
    file.into_surrogate()
}

/// Writes `s` as JSON to `path`.
pub fn save(s: &Surrogate, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(s)? + "\n")?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Surrogate> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}
