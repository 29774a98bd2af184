//! Moments, Sobol indices and cross-validation errors of surrogates.
//!
//! Complex coefficients enter second moments through `|s_m|^2`, so the
//! variance of a complex quantity is the sum of the variances of its real
//! and imaginary parts.

use std::io::Write;

use num_complex::Complex64;

use crate::density::JointDensity;
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::parallel::Execution;
use crate::pce::Surrogate;
use crate::quadrature::fmt_f64;

/// `E[Q_p] = s_0`.
pub fn mean(s: &Surrogate) -> Complex64 {
    // the zero multi-index is first in the tensor index set
    s.coefficients()[0]
}

/// `sum_{m != 0} |s_m|^2`.
pub fn variance(s: &Surrogate) -> f64 {
    s.coefficients()[1..].iter().map(|c| c.norm_sqr()).sum()
}

pub fn std_dev(s: &Surrogate) -> f64 {
    variance(s).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolIndex {
    pub main: f64,
    pub total: f64,
}

/// Main- and total-effect indices for every input dimension.
pub fn sobol_indices(s: &Surrogate) -> Result<Vec<SobolIndex>> {
    let n = s.dimension();
    let mut main = vec![0.0; n];
    let mut total = vec![0.0; n];
    let mut v = 0.0;
    for (m, c) in s.basis().index_set().iter().zip(s.coefficients()) {
        if m.is_zero() {
            continue;
        }
        let p = c.norm_sqr();
        v += p;
        let mut active = m.0.iter().enumerate().filter(|(_, &k)| k != 0);
        let (first, _) = active.next().expect("nonzero multi-index");
        let single = active.next().is_none();
        for (j, &k) in m.0.iter().enumerate() {
            if k != 0 {
                total[j] += p;
            }
        }
        if single {
            main[first] += p;
        }
    }
    if !(v > 0.0) {
        return Err(Error::UndefinedIndices);
    }
    Ok(main
        .into_iter()
        .zip(total)
        .map(|(a, t)| SobolIndex {
            main: (a / v).clamp(0.0, 1.0),
            total: (t / v).clamp(0.0, 1.0),
        })
        .collect())
}

/// Seeded input samples with the model evaluated at each of them. Reusable
/// across surrogates of the same model.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSet {
    pub samples: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

impl CvSet {
    pub fn draw(
        model: &dyn ParametricModel,
        density: &JointDensity,
        n: usize,
        seed: u64,
        execution: Execution,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("cross-validation needs at least one sample".into()));
        }
        if model.dimension() != density.dimension() {
            return Err(Error::Argument(format!(
                "model has {} parameters, density has {}",
                model.dimension(),
                density.dimension()
            )));
        }
        let samples = density.sample(n, seed)?;
        let values = execution.try_map_indexed(n, |i| {
            let y = &samples[i];
            let fail = |message: String| Error::Model {
                site: "cross-validation sample",
                index: i,
                point: y.clone(),
                message,
            };
            let v = model.evaluate(y).map_err(|e| fail(e.to_string()))?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(fail(format!("non-finite value {v}")));
            }
            Ok(v)
        })?;
        Ok(Self { samples, values })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(1/n) sum_i |Q_p(y_i) - Q(y_i)|^2`.
    pub fn error(&self, s: &Surrogate) -> Result<f64> {
        let mut acc = 0.0;
        for (y, q) in self.samples.iter().zip(&self.values) {
            acc += (s.evaluate(y)? - q).norm_sqr();
        }
        Ok(acc / self.len() as f64)
    }
}

/// Mean squared surrogate error over `n` seeded draws from the input density.
pub fn cross_validation_error(
    s: &Surrogate,
    model: &dyn ParametricModel,
    n: usize,
    seed: u64,
) -> Result<f64> {
    CvSet::draw(model, s.basis().input_density(), n, seed, Execution::default())?.error(s)
}

/// Root of [`cross_validation_error`].
pub fn cross_validation_rms(
    s: &Surrogate,
    model: &dyn ParametricModel,
    n: usize,
    seed: u64,
) -> Result<f64> {
    cross_validation_error(s, model, n, seed).map(f64::sqrt)
}

/// `statistic,value_real,value_imag` rows for mean, variance and standard
/// deviation.
pub fn write_moments_csv<W: Write>(s: &Surrogate, mut out: W) -> Result<()> {
    let m = mean(s);
    writeln!(out, "statistic,value_real,value_imag")?;
    writeln!(out, "mean,{},{}", fmt_f64(m.re), fmt_f64(m.im))?;
    writeln!(out, "variance,{},{}", fmt_f64(variance(s)), fmt_f64(0.0))?;
    writeln!(out, "std,{},{}", fmt_f64(std_dev(s)), fmt_f64(0.0))?;
    Ok(())
}

/// `dimension,S_main,S_total` rows, dimensions numbered from 1.
pub fn write_sobol_csv<W: Write>(indices: &[SobolIndex], mut out: W) -> Result<()> {
    writeln!(out, "dimension,S_main,S_total")?;
    for (j, ix) in indices.iter().enumerate() {
        writeln!(out, "{},{},{}", j + 1, fmt_f64(ix.main), fmt_f64(ix.total))?;
    }
    Ok(())
}
