//! Orthonormal polynomials with respect to a density on `[-1, 1]`, defined by
//! their three-term recurrence, and Gauss rules derived from them.
//!
//! With monic recurrence data `(alpha_k, beta_k)` the orthonormal family
//! satisfies
//!
//! ```text
//! sqrt(beta_{k+1}) p_{k+1}(y) = (y - alpha_k) p_k(y) - sqrt(beta_k) p_{k-1}(y),
//! p_{-1} = 0,  p_0 = 1 / sqrt(beta_0).
//! ```
//!
//! Classical densities (uniform, beta) have closed-form Jacobi recurrences.
//! Any other density, in particular the pullback through a conformal map, is
//! handled by the discretized Stieltjes procedure.

use serde::{Deserialize, Serialize};

use crate::density::UnivariateDensity;
use crate::error::{check_unit, Error, Result};

/// Absolute change of all coefficients below which the Stieltjes
/// discretization counts as converged.
const STIELTJES_TOLERANCE: f64 = 1e-13;
/// Change still accepted when the refinement cap is reached.
const STIELTJES_ACCEPT: f64 = 1e-12;
const STIELTJES_MAX_NODES: usize = 4096;
const QL_MAX_SWEEPS: usize = 60;

/// Monic three-term recurrence coefficients `alpha[0..=K]`, `beta[0..=K]`,
/// with `beta[0]` the total mass of the measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RecurrenceCoefficients {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::Argument(format!(
                "recurrence needs equally long, nonempty alpha/beta (got {} and {})",
                alpha.len(),
                beta.len()
            )));
        }
        if let Some(k) = beta.iter().position(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::Numerical(format!(
                "recurrence coefficient beta[{k}] = {} is not positive",
                beta[k]
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("recurrence coefficient alpha is not finite".into()));
        }
        Ok(Self { alpha, beta })
    }

    /// Highest degree `K` the coefficients describe.
    pub fn max_degree(&self) -> usize {
        self.alpha.len() - 1
    }

    fn truncated(&self, len: usize) -> Self {
        Self {
            alpha: self.alpha[..len].to_vec(),
            beta: self.beta[..len].to_vec(),
        }
    }
}

/// Recurrence of the orthonormal Legendre family for the uniform
/// probability density: `alpha_k = 0`, `beta_k = k^2 / (4k^2 - 1)`.
pub fn legendre_recurrence(max_degree: usize) -> RecurrenceCoefficients {
    let alpha = vec![0.0; max_degree + 1];
    let beta = (0..=max_degree)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                let k = k as f64;
                k * k / (4.0 * k * k - 1.0)
            }
        })
        .collect();
    RecurrenceCoefficients { alpha, beta }
}

/// Recurrence of the Jacobi family for the probability density
/// proportional to `(1 - y)^a (1 + y)^b`, with `a, b > -1`.
pub fn jacobi_recurrence(a: f64, b: f64, max_degree: usize) -> RecurrenceCoefficients {
    let ab = a + b;
    let mut alpha = Vec::with_capacity(max_degree + 1);
    let mut beta = Vec::with_capacity(max_degree + 1);
    for k in 0..=max_degree {
        let kf = k as f64;
        let t = 2.0 * kf + ab;
        let alpha_k = if k == 0 {
            (b - a) / (ab + 2.0)
        } else if a == b {
            0.0
        } else {
            (b * b - a * a) / (t * (t + 2.0))
        };
        let beta_k = match k {
            0 => 1.0,
            1 => 4.0 * (a + 1.0) * (b + 1.0) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0)),
            _ => {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
            }
        };
        alpha.push(alpha_k);
        beta.push(beta_k);
    }
    RecurrenceCoefficients { alpha, beta }
}

/// Closed-form recurrence for classical densities, `None` otherwise.
pub fn classical_recurrence(d: &UnivariateDensity, max_degree: usize) -> Option<RecurrenceCoefficients> {
    if !d.is_classical() {
        return None;
    }
    let (a, b) = d.endpoint_exponents();
    if a == 0.0 && b == 0.0 {
        Some(legendre_recurrence(max_degree))
    } else {
        Some(jacobi_recurrence(a, b, max_degree))
    }
}

/// Recurrence coefficients for `d` up to `max_degree`: closed form for
/// classical densities, discretized Stieltjes otherwise.
pub fn recurrence(d: &UnivariateDensity, max_degree: usize) -> Result<RecurrenceCoefficients> {
    match classical_recurrence(d, max_degree) {
        Some(r) => Ok(r),
        None => stieltjes(d, max_degree),
    }
}

/// Discretized Stieltjes procedure.
///
/// Inner products are evaluated with a Gauss-Jacobi rule carrying the
/// endpoint factor `(1 - s)^a (1 + s)^b` of the density, applied to its
/// smooth remainder. The rule is doubled until every coefficient changes by
/// less than `1e-13`.
pub fn stieltjes(d: &UnivariateDensity, max_degree: usize) -> Result<RecurrenceCoefficients> {
    let mut nodes = (2 * max_degree + 34).next_power_of_two().max(64);
    let mut previous = stieltjes_discrete(d, max_degree, nodes)?;
    loop {
        let next_nodes = nodes * 2;
        let current = stieltjes_discrete(d, max_degree, next_nodes)?;
        let change = max_change(&previous, &current);
        if change < STIELTJES_TOLERANCE {
            return finish_stieltjes(d, current);
        }
        if next_nodes >= STIELTJES_MAX_NODES {
            if change < STIELTJES_ACCEPT {
                return finish_stieltjes(d, current);
            }
            return Err(Error::Numerical(format!(
                "Stieltjes discretization for {} did not converge: change {change:e} with {next_nodes} nodes",
                d.describe()
            )));
        }
        nodes = next_nodes;
        previous = current;
    }
}

fn finish_stieltjes(
    d: &UnivariateDensity,
    mut r: RecurrenceCoefficients,
) -> Result<RecurrenceCoefficients> {
    if d.is_symmetric() {
        // odd moments of a symmetric density vanish
        r.alpha.iter_mut().for_each(|a| *a = 0.0);
    }
    if (r.beta[0] - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "{} integrates to {} instead of 1",
            d.describe(),
            r.beta[0]
        )));
    }
    r.beta[0] = 1.0;
    RecurrenceCoefficients::new(r.alpha, r.beta)
}

fn max_change(a: &RecurrenceCoefficients, b: &RecurrenceCoefficients) -> f64 {
    a.alpha
        .iter()
        .zip(&b.alpha)
        .chain(a.beta.iter().zip(&b.beta))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn stieltjes_discrete(
    d: &UnivariateDensity,
    max_degree: usize,
    n: usize,
) -> Result<RecurrenceCoefficients> {
    // Gauss rule for the base density carries its endpoint factor exactly.
    let jacobi = classical_recurrence(d.base(), n - 1).expect("base densities are classical");
    let (x, wj) = golub_welsch(&jacobi, n)?;
    let base_norm = d.base().smooth_factor(0.0);
    let w: Vec<f64> = x
        .iter()
        .zip(&wj)
        .map(|(&s, &w)| w * d.smooth_factor(s) / base_norm)
        .collect();
    Ok(stieltjes_on_measure(&x, &w, max_degree))
}

/// Orthonormal Stieltjes procedure on the discrete measure `sum w_i delta(x_i)`.
pub fn stieltjes_on_measure(x: &[f64], w: &[f64], max_degree: usize) -> RecurrenceCoefficients {
    let mass: f64 = w.iter().sum();
    let mut alpha = Vec::with_capacity(max_degree + 1);
    let mut beta = Vec::with_capacity(max_degree + 1);
    beta.push(mass);
    let mut p_prev = vec![0.0; x.len()];
    let mut p: Vec<f64> = vec![1.0 / mass.sqrt(); x.len()];
    let mut sqrt_beta = 0.0;
    for k in 0..=max_degree {
        let a_k: f64 = x.iter().zip(w).zip(&p).map(|((x, w), p)| w * x * p * p).sum();
        alpha.push(a_k);
        if k == max_degree {
            break;
        }
        let q: Vec<f64> = x
            .iter()
            .zip(&p)
            .zip(&p_prev)
            .map(|((x, p), pp)| (x - a_k) * p - sqrt_beta * pp)
            .collect();
        let b_next: f64 = w.iter().zip(&q).map(|(w, q)| w * q * q).sum();
        beta.push(b_next);
        sqrt_beta = b_next.sqrt();
        p_prev = p;
        p = q.into_iter().map(|v| v / sqrt_beta).collect();
    }
    RecurrenceCoefficients { alpha, beta }
}

/// Gauss rule with `n` nodes from the symmetric tridiagonal Jacobi matrix.
///
/// Nodes are the eigenvalues, sorted ascending; weights are
/// `beta[0] * v_0^2` with `v_0` the first component of each normalized
/// eigenvector. When every `alpha_k` is exactly zero the rule is symmetrized.
pub fn golub_welsch(r: &RecurrenceCoefficients, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Argument("a Gauss rule needs at least one node".into()));
    }
    if r.alpha.len() < n {
        return Err(Error::Range {
            requested: n - 1,
            max: r.max_degree(),
        });
    }
    let mut diag = r.alpha[..n].to_vec();
    let mut off: Vec<f64> = r.beta[1..n].iter().map(|b| b.sqrt()).collect();
    off.push(0.0);
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first)?;

    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, r.beta[0] * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

    if r.alpha[..n].iter().all(|&a| a == 0.0) {
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
    }
    Ok((nodes, weights))
}

/// Implicit QL iteration with Wilkinson shifts on a symmetric tridiagonal
/// matrix, tracking only the first row of the eigenvector matrix.
///
/// On return `diag` holds the eigenvalues and `z` the first components of the
/// corresponding eigenvectors. `off[i]` couples rows `i` and `i + 1`; the last
/// entry is workspace.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        'restart: loop {
            let mut m = l;
            while m < n - 1 {
                let scale = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if sweeps == QL_MAX_SWEEPS {
                return Err(Error::Numerical(format!(
                    "tridiagonal eigen-solver did not converge for eigenvalue {l} of {n}"
                )));
            }
            sweeps += 1;

            let mut p = diag[l];
            let mut g = (diag[l + 1] - p) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - p + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            p = 0.0;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    continue 'restart;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;

                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Orthonormal polynomial family for one input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis1D {
    density: UnivariateDensity,
    recurrence: RecurrenceCoefficients,
    max_degree: usize,
    sqrt_beta: Vec<f64>,
}

impl OrthonormalBasis1D {
    pub fn new(density: UnivariateDensity, max_degree: usize) -> Result<Self> {
        let r = recurrence(&density, max_degree)?;
        Self::from_recurrence(density, r, max_degree)
    }

    /// Wraps precomputed recurrence coefficients (e.g. read from a file).
    pub fn from_recurrence(
        density: UnivariateDensity,
        recurrence: RecurrenceCoefficients,
        max_degree: usize,
    ) -> Result<Self> {
        if recurrence.max_degree() < max_degree {
            return Err(Error::Range {
                requested: max_degree,
                max: recurrence.max_degree(),
            });
        }
        let recurrence = RecurrenceCoefficients::new(
            recurrence.truncated(max_degree + 1).alpha,
            recurrence.truncated(max_degree + 1).beta,
        )?;
        let sqrt_beta = recurrence.beta.iter().map(|b| b.sqrt()).collect();
        Ok(Self {
            density,
            recurrence,
            max_degree,
            sqrt_beta,
        })
    }

    pub fn density(&self) -> &UnivariateDensity {
        &self.density
    }

    pub fn recurrence(&self) -> &RecurrenceCoefficients {
        &self.recurrence
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Value of the degree-`m` orthonormal polynomial at `y`.
    pub fn evaluate(&self, m: usize, y: f64) -> Result<f64> {
        if m > self.max_degree {
            return Err(Error::Range {
                requested: m,
                max: self.max_degree,
            });
        }
        check_unit("y", y)?;
        let mut out = vec![0.0; m + 1];
        self.fill(y, &mut out);
        Ok(out[m])
    }

    /// Writes `p_0(y), ..., p_{len-1}(y)` into `out`; `out.len()` may not
    /// exceed `max_degree + 1`. No domain check.
    pub(crate) fn fill(&self, y: f64, out: &mut [f64]) {
        let len = out.len();
        debug_assert!(len <= self.max_degree + 1);
        if len == 0 {
            return;
        }
        let a = &self.recurrence.alpha;
        let sb = &self.sqrt_beta;
        out[0] = 1.0 / sb[0];
        if len > 1 {
            out[1] = (y - a[0]) * out[0] / sb[1];
        }
        for k in 1..len.saturating_sub(1) {
            out[k + 1] = ((y - a[k]) * out[k] - sb[k] * out[k - 1]) / sb[k + 1];
        }
    }

    /// All values `p_0(y), ..., p_max(y)`.
    pub fn evaluate_all(&self, y: f64) -> Result<Vec<f64>> {
        check_unit("y", y)?;
        let mut out = vec![0.0; self.max_degree + 1];
        self.fill(y, &mut out);
        Ok(out)
    }
}
