//! Parametric models `Q: [-1, 1]^N -> C` and Bernstein-ellipse utilities.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{fmt_f64, TensorQuadrature};

/// A quantity of interest depending on `N` parameters in `[-1, 1]`.
pub trait ParametricModel: Sync {
    fn dimension(&self) -> usize;

    fn label(&self) -> String;

    fn evaluate(&self, y: &[f64]) -> Result<Complex64>;
}

fn check_point(model: &dyn ParametricModel, y: &[f64]) -> Result<()> {
    if y.len() != model.dimension() {
        return Err(Error::Argument(format!(
            "{} expects {} parameters, got {}",
            model.label(),
            model.dimension(),
            y.len()
        )));
    }
    for &v in y {
        crate::error::check_unit("y", v)?;
    }
    Ok(())
}

/// Which output of the RLC circuit is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RlcQuantity {
    /// `|i|`, real.
    #[default]
    Amplitude,
    /// The complex phasor `i`.
    Current,
}

/// Series RLC circuit driven at angular frequency `omega` with inductance
/// `L(y) = l0 + dl * y`. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlcModel {
    pub omega: f64,
    pub voltage: f64,
    pub capacitance: f64,
    pub resistance: f64,
    pub l0: f64,
    pub dl: f64,
    pub quantity: RlcQuantity,
}

impl RlcModel {
    /// `omega = 1e4 1/s`, `u_e = 1 V`, `C = 10 µF`, `L(y) = 1 mH + 0.25 mH y`.
    pub fn reference(resistance: f64) -> Result<Self> {
        Self::new(1e4, 1.0, 10e-6, resistance, 1e-3, 0.25e-3)
    }

    pub fn new(
        omega: f64,
        voltage: f64,
        capacitance: f64,
        resistance: f64,
        l0: f64,
        dl: f64,
    ) -> Result<Self> {
        if !(resistance > 0.0 && capacitance > 0.0 && omega > 0.0) {
            return Err(Error::Argument(
                "RLC model needs R > 0, C > 0 and omega > 0".into(),
            ));
        }
        if !(l0 - dl.abs() > 0.0) {
            return Err(Error::Argument(format!(
                "inductance L(y) = {l0} + {dl} y must stay positive on [-1, 1]"
            )));
        }
        Ok(Self {
            omega,
            voltage,
            capacitance,
            resistance,
            l0,
            dl,
            quantity: RlcQuantity::Amplitude,
        })
    }

    pub fn with_quantity(mut self, quantity: RlcQuantity) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn inductance(&self, y: f64) -> f64 {
        self.l0 + self.dl * y
    }

    /// Phasor current solving `(-L w^2 + j w R + 1/C) i = j w u_e`.
    pub fn current(&self, y: f64) -> Complex64 {
        let w = self.omega;
        let lhs = Complex64::new(
            -self.inductance(y) * w * w + 1.0 / self.capacitance,
            w * self.resistance,
        );
        Complex64::new(0.0, w * self.voltage) / lhs
    }

    pub fn amplitude(&self, y: f64) -> Result<f64> {
        crate::error::check_unit("y", y)?;
        Ok(self.current(y).norm())
    }

    /// Singularities of `|i(y)|` continued into the complex plane,
    /// `y0 ± j R / (omega dl)` with `y0` the resonance offset.
    pub fn pole_locations(&self) -> Result<(Complex64, Complex64)> {
        if self.dl == 0.0 {
            return Err(Error::NoPole(
                "inductance does not depend on the parameter (dl = 0)".into(),
            ));
        }
        let w = self.omega;
        let center = (1.0 / self.capacitance - self.l0 * w * w) / (self.dl * w * w);
        let half = self.resistance / (w * self.dl);
        Ok((Complex64::new(center, half), Complex64::new(center, -half)))
    }
}

impl ParametricModel for RlcModel {
    fn dimension(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        format!("rlc(R={})", self.resistance)
    }

    fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        check_point(self, y)?;
        let i = self.current(y[0]);
        Ok(match self.quantity {
            RlcQuantity::Amplitude => Complex64::new(i.norm(), 0.0),
            RlcQuantity::Current => i,
        })
    }
}

/// Free function form of [`RlcModel::amplitude`].
pub fn rlc_amplitude(m: &RlcModel, y: f64) -> Result<f64> {
    m.amplitude(y)
}

pub fn rlc_pole_locations(m: &RlcModel) -> Result<(Complex64, Complex64)> {
    m.pole_locations()
}

/// Size `r` (semi-major plus semi-minor axis) of the Bernstein ellipse with
/// foci `±1` passing through `pole`: the larger of `|z ± sqrt(z^2 - 1)|`.
pub fn bernstein_rate(pole: Complex64) -> Result<f64> {
    if pole.im == 0.0 && pole.re.abs() <= 1.0 {
        return Err(Error::Degenerate(format!("{pole}")));
    }
    let root = (pole * pole - 1.0).sqrt();
    let r = (pole + root).norm().max((pole - root).norm());
    if !(r > 1.0) {
        return Err(Error::Degenerate(format!("{pole}")));
    }
    Ok(r)
}

/// `prod_j 1 / (1 + a y_j^2)`, with poles at `±j / sqrt(a)` in every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RungeModel {
    pub a: f64,
    pub dimension: usize,
}

impl RungeModel {
    pub fn new(a: f64, dimension: usize) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Argument(format!("Runge parameter must be positive, got {a}")));
        }
        if dimension == 0 {
            return Err(Error::Argument("Runge model needs at least one parameter".into()));
        }
        Ok(Self { a, dimension })
    }

    pub fn poles(&self) -> (Complex64, Complex64) {
        let b = 1.0 / self.a.sqrt();
        (Complex64::new(0.0, b), Complex64::new(0.0, -b))
    }
}

/// The univariate function `1 / (1 + a y^2)`.
pub fn runge_model(a: f64) -> Result<RungeModel> {
    RungeModel::new(a, 1)
}

impl ParametricModel for RungeModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self) -> String {
        format!("runge(a={},N={})", self.a, self.dimension)
    }

    fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        check_point(self, y)?;
        let v = y.iter().map(|&t| 1.0 / (1.0 + self.a * t * t)).product::<f64>();
        Ok(Complex64::new(v, 0.0))
    }
}

/// Sum of monomials `c * prod_j y_j^{k_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    dimension: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl PolynomialModel {
    pub fn new(dimension: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Argument("polynomial model needs at least one parameter".into()));
        }
        if let Some((_, p)) = terms.iter().find(|(_, p)| p.len() != dimension) {
            return Err(Error::Argument(format!(
                "monomial powers {p:?} do not match dimension {dimension}"
            )));
        }
        Ok(Self { dimension, terms })
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }
}

impl ParametricModel for PolynomialModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self) -> String {
        "polynomial".to_string()
    }

    fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        check_point(self, y)?;
        let v = self
            .terms
            .iter()
            .map(|(c, p)| c * y.iter().zip(p).map(|(v, &k)| v.powi(k as i32)).product::<f64>())
            .sum::<f64>();
        Ok(Complex64::new(v, 0.0))
    }
}

/// Adapter turning a closure into a model.
pub struct FnModel<F> {
    dimension: usize,
    label: String,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    pub fn new(dimension: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dimension,
            label: label.into(),
            f,
        }
    }
}

impl<F> ParametricModel for FnModel<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        check_point(self, y)?;
        Ok((self.f)(y))
    }
}

/// Tolerance for node coordinates read back from a tabulation.
const NODE_MATCH_TOLERANCE: f64 = 1e-10;

/// Model values supplied externally for every node of one projection grid.
///
/// Only the grid's own nodes can be evaluated; any other query fails.
#[derive(Debug, Clone)]
pub struct TabulatedModel {
    dimension: usize,
    label: String,
    values: Vec<Complex64>,
    lookup: HashMap<Vec<u64>, usize>,
}

fn node_key(y: &[f64]) -> Vec<u64> {
    y.iter().map(|v| v.to_bits()).collect()
}

impl TabulatedModel {
    /// Reads `index,y1,...,yN,value_real,value_imag` rows, keyed by the index
    /// column, and checks them against `grid`.
    pub fn from_reader<R: BufRead>(reader: R, grid: &TensorQuadrature, label: &str) -> Result<Self> {
        let n = grid.dimension();
        let mut lines = reader.lines().enumerate();
        let expected_header: Vec<String> = std::iter::once("index".to_string())
            .chain((1..=n).map(|j| format!("y{j}")))
            .chain(["value_real".to_string(), "value_imag".to_string()])
            .collect();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::Ingestion(format!("{label}: file is empty"))),
        };
        let header_fields: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        if header_fields != expected_header {
            return Err(Error::Ingestion(format!(
                "{label}: header {:?} does not match expected {:?}",
                header.trim(),
                expected_header.join(",")
            )));
        }

        let mut values: Vec<Option<Complex64>> = vec![None; grid.len()];
        let mut duplicates = Vec::new();
        let mut out_of_range = Vec::new();
        for (line_no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n + 3 {
                return Err(Error::Ingestion(format!(
                    "{label} line {}: expected {} fields, found {}",
                    line_no + 1,
                    n + 3,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| {
                    Error::Ingestion(format!("{label} line {}: {s:?}: {e}", line_no + 1))
                })
            };
            let index: usize = fields[0].parse().map_err(|e| {
                Error::Ingestion(format!("{label} line {}: index {:?}: {e}", line_no + 1, fields[0]))
            })?;
            if index >= grid.len() {
                out_of_range.push(index);
                continue;
            }
            let node = grid.node(index);
            for (j, f) in fields[1..=n].iter().enumerate() {
                let v = parse(f)?;
                if (v - node[j]).abs() > NODE_MATCH_TOLERANCE {
                    return Err(Error::Ingestion(format!(
                        "{label} line {}: node {index} coordinate y{} = {v} does not match grid value {} (consistency check)",
                        line_no + 1,
                        j + 1,
                        node[j]
                    )));
                }
            }
            let value = Complex64::new(parse(fields[n + 1])?, parse(fields[n + 2])?);
            if values[index].replace(value).is_some() {
                duplicates.push(index);
            }
        }
        let missing: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i)
            .collect();
        if !missing.is_empty() || !duplicates.is_empty() || !out_of_range.is_empty() {
            return Err(Error::Ingestion(format!(
                "{label}: missing indices {missing:?}, duplicate indices {duplicates:?}, out-of-range indices {out_of_range:?}"
            )));
        }
        let lookup = grid.nodes().enumerate().map(|(i, y)| (node_key(y), i)).collect();
        Ok(Self {
            dimension: n,
            label: label.to_string(),
            values: values.into_iter().map(|v| v.expect("checked")).collect(),
            lookup,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Reads a tabulated model from a CSV file matching `grid`.
pub fn tabulated_from_csv(path: &std::path::Path, grid: &TensorQuadrature) -> Result<TabulatedModel> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    TabulatedModel::from_reader(
        std::io::BufReader::new(file),
        grid,
        &path.display().to_string(),
    )
}

/// Writes model values for every grid node in the tabulated CSV layout.
pub fn write_tabulated_csv<W: Write>(
    grid: &TensorQuadrature,
    values: &[Complex64],
    mut out: W,
) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Argument(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let header: Vec<String> = std::iter::once("index".to_string())
        .chain((1..=grid.dimension()).map(|j| format!("y{j}")))
        .chain(["value_real".to_string(), "value_imag".to_string()])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (i, (y, v)) in grid.nodes().zip(values).enumerate() {
        write!(out, "{i}")?;
        for c in y {
            write!(out, ",{}", fmt_f64(*c))?;
        }
        writeln!(out, ",{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

impl ParametricModel for TabulatedModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn evaluate(&self, y: &[f64]) -> Result<Complex64> {
        self.lookup
            .get(&node_key(y))
            .map(|&i| self.values[i])
            .ok_or_else(|| {
                Error::Argument(format!(
                    "{:?} is not a node of the grid tabulated in {}",
                    y, self.label
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalMap1D;
    use crate::density::UnivariateDensity;
    use crate::quadrature::{mapped_rule, tensor_rule};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rlc_amplitude_examples() {
        let m = RlcModel::reference(1.0).unwrap();
        assert_abs_diff_eq!(rlc_amplitude(&m, 0.0).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rlc_amplitude(&m, 1.0).unwrap(), 1.0 / 7.25f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(rlc_amplitude(&m, 1.0).unwrap(), 0.371391, epsilon = 5e-7);
        for i in 0..50 {
            let y = i as f64 / 49.0;
            assert_abs_diff_eq!(m.amplitude(y).unwrap(), m.amplitude(-y).unwrap(), epsilon = 1e-13);
        }
        assert!(rlc_amplitude(&m, 1.5).is_err());
    }

    #[test]
    fn rlc_closed_form_agrees() {
        for r in [0.5, 1.0, 2.0] {
            let m = RlcModel::reference(r).unwrap();
            for i in 0..=200 {
                let y = -1.0 + 2.0 * i as f64 / 200.0;
                let w = m.omega;
                let react = 1.0 / m.capacitance - m.inductance(y) * w * w;
                let closed = m.voltage * w / (react * react + (w * r).powi(2)).sqrt();
                assert!((m.amplitude(y).unwrap() - closed).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn rlc_poles() {
        for (r, b) in [(1.0, 0.4), (2.0, 0.8), (0.5, 0.2)] {
            let (p, q) = rlc_pole_locations(&RlcModel::reference(r).unwrap()).unwrap();
            assert_abs_diff_eq!(p.re, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(p.im, b, epsilon = 1e-12);
            assert_eq!(q, p.conj());
        }
        let mut m = RlcModel::reference(1.0).unwrap();
        m.dl = 0.0;
        assert!(matches!(m.pole_locations(), Err(Error::NoPole(_))));
    }

    #[test]
    fn rlc_singularity_location() {
        // 6.25 y^2 + R^2 vanishes at the reported pole
        let m = RlcModel::reference(1.0).unwrap();
        let (p, _) = m.pole_locations().unwrap();
        let w = m.omega;
        let react = Complex64::new(1.0 / m.capacitance, 0.0) - (m.l0 + m.dl * p) * w * w;
        let denom = react * react + (w * m.resistance).powi(2);
        assert!(denom.norm() < 1e-6 * (w * m.resistance).powi(2));
    }

    #[test]
    fn bernstein_rate_examples() {
        assert_abs_diff_eq!(bernstein_rate(Complex64::new(0.0, 0.4)).unwrap(), 0.4 + 1.16f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(bernstein_rate(Complex64::new(0.0, 0.4)).unwrap(), 1.477033, epsilon = 5e-7);
        assert_abs_diff_eq!(bernstein_rate(Complex64::new(0.0, -0.8)).unwrap(), 2.080625, epsilon = 5e-7);
        assert_abs_diff_eq!(bernstein_rate(Complex64::new(2.0, 0.0)).unwrap(), 2.0 + 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(bernstein_rate(Complex64::new(-2.0, 0.0)).unwrap(), 2.0 + 3f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(bernstein_rate(Complex64::new(0.5, 0.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bernstein_rate_matches_ellipse_axes() {
        // semi-axes of the ellipse through z: a = (|z-1| + |z+1|) / 2, b = sqrt(a^2 - 1)
        for z in [Complex64::new(0.3, 0.7), Complex64::new(-1.5, 0.2), Complex64::new(0.0, 2.0)] {
            let a = ((z - 1.0).norm() + (z + 1.0).norm()) / 2.0;
            let b = (a * a - 1.0).sqrt();
            assert_abs_diff_eq!(bernstein_rate(z).unwrap(), a + b, epsilon = 1e-13);
        }
    }

    #[test]
    fn runge_examples() {
        let m = runge_model(25.0).unwrap();
        assert_eq!(m.evaluate(&[0.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(m.poles().0.im, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(runge_model(6.25).unwrap().poles().0.im, 0.4, epsilon = 1e-15);
        assert!(runge_model(-1.0).is_err());
        let p = RungeModel::new(6.25, 3).unwrap();
        assert_abs_diff_eq!(p.evaluate(&[0.4, 0.0, -0.4]).unwrap().re, 0.5 * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn polynomial_model() {
        let m = PolynomialModel::new(2, vec![(1.0, vec![1, 0]), (1.0, vec![1, 1])]).unwrap();
        assert_abs_diff_eq!(m.evaluate(&[0.5, -0.5]).unwrap().re, 0.25, epsilon = 1e-16);
        assert!(m.evaluate(&[0.5]).is_err());
        assert!(PolynomialModel::new(2, vec![(1.0, vec![1])]).is_err());
    }

    fn small_grid() -> TensorQuadrature {
        let r = mapped_rule(&UnivariateDensity::uniform(), &ConformalMap1D::sausage9(), 3).unwrap();
        tensor_rule(vec![r.clone(), r]).unwrap()
    }

    #[test]
    fn tabulated_permuted_rows_accepted() {
        let grid = small_grid();
        let values: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new(i as f64, 0.5)).collect();
        let mut buf = Vec::new();
        write_tabulated_csv(&grid, &values, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let permuted = lines.join("\n");
        let m = TabulatedModel::from_reader(permuted.as_bytes(), &grid, "t").unwrap();
        assert_eq!(m.values(), &values[..]);
        assert_eq!(m.evaluate(grid.node(4)).unwrap(), values[4]);
        assert!(m.evaluate(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn tabulated_missing_and_duplicate_rows() {
        let grid = small_grid();
        let values = vec![Complex64::new(2.0, 0.0); grid.len()];
        let mut buf = Vec::new();
        write_tabulated_csv(&grid, &values, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let missing: String = lines
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 6)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        let err = TabulatedModel::from_reader(missing.as_bytes(), &grid, "t").unwrap_err();
        assert!(matches!(&err, Error::Ingestion(m) if m.contains("missing indices [5]")), "{err}");
        let dup = format!("{text}{}\n", lines[3]);
        let err = TabulatedModel::from_reader(dup.as_bytes(), &grid, "t").unwrap_err();
        assert!(matches!(&err, Error::Ingestion(m) if m.contains("duplicate indices [2]")), "{err}");
    }

    #[test]
    fn tabulated_coordinate_mismatch() {
        let grid = small_grid();
        let mut text = String::from("index,y1,y2,value_real,value_imag\n");
        for (i, y) in grid.nodes().enumerate() {
            let shift = if i == 3 { 1e-6 } else { 0.0 };
            text.push_str(&format!("{i},{},{},1,0\n", fmt_f64(y[0] + shift), fmt_f64(y[1])));
        }
        let err = TabulatedModel::from_reader(text.as_bytes(), &grid, "t").unwrap_err();
        assert!(matches!(&err, Error::Ingestion(m) if m.contains("consistency")), "{err}");
        let bad_header = text.replacen("index,y1,y2", "idx,y1,y2", 1);
        assert!(TabulatedModel::from_reader(bad_header.as_bytes(), &grid, "t").is_err());
    }
}
