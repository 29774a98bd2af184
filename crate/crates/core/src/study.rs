//! Convergence studies: surrogates over a range of orders and maps, scored by
//! cross-validation and by moment errors against a high-order Gauss reference.
//!
//! A study is described by a JSON document:
//!
//! ```json
//! {
//!   "model": {"kind": "rlc", "resistance": 1.0},
//!   "densities": [{"kind": "uniform"}],
//!   "maps": ["identity", "sausage9"],
//!   "orders": {"from": 0, "to": 20},
//!   "cv_samples": 1000,
//!   "seed": 7,
//!   "rate_window": [4, 18]
//! }
//! ```
//!
//! Optional fields: `cv_samples` (default 1000), `seed` (default 0),
//! `quad_node_offset` (projection nodes per dimension are
//! `order + offset`, default 1), `quad_nodes` (fixed node count, overrides the
//! offset), `reference_nodes` (default 200 per dimension, capped so the
//! reference grid stays below two million nodes).
//!
//! Model kinds:
//! - `{"kind": "rlc", "resistance": R}` with optional `omega`, `voltage`,
//!   `capacitance`, `l0`, `dl`, `quantity` (`"amplitude"` or `"current"`);
//! - `{"kind": "runge", "a": a, "dimension": N}`;
//! - `{"kind": "polynomial", "dimension": N, "terms": [{"coefficient": c, "powers": [..]}]}`;
//! - `{"kind": "tabulated", "dimension": N, "directory": dir, "cv_file": file}`.
//!
//! A tabulated study reads `<dir>/<map>_n<nodes>.csv` for every projection
//! grid (the `export-grid` layout with `weight` replaced by
//! `value_real,value_imag`), and cross-validation samples from `cv_file` in
//! the same layout. Reference moments are unavailable for tabulated models
//! and are reported as `NaN`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::{MapSpec, MultivariateMap};
use crate::density::{DensitySpec, JointDensity};
use crate::error::{Error, Result};
use crate::models::{
    tabulated_from_csv, ParametricModel, PolynomialModel, RlcModel, RlcQuantity, RungeModel,
};
use crate::parallel::Execution;
use crate::pce::{build_basis, evaluate_on_grid, project_with, Surrogate};
use crate::quadrature::{fmt_f64, gauss_rule, tensor_rule};
use crate::stats::{mean, std_dev, CvSet};
use num_complex::Complex64;

/// Upper bound on the number of nodes of the reference grid.
const REFERENCE_GRID_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Rlc {
        resistance: f64,
        #[serde(default = "defaults::omega")]
        omega: f64,
        #[serde(default = "defaults::voltage")]
        voltage: f64,
        #[serde(default = "defaults::capacitance")]
        capacitance: f64,
        #[serde(default = "defaults::l0")]
        l0: f64,
        #[serde(default = "defaults::dl")]
        dl: f64,
        #[serde(default)]
        quantity: QuantityConfig,
    },
    Runge {
        a: f64,
        #[serde(default = "defaults::one")]
        dimension: usize,
    },
    Polynomial {
        dimension: usize,
        terms: Vec<TermConfig>,
    },
    Tabulated {
        dimension: usize,
        directory: PathBuf,
        #[serde(default)]
        cv_file: Option<PathBuf>,
    },
}

mod defaults {
    pub fn omega() -> f64 {
        1e4
    }
    pub fn voltage() -> f64 {
        1.0
    }
    pub fn capacitance() -> f64 {
        10e-6
    }
    pub fn l0() -> f64 {
        1e-3
    }
    pub fn dl() -> f64 {
        0.25e-3
    }
    pub fn one() -> usize {
        1
    }
    pub fn offset() -> usize {
        1
    }
    pub fn reference() -> usize {
        200
    }
    pub fn cv_samples() -> usize {
        1000
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityConfig {
    #[default]
    Amplitude,
    Current,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

impl ModelConfig {
    pub fn dimension(&self) -> usize {
        match self {
            ModelConfig::Rlc { .. } => 1,
            ModelConfig::Runge { dimension, .. }
            | ModelConfig::Polynomial { dimension, .. }
            | ModelConfig::Tabulated { dimension, .. } => *dimension,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, ModelConfig::Tabulated { .. })
    }

    /// The analytic model; `None` for tabulated models.
    pub fn build(&self) -> Result<Option<Box<dyn ParametricModel>>> {
        let field = |e: Error| Error::Argument(format!("field `model`: {e}"));
        Ok(Some(match self {
            ModelConfig::Rlc {
                resistance,
                omega,
                voltage,
                capacitance,
                l0,
                dl,
                quantity,
            } => {
                let q = match quantity {
                    QuantityConfig::Amplitude => RlcQuantity::Amplitude,
                    QuantityConfig::Current => RlcQuantity::Current,
                };
                Box::new(
                    RlcModel::new(*omega, *voltage, *capacitance, *resistance, *l0, *dl)
                        .map_err(field)?
                        .with_quantity(q),
                )
            }
            ModelConfig::Runge { a, dimension } => {
                Box::new(RungeModel::new(*a, *dimension).map_err(field)?)
            }
            ModelConfig::Polynomial { dimension, terms } => Box::new(
                PolynomialModel::new(
                    *dimension,
                    terms.iter().map(|t| (t.coefficient, t.powers.clone())).collect(),
                )
                .map_err(field)?,
            ),
            ModelConfig::Tabulated { .. } => return Ok(None),
        }))
    }
}

/// `{"from": a, "to": b}` or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Range { from: usize, to: usize },
    List(Vec<usize>),
}

impl OrderSpec {
    /// Sorted distinct orders.
    pub fn orders(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = match self {
            OrderSpec::Range { from, to } => (*from..=*to).collect(),
            OrderSpec::List(v) => v.iter().copied().collect(),
        };
        set.into_iter().collect()
    }

    /// Parses `"4-18"` or `"1,2,5"`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("cannot parse orders {text:?}"));
        if let Some((a, b)) = text.split_once('-') {
            let from = a.trim().parse().map_err(|_| bad())?;
            let to = b.trim().parse().map_err(|_| bad())?;
            return Ok(OrderSpec::Range { from, to });
        }
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()
            .map(OrderSpec::List)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelConfig,
    /// One entry per dimension, or a single entry used for all dimensions.
    pub densities: Vec<DensitySpec>,
    pub maps: Vec<MapSpec>,
    pub orders: OrderSpec,
    #[serde(default = "defaults::cv_samples")]
    pub cv_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::offset")]
    pub quad_node_offset: usize,
    #[serde(default)]
    pub quad_nodes: Option<usize>,
    #[serde(default)]
    pub rate_window: Option<(usize, usize)>,
    #[serde(default = "defaults::reference")]
    pub reference_nodes: usize,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("study config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?;
        // relative tabulation paths are taken from the config's directory
        if let ModelConfig::Tabulated {
            directory, cv_file, ..
        } = &mut cfg.model
        {
            let base = path.parent().unwrap_or(Path::new("."));
            if directory.is_relative() {
                *directory = base.join(&*directory);
            }
            if let Some(f) = cv_file {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Argument(format!("field `{name}`: {msg}")));
        let n = self.model.dimension();
        if n == 0 {
            return field("model", "dimension must be at least 1".into());
        }
        if self.densities.len() != 1 && self.densities.len() != n {
            return field(
                "densities",
                format!("{} entries for a {n}-parameter model", self.densities.len()),
            );
        }
        for d in &self.densities {
            if let Err(e) = d.build() {
                return field("densities", e.to_string());
            }
        }
        if self.maps.is_empty() {
            return field("maps", "at least one map is required".into());
        }
        for m in &self.maps {
            if let Err(e) = m.build() {
                return field("maps", e.to_string());
            }
        }
        if self.orders.orders().is_empty() {
            return field("orders", "no orders selected".into());
        }
        if let OrderSpec::Range { from, to } = self.orders {
            if from > to {
                return field("orders", format!("empty range {from}-{to}"));
            }
        }
        if self.cv_samples == 0 && !self.model.is_tabulated() {
            return field("cv_samples", "must be at least 1".into());
        }
        if self.quad_nodes == Some(0) {
            return field("quad_nodes", "must be at least 1".into());
        }
        if self.quad_nodes.is_none() && self.quad_node_offset == 0 && self.orders.orders()[0] == 0 {
            return field("quad_node_offset", "order 0 needs at least one node".into());
        }
        if let Some((a, b)) = self.rate_window {
            if a > b {
                return field("rate_window", format!("empty window [{a}, {b}]"));
            }
        }
        if self.reference_nodes == 0 {
            return field("reference_nodes", "must be at least 1".into());
        }
        self.model.build()?;
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn joint_density(&self) -> Result<JointDensity> {
        let n = self.dimension();
        let factors = (0..n)
            .map(|j| self.densities[if self.densities.len() == 1 { 0 } else { j }].build())
            .collect::<Result<Vec<_>>>()?;
        JointDensity::new(factors)
    }

    pub fn nodes_for(&self, order: usize) -> usize {
        self.quad_nodes.unwrap_or(order + self.quad_node_offset)
    }
}

/// One (map, order) result.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub order: usize,
    pub map: String,
    pub cv_error: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub model_evaluations: usize,
    /// Fitted rate of the row's map, repeated on each of its rows.
    pub empirical_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub reference_mean: Complex64,
    pub reference_std: f64,
    /// Per map, the coefficient decay of the highest-order surrogate.
    pub decay: Vec<(String, Vec<(usize, f64)>)>,
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Convergence rate `r` such that `E^cv ~ r^(-2p)`, from a least-squares fit
/// of `log10 E^cv` against the order. Non-positive or non-finite errors are
/// skipped.
pub fn empirical_rate(errors: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(_, e)| *e > 0.0 && e.is_finite())
        .map(|&(p, e)| (p as f64, e.log10()))
        .collect();
    fitted_slope(&pts).map(|s| 10f64.powf(-s / 2.0))
}

/// Reference mean and standard deviation from a tensor Gauss rule of the
/// input density.
pub fn reference_moments(
    model: &dyn ParametricModel,
    density: &JointDensity,
    nodes_per_dim: usize,
    execution: Execution,
) -> Result<(Complex64, f64)> {
    let rules = density
        .factors()
        .iter()
        .map(|d| gauss_rule(d, nodes_per_dim))
        .collect::<Result<Vec<_>>>()?;
    let grid = tensor_rule(rules)?;
    let values = evaluate_on_grid(model, &grid, execution)?;
    let m: Complex64 = values.iter().zip(grid.weights()).map(|(v, w)| v * w).sum();
    let var: f64 = values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| w * (v - m).norm_sqr())
        .sum();
    Ok((m, var.max(0.0).sqrt()))
}

fn reference_nodes_for(requested: usize, dimension: usize) -> usize {
    let mut n = requested;
    while n > 1 && n.checked_pow(dimension as u32).is_none_or(|t| t > REFERENCE_GRID_LIMIT) {
        n -= 1;
    }
    n
}

/// Runs the study. Rows are ordered by map (config order), then order.
pub fn run_study(cfg: &StudyConfig, execution: Execution) -> Result<StudyReport> {
    cfg.validate()?;
    let density = cfg.joint_density()?;
    let n = cfg.dimension();
    let model = cfg.model.build()?;
    let orders = cfg.orders.orders();

    let (reference_mean, reference_std, cv) = match (&model, &cfg.model) {
        (Some(m), _) => {
            let (rm, rs) = reference_moments(
                m.as_ref(),
                &density,
                reference_nodes_for(cfg.reference_nodes, n),
                execution,
            )?;
            let cv = CvSet::draw(m.as_ref(), &density, cfg.cv_samples, cfg.seed, execution)?;
            (rm, rs, Some(cv))
        }
        (None, ModelConfig::Tabulated { cv_file, .. }) => {
            let cv = cv_file.as_deref().map(|p| read_cv_file(p, n)).transpose()?;
            (Complex64::new(f64::NAN, f64::NAN), f64::NAN, cv)
        }
        (None, _) => unreachable!("only tabulated configs lack an analytic model"),
    };

    let mut rows = Vec::new();
    let mut decay = Vec::new();
    for spec in &cfg.maps {
        let g1 = spec.build()?;
        let label = g1.label().to_string();
        let g = MultivariateMap::uniform(g1, n)?;
        let first = rows.len();
        let mut last: Option<Surrogate> = None;
        for &p in &orders {
            let s = project_one(cfg, model.as_deref(), &density, &g, &label, p, execution)?;
            let cv_error = match &cv {
                Some(cv) => cv.error(&s)?,
                None => f64::NAN,
            };
            rows.push(StudyRow {
                order: p,
                map: label.clone(),
                cv_error,
                mean_error: (mean(&s) - reference_mean).norm(),
                std_error: (std_dev(&s) - reference_std).abs(),
                model_evaluations: s.metadata().model_evaluations,
                empirical_rate: f64::NAN,
            });
            last = Some(s);
        }
        let window: Vec<(usize, f64)> = rows[first..]
            .iter()
            .filter(|r| cfg.rate_window.is_none_or(|(a, b)| (a..=b).contains(&r.order)))
            .map(|r| (r.order, r.cv_error))
            .collect();
        let rate = empirical_rate(&window).unwrap_or(f64::NAN);
        for r in &mut rows[first..] {
            r.empirical_rate = rate;
        }
        if let Some(s) = last {
            decay.push((label, s.coefficient_decay()));
        }
    }
    Ok(StudyReport {
        rows,
        reference_mean,
        reference_std,
        decay,
    })
}

fn project_one(
    cfg: &StudyConfig,
    model: Option<&dyn ParametricModel>,
    density: &JointDensity,
    g: &MultivariateMap,
    label: &str,
    order: usize,
    execution: Execution,
) -> Result<Surrogate> {
    let basis = build_basis(density, g, order)?;
    let nodes = cfg.nodes_for(order);
    match (model, &cfg.model) {
        (Some(m), _) => project_with(m, &basis, nodes, execution),
        (None, ModelConfig::Tabulated { directory, .. }) => {
            let grid = basis.projection_grid(nodes)?;
            let path = directory.join(format!("{label}_n{nodes}.csv"));
            let table = tabulated_from_csv(&path, &grid)?;
            project_with(&table, &basis, nodes, execution)
        }
        (None, _) => unreachable!("only tabulated configs lack an analytic model"),
    }
}

impl StudyConfig {
    /// Surrogate of the configured model for one map and order, using the
    /// same node rule and tabulation layout as [`run_study`].
    pub fn surrogate(&self, map: &MapSpec, order: usize, execution: Execution) -> Result<Surrogate> {
        self.validate()?;
        let g1 = map.build()?;
        let label = g1.label().to_string();
        let g = MultivariateMap::uniform(g1, self.dimension())?;
        let model = self.model.build()?;
        project_one(self, model.as_deref(), &self.joint_density()?, &g, &label, order, execution)
    }

    /// Mapped tensor grid used for `order` under `map`.
    pub fn grid(&self, map: &MapSpec, nodes_per_dim: usize) -> Result<crate::quadrature::TensorQuadrature> {
        let g = MultivariateMap::uniform(map.build()?, self.dimension())?;
        let basis = build_basis(&self.joint_density()?, &g, 0)?;
        basis.projection_grid(nodes_per_dim)
    }
}

/// Cross-validation samples from a tabulated CSV with arbitrary points.
pub fn read_cv_file(path: &Path, dimension: usize) -> Result<CvSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: &str| {
        Error::Ingestion(format!("{} line {}: {msg}", path.display(), line + 1))
    };
    let mut lines = text.lines().enumerate();
    let expected: Vec<String> = std::iter::once("index".to_string())
        .chain((1..=dimension).map(|j| format!("y{j}")))
        .chain(["value_real".to_string(), "value_imag".to_string()])
        .collect();
    match lines.next() {
        Some((_, h)) if h.trim() == expected.join(",") => {}
        _ => return Err(bad(0, &format!("expected header {}", expected.join(",")))),
    }
    let mut samples = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i, "unparsable number"))?;
        if fields.len() != dimension + 3 {
            return Err(bad(i, "wrong number of columns"));
        }
        let y = fields[1..=dimension].to_vec();
        if y.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(bad(i, "sample outside [-1, 1]"));
        }
        samples.push(y);
        values.push(Complex64::new(fields[dimension + 1], fields[dimension + 2]));
    }
    if samples.is_empty() {
        return Err(bad(0, "no samples"));
    }
    Ok(CvSet { samples, values })
}

impl StudyReport {
    /// `order,map,cv_error,mean_error,std_error,model_evaluations,empirical_rate`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "order,map,cv_error,mean_error,std_error,model_evaluations,empirical_rate"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.order,
                r.map,
                fmt_f64(r.cv_error),
                fmt_f64(r.mean_error),
                fmt_f64(r.std_error),
                r.model_evaluations,
                fmt_f64(r.empirical_rate)
            )?;
        }
        Ok(())
    }

    /// Long-format `curve,x,y` data: cross-validation error per order and
    /// coefficient decay per level, one curve per map.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "curve,x,y")?;
        for r in &self.rows {
            writeln!(out, "cv_error:{},{},{}", r.map, r.order, fmt_f64(r.cv_error))?;
        }
        for (map, levels) in &self.decay {
            for (w, v) in levels {
                writeln!(out, "decay:{map},{w},{}", fmt_f64(*v))?;
            }
        }
        Ok(())
    }

    pub fn rows_for<'a>(&'a self, map: &'a str) -> impl Iterator<Item = &'a StudyRow> + 'a {
        self.rows.iter().filter(move |r| r.map == map)
    }
}
