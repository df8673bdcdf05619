//! Checks and sweeps tying the spectral gap and the diameter together.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{diameter, DiameterParams};
use crate::liealg::{generated_subalgebra, is_bracket_generating, is_ideal, su2, Subspace};
use crate::metric::{berger_metric, milnor_metric, scale_metric, Metric};
use crate::spectrum::{lambda1, lambda1_quotient};

/// Relative error budget of the diameter estimator.
pub const DIAMETER_TOLERANCE: f64 = 0.02;
/// Allowed spread of the diameter across the large-fibre plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.05;
/// Fibre scales `b` of `milnor(b, 1, 1)` probed for the plateau.
pub const PLATEAU_SCALES: [f64; 3] = [10.0, 30.0, 100.0];
pub const LAMBDA_SCALING_TOLERANCE: f64 = 1e-10;
pub const SUBMERSION_TOLERANCE: f64 = 1e-8;

/// Lower bound `pi^2 / 4` on `lambda_1 diam^2` for compact homogeneous spaces.
pub fn li_constant() -> f64 {
    PI * PI / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricParams {
    Milnor { a1: f64, a2: f64, a3: f64 },
    Berger { alpha: f64, beta: f64 },
}

impl MetricParams {
    pub fn metric(&self) -> Result<Metric> {
        match *self {
            MetricParams::Milnor { a1, a2, a3 } => milnor_metric(a1, a2, a3),
            MetricParams::Berger { alpha, beta } => berger_metric(alpha, beta),
        }
    }

    /// Squared fibre parameter: `beta` for Berger metrics, `a1^2` otherwise.
    pub fn beta(&self) -> f64 {
        match *self {
            MetricParams::Milnor { a1, .. } => a1 * a1,
            MetricParams::Berger { beta, .. } => beta,
        }
    }

    /// Scale `c` of the metric `c * I` on `span{X2, X3}` when the torus split
    /// is orthogonal and isotropic, which is when the Hopf submersion bound
    /// applies.
    fn horizontal_scale(&self) -> Option<f64> {
        match *self {
            MetricParams::Berger { alpha, .. } => Some(alpha),
            MetricParams::Milnor { a2, a3, .. } if a2 == a3 => Some(a2 * a2),
            MetricParams::Milnor { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    #[serde(flatten)]
    pub params: MetricParams,
    pub lambda1: f64,
    pub diameter: f64,
    /// `lambda1 * diameter^2`.
    pub product: f64,
    pub checks: BTreeMap<String, bool>,
}

impl MetricRecord {
    pub fn new(params: MetricParams, lambda1: f64, diameter: f64) -> Self {
        let mut rec =
            Self { params, lambda1, diameter, product: lambda1 * diameter * diameter, checks: BTreeMap::new() };
        let li = check_li(&rec);
        rec.checks.insert("li".into(), li);
        rec
    }
}

/// Computes the spectral gap and diameter of one metric and runs the
/// pointwise checks.
pub fn evaluate(params: MetricParams, diam: &DiameterParams) -> Result<MetricRecord> {
    let g = params.metric()?;
    let spec = lambda1(&g)?;
    let d = diameter(&g, diam)?;
    let mut rec = MetricRecord::new(params, spec.lambda1, d.value);
    if let Some(c) = params.horizontal_scale() {
        let bound = lambda1_quotient(&Metric::new(DMatrix::identity(2, 2) * c)?)?;
        rec.checks.insert("submersion".into(), spec.lambda1 <= bound + SUBMERSION_TOLERANCE);
    }
    Ok(rec)
}

/// `lambda1 diam^2 >= pi^2/4` up to the diameter estimator's budget.
pub fn check_li(record: &MetricRecord) -> bool {
    record.product >= li_constant() * (1.0 - DIAMETER_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub factor: f64,
    /// `|lambda1(c g) c / lambda1(g) - 1|`.
    pub lambda_rel_error: f64,
    /// `diam(c g) / (sqrt(c) diam(g))`.
    pub diameter_ratio: f64,
    pub passed: bool,
}

/// `lambda1(c g) = lambda1(g) / c` and `diam(c g) = sqrt(c) diam(g)`.
pub fn check_scaling(g: &Metric, c: f64, diam: &DiameterParams) -> Result<ScalingCheck> {
    let scaled = scale_metric(g, c)?;
    let l0 = lambda1(g)?.lambda1;
    let l1 = lambda1(&scaled)?.lambda1;
    let d0 = diameter(g, diam)?.value;
    let d1 = diameter(&scaled, diam)?.value;
    let lambda_rel_error = (l1 * c / l0 - 1.0).abs();
    let diameter_ratio = d1 / (c.sqrt() * d0);
    Ok(ScalingCheck {
        factor: c,
        lambda_rel_error,
        diameter_ratio,
        passed: lambda_rel_error <= LAMBDA_SCALING_TOLERANCE && (diameter_ratio - 1.0).abs() <= DIAMETER_TOLERANCE,
    })
}

/// `lambda1(berger(1, beta)) <= lambda1` of the base `(S^2, I|p)` for every
/// `beta` in the grid.
pub fn check_submersion(beta_grid: &[f64]) -> Result<bool> {
    let bound = lambda1_quotient(&Metric::new(DMatrix::identity(2, 2))?)?;
    for &beta in beta_grid {
        let l = lambda1(&berger_metric(1.0, beta)?).map_err(|e| at_beta(beta, e))?.lambda1;
        if l > bound + SUBMERSION_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `span{X2, X3}` generates su(2) and its generated subalgebra is an ideal,
/// while the torus direction `span{X1}` generates only itself.
pub fn check_bracket_generation() -> bool {
    let alg = su2();
    let p = Subspace::coordinate(3, &[1, 2]).expect("valid indices");
    let t = Subspace::coordinate(3, &[0]).expect("valid indices");
    is_bracket_generating(&alg, &p)
        && !is_bracket_generating(&alg, &t)
        && is_ideal(&alg, &generated_subalgebra(&alg, &p))
}

fn at_beta(beta: f64, e: Error) -> Error {
    Error::AtBeta { beta, source: Box::new(e) }
}

/// Which one-parameter family a sweep walks through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `berger(1, beta)`.
    Berger,
    /// `milnor(sqrt(beta), a2, a3)`; no boundedness claim is made here.
    Milnor { a2: f64, a3: f64 },
}

impl Family {
    fn params(&self, beta: f64) -> MetricParams {
        match *self {
            Family::Berger => MetricParams::Berger { alpha: 1.0, beta },
            Family::Milnor { a2, a3 } => MetricParams::Milnor { a1: beta.sqrt(), a2, a3 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub steps: usize,
    pub log_spacing: bool,
    pub family: Family,
    pub diameter: DiameterParams,
    /// Also evaluate the diameter plateau at [`PLATEAU_SCALES`].
    pub plateau: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            beta_min: 0.01,
            beta_max: 100.0,
            steps: 25,
            log_spacing: true,
            family: Family::Berger,
            diameter: DiameterParams::default(),
            plateau: false,
        }
    }
}

pub fn beta_grid(beta_min: f64, beta_max: f64, steps: usize, log_spacing: bool) -> Result<Vec<f64>> {
    if !(beta_min > 0.0 && beta_max > beta_min && beta_max.is_finite()) {
        return Err(Error::Input(format!("need 0 < beta_min < beta_max (got {beta_min}, {beta_max})")));
    }
    if steps < 2 {
        return Err(Error::Input(format!("need at least 2 grid steps, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let s = i as f64 / last;
            if i == 0 {
                beta_min
            } else if i + 1 == steps {
                beta_max
            } else if log_spacing {
                (beta_min.ln() + s * (beta_max.ln() - beta_min.ln())).exp()
            } else {
                beta_min + s * (beta_max - beta_min)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauPoint {
    pub fibre_scale: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub records: Vec<MetricRecord>,
    /// Empirical supremum of `lambda1 diam^2` over the records; a stand-in
    /// for the constant, never a proof of its value.
    pub sup_product: f64,
    pub inf_product: f64,
    pub plateau: Vec<PlateauPoint>,
    pub outcomes: BTreeMap<String, bool>,
}

impl ConjectureReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.values().all(|&v| v)
    }
}

pub fn sweep_berger(config: &SweepConfig) -> Result<ConjectureReport> {
    let grid = beta_grid(config.beta_min, config.beta_max, config.steps, config.log_spacing)?;
    sweep_grid(&grid, config)
}

/// Sweep over an explicit, increasing grid of `beta` values. Records are
/// computed in parallel and reported in grid order.
pub fn sweep_grid(betas: &[f64], config: &SweepConfig) -> Result<ConjectureReport> {
    if !betas.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Input("beta grid must be strictly increasing".into()));
    }
    let records = betas
        .par_iter()
        .map(|&beta| evaluate(config.family.params(beta), &config.diameter).map_err(|e| at_beta(beta, e)))
        .collect::<Result<Vec<_>>>()?;

    let plateau = if config.plateau {
        PLATEAU_SCALES
            .par_iter()
            .map(|&b| {
                let g = milnor_metric(b, 1.0, 1.0)?;
                Ok(PlateauPoint {
                    fibre_scale: b,
                    diameter: diameter(&g, &config.diameter).map_err(|e| at_beta(b * b, e))?.value,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(assemble(records, plateau))
}

/// `d(b') >= d(b) (1 - 2 tol)` for consecutive fibre scales `b < b'`.
pub fn diameters_monotone(diameters: &[f64]) -> bool {
    diameters.windows(2).all(|w| w[1] >= w[0] * (1.0 - 2.0 * DIAMETER_TOLERANCE))
}

/// Spread `max / min - 1` within [`PLATEAU_TOLERANCE`].
pub fn plateau_flat(diameters: &[f64]) -> bool {
    let lo = diameters.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = diameters.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    diameters.is_empty() || hi / lo - 1.0 <= PLATEAU_TOLERANCE
}

fn assemble(records: Vec<MetricRecord>, plateau: Vec<PlateauPoint>) -> ConjectureReport {
    let sup_product = records.iter().map(|r| r.product).fold(f64::NEG_INFINITY, f64::max);
    let inf_product = records.iter().map(|r| r.product).fold(f64::INFINITY, f64::min);
    let mut outcomes = BTreeMap::new();
    outcomes.insert("li".to_string(), records.iter().all(check_li));
    outcomes
        .insert("submersion".to_string(), records.iter().all(|r| r.checks.get("submersion").copied().unwrap_or(true)));
    let diams: Vec<f64> = records.iter().map(|r| r.diameter).collect();
    outcomes.insert("diameter_monotone".to_string(), diameters_monotone(&diams));
    outcomes.insert("sup_finite".to_string(), sup_product.is_finite() || records.is_empty());
    if !plateau.is_empty() {
        let pd: Vec<f64> = plateau.iter().map(|p| p.diameter).collect();
        outcomes.insert("diameter_plateau".to_string(), plateau_flat(&pd));
    }
    ConjectureReport { records, sup_product, inf_product, plateau, outcomes }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

pub const CSV_HEADER: &str = "beta,lambda1,diameter,product,li_ok,submersion_ok";

/// CSV (`beta,lambda1,diameter,product,li_ok,submersion_ok`, one row per
/// record, empty `submersion_ok` when the bound does not apply) or a JSON
/// array of records.
pub fn emit_report(report: &ConjectureReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &report.records {
                let sub = r.checks.get("submersion").map(|b| b.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.params.beta(),
                    r.lambda1,
                    r.diameter,
                    r.product,
                    check_li(r),
                    sub
                );
            }
            out
        }
        ReportFormat::Json => serde_json::to_string_pretty(&report.records).expect("records serialize") + "\n",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

pub const SUITES: [&str; 4] = ["li", "scaling", "submersion", "bracket"];

/// Runs one named verification suite.
pub fn run_suite(name: &str, diam: &DiameterParams) -> Result<SuiteOutcome> {
    let (passed, detail) = match name {
        "li" => {
            let mut detail = String::new();
            let mut ok = true;
            for params in [
                MetricParams::Milnor { a1: 1.0, a2: 1.0, a3: 1.0 },
                MetricParams::Berger { alpha: 1.0, beta: 4.0 },
                MetricParams::Berger { alpha: 1.0, beta: 0.25 },
            ] {
                let rec = evaluate(params, diam)?;
                ok &= check_li(&rec);
                let _ = write!(detail, "beta={} product={:.4}; ", params.beta(), rec.product);
            }
            (ok, detail)
        }
        "scaling" => {
            let mut detail = String::new();
            let mut ok = true;
            for (g, c) in [
                (milnor_metric(1.0, 1.0, 1.0)?, 8.0),
                (milnor_metric(1.0, 1.0, 1.0)?, 0.25),
                (berger_metric(1.0, 4.0)?, 0.5),
            ] {
                let s = check_scaling(&g, c, diam)?;
                ok &= s.passed;
                let _ = write!(
                    detail,
                    "c={} lambda_err={:.2e} diam_ratio={:.4}; ",
                    c, s.lambda_rel_error, s.diameter_ratio
                );
            }
            (ok, detail)
        }
        "submersion" => {
            let grid = beta_grid(0.01, 100.0, 25, true)?;
            (check_submersion(&grid)?, "25 log-spaced beta in [0.01, 100]".into())
        }
        "bracket" => (check_bracket_generation(), "span{X2,X3} generates su(2); span{X1} does not".into()),
        other => return Err(Error::Input(format!("unknown suite `{other}`"))),
    };
    Ok(SuiteOutcome { suite: name.to_string(), passed, detail })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(product: f64) -> MetricRecord {
        MetricRecord::new(MetricParams::Berger { alpha: 1.0, beta: 1.0 }, product, 1.0)
    }

    #[test]
    fn li_check_examples() {
        assert!(check_li(&record(3.0 * PI * PI)));
        assert!(!check_li(&record(1.0)));
        assert!(check_li(&record(li_constant())));
    }

    #[test]
    fn grid_validation() {
        assert!(beta_grid(1.0, 1.0, 2, true).is_err());
        assert!(beta_grid(0.0, 1.0, 5, true).is_err());
        assert!(beta_grid(0.1, 1.0, 1, false).is_err());
        let g = beta_grid(0.01, 100.0, 5, true).unwrap();
        assert_eq!(g.first(), Some(&0.01));
        assert_eq!(g.last(), Some(&100.0));
        assert!((g[2] - 1.0).abs() < 1e-12);
        let lin = beta_grid(1.0, 3.0, 3, false).unwrap();
        assert_eq!(lin, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn submersion_boundary_cases() {
        assert!(check_submersion(&[1.0]).unwrap());
        assert!(check_submersion(&[100.0]).unwrap());
        // lambda1 = min(2 + 1/beta, 8) = 8 exactly here
        assert!(check_submersion(&[0.01]).unwrap());
    }

    #[test]
    fn bracket_suite() {
        assert!(check_bracket_generation());
        let alg = su2();
        assert!(!is_bracket_generating(&alg, &Subspace::zero(3)));
        assert!(is_bracket_generating(&alg, &Subspace::full(3)));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!(matches!("xml".parse::<ReportFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn empty_report_emission() {
        let r = assemble(Vec::new(), Vec::new());
        assert_eq!(emit_report(&r, ReportFormat::Csv), format!("{CSV_HEADER}\n"));
        assert_eq!(emit_report(&r, ReportFormat::Json).trim(), "[]");
    }

    #[test]
    fn single_record_csv_and_json_round_trip() {
        let mut rec = record(3.0);
        rec.diameter = PI;
        rec.product = 3.0 * PI * PI;
        rec.checks.insert("submersion".into(), true);
        let r = assemble(vec![rec], Vec::new());
        let csv = emit_report(&r, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("1,3,3.14159"));
        assert!(lines[1].ends_with(",true,true"));

        let json = emit_report(&r, ReportFormat::Json);
        let parsed: Vec<MetricRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, r.records);
        let again = emit_report(&assemble(parsed, Vec::new()), ReportFormat::Json);
        assert_eq!(again, json);
    }

    #[test]
    fn monotone_and_plateau_helpers() {
        assert!(diameters_monotone(&[1.0, 1.2, 1.19]));
        assert!(!diameters_monotone(&[1.0, 0.9]));
        assert!(plateau_flat(&[3.0, 3.1, 3.12]));
        assert!(!plateau_flat(&[3.0, 3.5]));
    }

    #[test]
    fn unknown_suite_errors() {
        assert!(run_suite("nope", &DiameterParams::default()).is_err());
    }
}
