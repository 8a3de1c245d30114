//! Dispatch from a validated [`RunSpec`] to the core routines.

use std::collections::BTreeMap;

use epi_lab_core::density::render_auto;
use epi_lab_core::heat::{default_t_grid, DebruijnResidual, TrajectoryChecks, WeakStabilityRow};
use epi_lab_core::io::{f64_17, opt_f64_17};
use epi_lab_core::{
    continuous_stability_report, debruijn_residual, deficit_monotonicity, differential_entropy,
    discrete_entropy, epi_deficit, fisher_information, isoperimetry_report, smooth_with_uniform,
    tao_deficit, theorem9_report, verify_prop10, weak_stability_demo, AnalyticDensity,
    ContinuousStabilityReport, DeficitReport, DiscreteStabilityReport, Error, FunctionalEstimate,
    GridDensity, HeatTrajectory, IntegerPmf, IsoperimetryReport, Prop10Check,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::{to_raw_value, RawValue};
use thiserror::Error;

use crate::spec::{Command, Param, RunSpec, UsageError};

/// Mass left outside rendered windows of light-tailed inputs. Heavy-tailed
/// inputs use the family's render tolerance instead.
pub const RENDER_TAIL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error("precondition unmet: {0}")]
    Precondition(Error),
    #[error("{0}")]
    Numeric(Error),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::PreconditionUnmet(_)
            | Error::NotLogConcave { .. }
            | Error::DisconnectedSupport { .. } => RunError::Precondition(e),
            other => RunError::Numeric(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// A finished run: the resolved spec and one serialized row per input or sweep point.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub inputs: Vec<String>,
    pub params: BTreeMap<String, Param>,
    /// Set for verdict runs: false when some input is out of scope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope_warning: Option<String>,
    pub rows: Vec<Box<RawValue>>,
    #[serde(skip)]
    pub trajectory: Option<HeatTrajectory>,
}

impl Report {
    /// True when a verdict was requested and failed.
    pub fn out_of_scope(&self) -> bool {
        self.verdict == Some(false)
    }
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    input: &'a str,
    #[serde(flatten)]
    estimate: FunctionalEstimate,
    #[serde(with = "opt_f64_17")]
    closed_form: Option<f64>,
    #[serde(with = "f64_17")]
    grid_start: f64,
    #[serde(with = "f64_17")]
    grid_step: f64,
    points: usize,
}

#[derive(Serialize)]
struct PairRow<'a, T> {
    x: &'a str,
    y: &'a str,
    #[serde(flatten)]
    report: T,
}

#[derive(Serialize)]
struct InputRow<'a, T> {
    input: &'a str,
    #[serde(flatten)]
    report: T,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    x: &'a str,
    y: &'a str,
    checks: TrajectoryChecks,
    #[serde(flatten)]
    trajectory: &'a HeatTrajectory,
}

#[derive(Serialize)]
struct DiscreteDeficitRow<'a> {
    input: &'a str,
    #[serde(with = "f64_17")]
    sigma: f64,
    #[serde(with = "f64_17")]
    entropy: f64,
    #[serde(with = "f64_17")]
    entropy_of_sum: f64,
    /// `H(X + X') - H(X) - ln(2)/2`.
    #[serde(with = "f64_17")]
    tao_deficit: f64,
}

fn raw<T: Serialize>(row: &T) -> Box<RawValue> {
    to_raw_value(row).expect("report rows serialize")
}

fn render_input(spec: &RunSpec, d: &AnalyticDensity) -> Result<GridDensity, RunError> {
    let points = spec.scalar("points") as usize;
    let tail = if d.is_heavy_tailed() {
        d.render_mass_tol()
    } else {
        RENDER_TAIL
    };
    let (lo, hi) = d.mass_window(tail);
    Ok(render_auto(
        d,
        tail,
        spec.scalar("pad") * (hi - lo),
        points,
    )?)
}

pub fn execute(spec: &RunSpec) -> Result<Report, RunError> {
    spec.validate()?;
    let mut report = Report {
        tool: "epi-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: spec.command,
        inputs: spec.inputs.clone(),
        params: spec.resolved_params(),
        verdict: None,
        scope_warning: None,
        rows: Vec::new(),
        trajectory: None,
    };
    let names: Vec<&str> = spec.inputs.iter().map(String::as_str).collect();
    match spec.command {
        Command::Entropy | Command::Fisher => {
            let d = &spec.densities()?[0];
            let g = render_input(spec, d)?;
            let (estimate, closed_form) = if spec.command == Command::Entropy {
                (differential_entropy(&g)?, d.entropy())
            } else {
                (fisher_information(&g)?, d.fisher())
            };
            report.rows.push(raw(&EstimateRow {
                input: names[0],
                estimate,
                closed_form,
                grid_start: g.grid_start(),
                grid_step: g.grid_step(),
                points: g.len(),
            }));
        }
        Command::Deficit => {
            let ds = spec.densities()?;
            let (f, g) = (render_input(spec, &ds[0])?, render_input(spec, &ds[1])?);
            let r: DeficitReport = epi_deficit(&f, &g, spec.scalar("lambda"))?;
            report.rows.push(raw(&PairRow {
                x: names[0],
                y: names[1],
                report: r,
            }));
        }
        Command::Debruijn => {
            let f = render_input(spec, &spec.densities()?[0])?;
            let dt = spec.scalar("dt");
            let rows: Vec<DebruijnResidual> = spec
                .list("t")
                .unwrap_or_default()
                .par_iter()
                .map(|&t| debruijn_residual(&f, t, dt))
                .collect::<Result<_, _>>()?;
            report.rows = rows
                .iter()
                .map(|r| {
                    raw(&InputRow {
                        input: names[0],
                        report: r,
                    })
                })
                .collect();
        }
        Command::Trajectory => {
            let ds = spec.densities()?;
            let (f, g) = (render_input(spec, &ds[0])?, render_input(spec, &ds[1])?);
            let t_grid = spec.list("t").unwrap_or_else(default_t_grid);
            if !spec.params.contains_key("t") {
                report
                    .params
                    .insert("t".into(), Param::List(t_grid.clone()));
            }
            let tr = deficit_monotonicity(&f, &g, spec.scalar("lambda"), &t_grid)?;
            report.rows.push(raw(&TrajectoryRow {
                x: names[0],
                y: names[1],
                checks: tr.checks(),
                trajectory: &tr,
            }));
            report.trajectory = Some(tr);
        }
        Command::DiscreteDeficit => {
            report.rows = per_pmf(spec, |name, p| {
                let h = discrete_entropy(p);
                let d = tao_deficit(p);
                Ok(raw(&DiscreteDeficitRow {
                    input: name,
                    sigma: p.std_dev(),
                    entropy: h,
                    entropy_of_sum: d + h + 0.5 * std::f64::consts::LN_2,
                    tao_deficit: d,
                }))
            })?;
        }
        Command::Isoperimetry => {
            report.rows = per_pmf(spec, |name, p| {
                let r: IsoperimetryReport = isoperimetry_report(&smooth_with_uniform(p))?;
                Ok(raw(&InputRow {
                    input: name,
                    report: r,
                }))
            })?;
        }
        Command::Prop10 => {
            report.rows = per_pmf(spec, |name, p| {
                let r: Prop10Check = verify_prop10(p)?;
                Ok(raw(&InputRow {
                    input: name,
                    report: r,
                }))
            })?;
        }
        Command::Theorem9 => {
            let c2 = spec.scalar("c2");
            let pmfs = spec.pmfs()?;
            let reports: Vec<DiscreteStabilityReport> = pmfs
                .par_iter()
                .map(|p| theorem9_report(p, c2))
                .collect::<Result<_, _>>()?;
            if spec.verdict {
                let warnings: Vec<String> = reports
                    .iter()
                    .zip(&names)
                    .filter_map(|(r, n)| r.scope_warning.as_ref().map(|w| format!("{n}: {w}")))
                    .collect();
                report.verdict =
                    Some(warnings.is_empty() && reports.iter().all(|r| r.passes_with_budget));
                if !warnings.is_empty() {
                    report.scope_warning = Some(warnings.join("; "));
                }
            }
            report.rows = reports
                .iter()
                .zip(&names)
                .map(|(r, n)| {
                    raw(&InputRow {
                        input: n,
                        report: r,
                    })
                })
                .collect();
        }
        Command::Stability => {
            let f = render_input(spec, &spec.densities()?[0])?;
            let r: ContinuousStabilityReport = continuous_stability_report(&f, spec.scalar("cp"))?;
            report.rows.push(raw(&InputRow {
                input: names[0],
                report: r,
            }));
        }
        Command::WeakDemo => {
            let a_max = spec.scalar("a_max");
            let steps = spec.scalar("steps") as i32;
            let a: Vec<f64> = (0..steps).map(|j| a_max * 0.5f64.powi(j)).collect();
            let rows: Vec<WeakStabilityRow> = weak_stability_demo(&a)?;
            report.rows = rows.iter().map(raw).collect();
        }
    }
    Ok(report)
}

fn per_pmf<F>(spec: &RunSpec, f: F) -> Result<Vec<Box<RawValue>>, RunError>
where
    F: Fn(&str, &IntegerPmf) -> Result<Box<RawValue>, Error> + Sync,
{
    let pmfs = spec.pmfs()?;
    let rows: Result<Vec<_>, Error> = spec
        .inputs
        .par_iter()
        .zip(pmfs.par_iter())
        .map(|(name, p)| f(name, p))
        .collect();
    Ok(rows?)
}
