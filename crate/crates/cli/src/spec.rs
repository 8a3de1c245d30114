//! Run specifications: flags, JSON config files and their validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use epi_lab_core::io::{f64_17, f64_vec_17};
use epi_lab_core::{AnalyticDensity, IntegerPmf, PmfFamily};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Entropy,
    Fisher,
    Deficit,
    Debruijn,
    Trajectory,
    DiscreteDeficit,
    Isoperimetry,
    Prop10,
    Theorem9,
    Stability,
    WeakDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Fisher => "fisher",
            Command::Deficit => "deficit",
            Command::Debruijn => "debruijn",
            Command::Trajectory => "trajectory",
            Command::DiscreteDeficit => "discrete-deficit",
            Command::Isoperimetry => "isoperimetry",
            Command::Prop10 => "prop10",
            Command::Theorem9 => "theorem9",
            Command::Stability => "stability",
            Command::WeakDemo => "weak-demo",
        }
    }

    pub fn takes_pmfs(self) -> bool {
        matches!(
            self,
            Command::DiscreteDeficit | Command::Isoperimetry | Command::Prop10 | Command::Theorem9
        )
    }

    /// Number of continuous inputs (`--x`, `--y`).
    pub fn densities(self) -> usize {
        match self {
            Command::Entropy | Command::Fisher | Command::Debruijn | Command::Stability => 1,
            Command::Deficit | Command::Trajectory => 2,
            _ => 0,
        }
    }

    /// Parameters the command accepts, with defaults where one exists.
    fn params(self) -> &'static [(&'static str, Option<f64>)] {
        const GRID: [(&str, Option<f64>); 2] = [("points", Some(16384.0)), ("pad", Some(0.25))];
        match self {
            Command::Entropy | Command::Fisher => &GRID,
            Command::Deficit => &[
                ("lambda", None),
                ("points", Some(16384.0)),
                ("pad", Some(0.25)),
            ],
            Command::Debruijn => &[
                ("t", None),
                ("dt", Some(1e-4)),
                ("points", Some(16384.0)),
                ("pad", Some(0.25)),
            ],
            Command::Trajectory => &[
                ("lambda", None),
                ("t", None),
                ("points", Some(4096.0)),
                ("pad", Some(0.25)),
            ],
            Command::DiscreteDeficit | Command::Isoperimetry | Command::Prop10 => &[],
            Command::Theorem9 => &[("c2", Some(1e10))],
            Command::Stability => &[("cp", None), ("points", Some(16384.0)), ("pad", Some(0.25))],
            Command::WeakDemo => &[("a_max", Some(0.4)), ("steps", Some(5.0))],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// A scalar or a list of scalars. Integral scalars serialize as integers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Scalar(#[serde(with = "f64_17")] f64),
    List(#[serde(with = "f64_vec_17")] Vec<f64>),
}

impl Serialize for Param {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Param::Scalar(x) if is_small_integer(*x) => s.serialize_i64(*x as i64),
            Param::Scalar(x) => f64_17::serialize(x, s),
            Param::List(xs) => f64_vec_17::serialize(xs, s),
        }
    }
}

pub(crate) fn is_small_integer(x: f64) -> bool {
    x.fract() == 0.0 && x.abs() < 1e15
}

impl Param {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Param::Scalar(x) => vec![*x],
            Param::List(xs) => xs.clone(),
        }
    }
}

/// Everything needed to reproduce one run. The JSON config file has this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub command: Command,
    /// Density descriptors (`--x`, `--y`) or pmf descriptors (`--pmf`).
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Inferred from the output extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default)]
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UsageError {
    #[error("missing required parameter --{0}")]
    Missing(String),
    #[error("invalid value for --{param}: {reason}")]
    Invalid { param: String, reason: String },
    #[error("--{param} does not apply to the {command} command")]
    NotApplicable { param: String, command: Command },
    #[error("no command given (pass one on the command line or in --config)")]
    NoCommand,
    #[error("cannot read config {path}: {reason}")]
    Config { path: String, reason: String },
}

impl UsageError {
    pub fn param(&self) -> Option<&str> {
        match self {
            UsageError::Missing(p) => Some(p),
            UsageError::Invalid { param, .. } | UsageError::NotApplicable { param, .. } => {
                Some(param)
            }
            UsageError::NoCommand | UsageError::Config { .. } => None,
        }
    }
}

fn invalid(param: &str, reason: impl fmt::Display) -> UsageError {
    UsageError::Invalid {
        param: param.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "epi-lab",
    version,
    about = "Entropy power inequality experiments",
    allow_negative_numbers = true
)]
pub struct Cli {
    /// What to compute; may instead come from --config.
    pub command: Option<Command>,
    /// First density, e.g. "gauss:0,1", "uniform:0,1", "cauchy:0,1", "symmix:0.4".
    #[arg(long)]
    pub x: Option<String>,
    /// Second density.
    #[arg(long)]
    pub y: Option<String>,
    /// Integer pmf, e.g. "dgauss:0,100", "geom:0.9", "binom:100,0.5",
    /// "poisson:4", "uniform:0,9", or "@file.json". Repeatable.
    #[arg(long)]
    pub pmf: Vec<String>,
    /// Mixing weight in (0, 1) for sqrt(lambda) X + sqrt(1 - lambda) Y
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Smoothing times, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Time step of the entropy difference quotient
    #[arg(long)]
    pub dt: Option<f64>,
    /// Grid points for rendered densities.
    #[arg(long)]
    pub points: Option<f64>,
    /// Window padding as a fraction of the mass window width.
    #[arg(long)]
    pub pad: Option<f64>,
    /// Budget for the second constant of the discrete stability bound.
    #[arg(long)]
    pub c2: Option<f64>,
    /// Upper bound on the Poincare constant of --x.
    #[arg(long)]
    pub cp: Option<f64>,
    /// Largest mixture offset in the weak-stability table.
    #[arg(long)]
    pub a_max: Option<f64>,
    /// Number of halvings of --a-max.
    #[arg(long)]
    pub steps: Option<f64>,
    /// Exit with status 1 when a pmf is outside the scope of the bound.
    #[arg(long)]
    pub verdict: bool,
    /// JSON run spec; flags given alongside it take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    /// Merges the config file (if any) with the flags and validates the result.
    pub fn into_run_spec(self) -> Result<RunSpec, UsageError> {
        let base = match &self.config {
            Some(path) => Some(read_config(path)?),
            None => None,
        };
        let command = self
            .command
            .or(base.as_ref().map(|b| b.command))
            .ok_or(UsageError::NoCommand)?;
        let mut spec = match base {
            Some(b) if b.command == command => b,
            _ => RunSpec {
                command,
                inputs: Vec::new(),
                params: BTreeMap::new(),
                output_path: None,
                format: None,
                verdict: false,
            },
        };

        if command.takes_pmfs() {
            for (flag, given) in [("x", self.x.is_some()), ("y", self.y.is_some())] {
                if given {
                    return Err(UsageError::NotApplicable {
                        param: flag.into(),
                        command,
                    });
                }
            }
            if !self.pmf.is_empty() {
                spec.inputs = self.pmf;
            }
        } else {
            if !self.pmf.is_empty() {
                return Err(UsageError::NotApplicable {
                    param: "pmf".into(),
                    command,
                });
            }
            let n = command.densities();
            for (i, (flag, value)) in [("x", self.x), ("y", self.y)].into_iter().enumerate() {
                if let Some(v) = value {
                    if i >= n {
                        return Err(UsageError::NotApplicable {
                            param: flag.into(),
                            command,
                        });
                    }
                    if spec.inputs.len() <= i {
                        spec.inputs.resize(i + 1, String::new());
                    }
                    spec.inputs[i] = v;
                }
            }
        }

        let flags = [
            ("lambda", self.lambda.map(Param::Scalar)),
            ("t", (!self.t.is_empty()).then(|| Param::List(self.t))),
            ("dt", self.dt.map(Param::Scalar)),
            ("points", self.points.map(Param::Scalar)),
            ("pad", self.pad.map(Param::Scalar)),
            ("c2", self.c2.map(Param::Scalar)),
            ("cp", self.cp.map(Param::Scalar)),
            ("a_max", self.a_max.map(Param::Scalar)),
            ("steps", self.steps.map(Param::Scalar)),
        ];
        for (name, value) in flags {
            if let Some(v) = value {
                spec.params.insert(name.to_string(), v);
            }
        }
        if self.out.is_some() {
            spec.output_path = self.out;
        }
        spec.format = Some(
            self.format
                .or(spec.format)
                .unwrap_or_else(|| infer_format(spec.output_path.as_deref())),
        );
        if self.verdict {
            spec.verdict = true;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn infer_format(path: Option<&Path>) -> Format {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    }
}

fn read_config(path: &Path) -> Result<RunSpec, UsageError> {
    let err = |reason: String| UsageError::Config {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

/// Parses a pmf descriptor or loads `@path` as `{"k_min": .., "probs": [..]}`.
pub fn load_pmf(descriptor: &str) -> Result<IntegerPmf, UsageError> {
    if let Some(path) = descriptor.strip_prefix('@') {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid("pmf", format!("{path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| invalid("pmf", format!("{path}: {e}")));
    }
    let fam: PmfFamily = descriptor.parse().map_err(|e| invalid("pmf", e))?;
    fam.pmf().map_err(|e| invalid("pmf", e))
}

impl RunSpec {
    pub fn format(&self) -> Format {
        self.format
            .unwrap_or_else(|| infer_format(self.output_path.as_deref()))
    }

    /// Value of a scalar parameter, falling back to the command default.
    pub fn scalar(&self, name: &str) -> f64 {
        match self.params.get(name) {
            Some(Param::Scalar(x)) => *x,
            Some(Param::List(xs)) => xs[0],
            None => self
                .default_of(name)
                .expect("validated spec has every parameter"),
        }
    }

    pub fn list(&self, name: &str) -> Option<Vec<f64>> {
        self.params.get(name).map(Param::values)
    }

    fn default_of(&self, name: &str) -> Option<f64> {
        self.command
            .params()
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, d)| *d)
    }

    /// Explicit parameters plus the defaults that were filled in.
    pub fn resolved_params(&self) -> BTreeMap<String, Param> {
        let mut out = self.params.clone();
        for (name, default) in self.command.params() {
            if let (false, Some(d)) = (out.contains_key(*name), default) {
                out.insert(name.to_string(), Param::Scalar(*d));
            }
        }
        out
    }

    pub fn densities(&self) -> Result<Vec<AnalyticDensity>, UsageError> {
        self.inputs
            .iter()
            .zip(["x", "y"])
            .map(|(s, flag)| s.parse().map_err(|e| invalid(flag, e)))
            .collect()
    }

    pub fn pmfs(&self) -> Result<Vec<IntegerPmf>, UsageError> {
        self.inputs.iter().map(|s| load_pmf(s)).collect()
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let cmd = self.command;
        if cmd.takes_pmfs() {
            if self.inputs.is_empty() {
                return Err(UsageError::Missing("pmf".into()));
            }
            self.pmfs()?;
        } else {
            let n = cmd.densities();
            if self.inputs.len() > n {
                let flag = if n == 0 { "x" } else { "y" };
                return Err(UsageError::NotApplicable {
                    param: flag.into(),
                    command: cmd,
                });
            }
            for (i, flag) in ["x", "y"].into_iter().enumerate().take(n) {
                if self.inputs.get(i).map_or(true, |s| s.is_empty()) {
                    return Err(UsageError::Missing(flag.into()));
                }
            }
            self.densities()?;
        }

        let accepted = cmd.params();
        for (name, value) in &self.params {
            if !accepted.iter().any(|(n, _)| n == name) {
                return Err(UsageError::NotApplicable {
                    param: flag_name(name),
                    command: cmd,
                });
            }
            let xs = value.values();
            if xs.is_empty() {
                return Err(invalid(&flag_name(name), "empty list"));
            }
            if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
                return Err(invalid(&flag_name(name), format!("{x} is not finite")));
            }
            if name != "t" && xs.len() > 1 {
                return Err(invalid(&flag_name(name), "expected a single value"));
            }
        }
        for (name, default) in accepted {
            if default.is_none()
                && !self.params.contains_key(*name)
                && !(*name == "t" && cmd == Command::Trajectory)
            {
                return Err(UsageError::Missing(flag_name(name)));
            }
        }

        let check = |name: &str, ok: fn(f64) -> bool, reason: &str| -> Result<(), UsageError> {
            match self.params.get(name) {
                Some(p) if !p.values().into_iter().all(ok) => {
                    Err(invalid(&flag_name(name), reason))
                }
                _ => Ok(()),
            }
        };
        check("lambda", |x| x > 0.0 && x < 1.0, "must lie in (0, 1)")?;
        check("dt", |x| x > 0.0, "must be positive")?;
        check("pad", |x| x >= 0.0, "must be non-negative")?;
        check("c2", |x| x > 0.0, "must be positive")?;
        check("cp", |x| x > 0.0, "must be positive")?;
        check("a_max", |x| (0.0..1.0).contains(&x), "must lie in [0, 1)")?;
        check(
            "points",
            |x| x.fract() == 0.0 && (8.0..=(1u64 << 26) as f64).contains(&x),
            "must be an integer in [8, 2^26]",
        )?;
        check(
            "steps",
            |x| x.fract() == 0.0 && (1.0..=64.0).contains(&x),
            "must be an integer in [1, 64]",
        )?;
        if cmd == Command::Trajectory {
            check("t", |x| x > 0.0 && x <= 1.0, "must lie in (0, 1]")?;
        } else {
            check("t", |x| x > 0.0, "must be positive")?;
        }
        Ok(())
    }
}

fn flag_name(param: &str) -> String {
    param.replace('_', "-")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunSpec, UsageError> {
        let mut argv = vec!["epi-lab"];
        argv.extend_from_slice(args);
        Cli::try_parse_from(argv).unwrap().into_run_spec()
    }

    #[test]
    fn deficit_flags() {
        let s = parse(&[
            "deficit",
            "--x",
            "gauss:0,1",
            "--y",
            "gauss:0,4",
            "--lambda",
            "0.5",
            "--points",
            "16384",
            "--out",
            "r.json",
        ])
        .unwrap();
        assert_eq!(s.command, Command::Deficit);
        assert_eq!(s.inputs, ["gauss:0,1", "gauss:0,4"]);
        assert_eq!(s.scalar("lambda"), 0.5);
        assert_eq!(s.scalar("points"), 16384.0);
        assert_eq!(s.format(), Format::Json);
    }

    #[test]
    fn theorem9_csv() {
        let s = parse(&[
            "theorem9",
            "--pmf",
            "dgauss:0,4000000",
            "--c2",
            "1e10",
            "--out",
            "t9.csv",
            "--format",
            "csv",
        ])
        .unwrap();
        assert_eq!(s.format(), Format::Csv);
        assert_eq!(s.scalar("c2"), 1e10);
        let inferred = parse(&["theorem9", "--pmf", "geom:0.5", "--out", "t9.csv"]).unwrap();
        assert_eq!(inferred.format(), Format::Csv);
        assert_eq!(inferred.scalar("c2"), 1e10);
    }

    #[test]
    fn usage_errors_name_the_parameter() {
        let e = parse(&["deficit", "--x", "gauss:0,1", "--y", "gauss:0,4"]).unwrap_err();
        assert_eq!(e.param(), Some("lambda"));
        assert!(e.to_string().contains("lambda"));
        let e = parse(&[
            "deficit",
            "--x",
            "gauss:0,1",
            "--y",
            "gauss:0,4",
            "--lambda",
            "1.5",
        ])
        .unwrap_err();
        assert_eq!(e.param(), Some("lambda"));
        let e = parse(&["entropy", "--x", "gauss:0"]).unwrap_err();
        assert_eq!(e.param(), Some("x"));
        let e = parse(&["prop10", "--pmf", "geom:2"]).unwrap_err();
        assert_eq!(e.param(), Some("pmf"));
        let e = parse(&["entropy", "--x", "gauss:0,1", "--lambda", "0.5"]).unwrap_err();
        assert_eq!(e.param(), Some("lambda"));
        let e = parse(&["weak-demo", "--a-max", "1.2"]).unwrap_err();
        assert_eq!(e.param(), Some("a-max"));
        let e = parse(&["entropy", "--x", "gauss:0,1", "--points", "100.5"]).unwrap_err();
        assert_eq!(e.param(), Some("points"));
        assert_eq!(parse(&[]).unwrap_err(), UsageError::NoCommand);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let config = r#"{"command": "deficit", "inputs": ["gauss:0,1", "gauss:0,4"],
                         "params": {"lambda": 0.5, "points": 4096}, "format": "csv"}"#;
        std::fs::write(&path, config).unwrap();
        let p = path.to_str().unwrap();
        let s = parse(&["--config", p, "--y", "gauss:0,2", "--lambda", "0.3"]).unwrap();
        assert_eq!(s.command, Command::Deficit);
        assert_eq!(s.inputs, ["gauss:0,1", "gauss:0,2"]);
        assert_eq!(s.scalar("lambda"), 0.3);
        assert_eq!(s.scalar("points"), 4096.0);
        assert_eq!(s.format(), Format::Csv);

        std::fs::write(&path, r#"{"command": "deficit", "bogus": 1}"#).unwrap();
        assert!(matches!(
            parse(&["--config", p]),
            Err(UsageError::Config { .. })
        ));
    }

    #[test]
    fn spec_json_round_trip() {
        let s = parse(&["debruijn", "--x", "cauchy:0,1", "--t", "0.25,0.5,1"]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: RunSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.list("t").unwrap(), [0.25, 0.5, 1.0]);
        assert_eq!(s.resolved_params().len(), 4);
    }
}
