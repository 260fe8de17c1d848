use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_pixel::OraclePhase;
use crate::single_pixel::Source;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Count,
    Interf,
    BoundAudit,
    Hadamard,
    Grover,
    Afm,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Count => "count",
            ExperimentKind::Interf => "interf",
            ExperimentKind::BoundAudit => "bound-audit",
            ExperimentKind::Hadamard => "hadamard",
            ExperimentKind::Grover => "grover",
            ExperimentKind::Afm => "afm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "count" => ExperimentKind::Count,
            "interf" => ExperimentKind::Interf,
            "bound-audit" | "bound_audit" => ExperimentKind::BoundAudit,
            "hadamard" => ExperimentKind::Hadamard,
            "grover" => ExperimentKind::Grover,
            "afm" => ExperimentKind::Afm,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// One swept parameter and the values it takes, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

/// Everything needed to reproduce a run. Keys not relevant to `kind` are
/// carried along but ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Monte Carlo trials per setting; 0 means analytic rows only.
    pub trials: u64,
    pub pe: f64,
    /// Explicit two-object task for `count`, `bound-audit` and `afm`; when
    /// unset those kinds use `alpha -+ eps`.
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    /// Mean transparency and contrast.
    pub alpha: f64,
    pub eps: f64,
    /// Pixel count exponent, `M = 2^m`, for `hadamard` and `grover`.
    pub m: u32,
    /// Interferometer passes; `None` picks `round(1/delta)`.
    pub k: Option<u32>,
    /// Grover iterations; `None` picks `round((pi/4) sqrt(M))`.
    pub iterations: Option<u64>,
    /// Marked Grover mode; `None` marks the last one.
    pub marked: Option<usize>,
    pub beta2: f64,
    pub phase: OraclePhase,
    pub source: Source,
    /// Random scripts per `bound-audit` setting and their size limits.
    pub scripts: u64,
    pub ancilla_max: usize,
    pub photon_max: usize,
    pub stages_max: usize,
    pub sweep: Option<Sweep>,
    pub out: Option<String>,
    pub format: ReportFormat,
}

impl ExperimentConfig {
    /// Defaults for everything except the seed.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            trials: 0,
            pe: 0.1,
            alpha1: None,
            alpha2: None,
            alpha: 0.6,
            eps: 0.01,
            m: 3,
            k: None,
            iterations: None,
            marked: None,
            beta2: 1e-4,
            phase: OraclePhase::Pi,
            source: Source::Fock,
            scripts: 100,
            ancilla_max: 3,
            photon_max: 3,
            stages_max: 5,
            sweep: None,
            out: None,
            format: ReportFormat::Csv,
        }
    }

    /// Builds a config from `key = value` settings. `kind` and `seed` are required.
    pub fn from_settings(settings: &BTreeMap<String, String>) -> Result<Self> {
        let kind_text = settings
            .get("kind")
            .ok_or_else(|| Error::config("kind", "missing"))?;
        let kind = ExperimentKind::parse(kind_text)
            .ok_or_else(|| Error::config("kind", format!("unknown experiment kind `{kind_text}`")))?;
        let seed_text = settings
            .get("seed")
            .ok_or_else(|| Error::config("seed", "missing; every experiment needs a seed"))?;
        let mut cfg = Self::new(kind, parse_field("seed", seed_text)?);
        for (key, value) in settings {
            if key != "kind" && key != "seed" {
                cfg.set(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let v = value.trim();
        match key.as_str() {
            "kind" => {
                self.kind = ExperimentKind::parse(v)
                    .ok_or_else(|| Error::config("kind", format!("unknown experiment kind `{v}`")))?
            }
            "seed" => self.seed = parse_field("seed", v)?,
            "trials" => self.trials = parse_field("trials", v)?,
            "pe" => self.pe = parse_field("pe", v)?,
            "alpha1" => self.alpha1 = Some(parse_field("alpha1", v)?),
            "alpha2" => self.alpha2 = Some(parse_field("alpha2", v)?),
            "alpha" => self.alpha = parse_field("alpha", v)?,
            "eps" => self.eps = parse_field("eps", v)?,
            "m" => self.m = parse_field("m", v)?,
            "k" => self.k = parse_auto("k", v)?,
            "iterations" => self.iterations = parse_auto("iterations", v)?,
            "marked" => self.marked = parse_auto("marked", v)?,
            "beta2" => self.beta2 = parse_field("beta2", v)?,
            "phase" => {
                self.phase = match v {
                    "pi" => OraclePhase::Pi,
                    _ => OraclePhase::Eps(parse_field("phase", v)?),
                }
            }
            "source" => {
                self.source = match v {
                    "fock" => Source::Fock,
                    "poisson" => Source::Poisson,
                    _ => return Err(Error::config("source", format!("expected fock or poisson, got `{v}`"))),
                }
            }
            "scripts" => self.scripts = parse_field("scripts", v)?,
            "ancilla_max" => self.ancilla_max = parse_field("ancilla_max", v)?,
            "photon_max" => self.photon_max = parse_field("photon_max", v)?,
            "stages_max" => self.stages_max = parse_field("stages_max", v)?,
            "sweep" => self.sweep = Some(parse_sweep(v)?),
            "out" => self.out = Some(v.to_string()),
            "format" => {
                self.format = match v {
                    "csv" => ReportFormat::Csv,
                    "json" => ReportFormat::Json,
                    _ => return Err(Error::config("format", format!("expected csv or json, got `{v}`"))),
                }
            }
            _ => return Err(Error::config(key.clone(), "unknown key")),
        }
        Ok(())
    }

    /// Range checks that do not need the protocol code.
    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::config(field, format!("must lie in [0, 1], got {x}")))
            }
        };
        if !(self.pe > 0.0 && self.pe <= 0.5) {
            return Err(Error::config("pe", format!("must lie in (0, 1/2], got {}", self.pe)));
        }
        if let Some(a) = self.alpha1 {
            unit("alpha1", a)?;
        }
        if let Some(a) = self.alpha2 {
            unit("alpha2", a)?;
        }
        if self.alpha1.is_some() != self.alpha2.is_some() {
            let field = if self.alpha1.is_some() { "alpha2" } else { "alpha1" };
            return Err(Error::config(field, "alpha1 and alpha2 must be given together"));
        }
        unit("alpha", self.alpha)?;
        unit("eps", self.eps)?;
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", format!("must lie in [0, 1), got {}", self.beta2)));
        }
        if self.m > 30 {
            return Err(Error::config("m", format!("exponent {} is far beyond any supported size", self.m)));
        }
        if self.k == Some(0) {
            return Err(Error::config("k", "needs at least one pass"));
        }
        if self.stages_max == 0 {
            return Err(Error::config("stages_max", "needs at least one stage"));
        }
        if let Some(sweep) = &self.sweep {
            let two_object = matches!(self.kind, ExperimentKind::Count | ExperimentKind::BoundAudit | ExperimentKind::Afm);
            if two_object && self.alpha1.is_some() && matches!(sweep.param.as_str(), "alpha" | "eps") {
                return Err(Error::config("sweep", "alpha1/alpha2 fix the task, so sweeping alpha or eps has no effect"));
            }
            let mut probe = self.clone();
            probe.sweep = None;
            for v in &sweep.values {
                probe.set(&sweep.param, &format_value(*v))?;
                probe.validate()?;
            }
        }
        Ok(())
    }

    /// `(alpha1, alpha2)`, falling back to `(alpha - eps, alpha + eps)`.
    pub fn task_pair(&self) -> (f64, f64) {
        match (self.alpha1, self.alpha2) {
            (Some(a1), Some(a2)) => (a1, a2),
            _ => (self.alpha - self.eps, self.alpha + self.eps),
        }
    }

    /// The configuration of one sweep point.
    pub fn at_point(&self, value: f64) -> Result<Self> {
        let mut point = self.clone();
        point.sweep = None;
        if let Some(sweep) = &self.sweep {
            point.set(&sweep.param, &format_value(value))?;
        }
        Ok(point)
    }
}

fn normalize_key(key: &str) -> String {
    let k = key.trim().trim_start_matches("--").replace('-', "_");
    match k.as_str() {
        "s" => "ancilla_max".into(),
        "n_max" => "photon_max".into(),
        "stages" => "stages_max".into(),
        _ => k,
    }
}

/// Shortest text that parses back to `v`; integral values print without a fraction.
fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(field, format!("cannot parse `{v}`")))
}


fn parse_auto<T: std::str::FromStr>(field: &str, v: &str) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_field(field, v).map(Some)
    }
}

/// `param = v1, v2, ...` (or `param: v1, v2, ...`).
fn parse_sweep(v: &str) -> Result<Sweep> {
    let (param, list) = v
        .split_once(['=', ':'])
        .ok_or_else(|| Error::config("sweep", "expected `param=v1,v2,...`"))?;
    let param = normalize_key(param);
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_field("sweep", s))
        .collect::<Result<Vec<f64>>>()?;
    if matches!(param.as_str(), "kind" | "seed" | "sweep" | "out" | "format" | "source") {
        return Err(Error::config("sweep", format!("`{param}` cannot be swept")));
    }
    Ok(Sweep { param, values })
}

/// Parses a `key = value` file; `#` starts a comment.
pub fn parse_settings(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        out.insert(normalize_key(k), v.trim().to_string());
    }
    Ok(out)
}

/// Layers `overrides` on top of `base`; later layers win.
pub fn merge_settings(base: BTreeMap<String, String>, overrides: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut merged = base;
    for (k, v) in overrides {
        merged.insert(normalize_key(k), v.clone());
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn file_then_overrides() {
        let file = parse_settings("kind = count\nseed = 7 # fixed\n\npe = 0.2\nalpha1=0.59\nalpha2 = 0.61\n").unwrap();
        let cli = settings(&[("pe", "0.05"), ("--trials", "10")]);
        let cfg = ExperimentConfig::from_settings(&merge_settings(file, &cli)).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Count);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.pe, 0.05);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.alpha1, Some(0.59));
        assert!(matches!(
            ExperimentConfig::from_settings(&settings(&[("kind", "afm"), ("seed", "1"), ("alpha1", "0.5")])),
            Err(Error::Config { ref field, .. }) if field == "alpha2"
        ));
    }

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::from_settings(&settings(&[("kind", "count")])).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "seed"));
    }

    #[test]
    fn field_level_errors() {
        let base = [("kind", "grover"), ("seed", "1")];
        for (key, bad) in [("pe", "0.7"), ("beta2", "1"), ("alpha", "x"), ("format", "xml"), ("bogus", "1")] {
            let mut s = settings(&base);
            s.insert(key.into(), bad.into());
            match ExperimentConfig::from_settings(&s) {
                Err(Error::Config { field, .. }) => assert_eq!(field, key),
                other => panic!("{key}: {other:?}"),
            }
        }
        assert!(matches!(parse_settings("kind count"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sweeps() {
        let s = settings(&[("kind", "count"), ("seed", "1"), ("sweep", "eps = 0.02, 0.01,0.005")]);
        let cfg = ExperimentConfig::from_settings(&s).unwrap();
        let sweep = cfg.sweep.clone().unwrap();
        assert_eq!(sweep.param, "eps");
        assert_eq!(sweep.values, vec![0.02, 0.01, 0.005]);
        assert_eq!(cfg.at_point(0.005).unwrap().eps, 0.005);
        let m = settings(&[("kind", "hadamard"), ("seed", "1"), ("sweep", "m: 3,4")]);
        assert_eq!(ExperimentConfig::from_settings(&m).unwrap().at_point(4.0).unwrap().m, 4);
        let bad = settings(&[("kind", "count"), ("seed", "1"), ("sweep", "pe=0.1,0.9")]);
        assert!(ExperimentConfig::from_settings(&bad).is_err());
        let ignored = settings(&[("kind", "count"), ("seed", "1"), ("alpha1", "0.6"), ("alpha2", "0.62"), ("sweep", "eps=0.1")]);
        assert!(ExperimentConfig::from_settings(&ignored).is_err());
        let plain = ExperimentConfig::new(ExperimentKind::Count, 0).at_point(0.0).unwrap();
        assert_eq!(plain.task_pair(), (0.59, 0.61));
    }

    #[test]
    fn auto_and_phase() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Grover, 0);
        cfg.set("phase", "0.01").unwrap();
        assert_eq!(cfg.phase, OraclePhase::Eps(0.01));
        cfg.set("iterations", "auto").unwrap();
        assert_eq!(cfg.iterations, None);
        cfg.set("k", "3").unwrap();
        assert_eq!(cfg.k, Some(3));
    }
}
