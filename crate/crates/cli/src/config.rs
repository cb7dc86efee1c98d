//! Flat `key = value` run configuration: parsing and validation.
//!
//! Every experiment is a single parameter tuple, so the format is one file
//! of `key = value` lines (comments start with `#`, lists are
//! comma-separated). Unknown keys are rejected; every constraint violation
//! names the offending key and the constraint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use randwave_core::manifold::{Manifold, Point};

#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Weyl,
    Expectation,
    Variance,
    Tail,
    Uniform,
    Sweep,
    KernelProfile,
    Sogge,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<ExperimentKind> {
        Ok(match s {
            "weyl" => ExperimentKind::Weyl,
            "expectation" => ExperimentKind::Expectation,
            "variance" => ExperimentKind::Variance,
            "tail" => ExperimentKind::Tail,
            "uniform" => ExperimentKind::Uniform,
            "sweep" => ExperimentKind::Sweep,
            "kernel-profile" => ExperimentKind::KernelProfile,
            "sogge" => ExperimentKind::Sogge,
            other => {
                return Err(ConfigError(format!(
                    "unknown experiment '{other}' (expected weyl, expectation, variance, tail, \
                     uniform, sweep, kernel-profile, or sogge)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Weyl => "weyl",
            ExperimentKind::Expectation => "expectation",
            ExperimentKind::Variance => "variance",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Uniform => "uniform",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::KernelProfile => "kernel-profile",
            ExperimentKind::Sogge => "sogge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthRuleKind {
    Constant,
    Power,
    Full,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub manifold_name: String,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub width_rule: WidthRuleKind,
    pub width: f64,
    pub width_coeff: f64,
    pub width_power: f64,
    pub radius: Option<f64>,
    pub radius_alpha: Option<f64>,
    pub radius_coeff: f64,
    pub delta: Option<f64>,
    pub samples: usize,
    pub center: [f64; 2],
    pub t_max: Option<f64>,
    pub t_points: usize,
    pub max_separation: f64,
    pub profile_points: usize,
    pub direction: f64,
    pub radius_grid: Vec<f64>,
    pub out_dir: Option<String>,
    pub plot: bool,
}

impl RunConfig {
    pub fn manifold(&self) -> Manifold {
        Manifold::parse(&self.manifold_name).expect("validated manifold name")
    }

    pub fn center_point(&self) -> Point {
        match self.manifold() {
            Manifold::Torus2 => Point::torus(self.center[0], self.center[1]),
            Manifold::Sphere2 => Point::sphere(self.center[0], self.center[1]),
        }
    }

    /// Radius rule `r = coeff * lambda^{-alpha}` (alpha 0 for a constant r).
    pub fn radius_rule(&self) -> Result<randwave_core::experiments::RadiusRule> {
        match (self.radius, self.radius_alpha) {
            (Some(r), None) => Ok(randwave_core::experiments::RadiusRule::constant(r)),
            (None, Some(alpha)) => Ok(randwave_core::experiments::RadiusRule {
                coeff: self.radius_coeff,
                alpha,
            }),
            (Some(_), Some(_)) => Err(ConfigError(
                "keys 'r' and 'r_alpha' are mutually exclusive".into(),
            )),
            (None, None) => Err(ConfigError(
                "one of 'r' or 'r_alpha' is required for this experiment".into(),
            )),
        }
    }

    pub fn window_rule(&self) -> randwave_core::experiments::WindowRule {
        match self.width_rule {
            WidthRuleKind::Constant => randwave_core::experiments::WindowRule::Constant(self.width),
            WidthRuleKind::Full => randwave_core::experiments::WindowRule::Full,
            WidthRuleKind::Power => randwave_core::experiments::WindowRule::Power {
                coeff: self.width_coeff,
                exponent: self.width_power,
            },
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "manifold",
    "seed",
    "lambda",
    "lambda_grid",
    "W",
    "W_rule",
    "W_coeff",
    "W_power",
    "r",
    "r_alpha",
    "r_coeff",
    "r_grid",
    "delta",
    "samples",
    "center",
    "t_max",
    "t_points",
    "max_separation",
    "profile_points",
    "direction",
    "out_dir",
    "plot",
];

/// Parse the flat key-value text into a validated `RunConfig`.
///
/// `subcommand` is the experiment selected on the command line; a config
/// `experiment` key, when present, must agree with it.
pub fn parse_config(text: &str, subcommand: Option<ExperimentKind>) -> Result<RunConfig> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("unknown key '{key}'")));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError(format!("duplicate key '{key}'")));
        }
    }

    if map.is_empty() && subcommand.is_none() {
        return Err(ConfigError(format!(
            "empty config; required keys: experiment, manifold, seed, plus the experiment's \
             parameters (known keys: {})",
            KNOWN_KEYS.join(", ")
        )));
    }

    let experiment = match (map.get("experiment"), subcommand) {
        (Some(s), Some(sub)) => {
            let from_file = ExperimentKind::parse(s)?;
            if from_file != sub {
                return Err(ConfigError(format!(
                    "config says experiment = {}, but the command line selected {}",
                    from_file.name(),
                    sub.name()
                )));
            }
            from_file
        }
        (Some(s), None) => ExperimentKind::parse(s)?,
        (None, Some(sub)) => sub,
        (None, None) => {
            return Err(ConfigError(
                "key 'experiment' is required when no subcommand is given".into(),
            ))
        }
    };

    let manifold_name = map
        .get("manifold")
        .ok_or_else(|| ConfigError("key 'manifold' is required".into()))?
        .clone();
    Manifold::parse(&manifold_name).map_err(|e| ConfigError(format!("key 'manifold': {e}")))?;

    let seed =
        parse_u64(&map, "seed")?.ok_or_else(|| ConfigError("key 'seed' is required".into()))?;

    // frequency grid: lambda or lambda_grid
    let lambda = parse_f64(&map, "lambda")?;
    let lambda_list = parse_f64_list(&map, "lambda_grid")?;
    let lambda_grid = match (lambda, lambda_list) {
        (Some(_), Some(_)) => {
            return Err(ConfigError(
                "keys 'lambda' and 'lambda_grid' are mutually exclusive".into(),
            ))
        }
        (Some(l), None) => vec![l],
        (None, Some(list)) if !list.is_empty() => list,
        (None, Some(_)) => return Err(ConfigError("key 'lambda_grid' is empty".into())),
        (None, None) => Vec::new(),
    };
    for &l in &lambda_grid {
        if l.is_nan() || l < 0.0 {
            return Err(ConfigError(format!(
                "key 'lambda': frequency must be nonnegative, got {l}"
            )));
        }
    }

    // window rule
    let width = parse_f64(&map, "W")?;
    let width_rule = match map.get("W_rule").map(String::as_str) {
        None => WidthRuleKind::Constant,
        Some("constant") => WidthRuleKind::Constant,
        Some("full") => WidthRuleKind::Full,
        Some("power") => WidthRuleKind::Power,
        Some(other) => {
            return Err(ConfigError(format!(
                "key 'W_rule': expected constant, power, or full, got '{other}'"
            )))
        }
    };
    let width_coeff = parse_f64(&map, "W_coeff")?.unwrap_or(1.0);
    let width_power = parse_f64(&map, "W_power")?.unwrap_or(0.0);
    if width_rule == WidthRuleKind::Power && !map.contains_key("W_power") {
        return Err(ConfigError("W_rule = power requires key 'W_power'".into()));
    }

    // the 1 <= W <= lambda constraint, checked against every grid frequency
    if width_rule == WidthRuleKind::Constant {
        if let Some(w) = width {
            if w < 1.0 {
                return Err(ConfigError(format!(
                    "key 'W': {w} violates 1 <= W <= lambda"
                )));
            }
            for &l in &lambda_grid {
                if w > l {
                    return Err(ConfigError(format!(
                        "key 'W': W = {w} violates 1 <= W <= lambda (lambda = {l})"
                    )));
                }
            }
        }
    }

    let radius = parse_f64(&map, "r")?;
    if let Some(r) = radius {
        if !(r > 0.0 && r <= std::f64::consts::PI) {
            return Err(ConfigError(format!(
                "key 'r': radius {r} violates 0 < r <= pi"
            )));
        }
    }
    let radius_alpha = parse_f64(&map, "r_alpha")?;
    let radius_coeff = parse_f64(&map, "r_coeff")?.unwrap_or(1.0);
    let radius_grid = parse_f64_list(&map, "r_grid")?.unwrap_or_default();

    let delta = parse_f64(&map, "delta")?;
    if let Some(d) = delta {
        if d < 0.0 {
            return Err(ConfigError(format!(
                "key 'delta': exponent must be nonnegative, got {d}"
            )));
        }
    }

    let samples = parse_u64(&map, "samples")?.unwrap_or(0) as usize;

    let center = match map.get("center") {
        None => [0.0, 0.0],
        Some(s) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ConfigError(format!(
                    "key 'center': expected two comma-separated coordinates, got '{s}'"
                )));
            }
            let a = parts[0].parse::<f64>().map_err(|_| {
                ConfigError(format!("key 'center': expected number, got '{}'", parts[0]))
            })?;
            let b = parts[1].parse::<f64>().map_err(|_| {
                ConfigError(format!("key 'center': expected number, got '{}'", parts[1]))
            })?;
            [a, b]
        }
    };

    let t_max = parse_f64(&map, "t_max")?;
    let t_points = parse_u64(&map, "t_points")?.unwrap_or(21) as usize;
    let max_separation = parse_f64(&map, "max_separation")?.unwrap_or(1.0);
    let profile_points = parse_u64(&map, "profile_points")?.unwrap_or(200) as usize;
    let direction = parse_f64(&map, "direction")?.unwrap_or(0.0);
    let out_dir = map.get("out_dir").cloned();
    let plot = match map.get("plot").map(String::as_str) {
        None => false,
        Some("true") => true,
        Some("false") => false,
        Some(other) => {
            return Err(ConfigError(format!(
                "key 'plot': expected true or false, got '{other}'"
            )))
        }
    };

    let config = RunConfig {
        experiment,
        manifold_name,
        seed,
        lambda_grid,
        width_rule,
        width: width.unwrap_or(0.0),
        width_coeff,
        width_power,
        radius,
        radius_alpha,
        radius_coeff,
        delta,
        samples,
        center,
        t_max,
        t_points,
        max_separation,
        profile_points,
        direction,
        radius_grid,
        out_dir,
        plot,
    };
    validate_per_experiment(&config, &map)?;
    Ok(config)
}

fn validate_per_experiment(c: &RunConfig, map: &BTreeMap<String, String>) -> Result<()> {
    let need = |key: &str| -> Result<()> {
        if map.contains_key(key) {
            Ok(())
        } else {
            Err(ConfigError(format!(
                "experiment '{}' requires key '{key}'",
                c.experiment.name()
            )))
        }
    };
    let need_lambda = |c: &RunConfig| -> Result<()> {
        if c.lambda_grid.is_empty() {
            Err(ConfigError(format!(
                "experiment '{}' requires 'lambda' or 'lambda_grid'",
                c.experiment.name()
            )))
        } else {
            Ok(())
        }
    };
    let need_width = |c: &RunConfig| -> Result<()> {
        if c.width_rule == WidthRuleKind::Constant && !map.contains_key("W") {
            Err(ConfigError(format!(
                "experiment '{}' requires 'W' (or a W_rule)",
                c.experiment.name()
            )))
        } else {
            Ok(())
        }
    };
    let need_samples = |c: &RunConfig| -> Result<()> {
        if c.samples == 0 {
            Err(ConfigError(format!(
                "experiment '{}' requires 'samples' >= 1",
                c.experiment.name()
            )))
        } else {
            Ok(())
        }
    };
    match c.experiment {
        ExperimentKind::Weyl => need_lambda(c),
        ExperimentKind::Expectation | ExperimentKind::Variance | ExperimentKind::Tail => {
            need_lambda(c)?;
            need_width(c)?;
            need("r")?;
            need_samples(c)
        }
        ExperimentKind::Uniform => {
            need_lambda(c)?;
            need_width(c)?;
            c.radius_rule().map(|_| ())?;
            need("delta")?;
            need_samples(c)
        }
        ExperimentKind::Sweep => {
            need_lambda(c)?;
            need_width(c)?;
            c.radius_rule().map(|_| ())?;
            need_samples(c)
        }
        ExperimentKind::KernelProfile => {
            need_lambda(c)?;
            need_width(c)
        }
        ExperimentKind::Sogge => {
            need_lambda(c)?;
            need_width(c)?;
            if c.radius_grid.is_empty() {
                return Err(ConfigError(
                    "experiment 'sogge' requires a nonempty 'r_grid'".into(),
                ));
            }
            Ok(())
        }
    }
}

fn parse_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(s) => s
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError(format!("key '{key}': expected number, got '{s}'"))),
    }
}

fn parse_u64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>> {
    match map.get(key) {
        None => Ok(None),
        Some(s) => s
            .parse::<u64>()
            .map(Some)
            .map_err(|_| ConfigError(format!("key '{key}': expected integer, got '{s}'"))),
    }
}

fn parse_f64_list(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>> {
    match map.get(key) {
        None => Ok(None),
        Some(s) => {
            let mut out = Vec::new();
            for part in s.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                out.push(part.parse::<f64>().map_err(|_| {
                    ConfigError(format!("key '{key}': expected number, got '{part}'"))
                })?);
            }
            Ok(Some(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_documented_example_parses() {
        let text = "manifold = torus2\nlambda = 40\nW = 5\nr = 0.3\nsamples = 10000\nseed = 7\n";
        let cfg = parse_config(text, Some(ExperimentKind::Variance)).unwrap();
        assert_eq!(cfg.lambda_grid, vec![40.0]);
        assert_eq!(cfg.width, 5.0);
        assert_eq!(cfg.radius, Some(0.3));
        assert_eq!(cfg.samples, 10000);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn width_above_lambda_is_rejected_with_the_constraint() {
        let text = "manifold = torus2\nlambda = 40\nW = 50\nr = 0.3\nsamples = 100\nseed = 1\n";
        let err = parse_config(text, Some(ExperimentKind::Variance)).unwrap_err();
        assert!(err.0.contains("1 <= W <= lambda"), "{err}");
        assert!(err.0.contains("'W'"), "{err}");
    }

    #[test]
    fn empty_config_lists_required_keys() {
        let err = parse_config("", None).unwrap_err();
        assert!(err.0.contains("experiment"), "{err}");
        assert!(err.0.contains("manifold"), "{err}");
        assert!(err.0.contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "manifold = torus2\nseed = 1\nlambda = 5\nbogus = 3\n";
        let err = parse_config(text, Some(ExperimentKind::Weyl)).unwrap_err();
        assert!(err.0.contains("unknown key 'bogus'"), "{err}");
    }

    #[test]
    fn type_mismatches_name_the_key() {
        let text = "manifold = torus2\nseed = 1\nlambda = abc\n";
        let err = parse_config(text, Some(ExperimentKind::Weyl)).unwrap_err();
        assert!(err.0.contains("'lambda'") && err.0.contains("abc"), "{err}");
    }

    #[test]
    fn experiment_key_must_match_subcommand() {
        let text = "experiment = weyl\nmanifold = torus2\nseed = 1\nlambda = 5\n";
        assert!(parse_config(text, Some(ExperimentKind::Weyl)).is_ok());
        let err = parse_config(text, Some(ExperimentKind::Sweep)).unwrap_err();
        assert!(err.0.contains("command line"), "{err}");
    }

    #[test]
    fn invalid_manifold_is_a_config_error() {
        let text = "manifold = klein_bottle\nseed = 1\nlambda = 5\n";
        let err = parse_config(text, Some(ExperimentKind::Weyl)).unwrap_err();
        assert!(err.0.contains("manifold"), "{err}");
    }

    #[test]
    fn per_experiment_requirements() {
        let base = "manifold = torus2\nseed = 1\nlambda = 12\n";
        // tail needs W, r, samples
        let err = parse_config(base, Some(ExperimentKind::Tail)).unwrap_err();
        assert!(err.0.contains("requires"), "{err}");
        let ok = format!("{base}W = 2\nr = 0.3\nsamples = 2000\n");
        assert!(parse_config(&ok, Some(ExperimentKind::Tail)).is_ok());
        // sogge needs an r_grid
        let err = parse_config(&format!("{base}W = 2\n"), Some(ExperimentKind::Sogge)).unwrap_err();
        assert!(err.0.contains("r_grid"), "{err}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = "manifold = sphere2\nlambda_grid = 10, 20\nW = 2\nr_alpha = 0.5\n\
                    samples = 500\nseed = 42\ndelta = 0.1\nplot = true\n";
        let cfg = parse_config(text, Some(ExperimentKind::Uniform)).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);
    }
}
