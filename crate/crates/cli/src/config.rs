//! Experiment configuration: one JSON document plus `--a.b value` overrides.

use crate::failure::Failure;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};
use whitham_core::dispersion::{commutator_region_grid, make_builtin, CommutatorSample, SampleGrid, SymbolSpec};
use whitham_core::evolve::SolverConfig;
use whitham_core::expr::Expr;
use whitham_core::spectral::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifySymbol,
    IdentityCheck,
    Simulate,
    EnergyScan,
    QuarticScan,
    LifespanScan,
    CommutatorScan,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        f.write_str(s.as_str().unwrap())
    }
}

/// `{"name": "whitham"}`, `{"name": "smooth_fkdv", "alpha": 0.5}`,
/// `{"name": "capillary_whitham", "beta": 1}` or
/// `{"name": "custom", "alpha": .., "j_star": .., "p": "<expression in xi>"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDesc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_star: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    /// Leading local coefficient of a custom symbol; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tilde: Option<f64>,
}

impl Default for SymbolDesc {
    fn default() -> Self {
        SymbolDesc { name: "whitham".into(), alpha: None, beta: None, j_star: None, p: None, p_tilde: None }
    }
}

impl SymbolDesc {
    pub fn build(&self) -> Result<SymbolSpec, Failure> {
        let bad = |m: String| Failure::validation(format!("symbol: {m}"));
        let extra = |allowed: &[&str]| -> Result<(), Failure> {
            let given = [
                ("alpha", self.alpha.is_some()),
                ("beta", self.beta.is_some()),
                ("j_star", self.j_star.is_some()),
                ("p", self.p.is_some()),
                ("p_tilde", self.p_tilde.is_some()),
            ];
            match given.iter().find(|(k, set)| *set && !allowed.contains(k)) {
                Some((k, _)) => Err(bad(format!("`{}` does not take `{k}`", self.name))),
                None => Ok(()),
            }
        };
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| bad(format!("`{}` needs `{k}`", self.name)));
        let spec = match self.name.as_str() {
            "whitham" | "bessel" => {
                extra(&[])?;
                make_builtin(&self.name, &[])
            }
            "capillary_whitham" => {
                extra(&["beta"])?;
                make_builtin(&self.name, &[need(self.beta, "beta")?])
            }
            "smooth_fkdv" | "fkdv" => {
                extra(&["alpha"])?;
                make_builtin(&self.name, &[need(self.alpha, "alpha")?])
            }
            "custom" => {
                extra(&["alpha", "j_star", "p", "p_tilde"])?;
                let alpha = need(self.alpha, "alpha")?;
                let j_star = self.j_star.ok_or_else(|| bad("`custom` needs `j_star`".into()))?;
                let p = self.p.as_deref().ok_or_else(|| bad("`custom` needs `p`".into()))?;
                SymbolSpec::custom("custom", alpha, j_star, p, self.p_tilde)
            }
            other => return Err(bad(format!("unknown symbol `{other}`"))),
        };
        spec.map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_points: 256, scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundGridKind {
    Polar,
    Log,
}

/// Wavenumber pairs for the bound checks. `n_angles` applies to the polar
/// grid only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundGridConfig {
    pub kind: BoundGridKind,
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
    pub n_angles: usize,
}

impl Default for BoundGridConfig {
    fn default() -> Self {
        BoundGridConfig { kind: BoundGridKind::Polar, lo: 1e-2, hi: 1e2, per_decade: 10, n_angles: 16 }
    }
}

impl BoundGridConfig {
    pub fn grid(&self) -> SampleGrid {
        match self.kind {
            BoundGridKind::Polar => SampleGrid::polar(self.lo, self.hi, self.per_decade, self.n_angles),
            BoundGridKind::Log => SampleGrid::log(self.lo, self.hi, self.per_decade),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorConfig {
    pub xi_max: f64,
    pub n_xi: usize,
    pub n_offsets: usize,
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        CommutatorConfig { xi_max: 1e3, n_xi: 50, n_offsets: 20 }
    }
}

impl CommutatorConfig {
    pub fn samples(&self) -> Result<Vec<CommutatorSample>, Failure> {
        if !(self.xi_max > 1.0 && self.xi_max.is_finite()) || self.n_xi == 0 || self.n_offsets == 0 {
            return Err(Failure::validation("commutator: need xi_max > 1, n_xi >= 1 and n_offsets >= 1"));
        }
        Ok(commutator_region_grid(self.xi_max, self.n_xi, self.n_offsets))
    }

    pub fn refined(&self) -> Self {
        CommutatorConfig { xi_max: self.xi_max, n_xi: 2 * self.n_xi, n_offsets: 2 * self.n_offsets }
    }
}

/// Pass/fail thresholds of the checking experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub symbol_identity: f64,
    pub bound_drift: f64,
    pub bilinear_identity: f64,
    pub cancellation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { symbol_identity: 1e-12, bound_drift: 0.1, bilinear_identity: 1e-10, cancellation: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub symbol: SymbolDesc,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub amplitudes: Vec<f64>,
    /// Initial condition, an expression in `x`.
    pub profile: String,
    pub n_max: u32,
    /// Derivative order for quartic-scan.
    pub order: u32,
    pub seed: u64,
    /// Random samples per symbol identity check.
    pub samples: usize,
    /// Random fields for identity-check.
    pub fields: usize,
    /// Spectral decay of the identity-check fields.
    pub decay: f64,
    pub bound_grid: BoundGridConfig,
    pub commutator: CommutatorConfig,
    pub tolerances: Tolerances,
    /// Pseudoproduct block size; benchmarked at startup when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            symbol: SymbolDesc::default(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            amplitudes: vec![0.4, 0.2, 0.1, 0.05],
            profile: "cos(x)".into(),
            n_max: 3,
            order: 3,
            seed: 0,
            samples: 10_000,
            fields: 20,
            decay: 1.0,
            bound_grid: BoundGridConfig::default(),
            commutator: CommutatorConfig::default(),
            tolerances: Tolerances::default(),
            block_size: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults, overlaid by the config file, overlaid by the overrides.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, Failure> {
        let mut doc = serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::validation(format!("config: cannot read {}: {e}", path.display())))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("config: {}: {e}", path.display())))?;
            if !file.is_object() {
                return Err(Failure::validation("config: top level must be a JSON object"));
            }
            merge(&mut doc, file);
        }
        for (key, raw) in parse_overrides(overrides)? {
            set_path(&mut doc, &key, &raw)?;
        }
        serde_json::from_value(doc).map_err(|e| Failure::validation(format!("config: {e}")))
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        Grid::new(self.grid.n_points, self.grid.scale).map_err(|e| Failure::validation(format!("grid: {e}")))
    }

    pub fn profile_field(&self) -> Result<Field, Failure> {
        let expr = Expr::parse(&self.profile, "x").map_err(|e| Failure::validation(format!("profile: {e}")))?;
        Field::from_expression(self.grid()?, &expr).map_err(|e| Failure::numerical(format!("profile: {e}")))
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Splits `--a.b value` and `--a.b=value` into key/value pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Failure::validation(format!("override: expected `--path value`, got `{arg}`")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Failure::validation(format!("override: `--{flag}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Failure::validation(format!("override: bad path `{key}`")));
        }
        out.push((key, value));
    }
    Ok(out)
}

/// Sets a dotted path. The value is read as JSON unless the current value
/// is a string or the text is not valid JSON.
fn set_path(doc: &mut Value, key: &str, raw: &str) -> Result<(), Failure> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Failure::validation(format!("override: `{key}` does not name a config field")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Failure::validation(format!("override: `{key}` does not name a config field")))?;
    let last = parts[parts.len() - 1];
    let value = match obj.get(last) {
        Some(Value::String(_)) => Value::String(raw.to_string()),
        _ => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())),
    };
    obj.insert(last.to_string(), value);
    Ok(())
}
