use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Full run configuration: a TOML file overlaid with command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog name, e.g. `catenoid` or `riemann:λ=2`.
    pub surface: String,
    pub out_dir: PathBuf,
    /// Seed for the randomised perturbation checks.
    pub seed: u64,
    pub mesh: MeshConfig,
    pub tolerances: Tolerances,
    pub flow: FlowConfig,
    pub kdv: KdvConfig,
    pub end: EndConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            surface: "catenoid".into(),
            out_dir: PathBuf::from("wlab-out"),
            seed: 7,
            mesh: MeshConfig::default(),
            tolerances: Tolerances::default(),
            flow: FlowConfig::default(),
            kdv: KdvConfig::default(),
            end: EndConfig::default(),
        }
    }
}

/// Grid sizes; ranges left unset fall back to per-surface defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    /// log|z| range for log-polar meshes.
    pub log_radius: Option<[f64; 2]>,
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { nx: 64, ny: 49, log_radius: None, x_range: None, y_range: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub period: f64,
    pub flux: f64,
    /// Relative, catenoid annulus.
    pub total_curvature: f64,
    /// Relative, Riemann quotient.
    pub total_curvature_quotient: f64,
    pub end_fit: f64,
    pub waist_curvature: f64,
    pub monotonicity: f64,
    pub superharmonic: f64,
    pub shiffman: f64,
    pub shiffman_detect: f64,
    pub miura: f64,
    pub schrodinger: f64,
    pub soliton_shape: f64,
    pub invariants: f64,
    pub ag_residual: f64,
    pub flow_drift: f64,
    pub route: f64,
    pub kernel: f64,
    pub c_minus2: f64,
    pub spacing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            period: 1e-8,
            flux: 1e-8,
            total_curvature: 0.01,
            total_curvature_quotient: 0.02,
            end_fit: 1e-3,
            waist_curvature: 1e-8,
            monotonicity: 1e-6,
            superharmonic: 1e-6,
            shiffman: 1e-7,
            shiffman_detect: 1e-2,
            miura: 1e-8,
            schrodinger: 1e-6,
            soliton_shape: 1e-4,
            invariants: 1e-6,
            ag_residual: 1e-8,
            flow_drift: 1e-5,
            route: 1e-5,
            kernel: 1e-6,
            c_minus2: 0.05,
            spacing: 1e-5,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [(&'static str, f64); 20] {
        [
            ("period", self.period),
            ("flux", self.flux),
            ("total_curvature", self.total_curvature),
            ("total_curvature_quotient", self.total_curvature_quotient),
            ("end_fit", self.end_fit),
            ("waist_curvature", self.waist_curvature),
            ("monotonicity", self.monotonicity),
            ("superharmonic", self.superharmonic),
            ("shiffman", self.shiffman),
            ("shiffman_detect", self.shiffman_detect),
            ("miura", self.miura),
            ("schrodinger", self.schrodinger),
            ("soliton_shape", self.soliton_shape),
            ("invariants", self.invariants),
            ("ag_residual", self.ag_residual),
            ("flow_drift", self.flow_drift),
            ("route", self.route),
            ("kernel", self.kernel),
            ("c_minus2", self.c_minus2),
            ("spacing", self.spacing),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    /// Step-halving tolerance on the local relative error.
    pub step_tol: f64,
    pub gauge: [f64; 2],
    /// Line abscissa; defaults to ω/4 on Riemann data.
    pub x0: Option<f64>,
    /// Write binary dumps of the final g, u and y lines.
    pub dump_lines: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { t_end: 0.05, dt: 1e-4, samples: 64, step_tol: 1e-8, gauge: [0.0, 0.5], x0: None, dump_lines: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdvConfig {
    /// Highest index printed by `kdv hierarchy`.
    pub order: usize,
    /// `rational`, `constant` or a Riemann name for `kdv agtest`.
    pub potential: String,
    pub n_max: usize,
    pub samples: usize,
    pub soliton_speed: f64,
    pub soliton_length: f64,
    pub soliton_samples: usize,
    pub soliton_t: f64,
    pub soliton_dt: f64,
}

impl Default for KdvConfig {
    fn default() -> Self {
        Self {
            order: 3,
            potential: "rational".into(),
            n_max: 3,
            samples: 64,
            soliton_speed: 16.0,
            soliton_length: 20.0,
            soliton_samples: 512,
            soliton_t: 0.05,
            soliton_dt: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndConfig {
    pub index: usize,
    pub r_start: f64,
    pub doublings: usize,
    /// Expected logarithmic growth, checked when set.
    pub expected_a: Option<f64>,
}

impl Default for EndConfig {
    fn default() -> Self {
        Self { index: 0, r_start: 8.0, doublings: 3, expected_a: None }
    }
}

/// Parses an override value as a TOML scalar or array, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), String> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| format!("empty override key '{key}'"))?;
    let mut t = root;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        t = entry.as_table_mut().ok_or_else(|| format!("'{p}' in '{key}' is not a table"))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Loads `path` (if any), applies `key=value` overrides, then validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, String> {
        let mut table = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?
                .parse::<toml::Table>()
                .map_err(|e| format!("bad TOML in {}: {e}", p.display()))?,
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            set_path(&mut table, k, parse_value(v))?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e| format!("bad configuration: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in self.tolerances.all() {
            if !(v > 0.0) {
                return Err(format!("tolerance '{name}' must be positive"));
            }
        }
        for (name, n) in [
            ("flow.samples", self.flow.samples),
            ("kdv.samples", self.kdv.samples),
            ("kdv.soliton_samples", self.kdv.soliton_samples),
        ] {
            if !n.is_power_of_two() || n < 8 {
                return Err(format!("{name} = {n} must be a power of two ≥ 8"));
            }
        }
        if self.mesh.nx < 2 || self.mesh.ny < 2 {
            return Err("mesh needs at least 2×2 nodes".into());
        }
        if !(self.flow.dt > 0.0 && self.flow.step_tol > 0.0 && self.kdv.soliton_dt > 0.0) {
            return Err("time steps and step tolerance must be positive".into());
        }
        if self.flow.t_end.abs() > 0.1 {
            return Err("complex flows are restricted to |T| ≤ 0.1".into());
        }
        if !(1..=5).contains(&self.kdv.n_max) {
            return Err("kdv.n_max must lie in 1..=5".into());
        }
        Ok(())
    }

    /// Surface name reduced to a file stem.
    pub fn stem(&self) -> String {
        stem_of(&self.surface)
    }
}

/// `riemann:λ=2` → `riemann_lambda_2`.
pub fn stem_of(name: &str) -> String {
    name.replace("λ", "lambda")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}
