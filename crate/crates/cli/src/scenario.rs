//! Scenario files: TOML, one per run, validated before anything executes.

use std::collections::BTreeMap;
use std::path::Path;

use momlab_core::classical::{HamiltonianKind, Integrator};
use momlab_core::koopman::{PhaseBoundary, StencilOrder};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Quantum,
    Mixture,
    Berry,
    Klimontovich,
    Kvn,
    Kvh,
    Liouville,
    Uhlmann,
    Hybrid,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Quantum => "quantum",
            System::Mixture => "mixture",
            System::Berry => "berry",
            System::Klimontovich => "klimontovich",
            System::Kvn => "kvn",
            System::Kvh => "kvh",
            System::Liouville => "liouville",
            System::Uhlmann => "uhlmann",
            System::Hybrid => "hybrid",
        }
    }

    pub fn is_phase_grid(self) -> bool {
        matches!(self, System::Kvn | System::Kvh | System::Liouville)
    }

    pub fn diagnostics(self) -> &'static [&'static str] {
        match self {
            System::Quantum => &["trace", "purity", "energy", "noether_energy"],
            System::Mixture => &["trace", "purity", "commuting_square"],
            System::Berry => &["chern_wilson", "chern_differential"],
            System::Klimontovich => &["energy", "energy_drift", "total_weight", "mean_q", "mean_p"],
            System::Kvn | System::Liouville => &["mass", "norm_drift", "leakage"],
            System::Kvh => &["mass", "norm_drift", "leakage", "clebsch_gap"],
            System::Uhlmann => &["trace_commutator", "rho_square", "trace"],
            System::Hybrid => &["min_eigenvalue", "trace", "rho_square"],
        }
    }

    fn recipes(self) -> &'static [&'static str] {
        match self {
            System::Quantum => &["random_state"],
            System::Mixture => &["random_family"],
            System::Berry => &["qwz"],
            System::Klimontovich => &["gaussian_ensemble"],
            System::Kvn | System::Kvh | System::Liouville => &["chirped_packet"],
            System::Uhlmann => &["random_w"],
            System::Hybrid => &["random_hybrid", "pinned_inadmissible"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// Seeded random Hermitian matrix.
    Random { dim: usize },
    PauliX,
    Diagonal { values: Vec<f64> },
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Random { dim } => *dim,
            OperatorSpec::PauliX => 2,
            OperatorSpec::Diagonal { values } => values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<StencilOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<PhaseBoundary>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default = "one")]
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// `exp(−|r − c|²/4σ²) · exp(i k (q + qp/2))` on the phase grid.
    ChirpedPacket { center: [f64; 2], sigma: f64, chirp: f64 },
    RandomState,
    /// `ψ(r) ∝ Σₖ vₖ rᵏ` with seeded random vectors `vₖ`, `k < modes`.
    RandomFamily { modes: usize },
    GaussianEnsemble { particles: usize, center: [f64; 2], spread: f64 },
    RandomW { cols: usize, scale: f64 },
    /// `W = √mixing |φ⟩⟨ψ|` with `φ ⊥ ψ`, so `ρ = (1 − mixing)|ψ⟩⟨ψ| + mixing |φ⟩⟨φ|`.
    RandomHybrid { mixing: f64 },
    PinnedInadmissible,
    Qwz,
}

impl Initial {
    pub fn recipe(&self) -> &'static str {
        match self {
            Initial::ChirpedPacket { .. } => "chirped_packet",
            Initial::RandomState => "random_state",
            Initial::RandomFamily { .. } => "random_family",
            Initial::GaussianEnsemble { .. } => "gaussian_ensemble",
            Initial::RandomW { .. } => "random_w",
            Initial::RandomHybrid { .. } => "random_hybrid",
            Initial::PinnedInadmissible => "pinned_inadmissible",
            Initial::Qwz => "qwz",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write initial and final field/ensemble/matrix snapshots.
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    pub seed: u64,
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    pub initial: Initial,
    pub diagnostics: Vec<String>,
    /// Upper bounds on `max_t |diagnostic|`.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("harmonic_kvn", include_str!("../scenarios/harmonic_kvn.toml")),
    ("free_kvn", include_str!("../scenarios/free_kvn.toml")),
    ("harmonic_kvh", include_str!("../scenarios/harmonic_kvh.toml")),
    ("harmonic_liouville", include_str!("../scenarios/harmonic_liouville.toml")),
    ("quantum_random", include_str!("../scenarios/quantum_random.toml")),
    ("mixture_family", include_str!("../scenarios/mixture_family.toml")),
    ("qwz_berry", include_str!("../scenarios/qwz_berry.toml")),
    ("klimontovich_harmonic", include_str!("../scenarios/klimontovich_harmonic.toml")),
    ("uhlmann_random", include_str!("../scenarios/uhlmann_random.toml")),
    ("hybrid_mixed", include_str!("../scenarios/hybrid_mixed.toml")),
    ("hybrid_pinned", include_str!("../scenarios/hybrid_pinned.toml")),
];

fn schema<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Schema(msg.into()))
}

/// Reads a scenario file, or a bundled scenario by name.
pub fn load_source(spec: &str) -> CliResult<String> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok(std::fs::read_to_string(path)?);
    }
    match BUNDLED.iter().find(|(n, _)| *n == spec) {
        Some((_, text)) => Ok(text.to_string()),
        None => Err(CliError::Io(format!("scenario '{spec}' is neither a file nor a bundled scenario"))),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` in `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return schema(format!("override '{assignment}' is not of the form key=value"));
    };
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return schema(format!("override key '{key}' is malformed"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return schema(format!("override key '{key}': '{part}' is not a table")),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Parses `text`, applies overrides in order, deserializes and validates.
pub fn parse(text: &str, overrides: &[String]) -> CliResult<Scenario> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Schema(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let s: Scenario = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Schema(e.message().trim().to_string()))?;
    s.validate()?;
    Ok(s)
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        schema(format!("key `{key}` must be positive and finite, got {v}"))
    }
}

impl Scenario {
    pub fn validate(&self) -> CliResult<()> {
        let sys = self.system;
        let name = sys.name();
        positive("hbar", self.hbar)?;
        let need = |present: bool, key: &str, required: bool| -> CliResult<()> {
            match (present, required) {
                (false, true) => schema(format!("system {name} requires key `{key}`")),
                (true, false) => schema(format!("key `{key}` is not used by system {name}")),
                _ => Ok(()),
            }
        };
        need(self.hamiltonian.is_some(), "hamiltonian", sys.is_phase_grid() || sys == System::Klimontovich)?;
        need(
            self.operator.is_some(),
            "operator",
            matches!(sys, System::Quantum | System::Mixture | System::Uhlmann | System::Hybrid),
        )?;
        need(self.grid.is_some(), "grid", sys.is_phase_grid() || matches!(sys, System::Berry | System::Mixture))?;
        need(self.time.is_some(), "time", sys != System::Berry)?;
        if !sys.recipes().contains(&self.initial.recipe()) {
            return schema(format!(
                "key `initial.recipe` = \"{}\" is not valid for system {name}; expected one of {:?}",
                self.initial.recipe(),
                sys.recipes()
            ));
        }
        if let Some(g) = &self.grid {
            if g.nodes < 4 {
                return schema(format!("key `grid.nodes` must be at least 4, got {}", g.nodes));
            }
            let phase = sys.is_phase_grid();
            need(g.half_width.is_some(), "grid.half_width", phase)?;
            if g.order.is_some() && !phase {
                return schema(format!("key `grid.order` is not used by system {name}"));
            }
            if g.boundary.is_some() && !phase {
                return schema(format!("key `grid.boundary` is not used by system {name}"));
            }
            if let Some(hw) = g.half_width {
                positive("grid.half_width", hw)?;
            }
        }
        if let Some(t) = &self.time {
            if !(t.t_final.is_finite() && t.t_final >= 0.0) {
                return schema(format!("key `time.t_final` must be non-negative, got {}", t.t_final));
            }
            if let Some(dt) = t.dt {
                positive("time.dt", dt)?;
            }
            if let Some(c) = t.cfl_fraction {
                positive("time.cfl_fraction", c)?;
                if !sys.is_phase_grid() {
                    return schema(format!("key `time.cfl_fraction` is not used by system {name}"));
                }
                if t.dt.is_some() {
                    return schema("keys `time.dt` and `time.cfl_fraction` are mutually exclusive");
                }
            }
            if t.dt.is_none() && !sys.is_phase_grid() {
                return schema(format!("system {name} requires key `time.dt`"));
            }
            if t.integrator.is_some() && sys != System::Klimontovich {
                return schema(format!("key `time.integrator` is not used by system {name}"));
            }
            if t.record_every == 0 {
                return schema("key `time.record_every` must be at least 1");
            }
        }
        if let Some(op) = &self.operator {
            if op.dim() == 0 {
                return schema("key `operator` describes a zero-dimensional operator");
            }
            if let OperatorSpec::Diagonal { values } = op {
                if values.iter().any(|v| !v.is_finite()) {
                    return schema("key `operator.values` must be finite");
                }
            }
        }
        match &self.initial {
            Initial::ChirpedPacket { sigma, center, chirp } => {
                positive("initial.sigma", *sigma)?;
                if !(center.iter().all(|c| c.is_finite()) && chirp.is_finite()) {
                    return schema("keys `initial.center` and `initial.chirp` must be finite");
                }
            }
            Initial::RandomFamily { modes } if *modes == 0 => return schema("key `initial.modes` must be at least 1"),
            Initial::GaussianEnsemble { particles, spread, .. } => {
                if *particles == 0 {
                    return schema("key `initial.particles` must be at least 1");
                }
                positive("initial.spread", *spread)?;
            }
            Initial::RandomW { cols, scale } => {
                if *cols == 0 {
                    return schema("key `initial.cols` must be at least 1");
                }
                positive("initial.scale", *scale)?;
            }
            Initial::RandomHybrid { mixing } => {
                if !(mixing.is_finite() && *mixing > 0.0 && *mixing <= 1.0) {
                    return schema(format!("key `initial.mixing` must lie in (0, 1], got {mixing}"));
                }
            }
            Initial::PinnedInadmissible if self.operator.as_ref().map(|o| o.dim()) != Some(2) => {
                return schema("recipe pinned_inadmissible needs a two-dimensional `operator`");
            }
            _ => {}
        }
        if self.diagnostics.is_empty() {
            return schema("key `diagnostics` must list at least one diagnostic");
        }
        for d in &self.diagnostics {
            if !sys.diagnostics().contains(&d.as_str()) {
                return schema(format!("unknown diagnostic `{d}` in key `diagnostics` for system {name}; expected one of {:?}", sys.diagnostics()));
            }
        }
        for (k, v) in &self.tolerances {
            if !self.diagnostics.contains(k) {
                return schema(format!("key `tolerances.{k}` refers to a diagnostic that is not requested"));
            }
            positive(&format!("tolerances.{k}"), *v)?;
        }
        Ok(())
    }
}
