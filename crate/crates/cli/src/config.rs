//! Run configuration: strict JSON schema, command-line overrides and grid expansion.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use crate::registry::{HamiltonianKind, Inputs, Model};
use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Qfim,
    Scenario,
    Bounds,
    Measurement,
    Gaussian,
    Grape,
    Thermo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Qfim => "qfim",
            Command::Scenario => "scenario",
            Command::Bounds => "bounds",
            Command::Measurement => "measurement",
            Command::Gaussian => "gaussian",
            Command::Grape => "grape",
            Command::Thermo => "thermo",
        }
    }
}

/// Route used to obtain the QFIM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Pair sum in the eigenbasis of ρ.
    Eigenbasis,
    /// SLDs from the vectorized linear system.
    Liouville,
    /// SLDs from the Neumann series.
    Series,
    /// Bloch-vector formula.
    Bloch,
    /// Basis-free qubit formula.
    QubitClosedForm,
    /// Pure-state overlaps.
    Pure,
    /// Generators of a unitary encoding.
    Unitary,
    /// Gaussian moments.
    Gaussian,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eigenbasis => "eigenbasis",
            Method::Liouville => "liouville",
            Method::Series => "series",
            Method::Bloch => "bloch",
            Method::QubitClosedForm => "qubit-closed-form",
            Method::Pure => "pure",
            Method::Unitary => "unitary",
            Method::Gaussian => "gaussian",
        }
    }
}

/// Values along one grid axis: a list, or `{"start", "stop", "count"}` spaced evenly.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis(pub Vec<f64>);

impl<'de> Deserialize<'de> for GridAxis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct AxisVisitor;

        impl<'de> Visitor<'de> for AxisVisitor {
            type Value = GridAxis;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of numbers or {\"start\", \"stop\", \"count\"}")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<GridAxis, A::Error> {
                let mut v = Vec::new();
                while let Some(x) = seq.next_element::<f64>()? {
                    v.push(x);
                }
                Ok(GridAxis(v))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<GridAxis, A::Error> {
                let (mut start, mut stop, mut count) = (None, None, None);
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "start" => start = Some(map.next_value::<f64>()?),
                        "stop" => stop = Some(map.next_value::<f64>()?),
                        "count" => count = Some(map.next_value::<usize>()?),
                        other => return Err(de::Error::unknown_field(other, &["start", "stop", "count"])),
                    }
                }
                let start = start.ok_or_else(|| de::Error::missing_field("start"))?;
                let stop = stop.ok_or_else(|| de::Error::missing_field("stop"))?;
                let count = count.ok_or_else(|| de::Error::missing_field("count"))?;
                Ok(GridAxis(linspace(start, stop, count)))
            }
        }

        deserializer.deserialize_any(AxisVisitor)
    }
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|k| if k == n - 1 { stop } else { start + (stop - start) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PovmKind {
    /// Eigenbasis of the SLD of one parameter.
    #[default]
    Sld,
    Computational,
    /// Seeded random POVM.
    Random,
    /// Projectors around ψ(x − δ) in the δ → 0 limit (pure families).
    OptimalPure,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct PovmConfig {
    pub kind: PovmKind,
    /// Parameter whose SLD is diagonalized.
    pub param: usize,
    /// Outcome count of a random POVM.
    pub outcomes: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrapeProblemKind {
    /// H = Bσz with σz dephasing, σx and σy controls.
    #[default]
    DephasingQubit,
    /// Two qubits in B1·Z1 + B2·Z2 + J·XX/2 with local dephasing and local x, y controls.
    TwoQubit,
}

impl GrapeProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            GrapeProblemKind::DephasingQubit => "dephasing-qubit",
            GrapeProblemKind::TwoQubit => "two-qubit",
        }
    }

    pub fn inputs(self) -> &'static [(&'static str, f64)] {
        match self {
            GrapeProblemKind::DephasingQubit => &[("B", 0.8), ("gamma", 0.1), ("t", 2.0)],
            GrapeProblemKind::TwoQubit => &[
                ("B1", 0.7),
                ("B2", 1.1),
                ("J", 1.0),
                ("gamma1", 0.1),
                ("gamma2", 0.16),
                ("t", 2.0),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    #[default]
    Qfi,
    Cfi,
    FEff,
    IEff,
    F0Qfim,
    F0Cfim,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialControls {
    Zero,
    /// Uniform in ±`init_scale`, seeded.
    #[default]
    Random,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default)]
pub struct GrapeConfig {
    pub problem: GrapeProblemKind,
    pub slices: usize,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub objective: ObjectiveKind,
    /// Parameter index for `qfi` and `cfi`.
    pub param: usize,
    pub gradient: GradientKind,
    pub init: InitialControls,
    pub init_scale: f64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        GrapeConfig {
            problem: GrapeProblemKind::default(),
            slices: 10,
            learning_rate: 0.01,
            max_iterations: 200,
            tolerance: 1e-8,
            objective: ObjectiveKind::default(),
            param: 0,
            gradient: GradientKind::default(),
            init: InitialControls::default(),
            init_scale: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientKind {
    #[default]
    Exact,
    FirstOrder,
}

/// Configuration file contents. Every field is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// `builtin:<name>`
    pub family: Option<String>,
    pub scenario: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub grid: BTreeMap<String, GridAxis>,
    pub method: Option<Method>,
    pub repetitions: Option<u64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub hamiltonian: Option<HamiltonianKind>,
    /// Second-port Fock amplitudes as [re, im] pairs.
    pub chi: Option<Vec<[f64; 2]>>,
    pub povm: Option<PovmConfig>,
    pub grape: Option<GrapeConfig>,
}

/// Parses a JSON config, reporting every unknown key and the path of any type error.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut unknown = Vec::new();
    let mut json = serde_json::Deserializer::from_str(text);
    let mut record = |path: serde_ignored::Path<'_>| {
        unknown.push(path.to_string().split('.').filter(|s| *s != "?").collect::<Vec<_>>().join("."))
    };
    let parsed: Result<RunConfig, _> =
        serde_path_to_error::deserialize(serde_ignored::Deserializer::new(&mut json, &mut record));
    let mut errors: Vec<String> = unknown.iter().map(|k| format!("{k}: unknown key")).collect();
    match parsed {
        Ok(cfg) => {
            if let Err(e) = json.end() {
                errors.push(format!("trailing characters: {e}"));
            }
            if errors.is_empty() {
                Ok(cfg)
            } else {
                Err(CliError::Config(errors))
            }
        }
        Err(e) => {
            let path = e.path().to_string();
            let path = if path == "." { "(root)".to_string() } else { path };
            errors.push(format!("{path}: {}", e.into_inner()));
            Err(CliError::Config(errors))
        }
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub family: Option<String>,
    pub scenario: Option<String>,
    pub params: Vec<(String, f64)>,
    pub method: Option<Method>,
    pub repetitions: Option<u64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    /// Applies command-line values; an input given there replaces any grid axis of the same name.
    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($f:ident),*) => { $(if o.$f.is_some() { self.$f = o.$f; })* };
        }
        set!(family, scenario, method, repetitions, tol, seed, out, csv);
        for (k, v) in o.params {
            self.grid.remove(&k);
            self.params.insert(k, v);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Family(Model),
    Scenario(Model),
    Grape(GrapeProblemKind),
}

/// A validated run: one `Inputs` per grid point plus the shared settings.
#[derive(Clone, Debug)]
pub struct Plan {
    pub command: Command,
    pub target: Target,
    pub points: Vec<Inputs>,
    pub method: Method,
    pub repetitions: u64,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub config: RunConfig,
}

impl Plan {
    pub fn target_label(&self) -> String {
        match self.target {
            Target::Family(m) => format!("builtin:{}", m.family_name().unwrap_or("?")),
            Target::Scenario(_) => self.config.scenario.clone().unwrap_or_default(),
            Target::Grape(k) => k.name().to_string(),
        }
    }

    pub fn model(&self) -> Option<Model> {
        match self.target {
            Target::Family(m) | Target::Scenario(m) => Some(m),
            Target::Grape(_) => None,
        }
    }
}

fn family_list() -> String {
    crate::registry::family_names().map(|n| format!("builtin:{n}")).collect::<Vec<_>>().join(", ")
}

/// Validates `cfg` for `command` and expands its grid. All problems are reported together.
pub fn resolve(cfg: RunConfig, command: Command) -> Result<Plan, CliError> {
    let mut errors = Vec::new();
    if let Some(c) = cfg.command {
        if c != command {
            errors.push(format!("command: config is for '{}' but '{}' was requested", c.name(), command.name()));
        }
    }

    let target = match command {
        Command::Scenario => match cfg.scenario.as_deref() {
            None => {
                errors.push("scenario: no scenario id given".into());
                None
            }
            Some(id) => Model::scenario(id).map(Target::Scenario).or_else(|| {
                let ids: Vec<_> = crate::registry::scenario_ids().collect();
                errors.push(format!("scenario: unknown id '{id}' (known: {})", ids.join(", ")));
                None
            }),
        },
        Command::Grape => Some(Target::Grape(cfg.grape.clone().unwrap_or_default().problem)),
        _ => {
            let name = cfg.family.clone().or(match command {
                Command::Thermo => Some("builtin:thermal".into()),
                Command::Gaussian => Some("builtin:gaussian-phase".into()),
                _ => None,
            });
            match name {
                None => {
                    errors.push(format!("family: required for '{}' (one of {})", command.name(), family_list()));
                    None
                }
                Some(n) if !n.starts_with("builtin:") => {
                    errors.push(format!("family: '{n}' must have the form builtin:<name>"));
                    None
                }
                Some(n) => match Model::family(&n) {
                    None => {
                        errors.push(format!("family: unknown family '{n}' (known: {})", family_list()));
                        None
                    }
                    Some(m) => {
                        let ok = match command {
                            Command::Gaussian => m.is_gaussian(),
                            Command::Thermo => m == Model::Thermal,
                            Command::Measurement => !m.is_gaussian() && !matches!(m, Model::Noon | Model::Ecs),
                            _ => true,
                        };
                        if !ok {
                            errors.push(format!("family: '{n}' cannot be used with '{}'", command.name()));
                        }
                        Some(Target::Family(m))
                    }
                },
            }
        }
    };

    if cfg.family.is_some() && matches!(command, Command::Scenario | Command::Grape) {
        errors.push(format!("family: not used by '{}'", command.name()));
    }
    if cfg.scenario.is_some() && command != Command::Scenario {
        errors.push("scenario: only valid for the scenario command".into());
    }
    if cfg.povm.is_some() && command != Command::Measurement {
        errors.push("povm: only valid for the measurement command".into());
    }
    if cfg.grape.is_some() && command != Command::Grape {
        errors.push("grape: only valid for the grape command".into());
    }
    if command == Command::Grape && !cfg.grid.is_empty() {
        errors.push("grid: the grape command runs a single point".into());
    }
    if let Some(t) = cfg.tol {
        if !(t > 0.0 && t.is_finite()) {
            errors.push(format!("tol: must be positive, got {t}"));
        }
    }
    if cfg.repetitions == Some(0) {
        errors.push("repetitions: must be at least 1".into());
    }
    if let Some(g) = &cfg.grape {
        if g.slices == 0 {
            errors.push("grape.slices: must be at least 1".into());
        }
        if !(g.learning_rate > 0.0 && g.learning_rate.is_finite()) {
            errors.push("grape.learning_rate: must be positive".into());
        }
        if g.max_iterations == 0 {
            errors.push("grape.max_iterations: must be at least 1".into());
        }
    }
    if let Some(p) = &cfg.povm {
        if p.kind == PovmKind::Random && p.outcomes.is_some_and(|k| k == 0) {
            errors.push("povm.outcomes: must be at least 1".into());
        }
    }

    let model = match target {
        Some(Target::Family(m)) | Some(Target::Scenario(m)) => Some(m),
        _ => None,
    };
    if cfg.chi.is_some() && model != Some(Model::Mzi) {
        errors.push("chi: only valid for the mzi scenario".into());
    }
    if cfg.hamiltonian.is_some() && model != Some(Model::Thermal) {
        errors.push("hamiltonian: only valid for the thermal family".into());
    }

    let method = match (model, cfg.method) {
        (Some(m), Some(method)) => {
            if !method_supported(m, method) {
                errors.push(format!("method: '{}' is not available for this model", method.name()));
            }
            method
        }
        (Some(m), None) => m.default_method(),
        (None, Some(_)) => {
            errors.push("method: not used by the grape command".into());
            Method::Eigenbasis
        }
        (None, None) => Method::Eigenbasis,
    };

    let declared: &[(&'static str, f64)] = match target {
        Some(Target::Family(m)) | Some(Target::Scenario(m)) => m.inputs(),
        Some(Target::Grape(k)) => k.inputs(),
        None => &[],
    };
    if target.is_some() {
        let names: Vec<_> = declared.iter().map(|d| d.0).collect();
        for (section, keys) in [("params", cfg.params.keys().collect::<Vec<_>>()), ("grid", cfg.grid.keys().collect())] {
            for k in keys {
                if !names.contains(&k.as_str()) {
                    errors.push(format!("{section}.{k}: unknown input (expected one of {})", names.join(", ")));
                }
            }
        }
        for k in cfg.params.keys().filter(|k| cfg.grid.contains_key(*k)) {
            errors.push(format!("params.{k}: also given as a grid axis"));
        }
        for (k, v) in &cfg.params {
            if !v.is_finite() {
                errors.push(format!("params.{k}: must be finite"));
            }
        }
        for (k, axis) in &cfg.grid {
            if axis.0.is_empty() {
                errors.push(format!("grid.{k}: needs at least one value"));
            }
            if axis.0.iter().any(|v| !v.is_finite()) {
                errors.push(format!("grid.{k}: values must be finite"));
            }
        }
    }

    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let target = target.expect("target resolved when no errors");

    let mut points = vec![Vec::with_capacity(declared.len())];
    for &(name, default) in declared {
        let values = match (cfg.params.get(name), cfg.grid.get(name)) {
            (Some(&v), _) => vec![v],
            (None, Some(axis)) => axis.0.clone(),
            (None, None) => vec![default],
        };
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((name, v));
                    q
                })
            })
            .collect();
    }
    let mut inputs = Vec::with_capacity(points.len());
    for p in points {
        let mut x = Inputs(p);
        if let Some(m) = model {
            m.complete(&mut x).map_err(CliError::Core)?;
        }
        inputs.push(x);
    }

    Ok(Plan {
        command,
        target,
        points: inputs,
        method,
        repetitions: cfg.repetitions.unwrap_or(1),
        tol: cfg.tol.unwrap_or(DEFAULT_TOL),
        seed: cfg.seed.unwrap_or(0),
        out: cfg.out.clone(),
        csv: cfg.csv.clone(),
        config: cfg,
    })
}

fn method_supported(model: Model, method: Method) -> bool {
    use Method::*;
    let mixed = [Eigenbasis, Liouville, Series, Bloch, QubitClosedForm];
    match model {
        Model::DephasingQubit | Model::Thermal => mixed.contains(&method),
        Model::QubitThetaPhi => method == Pure || mixed.contains(&method),
        Model::SpinField => method == Unitary || mixed.contains(&method),
        Model::GaussianDisplacement | Model::GaussianPhase | Model::GaussianSqueezing => method == Gaussian,
        Model::Noon | Model::Ecs | Model::Ancilla | Model::Controlled | Model::Mzi => method == Pure,
    }
}
