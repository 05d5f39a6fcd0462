//! Built-in families and scenarios addressable from the command line.

use std::f64::consts::FRAC_PI_4;

use qmetro::families::{dephasing_qubit, qubit_theta_phi, thermal};
use qmetro::gaussian::{squeezed_thermal_covariance, GaussianState};
use qmetro::numerics::{c, pauli};
use qmetro::random::{random_hermitian, rng};
use qmetro::scenarios::{
    scenario_controlled_field, scenario_dephasing_qubit, scenario_ecs, scenario_mzi_double_phase, scenario_noon,
    scenario_spin_field, scenario_two_qubit_ancilla, ScenarioResult,
};
use qmetro::states::state_derivatives;
use qmetro::unitary::{generator_h, GeneratorSet, UnitaryFamily};
use qmetro::{CMatrix, DensityMatrix, Error, PureFamily, QfimMatrix, RMatrix, Result, SpectralData, C64};
use serde::Deserialize;

use crate::config::Method;

/// How a thermal family builds its Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    /// ω·diag(0, 1, …, levels − 1)
    #[default]
    Ladder,
    /// ω times a seeded random Hermitian matrix.
    Random,
}

/// Settings shared by every point of a run.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub seed: u64,
    pub hamiltonian: HamiltonianKind,
    /// Fock amplitudes of the second interferometer port.
    pub chi: Option<Vec<C64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    DephasingQubit,
    QubitThetaPhi,
    Thermal,
    Noon,
    Ecs,
    SpinField,
    GaussianDisplacement,
    GaussianPhase,
    GaussianSqueezing,
    Ancilla,
    Controlled,
    Mzi,
}

const FAMILIES: [(&str, Model); 9] = [
    ("dephasing-qubit", Model::DephasingQubit),
    ("qubit-theta-phi", Model::QubitThetaPhi),
    ("thermal", Model::Thermal),
    ("noon", Model::Noon),
    ("ecs", Model::Ecs),
    ("spin-field", Model::SpinField),
    ("gaussian-displacement", Model::GaussianDisplacement),
    ("gaussian-phase", Model::GaussianPhase),
    ("gaussian-squeezing", Model::GaussianSqueezing),
];

const SCENARIOS: [(&str, Model); 7] = [
    ("dephasing", Model::DephasingQubit),
    ("spin-field", Model::SpinField),
    ("ancilla", Model::Ancilla),
    ("controlled", Model::Controlled),
    ("mzi", Model::Mzi),
    ("noon", Model::Noon),
    ("ecs", Model::Ecs),
];

/// Marks an input whose default depends on the others.
const DERIVED: f64 = f64::NAN;

pub fn family_names() -> impl Iterator<Item = &'static str> {
    FAMILIES.iter().map(|f| f.0)
}

pub fn scenario_ids() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|s| s.0)
}

/// Named inputs of one point, in the model's declared order.
#[derive(Clone, Debug, PartialEq)]
pub struct Inputs(pub Vec<(&'static str, f64)>);

impl Inputs {
    pub fn get(&self, name: &str) -> f64 {
        self.0
            .iter()
            .find(|(k, _)| *k == name)
            .map(|e| e.1)
            .unwrap_or_else(|| panic!("model has no input {name}"))
    }

    fn count(&self, name: &str, min: usize) -> Result<usize> {
        let v = self.get(name);
        if v.fract() != 0.0 || v < min as f64 || v > 1e6 {
            return Err(Error::Domain(format!("{name} must be an integer ≥ {min}, got {v}")));
        }
        Ok(v as usize)
    }

    fn bloch(&self) -> [f64; 3] {
        [self.get("rx"), self.get("ry"), self.get("rz")]
    }

    fn complex(&self, re: &str, im: &str) -> C64 {
        c(self.get(re), self.get(im))
    }
}

/// A family evaluated at one point.
pub struct Evaluated {
    pub params: Vec<String>,
    pub state: StateModel,
    pub closed_form: Option<QfimMatrix>,
    pub extras: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

pub enum StateModel {
    Mixed {
        rho: DensityMatrix,
        drho: Vec<CMatrix>,
        /// Probe spectrum and generators when ρ = Uρ₀U†.
        unitary: Option<(SpectralData, GeneratorSet)>,
    },
    Pure {
        psi: Vec<C64>,
        dpsi: Vec<Vec<C64>>,
        family: Option<PureFamily>,
        x: Vec<f64>,
    },
    Gaussian {
        state: GaussianState,
        dd: Vec<Vec<f64>>,
        dc: Vec<RMatrix>,
    },
    /// Only the QFIM is available.
    Fixed { qfim: QfimMatrix },
}

impl Model {
    pub fn family(name: &str) -> Option<Model> {
        let name = name.strip_prefix("builtin:").unwrap_or(name);
        FAMILIES.iter().find(|f| f.0 == name).map(|f| f.1)
    }

    pub fn scenario(id: &str) -> Option<Model> {
        SCENARIOS.iter().find(|s| s.0 == id).map(|s| s.1)
    }

    pub fn family_name(self) -> Option<&'static str> {
        FAMILIES.iter().find(|f| f.1 == self).map(|f| f.0)
    }

    pub fn is_gaussian(self) -> bool {
        matches!(
            self,
            Model::GaussianDisplacement | Model::GaussianPhase | Model::GaussianSqueezing
        )
    }

    /// Input names with defaults; `DERIVED` defaults are filled by `complete`.
    pub fn inputs(self) -> &'static [(&'static str, f64)] {
        match self {
            Model::DephasingQubit => &[("B", 1.0), ("gamma", 0.1), ("t", 1.0), ("rx", 1.0), ("ry", 0.0), ("rz", 0.0)],
            Model::QubitThetaPhi => &[("theta", FRAC_PI_4), ("phi", 0.0)],
            Model::Thermal => &[("T", 1.0), ("omega", 1.0), ("levels", 2.0)],
            Model::Noon => &[("d", 2.0), ("N", 2.0), ("c1", DERIVED)],
            Model::Ecs => &[("d", 2.0), ("alpha_re", 2.0), ("alpha_im", 0.0), ("c1", DERIVED)],
            Model::SpinField => &[("B", 1.0), ("theta", 0.3), ("t", 1.0), ("rx", 0.0), ("ry", 1.0), ("rz", 0.0)],
            Model::GaussianDisplacement => &[("q", 0.0), ("p", 0.0), ("nbar", 0.0), ("r", 0.0), ("phi", 0.0)],
            Model::GaussianPhase => &[
                ("phase", 0.0),
                ("alpha_re", 1.0),
                ("alpha_im", 0.0),
                ("nbar", 0.0),
                ("r", 0.0),
                ("phi", 0.0),
            ],
            Model::GaussianSqueezing => &[("r", 0.5), ("nbar", 0.0), ("phi", 0.0)],
            Model::Ancilla => &[("B", 1.0), ("theta", 0.3), ("phi", 0.2), ("t", 1.0)],
            Model::Controlled => &[("B", 1.0), ("theta", 0.3), ("phi", 0.2), ("dt", 0.1), ("N", 4.0)],
            Model::Mzi => &[("alpha_re", 1.0), ("alpha_im", 0.0)],
        }
    }

    pub fn has_input(self, name: &str) -> bool {
        self.inputs().iter().any(|(k, _)| *k == name)
    }

    /// Fills derived defaults: c1 = 1/√(d + √d) for the multiphase probes.
    pub fn complete(self, inputs: &mut Inputs) -> Result<()> {
        if matches!(self, Model::Noon | Model::Ecs) {
            let d = inputs.count("d", 1)? as f64;
            for (k, v) in inputs.0.iter_mut() {
                if *k == "c1" && v.is_nan() {
                    *v = 1.0 / (d + d.sqrt()).sqrt();
                }
            }
        }
        Ok(())
    }

    pub fn default_method(self) -> Method {
        match self {
            Model::QubitThetaPhi | Model::Noon | Model::Ecs | Model::Ancilla | Model::Controlled | Model::Mzi => {
                Method::Pure
            }
            Model::SpinField => Method::Unitary,
            Model::GaussianDisplacement | Model::GaussianPhase | Model::GaussianSqueezing => Method::Gaussian,
            Model::DephasingQubit | Model::Thermal => Method::Eigenbasis,
        }
    }

    /// Runs the scenario with its closed-form comparison.
    pub fn run_scenario(self, x: &Inputs, ctx: &Context) -> Result<ScenarioResult> {
        match self {
            Model::DephasingQubit => scenario_dephasing_qubit(x.get("B"), x.get("gamma"), x.get("t"), &probe(x.bloch())?),
            Model::SpinField => scenario_spin_field(x.get("B"), x.get("theta"), x.get("t"), x.bloch()),
            Model::Ancilla => scenario_two_qubit_ancilla(x.get("B"), x.get("theta"), x.get("phi"), x.get("t")),
            Model::Controlled => scenario_controlled_field(
                x.get("B"),
                x.get("theta"),
                x.get("phi"),
                x.get("dt"),
                x.count("N", 1)?,
            ),
            Model::Mzi => {
                let vacuum = [c(1.0, 0.0)];
                let chi = ctx.chi.as_deref().unwrap_or(&vacuum);
                scenario_mzi_double_phase(x.complex("alpha_re", "alpha_im"), chi)
            }
            Model::Noon => scenario_noon(x.count("d", 1)?, x.count("N", 1)? as u32, x.get("c1")),
            Model::Ecs => scenario_ecs(x.count("d", 1)?, x.complex("alpha_re", "alpha_im"), x.get("c1")),
            _ => Err(Error::Unsupported(format!("{self:?} is not a scenario"))),
        }
    }

    pub fn evaluate(self, x: &Inputs, ctx: &Context) -> Result<Evaluated> {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            Model::DephasingQubit => {
                let rho0 = probe(x.bloch())?;
                let fam = dephasing_qubit(&rho0)?;
                let point = [x.get("B"), x.get("gamma"), x.get("t")];
                let rho = fam.evaluate(&point)?;
                let mut drho = state_derivatives(&fam, &point)?;
                drho.truncate(2);
                let sc = scenario_dephasing_qubit(point[0], point[1], point[2], &rho0)?;
                Ok(Evaluated {
                    params: names(&["B", "gamma"]),
                    state: StateModel::Mixed { rho, drho, unitary: None },
                    closed_form: Some(sc.closed_form),
                    extras: Vec::new(),
                    flags: sc.flags.into_iter().filter(|f| f != "singular_qfim").collect(),
                })
            }
            Model::QubitThetaPhi => {
                let fam = qubit_theta_phi();
                let point = vec![x.get("theta"), x.get("phi")];
                let s = (2.0 * point[0]).sin();
                Ok(Evaluated {
                    params: names(&["theta", "phi"]),
                    state: StateModel::Pure {
                        psi: fam.evaluate(&point)?,
                        dpsi: fam.derivatives(&point)?,
                        family: Some(fam),
                        x: point,
                    },
                    closed_form: Some(QfimMatrix::new(RMatrix::from_diag(&[4.0, s * s]))),
                    extras: Vec::new(),
                    flags: Vec::new(),
                })
            }
            Model::Thermal => {
                let (t, omega, levels) = (x.get("T"), x.get("omega"), x.count("levels", 2)?);
                let h = thermal_hamiltonian(ctx, omega, levels);
                let fam = thermal(h);
                let rho = fam.evaluate(&[t])?;
                let drho = state_derivatives(&fam, &[t])?;
                let closed_form = (ctx.hamiltonian == HamiltonianKind::Ladder)
                    .then(|| QfimMatrix::new(RMatrix::from_diag(&[ladder_variance(omega, t, levels) / t.powi(4)])));
                Ok(Evaluated {
                    params: names(&["T"]),
                    state: StateModel::Mixed { rho, drho, unitary: None },
                    closed_form,
                    extras: Vec::new(),
                    flags: Vec::new(),
                })
            }
            Model::Noon | Model::Ecs => {
                let sc = self.run_scenario(x, ctx)?;
                Ok(Evaluated {
                    params: sc.params,
                    state: StateModel::Fixed { qfim: sc.computed },
                    closed_form: Some(sc.closed_form),
                    extras: sc.extras,
                    flags: sc.flags.into_iter().filter(|f| f != "singular_qfim").collect(),
                })
            }
            Model::SpinField => {
                let (b, theta, t, r) = (x.get("B"), x.get("theta"), x.get("t"), x.bloch());
                let sc = scenario_spin_field(b, theta, t, r)?;
                let rho0 = probe(r)?;
                let gens = generator_h(&spin_field_family(t), &[b, theta])?;
                let rho = rho0.conjugate_by(&gens.unitary);
                let drho = gens.state_derivatives(rho.matrix());
                Ok(Evaluated {
                    params: names(&["B", "theta"]),
                    state: StateModel::Mixed {
                        rho,
                        drho,
                        unitary: Some((rho0.spectral()?, gens)),
                    },
                    closed_form: Some(sc.closed_form),
                    extras: sc.extras,
                    flags: Vec::new(),
                })
            }
            Model::GaussianDisplacement => {
                let (nbar, r, phi) = (x.get("nbar"), x.get("r"), x.get("phi"));
                let state = GaussianState::new(vec![x.get("q"), x.get("p")], squeezed_thermal_covariance(nbar, r, phi))?;
                // C⁻¹ = R(φ)diag(e^{2r}, e^{−2r})R(φ)ᵀ/(n̄ + ½)
                let closed = squeezed_thermal_covariance(0.0, -r, phi).scale_real(2.0 / (nbar + 0.5));
                Ok(Evaluated {
                    params: names(&["q", "p"]),
                    state: StateModel::Gaussian {
                        state,
                        dd: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                        dc: vec![RMatrix::zeros(2, 2), RMatrix::zeros(2, 2)],
                    },
                    closed_form: Some(QfimMatrix::new(closed)),
                    extras: Vec::new(),
                    flags: Vec::new(),
                })
            }
            Model::GaussianPhase => {
                let (phase, alpha, nbar, r) = (x.get("phase"), x.complex("alpha_re", "alpha_im"), x.get("nbar"), x.get("r"));
                let c0 = squeezed_thermal_covariance(nbar, r, x.get("phi"));
                let d0 = [std::f64::consts::SQRT_2 * alpha.re, std::f64::consts::SQRT_2 * alpha.im];
                let (cs, sn) = (phase.cos(), phase.sin());
                let rot = RMatrix::from_rows(&[vec![cs, -sn], vec![sn, cs]]);
                let drot = RMatrix::from_rows(&[vec![-sn, -cs], vec![cs, -sn]]);
                let cov = &(&rot * &c0) * &rot.transpose();
                let dcov = &(&(&drot * &c0) * &rot.transpose()) + &(&(&rot * &c0) * &drot.transpose());
                let state = GaussianState::new(rot.mul_vec(&d0), cov)?;
                let closed_form =
                    (r == 0.0).then(|| QfimMatrix::new(RMatrix::from_diag(&[4.0 * alpha.norm_sqr() / (2.0 * nbar + 1.0)])));
                Ok(Evaluated {
                    params: names(&["phase"]),
                    state: StateModel::Gaussian {
                        state,
                        dd: vec![drot.mul_vec(&d0)],
                        dc: vec![dcov.hermitian_part()],
                    },
                    closed_form,
                    extras: Vec::new(),
                    flags: Vec::new(),
                })
            }
            Model::GaussianSqueezing => {
                let (r, nbar, phi) = (x.get("r"), x.get("nbar"), x.get("phi"));
                let state = GaussianState::new(vec![0.0, 0.0], squeezed_thermal_covariance(nbar, r, phi))?;
                let rot = RMatrix::from_rows(&[vec![phi.cos(), -phi.sin()], vec![phi.sin(), phi.cos()]]);
                let d = RMatrix::from_diag(&[-2.0 * (-2.0 * r).exp(), 2.0 * (2.0 * r).exp()]);
                let dc = (&(&rot * &d) * &rot.transpose()).scale_real(nbar + 0.5);
                let n = 2.0 * nbar + 1.0;
                Ok(Evaluated {
                    params: names(&["r"]),
                    state: StateModel::Gaussian {
                        state,
                        dd: vec![vec![0.0, 0.0]],
                        dc: vec![dc.hermitian_part()],
                    },
                    closed_form: Some(QfimMatrix::new(RMatrix::from_diag(&[4.0 * n * n / (1.0 + n * n)]))),
                    extras: Vec::new(),
                    flags: Vec::new(),
                })
            }
            Model::Ancilla | Model::Controlled | Model::Mzi => Err(Error::Unsupported(format!(
                "{self:?} is only available through the scenario command"
            ))),
        }
    }
}

fn probe(r: [f64; 3]) -> Result<DensityMatrix> {
    DensityMatrix::new((&pauli::id() + &pauli::dot(r)).scale_real(0.5))
}

pub(crate) fn thermal_hamiltonian(ctx: &Context, omega: f64, levels: usize) -> CMatrix {
    match ctx.hamiltonian {
        HamiltonianKind::Ladder => {
            CMatrix::from_diag(&(0..levels).map(|k| c(omega * k as f64, 0.0)).collect::<Vec<_>>())
        }
        HamiltonianKind::Random => random_hermitian(&mut rng(ctx.seed), levels).scale_real(omega),
    }
}

/// Energy variance of the ladder ω·k at temperature T.
fn ladder_variance(omega: f64, t: f64, levels: usize) -> f64 {
    let w: Vec<f64> = (0..levels).map(|k| (-omega * k as f64 / t).exp()).collect();
    let z: f64 = w.iter().sum();
    let m1: f64 = w.iter().enumerate().map(|(k, p)| p * omega * k as f64).sum::<f64>() / z;
    let m2: f64 = w.iter().enumerate().map(|(k, p)| p * (omega * k as f64).powi(2)).sum::<f64>() / z;
    m2 - m1 * m1
}

/// H = −B(cosθ σx + sinθ σz) for time t, parameters (B, θ).
fn spin_field_family(t: f64) -> UnitaryFamily {
    UnitaryFamily::hamiltonian(
        2,
        t,
        |x| Ok(pauli::dot([x[1].cos(), 0.0, x[1].sin()]).scale_real(-x[0])),
        |x| {
            Ok(vec![
                pauli::dot([x[1].cos(), 0.0, x[1].sin()]).scale_real(-1.0),
                pauli::dot([-x[1].sin(), 0.0, x[1].cos()]).scale_real(-x[0]),
            ])
        },
    )
}
