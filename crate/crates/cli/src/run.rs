//! Command execution: per-point evaluation, report assembly and the GRAPE driver.

use std::path::PathBuf;
use std::time::Instant;

use qmetro::gaussian::{gaussian_qfim, gaussian_sld, williamson};
use qmetro::grape::{grape_run, objective_value, propagate, ControlProblem, GradientMethod, GrapeSettings, Objective};
use qmetro::measurement::{
    cfim_pure, cfim_state, offset_limit_sweep, sld_measurement, standard_basis, Cfim, Povm,
};
use qmetro::numerics::{c, hermitian_function, kron, pauli};
use qmetro::qfim::{
    attainability_check, attainability_pure, bloch_vector, crb_report, gell_mann_basis, qfim_bloch, qfim_from_slds,
    qfim_general, qfim_pure, qfim_qubit_closed_form, sld_compute, CrbReport,
};
use qmetro::random::{ginibre, rng};
use qmetro::states::pure_density_derivative;
use qmetro::thermo::{thermal_qfi, thermal_qfim_spectral_sum};
use qmetro::unitary::{generator_h, qfim_unitary, UnitaryFamily};
use qmetro::{CMatrix, DensityMatrix, Error, QfimMatrix, SldMethod};
use rand::Rng as _;
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{
    Command, GradientKind, GrapeConfig, GrapeProblemKind, InitialControls, Method, ObjectiveKind, Plan, PovmKind, Target,
};
use crate::output::{self, int, named, num, nums, strings, Csv, Obj};
use crate::registry::{thermal_hamiltonian, Context, Evaluated, Inputs, Model, StateModel};
use crate::CliError;

/// Finished run: the JSON report text and an optional CSV destined for `path`.
pub struct Outcome {
    pub report: String,
    pub csv: Option<(PathBuf, String)>,
}

/// One evaluated grid point.
pub struct PointOutput {
    pub inputs: Vec<(String, f64)>,
    pub params: Vec<String>,
    pub matrix: QfimMatrix,
    /// Tr(F⁻¹)/n
    pub trace_inverse: f64,
    /// CFIM of the measurement command, tabulated after the QFIM.
    pub cfim: Option<QfimMatrix>,
    pub body: Vec<(String, Value)>,
    pub flags: Vec<String>,
}

pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QMETRO_THREADS") {
        let n = v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(vec![format!("QMETRO_THREADS: expected a positive integer, got '{v}'")])
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

pub fn execute(plan: &Plan) -> Result<Outcome, CliError> {
    let start = Instant::now();
    if let Target::Grape(kind) = plan.target {
        return run_grape(plan, kind, start);
    }
    let ctx = Context {
        seed: plan.seed,
        hamiltonian: plan.config.hamiltonian.unwrap_or_default(),
        chi: plan
            .config
            .chi
            .as_ref()
            .map(|v| v.iter().map(|p| c(p[0], p[1])).collect()),
    };
    let model = plan.model().expect("non-grape plans have a model");
    let pool = thread_pool()?;
    let results: Vec<qmetro::Result<PointOutput>> =
        pool.install(|| plan.points.par_iter().map(|x| evaluate_point(plan, model, &ctx, x)).collect());
    let mut points = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        points.push(r.map_err(|source| CliError::Point {
            index,
            inputs: describe(&plan.points[index]),
            source,
        })?);
    }

    let csv = match &plan.csv {
        Some(path) => Some((path.clone(), grid_csv(plan, &points)?)),
        None => None,
    };

    let mut head = header(plan).put("method", Value::String(plan.method.name().into()));
    if let Some(chi) = &plan.config.chi {
        head = head.put("chi", Value::Array(chi.iter().map(|p| nums(p)).collect()));
    }
    if let Some(h) = plan.config.hamiltonian {
        head = head.put("hamiltonian", serde_json::to_value(format!("{h:?}").to_lowercase()).unwrap());
    }
    if plan.command == Command::Measurement {
        let p = plan.config.povm.clone().unwrap_or_default();
        head = head.put(
            "povm",
            Obj::new()
                .put("kind", Value::String(povm_kind_name(p.kind).into()))
                .put("param", int(p.param as u64))
                .put_opt("outcomes", p.outcomes.map(|k| int(k as u64)))
                .build(),
        );
    }
    let points_json = points.iter().map(point_json).collect();
    let report = head
        .put("points", Value::Array(points_json))
        .put("timing", timing(start))
        .build();
    Ok(Outcome {
        report: output::to_pretty(&report),
        csv,
    })
}

fn header(plan: &Plan) -> Obj {
    Obj::new()
        .put("format", Value::String(output::REPORT_FORMAT.into()))
        .put("version", int(output::REPORT_VERSION))
        .put("command", Value::String(plan.command.name().into()))
        .put("target", Value::String(plan.target_label()))
        .put("seed", int(plan.seed))
        .put("tol", num(plan.tol))
        .put("repetitions", int(plan.repetitions))
}

/// Kept last in every report so timing-free comparisons can cut the text here.
fn timing(start: Instant) -> Value {
    Obj::new()
        .put("elapsed_seconds", num(start.elapsed().as_secs_f64()))
        .build()
}

fn describe(x: &Inputs) -> String {
    x.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

fn point_json(p: &PointOutput) -> Value {
    let mut o = Obj::new()
        .put("inputs", named(&p.inputs))
        .put("params", strings(&p.params))
        .put("qfim", output::qfim(&p.matrix))
        .put("trace_inverse", num(p.trace_inverse));
    for (k, v) in &p.body {
        o = o.put(k, v.clone());
    }
    o.put("flags", strings(&p.flags)).build()
}

/// Columns: inputs, F:a:b row-major, I:a:b (measurement only), trace_inverse, flags.
fn grid_csv(plan: &Plan, points: &[PointOutput]) -> Result<String, CliError> {
    let first = &points[0];
    if points.iter().any(|p| p.params != first.params) {
        return Err(CliError::Config(vec![
            "csv: the parameter set changes across the grid, so no fixed column layout exists".into(),
        ]));
    }
    let mut header: Vec<String> = first.inputs.iter().map(|(k, _)| k.clone()).collect();
    let pairs = |tag: &str| -> Vec<String> {
        first
            .params
            .iter()
            .flat_map(|a| first.params.iter().map(move |b| format!("{tag}:{a}:{b}")))
            .collect()
    };
    header.extend(pairs("F"));
    if first.cfim.is_some() {
        header.extend(pairs("I"));
    }
    header.push("trace_inverse".into());
    header.push("flags".into());
    let mut t = Csv::new(&format!("{} {}", plan.command.name(), plan.target_label()), &header);
    for p in points {
        let mut row: Vec<f64> = p.inputs.iter().map(|e| e.1).collect();
        row.extend(p.matrix.flatten());
        if let Some(i) = &p.cfim {
            row.extend(i.flatten());
        }
        row.push(p.trace_inverse);
        t.row(&row, &[&p.flags.join(";")]);
    }
    Ok(t.into_string())
}

fn evaluate_point(plan: &Plan, model: Model, ctx: &Context, x: &Inputs) -> qmetro::Result<PointOutput> {
    match plan.command {
        Command::Scenario => scenario_point(plan, model, ctx, x),
        Command::Qfim => qfim_point(plan, model.evaluate(x, ctx)?, x),
        Command::Bounds => bounds_point(plan, model.evaluate(x, ctx)?, x),
        Command::Measurement => measurement_point(plan, model.evaluate(x, ctx)?, x),
        Command::Gaussian => gaussian_point(plan, model.evaluate(x, ctx)?, x),
        Command::Thermo => thermo_point(plan, ctx, model.evaluate(x, ctx)?, x),
        Command::Grape => unreachable!("grape runs without a grid"),
    }
}

fn echo(x: &Inputs) -> Vec<(String, f64)> {
    x.0.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_finite(f: &QfimMatrix, what: &str) -> qmetro::Result<()> {
    if f.matrix.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} has non-finite entries")))
    }
}

/// Largest |F − closed form| over the finite closed-form entries.
fn deviation(f: &QfimMatrix, closed: &QfimMatrix) -> f64 {
    f.flatten()
        .iter()
        .zip(closed.flatten())
        .filter(|(_, c)| c.is_finite())
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max)
}

/// QFIM of the evaluated state by the requested route.
pub fn information(state: &StateModel, method: Method) -> qmetro::Result<QfimMatrix> {
    match (state, method) {
        (StateModel::Fixed { qfim }, _) => Ok(qfim.clone()),
        (StateModel::Gaussian { state, dd, dc }, _) => gaussian_qfim(state, dd, dc),
        (StateModel::Pure { psi, dpsi, .. }, Method::Pure) => Ok(qfim_pure(psi, dpsi)?.qfim),
        (StateModel::Mixed { unitary: Some((probe, gens)), .. }, Method::Unitary) => qfim_unitary(probe, gens),
        _ => {
            let (rho, drho) = density(state)?;
            mixed_information(&rho, &drho, method)
        }
    }
}

fn density(state: &StateModel) -> qmetro::Result<(DensityMatrix, Vec<CMatrix>)> {
    match state {
        StateModel::Mixed { rho, drho, .. } => Ok((rho.clone(), drho.clone())),
        StateModel::Pure { psi, dpsi, .. } => Ok((
            DensityMatrix::from_pure(psi)?,
            dpsi.iter().map(|d| pure_density_derivative(psi, d)).collect(),
        )),
        _ => Err(Error::Unsupported("this model has no density-matrix form".into())),
    }
}

fn mixed_information(rho: &DensityMatrix, drho: &[CMatrix], method: Method) -> qmetro::Result<QfimMatrix> {
    match method {
        Method::Eigenbasis => qfim_general(&rho.spectral()?, drho),
        Method::Liouville | Method::Series => {
            let m = if method == Method::Liouville {
                SldMethod::Liouville
            } else {
                SldMethod::Series
            };
            let slds = sld_compute(&rho.spectral()?, drho, m)?;
            Ok(qfim_from_slds(rho, &slds))
        }
        Method::Bloch => {
            let d = rho.dim();
            let gens = gell_mann_basis(d);
            let r = bloch_vector(rho.matrix(), &gens);
            let dr: Vec<Vec<f64>> = drho.iter().map(|m| bloch_vector(m, &gens)).collect();
            qfim_bloch(&r, &dr, d, &gens)
        }
        Method::QubitClosedForm => Ok(qfim_qubit_closed_form(rho, drho)?.qfim),
        other => Err(Error::Unsupported(format!("method {} needs a different model", other.name()))),
    }
}

/// QFIM, its bound report and the closed-form comparison shared by most commands.
struct Core {
    f: QfimMatrix,
    crb: CrbReport,
    body: Vec<(String, Value)>,
    flags: Vec<String>,
}

fn core(plan: &Plan, ev: &Evaluated) -> qmetro::Result<Core> {
    let f = information(&ev.state, plan.method)?;
    check_finite(&f, "QFIM")?;
    let crb = crb_report(&f, plan.repetitions)?;
    let mut flags = ev.flags.clone();
    if crb.singular {
        flags.push("singular_qfim".into());
    }
    let mut body = Vec::new();
    if let Some(closed) = &ev.closed_form {
        let dev = deviation(&f, closed);
        if dev > plan.tol {
            flags.push("closed_form_mismatch".into());
        }
        body.push(("closed_form".into(), output::qfim(closed)));
        body.push(("deviation".into(), num(dev)));
    }
    if !ev.extras.is_empty() {
        body.push(("extras".into(), named(&ev.extras)));
    }
    Ok(Core { f, crb, body, flags })
}

fn finish(x: &Inputs, ev: Evaluated, core: Core, cfim: Option<QfimMatrix>) -> PointOutput {
    PointOutput {
        inputs: echo(x),
        params: ev.params,
        trace_inverse: core.crb.trace_inverse,
        matrix: core.f,
        cfim,
        body: core.body,
        flags: core.flags,
    }
}

fn scenario_point(plan: &Plan, model: Model, ctx: &Context, x: &Inputs) -> qmetro::Result<PointOutput> {
    let sc = model.run_scenario(x, ctx)?;
    check_finite(&sc.computed, "QFIM")?;
    let crb = crb_report(&sc.computed, plan.repetitions)?;
    let mut flags = sc.flags.clone();
    if sc.deviation > plan.tol {
        flags.push("closed_form_mismatch".into());
    }
    let mut body = vec![
        ("closed_form".to_string(), output::qfim(&sc.closed_form)),
        ("deviation".to_string(), num(sc.deviation)),
    ];
    if !sc.extras.is_empty() {
        body.push(("extras".into(), named(&sc.extras)));
    }
    Ok(PointOutput {
        inputs: echo(x),
        params: sc.params,
        matrix: sc.computed,
        trace_inverse: crb.trace_inverse,
        cfim: None,
        body,
        flags,
    })
}

fn qfim_point(plan: &Plan, ev: Evaluated, x: &Inputs) -> qmetro::Result<PointOutput> {
    let core = core(plan, &ev)?;
    Ok(finish(x, ev, core, None))
}

fn bounds_point(plan: &Plan, ev: Evaluated, x: &Inputs) -> qmetro::Result<PointOutput> {
    let mut core = core(plan, &ev)?;
    let crb = &core.crb;
    let bound = Obj::new()
        .put("inverse", output::matrix(&crb.inverse))
        .put("trace_inverse", num(crb.trace_inverse))
        .put("diagonal_bound_sum", num(crb.diagonal_bound_sum))
        .put_opt("effective_fisher", crb.effective_fisher.map(num))
        .put("rank", int(crb.rank as u64))
        .put("singular", Value::Bool(crb.singular))
        .put("zero_diagonal", Value::Array(crb.zero_diagonal.iter().map(|&a| int(a as u64)).collect()))
        .build();
    let att = match &ev.state {
        StateModel::Pure { psi, dpsi, .. } => {
            let a = attainability_pure(psi, dpsi, plan.tol);
            Some(
                Obj::new()
                    .put("test", Value::String("berry-curvature".into()))
                    .put("attainable", Value::Bool(a.attainable))
                    .put("max_violation", num(a.max_violation))
                    .put("berry_curvature", output::matrix(&a.berry_curvature))
                    .build(),
            )
            .map(|v| (v, a.attainable))
        }
        StateModel::Mixed { rho, drho, .. } => {
            let slds = sld_compute(&rho.spectral()?, drho, SldMethod::Eigenbasis)?;
            let a = attainability_check(rho, &slds, plan.tol);
            Some(
                Obj::new()
                    .put("test", Value::String("sld-commutator".into()))
                    .put("attainable", Value::Bool(a.attainable))
                    .put("max_violation", num(a.max_violation))
                    .put("commutator", output::matrix(&a.matrix))
                    .build(),
            )
            .map(|v| (v, a.attainable))
        }
        _ => None,
    };
    core.body.insert(0, ("crb".into(), bound));
    match att {
        Some((v, ok)) => {
            core.body.insert(1, ("attainability".into(), v));
            if !ok {
                core.flags.push("not_attainable".into());
            }
        }
        None => core.body.insert(1, ("attainability".into(), Value::Null)),
    }
    Ok(finish(x, ev, core, None))
}

fn povm_kind_name(k: PovmKind) -> &'static str {
    match k {
        PovmKind::Sld => "sld",
        PovmKind::Computational => "computational",
        PovmKind::Random => "random",
        PovmKind::OptimalPure => "optimal-pure",
    }
}

/// Σ_k E_k = I with E_k = S^{−1/2}G_k†G_kS^{−1/2} for Ginibre G_k.
fn random_povm(seed: u64, dim: usize, outcomes: usize) -> qmetro::Result<Povm> {
    let mut r = rng(seed);
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(&mut r, dim, dim);
            &g.adjoint() * &g
        })
        .collect();
    let mut s = CMatrix::zeros(dim, dim);
    for e in &raw {
        s += e;
    }
    let inv_sqrt = hermitian_function(&s, |l| 1.0 / l.sqrt())?;
    Povm::new(raw.iter().map(|e| (&(&inv_sqrt * e) * &inv_sqrt).hermitian_part()).collect())
}

fn measurement_point(plan: &Plan, ev: Evaluated, x: &Inputs) -> qmetro::Result<PointOutput> {
    let mut core = core(plan, &ev)?;
    let cfg = plan.config.povm.clone().unwrap_or_default();
    let (rho, drho) = density(&ev.state)?;
    let p = drho.len();
    let dim = rho.dim();
    let mut body = Vec::new();
    let cfim_of = |povm: &Povm| -> qmetro::Result<Cfim> {
        match &ev.state {
            StateModel::Pure { psi, dpsi, .. } => cfim_pure(psi, dpsi, povm),
            _ => cfim_state(&rho, &drho, povm),
        }
    };
    let result: Cfim = match cfg.kind {
        PovmKind::Sld => {
            if cfg.param >= p {
                return Err(Error::Domain(format!("povm.param {} out of range ({p} parameters)", cfg.param)));
            }
            let slds = match &ev.state {
                StateModel::Pure { psi, dpsi, .. } => qfim_pure(psi, dpsi)?.slds,
                _ => sld_compute(&rho.spectral()?, &drho, SldMethod::Eigenbasis)?,
            };
            let m = sld_measurement(&rho, &slds.operators[cfg.param])?;
            body.push(("frozen_cfi".to_string(), num(m.frozen_cfi)));
            body.push(("sld_eigenvalues".to_string(), nums(&m.eigenvalues)));
            cfim_of(&m.povm)?
        }
        PovmKind::Computational => cfim_of(&Povm::computational(dim))?,
        PovmKind::Random => cfim_of(&random_povm(plan.seed, dim, cfg.outcomes.unwrap_or(dim + 2))?)?,
        PovmKind::OptimalPure => {
            let StateModel::Pure { family: Some(fam), x: point, .. } = &ev.state else {
                return Err(Error::Unsupported("optimal-pure needs a pure family".into()));
            };
            let sweep = offset_limit_sweep(fam, point, &standard_basis(dim), 1e-2, plan.tol.max(1e-12), 40)?;
            if !sweep.converged {
                core.flags.push("limit_not_converged".into());
            }
            body.push(("final_offset".to_string(), num(*sweep.deltas.last().unwrap())));
            Cfim {
                cfim: sweep.last().clone(),
                probabilities: Vec::new(),
                singular_outcomes: Vec::new(),
            }
        }
    };
    check_finite(&result.cfim, "CFIM")?;
    if result.is_singular() {
        core.flags.push("singular_outcomes".into());
    }
    let gap = QfimMatrix::new(&core.f.matrix - &result.cfim.matrix).min_eigenvalue();
    if gap < -plan.tol.max(1e-7) {
        core.flags.push("cfim_exceeds_qfim".into());
    }
    let mut head = vec![
        ("cfim".to_string(), output::qfim(&result.cfim)),
        ("qfim_minus_cfim_min_eigenvalue".to_string(), num(gap)),
        ("probabilities".to_string(), nums(&result.probabilities)),
    ];
    head.extend(body);
    head.append(&mut core.body);
    core.body = head;
    Ok(finish(x, ev, core, Some(result.cfim)))
}

fn gaussian_point(plan: &Plan, ev: Evaluated, x: &Inputs) -> qmetro::Result<PointOutput> {
    let mut core = core(plan, &ev)?;
    let StateModel::Gaussian { state, dd, dc } = &ev.state else {
        return Err(Error::Unsupported("gaussian command needs a Gaussian family".into()));
    };
    let w = williamson(&state.covariance)?;
    let m = state.modes() as i32;
    let purity = 1.0 / (2f64.powi(m) * state.covariance.det().sqrt());
    let sld = gaussian_sld(state, dd, dc)?;
    if sld.divergent_channels_zeroed {
        core.flags.push("divergent_channels_zeroed".into());
    }
    let mut head = vec![
        ("displacement".to_string(), nums(&state.displacement)),
        ("covariance".to_string(), output::matrix(&state.covariance)),
        ("symplectic_eigenvalues".to_string(), nums(&w.eigenvalues)),
        ("purity".to_string(), num(purity)),
        (
            "sld".to_string(),
            Obj::new()
                .put("l0", nums(&sld.l0))
                .put("l1", Value::Array(sld.l1.iter().map(|v| nums(v)).collect()))
                .put("g", Value::Array(sld.g.iter().map(output::matrix).collect()))
                .build(),
        ),
    ];
    head.append(&mut core.body);
    core.body = head;
    Ok(finish(x, ev, core, None))
}

/// Σ_k |k⟩⟨k+1| + h.c.
fn hopping(levels: usize) -> CMatrix {
    let mut h = CMatrix::zeros(levels, levels);
    for k in 0..levels - 1 {
        h[(k, k + 1)] = c(1.0, 0.0);
        h[(k + 1, k)] = c(1.0, 0.0);
    }
    h
}

fn thermo_point(plan: &Plan, ctx: &Context, ev: Evaluated, x: &Inputs) -> qmetro::Result<PointOutput> {
    let mut core = core(plan, &ev)?;
    let (t, omega, levels) = (x.get("T"), x.get("omega"), x.get("levels") as usize);
    let h = thermal_hamiltonian(ctx, omega, levels);
    let tq = thermal_qfi(&h, t)?;
    let gen = hopping(levels);
    let spectral = thermal_qfim_spectral_sum(&h, std::slice::from_ref(&gen), t)?.get(0, 0);
    let g2 = gen.clone();
    let fam = UnitaryFamily::hamiltonian(1, 1.0, move |x| Ok(g2.scale_real(x[0])), {
        let g3 = gen.clone();
        move |_| Ok(vec![g3.clone()])
    });
    let rho = match &ev.state {
        StateModel::Mixed { rho, .. } => rho.clone(),
        _ => unreachable!("thermal family is mixed"),
    };
    let unitary = qfim_unitary(&rho.spectral()?, &generator_h(&fam, &[0.0])?)?.get(0, 0);
    let diff = (spectral - unitary).abs();
    if diff > plan.tol * spectral.abs().max(1.0) {
        core.flags.push("hopping_routes_disagree".into());
    }
    let mut head = vec![
        ("heat_capacity".to_string(), num(tq.heat_capacity)),
        ("fisher_from_variance".to_string(), num(tq.fisher)),
        ("cv_over_t2".to_string(), num(tq.heat_capacity / (t * t))),
        (
            "hopping_qfi".to_string(),
            Obj::new()
                .put("spectral_sum", num(spectral))
                .put("unitary", num(unitary))
                .put("difference", num(diff))
                .build(),
        ),
    ];
    head.append(&mut core.body);
    core.body = head;
    Ok(finish(x, ev, core, None))
}

// ---------- GRAPE ----------

fn plus() -> DensityMatrix {
    DensityMatrix::new_trusted(CMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.5, 0.0)], vec![c(0.5, 0.0), c(0.5, 0.0)]]))
}

fn build_problem(kind: GrapeProblemKind, x: &Inputs, g: &GrapeConfig) -> (ControlProblem, Vec<f64>) {
    let t = x.get("t");
    match kind {
        GrapeProblemKind::DephasingQubit => {
            let p = ControlProblem::new(1, |x| pauli::z().scale_real(x[0]), |_| vec![pauli::z()], plus(), t, g.slices)
                .with_decay(pauli::z(), x.get("gamma") / 2.0)
                .with_control(pauli::x(), 0.0)
                .with_control(pauli::y(), 0.0);
            (p, vec![x.get("B")])
        }
        GrapeProblemKind::TwoQubit => {
            let id = pauli::id();
            let z1 = kron(&pauli::z(), &id);
            let z2 = kron(&id, &pauli::z());
            let xx = kron(&pauli::x(), &pauli::x()).scale_real(0.5 * x.get("J"));
            let (hz1, hz2) = (z1.clone(), z2.clone());
            let mut p = ControlProblem::new(
                2,
                move |x| &(&hz1.scale_real(x[0]) + &hz2.scale_real(x[1])) + &xx,
                move |_| vec![z1.clone(), z2.clone()],
                plus().tensor(&plus()),
                t,
                g.slices,
            )
            .with_decay(kron(&pauli::z(), &id), x.get("gamma1") / 2.0)
            .with_decay(kron(&id, &pauli::z()), x.get("gamma2") / 2.0);
            for h in [kron(&pauli::x(), &id), kron(&pauli::y(), &id), kron(&id, &pauli::x()), kron(&id, &pauli::y())] {
                p = p.with_control(h, 0.0);
            }
            (p, vec![x.get("B1"), x.get("B2")])
        }
    }
}

fn objective(kind: ObjectiveKind, param: usize, dim: usize) -> Objective {
    let povm = || Povm::computational(dim);
    match kind {
        ObjectiveKind::Qfi => Objective::Qfi { param },
        ObjectiveKind::Cfi => Objective::Cfi { param, povm: povm() },
        ObjectiveKind::FEff => Objective::FEff,
        ObjectiveKind::IEff => Objective::IEff { povm: povm() },
        ObjectiveKind::F0Qfim => Objective::F0Qfim,
        ObjectiveKind::F0Cfim => Objective::F0Cfim { povm: povm() },
    }
}

/// History CSV path: `--csv`, else `<out stem>.history.csv` next to the report, else `grape_history.csv`.
pub fn grape_history_path(plan: &Plan) -> PathBuf {
    match (&plan.csv, &plan.out) {
        (Some(p), _) => p.clone(),
        (None, Some(out)) => out.with_extension("history.csv"),
        (None, None) => PathBuf::from("grape_history.csv"),
    }
}

fn controls_json(v: &[Vec<f64>]) -> Value {
    Value::Array(v.iter().map(|a| nums(a)).collect())
}

fn run_grape(plan: &Plan, kind: GrapeProblemKind, start: Instant) -> Result<Outcome, CliError> {
    let g = plan.config.grape.clone().unwrap_or_default();
    let x = &plan.points[0];
    let (base, point) = build_problem(kind, x, &g);
    let obj = objective(g.objective, g.param, base.dim());
    let obj_name = obj.name();
    let mut problem = base.with_objective(obj).with_settings(GrapeSettings {
        learning_rate: g.learning_rate,
        max_iterations: g.max_iterations,
        tolerance: g.tolerance,
        method: match g.gradient {
            GradientKind::Exact => GradientMethod::Exact,
            GradientKind::FirstOrder => GradientMethod::FirstOrder,
        },
    });
    let wrap = |source: Error| CliError::Point {
        index: 0,
        inputs: describe(x),
        source,
    };
    problem.validate(&point).map_err(wrap)?;
    let uncontrolled = objective_value(&problem.objective, &propagate(&problem, &point).map_err(wrap)?).map_err(wrap)?;
    if g.init == InitialControls::Random {
        let mut r = rng(plan.seed);
        for amp in problem.amplitudes.iter_mut() {
            for v in amp.iter_mut() {
                *v = g.init_scale * r.random_range(-1.0..1.0);
            }
        }
    }
    let initial = problem.amplitudes.clone();
    let res = grape_run(&problem, &point).map_err(wrap)?;
    if !res.best_objective.is_finite() {
        return Err(wrap(Error::Numerical("objective is not finite".into())));
    }

    let mut flags = Vec::new();
    if !res.converged {
        flags.push("max_iterations_reached".to_string());
    }
    if res.best_objective < uncontrolled {
        flags.push("below_uncontrolled".to_string());
    }
    let history_path = grape_history_path(plan);
    let mut csv = Csv::new(
        &format!("grape {}", kind.name()),
        &["iteration".into(), "objective".into(), "gradient_norm".into()],
    );
    for it in &res.history {
        csv.row(&[it.iteration as f64, it.objective, it.gradient_norm], &[]);
    }

    let settings = Obj::new()
        .put("slices", int(g.slices as u64))
        .put("total_time", num(problem.total_time()))
        .put("learning_rate", num(g.learning_rate))
        .put("max_iterations", int(g.max_iterations as u64))
        .put("tolerance", num(g.tolerance))
        .put("objective", Value::String(obj_name.into()))
        .put("param", int(g.param as u64))
        .put(
            "gradient",
            Value::String(if g.gradient == GradientKind::Exact { "exact" } else { "first-order" }.into()),
        )
        .put(
            "init",
            Value::String(if g.init == InitialControls::Zero { "zero" } else { "random" }.into()),
        )
        .put("init_scale", num(g.init_scale))
        .build();
    let report = header(plan)
        .put("inputs", named(&echo(x)))
        .put("settings", settings)
        .put("uncontrolled_objective", num(uncontrolled))
        .put("initial_objective", num(res.history[0].objective))
        .put("best_objective", num(res.best_objective))
        .put("best_iteration", int(res.best_iteration as u64))
        .put("iterations", int(res.history.len() as u64))
        .put("converged", Value::Bool(res.converged))
        .put("best_matrix", output::matrix(&res.best_matrix))
        .put("initial_controls", controls_json(&initial))
        .put("best_controls", controls_json(&res.best_controls))
        .put("final_controls", controls_json(&res.final_controls))
        .put("warnings", strings(&res.warnings))
        .put("history_csv", Value::String(history_path.display().to_string()))
        .put("flags", strings(&flags))
        .put("timing", timing(start))
        .build();
    Ok(Outcome {
        report: output::to_pretty(&report),
        csv: Some((history_path, csv.into_string())),
    })
}
