//! The five subcommands.

use rayon::prelude::*;
use sacs_engine::boundary::{locate_boundary, BoundaryScan};
use sacs_engine::fit::fit_gaussian;
use sacs_engine::fock::{
    build_hamiltonian, ground_states, lowest_in_sector, parity_sectors, sector_ground_energies, state_observables,
    Eigenpair, FockOptions, TruncatedSpace,
};
use sacs_engine::sacs::{self, SacsPoint};
use sacs_engine::surface::{
    coherent_expectations, coherent_photon_probability, minimize_surface, MinimizeStrategy, ObservableReport,
};
use sacs_engine::validation::{self, run_suite};
use sacs_engine::vconfig::{self, Approximation, VParams};
use sacs_engine::{CoherentPoint, Error, ModelParams, ParityBranch};

use crate::args::{BoundaryArgs, Branch, Level, OutputKind, PhotonArgs, Scale, SpectrumArgs, SweepArgs, ValidateArgs};
use crate::error::CliError;
use crate::setup::{self, Axis};
use crate::table::{Cell, Table};

/// A state whose statistics are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approx {
    Coherent,
    Even,
    Odd,
    ExactEven,
    ExactOdd,
}

impl Approx {
    fn label(self) -> &'static str {
        match self {
            Self::Coherent => "coherent",
            Self::Even => "even",
            Self::Odd => "odd",
            Self::ExactEven => "exact_even",
            Self::ExactOdd => "exact_odd",
        }
    }

    fn expand(branches: &[Branch]) -> Vec<Self> {
        let mut out = Vec::new();
        for b in branches {
            let add: &[Self] = match b {
                Branch::Coherent => &[Self::Coherent],
                Branch::Even => &[Self::Even],
                Branch::Odd => &[Self::Odd],
                Branch::Exact => &[Self::ExactEven, Self::ExactOdd],
            };
            for a in add {
                if !out.contains(a) {
                    out.push(*a);
                }
            }
        }
        out
    }

    fn parity(self) -> Option<ParityBranch> {
        match self {
            Self::Even | Self::ExactEven => Some(ParityBranch::Even),
            Self::Odd | Self::ExactOdd => Some(ParityBranch::Odd),
            Self::Coherent => None,
        }
    }
}

#[derive(Debug, Clone)]
struct StateValues {
    report: ObservableReport,
    q: Option<f64>,
    entropy: f64,
}

/// Degenerate states and indeterminate ratios become NA.
fn na<T>(r: sacs_engine::Result<T>) -> sacs_engine::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateState | Error::IndeterminateQ) => Ok(None),
        Err(e) => Err(e),
    }
}

fn exact_states(params: &ModelParams, nu_max: Option<u32>) -> sacs_engine::Result<(Eigenpair, Eigenpair)> {
    let opts = FockOptions::default();
    match nu_max {
        Some(n) => sector_ground_energies(params, n, &opts),
        None => ground_states(params, &opts).map(|g| (g.even, g.odd)),
    }
}

/// Coherent minimum: closed form for V, minimizer otherwise.
fn coherent_minimum(params: &ModelParams, vp: Option<&VParams>) -> sacs_engine::Result<CoherentPoint> {
    match vp {
        Some(vp) => Ok(vconfig::critical_coherent_point(vp)),
        None => minimize_surface(params, &MinimizeStrategy::default()).map(|cp| cp.point()),
    }
}

fn evaluate(
    params: &ModelParams,
    vp: Option<&VParams>,
    approxs: &[Approx],
    nu_max: Option<u32>,
) -> sacs_engine::Result<Vec<Option<StateValues>>> {
    let needs_point = approxs
        .iter()
        .any(|a| matches!(a, Approx::Coherent | Approx::Even | Approx::Odd));
    let point = if needs_point {
        Some(coherent_minimum(params, vp)?)
    } else {
        None
    };
    let needs_exact = approxs
        .iter()
        .any(|a| matches!(a, Approx::ExactEven | Approx::ExactOdd));
    let exact = if needs_exact {
        Some(exact_states(params, nu_max)?)
    } else {
        None
    };
    let n = params.n_atoms;
    approxs
        .iter()
        .map(|&a| match a {
            Approx::Coherent => {
                let point = point.expect("computed above");
                let mut report = coherent_expectations(params, &point);
                if let Some(vp) = vp {
                    report.energy = f64::from(n) * vconfig::e_min_v(vp);
                }
                let q = match vp {
                    Some(vp) => na(vconfig::mandel_q_m(vp, Approximation::Coherent))?,
                    None => na(report.mandel_q())?,
                };
                Ok(Some(StateValues {
                    report,
                    q,
                    entropy: sacs::coherent_linear_entropy(&point),
                }))
            }
            Approx::Even | Approx::Odd => {
                let branch = a.parity().expect("parity state");
                if let Some(vp) = vp {
                    let report = vconfig::sacs_observables_v(vp, branch)?;
                    let q = na(vconfig::mandel_q_m(vp, branch.into()))?;
                    let entropy = vconfig::linear_entropy_direct(vp, branch.into())?;
                    return Ok(Some(StateValues { report, q, entropy }));
                }
                let sp = SacsPoint::new(point.expect("computed above"), branch, params.config, n);
                let Some(report) = na(sacs::sacs_observables(params, &sp))? else {
                    return Ok(None);
                };
                let q = na(report.mandel_q())?;
                let entropy = sacs::linear_entropy(&sp)?;
                Ok(Some(StateValues { report, q, entropy }))
            }
            Approx::ExactEven | Approx::ExactOdd => {
                let (even, odd) = exact.as_ref().expect("computed above");
                let pair = if a == Approx::ExactEven { even } else { odd };
                let (report, entropy) = state_observables(params, &pair.state)?;
                let q = na(report.mandel_q())?;
                Ok(Some(StateValues { report, q, entropy }))
            }
        })
        .collect()
}

fn output_columns(kind: OutputKind) -> &'static [&'static str] {
    match kind {
        OutputKind::Energy => &["energy"],
        OutputKind::Photons => &["photons", "photons_var"],
        OutputKind::Populations => &["A11", "A22", "A33"],
        OutputKind::M => &["M", "M_var"],
        OutputKind::Q => &["Q"],
        OutputKind::Entropy => &["S_L"],
    }
}

fn output_cells(kind: OutputKind, v: Option<&StateValues>, n_atoms: u32) -> Vec<Cell> {
    let Some(v) = v else {
        return vec![Cell::Na; output_columns(kind).len()];
    };
    let r = &v.report;
    match kind {
        OutputKind::Energy => vec![(r.energy / f64::from(n_atoms)).into()],
        OutputKind::Photons => vec![r.n_photons.into(), r.var_photons.into()],
        OutputKind::Populations => r.populations.iter().map(|&p| p.into()).collect(),
        OutputKind::M => vec![r.m_excitations.into(), r.var_m.into()],
        OutputKind::Q => vec![v.q.into()],
        OutputKind::Entropy => vec![v.entropy.into()],
    }
}

fn dedup<T: PartialEq + Copy>(v: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for x in v {
        if !out.contains(x) {
            out.push(*x);
        }
    }
    out
}

fn grid_label(mu: f64, theta: f64, n: u32) -> String {
    format!("grid point μ = {mu}, θ = {theta}, N = {n}")
}

pub fn sweep(a: &SweepArgs) -> Result<Table, CliError> {
    let mu = Axis::parse("mu", &a.mu)?;
    let theta = Axis::parse("theta", &a.theta)?;
    let na_axis = Axis::parse("na", &a.na)?;
    let ranges = [mu.is_range(), theta.is_range(), na_axis.is_range()]
        .iter()
        .filter(|r| **r)
        .count();
    if ranges > 1 {
        return Err(CliError::BadInput(
            "only one of --mu, --theta, --na may be a range".into(),
        ));
    }
    let (swept, scale_for) = match (theta.is_range(), na_axis.is_range()) {
        (true, _) => ("theta", [Scale::Linear, a.scale, Scale::Linear]),
        (_, true) => ("na", [Scale::Linear, Scale::Linear, Scale::Linear]),
        _ => ("mu", [a.scale, Scale::Linear, Scale::Linear]),
    };
    if swept == "na" && a.scale == Scale::Log {
        return Err(CliError::BadInput("log spacing is not available for --na".into()));
    }
    let mus = mu.values(scale_for[0])?;
    let thetas = theta.values(scale_for[1])?;
    let atoms = setup::atom_numbers(&na_axis)?;
    let mut grid = Vec::new();
    for &m in &mus {
        for &t in &thetas {
            for &n in &atoms {
                grid.push((m, t, n));
            }
        }
    }
    let approxs = Approx::expand(&a.branch);
    let outputs = dedup(&a.outputs);
    if approxs.is_empty() || outputs.is_empty() {
        return Err(CliError::BadInput("need at least one branch and one output".into()));
    }
    let prepared: Vec<(ModelParams, Option<VParams>)> = grid
        .iter()
        .map(|&(m, t, n)| Ok((setup::params(&a.model, m, t, n)?, setup::v_params(&a.model, m, t, n))))
        .collect::<Result<_, CliError>>()?;
    let results: Vec<Vec<Option<StateValues>>> = grid
        .par_iter()
        .zip(&prepared)
        .map(|(&(m, t, n), (p, vp))| {
            evaluate(p, vp.as_ref(), &approxs, a.nu_max).map_err(|e| CliError::from_engine(e, &grid_label(m, t, n)))
        })
        .collect::<Result<_, _>>()?;

    let mut table = Table::new("sweep");
    for (k, v) in setup::describe_model(&a.model) {
        table.meta(k, v);
    }
    table.meta("mu", mu.spec());
    table.meta("theta", theta.spec());
    table.meta("na", na_axis.spec());
    table.meta("swept", swept);
    table.meta("scale", format!("{:?}", a.scale).to_lowercase());
    table.meta(
        "states",
        approxs.iter().map(|x| x.label()).collect::<Vec<_>>().join(","),
    );
    table.meta(
        "nu_max",
        a.nu_max
            .map_or("auto (doubling until |ΔE| < 1e-10)".to_string(), |n| n.to_string()),
    );
    table.meta(
        "units",
        "energy per atom; V with ω₂ = ω₃ (full Hamiltonian) uses closed forms and normal-regime limits, otherwise the numerical minimizer",
    );
    table.columns = vec!["mu".into(), "theta".into(), "na".into()];
    for x in &approxs {
        for &o in &outputs {
            for c in output_columns(o) {
                table.columns.push(format!("{}_{c}", x.label()));
            }
        }
    }
    for (&(m, t, n), vals) in grid.iter().zip(&results) {
        let mut row = vec![Cell::Num(m), Cell::Num(t), Cell::Int(i64::from(n))];
        for v in vals {
            for &o in &outputs {
                row.extend(output_cells(o, v.as_ref(), n));
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

pub fn phase_boundary(a: &BoundaryArgs) -> Result<(Table, String), CliError> {
    let scan_axis = Axis::parse("mu", &a.mu)?;
    if scan_axis.count < 2 || scan_axis.stop <= scan_axis.start {
        return Err(CliError::BadInput(
            "--mu must be a scan range lo:hi:count with hi > lo and count ≥ 2".into(),
        ));
    }
    if a.tolerance.is_nan() || a.tolerance <= 0.0 || a.threshold.is_nan() || a.threshold <= 0.0 {
        return Err(CliError::BadInput(
            "--tolerance and --threshold must be positive".into(),
        ));
    }
    let template = setup::params(&a.model, 0.0, a.theta, a.na)?;
    let direction = setup::couplings(template.config, 1.0, a.theta);
    let scan = BoundaryScan {
        lo: scan_axis.start,
        hi: scan_axis.stop,
        count: scan_axis.count,
        tolerance: a.tolerance,
        threshold: a.threshold,
    };
    let report = locate_boundary(&template, &direction, &scan, &MinimizeStrategy::default())
        .map_err(|e| CliError::from_engine(e, &format!("boundary scan μ ∈ [{}, {}]", scan.lo, scan.hi)))?;
    let mut table = Table::new("phase-boundary");
    for (k, v) in setup::describe_model(&a.model) {
        table.meta(k, v);
    }
    table.meta("theta", a.theta);
    table.meta("na", a.na);
    table.meta("scan", scan_axis.spec());
    table.meta("tolerance", a.tolerance);
    table.meta("threshold", a.threshold);
    table.columns = ["mu_c", "bracket_lo", "bracket_hi", "analytic", "minimizations"]
        .map(String::from)
        .to_vec();
    table.rows.push(vec![
        report.mu_c.into(),
        report.bracket.0.into(),
        report.bracket.1.into(),
        report.analytic.into(),
        Cell::Int(report.minimizations as i64),
    ]);
    let summary = match report.analytic {
        Some(x) => format!("boundary μ_c = {:.9} (numeric), {x:.9} (analytic)", report.mu_c),
        None => format!("boundary μ_c = {:.9} (numeric)", report.mu_c),
    };
    Ok((table, summary))
}

/// Per-column probability source.
enum Source {
    Closed(VParams, Approximation),
    Coherent(CoherentPoint),
    Sacs(SacsPoint),
    Exact(Vec<f64>),
    Missing,
}

impl Source {
    fn prob(&self, nu: u64) -> sacs_engine::Result<Option<f64>> {
        match self {
            Self::Closed(vp, ap) => vconfig::photon_dist_direct(vp, *ap, nu).map(Some),
            Self::Coherent(p) => Ok(Some(coherent_photon_probability(p, nu))),
            Self::Sacs(sp) => sacs::photon_probability(sp, nu).map(Some),
            Self::Exact(d) => Ok(Some(d.get(nu as usize).copied().unwrap_or(0.0))),
            Self::Missing => Ok(None),
        }
    }

    /// Upper bound on where the weight can sit.
    fn support_bound(&self) -> u64 {
        let poisson_bound = |x: f64| (x + 60.0 * (x + 1.0).sqrt() + 60.0).ceil() as u64;
        match self {
            Self::Closed(vp, _) => poisson_bound(vconfig::photon_stats_v(vp).0),
            Self::Coherent(p) => poisson_bound(p.alpha.norm_sqr()),
            Self::Sacs(sp) => poisson_bound(sp.point.alpha.norm_sqr()),
            Self::Exact(d) => d.len() as u64,
            Self::Missing => 0,
        }
    }
}

pub fn photon_dist(a: &PhotonArgs) -> Result<(Table, Vec<String>), CliError> {
    let params = setup::params(&a.model, a.mu, a.theta, a.na)?;
    let vp = setup::v_params(&a.model, a.mu, a.theta, a.na);
    let approxs = Approx::expand(&a.branch);
    if approxs.is_empty() {
        return Err(CliError::BadInput("need at least one branch".into()));
    }
    let ctx = grid_label(a.mu, a.theta, a.na);
    let engine = |e| CliError::from_engine(e, &ctx);
    let needs_point = vp.is_none()
        && approxs
            .iter()
            .any(|x| matches!(x, Approx::Coherent | Approx::Even | Approx::Odd));
    let point = if needs_point {
        Some(coherent_minimum(&params, None).map_err(engine)?)
    } else {
        None
    };
    let needs_exact = approxs
        .iter()
        .any(|x| matches!(x, Approx::ExactEven | Approx::ExactOdd));
    let exact = if needs_exact {
        Some(exact_states(&params, None).map_err(engine)?)
    } else {
        None
    };
    let mut sources = Vec::new();
    for &x in &approxs {
        let src = match (x, &vp) {
            (Approx::Coherent, Some(vp)) => Source::Closed(*vp, Approximation::Coherent),
            (Approx::Even | Approx::Odd, Some(vp)) => Source::Closed(*vp, x.parity().expect("parity").into()),
            (Approx::Coherent, None) => Source::Coherent(point.expect("computed")),
            (Approx::Even | Approx::Odd, None) => {
                let sp = SacsPoint::new(
                    point.expect("computed"),
                    x.parity().expect("parity"),
                    params.config,
                    params.n_atoms,
                );
                match na(sacs::norm_sq(&sp)).map_err(engine)? {
                    Some(_) => Source::Sacs(sp),
                    None => Source::Missing,
                }
            }
            (Approx::ExactEven | Approx::ExactOdd, _) => {
                let (even, odd) = exact.as_ref().expect("computed");
                let pair = if x == Approx::ExactEven { even } else { odd };
                Source::Exact(pair.state.photon_distribution())
            }
        };
        sources.push(src);
    }
    let bound = sources.iter().map(Source::support_bound).max().unwrap_or(0);
    let last = a.nu_max.map(u64::from);
    let mut rows = Vec::new();
    let mut cumulative = vec![0.0; sources.len()];
    let mut nu = 0u64;
    loop {
        let mut row = vec![Cell::Int(nu as i64)];
        for (k, s) in sources.iter().enumerate() {
            let p = s.prob(nu).map_err(engine)?;
            match p {
                Some(v) => cumulative[k] += v,
                None => cumulative[k] = 1.0,
            }
            row.push(p.into());
        }
        rows.push(row);
        let done = match last {
            Some(l) => nu >= l,
            None => nu >= bound || cumulative.iter().all(|c| 1.0 - c <= 1e-13),
        };
        if done {
            break;
        }
        nu += 1;
    }
    let mut table = Table::new("photon-dist");
    for (k, v) in setup::describe_model(&a.model) {
        table.meta(k, v);
    }
    table.meta("mu", a.mu);
    table.meta("theta", a.theta);
    table.meta("na", a.na);
    table.columns = vec!["nu".into()];
    table.columns.extend(approxs.iter().map(|x| match x {
        Approx::Coherent => "P_coh".to_string(),
        other => format!("P_{}", other.label()),
    }));
    let mut notes = Vec::new();
    for (k, c) in cumulative.iter().enumerate() {
        table.meta(&format!("sum {}", table.columns[k + 1].clone()), format!("{c:.16e}"));
    }
    if a.fit {
        let xs: Vec<f64> = (0..rows.len()).map(|v| v as f64).collect();
        for k in 0..sources.len() {
            let ys: Option<Vec<f64>> = rows
                .iter()
                .map(|r| match r[k + 1] {
                    Cell::Num(v) => Some(v),
                    _ => None,
                })
                .collect();
            let name = table.columns[k + 1].clone();
            let text = match ys.and_then(|ys| fit_gaussian(&xs, &ys)) {
                Some(f) => format!("mean {:.6}, sigma {:.6}, amplitude {:.6}", f.mean, f.sigma, f.amplitude),
                None => "NA".into(),
            };
            notes.push(format!("fit {name}: {text}"));
            table.meta(&format!("fit {name}"), text);
        }
    }
    table.rows = rows;
    Ok((table, notes))
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Table, CliError> {
    if a.count == 0 {
        return Err(CliError::BadInput("--count must be positive".into()));
    }
    let mut sectors = Vec::new();
    for b in dedup(&a.branch) {
        match b {
            Branch::Even => sectors.push(ParityBranch::Even),
            Branch::Odd => sectors.push(ParityBranch::Odd),
            other => {
                return Err(CliError::BadInput(format!(
                    "spectrum sectors are even and odd, got {other:?}"
                )))
            }
        }
    }
    let params = setup::params(&a.model, a.mu, a.theta, a.na)?;
    let ctx = grid_label(a.mu, a.theta, a.na);
    let engine = |e| CliError::from_engine(e, &ctx);
    let opts = FockOptions::default();
    let (nu_max, delta) = match a.nu_max {
        Some(n) => (n, None),
        None => {
            let g = ground_states(&params, &opts).map_err(engine)?;
            (g.nu_max, Some(g.cutoff_delta))
        }
    };
    let space = TruncatedSpace::new(a.na, nu_max);
    let h = build_hamiltonian(&params, &space, &opts).map_err(engine)?;
    let parts = parity_sectors(&space, params.config);
    let mut table = Table::new("spectrum");
    for (k, v) in setup::describe_model(&a.model) {
        table.meta(k, v);
    }
    table.meta("mu", a.mu);
    table.meta("theta", a.theta);
    table.meta("na", a.na);
    table.meta("nu_max", nu_max);
    table.meta("dimension", space.dim());
    table.meta(
        "cutoff_delta",
        delta.map_or("not computed (fixed cutoff)".into(), |d| format!("{d:.3e}")),
    );
    table.columns = ["sector", "k", "energy"].map(String::from).to_vec();
    for b in sectors {
        let pairs = lowest_in_sector(&h, &space, parts.get(b), a.count, &opts).map_err(engine)?;
        for (k, p) in pairs.iter().enumerate() {
            table
                .rows
                .push(vec![Cell::Text(b.name().into()), Cell::Int(k as i64), p.energy.into()]);
        }
    }
    Ok(table)
}

pub fn validate(a: &ValidateArgs) -> (Table, Vec<String>, bool) {
    let level = match a.level {
        Level::Fast => validation::Level::Fast,
        Level::Full => validation::Level::Full,
    };
    let outcomes = run_suite(level);
    let mut table = Table::new("validate");
    table.meta("level", format!("{:?}", a.level).to_lowercase());
    table.columns = ["check", "status", "max_deviation", "tolerance", "detail"]
        .map(String::from)
        .to_vec();
    let mut lines = Vec::new();
    let mut ok = true;
    for o in &outcomes {
        let status = match (o.informational, o.passed) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        ok &= o.passed || o.informational;
        lines.push(if o.informational {
            format!("{status} {}: {}", o.name, o.detail)
        } else {
            format!(
                "{status} {}: max dev {:.3e} (tol {:.0e}); {}",
                o.name, o.max_deviation, o.tolerance, o.detail
            )
        });
        table.rows.push(vec![
            Cell::Text(o.name.clone()),
            Cell::Text(status.into()),
            o.max_deviation.into(),
            o.tolerance.into(),
            Cell::Text(o.detail.replace(',', ";")),
        ]);
    }
    (table, lines, ok)
}
