//! The subcommands. Each writes its tables below the output directory and
//! finishes with `manifest.json`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use lobatto_core::eigen::{eigs, EigenOptions, Target};
use lobatto_core::gll::{cardinal_diff_matrix, gll_rule};
use lobatto_core::hamiltonian::nnz_count;
use lobatto_core::observables::{default_gabor_sigma, gabor_profile, standard_cutoff_order, CutoffEstimate};
use lobatto_core::propagator::{ChebyshevPropagator, PulseSpec, WavefunctionState, Workspace};
use lobatto_core::spa::{spa_optimize, SpaOptions};
use lobatto_core::Complex64;
use serde::Serialize;

use crate::config::{GridConfig, OptimizeConfig, PulseConfig, RunConfig, ScanParameter};
use crate::error::{AppError, AppResult};
use crate::hhg::{cutoff, propagate_basis, unit, yield_band, yield_of, BasisRun};
use crate::io::{write_checkpoint, write_matrix, Cell, Table};
use crate::manifest::{ManifestBuilder, RunManifest};
use crate::system::System;

fn create_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(format!("creating {}", dir.display()), e))
}

fn write_table(m: &mut ManifestBuilder, name: &str, t: &Table) -> AppResult<()> {
    let p = m.path(name);
    t.write(&p)?;
    m.output(&p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodesReport {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub corner_derivative: f64,
}

/// GLL nodes, weights and `D_00` of order `n`; a table is written when `out`
/// is given.
pub fn cmd_nodes(n: usize, out: Option<&Path>) -> AppResult<NodesReport> {
    if n == 0 {
        return Err(AppError::config("the collocation order must be at least 1"));
    }
    let rule = gll_rule(n)?;
    let d = cardinal_diff_matrix(&rule);
    let report = NodesReport { nodes: rule.nodes.clone(), weights: rule.weights.clone(), corner_derivative: d.get(0, 0) };
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut m = ManifestBuilder::new("nodes", dir, None);
        let mut t = Table::new(&["j", "node", "weight"])
            .comment(format!("Gauss-Lobatto-Legendre rule of order {n}"))
            .comment(format!("corner derivative D_00 = {:.17e}", report.corner_derivative));
        for (j, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            t.push([j.cell(), x.cell(), w.cell()]);
        }
        write_table(&mut m, "nodes.csv", &t)?;
        m.finish()?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub index: usize,
    pub energy: f64,
    pub residual: f64,
    pub exact: Option<f64>,
}

impl Level {
    pub fn error(&self) -> Option<f64> {
        self.exact.map(|e| self.energy - e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub elements: usize,
    pub points: usize,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStatesReport {
    pub points: usize,
    pub levels: Vec<Level>,
    pub sweep: Vec<SweepRow>,
}

impl BoundStatesReport {
    pub fn level(&self, index: usize) -> Option<&Level> {
        self.levels.iter().find(|l| l.index == index)
    }
}

fn solve_levels(sys: &System, cfg: &RunConfig, lowest: usize) -> AppResult<Vec<Level>> {
    let opts = EigenOptions {
        backend: cfg.eigen.backend.into(),
        tolerance: cfg.eigen.tolerance,
        seed: cfg.seed,
        ..Default::default()
    };
    let mut out = Vec::new();
    let dim = sys.hamiltonian.dim();
    let mut push = |target: Target, first: usize| -> AppResult<()> {
        let r = eigs(&sys.hamiltonian, target, &opts)?;
        for k in 0..r.len() {
            let index = first + k;
            if out.iter().any(|l: &Level| l.index == index) {
                continue;
            }
            out.push(Level { index, energy: r.values[k], residual: r.residuals[k], exact: sys.exact_level(index) });
        }
        Ok(())
    };
    if lowest > 0 {
        push(Target::Lowest(lowest.min(dim)), 0)?;
    }
    for &l in &cfg.eigen.levels {
        if l >= dim {
            return Err(lobatto_core::Error::CountExceedsDimension { count: l + 1, dimension: dim }.into());
        }
        if l >= lowest {
            push(Target::Indices { lo: l, hi: l + 1 }, l)?;
        }
    }
    out.sort_by_key(|l| l.index);
    Ok(out)
}

/// Eigenvalue table of the configured system, with errors against the
/// analytic levels of box and Morse potentials; optionally a sweep over
/// element counts.
pub fn cmd_bound_states(cfg: &RunConfig, out: &Path) -> AppResult<BoundStatesReport> {
    create_dir(out)?;
    let mut m = ManifestBuilder::new("bound-states", out, Some(cfg));
    let sys = System::from_config(cfg)?;
    let levels = solve_levels(&sys, cfg, cfg.eigen.states)?;
    let mut t = Table::new(&["index", "energy_hartree", "residual", "exact_hartree", "error_hartree"])
        .comment("eigenvalues of the mass-weighted Hamiltonian")
        .comment(format!("N = {}, M = {}, points = {}", sys.grid.order, sys.grid.num_elements, sys.points()));
    for l in &levels {
        let (ex, er) = match (l.exact, l.error()) {
            (Some(a), Some(b)) => (a.cell(), b.cell()),
            _ => (String::new(), String::new()),
        };
        t.push([l.index.cell(), l.energy.cell(), l.residual.cell(), ex, er]);
    }
    write_table(&mut m, "eigenvalues.csv", &t)?;
    let mut sweep = Vec::new();
    if let Some(b) = &cfg.bound_states {
        let tracked: Vec<usize> = if cfg.eigen.levels.is_empty() { vec![0] } else { cfg.eigen.levels.clone() };
        let mut st = Table::new(&["elements", "points", "index", "energy_hartree", "error_hartree"])
            .comment("eigenvalue accuracy against the number of grid points");
        for &elements in &b.sweep {
            let grid = GridConfig { elements: Some(elements), ..cfg.grid.clone() };
            let s = System::build(sys.potential.clone(), &grid)?;
            let sub = RunConfig { eigen: crate::config::EigenConfig { levels: tracked.clone(), ..cfg.eigen.clone() }, ..cfg.clone() };
            for level in solve_levels(&s, &sub, 0)? {
                st.push([
                    s.grid.num_elements.cell(),
                    s.points().cell(),
                    level.index.cell(),
                    level.energy.cell(),
                    level.error().map(|e| e.cell()).unwrap_or_default(),
                ]);
                sweep.push(SweepRow { elements: s.grid.num_elements, points: s.points(), level });
            }
        }
        write_table(&mut m, "convergence.csv", &st)?;
    }
    m.meta("points", sys.points());
    m.meta("elements", sys.grid.num_elements);
    m.meta("grid_hash", format!("{:016x}", sys.grid.fingerprint()));
    m.finish()?;
    Ok(BoundStatesReport { points: sys.points(), levels, sweep })
}

fn pulse_of(cfg: &RunConfig) -> AppResult<&PulseConfig> {
    cfg.pulse.as_ref().ok_or_else(|| AppError::config("this command needs a [pulse] table"))
}

/// Field-free system, eigenbasis and bounds for the driven commands.
pub struct Prepared {
    pub system: System,
    pub basis: lobatto_core::eigen::EigenResult,
    pub bounds: lobatto_core::eigen::SpectralBounds,
}

pub fn prepare(cfg: &RunConfig, count: usize) -> AppResult<Prepared> {
    let system = System::from_config(cfg)?;
    let basis = system.lowest_states(&cfg.eigen, count.max(cfg.eigen.states), cfg.seed)?;
    let bounds = system.bounds()?;
    Ok(Prepared { system, basis, bounds })
}

pub fn run_basis(p: &Prepared, cfg: &RunConfig, count: usize, pulse: &PulseSpec) -> AppResult<BasisRun> {
    let prop = cfg.propagation.resolve(cfg.pulse.as_ref())?;
    propagate_basis(&p.system.hamiltonian, &p.basis, count, pulse, &prop, &p.bounds, None)
}

/// Yield band from the configuration, or from the cutoff of the φ₀ start
/// in `run`. Returns the band and the cutoff order used.
pub fn resolve_band(cfg: &RunConfig, run: &BasisRun, omega0: f64) -> AppResult<((f64, f64), f64)> {
    let order = match cfg.spectrum.cutoff_order {
        Some(q) => q,
        None => {
            let spec = run.spectrum(&unit(run.series.basis, 0), &cfg.spectrum)?;
            cutoff(&spec, omega0, &cfg.spectrum)?.order
        }
    };
    Ok((yield_band(order, omega0), order))
}

#[derive(Debug, Clone)]
pub struct HhgReport {
    pub cutoff: CutoffEstimate,
    pub ground_cutoff: CutoffEstimate,
    pub standard_cutoff: f64,
    pub band: (f64, f64),
    pub yield_value: f64,
    pub norm_drift: f64,
    pub ddot0: f64,
    pub manifest: RunManifest,
}

/// Propagation of the configured initial state with dipole, spectrum,
/// Gabor and ionization outputs.
pub fn cmd_hhg(cfg: &RunConfig, out: &Path) -> AppResult<HhgReport> {
    create_dir(out)?;
    let pcfg = pulse_of(cfg)?;
    let pulse = pcfg.pulse();
    let spec = cfg.initial.spec();
    let count = spec.basis_needed().max(1);
    let mut m = ManifestBuilder::new("hhg", out, Some(cfg));
    if let crate::config::PotentialConfig::Tabulated { path } = &cfg.potential {
        m.input(path)?;
        m.meta("potential_interpolation", "natural cubic spline");
    }
    let p = prepare(cfg, count)?;
    let bound = p.system.bound_states(&cfg.eigen, cfg.seed)?;
    let prop = cfg.propagation.resolve(Some(pcfg))?;
    let run = propagate_basis(
        &p.system.hamiltonian,
        &p.basis,
        count,
        &pulse,
        &prop,
        &p.bounds,
        Some((&bound, cfg.propagation.ionization_stride)),
    )?;
    let c = spec.coefficients(count)?;
    let ddot = run.acceleration(&c)?;
    let mut t = Table::new(&["t", "ddot", "field"]).comment("dipole acceleration <dV/dx>(t) and driving field E(t)");
    for ((ti, a), f) in run.times.iter().zip(&ddot).zip(&run.fields) {
        t.push([*ti, *a, *f]);
    }
    write_table(&mut m, "dipole.csv", &t)?;

    let spectrum = run.spectrum(&c, &cfg.spectrum)?;
    let omega0 = pcfg.omega0;
    let mut t = Table::new(&["omega_au", "harmonic_order", "S", "abs_ddot_sq"])
        .comment("harmonic spectrum S = |ddot(omega)|^2 / omega^2")
        .comment(format!(
            "cos^4 ramp over {} of the record at each end, zero padding to {} samples",
            cfg.spectrum.ramp_fraction, spectrum.padded_len
        ));
    for ((w, s), pw) in spectrum.omega.iter().zip(&spectrum.s).zip(&spectrum.power) {
        t.push([*w, w / omega0, *s, *pw]);
    }
    write_table(&mut m, "spectrum.csv", &t)?;

    let estimate = cutoff(&spectrum, omega0, &cfg.spectrum)?;
    let ground = if c == unit(count, 0) {
        estimate.clone()
    } else {
        cutoff(&run.spectrum(&unit(count, 0), &cfg.spectrum)?, omega0, &cfg.spectrum)?
    };
    let order = cfg.spectrum.cutoff_order.unwrap_or(ground.order);
    let band = yield_band(order, omega0);
    let yield_value = lobatto_core::observables::yield_functional(&spectrum, band.0, band.1)?;

    let sigma = cfg.spectrum.gabor_sigma.unwrap_or_else(|| default_gabor_sigma(omega0));
    let g = gabor_profile(&ddot, run.series.dt, sigma, band, cfg.spectrum.gabor_omegas, cfg.spectrum.gabor_stride)?;
    let mut t = Table::new(&["t", "omega", "value"]).comment("Gabor transform |int ddot(t') g(t'-t) exp(-i omega t') dt'|^2");
    for (i, ti) in g.times.iter().enumerate() {
        for (k, w) in g.omegas.iter().enumerate() {
            t.push([*ti, *w, g.values[i * g.omegas.len() + k]]);
        }
    }
    write_table(&mut m, "gabor.csv", &t)?;
    let mut t = Table::new(&["t", "profile"]).comment("Gabor transform integrated over the yield band");
    for (ti, v) in g.times.iter().zip(&g.profile) {
        t.push([*ti, *v]);
    }
    write_table(&mut m, "gabor_profile.csv", &t)?;
    if let Some(proj) = &run.projections {
        let ion = proj.ionization(&c);
        let mut t = Table::new(&["t", "ionization"])
            .comment(format!("1 - sum of bound-state populations over {} states with E < 0", bound.len()));
        for (ti, v) in proj.times.iter().zip(&ion) {
            t.push([*ti, *v]);
        }
        write_table(&mut m, "ionization.csv", &t)?;
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); p.system.hamiltonian.dim()];
    for (cj, st) in c.iter().zip(&run.final_states) {
        for (a, b) in psi.iter_mut().zip(&st.amplitudes) {
            *a += cj * b;
        }
    }
    let time = run.final_states[0].time;
    let (bin, json) = write_checkpoint(&m.path("final_state"), &WavefunctionState { amplitudes: psi, time }, p.system.grid.fingerprint())?;
    m.output(&bin)?;
    m.output(&json)?;

    let ip = -p.basis.values[0];
    let standard = standard_cutoff_order(ip, pcfg.e0, omega0);
    m.meta("eigenvalues", &p.basis.values);
    m.meta("points", p.system.points());
    m.meta("grid_hash", format!("{:016x}", p.system.grid.fingerprint()));
    m.meta("spectral_bounds", [p.bounds.field_free_lo, p.bounds.field_free_hi]);
    m.meta("bounds_method", format!("{:?}", p.bounds.method));
    m.meta("renormalization", format!("{:?}", prop.renormalization));
    m.meta("max_chebyshev_terms", run.max_terms);
    m.meta("max_spectral_width", run.max_width);
    m.meta("norm_drift", run.norm_drift);
    m.meta("cutoff_order_estimate", estimate.order);
    m.meta("ground_state_cutoff_order_estimate", ground.order);
    m.meta("standard_cutoff_order", standard);
    m.meta("ponderomotive_energy", pcfg.e0 * pcfg.e0 / (4.0 * omega0 * omega0));
    m.meta("yield_band", band);
    m.meta("yield", yield_value);
    m.meta("gabor_sigma", sigma);
    m.meta("bound_states", bound.len());
    if run.norm_drift > 1e-8 {
        m.warn(format!("norm drift {:.3e} exceeds 1e-8", run.norm_drift));
    }
    let manifest = m.finish()?;
    Ok(HhgReport {
        cutoff: estimate,
        ground_cutoff: ground,
        standard_cutoff: standard,
        band,
        yield_value,
        norm_drift: run.norm_drift,
        ddot0: ddot[0],
        manifest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub value: f64,
    pub yield_value: f64,
    pub ddot0: f64,
    pub flipped: Option<(f64, f64)>,
}

/// Coefficients of the scanned superposition at `x`.
pub fn scan_coefficients(parameter: ScanParameter, partner: usize, count: usize, x: f64) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); count];
    match parameter {
        ScanParameter::Theta => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            c[0] = Complex64::new(s, 0.0);
            c[partner] = Complex64::from_polar(s, x);
        }
        ScanParameter::Phi => {
            c[0] = Complex64::new(x.cos(), 0.0);
            c[1] = Complex64::new(x.sin(), 0.0);
        }
    }
    c
}

/// `J` and `d̈(0)` on an evenly spaced grid over `[0, 2π]`.
pub fn cmd_scan(cfg: &RunConfig, out: &Path) -> AppResult<Vec<ScanRow>> {
    create_dir(out)?;
    let sc = cfg.scan.as_ref().ok_or_else(|| AppError::config("scan needs a [scan] table"))?;
    let pcfg = pulse_of(cfg)?;
    let pulse = pcfg.pulse();
    let partner = match sc.parameter {
        ScanParameter::Theta => sc.partner,
        ScanParameter::Phi => 1,
    };
    if partner == 0 {
        return Err(AppError::config("scan.partner must differ from the ground state"));
    }
    let count = partner + 1;
    let mut m = ManifestBuilder::new("scan", out, Some(cfg));
    let p = prepare(cfg, count)?;
    let plus = run_basis(&p, cfg, count, &pulse)?;
    let minus = if sc.flip { Some(run_basis(&p, cfg, count, &pulse.flipped())?) } else { None };
    let (band, order) = resolve_band(cfg, &plus, pcfg.omega0)?;
    let mut rows = Vec::new();
    let mut cols = vec!["theta_or_phi", "J", "ddot0"];
    if minus.is_some() {
        cols.extend(["J_flipped", "ddot0_flipped"]);
    }
    let mut t = Table::new(&cols)
        .comment("yield J = int |ddot(omega)|^2 over the band and initial dipole acceleration")
        .comment(format!("band [{:.6}, {:.6}] a.u.", band.0, band.1));
    for k in 0..sc.points {
        let x = 2.0 * PI * k as f64 / (sc.points - 1) as f64;
        let c = scan_coefficients(sc.parameter, partner, count, x);
        let eval = |run: &BasisRun| -> AppResult<(f64, f64)> {
            Ok((yield_of(run, &c, &cfg.spectrum, band)?, run.acceleration(&c)?[0]))
        };
        let (j, d0) = eval(&plus)?;
        let flipped = minus.as_ref().map(eval).transpose()?;
        let mut cells = vec![x, j, d0];
        if let Some((a, b)) = flipped {
            cells.extend([a, b]);
        }
        t.push(cells);
        rows.push(ScanRow { value: x, yield_value: j, ddot0: d0, flipped });
    }
    write_table(&mut m, "scan.csv", &t)?;
    m.meta("cutoff_order", order);
    m.meta("yield_band", band);
    m.meta("norm_drift", plus.norm_drift);
    m.finish()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub coefficients: Vec<(f64, f64)>,
    pub yield_value: f64,
    pub equal_weights_yield: f64,
    /// `J/J_equal − 1`.
    pub improvement: f64,
    pub history: Vec<f64>,
    pub active_history: Vec<usize>,
    pub evaluations: usize,
    pub band: (f64, f64),
}

/// Optimizes `J` over superpositions of a precomputed basis run.
pub fn optimize_on(run: &BasisRun, cfg: &RunConfig, oc: &OptimizeConfig, band: (f64, f64)) -> AppResult<OptimizeReport> {
    let count = oc.max_states;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let equal: Vec<Complex64> = if count >= 2 {
        let mut e = unit(count, 0);
        e[0] = Complex64::new(s, 0.0);
        e[1] = Complex64::new(s, 0.0);
        e
    } else {
        unit(count, 0)
    };
    let guess: Vec<Complex64> = if oc.guess.is_empty() {
        equal[..count.min(2)].to_vec()
    } else {
        oc.guess.iter().map(|(re, im)| Complex64::new(*re, *im)).collect()
    };
    let opts = SpaOptions {
        max_states: count,
        plateau: oc.plateau,
        max_sweeps: oc.max_sweeps,
        line_tolerance: oc.line_tolerance,
        fix_first_phase: true,
    };
    let mut failure = None;
    let objective = |c: &[Complex64]| -> lobatto_core::Result<f64> {
        match yield_of(run, c, &cfg.spectrum, band) {
            Ok(v) => Ok(v),
            Err(AppError::Numerical(e)) => Err(e),
            Err(e) => {
                failure = Some(e);
                Err(lobatto_core::Error::Degenerate("objective evaluation failed"))
            }
        }
    };
    let r = spa_optimize(objective, &guess, &opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let r = r?;
    let equal_weights_yield = yield_of(run, &equal, &cfg.spectrum, band)?;
    Ok(OptimizeReport {
        coefficients: r.coefficients.iter().map(|z| (z.re, z.im)).collect(),
        yield_value: r.value,
        equal_weights_yield,
        improvement: r.value / equal_weights_yield - 1.0,
        history: r.history,
        active_history: r.active_history,
        evaluations: r.evaluations,
        band,
    })
}

pub fn cmd_optimize(cfg: &RunConfig, out: &Path) -> AppResult<OptimizeReport> {
    create_dir(out)?;
    let oc = cfg.optimize.clone().ok_or_else(|| AppError::config("optimize needs an [optimize] table"))?;
    let pcfg = pulse_of(cfg)?;
    let mut m = ManifestBuilder::new("optimize", out, Some(cfg));
    let p = prepare(cfg, oc.max_states)?;
    let run = run_basis(&p, cfg, oc.max_states, &pcfg.pulse())?;
    let (band, order) = resolve_band(cfg, &run, pcfg.omega0)?;
    let report = optimize_on(&run, cfg, &oc, band)?;
    let path = m.path("optimum.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text).map_err(|e| AppError::io(format!("writing {}", path.display()), e))?;
    m.output(&path)?;
    let mut t = Table::new(&["sweep", "active_states", "J"]).comment("yield after each optimizer sweep");
    for (k, (j, a)) in report.history.iter().zip(&report.active_history).enumerate() {
        t.push([k.cell(), a.cell(), j.cell()]);
    }
    write_table(&mut m, "trace.csv", &t)?;
    m.meta("cutoff_order", order);
    m.meta("yield_band", band);
    m.finish()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub order: usize,
    pub elements: usize,
    pub dimension: usize,
    pub stored: usize,
    pub formula: Option<usize>,
    /// Upper triangle of a dense matrix over all grid points.
    pub dense: usize,
    pub spectral_width: f64,
    pub matvec_seconds: f64,
    pub step_seconds: f64,
}

/// Storage, spectral width and timings for `(N, M)` grids, uniform or
/// mapped with the configured `β`-mapping adjusted to `M` elements.
pub fn cmd_benchmark(cfg: &RunConfig, out: &Path) -> AppResult<Vec<BenchmarkRow>> {
    create_dir(out)?;
    let bc = cfg.benchmark.as_ref().ok_or_else(|| AppError::config("benchmark needs a [benchmark] table"))?;
    let mut m = ManifestBuilder::new("benchmark", out, Some(cfg));
    let potential = crate::system::load_potential(&cfg.potential)?;
    let pulse = cfg.pulse.as_ref().map(|p| p.pulse()).unwrap_or_else(PulseSpec::field_free);
    let mut rows = Vec::new();
    let mut t = Table::new(&[
        "N", "M", "dimension", "stored_entries", "formula_entries", "dense_entries", "spectral_width", "matvec_s", "step_s",
    ])
    .comment("storage of the banded Hamiltonian against the dense symmetric count");
    for &(n, elements) in &bc.pairs {
        let uniform = if bc.mapped { None } else { Some((cfg.grid.r_max - cfg.grid.r_min) / elements as f64) };
        let grid = GridConfig { order: n, elements: Some(elements), uniform, ..cfg.grid.clone() };
        let sys = System::build(potential.clone(), &grid)?;
        let h = &sys.hamiltonian;
        let dim = h.dim();
        let bounds = sys.bounds()?;
        let x: Vec<f64> = (0..dim).map(|i| ((i % 7) as f64).sin()).collect();
        let reps = 20;
        let t0 = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(h.apply(&x)?);
        }
        let matvec = t0.elapsed().as_secs_f64() / reps as f64;
        let prop = ChebyshevPropagator::new(h, bounds, cfg.propagation.tolerance, cfg.propagation.resolve(cfg.pulse.as_ref()).map(|p| p.renormalization).unwrap_or(lobatto_core::propagator::Renormalization::PerStep));
        let mut psi = WavefunctionState::from_real(&x);
        let n2 = psi.norm_sqr().sqrt();
        psi.amplitudes.iter_mut().for_each(|z| *z /= n2);
        let mut ws = Workspace::new(dim);
        let t0 = Instant::now();
        for _ in 0..bc.steps {
            prop.step(&mut psi, &pulse, cfg.propagation.dt, &mut ws)?;
        }
        let step = t0.elapsed().as_secs_f64() / bc.steps.max(1) as f64;
        let row = BenchmarkRow {
            order: n,
            elements,
            dimension: dim,
            stored: h.stored_entries(),
            formula: nnz_count(n, elements),
            dense: sys.points() * (sys.points() + 1) / 2,
            spectral_width: bounds.field_free_hi - bounds.field_free_lo,
            matvec_seconds: matvec,
            step_seconds: step,
        };
        t.push([
            n.cell(),
            elements.cell(),
            dim.cell(),
            row.stored.cell(),
            row.formula.map(|f| f.cell()).unwrap_or_default(),
            row.dense.cell(),
            row.spectral_width.cell(),
            matvec.cell(),
            step.cell(),
        ]);
        if n == bc.pairs[0].0 && elements == bc.pairs[0].1 {
            let p = m.path("matrix_first_pair.txt");
            write_matrix(&p, h)?;
            m.output(&p)?;
        }
        rows.push(row);
    }
    write_table(&mut m, "benchmark.csv", &t)?;
    m.finish()?;
    Ok(rows)
}
