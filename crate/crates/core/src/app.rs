//! Time integration driver: initial displacement, Euler and BDF2 steps,
//! configuration, snapshot and diagnostics output, relaxation benchmark.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Deserialize;

use crate::ampere::{ampere_step_bdf2, ampere_step_with_source, ThetaHistory};
use crate::curlfree::{relax, relax_in_place, relax_with_stream, RelaxReport};
use crate::diagnostics::{
    curl_residual, discrete_energy, dt_star, gauss_residual, min_concentration, peclet_field,
    total_mass, StepDiagnostics,
};
use crate::error::{Error, Result};
use crate::grid::{node_divergence, node_gradient, stream_curl, EdgeField, GridSpec, NodeField};
use crate::mms::{self, DtRule, MmsCase, StudyOptions};
use crate::model::{
    charge_density, eval_dielectric_edges, eval_dielectric_nodes, eval_fixed_charge, mu_cr_all,
    solvent_concentration, Dielectric, FixedCharge, ModelParams, SpeciesParams,
};
use crate::np_scheme::{
    assemble_np_operator, check_positive, compute_dg, compute_fluxes, solve_np, BFunctionKind,
};

/// Charge imbalance tolerated by [`build_initial_displacement`].
pub const NEUTRALITY_TOL: f64 = 1e-12;

fn fft_2d(data: &mut [Complex<f64>], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (fy, fx) = if inverse {
        (planner.plan_fft_inverse(ny), planner.plan_fft_inverse(nx))
    } else {
        (planner.plan_fft_forward(ny), planner.plan_fft_forward(nx))
    };
    for row in data.chunks_exact_mut(ny) {
        fy.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = data[i * ny + j];
        }
        fx.process(&mut col);
        for i in 0..nx {
            data[i * ny + j] = col[i];
        }
    }
}

/// Zero-mean periodic solution of `2 kappa^2 div_h grad_h psi = rho - mean(rho)`.
pub fn solve_constant_poisson(rho: &NodeField, kappa: f64) -> NodeField {
    let g = *rho.grid();
    let (nx, ny) = (g.nx, g.ny);
    let mut data: Vec<Complex<f64>> = rho.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_2d(&mut data, nx, ny, false);
    let k2 = 2.0 * kappa * kappa;
    for i in 0..nx {
        let sx = (std::f64::consts::PI * i as f64 / nx as f64).sin();
        let lx = -4.0 * sx * sx / (g.dx * g.dx);
        for j in 0..ny {
            let sy = (std::f64::consts::PI * j as f64 / ny as f64).sin();
            let lam = lx - 4.0 * sy * sy / (g.dy * g.dy);
            let k = i * ny + j;
            data[k] = if i == 0 && j == 0 {
                Complex::new(0.0, 0.0)
            } else {
                data[k] / (k2 * lam)
            };
        }
    }
    fft_2d(&mut data, nx, ny, true);
    let scale = 1.0 / (nx * ny) as f64;
    NodeField::from_vec(g, data.iter().map(|z| z.re * scale).collect())
}

/// Gradient field `D` with `2 kappa^2 div_h D = rho` (for neutral `rho`).
pub fn constant_coefficient_displacement(rho: &NodeField, kappa: f64) -> EdgeField {
    node_gradient(&solve_constant_poisson(rho, kappa))
}

/// `-2 kappa^2 div_h (eps grad_h phi)`.
pub fn dielectric_operator(phi: &NodeField, eps_edges: &EdgeField, kappa: f64) -> NodeField {
    let flux = node_gradient(phi).zip_map(eps_edges, |a, e| a * e);
    node_divergence(&flux).map(|v| -2.0 * kappa * kappa * v)
}

/// Zero-mean solution of `-2 kappa^2 div_h (eps grad_h phi) = rho` by
/// Jacobi-preconditioned conjugate gradients.
pub fn solve_dielectric_potential(
    rho: &NodeField,
    eps_edges: &EdgeField,
    kappa: f64,
    tol: f64,
) -> Result<NodeField> {
    let g = *rho.grid();
    let n = g.len();
    let mean = rho.sum() / n as f64;
    let b: Vec<f64> = rho.values().iter().map(|v| v - mean).collect();
    let k2 = 2.0 * kappa * kappa;
    let diag: Vec<f64> = (0..g.nx)
        .flat_map(|i| (0..g.ny).map(move |j| (i, j)))
        .map(|(i, j)| {
            let k = g.idx(i, j);
            k2 * ((eps_edges.x[k] + eps_edges.x[g.idx(g.im(i), j)]) / (g.dx * g.dx)
                + (eps_edges.y[k] + eps_edges.y[g.idx(i, g.jm(j))]) / (g.dy * g.dy))
        })
        .collect();
    let apply = |v: &[f64]| {
        dielectric_operator(&NodeField::from_vec(g, v.to_vec()), eps_edges, kappa).into_values()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(NodeField::zeros(g));
    }
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n;
    let mut rel = 1.0;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            let m = x.iter().sum::<f64>() / n as f64;
            return Ok(NodeField::from_vec(g, x.iter().map(|v| v - m).collect()));
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: rel,
    })
}

/// Initial displacement satisfying the discrete Gauss law for `rho` with
/// `D / eps` relaxed to a discrete gradient. The variable-coefficient
/// potential gives a close start; a constant-coefficient correction then
/// restores the Gauss law to round-off before relaxing.
pub fn displacement_for_charge(
    rho: &NodeField,
    eps_edges: &EdgeField,
    params: &ModelParams,
) -> Result<(EdgeField, RelaxReport)> {
    let total = rho.grid().cell_area() * rho.sum();
    if total.abs() > NEUTRALITY_TOL {
        return Err(Error::NonNeutral { total });
    }
    let k2 = 2.0 * params.kappa * params.kappa;
    let mut d = if eps_edges.max() == eps_edges.min() {
        constant_coefficient_displacement(rho, params.kappa)
    } else {
        let phi = solve_dielectric_potential(rho, eps_edges, params.kappa, 1e-12)?;
        let mut d = node_gradient(&phi).zip_map(eps_edges, |a, e| -a * e);
        let residual = rho.zip_map(&node_divergence(&d), |r, v| r - k2 * v);
        d.axpy(
            1.0,
            &constant_coefficient_displacement(&residual, params.kappa),
        );
        d
    };
    let report = relax_in_place(&mut d, eps_edges, params.eps_tol, params.max_sweeps);
    report.ensure_converged()?;
    Ok((d, report))
}

pub fn build_initial_displacement(
    c0: &[NodeField],
    rho_f: &NodeField,
    params: &ModelParams,
) -> Result<EdgeField> {
    let grid = *c0[0].grid();
    let eps = eval_dielectric_edges(params, &grid)?;
    let rho = charge_density(c0, params, rho_f);
    Ok(displacement_for_charge(&rho, &eps, params)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Euler,
    Bdf2,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Integrator::Euler),
            "bdf2" => Ok(Integrator::Bdf2),
            other => Err(Error::Config(format!(
                "unknown integrator {other:?} (expected euler or bdf2)"
            ))),
        }
    }
}

/// External source terms for manufactured solutions: flux sources `g^l`
/// entering `J^l` as `-kappa g^l`, and a current `S` entering the Ampere
/// update as `S / (2 kappa^2)`.
pub trait Forcing {
    fn flux_sources(&self, t_old: f64, t_new: f64, grid: &GridSpec) -> Vec<EdgeField>;
    fn current_source(&self, t_old: f64, t_new: f64, grid: &GridSpec) -> EdgeField;
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub n: usize,
    pub t: f64,
    pub c: Vec<NodeField>,
    pub d: EdgeField,
    /// Charge carried by `S` alone (zero without forcing); the Gauss law
    /// reads `2 kappa^2 div D = sum q c + rho_f + background`.
    pub background: NodeField,
    pub theta_hist: ThetaHistory,
    /// Divergence-free part of the last displacement update, kept as a cell
    /// stream function (`Theta = stream_curl(theta)`) so that it stays
    /// divergence-free to round-off from step to step.
    pub theta: NodeField,
    pub theta_prev: Option<NodeField>,
    pub c_prev: Option<Vec<NodeField>>,
    pub d_prev: Option<EdgeField>,
    pub dg_prev: Option<Vec<EdgeField>>,
    pub background_prev: Option<NodeField>,
    /// Correlation potentials at the current concentrations.
    pub mu: Vec<NodeField>,
}

pub struct Simulation {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub dt: f64,
    pub integrator: Integrator,
    pub eps_edges: EdgeField,
    pub eps_nodes: NodeField,
    pub rho_f: NodeField,
    pub state: SimState,
    pub init_report: RelaxReport,
    /// Wall time spent in relaxation during steps, in seconds.
    pub relax_seconds: f64,
    forcing: Option<Box<dyn Forcing>>,
}

impl Simulation {
    pub fn new(
        params: ModelParams,
        c0: Vec<NodeField>,
        dt: f64,
        integrator: Integrator,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if c0.len() != params.num_species() {
            return Err(Error::InvalidParams(format!(
                "{} initial concentrations for {} species",
                c0.len(),
                params.num_species()
            )));
        }
        let grid = *c0[0].grid();
        for (species, c) in c0.iter().enumerate() {
            if let Some(k) = c.values().iter().position(|v| !(*v > 0.0)) {
                return Err(Error::NonPositiveConcentration {
                    species,
                    i: k / grid.ny,
                    j: k % grid.ny,
                    value: c.values()[k],
                });
            }
        }
        let eps_edges = eval_dielectric_edges(&params, &grid)?;
        let eps_nodes = eval_dielectric_nodes(&params, &grid)?;
        let rho_f = eval_fixed_charge(&params, &grid);
        let rho = charge_density(&c0, &params, &rho_f);
        let (d, init_report) = displacement_for_charge(&rho, &eps_edges, &params)?;
        let mu = mu_cr_all(&c0, &params, &eps_nodes)?;
        let state = SimState {
            n: 0,
            t: 0.0,
            c: c0,
            d,
            background: NodeField::zeros(grid),
            theta_hist: ThetaHistory::default(),
            theta: NodeField::zeros(grid),
            theta_prev: None,
            c_prev: None,
            d_prev: None,
            dg_prev: None,
            background_prev: None,
            mu,
        };
        Ok(Self {
            params,
            grid,
            dt,
            integrator,
            eps_edges,
            eps_nodes,
            rho_f,
            state,
            init_report,
            relax_seconds: 0.0,
            forcing: None,
        })
    }

    /// Manufactured-solution run from exact data. The sampled exact
    /// displacement is already a discrete gradient, so it is kept as is and
    /// its divergence defines the initial background charge.
    pub fn mms(
        case: MmsCase,
        params: ModelParams,
        grid: GridSpec,
        dt: f64,
        integrator: Integrator,
    ) -> Result<Self> {
        let (c0, d0) = mms::exact_fields(0.0, &grid);
        let mut uniform = params.clone();
        uniform.fixed_charge = FixedCharge::None;
        let mut sim = Self::new(uniform, c0, dt, integrator)?;
        let (d0, report) = relax(
            &d0,
            &sim.eps_edges,
            sim.params.eps_tol,
            sim.params.max_sweeps,
        );
        report.ensure_converged()?;
        let k2 = 2.0 * sim.params.kappa * sim.params.kappa;
        let rho = charge_density(&sim.state.c, &sim.params, &sim.rho_f);
        sim.state.background = node_divergence(&d0).zip_map(&rho, |v, r| k2 * v - r);
        sim.state.d = d0;
        sim.init_report = report;
        sim.forcing = Some(Box::new(case));
        Ok(sim)
    }

    pub fn with_forcing(mut self, forcing: Box<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    /// Fixed charge plus background.
    pub fn total_fixed_charge(&self) -> NodeField {
        self.rho_f.zip_map(&self.state.background, |a, b| a + b)
    }

    pub fn gauss_residual(&self) -> NodeField {
        gauss_residual(
            &self.state.d,
            &self.state.c,
            &self.total_fixed_charge(),
            &self.params,
        )
    }

    pub fn curl_residual(&self) -> NodeField {
        curl_residual(&self.state.d, &self.eps_edges)
    }

    pub fn energy(&self) -> Result<f64> {
        discrete_energy(
            &self.state.c,
            &self.state.d,
            &self.eps_edges,
            &self.state.mu,
            &self.params,
        )
    }

    pub fn masses(&self) -> Vec<f64> {
        self.state.c.iter().map(total_mass).collect()
    }

    /// Diagnostics of the current state without step-specific entries.
    pub fn initial_diagnostics(&self) -> Result<StepDiagnostics> {
        let dg = compute_dg(&self.state.d, &self.eps_edges, &self.state.mu, &self.params);
        Ok(StepDiagnostics {
            step: self.state.n,
            time: self.state.t,
            mass_per_species: self.masses(),
            energy_fh: self.energy()?,
            min_concentration: min_concentration(&self.state.c),
            max_gauss_residual: self.gauss_residual().max_abs(),
            max_curl_residual: self.curl_residual().max_abs(),
            max_peclet: peclet_field(&dg).max(),
            dt_star: dt_star(&dg, &self.state.c, &self.eps_edges, &self.params),
            dissipation_i1: 0.0,
            relax_sweeps: self.init_report.sweeps,
        })
    }

    /// Advance one step with the configured integrator (BDF2 starts with an
    /// Euler step).
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        let n = self.state.n + 1;
        self.step_inner().map_err(|e| e.at_step(n))
    }

    fn step_inner(&mut self) -> Result<StepDiagnostics> {
        let bdf2 = self.integrator == Integrator::Bdf2 && self.state.c_prev.is_some();
        let p = &self.params;
        let g = self.grid;
        let dt = self.dt;
        let kind = p.mean_kind;
        let st = &self.state;
        let (t_old, t_new) = (st.t, st.t + dt);

        let (flux_src, current_src) = match &self.forcing {
            Some(f) => (
                Some(f.flux_sources(t_old, t_new, &g)),
                Some(f.current_source(t_old, t_new, &g)),
            ),
            None => (None, None),
        };

        // Nernst-Planck
        let dg_n = compute_dg(&st.d, &self.eps_edges, &st.mu, p);
        let dg: Vec<EdgeField> = match (&st.dg_prev, bdf2) {
            (Some(prev), true) => dg_n
                .iter()
                .zip(prev)
                .map(|(a, b)| a.zip_map(b, |u, v| 2.0 * u - v))
                .collect(),
            _ => dg_n.clone(),
        };
        let mut c_new = Vec::with_capacity(st.c.len());
        let mut fluxes = Vec::with_capacity(st.c.len());
        for l in 0..st.c.len() {
            let lead = if bdf2 { 1.5 } else { 1.0 };
            let mut sys = assemble_np_operator(&dg[l], dt, kind, p.kappa, lead);
            match (&st.c_prev, bdf2) {
                (Some(prev), true) => {
                    for (r, (a, b)) in sys
                        .rhs
                        .iter_mut()
                        .zip(st.c[l].values().iter().zip(prev[l].values()))
                    {
                        *r = 2.0 * a - 0.5 * b;
                    }
                }
                _ => sys.rhs.copy_from_slice(st.c[l].values()),
            }
            let base = sys.rhs.clone();
            let src = flux_src.as_ref().map(|s| &s[l]);
            if let Some(gs) = src {
                let div = node_divergence(gs);
                for (r, v) in sys.rhs.iter_mut().zip(div.values()) {
                    *r += dt * p.kappa * v;
                }
            }
            let solved = solve_np(&sys, p.solver_tol)?;
            let j = compute_fluxes(&solved, &dg[l], kind, p.kappa, src);
            // Conservative form of the same update: the solve residual is
            // moved into the fluxes' divergence, so mass and the discrete
            // Gauss law hold to round-off rather than to the solver tolerance.
            let div = node_divergence(&j);
            let cl = NodeField::from_vec(
                g,
                base.iter()
                    .zip(div.values())
                    .map(|(b, d)| (b - dt * d) / lead)
                    .collect(),
            );
            check_positive(&cl)?;
            fluxes.push(j);
            c_new.push(cl);
        }
        if p.species.iter().any(|s| s.v != 0.0) {
            solvent_concentration(&c_new, p)?;
        }

        // Maxwell-Ampere
        let theta_step = match (&st.theta_prev, bdf2) {
            (Some(prev), true) => st.theta.zip_map(prev, |a, b| 2.0 * a - b),
            _ => st.theta.clone(),
        };
        let theta_field = stream_curl(&theta_step);
        let d_star = match (&st.d_prev, bdf2) {
            (Some(d_prev), true) => ampere_step_bdf2(
                &st.d,
                d_prev,
                &fluxes,
                current_src.as_ref(),
                &theta_field,
                dt,
                p,
            ),
            _ => ampere_step_with_source(&st.d, &fluxes, current_src.as_ref(), &theta_field, dt, p),
        };

        // Local curl-free relaxation
        let clock = Instant::now();
        let (d_new, psi, report) =
            relax_with_stream(&d_star, &self.eps_edges, p.eps_tol, p.max_sweeps);
        self.relax_seconds += clock.elapsed().as_secs_f64();
        report.ensure_converged()?;

        let background = match &current_src {
            Some(s) => {
                let div = node_divergence(s);
                match (&st.background_prev, bdf2) {
                    (Some(prev), true) => NodeField::from_vec(
                        g,
                        st.background
                            .values()
                            .iter()
                            .zip(prev.values())
                            .zip(div.values())
                            .map(|((a, b), s)| (4.0 * a - b + 2.0 * dt * s) / 3.0)
                            .collect(),
                    ),
                    _ => st.background.zip_map(&div, |a, s| a + dt * s),
                }
            }
            None => st.background.clone(),
        };

        let hist = ThetaHistory {
            d_prev: Some(st.d.clone()),
            j_prev: fluxes.clone(),
            s_prev: current_src.clone(),
        };
        // Measured Theta, `(D^{n+1} - D^n)/dt - rate` for Euler and the BDF2
        // analogue. Both equal the extrapolated Theta plus the relaxation's
        // circulation over the step.
        let scale = if st.d_prev.is_some() && bdf2 {
            1.5 / dt
        } else {
            1.0 / dt
        };
        let theta_meas = theta_step.zip_map(&psi, |a, b| a + scale * b);
        let mu_new = mu_cr_all(&c_new, p, &self.eps_nodes)?;
        let i1 = dissipation_from_dg(&fluxes, &c_new, &dg);
        let dts = dt_star(&dg, &c_new, &self.eps_edges, p);
        let pe = peclet_field(&dg).max();

        let st = &mut self.state;
        st.c_prev = Some(std::mem::replace(&mut st.c, c_new));
        st.d_prev = Some(std::mem::replace(&mut st.d, d_new));
        st.dg_prev = Some(dg_n);
        st.background_prev = Some(std::mem::replace(&mut st.background, background));
        st.theta_prev = Some(std::mem::replace(&mut st.theta, theta_meas));
        st.theta_hist = hist;
        st.mu = mu_new;
        st.n += 1;
        st.t = t_new;

        Ok(StepDiagnostics {
            step: self.state.n,
            time: self.state.t,
            mass_per_species: self.masses(),
            energy_fh: self.energy()?,
            min_concentration: min_concentration(&self.state.c),
            max_gauss_residual: self.gauss_residual().max_abs(),
            max_curl_residual: self.curl_residual().max_abs(),
            max_peclet: pe,
            dt_star: dts,
            dissipation_i1: i1,
            relax_sweeps: report.sweeps,
        })
    }
}

/// Dissipation rate written with the edge increments that defined the
/// fluxes: `-dOmega sum J (dlog c + dg) / h`. Each term is non-positive for
/// Scharfetter-Gummel fluxes, so the result is non-negative.
pub fn dissipation_from_dg(j_all: &[EdgeField], c_new: &[NodeField], dg_all: &[EdgeField]) -> f64 {
    let g = *c_new[0].grid();
    let mut s = 0.0;
    for ((j, c), dg) in j_all.iter().zip(c_new).zip(dg_all) {
        for i in 0..g.nx {
            for jj in 0..g.ny {
                let k = g.idx(i, jj);
                let lc = c[(i, jj)].ln();
                s += j.x[k] * ((c[(g.ip(i), jj)].ln() - lc) + dg.x[k]) / g.dx
                    + j.y[k] * ((c[(i, g.jp(jj))].ln() - lc) + dg.y[k]) / g.dy;
            }
        }
    }
    -g.cell_area() * s
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Lower-left corner; defaults to a domain centred at the origin.
    pub x0: Option<f64>,
    pub y0: Option<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::with_origin(
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            self.x0.unwrap_or(-0.5 * self.lx),
            self.y0.unwrap_or(-0.5 * self.ly),
        )
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `uniform`, `janus` or `mms`.
    pub preset: String,
    pub kappa: Option<f64>,
    pub chi: Option<f64>,
    pub v0: Option<f64>,
    pub volumes: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub valences: Option<Vec<i32>>,
    /// Uniform dielectric coefficient.
    pub eps: Option<f64>,
    pub eps_m: Option<f64>,
    pub eps_w: Option<f64>,
    /// `none` or `janus`.
    pub fixed_charge: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Constant value per species.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
}

fn default_integrator() -> String {
    "euler".into()
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mean: Option<String>,
    pub eps_tol: Option<f64>,
    pub solver_tol: Option<f64>,
    pub max_sweeps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: String,
    /// Steps between snapshots; 0 keeps only the initial and final ones.
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_output_dir() -> String {
    "output".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
            snapshot_every: 0,
        }
    }
}

/// Configuration of a single simulation (`run` subcommand).
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub initial: Option<InitialConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn read_config_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_toml(&text)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn is_mms(&self) -> bool {
        self.model.preset == "mms"
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let cfg = |msg: String| Error::Config(msg);
        let mut p = match m.preset.as_str() {
            "uniform" => ModelParams::uniform(m.kappa.unwrap_or(1.0), m.eps.unwrap_or(1.0)),
            "janus" => ModelParams::janus(
                m.kappa.unwrap_or(0.01),
                m.eps_m.unwrap_or(1.0),
                m.eps_w.unwrap_or(78.0),
            ),
            "mms" => MmsCase::default().params(1e-6),
            other => return Err(cfg(format!("unknown model preset {other:?}"))),
        };
        if let Some(k) = m.kappa {
            p.kappa = k;
        }
        if let Some(chi) = m.chi {
            p.chi = chi;
        }
        if let Some(v0) = m.v0 {
            p.v0 = v0;
        }
        if let Some(q) = &m.valences {
            let old = p.species.clone();
            p.species = q
                .iter()
                .enumerate()
                .map(|(l, &q)| SpeciesParams {
                    q,
                    ..old.get(l).copied().unwrap_or(SpeciesParams::point(q))
                })
                .collect();
        }
        let ns = p.species.len();
        if let Some(v) = &m.volumes {
            if v.len() != ns {
                return Err(cfg(format!("{} volumes for {ns} species", v.len())));
            }
            for (s, &v) in p.species.iter_mut().zip(v) {
                s.v = v;
            }
        }
        if let Some(a) = &m.radii {
            if a.len() != ns {
                return Err(cfg(format!("{} radii for {ns} species", a.len())));
            }
            for (s, &a) in p.species.iter_mut().zip(a) {
                s.a = a;
            }
        }
        match (&mut p.dielectric, m.eps, m.eps_m, m.eps_w) {
            (Dielectric::Uniform(e), Some(v), _, _) => *e = v,
            (Dielectric::Janus { eps_m, eps_w }, None, em, ew) => {
                *eps_m = em.unwrap_or(*eps_m);
                *eps_w = ew.unwrap_or(*eps_w);
            }
            (Dielectric::Uniform(_), None, None, None) => {}
            _ => return Err(cfg("dielectric keys do not match the preset (eps for uniform/mms, eps_m/eps_w for janus)".into())),
        }
        if let Some(fc) = &m.fixed_charge {
            p.fixed_charge = match fc.as_str() {
                "none" => FixedCharge::None,
                "janus" => FixedCharge::Janus,
                other => return Err(cfg(format!("unknown fixed charge {other:?}"))),
            };
        }
        let s = &self.solver;
        if let Some(mean) = &s.mean {
            p.mean_kind = mean.parse::<BFunctionKind>()?;
        }
        if let Some(t) = s.eps_tol {
            p.eps_tol = t;
        }
        if let Some(t) = s.solver_tol {
            p.solver_tol = t;
        }
        if let Some(m) = s.max_sweeps {
            p.max_sweeps = m;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(Error::Config(format!(
                "time.dt must be positive, got {}",
                t.dt
            )));
        }
        if !(t.t_final >= 0.0 && t.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "time.t_final must be non-negative, got {}",
                t.t_final
            )));
        }
        t.integrator.parse::<Integrator>()?;
        Ok(())
    }

    pub fn build(&self) -> Result<Simulation> {
        self.validate()?;
        let grid = self.grid.build()?;
        let params = self.model_params()?;
        let integrator = self.time.integrator.parse()?;
        if self.is_mms() {
            if self.initial.is_some() {
                return Err(Error::Config(
                    "the mms preset takes its initial data from the exact solution".into(),
                ));
            }
            return Simulation::mms(MmsCase::default(), params, grid, self.time.dt, integrator);
        }
        let values = match &self.initial {
            Some(i) => i.values.clone(),
            None => vec![0.1; params.num_species()],
        };
        if values.len() != params.num_species() {
            return Err(Error::Config(format!(
                "{} initial values for {} species",
                values.len(),
                params.num_species()
            )));
        }
        let c0 = values
            .iter()
            .map(|&v| NodeField::constant(grid, v))
            .collect();
        Simulation::new(params, c0, self.time.dt, integrator)
    }

    pub fn num_steps(&self) -> usize {
        steps_to(self.time.t_final, self.time.dt)
    }
}

/// Number of steps of size `dt` needed to reach `t_final`.
pub fn steps_to(t_final: f64, dt: f64) -> usize {
    let r = t_final / dt;
    let n = r.round();
    if (r - n).abs() < 1e-9 * r.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

// ---------------------------------------------------------------------------
// Output

fn node_snapshot(field: &NodeField, name: &str, step: usize, time: f64) -> String {
    let g = field.grid();
    let mut s = format!(
        "# field={name} nx={} ny={} step={step} time={time:e}\ni,j,x,y,value\n",
        g.nx, g.ny
    );
    for i in 0..g.nx {
        for j in 0..g.ny {
            let _ = writeln!(s, "{i},{j},{:e},{:e},{:e}", g.x(i), g.y(j), field[(i, j)]);
        }
    }
    s
}

fn edge_snapshot(
    values: &[f64],
    g: &GridSpec,
    name: &str,
    x_half: bool,
    step: usize,
    time: f64,
) -> String {
    let mut s = format!(
        "# field={name} nx={} ny={} step={step} time={time:e}\ni,j,x,y,value\n",
        g.nx, g.ny
    );
    for i in 0..g.nx {
        for j in 0..g.ny {
            let (x, y) = if x_half {
                (g.x_half(i), g.y(j))
            } else {
                (g.x(i), g.y_half(j))
            };
            let _ = writeln!(s, "{i},{j},{x:e},{y:e},{:e}", values[g.idx(i, j)]);
        }
    }
    s
}

/// Write one CSV per field: `c1 .. cM`, `dx`, `dy`.
pub fn write_snapshot(sim: &Simulation, dir: &Path) -> Result<Vec<PathBuf>> {
    let st = &sim.state;
    let snap = dir.join("snapshots");
    fs::create_dir_all(&snap)?;
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = snap.join(format!("{name}_{:06}.csv", st.n));
        fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };
    for (l, c) in st.c.iter().enumerate() {
        let name = format!("c{}", l + 1);
        put(&name, node_snapshot(c, &name, st.n, st.t))?;
    }
    put(
        "dx",
        edge_snapshot(&st.d.x, &sim.grid, "dx", true, st.n, st.t),
    )?;
    put(
        "dy",
        edge_snapshot(&st.d.y, &sim.grid, "dy", false, st.n, st.t),
    )?;
    Ok(files)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub last: StepDiagnostics,
    pub diagnostics_path: PathBuf,
    /// Max-norm concentration errors at the final time (manufactured runs).
    pub mms_errors: Option<Vec<f64>>,
}

/// Run to `t_final`, writing `diagnostics.csv` and snapshots into `out_dir`.
/// Diagnostics rows are flushed as they are produced, so a failed run
/// leaves the history up to the last accepted step.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut sim = config.build()?;
    fs::create_dir_all(out_dir)?;
    let diagnostics_path = out_dir.join("diagnostics.csv");
    let mut diag = fs::File::create(&diagnostics_path)?;
    writeln!(
        diag,
        "{}",
        StepDiagnostics::csv_header(sim.params.num_species())
    )?;
    let mut last = sim.initial_diagnostics()?;
    writeln!(diag, "{}", last.csv_row())?;
    write_snapshot(&sim, out_dir)?;

    let steps = config.num_steps();
    let every = config.output.snapshot_every;
    for _ in 0..steps {
        last = sim.step()?;
        writeln!(diag, "{}", last.csv_row())?;
        if every > 0 && sim.state.n % every == 0 {
            write_snapshot(&sim, out_dir)?;
        }
    }
    if steps > 0 && (every == 0 || sim.state.n % every != 0) {
        write_snapshot(&sim, out_dir)?;
    }
    diag.flush()?;
    let mms_errors = config.is_mms().then(|| {
        let (exact, _) = mms::exact_fields(sim.state.t, &sim.grid);
        sim.state
            .c
            .iter()
            .zip(&exact)
            .map(|(a, b)| mms::linf_error(a, b))
            .collect()
    });
    Ok(RunSummary {
        steps,
        final_time: sim.state.t,
        last,
        diagnostics_path,
        mms_errors,
    })
}

// ---------------------------------------------------------------------------
// Convergence study

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub refinements: Vec<f64>,
    /// `"h/10"` or `"h^2"`.
    pub dt_rule: String,
    #[serde(default = "one")]
    pub t_final: f64,
    #[serde(default = "default_study_tol")]
    pub eps_tol: f64,
    #[serde(default = "default_study_tol_fine")]
    pub eps_tol_fine: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
}

fn one() -> f64 {
    1.0
}
fn default_study_tol() -> f64 {
    1e-6
}
fn default_study_tol_fine() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MmsStudyFile {
    pub study: StudyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl MmsStudyFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn options(&self) -> Result<(DtRule, StudyOptions)> {
        let s = &self.study;
        if s.refinements.is_empty() || s.refinements.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Config(
                "study.refinements must be a non-empty list of positive sizes".into(),
            ));
        }
        if !(s.t_final > 0.0) {
            return Err(Error::Config("study.t_final must be positive".into()));
        }
        let rule = s.dt_rule.parse()?;
        Ok((
            rule,
            StudyOptions {
                t_final: s.t_final,
                eps_tol: s.eps_tol,
                eps_tol_fine: s.eps_tol_fine,
                integrator: s.integrator.parse()?,
                case: MmsCase::default(),
            },
        ))
    }
}

/// Run the study and write `convergence.csv`.
pub fn run_mms_study(file: &MmsStudyFile, out_dir: &Path) -> Result<(Vec<mms::StudyRow>, PathBuf)> {
    let (rule, opts) = file.options()?;
    let rows = mms::convergence_study(&file.study.refinements, rule, &opts)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("convergence.csv");
    fs::write(&path, mms::study_csv(&rows))?;
    Ok((rows, path))
}

// ---------------------------------------------------------------------------
// Relaxation benchmark

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Nodes per direction of each square grid.
    pub sizes: Vec<usize>,
    #[serde(default = "default_bench_steps")]
    pub steps: usize,
    #[serde(default = "default_bench_dt")]
    pub dt: f64,
    #[serde(default = "default_bench_kappa")]
    pub kappa: f64,
    #[serde(default = "default_bench_eps_w")]
    pub eps_w: f64,
    #[serde(default = "default_bench_tol")]
    pub eps_tol: f64,
    #[serde(default = "default_bench_repeats")]
    pub repeats: usize,
}

fn default_bench_steps() -> usize {
    100
}
fn default_bench_dt() -> f64 {
    1e-4
}
fn default_bench_kappa() -> f64 {
    0.01
}
fn default_bench_eps_w() -> f64 {
    78.0
}
fn default_bench_tol() -> f64 {
    1e-5
}
fn default_bench_repeats() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub bench: BenchConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl BenchFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        parse_toml(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub points: usize,
    pub steps: usize,
    pub sweeps: usize,
    /// Best-of-repeats relaxation wall time over all steps.
    pub seconds: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Time the relaxation inside Janus runs on `[-1, 1]^2` of increasing size.
pub fn relax_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.sizes.len() < 2 || cfg.sizes.iter().any(|&n| n < 4) {
        return Err(Error::Config(
            "bench.sizes needs at least two sizes of 4 or more".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let grid = GridSpec::centered_square(2.0, 2.0 / n as f64)?;
        let mut params = ModelParams::janus(cfg.kappa, 1.0, cfg.eps_w);
        params.eps_tol = cfg.eps_tol;
        let mut best = f64::INFINITY;
        let mut sweeps = 0;
        for _ in 0..cfg.repeats.max(1) {
            let c0 = vec![NodeField::constant(grid, 0.1); 2];
            let mut sim = Simulation::new(params.clone(), c0, cfg.dt, Integrator::Euler)?;
            sweeps = 0;
            for _ in 0..cfg.steps {
                sweeps += sim.step()?.relax_sweeps;
            }
            best = best.min(sim.relax_seconds);
        }
        rows.push(BenchRow {
            n,
            points: grid.len(),
            steps: cfg.steps,
            sweeps,
            seconds: best,
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("n,points,steps,sweeps,seconds\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:e}",
            r.n, r.points, r.steps, r.sweeps, r.seconds
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curlfree::circulation_bound;
    use crate::diagnostics::gauss_residual;

    #[test]
    fn constant_poisson_satisfies_gauss_law() {
        let g = GridSpec::new(8, 6, 1.0, 0.75).unwrap();
        let rho = NodeField::from_fn(g, |x, y| {
            (2.0 * std::f64::consts::PI * x).sin() + (y * 8.0).cos() - 0.3
        });
        let mean = rho.sum() / g.len() as f64;
        let rho = rho.map(|v| v - mean);
        let d = constant_coefficient_displacement(&rho, 0.7);
        let div = node_divergence(&d);
        for (a, b) in div.values().iter().zip(rho.values()) {
            assert!((2.0 * 0.49 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_charge_gives_zero_displacement() {
        let g = GridSpec::centered_square(2.0, 0.25).unwrap();
        let p = ModelParams::uniform(0.5, 1.0);
        let c = vec![NodeField::constant(g, 0.3); 2];
        let d = build_initial_displacement(&c, &NodeField::zeros(g), &p).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn non_neutral_charge_is_rejected() {
        let g = GridSpec::centered_square(2.0, 0.25).unwrap();
        let p = ModelParams::uniform(0.5, 1.0);
        let c = vec![NodeField::constant(g, 0.3), NodeField::constant(g, 0.2)];
        assert!(matches!(
            build_initial_displacement(&c, &NodeField::zeros(g), &p),
            Err(Error::NonNeutral { .. })
        ));
    }

    #[test]
    fn janus_initial_displacement_is_consistent() {
        let g = GridSpec::centered_square(2.0, 1.0 / 20.0).unwrap();
        let p = ModelParams::janus(0.02, 1.0, 78.0);
        let c = vec![NodeField::constant(g, 0.1); 2];
        let rho_f = eval_fixed_charge(&p, &g);
        assert!(rho_f.max() == 1.0 && rho_f.min() == -1.0 && rho_f.sum() == 0.0);
        let d = build_initial_displacement(&c, &rho_f, &p).unwrap();
        assert!(gauss_residual(&d, &c, &rho_f, &p).max_abs() <= 1e-10);
        let eps = eval_dielectric_edges(&p, &g).unwrap();
        let circ = curl_residual(&d, &eps).max_abs();
        assert!(circ <= 10.0 * p.eps_tol, "{circ}");
        assert!(circ <= circulation_bound(&g, &eps, p.eps_tol));
    }

    #[test]
    fn dielectric_potential_solves_its_equation() {
        let g = GridSpec::new(10, 10, 1.0, 1.0).unwrap();
        let eps = EdgeField::from_fns(g, |x, y| 1.0 + 5.0 * x * y, |x, _| 2.0 + x);
        let rho = NodeField::from_fn(g, |x, y| (6.0 * x).sin() * (6.0 * y).cos());
        let mean = rho.sum() / g.len() as f64;
        let rho = rho.map(|v| v - mean);
        let phi = solve_dielectric_potential(&rho, &eps, 0.3, 1e-13).unwrap();
        let back = dielectric_operator(&phi, &eps, 0.3);
        for (a, b) in back.values().iter().zip(rho.values()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn uniform_equilibrium_is_a_fixed_point() {
        let g = GridSpec::centered_square(2.0, 0.25).unwrap();
        for integrator in [Integrator::Euler, Integrator::Bdf2] {
            let p = ModelParams::uniform(0.5, 1.0);
            let c0 = vec![NodeField::constant(g, 0.4); 2];
            let mut sim = Simulation::new(p, c0.clone(), 0.01, integrator).unwrap();
            for _ in 0..5 {
                sim.step().unwrap();
            }
            for (a, b) in sim.state.c.iter().zip(&c0) {
                assert!(mms::linf_error(a, b) < 1e-12);
            }
            assert!(sim.state.d.max_abs() < 1e-12);
        }
    }

    #[test]
    fn steps_preserve_structure() {
        let g = GridSpec::centered_square(2.0, 0.1).unwrap();
        let c0 = vec![NodeField::constant(g, 0.1); 2];
        // BDF2 has no positivity guarantee, so it gets the case without a
        // solvation barrier.
        for (integrator, eps_w) in [(Integrator::Euler, 10.0), (Integrator::Bdf2, 1.0)] {
            let mut p = ModelParams::janus(0.05, 1.0, eps_w);
            p.eps_tol = 1e-6;
            p.solver_tol = 1e-13;
            let mut sim = Simulation::new(p.clone(), c0.clone(), 1e-3, integrator).unwrap();
            let m0 = sim.masses();
            for _ in 0..5 {
                let d = sim.step().unwrap();
                assert!(d.all_finite());
                assert!(d.min_concentration > 0.0);
                assert!(d.max_gauss_residual <= 1e-9, "{}", d.max_gauss_residual);
                assert!(d.max_curl_residual <= 10.0 * p.eps_tol);
                assert!(d.dissipation_i1 >= -1e-12);
                for (a, b) in d.mass_per_species.iter().zip(&m0) {
                    assert!(((a - b) / b).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn mms_single_step_error_is_small() {
        let case = MmsCase::default();
        let g = case.grid(0.1).unwrap();
        let mut sim = Simulation::mms(case, case.params(1e-6), g, 0.01, Integrator::Euler).unwrap();
        assert!(sim.gauss_residual().max_abs() < 1e-10);
        sim.step().unwrap();
        let (exact, _) = mms::exact_fields(0.01, &g);
        for (a, b) in sim.state.c.iter().zip(&exact) {
            assert!(mms::linf_error(a, b) < 1e-2, "{}", mms::linf_error(a, b));
        }
        assert!(sim.gauss_residual().max_abs() < 1e-9);
    }

    #[test]
    fn config_parsing() {
        let text = r#"
            [grid]
            nx = 20
            ny = 20
            lx = 2.0
            ly = 2.0

            [model]
            preset = "janus"
            kappa = 0.02
            eps_m = 1.0
            eps_w = 1.0

            [time]
            dt = 1e-3
            t_final = 0.002

            [solver]
            mean = "entropic"
            eps_tol = 1e-5
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p.kappa, 0.02);
        assert_eq!(
            p.dielectric,
            Dielectric::Janus {
                eps_m: 1.0,
                eps_w: 1.0
            }
        );
        assert_eq!(cfg.num_steps(), 2);
        assert_eq!(cfg.grid.build().unwrap().x0, -1.0);

        let bad = text.replace("kappa = 0.02", "kappa = 0.02\nkapa = 1.0");
        assert!(matches!(RunConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad_preset = text.replace("\"janus\"", "\"sphere\"");
        let err = RunConfig::from_toml(&bad_preset)
            .unwrap()
            .model_params()
            .unwrap_err();
        assert!(err.is_config());
        let bad_mean = text.replace("\"entropic\"", "\"median\"");
        assert!(RunConfig::from_toml(&bad_mean)
            .unwrap()
            .model_params()
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn step_counts() {
        assert_eq!(steps_to(1.0, 0.01), 100);
        assert_eq!(steps_to(0.0, 0.01), 0);
        assert_eq!(steps_to(0.105, 0.01), 11);
        assert_eq!(steps_to(1.0, 0.0025), 400);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.5).abs() < 1e-12);
    }
}
