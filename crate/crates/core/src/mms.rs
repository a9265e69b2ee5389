//! Manufactured periodic solution on `[-1, 1]^2` and convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::app::{Forcing, Integrator, Simulation};
use crate::error::{Error, Result};
use crate::grid::{EdgeField, GridSpec, NodeField};
use crate::model::ModelParams;

/// Time level at which a source term is sampled within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceLevel {
    #[default]
    Old,
    New,
}

impl SourceLevel {
    fn pick(self, t_old: f64, t_new: f64) -> f64 {
        match self {
            SourceLevel::Old => t_old,
            SourceLevel::New => t_new,
        }
    }
}

/// Binary monovalent electrolyte, `eps = 1/2`, `kappa = 1`, with exact
/// concentrations `pi^2 e^{-t} cos(pi x) cos(pi y) / 5 + 2` and displacement
/// `pi e^{-t} / 2 (sin(pi x) cos(pi y), cos(pi x) sin(pi y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsCase {
    pub flux_level: SourceLevel,
    pub current_level: SourceLevel,
}

impl Default for MmsCase {
    fn default() -> Self {
        Self {
            flux_level: SourceLevel::Old,
            current_level: SourceLevel::Old,
        }
    }
}

pub const MMS_EPS: f64 = 0.5;
pub const MMS_KAPPA: f64 = 1.0;
pub const MMS_LENGTH: f64 = 2.0;

pub fn exact_concentration(x: f64, y: f64, t: f64) -> f64 {
    PI * PI * (-t).exp() * (PI * x).cos() * (PI * y).cos() / 5.0 + 2.0
}

pub fn exact_displacement(x: f64, y: f64, t: f64) -> (f64, f64) {
    let a = 0.5 * PI * (-t).exp();
    (
        a * (PI * x).sin() * (PI * y).cos(),
        a * (PI * x).cos() * (PI * y).sin(),
    )
}

/// Flux source of species `l` (0 for the cation, 1 for the anion).
pub fn flux_source(l: usize, x: f64, y: f64, t: f64) -> (f64, f64) {
    let sign = if l == 0 { 1.0 } else { -1.0 };
    let p3 = PI.powi(3);
    let (e1, e2) = ((-t).exp(), (-2.0 * t).exp());
    let (sx, cx) = (PI * x).sin_cos();
    let cy = (PI * y).cos();
    let gx = (2.0 * p3 / 5.0 + sign * 4.0 * PI - PI / 5.0) * e1 * sx * cy
        + sign * p3 / 10.0 * e2 * (2.0 * PI * x).sin() * cy * cy;
    let gy = sign * p3 / 10.0 * e2 * cx * cx * (2.0 * PI * y).sin();
    (gx, gy)
}

pub fn current_source(x: f64, y: f64, t: f64) -> (f64, f64) {
    (
        -2.0 * PI * (-t).exp() * (PI * x).sin() * (PI * y).cos(),
        0.0,
    )
}

impl MmsCase {
    pub fn params(&self, eps_tol: f64) -> ModelParams {
        let mut p = ModelParams::uniform(MMS_KAPPA, MMS_EPS);
        p.eps_tol = eps_tol;
        p.solver_tol = 1e-12;
        p
    }

    pub fn grid(&self, h: f64) -> Result<GridSpec> {
        GridSpec::centered_square(MMS_LENGTH, h)
    }
}

/// Exact concentrations at the nodes and displacement at the half points.
pub fn exact_fields(t: f64, grid: &GridSpec) -> (Vec<NodeField>, EdgeField) {
    let c = NodeField::from_fn(*grid, |x, y| exact_concentration(x, y, t));
    let d = EdgeField::from_fns(
        *grid,
        |x, y| exact_displacement(x, y, t).0,
        |x, y| exact_displacement(x, y, t).1,
    );
    (vec![c.clone(), c], d)
}

/// Flux sources `g^1, g^2` and current source `S` sampled at the half points.
pub fn mms_sources(t: f64, grid: &GridSpec) -> (EdgeField, EdgeField, EdgeField) {
    let g = |l: usize| {
        EdgeField::from_fns(
            *grid,
            move |x, y| flux_source(l, x, y, t).0,
            move |x, y| flux_source(l, x, y, t).1,
        )
    };
    let s = EdgeField::from_fns(
        *grid,
        |x, y| current_source(x, y, t).0,
        |x, y| current_source(x, y, t).1,
    );
    (g(0), g(1), s)
}

impl Forcing for MmsCase {
    fn flux_sources(&self, t_old: f64, t_new: f64, grid: &GridSpec) -> Vec<EdgeField> {
        let (g1, g2, _) = mms_sources(self.flux_level.pick(t_old, t_new), grid);
        vec![g1, g2]
    }

    fn current_source(&self, t_old: f64, t_new: f64, grid: &GridSpec) -> EdgeField {
        mms_sources(self.current_level.pick(t_old, t_new), grid).2
    }
}

pub fn linf_error(numeric: &NodeField, exact: &NodeField) -> f64 {
    numeric
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtRule {
    /// `dt = h / 10`
    Linear,
    /// `dt = h^2`
    Quadratic,
}

impl DtRule {
    pub fn dt(self, h: f64) -> f64 {
        match self {
            DtRule::Linear => h / 10.0,
            DtRule::Quadratic => h * h,
        }
    }
}

impl std::str::FromStr for DtRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "h/10" | "linear" => Ok(DtRule::Linear),
            "h^2" | "h2" | "quadratic" => Ok(DtRule::Quadratic),
            other => Err(Error::Config(format!(
                "unknown dt rule {other:?} (expected \"h/10\" or \"h^2\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub t_final: f64,
    pub eps_tol: f64,
    /// Tolerance used on the finest mesh when it is `h <= 0.0125`.
    pub eps_tol_fine: f64,
    pub integrator: Integrator,
    pub case: MmsCase,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            eps_tol: 1e-6,
            eps_tol_fine: 1e-7,
            integrator: Integrator::Euler,
            case: MmsCase::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub error: [f64; 2],
    /// `log2(e_{2h} / e_h)`; `None` on the coarsest mesh.
    pub order: [Option<f64>; 2],
    /// Worst Gauss and curl residuals seen over all steps of the run.
    pub max_gauss_residual: f64,
    pub max_curl_residual: f64,
}

/// Outcome of one manufactured-solution run.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsRun {
    pub steps: usize,
    pub error: [f64; 2],
    pub max_gauss_residual: f64,
    pub max_curl_residual: f64,
}

/// Run the full scheme from exact initial data to `t_final` and return the
/// max-norm concentration errors.
pub fn mms_run(h: f64, dt: f64, eps_tol: f64, opts: &StudyOptions) -> Result<MmsRun> {
    let case = opts.case;
    let grid = case.grid(h)?;
    let params = case.params(eps_tol);
    let mut sim = Simulation::mms(case, params, grid, dt, opts.integrator)?;
    let steps = (opts.t_final / dt).round() as usize;
    let (mut gauss, mut curl) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        let d = sim.step()?;
        gauss = gauss.max(d.max_gauss_residual);
        curl = curl.max(d.max_curl_residual);
    }
    let (exact, _) = exact_fields(sim.state.t, &grid);
    let error = [
        linf_error(&sim.state.c[0], &exact[0]),
        linf_error(&sim.state.c[1], &exact[1]),
    ];
    Ok(MmsRun {
        steps,
        error,
        max_gauss_residual: gauss,
        max_curl_residual: curl,
    })
}

pub fn convergence_study(
    refinements: &[f64],
    rule: DtRule,
    opts: &StudyOptions,
) -> Result<Vec<StudyRow>> {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(refinements.len());
    for &h in refinements {
        let dt = rule.dt(h);
        let tol = if h <= 0.0125 + 1e-12 {
            opts.eps_tol_fine
        } else {
            opts.eps_tol
        };
        let run = mms_run(h, dt, tol, opts)?;
        let error = run.error;
        let order = match rows.last() {
            Some(prev) => {
                let r = prev.h / h;
                [
                    Some((prev.error[0] / error[0]).ln() / r.ln()),
                    Some((prev.error[1] / error[1]).ln() / r.ln()),
                ]
            }
            None => [None, None],
        };
        rows.push(StudyRow {
            h,
            dt,
            steps: run.steps,
            error,
            order,
            max_gauss_residual: run.max_gauss_residual,
            max_curl_residual: run.max_curl_residual,
        });
    }
    Ok(rows)
}

/// Table with columns `h,error_c1,order_c1,error_c2,order_c2`.
pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("h,error_c1,order_c1,error_c2,order_c2\n");
    let fmt = |o: Option<f64>| o.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4e},{},{:.4e},{}",
            r.h,
            r.error[0],
            fmt(r.order[0]),
            r.error[1],
            fmt(r.order[1])
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::gauss_residual;

    #[test]
    fn exact_values() {
        let c = exact_concentration(0.0, 0.0, 0.0);
        assert!((c - 3.973920880217872).abs() < 1e-14);
        for &(x, y) in &[(0.3, -0.7), (1.0, 0.5)] {
            assert!((exact_concentration(x, y, 60.0) - 2.0).abs() < 1e-20 + 1e-24);
            let (dx, dy) = exact_displacement(x, y, 60.0);
            assert!(dx.abs() < 1e-25 && dy.abs() < 1e-25);
        }
    }

    #[test]
    fn source_values() {
        let (sx, sy) = current_source(0.0, 0.3, 0.4);
        assert_eq!((sx.abs(), sy), (0.0, 0.0));
        assert!(flux_source(0, 0.37, 0.0, 0.2).1.abs() < 1e-15);
        let gx = flux_source(0, 0.5, 0.0, 0.0).0;
        assert!((gx - 24.34056275576114).abs() < 1e-12);
        let gx2 = flux_source(1, 0.5, 0.0, 0.0).0;
        assert!((gx2 - (2.0 * PI.powi(3) / 5.0 - 4.0 * PI - PI / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn sampled_fields_on_grid() {
        let g = GridSpec::centered_square(2.0, 0.1).unwrap();
        let (c, d) = exact_fields(0.0, &g);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], c[1]);
        assert!(c[0].min() >= 2.0 - PI * PI / 5.0 - 1e-12);
        assert!(d.all_finite());
        let (g1, g2, s) = mms_sources(0.5, &g);
        assert!(g1.all_finite() && g2.all_finite() && s.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linf_examples() {
        let g = GridSpec::new(4, 4, 1.0, 1.0).unwrap();
        let a = NodeField::from_fn(g, |x, y| x - y);
        assert_eq!(linf_error(&a, &a), 0.0);
        let b = a.map(|v| v + 0.25);
        assert!((linf_error(&a, &b) - 0.25).abs() < 1e-15);
    }

    // The manufactured displacement carries a divergence that no ion charge
    // balances; its discrete divergence matches the continuous one to O(h^2).
    #[test]
    fn manufactured_divergence_is_second_order() {
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let g = GridSpec::centered_square(2.0, h).unwrap();
            let (c, d) = exact_fields(0.0, &g);
            let p = MmsCase::default().params(1e-6);
            let res = gauss_residual(&d, &c, &NodeField::zeros(g), &p);
            let cont =
                NodeField::from_fn(g, |x, y| 2.0 * PI * PI * (PI * x).cos() * (PI * y).cos());
            errs.push(linf_error(&res, &cont));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "{order}");
    }

    #[test]
    fn dt_rules() {
        assert!((DtRule::Linear.dt(0.1) - 0.01).abs() < 1e-16);
        assert!((DtRule::Quadratic.dt(0.05) - 0.0025).abs() < 1e-16);
        assert_eq!("h^2".parse::<DtRule>().unwrap(), DtRule::Quadratic);
        assert!("h^3".parse::<DtRule>().is_err());
    }

    #[test]
    fn csv_table() {
        let rows = vec![
            StudyRow {
                h: 0.1,
                dt: 0.01,
                steps: 100,
                error: [1.6e-2, 7.4e-3],
                order: [None, None],
                max_gauss_residual: 0.0,
                max_curl_residual: 0.0,
            },
            StudyRow {
                h: 0.05,
                dt: 0.0025,
                steps: 400,
                error: [4.0e-3, 1.85e-3],
                order: [Some(2.0), Some(2.0)],
                max_gauss_residual: 0.0,
                max_curl_residual: 0.0,
            },
        ];
        let csv = study_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "h,error_c1,order_c1,error_c2,order_c2");
        assert_eq!(lines[1], "0.1,1.6000e-2,-,7.4000e-3,-");
        assert_eq!(lines[2], "0.05,4.0000e-3,2.0000,1.8500e-3,2.0000");
    }
}
