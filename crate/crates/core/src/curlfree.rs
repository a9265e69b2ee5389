//! Local curl-free relaxation of the displacement field.
//!
//! Each cell update moves a circulating flux `eta` around the four edges of
//! the cell. The node divergences are untouched, so the discrete Gauss law
//! survives every update, while `eta` is chosen to minimise the discrete
//! field energy `kappa^2 sum D^2 / eps`. Sweeping the cells until `eta`
//! vanishes drives `D / eps` to a discrete gradient.

use crate::error::{Error, Result};
use crate::grid::{EdgeField, GridSpec, NodeField};

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxReport {
    pub sweeps: usize,
    /// Largest `|eta|` of the last sweep.
    pub final_metric: f64,
    /// Field energy after each sweep.
    pub energy_trace: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
}

impl RelaxReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                sweeps: self.sweeps,
                metric: self.final_metric,
                tol: self.tol,
            })
        }
    }
}

/// Energy-minimising circulation for the cell with lower-left node `(i, j)`.
pub fn optimal_eta(i: usize, j: usize, d: &EdgeField, eps: &EdgeField) -> f64 {
    let g = d.grid();
    let (ip, jp) = (g.ip(i), g.jp(j));
    let (k, k_top, k_right) = (g.idx(i, j), g.idx(i, jp), g.idx(ip, j));
    let (dx, dy) = (g.dx, g.dy);
    let num = dy * dx * dx * (d.x[k] / eps.x[k] - d.x[k_top] / eps.x[k_top])
        + dx * dy * dy * (d.y[k_right] / eps.y[k_right] - d.y[k] / eps.y[k]);
    let den = dx * dx * (1.0 / eps.x[k] + 1.0 / eps.x[k_top])
        + dy * dy * (1.0 / eps.y[k] + 1.0 / eps.y[k_right]);
    -num / den
}

/// Circulate `eta` around the cell with lower-left node `(i, j)`.
pub fn apply_cell_update(i: usize, j: usize, eta: f64, d: &mut EdgeField) {
    let g = *d.grid();
    let (ip, jp) = (g.ip(i), g.jp(j));
    d.x[g.idx(i, j)] += eta / g.dy;
    d.y[g.idx(ip, j)] += eta / g.dx;
    d.x[g.idx(i, jp)] -= eta / g.dy;
    d.y[g.idx(i, j)] -= eta / g.dx;
}

/// `dOmega kappa^2 sum (D_x^2 / eps_x + D_y^2 / eps_y)`.
pub fn potential_energy(d: &EdgeField, eps: &EdgeField, kappa: f64) -> f64 {
    let s: f64 =
        d.x.iter()
            .zip(&eps.x)
            .chain(d.y.iter().zip(&eps.y))
            .map(|(v, e)| v * v / e)
            .sum();
    d.grid().cell_area() * kappa * kappa * s
}

/// Upper bound on the residual cell circulation of `D / eps` after a sweep
/// whose largest update was `metric`: each cell can be disturbed by the later
/// updates of the (at most four) neighbours sharing an edge with it.
pub fn circulation_bound(grid: &GridSpec, eps: &EdgeField, metric: f64) -> f64 {
    let ratio = (grid.dx / grid.dy).max(grid.dy / grid.dx);
    4.0 * ratio * metric / eps.min()
}

/// Sweep the cells in flat index order, updating in place, until the
/// largest `|eta|` of a sweep is at most `eps_tol` or `max_sweeps` is hit.
pub fn relax_in_place(
    d: &mut EdgeField,
    eps: &EdgeField,
    eps_tol: f64,
    max_sweeps: usize,
) -> RelaxReport {
    sweep_until(d, eps, eps_tol, max_sweeps, None)
}

fn sweep_until(
    d: &mut EdgeField,
    eps: &EdgeField,
    eps_tol: f64,
    max_sweeps: usize,
    mut stream: Option<&mut [f64]>,
) -> RelaxReport {
    let g = *d.grid();
    let inv_x: Vec<f64> = eps.x.iter().map(|e| 1.0 / e).collect();
    let inv_y: Vec<f64> = eps.y.iter().map(|e| 1.0 / e).collect();
    let (dx, dy) = (g.dx, g.dy);
    let (cx, cy) = (dy * dx * dx, dx * dy * dy);
    let (dx2, dy2) = (dx * dx, dy * dy);
    let (inv_dx, inv_dy) = (1.0 / dx, 1.0 / dy);

    let mut report = RelaxReport {
        sweeps: 0,
        final_metric: f64::INFINITY,
        energy_trace: Vec::new(),
        converged: false,
        tol: eps_tol,
    };
    while report.sweeps < max_sweeps {
        let mut metric: f64 = 0.0;
        for i in 0..g.nx {
            let ip = g.ip(i);
            for j in 0..g.ny {
                let jp = g.jp(j);
                let k = g.idx(i, j);
                let kt = g.idx(i, jp);
                let kr = g.idx(ip, j);
                let num = cx * (d.x[k] * inv_x[k] - d.x[kt] * inv_x[kt])
                    + cy * (d.y[kr] * inv_y[kr] - d.y[k] * inv_y[k]);
                let den = dx2 * (inv_x[k] + inv_x[kt]) + dy2 * (inv_y[k] + inv_y[kr]);
                let eta = -num / den;
                d.x[k] += eta * inv_dy;
                d.y[kr] += eta * inv_dx;
                d.x[kt] -= eta * inv_dy;
                d.y[k] -= eta * inv_dx;
                if let Some(psi) = stream.as_deref_mut() {
                    psi[k] += eta;
                }
                metric = metric.max(eta.abs());
            }
        }
        report.sweeps += 1;
        report.final_metric = metric;
        report.energy_trace.push(potential_energy(d, eps, 1.0));
        if metric <= eps_tol {
            report.converged = true;
            break;
        }
    }
    report
}

/// Relax a copy of `d_star`. The field is returned even when the sweep cap
/// is reached; check [`RelaxReport::converged`].
pub fn relax(
    d_star: &EdgeField,
    eps: &EdgeField,
    eps_tol: f64,
    max_sweeps: usize,
) -> (EdgeField, RelaxReport) {
    let mut d = d_star.clone();
    let report = relax_in_place(&mut d, eps, eps_tol, max_sweeps);
    (d, report)
}

/// Like [`relax`], and also returns the total circulation moved around each
/// cell, so that the output equals `d_star + stream_curl(psi)`.
pub fn relax_with_stream(
    d_star: &EdgeField,
    eps: &EdgeField,
    eps_tol: f64,
    max_sweeps: usize,
) -> (EdgeField, NodeField, RelaxReport) {
    let mut d = d_star.clone();
    let mut psi = vec![0.0; d.grid().len()];
    let report = sweep_until(&mut d, eps, eps_tol, max_sweeps, Some(&mut psi));
    let psi = NodeField::from_vec(*d.grid(), psi);
    (d, psi, report)
}
