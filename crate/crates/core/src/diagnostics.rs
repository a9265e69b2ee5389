//! Conserved quantities, residuals and energy bookkeeping.

use crate::error::{Error, Result};
use crate::grid::{cell_circulation, node_divergence, EdgeField, GridSpec, NodeField};
use crate::model::{charge_density, ModelParams};

/// `dOmega * sum c`.
pub fn total_mass(c: &NodeField) -> f64 {
    c.grid().cell_area() * c.sum()
}

fn check_positive_species(c_all: &[NodeField]) -> Result<()> {
    for (species, c) in c_all.iter().enumerate() {
        let g = c.grid();
        for i in 0..g.nx {
            for j in 0..g.ny {
                let value = c[(i, j)];
                if !(value > 0.0) {
                    return Err(Error::NonPositiveConcentration {
                        species,
                        i,
                        j,
                        value,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Entropy part `dOmega * sum_l sum c (log c + mu_cr)`.
pub fn entropy_energy(c_all: &[NodeField], mu_cr_all: &[NodeField]) -> Result<f64> {
    check_positive_species(c_all)?;
    let area = c_all[0].grid().cell_area();
    let mut s = 0.0;
    for (c, mu) in c_all.iter().zip(mu_cr_all) {
        s += c
            .values()
            .iter()
            .zip(mu.values())
            .map(|(&c, &m)| c * (c.ln() + m))
            .sum::<f64>();
    }
    Ok(area * s)
}

/// Discrete free energy: field energy plus entropy part.
pub fn discrete_energy(
    c_all: &[NodeField],
    d: &EdgeField,
    eps_edges: &EdgeField,
    mu_cr_all: &[NodeField],
    params: &ModelParams,
) -> Result<f64> {
    let field = crate::curlfree::potential_energy(d, eps_edges, params.kappa);
    Ok(field + entropy_energy(c_all, mu_cr_all)?)
}

pub fn min_concentration(c_all: &[NodeField]) -> f64 {
    c_all
        .iter()
        .map(NodeField::min)
        .fold(f64::INFINITY, f64::min)
}

/// `2 kappa^2 div D - (sum_l q^l c^l + rho_f)` at every node.
pub fn gauss_residual(
    d: &EdgeField,
    c_all: &[NodeField],
    rho_f: &NodeField,
    params: &ModelParams,
) -> NodeField {
    let k2 = 2.0 * params.kappa * params.kappa;
    let div = node_divergence(d);
    let rho = charge_density(c_all, params, rho_f);
    div.zip_map(&rho, |a, b| k2 * a - b)
}

/// Cell circulation of `D / eps`.
pub fn curl_residual(d: &EdgeField, eps_edges: &EdgeField) -> NodeField {
    cell_circulation(&d.div_by(eps_edges))
}

/// Cell Peclet number: at node `(i, j)`, the largest `|dg|` on its right and
/// upper edges over all species.
pub fn peclet_field(dg_all: &[EdgeField]) -> NodeField {
    let g = *dg_all[0].grid();
    let mut pe = NodeField::zeros(g);
    for dg in dg_all {
        for (k, p) in pe.values_mut().iter_mut().enumerate() {
            *p = p.max(dg.x[k].abs()).max(dg.y[k].abs());
        }
    }
    pe
}

/// Step size below which the discrete energy is guaranteed to decay:
/// `2 kappa eps_min^3 / (eps_max^2 c_max sum q^2) * exp(-max |dg|)`.
pub fn dt_star(
    dg_all: &[EdgeField],
    c_new: &[NodeField],
    eps_edges: &EdgeField,
    params: &ModelParams,
) -> f64 {
    let (e_min, e_max) = (eps_edges.min(), eps_edges.max());
    let c_max = c_new
        .iter()
        .map(NodeField::max)
        .fold(f64::NEG_INFINITY, f64::max);
    let q2: f64 = params.species.iter().map(|s| f64::from(s.q * s.q)).sum();
    let dg_max = dg_all.iter().map(EdgeField::max_abs).fold(0.0, f64::max);
    2.0 * params.kappa * e_min.powi(3) / (e_max * e_max * c_max * q2) * (-dg_max).exp()
}

/// Dissipation rate
/// `I1 = -dOmega sum_l sum J^l . (grad_h (log c^l + mu^l) - q^l D / eps)`.
pub fn dissipation_rate_i1(
    j_all: &[EdgeField],
    c_new: &[NodeField],
    mu_cr_all: &[NodeField],
    d: &EdgeField,
    eps_edges: &EdgeField,
    params: &ModelParams,
) -> Result<f64> {
    check_positive_species(c_new)?;
    let g: GridSpec = *d.grid();
    let mut s = 0.0;
    for (((j, c), mu), sp) in j_all.iter().zip(c_new).zip(mu_cr_all).zip(&params.species) {
        let q = f64::from(sp.q);
        let w = c.zip_map(mu, |c, m| c.ln() + m);
        for i in 0..g.nx {
            for jj in 0..g.ny {
                let k = g.idx(i, jj);
                let here = w[(i, jj)];
                let fx = (w[(g.ip(i), jj)] - here) / g.dx - q * d.x[k] / eps_edges.x[k];
                let fy = (w[(i, g.jp(jj))] - here) / g.dy - q * d.y[k] / eps_edges.y[k];
                s += j.x[k] * fx + j.y[k] * fy;
            }
        }
    }
    Ok(-g.cell_area() * s)
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub mass_per_species: Vec<f64>,
    pub energy_fh: f64,
    pub min_concentration: f64,
    pub max_gauss_residual: f64,
    pub max_curl_residual: f64,
    pub max_peclet: f64,
    pub dt_star: f64,
    pub dissipation_i1: f64,
    pub relax_sweeps: usize,
}

impl StepDiagnostics {
    pub fn csv_header(num_species: usize) -> String {
        let mut cols = vec!["step".to_string(), "time".to_string()];
        cols.extend((1..=num_species).map(|l| format!("mass_{l}")));
        cols.extend(
            [
                "energy_fh",
                "min_concentration",
                "max_gauss_residual",
                "max_curl_residual",
                "max_peclet",
                "dt_star",
                "dissipation_i1",
                "relax_sweeps",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.step.to_string(), format!("{:e}", self.time)];
        cols.extend(self.mass_per_species.iter().map(|m| format!("{m:e}")));
        for v in [
            self.energy_fh,
            self.min_concentration,
            self.max_gauss_residual,
            self.max_curl_residual,
            self.max_peclet,
            self.dt_star,
            self.dissipation_i1,
        ] {
            cols.push(format!("{v:e}"));
        }
        cols.push(self.relax_sweeps.to_string());
        cols.join(",")
    }

    pub fn all_finite(&self) -> bool {
        self.mass_per_species.iter().all(|m| m.is_finite())
            && [
                self.time,
                self.energy_fh,
                self.min_concentration,
                self.max_gauss_residual,
                self.max_curl_residual,
                self.max_peclet,
                self.dt_star,
                self.dissipation_i1,
            ]
            .iter()
            .all(|v| v.is_finite())
    }
}
