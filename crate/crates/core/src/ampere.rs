//! Explicit Maxwell-Ampere update of the displacement field.

use crate::grid::EdgeField;
use crate::model::ModelParams;

/// Previous-step data needed to extrapolate the divergence-free part of
/// the displacement update.
#[derive(Debug, Clone, Default)]
pub struct ThetaHistory {
    pub d_prev: Option<EdgeField>,
    /// Fluxes of the previous step, one per species.
    pub j_prev: Vec<EdgeField>,
    /// Extra source current of the previous step (manufactured solutions).
    pub s_prev: Option<EdgeField>,
}

impl ThetaHistory {
    pub fn is_valid(&self) -> bool {
        self.d_prev.is_some() && !self.j_prev.is_empty()
    }
}

/// `-sum_l q^l J^l / (2 kappa^2) + S / (2 kappa^2)`, the rate of change of
/// `D` driven by the currents.
pub fn current_rate(
    j_all: &[EdgeField],
    source: Option<&EdgeField>,
    params: &ModelParams,
) -> EdgeField {
    let g = *j_all[0].grid();
    let scale = 1.0 / (2.0 * params.kappa * params.kappa);
    let mut rate = EdgeField::zeros(g);
    for (j, s) in j_all.iter().zip(&params.species) {
        rate.axpy(-f64::from(s.q) * scale, j);
    }
    if let Some(src) = source {
        rate.axpy(scale, src);
    }
    rate
}

/// `Theta^n = (D^n - D^{n-1})/dt + sum_l q^l J^{l,n-1}/(2 kappa^2)`, or zero
/// without history.
pub fn theta_extrapolate(
    d_n: &EdgeField,
    hist: &ThetaHistory,
    dt: f64,
    params: &ModelParams,
) -> EdgeField {
    match &hist.d_prev {
        Some(d_prev) if hist.is_valid() => {
            let mut theta = d_n.zip_map(d_prev, |a, b| (a - b) / dt);
            theta.axpy(
                -1.0,
                &current_rate(&hist.j_prev, hist.s_prev.as_ref(), params),
            );
            theta
        }
        _ => EdgeField::zeros(*d_n.grid()),
    }
}

/// `D* = D^n + dt (-sum_l q^l J^l / (2 kappa^2) + Theta)`.
pub fn ampere_step(
    d_n: &EdgeField,
    j_all: &[EdgeField],
    theta: &EdgeField,
    dt: f64,
    params: &ModelParams,
) -> EdgeField {
    ampere_step_with_source(d_n, j_all, None, theta, dt, params)
}

pub fn ampere_step_with_source(
    d_n: &EdgeField,
    j_all: &[EdgeField],
    source: Option<&EdgeField>,
    theta: &EdgeField,
    dt: f64,
    params: &ModelParams,
) -> EdgeField {
    let mut d = d_n.clone();
    let mut rate = current_rate(j_all, source, params);
    rate.axpy(1.0, theta);
    d.axpy(dt, &rate);
    d
}

/// Second-order backward difference:
/// `(3 D* - 4 D^n + D^{n-1}) / (2 dt) = rate + Theta`.
pub fn ampere_step_bdf2(
    d_n: &EdgeField,
    d_prev: &EdgeField,
    j_all: &[EdgeField],
    source: Option<&EdgeField>,
    theta: &EdgeField,
    dt: f64,
    params: &ModelParams,
) -> EdgeField {
    let mut rate = current_rate(j_all, source, params);
    rate.axpy(1.0, theta);
    let mut d = d_n.zip_map(d_prev, |a, b| (4.0 * a - b) / 3.0);
    d.axpy(2.0 * dt / 3.0, &rate);
    d
}
