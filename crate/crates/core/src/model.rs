//! Physical parameters: ion species, dielectric profile, fixed charges and
//! the correlation part of the chemical potential (steric + Born solvation).

use crate::error::{Error, Result};
use crate::grid::{EdgeField, GridSpec, NodeField};
use crate::np_scheme::BFunctionKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesParams {
    /// Valence.
    pub q: i32,
    /// Ionic volume, may be zero.
    pub v: f64,
    /// Born radius; only used when the Born coupling is on.
    pub a: f64,
}

impl SpeciesParams {
    pub fn point(q: i32) -> Self {
        Self { q, v: 0.0, a: 1.0 }
    }
}

/// Relative dielectric coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Dielectric {
    Uniform(f64),
    /// Smoothed sphere of radius 1/2 at the origin:
    /// `(eps_w - eps_m)/2 * (tanh(50 r - 25) + 1) + eps_m`.
    Janus {
        eps_m: f64,
        eps_w: f64,
    },
    /// Node samples; half-point values are arithmetic averages.
    Tabulated(NodeField),
}

impl Dielectric {
    /// Closed-form value, `None` for tabulated profiles.
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        match self {
            Dielectric::Uniform(e) => Some(*e),
            Dielectric::Janus { eps_m, eps_w } => {
                let r = x.hypot(y);
                Some(0.5 * (eps_w - eps_m) * ((50.0 * r - 25.0).tanh() + 1.0) + eps_m)
            }
            Dielectric::Tabulated(_) => None,
        }
    }
}

/// Fixed charge distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedCharge {
    None,
    /// +1 on the upper and -1 on the lower half of the ring
    /// `0.24 <= r^2 <= 0.26` around the origin.
    Janus,
    Tabulated(NodeField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub chi: f64,
    pub v0: f64,
    pub species: Vec<SpeciesParams>,
    pub dielectric: Dielectric,
    pub fixed_charge: FixedCharge,
    pub mean_kind: BFunctionKind,
    /// Stopping tolerance of the curl-free relaxation.
    pub eps_tol: f64,
    /// Relative residual target of the linear solver.
    pub solver_tol: f64,
    pub max_sweeps: usize,
}

pub const JANUS_CHI: f64 = 198.9437;
pub const JANUS_RADII: [f64; 2] = [0.716, 0.676];
pub const JANUS_SOLVENT_RADIUS: f64 = 0.275;

impl ModelParams {
    /// Binary monovalent electrolyte of point ions in a uniform medium.
    pub fn uniform(kappa: f64, eps: f64) -> Self {
        Self {
            kappa,
            chi: 0.0,
            v0: 1.0,
            species: vec![SpeciesParams::point(1), SpeciesParams::point(-1)],
            dielectric: Dielectric::Uniform(eps),
            fixed_charge: FixedCharge::None,
            mean_kind: BFunctionKind::Entropic,
            eps_tol: 1e-6,
            solver_tol: 1e-10,
            max_sweeps: 10_000,
        }
    }

    /// Janus sphere with steric and Born solvation terms.
    pub fn janus(kappa: f64, eps_m: f64, eps_w: f64) -> Self {
        let species = JANUS_RADII
            .iter()
            .zip([1, -1])
            .map(|(&a, q)| SpeciesParams { q, v: a.powi(3), a })
            .collect();
        Self {
            kappa,
            chi: JANUS_CHI,
            v0: JANUS_SOLVENT_RADIUS.powi(3),
            species,
            dielectric: Dielectric::Janus { eps_m, eps_w },
            fixed_charge: FixedCharge::Janus,
            mean_kind: BFunctionKind::Entropic,
            eps_tol: 1e-5,
            solver_tol: 1e-10,
            max_sweeps: 10_000,
        }
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.v0 > 0.0) {
            return bad(format!("solvent volume must be positive, got {}", self.v0));
        }
        if !(self.chi >= 0.0) {
            return bad(format!(
                "Born coupling must be non-negative, got {}",
                self.chi
            ));
        }
        if self.species.is_empty() {
            return bad("at least one ion species is required".into());
        }
        for (l, s) in self.species.iter().enumerate() {
            if !(s.v >= 0.0) {
                return bad(format!("species {l}: negative volume {}", s.v));
            }
            if self.chi != 0.0 && !(s.a > 0.0) {
                return bad(format!(
                    "species {l}: Born radius must be positive, got {}",
                    s.a
                ));
            }
        }
        if !(self.eps_tol > 0.0) || !(self.solver_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        match &self.dielectric {
            Dielectric::Uniform(e) if !(*e > 0.0) => {
                bad(format!("dielectric {e} must be positive"))
            }
            Dielectric::Janus { eps_m, eps_w } if !(*eps_m > 0.0 && *eps_w > 0.0) => bad(format!(
                "dielectric values {eps_m}, {eps_w} must be positive"
            )),
            _ => Ok(()),
        }
    }
}

fn check_positive_eps(value: f64, location: impl FnOnce() -> String) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveDielectric {
            value,
            location: location(),
        })
    }
}

/// Dielectric coefficient at the half points.
pub fn eval_dielectric_edges(params: &ModelParams, grid: &GridSpec) -> Result<EdgeField> {
    let eps = match &params.dielectric {
        Dielectric::Tabulated(nodes) => {
            let g = *grid;
            let mut x = Vec::with_capacity(g.len());
            let mut y = Vec::with_capacity(g.len());
            for i in 0..g.nx {
                for j in 0..g.ny {
                    x.push(0.5 * (nodes[(i, j)] + nodes[(g.ip(i), j)]));
                    y.push(0.5 * (nodes[(i, j)] + nodes[(i, g.jp(j))]));
                }
            }
            EdgeField::from_vecs(g, x, y)
        }
        d => EdgeField::from_fns(
            *grid,
            |x, y| d.eval(x, y).unwrap(),
            |x, y| d.eval(x, y).unwrap(),
        ),
    };
    for (k, &v) in eps.x.iter().chain(&eps.y).enumerate() {
        check_positive_eps(v, || format!("edge {k}"))?;
    }
    Ok(eps)
}

/// Dielectric coefficient at the nodes (used by the Born term).
pub fn eval_dielectric_nodes(params: &ModelParams, grid: &GridSpec) -> Result<NodeField> {
    let eps = match &params.dielectric {
        Dielectric::Tabulated(nodes) => nodes.clone(),
        d => NodeField::from_fn(*grid, |x, y| d.eval(x, y).unwrap()),
    };
    for (k, &v) in eps.values().iter().enumerate() {
        check_positive_eps(v, || format!("node {k}"))?;
    }
    Ok(eps)
}

// Tolerance on r^2 so that ring nodes sitting exactly on the band limits are
// classified the same way regardless of rounding in their coordinates.
const RING_TOL: f64 = 1e-12;

/// Janus fixed charge at a point.
pub fn janus_fixed_charge(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if !(0.24 - RING_TOL..=0.26 + RING_TOL).contains(&r2) {
        return 0.0;
    }
    // Polar angle in (0, 2pi]; the upper half (0, pi] is positive.
    if y > 0.0 || (y == 0.0 && x < 0.0) {
        1.0
    } else {
        -1.0
    }
}

pub fn eval_fixed_charge(params: &ModelParams, grid: &GridSpec) -> NodeField {
    match &params.fixed_charge {
        FixedCharge::None => NodeField::zeros(*grid),
        FixedCharge::Janus => NodeField::from_fn(*grid, janus_fixed_charge),
        FixedCharge::Tabulated(f) => f.clone(),
    }
}

/// Solvent concentration `(1 - sum_l v^l c^l) / v0`.
pub fn solvent_concentration(c: &[NodeField], params: &ModelParams) -> Result<NodeField> {
    let grid = *c[0].grid();
    let mut c0 = NodeField::constant(grid, 1.0);
    for (cl, s) in c.iter().zip(&params.species) {
        if s.v != 0.0 {
            c0.axpy(-s.v, cl);
        }
    }
    let inv_v0 = 1.0 / params.v0;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let v = c0[(i, j)] * inv_v0;
            if !(v > 0.0) {
                return Err(Error::NonPositiveSolvent { i, j, value: v });
            }
            c0[(i, j)] = v;
        }
    }
    Ok(c0)
}

/// Correlation chemical potential of every species, with the dielectric
/// coefficient already sampled at the nodes.
pub fn mu_cr_all(
    c: &[NodeField],
    params: &ModelParams,
    eps_nodes: &NodeField,
) -> Result<Vec<NodeField>> {
    let grid = *c[0].grid();
    let steric = params.species.iter().any(|s| s.v != 0.0);
    let log_solvent = if steric {
        let c0 = solvent_concentration(c, params)?;
        Some(c0.map(|v| (params.v0 * v).ln()))
    } else {
        None
    };
    let mut out = Vec::with_capacity(params.species.len());
    for s in &params.species {
        let mut mu = NodeField::zeros(grid);
        if let (Some(ls), true) = (&log_solvent, s.v != 0.0) {
            mu.axpy(-s.v / params.v0, ls);
        }
        if params.chi != 0.0 {
            let born = params.chi * f64::from(s.q * s.q) / s.a;
            for (m, e) in mu.values_mut().iter_mut().zip(eps_nodes.values()) {
                *m += born * (1.0 / e - 1.0);
            }
        }
        out.push(mu);
    }
    Ok(out)
}

/// Correlation chemical potential of species `species`.
pub fn mu_cr(c: &[NodeField], params: &ModelParams, species: usize) -> Result<NodeField> {
    let eps = eval_dielectric_nodes(params, c[0].grid())?;
    Ok(mu_cr_all(c, params, &eps)?.swap_remove(species))
}

/// Total charge density `sum_l q^l c^l + rho_f`.
pub fn charge_density(c: &[NodeField], params: &ModelParams, fixed: &NodeField) -> NodeField {
    let mut rho = fixed.clone();
    for (cl, s) in c.iter().zip(&params.species) {
        rho.axpy(f64::from(s.q), cl);
    }
    rho
}
