//! Semi-implicit Nernst-Planck step in Slotboom form with
//! Scharfetter-Gummel type fluxes.
//!
//! For every species the update `L c^{n+1} = c^n` is a five-point system
//! whose coefficients come from the B-function of the edge increments
//! `dg`. `L` has a positive diagonal, non-positive off-diagonals and unit
//! column sums, so it is an M-matrix and the solve preserves positivity.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{EdgeField, GridSpec, NodeField};
use crate::model::ModelParams;

const SERIES_THRESHOLD: f64 = 1e-4;

/// Bernoulli function `z / (e^z - 1)` with `B(0) = 1`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < SERIES_THRESHOLD {
        let z2 = z * z;
        1.0 - 0.5 * z + z2 / 12.0 - z2 * z2 / 720.0
    } else if z > 0.0 {
        // z e^{-z} / (1 - e^{-z}); no overflow for large z
        -z * (-z).exp() / (-z).exp_m1()
    } else {
        z / z.exp_m1()
    }
}

/// Choice of half-point mean for `e^{-g}`, i.e. of the flux weight `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BFunctionKind {
    /// `z / (e^z - 1)`, the Scharfetter-Gummel flux.
    #[default]
    Entropic,
    /// `(1 + e^{-z}) / 2`
    Arithmetic,
    /// `e^{-z/2}`
    Geometric,
    /// `2 / (1 + e^z)`
    Harmonic,
}

impl BFunctionKind {
    pub const ALL: [BFunctionKind; 4] = [
        BFunctionKind::Entropic,
        BFunctionKind::Arithmetic,
        BFunctionKind::Geometric,
        BFunctionKind::Harmonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BFunctionKind::Entropic => "entropic",
            BFunctionKind::Arithmetic => "arithmetic",
            BFunctionKind::Geometric => "geometric",
            BFunctionKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for BFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BFunctionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mean kind '{s}'")))
    }
}

pub fn b_function(kind: BFunctionKind, z: f64) -> f64 {
    match kind {
        BFunctionKind::Entropic => bernoulli(z),
        BFunctionKind::Arithmetic => 0.5 * (1.0 + (-z).exp()),
        BFunctionKind::Geometric => (-0.5 * z).exp(),
        BFunctionKind::Harmonic => 2.0 / (1.0 + z.exp()),
    }
}

/// Half-point approximation of `e^{-g}` between nodes carrying `g0` and
/// `g1`; equals `e^{-g0} B(g1 - g0)`.
pub fn half_point_weight(kind: BFunctionKind, g0: f64, g1: f64) -> f64 {
    (-g0).exp() * b_function(kind, g1 - g0)
}

/// Edge increments of `g = q phi + mu_cr`:
/// `dg_{i+1/2,j} = -dx q D/eps + mu_{i+1,j} - mu_{i,j}` and its y analogue.
pub fn compute_dg(
    d: &EdgeField,
    eps_edges: &EdgeField,
    mu_cr_all: &[NodeField],
    params: &ModelParams,
) -> Vec<EdgeField> {
    let g = *d.grid();
    params
        .species
        .iter()
        .zip(mu_cr_all)
        .map(|(s, mu)| {
            let q = f64::from(s.q);
            let mut x = Vec::with_capacity(g.len());
            let mut y = Vec::with_capacity(g.len());
            for i in 0..g.nx {
                for j in 0..g.ny {
                    let k = g.idx(i, j);
                    x.push(-g.dx * q * d.x[k] / eps_edges.x[k] + mu[(g.ip(i), j)] - mu[(i, j)]);
                    y.push(-g.dy * q * d.y[k] / eps_edges.y[k] + mu[(i, g.jp(j))] - mu[(i, j)]);
                }
            }
            EdgeField::from_vecs(g, x, y)
        })
        .collect()
}

/// Five-diagonal operator `lead * I + dt * div J(.)` together with its
/// right-hand side. Row `(i, j)` reads
/// `diag c_{i,j} + east c_{i+1,j} + west c_{i-1,j} + north c_{i,j+1} + south c_{i,j-1}`.
#[derive(Debug, Clone)]
pub struct NpSystem {
    grid: GridSpec,
    pub diag: Vec<f64>,
    pub east: Vec<f64>,
    pub west: Vec<f64>,
    pub north: Vec<f64>,
    pub south: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl NpSystem {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        for i in 0..g.nx {
            let (ip, im) = (g.ip(i), g.im(i));
            for j in 0..g.ny {
                let k = g.idx(i, j);
                out[k] = self.diag[k] * x[k]
                    + self.east[k] * x[g.idx(ip, j)]
                    + self.west[k] * x[g.idx(im, j)]
                    + self.north[k] * x[g.idx(i, g.jp(j))]
                    + self.south[k] * x[g.idx(i, g.jm(j))];
            }
        }
    }

    /// Row-major dense copy, for small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let g = &self.grid;
        let n = g.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.idx(i, j);
                a[k][k] += self.diag[k];
                a[k][g.idx(g.ip(i), j)] += self.east[k];
                a[k][g.idx(g.im(i), j)] += self.west[k];
                a[k][g.idx(i, g.jp(j))] += self.north[k];
                a[k][g.idx(i, g.jm(j))] += self.south[k];
            }
        }
        a
    }

    /// Sum of every column; equals `lead` for a consistent assembly.
    pub fn column_sums(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut sums = self.diag.clone();
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = g.idx(i, j);
                sums[g.idx(g.ip(i), j)] += self.east[k];
                sums[g.idx(g.im(i), j)] += self.west[k];
                sums[g.idx(i, g.jp(j))] += self.north[k];
                sums[g.idx(i, g.jm(j))] += self.south[k];
            }
        }
        sums
    }
}

/// Assemble `lead * I + dt * div J(.)` for one species, with the right-hand
/// side left at zero.
pub fn assemble_np_operator(
    dg: &EdgeField,
    dt: f64,
    kind: BFunctionKind,
    kappa: f64,
    lead: f64,
) -> NpSystem {
    let g = *dg.grid();
    let n = g.len();
    let ax = kappa * dt / (g.dx * g.dx);
    let ay = kappa * dt / (g.dy * g.dy);
    let mut sys = NpSystem {
        grid: g,
        diag: vec![lead; n],
        east: vec![0.0; n],
        west: vec![0.0; n],
        north: vec![0.0; n],
        south: vec![0.0; n],
        rhs: vec![0.0; n],
    };
    for i in 0..g.nx {
        for j in 0..g.ny {
            let k = g.idx(i, j);
            let kw = g.idx(g.im(i), j);
            let ks = g.idx(i, g.jm(j));
            let (ze, zw) = (dg.x[k], dg.x[kw]);
            let (zn, zs) = (dg.y[k], dg.y[ks]);
            sys.east[k] = -ax * b_function(kind, -ze);
            sys.west[k] = -ax * b_function(kind, zw);
            sys.north[k] = -ay * b_function(kind, -zn);
            sys.south[k] = -ay * b_function(kind, zs);
            sys.diag[k] += ax * (b_function(kind, ze) + b_function(kind, -zw))
                + ay * (b_function(kind, zn) + b_function(kind, -zs));
        }
    }
    sys
}

/// Backward Euler system `L c^{n+1} = c^n`.
pub fn assemble_np_system(
    dg: &EdgeField,
    dt: f64,
    kind: BFunctionKind,
    params: &ModelParams,
    c_old: &NodeField,
) -> NpSystem {
    let mut sys = assemble_np_operator(dg, dt, kind, params.kappa, 1.0);
    sys.rhs.copy_from_slice(c_old.values());
    sys
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB with a Jacobi preconditioner. Returns the
/// iterate and its true relative residual.
pub fn bicgstab(sys: &NpSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = sys.rhs.len();
    let b = &sys.rhs;
    let bnorm = norm(b);
    let mut x: Vec<f64> = b.iter().zip(&sys.diag).map(|(b, d)| b / d).collect();
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = sys.diag.iter().map(|d| 1.0 / d).collect();
    let precond = |v: &[f64], out: &mut [f64]| {
        for ((o, v), d) in out.iter_mut().zip(v).zip(&inv_diag) {
            *o = v * d;
        }
    };

    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut [f64], tmp: &mut [f64]| {
        sys.apply(x, tmp);
        for ((r, b), ax) in r.iter_mut().zip(b).zip(tmp.iter()) {
            *r = b - ax;
        }
        norm(r) / bnorm
    };

    let mut rel = true_residual(&x, &mut r, &mut tmp);
    let mut iterations = 0;
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];

    // Outer restarts guard against breakdown and against drift between the
    // recursive and the true residual.
    'restart: while rel > tol && iterations < max_iter {
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                rel = true_residual(&x, &mut r, &mut tmp);
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
            }
            precond(&p, &mut p_hat);
            sys.apply(&p_hat, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 || !rv.is_finite() {
                rel = true_residual(&x, &mut r, &mut tmp);
                continue 'restart;
            }
            alpha = rho / rv;
            for k in 0..n {
                s[k] = r[k] - alpha * v[k];
            }
            if norm(&s) / bnorm <= tol {
                for k in 0..n {
                    x[k] += alpha * p_hat[k];
                }
                rel = true_residual(&x, &mut r, &mut tmp);
                continue 'restart;
            }
            precond(&s, &mut s_hat);
            sys.apply(&s_hat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for k in 0..n {
                x[k] += alpha * p_hat[k] + omega * s_hat[k];
                r[k] = s[k] - omega * t[k];
            }
            if omega == 0.0 || norm(&r) / bnorm <= tol {
                rel = true_residual(&x, &mut r, &mut tmp);
                continue 'restart;
            }
        }
        rel = true_residual(&x, &mut r, &mut tmp);
    }

    let stats = SolveStats {
        iterations,
        residual: rel,
    };
    if rel <= tol && x.iter().all(|v| v.is_finite()) {
        Ok((x, stats))
    } else {
        Err(Error::SolverDiverged {
            iterations,
            residual: rel,
        })
    }
}

/// Iteration cap used by [`solve_np`].
pub fn default_max_iterations(grid: &GridSpec) -> usize {
    10 * grid.len()
}

/// Solve the assembled system and check that the result stays positive.
pub fn solve_np(sys: &NpSystem, solver_tol: f64) -> Result<NodeField> {
    let (x, _) = bicgstab(sys, solver_tol, default_max_iterations(&sys.grid))?;
    let c = NodeField::from_vec(sys.grid, x);
    check_positive(&c)?;
    Ok(c)
}

pub(crate) fn check_positive(c: &NodeField) -> Result<()> {
    let g = c.grid();
    for i in 0..g.nx {
        for j in 0..g.ny {
            let v = c[(i, j)];
            if !(v > 0.0) {
                return Err(Error::PositivityLost { i, j, value: v });
            }
        }
    }
    Ok(())
}

/// Numerical fluxes `J_{i+1/2,j} = -(kappa/dx) [B(-dg) c_{i+1,j} - B(dg) c_{i,j}]`
/// evaluated with the new concentrations. An optional manufactured source
/// `g` is added as `-kappa g`.
pub fn compute_fluxes(
    c_new: &NodeField,
    dg: &EdgeField,
    kind: BFunctionKind,
    kappa: f64,
    source: Option<&EdgeField>,
) -> EdgeField {
    let g = *c_new.grid();
    let (fx, fy) = (kappa / g.dx, kappa / g.dy);
    let mut x = Vec::with_capacity(g.len());
    let mut y = Vec::with_capacity(g.len());
    for i in 0..g.nx {
        for j in 0..g.ny {
            let k = g.idx(i, j);
            let c = c_new[(i, j)];
            let (zx, zy) = (dg.x[k], dg.y[k]);
            x.push(-fx * (b_function(kind, -zx) * c_new[(g.ip(i), j)] - b_function(kind, zx) * c));
            y.push(-fy * (b_function(kind, -zy) * c_new[(i, g.jp(j))] - b_function(kind, zy) * c));
        }
    }
    let mut j = EdgeField::from_vecs(g, x, y);
    if let Some(src) = source {
        j.axpy(-kappa, src);
    }
    j
}
