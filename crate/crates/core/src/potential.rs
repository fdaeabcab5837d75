//! Transformed electrostatic problem on the fixed cylinder.
//!
//! For a deformation `v` with `min v > -1` the potential is pulled back to
//! `Omega = D x (0,1)` where it satisfies a divergence-form elliptic problem
//! with v-dependent coefficients and boundary data `phi = eta`. Solving for
//! the shifted unknown `Phi = phi - eta` gives a homogeneous Dirichlet
//! problem `-L_v Phi = f`, discretized with second-order central stencils
//! and solved by BiCGStab preconditioned with a constant-coefficient fast
//! sine-transform solve.

use ndarray::{Array2, Array3};
use std::f64::consts::PI;

use crate::error::{Result, SimError};
use crate::grid::{
    extrapolate_closed, gradient, laplacian, trig_tables, CylinderGrid, PlateField, PlateGrid,
};

/// Model constants. Constructed through `new` so the range constraints are
/// enforced once, at the edge.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Parameters {
    /// Aspect ratio, > 0.
    pub eps: f64,
    /// Bending rigidity, > 0.
    pub beta: f64,
    /// Stretching, >= 0.
    pub tau: f64,
    /// Poisson-type ratio, in (-1, 1).
    pub sigma: f64,
    /// Voltage parameter, >= 0 (zero runs the decoupled linear flow).
    pub lambda: f64,
}

impl Parameters {
    pub fn new(eps: f64, beta: f64, tau: f64, sigma: f64, lambda: f64) -> Result<Self> {
        let check = |ok: bool, name: &'static str, value: f64, constraint: &'static str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(SimError::InvalidParameter {
                    name,
                    value,
                    constraint,
                })
            }
        };
        check(eps > 0.0, "eps", eps, "eps > 0")?;
        check(beta > 0.0, "beta", beta, "beta > 0")?;
        check(tau >= 0.0, "tau", tau, "tau >= 0")?;
        check(sigma > -1.0 && sigma < 1.0, "sigma", sigma, "-1 < sigma < 1")?;
        check(lambda >= 0.0, "lambda", lambda, "lambda >= 0")?;
        Ok(Self {
            eps,
            beta,
            tau,
            sigma,
            lambda,
        })
    }
}

/// Divergence-form coefficient fields of `L_v`.
///
/// The coefficient matrix at a node is
/// `[[a1, 0, a2/2], [0, a1, a3/2], [a2/2, a3/2, a4]]` with `a1 = eps^2`,
/// `a2/2 = -eps^2 eta V1`, `a3/2 = -eps^2 eta V2` and
/// `a4 = 1/(1+v)^2 + eps^2 eta^2 |V|^2`. Every entry is separable into a
/// plate factor times a power of `eta`, so only the plate factors are
/// stored (closed grid, quadratic extrapolation at the wall ring).
pub struct OperatorCoefficients {
    pub grid: CylinderGrid,
    pub eps2: f64,
    /// `V = grad v / (1+v)` components on the closed plate grid.
    v1_c: Array2<f64>,
    v2_c: Array2<f64>,
    /// `|V|^2` on the closed plate grid.
    vv_c: Array2<f64>,
    /// `1/(1+v)^2` on the closed plate grid.
    inv_gap2_c: Array2<f64>,
    /// `Lap v / (1+v)` on interior plate nodes (source term factor).
    lap_gap: Array2<f64>,
}

impl OperatorCoefficients {
    /// Full 3x3 coefficient matrix at a closed-grid node.
    pub fn alpha_at(&self, i: usize, j: usize, k: usize) -> [[f64; 3]; 3] {
        let eta = self.grid.eta(k);
        let a2h = -self.eps2 * eta * self.v1_c[[i, j]];
        let a3h = -self.eps2 * eta * self.v2_c[[i, j]];
        let a4 = self.inv_gap2_c[[i, j]] + self.eps2 * eta * eta * self.vv_c[[i, j]];
        [
            [self.eps2, 0.0, a2h],
            [0.0, self.eps2, a3h],
            [a2h, a3h, a4],
        ]
    }

    /// Drift vector `b = (eps^2 V1, eps^2 V2, -eps^2 eta |V|^2)` at a
    /// closed-grid node.
    pub fn b_at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let eta = self.grid.eta(k);
        [
            self.eps2 * self.v1_c[[i, j]],
            self.eps2 * self.v2_c[[i, j]],
            -self.eps2 * eta * self.vv_c[[i, j]],
        ]
    }

    /// Source `f = eps^2 eta (2|V|^2 - Lap v/(1+v))` flattened over interior
    /// nodes in `(i, j, k)` order.
    pub fn source(&self) -> Vec<f64> {
        let n = self.grid.plate.n;
        let mz = self.grid.m - 1;
        let mut out = vec![0.0; n * n * mz];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                let fac =
                    self.eps2 * (2.0 * self.vv_c[[i + 1, j + 1]] - self.lap_gap[[i, j]]);
                for kk in 0..mz {
                    out[idx] = self.grid.eta(kk + 1) * fac;
                    idx += 1;
                }
            }
        }
        out
    }

    /// Sylvester criterion on a strided sample of nodes; returns the minimal
    /// leading-minor determinant encountered.
    pub fn min_leading_minor(&self, stride: usize) -> f64 {
        let n = self.grid.plate.n;
        let m = self.grid.m;
        let mut min = f64::INFINITY;
        let mut k = 0;
        while k < m + 1 {
            let mut i = 0;
            while i < n + 2 {
                let mut j = 0;
                while j < n + 2 {
                    let a = self.alpha_at(i, j, k);
                    let d1 = a[0][0];
                    let d2 = a[0][0] * a[1][1];
                    let d3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                        - a[0][2] * a[1][1] * a[2][0];
                    min = min.min(d1).min(d2).min(d3);
                    j += stride;
                }
                i += stride;
            }
            k += stride;
        }
        min
    }
}

/// Assemble the divergence-form coefficients for a given deformation.
pub fn assemble_coefficients(
    v: &PlateField,
    p: &Parameters,
    grid: &CylinderGrid,
) -> Result<OperatorCoefficients> {
    v.require_admissible()?;
    let n = grid.plate.n;
    let eps2 = p.eps * p.eps;

    let (vx, vy) = gradient(v);
    let lap = laplacian(v);

    // V = grad v / (1 + v) and Lap v / (1 + v) on interior nodes
    let mut v1 = Array2::zeros((n, n));
    let mut v2 = Array2::zeros((n, n));
    let mut lap_gap = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let gap = 1.0 + v.values[[i, j]];
            v1[[i, j]] = vx.values[[i, j]] / gap;
            v2[[i, j]] = vy.values[[i, j]] / gap;
            lap_gap[[i, j]] = lap.values[[i, j]] / gap;
        }
    }

    // closed extensions; quadratic extrapolation keeps constants exact and
    // hinged fields consistent to O(h^2)
    let v_c = extrapolate_closed(&v.values);
    let v1_c = extrapolate_closed(&v1);
    let v2_c = extrapolate_closed(&v2);
    let mut vv_c = Array2::zeros((n + 2, n + 2));
    let mut inv_gap2_c = Array2::zeros((n + 2, n + 2));
    for i in 0..n + 2 {
        for j in 0..n + 2 {
            let gap = 1.0 + v_c[[i, j]];
            vv_c[[i, j]] = v1_c[[i, j]] * v1_c[[i, j]] + v2_c[[i, j]] * v2_c[[i, j]];
            inv_gap2_c[[i, j]] = 1.0 / (gap * gap);
        }
    }

    Ok(OperatorCoefficients {
        grid: *grid,
        eps2,
        v1_c,
        v2_c,
        vv_c,
        inv_gap2_c,
        lap_gap,
    })
}

// ---------------------------------------------------------------------------
// Discrete operator
// ---------------------------------------------------------------------------

/// Pad an interior unknown vector into a flat closed array (zero boundary),
/// laid out `(i, j, k)` with k contiguous.
fn pad(grid: &CylinderGrid, w: &[f64], out: &mut [f64]) {
    let n = grid.plate.n;
    let m = grid.m;
    let mz = m - 1;
    let sj = m + 1;
    let si = (n + 2) * sj;
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut idx = 0;
    for i in 1..=n {
        for j in 1..=n {
            let base = i * si + j * sj + 1;
            out[base..base + mz].copy_from_slice(&w[idx..idx + mz]);
            idx += mz;
        }
    }
}

/// Length of the padded work buffer for `apply_neg_lv`.
pub fn padded_len(grid: &CylinderGrid) -> usize {
    let n = grid.plate.n;
    (n + 2) * (n + 2) * (grid.m + 1)
}

/// Apply `A = -L_v` (divergence form) to an interior vector.
///
/// Horizontal second differences use the constant `eps^2`; the vertical flux
/// uses arithmetic half-node averages of `a4`; mixed terms are centered
/// cross differences of the half-coefficient times a centered derivative.
/// The hot loop runs over flat slices with the separable eta factors
/// reconstructed on the fly.
pub fn apply_neg_lv(
    coeffs: &OperatorCoefficients,
    w: &[f64],
    out: &mut [f64],
    padded: &mut Vec<f64>,
) {
    let grid = &coeffs.grid;
    let n = grid.plate.n;
    let m = grid.m;
    let mz = m - 1;
    let h = grid.plate.h();
    let hz = grid.h_eta();
    let ih2 = 1.0 / (h * h);
    let iz2 = 1.0 / (hz * hz);
    let i2h = 1.0 / (2.0 * h);
    let i2z = 1.0 / (2.0 * hz);
    let eps2 = coeffs.eps2;

    padded.resize(padded_len(grid), 0.0);
    pad(grid, w, padded);
    let wp: &[f64] = padded;
    let sj = m + 1;
    let si = (n + 2) * sj;

    let mut idx = 0;
    for i in 1..=n {
        for j in 1..=n {
            // per-column plate factors (closed arrays embed the interior)
            let v1ij = coeffs.v1_c[[i, j]];
            let v2ij = coeffs.v2_c[[i, j]];
            let vv = coeffs.vv_c[[i, j]];
            let ig2 = coeffs.inv_gap2_c[[i, j]];
            let v1_e = coeffs.v1_c[[i + 1, j]];
            let v1_w = coeffs.v1_c[[i - 1, j]];
            let v2_n = coeffs.v2_c[[i, j + 1]];
            let v2_s = coeffs.v2_c[[i, j - 1]];

            let col = i * si + j * sj;
            let (ce, cw, cn, cs) = (col + si, col - si, col + sj, col - sj);
            for k in 1..=mz {
                let eta = k as f64 * hz;
                let eta_u = (k + 1) as f64 * hz;
                let eta_d = (k - 1) as f64 * hz;
                let c = wp[col + k];
                let we = wp[ce + k];
                let ww = wp[cw + k];
                let wn = wp[cn + k];
                let ws = wp[cs + k];
                let up = wp[col + k + 1];
                let dn = wp[col + k - 1];

                // horizontal Laplacian (a1 = eps^2 constant)
                let lap_xy = (we - 2.0 * c + ww + wn - 2.0 * c + ws) * ih2;

                // vertical flux with half-node a4
                let a4c = ig2 + eps2 * eta * eta * vv;
                let a4u = 0.5 * (a4c + (ig2 + eps2 * eta_u * eta_u * vv));
                let a4d = 0.5 * (a4c + (ig2 + eps2 * eta_d * eta_d * vv));
                let flux_z = (a4u * (up - c) - a4d * (c - dn)) * iz2;

                // d/dx1 (a2h d_eta w) + d/dx2 (a3h d_eta w),
                // a2h = -eps^2 eta V1, a3h = -eps^2 eta V2
                let deta_e = (wp[ce + k + 1] - wp[ce + k - 1]) * i2z;
                let deta_w = (wp[cw + k + 1] - wp[cw + k - 1]) * i2z;
                let deta_n = (wp[cn + k + 1] - wp[cn + k - 1]) * i2z;
                let deta_s = (wp[cs + k + 1] - wp[cs + k - 1]) * i2z;
                let mixed_x = (-eps2 * eta * v1_e * deta_e - (-eps2 * eta * v1_w) * deta_w)
                    * i2h
                    + (-eps2 * eta * v2_n * deta_n - (-eps2 * eta * v2_s) * deta_s) * i2h;

                // d/deta (a2h d_x1 w + a3h d_x2 w)
                let horiz_u = -eps2 * eta_u * v1ij * (wp[ce + k + 1] - wp[cw + k + 1]) * i2h
                    + (-eps2 * eta_u * v2ij) * (wp[cn + k + 1] - wp[cs + k + 1]) * i2h;
                let horiz_d = -eps2 * eta_d * v1ij * (wp[ce + k - 1] - wp[cw + k - 1]) * i2h
                    + (-eps2 * eta_d * v2ij) * (wp[cn + k - 1] - wp[cs + k - 1]) * i2h;
                let mixed_z = (horiz_u - horiz_d) * i2z;

                // drift b = (eps^2 V1, eps^2 V2, -eps^2 eta |V|^2)
                let drift = eps2 * v1ij * (we - ww) * i2h + eps2 * v2ij * (wn - ws) * i2h
                    + (-eps2 * eta * vv) * ((up - dn) * i2z);

                out[idx] = -(eps2 * lap_xy + flux_z + mixed_x + mixed_z + drift);
                idx += 1;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Fast constant-coefficient preconditioner
// ---------------------------------------------------------------------------

/// Exactly inverts `-eps^2 Lap_xy - d_eta(cbar(eta) d_eta)` on the slab by a
/// double-sine transform per level and a tridiagonal solve per mode.
struct FastPoisson {
    n: usize,
    mz: usize,
    scale: f64,
    /// Dirichlet Laplacian stencil eigenvalues per 1D mode.
    lam: Vec<f64>,
    /// Half-level coefficient `cbar_{k+1/2}`, k = 0..m-1.
    c_half: Vec<f64>,
    hz: f64,
    eps2: f64,
}

impl FastPoisson {
    fn new(grid: &CylinderGrid, coeffs: &OperatorCoefficients) -> Self {
        let n = grid.plate.n;
        let m = grid.m;
        let h = grid.plate.h();
        let eps2 = coeffs.eps2;
        let lam = (0..n)
            .map(|p| (2.0 - 2.0 * ((p + 1) as f64 * PI * h).cos()) / (h * h))
            .collect();
        // interior level means of a4 from the separable factors
        let inv_nn = 1.0 / ((n * n) as f64);
        let mut mean_ig2 = 0.0;
        let mut mean_vv = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                mean_ig2 += coeffs.inv_gap2_c[[i, j]];
                mean_vv += coeffs.vv_c[[i, j]];
            }
        }
        mean_ig2 *= inv_nn;
        mean_vv *= inv_nn;
        let lev: Vec<f64> = (0..m + 1)
            .map(|k| {
                let eta = grid.eta(k);
                mean_ig2 + eps2 * eta * eta * mean_vv
            })
            .collect();
        let c_half = (0..m).map(|k| 0.5 * (lev[k] + lev[k + 1])).collect();
        Self {
            n,
            mz: m - 1,
            scale: 2.0 / (n as f64 + 1.0),
            lam,
            c_half,
            hz: grid.h_eta(),
            eps2,
        }
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        let mz = self.mz;
        let t = trig_tables(n);
        let s2 = self.scale * self.scale;

        // forward DST level by level
        let mut rhat = Array3::zeros((n, n, mz));
        let mut level = Array2::zeros((n, n));
        for kk in 0..mz {
            for i in 0..n {
                for j in 0..n {
                    level[[i, j]] = r[(i * n + j) * mz + kk];
                }
            }
            let tl = t.sin_int.dot(&level).dot(&t.sin_int) * s2;
            for i in 0..n {
                for j in 0..n {
                    rhat[[i, j, kk]] = tl[[i, j]];
                }
            }
        }

        // tridiagonal solve per mode (Thomas)
        let iz2 = 1.0 / (self.hz * self.hz);
        let mut cp = vec![0.0; mz];
        let mut dp = vec![0.0; mz];
        for p in 0..n {
            for q in 0..n {
                let lam = self.eps2 * (self.lam[p] + self.lam[q]);
                let diag = |k: usize| lam + (self.c_half[k + 1] + self.c_half[k]) * iz2;
                let upper = |k: usize| -self.c_half[k + 1] * iz2;
                let lower = |k: usize| -self.c_half[k] * iz2;

                let mut beta = diag(0);
                cp[0] = upper(0) / beta;
                dp[0] = rhat[[p, q, 0]] / beta;
                for k in 1..mz {
                    beta = diag(k) - lower(k) * cp[k - 1];
                    cp[k] = upper(k) / beta;
                    dp[k] = (rhat[[p, q, k]] - lower(k) * dp[k - 1]) / beta;
                }
                rhat[[p, q, mz - 1]] = dp[mz - 1];
                for k in (0..mz - 1).rev() {
                    rhat[[p, q, k]] = dp[k] - cp[k] * rhat[[p, q, k + 1]];
                }
            }
        }

        // inverse DST level by level
        for kk in 0..mz {
            for i in 0..n {
                for j in 0..n {
                    level[[i, j]] = rhat[[i, j, kk]];
                }
            }
            let tl = t.sin_int.dot(&level).dot(&t.sin_int);
            for i in 0..n {
                for j in 0..n {
                    z[(i * n + j) * mz + kk] = tl[[i, j]];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Krylov solve
// ---------------------------------------------------------------------------

/// Relative residual tolerance of the elliptic solve.
pub const SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub residual: f64,
    pub warm_start: bool,
    /// Worst violation of the discrete maximum principle `0 <= phi <= 1`
    /// (soft diagnostic, not an error).
    pub max_principle_excess: f64,
}

/// Transformed potential on the closed cylinder grid (boundary rows hold the
/// Dirichlet data `phi = eta` exactly).
pub struct PotentialField {
    pub grid: CylinderGrid,
    pub values: Array3<f64>,
    pub stats: SolveStats,
}

impl PotentialField {
    /// Shifted unknown `Phi = phi - eta` on interior nodes, flattened; used
    /// for warm starts of subsequent solves.
    pub fn shifted_interior(&self) -> Vec<f64> {
        let n = self.grid.plate.n;
        let mz = self.grid.m - 1;
        let mut out = vec![0.0; n * n * mz];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for kk in 0..mz {
                    out[idx] = self.values[[i + 1, j + 1, kk + 1]] - self.grid.eta(kk + 1);
                    idx += 1;
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGStab for `A x = f` with `A = -L_v`.
fn bicgstab(
    coeffs: &OperatorCoefficients,
    precond: &FastPoisson,
    f: &[f64],
    x: &mut [f64],
    max_iter: usize,
) -> (f64, usize, bool) {
    let nn = f.len();
    let grid = &coeffs.grid;
    let mut padded = vec![0.0; padded_len(grid)];

    let fnorm = norm(f);
    if fnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (0.0, 0, true);
    }

    let mut r = vec![0.0; nn];
    apply_neg_lv(coeffs, x, &mut r, &mut padded);
    for i in 0..nn {
        r[i] = f[i] - r[i];
    }
    if norm(&r) <= SOLVER_TOL * fnorm {
        return (norm(&r) / fnorm, 0, true);
    }

    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut p = vec![0.0; nn];
    let mut vv = vec![0.0; nn];
    let mut phat = vec![0.0; nn];
    let mut shat = vec![0.0; nn];
    let mut t = vec![0.0; nn];

    for iter in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            return (norm(&r) / fnorm, iter, false);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..nn {
            p[i] = r[i] + beta * (p[i] - omega * vv[i]);
        }
        precond.solve(&p, &mut phat);
        apply_neg_lv(coeffs, &phat, &mut vv, &mut padded);
        let denom = dot(&r0, &vv);
        if denom.abs() < 1e-300 {
            return (norm(&r) / fnorm, iter, false);
        }
        alpha = rho_new / denom;
        // s = r - alpha v  (reuse r)
        for i in 0..nn {
            r[i] -= alpha * vv[i];
        }
        if norm(&r) <= 0.1 * SOLVER_TOL * fnorm {
            for i in 0..nn {
                x[i] += alpha * phat[i];
            }
            apply_neg_lv(coeffs, x, &mut t, &mut padded);
            let res = (0..nn).map(|i| (f[i] - t[i]).powi(2)).sum::<f64>().sqrt() / fnorm;
            if res <= SOLVER_TOL {
                return (res, iter, true);
            }
        }
        precond.solve(&r, &mut shat);
        apply_neg_lv(coeffs, &shat, &mut t, &mut padded);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return (norm(&r) / fnorm, iter, false);
        }
        omega = dot(&t, &r) / tt;
        for i in 0..nn {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] -= omega * t[i];
        }
        if norm(&r) <= SOLVER_TOL * fnorm {
            // confirm with the true residual before accepting
            apply_neg_lv(coeffs, x, &mut t, &mut padded);
            let res = (0..nn).map(|i| (f[i] - t[i]).powi(2)).sum::<f64>().sqrt() / fnorm;
            if res <= SOLVER_TOL {
                return (res, iter, true);
            }
            for i in 0..nn {
                r[i] = f[i] - t[i];
            }
        }
        rho = rho_new;
    }

    let mut t2 = vec![0.0; nn];
    apply_neg_lv(coeffs, x, &mut t2, &mut padded);
    let res = (0..nn).map(|i| (f[i] - t2[i]).powi(2)).sum::<f64>().sqrt() / fnorm;
    (res, max_iter, res <= SOLVER_TOL)
}

fn solve_shifted(
    coeffs: &OperatorCoefficients,
    rhs: &[f64],
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, usize, f64, bool)> {
    let grid = &coeffs.grid;
    let nn = rhs.len();
    let cap = (20.0 * (nn as f64).sqrt()).ceil() as usize;
    let precond = FastPoisson::new(grid, coeffs);

    let warm_used = warm.is_some();
    let mut x = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; nn]);
    let (res, mut iters, ok) = bicgstab(coeffs, &precond, rhs, &mut x, cap);
    if ok {
        return Ok((x, iters, res, warm_used));
    }
    // one cold restart before giving up
    if warm_used {
        let mut x2 = vec![0.0; nn];
        let (res2, iters2, ok2) = bicgstab(coeffs, &precond, rhs, &mut x2, cap);
        iters += iters2;
        if ok2 {
            return Ok((x2, iters, res2, false));
        }
        return Err(SimError::SolverDivergence {
            residual: res2.min(res),
            iterations: iters,
            at: None,
        });
    }
    Err(SimError::SolverDivergence {
        residual: res,
        iterations: iters,
        at: None,
    })
}

fn build_phi(grid: &CylinderGrid, shifted: &[f64], stats: SolveStats) -> PotentialField {
    let n = grid.plate.n;
    let m = grid.m;
    let mut values = Array3::zeros((n + 2, n + 2, m + 1));
    for i in 0..n + 2 {
        for j in 0..n + 2 {
            for k in 0..m + 1 {
                values[[i, j, k]] = grid.eta(k);
            }
        }
    }
    let mz = m - 1;
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for kk in 0..mz {
                values[[i + 1, j + 1, kk + 1]] += shifted[idx];
                idx += 1;
            }
        }
    }
    let excess = values
        .iter()
        .map(|&p| (-p).max(p - 1.0).max(0.0))
        .fold(0.0, f64::max);
    PotentialField {
        grid: *grid,
        values,
        stats: SolveStats {
            max_principle_excess: excess,
            ..stats
        },
    }
}

/// Solve the transformed problem `L_v phi = 0`, `phi = eta` on the boundary.
pub fn solve_transformed_potential(
    v: &PlateField,
    p: &Parameters,
    grid: &CylinderGrid,
) -> Result<PotentialField> {
    solve_transformed_potential_warm(v, p, grid, None)
}

/// Same solve reusing a previous shifted solution as the initial guess.
pub fn solve_transformed_potential_warm(
    v: &PlateField,
    p: &Parameters,
    grid: &CylinderGrid,
    warm: Option<&[f64]>,
) -> Result<PotentialField> {
    let coeffs = assemble_coefficients(v, p, grid)?;
    let rhs = coeffs.source();
    let (x, iterations, residual, warm_start) = solve_shifted(&coeffs, &rhs, warm)?;
    Ok(build_phi(
        grid,
        &x,
        SolveStats {
            iterations,
            residual,
            warm_start,
            max_principle_excess: 0.0,
        },
    ))
}

/// Solve `-L_v Phi = f` for a caller-supplied source (manufactured-solution
/// studies); returns `phi = eta + Phi`.
pub fn solve_with_source(
    v: &PlateField,
    p: &Parameters,
    grid: &CylinderGrid,
    source: &Array3<f64>,
) -> Result<PotentialField> {
    let coeffs = assemble_coefficients(v, p, grid)?;
    let rhs: Vec<f64> = source.iter().copied().collect();
    let (x, iterations, residual, warm_start) = solve_shifted(&coeffs, &rhs, None)?;
    Ok(build_phi(
        grid,
        &x,
        SolveStats {
            iterations,
            residual,
            warm_start,
            max_principle_excess: 0.0,
        },
    ))
}

// ---------------------------------------------------------------------------
// Trace and nonlinearity
// ---------------------------------------------------------------------------

/// `d_eta phi(., 1)` per interior plate node.
#[derive(Debug, Clone)]
pub struct TraceField {
    pub grid: PlateGrid,
    pub values: Array2<f64>,
}

/// One-sided second-order derivative at the top boundary,
/// `(3 phi_m - 4 phi_{m-1} + phi_{m-2}) / (2 h_eta)`; exact on quadratics.
pub fn top_trace_derivative(phi: &PotentialField) -> TraceField {
    let n = phi.grid.plate.n;
    let m = phi.grid.m;
    let i2z = 1.0 / (2.0 * phi.grid.h_eta());
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            values[[i, j]] = (3.0 * phi.values[[i + 1, j + 1, m]]
                - 4.0 * phi.values[[i + 1, j + 1, m - 1]]
                + phi.values[[i + 1, j + 1, m - 2]])
                * i2z;
        }
    }
    TraceField {
        grid: phi.grid.plate,
        values,
    }
}

/// Electrostatic source `g(v) = (1 + eps^2 |grad v|^2) / (1+v)^2 *
/// (d_eta phi_v(., 1))^2` from an already-solved potential.
pub fn g_from_phi(v: &PlateField, phi: &PotentialField, p: &Parameters) -> PlateField {
    let n = v.grid.n;
    let eps2 = p.eps * p.eps;
    let trace = top_trace_derivative(phi);
    let (vx, vy) = gradient(v);
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let gap = 1.0 + v.values[[i, j]];
            let grad2 = vx.values[[i, j]].powi(2) + vy.values[[i, j]].powi(2);
            let tr = trace.values[[i, j]];
            values[[i, j]] = (1.0 + eps2 * grad2) / (gap * gap) * tr * tr;
        }
    }
    PlateField {
        grid: v.grid,
        values,
    }
}

/// Solve the potential and evaluate `g(v)`.
pub fn compute_g(v: &PlateField, p: &Parameters, grid: &CylinderGrid) -> Result<PlateField> {
    let phi = solve_transformed_potential(v, p, grid)?;
    Ok(g_from_phi(v, &phi, p))
}

/// Right-hand side `G(u)` of the evolution equation. Identical to `g(u)`:
/// differentiating the top boundary condition shows the horizontal potential
/// gradient at the plate is `-d_z psi * grad u`, which collapses the physical
/// expression onto `g`. A physical-domain evaluation lives in `verify`.
pub fn compute_big_g(u: &PlateField, p: &Parameters, grid: &CylinderGrid) -> Result<PlateField> {
    compute_g(u, p, grid)
}

// ---------------------------------------------------------------------------
// Physical-domain reconstruction
// ---------------------------------------------------------------------------

/// Evaluator for the physical potential `psi(x, z) = phi(x, (1+z)/(1+v(x)))`.
pub struct PsiSampler<'a> {
    phi: &'a PotentialField,
    /// Deformation extended to the closed grid by quadratic extrapolation.
    v_closed: Array2<f64>,
}

pub fn reconstruct_psi<'a>(phi: &'a PotentialField, v: &PlateField) -> Result<PsiSampler<'a>> {
    v.require_admissible()?;
    Ok(PsiSampler {
        phi,
        v_closed: extrapolate_closed(&v.values),
    })
}

impl<'a> PsiSampler<'a> {
    /// Bilinear interpolation of the closed-grid deformation.
    pub fn v_at(&self, x1: f64, x2: f64) -> f64 {
        let n = self.phi.grid.plate.n;
        let h = self.phi.grid.plate.h();
        let fx = (x1 / h).clamp(0.0, (n + 1) as f64);
        let fy = (x2 / h).clamp(0.0, (n + 1) as f64);
        let i0 = (fx.floor() as usize).min(n);
        let j0 = (fy.floor() as usize).min(n);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v = &self.v_closed;
        (1.0 - tx) * (1.0 - ty) * v[[i0, j0]]
            + tx * (1.0 - ty) * v[[i0 + 1, j0]]
            + (1.0 - tx) * ty * v[[i0, j0 + 1]]
            + tx * ty * v[[i0 + 1, j0 + 1]]
    }

    /// Trilinear sample of `psi` at a physical point.
    pub fn eval(&self, x1: f64, x2: f64, z: f64) -> Result<f64> {
        let vx = self.v_at(x1, x2);
        let slack = 1e-12 * (2.0 + vx.abs());
        if z < -1.0 - slack || z > vx + slack {
            return Err(SimError::OutOfDomain {
                x1,
                x2,
                z,
                top: vx,
            });
        }
        let eta = ((1.0 + z) / (1.0 + vx)).clamp(0.0, 1.0);

        let n = self.phi.grid.plate.n;
        let m = self.phi.grid.m;
        let h = self.phi.grid.plate.h();
        let fx = (x1 / h).clamp(0.0, (n + 1) as f64);
        let fy = (x2 / h).clamp(0.0, (n + 1) as f64);
        let fz = (eta * m as f64).clamp(0.0, m as f64);
        let i0 = (fx.floor() as usize).min(n);
        let j0 = (fy.floor() as usize).min(n);
        let k0 = (fz.floor() as usize).min(m - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let tz = fz - k0 as f64;
        let p = &self.phi.values;
        let c00 = p[[i0, j0, k0]] * (1.0 - tz) + p[[i0, j0, k0 + 1]] * tz;
        let c10 = p[[i0 + 1, j0, k0]] * (1.0 - tz) + p[[i0 + 1, j0, k0 + 1]] * tz;
        let c01 = p[[i0, j0 + 1, k0]] * (1.0 - tz) + p[[i0, j0 + 1, k0 + 1]] * tz;
        let c11 = p[[i0 + 1, j0 + 1, k0]] * (1.0 - tz) + p[[i0 + 1, j0 + 1, k0 + 1]] * tz;
        Ok((1.0 - tx) * (1.0 - ty) * c00 + tx * (1.0 - ty) * c10 + (1.0 - tx) * ty * c01
            + tx * ty * c11)
    }
}

// ---------------------------------------------------------------------------
// Manufactured-solution and consistency helpers (verification support)
// ---------------------------------------------------------------------------

/// Apply the primitive (non-divergence) form of `L_v` to samples of a smooth
/// function, using closed-form coefficient data evaluated by the supplied
/// closures. Used to cross-check the divergence-form discretization.
pub struct SmoothCoefficients<'f> {
    pub v: &'f dyn Fn(f64, f64) -> f64,
    pub grad_v: &'f dyn Fn(f64, f64) -> (f64, f64),
    pub lap_v: &'f dyn Fn(f64) -> f64,
}

/// Fourth-order central difference of a scalar function of one coordinate.
fn d1_num<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    (-f(x + 2.0 * step) + 8.0 * f(x + step) - 8.0 * f(x - step) + f(x - 2.0 * step))
        / (12.0 * step)
}

fn d2_num<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    (-f(x + 2.0 * step) + 16.0 * f(x + step) - 30.0 * f(x)
        + 16.0 * f(x - step)
        - f(x - 2.0 * step))
        / (12.0 * step * step)
}

/// Evaluate `L_v w` at a point by high-order numerical differentiation of a
/// closed-form `w(x1, x2, eta)` and closed-form `v`, `grad v`, `lap v`.
#[allow(clippy::too_many_arguments)]
pub fn lv_of_smooth(
    w: &dyn Fn(f64, f64, f64) -> f64,
    v: &dyn Fn(f64, f64) -> f64,
    grad_v: &dyn Fn(f64, f64) -> (f64, f64),
    lap_v: &dyn Fn(f64, f64) -> f64,
    eps: f64,
    x1: f64,
    x2: f64,
    eta: f64,
) -> f64 {
    let step = 1e-3;
    let eps2 = eps * eps;
    let vv = v(x1, x2);
    let gap = 1.0 + vv;
    let (gx, gy) = grad_v(x1, x2);
    let grad2 = gx * gx + gy * gy;

    let wxx = d2_num(|s| w(s, x2, eta), x1, step);
    let wyy = d2_num(|s| w(x1, s, eta), x2, step);
    let weta = d1_num(|s| w(x1, x2, s), eta, step);
    let wetaeta = d2_num(|s| w(x1, x2, s), eta, step);
    let wxeta = d1_num(|s| d1_num(|t| w(t, x2, s), x1, step), eta, step);
    let wyeta = d1_num(|s| d1_num(|t| w(x1, t, s), x2, step), eta, step);

    eps2 * (wxx + wyy) - 2.0 * eps2 * eta * (gx * wxeta + gy * wyeta) / gap
        + (1.0 + eps2 * eta * eta * grad2) / (gap * gap) * wetaeta
        + eps2 * eta * (2.0 * grad2 / (gap * gap) - lap_v(x1, x2) / gap) * weta
}
