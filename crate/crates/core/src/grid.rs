//! Plate and cylinder grids, finite-difference stencils, quadrature and the
//! double-sine transform.
//!
//! Fields on the plate store interior nodes only; the hinged condition pins
//! the boundary trace of a deformation to zero. All stencil operators read
//! interior values exclusively: central differences inside, second-order
//! one-sided formulas at the nodes next to the boundary. That keeps every
//! operator exact on constant grid fields, which the constant-gap oracles
//! rely on.

use ndarray::{Array2, Array3};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::error::{Result, SimError};

/// Uniform grid of interior nodes on the open unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlateGrid {
    /// Interior node count per axis; spacing is `1 / (n + 1)`.
    pub n: usize,
}

impl PlateGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(SimError::InvalidParameter {
                name: "n",
                value: n as f64,
                constraint: "n >= 4",
            });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Coordinate of interior node with storage index `i` (0-based).
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h()
    }
}

/// Plate grid extended vertically over the unit interval in `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CylinderGrid {
    pub plate: PlateGrid,
    /// Vertical interval count; nodes `eta_k = k / m`, `k = 0..=m`.
    pub m: usize,
}

impl CylinderGrid {
    pub fn new(plate: PlateGrid, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(SimError::InvalidParameter {
                name: "m",
                value: m as f64,
                constraint: "m >= 4",
            });
        }
        Ok(Self { plate, m })
    }

    #[inline]
    pub fn h_eta(&self) -> f64 {
        1.0 / self.m as f64
    }

    #[inline]
    pub fn eta(&self, k: usize) -> f64 {
        k as f64 * self.h_eta()
    }
}

/// Nodal deformation on the plate interior. Boundary trace is implicitly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateField {
    pub grid: PlateGrid,
    pub values: Array2<f64>,
}

impl PlateField {
    pub fn zeros(grid: PlateGrid) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n, grid.n)),
        }
    }

    pub fn constant(grid: PlateGrid, c: f64) -> Self {
        Self {
            grid,
            values: Array2::from_elem((grid.n, grid.n), c),
        }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(grid: PlateGrid, mut f: F) -> Self {
        let mut values = Array2::zeros((grid.n, grid.n));
        for i in 0..grid.n {
            for j in 0..grid.n {
                values[[i, j]] = f(grid.coord(i), grid.coord(j));
            }
        }
        Self { grid, values }
    }

    /// Sample of `amp * sin(k pi x1) * sin(l pi x2)`.
    pub fn mode(grid: PlateGrid, k: usize, l: usize, amp: f64) -> Self {
        Self::from_fn(grid, |x, y| {
            amp * (k as f64 * PI * x).sin() * (l as f64 * PI * y).sin()
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails with `NonAdmissible` when the gap `1 + v` closes somewhere.
    pub fn require_admissible(&self) -> Result<()> {
        let min = self.min();
        if min <= -1.0 {
            Err(SimError::NonAdmissible { min })
        } else {
            Ok(())
        }
    }

    /// Extend to the closed grid with zeros on the boundary ring.
    pub fn to_closed(&self) -> Array2<f64> {
        let n = self.grid.n;
        let mut out = Array2::zeros((n + 2, n + 2));
        for i in 0..n {
            for j in 0..n {
                out[[i + 1, j + 1]] = self.values[[i, j]];
            }
        }
        out
    }
}

/// Coefficients in the double-sine basis `sin(k pi x1) sin(l pi x2)`,
/// `1 <= k, l <= n`, unit-amplitude normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: PlateGrid,
    pub coeffs: Array2<f64>,
}

impl SpectralField {
    pub fn zeros(grid: PlateGrid) -> Self {
        Self {
            grid,
            coeffs: Array2::zeros((grid.n, grid.n)),
        }
    }

    /// Discrete L2 norm squared; Parseval-exact match with the nodal
    /// trapezoidal quadrature: `||v||^2 = (1/4) sum c_kl^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        0.25 * self.coeffs.iter().map(|c| c * c).sum::<f64>()
    }
}

// ---------------------------------------------------------------------------
// Cached trigonometric tables
// ---------------------------------------------------------------------------

/// Sine/cosine sampling matrices for one grid size.
pub struct TrigTables {
    /// `sin((k+1) pi x_{i+1})`, interior nodes x rows, modes columns (n x n).
    pub sin_int: Array2<f64>,
    /// Same sines sampled on the closed grid ((n+2) x n).
    pub sin_closed: Array2<f64>,
    /// `cos((k+1) pi x_i)` on the closed grid ((n+2) x n).
    pub cos_closed: Array2<f64>,
}

static TABLES: Lazy<Mutex<HashMap<usize, Arc<TrigTables>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

pub fn trig_tables(n: usize) -> Arc<TrigTables> {
    let mut cache = TABLES.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let h = 1.0 / (n as f64 + 1.0);
            let mut sin_int = Array2::zeros((n, n));
            let mut sin_closed = Array2::zeros((n + 2, n));
            let mut cos_closed = Array2::zeros((n + 2, n));
            for k in 0..n {
                let kf = (k + 1) as f64;
                for i in 0..n + 2 {
                    let x = i as f64 * h;
                    sin_closed[[i, k]] = (kf * PI * x).sin();
                    cos_closed[[i, k]] = (kf * PI * x).cos();
                }
                // exact zeros at the ends of the sine rows
                sin_closed[[0, k]] = 0.0;
                sin_closed[[n + 1, k]] = 0.0;
                for i in 0..n {
                    sin_int[[i, k]] = sin_closed[[i + 1, k]];
                }
            }
            Arc::new(TrigTables {
                sin_int,
                sin_closed,
                cos_closed,
            })
        })
        .clone()
}

/// Forward double-sine transform (nodal -> coefficients).
pub fn to_spectral(v: &PlateField) -> SpectralField {
    let n = v.grid.n;
    let t = trig_tables(n);
    let scale = 2.0 / (n as f64 + 1.0);
    let coeffs = t.sin_int.dot(&v.values).dot(&t.sin_int) * (scale * scale);
    SpectralField {
        grid: v.grid,
        coeffs,
    }
}

/// Inverse double-sine transform (coefficients -> nodal).
pub fn to_nodal(c: &SpectralField) -> PlateField {
    let t = trig_tables(c.grid.n);
    PlateField {
        grid: c.grid,
        values: t.sin_int.dot(&c.coeffs).dot(&t.sin_int),
    }
}

// ---------------------------------------------------------------------------
// Stencil operators
// ---------------------------------------------------------------------------

/// First derivative of an interior line of values; second-order everywhere,
/// one-sided at the two nodes adjacent to the boundary.
#[inline]
fn d1_line(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    debug_assert!(n >= 3);
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
}

/// Second derivative along a line; 3-point central inside, 4-point one-sided
/// at the edge-adjacent nodes (hence the `n >= 4` grid invariant).
#[inline]
fn d2_line(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    debug_assert!(n >= 4);
    let h2 = h * h;
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
}

fn apply_axis0(v: &Array2<f64>, h: f64, line_op: fn(&[f64], f64, &mut [f64])) -> Array2<f64> {
    let (n0, n1) = v.dim();
    let mut out = Array2::zeros((n0, n1));
    let mut col = vec![0.0; n0];
    let mut dcol = vec![0.0; n0];
    for j in 0..n1 {
        for i in 0..n0 {
            col[i] = v[[i, j]];
        }
        line_op(&col, h, &mut dcol);
        for i in 0..n0 {
            out[[i, j]] = dcol[i];
        }
    }
    out
}

fn apply_axis1(v: &Array2<f64>, h: f64, line_op: fn(&[f64], f64, &mut [f64])) -> Array2<f64> {
    let (n0, n1) = v.dim();
    let mut out = Array2::zeros((n0, n1));
    let mut row = vec![0.0; n1];
    let mut drow = vec![0.0; n1];
    for i in 0..n0 {
        for j in 0..n1 {
            row[j] = v[[i, j]];
        }
        line_op(&row, h, &mut drow);
        for j in 0..n1 {
            out[[i, j]] = drow[j];
        }
    }
    out
}

/// Gradient `(d/dx1 v, d/dx2 v)` on the interior grid.
pub fn gradient(v: &PlateField) -> (PlateField, PlateField) {
    let h = v.grid.h();
    (
        PlateField {
            grid: v.grid,
            values: apply_axis0(&v.values, h, d1_line),
        },
        PlateField {
            grid: v.grid,
            values: apply_axis1(&v.values, h, d1_line),
        },
    )
}

/// Axis-wise second derivatives.
pub fn second_x1(v: &PlateField) -> PlateField {
    PlateField {
        grid: v.grid,
        values: apply_axis0(&v.values, v.grid.h(), d2_line),
    }
}

pub fn second_x2(v: &PlateField) -> PlateField {
    PlateField {
        grid: v.grid,
        values: apply_axis1(&v.values, v.grid.h(), d2_line),
    }
}

/// Five-point style Laplacian assembled from the axis second derivatives.
pub fn laplacian(v: &PlateField) -> PlateField {
    let mut out = second_x1(v);
    out.values += &second_x2(v).values;
    out
}

/// Classic 5-point Laplacian reading the implicit zero boundary trace.
/// Valid for fields that genuinely vanish on the boundary; under Navier
/// conditions its image vanishes there too, so the composition
/// `laplacian_dirichlet(laplacian_dirichlet(v))` is a consistent biharmonic
/// stencil on the hinged plate.
pub fn laplacian_dirichlet(v: &PlateField) -> PlateField {
    let n = v.grid.n;
    let ih2 = 1.0 / (v.grid.h() * v.grid.h());
    let mut out = Array2::zeros((n, n));
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            v.values[[i as usize, j as usize]]
        }
    };
    for i in 0..n as isize {
        for j in 0..n as isize {
            out[[i as usize, j as usize]] = (at(i + 1, j)
                + at(i - 1, j)
                + at(i, j + 1)
                + at(i, j - 1)
                - 4.0 * at(i, j))
                * ih2;
        }
    }
    PlateField {
        grid: v.grid,
        values: out,
    }
}

/// Mixed derivative `d^2 v / dx1 dx2` as composition of the axis
/// first-derivative operators (cross stencil away from the boundary).
pub fn mixed_second(v: &PlateField) -> PlateField {
    let h = v.grid.h();
    let dx = apply_axis0(&v.values, h, d1_line);
    PlateField {
        grid: v.grid,
        values: apply_axis1(&dx, h, d1_line),
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Trapezoidal integral over the plate with implicit zero boundary values.
pub fn integrate_plate(v: &PlateField) -> f64 {
    let h = v.grid.h();
    h * h * v.values.iter().sum::<f64>()
}

/// Trapezoidal integral with an explicitly supplied constant boundary value.
pub fn integrate_plate_with_boundary(v: &PlateField, boundary: f64) -> f64 {
    let n = v.grid.n as f64;
    let h = v.grid.h();
    // boundary ring: 4 corners at weight 1/4, 4n edge nodes at weight 1/2
    integrate_plate(v) + boundary * h * h * (2.0 * n + 1.0)
}

/// Trapezoidal integral of a closed-grid integrand ((n+2) x (n+2) values).
pub fn integrate_plate_closed(v: &Array2<f64>) -> f64 {
    let (n0, n1) = v.dim();
    let h = 1.0 / (n0 as f64 - 1.0);
    debug_assert_eq!(n0, n1);
    let mut sum = 0.0;
    for i in 0..n0 {
        let wi = if i == 0 || i == n0 - 1 { 0.5 } else { 1.0 };
        for j in 0..n1 {
            let wj = if j == 0 || j == n1 - 1 { 0.5 } else { 1.0 };
            sum += wi * wj * v[[i, j]];
        }
    }
    sum * h * h
}

/// Trapezoidal integral over the cylinder of a closed-grid integrand
/// ((n+2) x (n+2) x (m+1) values).
pub fn integrate_cylinder_closed(w: &Array3<f64>, grid: &CylinderGrid) -> f64 {
    let n = grid.plate.n;
    let m = grid.m;
    debug_assert_eq!(w.dim(), (n + 2, n + 2, m + 1));
    let h = grid.plate.h();
    let hz = grid.h_eta();
    let mut sum = 0.0;
    for i in 0..n + 2 {
        let wi = if i == 0 || i == n + 1 { 0.5 } else { 1.0 };
        for j in 0..n + 2 {
            let wj = if j == 0 || j == n + 1 { 0.5 } else { 1.0 };
            for k in 0..m + 1 {
                let wk = if k == 0 || k == m { 0.5 } else { 1.0 };
                sum += wi * wj * wk * w[[i, j, k]];
            }
        }
    }
    sum * h * h * hz
}

/// Cylinder integral of an interior-node integrand with implicit zero
/// boundary values (n x n x (m-1)).
pub fn integrate_cylinder_interior(w: &Array3<f64>, grid: &CylinderGrid) -> f64 {
    let h = grid.plate.h();
    let hz = grid.h_eta();
    h * h * hz * w.iter().sum::<f64>()
}

/// Discrete L2 inner product of plate fields (trapezoid, zero boundary).
pub fn inner_l2(a: &PlateField, b: &PlateField) -> f64 {
    let h = a.grid.h();
    h * h
        * a.values
            .iter()
            .zip(b.values.iter())
            .map(|(x, y)| x * y)
            .sum::<f64>()
}

pub fn l2_norm(a: &PlateField) -> f64 {
    inner_l2(a, a).sqrt()
}

// ---------------------------------------------------------------------------
// Sobolev-type proxy norm
// ---------------------------------------------------------------------------

/// Discrete `W^2_q` proxy: the `l_q` compound of the nodal `L_q` norms of
/// `v`, `|grad v|` and the Frobenius norm of the second-derivative matrix.
pub fn w2_proxy_norm(v: &PlateField, q: f64) -> f64 {
    assert!(q >= 1.0, "proxy norm requires q >= 1");
    let h2 = v.grid.h() * v.grid.h();
    let (vx, vy) = gradient(v);
    let vxx = second_x1(v);
    let vyy = second_x2(v);
    let vxy = mixed_second(v);
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for idx in 0..v.values.len() {
        let val = v.values.as_slice().unwrap()[idx];
        let gx = vx.values.as_slice().unwrap()[idx];
        let gy = vy.values.as_slice().unwrap()[idx];
        let dxx = vxx.values.as_slice().unwrap()[idx];
        let dyy = vyy.values.as_slice().unwrap()[idx];
        let dxy = vxy.values.as_slice().unwrap()[idx];
        s0 += val.abs().powf(q);
        s1 += (gx * gx + gy * gy).sqrt().powf(q);
        s2 += (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy).sqrt().powf(q);
    }
    ((s0 + s1 + s2) * h2).powf(1.0 / q)
}

/// Quadratic extrapolation of an interior plate field to the closed grid.
/// Exact on constants and quadratics; used where a wall value of a
/// v-derived quantity is needed without assuming the hinged zero trace.
pub fn extrapolate_closed(values: &Array2<f64>) -> Array2<f64> {
    let n = values.dim().0;
    debug_assert_eq!(values.dim().1, n);
    let mut out = Array2::zeros((n + 2, n + 2));
    for i in 0..n {
        for j in 0..n {
            out[[i + 1, j + 1]] = values[[i, j]];
        }
    }
    let ex = |a: f64, b: f64, c: f64| 3.0 * a - 3.0 * b + c;
    for t in 1..=n {
        out[[t, 0]] = ex(out[[t, 1]], out[[t, 2]], out[[t, 3]]);
        out[[t, n + 1]] = ex(out[[t, n]], out[[t, n - 1]], out[[t, n - 2]]);
        out[[0, t]] = ex(out[[1, t]], out[[2, t]], out[[3, t]]);
        out[[n + 1, t]] = ex(out[[n, t]], out[[n - 1, t]], out[[n - 2, t]]);
    }
    // corners: average of the two edge extrapolations
    for (ci, cj, di, dj) in [
        (0usize, 0usize, 1isize, 1isize),
        (0, n + 1, 1, -1),
        (n + 1, 0, -1, 1),
        (n + 1, n + 1, -1, -1),
    ] {
        let gi = |s: isize| (ci as isize + s * di) as usize;
        let gj = |s: isize| (cj as isize + s * dj) as usize;
        let along_i = ex(out[[gi(1), cj]], out[[gi(2), cj]], out[[gi(3), cj]]);
        let along_j = ex(out[[ci, gj(1)]], out[[ci, gj(2)]], out[[ci, gj(3)]]);
        out[[ci, cj]] = 0.5 * (along_i + along_j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_tiny_n() {
        assert!(PlateGrid::new(3).is_err());
        assert!(PlateGrid::new(4).is_ok());
        let g = PlateGrid::new(9).unwrap();
        assert_relative_eq!(g.h(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn gradient_of_zero_field_is_zero() {
        let g = PlateGrid::new(8).unwrap();
        let (gx, gy) = gradient(&PlateField::zeros(g));
        assert_eq!(gx.values.iter().map(|x| x.abs()).sum::<f64>(), 0.0);
        assert_eq!(gy.values.iter().map(|x| x.abs()).sum::<f64>(), 0.0);
    }

    #[test]
    fn stencils_vanish_on_constants() {
        let g = PlateGrid::new(11).unwrap();
        let v = PlateField::constant(g, -0.5);
        let (gx, gy) = gradient(&v);
        assert!(gx.values.iter().all(|x| x.abs() < 1e-13));
        assert!(gy.values.iter().all(|x| x.abs() < 1e-13));
        assert!(laplacian(&v).values.iter().all(|x| x.abs() < 1e-11));
        assert!(mixed_second(&v).values.iter().all(|x| x.abs() < 1e-11));
    }

    /// Closed-form derivative oracle: the max error of each operator drops by
    /// a factor ~4 when n doubles.
    #[test]
    fn gradient_second_order_on_sine_mode() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = PlateGrid::new(n).unwrap();
            let v = PlateField::mode(g, 1, 1, 1.0);
            let exact_x = PlateField::from_fn(g, |x, y| PI * (PI * x).cos() * (PI * y).sin());
            let exact_y = PlateField::from_fn(g, |x, y| PI * (PI * x).sin() * (PI * y).cos());
            let (gx, gy) = gradient(&v);
            let e = max_abs_diff(&gx.values, &exact_x.values)
                .max(max_abs_diff(&gy.values, &exact_y.values));
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.4..=4.6).contains(&ratio),
            "gradient convergence ratio {ratio}"
        );
    }

    #[test]
    fn gradient_exact_on_low_polynomial() {
        // x(1-x)y(1-y) is cubic per axis: both the central and the one-sided
        // stencils reproduce its gradient exactly
        let g = PlateGrid::new(32).unwrap();
        let v = PlateField::from_fn(g, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let exact_x = PlateField::from_fn(g, |x, y| (1.0 - 2.0 * x) * y * (1.0 - y));
        let exact_y = PlateField::from_fn(g, |x, y| x * (1.0 - x) * (1.0 - 2.0 * y));
        let (gx, gy) = gradient(&v);
        assert!(max_abs_diff(&gx.values, &exact_x.values) < 1e-12);
        assert!(max_abs_diff(&gy.values, &exact_y.values) < 1e-12);
    }

    #[test]
    fn laplacian_eigenmode() {
        // the one-sided edge stencils carry an O(h^3) term with a large
        // constant, so the clean factor-4 regime starts around n ~ 64
        let mut errs = Vec::new();
        let (k, l) = (1, 1);
        let mu = ((k * k + l * l) as f64) * PI * PI;
        for n in [64, 128] {
            let g = PlateGrid::new(n).unwrap();
            let v = PlateField::mode(g, k, l, 1.0);
            let lap = laplacian(&v);
            errs.push(max_abs_diff(&lap.values, &(-mu * &v.values)));
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.4..=4.6).contains(&ratio),
            "laplacian eigen ratio {ratio}, errs {errs:?}"
        );
        assert!(errs[1] < mu, "laplacian error unexpectedly large: {errs:?}");
    }

    #[test]
    fn dirichlet_laplacian_is_exact_modal_multiplier() {
        let g = PlateGrid::new(16).unwrap();
        let h = g.h();
        let (k, l) = (2, 1);
        let v = PlateField::mode(g, k, l, 1.0);
        let lam = |j: usize| (2.0 - 2.0 * (j as f64 * PI * h).cos()) / (h * h);
        let expected = -(lam(k) + lam(l));
        let lap = laplacian_dirichlet(&v);
        for (a, b) in lap.values.iter().zip(v.values.iter()) {
            assert_relative_eq!(*a, expected * b, epsilon = 1e-9);
        }
    }

    #[test]
    fn mixed_second_of_bilinear() {
        let g = PlateGrid::new(16).unwrap();
        let v = PlateField::from_fn(g, |x, y| x * y);
        let m = mixed_second(&v);
        // exact 1 away from boundary-affected stencils; one-sided formulas
        // are exact on bilinear too
        for i in 0..g.n {
            for j in 0..g.n {
                assert_relative_eq!(m.values[[i, j]], 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn transform_single_mode_is_basis_vector() {
        let g = PlateGrid::new(12).unwrap();
        let v = PlateField::mode(g, 1, 1, 1.0);
        let c = to_spectral(&v);
        assert_relative_eq!(c.coeffs[[0, 0]], 1.0, epsilon = 1e-12);
        let off: f64 = c
            .coeffs
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != 0)
            .map(|(_, x)| x.abs())
            .sum();
        assert!(off < 1e-11, "off-mode energy {off}");
    }

    #[test]
    fn transform_zero_field() {
        let g = PlateGrid::new(8).unwrap();
        let c = to_spectral(&PlateField::zeros(g));
        assert!(c.coeffs.iter().all(|x| x.abs() == 0.0));
    }

    proptest! {
        #[test]
        fn transform_round_trip(seed in 0u64..1000) {
            let g = PlateGrid::new(10).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = PlateField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let back = to_nodal(&to_spectral(&v));
            let scale = v.values.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-30);
            prop_assert!(max_abs_diff(&v.values, &back.values) / scale < 1e-12);
        }

        #[test]
        fn stencils_are_linear(seed in 0u64..200, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = PlateGrid::new(9).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = PlateField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let w = PlateField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let combo = PlateField { grid: g, values: a * &v.values + b * &w.values };
            for op in [laplacian, mixed_second, second_x1] {
                let lhs = op(&combo);
                let rhs = a * &op(&v).values + b * &op(&w).values;
                let scale = rhs.iter().map(|x| x.abs()).fold(1.0, f64::max);
                prop_assert!(max_abs_diff(&lhs.values, &rhs) / scale < 1e-12);
            }
        }
    }

    #[test]
    fn integrate_constant_fields() {
        let g = PlateGrid::new(20).unwrap();
        let one = PlateField::constant(g, 1.0);
        // implicit zero boundary leaves an O(h) rim deficit
        let approx = integrate_plate(&one);
        assert!(approx < 1.0 && approx > 1.0 - 2.5 * g.h());
        // supplying boundary value 1 recovers the exact integral
        assert_relative_eq!(integrate_plate_with_boundary(&one, 1.0), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn integrate_sine_mode_closed_form() {
        // int sin(pi x) sin(pi y) = 4 / pi^2
        let exact = 4.0 / (PI * PI);
        for n in [24, 48] {
            let g = PlateGrid::new(n).unwrap();
            let v = PlateField::mode(g, 1, 1, 1.0);
            let err = (integrate_plate(&v) - exact).abs();
            assert!(err < 2.0 * g.h() * g.h(), "quadrature err {err} at n={n}");
        }
    }

    #[test]
    fn integrate_cylinder_unit() {
        let g = CylinderGrid::new(PlateGrid::new(8).unwrap(), 6).unwrap();
        let w = Array3::from_elem((10, 10, 7), 1.0);
        assert_relative_eq!(integrate_cylinder_closed(&w, &g), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = PlateGrid::new(14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = PlateField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
        let c = to_spectral(&v);
        assert_relative_eq!(c.l2_norm_sq(), inner_l2(&v, &v), max_relative = 1e-12);
    }

    #[test]
    fn extrapolation_exact_on_quadratics() {
        let g = PlateGrid::new(10).unwrap();
        let v = PlateField::from_fn(g, |x, y| 1.0 + x + 0.5 * y + x * x - 0.3 * x * y);
        let ext = extrapolate_closed(&v.values);
        let h = g.h();
        for t in 0..g.n + 2 {
            let x = t as f64 * h;
            let exact = 1.0 + x + x * x; // y = 0 wall
            assert_relative_eq!(ext[[t, 0]], exact, epsilon = 1e-10);
        }
    }

    #[test]
    fn proxy_norm_of_zero_is_zero() {
        let g = PlateGrid::new(8).unwrap();
        assert_eq!(w2_proxy_norm(&PlateField::zeros(g), 3.0), 0.0);
    }
}
