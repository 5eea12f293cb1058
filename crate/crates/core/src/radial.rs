//! Radial hedgehog profiles `Q(x) = h(|x|) (x̂⊗x̂ - Id/3)`.
//!
//! On this ansatz the energy reduces to
//! `4π ∫ [h'²/3 + 2h²/r² + f(h)/ε²] r² dr`, with `f(h)` the bulk potential on
//! uniaxial tensors, whose Euler-Lagrange equation is
//! `h'' + 2h'/r - 6h/r² = ε⁻² (-a²h - b²h²/3 + 2c²h³/3)`.
//! The profile is the minimizer of a finite-volume version of that energy on
//! a mesh graded towards the origin, with `h(0) = 0` and `h(R) = s₊`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{GridSpec, QField};
use crate::linalg::{norm, Vec3};
use crate::material::MaterialParams;
use crate::math;
use crate::qtensor::QTensor;
use crate::solver::Objective;

/// Largest accepted sup-norm of the scaled residual.
pub const RESIDUAL_TOL: f64 = 1e-10;

const MAX_NEWTON: usize = 200;

/// Mesh and quadrature weights of the discrete radial energy.
#[derive(Clone, Debug, PartialEq)]
struct Mesh {
    r: Vec<f64>,
    /// Per cell: `Δ_i` and `m_i = (r_i² + r_i r_{i+1} + r_{i+1}²)/3`.
    len: Vec<f64>,
    m: Vec<f64>,
    /// Per node: dual length and dual volume `∫ r² dr`.
    dual: Vec<f64>,
    vol: Vec<f64>,
}

impl Mesh {
    fn graded(r_max: f64, n_nodes: usize, eps: f64) -> Self {
        let kappa = math::ln(r_max / eps).max(1e-3);
        let sk = math::sinh(kappa);
        let last = (n_nodes - 1) as f64;
        let mut r: Vec<f64> = (0..n_nodes)
            .map(|i| r_max * math::sinh(kappa * i as f64 / last) / sk)
            .collect();
        r[0] = 0.0;
        r[n_nodes - 1] = r_max;
        Self::from_nodes(r)
    }

    fn from_nodes(r: Vec<f64>) -> Self {
        let n = r.len();
        let len: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = r
            .windows(2)
            .map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
            .collect();
        let mut dual = vec![0.0; n];
        let mut vol = vec![0.0; n];
        for j in 0..n {
            let lo = if j == 0 { r[0] } else { 0.5 * (r[j - 1] + r[j]) };
            let hi = if j == n - 1 { r[j] } else { 0.5 * (r[j] + r[j + 1]) };
            dual[j] = hi - lo;
            vol[j] = (hi * hi * hi - lo * lo * lo) / 3.0;
        }
        Mesh { r, len, m, dual, vol }
    }

    fn nodes(&self) -> usize {
        self.r.len()
    }

    /// Energy divided by 4π.
    fn energy(&self, h: &[f64], p: &MaterialParams) -> f64 {
        let inv_eps2 = 1.0 / (p.eps() * p.eps());
        let mut e = 0.0;
        for i in 0..self.len.len() {
            let d = h[i + 1] - h[i];
            e += d * d / self.len[i] * self.m[i] / 3.0;
        }
        for j in 0..self.nodes() {
            e += 2.0 * h[j] * h[j] * self.dual[j] + p.bulk_energy_uniaxial(h[j]) * self.vol[j] * inv_eps2;
        }
        e
    }

    /// `∂E/∂h_j / 4π` at interior node `j`.
    fn gradient_at(&self, h: &[f64], p: &MaterialParams, j: usize) -> f64 {
        let inv_eps2 = 1.0 / (p.eps() * p.eps());
        let left = (h[j] - h[j - 1]) * self.m[j - 1] / self.len[j - 1];
        let right = (h[j + 1] - h[j]) * self.m[j] / self.len[j];
        2.0 / 3.0 * (left - right)
            + 4.0 * h[j] * self.dual[j]
            + p.bulk_derivative_uniaxial(h[j]) * self.vol[j] * inv_eps2
    }

    /// `ε² ∂E/∂h_j / (2/3 ∫ r² dr)`: the ODE residual in units of `h`.
    fn scaled_residual(&self, h: &[f64], p: &MaterialParams, j: usize) -> f64 {
        p.eps() * p.eps() * self.gradient_at(h, p, j) / (2.0 / 3.0 * self.vol[j])
    }

    fn residual_sup(&self, h: &[f64], p: &MaterialParams) -> f64 {
        (1..self.nodes() - 1)
            .map(|j| math::abs(self.scaled_residual(h, p, j)))
            .fold(0.0, f64::max)
    }

    /// Hessian diagonal at interior node `j` and the coupling to `j + 1`.
    fn hessian_at(&self, h: &[f64], p: &MaterialParams, j: usize) -> (f64, f64) {
        let inv_eps2 = 1.0 / (p.eps() * p.eps());
        let diag = 2.0 / 3.0 * (self.m[j - 1] / self.len[j - 1] + self.m[j] / self.len[j])
            + 4.0 * self.dual[j]
            + p.bulk_curvature_uniaxial(h[j]) * self.vol[j] * inv_eps2;
        (diag, -2.0 / 3.0 * self.m[j] / self.len[j])
    }
}

/// Solves `a_i x_{i-1} + b_i x_i + a_{i+1} x_{i+1} = d_i` for a symmetric
/// tridiagonal matrix with diagonal `b` and off-diagonal `a`
/// (`a[i]` couples `i` and `i + 1`).
fn solve_tridiagonal(b: &[f64], a: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut piv = b[0];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    c[0] = if n > 1 { a[0] / piv } else { 0.0 };
    x[0] = d[0] / piv;
    for i in 1..n {
        piv = b[i] - a[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = a[i] / piv;
        }
        x[i] = (d[i] - a[i - 1] * x[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

/// A solved (or prescribed) radial profile.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RadialProfile {
    r: Vec<f64>,
    h: Vec<f64>,
    params: MaterialParams,
    residual: f64,
    iterations: usize,
}

/// Solves for the minimizing profile with `h(0) = 0`, `h(r_max) = s₊`.
pub fn solve_profile(p: &MaterialParams, r_max: f64, n_nodes: usize) -> Result<RadialProfile> {
    solve_profile_to(p, r_max, n_nodes, p.s_plus())
}

/// [`solve_profile`] with outer value `outer` in place of `s₊`.
pub fn solve_profile_to(p: &MaterialParams, r_max: f64, n_nodes: usize, outer: f64) -> Result<RadialProfile> {
    if !(r_max >= 20.0 * p.eps()) || !r_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r_max",
            value: r_max,
        });
    }
    if n_nodes < 8 {
        return Err(Error::InvalidParameter {
            name: "n_nodes",
            value: n_nodes as f64,
        });
    }
    if !outer.is_finite() {
        return Err(Error::InvalidParameter {
            name: "outer",
            value: outer,
        });
    }
    let mesh = Mesh::graded(r_max, n_nodes, p.eps());
    let scale = outer / math::tanh(r_max / p.eps());
    let mut h: Vec<f64> = mesh.r.iter().map(|&r| scale * math::tanh(r / p.eps())).collect();
    h[0] = 0.0;
    h[n_nodes - 1] = outer;

    let inner = n_nodes - 2;
    let mut res = mesh.residual_sup(&h, p);
    let mut iterations = 0;
    let mut diag = vec![0.0; inner];
    let mut off = vec![0.0; inner.saturating_sub(1)];
    let mut rhs = vec![0.0; inner];
    let mut trial = h.clone();
    while res > RESIDUAL_TOL {
        if iterations == MAX_NEWTON {
            return Err(Error::NewtonDiverged {
                residual: res,
                iterations,
            });
        }
        iterations += 1;
        for j in 1..=inner {
            let (d, o) = mesh.hessian_at(&h, p, j);
            diag[j - 1] = d;
            if j < inner {
                off[j - 1] = o;
            }
            rhs[j - 1] = -mesh.gradient_at(&h, p, j);
        }
        let step = solve_tridiagonal(&diag, &off, &rhs).ok_or(Error::NewtonDiverged {
            residual: res,
            iterations,
        })?;
        let mut t = 1.0;
        let accepted = loop {
            for j in 1..=inner {
                trial[j] = h[j] + t * step[j - 1];
            }
            let r = mesh.residual_sup(&trial, p);
            if r.is_finite() && r < res {
                break Some(r);
            }
            t *= 0.5;
            if t < 1e-10 {
                break None;
            }
        };
        let Some(r) = accepted else {
            return Err(Error::NewtonDiverged {
                residual: res,
                iterations,
            });
        };
        h.copy_from_slice(&trial);
        res = r;
    }
    Ok(RadialProfile {
        r: mesh.r,
        h,
        params: *p,
        residual: res,
        iterations,
    })
}

impl RadialProfile {
    /// A prescribed profile on nodes `0 = r_0 < r_1 < … `.
    pub fn from_values(r: Vec<f64>, h: Vec<f64>, params: MaterialParams) -> Result<Self> {
        if r.len() < 2 || r.len() != h.len() {
            return Err(Error::Invalid("profile needs matching r and h with at least two nodes"));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("profile nodes must start at 0 and increase"));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("profile values must be finite"));
        }
        let mesh = Mesh::from_nodes(r.clone());
        let residual = mesh.residual_sup(&h, &params);
        Ok(RadialProfile {
            r,
            h,
            params,
            residual,
            iterations: 0,
        })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Sup-norm of the scaled ODE residual at the interior nodes.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn newton_iterations(&self) -> usize {
        self.iterations
    }

    /// Linear interpolation of `h`, held constant beyond `r_max`.
    pub fn value_at(&self, r: f64) -> f64 {
        let r = math::abs(r);
        let n = self.r.len();
        if r >= self.r[n - 1] {
            return self.h[n - 1];
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let t = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.h[i] + t * (self.h[i + 1] - self.h[i])
    }

    /// Smallest radius where `h` reaches `level`, interpolated linearly.
    pub fn crossing_radius(&self, level: f64) -> Option<f64> {
        let above = |v: f64| v >= level;
        if above(self.h[0]) {
            return Some(0.0);
        }
        self.h.windows(2).enumerate().find(|(_, w)| above(w[1])).map(|(i, w)| {
            let t = (level - w[0]) / (w[1] - w[0]);
            self.r[i] + t * (self.r[i + 1] - self.r[i])
        })
    }

    /// `h(|x|) (x̂⊗x̂ - Id/3)`, zero at the origin.
    pub fn tensor_at(&self, x: Vec3) -> QTensor {
        QTensor::uniaxial_normalized(x, self.value_at(norm(x)))
    }

    /// Diameter of `{dist(Q, N) ≥ delta}` for the lifted profile, assuming
    /// `0 ≤ h ≤ s₊` so that `dist = (s₊ - h)·√(2/3)`.
    pub fn predicted_core_diameter(&self, delta: f64) -> Option<f64> {
        let level = self.params.s_plus() - delta * math::sqrt(1.5);
        self.crossing_radius(level).map(|r| 2.0 * r)
    }

    /// Discrete energy of the profile on the ball of radius `r_max`.
    pub fn energy(&self) -> f64 {
        4.0 * math::PI * Mesh::from_nodes(self.r.clone()).energy(&self.h, &self.params)
    }
}

/// Samples the profile on a grid centred at the origin.
pub fn lift_profile(profile: &RadialProfile, grid: GridSpec) -> Result<QField> {
    if grid.center().iter().any(|c| math::abs(*c) > 1e-12) {
        return Err(Error::GridNotCentered);
    }
    let reach = grid.max_node_distance([0.0; 3]);
    if reach > profile.r_max() * (1.0 + 1e-12) {
        return Err(Error::ProfileTooShort {
            grid_radius: reach,
            r_max: profile.r_max(),
        });
    }
    Ok(QField::sample(grid, |x| profile.tensor_at(x)))
}

/// The discrete radial energy over the interior values, in Jacobi-scaled
/// coordinates `x_j = h_j √D_j`, as an [`Objective`] for the descent solver.
#[derive(Clone, Debug)]
pub struct RadialEnergy {
    mesh: Mesh,
    params: MaterialParams,
    outer: f64,
    scale: Vec<f64>,
}

impl RadialEnergy {
    pub fn new(p: &MaterialParams, r_max: f64, n_nodes: usize) -> Result<Self> {
        if !(r_max > 0.0) || n_nodes < 8 {
            return Err(Error::Invalid("radial energy needs r_max > 0 and at least 8 nodes"));
        }
        let mesh = Mesh::graded(r_max, n_nodes, p.eps());
        let s = p.s_plus();
        let flat = vec![s; n_nodes];
        let scale = (1..n_nodes - 1)
            .map(|j| math::sqrt(mesh.hessian_at(&flat, p, j).0))
            .collect();
        Ok(RadialEnergy {
            mesh,
            params: *p,
            outer: s,
            scale,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.mesh.r
    }

    /// Scaled coordinates of a full nodal vector (end values ignored).
    pub fn to_coords(&self, h: &[f64]) -> Vec<f64> {
        h[1..h.len() - 1].iter().zip(&self.scale).map(|(v, s)| v * s).collect()
    }

    /// Full nodal vector including `h(0) = 0` and `h(r_max) = s₊`.
    pub fn to_values(&self, x: &[f64]) -> Vec<f64> {
        let mut h = Vec::with_capacity(x.len() + 2);
        h.push(0.0);
        h.extend(x.iter().zip(&self.scale).map(|(v, s)| v / s));
        h.push(self.outer);
        h
    }

    /// Initial guess `s₊ tanh(r/ε)/tanh(r_max/ε)` in scaled coordinates.
    pub fn initial_coords(&self) -> Vec<f64> {
        let eps = self.params.eps();
        let r_max = self.mesh.r[self.mesh.nodes() - 1];
        let k = self.outer / math::tanh(r_max / eps);
        let h: Vec<f64> = self.mesh.r.iter().map(|&r| k * math::tanh(r / eps)).collect();
        self.to_coords(&h)
    }
}

impl Objective for RadialEnergy {
    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let h = self.to_values(x);
        for (j, g) in grad.iter_mut().enumerate() {
            *g = self.mesh.gradient_at(&h, &self.params, j + 1) / self.scale[j];
        }
        self.mesh.energy(&h, &self.params)
    }

    /// Sup-norm of the scaled ODE residual.
    fn stationarity(&self, grad: &[f64]) -> f64 {
        let eps2 = self.params.eps() * self.params.eps();
        grad.iter()
            .enumerate()
            .map(|(j, g)| math::abs(eps2 * g * self.scale[j] / (2.0 / 3.0 * self.mesh.vol[j + 1])))
            .fold(0.0, f64::max)
    }

    fn initial_step(&self) -> f64 {
        0.5
    }
}
