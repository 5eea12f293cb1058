//! Descent minimization of the discrete energy.
//!
//! [`descend`] is a monotone spectral-gradient method: alternating
//! Barzilai-Borwein step lengths, each trial accepted only under the Armijo
//! condition and halved otherwise, so the recorded energies never increase.
//! [`minimize`] runs it on the free nodes of a [`QField`];
//! [`continuation_ladder`] chains minimizations over decreasing ε.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{flatten, EnergyBreakdown, Lattice};
use crate::error::{Error, Result};
use crate::field::QField;
use crate::material::MaterialParams;
use crate::math;
use crate::par;
use crate::qtensor::QTensor;

/// A smooth function on `R^dim` with an analytic gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the value. A non-finite
    /// value is reported as `Ok` and handled by the caller.
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Stopping measure computed from a gradient.
    fn stationarity(&self, grad: &[f64]) -> f64 {
        grad.iter().fold(0.0, |m, g| m.max(math::abs(*g)))
    }

    /// First trial step length.
    fn initial_step(&self) -> f64 {
        1e-3
    }

    /// Error to raise when the starting point is not finite.
    fn non_finite(&self, _x: &[f64]) -> Error {
        Error::Invalid("objective is not finite at the starting point")
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once the stationarity measure falls to this value.
    pub grad_tol: f64,
    /// Seed for [`perturb_interior`].
    pub seed: u64,
    /// Record every `history_stride`-th energy.
    pub history_stride: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50_000,
            grad_tol: 1e-3,
            seed: 0,
            history_stride: 10,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: self.max_iters as f64,
            });
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grad_tol",
                value: self.grad_tol,
            });
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidParameter {
                name: "armijo",
                value: self.armijo,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentOutcome {
    pub iterations: usize,
    pub value: f64,
    pub stationarity: f64,
    /// `(iteration, value)` pairs, nonincreasing in value.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Minimizes `obj` from `x` in place.
pub fn descend<O: Objective + ?Sized>(
    obj: &O,
    x: &mut [f64],
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<DescentOutcome> {
    cfg.validate()?;
    let dim = obj.dim();
    debug_assert_eq!(x.len(), dim);
    let mut grad = vec![0.0; dim];
    let mut value = obj.evaluate(x, &mut grad);
    if !value.is_finite() {
        return Err(obj.non_finite(x));
    }
    let mut station = obj.stationarity(&grad);
    let stride = cfg.history_stride.max(1);
    let mut history = vec![(0, value)];
    if station <= cfg.grad_tol {
        return Ok(DescentOutcome {
            iterations: 0,
            value,
            stationarity: station,
            history,
            converged: true,
        });
    }

    let alpha0 = obj.initial_step();
    let (alpha_min, alpha_max) = (alpha0 * 1e-12, alpha0 * 1e6);
    let mut alpha = alpha0;
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iters {
        let gg = par::dot(&grad, &grad);
        let mut step = alpha;
        let accepted = loop {
            par::chunks_mut(&mut trial, par::DOT_CHUNK, |start, out| {
                for (i, t) in out.iter_mut().enumerate() {
                    *t = x[start + i] - step * grad[start + i];
                }
            });
            let v = obj.evaluate(&trial, &mut trial_grad);
            if v.is_finite() && v < value && v <= value - cfg.armijo * step * gg {
                break Some(v);
            }
            step *= 0.5;
            if step < alpha_min {
                break None;
            }
        };
        let Some(new_value) = accepted else {
            // No decrease is representable any more.
            break;
        };
        iterations = k;

        // s = -step·g, y = g⁺ - g.
        let sy = -step * (par::dot(&grad, &trial_grad) - gg);
        let ss = step * step * gg;
        let yy = {
            let a = par::dot(&trial_grad, &trial_grad);
            let b = par::dot(&grad, &trial_grad);
            a - 2.0 * b + gg
        };
        x.copy_from_slice(&trial);
        core::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
        station = obj.stationarity(&grad);
        if k % stride == 0 {
            history.push((k, value));
        }
        observer(k, x);
        if station <= cfg.grad_tol {
            converged = true;
            break;
        }
        alpha = if sy > 0.0 {
            if k % 2 == 1 {
                ss / sy
            } else if yy > 0.0 {
                sy / yy
            } else {
                ss / sy
            }
        } else {
            step * 2.0
        };
        alpha = alpha.clamp(alpha_min, alpha_max);
    }
    if history.last().map(|h| h.0) != Some(iterations) {
        history.push((iterations, value));
    }
    Ok(DescentOutcome {
        iterations,
        value,
        stationarity: station,
        history,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub eps: f64,
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    /// Sup over nodes of the gradient in density units (`|g|/h³`).
    pub grad_sup: f64,
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

struct FieldObjective<'a> {
    lattice: Lattice<'a>,
}

impl Objective for FieldObjective<'_> {
    fn dim(&self) -> usize {
        5 * self.lattice.grid.len()
    }

    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (el, bu) = self.lattice.evaluate(x, Some(grad));
        el + bu
    }

    fn stationarity(&self, grad: &[f64]) -> f64 {
        let h = self.lattice.grid.spacing();
        let worst = grad
            .chunks(5)
            .map(|g| QTensor::from_slice(g).norm_sq())
            .fold(0.0, f64::max);
        math::sqrt(worst) / (h * h * h)
    }

    fn initial_step(&self) -> f64 {
        let h = self.lattice.grid.spacing();
        let p = &self.lattice.params;
        let s = p.s_plus();
        let bulk = p.a2() + 2.0 * p.b2() * s + 3.0 * p.c2() * s * s;
        1.0 / (12.0 * h + h * h * h * bulk / (p.eps() * p.eps()))
    }

    fn non_finite(&self, x: &[f64]) -> Error {
        let node = self.lattice.first_non_finite(x).unwrap_or(0);
        Error::NonFinite {
            node,
            ijk: self.lattice.grid.ijk(node),
        }
    }
}

/// Minimizes the whole-domain energy over the free nodes of `field`.
pub fn minimize(field: &mut QField, p: &MaterialParams, cfg: &SolverConfig) -> Result<SolveReport> {
    minimize_observed(field, p, cfg, 0, &mut |_, _| {})
}

/// [`minimize`], handing a snapshot of the field to `observer` every
/// `every` iterations (never when `every == 0`).
pub fn minimize_observed(
    field: &mut QField,
    p: &MaterialParams,
    cfg: &SolverConfig,
    every: usize,
    observer: &mut dyn FnMut(usize, &QField),
) -> Result<SolveReport> {
    let grid = *field.grid();
    let mask = field.dirichlet_mask().to_vec();
    let obj = FieldObjective {
        lattice: Lattice {
            grid,
            dirichlet: &mask,
            params: *p,
        },
    };
    let mut x = flatten(field.values());
    let mut snapshot = |k: usize, xs: &[f64]| {
        if every > 0 && k.is_multiple_of(every) {
            let values = xs.chunks(5).map(QTensor::from_slice).collect();
            if let Ok(f) = QField::from_parts(grid, values, mask.clone()) {
                observer(k, &f);
            }
        }
    };
    let outcome = descend(&obj, &mut x, cfg, &mut snapshot)?;
    for (q, c) in field.values_mut().iter_mut().zip(x.chunks(5)) {
        *q = QTensor::from_slice(c);
    }
    let energy = crate::energy::total_energy(field, p, &crate::energy::Region::Whole)?;
    Ok(SolveReport {
        eps: p.eps(),
        iterations: outcome.iterations,
        energy,
        grad_sup: outcome.stationarity,
        history: outcome.history,
        converged: outcome.converged,
    })
}

/// Failure part-way through a [`continuation_ladder`].
#[derive(Clone, Debug, PartialEq)]
pub struct LadderFailure {
    pub completed: Vec<SolveReport>,
    pub error: Error,
}

/// Minimizes for each parameter set in turn, warm-starting from the
/// previous minimizer. `stages` must have nonincreasing ε; a repeated
/// value re-solves from the previous minimizer.
pub fn continuation_ladder(
    field: &mut QField,
    stages: &[MaterialParams],
    cfg: &SolverConfig,
) -> core::result::Result<Vec<SolveReport>, LadderFailure> {
    continuation_ladder_observed(field, stages, cfg, &mut |_, _| {})
}

/// [`continuation_ladder`] calling `after_stage(stage_index, field)` once
/// each stage has converged or stopped.
pub fn continuation_ladder_observed(
    field: &mut QField,
    stages: &[MaterialParams],
    cfg: &SolverConfig,
    after_stage: &mut dyn FnMut(usize, &QField),
) -> core::result::Result<Vec<SolveReport>, LadderFailure> {
    if stages.windows(2).any(|w| !(w[1].eps() <= w[0].eps())) {
        return Err(LadderFailure {
            completed: Vec::new(),
            error: Error::LadderNotDecreasing,
        });
    }
    let mut reports = Vec::with_capacity(stages.len());
    for (i, p) in stages.iter().enumerate() {
        match minimize(field, p, cfg) {
            Ok(r) => reports.push(r),
            Err(error) => {
                return Err(LadderFailure {
                    completed: reports,
                    error,
                })
            }
        }
        after_stage(i, field);
    }
    Ok(reports)
}

/// Adds uniform noise in `[-amplitude, amplitude]` to every coefficient of
/// the free nodes.
pub fn perturb_interior(field: &mut QField, amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = field.dirichlet_mask().to_vec();
    for (q, fixed) in field.values_mut().iter_mut().zip(mask) {
        if fixed {
            continue;
        }
        for c in q.0.iter_mut() {
            *c += amplitude * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    struct Quadratic {
        diag: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let mut v = 0.0;
            for i in 0..x.len() {
                let t = x[i] - 1.0;
                grad[i] = self.diag[i] * t;
                v += 0.5 * self.diag[i] * t * t;
            }
            v
        }
    }

    #[test]
    fn bb_descent_solves_ill_conditioned_quadratic() {
        let obj = Quadratic {
            diag: (0..50).map(|i| 1.0 + i as f64 * 20.0).collect(),
        };
        let mut x = vec![0.0; 50];
        let cfg = SolverConfig {
            grad_tol: 1e-10,
            ..Default::default()
        };
        let out = descend(&obj, &mut x, &cfg, &mut |_, _| {}).unwrap();
        assert!(out.converged);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert!(out.history.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn constant_field_on_n_converges_without_iterating() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let q = QTensor::uniaxial([0.0, 0.0, 1.0], 1.5).unwrap();
        let mut f = QField::constant(g, q);
        let before = f.clone();
        let r = minimize(&mut f, &MaterialParams::unit(0.2).unwrap(), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(f, before);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = SolverConfig {
            grad_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn non_finite_start_is_a_hard_error() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let mut f = QField::constant(g, QTensor::ZERO);
        let bad = g.index(4, 4, 4);
        f.values_mut()[bad] = QTensor([f64::INFINITY, 0.0, 0.0, 0.0, 0.0]);
        match minimize(&mut f, &MaterialParams::unit(0.2).unwrap(), &SolverConfig::default()) {
            Err(Error::NonFinite { node, .. }) => assert_eq!(node, bad),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ladder_rejects_increasing_eps() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let mut f = QField::constant(g, QTensor::ZERO);
        let p = MaterialParams::unit(0.2).unwrap();
        let q = MaterialParams::unit(0.3).unwrap();
        let err = continuation_ladder(&mut f, &[p, q], &SolverConfig::default()).unwrap_err();
        assert_eq!(err.error, Error::LadderNotDecreasing);
        assert!(err.completed.is_empty());
    }

    #[test]
    fn perturbation_is_seeded_and_spares_boundary() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let base = QField::constant(g, QTensor::ZERO);
        let (mut a, mut b) = (base.clone(), base.clone());
        perturb_interior(&mut a, 0.1, 7);
        perturb_interior(&mut b, 0.1, 7);
        assert_eq!(a, b);
        for m in 0..g.len() {
            if a.is_dirichlet(m) {
                assert_eq!(a.values()[m], QTensor::ZERO);
            } else {
                assert!(a.values()[m].0.iter().all(|c| c.abs() <= 0.1));
            }
        }
    }
}
