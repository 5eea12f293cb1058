//! Discrete Landau-de Gennes energy on the lattice.
//!
//! The elastic term sums squared forward differences over the three outgoing
//! edges of every node, `½ h |Q_{m+e} - Q_m|²` (that is `½|∇Q|² h³`), and the
//! bulk term sums `h³ f_b(Q_m)/ε²`. [`discrete_gradient`] is the exact
//! coefficient-wise differential of that sum:
//! `h³ (-Δ_h Q + ε⁻² ∂f_b)` on free nodes, zero on Dirichlet nodes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{GridSpec, QField};
use crate::linalg::{distance, norm, scale, sub, add, Vec3};
use crate::material::MaterialParams;
use crate::par;
use crate::qtensor::QTensor;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBreakdown {
    /// `∫ ½|∇Q|²`.
    pub elastic: f64,
    /// `∫ f_b(Q)/ε²`.
    pub bulk: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(elastic: f64, bulk: f64) -> Self {
        EnergyBreakdown {
            elastic,
            bulk,
            total: elastic + bulk,
        }
    }
}

/// Integration region; membership is by node centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Whole,
    Ball {
        center: Vec3,
        radius: f64,
        /// Drop the nodes of the lattice cell containing `center` (those
        /// closer than one spacing) together with every edge touching them.
        skip_center_cell: bool,
    },
}

impl Region {
    pub fn ball(center: Vec3, radius: f64) -> Self {
        Region::Ball {
            center,
            radius,
            skip_center_cell: false,
        }
    }
}

/// Energy kernel on a flat coefficient vector (5 per node).
pub(crate) struct Lattice<'a> {
    pub grid: GridSpec,
    pub dirichlet: &'a [bool],
    pub params: MaterialParams,
}

impl Lattice<'_> {
    fn slab(&self) -> usize {
        self.grid.n_cells() * self.grid.n_cells()
    }

    /// Returns `(elastic, bulk)` and, when asked, writes the gradient.
    pub fn evaluate(&self, x: &[f64], grad: Option<&mut [f64]>) -> (f64, f64) {
        let g = self.grid;
        let n = g.n_cells();
        let h = g.spacing();
        let h3 = h * h * h;
        let inv_eps2 = 1.0 / (self.params.eps() * self.params.eps());
        let strides = [n * n, n, 1];
        let at = |m: usize| QTensor::from_slice(&x[5 * m..5 * m + 5]);

        let node_energy = |m: usize, q: &QTensor| -> (f64, f64) {
            let ijk = g.ijk(m);
            let mut el = 0.0;
            for a in 0..3 {
                if ijk[a] + 1 < n {
                    el += (at(m + strides[a]) - *q).norm_sq();
                }
            }
            (0.5 * h * el, h3 * inv_eps2 * self.params.bulk_energy(q))
        };

        let partials: Vec<(f64, f64)> = match grad {
            Some(grad) => par::map_chunks_mut(grad, 5 * self.slab(), |start, out| {
                let first = start / 5;
                let (mut el, mut bu) = (0.0, 0.0);
                for (local, gslot) in out.chunks_mut(5).enumerate() {
                    let m = first + local;
                    let q = at(m);
                    let (e, b) = node_energy(m, &q);
                    el += e;
                    bu += b;
                    if self.dirichlet[m] {
                        gslot.fill(0.0);
                        continue;
                    }
                    let ijk = g.ijk(m);
                    let mut lap = QTensor::ZERO;
                    for a in 0..3 {
                        if ijk[a] + 1 < n {
                            lap += q - at(m + strides[a]);
                        }
                        if ijk[a] > 0 {
                            lap += q - at(m - strides[a]);
                        }
                    }
                    let gq = lap * h + self.params.bulk_gradient(&q) * (h3 * inv_eps2);
                    gslot.copy_from_slice(&gq.0);
                }
                (el, bu)
            }),
            None => par::map_chunks(g.len(), self.slab(), |range| {
                let (mut el, mut bu) = (0.0, 0.0);
                for m in range {
                    let (e, b) = node_energy(m, &at(m));
                    el += e;
                    bu += b;
                }
                (el, bu)
            }),
        };
        let el: Vec<f64> = partials.iter().map(|p| p.0).collect();
        let bu: Vec<f64> = partials.iter().map(|p| p.1).collect();
        (par::pairwise_sum(&el), par::pairwise_sum(&bu))
    }

    /// First node whose value or energy contribution is not finite.
    pub fn first_non_finite(&self, x: &[f64]) -> Option<usize> {
        let n = self.grid.n_cells();
        let strides = [n * n, n, 1];
        let at = |m: usize| QTensor::from_slice(&x[5 * m..5 * m + 5]);
        let bad_value = (0..self.grid.len()).find(|&m| {
            let q = at(m);
            !q.0.iter().all(|c| c.is_finite()) || !self.params.bulk_energy(&q).is_finite()
        });
        bad_value.or_else(|| {
            (0..self.grid.len()).find(|&m| {
                let ijk = self.grid.ijk(m);
                (0..3).any(|a| {
                    ijk[a] + 1 < n && !(at(m + strides[a]) - at(m)).norm_sq().is_finite()
                })
            })
        })
    }
}

pub(crate) fn flatten(values: &[QTensor]) -> Vec<f64> {
    values.iter().flat_map(|q| q.0).collect()
}

fn non_finite(grid: &GridSpec, node: usize) -> Error {
    Error::NonFinite {
        node,
        ijk: grid.ijk(node),
    }
}

/// Energy of `field` over `region`.
pub fn total_energy(field: &QField, p: &MaterialParams, region: &Region) -> Result<EnergyBreakdown> {
    let g = *field.grid();
    let h = g.spacing();
    match *region {
        Region::Whole => {
            let lattice = Lattice {
                grid: g,
                dirichlet: field.dirichlet_mask(),
                params: *p,
            };
            let x = flatten(field.values());
            let (el, bu) = lattice.evaluate(&x, None);
            if !(el + bu).is_finite() {
                let node = lattice.first_non_finite(&x).unwrap_or(0);
                return Err(non_finite(&g, node));
            }
            Ok(EnergyBreakdown::new(el, bu))
        }
        Region::Ball {
            center,
            radius,
            skip_center_cell,
        } => {
            if !(radius > h) {
                return Err(Error::DegenerateRegion { radius, spacing: h });
            }
            let n = g.n_cells();
            let strides = [n * n, n, 1];
            let h3 = h * h * h;
            let inv_eps2 = 1.0 / (p.eps() * p.eps());
            let values = field.values();
            let skipped = |m: usize| skip_center_cell && distance(g.position(m), center) < h;
            let partials = par::map_chunks(g.len(), n * n, |range| {
                let (mut el, mut bu) = (0.0, 0.0);
                for m in range {
                    if distance(g.position(m), center) > radius || skipped(m) {
                        continue;
                    }
                    let q = values[m];
                    let ijk = g.ijk(m);
                    for a in 0..3 {
                        if ijk[a] + 1 < n && !skipped(m + strides[a]) {
                            el += 0.5 * h * (values[m + strides[a]] - q).norm_sq();
                        }
                    }
                    bu += h3 * inv_eps2 * p.bulk_energy(&q);
                }
                (el, bu)
            });
            let el: Vec<f64> = partials.iter().map(|p| p.0).collect();
            let bu: Vec<f64> = partials.iter().map(|p| p.1).collect();
            let out = EnergyBreakdown::new(par::pairwise_sum(&el), par::pairwise_sum(&bu));
            if !out.total.is_finite() {
                let x = flatten(values);
                let lattice = Lattice {
                    grid: g,
                    dirichlet: field.dirichlet_mask(),
                    params: *p,
                };
                return Err(non_finite(&g, lattice.first_non_finite(&x).unwrap_or(0)));
            }
            Ok(out)
        }
    }
}

/// Exact gradient of the whole-domain [`total_energy`] per node.
pub fn discrete_gradient(field: &QField, p: &MaterialParams) -> Vec<QTensor> {
    let lattice = Lattice {
        grid: *field.grid(),
        dirichlet: field.dirichlet_mask(),
        params: *p,
    };
    let x = flatten(field.values());
    let mut grad = vec![0.0; x.len()];
    lattice.evaluate(&x, Some(&mut grad));
    grad.chunks(5).map(QTensor::from_slice).collect()
}

/// Per-node `e_ε = ½|∇Q|² + f_b/ε²`; centred differences inside, one-sided
/// on the outer layer.
pub fn energy_density(field: &QField, p: &MaterialParams) -> Vec<f64> {
    let g = *field.grid();
    let n = g.n_cells();
    let h = g.spacing();
    let strides = [n * n, n, 1];
    let inv_eps2 = 1.0 / (p.eps() * p.eps());
    let v = field.values();
    let mut out = vec![0.0; g.len()];
    par::chunks_mut(&mut out, n * n, |start, chunk| {
        for (local, slot) in chunk.iter_mut().enumerate() {
            let m = start + local;
            let ijk = g.ijk(m);
            let mut grad_sq = 0.0;
            for a in 0..3 {
                let d = if ijk[a] == 0 {
                    (v[m + strides[a]] - v[m]) * (1.0 / h)
                } else if ijk[a] == n - 1 {
                    (v[m] - v[m - strides[a]]) * (1.0 / h)
                } else {
                    (v[m + strides[a]] - v[m - strides[a]]) * (0.5 / h)
                };
                grad_sq += d.norm_sq();
            }
            *slot = 0.5 * grad_sq + inv_eps2 * p.bulk_energy(&v[m]);
        }
    });
    out
}

/// `(1/R) ∫_{B_R} e_ε` about the grid centre.
pub fn ball_ratio(field: &QField, p: &MaterialParams, radius: f64, skip_center_cell: bool) -> Result<f64> {
    let g = field.grid();
    let h = g.spacing();
    if !(radius > h && radius <= g.half_width()) {
        return Err(Error::RadiusOutOfRange {
            radius,
            min: h,
            max: g.half_width(),
        });
    }
    let region = Region::Ball {
        center: g.center(),
        radius,
        skip_center_cell,
    };
    Ok(total_energy(field, p, &region)?.total / radius)
}

/// `Σ_{R ≤ |x-c| ≤ 2R} |∂_r Q|² / |x-c| · h³`, with `∂_r Q` the centred
/// difference of interpolated values at `x ± h r̂`.
pub fn radial_decay_integral(field: &QField, center: Vec3, radius: f64) -> Result<f64> {
    let g = *field.grid();
    let h = g.spacing();
    if !(radius >= 3.0 * h) {
        return Err(Error::AnnulusTooThin {
            inner: radius,
            outer: 2.0 * radius,
            min_width: 3.0 * h,
        });
    }
    let reach = 2.0 * radius + h;
    if g.hull_clearance(center) < reach {
        return Err(Error::RadiusOutOfRange {
            radius,
            min: 3.0 * h,
            max: 0.5 * (g.hull_clearance(center) - h),
        });
    }
    let h3 = h * h * h;
    let n = g.n_cells();
    let total = par::sum(g.len(), n * n, |m| {
        let x = g.position(m);
        let d = sub(x, center);
        let r = norm(d);
        if r < radius || r > 2.0 * radius {
            return 0.0;
        }
        let step = scale(d, h / r);
        let fwd = field.interpolate_unchecked(add(x, step));
        let bwd = field.interpolate_unchecked(sub(x, step));
        let dr = (fwd - bwd) * (0.5 / h);
        dr.norm_sq() / r * h3
    });
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::hedgehog_field;

    fn unit(eps: f64) -> MaterialParams {
        MaterialParams::unit(eps).unwrap()
    }

    #[test]
    fn constant_field_on_n_has_zero_energy_and_gradient() {
        let g = GridSpec::centered(1.0, 10).unwrap();
        let q = QTensor::uniaxial([0.0, 0.6, 0.8], 1.5).unwrap();
        let f = QField::constant(g, q);
        let p = unit(0.3);
        let e = total_energy(&f, &p, &Region::Whole).unwrap();
        assert!(e.total.abs() < 1e-10);
        assert!(discrete_gradient(&f, &p).iter().all(|g| g.norm() < 1e-12));
        assert!(energy_density(&f, &p).iter().all(|d| d.abs() < 1e-10));
        assert!(ball_ratio(&f, &p, 0.5, false).unwrap().abs() < 1e-10);
    }

    #[test]
    fn zero_field_on_unit_cube() {
        // Cube of side 1: half-width 0.5.
        let g = GridSpec::centered(0.5, 8).unwrap();
        let f = QField::constant(g, QTensor::ZERO);
        let e = total_energy(&f, &unit(0.5), &Region::Whole).unwrap();
        assert!((e.total - 1.75).abs() < 1e-12, "{}", e.total);
        assert_eq!(e.elastic, 0.0);
    }

    #[test]
    fn constant_off_manifold_gradient_is_pure_bulk() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let q = QTensor([0.3, -0.1, 0.2, 0.0, 0.4]);
        let f = QField::constant(g, q);
        let p = unit(0.2);
        let h = g.spacing();
        let expect = p.bulk_gradient(&q) * (h * h * h / (0.2 * 0.2));
        for (m, gq) in discrete_gradient(&f, &p).iter().enumerate() {
            if f.is_dirichlet(m) {
                assert_eq!(*gq, QTensor::ZERO);
            } else {
                assert!((*gq - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_regions_are_rejected() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let f = QField::constant(g, QTensor::ZERO);
        let p = unit(0.2);
        assert!(matches!(
            total_energy(&f, &p, &Region::ball([0.0; 3], 0.2)),
            Err(Error::DegenerateRegion { .. })
        ));
        assert!(ball_ratio(&f, &p, 1.5, false).is_err());
        assert!(radial_decay_integral(&f, [0.0; 3], 0.2).is_err());
    }

    #[test]
    fn hedgehog_density_away_from_core() {
        let g = GridSpec::centered(1.0, 48).unwrap();
        let f = QField::sample(g, |x| hedgehog_field(x, 1.5));
        let p = unit(0.1);
        let h = g.spacing();
        let dens = energy_density(&f, &p);
        for m in 0..g.len() {
            let r = norm(g.position(m));
            // Centred differences carry a relative error of about 2(h/r)².
            if r > 7.0 * h && !g.is_outer(m) {
                let expect = 2.0 * 1.5 * 1.5 / (r * r);
                assert!((dens[m] - expect).abs() / expect < 0.05, "r={r}");
            }
        }
    }

    #[test]
    fn constant_field_has_no_radial_derivative() {
        let g = GridSpec::centered(1.0, 32).unwrap();
        let f = QField::constant(g, QTensor([0.1, 0.2, 0.3, 0.4, 0.5]));
        assert_eq!(radial_decay_integral(&f, [0.0; 3], 0.2).unwrap(), 0.0);
    }

    #[test]
    fn nonfinite_energy_names_node() {
        let g = GridSpec::centered(1.0, 8).unwrap();
        let mut f = QField::constant(g, QTensor::ZERO);
        let bad = g.index(3, 4, 5);
        f.values_mut()[bad] = QTensor([f64::NAN, 0.0, 0.0, 0.0, 0.0]);
        match total_energy(&f, &unit(0.1), &Region::Whole) {
            Err(Error::NonFinite { ijk, .. }) => assert_eq!(ijk, [3, 4, 5]),
            other => panic!("{other:?}"),
        }
    }
}
