//! Q-tensor fields on cell-centred cubic lattices.
//!
//! Node `(i, j, k)` of a grid with `n` cells per axis sits at
//! `center + h (idx + 1/2 - n/2)` per axis, `h = 2 half_width / n`. Nodes are
//! stored with `k` (the z index) fastest.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{add, scale, Vec3};
use crate::math;
use crate::qtensor::QTensor;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    center: Vec3,
    half_width: f64,
    n_cells: usize,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 8;

    pub fn new(center: Vec3, half_width: f64, n_cells: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "half_width",
                value: half_width,
            });
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                value: n_cells as f64,
            });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("grid center must be finite"));
        }
        Ok(GridSpec {
            center,
            half_width,
            n_cells,
        })
    }

    /// Cube `[-half_width, half_width]³` about the origin.
    pub fn centered(half_width: f64, n_cells: usize) -> Result<Self> {
        Self::new([0.0; 3], half_width, n_cells)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_cells * self.n_cells * self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_cells + j) * self.n_cells + k
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let n = self.n_cells;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Coordinate of node index `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing();
        self.center[axis] + h * (i as f64 + 0.5 - 0.5 * self.n_cells as f64)
    }

    #[inline]
    pub fn position(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.ijk(idx);
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    /// True for nodes on the outermost layer.
    #[inline]
    pub fn is_outer(&self, idx: usize) -> bool {
        let last = self.n_cells - 1;
        self.ijk(idx).iter().any(|&c| c == 0 || c == last)
    }

    /// Lowest node coordinate along each axis.
    pub fn hull_min(&self) -> Vec3 {
        [self.coord(0, 0), self.coord(1, 0), self.coord(2, 0)]
    }

    /// Highest node coordinate along each axis.
    pub fn hull_max(&self) -> Vec3 {
        let last = self.n_cells - 1;
        [self.coord(0, last), self.coord(1, last), self.coord(2, last)]
    }

    /// Whether `x` lies in the node hull (closed, with round-off slack).
    pub fn contains(&self, x: Vec3) -> bool {
        let slack = 1e-9 * self.spacing();
        let (lo, hi) = (self.hull_min(), self.hull_max());
        (0..3).all(|a| x[a] >= lo[a] - slack && x[a] <= hi[a] + slack)
    }

    /// Largest distance from `point` to any node.
    pub fn max_node_distance(&self, point: Vec3) -> f64 {
        let (lo, hi) = (self.hull_min(), self.hull_max());
        let mut s = 0.0;
        for a in 0..3 {
            let d = math::abs(lo[a] - point[a]).max(math::abs(hi[a] - point[a]));
            s += d * d;
        }
        math::sqrt(s)
    }

    /// Distance from `point` to the nearest hull face (negative outside).
    pub fn hull_clearance(&self, point: Vec3) -> f64 {
        let (lo, hi) = (self.hull_min(), self.hull_max());
        (0..3)
            .map(|a| (point[a] - lo[a]).min(hi[a] - point[a]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `Φ(x) = s₊ (x̂⊗x̂ - Id/3)`, with `Φ(0) = 0`.
#[inline]
pub fn hedgehog_field(x: Vec3, s_plus: f64) -> QTensor {
    QTensor::uniaxial_normalized(x, s_plus)
}

/// A lattice of [`QTensor`] values with a Dirichlet mask.
#[derive(Clone, Debug, PartialEq)]
pub struct QField {
    grid: GridSpec,
    values: Vec<QTensor>,
    dirichlet: Vec<bool>,
}

impl QField {
    /// Samples `f` at every node; the outer node layer is Dirichlet.
    pub fn sample<F: Fn(Vec3) -> QTensor>(grid: GridSpec, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        let dirichlet = (0..grid.len()).map(|i| grid.is_outer(i)).collect();
        QField {
            grid,
            values,
            dirichlet,
        }
    }

    pub fn constant(grid: GridSpec, q: QTensor) -> Self {
        Self::sample(grid, |_| q)
    }

    /// Builds a field from raw parts.
    pub fn from_parts(grid: GridSpec, values: Vec<QTensor>, dirichlet: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || dirichlet.len() != grid.len() {
            return Err(Error::Invalid("field length does not match the grid"));
        }
        Ok(QField {
            grid,
            values,
            dirichlet,
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[QTensor] {
        &self.values
    }

    /// Mutable access to every node, Dirichlet nodes included.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [QTensor] {
        &mut self.values
    }

    #[inline]
    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    #[inline]
    pub fn is_dirichlet(&self, idx: usize) -> bool {
        self.dirichlet[idx]
    }

    pub fn set_dirichlet(&mut self, idx: usize, fixed: bool) {
        self.dirichlet[idx] = fixed;
    }

    /// Marks nodes farther than `radius` from the grid centre as Dirichlet.
    pub fn mask_outside_ball(mut self, radius: f64) -> Self {
        let c = self.grid.center();
        for idx in 0..self.grid.len() {
            if crate::linalg::distance(self.grid.position(idx), c) > radius {
                self.dirichlet[idx] = true;
            }
        }
        self
    }

    /// Overwrites every Dirichlet node with `f(x)`.
    pub fn apply_boundary<F: Fn(Vec3) -> QTensor>(&mut self, f: F) {
        for idx in 0..self.grid.len() {
            if self.dirichlet[idx] {
                self.values[idx] = f(self.grid.position(idx));
            }
        }
    }

    pub fn free_count(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }

    /// `R Q Rᵀ` at every node; positions are not moved.
    pub fn conjugated(&self, r: &crate::linalg::Mat3) -> QField {
        QField {
            grid: self.grid,
            values: self.values.iter().map(|q| q.conjugate(r)).collect(),
            dirichlet: self.dirichlet.clone(),
        }
    }

    /// Trilinear interpolation of the coefficients.
    pub fn interpolate(&self, x: Vec3) -> Result<QTensor> {
        if !self.grid.contains(x) {
            return Err(Error::OutOfDomain { point: x });
        }
        Ok(self.interpolate_unchecked(x))
    }

    pub(crate) fn interpolate_unchecked(&self, x: Vec3) -> QTensor {
        let g = &self.grid;
        let n = g.n_cells();
        let h = g.spacing();
        let lo = g.hull_min();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let mut t = (x[a] - lo[a]) / h;
            let nearest = math::round(t);
            if math::abs(t - nearest) < 1e-9 {
                t = nearest;
            }
            let i0 = (math::floor(t).max(0.0) as usize).min(n - 2);
            base[a] = i0;
            frac[a] = (t - i0 as f64).clamp(0.0, 1.0);
        }
        // Nested lerps keep constant fields exact.
        let lerp = |a: QTensor, b: QTensor, t: f64| a + (b - a) * t;
        let v = |di: usize, dj: usize, dk: usize| {
            self.values[g.index(base[0] + di, base[1] + dj, base[2] + dk)]
        };
        let mut plane = [QTensor::ZERO; 2];
        for (di, slot) in plane.iter_mut().enumerate() {
            let lo_row = lerp(v(di, 0, 0), v(di, 0, 1), frac[2]);
            let hi_row = lerp(v(di, 1, 0), v(di, 1, 1), frac[2]);
            *slot = lerp(lo_row, hi_row, frac[1]);
        }
        lerp(plane[0], plane[1], frac[0])
    }

    /// Resamples `y ↦ Q(center + scale·y)` on the target grid.
    pub fn extract_blowup(&self, spec: &BlowupSpec) -> Result<QField> {
        let t = &spec.target;
        let (lo, hi) = (t.hull_min(), t.hull_max());
        for corner in 0..8 {
            let y = [
                if corner & 4 != 0 { hi[0] } else { lo[0] },
                if corner & 2 != 0 { hi[1] } else { lo[1] },
                if corner & 1 != 0 { hi[2] } else { lo[2] },
            ];
            let image = spec.map(y);
            if !self.grid.contains(image) {
                return Err(Error::BlowupOutOfDomain { corner: y, image });
            }
        }
        Ok(QField::sample(*t, |y| self.interpolate_unchecked(spec.map(y))))
    }
}

/// Blow-up `y ↦ Q(center + scale·y)` sampled on `target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupSpec {
    pub center: Vec3,
    pub scale: f64,
    pub target: GridSpec,
}

impl BlowupSpec {
    pub fn new(center: Vec3, scale: f64, target: GridSpec) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
            });
        }
        Ok(BlowupSpec {
            center,
            scale,
            target,
        })
    }

    #[inline]
    pub fn map(&self, y: Vec3) -> Vec3 {
        add(self.center, scale(y, self.scale))
    }
}
