//! Defect measurements on lattice fields: core location and size, director
//! maps on spheres, topological degree, tangent-map fitting and the
//! convergence diagnostics against a reference field.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::field::QField;
use crate::linalg::{add, det, distance, dot, mat_mul, mat_vec, norm, outer, scale, sub, transpose, Mat3, Vec3};
use crate::math;
use crate::par;
use crate::qtensor::{QTensor, DEFAULT_GAP_MIN, SQRT_2_3};
use crate::sphere::{solid_angle, Icosphere};

const NODE_CHUNK: usize = 4096;

/// Edge inner product below which the sign lift counts as frustrated.
pub const FRUSTRATION_THRESHOLD: f64 = -0.1;

/// Largest accepted distance from the nearest integer of the raw degree.
pub const DEGREE_RESIDUAL_MAX: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoreLocation {
    pub node: usize,
    pub position: Vec3,
    pub max_dist_to_n: f64,
}

/// Node with the largest distance to N; ties go to the lowest node index.
pub fn locate_core(field: &QField, s_plus: f64) -> CoreLocation {
    let values = field.values();
    let best = par::map_chunks(values.len(), NODE_CHUNK, |range| {
        let mut best = (range.start, f64::NEG_INFINITY);
        for m in range {
            let d = values[m].dist_to_n(s_plus);
            if d > best.1 {
                best = (m, d);
            }
        }
        best
    })
    .into_iter()
    .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    CoreLocation {
        node: best.0,
        position: field.grid().position(best.0),
        max_dist_to_n: best.1.max(0.0),
    }
}

/// Diameter of the node set `{dist(Q, N) ≥ delta}`, 0 when it is empty.
pub fn core_diameter(field: &QField, s_plus: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < s_plus * SQRT_2_3) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
        });
    }
    let g = *field.grid();
    let values = field.values();
    let inside: Vec<bool> = par::map_chunks(values.len(), NODE_CHUNK, |range| {
        range.map(|m| values[m].dist_to_n(s_plus) >= delta).collect::<Vec<_>>()
    })
    .concat();

    // The farthest pair of a lattice set lies on its boundary.
    let n = g.n_cells();
    let rim: Vec<Vec3> = (0..g.len())
        .filter(|&m| inside[m])
        .filter(|&m| {
            let [i, j, k] = g.ijk(m);
            if [i, j, k].iter().any(|&c| c == 0 || c == n - 1) {
                return true;
            }
            [
                g.index(i - 1, j, k),
                g.index(i + 1, j, k),
                g.index(i, j - 1, k),
                g.index(i, j + 1, k),
                g.index(i, j, k - 1),
                g.index(i, j, k + 1),
            ]
            .iter()
            .any(|&nb| !inside[nb])
        })
        .map(|m| g.position(m))
        .collect();
    let mut diameter: f64 = 0.0;
    for (a, pa) in rim.iter().enumerate() {
        for pb in &rim[a + 1..] {
            diameter = diameter.max(distance(*pa, *pb));
        }
    }
    Ok(diameter)
}

/// Leading-eigenvector director field on a sphere, sign-lifted.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereMap {
    pub center: Vec3,
    pub radius: f64,
    pub sphere: Icosphere,
    /// Unit directors, one per icosphere vertex.
    pub directors: Vec<Vec3>,
    pub lift_ok: bool,
    /// Edges whose lifted directors still have inner product below
    /// [`FRUSTRATION_THRESHOLD`].
    pub frustrated_edges: usize,
}

impl SphereMap {
    /// Builds a map from explicit directors on `sphere`, applying the same
    /// sign lift as [`sphere_director_map`].
    pub fn from_directors(center: Vec3, radius: f64, sphere: Icosphere, directors: Vec<Vec3>) -> Self {
        let mut map = SphereMap {
            center,
            radius,
            sphere,
            directors,
            lift_ok: false,
            frustrated_edges: 0,
        };
        map.lift();
        map
    }

    /// Breadth-first sign propagation from vertex 0.
    fn lift(&mut self) {
        let nv = self.directors.len();
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::new();
        if nv > 0 {
            seen[0] = true;
            queue.push_back(0);
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.sphere.neighbors()[u] {
                if !seen[v] {
                    if dot(self.directors[u], self.directors[v]) < 0.0 {
                        self.directors[v] = scale(self.directors[v], -1.0);
                    }
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        self.frustrated_edges = self
            .sphere
            .edges()
            .filter(|&(u, v)| dot(self.directors[u], self.directors[v]) < FRUSTRATION_THRESHOLD)
            .count();
        self.lift_ok = self.frustrated_edges == 0;
    }

    /// Reverses every lifted director.
    pub fn flip(&mut self) {
        for d in &mut self.directors {
            *d = scale(*d, -1.0);
        }
    }
}

/// Samples the field on the sphere `|x - center| = radius` at the vertices of
/// a level-`level` icosphere and lifts the leading eigenvectors.
pub fn sphere_director_map(
    field: &QField,
    center: Vec3,
    radius: f64,
    level: u32,
    gap_min: f64,
) -> Result<SphereMap> {
    let sphere = Icosphere::new(level);
    check_sphere(field, center, radius)?;
    let mut directors = Vec::with_capacity(sphere.vertices().len());
    for (v, x) in sphere.points(center, radius).enumerate() {
        let e = field.interpolate_unchecked(x).eigensystem();
        let gap = e.leading_gap();
        if !(gap >= gap_min) {
            return Err(Error::LeavesNeighborhood { vertex: v, gap });
        }
        directors.push(e.vectors[0]);
    }
    Ok(SphereMap::from_directors(center, radius, sphere, directors))
}

/// [`sphere_director_map`] with the default eigen-gap guard.
pub fn sphere_director_map_default(field: &QField, center: Vec3, radius: f64, level: u32) -> Result<SphereMap> {
    sphere_director_map(field, center, radius, level, DEFAULT_GAP_MIN)
}

fn check_sphere(field: &QField, center: Vec3, radius: f64) -> Result<()> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter {
            name: "radius",
            value: radius,
        });
    }
    if !(field.grid().hull_clearance(center) >= radius) {
        let far = add(center, [radius, 0.0, 0.0]);
        return Err(Error::OutOfDomain { point: far });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Degree {
    /// `|round(raw)|`.
    pub degree: i64,
    /// Signed integer before taking the absolute value.
    pub signed: i64,
    /// `(1/4π) Σ Ω(n_i, n_j, n_k)` over the triangles.
    pub raw: f64,
}

/// Topological degree of a lifted director map.
pub fn degree(map: &SphereMap) -> Result<Degree> {
    if !map.lift_ok {
        return Err(Error::LiftFrustrated {
            frustrated_edges: map.frustrated_edges,
        });
    }
    let d = &map.directors;
    let total: f64 = map
        .sphere
        .triangles()
        .iter()
        .map(|&[a, b, c]| solid_angle(d[a], d[b], d[c]))
        .sum();
    let raw = total / (4.0 * math::PI);
    let nearest = math::round(raw);
    let residual = math::abs(raw - nearest);
    if residual > DEGREE_RESIDUAL_MAX {
        return Err(Error::DegreeResolution { raw, residual });
    }
    let signed = nearest as i64;
    Ok(Degree {
        degree: signed.abs(),
        signed,
        raw,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TangentFit {
    /// Proper rotation `T` with `n ≈ T σ`.
    pub rotation: Mat3,
    /// Weighted RMS of `|n⊗n - (Tσ)⊗(Tσ)|` over the sphere (traceless parts).
    pub residual: f64,
    /// The lifted signs were reversed to make `det T = +1`.
    pub flipped: bool,
}

/// Orthogonal Procrustes fit `n_v ≈ T σ_v` with Voronoi weights.
pub fn tangent_fit(map: &SphereMap) -> Result<TangentFit> {
    if !map.lift_ok {
        return Err(Error::LiftFrustrated {
            frustrated_edges: map.frustrated_edges,
        });
    }
    let sigma = map.sphere.vertices();
    let w = map.sphere.weights();
    let mut m = [[0.0; 3]; 3];
    for ((n, s), wv) in map.directors.iter().zip(sigma).zip(w) {
        let o = outer(*n, *s);
        for (row, orow) in m.iter_mut().zip(o.iter()) {
            for (x, y) in row.iter_mut().zip(orow.iter()) {
                *x += wv * y;
            }
        }
    }
    let mut t = polar_factor(&m)?;
    let flipped = det(&t) < 0.0;
    if flipped {
        t = t.map(|row| row.map(|x| -x));
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for ((n, s), wv) in map.directors.iter().zip(sigma).zip(w) {
        let fitted = mat_vec(&t, *s);
        let diff = QTensor::uniaxial_normalized(*n, 1.0) - QTensor::uniaxial_normalized(fitted, 1.0);
        num += wv * diff.norm_sq();
        den += wv;
    }
    Ok(TangentFit {
        rotation: t,
        residual: math::sqrt(num / den),
        flipped,
    })
}

/// Orthogonal factor of the polar decomposition, `M (MᵀM)^{-1/2}`, polished
/// by Newton iterations `T ← (T + T⁻ᵀ)/2`.
fn polar_factor(m: &Mat3) -> Result<Mat3> {
    let mtm = mat_mul(&transpose(m), m);
    let e = symmetric_eigen(&mtm);
    let sv = e.values.map(|l| math::sqrt(l.max(0.0)));
    if !(sv[2] > 1e-10 * sv[0]) || !(sv[0] > 0.0) {
        return Err(Error::RankDeficient { singular_values: sv });
    }
    let mut inv_sqrt = [[0.0; 3]; 3];
    for (v, s) in e.vectors.iter().zip(sv) {
        let o = outer(*v, *v);
        for (row, orow) in inv_sqrt.iter_mut().zip(o.iter()) {
            for (x, y) in row.iter_mut().zip(orow.iter()) {
                *x += y / s;
            }
        }
    }
    let mut t = mat_mul(m, &inv_sqrt);
    for _ in 0..3 {
        let Some(inv) = inverse(&t) else { break };
        let it = transpose(&inv);
        for (row, irow) in t.iter_mut().zip(it.iter()) {
            for (x, y) in row.iter_mut().zip(irow.iter()) {
                *x = 0.5 * (*x + y);
            }
        }
    }
    Ok(t)
}

fn inverse(a: &Mat3) -> Option<Mat3> {
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let c = |r: usize, s: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        a[r1][s1] * a[r2][s2] - a[r1][s2] * a[r2][s1]
    };
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = c(j, i) / d;
        }
    }
    Some(out)
}

/// `max_v |Q(center + r σ_v) - s₊ (Tσ_v ⊗ Tσ_v - Id/3)|` on a sphere.
pub fn sphere_sup_deviation(
    field: &QField,
    center: Vec3,
    radius: f64,
    level: u32,
    rotation: &Mat3,
    s_plus: f64,
) -> Result<f64> {
    check_sphere(field, center, radius)?;
    let sphere = Icosphere::new(level);
    Ok(sphere
        .vertices()
        .iter()
        .map(|s| {
            let q = field.interpolate_unchecked(add(center, scale(*s, radius)));
            (q - QTensor::uniaxial_normalized(mat_vec(rotation, *s), s_plus)).norm()
        })
        .fold(0.0, f64::max))
}

/// `max ‖Q(x) - reference(x - center)‖` over nodes with
/// `r_in ≤ |x - center| ≤ r_out`.
pub fn annulus_sup_deviation<F>(field: &QField, center: Vec3, reference: F, r_in: f64, r_out: f64) -> Result<f64>
where
    F: Fn(Vec3) -> QTensor + Sync + Send,
{
    let g = *field.grid();
    let h = g.spacing();
    if !(r_in >= 2.0 * h && r_in < r_out) {
        return Err(Error::AnnulusTooThin {
            inner: r_in,
            outer: r_out,
            min_width: 2.0 * h,
        });
    }
    if !(g.hull_clearance(center) >= r_out) {
        return Err(Error::RadiusOutOfRange {
            radius: r_out,
            min: r_in,
            max: g.hull_clearance(center),
        });
    }
    let values = field.values();
    let parts = par::map_chunks(values.len(), NODE_CHUNK, |range| {
        let mut sup: Option<f64> = None;
        for m in range {
            let y = sub(g.position(m), center);
            let r = norm(y);
            if r >= r_in && r <= r_out {
                let d = (values[m] - reference(y)).norm();
                sup = Some(sup.map_or(d, |s| s.max(d)));
            }
        }
        sup
    });
    parts
        .into_iter()
        .flatten()
        .reduce(f64::max)
        .ok_or(Error::EmptyAnnulus {
            inner: r_in,
            outer: r_out,
        })
}

/// Tensor trace of the field on the sphere `|x - center| = radius`.
pub fn sphere_trace(field: &QField, center: Vec3, radius: f64, sphere: &Icosphere) -> Result<Vec<QTensor>> {
    check_sphere(field, center, radius)?;
    Ok(sphere
        .points(center, radius)
        .map(|x| field.interpolate_unchecked(x))
        .collect())
}

/// `Σ_{i<k} ‖Q(2ⁱ⁺¹r₀ ·) - Q(2ⁱr₀ ·)‖_{L²(S²)}` about `center`.
pub fn dyadic_drift(field: &QField, center: Vec3, r0: f64, k: u32, level: u32) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let sphere = Icosphere::new(level);
    let w = sphere.weights();
    let mut prev = sphere_trace(field, center, r0, &sphere)?;
    let mut total = 0.0;
    for i in 1..=k {
        let radius = r0 * (1u64 << i) as f64;
        let next = sphere_trace(field, center, radius, &sphere)?;
        let sq: f64 = prev
            .iter()
            .zip(&next)
            .zip(w)
            .map(|((a, b), wv)| wv * (*b - *a).norm_sq())
            .sum();
        total += math::sqrt(sq);
        prev = next;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiameterEntry {
    pub delta: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegreeEntry {
    pub radius: f64,
    pub degree: Option<Degree>,
    /// Why the degree is undefined at this radius.
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitEntry {
    pub radius: f64,
    pub fit: TangentFit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnulusEntry {
    pub r_in: f64,
    pub r_out: f64,
    pub sup_deviation: f64,
}

/// Limit map the annulus rows compare against, as a function of the
/// displacement from the reference centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// `s₊ (Ty⊗Ty/|y|² - Id/3)`.
    Hedgehog { rotation: Mat3 },
    Constant(QTensor),
}

impl Reference {
    pub fn at(&self, y: Vec3, s_plus: f64) -> QTensor {
        match self {
            Reference::Hedgehog { rotation } => QTensor::uniaxial_normalized(mat_vec(rotation, y), s_plus),
            Reference::Constant(q) => *q,
        }
    }
}

/// What [`defect_report`] measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportPlan {
    pub deltas: Vec<f64>,
    /// Sphere radii about the core for degree and tangent fit.
    pub sphere_radii: Vec<f64>,
    pub level: u32,
    pub gap_min: f64,
    /// `(r_in, r_out)` rows compared with `reference` about
    /// `reference_center`.
    pub annuli: Vec<(f64, f64)>,
    pub reference: Reference,
    pub reference_center: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DefectReport {
    pub core_center: Vec3,
    pub max_dist_to_n: f64,
    pub core_diameters: Vec<DiameterEntry>,
    pub degrees: Vec<DegreeEntry>,
    /// One fit per sphere radius where the map is defined.
    pub tangent_fits: Vec<FitEntry>,
    pub annulus_sup: Vec<AnnulusEntry>,
}

/// Runs the measurements of `plan` on one field.
pub fn defect_report(field: &QField, s_plus: f64, plan: &ReportPlan) -> Result<DefectReport> {
    let core = locate_core(field, s_plus);
    let mut deltas = plan.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let core_diameters = deltas
        .iter()
        .map(|&delta| Ok(DiameterEntry {
            delta,
            diameter: core_diameter(field, s_plus, delta)?,
        }))
        .collect::<Result<Vec<_>>>()?;

    let mut degrees = Vec::new();
    let mut tangent_fits = Vec::new();
    for &radius in &plan.sphere_radii {
        let map = sphere_director_map(field, core.position, radius, plan.level, plan.gap_min);
        let entry = match map.and_then(|m| degree(&m).map(|d| (m, d))) {
            Ok((m, d)) => {
                if let Ok(fit) = tangent_fit(&m) {
                    tangent_fits.push(FitEntry { radius, fit });
                }
                DegreeEntry {
                    radius,
                    degree: Some(d),
                    failure: None,
                }
            }
            Err(e) => DegreeEntry {
                radius,
                degree: None,
                failure: Some(e.to_string()),
            },
        };
        degrees.push(entry);
    }

    let annulus_sup = plan
        .annuli
        .iter()
        .map(|&(r_in, r_out)| {
            let reference = plan.reference;
            let sup = annulus_sup_deviation(field, plan.reference_center, |y| reference.at(y, s_plus), r_in, r_out)?;
            Ok(AnnulusEntry {
                r_in,
                r_out,
                sup_deviation: sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DefectReport {
        core_center: core.position,
        max_dist_to_n: core.max_dist_to_n,
        core_diameters,
        degrees,
        tangent_fits,
        annulus_sup,
    })
}
