//! Symmetric 3x3 eigen-decomposition.
//!
//! Eigenvalues come from the trigonometric roots of the characteristic
//! cubic. The most isolated eigenvector is taken from the best-conditioned
//! cross product of the rows of `A - λI`; the remaining pair is resolved by
//! an exact 2x2 rotation in its orthogonal complement. When the cubic's
//! discriminant is close to zero the decomposition falls back to cyclic
//! Jacobi sweeps.
//!
//! Output is deterministic: eigenvalues are sorted in decreasing order,
//! eigenvectors of a (numerically) repeated eigenvalue are chosen by
//! Gram-Schmidt against the canonical axes in the order x, y, z, and every
//! other eigenvector has its largest-magnitude component positive.

use crate::linalg::{cross, dot, normalize, scale, sub, Mat3, Vec3};
use crate::math;

/// Relative discriminant `1 - r²` below which the Jacobi path is used.
const DISCRIMINANT_FALLBACK: f64 = 1e-10;
/// Eigenvalues closer than this (relative to the spectral scale) are ties.
const TIE_TOLERANCE: f64 = 1e-12;

const AXES: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricEigen {
    /// Eigenvalues, largest first.
    pub values: [f64; 3],
    /// Orthonormal eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: [Vec3; 3],
}

/// Decomposes the symmetric part of `a`.
pub fn symmetric_eigen(a: &Mat3) -> SymmetricEigen {
    let shift = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let mut b = [[0.0; 3]; 3];
    let mut scale_factor: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = 0.5 * (a[i][j] + a[j][i]);
            if i == j {
                b[i][j] -= shift;
            }
            scale_factor = scale_factor.max(math::abs(b[i][j]));
        }
    }
    if !(scale_factor > f64::MIN_POSITIVE) {
        return SymmetricEigen {
            values: [shift; 3],
            vectors: AXES,
        };
    }
    for row in b.iter_mut() {
        for x in row.iter_mut() {
            *x /= scale_factor;
        }
    }

    let (values, vectors) = match trigonometric(&b) {
        Some(res) => res,
        None => jacobi(&b),
    };
    let mut out = SymmetricEigen {
        values: [
            values[0] * scale_factor + shift,
            values[1] * scale_factor + shift,
            values[2] * scale_factor + shift,
        ],
        vectors,
    };
    sort_descending(&mut out);
    canonicalize(&mut out, scale_factor);
    out
}

fn trigonometric(c: &Mat3) -> Option<([f64; 3], [Vec3; 3])> {
    let off = c[0][1] * c[0][1] + c[0][2] * c[0][2] + c[1][2] * c[1][2];
    let p2 = (c[0][0] * c[0][0] + c[1][1] * c[1][1] + c[2][2] * c[2][2] + 2.0 * off) / 6.0;
    let p = math::sqrt(p2);
    let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[1][2])
        - c[0][1] * (c[0][1] * c[2][2] - c[1][2] * c[0][2])
        + c[0][2] * (c[0][1] * c[1][2] - c[1][1] * c[0][2]);
    let r = (det / (2.0 * p2 * p)).clamp(-1.0, 1.0);
    if 1.0 - r * r < DISCRIMINANT_FALLBACK {
        return None;
    }
    let phi = math::acos(r) / 3.0;
    let l1 = 2.0 * p * math::cos(phi);
    let l3 = 2.0 * p * math::cos(phi + 2.0 * math::PI / 3.0);
    let l2 = -l1 - l3;

    // The eigenvalue farther from the middle one is well separated.
    let (iso_value, iso_slot) = if l1 - l2 >= l2 - l3 { (l1, 0) } else { (l3, 2) };
    let v_iso = null_vector(c, iso_value)?;

    let u = any_orthonormal(v_iso);
    let w = cross(v_iso, u);
    let cu = mat_apply(c, u);
    let cw = mat_apply(c, w);
    let (m00, m01, m11) = (dot(u, cu), dot(u, cw), dot(w, cw));
    let mean = 0.5 * (m00 + m11);
    let half_diff = 0.5 * (m00 - m11);
    let radius = math::sqrt(half_diff * half_diff + m01 * m01);
    let theta = 0.5 * math::atan2(2.0 * m01, m00 - m11);
    let (s, co) = (math::sin(theta), math::cos(theta));
    let big = [
        co * u[0] + s * w[0],
        co * u[1] + s * w[1],
        co * u[2] + s * w[2],
    ];
    let small = [
        -s * u[0] + co * w[0],
        -s * u[1] + co * w[1],
        -s * u[2] + co * w[2],
    ];
    let (hi, lo) = (mean + radius, mean - radius);
    Some(if iso_slot == 0 {
        ([iso_value, hi, lo], [v_iso, big, small])
    } else {
        ([hi, lo, iso_value], [big, small, v_iso])
    })
}

fn mat_apply(c: &Mat3, v: Vec3) -> Vec3 {
    [dot(c[0], v), dot(c[1], v), dot(c[2], v)]
}

/// Unit null vector of `c - λI` for a simple eigenvalue λ.
fn null_vector(c: &Mat3, lambda: f64) -> Option<Vec3> {
    let mut m = *c;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let candidates = [cross(m[0], m[1]), cross(m[0], m[2]), cross(m[1], m[2])];
    let best = candidates
        .iter()
        .copied()
        .max_by(|a, b| dot(*a, *a).total_cmp(&dot(*b, *b)))?;
    normalize(best)
}

/// A unit vector orthogonal to the unit vector `v`.
fn any_orthonormal(v: Vec3) -> Vec3 {
    let candidate = if math::abs(v[0]) > math::abs(v[1]) {
        [-v[2], 0.0, v[0]]
    } else {
        [0.0, v[2], -v[1]]
    };
    normalize(candidate).unwrap_or([1.0, 0.0, 0.0])
}

/// Cyclic Jacobi rotations on a symmetric matrix.
fn jacobi(c: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let mut a = *c;
    // Columns of v are the eigenvectors.
    let mut v = AXES;
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= 1e-34 * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = if tau >= 0.0 {
                1.0 / (tau + math::sqrt(1.0 + tau * tau))
            } else {
                -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
            };
            let cs = 1.0 / math::sqrt(1.0 + t * t);
            let sn = t * cs;
            // A <- Jᵀ A J
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = cs * akp - sn * akq;
                a[k][q] = sn * akp + cs * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = cs * apk - sn * aqk;
                a[q][k] = sn * apk + cs * aqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = cs * vp - sn * vq;
                row[q] = sn * vp + cs * vq;
            }
        }
    }
    let col = |j: usize| [v[0][j], v[1][j], v[2][j]];
    ([a[0][0], a[1][1], a[2][2]], [col(0), col(1), col(2)])
}

fn sort_descending(e: &mut SymmetricEigen) {
    for i in 0..3 {
        for j in 0..2 - i {
            if e.values[j] < e.values[j + 1] {
                e.values.swap(j, j + 1);
                e.vectors.swap(j, j + 1);
            }
        }
    }
}

/// Applies the deterministic tie-break and sign rules.
fn canonicalize(e: &mut SymmetricEigen, spectral_scale: f64) {
    let tol = TIE_TOLERANCE * spectral_scale;
    let tie01 = e.values[0] - e.values[1] <= tol;
    let tie12 = e.values[1] - e.values[2] <= tol;
    match (tie01, tie12) {
        (true, true) => {
            e.vectors = AXES;
        }
        (true, false) => {
            let [a, b] = span_from_axes(e.vectors[2]);
            e.vectors[0] = a;
            e.vectors[1] = b;
            e.vectors[2] = fix_sign(e.vectors[2]);
        }
        (false, true) => {
            let [a, b] = span_from_axes(e.vectors[0]);
            e.vectors[0] = fix_sign(e.vectors[0]);
            e.vectors[1] = a;
            e.vectors[2] = b;
        }
        (false, false) => {
            for v in e.vectors.iter_mut() {
                *v = fix_sign(*v);
            }
        }
    }
}

/// Orthonormal basis of the plane orthogonal to `normal`, built by
/// Gram-Schmidt over the canonical axes in order.
fn span_from_axes(normal: Vec3) -> [Vec3; 2] {
    let mut basis: [Vec3; 2] = [[0.0; 3]; 2];
    let mut found = 0;
    for axis in AXES {
        let mut v = sub(axis, scale(normal, dot(axis, normal)));
        for b in basis.iter().take(found) {
            v = sub(v, scale(*b, dot(v, *b)));
        }
        if dot(v, v) > 1e-6 {
            basis[found] = normalize(v).unwrap_or(axis);
            found += 1;
            if found == 2 {
                break;
            }
        }
    }
    basis
}

fn fix_sign(v: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if math::abs(v[i]) > math::abs(v[k]) {
            k = i;
        }
    }
    if v[k] < 0.0 {
        scale(v, -1.0)
    } else {
        v
    }
}
