//! Geodesic icosphere triangulations of the unit sphere.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{add, cross, dot, normalize, scale, sub, Vec3};
use crate::math;

/// Subdivided icosahedron projected onto S², with outward-oriented
/// triangles and spherical Voronoi vertex weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Icosphere {
    level: u32,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

pub const DEFAULT_LEVEL: u32 = 4;

impl Icosphere {
    /// Level `L` has `10·4^L + 2` vertices and `20·4^L` triangles.
    pub fn new(level: u32) -> Self {
        let t = 0.5 * (1.0 + math::sqrt(5.0));
        let raw: [Vec3; 12] = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let mut vertices: Vec<Vec3> = raw.iter().map(|v| unit(*v)).collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for &[a, b, c] in &triangles {
                let ab = midpoint(&mut vertices, &mut midpoints, a, b);
                let bc = midpoint(&mut vertices, &mut midpoints, b, c);
                let ca = midpoint(&mut vertices, &mut midpoints, c, a);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }
        for tri in &mut triangles {
            let [a, b, c] = tri.map(|i| vertices[i]);
            if dot(cross(sub(b, a), sub(c, a)), add(add(a, b), c)) < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut neighbors = vec![Vec::new(); vertices.len()];
        for &[a, b, c] in &triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if !neighbors[u].contains(&v) {
                    neighbors[u].push(v);
                }
                if !neighbors[v].contains(&u) {
                    neighbors[v].push(u);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let mut weights = vec![0.0; vertices.len()];
        for &[a, b, c] in &triangles {
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let centre = unit(cross(sub(pb, pa), sub(pc, pa)));
            let mab = unit(add(pa, pb));
            let mbc = unit(add(pb, pc));
            let mca = unit(add(pc, pa));
            weights[a] += solid_angle(pa, mab, centre) + solid_angle(pa, centre, mca);
            weights[b] += solid_angle(pb, mbc, centre) + solid_angle(pb, centre, mab);
            weights[c] += solid_angle(pc, mca, centre) + solid_angle(pc, centre, mbc);
        }

        Icosphere {
            level,
            vertices,
            triangles,
            neighbors,
            weights,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Unit vertex positions.
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Vertex triples ordered counter-clockwise seen from outside.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted neighbour lists.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Spherical Voronoi cell areas; they sum to 4π.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unique undirected edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Vertices placed on the sphere of the given centre and radius.
    pub fn points(&self, center: Vec3, radius: f64) -> impl Iterator<Item = Vec3> + '_ {
        self.vertices.iter().map(move |v| add(center, scale(*v, radius)))
    }
}

fn unit(v: Vec3) -> Vec3 {
    normalize(v).unwrap_or([0.0, 0.0, 1.0])
}

fn midpoint(
    vertices: &mut Vec<Vec3>,
    cache: &mut BTreeMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = if a < b { (a, b) } else { (b, a) };
    *cache.entry(key).or_insert_with(|| {
        vertices.push(unit(add(vertices[a], vertices[b])));
        vertices.len() - 1
    })
}

/// Signed solid angle of the spherical triangle spanned by three unit
/// vectors (Van Oosterom-Strackee), positive for counter-clockwise order
/// seen from outside.
pub fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = dot(a, cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * math::atan2(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::math::PI;

    #[test]
    fn counts_follow_subdivision() {
        for level in 0..5 {
            let s = Icosphere::new(level);
            let f = 4usize.pow(level);
            assert_eq!(s.vertices().len(), 10 * f + 2);
            assert_eq!(s.triangles().len(), 20 * f);
            assert_eq!(s.edges().count(), 30 * f);
        }
        assert_eq!(Icosphere::new(DEFAULT_LEVEL).vertices().len(), 2562);
    }

    #[test]
    fn weights_tile_the_sphere() {
        for level in 0..5 {
            let s = Icosphere::new(level);
            let total: f64 = s.weights().iter().sum();
            assert!((total - 4.0 * PI).abs() < 1e-12, "{total}");
            assert!(s.weights().iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn triangles_are_outward_and_cover_once() {
        let s = Icosphere::new(3);
        let total: f64 = s
            .triangles()
            .iter()
            .map(|t| solid_angle(s.vertices()[t[0]], s.vertices()[t[1]], s.vertices()[t[2]]))
            .sum();
        assert!((total - 4.0 * PI).abs() < 1e-10);
        assert!(s.vertices().iter().all(|v| (norm(*v) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn octant_solid_angle() {
        let o = solid_angle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((o - PI / 2.0).abs() < 1e-15);
        let r = solid_angle([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        assert!((r + PI / 2.0).abs() < 1e-15);
    }
}
