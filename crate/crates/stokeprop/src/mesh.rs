//! Triangulated closed surfaces and the geometry the collocation solver and
//! inertia computations need.
//!
//! All meshes are validated on construction: closed, consistently oriented
//! with body-outward normals (positive signed volume), no degenerate panels.

use crate::error::{Error, Result};
use crate::scalar::{from_f64, Real};
use nalgebra::{Matrix3, Vector3};
use std::collections::HashMap;

pub mod stl;

/// Relative area threshold below which a panel counts as degenerate.
const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

/// A closed, consistently oriented triangle mesh with per-panel data.
#[derive(Debug, Clone)]
pub struct TriMesh<T: Real> {
    vertices: Vec<Vector3<T>>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Vector3<T>>,
    areas: Vec<T>,
    normals: Vec<Vector3<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport<T> {
    pub area: T,
    pub volume: T,
    /// Area-weighted centroid of the surface.
    pub centroid: Vector3<T>,
    pub max_panel_aspect: T,
}

impl<T: Real> TriMesh<T> {
    /// Build a mesh from vertices and triangles, rejecting anything that is
    /// not a closed, consistently oriented surface with positive volume.
    pub fn new(vertices: Vec<Vector3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::assemble(vertices, triangles)?;
        check_closed_oriented(&mesh.triangles)?;
        if mesh.signed_volume() <= T::zero() {
            return Err(Error::InvalidParameter(
                "mesh is inside out (signed volume not positive)".into(),
            ));
        }
        Ok(mesh)
    }

    /// Build a mesh from unchecked triangle data, repairing facet orientation
    /// so that every component is consistent and encloses positive volume.
    pub fn new_with_repair(
        vertices: Vec<Vector3<T>>,
        mut triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        repair_orientation(&vertices, &mut triangles)?;
        Self::new(vertices, triangles)
    }

    fn assemble(vertices: Vec<Vector3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for tri in &triangles {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::InvalidParameter(format!(
                        "triangle vertex index {v} out of range ({} vertices)",
                        vertices.len()
                    )));
                }
            }
        }
        let n = triangles.len();
        let mut centroids = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let third = from_f64::<T>(1.0 / 3.0);
        for tri in &triangles {
            let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let cross = (b - a).cross(&(c - a));
            let double_area = cross.norm();
            centroids.push((a + b + c) * third);
            areas.push(double_area * from_f64(0.5));
            normals.push(if double_area > T::zero() {
                cross / double_area
            } else {
                Vector3::zeros()
            });
        }

        // Degenerate panels are rejected, not dropped: silently removing them
        // would perturb the traction integrals.
        let mean_area = areas.iter().fold(T::zero(), |s, &a| s + a)
            / from_f64(n.max(1) as f64);
        let threshold = from_f64::<T>(DEGENERATE_AREA_FRACTION) * mean_area;
        for (panel, &area) in areas.iter().enumerate() {
            if area <= threshold {
                return Err(Error::DegeneratePanel {
                    panel,
                    area: area.to_f64().unwrap_or(0.0),
                    threshold: threshold.to_f64().unwrap_or(0.0),
                });
            }
        }

        Ok(Self {
            vertices,
            triangles,
            centroids,
            areas,
            normals,
        })
    }

    pub fn vertices(&self) -> &[Vector3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroids(&self) -> &[Vector3<T>] {
        &self.centroids
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn normals(&self) -> &[Vector3<T>] {
        &self.normals
    }

    pub fn panel_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> T {
        self.areas.iter().fold(T::zero(), |s, &a| s + a)
    }

    /// Signed enclosed volume, as the sum of signed tetrahedra against the
    /// origin. Exact for polyhedra up to one final division.
    pub fn signed_volume(&self) -> T {
        let six = from_f64::<T>(6.0);
        self.triangles
            .iter()
            .fold(T::zero(), |s, tri| {
                let [a, b, c] = [
                    self.vertices[tri[0]],
                    self.vertices[tri[1]],
                    self.vertices[tri[2]],
                ];
                s + a.dot(&b.cross(&c))
            })
            / six
    }

    /// Area-weighted centroid of the surface panels.
    pub fn surface_centroid(&self) -> Vector3<T> {
        let mut acc = Vector3::zeros();
        for (c, &a) in self.centroids.iter().zip(&self.areas) {
            acc += c * a;
        }
        acc / self.area()
    }

    /// Centroid of the enclosed volume (the default torque reference point).
    pub fn volume_centroid(&self) -> Vector3<T> {
        let mut moment = Vector3::zeros();
        let mut vol6 = T::zero();
        for tri in &self.triangles {
            let [a, b, c] = [
                self.vertices[tri[0]],
                self.vertices[tri[1]],
                self.vertices[tri[2]],
            ];
            let det = a.dot(&b.cross(&c));
            vol6 += det;
            moment += (a + b + c) * det;
        }
        moment / (vol6 * from_f64(4.0))
    }

    /// Second moment of the enclosed volume about the origin, as signed
    /// tetrahedra: `C = integral of x x^T dV`.
    fn volume_second_moment(&self) -> Matrix3<T> {
        let mut acc = Matrix3::zeros();
        let c60 = from_f64::<T>(1.0 / 60.0);
        let c120 = from_f64::<T>(1.0 / 120.0);
        for tri in &self.triangles {
            let [a, b, c] = [
                self.vertices[tri[0]],
                self.vertices[tri[1]],
                self.vertices[tri[2]],
            ];
            let det = a.dot(&b.cross(&c));
            let diag = a * a.transpose() + b * b.transpose() + c * c.transpose();
            let cross = a * b.transpose()
                + b * a.transpose()
                + a * c.transpose()
                + c * a.transpose()
                + b * c.transpose()
                + c * b.transpose();
            acc += (diag * c60 + cross * c120) * det;
        }
        acc
    }

    /// Inertia tensor of the homogeneous unit-density enclosed volume about
    /// its volume centroid.
    pub fn volume_inertia(&self) -> Matrix3<T> {
        let v = self.signed_volume();
        let g = self.volume_centroid();
        let c_origin = self.volume_second_moment();
        let c_centroid = c_origin - (g * g.transpose()) * v;
        Matrix3::identity() * c_centroid.trace() - c_centroid
    }

    /// Radius of the smallest origin-centered ball containing the mesh.
    pub fn bounding_radius(&self) -> T {
        self.vertices
            .iter()
            .fold(T::zero(), |m, v| if v.norm() > m { v.norm() } else { m })
    }

    pub fn geometry_report(&self) -> GeometryReport<T> {
        GeometryReport {
            area: self.area(),
            volume: self.signed_volume(),
            centroid: self.surface_centroid(),
            max_panel_aspect: self.max_panel_aspect(),
        }
    }

    /// Worst panel aspect ratio, normalized so an equilateral triangle is 1.
    pub fn max_panel_aspect(&self) -> T {
        let mut worst = T::zero();
        let k = from_f64::<T>(1.0 / (4.0 * 3.0f64.sqrt()));
        for (tri, &area) in self.triangles.iter().zip(&self.areas) {
            let [a, b, c] = [
                self.vertices[tri[0]],
                self.vertices[tri[1]],
                self.vertices[tri[2]],
            ];
            let e = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
            let longest = e.iter().fold(T::zero(), |m, &x| if x > m { x } else { m });
            let perimeter = e[0] + e[1] + e[2];
            let aspect = longest * perimeter * k / area;
            if aspect > worst {
                worst = aspect;
            }
        }
        worst
    }

    /// Map vertices through `f` and rebuild the derived panel data.
    pub fn map_vertices(&self, f: impl Fn(&Vector3<T>) -> Vector3<T>) -> Result<Self> {
        Self::new(self.vertices.iter().map(f).collect(), self.triangles.clone())
    }
}

/// Every undirected edge must be shared by exactly two triangles traversing
/// it in opposite directions.
fn check_closed_oriented(triangles: &[[usize; 3]]) -> Result<()> {
    // (lo, hi) -> (forward count, backward count)
    let mut edges: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
    for tri in triangles {
        for (a, b) in tri_edges(tri) {
            let key = (a.min(b), a.max(b));
            let entry = edges.entry(key).or_insert((0, 0));
            if a < b {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for (&edge, &(fwd, bwd)) in &edges {
        if fwd + bwd != 2 {
            boundary.push(edge);
        } else if fwd != 1 {
            return Err(Error::NonOrientable(edge.0, edge.1));
        }
    }
    if !boundary.is_empty() {
        boundary.sort_unstable();
        let count = boundary.len();
        boundary.truncate(8);
        return Err(Error::OpenSurface {
            count,
            examples: boundary,
        });
    }
    Ok(())
}

fn tri_edges(tri: &[usize; 3]) -> [(usize, usize); 3] {
    [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
}

/// Flip triangles until every connected component is consistently oriented
/// with positive enclosed volume. Fails on non-manifold or unorientable input.
fn repair_orientation<T: Real>(
    vertices: &[Vector3<T>],
    triangles: &mut [[usize; 3]],
) -> Result<()> {
    // edge -> up to two (triangle, traverses lo->hi) incidences
    let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for (a, b) in tri_edges(tri) {
            edges
                .entry((a.min(b), a.max(b)))
                .or_default()
                .push((t, a < b));
        }
    }
    for (&(a, b), inc) in &edges {
        if inc.len() != 2 {
            return Err(Error::OpenSurface {
                count: 1,
                examples: vec![(a, b)],
            });
        }
    }

    let n = triangles.len();
    let mut flip = vec![false; n];
    let mut visited = vec![false; n];
    let mut component = vec![usize::MAX; n];
    let mut components = 0usize;
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let id = components;
        components += 1;
        visited[seed] = true;
        component[seed] = id;
        let mut queue = vec![seed];
        while let Some(cur) = queue.pop() {
            for (a, b) in tri_edges(&triangles[cur]) {
                let key = (a.min(b), a.max(b));
                let inc = &edges[&key];
                let (cur_dir, (nbr, nbr_raw)) = if inc[0].0 == cur {
                    (inc[0].1, inc[1])
                } else {
                    (inc[1].1, inc[0])
                };
                if nbr == cur {
                    return Err(Error::NonOrientable(key.0, key.1));
                }
                let want = !(cur_dir ^ flip[cur]) ^ nbr_raw;
                if visited[nbr] {
                    if flip[nbr] != want {
                        return Err(Error::NonOrientable(key.0, key.1));
                    }
                } else {
                    visited[nbr] = true;
                    flip[nbr] = want;
                    component[nbr] = id;
                    queue.push(nbr);
                }
            }
        }
    }
    for (t, tri) in triangles.iter_mut().enumerate() {
        if flip[t] {
            tri.swap(1, 2);
        }
    }

    // Flip whole components whose signed volume came out negative.
    let mut comp_vol6 = vec![T::zero(); components];
    for (t, tri) in triangles.iter().enumerate() {
        let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        comp_vol6[component[t]] += a.dot(&b.cross(&c));
    }
    for (t, tri) in triangles.iter_mut().enumerate() {
        if comp_vol6[component[t]] < T::zero() {
            tri.swap(1, 2);
        }
    }
    Ok(())
}

/// Icosphere: icosahedral subdivision with projection onto the sphere.
/// Near-uniform panels keep one global regularization parameter adequate.
///
/// Vertex count is `10 * 4^subdivisions + 2`.
pub fn icosphere<T: Real>(radius: T, subdivisions: u32) -> TriMesh<T> {
    assert!(radius > T::zero(), "radius must be positive");
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Vector3<T>> = raw
        .iter()
        .map(|&(x, y, z)| Vector3::new(from_f64(x), from_f64(y), from_f64(z)))
        .collect();
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

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mid = |cache: &mut HashMap<(usize, usize), usize>,
                       verts: &mut Vec<Vector3<T>>,
                       a: usize,
                       b: usize| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    verts.push((verts[a] + verts[b]) * from_f64::<T>(0.5));
                    verts.len() - 1
                })
            };
            let [a, b, c] = *tri;
            let ab = mid(&mut midpoints, &mut vertices, a, b);
            let bc = mid(&mut midpoints, &mut vertices, b, c);
            let ca = mid(&mut midpoints, &mut vertices, c, a);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    for v in &mut vertices {
        *v *= radius / v.norm();
    }
    TriMesh::new(vertices, triangles).expect("icosphere construction is always valid")
}

/// Anisotropically scaled icosphere; normals are recomputed and stay outward.
pub fn ellipsoid<T: Real>(semi_axes: [T; 3], subdivisions: u32) -> TriMesh<T> {
    assert!(
        semi_axes.iter().all(|&a| a > T::zero()),
        "semi-axes must be positive"
    );
    let unit = icosphere(T::one(), subdivisions);
    unit.map_vertices(|v| Vector3::new(v.x * semi_axes[0], v.y * semi_axes[1], v.z * semi_axes[2]))
        .expect("scaled icosphere is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere_area_err(sub: u32) -> f64 {
        let m = icosphere::<f64>(1.0, sub);
        (m.area() - 4.0 * PI).abs() / (4.0 * PI)
    }

    fn sphere_vol_err(sub: u32) -> f64 {
        let m = icosphere::<f64>(1.0, sub);
        (m.signed_volume() - 4.0 / 3.0 * PI).abs() / (4.0 / 3.0 * PI)
    }

    #[test]
    fn base_icosahedron_counts() {
        let m = icosphere::<f64>(1.0, 0);
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.panel_count(), 20);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn icosphere_vertex_count_formula() {
        for sub in 0..4 {
            let m = icosphere::<f64>(1.0, sub);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(sub) + 2);
            assert_eq!(m.panel_count(), 20 * 4usize.pow(sub));
        }
    }

    #[test]
    fn sphere_area_and_volume_converge() {
        // Regression values frozen from the generated meshes; the analytic
        // sphere is the oracle.
        assert!(sphere_area_err(3) < 5e-3, "err {}", sphere_area_err(3));
        let m2 = icosphere::<f64>(2.0, 3);
        let v_exact = 4.0 / 3.0 * PI * 8.0;
        assert!((m2.signed_volume() - v_exact).abs() / v_exact < 1e-2);

        // Second-order geometric convergence: factor ~4 per level.
        for errs in [
            [sphere_area_err(1), sphere_area_err(2), sphere_area_err(3)],
            [sphere_vol_err(1), sphere_vol_err(2), sphere_vol_err(3)],
        ] {
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
            }
        }
    }

    #[test]
    fn ellipsoid_unit_axes_is_icosphere() {
        let a = icosphere::<f64>(1.0, 2);
        let b = ellipsoid::<f64>([1.0, 1.0, 1.0], 2);
        assert_eq!(a.triangles(), b.triangles());
        assert_eq!(a.vertices(), b.vertices());
    }

    #[test]
    fn ellipsoid_volume() {
        let m = ellipsoid::<f64>([2.0, 1.0, 1.0], 3);
        let v_exact = 4.0 / 3.0 * PI * 2.0;
        assert!((m.signed_volume() - v_exact).abs() / v_exact < 1e-2);
    }

    #[test]
    fn ellipsoid_normals_point_outward() {
        let m = ellipsoid::<f64>([1.0, 1.0, 0.5], 3);
        for (c, n) in m.centroids().iter().zip(m.normals()) {
            assert!(n.dot(c) > 0.0);
        }
    }

    #[test]
    fn symmetric_meshes_have_centered_centroids() {
        let s = icosphere::<f64>(1.0, 4);
        assert!(s.geometry_report().centroid.norm() < 1e-12);
        let e = ellipsoid::<f64>([2.0, 1.0, 1.0], 3);
        assert!(e.geometry_report().centroid.norm() < 1e-12);
        assert!(e.volume_centroid().norm() < 1e-12);
    }

    #[test]
    fn volume_quadratures_agree() {
        // Divergence-theorem volume evaluated with centroid quadrature and
        // with per-vertex quadrature must agree to rounding.
        for mesh in [icosphere::<f64>(1.3, 2), ellipsoid([2.0, 1.0, 0.7], 2)] {
            let v = mesh.signed_volume();
            let mut v_centroid = 0.0;
            let mut v_vertex = 0.0;
            for ((tri, c), (&a, n)) in mesh
                .triangles()
                .iter()
                .zip(mesh.centroids())
                .zip(mesh.areas().iter().zip(mesh.normals()))
            {
                v_centroid += c.dot(n) * a / 3.0;
                let vsum: Vector3<f64> = mesh.vertices()[tri[0]]
                    + mesh.vertices()[tri[1]]
                    + mesh.vertices()[tri[2]];
                v_vertex += (vsum / 3.0).dot(n) * a / 3.0;
            }
            assert_relative_eq!(v_centroid, v_vertex, max_relative = 1e-10);
            assert_relative_eq!(v, v_centroid, max_relative = 1e-10);
        }
    }

    #[test]
    fn every_edge_shared_twice_with_opposite_traversal() {
        let m = ellipsoid::<f64>([1.5, 1.0, 0.8], 2);
        let mut edges: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        for tri in m.triangles() {
            for (a, b) in super::tri_edges(tri) {
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
                if a < b {
                    e.0 += 1
                } else {
                    e.1 += 1
                }
            }
        }
        assert!(edges.values().all(|&(f, b)| f == 1 && b == 1));
    }

    #[test]
    fn open_surface_is_rejected() {
        let m = icosphere::<f64>(1.0, 1);
        let mut tris = m.triangles().to_vec();
        tris.pop();
        let err = TriMesh::new(m.vertices().to_vec(), tris).unwrap_err();
        match err {
            Error::OpenSurface { count, examples } => {
                assert_eq!(count, 3);
                assert!(!examples.is_empty());
            }
            other => panic!("expected OpenSurface, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_panel_is_rejected() {
        let m = icosphere::<f64>(1.0, 1);
        let mut verts = m.vertices().to_vec();
        let mut tris = m.triangles().to_vec();
        // Collapse one triangle to zero area by duplicating a vertex position.
        let [a, b, _] = tris[0];
        verts.push(verts[a]);
        let dup = verts.len() - 1;
        tris.push([a, dup, b]);
        let err = TriMesh::new(verts, tris).unwrap_err();
        assert!(matches!(err, Error::DegeneratePanel { .. }));
    }

    #[test]
    fn repair_flips_inverted_component() {
        let m = icosphere::<f64>(1.0, 1);
        let flipped: Vec<[usize; 3]> = m
            .triangles()
            .iter()
            .map(|&[a, b, c]| [a, c, b])
            .collect();
        let repaired = TriMesh::new_with_repair(m.vertices().to_vec(), flipped).unwrap();
        assert!(repaired.signed_volume() > 0.0);
        assert_relative_eq!(
            repaired.signed_volume(),
            m.signed_volume(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn cube_inertia_matches_analytic() {
        let m = unit_cube();
        assert_relative_eq!(m.signed_volume(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.area(), 6.0, max_relative = 1e-14);
        let inertia = m.volume_inertia();
        let exact = Matrix3::identity() / 6.0;
        assert!((inertia - exact).norm() < 1e-13);
    }

    #[test]
    fn sphere_inertia_matches_analytic() {
        let m = icosphere::<f64>(1.0, 3);
        let exact = 8.0 / 15.0 * PI; // unit-density solid sphere, a = 1
        let inertia = m.volume_inertia();
        for i in 0..3 {
            assert!((inertia[(i, i)] - exact).abs() / exact < 2e-2);
        }
        assert!(inertia.norm() > 0.0);
    }

    /// Unit cube [0,1]^3 triangulated into 12 outward-oriented panels.
    pub(super) fn unit_cube() -> TriMesh<f64> {
        let v = |x: f64, y: f64, z: f64| Vector3::new(x, y, z);
        let vertices = vec![
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(1., 1., 0.),
            v(0., 1., 0.),
            v(0., 0., 1.),
            v(1., 0., 1.),
            v(1., 1., 1.),
            v(0., 1., 1.),
        ];
        let quads = [
            [0, 3, 2, 1], // bottom (z=0), outward -z
            [4, 5, 6, 7], // top (z=1), outward +z
            [0, 1, 5, 4], // y=0, outward -y
            [2, 3, 7, 6], // y=1, outward +y
            [1, 2, 6, 5], // x=1, outward +x
            [3, 0, 4, 7], // x=0, outward -x
        ];
        let mut triangles = Vec::new();
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriMesh::new(vertices, triangles).unwrap()
    }
}
