//! Deterministic synthetic test shapes: spheres, bumpy spheres and tori.

use super::PointCloud;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Kinds of generated shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Sphere,
    Torus,
    /// Unit sphere with a seeded smooth radial perturbation. The perturbation
    /// breaks eigenvalue multiplicity so eigenfunctions are sign-unique.
    BumpySphere,
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Self::Sphere),
            "torus" => Ok(Self::Torus),
            "bumpy_sphere" | "bumpy-sphere" | "bumpy" => Ok(Self::BumpySphere),
            other => Err(Error::Parse(format!("unknown shape kind '{other}'"))),
        }
    }
}

/// Generates a triangulated mesh with (approximately, exactly for spheres)
/// `resolution` vertices. Pure function of `(kind, resolution, seed)`.
///
/// Spheres use icosahedral subdivision when `resolution` is one of the
/// subdivision counts (12, 42, 162, 642, 2562, ...) and a Fibonacci point set
/// with a spherical Delaunay triangulation otherwise, so any vertex count is
/// reachable.
pub fn generate_shape(kind: ShapeKind, resolution: usize, seed: u64) -> Result<PointCloud> {
    if resolution < 12 {
        return Err(Error::DegenerateInput(format!(
            "resolution {resolution} too small to triangulate (need >= 12)"
        )));
    }
    match kind {
        ShapeKind::Sphere => {
            let (pts, tris) = sphere_mesh(resolution)?;
            let points = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i][j]);
            PointCloud::new(points, Some(tris), format!("sphere-{resolution}"))
        }
        ShapeKind::BumpySphere => {
            let (pts, tris) = sphere_mesh(resolution)?;
            let field = BumpField::seeded(seed);
            let points = DMatrix::from_fn(pts.len(), 3, |i, j| {
                let r = 1.0 + field.eval(&pts[i]);
                pts[i][j] * r
            });
            PointCloud::new(
                points,
                Some(tris),
                format!("bumpy_sphere-{resolution}-s{seed}"),
            )
        }
        ShapeKind::Torus => torus_mesh(resolution),
    }
}

/// Smooth seeded radial field: a small sum of plane-wave cosines.
struct BumpField {
    waves: Vec<([f64; 3], f64, f64)>, // (wave vector, phase, amplitude)
}

impl BumpField {
    fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x62756d70);
        let count = 6;
        let total_amp = 0.10;
        let mut waves = Vec::with_capacity(count);
        for _ in 0..count {
            let dir: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2])
                .sqrt()
                .max(1e-6);
            let freq = rng.gen_range(1.5..3.5);
            let k = [
                dir[0] / norm * freq,
                dir[1] / norm * freq,
                dir[2] / norm * freq,
            ];
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(0.5..1.0);
            waves.push((k, phase, amp));
        }
        let scale: f64 = total_amp / waves.iter().map(|w| w.2).sum::<f64>();
        for w in &mut waves {
            w.2 *= scale;
        }
        Self { waves }
    }

    fn eval(&self, x: &[f64; 3]) -> f64 {
        self.waves
            .iter()
            .map(|(k, phase, amp)| amp * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase).cos())
            .sum()
    }
}

fn sphere_mesh(resolution: usize) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    if let Some(level) = icosphere_level(resolution) {
        Ok(icosphere(level))
    } else {
        let pts = fibonacci_sphere(resolution);
        let tris = triangulate_sphere(&pts)?;
        Ok((pts, tris))
    }
}

/// Subdivision level `k` with `10 * 4^k + 2` vertices, if `resolution`
/// matches one.
fn icosphere_level(resolution: usize) -> Option<u32> {
    let mut v = 12usize;
    for k in 0..=8 {
        if v == resolution {
            return Some(k);
        }
        v = 10 * 4usize.pow(k + 1) + 2;
    }
    None
}

fn icosphere(level: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut pts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    for p in &mut pts {
        normalize(p);
    }
    let mut tris: Vec<[usize; 3]> = vec![
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
        let mut midpoints: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = *midpoints.entry(key).or_insert_with(|| {
                    let mut m = [
                        (pts[a][0] + pts[b][0]) / 2.0,
                        (pts[a][1] + pts[b][1]) / 2.0,
                        (pts[a][2] + pts[b][2]) / 2.0,
                    ];
                    normalize(&mut m);
                    pts.push(m);
                    pts.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([t[1], mid[1], mid[0]]);
            next.push([t[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        tris = next;
    }
    (pts, tris)
}

fn normalize(p: &mut [f64; 3]) {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p[0] /= n;
    p[1] /= n;
    p[2] /= n;
}

/// Evenly distributed points on the unit sphere (golden-angle spiral).
fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Spherical Delaunay triangulation of points in convex position on the unit
/// sphere, via stereographic projection from the first point.
///
/// The projection point's own triangle fan is recovered from the convex hull
/// of the projected set, which is exactly the link of the removed vertex.
fn triangulate_sphere(pts: &[[f64; 3]]) -> Result<Vec<[usize; 3]>> {
    if pts.len() < 4 {
        return Err(Error::DegenerateInput("too few points for a sphere".into()));
    }
    let pole = 0usize;
    // Rotation taking the pole to (0,0,1): rotate around axis = pole x e_z.
    let p = pts[pole];
    let rot = rotation_to_north(p);
    let mut planar = Vec::with_capacity(pts.len() - 1);
    let mut index_map = Vec::with_capacity(pts.len() - 1);
    for (i, q) in pts.iter().enumerate() {
        if i == pole {
            continue;
        }
        let r = apply_rot(&rot, q);
        let denom = 1.0 - r[2];
        if denom <= 1e-12 {
            return Err(Error::DegenerateInput(
                "coincident points at the projection pole".into(),
            ));
        }
        planar.push(delaunator::Point {
            x: r[0] / denom,
            y: r[1] / denom,
        });
        index_map.push(i);
    }
    let tri = delaunator::triangulate(&planar);
    if tri.triangles.is_empty() {
        return Err(Error::DegenerateInput(
            "sphere points are degenerate (collinear projection)".into(),
        ));
    }
    let mut out: Vec<[usize; 3]> = Vec::with_capacity(tri.triangles.len() / 3 + tri.hull.len());
    for t in tri.triangles.chunks(3) {
        out.push(orient_outward(
            pts,
            [index_map[t[0]], index_map[t[1]], index_map[t[2]]],
        ));
    }
    // Close the hole around the pole with a fan over the hull cycle.
    let hull = &tri.hull;
    for k in 0..hull.len() {
        let a = index_map[hull[k]];
        let b = index_map[hull[(k + 1) % hull.len()]];
        out.push(orient_outward(pts, [pole, a, b]));
    }
    validate_closed_surface(pts.len(), &out)?;
    Ok(out)
}

fn rotation_to_north(p: [f64; 3]) -> [[f64; 3]; 3] {
    let target = [0.0, 0.0, 1.0];
    let dot = p[2];
    if dot > 1.0 - 1e-12 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    if dot < -1.0 + 1e-12 {
        // Half-turn around x.
        return [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    }
    let axis = [
        p[1] * target[2] - p[2] * target[1],
        p[2] * target[0] - p[0] * target[2],
        p[0] * target[1] - p[1] * target[0],
    ];
    let s = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let u = [axis[0] / s, axis[1] / s, axis[2] / s];
    let c = dot;
    let t = 1.0 - c;
    [
        [
            c + u[0] * u[0] * t,
            u[0] * u[1] * t - u[2] * s,
            u[0] * u[2] * t + u[1] * s,
        ],
        [
            u[1] * u[0] * t + u[2] * s,
            c + u[1] * u[1] * t,
            u[1] * u[2] * t - u[0] * s,
        ],
        [
            u[2] * u[0] * t - u[1] * s,
            u[2] * u[1] * t + u[0] * s,
            c + u[2] * u[2] * t,
        ],
    ]
}

fn apply_rot(r: &[[f64; 3]; 3], p: &[f64; 3]) -> [f64; 3] {
    [
        r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
        r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
        r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
    ]
}

fn orient_outward(pts: &[[f64; 3]], t: [usize; 3]) -> [usize; 3] {
    let [a, b, c] = t;
    let u = [
        pts[b][0] - pts[a][0],
        pts[b][1] - pts[a][1],
        pts[b][2] - pts[a][2],
    ];
    let v = [
        pts[c][0] - pts[a][0],
        pts[c][1] - pts[a][1],
        pts[c][2] - pts[a][2],
    ];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let centroid = [
        (pts[a][0] + pts[b][0] + pts[c][0]) / 3.0,
        (pts[a][1] + pts[b][1] + pts[c][1]) / 3.0,
        (pts[a][2] + pts[b][2] + pts[c][2]) / 3.0,
    ];
    if n[0] * centroid[0] + n[1] * centroid[1] + n[2] * centroid[2] < 0.0 {
        [a, c, b]
    } else {
        [a, b, c]
    }
}

/// Checks that every edge is shared by exactly two triangles (a closed
/// manifold surface) and Euler's formula holds for genus zero.
fn validate_closed_surface(nv: usize, tris: &[[usize; 3]]) -> Result<()> {
    let mut edges: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    if edges.values().any(|&c| c != 2) {
        return Err(Error::DegenerateInput(
            "triangulation is not a closed surface".into(),
        ));
    }
    let euler = nv as i64 - edges.len() as i64 + tris.len() as i64;
    if euler != 2 {
        return Err(Error::DegenerateInput(format!(
            "sphere triangulation has Euler characteristic {euler}"
        )));
    }
    Ok(())
}

fn torus_mesh(resolution: usize) -> Result<PointCloud> {
    let major_r = 1.0;
    let minor_r = 0.4;
    // Grid aspect follows the radius ratio so cells stay near-square.
    let ratio = major_r / minor_r;
    let a = ((resolution as f64 * ratio).sqrt().round() as usize).max(3);
    let b = ((resolution as f64 / a as f64).round() as usize).max(3);
    let mut pts = Vec::with_capacity(a * b);
    for i in 0..a {
        let u = std::f64::consts::TAU * i as f64 / a as f64;
        for j in 0..b {
            let v = std::f64::consts::TAU * j as f64 / b as f64;
            let w = major_r + minor_r * v.cos();
            pts.push([w * u.cos(), w * u.sin(), minor_r * v.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (i % a) * b + (j % b);
    let mut tris = Vec::with_capacity(2 * a * b);
    for i in 0..a {
        for j in 0..b {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let points = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i][j]);
    PointCloud::new(points, Some(tris), format!("torus-{resolution}"))
}

/// Euler characteristic of a triangulated mesh (V - E + F with unique
/// undirected edges).
pub fn euler_characteristic(cloud: &PointCloud) -> Option<i64> {
    let tris = cloud.triangles()?;
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for t in tris {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    Some(cloud.len() as i64 - edges.len() as i64 + tris.len() as i64)
}
