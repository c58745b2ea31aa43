//! Procedural meshes used by tests, benchmarks and the sample data.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::TriMesh;

/// Banana-like mesh: a tapered, slightly lobed tube swept along a circular
/// arc in the x-y plane, closed by a tip vertex at each end. Roughly
/// 190 mm long and 40 mm thick, centred near the origin.
pub fn banana(rings: usize, segments: usize) -> TriMesh<f64> {
    let rings = rings.max(3);
    let segments = segments.max(3);
    let arc_radius = 150.0;
    let arc_angle = 75f64.to_radians();
    let max_radius = 19.0;

    let frame = |s: f64| {
        let theta = (s - 0.5) * arc_angle;
        let center = Vector3::new(arc_radius * theta.sin(), arc_radius * (theta.cos() - 1.0), 0.0);
        let tangent = Vector3::new(theta.cos(), -theta.sin(), 0.0);
        let normal = Vector3::new(theta.sin(), theta.cos(), 0.0);
        (center, tangent, normal)
    };

    let mut vertices = Vec::with_capacity(rings * segments + 2);
    for i in 0..rings {
        let s = 0.04 + 0.92 * i as f64 / (rings - 1) as f64;
        let (center, _, normal) = frame(s);
        let binormal = Vector3::z();
        let taper = max_radius * (0.12 + 0.88 * (PI * s).sin().powf(0.7));
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            // Five ridges plus a one-sided bulge break every mirror symmetry.
            let lobe = 1.0 + 0.06 * (5.0 * phi).cos() + 0.08 * (phi + 0.4).sin();
            let r = taper * lobe;
            vertices.push(center + (normal * phi.cos() + binormal * phi.sin()) * r);
        }
    }
    let (c0, t0, _) = frame(0.0);
    let (c1, t1, _) = frame(1.0);
    let stem = vertices.len();
    vertices.push(c0 - t0 * 4.0);
    let tip = vertices.len();
    vertices.push(c1 + t1 * 1.0);

    let mut faces = Vec::with_capacity(2 * rings * segments);
    let at = |i: usize, j: usize| i * segments + j % segments;
    for i in 0..rings - 1 {
        for j in 0..segments {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    for j in 0..segments {
        faces.push([stem, at(0, j + 1), at(0, j)]);
        faces.push([tip, at(rings - 1, j), at(rings - 1, j + 1)]);
    }
    TriMesh::new(vertices, faces).expect("procedural banana is valid")
}

/// UV sphere centred at the origin.
pub fn uv_sphere(radius: f64, stacks: usize, slices: usize) -> TriMesh<f64> {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut vertices = vec![Vector3::new(0.0, 0.0, radius)];
    for i in 1..stacks {
        let polar = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let az = 2.0 * PI * j as f64 / slices as f64;
            vertices.push(Vector3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()) * radius);
        }
    }
    let south = vertices.len();
    vertices.push(Vector3::new(0.0, 0.0, -radius));

    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;
    let mut faces = Vec::new();
    for j in 0..slices {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("procedural sphere is valid")
}
