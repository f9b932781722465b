//! Structured meshes of quadrilateral domains through a bilinear map of the
//! unit square, graded toward the mixed corners.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geom::{self, Point};

use super::generate::{nearest_corner, tag_boundary};
use super::Mesh;

/// Grid abscissae on [0, 1] with power-law clustering toward the ends
/// flagged in `graded`.
fn graded_abscissae(n: usize, beta: f64, graded: (bool, bool)) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            match graded {
                (false, false) => t,
                (true, false) => t.powf(beta),
                (false, true) => 1.0 - (1.0 - t).powf(beta),
                (true, true) if t <= 0.5 => 0.5 * (2.0 * t).powf(beta),
                (true, true) => 1.0 - 0.5 * (2.0 - 2.0 * t).powf(beta),
            }
        })
        .collect()
}

/// Triangulates a domain whose boundary loop has exactly four straight
/// pieces. `n` cells span the longer pair of opposite sides; mixed corners
/// are graded with exponent `beta` in both parametric directions. Each cell
/// is split along its shorter diagonal.
pub fn mapped_quadrilateral(spec: &DomainSpec, n: usize, beta: f64) -> Result<Mesh> {
    spec.validate().into_result()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 cells per side, got {n}")));
    }
    if !(1.0..=4.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("grading exponent must lie in [1, 4], got {beta}")));
    }
    let pieces = spec.boundary_loop();
    if pieces.len() != 4 {
        return Err(Error::Mesh(format!("mapped meshing needs a four-sided domain, found {} sides", pieces.len())));
    }
    let graded = |p: Point| spec.mixed_corners().any(|c| geom::dist(c.position(), p) == 0.0);
    // Start the loop at a graded corner when there is one.
    let start = (0..4).find(|&k| graded(pieces[k].from)).unwrap_or(0);
    let q: Vec<Point> = (0..4).map(|k| pieces[(start + k) % 4].from).collect();
    let (p00, p10, p11, p01) = (q[0], q[1], q[2], q[3]);
    let lu = 0.5 * (geom::dist(p00, p10) + geom::dist(p01, p11));
    let lv = 0.5 * (geom::dist(p00, p01) + geom::dist(p10, p11));
    let scale = lu.max(lv);
    let nu = ((n as f64 * lu / scale).round() as usize).max(2);
    let nv = ((n as f64 * lv / scale).round() as usize).max(2);
    let us = graded_abscissae(nu, beta, (graded(p00) || graded(p01), graded(p10) || graded(p11)));
    let vs = graded_abscissae(nv, beta, (graded(p00) || graded(p10), graded(p01) || graded(p11)));

    let id = |i: usize, j: usize| j * (nu + 1) + i;
    let mut vertices = Vec::with_capacity((nu + 1) * (nv + 1));
    for &v in &vs {
        for &u in &us {
            let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
            vertices.push([
                w[0] * p00[0] + w[1] * p10[0] + w[2] * p11[0] + w[3] * p01[0],
                w[0] * p00[1] + w[1] * p10[1] + w[2] * p11[1] + w[3] * p01[1],
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let cells = if geom::dist(vertices[a], vertices[c]) <= geom::dist(vertices[b], vertices[d]) {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for mut t in cells {
                if geom::orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                    t.swap(1, 2);
                }
                triangles.push(t);
            }
        }
    }

    let corners: Vec<Point> = spec.corners.iter().map(|c| c.position()).collect();
    let corner_vertices = corners
        .iter()
        .map(|&c| {
            vertices
                .iter()
                .position(|&p| p == c)
                .ok_or_else(|| Error::Mesh(format!("corner ({}, {}) is not a grid vertex", c[0], c[1])))
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary_edges = tag_boundary(&vertices, &triangles, &pieces)?;
    let corner_distance = vertices.iter().map(|&p| nearest_corner(p, &corners)).collect();
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        corner_distance,
        intervals: spec.dirichlet_intervals.clone(),
        corners: spec.corners.clone(),
        corner_vertices,
    };
    mesh.check().map_err(Error::Mesh)?;
    Ok(mesh)
}
