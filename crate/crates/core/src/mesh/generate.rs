//! Corner-graded triangulation.
//!
//! Boundary nodes are placed along each straight piece of the boundary loop
//! by equidistributing `1/h`, where `h(r) = h0 · min(1, r/ρ0)^(1 − 1/β)` and
//! `r` is the distance to the nearest corner. Interior seeds come from the
//! leaves of a quadtree refined until each cell is no larger than `h` at its
//! centre. The constrained Delaunay triangulation and the angle-driven
//! refinement are delegated to `spade`.

use serde::Serialize;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{BoundaryEdge, Mesh};
use crate::domain::{BoundaryPiece, DomainSpec};
use crate::error::{Error, Result};
use crate::geom::{self, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradingParams {
    /// Target edge length away from corners.
    pub h0: f64,
    /// Grading exponent β; 1 gives a uniform mesh.
    pub grading_exponent: f64,
    /// Radius of the graded region around each corner.
    pub rho0: f64,
    /// Minimum interior angle requested from the refinement, degrees.
    pub min_angle_deg: f64,
}

impl GradingParams {
    pub fn new(h0: f64, grading_exponent: f64, rho0: f64) -> GradingParams {
        GradingParams { h0, grading_exponent, rho0, min_angle_deg: 20.0 }
    }

    /// Uses the default corner radius for `spec`.
    pub fn for_spec(spec: &DomainSpec, h0: f64, grading_exponent: f64) -> GradingParams {
        GradingParams::new(h0, grading_exponent, GradingParams::default_rho0(spec))
    }

    /// `min(1/4, R/2)` with `R` the smallest straight corner radius.
    pub fn default_rho0(spec: &DomainSpec) -> f64 {
        (0.5 * spec.min_corner_radius()).min(0.25)
    }

    pub fn validate(&self, spec: &DomainSpec) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return Err(Error::InvalidArgument(format!("h0 must be positive, got {}", self.h0)));
        }
        if !(1.0..=4.0).contains(&self.grading_exponent) {
            return Err(Error::InvalidArgument(format!(
                "grading exponent must lie in [1, 4], got {}",
                self.grading_exponent
            )));
        }
        let cap = 0.5 * spec.min_corner_radius();
        if !(self.rho0 > 0.0 && self.rho0 <= cap * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("rho0 must lie in (0, {cap}], got {}", self.rho0)));
        }
        if !(self.min_angle_deg > 0.0 && self.min_angle_deg < 34.0) {
            return Err(Error::InvalidArgument(format!(
                "minimum angle must lie in (0°, 34°), got {}",
                self.min_angle_deg
            )));
        }
        Ok(())
    }

    /// Edge length `h0 (h0/ρ0)^(β−1)` at which the grading law meets `h(r) = r`.
    pub fn first_edge(&self) -> f64 {
        self.h0 * (self.h0 / self.rho0).powf(self.grading_exponent - 1.0)
    }

    /// Target edge length at distance `r` from the nearest corner.
    pub fn size_at(&self, r: f64) -> f64 {
        let t = (r / self.rho0).min(1.0);
        self.h0 * t.max(1e-300).powf(1.0 - 1.0 / self.grading_exponent)
    }
}

/// Triangulates the domain. Identical inputs give identical meshes.
///
/// Fails when the structural invariants or the minimum-angle threshold cannot
/// be met.
pub fn generate(spec: &DomainSpec, params: &GradingParams) -> Result<Mesh> {
    let mesh = triangulate(spec, params)?;
    let min_angle = mesh.min_angle().to_degrees();
    // The refinement targets the exact threshold; allow for rounding.
    if min_angle < params.min_angle_deg - 1e-6 {
        return Err(Error::Mesh(format!(
            "minimum angle {min_angle:.3}° below the {}° threshold",
            params.min_angle_deg
        )));
    }
    Ok(mesh)
}

/// Same as [`generate`] without the final minimum-angle check.
pub fn triangulate(spec: &DomainSpec, params: &GradingParams) -> Result<Mesh> {
    spec.validate().into_result()?;
    params.validate(spec)?;
    let corners: Vec<Point> = spec.corners.iter().map(|c| c.position()).collect();
    let pieces = spec.boundary_loop();

    let mut boundary: Vec<Point> = Vec::new();
    for piece in &pieces {
        boundary.extend(sample_piece(piece, &corners, params));
    }
    let nb = boundary.len();
    let floor = (0..nb)
        .map(|i| geom::dist(boundary[i], boundary[(i + 1) % nb]))
        .fold(f64::INFINITY, f64::min);

    let polygon = spec.polygon();
    let seeds = quadtree_seeds(&polygon, &pieces, &corners, params, floor);

    let mut points: Vec<Point2<f64>> = boundary.iter().map(|p| Point2::new(p[0], p[1])).collect();
    points.extend(seeds.iter().map(|p| Point2::new(p[0], p[1])));
    let edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(points, edges)
        .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;

    let base = cdt.num_vertices();
    let refinement = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(params.min_angle_deg))
            .exclude_outer_faces(true)
            .with_max_additional_vertices(10 * base + 10_000),
    );
    if !refinement.refinement_complete {
        return Err(Error::Mesh(format!(
            "angle refinement to {}° did not complete within the vertex budget",
            params.min_angle_deg
        )));
    }
    let excluded: std::collections::HashSet<usize> =
        refinement.excluded_faces.iter().map(|f| f.index()).collect();

    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut triangles_raw: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix().index()) {
            continue;
        }
        let vs = face.vertices();
        triangles_raw.push([vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()]);
    }
    // Renumber vertices in spade's insertion order, keeping only used ones.
    for tri in &triangles_raw {
        for &v in tri {
            index[v] = 0;
        }
    }
    let mut vertices = Vec::new();
    for (k, v) in cdt.vertices().enumerate() {
        if index[k] == 0 {
            index[k] = vertices.len();
            let p = v.position();
            vertices.push([p.x, p.y]);
        }
    }
    let mut triangles: Vec<[usize; 3]> = triangles_raw.iter().map(|t| t.map(|v| index[v])).collect();
    for tri in &mut triangles {
        if geom::orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }

    let boundary_edges = tag_boundary(&vertices, &triangles, &pieces)?;
    let corner_distance = vertices
        .iter()
        .map(|&p| corners.iter().map(|&c| geom::dist(p, c)).fold(f64::INFINITY, f64::min))
        .collect();
    let corner_vertices = corners
        .iter()
        .map(|&c| {
            vertices
                .iter()
                .position(|&p| p == c)
                .ok_or_else(|| Error::Mesh(format!("corner ({}, {}) lost during triangulation", c[0], c[1])))
        })
        .collect::<Result<Vec<_>>>()?;

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

pub(crate) fn nearest_corner(p: Point, corners: &[Point]) -> f64 {
    corners.iter().map(|&c| geom::dist(p, c)).fold(f64::INFINITY, f64::min)
}

/// Nodes along `piece`, including `from` and excluding `to`.
///
/// Nodes march inwards from both ends with `s ← s + max(h(s), h_first)`, where
/// `h_first = h0 (h0/ρ0)^(β−1)` solves `h(r) = r`. Two pieces meeting at a
/// corner therefore get identical node distances near it, and consecutive
/// edges grow by at most a factor two. The gap left in the middle becomes
/// one edge of length between `h/2` and `3h/2`.
fn sample_piece(piece: &BoundaryPiece, corners: &[Point], params: &GradingParams) -> Vec<Point> {
    let len = piece.len();
    let d = geom::sub(piece.to, piece.from);
    let at = |s: f64| {
        let t = s / len;
        [piece.from[0] + t * d[0], piece.from[1] + t * d[1]]
    };
    let h_first = params.first_edge();
    let step = |s: f64| params.size_at(nearest_corner(at(s), corners)).max(h_first);
    let mut left = vec![0.0];
    let mut right = vec![len];
    let mut last_left = true;
    loop {
        let (sa, sb) = (*left.last().unwrap(), *right.last().unwrap());
        let (ha, hb) = (step(sa), step(sb));
        let gap = sb - sa;
        if gap <= 1.5 * ha.min(hb) {
            if gap < 0.5 * ha.min(hb) && left.len() + right.len() > 2 {
                if last_left && left.len() > 1 {
                    left.pop();
                } else if right.len() > 1 {
                    right.pop();
                } else {
                    left.pop();
                }
            }
            break;
        }
        if ha <= hb {
            left.push(sa + ha);
            last_left = true;
        } else {
            right.push(sb - hb);
            last_left = false;
        }
    }
    left.iter().chain(right[1..].iter().rev()).map(|&s| if s == 0.0 { piece.from } else { at(s) }).collect()
}

fn boundary_distance(p: Point, pieces: &[BoundaryPiece]) -> f64 {
    pieces
        .iter()
        .map(|q| geom::point_segment_distance(p, q.from, q.to))
        .fold(f64::INFINITY, f64::min)
}

fn quadtree_seeds(
    polygon: &[Point],
    pieces: &[BoundaryPiece],
    corners: &[Point],
    params: &GradingParams,
    floor: f64,
) -> Vec<Point> {
    let (mut xmin, mut xmax, mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in polygon {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        zmin = zmin.min(p[1]);
        zmax = zmax.max(p[1]);
    }
    let extent = (xmax - xmin).max(zmax - zmin);
    let mut root = params.h0;
    while root < extent {
        root *= 2.0;
    }
    let mut seeds = Vec::new();
    // Depth-first with a fixed child order, so the seed order is reproducible.
    let mut stack = vec![(xmin, zmin, root)];
    while let Some((x0, z0, s)) = stack.pop() {
        let c = [x0 + 0.5 * s, z0 + 0.5 * s];
        let inside = geom::point_in_polygon(c, polygon);
        let db = boundary_distance(c, pieces);
        if !inside && db > 0.7072 * s {
            continue;
        }
        let h = params.size_at(nearest_corner(c, corners));
        if s > h && 0.5 * s >= floor {
            let t = 0.5 * s;
            stack.push((x0 + t, z0 + t, t));
            stack.push((x0, z0 + t, t));
            stack.push((x0 + t, z0, t));
            stack.push((x0, z0, t));
            continue;
        }
        if inside && db >= 0.5 * s.max(h) {
            seeds.push(c);
        }
    }
    seeds
}

pub(crate) fn tag_boundary(vertices: &[Point], triangles: &[[usize; 3]], pieces: &[BoundaryPiece]) -> Result<Vec<BoundaryEdge>> {
    let mut count: std::collections::BTreeMap<[usize; 2], (usize, [usize; 2])> = std::collections::BTreeMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = if a < b { [a, b] } else { [b, a] };
            count.entry(key).or_insert((0, [a, b])).0 += 1;
        }
    }
    let scale = pieces.iter().map(|p| p.len()).fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(1.0);
    let mut edges = Vec::new();
    for (_, &(n, v)) in &count {
        if n != 1 {
            continue;
        }
        let (p, q) = (vertices[v[0]], vertices[v[1]]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let best = pieces
            .iter()
            .filter(|s| {
                geom::point_segment_distance(p, s.from, s.to) <= tol && geom::point_segment_distance(q, s.from, s.to) <= tol
            })
            .min_by(|a, b| {
                geom::point_segment_distance(mid, a.from, a.to).total_cmp(&geom::point_segment_distance(mid, b.from, b.to))
            })
            .ok_or_else(|| Error::Mesh(format!("boundary edge ({:?}, {:?}) lies on no boundary piece", p, q)))?;
        edges.push(BoundaryEdge { v, tag: best.tag });
    }
    Ok(edges)
}

/// Length of a boundary edge against the grading law at its midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradingSample {
    /// Distance from the edge midpoint to the nearest corner.
    pub r: f64,
    pub length: f64,
    pub target: f64,
}

impl GradingSample {
    pub fn ratio(&self) -> f64 {
        self.length / self.target
    }
}

pub fn grading_samples(mesh: &Mesh, params: &GradingParams) -> Vec<GradingSample> {
    let corners: Vec<Point> = mesh.corners.iter().map(|c| c.position()).collect();
    mesh.boundary_edges
        .iter()
        .map(|e| {
            let (p, q) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let r = nearest_corner(mid, &corners);
            GradingSample { r, length: geom::dist(p, q), target: params.size_at(r) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryTag;
    use crate::mesh::boundary_trace_grid;
    use std::f64::consts::PI;

    #[test]
    fn uniform_rectangle_size() {
        let spec = DomainSpec::rectangle();
        let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.1, 1.0)).unwrap();
        let n = mesh.num_triangles();
        // π / (√3/4 · h²) equilateral triangles of side h fill the area.
        let estimate = PI / (3f64.sqrt() / 4.0 * 0.01);
        assert!((600..=800).contains(&n), "{n} triangles, estimate {estimate:.0}");
        assert!((mesh.total_area() - PI).abs() < 1e-12);
        assert!(mesh.min_angle().to_degrees() >= 20.0 - 1e-6);
    }

    #[test]
    fn graded_rectangle_smallest_edge() {
        let spec = DomainSpec::rectangle();
        let params = GradingParams::for_spec(&spec, 0.1, 3.0);
        let mesh = generate(&spec, &params).unwrap();
        let bound = params.h0 * (params.h0 / params.rho0).powi(2);
        assert!(mesh.min_boundary_edge() <= 2.0 * bound, "{} vs {bound}", mesh.min_boundary_edge());
    }

    #[test]
    fn grading_law_within_factor_two() {
        for id in ["rectangle", "one-object", "sector"] {
            let spec = DomainSpec::builtin(id).unwrap();
            let params = GradingParams::for_spec(&spec, 0.08, 3.0);
            let mesh = generate(&spec, &params).unwrap();
            for s in grading_samples(&mesh, &params) {
                if s.r < params.rho0 {
                    assert!(s.ratio() > 0.5 && s.ratio() < 2.0, "{id}: {s:?}");
                }
            }
        }
    }

    #[test]
    fn refinement_triples_triangles_and_halves_edges() {
        let spec = DomainSpec::rectangle();
        let coarse = generate(&spec, &GradingParams::for_spec(&spec, 0.2, 3.0)).unwrap();
        let fine = generate(&spec, &GradingParams::for_spec(&spec, 0.1, 3.0)).unwrap();
        assert!(fine.num_triangles() >= 3 * coarse.num_triangles());
        assert!(fine.max_boundary_edge() <= 0.5 * coarse.max_boundary_edge() * 1.05);
    }

    #[test]
    fn dirichlet_lengths_are_exact() {
        for id in DomainSpec::BUILTIN_IDS {
            let spec = DomainSpec::builtin(id).unwrap();
            let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.15, 3.0)).unwrap();
            for (j, iv) in spec.dirichlet_intervals.iter().enumerate() {
                let l = mesh.tagged_length(BoundaryTag::Dirichlet(j));
                assert!((l - iv.len()).abs() < 1e-10, "{id} component {j}: {l} vs {}", iv.len());
            }
            let grid = boundary_trace_grid(&mesh);
            assert_eq!(grid.num_components(), spec.dirichlet_intervals.len());
            for c in &grid.components {
                assert_eq!(c.x[0], c.interval.a);
                assert_eq!(*c.x.last().unwrap(), c.interval.b);
                assert!(c.x.windows(2).all(|w| w[1] > w[0]));
                for &v in &c.vertices {
                    assert_eq!(mesh.vertices[v][1], 0.0);
                }
            }
        }
    }

    #[test]
    fn trace_grid_node_count() {
        let spec = DomainSpec::rectangle();
        let h0 = 0.1;
        let mesh = generate(&spec, &GradingParams::for_spec(&spec, h0, 1.0)).unwrap();
        let grid = boundary_trace_grid(&mesh);
        let expected = (PI / h0).ceil() as i64 + 1;
        assert!((grid.len() as i64 - expected).abs() <= 1, "{} nodes", grid.len());
        let on = mesh.boundary_vertices();
        let dirichlet: usize = (0..mesh.num_vertices())
            .filter(|&v| on[v] && mesh.vertices[v][1] == 0.0)
            .count();
        assert_eq!(dirichlet, grid.len());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DomainSpec::two_object();
        let params = GradingParams::for_spec(&spec, 0.15, 3.0);
        let a = generate(&spec, &params).unwrap();
        let b = generate(&spec, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_spec_is_rejected() {
        let mut spec = DomainSpec::rectangle();
        spec.dirichlet_intervals[0].b = spec.dirichlet_intervals[0].a;
        assert!(generate(&spec, &GradingParams::new(0.1, 1.0, 0.25)).is_err());
    }

    #[test]
    fn bad_params_are_rejected() {
        let spec = DomainSpec::rectangle();
        assert!(generate(&spec, &GradingParams::new(0.1, 5.0, 0.25)).is_err());
        assert!(generate(&spec, &GradingParams::new(0.1, 3.0, 0.9)).is_err());
        assert!(generate(&spec, &GradingParams::new(-1.0, 3.0, 0.25)).is_err());
    }
}
