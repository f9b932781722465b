//! Triangulations of the fluid domain and the one-dimensional trace grid on
//! the free surface.

mod generate;
mod io;
mod mapped;

pub use generate::{generate, grading_samples, triangulate, GradingParams, GradingSample};
pub use mapped::mapped_quadrilateral;

use serde::Serialize;

use crate::domain::{BoundaryTag, CornerPoint, DirichletInterval};
use crate::geom::{self, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

/// Linear triangulation with tagged boundary edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Distance from each vertex to the nearest domain corner.
    pub corner_distance: Vec<f64>,
    /// Free-surface intervals carried over from the domain.
    pub intervals: Vec<DirichletInterval>,
    /// Domain corners carried over from the domain.
    pub corners: Vec<CornerPoint>,
    /// Mesh vertex of each entry of `corners`.
    pub corner_vertices: Vec<usize>,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t`; positive for counterclockwise triples.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * geom::orient(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Smallest interior angle over all triangles, radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| triangle_min_angle(self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        geom::dist(self.vertices[e.v[0]], self.vertices[e.v[1]])
    }

    pub fn max_boundary_edge(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn min_boundary_edge(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest edge length over all triangles.
    pub fn min_edge(&self) -> f64 {
        let mut h = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                h = h.min(geom::dist(p[k], p[(k + 1) % 3]));
            }
        }
        h
    }

    /// Total length of the boundary edges tagged with `tag`.
    pub fn tagged_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges.iter().filter(|e| e.tag == tag).map(|e| self.edge_length(e)).sum()
    }

    /// Checks the structural invariants: positive areas, each boundary edge in
    /// exactly one triangle, every one-sided edge tagged, corners on vertices.
    pub fn check(&self) -> Result<(), String> {
        for t in 0..self.num_triangles() {
            if !(self.area(t) > 0.0) {
                return Err(format!("triangle {t} has non-positive area {}", self.area(t)));
            }
        }
        let counts = self.edge_counts();
        let mut tagged = std::collections::BTreeSet::new();
        for e in &self.boundary_edges {
            let key = sorted(e.v);
            if counts.get(&key) != Some(&1) {
                return Err(format!("boundary edge {:?} is not on exactly one triangle", e.v));
            }
            if !tagged.insert(key) {
                return Err(format!("boundary edge {:?} tagged twice", e.v));
            }
        }
        let open = counts.values().filter(|&&c| c == 1).count();
        if open != tagged.len() {
            return Err(format!("{open} one-sided edges but {} tagged boundary edges", tagged.len()));
        }
        if let Some((k, c)) = counts.iter().find(|(_, &c)| c > 2) {
            return Err(format!("edge {k:?} shared by {c} triangles"));
        }
        for (c, &v) in self.corners.iter().zip(&self.corner_vertices) {
            if self.vertices[v] != c.position() {
                return Err(format!("corner ({}, {}) is not a mesh vertex", c.x, c.z));
            }
        }
        Ok(())
    }

    fn edge_counts(&self) -> std::collections::BTreeMap<[usize; 2], usize> {
        let mut counts = std::collections::BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *counts.entry(sorted([tri[k], tri[(k + 1) % 3]])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Splits every triangle into four through its edge midpoints. Boundary
    /// tags and corners carry over, so the result is a nested refinement with
    /// half the edge lengths.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut corner_distance = self.corner_distance.clone();
        let corners: Vec<Point> = self.corners.iter().map(|c| c.position()).collect();
        let mut mids = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *mids.entry(sorted([a, b])).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                corner_distance.push(corners.iter().map(|&c| geom::dist(m, c)).fold(f64::INFINITY, f64::min));
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = midpoint(e.v[0], e.v[1], &mut vertices);
            boundary_edges.push(BoundaryEdge { v: [e.v[0], m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { v: [m, e.v[1]], tag: e.tag });
        }
        Mesh {
            vertices,
            triangles,
            boundary_edges,
            corner_distance,
            intervals: self.intervals.clone(),
            corners: self.corners.clone(),
            corner_vertices: self.corner_vertices.clone(),
        }
    }

    /// Vertex indices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.num_vertices()];
        for e in &self.boundary_edges {
            on[e.v[0]] = true;
            on[e.v[1]] = true;
        }
        on
    }
}

fn sorted(v: [usize; 2]) -> [usize; 2] {
    if v[0] <= v[1] {
        v
    } else {
        [v[1], v[0]]
    }
}


pub(crate) fn triangle_min_angle(p: [Point; 3]) -> f64 {
    (0..3)
        .map(|k| geom::interior_angle(p[(k + 2) % 3], p[k], p[(k + 1) % 3]))
        .map(|a| a.min(2.0 * std::f64::consts::PI - a))
        .fold(f64::INFINITY, f64::min)
}

/// Nodes of one free-surface component, ordered left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceComponent {
    pub interval: DirichletInterval,
    /// Mesh vertex indices.
    pub vertices: Vec<usize>,
    /// Abscissae, strictly increasing from `interval.a` to `interval.b`.
    pub x: Vec<f64>,
}

impl TraceComponent {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Element lengths.
    pub fn widths(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// The free-surface grid with a global numbering that concatenates the
/// components from left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceGrid {
    pub components: Vec<TraceComponent>,
    offsets: Vec<usize>,
}

impl TraceGrid {
    pub fn new(components: Vec<TraceComponent>) -> TraceGrid {
        let mut offsets = vec![0];
        for c in &components {
            offsets.push(offsets.last().unwrap() + c.len());
        }
        TraceGrid { components, offsets }
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Total number of trace nodes.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index range of component `j`.
    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Mesh vertex of every global trace node.
    pub fn mesh_vertices(&self) -> Vec<usize> {
        self.components.iter().flat_map(|c| c.vertices.iter().copied()).collect()
    }

    /// Abscissa of every global trace node.
    pub fn abscissae(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.x.iter().copied()).collect()
    }

    /// Total free-surface length.
    pub fn length(&self) -> f64 {
        self.components.iter().map(|c| c.interval.len()).sum()
    }

    pub fn mesh_vertex_of(&self, global: usize) -> usize {
        let j = self.component_of(global);
        self.components[j].vertices[global - self.offsets[j]]
    }

    pub fn component_of(&self, global: usize) -> usize {
        match self.offsets.binary_search(&global) {
            Ok(j) if j < self.components.len() => j,
            Ok(j) => j - 1,
            Err(j) => j - 1,
        }
    }
}

/// Builds the ordered free-surface grid from the Dirichlet-tagged edges.
pub fn boundary_trace_grid(mesh: &Mesh) -> TraceGrid {
    let components = mesh
        .intervals
        .iter()
        .enumerate()
        .map(|(j, iv)| {
            let mut verts: Vec<usize> = mesh
                .boundary_edges
                .iter()
                .filter(|e| e.tag == BoundaryTag::Dirichlet(j))
                .flat_map(|e| e.v)
                .collect();
            verts.sort_by(|&a, &b| mesh.vertices[a][0].total_cmp(&mesh.vertices[b][0]).then(a.cmp(&b)));
            verts.dedup();
            let x = verts.iter().map(|&v| mesh.vertices[v][0]).collect();
            TraceComponent { interval: iv.clone(), vertices: verts, x }
        })
        .collect();
    TraceGrid::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    #[test]
    fn component_lookup() {
        let spec = DomainSpec::two_object();
        let params = GradingParams::for_spec(&spec, 0.2, 1.0);
        let mesh = generate(&spec, &params).unwrap();
        let grid = boundary_trace_grid(&mesh);
        for j in 0..grid.num_components() {
            for g in grid.range(j) {
                assert_eq!(grid.component_of(g), j);
            }
        }
    }
}
