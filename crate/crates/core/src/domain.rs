//! Fluid-domain geometry: free-surface intervals, wetted object arcs, the
//! bottom curve, lateral walls and the corners where these pieces meet.
//!
//! The top of the domain lies on `z = 0` and alternates between Dirichlet
//! intervals (free surface) and wetted arcs of partially immersed objects.
//! The bottom is a polyline joining the two lateral ends of the top; when it
//! does not emerge at an end, a vertical Neumann wall closes the boundary.
//! Walls created by cutting an unbounded configuration are flagged as
//! truncation walls.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Point};

/// Tolerance used to decide whether two loop pieces are collinear.
const ANGLE_EPS: f64 = 1e-9;

/// Corner angles closer than this to 0, π (mixed corners) or 2π count as
/// tangential contact.
pub const MIN_CORNER_ANGLE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Left end of an object (right end of the free-surface interval before it).
    Left,
    /// Right end of an object (left end of the free-surface interval after it).
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerKind {
    /// The free surface meets an object or a vertical wall.
    SurfaceContact,
    /// The free surface meets the bottom.
    BottomEmergence,
    /// Two solid (Neumann) pieces meet.
    Neumann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub x: f64,
    pub z: f64,
    /// Interior fluid angle, radians.
    pub angle: f64,
    /// `None` for corners between two Neumann pieces.
    pub side: Option<Side>,
    pub kind: CornerKind,
    /// Radius within which both incident boundary pieces are straight.
    pub straight_radius: f64,
    /// Corner produced by a truncation wall; not a physical contact point.
    pub truncation: bool,
}

impl CornerPoint {
    pub fn position(&self) -> Point {
        [self.x, self.z]
    }

    /// Corner joining the free surface to a solid boundary.
    pub fn is_mixed(&self) -> bool {
        self.kind != CornerKind::Neumann
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletInterval {
    pub a: f64,
    pub b: f64,
    /// Zero-based position in the left-to-right ordering.
    pub index: usize,
    pub originally_unbounded: bool,
    /// Sub-interval over which the component average is taken.
    pub average_window: (f64, f64),
}

impl DirichletInterval {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b <= self.a
    }

    pub fn window_len(&self) -> f64 {
        self.average_window.1 - self.average_window.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(default)]
    pub left: bool,
    #[serde(default)]
    pub right: bool,
}

/// Boundary classification shared by the domain loop and the mesh edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Dirichlet(usize),
    Wetted(usize),
    Bottom,
    Wall,
}

impl BoundaryTag {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryTag::Dirichlet(_))
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryTag::Dirichlet(j) => write!(f, "dirichlet {j}"),
            BoundaryTag::Wetted(j) => write!(f, "wetted {j}"),
            BoundaryTag::Bottom => f.write_str("bottom"),
            BoundaryTag::Wall => f.write_str("wall"),
        }
    }
}

/// One straight piece of the counterclockwise boundary loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPiece {
    pub from: Point,
    pub to: Point,
    pub tag: BoundaryTag,
}

impl BoundaryPiece {
    pub fn len(&self) -> f64 {
        geom::dist(self.from, self.to)
    }

    pub fn is_empty(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub gravity: f64,
    pub dirichlet_intervals: Vec<DirichletInterval>,
    /// Per object, a polyline from its left to its right contact point.
    pub wetted_arcs: Vec<Vec<Point>>,
    /// Polyline joining the left end of the top boundary to its right end.
    pub bottom: Vec<Point>,
    pub corners: Vec<CornerPoint>,
    pub truncation: Option<Truncation>,
}

// ---------------------------------------------------------------------------
// JSON configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalConfig {
    Pair([f64; 2]),
    Full {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        average_window: Option<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectConfig {
    pub arc: Vec<Point>,
}

/// Serialized form of a [`DomainSpec`].
///
/// ```json
/// {"gravity": 1.0,
///  "dirichlet_intervals": [[-3, -0.5], {"a": 0.5, "b": 3, "average_window": [0.5, 1.5]}],
///  "objects": [{"arc": [[-0.5, 0], [-0.2, -0.3], [0.2, -0.3], [0.5, 0]]}],
///  "bottom": [[-3, -1], [3, -1]],
///  "truncation": {"left": true, "right": true}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub dirichlet_intervals: Vec<IntervalConfig>,
    #[serde(default)]
    pub objects: Vec<ObjectConfig>,
    pub bottom: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

fn default_gravity() -> f64 {
    1.0
}

impl DomainSpec {
    /// Builds the spec and derives corners and average windows. Geometric
    /// defects are not rejected here; see [`DomainSpec::validate`].
    pub fn from_config(cfg: &DomainConfig) -> DomainSpec {
        let trunc = cfg.truncation.unwrap_or_default();
        let n = cfg.dirichlet_intervals.len();
        let dirichlet_intervals = cfg
            .dirichlet_intervals
            .iter()
            .enumerate()
            .map(|(index, ic)| {
                let (a, b, window) = match *ic {
                    IntervalConfig::Pair([a, b]) => (a, b, None),
                    IntervalConfig::Full { a, b, average_window } => (a, b, average_window),
                };
                let left_cut = index == 0 && trunc.left;
                let right_cut = index + 1 == n && trunc.right;
                let originally_unbounded = left_cut || right_cut;
                let mid = 0.5 * (a + b);
                let average_window = match (window, left_cut, right_cut) {
                    (Some([wa, wb]), _, _) => (wa, wb),
                    (None, true, false) => (mid, b),
                    (None, false, true) => (a, mid),
                    _ => (a, b),
                };
                DirichletInterval { a, b, index, originally_unbounded, average_window }
            })
            .collect();
        let mut spec = DomainSpec {
            gravity: cfg.gravity,
            dirichlet_intervals,
            wetted_arcs: cfg.objects.iter().map(|o| o.arc.clone()).collect(),
            bottom: cfg.bottom.clone(),
            corners: Vec::new(),
            truncation: cfg.truncation,
        };
        spec.corners = spec.derive_corners();
        spec
    }

    pub fn to_config(&self) -> DomainConfig {
        DomainConfig {
            gravity: self.gravity,
            dirichlet_intervals: self
                .dirichlet_intervals
                .iter()
                .map(|iv| IntervalConfig::Full {
                    a: iv.a,
                    b: iv.b,
                    average_window: Some([iv.average_window.0, iv.average_window.1]),
                })
                .collect(),
            objects: self.wetted_arcs.iter().map(|arc| ObjectConfig { arc: arc.clone() }).collect(),
            bottom: self.bottom.clone(),
            truncation: self.truncation,
        }
    }

    pub fn from_json(text: &str) -> Result<DomainSpec> {
        let cfg: DomainConfig = serde_json::from_str(text)?;
        Ok(DomainSpec::from_config(&cfg))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_config())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DomainSpec> {
        DomainSpec::from_json(&std::fs::read_to_string(path)?)
    }

    fn truncated(&self) -> Truncation {
        self.truncation.unwrap_or_default()
    }

    pub fn x_left(&self) -> f64 {
        self.dirichlet_intervals.first().map_or(0.0, |iv| iv.a)
    }

    pub fn x_right(&self) -> f64 {
        self.dirichlet_intervals.last().map_or(0.0, |iv| iv.b)
    }

    /// Counterclockwise boundary loop made of straight pieces. Zero-length
    /// pieces are dropped.
    pub fn boundary_loop(&self) -> Vec<BoundaryPiece> {
        // Built clockwise (top left to right, then back along the bottom) and
        // reversed at the end.
        let mut cw: Vec<BoundaryPiece> = Vec::new();
        let mut push = |from: Point, to: Point, tag: BoundaryTag| {
            if from != to {
                cw.push(BoundaryPiece { from, to, tag });
            }
        };
        for (j, iv) in self.dirichlet_intervals.iter().enumerate() {
            push([iv.a, 0.0], [iv.b, 0.0], BoundaryTag::Dirichlet(j));
            if let Some(arc) = self.wetted_arcs.get(j) {
                for w in arc.windows(2) {
                    push(w[0], w[1], BoundaryTag::Wetted(j));
                }
            }
        }
        let top_right = [self.x_right(), 0.0];
        let top_left = [self.x_left(), 0.0];
        if let (Some(&first), Some(&last)) = (self.bottom.first(), self.bottom.last()) {
            push(top_right, last, BoundaryTag::Wall);
            for k in (1..self.bottom.len()).rev() {
                push(self.bottom[k], self.bottom[k - 1], BoundaryTag::Bottom);
            }
            push(first, top_left, BoundaryTag::Wall);
        }
        cw.reverse();
        cw.into_iter()
            .map(|p| BoundaryPiece { from: p.to, to: p.from, tag: p.tag })
            .collect()
    }

    /// Closed polygon (counterclockwise) of the boundary loop vertices.
    pub fn polygon(&self) -> Vec<Point> {
        self.boundary_loop().iter().map(|p| p.from).collect()
    }

    fn is_truncation_wall(&self, piece: &BoundaryPiece) -> bool {
        if piece.tag != BoundaryTag::Wall {
            return false;
        }
        let t = self.truncated();
        let x = piece.from[0];
        (t.left && x == self.x_left()) || (t.right && x == self.x_right())
    }

    fn derive_corners(&self) -> Vec<CornerPoint> {
        let pieces = self.boundary_loop();
        let m = pieces.len();
        let mut corners = Vec::new();
        if m < 3 {
            return corners;
        }
        for i in 0..m {
            let prev = &pieces[(i + m - 1) % m];
            let next = &pieces[i];
            let vertex = next.from;
            let angle = geom::interior_angle(prev.from, vertex, next.to);
            let prev_d = prev.tag.is_dirichlet();
            let next_d = next.tag.is_dirichlet();
            if prev_d == next_d && (angle - PI).abs() < ANGLE_EPS {
                continue;
            }
            let (kind, side, solid) = match (prev_d, next_d) {
                // Counterclockwise the top runs right to left, so a Dirichlet
                // piece arriving at the vertex lies to its right.
                (true, false) => (None, Some(Side::Right), next),
                (false, true) => (None, Some(Side::Left), prev),
                _ => (Some(CornerKind::Neumann), None, next),
            };
            let kind = kind.unwrap_or(match solid.tag {
                BoundaryTag::Bottom => CornerKind::BottomEmergence,
                _ => CornerKind::SurfaceContact,
            });
            let truncation = self.is_truncation_wall(prev) || self.is_truncation_wall(next);
            corners.push(CornerPoint {
                x: vertex[0],
                z: vertex[1],
                angle,
                side,
                kind,
                straight_radius: prev.len().min(next.len()),
                truncation,
            });
        }
        // Deterministic left-to-right, top-to-bottom order.
        corners.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.z.total_cmp(&a.z)));
        corners
    }

    /// Physical (non-truncation) corners joining the free surface to a solid.
    pub fn mixed_corners(&self) -> impl Iterator<Item = &CornerPoint> {
        self.corners.iter().filter(|c| c.is_mixed() && !c.truncation)
    }

    /// Smallest straight-segment radius over all corners.
    pub fn min_corner_radius(&self) -> f64 {
        self.corners
            .iter()
            .map(|c| c.straight_radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// Total length of the free surface.
    pub fn dirichlet_length(&self) -> f64 {
        self.dirichlet_intervals.iter().map(DirichletInterval::len).sum()
    }

    /// Horizontal translation. The free surface is pinned to `z = 0`, so this
    /// is the only rigid translation that keeps a spec admissible.
    pub fn translated(&self, dx: f64) -> DomainSpec {
        let shift = |p: &Point| [p[0] + dx, p[1]];
        let mut out = self.clone();
        for iv in &mut out.dirichlet_intervals {
            iv.a += dx;
            iv.b += dx;
            iv.average_window = (iv.average_window.0 + dx, iv.average_window.1 + dx);
        }
        out.wetted_arcs = self.wetted_arcs.iter().map(|a| a.iter().map(shift).collect()).collect();
        out.bottom = self.bottom.iter().map(shift).collect();
        for c in &mut out.corners {
            c.x += dx;
        }
        out
    }

    // -----------------------------------------------------------------------
    // Built-in geometries

    /// `[0, π] × [-1, 0]`, free surface on top, solid walls and bottom.
    pub fn rectangle() -> DomainSpec {
        DomainSpec::from_config(&DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([0.0, PI])],
            objects: vec![],
            bottom: vec![[0.0, -1.0], [PI, -1.0]],
            truncation: None,
        })
    }

    /// A trapezoidal hull with 45° walls in a truncated channel of depth 1.
    pub fn one_object() -> DomainSpec {
        DomainSpec::from_config(&DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([-3.0, -0.5]), IntervalConfig::Pair([0.5, 3.0])],
            objects: vec![ObjectConfig { arc: trapezoid_hull(-0.5, 0.5, 0.3) }],
            bottom: vec![[-3.0, -1.0], [3.0, -1.0]],
            truncation: Some(Truncation { left: true, right: true }),
        })
    }

    /// A box with vertical walls and a V-shaped wedge in a truncated channel.
    pub fn two_object() -> DomainSpec {
        DomainSpec::from_config(&DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![
                IntervalConfig::Pair([-4.0, -2.5]),
                IntervalConfig::Pair([-1.5, 1.5]),
                IntervalConfig::Pair([2.5, 4.0]),
            ],
            objects: vec![
                ObjectConfig { arc: vec![[-2.5, 0.0], [-2.5, -0.4], [-1.5, -0.4], [-1.5, 0.0]] },
                ObjectConfig { arc: vec![[1.5, 0.0], [2.0, -0.5], [2.5, 0.0]] },
            ],
            bottom: vec![[-4.0, -1.0], [4.0, -1.0]],
            truncation: Some(Truncation { left: true, right: true }),
        })
    }

    /// One hull and a plane beach of slope 1 emerging at `x = 3`.
    pub fn emerging_beach() -> DomainSpec {
        DomainSpec::from_config(&DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([-3.0, -0.5]), IntervalConfig::Pair([0.5, 3.0])],
            objects: vec![ObjectConfig { arc: trapezoid_hull(-0.5, 0.5, 0.3) }],
            bottom: vec![[-3.0, -1.0], [2.0, -1.0], [3.0, 0.0]],
            truncation: Some(Truncation { left: true, right: false }),
        })
    }

    /// A single mixed corner of opening `omega` at the origin: free surface on
    /// `[0, 1]`, a straight solid ray of length 1, closed on the right by a
    /// truncation wall.
    pub fn sector(omega: f64) -> DomainSpec {
        let (s, c) = omega.sin_cos();
        let depth = s.max(0.25);
        DomainSpec::from_config(&DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([0.0, 1.0])],
            objects: vec![],
            bottom: vec![[0.0, 0.0], [c, -s], [1.0, -depth]],
            truncation: Some(Truncation { left: false, right: true }),
        })
    }

    /// Looks up a built-in geometry by id.
    pub fn builtin(id: &str) -> Result<DomainSpec> {
        match id {
            "rectangle" => Ok(DomainSpec::rectangle()),
            "one-object" => Ok(DomainSpec::one_object()),
            "two-object" => Ok(DomainSpec::two_object()),
            "emerging-beach" => Ok(DomainSpec::emerging_beach()),
            "sector" => Ok(DomainSpec::sector(3.0 * PI / 4.0)),
            _ => Err(Error::UnknownGeometry(id.to_string())),
        }
    }

    pub const BUILTIN_IDS: [&'static str; 5] = ["rectangle", "one-object", "two-object", "sector", "emerging-beach"];
}

fn trapezoid_hull(xl: f64, xr: f64, depth: f64) -> Vec<Point> {
    vec![[xl, 0.0], [xl + depth, -depth], [xr - depth, -depth], [xr, 0.0]]
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub location: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: &'static str, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation { rule, location: location.into(), detail: detail.into() });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(|v| format!("{} at {}: {}", v.rule, v.location, v.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidDomain(msg))
    }
}

impl DomainSpec {
    /// Collects every violated geometric invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            rep.push("gravity", "spec", format!("gravity must be positive, got {}", self.gravity));
        }
        if self.dirichlet_intervals.is_empty() {
            rep.push("empty free surface", "spec", "no Dirichlet interval");
            return rep;
        }
        for (j, iv) in self.dirichlet_intervals.iter().enumerate() {
            let loc = format!("interval {j}");
            if !(iv.b > iv.a) {
                rep.push("interval length", &loc, format!("[{}, {}] is empty", iv.a, iv.b));
            }
            let (wa, wb) = iv.average_window;
            if !(wb > wa && wa >= iv.a && wb <= iv.b) {
                rep.push("average window", &loc, format!("window ({wa}, {wb}) not a sub-interval of [{}, {}]", iv.a, iv.b));
            }
            if j > 0 && !(iv.a > self.dirichlet_intervals[j - 1].b) {
                rep.push(
                    "interval ordering",
                    &loc,
                    format!("starts at {} before previous end {}", iv.a, self.dirichlet_intervals[j - 1].b),
                );
            }
        }
        let n = self.dirichlet_intervals.len();
        if self.wetted_arcs.len() + 1 != n {
            rep.push(
                "object count",
                "spec",
                format!("{} intervals need {} objects, found {}", n, n - 1, self.wetted_arcs.len()),
            );
        }
        for (j, arc) in self.wetted_arcs.iter().enumerate() {
            let loc = format!("object {j}");
            if arc.len() < 2 {
                rep.push("wetted arc", &loc, "arc needs at least two points");
                continue;
            }
            if let (Some(left), Some(right)) = (self.dirichlet_intervals.get(j), self.dirichlet_intervals.get(j + 1)) {
                if arc[0] != [left.b, 0.0] || *arc.last().unwrap() != [right.a, 0.0] {
                    rep.push("wetted arc", &loc, "arc endpoints must be the adjacent interval ends on z = 0");
                }
            }
            if arc[1..arc.len() - 1].iter().any(|p| !(p[1] < 0.0)) {
                rep.push("wetted arc", &loc, "interior arc points must lie in z < 0");
            }
        }
        match (self.bottom.first(), self.bottom.last()) {
            (Some(first), Some(last)) if self.bottom.len() >= 2 => {
                if first[0] != self.x_left() || first[1] > 0.0 {
                    rep.push("bottom", "left end", "bottom must start below the left end of the surface");
                }
                if last[0] != self.x_right() || last[1] > 0.0 {
                    rep.push("bottom", "right end", "bottom must end below the right end of the surface");
                }
                if self.bottom[1..self.bottom.len() - 1].iter().any(|p| !(p[1] < 0.0)) {
                    rep.push("bottom", "interior", "interior bottom points must lie in z < 0");
                }
            }
            _ => rep.push("bottom", "spec", "bottom needs at least two points"),
        }
        let t = self.truncated();
        if t.left && self.bottom.first().is_some_and(|p| p[1] == 0.0) {
            rep.push("truncation", "left", "truncated end has no wall");
        }
        if t.right && self.bottom.last().is_some_and(|p| p[1] == 0.0) {
            rep.push("truncation", "right", "truncated end has no wall");
        }
        if rep.is_valid() {
            self.check_loop(&mut rep);
        }
        rep
    }

    fn check_loop(&self, rep: &mut ValidationReport) {
        let pieces = self.boundary_loop();
        let m = pieces.len();
        for i in 0..m {
            for k in i + 1..m {
                let adjacent = k == i + 1 || (i == 0 && k == m - 1);
                let (p, q) = (&pieces[i], &pieces[k]);
                if adjacent {
                    // Adjacent pieces may only share their common vertex.
                    let folded = geom::cross(geom::sub(p.to, p.from), geom::sub(q.to, q.from)).abs() < 1e-14
                        && geom::dot(geom::sub(p.to, p.from), geom::sub(q.to, q.from)) < 0.0;
                    if folded {
                        rep.push("self intersection", format!("pieces {i}/{k}"), "boundary folds back on itself");
                    }
                    continue;
                }
                if geom::segments_intersect(p.from, p.to, q.from, q.to) {
                    rep.push(
                        "self intersection",
                        format!("pieces {i}/{k}"),
                        format!("{} crosses {}", p.tag, q.tag),
                    );
                }
            }
        }
        if geom::signed_area(&self.polygon()) <= 0.0 {
            rep.push("orientation", "loop", "boundary does not enclose a positive area");
        }
        for c in &self.corners {
            let loc = format!("corner ({}, {})", c.x, c.z);
            if c.is_mixed() {
                if !(c.angle > MIN_CORNER_ANGLE && c.angle < PI - MIN_CORNER_ANGLE) {
                    rep.push("corner angle out of (0,π)", loc.as_str(), format!("angle {}", c.angle));
                }
                if c.z != 0.0 {
                    rep.push("contact height", loc.as_str(), "surface corners must lie on z = 0");
                }
            } else if !(c.angle > MIN_CORNER_ANGLE && c.angle < 2.0 * PI - MIN_CORNER_ANGLE) {
                rep.push("corner angle out of (0,2π)", loc.as_str(), format!("angle {}", c.angle));
            }
            if !(c.straight_radius > 0.0) {
                rep.push("straight corner radius", loc.as_str(), "radius must be positive");
            }
        }
    }

    /// Recomputes every corner angle from its two incident straight pieces.
    pub fn corner_angles(&self) -> Result<Vec<(CornerPoint, f64)>> {
        let pieces = self.boundary_loop();
        let m = pieces.len();
        let mut out = Vec::with_capacity(self.corners.len());
        for c in &self.corners {
            let i = pieces
                .iter()
                .position(|p| p.from == c.position())
                .ok_or_else(|| Error::InvalidDomain(format!("corner ({}, {}) is not a loop vertex", c.x, c.z)))?;
            let prev = &pieces[(i + m - 1) % m];
            let next = &pieces[i];
            let shortest = prev.len().min(next.len());
            if shortest < c.straight_radius * (1.0 - 1e-12) {
                return Err(Error::InvalidDomain(format!(
                    "corner ({}, {}): incident segment of length {shortest} shorter than straight radius {}",
                    c.x, c.z, c.straight_radius
                )));
            }
            out.push((c.clone(), geom::interior_angle(prev.from, c.position(), next.to)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle_of(spec: &DomainSpec, x: f64, z: f64) -> f64 {
        spec.corner_angles()
            .unwrap()
            .into_iter()
            .find(|(c, _)| c.x == x && c.z == z)
            .map(|(_, w)| w)
            .expect("corner present")
    }

    #[test]
    fn builtins_validate() {
        for id in DomainSpec::BUILTIN_IDS {
            let spec = DomainSpec::builtin(id).unwrap();
            let rep = spec.validate();
            assert!(rep.is_valid(), "{id}: {:?}", rep.violations);
        }
        for omega in [PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 4.0] {
            assert!(DomainSpec::sector(omega).validate().is_valid());
        }
    }

    #[test]
    fn rectangle_corners() {
        let spec = DomainSpec::rectangle();
        assert_eq!(spec.corners.len(), 4);
        let top: Vec<_> = spec.mixed_corners().collect();
        assert_eq!(top.len(), 2);
        for c in top {
            assert_eq!(c.kind, CornerKind::SurfaceContact);
            assert!((c.angle - PI / 2.0).abs() < 1e-12);
            assert!(!c.truncation);
        }
        assert_eq!(spec.corners[0].side, Some(Side::Right));
        assert_eq!(spec.corners[1].side, None);
    }

    #[test]
    fn sloped_wall_and_beach_angles() {
        // Hull wall descending at 45° to the right of the surface.
        let spec = DomainSpec::one_object();
        assert!((angle_of(&spec, -0.5, 0.0) - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((angle_of(&spec, 0.5, 0.0) - 3.0 * PI / 4.0).abs() < 1e-12);
        let beach = DomainSpec::emerging_beach();
        assert!((angle_of(&beach, 3.0, 0.0) - PI / 4.0).abs() < 1e-12);
        let c = beach.corners.iter().find(|c| c.x == 3.0).unwrap();
        assert_eq!(c.kind, CornerKind::BottomEmergence);
        assert_eq!(c.side, Some(Side::Left));
        let two = DomainSpec::two_object();
        assert!((angle_of(&two, -2.5, 0.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sector_apex_angle() {
        for omega in [PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 4.0] {
            let spec = DomainSpec::sector(omega);
            assert!((angle_of(&spec, 0.0, 0.0) - omega).abs() < 1e-12);
            assert_eq!(spec.mixed_corners().count(), 1);
        }
    }

    #[test]
    fn stored_angles_match_recomputed() {
        for id in DomainSpec::BUILTIN_IDS {
            let spec = DomainSpec::builtin(id).unwrap();
            for (c, w) in spec.corner_angles().unwrap() {
                assert!((c.angle - w).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncated_windows_default_to_half_near_corner() {
        let spec = DomainSpec::one_object();
        let iv = &spec.dirichlet_intervals;
        assert!(iv[0].originally_unbounded && iv[1].originally_unbounded);
        assert_eq!(iv[0].average_window, (-1.75, -0.5));
        assert_eq!(iv[1].average_window, (0.5, 1.75));
        let two = DomainSpec::two_object();
        assert!(!two.dirichlet_intervals[1].originally_unbounded);
        assert_eq!(two.dirichlet_intervals[1].average_window, (-1.5, 1.5));
        // Truncation walls meet the surface at corners that do not count
        // as physical contact points.
        assert_eq!(spec.mixed_corners().count(), 2);
    }

    #[test]
    fn tangential_contact_is_reported() {
        let mut cfg = DomainSpec::one_object().to_config();
        cfg.objects[0].arc = vec![[-0.5, 0.0], [-0.3, 0.0], [0.0, -0.3], [0.5, 0.0]];
        let rep = DomainSpec::from_config(&cfg).validate();
        assert!(rep.has("wetted arc"), "{:?}", rep.violations);
        // Same hull with its arc check satisfied but a flat first segment
        // produces a straight angle at the contact point.
        let mut cfg = DomainSpec::one_object().to_config();
        cfg.objects[0].arc = vec![[-0.5, 0.0], [0.5, 0.0]];
        let spec = DomainSpec::from_config(&cfg);
        let rep = spec.validate();
        assert!(rep.has("self intersection") || rep.has("corner angle out of (0,π)"), "{:?}", rep.violations);
    }

    #[test]
    fn folded_arc_gives_zero_angle() {
        let mut cfg = DomainSpec::one_object().to_config();
        cfg.objects[0].arc = vec![[-0.5, 0.0], [-1.0, -1e-9], [0.0, -0.3], [0.5, 0.0]];
        let spec = DomainSpec::from_config(&cfg);
        let c = spec.corners.iter().find(|c| c.x == -0.5).unwrap();
        assert!(c.angle < 1e-6 || c.angle > 2.0 * PI - 1e-6);
        assert!(!spec.validate().is_valid());
    }

    #[test]
    fn overlapping_intervals_are_reported() {
        let cfg = DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([0.0, 2.0]), IntervalConfig::Pair([1.0, 3.0])],
            objects: vec![ObjectConfig { arc: vec![[2.0, 0.0], [1.5, -0.5], [1.0, 0.0]] }],
            bottom: vec![[0.0, -1.0], [3.0, -1.0]],
            truncation: None,
        };
        let rep = DomainSpec::from_config(&cfg).validate();
        assert!(rep.has("interval ordering"), "{:?}", rep.violations);
    }

    #[test]
    fn zero_length_interval_is_reported() {
        let cfg = DomainConfig {
            gravity: 1.0,
            dirichlet_intervals: vec![IntervalConfig::Pair([1.0, 1.0])],
            objects: vec![],
            bottom: vec![[1.0, -1.0], [1.0, -1.0]],
            truncation: None,
        };
        let rep = DomainSpec::from_config(&cfg).validate();
        assert!(rep.has("interval length"));
    }

    #[test]
    fn short_incident_segment_fails_angle_computation() {
        let mut spec = DomainSpec::rectangle();
        spec.corners[1].straight_radius = 5.0;
        assert!(spec.corner_angles().is_err());
    }

    #[test]
    fn json_round_trip_preserves_geometry() {
        let spec = DomainSpec::two_object();
        let back = DomainSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
        let text = r#"{"dirichlet_intervals": [[0, 3.141592653589793]], "bottom": [[0, -1], [3.141592653589793, -1]]}"#;
        let parsed = DomainSpec::from_json(text).unwrap();
        assert!(parsed.validate().is_valid());
        assert_eq!(parsed.gravity, 1.0);
    }

    #[test]
    fn angles_invariant_under_translation() {
        for id in DomainSpec::BUILTIN_IDS {
            let spec = DomainSpec::builtin(id).unwrap();
            let moved = spec.translated(1.37);
            let a = spec.corner_angles().unwrap();
            let b = moved.corner_angles().unwrap();
            for ((_, wa), (_, wb)) in a.iter().zip(&b) {
                assert!((wa - wb).abs() < 1e-12);
            }
        }
    }
}
