//! Plain-text mesh format.
//!
//! ```text
//! corner-waves-mesh v1
//! vertices N
//! x z corner_distance          (N lines)
//! triangles M
//! a b c                        (M lines, counterclockwise)
//! edges K
//! a b tag [j]                  (tag: dirichlet j | wetted j | bottom | wall)
//! intervals P
//! a b window_a window_b unbounded(0|1)
//! corners Q
//! x z angle side kind straight_radius truncation(0|1)
//! ```
//!
//! Reals are written with 17 significant digits so a dump reloads bit for
//! bit. `side` is `left`, `right` or `-`; `kind` is `surface-contact`,
//! `bottom-emergence` or `neumann`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{BoundaryEdge, Mesh};
use crate::domain::{BoundaryTag, CornerKind, CornerPoint, DirichletInterval, Side};
use crate::error::{Error, Result};

pub const HEADER: &str = "corner-waves-mesh v1";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Mesh {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{HEADER}").unwrap();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for (p, d) in self.vertices.iter().zip(&self.corner_distance) {
            writeln!(s, "{} {} {}", real(p[0]), real(p[1]), real(*d)).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "edges {}", self.boundary_edges.len()).unwrap();
        for e in &self.boundary_edges {
            writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag).unwrap();
        }
        writeln!(s, "intervals {}", self.intervals.len()).unwrap();
        for iv in &self.intervals {
            writeln!(
                s,
                "{} {} {} {} {}",
                real(iv.a),
                real(iv.b),
                real(iv.average_window.0),
                real(iv.average_window.1),
                u8::from(iv.originally_unbounded)
            )
            .unwrap();
        }
        writeln!(s, "corners {}", self.corners.len()).unwrap();
        for c in &self.corners {
            let side = match c.side {
                Some(Side::Left) => "left",
                Some(Side::Right) => "right",
                None => "-",
            };
            let kind = match c.kind {
                CornerKind::SurfaceContact => "surface-contact",
                CornerKind::BottomEmergence => "bottom-emergence",
                CornerKind::Neumann => "neumann",
            };
            writeln!(
                s,
                "{} {} {} {side} {kind} {} {}",
                real(c.x),
                real(c.z),
                real(c.angle),
                real(c.straight_radius),
                u8::from(c.truncation)
            )
            .unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut r = Reader { lines: text.lines().enumerate(), line: 0 };
        let head = r.next_line()?;
        if head.trim() != HEADER {
            return Err(r.err(format!("expected header `{HEADER}`")));
        }
        let nv = r.block("vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        let mut corner_distance = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f = r.fields(3)?;
            vertices.push([r.parse(f[0])?, r.parse(f[1])?]);
            corner_distance.push(r.parse(f[2])?);
        }
        let nt = r.block("triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f = r.fields(3)?;
            let t = [r.index(f[0], nv)?, r.index(f[1], nv)?, r.index(f[2], nv)?];
            triangles.push(t);
        }
        let ne = r.block("edges")?;
        let mut boundary_edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let line = r.next_line()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 3 {
                return Err(r.err("edge needs `a b tag [j]`".into()));
            }
            let v = [r.index(f[0], nv)?, r.index(f[1], nv)?];
            let tag = match (f[2], f.get(3)) {
                ("dirichlet", Some(j)) => BoundaryTag::Dirichlet(r.parse(j)?),
                ("wetted", Some(j)) => BoundaryTag::Wetted(r.parse(j)?),
                ("bottom", None) => BoundaryTag::Bottom,
                ("wall", None) => BoundaryTag::Wall,
                _ => return Err(r.err(format!("unknown edge tag `{}`", f[2..].join(" ")))),
            };
            boundary_edges.push(BoundaryEdge { v, tag });
        }
        let ni = r.block("intervals")?;
        let mut intervals = Vec::with_capacity(ni);
        for index in 0..ni {
            let f = r.fields(5)?;
            intervals.push(DirichletInterval {
                a: r.parse(f[0])?,
                b: r.parse(f[1])?,
                index,
                average_window: (r.parse(f[2])?, r.parse(f[3])?),
                originally_unbounded: r.flag(f[4])?,
            });
        }
        let nc = r.block("corners")?;
        let mut corners = Vec::with_capacity(nc);
        for _ in 0..nc {
            let f = r.fields(7)?;
            let side = match f[3] {
                "left" => Some(Side::Left),
                "right" => Some(Side::Right),
                "-" => None,
                other => return Err(r.err(format!("unknown corner side `{other}`"))),
            };
            let kind = match f[4] {
                "surface-contact" => CornerKind::SurfaceContact,
                "bottom-emergence" => CornerKind::BottomEmergence,
                "neumann" => CornerKind::Neumann,
                other => return Err(r.err(format!("unknown corner kind `{other}`"))),
            };
            corners.push(CornerPoint {
                x: r.parse(f[0])?,
                z: r.parse(f[1])?,
                angle: r.parse(f[2])?,
                side,
                kind,
                straight_radius: r.parse(f[5])?,
                truncation: r.flag(f[6])?,
            });
        }
        let corner_vertices = corners
            .iter()
            .map(|c| {
                vertices
                    .iter()
                    .position(|&p| p == c.position())
                    .ok_or_else(|| Error::MeshFormat { line: r.line, msg: format!("corner ({}, {}) is not a vertex", c.x, c.z) })
            })
            .collect::<Result<Vec<_>>>()?;
        let mesh = Mesh { vertices, triangles, boundary_edges, corner_distance, intervals, corners, corner_vertices };
        mesh.check().map_err(|msg| Error::MeshFormat { line: r.line, msg })?;
        Ok(mesh)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn err(&self, msg: String) -> Error {
        Error::MeshFormat { line: self.line, msg }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.lines.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(Error::MeshFormat { line: self.line + 1, msg: "unexpected end of file".into() }),
            }
        }
    }

    fn block(&mut self, name: &str) -> Result<usize> {
        let l = self.next_line()?;
        let mut f = l.split_whitespace();
        if f.next() != Some(name) {
            return Err(self.err(format!("expected `{name} <count>`")));
        }
        let n = f.next().ok_or_else(|| self.err(format!("missing {name} count")))?;
        self.parse(n)
    }

    fn fields(&mut self, n: usize) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != n {
            return Err(self.err(format!("expected {n} fields, found {}", f.len())));
        }
        Ok(f)
    }

    fn parse<T: FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn index(&self, s: &str, n: usize) -> Result<usize> {
        let i: usize = self.parse(s)?;
        if i >= n {
            return Err(self.err(format!("vertex index {i} out of range ({n} vertices)")));
        }
        Ok(i)
    }

    fn flag(&self, s: &str) -> Result<bool> {
        match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(self.err(format!("expected 0 or 1, found `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::mesh::{generate, GradingParams};

    #[test]
    fn round_trip_is_exact() {
        let spec = DomainSpec::one_object();
        let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.2, 3.0)).unwrap();
        let text = mesh.to_text();
        assert!(text.starts_with(HEADER));
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back, mesh);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_input_reports_line() {
        let spec = DomainSpec::rectangle();
        let mesh = generate(&spec, &GradingParams::for_spec(&spec, 0.5, 1.0)).unwrap();
        let text = mesh.to_text().replacen("triangles", "triangls", 1);
        match Mesh::from_text(&text) {
            Err(Error::MeshFormat { line, .. }) => assert_eq!(line, mesh.num_vertices() + 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Mesh::from_text("not a mesh").is_err());
    }
}
