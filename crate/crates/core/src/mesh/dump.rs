//! Plain-text mesh dump that round-trips the full facet state.
//!
//! ```text
//! VERTICES n
//! x y
//! CELLS m
//! a b c
//! TAGS t
//! name
//! FACETS k
//! a b minus plus status tag mask
//! ```
//!
//! `plus` and `tag` are `-1` when absent, `mask` is one of `-`, `x`, `y`,
//! `xy`. Coordinates carry 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::{build_mesh, ComponentMask, FacetStatus, Mesh, MeshError, Point};

fn mask_str(m: ComponentMask) -> &'static str {
    match m.0 {
        [true, true] => "xy",
        [true, false] => "x",
        [false, true] => "y",
        [false, false] => "-",
    }
}

fn parse_mask(s: &str) -> Option<ComponentMask> {
    match s {
        "xy" => Some(ComponentMask::ALL),
        "x" => Some(ComponentMask::X),
        "y" => Some(ComponentMask::Y),
        "-" => Some(ComponentMask::NONE),
        _ => None,
    }
}

pub fn format_mesh_dump(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "VERTICES {}", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:.16e} {:.16e}", p.x, p.y).unwrap();
    }
    writeln!(out, "CELLS {}", mesh.num_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(out, "{} {} {}", c[0], c[1], c[2]).unwrap();
    }
    writeln!(out, "TAGS {}", mesh.tag_names().len()).unwrap();
    for t in mesh.tag_names() {
        writeln!(out, "{t}").unwrap();
    }
    writeln!(out, "FACETS {}", mesh.num_facets()).unwrap();
    for f in mesh.facets() {
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            f.vertices[0],
            f.vertices[1],
            f.minus,
            f.plus.map_or(-1, |p| p as i64),
            f.status,
            f.tag.map_or(-1, |t| t as i64),
            mask_str(f.mask)
        )
        .unwrap();
    }
    out
}

struct Sections<'a> {
    origin: &'a str,
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Sections<'a> {
    fn err(&self, line: usize, message: &str) -> MeshError {
        MeshError::Parse { path: self.origin.to_string(), line, message: message.to_string() }
    }

    fn next(&mut self, name: &str) -> Result<Vec<(usize, &'a str)>, MeshError> {
        let last = self.lines.last().map_or(0, |x| x.0);
        let &(line, text) = self.lines.get(self.pos).ok_or_else(|| self.err(last, &format!("missing {name} section")))?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(line, &format!("expected {name} header")));
        }
        let n: usize = parts
            .next()
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| self.err(line, &format!("invalid {name} count")))?;
        let body = self
            .lines
            .get(self.pos + 1..self.pos + 1 + n)
            .ok_or_else(|| self.err(line, &format!("truncated {name} section")))?
            .to_vec();
        self.pos += 1 + n;
        Ok(body)
    }
}

fn fields<T: std::str::FromStr>(s: &Sections, line: usize, text: &str, n: usize) -> Result<Vec<T>, MeshError> {
    let v: Vec<T> = text
        .split_whitespace()
        .map(|w| w.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| s.err(line, "invalid number"))?;
    if v.len() != n {
        return Err(s.err(line, &format!("expected {n} fields")));
    }
    Ok(v)
}

pub fn parse_mesh_dump(origin: &str, text: &str) -> Result<Mesh, MeshError> {
    let lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    let mut s = Sections { origin, lines, pos: 0 };

    let mut vertices = Vec::new();
    for (i, l) in s.next("VERTICES")? {
        let v: Vec<f64> = fields(&s, i, l, 2)?;
        vertices.push(Point::new(v[0], v[1]));
    }
    let mut cells = Vec::new();
    for (i, l) in s.next("CELLS")? {
        let v: Vec<usize> = fields(&s, i, l, 3)?;
        cells.push([v[0], v[1], v[2]]);
    }
    let tags: Vec<String> = s.next("TAGS")?.iter().map(|&(_, l)| l.trim().to_string()).collect();
    let mut mesh = build_mesh(vertices, cells, |_: &Point, _: &Point| None)?;
    for name in &tags {
        mesh.intern_tag(name);
    }
    let body = s.next("FACETS")?;
    if body.len() != mesh.num_facets() {
        return Err(s.err(body.first().map_or(0, |x| x.0), "facet count does not match connectivity"));
    }
    for (i, l) in body {
        let w: Vec<&str> = l.split_whitespace().collect();
        if w.len() != 7 {
            return Err(s.err(i, "expected 7 fields"));
        }
        let a: usize = w[0].parse().map_err(|_| s.err(i, "invalid vertex"))?;
        let b: usize = w[1].parse().map_err(|_| s.err(i, "invalid vertex"))?;
        let f = mesh.find_facet(a, b).ok_or_else(|| s.err(i, "facet is not an edge of the mesh"))?;
        let status = FacetStatus::parse(w[4]).ok_or_else(|| s.err(i, "invalid facet status"))?;
        let tag: i64 = w[5].parse().map_err(|_| s.err(i, "invalid tag"))?;
        let mask = parse_mask(w[6]).ok_or_else(|| s.err(i, "invalid mask"))?;
        let facet = &mut mesh.facets[f];
        let interior = facet.plus.is_some();
        let consistent = match status {
            FacetStatus::Interior | FacetStatus::Cracked => interior,
            _ => !interior,
        };
        if !consistent {
            return Err(s.err(i, "facet status contradicts connectivity"));
        }
        facet.status = status;
        facet.mask = mask;
        facet.tag = match tag {
            -1 => None,
            t if t >= 0 && (t as usize) < tags.len() => Some(t as u32),
            _ => return Err(s.err(i, "tag index out of range")),
        };
    }
    Ok(mesh)
}

pub fn write_mesh_dump(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh_dump(mesh))
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })
}

pub fn read_mesh_dump(path: &Path) -> Result<Mesh, MeshError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io { path: display.clone(), source })?;
    parse_mesh_dump(&display, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_strip, StripPattern};

    #[test]
    fn round_trip_preserves_state() {
        let mut m = generate_structured_strip(2.0, 1.0, 0.5, StripPattern::Crossed).unwrap();
        m.set_dirichlet("left", ComponentMask::Y).unwrap();
        let f = m.partition().interior[3];
        m.split_facet(f).unwrap();
        let text = format_mesh_dump(&m);
        let back = parse_mesh_dump("mem", &text).unwrap();
        assert_eq!(format_mesh_dump(&back), text);
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.partition().crack, vec![f]);
    }

    #[test]
    fn reports_bad_line() {
        let m = generate_structured_strip(1.0, 1.0, 1.0, StripPattern::Diagonal).unwrap();
        let text = format_mesh_dump(&m).replace("CELLS 2\n0 1 3", "CELLS 2\n0 1 x");
        match parse_mesh_dump("mem", &text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }
}
