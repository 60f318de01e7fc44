//! ASCII Gmsh reader (format versions 2.2 and 4.1).
//!
//! Only 2-node lines and 3-node triangles are accepted. Triangles become
//! cells (reoriented counter-clockwise); lines carrying a physical group tag
//! the matching facets with the group's name, or with its number when the
//! file has no `$PhysicalNames` section.

use std::collections::HashMap;
use std::path::Path;

use super::{build_mesh, signed_area, Mesh, MeshError, Point};

const LINE: u32 = 1;
const TRIANGLE: u32 = 2;

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a str, text: &'a str) -> Self {
        Lines { path, inner: text.lines().enumerate(), line: 0 }
    }

    fn err(&self, message: impl Into<String>) -> MeshError {
        MeshError::Parse { path: self.path.to_string(), line: self.line, message: message.into() }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some(t);
            }
        }
        None
    }

    fn expect_line(&mut self) -> Result<&'a str, MeshError> {
        self.next_line().ok_or_else(|| self.err("unexpected end of file"))
    }

    fn numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>, MeshError> {
        let l = self.expect_line()?;
        l.split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.err(format!("invalid number `{w}`"))))
            .collect()
    }

    fn expect_end(&mut self, section: &str) -> Result<(), MeshError> {
        let l = self.expect_line()?;
        if l != format!("$End{section}") {
            return Err(self.err(format!("expected $End{section}, found `{l}`")));
        }
        Ok(())
    }

    fn skip_section(&mut self, section: &str) -> Result<(), MeshError> {
        let end = format!("$End{section}");
        loop {
            if self.expect_line()? == end {
                return Ok(());
            }
        }
    }
}

#[derive(Default)]
struct Raw {
    nodes: HashMap<usize, Point>,
    triangles: Vec<([usize; 3], usize)>,
    lines: Vec<([usize; 2], Option<i64>, usize)>,
    names: HashMap<i64, String>,
}

fn need(l: &Lines, v: &[f64], n: usize) -> Result<(), MeshError> {
    if v.len() < n {
        return Err(l.err(format!("expected at least {n} fields, found {}", v.len())));
    }
    Ok(())
}

fn element_kind(l: &Lines, kind: u32) -> Result<(), MeshError> {
    match kind {
        LINE | TRIANGLE => Ok(()),
        other => Err(l.err(format!("unsupported element type {other}; only lines (1) and triangles (2) are allowed"))),
    }
}

fn physical_names(l: &mut Lines, raw: &mut Raw) -> Result<(), MeshError> {
    let n: usize = l.expect_line()?.parse().map_err(|_| l.err("invalid physical name count"))?;
    for _ in 0..n {
        let line = l.expect_line()?;
        let mut parts = line.splitn(3, char::is_whitespace);
        let dim: i64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| l.err("invalid physical dimension"))?;
        let tag: i64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| l.err("invalid physical tag"))?;
        let name = parts.next().ok_or_else(|| l.err("missing physical name"))?.trim().trim_matches('"');
        if dim == 1 {
            raw.names.insert(tag, name.to_string());
        }
    }
    l.expect_end("PhysicalNames")
}

fn v2_nodes(l: &mut Lines, raw: &mut Raw) -> Result<(), MeshError> {
    let n: usize = l.expect_line()?.parse().map_err(|_| l.err("invalid node count"))?;
    for _ in 0..n {
        let v: Vec<f64> = l.numbers()?;
        need(l, &v, 3)?;
        raw.nodes.insert(v[0] as usize, Point::new(v[1], v[2]));
    }
    l.expect_end("Nodes")
}

fn v2_elements(l: &mut Lines, raw: &mut Raw) -> Result<(), MeshError> {
    let n: usize = l.expect_line()?.parse().map_err(|_| l.err("invalid element count"))?;
    for _ in 0..n {
        let v: Vec<i64> = l.numbers()?;
        if v.len() < 3 {
            return Err(l.err("truncated element record"));
        }
        let kind = v[1] as u32;
        element_kind(l, kind)?;
        let ntags = v[2] as usize;
        let nodes = &v[3 + ntags..];
        let physical = if ntags > 0 { Some(v[3]) } else { None };
        match (kind, nodes.len()) {
            (TRIANGLE, 3) => raw.triangles.push(([nodes[0] as usize, nodes[1] as usize, nodes[2] as usize], l.line)),
            (LINE, 2) => raw.lines.push(([nodes[0] as usize, nodes[1] as usize], physical, l.line)),
            _ => return Err(l.err("wrong number of nodes for element")),
        }
    }
    l.expect_end("Elements")
}

fn v4_entities(l: &mut Lines) -> Result<HashMap<i64, i64>, MeshError> {
    let counts: Vec<usize> = l.numbers()?;
    if counts.len() < 4 {
        return Err(l.err("invalid entity counts"));
    }
    let mut curve_physical = HashMap::new();
    for _ in 0..counts[0] {
        l.expect_line()?;
    }
    for _ in 0..counts[1] {
        let v: Vec<f64> = l.numbers()?;
        need(l, &v, 8)?;
        let nphys = v[7] as usize;
        need(l, &v, 8 + nphys)?;
        if nphys > 0 {
            curve_physical.insert(v[0] as i64, v[8] as i64);
        }
    }
    for _ in 0..counts[2] + counts[3] {
        l.expect_line()?;
    }
    l.expect_end("Entities")?;
    Ok(curve_physical)
}

fn v4_nodes(l: &mut Lines, raw: &mut Raw) -> Result<(), MeshError> {
    let header: Vec<usize> = l.numbers()?;
    if header.len() < 2 {
        return Err(l.err("invalid $Nodes header"));
    }
    for _ in 0..header[0] {
        let block: Vec<usize> = l.numbers()?;
        if block.len() < 4 {
            return Err(l.err("invalid node block header"));
        }
        if block[2] != 0 {
            return Err(l.err("parametric nodes are not supported"));
        }
        let count = block[3];
        let mut tags = Vec::with_capacity(count);
        for _ in 0..count {
            tags.push(l.expect_line()?.parse::<usize>().map_err(|_| l.err("invalid node tag"))?);
        }
        for tag in tags {
            let v: Vec<f64> = l.numbers()?;
            need(l, &v, 2)?;
            raw.nodes.insert(tag, Point::new(v[0], v[1]));
        }
    }
    l.expect_end("Nodes")
}

fn v4_elements(l: &mut Lines, raw: &mut Raw, curve_physical: &HashMap<i64, i64>) -> Result<(), MeshError> {
    let header: Vec<usize> = l.numbers()?;
    if header.len() < 2 {
        return Err(l.err("invalid $Elements header"));
    }
    for _ in 0..header[0] {
        let block: Vec<i64> = l.numbers()?;
        if block.len() < 4 {
            return Err(l.err("invalid element block header"));
        }
        let (entity, kind, count) = (block[1], block[2] as u32, block[3] as usize);
        element_kind(l, kind)?;
        for _ in 0..count {
            let v: Vec<usize> = l.numbers()?;
            match (kind, v.len()) {
                (TRIANGLE, 4) => raw.triangles.push(([v[1], v[2], v[3]], l.line)),
                (LINE, 3) => raw.lines.push(([v[1], v[2]], curve_physical.get(&entity).copied(), l.line)),
                _ => return Err(l.err("wrong number of nodes for element")),
            }
        }
    }
    l.expect_end("Elements")
}

/// Parses Gmsh ASCII text; `origin` is used in error messages.
pub fn parse_gmsh_ascii(origin: &str, text: &str) -> Result<Mesh, MeshError> {
    let mut l = Lines::new(origin, text);
    let mut raw = Raw::default();
    let mut version: Option<u32> = None;
    let mut curve_physical = HashMap::new();
    while let Some(line) = l.next_line() {
        match line {
            "$MeshFormat" => {
                let head = l.expect_line()?;
                let v = head.split_whitespace().next().unwrap_or("");
                version = match v {
                    "2.2" => Some(2),
                    "4.1" => Some(4),
                    other => return Err(l.err(format!("unsupported Gmsh version `{other}`"))),
                };
                if head.split_whitespace().nth(1) != Some("0") {
                    return Err(l.err("binary Gmsh files are not supported"));
                }
                l.expect_end("MeshFormat")?;
            }
            "$PhysicalNames" => physical_names(&mut l, &mut raw)?,
            "$Entities" => curve_physical = v4_entities(&mut l)?,
            "$Nodes" => match version {
                Some(2) => v2_nodes(&mut l, &mut raw)?,
                Some(_) => v4_nodes(&mut l, &mut raw)?,
                None => return Err(l.err("$Nodes before $MeshFormat")),
            },
            "$Elements" => match version {
                Some(2) => v2_elements(&mut l, &mut raw)?,
                Some(_) => v4_elements(&mut l, &mut raw, &curve_physical)?,
                None => return Err(l.err("$Elements before $MeshFormat")),
            },
            other if other.starts_with('$') && !other.starts_with("$End") => {
                let section = other[1..].to_string();
                l.skip_section(&section)?;
            }
            other => return Err(l.err(format!("unexpected line `{other}`"))),
        }
    }
    if version.is_none() {
        return Err(l.err("missing $MeshFormat section"));
    }

    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(raw.triangles.len());
    for (tri, line) in &raw.triangles {
        let mut cell = [0; 3];
        for (k, node) in tri.iter().enumerate() {
            let p = *raw.nodes.get(node).ok_or_else(|| MeshError::Parse {
                path: origin.to_string(),
                line: *line,
                message: format!("unknown node {node}"),
            })?;
            cell[k] = *index.entry(*node).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
        }
        if signed_area(&vertices[cell[0]], &vertices[cell[1]], &vertices[cell[2]]) < 0.0 {
            cell.swap(1, 2);
        }
        cells.push(cell);
    }
    let mut mesh = build_mesh(vertices, cells, |_: &Point, _: &Point| None)?;
    for (nodes, physical, line) in &raw.lines {
        let Some(physical) = physical else { continue };
        let lookup = |n: &usize| index.get(n).copied();
        let facet = match (lookup(&nodes[0]), lookup(&nodes[1])) {
            (Some(a), Some(b)) => mesh.find_facet(a, b),
            _ => None,
        };
        let f = facet.ok_or_else(|| MeshError::Parse {
            path: origin.to_string(),
            line: *line,
            message: format!("line element ({}, {}) is not a triangle edge", nodes[0], nodes[1]),
        })?;
        let name = raw.names.get(physical).cloned().unwrap_or_else(|| physical.to_string());
        mesh.set_facet_tag(f, &name);
    }
    Ok(mesh)
}

/// Reads an ASCII Gmsh file from disk.
pub fn read_gmsh_ascii(path: &Path) -> Result<Mesh, MeshError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io { path: display.clone(), source })?;
    parse_gmsh_ascii(&display, &text)
}
