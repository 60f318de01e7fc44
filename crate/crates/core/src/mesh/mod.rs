//! Triangle mesh with a mutable facet classification.
//!
//! Cells carry the displacement unknowns, facets carry the reconstructed
//! values. A facet that cracks keeps both neighbour indices (the two lips are
//! the same geometric object) and is simply flagged [`FacetStatus::Cracked`];
//! assembly and reconstruction then treat it as two one-sided traction-free
//! boundary facets.

mod dump;
mod generate;
mod gmsh;

use std::collections::HashMap;
use std::fmt;

use nalgebra::Vector2;
use thiserror::Error;

pub use dump::{format_mesh_dump, parse_mesh_dump, read_mesh_dump, write_mesh_dump};
pub use generate::{
    generate_slit_disk, generate_structured_strip, generate_unstructured, rectangle_tags, Circle,
    PlanarDomain, StripPattern,
};
pub use gmsh::{parse_gmsh_ascii, read_gmsh_ascii};

pub type Point = Vector2<f64>;

/// Index into [`Mesh::tag_names`].
pub type TagId = u32;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no cells")]
    Empty,
    #[error("cell {cell} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange { cell: usize, vertex: usize, count: usize },
    #[error("cell {cell} duplicates cell {original}")]
    DuplicateCell { cell: usize, original: usize },
    #[error("cell {cell} is inverted (signed area {area:e})")]
    InvertedCell { cell: usize, area: f64 },
    #[error("cell {cell} is degenerate (area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },
    #[error("facet ({a}, {b}) is shared by more than two cells: {cells:?}")]
    NonManifoldFacet { a: usize, b: usize, cells: Vec<usize> },
    #[error("cannot split facet {facet}: status is {status}")]
    SplitNonInterior { facet: usize, status: FacetStatus },
    #[error("unknown boundary tag `{0}`")]
    UnknownTag(String),
    #[error("generator: {0}")]
    Generator(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacetStatus {
    Interior,
    BoundaryDirichlet,
    BoundaryNeumann,
    Cracked,
}

impl FacetStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetStatus::Interior => "INTERIOR",
            FacetStatus::BoundaryDirichlet => "BOUNDARY_DIRICHLET",
            FacetStatus::BoundaryNeumann => "BOUNDARY_NEUMANN",
            FacetStatus::Cracked => "CRACKED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "INTERIOR" => Some(FacetStatus::Interior),
            "BOUNDARY_DIRICHLET" => Some(FacetStatus::BoundaryDirichlet),
            "BOUNDARY_NEUMANN" => Some(FacetStatus::BoundaryNeumann),
            "CRACKED" => Some(FacetStatus::Cracked),
            _ => None,
        }
    }
}

impl fmt::Display for FacetStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which displacement components a Dirichlet facet prescribes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ComponentMask(pub [bool; 2]);

impl ComponentMask {
    pub const ALL: ComponentMask = ComponentMask([true, true]);
    pub const NONE: ComponentMask = ComponentMask([false, false]);
    pub const X: ComponentMask = ComponentMask([true, false]);
    pub const Y: ComponentMask = ComponentMask([false, true]);

    pub fn constrains(&self, component: usize) -> bool {
        self.0[component]
    }
}

impl Default for ComponentMask {
    fn default() -> Self {
        ComponentMask::NONE
    }
}

/// One side of a facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Debug)]
pub struct Facet {
    pub vertices: [usize; 2],
    /// Cell on the minus side; the normal points away from it.
    pub minus: usize,
    /// Cell on the plus side, kept after cracking.
    pub plus: Option<usize>,
    pub status: FacetStatus,
    pub normal: Point,
    pub barycenter: Point,
    pub length: f64,
    pub tag: Option<TagId>,
    /// Prescribed components; meaningful only for Dirichlet facets.
    pub mask: ComponentMask,
}

impl Facet {
    /// Diameter `h_F` of the facet (the length, for a segment).
    pub fn diameter(&self) -> f64 {
        self.length
    }

    pub fn is_interior(&self) -> bool {
        self.status == FacetStatus::Interior
    }

    pub fn is_cracked(&self) -> bool {
        self.status == FacetStatus::Cracked
    }

    /// True for facets on the outer boundary of the domain (never cracks).
    pub fn is_exterior(&self) -> bool {
        self.plus.is_none()
    }

    pub fn side_of(&self, cell: usize) -> Option<Side> {
        if self.minus == cell {
            Some(Side::Minus)
        } else if self.plus == Some(cell) {
            Some(Side::Plus)
        } else {
            None
        }
    }

    pub fn cell_on(&self, side: Side) -> Option<usize> {
        match side {
            Side::Minus => Some(self.minus),
            Side::Plus => self.plus,
        }
    }

    /// The cell across an uncracked interior facet.
    pub fn neighbor_across(&self, cell: usize) -> Option<usize> {
        if !self.is_interior() {
            return None;
        }
        match self.side_of(cell)? {
            Side::Minus => self.plus,
            Side::Plus => Some(self.minus),
        }
    }

    pub fn has_vertex(&self, v: usize) -> bool {
        self.vertices[0] == v || self.vertices[1] == v
    }
}

/// The four disjoint facet classes at a given pseudo-time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FacetPartition {
    pub interior: Vec<usize>,
    pub dirichlet: Vec<usize>,
    pub neumann: Vec<usize>,
    pub crack: Vec<usize>,
}

impl FacetPartition {
    pub fn len(&self) -> usize {
        self.interior.len() + self.dirichlet.len() + self.neumann.len() + self.crack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    cell_facets: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    barycenters: Vec<Point>,
    areas: Vec<f64>,
    vertex_cells: Vec<Vec<usize>>,
    vertex_facets: Vec<Vec<usize>>,
    on_exterior: Vec<bool>,
    tag_names: Vec<String>,
}

/// Signed area of the triangle `(a, b, c)`.
pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Boundary tagging callback: receives the two facet endpoints and returns a
/// tag name, or `None` to leave the facet untagged.
pub trait TagRule: Fn(&Point, &Point) -> Option<String> {}
impl<F: Fn(&Point, &Point) -> Option<String>> TagRule for F {}

/// Builds a mesh from raw connectivity and tags the boundary facets.
pub fn build_mesh(
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    tag_rule: impl TagRule,
) -> Result<Mesh, MeshError> {
    if cells.is_empty() {
        return Err(MeshError::Empty);
    }
    let nv = vertices.len();
    let (lo, hi) = bounding_box(&vertices);
    let bbox_area = ((hi.x - lo.x) * (hi.y - lo.y)).max(f64::MIN_POSITIVE);

    let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
    let mut areas = Vec::with_capacity(cells.len());
    let mut barycenters = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        for &v in cell {
            if v >= nv {
                return Err(MeshError::VertexOutOfRange { cell: c, vertex: v, count: nv });
            }
        }
        let mut key = *cell;
        key.sort_unstable();
        if let Some(&original) = seen.get(&key) {
            return Err(MeshError::DuplicateCell { cell: c, original });
        }
        seen.insert(key, c);
        let [a, b, d] = cell.map(|v| vertices[v]);
        let area = signed_area(&a, &b, &d);
        if area.abs() <= 1e-14 * bbox_area {
            return Err(MeshError::DegenerateCell { cell: c, area });
        }
        if area < 0.0 {
            return Err(MeshError::InvertedCell { cell: c, area });
        }
        areas.push(area);
        barycenters.push((a + b + d) / 3.0);
    }

    let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(cells.len() * 2);
    let mut edge_order: Vec<(usize, usize)> = Vec::with_capacity(cells.len() * 2);
    for (c, cell) in cells.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (cell[k], cell[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = edge_cells.entry(key).or_default();
            if entry.is_empty() {
                edge_order.push(key);
            }
            entry.push(c);
        }
    }

    let mut facets = Vec::with_capacity(edge_order.len());
    let mut facet_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(edge_order.len());
    for key in edge_order {
        let owners = &edge_cells[&key];
        if owners.len() > 2 {
            return Err(MeshError::NonManifoldFacet { a: key.0, b: key.1, cells: owners.clone() });
        }
        let minus = owners[0];
        let plus = owners.get(1).copied();
        let (pa, pb) = (vertices[key.0], vertices[key.1]);
        let e = pb - pa;
        let length = e.norm();
        let barycenter = (pa + pb) * 0.5;
        let mut normal = Point::new(e.y, -e.x) / length;
        if normal.dot(&(barycenter - barycenters[minus])) < 0.0 {
            normal = -normal;
        }
        let status = if plus.is_some() { FacetStatus::Interior } else { FacetStatus::BoundaryNeumann };
        facet_index.insert(key, facets.len());
        facets.push(Facet {
            vertices: [key.0, key.1],
            minus,
            plus,
            status,
            normal,
            barycenter,
            length,
            tag: None,
            mask: ComponentMask::NONE,
        });
    }

    let cell_facets: Vec<[usize; 3]> = cells
        .iter()
        .map(|cell| {
            let mut out = [0; 3];
            for k in 0..3 {
                let (a, b) = (cell[k], cell[(k + 1) % 3]);
                out[k] = facet_index[&(a.min(b), a.max(b))];
            }
            out
        })
        .collect();

    let mut vertex_cells = vec![Vec::new(); nv];
    for (c, cell) in cells.iter().enumerate() {
        for &v in cell {
            vertex_cells[v].push(c);
        }
    }
    let mut vertex_facets = vec![Vec::new(); nv];
    let mut on_exterior = vec![false; nv];
    for (f, facet) in facets.iter().enumerate() {
        for &v in &facet.vertices {
            vertex_facets[v].push(f);
            if facet.plus.is_none() {
                on_exterior[v] = true;
            }
        }
    }

    let mut mesh = Mesh {
        vertices,
        cells,
        cell_facets,
        facets,
        barycenters,
        areas,
        vertex_cells,
        vertex_facets,
        on_exterior,
        tag_names: Vec::new(),
    };
    mesh.tag_boundary(tag_rule);
    Ok(mesh)
}

fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

impl Mesh {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_facets(&self, c: usize) -> &[usize; 3] {
        &self.cell_facets[c]
    }

    pub fn barycenter(&self, c: usize) -> Point {
        self.barycenters[c]
    }

    pub fn area(&self, c: usize) -> f64 {
        self.areas[c]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn vertex_facets(&self, v: usize) -> &[usize] {
        &self.vertex_facets[v]
    }

    /// True when `v` lies on the outer boundary of the domain.
    pub fn is_exterior_vertex(&self, v: usize) -> bool {
        self.on_exterior[v]
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Unit normal of facet `f` pointing out of cell `c`.
    pub fn outward_normal(&self, f: usize, c: usize) -> Point {
        let facet = &self.facets[f];
        if facet.minus == c {
            facet.normal
        } else {
            -facet.normal
        }
    }

    /// Cells adjacent to `c` through uncracked interior facets, in local
    /// facet order.
    pub fn interior_neighbors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_facets[c].iter().filter_map(move |&f| self.facets[f].neighbor_across(c))
    }

    /// Cells sharing at least one vertex with `c` (excluding `c`), sorted.
    pub fn vertex_neighbors(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cells[c]
            .iter()
            .flat_map(|&v| self.vertex_cells[v].iter().copied())
            .filter(|&o| o != c)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.tag_names.iter().position(|t| t == name).map(|i| i as TagId)
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        &self.tag_names[id as usize]
    }

    pub fn facet_tag_name(&self, f: usize) -> Option<&str> {
        self.facets[f].tag.map(|t| self.tag_name(t))
    }

    fn intern_tag(&mut self, name: &str) -> TagId {
        match self.tag_id(name) {
            Some(id) => id,
            None => {
                self.tag_names.push(name.to_string());
                (self.tag_names.len() - 1) as TagId
            }
        }
    }

    /// Re-tags every exterior boundary facet with `rule`. Facets for which
    /// the rule returns `None` keep their current tag.
    pub fn tag_boundary(&mut self, rule: impl TagRule) {
        for f in 0..self.facets.len() {
            if !self.facets[f].is_exterior() {
                continue;
            }
            let [a, b] = self.facets[f].vertices;
            if let Some(name) = rule(&self.vertices[a], &self.vertices[b]) {
                let id = self.intern_tag(&name);
                self.facets[f].tag = Some(id);
            }
        }
    }

    /// Sets the tag of a single facet (used by file readers).
    pub fn set_facet_tag(&mut self, f: usize, name: &str) {
        let id = self.intern_tag(name);
        self.facets[f].tag = Some(id);
    }

    /// Looks up the facet joining two vertices.
    pub fn find_facet(&self, a: usize, b: usize) -> Option<usize> {
        self.vertex_facets
            .get(a)?
            .iter()
            .copied()
            .find(|&f| self.facets[f].has_vertex(b) && a != b)
    }

    /// Marks every exterior facet carrying `tag` as Dirichlet on the masked
    /// components.
    pub fn set_dirichlet(&mut self, tag: &str, mask: ComponentMask) -> Result<usize, MeshError> {
        let id = self.tag_id(tag).ok_or_else(|| MeshError::UnknownTag(tag.to_string()))?;
        let mut count = 0;
        for facet in self.facets.iter_mut() {
            if facet.is_exterior() && facet.tag == Some(id) {
                facet.status = FacetStatus::BoundaryDirichlet;
                facet.mask = mask;
                count += 1;
            }
        }
        Ok(count)
    }

    /// Turns the interior facet `f` into a crack facet. Geometry is untouched.
    pub fn split_facet(&mut self, f: usize) -> Result<(), MeshError> {
        let facet = &mut self.facets[f];
        if facet.status != FacetStatus::Interior {
            return Err(MeshError::SplitNonInterior { facet: f, status: facet.status });
        }
        facet.status = FacetStatus::Cracked;
        Ok(())
    }

    /// Undoes [`split_facet`](Self::split_facet) when a crack cannot be
    /// completed.
    pub(crate) fn rollback_split(&mut self, f: usize) {
        debug_assert_eq!(self.facets[f].status, FacetStatus::Cracked);
        self.facets[f].status = FacetStatus::Interior;
    }

    /// Interior facets whose two endpoints both lie on `polyline`, ordered by
    /// arclength of their midpoint along it. Does not modify the mesh.
    pub fn facets_on_polyline(&self, polyline: &[Point], tol: f64) -> Vec<usize> {
        if polyline.len() < 2 {
            return Vec::new();
        }
        let on_line = |p: &Point| {
            polyline.windows(2).any(|w| point_segment_distance(p, &w[0], &w[1]) < tol)
        };
        let mut hits: Vec<(f64, usize)> = self
            .facets
            .iter()
            .enumerate()
            .filter(|(_, facet)| facet.is_interior())
            .filter(|(_, facet)| facet.vertices.iter().all(|&v| on_line(&self.vertices[v])))
            .map(|(f, facet)| (arclength_parameter(polyline, &facet.barycenter), f))
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits.into_iter().map(|(_, f)| f).collect()
    }

    pub fn partition(&self) -> FacetPartition {
        let mut p = FacetPartition::default();
        for (f, facet) in self.facets.iter().enumerate() {
            match facet.status {
                FacetStatus::Interior => p.interior.push(f),
                FacetStatus::BoundaryDirichlet => p.dirichlet.push(f),
                FacetStatus::BoundaryNeumann => p.neumann.push(f),
                FacetStatus::Cracked => p.crack.push(f),
            }
        }
        p
    }

    /// `|Σ_F |F| n_{F,c}|` relative to `Σ_F |F|` for cell `c`.
    pub fn normal_sum_defect(&self, c: usize) -> f64 {
        let mut sum = Point::zeros();
        let mut perimeter = 0.0;
        for &f in &self.cell_facets[c] {
            sum += self.outward_normal(f, c) * self.facets[f].length;
            perimeter += self.facets[f].length;
        }
        sum.norm() / perimeter
    }

    /// Sum of the lengths of the cracked facets.
    pub fn crack_length(&self) -> f64 {
        self.facets.iter().filter(|f| f.is_cracked()).map(|f| f.length).sum()
    }
}

/// Arclength coordinate of the projection of `p` onto `polyline`.
pub fn arclength_parameter(polyline: &[Point], p: &Point) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    let mut start = 0.0;
    for w in polyline.windows(2) {
        let ab = w[1] - w[0];
        let len = ab.norm();
        let t = if len > 0.0 { ((p - w[0]).dot(&ab) / (len * len)).clamp(0.0, 1.0) } else { 0.0 };
        let d = (p - (w[0] + ab * t)).norm();
        if d < best.0 {
            best = (d, start + t * len);
        }
        start += len;
    }
    best.1
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn unit_square() -> Mesh {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        build_mesh(v, vec![[0, 1, 2], [0, 2, 3]], rectangle_tags(0.0, 0.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn two_triangle_square() {
        let m = unit_square();
        assert_eq!(m.num_facets(), 5);
        let p = m.partition();
        assert_eq!(p.interior.len(), 1);
        assert_eq!(p.neumann.len(), 4);
        for c in 0..2 {
            assert!(m.normal_sum_defect(c) < 1e-12);
        }
        let f = p.interior[0];
        let facet = m.facet(f);
        let dir = m.barycenter(facet.plus.unwrap()) - m.barycenter(facet.minus);
        assert!(facet.normal.dot(&dir) > 0.0);
        assert!((facet.normal.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_triangle() {
        let v = vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)];
        let m = build_mesh(v, vec![[0, 1, 2]], |_: &Point, _: &Point| None).unwrap();
        let p = m.partition();
        assert_eq!(p.interior.len(), 0);
        assert_eq!(p.neumann.len(), 3);
        assert!((m.area(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_connectivity() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 0.5),
        ];
        let no_tags = |_: &Point, _: &Point| None;
        assert!(matches!(
            build_mesh(v.clone(), vec![[0, 1, 2], [1, 2, 0]], no_tags),
            Err(MeshError::DuplicateCell { cell: 1, original: 0 })
        ));
        assert!(matches!(
            build_mesh(v.clone(), vec![[0, 2, 1]], no_tags),
            Err(MeshError::InvertedCell { cell: 0, .. })
        ));
        // three cells on edge (0, 1), all positively oriented
        let v2 = vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.5),
            Point::new(-1.0, 0.5),
            Point::new(2.0, 0.5),
        ];
        assert!(matches!(
            build_mesh(v2, vec![[0, 2, 1], [0, 1, 3], [0, 4, 1]], no_tags),
            Err(MeshError::NonManifoldFacet { a: 0, b: 1, .. })
        ));
        assert!(matches!(
            build_mesh(
                vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)],
                vec![[0, 1, 2], [0, 1, 3]],
                no_tags
            ),
            Err(MeshError::DegenerateCell { cell: 0, .. })
        ));
        assert!(matches!(build_mesh(v, vec![], no_tags), Err(MeshError::Empty)));
    }

    #[test]
    fn split_updates_partition_only() {
        let mut m = unit_square();
        let f = m.partition().interior[0];
        let before: Vec<(f64, Point)> = (0..2).map(|c| (m.area(c), m.barycenter(c))).collect();
        let normal = m.facet(f).normal;
        m.split_facet(f).unwrap();
        let p = m.partition();
        assert!(p.interior.is_empty());
        assert_eq!(p.crack, vec![f]);
        assert_eq!(m.facet(f).normal, normal);
        for c in 0..2 {
            assert_eq!((m.area(c), m.barycenter(c)), before[c]);
        }
        assert!(matches!(m.split_facet(f), Err(MeshError::SplitNonInterior { .. })));
    }

    #[test]
    fn dirichlet_tagging() {
        let mut m = unit_square();
        assert_eq!(m.set_dirichlet("left", ComponentMask::ALL).unwrap(), 1);
        assert!(matches!(m.set_dirichlet("nowhere", ComponentMask::ALL), Err(MeshError::UnknownTag(_))));
        let p = m.partition();
        assert_eq!(p.dirichlet.len(), 1);
        assert_eq!(p.neumann.len(), 3);
    }
}
