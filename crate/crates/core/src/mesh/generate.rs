//! Mesh generators for the built-in scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{build_mesh, point_segment_distance, Mesh, MeshError, Point};

/// Ratio between the nominal mesh size `h` (largest cell diameter) and the
/// point spacing used by [`generate_unstructured`].
const UNSTRUCTURED_SPACING_RATIO: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripPattern {
    /// Each square cut along one diagonal (2 triangles).
    Diagonal,
    /// Each square cut by both diagonals through an added centre vertex
    /// (4 triangles).
    #[default]
    Crossed,
}

/// Tags the four sides of an axis-aligned rectangle as `left`, `right`,
/// `bottom` and `top`.
pub fn rectangle_tags(x0: f64, y0: f64, x1: f64, y1: f64) -> impl Fn(&Point, &Point) -> Option<String> + Clone {
    let tol = 1e-9 * ((x1 - x0).hypot(y1 - y0));
    move |a: &Point, b: &Point| {
        let both = |f: &dyn Fn(&Point) -> bool| f(a) && f(b);
        if both(&|p| (p.x - x0).abs() < tol) {
            Some("left".into())
        } else if both(&|p| (p.x - x1).abs() < tol) {
            Some("right".into())
        } else if both(&|p| (p.y - y0).abs() < tol) {
            Some("bottom".into())
        } else if both(&|p| (p.y - y1).abs() < tol) {
            Some("top".into())
        } else {
            None
        }
    }
}

fn divisions(length: f64, h: f64, what: &str) -> Result<usize, MeshError> {
    if !(length > 0.0 && h > 0.0) {
        return Err(MeshError::Generator(format!("{what} and h must be positive")));
    }
    let n = (length / h).round();
    if n < 1.0 || (n * h - length).abs() > 1e-9 * length {
        return Err(MeshError::Generator(format!("h = {h} does not divide {what} = {length}")));
    }
    Ok(n as usize)
}

/// Structured triangulation of `[0, length] x [0, height]` with squares of
/// side `h`. Boundary facets are tagged `left`/`right`/`bottom`/`top`.
pub fn generate_structured_strip(
    length: f64,
    height: f64,
    h: f64,
    pattern: StripPattern,
) -> Result<Mesh, MeshError> {
    let nx = divisions(length, h, "L")?;
    let ny = divisions(height, h, "H")?;
    let dx = length / nx as f64;
    let dy = height / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(i as f64 * dx, j as f64 * dy));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match pattern {
                StripPattern::Diagonal => {
                    cells.push([a, b, c]);
                    cells.push([a, c, d]);
                }
                StripPattern::Crossed => {
                    let m = vertices.len();
                    vertices.push(Point::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy));
                    cells.extend_from_slice(&[[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
                }
            }
        }
    }
    build_mesh(vertices, cells, rectangle_tags(0.0, 0.0, length, height))
}

/// Disk of radius `radius` centred at the origin with a slit along the
/// negative x-axis; the crack tip is the centre. Rings of `rings` layers,
/// ring `k` carrying `6k` segments, give `6 rings²` cells.
///
/// Tags: `outer` on the circle, `lip_upper`/`lip_lower` on the two slit
/// lips (whose vertices are duplicated).
pub fn generate_slit_disk(radius: f64, rings: usize) -> Result<Mesh, MeshError> {
    if rings == 0 || !(radius > 0.0) {
        return Err(MeshError::Generator("slit disk needs radius > 0 and rings >= 1".into()));
    }
    let mut vertices = vec![Point::zeros()];
    let mut ring_ids: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let m = 6 * k;
        let ids: Vec<usize> = (0..=m)
            .map(|j| {
                let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                let p = if j == 0 || j == m {
                    Point::new(-r, 0.0)
                } else {
                    Point::new(r * theta.cos(), r * theta.sin())
                };
                vertices.push(p);
                vertices.len() - 1
            })
            .collect();
        ring_ids.push(ids);
    }
    let mut cells = Vec::new();
    for k in 1..=rings {
        let inner = &ring_ids[k - 1];
        let outer = &ring_ids[k];
        let (mi, mo) = (inner.len() - 1, outer.len() - 1);
        if mi == 0 {
            for j in 0..mo {
                cells.push([inner[0], outer[j], outer[j + 1]]);
            }
            continue;
        }
        let (mut i, mut j) = (0, 0);
        while i < mi || j < mo {
            let advance_outer = i == mi || (j < mo && (j + 1) * mi <= (i + 1) * mo);
            if advance_outer {
                cells.push([inner[i], outer[j], outer[j + 1]]);
                j += 1;
            } else {
                cells.push([inner[i], outer[j], inner[i + 1]]);
                i += 1;
            }
        }
    }
    let tol = 1e-9 * radius;
    let mut mesh = build_mesh(vertices, cells, move |a: &Point, b: &Point| {
        if (a.norm() - radius).abs() < tol && (b.norm() - radius).abs() < tol {
            Some("outer".to_string())
        } else {
            None
        }
    })?;
    tag_lips(&mut mesh);
    Ok(mesh)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
    pub tag: String,
}

/// Rectangle with circular holes and interior constraint polylines
/// (typically an initial crack), for the unstructured generator.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlanarDomain {
    pub min: [f64; 2],
    pub max: [f64; 2],
    #[serde(default)]
    pub holes: Vec<Circle>,
    #[serde(default)]
    pub constraints: Vec<Vec<[f64; 2]>>,
}

impl PlanarDomain {
    pub fn rectangle(width: f64, height: f64) -> Self {
        PlanarDomain { min: [0.0, 0.0], max: [width, height], ..Default::default() }
    }

    fn contains(&self, p: &Point) -> bool {
        p.x > self.min[0] && p.x < self.max[0] && p.y > self.min[1] && p.y < self.max[1]
            && self.holes.iter().all(|c| (p - pt(c.center)).norm() > c.radius)
    }
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

fn subdivide(a: Point, b: Point, spacing: f64) -> Vec<Point> {
    let n = ((b - a).norm() / spacing).ceil().max(1.0) as usize;
    (0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect()
}

/// Unstructured Delaunay mesh of `domain` with nominal cell diameter `h`.
/// Interior points come from a jittered triangular lattice seeded by `seed`;
/// hole boundaries and constraint polylines are resolved exactly.
///
/// Rectangle sides are tagged as in [`rectangle_tags`], hole boundaries with
/// the hole's tag.
pub fn generate_unstructured(domain: &PlanarDomain, h: f64, seed: u64) -> Result<Mesh, MeshError> {
    let (x0, y0, x1, y1) = (domain.min[0], domain.min[1], domain.max[0], domain.max[1]);
    if !(h > 0.0 && x1 > x0 && y1 > y0) {
        return Err(MeshError::Generator("unstructured domain needs h > 0 and a non-empty box".into()));
    }
    let s = h / UNSTRUCTURED_SPACING_RATIO;
    let tol = 1e-9 * (x1 - x0).hypot(y1 - y0);

    // polylines that must appear as mesh edges
    let mut chains: Vec<Vec<Point>> = Vec::new();
    let corners = [Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
    let anchors: Vec<Point> = domain.constraints.iter().flat_map(|c| c.iter().map(|&p| pt(p))).collect();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let dir = (b - a).normalize();
        let mut stops: Vec<f64> = vec![0.0, (b - a).norm()];
        for p in &anchors {
            if point_segment_distance(p, &a, &b) < tol {
                stops.push((p - a).dot(&dir));
            }
        }
        stops.sort_by(f64::total_cmp);
        stops.dedup_by(|x, y| (*x - *y).abs() < tol);
        for w in stops.windows(2) {
            chains.push(subdivide(a + dir * w[0], a + dir * w[1], s));
        }
    }
    for hole in &domain.holes {
        let n = ((2.0 * std::f64::consts::PI * hole.radius / s).ceil() as usize).max(8);
        let c = pt(hole.center);
        let ring: Vec<Point> = (0..=n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i % n) as f64 / n as f64;
                c + Point::new(t.cos(), t.sin()) * hole.radius
            })
            .collect();
        chains.push(ring);
    }
    for poly in &domain.constraints {
        for w in poly.windows(2) {
            chains.push(subdivide(pt(w[0]), pt(w[1]), s));
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: &Point| {
        cdt.insert(Point2::new(p.x, p.y))
            .map_err(|e| MeshError::Generator(format!("point insertion failed at ({}, {}): {e:?}", p.x, p.y)))
    };
    for chain in &chains {
        let handles = chain.iter().map(|p| insert(&mut cdt, p)).collect::<Result<Vec<_>, _>>()?;
        for w in handles.windows(2) {
            if w[0] != w[1] {
                cdt.add_constraint(w[0], w[1]);
            }
        }
    }

    let near_feature = |p: &Point| {
        let clearance = 0.55 * s;
        chains.iter().any(|chain| chain.windows(2).any(|w| point_segment_distance(p, &w[0], &w[1]) < clearance))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dy = s * 3f64.sqrt() / 2.0;
    let rows = ((y1 - y0) / dy).ceil() as usize;
    let cols = ((x1 - x0) / s).ceil() as usize + 1;
    for r in 0..=rows {
        for c in 0..=cols {
            let offset = if r % 2 == 0 { 0.0 } else { 0.5 * s };
            let jitter = Point::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)) * s;
            let p = Point::new(x0 + c as f64 * s + offset, y0 + r as f64 * dy) + jitter;
            if domain.contains(&p) && !near_feature(&p) {
                insert(&mut cdt, &p)?;
            }
        }
    }

    let vertices: Vec<Point> = cdt.vertices().map(|v| Point::new(v.position().x, v.position().y)).collect();
    let mut cells = Vec::new();
    for face in cdt.inner_faces() {
        let ids = face.vertices().map(|v| v.fix().index());
        let centroid = (vertices[ids[0]] + vertices[ids[1]] + vertices[ids[2]]) / 3.0;
        if domain.contains(&centroid) {
            cells.push(ids);
        }
    }
    // drop vertices that ended up unused (none expected, but keep indices dense)
    let mut used = vec![usize::MAX; vertices.len()];
    let mut compact = Vec::new();
    for cell in cells.iter_mut() {
        for v in cell.iter_mut() {
            if used[*v] == usize::MAX {
                used[*v] = compact.len();
                compact.push(vertices[*v]);
            }
            *v = used[*v];
        }
    }

    let rect = rectangle_tags(x0, y0, x1, y1);
    let holes = domain.holes.clone();
    let rule = move |a: &Point, b: &Point| {
        if let Some(t) = rect(a, b) {
            return Some(t);
        }
        holes
            .iter()
            .find(|c| {
                let cc = pt(c.center);
                [a, b].iter().all(|p| ((*p - cc).norm() - c.radius).abs() < 1e-6 * c.radius)
            })
            .map(|c| c.tag.clone())
    };
    build_mesh(compact, cells, rule)
}

fn tag_lips(mesh: &mut Mesh) {
    for f in 0..mesh.num_facets() {
        let facet = mesh.facet(f);
        if !facet.is_exterior() || facet.tag.is_some() {
            continue;
        }
        let upper = mesh.barycenter(facet.minus).y > 0.0;
        mesh.set_facet_tag(f, if upper { "lip_upper" } else { "lip_lower" });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_bounding_box_and_area() {
        let m = generate_structured_strip(5.0, 1.0, 0.5, StripPattern::Crossed).unwrap();
        let (lo, hi) = m.bounding_box();
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (0.0, 0.0, 5.0, 1.0));
        for (pattern, count) in [(StripPattern::Diagonal, 2), (StripPattern::Crossed, 4)] {
            let m = generate_structured_strip(1.0, 1.0, 1.0, pattern).unwrap();
            assert_eq!(m.num_cells(), count);
            let total: f64 = (0..m.num_cells()).map(|c| m.area(c)).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn strip_has_midline_chain() {
        let m = generate_structured_strip(5.0, 1.0, 0.1, StripPattern::Crossed).unwrap();
        assert_eq!(m.num_cells(), 2 * 50 * 10 * 2);
        for c in 0..m.num_cells() {
            assert!(m.normal_sum_defect(c) < 1e-12);
        }
        let line = [Point::new(0.0, 0.5), Point::new(5.0, 0.5)];
        let on = m.facets_on_polyline(&line, 1e-9);
        let covered: f64 = on.iter().map(|&f| m.facet(f).length).sum();
        assert!((covered - 5.0).abs() < 1e-12);
        assert_eq!(on.len(), 50);
    }

    #[test]
    fn strip_rejects_non_dividing_h() {
        assert!(generate_structured_strip(5.0, 1.0, 0.3, StripPattern::Diagonal).is_err());
        assert!(generate_structured_strip(5.0, 1.0, -0.1, StripPattern::Diagonal).is_err());
    }

    #[test]
    fn slit_disk_counts_and_lips() {
        let m = generate_slit_disk(1.0, 4).unwrap();
        assert_eq!(m.num_cells(), 6 * 16);
        let lips_up = (0..m.num_facets()).filter(|&f| m.facet_tag_name(f) == Some("lip_upper")).count();
        let lips_dn = (0..m.num_facets()).filter(|&f| m.facet_tag_name(f) == Some("lip_lower")).count();
        assert_eq!((lips_up, lips_dn), (4, 4));
        let total: f64 = (0..m.num_cells()).map(|c| m.area(c)).sum();
        // regular polygon areas, bounded by the disk
        assert!(total < std::f64::consts::PI && total > 3.0);
    }

    #[test]
    fn unstructured_with_hole_and_crack() {
        let domain = PlanarDomain {
            min: [0.0, 0.0],
            max: [2.0, 1.0],
            holes: vec![Circle { center: [1.4, 0.5], radius: 0.2, tag: "hole".into() }],
            constraints: vec![vec![[0.0, 0.5], [0.6, 0.5]]],
        };
        let m = generate_unstructured(&domain, 0.1, 7).unwrap();
        let area: f64 = (0..m.num_cells()).map(|c| m.area(c)).sum();
        let hole_poly = {
            let n = ((2.0 * std::f64::consts::PI * 0.2 / (0.1 / UNSTRUCTURED_SPACING_RATIO)).ceil()) as f64;
            0.5 * n * 0.04 * (2.0 * std::f64::consts::PI / n).sin()
        };
        assert!((area - (2.0 - hole_poly)).abs() < 1e-10);
        let crack = m.facets_on_polyline(&[Point::new(0.0, 0.5), Point::new(0.6, 0.5)], 1e-9);
        let len: f64 = crack.iter().map(|&f| m.facet(f).length).sum();
        assert!((len - 0.6).abs() < 1e-12);
        assert!((0..m.num_facets()).any(|f| m.facet_tag_name(f) == Some("hole")));
        let again = generate_unstructured(&domain, 0.1, 7).unwrap();
        assert_eq!(again.cells(), m.cells());
    }
}
