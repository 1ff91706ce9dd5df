use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// 2.5D building: footprint in projected meters (x east, y north) and a height.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildingPolygon {
    vertices: Vec<Point>,
    height: f64,
}

impl BuildingPolygon {
    /// Validates and normalizes to counter-clockwise order. A repeated closing
    /// vertex and consecutive duplicates are dropped.
    pub fn new(mut vertices: Vec<Point>, height: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::invalid(format!("building height must be positive, got {height}")));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::invalid("non-finite vertex"));
        }
        vertices.dedup_by(|a, b| dist(*a, *b) < 1e-9);
        while vertices.len() > 1 && dist(vertices[0], *vertices.last().unwrap()) < 1e-9 {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least 3 distinct vertices"));
        }
        let a = signed_area(&vertices);
        if a.abs() < 1e-12 {
            return Err(Error::invalid("degenerate polygon (zero area)"));
        }
        if !is_simple(&vertices) {
            return Err(Error::invalid("self-intersecting polygon"));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(BuildingPolygon { vertices, height })
    }

    /// Axis-aligned rectangle with lower-left corner `(x, y)`.
    pub fn rect(x: f64, y: f64, w: f64, h: f64, height: f64) -> Result<Self> {
        Self::new(vec![[x, y], [x + w, y], [x + w, y + h], [x, y + h]], height)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(p, q)| dist(p, q)).sum()
    }

    /// Sum of facade areas (perimeter times height).
    pub fn facade_area(&self) -> f64 {
        self.perimeter() * self.height
    }

    /// Directed edges in counter-clockwise order; the outward normal of
    /// `(p, q)` is `(q - p)` rotated clockwise.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.vertices {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BuildingPolygon {
            vertices: self.vertices.iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
            height: self.height,
        }
    }

    /// Rotation about the origin by `deg` clockwise (azimuths increase by `deg`).
    pub fn rotated(&self, deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        BuildingPolygon {
            vertices: self.vertices.iter().map(|p| [p[0] * c + p[1] * s, -p[0] * s + p[1] * c]).collect(),
            height: self.height,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        // Convex or not: ray crossing test.
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Point>, height: f64) -> Self {
        BuildingPolygon { vertices, height }
    }

    /// `POLYGON((x1 y1, ...)) <height>` with the ring closed.
    pub fn to_record(&self) -> String {
        let mut s = String::from("POLYGON((");
        for (i, p) in self.vertices.iter().chain(std::iter::once(&self.vertices[0])).enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&format!("{} {}", p[0], p[1]));
        }
        s.push_str(&format!(")) {}", self.height));
        s
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| {
        let (p, q) = (v[i], v[(i + 1) % n]);
        p[0] * q[1] - q[0] * p[1]
    }).sum::<f64>()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Closed segments `ab` and `cd` share at least one point.
pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let eps = 1e-12 * (1.0 + a[0].abs() + a[1].abs() + c[0].abs() + c[1].abs());
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, c: f64| {
        c.abs() <= eps
            && r[0] >= p[0].min(q[0]) - eps
            && r[0] <= p[0].max(q[0]) + eps
            && r[1] >= p[1].min(q[1]) - eps
            && r[1] <= p[1].max(q[1]) + eps
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Parses one record. `Ok(None)` for blank and comment lines.
pub fn parse_record(line: &str) -> std::result::Result<Option<(Vec<Point>, f64)>, String> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return Ok(None);
    }
    if !t.get(..7).is_some_and(|p| p.eq_ignore_ascii_case("POLYGON")) {
        return Err("expected POLYGON((...)) <height>".into());
    }
    let open = t.find("((").ok_or("missing '(('")?;
    let close = t.rfind("))").ok_or("missing '))'")?;
    if close < open {
        return Err("malformed ring".into());
    }
    let body = &t[open + 2..close];
    // Holes are irrelevant for facades seen from the street; keep the shell.
    let shell = body.split("),").next().unwrap_or(body);
    let mut pts = Vec::new();
    for pair in shell.split(',') {
        let mut it = pair.split_whitespace();
        let x = it.next().ok_or("empty coordinate")?;
        let y = it.next().ok_or("coordinate without y")?;
        if it.next().is_some() {
            return Err(format!("expected two coordinates in '{}'", pair.trim()));
        }
        let x: f64 = x.trim_start_matches('(').parse().map_err(|_| format!("bad number '{x}'"))?;
        let y: f64 = y.parse().map_err(|_| format!("bad number '{y}'"))?;
        pts.push([x, y]);
    }
    let rest = t[close + 2..].trim();
    let h: f64 = rest.parse().map_err(|_| format!("bad height '{rest}'"))?;
    Ok(Some((pts, h)))
}

/// Reads a polygon dataset. Records with non-positive height are skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<BuildingPolygon>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let rec = parse_record(&line).map_err(|msg| Error::Parse { file: name.clone(), line: i + 1, msg })?;
        let Some((pts, h)) = rec else { continue };
        if h <= 0.0 {
            skipped += 1;
            continue;
        }
        let poly = BuildingPolygon::new(pts, h)
            .map_err(|e| Error::Parse { file: name.clone(), line: i + 1, msg: e.to_string() })?;
        out.push(poly);
    }
    if skipped > 0 {
        log::warn!("{name}: skipped {skipped} records with non-positive height");
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset(name));
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, polys: &[BuildingPolygon], comment: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut body = String::new();
    for line in comment.lines() {
        body.push_str(&format!("# {line}\n"));
    }
    for p in polys {
        body.push_str(&p.to_record());
        body.push('\n');
    }
    f.write_all(body.as_bytes()).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}
