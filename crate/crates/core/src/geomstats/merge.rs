//! Merging of touching buildings into convex blocks.
//!
//! Buildings closer than the adjacency tolerance form connected components;
//! each component becomes the convex hull of its vertices. The merged height is
//! the mean of the member heights weighted by each member's exterior facade
//! length (walls shared with other members do not count). With that weighting
//! hull perimeter times merged height equals the exterior facade area whenever
//! the union is already convex, e.g. rows of axis-aligned buildings.

use super::polygon::{dist, segments_intersect, BuildingPolygon, Point};
use crate::error::{Error, Result};

pub fn merge_and_convexify(polygons: &[BuildingPolygon], adjacency_tol: f64) -> Result<Vec<BuildingPolygon>> {
    if !(adjacency_tol >= 0.0) {
        return Err(Error::invalid("adjacency tolerance must be >= 0"));
    }
    let mut current: Vec<BuildingPolygon> = polygons.to_vec();
    let mut tol = adjacency_tol;
    loop {
        let groups = components(&current, tol);
        let changed = groups.iter().any(|g| g.len() > 1);
        current = groups.iter().map(|g| merge_group(&current, g)).collect();
        if !changed && tol < 0.0 {
            return Ok(current);
        }
        // Later passes only merge hulls whose interiors overlap.
        tol = -1e-9;
    }
}

fn merge_group(polys: &[BuildingPolygon], idx: &[usize]) -> BuildingPolygon {
    let members: Vec<&BuildingPolygon> = idx.iter().map(|&i| &polys[i]).collect();
    let pts: Vec<Point> = members.iter().flat_map(|p| p.vertices().iter().copied()).collect();
    let hull = convex_hull(&pts);
    let height = if members.len() == 1 {
        members[0].height()
    } else {
        let lens: Vec<f64> = (0..members.len()).map(|k| exterior_length(&members, k)).collect();
        let total: f64 = lens.iter().sum();
        if total > 0.0 {
            lens.iter().zip(&members).map(|(l, p)| l * p.height()).sum::<f64>() / total
        } else {
            members.iter().map(|p| p.height()).sum::<f64>() / members.len() as f64
        }
    };
    BuildingPolygon::from_parts_unchecked(hull, height)
}

/// Perimeter of member `k` not covered by collinear walls of the others.
fn exterior_length(members: &[&BuildingPolygon], k: usize) -> f64 {
    let mut total = 0.0;
    for (a, b) in members[k].edges() {
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let eps = 1e-6 * (1.0 + len);
        let mut covered: Vec<(f64, f64)> = Vec::new();
        for (j, other) in members.iter().enumerate() {
            if j == k {
                continue;
            }
            for (c, d) in other.edges() {
                let off = |p: Point| ((p[0] - a[0]) * t[1] - (p[1] - a[1]) * t[0]).abs();
                if off(c) > eps || off(d) > eps {
                    continue;
                }
                let proj = |p: Point| (p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1];
                let (s0, s1) = (proj(c).min(proj(d)), proj(c).max(proj(d)));
                let (lo, hi) = (s0.max(0.0), s1.min(len));
                if hi > lo {
                    covered.push((lo, hi));
                }
            }
        }
        total += len - union_length(&mut covered);
    }
    total
}

pub(crate) fn union_length(iv: &mut [(f64, f64)]) -> f64 {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(lo, hi) in iv.iter() {
        match cur {
            Some((cl, ch)) if lo <= ch => cur = Some((cl, ch.max(hi))),
            Some((cl, ch)) => {
                total += ch - cl;
                cur = Some((lo, hi));
            }
            None => cur = Some((lo, hi)),
        }
    }
    if let Some((cl, ch)) = cur {
        total += ch - cl;
    }
    total
}

/// Groups of polygon indices connected by distance <= tol. A negative tol
/// means "interiors overlap by more than |tol|".
fn components(polys: &[BuildingPolygon], tol: f64) -> Vec<Vec<usize>> {
    let n = polys.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    let boxes: Vec<[f64; 4]> = polys.iter().map(|p| p.bbox()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| boxes[a][0].total_cmp(&boxes[b][0]));
    let pad = tol.max(0.0);
    for (oi, &i) in order.iter().enumerate() {
        for &j in &order[oi + 1..] {
            if boxes[j][0] > boxes[i][2] + pad {
                break;
            }
            if boxes[j][1] > boxes[i][3] + pad || boxes[i][1] > boxes[j][3] + pad {
                continue;
            }
            let linked = if tol >= 0.0 {
                polygon_distance(&polys[i], &polys[j]) <= tol
            } else {
                convex_overlap(&polys[i], &polys[j], -tol)
            };
            if linked {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

pub(crate) fn polygon_distance(a: &BuildingPolygon, b: &BuildingPolygon) -> f64 {
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if segments_intersect(p, q, r, s) {
                return 0.0;
            }
        }
    }
    if b.contains(a.vertices()[0]) || a.contains(b.vertices()[0]) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            best = best.min(seg_seg_distance(p, q, r, s));
        }
    }
    best
}

fn point_seg_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

fn seg_seg_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    point_seg_distance(a, c, d)
        .min(point_seg_distance(b, c, d))
        .min(point_seg_distance(c, a, b))
        .min(point_seg_distance(d, a, b))
}

/// Separating-axis test for convex polygons; true when they penetrate by more
/// than `margin` along every edge normal.
fn convex_overlap(a: &BuildingPolygon, b: &BuildingPolygon, margin: f64) -> bool {
    for poly in [a, b] {
        for (p, q) in poly.edges() {
            let n = [q[1] - p[1], p[0] - q[0]];
            let l = n[0].hypot(n[1]);
            if l == 0.0 {
                continue;
            }
            let proj = |v: &Point| (v[0] * n[0] + v[1] * n[1]) / l;
            let (amin, amax) = a.vertices().iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |m, x| (m.0.min(x), m.1.max(x)));
            let (bmin, bmax) = b.vertices().iter().map(proj).fold((f64::INFINITY, f64::NEG_INFINITY), |m, x| (m.0.min(x), m.1.max(x)));
            if amax - bmin <= margin || bmax - amin <= margin {
                return false;
            }
        }
    }
    true
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| dist(*a, *b) < 1e-9);
    if pts.len() < 3 {
        return pts;
    }
    // Turns with |sin| below 1e-9 count as straight, so rounding in rotated
    // inputs cannot split one wall into several.
    let cross = |o: Point, a: Point, b: Point| {
        let c = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        c - 1e-9 * dist(o, a) * dist(o, b)
    };
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
