//! Planar polygon primitives for the ingest pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A polygon: one exterior ring and zero or more holes. Rings are stored
/// open (the closing vertex is not repeated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Point>>", into = "Vec<Vec<Point>>")]
pub struct Polygon {
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

impl TryFrom<Vec<Vec<Point>>> for Polygon {
    type Error = Error;

    fn try_from(rings: Vec<Vec<Point>>) -> Result<Self> {
        let mut rings = rings.into_iter().map(open_ring);
        let exterior = rings.next().ok_or_else(|| Error::Geometry("polygon without rings".into()))??;
        let holes = rings.collect::<Result<Vec<_>>>()?;
        Ok(Polygon { exterior, holes })
    }
}

impl From<Polygon> for Vec<Vec<Point>> {
    fn from(p: Polygon) -> Self {
        std::iter::once(p.exterior)
            .chain(p.holes)
            .map(|mut r| {
                r.push(r[0]);
                r
            })
            .collect()
    }
}

fn open_ring(mut ring: Vec<Point>) -> Result<Vec<Point>> {
    if ring.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Geometry("non-finite coordinate".into()));
    }
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::Geometry(format!("ring with {} distinct vertices", ring.len())));
    }
    Ok(ring)
}

pub fn ring_signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn ring_centroid(ring: &[Point]) -> (Point, f64) {
    let n = ring.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
        a2 += cross;
    }
    if a2 == 0.0 {
        let m = ring.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
        return ([m[0] / n as f64, m[1] / n as f64], 0.0);
    }
    ([cx / (3.0 * a2), cy / (3.0 * a2)], (a2 / 2.0).abs())
}

pub fn ring_length(ring: &[Point]) -> f64 {
    segments(ring).map(|(a, b)| dist(a, b)).sum()
}

pub fn segments(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()]))
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Polygon {
    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn area(&self) -> f64 {
        ring_signed_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_signed_area(h).abs()).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings().map(ring_length).sum()
    }

    /// Area-weighted centroid with holes subtracted, and the polygon area.
    pub fn centroid(&self) -> (Point, f64) {
        let (c, a) = ring_centroid(&self.exterior);
        let (mut sx, mut sy, mut sa) = (c[0] * a, c[1] * a, a);
        for h in &self.holes {
            let (hc, ha) = ring_centroid(h);
            sx -= hc[0] * ha;
            sy -= hc[1] * ha;
            sa -= ha;
        }
        if sa > 0.0 {
            ([sx / sa, sy / sa], sa)
        } else {
            (c, 0.0)
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.exterior)
    }

    /// A point strictly inside the polygon (outside every hole), found on a
    /// horizontal scanline through the middle of the bounding box.
    pub fn interior_point(&self) -> Point {
        let b = self.bbox();
        // Slightly off-center so the scanline misses the vertices of
        // axis-aligned grids.
        let y = b.min[1] + (b.max[1] - b.min[1]) * 0.4937;
        let mut xs: Vec<f64> = Vec::new();
        for ring in self.rings() {
            for (p, q) in segments(ring) {
                if (p[1] > y) != (q[1] > y) {
                    xs.push(p[0] + (y - p[1]) / (q[1] - p[1]) * (q[0] - p[0]));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        let best = xs
            .chunks_exact(2)
            .max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
            .map(|c| (c[0] + c[1]) / 2.0)
            .unwrap_or((b.min[0] + b.max[0]) / 2.0);
        [best, y]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Location of `p` relative to a closed ring, with boundary detection at
/// absolute tolerance `tol`.
pub fn locate_in_ring(p: Point, ring: &[Point], tol: f64) -> Location {
    let mut inside = false;
    for (a, b) in segments(ring) {
        if point_segment_distance(p, a, b) <= tol {
            return Location::Boundary;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Length of the collinear overlap of two segments, zero when they are not
/// collinear within `tol`.
pub fn collinear_overlap(s: (Point, Point), t: (Point, Point), tol: f64) -> f64 {
    let d = [s.1[0] - s.0[0], s.1[1] - s.0[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return 0.0;
    }
    let u = [d[0] / len, d[1] / len];
    let off = |p: Point| ((p[0] - s.0[0]) * u[1] - (p[1] - s.0[1]) * u[0]).abs();
    if off(t.0) > tol || off(t.1) > tol {
        return 0.0;
    }
    let proj = |p: Point| (p[0] - s.0[0]) * u[0] + (p[1] - s.0[1]) * u[1];
    let (t0, t1) = (proj(t.0), proj(t.1));
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    (hi.min(len) - lo.max(0.0)).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> BBox {
        let mut b = BBox { min: [f64::INFINITY; 2], max: [f64::NEG_INFINITY; 2] };
        for p in points {
            for k in 0..2 {
                b.min[k] = b.min[k].min(p[k]);
                b.max[k] = b.max[k].max(p[k]);
            }
        }
        b
    }

    pub fn union(self, o: BBox) -> BBox {
        BBox {
            min: [self.min[0].min(o.min[0]), self.min[1].min(o.min[1])],
            max: [self.max[0].max(o.max[0]), self.max[1].max(o.max[1])],
        }
    }

    pub fn intersects(&self, o: &BBox, tol: f64) -> bool {
        (0..2).all(|k| self.min[k] <= o.max[k] + tol && o.min[k] <= self.max[k] + tol)
    }

    pub fn contains(&self, o: &BBox, tol: f64) -> bool {
        (0..2).all(|k| self.min[k] <= o.min[k] + tol && o.max[k] <= self.max[k] + tol)
    }
}
