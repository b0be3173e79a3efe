//! Bounded plane domains: membership, boundary parametrization and
//! distance to the boundary.
//!
//! Four shapes are supported. The unit disc and axis-aligned ellipses are
//! handled in closed form (the ellipse footpoint by a safeguarded Newton
//! iteration). Polygons and smoothed polygons share a piecewise boundary
//! made of segments and circular arcs; a smoothed polygon replaces each
//! corner by the arc of a fixed radius tangent to both adjacent edges, which
//! gives an explicit smooth Jordan domain.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Rect { xmin, xmax, ymin, ymax }
    }

    pub fn around(points: &[Complex64]) -> Self {
        let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            r.xmin = r.xmin.min(p.re);
            r.xmax = r.xmax.max(p.re);
            r.ymin = r.ymin.min(p.im);
            r.ymax = r.ymax.max(p.im);
        }
        r
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.xmin && z.re <= self.xmax && z.im >= self.ymin && z.im <= self.ymax
    }

    pub fn expand(&self, m: f64) -> Self {
        Rect::new(self.xmin - m, self.xmax + m, self.ymin - m, self.ymax + m)
    }

    pub fn intersect(&self, other: &Rect) -> Self {
        Rect::new(
            self.xmin.max(other.xmin),
            self.xmax.min(other.xmax),
            self.ymin.max(other.ymin),
            self.ymax.min(other.ymax),
        )
    }

    /// True when `other` is contained in `self`.
    pub fn covers(&self, other: &Rect) -> bool {
        self.xmin <= other.xmin
            && self.xmax >= other.xmax
            && self.ymin <= other.ymin
            && self.ymax >= other.ymax
    }
}

/// Shape parameters of a domain, as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    UnitDisc,
    Ellipse { a: f64, b: f64 },
    Polygon { vertices: Vec<Complex64> },
    SmoothedPolygon { vertices: Vec<Complex64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Segment { a: Complex64, b: Complex64 },
    /// Arc of `radius` about `center`, from angle `start` sweeping by `sweep`
    /// (positive = counterclockwise).
    Arc { center: Complex64, radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Segment { a, b } => (b - a).norm(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point_at(&self, s: f64) -> Complex64 {
        match *self {
            Piece::Segment { a, b } => {
                let len = (b - a).norm();
                if len == 0.0 {
                    a
                } else {
                    a + (b - a) * (s / len)
                }
            }
            Piece::Arc { center, radius, start, sweep } => {
                let ang = start + sweep.signum() * s / radius;
                center + Complex64::from_polar(radius, ang)
            }
        }
    }

    /// Parameters t in [0, 1] where p0 + t·d meets this piece.
    fn line_hits(&self, p0: Complex64, d: Complex64, out: &mut Vec<f64>) {
        match *self {
            Piece::Segment { a, b } => {
                let e = b - a;
                let den = cross(d, e);
                if den == 0.0 {
                    // parallel; a collinear overlap contributes its endpoints
                    if cross(a - p0, d) == 0.0 && d.norm_sqr() > 0.0 {
                        for q in [a, b] {
                            out.push(dot(q - p0, d) / d.norm_sqr());
                        }
                    }
                    return;
                }
                let t = cross(a - p0, e) / den;
                let s = cross(a - p0, d) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&s) {
                    out.push(t);
                }
            }
            Piece::Arc { center, radius, start, sweep } => {
                let q = p0 - center;
                for t in quadratic_roots(d.norm_sqr(), dot(q, d), q.norm_sqr() - radius * radius) {
                    let phi = (q + d * t).arg();
                    let delta = if sweep >= 0.0 {
                        (phi - start).rem_euclid(TAU)
                    } else {
                        (start - phi).rem_euclid(TAU)
                    };
                    if delta <= sweep.abs() + 1e-12 || delta >= TAU - 1e-12 {
                        out.push(t);
                    }
                }
            }
        }
    }

    fn distance(&self, z: Complex64) -> f64 {
        match *self {
            Piece::Segment { a, b } => segment_distance(z, a, b),
            Piece::Arc { center, radius, start, sweep } => {
                let rel = z - center;
                let phi = rel.arg();
                let delta = if sweep >= 0.0 {
                    (phi - start).rem_euclid(TAU)
                } else {
                    (start - phi).rem_euclid(TAU)
                };
                if delta <= sweep.abs() {
                    (rel.norm() - radius).abs()
                } else {
                    let p0 = center + Complex64::from_polar(radius, start);
                    let p1 = center + Complex64::from_polar(radius, start + sweep);
                    (z - p0).norm().min((z - p1).norm())
                }
            }
        }
    }
}

/// The region cut off (convex corner) or added (reflex corner) when a
/// polygon corner is rounded: triangle (t1, vertex, t2) minus the disc.
#[derive(Debug, Clone, PartialEq)]
struct Cap {
    t1: Complex64,
    vertex: Complex64,
    t2: Complex64,
    center: Complex64,
    radius: f64,
    convex: bool,
    area: f64,
}

impl Cap {
    fn contains(&self, z: Complex64) -> bool {
        // the tolerance settles points lying on the polygon edges the
        // same way for the polygon test and the cap test
        in_triangle(z, self.t1, self.vertex, self.t2, 1e-9 * self.radius) && (z - self.center).norm() > self.radius
    }
}

/// A bounded plane domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainKind", into = "DomainKind")]
pub struct DomainSpec {
    kind: DomainKind,
    bbox: Rect,
    pieces: Vec<Piece>,
    caps: Vec<Cap>,
    perimeter: f64,
}

impl TryFrom<DomainKind> for DomainSpec {
    type Error = Error;

    fn try_from(kind: DomainKind) -> Result<Self> {
        match kind {
            DomainKind::UnitDisc => Ok(DomainSpec::unit_disc()),
            DomainKind::Ellipse { a, b } => DomainSpec::ellipse(a, b),
            DomainKind::Polygon { vertices } => DomainSpec::polygon(vertices),
            DomainKind::SmoothedPolygon { vertices, radius } => DomainSpec::smoothed_polygon(vertices, radius),
        }
    }
}

impl From<DomainSpec> for DomainKind {
    fn from(d: DomainSpec) -> Self {
        d.kind
    }
}

impl DomainSpec {
    pub fn unit_disc() -> Self {
        DomainSpec {
            kind: DomainKind::UnitDisc,
            bbox: Rect::new(-1.0, 1.0, -1.0, 1.0),
            pieces: Vec::new(),
            caps: Vec::new(),
            perimeter: TAU,
        }
    }

    /// Ellipse x²/a² + y²/b² < 1 with a ≥ b > 0.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b > 0.0 && a >= b) {
            return Err(Error::InvalidDomain(format!("ellipse needs a >= b > 0, got a={a}, b={b}")));
        }
        // Ramanujan's second approximation; only used for arclength bookkeeping.
        let h = ((a - b) / (a + b)).powi(2);
        let perimeter = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        Ok(DomainSpec {
            kind: DomainKind::Ellipse { a, b },
            bbox: Rect::new(-a, a, -b, b),
            pieces: Vec::new(),
            caps: Vec::new(),
            perimeter,
        })
    }

    /// Simple counterclockwise polygon.
    pub fn polygon(vertices: Vec<Complex64>) -> Result<Self> {
        validate_polygon(&vertices)?;
        let n = vertices.len();
        let pieces: Vec<Piece> = (0..n)
            .map(|i| Piece::Segment { a: vertices[i], b: vertices[(i + 1) % n] })
            .collect();
        let perimeter = pieces.iter().map(Piece::length).sum();
        Ok(DomainSpec {
            bbox: Rect::around(&vertices),
            kind: DomainKind::Polygon { vertices },
            pieces,
            caps: Vec::new(),
            perimeter,
        })
    }

    /// Polygon whose corners are replaced by circular arcs of `radius`.
    pub fn smoothed_polygon(vertices: Vec<Complex64>, radius: f64) -> Result<Self> {
        validate_polygon(&vertices)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!("corner radius must be positive, got {radius}")));
        }
        let n = vertices.len();
        let mut caps = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let v = vertices[i];
            let next = vertices[(i + 1) % n];
            let d1 = (v - prev).unscale((v - prev).norm());
            let d2 = (next - v).unscale((next - v).norm());
            let turn = cross(d1, d2).atan2(dot(d1, d2));
            if turn.abs() < 1e-12 {
                return Err(Error::InvalidDomain(format!("collinear vertex at index {i}")));
            }
            let t = radius * (0.5 * turn.abs()).tan();
            let t1 = v - d1 * t;
            let t2 = v + d2 * t;
            let left = Complex64::i() * d1;
            let center = if turn > 0.0 { t1 + left * radius } else { t1 - left * radius };
            let area = radius * t - 0.5 * radius * radius * turn.abs();
            caps.push(Cap { t1, vertex: v, t2, center, radius, convex: turn > 0.0, area });
            tangent.push((t, turn));
        }
        let mut pieces = Vec::with_capacity(2 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            let edge = (vertices[j] - vertices[i]).norm();
            if tangent[i].0 + tangent[j].0 > edge * (1.0 + 1e-12) {
                return Err(Error::InvalidDomain(format!(
                    "corner radius {radius} too large for edge {i} (length {edge})"
                )));
            }
            let cap = &caps[i];
            pieces.push(Piece::Arc {
                center: cap.center,
                radius,
                start: (cap.t1 - cap.center).arg(),
                sweep: tangent[i].1,
            });
            if (caps[j].t1 - cap.t2).norm() > 0.0 {
                pieces.push(Piece::Segment { a: cap.t2, b: caps[j].t1 });
            }
        }
        let perimeter = pieces.iter().map(Piece::length).sum();
        Ok(DomainSpec {
            bbox: Rect::around(&vertices),
            kind: DomainKind::SmoothedPolygon { vertices, radius },
            pieces,
            caps,
            perimeter,
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn bounding_box(&self) -> Rect {
        self.bbox
    }

    pub fn is_unit_disc(&self) -> bool {
        matches!(self.kind, DomainKind::UnitDisc)
    }

    /// True for shapes with a smooth (Dini-smooth) Jordan boundary.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.kind, DomainKind::Polygon { .. })
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Exact area of the domain.
    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::UnitDisc => PI,
            DomainKind::Ellipse { a, b } => PI * a * b,
            DomainKind::Polygon { vertices } => shoelace(vertices),
            DomainKind::SmoothedPolygon { vertices, .. } => {
                let caps: f64 = self.caps.iter().map(|c| if c.convex { -c.area } else { c.area }).sum();
                shoelace(vertices) + caps
            }
        }
    }

    /// Membership in the open domain; boundary points are not members.
    pub fn contains(&self, z: Complex64) -> bool {
        if !z.re.is_finite() || !z.im.is_finite() {
            return false;
        }
        match &self.kind {
            DomainKind::UnitDisc => z.norm_sqr() < 1.0,
            DomainKind::Ellipse { a, b } => (z.re / a).powi(2) + (z.im / b).powi(2) < 1.0,
            DomainKind::Polygon { vertices } => in_polygon(z, vertices) && self.boundary_gap(z) > 0.0,
            DomainKind::SmoothedPolygon { vertices, .. } => {
                if !self.bbox.contains(z) {
                    return false;
                }
                let inside = if in_polygon(z, vertices) {
                    !self.caps.iter().any(|c| c.convex && c.contains(z))
                } else {
                    self.caps.iter().any(|c| !c.convex && c.contains(z))
                };
                inside && self.boundary_gap(z) > 0.0
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, z: Complex64) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain(z));
        }
        Ok(self.boundary_gap(z))
    }

    /// Unsigned distance from any point of the plane to the boundary curve.
    pub fn boundary_gap(&self, z: Complex64) -> f64 {
        match &self.kind {
            DomainKind::UnitDisc => (1.0 - z.norm()).abs(),
            DomainKind::Ellipse { a, b } => ellipse_distance(*a, *b, z.re, z.im),
            _ => self.pieces.iter().map(|p| p.distance(z)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Sorted parameters t ∈ (0, 1) at which the segment p0 + t(p1 − p0)
    /// meets the boundary curve (tangential contacts included).
    pub fn line_crossings(&self, p0: Complex64, p1: Complex64) -> Vec<f64> {
        let d = p1 - p0;
        let mut out = Vec::new();
        match &self.kind {
            DomainKind::UnitDisc => out.extend(quadratic_roots(d.norm_sqr(), dot(p0, d), p0.norm_sqr() - 1.0)),
            DomainKind::Ellipse { a, b } => {
                let q = Complex64::new(p0.re / a, p0.im / b);
                let e = Complex64::new(d.re / a, d.im / b);
                out.extend(quadratic_roots(e.norm_sqr(), dot(q, e), q.norm_sqr() - 1.0));
            }
            _ => {
                for piece in &self.pieces {
                    piece.line_hits(p0, d, &mut out);
                }
            }
        }
        out.retain(|t| *t > 0.0 && *t < 1.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Boundary parametrization on [0, 2π), counterclockwise, 2π-periodic.
    ///
    /// The disc and ellipse use the angular parameter; polygonal boundaries
    /// are parametrized proportionally to arclength.
    pub fn boundary_point(&self, t: f64) -> Complex64 {
        match &self.kind {
            DomainKind::UnitDisc => Complex64::from_polar(1.0, t),
            DomainKind::Ellipse { a, b } => Complex64::new(a * t.cos(), b * t.sin()),
            _ => {
                let mut s = t.rem_euclid(TAU) / TAU * self.perimeter;
                for piece in &self.pieces {
                    let len = piece.length();
                    if s <= len {
                        return piece.point_at(s);
                    }
                    s -= len;
                }
                self.pieces[0].point_at(0.0)
            }
        }
    }

    /// Corner and tangency points of piecewise boundaries; empty otherwise.
    pub fn feature_points(&self) -> Vec<Complex64> {
        match &self.kind {
            DomainKind::Polygon { vertices } => vertices.clone(),
            DomainKind::SmoothedPolygon { .. } => {
                let mut pts: Vec<Complex64> = self.caps.iter().flat_map(|c| [c.t1, c.t2]).collect();
                // axis-extremal points of the arcs, where the boundary stops being a graph
                for piece in &self.pieces {
                    if let Piece::Arc { center, radius, start, sweep } = *piece {
                        for k in 0..4 {
                            let ang = k as f64 * PI / 2.0;
                            let delta = if sweep >= 0.0 {
                                (ang - start).rem_euclid(TAU)
                            } else {
                                (start - ang).rem_euclid(TAU)
                            };
                            if delta < sweep.abs() {
                                pts.push(center + Complex64::from_polar(radius, ang));
                            }
                        }
                    }
                }
                pts
            }
            _ => Vec::new(),
        }
    }

    /// A deep interior point: the origin for the disc and ellipse, otherwise
    /// the maximizer of the boundary distance over a fixed lattice.
    pub fn interior_center(&self) -> Complex64 {
        match self.kind {
            DomainKind::UnitDisc | DomainKind::Ellipse { .. } => Complex64::new(0.0, 0.0),
            _ => {
                let n = 96;
                let bb = self.bbox;
                let mut best = (f64::NEG_INFINITY, bb.center());
                for i in 0..=n {
                    for j in 0..=n {
                        let z = Complex64::new(
                            bb.xmin + bb.width() * i as f64 / n as f64,
                            bb.ymin + bb.height() * j as f64 / n as f64,
                        );
                        if self.contains(z) {
                            let d = self.boundary_gap(z);
                            if d > best.0 {
                                best = (d, z);
                            }
                        }
                    }
                }
                best.1
            }
        }
    }

    /// Point where the ray from `origin` in direction `dir` leaves the
    /// domain (bisection on membership; `origin` must be inside).
    pub fn ray_exit(&self, origin: Complex64, dir: Complex64) -> Result<Complex64> {
        if !self.contains(origin) {
            return Err(Error::OutsideDomain(origin));
        }
        let dir = dir.unscale(dir.norm());
        let mut lo = 0.0;
        let mut hi = 2.0 * self.bbox.half_diagonal() + (origin - self.bbox.center()).norm();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.contains(origin + dir * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(origin + dir * lo)
    }

    /// One-line textual form, e.g. `ellipse 1.5 1`.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }

    pub fn parse_descriptor(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let head = words.next().ok_or_else(|| Error::Format("empty domain descriptor".into()))?;
        let nums: Vec<f64> = words
            .map(|w| w.parse::<f64>().map_err(|e| Error::Format(format!("bad number {w:?}: {e}"))))
            .collect::<Result<_>>()?;
        let pairs = |v: &[f64]| -> Result<Vec<Complex64>> {
            if v.len() % 2 != 0 {
                return Err(Error::Format("odd number of vertex coordinates".into()));
            }
            Ok(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
        };
        match head {
            "disc" | "unit_disc" if nums.is_empty() => Ok(DomainSpec::unit_disc()),
            "ellipse" if nums.len() == 2 => DomainSpec::ellipse(nums[0], nums[1]),
            "polygon" => DomainSpec::polygon(pairs(&nums)?),
            "smoothed_polygon" if !nums.is_empty() => DomainSpec::smoothed_polygon(pairs(&nums[1..])?, nums[0]),
            _ => Err(Error::Format(format!("unrecognized domain descriptor {s:?}"))),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DomainKind::UnitDisc => write!(f, "disc"),
            DomainKind::Ellipse { a, b } => write!(f, "ellipse {a} {b}"),
            DomainKind::Polygon { vertices } => {
                write!(f, "polygon")?;
                for v in vertices {
                    write!(f, " {} {}", v.re, v.im)?;
                }
                Ok(())
            }
            DomainKind::SmoothedPolygon { vertices, radius } => {
                write!(f, "smoothed_polygon {radius}")?;
                for v in vertices {
                    write!(f, " {} {}", v.re, v.im)?;
                }
                Ok(())
            }
        }
    }
}

fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn shoelace(v: &[Complex64]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

/// Real roots of a t² + 2 b t + c = 0 (a > 0).
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a <= 0.0 {
        return Vec::new();
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -(b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

pub(crate) fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (dot(z - a, ab) / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Closed triangle test, enlarged by `eps` (a distance).
fn in_triangle(z: Complex64, a: Complex64, b: Complex64, c: Complex64, eps: f64) -> bool {
    let s = cross(b - a, c - a).signum();
    [(a, b), (b, c), (c, a)]
        .iter()
        .all(|&(p, q)| s * cross(q - p, z - p) >= -eps * (q - p).norm())
}

fn in_polygon(z: Complex64, v: &[Complex64]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Complex64, b: Complex64, p: Complex64, d: f64| {
        d == 0.0 && p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn validate_polygon(v: &[Complex64]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::InvalidDomain(format!("polygon needs at least 3 vertices, got {n}")));
    }
    if v.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::InvalidDomain("non-finite vertex".into()));
    }
    for i in 0..n {
        if (v[(i + 1) % n] - v[i]).norm() == 0.0 {
            return Err(Error::InvalidDomain(format!("repeated vertex at index {i}")));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(Error::InvalidDomain(format!("edges {i} and {j} intersect")));
            }
        }
    }
    if shoelace(v) <= 0.0 {
        return Err(Error::InvalidDomain("polygon must be counterclockwise".into()));
    }
    Ok(())
}

/// Distance from (x, y) to the ellipse x²/a² + y²/b² = 1, a ≥ b.
///
/// The footpoint is parametrized by the Lagrange multiplier s of the
/// constrained minimization; the resulting secular function is convex and
/// decreasing, so Newton from the left bracket end converges monotonically.
/// Bisection takes over whenever a Newton step leaves the bracket.
fn ellipse_distance(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let (x, y) = (x.abs(), y.abs());
    if y > 0.0 {
        if x > 0.0 {
            let z0 = x / a;
            let z1 = y / b;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (a / b).powi(2);
            let t = secular_root(r0, z0, z1, g);
            let x0 = r0 * x / (t + r0 - 1.0);
            let y0 = y / t;
            (x - x0).hypot(y - y0)
        } else {
            (y - b).abs()
        }
    } else {
        let numer = a * x;
        let denom = a * a - b * b;
        if numer < denom {
            let xd = numer / denom;
            let x0 = a * xd;
            let y0 = b * (1.0 - xd * xd).max(0.0).sqrt();
            (x0 - x).hypot(y0)
        } else {
            (x - a).abs()
        }
    }
}

/// Root t = s + 1 of the secular equation (r0 z0/(t + r0 − 1))² + (z1/t)² = 1.
/// Working with t keeps y/t accurate when the root s is close to −1.
fn secular_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let f = |t: f64| {
        let u = n0 / (t + r0 - 1.0);
        let v = z1 / t;
        (u * u + v * v - 1.0, -2.0 * (u * u / (t + r0 - 1.0) + v * v / t))
    };
    let mut lo = z1;
    let mut hi = if g < 0.0 { 1.0 } else { n0.hypot(z1) };
    let mut t = lo;
    for _ in 0..200 {
        let (val, der) = f(t);
        if val == 0.0 {
            return t;
        }
        if val > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let newton = t - val / der;
        let next = if der < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 4.0 * f64::EPSILON * next || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        t = next;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> DomainSpec {
        DomainSpec::polygon(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let disc = DomainSpec::unit_disc();
        assert!(disc.contains(c(0.0, 0.0)));
        assert!(!disc.contains(c(1.0, 0.0)));
        let e = DomainSpec::ellipse(2.0, 1.0).unwrap();
        assert!(e.contains(c(1.9, 0.0)));
        assert!(!square().contains(c(1.0, 0.3)));
        assert!(square().contains(c(0.99, 0.3)));
    }

    #[test]
    fn boundary_distance_examples() {
        let disc = DomainSpec::unit_disc();
        assert_eq!(disc.boundary_distance(c(0.0, 0.0)).unwrap(), 1.0);
        assert!((square().boundary_distance(c(0.5, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(disc.boundary_distance(c(2.0, 0.0)), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn ellipse_distance_matches_dense_sampling() {
        // brute-force oracle: dense sampling of the boundary curve
        let (a, b) = (2.0, 1.0);
        let e = DomainSpec::ellipse(a, b).unwrap();
        let n = 400_000;
        let brute = |z: Complex64| {
            (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    (z - c(a * t.cos(), b * t.sin())).norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        assert!((e.boundary_distance(c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-12);
        for z in [c(0.3, 0.2), c(1.2, 0.0), c(1.9, 0.05), c(-0.7, -0.6), c(0.0, 0.9), c(1.0, 0.0)] {
            let got = e.boundary_distance(z).unwrap();
            let want = brute(z);
            assert!((got - want).abs() < 1e-9, "z={z} got={got} want={want}");
        }
    }

    #[test]
    fn ellipse_distance_smooth_near_major_axis() {
        // inside the focal segment the distance is smooth in y; compare the
        // second difference with its size at an O(1) scale
        let e = DomainSpec::ellipse(1.5, 1.0).unwrap();
        for &x in &[0.0, 0.3, 0.7] {
            for &y in &[1e-9, 1e-7, 1e-5, 1e-3] {
                let d = |y: f64| e.boundary_distance(c(x, y)).unwrap();
                let dd = d(y + 1e-9) - 2.0 * d(y) + d((y - 1e-9).max(0.0));
                assert!(dd.abs() < 1e-14, "x={x} y={y} dd={dd}");
            }
        }
    }

    #[test]
    fn boundary_point_examples() {
        let disc = DomainSpec::unit_disc();
        assert!((disc.boundary_point(0.0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((disc.boundary_point(PI / 2.0) - c(0.0, 1.0)).norm() < 1e-15);
        let e = DomainSpec::ellipse(2.0, 1.0).unwrap();
        assert!((e.boundary_point(0.0) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn polygon_validation() {
        assert!(DomainSpec::polygon(vec![c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        // clockwise
        assert!(DomainSpec::polygon(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]).is_err());
        // bow tie
        assert!(DomainSpec::polygon(vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)]).is_err());
    }

    #[test]
    fn smoothed_square_area_and_boundary() {
        let r = 0.25;
        let d = DomainSpec::smoothed_polygon(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)], r)
            .unwrap();
        let want = 4.0 - (4.0 - PI) * r * r;
        assert!((d.area() - want).abs() < 1e-12);
        assert!((d.perimeter() - (8.0 - 8.0 * r + TAU * r)).abs() < 1e-12);
        // corner region is cut away
        assert!(!d.contains(c(0.98, 0.98)));
        assert!(d.contains(c(0.7, 0.7)));
        let corner_center = c(1.0 - r, 1.0 - r);
        let z = c(0.8, 0.8);
        assert!((d.boundary_distance(z).unwrap() - (r - (z - corner_center).norm())).abs() < 1e-12);
        for k in 0..64 {
            let p = d.boundary_point(TAU * k as f64 / 64.0);
            assert!(d.boundary_gap(p) < 1e-12, "k={k} p={p}");
        }
    }

    #[test]
    fn smoothed_reflex_corner_fills_notch() {
        // L-shaped hexagon with a reflex corner at (0, 0)
        let v = vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 1.0)];
        let poly = DomainSpec::polygon(v.clone()).unwrap();
        let sm = DomainSpec::smoothed_polygon(v, 0.2).unwrap();
        let notch = c(0.02, 0.02);
        assert!(!poly.contains(notch));
        assert!(sm.contains(notch));
        let r = 0.2;
        let want = 3.0 - 5.0 * (4.0 - PI) / 4.0 * r * r + (4.0 - PI) / 4.0 * r * r;
        assert!((sm.area() - want).abs() < 1e-12);
    }

    #[test]
    fn descriptor_round_trip() {
        for d in [
            DomainSpec::unit_disc(),
            DomainSpec::ellipse(1.5, 1.0).unwrap(),
            square(),
            DomainSpec::smoothed_polygon(vec![c(-1.0, -1.0), c(1.0, -1.0), c(0.0, 1.0)], 0.1).unwrap(),
        ] {
            let back = DomainSpec::parse_descriptor(&d.descriptor()).unwrap();
            assert_eq!(back, d);
        }
    }

    #[test]
    fn ray_exit_reaches_boundary() {
        let e = DomainSpec::ellipse(1.5, 1.0).unwrap();
        let p = e.ray_exit(c(0.0, 0.0), c(1.0, 1.0)).unwrap();
        assert!(e.boundary_gap(p) < 1e-12);
    }
}
