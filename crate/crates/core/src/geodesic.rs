//! Weighted distances by shortest paths on a lattice graph followed by
//! continuous refinement of the resulting polyline.
//!
//! The lattice has nodes at (i·h, j·h) and 16-neighbour connectivity (the
//! eight king moves plus the eight knight moves), which keeps the direction
//! bias of the graph metric to a couple of percent. For densities that blow
//! up at the boundary, nodes and paths are kept at least `h` away from it.
//!
//! After Dijkstra the polyline is shortcut (string pulling), resampled to a
//! handful of vertices and relaxed by moving vertices along the local
//! normal; the vertex count is doubled and the relaxation repeated until the
//! target count is reached. The reported distance is the weighted length of
//! the returned path, so it is always an upper bound for d_ω.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::domain::Rect;
use crate::error::{Error, Result};
use crate::metric::{path_length, segment_inside, MetricDensity, PolylinePath};
use crate::quad1d::GaussLegendre;

/// Forward half of the 16-neighbourhood; the other half is the negation.
const OFFSETS: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)];

const NONE: u32 = u32::MAX;

/// Endpoints connect to lattice nodes within this many cells.
const CONNECT_RADIUS: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicOptions {
    /// Upper bound on the number of segments of the refined path.
    pub max_vertices: usize,
    /// Relative improvement below which a relaxation level stops.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions { max_vertices: 64, tolerance: 1e-6, max_sweeps: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    /// Weighted length of `path`.
    pub distance: f64,
    pub path: PolylinePath,
    pub resolution: f64,
    /// (graph path length − distance) / graph path length.
    pub refinement_gain: f64,
}

/// Lattice graph over (part of) a domain, reusable for many queries.
#[derive(Debug, Clone)]
pub struct GeodesicSolver {
    omega: MetricDensity,
    h: f64,
    margin: f64,
    opts: GeodesicOptions,
    window: Rect,
    i0: i64,
    j0: i64,
    ni: usize,
    nj: usize,
    index: Vec<u32>,
    pos: Vec<(i64, i64)>,
    fwd: Vec<[f64; 8]>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GeodesicSolver {
    /// Graph over the whole domain.
    pub fn new(omega: &MetricDensity, h: f64, opts: GeodesicOptions) -> Result<Self> {
        let window = omega.domain().bounding_box();
        GeodesicSolver::with_window(omega, h, window, opts)
    }

    /// Graph restricted to the lattice nodes inside `window`.
    pub fn with_window(omega: &MetricDensity, h: f64, window: Rect, opts: GeodesicOptions) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolution must be positive, got {h}")));
        }
        let domain = omega.domain();
        let window = window.intersect(&domain.bounding_box());
        let i0 = (window.xmin / h).ceil() as i64;
        let i1 = (window.xmax / h).floor() as i64;
        let j0 = (window.ymin / h).ceil() as i64;
        let j1 = (window.ymax / h).floor() as i64;
        let ni = (i1 - i0 + 1).max(0) as usize;
        let nj = (j1 - j0 + 1).max(0) as usize;
        if (ni as f64) * (nj as f64) > 2e7 {
            return Err(Error::InvalidArgument(format!("resolution {h} gives too many lattice nodes")));
        }
        let margin = if omega.blows_up() { h } else { 0.0 };
        let mut solver = GeodesicSolver {
            omega: omega.clone(),
            h,
            margin,
            opts,
            window,
            i0,
            j0,
            ni,
            nj,
            index: vec![NONE; ni * nj],
            pos: Vec::new(),
            fwd: Vec::new(),
        };
        let mut dens = Vec::new();
        for a in 0..ni {
            for b in 0..nj {
                let (i, j) = (i0 + a as i64, j0 + b as i64);
                let z = solver.point(i, j);
                if solver.admissible(z) {
                    solver.index[a * nj + b] = solver.pos.len() as u32;
                    solver.pos.push((i, j));
                    dens.push(solver.omega.eval(z)?);
                }
            }
        }
        let mut fwd = vec![[f64::INFINITY; 8]; solver.pos.len()];
        for (k, &(i, j)) in solver.pos.iter().enumerate() {
            let za = solver.point(i, j);
            for (o, &(di, dj)) in OFFSETS.iter().enumerate() {
                let m = solver.node(i + di, j + dj);
                if m == NONE {
                    continue;
                }
                let zb = solver.point(i + di, j + dj);
                if !solver.segment_ok(za, zb) {
                    continue;
                }
                let mid = solver.omega.eval(0.5 * (za + zb))?;
                fwd[k][o] = (zb - za).norm() / 6.0 * (dens[k] + 4.0 * mid + dens[m as usize]);
            }
        }
        solver.fwd = fwd;
        Ok(solver)
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn density(&self) -> &MetricDensity {
        &self.omega
    }

    pub fn node_count(&self) -> usize {
        self.pos.len()
    }

    fn point(&self, i: i64, j: i64) -> Complex64 {
        Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }

    fn node(&self, i: i64, j: i64) -> u32 {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a as usize >= self.ni || b as usize >= self.nj {
            return NONE;
        }
        self.index[a as usize * self.nj + b as usize]
    }

    fn admissible(&self, z: Complex64) -> bool {
        let d = self.omega.domain();
        d.contains(z) && (self.margin == 0.0 || d.boundary_gap(z) >= self.margin)
    }

    /// Interior points of segments may come a little closer to the boundary
    /// than vertices; they only need to stay inside.
    fn admissible_loose(&self, z: Complex64) -> bool {
        let d = self.omega.domain();
        d.contains(z) && (self.margin == 0.0 || d.boundary_gap(z) >= 0.5 * self.margin)
    }

    fn segment_ok(&self, a: Complex64, b: Complex64) -> bool {
        if !segment_inside(self.omega.domain(), a, b) {
            return false;
        }
        if self.margin == 0.0 {
            return true;
        }
        (1..16).all(|k| self.admissible_loose(a + (b - a) * (k as f64 / 16.0)))
    }

    /// Quadrature of ω along [a, b] used while optimizing: composite
    /// 4-point Gauss with panels no longer than half the local boundary gap.
    fn seg_cost(&self, a: Complex64, b: Complex64, rule: &GaussLegendre) -> Result<f64> {
        let len = (b - a).norm();
        if len == 0.0 {
            return Ok(0.0);
        }
        let panels = if self.omega.blows_up() {
            let d = self.omega.domain();
            let scale = d.boundary_gap(a).min(d.boundary_gap(b)).max(1e-300);
            (len / (0.5 * scale)).ceil().clamp(1.0, 64.0) as usize
        } else {
            1
        };
        let mut total = 0.0;
        for p in 0..panels {
            let t0 = p as f64 / panels as f64;
            let t1 = (p + 1) as f64 / panels as f64;
            let mut err = None;
            let part = rule.integrate(t0, t1, |t| match self.omega.eval(a + (b - a) * t) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            total += part;
        }
        Ok(total * len)
    }

    fn check_endpoint(&self, z: Complex64) -> Result<()> {
        let d = self.omega.domain();
        if !d.contains(z) {
            return Err(Error::OutsideDomain(z));
        }
        if self.omega.blows_up() && d.boundary_gap(z) < self.h {
            return Err(Error::Divergent(format!(
                "endpoint {z} is within one resolution step ({}) of the boundary",
                self.h
            )));
        }
        Ok(())
    }

    /// Nodes within the connector radius of z, with the connector cost.
    fn connectors(&self, z: Complex64, rule: &GaussLegendre) -> Result<Vec<(u32, f64)>> {
        let r = CONNECT_RADIUS * self.h;
        let ia = ((z.re - r) / self.h).ceil() as i64;
        let ib = ((z.re + r) / self.h).floor() as i64;
        let ja = ((z.im - r) / self.h).ceil() as i64;
        let jb = ((z.im + r) / self.h).floor() as i64;
        let mut out = Vec::new();
        for i in ia..=ib {
            for j in ja..=jb {
                let n = self.node(i, j);
                if n == NONE {
                    continue;
                }
                let p = self.point(i, j);
                if (p - z).norm() <= r && self.segment_ok(z, p) {
                    out.push((n, self.seg_cost(z, p, rule)?));
                }
            }
        }
        Ok(out)
    }

    /// Dijkstra from z to w; returns the vertex list of the graph path.
    fn graph_path(&self, z: Complex64, w: Complex64, rule: &GaussLegendre) -> Result<Option<Vec<Complex64>>> {
        let n = self.pos.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![NONE; n];
        let mut heap = BinaryHeap::new();
        for (k, c) in self.connectors(z, rule)? {
            if c < dist[k as usize] {
                dist[k as usize] = c;
                heap.push(Entry(c, k));
            }
        }
        let targets = self.connectors(w, rule)?;
        let mut to_target = vec![f64::INFINITY; 0];
        if !targets.is_empty() {
            to_target = vec![f64::INFINITY; n];
            for &(k, c) in &targets {
                to_target[k as usize] = to_target[k as usize].min(c);
            }
        }
        let mut best = f64::INFINITY;
        let mut best_via = NONE;
        if (w - z).norm() <= CONNECT_RADIUS * self.h && self.segment_ok(z, w) {
            best = self.seg_cost(z, w, rule)?;
        }
        while let Some(Entry(d, k)) = heap.pop() {
            if d > dist[k as usize] {
                continue;
            }
            if d >= best {
                break;
            }
            if !to_target.is_empty() && d + to_target[k as usize] < best {
                best = d + to_target[k as usize];
                best_via = k;
            }
            let (i, j) = self.pos[k as usize];
            for (o, &(di, dj)) in OFFSETS.iter().enumerate() {
                let fwd = self.node(i + di, j + dj);
                if fwd != NONE {
                    relax(&mut dist, &mut prev, &mut heap, k, fwd, d + self.fwd[k as usize][o]);
                }
                let back = self.node(i - di, j - dj);
                if back != NONE {
                    relax(&mut dist, &mut prev, &mut heap, k, back, d + self.fwd[back as usize][o]);
                }
            }
        }
        if !best.is_finite() {
            return Ok(None);
        }
        let mut verts = vec![w];
        let mut k = best_via;
        while k != NONE {
            let (i, j) = self.pos[k as usize];
            verts.push(self.point(i, j));
            k = prev[k as usize];
        }
        verts.push(z);
        verts.reverse();
        Ok(Some(verts))
    }

    /// Weighted distance between two points of the graph's window.
    pub fn distance(&self, z: Complex64, w: Complex64) -> Result<GeodesicResult> {
        self.distance_with_candidates(z, w, &[])
    }

    /// As [`GeodesicSolver::distance`], additionally considering the given
    /// paths (e.g. results at a coarser resolution) as candidates.
    pub fn distance_with_candidates(&self, z: Complex64, w: Complex64, candidates: &[PolylinePath]) -> Result<GeodesicResult> {
        self.check_endpoint(z)?;
        self.check_endpoint(w)?;
        if z == w {
            return Ok(GeodesicResult {
                distance: 0.0,
                path: PolylinePath::new_unchecked(vec![z]),
                resolution: self.h,
                refinement_gain: 0.0,
            });
        }
        // canonical orientation makes d(z, w) and d(w, z) the same computation
        let swap = (w.re, w.im) < (z.re, z.im);
        let (a, b) = if swap { (w, z) } else { (z, w) };
        let res = self.solve_ordered(a, b, candidates)?.0;
        Ok(if swap { GeodesicResult { path: res.path.reversed(), ..res } } else { res })
    }

    /// Returns the result and whether the graph path came within two cells
    /// of the window edge.
    fn solve_ordered(&self, z: Complex64, w: Complex64, candidates: &[PolylinePath]) -> Result<(GeodesicResult, bool)> {
        let rule = GaussLegendre::new(4);
        let raw = self.graph_path(z, w, &rule)?.ok_or_else(|| {
            Error::ResolutionTooCoarse(self.h, format!("no lattice path joins {z} and {w}"))
        })?;
        let touches = raw.iter().any(|v| self.near_window_edge(*v));
        let raw_path = PolylinePath::new_unchecked(raw.clone());
        let raw_len = path_length(&self.omega, &raw_path)?;
        let mut best = (raw_len, raw_path);
        let refined = PolylinePath::new_unchecked(self.refine(raw, &rule)?);
        let refined_len = path_length(&self.omega, &refined)?;
        if refined_len < best.0 {
            best = (refined_len, refined);
        }
        for cand in candidates {
            let fits = |p: Complex64, q: Complex64| p == q;
            let oriented = if fits(cand.start(), z) && fits(cand.end(), w) {
                Some(cand.clone())
            } else if fits(cand.start(), w) && fits(cand.end(), z) {
                Some(cand.reversed())
            } else {
                None
            };
            if let Some(p) = oriented {
                if let Ok(len) = path_length(&self.omega, &p) {
                    if len < best.0 {
                        best = (len, p);
                    }
                }
            }
        }
        let gain = if raw_len > 0.0 { (raw_len - best.0) / raw_len } else { 0.0 };
        Ok((GeodesicResult { distance: best.0, path: best.1, resolution: self.h, refinement_gain: gain }, touches))
    }

    fn near_window_edge(&self, v: Complex64) -> bool {
        let bb = self.omega.domain().bounding_box();
        let win = self.window;
        let m = 2.0 * self.h;
        (win.xmin > bb.xmin && v.re - win.xmin < m)
            || (win.xmax < bb.xmax && win.xmax - v.re < m)
            || (win.ymin > bb.ymin && v.im - win.ymin < m)
            || (win.ymax < bb.ymax && win.ymax - v.im < m)
    }

    fn covers_domain(&self) -> bool {
        self.window.covers(&self.omega.domain().bounding_box())
    }

    fn refine(&self, raw: Vec<Complex64>, rule: &GaussLegendre) -> Result<Vec<Complex64>> {
        let pulled = self.shortcut(raw, rule)?;
        let length: f64 = pulled.windows(2).map(|s| (s[1] - s[0]).norm()).sum();
        let target = ((length / self.h).ceil() as usize)
            .next_power_of_two()
            .clamp(4, self.opts.max_vertices.max(4));
        let mut m = 4;
        let mut path = loop {
            match self.resample(&pulled, m) {
                Some(p) => break p,
                None if m < target => m *= 2,
                None => return Ok(pulled),
            }
        };
        let mut steps: Vec<f64> = vec![0.25 * length / m as f64; path.len()];
        loop {
            self.relax(&mut path, &mut steps, rule)?;
            if path.len() - 1 >= target {
                break;
            }
            let (p, s) = subdivide(&path, &steps);
            if !p.windows(2).all(|seg| self.segment_ok(seg[0], seg[1])) {
                break;
            }
            path = p;
            steps = s;
        }
        Ok(path)
    }

    /// Greedy string pulling: from each kept vertex jump to the farthest of
    /// the next eight vertices whose chord is valid and no more expensive.
    fn shortcut(&self, raw: Vec<Complex64>, rule: &GaussLegendre) -> Result<Vec<Complex64>> {
        let n = raw.len();
        let mut costs = Vec::with_capacity(n.saturating_sub(1));
        for s in raw.windows(2) {
            costs.push(self.seg_cost(s[0], s[1], rule)?);
        }
        let mut out = vec![raw[0]];
        let mut i = 0;
        while i + 1 < n {
            let mut next = i + 1;
            for j in ((i + 2)..=(i + 8).min(n - 1)).rev() {
                if !self.segment_ok(raw[i], raw[j]) {
                    continue;
                }
                let along: f64 = costs[i..j].iter().sum();
                if self.seg_cost(raw[i], raw[j], rule)? <= along {
                    next = j;
                    break;
                }
            }
            out.push(raw[next]);
            i = next;
        }
        Ok(out)
    }

    /// `m` segments equally spaced in arclength along the polyline, if the
    /// resulting chords are admissible.
    fn resample(&self, poly: &[Complex64], m: usize) -> Option<Vec<Complex64>> {
        if poly.len() - 1 == m {
            return Some(poly.to_vec());
        }
        let cum: Vec<f64> = std::iter::once(0.0)
            .chain(poly.windows(2).scan(0.0, |acc, s| {
                *acc += (s[1] - s[0]).norm();
                Some(*acc)
            }))
            .collect();
        let total = *cum.last().unwrap();
        let mut out = vec![poly[0]];
        let mut seg = 0;
        for k in 1..m {
            let s = total * k as f64 / m as f64;
            while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
                seg += 1;
            }
            let span = cum[seg + 1] - cum[seg];
            let t = if span > 0.0 { (s - cum[seg]) / span } else { 0.0 };
            let p = poly[seg] + (poly[seg + 1] - poly[seg]) * t;
            if !self.admissible(p) {
                return None;
            }
            out.push(p);
        }
        out.push(*poly.last().unwrap());
        out.windows(2).all(|s| self.segment_ok(s[0], s[1])).then_some(out)
    }

    /// Gauss–Seidel sweeps moving each interior vertex along the normal of
    /// its neighbours' chord, with a three-point parabolic line search.
    fn relax(&self, path: &mut [Complex64], steps: &mut [f64], rule: &GaussLegendre) -> Result<()> {
        let n = path.len();
        if n < 3 {
            return Ok(());
        }
        let mut costs = Vec::with_capacity(n - 1);
        for s in path.windows(2) {
            costs.push(self.seg_cost(s[0], s[1], rule)?);
        }
        for _sweep in 0..self.opts.max_sweeps {
            let total: f64 = costs.iter().sum();
            let mut gain = 0.0;
            for i in 1..n - 1 {
                let (a, b) = (path[i - 1], path[i + 1]);
                let chord = b - a;
                if chord.norm() == 0.0 {
                    continue;
                }
                let normal = Complex64::i() * chord / chord.norm();
                let f0 = costs[i - 1] + costs[i];
                let eval = |p: Complex64| -> Result<(f64, f64, f64)> {
                    if !self.admissible(p) || !self.segment_ok(a, p) || !self.segment_ok(p, b) {
                        return Ok((f64::INFINITY, 0.0, 0.0));
                    }
                    let c1 = self.seg_cost(a, p, rule)?;
                    let c2 = self.seg_cost(p, b, rule)?;
                    Ok((c1 + c2, c1, c2))
                };
                let d = steps[i].min(0.5 * chord.norm()).max(1e-14);
                let x = path[i];
                let minus = eval(x - normal * d)?;
                let plus = eval(x + normal * d)?;
                let mut best = (f0, 0.0, costs[i - 1], costs[i]);
                for (t, r) in [(-d, minus), (d, plus)] {
                    if r.0 < best.0 {
                        best = (r.0, t, r.1, r.2);
                    }
                }
                let curv = minus.0 - 2.0 * f0 + plus.0;
                if curv > 0.0 && curv.is_finite() {
                    let t = (0.5 * d * (minus.0 - plus.0) / curv).clamp(-d, d);
                    if t != 0.0 && t.abs() != d {
                        let r = eval(x + normal * t)?;
                        if r.0 < best.0 {
                            best = (r.0, t, r.1, r.2);
                        }
                    }
                }
                if best.1 != 0.0 {
                    gain += f0 - best.0;
                    path[i] = x + normal * best.1;
                    costs[i - 1] = best.2;
                    costs[i] = best.3;
                }
                steps[i] = if best.1.abs() == d {
                    2.0 * d
                } else if best.1 != 0.0 {
                    (2.0 * best.1.abs()).max(0.25 * d)
                } else {
                    0.5 * d
                };
            }
            if gain <= self.opts.tolerance * total {
                break;
            }
        }
        Ok(())
    }
}

fn relax(dist: &mut [f64], prev: &mut [u32], heap: &mut BinaryHeap<Entry>, from: u32, to: u32, d: f64) {
    if d < dist[to as usize] {
        dist[to as usize] = d;
        prev[to as usize] = from;
        heap.push(Entry(d, to));
    }
}

fn subdivide(path: &[Complex64], steps: &[f64]) -> (Vec<Complex64>, Vec<f64>) {
    let mut p = Vec::with_capacity(2 * path.len() - 1);
    let mut s = Vec::with_capacity(2 * path.len() - 1);
    for i in 0..path.len() {
        if i > 0 {
            p.push(0.5 * (path[i - 1] + path[i]));
            s.push(0.25 * (steps[i - 1] + steps[i]));
        }
        p.push(path[i]);
        s.push(0.5 * steps[i]);
    }
    (p, s)
}

/// d_ω(z, w) at lattice resolution `h`.
///
/// The graph is built on a window around the two points that is doubled
/// until the graph path stays clear of the window edges.
pub fn weighted_distance(omega: &MetricDensity, z: Complex64, w: Complex64, h: f64) -> Result<GeodesicResult> {
    weighted_distance_with(omega, z, w, h, &GeodesicOptions::default(), &[])
}

pub fn weighted_distance_with(
    omega: &MetricDensity,
    z: Complex64,
    w: Complex64,
    h: f64,
    opts: &GeodesicOptions,
    candidates: &[PolylinePath],
) -> Result<GeodesicResult> {
    let d = omega.domain();
    for p in [z, w] {
        if !d.contains(p) {
            return Err(Error::OutsideDomain(p));
        }
    }
    if z == w {
        return Ok(GeodesicResult {
            distance: 0.0,
            path: PolylinePath::new_unchecked(vec![z]),
            resolution: h,
            refinement_gain: 0.0,
        });
    }
    let swap = (w.re, w.im) < (z.re, z.im);
    let (a, b) = if swap { (w, z) } else { (z, w) };
    let mut margin = (0.5 * (b - a).norm()).max(8.0 * h);
    loop {
        let win = Rect::around(&[a, b]).expand(margin);
        let solver = GeodesicSolver::with_window(omega, h, win, opts.clone())?;
        solver.check_endpoint(a)?;
        solver.check_endpoint(b)?;
        let full = solver.covers_domain();
        match solver.solve_ordered(a, b, candidates) {
            Ok((res, touches)) if !touches || full => {
                return Ok(if swap { GeodesicResult { path: res.path.reversed(), ..res } } else { res });
            }
            Ok(_) => {}
            Err(Error::ResolutionTooCoarse(..)) if !full => {}
            Err(e) => return Err(e),
        }
        margin *= 2.0;
    }
}

/// Distances along a sequence of resolutions, each run seeded with the
/// previous path so the values never increase.
pub fn refinement_sequence(omega: &MetricDensity, z: Complex64, w: Complex64, resolutions: &[f64]) -> Result<Vec<GeodesicResult>> {
    let mut out: Vec<GeodesicResult> = Vec::new();
    for &h in resolutions {
        let seeds: Vec<PolylinePath> = out.last().map(|r| vec![r.path.clone()]).unwrap_or_default();
        out.push(weighted_distance_with(omega, z, w, h, &GeodesicOptions::default(), &seeds)?);
    }
    Ok(out)
}
