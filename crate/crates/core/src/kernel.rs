//! Finite-degree approximation of the Bergman kernel of a domain.
//!
//! Polynomials of degree ≤ N in the scaled variable u = (z − c)/s (c the
//! bounding-box centre, s its half-diagonal) are orthonormalized with
//! respect to the area quadrature of a [`QuadratureGrid`]. Two routes are
//! offered:
//!
//! * [`KernelBasis::Monomial`]: Cholesky factorization G = L Lᴴ of the Gram
//!   matrix of monomials and B = L⁻¹, so φ_j = Σ_k B_jk u^k. Exact and cheap
//!   when the Gram matrix is well scaled (the disc), hopeless at high degree
//!   on elongated domains.
//! * [`KernelBasis::Arnoldi`]: Gram–Schmidt on the Krylov sequence
//!   1, u·q_0, u·q_1, … sampled on the grid nodes, keeping the Hessenberg
//!   recurrence coefficients. Evaluating the recurrence off the grid is
//!   stable at degrees where the monomial route breaks down.
//!
//! The kernel is K(z, w) = Σ_j φ_j(z) conj(φ_j(w)) and the metric density is
//! ρ² = ∂_z ∂_z̄ log K(z, z), computed from termwise derivatives of the φ_j.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::quadrature::{quadrature_grid, QuadratureGrid};

/// Tolerance on max |⟨φ_j, φ_k⟩ − δ_jk| over the source grid.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// K(z, z) below this is treated as a failed fit.
pub const KERNEL_FLOOR: f64 = 1e-300;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which orthonormalization to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelBasis {
    Monomial,
    Arnoldi,
}

impl std::str::FromStr for KernelBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monomial" => Ok(KernelBasis::Monomial),
            "arnoldi" => Ok(KernelBasis::Arnoldi),
            _ => Err(Error::Format(format!("unknown kernel basis {s:?}"))),
        }
    }
}

impl std::fmt::Display for KernelBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelBasis::Monomial => "monomial",
            KernelBasis::Arnoldi => "arnoldi",
        })
    }
}

/// Where a kernel came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GridInfo {
    pub domain: DomainSpec,
    pub resolution: f64,
    pub order: usize,
    pub nodes: usize,
}

impl GridInfo {
    fn of(grid: &QuadratureGrid) -> Self {
        GridInfo { domain: grid.domain.clone(), resolution: grid.resolution, order: grid.order, nodes: grid.len() }
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
struct Mat {
    n: usize,
    m: usize,
    a: Vec<Complex64>,
}

impl Mat {
    fn zeros(n: usize, m: usize) -> Self {
        Mat { n, m, a: vec![ZERO; n * m] }
    }

    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.m + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.a[i * self.m + j] = v;
    }
}

/// Gram matrix G_jk = ∫ u^j conj(u)^k dA of the scaled monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub degree: usize,
    pub center: Complex64,
    pub scale: f64,
    g: Mat,
    grid: GridInfo,
}

impl GramMatrix {
    /// Entry in the scaled variable u.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.g.at(j, k)
    }

    /// Moment ∫ z^j conj(z)^k dA in the original variable, recovered from
    /// the scaled entries through z = c + s u.
    pub fn moment(&self, j: usize, k: usize) -> Complex64 {
        let (c, s) = (self.center, self.scale);
        let mut acc = ZERO;
        for a in 0..=j {
            let ca = binomial(j, a) * c.powu((j - a) as u32) * s.powi(a as i32);
            for b in 0..=k {
                let cb = binomial(k, b) * c.conj().powu((k - b) as u32) * s.powi(b as i32);
                acc += ca * cb * self.g.at(a, b);
            }
        }
        acc
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn scaled_frame(domain: &DomainSpec) -> (Complex64, f64) {
    let bb = domain.bounding_box();
    (bb.center(), bb.half_diagonal())
}

/// Assemble the Gram matrix on `grid` and verify it factorizes.
pub fn compute_gram(grid: &QuadratureGrid, degree: usize) -> Result<GramMatrix> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid(grid.resolution));
    }
    let n = degree + 1;
    let (center, scale) = scaled_frame(&grid.domain);
    let mut g = Mat::zeros(n, n);
    let mut pw = vec![ZERO; n];
    for (&z, &w) in grid.nodes.iter().zip(&grid.weights) {
        let u = (z - center) / scale;
        pw[0] = Complex64::new(1.0, 0.0);
        for k in 1..n {
            pw[k] = pw[k - 1] * u;
        }
        for j in 0..n {
            let pj = pw[j] * w;
            let row = &mut g.a[j * n..j * n + j + 1];
            for (k, slot) in row.iter_mut().enumerate() {
                *slot += pj * pw[k].conj();
            }
        }
    }
    for j in 0..n {
        let d = g.at(j, j).re;
        g.set(j, j, Complex64::new(d, 0.0));
        for k in 0..j {
            let v = g.at(j, k);
            g.set(k, j, v.conj());
        }
    }
    let gram = GramMatrix { degree, center, scale, g, grid: GridInfo::of(grid) };
    cholesky(&gram.g)?;
    Ok(gram)
}

/// Lower-triangular L with positive diagonal and G = L Lᴴ.
fn cholesky(g: &Mat) -> Result<Mat> {
    let n = g.n;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = g.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NotPositiveDefinite { degree: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut s = g.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

fn lower_inverse(l: &Mat) -> Mat {
    let n = l.n;
    let mut b = Mat::zeros(n, n);
    for j in 0..n {
        b.set(j, j, Complex64::new(1.0, 0.0) / l.at(j, j));
        for i in (j + 1)..n {
            let mut s = ZERO;
            for k in j..i {
                s += l.at(i, k) * b.at(k, j);
            }
            b.set(i, j, -s / l.at(i, i));
        }
    }
    b
}

#[derive(Debug, Clone, PartialEq)]
enum Basis {
    /// φ_j = Σ_k b_jk u^k.
    Monomial { b: Mat },
    /// q_0 = const, q_{j+1} = (u q_j − Σ_{i≤j} h_ij q_i)/h_{j+1,j}; h is (N+1)×N.
    Arnoldi { q0: f64, h: Mat },
}

/// A fitted kernel: an orthonormal polynomial basis of A² on the source grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub degree: usize,
    pub center: Complex64,
    pub scale: f64,
    /// Max |⟨φ_j, φ_k⟩ − δ_jk| measured on the source grid.
    pub defect: f64,
    pub grid: GridInfo,
    basis: Basis,
}

/// Orthonormalize the monomials through the Cholesky factor of `gram`.
pub fn fit_kernel(gram: &GramMatrix) -> Result<KernelModel> {
    let l = cholesky(&gram.g)?;
    let b = lower_inverse(&l);
    let n = gram.degree + 1;
    // B G Bᴴ should be the identity
    let mut bg = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = ZERO;
            for k in 0..=i {
                s += b.at(i, k) * gram.g.at(k, j);
            }
            bg.set(i, j, s);
        }
    }
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = ZERO;
            for k in 0..=j {
                s += bg.at(i, k) * b.at(j, k).conj();
            }
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((s - target).norm());
        }
    }
    if !(defect <= ORTHONORMALITY_TOL) {
        return Err(Error::IllConditioned { degree: gram.degree, defect });
    }
    Ok(KernelModel {
        degree: gram.degree,
        center: gram.center,
        scale: gram.scale,
        defect,
        grid: gram.grid.clone(),
        basis: Basis::Monomial { b },
    })
}

/// Orthonormalize by Arnoldi iteration on the grid nodes (two passes of
/// classical Gram–Schmidt per step).
pub fn fit_kernel_arnoldi(grid: &QuadratureGrid, degree: usize) -> Result<KernelModel> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid(grid.resolution));
    }
    let (center, scale) = scaled_frame(&grid.domain);
    let m = grid.len();
    let w = &grid.weights;
    let u: Vec<Complex64> = grid.nodes.iter().map(|&z| (z - center) / scale).collect();
    let inner = |f: &[Complex64], g: &[Complex64]| -> Complex64 {
        f.iter().zip(g).zip(w).map(|((a, b), wt)| a * b.conj() * wt).sum()
    };
    let q0 = 1.0 / grid.total_weight().sqrt();
    let mut q: Vec<Vec<Complex64>> = vec![vec![Complex64::new(q0, 0.0); m]];
    let mut h = Mat::zeros(degree + 1, degree.max(1));
    for j in 0..degree {
        let mut v: Vec<Complex64> = q[j].iter().zip(&u).map(|(a, b)| a * b).collect();
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = inner(&v, qi);
                h.set(i, j, h.at(i, j) + c);
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= c * qk;
                }
            }
        }
        let norm = inner(&v, &v).re.sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotPositiveDefinite { degree: j + 1, pivot: norm });
        }
        h.set(j + 1, j, Complex64::new(norm, 0.0));
        for vk in v.iter_mut() {
            *vk /= norm;
        }
        q.push(v);
    }
    let mut defect: f64 = 0.0;
    for i in 0..=degree {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((inner(&q[i], &q[j]) - target).norm());
        }
    }
    if !(defect <= ORTHONORMALITY_TOL) {
        return Err(Error::IllConditioned { degree, defect });
    }
    Ok(KernelModel {
        degree,
        center,
        scale,
        defect,
        grid: GridInfo::of(grid),
        basis: Basis::Arnoldi { q0, h },
    })
}

/// Build the grid and fit in one step.
pub fn fit_kernel_on(domain: &DomainSpec, resolution: f64, degree: usize, basis: KernelBasis) -> Result<KernelModel> {
    let grid = quadrature_grid(domain, resolution)?;
    match basis {
        KernelBasis::Monomial => fit_kernel(&compute_gram(&grid, degree)?),
        KernelBasis::Arnoldi => fit_kernel_arnoldi(&grid, degree),
    }
}

impl KernelModel {
    pub fn basis_kind(&self) -> KernelBasis {
        match self.basis {
            Basis::Monomial { .. } => KernelBasis::Monomial,
            Basis::Arnoldi { .. } => KernelBasis::Arnoldi,
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.grid.domain
    }

    /// Values φ_j(z), j = 0..=N.
    pub fn basis_values(&self, z: Complex64) -> Vec<Complex64> {
        self.basis_with_derivatives(z, false).0
    }

    /// Values and z-derivatives of the orthonormal basis at z.
    fn basis_with_derivatives(&self, z: Complex64, want_d: bool) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.degree + 1;
        let u = (z - self.center) / self.scale;
        let inv_s = 1.0 / self.scale;
        match &self.basis {
            Basis::Monomial { b } => {
                let mut pw = vec![ZERO; n];
                let mut dpw = vec![ZERO; n];
                pw[0] = Complex64::new(1.0, 0.0);
                for k in 1..n {
                    pw[k] = pw[k - 1] * u;
                    dpw[k] = pw[k - 1] * (k as f64 * inv_s);
                }
                let mut phi = vec![ZERO; n];
                let mut dphi = vec![ZERO; if want_d { n } else { 0 }];
                for j in 0..n {
                    let row = &b.a[j * n..j * n + j + 1];
                    phi[j] = row.iter().zip(&pw).map(|(c, p)| c * p).sum();
                    if want_d {
                        dphi[j] = row.iter().zip(&dpw).map(|(c, p)| c * p).sum();
                    }
                }
                (phi, dphi)
            }
            Basis::Arnoldi { q0, h } => {
                let mut q = vec![ZERO; n];
                let mut dq = vec![ZERO; n];
                q[0] = Complex64::new(*q0, 0.0);
                for j in 0..n - 1 {
                    let mut v = u * q[j];
                    let mut dv = q[j] * inv_s + u * dq[j];
                    for i in 0..=j {
                        let hij = h.at(i, j);
                        v -= hij * q[i];
                        dv -= hij * dq[i];
                    }
                    let hd = h.at(j + 1, j);
                    q[j + 1] = v / hd;
                    dq[j + 1] = dv / hd;
                }
                if !want_d {
                    dq.clear();
                }
                (q, dq)
            }
        }
    }

    fn check_inside(&self, z: Complex64) -> Result<()> {
        if self.grid.domain.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(z))
        }
    }

    /// K(z, w) = Σ_j φ_j(z) conj(φ_j(w)).
    pub fn kernel_eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.check_inside(z)?;
        self.check_inside(w)?;
        let pz = self.basis_values(z);
        let pw = self.basis_values(w);
        Ok(pz.iter().zip(&pw).map(|(a, b)| a * b.conj()).sum())
    }

    /// ρ(z) = sqrt(∂_z ∂_z̄ log K(z, z)).
    ///
    /// The numerator K·K_zz̄ − |K_z|² is evaluated as the Lagrange sum
    /// ½ Σ_jk |φ_j φ'_k − φ_k φ'_j|², which has no cancellation.
    pub fn bergman_density(&self, z: Complex64) -> Result<f64> {
        self.check_inside(z)?;
        let (phi, dphi) = self.basis_with_derivatives(z, true);
        let k: f64 = phi.iter().map(|p| p.norm_sqr()).sum();
        if !(k > KERNEL_FLOOR && k.is_finite()) {
            return Err(Error::KernelInstability { z, reason: format!("K(z,z) = {k:e} below positivity floor") });
        }
        let mut rad = 0.0;
        for j in 0..phi.len() {
            for i in 0..j {
                rad += (phi[j] * dphi[i] - phi[i] * dphi[j]).norm_sqr();
            }
        }
        let rho2 = rad / (k * k);
        if !(rho2 > 0.0 && rho2.is_finite()) {
            return Err(Error::KernelInstability { z, reason: format!("density radicand {rho2:e} is not positive") });
        }
        Ok(rho2.sqrt())
    }

    /// |f(z) − Σ_nodes K(z, node) f(node) w|.
    pub fn reproducing_residual(&self, grid: &QuadratureGrid, f: &Polynomial, z: Complex64) -> Result<f64> {
        if f.degree().unwrap_or(0) > self.degree {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree {:?} exceeds kernel degree {}",
                f.degree(),
                self.degree
            )));
        }
        self.check_inside(z)?;
        let pz = self.basis_values(z);
        let mut acc = ZERO;
        for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
            let fx = f.eval(x);
            if fx == ZERO {
                continue;
            }
            let kzx: Complex64 = pz.iter().zip(self.basis_values(x)).map(|(a, b)| a * b.conj()).sum();
            acc += kzx * fx * w;
        }
        Ok((f.eval(z) - acc).norm())
    }

    /// Coefficient matrix B of the monomial route (`None` for Arnoldi).
    pub fn coefficients(&self, j: usize, k: usize) -> Option<Complex64> {
        match &self.basis {
            Basis::Monomial { b } => Some(b.at(j, k)),
            Basis::Arnoldi { .. } => None,
        }
    }

    /// Flat text serialization; see the file-format chapter of the guide.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "hlab-kernel 1");
        let _ = writeln!(s, "basis {}", self.basis_kind());
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "center {:e} {:e}", self.center.re, self.center.im);
        let _ = writeln!(s, "scale {:e}", self.scale);
        let _ = writeln!(s, "defect {:e}", self.defect);
        let _ = writeln!(s, "domain {}", self.grid.domain.descriptor());
        let _ = writeln!(s, "grid {:e} {} {}", self.grid.resolution, self.grid.order, self.grid.nodes);
        let mat = match &self.basis {
            Basis::Monomial { b } => b,
            Basis::Arnoldi { q0, h } => {
                let _ = writeln!(s, "q0 {q0:e}");
                h
            }
        };
        let _ = writeln!(s, "matrix {} {}", mat.n, mat.m);
        for i in 0..mat.n {
            let row: Vec<String> = (0..mat.m)
                .map(|j| {
                    let v = mat.at(i, j);
                    format!("{:e} {:e}", v.re, v.im)
                })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("kernel file: {what}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected {key:?}, found {line:?}")))
        };
        let num = |s: &str| -> Result<f64> { s.trim().parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}"))) };
        if field("hlab-kernel")?.trim() != "1" {
            return Err(bad("unsupported version"));
        }
        let kind: KernelBasis = field("basis")?.trim().parse()?;
        let degree: usize = field("degree")?.trim().parse().map_err(|_| bad("degree"))?;
        let c: Vec<f64> = field("center")?.split_whitespace().map(num).collect::<Result<_>>()?;
        if c.len() != 2 {
            return Err(bad("center"));
        }
        let scale = num(&field("scale")?)?;
        let defect = num(&field("defect")?)?;
        let domain = DomainSpec::parse_descriptor(&field("domain")?)?;
        let g: Vec<String> = field("grid")?.split_whitespace().map(str::to_string).collect();
        if g.len() != 3 {
            return Err(bad("grid"));
        }
        let grid = GridInfo {
            domain,
            resolution: num(&g[0])?,
            order: g[1].parse().map_err(|_| bad("grid order"))?,
            nodes: g[2].parse().map_err(|_| bad("grid nodes"))?,
        };
        let q0 = match kind {
            KernelBasis::Arnoldi => Some(num(&field("q0")?)?),
            KernelBasis::Monomial => None,
        };
        let dims: Vec<usize> = field("matrix")?
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| bad("matrix size")))
            .collect::<Result<_>>()?;
        let (rows, cols) = match dims[..] {
            [r, c] => (r, c),
            _ => return Err(bad("matrix size")),
        };
        let expect = match kind {
            KernelBasis::Monomial => (degree + 1, degree + 1),
            KernelBasis::Arnoldi => (degree + 1, degree.max(1)),
        };
        if (rows, cols) != expect {
            return Err(bad("matrix size does not match degree"));
        }
        let mut mat = Mat::zeros(rows, cols);
        for i in 0..rows {
            let line = lines.next().ok_or_else(|| bad("truncated matrix"))?;
            let vals: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
            if vals.len() != 2 * cols {
                return Err(bad(&format!("row {i} has {} numbers", vals.len())));
            }
            for j in 0..cols {
                mat.set(i, j, Complex64::new(vals[2 * j], vals[2 * j + 1]));
            }
        }
        let basis = match q0 {
            Some(q0) => Basis::Arnoldi { q0, h: mat },
            None => Basis::Monomial { b: mat },
        };
        Ok(KernelModel { degree, center: Complex64::new(c[0], c[1]), scale, defect, grid, basis })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        KernelModel::from_text(&std::fs::read_to_string(path)?)
    }
}
