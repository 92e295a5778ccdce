//! Pointwise residuals of the Haydys-Witten family: Haydys-Witten (5D),
//! Kapustin-Witten in three equivalent forms, Vafa-Witten, the (twisted)
//! extended Bogomolny equations and their holomorphic reformulation, Nahm
//! flows, the gauge-fixing term, the KW energy and the Weitzenböck split.
//!
//! Every system has a pointwise kernel acting on [`Local`] point data (values
//! and first derivatives of a fixed component layout), so the same code
//! evaluates sampled grids and analytic model fields.
//!
//! Conventions: `F_mn = ∂_m A_n − ∂_n A_m + [A_m, A_n]`, `∇_m s = ∂_m s + [A_m, s]`;
//! `½[φ∧φ]` has components `[φ_μ, φ_ν]`; four-dimensional two-forms are listed
//! as `(01, 02, 03, 23, 31, 12)` so that `⋆` swaps the halves; `(j, k)` always
//! denotes the cyclic successors of `i`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{cov_at, curvature_at, random_smooth_field, sample, Backend, Field, Grid, Local, Mask, Sampled};
use rand_chacha::ChaCha8Rng;
use crate::lie::{br, c, conj_g, cyc, fnorm, fnorm_sqr, im_g, re_g, zeros, Mat, C64, I};
use crate::octonion::{cross, cross_twisted, AlgebraVector, StructureTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum System {
    HW,
    KW,
    KWCombined,
    KWComplex,
    VW,
    EBE,
    TEBE,
    HYM,
    NahmH,
    NahmO,
    GaugeFixing,
}

/// Residual components on a grid together with the sites where they are valid.
#[derive(Clone, Debug)]
pub struct ResidualBundle {
    pub system: System,
    pub components: Vec<(String, Field)>,
    pub mask: Mask,
    pub grid: Grid,
    pub backend: Backend,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSummary {
    pub system: System,
    pub max_norm: f64,
    pub l2_norm: f64,
    pub grid: Vec<usize>,
    pub backend: String,
}

impl ResidualBundle {
    pub fn component(&self, name: &str) -> Option<&Field> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    /// `(Σ_c ‖R_c‖²)^{1/2}` at a site.
    pub fn norm_at(&self, site: usize) -> f64 {
        self.components
            .iter()
            .map(|(_, f)| fnorm_sqr(&f.data[site]))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&s| self.mask.0[s])
            .map(|s| self.norm_at(s))
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        let dens: Vec<f64> = (0..self.grid.len())
            .map(|s| if self.mask.0[s] { self.norm_at(s).powi(2) } else { 0.0 })
            .collect();
        self.grid.integrate(&dens).sqrt()
    }

    pub fn summary(&self) -> ResidualSummary {
        ResidualSummary {
            system: self.system,
            max_norm: self.max_norm(),
            l2_norm: self.l2_norm(),
            grid: self.grid.axes.iter().map(|a| a.n).collect(),
            backend: format!("{:?}", self.backend).to_lowercase(),
        }
    }

    /// CSV with columns `site,component,norm` over masked sites.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["site", "component", "norm"])?;
        for s in (0..self.grid.len()).filter(|&s| self.mask.0[s]) {
            for (name, f) in &self.components {
                w.write_record([s.to_string(), name.clone(), format!("{:e}", fnorm(&f.data[s]))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn evaluate<F>(
    system: System,
    grid: &Grid,
    comps: &[&Field],
    backend: Backend,
    names: Vec<String>,
    kernel: F,
) -> Result<ResidualBundle>
where
    F: Fn(&Sampled, usize) -> Vec<Mat> + Sync,
{
    let n = comps.first().map(|f| f.n).unwrap_or(1);
    for f in comps {
        check_dim(grid.len(), f.data.len())?;
        check_dim(n, f.n)?;
    }
    let s = sample(grid, comps, backend)?;
    let pts: Vec<Vec<Mat>> = (0..grid.len()).into_par_iter().map(|site| kernel(&s, site)).collect();
    let components = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let data = pts.iter().map(|p| p[k].clone()).collect();
            (name, Field { n, data })
        })
        .collect();
    Ok(ResidualBundle {
        system,
        components,
        mask: s.mask,
        grid: grid.clone(),
        backend,
    })
}

fn labels(prefix: &str, ids: &[&str]) -> Vec<String> {
    ids.iter().map(|i| format!("{prefix}.{i}")).collect()
}

/// Index pairs of the `(01, 02, 03, 23, 31, 12)` layout.
pub const SIX: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];
pub const SIX_LABELS: [&str; 6] = ["01", "02", "03", "23", "31", "12"];

/// `⋆` on the six-component layout.
pub fn star6(w: &[Mat]) -> Vec<Mat> {
    vec![w[3].clone(), w[4].clone(), w[5].clone(), w[0].clone(), w[1].clone(), w[2].clone()]
}

/// Self-dual part `P_i = ω_0i + ω_jk`.
pub fn plus_part(w: &[Mat]) -> Vec<Mat> {
    (0..3).map(|i| &w[i] + &w[3 + i]).collect()
}

/// Anti-self-dual part `M_i = ω_0i − ω_jk`.
pub fn minus_part(w: &[Mat]) -> Vec<Mat> {
    (0..3).map(|i| &w[i] - &w[3 + i]).collect()
}

fn lin(a: &[Mat], sa: f64, b: &[Mat], sb: f64) -> Vec<Mat> {
    a.iter().zip(b).map(|(x, y)| x * c(sa) + y * c(sb)).collect()
}

/// Angle for the Kapustin-Witten family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KWParams {
    pub theta: f64,
}

impl KWParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&theta) {
            return Err(Error::Domain(format!("θ = {theta} outside [0, 2π]")));
        }
        Ok(Self { theta })
    }

    /// `(cot θ, csc θ)`, exactly `(0, 1)` at `θ = π/2`.
    pub fn cot_csc(&self) -> Result<(f64, f64)> {
        cot_csc(self.theta)
    }
}

pub fn cot_csc(theta: f64) -> Result<(f64, f64)> {
    if theta == FRAC_PI_2 {
        return Ok((0.0, 1.0));
    }
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(Error::Domain(format!("θ = {theta} is a multiple of π")));
    }
    Ok((theta.cos() / s, 1.0 / s))
}

// ---------------------------------------------------------------- 4D kernels

/// Layout for 4D systems: `A_0..A_3` at 0..4, `φ_0..φ_3` at 4..8.
/// Returns `G = F − ½[φ∧φ]` and `D = d_A φ` in the six-component layout.
pub fn kw_parts(l: &impl Local) -> (Vec<Mat>, Vec<Mat>) {
    let g = SIX
        .iter()
        .map(|&(m, n)| curvature_at(l, 0, m, n) - br(l.v(4 + m), l.v(4 + n)))
        .collect();
    let d = SIX
        .iter()
        .map(|&(m, n)| cov_at(l, 0, 4 + n, m) - cov_at(l, 0, 4 + m, n))
        .collect();
    (g, d)
}

/// `d_A^⋆ φ = −Σ ∇_μ φ_μ`.
pub fn kw_scalar(l: &impl Local) -> Mat {
    -(0..4).fold(zeros(l.v(0).nrows()), |acc, m| acc + cov_at(l, 0, 4 + m, m))
}

/// `plus(3), minus(3), scalar(1)`.
pub fn kw_point(l: &impl Local, theta: f64) -> Vec<Mat> {
    let (g, d) = kw_parts(l);
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut out = plus_part(&lin(&g, ch, &d, -sh));
    out.extend(minus_part(&lin(&g, sh, &d, ch)));
    out.push(kw_scalar(l));
    out
}

/// `F − ½[φ∧φ] + cot θ d_Aφ − csc θ ⋆d_Aφ`.
pub fn kw_combined_point(l: &impl Local, cot: f64, csc: f64) -> Vec<Mat> {
    let (g, d) = kw_parts(l);
    let sd = star6(&d);
    (0..6).map(|a| &g[a] + &d[a] * c(cot) - &sd[a] * c(csc)).collect()
}

/// `F_{A+iφ} + e^{−iθ} ⋆ conj(F_{A+iφ})`, complexified.
pub fn kw_complex_point(l: &impl Local, theta: f64) -> Vec<Mat> {
    let (g, d) = kw_parts(l);
    let f: Vec<Mat> = g.iter().zip(&d).map(|(g, d)| g + d * I).collect();
    let conj: Vec<Mat> = f.iter().map(conj_g).collect();
    let sc = star6(&conj);
    let phase = C64::from_polar(1.0, -theta);
    f.iter().zip(&sc).map(|(a, b)| a + b * phase).collect()
}

/// Layout: `A_0..A_3` at 0..4, `B_1..B_3` at 4..7, `C` at 7. Returns the
/// self-dual part (3) and the one-form part (4).
pub fn vw_point(l: &impl Local) -> Vec<Mat> {
    let f: Vec<Mat> = SIX.iter().map(|&(m, n)| curvature_at(l, 0, m, n)).collect();
    let fp = plus_part(&f);
    let mut out: Vec<Mat> = (0..3)
        .map(|i| {
            let (j, k) = cyc(i);
            &fp[i] - br(l.v(4 + j), l.v(4 + k)) - br(l.v(7), l.v(4 + i))
        })
        .collect();
    // B_0i = B_i, B_jk = B_i.
    let b_comp = |mu: usize, nu: usize| -> Option<(usize, f64)> {
        if mu == nu {
            return None;
        }
        let (lo, hi, s) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
        if lo == 0 {
            return Some((4 + hi - 1, s));
        }
        // (1,2) -> B_3, (2,3) -> B_1, (1,3) = −(3,1) -> −B_2
        match (lo, hi) {
            (1, 2) => Some((6, s)),
            (2, 3) => Some((4, s)),
            _ => Some((5, -s)),
        }
    };
    for nu in 0..4 {
        let mut r = cov_at(l, 0, 7, nu);
        for mu in 0..4 {
            if let Some((comp, s)) = b_comp(mu, nu) {
                r -= cov_at(l, 0, comp, mu) * c(s);
            }
        }
        out.push(r);
    }
    out
}

/// `∫ Σ_{μ<ν} ‖F_μν‖² + Σ_{μν} ‖∇_μ φ_ν‖² + Σ_{μ<ν} ‖2[φ_μ, φ_ν]‖²` density.
pub fn kw_energy_density(l: &impl Local) -> f64 {
    let mut e = 0.0;
    for &(m, n) in &SIX {
        e += fnorm_sqr(&curvature_at(l, 0, m, n));
        e += 4.0 * fnorm_sqr(&br(l.v(4 + m), l.v(4 + n)));
    }
    for m in 0..4 {
        for n in 0..4 {
            e += fnorm_sqr(&cov_at(l, 0, 4 + n, m));
        }
    }
    e
}

// ---------------------------------------------------------------- 5D kernel

/// Haydys-Witten kernel in an orthonormal frame `(n₀, n₁, n₂, n₃, v)` given
/// by its rows in grid coordinates. Layout: `A_0..A_4` at 0..5 (grid
/// coordinates), `B` at 5..8 as `B(n₀, n_i)`, so that `B(n_j, n_k) = B(n₀, n_i)`.
///
/// Returns the `two_form` part `F(n₀,n_i) + F(n_j,n_k) − [B_j,B_k] − ∇_v B_i`
/// and the `one_form` part `F(v, n_b) + Σ_a ∇_{n_a} B(n_a, n_b)` for
/// `b = 0..3` plus the `v`-component, which vanishes identically.
pub fn hw_point(l: &impl Local, rows: &[[f64; 5]; 5]) -> Vec<Mat> {
    let n = l.v(0).nrows();
    let mut fc = vec![vec![zeros(n); 5]; 5];
    for m in 0..5 {
        for k in m + 1..5 {
            let f = curvature_at(l, 0, m, k);
            fc[k][m] = -&f;
            fc[m][k] = f;
        }
    }
    let ff = |a: usize, b: usize| -> Mat {
        let mut acc = zeros(n);
        for m in 0..5 {
            for k in 0..5 {
                let w = rows[a][m] * rows[b][k];
                if w != 0.0 && m != k {
                    acc += &fc[m][k] * c(w);
                }
            }
        }
        acc
    };
    let nabla = |a: usize, comp: usize| -> Mat {
        let mut acc = zeros(n);
        for m in 0..5 {
            if rows[a][m] != 0.0 {
                acc += cov_at(l, 0, comp, m) * c(rows[a][m]);
            }
        }
        acc
    };
    let mut out = Vec::with_capacity(8);
    for i in 0..3 {
        let (j, k) = cyc(i);
        out.push(ff(0, 1 + i) + ff(1 + j, 1 + k) - br(l.v(5 + j), l.v(5 + k)) - nabla(4, 5 + i));
    }
    // b = 0: Σ_i ∇_{n_i} B(n_i, n_0) = −Σ ∇_{n_i} B_i
    let mut r0 = ff(4, 0);
    for i in 0..3 {
        r0 -= nabla(1 + i, 5 + i);
    }
    out.push(r0);
    for b in 0..3 {
        // B(n_0, n_b) = B_b ; B(n_a, n_b) = ε_abk B_k
        let mut r = ff(4, 1 + b) + nabla(0, 5 + b);
        for a in 0..3 {
            for k in 0..3 {
                let e = crate::lie::eps(a, b, k);
                if e != 0.0 {
                    r += nabla(1 + a, 5 + k) * c(e);
                }
            }
        }
        out.push(r);
    }
    out.push(ff(4, 4));
    out
}

// ---------------------------------------------------------------- 3D kernels

/// Layout for 3D systems: `A_1..A_3` at 0..3, `φ_1..φ_3` at 3..6, `c₁` at 6,
/// `c₂` at 7. Returns `line1 (3), line2 (3), line3 (1)` of the twisted
/// extended Bogomolny equations with coefficients `(cot θ, csc θ)`; the
/// untwisted equations are `(0, 1)`.
pub fn tebe_point(l: &impl Local, cot: f64, csc: f64) -> Vec<Mat> {
    let mut out = Vec::with_capacity(7);
    let mut w = Vec::with_capacity(3);
    let mut d = Vec::with_capacity(3);
    for i in 0..3 {
        let (j, k) = cyc(i);
        w.push(cov_at(l, 0, 6, i) - br(l.v(7), l.v(3 + i)));
        d.push(cov_at(l, 0, 3 + k, j) - cov_at(l, 0, 3 + j, k));
    }
    for i in 0..3 {
        let (j, k) = cyc(i);
        let g = curvature_at(l, 0, j, k) - br(l.v(3 + j), l.v(3 + k));
        out.push(g + &d[i] * c(cot) + &w[i] * c(csc));
    }
    for i in 0..3 {
        out.push(cov_at(l, 0, 7, i) + br(l.v(6), l.v(3 + i)) + &w[i] * c(cot) + &d[i] * c(csc));
    }
    let div = (0..3).fold(zeros(l.v(0).nrows()), |acc, i| acc + cov_at(l, 0, 3 + i, i));
    out.push(br(l.v(6), l.v(7)) - div);
    out
}

pub fn ebe_point(l: &impl Local) -> Vec<Mat> {
    tebe_point(l, 0.0, 1.0)
}

/// The operators `𝒟₁ = ∇₁ + i∇₂`, `𝒟₂ = ad(φ₁ − iφ₂)`, `𝒟₃ = ∇₃ + i ad φ₃`
/// on `Σ × ℝ` (axes 0, 1 span `Σ`). Same layout as [`tebe_point`]; `c₁`, `c₂`
/// are ignored. Returns `[𝒟₁,𝒟₂], [𝒟₁,𝒟₃], [𝒟₂,𝒟₃]` and `Σ_i [𝒟̄_i, 𝒟_i]`.
pub fn hym_point(l: &impl Local) -> Vec<Mat> {
    let n = l.v(0).nrows();
    let z = C64::new(0.0, 0.0);
    let one = c(1.0);
    let alpha = [[one, I, z], [z, z, z], [z, z, one]];
    let x = [zeros(n), l.v(3) - l.v(4) * I, l.v(5) * I];
    let dx = |i: usize, m: usize| -> Mat {
        match i {
            0 => zeros(n),
            1 => cov_at(l, 0, 3, m) - cov_at(l, 0, 4, m) * I,
            _ => cov_at(l, 0, 5, m) * I,
        }
    };
    let f = |m: usize, k: usize| curvature_at(l, 0, m, k);
    let comm = |ai: &[C64; 3], aj: &[C64; 3], xi: &Mat, xj: &Mat, dxi: &dyn Fn(usize) -> Mat, dxj: &dyn Fn(usize) -> Mat| {
        let mut r = br(xi, xj);
        for m in 0..3 {
            for k in 0..3 {
                let w = ai[m] * aj[k];
                if w != z && m != k {
                    r += f(m, k) * w;
                }
            }
            if ai[m] != z {
                r += dxj(m) * ai[m];
            }
            if aj[m] != z {
                r -= dxi(m) * aj[m];
            }
        }
        r
    };
    let mut out = Vec::with_capacity(4);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(comm(&alpha[i], &alpha[j], &x[i], &x[j], &|m| dx(i, m), &|m| dx(j, m)));
    }
    let mut mm = zeros(n);
    for i in 0..3 {
        let abar = alpha[i].map(|a| a.conj());
        mm += comm(&abar, &alpha[i], &conj_g(&x[i]), &x[i], &|m| conj_g(&dx(i, m)), &|m| dx(i, m));
    }
    out.push(mm);
    out
}

/// Extended Bogomolny residual (`c₂ = 0`, `φ̃ = (φ₁, φ₂, 0)`, `c₁ = φ₃`)
/// recovered from the holomorphic commutators of [`hym_point`]. The moment
/// map's real part is returned last and vanishes identically.
pub fn ebe_from_hym(h: &[Mat]) -> (Vec<Mat>, Mat) {
    let (c12, c13, c23, mm) = (&h[0], &h[1], &h[2], &h[3]);
    let out = vec![
        im_g(c13),
        -re_g(c13),
        im_g(mm) * c(0.5),
        -im_g(c23),
        -re_g(c23),
        -im_g(c12),
        -re_g(c12),
    ];
    (out, re_g(mm))
}

// ---------------------------------------------------------------- Nahm

/// Algebra of a Nahm flow: a fixed structure table or the deformed octonions.
#[derive(Clone, Debug)]
pub enum NahmAlgebra {
    Table(StructureTable),
    Twisted(f64),
}

impl NahmAlgebra {
    pub fn k(&self) -> usize {
        match self {
            NahmAlgebra::Table(t) => t.k(),
            NahmAlgebra::Twisted(_) => 7,
        }
    }

    /// `X × X`.
    pub fn square(&self, x: &[Mat]) -> Result<Vec<Mat>> {
        let v = AlgebraVector::new(x.to_vec())?;
        let r = match self {
            NahmAlgebra::Table(t) => cross(t, &v, &v)?,
            NahmAlgebra::Twisted(beta) => cross_twisted(*beta, &v, &v)?,
        };
        Ok(r.comps)
    }
}

/// `∇_y X + X × X`. Layout: `A_y` at 0, `X_1..X_k` at 1..=k.
pub fn nahm_point(l: &impl Local, alg: &NahmAlgebra) -> Result<Vec<Mat>> {
    let k = alg.k();
    let x: Vec<Mat> = (0..k).map(|i| l.v(1 + i).clone()).collect();
    let sq = alg.square(&x)?;
    Ok((0..k).map(|i| cov_at(l, 0, 1 + i, 0) + &sq[i]).collect())
}

// ---------------------------------------------------------------- field bundles

fn conj_all<const K: usize>(f: &[Field; K], g: &Mat, gi: &Mat) -> [Field; K] {
    std::array::from_fn(|i| f[i].conjugate(g, gi))
}

/// Gauge field and Higgs one-form on a 4D grid.
#[derive(Clone, Debug)]
pub struct KwFields {
    pub a: [Field; 4],
    pub phi: [Field; 4],
}

impl KwFields {
    pub fn comps(&self) -> Vec<&Field> {
        self.a.iter().chain(self.phi.iter()).collect()
    }
    pub fn conjugate(&self, g: &Mat, gi: &Mat) -> Self {
        Self {
            a: conj_all(&self.a, g, gi),
            phi: conj_all(&self.phi, g, gi),
        }
    }
}

/// `(A, B, C)` on a 4D grid, `B` by its components `B_0i`.
#[derive(Clone, Debug)]
pub struct VwFields {
    pub a: [Field; 4],
    pub b: [Field; 3],
    pub c: Field,
}

impl VwFields {
    pub fn comps(&self) -> Vec<&Field> {
        self.a.iter().chain(self.b.iter()).chain(std::iter::once(&self.c)).collect()
    }
    /// The Kapustin-Witten pair `(A, φ = C dx⁰ + B_0i dx^i)`.
    pub fn as_kw(&self) -> KwFields {
        KwFields {
            a: self.a.clone(),
            phi: [self.c.clone(), self.b[0].clone(), self.b[1].clone(), self.b[2].clone()],
        }
    }
}

/// `(A, B)` on a 5D grid, `B` by its frame components `B(n₀, n_i)`.
#[derive(Clone, Debug)]
pub struct HwFields {
    pub a: [Field; 5],
    pub b: [Field; 3],
}

impl HwFields {
    pub fn comps(&self) -> Vec<&Field> {
        self.a.iter().chain(self.b.iter()).collect()
    }
    pub fn conjugate(&self, g: &Mat, gi: &Mat) -> Self {
        Self {
            a: conj_all(&self.a, g, gi),
            b: conj_all(&self.b, g, gi),
        }
    }
}

/// `(A, φ, c₁, c₂)` on a 3D grid.
#[derive(Clone, Debug)]
pub struct EbeFields {
    pub a: [Field; 3],
    pub phi: [Field; 3],
    pub c1: Field,
    pub c2: Field,
}

impl EbeFields {
    pub fn comps(&self) -> Vec<&Field> {
        self.a
            .iter()
            .chain(self.phi.iter())
            .chain([&self.c1, &self.c2])
            .collect()
    }
    pub fn conjugate(&self, g: &Mat, gi: &Mat) -> Self {
        Self {
            a: conj_all(&self.a, g, gi),
            phi: conj_all(&self.phi, g, gi),
            c1: self.c1.conjugate(g, gi),
            c2: self.c2.conjugate(g, gi),
        }
    }
}

fn require_dim(grid: &Grid, d: usize) -> Result<()> {
    if grid.dim() != d {
        return Err(Error::Grid(format!("expected a {d}D grid, got {}D", grid.dim())));
    }
    Ok(())
}

// ---------------------------------------------------------------- grid operations

pub fn hw_residual(grid: &Grid, f: &HwFields, frame: &crate::lattice::Frame, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 5)?;
    let rows = frame.rows;
    let mut names = labels("two_form", &["1", "2", "3"]);
    names.extend(labels("one_form", &["0", "1", "2", "3", "v"]));
    evaluate(System::HW, grid, &f.comps(), backend, names, |s, site| hw_point(&s.at(site), &rows))
}

pub fn kw_residual(grid: &Grid, params: KWParams, f: &KwFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 4)?;
    let mut names = labels("plus", &["1", "2", "3"]);
    names.extend(labels("minus", &["1", "2", "3"]));
    names.push("scalar".into());
    let t = params.theta;
    evaluate(System::KW, grid, &f.comps(), backend, names, |s, site| kw_point(&s.at(site), t))
}

pub fn kw_combined_residual(grid: &Grid, params: KWParams, f: &KwFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 4)?;
    let (cot, csc) = params.cot_csc()?;
    evaluate(System::KWCombined, grid, &f.comps(), backend, labels("K", &SIX_LABELS), |s, site| {
        kw_combined_point(&s.at(site), cot, csc)
    })
}

pub fn kw_complex_asd_residual(grid: &Grid, params: KWParams, f: &KwFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 4)?;
    params.cot_csc()?;
    let t = params.theta;
    evaluate(System::KWComplex, grid, &f.comps(), backend, labels("R", &SIX_LABELS), |s, site| {
        kw_complex_point(&s.at(site), t)
    })
}

pub fn vw_residual(grid: &Grid, f: &VwFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 4)?;
    let mut names = labels("plus", &["1", "2", "3"]);
    names.extend(labels("one_form", &["0", "1", "2", "3"]));
    evaluate(System::VW, grid, &f.comps(), backend, names, |s, site| vw_point(&s.at(site)))
}

fn ebe_names() -> Vec<String> {
    let mut names = labels("line1", &["1", "2", "3"]);
    names.extend(labels("line2", &["1", "2", "3"]));
    names.push("line3".into());
    names
}

pub fn ebe_residual(grid: &Grid, f: &EbeFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 3)?;
    evaluate(System::EBE, grid, &f.comps(), backend, ebe_names(), |s, site| ebe_point(&s.at(site)))
}

pub fn tebe_residual(grid: &Grid, theta: f64, f: &EbeFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 3)?;
    let (cot, csc) = cot_csc(theta)?;
    evaluate(System::TEBE, grid, &f.comps(), backend, ebe_names(), |s, site| {
        tebe_point(&s.at(site), cot, csc)
    })
}

/// Holomorphic form on `Σ × ℝ`; `f.c1`, `f.c2` are not used (`φ₃` plays `c₁`).
pub fn ebe_hym_residual(grid: &Grid, f: &EbeFields, backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 3)?;
    let names = vec!["comm.12".into(), "comm.13".into(), "comm.23".into(), "moment".into()];
    evaluate(System::HYM, grid, &f.comps(), backend, names, |s, site| hym_point(&s.at(site)))
}

pub fn nahm_residual(grid: &Grid, alg: &NahmAlgebra, a_y: &Field, x: &[Field], backend: Backend) -> Result<ResidualBundle> {
    require_dim(grid, 1)?;
    check_dim(alg.k(), x.len())?;
    let system = if alg.k() == 7 { System::NahmO } else { System::NahmH };
    let mut comps = vec![a_y];
    comps.extend(x.iter());
    let names = (1..=alg.k()).map(|i| format!("X.{i}")).collect();
    evaluate(system, grid, &comps, backend, names, |s, site| {
        nahm_point(&s.at(site), alg).expect("rank checked above")
    })
}

/// `d^⋆_{A⁰}(A − A⁰) + Σ_i [(B − B^NP)_i, B^NP_i]`, with `d^⋆ = −Σ ∇_μ ι_μ`.
pub fn gauge_fixing_residual(
    grid: &Grid,
    a0: &[Field],
    a: &[Field],
    b_np: &[Field; 3],
    b: &[Field; 3],
    backend: Backend,
) -> Result<ResidualBundle> {
    let d = grid.dim();
    check_dim(d, a0.len())?;
    check_dim(d, a.len())?;
    let diff: Vec<Field> = a.iter().zip(a0).map(|(x, y)| x.zip(y, |p, q| p - q)).collect();
    let mut comps: Vec<&Field> = a0.iter().collect();
    comps.extend(diff.iter());
    comps.extend(b_np.iter());
    comps.extend(b.iter());
    evaluate(System::GaugeFixing, grid, &comps, backend, vec!["gauge".into()], |s, site| {
        let l = s.at(site);
        let mut r = zeros(l.v(0).nrows());
        for m in 0..d {
            r -= cov_at(&l, 0, d + m, m);
        }
        for i in 0..3 {
            let db = l.v(2 * d + 3 + i) - l.v(2 * d + i);
            r += br(&db, l.v(2 * d + i));
        }
        vec![r]
    })
}

/// Kapustin-Witten energy by grid quadrature over the valid sites.
pub fn kw_energy(grid: &Grid, f: &KwFields, backend: Backend) -> Result<f64> {
    require_dim(grid, 4)?;
    let s = sample(grid, &f.comps(), backend)?;
    let dens: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|site| if s.mask.0[site] { kw_energy_density(&s.at(site)) } else { 0.0 })
        .collect();
    Ok(grid.integrate(&dens))
}

/// Quadratures `(I₁, I₂, I₃, ∫‖EBE‖²)` of the Weitzenböck decomposition
/// `∫‖EBE‖² = I₁ + I₂ + I₃`, where `I₃` integrates the total-derivative
/// remainder and so vanishes on periodic grids up to discretisation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeitzenbockSplit {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub lhs: f64,
}

pub fn weitzenbock_point(l: &impl Local) -> (f64, f64, f64) {
    let e = ebe_point(l);
    let lhs: f64 = e.iter().map(fnorm_sqr).sum();
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    let mut div = zeros(l.v(0).nrows());
    for i in 0..3 {
        let (j, k) = cyc(i);
        let g = curvature_at(l, 0, j, k) - br(l.v(3 + j), l.v(3 + k));
        let d = cov_at(l, 0, 3 + k, j) - cov_at(l, 0, 3 + j, k);
        i1 += fnorm_sqr(&(g + cov_at(l, 0, 6, i)));
        i1 += fnorm_sqr(&(d + br(l.v(6), l.v(3 + i))));
        i2 += fnorm_sqr(&br(l.v(7), l.v(3 + i)));
        i2 += fnorm_sqr(&cov_at(l, 0, 7, i));
        div += cov_at(l, 0, 3 + i, i);
    }
    i1 += fnorm_sqr(&div);
    i2 += fnorm_sqr(&br(l.v(6), l.v(7)));
    (i1, i2, lhs)
}

pub fn weitzenbock_split(grid: &Grid, f: &EbeFields, backend: Backend) -> Result<WeitzenbockSplit> {
    require_dim(grid, 3)?;
    if !grid.all_periodic() {
        return Err(Error::Grid("the Weitzenböck split needs a periodic grid".into()));
    }
    let s = sample(grid, &f.comps(), backend)?;
    let pts: Vec<(f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|site| weitzenbock_point(&s.at(site)))
        .collect();
    let i1 = grid.integrate(&pts.iter().map(|p| p.0).collect::<Vec<_>>());
    let i2 = grid.integrate(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
    let lhs = grid.integrate(&pts.iter().map(|p| p.2).collect::<Vec<_>>());
    let rem: Vec<f64> = pts.iter().map(|p| p.2 - p.0 - p.1).collect();
    Ok(WeitzenbockSplit {
        i1,
        i2,
        i3: grid.integrate(&rem),
        lhs,
    })
}

// ---------------------------------------------------------------- dictionaries

/// Maximum over sites of the defects of the linear dictionaries between the
/// three Kapustin-Witten forms, relative to the largest residual norm:
///
/// * `plus = cos(θ/2) P(K)`, `minus = sin(θ/2) M(K)` for the combined form `K`;
/// * `Re P(R) = 2cos(θ/2) plus`, `Im P(R) = −2sin(θ/2) plus`,
///   `Re M(R) = 2sin(θ/2) minus`, `Im M(R) = 2cos(θ/2) minus` for the complex form `R`.
pub fn kw_forms_defect(grid: &Grid, theta: f64, f: &KwFields, backend: Backend) -> Result<f64> {
    require_dim(grid, 4)?;
    let (cot, csc) = cot_csc(theta)?;
    let s = sample(grid, &f.comps(), backend)?;
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let res: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .filter(|&site| s.mask.0[site])
        .map(|site| {
            let l = s.at(site);
            let kw = kw_point(&l, theta);
            let k = kw_combined_point(&l, cot, csc);
            let r = kw_complex_point(&l, theta);
            let (pk, mk) = (plus_part(&k), minus_part(&k));
            let (pr, mr) = (plus_part(&r), minus_part(&r));
            let mut defect: f64 = 0.0;
            for i in 0..3 {
                let (p, m) = (&kw[i], &kw[3 + i]);
                for x in [
                    p - &pk[i] * c(ch),
                    m - &mk[i] * c(sh),
                    re_g(&pr[i]) - p * c(2.0 * ch),
                    im_g(&pr[i]) + p * c(2.0 * sh),
                    re_g(&mr[i]) - m * c(2.0 * sh),
                    im_g(&mr[i]) - m * c(2.0 * ch),
                ] {
                    defect = defect.max(fnorm(&x));
                }
            }
            let scale = k.iter().chain(r.iter()).map(fnorm).fold(0.0, f64::max);
            (defect, scale)
        })
        .collect();
    let defect = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let scale = res.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(if scale > 0.0 { defect / scale } else { defect })
}

/// Relative defect of `VW(A,B,C) ↔ KW_{θ=0}(A, C dx⁰ + B_0i dx^i)`:
/// `plus = KW⁺`, `one_form_i = −KW⁻_i`, `one_form_0 = −scalar`.
pub fn vw_kw_defect(grid: &Grid, f: &VwFields, backend: Backend) -> Result<f64> {
    let vw = vw_residual(grid, f, backend)?;
    let kw = kw_residual(grid, KWParams::new(0.0)?, &f.as_kw(), backend)?;
    let pairs: [(usize, usize, f64); 7] = [
        (0, 0, 1.0),
        (1, 1, 1.0),
        (2, 2, 1.0),
        (4, 3, -1.0),
        (5, 4, -1.0),
        (6, 5, -1.0),
        (3, 6, -1.0),
    ];
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(iv, ik, s) in &pairs {
        for site in (0..grid.len()).filter(|&x| vw.mask.0[x]) {
            let a = &vw.components[iv].1.data[site];
            let b = &kw.components[ik].1.data[site];
            defect = defect.max(fnorm(&(a - b * c(s))));
            scale = scale.max(fnorm(a));
        }
    }
    Ok(if scale > 0.0 { defect / scale } else { defect })
}

/// Amplitude and mode cap used for seeded random configurations.
pub const RANDOM_AMP: f64 = 0.3;
pub const RANDOM_MODES: i64 = 1;

fn rnd(g: &Grid, n: usize, rng: &mut ChaCha8Rng) -> Field {
    random_smooth_field(g, n, RANDOM_MODES, RANDOM_AMP, rng)
}

impl KwFields {
    pub fn random(g: &Grid, n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self { a: std::array::from_fn(|_| rnd(g, n, rng)), phi: std::array::from_fn(|_| rnd(g, n, rng)) }
    }
}

impl VwFields {
    pub fn random(g: &Grid, n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            a: std::array::from_fn(|_| rnd(g, n, rng)),
            b: std::array::from_fn(|_| rnd(g, n, rng)),
            c: rnd(g, n, rng),
        }
    }
}

impl EbeFields {
    pub fn random(g: &Grid, n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            a: std::array::from_fn(|_| rnd(g, n, rng)),
            phi: std::array::from_fn(|_| rnd(g, n, rng)),
            c1: rnd(g, n, rng),
            c2: rnd(g, n, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_smooth_field, seeded_rng, Axis, Frame};
    use crate::lie::{random_unitary, spin_irrep_triple};
    use crate::octonion::DivisionAlgebra;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rf(g: &Grid, rng: &mut ChaCha8Rng) -> Field {
        random_smooth_field(g, 2, 1, 0.3, rng)
    }

    fn random_kw(g: &Grid, rng: &mut ChaCha8Rng) -> KwFields {
        KwFields {
            a: std::array::from_fn(|_| rf(g, rng)),
            phi: std::array::from_fn(|_| rf(g, rng)),
        }
    }

    fn random_ebe(g: &Grid, rng: &mut ChaCha8Rng) -> EbeFields {
        EbeFields {
            a: std::array::from_fn(|_| rf(g, rng)),
            phi: std::array::from_fn(|_| rf(g, rng)),
            c1: rf(g, rng),
            c2: rf(g, rng),
        }
    }

    fn g4() -> Grid {
        Grid::periodic(&["x0", "x1", "x2", "x3"], 6, TAU).unwrap()
    }

    fn g3(n: usize) -> Grid {
        Grid::periodic(&["x1", "x2", "x3"], n, TAU).unwrap()
    }

    fn zero_kw(g: &Grid) -> KwFields {
        KwFields {
            a: std::array::from_fn(|_| Field::zeros(g, 2)),
            phi: std::array::from_fn(|_| Field::zeros(g, 2)),
        }
    }

    #[test]
    fn zero_fields_have_zero_residuals() {
        let g = g4();
        let z = zero_kw(&g);
        let p = KWParams::new(1.0).unwrap();
        assert_eq!(kw_residual(&g, p, &z, Backend::Spectral).unwrap().max_norm(), 0.0);
        assert_eq!(kw_combined_residual(&g, p, &z, Backend::Spectral).unwrap().max_norm(), 0.0);
        assert_eq!(kw_complex_asd_residual(&g, p, &z, Backend::Spectral).unwrap().max_norm(), 0.0);
        assert_eq!(kw_energy(&g, &z, Backend::Spectral).unwrap(), 0.0);
        let g5 = Grid::periodic(&["a", "b", "c", "d", "e"], 4, TAU).unwrap();
        let hw = HwFields {
            a: std::array::from_fn(|_| Field::zeros(&g5, 2)),
            b: std::array::from_fn(|_| Field::zeros(&g5, 2)),
        };
        assert_eq!(hw_residual(&g5, &hw, &Frame::standard(), Backend::Spectral).unwrap().max_norm(), 0.0);
        let g = g3(6);
        let e = EbeFields {
            a: std::array::from_fn(|_| Field::zeros(&g, 2)),
            phi: std::array::from_fn(|_| Field::zeros(&g, 2)),
            c1: Field::zeros(&g, 2),
            c2: Field::zeros(&g, 2),
        };
        assert_eq!(ebe_residual(&g, &e, Backend::Spectral).unwrap().max_norm(), 0.0);
        assert_eq!(ebe_hym_residual(&g, &e, Backend::Spectral).unwrap().max_norm(), 0.0);
        let w = weitzenbock_split(&g, &e, Backend::Spectral).unwrap();
        assert_eq!((w.i1, w.i2, w.i3, w.lhs), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn kw_forms_agree_on_random_fields() {
        let g = g4();
        let mut rng = seeded_rng(5);
        for theta in [PI / 6.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0] {
            let f = random_kw(&g, &mut rng);
            assert!(kw_forms_defect(&g, theta, &f, Backend::Spectral).unwrap() < 1e-12);
        }
        let f = random_kw(&g, &mut rng);
        assert!(kw_combined_residual(&g, KWParams::new(PI).unwrap(), &f, Backend::Spectral).is_err());
        assert!(KWParams::new(7.0).is_err());
    }

    #[test]
    fn combined_at_right_angle_is_f_minus_star_dphi() {
        let g = g4();
        let f = random_kw(&g, &mut seeded_rng(8));
        let s = sample(&g, &f.comps(), Backend::Spectral).unwrap();
        for site in [0, 17, 300] {
            let l = s.at(site);
            let k = kw_combined_point(&l, 0.0, 1.0);
            let (gg, d) = kw_parts(&l);
            let sd = star6(&d);
            for a in 0..6 {
                assert_eq!(k[a], &gg[a] - &sd[a]);
            }
        }
    }

    #[test]
    fn flat_connection_with_parallel_higgs_field() {
        // Abelian constant A and φ: flat, ∇φ = 0, d^⋆φ = 0.
        let g = g4();
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        let kf = KwFields {
            a: std::array::from_fn(|m| Field::from_fn(&g, 2, |_| &t * c(0.1 * m as f64))),
            phi: std::array::from_fn(|m| Field::from_fn(&g, 2, |_| &t * c(0.3 - 0.2 * m as f64))),
        };
        for theta in [0.0, 0.7, PI / 2.0] {
            let r = kw_residual(&g, KWParams::new(theta).unwrap(), &kf, Backend::Spectral).unwrap();
            assert!(r.max_norm() < 1e-13);
        }
    }

    /// Linear abelian connection `A_1 = x0 T`, `A_3 = s·x2 T` on a clamped
    /// grid: `F_01 = T`, `F_23 = s T`, self-dual for `s = 1`, anti-self-dual for `s = −1`.
    fn linear_abelian(g: &Grid, s: f64) -> Vec<Field> {
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        let (t1, t3) = (t.clone(), t);
        let mut a = vec![
            Field::zeros(g, 2),
            Field::from_fn(g, 2, move |x| &t1 * c(x[0])),
            Field::zeros(g, 2),
            Field::from_fn(g, 2, move |x| &t3 * c(s * x[2])),
        ];
        a.extend((4..g.dim()).map(|_| Field::zeros(g, 2)));
        a
    }

    fn clamped(d: usize) -> Grid {
        Grid::new((0..d).map(|i| Axis::clamped(&format!("x{i}"), 5, 0.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn self_dual_abelian_field_at_zero_angle() {
        let g = clamped(4);
        let a = linear_abelian(&g, 1.0);
        let kf = KwFields {
            a: std::array::from_fn(|m| a[m].clone()),
            phi: std::array::from_fn(|_| Field::zeros(&g, 2)),
        };
        let r = kw_residual(&g, KWParams::new(0.0).unwrap(), &kf, Backend::Central2).unwrap();
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        for site in (0..g.len()).filter(|&s| r.mask.0[s]) {
            assert!(fnorm(&(&r.component("plus.1").unwrap().data[site] - &t * c(2.0))) < 1e-12);
            for k in 3..6 {
                assert!(fnorm(&r.components[k].1.data[site]) < 1e-12);
            }
        }
    }

    #[test]
    fn vw_matches_kw_at_zero_angle() {
        let g = g4();
        let mut rng = seeded_rng(21);
        let f = VwFields {
            a: std::array::from_fn(|_| rf(&g, &mut rng)),
            b: std::array::from_fn(|_| rf(&g, &mut rng)),
            c: rf(&g, &mut rng),
        };
        assert!(vw_kw_defect(&g, &f, Backend::Spectral).unwrap() < 1e-12);
    }

    #[test]
    fn vw_anti_self_dual_abelian() {
        let g = clamped(4);
        let a = linear_abelian(&g, -1.0);
        let f = VwFields {
            a: std::array::from_fn(|m| a[m].clone()),
            b: std::array::from_fn(|_| Field::zeros(&g, 2)),
            c: Field::zeros(&g, 2),
        };
        let r = vw_residual(&g, &f, Backend::Central2).unwrap();
        assert!(r.max_norm() < 1e-12 && r.mask.count() > 0);
        let zero = VwFields {
            a: std::array::from_fn(|_| Field::zeros(&g, 2)),
            b: std::array::from_fn(|_| Field::zeros(&g, 2)),
            c: Field::zeros(&g, 2),
        };
        assert_eq!(vw_residual(&g, &zero, Backend::Central2).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn tebe_right_angle_is_ebe_bit_for_bit() {
        let g = g3(6);
        let f = random_ebe(&g, &mut seeded_rng(3));
        let a = tebe_residual(&g, FRAC_PI_2, &f, Backend::Spectral).unwrap();
        let b = ebe_residual(&g, &f, Backend::Spectral).unwrap();
        for ((_, x), (_, y)) in a.components.iter().zip(&b.components) {
            assert_eq!(x.data, y.data);
        }
        assert!(tebe_residual(&g, 0.0, &f, Backend::Spectral).is_err());
    }

    #[test]
    fn bogomolny_monopole_free_pair() {
        // c₁ = x1 T, A_3 = −x2 T: F_23 = −T = −∂_1 c₁.
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        let g = Grid::new(vec![
            Axis::clamped("x1", 9, 0.0, 1.0),
            Axis::clamped("x2", 9, 0.0, 1.0),
            Axis::clamped("x3", 9, 0.0, 1.0),
        ])
        .unwrap();
        let (ta, tc) = (t.clone(), t.clone());
        let f = EbeFields {
            a: [
                Field::zeros(&g, 2),
                Field::zeros(&g, 2),
                Field::from_fn(&g, 2, move |x| &ta * c(-x[1])),
            ],
            phi: std::array::from_fn(|_| Field::zeros(&g, 2)),
            c1: Field::from_fn(&g, 2, move |x| &tc * c(x[0])),
            c2: Field::zeros(&g, 2),
        };
        let r = ebe_residual(&g, &f, Backend::Central2).unwrap();
        assert!(r.max_norm() < 1e-12);
        assert!(r.mask.count() < g.len());
    }

    #[test]
    fn hym_dictionary_on_random_fields() {
        let g = g3(6);
        let mut f = random_ebe(&g, &mut seeded_rng(13));
        let hym = ebe_hym_residual(&g, &f, Backend::Spectral).unwrap();
        // compare with EBE at φ̃ = (φ₁, φ₂, 0), c₁ = φ₃, c₂ = 0
        f.c1 = f.phi[2].clone();
        f.phi[2] = Field::zeros(&g, 2);
        f.c2 = Field::zeros(&g, 2);
        let ebe = ebe_residual(&g, &f, Backend::Spectral).unwrap();
        let scale = ebe.max_norm();
        for site in 0..g.len() {
            let h: Vec<Mat> = hym.components.iter().map(|(_, x)| x.data[site].clone()).collect();
            let (e, re_mm) = ebe_from_hym(&h);
            assert!(fnorm(&re_mm) < 1e-12 * scale);
            for (k, (_, x)) in ebe.components.iter().enumerate() {
                assert!(fnorm(&(&e[k] - &x.data[site])) < 1e-12 * scale, "line {k}");
            }
        }
    }

    #[test]
    fn hym_abelian_holomorphic_data() {
        // Abelian, A = 0, φ₃ = 0: [𝒟₁, 𝒟₂] = ad (∂₁ + i∂₂)(φ₁ − iφ₂) vanishes
        // when φ₁ − iφ₂ is holomorphic in z = x1 + i x2.
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        let g = Grid::new(vec![
            Axis::clamped("x1", 9, 0.0, 1.0),
            Axis::clamped("x2", 9, 0.0, 1.0),
            Axis::periodic("x3", 4, 1.0),
        ])
        .unwrap();
        // φ₁ − iφ₂ = z² with z = x1 + i x2
        let (t1, t2) = (t.clone(), t.clone());
        let f = EbeFields {
            a: std::array::from_fn(|_| Field::zeros(&g, 2)),
            phi: [
                Field::from_fn(&g, 2, move |x| &t1 * c(x[0] * x[0] - x[1] * x[1])),
                Field::from_fn(&g, 2, move |x| &t2 * c(-2.0 * x[0] * x[1])),
                Field::zeros(&g, 2),
            ],
            c1: Field::zeros(&g, 2),
            c2: Field::zeros(&g, 2),
        };
        let r = ebe_hym_residual(&g, &f, Backend::Central2).unwrap();
        let c12 = r.component("comm.12").unwrap();
        for site in (0..g.len()).filter(|&s| r.mask.0[s]) {
            assert!(fnorm(&c12.data[site]) < 1e-12);
        }
    }

    #[test]
    fn nahm_pole_residual() {
        let t = spin_irrep_triple(2).unwrap();
        let g = Grid::new(vec![Axis::clamped("y", 41, 0.5, 2.5)]).unwrap();
        let x: Vec<Field> = (0..3)
            .map(|i| {
                let ti = t.t[i].clone();
                Field::from_fn(&g, 3, move |y| &ti * c(1.0 / y[0]))
            })
            .collect();
        let a = Field::zeros(&g, 3);
        let alg = NahmAlgebra::Table(StructureTable::new(DivisionAlgebra::H));
        // compare at the common point y = 1
        let r1 = nahm_residual(&g, &alg, &a, &x, Backend::Central2).unwrap().norm_at(10);
        let g2 = Grid::new(vec![Axis::clamped("y", 81, 0.5, 2.5)]).unwrap();
        let x2: Vec<Field> = (0..3)
            .map(|i| {
                let ti = t.t[i].clone();
                Field::from_fn(&g2, 3, move |y| &ti * c(1.0 / y[0]))
            })
            .collect();
        let r2 = nahm_residual(&g2, &alg, &Field::zeros(&g2, 3), &x2, Backend::Central2)
            .unwrap()
            .norm_at(20);
        assert!((r1 / r2).log2() > 1.9, "order {}", (r1 / r2).log2());
        // zero-padded to the octonions
        let mut xo = x.clone();
        xo.extend((0..4).map(|_| Field::zeros(&g, 3)));
        let alg_o = NahmAlgebra::Table(StructureTable::new(DivisionAlgebra::O));
        let ro = nahm_residual(&g, &alg_o, &a, &xo, Backend::Central2).unwrap().norm_at(10);
        assert!((ro - r1).abs() < 1e-14);
        assert!(nahm_residual(&g, &alg_o, &a, &x, Backend::Central2).is_err());
    }

    #[test]
    fn gauge_fixing_cases() {
        let g = Grid::periodic(&["x", "y", "z"], 16, TAU).unwrap();
        let mut rng = seeded_rng(4);
        let a0: Vec<Field> = (0..3).map(|_| rf(&g, &mut rng)).collect();
        let bnp: [Field; 3] = std::array::from_fn(|_| rf(&g, &mut rng));
        let r = gauge_fixing_residual(&g, &a0, &a0, &bnp, &bnp, Backend::Spectral).unwrap();
        assert_eq!(r.max_norm(), 0.0);
        // A − A⁰ = dχ T with A⁰ = 0: residual = −Δχ T.
        let t = spin_irrep_triple(1).unwrap().t[0].clone();
        let z: Vec<Field> = (0..3).map(|_| Field::zeros(&g, 2)).collect();
        let a: Vec<Field> = (0..3)
            .map(|m| {
                let t = t.clone();
                Field::from_fn(&g, 2, move |x| {
                    // χ = sin x cos 2y
                    let d = [x[0].cos() * (2.0 * x[1]).cos(), -2.0 * x[0].sin() * (2.0 * x[1]).sin(), 0.0];
                    &t * c(d[m])
                })
            })
            .collect();
        let zb: [Field; 3] = std::array::from_fn(|_| Field::zeros(&g, 2));
        let r = gauge_fixing_residual(&g, &z, &a, &zb, &zb, Backend::Spectral).unwrap();
        for site in 0..g.len() {
            let x = g.coords(site);
            let lap = -5.0 * x[0].sin() * (2.0 * x[1]).cos();
            assert!(fnorm(&(&r.components[0].1.data[site] - &t * c(-lap))) < 1e-11);
        }
        // divergence-free abelian A − A⁰
        let a: Vec<Field> = (0..3)
            .map(|m| {
                let t = t.clone();
                Field::from_fn(&g, 2, move |x| &t * c([x[1].sin(), x[2].cos(), x[0].sin()][m]))
            })
            .collect();
        let r = gauge_fixing_residual(&g, &z, &a, &zb, &zb, Backend::Spectral).unwrap();
        assert!(r.max_norm() < 1e-12);
    }

    #[test]
    fn energy_of_constant_abelian_curvature() {
        let t = spin_irrep_triple(1).unwrap().t[2].clone();
        let g = Grid::new((0..4).map(|i| Axis::clamped(&format!("x{i}"), 6, 0.0, 1.0)).collect()).unwrap();
        let tt = t.clone();
        let f = KwFields {
            a: [
                Field::zeros(&g, 2),
                Field::from_fn(&g, 2, move |x| &tt * c(x[0])),
                Field::zeros(&g, 2),
                Field::zeros(&g, 2),
            ],
            phi: std::array::from_fn(|_| Field::zeros(&g, 2)),
        };
        let e = kw_energy(&g, &f, Backend::Central2).unwrap();
        let s = sample(&g, &f.comps(), Backend::Central2).unwrap();
        let vol: f64 = (0..g.len()).filter(|&x| s.mask.0[x]).map(|x| g.weight(x)).sum();
        assert!((e - vol * fnorm_sqr(&t)).abs() < 1e-13);
    }

    #[test]
    fn energy_is_gauge_invariant() {
        let g = g4();
        let mut rng = seeded_rng(2);
        let f = random_kw(&g, &mut rng);
        let u = random_unitary(2, &mut rng);
        let ui = u.adjoint();
        let e1 = kw_energy(&g, &f, Backend::Spectral).unwrap();
        let e2 = kw_energy(&g, &f.conjugate(&u, &ui), Backend::Spectral).unwrap();
        assert!((e1 - e2).abs() < 1e-10 * e1);
    }

    #[test]
    fn weitzenbock_on_periodic_fields() {
        let g = g3(12);
        let mut f = random_ebe(&g, &mut seeded_rng(9));
        let w = weitzenbock_split(&g, &f, Backend::Spectral).unwrap();
        assert!((w.lhs - w.i1 - w.i2).abs() / w.lhs < 1e-8, "{w:?}");
        assert!((w.i3 - (w.lhs - w.i1 - w.i2)).abs() < 1e-8 * w.lhs);
        f.c2 = Field::zeros(&g, 2);
        assert_eq!(weitzenbock_split(&g, &f, Backend::Spectral).unwrap().i2, 0.0);
        let gc = Grid::new(vec![Axis::clamped("a", 6, 0.0, 1.0), Axis::periodic("b", 6, 1.0), Axis::periodic("c", 6, 1.0)]).unwrap();
        let fc = random_ebe(&gc, &mut seeded_rng(1));
        assert!(weitzenbock_split(&gc, &fc, Backend::Central2).is_err());
    }

    #[test]
    fn residuals_are_gauge_equivariant() {
        let mut rng = seeded_rng(30);
        let u = random_unitary(2, &mut rng);
        let ui = u.adjoint();
        let check = |a: &ResidualBundle, b: &ResidualBundle| {
            for ((_, x), (_, y)) in a.components.iter().zip(&b.components) {
                for (p, q) in x.data.iter().zip(&y.data) {
                    assert!(fnorm(&(&u * p * &ui - q)) < 1e-12);
                }
            }
        };
        let g = g4();
        let f = random_kw(&g, &mut rng);
        let fu = f.conjugate(&u, &ui);
        let p = KWParams::new(0.9).unwrap();
        check(&kw_residual(&g, p, &f, Backend::Spectral).unwrap(), &kw_residual(&g, p, &fu, Backend::Spectral).unwrap());
        check(
            &kw_complex_asd_residual(&g, p, &f, Backend::Spectral).unwrap(),
            &kw_complex_asd_residual(&g, p, &fu, Backend::Spectral).unwrap(),
        );
        let g = g3(6);
        let f = random_ebe(&g, &mut rng);
        let fu = f.conjugate(&u, &ui);
        check(&tebe_residual(&g, 1.1, &f, Backend::Spectral).unwrap(), &tebe_residual(&g, 1.1, &fu, Backend::Spectral).unwrap());
        check(&ebe_hym_residual(&g, &f, Backend::Spectral).unwrap(), &ebe_hym_residual(&g, &fu, Backend::Spectral).unwrap());
        let g5 = Grid::periodic(&["a", "b", "c", "d", "e"], 4, TAU).unwrap();
        let h = HwFields {
            a: std::array::from_fn(|_| rf(&g5, &mut rng)),
            b: std::array::from_fn(|_| rf(&g5, &mut rng)),
        };
        let fr = Frame::standard();
        check(
            &hw_residual(&g5, &h, &fr, Backend::Spectral).unwrap(),
            &hw_residual(&g5, &h.conjugate(&u, &ui), &fr, Backend::Spectral).unwrap(),
        );
    }

    #[test]
    fn hw_anti_self_dual_abelian_field() {
        // ASD in the 4-plane orthogonal to v = ∂_4, with ι_v F = 0.
        let g = clamped(5);
        let a = linear_abelian(&g, -1.0);
        let h = HwFields {
            a: std::array::from_fn(|m| a[m].clone()),
            b: std::array::from_fn(|_| Field::zeros(&g, 2)),
        };
        let r = hw_residual(&g, &h, &Frame::standard(), Backend::Central2).unwrap();
        assert!(r.max_norm() < 1e-12 && r.mask.count() > 0);
    }

    #[test]
    fn summary_and_csv() {
        let g = g3(6);
        let f = random_ebe(&g, &mut seeded_rng(3));
        let r = ebe_residual(&g, &f, Backend::Spectral).unwrap();
        let s = serde_json::to_value(r.summary()).unwrap();
        assert_eq!(s["system"], "EBE");
        assert_eq!(s["backend"], "spectral");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        r.write_csv(&p).unwrap();
        let lines = std::fs::read_to_string(&p).unwrap().lines().count();
        assert_eq!(lines, 1 + 7 * g.len());
    }
}
