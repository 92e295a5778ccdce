//! Closed-form singular model solutions: the β-twisted Nahm pole and the
//! SU(2) knot singularity of the extended Bogomolny equations, with their
//! verification (analytic and finite-difference residuals), monodromy,
//! nilpotency and the compatibility limit with the Nahm pole.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{analytic_jet, Backend};
use crate::lie::{c, fnorm, im_g, re_g, zeros, Mat, SL2CTriple, SU2Triple, C64};
use crate::residual::{ebe_point, nahm_point, NahmAlgebra};

/// Anti-cyclic permutation `τ = (2 3)` of the three spatial indices
/// (0-based one-line form).
pub const TAU_PERM: [usize; 3] = [0, 2, 1];

/// `A_i = sin β t_{τ(i)} / y`, `φ_i = cos β t_i / y`, `A_s = A_y = 0`.
#[derive(Clone, Debug)]
pub struct NahmPoleModel {
    pub triple: SU2Triple,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NahmPoleValues {
    pub a: [Mat; 3],
    pub phi: [Mat; 3],
}

impl NahmPoleModel {
    pub fn new(triple: SU2Triple, beta: f64) -> Self {
        Self { triple, beta }
    }

    pub fn eval(&self, y: f64) -> Result<NahmPoleValues> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("Nahm pole model needs y > 0, got {y}")));
        }
        let (cb, sb) = (self.beta.cos(), self.beta.sin());
        let t = &self.triple.t;
        Ok(NahmPoleValues {
            a: [0, 1, 2].map(|i| &t[TAU_PERM[i]] * c(sb / y)),
            phi: [0, 1, 2].map(|i| &t[i] * c(cb / y)),
        })
    }

    /// The octonionic Nahm vector `(φ₁, φ₂, φ₃, −A_s, A₁, A₂, A₃)`.
    pub fn nahm_vector(&self, y: f64) -> Result<Vec<Mat>> {
        let v = self.eval(y)?;
        let n = self.triple.dim();
        let mut x: Vec<Mat> = v.phi.to_vec();
        x.push(zeros(n));
        x.extend(v.a);
        Ok(x)
    }
}

pub fn eval_nahm_pole(model: &NahmPoleModel, y: f64) -> Result<NahmPoleValues> {
    model.eval(y)
}

#[derive(Clone, Debug, Serialize)]
pub struct NahmPoleReport {
    pub beta: f64,
    /// Max over samples of `‖X' + X ×_β X‖ / ‖X'‖` with `X' = −X/y` exact.
    pub analytic_max_rel: f64,
    /// `(h, max residual)` for the finite-difference sweep.
    pub sweep: Vec<(f64, f64)>,
    /// Observed order from the last two sweep entries.
    pub order: f64,
}

/// Residual of the twisted octonionic Nahm operator on the model, exactly
/// (analytic `d/dy`) and by a central finite-difference sweep in `y`.
pub fn verify_nahm_pole(model: &NahmPoleModel, ys: &[f64], sweep: &[f64], backend: Backend) -> Result<NahmPoleReport> {
    let alg = NahmAlgebra::Twisted(model.beta);
    let mut rel: f64 = 0.0;
    for &y in ys {
        let x = model.nahm_vector(y)?;
        let sq = alg.square(&x)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for (xi, si) in x.iter().zip(&sq) {
            let dx = xi * c(-1.0 / y);
            num += crate::lie::fnorm_sqr(&(&dx + si));
            den += crate::lie::fnorm_sqr(&dx);
        }
        rel = rel.max((num / den.max(f64::MIN_POSITIVE)).sqrt());
    }
    let n = model.triple.dim();
    let mut out = Vec::with_capacity(sweep.len());
    for &h in sweep {
        let mut worst: f64 = 0.0;
        for &y in ys {
            if y - 2.0 * h <= 0.0 {
                return Err(Error::Domain(format!("stencil of width {h} reaches y = 0 from {y}")));
            }
            let f = |p: &[f64]| -> Vec<Mat> {
                let mut v = vec![zeros(n)];
                v.extend(model.nahm_vector(p[0]).expect("y > 0 checked"));
                v
            };
            let jet = analytic_jet(&f, &[y], h, backend)?;
            let r = nahm_point(&jet, &alg)?;
            worst = worst.max(r.iter().map(|m| crate::lie::fnorm_sqr(m)).sum::<f64>().sqrt());
        }
        out.push((h, worst));
    }
    Ok(NahmPoleReport {
        beta: model.beta,
        analytic_max_rel: rel,
        order: observed_order(&out),
        sweep: out,
    })
}

fn observed_order(sweep: &[(f64, f64)]) -> f64 {
    match sweep {
        [.., (h0, e0), (h1, e1)] if *e1 > 0.0 => (e0 / e1).ln() / (h0 / h1).ln(),
        _ => f64::NAN,
    }
}

// ---------------------------------------------------------------- knot model

/// SU(2) knot singularity of charge `λ` in spherical coordinates
/// `R² = x₂² + x₃² + y²`, `cos ψ = y/R`, `ϑ = atan2(x₃, x₂)`:
///
/// * `A_ϑ = −(λ+1) sin²ψ [(1+c)^λ − (1−c)^λ] / D · t₁`
/// * `φ₁ = −(λ+1)/R · [(1+c)^{λ+1} + (1−c)^{λ+1}] / D · t₁`
/// * `ϕ = (λ+1)/R · sin^λψ e^{iλϑ} / D · 2E`
///
/// with `c = cos ψ`, `D = (1+c)^{λ+1} − (1−c)^{λ+1}`, `t₁ = (i/2)H`, and
/// `(E, H, F)` the given sl(2,ℂ) triple. As an extended Bogomolny tuple on
/// axes `(x₂, x₃, y)`: `A = A_ϑ dϑ`, `φ̃ = (Re ϕ, −Im ϕ, 0)`, `c₁ = φ₁`, `c₂ = 0`.
#[derive(Clone, Debug)]
pub struct KnotSingularityModel {
    pub lambda: u32,
    pub sl2: SL2CTriple,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnotValues {
    pub a_theta: Mat,
    pub phi1: Mat,
    pub varphi: Mat,
}

impl KnotSingularityModel {
    pub fn new(lambda: u32, sl2: SL2CTriple) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::InvalidArgument("knot charge λ must be positive".into()));
        }
        Ok(Self { lambda, sl2 })
    }

    /// Standard model built from the spin-½ triple.
    pub fn standard(lambda: u32) -> Result<Self> {
        Self::new(lambda, crate::lie::spin_irrep_triple(1)?.sl2c())
    }

    fn t1(&self) -> Mat {
        &self.sl2.h * C64::new(0.0, 0.5)
    }

    pub fn eval(&self, r: f64, psi: f64, theta: f64) -> Result<KnotValues> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("knot model needs R > 0, got {r}")));
        }
        if !(psi > 0.0 && psi < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "knot model needs 0 < ψ < π/2 (ψ = 0 is the coordinate axis, ψ = π/2 the pole), got {psi}"
            )));
        }
        let lam = self.lambda as i32;
        let l1 = (lam + 1) as f64;
        let cs = psi.cos();
        let sn = psi.sin();
        let d = (1.0 + cs).powi(lam + 1) - (1.0 - cs).powi(lam + 1);
        if !(d > 0.0) {
            return Err(Error::Domain(format!("knot denominator vanishes at ψ = {psi}")));
        }
        let t1 = self.t1();
        let a_theta = &t1 * c(-l1 * sn * sn * ((1.0 + cs).powi(lam) - (1.0 - cs).powi(lam)) / d);
        let phi1 = &t1 * c(-l1 / r * ((1.0 + cs).powi(lam + 1) + (1.0 - cs).powi(lam + 1)) / d);
        let phase = C64::from_polar(l1 / r * sn.powi(lam) / d, self.lambda as f64 * theta);
        let varphi = &self.sl2.e * (phase * c(2.0));
        Ok(KnotValues { a_theta, phi1, varphi })
    }

    /// Extended Bogomolny layout `(A₁, A₂, A₃, φ̃₁, φ̃₂, φ̃₃, c₁, c₂)` at the
    /// Cartesian point `(x₂, x₃, y)`.
    pub fn ebe_fields(&self, x: &[f64]) -> Result<Vec<Mat>> {
        let (x2, x3, y) = (x[0], x[1], x[2]);
        let rr = (x2 * x2 + x3 * x3 + y * y).sqrt();
        let rho2 = x2 * x2 + x3 * x3;
        if rho2 == 0.0 || rr == 0.0 {
            return Err(Error::Domain("knot model is singular on the axis x₂ = x₃ = 0".into()));
        }
        let psi = (y / rr).clamp(-1.0, 1.0).acos();
        let v = self.eval(rr, psi, x3.atan2(x2))?;
        let n = v.phi1.nrows();
        Ok(vec![
            &v.a_theta * c(-x3 / rho2),
            &v.a_theta * c(x2 / rho2),
            zeros(n),
            re_g(&v.varphi),
            -im_g(&v.varphi),
            zeros(n),
            v.phi1,
            zeros(n),
        ])
    }

    /// Coefficient `z` of `ϕ = z · 2E`.
    pub fn e_coefficient(&self, v: &KnotValues) -> C64 {
        let e2 = &self.sl2.e * c(2.0);
        let num: C64 = e2.iter().zip(v.varphi.iter()).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = e2.iter().map(|a| a.norm_sqr()).sum();
        num / den
    }
}

pub fn eval_knot_model(model: &KnotSingularityModel, r: f64, psi: f64, theta: f64) -> Result<KnotValues> {
    model.eval(r, psi, theta)
}

#[derive(Clone, Debug, Serialize)]
pub struct KnotReport {
    pub lambda: u32,
    /// `(h_rel, max residual)`; the step at each point is `h_rel · y`.
    pub sweep: Vec<(f64, f64)>,
    /// Max residual after Richardson extrapolation of the two finest steps.
    pub extrapolated: f64,
    pub order: f64,
    /// Unwrapped phase change of the `E`-coefficient over the `ϑ`-circle, / 2π.
    pub winding: f64,
    pub monodromy_defect: f64,
    /// Max `‖ϕ²‖` over all samples.
    pub nilpotency_defect: f64,
}

/// Interior test window: `R ∈ [0.5, 2]`, `ψ ∈ [0.2, 1.3]`, three `ϑ`.
pub fn default_knot_window() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        for psi in [0.2, 0.75, 1.3] {
            for th in [0.0, 2.0, 4.0] {
                pts.push((r, psi, th));
            }
        }
    }
    pts
}

/// Extended Bogomolny residual of the model at `points = (R, ψ, ϑ)` under a
/// finite-difference sweep with steps `h_rel · y`; consecutive steps must
/// halve. Also measures winding, monodromy and nilpotency.
pub fn verify_knot_model(
    model: &KnotSingularityModel,
    points: &[(f64, f64, f64)],
    sweep: &[f64],
    backend: Backend,
) -> Result<KnotReport> {
    if sweep.len() < 2 || sweep.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument("the sweep must halve at every step".into()));
    }
    let p = backend
        .nominal_order()
        .ok_or_else(|| Error::InvalidArgument("finite-difference backend required".into()))?;
    let f = |x: &[f64]| model.ebe_fields(x);
    let mut per_h = vec![0.0f64; sweep.len()];
    let mut extrap: f64 = 0.0;
    let mut nil: f64 = 0.0;
    for &(r, psi, th) in points {
        let x = [r * psi.sin() * th.cos(), r * psi.sin() * th.sin(), r * psi.cos()];
        let y = x[2];
        let mut residuals: Vec<Vec<Mat>> = Vec::new();
        for (k, &hr) in sweep.iter().enumerate() {
            let h = hr * y;
            // the stencil must stay inside the model's domain
            for ax in 0..3 {
                for s in [-2.0, 2.0] {
                    let mut q = x;
                    q[ax] += s * h;
                    f(&q)?;
                }
            }
            let jet = analytic_jet(&|q: &[f64]| f(q).expect("domain checked"), &x, h, backend)?;
            let res = ebe_point(&jet);
            per_h[k] = per_h[k].max(res.iter().map(crate::lie::fnorm_sqr).sum::<f64>().sqrt());
            residuals.push(res);
        }
        let (coarse, fine) = (&residuals[sweep.len() - 2], &residuals[sweep.len() - 1]);
        let w = 2f64.powf(p);
        let ext: f64 = coarse
            .iter()
            .zip(fine)
            .map(|(a, b)| crate::lie::fnorm_sqr(&((b * c(w) - a) * c(1.0 / (w - 1.0)))))
            .sum::<f64>()
            .sqrt();
        extrap = extrap.max(ext);
        let v = model.eval(r, psi, th)?;
        nil = nil.max(fnorm(&(&v.varphi * &v.varphi)));
    }
    let sweep_out: Vec<(f64, f64)> = sweep.iter().copied().zip(per_h).collect();
    let (winding, monodromy_defect) = winding_and_monodromy(model, 1.0, 0.8, 256)?;
    Ok(KnotReport {
        lambda: model.lambda,
        order: observed_order(&sweep_out),
        sweep: sweep_out,
        extrapolated: extrap,
        winding,
        monodromy_defect,
        nilpotency_defect: nil,
    })
}

/// Unwrapped phase change of the `E`-coefficient around the `ϑ`-circle at
/// `(R, ψ)` divided by `2π`, and `max ‖field(ϑ + 2π) − field(ϑ)‖`.
pub fn winding_and_monodromy(model: &KnotSingularityModel, r: f64, psi: f64, samples: usize) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut prev = model.e_coefficient(&model.eval(r, psi, 0.0)?).arg();
    let mut mono: f64 = 0.0;
    for k in 1..=samples {
        let th = TAU * k as f64 / samples as f64;
        let v = model.eval(r, psi, th)?;
        let a = model.e_coefficient(&v).arg();
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= TAU;
        }
        while d < -std::f64::consts::PI {
            d += TAU;
        }
        total += d;
        prev = a;
        let w = model.eval(r, psi, th - TAU)?;
        mono = mono
            .max(fnorm(&(&v.varphi - &w.varphi)))
            .max(fnorm(&(&v.a_theta - &w.a_theta)))
            .max(fnorm(&(&v.phi1 - &w.phi1)));
    }
    Ok((total / TAU, mono))
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    pub lambda: u32,
    pub r: f64,
    /// `(cos ψ, Higgs defect, connection defect)` with the Higgs defect
    /// `max(‖y c₁ + t₁‖, ‖y φ̃₁ − Re(e^{iλϑ}E)‖, ‖y φ̃₂ + Im(e^{iλϑ}E)‖)` and
    /// the connection defect `‖y A‖`.
    pub sequence: Vec<(f64, f64, f64)>,
    pub higgs_rate: f64,
    pub connection_rate: f64,
}

/// Approach to the untwisted Nahm pole `y · (c₁, φ̃₁, φ̃₂) → (−t₁, Re(e^{iλϑ}E), −Im(e^{iλϑ}E))`,
/// `y · A → 0`, along `ψ → π/2` at fixed `R` and `ϑ`. Rates are slopes of
/// `log defect` against `log cos ψ` over the last two entries.
pub fn knot_np_compatibility(model: &KnotSingularityModel, r: f64, theta: f64, cos_psi: &[f64]) -> Result<CompatibilityReport> {
    let t1 = model.t1();
    let e = &model.sl2.e * C64::from_polar(1.0, model.lambda as f64 * theta);
    let mut seq = Vec::with_capacity(cos_psi.len());
    for &cp in cos_psi {
        let psi = cp.acos();
        let x = [r * psi.sin() * theta.cos(), r * psi.sin() * theta.sin(), r * cp];
        let y = x[2];
        let f = model.ebe_fields(&x)?;
        let higgs = fnorm(&(&f[6] * c(y) + &t1))
            .max(fnorm(&(&f[3] * c(y) - re_g(&e))))
            .max(fnorm(&(&f[4] * c(y) + im_g(&e))));
        let conn = (fnorm(&f[0]).powi(2) + fnorm(&f[1]).powi(2)).sqrt() * y;
        seq.push((cp, higgs, conn));
    }
    let rate = |k: usize| -> f64 {
        match seq.as_slice() {
            [.., a, b] => {
                let (ea, eb) = if k == 1 { (a.1, b.1) } else { (a.2, b.2) };
                (ea / eb).ln() / (a.0 / b.0).ln()
            }
            _ => f64::NAN,
        }
    };
    Ok(CompatibilityReport {
        lambda: model.lambda,
        r,
        higgs_rate: rate(1),
        connection_rate: rate(2),
        sequence: seq,
    })
}

/// Boundary data: a Nahm pole of type `rho` at incidence angle `β`, with knot
/// singularities of the given charges on the boundary.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub rho: SU2Triple,
    pub beta: f64,
    pub knot_charges: Vec<u32>,
}

impl BoundaryData {
    /// Knots are compatible with the pole when the pole is untwisted and each
    /// knot model's leading coefficients near `ψ = π/2` form an su(2) triple
    /// with the Casimir of `rho` (checked at `R = 1`, `cos ψ = 1e-4`).
    pub fn compatible(&self) -> Result<bool> {
        if self.beta.abs() > 1e-12 && !self.knot_charges.is_empty() {
            return Ok(false);
        }
        let cas = self.rho.casimir();
        for &lam in &self.knot_charges {
            let model = KnotSingularityModel::new(lam, self.rho.sl2c())?;
            let cp: f64 = 1e-4;
            let x = [(1.0 - cp * cp).sqrt(), 0.0, cp];
            let f = model.ebe_fields(&x)?;
            let lead = [&f[6] * c(cp), &f[3] * c(cp), &f[4] * c(cp)];
            // (−t₁, t₂, t₃) up to O(cos²ψ)
            let trip = [-&lead[0], lead[1].clone(), lead[2].clone()];
            let defect = (0..3)
                .map(|i| fnorm(&(&trip[i] - &self.rho.t[i])))
                .fold(0.0, f64::max);
            let cas_k = -trip.iter().map(|t| t * t).fold(zeros(t_dim(&trip)), |a, b| a + b);
            if defect > 1e-6 || fnorm(&(cas_k - &cas)) > 1e-6 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn t_dim(t: &[Mat; 3]) -> usize {
    t[0].nrows()
}

/// CSV `R,psi,theta,component,re,im` of the model along sample points; the
/// matrix entries of each component are written row-major.
pub fn write_knot_curve(path: &Path, model: &KnotSingularityModel, points: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["R", "psi", "theta", "component", "re", "im"])?;
    for &(r, psi, th) in points {
        let v = model.eval(r, psi, th)?;
        for (name, m) in [("A_theta", &v.a_theta), ("phi1", &v.phi1), ("varphi", &v.varphi)] {
            for z in m.transpose().iter() {
                w.write_record([
                    r.to_string(),
                    psi.to_string(),
                    th.to_string(),
                    name.to_string(),
                    format!("{:e}", z.re),
                    format!("{:e}", z.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
