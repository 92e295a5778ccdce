//! Integration of the quaternionic and β-twisted octonionic Nahm equations
//! `X' + [A_y, X] + X × X = 0` away from the pole, start-up from the pole
//! model plus indicial modes, and the quaternionic → octonionic embedding.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indicial::IndicialRootSet;
use crate::lattice::{Axis, Backend, Field, Grid};
use crate::lie::{br, c, coords, fnorm_sqr, from_coords, su_basis, zeros, Mat};
use crate::models::NahmPoleModel;
use crate::octonion::{DivisionAlgebra, StructureTable};
use crate::residual::{nahm_residual, NahmAlgebra};

/// Default blow-up threshold on `‖X‖`.
pub const BLOW_UP: f64 = 1e12;
/// Default local tolerance of the adaptive integrator.
pub const ADAPTIVE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NahmKind {
    Quaternionic,
    Octonionic { beta: f64 },
}

impl NahmKind {
    pub fn algebra(self) -> NahmAlgebra {
        match self {
            NahmKind::Quaternionic => NahmAlgebra::Table(StructureTable::new(DivisionAlgebra::H)),
            NahmKind::Octonionic { beta } => NahmAlgebra::Twisted(beta),
        }
    }

    pub fn k(self) -> usize {
        match self {
            NahmKind::Quaternionic => 3,
            NahmKind::Octonionic { .. } => 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Rk4,
    Adaptive,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "adaptive" | "dp45" => Ok(Method::Adaptive),
            _ => Err(Error::InvalidArgument(format!("unknown integration method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegratorMeta {
    pub method: Method,
    /// Fixed step (rk4) or smallest accepted step (adaptive).
    pub step: f64,
    /// Sum of local error estimates (adaptive) or step-doubling estimate at the end (rk4).
    pub error_estimate: f64,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct NahmTrajectory {
    pub kind: NahmKind,
    pub ys: Vec<f64>,
    pub xs: Vec<Vec<Mat>>,
    /// Constant gauge component carried along each sample.
    pub a_y: Mat,
    pub meta: IntegratorMeta,
}

impl NahmTrajectory {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn n(&self) -> usize {
        self.a_y.nrows()
    }

    pub fn is_uniform(&self) -> bool {
        if self.ys.len() < 2 {
            return true;
        }
        let h = self.ys[1] - self.ys[0];
        self.ys.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0))
    }

    /// Pointwise residual `‖X' + [A_y, X] + X × X‖` of the sampled
    /// trajectory by finite differences along `y` (uniform grids only), at
    /// the interior samples where the stencil fits.
    pub fn residual(&self, backend: Backend) -> Result<Vec<f64>> {
        if !self.is_uniform() {
            return Err(Error::Grid("pointwise residual needs a uniform trajectory".into()));
        }
        let n = self.ys.len();
        let grid = Grid::new(vec![Axis::clamped("y", n, self.ys[0], self.ys[n - 1])])?;
        let k = self.kind.k();
        let fields: Vec<Field> = (0..k)
            .map(|i| Field { n: self.n(), data: self.xs.iter().map(|x| x[i].clone()).collect() })
            .collect();
        let a_y = Field { n: self.n(), data: vec![self.a_y.clone(); n] };
        let r = nahm_residual(&grid, &self.kind.algebra(), &a_y, &fields, backend)?;
        Ok((0..n).filter(|&s| r.mask.0[s]).map(|s| r.norm_at(s)).collect())
    }

    /// CSV `y,component,re,im`; matrix entries row-major per component.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["y", "component", "re", "im"])?;
        for (y, x) in self.ys.iter().zip(&self.xs) {
            for (i, m) in x.iter().enumerate() {
                for z in m.transpose().iter() {
                    w.write_record([format!("{y:e}"), format!("X.{}", i + 1), format!("{:e}", z.re), format!("{:e}", z.im)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn norm(x: &[Mat]) -> f64 {
    x.iter().map(fnorm_sqr).sum::<f64>().sqrt()
}

fn axpy(x: &[Mat], s: f64, d: &[Mat]) -> Vec<Mat> {
    x.iter().zip(d).map(|(a, b)| a + b * c(s)).collect()
}

/// `X' = −[A_y, X] − X × X`.
pub fn vector_field(alg: &NahmAlgebra, a_y: &Mat, x: &[Mat]) -> Result<Vec<Mat>> {
    let sq = alg.square(x)?;
    Ok(x.iter().zip(sq).map(|(xi, s)| -(br(a_y, xi) + s)).collect())
}

#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub method: Method,
    pub steps: usize,
    pub tol: f64,
    pub blow_up: f64,
    pub a_y: Option<Mat>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { method: Method::Rk4, steps: 200, tol: ADAPTIVE_TOL, blow_up: BLOW_UP, a_y: None }
    }
}

fn rk4_step(alg: &NahmAlgebra, a_y: &Mat, x: &[Mat], h: f64) -> Result<Vec<Mat>> {
    let k1 = vector_field(alg, a_y, x)?;
    let k2 = vector_field(alg, a_y, &axpy(x, h / 2.0, &k1))?;
    let k3 = vector_field(alg, a_y, &axpy(x, h / 2.0, &k2))?;
    let k4 = vector_field(alg, a_y, &axpy(x, h, &k3))?;
    Ok((0..x.len())
        .map(|i| &x[i] + (&k1[i] + &k2[i] * c(2.0) + &k3[i] * c(2.0) + &k4[i]) * c(h / 6.0))
        .collect())
}

// Dormand–Prince 5(4) tableau.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp45_step(alg: &NahmAlgebra, a_y: &Mat, x: &[Mat], h: f64) -> Result<(Vec<Mat>, f64)> {
    let mut ks: Vec<Vec<Mat>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut xs = x.to_vec();
        for (p, kp) in ks.iter().enumerate() {
            if DP_A[s][p] != 0.0 {
                xs = axpy(&xs, h * DP_A[s][p], kp);
            }
        }
        ks.push(vector_field(alg, a_y, &xs)?);
    }
    let mut x5 = x.to_vec();
    let mut err: Vec<Mat> = x.iter().map(|m| zeros(m.nrows())).collect();
    for s in 0..7 {
        x5 = axpy(&x5, h * DP_B5[s], &ks[s]);
        err = axpy(&err, h * (DP_B5[s] - DP_B4[s]), &ks[s]);
    }
    Ok((x5, norm(&err)))
}

/// Integrate from `(y0, x0)` to `y1 > y0 > 0`.
pub fn integrate_nahm(kind: NahmKind, y0: f64, x0: Vec<Mat>, y1: f64, opts: &IntegrateOptions) -> Result<NahmTrajectory> {
    if !(y0 > 0.0) || !(y1 > y0) {
        return Err(Error::Domain(format!("integration needs 0 < y0 < y1, got [{y0}, {y1}]")));
    }
    if x0.len() != kind.k() {
        return Err(Error::DimensionMismatch { expected: kind.k(), got: x0.len() });
    }
    if x0.iter().any(|m| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::InvalidArgument("start values must be finite".into()));
    }
    let n = x0[0].nrows();
    let a_y = opts.a_y.clone().unwrap_or_else(|| zeros(n));
    let alg = kind.algebra();
    let mut traj = NahmTrajectory {
        kind,
        ys: vec![y0],
        xs: vec![x0],
        a_y: a_y.clone(),
        meta: IntegratorMeta { method: opts.method, step: 0.0, error_estimate: 0.0, rejected: 0 },
    };
    let blown = |x: &[Mat]| !(norm(x) <= opts.blow_up);
    match opts.method {
        Method::Rk4 => {
            if opts.steps == 0 {
                return Err(Error::InvalidArgument("steps must be positive".into()));
            }
            let h = (y1 - y0) / opts.steps as f64;
            traj.meta.step = h;
            for k in 1..=opts.steps {
                let x = rk4_step(&alg, &a_y, traj.xs.last().expect("nonempty"), h)?;
                let y = y0 + h * k as f64;
                if blown(&x) {
                    return Err(Error::BlowUp { y, partial: Box::new(traj) });
                }
                traj.ys.push(y);
                traj.xs.push(x);
            }
            // step-doubling estimate over the final two steps
            if opts.steps >= 2 {
                let m = traj.xs.len();
                let two = rk4_step(&alg, &a_y, &traj.xs[m - 3], 2.0 * h)?;
                let diff: Vec<Mat> = two.iter().zip(&traj.xs[m - 1]).map(|(a, b)| a - b).collect();
                traj.meta.error_estimate = norm(&diff) / 15.0;
            }
        }
        Method::Adaptive => {
            let mut h = (y1 - y0) / opts.steps.max(1) as f64;
            let mut y = y0;
            let mut hmin = f64::INFINITY;
            while y < y1 {
                h = h.min(y1 - y);
                if h <= 1e-14 * y1 {
                    return Err(Error::InvalidArgument(format!("adaptive step underflow at y = {y}")));
                }
                let x = traj.xs.last().expect("nonempty");
                let (x5, e) = dp45_step(&alg, &a_y, x, h)?;
                let scale = opts.tol * (1.0 + norm(x));
                if e <= scale {
                    y = if y1 - (y + h) < 1e-14 * y1 { y1 } else { y + h };
                    hmin = hmin.min(h);
                    traj.meta.error_estimate += e;
                    if blown(&x5) {
                        return Err(Error::BlowUp { y, partial: Box::new(traj) });
                    }
                    traj.ys.push(y);
                    traj.xs.push(x5);
                } else {
                    traj.meta.rejected += 1;
                }
                let fac = if e > 0.0 { 0.9 * (scale / e).powf(0.2) } else { 5.0 };
                h *= fac.clamp(0.2, 5.0);
            }
            traj.meta.step = hmin;
        }
    }
    Ok(traj)
}

/// `(cos β X₁, cos β X₂, cos β X₃, 0, sin β X₁, sin β X₃, sin β X₂)`.
pub fn embed_vector(beta: f64, x: &[Mat]) -> Result<Vec<Mat>> {
    if x.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: x.len() });
    }
    let (cb, sb) = (beta.cos(), beta.sin());
    let n = x[0].nrows();
    Ok(vec![
        &x[0] * c(cb),
        &x[1] * c(cb),
        &x[2] * c(cb),
        zeros(n),
        &x[0] * c(sb),
        &x[2] * c(sb),
        &x[1] * c(sb),
    ])
}

pub fn embed_quaternionic(beta: f64, traj: &NahmTrajectory) -> Result<NahmTrajectory> {
    if traj.kind != NahmKind::Quaternionic {
        return Err(Error::InvalidArgument("embedding needs a quaternionic trajectory".into()));
    }
    Ok(NahmTrajectory {
        kind: NahmKind::Octonionic { beta },
        ys: traj.ys.clone(),
        xs: traj.xs.iter().map(|x| embed_vector(beta, x)).collect::<Result<_>>()?,
        a_y: traj.a_y.clone(),
        meta: traj.meta.clone(),
    })
}

/// `max_y |d/dy Σ Tr(XᵢXᵢ) − 2 Σ Tr(Xᵢ F(X)ᵢ)|` with the derivative taken by
/// central differences on the samples (uniform trajectories, `A_y` = 0).
pub fn trace_consistency(traj: &NahmTrajectory) -> Result<f64> {
    if !traj.is_uniform() || traj.len() < 3 {
        return Err(Error::Grid("trace check needs a uniform trajectory of ≥ 3 samples".into()));
    }
    let alg = traj.kind.algebra();
    let q = |x: &[Mat]| -> f64 { x.iter().map(|m| (m * m).trace().re).sum() };
    let h = traj.ys[1] - traj.ys[0];
    let mut worst: f64 = 0.0;
    for s in 1..traj.len() - 1 {
        let fd = (q(&traj.xs[s + 1]) - q(&traj.xs[s - 1])) / (2.0 * h);
        let f = vector_field(&alg, &traj.a_y, &traj.xs[s])?;
        let exact: f64 = 2.0 * traj.xs[s].iter().zip(&f).map(|(a, b)| (a * b).trace().re).sum::<f64>();
        worst = worst.max((fd - exact).abs());
    }
    Ok(worst)
}

// ------------------------------------------------------------- pole start-up

/// One indicial mode: `amplitude · y^alpha · v`, `v` the `index`-th unit
/// vector of the kernel of `α + L` where `L` linearises `X × X` at the pole
/// coefficient.
#[derive(Clone, Debug, Serialize)]
pub struct Mode {
    pub alpha: f64,
    pub index: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug)]
pub struct PoleStart {
    pub model: NahmPoleModel,
    pub y0: f64,
    pub modes: Vec<Mode>,
}

/// Linearisation `x ↦ X₀ × x + x × X₀` of the octonionic square at the pole
/// coefficient `X₀ = y · X(y)`, as a real matrix on `7 · dim su(N)` coordinates.
pub fn pole_linearisation(model: &NahmPoleModel) -> Result<DMatrix<f64>> {
    let n = model.triple.dim();
    let basis = su_basis(n);
    let d = basis.len();
    let alg = NahmAlgebra::Twisted(model.beta);
    let x0 = model.nahm_vector(1.0)?;
    let mut l = DMatrix::<f64>::zeros(7 * d, 7 * d);
    for col in 0..7 * d {
        let mut e: Vec<Mat> = vec![zeros(n); 7];
        e[col / d] = basis[col % d].clone();
        let sum: Vec<Mat> = x0.iter().zip(&e).map(|(a, b)| a + b).collect();
        let (s_sum, s_0, s_e) = (alg.square(&sum)?, alg.square(&x0)?, alg.square(&e)?);
        for q in 0..7 {
            let lin = &s_sum[q] - &s_0[q] - &s_e[q];
            for (k, v) in coords(&basis, &lin).into_iter().enumerate() {
                l[(q * d + k, col)] = v;
            }
        }
    }
    Ok(l)
}

/// Orthonormal basis of `ker(α + L)` in coordinates.
pub fn mode_directions(model: &NahmPoleModel, alpha: f64) -> Result<Vec<Vec<Mat>>> {
    let l = pole_linearisation(model)?;
    let dim = l.nrows();
    let shifted = &l + DMatrix::<f64>::identity(dim, dim) * alpha;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Assembly("SVD failed".into()))?;
    let scale = svd.singular_values.max().max(1.0);
    let n = model.triple.dim();
    let basis = su_basis(n);
    let d = basis.len();
    let mut out = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= 1e-9 * scale {
            let row = vt.row(k);
            out.push((0..7).map(|q| from_coords(&basis, &row.iter().skip(q * d).take(d).copied().collect::<Vec<_>>())).collect());
        }
    }
    Ok(out)
}

/// `X(y₀) = X_model(y₀) + Σ amplitude · y₀^α · v_α`; every exponent must be
/// a positive root of `roots`.
pub fn start_from_pole(start: &PoleStart, roots: &IndicialRootSet) -> Result<Vec<Mat>> {
    if !(start.y0 > 0.0) {
        return Err(Error::Domain(format!("pole start needs y0 > 0, got {}", start.y0)));
    }
    let mut x = start.model.nahm_vector(start.y0)?;
    for m in &start.modes {
        let known = roots.roots.iter().any(|r| r.value > 0.0 && (r.value - m.alpha).abs() <= 1e-7);
        if !known {
            return Err(Error::InvalidArgument(format!("exponent {} is not a positive indicial root", m.alpha)));
        }
        let dirs = mode_directions(&start.model, m.alpha)?;
        let v = dirs.get(m.index).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {} of exponent {} does not exist ({} available)", m.index, m.alpha, dirs.len()))
        })?;
        x = axpy(&x, m.amplitude * start.y0.powf(m.alpha), v);
    }
    Ok(x)
}

/// Convergence order of rk4 on the exact pole `X = X₀/y` over `[y0, y1]`
/// from the end-point errors at `steps` and `2·steps`.
pub fn rk4_pole_order(model: &NahmPoleModel, y0: f64, y1: f64, steps: usize) -> Result<(f64, f64, f64)> {
    let err = |s: usize| -> Result<f64> {
        let t = integrate_nahm(
            NahmKind::Octonionic { beta: model.beta },
            y0,
            model.nahm_vector(y0)?,
            y1,
            &IntegrateOptions { steps: s, ..Default::default() },
        )?;
        let exact = model.nahm_vector(y1)?;
        let diff: Vec<Mat> = t.xs.last().expect("nonempty").iter().zip(&exact).map(|(a, b)| a - b).collect();
        Ok(norm(&diff))
    };
    let (e1, e2) = (err(steps)?, err(2 * steps)?);
    Ok(((e1 / e2).log2(), e1, e2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicial::{build_indicial_system, compute_indicial_roots};
    use crate::lie::{fnorm, principal_embedding, spin_irrep_triple};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn quaternionic_pole(shift: f64, y: f64) -> Vec<Mat> {
        spin_irrep_triple(2).unwrap().t.iter().map(|t| t * c(1.0 / (y + shift))).collect()
    }

    #[test]
    fn rk4_tracks_the_pole_at_fourth_order() {
        let errs: Vec<f64> = [40, 80]
            .iter()
            .map(|&s| {
                let tr = integrate_nahm(NahmKind::Quaternionic, 0.5, quaternionic_pole(0.0, 0.5), 2.0, &IntegrateOptions { steps: s, ..Default::default() }).unwrap();
                let ex = quaternionic_pole(0.0, 2.0);
                norm(&tr.xs.last().unwrap().iter().zip(&ex).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!((3.8..=4.2).contains(&order), "{order} {errs:?}");
        for beta in [0.0, FRAC_PI_4, 1.2] {
            let m = NahmPoleModel::new(principal_embedding(3).unwrap().triple, beta);
            let (o, _, e2) = rk4_pole_order(&m, 0.5, 2.0, 40).unwrap();
            assert!((3.8..=4.2).contains(&o), "β={beta}: {o}");
            assert!(e2 < 1e-5);
        }
    }

    #[test]
    fn shifted_pole_and_adaptive() {
        let shift = 0.3;
        let tr = integrate_nahm(
            NahmKind::Quaternionic,
            0.2,
            quaternionic_pole(shift, 0.2),
            3.0,
            &IntegrateOptions { method: Method::Adaptive, steps: 10, ..Default::default() },
        )
        .unwrap();
        assert_eq!(*tr.ys.last().unwrap(), 3.0);
        for (y, x) in tr.ys.iter().zip(&tr.xs) {
            let ex = quaternionic_pole(shift, *y);
            assert!(norm(&x.iter().zip(&ex).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-8);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // X = t/(y − 1) runs into a pole at y = 1
        let t = spin_irrep_triple(1).unwrap();
        let x0: Vec<Mat> = t.t.iter().map(|m| m * c(1.0 / (0.5 - 1.0))).collect();
        let r = integrate_nahm(NahmKind::Quaternionic, 0.5, x0, 2.0, &IntegrateOptions { steps: 100000, ..Default::default() });
        match r {
            Err(Error::BlowUp { y, partial }) => {
                assert!(y > 0.99 && y < 1.01, "{y}");
                assert!(!partial.is_empty());
            }
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.len())),
        }
        assert!(integrate_nahm(NahmKind::Quaternionic, 0.0, vec![zeros(2); 3], 1.0, &IntegrateOptions::default()).is_err());
    }

    #[test]
    fn embedding_maps_pole_to_twisted_pole_and_preserves_residual() {
        let triple = spin_irrep_triple(2).unwrap();
        for beta in [0.0, FRAC_PI_4, FRAC_PI_2] {
            let model = NahmPoleModel::new(triple.clone(), beta);
            let q = quaternionic_pole(0.0, 0.8);
            let e = embed_vector(beta, &q).unwrap();
            for (a, b) in e.iter().zip(model.nahm_vector(0.8).unwrap()) {
                assert!(fnorm(&(a - b)) < 1e-15);
            }
            let x0 = vec![&triple.t[0] * c(1.3), &triple.t[1] * c(0.7), &triple.t[2] * c(1.0)];
            let tr = integrate_nahm(NahmKind::Quaternionic, 0.5, x0, 1.5, &IntegrateOptions { steps: 64, ..Default::default() }).unwrap();
            let rin = tr.residual(Backend::Central4).unwrap();
            let rout = embed_quaternionic(beta, &tr).unwrap().residual(Backend::Central4).unwrap();
            for (a, b) in rin.iter().zip(&rout) {
                assert!(*b <= 10.0 * a, "{b} > 10 × {a}");
            }
        }
    }

    #[test]
    fn untwisted_embedding_zero_pads() {
        let e = embed_vector(0.0, &quaternionic_pole(0.0, 1.0)).unwrap();
        assert!(e[3..].iter().all(|m| fnorm(m) == 0.0));
        let e = embed_vector(FRAC_PI_2, &quaternionic_pole(0.0, 1.0)).unwrap();
        assert!(e[..3].iter().all(|m| fnorm(m) < 1e-16));
    }

    #[test]
    fn trace_invariant() {
        let t = spin_irrep_triple(2).unwrap();
        let x0 = vec![&t.t[0] * c(1.1), &t.t[1] * c(0.9), &t.t[2] * c(1.0)];
        let tr = integrate_nahm(NahmKind::Quaternionic, 0.5, x0, 1.0, &IntegrateOptions { steps: 400, ..Default::default() }).unwrap();
        assert!(trace_consistency(&tr).unwrap() < 1e-4);
    }

    #[test]
    fn pole_start_modes() {
        let model = NahmPoleModel::new(spin_irrep_triple(1).unwrap(), 0.3);
        let roots = compute_indicial_roots(&build_indicial_system(2, 0.3).unwrap()).unwrap();
        let zero = PoleStart { model: model.clone(), y0: 0.05, modes: vec![] };
        let x = start_from_pole(&zero, &roots).unwrap();
        assert_eq!(x, model.nahm_vector(0.05).unwrap());
        let bad = PoleStart { model: model.clone(), y0: 0.05, modes: vec![Mode { alpha: 0.5, index: 0, amplitude: 1e-3 }] };
        assert!(start_from_pole(&bad, &roots).is_err());
        // linear growth of a small α = 1 mode
        let dirs = mode_directions(&model, 1.0).unwrap();
        assert!(!dirs.is_empty());
        let y0 = 0.05;
        let eps = 1e-6;
        let st = PoleStart { model: model.clone(), y0, modes: vec![Mode { alpha: 1.0, index: 0, amplitude: eps }] };
        let x0 = start_from_pole(&st, &roots).unwrap();
        let tr = integrate_nahm(NahmKind::Octonionic { beta: 0.3 }, y0, x0, 0.5, &IntegrateOptions { steps: 2000, ..Default::default() }).unwrap();
        let y1 = 0.5;
        let dev: Vec<Mat> = tr.xs.last().unwrap().iter().zip(model.nahm_vector(y1).unwrap()).map(|(a, b)| a - b).collect();
        let predicted: Vec<Mat> = dirs[0].iter().map(|v| v * c(eps * y1)).collect();
        let miss: Vec<Mat> = dev.iter().zip(&predicted).map(|(a, b)| a - b).collect();
        assert!(norm(&miss) < 1e-3 * norm(&predicted), "{} vs {}", norm(&miss), norm(&predicted));
    }

    #[test]
    fn csv_export() {
        let tr = integrate_nahm(NahmKind::Quaternionic, 0.5, quaternionic_pole(0.0, 0.5), 1.0, &IntegrateOptions { steps: 4, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        tr.write_csv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1 + 5 * 3 * 9);
    }
}
