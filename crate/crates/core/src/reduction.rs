//! Dimensional reductions of the Haydys-Witten equations along `ℝ^k`:
//!
//! * `k = 1` — Kapustin-Witten at `θ ≠ 0` and Vafa-Witten at `θ = 0`,
//!   on `ℝ_s × W⁴` with `W⁴ = ℝ_t × ℝ³`;
//! * `k = 2` — twisted extended Bogomolny equations (untwisted at
//!   `θ = π/2`) and the `θ = 0` form, on `ℝ_{s₁} × ℝ_{s₂} × ℝ_w × ℝ²`;
//! * `k = 4` — the β-twisted octonionic Nahm flow on `ℝ_s × ℝ³ × ℝ_y`;
//!
//! plus the flow-equation form of the Haydys-Witten equations.
//!
//! Every reduction is a field dictionary (lift / reduce, exact inverses) and
//! a residual dictionary: an explicit matrix expressing the reduced residual
//! through the eight Haydys-Witten components (three `two_form`, five
//! `one_form`). The matrices were derived once by hand and are pinned by the
//! equivalence check, which evaluates both sides with identical stencils.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{sample, Axis, Backend, Field, Frame, Grid, Local, VectorFieldSpec};
use crate::lie::{br, c, fnorm, zeros, Mat};
use crate::residual::{
    ebe_residual, hw_residual, kw_residual, nahm_residual, tebe_residual, vw_residual, EbeFields, HwFields,
    KWParams, KwFields, NahmAlgebra, ResidualBundle, System, VwFields,
};
use rayon::prelude::*;

/// Reduced system selected by `k` and the angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    KW,
    VW,
    TEBE,
    EBE0,
    NahmO,
}

/// Invariant directions, the unit field `v`, and the angle it makes with them
/// (`θ` for `k = 1, 2`, `β` for `k = 4`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionSpec {
    pub k: usize,
    pub angle: f64,
    pub invariant_axes: Vec<String>,
    pub frame: Frame,
    pub target: Target,
}

impl ReductionSpec {
    pub fn new(k: usize, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::Domain(format!("angle {angle}")));
        }
        // exact right angle, so that θ = π/2 reproduces the untwisted frame bit for bit
        let c = if angle == FRAC_PI_2 { 0.0 } else { angle.cos() };
        let s = angle.sin();
        let twisted = s.abs() >= 1e-12;
        if !twisted && c < 0.0 && k != 4 {
            return Err(Error::Domain(
                "θ ≡ π is the orientation-reversed θ = 0 case; use θ = 0".into(),
            ));
        }
        let axes = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let (invariant_axes, rows, target) = match k {
            1 => (
                axes(&["s"]),
                [
                    [-s, c, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0, 1.0],
                    [c, s, 0.0, 0.0, 0.0],
                ],
                if twisted { Target::KW } else { Target::VW },
            ),
            2 if twisted => (
                axes(&["s1", "s2"]),
                [
                    [-s, 0.0, c, 0.0, 0.0],
                    [0.0, 1.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0, 1.0],
                    [c, 0.0, s, 0.0, 0.0],
                ],
                Target::TEBE,
            ),
            2 => (
                axes(&["s1", "s2"]),
                [
                    [0.0, -1.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0, 0.0, 1.0],
                    [1.0, 0.0, 0.0, 0.0, 0.0],
                ],
                Target::EBE0,
            ),
            4 => (
                axes(&["s", "x1", "x2", "x3"]),
                [
                    [c, 0.0, 0.0, 0.0, -s],
                    [0.0, 1.0, 0.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0, 0.0],
                    [s, 0.0, 0.0, 0.0, c],
                ],
                Target::NahmO,
            ),
            _ => return Err(Error::InvalidArgument(format!("no reduction along ℝ^{k}"))),
        };
        Ok(Self {
            k,
            angle,
            invariant_axes,
            frame: Frame::new(rows)?,
            target,
        })
    }

    pub fn v(&self) -> VectorFieldSpec {
        self.frame.v()
    }

    /// Rows: reduced residual components; columns: `two_form.1..3`,
    /// `one_form.0..3`, `one_form.v`.
    pub fn residual_dictionary(&self) -> Vec<[f64; 8]> {
        let row = |entries: &[(usize, f64)]| {
            let mut r = [0.0; 8];
            for &(col, v) in entries {
                r[col] += v;
            }
            r
        };
        // eq1_i at column i, eq2_b at column 3 + b
        let (e1, e2) = (|i: usize| i, |b: usize| 3 + b);
        let th = self.angle;
        match self.target {
            Target::KW => {
                let (ch, sh) = ((th / 2.0).cos(), (th / 2.0).sin());
                let mut m: Vec<[f64; 8]> = (0..3).map(|i| row(&[(e1(i), ch), (e2(i + 1), sh)])).collect();
                m.extend((0..3).map(|i| row(&[(e1(i), -sh), (e2(i + 1), ch)])));
                m.push(row(&[(e2(0), 1.0)]));
                m
            }
            Target::VW => {
                let mut m: Vec<[f64; 8]> = (0..3).map(|i| row(&[(e1(i), 1.0)])).collect();
                m.extend((0..4).map(|b| row(&[(e2(b), -1.0)])));
                m
            }
            Target::TEBE => {
                let (cot, csc) = crate::residual::cot_csc(th).expect("twisted branch");
                vec![
                    row(&[(e1(0), 1.0), (e2(1), -cot)]),
                    row(&[(e2(3), -csc)]),
                    row(&[(e2(2), csc)]),
                    row(&[(e2(1), -csc)]),
                    row(&[(e1(2), 1.0), (e2(3), -cot)]),
                    row(&[(e1(1), -1.0), (e2(2), cot)]),
                    row(&[(e2(0), 1.0)]),
                ]
            }
            Target::EBE0 => {
                let mut m: Vec<[f64; 8]> = (0..3).map(|i| row(&[(e1(i), 1.0)])).collect();
                m.extend((1..4).map(|b| row(&[(e2(b), -1.0)])));
                m.push(row(&[(e2(0), 1.0)]));
                m
            }
            Target::NahmO => {
                let (cb, sb) = (th.cos(), th.sin());
                let mut m: Vec<[f64; 8]> = (0..3).map(|i| row(&[(e1(i), -cb), (e2(i + 1), -sb)])).collect();
                m.push(row(&[(e2(0), -1.0)]));
                m.extend((0..3).map(|i| row(&[(e1(i), -sb), (e2(i + 1), cb)])));
                m
            }
        }
    }
}

/// Reduced fields together with their grid.
#[derive(Clone, Debug)]
pub enum Reduced {
    Kw(KwFields),
    Vw(VwFields),
    Tebe(EbeFields),
    Nahm { a_y: Field, x: Vec<Field> },
}

/// A lifted, invariant Haydys-Witten configuration.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub grid: Grid,
    pub fields: HwFields,
    pub frame: Frame,
}

/// Number of samples along each invariant axis of a lift.
pub const INVARIANT_SAMPLES: usize = 4;

fn tile(f: &Field, copies: usize) -> Field {
    let mut data = Vec::with_capacity(f.data.len() * copies);
    for _ in 0..copies {
        data.extend(f.data.iter().cloned());
    }
    Field { n: f.n, data }
}

fn lifted_grid(spec: &ReductionSpec, reduced: &Grid) -> Result<Grid> {
    check_dim(5 - spec.k, reduced.dim())?;
    let extra = spec
        .invariant_axes
        .iter()
        .map(|name| Axis::periodic(name, INVARIANT_SAMPLES, 1.0))
        .collect();
    reduced.with_leading(extra)
}

/// Lifts a reduced tuple to an invariant Haydys-Witten pair.
pub fn lift(spec: &ReductionSpec, grid: &Grid, reduced: &Reduced) -> Result<Lifted> {
    let g5 = lifted_grid(spec, grid)?;
    let copies = g5.len() / grid.len();
    let t = |f: &Field| -> Result<Field> {
        check_dim(grid.len(), f.data.len())?;
        Ok(tile(f, copies))
    };
    let neg = |f: &Field| f.scaled(-1.0);
    let fields = match (spec.target, reduced) {
        (Target::KW, Reduced::Kw(f)) => HwFields {
            a: [t(&f.phi[0])?, t(&f.a[0])?, t(&f.a[1])?, t(&f.a[2])?, t(&f.a[3])?],
            b: [t(&f.phi[1])?, t(&f.phi[2])?, t(&f.phi[3])?],
        },
        (Target::VW, Reduced::Vw(f)) => HwFields {
            a: [t(&f.c)?, t(&f.a[0])?, t(&f.a[1])?, t(&f.a[2])?, t(&f.a[3])?],
            b: [t(&f.b[0])?, t(&f.b[1])?, t(&f.b[2])?],
        },
        (Target::TEBE, Reduced::Tebe(f)) => HwFields {
            a: [t(&f.phi[0])?, t(&neg(&f.c2))?, t(&f.a[0])?, t(&f.a[1])?, t(&f.a[2])?],
            b: [t(&neg(&f.c1))?, t(&f.phi[1])?, t(&f.phi[2])?],
        },
        (Target::EBE0, Reduced::Tebe(f)) => HwFields {
            a: [t(&f.c2)?, t(&f.c1)?, t(&f.a[0])?, t(&f.a[1])?, t(&f.a[2])?],
            b: [t(&f.phi[0])?, t(&f.phi[1])?, t(&f.phi[2])?],
        },
        (Target::NahmO, Reduced::Nahm { a_y, x }) => {
            check_dim(7, x.len())?;
            HwFields {
                a: [t(&neg(&x[3]))?, t(&x[4])?, t(&x[5])?, t(&x[6])?, t(a_y)?],
                b: [t(&x[0])?, t(&x[1])?, t(&x[2])?],
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "reduced fields do not match the {:?} dictionary",
                spec.target
            )))
        }
    };
    Ok(Lifted {
        grid: g5,
        fields,
        frame: spec.frame.clone(),
    })
}

/// Restricts to the first slice after checking invariance to `1e-12`.
fn slice(f: &Field, reduced_len: usize, axis: &str) -> Result<Field> {
    let copies = f.data.len() / reduced_len;
    let mut variation: f64 = 0.0;
    for k in 1..copies {
        for s in 0..reduced_len {
            variation = variation.max(fnorm(&(&f.data[k * reduced_len + s] - &f.data[s])));
        }
    }
    if variation > 1e-12 {
        return Err(Error::NotInvariant {
            axis: axis.to_string(),
            variation,
        });
    }
    Ok(Field {
        n: f.n,
        data: f.data[..reduced_len].to_vec(),
    })
}

/// Reduces an invariant pair; the first `k` axes of `grid` must be the
/// invariant ones.
pub fn reduce(spec: &ReductionSpec, grid: &Grid, fields: &HwFields) -> Result<(Grid, Reduced)> {
    check_dim(5, grid.dim())?;
    for (a, name) in grid.axes.iter().zip(&spec.invariant_axes) {
        if &a.name != name {
            return Err(Error::Grid(format!("expected invariant axis {name}, found {}", a.name)));
        }
    }
    let reduced_grid = Grid::new(grid.axes[spec.k..].to_vec())?;
    let len = reduced_grid.len();
    let axes = spec.invariant_axes.join(",");
    let r = |f: &Field| slice(f, len, &axes);
    let neg = |f: Field| f.scaled(-1.0);
    let (a, b) = (&fields.a, &fields.b);
    let out = match spec.target {
        Target::KW => Reduced::Kw(KwFields {
            a: [r(&a[1])?, r(&a[2])?, r(&a[3])?, r(&a[4])?],
            phi: [r(&a[0])?, r(&b[0])?, r(&b[1])?, r(&b[2])?],
        }),
        Target::VW => Reduced::Vw(VwFields {
            a: [r(&a[1])?, r(&a[2])?, r(&a[3])?, r(&a[4])?],
            b: [r(&b[0])?, r(&b[1])?, r(&b[2])?],
            c: r(&a[0])?,
        }),
        Target::TEBE => Reduced::Tebe(EbeFields {
            a: [r(&a[2])?, r(&a[3])?, r(&a[4])?],
            phi: [r(&a[0])?, r(&b[1])?, r(&b[2])?],
            c1: neg(r(&b[0])?),
            c2: neg(r(&a[1])?),
        }),
        Target::EBE0 => Reduced::Tebe(EbeFields {
            a: [r(&a[2])?, r(&a[3])?, r(&a[4])?],
            phi: [r(&b[0])?, r(&b[1])?, r(&b[2])?],
            c1: r(&a[1])?,
            c2: r(&a[0])?,
        }),
        Target::NahmO => Reduced::Nahm {
            a_y: r(&a[4])?,
            x: vec![r(&b[0])?, r(&b[1])?, r(&b[2])?, neg(r(&a[0])?), r(&a[1])?, r(&a[2])?, r(&a[3])?],
        },
    };
    Ok((reduced_grid, out))
}

/// `reduce_hw` for `k = 1`: Kapustin-Witten pair or Vafa-Witten triple.
pub fn reduce_hw(theta: f64, grid: &Grid, fields: &HwFields) -> Result<(Grid, Reduced)> {
    reduce(&ReductionSpec::new(1, theta)?, grid, fields)
}

pub fn lift_kw(theta: f64, grid: &Grid, f: &KwFields) -> Result<Lifted> {
    let spec = ReductionSpec::new(1, theta)?;
    if spec.target != Target::KW {
        return Err(Error::Domain(format!("θ = {theta} ≡ 0 mod π: use lift_vw")));
    }
    lift(&spec, grid, &Reduced::Kw(f.clone()))
}

pub fn lift_vw(grid: &Grid, f: &VwFields) -> Result<Lifted> {
    lift(&ReductionSpec::new(1, 0.0)?, grid, &Reduced::Vw(f.clone()))
}

pub fn reduce_to_tebe(theta: f64, grid: &Grid, fields: &HwFields) -> Result<EbeFields> {
    match reduce(&ReductionSpec::new(2, theta)?, grid, fields)?.1 {
        Reduced::Tebe(f) => Ok(f),
        _ => unreachable!("k = 2 reduces to a Bogomolny tuple"),
    }
}

pub fn reduce_to_nahm(beta: f64, grid: &Grid, fields: &HwFields) -> Result<(Field, Vec<Field>)> {
    match reduce(&ReductionSpec::new(4, beta)?, grid, fields)?.1 {
        Reduced::Nahm { a_y, x } => Ok((a_y, x)),
        _ => unreachable!("k = 4 reduces to a Nahm pair"),
    }
}

/// Residual of the reduced system on the reduced grid.
pub fn reduced_residual(spec: &ReductionSpec, grid: &Grid, reduced: &Reduced, backend: Backend) -> Result<ResidualBundle> {
    match (spec.target, reduced) {
        (Target::KW, Reduced::Kw(f)) => kw_residual(grid, KWParams::new(spec.angle)?, f, backend),
        (Target::VW, Reduced::Vw(f)) => vw_residual(grid, f, backend),
        (Target::TEBE, Reduced::Tebe(f)) => tebe_residual(grid, spec.angle, f, backend),
        (Target::EBE0, Reduced::Tebe(f)) => ebe_zero_residual(grid, f, backend),
        (Target::NahmO, Reduced::Nahm { a_y, x }) => {
            nahm_residual(grid, &NahmAlgebra::Twisted(spec.angle), a_y, x, backend)
        }
        _ => Err(Error::InvalidArgument("reduced fields do not match the target".into())),
    }
}

/// The `θ = 0` reduction along `ℝ²`: the extended Bogomolny operator with the
/// twisted coefficients frozen at `(cot, csc) = (0, 1)`.
pub fn ebe_zero_residual(grid: &Grid, f: &EbeFields, backend: Backend) -> Result<ResidualBundle> {
    let mut r = ebe_residual(grid, f, backend)?;
    r.system = System::EBE;
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub k: usize,
    pub theta_or_beta: f64,
    pub grid: Vec<usize>,
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Relative tolerance of [`check_reduction_equivalence`].
pub const EQUIVALENCE_TOL: f64 = 1e-10;

/// Lifts the tuple, maps the Haydys-Witten residual through the residual
/// dictionary and compares with the reduced residual at every lifted site.
/// The discrepancy is relative to the largest reduced residual norm.
pub fn check_reduction_equivalence(
    spec: &ReductionSpec,
    grid: &Grid,
    reduced: &Reduced,
    backend: Backend,
) -> Result<EquivalenceReport> {
    let lifted = lift(spec, grid, reduced)?;
    let hw = hw_residual(&lifted.grid, &lifted.fields, &lifted.frame, backend)?;
    let red = reduced_residual(spec, grid, reduced, backend)?;
    let dict = spec.residual_dictionary();
    check_dim(red.components.len(), dict.len())?;
    let len = grid.len();
    let n = lifted.fields.a[0].n;
    let (disc, scale) = (0..lifted.grid.len())
        .into_par_iter()
        .filter(|&site| hw.mask.0[site] && red.mask.0[site % len])
        .map(|site| {
            let mut d: f64 = 0.0;
            let mut sc: f64 = 0.0;
            for (row, (_, comp)) in dict.iter().zip(&red.components) {
                let mut acc = zeros(n);
                for (col, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        acc += &hw.components[col].1.data[site] * c(w);
                    }
                }
                let target = &comp.data[site % len];
                d = d.max(fnorm(&(acc - target)));
                sc = sc.max(fnorm(target));
            }
            (d, sc)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let max_discrepancy = if scale > 0.0 { disc / scale } else { disc };
    Ok(EquivalenceReport {
        k: spec.k,
        theta_or_beta: spec.angle,
        grid: lifted.grid.axes.iter().map(|a| a.n).collect(),
        max_discrepancy,
        pass: max_discrepancy < EQUIVALENCE_TOL,
    })
}

/// Largest pointwise difference, in global coordinates, between the 5D
/// configurations produced from the same Bogomolny tuple by the `θ = 0`
/// dictionary and by the `θ ≠ 0` dictionary at angle `theta`. The reduction
/// is discontinuous at `θ = 0`: this stays of order one as `theta → 0`.
pub fn dictionary_gap(grid: &Grid, f: &EbeFields, theta: f64) -> Result<f64> {
    let z = lift(&ReductionSpec::new(2, 0.0)?, grid, &Reduced::Tebe(f.clone()))?;
    let t = lift(&ReductionSpec::new(2, theta)?, grid, &Reduced::Tebe(f.clone()))?;
    let global = |l: &Lifted, site: usize| -> Vec<Mat> {
        let r = &l.frame.rows;
        let n = l.fields.a[0].n;
        let b = |a: usize, bb: usize| -> Option<(usize, f64)> {
            match (a, bb) {
                (0, x) if x > 0 && x < 4 => Some((x - 1, 1.0)),
                (x, 0) if x > 0 && x < 4 => Some((x - 1, -1.0)),
                (x, y) if x > 0 && y > 0 && x < 4 && y < 4 && x != y => {
                    let (i, j) = (x - 1, y - 1);
                    let k = 3 - i - j;
                    Some((k, crate::lie::eps(i, j, k)))
                }
                _ => None,
            }
        };
        let mut out: Vec<Mat> = l.fields.a.iter().map(|f| f.data[site].clone()).collect();
        for m in 0..5 {
            for k in m + 1..5 {
                let mut acc = zeros(n);
                for a in 0..4 {
                    for bb in 0..4 {
                        if let Some((comp, s)) = b(a, bb) {
                            let w = r[a][m] * r[bb][k] * s;
                            if w != 0.0 {
                                acc += &l.fields.b[comp].data[site] * c(w);
                            }
                        }
                    }
                }
                out.push(acc);
            }
        }
        out
    };
    let mut gap: f64 = 0.0;
    for site in 0..z.grid.len() {
        for (p, q) in global(&z, site).iter().zip(global(&t, site)) {
            gap = gap.max(fnorm(&(p - q)));
        }
    }
    Ok(gap)
}

// ---------------------------------------------------------------- flow form

/// Flow-equation form on `ℝ_s × W⁴`, `W⁴ = ℝ_t × ℝ³`. Layout as the
/// Haydys-Witten lift at angle `θ`: `(Â_s = φ_t, A_t, A_1..3)` at 0..5,
/// `φ_1..3` at 5..8, so that `∇_s` uses `φ_t` as connection component.
///
/// * `flowA_i = ∂_s A_i + D_ti − (sin θ G_jk + cos θ D_jk)`
/// * `flowφ_i = ∇_s φ_i − (F_ti + cos θ G_jk − sin θ D_jk)`
/// * `div = ∂_s A_t − Σ_{μ ∈ t,x} ∇_μ φ_μ`
///
/// with `G = F − ½[φ∧φ]`, `D = d_A φ` on `W⁴`.
pub fn flow_point(l: &impl Local, theta: f64) -> Vec<Mat> {
    let (cs, sn) = (theta.cos(), theta.sin());
    // φ_μ for μ = t, x1, x2, x3 (5D axes 1..=4)
    let p = |m: usize| if m == 1 { 0 } else { 5 + m - 2 };
    let g = |m: usize, k: usize| crate::lattice::curvature_at(l, 0, m, k) - br(l.v(p(m)), l.v(p(k)));
    let d = |m: usize, k: usize| crate::lattice::cov_at(l, 0, p(k), m) - crate::lattice::cov_at(l, 0, p(m), k);
    let mut fa = Vec::with_capacity(3);
    let mut fp = Vec::with_capacity(3);
    for i in 0..3 {
        let ii = i + 2;
        let (j, k) = crate::lie::cyc(i);
        let (j, k) = (j + 2, k + 2);
        fa.push(l.d(ii, 0) + d(1, ii) - (g(j, k) * c(sn) + d(j, k) * c(cs)));
        fp.push(
            crate::lattice::cov_at(l, 0, 5 + i, 0)
                - (crate::lattice::curvature_at(l, 0, 1, ii) + g(j, k) * c(cs) - d(j, k) * c(sn)),
        );
    }
    let mut div = l.d(1, 0).clone();
    for m in 1..5 {
        div -= crate::lattice::cov_at(l, 0, p(m), m);
    }
    let mut out = fa;
    out.extend(fp);
    out.push(div);
    out
}

fn check_flow_angle(theta: f64) -> Result<()> {
    if theta.sin().abs() < 1e-12 || theta.cos().abs() < 1e-12 {
        return Err(Error::Domain(format!("flow form excluded at θ = {theta} (multiple of π/2)")));
    }
    Ok(())
}

/// The pair `(Â, B)` on `ℝ_s × W⁴` corresponding to an `s`-dependent family
/// `(A(s), φ(s))` of 4D fields, and the frame at angle `θ`.
pub fn flow_lift(theta: f64, f: &KwFields) -> Result<(HwFields, Frame)> {
    let spec = ReductionSpec::new(1, theta)?;
    Ok((
        HwFields {
            a: [f.phi[0].clone(), f.a[0].clone(), f.a[1].clone(), f.a[2].clone(), f.a[3].clone()],
            b: [f.phi[1].clone(), f.phi[2].clone(), f.phi[3].clone()],
        },
        spec.frame,
    ))
}

/// `f` holds `(A_t, A_1..3)` and `(φ_t, φ_1..3)` sampled on a 5D grid with
/// axes `(s, t, x1, x2, x3)`.
pub fn hw_flow_form_residual(grid: &Grid, theta: f64, f: &KwFields, backend: Backend) -> Result<ResidualBundle> {
    check_flow_angle(theta)?;
    check_dim(5, grid.dim())?;
    let (hw, _) = flow_lift(theta, f)?;
    let s = sample(grid, &hw.comps(), backend)?;
    let pts: Vec<Vec<Mat>> = (0..grid.len())
        .into_par_iter()
        .map(|site| flow_point(&s.at(site), theta))
        .collect();
    let names = ["flowA.1", "flowA.2", "flowA.3", "flowphi.1", "flowphi.2", "flowphi.3", "div"];
    let n = f.a[0].n;
    Ok(ResidualBundle {
        system: System::HW,
        components: names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                (
                    name.to_string(),
                    Field {
                        n,
                        data: pts.iter().map(|p| p[k].clone()).collect(),
                    },
                )
            })
            .collect(),
        mask: s.mask,
        grid: grid.clone(),
        backend,
    })
}

/// Dictionary between the flow form and the Haydys-Witten residual:
/// `flowA = −sin θ eq1 + cos θ eq2_i`, `flowφ = −cos θ eq1 − sin θ eq2_i`,
/// `div = eq2_0`. Returns the relative defect.
pub fn flow_dictionary_defect(grid: &Grid, theta: f64, f: &KwFields, backend: Backend) -> Result<f64> {
    let flow = hw_flow_form_residual(grid, theta, f, backend)?;
    let (lifted, frame) = flow_lift(theta, f)?;
    let hw = hw_residual(grid, &lifted, &frame, backend)?;
    let (cs, sn) = (theta.cos(), theta.sin());
    let at = |k: usize, s: usize| &hw.components[k].1.data[s];
    let mut d: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in (0..grid.len()).filter(|&s| flow.mask.0[s]) {
        for i in 0..3 {
            let fa = at(i, s) * c(-sn) + at(4 + i, s) * c(cs);
            let fp = at(i, s) * c(-cs) - at(4 + i, s) * c(sn);
            d = d.max(fnorm(&(fa - &flow.components[i].1.data[s])));
            d = d.max(fnorm(&(fp - &flow.components[3 + i].1.data[s])));
            scale = scale.max(fnorm(&flow.components[i].1.data[s]));
        }
        d = d.max(fnorm(&(at(3, s) - &flow.components[6].1.data[s])));
    }
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// `θ` values used by the acceptance checks for the angle-dependent reductions.
/// Periodic reduced grid with `n` points per axis and period `2π`: axes
/// `(t, x₁, x₂, x₃)` for `k = 1`, `(w, x₂, x₃)` for `k = 2`, `(y)` for `k = 4`.
pub fn reduced_grid(k: usize, n: usize) -> Result<Grid> {
    let names: &[&str] = match k {
        1 => &["t", "x1", "x2", "x3"],
        2 => &["w", "x2", "x3"],
        4 => &["y"],
        _ => return Err(Error::InvalidArgument(format!("only k ∈ {{1, 2, 4}} is defined, got {k}"))),
    };
    Grid::periodic(names, n, std::f64::consts::TAU)
}

/// Seeded random smooth tuple in the layout of the reduction's target system.
pub fn random_reduced(spec: &ReductionSpec, grid: &Grid, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Reduced {
    match spec.target {
        Target::KW => Reduced::Kw(KwFields::random(grid, n, rng)),
        Target::VW => Reduced::Vw(VwFields::random(grid, n, rng)),
        Target::TEBE | Target::EBE0 => Reduced::Tebe(EbeFields::random(grid, n, rng)),
        Target::NahmO => {
            let f = |rng: &mut rand_chacha::ChaCha8Rng| {
                crate::lattice::random_smooth_field(grid, n, crate::residual::RANDOM_MODES, crate::residual::RANDOM_AMP, rng)
            };
            Reduced::Nahm { a_y: f(rng), x: (0..7).map(|_| f(rng)).collect() }
        }
    }
}

pub fn standard_angles() -> [f64; 4] {
    [PI / 6.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0]
}
