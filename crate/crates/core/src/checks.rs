//! Parameterised verification runs that produce [`CheckRecord`]s; the
//! command-line front end is a thin layer over these.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicial::{build_indicial_system, compute_indicial_roots, roots_via_casimir, CLUSTER_TOL};
use crate::lattice::{seeded_rng, Backend};
use crate::lie::principal_embedding;
use crate::models::{knot_np_compatibility, verify_knot_model, verify_nahm_pole, default_knot_window, KnotSingularityModel, NahmPoleModel};
use crate::nahm::{integrate_nahm, IntegrateOptions, NahmKind, NahmTrajectory};
use crate::reduction::{check_reduction_equivalence, random_reduced, reduced_grid, ReductionSpec, EQUIVALENCE_TOL};
use crate::report::CheckRecord;

pub const ANCHOR_INDICIAL: &str = "indicial roots {-(j+1), -j, j, j+1} at a regular twisted Nahm pole, independent of beta";
pub const ANCHOR_CASIMIR: &str = "indicial roots from the spin-spin operator and Casimir decomposition";
pub const ANCHOR_NAHM_POLE: &str = "twisted Nahm pole model solves the beta-twisted octonionic Nahm equations";
pub const ANCHOR_KNOT: &str = "knot singularity model solves the extended Bogomolny equations";
pub const ANCHOR_KNOT_WINDING: &str = "knot model E-component picks up the phase e^{i lambda theta}";
pub const ANCHOR_KNOT_NILPOTENT: &str = "knot model Higgs field takes values in the nilpotent cone";
pub const ANCHOR_KNOT_COMPAT: &str = "knot model is asymptotic to the untwisted Nahm pole away from the knot";
pub const ANCHOR_REDUCTION: &str = "Haydys-Witten equations reduce to KW / VW / TEBE / twisted Nahm equations";
pub const ANCHOR_NAHM_FLOW: &str = "quaternionic and twisted octonionic Nahm flows on an interval";

/// One record per `(N, β)`: metric is the largest distance of a numeric root
/// from its integer, or `∞` when the snapped multiset differs from the
/// closed form or a root lies in `(−1, 1)`.
pub fn indicial_checks(ns: &[usize], betas: &[f64], compare_casimir: bool) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &n in ns {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("N must be ≥ 2, got {n}")));
        }
        let (closed, _) = roots_via_casimir(n)?;
        let expected = closed.snapped_multiset().expect("closed form is integral");
        for &beta in betas {
            out.push(CheckRecord::timed(format!("indicial.N{n}.beta{beta:.4}"), ANCHOR_INDICIAL, CLUSTER_TOL, || {
                let roots = compute_indicial_roots(&build_indicial_system(n, beta)?)?;
                let inside = roots.roots.iter().any(|r| r.value.abs() < 1.0 - CLUSTER_TOL);
                Ok(match roots.snapped_multiset() {
                    Some(m) if m == expected && !inside => {
                        roots.roots.iter().map(|r| (r.value - r.value.round()).abs()).fold(0.0, f64::max)
                    }
                    _ => f64::INFINITY,
                })
            })?);
        }
        if compare_casimir {
            out.push(CheckRecord::timed(format!("indicial.casimir.N{n}"), ANCHOR_CASIMIR, 0.0, || {
                let numeric = compute_indicial_roots(&build_indicial_system(n, 0.0)?)?;
                Ok(if numeric.snapped_multiset() == closed.snapped_multiset() { 0.0 } else { 1.0 })
            })?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ModelOptions {
    pub n: usize,
    pub betas: Vec<f64>,
    pub lambdas: Vec<u32>,
    pub sweep: Vec<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { n: 2, betas: vec![0.0], lambdas: vec![1, 2, 3], sweep: vec![0.04, 0.02, 0.01] }
    }
}

pub fn model_checks(opts: &ModelOptions) -> Result<Vec<CheckRecord>> {
    if opts.lambdas.contains(&0) {
        return Err(Error::InvalidArgument("knot charge λ must be ≥ 1".into()));
    }
    let mut out = Vec::new();
    let rho = principal_embedding(opts.n)?;
    let ys: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
    for &beta in &opts.betas {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&beta) {
            return Err(Error::InvalidArgument(format!("β must lie in [0, π/2], got {beta}")));
        }
        let model = NahmPoleModel::new(rho.triple.clone(), beta);
        out.push(CheckRecord::timed(format!("nahm_pole.beta{beta:.4}"), ANCHOR_NAHM_POLE, 1e-13, || {
            Ok(verify_nahm_pole(&model, &ys, &[], Backend::Central4)?.analytic_max_rel)
        })?);
    }
    for &lam in &opts.lambdas {
        let model = KnotSingularityModel::standard(lam)?;
        let t = std::time::Instant::now();
        let rep = verify_knot_model(&model, &default_knot_window(), &opts.sweep, Backend::Central4)?;
        let secs = t.elapsed().as_secs_f64();
        out.push(CheckRecord::new(format!("knot.lambda{lam}.residual"), ANCHOR_KNOT, rep.extrapolated, 1e-8, secs));
        out.push(CheckRecord::new(format!("knot.lambda{lam}.order"), ANCHOR_KNOT, (rep.order - 4.0).abs(), 0.2, 0.0));
        out.push(CheckRecord::new(format!("knot.lambda{lam}.winding"), ANCHOR_KNOT_WINDING, (rep.winding - lam as f64).abs(), 1e-9, 0.0));
        out.push(CheckRecord::new(format!("knot.lambda{lam}.monodromy"), ANCHOR_KNOT_WINDING, rep.monodromy_defect, 1e-12, 0.0));
        out.push(CheckRecord::new(format!("knot.lambda{lam}.nilpotency"), ANCHOR_KNOT_NILPOTENT, rep.nilpotency_defect, 0.0, 0.0));
        out.push(CheckRecord::timed(format!("knot.lambda{lam}.np_compatibility"), ANCHOR_KNOT_COMPAT, 0.1, || {
            let c = knot_np_compatibility(&model, 1.0, 0.7, &[1e-2, 5e-3, 2.5e-3])?;
            // quadratic approach of the Higgs field to the pole coefficients
            Ok((c.higgs_rate - 2.0).abs())
        })?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ReductionOptions {
    pub ks: Vec<usize>,
    pub angles: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n: usize,
    pub points: usize,
    pub backend: Backend,
}

/// One record per `(k, angle)`; metric is the largest discrepancy over seeds.
pub fn reduction_checks(opts: &ReductionOptions) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &k in &opts.ks {
        let grid = reduced_grid(k, opts.points)?;
        for &angle in &opts.angles {
            let spec = ReductionSpec::new(k, angle)?;
            out.push(CheckRecord::timed(format!("reduction.k{k}.angle{angle:.4}.{:?}", spec.target), ANCHOR_REDUCTION, EQUIVALENCE_TOL, || {
                let d: Vec<f64> = opts
                    .seeds
                    .par_iter()
                    .map(|&seed| {
                        let red = random_reduced(&spec, &grid, opts.n, &mut seeded_rng(seed));
                        check_reduction_equivalence(&spec, &grid, &red, opts.backend).map(|r| r.max_discrepancy)
                    })
                    .collect::<Result<_>>()?;
                Ok(d.into_iter().fold(0.0, f64::max))
            })?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NahmRunOptions {
    pub n: usize,
    pub beta: f64,
    pub y0: f64,
    pub y1: f64,
    pub integrate: IntegrateOptions,
}

/// Integrates from the twisted pole at `y0`; records the deviation from the
/// exact model and the observed order against a run with half the steps.
pub fn nahm_run(opts: &NahmRunOptions) -> Result<(NahmTrajectory, Vec<CheckRecord>)> {
    if !(opts.y0 > 0.0) {
        return Err(Error::InvalidArgument(format!("y0 must be > 0 (the pole sits at y = 0), got {}", opts.y0)));
    }
    let model = NahmPoleModel::new(principal_embedding(opts.n)?.triple, opts.beta);
    let kind = NahmKind::Octonionic { beta: opts.beta };
    let dev = |t: &NahmTrajectory| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (y, x) in t.ys.iter().zip(&t.xs) {
            let m = model.nahm_vector(*y)?;
            let d: f64 = x.iter().zip(&m).map(|(a, b)| crate::lie::fnorm_sqr(&(a - b))).sum::<f64>().sqrt();
            worst = worst.max(d);
        }
        Ok(worst)
    };
    let t0 = std::time::Instant::now();
    let traj = integrate_nahm(kind, opts.y0, model.nahm_vector(opts.y0)?, opts.y1, &opts.integrate)?;
    let secs = t0.elapsed().as_secs_f64();
    let fine = dev(&traj)?;
    let mut records = vec![CheckRecord::new(
        format!("nahm.beta{:.4}.deviation", opts.beta),
        ANCHOR_NAHM_FLOW,
        fine,
        1e-6,
        secs,
    )];
    if opts.integrate.method == crate::nahm::Method::Rk4 && opts.integrate.steps >= 4 && opts.integrate.steps % 2 == 0 {
        let coarse_opts = IntegrateOptions { steps: opts.integrate.steps / 2, ..opts.integrate.clone() };
        let coarse = integrate_nahm(kind, opts.y0, model.nahm_vector(opts.y0)?, opts.y1, &coarse_opts)?;
        let end = |t: &NahmTrajectory| -> Result<f64> {
            let m = model.nahm_vector(opts.y1)?;
            Ok(t.xs.last().expect("nonempty").iter().zip(&m).map(|(a, b)| crate::lie::fnorm_sqr(&(a - b))).sum::<f64>().sqrt())
        };
        let (ec, ef) = (end(&coarse)?, end(&traj)?);
        // below ~1e-12 the error is round-off and the order is meaningless
        let metric = if ef < 1e-12 { 0.0 } else { ((ec / ef).log2() - 4.0).abs() };
        records.push(CheckRecord::new(format!("nahm.beta{:.4}.order", opts.beta), ANCHOR_NAHM_FLOW, metric, 0.2, 0.0));
    }
    Ok((traj, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn indicial_records() {
        let r = indicial_checks(&[2], &[0.0, PI / 6.0], true).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.pass), "{r:?}");
        assert!(indicial_checks(&[1], &[0.0], false).is_err());
    }

    #[test]
    fn model_records() {
        let r = model_checks(&ModelOptions { betas: vec![0.3], lambdas: vec![1], ..Default::default() }).unwrap();
        assert!(r.iter().all(|x| x.pass), "{r:?}");
        assert!(model_checks(&ModelOptions { lambdas: vec![0], ..Default::default() }).is_err());
    }

    #[test]
    fn reduction_records() {
        let r = reduction_checks(&ReductionOptions {
            ks: vec![1, 2, 4],
            angles: vec![PI / 3.0],
            seeds: vec![7],
            n: 2,
            points: 6,
            backend: Backend::Spectral,
        })
        .unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|x| x.pass), "{r:?}");
        assert!(reduced_grid(3, 6).is_err());
    }

    #[test]
    fn nahm_records() {
        let (t, r) = nahm_run(&NahmRunOptions {
            n: 2,
            beta: 0.785,
            y0: 0.5,
            y1: 2.0,
            integrate: IntegrateOptions { steps: 64, ..Default::default() },
        })
        .unwrap();
        assert_eq!(t.len(), 65);
        assert!(r.iter().all(|x| x.pass), "{r:?}");
    }
}
