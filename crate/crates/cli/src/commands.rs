//! Subcommand bodies: resolve settings, run the checks, return records.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};
use std::path::{Path, PathBuf};
use std::time::Instant;

use gfl_core::checks::{
    indicial_checks, model_checks, nahm_run, reduction_checks, ModelOptions, NahmRunOptions, ReductionOptions, ANCHOR_NAHM_FLOW,
};
use gfl_core::indicial::{build_indicial_system, compute_indicial_roots};
use gfl_core::lattice::{read_snapshot, Backend, Field, Frame, Grid};
use gfl_core::lie::{fnorm_sqr, principal_embedding, Mat};
use gfl_core::models::NahmPoleModel;
use gfl_core::nahm::{integrate_nahm, start_from_pole, IntegrateOptions, Method, Mode, NahmKind, NahmTrajectory, PoleStart};
use gfl_core::report::CheckRecord;
use gfl_core::residual::{
    ebe_hym_residual, ebe_residual, hw_residual, kw_forms_defect, kw_residual, nahm_residual, tebe_residual, vw_kw_defect,
    vw_residual, EbeFields, HwFields, KWParams, KwFields, NahmAlgebra, ResidualBundle, VwFields,
};
use gfl_core::Error;

use crate::config::Scope;
use crate::{IndicialArgs, ModelsArgs, NahmArgs, ReductionsArgs, ResidualArgs};

/// Why a command produced no records.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files: exit 2.
    Config(String),
    /// Anything else: exit 1.
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::Domain(_)
            | Error::Grid(_)
            | Error::DimensionMismatch { .. }
            | Error::NonPrincipal(_)
            | Error::Snapshot(_)
            | Error::NotInvariant { .. } => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Config(s)
    }
}

pub type Outcome = Result<Vec<CheckRecord>, Failure>;

fn check_beta(beta: f64) -> Result<f64, Failure> {
    if !(0.0..=FRAC_PI_2).contains(&beta) {
        return Err(Failure::Config(format!("beta must lie in [0, pi/2] radians, got {beta}")));
    }
    Ok(beta)
}

pub fn indicial(a: &IndicialArgs, s: &Scope) -> Outcome {
    let ns: Vec<usize> = s.list(&a.n, "N", vec![2])?;
    let betas: Vec<f64> = s.list(&a.beta, "beta", vec![0.0])?;
    for &b in &betas {
        if !(0.0..FRAC_PI_2).contains(&b) {
            return Err(Failure::Config(format!("beta must lie in [0, pi/2) radians, got {b}")));
        }
    }
    let cmp = s.switch(a.compare_casimir, "compare-casimir")?;
    Ok(indicial_checks(&ns, &betas, cmp)?)
}

pub fn verify_models(a: &ModelsArgs, s: &Scope) -> Outcome {
    let d = ModelOptions::default();
    let opts = ModelOptions {
        n: s.value(&a.n, "N", d.n)?,
        betas: s.list(&a.beta, "beta", d.betas)?,
        lambdas: s.list(&a.lambda, "lambda", d.lambdas)?,
        sweep: s.list(&a.sweep, "sweep", d.sweep)?,
    };
    for &b in &opts.betas {
        check_beta(b)?;
    }
    Ok(model_checks(&opts)?)
}

pub fn verify_reductions(a: &ReductionsArgs, s: &Scope) -> Outcome {
    let ks: Vec<usize> = s.list(&a.k, "k", vec![1, 2, 4])?;
    if let Some(k) = ks.iter().find(|k| ![1, 2, 4].contains(*k)) {
        return Err(Failure::Config(format!("k = {k}: only k in {{1, 2, 4}} is defined")));
    }
    let angles: Vec<f64> = s.list(&a.theta, "theta", vec![FRAC_PI_6, FRAC_PI_4, FRAC_PI_3])?;
    let seed: u64 = s.value(&a.seed, "seed", 1)?;
    let count: u64 = s.value(&a.seeds, "seeds", 5)?;
    if count == 0 {
        return Err(Failure::Config("seeds must be >= 1".into()));
    }
    let points: usize = s.value(&a.points, "points", 8)?;
    if points < 4 {
        return Err(Failure::Config(format!("points must be >= 4, got {points}")));
    }
    let opts = ReductionOptions {
        ks,
        angles,
        seeds: (seed..seed + count).collect(),
        n: s.value(&a.n, "N", 2)?,
        points,
        backend: s.value(&a.backend, "backend", Backend::Spectral)?,
    };
    if opts.n < 2 {
        return Err(Failure::Config(format!("N must be >= 2, got {}", opts.n)));
    }
    Ok(reduction_checks(&opts)?)
}

fn dist(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| fnorm_sqr(&(x - y))).sum::<f64>().sqrt()
}

pub fn solve_nahm(a: &NahmArgs, s: &Scope) -> Outcome {
    let n: usize = s.value(&a.n, "N", 2)?;
    let beta = check_beta(s.value(&a.beta, "beta", FRAC_PI_4)?)?;
    let y0: f64 = s.value(&a.y0, "y0", 0.5)?;
    let y1: f64 = s.value(&a.y1, "y1", 2.0)?;
    if !(y0 > 0.0) {
        return Err(Failure::Config(format!("y0 must be > 0: the pole at y = 0 is singular (got {y0})")));
    }
    if !(y1 > y0) {
        return Err(Failure::Config(format!("y1 must exceed y0 (got y0 = {y0}, y1 = {y1})")));
    }
    let d = IntegrateOptions::default();
    let integrate = IntegrateOptions {
        method: s.value(&a.method, "method", Method::Rk4)?,
        steps: s.value(&a.steps, "steps", 1024)?,
        tol: s.value(&a.tol, "tol", d.tol)?,
        blow_up: s.value(&a.blow_up, "blow-up", d.blow_up)?,
        a_y: None,
    };
    if integrate.steps == 0 {
        return Err(Failure::Config("steps must be >= 1".into()));
    }
    let exact = s.switch(a.exact_pole, "exact-pole")?;
    let perturb: f64 = s.value(&a.perturb, "perturb", 0.0)?;
    let out: Option<PathBuf> = s.optional(&a.trajectory, "trajectory")?;
    if exact && perturb != 0.0 {
        return Err(Failure::Config("--exact-pole and --perturb are mutually exclusive".into()));
    }
    let (traj, records) = if exact {
        nahm_run(&NahmRunOptions { n, beta, y0, y1, integrate })?
    } else {
        perturbed_run(n, beta, y0, y1, perturb, &integrate)?
    };
    if let Some(path) = out {
        traj.write_csv(&path).map_err(|e| Failure::Run(format!("writing {}: {e}", path.display())))?;
    }
    Ok(records)
}

/// Starts on the pole plus `perturb` times the first `y¹` mode, and judges
/// the flow by its own finite-difference residual and by self-convergence
/// over `steps`, `steps/2`, `steps/4`.
fn perturbed_run(
    n: usize,
    beta: f64,
    y0: f64,
    y1: f64,
    perturb: f64,
    opts: &IntegrateOptions,
) -> Result<(NahmTrajectory, Vec<CheckRecord>), Failure> {
    let model = NahmPoleModel::new(principal_embedding(n)?.triple, beta);
    let roots = compute_indicial_roots(&build_indicial_system(n, beta)?)?;
    let modes = if perturb != 0.0 { vec![Mode { alpha: 1.0, index: 0, amplitude: perturb }] } else { vec![] };
    let x0 = start_from_pole(&PoleStart { model, y0, modes }, &roots)?;
    let kind = NahmKind::Octonionic { beta };
    let tag = format!("nahm.beta{beta:.4}");
    let t = Instant::now();
    let traj = match integrate_nahm(kind, y0, x0.clone(), y1, opts) {
        Ok(t) => t,
        Err(Error::BlowUp { y, partial }) => {
            eprintln!("blow-up at y = {y}; trajectory truncated");
            // the state norm passed the threshold: an unbounded metric, failing
            let rec = CheckRecord::new(format!("{tag}.blow_up"), ANCHOR_NAHM_FLOW, f64::INFINITY, opts.blow_up, t.elapsed().as_secs_f64());
            return Ok((*partial, vec![rec]));
        }
        Err(e) => return Err(e.into()),
    };
    let secs = t.elapsed().as_secs_f64();
    let mut records = Vec::new();
    if traj.is_uniform() && traj.len() >= 5 {
        let r = traj.residual(Backend::Central4)?;
        let worst = r.iter().cloned().fold(0.0, f64::max);
        records.push(CheckRecord::new(format!("{tag}.residual"), ANCHOR_NAHM_FLOW, worst, 1e-6, secs));
    }
    if opts.method == Method::Adaptive {
        // accumulated local error estimates bound the global error
        records.push(CheckRecord::new(format!("{tag}.error_estimate"), ANCHOR_NAHM_FLOW, traj.meta.error_estimate, 1e-6, secs));
    }
    if opts.method == Method::Rk4 && opts.steps >= 8 && opts.steps % 4 == 0 {
        let end = |steps: usize| -> Result<Vec<Mat>, Failure> {
            let o = IntegrateOptions { steps, ..opts.clone() };
            Ok(integrate_nahm(kind, y0, x0.clone(), y1, &o)?.xs.pop().expect("nonempty"))
        };
        let fine = traj.xs.last().expect("nonempty");
        let (half, quarter) = (end(opts.steps / 2)?, end(opts.steps / 4)?);
        let (d1, d2) = (dist(&quarter, &half), dist(&half, fine));
        // differences at round-off level carry no order information
        let metric = if d2 < 1e-12 { 0.0 } else { ((d1 / d2).log2() - 4.0).abs() };
        records.push(CheckRecord::new(format!("{tag}.order"), ANCHOR_NAHM_FLOW, metric, 0.2, 0.0));
    }
    Ok((traj, records))
}

pub const ANCHOR_RESIDUAL: &str = "pointwise residual of a user-supplied field snapshot";
pub const ANCHOR_FORMS: &str = "equivalent forms of the equations agree through their linear dictionary";

/// Component names each system expects in a snapshot; absent ones are zero.
pub fn expected_components(system: &str) -> Option<(usize, Vec<String>)> {
    let names = |groups: &[(&str, std::ops::RangeInclusive<usize>)]| -> Vec<String> {
        groups.iter().flat_map(|(p, r)| r.clone().map(move |i| format!("{p}{i}"))).collect()
    };
    Some(match system {
        "hw" => (5, names(&[("A", 0..=4), ("B", 1..=3)])),
        "kw" => (4, names(&[("A", 0..=3), ("phi", 0..=3)])),
        "vw" => (4, [names(&[("A", 0..=3), ("B", 1..=3)]), vec!["C".into()]].concat()),
        "ebe" | "tebe" | "hym" => (3, [names(&[("A", 1..=3), ("phi", 1..=3)]), vec!["c1".into(), "c2".into()]].concat()),
        "nahm-h" => (1, [vec!["Ay".to_string()], names(&[("X", 1..=3)])].concat()),
        "nahm-o" => (1, [vec!["Ay".to_string()], names(&[("X", 1..=7)])].concat()),
        _ => return None,
    })
}

fn load_fields(path: &Path, system: &str) -> Result<(Grid, Vec<Field>), Failure> {
    let (dim, names) = expected_components(system)
        .ok_or_else(|| Failure::Config(format!("unknown system '{system}' (hw, kw, vw, ebe, tebe, hym, nahm-h, nahm-o)")))?;
    let (grid, comps) = read_snapshot(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if grid.dim() != dim {
        return Err(Failure::Config(format!("{}: system {system} needs a {dim}D grid, snapshot is {}D", path.display(), grid.dim())));
    }
    if let Some((bad, _)) = comps.iter().find(|(n, _)| !names.contains(n)) {
        return Err(Failure::Config(format!("{}: component '{bad}' is not one of {}", path.display(), names.join(", "))));
    }
    let n = comps
        .first()
        .map(|(_, f)| f.n)
        .ok_or_else(|| Failure::Config(format!("{}: snapshot has no components", path.display())))?;
    let fields = names
        .iter()
        .map(|name| comps.iter().find(|(c, _)| c == name).map(|(_, f)| f.clone()).unwrap_or_else(|| Field::zeros(&grid, n)))
        .collect();
    Ok((grid, fields))
}

fn take<const K: usize>(it: &mut impl Iterator<Item = Field>) -> [Field; K] {
    std::array::from_fn(|_| it.next().expect("component count fixed by expected_components"))
}

pub fn residual(a: &ResidualArgs, s: &Scope) -> Outcome {
    let system: String = s
        .optional(&a.system, "system")?
        .ok_or_else(|| Failure::Config("--system is required (hw, kw, vw, ebe, tebe, hym, nahm-h, nahm-o)".into()))?;
    let theta: f64 = s.value(&a.theta, "theta", FRAC_PI_2)?;
    let beta = check_beta(s.value(&a.beta, "beta", 0.0)?)?;
    let tol: f64 = s.value(&a.tol, "tol", 1e-6)?;
    let backend: Option<Backend> = s.optional(&a.backend, "backend")?;
    let forms = s.switch(a.check_form_equivalence, "check-form-equivalence")?;
    if forms && !matches!(system.as_str(), "kw" | "vw") {
        return Err(Failure::Config("--check-form-equivalence applies to kw and vw only".into()));
    }
    let mut files: Vec<PathBuf> = a.snapshots.clone();
    if files.is_empty() {
        files = s.list(&None, "snapshot", vec![])?;
    }
    if files.is_empty() {
        return Err(Failure::Config("no snapshot files given".into()));
    }
    let mut out = Vec::new();
    for path in &files {
        let (grid, fields) = load_fields(path, &system)?;
        let backend = backend.unwrap_or(if grid.all_periodic() { Backend::Spectral } else { Backend::Central4 });
        let stem = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
        let id = format!("residual.{system}.{stem}");
        let mut it = fields.into_iter();
        let t = Instant::now();
        let bundle: ResidualBundle = match system.as_str() {
            "hw" => hw_residual(&grid, &HwFields { a: take(&mut it), b: take(&mut it) }, &Frame::standard(), backend)?,
            "kw" => {
                let f = KwFields { a: take(&mut it), phi: take(&mut it) };
                if forms {
                    let tf = Instant::now();
                    let defect = kw_forms_defect(&grid, theta, &f, backend)?;
                    out.push(CheckRecord::new(format!("{id}.forms"), ANCHOR_FORMS, defect, 1e-12, tf.elapsed().as_secs_f64()));
                }
                kw_residual(&grid, KWParams::new(theta)?, &f, backend)?
            }
            "vw" => {
                let f = VwFields { a: take(&mut it), b: take(&mut it), c: it.next().expect("C") };
                if forms {
                    let tf = Instant::now();
                    let defect = vw_kw_defect(&grid, &f, backend)?;
                    out.push(CheckRecord::new(format!("{id}.forms"), ANCHOR_FORMS, defect, 1e-12, tf.elapsed().as_secs_f64()));
                }
                vw_residual(&grid, &f, backend)?
            }
            "ebe" | "tebe" | "hym" => {
                let f = EbeFields { a: take(&mut it), phi: take(&mut it), c1: it.next().expect("c1"), c2: it.next().expect("c2") };
                match system.as_str() {
                    "ebe" => ebe_residual(&grid, &f, backend)?,
                    "tebe" => tebe_residual(&grid, theta, &f, backend)?,
                    _ => ebe_hym_residual(&grid, &f, backend)?,
                }
            }
            _ => {
                let a_y = it.next().expect("Ay");
                let x: Vec<Field> = it.collect();
                let alg = if system == "nahm-h" {
                    NahmKind::Quaternionic.algebra()
                } else {
                    NahmAlgebra::Twisted(beta)
                };
                nahm_residual(&grid, &alg, &a_y, &x, backend)?
            }
        };
        out.push(CheckRecord::new(id, ANCHOR_RESIDUAL, bundle.max_norm(), tol, t.elapsed().as_secs_f64()));
    }
    Ok(out)
}
