//! Indicial roots of the linearised β-twisted Nahm system at a regular Nahm
//! pole: assembly of the real-linear operator `M` with `αx + Mx = 0`, numeric
//! roots as the spectrum of `−M`, and the closed form from the spin-spin
//! operator `J = Σ tᵢ ⊗ 𝔰ᵢ`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{ad_matrix, decompose_adjoint, principal_embedding, spin_irrep_triple, su_basis, Mat, C64};
use crate::models::TAU_PERM;

/// Clustering and integer-snapping tolerance for roots.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Imaginary residue above which the assembly is considered broken.
pub const IMAG_ERROR: f64 = 1e-6;

/// Variable blocks in order `(a_s, a_y, a₁, a₂, a₃, b₁, b₂, b₃)`.
pub const VARIABLES: [&str; 8] = ["a_s", "a_y", "a_1", "a_2", "a_3", "b_1", "b_2", "b_3"];

#[derive(Clone, Debug)]
pub struct IndicialSystem {
    pub n: usize,
    pub beta: f64,
    pub triple: crate::lie::SU2Triple,
    /// Real dimension of su(N).
    pub d: usize,
    /// `8d × 8d`; entry `(8-block q, su(N)-coordinate k)` sits at `q·d + k`.
    pub m: DMatrix<f64>,
}

fn eps3(i: usize, j: usize, k: usize) -> f64 {
    crate::lie::eps(i, j, k)
}

/// Operator `M` for the principal embedding of su(N).
pub fn build_indicial_system(n: usize, beta: f64) -> Result<IndicialSystem> {
    let rho = principal_embedding(n)?;
    build_indicial_system_for(rho.triple, beta)
}

/// Operator `M` for an arbitrary (e.g. conjugated) principal triple.
///
/// Rows, with `c = cos β`, `s = sin β`, `τ = (2 3)`:
/// * `a_s`: `c Σ[tᵢ,aᵢ] − s Σ[t_τ(i),bᵢ]`
/// * `a_y`: `s Σ[t_τ(i),aᵢ] + c Σ[tᵢ,bᵢ]`
/// * `aᵢ`: `−c[tᵢ,a_s] − s[t_τ(i),a_y] − εᵢⱼₖ(c²[tⱼ,aₖ] − sc[tⱼ,bₖ] + sc[t_τ(j),bₖ] + s²[t_τ(j),aₖ])`
/// * `bᵢ`: `s[t_τ(i),a_s] − c[tᵢ,a_y] + εᵢⱼₖ(c²[tⱼ,bₖ] + sc[tⱼ,aₖ] − sc[t_τ(j),aₖ] + s²[t_τ(j),bₖ])`
pub fn build_indicial_system_for(triple: crate::lie::SU2Triple, beta: f64) -> Result<IndicialSystem> {
    let n = triple.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("indicial system needs N ≥ 2, got {n}")));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&beta) {
        return Err(Error::Domain(format!("β must lie in [0, π/2), got {beta}")));
    }
    let basis = su_basis(n);
    let d = basis.len();
    let ad: Vec<DMatrix<f64>> = triple.t.iter().map(|t| ad_matrix(&basis, t)).collect();
    let (c, s) = (beta.cos(), beta.sin());
    let tau = TAU_PERM;
    let mut m = DMatrix::<f64>::zeros(8 * d, 8 * d);
    let mut add = |row: usize, col: usize, w: f64, blk: &DMatrix<f64>| {
        if w != 0.0 {
            let mut view = m.view_mut((row * d, col * d), (d, d));
            view += blk * w;
        }
    };
    let (a_s, a_y) = (0, 1);
    let a = |i: usize| 2 + i;
    let b = |i: usize| 5 + i;
    for i in 0..3 {
        add(a_s, a(i), c, &ad[i]);
        add(a_s, b(i), -s, &ad[tau[i]]);
        add(a_y, a(i), s, &ad[tau[i]]);
        add(a_y, b(i), c, &ad[i]);

        add(a(i), a_s, -c, &ad[i]);
        add(a(i), a_y, -s, &ad[tau[i]]);
        add(b(i), a_s, s, &ad[tau[i]]);
        add(b(i), a_y, -c, &ad[i]);
        for j in 0..3 {
            for k in 0..3 {
                let e = eps3(i, j, k);
                if e == 0.0 {
                    continue;
                }
                add(a(i), a(k), -e * c * c, &ad[j]);
                add(a(i), b(k), e * s * c, &ad[j]);
                add(a(i), b(k), -e * s * c, &ad[tau[j]]);
                add(a(i), a(k), -e * s * s, &ad[tau[j]]);

                add(b(i), b(k), e * c * c, &ad[j]);
                add(b(i), a(k), e * s * c, &ad[j]);
                add(b(i), a(k), -e * s * c, &ad[tau[j]]);
                add(b(i), b(k), e * s * s, &ad[tau[j]]);
            }
        }
    }
    Ok(IndicialSystem { n, beta, triple, d, m })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    pub value: f64,
    /// Nearest integer when within [`CLUSTER_TOL`].
    pub snapped: Option<i64>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndicialRootSet {
    pub roots: Vec<Root>,
    /// Largest open interval around 0 free of roots.
    pub gap: (f64, f64),
    /// Largest discarded imaginary part.
    pub max_imag: f64,
}

impl IndicialRootSet {
    /// `value → multiplicity` over snapped roots; `None` if any root failed to snap.
    pub fn snapped_multiset(&self) -> Option<BTreeMap<i64, usize>> {
        let mut out = BTreeMap::new();
        for r in &self.roots {
            *out.entry(r.snapped?).or_insert(0) += r.multiplicity;
        }
        Some(out)
    }

    pub fn total(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    fn from_values(mut vals: Vec<f64>, max_imag: f64) -> Self {
        vals.sort_by(f64::total_cmp);
        let mut roots: Vec<Root> = Vec::new();
        let mut members: Vec<f64> = Vec::new();
        let flush = |members: &mut Vec<f64>, roots: &mut Vec<Root>| {
            if members.is_empty() {
                return;
            }
            let value = members.iter().sum::<f64>() / members.len() as f64;
            let near = value.round();
            roots.push(Root {
                value,
                snapped: ((value - near).abs() <= CLUSTER_TOL).then_some(near as i64),
                multiplicity: members.len(),
            });
            members.clear();
        };
        for v in vals {
            if let Some(&last) = members.last() {
                if v - last > CLUSTER_TOL {
                    flush(&mut members, &mut roots);
                }
            }
            members.push(v);
        }
        flush(&mut members, &mut roots);
        let lo = roots.iter().filter(|r| r.value < 0.0).map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        let hi = roots.iter().filter(|r| r.value > 0.0).map(|r| r.value).fold(f64::INFINITY, f64::min);
        Self { roots, gap: (lo, hi), max_imag }
    }
}

impl IndicialSystem {
    /// `‖M − Mᵀ‖ / ‖M‖`; the assembled operator is symmetric.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.m - self.m.transpose()).norm() / self.m.norm()
    }
}

/// Spectrum of `−m` and its largest imaginary part. Symmetric input (to
/// 1e-13) goes through the symmetric solver; the general Schur iteration
/// is a fallback.
pub fn real_spectrum(m: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let norm = m.norm().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).norm() <= 1e-13 * norm {
        let sym = (m + m.transpose()) * -0.5;
        let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        (v, 0.0)
    } else {
        let ev = (-m).complex_eigenvalues();
        let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let mut v: Vec<f64> = ev.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        (v, max_imag)
    }
}

/// Roots as the eigenvalues of `−M`.
pub fn compute_indicial_roots(sys: &IndicialSystem) -> Result<IndicialRootSet> {
    let (ev, max_imag) = real_spectrum(&sys.m);
    if max_imag > IMAG_ERROR {
        return Err(Error::Assembly(format!("indicial spectrum has imaginary part {max_imag:.3e}")));
    }
    if let Some(z) = ev.iter().find(|z| z.abs() < CLUSTER_TOL) {
        return Err(Error::Assembly(format!("zero indicial root {z} signals a broken assembly")));
    }
    Ok(IndicialRootSet::from_values(ev, max_imag))
}

/// Source of a closed-form root: adjoint spin `j`, total-spin shift `η`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSource {
    pub j: usize,
    pub eta: i32,
    pub value: f64,
    pub multiplicity: usize,
}

/// Closed form. For each adjoint spin `j = 1..N−1`:
/// * `η = ±1`: `J = −½(C_𝔣 − C_𝔱 − C_𝔰)` takes the value `j+1` resp. `−j`,
///   giving roots `±J` with multiplicity `dim V_{j+η}` each;
/// * `η = 0`: the quadratics `α ∓ 1 − j(j+1)/α = 0` give `{j+1, −j}` and
///   `{j, −(j+1)}`, each with multiplicity `dim V_j`.
pub fn roots_via_casimir(n: usize) -> Result<(IndicialRootSet, Vec<RootSource>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("N ≥ 2 required, got {n}")));
    }
    let mut sources = Vec::new();
    for j in 1..n {
        let jf = j as f64;
        let c_t = jf * (jf + 1.0);
        let c_s = 2.0;
        for eta in [-1i32, 1] {
            let jt = jf + eta as f64;
            let big_j = -0.5 * (jt * (jt + 1.0) - c_t - c_s);
            let mult = 2 * (j as i64 + eta as i64) as usize + 1;
            for sign in [1.0, -1.0] {
                sources.push(RootSource { j, eta, value: sign * big_j.abs(), multiplicity: mult });
            }
        }
        for lin in [-1.0, 1.0] {
            // α² + lin·α − j(j+1) = 0
            let disc = (1.0 + 4.0 * c_t).sqrt();
            for sign in [1.0, -1.0] {
                sources.push(RootSource { j, eta: 0, value: 0.5 * (-lin + sign * disc), multiplicity: 2 * j + 1 });
            }
        }
    }
    let vals: Vec<f64> = sources
        .iter()
        .flat_map(|s| std::iter::repeat(s.value).take(s.multiplicity))
        .collect();
    Ok((IndicialRootSet::from_values(vals, 0.0), sources))
}

/// Spin-spin operator on `V_j ⊗ V₁` and the Casimir identity.
#[derive(Clone, Debug, Serialize)]
pub struct SpinSpinReport {
    pub j: usize,
    /// `(eigenvalue, multiplicity)`, clustered.
    pub eigenvalues: Vec<(f64, usize)>,
    /// `‖J + ½(C_𝔣 − C_𝔱 − C_𝔰)‖`.
    pub casimir_identity: f64,
    /// `‖C_𝔰 − 2‖`.
    pub vector_casimir: f64,
    /// Max deviation from `{j+1: 2j−1, 1: 2j+1, −j: 2j+3}`.
    pub max_deviation: f64,
    pub pass: bool,
}

/// `(𝔰ᵢ)ⱼₖ = −εᵢⱼₖ`.
pub fn vector_generators() -> [DMatrix<f64>; 3] {
    [0, 1, 2].map(|i| DMatrix::from_fn(3, 3, |j, k| -eps3(i, j, k)))
}

pub fn spin_spin_eigencheck(j: usize, tol: f64) -> Result<SpinSpinReport> {
    if j == 0 {
        return Err(Error::InvalidArgument("spin-spin check needs j ≥ 1".into()));
    }
    let t = spin_irrep_triple(2 * j)?;
    let s: [Mat; 3] = vector_generators().map(|m| m.map(C64::from));
    let dj = 2 * j + 1;
    let id_t = Mat::identity(dj, dj);
    let id_s = Mat::identity(3, 3);
    let mut big_j = Mat::zeros(3 * dj, 3 * dj);
    let mut c_f = Mat::zeros(3 * dj, 3 * dj);
    let mut c_t = Mat::zeros(3 * dj, 3 * dj);
    let mut c_s = Mat::zeros(3 * dj, 3 * dj);
    let mut c_s_small = Mat::zeros(3, 3);
    for i in 0..3 {
        big_j += t.t[i].kronecker(&s[i]);
        let f = t.t[i].kronecker(&id_s) + id_t.kronecker(&s[i]);
        c_f -= &f * &f;
        c_t -= (&t.t[i] * &t.t[i]).kronecker(&id_s);
        c_s -= id_t.kronecker(&(&s[i] * &s[i]));
        c_s_small -= &s[i] * &s[i];
    }
    let ident = (&big_j + (&c_f - &c_t - &c_s) * C64::from(0.5)).norm();
    let vec_cas = (c_s_small - Mat::identity(3, 3) * C64::from(2.0)).norm();
    let herm = (&big_j + big_j.adjoint()) * C64::from(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for v in ev {
        match clusters.last_mut() {
            Some((c, m)) if (v - *c).abs() <= 1e-6 => {
                *c = (*c * *m as f64 + v) / (*m as f64 + 1.0);
                *m += 1;
            }
            _ => clusters.push((v, 1)),
        }
    }
    let jf = j as f64;
    let expected = [(-jf, 2 * j + 3), (1.0, 2 * j + 1), (jf + 1.0, 2 * j - 1)];
    let mut dev: f64 = 0.0;
    let mut pass = clusters.len() == expected.len() || (j == 0);
    let mut want: Vec<(f64, usize)> = expected.to_vec();
    want.sort_by(|a, b| a.0.total_cmp(&b.0));
    if clusters.len() == want.len() {
        for ((v, m), (ev, em)) in clusters.iter().zip(&want) {
            dev = dev.max((v - ev).abs());
            pass &= m == em;
        }
    } else {
        dev = f64::INFINITY;
    }
    pass &= dev <= tol && ident <= 1e-12 && vec_cas <= 1e-12;
    Ok(SpinSpinReport { j, eigenvalues: clusters, casimir_identity: ident, vector_casimir: vec_cas, max_deviation: dev, pass })
}

/// Which `(j, η)` blocks each root's eigenspace occupies at `β = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct BlockAssignment {
    pub j: usize,
    pub eta: i32,
    pub roots: Vec<Root>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecouplingReport {
    pub n: usize,
    pub beta: f64,
    /// `‖M(β) − M(0)‖` spectra distance after sorting (β-independence).
    pub spectrum_distance: f64,
    /// `max_j ‖[M, P_j ⊗ I₈]‖`.
    pub adjoint_block_leak: f64,
    /// `max_i ‖[M(0), 𝔣ᵢ]‖` for the diagonal action `𝔣ᵢ = ad tᵢ ⊗ 1 + 1 ⊗ 𝔰ᵢ`
    /// with `𝔰ᵢ = −εᵢ` on both `a⃗` and `b⃗`.
    pub diagonal_action_defect: f64,
    /// `‖M(β)R − RM(0)‖ / ‖M(β)‖` for the rotation
    /// `(a⃗, b⃗) ↦ (sin β a⃗ + cos β b⃗, cos β a⃗ − sin β b⃗)`.
    pub rotation_defect: f64,
    /// Same, for a constant intertwiner `R = r ⊗ I` with `r ∈ GL(8)` solved
    /// for numerically; `None` if no invertible one exists.
    pub intertwiner_defect: Option<f64>,
    /// Dimension of the space of such intertwiners.
    pub intertwiner_dim: usize,
    /// Eigenvector pull-back at `β = 0`.
    pub blocks: Vec<BlockAssignment>,
}

/// `r ⊗ I_d` acting on the `8d` state.
fn lift8(r: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    r.kronecker(&DMatrix::identity(d, d))
}

fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    real_spectrum(m).0
}

/// Orthonormal basis (columns) of the `λ`-eigenspace of a symmetric matrix.
fn eigenspace(sym: &DMatrix<f64>, lambda: f64, tol: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(sym.clone());
    let cols: Vec<_> = (0..e.eigenvalues.len())
        .filter(|&k| (e.eigenvalues[k] - lambda).abs() < tol)
        .map(|k| e.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(sym.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

pub fn decoupled_combination_check(n: usize, beta: f64) -> Result<DecouplingReport> {
    let sys = build_indicial_system(n, beta)?;
    let sys0 = build_indicial_system(n, 0.0)?;
    let d = sys.d;
    let norm = sys.m.norm();
    let s_b = sorted_spectrum(&sys.m);
    let s_0 = sorted_spectrum(&sys0.m);
    let spectrum_distance = s_b.iter().zip(&s_0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let rho = principal_embedding(n)?;
    let dec = decompose_adjoint(&rho)?;
    let mut leak: f64 = 0.0;
    let mut projectors = Vec::new();
    for idx in 0..dec.blocks.len() {
        let p = lift8(&DMatrix::identity(8, 8), 1).kronecker(&dec.projector(idx));
        leak = leak.max((&sys.m * &p - &p * &sys.m).norm());
        projectors.push((dec.blocks[idx].j, p));
    }

    let basis = su_basis(n);
    let gens = vector_generators();
    let mut f = Vec::new();
    for i in 0..3 {
        let mut s8 = DMatrix::<f64>::zeros(8, 8);
        s8.view_mut((2, 2), (3, 3)).copy_from(&gens[i]);
        s8.view_mut((5, 5), (3, 3)).copy_from(&gens[i]);
        let adt = ad_matrix(&basis, &rho.triple.t[i]);
        f.push(DMatrix::<f64>::identity(8, 8).kronecker(&adt) + s8.kronecker(&DMatrix::identity(d, d)));
    }
    let diag = f.iter().map(|fi| (&sys0.m * fi - fi * &sys0.m).norm()).fold(0.0, f64::max);

    let (c, s) = (beta.cos(), beta.sin());
    let mut r = DMatrix::<f64>::zeros(8, 8);
    r[(0, 0)] = 1.0;
    r[(1, 1)] = 1.0;
    for i in 0..3 {
        r[(2 + i, 2 + i)] = s;
        r[(2 + i, 5 + i)] = c;
        r[(5 + i, 2 + i)] = c;
        r[(5 + i, 5 + i)] = -s;
    }
    let big_r = lift8(&r, d);
    let rotation_defect = (&sys.m * &big_r - &big_r * &sys0.m).norm() / norm;

    let (intertwiner_defect, intertwiner_dim) = solve_intertwiner(&sys.m, &sys0.m, d);

    let c_f = f.iter().fold(DMatrix::<f64>::zeros(8 * d, 8 * d), |acc, fi| acc - fi * fi);
    let mut blocks = Vec::new();
    for (j, p) in &projectors {
        for eta in [-1i32, 0, 1] {
            let jt = *j as f64 + eta as f64;
            if jt < 0.0 {
                continue;
            }
            let q_tot = eigenspace(&c_f, jt * (jt + 1.0), 1e-6);
            if q_tot.ncols() == 0 {
                continue;
            }
            // restrict to adjoint spin j
            let pq = p * &q_tot;
            let sym = pq.transpose() * &pq;
            let keep = eigenspace(&sym, 1.0, 1e-6);
            if keep.ncols() == 0 {
                continue;
            }
            let q = &q_tot * keep;
            let restricted = q.transpose() * &sys0.m * &q;
            let vals = real_spectrum(&restricted).0;
            blocks.push(BlockAssignment { j: *j, eta, roots: IndicialRootSet::from_values(vals, 0.0).roots });
        }
    }
    Ok(DecouplingReport {
        n,
        beta,
        spectrum_distance,
        adjoint_block_leak: leak,
        diagonal_action_defect: diag,
        rotation_defect,
        intertwiner_defect,
        intertwiner_dim,
        blocks,
    })
}

/// Null space of `r ↦ M_b (r ⊗ I) − (r ⊗ I) M_0` via the Gram matrix of the
/// 64 columns; returns the relative defect of a generic (random-combination)
/// member if it is invertible.
fn solve_intertwiner(mb: &DMatrix<f64>, m0: &DMatrix<f64>, d: usize) -> (Option<f64>, usize) {
    let cols: Vec<DMatrix<f64>> = (0..64)
        .map(|a| {
            let mut r = DMatrix::<f64>::zeros(8, 8);
            r[(a / 8, a % 8)] = 1.0;
            let big = lift8(&r, d);
            mb * &big - &big * m0
        })
        .collect();
    let gram = DMatrix::<f64>::from_fn(64, 64, |a, b| cols[a].dot(&cols[b]));
    let e = SymmetricEigen::new(gram);
    let scale = e.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let null: Vec<usize> = (0..64).filter(|&k| e.eigenvalues[k].abs() <= 1e-10 * scale.max(1.0)).collect();
    if null.is_empty() {
        return (None, 0);
    }
    let mut coef = 0.37;
    let mut v = nalgebra::DVector::<f64>::zeros(64);
    for &k in &null {
        v += e.eigenvectors.column(k) * coef;
        coef = (coef * 7.31 + 0.113) % 1.0 + 0.2;
    }
    let r = DMatrix::from_fn(8, 8, |i, j| v[i * 8 + j]);
    let sv = r.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 1e-8 * smax {
        return (None, null.len());
    }
    let big = lift8(&r, d);
    let defect = (mb * &big - &big * m0).norm() / (mb.norm() * big.norm());
    (Some(defect), null.len())
}

/// `{N, beta, roots, gap, pass}` record.
#[derive(Clone, Debug, Serialize)]
pub struct IndicialReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub roots: Vec<Root>,
    pub gap: (f64, f64),
    pub pass: bool,
}

/// Numeric roots checked against the closed form: equal snapped multisets,
/// no root in `(−1, 1)`, largest root `N`.
pub fn indicial_report(n: usize, beta: f64) -> Result<IndicialReport> {
    let numeric = compute_indicial_roots(&build_indicial_system(n, beta)?)?;
    let (closed, _) = roots_via_casimir(n)?;
    let same = numeric.snapped_multiset().is_some() && numeric.snapped_multiset() == closed.snapped_multiset();
    let gap_ok = numeric.gap.0 <= -1.0 + CLUSTER_TOL && numeric.gap.1 >= 1.0 - CLUSTER_TOL;
    let top = numeric.roots.last().and_then(|r| r.snapped) == Some(n as i64);
    Ok(IndicialReport { n, beta, gap: numeric.gap, pass: same && gap_ok && top, roots: numeric.roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::seeded_rng;
    use crate::lie::random_unitary;
    use std::f64::consts::PI;

    fn expected(n: usize) -> BTreeMap<i64, usize> {
        let mut m = BTreeMap::new();
        for j in 1..n as i64 {
            for (v, k) in [(j + 1, 4 * j), (j, 4 * j + 4)] {
                *m.entry(v).or_insert(0) += k as usize;
                *m.entry(-v).or_insert(0) += k as usize;
            }
        }
        m
    }

    #[test]
    fn dimensions_and_domain() {
        let s = build_indicial_system(3, PI / 4.0).unwrap();
        assert_eq!(s.m.nrows(), 64);
        assert!(build_indicial_system(1, 0.0).is_err());
        assert!(build_indicial_system(2, PI / 2.0).is_err());
    }

    #[test]
    fn roots_small_rank() {
        for beta in [0.0, PI / 6.0, 0.41] {
            let r = compute_indicial_roots(&build_indicial_system(2, beta).unwrap()).unwrap();
            let m = r.snapped_multiset().unwrap();
            assert_eq!(m.keys().copied().collect::<Vec<_>>(), vec![-2, -1, 1, 2]);
            assert_eq!(m, expected(2));
            let r3 = compute_indicial_roots(&build_indicial_system(3, beta).unwrap()).unwrap();
            assert_eq!(r3.snapped_multiset().unwrap().keys().copied().collect::<Vec<_>>(), vec![-3, -2, -1, 1, 2, 3]);
        }
    }

    #[test]
    fn closed_form_matches_numeric() {
        for n in 2..=5 {
            let (closed, _) = roots_via_casimir(n).unwrap();
            assert_eq!(closed.snapped_multiset().unwrap(), expected(n));
            assert_eq!(closed.total(), 8 * (n * n - 1));
            for beta in [0.0, PI / 6.0, PI / 4.0, PI / 3.0, 0.41] {
                let rep = indicial_report(n, beta).unwrap();
                assert!(rep.pass, "N={n} β={beta}: {rep:?}");
                assert!((rep.gap.0 + 1.0).abs() < 1e-7 && (rep.gap.1 - 1.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn conjugated_embedding_same_roots() {
        let rho = principal_embedding(3).unwrap();
        let g = random_unitary(3, &mut seeded_rng(9));
        let sys = build_indicial_system_for(rho.triple.conjugate(&g).unwrap(), 0.5).unwrap();
        assert_eq!(compute_indicial_roots(&sys).unwrap().snapped_multiset().unwrap(), expected(3));
    }

    #[test]
    fn spin_spin() {
        for j in 1..=4 {
            let r = spin_spin_eigencheck(j, 1e-8).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = spin_spin_eigencheck(1, 1e-8).unwrap();
        assert_eq!(r.eigenvalues.iter().map(|e| e.1).collect::<Vec<_>>(), vec![5, 3, 1]);
    }

    #[test]
    fn decoupling() {
        let r = decoupled_combination_check(2, PI / 5.0).unwrap();
        assert!(r.spectrum_distance < 1e-9, "{r:?}");
        assert!(r.adjoint_block_leak < 1e-12);
        assert!(r.intertwiner_defect.map_or(false, |x| x < 1e-12), "{r:?}");
        let r0 = decoupled_combination_check(3, 0.0).unwrap();
        assert!(r0.diagonal_action_defect < 1e-12, "{r0:?}");
        // every (j, η) block carries integer roots and the blocks exhaust the space
        let total: usize = r0.blocks.iter().flat_map(|b| b.roots.iter().map(|x| x.multiplicity)).sum();
        assert_eq!(total, 64);
        let (_, sources) = roots_via_casimir(3).unwrap();
        for b in &r0.blocks {
            let mut got: Vec<(i64, usize)> = b.roots.iter().map(|x| (x.snapped.unwrap(), x.multiplicity)).collect();
            let mut want: Vec<(i64, usize)> = sources
                .iter()
                .filter(|s| s.j == b.j && s.eta == b.eta)
                .map(|s| (s.value.round() as i64, s.multiplicity))
                .collect();
            got.sort();
            want.sort();
            assert_eq!(got, want, "block j={} η={}", b.j, b.eta);
        }
        let r4 = decoupled_combination_check(4, 0.7).unwrap();
        assert!(r4.intertwiner_defect.unwrap() < 1e-12);
        assert!(r4.rotation_defect > 1e-3);
    }
}
