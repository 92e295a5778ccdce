//! Dense Lie-algebra arithmetic for su(N) and sl(N,C): brackets, the trace
//! pairing, su(2) triples, the principal embedding and the spin decomposition
//! of the adjoint representation.
//!
//! Bracket convention: `[t_i, t_j] = ε_ijk t_k`. It is the one for which the
//! pole `X_i = t_i / y` solves `∂_y X + X × X = 0`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_dim, Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative tolerance for structural invariants.
pub const STRUCT_TOL: f64 = 1e-12;
/// Absolute tolerance for spectral classification.
pub const SPECTRAL_TOL: f64 = 1e-8;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Levi-Civita symbol on `{0, 1, 2}`.
pub fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The cyclic successors `(j, k)` of `i`, so that `ε_ijk = +1`.
pub fn cyc(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

pub fn br(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn zeros(n: usize) -> Mat {
    Mat::zeros(n, n)
}

pub fn scale(a: &Mat, s: f64) -> Mat {
    a * c(s)
}

/// Frobenius norm `sqrt(Σ |X_ab|²)`.
pub fn fnorm(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fnorm_sqr(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Complex conjugation of the compact real form: `X ↦ −Xᴴ`.
pub fn conj_g(z: &Mat) -> Mat {
    -z.adjoint()
}

/// Real part relative to the compact real form, `(Z − Zᴴ)/2`.
pub fn re_g(z: &Mat) -> Mat {
    (z - z.adjoint()) * c(0.5)
}

/// Imaginary part relative to the compact real form, `(Z + Zᴴ)/(2i)`.
pub fn im_g(z: &Mat) -> Mat {
    (z + z.adjoint()) * C64::new(0.0, -0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraTag {
    /// Anti-Hermitian and traceless (su(N)).
    Compact,
    /// Traceless (sl(N,C)).
    Complexified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    m: Mat,
    tag: AlgebraTag,
}

impl AlgebraElement {
    /// Validates the tag's invariants to `1e-12` of the Frobenius norm.
    pub fn new(m: Mat, tag: AlgebraTag) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument("algebra elements are square".into()));
        }
        let scale = fnorm(&m).max(1.0);
        if m.trace().norm() > STRUCT_TOL * scale {
            return Err(Error::InvalidArgument("element is not traceless".into()));
        }
        if tag == AlgebraTag::Compact && fnorm(&(&m + m.adjoint())) > STRUCT_TOL * scale {
            return Err(Error::InvalidArgument("compact element is not anti-Hermitian".into()));
        }
        Ok(Self { m, tag })
    }

    pub fn compact(m: Mat) -> Result<Self> {
        Self::new(m, AlgebraTag::Compact)
    }

    pub fn complexified(m: Mat) -> Result<Self> {
        Self::new(m, AlgebraTag::Complexified)
    }

    pub fn zero(n: usize, tag: AlgebraTag) -> Self {
        Self { m: zeros(n), tag }
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

fn joint_tag(a: AlgebraTag, b: AlgebraTag) -> AlgebraTag {
    if a == AlgebraTag::Compact && b == AlgebraTag::Compact {
        AlgebraTag::Compact
    } else {
        AlgebraTag::Complexified
    }
}

pub fn commutator(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_dim(x.dim(), y.dim())?;
    Ok(AlgebraElement {
        m: br(&x.m, &y.m),
        tag: joint_tag(x.tag, y.tag),
    })
}

/// `Tr(xy)`.
pub fn trace_pairing(x: &AlgebraElement, y: &AlgebraElement) -> Result<C64> {
    check_dim(x.dim(), y.dim())?;
    Ok((&x.m * &y.m).trace())
}

/// Ordered generators with `[t_i, t_j] = ε_ijk t_k`.
#[derive(Clone, Debug)]
pub struct SU2Triple {
    pub t: [Mat; 3],
}

impl SU2Triple {
    pub fn new(t: [Mat; 3]) -> Result<Self> {
        let tr = Self { t };
        let err = tr.bracket_defect();
        if err > STRUCT_TOL {
            return Err(Error::InvalidArgument(format!(
                "triple violates [t_i,t_j] = ε_ijk t_k (defect {err:e})"
            )));
        }
        Ok(tr)
    }

    pub fn dim(&self) -> usize {
        self.t[0].nrows()
    }

    /// Largest relative violation of the bracket relations.
    pub fn bracket_defect(&self) -> f64 {
        let scale = self.t.iter().map(fnorm).fold(1.0, f64::max);
        (0..3)
            .map(|i| {
                let (j, k) = cyc(i);
                fnorm(&(br(&self.t[j], &self.t[k]) - &self.t[i])) / scale
            })
            .fold(0.0, f64::max)
    }

    /// `−Σ t_i²`.
    pub fn casimir(&self) -> Mat {
        -(&self.t[0] * &self.t[0] + &self.t[1] * &self.t[1] + &self.t[2] * &self.t[2])
    }

    /// `g t_i g⁻¹` for an invertible `g`.
    pub fn conjugate(&self, g: &Mat) -> Result<Self> {
        let gi = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("conjugating matrix is singular".into()))?;
        Ok(Self {
            t: [0, 1, 2].map(|i| g * &self.t[i] * &gi),
        })
    }

    /// The associated standard sl(2,C) triple
    /// `(E, H, F) = (t₂ − i t₃, −2i t₁, −(t₂ + i t₃))`.
    pub fn sl2c(&self) -> SL2CTriple {
        let [t1, t2, t3] = &self.t;
        SL2CTriple {
            e: t2 - t3 * I,
            h: t1 * C64::new(0.0, -2.0),
            f: -(t2 + t3 * I),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SL2CTriple {
    pub e: Mat,
    pub h: Mat,
    pub f: Mat,
}

impl SL2CTriple {
    /// Largest relative violation of `[H,E]=2E, [H,F]=−2F, [E,F]=H`.
    pub fn relation_defect(&self) -> f64 {
        let s = fnorm(&self.h).max(1.0);
        let r1 = fnorm(&(br(&self.h, &self.e) - &self.e * c(2.0)));
        let r2 = fnorm(&(br(&self.h, &self.f) + &self.f * c(2.0)));
        let r3 = fnorm(&(br(&self.e, &self.f) - &self.h));
        r1.max(r2).max(r3) / s
    }

    pub fn e_is_nilpotent(&self) -> bool {
        let n = self.e.nrows();
        let mut p = Mat::identity(n, n);
        for _ in 0..n {
            p = &p * &self.e;
        }
        fnorm(&p) <= STRUCT_TOL * fnorm(&self.e).powi(n as i32).max(1.0)
    }

    /// Recovers the compact triple, assuming `E, H, F` came from one.
    pub fn compact(&self) -> SU2Triple {
        let t1 = &self.h * C64::new(0.0, 0.5);
        let t2 = (&self.e - &self.f) * c(0.5);
        let t3 = (&self.e + &self.f) * C64::new(0.0, 0.5);
        SU2Triple { t: [t1, t2, t3] }
    }
}

/// The `(2j+1)`-dimensional irreducible triple, `t_i = −i J_i`, with
/// `two_j = 2j`.
pub fn spin_irrep_triple(two_j: usize) -> Result<SU2Triple> {
    if two_j == 0 {
        return Err(Error::InvalidArgument("2j must be a positive integer".into()));
    }
    let d = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut jp = zeros(d);
    for k in 1..d {
        let m = j - k as f64;
        jp[(k - 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5);
    let jy = (&jp - &jm) * C64::new(0.0, -0.5);
    let jz = Mat::from_fn(d, d, |a, b| if a == b { c(j - a as f64) } else { c(0.0) });
    let mi = C64::new(0.0, -1.0);
    Ok(SU2Triple {
        t: [jx * mi, jy * mi, jz * mi],
    })
}

#[derive(Clone, Debug)]
pub struct PrincipalEmbedding {
    pub rank: usize,
    pub triple: SU2Triple,
}

pub fn principal_embedding(n: usize) -> Result<PrincipalEmbedding> {
    if n < 2 {
        return Err(Error::InvalidArgument("N must be >= 2".into()));
    }
    Ok(PrincipalEmbedding {
        rank: n,
        triple: spin_irrep_triple(n - 1)?,
    })
}

/// Frobenius-orthonormal real basis of su(N): `(E_ab − E_ba)/√2`,
/// `i(E_ab + E_ba)/√2` and the normalised diagonal Cartan elements.
pub fn su_basis(n: usize) -> Vec<Mat> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n - 1);
    for a in 0..n {
        for b in a + 1..n {
            let mut m = zeros(n);
            m[(a, b)] = c(r);
            m[(b, a)] = c(-r);
            out.push(m);
            let mut m = zeros(n);
            m[(a, b)] = C64::new(0.0, r);
            m[(b, a)] = C64::new(0.0, r);
            out.push(m);
        }
    }
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        let mut m = zeros(n);
        for a in 0..k {
            m[(a, a)] = C64::new(0.0, 1.0 / norm);
        }
        m[(k, k)] = C64::new(0.0, -(k as f64) / norm);
        out.push(m);
    }
    out
}

/// Real coordinates of `x` in `basis`: `Re Tr(b_aᴴ x)`. Exact for compact
/// `x` when the basis is [`su_basis`].
pub fn coords(basis: &[Mat], x: &Mat) -> Vec<f64> {
    basis.iter().map(|b| b.dotc(x).re).collect()
}

pub fn from_coords(basis: &[Mat], v: &[f64]) -> Mat {
    let mut out = zeros(basis[0].nrows());
    for (b, &x) in basis.iter().zip(v) {
        out += b * c(x);
    }
    out
}

/// Matrix of `ad(x)` on the real basis; antisymmetric for compact `x`.
pub fn ad_matrix(basis: &[Mat], x: &Mat) -> DMatrix<f64> {
    let d = basis.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (col, b) in basis.iter().enumerate() {
        let img = coords(basis, &br(x, b));
        for row in 0..d {
            m[(row, col)] = img[row];
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct SpinBlock {
    pub j: usize,
    pub basis: Vec<Mat>,
}

#[derive(Clone, Debug)]
pub struct AdjointDecomposition {
    pub blocks: Vec<SpinBlock>,
}

impl AdjointDecomposition {
    pub fn spins(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.j).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.basis.len()).sum()
    }

    /// Orthogonal projector (on [`su_basis`] coordinates) onto block `idx`.
    pub fn projector(&self, idx: usize) -> DMatrix<f64> {
        let n = self.blocks[idx].basis[0].nrows();
        let basis = su_basis(n);
        let d = basis.len();
        let mut p = DMatrix::<f64>::zeros(d, d);
        for v in &self.blocks[idx].basis {
            let x = nalgebra::DVector::from_vec(coords(&basis, v));
            p += &x * x.transpose();
        }
        p
    }
}

/// Spin decomposition of `su(N) ⊗ C` under the adjoint action of the
/// embedded triple, via the Casimir `−Σ ad(t_i)²`.
pub fn decompose_adjoint(rho: &PrincipalEmbedding) -> Result<AdjointDecomposition> {
    let basis = su_basis(rho.rank);
    let d = basis.len();
    let mut cas = DMatrix::<f64>::zeros(d, d);
    for t in &rho.triple.t {
        let a = ad_matrix(&basis, t);
        cas -= &a * &a;
    }
    let eig = SymmetricEigen::new(cas);
    let mut tagged: Vec<(usize, usize)> = Vec::with_capacity(d);
    for (col, &lam) in eig.eigenvalues.iter().enumerate() {
        // j(j+1) = λ  ⇒  j = (−1 + √(1+4λ))/2
        let jf = (-1.0 + (1.0 + 4.0 * lam.max(0.0)).sqrt()) / 2.0;
        let j = jf.round();
        if j < 1.0 || (lam - j * (j + 1.0)).abs() > SPECTRAL_TOL {
            return Err(Error::NonPrincipal(lam));
        }
        tagged.push((j as usize, col));
    }
    tagged.sort();
    let mut blocks: Vec<SpinBlock> = Vec::new();
    for (j, col) in tagged {
        let v = from_coords(&basis, eig.eigenvectors.column(col).as_slice());
        match blocks.last_mut() {
            Some(b) if b.j == j => b.basis.push(v),
            _ => blocks.push(SpinBlock { j, basis: vec![v] }),
        }
    }
    Ok(AdjointDecomposition { blocks })
}

/// Random compact element with standard-normal coordinates.
pub fn random_compact<R: Rng>(n: usize, rng: &mut R) -> Mat {
    let basis = su_basis(n);
    let v: Vec<f64> = (0..basis.len()).map(|_| std_normal(rng)).collect();
    from_coords(&basis, &v)
}

/// Random unitary from the QR factorisation of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| C64::new(std_normal(rng), std_normal(rng)));
    g.qr().q()
}

pub(crate) fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_triple_brackets() {
        let t = spin_irrep_triple(1).unwrap();
        assert!(t.bracket_defect() < 1e-15);
        let x = AlgebraElement::compact(t.t[0].clone()).unwrap();
        let y = AlgebraElement::compact(t.t[1].clone()).unwrap();
        let z = commutator(&x, &y).unwrap();
        assert!(fnorm(&(z.matrix() - &t.t[2])) < 1e-15);
        assert!((trace_pairing(&x, &x).unwrap() - c(-0.5)).norm() < 1e-15);
        assert!(trace_pairing(&x, &y).unwrap().norm() < 1e-15);
        assert!(fnorm(commutator(&x, &x).unwrap().matrix()) == 0.0);
    }

    #[test]
    fn casimir_of_irreps() {
        for two_j in 1..=8 {
            let t = spin_irrep_triple(two_j).unwrap();
            let j = two_j as f64 / 2.0;
            let d = two_j + 1;
            let target = Mat::identity(d, d) * c(j * (j + 1.0));
            assert!(fnorm(&(t.casimir() - target)) < 1e-12 * (j * (j + 1.0)));
            assert!(t.bracket_defect() < 1e-12);
        }
        let t = spin_irrep_triple(3).unwrap();
        assert!((t.casimir()[(0, 0)].re - 3.75).abs() < 1e-12);
    }

    #[test]
    fn sl2c_relations() {
        for two_j in 1..6 {
            let s = spin_irrep_triple(two_j).unwrap().sl2c();
            assert!(s.relation_defect() < 1e-12);
            assert!(s.e_is_nilpotent());
            let back = s.compact();
            assert!(back.bracket_defect() < 1e-12);
        }
    }

    #[test]
    fn principal_spins() {
        for n in 2..=6 {
            let dec = decompose_adjoint(&principal_embedding(n).unwrap()).unwrap();
            assert_eq!(dec.spins(), (1..n).collect::<Vec<_>>());
            for b in &dec.blocks {
                assert_eq!(b.basis.len(), 2 * b.j + 1);
            }
            assert_eq!(dec.total_dim(), n * n - 1);
        }
        assert!(principal_embedding(1).is_err());
    }

    #[test]
    fn blocks_are_trace_orthogonal() {
        let dec = decompose_adjoint(&principal_embedding(4).unwrap()).unwrap();
        for (a, ba) in dec.blocks.iter().enumerate() {
            for bb in dec.blocks.iter().skip(a + 1) {
                for x in &ba.basis {
                    for y in &bb.basis {
                        assert!((x * y).trace().norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn reducible_triple_is_rejected() {
        // spin 1/2 ⊕ trivial inside su(3): spins 1, 1/2, 1/2, 0.
        let t = spin_irrep_triple(1).unwrap();
        let emb = t.t.clone().map(|m| {
            let mut big = zeros(3);
            big.view_mut((0, 0), (2, 2)).copy_from(&m);
            big
        });
        let rho = PrincipalEmbedding {
            rank: 3,
            triple: SU2Triple::new(emb).unwrap(),
        };
        assert!(matches!(decompose_adjoint(&rho), Err(Error::NonPrincipal(_))));
    }

    #[test]
    fn jacobi_on_random_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_compact(3, &mut rng);
            let y = random_compact(3, &mut rng);
            let z = random_compact(3, &mut rng);
            let jac = br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y));
            let s = fnorm(&x) * fnorm(&y) * fnorm(&z);
            assert!(fnorm(&jac) < 1e-12 * s);
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = su_basis(4);
        let x = random_compact(4, &mut rng);
        let back = from_coords(&basis, &coords(&basis, &x));
        assert!(fnorm(&(back - &x)) < 1e-13);
    }

    #[test]
    fn element_validation() {
        let mut m = zeros(2);
        m[(0, 0)] = c(1.0);
        assert!(AlgebraElement::complexified(m.clone()).is_err());
        m[(1, 1)] = c(-1.0);
        assert!(AlgebraElement::complexified(m.clone()).is_ok());
        assert!(AlgebraElement::compact(m).is_err());
    }
}
