//! Cross products on `Im C`, `Im H`, `Im O` lifted to algebra-valued vectors,
//! and the β-deformed octonionic product `×_β`.
//!
//! For `k = 7` the components are named `(X₁, X₂, X₃, Y, Z₁, Z₂, Z₃)` and sit
//! on the basis `(e₁, e₂, e₃, h, f₁, f₂, f₃)`.

use crate::error::{check_dim, Error, Result};
use crate::lie::{br, c, eps, zeros, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisionAlgebra {
    C,
    H,
    O,
}

impl DivisionAlgebra {
    /// Dimension of the imaginary part.
    pub fn k(self) -> usize {
        match self {
            DivisionAlgebra::C => 1,
            DivisionAlgebra::H => 3,
            DivisionAlgebra::O => 7,
        }
    }
}

/// Positive triples of the octonion table (1-based).
pub const OCTONION_TRIPLES: [[usize; 3]; 7] = [
    [1, 2, 3],
    [1, 4, 5],
    [1, 7, 6],
    [2, 4, 6],
    [2, 5, 7],
    [3, 4, 7],
    [3, 6, 5],
];

/// Totally antisymmetric structure constants `f_ijk` (0-based storage).
#[derive(Clone, Debug)]
pub struct StructureTable {
    pub algebra: DivisionAlgebra,
    k: usize,
    f: Vec<f64>,
}

impl StructureTable {
    pub fn new(algebra: DivisionAlgebra) -> Self {
        let k = algebra.k();
        let mut t = Self {
            algebra,
            k,
            f: vec![0.0; k * k * k],
        };
        match algebra {
            DivisionAlgebra::C => {}
            DivisionAlgebra::H => t.set_antisymmetric(0, 1, 2),
            DivisionAlgebra::O => {
                for [a, b, cc] in OCTONION_TRIPLES {
                    t.set_antisymmetric(a - 1, b - 1, cc - 1);
                }
            }
        }
        t
    }

    fn set_antisymmetric(&mut self, a: usize, b: usize, cc: usize) {
        let perms = [
            (a, b, cc, 1.0),
            (b, cc, a, 1.0),
            (cc, a, b, 1.0),
            (b, a, cc, -1.0),
            (a, cc, b, -1.0),
            (cc, b, a, -1.0),
        ];
        for (i, j, l, s) in perms {
            let idx = self.idx(i, j, l);
            self.f[idx] = s;
        }
    }

    fn idx(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.k + j) * self.k + l
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn f(&self, i: usize, j: usize, l: usize) -> f64 {
        self.f[self.idx(i, j, l)]
    }
}

/// `k` algebra-valued components.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVector {
    pub comps: Vec<Mat>,
}

impl AlgebraVector {
    pub fn new(comps: Vec<Mat>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidArgument("empty algebra vector".into()));
        }
        let n = comps[0].nrows();
        for m in &comps {
            check_dim(n, m.nrows())?;
        }
        Ok(Self { comps })
    }

    pub fn zeros(k: usize, n: usize) -> Self {
        Self {
            comps: vec![zeros(n); k],
        }
    }

    pub fn k(&self) -> usize {
        self.comps.len()
    }

    pub fn n(&self) -> usize {
        self.comps[0].nrows()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comps: self.comps.iter().map(|m| m * c(s)).collect(),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            *a += b * c(s);
        }
    }

    pub fn norm(&self) -> f64 {
        self.comps
            .iter()
            .map(crate::lie::fnorm_sqr)
            .sum::<f64>()
            .sqrt()
    }
}

/// Symmetric polarisation of the quadratic form
/// `(X × X)_i = Σ_{j<k} f_ijk [X_j, X_k]`:
/// `(X × W)_i = ½ Σ_{j,k} f_ijk [X_j, W_k]`.
pub fn cross(table: &StructureTable, x: &AlgebraVector, w: &AlgebraVector) -> Result<AlgebraVector> {
    check_dim(table.k(), x.k())?;
    check_dim(table.k(), w.k())?;
    check_dim(x.n(), w.n())?;
    let k = table.k();
    let mut out = AlgebraVector::zeros(k, x.n());
    for j in 0..k {
        for l in 0..k {
            if j == l {
                continue;
            }
            let b = br(&x.comps[j], &w.comps[l]);
            for i in 0..k {
                let f = table.f(i, j, l);
                if f != 0.0 {
                    out.comps[i] += &b * c(0.5 * f);
                }
            }
        }
    }
    Ok(out)
}

/// Coefficients (in the 7-basis) of the deformed product of basis vectors
/// `a ×_β b`.
///
/// The deformation right-multiplies products landing in `span(e, f)` by
/// `cos β + sin β h`:
///
/// * `e_i ×_β e_j = ε_ijk (cos β e_k + sin β f_k)`
/// * `f_i ×_β f_j = −ε_ijk (cos β e_k + sin β f_k)`
/// * `e_i ×_β f_j = −ε_ijk (cos β f_k − sin β e_k)` for `i ≠ j`
///
/// while `e_i × f_i = −h` and every product involving `h` are undeformed.
pub fn twisted_basis_product(beta: f64, a: usize, b: usize) -> [f64; 7] {
    let (cb, sb) = (beta.cos(), beta.sin());
    let mut out = [0.0; 7];
    let block = |x: usize| -> Option<(bool, usize)> {
        match x {
            0..=2 => Some((true, x)),
            4..=6 => Some((false, x - 4)),
            _ => None,
        }
    };
    match (block(a), block(b)) {
        (Some((true, i)), Some((true, j))) => {
            for k in 0..3 {
                let e = eps(i, j, k);
                out[k] += e * cb;
                out[4 + k] += e * sb;
            }
        }
        (Some((false, i)), Some((false, j))) => {
            for k in 0..3 {
                let e = eps(i, j, k);
                out[k] -= e * cb;
                out[4 + k] -= e * sb;
            }
        }
        (Some((ea, i)), Some((_, j))) if i != j => {
            // e_i × f_j ; f_j × e_i = −e_i × f_j
            let s = if ea { 1.0 } else { -1.0 };
            let (i, j) = if ea { (i, j) } else { (j, i) };
            for k in 0..3 {
                let e = eps(i, j, k);
                out[4 + k] -= s * e * cb;
                out[k] += s * e * sb;
            }
        }
        _ => {
            let t = StructureTable::new(DivisionAlgebra::O);
            for (i, o) in out.iter_mut().enumerate() {
                *o = t.f(i, a, b);
            }
        }
    }
    out
}

/// `(X ×_β W)` as the symmetric polarisation `½ Σ_{a,b} (e_a ×_β e_b) [X_a, W_b]`.
pub fn cross_twisted(beta: f64, x: &AlgebraVector, w: &AlgebraVector) -> Result<AlgebraVector> {
    if x.k() != 7 || w.k() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: if x.k() != 7 { x.k() } else { w.k() },
        });
    }
    check_dim(x.n(), w.n())?;
    let mut out = AlgebraVector::zeros(7, x.n());
    for a in 0..7 {
        for b in 0..7 {
            if a == b {
                continue;
            }
            let coef = twisted_basis_product(beta, a, b);
            if coef.iter().all(|&v| v == 0.0) {
                continue;
            }
            let m = br(&x.comps[a], &w.comps[b]);
            for (i, &f) in coef.iter().enumerate() {
                if f != 0.0 {
                    out.comps[i] += &m * c(0.5 * f);
                }
            }
        }
    }
    Ok(out)
}

/// Component-wise expansion of `X ×_β X`, written out term by term. Used as an
/// independent check on [`cross_twisted`].
pub fn twisted_square_expanded(beta: f64, x: &AlgebraVector) -> AlgebraVector {
    let (cb, sb) = (beta.cos(), beta.sin());
    let xs = &x.comps[0..3];
    let y = &x.comps[3];
    let zs = &x.comps[4..7];
    let n = x.n();
    let mut out = AlgebraVector::zeros(7, n);
    for i in 0..3 {
        let (j, k) = crate::lie::cyc(i);
        let xx = br(&xs[j], &xs[k]) - br(&zs[j], &zs[k]);
        let xz = br(&xs[j], &zs[k]) - br(&xs[k], &zs[j]);
        out.comps[i] = br(y, &zs[i]) + &xx * c(cb) + &xz * c(sb);
        out.comps[4 + i] = -br(y, &xs[i]) + &xx * c(sb) - &xz * c(cb);
    }
    let mut yy = zeros(n);
    for i in 0..3 {
        yy -= br(&xs[i], &zs[i]);
    }
    out.comps[3] = yy;
    out
}
