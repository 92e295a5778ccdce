//! Lie-algebra-valued fields on rectangular grids: derivative backends,
//! curvature, two-form algebra (Hodge star, self-dual projection, the `T_η`
//! splitting in five dimensions), adapted frames and CSV snapshots.
//!
//! Fields are plain sampled arrays differentiated with finite differences or
//! FFTs; no link variables. Identities between continuum operators are
//! checked with identical stencils on both sides.

use std::f64::consts::TAU;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_dim, Error, Result};
use crate::lie::{br, c, fnorm, su_basis, zeros, Mat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Clamped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub n: usize,
    pub h: f64,
    pub x0: f64,
    pub boundary: Boundary,
}

impl Axis {
    pub fn periodic(name: &str, n: usize, length: f64) -> Self {
        Self {
            name: name.into(),
            n,
            h: length / n as f64,
            x0: 0.0,
            boundary: Boundary::Periodic,
        }
    }

    pub fn clamped(name: &str, n: usize, x0: f64, x1: f64) -> Self {
        Self {
            name: name.into(),
            n,
            h: (x1 - x0) / (n - 1).max(1) as f64,
            x0,
            boundary: Boundary::Clamped,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.x0 + self.h * i as f64
    }

    pub fn length(&self) -> f64 {
        self.h * self.n as f64
    }
}

/// Row-major rectangular grid (last axis fastest), dimension 1 to 5.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<Axis>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 5 {
            return Err(Error::Grid(format!("dimension {} not in 1..=5", axes.len())));
        }
        for a in &axes {
            if a.n < 4 {
                return Err(Error::Grid(format!("axis {} has extent {} < 4", a.name, a.n)));
            }
            if !(a.h > 0.0) || !a.h.is_finite() {
                return Err(Error::Grid(format!("axis {} has spacing {}", a.name, a.h)));
            }
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].n;
        }
        Ok(Self { axes, strides })
    }

    /// Periodic grid with `n` points per named axis and period `length`.
    pub fn periodic(names: &[&str], n: usize, length: f64) -> Result<Self> {
        Self::new(names.iter().map(|s| Axis::periodic(s, n, length)).collect())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unravel(&self, mut site: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in 0..self.dim() {
            out[d] = site / self.strides[d];
            site %= self.strides[d];
        }
        out
    }

    pub fn coords(&self, site: usize) -> Vec<f64> {
        self.unravel(site)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn all_periodic(&self) -> bool {
        self.axes.iter().all(|a| a.boundary == Boundary::Periodic)
    }

    /// Quadrature weight: Riemann sum on periodic axes, trapezoid on clamped.
    pub fn weight(&self, site: usize) -> f64 {
        self.unravel(site)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| match a.boundary {
                Boundary::Periodic => a.h,
                Boundary::Clamped if i == 0 || i + 1 == a.n => 0.5 * a.h,
                Boundary::Clamped => a.h,
            })
            .product()
    }

    pub fn integrate(&self, density: &[f64]) -> f64 {
        density
            .iter()
            .enumerate()
            .map(|(s, &v)| v * self.weight(s))
            .sum()
    }

    /// Prepends constant axes (used when lifting reduced fields).
    pub fn with_leading(&self, extra: Vec<Axis>) -> Result<Self> {
        let mut axes = extra;
        axes.extend(self.axes.iter().cloned());
        Self::new(axes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Central2,
    Central4,
    Spectral,
}

impl Backend {
    /// Half-width of the stencil (interior mask depth on clamped axes).
    pub fn reach(self) -> usize {
        match self {
            Backend::Central2 => 1,
            Backend::Central4 => 2,
            Backend::Spectral => 0,
        }
    }

    pub fn nominal_order(self) -> Option<f64> {
        match self {
            Backend::Central2 => Some(2.0),
            Backend::Central4 => Some(4.0),
            Backend::Spectral => None,
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central2" => Ok(Backend::Central2),
            "central4" => Ok(Backend::Central4),
            "spectral" => Ok(Backend::Spectral),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s}"))),
        }
    }
}

/// Per-site validity of a computed quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask(pub Vec<bool>);

impl Mask {
    pub fn full(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn and(&self, other: &Mask) -> Mask {
        Mask(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

/// One algebra-valued component sampled on every grid site.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub n: usize,
    pub data: Vec<Mat>,
}

impl Field {
    pub fn zeros(grid: &Grid, n: usize) -> Self {
        Self {
            n,
            data: vec![zeros(n); grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, n: usize, f: impl Fn(&[f64]) -> Mat + Sync + Send) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|s| f(&grid.coords(s)))
            .collect();
        Self { n, data }
    }

    pub fn map(&self, f: impl Fn(&Mat) -> Mat + Sync + Send) -> Self {
        Self {
            n: self.n,
            data: self.data.par_iter().map(f).collect(),
        }
    }

    pub fn zip(&self, other: &Field, f: impl Fn(&Mat, &Mat) -> Mat + Sync + Send) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .par_iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|m| m * c(s))
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(fnorm).fold(0.0, f64::max)
    }

    pub fn conjugate(&self, g: &Mat, g_inv: &Mat) -> Self {
        self.map(|m| g * m * g_inv)
    }
}

/// Random smooth compact field: for every basis element a sum of three
/// Fourier modes with wavenumbers in `[-modes, modes]` on each axis.
pub fn random_smooth_field(grid: &Grid, n: usize, modes: i64, amp: f64, rng: &mut ChaCha8Rng) -> Field {
    let basis = su_basis(n);
    let d = grid.dim();
    let mut terms: Vec<(usize, Vec<f64>, f64, f64)> = Vec::new();
    for b in 0..basis.len() {
        for _ in 0..3 {
            let k: Vec<f64> = (0..d)
                .map(|ax| TAU * rng.random_range(-modes..=modes) as f64 / grid.axes[ax].length())
                .collect();
            let phase = rng.random_range(0.0..TAU);
            let a = amp * crate::lie::std_normal(rng);
            terms.push((b, k, phase, a));
        }
    }
    Field::from_fn(grid, n, |x| {
        let mut m = zeros(n);
        for (b, k, ph, a) in &terms {
            let arg: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + ph;
            m += &basis[*b] * c(a * arg.cos());
        }
        m
    })
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn axis_lines(grid: &Grid, axis: usize) -> Vec<usize> {
    // starting sites of every line parallel to `axis`
    (0..grid.len())
        .filter(|&s| grid.unravel(s)[axis] == 0)
        .collect()
}

fn spectral_plan(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = FftPlanner::new();
    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
}

/// `∂_axis f` with the given backend. On clamped axes the finite-difference
/// stencils are evaluated at interior sites only; the mask marks them.
pub fn derivative(grid: &Grid, f: &Field, axis: usize, backend: Backend) -> Result<(Field, Mask)> {
    if axis >= grid.dim() {
        return Err(Error::Grid(format!("axis {axis} out of range")));
    }
    check_dim(grid.len(), f.data.len())?;
    let ax = &grid.axes[axis];
    let n_ax = ax.n;
    let periodic = ax.boundary == Boundary::Periodic;
    if backend == Backend::Spectral && !periodic {
        return Err(Error::Grid(format!("spectral derivative needs a periodic axis ({})", ax.name)));
    }
    let stride = grid.stride(axis);
    let h = ax.h;
    let n = f.n;
    let starts = axis_lines(grid, axis);
    let plan = (backend == Backend::Spectral).then(|| spectral_plan(n_ax));
    let wavenum: Vec<f64> = (0..n_ax)
        .map(|m| {
            let m = m as i64;
            let half = n_ax as i64 / 2;
            if n_ax % 2 == 0 && m == half {
                0.0
            } else if m <= half {
                TAU * m as f64 / ax.length()
            } else {
                TAU * (m - n_ax as i64) as f64 / ax.length()
            }
        })
        .collect();
    let reach = backend.reach();

    let lines: Vec<Vec<Mat>> = starts
        .par_iter()
        .map(|&s0| {
            let line: Vec<&Mat> = (0..n_ax).map(|i| &f.data[s0 + i * stride]).collect();
            let at = |i: isize| -> &Mat {
                let m = n_ax as isize;
                line[(((i % m) + m) % m) as usize]
            };
            match backend {
                Backend::Spectral => {
                    let (fwd, inv) = plan.as_ref().unwrap();
                    let mut out = vec![zeros(n); n_ax];
                    let mut buf = vec![C64::new(0.0, 0.0); n_ax];
                    for r in 0..n {
                        for cc in 0..n {
                            for i in 0..n_ax {
                                buf[i] = line[i][(r, cc)];
                            }
                            fwd.process(&mut buf);
                            for (b, k) in buf.iter_mut().zip(&wavenum) {
                                *b *= C64::new(0.0, *k / n_ax as f64);
                            }
                            inv.process(&mut buf);
                            for i in 0..n_ax {
                                out[i][(r, cc)] = buf[i];
                            }
                        }
                    }
                    out
                }
                Backend::Central2 | Backend::Central4 => (0..n_ax)
                    .map(|i| {
                        if !periodic && (i < reach || i + reach >= n_ax) {
                            return zeros(n);
                        }
                        let i = i as isize;
                        if backend == Backend::Central2 {
                            (at(i + 1) - at(i - 1)) * c(0.5 / h)
                        } else {
                            (at(i - 2) - at(i + 2) + (at(i + 1) - at(i - 1)) * c(8.0)) * c(1.0 / (12.0 * h))
                        }
                    })
                    .collect(),
            }
        })
        .collect();

    let mut out = Field::zeros(grid, n);
    for (s0, line) in starts.iter().zip(lines) {
        for (i, m) in line.into_iter().enumerate() {
            out.data[s0 + i * stride] = m;
        }
    }
    let mask = if periodic {
        Mask::full(grid.len())
    } else {
        Mask(
            (0..grid.len())
                .map(|s| {
                    let i = grid.unravel(s)[axis];
                    i >= reach && i + reach < n_ax
                })
                .collect(),
        )
    };
    Ok((out, mask))
}

/// Values and first derivatives of a list of components at a point.
pub trait Local {
    fn v(&self, comp: usize) -> &Mat;
    /// `∂_axis` of component `comp`.
    fn d(&self, comp: usize, axis: usize) -> &Mat;
}

/// Components sampled on a grid together with all their first derivatives.
#[derive(Clone, Debug)]
pub struct Sampled {
    pub vals: Vec<Field>,
    pub grads: Vec<Vec<Field>>,
    pub mask: Mask,
}

pub fn sample(grid: &Grid, comps: &[&Field], backend: Backend) -> Result<Sampled> {
    let mut mask = Mask::full(grid.len());
    let mut grads = Vec::with_capacity(comps.len());
    for f in comps {
        let mut g = Vec::with_capacity(grid.dim());
        for ax in 0..grid.dim() {
            let (d, m) = derivative(grid, f, ax, backend)?;
            mask = mask.and(&m);
            g.push(d);
        }
        grads.push(g);
    }
    Ok(Sampled {
        vals: comps.iter().map(|f| (*f).clone()).collect(),
        grads,
        mask,
    })
}

impl Sampled {
    pub fn at(&self, site: usize) -> SiteView<'_> {
        SiteView { s: self, site }
    }
}

pub struct SiteView<'a> {
    s: &'a Sampled,
    site: usize,
}

impl Local for SiteView<'_> {
    fn v(&self, comp: usize) -> &Mat {
        &self.s.vals[comp].data[self.site]
    }
    fn d(&self, comp: usize, axis: usize) -> &Mat {
        &self.s.grads[comp][axis].data[self.site]
    }
}

/// Owned point data, e.g. from finite differences of an analytic field.
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: Vec<Mat>,
    /// `d[comp][axis]`
    pub d: Vec<Vec<Mat>>,
}

impl Local for Jet {
    fn v(&self, comp: usize) -> &Mat {
        &self.v[comp]
    }
    fn d(&self, comp: usize, axis: usize) -> &Mat {
        &self.d[comp][axis]
    }
}

/// Values at `x` and central finite-difference derivatives of an analytic
/// field `f(x) -> components`, with step `h` and order 2 or 4.
pub fn analytic_jet(f: &dyn Fn(&[f64]) -> Vec<Mat>, x: &[f64], h: f64, backend: Backend) -> Result<Jet> {
    let v = f(x);
    let mut d: Vec<Vec<Mat>> = v.iter().map(|_| Vec::with_capacity(x.len())).collect();
    for ax in 0..x.len() {
        let shifted = |k: f64| {
            let mut y = x.to_vec();
            y[ax] += k * h;
            f(&y)
        };
        let (p1, m1) = (shifted(1.0), shifted(-1.0));
        match backend {
            Backend::Central2 => {
                for (comp, dd) in d.iter_mut().enumerate() {
                    dd.push((&p1[comp] - &m1[comp]) * c(0.5 / h));
                }
            }
            Backend::Central4 => {
                let (p2, m2) = (shifted(2.0), shifted(-2.0));
                for (comp, dd) in d.iter_mut().enumerate() {
                    dd.push(
                        (&m2[comp] - &p2[comp] + (&p1[comp] - &m1[comp]) * c(8.0)) * c(1.0 / (12.0 * h)),
                    );
                }
            }
            Backend::Spectral => {
                return Err(Error::InvalidArgument("analytic fields use finite differences".into()))
            }
        }
    }
    Ok(Jet { v, d })
}

/// `F_mn = ∂_m A_n − ∂_n A_m + [A_m, A_n]` from point data, with the
/// connection components stored at `a0 .. a0 + dim`.
pub fn curvature_at(l: &impl Local, a0: usize, m: usize, n: usize) -> Mat {
    l.d(a0 + n, m) - l.d(a0 + m, n) + br(l.v(a0 + m), l.v(a0 + n))
}

/// `∇_m s = ∂_m s + [A_m, s]`.
pub fn cov_at(l: &impl Local, a0: usize, s: usize, m: usize) -> Mat {
    l.d(s, m) + br(l.v(a0 + m), l.v(s))
}

/// Curvature of a sampled connection; `out[m][n]` for all ordered pairs.
pub fn curvature(grid: &Grid, a: &[Field], backend: Backend) -> Result<(Vec<Vec<Field>>, Mask)> {
    check_dim(grid.dim(), a.len())?;
    let refs: Vec<&Field> = a.iter().collect();
    let s = sample(grid, &refs, backend)?;
    let d = grid.dim();
    let nmat = a[0].n;
    let mut out = vec![vec![Field::zeros(grid, nmat); d]; d];
    for (m, row) in out.iter_mut().enumerate() {
        for (n, f) in row.iter_mut().enumerate() {
            f.data = (0..grid.len())
                .into_par_iter()
                .map(|site| curvature_at(&s.at(site), 0, m, n))
                .collect();
        }
    }
    Ok((out, s.mask))
}

pub fn covariant_derivative(grid: &Grid, a: &[Field], s: &Field, axis: usize, backend: Backend) -> Result<(Field, Mask)> {
    check_dim(grid.dim(), a.len())?;
    let (ds, mask) = derivative(grid, s, axis, backend)?;
    let out = ds.zip(&a[axis].zip(s, br), |x, y| x + y);
    Ok((out, mask))
}

/// Symmetric polarisation of `σ(B,B)_i = [B_j, B_k]` (cyclic `i,j,k`).
pub fn sigma_point(b: &[Mat; 3], cc: &[Mat; 3]) -> [Mat; 3] {
    [0, 1, 2].map(|i| {
        let (j, k) = crate::lie::cyc(i);
        (br(&b[j], &cc[k]) + br(&cc[j], &b[k])) * c(0.5)
    })
}

pub fn sigma(b: &[Field; 3], cc: &[Field; 3]) -> Result<[Field; 3]> {
    for f in b.iter().chain(cc.iter()) {
        check_dim(b[0].data.len(), f.data.len())?;
    }
    let len = b[0].data.len();
    let pts: Vec<[Mat; 3]> = (0..len)
        .into_par_iter()
        .map(|s| {
            sigma_point(
                &[0, 1, 2].map(|i| b[i].data[s].clone()),
                &[0, 1, 2].map(|i| cc[i].data[s].clone()),
            )
        })
        .collect();
    Ok([0, 1, 2].map(|i| Field {
        n: b[0].n,
        data: pts.iter().map(|p| p[i].clone()).collect(),
    }))
}

/// Index pairs `(a, b)`, `a < b`, in lexicographic order.
pub fn pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            out.push((a, b));
        }
    }
    out
}

pub fn pair_index(dim: usize, a: usize, b: usize) -> (usize, f64) {
    let (lo, hi, s) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let idx = pairs(dim).iter().position(|&p| p == (lo, hi)).expect("a != b");
    (idx, s)
}

/// Sign of the permutation `p` of `0..p.len()`, 0 if not a permutation.
pub fn perm_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return 0.0;
        }
        seen[x] = true;
    }
    let mut s = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// Two-form with components `ω_ab`, `a < b`.
#[derive(Clone, Debug)]
pub struct TwoForm {
    pub dim: usize,
    pub comps: Vec<Field>,
}

impl TwoForm {
    pub fn new(dim: usize, comps: Vec<Field>) -> Result<Self> {
        check_dim(dim * (dim - 1) / 2, comps.len())?;
        Ok(Self { dim, comps })
    }

    pub fn zeros(grid: &Grid, n: usize, dim: usize) -> Self {
        Self {
            dim,
            comps: vec![Field::zeros(grid, n); dim * (dim - 1) / 2],
        }
    }

    /// Applies a real linear map on the component index.
    pub fn apply(&self, m: &[Vec<f64>]) -> TwoForm {
        let k = self.comps.len();
        let len = self.comps[0].data.len();
        let n = self.comps[0].n;
        let comps = (0..k)
            .map(|r| {
                let data = (0..len)
                    .into_par_iter()
                    .map(|s| {
                        let mut acc = zeros(n);
                        for (col, f) in self.comps.iter().enumerate() {
                            if m[r][col] != 0.0 {
                                acc += &f.data[s] * c(m[r][col]);
                            }
                        }
                        acc
                    })
                    .collect();
                Field { n, data }
            })
            .collect();
        TwoForm { dim: self.dim, comps }
    }

    pub fn norm_sqr_at(&self, site: usize) -> f64 {
        self.comps.iter().map(|f| crate::lie::fnorm_sqr(&f.data[site])).sum()
    }
}

/// Matrix of the Hodge star on two-forms in 4D (pair ordering of [`pairs`]),
/// `⋆e_ab = sgn(a,b,c,d) e_cd`, times `orientation`.
pub fn hodge4(orientation: f64) -> Vec<Vec<f64>> {
    let ps = pairs(4);
    let mut m = vec![vec![0.0; 6]; 6];
    for (col, &(a, b)) in ps.iter().enumerate() {
        let rest: Vec<usize> = (0..4).filter(|x| *x != a && *x != b).collect();
        let s = perm_sign(&[a, b, rest[0], rest[1]]);
        let (row, _) = pair_index(4, rest[0], rest[1]);
        m[row][col] = orientation * s;
    }
    m
}

/// `(ω⁺, ω⁻)` with `⋆ω^± = ±ω^±`, `⋆` oriented by `orientation = ±1`.
pub fn project_self_dual(omega: &TwoForm, orientation: f64) -> Result<(TwoForm, TwoForm)> {
    if omega.dim != 4 {
        return Err(Error::Grid(format!("self-dual projection needs 4D, got {}", omega.dim)));
    }
    let st = hodge4(orientation);
    let plus: Vec<Vec<f64>> = (0..6)
        .map(|r| (0..6).map(|cc| 0.5 * (f64::from(r == cc) + st[r][cc])).collect())
        .collect();
    let minus: Vec<Vec<f64>> = (0..6)
        .map(|r| (0..6).map(|cc| 0.5 * (f64::from(r == cc) - st[r][cc])).collect())
        .collect();
    Ok((omega.apply(&plus), omega.apply(&minus)))
}

/// Unit vector field with constant direction cosines.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldSpec {
    pub cosines: Vec<f64>,
}

impl VectorFieldSpec {
    pub fn new(cosines: Vec<f64>) -> Result<Self> {
        let n2: f64 = cosines.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidArgument(format!("vector field is not unit (|v|² = {n2})")));
        }
        Ok(Self { cosines })
    }

    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Self { cosines: v }
    }
}

/// Matrix of `T_η: ω ↦ ⋆₅(ω ∧ η)` on 5D two-forms, `η = g(v, ·)`,
/// orientation `dx⁰ ∧ … ∧ dx⁴`.
pub fn t_eta_matrix(v: &VectorFieldSpec) -> Result<Vec<Vec<f64>>> {
    check_dim(5, v.cosines.len())?;
    let ps = pairs(5);
    let mut m = vec![vec![0.0; 10]; 10];
    for (col, &(a, b)) in ps.iter().enumerate() {
        for (e, &ve) in v.cosines.iter().enumerate() {
            if ve == 0.0 || e == a || e == b {
                continue;
            }
            // dx^a ∧ dx^b ∧ dx^e, then ⋆ of the 3-form: ⋆e_abe = sgn(a,b,e,p,q) e_pq
            let rest: Vec<usize> = (0..5).filter(|x| ![a, b, e].contains(x)).collect();
            let s = perm_sign(&[a, b, e, rest[0], rest[1]]);
            let (row, _) = pair_index(5, rest[0], rest[1]);
            m[row][col] += ve * s;
        }
    }
    Ok(m)
}

/// Splits a 5D two-form into the `−1`, `0` and `+1` eigenspaces of `T_η`.
pub fn t_eta_eigenspaces(v: &VectorFieldSpec, omega: &TwoForm) -> Result<(TwoForm, TwoForm, TwoForm)> {
    if omega.dim != 5 {
        return Err(Error::Grid(format!("T_η needs a 5D two-form, got {}D", omega.dim)));
    }
    let v = VectorFieldSpec::new(v.cosines.clone())?;
    let t = t_eta_matrix(&v)?;
    let t2: Vec<Vec<f64>> = (0..10)
        .map(|r| (0..10).map(|cc| (0..10).map(|k| t[r][k] * t[k][cc]).sum()).collect())
        .collect();
    let proj = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..10).map(|r| (0..10).map(|cc| f(r, cc)).collect()).collect()
    };
    let plus = proj(&|r, cc| 0.5 * (t2[r][cc] + t[r][cc]));
    let minus = proj(&|r, cc| 0.5 * (t2[r][cc] - t[r][cc]));
    let zero = proj(&|r, cc| f64::from(r == cc) - t2[r][cc]);
    Ok((omega.apply(&minus), omega.apply(&zero), omega.apply(&plus)))
}

/// Orthonormal 5D frame `(n₀, n₁, n₂, n₃, v)` given by its rows in grid
/// coordinates. The Haydys-Witten operator is written entirely in this frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub rows: [[f64; 5]; 5],
}

impl Frame {
    pub fn new(rows: [[f64; 5]; 5]) -> Result<Self> {
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = (0..5).map(|k| rows[a][k] * rows[b][k]).sum();
                if (dot - f64::from(a == b)).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("frame is not orthonormal".into()));
                }
            }
        }
        Ok(Self { rows })
    }

    /// The coordinate frame with `v = ∂_4`.
    pub fn standard() -> Self {
        let mut rows = [[0.0; 5]; 5];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        Self { rows }
    }

    pub fn v(&self) -> VectorFieldSpec {
        VectorFieldSpec {
            cosines: self.rows[4].to_vec(),
        }
    }
}

/// Writes components as CSV rows `i0..,component,row,col,re,im`, preceded by
/// `# axis name n h x0 boundary` comment lines describing the grid.
pub fn write_snapshot(path: &Path, grid: &Grid, comps: &[(String, &Field)]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for a in &grid.axes {
        let b = match a.boundary {
            Boundary::Periodic => "periodic",
            Boundary::Clamped => "clamped",
        };
        writeln!(file, "# axis {} {} {:e} {:e} {}", a.name, a.n, a.h, a.x0, b)?;
    }
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..grid.dim()).map(|d| format!("i{d}")).collect();
    header.extend(["component", "row", "col", "re", "im"].map(String::from));
    w.write_record(&header)?;
    for (name, f) in comps {
        check_dim(grid.len(), f.data.len())?;
        for (site, m) in f.data.iter().enumerate() {
            let idx = grid.unravel(site);
            for r in 0..f.n {
                for cc in 0..f.n {
                    let z = m[(r, cc)];
                    let mut rec: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                    rec.push(name.clone());
                    rec.push(r.to_string());
                    rec.push(cc.to_string());
                    rec.push(format!("{:e}", z.re));
                    rec.push(format!("{:e}", z.im));
                    w.write_record(&rec)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]. Components keep file order.
pub fn read_snapshot(path: &Path) -> Result<(Grid, Vec<(String, Field)>)> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut axes = Vec::new();
    let mut body = String::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            let t: Vec<&str> = rest.split_whitespace().collect();
            if t.first() == Some(&"axis") {
                if t.len() != 6 {
                    return Err(Error::Snapshot(format!("bad axis line: {line}")));
                }
                let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Snapshot(format!("bad number {s}")));
                let boundary = match t[5] {
                    "periodic" => Boundary::Periodic,
                    "clamped" => Boundary::Clamped,
                    b => return Err(Error::Snapshot(format!("bad boundary {b}"))),
                };
                axes.push(Axis {
                    name: t[1].into(),
                    n: t[2].parse().map_err(|_| Error::Snapshot(format!("bad extent {}", t[2])))?,
                    h: parse(t[3])?,
                    x0: parse(t[4])?,
                    boundary,
                });
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let grid = Grid::new(axes)?;
    let d = grid.dim();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let mut rows: Vec<(Vec<usize>, String, usize, usize, C64)> = Vec::new();
    let mut n = 0;
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != d + 5 {
            return Err(Error::Snapshot(format!("expected {} columns, got {}", d + 5, rec.len())));
        }
        let num = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Snapshot(format!("bad index {}", &rec[i])))
        };
        let fl = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Snapshot(format!("bad value {}", &rec[i])))
        };
        let idx: Vec<usize> = (0..d).map(num).collect::<Result<_>>()?;
        for (k, &i) in idx.iter().enumerate() {
            if i >= grid.axes[k].n {
                return Err(Error::Snapshot(format!("index {i} outside axis {}", grid.axes[k].name)));
            }
        }
        let (r, cc) = (num(d + 1)?, num(d + 2)?);
        n = n.max(r + 1).max(cc + 1);
        rows.push((idx, rec[d].to_string(), r, cc, C64::new(fl(d + 3)?, fl(d + 4)?)));
    }
    let mut comps: Vec<(String, Field)> = Vec::new();
    for (idx, name, r, cc, z) in rows {
        let pos = match comps.iter().position(|(nm, _)| *nm == name) {
            Some(p) => p,
            None => {
                comps.push((name, Field::zeros(&grid, n)));
                comps.len() - 1
            }
        };
        comps[pos].1.data[grid.index(&idx)][(r, cc)] = z;
    }
    Ok((grid, comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{random_compact, spin_irrep_triple};

    fn scalar_field(grid: &Grid, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Field {
        Field::from_fn(grid, 1, |x| Mat::from_element(1, 1, c(f(x))))
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid::periodic(&["x", "y"], 8, 2.0).unwrap();
        let f = scalar_field(&g, |_| 3.0);
        for b in [Backend::Central2, Backend::Central4, Backend::Spectral] {
            let (d, _) = derivative(&g, &f, 1, b).unwrap();
            assert!(d.max_norm() < 1e-14);
        }
    }

    #[test]
    fn spectral_is_exact_on_fourier_modes() {
        let l = 3.0;
        let g = Grid::periodic(&["x"], 16, l).unwrap();
        let k = TAU / l;
        let f = scalar_field(&g, |x| (k * x[0]).sin());
        let (d, _) = derivative(&g, &f, 0, Backend::Spectral).unwrap();
        for (s, m) in d.data.iter().enumerate() {
            let x = g.coords(s)[0];
            assert!((m[(0, 0)].re - k * (k * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn central2_exact_on_quadratics_with_mask() {
        let g = Grid::new(vec![Axis::clamped("x", 9, -1.0, 1.0)]).unwrap();
        let f = scalar_field(&g, |x| x[0] * x[0]);
        let (d, mask) = derivative(&g, &f, 0, Backend::Central2).unwrap();
        assert!(!mask.0[0] && !mask.0[8] && mask.count() == 7);
        for s in 1..8 {
            let x = g.coords(s)[0];
            assert!((d.data[s][(0, 0)].re - 2.0 * x).abs() < 1e-13);
        }
        assert!(derivative(&g, &f, 0, Backend::Spectral).is_err());
    }

    #[test]
    fn convergence_orders() {
        let measure = |b: Backend, n: usize| {
            let g = Grid::periodic(&["x"], n, TAU).unwrap();
            let f = scalar_field(&g, |x| (x[0].sin()).exp());
            let (d, _) = derivative(&g, &f, 0, b).unwrap();
            d.data
                .iter()
                .enumerate()
                .map(|(s, m)| {
                    let x = g.coords(s)[0];
                    (m[(0, 0)].re - x.cos() * x.sin().exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        for b in [Backend::Central2, Backend::Central4] {
            let (e1, e2) = (measure(b, 64), measure(b, 128));
            let order = (e1 / e2).log2();
            assert!((order - b.nominal_order().unwrap()).abs() < 0.2, "{b:?} order {order}");
        }
        assert!(measure(Backend::Spectral, 32) < 1e-12);
    }

    #[test]
    fn curvature_of_quadratic_connection() {
        let g = Grid::new(vec![Axis::clamped("x", 11, 0.0, 1.0), Axis::clamped("y", 5, 0.0, 1.0)]).unwrap();
        let t = spin_irrep_triple(1).unwrap();
        let t1 = t.t[0].clone();
        let a = vec![Field::zeros(&g, 2), Field::from_fn(&g, 2, |x| &t1 * c(x[0] * x[0]))];
        let (f, mask) = curvature(&g, &a, Backend::Central2).unwrap();
        for s in 0..g.len() {
            if mask.0[s] {
                let x = g.coords(s)[0];
                assert!(fnorm(&(&f[0][1].data[s] - &t1 * c(2.0 * x))) < 1e-12);
                assert!(fnorm(&(&f[1][0].data[s] + &t1 * c(2.0 * x))) < 1e-12);
            }
        }
    }

    #[test]
    fn covariantly_constant_section() {
        // s(x) = e^{-xA} t e^{xA} with constant A solves ∂s + [A, s] = 0.
        let g = Grid::periodic(&["x"], 32, TAU).unwrap();
        let tr = spin_irrep_triple(1).unwrap();
        let a0 = &tr.t[2] * c(1.0); // e^{2π t3} = −1, so s is periodic
        let t = tr.t[0].clone();
        let s = Field::from_fn(&g, 2, |x| {
            let e = (&a0 * c(-x[0])).exp();
            let ei = (&a0 * c(x[0])).exp();
            e * &t * ei
        });
        let a = vec![Field::from_fn(&g, 2, |_| a0.clone())];
        let (cd, _) = covariant_derivative(&g, &a, &s, 0, Backend::Spectral).unwrap();
        assert!(cd.max_norm() < 1e-12);
    }

    #[test]
    fn sigma_examples() {
        let t = spin_irrep_triple(1).unwrap();
        let s = sigma_point(&t.t, &t.t);
        for i in 0..3 {
            assert!(fnorm(&(&s[i] - &t.t[i])) < 1e-15);
        }
        let z = zeros(2);
        let one = [t.t[0].clone(), z.clone(), z];
        assert!(sigma_point(&one, &one).iter().all(|m| fnorm(m) == 0.0));
    }

    #[test]
    fn sigma_two_form_identity() {
        // σ(B,B)_μν = ½ Σ_ρ [B_μρ, B_νρ] with B_0i = B_jk = B_i.
        let mut rng = seeded_rng(11);
        let b = [0, 1, 2].map(|_| random_compact(3, &mut rng));
        let s = sigma_point(&b, &b);
        let two = |m: usize, n: usize| -> Mat {
            if m == n {
                return zeros(3);
            }
            let (lo, hi, sg) = if m < n { (m, n, 1.0) } else { (n, m, -1.0) };
            let i = if lo == 0 { hi - 1 } else { 6 - lo - hi - 1 };
            // (1,2)->B3, (1,3)->−B2 [since B_31 = B_2], (2,3)->B1
            let sign = if lo == 1 && hi == 3 { -1.0 } else { 1.0 };
            &b[i] * c(sg * sign)
        };
        let sig2 = |m: usize, n: usize| -> Mat {
            (0..4).fold(zeros(3), |acc, r| acc + br(&two(m, r), &two(n, r))) * c(0.5)
        };
        assert!(fnorm(&(sig2(0, 1) - &s[0])) < 1e-13);
        assert!(fnorm(&(sig2(0, 2) - &s[1])) < 1e-13);
        assert!(fnorm(&(sig2(0, 3) - &s[2])) < 1e-13);
        assert!(fnorm(&(sig2(2, 3) - &s[0])) < 1e-13);
    }

    fn const_two_form(dim: usize, vals: &[f64]) -> (Grid, TwoForm) {
        let g = Grid::periodic(&["a"], 4, 1.0).unwrap();
        let comps = vals
            .iter()
            .map(|&v| Field::from_fn(&g, 1, |_| Mat::from_element(1, 1, c(v))))
            .collect();
        (g, TwoForm::new(dim, comps).unwrap())
    }

    fn vals(f: &TwoForm) -> Vec<f64> {
        f.comps.iter().map(|x| x.data[0][(0, 0)].re).collect()
    }

    #[test]
    fn self_dual_projection() {
        // pairs(4): 01 02 03 12 13 23
        let (_, e1) = const_two_form(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let (p, m) = project_self_dual(&e1, 1.0).unwrap();
        assert_eq!(vals(&p), vals(&e1));
        assert!(vals(&m).iter().all(|x| *x == 0.0));
        let (_, asd) = const_two_form(4, &[1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let (p, m) = project_self_dual(&asd, 1.0).unwrap();
        assert!(vals(&p).iter().all(|x| *x == 0.0));
        assert_eq!(vals(&m), vals(&asd));
        let w = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4];
        let (_, om) = const_two_form(4, &w);
        let (p, m) = project_self_dual(&om, 1.0).unwrap();
        let n = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>();
        assert!((n(w.to_vec()) - n(vals(&p)) - n(vals(&m))).abs() < 1e-14);
        let (pp, _) = project_self_dual(&p, 1.0).unwrap();
        assert_eq!(vals(&pp), vals(&p));
    }

    #[test]
    fn t_eta_examples() {
        let v = VectorFieldSpec::axis(5, 4);
        // pairs(5): 01 02 03 04 12 13 14 23 24 34
        let mut e1 = [0.0; 10];
        e1[0] = 1.0;
        e1[7] = 1.0;
        let (_, om) = const_two_form(5, &e1);
        let (mi, ze, pl) = t_eta_eigenspaces(&v, &om).unwrap();
        assert_eq!(vals(&pl), e1.to_vec());
        assert!(vals(&mi).iter().chain(vals(&ze).iter()).all(|x| x.abs() < 1e-15));
        let mut eta_dx1 = [0.0; 10];
        eta_dx1[6] = -1.0; // dy ∧ dx¹ = −dx¹ ∧ dy
        let (_, om) = const_two_form(5, &eta_dx1);
        let (_, ze, _) = t_eta_eigenspaces(&v, &om).unwrap();
        assert_eq!(vals(&ze), eta_dx1.to_vec());
        let mut asd = [0.0; 10];
        asd[0] = 1.0;
        asd[7] = -1.0;
        let (_, om) = const_two_form(5, &asd);
        let (mi, _, _) = t_eta_eigenspaces(&v, &om).unwrap();
        assert_eq!(vals(&mi), asd.to_vec());
        // plus eigenspace is 3-dimensional for any unit v
        let v = VectorFieldSpec::new(vec![0.6, 0.0, 0.0, 0.0, 0.8]).unwrap();
        let t = t_eta_matrix(&v).unwrap();
        let tr_plus: f64 = (0..10)
            .map(|r| 0.5 * ((0..10).map(|k| t[r][k] * t[k][r]).sum::<f64>() + t[r][r]))
            .sum();
        assert!((tr_plus - 3.0).abs() < 1e-12);
        assert!(VectorFieldSpec::new(vec![1.0, 1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = seeded_rng(1);
        let g = Grid::periodic(&["x", "y"], 4, 1.0).unwrap();
        let f = random_smooth_field(&g, 2, 1, 0.3, &mut rng);
        let h = random_smooth_field(&g, 2, 1, 0.3, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_snapshot(&p, &g, &[("A_0".into(), &f), ("phi_1".into(), &h)]).unwrap();
        let (g2, comps) = read_snapshot(&p).unwrap();
        assert_eq!(g2.len(), g.len());
        assert_eq!(comps[0].0, "A_0");
        for (a, b) in comps[1].1.data.iter().zip(&h.data) {
            assert!(fnorm(&(a - b)) < 1e-15);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::periodic(&["x"], 3, 1.0).is_err());
        assert!(Grid::periodic(&["a", "b", "c", "d", "e", "f"], 4, 1.0).is_err());
    }
}
