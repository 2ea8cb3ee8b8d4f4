//! Exact rational quadratic forms and the hyperbolic normal form.
//!
//! A [`QuadraticForm`] carries a symmetric rational Gram matrix `G` with
//! `Q(x) = xᵀ G x`, a nonzero target value `m` (the variety is `{Q = m}`)
//! and its signature `(p, q)`. A [`HyperbolicBasis`] is a basis
//! `f₁, …, f_{d+1}` in which
//!
//! ```text
//! Q(c₁f₁ + … + c_{d+1}f_{d+1}) = 2c₁c_{d+1} + c₂² + … + c_p² − c_{p+1}² − … − c_d²
//! ```

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"n"` or `"n/d"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let r: Rational = s
        .parse()
        .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))?;
    Ok(r)
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rational vectors dotted against a symmetric matrix.
fn quad(gram: &[Vec<Rational>], x: &[Rational], y: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        let mut row = Rational::zero();
        for (j, yj) in y.iter().enumerate() {
            if !yj.is_zero() && !gram[i][j].is_zero() {
                row += &gram[i][j] * yj;
            }
        }
        acc += xi * row;
    }
    acc
}

/// Counts (positive, negative, zero) pivots of a symmetric rational matrix
/// under congruence, by symmetric Gaussian elimination.
pub fn inertia(gram: &[Vec<Rational>]) -> (usize, usize, usize) {
    let n = gram.len();
    let mut a: Vec<Vec<Rational>> = gram.to_vec();
    let (mut pos, mut neg, mut zero) = (0, 0, 0);
    let mut k = 0;
    while k < n {
        if a[k][k].is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !a[j][j].is_zero()) {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // row/col k += row/col j makes the pivot 2·a[k][j]
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[k][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][k] += v;
                }
            } else {
                zero += 1;
                k += 1;
                continue;
            }
        }
        let pivot = a[k][k].clone();
        if pivot.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &pivot;
            for j in k..n {
                let v = &f * &a[k][j];
                a[i][j] -= v;
            }
        }
        for i in k + 1..n {
            a[k][i] = Rational::zero();
            a[i][k] = Rational::zero();
        }
        k += 1;
    }
    (pos, neg, zero)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    gram: Vec<Vec<Rational>>,
    m: Rational,
    signature: (usize, usize),
}

impl QuadraticForm {
    pub fn from_gram(gram: Vec<Vec<Rational>>, m: Rational) -> Result<Self> {
        let n = gram.len();
        if n < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: n });
        }
        for (i, row) in gram.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        if m.is_zero() {
            return Err(Error::ZeroTarget);
        }
        let (p, q, z) = inertia(&gram);
        if z > 0 {
            return Err(Error::Degenerate);
        }
        if p == 0 || q == 0 {
            return Err(Error::NotIndefinite { p, q });
        }
        Ok(QuadraticForm { gram, m, signature: (p, q) })
    }

    pub fn from_diag(diag: &[i64], m: Rational) -> Result<Self> {
        let n = diag.len();
        let gram = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { rat(diag[i]) } else { Rational::zero() })
                    .collect()
            })
            .collect();
        Self::from_gram(gram, m)
    }

    /// Number of variables, `d + 1`.
    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn d(&self) -> usize {
        self.gram.len() - 1
    }

    pub fn gram(&self) -> &[Vec<Rational>] {
        &self.gram
    }

    pub fn m(&self) -> &Rational {
        &self.m
    }

    pub fn m_f64(&self) -> f64 {
        rational_to_f64(&self.m)
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// Whether `d ≥ 3`, the range of the Khinchin-type dichotomy.
    pub fn in_main_range(&self) -> bool {
        self.d() >= 3
    }

    pub fn require_main_range(&self) -> Result<()> {
        if self.in_main_range() {
            Ok(())
        } else {
            Err(Error::DimensionTooSmall(self.d()))
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[Rational]) -> Result<Rational> {
        self.check_len(x.len())?;
        Ok(quad(&self.gram, x, x))
    }

    /// Polar form `B(x, y)`, so that `B(x, x) = Q(x)`.
    pub fn bilinear(&self, x: &[Rational], y: &[Rational]) -> Result<Rational> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(quad(&self.gram, x, y))
    }

    pub fn gram_f64(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| rational_to_f64(&self.gram[i][j]))
    }

    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if !self.gram[i][j].is_zero() {
                    acc += rational_to_f64(&self.gram[i][j]) * x[i] * x[j];
                }
            }
        }
        acc
    }

    /// Signs of the diagonal if the form is `diag(±1, …, ±1)`.
    pub fn unit_diagonal(&self) -> Option<Vec<i8>> {
        let n = self.dim();
        let mut signs = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.gram[i][j].is_zero() {
                    return None;
                }
            }
            let g = &self.gram[i][i];
            if *g == Rational::one() {
                signs.push(1);
            } else if *g == -Rational::one() {
                signs.push(-1);
            } else {
                return None;
            }
        }
        Some(signs)
    }

    /// Integer Gram matrix and target, if both are integral.
    pub fn integral(&self) -> Result<IntegerForm> {
        let to_i64 = |r: &Rational| -> Result<i64> {
            if !r.is_integer() {
                return Err(Error::NonIntegral);
            }
            r.to_integer().to_i64().ok_or(Error::NonIntegral)
        };
        let gram = self
            .gram
            .iter()
            .map(|row| row.iter().map(to_i64).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(IntegerForm { gram, m: to_i64(&self.m)? })
    }
}

/// Integral Gram matrix with integral target; evaluation in `i128`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerForm {
    pub gram: Vec<Vec<i64>>,
    pub m: i64,
}

impl IntegerForm {
    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn eval(&self, x: &[i64]) -> i128 {
        self.bilinear(x, x)
    }

    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> i128 {
        let mut acc = 0i128;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let row: i128 = self.gram[i]
                .iter()
                .zip(y)
                .map(|(&g, &yj)| g as i128 * yj as i128)
                .sum();
            acc += xi as i128 * row;
        }
        acc
    }
}

/// Basis `f₁, …, f_{d+1}` bringing the form to `2x₁x_{d+1} + Σ±xᵢ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicBasis {
    columns: Vec<Vec<Rational>>,
    p: usize,
}

impl HyperbolicBasis {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `f_i` for `1 ≤ i ≤ d + 1`.
    pub fn f(&self, i: usize) -> &[Rational] {
        &self.columns[i - 1]
    }

    pub fn columns(&self) -> &[Vec<Rational>] {
        &self.columns
    }

    /// Gram matrix of the normal form in f-coordinates.
    pub fn normal_gram(&self) -> Vec<Vec<Rational>> {
        normal_gram(self.dim(), self.p)
    }

    /// The matrix whose columns are the `f_i` (maps f-coordinates to
    /// standard coordinates).
    pub fn matrix_f64(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| rational_to_f64(&self.columns[j][i]))
    }

    /// Standard coordinates of `Σ cᵢ fᵢ`.
    pub fn combine(&self, c: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut x = vec![Rational::zero(); n];
        for (ci, f) in c.iter().zip(&self.columns) {
            for k in 0..n {
                x[k] += ci * &f[k];
            }
        }
        x
    }

    /// Checks `Fᵀ G F` against the normal-form Gram matrix exactly.
    pub fn verify(&self, form: &QuadraticForm) -> Result<()> {
        let target = self.normal_gram();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let b = form.bilinear(&self.columns[i], &self.columns[j])?;
                if b != target[i][j] {
                    return Err(Error::InvalidArgument(format!(
                        "B(f{}, f{}) = {} but the normal form needs {}",
                        i + 1,
                        j + 1,
                        b,
                        target[i][j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Gram matrix of `2x₁x_n + x₂² + … + x_p² − x_{p+1}² − … − x_{n−1}²`.
pub fn normal_gram(n: usize, p: usize) -> Vec<Vec<Rational>> {
    let mut g = vec![vec![Rational::zero(); n]; n];
    g[0][n - 1] = Rational::one();
    g[n - 1][0] = Rational::one();
    for (i, row) in g.iter_mut().enumerate().take(n - 1).skip(1) {
        row[i] = if i < p { Rational::one() } else { -Rational::one() };
    }
    g
}

/// Hyperbolic basis of a `diag(±1, …)` form: `f₁ = e₊ + e₋`,
/// `f_{d+1} = (e₊ − e₋)/2` from the first plus and first minus axes, the
/// remaining axes in the middle with plus axes first.
pub fn hyperbolic_basis(form: &QuadraticForm) -> Result<HyperbolicBasis> {
    let signs = form.unit_diagonal().ok_or_else(|| {
        Error::Unsupported(
            "automatic basis needs a diag(±1) form; supply an isotropic vector".into(),
        )
    })?;
    let n = signs.len();
    let plus: Vec<usize> = (0..n).filter(|&i| signs[i] > 0).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| signs[i] < 0).collect();
    let (ep, em) = (plus[0], minus[0]);
    let unit = |i: usize| -> Vec<Rational> {
        (0..n).map(|k| if k == i { Rational::one() } else { Rational::zero() }).collect()
    };
    let mut f1 = vec![Rational::zero(); n];
    f1[ep] = Rational::one();
    f1[em] = Rational::one();
    let mut fl = vec![Rational::zero(); n];
    fl[ep] = ratio(1, 2);
    fl[em] = ratio(-1, 2);

    let mut columns = vec![f1];
    columns.extend(plus[1..].iter().map(|&i| unit(i)));
    columns.extend(minus[1..].iter().map(|&i| unit(i)));
    columns.push(fl);
    let basis = HyperbolicBasis { columns, p: plus.len() };
    basis.verify(form)?;
    Ok(basis)
}

fn is_rational_square(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Hyperbolic basis built around a user-supplied isotropic vector.
///
/// `f_{d+1}` is derived from any vector pairing nontrivially with `f₁`.
/// The middle block is diagonalized over ℚ; each diagonal entry must be ±
/// a rational square for the `±1` normalization to exist over ℚ.
pub fn hyperbolic_basis_from_isotropic(
    form: &QuadraticForm,
    isotropic: &[Rational],
) -> Result<HyperbolicBasis> {
    let n = form.dim();
    if isotropic.iter().all(Zero::is_zero) {
        return Err(Error::InvalidArgument("isotropic vector is zero".into()));
    }
    if !form.evaluate(isotropic)?.is_zero() {
        return Err(Error::InvalidArgument("supplied vector is not isotropic".into()));
    }
    let f1 = isotropic.to_vec();
    let unit = |i: usize| -> Vec<Rational> {
        (0..n).map(|k| if k == i { Rational::one() } else { Rational::zero() }).collect()
    };
    // nondegeneracy guarantees some axis pairs with f1
    let (w, b) = (0..n)
        .map(unit)
        .map(|e| {
            let b = form.bilinear(&f1, &e).expect("length checked");
            (e, b)
        })
        .find(|(_, b)| !b.is_zero())
        .ok_or(Error::Degenerate)?;
    // w' = w − Q(w)/(2b)·f1 is isotropic with B(f1, w') = b
    let qw = form.evaluate(&w)?;
    let shift = &qw / (rat(2) * &b);
    let fl: Vec<Rational> = w
        .iter()
        .zip(&f1)
        .map(|(wi, fi)| (wi - &shift * fi) / &b)
        .collect();

    // orthogonal complement of span(f1, fl): project every axis
    let mut pool: Vec<Vec<Rational>> = Vec::new();
    for i in 0..n {
        let e = unit(i);
        let a = form.bilinear(&e, &fl)?;
        let c = form.bilinear(&e, &f1)?;
        // B(e − a f1 − c fl, f1) = c − c = 0, likewise for fl
        let proj: Vec<Rational> = (0..n).map(|k| &e[k] - &a * &f1[k] - &c * &fl[k]).collect();
        pool.push(proj);
    }
    // rank-reduce the pool to a basis of the complement
    let mut basis_vecs: Vec<Vec<Rational>> = Vec::new();
    let mut echelon: Vec<(usize, Vec<Rational>)> = Vec::new();
    for v in pool {
        let mut r = v.clone();
        for (piv, row) in &echelon {
            if !r[*piv].is_zero() {
                let f = &r[*piv] / &row[*piv];
                for k in 0..n {
                    let t = &f * &row[k];
                    r[k] -= t;
                }
            }
        }
        if let Some(piv) = (0..n).find(|&k| !r[k].is_zero()) {
            echelon.push((piv, r));
            basis_vecs.push(v);
        }
    }
    if basis_vecs.len() != n - 2 {
        return Err(Error::Degenerate);
    }

    // B-orthogonalize
    let mut ortho: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut pool = basis_vecs;
    while !pool.is_empty() {
        let idx = match (0..pool.len()).find(|&i| !form.evaluate(&pool[i]).unwrap().is_zero()) {
            Some(i) => i,
            None => {
                let (i, j) = (0..pool.len())
                    .flat_map(|i| (i + 1..pool.len()).map(move |j| (i, j)))
                    .find(|&(i, j)| !form.bilinear(&pool[i], &pool[j]).unwrap().is_zero())
                    .ok_or(Error::Degenerate)?;
                let sum: Vec<Rational> = (0..n).map(|k| &pool[i][k] + &pool[j][k]).collect();
                pool[i] = sum;
                i
            }
        };
        let w = pool.swap_remove(idx);
        let qw = form.evaluate(&w)?;
        for v in pool.iter_mut() {
            let f = form.bilinear(v, &w)? / &qw;
            for k in 0..n {
                let t = &f * &w[k];
                v[k] -= t;
            }
        }
        ortho.push((w, qw));
    }

    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (w, qw) in ortho {
        let r = is_rational_square(&qw.abs()).ok_or_else(|| {
            Error::Unsupported(format!(
                "middle block value {qw} is not ± a rational square; no ±1 basis over Q"
            ))
        })?;
        let scaled: Vec<Rational> = w.iter().map(|x| x / &r).collect();
        if qw.is_positive() {
            plus.push(scaled);
        } else {
            minus.push(scaled);
        }
    }
    let p = plus.len() + 1;
    let mut columns = vec![f1];
    columns.extend(plus);
    columns.extend(minus);
    columns.push(fl);
    let basis = HyperbolicBasis { columns, p };
    basis.verify(form)?;
    Ok(basis)
}

/// Bounded brute-force search for a nonzero integer isotropic vector with
/// entries in `[-bound, bound]`, in lexicographic order.
pub fn find_isotropic(form: &QuadraticForm, bound: i64) -> Option<Vec<Rational>> {
    let n = form.dim();
    let mut x = vec![-bound; n];
    loop {
        if x.iter().any(|&v| v != 0) {
            let xr: Vec<Rational> = x.iter().map(|&v| rat(v)).collect();
            if form.evaluate(&xr).ok()?.is_zero() {
                return Some(xr);
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            if x[k] < bound {
                x[k] += 1;
                break;
            }
            x[k] = -bound;
        }
    }
}

/// JSON description of a form: `{"diag": [...], "m": "p/q"}` or
/// `{"gram": [["a/b", ...], ...], "m": "..."}`, optionally with an
/// `"isotropic"` vector for general forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<String>>>,
    pub m: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<Vec<String>>,
}

impl FormSpec {
    pub fn diagonal(diag: &[i64], m: &str) -> Self {
        FormSpec { diag: Some(diag.to_vec()), gram: None, m: m.to_string(), isotropic: None }
    }

    pub fn build(&self) -> Result<QuadraticForm> {
        let m = parse_rational(&self.m)?;
        match (&self.diag, &self.gram) {
            (Some(d), None) => QuadraticForm::from_diag(d, m),
            (None, Some(g)) => {
                let gram = g
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                QuadraticForm::from_gram(gram, m)
            }
            _ => Err(Error::Parse("form needs exactly one of \"diag\" or \"gram\"".into())),
        }
    }

    /// Form plus its hyperbolic basis (explicit for `diag(±1)`, otherwise
    /// from the supplied or searched isotropic vector).
    pub fn build_with_basis(&self) -> Result<(QuadraticForm, HyperbolicBasis)> {
        let form = self.build()?;
        let basis = if let Some(iso) = &self.isotropic {
            let v = iso.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            hyperbolic_basis_from_isotropic(&form, &v)?
        } else if form.unit_diagonal().is_some() {
            hyperbolic_basis(&form)?
        } else {
            let v = find_isotropic(&form, 6).ok_or_else(|| {
                Error::Unsupported("no isotropic vector with entries ≤ 6 found".into())
            })?;
            hyperbolic_basis_from_isotropic(&form, &v)?
        };
        Ok((form, basis))
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.signature;
        write!(f, "Q[dim={}, sig=({p},{q}), m={}]", self.dim(), self.m)
    }
}

/// Least common multiple of the denominators of a rational vector.
pub fn common_denominator(v: &[Rational]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}
