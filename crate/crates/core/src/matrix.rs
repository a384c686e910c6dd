//! Complex matrices with the exchange involution, and the structured
//! decompositions built on it.
//!
//! Everything here works in the eigenbasis of the exchange matrix
//! `C = [[0, I], [I, 0]]`. In that basis `G+` is block diagonal, elements of
//! `g-` are block off-diagonal, and both decompositions reduce to an SVD or a
//! cosine-sine split of `n x n` blocks, so the `+-` pairing of eigenvalues
//! comes out exactly instead of being matched by tolerance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Singular value below which the cosine-sine split switches to the
/// complementary-block branch.
const SMALL_SINE: f64 = 1e-6;

/// Structure classes checked by [`structure_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    #[serde(rename = "unitary")]
    Unitary,
    /// Unitary with `CXC = X`.
    #[serde(rename = "Gplus")]
    GPlus,
    /// Unitary with `CXC = X^-1`.
    #[serde(rename = "Gminus")]
    GMinus,
    /// Anti-Hermitian with `CXC = X`.
    #[serde(rename = "gplus")]
    LiePlus,
    /// Anti-Hermitian with `CXC = -X`.
    #[serde(rename = "gminus")]
    LieMinus,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Unitary => "unitary",
            Structure::GPlus => "Gplus",
            Structure::GMinus => "Gminus",
            Structure::LiePlus => "gplus",
            Structure::LieMinus => "gminus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Structure::Unitary, Structure::GPlus, Structure::GMinus, Structure::LiePlus, Structure::LieMinus]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

/// A square complex matrix with an optional claimed structure.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMatrix {
    pub entries: CMat,
    pub tag: Option<Structure>,
}

impl StructuredMatrix {
    pub fn new(entries: CMat, tag: Option<Structure>) -> Self {
        StructuredMatrix { entries, tag }
    }

    /// Residual of the claimed structure, `0` when untagged.
    pub fn residual(&self) -> Result<f64> {
        match self.tag {
            Some(t) => structure_residual(&self.entries, t),
            None => Ok(0.0),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<Structure>,
    entries: Vec<[f64; 2]>,
}

impl Serialize for StructuredMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { size: self.entries.nrows(), tag: self.tag, entries: to_row_major(&self.entries) }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StructuredMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let m = from_row_major(r.size, &r.entries).map_err(serde::de::Error::custom)?;
        Ok(StructuredMatrix { entries: m, tag: r.tag })
    }
}

/// Row-major `[re, im]` pairs.
pub fn to_row_major(m: &CMat) -> Vec<[f64; 2]> {
    let mut v = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            v.push([m[(r, c)].re, m[(r, c)].im]);
        }
    }
    v
}

pub fn from_row_major(size: usize, entries: &[[f64; 2]]) -> Result<CMat> {
    if entries.len() != size * size {
        return Err(Error::Invalid(format!("expected {} entries, got {}", size * size, entries.len())));
    }
    Ok(CMat::from_fn(size, size, |r, c| {
        let [re, im] = entries[r * size + c];
        Complex64::new(re, im)
    }))
}

/// The exchange matrix `C` of size `2n`.
pub fn exchange(n: usize) -> CMat {
    CMat::from_fn(2 * n, 2 * n, |r, c| if (r + n) % (2 * n) == c { ONE } else { ZERO })
}

/// `C X C`, computed by index permutation.
pub fn conj_c(x: &CMat) -> CMat {
    let n = x.nrows() / 2;
    let s = |i: usize| if i < n { i + n } else { i - n };
    CMat::from_fn(x.nrows(), x.ncols(), |r, c| x[(s(r), s(c))])
}

/// `C v`, computed by index permutation.
pub fn c_vec(v: &CVec) -> CVec {
    let n = v.len() / 2;
    CVec::from_fn(v.len(), |r, _| v[if r < n { r + n } else { r - n }])
}

/// `diag(e^{i s q}, e^{-i s q})` as a vector.
pub fn exp_iq(q: &[f64], s: f64) -> CVec {
    let n = q.len();
    CVec::from_fn(2 * n, |k, _| {
        let x = if k < n { q[k] } else { -q[k - n] };
        Complex64::from_polar(1.0, s * x)
    })
}

pub fn diag(v: &CVec) -> CMat {
    CMat::from_diagonal(v)
}

pub fn real_diag(v: &[f64]) -> CMat {
    CMat::from_fn(v.len(), v.len(), |r, c| if r == c { Complex64::new(v[r], 0.0) } else { ZERO })
}

pub fn inverse(x: &CMat) -> Result<CMat> {
    x.clone().try_inverse().ok_or(Error::Singular)
}

/// Frobenius norm of `X^dagger X - 1`.
pub fn unitarity_residual(x: &CMat) -> f64 {
    (x.adjoint() * x - CMat::identity(x.nrows(), x.ncols())).norm()
}

/// Norm of the violation of the defining relations of `tag`.
pub fn structure_residual(x: &CMat, tag: Structure) -> Result<f64> {
    if !x.is_square() || x.nrows() % 2 != 0 {
        return Err(Error::Invalid(format!("expected an even square matrix, got {}x{}", x.nrows(), x.ncols())));
    }
    let cxc = conj_c(x);
    Ok(match tag {
        Structure::Unitary => unitarity_residual(x),
        Structure::GPlus => unitarity_residual(x).max((cxc - x).norm()),
        Structure::GMinus => {
            let inv = inverse(x)?;
            unitarity_residual(x).max((cxc - inv).norm())
        }
        Structure::LiePlus => (x.adjoint() + x).norm().max((cxc - x).norm()),
        Structure::LieMinus => (x.adjoint() + x).norm().max((cxc + x).norm()),
    })
}

fn check(x: &CMat, tag: Structure, tol: f64) -> Result<()> {
    let r = structure_residual(x, tag)?;
    let scale = 1.0_f64.max(x.norm());
    if r.is_finite() && r <= tol * scale {
        Ok(())
    } else {
        Err(Error::Structure { tag: tag.name(), residual: r, tol: tol * scale })
    }
}

/// Splits an anti-Hermitian matrix into its `g+` and `g-` parts.
///
/// The minus part is `(Y - CYC)/2` and the plus part is `Y` minus it, so the
/// two add back to `Y` up to one rounding per entry.
pub fn gamma_split(y: &CMat, tol: f64) -> Result<(CMat, CMat)> {
    if !y.is_square() || y.nrows() % 2 != 0 {
        return Err(Error::Invalid("expected an even square matrix".into()));
    }
    let r = (y.adjoint() + y).norm();
    let scale = 1.0_f64.max(y.norm());
    if !(r <= tol * scale) {
        return Err(Error::Structure { tag: "anti-Hermitian", residual: r, tol: tol * scale });
    }
    let minus = (y - conj_c(y)) * Complex64::new(0.5, 0.0);
    let plus = y - &minus;
    Ok((plus, minus))
}

/// Blocks of `T^dagger X T` where `T` maps to the eigenbasis of `C`
/// (`+1` block first). Returns `(top-left, top-right, bottom-left, bottom-right)`.
fn c_basis_blocks(x: &CMat) -> (CMat, CMat, CMat, CMat) {
    let n = x.nrows() / 2;
    let a = x.view((0, 0), (n, n));
    let b = x.view((0, n), (n, n));
    let d = x.view((n, 0), (n, n));
    let e = x.view((n, n), (n, n));
    let h = Complex64::new(0.5, 0.0);
    let tl = (a + d + b + e) * h;
    let tr = (a + d - b - e) * h;
    let bl = (a - d + b - e) * h;
    let br = (a - d - b + e) * h;
    (tl, tr, bl, br)
}

/// `T diag(u1, u2) T^dagger`, an element of `G+` when `u1, u2` are unitary.
fn from_c_basis(u1: &CMat, u2: &CMat) -> CMat {
    let n = u1.nrows();
    let h = Complex64::new(0.5, 0.0);
    let s = (u1 + u2) * h;
    let d = (u1 - u2) * h;
    let mut g = CMat::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&s);
    g.view_mut((n, n), (n, n)).copy_from(&s);
    g.view_mut((0, n), (n, n)).copy_from(&d);
    g.view_mut((n, 0), (n, n)).copy_from(&d);
    g
}

/// Phase making the largest-magnitude entry of `(u1 + u2, u1 - u2)/2`
/// real positive. Ties go to the lowest index.
fn frame_phase(u1: &CVec, u2: &CVec) -> Complex64 {
    let n = u1.len();
    let mut best = ZERO;
    let mut best_abs = -1.0;
    for k in 0..2 * n {
        let c = if k < n { (u1[k] + u2[k]) * 0.5 } else { (u1[k - n] - u2[k - n]) * 0.5 };
        // a relative slack keeps the choice stable under rounding
        if c.norm() > best_abs * (1.0 + 1e-12) {
            best_abs = c.norm();
            best = c;
        }
    }
    if best_abs > 0.0 {
        best.conj() / best_abs
    } else {
        ONE
    }
}

/// Eigenvalues `d_1 >= ... >= d_n >= 0` and a `G+` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSpectrum {
    pub values: Vec<f64>,
    pub frame: CMat,
}

impl PairedSpectrum {
    /// `g i diag(d, -d) g^-1`.
    pub fn reconstruct(&self) -> CMat {
        let d: Vec<f64> = self.values.iter().copied().chain(self.values.iter().map(|x| -x)).collect();
        let g = &self.frame;
        g * real_diag(&d) * I * g.adjoint()
    }
}

/// Writes `Y- = g i diag(d, -d) g^-1` with `g` in `G+`.
///
/// In the eigenbasis of `C`, `-i Y-` is `[[0, M], [M^dagger, 0]]`; the SVD
/// `M = U diag(d) W^dagger` gives the frame with column `j` equal to
/// `(u_j + w_j, u_j - w_j)/2` and column `n + j` equal to its image under `C`.
pub fn pair_diagonalize_gminus(ym: &CMat, tol: f64) -> Result<PairedSpectrum> {
    check(ym, Structure::LieMinus, tol)?;
    let n = ym.nrows() / 2;
    let (_, tr, _, _) = c_basis_blocks(ym);
    let m = tr * (-I);
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Pairing("SVD did not converge".into()))?;
    let w = svd.v_t.ok_or_else(|| Error::Pairing("SVD did not converge".into()))?.adjoint();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let mut u1 = CMat::zeros(n, n);
    let mut u2 = CMat::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let a = u.column(k).into_owned();
        let b = w.column(k).into_owned();
        let ph = frame_phase(&a, &b);
        u1.set_column(j, &(a * ph));
        u2.set_column(j, &(b * ph));
    }
    let spec = PairedSpectrum { values, frame: from_c_basis(&u1, &u2) };
    let err = (spec.reconstruct() - ym).norm();
    if err > tol * 1.0_f64.max(ym.norm()) * 1e3 {
        return Err(Error::Consistency(format!("pair diagonalization residual {err:e}")));
    }
    Ok(spec)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let hs = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hs);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(h.nrows(), h.nrows());
    for (j, &k) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Eigenvalues of a general square matrix (complex Schur form), ordered by argument then modulus.
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::Invalid(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let ev = m.clone().try_schur(1e-14, 10_000).ok_or(Error::Consistency("Schur iteration did not converge".into()))?;
    let mut v: Vec<Complex64> = ev.unpack().1.diagonal().iter().copied().collect();
    v.sort_by(|a, b| a.arg().total_cmp(&b.arg()).then(a.norm().total_cmp(&b.norm())));
    Ok(v)
}

/// Orthonormalizes the columns in place (modified Gram-Schmidt).
fn orthonormalize(m: &mut CMat) {
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for k in 0..j {
            let e = m.column(k);
            let proj = e.dotc(&v);
            v -= e * proj;
        }
        let nv = v.norm();
        if nv > 0.0 {
            v /= Complex64::new(nv, 0.0);
        }
        m.set_column(j, &v);
    }
}

/// Writes `B = eta e^{2iQ(q)} eta^-1` with `eta` in `G+` and
/// `pi/2 >= q_1 >= ... >= q_n >= 0`.
///
/// In the eigenbasis of `C`, `B` is `[[U1 c U1^dagger, i U1 s U2^dagger], [., U2 c U2^dagger]]`
/// with `c = cos 2q`, `s = sin 2q`. `U1` diagonalizes the top-left block;
/// `U2` follows from the top-right block where `s` is not small, and from the
/// bottom-right block on the complement otherwise. Eigenvalues `+-1` must
/// appear with matching multiplicity in both blocks; elements such as `-C`
/// violate this and are reported as unpairable.
pub fn cartan_decompose_gminus(b: &CMat, tol: f64) -> Result<(CMat, Vec<f64>)> {
    check(b, Structure::GMinus, tol)?;
    let n = b.nrows() / 2;
    let (p, qb, _, s) = c_basis_blocks(b);
    let (c, u1) = hermitian_eigen(&p);
    // (-iQ)^dagger u1_j = s_j u2_j
    let miq_adj = (&qb * (-I)).adjoint();
    let mut u1 = u1;
    let mut u2 = CMat::zeros(n, n);
    let mut sines = vec![0.0; n];
    let mut large = Vec::new();
    let mut small = Vec::new();
    for j in 0..n {
        let v = &miq_adj * u1.column(j);
        let sj = v.norm();
        if sj > SMALL_SINE {
            sines[j] = sj;
            u2.set_column(j, &(v / Complex64::new(sj, 0.0)));
            large.push(j);
        } else {
            small.push(j);
        }
    }
    // re-orthonormalize the large-sine columns, most accurate first
    large.sort_by(|&x, &y| sines[y].total_cmp(&sines[x]));
    let mut big = CMat::zeros(n, large.len());
    for (k, &j) in large.iter().enumerate() {
        big.set_column(k, &u2.column(j));
    }
    orthonormalize(&mut big);
    for (k, &j) in large.iter().enumerate() {
        u2.set_column(j, &big.column(k));
    }
    let mut cosines = c.clone();
    if !small.is_empty() {
        // complement of span(big) and the bottom-right block restricted to it
        let proj = CMat::identity(n, n) - &big * big.adjoint();
        let (pv, pvec) = hermitian_eigen(&proj);
        let k = small.len();
        let comp = pvec.columns(n - k, k).into_owned();
        if pv[n - k] < 0.5 {
            return Err(Error::Pairing("complement of the sine block has the wrong dimension".into()));
        }
        let sr = comp.adjoint() * &s * &comp;
        let (sv, svec) = hermitian_eigen(&sr);
        let plus_top: Vec<usize> = small.iter().copied().filter(|&j| c[j] > 0.0).collect();
        let minus_top: Vec<usize> = small.iter().copied().filter(|&j| c[j] <= 0.0).collect();
        let plus_bottom: Vec<usize> = (0..k).filter(|&i| sv[i] > 0.0).collect();
        let minus_bottom: Vec<usize> = (0..k).filter(|&i| sv[i] <= 0.0).collect();
        if plus_top.len() != plus_bottom.len() {
            return Err(Error::Pairing(format!(
                "eigenvalue +1 has multiplicity {} in one block and {} in the other",
                plus_top.len(),
                plus_bottom.len()
            )));
        }
        for (top, bottom) in [(plus_top, plus_bottom), (minus_top, minus_bottom)] {
            if top.is_empty() {
                continue;
            }
            let m = top.len();
            let a = CMat::from_fn(n, m, |r, cc| u1[(r, top[cc])]);
            let bb = CMat::from_fn(n, m, |r, cc| (&comp * svec.column(bottom[cc]))[r]);
            // align the two frames so that the restricted sine block is diagonal
            let core = a.adjoint() * (&qb * (-I)) * &bb;
            let svd = core.svd(true, true);
            let (ua, vb) = match (svd.u, svd.v_t) {
                (Some(ua), Some(vt)) => (ua, vt.adjoint()),
                _ => return Err(Error::Pairing("SVD did not converge".into())),
            };
            let a2 = a * ua;
            let b2 = bb * vb;
            for (cc, &j) in top.iter().enumerate() {
                u1.set_column(j, &a2.column(cc));
                u2.set_column(j, &b2.column(cc));
                sines[j] = svd.singular_values[cc];
                cosines[j] = (a2.column(cc).dotc(&(&p * a2.column(cc)))).re;
            }
        }
    }
    let mut q: Vec<f64> = (0..n).map(|j| 0.5 * sines[j].atan2(cosines[j])).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let mut v1 = CMat::zeros(n, n);
    let mut v2 = CMat::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        let a = u1.column(j).into_owned();
        let bb = u2.column(j).into_owned();
        let ph = frame_phase(&a, &bb);
        v1.set_column(jj, &(a * ph));
        v2.set_column(jj, &(bb * ph));
    }
    q = order.iter().map(|&j| q[j]).collect();
    let eta = from_c_basis(&v1, &v2);
    let rec = &eta * diag(&exp_iq(&q, 2.0)) * eta.adjoint();
    let err = (rec - b).norm();
    if err > tol * 1.0_f64.max(b.norm()) * 1e3 {
        return Err(Error::Consistency(format!("Cartan decomposition residual {err:e}")));
    }
    Ok((eta, q))
}

/// Determinant of the submatrix on the given rows and columns.
pub fn minor(m: &CMat, rows: &[usize], cols: &[usize]) -> Complex64 {
    if rows.is_empty() {
        return ONE;
    }
    CMat::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])]).determinant()
}

/// Sign of a permutation given as a sequence of distinct indices.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1.0;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = p[k];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
}

/// Violation of Jacobi's complementary-minor identity for a `det = 1`
/// matrix: `B(rows[..p] | cols[..p]) = sgn * A(rows[p..] | cols[p..])`
/// with `B = (A^-1)^T`. Indices are zero-based.
pub fn jacobi_minor_residual(a: &CMat, rows: &[usize], cols: &[usize], p: usize) -> Result<f64> {
    let n = a.nrows();
    if !a.is_square() || !is_permutation(rows, n) || !is_permutation(cols, n) || p == 0 || p >= n {
        return Err(Error::Invalid("need a square matrix, two index permutations and 1 <= p < N".into()));
    }
    let det = a.determinant();
    if !((det - ONE).norm() <= 1e-8) {
        return Err(Error::Invalid(format!("det(A) = {det} is not 1")));
    }
    let b = inverse(a)?.transpose();
    let sgn = permutation_sign(rows) * permutation_sign(cols);
    let lhs = minor(&b, &rows[..p], &cols[..p]);
    let rhs = minor(a, &rows[p..], &cols[p..]) * sgn;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exchange_is_in_gplus() {
        assert_eq!(structure_residual(&exchange(3), Structure::GPlus).unwrap(), 0.0);
    }

    #[test]
    fn identity_is_not_in_gminus_algebra() {
        let r = structure_residual(&CMat::identity(2, 2), Structure::LieMinus).unwrap();
        assert_abs_diff_eq!(r, (8.0f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn hand_checked_gminus_element() {
        let x = CMat::from_row_slice(2, 2, &[ZERO, c(2.0, 0.0), c(-2.0, 0.0), ZERO]);
        assert_eq!(structure_residual(&x, Structure::LieMinus).unwrap(), 0.0);
    }

    #[test]
    fn split_of_i_c_and_of_diagonal() {
        let ic = exchange(2) * I;
        let (p, m) = gamma_split(&ic, 1e-12).unwrap();
        assert_eq!(p, ic);
        assert_eq!(m.norm(), 0.0);
        let y = real_diag(&[0.3, 0.1, -0.3, -0.1]) * I;
        let (p, m) = gamma_split(&y, 1e-12).unwrap();
        assert_eq!(p.norm(), 0.0);
        assert_eq!(m, y);
    }

    #[test]
    fn split_rejects_non_anti_hermitian() {
        assert!(gamma_split(&CMat::identity(2, 2), 1e-12).is_err());
    }

    #[test]
    fn pair_diagonalize_two_by_two() {
        let y = CMat::from_row_slice(2, 2, &[ZERO, c(2.0, 0.0), c(-2.0, 0.0), ZERO]);
        let s = pair_diagonalize_gminus(&y, 1e-12).unwrap();
        assert_abs_diff_eq!(s.values[0], 2.0, epsilon = 1e-14);
        let r = 0.5f64.sqrt();
        let expected = CMat::from_row_slice(2, 2, &[c(r, 0.0), c(0.0, r), c(0.0, r), c(r, 0.0)]);
        assert!((&s.frame - expected).norm() < 1e-14, "{}", s.frame);
        assert!((s.reconstruct() - y).norm() < 1e-14);
    }

    #[test]
    fn pair_diagonalize_zero() {
        let s = pair_diagonalize_gminus(&CMat::zeros(4, 4), 1e-12).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);
        assert!(structure_residual(&s.frame, Structure::GPlus).unwrap() < 1e-14);
        assert_eq!(s.reconstruct().norm(), 0.0);
    }

    #[test]
    fn cartan_of_canonical_element() {
        let b = diag(&exp_iq(&[PI / 6.0], 2.0));
        let (eta, q) = cartan_decompose_gminus(&b, 1e-12).unwrap();
        assert_abs_diff_eq!(q[0], PI / 6.0, epsilon = 1e-14);
        assert!((eta - CMat::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn cartan_of_identity() {
        let (_, q) = cartan_decompose_gminus(&CMat::identity(6, 6), 1e-12).unwrap();
        assert_eq!(q, vec![0.0; 3]);
    }

    #[test]
    fn cartan_of_minus_c_is_unpairable() {
        let b = exchange(1) * c(-1.0, 0.0);
        assert!(matches!(cartan_decompose_gminus(&b, 1e-12), Err(Error::Pairing(_))));
    }

    #[test]
    fn cartan_of_boundary_angles() {
        let b = diag(&exp_iq(&[PI / 2.0, 0.4, 0.0], 2.0));
        let (eta, q) = cartan_decompose_gminus(&b, 1e-12).unwrap();
        assert_abs_diff_eq!(q[0], PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(q[2], 0.0, epsilon = 1e-12);
        assert!(structure_residual(&eta, Structure::GPlus).unwrap() < 1e-12);
    }

    #[test]
    fn jacobi_two_by_two() {
        let a = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(jacobi_minor_residual(&a, &[0, 1], &[0, 1], 1).unwrap() < 1e-14);
    }

    #[test]
    fn jacobi_identity_matrix() {
        let a = CMat::identity(4, 4);
        for p in 1..4 {
            assert_eq!(jacobi_minor_residual(&a, &[2, 0, 3, 1], &[2, 0, 3, 1], p).unwrap(), 0.0);
            assert_eq!(jacobi_minor_residual(&a, &[0, 1, 2, 3], &[0, 1, 2, 3], p).unwrap(), 0.0);
        }
    }

    #[test]
    fn jacobi_rejects_bad_determinant() {
        let a = CMat::identity(2, 2) * c(2.0, 0.0);
        assert!(jacobi_minor_residual(&a, &[0, 1], &[0, 1], 1).is_err());
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = StructuredMatrix::new(exchange(1) * I, Some(Structure::LiePlus));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"size":2,"tag":"gplus","entries":[[0.0,0.0],[0.0,1.0],[0.0,1.0],[0.0,0.0]]}"#);
        let back: StructuredMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn general_eigenvalues_of_exchange() {
        let ev = eigenvalues(&(exchange(2) * I)).unwrap();
        let want = [-1.0, -1.0, 1.0, 1.0];
        for (e, w) in ev.iter().zip(want) {
            assert!((e - Complex64::new(0.0, w)).norm() < 1e-12, "{ev:?}");
        }
    }
}
