//! Dense symmetric-matrix kernel.
//!
//! Matrices are small (tens to a few hundred rows) so everything is stored
//! densely in row-major order; sparsity is exploited only through the graph
//! structure handed in by callers. Nothing here adds jitter: a non-positive
//! pivot is reported as an error.
//!
//! Wishart draws use the `(δ, D)` parameterisation in which the density is
//! proportional to `|W|^{(δ-2)/2} exp(-tr(W D)/2)`. In the usual
//! degrees-of-freedom/scale notation this is `Wishart(δ + k - 1, D⁻¹)` for a
//! `k × k` matrix.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.rows()
    }
}

/// Real symmetric matrix. Writes go to both triangles so symmetry is exact.
/// Serialises as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rows must form an exactly symmetric square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != rows[j][i] {
                    return Err(Error::Domain(format!("matrix not symmetric at ({i}, {j})")));
                }
                m.data[i * n + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &SymMatrix, s: f64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self += w · y yᵀ`.
    pub fn add_outer(&mut self, y: &[f64], w: f64) {
        assert_eq!(y.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let wy = w * y[i];
            for j in i..n {
                let v = self.data[i * n + j] + wy * y[j];
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// `yᵀ M y`.
    pub fn quad_form(&self, y: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            s += y[i] * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        }
        s
    }

    /// Trace inner product `⟨A, B⟩ = tr(AᵀB)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        let mut m = SymMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * k + b] = self.get(i, j);
            }
        }
        m
    }

    /// Rows and columns reindexed together: entry `(v, w)` moves to
    /// `(perm.position(v), perm.position(w))`.
    pub fn permuted(&self, perm: &Permutation) -> SymMatrix {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut m = SymMatrix::zeros(n);
        for a in 0..n {
            let pa = perm.position(a);
            for b in 0..n {
                m.data[pa * n + perm.position(b)] = self.data[a * n + b];
            }
        }
        m
    }

    /// Sets every off-diagonal entry outside `g` to exactly zero.
    pub fn zero_outside(&mut self, g: &Graph) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                if !g.has_edge(i, j) {
                    self.data[i * n + j] = 0.0;
                    self.data[j * n + i] = 0.0;
                }
            }
        }
    }

    /// Largest `|M_ij|` over off-diagonal pairs not in `g`.
    pub fn max_abs_outside(&self, g: &Graph) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !g.has_edge(i, j) {
                    worst = worst.max(self.get(i, j).abs());
                }
            }
        }
        worst
    }

    /// Upper triangle in row-major order, diagonal included.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.data[i * self.n + i..(i + 1) * self.n]);
        }
        out
    }

    pub fn is_positive_definite(&self) -> bool {
        cholesky(self).is_ok()
    }

    pub fn inverse(&self) -> Result<SymMatrix> {
        let phi = cholesky(self)?;
        let n = self.n;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            let x = phi.solve_gram(&e);
            for r in c..n {
                inv.set(r, c, x[r]);
            }
        }
        Ok(inv)
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(cholesky(self)?.log_det_gram())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv_rows(out, &self.rows())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<SymMatrix> {
        SymMatrix::from_rows(&read_csv_rows(input)?)
    }
}

/// Upper-triangular `Φ` with `ΦᵀΦ = K`, plus the pattern `F` of entries
/// allowed to be non-zero above the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
    fill: Graph,
}

impl CholeskyFactor {
    /// Upper-triangular matrix from row-major data. Entries below the diagonal
    /// must be zero.
    pub fn from_upper(n: usize, data: Vec<f64>, fill: Graph) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if fill.p() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: fill.p(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != 0.0 {
                    return Err(Error::Domain(format!("entry ({i}, {j}) below diagonal")));
                }
            }
        }
        Ok(CholeskyFactor { n, data, fill })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        CholeskyFactor {
            n,
            data,
            fill: Graph::empty(n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j);
        self.data[i * self.n + j] = v;
    }

    pub fn fill(&self) -> &Graph {
        &self.fill
    }

    pub fn set_fill(&mut self, fill: Graph) {
        assert_eq!(fill.p(), self.n);
        self.fill = fill;
    }

    /// `ΦᵀΦ`.
    pub fn gram(&self) -> SymMatrix {
        let n = self.n;
        let mut k = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for l in 0..=i {
                    s += self.data[l * n + i] * self.data[l * n + j];
                }
                k.set(i, j, s);
            }
        }
        k
    }

    /// `log |ΦᵀΦ|`.
    pub fn log_det_gram(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.get(i, i).ln()).sum()
    }

    /// Solves `Φ x = b` (back substitution).
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.data[i * n + j] * x[j];
            }
            x[i] = s / self.data[i * n + i];
        }
        x
    }

    /// Solves `Φᵀ x = b` (forward substitution).
    pub fn solve_upper_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for l in 0..i {
                s -= self.data[l * n + i] * x[l];
            }
            x[i] = s / self.data[i * n + i];
        }
        x
    }

    /// Solves `ΦᵀΦ x = b`.
    pub fn solve_gram(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_upper_transpose(b))
    }

    /// Largest off-pattern entry above the diagonal.
    pub fn max_abs_outside_fill(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.fill.has_edge(i, j) {
                    worst = worst.max(self.get(i, j).abs());
                }
            }
        }
        worst
    }
}

/// Overwrites the upper triangle of the row-major `n × n` buffer with its
/// upper Cholesky factor. Entries below the diagonal are not read.
pub(crate) fn factor_in_place(a: &mut [f64], n: usize) -> Result<()> {
    for i in 0..n {
        let mut d = a[i * n + i];
        for l in 0..i {
            d -= a[l * n + i] * a[l * n + i];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i, value: d });
        }
        let dii = d.sqrt();
        a[i * n + i] = dii;
        for j in i + 1..n {
            let mut s = a[i * n + j];
            for l in 0..i {
                s -= a[l * n + i] * a[l * n + j];
            }
            a[i * n + j] = s / dii;
        }
    }
    Ok(())
}

/// Upper Cholesky factor of a positive definite matrix. The recorded fill
/// pattern is the numerical non-zero structure of the result.
pub fn cholesky(k: &SymMatrix) -> Result<CholeskyFactor> {
    let n = k.n();
    let mut data = k.data.clone();
    factor_in_place(&mut data, n)?;
    Ok(finish_factor(n, data))
}

/// Cholesky factor of `K` with rows and columns taken in `order`, i.e. of
/// `P K Pᵀ` where node `order[r]` moves to position `r`.
pub(crate) fn cholesky_in_order(k: &SymMatrix, order: &[usize]) -> Result<CholeskyFactor> {
    let n = k.n();
    debug_assert_eq!(order.len(), n);
    let mut data = vec![0.0; n * n];
    for (r, &a) in order.iter().enumerate() {
        for (c, &b) in order.iter().enumerate().skip(r) {
            data[r * n + c] = k.get(a, b);
        }
    }
    factor_in_place(&mut data, n)?;
    Ok(finish_factor(n, data))
}

fn finish_factor(n: usize, mut data: Vec<f64>) -> CholeskyFactor {
    let mut fill = Graph::empty(n);
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = 0.0;
        }
        for j in i + 1..n {
            if data[i * n + j] != 0.0 {
                fill.add_edge(i, j);
            }
        }
    }
    CholeskyFactor { n, data, fill }
}

/// Fills entries of `F ∖ G` so that `ΦᵀΦ` vanishes off `G`:
/// `Φ_ij = -(1/Φ_ii) Σ_{l<i} Φ_li Φ_lj` for `i < j`, `(i, j) ∈ F ∖ G`.
/// Entries outside `F` are left at zero. The result carries `F` as its fill.
pub fn complete_phi(phi_free: &CholeskyFactor, g: &Graph, f: &Graph) -> Result<CholeskyFactor> {
    let mut phi = phi_free.clone();
    complete_in_place(&mut phi, g, f)?;
    Ok(phi)
}

/// In-place form of [`complete_phi`].
pub(crate) fn complete_in_place(phi: &mut CholeskyFactor, g: &Graph, f: &Graph) -> Result<()> {
    let n = phi.n();
    if g.p() != n || f.p() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if g.p() != n { g.p() } else { f.p() },
        });
    }
    for i in 0..n {
        let dii = phi.get(i, i);
        if dii == 0.0 {
            return Err(Error::ZeroDiagonal(i));
        }
        for j in i + 1..n {
            if f.has_edge(i, j) && !g.has_edge(i, j) {
                let mut s = 0.0;
                for l in 0..i {
                    s += phi.get(l, i) * phi.get(l, j);
                }
                phi.set(i, j, -s / dii);
            }
        }
    }
    if &phi.fill != f {
        phi.fill = f.clone();
    }
    Ok(())
}

/// Reindexes rows and columns of `m` by `perm`.
pub fn permute(m: &SymMatrix, perm: &Permutation) -> SymMatrix {
    m.permuted(perm)
}

/// Draw from the density `∝ |W|^{(δ-2)/2} exp(-tr(W D)/2)` by the Bartlett
/// decomposition (degrees of freedom `δ + k - 1`, scale `D⁻¹`).
pub fn sample_wishart<R: Rng + ?Sized>(delta: f64, d: &SymMatrix, rng: &mut R) -> Result<SymMatrix> {
    let k = d.n();
    let idx: Vec<usize> = (0..k).collect();
    let mut out = vec![0.0; k * k];
    Scratch::default().wishart_into(delta, d, &idx, rng, &mut out)?;
    Ok(SymMatrix::from_fn(k, |i, j| out[i * k + j]))
}

/// `K_{a,b} K_b⁻¹ K_{b,a}` together with `log |K_b|`.
#[cfg(test)]
pub(crate) fn schur_term(k: &SymMatrix, a: &[usize], b: &[usize]) -> Result<(SymMatrix, f64)> {
    let q = a.len();
    let mut out = vec![0.0; q * q];
    let mut scratch = Scratch::default();
    scratch.schur_into(k, a, b, &mut out)?;
    let log_det = scratch.last_log_det();
    Ok((SymMatrix::from_fn(q, |x, y| out[x * q + y]), log_det))
}

/// Reusable buffers for the dense kernels that run inside sampler loops.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    lhs: Vec<f64>,
    rhs: Vec<f64>,
}

impl Scratch {
    /// Writes `K_{a,b} K_b⁻¹ K_{b,a}` into `out` (row-major `|a| × |a|`).
    /// `log |K_b|` is available from [`Scratch::last_log_det`] until the
    /// next call.
    pub(crate) fn schur_into(&mut self, k: &SymMatrix, a: &[usize], b: &[usize], out: &mut [f64]) -> Result<()> {
        let (m, q) = (b.len(), a.len());
        out[..q * q].iter_mut().for_each(|x| *x = 0.0);
        self.lhs.clear();
        if m == 0 {
            return Ok(());
        }
        self.lhs.resize(m * m, 0.0);
        self.rhs.clear();
        self.rhs.resize(m * q, 0.0);
        let (kb, rhs) = (&mut self.lhs[..], &mut self.rhs[..]);
        for (r, &br) in b.iter().enumerate() {
            for (c, &bc) in b.iter().enumerate().skip(r) {
                kb[r * m + c] = k.get(br, bc);
            }
            for (c, &ac) in a.iter().enumerate() {
                rhs[r * q + c] = k.get(br, ac);
            }
        }
        factor_in_place(kb, m)?;
        // rhs ← Φ⁻ᵀ K_{b,a}
        for r in 0..m {
            let dii = kb[r * m + r];
            for c in 0..q {
                let mut s = rhs[r * q + c];
                for l in 0..r {
                    s -= kb[l * m + r] * rhs[l * q + c];
                }
                rhs[r * q + c] = s / dii;
            }
        }
        for x in 0..q {
            for y in x..q {
                let v: f64 = (0..m).map(|r| rhs[r * q + x] * rhs[r * q + y]).sum();
                out[x * q + y] = v;
                out[y * q + x] = v;
            }
        }
        Ok(())
    }

    /// `log |K_b|` for the last [`Scratch::schur_into`] call.
    pub(crate) fn last_log_det(&self) -> f64 {
        let m = self.lhs.len().isqrt();
        (0..m).map(|r| 2.0 * self.lhs[r * m + r].ln()).sum()
    }

    /// Draws `W ~ W(δ, D_idx)` into `out` (row-major `|idx| × |idx|`), using
    /// the Bartlett decomposition.
    pub(crate) fn wishart_into<R: Rng + ?Sized>(
        &mut self,
        delta: f64,
        d: &SymMatrix,
        idx: &[usize],
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        let k = idx.len();
        // D = RᵀR, so D⁻¹ = R⁻¹R⁻ᵀ and W = (R⁻¹A)(R⁻¹A)ᵀ for Bartlett factor A.
        self.lhs.clear();
        self.lhs.resize(k * k, 0.0);
        for (r, &x) in idx.iter().enumerate() {
            for (c, &y) in idx.iter().enumerate().skip(r) {
                self.lhs[r * k + c] = d.get(x, y);
            }
        }
        factor_in_place(&mut self.lhs, k)?;
        let r = &self.lhs;
        let df = delta + k as f64 - 1.0;
        self.rhs.clear();
        self.rhs.resize(k * k, 0.0);
        let b = &mut self.rhs;
        for i in 0..k {
            let chi = ChiSquared::new(df - i as f64)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng);
            b[i * k + i] = chi.sqrt();
            for j in 0..i {
                b[i * k + j] = rng.sample(StandardNormal);
            }
        }
        // B ← R⁻¹A by back substitution, one column at a time
        for c in 0..k {
            for i in (0..k).rev() {
                let mut s = b[i * k + c];
                for j in i + 1..k {
                    s -= r[i * k + j] * b[j * k + c];
                }
                b[i * k + c] = s / r[i * k + i];
            }
        }
        for i in 0..k {
            for j in i..k {
                let v: f64 = (0..k).map(|c| b[i * k + c] * b[j * k + c]).sum();
                out[i * k + j] = v;
                out[j * k + i] = v;
            }
        }
        Ok(())
    }
}

pub fn write_csv_rows<W: Write>(out: W, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(p: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(p, edges).unwrap()
    }

    #[test]
    fn cholesky_examples() {
        let phi = cholesky(&SymMatrix::identity(3)).unwrap();
        assert_eq!(phi, CholeskyFactor::identity(3));

        let k = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let phi = cholesky(&k).unwrap();
        assert_eq!((phi.get(0, 0), phi.get(0, 1), phi.get(1, 1)), (2.0, 1.0, 2.0));
        assert_eq!(phi.gram(), k);

        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&bad), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn cholesky_reconstructs_well_conditioned_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = sample_wishart(8.0, &SymMatrix::identity(7), &mut rng).unwrap();
        let back = cholesky(&k).unwrap().gram();
        assert!(back.max_abs_diff(&k) <= 1e-12 * k.norm_inf());
    }

    #[test]
    fn complete_phi_zero_constraint_example() {
        // G = {(1,2),(1,3)}: fill adds (2,3)
        let graph = g(3, &[(0, 1), (0, 2)]);
        let f = g(3, &[(0, 1), (0, 2), (1, 2)]);
        let mut free = CholeskyFactor::identity(3);
        free.set(0, 1, 1.0);
        free.set(0, 2, 2.0);
        let phi = complete_phi(&free, &graph, &f).unwrap();
        assert_eq!(phi.get(1, 2), -2.0);
        let k = phi.gram();
        assert_eq!(k.get(1, 2), 0.0);
        assert_eq!(phi.fill(), &f);
    }

    #[test]
    fn complete_phi_trivial_graphs() {
        let mut free = CholeskyFactor::identity(3);
        free.set(0, 1, 0.3);
        free.set(0, 2, -0.4);
        free.set(1, 2, 0.7);
        let full = Graph::complete(3);
        let out = complete_phi(&free, &full, &full).unwrap();
        assert_eq!(out.gram(), {
            let mut c = free.clone();
            c.set_fill(full.clone());
            c.gram()
        });

        let diag = CholeskyFactor::identity(4);
        let out = complete_phi(&diag, &Graph::empty(4), &Graph::empty(4)).unwrap();
        assert_eq!(out.gram(), SymMatrix::identity(4));

        let mut zero = CholeskyFactor::identity(2);
        zero.set(1, 1, 0.0);
        assert!(matches!(
            complete_phi(&zero, &Graph::empty(2), &Graph::empty(2)),
            Err(Error::ZeroDiagonal(1))
        ));
    }

    #[test]
    fn permute_examples() {
        let m = SymMatrix::diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(permute(&m, &Permutation::identity(3)), m);
        let swap = Permutation::from_order(vec![1, 0, 2]).unwrap();
        assert_eq!(permute(&m, &swap), SymMatrix::diagonal(&[2.0, 1.0, 3.0]));
    }

    #[test]
    fn wishart_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_wishart(0.0, &SymMatrix::identity(2), &mut rng).is_err());
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(sample_wishart(3.0, &bad, &mut rng).is_err());
    }

    #[test]
    fn wishart_scalar_mean_is_delta_over_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = SymMatrix::diagonal(&[2.0]);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_wishart(3.0, &d, &mut rng).unwrap().get(0, 0))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // Gamma(3/2, rate 1): mean 1.5, sd sqrt(1.5)
        assert!((mean - 1.5).abs() < 4.0 * (1.5f64).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn wishart_matrix_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, 1.5]]).unwrap();
        let delta = 4.0;
        let n = 20_000;
        let mut sum = SymMatrix::zeros(3);
        let mut sumsq = SymMatrix::zeros(3);
        for _ in 0..n {
            let w = sample_wishart(delta, &d, &mut rng).unwrap();
            assert!(w.is_positive_definite());
            sum.add_assign_scaled(&w, 1.0);
            for i in 0..3 {
                for j in i..3 {
                    sumsq.set(i, j, sumsq.get(i, j) + w.get(i, j).powi(2));
                }
            }
        }
        let expect = d.inverse().unwrap().scaled(delta + 2.0);
        for i in 0..3 {
            for j in i..3 {
                let m = sum.get(i, j) / n as f64;
                let var = sumsq.get(i, j) / n as f64 - m * m;
                let se = (var / n as f64).sqrt();
                assert!((m - expect.get(i, j)).abs() < 4.0 * se, "({i},{j}) {m} vs {}", expect.get(i, j));
            }
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = sample_wishart(5.0, &SymMatrix::identity(4), &mut rng).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(SymMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn inverse_and_schur() {
        let k = SymMatrix::from_rows(&[vec![4.0, 2.0, 0.0], vec![2.0, 5.0, 1.0], vec![0.0, 1.0, 3.0]]).unwrap();
        let inv = k.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|l| k.get(i, l) * inv.get(l, j)).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        // K_{0,rest} K_rest^{-1} K_{rest,0} = 4 - 1/inv_00
        let (m, _) = schur_term(&k, &[0], &[1, 2]).unwrap();
        assert!((m.get(0, 0) - (4.0 - 1.0 / inv.get(0, 0))).abs() < 1e-13);
    }
}
