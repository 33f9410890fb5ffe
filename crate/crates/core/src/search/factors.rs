//! Closed-form pieces of the conditional Bayes factors.
//!
//! Everything is evaluated on the log scale; the `factor_*` wrappers
//! exponentiate for callers that want the raw value.
//!
//! Orientation: `H` is the ratio (edge absent) / (edge present) of the
//! integrated kernels given `K^{-e}`; `N` is (edge present) / (edge absent)
//! given `Φ^{-f}`. For `p = 2` the two are exact reciprocals.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::linalg::{CholeskyFactor, Scratch, SymMatrix};

/// `log I(b, c)` with `I(b, c) = c^{-b/2} 2^{b/2} Γ(b/2)`.
pub fn ln_factor_i(b: f64, c: f64) -> Result<f64> {
    if !(b > 0.0 && c > 0.0) {
        return Err(Error::Domain(format!("I(b, c) needs b, c > 0; got b = {b}, c = {c}")));
    }
    Ok(-0.5 * b * c.ln() + 0.5 * b * std::f64::consts::LN_2 + ln_gamma(0.5 * b))
}

pub fn factor_i(b: f64, c: f64) -> Result<f64> {
    ln_factor_i(b, c).map(f64::exp)
}

/// `log J(h, B, b)` with
/// `J = (2π/B₂₂)^{1/2} b^{(h-1)/2} I(h, B₂₂) exp(-(b/2)(B₁₁ - B₁₂²/B₂₂))`.
pub fn ln_factor_j(h: f64, big_b: &SymMatrix, b: f64) -> Result<f64> {
    if big_b.n() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: big_b.n(),
        });
    }
    let (b11, b12, b22) = (big_b.get(0, 0), big_b.get(0, 1), big_b.get(1, 1));
    if !(b22 > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("J needs B22 > 0 and b > 0; got {b22}, {b}")));
    }
    Ok(0.5 * (2.0 * PI / b22).ln() + 0.5 * (h - 1.0) * b.ln() + ln_factor_i(h, b22)?
        - 0.5 * b * (b11 - b12 * b12 / b22))
}

pub fn factor_j(h: f64, big_b: &SymMatrix, b: f64) -> Result<f64> {
    ln_factor_j(h, big_b, b).map(f64::exp)
}

/// The parts of `H` that depend on `K^{-e}` only. Computing them needs one
/// solve against `K_{V∖j}` and one against `K_{V∖e}`.
#[derive(Clone, Debug)]
pub struct EdgeConditional {
    pub i: usize,
    pub j: usize,
    /// `K_ii`.
    pub k_ii: f64,
    /// `K_{j,V∖j} K_{V∖j}⁻¹ K_{V∖j,j}` with `K_ij` set to zero.
    pub c: f64,
    /// `K_{e,V∖e} K_{V∖e}⁻¹ K_{V∖e,e}` as `(b11, b12, b22)`.
    pub b: (f64, f64, f64),
    pub log_det_minus_j: f64,
    pub log_det_minus_e: f64,
}

impl EdgeConditional {
    pub fn new(k: &SymMatrix, i: usize, j: usize, counters: &mut OpCounters) -> Result<Self> {
        let p = k.n();
        if i == j || i >= p || j >= p {
            return Err(Error::Domain(format!("invalid edge ({i}, {j}) for p = {p}")));
        }
        let minus_j: Vec<usize> = (0..p).filter(|&v| v != j).collect();
        let minus_e: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
        let mut k0 = k.clone();
        k0.set(i, j, 0.0);
        let mut scratch = Scratch::default();
        let mut cj = [0.0];
        let mut be = [0.0; 4];
        scratch.schur_into(&k0, &[j], &minus_j, &mut cj)?;
        let log_det_minus_j = scratch.last_log_det();
        scratch.schur_into(k, &[i, j], &minus_e, &mut be)?;
        let log_det_minus_e = scratch.last_log_det();
        counters.edge_move_inversions += 1 + (!minus_e.is_empty()) as u64;
        Ok(EdgeConditional {
            i,
            j,
            k_ii: k.get(i, i),
            c: cj[0],
            b: (be[0], be[1], be[3]),
            log_det_minus_j,
            log_det_minus_e,
        })
    }

    /// `A₁₁ = K_ii - b11`.
    pub fn a11(&self) -> f64 {
        self.k_ii - self.b.0
    }

    /// `log H(d, e, K^{-e}, S)`.
    pub fn ln_h(&self, d: f64, s: &SymMatrix) -> Result<f64> {
        let (i, j) = (self.i, self.j);
        let (sii, sij, sjj) = (s.get(i, i), s.get(i, j), s.get(j, j));
        let s_ee = SymMatrix::from_rows(&[vec![sii, sij], vec![sij, sjj]])?;
        let a11 = self.a11();
        // ⟨S, K⁰ - K¹⟩: the two matrices differ only on the (i, j) block
        let (b11, b12, b22) = self.b;
        let inner = sii * (self.k_ii - b11) - 2.0 * sij * b12 + sjj * (self.c - b22);
        Ok(ln_factor_i(d, sjj)? - ln_factor_j(d, &s_ee, a11)?
            + 0.5 * (d - 2.0) * (self.log_det_minus_j - self.log_det_minus_e)
            - 0.5 * inner)
    }

    /// Draws `(K_ij, K_jj)` from their conditional given `K^{-e}` under a
    /// `W(d, S)` kernel, with or without the edge.
    pub fn sample<R: rand::Rng + ?Sized>(
        &self,
        d: f64,
        s: &SymMatrix,
        edge: bool,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        use rand_distr::{Distribution, Gamma, Normal};
        let (i, j) = (self.i, self.j);
        let sjj = s.get(j, j);
        let w = Gamma::new(0.5 * d, 2.0 / sjj)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng);
        if edge {
            let a11 = self.a11();
            let u = Normal::new(-a11 * s.get(i, j) / sjj, (a11 / sjj).sqrt())
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(rng);
            Ok((self.b.1 + u, self.b.2 + w + u * u / a11))
        } else {
            Ok((0.0, self.c + w))
        }
    }
}

/// `log H(d, e, K^{-e}, S)` for `e = (i, j)`.
pub fn ln_factor_h(d: f64, e: (usize, usize), k: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    EdgeConditional::new(k, e.0, e.1, &mut OpCounters::default())?.ln_h(d, s)
}

pub fn factor_h(d: f64, e: (usize, usize), k: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    ln_factor_h(d, e, k, s).map(f64::exp)
}

/// Completion value `φ₀ = -Φ_{p-1,p-1}⁻¹ Σ_{l<p-1} Φ_{l,p-1} Φ_{l,p}`
/// (1-based indices) for the last off-diagonal entry.
pub fn completion_value(phi: &CholeskyFactor) -> f64 {
    let p = phi.n();
    let (a, b) = (p - 2, p - 1);
    let s: f64 = (0..a).map(|l| phi.get(l, a) * phi.get(l, b)).sum();
    -s / phi.get(a, a)
}

/// `log N(Φ^{-f}, S)` for `f = (p-1, p)`, depending on `S` only through
/// `S_{p-1,p}` and `S_pp`:
/// `N = Φ_{p-1,p-1} (2π/S_pp)^{1/2} exp(S_pp (φ₀ + μ)² / 2)`,
/// `μ = Φ_{p-1,p-1} S_{p-1,p} / S_pp`.
pub fn ln_factor_n_parts(phi: &CholeskyFactor, s_off: f64, s_pp: f64) -> Result<f64> {
    if phi.n() < 2 {
        return Err(Error::Domain("N needs p >= 2".into()));
    }
    if !(s_pp > 0.0) {
        return Err(Error::Domain(format!("N needs S_pp > 0, got {s_pp}")));
    }
    let p = phi.n();
    Ok(ln_n_from(phi.get(p - 2, p - 2), completion_value(phi), s_off, s_pp))
}

/// `log N` from `Φ_{p-1,p-1}` and the completion value `φ₀`.
pub(crate) fn ln_n_from(diag: f64, phi0: f64, s_off: f64, s_pp: f64) -> f64 {
    let mu = diag * s_off / s_pp;
    diag.ln() + 0.5 * (2.0 * PI / s_pp).ln() + 0.5 * s_pp * (phi0 + mu).powi(2)
}

pub fn ln_factor_n(phi: &CholeskyFactor, s: &SymMatrix) -> Result<f64> {
    let p = phi.n();
    if s.n() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: s.n(),
        });
    }
    if p < 2 {
        return Err(Error::Domain("N needs p >= 2".into()));
    }
    ln_factor_n_parts(phi, s.get(p - 2, p - 1), s.get(p - 1, p - 1))
}

pub fn factor_n(phi: &CholeskyFactor, s: &SymMatrix) -> Result<f64> {
    ln_factor_n(phi, s).map(f64::exp)
}
