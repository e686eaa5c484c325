//! Operator-size basis: products over sites of {1, c, c†, n - n̄} form an
//! orthogonal basis of operator space at chemical potential μ̄.  Tools here
//! project evolved operators onto that basis, assemble size-block matrix
//! elements of the Liouvillian, and check the sum rule that caps the exact
//! out-of-time-order correlator by the mean operator size.

use super::{jw_sign, length, FockOperator, MuEnsemble};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default cap on exact-diagonalization system size.
pub const MAX_SITES_DEFAULT: usize = 6;
/// Hard cap even with the override.
pub const MAX_SITES: usize = 8;

const LABEL_ID: u64 = 0;
const LABEL_C: u64 = 1;
const LABEL_CDAG: u64 = 2;
const LABEL_NBAR: u64 = 3;

/// The 4^N orthogonal basis strings at fixed μ̄, grouped by size.
pub struct SizeBasis {
    pub n_sites: usize,
    pub mu_bar: f64,
    /// codes\[s\] lists the strings of size s (2 bits per site, site i in
    /// bits 2i..2i+2).
    pub codes: Vec<Vec<u64>>,
}

/// Size of one string: per-site sizes are {0, 1, 1, 2}.
pub fn string_size(code: u64, n_sites: usize) -> usize {
    let mut s = 0;
    for i in 0..n_sites {
        s += match code >> (2 * i) & 3 {
            LABEL_ID => 0,
            LABEL_NBAR => 2,
            _ => 1,
        };
    }
    s
}

/// Squared norm (T|T) of one string: product of per-site lengths.
pub fn string_length_sq(code: u64, n_sites: usize, mu_bar: f64) -> f64 {
    let l1 = (-mu_bar / 2.0_f64).exp() / (1.0 + (-mu_bar).exp());
    let l2 = (-mu_bar).exp() / (1.0 + (-mu_bar).exp()).powi(2);
    let mut out = 1.0;
    for i in 0..n_sites {
        out *= match code >> (2 * i) & 3 {
            LABEL_ID => 1.0,
            LABEL_NBAR => l2,
            _ => l1,
        };
    }
    out
}

/// Apply the string to basis state `b`; factors act in ascending site order
/// (site 0 first), with Jordan-Wigner signs.  Returns (output state,
/// amplitude) or None if annihilated.
pub fn string_action(code: u64, n_sites: usize, n_bar: f64, b: u64) -> Option<(u64, f64)> {
    let mut cur = b;
    let mut amp = 1.0f64;
    for i in 0..n_sites {
        match code >> (2 * i) & 3 {
            LABEL_ID => {}
            LABEL_C => {
                if cur >> i & 1 == 0 {
                    return None;
                }
                amp *= jw_sign(cur, i);
                cur &= !(1u64 << i);
            }
            LABEL_CDAG => {
                if cur >> i & 1 == 1 {
                    return None;
                }
                amp *= jw_sign(cur, i);
                cur |= 1u64 << i;
            }
            _ => {
                amp *= (cur >> i & 1) as f64 - n_bar;
            }
        }
    }
    Some((cur, amp))
}

/// Dense matrix of one basis string.
pub fn string_matrix(code: u64, n_sites: usize, n_bar: f64) -> FockOperator {
    let mut op = FockOperator::zeros(n_sites);
    for b in 0..(1u64 << n_sites) {
        if let Some((out, amp)) = string_action(code, n_sites, n_bar, b) {
            op.mat[(out as usize, b as usize)] = Complex64::new(amp, 0.0);
        }
    }
    op
}

impl SizeBasis {
    pub fn new(n_sites: usize, mu_bar: f64) -> Result<Self> {
        Self::with_cap(n_sites, mu_bar, MAX_SITES_DEFAULT)
    }

    /// Explicit opt-in for N = 7, 8; `cap` above [`MAX_SITES`] is still
    /// refused.
    pub fn with_cap(n_sites: usize, mu_bar: f64, cap: usize) -> Result<Self> {
        let cap = cap.min(MAX_SITES);
        if n_sites > cap {
            return Err(Error::ResourceCap(format!(
                "{n_sites} sites exceeds exact-diagonalization cap {cap}"
            )));
        }
        if n_sites == 0 {
            return Err(Error::GeometryTooSmall("zero sites".into()));
        }
        let mut codes = vec![Vec::new(); 2 * n_sites + 1];
        for code in 0..(1u64 << (2 * n_sites)) {
            codes[string_size(code, n_sites)].push(code);
        }
        Ok(SizeBasis { n_sites, mu_bar, codes })
    }

    pub fn ensemble(&self) -> MuEnsemble {
        MuEnsemble::new(self.mu_bar, self.n_sites)
    }

    /// (T_code | A) using the implicit string action, O(2^N).
    pub fn project(&self, code: u64, a: &FockOperator, weights: &[f64]) -> Complex64 {
        let n_bar = self.ensemble().n_bar();
        let mut acc = Complex64::ZERO;
        for b in 0..(1u64 << self.n_sites) {
            if let Some((out, amp)) = string_action(code, self.n_sites, n_bar, b) {
                acc += weights[out as usize] * weights[b as usize] * amp
                    * a.mat[(out as usize, b as usize)];
            }
        }
        acc
    }
}

/// Probability distribution over operator sizes 0..=2N.
#[derive(Debug, Clone)]
pub struct SizeDistribution {
    pub p: Vec<f64>,
    pub mean: f64,
}

/// P_s = Σ_{|T|=s} |(T|A)|² / ((T|T)(A|A)).
pub fn size_distribution(a: &FockOperator, basis: &SizeBasis) -> Result<SizeDistribution> {
    if a.n_sites != basis.n_sites {
        return Err(Error::DimensionMismatch(a.dim(), 1 << basis.n_sites));
    }
    let ens = basis.ensemble();
    let weights = ens.sqrt_rho_weights();
    let norm = length(a, &ens)?;
    if norm <= 0.0 {
        return Err(Error::ZeroLength);
    }
    let mut p = vec![0.0; basis.codes.len()];
    for (s, codes) in basis.codes.iter().enumerate() {
        for &code in codes {
            let t = basis.project(code, a, &weights);
            p[s] += t.norm_sqr() / string_length_sq(code, basis.n_sites, basis.mu_bar);
        }
    }
    for v in p.iter_mut() {
        *v /= norm;
    }
    let mean = p.iter().enumerate().map(|(s, v)| s as f64 * v).sum();
    Ok(SizeDistribution { p, mean })
}

/// Matrix elements of L = i[H, ·] between the orthonormalized strings of
/// sizes `s_row` and `s_col`: M_{ab} = (T̂_a | L T̂_b).
pub fn liouvillian_block(
    h: &FockOperator,
    basis: &SizeBasis,
    s_row: usize,
    s_col: usize,
) -> Result<DMatrix<Complex64>> {
    if h.n_sites != basis.n_sites {
        return Err(Error::DimensionMismatch(h.dim(), 1 << basis.n_sites));
    }
    let rows = basis
        .codes
        .get(s_row)
        .filter(|c| !c.is_empty())
        .ok_or(Error::EmptySizeBlock(s_row))?;
    let cols = basis
        .codes
        .get(s_col)
        .filter(|c| !c.is_empty())
        .ok_or(Error::EmptySizeBlock(s_col))?;
    let ens = basis.ensemble();
    let weights = ens.sqrt_rho_weights();
    let n_bar = ens.n_bar();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (bj, &col_code) in cols.iter().enumerate() {
        let tb = string_matrix(col_code, basis.n_sites, n_bar);
        let lb = FockOperator {
            mat: (&h.mat * &tb.mat - &tb.mat * &h.mat) * Complex64::i(),
            n_sites: basis.n_sites,
        };
        let nb = string_length_sq(col_code, basis.n_sites, basis.mu_bar).sqrt();
        for (ai, &row_code) in rows.iter().enumerate() {
            let na = string_length_sq(row_code, basis.n_sites, basis.mu_bar).sqrt();
            m[(ai, bj)] = basis.project(row_code, &lb, &weights) / (na * nb);
        }
    }
    Ok(m)
}

/// One (μ̄, size pair) entry of the block-norm bound check.
#[derive(Debug, Clone, Copy)]
pub struct BlockNormPoint {
    pub mu_bar: f64,
    pub s_row: usize,
    pub s_col: usize,
    pub norm: f64,
    pub norm_mu0: f64,
    pub bound: f64,
    /// Relative violation max(0, (norm - bound)/bound).
    pub violation: f64,
}

/// Check ‖Q_s L Q_{s'}‖ ≤ ‖·‖_{μ̄=0} / cosh^{|s-s'|/2}(μ̄/2) for one
/// Hamiltonian across a μ̄ grid.
pub fn block_bound_report(
    h: &FockOperator,
    s_row: usize,
    s_col: usize,
    mu_grid: &[f64],
) -> Result<Vec<BlockNormPoint>> {
    let basis0 = SizeBasis::with_cap(h.n_sites, 0.0, MAX_SITES)?;
    let norm_mu0 = liouvillian_block(h, &basis0, s_row, s_col)?
        .svd(false, false)
        .singular_values
        .max();
    let gap = s_row.abs_diff(s_col) as i32;
    let mut out = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let basis = SizeBasis::with_cap(h.n_sites, mu, MAX_SITES)?;
        let norm = liouvillian_block(h, &basis, s_row, s_col)?
            .svd(false, false)
            .singular_values
            .max();
        let bound = norm_mu0 / (mu / 2.0_f64).cosh().powi(gap).sqrt();
        let violation = if bound > 0.0 {
            ((norm - bound) / bound).max(0.0)
        } else {
            norm.max(0.0)
        };
        out.push(BlockNormPoint { mu_bar: mu, s_row, s_col, norm, norm_mu0, bound, violation });
    }
    Ok(out)
}

/// Exact OTOC row C_ij(t) for all i at fixed j, plus the size sum rule.
#[derive(Debug, Clone)]
pub struct SumRuleReport {
    pub t: f64,
    /// C_ij(t) = ([n_i, c_j(t)] | [n_i, c_j(t)]) / (c_j | c_j) for each i.
    pub c: Vec<f64>,
    pub c_sum: f64,
    /// (c_j(t) | S | c_j(t)) / (c_j | c_j), S the size superoperator.
    pub size_expectation: f64,
    /// size_expectation - c_sum; the sum rule requires this ≥ 0.
    pub slack: f64,
}

/// Evaluate the commutator sum and the size expectation for c_j evolved to
/// time t under `h` at chemical potential μ̄.
pub fn otoc_exact_and_sumrule(
    h: &FockOperator,
    j_site: usize,
    t: f64,
    basis: &SizeBasis,
) -> Result<SumRuleReport> {
    let n = basis.n_sites;
    if j_site >= n {
        return Err(Error::SiteOutOfRange { index: j_site, n_sites: n });
    }
    let ens = basis.ensemble();
    let cj = FockOperator::annihilation(n, j_site);
    let denom = length(&cj, &ens)?;
    let cjt = super::heisenberg_evolve(&cj, h, t)?;

    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let ni = FockOperator::number(n, i);
        let comm = ni.commutator(&cjt)?;
        c.push(length(&comm, &ens)? / denom);
    }
    let c_sum = c.iter().sum();

    // expectation of the size superoperator from the exact distribution;
    // (c_j(t)|c_j(t)) = (c_j|c_j) so the mean already carries the right
    // normalization
    let dist = size_distribution(&cjt, basis)?;
    let size_expectation = dist.mean;
    Ok(SumRuleReport { t, c, c_sum, size_expectation, slack: size_expectation - c_sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsize::{build_syk_hamiltonian, inner_product, max_abs};
    use crate::stream::{Role, RngStream, StreamKey};
    use approx::assert_relative_eq;

    fn stream(c: u64) -> RngStream {
        RngStream::new(31, StreamKey::new(Role::Coupling, c, 0, 0))
    }

    #[test]
    fn basis_counts() {
        let basis = SizeBasis::new(6, 0.0).unwrap();
        assert_eq!(basis.codes.iter().map(|c| c.len()).sum::<usize>(), 1 << 12);
        assert_eq!(basis.codes[0].len(), 1);
        assert_eq!(basis.codes[1].len(), 12);
        assert_eq!(basis.codes[3].len(), 220);
        assert_eq!(basis.codes[5].len(), 792);
        assert!(SizeBasis::new(7, 0.0).is_err());
        assert!(SizeBasis::with_cap(7, 0.0, 8).is_ok());
        assert!(SizeBasis::with_cap(9, 0.0, 64).is_err());
    }

    #[test]
    fn strings_orthogonal_with_correct_norms() {
        // exhaustive at small N: (T_a|T_b) = delta_ab (T_a|T_a)
        for n in [2usize, 3] {
            for mu in [0.0, 1.7] {
                let ens = MuEnsemble::new(mu, n);
                let n_bar = ens.n_bar();
                let dim = 1u64 << (2 * n);
                let mats: Vec<_> =
                    (0..dim).map(|c| string_matrix(c, n, n_bar)).collect();
                for a in 0..dim as usize {
                    for b in a..dim as usize {
                        let ip = inner_product(&mats[a], &mats[b], &ens).unwrap();
                        if a == b {
                            let expect = string_length_sq(a as u64, n, mu);
                            assert_relative_eq!(ip.re, expect, epsilon = 1e-12);
                            assert!(ip.im.abs() < 1e-12);
                        } else {
                            assert!(ip.norm() < 1e-12, "strings {a},{b} not orthogonal");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn simple_operators_have_definite_size() {
        let basis = SizeBasis::new(4, 1.0).unwrap();
        let c1 = FockOperator::annihilation(4, 0);
        let d = size_distribution(&c1, &basis).unwrap();
        assert_relative_eq!(d.p[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.mean, 1.0, epsilon = 1e-12);

        let mut nb = FockOperator::number(4, 2);
        nb.mat -= FockOperator::identity(4).mat
            * Complex64::new(basis.ensemble().n_bar(), 0.0);
        let d = size_distribution(&nb, &basis).unwrap();
        assert_relative_eq!(d.p[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distribution_normalized_and_parity_preserved() {
        let n = 5usize;
        let basis = SizeBasis::new(n, 0.8).unwrap();
        let h = build_syk_hamiltonian(n, 4, 1.0, &stream(3)).unwrap().hamiltonian;
        let cj = FockOperator::annihilation(n, 2);
        for t in [0.0, 0.7, 3.0] {
            let ct = crate::opsize::heisenberg_evolve(&cj, &h, t).unwrap();
            let d = size_distribution(&ct, &basis).unwrap();
            assert_relative_eq!(d.p.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            // a fermionic operator stays on odd sizes under a q-even H
            for (s, v) in d.p.iter().enumerate() {
                if s % 2 == 0 {
                    assert!(*v < 1e-10, "even size {s} populated: {v}");
                }
            }
        }
    }

    #[test]
    fn liouvillian_antisymmetry() {
        // (T_a|L T_b) = -(T_b|L T_a)* between orthonormalized strings
        let n = 4usize;
        let basis = SizeBasis::new(n, 1.2).unwrap();
        let h = build_syk_hamiltonian(n, 4, 1.0, &stream(5)).unwrap().hamiltonian;
        let m13 = liouvillian_block(&h, &basis, 1, 3).unwrap();
        let m31 = liouvillian_block(&h, &basis, 3, 1).unwrap();
        let defect = max_abs(&(&m13 + m31.adjoint()));
        assert!(defect < 1e-10, "antisymmetry defect {defect}");
        let m11 = liouvillian_block(&h, &basis, 1, 1).unwrap();
        assert!(max_abs(&(&m11 + m11.adjoint())) < 1e-10);
    }

    #[test]
    fn bound_factor_reference_value() {
        assert_relative_eq!(
            1.0 / (1.0f64 / 2.0).cosh().powi(2).sqrt(),
            0.886819,
            epsilon = 1e-6
        );
        // |s - s'| = 2 at mu = 2: 1/cosh(1)
        assert_relative_eq!(
            1.0 / (2.0f64 / 2.0).cosh().powi(2).sqrt(),
            0.648054,
            epsilon = 1e-6
        );
    }

    #[test]
    fn block_bound_holds_small() {
        let n = 4usize;
        let h = build_syk_hamiltonian(n, 4, 1.0, &stream(9)).unwrap().hamiltonian;
        let report = block_bound_report(&h, 1, 3, &[0.0, 1.0, 2.0]).unwrap();
        for p in &report {
            assert!(p.violation <= 1e-9, "violation {} at mu {}", p.violation, p.mu_bar);
        }
        assert_relative_eq!(report[0].norm, report[0].norm_mu0, epsilon = 1e-9);
    }

    #[test]
    fn sum_rule_at_t_zero_is_tight() {
        let n = 4usize;
        let basis = SizeBasis::new(n, 1.0).unwrap();
        let h = build_syk_hamiltonian(n, 4, 1.0, &stream(11)).unwrap().hamiltonian;
        let rep = otoc_exact_and_sumrule(&h, 1, 0.0, &basis).unwrap();
        // c_j has size exactly 1 and only [n_j, c_j] != 0 with C_jj = 1
        assert_relative_eq!(rep.size_expectation, 1.0, epsilon = 1e-10);
        assert_relative_eq!(rep.c_sum, 1.0, epsilon = 1e-10);
        assert!(rep.slack.abs() < 1e-10);
    }

    #[test]
    fn sum_rule_slack_nonnegative() {
        let n = 4usize;
        let basis = SizeBasis::new(n, 1.5).unwrap();
        let h = build_syk_hamiltonian(n, 4, 1.0, &stream(13)).unwrap().hamiltonian;
        for t in [0.3, 1.0, 4.0] {
            let rep = otoc_exact_and_sumrule(&h, 0, t, &basis).unwrap();
            assert!(rep.slack >= -1e-10, "t={t} slack {}", rep.slack);
        }
    }
}
