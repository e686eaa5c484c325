//! Exact small-N operator formalism at finite chemical potential: the
//! μ̄-weighted inner product, fermionic operators with Jordan-Wigner sign
//! bookkeeping, q-body random Hamiltonians, and Heisenberg evolution by full
//! eigendecomposition.
//!
//! Basis states are bitmasks with site i stored in bit i; Jordan-Wigner
//! strings run over sites below i.

mod size;

pub use size::{
    block_bound_report, otoc_exact_and_sumrule, size_distribution, BlockNormPoint, SizeBasis,
    SizeDistribution, SumRuleReport, MAX_SITES, MAX_SITES_DEFAULT,
};

use crate::error::{Error, Result};
use crate::stream::RngStream;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

/// Grand-canonical ensemble at dimensionless chemical potential μ̄.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuEnsemble {
    pub mu_bar: f64,
    pub n_sites: usize,
}

impl MuEnsemble {
    pub fn new(mu_bar: f64, n_sites: usize) -> Self {
        MuEnsemble { mu_bar, n_sites }
    }

    /// n̄ = 1/(1 + e^{μ̄}).
    pub fn n_bar(&self) -> f64 {
        1.0 / (1.0 + self.mu_bar.exp())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Diagonal of √ρ in the occupation basis:
    /// e^{-μ̄ n(state)/2} / (1+e^{-μ̄})^{N/2}.
    pub fn sqrt_rho_weights(&self) -> Vec<f64> {
        let norm = (1.0 + (-self.mu_bar).exp()).powf(self.n_sites as f64 / 2.0);
        (0..self.dim())
            .map(|b| (-self.mu_bar * (b as u64).count_ones() as f64 / 2.0).exp() / norm)
            .collect()
    }
}

/// Dense operator on the 2^N-dimensional Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub mat: DMatrix<Complex64>,
    pub n_sites: usize,
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[inline]
pub(crate) fn jw_sign(b: u64, i: usize) -> f64 {
    if (b & ((1u64 << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FockOperator {
    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1 << n_sites;
        FockOperator { mat: DMatrix::zeros(dim, dim), n_sites }
    }

    pub fn identity(n_sites: usize) -> Self {
        let dim = 1 << n_sites;
        FockOperator { mat: DMatrix::identity(dim, dim), n_sites }
    }

    /// c_i with Jordan-Wigner string over sites below i.
    pub fn annihilation(n_sites: usize, i: usize) -> Self {
        let mut op = FockOperator::zeros(n_sites);
        for b in 0..(1u64 << n_sites) {
            if b >> i & 1 == 1 {
                let b2 = b & !(1u64 << i);
                op.mat[(b2 as usize, b as usize)] = Complex64::new(jw_sign(b, i), 0.0);
            }
        }
        op
    }

    pub fn creation(n_sites: usize, i: usize) -> Self {
        FockOperator {
            mat: Self::annihilation(n_sites, i).mat.adjoint(),
            n_sites,
        }
    }

    /// n_i = c_i† c_i.
    pub fn number(n_sites: usize, i: usize) -> Self {
        let mut op = FockOperator::zeros(n_sites);
        for b in 0..(1u64 << n_sites) {
            if b >> i & 1 == 1 {
                op.mat[(b as usize, b as usize)] = Complex64::ONE;
            }
        }
        op
    }

    /// Total charge Q = sum_i n_i.
    pub fn total_charge(n_sites: usize) -> Self {
        let mut op = FockOperator::zeros(n_sites);
        for b in 0..(1u64 << n_sites) {
            op.mat[(b as usize, b as usize)] = Complex64::new(b.count_ones() as f64, 0.0);
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn commutator(&self, other: &FockOperator) -> Result<FockOperator> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(FockOperator {
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
            n_sites: self.n_sites,
        })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }
}

/// (A|B) = tr(√ρ A† √ρ B); √ρ is applied as elementwise weights.
pub fn inner_product(a: &FockOperator, b: &FockOperator, ens: &MuEnsemble) -> Result<Complex64> {
    if a.n_sites != b.n_sites || a.n_sites != ens.n_sites {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let w = ens.sqrt_rho_weights();
    let dim = a.dim();
    let mut acc = Complex64::ZERO;
    for col in 0..dim {
        for row in 0..dim {
            let x = a.mat[(row, col)];
            if x != Complex64::ZERO || b.mat[(row, col)] != Complex64::ZERO {
                acc += w[row] * w[col] * x.conj() * b.mat[(row, col)];
            }
        }
    }
    Ok(acc)
}

/// Operator length (A|A), real and non-negative.
pub fn length(a: &FockOperator, ens: &MuEnsemble) -> Result<f64> {
    Ok(inner_product(a, a, ens)?.re)
}

fn index_combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out
}

/// Add coeff * c†_{i1}..c†_{im} c_{j1}..c_{jm} (indices ascending as written;
/// rightmost factor acts first).
fn add_term(op: &mut FockOperator, dag: &[usize], ann: &[usize], coeff: Complex64) {
    let dim = op.dim();
    'state: for b in 0..dim as u64 {
        let mut cur = b;
        let mut sign = 1.0;
        for &j in ann.iter().rev() {
            if cur >> j & 1 == 0 {
                continue 'state;
            }
            sign *= jw_sign(cur, j);
            cur &= !(1u64 << j);
        }
        for &i in dag.iter().rev() {
            if cur >> i & 1 == 1 {
                continue 'state;
            }
            sign *= jw_sign(cur, i);
            cur |= 1u64 << i;
        }
        op.mat[(cur as usize, b as usize)] += coeff * sign;
    }
}

/// Couplings and Hamiltonian of one disorder realization.
pub struct SykRealization {
    pub hamiltonian: FockOperator,
    /// |J_{IJ}|² of every sampled independent coupling, for variance checks.
    pub coupling_sq: Vec<f64>,
}

/// Random fermionic q-body Hamiltonian with the regular-ensemble variance
/// J²(q/2-1)!(q/2)!/N^{q-1}; Hermitian and charge conserving by construction.
pub fn build_syk_hamiltonian(
    n_sites: usize,
    q: usize,
    j: f64,
    stream: &RngStream,
) -> Result<SykRealization> {
    if q % 2 != 0 || q < 4 {
        return Err(Error::OddQ(q));
    }
    if q > 2 * n_sites {
        return Err(Error::Config(format!("q = {q} exceeds 2 N = {}", 2 * n_sites)));
    }
    let m = q / 2;
    let factorial = |x: usize| (1..=x).map(|v| v as f64).product::<f64>();
    let variance =
        j * j * factorial(m - 1) * factorial(m) / (n_sites as f64).powi(q as i32 - 1);
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("positive std");
    let normal_full = Normal::new(0.0, variance.sqrt()).expect("positive std");
    let mut rng = stream.rng();

    // i^{q/2}; hermiticity then requires J_{JI} = (-1)^{q/2} J*_{IJ}
    let phase = Complex64::i().powu(m as u32);
    let diag_sign = if m % 2 == 0 { 1.0 } else { -1.0 };

    let tuples = index_combinations(n_sites, m);
    let mut h = FockOperator::zeros(n_sites);
    let mut coupling_sq = Vec::new();
    for (a, dag) in tuples.iter().enumerate() {
        for (b, ann) in tuples.iter().enumerate() {
            if a < b {
                let c = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                coupling_sq.push(c.norm_sqr());
                add_term(&mut h, dag, ann, phase * c);
                add_term(&mut h, ann, dag, phase * (diag_sign * c.conj()));
            } else if a == b {
                // constrained by hermiticity: real for even q/2, imaginary
                // otherwise
                let x = normal_full.sample(&mut rng);
                let c = if m % 2 == 0 {
                    Complex64::new(x, 0.0)
                } else {
                    Complex64::new(0.0, x)
                };
                coupling_sq.push(c.norm_sqr());
                add_term(&mut h, dag, ann, phase * c);
            }
        }
    }
    Ok(SykRealization { hamiltonian: h, coupling_sq })
}

/// A(t) = e^{iHt} A e^{-iHt} via eigendecomposition of H.
pub fn heisenberg_evolve(a: &FockOperator, h: &FockOperator, t: f64) -> Result<FockOperator> {
    if a.n_sites != h.n_sites {
        return Err(Error::DimensionMismatch(a.dim(), h.dim()));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-9 * (1.0 + max_abs(&h.mat)) {
        return Err(Error::NotHermitian(defect));
    }
    let eig = nalgebra::SymmetricEigen::new(h.mat.clone());
    let v = &eig.eigenvectors;
    let phases_pos = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (Complex64::i() * e * t).exp()));
    let phases_neg = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (-Complex64::i() * e * t).exp()));
    let mat = v * phases_pos * v.adjoint() * &a.mat * v * phases_neg * v.adjoint();
    Ok(FockOperator { mat, n_sites: a.n_sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Role, StreamKey};
    use approx::assert_relative_eq;

    fn stream(c: u64) -> RngStream {
        RngStream::new(17, StreamKey::new(Role::Coupling, c, 0, 0))
    }

    #[test]
    fn ensemble_identity() {
        let ens = MuEnsemble::new(0.0, 4);
        assert_relative_eq!(ens.n_bar(), 0.5, epsilon = 1e-15);
        for mu in [-3.0, 0.0, 0.7, 2.0] {
            let e = MuEnsemble::new(mu, 4);
            let n = e.n_bar();
            assert_relative_eq!(
                (-mu / 2.0_f64).exp() / (1.0 + (-mu).exp()),
                (n * (1.0 - n)).sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn inner_product_reference_lengths() {
        for n_sites in [2usize, 4] {
            for mu in [0.0, 2.0, -1.3] {
                let ens = MuEnsemble::new(mu, n_sites);
                let one = FockOperator::identity(n_sites);
                assert_relative_eq!(length(&one, &ens).unwrap(), 1.0, epsilon = 1e-12);
                let c0 = FockOperator::annihilation(n_sites, 0);
                let expect = (-mu / 2.0_f64).exp() / (1.0 + (-mu).exp());
                assert_relative_eq!(length(&c0, &ens).unwrap(), expect, epsilon = 1e-12);
                // n - nbar
                let mut nb = FockOperator::number(n_sites, 1);
                let nbar = ens.n_bar();
                nb.mat -= FockOperator::identity(n_sites).mat * Complex64::new(nbar, 0.0);
                let expect = (-mu).exp() / (1.0 + (-mu).exp()).powi(2);
                assert_relative_eq!(length(&nb, &ens).unwrap(), expect, epsilon = 1e-12);
            }
        }
        // (n - nbar | n - nbar) at mu = 2
        let ens = MuEnsemble::new(2.0, 2);
        let mut nb = FockOperator::number(2, 0);
        nb.mat -= FockOperator::identity(2).mat * Complex64::new(ens.n_bar(), 0.0);
        assert_relative_eq!(length(&nb, &ens).unwrap(), 0.104994, epsilon = 1e-6);
    }

    #[test]
    fn inner_product_sesquilinear() {
        let ens = MuEnsemble::new(1.0, 3);
        let a = FockOperator::annihilation(3, 1);
        let b = FockOperator::creation(3, 1);
        let ab = inner_product(&a, &b, &ens).unwrap();
        let ba = inner_product(&b, &a, &ens).unwrap();
        assert_relative_eq!(ab.re, ba.re, epsilon = 1e-14);
        assert_relative_eq!(ab.im, -ba.im, epsilon = 1e-14);
        assert!(length(&a, &ens).unwrap() >= 0.0);
    }

    #[test]
    fn syk_hamiltonian_properties() {
        for q in [4usize, 6] {
            let r = build_syk_hamiltonian(5, q, 1.0, &stream(q as u64)).unwrap();
            let h = &r.hamiltonian;
            assert_eq!(h.hermiticity_defect(), 0.0);
            let qop = FockOperator::total_charge(5);
            let comm = h.commutator(&qop).unwrap();
            assert!(max_abs(&comm.mat) < 1e-12, "[H, Q] != 0 for q={q}");
        }
        assert!(build_syk_hamiltonian(5, 3, 1.0, &stream(0)).is_err());
        assert!(build_syk_hamiltonian(5, 12, 1.0, &stream(0)).is_err());
    }

    #[test]
    fn syk_coupling_variance() {
        let n = 6usize;
        let q = 4usize;
        let jj = 1.3f64;
        let expect = jj * jj * 2.0 / (n as f64).powi(3);
        let mut all = Vec::new();
        let mut draws = 0usize;
        while all.len() < 10_000 {
            let r = build_syk_hamiltonian(n, q, jj, &stream(1000 + draws as u64)).unwrap();
            all.extend(r.coupling_sq);
            draws += 1;
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((mean / expect - 1.0).abs() < 0.05, "variance ratio {}", mean / expect);
    }

    #[test]
    fn evolve_basics() {
        let n = 4usize;
        let r = build_syk_hamiltonian(n, 4, 1.0, &stream(7)).unwrap();
        let a = FockOperator::annihilation(n, 0);
        let a0 = heisenberg_evolve(&a, &r.hamiltonian, 0.0).unwrap();
        assert!(max_abs(&(&a0.mat - &a.mat)) < 1e-12);

        // H built only from n_i terms commutes with n_1
        let mut h_diag = FockOperator::zeros(n);
        for i in 0..n {
            h_diag.mat += FockOperator::number(n, i).mat * Complex64::new(0.3 + i as f64, 0.0);
        }
        let n1 = FockOperator::number(n, 0);
        let n1t = heisenberg_evolve(&n1, &h_diag, 2.7).unwrap();
        assert!(max_abs(&(&n1t.mat - &n1.mat)) < 1e-10);
    }

    #[test]
    fn norm_conserved_under_evolution() {
        let n = 6usize;
        let ens = MuEnsemble::new(1.5, n);
        let r = build_syk_hamiltonian(n, 4, 1.0, &stream(21)).unwrap();
        let c1 = FockOperator::annihilation(n, 0);
        let l0 = length(&c1, &ens).unwrap();
        for t in [0.5, 2.0, 10.0] {
            let ct = heisenberg_evolve(&c1, &r.hamiltonian, t).unwrap();
            let lt = length(&ct, &ens).unwrap();
            assert!((lt - l0).abs() < 1e-10, "t={t}: |{lt} - {l0}|");
        }
    }

    #[test]
    fn evolve_rejects_non_hermitian() {
        let n = 3usize;
        let a = FockOperator::annihilation(n, 0);
        let h = FockOperator::annihilation(n, 1); // not Hermitian
        assert!(matches!(heisenberg_evolve(&a, &h, 1.0), Err(Error::NotHermitian(_))));
    }
}
