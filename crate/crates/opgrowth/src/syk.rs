//! Closed-form charged/Brownian SYK evaluators and density-scaling bounds.
//!
//! Everything here depends on the chemical potential only through
//! cosh(μ̄/2), so all outputs are even in μ̄. The single source of truth for
//! the Lyapunov exponent is λ = R(0) - 2Γ for both variants.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Regular,
    Brownian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SykParams {
    pub variant: Variant,
    pub q: usize,
    /// Coupling energy scale.
    pub j: f64,
    /// Dimensionless chemical potential.
    pub mu_bar: f64,
    /// Hopping weight of the spatial model; 0 means no lattice.
    pub b: f64,
}

impl SykParams {
    pub fn new(variant: Variant, q: usize, j: f64, mu_bar: f64, b: f64) -> Result<Self> {
        if q < 4 || q % 2 != 0 {
            return Err(Error::OddQ(q));
        }
        if !(j > 0.0) {
            return Err(Error::Config(format!("J must be positive, got {j}")));
        }
        if !(0.0..=0.5).contains(&b) {
            return Err(Error::Config(format!("hopping b must be in [0, 1/2], got {b}")));
        }
        Ok(SykParams { variant, q, j, mu_bar, b })
    }

    /// Density n̄ = 1/(1 + e^{μ̄}).
    pub fn n_bar(&self) -> f64 {
        1.0 / (1.0 + self.mu_bar.exp())
    }

    fn two_cosh(&self) -> f64 {
        2.0 * (self.mu_bar / 2.0).cosh()
    }
}

/// A value plus the caveat that the regular-SYK prefactor is only a scaling
/// estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Flagged {
    pub value: f64,
    pub prefactor_trusted: bool,
}

/// Quasiparticle decay rate Γ.
pub fn gamma(p: &SykParams) -> Flagged {
    let qm2 = (p.q - 2) as f64;
    match p.variant {
        Variant::Regular => Flagged {
            value: p.j / ((p.q as f64 - 1.0).sqrt() * p.two_cosh().powf(qm2 / 2.0)),
            prefactor_trusted: false,
        },
        Variant::Brownian => Flagged {
            value: p.j / (2f64.powi(p.q as i32 - 1) * (p.mu_bar / 2.0).cosh().powf(qm2)),
            prefactor_trusted: true,
        },
    }
}

/// Zero-frequency rung function R(0).
pub fn rung_zero(p: &SykParams) -> Result<Flagged> {
    let qm2 = (p.q - 2) as f64;
    match p.variant {
        Variant::Regular => {
            let g = gamma(p).value;
            if !(g > 0.0) {
                return Err(Error::Divergence("rung integral needs Gamma > 0".into()));
            }
            // integral over t of (q-1) J^2 e^{-(q-2) Gamma |t|} / (2 cosh mu/2)^{q-2}
            Ok(Flagged {
                value: 2.0 * (p.q as f64 - 1.0) * p.j * p.j / (qm2 * g * p.two_cosh().powf(qm2)),
                prefactor_trusted: false,
            })
        }
        Variant::Brownian => Ok(Flagged {
            value: (p.q as f64 - 1.0) * p.j / p.two_cosh().powf(qm2),
            prefactor_trusted: true,
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovResult {
    pub lambda: f64,
    pub gamma: f64,
    pub rung_zero: f64,
    pub prefactor_trusted: bool,
    /// Set when pathological parameters drive λ negative.
    pub negative_warning: bool,
}

/// λ_L = R(0) - 2Γ.
pub fn lyapunov(p: &SykParams) -> Result<LyapunovResult> {
    let g = gamma(p);
    let r0 = rung_zero(p)?;
    let lambda = r0.value - 2.0 * g.value;
    Ok(LyapunovResult {
        lambda,
        gamma: g.value,
        rung_zero: r0.value,
        prefactor_trusted: g.prefactor_trusted && r0.prefactor_trusted,
        negative_warning: lambda < 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ButterflyResult {
    pub v_b: f64,
    pub lambda_zero: f64,
    pub rung_zero: f64,
    pub prefactor_trusted: bool,
}

/// Momentum-resolved exponent λ(p) = λ(0) - b R(0) p² (small-p form).
pub fn lambda_of_p(p: &SykParams, momentum: f64) -> Result<f64> {
    let lam = lyapunov(p)?;
    Ok(lam.lambda - p.b * lam.rung_zero * momentum * momentum)
}

/// λ(p) with the full lattice dispersion S(p) = 1 - 2b(1 - cos p); optional
/// check of the quadratic approximation.
pub fn lambda_of_p_full(p: &SykParams, momentum: f64) -> Result<f64> {
    let lam = lyapunov(p)?;
    let s = 1.0 - 2.0 * p.b * (1.0 - momentum.cos());
    Ok(s * lam.rung_zero - 2.0 * lam.gamma)
}

/// Butterfly velocity v_B = sqrt(4 b λ(0) R(0)).
pub fn butterfly(p: &SykParams) -> Result<ButterflyResult> {
    let lam = lyapunov(p)?;
    if p.b == 0.0 {
        return Ok(ButterflyResult {
            v_b: 0.0,
            lambda_zero: lam.lambda,
            rung_zero: lam.rung_zero,
            prefactor_trusted: lam.prefactor_trusted,
        });
    }
    if !(lam.lambda > 0.0) {
        return Err(Error::UndefinedVelocity);
    }
    Ok(ButterflyResult {
        v_b: (4.0 * p.b * lam.lambda * lam.rung_zero).sqrt(),
        lambda_zero: lam.lambda,
        rung_zero: lam.rung_zero,
        prefactor_trusted: lam.prefactor_trusted,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityBounds {
    /// √(4 n̄ (1-n̄)) λ*, valid for every charge-conserving theory.
    pub universal: f64,
    /// (4 n̄ (1-n̄))^{(q-2)/4} λ*, for q-body all-to-all models.
    pub q_body: f64,
    /// Density exponent of a coherent (Hamiltonian) q-body model.
    pub quantum_exponent: f64,
    /// Exponent of time-random (classical) dynamics: doubled.
    pub classical_exponent: f64,
}

pub fn density_bounds(n_bar: f64, q: usize, lambda_star: f64) -> Result<DensityBounds> {
    if !(0.0 < n_bar && n_bar < 1.0) {
        return Err(Error::Config(format!("n_bar must be in (0,1), got {n_bar}")));
    }
    if !(lambda_star > 0.0) {
        return Err(Error::Config("lambda_star must be positive".into()));
    }
    if q < 4 || q % 2 != 0 {
        return Err(Error::OddQ(q));
    }
    let x = 4.0 * n_bar * (1.0 - n_bar);
    Ok(DensityBounds {
        universal: x.sqrt() * lambda_star,
        q_body: x.powf((q as f64 - 2.0) / 4.0) * lambda_star,
        quantum_exponent: (q as f64 - 2.0) / 4.0,
        classical_exponent: (q as f64 - 2.0) / 2.0,
    })
}

/// Keldysh Green's-function product e^{-2Γ|t|}/(4 cosh²(μ̄/2)).
pub fn green_product(p: &SykParams, t: f64) -> f64 {
    let g = gamma(p).value;
    (-2.0 * g * t.abs()).exp() / (4.0 * (p.mu_bar / 2.0).cosh().powi(2))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureReport {
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

/// Adaptive Simpson quadrature of the time-extended rung function against the
/// analytic R(0); the independent consistency check for the regular variant.
pub fn quadrature_check(p: &SykParams) -> Result<QuadratureReport> {
    if p.variant != Variant::Regular {
        return Err(Error::Config("quadrature check applies to the regular variant".into()));
    }
    let g = gamma(p).value;
    if !(g > 0.0) {
        return Err(Error::Divergence("Gamma must be positive".into()));
    }
    let qm2 = (p.q - 2) as f64;
    let pref = (p.q as f64 - 1.0) * p.j * p.j / p.two_cosh().powf(qm2);
    let rung_t = |t: f64| pref * (-qm2 * g * t.abs()).exp();
    let t_cut = 50.0 / (qm2 * g);
    let numeric = adaptive_simpson(&rung_t, -t_cut, t_cut, 1e-12, 60);
    let analytic = rung_zero(p)?.value;
    Ok(QuadratureReport {
        analytic,
        numeric,
        relative_error: (numeric - analytic).abs() / analytic.abs(),
    })
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let whole = simpson(f, a, b);
    adaptive_step(f, a, b, tol, whole, depth)
}

fn adaptive_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_step(f, a, m, tol / 2.0, left, depth - 1)
        + adaptive_step(f, m, b, tol / 2.0, right, depth - 1)
}
