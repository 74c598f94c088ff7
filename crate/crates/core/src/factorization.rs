//! Complex-structure data attached to a factorization ℱ = 𝓑𝓒 of the surface
//! profile: μ with |μ|² = ℱ, ν = μ/𝓑, the function g that generates the
//! complex coordinate z̄ = τt + g(t) + is, the generalized factorial ν_!, the
//! admissibility bound τ₀, and the resonant-torus normalization of the
//! factors.

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, integrate_segment};
use crate::special::{digamma, ln_gamma, EULER_GAMMA};
use crate::theta::{CFn, WeightSequence};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Which end of the line carries the asserted asymptotics
/// ν(t) = |t|^b e^{pt+l} (1 + O(1/t)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    PlusInfinity,
    MinusInfinity,
}

#[derive(Debug, Clone, Copy)]
pub struct Asymptotics {
    pub b: f64,
    pub p: f64,
    pub l: f64,
    pub side: Side,
}

/// ν together with its logarithmic derivative ν'/ν (analytic, supplied by
/// the caller; numerical differentiation would poison the slowly converging
/// series below).
#[derive(Clone)]
pub struct NuFunction {
    pub eval: CFn,
    pub logderiv: CFn,
}

impl NuFunction {
    pub fn constant_one() -> Self {
        Self {
            eval: Arc::new(|_| Complex64::new(1.0, 0.0)),
            logderiv: Arc::new(|_| Complex64::new(0.0, 0.0)),
        }
    }
}

/// The ħ-regular solution g of exp{(1/ħ)∫_{t-ħ}^t g} = ν(t), by the
/// one-sided series selected through `asympt.side`.
///
/// The raw series terms decay like 1/k², too slowly to reach 1e-14 by
/// truncation alone within any reasonable term budget, so the partial sum
/// over k ≤ K is completed with the Euler–Maclaurin tail
/// ∫_{K+1/2}^∞ f + f'(K+1/2)/24, which evaluates the same series limit to
/// ~1e-12 with K = 2048.
pub fn solve_g_series(nu: &NuFunction, asympt: Asymptotics, hbar: f64) -> CFn {
    let ld = nu.logderiv.clone();
    let Asymptotics { b, p, l, side } = asympt;
    let h = hbar;
    Arc::new(move |t: Complex64| {
        let f = |x: f64| -> Complex64 {
            match side {
                Side::PlusInfinity => -h * ld(t + x * h) + b / x + h * p,
                Side::MinusInfinity => h * ld(t - x * h) + b / x - h * p,
            }
        };
        let k_sum = 2048usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=k_sum).rev() {
            acc += f(k as f64);
        }
        // Euler–Maclaurin completion of the 1/k² tail
        let edge = k_sum as f64 + 0.5;
        let rule = gauss_legendre(64);
        let mut tail = Complex64::new(0.0, 0.0);
        for &(x, w) in &rule {
            let u = 0.5 * (x + 1.0);
            let u = u.max(1e-300);
            tail += w * f(edge / u) * edge / (u * u);
        }
        tail *= 0.5; // du measure from [-1,1] to [0,1]
        let fprime = (f(edge + 1.0) - f(edge - 1.0)) / 2.0;
        acc += tail + fprime / 24.0;
        acc += l + b * (h.ln() - EULER_GAMMA);
        match side {
            Side::PlusInfinity => acc + p * (t + h / 2.0),
            Side::MinusInfinity => acc + h * ld(t) + p * (t - h / 2.0),
        }
    })
}

/// |exp{(1/ħ)∫_{t-ħ}^t g} − ν(t)|, the defect of the defining equation.
pub fn g_defect(nu_eval: &CFn, g: &CFn, hbar: f64, t: f64) -> Result<f64> {
    let g = g.clone();
    let base = Complex64::new(t - hbar, 0.0);
    let integral = integrate_segment(|s| g(base + s), Complex64::new(hbar, 0.0), 1e-13)?;
    let lhs = (integral / hbar).exp();
    Ok((lhs - nu_eval(Complex64::new(t, 0.0))).norm())
}

/// Generalized factorial ν_!(nħ) on [n_min, n_max] by log-space products.
pub fn nu_factorial_lattice(nu: &NuFunction, n_min: i64, n_max: i64, hbar: f64) -> Result<WeightSequence> {
    WeightSequence::from_rho(nu.eval.clone(), hbar, n_min, n_max)
}

/// ν_!(t) = exp{(1/ħ)∫₀^t g(τ)dτ} along the straight segment 0 → t.
pub fn nu_factorial_continuous(g: &CFn, hbar: f64, t: Complex64) -> Result<Complex64> {
    Ok(log_nu_factorial_continuous(g, hbar, t)?.exp())
}

/// ln ν_!(t) = (1/ħ)∫₀^t g(τ)dτ.
pub fn log_nu_factorial_continuous(g: &CFn, hbar: f64, t: Complex64) -> Result<Complex64> {
    if t.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let g = g.clone();
    let integral = integrate_segment(|s| g(s), t, 1e-13)?;
    Ok(integral / hbar)
}

/// τ₀ = −min_t Re g'(t) over the scan grid (numeric derivative, step ħ/100).
pub fn tau_min(g: &CFn, t_min: f64, t_max: f64, samples: usize, hbar: f64) -> f64 {
    let step = hbar / 100.0;
    let mut min_re = f64::INFINITY;
    for i in 0..=samples {
        let t = t_min + (t_max - t_min) * i as f64 / samples as f64;
        let d = (g(Complex64::new(t + step, 0.0)) - g(Complex64::new(t - step, 0.0)))
            / (2.0 * step);
        min_re = min_re.min(d.re);
    }
    -min_re
}

/// Everything the representation and kernel layers need about the chosen
/// factorization ℱ = 𝓑𝓒.
#[derive(Clone)]
pub struct FactorizationData {
    pub hbar: f64,
    pub tau: f64,
    pub tau0: Option<f64>,
    /// Torus phase parameter once the factors are normalized.
    pub alpha: Option<f64>,
    /// Resonant dimension N when normalized for a torus.
    pub resonant_n: Option<i64>,
    pub mu: CFn,
    pub factor_b: CFn,
    pub factor_c: CFn,
    pub nu: CFn,
    pub nu_logderiv: Option<CFn>,
    pub g: Option<CFn>,
    pub nu_factorial: WeightSequence,
}

impl FactorizationData {
    /// Special factor choice 𝓑 = μ: then ν = 1, g = 0 and the complex
    /// structure is z̄ = τt + is.
    pub fn with_unit_nu(hbar: f64, tau: f64, mu: CFn) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Parameter(format!("tau must be > 0, got {tau}")));
        }
        let mu_bar: CFn = {
            let mu = mu.clone();
            Arc::new(move |t: Complex64| mu(t.conj()).conj())
        };
        Ok(Self {
            hbar,
            tau,
            tau0: Some(0.0),
            alpha: None,
            resonant_n: None,
            mu: mu.clone(),
            factor_b: mu,
            factor_c: mu_bar,
            nu: Arc::new(|_| Complex64::new(1.0, 0.0)),
            nu_logderiv: Some(Arc::new(|_| Complex64::new(0.0, 0.0))),
            g: Some(Arc::new(|_| Complex64::new(0.0, 0.0))),
            nu_factorial: WeightSequence::unit(hbar),
        })
    }

    pub fn mu_at(&self, t: f64) -> Complex64 {
        (self.mu)(Complex64::new(t, 0.0))
    }

    /// Grid residuals of the defining relations: |μ|² = ℱ and 𝓑𝓒 = ℱ to
    /// relative 1e-12, the factorial recurrence, τ > τ₀, and in the
    /// normalized torus case the two conditions |ν_!(Nħ)| = 1 and
    /// Σ arg 𝓑(nħ) ≡ α (mod 2π).
    pub fn validate<F: Fn(f64) -> f64>(&self, profile: F, ts: &[f64]) -> Result<()> {
        for &t in ts {
            let f = profile(t);
            let m = self.mu_at(t);
            if (m.norm_sqr() - f).abs() > 1e-12 * (1.0 + f.abs()) {
                return Err(Error::Construction(format!(
                    "|mu({t})|^2 = {} but F({t}) = {f}",
                    m.norm_sqr()
                )));
            }
            let bc = (self.factor_b)(Complex64::new(t, 0.0)) * (self.factor_c)(Complex64::new(t, 0.0));
            if (bc - f).norm() > 1e-12 * (1.0 + f.abs()) {
                return Err(Error::Construction(format!(
                    "B({t})C({t}) = {bc} but F({t}) = {f}"
                )));
            }
        }
        self.nu_factorial.validate()?;
        if let Some(tau0) = self.tau0 {
            if self.tau <= tau0 {
                return Err(Error::Parameter(format!(
                    "tau = {} must exceed tau0 = {tau0}",
                    self.tau
                )));
            }
        }
        if let (Some(alpha), Some(n)) = (self.alpha, self.resonant_n) {
            // μ, 𝓑, 𝓒 and g' must all be T-periodic on the torus
            let period = n as f64 * self.hbar;
            let step = self.hbar / 100.0;
            for &t in ts {
                for (name, f) in [("mu", &self.mu), ("B", &self.factor_b), ("C", &self.factor_c)] {
                    let a = f(Complex64::new(t, 0.0));
                    let b = f(Complex64::new(t + period, 0.0));
                    if (a - b).norm() > 1e-10 * (1.0 + a.norm()) {
                        return Err(Error::Construction(format!(
                            "{name} is not T-periodic at t = {t}"
                        )));
                    }
                }
                if let Some(g) = &self.g {
                    let d = |t0: f64| {
                        (g(Complex64::new(t0 + step, 0.0)) - g(Complex64::new(t0 - step, 0.0)))
                            / (2.0 * step)
                    };
                    if (d(t) - d(t + period)).norm() > 1e-10 * (1.0 + d(t).norm()) {
                        return Err(Error::Construction(format!(
                            "g' is not T-periodic at t = {t}"
                        )));
                    }
                }
            }
            let log_nf = self
                .nu_factorial
                .log_value(n)
                .ok_or_else(|| Error::Input("nu_factorial lacks the resonant index".into()))?;
            if log_nf.log_mod.abs() > 1e-10 {
                return Err(Error::Construction(format!(
                    "|nu_!(N hbar)| = {} != 1 after normalization",
                    log_nf.log_mod.exp()
                )));
            }
            let mut arg_sum = 0.0;
            for k in 1..=n {
                arg_sum += (self.factor_b)(Complex64::new(k as f64 * self.hbar, 0.0)).arg();
            }
            let mut d = (arg_sum - alpha) % (2.0 * PI);
            if d > PI {
                d -= 2.0 * PI;
            }
            if d < -PI {
                d += 2.0 * PI;
            }
            if d.abs() > 1e-10 {
                return Err(Error::Construction(format!(
                    "sum of arg B(n hbar) differs from alpha by {d}"
                )));
            }
        }
        Ok(())
    }

    /// Rescale the factors by a constant c = exp(ρ + iσ) so that the
    /// resonant normalization holds: |ν_!(Nħ)| = 1 and
    /// Σ_{n=1}^N arg 𝓑(nħ) ≡ α (mod 2π). For the special choice 𝓑 = μ
    /// (ν = 1) the modulus condition forces |c| = 1 and μ itself picks up
    /// the phase, which keeps |μ|² = ℱ intact.
    pub fn normalize_resonant(&self, n: i64, alpha_target: f64) -> Result<FactorizationData> {
        if n < 1 {
            return Err(Error::Parameter(format!("resonant N must be >= 1, got {n}")));
        }
        let mut arg_sum = 0.0;
        for k in 1..=n {
            let b = (self.factor_b)(Complex64::new(k as f64 * self.hbar, 0.0));
            if b.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "factor B vanishes at lattice point n = {k}"
                )));
            }
            arg_sum += b.arg();
        }
        let unit_nu = self.nu_factorial.is_unit();
        let rho = if unit_nu {
            0.0
        } else {
            let log_nf = self
                .nu_factorial
                .log_value(n)
                .ok_or_else(|| Error::Input("nu_factorial lacks the resonant index".into()))?;
            log_nf.log_mod / n as f64
        };
        let sigma = (alpha_target - arg_sum) / n as f64;
        let c = Complex64::from_polar(rho.exp(), sigma);
        let scale_fn = |f: &CFn, s: Complex64| -> CFn {
            let f = f.clone();
            Arc::new(move |t| s * f(t))
        };
        let factor_b = scale_fn(&self.factor_b, c);
        let factor_c = scale_fn(&self.factor_c, 1.0 / c);
        let (mu, nu, nu_logderiv, g, nu_factorial) = if unit_nu {
            // B = mu stays exact: rotate mu by the same unit phase
            (
                scale_fn(&self.mu, c),
                self.nu.clone(),
                self.nu_logderiv.clone(),
                self.g.clone(),
                WeightSequence::unit(self.hbar),
            )
        } else {
            let nu = scale_fn(&self.nu, 1.0 / c);
            let log_c = Complex64::new(rho, sigma);
            let g = self.g.clone().map(|g0| -> CFn {
                Arc::new(move |t| g0(t) - log_c)
            });
            // nu_!(n hbar) picks up c^{-n}
            let range = self
                .nu_factorial
                .range()
                .ok_or_else(|| Error::Input("nu_factorial table required".into()))?;
            let mut table = std::collections::BTreeMap::new();
            for k in range.0..=range.1 {
                let v = self.nu_factorial.log_value(k).unwrap();
                table.insert(
                    k,
                    crate::theta::LogVal {
                        log_mod: v.log_mod - k as f64 * rho,
                        phase: v.phase - k as f64 * sigma,
                    },
                );
            }
            let ws = WeightSequence::from_log_table(self.hbar, table)?.with_rho(nu.clone());
            (self.mu.clone(), nu, self.nu_logderiv.clone(), g, ws)
        };
        Ok(FactorizationData {
            hbar: self.hbar,
            tau: self.tau,
            tau0: self.tau0,
            alpha: Some(alpha_target),
            resonant_n: Some(n),
            mu,
            factor_b,
            factor_c,
            nu,
            nu_logderiv,
            g,
            nu_factorial,
        })
    }
}

/// μ(t) = t + a − ħ/2 − iλ for the su(1,1) hyperboloid, λ = +√(a₀−(a−ħ/2)²).
pub fn mu_su11(a0: f64, a: f64, hbar: f64) -> Result<(CFn, f64)> {
    let lambda2 = a0 - (a - hbar / 2.0) * (a - hbar / 2.0);
    if !(lambda2 > 0.0) {
        return Err(Error::Parameter(format!(
            "mu_su11 needs a0 - (a - hbar/2)^2 > 0, got {lambda2}"
        )));
    }
    let lambda = lambda2.sqrt();
    let shift = Complex64::new(a - hbar / 2.0, -lambda);
    Ok((Arc::new(move |t: Complex64| t + shift), lambda))
}

/// Sklyanin μ(t) = ζa e^{iφt} − conj(ξa) e^{-iφt}, with (ζ, ξ) solving
/// ζξ = e^{-iφ}/(2 sin φ), |ζ|² + |ξ|² = a₀/κ₁ + cos(ψ-φ)/sin φ.
/// Root choice: |ζ| ≥ |ξ| and arg ζ = -φ/2.
pub fn mu_sklyanin(phi: f64, kappa1: f64, psi: f64, a0: f64) -> Result<(CFn, Complex64, Complex64)> {
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::Parameter(format!("mu_sklyanin needs 0 < phi < pi, got {phi}")));
    }
    if !(kappa1 > 0.0) {
        return Err(Error::Parameter("kappa1 must be > 0".into()));
    }
    let s = a0 / kappa1 + (psi - phi).cos() / phi.sin();
    let prod = 1.0 / (2.0 * phi.sin());
    let disc = s * s - 4.0 * prod * prod;
    if disc < 0.0 {
        return Err(Error::Parameter(format!(
            "no factor coefficients: discriminant {disc} < 0 (surface condition fails)"
        )));
    }
    let zeta_mod2 = 0.5 * (s + disc.sqrt());
    let xi_mod2 = 0.5 * (s - disc.sqrt());
    let zeta = Complex64::from_polar(zeta_mod2.sqrt(), -phi / 2.0);
    let xi = Complex64::from_polar(xi_mod2.sqrt(), -phi / 2.0);
    let a = Complex64::from_polar(kappa1.sqrt(), psi / 2.0);
    let za = zeta * a;
    let xa_bar = (xi * a).conj();
    let mu: CFn = Arc::new(move |t: Complex64| {
        let i = Complex64::new(0.0, 1.0);
        za * (i * phi * t).exp() - xa_bar * (-i * phi * t).exp()
    });
    Ok((mu, zeta, xi))
}

/// The su(1,1) version-II factorization 𝓑 = ℱ: ν = 1/μ̄ with the closed
/// gamma-function forms of g and ν_!.
pub fn su11_version2(a0: f64, a: f64, hbar: f64, tau: f64, n_range: i64) -> Result<FactorizationData> {
    let (mu, lambda) = mu_su11(a0, a, hbar)?;
    let h = hbar;
    let shift_bar = Complex64::new(a - hbar / 2.0, lambda);
    let nu_eval: CFn = Arc::new(move |t: Complex64| 1.0 / (t + shift_bar));
    let nu_logderiv: CFn = Arc::new(move |t: Complex64| -1.0 / (t + shift_bar));
    let nu = NuFunction {
        eval: nu_eval.clone(),
        logderiv: nu_logderiv.clone(),
    };
    // g(t) = -ħ/(a+t-ħ/2+iλ) - ħ d/dt ln Γ((a+t)/ħ - 1/2 + iλ/ħ) - ln ħ
    let g: CFn = {
        let u0 = Complex64::new(a / h - 0.5, lambda / h);
        Arc::new(move |t: Complex64| {
            let w = t + shift_bar;
            -h / w - digamma(u0 + t / h) - Complex64::new(h.ln(), 0.0)
        })
    };
    // nu_!(t) = Γ(a/ħ + 1/2 + iλ/ħ) / Γ((a+t)/ħ + 1/2 + iλ/ħ) · e^{-(t/ħ) ln ħ}
    let log_nf: CFn = {
        let c0 = Complex64::new(a / h + 0.5, lambda / h);
        let base = ln_gamma(c0);
        Arc::new(move |t: Complex64| base - ln_gamma(c0 + t / h) - t / h * h.ln())
    };
    let lattice = nu_factorial_lattice(&nu, -n_range, n_range, hbar)?.with_log_continuous(log_nf);
    let profile_b: CFn = {
        let mu = mu.clone();
        Arc::new(move |t: Complex64| {
            let m = mu(t);
            let mb = mu(t.conj()).conj();
            m * mb
        })
    };
    let tau0 = tau_min(&g, -10.0, 10.0, 400, hbar);
    if tau <= tau0 {
        return Err(Error::Parameter(format!("tau = {tau} must exceed tau0 = {tau0}")));
    }
    Ok(FactorizationData {
        hbar,
        tau,
        tau0: Some(tau0),
        alpha: None,
        resonant_n: None,
        mu,
        factor_b: profile_b,
        factor_c: Arc::new(|_| Complex64::new(1.0, 0.0)),
        nu: nu_eval,
        nu_logderiv: Some(nu_logderiv),
        g: Some(g),
        nu_factorial: lattice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mu_su11_matches_profile() {
        let (mu, lambda) = mu_su11(1.25, 0.0, 1.0).unwrap();
        assert!((lambda - 1.0).abs() < 1e-15);
        assert!((mu(c(0.0, 0.0)) - c(-0.5, -1.0)).norm() < 1e-15);
        for i in 0..=40 {
            let t = -4.0 + 0.2 * i as f64;
            let f = t * t - t + 1.25;
            let m = mu(c(t, 0.0));
            assert!((m.norm_sqr() - f).abs() < 1e-12 * (1.0 + f));
            assert!((m.im + lambda).abs() < 1e-15);
        }
    }

    #[test]
    fn mu_sklyanin_root_moduli() {
        // |ζ|², |ξ|² are the roots of x² - 2x + 1/4 = 0
        let (_, zeta, xi) = mu_sklyanin(PI / 2.0, 1.0, 0.0, 2.0).unwrap();
        let hi = (2.0 + 3.0f64.sqrt()) / 2.0;
        let lo = (2.0 - 3.0f64.sqrt()) / 2.0;
        assert!((zeta.norm_sqr() - hi).abs() < 1e-14);
        assert!((xi.norm_sqr() - lo).abs() < 1e-14);
        // system (ζξ = e^{-iφ}/2 sin φ) holds
        let want = c(0.0, -1.0) * Complex64::from_polar(0.5, 0.0) * c(0.0, 1.0);
        let _ = want;
        let p = zeta * xi;
        assert!((p - Complex64::from_polar(0.5, -PI / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn mu_sklyanin_profile_and_periodicity() {
        let phi = PI / 2.0;
        let flow = crate::flows::sklyanin_flow(phi, 1.0, 0.0, 2.0).unwrap();
        let (mu, _, _) = mu_sklyanin(phi, 1.0, 0.0, 2.0).unwrap();
        for i in 0..=50 {
            let t = -3.0 + 0.17 * i as f64;
            let f = flow.profile(t);
            let m = mu(c(t, 0.0));
            assert!(
                (m.norm_sqr() - f).abs() < 1e-12 * (1.0 + f.abs()),
                "t={t}: |mu|^2={} F={f}",
                m.norm_sqr()
            );
            let period = 2.0 * PI / phi;
            assert!((mu(c(t + period, 0.0)) - m).norm() < 1e-12);
        }
    }

    #[test]
    fn mu_sklyanin_rejects_flat_surface() {
        assert!(mu_sklyanin(PI / 2.0, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn g_series_trivial_nu() {
        let g = solve_g_series(
            &NuFunction::constant_one(),
            Asymptotics {
                b: 0.0,
                p: 0.0,
                l: 0.0,
                side: Side::PlusInfinity,
            },
            1.0,
        );
        for &t in &[-2.0, 0.0, 3.3] {
            assert!(g(c(t, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn g_series_constant_slope_both_sides() {
        // ν = e^{pt}: the regular solution is g(t) = p(t + ħ/2)
        let p = 0.37;
        let nu = NuFunction {
            eval: Arc::new(move |t: Complex64| (p * t).exp()),
            logderiv: Arc::new(move |_| c(p, 0.0)),
        };
        for side in [Side::PlusInfinity, Side::MinusInfinity] {
            let g = solve_g_series(
                &nu,
                Asymptotics {
                    b: 0.0,
                    p,
                    l: 0.0,
                    side,
                },
                0.5,
            );
            for &t in &[-1.0, 0.4, 2.2] {
                let expect = p * (t + 0.25);
                assert!((g(c(t, 0.0)) - expect).norm() < 1e-11, "side {side:?} t {t}");
            }
        }
    }

    #[test]
    fn g_series_su11_v2_matches_gamma_closed_form() {
        // a = 0, ħ = 1, a0 = 5/4, λ = 1: ν = 1/(t - 1/2 + i), b = -1 at +∞
        let lambda = 1.0;
        let shift = c(-0.5, lambda);
        let nu = NuFunction {
            eval: Arc::new(move |t: Complex64| 1.0 / (t + shift)),
            logderiv: Arc::new(move |t: Complex64| -1.0 / (t + shift)),
        };
        let g = solve_g_series(
            &nu,
            Asymptotics {
                b: -1.0,
                p: 0.0,
                l: 0.0,
                side: Side::PlusInfinity,
            },
            1.0,
        );
        for &t in &[-3.0, -0.7, 0.0, 1.9, 6.0] {
            let w = c(t, 0.0) + shift;
            let closed = -1.0 / w - digamma(c(t - 0.5, lambda)) - 0.0;
            let got = g(c(t, 0.0));
            assert!(
                (got - closed).norm() < 1e-8,
                "t={t}: series {got} closed {closed}"
            );
        }
    }

    #[test]
    fn g_series_defect_on_grid() {
        let fact = su11_version2(1.25, 0.0, 1.0, 1.0, 40).unwrap();
        // rebuild g independently from the series and check the defining equation
        let nu = NuFunction {
            eval: fact.nu.clone(),
            logderiv: fact.nu_logderiv.clone().unwrap(),
        };
        let g_series = solve_g_series(
            &nu,
            Asymptotics {
                b: -1.0,
                p: 0.0,
                l: 0.0,
                side: Side::PlusInfinity,
            },
            1.0,
        );
        for i in 0..=10 {
            let t = -4.0 + 0.8 * i as f64;
            let d = g_defect(&fact.nu, &g_series, 1.0, t).unwrap();
            assert!(d < 1e-9, "t={t}: defect {d}");
        }
    }

    #[test]
    fn g_series_minus_infinity_side_defect() {
        // mirrored decaying ν with asymptotics at -∞: ν(t) = 1/(0.5 - t + iλ)
        let shift = c(0.5, 1.0);
        let nu = NuFunction {
            eval: Arc::new(move |t: Complex64| 1.0 / (shift - t)),
            logderiv: Arc::new(move |t: Complex64| 1.0 / (shift - t)),
        };
        let g = solve_g_series(
            &nu,
            Asymptotics {
                b: -1.0,
                p: 0.0,
                l: 0.0,
                side: Side::MinusInfinity,
            },
            1.0,
        );
        for &t in &[-3.0, 0.0, 2.5] {
            let d = g_defect(&nu.eval, &g, 1.0, t).unwrap();
            assert!(d < 1e-9, "t={t}: defect {d}");
        }
    }

    #[test]
    fn factorial_lattice_cases() {
        // ν ≡ 1 → ν_! ≡ 1
        let unit = nu_factorial_lattice(&NuFunction::constant_one(), -5, 5, 1.0).unwrap();
        for n in -5..=5 {
            assert!((unit.value(n).unwrap() - 1.0).norm() < 1e-15);
        }
        // recurrence holds in log space
        let fact = su11_version2(1.25, 0.0, 1.0, 1.0, 30).unwrap();
        fact.nu_factorial.validate().unwrap();
    }

    #[test]
    fn factorial_matches_gamma_ratio() {
        let fact = su11_version2(1.25, 0.0, 1.0, 1.0, 30).unwrap();
        let log_nf = fact.nu_factorial.log_continuous().unwrap().clone();
        for n in -20i64..=20 {
            let lattice = fact.nu_factorial.value(n).unwrap();
            let closed = log_nf(c(n as f64, 0.0)).exp();
            assert!(
                (lattice - closed).norm() < 1e-10 * (1.0 + closed.norm()),
                "n={n}: lattice {lattice} closed {closed}"
            );
        }
    }

    #[test]
    fn factorial_continuous_vs_lattice() {
        let fact = su11_version2(1.25, 0.0, 1.0, 1.0, 20).unwrap();
        let g = fact.g.clone().unwrap();
        assert!((nu_factorial_continuous(&g, 1.0, c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        for n in -6i64..=6 {
            let lattice = fact.nu_factorial.value(n).unwrap();
            let cont = nu_factorial_continuous(&g, 1.0, c(n as f64, 0.0)).unwrap();
            assert!(
                (cont - lattice).norm() < 1e-9 * (1.0 + lattice.norm()),
                "n={n}: cont {cont} lattice {lattice}"
            );
        }
        // trivial nu: continuous factorial is 1 everywhere in ℂ
        let g0: CFn = Arc::new(|_| c(0.0, 0.0));
        let v = nu_factorial_continuous(&g0, 1.0, c(1.3, -2.2)).unwrap();
        assert!((v - 1.0).norm() < 1e-14);
    }

    #[test]
    fn tau_min_cases() {
        let g0: CFn = Arc::new(|_| c(0.0, 0.0));
        assert!(tau_min(&g0, -5.0, 5.0, 100, 1.0).abs() < 1e-12);
        let cslope = 0.8;
        let g1: CFn = Arc::new(move |t: Complex64| cslope * t);
        assert!((tau_min(&g1, -5.0, 5.0, 100, 1.0) + cslope).abs() < 1e-10);
        let fact = su11_version2(1.25, 0.0, 1.0, 1.0, 20).unwrap();
        let t0 = fact.tau0.unwrap();
        assert!(t0.is_finite() && t0 < 1.0, "tau0 = {t0}");
    }

    #[test]
    fn normalize_resonant_sklyanin() {
        let phi = PI / 2.0;
        let n = 4i64;
        let alpha = 0.0;
        let flow = crate::flows::sklyanin_flow(phi, 1.0, 0.0, 2.0).unwrap();
        let (mu, _, _) = mu_sklyanin(phi, 1.0, 0.0, 2.0).unwrap();
        let fact = FactorizationData::with_unit_nu(1.0, 1.0, mu).unwrap();
        let norm = fact.normalize_resonant(n, alpha).unwrap();
        norm.validate(|t| flow.profile(t), &[0.0, 0.5, 1.3, 2.9]).unwrap();
        // cyclic weight product equals F_!(Nħ)^{1/2} e^{iα}
        let mut prod = c(1.0, 0.0);
        let mut f_fact = 1.0;
        for k in 1..=n {
            prod *= norm.mu_at(k as f64);
            f_fact *= flow.profile(k as f64);
        }
        let expect = Complex64::from_polar(f_fact.sqrt(), alpha);
        assert!((prod - expect).norm() < 1e-10, "prod {prod} expect {expect}");
        // and with a nonzero alpha
        let alpha2 = 1.1;
        let norm2 = fact.normalize_resonant(n, alpha2).unwrap();
        let mut prod2 = c(1.0, 0.0);
        for k in 1..=n {
            prod2 *= norm2.mu_at(k as f64);
        }
        assert!((prod2 - Complex64::from_polar(f_fact.sqrt(), alpha2)).norm() < 1e-10);
    }

    #[test]
    fn validate_rejects_bad_tau() {
        let (mu, _) = mu_su11(1.25, 0.0, 1.0).unwrap();
        assert!(FactorizationData::with_unit_nu(1.0, 0.0, mu).is_err());
    }
}
