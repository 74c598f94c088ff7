//! Theta-series engine.
//!
//! Evaluates
//!
//! ```text
//! θ(α, ε)  = Σ_{n ∈ ℤ}     exp{-ε n² + i n α}
//! θ#(α, ε) = Σ_{n ∈ ½+ℤ}  exp{-ε n² + i n α}
//! θ_ρ(α,ε) = Σ_{n ∈ ℤ}    ρ_!(nħ)⁻¹ exp{-ε n² + i n α}
//! ```
//!
//! together with second logarithmic derivatives of the associated real
//! lattice sums. For ε < 1 the unweighted series switch to the imaginary
//! Jacobi transformation, evaluated in the overflow-safe Gaussian-comb form
//! √(π/ε) Σ_k (±1)^k exp{-(α - 2πk)²/4ε}; the weighted series has no modular
//! dual and stays in the direct regime.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Complex-capable scalar function used for weight data.
pub type CFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Default absolute truncation tolerance.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Summation regime selector; `Auto` switches on ε < 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regime {
    #[default]
    Auto,
    ForceDirect,
    ForceJacobi,
}

/// Argument bundle for the theta evaluators.
#[derive(Debug, Clone, Copy)]
pub struct ThetaArgs {
    pub alpha: Complex64,
    pub eps: f64,
    pub tol: f64,
    pub regime: Regime,
}

impl ThetaArgs {
    pub fn new(alpha: Complex64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("theta eps must be > 0, got {eps}")));
        }
        Ok(Self {
            alpha,
            eps,
            tol: DEFAULT_TOL,
            regime: Regime::Auto,
        })
    }

    pub fn real(alpha: f64, eps: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), eps)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("theta tol must be > 0, got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }
}

/// Log-space value of a generalized factorial: ρ_! = exp(log_mod + i·phase).
/// The phase is accumulated without reduction mod 2π so that lattice sums of
/// arguments stay well defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVal {
    pub log_mod: f64,
    pub phase: f64,
}

impl LogVal {
    pub const ONE: LogVal = LogVal {
        log_mod: 0.0,
        phase: 0.0,
    };

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_mod.exp(), self.phase)
    }

    pub fn inv_value(&self) -> Complex64 {
        Complex64::from_polar((-self.log_mod).exp(), -self.phase)
    }
}

#[derive(Clone)]
enum Backing {
    Unit,
    Table(BTreeMap<i64, LogVal>),
}

/// Generalized factorial ρ_!(nħ) on the integer lattice, in log space,
/// optionally with the pointwise ρ and a continuous log ρ_!(t) evaluator.
#[derive(Clone)]
pub struct WeightSequence {
    hbar: f64,
    backing: Backing,
    rho: Option<CFn>,
    log_continuous: Option<CFn>,
}

impl WeightSequence {
    /// ρ ≡ 1, so ρ_! ≡ 1 on the whole lattice.
    pub fn unit(hbar: f64) -> Self {
        Self {
            hbar,
            backing: Backing::Unit,
            rho: None,
            log_continuous: None,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.backing, Backing::Unit)
    }

    /// Build ρ_!(nħ) for n in [n_min, n_max] from the pointwise ρ by the
    /// defining recurrence, accumulating log-modulus and unwrapped phase.
    pub fn from_rho(rho: CFn, hbar: f64, n_min: i64, n_max: i64) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(Error::Parameter(format!("spacing must be > 0, got {hbar}")));
        }
        if n_min > 0 || n_max < 0 {
            return Err(Error::Parameter(
                "weight lattice range must contain n = 0".into(),
            ));
        }
        let mut table = BTreeMap::new();
        table.insert(0, LogVal::ONE);
        let mut acc = LogVal::ONE;
        for n in 1..=n_max {
            let v = rho(Complex64::new(n as f64 * hbar, 0.0));
            if v.norm() == 0.0 {
                return Err(Error::Domain(format!("rho vanishes at lattice point n = {n}")));
            }
            acc.log_mod += v.norm().ln();
            acc.phase += v.arg();
            table.insert(n, acc);
        }
        acc = LogVal::ONE;
        for n in (n_min..=-1).rev() {
            // ρ_!(nħ) = [ρ(0)·ρ(-ħ)···ρ((n+1)ħ)]⁻¹
            let v = rho(Complex64::new((n + 1) as f64 * hbar, 0.0));
            if v.norm() == 0.0 {
                return Err(Error::Domain(format!(
                    "rho vanishes at lattice point n = {}",
                    n + 1
                )));
            }
            acc.log_mod -= v.norm().ln();
            acc.phase -= v.arg();
            table.insert(n, acc);
        }
        Ok(Self {
            hbar,
            backing: Backing::Table(table),
            rho: Some(rho),
            log_continuous: None,
        })
    }

    pub fn from_log_table(hbar: f64, table: BTreeMap<i64, LogVal>) -> Result<Self> {
        match table.get(&0) {
            Some(v) if v.log_mod.abs() < 1e-12 => {}
            _ => {
                return Err(Error::Input(
                    "weight table must contain n = 0 with ρ_!(0) = 1".into(),
                ))
            }
        }
        Ok(Self {
            hbar,
            backing: Backing::Table(table),
            rho: None,
            log_continuous: None,
        })
    }

    pub fn with_rho(mut self, rho: CFn) -> Self {
        self.rho = Some(rho);
        self
    }

    /// Attach t ↦ ln ρ_!(t) for complex t (closed form or quadrature-backed).
    pub fn with_log_continuous(mut self, f: CFn) -> Self {
        self.log_continuous = Some(f);
        self
    }

    pub fn spacing(&self) -> f64 {
        self.hbar
    }

    pub fn rho(&self) -> Option<&CFn> {
        self.rho.as_ref()
    }

    pub fn log_continuous(&self) -> Option<&CFn> {
        self.log_continuous.as_ref()
    }

    pub fn log_value(&self, n: i64) -> Option<LogVal> {
        match &self.backing {
            Backing::Unit => Some(LogVal::ONE),
            Backing::Table(t) => t.get(&n).copied(),
        }
    }

    pub fn value(&self, n: i64) -> Option<Complex64> {
        self.log_value(n).map(|v| v.value())
    }

    /// Available index range (unbounded for the unit sequence).
    pub fn range(&self) -> Option<(i64, i64)> {
        match &self.backing {
            Backing::Unit => None,
            Backing::Table(t) => {
                let lo = *t.keys().next().unwrap();
                let hi = *t.keys().next_back().unwrap();
                Some((lo, hi))
            }
        }
    }

    /// The sequence |ρ_!|², i.e. the factorial of |ρ|².
    pub fn abs_squared(&self) -> WeightSequence {
        let backing = match &self.backing {
            Backing::Unit => Backing::Unit,
            Backing::Table(t) => Backing::Table(
                t.iter()
                    .map(|(&n, v)| {
                        (
                            n,
                            LogVal {
                                log_mod: 2.0 * v.log_mod,
                                phase: 0.0,
                            },
                        )
                    })
                    .collect(),
            ),
        };
        let rho = self.rho.clone().map(|r| {
            let f: CFn = Arc::new(move |t: Complex64| r(t) * r(t.conj()).conj());
            f
        });
        let log_continuous = self.log_continuous.clone().map(|l| {
            let f: CFn = Arc::new(move |t: Complex64| l(t) + l(t.conj()).conj());
            f
        });
        WeightSequence {
            hbar: self.hbar,
            backing,
            rho,
            log_continuous,
        }
    }

    /// The sequence conj(ρ_!), the factorial of t ↦ conj(ρ(conj(t))).
    pub fn conjugated(&self) -> WeightSequence {
        let backing = match &self.backing {
            Backing::Unit => Backing::Unit,
            Backing::Table(t) => Backing::Table(
                t.iter()
                    .map(|(&n, v)| {
                        (
                            n,
                            LogVal {
                                log_mod: v.log_mod,
                                phase: -v.phase,
                            },
                        )
                    })
                    .collect(),
            ),
        };
        let rho = self.rho.clone().map(|r| {
            let f: CFn = Arc::new(move |t: Complex64| r(t.conj()).conj());
            f
        });
        let log_continuous = self.log_continuous.clone().map(|l| {
            let f: CFn = Arc::new(move |t: Complex64| l(t.conj()).conj());
            f
        });
        WeightSequence {
            hbar: self.hbar,
            backing,
            rho,
            log_continuous,
        }
    }

    /// ρ_!(0) = 1 and, when ρ is attached, the recurrence
    /// ρ_!((n+1)ħ) = ρ((n+1)ħ)·ρ_!(nħ) over the stored range.
    pub fn validate(&self) -> Result<()> {
        let Backing::Table(table) = &self.backing else {
            return Ok(());
        };
        let zero = table
            .get(&0)
            .ok_or_else(|| Error::Input("weight table lacks n = 0".into()))?;
        if zero.log_mod.abs() > 1e-12 || zero.value().im.abs() > 1e-12 {
            return Err(Error::Construction("ρ_!(0) ≠ 1".into()));
        }
        if let Some(rho) = &self.rho {
            for (&n, v) in table.iter() {
                let Some(next) = table.get(&(n + 1)) else {
                    continue;
                };
                let r = rho(Complex64::new((n + 1) as f64 * self.hbar, 0.0));
                let lhs = LogVal {
                    log_mod: next.log_mod - v.log_mod,
                    phase: next.phase - v.phase,
                };
                if (lhs.value() - r).norm() > 1e-10 * (1.0 + r.norm()) {
                    return Err(Error::Construction(format!(
                        "factorial recurrence fails at n = {}",
                        n + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Truncation index: smallest N with exp(-ε N² + b N) < tol, plus 5 guard terms.
fn n_cut(eps: f64, b: f64, tol: f64) -> Result<i64> {
    let log_tol = tol.ln();
    let n = (b + (b * b - 4.0 * eps * log_tol).sqrt()) / (2.0 * eps);
    let n = n.ceil() + 5.0;
    if n > 5e7 {
        return Err(Error::Convergence(format!(
            "theta truncation index {n:.1e} too large (eps = {eps}, |Im α| = {b})"
        )));
    }
    Ok(n as i64)
}

fn check_direct_overflow(eps: f64, b: f64) -> Result<()> {
    // peak term magnitude is exp(b²/4ε)
    if b * b / (4.0 * eps) > 700.0 {
        return Err(Error::Convergence(format!(
            "direct theta series overflows (eps = {eps}, |Im α| = {b}); use the Jacobi regime"
        )));
    }
    Ok(())
}

fn theta_direct_lattice(alpha: Complex64, eps: f64, tol: f64, half: bool) -> Result<Complex64> {
    let b = alpha.im.abs();
    check_direct_overflow(eps, b)?;
    let n = n_cut(eps, b, tol)?;
    let i = Complex64::new(0.0, 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let offset = if half { 0.5 } else { 0.0 };
    // largest |n| first: smallest terms enter the accumulator first
    for k in (0..=n).rev() {
        let m = k as f64 + offset;
        if half || k > 0 {
            acc += (-eps * m * m + i * m * alpha).exp();
            acc += (-eps * m * m - i * m * alpha).exp();
        }
    }
    if !half {
        acc += 1.0;
    }
    Ok(acc)
}

fn theta_comb(alpha: Complex64, eps: f64, tol: f64, half: bool) -> Result<Complex64> {
    // Jacobi-transformed series with the Gaussian prefactor folded termwise:
    // θ  = √(π/ε) Σ_k exp{-(α - 2πk)²/4ε}
    // θ# = √(π/ε) Σ_k (-1)^k exp{-(α - 2πk)²/4ε}
    let b = alpha.im.abs();
    if b * b / (4.0 * eps) > 700.0 {
        return Err(Error::Convergence(format!(
            "Jacobi-regime theta overflows (eps = {eps}, |Im α| = {b})"
        )));
    }
    let reach = (b * b + 4.0 * eps * (1.0 / tol).ln()).sqrt();
    let k_lo = ((alpha.re - reach) / (2.0 * PI)).floor() as i64 - 1;
    let k_hi = ((alpha.re + reach) / (2.0 * PI)).ceil() as i64 + 1;
    let k_c = (alpha.re / (2.0 * PI)).round() as i64;
    let mut ks: Vec<i64> = (k_lo..=k_hi).collect();
    ks.sort_by_key(|k| std::cmp::Reverse((k - k_c).abs()));
    let mut acc = Complex64::new(0.0, 0.0);
    for k in ks {
        let d = alpha - 2.0 * PI * k as f64;
        let term = (-d * d / (4.0 * eps)).exp();
        if half && k.rem_euclid(2) == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    Ok((PI / eps).sqrt() * acc)
}

/// θ(α, ε) = Σ_{n∈ℤ} exp{-ε n² + i n α}.
pub fn theta(args: ThetaArgs) -> Result<Complex64> {
    if !(args.eps > 0.0) {
        return Err(Error::Domain(format!("theta eps must be > 0, got {}", args.eps)));
    }
    let direct = match args.regime {
        Regime::Auto => args.eps >= 1.0,
        Regime::ForceDirect => true,
        Regime::ForceJacobi => false,
    };
    if direct {
        theta_direct_lattice(args.alpha, args.eps, args.tol, false)
    } else {
        theta_comb(args.alpha, args.eps, args.tol, false)
    }
}

/// θ#(α, ε) = Σ_{n∈½+ℤ} exp{-ε n² + i n α}; anti-periodic under α → α + 2π.
pub fn theta_sharp(args: ThetaArgs) -> Result<Complex64> {
    if !(args.eps > 0.0) {
        return Err(Error::Domain(format!("theta eps must be > 0, got {}", args.eps)));
    }
    let direct = match args.regime {
        Regime::Auto => args.eps >= 1.0,
        Regime::ForceDirect => true,
        Regime::ForceJacobi => false,
    };
    if direct {
        theta_direct_lattice(args.alpha, args.eps, args.tol, true)
    } else {
        theta_comb(args.alpha, args.eps, args.tol, true)
    }
}

/// θ_ρ(α, ε) = Σ_n ρ_!(nħ)⁻¹ exp{-ε n² + i n α}.
///
/// No modular dual exists for general weights, so the series is always summed
/// directly; for ε < 0.05 with nonunit weights this returns a convergence
/// error instead of silently losing accuracy.
pub fn theta_mod(args: ThetaArgs, weights: &WeightSequence) -> Result<Complex64> {
    if !(args.eps > 0.0) {
        return Err(Error::Domain(format!("theta eps must be > 0, got {}", args.eps)));
    }
    if weights.is_unit() {
        return theta(args);
    }
    if args.eps < 0.05 {
        return Err(Error::Convergence(format!(
            "theta_mod with nonunit weights requires eps >= 0.05, got {}",
            args.eps
        )));
    }
    let b = args.alpha.im.abs();
    check_direct_overflow(args.eps, b)?;
    let term = |n: i64| -> Result<Complex64> {
        let w = weights
            .log_value(n)
            .ok_or_else(|| Error::Input(format!("missing lattice weight at n = {n}")))?;
        let i = Complex64::new(0.0, 1.0);
        let m = n as f64;
        Ok(w.inv_value() * (-args.eps * m * m + i * m * args.alpha).exp())
    };
    // extend the unit-weight cutoff until boundary terms fall below tol,
    // watching for sustained growth (divergent weight sequences)
    let mut n = n_cut(args.eps, b, args.tol)?;
    let mut grow_hi = 0u32;
    let mut grow_lo = 0u32;
    let mut last_hi = f64::INFINITY;
    let mut last_lo = f64::INFINITY;
    loop {
        let hi = term(n)?.norm();
        let lo = term(-n)?.norm();
        if hi > last_hi {
            grow_hi += 1;
        } else {
            grow_hi = 0;
        }
        if lo > last_lo {
            grow_lo += 1;
        } else {
            grow_lo = 0;
        }
        if grow_hi >= 3 || grow_lo >= 3 {
            return Err(Error::Convergence(
                "theta_mod terms grow over 3 consecutive |n|; weight sequence diverges".into(),
            ));
        }
        if hi < args.tol && lo < args.tol {
            break;
        }
        last_hi = hi;
        last_lo = lo;
        n += 1;
        if n > 1_000_000 {
            return Err(Error::Convergence(
                "theta_mod truncation exceeded 10^6 terms".into(),
            ));
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        acc += term(k)?;
        acc += term(-k)?;
    }
    acc += term(0)?;
    Ok(acc)
}

/// Residual of the difference-equation characterization of θ_ρ, realized on
/// the truncated Fourier coefficients c_n = ρ_!(nħ)⁻¹ e^{-ε n²}: the shifted
/// coefficient identity c_{m-1} e^{-ε(2m-1)} = ρ(mħ) c_m must hold for every
/// m, and the mean value over a period is c_0 = 1.
pub fn theta_mod_characterization_residual(
    weights: &WeightSequence,
    eps: f64,
    n_range: i64,
) -> Result<f64> {
    let rho = weights
        .rho()
        .ok_or_else(|| Error::Input("characterization check needs the pointwise ρ".into()))?
        .clone();
    let hbar = weights.spacing();
    let coeff = |n: i64| -> Result<Complex64> {
        let w = weights
            .log_value(n)
            .ok_or_else(|| Error::Input(format!("missing lattice weight at n = {n}")))?;
        let m = n as f64;
        Ok(w.inv_value() * (-eps * m * m).exp())
    };
    let mut max_res = (coeff(0)? - 1.0).norm();
    for m in (-n_range + 1)..=n_range {
        let lhs = coeff(m - 1)? * (-eps * (2.0 * m as f64 - 1.0)).exp();
        let rhs = rho(Complex64::new(m as f64 * hbar, 0.0)) * coeff(m)?;
        let r = (lhs - rhs).norm();
        if r > max_res {
            max_res = r;
        }
    }
    Ok(max_res)
}

/// d²/dx² ln S(x) for the real lattice sum S(x) = Σ_n w_n exp{-ε n² + n x},
/// w_n = ρ_!(nħ)⁻¹ (or 1), from the termwise-differentiated series.
pub fn theta_log_d2(x: f64, eps: f64, weights: Option<&WeightSequence>) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be > 0, got {eps}")));
    }
    let unit = weights.map(|w| w.is_unit()).unwrap_or(true);
    let center = (x / (2.0 * eps)).round() as i64;
    let spread = ((1.0 / DEFAULT_TOL).ln() / eps).sqrt().ceil() as i64 + 5;
    let (mut lo, mut hi) = (center - spread, center + spread);

    let log_term = |n: i64| -> Result<Option<(f64, f64)>> {
        // returns (log-modulus, phase) of w_n e^{-εn²+nx}
        let m = n as f64;
        let base = -eps * m * m + m * x;
        match weights {
            None => Ok(Some((base, 0.0))),
            Some(w) => match w.log_value(n) {
                Some(v) => Ok(Some((base - v.log_mod, -v.phase))),
                None => Ok(None),
            },
        }
    };
    if !unit {
        // extend outward until terms are negligible relative to the peak
        let peak = log_term(center)?
            .ok_or_else(|| Error::Input(format!("missing lattice weight at n = {center}")))?
            .0;
        let floor = peak + DEFAULT_TOL.ln();
        let mut last = f64::INFINITY;
        let mut grow = 0u32;
        loop {
            match log_term(hi + 1)? {
                Some((l, _)) if l > floor => {
                    if l > last {
                        grow += 1;
                        if grow >= 3 {
                            return Err(Error::Convergence(
                                "lattice sum terms grow over 3 consecutive n".into(),
                            ));
                        }
                    } else {
                        grow = 0;
                    }
                    last = l;
                    hi += 1;
                }
                Some(_) => break,
                None => {
                    return Err(Error::Input(format!(
                        "missing lattice weight at n = {}",
                        hi + 1
                    )))
                }
            }
            if hi - center > 1_000_000 {
                return Err(Error::Convergence("lattice sum truncation exceeded".into()));
            }
        }
        last = f64::INFINITY;
        grow = 0;
        loop {
            match log_term(lo - 1)? {
                Some((l, _)) if l > floor => {
                    if l > last {
                        grow += 1;
                        if grow >= 3 {
                            return Err(Error::Convergence(
                                "lattice sum terms grow over 3 consecutive n".into(),
                            ));
                        }
                    } else {
                        grow = 0;
                    }
                    last = l;
                    lo -= 1;
                }
                Some(_) => break,
                None => {
                    return Err(Error::Input(format!(
                        "missing lattice weight at n = {}",
                        lo - 1
                    )))
                }
            }
            if center - lo > 1_000_000 {
                return Err(Error::Convergence("lattice sum truncation exceeded".into()));
            }
        }
    }

    let mut scale = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity((hi - lo + 1) as usize);
    for n in lo..=hi {
        match log_term(n)? {
            Some(lt) => {
                if lt.0 > scale {
                    scale = lt.0;
                }
                terms.push((n, lt));
            }
            None => {
                if unit {
                    unreachable!()
                }
                return Err(Error::Input(format!("missing lattice weight at n = {n}")));
            }
        }
    }
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    for &(n, (l, ph)) in terms.iter() {
        let t = Complex64::from_polar((l - scale).exp(), ph);
        let m = n as f64;
        s0 += t;
        s1 += m * t;
        s2 += m * m * t;
    }
    if s0.re <= 0.0 || s0.im.abs() > 1e-8 * s0.norm() {
        return Err(Error::Domain(
            "lattice sum is not positive; weight sequence is unsuitable".into(),
        ));
    }
    let r1 = s1 / s0;
    let r2 = s2 / s0;
    Ok((r2 - r1 * r1).re)
}

/// d²/dα² ln θ(α, ε) for real α, summed termwise. The constant n = 0 term
/// contributes only to θ itself, so the result is accurate in absolute terms
/// down to the underflow threshold; used for exponentially small
/// deviation-from-classical measurements.
pub fn theta_log_d2_phase(alpha: f64, eps: f64) -> f64 {
    let n_max = (745.0 / eps).sqrt().ceil() as i64;
    let mut t0 = 0.0;
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for n in (1..=n_max).rev() {
        let m = n as f64;
        let e = (-eps * m * m).exp();
        t0 += 2.0 * e * (m * alpha).cos();
        t1 += -2.0 * m * e * (m * alpha).sin();
        t2 += -2.0 * m * m * e * (m * alpha).cos();
    }
    t0 += 1.0;
    t2 / t0 - (t1 / t0) * (t1 / t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force oracle: plain summation over |n| <= cutoff.
    fn theta_oracle(alpha: Complex64, eps: f64, cutoff: i64) -> Complex64 {
        let i = c(0.0, 1.0);
        let mut s = c(0.0, 0.0);
        for n in -cutoff..=cutoff {
            let m = n as f64;
            s += (-eps * m * m + i * m * alpha).exp();
        }
        s
    }

    fn theta_sharp_oracle(alpha: Complex64, eps: f64, half_cutoff: i64) -> Complex64 {
        let i = c(0.0, 1.0);
        let mut s = c(0.0, 0.0);
        for k in -half_cutoff..half_cutoff {
            let m = k as f64 + 0.5;
            s += (-eps * m * m + i * m * alpha).exp();
        }
        s
    }

    #[test]
    fn theta_at_origin() {
        // direct-summation oracle with cutoff |n| <= 10
        let oracle = theta_oracle(c(0.0, 0.0), 1.0, 10);
        assert!((oracle.re - 1.772637205).abs() < 5e-10);
        let v = theta(ThetaArgs::real(0.0, 1.0).unwrap()).unwrap();
        assert!((v - oracle).norm() < 1e-14);
    }

    #[test]
    fn theta_sharp_at_origin() {
        // half-integer oracle with |n| <= 19/2
        let oracle = theta_sharp_oracle(c(0.0, 0.0), 1.0, 10);
        assert!((oracle.re - 1.772270497).abs() < 5e-10);
        let v = theta_sharp(ThetaArgs::real(0.0, 1.0).unwrap()).unwrap();
        assert!((v - oracle).norm() < 1e-14);
    }

    #[test]
    fn theta_sharp_large_eps_limit() {
        // only n = ±1/2 survive: θ# → 2 e^{-ε/4} cos(α/2)
        let eps = 20.0;
        for &alpha in &[0.0, 0.7, 2.0, 3.1] {
            let v = theta_sharp(ThetaArgs::real(alpha, eps).unwrap()).unwrap();
            let limit = 2.0 * (-eps / 4.0).exp() * (alpha / 2.0).cos();
            assert!((v.re - limit).abs() < 1e-19, "alpha={alpha}");
            assert!(v.im.abs() < 1e-22);
        }
    }

    #[test]
    fn jacobi_identity_spot_checks() {
        for &(alpha, eps) in &[(0.3, 0.07), (2.0, 0.5), (5.9, 0.05), (1.0, 3.0)] {
            let lhs = theta(
                ThetaArgs::real(alpha, eps)
                    .unwrap()
                    .with_regime(Regime::ForceDirect),
            )
            .unwrap();
            let dual = theta(ThetaArgs::new(c(0.0, PI * alpha / eps), PI * PI / eps).unwrap())
                .unwrap();
            let rhs = (PI / eps).sqrt() * (-alpha * alpha / (4.0 * eps)).exp() * dual;
            assert!((lhs - rhs).norm() < 1e-11, "alpha={alpha} eps={eps}");
            // and the internal Jacobi regime agrees with the direct one
            let auto = theta(ThetaArgs::real(alpha, eps).unwrap()).unwrap();
            assert!((auto - lhs).norm() < 1e-11);
        }
    }

    #[test]
    fn eps_nonpositive_is_domain_error() {
        assert!(ThetaArgs::real(0.0, 0.0).is_err());
        assert!(ThetaArgs::real(0.0, -1.0).is_err());
    }

    #[test]
    fn direct_regime_overflow_is_convergence_error() {
        // huge |Im α| with the Jacobi switch disabled
        let args = ThetaArgs::new(c(0.0, 2000.0), 0.5)
            .unwrap()
            .with_regime(Regime::ForceDirect);
        assert!(matches!(theta(args), Err(Error::Convergence(_))));
    }

    #[test]
    fn theta_mod_unit_weights_is_theta() {
        let ws = WeightSequence::unit(1.0);
        for &(alpha, eps) in &[(0.4, 1.3), (2.2, 0.8)] {
            let a = ThetaArgs::real(alpha, eps).unwrap();
            let lhs = theta_mod(a, &ws).unwrap();
            let rhs = theta(a).unwrap();
            assert!((lhs - rhs).norm() < 1e-15);
        }
    }

    fn su11_weights(range: i64) -> WeightSequence {
        // ν = 1/(t + a - ħ/2 + iλ) with a = 0, ħ = 1, λ = 1
        let rho: CFn = Arc::new(|t: Complex64| 1.0 / (t - 0.5 + c(0.0, 1.0)));
        WeightSequence::from_rho(rho, 1.0, -range, range).unwrap()
    }

    #[test]
    fn theta_mod_su11_weights_match_brute_force() {
        let ws = su11_weights(80);
        let eps = 0.9;
        for &alpha in &[0.0, 1.1, 4.4] {
            let a = ThetaArgs::real(alpha, eps).unwrap();
            let v = theta_mod(a, &ws).unwrap();
            // independent direct summation with a much larger cutoff
            // (kept below the ν_! underflow range)
            let mut oracle = c(0.0, 0.0);
            let i = c(0.0, 1.0);
            for n in -40i64..=40 {
                let m = n as f64;
                let w = ws.value(n).unwrap();
                oracle += (1.0 / w) * (-eps * m * m + i * m * alpha).exp();
            }
            assert!((v - oracle).norm() < 1e-10, "alpha={alpha}");
        }
    }

    #[test]
    fn theta_mod_missing_weight_is_input_error() {
        let ws = su11_weights(5);
        let a = ThetaArgs::real(0.0, 0.06).unwrap();
        assert!(matches!(theta_mod(a, &ws), Err(Error::Input(_))));
    }

    #[test]
    fn theta_mod_small_eps_nonunit_rejected() {
        let ws = su11_weights(50);
        let a = ThetaArgs::real(0.0, 0.01).unwrap();
        assert!(matches!(theta_mod(a, &ws), Err(Error::Convergence(_))));
    }

    #[test]
    fn theta_mod_divergent_weights_detected() {
        // ρ(t) = 1/cosh(t): ρ_!(nħ) ~ e^{-n²/2}, so 1/ρ_! outgrows the
        // Gaussian whenever ε < 1/2 and the series diverges
        let rho: CFn = Arc::new(|t: Complex64| 1.0 / t.cosh());
        let ws = WeightSequence::from_rho(rho, 1.0, -300, 300).unwrap();
        let a = ThetaArgs::real(0.3, 0.3).unwrap();
        assert!(matches!(theta_mod(a, &ws), Err(Error::Convergence(_))));
    }

    #[test]
    fn characterization_residual_small() {
        let ws = su11_weights(60);
        let r = theta_mod_characterization_residual(&ws, 1.1, 40).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn log_d2_matches_finite_difference() {
        let h = 1e-4;
        let eps = 2.3;
        // kernel-style real weights: ρ = |ν|², so w_n = |ν_!(nħ)|⁻²
        let ws = su11_weights(60).abs_squared();
        for &x in &[0.0, 0.8, -1.9] {
            for weights in [None, Some(&ws)] {
                let ana = theta_log_d2(x, eps, weights).unwrap();
                let s = |y: f64| {
                    let mut acc = 0.0;
                    for n in -40i64..=40 {
                        let m = n as f64;
                        let w = weights
                            .map(|w| w.value(n).unwrap().re.recip())
                            .unwrap_or(1.0);
                        acc += w * (-eps * m * m + m * y).exp();
                    }
                    acc.ln()
                };
                let fd = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
                assert!((ana - fd).abs() < 1e-6, "x={x} ana={ana} fd={fd}");
            }
        }
    }

    #[test]
    fn log_d2_single_term_limit() {
        // with a huge ε only n = 0 survives and ln S is constant
        let v = theta_log_d2(0.3, 500.0, None).unwrap();
        assert!(v.abs() < 1e-200);
    }

    #[test]
    fn log_d2_lattice_shift_periodicity() {
        let eps = 1.7;
        for &x in &[0.0, 0.9, -2.4] {
            let a = theta_log_d2(x, eps, None).unwrap();
            let b = theta_log_d2(x + 2.0 * eps, eps, None).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_d2_phase_matches_difference_quotient() {
        let eps = 9.87;
        for &alpha in &[0.0, 1.0, 2.5] {
            let ana = theta_log_d2_phase(alpha, eps);
            let f = |a: f64| theta(ThetaArgs::real(a, eps).unwrap()).unwrap().re.ln();
            let h = 1e-4;
            let fd = (f(alpha + h) - 2.0 * f(alpha) + f(alpha - h)) / (h * h);
            assert!((ana - fd).abs() < 1e-6, "alpha={alpha}");
        }
    }

    proptest! {
        #[test]
        fn theta_two_pi_periodic(alpha in -8.0f64..8.0, eps in 0.1f64..4.0) {
            let a = theta(ThetaArgs::real(alpha, eps).unwrap()).unwrap();
            let b = theta(ThetaArgs::real(alpha + 2.0 * PI, eps).unwrap()).unwrap();
            prop_assert!((a - b).norm() < 1e-11);
        }

        #[test]
        fn theta_sharp_anti_periodic(alpha in -8.0f64..8.0, eps in 0.1f64..4.0) {
            let a = theta_sharp(ThetaArgs::real(alpha, eps).unwrap()).unwrap();
            let b = theta_sharp(ThetaArgs::real(alpha + 2.0 * PI, eps).unwrap()).unwrap();
            prop_assert!((a + b).norm() < 1e-11);
        }

        #[test]
        fn theta_conjugate_symmetry(alpha in -8.0f64..8.0, eps in 0.1f64..4.0) {
            let a = theta(ThetaArgs::real(alpha, eps).unwrap()).unwrap();
            let b = theta(ThetaArgs::real(-alpha, eps).unwrap()).unwrap();
            prop_assert!((b - a.conj()).norm() < 1e-12);
        }

        #[test]
        fn jacobi_duality_property(alpha in 0.0f64..std::f64::consts::TAU, eps in 0.05f64..5.0) {
            let lhs = theta(ThetaArgs::real(alpha, eps).unwrap()
                .with_regime(Regime::ForceDirect)).unwrap();
            let dual = theta(ThetaArgs::new(c(0.0, PI * alpha / eps), PI * PI / eps).unwrap()).unwrap();
            let rhs = (PI / eps).sqrt() * (-alpha * alpha / (4.0 * eps)).exp() * dual;
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }
    }
}
