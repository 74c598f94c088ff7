//! Deformation flows Φ_t on ℝ^{k+1}, their Casimirs, the surface profile
//! ℱ(t) = φ⁰_t(a₀, a), classification of the symplectic leaf, and resonance
//! detection, together with the two concrete example flows.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

pub type ZeroFn = Arc<dyn Fn(f64, f64, &[Complex64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, f64, &[Complex64]) -> Vec<Complex64> + Send + Sync>;
pub type CasimirFn = Arc<dyn Fn(f64, &[Complex64]) -> Complex64 + Send + Sync>;

/// One-parameter deformation flow with its Casimirs and base point.
///
/// The vector component may carry non-Hermitian complex combinations of the
/// Hermitian generators; `hermitian[j]` records which components are real.
#[derive(Clone)]
pub struct DeformationFlow {
    pub zero: ZeroFn,
    pub vector: VectorFn,
    pub casimirs: Vec<(String, CasimirFn)>,
    pub k: usize,
    pub hbar: f64,
    pub base_a0: f64,
    pub base_a: Vec<Complex64>,
    pub hermitian: Vec<bool>,
}

impl DeformationFlow {
    /// Φ_t applied to the base point.
    pub fn at(&self, t: f64) -> (f64, Vec<Complex64>) {
        (
            (self.zero)(t, self.base_a0, &self.base_a),
            (self.vector)(t, self.base_a0, &self.base_a),
        )
    }

    /// Surface profile ℱ(t) = φ⁰_t(a₀, a).
    pub fn profile(&self, t: f64) -> f64 {
        (self.zero)(t, self.base_a0, &self.base_a)
    }

    fn distance_to_base(&self, t: f64) -> f64 {
        let (f, v) = self.at(t);
        let mut d = (f - self.base_a0).abs();
        for (x, a) in v.iter().zip(self.base_a.iter()) {
            d += (x - a).norm();
        }
        d
    }

    /// Max componentwise residual of Φ_{t+s} = Φ_t ∘ Φ_s over the given pairs.
    pub fn group_law_residual(&self, pairs: &[(f64, f64)]) -> f64 {
        let mut worst = 0.0f64;
        for &(t, s) in pairs {
            let (f1, v1) = self.at(s);
            let f2 = (self.zero)(t, f1, &v1);
            let v2 = (self.vector)(t, f1, &v1);
            let (f3, v3) = self.at(t + s);
            worst = worst.max((f2 - f3).abs());
            for (a, b) in v2.iter().zip(v3.iter()) {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Max deviation of every Casimir from its base value along the trajectory.
    pub fn casimir_residual(&self, ts: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (_, kappa) in &self.casimirs {
            let base = kappa(self.base_a0, &self.base_a);
            for &t in ts {
                let (f, v) = self.at(t);
                worst = worst.max((kappa(f, &v) - base).norm());
            }
        }
        worst
    }
}

/// ℱ(t) = φ⁰_t(a₀, a).
pub fn surface_profile(flow: &DeformationFlow, t: f64) -> f64 {
    flow.profile(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Plane,
    Sphere,
    Cylinder,
    Torus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceClass {
    pub kind: SurfaceKind,
    /// Full period T; equals N·ħ in the resonant case.
    pub period: Option<f64>,
    /// Minimal period T₀ of the flow through the base point.
    pub minimal_period: Option<f64>,
    /// (N, m) with T₀ = Nħ/m, gcd(N, m) = 1, in the resonant case.
    pub resonance: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            t_min: -20.0,
            t_max: 20.0,
            samples: 2000,
        }
    }
}

/// Decide plane / sphere / cylinder / torus for the leaf through the base
/// point. The torus branch locates the first return of the trajectory by a
/// coarse scan of the window [ħ/10, 10³ħ] refined by ternary search.
pub fn classify_surface(flow: &DeformationFlow, scan: ScanSpec) -> Result<SurfaceClass> {
    if scan.samples < 100 {
        return Err(Error::Parameter(format!(
            "classify_surface needs at least 100 samples, got {}",
            scan.samples
        )));
    }
    let a0 = flow.base_a0;
    if a0 == 0.0 {
        return classify_degenerate_base(flow, scan);
    }
    if a0 < 0.0 {
        return Err(Error::UnsupportedSurface(format!("base a0 = {a0} < 0")));
    }
    // profile must stay positive on the scan window
    let h = (scan.t_max - scan.t_min) / scan.samples as f64;
    for i in 0..=scan.samples {
        let t = scan.t_min + i as f64 * h;
        let f = flow.profile(t);
        if f <= 0.0 {
            return Err(Error::UnsupportedSurface(format!(
                "profile F({t}) = {f} <= 0 with a0 > 0: degenerate leaf"
            )));
        }
    }
    let scale = 1.0 + a0.abs() + flow.base_a.iter().map(|a| a.norm()).sum::<f64>();
    // first-return search
    let lo = flow.hbar / 10.0;
    let hi = 1000.0 * flow.hbar;
    let n = 200_000usize;
    let step = (hi - lo) / n as f64;
    let mut d_prev = flow.distance_to_base(lo);
    if (0..=n)
        .map(|i| flow.distance_to_base(lo + i as f64 * step))
        .fold(0.0f64, f64::max)
        < 1e-12 * scale
    {
        return Err(Error::UnsupportedSurface(
            "flow fixes the base point: degenerate leaf".into(),
        ));
    }
    let mut d_here = flow.distance_to_base(lo + step);
    for i in 2..=n {
        let t = lo + i as f64 * step;
        let d_next = flow.distance_to_base(t);
        if d_here <= d_prev && d_here <= d_next {
            // local minimum: refine and test for an actual return
            let t_ref = ternary_min(|x| flow.distance_to_base(x), t - 2.0 * step, t, 200);
            if flow.distance_to_base(t_ref) < 1e-10 * scale {
                let t0 = t_ref;
                let resonance = detect_resonance(t0, flow.hbar, 1e-9);
                let period = match resonance {
                    Some((n_res, _)) => n_res as f64 * flow.hbar,
                    None => t0,
                };
                return Ok(SurfaceClass {
                    kind: SurfaceKind::Torus,
                    period: Some(period),
                    minimal_period: Some(t0),
                    resonance,
                });
            }
        }
        d_prev = d_here;
        d_here = d_next;
    }
    Ok(SurfaceClass {
        kind: SurfaceKind::Cylinder,
        period: None,
        minimal_period: None,
        resonance: None,
    })
}

fn classify_degenerate_base(flow: &DeformationFlow, scan: ScanSpec) -> Result<SurfaceClass> {
    // a0 = 0: plane if F > 0 for all t on one side, sphere if F > 0 only up
    // to an interior zero.
    let side = |sign: f64| -> (bool, bool) {
        // (stays positive, positive then hits zero)
        let n = scan.samples;
        let t_end = if sign > 0.0 {
            scan.t_max.abs().max(1.0)
        } else {
            scan.t_min.abs().max(1.0)
        };
        let mut positive_seen = false;
        for i in 1..=n {
            let t = sign * t_end * i as f64 / n as f64;
            let f = flow.profile(t);
            if f <= 0.0 {
                return (false, positive_seen);
            }
            positive_seen = true;
        }
        (true, false)
    };
    let (pos_up, zero_up) = side(1.0);
    let (pos_dn, zero_dn) = side(-1.0);
    if pos_up || pos_dn {
        return Ok(SurfaceClass {
            kind: SurfaceKind::Plane,
            period: None,
            minimal_period: None,
            resonance: None,
        });
    }
    if zero_up || zero_dn {
        return Ok(SurfaceClass {
            kind: SurfaceKind::Sphere,
            period: None,
            minimal_period: None,
            resonance: None,
        });
    }
    Err(Error::UnsupportedSurface(
        "a0 = 0 with nonpositive profile on both sides".into(),
    ))
}

fn ternary_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Rational reconstruction of T₀/ħ by continued fractions.
///
/// Returns (N, m) with T₀ = Nħ/m and gcd(N, m) = 1 when T₀/ħ is rational
/// within `tol·max(1, T₀/ħ)` at denominator ≤ 10⁶; `None` otherwise. Exact
/// rational/irrational separation is impossible in floating point, so the
/// criterion is the appearance of an extremely large partial quotient.
pub fn detect_resonance(t0: f64, hbar: f64, tol: f64) -> Option<(i64, i64)> {
    const Q_MAX: i64 = 1_000_000;
    if !(t0 > 0.0) || !(hbar > 0.0) {
        return None;
    }
    let x = t0 / hbar;
    let tol_abs = tol * x.max(1.0);
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (x.floor() as i64, 1i64);
    let mut r = x - x.floor();
    for _ in 0..64 {
        let approx = p as f64 / q as f64;
        if r.abs() < 1e-12 || 1.0 / r.max(1e-300) > 1e9 {
            // expansion terminates: candidate rational
            if (x - approx).abs() <= tol_abs && q <= Q_MAX && p > 0 {
                return Some((p, q));
            }
            return None;
        }
        r = 1.0 / r;
        let a = r.floor();
        r -= a;
        let a = a as i64;
        let p_next = a * p + p_prev;
        let q_next = a * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        if q > Q_MAX {
            return None;
        }
    }
    None
}

/// Flow of the degenerate Sklyanin algebra: Φ_t(A₀, A) with φ_t(A) = q^t A,
/// q = e^{iφ}, ħ = 1. The vector part carries the single non-Hermitian
/// combination A = A₁ + iA₂.
pub fn sklyanin_flow(phi: f64, kappa1: f64, psi: f64, a0: f64) -> Result<DeformationFlow> {
    if !(phi > 0.0 && phi < std::f64::consts::PI) {
        return Err(Error::Parameter(format!(
            "sklyanin flow needs 0 < phi < pi, got {phi}"
        )));
    }
    if !(kappa1 > 0.0) {
        return Err(Error::Parameter(format!("kappa1 must be > 0, got {kappa1}")));
    }
    if a0 <= kappa1 * (1.0 - (psi - phi).cos()) / phi.sin() {
        return Err(Error::Parameter(format!(
            "surface parameters violate a0 > kappa1 (1 - cos(psi - phi))/sin(phi): a0 = {a0}"
        )));
    }
    let q = Complex64::from_polar(1.0, phi);
    let qbar = q.conj();
    let i = Complex64::new(0.0, 1.0);
    let denom = i * (q - qbar);
    let zero: ZeroFn = Arc::new(move |t, a0_val, a| {
        let av = a[0];
        let qt2 = Complex64::from_polar(1.0, 2.0 * phi * t);
        let num = qbar * (qt2 - 1.0) * av * av + q * (qt2.conj() - 1.0) * av.conj() * av.conj();
        a0_val + (num / denom).re
    });
    let vector: VectorFn = Arc::new(move |t, _a0, a| {
        vec![Complex64::from_polar(1.0, phi * t) * a[0]]
    });
    let kappa0: CasimirFn = Arc::new(move |a0_val, a| {
        let av = a[0];
        let v0 = (qbar * av * av + q * av.conj() * av.conj()) / denom;
        Complex64::new(a0_val, 0.0) - v0
    });
    let kappa1_fn: CasimirFn = Arc::new(|_a0, a| Complex64::new(a[0].norm_sqr(), 0.0));
    Ok(DeformationFlow {
        zero,
        vector,
        casimirs: vec![
            ("kappa0".into(), kappa0),
            ("kappa1".into(), kappa1_fn),
        ],
        k: 1,
        hbar: 1.0,
        base_a0: a0,
        base_a: vec![Complex64::from_polar(kappa1.sqrt(), psi / 2.0)],
        hermitian: vec![false],
    })
}

/// Flow of su(1,1): Φ_t(A₀, A) = (t² + t(2A - ħ) + A₀, A + t); the leaf is a
/// one-sheet hyperboloid BC - (A - ħ/2)² = λ².
pub fn su11_flow(a0: f64, a: f64, hbar: f64) -> Result<DeformationFlow> {
    let lambda2 = a0 - (a - hbar / 2.0) * (a - hbar / 2.0);
    if !(lambda2 > 0.0) {
        return Err(Error::Parameter(format!(
            "su(1,1) flow needs a0 - (a - hbar/2)^2 > 0, got {lambda2}"
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::Parameter(format!("hbar must be > 0, got {hbar}")));
    }
    let h = hbar;
    let zero: ZeroFn = Arc::new(move |t, a0_val, av| {
        t * t + t * (2.0 * av[0].re - h) + a0_val
    });
    let vector: VectorFn = Arc::new(move |t, _a0, av| vec![av[0] + t]);
    let kappa: CasimirFn = Arc::new(move |a0_val, av| {
        let d = av[0] - h / 2.0;
        Complex64::new(a0_val, 0.0) - d * d
    });
    Ok(DeformationFlow {
        zero,
        vector,
        casimirs: vec![("lambda^2".into(), kappa)],
        k: 1,
        hbar,
        base_a0: a0,
        base_a: vec![Complex64::new(a, 0.0)],
        hermitian: vec![true],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Fixed-seed linear congruential generator for reproducible sample points.
    pub(crate) struct Lcg(u64);
    impl Lcg {
        pub fn new(seed: u64) -> Self {
            Lcg(seed)
        }
        pub fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.next_f64()
        }
    }

    fn sample_pairs(n: usize) -> Vec<(f64, f64)> {
        let mut rng = Lcg::new(0x5eed);
        (0..n)
            .map(|_| (rng.in_range(-5.0, 5.0), rng.in_range(-5.0, 5.0)))
            .collect()
    }

    #[test]
    fn su11_profile_closed_form() {
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        assert!((flow.profile(0.0) - 1.25).abs() < 1e-15);
        for &t in &[-3.0, -0.5, 0.7, 4.2] {
            let expect = t * t - t + 1.25;
            assert!((flow.profile(t) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sklyanin_profile_closed_form() {
        // phi = pi/2, kappa1 = 1, psi = 0, a0 = 2
        let flow = sklyanin_flow(PI / 2.0, 1.0, 0.0, 2.0).unwrap();
        for i in 0..=40 {
            let t = -2.0 + 0.1 * i as f64;
            let expect = 2.0 + (-PI / 2.0).cos() - ((2.0 * t - 1.0) * PI / 2.0).cos();
            assert!(
                (flow.profile(t) - expect).abs() < 1e-12,
                "t = {t}: {} vs {expect}",
                flow.profile(t)
            );
        }
    }

    #[test]
    fn identity_at_time_zero() {
        for flow in [
            sklyanin_flow(PI / 3.0, 1.0, 0.4, 2.0).unwrap(),
            su11_flow(1.25, 0.0, 1.0).unwrap(),
        ] {
            let (f, v) = flow.at(0.0);
            assert!((f - flow.base_a0).abs() < 1e-15);
            assert!((v[0] - flow.base_a[0]).norm() < 1e-15);
        }
    }

    #[test]
    fn group_law_and_casimirs() {
        let pairs = sample_pairs(100);
        let ts: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
        for flow in [
            sklyanin_flow(PI / 2.0, 1.0, 0.0, 2.0).unwrap(),
            sklyanin_flow(2.0 * PI / 5.0, 0.7, 0.3, 2.5).unwrap(),
            su11_flow(1.25, 0.0, 1.0).unwrap(),
            su11_flow(2.0, 0.5, 0.25).unwrap(),
        ] {
            assert!(flow.group_law_residual(&pairs) < 1e-12);
            assert!(flow.casimir_residual(&ts) < 1e-12);
        }
    }

    #[test]
    fn sklyanin_kappa1_along_trajectory() {
        let flow = sklyanin_flow(PI / 2.0, 1.0, 0.0, 2.0).unwrap();
        for &t in &[0.3, 1.9, -4.4] {
            let (_, v) = flow.at(t);
            assert!((v[0].norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn classify_sklyanin_torus() {
        let flow = sklyanin_flow(PI / 2.0, 1.0, 0.0, 2.0).unwrap();
        let class = classify_surface(&flow, ScanSpec::default()).unwrap();
        assert_eq!(class.kind, SurfaceKind::Torus);
        let t0 = class.minimal_period.unwrap();
        assert!((t0 - 4.0).abs() < 1e-9, "T0 = {t0}");
        assert_eq!(class.resonance, Some((4, 1)));
        assert!((flow.distance_to_base(class.period.unwrap())) < 1e-10);
    }

    #[test]
    fn classify_su11_cylinder() {
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        let class = classify_surface(&flow, ScanSpec::default()).unwrap();
        assert_eq!(class.kind, SurfaceKind::Cylinder);
        assert!(class.period.is_none());
    }

    #[test]
    fn classify_stable_under_refinement() {
        let flow = sklyanin_flow(2.0 * PI / 3.0, 1.0, 0.0, 2.0).unwrap();
        let base = classify_surface(
            &flow,
            ScanSpec {
                samples: 500,
                ..ScanSpec::default()
            },
        )
        .unwrap();
        let fine = classify_surface(
            &flow,
            ScanSpec {
                samples: 1000,
                ..ScanSpec::default()
            },
        )
        .unwrap();
        assert_eq!(base.kind, fine.kind);
        assert_eq!(base.resonance, fine.resonance);
    }

    #[test]
    fn classify_plane_and_sphere() {
        // toy flows with a0 = 0
        let plane = DeformationFlow {
            zero: Arc::new(|t, a0, _| a0 + t),
            vector: Arc::new(|t, _, a| vec![a[0] + t]),
            casimirs: vec![],
            k: 1,
            hbar: 1.0,
            base_a0: 0.0,
            base_a: vec![Complex64::new(0.0, 0.0)],
            hermitian: vec![true],
        };
        assert_eq!(
            classify_surface(&plane, ScanSpec::default()).unwrap().kind,
            SurfaceKind::Plane
        );
        let sphere = DeformationFlow {
            zero: Arc::new(|t, a0, _| a0 + t * (3.0 - t)),
            vector: Arc::new(|t, _, a| vec![a[0] + t]),
            casimirs: vec![],
            k: 1,
            hbar: 1.0,
            base_a0: 0.0,
            base_a: vec![Complex64::new(0.0, 0.0)],
            hermitian: vec![true],
        };
        assert_eq!(
            classify_surface(&sphere, ScanSpec::default()).unwrap().kind,
            SurfaceKind::Sphere
        );
    }

    #[test]
    fn degenerate_profile_is_error() {
        let flow = DeformationFlow {
            zero: Arc::new(|t, a0, _| a0 - t * t),
            vector: Arc::new(|t, _, a| vec![a[0] + t]),
            casimirs: vec![],
            k: 1,
            hbar: 1.0,
            base_a0: 1.0,
            base_a: vec![Complex64::new(0.0, 0.0)],
            hermitian: vec![true],
        };
        assert!(matches!(
            classify_surface(&flow, ScanSpec::default()),
            Err(Error::UnsupportedSurface(_))
        ));
    }

    #[test]
    fn resonance_detection_cases() {
        // T0 = 2π/φ with φ = 2π/4
        let t0 = 2.0 * PI / (2.0 * PI / 4.0);
        assert_eq!(detect_resonance(t0, 1.0, 1e-9), Some((4, 1)));
        // irrational ratio
        assert_eq!(detect_resonance(std::f64::consts::SQRT_2, 1.0, 1e-9), None);
        // exact multiple: T0 = 5/3, ħ = 1/3
        assert_eq!(detect_resonance(5.0 / 3.0, 1.0 / 3.0, 1e-9), Some((5, 1)));
        // m > 1: T0 = 8/3 at ħ = 1
        assert_eq!(detect_resonance(8.0 / 3.0, 1.0, 1e-9), Some((8, 3)));
    }

    proptest::proptest! {
        #[test]
        fn group_law_property(t in -5.0f64..5.0, s in -5.0f64..5.0,
                              phi in 0.3f64..2.2, a0 in 4.0f64..8.0) {
            // (1 - cos(ψ-φ))/sin φ stays below 1.6 on this range, so the
            // surface condition holds for every sampled a0
            let flow = sklyanin_flow(phi, 1.0, 0.4, a0).unwrap();
            proptest::prop_assert!(flow.group_law_residual(&[(t, s)]) < 1e-12);
            let su = su11_flow(1.25, 0.0, 1.0).unwrap();
            proptest::prop_assert!(su.group_law_residual(&[(t, s)]) < 1e-12);
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(sklyanin_flow(PI / 2.0, 1.0, 0.0, 0.5).is_err()); // (5.2) fails
        assert!(sklyanin_flow(-0.1, 1.0, 0.0, 2.0).is_err());
        assert!(su11_flow(0.25, 1.0, 1.0).is_err()); // λ² < 0
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        assert!(classify_surface(
            &flow,
            ScanSpec {
                samples: 10,
                ..ScanSpec::default()
            }
        )
        .is_err());
    }
}
