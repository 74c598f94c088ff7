//! Coherent states, the partition of unity, the coherent transform, and
//! intertwining verification.
//!
//! The coherent state labelled by the surface point z has orthonormal-basis
//! coefficients c_n(z) = conj(e⁽ⁿ⁾(z̄))|_{z̄ = conj z}: the kernel vector of
//! the evaluation functional. Inner products here are antilinear in the
//! first slot, (x, y) = Σ conj(x_n) y_n, so that (𝒫_w, 𝒫_z) = K(w̄|z).

use crate::cmatrix::CMat;
use crate::error::{Error, Result};
use crate::kernels::{cylinder_basis_raw, p_scaled, torus_basis_raw, Geometry, KernelContext};
use crate::quad::gauss_legendre;
use crate::report::CheckReport;
use crate::representations::Representation;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub z: Complex64,
    /// Coefficients indexed like the representation basis.
    pub coefficients: Vec<Complex64>,
}

impl CoherentState {
    /// ‖𝒫_z‖².
    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// (x, y) = Σ conj(x_n) y_n.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Expand θ_ν̄(z/i + ŝ, τħ/2) 𝒫⁰ over the basis: the power n of the pure
/// shift e^{iŝ} lands on slot n (cylinder) or n mod N (torus), giving
/// c_n(z) = conj(e⁽ⁿ⁾(conj z)).
pub fn coherent_state(rep: &Representation, z: Complex64) -> Result<CoherentState> {
    let fact = rep.fact();
    let eps = rep.tau() * rep.hbar();
    let coefficients = match rep {
        Representation::Cylinder(r) => {
            let vals = cylinder_basis_raw(&fact.nu_factorial, eps, -r.m_trunc, r.m_trunc, z.conj())?;
            vals.into_iter().map(|v| v.conj()).collect()
        }
        Representation::Torus(r) => {
            let (vals, _) = torus_basis_raw(&fact.nu_factorial, eps, r.n_dim as i64, z.conj())?;
            vals.into_iter().map(|v| v.conj()).collect()
        }
    };
    Ok(CoherentState { z, coefficients })
}

/// Lattice block over which quadrature checks run: the whole index set for
/// a torus, a caller-chosen interior window for truncated cylinders.
#[derive(Debug, Clone, Copy)]
pub struct IndexBlock {
    pub n_lo: i64,
    pub n_hi: i64,
}

impl IndexBlock {
    pub fn len(&self) -> usize {
        (self.n_hi - self.n_lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n_hi < self.n_lo
    }
}

/// (1/2πħ) ∬ Π(z̄|z) dm over the fundamental domain, as a matrix over the
/// index block: the integrated projector whose deviation from the identity
/// is the partition-of-unity residual. The coherent transform is exactly
/// this matrix applied to basis coefficients.
pub fn integrated_projector(
    rep: &Representation,
    ctx: &KernelContext,
    block: IndexBlock,
) -> Result<CMat> {
    let eps = ctx.eps();
    let hbar_tau = ctx.hbar * ctx.tau;
    let c0 = (hbar_tau / PI).sqrt() / (2.0 * PI * ctx.hbar * ctx.tau);
    match (&ctx.geometry, rep) {
        (Geometry::Torus { n, .. }, Representation::Torus(_)) => {
            let n_dim = *n;
            if block.n_lo != 0 || block.n_hi != n_dim - 1 {
                return Err(Error::Parameter(
                    "torus projector block must be the full index range".into(),
                ));
            }
            let d = n_dim as usize;
            let n_u = ctx.grid.n_u;
            let n_v = ctx.grid.n_v;
            let u_span = hbar_tau * n_dim as f64;
            let parts: Vec<Result<CMat>> = crate::par::chunked_results(n_u, 8, |range| {
                let mut p = CMat::zeros(d);
                for iu in range {
                    let u = u_span * iu as f64 / n_u as f64;
                    let (ps, pm) = p_scaled(ctx, 2.0 * u)?;
                    let gauss = pm * (ps - u * u / hbar_tau).exp();
                    for iv in 0..n_v {
                        let v = 2.0 * PI * iv as f64 / n_v as f64;
                        let z = Complex64::new(u, v);
                        let (vals, _) =
                            torus_basis_raw(&ctx.fact.nu_factorial, eps, n_dim, z.conj())?;
                        let c: Vec<Complex64> = vals.iter().map(|x| x.conj()).collect();
                        for mi in 0..d {
                            let row = c[mi] * gauss;
                            for ni in 0..d {
                                p[(mi, ni)] += row * c[ni].conj();
                            }
                        }
                    }
                }
                Ok(p)
            });
            let mut p = CMat::zeros(d);
            for part in parts {
                p = p.add(&part?);
            }
            let area = (u_span / n_u as f64) * (2.0 * PI / n_v as f64);
            Ok(p.scale(Complex64::new(c0 * area, 0.0)))
        }
        (Geometry::Cylinder, Representation::Cylinder(r)) => {
            if block.n_lo < -r.m_trunc || block.n_hi > r.m_trunc || block.is_empty() {
                return Err(Error::Parameter("projector block outside truncation".into()));
            }
            let d = block.len();
            let span = (block.n_hi - block.n_lo) as usize;
            let n_v = ctx.grid.n_v.max(2 * span + 8);
            // adaptive window: Gaussian factors sit at u = nħτ
            let mut w = (hbar_tau * (1e24f64).ln()).sqrt();
            let (u_lo, u_hi) = loop {
                let lo = block.n_lo as f64 * hbar_tau - w;
                let hi = block.n_hi as f64 * hbar_tau + w;
                let edge = |u: f64| -> Result<f64> {
                    let (ps, pm) = p_scaled(ctx, 2.0 * u)?;
                    let mut m = f64::NEG_INFINITY;
                    for n in block.n_lo..=block.n_hi {
                        let lf = ctx.fact.nu_factorial.log_value(n).ok_or_else(|| {
                            Error::Input(format!("missing nu_! lattice value at n = {n}"))
                        })?;
                        m = m.max(-lf.log_mod - eps * (n * n) as f64 / 2.0 + n as f64 * u);
                    }
                    Ok(2.0 * m + ps + (pm.abs() + 1e-300).ln() - u * u / hbar_tau)
                };
                if edge(lo)? < -55.0 && edge(hi)? < -55.0 {
                    break (lo, hi);
                }
                w *= 1.4;
                if w > 1e4 {
                    return Err(Error::Convergence(
                        "projector window failed to close".into(),
                    ));
                }
            };
            let h = 0.35 * hbar_tau.sqrt();
            let k_lo = (u_lo / h).floor() as i64;
            let k_hi = (u_hi / h).ceil() as i64;
            let rule = gauss_legendre(12);
            let mut p = CMat::zeros(d);
            for ip in k_lo..k_hi {
                let mid = (ip as f64 + 0.5) * h;
                for &(xg, wg) in &rule {
                    let u = mid + 0.5 * h * xg;
                    let (ps, pm) = p_scaled(ctx, 2.0 * u)?;
                    let gauss_log = ps - u * u / hbar_tau;
                    if gauss_log + (pm.abs() + 1e-300).ln() < -200.0 {
                        continue;
                    }
                    let uw = wg * 0.5 * h * pm * gauss_log.exp();
                    for iv in 0..n_v {
                        let v = 2.0 * PI * iv as f64 / n_v as f64;
                        let z = Complex64::new(u, v);
                        let vals = cylinder_basis_raw(
                            &ctx.fact.nu_factorial,
                            eps,
                            block.n_lo,
                            block.n_hi,
                            z.conj(),
                        )?;
                        let c: Vec<Complex64> = vals.iter().map(|x| x.conj()).collect();
                        for mi in 0..d {
                            let row = c[mi] * uw;
                            for ni in 0..d {
                                p[(mi, ni)] += row * c[ni].conj();
                            }
                        }
                    }
                }
            }
            Ok(p.scale(Complex64::new(c0 * 2.0 * PI / n_v as f64, 0.0)))
        }
        _ => Err(Error::Input("geometry does not match the representation".into())),
    }
}

/// Partition-of-unity residual: max |entry - δ| of the integrated projector
/// against the identity on the verified index block.
pub fn partition_of_unity(
    rep: &Representation,
    ctx: &KernelContext,
    block: IndexBlock,
    tol: f64,
) -> Result<CheckReport> {
    let p = integrated_projector(rep, ctx, block)?;
    let dev = p.sub(&CMat::identity(block.len())).max_abs();
    Ok(CheckReport::new("partition-of-unity", dev, tol)
        .with_param("n_lo", block.n_lo.to_string())
        .with_param("n_hi", block.n_hi.to_string())
        .with_param("grid", format!("{}x{}", ctx.grid.n_u, ctx.grid.n_v)))
}

/// Coherent transform ψ ↦ (1/2πħ)∬ (ψ(z̄)/K) 𝒫_z dm of a coefficient
/// vector over the block; reproduces the vector when the partition of unity
/// holds.
pub fn coherent_transform(
    rep: &Representation,
    ctx: &KernelContext,
    block: IndexBlock,
    psi: &[Complex64],
) -> Result<Vec<Complex64>> {
    if psi.len() != block.len() {
        return Err(Error::Input(format!(
            "coefficient vector length {} does not match block length {}",
            psi.len(),
            block.len()
        )));
    }
    let p = integrated_projector(rep, ctx, block)?;
    Ok(p.apply(psi))
}

/// Unitarity of the transform: max |(P*P - I)_{mn}| where P is the
/// integrated projector (the Gram matrix of the transformed basis).
pub fn transform_gram_residual(
    rep: &Representation,
    ctx: &KernelContext,
    block: IndexBlock,
) -> Result<f64> {
    let p = integrated_projector(rep, ctx, block)?;
    let g = p.adjoint().mul(&p);
    Ok(g.sub(&CMat::identity(block.len())).max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    A(usize),
    B,
    C,
    Identity,
}

/// Intertwining residual ‖T(Ĝψ) - Ĝ(Tψ)‖ over the basis of the block:
/// the max entry of the commutator [P, G] on the inner indices (shift
/// generators consume one index of margin on truncated cylinders).
pub fn intertwining_check(
    rep: &Representation,
    ctx: &KernelContext,
    block: IndexBlock,
    which: GeneratorKind,
    tol: f64,
) -> Result<CheckReport> {
    let p = integrated_projector(rep, ctx, block)?;
    let d = block.len();
    let g = generator_matrix(rep, block, which)?;
    let comm = p.mul(&g).sub(&g.mul(&p));
    let residual = match rep {
        Representation::Torus(_) => comm.max_abs(),
        Representation::Cylinder(_) => {
            if d < 3 {
                return Err(Error::Parameter("cylinder block too small".into()));
            }
            match which {
                GeneratorKind::B | GeneratorKind::C => comm.max_abs_block(1, d - 2),
                _ => comm.max_abs(),
            }
        }
    };
    let name = match which {
        GeneratorKind::A(j) => format!("intertwining-a{j}"),
        GeneratorKind::B => "intertwining-b".into(),
        GeneratorKind::C => "intertwining-c".into(),
        GeneratorKind::Identity => "intertwining-identity".into(),
    };
    Ok(CheckReport::new(name, residual, tol))
}

fn generator_matrix(rep: &Representation, block: IndexBlock, which: GeneratorKind) -> Result<CMat> {
    let d = block.len();
    match rep {
        Representation::Torus(t) => {
            let (a, b, c) = t.matrices();
            Ok(match which {
                GeneratorKind::A(j) => a
                    .get(j)
                    .cloned()
                    .ok_or_else(|| Error::Input(format!("no generator component {j}")))?,
                GeneratorKind::B => b,
                GeneratorKind::C => c,
                GeneratorKind::Identity => CMat::identity(t.n_dim),
            })
        }
        Representation::Cylinder(r) => {
            let mut g = CMat::zeros(d);
            for (i, n) in (block.n_lo..=block.n_hi).enumerate() {
                match which {
                    GeneratorKind::A(j) => {
                        let col = (n + r.m_trunc) as usize;
                        g[(i, i)] = r.diag_a[j][col];
                    }
                    GeneratorKind::B => {
                        if i + 1 < d {
                            g[(i + 1, i)] = r.fact.mu_at((n + 1) as f64 * r.hbar);
                        }
                    }
                    GeneratorKind::C => {
                        if i > 0 {
                            g[(i - 1, i)] = r.fact.mu_at(n as f64 * r.hbar).conj();
                        }
                    }
                    GeneratorKind::Identity => {
                        g[(i, i)] = Complex64::new(1.0, 0.0);
                    }
                }
            }
            Ok(g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::{mu_sklyanin, mu_su11, su11_version2, FactorizationData};
    use crate::flows::{sklyanin_flow, su11_flow, DeformationFlow};
    use crate::kernels::{kernel_cylinder, kernel_torus, norm_quadrature, GridSpec};
    use crate::representations::{build_cylinder_rep, build_torus_rep};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.next_f64()
        }
    }

    fn sklyanin_setup(n: i64) -> (DeformationFlow, Representation, KernelContext) {
        let phi = 2.0 * PI / n as f64;
        let flow = sklyanin_flow(phi, 1.0, 0.0, 2.0).unwrap();
        let (mu, _, _) = mu_sklyanin(phi, 1.0, 0.0, 2.0).unwrap();
        let fact = Arc::new(
            FactorizationData::with_unit_nu(1.0, 1.0, mu)
                .unwrap()
                .normalize_resonant(n, 0.0)
                .unwrap(),
        );
        let rep = Representation::Torus(build_torus_rep(&flow, fact.clone(), n, 0.0).unwrap());
        let ctx = KernelContext::new(Geometry::Torus { n, m: 1 }, fact, GridSpec::default()).unwrap();
        (flow, rep, ctx)
    }

    fn su11_setup(m_trunc: i64) -> (DeformationFlow, Representation, KernelContext) {
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        let (mu, _) = mu_su11(1.25, 0.0, 1.0).unwrap();
        let fact = Arc::new(FactorizationData::with_unit_nu(1.0, 1.0, mu).unwrap());
        let rep =
            Representation::Cylinder(build_cylinder_rep(&flow, fact.clone(), m_trunc).unwrap());
        let ctx = KernelContext::new(Geometry::Cylinder, fact, GridSpec::default()).unwrap();
        (flow, rep, ctx)
    }

    #[test]
    fn coherent_norm_equals_kernel_cylinder() {
        let (_, rep, ctx) = su11_setup(40);
        let mut rng = Lcg(0xC0FFEE);
        for _ in 0..100 {
            let z = c(rng.in_range(-2.0, 2.0), rng.in_range(0.0, 2.0 * PI));
            let st = coherent_state(&rep, z).unwrap();
            let k = kernel_cylinder(&ctx, z.conj(), z).unwrap();
            assert!(
                (st.norm_sqr() - k.re).abs() < 1e-9 * k.re,
                "z={z}: {} vs {}",
                st.norm_sqr(),
                k.re
            );
        }
    }

    #[test]
    fn coherent_norm_equals_kernel_torus() {
        let (_, rep, ctx) = sklyanin_setup(4);
        let mut rng = Lcg(0xFEED);
        for _ in 0..100 {
            let z = c(rng.in_range(0.0, 4.0), rng.in_range(0.0, 2.0 * PI));
            let st = coherent_state(&rep, z).unwrap();
            let k = kernel_torus(&ctx, z.conj(), z).unwrap();
            assert!(
                (st.norm_sqr() - k.re).abs() < 1e-9 * k.re,
                "z={z}: {} vs {}",
                st.norm_sqr(),
                k.re
            );
        }
    }

    #[test]
    fn coherent_overlap_is_two_point_kernel() {
        let (_, rep, ctx) = su11_setup(40);
        let mut rng = Lcg(0xBEEF);
        for _ in 0..20 {
            let z = c(rng.in_range(-1.5, 1.5), rng.in_range(0.0, 2.0 * PI));
            let w = c(rng.in_range(-1.5, 1.5), rng.in_range(0.0, 2.0 * PI));
            let pz = coherent_state(&rep, z).unwrap();
            let pw = coherent_state(&rep, w).unwrap();
            let overlap = inner(&pw.coefficients, &pz.coefficients);
            let k = kernel_cylinder(&ctx, w.conj(), z).unwrap();
            assert!((overlap - k).norm() < 1e-9 * (1.0 + k.norm()));
        }
        // same statement on the torus
        let (_, rep_t, ctx_t) = sklyanin_setup(5);
        let mut rng = Lcg(0xF00D);
        for _ in 0..20 {
            let z = c(rng.in_range(0.0, 5.0), rng.in_range(0.0, 2.0 * PI));
            let w = c(rng.in_range(0.0, 5.0), rng.in_range(0.0, 2.0 * PI));
            let pz = coherent_state(&rep_t, z).unwrap();
            let pw = coherent_state(&rep_t, w).unwrap();
            let overlap = inner(&pw.coefficients, &pz.coefficients);
            let k = kernel_torus(&ctx_t, w.conj(), z).unwrap();
            assert!((overlap - k).norm() < 1e-9 * (1.0 + k.norm()));
        }
    }

    #[test]
    fn coherent_coefficients_match_explicit_formula() {
        // c_n(z) = conj(ν_!(nħ))⁻¹ exp{-τħn²/2 + n z}, including the phase
        // of the nontrivial Γ-ratio weights
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        let fact = Arc::new(su11_version2(1.25, 0.0, 1.0, 1.0, 40).unwrap());
        let rep = Representation::Cylinder(build_cylinder_rep(&flow, fact.clone(), 12).unwrap());
        let z = c(0.4, 1.9);
        let st = coherent_state(&rep, z).unwrap();
        for n in -10i64..=10 {
            let nf = fact.nu_factorial.value(n).unwrap();
            let expect = 1.0 / nf.conj() * (-(n * n) as f64 / 2.0 + n as f64 * z).exp();
            let got = st.coefficients[(n + 12) as usize];
            assert!(
                (got - expect).norm() < 1e-12 * (1.0 + expect.norm()),
                "n={n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn coherent_state_far_left_kills_raising_ladder() {
        // As Re z → -∞ the Gaussian weights kill every n > 0 component
        // relative to the fiducial slot. (The n < 0 side keeps growing: the
        // coefficient bump drifts down the ladder with Re z, so the full
        // state does not converge to 𝒫⁰ on the two-sided lattice.)
        let (_, rep, _) = su11_setup(20);
        let st = coherent_state(&rep, c(-30.0, 0.7)).unwrap();
        let i0 = rep.zero_index();
        let fiducial = st.coefficients[i0].norm();
        for (i, co) in st.coefficients.iter().enumerate() {
            if i > i0 {
                assert!(co.norm() < 1e-12 * fiducial, "slot {i} too large");
            }
        }
        let peak = (-30.0f64 / 1.0).round() as i64; // n* = Re z / τħ
        let i_peak = (peak + 20).max(0) as usize;
        assert!(st.coefficients[i_peak].norm() > fiducial);
    }

    #[test]
    fn partition_of_unity_torus() {
        for n in [3i64, 4, 8] {
            let (_, rep, ctx) = sklyanin_setup(n);
            let block = IndexBlock {
                n_lo: 0,
                n_hi: n - 1,
            };
            let report = partition_of_unity(&rep, &ctx, block, 1e-6).unwrap();
            assert!(report.pass, "N={n}: deviation {}", report.residual);
            // off-diagonal entries are killed by the v-integral
            let p = integrated_projector(&rep, &ctx, block).unwrap();
            for mi in 0..n as usize {
                for ni in 0..n as usize {
                    if mi != ni {
                        assert!(p[(mi, ni)].norm() < 1e-10, "N={n} ({mi},{ni})");
                    }
                }
            }
            // diagonal entries agree with the quadrature norms of the basis
            for k in 0..n as usize {
                let mut psi = vec![c(0.0, 0.0); n as usize];
                psi[k] = c(1.0, 0.0);
                let nq = norm_quadrature(&ctx, &psi).unwrap();
                assert!((p[(k, k)].re - nq).abs() < 1e-8, "N={n} k={k}");
            }
        }
    }

    #[test]
    fn partition_of_unity_cylinder_block() {
        let (_, rep, ctx) = su11_setup(16);
        let block = IndexBlock { n_lo: -6, n_hi: 6 };
        let report = partition_of_unity(&rep, &ctx, block, 1e-6).unwrap();
        assert!(report.pass, "deviation {}", report.residual);
    }

    #[test]
    fn transform_round_trip_and_linearity() {
        let (_, rep, ctx) = sklyanin_setup(4);
        let block = IndexBlock { n_lo: 0, n_hi: 3 };
        for k in 0..4usize {
            let mut psi = vec![c(0.0, 0.0); 4];
            psi[k] = c(1.0, 0.0);
            let out = coherent_transform(&rep, &ctx, block, &psi).unwrap();
            let dev: f64 = out
                .iter()
                .zip(psi.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-6, "k={k}: {dev}");
        }
        // linearity
        let psi1 = vec![c(1.0, 0.0), c(0.0, 0.5), c(0.0, 0.0), c(-0.3, 0.0)];
        let psi2 = vec![c(0.0, 0.0), c(1.0, -1.0), c(0.2, 0.0), c(0.0, 0.0)];
        let (a, b) = (c(0.7, -0.2), c(-0.1, 1.3));
        let combo: Vec<Complex64> = psi1
            .iter()
            .zip(psi2.iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let t1 = coherent_transform(&rep, &ctx, block, &psi1).unwrap();
        let t2 = coherent_transform(&rep, &ctx, block, &psi2).unwrap();
        let tc = coherent_transform(&rep, &ctx, block, &combo).unwrap();
        for i in 0..4 {
            assert!((tc[i] - (a * t1[i] + b * t2[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_transform_of_fiducial_is_unit_function() {
        // (𝒫_z, 𝒫⁰) = conj(c_0(z)) ≡ 1 on the cylinder
        let (flow, rep, _) = su11_setup(16);
        let (p0, _) = crate::representations::fiducial_state(&rep, &flow).unwrap();
        for &(u, v) in &[(0.0, 0.0), (0.8, 2.0), (-1.4, 5.0)] {
            let st = coherent_state(&rep, c(u, v)).unwrap();
            let val = inner(&st.coefficients, &p0);
            assert!((val - 1.0).norm() < 1e-12, "z=({u},{v}): {val}");
        }
    }

    #[test]
    fn transform_gram_unitarity() {
        let (_, rep, ctx) = sklyanin_setup(5);
        let block = IndexBlock { n_lo: 0, n_hi: 4 };
        let g = transform_gram_residual(&rep, &ctx, block).unwrap();
        assert!(g < 1e-6, "gram deviation {g}");
        let (_, rep_c, ctx_c) = su11_setup(16);
        let block_c = IndexBlock { n_lo: -6, n_hi: 6 };
        let gc = transform_gram_residual(&rep_c, &ctx_c, block_c).unwrap();
        assert!(gc < 1e-5, "cylinder gram deviation {gc}");
    }

    #[test]
    fn intertwining_residuals() {
        let (_, rep, ctx) = sklyanin_setup(4);
        let block = IndexBlock { n_lo: 0, n_hi: 3 };
        for which in [
            GeneratorKind::A(0),
            GeneratorKind::B,
            GeneratorKind::C,
        ] {
            let r = intertwining_check(&rep, &ctx, block, which, 1e-6).unwrap();
            assert!(r.pass, "{}: {}", r.check_name, r.residual);
        }
        let r = intertwining_check(&rep, &ctx, block, GeneratorKind::Identity, 1e-30).unwrap();
        assert_eq!(r.residual, 0.0);
        // windowed cylinder
        let (_, rep_c, ctx_c) = su11_setup(16);
        let block_c = IndexBlock { n_lo: -6, n_hi: 6 };
        for which in [GeneratorKind::A(0), GeneratorKind::B, GeneratorKind::C] {
            let r = intertwining_check(&rep_c, &ctx_c, block_c, which, 1e-5).unwrap();
            assert!(r.pass, "cylinder {}: {}", r.check_name, r.residual);
        }
    }

    #[test]
    fn double_copy_block_structure() {
        // Embed the N = 4 representation in a block-diagonal double copy
        // with the fiducial state in the first block: every coherent state
        // lives in the first block, so the integrated projector annihilates
        // the second copy and the transform lands in the correct block.
        let (_, rep, ctx) = sklyanin_setup(4);
        let block = IndexBlock { n_lo: 0, n_hi: 3 };
        let p = integrated_projector(&rep, &ctx, block).unwrap();
        let d = 4usize;
        let mut big = CMat::zeros(2 * d);
        for i in 0..d {
            for j in 0..d {
                big[(i, j)] = p[(i, j)];
            }
        }
        // transform of a vector supported in copy one stays in copy one and
        // reproduces it; the second copy is annihilated
        let mut psi = vec![c(0.0, 0.0); 2 * d];
        psi[2] = c(1.0, 0.0);
        let out = big.apply(&psi);
        assert!((out[2] - 1.0).norm() < 1e-6);
        for (i, val) in out.iter().enumerate() {
            if i >= d {
                assert_eq!(val.norm(), 0.0);
            }
        }
        let mut psi2 = vec![c(0.0, 0.0); 2 * d];
        psi2[d + 1] = c(1.0, 0.0);
        let out2 = big.apply(&psi2);
        assert!(out2.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coherent_state_v2_weights() {
        // ‖𝒫_z‖² = K_ν(z̄|z) with nontrivial ν (cylinder version II)
        let flow = su11_flow(1.25, 0.0, 1.0).unwrap();
        let fact = Arc::new(su11_version2(1.25, 0.0, 1.0, 1.0, 80).unwrap());
        let rep =
            Representation::Cylinder(build_cylinder_rep(&flow, fact.clone(), 40).unwrap());
        let ctx = KernelContext::new(Geometry::Cylinder, fact, GridSpec::default()).unwrap();
        let mut rng = Lcg(0x511);
        for _ in 0..40 {
            let z = c(rng.in_range(-1.0, 1.0), rng.in_range(0.0, 2.0 * PI));
            let st = coherent_state(&rep, z).unwrap();
            let k = kernel_cylinder(&ctx, z.conj(), z).unwrap();
            assert!(
                (st.norm_sqr() - k.re).abs() < 1e-9 * k.re,
                "z={z}: {} vs {}",
                st.norm_sqr(),
                k.re
            );
        }
    }
}
