//! Assembled example scenarios: the degenerate Sklyanin algebra on its
//! resonant torus and the two su(1,1) cylinder realizations. Each scenario
//! bundles the flow, factorization data, representation, and kernel context,
//! and drives the full verification suite that the command line exposes.

use crate::coherent::{
    coherent_transform, intertwining_check, partition_of_unity, transform_gram_residual,
    GeneratorKind, IndexBlock,
};
use crate::error::{Error, Result};
use crate::factorization::{
    g_defect, mu_sklyanin, mu_su11, nu_factorial_continuous, solve_g_series, su11_version2,
    Asymptotics, FactorizationData, NuFunction, Side,
};
use crate::flows::{
    classify_surface, sklyanin_flow, su11_flow, DeformationFlow, ScanSpec, SurfaceKind,
};
use crate::kernels::{
    kahler_density, kahler_density_deviation, kahler_density_torus, kernel_cylinder, kernel_torus,
    kernel_torus_closed, kernel_torus_difference_system_check, kernel_torus_fourier,
    norm_quadrature, p_function, q_function, quantization_integral, theta_identity_residual,
    x_of_t, Geometry, GridSpec, KernelContext,
};
use crate::report::CheckReport;
use crate::representations::{
    build_cylinder_rep, build_torus_rep, casimir_scalars, fiducial_state, verify_relations,
    verify_sklyanin_original, Representation,
};
use crate::theta::theta_mod_characterization_residual;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleKind {
    Sklyanin,
    Su11V1,
    Su11V2,
}

impl ExampleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sklyanin" => Ok(Self::Sklyanin),
            "su11-v1" => Ok(Self::Su11V1),
            "su11-v2" => Ok(Self::Su11V2),
            other => Err(Error::Input(format!(
                "unknown example '{other}' (expected sklyanin, su11-v1, su11-v2)"
            ))),
        }
    }
}

/// Fully assembled example.
pub struct Scenario {
    pub kind: ExampleKind,
    pub flow: DeformationFlow,
    pub fact: Arc<FactorizationData>,
    pub rep: Representation,
    pub ctx: KernelContext,
    /// Sklyanin angle φ (needed by the original-relation check).
    pub phi: Option<f64>,
    pub params: BTreeMap<String, String>,
}

/// Degenerate Sklyanin algebra. Resonant φ = 2πm/N yields the exact
/// N-dimensional torus representation with the factors normalized through
/// the ζ̃/ξ̃ phase replacement; nonresonant φ falls back to the cylinder
/// covering with truncation M.
#[allow(clippy::too_many_arguments)]
pub fn sklyanin_scenario(
    phi: f64,
    kappa1: f64,
    psi: f64,
    a0: f64,
    alpha: f64,
    tau: f64,
    m_trunc: i64,
    grid: GridSpec,
) -> Result<Scenario> {
    let flow = sklyanin_flow(phi, kappa1, psi, a0)?;
    let class = classify_surface(&flow, ScanSpec::default())?;
    if class.kind != SurfaceKind::Torus {
        return Err(Error::UnsupportedSurface(
            "sklyanin flow did not classify as a torus".into(),
        ));
    }
    let mut params = BTreeMap::new();
    params.insert("phi".into(), format!("{phi:.16e}"));
    params.insert("kappa1".into(), format!("{kappa1:.16e}"));
    params.insert("psi".into(), format!("{psi:.16e}"));
    params.insert("a0".into(), format!("{a0:.16e}"));
    params.insert("alpha".into(), format!("{alpha:.16e}"));
    params.insert("tau".into(), format!("{tau:.16e}"));
    match class.resonance {
        Some((n, m)) => {
            let fact = Arc::new(sklyanin_normalized_factorization(
                phi, kappa1, psi, a0, tau, n, alpha,
            )?);
            fact.validate(|t| flow.profile(t), &grid_ts(n as f64 * fact.hbar))?;
            let rep = Representation::Torus(build_torus_rep(&flow, fact.clone(), n, alpha)?);
            let ctx = KernelContext::new(Geometry::Torus { n, m }, fact.clone(), grid)?;
            params.insert("N".into(), n.to_string());
            params.insert("m".into(), m.to_string());
            Ok(Scenario {
                kind: ExampleKind::Sklyanin,
                flow,
                fact,
                rep,
                ctx,
                phi: Some(phi),
                params,
            })
        }
        None => {
            // infinite winding of the torus: cylinder representation
            let (mu, _, _) = mu_sklyanin(phi, kappa1, psi, a0)?;
            let fact = Arc::new(FactorizationData::with_unit_nu(1.0, tau, mu)?);
            let rep = Representation::Cylinder(build_cylinder_rep(&flow, fact.clone(), m_trunc)?);
            let ctx = KernelContext::new(Geometry::Cylinder, fact.clone(), grid)?;
            params.insert("M".into(), m_trunc.to_string());
            Ok(Scenario {
                kind: ExampleKind::Sklyanin,
                flow,
                fact,
                rep,
                ctx,
                phi: Some(phi),
                params,
            })
        }
    }
}

/// The printed Sklyanin normalization: replace (ζ, ξ) by
/// ζ̃ = ζ e^{i(α-δ)/N}, ξ̃ = ξ e^{i(δ-α)/N} with δ = Σ arg μ(nħ); this
/// rotates μ by the constant phase e^{i(α-δ)/N} and makes
/// Σ arg 𝓑(nħ) ≡ α (mod 2π) with 𝓑 = μ̃.
pub fn sklyanin_normalized_factorization(
    phi: f64,
    kappa1: f64,
    psi: f64,
    a0: f64,
    tau: f64,
    n: i64,
    alpha: f64,
) -> Result<FactorizationData> {
    let (mu, zeta, xi) = mu_sklyanin(phi, kappa1, psi, a0)?;
    let mut delta = 0.0;
    for k in 1..=n {
        delta += mu(Complex64::new(k as f64, 0.0)).arg();
    }
    let rot = Complex64::from_polar(1.0, (alpha - delta) / n as f64);
    let zeta_t = zeta * rot;
    let xi_t = xi * rot.conj();
    let a = Complex64::from_polar(kappa1.sqrt(), psi / 2.0);
    let za = zeta_t * a;
    let xa_bar = (xi_t * a).conj();
    let mu_t: crate::theta::CFn = Arc::new(move |t: Complex64| {
        let i = Complex64::new(0.0, 1.0);
        za * (i * phi * t).exp() - xa_bar * (-i * phi * t).exp()
    });
    let mut fact = FactorizationData::with_unit_nu(1.0, tau, mu_t)?;
    fact.alpha = Some(alpha);
    fact.resonant_n = Some(n);
    Ok(fact)
}

/// su(1,1) on the hyperboloid cylinder, version I (ν = 1) or version II
/// (Γ-ratio weights).
pub fn su11_scenario(
    version2: bool,
    a0: f64,
    a: f64,
    hbar: f64,
    tau: f64,
    m_trunc: i64,
    grid: GridSpec,
) -> Result<Scenario> {
    let flow = su11_flow(a0, a, hbar)?;
    let fact = if version2 {
        Arc::new(su11_version2(a0, a, hbar, tau, 2 * m_trunc + 16)?)
    } else {
        let (mu, _) = mu_su11(a0, a, hbar)?;
        Arc::new(FactorizationData::with_unit_nu(hbar, tau, mu)?)
    };
    fact.validate(|t| flow.profile(t), &grid_ts(8.0 * hbar))?;
    let rep = Representation::Cylinder(build_cylinder_rep(&flow, fact.clone(), m_trunc)?);
    let ctx = KernelContext::new(Geometry::Cylinder, fact.clone(), grid)?;
    let mut params = BTreeMap::new();
    params.insert("a0".into(), format!("{a0:.16e}"));
    params.insert("a".into(), format!("{a:.16e}"));
    params.insert("hbar".into(), format!("{hbar:.16e}"));
    params.insert("tau".into(), format!("{tau:.16e}"));
    params.insert("M".into(), m_trunc.to_string());
    Ok(Scenario {
        kind: if version2 {
            ExampleKind::Su11V2
        } else {
            ExampleKind::Su11V1
        },
        flow,
        fact,
        rep,
        ctx,
        phi: None,
        params,
    })
}

fn grid_ts(span: f64) -> Vec<f64> {
    (0..=40).map(|i| -span + 2.0 * span * i as f64 / 40.0).collect()
}

fn lcg_pairs(n: usize) -> Vec<(f64, f64)> {
    let mut state = 0x5eedu64;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
    };
    (0..n).map(|_| (next(), next())).collect()
}

/// Tolerance overrides keyed by check name.
pub type Tolerances = BTreeMap<String, f64>;

fn tol_for(tols: &Tolerances, name: &str, default: f64) -> f64 {
    *tols.get(name).unwrap_or(&default)
}

/// Run the whole verification suite of a scenario; one report per check.
pub fn run_verification(sc: &Scenario, tols: &Tolerances) -> Result<Vec<CheckReport>> {
    let mut out: Vec<CheckReport> = Vec::new();
    let annotate = |mut r: CheckReport, sc: &Scenario| -> CheckReport {
        for (k, v) in &sc.params {
            r = r.with_param(k.clone(), v.clone());
        }
        r
    };

    // theta-engine identity, independent of the example
    let mut jac = 0.0f64;
    for ia in 0..25 {
        let alpha = 2.0 * PI * ia as f64 / 25.0;
        for ie in 0..10 {
            let eps = 0.05 + (5.0 - 0.05) * ie as f64 / 9.0;
            let lhs = crate::theta::theta(
                crate::theta::ThetaArgs::real(alpha, eps)?
                    .with_regime(crate::theta::Regime::ForceDirect),
            )?;
            let dual = crate::theta::theta(crate::theta::ThetaArgs::new(
                Complex64::new(0.0, PI * alpha / eps),
                PI * PI / eps,
            )?)?;
            let rhs = (PI / eps).sqrt() * (-alpha * alpha / (4.0 * eps)).exp() * dual;
            jac = jac.max((lhs - rhs).norm());
        }
    }
    out.push(CheckReport::new(
        "jacobi-duality",
        jac,
        tol_for(tols, "jacobi-duality", 1e-10),
    ));

    // flow-level identities
    let pairs = lcg_pairs(100);
    out.push(CheckReport::new(
        "flow-group-law",
        sc.flow.group_law_residual(&pairs),
        tol_for(tols, "flow-group-law", 1e-12),
    ));
    let ts: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
    out.push(CheckReport::new(
        "casimir-constancy",
        sc.flow.casimir_residual(&ts),
        tol_for(tols, "casimir-constancy", 1e-12),
    ));

    // factorization residuals on a grid
    let span = match sc.ctx.geometry {
        Geometry::Torus { n, .. } => n as f64 * sc.fact.hbar,
        Geometry::Cylinder => 8.0 * sc.fact.hbar,
    };
    let mut fact_res = 0.0f64;
    for &t in &grid_ts(span) {
        let f = sc.flow.profile(t);
        let m = sc.fact.mu_at(t);
        fact_res = fact_res.max((m.norm_sqr() - f).abs() / (1.0 + f.abs()));
        let bc = (sc.fact.factor_b)(Complex64::new(t, 0.0)) * (sc.fact.factor_c)(Complex64::new(t, 0.0));
        fact_res = fact_res.max((bc - f).norm() / (1.0 + f.abs()));
    }
    out.push(CheckReport::new(
        "factorization-residual",
        fact_res,
        tol_for(tols, "factorization-residual", 1e-12),
    ));

    // representation relations
    let rel_tol = match sc.rep {
        Representation::Torus(_) => tol_for(tols, "relations", 1e-11),
        Representation::Cylinder(_) => tol_for(tols, "relations", 1e-12),
    };
    out.extend(verify_relations(&sc.rep, &sc.flow, rel_tol));

    // casimir scalars
    let mut worst_casimir = 0.0f64;
    for (_, _, dev) in casimir_scalars(&sc.rep, &sc.flow) {
        worst_casimir = worst_casimir.max(dev);
    }
    out.push(CheckReport::new(
        "casimir-scalars",
        worst_casimir,
        tol_for(tols, "casimir-scalars", 1e-11),
    ));

    let (_, fid_res) = fiducial_state(&sc.rep, &sc.flow)?;
    out.push(CheckReport::new(
        "fiducial-state",
        fid_res,
        tol_for(tols, "fiducial-state", 1e-10),
    ));

    match (&sc.rep, &sc.ctx.geometry) {
        (Representation::Torus(t), Geometry::Torus { n, .. }) => {
            let n_dim = *n;
            // original Sklyanin quadratic relations
            if let Some(phi) = sc.phi {
                out.extend(verify_sklyanin_original(
                    &sc.rep,
                    phi,
                    tol_for(tols, "sklyanin-original", 1e-11),
                )?);
            }
            // B^N scalar (3.18)
            let mut f_fact = 1.0;
            for k in 1..=n_dim {
                f_fact *= sc.flow.profile(k as f64 * sc.fact.hbar);
            }
            let expect = Complex64::from_polar(f_fact.sqrt(), t.alpha);
            let dev = t
                .mat_b
                .pow(n_dim as u32)
                .sub(&crate::cmatrix::CMat::identity(t.n_dim).scale(expect))
                .max_abs();
            out.push(CheckReport::new(
                "b-power-scalar",
                dev,
                tol_for(tols, "b-power-scalar", 1e-10),
            ));
            // kernel paths
            let mut two_path = 0.0f64;
            let mut closed = 0.0f64;
            for iu in 0..8 {
                for iv in 0..8 {
                    let z = Complex64::new(
                        n_dim as f64 * sc.ctx.eps() * iu as f64 / 8.0,
                        2.0 * PI * iv as f64 / 8.0,
                    );
                    let k1 = kernel_torus(&sc.ctx, z.conj(), z)?;
                    let k2 = kernel_torus_fourier(&sc.ctx, z.conj(), z)?;
                    two_path = two_path.max((k1 - k2).norm() / (1.0 + k1.norm()));
                    let k3 = kernel_torus_closed(&sc.ctx, z.conj(), z)?;
                    closed = closed.max((k1 - k3).norm() / (1.0 + k1.norm()));
                }
            }
            out.push(CheckReport::new(
                "kernel-two-paths",
                two_path,
                tol_for(tols, "kernel-two-paths", 1e-10),
            ));
            out.push(CheckReport::new(
                "kernel-closed-form",
                closed,
                tol_for(tols, "kernel-closed-form", 1e-10),
            ));
            out.extend(kernel_torus_difference_system_check(&sc.ctx)?);
            // quantization integral
            let q = quantization_integral(&sc.ctx)?;
            out.push(
                CheckReport::new(
                    "quantization-integral",
                    (q - n_dim as f64).abs(),
                    tol_for(tols, "quantization-integral", 1e-6),
                )
                .with_param("value", CheckReport::fmt_num(q)),
            );
            // integral norms of the basis
            let mut worst = 0.0f64;
            for k in 0..t.n_dim {
                let mut psi = vec![Complex64::new(0.0, 0.0); t.n_dim];
                psi[k] = Complex64::new(1.0, 0.0);
                worst = worst.max((norm_quadrature(&sc.ctx, &psi)? - 1.0).abs());
            }
            out.push(CheckReport::new(
                "norm-quadrature-basis",
                worst,
                tol_for(tols, "norm-quadrature-basis", 1e-8),
            ));
            // coherent layer
            let block = IndexBlock {
                n_lo: 0,
                n_hi: n_dim - 1,
            };
            out.push(partition_of_unity(
                &sc.rep,
                &sc.ctx,
                block,
                tol_for(tols, "partition-of-unity", 1e-6),
            )?);
            let mut roundtrip = 0.0f64;
            for k in 0..t.n_dim {
                let mut psi = vec![Complex64::new(0.0, 0.0); t.n_dim];
                psi[k] = Complex64::new(1.0, 0.0);
                let out_vec = coherent_transform(&sc.rep, &sc.ctx, block, &psi)?;
                for (i, v) in out_vec.iter().enumerate() {
                    roundtrip = roundtrip.max((v - psi[i]).norm());
                }
            }
            out.push(CheckReport::new(
                "transform-roundtrip",
                roundtrip,
                tol_for(tols, "transform-roundtrip", 1e-6),
            ));
            out.push(CheckReport::new(
                "transform-gram",
                transform_gram_residual(&sc.rep, &sc.ctx, block)?,
                tol_for(tols, "transform-gram", 1e-6),
            ));
            for which in [GeneratorKind::A(0), GeneratorKind::B, GeneratorKind::C] {
                out.push(intertwining_check(
                    &sc.rep,
                    &sc.ctx,
                    block,
                    which,
                    tol_for(tols, "intertwining", 1e-6),
                )?);
            }
        }
        (Representation::Cylinder(r), Geometry::Cylinder) => {
            // Sklyanin original relations also hold on the nonresonant
            // cylinder covering, on interior indices
            if let Some(phi) = sc.phi {
                out.extend(verify_sklyanin_original(
                    &sc.rep,
                    phi,
                    tol_for(tols, "sklyanin-original", 1e-11),
                )?);
            }
            // kernel against the basis sum
            let mut basis_sum = 0.0f64;
            for &u in &[0.0, 0.6, -1.2] {
                let z = Complex64::new(u, 0.7);
                let k = kernel_cylinder(&sc.ctx, z.conj(), z)?;
                let lim = (r.m_trunc - 2).min(40);
                let basis =
                    crate::kernels::cylinder_basis(&sc.ctx, -lim, lim, z.conj())?;
                let direct: f64 = basis.iter().map(|b| b.norm_sqr()).sum();
                basis_sum = basis_sum.max((k.re - direct).abs() / (1.0 + direct));
            }
            out.push(CheckReport::new(
                "kernel-basis-sum",
                basis_sum,
                tol_for(tols, "kernel-basis-sum", 1e-10),
            ));
            // Gaussian-prefactor / dual-theta identity for the diagonal
            let mut q_res = 0.0f64;
            for &x in &[0.0, 0.9, 2.3, -3.1] {
                q_res = q_res.max(theta_identity_residual(&sc.ctx, x)?);
            }
            out.push(CheckReport::new(
                "q-dual-theta",
                q_res,
                tol_for(tols, "q-dual-theta", 1e-10),
            ));
            if sc.ctx.weights.is_unit() {
                // classical decomposition of the Kähler density
                let mut dec = 0.0f64;
                for &t in &[0.0, 0.4, -1.1] {
                    let d = kahler_density(&sc.ctx, t)?;
                    let dev = kahler_density_deviation(&sc.ctx, t)?;
                    dec = dec.max((d - 1.0 - dev).abs());
                }
                out.push(CheckReport::new(
                    "kahler-decomposition",
                    dec,
                    tol_for(tols, "kahler-decomposition", 1e-9),
                ));
                // exponential classical limit: the log of the maximal
                // deviation from the classical density falls off linearly in
                // 1/ħ with slope -π²/τ
                let tau = sc.ctx.tau;
                let mut pts = Vec::new();
                for &hbar in &[0.5, 0.25, 0.125] {
                    let mu = sc.fact.mu.clone();
                    let fact_h = FactorizationData::with_unit_nu(hbar, tau, mu)?;
                    let ctx_h = KernelContext::new(
                        Geometry::Cylinder,
                        Arc::new(fact_h),
                        sc.ctx.grid,
                    )?;
                    let mut dev = 0.0f64;
                    for i in 0..=100 {
                        let t = 2.0 * hbar * tau * i as f64 / 100.0;
                        dev = dev.max(kahler_density_deviation(&ctx_h, t)?.abs());
                    }
                    pts.push((1.0 / hbar, dev.ln()));
                }
                let n = pts.len() as f64;
                let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
                let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
                let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                    / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
                let target = -PI * PI / tau;
                out.push(CheckReport::new(
                    "kahler-classical-slope",
                    (slope - target).abs() / target.abs(),
                    tol_for(tols, "kahler-classical-slope", 0.10),
                ));
            } else {
                // theta_mod characterization and g-equation defect
                out.push(CheckReport::new(
                    "theta-mod-characterization",
                    theta_mod_characterization_residual(
                        &sc.fact.nu_factorial,
                        sc.ctx.eps(),
                        r.m_trunc.min(24),
                    )?,
                    tol_for(tols, "theta-mod-characterization", 1e-12),
                ));
                if let (Some(g), Some(_)) = (&sc.fact.g, &sc.fact.nu_logderiv) {
                    let mut defect = 0.0f64;
                    for &t in &[-3.0, -0.5, 0.0, 1.5, 4.0] {
                        defect = defect.max(g_defect(&sc.fact.nu, g, sc.fact.hbar, t)?);
                    }
                    out.push(CheckReport::new(
                        "g-equation-defect",
                        defect,
                        tol_for(tols, "g-equation-defect", 1e-9),
                    ));
                    // series solution against the attached closed form
                    let nu_fn = NuFunction {
                        eval: sc.fact.nu.clone(),
                        logderiv: sc.fact.nu_logderiv.clone().unwrap(),
                    };
                    let g_series = solve_g_series(
                        &nu_fn,
                        Asymptotics {
                            b: -1.0,
                            p: 0.0,
                            l: 0.0,
                            side: Side::PlusInfinity,
                        },
                        sc.fact.hbar,
                    );
                    let mut gd = 0.0f64;
                    for &t in &[-2.0, 0.0, 1.0, 3.0] {
                        let z = Complex64::new(t, 0.0);
                        gd = gd.max((g_series(z) - g(z)).norm());
                    }
                    out.push(CheckReport::new(
                        "g-series-vs-closed-form",
                        gd,
                        tol_for(tols, "g-series-vs-closed-form", 1e-8),
                    ));
                    // lattice vs continuous factorial
                    let mut cross = 0.0f64;
                    for n in -6i64..=6 {
                        let lattice = sc.fact.nu_factorial.value(n).unwrap();
                        let cont =
                            nu_factorial_continuous(g, sc.fact.hbar, Complex64::new(n as f64 * sc.fact.hbar, 0.0))?;
                        cross = cross.max((cont - lattice).norm() / (1.0 + lattice.norm()));
                    }
                    out.push(CheckReport::new(
                        "nu-factorial-cross-check",
                        cross,
                        tol_for(tols, "nu-factorial-cross-check", 1e-9),
                    ));
                }
            }
            // integral norms over a verified index range
            let n_verify = r.m_trunc.min(if sc.ctx.weights.is_unit() { 16 } else { 8 });
            let norm_tol = if sc.ctx.weights.is_unit() { 1e-8 } else { 1e-6 };
            let mut worst = 0.0f64;
            for n in -n_verify..=n_verify {
                let mut psi = vec![Complex64::new(0.0, 0.0); r.dim()];
                psi[(n + r.m_trunc) as usize] = Complex64::new(1.0, 0.0);
                worst = worst.max((norm_quadrature(&sc.ctx, &psi)? - 1.0).abs());
            }
            out.push(CheckReport::new(
                "norm-quadrature-basis",
                worst,
                tol_for(tols, "norm-quadrature-basis", norm_tol),
            ));
            // coherent layer on a windowed block
            let block = IndexBlock {
                n_lo: -(r.m_trunc.min(6)),
                n_hi: r.m_trunc.min(6),
            };
            out.push(partition_of_unity(
                &sc.rep,
                &sc.ctx,
                block,
                tol_for(tols, "partition-of-unity", 1e-6),
            )?);
            out.push(CheckReport::new(
                "transform-gram",
                transform_gram_residual(&sc.rep, &sc.ctx, block)?,
                tol_for(tols, "transform-gram", 1e-5),
            ));
            for which in [GeneratorKind::A(0), GeneratorKind::B, GeneratorKind::C] {
                out.push(intertwining_check(
                    &sc.rep,
                    &sc.ctx,
                    block,
                    which,
                    tol_for(tols, "intertwining", 1e-5),
                )?);
            }
        }
        _ => return Err(Error::Input("scenario geometry mismatch".into())),
    }
    Ok(out.into_iter().map(|r| annotate(r, sc)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridQuantity {
    Kernel,
    Kahler,
    Measure,
}

impl GridQuantity {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Self::Kernel),
            "kahler" => Ok(Self::Kahler),
            "measure" => Ok(Self::Measure),
            other => Err(Error::Input(format!(
                "unknown grid quantity '{other}' (expected kernel, kahler, measure)"
            ))),
        }
    }
}

/// Emit the requested quantity over the fundamental-domain grid as CSV with
/// a fixed header and 17-significant-digit numbers.
pub fn emit_grid_csv(sc: &Scenario, what: GridQuantity) -> Result<String> {
    let ctx = &sc.ctx;
    let (u_lo, u_hi) = match ctx.geometry {
        Geometry::Torus { n, .. } => (0.0, n as f64 * ctx.eps()),
        Geometry::Cylinder => (ctx.grid.u_min, ctx.grid.u_max),
    };
    let header = match what {
        GridQuantity::Kernel => "t,s,u,v,re_k,im_k",
        GridQuantity::Kahler => "t,s,u,v,kahler_density",
        GridQuantity::Measure => "t,s,u,v,measure_density",
    };
    let mut outp = String::from(header);
    outp.push('\n');
    let f = CheckReport::fmt_num;
    for iu in 0..ctx.grid.n_u {
        let u = u_lo + (u_hi - u_lo) * iu as f64 / ctx.grid.n_u as f64;
        let t = t_of_u(ctx, u);
        for iv in 0..ctx.grid.n_v {
            let v = 2.0 * PI * iv as f64 / ctx.grid.n_v as f64;
            let s = (-v).rem_euclid(2.0 * PI);
            let z = Complex64::new(u, v);
            match what {
                GridQuantity::Kernel => {
                    let k = match ctx.geometry {
                        Geometry::Cylinder => kernel_cylinder(ctx, z.conj(), z)?,
                        Geometry::Torus { .. } => kernel_torus(ctx, z.conj(), z)?,
                    };
                    outp.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        f(t),
                        f(s),
                        f(u),
                        f(v),
                        f(k.re),
                        f(k.im)
                    ));
                }
                GridQuantity::Kahler => {
                    let d = match ctx.geometry {
                        Geometry::Cylinder => kahler_density(ctx, t)?,
                        Geometry::Torus { .. } => kahler_density_torus(ctx, t, s)?,
                    };
                    outp.push_str(&format!("{},{},{},{},{}\n", f(t), f(s), f(u), f(v), f(d)));
                }
                GridQuantity::Measure => {
                    let x = 2.0 * u;
                    let d = match ctx.geometry {
                        Geometry::Cylinder => {
                            q_function(ctx, x)? * p_function(ctx, x)? / ctx.tau
                        }
                        Geometry::Torus { .. } => {
                            let k = kernel_torus(ctx, z.conj(), z)?;
                            let q = (ctx.eps() / PI).sqrt()
                                * (-x * x / (4.0 * ctx.eps())).exp()
                                * k.re;
                            q * p_function(ctx, x)? / ctx.tau
                        }
                    };
                    outp.push_str(&format!("{},{},{},{},{}\n", f(t), f(s), f(u), f(v), f(d)));
                }
            }
        }
    }
    Ok(outp)
}

/// Invert x(t) = 2(τt + Re g(t)) at x = 2u (Newton; identical to u/τ when
/// ν = 1).
pub fn t_of_u(ctx: &KernelContext, u: f64) -> f64 {
    if ctx.weights.is_unit() {
        return u / ctx.tau;
    }
    let mut t = u / ctx.tau;
    for _ in 0..40 {
        let x = x_of_t(ctx, t);
        let step = ctx.fact.hbar / 100.0;
        let slope = (x_of_t(ctx, t + step) - x_of_t(ctx, t - step)) / (2.0 * step);
        let delta = (x - 2.0 * u) / slope;
        t -= delta;
        if delta.abs() < 1e-13 * (1.0 + t.abs()) {
            break;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sklyanin_scenario_resonant() {
        let sc = sklyanin_scenario(PI / 2.0, 1.0, 0.0, 2.0, 0.0, 1.0, 32, GridSpec::default())
            .unwrap();
        assert!(matches!(sc.rep, Representation::Torus(_)));
        assert_eq!(sc.params.get("N").unwrap(), "4");
        // ζ̃/ξ̃ normalization agrees with the generic constant-rescale path
        let (mu0, _, _) = mu_sklyanin(PI / 2.0, 1.0, 0.0, 2.0).unwrap();
        let generic = FactorizationData::with_unit_nu(1.0, 1.0, mu0)
            .unwrap()
            .normalize_resonant(4, 0.0)
            .unwrap();
        for i in 0..=12 {
            let t = 0.33 * i as f64;
            let d = (sc.fact.mu_at(t) - generic.mu_at(t)).norm();
            assert!(d < 1e-12, "t={t}: {d}");
        }
    }

    #[test]
    fn sklyanin_scenario_nonresonant_is_cylinder() {
        // φ/2π irrational: golden-angle-like choice
        let phi = 2.0 * PI / (1.0 + 5.0f64.sqrt());
        let sc = sklyanin_scenario(phi, 1.0, 0.0, 2.0, 0.0, 1.0, 16, GridSpec::default()).unwrap();
        assert!(matches!(sc.rep, Representation::Cylinder(_)));
    }

    #[test]
    fn su11_scenarios_build() {
        let sc1 = su11_scenario(false, 1.25, 0.0, 1.0, 1.0, 24, GridSpec::default()).unwrap();
        assert!(sc1.ctx.weights.is_unit());
        let sc2 = su11_scenario(true, 1.25, 0.0, 1.0, 1.0, 24, GridSpec::default()).unwrap();
        assert!(!sc2.ctx.weights.is_unit());
    }

    #[test]
    fn grid_csv_shape_and_determinism() {
        let sc = su11_scenario(false, 1.25, 0.0, 1.0, 1.0, 16, GridSpec {
            u_min: -2.0,
            u_max: 2.0,
            n_u: 64,
            n_v: 64,
            orientation_sign: 1,
        })
        .unwrap();
        let a = emit_grid_csv(&sc, GridQuantity::Kahler).unwrap();
        let b = emit_grid_csv(&sc, GridQuantity::Kahler).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), "t,s,u,v,kahler_density");
        assert_eq!(a.lines().count(), 1 + 64 * 64);
        // density near 1 for ν = 1
        let first_val: f64 = a
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next_back()
            .unwrap()
            .parse()
            .unwrap();
        assert!((first_val - 1.0).abs() < 0.1);
    }
}
