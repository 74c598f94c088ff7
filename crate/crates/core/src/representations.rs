//! Irreducible representations of the commutation relations as
//! diagonal-plus-weighted-shift operators.
//!
//! In the orthonormal basis e⁽ⁿ⁾ the generators act by
//!
//! ```text
//! Â_j e⁽ⁿ⁾ = φ_{nħ}(a₀,a)_j e⁽ⁿ⁾
//! B̂  e⁽ⁿ⁾ = μ((n+1)ħ)  e⁽ⁿ⁺¹⁾
//! Ĉ  e⁽ⁿ⁾ = conj(μ(nħ)) e⁽ⁿ⁻¹⁾
//! ```
//!
//! independently of the factor choice (𝓑,𝓒); the derivation from the
//! exponential-operator form via the scalar-commutator composition law is
//! pinned by the `monomial_construction_matches_shift_weights` test. On the
//! resonant torus the shift wraps cyclically and B^N is the scalar
//! ℱ_!(Nħ)^{1/2} e^{iα}.

use crate::cmatrix::CMat;
use crate::error::{Error, Result};
use crate::factorization::FactorizationData;
use crate::flows::DeformationFlow;
use crate::report::CheckReport;
use num_complex::Complex64;
use std::sync::Arc;

/// Truncated shift-operator data on the cylinder, basis indices n ∈ [-M, M].
#[derive(Clone)]
pub struct CylinderRep {
    pub m_trunc: i64,
    pub hbar: f64,
    pub tau: f64,
    /// diag_a\[j\]\[i\] = φ_{nħ}(a₀,a)_j at i = n + M.
    pub diag_a: Vec<Vec<Complex64>>,
    /// shift_up\[i\] = μ((n+1)ħ) for n = -M..M-1 (weight e⁽ⁿ⁾ → e⁽ⁿ⁺¹⁾).
    pub shift_up: Vec<Complex64>,
    pub hermitian: Vec<bool>,
    pub fact: Arc<FactorizationData>,
}

/// Exact N×N matrices on the resonant torus.
#[derive(Clone)]
pub struct TorusRep {
    pub n_dim: usize,
    pub alpha: f64,
    pub hbar: f64,
    pub tau: f64,
    pub mat_a: Vec<CMat>,
    pub mat_b: CMat,
    pub mat_c: CMat,
    pub hermitian: Vec<bool>,
    pub fact: Arc<FactorizationData>,
}

#[derive(Clone)]
pub enum Representation {
    Cylinder(CylinderRep),
    Torus(TorusRep),
}

impl CylinderRep {
    pub fn dim(&self) -> usize {
        (2 * self.m_trunc + 1) as usize
    }

    /// Dense matrices (Â_j, B̂, Ĉ) of the truncated representation.
    pub fn matrices(&self) -> (Vec<CMat>, CMat, CMat) {
        let d = self.dim();
        let a: Vec<CMat> = self.diag_a.iter().map(|dj| CMat::diagonal(dj)).collect();
        let mut b = CMat::zeros(d);
        for (i, &w) in self.shift_up.iter().enumerate() {
            b[(i + 1, i)] = w;
        }
        let c = b.adjoint();
        (a, b, c)
    }

    /// Interior index block [lo, hi] (matrix indices) excluding the
    /// truncation band |n| > M - 2.
    pub fn interior_block(&self) -> (usize, usize) {
        (2, self.dim() - 3)
    }
}

impl TorusRep {
    pub fn matrices(&self) -> (Vec<CMat>, CMat, CMat) {
        (self.mat_a.clone(), self.mat_b.clone(), self.mat_c.clone())
    }
}

impl Representation {
    pub fn dim(&self) -> usize {
        match self {
            Representation::Cylinder(r) => r.dim(),
            Representation::Torus(r) => r.n_dim,
        }
    }

    pub fn hbar(&self) -> f64 {
        match self {
            Representation::Cylinder(r) => r.hbar,
            Representation::Torus(r) => r.hbar,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Representation::Cylinder(r) => r.tau,
            Representation::Torus(r) => r.tau,
        }
    }

    pub fn fact(&self) -> &Arc<FactorizationData> {
        match self {
            Representation::Cylinder(r) => &r.fact,
            Representation::Torus(r) => &r.fact,
        }
    }

    pub fn matrices(&self) -> (Vec<CMat>, CMat, CMat) {
        match self {
            Representation::Cylinder(r) => r.matrices(),
            Representation::Torus(r) => r.matrices(),
        }
    }

    /// Basis-index of the fiducial slot n = 0.
    pub fn zero_index(&self) -> usize {
        match self {
            Representation::Cylinder(r) => r.m_trunc as usize,
            Representation::Torus(_) => 0,
        }
    }

    /// Lattice label n of matrix index i.
    pub fn lattice_n(&self, i: usize) -> i64 {
        match self {
            Representation::Cylinder(r) => i as i64 - r.m_trunc,
            Representation::Torus(_) => i as i64,
        }
    }

    fn mask(&self) -> Option<(usize, usize)> {
        match self {
            Representation::Cylinder(r) => Some(r.interior_block()),
            Representation::Torus(_) => None,
        }
    }

    fn masked_max(&self, m: &CMat) -> f64 {
        match self.mask() {
            Some((lo, hi)) => m.max_abs_block(lo, hi),
            None => m.max_abs(),
        }
    }
}

/// Truncated cylinder representation from the flow and factorization data.
pub fn build_cylinder_rep(
    flow: &DeformationFlow,
    fact: Arc<FactorizationData>,
    m_trunc: i64,
) -> Result<CylinderRep> {
    if m_trunc < 8 {
        return Err(Error::Parameter(format!(
            "cylinder truncation must satisfy M >= 8, got {m_trunc}"
        )));
    }
    if let Some(tau0) = fact.tau0 {
        if fact.tau <= tau0 {
            return Err(Error::Parameter(format!(
                "tau = {} must exceed tau0 = {tau0}",
                fact.tau
            )));
        }
    }
    let hbar = fact.hbar;
    let dim = (2 * m_trunc + 1) as usize;
    let mut diag_a = vec![Vec::with_capacity(dim); flow.k];
    for n in -m_trunc..=m_trunc {
        let (_, v) = flow.at(n as f64 * hbar);
        for (j, val) in v.into_iter().enumerate() {
            diag_a[j].push(val);
        }
    }
    let shift_up: Vec<Complex64> = (-m_trunc..m_trunc)
        .map(|n| fact.mu_at((n + 1) as f64 * hbar))
        .collect();
    Ok(CylinderRep {
        m_trunc,
        hbar,
        tau: fact.tau,
        diag_a,
        shift_up,
        hermitian: flow.hermitian.clone(),
        fact,
    })
}

/// Exact N-dimensional representation on the resonant torus. Requires a
/// factorization already normalized by `normalize_resonant` and a flow whose
/// trajectory has minimal return time exactly Nħ (no proper divisor works).
pub fn build_torus_rep(
    flow: &DeformationFlow,
    fact: Arc<FactorizationData>,
    n_dim: i64,
    alpha: f64,
) -> Result<TorusRep> {
    if n_dim < 2 {
        return Err(Error::Parameter(format!("torus dimension must be >= 2, got {n_dim}")));
    }
    match (fact.resonant_n, fact.alpha) {
        (Some(n), Some(a)) if n == n_dim && (a - alpha).abs() < 1e-12 => {}
        _ => {
            return Err(Error::Parameter(
                "factorization is not normalized for this (N, alpha)".into(),
            ))
        }
    }
    let hbar = fact.hbar;
    let scale = 1.0 + flow.base_a0.abs() + flow.base_a.iter().map(|a| a.norm()).sum::<f64>();
    let return_dist = |t: f64| -> f64 {
        let (f, v) = flow.at(t);
        let mut d = (f - flow.base_a0).abs();
        for (x, a) in v.iter().zip(flow.base_a.iter()) {
            d += (x - a).norm();
        }
        d
    };
    if return_dist(n_dim as f64 * hbar) > 1e-9 * scale {
        return Err(Error::Parameter(format!(
            "flow does not return to the base point at T = N hbar = {}",
            n_dim as f64 * hbar
        )));
    }
    for d in 1..n_dim {
        if n_dim % d == 0 && return_dist(d as f64 * hbar) < 1e-9 * scale {
            return Err(Error::Parameter(format!(
                "period is not minimal: the flow already returns at N' = {d}"
            )));
        }
    }
    let n = n_dim as usize;
    let mut mat_b = CMat::zeros(n);
    for k in 0..n {
        let w = fact.mu_at((k + 1) as f64 * hbar);
        let w = if k + 1 == n {
            // wrap weight μ̃(Nħ)/ν_!(Nħ); the normalization makes ν_!(Nħ) a
            // pure phase (identically 1 for ν = 1)
            let nf = fact
                .nu_factorial
                .log_value(n_dim)
                .ok_or_else(|| Error::Input("nu_factorial lacks the resonant index".into()))?;
            w * nf.inv_value()
        } else {
            w
        };
        mat_b[((k + 1) % n, k)] = w;
    }
    let mat_c = mat_b.adjoint();
    let mut mat_a = Vec::with_capacity(flow.k);
    for j in 0..flow.k {
        let diag: Vec<Complex64> = (0..n)
            .map(|k| {
                let (_, v) = flow.at(k as f64 * hbar);
                v[j]
            })
            .collect();
        mat_a.push(CMat::diagonal(&diag));
    }
    Ok(TorusRep {
        n_dim: n,
        alpha,
        hbar,
        tau: fact.tau,
        mat_a,
        mat_b,
        mat_c,
        hermitian: flow.hermitian.clone(),
        fact,
    })
}

/// Residuals of the defining relations: ĈB̂ = φ⁰_ħ(B̂Ĉ, Â),
/// ĈÂ_j = φ_ħ(B̂Ĉ, Â)_j Ĉ, Â_jB̂ = B̂ φ_ħ(B̂Ĉ, Â)_j, commuting diagonals,
/// B̂* = Ĉ and Â_j* = Â_j (Hermitian components only). Torus residuals are
/// exact over all N² entries; cylinder residuals are measured on the
/// interior block |n| ≤ M-2 only.
pub fn verify_relations(rep: &Representation, flow: &DeformationFlow, tol: f64) -> Vec<CheckReport> {
    let (a_mats, b, c) = rep.matrices();
    let dim = rep.dim();
    let bc = b.mul(&c);
    // joint diagonal of (B̂Ĉ, Â) feeds the flow maps entrywise
    let mut phi0 = CMat::zeros(dim);
    let mut phi: Vec<CMat> = vec![CMat::zeros(dim); a_mats.len()];
    for i in 0..dim {
        let f = bc[(i, i)].re;
        let avals: Vec<Complex64> = a_mats.iter().map(|m| m[(i, i)]).collect();
        phi0[(i, i)] = Complex64::new((flow.zero)(rep.hbar(), f, &avals), 0.0);
        let vnext = (flow.vector)(rep.hbar(), f, &avals);
        for (j, val) in vnext.into_iter().enumerate() {
            phi[j][(i, i)] = val;
        }
    }
    let mut reports = Vec::new();
    let push = |reports: &mut Vec<CheckReport>, name: String, m: &CMat| {
        reports.push(CheckReport::new(name, rep.masked_max(m), tol));
    };
    push(&mut reports, "relation-cb".into(), &c.mul(&b).sub(&phi0));
    for (j, aj) in a_mats.iter().enumerate() {
        push(
            &mut reports,
            format!("relation-ca-{j}"),
            &c.mul(aj).sub(&phi[j].mul(&c)),
        );
        push(
            &mut reports,
            format!("relation-ab-{j}"),
            &aj.mul(&b).sub(&b.mul(&phi[j])),
        );
        if !rep_hermitian(rep, j) {
            // conjugate member of the commuting family
            let aj_star = aj.adjoint();
            let phi_conj = phi[j].adjoint();
            push(
                &mut reports,
                format!("relation-ca-conj-{j}"),
                &c.mul(&aj_star).sub(&phi_conj.mul(&c)),
            );
            push(
                &mut reports,
                format!("relation-ab-conj-{j}"),
                &aj_star.mul(&b).sub(&b.mul(&phi_conj)),
            );
        }
    }
    // commuting family: all diagonals including adjoints
    let mut family: Vec<CMat> = Vec::new();
    for (j, aj) in a_mats.iter().enumerate() {
        family.push(aj.clone());
        if !rep_hermitian(rep, j) {
            family.push(aj.adjoint());
        }
    }
    let mut comm_worst = 0.0f64;
    for x in 0..family.len() {
        for y in (x + 1)..family.len() {
            comm_worst = comm_worst.max(rep.masked_max(&family[x].commutator(&family[y])));
        }
    }
    reports.push(CheckReport::new("commuting-a", comm_worst, tol));
    push(&mut reports, "adjoint-b".into(), &b.adjoint().sub(&c));
    for (j, aj) in a_mats.iter().enumerate() {
        if rep_hermitian(rep, j) {
            push(&mut reports, format!("hermitian-a-{j}"), &aj.adjoint().sub(aj));
        }
    }
    reports
}

fn rep_hermitian(rep: &Representation, j: usize) -> bool {
    match rep {
        Representation::Cylinder(r) => r.hermitian[j],
        Representation::Torus(r) => r.hermitian[j],
    }
}

/// Residuals of the six original quadratic relations of the degenerate
/// Sklyanin algebra, with Ŝ₀..Ŝ₃ recovered from Â, B̂, Ĉ by the inverse of
/// Â = √r Ŝ₃ + (i/√r) Ŝ₀, B̂ = Ŝ₁ - iŜ₂, r = tan(φ/2).
pub fn verify_sklyanin_original(rep: &Representation, phi: f64, tol: f64) -> Result<Vec<CheckReport>> {
    let (a_mats, b, c) = rep.matrices();
    if a_mats.len() != 1 || rep_hermitian(rep, 0) {
        return Err(Error::Input(
            "not a Sklyanin representation: expected one non-Hermitian component".into(),
        ));
    }
    let r = (phi / 2.0).tan();
    if !(r > 0.0) {
        return Err(Error::Input(format!("invalid Sklyanin angle phi = {phi}")));
    }
    let sqrt_r = r.sqrt();
    let a = &a_mats[0];
    let a_star = a.adjoint();
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let s3 = a.add(&a_star).scale(half / sqrt_r);
    let s0 = a.sub(&a_star).scale(half * sqrt_r / i);
    let s1 = b.add(&c).scale(half);
    let s2 = c.sub(&b).scale(half / i);
    let anti = |x: &CMat, y: &CMat| x.mul(y).add(&y.mul(x));
    let r2 = Complex64::new(r * r, 0.0);
    let checks: Vec<(&str, CMat)> = vec![
        ("sklyanin-s1s2", s1.commutator(&s2).sub(&anti(&s0, &s3).scale(i))),
        ("sklyanin-s2s3", s2.commutator(&s3).sub(&anti(&s0, &s1).scale(i))),
        ("sklyanin-s3s1", s3.commutator(&s1).sub(&anti(&s0, &s2).scale(i))),
        (
            "sklyanin-s0s1",
            s0.commutator(&s1).add(&anti(&s2, &s3).scale(i * r2)),
        ),
        (
            "sklyanin-s0s2",
            s0.commutator(&s2).sub(&anti(&s3, &s1).scale(i * r2)),
        ),
        ("sklyanin-s0s3", s0.commutator(&s3)),
    ];
    Ok(checks
        .into_iter()
        .map(|(name, m)| CheckReport::new(name, rep.masked_max(&m), tol))
        .collect())
}

/// Casimir elements evaluated on the joint diagonal: (name, scalar value,
/// max deviation from that scalar). Torus representations also report the
/// nonclassical scalars B̂^N and Â^N.
pub fn casimir_scalars(
    rep: &Representation,
    flow: &DeformationFlow,
) -> Vec<(String, Complex64, f64)> {
    let (a_mats, b, c) = rep.matrices();
    let bc = b.mul(&c);
    let dim = rep.dim();
    let (lo, hi) = match rep.mask() {
        Some((lo, hi)) => (lo, hi),
        None => (0, dim - 1),
    };
    let mut out = Vec::new();
    for (name, kappa) in &flow.casimirs {
        let values: Vec<Complex64> = (lo..=hi)
            .map(|idx| {
                let f = bc[(idx, idx)].re;
                let avals: Vec<Complex64> = a_mats.iter().map(|m| m[(idx, idx)]).collect();
                kappa(f, &avals)
            })
            .collect();
        let mean = values.iter().sum::<Complex64>() / values.len() as f64;
        let dev = values
            .iter()
            .map(|v| (v - mean).norm())
            .fold(0.0, f64::max);
        out.push((name.clone(), mean, dev));
    }
    if let Representation::Torus(t) = rep {
        let n = t.n_dim as u32;
        for (name, m) in [("B^N", &t.mat_b), ("A^N", &t.mat_a[0])] {
            let p = m.pow(n);
            let diag = p.diag();
            let mean = diag.iter().sum::<Complex64>() / diag.len() as f64;
            let dev = p.sub(&CMat::identity(t.n_dim).scale(mean)).max_abs();
            out.push((name.to_string(), mean, dev));
        }
    }
    out
}

/// Fiducial state 𝒫⁰: the indicator of the lattice slot n = 0, verified to
/// be a joint eigenvector of Â (value a) and B̂Ĉ (value a₀) with unit norm.
/// Returns the coefficients and the eigen-residual.
pub fn fiducial_state(
    rep: &Representation,
    flow: &DeformationFlow,
) -> Result<(Vec<Complex64>, f64)> {
    let dim = rep.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[rep.zero_index()] = Complex64::new(1.0, 0.0);
    let (a_mats, b, c) = rep.matrices();
    let mut worst = 0.0f64;
    for (j, aj) in a_mats.iter().enumerate() {
        let av = aj.apply(&v);
        for (i, x) in av.iter().enumerate() {
            let expect = flow.base_a[j] * v[i];
            worst = worst.max((x - expect).norm());
        }
    }
    let bcv = b.apply(&c.apply(&v));
    for (i, x) in bcv.iter().enumerate() {
        let expect = flow.base_a0 * v[i];
        worst = worst.max((x - expect).norm());
    }
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    worst = worst.max((norm - 1.0).abs());
    if worst > 1e-10 {
        return Err(Error::Construction(format!(
            "fiducial state eigen-residual {worst} exceeds 1e-10"
        )));
    }
    Ok((v, worst))
}
