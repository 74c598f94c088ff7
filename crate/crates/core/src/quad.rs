//! Quadrature building blocks: Gauss–Legendre and Gauss–Hermite rules
//! (Newton iteration on the orthonormal recurrences, no external solver),
//! composite panels, and an adaptive Simpson rule for complex integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-type initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_pair(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    // mirror to the negative half
    let mut full = Vec::with_capacity(n);
    for i in (0..m).rev() {
        let (x, w) = out[i];
        if x.abs() > 1e-14 || n.is_multiple_of(2) {
            full.push((-x, w));
        }
    }
    for &(x, w) in out.iter() {
        if x.abs() <= 1e-14 && !n.is_multiple_of(2) {
            full.push((0.0, w));
        }
    }
    for (x, w) in out.into_iter() {
        if x.abs() > 1e-14 || n.is_multiple_of(2) {
            full.push((x, w));
        }
    }
    full.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    full
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of the n-point Gauss–Hermite rule: sum w_i f(x_i) ≈ ∫ e^{-x²} f(x) dx.
///
/// Golub–Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
/// orthonormal Hermite polynomials (zero diagonal, off-diagonal √(k/2)) and
/// the weights are √π times the squared first eigenvector components,
/// obtained from tridiagonal QL with implicit shifts.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    tridiag_ql_first_row(&mut d, &mut e, &mut z);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut out: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z)
        .map(|(x, z0)| (x, mu0 * z0 * z0))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Symmetric tridiagonal QL with implicit shifts, accumulating only the
/// first row of the eigenvector matrix (enough for Gauss weights).
fn tridiag_ql_first_row(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Composite Gauss–Legendre integration of a real function over [a, b].
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for &(x, w) in &rule {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += acc * 0.5 * h;
    }
    total
}

/// Adaptive Simpson quadrature for a complex-valued function on a real interval.
pub fn adaptive_simpson<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Complex64> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Result<Complex64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "adaptive Simpson recursion exhausted on [{a}, {b}]"
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integral of a complex function along the straight segment 0 → t in ℂ.
pub fn integrate_segment<F: Fn(Complex64) -> Complex64>(
    f: F,
    t: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let g = |s: f64| f(t * s) * t;
    adaptive_simpson(&g, 0.0, 1.0, tol)
}
