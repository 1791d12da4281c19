//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands.
//!
//! A 7-15 point pair on each subinterval gives the value and an error
//! estimate; the interval with the largest estimate is bisected until the
//! total estimate meets the absolute tolerance. Integrands here are
//! analytic (removable singularities are evaluated by their continuous
//! extension before they reach this module), so convergence is fast.

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half) and weights, with the
// embedded 7-point Gauss weights. Standard QUADPACK values.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Kronrod-15 evaluation over `[a, b]`: returns `(value, error_estimate)`.
fn gk15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let sum = f1 + f2;
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }

    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (value, err)
}

struct Interval {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

/// Integrate `f` over the real interval `[a, b]` to absolute tolerance
/// `abs_tol`, bisecting at most `max_splits` times. Returns the value and
/// the achieved error estimate.
pub(crate) fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_splits: usize,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let (value, err) = gk15(&f, a, b);
    let mut intervals = vec![Interval { a, b, value, err }];
    let mut total_err = err;

    for _ in 0..max_splits {
        if total_err <= abs_tol {
            break;
        }
        // split the interval with the largest error estimate
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("non-empty interval list");
        let iv = intervals.swap_remove(worst);
        total_err -= iv.err;
        let mid = 0.5 * (iv.a + iv.b);
        if mid <= iv.a || mid >= iv.b {
            // interval no longer splittable in f64; keep its estimate
            total_err += iv.err;
            intervals.push(iv);
            break;
        }
        for (lo, hi) in [(iv.a, mid), (mid, iv.b)] {
            let (v, e) = gk15(&f, lo, hi);
            total_err += e;
            intervals.push(Interval {
                a: lo,
                b: hi,
                value: v,
                err: e,
            });
        }
    }

    if total_err > abs_tol {
        return Err(Error::QuadratureFailure {
            achieved: total_err,
            target: abs_tol,
        });
    }

    // fixed summation order (by left endpoint) for determinism
    intervals.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut sum = Complex64::new(0.0, 0.0);
    for iv in &intervals {
        sum += iv.value;
    }
    Ok((sum, total_err))
}

/// Integrate `f` along the straight segment from `from` to `to` in the
/// complex plane.
pub(crate) fn integrate_segment<F>(
    f: F,
    from: Complex64,
    to: Complex64,
    abs_tol: f64,
    max_splits: usize,
) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let d = to - from;
    let len = d.norm();
    if len == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let inner_tol = abs_tol / len;
    let (v, e) = integrate(|t| f(from + d * t), 0.0, 1.0, inner_tol, max_splits)?;
    Ok((v * d, e * len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate(
            |t| Complex64::new(t * t * t - 2.0 * t + 1.0, 0.0),
            0.0,
            2.0,
            1e-13,
            100,
        )
        .unwrap();
        // t^4/4 - t^2 + t at 2: 4 - 4 + 2 = 2
        assert!((v.re - 2.0).abs() < 1e-13);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn oscillatory_converges() {
        let (v, e) = integrate(
            |t| Complex64::new((20.0 * t).sin(), 0.0),
            0.0,
            1.0,
            1e-12,
            200,
        )
        .unwrap();
        let exact = (1.0 - (20.0_f64).cos()) / 20.0;
        assert!((v.re - exact).abs() < 1e-12, "err {}", (v.re - exact).abs());
        assert!(e <= 1e-12);
    }

    #[test]
    fn complex_segment_matches_antiderivative() {
        // integral of u^2 from z0 to z1 = (z1^3 - z0^3)/3 regardless of path
        let z0 = Complex64::new(0.3, 0.4);
        let z1 = Complex64::new(1.0, 0.0);
        let (v, _) = integrate_segment(|u| u * u, z0, z1, 1e-13, 100).unwrap();
        let exact = (z1.powu(3) - z0.powu(3)) / 3.0;
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reports_achieved_error() {
        // |t-0.5|^{-1/2}-like spike is integrable but slow; tiny budget fails
        let r = integrate(
            |t: f64| Complex64::new(1.0 / (t - 0.5).abs().sqrt().max(1e-8), 0.0),
            0.0,
            1.0,
            1e-14,
            3,
        );
        match r {
            Err(Error::QuadratureFailure { achieved, target }) => {
                assert!(achieved > target);
            }
            other => panic!("expected quadrature failure, got {other:?}"),
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let (v, e) = integrate(|_| Complex64::new(1.0, 0.0), 0.7, 0.7, 1e-12, 10).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        assert_eq!(e, 0.0);
    }
}
