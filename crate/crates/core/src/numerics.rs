//! Lower branch of the Lambert W function and the allocation factor
//! `-W_{-1}(-exp(-zeta - 1))`.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const REL_TOL: f64 = 1e-15;

/// `-1/e`, the branch point.
pub const BRANCH_POINT: f64 = -0.367_879_441_171_442_33;

/// `W_{-1}(z)`: the solution `w <= -1` of `w e^w = z` for `z` in `[-1/e, 0)`.
///
/// Safeguarded Halley iteration on `w e^w - z` inside a shrinking bracket.
pub fn lambert_w_minus1(z: f64) -> Result<f64> {
    if !(BRANCH_POINT..0.0).contains(&z) {
        return Err(Error::Domain(format!(
            "W_-1 is defined on [-1/e, 0), got {z}"
        )));
    }
    if z == BRANCH_POINT {
        return Ok(-1.0);
    }

    // h(w) = w e^w decreases from 0 (w -> -inf) to -1/e (w = -1), so
    // h(lo) - z > 0 and h(hi) - z <= 0 bracket the root.
    let mut hi = -1.0_f64;
    let mut lo = 2.0 * (-z).ln() - 2.0;
    while lo * lo.exp() <= z {
        lo *= 2.0;
    }

    let mut w = initial_guess(z).clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            return Ok(w);
        }
        if f > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let mut next = w - f / denom;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= REL_TOL * w.abs() || hi - lo <= REL_TOL * lo.abs() {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

fn initial_guess(z: f64) -> f64 {
    if z < -0.25 {
        // expansion about the branch point in p = -sqrt(2(1 + e z))
        let p = -(2.0 * (1.0 + std::f64::consts::E * z)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-z).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

/// `u = -W_{-1}(-exp(-zeta - 1))` for `zeta >= 0`.
///
/// Solves `u - ln u = zeta + 1` on `u >= 1` directly, so the tiny argument
/// `exp(-zeta - 1)` is never formed. Returns `+inf` for `zeta = +inf`.
pub fn neg_w_factor(zeta: f64) -> Result<f64> {
    if zeta.is_nan() || zeta < 0.0 {
        return Err(Error::Domain(format!("zeta must be >= 0, got {zeta}")));
    }
    if zeta == 0.0 {
        return Ok(1.0);
    }
    if zeta.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let target = zeta + 1.0;
    let g = |u: f64| u - u.ln() - target;

    // g is convex and increasing on [1, inf); lo/hi bracket the root.
    let mut lo = 1.0_f64;
    let mut hi = target + target.ln() + 1.0;
    let mut u = if zeta < 1.0 {
        let p = (2.0 * zeta).sqrt();
        1.0 + p + p * p / 3.0 + p * p * p / 36.0
    } else {
        target + target.ln()
    }
    .clamp(lo, hi);

    for _ in 0..MAX_ITER {
        let gu = g(u);
        if gu == 0.0 {
            return Ok(u);
        }
        if gu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let d1 = 1.0 - 1.0 / u;
        let d2 = 1.0 / (u * u);
        // Halley
        let mut next = u - 2.0 * gu * d1 / (2.0 * d1 * d1 - gu * d2);
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= REL_TOL * u || hi - lo <= REL_TOL * hi {
            return Ok(next);
        }
        u = next;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain bisection on `w e^w = z` over `[-200, -1]`.
    fn bisect_w(z: f64) -> f64 {
        let (mut lo, mut hi) = (-200.0_f64, -1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() - z > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn bisect_u(zeta: f64) -> f64 {
        let (mut lo, mut hi) = (1.0_f64, zeta + 10.0 + (zeta + 1.0).ln() * 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - mid.ln() - (zeta + 1.0) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_minus1(BRANCH_POINT).unwrap(), -1.0);
        assert!((BRANCH_POINT + (-1.0f64).exp()).abs() < 1e-17);
    }

    #[test]
    fn known_values() {
        let oracle = bisect_w(-0.1);
        assert!((oracle - -3.577152).abs() < 1e-6, "oracle {oracle}");
        let w = lambert_w_minus1(-0.1).unwrap();
        assert!((w - -3.577_152_063_957_297).abs() < 1e-12, "{w}");

        let w = lambert_w_minus1(-0.3).unwrap();
        assert!((w * w.exp() + 0.3).abs() < 1e-12);
        assert!(w <= -1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(0.1).is_err());
        assert!(lambert_w_minus1(-0.4).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
        assert!(neg_w_factor(-1e-9).is_err());
        assert!(neg_w_factor(f64::NAN).is_err());
    }

    #[test]
    fn agrees_with_bisection() {
        for &z in &[-0.367, -0.35, -0.2, -0.05, -1e-3, -1e-6, -1e-8, -1e-30] {
            let w = lambert_w_minus1(z).unwrap();
            let b = bisect_w(z);
            assert!((w - b).abs() <= 1e-12 * b.abs(), "z={z}: {w} vs {b}");
        }
    }

    #[test]
    fn neg_w_factor_examples() {
        assert_eq!(neg_w_factor(0.0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((neg_w_factor(e - 2.0).unwrap() - e).abs() < 1e-12);
        let u = neg_w_factor(0.25).unwrap();
        // 50-digit reference: 1.88271475258259476171...
        assert!((u - 1.882_714_752_582_595).abs() < 1e-13, "{u}");
        assert!((u - bisect_u(0.25)).abs() < 1e-12);
    }

    #[test]
    fn neg_w_factor_matches_lambert_where_representable() {
        for &zeta in &[1e-6, 0.01, 0.3, 1.0, 5.0, 30.0] {
            let via_w = -lambert_w_minus1(-(-zeta - 1.0f64).exp()).unwrap();
            let direct = neg_w_factor(zeta).unwrap();
            assert!(
                (via_w - direct).abs() <= 1e-7 * direct,
                "zeta={zeta}: {via_w} vs {direct}"
            );
        }
    }

    #[test]
    fn neg_w_factor_large_zeta() {
        // exp(-zeta - 1) underflows here; the direct solve does not care
        let u = neg_w_factor(1e4).unwrap();
        assert!((u - u.ln() - (1e4 + 1.0)).abs() <= 1e-12 * u);
        assert_eq!(neg_w_factor(f64::INFINITY).unwrap(), f64::INFINITY);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn neg_w_factor_increasing(a in 0.0f64..60.0, b in 0.0f64..60.0) {
                prop_assume!(a < b);
                prop_assert!(neg_w_factor(a).unwrap() < neg_w_factor(b).unwrap());
            }

            #[test]
            fn lambert_decreasing(a in -0.3678f64..-1e-10, b in -0.3678f64..-1e-10) {
                prop_assume!(a < b);
                prop_assert!(lambert_w_minus1(a).unwrap() > lambert_w_minus1(b).unwrap());
            }
        }
    }
}
