//! Order-0 Bessel and Hankel functions and the 2-D scalar Green function.
//!
//! On `[0, 5]` all functions are evaluated by their power series; above 5 the
//! Hankel asymptotic form is used with the Cephes rational approximations of
//! the modulus/phase factors `P(x)` and `Q(x)`. Both branches are accurate to
//! a few ulps of absolute error; the worst case is near the switchover where
//! series cancellation costs about one decimal digit.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::Point2;

/// Switchover between the power series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 5.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

fn check(function: &'static str, x: f64, allow_zero: bool) -> Result<()> {
    let ok = x.is_finite() && if allow_zero { x >= 0.0 } else { x > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain { function, x })
    }
}

/// Bessel function of the first kind, order zero, for `x >= 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check("bessel_j0", x, true)?;
    Ok(if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        let (p, q) = asymptotic_pq0(x);
        let xn = x - FRAC_PI_4;
        (p * xn.cos() - q * xn.sin()) * SQRT_2_OVER_PI / x.sqrt()
    })
}

/// Bessel function of the second kind, order zero, for `x > 0`.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check("bessel_y0", x, false)?;
    Ok(if x <= SERIES_LIMIT {
        y0_series(x)
    } else {
        let (p, q) = asymptotic_pq0(x);
        let xn = x - FRAC_PI_4;
        (p * xn.sin() + q * xn.cos()) * SQRT_2_OVER_PI / x.sqrt()
    })
}

/// Bessel function of the first kind, order one, for `x >= 0`.
///
/// Only needed to check the order-0 pair through the Wronskian.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check("bessel_j1", x, true)?;
    Ok(if x <= SERIES_LIMIT {
        j1_series(x)
    } else {
        let (p, q) = asymptotic_pq1(x);
        let xn = x - 3.0 * FRAC_PI_4;
        (p * xn.cos() - q * xn.sin()) * SQRT_2_OVER_PI / x.sqrt()
    })
}

/// Bessel function of the second kind, order one, for `x > 0`.
pub fn bessel_y1(x: f64) -> Result<f64> {
    check("bessel_y1", x, false)?;
    Ok(if x <= SERIES_LIMIT {
        y1_series(x)
    } else {
        let (p, q) = asymptotic_pq1(x);
        let xn = x - 3.0 * FRAC_PI_4;
        (p * xn.sin() + q * xn.cos()) * SQRT_2_OVER_PI / x.sqrt()
    })
}

/// Hankel function of the first kind, order zero: `J0(x) + j Y0(x)`.
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    check("hankel1_0", x, false)?;
    Ok(Complex64::new(bessel_j0(x)?, bessel_y0(x)?))
}

/// Free-space 2-D Green function `H0^(1)(kappa |p - q|)`.
///
/// The `j/4` prefactor is dropped; every null spectrum works with
/// unit-normalised Green vectors, so constant factors cancel.
pub fn green2d(p: Point2, q: Point2, kappa: f64) -> Result<Complex64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Domain {
            function: "green2d",
            x: kappa,
        });
    }
    let r = p.distance(q);
    if r == 0.0 {
        return Err(Error::Singularity { p, q });
    }
    hankel1_0(kappa * r)
}

const SERIES_TOL: f64 = 1e-18;

fn j0_series(x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= -z / (kf * kf);
        sum += term;
        if term.abs() < SERIES_TOL * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn y0_series(x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= -z / (kf * kf);
        harmonic += 1.0 / kf;
        let t = -harmonic * term;
        sum += t;
        if t.abs() < SERIES_TOL * sum.abs().max(1.0) {
            break;
        }
    }
    FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0_series(x) + sum)
}

fn j1_series(x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= -z / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < SERIES_TOL * sum.abs().max(1.0) {
            break;
        }
    }
    0.5 * x * sum
}

fn y1_series(x: f64) -> f64 {
    // psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut h_k = 0.0;
    let mut sum = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= -z / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        let t = term * (-2.0 * EULER_GAMMA + 2.0 * h_k + 1.0 / (kf + 1.0));
        sum += t;
        if t.abs() < SERIES_TOL * sum.abs().max(1.0) {
            break;
        }
    }
    -FRAC_2_PI / x + FRAC_2_PI * (0.5 * x).ln() * j1_series(x) - 0.5 * x * sum / PI
}

/// Horner evaluation, coefficients from the highest degree down.
fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// As [`polevl`] with an implicit leading coefficient of one.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

/// Returns `(P(x), (5/x) Q(x))` for order zero.
fn asymptotic_pq0(x: f64) -> (f64, f64) {
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &PP0) / polevl(z, &PQ0);
    let q = polevl(z, &QP0) / p1evl(z, &QQ0);
    (p, w * q)
}

fn asymptotic_pq1(x: f64) -> (f64, f64) {
    let w = 5.0 / x;
    let z = w * w;
    let p = polevl(z, &PP1) / polevl(z, &PQ1);
    let q = polevl(z, &QP1) / p1evl(z, &QQ1);
    (p, w * q)
}

// Cephes j0.c / j1.c asymptotic coefficients.
const PP0: [f64; 7] = [
    7.969367292973471e-4,
    8.283523921074408e-2,
    1.239533716464143,
    5.447250030587687,
    8.74716500199817,
    5.303240382353949,
    1.0,
];
const PQ0: [f64; 7] = [
    9.244088105588637e-4,
    8.562884743544745e-2,
    1.2535274390105895,
    5.470977403304171,
    8.761908832370695,
    5.306052882353947,
    1.0,
];
const QP0: [f64; 8] = [
    -1.1366383889846916e-2,
    -1.2825271867050931,
    -1.9553954425773597e1,
    -9.320601521237683e1,
    -1.7768116798048806e2,
    -1.4707750515495118e2,
    -5.141053267665993e1,
    -6.050143506007285,
];
const QQ0: [f64; 7] = [
    6.43178256118178e1,
    8.564300259769806e2,
    3.8824018360540163e3,
    7.240467741956525e3,
    5.930727011873169e3,
    2.0620933166032783e3,
    2.420057402402914e2,
];

const PP1: [f64; 7] = [
    7.621256162081731e-4,
    7.313970569409176e-2,
    1.1271960812968493,
    5.112079511468076,
    8.424045901417724,
    5.214515986823615,
    1.0,
];
const PQ1: [f64; 7] = [
    5.713231280725487e-4,
    6.884559087544954e-2,
    1.105142326340617,
    5.073863861286015,
    8.399855543276042,
    5.209828486823619,
    1.0,
];
const QP1: [f64; 8] = [
    5.108625947501766e-2,
    4.982138729512334,
    7.582382841325453e1,
    3.667796093601508e2,
    7.108563049989261e2,
    5.974896124006136e2,
    2.1168875710057213e2,
    2.5207020585802372e1,
];
const QQ1: [f64; 7] = [
    7.423732770356752e1,
    1.0564488603826283e3,
    4.986410583376536e3,
    9.562318924047562e3,
    7.997041604473507e3,
    2.8261927851763908e3,
    3.360936078106983e2,
];

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values from mpmath at 40 digits.
    const REFERENCE: &[(f64, f64, f64, f64, f64)] = &[
        (
            1e-6,
            0.99999999999975,
            -8.8690314816594437029,
            4.999999999999375e-7,
            -636619.77237217501376,
        ),
        (
            0.5,
            0.93846980724081290423,
            -0.44451873350670655715,
            0.24226845767487388638,
            -1.4714723926702430692,
        ),
        (
            1.0,
            0.76519768655796655145,
            0.088256964215676957983,
            0.44005058574493351596,
            -0.78121282130028871655,
        ),
        (
            2.0,
            0.22389077914123566805,
            0.5103756726497451196,
            0.5767248077568733872,
            -0.10703243154093754689,
        ),
        (
            4.999,
            -0.17792429435531088798,
            -0.30836959307291749822,
            -0.32746688820843090465,
            0.14820119642594756638,
        ),
        (
            5.0,
            -0.17759677131433830435,
            -0.30851762524903378007,
            -0.32757913759146522204,
            0.1478631433912268448,
        ),
        (
            5.001,
            -0.17726913619242533944,
            -0.30866531933492309659,
            -0.32769105008236389453,
            0.14752501602594078227,
        ),
        (
            7.5,
            0.26633965788037839687,
            0.11731328614820863084,
            0.13524842757970550518,
            -0.2591285104861162518,
        ),
        (
            10.0,
            -0.2459357644513483352,
            0.055671167283599391424,
            0.04347274616886143667,
            0.24901542420695388392,
        ),
        (
            20.0,
            0.16702466434058315473,
            0.062640596809383831162,
            0.066833124175850045579,
            -0.16551161436252129586,
        ),
        (
            100.0,
            0.019985850304223122424,
            -0.077244313365083152254,
            -0.077145352014112158033,
            -0.020372312002759793305,
        ),
        (
            333.3,
            0.038466654416718439611,
            -0.020745232486427372344,
            -0.02068755020681380285,
            -0.03849781859054378957,
        ),
        (
            1000.0,
            0.024786686152420174561,
            0.0047159179776228133998,
            0.0047283119070895239176,
            -0.024784331292351778915,
        ),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, j0, y0, j1, y1) in REFERENCE {
            assert!((bessel_j0(x).unwrap() - j0).abs() <= 1e-12, "j0({x})");
            assert!((bessel_y0(x).unwrap() - y0).abs() <= 1e-12, "y0({x})");
            assert!((bessel_j1(x).unwrap() - j1).abs() <= 1e-12, "j1({x})");
            // Y1 blows up like 2/(pi x); compare relatively near the origin.
            assert!(
                (bessel_y1(x).unwrap() - y1).abs() <= 1e-12 * y1.abs().max(1.0),
                "y1({x})"
            );
        }
    }

    #[test]
    fn origin_and_domain() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert!(matches!(bessel_j0(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_j0(f64::NAN), Err(Error::Domain { .. })));
        assert!(matches!(
            bessel_j0(f64::INFINITY),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(bessel_y0(0.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_y0(-2.0), Err(Error::Domain { .. })));
        assert!(matches!(hankel1_0(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn y0_log_singularity() {
        // Y0(x) - (2/pi) ln(x) tends to (2/pi)(gamma - ln 2)
        let limit = FRAC_2_PI * (EULER_GAMMA - 2f64.ln());
        for x in [1e-8, 1e-10, 1e-12] {
            let y = bessel_y0(x).unwrap();
            assert!((y - FRAC_2_PI * x.ln() - limit).abs() < 1e-12);
        }
    }

    #[test]
    fn hankel_at_one() {
        let h = hankel1_0(1.0).unwrap();
        assert!((h.re - 0.765197686557967).abs() < 1e-14);
        assert!((h.im - 0.088256964215677).abs() < 1e-14);
    }

    #[test]
    fn j0_at_100_close_to_leading_asymptotic() {
        let x = 100.0;
        let lead = (2.0 / (PI * x)).sqrt() * (x - FRAC_PI_4).cos();
        assert!((bessel_j0(x).unwrap() - lead).abs() < 1e-3);
    }

    #[test]
    fn hankel_modulus_at_two_pi() {
        let x = 2.0 * PI;
        let h = hankel1_0(x).unwrap();
        assert!((h.norm() - (2.0 / (PI * x)).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn green_rejects_coincident_points() {
        let p = Point2::new(0.3, -1.0);
        match green2d(p, p, 1.0) {
            Err(Error::Singularity { p: a, q: b }) => {
                assert_eq!(a, p);
                assert_eq!(b, p);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(green2d(p, Point2::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn green_unit_distance() {
        let g = green2d(Point2::new(0.0, 0.0), Point2::new(0.6, 0.8), 2.0 * PI).unwrap();
        let h = hankel1_0(2.0 * PI).unwrap();
        assert!((g - h).norm() < 1e-15);
    }
}
