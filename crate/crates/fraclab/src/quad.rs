//! One-dimensional quadrature kernels shared by the whole crate:
//! 15-point Gauss-Kronrod with adaptive bisection, tanh-sinh for endpoint
//! singularities, fixed composite Gauss-Legendre panels, and an
//! integration-by-parts tail for slowly decaying cosine integrals.

use crate::error::{Error, Result};

/// Kronrod abscissae for the 7-15 pair (positive half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// Gauss weights for the embedded 7-point rule (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// 16-point Gauss-Legendre nodes (positive half) and weights.
const XGL16: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];
const WGL16: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

/// Single 15-point Gauss-Kronrod panel. Returns (integral, error estimate).
pub fn gauss_kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.abs() * WGK[7];
    let mut fv = [0.0_f64; 14];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[j + 7] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[j + 7] - mean).abs());
    }
    let integral = kronrod * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0_f64.min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (integral, err)
}

/// Adaptive Gauss-Kronrod on [a, b] to absolute tolerance `tol`.
///
/// Bisects the worst panel first. Integrable endpoint singularities are
/// resolved by repeated bisection toward the endpoint, so the panel budget
/// is generous.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gauss_kronrod15(f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    let mut total_err: f64 = e;
    let max_panels = 6000;
    while total_err > tol && panels.len() < max_panels {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        total_err -= pe;
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb || pe == 0.0 {
            // interval at floating-point resolution; accept its estimate
            panels.push((pa, pb, pv, 0.0));
            continue;
        }
        let (v1, e1) = gauss_kronrod15(f, pa, mid);
        let (v2, e2) = gauss_kronrod15(f, mid, pb);
        total_err += e1 + e2;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    let value: f64 = panels.iter().map(|p| p.2).sum();
    if total_err > tol && total_err > 1e-13 * value.abs() {
        return Err(Error::NoConvergence(format!(
            "adaptive GK15 on [{a}, {b}]: error estimate {total_err:.3e} > tol {tol:.3e}"
        )));
    }
    Ok(value)
}

/// Tanh-sinh (double-exponential) rule on (a, b).
///
/// Handles integrable algebraic endpoint singularities; `f` is never
/// called at the endpoints themselves.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let r = 0.5 * (b - a);
    let t_max = 6.11; // weights vanish to ~1e-280 beyond this
    // Sum of w(k h) f(x(k h)) over the requested multiples of h.
    let level_sum = |h: f64, odd_only: bool| -> f64 {
        let mut sum = 0.0;
        let mut tiny_run = 0;
        let mut k = if odd_only { 1 } else { 0 };
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            // distances to the endpoints without cancellation
            let dp = r * 2.0 / ((-2.0 * u).exp() + 1.0); // x_plus - a
            let dm = r * 2.0 / ((2.0 * u).exp() + 1.0); // b - x_plus, also x_minus side
            let xp = a + dp;
            let xm = a + dm;
            let mut term = 0.0;
            if xp > a && xp < b {
                term += f(xp);
            }
            if k > 0 && xm > a && xm < b {
                term += f(xm);
            }
            let contrib = w * term;
            sum += contrib;
            if k > 0 {
                if contrib.abs() < 1e-280 {
                    tiny_run += 1;
                    if tiny_run >= 3 {
                        break;
                    }
                } else {
                    tiny_run = 0;
                }
            }
            k += if odd_only { 2 } else { 1 };
        }
        sum
    };
    let mut h = 1.0;
    let mut node_sum = level_sum(h, false);
    let mut value = node_sum * h * r;
    for _ in 0..12 {
        h *= 0.5;
        node_sum += level_sum(h, true);
        let refined = node_sum * h * r;
        if (refined - value).abs() < tol.max(4.0 * f64::EPSILON * refined.abs()) {
            return Ok(refined);
        }
        value = refined;
    }
    Err(Error::NoConvergence(format!(
        "tanh-sinh on ({a}, {b}) did not reach tol {tol:.3e}"
    )))
}

/// Fixed-panel composite 16-point Gauss-Legendre.
pub fn composite_gl16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * w;
        let h = 0.5 * w;
        for j in 0..8 {
            sum += WGL16[j] * (f(c - h * XGL16[j]) + f(c + h * XGL16[j]));
        }
    }
    sum * 0.5 * w
}

/// ∫_{t0}^∞ cos(t) t^{-a} dt for a > 0, t0 > 0.
///
/// Integrates period-length panels up to T ≈ t0 + 40π, then closes with the
/// integration-by-parts expansion whose remainder at that T is below 1e-12.
pub fn cos_power_tail(a: f64, t0: f64) -> f64 {
    assert!(a > 0.0 && t0 > 0.0);
    let big_t = t0 + 40.0 * std::f64::consts::PI;
    let mut head = 0.0;
    let mut left = t0;
    while left < big_t {
        let right = (left + std::f64::consts::PI).min(big_t);
        let (v, _) = gauss_kronrod15(&|t: f64| t.cos() * t.powf(-a), left, right);
        head += v;
        left = right;
    }
    head + cos_asymptotic_tail(a, big_t, 5)
}

// ∫_T^∞ cos s · s^{-a} ds = -sin(T) T^{-a} + a cos(T) T^{-a-1}
//                           - a(a+1) ∫_T^∞ cos s · s^{-a-2} ds
fn cos_asymptotic_tail(a: f64, t: f64, levels: usize) -> f64 {
    if levels == 0 {
        return 0.0;
    }
    -t.sin() * t.powf(-a) + a * t.cos() * t.powf(-a - 1.0)
        - a * (a + 1.0) * cos_asymptotic_tail(a + 2.0, t, levels - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk15_polynomial_exact() {
        let (v, e) = gauss_kronrod15(&|x: f64| x.powi(6) - 3.0 * x + 1.0, -1.0, 2.5);
        let anti = |x: f64| x.powi(7) / 7.0 - 1.5 * x * x + x;
        assert!((v - (anti(2.5) - anti(-1.0))).abs() < 1e-10);
        assert!(e < 1e-8);
    }

    #[test]
    fn adaptive_peaked() {
        let v = adaptive(&|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (100.0_f64).atan() * 100.0;
        assert!((v - exact).abs() < 1e-6, "v={v} exact={exact}");
    }

    #[test]
    fn adaptive_algebraic_endpoint() {
        // ∫_1^∞-type kink: ∫_1^2 (t-1)^{1/4} dt = (4/5) 1^{5/4}
        let v = adaptive(&|t: f64| (t - 1.0).powf(0.25), 1.0, 2.0, 1e-10).unwrap();
        assert!((v - 0.8).abs() < 1e-9, "v={v}");
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let v = tanh_sinh(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "v={v}");
        let v = tanh_sinh(&|x: f64| x.ln(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v + 1.0).abs() < 1e-10, "v={v}");
    }

    #[test]
    fn composite_gl_smooth() {
        let v = composite_gl16(&|x: f64| (-x * x).exp(), -8.0, 8.0, 16);
        assert!((v - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cosine_tail_matches_known_value() {
        // ∫_0^∞ cos t / t^{1/2} dt = sqrt(π/2); head on (0, 1] by tanh-sinh.
        let head = tanh_sinh(&|t: f64| t.cos() * t.powf(-0.5), 0.0, 1.0, 1e-13).unwrap();
        let v = head + cos_power_tail(0.5, 1.0);
        assert!((v - (PI / 2.0).sqrt()).abs() < 1e-9, "v={v}");
    }
}
