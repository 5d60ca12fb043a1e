//! Closed-form solutions and integral identities used as oracles by the
//! rest of the crate: the s-harmonic half-line profile and its constant,
//! the constant-Laplacian ball profile, the 1/s kernel identity, heat
//! kernels, the coarea identity gap, the Sobolev-quotient probe, and the
//! commutator uncertainty gap.

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::fraclap::{self, QuadratureParams, TailModel};
use crate::geometry;
use crate::quad;
use crate::specfun::{self, Dimension, FracOrder};
use std::f64::consts::PI;

/// The constant c_s with (-Δ)^s x_+^s = -c_s |x|^{-s} on the negative
/// axis, defined operationally through the singular-integral quadrature
/// at x = -1.
#[derive(Clone, Copy, Debug)]
pub struct HalfLineConstant {
    pub s: FracOrder,
    pub c_s: f64,
}

impl HalfLineConstant {
    pub fn from_quadrature(s: FracOrder) -> Result<Self> {
        let sv = s.value();
        let q = QuadratureParams {
            inner_radius: 0.05,
            outer_radius: 1e28,
            points_per_decade: 60,
            tol: 1e-10,
            tail: TailModel::ZeroTail,
        };
        let eval = fraclap::fraclap_quadrature(|x: f64| x.max(0.0).powf(sv), -1.0, s, &q)?;
        let c_s = -eval.value;
        if !(c_s > 0.0) {
            return Err(Error::Solver(format!("half-line constant came out nonpositive: {c_s}")));
        }
        Ok(HalfLineConstant { s, c_s })
    }
}

/// (-Δ)^s of x_+^s: zero on the positive axis, -c_s |x|^{-s} on the
/// negative axis. Errors at the origin.
pub fn halfline_fraclap(x: f64, c: &HalfLineConstant) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Domain("the half-line profile has no value at the origin".into()));
    }
    if x > 0.0 {
        Ok(0.0)
    } else {
        Ok(-c.c_s * x.abs().powf(-c.s.value()))
    }
}

/// The constant value of (-Δ)^s (1-|x|²)^s_+ inside the unit ball:
/// C(n,s) B(1-s, s) ω_n / 2 with ω_n = |∂B₁|.
pub fn ball_constant(n: Dimension, s: FracOrder) -> f64 {
    let sv = s.value();
    specfun::cns_closed(n, s)
        * specfun::beta(1.0 - sv, sv).expect("s in (0,1)")
        * specfun::sphere_measure(n.value())
        / 2.0
}

/// ∫_0^1 ((1+t)^s + (1-t)^s - 2)/t^{1+2s} dt + ∫_1^∞ (1+t)^s/t^{1+2s} dt,
/// which collapses to 1/s.
///
/// The numerator of the first piece cancels to O(t²), so on [0, 1/2] it
/// is integrated termwise from the even binomial series (the naive form
/// drowns in rounding noise for s > 1/2); the kinked remainder goes
/// through the double-exponential rule.
pub fn halfline_identity_integral(s: FracOrder, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let sv = s.value();
    // (1+t)^s + (1-t)^s - 2 = 2 Σ_{k≥1} binom(s, 2k) t^{2k}:
    // ∫_0^{1/2} · t^{-1-2s} dt = 2 Σ binom(s,2k) (1/2)^{2k-2s} / (2k-2s)
    let mut series = 0.0;
    let mut binom = 1.0_f64; // binom(s, m), m = 0
    let mut m = 0u32;
    for k in 1..60 {
        // advance binom(s, m) to m = 2k
        binom *= (sv - m as f64) / (m as f64 + 1.0);
        m += 1;
        binom *= (sv - m as f64) / (m as f64 + 1.0);
        m += 1;
        let term = 2.0 * binom * 0.5_f64.powf(2.0 * k as f64 - 2.0 * sv)
            / (2.0 * k as f64 - 2.0 * sv);
        series += term;
        if term.abs() < 1e-17 * series.abs().max(1e-3) {
            break;
        }
    }
    let first_tail = quad::tanh_sinh(
        &|t: f64| ((1.0 + t).powf(sv) + (1.0 - t).powf(sv) - 2.0) * t.powf(-1.0 - 2.0 * sv),
        0.5,
        1.0,
        tol * 0.1,
    )?;
    // second piece via t = 1/v: ∫_0^1 (1+v)^s v^{s-1} dv
    let second = quad::tanh_sinh(
        &|v: f64| (1.0 + v).powf(sv) * v.powf(sv - 1.0),
        0.0,
        1.0,
        tol * 0.1,
    )?;
    Ok(series + first_tail + second)
}

/// Heat kernel of the s-diffusion: Gaussian for s = 1 (any dimension),
/// Poisson kernel t/(π(t²+x²)) for s = 1/2 in one dimension.
pub fn heat_kernel(x: &[f64], t: f64, s: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel requires t > 0, got {t}")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if s == 1.0 {
        let n = x.len() as f64;
        Ok((4.0 * PI * t).powf(-n / 2.0) * (-r2 / (4.0 * t)).exp())
    } else if s == 0.5 && x.len() == 1 {
        Ok(t / (PI * (t * t + r2)))
    } else {
        Err(Error::Domain(format!(
            "closed-form heat kernel available only for s = 1 or (s = 1/2, n = 1), got s = {s}, n = {}",
            x.len()
        )))
    }
}

/// |LHS - RHS| of the generalized coarea identity for a field with values
/// in [0, 1]: half the double sum with kernel |x-y|^{-(1+s)} against the
/// level-set interaction integrated exactly over the sorted distinct
/// values. Both sides share one exact kernel table.
pub fn coarea_gap(u: &SampledField, s: FracOrder) -> Result<f64> {
    if u.grid.dim() != 1 {
        return Err(Error::Invalid("coarea gap is computed on 1D windows".into()));
    }
    if u.values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Domain("field values must lie in [0, 1]".into()));
    }
    let n = u.values.len();
    let h = u.grid.spacing(0);
    let p = 1.0 + s.value();
    // exact cell-pair kernel integrals K_{|i-j|}
    let mut kernel = vec![0.0; n];
    for (d, slot) in kernel.iter_mut().enumerate().skip(1) {
        let c = d as f64 * h;
        *slot = geometry::interval_pair_integral(0.0, h, c, c + h, p);
    }
    // LHS: ½ ΣΣ |u_i - u_j| K_{|i-j|} (ordered pairs), i.e. the upper sum
    let mut lhs = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            lhs += (u.values[i] - u.values[j]).abs() * kernel[j - i];
        }
    }
    // RHS: Σ over consecutive distinct levels of Δv · I({u > v}, {u <= v})
    let mut levels: Vec<f64> = u.values.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut rhs = 0.0;
    for w in levels.windows(2) {
        let v_lo = w[0];
        let dv = w[1] - w[0];
        let mut cross = 0.0;
        for i in 0..n {
            if u.values[i] <= v_lo {
                continue;
            }
            for j in 0..n {
                if u.values[j] <= v_lo {
                    cross += kernel[i.abs_diff(j)];
                }
            }
        }
        rhs += dv * cross;
    }
    Ok((lhs - rhs).abs())
}

/// ‖u‖_{L^{np/(n-sp)}} divided by the Gagliardo seminorm
/// (ΣΣ |u_i-u_j|^p |x_i-x_j|^{-(n+sp)} h^{2n})^{1/p}.
///
/// Finite and positive for u ≢ 0; errors on the zero function.
pub fn sobolev_ratio(u: &SampledField, s: FracOrder, p: f64) -> Result<f64> {
    let n = u.grid.dim() as f64;
    let sv = s.value();
    if !(p > 1.0 && p < n / sv) {
        return Err(Error::Domain(format!(
            "exponent must satisfy 1 < p < n/s, got p = {p} with n/s = {}",
            n / sv
        )));
    }
    if u.values.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("Sobolev quotient of the zero function".into()));
    }
    let q = n * p / (n - sv * p);
    let vol = u.grid.cell_volume();
    let num = (u.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * vol).powf(1.0 / q);
    let total = u.values.len();
    let mut semi = 0.0;
    for i in 0..total {
        let ci = u.grid.coord(i);
        for j in (i + 1)..total {
            let cj = u.grid.coord(j);
            let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
            semi += 2.0 * (u.values[i] - u.values[j]).abs().powf(p) * d.powf(-(n + sv * p));
        }
    }
    semi = (semi * vol * vol).powf(1.0 / p);
    Ok(num / semi)
}

/// RHS - LHS of the commutator uncertainty inequality, all norms spectral:
/// (2/(n+s-1)) ‖|x|u‖ ‖∇(-Δ)^{(s-1)/2}u‖ - ‖(-Δ)^{(s-1)/4}u‖².
///
/// The zero frequency of the negative-power multiplier is regularized by
/// its cell average, which keeps the discrete functional finite and
/// consistent under refinement.
pub fn uncertainty_gap(u: &SampledField, s: FracOrder) -> f64 {
    let sv = s.value();
    let nd = u.grid.dim();
    let n = nd as f64;
    let spec = u.to_spectral();
    let vol: f64 = (0..nd).map(|a| u.grid.period(a)).product();
    // cell-averaged zero-mode weight of (2π|ξ|)^{s-1}
    let zero_weight = match nd {
        1 => {
            let d = 1.0 / u.grid.period(0);
            (2.0 * PI).powf(sv - 1.0) * (d / 2.0).powf(sv - 1.0) / sv
        }
        _ => {
            let d = 1.0 / u.grid.period(0);
            let r0 = d / PI.sqrt(); // disk of the same area as the cell
            (2.0 * PI).powf(sv - 1.0) * 2.0 * PI * r0.powf(sv + 1.0) / ((sv + 1.0) * d * d)
        }
    };
    let mut lhs = 0.0; // ‖(-Δ)^{(s-1)/4} u‖²
    let mut grad = 0.0; // ‖∇(-Δ)^{(s-1)/2} u‖²
    for (idx, c) in spec.coef.iter().enumerate() {
        let xi = u.grid.frequency(idx);
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let e = c.norm_sqr() / vol;
        if r == 0.0 {
            lhs += zero_weight * e;
        } else {
            lhs += (2.0 * PI * r).powf(sv - 1.0) * e;
            grad += (2.0 * PI * r).powf(2.0 * sv) * e;
        }
    }
    let mut xnorm = 0.0; // ‖ |x| u ‖²
    for (i, v) in u.values.iter().enumerate() {
        let c = u.grid.coord(i);
        xnorm += (c[0] * c[0] + c[1] * c[1]) * v * v;
    }
    xnorm *= u.grid.cell_volume();
    2.0 / (n + sv - 1.0) * xnorm.sqrt() * grad.sqrt() - lhs
}
