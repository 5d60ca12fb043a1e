//! Harmonic extension of the fractional Laplacian to the upper half
//! space: the weighted-ODE profile g, its Neumann constant C♯, the
//! spectral extension operator, and the Dirichlet-to-Neumann trace.
//!
//! The profile solves g'' + a t⁻¹ g' = g with a = 1-2s, g(0) = 1,
//! g(∞) = 0. It is built from the modified Bessel function,
//! g(t) = t^s K_s(t) / (2^{s-1} Γ(s)), and then validated numerically
//! against the ODE residual and the boundary conditions — the Bessel
//! identification is never assumed.

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::specfun::{self, FracOrder};
use std::f64::consts::PI;

/// Sampled minimizer g of the weighted half-line energy together with
/// a = 1-2s and the Neumann constant C♯.
#[derive(Clone, Debug)]
pub struct ExtensionProfile {
    pub s: FracOrder,
    /// Weight exponent a = 1 - 2s.
    pub a: f64,
    /// Log-spaced grid on (0, t_max].
    pub t_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub c_sharp: f64,
}

/// Builds the profile on a log grid, validates the ODE residual, the
/// range 0 ≤ g ≤ 1, monotonicity, and the boundary values, and extracts
/// C♯ by Richardson extrapolation at the small-t end.
pub fn profile_g(s: FracOrder, t_max: f64, tol: f64) -> Result<ExtensionProfile> {
    if !(t_max >= 50.0) {
        return Err(Error::Invalid("profile range must reach t_max >= 50".into()));
    }
    let sv = s.value();
    let a = 1.0 - 2.0 * sv;
    let t_min = 1e-6;
    let ratio = 1.001_f64;
    let count = ((t_max / t_min).ln() / ratio.ln()).ceil() as usize + 1;
    let t_grid: Vec<f64> = (0..count)
        .map(|i| (t_min * ratio.powi(i as i32)).min(t_max))
        .collect();
    let norm = 2.0_f64.powf(sv - 1.0) * specfun::gamma(sv)?;
    let mut g_values = Vec::with_capacity(count);
    for &t in &t_grid {
        g_values.push(t.powf(sv) * specfun::bessel_k(sv, t)? / norm);
    }

    if g_values.iter().any(|&g| !(-1e-12..=1.0 + 1e-12).contains(&g)) {
        return Err(Error::Solver("profile left the range [0, 1]".into()));
    }
    if g_values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::Solver("profile is not nonincreasing".into()));
    }
    if (g_values[0] - 1.0).abs() > 1e-3 {
        return Err(Error::Solver(format!("g(0+) = {} is not 1", g_values[0])));
    }
    if g_values[count - 1] > 1e-12 {
        return Err(Error::Solver("g does not decay at the far end".into()));
    }

    let c_sharp = extract_c_sharp(&t_grid, &g_values, sv)?;
    if !(c_sharp > 0.0) {
        return Err(Error::Solver(format!("Neumann constant must be positive, got {c_sharp}")));
    }

    let profile = ExtensionProfile { s, a, t_grid, g_values, c_sharp };
    let res = ode_residual_max(&profile, 0.5, t_max * 0.98);
    if res > tol.max(1e-6) {
        return Err(Error::Solver(format!(
            "ODE residual {res:.2e} exceeds {:.1e}; the profile is invalid",
            tol.max(1e-6)
        )));
    }
    Ok(profile)
}

/// -lim_{t→0} t^a g'(t) recovered from the stored samples by nonuniform
/// finite differences at the three smallest interior nodes followed by
/// two-stage Richardson extrapolation in the leading small-t powers.
pub fn c_sharp(profile: &ExtensionProfile) -> Result<f64> {
    extract_c_sharp(&profile.t_grid, &profile.g_values, profile.s.value())
}

fn extract_c_sharp(t: &[f64], g: &[f64], sv: f64) -> Result<f64> {
    let a = 1.0 - 2.0 * sv;
    // φ(t) = t^a g'(t) = -C♯ + O(t^{p1}) + O(t^{p2}),
    // p1 = min(2s, 2-2s), p2 = max(2s, 2-2s).
    // The extrapolation nodes sit a factor 4 apart and the stencil spans
    // ±10 grid steps; tightly spaced nodes would amplify the finite-
    // difference roundoff by the reciprocal node separation, twice.
    let k = 10usize;
    let ln_ratio = (t[1] / t[0]).ln();
    let stride = ((4.0_f64.ln() / ln_ratio).round() as usize).max(1);
    // extrapolation base near t = 1e-5: small enough for the expansion,
    // big enough that the finite differences stay above roundoff
    let base = ((1e-5 / t[0]).ln() / ln_ratio).round().max(k as f64) as usize;
    if t.len() < base + 2 * stride + k + 1 {
        return Err(Error::Invalid("profile grid too short for extrapolation".into()));
    }
    let phi = |i: usize| -> f64 {
        let (hm, hp) = (t[i] - t[i - k], t[i + k] - t[i]);
        let dg = (hm * hm * g[i + k] + (hp * hp - hm * hm) * g[i] - hp * hp * g[i - k])
            / (hm * hp * (hm + hp));
        t[i].powf(a) * dg
    };
    let p1 = (2.0 * sv).min(2.0 - 2.0 * sv);
    let mut p2 = (2.0 * sv).max(2.0 - 2.0 * sv);
    if (p2 - p1).abs() < 1e-9 {
        p2 = p1 + 1.0; // s = 1/2: both corrections coincide at t^1, next is t^2
    }
    let (i1, i2, i3) = (base, base + stride, base + 2 * stride);
    let (t1, t2, t3) = (t[i1], t[i2], t[i3]);
    let (f1, f2, f3) = (phi(i1), phi(i2), phi(i3));
    let r12 = (f1 * t2.powf(p1) - f2 * t1.powf(p1)) / (t2.powf(p1) - t1.powf(p1));
    let r23 = (f2 * t3.powf(p1) - f3 * t2.powf(p1)) / (t3.powf(p1) - t2.powf(p1));
    let e12 = t2.powf(p2);
    let e23 = t3.powf(p2);
    let limit = (r12 * e23 - r23 * e12) / (e23 - e12);
    if !limit.is_finite() {
        return Err(Error::Solver("extrapolation of the Neumann constant is unstable".into()));
    }
    Ok(-limit)
}

/// Max |g'' + a t⁻¹ g' - g| over grid nodes with t in [lo, hi], by
/// nonuniform 3-point stencils — an independent check of the profile.
pub fn ode_residual_max(profile: &ExtensionProfile, lo: f64, hi: f64) -> f64 {
    let t = &profile.t_grid;
    let g = &profile.g_values;
    let a = profile.a;
    let mut worst = 0.0_f64;
    for i in 1..t.len() - 1 {
        if t[i] < lo || t[i] > hi {
            continue;
        }
        let (hm, hp) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let d1 = (hm * hm * g[i + 1] + (hp * hp - hm * hm) * g[i] - hp * hp * g[i - 1])
            / (hm * hp * (hm + hp));
        let d2 =
            2.0 * (hm * g[i + 1] - (hm + hp) * g[i] + hp * g[i - 1]) / (hm * hp * (hm + hp));
        worst = worst.max((d2 + a * d1 / t[i] - g[i]).abs());
    }
    worst
}

impl ExtensionProfile {
    /// g evaluated by interpolation on the stored grid, with the small-t
    /// expansion below the first node and 0 beyond the decayed far end.
    pub fn g_at(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain("profile argument must be nonnegative".into()));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let grid = &self.t_grid;
        let last = *grid.last().unwrap();
        if t >= last {
            if self.g_values[grid.len() - 1] > 1e-12 {
                return Err(Error::Domain(format!(
                    "profile does not cover t = {t} (grid ends at {last})"
                )));
            }
            return Ok(0.0);
        }
        if t <= grid[0] {
            // g(t) = g(t0) + C♯ (t0^{2s} - t^{2s}) / 2s to leading order
            let two_s = 2.0 * self.s.value();
            return Ok(self.g_values[0]
                + self.c_sharp * (grid[0].powf(two_s) - t.powf(two_s)) / two_s);
        }
        // log-uniform grid: direct index computation
        let ratio = grid[1] / grid[0];
        let idx = (((t / grid[0]).ln() / ratio.ln()).floor() as usize).min(grid.len() - 2);
        let (t0, t1) = (grid[idx], grid[idx + 1]);
        let frac = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok(self.g_values[idx] * (1.0 - frac) + self.g_values[idx + 1] * frac)
    }

    /// ∫ t^a (g² + g'²) dt over the profile grid (trapezoid) plus the
    /// analytic small-t head; equals C♯ for the true minimizer.
    pub fn weighted_energy(&self) -> f64 {
        let t = &self.t_grid;
        let g = &self.g_values;
        let a = self.a;
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..t.len() - 1 {
            let (hm, hp) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let d1 = (hm * hm * g[i + 1] + (hp * hp - hm * hm) * g[i] - hp * hp * g[i - 1])
                / (hm * hp * (hm + hp));
            let val = t[i].powf(a) * (g[i] * g[i] + d1 * d1);
            if let Some((tp, vp)) = prev {
                acc += 0.5 * (val + vp) * (t[i] - tp);
            }
            prev = Some((t[i], val));
        }
        // analytic head on [0, t1]: g ≈ 1, g' ≈ -C♯ t^{-a}
        let t1 = t[1];
        acc += t1.powf(1.0 + a) / (1.0 + a)
            + self.c_sharp * self.c_sharp * t1.powf(1.0 - a) / (1.0 - a);
        acc
    }
}

/// Extension of a periodic 1D field to height y:
/// inverse transform of û(ξ) g(2π|ξ| y).
pub fn extend(u: &SampledField, profile: &ExtensionProfile, y: f64) -> Result<SampledField> {
    if u.grid.dim() != 1 {
        return Err(Error::Invalid("the extension operator is built for 1D traces".into()));
    }
    if !(y >= 0.0) {
        return Err(Error::Domain("height must be nonnegative".into()));
    }
    let mut spec = u.to_spectral();
    for idx in 0..spec.coef.len() {
        let xi = spec.grid.frequency(idx)[0].abs();
        let factor = profile.g_at(2.0 * PI * xi * y)?;
        spec.coef[idx] *= factor;
    }
    Ok(spec.to_physical())
}

/// -y^a ∂_y U at a small probe height by centered differencing of the
/// extension in y, evaluated at y_probe and y_probe/2 and Richardson-
/// extrapolated in the leading small-y power min(2s, 2-2s).
///
/// The difference step must stay narrow relative to y: U carries a
/// singular y^{2s} component, and wide stencils distort it by a constant
/// factor that no extrapolation can remove.
///
/// Approaches C♯ (-Δ)^s u as the probe height shrinks.
pub fn neumann_trace(
    u: &SampledField,
    profile: &ExtensionProfile,
    y_probe: f64,
) -> Result<SampledField> {
    if !(y_probe > 0.0) {
        return Err(Error::Domain("probe height must be positive".into()));
    }
    let a = profile.a;
    let rho = 1.05_f64;
    let estimate = |z: f64| -> Result<Vec<f64>> {
        let lo = extend(u, profile, z / rho)?;
        let hi = extend(u, profile, z * rho)?;
        let span = z * (rho - 1.0 / rho);
        let mut out = Vec::with_capacity(u.values.len());
        for i in 0..u.values.len() {
            let dy = (hi.values[i] - lo.values[i]) / span;
            out.push(-z.powf(a) * dy);
        }
        Ok(out)
    };
    let t_full = estimate(y_probe)?;
    let t_half = estimate(0.5 * y_probe)?;
    let sv = profile.s.value();
    let p = (2.0 * sv).min(2.0 - 2.0 * sv);
    let w = 2.0_f64.powf(p);
    let values: Vec<f64> = t_half
        .iter()
        .zip(&t_full)
        .map(|(h, f)| (w * h - f) / (w - 1.0))
        .collect();
    SampledField::new(u.grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PeriodicGrid;
    use crate::fraclap;
    use approx::assert_relative_eq;

    fn fo(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }

    #[test]
    fn half_order_profile_is_exponential() {
        // a = 0 reduces the ODE to g'' = g, so g = e^{-t}
        let p = profile_g(fo(0.5), 50.0, 1e-6).unwrap();
        for (t, g) in p.t_grid.iter().zip(&p.g_values) {
            assert!((g - (-t).exp()).abs() < 1e-8, "t={t}: {g}");
        }
        assert!((p.c_sharp - 1.0).abs() < 1e-8, "C♯ = {}", p.c_sharp);
    }

    #[test]
    fn profile_range_monotonicity_and_lipschitz() {
        for &sv in &[0.25, 0.5, 0.75] {
            let p = profile_g(fo(sv), 60.0, 1e-6).unwrap();
            assert!(p.g_values.iter().all(|&g| (-1e-12..=1.0 + 1e-12).contains(&g)));
            assert!(p.g_values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(p.c_sharp > 0.0);
            // |g(T) - g(t)| ≤ C♯ |T^{2s} - t^{2s}| / 2s on sampled pairs
            let two_s = 2.0 * sv;
            for step in [1usize, 7, 50, 400] {
                for i in (0..p.t_grid.len() - step).step_by(97) {
                    let (t0, t1) = (p.t_grid[i], p.t_grid[i + step]);
                    let bound = p.c_sharp * (t1.powf(two_s) - t0.powf(two_s)).abs() / two_s;
                    let diff = (p.g_values[i + step] - p.g_values[i]).abs();
                    assert!(
                        diff <= bound * (1.0 + 1e-6) + 1e-12,
                        "s={sv}: |Δg| = {diff} > bound {bound} on [{t0}, {t1}]"
                    );
                }
            }
        }
    }

    #[test]
    fn neumann_constant_closed_form() {
        // C♯ = 2^{1-2s} Γ(1-s)/Γ(s), identified from the small-t expansion
        let sv = 0.25;
        let p = profile_g(fo(sv), 50.0, 1e-6).unwrap();
        let want = 2.0_f64.powf(1.0 - 2.0 * sv) * specfun::gamma(1.0 - sv).unwrap()
            / specfun::gamma(sv).unwrap();
        assert!((p.c_sharp - want).abs() < 1e-4, "{} vs {want}", p.c_sharp);
        let again = c_sharp(&p).unwrap();
        assert_relative_eq!(again, p.c_sharp, max_relative = 1e-12);
    }

    #[test]
    fn ode_residual_is_small() {
        for &sv in &[0.25, 0.6, 0.75] {
            let p = profile_g(fo(sv), 55.0, 1e-6).unwrap();
            let res = ode_residual_max(&p, 0.5, 50.0);
            assert!(res < 1e-6, "s={sv}: residual {res}");
        }
    }

    #[test]
    fn weighted_energy_equals_neumann_constant() {
        for &sv in &[0.25, 0.5, 0.75] {
            let p = profile_g(fo(sv), 60.0, 1e-6).unwrap();
            let e = p.weighted_energy();
            assert!(
                (e / p.c_sharp - 1.0).abs() < 1e-3,
                "s={sv}: energy {e} vs C♯ {}",
                p.c_sharp
            );
        }
    }

    #[test]
    fn extend_identity_at_zero_height() {
        let grid = PeriodicGrid::new_1d(128, 2.0).unwrap();
        let u = SampledField::from_fn_1d(grid, |x| (PI * x).sin() + 0.3).unwrap();
        let p = profile_g(fo(0.3), 50.0, 1e-6).unwrap();
        let v = extend(&u, &p, 0.0).unwrap();
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extend_single_mode_scales_by_profile() {
        let grid = PeriodicGrid::new_1d(128, 1.0).unwrap();
        let u = SampledField::from_fn_1d(grid, |x| (2.0 * PI * x).sin()).unwrap();
        let p = profile_g(fo(0.5), 50.0, 1e-6).unwrap();
        let y = 0.4;
        let v = extend(&u, &p, y).unwrap();
        let factor = p.g_at(2.0 * PI * y).unwrap();
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((factor * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn extend_matches_poisson_convolution_at_half() {
        // s = 1/2: the extension is convolution with the height-y kernel
        let grid = PeriodicGrid::new_1d(4096, 200.0).unwrap();
        let u = SampledField::from_fn_1d(grid.clone(), |x| (-PI * x * x).exp()).unwrap();
        let p = profile_g(fo(0.5), 60.0, 1e-6).unwrap();
        let y = 0.5;
        let v = extend(&u, &p, y).unwrap();
        let l = 200.0;
        let h = grid.spacing(0);
        let kernel = |d: f64| y / (PI * (y * y + d * d));
        for probe in (0..4096).step_by(256) {
            let x = grid.coord(probe)[0];
            let mut conv = 0.0;
            for j in 0..4096 {
                let xj = grid.coord(j)[0];
                let mut ksum = 0.0;
                for img in -10i64..=10 {
                    ksum += kernel(x - xj + img as f64 * l);
                }
                conv += u.values[j] * ksum * h;
            }
            assert!(
                (v.values[probe] - conv).abs() < 1e-6,
                "x={x}: {} vs {conv}",
                v.values[probe]
            );
        }
    }

    #[test]
    fn trace_of_constant_vanishes() {
        let grid = PeriodicGrid::new_1d(64, 1.0).unwrap();
        let u = SampledField::from_fn_1d(grid, |_| 2.0).unwrap();
        let p = profile_g(fo(0.4), 50.0, 1e-6).unwrap();
        let tr = neumann_trace(&u, &p, 1e-3).unwrap();
        assert!(tr.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn trace_single_mode_ratio() {
        // output/input → C♯ (2π)^{2s} for the first mode
        for &sv in &[0.25, 0.5, 0.75] {
            let grid = PeriodicGrid::new_1d(128, 1.0).unwrap();
            let u = SampledField::from_fn_1d(grid, |x| (2.0 * PI * x).sin()).unwrap();
            let p = profile_g(fo(sv), 60.0, 1e-6).unwrap();
            let tr = neumann_trace(&u, &p, 1e-3).unwrap();
            let want = p.c_sharp * (2.0 * PI).powf(2.0 * sv);
            let got = tr.values[32] / u.values[32]; // x = 1/4 puts sin at 1
            assert!((got / want - 1.0).abs() < 1e-2, "s={sv}: ratio {got} vs {want}");
        }
    }

    #[test]
    fn trace_matches_spectral_operator_on_bump() {
        let sv = 0.5;
        let grid = PeriodicGrid::new_1d(1024, 40.0).unwrap();
        let u = SampledField::from_fn_1d(grid, |x| (-PI * x * x).exp()).unwrap();
        let p = profile_g(fo(sv), 60.0, 1e-6).unwrap();
        let tr = neumann_trace(&u, &p, 1e-3).unwrap();
        let want = fraclap::fraclap_spectral(&u, sv).unwrap();
        let sup_ref = want.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in tr.values.iter().zip(&want.values) {
            assert!(
                (a - p.c_sharp * b).abs() < 1e-2 * sup_ref,
                "{a} vs {}",
                p.c_sharp * b
            );
        }
    }
}
