//! The nonlocal phase-transition energy with its projected-descent
//! minimizer, and ground states of the focusing fractional equation
//! (-Δ)^s w + w = w^p by spectral renormalization.

use crate::error::{Error, Result};
use crate::evolution::DoubleWell;
use crate::field::{PeriodicGrid, SampledField};
use crate::geometry;
use crate::specfun::FracOrder;
use num_complex::Complex64;

/// Window, grid, exterior data and potential of the phase-transition
/// minimization on B_R = (-R, R).
pub struct ACProblem<'a> {
    pub half_width: f64,
    pub cells: usize,
    pub s: FracOrder,
    pub well: &'a DoubleWell,
    /// Frozen values outside the window, in [-1, 1].
    pub exterior: &'a (dyn Fn(f64) -> f64 + Sync),
}

impl ACProblem<'_> {
    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.cells < 8 {
            return Err(Error::Invalid("window must be positive with at least 8 cells".into()));
        }
        if self.s.value() >= 0.5 {
            return Err(Error::Domain(
                "the cell-sum energy requires s < 1/2 (piecewise-constant competitors)".into(),
            ));
        }
        Ok(())
    }

    fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.cells).map(|i| -self.half_width + (i as f64 + 0.5) * h).collect()
    }

    // exterior sampled at cell centers, reaching M cells beyond each edge
    fn exterior_cells(&self) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let h = self.spacing();
        let m = 2 * self.cells;
        let right: Vec<f64> = (0..m)
            .map(|k| (self.exterior)(self.half_width + (k as f64 + 0.5) * h))
            .collect();
        let left: Vec<f64> = (0..m)
            .map(|k| (self.exterior)(-self.half_width - (k as f64 + 0.5) * h))
            .collect();
        let c_right = (self.exterior)(self.half_width + 4.0 * (m as f64) * h);
        let c_left = (self.exterior)(-self.half_width - 4.0 * (m as f64) * h);
        (left, right, c_left, c_right)
    }

    // exact cell-pair kernel table K(d) for distances d = 1 .. 3N
    fn kernel_table(&self) -> Vec<f64> {
        let h = self.spacing();
        let p = 1.0 + 2.0 * self.s.value();
        let mut k = vec![0.0; 3 * self.cells + 1];
        for (d, slot) in k.iter_mut().enumerate().skip(1) {
            let c = d as f64 * h;
            *slot = geometry::interval_pair_integral(0.0, h, c, c + h, p);
        }
        k
    }
}

/// Total energy ∫ W(u) + [half the window-window quadratic sum plus the
/// window-exterior sum], with exact cell-pair kernels, analytic constant
/// far tails, and a slope-limited correction for the in-cell variation
/// (zero on piecewise-constant data).
pub fn ac_energy(u: &[f64], prob: &ACProblem) -> Result<f64> {
    prob.validate()?;
    let n = prob.cells;
    if u.len() != n {
        return Err(Error::Invalid("value count does not match the grid".into()));
    }
    let h = prob.spacing();
    let quad = quadratic_energy(u, prob);
    let potential: f64 = u.iter().map(|&v| prob.well.w(v)).sum::<f64>() * h;
    // in-cell variation: slope-limited local correction, exact zero at jumps
    let (left, right, _, _) = prob.exterior_cells();
    let two_s = 2.0 * prob.s.value();
    let coef = h.powf(3.0 - two_s) / ((2.0 - two_s) * (3.0 - two_s));
    let minmod = |a: f64, b: f64| -> f64 {
        if a * b <= 0.0 {
            0.0
        } else if a.abs() < b.abs() {
            a
        } else {
            b
        }
    };
    let mut diag = 0.0;
    for i in 0..n {
        let prev = if i == 0 { left[0] } else { u[i - 1] };
        let next = if i == n - 1 { right[0] } else { u[i + 1] };
        let g = minmod((u[i] - prev) / h, (next - u[i]) / h);
        diag += g * g * coef;
    }
    Ok(potential + quad + diag)
}

// the quadratic (piecewise-constant) part of the kinetic energy; the
// minimizer descends on exactly this plus the potential
fn quadratic_energy(u: &[f64], prob: &ACProblem) -> f64 {
    let n = prob.cells;
    let h = prob.spacing();
    let kernel = prob.kernel_table();
    let (left, right, c_left, c_right) = prob.exterior_cells();
    let m = left.len();
    let two_s = 2.0 * prob.s.value();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = u[i] - u[j];
            acc += d * d * kernel[j - i];
        }
        for (k, &val) in right.iter().enumerate() {
            let d = u[i] - val;
            acc += d * d * kernel[n - i + k];
        }
        for (k, &val) in left.iter().enumerate() {
            let d = u[i] - val;
            acc += d * d * kernel[i + 1 + k];
        }
        // analytic constant tails beyond the sampled exterior
        let t_right = (n - i + m) as f64 * h - 0.5 * h;
        let t_left = (i + m) as f64 * h + 0.5 * h;
        let dr = u[i] - c_right;
        let dl = u[i] - c_left;
        // per-cell tail: h ∫_T^∞ r^{-1-2s} dr
        acc += dr * dr * h * t_right.powf(-two_s) / two_s;
        acc += dl * dl * h * t_left.powf(-two_s) / two_s;
    }
    acc
}

/// Minimization record: the minimizer plus the per-iteration energies.
pub struct AcMinimizeOutput {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Objective value per accepted iteration; never increases.
    pub energy_ledger: Vec<f64>,
}

/// Projected gradient descent on the interior cell values (clamped to
/// [-1, 1]) with a 1/L step, until the projected-gradient sup norm drops
/// below tol.
pub fn ac_minimize(prob: &ACProblem, tol: f64, max_iters: usize) -> Result<AcMinimizeOutput> {
    prob.validate()?;
    let n = prob.cells;
    let h = prob.spacing();
    let kernel = prob.kernel_table();
    let (left, right, c_left, c_right) = prob.exterior_cells();
    let m = left.len();
    let two_s = 2.0 * prob.s.value();

    // row weight sums fix the gradient Lipschitz scale
    let mut row_weight = vec![0.0; n];
    for (i, slot) in row_weight.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            if j != i {
                acc += kernel[i.abs_diff(j)];
            }
        }
        for k in 0..m {
            acc += kernel[n - i + k] + kernel[i + 1 + k];
        }
        let t_right = (n - i + m) as f64 * h - 0.5 * h;
        let t_left = (i + m) as f64 * h + 0.5 * h;
        acc += h * (t_right.powf(-two_s) + t_left.powf(-two_s)) / two_s;
        *slot = acc;
    }
    let w2max = (0..200)
        .map(|k| -1.0 + k as f64 / 100.0)
        .map(|v| {
            // numerical curvature bound of the potential on [-1, 1]
            let d = 1e-4;
            ((prob.well.dw(v + d) - prob.well.dw(v - d)) / (2.0 * d)).abs()
        })
        .fold(0.0, f64::max);
    // Gershgorin row sum of the quadratic Hessian: diagonal 2·rw plus
    // off-diagonal mass ≤ 2·rw again
    let lipschitz = 4.0 * row_weight.iter().cloned().fold(0.0, f64::max) + h * w2max;
    let step = 1.0 / lipschitz;

    // start from the exterior's sign structure
    let xs = prob.xs();
    let mut u: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let probe = (prob.exterior)(if x < 0.0 { -prob.half_width - h } else { prob.half_width + h });
            probe.clamp(-1.0, 1.0)
        })
        .collect();

    let objective = |u: &[f64]| -> f64 {
        quadratic_energy(u, prob) + u.iter().map(|&v| prob.well.w(v)).sum::<f64>() * h
    };
    let mut ledger = vec![objective(&u)];
    let mut grad = vec![0.0; n];
    let mut converged = false;
    for _ in 0..max_iters {
        for i in 0..n {
            let mut g = h * prob.well.dw(u[i]);
            for j in 0..n {
                if j != i {
                    g += 2.0 * kernel[i.abs_diff(j)] * (u[i] - u[j]);
                }
            }
            for k in 0..m {
                g += 2.0 * kernel[n - i + k] * (u[i] - right[k]);
                g += 2.0 * kernel[i + 1 + k] * (u[i] - left[k]);
            }
            let t_right = (n - i + m) as f64 * h - 0.5 * h;
            let t_left = (i + m) as f64 * h + 0.5 * h;
            g += 2.0 * (u[i] - c_right) * h * t_right.powf(-two_s) / two_s;
            g += 2.0 * (u[i] - c_left) * h * t_left.powf(-two_s) / two_s;
            grad[i] = g;
        }
        let mut moved = 0.0_f64;
        for i in 0..n {
            let next = (u[i] - step * grad[i]).clamp(-1.0, 1.0);
            moved = moved.max((next - u[i]).abs());
            u[i] = next;
        }
        ledger.push(objective(&u));
        if moved / step < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::MaxIter(format!(
            "projected descent did not reach tol {tol:.1e} in {max_iters} iterations"
        )));
    }
    Ok(AcMinimizeOutput { xs, values: u, energy_ledger: ledger })
}

/// The focusing ground-state problem (-Δ)^s w + w = w^p on a wide
/// periodic window, n = 1.
pub struct GroundStateProblem {
    pub s: FracOrder,
    pub p: f64,
    pub grid: PeriodicGrid,
}

impl GroundStateProblem {
    pub fn new(s: FracOrder, p: f64, grid: PeriodicGrid) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Invalid("ground states are computed on 1D windows".into()));
        }
        let sv = s.value();
        // subcriticality: p < 2*_s - 1 with 2*_s = 2/(1-2s) in one dimension
        // (no restriction once 2s >= n = 1)
        if !(p > 1.0) {
            return Err(Error::Domain("nonlinearity must satisfy p > 1".into()));
        }
        if 2.0 * sv < 1.0 {
            let critical = (1.0 + 2.0 * sv) / (1.0 - 2.0 * sv);
            if p >= critical {
                return Err(Error::Domain(format!(
                    "p = {p} is supercritical (limit {critical} for s = {sv})"
                )));
            }
        }
        Ok(GroundStateProblem { s, p, grid })
    }
}

/// One spectral-renormalization update: ŵ ← M^{p/(p-1)} F(w^p) / L̂ with
/// the stabilizing ratio M = <L w, w>/<w^p, w>. Exposed so the fixed-point
/// property of a converged ground state can be checked directly.
pub fn renormalization_step(w: &SampledField, s: f64, p: f64) -> Result<SampledField> {
    let grid = &w.grid;
    let n = grid.len();
    let symbol: Vec<f64> = (0..n)
        .map(|idx| {
            let xi = grid.frequency(idx)[0].abs();
            (2.0 * std::f64::consts::PI * xi).powf(2.0 * s) + 1.0
        })
        .collect();
    let vol = grid.period(0);
    let spec_w = w.to_spectral();
    let nonlin =
        SampledField::new(grid.clone(), w.values.iter().map(|&v| signed_pow(v, p)).collect())?;
    let spec_n = nonlin.to_spectral();
    let num: f64 =
        spec_w.coef.iter().zip(&symbol).map(|(c, l)| l * c.norm_sqr()).sum::<f64>() / vol;
    let den: f64 = spec_w
        .coef
        .iter()
        .zip(&spec_n.coef)
        .map(|(a, b)| (a.conj() * b).re)
        .sum::<f64>()
        / vol;
    if !(den.abs() > 1e-300) || !num.is_finite() {
        return Err(Error::Solver("renormalization ratio degenerated".into()));
    }
    let m = num / den;
    if !(1e-8..1e8).contains(&m.abs()) {
        return Err(Error::Solver(format!("iteration diverged (ratio {m:.3e})")));
    }
    let factor = m.powf(p / (p - 1.0));
    let mut next = spec_n.clone();
    for (c, l) in next.coef.iter_mut().zip(&symbol) {
        *c *= Complex64::new(factor / l, 0.0);
    }
    Ok(next.to_physical())
}

/// Spectral-renormalization fixed point with stabilizing exponent
/// p/(p-1); returns the even positive profile once the sup-norm residual
/// of the equation drops below tol.
pub fn ground_state(prob: &GroundStateProblem, tol: f64) -> Result<SampledField> {
    let grid = &prob.grid;
    let sv = prob.s.value();
    let p = prob.p;
    let mut w = SampledField::from_fn_1d(grid.clone(), |x| 1.5 * (-x * x / 4.0).exp())?;
    let mut last_change = f64::INFINITY;
    for iter in 0..600 {
        let next_field = renormalization_step(&w, sv, p)?;
        let change = next_field
            .values
            .iter()
            .zip(&w.values)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        w = next_field;
        last_change = change;
        if change < 0.1 * tol && iter > 3 {
            break;
        }
    }
    // residual of the equation, evaluated spectrally
    let residual = ground_state_residual(&w, sv, p);
    if residual > tol {
        return Err(Error::NoConvergence(format!(
            "fixed point stalled: residual {residual:.3e} > tol {tol:.1e} (last step {last_change:.3e})"
        )));
    }
    let sup = w.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(sup > 1e-10) {
        return Err(Error::Solver("iterate collapsed to zero".into()));
    }
    Ok(w)
}

fn signed_pow(v: f64, p: f64) -> f64 {
    v.signum() * v.abs().powf(p)
}

/// ‖(-Δ)^s w + w - w^p‖_∞ computed spectrally.
pub fn ground_state_residual(w: &SampledField, s: f64, p: f64) -> f64 {
    let spec = w.to_spectral();
    let mut lw = spec.clone();
    for idx in 0..lw.coef.len() {
        let xi = w.grid.frequency(idx)[0].abs();
        lw.coef[idx] *= (2.0 * std::f64::consts::PI * xi).powf(2.0 * s) + 1.0;
    }
    let lw_phys = lw.to_physical();
    lw_phys
        .values
        .iter()
        .zip(&w.values)
        .fold(0.0_f64, |acc, (l, v)| acc.max((l - signed_pow(*v, p)).abs()))
}

/// Least-squares slope of log w against log x over grid points with
/// coordinates in [x0, x1]. Errors if w is not positive there.
pub fn decay_fit(w: &SampledField, x_range: (f64, f64)) -> Result<f64> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (i, &v) in w.values.iter().enumerate() {
        let x = w.grid.coord(i)[0];
        if x >= x_range.0 && x <= x_range.1 {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("nonpositive value {v} at x = {x}")));
            }
            lx.push(x.ln());
            ly.push(v.ln());
        }
    }
    if lx.len() < 4 {
        return Err(Error::Invalid("too few points in the fit range".into()));
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    Ok(num / den)
}
