//! The long-jump random walk and the exit-payoff Monte Carlo.
//!
//! A particle picks a uniform direction on the unit sphere and a jump
//! length k with P(k) ∝ k^{-(1+2s)} at every time step τ = h^{2s}, moving
//! by k·h in that direction. Walkers carry counter-based RNG streams keyed
//! by (seed, walker index), so runs are reproducible independently of the
//! parallel schedule.

use crate::error::{Error, Result};
use crate::specfun::{self, Dimension, FracOrder};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Walk configuration. The time step τ = h^{2s} is always derived,
/// never stored.
#[derive(Clone, Debug)]
pub struct WalkParams {
    pub s: FracOrder,
    pub n: Dimension,
    pub h: f64,
    pub seed: u64,
}

impl WalkParams {
    pub fn time_step(&self) -> f64 {
        self.h.powf(2.0 * self.s.value())
    }
}

/// Effective diffusion scale of the walk: its density at walk time T
/// approaches the multiplier heat flow at time scale·T, with
/// scale = c_s / (|∂B₁| C(n,s)).
pub fn heat_time_scale(n: Dimension, s: FracOrder) -> f64 {
    specfun::walk_normalizer(s)
        / (specfun::sphere_measure(n.value()) * specfun::cns_closed(n, s))
}

/// Sampler for the jump law P(k) = c_s k^{-(1+2s)} on the positive
/// integers: exact inverse-CDF table for k ≤ 10⁴ and a rejection-corrected
/// Pareto proposal for the unbounded tail.
pub struct JumpSampler {
    s: f64,
    cdf: Vec<f64>,
    head_mass: f64,
    tail_start: f64, // K + 1/2
}

const HEAD_K: usize = 10_000;

impl JumpSampler {
    pub fn new(s: FracOrder) -> Self {
        let sv = s.value();
        let c_s = specfun::walk_normalizer(s);
        let p = 1.0 + 2.0 * sv;
        let mut cdf = Vec::with_capacity(HEAD_K);
        let mut acc = 0.0;
        for k in 1..=HEAD_K {
            acc += c_s * (k as f64).powf(-p);
            cdf.push(acc);
        }
        JumpSampler { s: sv, cdf, head_mass: acc, tail_start: HEAD_K as f64 + 0.5 }
    }

    /// Total probability mass head + tail; equals 1 up to summation error.
    pub fn total_mass(&self) -> f64 {
        // tail by Euler-Maclaurin on k^{-(1+2s)} from K+1
        let p = 1.0 + 2.0 * self.s;
        let k = (HEAD_K + 1) as f64;
        let tail = k.powf(1.0 - p) / (p - 1.0) + 0.5 * k.powf(-p) + p * k.powf(-p - 1.0) / 12.0;
        let c_s = 1.0 / specfun::zeta(p);
        self.head_mass + c_s * tail
    }

    /// Draws a jump length k ≥ 1.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        if u < self.head_mass {
            let idx = self.cdf.partition_point(|&c| c < u);
            return (idx + 1) as u64;
        }
        // tail: continuous Pareto proposal X = T v^{-1/2s} rounded to the
        // nearest integer, accepted with probability
        // k^{-(1+2s)} 2s / ((k-1/2)^{-2s} - (k+1/2)^{-2s}), which midpoint
        // convexity keeps <= 1.
        let alpha = 2.0 * self.s;
        loop {
            let v: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let x = self.tail_start * v.powf(-1.0 / alpha);
            let k = x.round();
            if !k.is_finite() {
                continue;
            }
            let cell = (k - 0.5).powf(-alpha) - (k + 0.5).powf(-alpha);
            let accept = k.powf(-1.0 - alpha) * alpha / cell;
            if rng.gen::<f64>() < accept {
                return k as u64;
            }
        }
    }
}

fn walker_rng(seed: u64, walker: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&walker.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

fn unit_direction<R: Rng>(rng: &mut R, n: usize) -> [f64; 2] {
    match n {
        1 => {
            if rng.gen_bool(0.5) {
                [1.0, 0.0]
            } else {
                [-1.0, 0.0]
            }
        }
        _ => {
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            [th.cos(), th.sin()]
        }
    }
}

/// Final positions of `walkers` independent walks started at the origin
/// and run for round(T/τ) steps.
pub fn simulate_positions(p: &WalkParams, walkers: usize, t: f64) -> Result<Vec<[f64; 2]>> {
    let tau = p.time_step();
    let steps = (t / tau).round() as u64;
    if (t / tau - steps as f64).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "T = {t} is not a multiple of the time step τ = {tau}"
        )));
    }
    let sampler = JumpSampler::new(p.s);
    let nd = p.n.value();
    Ok((0..walkers as u64)
        .into_par_iter()
        .map(|w| {
            let mut rng = walker_rng(p.seed, w);
            let mut pos = [0.0_f64; 2];
            for _ in 0..steps {
                let v = unit_direction(&mut rng, nd);
                let k = sampler.sample(&mut rng) as f64;
                pos[0] += k * p.h * v[0];
                pos[1] += k * p.h * v[1];
            }
            pos
        })
        .collect())
}

/// Probability histogram on a uniform 1D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub mass: Vec<f64>,
    pub bin_width: f64,
}

impl Histogram {
    /// Σ mass · bin width; exactly 1 for walk densities.
    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() * self.bin_width
    }
}

/// Empirical density of walker positions at time T, binned on a uniform
/// grid over [-half_width, half_width]; positions beyond the window are
/// clamped into the end bins so the histogram carries mass exactly 1.
pub fn simulate_density(
    p: &WalkParams,
    walkers: usize,
    t: f64,
    bins: usize,
    half_width: f64,
) -> Result<Histogram> {
    if p.n.value() != 1 {
        return Err(Error::Invalid("density histograms are one-dimensional".into()));
    }
    if walkers < 1 || bins < 2 {
        return Err(Error::Invalid("need walkers >= 1 and bins >= 2".into()));
    }
    let positions = simulate_positions(p, walkers, t)?;
    let bin_width = 2.0 * half_width / bins as f64;
    let mut counts = vec![0u64; bins];
    for pos in &positions {
        let idx = ((pos[0] + half_width) / bin_width).floor();
        let idx = (idx.max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let scale = 1.0 / (walkers as f64 * bin_width);
    Ok(Histogram {
        centers: (0..bins)
            .map(|i| -half_width + (i as f64 + 0.5) * bin_width)
            .collect(),
        mass: counts.iter().map(|&c| c as f64 * scale).collect(),
        bin_width,
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Walkers aborted by the nontermination guard (10⁷ steps).
    pub failures: usize,
}

const MAX_WALK_STEPS: u64 = 10_000_000;

/// Expected exterior payoff: each walker runs the jump process from x0
/// until it leaves the open interval Ω, then collects u0 at the exit
/// point. Walkers absorb strictly outside the open domain.
pub fn payoff_mc(
    omega: (f64, f64),
    u0: &(dyn Fn(f64) -> f64 + Sync),
    x0: f64,
    p: &WalkParams,
    walkers: usize,
) -> Result<McEstimate> {
    let (a, b) = omega;
    if !(b > a) {
        return Err(Error::Invalid("domain must satisfy b > a".into()));
    }
    if p.n.value() != 1 {
        return Err(Error::Invalid("the payoff walk is one-dimensional".into()));
    }
    if !(x0 > a && x0 < b) {
        return Ok(McEstimate { mean: u0(x0), stderr: 0.0, failures: 0 });
    }
    let sampler = JumpSampler::new(p.s);
    let outcomes: Vec<Option<f64>> = (0..walkers as u64)
        .into_par_iter()
        .map(|w| {
            let mut rng = walker_rng(p.seed, w);
            let mut x = x0;
            for _ in 0..MAX_WALK_STEPS {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let k = sampler.sample(&mut rng) as f64;
                x += sign * k * p.h;
                if x <= a || x >= b {
                    return Some(u0(x));
                }
            }
            None
        })
        .collect();
    let mut failures = 0usize;
    let mut sum = 0.0;
    let mut count = 0usize;
    for o in &outcomes {
        match o {
            Some(v) => {
                sum += v;
                count += 1;
            }
            None => failures += 1,
        }
    }
    if count == 0 {
        return Err(Error::Solver("every walker hit the step guard".into()));
    }
    let mean = sum / count as f64;
    let var = outcomes
        .iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (count.max(2) - 1) as f64;
    Ok(McEstimate { mean, stderr: (var / count as f64).sqrt(), failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn fo(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }
    fn d1() -> Dimension {
        Dimension::new(1).unwrap()
    }

    #[test]
    fn sampler_mass_sums_to_one() {
        for &sv in &[0.1, 0.5, 0.9] {
            let sampler = JumpSampler::new(fo(sv));
            assert!(
                (sampler.total_mass() - 1.0).abs() < 1e-12,
                "s={sv}: mass {}",
                sampler.total_mass()
            );
        }
    }

    #[test]
    fn sampler_frequencies_match_law() {
        let sampler = JumpSampler::new(fo(0.5));
        let mut rng = walker_rng(7, 0);
        let draws = 1_000_000;
        let mut count1 = 0u64;
        let mut count2 = 0u64;
        for _ in 0..draws {
            match sampler.sample(&mut rng) {
                1 => count1 += 1,
                2 => count2 += 1,
                _ => {}
            }
        }
        let p1 = count1 as f64 / draws as f64;
        let p2 = count2 as f64 / draws as f64;
        assert!((p1 - 6.0 / (PI * PI)).abs() < 0.003, "P(1) = {p1}");
        // P(2)/P(1) = 2^{-(1+2s)} = 1/4 for s = 1/2
        assert!((p2 / p1 - 0.25).abs() < 0.01, "ratio {}", p2 / p1);
    }

    #[test]
    fn sampler_tail_mean_for_large_s() {
        // E[k] = ζ(1.8)/ζ(2.8) for s = 0.9
        let sampler = JumpSampler::new(fo(0.9));
        let mut rng = walker_rng(11, 0);
        let draws = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            sum += sampler.sample(&mut rng) as f64;
        }
        let mean = sum / draws as f64;
        let want = specfun::zeta(1.8) / specfun::zeta(2.8);
        assert!((mean / want - 1.0).abs() < 0.02, "mean {mean} vs {want}");
    }

    #[test]
    fn zero_steps_density_is_a_point_mass() {
        let p = WalkParams { s: fo(0.5), n: d1(), h: 0.05, seed: 1 };
        let hist = simulate_density(&p, 1000, 0.0, 40, 1.0).unwrap();
        let nonzero: Vec<usize> = hist
            .mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert_relative_eq!(hist.total(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn density_is_a_probability_vector_and_reproducible() {
        let p = WalkParams { s: fo(0.5), n: d1(), h: 0.05, seed: 42 };
        let h1 = simulate_density(&p, 20_000, 0.25, 100, 10.0).unwrap();
        assert!(h1.mass.iter().all(|&m| m >= 0.0));
        assert_relative_eq!(h1.total(), 1.0, max_relative = 1e-12);
        let h2 = simulate_density(&p, 20_000, 0.25, 100, 10.0).unwrap();
        assert_eq!(h1, h2, "same seed must be bitwise identical");
        let p3 = WalkParams { seed: 43, ..p };
        let h3 = simulate_density(&p3, 20_000, 0.25, 100, 10.0).unwrap();
        assert_ne!(h1, h3, "different seeds must differ");
    }

    #[test]
    fn sample_mean_is_centered() {
        let p = WalkParams { s: fo(0.5), n: d1(), h: 0.05, seed: 5 };
        let positions = simulate_positions(&p, 100_000, 0.5).unwrap();
        let mean = positions.iter().map(|p| p[0]).sum::<f64>() / positions.len() as f64;
        let var = positions
            .iter()
            .map(|p| (p[0] - mean) * (p[0] - mean))
            .sum::<f64>()
            / (positions.len() - 1) as f64;
        let bound = 3.0 * (var / positions.len() as f64).sqrt();
        assert!(mean.abs() <= bound, "mean {mean} exceeds 3 stderr {bound}");
    }

    #[test]
    fn payoff_trivial_cases() {
        let p = WalkParams { s: fo(0.5), n: d1(), h: 0.02, seed: 9 };
        // constant payoff: every walk exits with value 1
        let est = payoff_mc((0.0, 1.0), &|_| 1.0, 0.5, &p, 2000).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.failures, 0);
        // start outside: the payoff is u0(x0) exactly
        let est = payoff_mc((0.0, 1.0), &|x| x * x, 3.0, &p, 10).unwrap();
        assert_eq!(est.mean, 9.0);
    }

    #[test]
    fn payoff_matches_sqrt_solution() {
        // u0 = x_+^{1/2} on (0,1) has s-harmonic extension √x; at x0 = 1/4
        // the expected payoff is 1/2
        let p = WalkParams { s: fo(0.5), n: d1(), h: 1.0 / 512.0, seed: 2024 };
        let est = payoff_mc((0.0, 1.0), &|x: f64| x.max(0.0).sqrt(), 0.25, &p, 30_000).unwrap();
        assert_eq!(est.failures, 0);
        assert!((est.mean - 0.5).abs() < 0.02, "mean {} ± {}", est.mean, est.stderr);
    }
}
