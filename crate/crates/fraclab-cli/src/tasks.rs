//! The `run` command: JSON-configured tasks with CSV/JSON artifacts and
//! a manifest; outputs are deterministic given (config, seed).

use crate::manifest::Manifest;
use fraclab::evolution::{self, DislocationState, DoubleWell, PnParams};
use fraclab::extension;
use fraclab::field::{PeriodicGrid, SampledField};
use fraclab::fraclap::{self, ExteriorProblem};
use fraclab::geometry::{self, IntervalSet, RadialSet};
use fraclab::specfun::{Dimension, FracOrder};
use fraclab::stochastic::{self, WalkParams};
use fraclab::variational::{self, GroundStateProblem};
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub enum RunError {
    /// Schema or semantic config problem → exit 2.
    Config(String),
    /// The task itself failed → exit 1.
    Execution(String),
}

impl From<fraclab::Error> for RunError {
    fn from(e: fraclab::Error) -> Self {
        RunError::Execution(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Execution(format!("io: {e}"))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    task: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    params: serde_json::Value,
}

/// Pointwise function presets usable as initial/exterior/payoff data.
#[derive(Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Preset {
    Zero,
    Constant { value: f64 },
    /// x_+^{1/2}
    SqrtPlus,
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Sine { frequency: f64, amplitude: f64 },
    Indicator { lo: f64, hi: f64, value: f64 },
    Affine { intercept: f64, slope: f64 },
}

impl Preset {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Preset::Zero => 0.0,
            Preset::Constant { value } => *value,
            Preset::SqrtPlus => x.max(0.0).sqrt(),
            Preset::Gaussian { amplitude, center, width } => {
                amplitude * (-(x - center) * (x - center) / (width * width)).exp()
            }
            Preset::Sine { frequency, amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * frequency * x).sin()
            }
            Preset::Indicator { lo, hi, value } => {
                if x >= *lo && x <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            Preset::Affine { intercept, slope } => intercept + slope * x,
        }
    }
}

fn fo(v: f64) -> Result<FracOrder, RunError> {
    FracOrder::new(v).map_err(|e| RunError::Config(e.to_string()))
}

// grid shape comes straight from the config, so its rejection is a
// config error (exit 2), not an execution failure
fn grid_1d(points: usize, period: f64) -> Result<PeriodicGrid, RunError> {
    PeriodicGrid::new_1d(points, period).map_err(|e| RunError::Config(e.to_string()))
}

fn parse_params<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, RunError> {
    // round-trip through text so schema violations come back line-anchored
    let text = serde_json::to_string_pretty(v).expect("value reserializes");
    serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("params: {e} (within the params object)")))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run(
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<PathBuf>,
    tol_override: Option<f64>,
) -> Result<(), RunError> {
    let start = Instant::now();
    let bytes = fs::read(config_path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config: Config = serde_json::from_slice(&bytes)
        .map_err(|e| RunError::Config(format!("{}: {e}", config_path.display())))?;
    let seed = seed_override.or(config.seed);
    let out_dir = out_override
        .or(config.out_dir.clone())
        .ok_or_else(|| RunError::Config("no output directory (config out_dir or --out)".into()))?;
    fs::create_dir_all(&out_dir)?;

    let mut manifest = Manifest::new(format!("run --config {}", config_path.display()), &bytes, seed);
    match config.task.as_str() {
        "walk" => walk_task(&config.params, seed, &out_dir, &mut manifest)?,
        "heat" => heat_task(&config.params, &out_dir, &mut manifest)?,
        "dislocation" => dislocation_task(&config.params, tol_override, &out_dir, &mut manifest)?,
        "pn" => pn_task(&config.params, &out_dir, &mut manifest)?,
        "dirichlet" => dirichlet_task(&config.params, &out_dir, &mut manifest)?,
        "groundstate" => groundstate_task(&config.params, tol_override, &out_dir, &mut manifest)?,
        "perimeter" => perimeter_task(&config.params, &out_dir, &mut manifest)?,
        "extend" => extend_task(&config.params, &out_dir, &mut manifest)?,
        other => {
            return Err(RunError::Config(format!(
                "unknown task `{other}` (expected walk|heat|dislocation|pn|dirichlet|groundstate|perimeter|extend)"
            )))
        }
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&out_dir)?;
    if manifest.all_pass() {
        Ok(())
    } else {
        Err(RunError::Execution("one or more run checks failed (see manifest.json)".into()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkConfig {
    s: f64,
    h: f64,
    t: f64,
    walkers: usize,
    #[serde(default)]
    bins: Option<usize>,
    #[serde(default)]
    half_width: Option<f64>,
    /// Optional exit-payoff mode.
    #[serde(default)]
    payoff: Option<PayoffConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffConfig {
    domain: [f64; 2],
    x0: f64,
    data: Preset,
}

fn walk_task(
    params: &serde_json::Value,
    seed: Option<u64>,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: WalkConfig = parse_params(params)?;
    let wp = WalkParams {
        s: fo(cfg.s)?,
        n: Dimension::new(1).unwrap(),
        h: cfg.h,
        seed: seed.unwrap_or(0),
    };
    if let Some(payoff) = &cfg.payoff {
        let data = payoff.data.clone();
        let est = stochastic::payoff_mc(
            (payoff.domain[0], payoff.domain[1]),
            &move |x| data.eval(x),
            payoff.x0,
            &wp,
            cfg.walkers,
        )?;
        let summary = serde_json::json!({
            "mean": est.mean,
            "stderr": est.stderr,
            "failures": est.failures,
        });
        fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
        manifest.check("no_walker_hit_step_guard", est.failures == 0);
    } else {
        let bins = cfg.bins.unwrap_or(200);
        let half_width = cfg.half_width.unwrap_or(10.0);
        let hist = stochastic::simulate_density(&wp, cfg.walkers, cfg.t, bins, half_width)?;
        let mut csv = String::from("bin_center,mass\n");
        for (c, m) in hist.centers.iter().zip(&hist.mass) {
            let _ = writeln!(csv, "{},{}", fmt17(*c), fmt17(*m));
        }
        fs::write(out.join("histogram.csv"), csv)?;
        let mean: f64 = hist
            .centers
            .iter()
            .zip(&hist.mass)
            .map(|(c, m)| c * m * hist.bin_width)
            .sum();
        let summary = serde_json::json!({
            "mean": mean,
            "stderr": serde_json::Value::Null,
            "failures": 0,
        });
        fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
        manifest.check("histogram_mass_is_one", (hist.total() - 1.0).abs() < 1e-12);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatConfig {
    s: f64,
    t: f64,
    points: usize,
    period: f64,
    initial: Preset,
}

fn heat_task(
    params: &serde_json::Value,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: HeatConfig = parse_params(params)?;
    let grid = grid_1d(cfg.points, cfg.period)?;
    let f = SampledField::from_fn_1d(grid, |x| cfg.initial.eval(x))?;
    let evolved = evolution::heat_evolve(&f, cfg.s, cfg.t)?;
    let mut buf = Vec::new();
    evolved.write_csv(&mut buf)?;
    fs::write(out.join("field.csv"), buf)?;
    manifest.check(
        "mean_is_conserved",
        (evolved.integrate() - f.integrate()).abs() <= 1e-10 * f.integrate().abs().max(1.0),
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DislocationConfig {
    s: f64,
    gamma: f64,
    positions: Vec<f64>,
    orientations: Vec<i8>,
    t_end: f64,
    #[serde(default)]
    tol: Option<f64>,
    /// Constant external stress, if any.
    #[serde(default)]
    stress: Option<f64>,
}

fn dislocation_task(
    params: &serde_json::Value,
    tol_override: Option<f64>,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: DislocationConfig = parse_params(params)?;
    let state = DislocationState {
        positions: cfg.positions.clone(),
        orientations: cfg.orientations.clone(),
        s: fo(cfg.s)?,
        gamma: cfg.gamma,
        stress: cfg.stress.map(|c| {
            std::sync::Arc::new(move |_t: f64, _x: f64| c)
                as std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>
        }),
    };
    let tol = tol_override.or(cfg.tol).unwrap_or(1e-10);
    let traj = evolution::dislocation_evolve(&state, cfg.t_end, tol)?;
    let mut csv = String::from("t");
    for i in 0..cfg.positions.len() {
        let _ = write!(csv, ",x_{}", i + 1);
    }
    csv.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.positions) {
        let _ = write!(csv, "{}", fmt17(*t));
        for x in row {
            let _ = write!(csv, ",{}", fmt17(*x));
        }
        csv.push('\n');
    }
    fs::write(out.join("trajectory.csv"), csv)?;
    let events: Vec<serde_json::Value> = traj
        .collision
        .iter()
        .map(|e| serde_json::json!({"type": "collision", "i": e.i, "j": e.j, "t": e.t}))
        .collect();
    fs::write(out.join("events.json"), serde_json::to_string_pretty(&events).unwrap())?;
    manifest.check("trajectory_recorded", traj.times.len() > 1);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PnConfig {
    s: f64,
    epsilon: f64,
    t_end: f64,
    points: usize,
    period: f64,
    layer_centers: Vec<f64>,
    #[serde(default)]
    snapshots: Option<usize>,
}

fn pn_task(
    params: &serde_json::Value,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: PnConfig = parse_params(params)?;
    let s = fo(cfg.s)?;
    let grid = grid_1d(cfg.points, cfg.period)?;
    let eps = cfg.epsilon;
    let centers = cfg.layer_centers.clone();
    let layer = |z: f64| 0.5 + z.atan() / std::f64::consts::PI;
    let v0 = SampledField::from_fn_1d(grid, |x| {
        centers.iter().map(|c| layer((x - c) / eps)).sum()
    })?;
    let p = PnParams {
        epsilon: eps,
        s,
        t_end: cfg.t_end,
        snapshots: cfg.snapshots.unwrap_or(5),
    };
    let snaps = evolution::pn_evolve(&v0, &DoubleWell::periodic_pn(), None, &p)?;
    let mut crossings_csv = String::from("t,level,position\n");
    for (k, (t, field)) in snaps.iter().enumerate() {
        let mut buf = Vec::new();
        field.write_csv(&mut buf)?;
        fs::write(out.join(format!("pn_{k:03}.csv")), buf)?;
        for (li, _) in cfg.layer_centers.iter().enumerate() {
            let level = li as f64 + 0.5;
            for pos in evolution::level_crossings(field, level) {
                let _ = writeln!(crossings_csv, "{},{},{}", fmt17(*t), level, fmt17(pos));
            }
        }
    }
    fs::write(out.join("crossings.csv"), crossings_csv)?;
    manifest.check("snapshots_written", !snaps.is_empty());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirichletConfig {
    s: f64,
    a: f64,
    b: f64,
    cells: usize,
    exterior: Preset,
    rhs: Preset,
}

fn dirichlet_task(
    params: &serde_json::Value,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: DirichletConfig = parse_params(params)?;
    let exterior = cfg.exterior.clone();
    let rhs = cfg.rhs.clone();
    let prob = ExteriorProblem {
        a: cfg.a,
        b: cfg.b,
        cells: cfg.cells,
        s: fo(cfg.s)?,
        exterior: &move |x| exterior.eval(x),
        rhs: &move |x| rhs.eval(x),
    };
    let sol = fraclap::dirichlet_solve(&prob)?;
    let mut csv = String::from("x,value\n");
    for (x, v) in sol.xs.iter().zip(&sol.values) {
        let _ = writeln!(csv, "{},{}", fmt17(*x), fmt17(*v));
    }
    fs::write(out.join("solution.csv"), csv)?;
    manifest.check("solution_finite", sol.values.iter().all(|v| v.is_finite()));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundStateConfig {
    s: f64,
    p: f64,
    points: usize,
    period: f64,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    decay_window: Option<[f64; 2]>,
}

fn groundstate_task(
    params: &serde_json::Value,
    tol_override: Option<f64>,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: GroundStateConfig = parse_params(params)?;
    let grid = grid_1d(cfg.points, cfg.period)?;
    let prob = GroundStateProblem::new(fo(cfg.s)?, cfg.p, grid)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let tol = tol_override.or(cfg.tol).unwrap_or(1e-8);
    let w = variational::ground_state(&prob, tol)?;
    let mut buf = Vec::new();
    w.write_csv(&mut buf)?;
    fs::write(out.join("profile.csv"), buf)?;
    let residual = variational::ground_state_residual(&w, cfg.s, cfg.p);
    let decay = cfg
        .decay_window
        .map(|wnd| variational::decay_fit(&w, (wnd[0], wnd[1])))
        .transpose()?;
    let summary = serde_json::json!({
        "residual": residual,
        "sup": w.values.iter().fold(0.0_f64, |m, v| m.max(*v)),
        "decay_exponent": decay,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
    manifest.check("residual_within_tol", residual <= tol);
    manifest.check("profile_positive", w.values.iter().all(|&v| v > 0.0));
    Ok(())
}

/// Sets load either as a 1D interval list or as a PGM-style 2D mask:
/// rows of '0'/'1' characters plus a physical cell size and origin.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerimeterConfig {
    #[serde(default)]
    intervals: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    mask: Option<MaskConfig>,
    window: serde_json::Value,
    s_list: Vec<f64>,
    #[serde(default)]
    truncation_radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskConfig {
    rows: Vec<String>,
    cell: f64,
    origin: [f64; 2],
}

impl MaskConfig {
    fn to_pixels(&self) -> Result<geometry::PixelSet, RunError> {
        let ny = self.rows.len();
        if ny == 0 {
            return Err(RunError::Config("mask has no rows".into()));
        }
        let nx = self.rows[0].len();
        let mut mask = vec![false; nx * ny];
        for (iy, row) in self.rows.iter().enumerate() {
            if row.len() != nx {
                return Err(RunError::Config(format!("mask row {iy} has ragged width")));
            }
            for (ix, ch) in row.chars().enumerate() {
                mask[iy * nx + ix] = match ch {
                    '0' => false,
                    '1' => true,
                    other => {
                        return Err(RunError::Config(format!(
                            "mask row {iy}: unexpected character `{other}`"
                        )))
                    }
                };
            }
        }
        Ok(geometry::PixelSet {
            mask,
            nx,
            ny,
            cell: self.cell,
            origin: (self.origin[0], self.origin[1]),
            exterior_inside: false,
        })
    }
}

fn perimeter_task(
    params: &serde_json::Value,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: PerimeterConfig = parse_params(params)?;
    match (&cfg.intervals, &cfg.mask) {
        (Some(intervals), None) => {
            let set = IntervalSet::bounded(intervals.iter().map(|p| (p[0], p[1])).collect())
                .map_err(|e| RunError::Config(e.to_string()))?;
            let window: [f64; 2] = parse_params(&cfg.window)?;
            let window = (window[0], window[1]);
            let mut csv = String::from("s,per_s,two_s_per_s\n");
            for &sv in &cfg.s_list {
                let s = fo(sv)?;
                let v = geometry::per_s(&set, window, s)?;
                let _ = writeln!(csv, "{},{},{}", fmt17(sv), fmt17(v), fmt17(2.0 * sv * v));
            }
            fs::write(out.join("perimeter.csv"), csv)?;
            let beta = geometry::beta_e(&RadialSet::Interval(&set), &cfg.s_list)?;
            let beta_json = serde_json::json!({
                "values": beta.values.iter().map(|(s, v)| serde_json::json!({"s": s, "beta": v})).collect::<Vec<_>>(),
                "limit": beta.limit,
                "classical_perimeter": geometry::classical_per_1d(&set, window),
            });
            fs::write(out.join("beta.json"), serde_json::to_string_pretty(&beta_json).unwrap())?;
            manifest.check("perimeter_rows_written", !cfg.s_list.is_empty());
        }
        (None, Some(mask)) => {
            let set = mask.to_pixels()?;
            let window: [[f64; 2]; 2] = parse_params(&cfg.window)?;
            let window = ((window[0][0], window[0][1]), (window[1][0], window[1][1]));
            let radius = cfg.truncation_radius.unwrap_or(
                10.0 * (window.1 .0 - window.0 .0).max(window.1 .1 - window.0 .1),
            );
            let mut csv = String::from("s,per_s,error_estimate\n");
            for &sv in &cfg.s_list {
                let s = fo(sv)?;
                let (v, err) = geometry::per_s_2d(&set, window, s, radius)?;
                let _ = writeln!(csv, "{},{},{}", fmt17(sv), fmt17(v), fmt17(err));
            }
            fs::write(out.join("perimeter.csv"), csv)?;
            let summary = serde_json::json!({
                "classical_perimeter": geometry::classical_per_2d(&set, window),
            });
            fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
            manifest.check("perimeter_rows_written", !cfg.s_list.is_empty());
        }
        _ => {
            return Err(RunError::Config(
                "perimeter task needs exactly one of `intervals` or `mask`".into(),
            ))
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtendConfig {
    s: f64,
    points: usize,
    period: f64,
    initial: Preset,
    heights: Vec<f64>,
}

fn extend_task(
    params: &serde_json::Value,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<(), RunError> {
    let cfg: ExtendConfig = parse_params(params)?;
    let s = fo(cfg.s)?;
    let grid = grid_1d(cfg.points, cfg.period)?;
    let u = SampledField::from_fn_1d(grid, |x| cfg.initial.eval(x))?;
    let profile = extension::profile_g(s, 200.0, 1e-6)?;
    for (k, &y) in cfg.heights.iter().enumerate() {
        let v = extension::extend(&u, &profile, y)?;
        let mut buf = Vec::new();
        v.write_csv(&mut buf)?;
        fs::write(out.join(format!("extend_{k:03}.csv")), buf)?;
    }
    let summary = serde_json::json!({
        "c_sharp": profile.c_sharp,
        "ode_residual": extension::ode_residual_max(&profile, 0.5, 190.0),
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap())?;
    manifest.check("profile_valid", profile.c_sharp > 0.0);
    Ok(())
}
