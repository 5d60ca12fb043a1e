//! Identity suites: each check prints one CSV row
//! `name,computed,expected,abs_err,pass`.

use crate::manifest::Manifest;
use crate::Suite;
use anyhow::Result;
use fraclab::evolution;
use fraclab::extension;
use fraclab::field::{PeriodicGrid, SampledField};
use fraclab::fraclap::{self, QuadratureParams, TailModel};
use fraclab::geometry::{self, AngularCone, IntervalSet, RadialSet};
use fraclab::reference;
use fraclab::specfun::{self, Dimension, FracOrder};
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

struct Row {
    name: String,
    computed: f64,
    expected: f64,
    tol: f64,
}

impl Row {
    fn pass(&self) -> bool {
        (self.computed - self.expected).abs() <= self.tol
    }
}

fn row(rows: &mut Vec<Row>, name: impl Into<String>, computed: f64, expected: f64, tol: f64) {
    rows.push(Row { name: name.into(), computed, expected, tol });
}

fn fo(v: f64) -> FracOrder {
    FracOrder::new(v).expect("valid order")
}
fn dim(v: usize) -> Dimension {
    Dimension::new(v).expect("valid dimension")
}

pub fn run_suite(suite: Suite, tol: f64, out: Option<&Path>) -> Result<bool> {
    let start = Instant::now();
    let mut rows = Vec::new();
    match suite {
        Suite::Constants => constants(&mut rows, tol)?,
        Suite::Halfline => halfline(&mut rows)?,
        Suite::Ball => ball(&mut rows)?,
        Suite::Coarea => coarea(&mut rows)?,
        Suite::Extension => extension_suite(&mut rows)?,
        Suite::Perimeter => perimeter(&mut rows)?,
        Suite::All => {
            constants(&mut rows, tol)?;
            halfline(&mut rows)?;
            ball(&mut rows)?;
            coarea(&mut rows)?;
            extension_suite(&mut rows)?;
            perimeter(&mut rows)?;
        }
    }
    let mut csv = String::from("name,computed,expected,abs_err,pass\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{}\n",
            r.name,
            r.computed,
            r.expected,
            (r.computed - r.expected).abs(),
            r.pass()
        ));
    }
    print!("{csv}");
    let all_pass = rows.iter().all(Row::pass);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), &csv)?;
        let mut manifest =
            Manifest::new(format!("verify --suite {suite:?}"), csv.as_bytes(), None);
        for r in &rows {
            manifest.check(&r.name, r.pass());
        }
        manifest.wall_time_s = start.elapsed().as_secs_f64();
        manifest.write(dir)?;
    }
    Ok(all_pass)
}

fn constants(rows: &mut Vec<Row>, tol: f64) -> Result<()> {
    row(rows, "gamma_half", specfun::gamma(0.5)?, PI.sqrt(), 1e-12);
    row(rows, "gamma_five", specfun::gamma(5.0)?, 24.0, 1e-11);
    row(rows, "beta_half_half", specfun::beta(0.5, 0.5)?, PI, 1e-12);
    row(
        rows,
        "bessel_k_half_one",
        specfun::bessel_k(0.5, 1.0)?,
        (PI / 2.0_f64).sqrt() * (-1.0_f64).exp(),
        1e-10,
    );
    row(
        rows,
        "walk_normalizer_half",
        specfun::walk_normalizer(fo(0.5)),
        6.0 / (PI * PI),
        1e-10,
    );
    for n in [1usize, 2, 3] {
        for sv in [0.25, 0.5, 0.75] {
            let closed = specfun::cns_closed(dim(n), fo(sv));
            let integral = specfun::cns_integral(dim(n), fo(sv), tol)?;
            row(
                rows,
                format!("cns_cross_check_n{n}_s{sv}"),
                integral,
                closed,
                1e-6 * closed.abs().max(1e-6),
            );
        }
    }
    Ok(())
}

fn halfline(rows: &mut Vec<Row>) -> Result<()> {
    for sv in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let v = reference::halfline_identity_integral(fo(sv), 1e-9)?;
        row(rows, format!("kernel_identity_s{sv}"), v, 1.0 / sv, 1e-8);
    }
    let q = QuadratureParams {
        inner_radius: 0.05,
        outer_radius: 1e28,
        points_per_decade: 60,
        tol: 1e-10,
        tail: TailModel::ZeroTail,
    };
    for sv in [0.25, 0.5, 0.75] {
        let s = fo(sv);
        let u = move |x: f64| x.max(0.0).powf(sv);
        let at_one = fraclap::fraclap_quadrature(u, 1.0, s, &q)?.value;
        row(rows, format!("halfline_vanishes_s{sv}"), at_one, 0.0, 1e-4);
        let base = fraclap::fraclap_quadrature(u, -1.0, s, &q)?.value;
        let scaled = fraclap::fraclap_quadrature(u, -4.0, s, &q)?.value;
        row(
            rows,
            format!("halfline_scaling_s{sv}"),
            scaled / base,
            4.0_f64.powf(-sv),
            1e-6,
        );
    }
    Ok(())
}

fn ball(rows: &mut Vec<Row>) -> Result<()> {
    let q = QuadratureParams::default();
    for sv in [0.25, 0.5, 0.75] {
        let s = fo(sv);
        let expected = reference::ball_constant(dim(1), s);
        let u = move |x: f64| (1.0 - x * x).max(0.0).powf(sv);
        for x in [0.0, 0.5, -0.5] {
            let v = fraclap::fraclap_quadrature(u, x, s, &q)?.value;
            row(rows, format!("ball_profile_s{sv}_x{x}"), v, expected, 1e-4);
        }
    }
    // 2D via the radial reduction
    let s = fo(0.5);
    let v = fraclap::fraclap_quadrature_radial_2d(
        |r: f64| (1.0 - r * r).max(0.0).sqrt(),
        0.3,
        s,
        &QuadratureParams::default(),
    )?;
    row(rows, "ball_profile_2d_s0.5", v, reference::ball_constant(dim(2), s), 1e-4);
    Ok(())
}

fn coarea(rows: &mut Vec<Row>) -> Result<()> {
    let grid = PeriodicGrid::new_1d(64, 2.0)?;
    let u = SampledField::from_fn_1d(grid.clone(), |x| {
        let levels = [0.1, 0.9, 0.4, 0.7, 0.2];
        levels[(((x + 1.0) * 2.5) as usize).min(4)]
    })?;
    row(rows, "coarea_gap_5_levels", reference::coarea_gap(&u, fo(0.45))?, 0.0, 1e-10);
    let grid2 = PeriodicGrid::new_2d(64, 16.0, 16.0)?;
    let g = SampledField::from_fn_2d(grid2, |x, y| (-PI * (x * x + y * y)).exp())?;
    let gap = reference::uncertainty_gap(&g, fo(0.5));
    // the inequality demands gap >= 0; report against the positive part
    row(rows, "uncertainty_gap_gaussian", gap.min(0.0), 0.0, 1e-10);
    Ok(())
}

fn extension_suite(rows: &mut Vec<Row>) -> Result<()> {
    let p_half = extension::profile_g(fo(0.5), 60.0, 1e-6)?;
    let mut sup = 0.0_f64;
    for (t, g) in p_half.t_grid.iter().zip(&p_half.g_values) {
        sup = sup.max((g - (-t).exp()).abs());
    }
    row(rows, "profile_half_exponential_sup", sup, 0.0, 1e-8);
    row(rows, "c_sharp_half", p_half.c_sharp, 1.0, 1e-8);
    let p_quarter = extension::profile_g(fo(0.25), 60.0, 1e-6)?;
    let want = 2.0_f64.powf(0.5) * specfun::gamma(0.75)? / specfun::gamma(0.25)?;
    row(rows, "c_sharp_quarter", p_quarter.c_sharp, want, 1e-4);
    for (name, prof) in [("half", &p_half), ("quarter", &p_quarter)] {
        row(
            rows,
            format!("weighted_energy_{name}"),
            prof.weighted_energy(),
            prof.c_sharp,
            1e-3 * prof.c_sharp,
        );
        let grid = PeriodicGrid::new_1d(128, 1.0)?;
        let u = SampledField::from_fn_1d(grid, |x| (2.0 * PI * x).sin())?;
        let tr = extension::neumann_trace(&u, prof, 1e-3)?;
        let sv = prof.s.value();
        let target = prof.c_sharp * (2.0 * PI).powf(2.0 * sv);
        row(rows, format!("neumann_trace_{name}"), tr.values[32] / u.values[32], target, 1e-2 * target);
    }
    Ok(())
}

fn perimeter(rows: &mut Vec<Row>) -> Result<()> {
    // exact interaction against its scaling law
    let s = fo(0.3);
    let base = geometry::interaction(
        &IntervalSet::bounded(vec![(0.0, 1.0)])?,
        &IntervalSet::bounded(vec![(1.5, 2.5)])?,
        s,
    )?;
    let scaled = geometry::interaction(
        &IntervalSet::bounded(vec![(0.0, 2.0)])?,
        &IntervalSet::bounded(vec![(3.0, 5.0)])?,
        s,
    )?;
    row(rows, "interaction_scaling", scaled, 2.0_f64.powf(1.0 - 0.6) * base, 1e-12);

    let e = IntervalSet::bounded(vec![(0.0, 1.0), (1.5, 2.5)])?;
    let win = (-3.0, 3.0);
    let sp = fo(0.3);
    let direct = geometry::per_s(&e, win, sp)?;
    let complemented = geometry::per_s(&e.complement(), win, sp)?;
    row(rows, "perimeter_complement_symmetry", complemented, direct, 1e-10 * direct);

    let e1 = IntervalSet::bounded(vec![(0.0, 1.0)])?;
    let ratio = geometry::per_s(&e, win, fo(0.49))? / geometry::per_s(&e1, win, fo(0.49))?;
    row(rows, "classical_limit_ratio", ratio, 2.0, 0.1);

    let small = 2.0 * 0.01 * geometry::per_s(&e1, win, fo(0.01))?;
    row(rows, "small_s_limit", small, 2.0, 0.1);

    let cone = AngularCone::new(vec![
        (PI / 4.0, 3.0 * PI / 4.0),
        (5.0 * PI / 4.0, 7.0 * PI / 4.0),
    ])?;
    let curv =
        geometry::nmc_2d(&|x, y| cone.contains(x, y), (0.0, 0.0), fo(0.25), 1e-6, 1e4, 1e-6)?;
    row(rows, "cone_curvature_at_tip", curv, 0.0, 1e-4);

    let quarter = AngularCone::new(vec![(0.0, PI / 2.0)])?;
    let beta = geometry::beta_e(&RadialSet::Cone(&quarter), &[0.1, 0.05, 0.01])?;
    row(rows, "cone_opening_limit", beta.limit, PI / 2.0, 1e-6);

    // half-layer mobility constant ties the geometry to the evolution
    let layer = evolution::layer_solution(
        fo(0.5),
        &evolution::DoubleWell::periodic_pn(),
        &evolution::LayerParams::default(),
    )?;
    row(rows, "layer_mobility_half", evolution::gamma_const(&layer), 2.0 * PI, 0.01 * 2.0 * PI);
    Ok(())
}
