use std::fs::File;

use plateau::fit::parse_window;
use plateau::lace::{decompose, pi_series};
use plateau::mc::{sample_two_point, shell_profile, window_susceptibility, Estimator, WindowRule, WindowSpec};
use plateau::srw::{
    fit_critical_decay, fit_massive_decay, green_fourier_box, green_series_with, mass_m0, quadrature_grid_for,
    GreenParams, StepLadder,
};
use plateau::torus::{
    killed_walk_mc, plateau_check_srw, torus_green_fourier_table, torus_green_solve, torus_green_unfold_table,
};
use plateau::wsaw::{
    bubble, chi_amplitude, enumerate_two_point, mass_estimate, susceptibility, unfolding_check, zc_estimate,
    EnumOptions, SeriesTable, WsawParams,
};
use plateau::{Geometry, LatticePoint, OrthantTable};
use serde_json::json;

use crate::args::*;
use crate::error::{config, CliError, CliResult};
use crate::output::{shell_means, write_orthant, write_points_with_error, write_table, write_torus, Run};
use crate::plot::{render, Annotations, PlotKind};

pub fn dispatch(cmd: &Command, run: &mut Run) -> CliResult<()> {
    match cmd {
        Command::Srw(a) => srw(a, run),
        Command::TorusSrw(a) => torus_srw(a, run),
        Command::Wsaw(a) => wsaw(a, run),
        Command::WsawMc(a) => wsaw_mc(a, run),
        Command::Lace(a) => lace(a, run),
        Command::Plot(_) | Command::Rerun(_) => unreachable!("handled before an output directory exists"),
    }
}

fn omega(dim: usize) -> f64 {
    (2 * dim) as f64
}

fn fugacity(f: &Fugacity, dim: usize) -> Option<f64> {
    f.z.or(f.z_omega.map(|a| a / omega(dim)))
}

fn need_z(f: &Fugacity, dim: usize, what: &str) -> CliResult<f64> {
    fugacity(f, dim).ok_or_else(|| config(format!("{what} needs --z or --z-omega")))
}

fn plot_file(run: &mut Run, kind: PlotKind, csv: &str, svg: &str, ann: Annotations) -> CliResult<()> {
    let body = render(kind, File::open(run.dir().join(csv))?, &ann)?;
    run.text(svg, &body)
}

fn srw(a: &SrwArgs, run: &mut Run) -> CliResult<()> {
    if a.dim == 0 {
        return Err(config("--dim must be at least 1"));
    }
    let mu = match (a.mu, a.mu_omega) {
        (Some(m), None) => m,
        (None, Some(x)) => x / omega(a.dim),
        _ => return Err(config("give exactly one of --mu, --mu-omega")),
    };
    let mut params = GreenParams { dim: a.dim, mu, radius: a.radius, nmax: a.nmax, grid: a.grid.unwrap_or(64) };
    params.validate()?;
    let mo = params.mu_omega();
    let critical = mo >= 1.0;
    let mut summary = json!({
        "dim": a.dim, "mu": mu, "mu_omega": mo, "radius": a.radius, "nmax": a.nmax,
        "m0": if critical { None } else { Some(mass_m0(a.dim, mu)?) },
    });

    let fourier = if a.route != SrwRoute::Series {
        let grid = match a.grid {
            Some(g) => g,
            None if critical => 128,
            None => quadrature_grid_for(a.dim, mu, a.radius, 1e-10)?,
        };
        params.grid = grid;
        let q = green_fourier_box(a.dim, mu, a.radius, grid)?;
        summary["grid"] = json!(grid);
        summary["quadrature_bound"] = json!(q.error_bound.is_finite().then_some(q.error_bound));
        Some(q)
    } else {
        None
    };

    let geometry = Geometry::lattice(a.dim)?;
    let mut series: Option<(OrthantTable, f64)> = None;
    if a.route != SrwRoute::Fourier {
        if critical {
            if a.route == SrwRoute::Series {
                return Err(config("the series route needs mu Omega < 1"));
            }
        } else {
            let size = ((a.radius + 1) as f64).powi(a.dim as i32);
            let full = size <= 20_000.0;
            if !full && a.route == SrwRoute::Series {
                return Err(CliError::Core(plateau::Error::Budget {
                    what: "series route orthant points".into(),
                    estimate: size,
                    limit: 20_000.0,
                }));
            }
            let ladder = StepLadder::new(a.dim, a.nmax);
            let mut t = OrthantTable::zeros(geometry, a.radius);
            let mut tail = 0.0;
            let pts: Vec<LatticePoint> = if full {
                t.iter().map(|(x, _)| x).collect()
            } else {
                (0..=a.radius as i64).map(|n| LatticePoint::on_axis(a.dim, n)).collect()
            };
            for x in pts {
                let b = green_series_with(&ladder, &params, &x)?;
                tail = b.error_bound;
                t.set(&x, b.value)?;
            }
            summary["series_tail_bound"] = json!(tail);
            summary["series_points"] = json!(if full { "orthant" } else { "axis" });
            series = Some((t, tail));
        }
    }
    if let (Some(q), Some((s, tail))) = (&fourier, &series) {
        let compared: Vec<LatticePoint> = if summary["series_points"] == "orthant" {
            s.iter().map(|(x, _)| x).collect()
        } else {
            (0..=a.radius as i64).map(|n| LatticePoint::on_axis(a.dim, n)).collect()
        };
        let diff = compared.iter().map(|x| (q.table.get(x) - s.get(x)).abs()).fold(0.0, f64::max);
        summary["max_route_difference"] = json!(diff);
        summary["routes_agree"] = json!(diff <= tail + q.error_bound);
    }
    let table = match (&fourier, &series) {
        (Some(q), _) => &q.table,
        (None, Some((s, _))) => s,
        _ => unreachable!(),
    };
    write_orthant(run, "green.csv", table)?;
    write_table(run, "profile.csv", &["shell", "mean"], &shell_means(table))?;

    if let Some(w) = &a.fit_window {
        let window = parse_window(w)?;
        let rows: Vec<Vec<f64>>;
        if critical {
            let fit = fit_critical_decay(a.dim, window, params.grid.max(64))?;
            let r = window.1 as usize;
            let c1 = green_fourier_box(a.dim, mu, r, params.grid.max(64))?;
            let c2 = green_fourier_box(a.dim, mu, r, 2 * params.grid.max(64))?;
            rows = (window.0..=window.1)
                .map(|n| {
                    let x = LatticePoint::on_axis(a.dim, n);
                    vec![n as f64, 2.0 * c2.table.get(&x) - c1.table.get(&x), fit.predict(n as f64)]
                })
                .collect();
            run.json("fit.json", &json!({ "fit": fit, "critical": true }))?;
        } else {
            let p = GreenParams { radius: params.radius.max(window.1 as usize), ..params };
            let rep = fit_massive_decay(&p, &LatticePoint::on_axis(a.dim, 1), window, 0.5, 0.05)?;
            let ladder = StepLadder::new(a.dim, p.nmax);
            rows = (window.0..=window.1)
                .map(|n| {
                    let v = green_series_with(&ladder, &p, &LatticePoint::on_axis(a.dim, n)).map(|b| b.value);
                    v.map(|v| vec![n as f64, v, rep.fit.predict(n as f64)])
                })
                .collect::<plateau::Result<_>>()?;
            run.json("fit.json", &rep)?;
        }
        write_table(run, "decay.csv", &["n", "value", "fit"], &rows)?;
        if a.out.plot {
            let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.dir().join("fit.json"))?)?;
            let residual = fit["fit"]["residual"].as_f64();
            plot_file(run, PlotKind::LoglogFit, "decay.csv", "decay.svg", Annotations { residual, ..Default::default() })?;
        }
    }
    run.json("summary.json", &summary)?;
    if a.out.plot {
        plot_file(run, PlotKind::Profile, "profile.csv", "profile.svg", Annotations::default())?;
    }
    Ok(())
}

fn torus_srw(a: &TorusArgs, run: &mut Run) -> CliResult<()> {
    Geometry::torus(a.dim, a.period)?;
    let z = match (fugacity(&a.fugacity, a.dim), a.rho) {
        (Some(z), None) => z,
        (None, Some(rho)) => 1.0 / omega(a.dim) - rho * (a.period as f64).powf(-a.p),
        _ => return Err(config("give one of --z, --z-omega, --rho")),
    };
    let zo = z * omega(a.dim);
    let chi0 = 1.0 / (1.0 - zo);
    let mut summary = json!({ "dim": a.dim, "period": a.period, "z": z, "z_omega": zo, "chi0": chi0, "route": a.route });
    let table = match a.route {
        TorusRoute::Fourier => Some(torus_green_fourier_table(a.dim, a.period, z)?),
        TorusRoute::Solve => {
            let f = torus_green_solve(a.dim, a.period, z, &LatticePoint::origin(a.dim))?;
            Some(OrthantTable::from_field_table(&f))
        }
        TorusRoute::Unfold => {
            let grid = match a.grid {
                Some(g) => g,
                None => quadrature_grid_for(a.dim, z, a.period / 2 + a.period * a.shells, 1e-10)?,
            };
            let (t, bound) = torus_green_unfold_table(a.dim, a.period, z, a.shells, grid)?;
            summary["grid"] = json!(grid);
            summary["error_bound"] = json!(bound);
            Some(t)
        }
        TorusRoute::Mc => {
            let mc = killed_walk_mc(a.dim, a.period, z, a.samples, a.seed, a.shards)?;
            write_points_with_error(
                run,
                "torus.csv",
                a.dim,
                mc.points.iter().zip(&mc.sites).map(|(p, e)| {
                    let c: Vec<i64> = p.coords().iter().map(|c| c.rem_euclid(a.period as i64)).collect();
                    (LatticePoint::new(c), e.mean, e.stderr)
                }),
            )?;
            let mut shells = vec![(0.0, 0.0, 0usize); a.period / 2 + 1];
            for (p, e) in mc.points.iter().zip(&mc.sites) {
                let s = &mut shells[p.norm_sup() as usize];
                s.0 += e.mean;
                s.1 += e.stderr * e.stderr;
                s.2 += 1;
            }
            let rows: Vec<Vec<f64>> = shells
                .iter()
                .enumerate()
                .map(|(i, (m, v, n))| vec![i as f64, m / *n as f64, v.sqrt() / *n as f64])
                .collect();
            write_table(run, "profile.csv", &["shell", "mean", "stderr"], &rows)?;
            summary["samples"] = json!(a.samples);
            summary["seed"] = json!(a.seed);
            summary["shards"] = json!(a.shards);
            summary["total"] = json!(mc.total);
            None
        }
    };
    if let Some(t) = &table {
        write_torus(run, "torus.csv", &t.to_field_table())?;
        write_table(run, "profile.csv", &["shell", "mean"], &shell_means(t))?;
        summary["sum"] = json!(t.sum());
    }
    run.json("summary.json", &summary)?;
    if a.out.plot {
        plot_file(run, PlotKind::Profile, "profile.csv", "profile.svg", Annotations::default())?;
    }
    if a.check_plateau {
        let rep = plateau_check_srw(a.dim, a.period, z, a.c3)?;
        run.json("plateau.json", &rep)?;
        if rep.asserted && !rep.pass {
            return Err(CliError::Assertion(format!(
                "plateau bounds fail: scaled difference in [{}, {}]",
                rep.min_scaled, rep.max_scaled
            )));
        }
    }
    Ok(())
}

fn parse_geometry(s: &str, dim: usize) -> CliResult<Geometry> {
    if s == "zd" {
        return Ok(Geometry::lattice(dim)?);
    }
    match s.strip_prefix("torus:").map(str::parse::<usize>) {
        Some(Ok(r)) => Ok(Geometry::torus(dim, r)?),
        _ => Err(config(format!("--geometry must be zd or torus:<period>, got {s:?}"))),
    }
}

fn wsaw(a: &WsawArgs, run: &mut Run) -> CliResult<()> {
    let geometry = parse_geometry(&a.geometry, a.dim)?;
    let opts = EnumOptions { override_budget: a.override_budget, ..Default::default() };
    if a.observable == Observable::UnfoldCheck {
        let r = geometry.period().ok_or_else(|| config("unfold-check needs --geometry torus:<period>"))?;
        if !(0.0..=1.0).contains(&a.beta) {
            return Err(config("beta must lie in [0, 1]"));
        }
        let rep = unfolding_check(a.dim, r, a.nmax, a.beta)?;
        run.json("unfold.json", &rep)?;
        if !rep.pass() {
            return Err(CliError::Assertion(format!("unfolding check failed: {rep:?}")));
        }
        return Ok(());
    }
    let params = WsawParams { geometry, beta: a.beta, nmax: a.nmax };
    let series = enumerate_two_point(&params, opts)?;
    series.write_csv(run.create("series.csv")?)?;
    let chi_n = series.chi_coeffs();
    let z = fugacity(&a.fugacity, a.dim);
    match a.observable {
        Observable::Series => {
            run.json("summary.json", &json!({ "params": params, "chi_coefficients": chi_n }))?;
        }
        Observable::Chi => {
            let v = z.map(|z| susceptibility(&series, z)).transpose()?;
            run.json("chi.json", &json!({ "z": z, "chi": v.map(|v| v.value), "tail_flag": v.map(|v| v.tail_flag), "chi_coefficients": chi_n }))?;
        }
        Observable::Bubble => {
            let z = need_z(&a.fugacity, a.dim, "the bubble")?;
            let b = bubble(&series, z, a.m)?;
            run.json("bubble.json", &json!({ "z": z, "m": a.m, "bubble": b }))?;
        }
        Observable::Mass => {
            let z = need_z(&a.fugacity, a.dim, "the mass")?;
            let window = match &a.window {
                Some(w) => parse_window(w)?,
                None => (1, (a.nmax / 2).max(4) as i64),
            };
            let fit = mass_estimate(&series, z, window)?;
            let rows: Vec<Vec<f64>> = (window.0..=window.1)
                .map(|n| vec![n as f64, series.value(z, &LatticePoint::on_axis(a.dim, n)), fit.predict(n as f64)])
                .collect();
            write_table(run, "decay.csv", &["n", "value", "fit"], &rows)?;
            run.json("mass.json", &json!({ "z": z, "window": window, "fit": fit }))?;
            if a.out.plot {
                let ann = Annotations { residual: Some(fit.residual), ..Default::default() };
                plot_file(run, PlotKind::LoglogFit, "decay.csv", "decay.svg", ann)?;
            }
        }
        Observable::Zc => {
            let e = zc_estimate(&series)?;
            let amp = chi_amplitude(&series, e.value);
            run.json("zc.json", &json!({ "estimate": e, "chi_amplitude": amp, "omega": omega(a.dim) }))?;
        }
        Observable::UnfoldCheck => unreachable!(),
    }
    Ok(())
}

fn parse_estimator(s: &str) -> CliResult<Estimator> {
    if s == "geometric" {
        return Ok(Estimator::Geometric);
    }
    match s.strip_prefix("fixed:").map(str::parse::<usize>) {
        Some(Ok(nmax)) => Ok(Estimator::FixedLength { nmax }),
        _ => Err(config(format!("--estimator must be geometric or fixed:<nmax>, got {s:?}"))),
    }
}

fn lattice_series(dim: usize, beta: f64, nmax: usize) -> CliResult<SeriesTable> {
    let p = WsawParams { geometry: Geometry::lattice(dim)?, beta, nmax };
    Ok(enumerate_two_point(&p, EnumOptions::default())?)
}

fn wsaw_mc(a: &WsawMcArgs, run: &mut Run) -> CliResult<()> {
    let estimator = parse_estimator(&a.estimator)?;
    let zc = || -> CliResult<f64> {
        match a.zc {
            Some(z) => Ok(z),
            None if a.beta == 0.0 => Ok(1.0 / omega(a.dim)),
            None => Ok(zc_estimate(&lattice_series(a.dim, a.beta, a.zc_nmax)?)?.value),
        }
    };
    if let Some(list) = &a.periods {
        let periods: Vec<usize> = list
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| config(format!("bad period {s:?}"))))
            .collect::<CliResult<_>>()?;
        let c4 = a.window.ok_or_else(|| config("--periods needs --window"))?;
        let zc = zc()?;
        let series = lattice_series(a.dim, a.beta, a.zc_nmax)?;
        let chi = |z: f64| susceptibility(&series, z).map(|v| v.value).unwrap_or(f64::NAN);
        let rep = window_susceptibility(
            a.dim,
            a.beta,
            &periods,
            zc,
            WindowRule::Window { c4 },
            &chi,
            a.samples,
            a.seed,
            a.shards,
            estimator,
        )?;
        let rows: Vec<Vec<f64>> = rep
            .points
            .iter()
            .map(|p| vec![p.period as f64, p.z, p.chi_torus.mean, p.chi_torus.stderr, p.chi_lattice])
            .collect();
        write_table(run, "window.csv", &["period", "z", "chi", "stderr", "chi_lattice"], &rows)?;
        run.json("window.json", &rep)?;
        if a.out.plot {
            let ann = Annotations { reference_slope: Some(a.dim as f64 / 2.0), ..Default::default() };
            plot_file(run, PlotKind::WindowScaling, "window.csv", "window.svg", ann)?;
        }
        return Ok(());
    }
    let period = a.period.ok_or_else(|| config("give --period or --periods"))?;
    let z = match (fugacity(&a.fugacity, a.dim), a.window) {
        (Some(z), None) => z,
        (None, Some(c4)) => WindowSpec { dim: a.dim, period, beta: a.beta, zc: zc()?, rule: WindowRule::Window { c4 } }.resolve()?,
        _ => return Err(config("give one of --z, --z-omega, --window")),
    };
    let mc = sample_two_point(a.dim, period, a.beta, z, a.samples, a.seed, a.shards, estimator)?;
    mc.write_csv(run.create("mc.csv")?)?;
    let rows: Vec<Vec<f64>> =
        shell_profile(&mc).iter().map(|s| vec![s.shell as f64, s.mean, s.stderr, s.sites as f64]).collect();
    write_table(run, "profile.csv", &["shell", "mean", "stderr", "sites"], &rows)?;
    run.json(
        "summary.json",
        &json!({
            "dim": a.dim, "period": period, "beta": a.beta, "z": z, "z_omega": z * omega(a.dim),
            "estimator": estimator, "samples": a.samples, "seed": a.seed, "shards": a.shards, "chi": mc.chi,
        }),
    )?;
    if a.out.plot {
        plot_file(run, PlotKind::Profile, "profile.csv", "profile.svg", Annotations::default())?;
    }
    Ok(())
}

fn lace(a: &LaceArgs, run: &mut Run) -> CliResult<()> {
    let z = need_z(&a.fugacity, a.dim, "lace")?;
    let p = WsawParams { geometry: Geometry::lattice(a.dim)?, beta: a.beta, nmax: a.nmax };
    let series = enumerate_two_point(&p, EnumOptions { override_budget: a.override_budget, ..Default::default() })?;
    let pis = pi_series(&series, a.grid)?;
    let sol = decompose(&pis, z, a.tilt)?;
    let identity_residual = pis.convolution_residual(z);
    run.json(
        "report.json",
        &json!({
            "lambda": sol.lambda,
            "mu_omega": sol.mu_omega,
            "pi_moment0": sol.pi_moment0,
            "pi_moment2": sol.pi_moment2,
            "e_moment_residuals": sol.e_moment_residuals,
            "f_sup_weighted": sol.f_sup_weighted,
            "identity_residual": identity_residual,
            "details": sol,
        }),
    )?;
    write_orthant(run, "pi.csv", &sol.pi)?;
    write_orthant(run, "e.csv", &sol.e)?;
    write_orthant(run, "f.csv", &sol.f)?;
    if a.check {
        let tol = a.check_tolerance;
        let ok = sol.e_moment_residuals.iter().all(|r| r.abs() <= tol * (1.0 + sol.pi_abs_sum))
            && identity_residual <= tol
            && sol.f_route_residual <= tol;
        if !ok {
            return Err(CliError::Assertion(format!(
                "lace identities fail: E moments {:?}, G*F residual {identity_residual:e}, f routes {:e}",
                sol.e_moment_residuals, sol.f_route_residual
            )));
        }
    }
    Ok(())
}

pub fn plot(a: &PlotArgs) -> CliResult<()> {
    let mut ann = Annotations { title: a.title.clone(), reference_slope: a.reference_slope, ..Default::default() };
    if let Some(f) = &a.fit {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(f)?)?;
        ann.residual = v["residual"].as_f64().or(v["fit"]["residual"].as_f64());
    }
    let input = File::open(&a.input).map_err(|e| config(format!("cannot open {}: {e}", a.input.display())))?;
    let body = render(a.kind, input, &ann)?;
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&a.output, body)?;
    Ok(())
}
