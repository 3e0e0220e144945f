//! One runner per experiment kind. Runners return tables, a JSON result block
//! and named self-checks; writing files is left to the caller.

use nilflow::analysis::{
    chebyshev_degree, empirical_distribution_with, ks_distance, leaf_function, log_grid, second_moment_track,
    sublevel_measure, track_spread, valency_bound, ValencyRadii,
};
use nilflow::birkhoff::{weyl_grid_moments, weyl_partial_sums, weyl_sum, weyl_sum_direct, WeylSumSpec};
use nilflow::io::{Cell, Column, Table};
use nilflow::line_model::{c_constant, l2_convergence_residual, LineFunction, LineGrid};
use nilflow::moduli::{dc_integral, delta_orbit, DEFAULT_STEP};
use nilflow::spectral::CharLabel;
use nilflow::timechange::{correlation_series, decay_fit, flow_v_many, TimeChange};
use nilflow::{par, rng, stats, Complex64};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value <= limit }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<(&'static str, Table)>,
    pub results: Value,
    pub checks: Vec<Check>,
    /// A numerical guard that tripped after the data were produced.
    pub guard: Option<String>,
}

impl Outcome {
    fn new(tables: Vec<(&'static str, Table)>, results: Value) -> Self {
        Outcome { tables, results, checks: Vec::new(), guard: None }
    }
}

fn cols(spec: &[(&str, &str)]) -> Vec<Column> {
    spec.iter().map(|(n, d)| Column::new(n, d)).collect()
}

/// CSV files written by each experiment, with their documented columns.
pub fn schema(kind: Kind) -> Vec<(&'static str, Vec<Column>)> {
    match kind {
        Kind::WeylSum => vec![(
            "partial_sums.csv",
            cols(&[("j", "number of terms"), ("re", "Re S_j"), ("im", "Im S_j"), ("abs", "|S_j|")]),
        )],
        Kind::L2Identity => vec![(
            "l2_identity.csv",
            cols(&[
                ("terms", "J"),
                ("grid", "number Q of y-grid points"),
                ("l2", "(1/Q) Σ_q |S_J(q/Q, z)|²"),
                ("relative_error", "|l2 − J|/J"),
                ("mean_re", "Re of the grid mean of S_J"),
                ("mean_im", "Im of the grid mean of S_J"),
                ("mean_abs", "modulus of the grid mean"),
            ]),
        )],
        Kind::LineModel => vec![(
            "residuals.csv",
            cols(&[
                ("t", "translation time T"),
                ("residual", "L² distance to the theta limit"),
                ("relative", "residual / ‖f‖₂"),
            ]),
        )],
        Kind::LimitDist => vec![
            (
                "quantiles.csv",
                cols(&[
                    ("time", "integration time T"),
                    ("level", "quantile level q"),
                    ("real", "q-quantile of Re T^{-1/2} I_T"),
                    ("modulus", "q-quantile of |T^{-1/2} I_T|"),
                ]),
            ),
            (
                "ks.csv",
                cols(&[
                    ("time_a", "first time"),
                    ("time_b", "second time"),
                    ("ks_real", "KS distance of the real parts"),
                    ("ks_modulus", "KS distance of the moduli"),
                ]),
            ),
        ],
        Kind::Sublevel => vec![(
            "sublevel.csv",
            cols(&[
                ("epsilon", "threshold ε"),
                ("measure", "fraction of samples below the threshold"),
                ("ci_lo", "95% Wilson lower bound"),
                ("ci_hi", "95% Wilson upper bound"),
                ("budget_ok", "1 if the substitution budget is below ε T^{1/2}/10"),
            ]),
        )],
        Kind::Valency => vec![(
            "leaves.csv",
            cols(&[
                ("leaf", "leaf index"),
                ("x", "base point x"),
                ("y", "base point y"),
                ("z", "base point z"),
                ("z0", "central offset of the leaf"),
                ("scale", "leaf scale ℓ (y = ℓζ)"),
                ("m_r", "max |f| on |ζ| = r"),
                ("o_t", "diameter of f on [−t, t]"),
                ("bound", "valency bound"),
                ("observed", "largest winding count observed"),
                ("chebyshev_degree", "empirical Remez exponent on [−r, r]"),
            ]),
        )],
        Kind::Correlation => vec![
            (
                "stretch.csv",
                cols(&[
                    ("t", "V-time"),
                    ("max_abs_stretch", "max over samples of |D_t|"),
                    ("normalized", "max |D_t| / t^{1/2}"),
                ]),
            ),
            (
                "correlation.csv",
                cols(&[
                    ("t", "V-time"),
                    ("re", "Re corr(t)"),
                    ("im", "Im corr(t)"),
                    ("abs", "|corr(t)|"),
                    ("stderr", "delta-method standard error"),
                ]),
            ),
        ],
        Kind::RenormTrack => vec![
            ("excursion.csv", cols(&[("t", "renormalization time"), ("delta", "cusp excursion δ_M(g_t a)")])),
            (
                "moments.csv",
                cols(&[
                    ("t", "renormalization time"),
                    ("time", "integration time base_time·e^t"),
                    ("second_moment", "E|T^{-1/2} I_T|²"),
                    ("stderr", "standard error"),
                ]),
            ),
        ],
    }
}

fn table(kind: Kind, file: &str) -> Table {
    let columns = schema(kind).into_iter().find(|(f, _)| *f == file).expect("file is in the schema").1;
    Table::new(columns)
}

pub fn run(kind: Kind, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match kind {
        Kind::WeylSum => weyl_sum_run(cfg),
        Kind::L2Identity => l2_identity_run(cfg),
        Kind::LineModel => line_model_run(cfg),
        Kind::LimitDist => limit_dist_run(cfg),
        Kind::Sublevel => sublevel_run(cfg),
        Kind::Valency => valency_run(cfg),
        Kind::Correlation => correlation_run(cfg),
        Kind::RenormTrack => renorm_track_run(cfg),
    }
}

fn first_label(cfg: &ExperimentConfig) -> Result<CharLabel, CliError> {
    let c = cfg
        .observable
        .components
        .first()
        .ok_or_else(|| CliError::Config("observable: `components` must not be empty".into()))?;
    Ok(CharLabel::new(c.m, c.n)?)
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn positive(name: &str, ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive")))
    }
}

fn weyl_sum_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.weyl_sum;
    positive("weyl_sum.stride", p.stride > 0)?;
    let ssp = cfg.build_frame()?.return_params()?;
    let spec = WeylSumSpec { label: first_label(cfg)?, ssp, y: p.y, z: p.z, terms: p.terms };
    let mut t = table(Kind::WeylSum, "partial_sums.csv");
    for (j, s) in weyl_partial_sums(&spec, p.stride) {
        t.push(vec![j.into(), s.re.into(), s.im.into(), s.norm().into()]);
    }
    let total = weyl_sum(&spec);
    let check = WeylSumSpec { terms: p.terms.min(p.check_terms), ..spec };
    let accuracy = (weyl_sum(&check) - weyl_sum_direct(&check)).norm();
    let mut out = Outcome::new(
        vec![("partial_sums.csv", t)],
        json!({
            "sum": complex_json(total),
            "abs": total.norm(),
            "normalized": total.norm() / (p.terms.max(1) as f64).sqrt(),
            "accuracy_terms": check.terms,
            "accuracy_vs_direct": accuracy,
        }),
    );
    out.checks.push(Check::at_most("kernel accuracy vs direct evaluation", accuracy, p.tolerance));
    Ok(out)
}

fn l2_identity_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.l2_identity;
    let label = first_label(cfg)?;
    let ssp = cfg.build_frame()?.return_params()?;
    let mut t = table(Kind::L2Identity, "l2_identity.csv");
    let mut worst_l2 = 0.0f64;
    let mut worst_mean = 0.0f64;
    for &j in &p.terms {
        positive("l2_identity.terms", j > 0)?;
        let grid = (4 * label.ladder_step(ssp.lattice) as usize * j as usize).next_power_of_two();
        let m = weyl_grid_moments(label, &ssp, p.z, j, grid)?;
        let rel = (m.l2 - j as f64).abs() / j as f64;
        let modulus = m.mean.norm();
        worst_l2 = worst_l2.max(rel);
        worst_mean = worst_mean.max(modulus.min((modulus - 1.0).abs()));
        t.push(vec![
            j.into(),
            grid.into(),
            m.l2.into(),
            rel.into(),
            m.mean.re.into(),
            m.mean.im.into(),
            modulus.into(),
        ]);
    }
    let mut out = Outcome::new(
        vec![("l2_identity.csv", t)],
        json!({ "max_relative_error": worst_l2, "max_mean_distance_to_0_or_1": worst_mean }),
    );
    out.checks.push(Check::at_most("|‖S_J‖² − J|/J", worst_l2, p.tolerance));
    out.checks.push(Check::at_most("distance of |mean| to {0, 1}", worst_mean, p.tolerance));
    Ok(out)
}

fn line_model_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.line_model;
    if p.grid_log2 > 26 {
        return Err(CliError::Config("line_model.grid_log2 must be at most 26".into()));
    }
    let grid = LineGrid::new(1usize << p.grid_log2, p.half_width)?;
    let f = LineFunction::gaussian(grid);
    let norm = f.l2_norm();
    let mut t = table(Kind::LineModel, "residuals.csv");
    let mut residuals = Vec::with_capacity(p.times.len());
    for &time in &p.times {
        let r = l2_convergence_residual(&f, time)?;
        residuals.push(r);
        t.push(vec![time.into(), r.into(), (r / norm).into()]);
    }
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    let c = c_constant();
    let mut out = Outcome::new(
        vec![("residuals.csv", t)],
        json!({
            "norm": norm,
            "round_trip_error": f.round_trip_error(),
            "strictly_decreasing": decreasing,
            "final_relative": residuals.last().map(|r| r / norm),
            "c_constant": c,
            "c_constant_error": (c - std::f64::consts::TAU.sqrt()).abs(),
        }),
    );
    out.checks.push(Check {
        name: "residuals strictly decreasing".into(),
        value: decreasing as u8 as f64,
        limit: 1.0,
        pass: decreasing,
    });
    Ok(out)
}

fn limit_dist_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.limit_dist;
    let frame = cfg.build_frame()?;
    let f = cfg.build_observable()?;
    let times = match (&p.times, frame.period) {
        (Some(t), _) => t.clone(),
        (None, Some(period)) => (0..p.scales).map(|k| p.base_time * (period * k as f64).exp()).collect(),
        (None, None) => {
            return Err(CliError::Config(
                "limit_dist: frame has no renormalization period; give explicit `times`".into(),
            ))
        }
    };
    positive("limit_dist.quantiles", p.quantiles > 0)?;
    let dists = times
        .iter()
        .map(|&t| empirical_distribution_with(&f, &frame, t, p.samples, cfg.seed, p.sampling))
        .collect::<nilflow::Result<Vec<_>>>()?;
    let mut q = table(Kind::LimitDist, "quantiles.csv");
    for d in &dists {
        for k in 1..=p.quantiles {
            let level = k as f64 / (p.quantiles + 1) as f64;
            q.push(vec![d.time.into(), level.into(), d.real.quantile(level).into(), d.modulus.quantile(level).into()]);
        }
    }
    let mut ks = table(Kind::LimitDist, "ks.csv");
    let mut worst = 0.0f64;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            let (a, b) = (&dists[i], &dists[j]);
            let kr = ks_distance(&a.real, &b.real);
            let km = ks_distance(&a.modulus, &b.modulus);
            worst = worst.max(kr).max(km);
            ks.push(vec![a.time.into(), b.time.into(), kr.into(), km.into()]);
        }
    }
    Ok(Outcome::new(
        vec![("quantiles.csv", q), ("ks.csv", ks)],
        json!({
            "times": times,
            "max_ks": worst,
            "second_moments": dists.iter().map(|d| d.second_moment).collect::<Vec<_>>(),
            "q999_modulus": dists.iter().map(|d| d.modulus.quantile(0.999)).collect::<Vec<_>>(),
        }),
    ))
}

fn sublevel_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.sublevel;
    let frame = cfg.build_frame()?;
    let f = cfg.build_observable()?;
    let eps = log_grid(p.eps_lo, p.eps_hi, p.points);
    let rep = sublevel_measure(&f, &frame, p.time, &eps, p.samples, cfg.seed, p.regime)?;
    let mut t = table(Kind::Sublevel, "sublevel.csv");
    for pt in &rep.points {
        t.push(vec![
            pt.epsilon.into(),
            pt.measure.into(),
            pt.ci_lo.into(),
            pt.ci_hi.into(),
            Cell::Int(pt.budget_ok as i64),
        ]);
    }
    Ok(Outcome::new(
        vec![("sublevel.csv", t)],
        json!({
            "delta_hat": rep.delta_hat,
            "delta_ci": [rep.delta_ci.0, rep.delta_ci.1],
            "r2": rep.r2,
            "fitted_points": rep.fitted,
            "monotone": rep.is_monotone(),
            "error_budget": rep.error_budget,
        }),
    ))
}

fn valency_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.valency;
    let frame = cfg.build_frame()?;
    let f = cfg.build_observable()?;
    let radii = ValencyRadii { r: p.r, t: p.t };
    radii.constant()?;
    let rows = par::map_indexed(p.leaves, |i| -> nilflow::Result<Vec<Cell>> {
        let mut r = rng::stream(cfg.seed, i as u64);
        let x = rng::uniform_point(&mut r, frame.lattice);
        let z0: f64 = r.gen_range(0.0..1.0);
        let leaf = leaf_function(&f, &frame, x, p.time, z0, p.r, p.log_budget)?;
        let rep = valency_bound(|z| leaf.eval(z), radii)?;
        let n = p.degree_samples.max(2);
        let moduli = (0..n)
            .map(|k| {
                let u = -p.r + 2.0 * p.r * k as f64 / (n - 1) as f64;
                Ok(leaf.eval(Complex64::new(u, 0.0))?.norm())
            })
            .collect::<nilflow::Result<Vec<f64>>>()?;
        Ok(vec![
            i.into(),
            x.x.into(),
            x.y.into(),
            x.z.into(),
            z0.into(),
            leaf.scale.into(),
            rep.m_r.into(),
            rep.o_t.into(),
            rep.bound.into(),
            Cell::Int(rep.observed as i64),
            chebyshev_degree(&moduli)?.into(),
        ])
    });
    let mut t = table(Kind::Valency, "leaves.csv");
    let mut exceed = 0usize;
    let mut degrees = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row?;
        if let (Cell::Float(bound), Cell::Int(obs), Cell::Float(d)) = (&row[8], &row[9], &row[10]) {
            exceed += (*obs as f64 > *bound) as usize;
            degrees.push(*d);
        }
        t.push(row);
    }
    let max = degrees.iter().cloned().fold(0.0, f64::max);
    let median = stats::median(&mut degrees).unwrap_or(f64::NAN);
    let mut out = Outcome::new(
        vec![("leaves.csv", t)],
        json!({
            "leaves": p.leaves,
            "leaves_exceeding_bound": exceed,
            "degree_median": median,
            "degree_max": max,
            "degree_ratio": max / median,
        }),
    );
    out.checks.push(Check::at_most("leaves exceeding the valency bound", exceed as f64, 0.0));
    Ok(out)
}

fn correlation_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.correlation;
    let frame = cfg.build_frame()?;
    let f = cfg.build_observable()?;
    let tc = TimeChange::new(f.clone(), p.amplitude, &frame)?;

    let rows = par::map_indexed(p.stretch_samples, |i| -> nilflow::Result<Vec<f64>> {
        let x = rng::uniform_point(&mut rng::stream(cfg.seed, i as u64), frame.lattice);
        Ok(flow_v_many(&tc, x, &p.stretch_times)?.iter().map(|v| v.stretch.abs()).collect())
    })
    .into_iter()
    .collect::<nilflow::Result<Vec<_>>>()?;
    let mut st = table(Kind::Correlation, "stretch.csv");
    let mut band = Vec::with_capacity(p.stretch_times.len());
    for (k, &t) in p.stretch_times.iter().enumerate() {
        let m = rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        band.push(m / t.sqrt());
        st.push(vec![t.into(), m.into(), (m / t.sqrt()).into()]);
    }

    let grid = log_grid(p.t_lo, p.t_hi, p.points);
    let series = correlation_series(&f, &f, &tc, &grid, p.samples, cfg.seed)?;
    let mut ct = table(Kind::Correlation, "correlation.csv");
    for pt in &series.points {
        ct.push(vec![pt.t.into(), pt.value.re.into(), pt.value.im.into(), pt.value.norm().into(), pt.stderr.into()]);
    }
    let (fit, guard) = match decay_fit(&series) {
        Ok(fit) => (serde_json::to_value(&fit)?, None),
        Err(e) if e.is_numerical_guard() => (Value::Null, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let band_ratio = band.iter().cloned().fold(0.0, f64::max) / band.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new(
        vec![("stretch.csv", st), ("correlation.csv", ct)],
        json!({
            "alpha_min": tc.alpha_min,
            "alpha_max": tc.alpha_max,
            "stretch_band": band,
            "stretch_band_ratio": band_ratio,
            "decay_fit": fit,
        }),
    );
    out.guard = guard;
    Ok(out)
}

fn renorm_track_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.renorm_track;
    let frame = cfg.build_frame()?;
    let f = cfg.build_observable()?;
    positive("renorm_track.points", p.points > 0)?;
    let deltas = delta_orbit(&frame, p.horizon, p.points)?;
    let h = p.horizon / p.points as f64;
    let mut ex = table(Kind::RenormTrack, "excursion.csv");
    for (k, d) in deltas.iter().enumerate() {
        ex.push(vec![(k as f64 * h).into(), (*d).into()]);
    }
    let m = p.moment_points.max(1);
    let ts: Vec<f64> = (0..m).map(|k| p.horizon * k as f64 / (m.max(2) - 1) as f64).collect();
    let times: Vec<f64> = ts.iter().map(|t| p.base_time * t.exp()).collect();
    let track = second_moment_track(&f, &frame, &times, p.samples, cfg.seed, p.sampling)?;
    let mut mt = table(Kind::RenormTrack, "moments.csv");
    for (t, pt) in ts.iter().zip(&track) {
        mt.push(vec![(*t).into(), pt.time.into(), pt.second_moment.into(), pt.stderr.into()]);
    }
    let dc = dc_integral(&frame, p.horizon, DEFAULT_STEP)?;
    Ok(Outcome::new(
        vec![("excursion.csv", ex), ("moments.csv", mt)],
        json!({
            "max_delta": deltas.iter().cloned().fold(0.0, f64::max),
            "dc_integral": dc.value,
            "moment_spread": track_spread(&track, track.len()),
        }),
    ))
}
