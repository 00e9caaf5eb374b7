use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use slekit::conformal::SlitParams;
use slekit::formulas;
use slekit::io::{
    fit_json, write_estimates_csv, write_lattice_path_csv, write_points_csv, write_table_csv,
    write_trace_csv,
};
use slekit::lattice::build_domain;
use slekit::loewner::{chordal_trace, radial_trace};
use slekit::models;
use slekit::montecarlo::{
    self, fit_power_law, map_trials, run_trials, trial_rng, trial_seed, EstimateRecord,
};
use slekit::sle::{self, RestrictionOptions, SleParams};
use slekit::{DrivingKind, LatticeDomain, LatticeKind, Shape};

use crate::args::*;
use crate::config::{required, CliError, CliResult};

/// Artifacts and results of one run.
pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
    pub artifacts: Vec<String>,
    pub result: Map<String, Value>,
}

impl Ctx {
    pub fn new(seed: u64, out: PathBuf) -> Self {
        Ctx {
            seed,
            out,
            artifacts: Vec::new(),
            result: Map::new(),
        }
    }

    fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> slekit::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        std::fs::write(&path, buf)?;
        self.artifacts.push(path.display().to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> CliResult<()> {
        self.write(name, |buf| {
            buf.extend(
                serde_json::to_string_pretty(v)
                    .expect("serializable")
                    .bytes(),
            );
            buf.push(b'\n');
            Ok(())
        })
    }

    fn estimates(&mut self, recs: &[EstimateRecord]) -> CliResult<()> {
        self.write("estimates.csv", |buf| write_estimates_csv(buf, recs))
    }

    /// Writes `fit.json` unless some frequency is zero, in which case the
    /// summary carries `"slope": null`.
    fn fit(&mut self, recs: &[EstimateRecord]) -> CliResult<()> {
        if recs.len() < 3 || recs.iter().any(|r| !(r.value > 0.0)) {
            self.set("slope", Value::Null);
            return Ok(());
        }
        let fit = fit_power_law(recs)?;
        self.write("fit.json", |buf| {
            buf.extend(fit_json(&fit).bytes());
            buf.push(b'\n');
            Ok(())
        })?;
        self.set("slope", fit.slope);
        self.set("slope_stderr", fit.slope_stderr);
        self.set("intercept", fit.intercept);
        Ok(())
    }

    fn set(&mut self, key: &str, v: impl Serialize) {
        self.result.insert(
            key.to_string(),
            serde_json::to_value(v).expect("serializable"),
        );
    }
}

fn check_trials(n: u64) -> CliResult<u64> {
    if n == 0 {
        return Err(CliError::Config("`trials` must be at least 1".into()));
    }
    Ok(n)
}

fn record_json(r: &EstimateRecord) -> Value {
    json!({"scale": r.scale, "value": r.value, "stderr": r.stderr, "trials": r.trials})
}

pub fn trace(a: TraceArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let kind = match a.kind.unwrap_or(TraceKind::Chordal) {
        TraceKind::Chordal => DrivingKind::Chordal,
        TraceKind::Radial => DrivingKind::Radial,
    };
    let p = SleParams::new(kappa, a.t.unwrap_or(1.0), a.dt.unwrap_or(1e-3), ctx.seed)?;
    let d = sle::sample_driving(&p, kind)?;
    let tr = match kind {
        DrivingKind::Chordal => chordal_trace(&d)?,
        DrivingKind::Radial => radial_trace(&d)?,
    };
    ctx.write("trace.csv", |buf| write_trace_csv(buf, &tr))?;
    let tip = *tr.tips.last().expect("trace has a tip");
    ctx.set("steps", d.steps());
    ctx.set("flagged_steps", tr.flagged.len());
    ctx.set("tip", [tip.re, tip.im]);
    Ok(())
}

pub fn sle_sample(a: SleSampleArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let p = SleParams::new(kappa, a.t.unwrap_or(1.0), a.dt.unwrap_or(1e-3), ctx.seed)?;
    let n = check_trials(a.samples.unwrap_or(100))?;
    let tips: Vec<_> = map_trials(n, ctx.seed, 0, |_, rng| {
        let d = sle::sample_driving_with(&p, DrivingKind::Chordal, rng)?;
        Ok(sle::final_tip(&d))
    })
    .into_iter()
    .collect::<slekit::Result<_>>()?;
    ctx.write("tips.csv", |buf| {
        write_points_csv(buf, tips.iter().enumerate().map(|(i, &z)| (i as f64, z)))
    })?;
    let mut m: Vec<f64> = tips.iter().map(|z| z.norm() / p.horizon.sqrt()).collect();
    m.sort_by(f64::total_cmp);
    ctx.set("median_scaled_modulus", m[m.len() / 2]);
    Ok(())
}

pub fn side_hit(a: SideHitArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let (l, r) = (a.a.unwrap_or(-1.0), a.c.unwrap_or(1.0));
    let p = SleParams::new(kappa, a.t.unwrap_or(1e4), a.dt.unwrap_or(1e-2), ctx.seed)?;
    let rep = sle::side_hit_estimate(l, r, &p, check_trials(a.trials.unwrap_or(4000))?, 0)?;
    ctx.estimates(std::slice::from_ref(&rep.record))?;
    ctx.set("value", rep.record.value);
    ctx.set("stderr", rep.record.stderr);
    ctx.set("exact", formulas::side_hit_probability(kappa, l, r)?);
    ctx.set("inconclusive", rep.inconclusive);
    Ok(())
}

pub fn radial_survival(a: RadialSurvivalArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let times = a.times.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let checks = sle::radial_general_identity(
        a.x.unwrap_or(PI),
        a.b.unwrap_or(0.0),
        &times,
        kappa,
        check_trials(a.trials.unwrap_or(10_000))?,
        ctx.seed,
        0,
    )?;
    let recs: Vec<EstimateRecord> = checks.iter().map(|c| c.record.clone()).collect();
    ctx.estimates(&recs)?;
    let rows: Vec<Value> = times
        .iter()
        .zip(&checks)
        .map(|(t, c)| json!({"t": t, "value": c.record.value, "stderr": c.record.stderr, "exact": c.exact, "z": c.z_score()}))
        .collect();
    ctx.set("checks", rows);
    Ok(())
}

fn nearest_interior(d: &LatticeDomain, target: slekit::ComplexPoint) -> CliResult<usize> {
    d.interior()
        .into_iter()
        .min_by(|&u, &v| {
            (d.position(u) - target)
                .norm()
                .total_cmp(&(d.position(v) - target).norm())
        })
        .ok_or_else(|| CliError::Config("the domain has no interior vertex".into()))
}

pub fn lerw(a: LerwArgs, ctx: &mut Ctx) -> CliResult<()> {
    let size = a.size.unwrap_or(1.0);
    let (shape, center) = match a.shape.unwrap_or(ShapeArg::Disc) {
        ShapeArg::Disc => (Shape::Disc { radius: size }, 0.0.into()),
        ShapeArg::Square => (Shape::Square { half: size }, 0.0.into()),
        ShapeArg::Triangle => (
            Shape::Triangle { side: size },
            slekit::ComplexPoint::new(0.5 * size, size / (2.0 * 3f64.sqrt())),
        ),
    };
    let kind = match a.lattice.unwrap_or(LatticeArg::Square) {
        LatticeArg::Square => LatticeKind::Square,
        LatticeArg::Triangular => LatticeKind::Triangular,
    };
    let mesh = a.mesh.unwrap_or(0.05);
    let d = build_domain(shape, mesh, kind)?;
    let start = nearest_interior(&d, center)?;
    let n = check_trials(a.samples.unwrap_or(100))?;
    let paths: Vec<_> = map_trials(n, ctx.seed, 0, |_, rng| {
        models::sample_lerw(&d, start, &d.absorbing, rng, None, false)
    })
    .into_iter()
    .collect::<slekit::Result<_>>()?;
    let first: Vec<[i64; 2]> = paths[0].iter().map(|&v| d.coords[v]).collect();
    ctx.write("lerw.csv", |buf| write_lattice_path_csv(buf, &first))?;
    let lens: Vec<f64> = paths.iter().map(|p| (p.len() - 1) as f64).collect();
    let (value, stderr) = montecarlo::mean_stderr(&lens);
    let rec = EstimateRecord {
        name: "lerw_steps".into(),
        scale: mesh,
        value,
        stderr,
        trials: n,
        seed: ctx.seed,
    };
    ctx.estimates(std::slice::from_ref(&rec))?;
    ctx.set("vertices", d.len());
    ctx.set("mean_steps", value);
    Ok(())
}

fn grid(w: Option<usize>, h: Option<usize>) -> CliResult<LatticeDomain> {
    let (w, h) = (w.unwrap_or(16), h.unwrap_or(16));
    if w == 0 || h == 0 {
        return Err(CliError::Config(
            "`width` and `height` must be positive".into(),
        ));
    }
    Ok(LatticeDomain::rectangle(w, h))
}

pub fn ust(a: UstArgs, ctx: &mut Ctx) -> CliResult<()> {
    let d = grid(a.width, a.height)?;
    let order: Vec<usize> = (0..d.len()).collect();
    let t = models::wilson_ust(&d, &order, &mut trial_rng(ctx.seed, 0))?;
    let far = d.len() - 1;
    let branch: Vec<[i64; 2]> = models::tree_path(&t, far, t.root)?
        .iter()
        .map(|&v| d.coords[v])
        .collect();
    let tree = json!({
        "vertices": d.coords,
        "parent": t.parent,
        "root": t.root,
    });
    ctx.write_json("ust.json", &tree)?;
    ctx.write("branch.csv", |buf| write_lattice_path_csv(buf, &branch))?;
    ctx.set("edges", t.edges().len());
    ctx.set("branch_steps", branch.len() - 1);
    Ok(())
}

pub fn peano(a: PeanoArgs, ctx: &mut Ctx) -> CliResult<()> {
    let w = a.width.unwrap_or(16);
    let d = grid(a.width, a.height)?;
    let wired: Vec<usize> = (0..w).collect();
    let order: Vec<usize> = (0..d.len()).collect();
    let t = models::wilson_ust_wired(&d, &wired, &order, &mut trial_rng(ctx.seed, 0))?;
    let curve = models::ust_peano(&d, &t, &wired)?;
    ctx.write("peano.csv", |buf| {
        write_lattice_path_csv(buf, &curve.points)
    })?;
    ctx.set("points", curve.points.len());
    ctx.set("units", "quarter lattice spacings");
    Ok(())
}

pub fn perco_cross(a: PercoCrossArgs, ctx: &mut Ctx) -> CliResult<()> {
    let n = a.n.unwrap_or(64);
    let p = a.p.unwrap_or(0.5);
    let rec = models::rhombus_crossing_experiment(
        n,
        p,
        check_trials(a.trials.unwrap_or(10_000))?,
        ctx.seed,
        0,
    )?;
    ctx.estimates(std::slice::from_ref(&rec))?;
    let sample = models::percolation_sample_keyed(&models::rhombus(n), p, ctx.seed)?;
    let dump = models::rle_dump(&sample, ctx.seed);
    ctx.write("config.rle", |buf| {
        buf.extend(dump.bytes());
        Ok(())
    })?;
    ctx.set("value", rec.value);
    ctx.set("stderr", rec.stderr);
    Ok(())
}

pub fn cardy(a: CardyArgs, ctx: &mut Ctx) -> CliResult<()> {
    let n = a.n.unwrap_or(64);
    let trials = check_trials(a.trials.unwrap_or(10_000))?;
    let s = a.s.unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let mut recs = Vec::new();
    let mut rows = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let r = models::cardy_crossing_experiment(
            n,
            x,
            a.p.unwrap_or(0.5),
            trials,
            trial_seed(ctx.seed, i as u64),
            0,
        )?;
        rows.push(
            json!({"s": x, "value": r.record.value, "stderr": r.record.stderr, "exact": r.exact}),
        );
        recs.push(r.record);
    }
    ctx.estimates(&recs)?;
    ctx.set("points", rows);
    Ok(())
}

pub fn arms(a: ArmsArgs, ctx: &mut Ctx) -> CliResult<()> {
    let radii = a.radii.unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0]);
    let k = a.arms.unwrap_or(1);
    let recs = models::arm_experiment(
        a.r0.unwrap_or(1.0),
        &radii,
        k,
        a.p.unwrap_or(0.5),
        check_trials(a.trials.unwrap_or(4000))?,
        ctx.seed,
        0,
    )?;
    ctx.estimates(&recs)?;
    ctx.set("points", recs.iter().map(record_json).collect::<Vec<_>>());
    ctx.fit(&recs)?;
    ctx.set("expected_slope", -formulas::alpha_arm(k as u32));
    Ok(())
}

pub fn wedge(a: WedgeArgs, ctx: &mut Ctx) -> CliResult<()> {
    let n = a.n.unwrap_or(30);
    let trials = check_trials(a.trials.unwrap_or(100_000))?;
    let (counts, gof) = models::wedge_uniformity_experiment(n, trials, ctx.seed, 0)?;
    let recs: Vec<EstimateRecord> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let f = c as f64 / trials as f64;
            EstimateRecord {
                name: "wedge_hit".into(),
                scale: k as f64,
                value: f,
                stderr: (f * (1.0 - f) / trials as f64).sqrt(),
                trials,
                seed: ctx.seed,
            }
        })
        .collect();
    ctx.estimates(&recs)?;
    ctx.set("chi_square", gof.statistic);
    ctx.set("p_value", gof.p_value);
    Ok(())
}

pub fn excursion(a: ExcursionArgs, ctx: &mut Ctx) -> CliResult<()> {
    let hull = SlitParams::vertical(a.foot.unwrap_or(1.0), a.height.unwrap_or(1.0));
    let r = models::excursion_avoid_experiment(
        &hull,
        a.horizon.unwrap_or(50.0),
        a.dt.unwrap_or(1e-6),
        check_trials(a.trials.unwrap_or(4000))?,
        ctx.seed,
        0,
    )?;
    ctx.estimates(&[r.raw.clone(), r.completed.clone()])?;
    ctx.set("value", r.completed.value);
    ctx.set("stderr", r.completed.stderr);
    ctx.set("raw", r.raw.value);
    ctx.set("exact", r.exact);
    ctx.set("bias_bound", r.bias_bound);
    Ok(())
}

pub fn disconnect(a: DisconnectArgs, ctx: &mut Ctx) -> CliResult<()> {
    let radii = a.radii.unwrap_or_else(|| vec![4, 8, 16, 32]);
    let recs = montecarlo::disconnection_experiment(
        a.m.unwrap_or(4),
        &radii,
        check_trials(a.trials.unwrap_or(4000))?,
        ctx.seed,
        0,
    )?;
    ctx.estimates(&recs)?;
    ctx.set("points", recs.iter().map(record_json).collect::<Vec<_>>());
    ctx.fit(&recs)?;
    ctx.set("expected_slope", -formulas::eta(1));
    Ok(())
}

pub fn nonintersect(a: NonintersectArgs, ctx: &mut Ctx) -> CliResult<()> {
    let ns =
        a.ns.unwrap_or_else(|| (6..=12).map(|k| 1usize << k).collect());
    let recs = montecarlo::nonintersection_experiment(
        &ns,
        check_trials(a.trials.unwrap_or(20_000))?,
        ctx.seed,
        0,
    )?;
    ctx.estimates(&recs)?;
    ctx.set("points", recs.iter().map(record_json).collect::<Vec<_>>());
    ctx.fit(&recs)?;
    ctx.set("expected_slope", -formulas::xi(2) / 2.0);
    Ok(())
}

pub fn exponents(a: ExponentsArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let t = formulas::exponent_table(
        kappa,
        a.b.unwrap_or(0.0),
        a.k.unwrap_or(1),
        a.n.unwrap_or(1),
    )?;
    let v = serde_json::to_value(t).expect("serializable");
    ctx.write_json("exponents.json", &v)?;
    if let Value::Object(m) = v {
        ctx.result.extend(m);
    }
    Ok(())
}

pub fn formulas_cmd(a: FormulasArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = required(a.kappa, "kappa")?;
    let (foot, height) = (a.foot.unwrap_or(1.0), a.height.unwrap_or(1.0));
    let phi = formulas::slit_derivative_at_zero(foot, height)?;
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<f64>| {
        m.insert(k.to_string(), v.map_or(Value::Null, Value::from));
    };
    put(
        "hitting_cdf",
        formulas::hitting_cdf(kappa, a.z.unwrap_or(0.5)).ok(),
    );
    put(
        "side_hit_probability",
        formulas::side_hit_probability(kappa, a.a.unwrap_or(-1.0), a.c.unwrap_or(1.0)).ok(),
    );
    put("slit_derivative_at_zero", Some(phi));
    put(
        "restriction_avoid",
        Some(formulas::avoid_probability(phi, 0.625)?),
    );
    put(
        "excursion_avoid",
        Some(formulas::avoid_probability(phi, 1.0)?),
    );
    let v = Value::Object(m);
    ctx.write_json("formulas.json", &v)?;
    if let Value::Object(m) = v {
        ctx.result.extend(m);
    }
    Ok(())
}

pub fn removal_map(a: RemovalMapArgs, ctx: &mut Ctx) -> CliResult<()> {
    let kappa = a.kappa.unwrap_or(8.0 / 3.0);
    let hull = SlitParams::vertical(a.foot.unwrap_or(1.0), a.height.unwrap_or(1.0));
    let horizon = a.t.unwrap_or(1.0);
    let p = SleParams::new(kappa, horizon, a.dt.unwrap_or(1e-3), ctx.seed)?;
    let d = sle::sample_driving(&p, DrivingKind::Chordal)?;
    let traj = sle::evolve_removal_map(&d, &hull, &[], 16, 10)?;
    let rows: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| {
            vec![
                s.time,
                s.w,
                s.w_tilde,
                s.deriv_at_w,
                s.capacity,
                s.capacity_integral,
            ]
        })
        .collect();
    ctx.write("removal.csv", |buf| {
        write_table_csv(
            buf,
            &[
                "t",
                "w",
                "w_tilde",
                "deriv_at_w",
                "capacity",
                "capacity_integral",
            ],
            &rows,
        )
    })?;
    let opts = RestrictionOptions::default();
    let trials = check_trials(a.trials.unwrap_or(300))?;
    let inc = run_trials(
        "restriction_martingale_increment",
        horizon,
        trials,
        trial_seed(ctx.seed, 1),
        0,
        |_, rng| sle::removal_martingale_increment(&hull, kappa, horizon, &opts, rng),
    )?;
    let mut recs = vec![inc.record.clone()];
    ctx.set("stopped_at", traj.stopped_at);
    ctx.set("increment_mean", inc.record.value);
    ctx.set("increment_stderr", inc.record.stderr);
    ctx.set("failed_trials", inc.failures);
    let avoid = a.avoid_trials.unwrap_or(0);
    if avoid > 0 {
        let r = sle::restriction_avoidance_experiment(
            &hull,
            kappa,
            avoid,
            trial_seed(ctx.seed, 2),
            0,
            &opts,
        )?;
        ctx.set("avoid", r.record.value);
        ctx.set("avoid_stderr", r.record.stderr);
        ctx.set("avoid_exact", r.exact);
        ctx.set("avoid_capped", r.capped);
        recs.push(r.record);
    }
    ctx.estimates(&recs)?;
    Ok(())
}
