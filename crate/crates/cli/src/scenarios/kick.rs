use std::f64::consts::FRAC_PI_2;

use ionwalk::kick::{
    error_bound, fidelity_threshold, fit_threshold_curve, required_dim, Threshold, ThresholdFit, REFERENCE_IMAGINARY,
    REFERENCE_REAL,
};
use ionwalk::params::angular;
use ionwalk::{Complex64, KickParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{linspace, require, Ctx};
use crate::config::Key;
use crate::error::CliError;

pub fn keys() -> Vec<Key> {
    vec![
        Key::float("eta", 0.31, "Lamb-Dicke parameter of the kick"),
        Key::float("trap-hz", 2.13e6, "axial trap frequency ω_z/2π (Hz)"),
        Key::int("dim", 64, "Fock dimension; raised to (|α|+6)² where needed"),
        Key::float("alpha-min", 1.0, "smallest |α|"),
        Key::float("alpha-max", 10.0, "largest |α|"),
        Key::int("points", 6, "log-spaced |α| values per phase (>= 5)"),
        Key::int("phases", 2, "arg α values from π/2 (imaginary) down to 0 (real)"),
        Key::float("f-min", 0.99, "target fidelity"),
        Key::float("at", 200.0, "|α| at which the fits are evaluated"),
    ]
}

#[derive(Serialize)]
struct ThresholdRow {
    alpha_abs: f64,
    arg: f64,
    t_p: f64,
    fidelity: f64,
    deviation: f64,
    bound: f64,
    dim: usize,
    reference_t_p: Option<f64>,
    monotone: bool,
}

fn reference(arg: f64) -> Option<ThresholdFit> {
    if (arg - FRAC_PI_2).abs() < 1e-12 {
        Some(REFERENCE_IMAGINARY)
    } else if arg.abs() < 1e-12 {
        Some(REFERENCE_REAL)
    } else {
        None
    }
}

fn fit_json(f: &ThresholdFit, at: f64) -> Value {
    json!({ "c0": f.c0, "c1": f.c1, "c2": f.c2, "t_at_ns": f.eval(at) * 1e9 })
}

pub fn run(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let (lo, hi) = (inp.f64("alpha-min"), inp.f64("alpha-max"));
    let points = inp.usize("points");
    let phases = inp.usize("phases");
    let f_min = inp.f64("f-min");
    let at = inp.f64("at");
    require(lo > 0.0 && hi > lo, "need 0 < alpha-min < alpha-max")?;
    require(points >= 5, "points must be >= 5 for the fit")?;
    require(phases >= 1, "phases must be >= 1")?;
    require(f_min > 0.0 && f_min < 1.0, "f-min must be in (0, 1)")?;
    require(at > 0.0, "at must be > 0")?;

    let tpl = KickParams::pi_pulse(1e-9, inp.f64("eta"), angular(inp.f64("trap-hz")), inp.usize("dim"));
    tpl.validate()?;
    let abs: Vec<f64> = linspace(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect();
    let args = if phases == 1 {
        vec![FRAC_PI_2]
    } else {
        linspace(FRAC_PI_2, 0.0, phases)
    };
    let jobs: Vec<(f64, f64)> = args.iter().flat_map(|&a| abs.iter().map(move |&r| (a, r))).collect();
    let found = jobs
        .par_iter()
        .map(|&(a, r)| fidelity_threshold(Complex64::from_polar(r, a), f_min, &tpl))
        .collect::<Result<Vec<Threshold>, ionwalk::Error>>()?;

    let rows: Vec<ThresholdRow> = jobs
        .iter()
        .zip(&found)
        .map(|(&(arg, r), t)| ThresholdRow {
            alpha_abs: r,
            arg,
            t_p: t.t_p,
            fidelity: t.fidelity,
            deviation: t.deviation,
            bound: error_bound(r, tpl.omega_z, t.t_p),
            dim: tpl.dim.max(required_dim(r)),
            reference_t_p: reference(arg).map(|f| f.eval(r)),
            monotone: t.monotone,
        })
        .collect();
    ctx.out.csv("thresholds.csv", &rows)?;

    let mut fits = Vec::new();
    for (i, &arg) in args.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = rows[i * points..(i + 1) * points]
            .iter()
            .map(|r| (r.alpha_abs, r.t_p))
            .collect();
        let f = fit_threshold_curve(&pairs)?;
        let mut v = fit_json(&f, at);
        v["arg"] = json!(arg);
        v["reference"] = reference(arg).map_or(Value::Null, |r| fit_json(&r, at));
        fits.push(v);
    }
    let report = json!({
        "f_min": f_min,
        "at": at,
        "fits": fits,
        "reference": {
            "imaginary": fit_json(&REFERENCE_IMAGINARY, at),
            "real": fit_json(&REFERENCE_REAL, at),
        },
    });
    ctx.out.json("fit.json", &report)?;

    let ratio = rows
        .iter()
        .map(|r| r.deviation / (r.t_p * tpl.omega_z * r.alpha_abs * r.alpha_abs))
        .fold(0.0, f64::max);
    Ok(json!({
        "fits": report["fits"],
        "reference_at_ns": { "imaginary": REFERENCE_IMAGINARY.eval(at) * 1e9, "real": REFERENCE_REAL.eval(at) * 1e9 },
        "max_deviation_ratio": ratio,
        "evaluations": found.iter().map(|t| t.evaluations).sum::<usize>(),
    }))
}
