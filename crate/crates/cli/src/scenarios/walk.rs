use ionwalk::walk::scaling_factor;
use ionwalk::WalkSpec;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{require, Ctx};
use crate::config::Key;
use crate::error::CliError;

pub fn keys() -> Vec<Key> {
    vec![
        Key::float("step-size", 2.0, "|Δα| between neighbouring sites"),
        Key::int("steps", 100, "number of steps N"),
        Key::flag("symmetric", false, "use R(π/2, φ+π/2) for every coin after the first"),
        Key::float("phi", 0.0, "coin phase φ (rad)"),
        Key::text(
            "scaling-sizes",
            "1,2,3,4",
            "step sizes for the σ_N slope, comma separated; empty to skip",
        ),
        Key::int("scaling-max", 100, "largest N of the slope fit (>= 40)"),
    ]
}

#[derive(Serialize)]
struct PositionRow {
    k: i64,
    lattice_weight: f64,
    probability: f64,
}

#[derive(Serialize)]
struct SigmaRow {
    n: usize,
    sigma: f64,
}

#[derive(Serialize)]
struct ScalingRow {
    step_size: f64,
    velocity: f64,
}

pub fn run(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let spec = WalkSpec {
        n_steps: inp.usize("steps"),
        step_size: inp.f64("step-size"),
        phi: inp.f64("phi"),
        symmetric: inp.bool("symmetric"),
    };
    require(spec.step_size > 0.0, "step-size must be > 0")?;
    let state = spec.run()?;
    let range = state.probability_range();
    let probs = state.position_probabilities(range.clone(), false);
    let rows: Vec<PositionRow> = range
        .zip(&probs)
        .map(|(k, &probability)| {
            let (t, h) = state.coeff(k);
            PositionRow {
                k,
                lattice_weight: t.norm_sqr() + h.norm_sqr(),
                probability,
            }
        })
        .collect();
    let odd = |f: fn(&PositionRow) -> f64| rows.iter().filter(|r| r.k % 2 != 0).map(f).fold(0.0, f64::max);
    let max_odd_weight = odd(|r| r.lattice_weight);
    let max_odd_prob = odd(|r| r.probability);
    let peak = rows.iter().map(|r| r.probability).fold(0.0, f64::max);
    ctx.out.csv("positions.csv", &rows)?;

    let sigma = spec.sigma_series()?;
    ctx.out.csv(
        "sigma.csv",
        sigma.iter().enumerate().map(|(n, &sigma)| SigmaRow { n, sigma }),
    )?;

    let sizes = inp.f64_list("scaling-sizes")?;
    require(sizes.iter().all(|&s| s > 0.0), "scaling-sizes must be > 0")?;
    let n_max = inp.usize("scaling-max");
    let scaling = sizes
        .par_iter()
        .map(|&s| {
            Ok(ScalingRow {
                step_size: s,
                velocity: scaling_factor(s, n_max)?,
            })
        })
        .collect::<Result<Vec<_>, ionwalk::Error>>()?;
    if !scaling.is_empty() {
        ctx.out.csv("scaling.csv", &scaling)?;
    }

    let (p_t, p_h) = state.coin_probabilities();
    Ok(json!({
        "sites": rows.len(),
        "p_t": p_t,
        "p_h": p_h,
        "sigma_final": sigma.last(),
        "max_odd_lattice_weight": max_odd_weight,
        "max_odd_probability": max_odd_prob,
        "peak_probability": peak,
        "velocity": scaling.iter().map(|r| json!({"step_size": r.step_size, "v": r.velocity})).collect::<Vec<_>>(),
    }))
}
