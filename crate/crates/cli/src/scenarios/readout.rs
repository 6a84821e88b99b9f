use ionwalk::linalg::condition_number;
use ionwalk::params::angular;
use ionwalk::pulse::calibrate_positions;
use ionwalk::readout::{bsb_signal, dictionary, disambiguate_positions, invert_bsb, shifted_readout, ShiftedReadout};
use ionwalk::{ReadoutConfig, WalkSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{layout, layout_keys, linspace, pulse_length, require, Ctx};
use crate::config::{physics_keys, Key};
use crate::error::CliError;

pub fn roundtrip_keys() -> Vec<Key> {
    vec![
        Key::float("eta", 0.31, "Lamb-Dicke parameter"),
        Key::float(
            "base-rabi-hz",
            100e3,
            "carrier Rabi frequency Ω₀/2π of the sideband pulse (Hz)",
        ),
        Key::int("levels", 6, "Fock levels in the random distributions and the fit"),
        Key::int("trials", 100, "random distributions"),
        Key::float(
            "noise",
            0.02,
            "standard deviation of Gaussian noise added to the signal",
        ),
        Key::float("gamma", 0.0, "signal damping rate (1/s)"),
        Key::int("samples", 200, "time samples"),
        Key::float("periods", 5.0, "grid length in periods of Ω_{1,0}"),
    ]
}

#[derive(Serialize)]
struct TrialRow {
    trial: usize,
    max_error_clean: f64,
    max_error_noisy: f64,
}

#[derive(Serialize)]
struct DistRow {
    trial: usize,
    n: usize,
    truth: f64,
    clean: f64,
    noisy: f64,
}

#[derive(Serialize)]
struct SignalRow {
    t_us: f64,
    clean: f64,
    noisy: f64,
    refit: f64,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn roundtrip(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let eta = inp.f64("eta");
    let levels = inp.usize("levels");
    let trials = inp.usize("trials");
    let noise = inp.f64("noise");
    let samples = inp.usize("samples");
    let periods = inp.f64("periods");
    require(levels >= 1, "levels must be >= 1")?;
    require(trials >= 1, "trials must be >= 1")?;
    require(noise >= 0.0, "noise must be >= 0")?;
    require(samples >= 2 && periods > 0.0, "need samples >= 2 and periods > 0")?;
    let base = ReadoutConfig::new(eta, angular(inp.f64("base-rabi-hz")), levels - 1)?;
    let span = periods * std::f64::consts::TAU / base.rabi(0, eta);
    let cfg = base
        .with_gamma(inp.f64("gamma"))
        .with_grid(linspace(0.0, span, samples));
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).map_err(|e| CliError::Config(e.to_string()))?;
    let mut cases = Vec::with_capacity(trials);
    for _ in 0..trials {
        let raw: Vec<f64> = (0..levels).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let clean = bsb_signal(&probs, &cfg, eta)?;
        let noisy: Vec<f64> = clean
            .iter()
            .map(|&x| if noise > 0.0 { x + normal.sample(&mut rng) } else { x })
            .collect();
        cases.push((probs, clean, noisy));
    }
    let fits = cases
        .par_iter()
        .map(|(_, clean, noisy)| Ok((invert_bsb(clean, &cfg, eta, None)?, invert_bsb(noisy, &cfg, eta, None)?)))
        .collect::<Result<Vec<_>, ionwalk::Error>>()?;

    let trial_rows: Vec<TrialRow> = cases
        .iter()
        .zip(&fits)
        .enumerate()
        .map(|(trial, ((p, _, _), (c, n)))| TrialRow {
            trial,
            max_error_clean: max_abs_diff(p, c),
            max_error_noisy: max_abs_diff(p, n),
        })
        .collect();
    ctx.out.csv("trials.csv", &trial_rows)?;
    let dist_rows = cases
        .iter()
        .zip(&fits)
        .enumerate()
        .flat_map(|(trial, ((p, _, _), (c, n)))| {
            (0..levels).map(move |i| DistRow {
                trial,
                n: i,
                truth: p[i],
                clean: c[i],
                noisy: n[i],
            })
        });
    ctx.out.csv("distributions.csv", dist_rows)?;
    let (_, clean, noisy) = &cases[0];
    let refit = bsb_signal(&fits[0].1, &cfg, eta)?;
    ctx.out.csv(
        "signal.csv",
        cfg.t_grid.iter().enumerate().map(|(i, &t)| SignalRow {
            t_us: t * 1e6,
            clean: clean[i],
            noisy: noisy[i],
            refit: refit[i],
        }),
    )?;

    let worst = |f: fn(&TrialRow) -> f64| trial_rows.iter().map(f).fold(0.0, f64::max);
    let mean_noisy = trial_rows.iter().map(|r| r.max_error_noisy).sum::<f64>() / trials as f64;
    Ok(json!({
        "condition_number": condition_number(&dictionary(&cfg, eta)),
        "max_error_clean": worst(|r| r.max_error_clean),
        "max_error_noisy": worst(|r| r.max_error_noisy),
        "mean_max_error_noisy": mean_noisy,
    }))
}

pub fn positions_keys() -> Vec<Key> {
    let mut k = physics_keys(&[], true);
    k.extend(layout_keys());
    k.extend([
        Key::int("steps", 3, "walk steps of the planted distribution"),
        Key::float(
            "step-size",
            1.24,
            "|Δα| of the lattice walk that sets the planted weights",
        ),
        Key::flag("symmetric", false, "use R(π/2, φ+π/2) for every coin after the first"),
        Key::float("phi", 0.0, "coin phase φ (rad)"),
        Key::float("noise", 0.0, "Gaussian noise on each measured Fock probability"),
    ]);
    k
}

#[derive(Serialize)]
struct PositionRow {
    k: i64,
    planted: f64,
    recovered: f64,
    error: f64,
}

#[derive(Serialize)]
struct MeasuredRow {
    n: usize,
    plain: f64,
    plus: f64,
    minus: f64,
}

fn perturb(p: &[f64], normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = p.iter().map(|&x| (x + normal.sample(rng)).max(0.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn positions(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p = ctx.sim_params()?;
    let lay = layout(inp)?;
    let t_d = pulse_length(inp, &p)?;
    let steps = inp.usize("steps");
    let noise = inp.f64("noise");
    require(steps >= 1, "steps must be >= 1")?;
    require(noise >= 0.0, "noise must be >= 0")?;

    let lattice = WalkSpec {
        n_steps: steps,
        step_size: inp.f64("step-size"),
        phi: inp.f64("phi"),
        symmetric: inp.bool("symmetric"),
    }
    .run()?;
    let k_max = steps as i64;
    let planted: Vec<f64> = (-k_max..=k_max)
        .map(|k| {
            let (t, h) = lattice.coeff(k);
            t.norm_sqr() + h.norm_sqr()
        })
        .collect();
    let cal = calibrate_positions(steps + 1, &p, t_d, lay)?;
    let basis: Vec<Vec<f64>> = cal.iter().map(|c| c.state.populations()).collect();
    let mut measured = shifted_readout(&planted, &basis)?;
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).map_err(|e| CliError::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        measured = ShiftedReadout {
            plain: perturb(&measured.plain, &normal, &mut rng),
            plus: perturb(&measured.plus, &normal, &mut rng),
            minus: perturb(&measured.minus, &normal, &mut rng),
        };
    }
    let fit = disambiguate_positions(&measured, &basis, steps)?;

    let rows: Vec<PositionRow> = (-k_max..=k_max)
        .zip(&planted)
        .map(|(k, &w)| PositionRow {
            k,
            planted: w,
            recovered: fit.prob(k),
            error: fit.prob(k) - w,
        })
        .collect();
    ctx.out.csv("positions.csv", &rows)?;
    ctx.out.csv(
        "measured.csv",
        (0..measured.plain.len()).map(|n| MeasuredRow {
            n,
            plain: measured.plain[n],
            plus: measured.plus[n],
            minus: measured.minus[n],
        }),
    )?;
    Ok(json!({
        "max_error": rows.iter().map(|r| r.error.abs()).fold(0.0, f64::max),
        "residual": fit.residual,
        "basis_mean_n": cal.iter().map(|c| c.mean_n).collect::<Vec<_>>(),
    }))
}
