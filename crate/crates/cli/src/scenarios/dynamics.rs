use ionwalk::dipole::{resonant_excitation, return_time, rotation_sense, stepwise_excitation, FockStats, Sample};
use ionwalk::fock::{phase_grid, sideband_ceiling, sideband_peak};
use ionwalk::{wigner, ApproxLevel, HybridState, MotionalState, Propagator, SimParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{require, Ctx};
use crate::config::{parse_level, physics_keys, Key};
use crate::error::CliError;

#[derive(Serialize)]
struct StatsRow {
    t_us: f64,
    mean_n: f64,
    variance: f64,
    fano: f64,
    alpha_re: f64,
    alpha_im: f64,
}

impl From<&FockStats> for StatsRow {
    fn from(s: &FockStats) -> Self {
        StatsRow {
            t_us: s.t * 1e6,
            mean_n: s.mean_n,
            variance: s.variance,
            fano: s.fano,
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
        }
    }
}

pub fn trajectory_keys() -> Vec<Key> {
    let mut k = physics_keys(&[("omega-d-hz", 1.2e6)], false);
    k.extend([
        Key::text("levels", "LDA,RWA,3SB", "approximation levels to run, comma separated"),
        Key::float("duration-us", 20.0, "propagation time (μs)"),
        Key::int("samples", 1000, "sampling intervals"),
    ]);
    k
}

#[derive(Serialize)]
struct TrajectoryRow {
    t_us: f64,
    alpha_t_re: f64,
    alpha_t_im: f64,
    n_t: f64,
    alpha_h_re: f64,
    alpha_h_im: f64,
    n_h: f64,
    p_t: f64,
    p_h: f64,
}

impl From<&Sample> for TrajectoryRow {
    fn from(s: &Sample) -> Self {
        TrajectoryRow {
            t_us: s.t * 1e6,
            alpha_t_re: s.alpha_t.re,
            alpha_t_im: s.alpha_t.im,
            n_t: s.n_t,
            alpha_h_re: s.alpha_h.re,
            alpha_h_im: s.alpha_h.im,
            n_h: s.n_h,
            p_t: s.p_t,
            p_h: s.p_h,
        }
    }
}

pub fn trajectory(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let levels = inp
        .text("levels")
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_level)
        .collect::<Result<Vec<ApproxLevel>, _>>()?;
    require(!levels.is_empty(), "levels must name at least one level")?;
    let duration = inp.f64("duration-us") * 1e-6;
    let samples = inp.usize("samples");
    require(duration > 0.0, "duration-us must be > 0")?;
    require(samples >= 2, "samples must be >= 2")?;
    let base = inp.sim_params()?;
    let params: Vec<SimParams> = levels.iter().map(|&l| base.with_level(l)).collect();
    for p in &params {
        ctx.record(*p);
    }

    let runs = params
        .par_iter()
        .map(|p| {
            let (_, s) = Propagator::new(p)?.propagate_sampled(&HybridState::ground_tails(p.dim), duration, samples)?;
            Ok(s)
        })
        .collect::<Result<Vec<Vec<Sample>>, ionwalk::Error>>()?;

    let mut summary = serde_json::Map::new();
    for (p, samples) in params.iter().zip(&runs) {
        let name = p.level.name();
        ctx.out.csv(
            &format!("trajectory-{}.csv", name.to_lowercase()),
            samples.iter().map(TrajectoryRow::from),
        )?;
        let stats: Vec<FockStats> = samples
            .iter()
            .map(|s| FockStats {
                t: s.t,
                mean_n: s.n_t,
                variance: 0.0,
                fano: 1.0,
                alpha: s.alpha_t,
            })
            .collect();
        let max_n = samples.iter().map(|s| s.n_t).fold(0.0, f64::max);
        summary.insert(
            name.to_string(),
            json!({ "return_time_us": return_time(&stats).map(|t| t * 1e6), "max_mean_n": max_n }),
        );
    }
    Ok(Value::Object(summary))
}

pub fn resonant_keys() -> Vec<Key> {
    let mut k: Vec<Key> = physics_keys(&[("omega-d-hz", 2e6), ("trap-hz", 2e6), ("eta", 0.3)], true)
        .into_iter()
        .filter(|k| k.name != "delta-hz")
        .collect();
    k.extend([
        Key::float("duration-us", 8.0, "drive time (μs)"),
        Key::int("segments", 32, "sampling intervals"),
        Key::int(
            "wigner-points",
            41,
            "grid points per axis of the final Wigner function; 0 to skip",
        ),
        Key::float("wigner-extent", 7.0, "half width of the Wigner grid around the origin"),
        Key::int("wigner-dim", 400, "Fock dimension used for the Wigner evaluation"),
    ]);
    k
}

#[derive(Serialize)]
struct PopulationRow {
    n: usize,
    p: f64,
}

#[derive(Serialize)]
struct WignerRow {
    re: f64,
    im: f64,
    w: f64,
}

pub fn resonant(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p = inp.sim_params()?.with_delta(0.0);
    ctx.record(p);
    let duration = inp.f64("duration-us") * 1e-6;
    require(duration > 0.0, "duration-us must be > 0")?;
    let ex = resonant_excitation(&p, duration, inp.usize("segments"))?;
    ctx.out.csv("stats.csv", ex.stats.iter().map(StatsRow::from))?;
    let pops = ex.state.t_part.populations();
    ctx.out.csv(
        "populations.csv",
        pops.iter().enumerate().map(|(n, &p)| PopulationRow { n, p }),
    )?;

    let points = inp.usize("wigner-points");
    if points > 0 {
        let extent = inp.f64("wigner-extent");
        let wdim = inp.usize("wigner-dim");
        require(extent > 0.0, "wigner-extent must be > 0")?;
        require(wdim >= p.dim, "wigner-dim must be >= dim")?;
        let mut amps = ex.state.t_part.amps().to_vec();
        amps.resize(wdim, Default::default());
        let m = MotionalState::from_amps(amps)?;
        let grid = phase_grid((-extent, extent), (-extent, extent), points, points);
        let w = wigner(&m, &grid)?;
        ctx.out.csv(
            "wigner.csv",
            grid.iter().zip(&w).map(|(g, &w)| WignerRow { re: g.re, im: g.im, w }),
        )?;
    }

    let g1 = sideband_peak(p.eta);
    let g2 = sideband_ceiling(p.eta);
    let past: Vec<f64> = ex
        .stats
        .iter()
        .filter(|s| s.mean_n > g1 as f64)
        .map(|s| s.fano)
        .collect();
    Ok(json!({
        "g1": g1,
        "g2": g2,
        "final_mean_n": ex.state.t_part.mean_n(),
        "max_mean_n": ex.stats.iter().map(|s| s.mean_n).fold(0.0, f64::max),
        "population_above_g2": pops.iter().skip(g2 + 1).sum::<f64>(),
        "max_fano_past_g1": past.iter().copied().reduce(f64::max),
    }))
}

pub fn stepwise_keys() -> Vec<Key> {
    let mut k = physics_keys(&[("omega-d-hz", 0.4e6), ("trap-hz", 2e6), ("eta", 0.3)], true);
    k.extend([
        Key::int("pulses", 8, "number of drive pulses"),
        Key::float("pulse-periods", 1.0, "pulse length in units of π/δ"),
        Key::float("wait-periods", 1.0, "wait between pulses in units of π/δ"),
        Key::int("samples", 40, "path samples per pulse"),
    ]);
    k
}

#[derive(Serialize)]
struct PathRow {
    pulse: usize,
    sample: usize,
    alpha_re: f64,
    alpha_im: f64,
}

#[derive(Serialize)]
struct PulseRow {
    pulse: usize,
    t_us: f64,
    mean_n: f64,
    variance: f64,
    fano: f64,
    alpha_re: f64,
    alpha_im: f64,
    rotation_sense: f64,
}

pub fn stepwise(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p = ctx.sim_params()?;
    let (pulse, wait) = (inp.f64("pulse-periods"), inp.f64("wait-periods"));
    require(
        pulse > 0.0 && wait >= 0.0,
        "pulse-periods must be > 0 and wait-periods >= 0",
    )?;
    let hp = p.half_period();
    require(hp.is_finite(), "stepwise needs delta-hz != 0")?;
    let (ex, paths) = stepwise_excitation(&p, inp.usize("pulses"), pulse * hp, wait * hp, inp.usize("samples"))?;

    let path_rows = paths.iter().enumerate().flat_map(|(i, path)| {
        path.iter().enumerate().map(move |(j, a)| PathRow {
            pulse: i + 1,
            sample: j,
            alpha_re: a.re,
            alpha_im: a.im,
        })
    });
    ctx.out.csv("path.csv", path_rows)?;
    let senses: Vec<f64> = paths.iter().map(|path| rotation_sense(path)).collect();
    let rows = ex.stats[1..]
        .iter()
        .zip(&senses)
        .enumerate()
        .map(|(i, (s, &rotation_sense))| PulseRow {
            pulse: i + 1,
            t_us: s.t * 1e6,
            mean_n: s.mean_n,
            variance: s.variance,
            fano: s.fano,
            alpha_re: s.alpha.re,
            alpha_im: s.alpha.im,
            rotation_sense,
        });
    ctx.out.csv("pulses.csv", rows)?;

    let first_reversed = senses.iter().position(|&s| s < 0.0).map(|i| i + 1);
    Ok(json!({
        "g1": sideband_peak(p.eta),
        "final_mean_n": ex.state.t_part.mean_n(),
        "rotation_sense": senses,
        "first_reversed_pulse": first_reversed,
    }))
}
