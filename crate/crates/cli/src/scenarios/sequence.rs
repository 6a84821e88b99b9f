use ionwalk::pulse::{
    calibrate_positions, combined_pulse, force_amplitude, lda_step, optimize_td, ratio_maxima, scan_td,
    splitting_extrema, walk_program, ScanPoint,
};
use ionwalk::Complex64;
use ionwalk::{ApproxLevel, HybridState, MotionalState, PulseProgram, SimParams};
use serde::Serialize;
use serde_json::{json, Value};

use super::{layout, layout_keys, pulse_length, require, Ctx};
use crate::config::{physics_keys, Key};
use crate::error::CliError;

fn walk_keys() -> Vec<Key> {
    vec![
        Key::int("steps", 3, "walk steps"),
        Key::flag("symmetric", false, "shift the first coin phase by π/2"),
        Key::float("phi", 0.0, "coin phase φ (rad)"),
    ]
}

pub fn combined_keys() -> Vec<Key> {
    let mut k = physics_keys(&[], true);
    k.extend(layout_keys());
    k.extend(walk_keys());
    k
}

#[derive(Serialize)]
struct BranchRow {
    level: &'static str,
    input: &'static str,
    p_t: f64,
    p_h: f64,
    alpha_re: f64,
    alpha_im: f64,
    mean_n: f64,
}

pub fn combined(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p = ctx.sim_params()?;
    let lay = layout(inp)?;
    let t_d = pulse_length(inp, &p)?;
    let shift = PulseProgram::new(combined_pulse(t_d, lay), p, lay)?;
    ctx.out.json("combined-pulse.json", &shift.export())?;
    let walk = walk_program(inp.usize("steps"), t_d, inp.bool("symmetric"), &p, lay, inp.f64("phi"))?;
    ctx.out.json("walk-program.json", &walk.export())?;

    let mut levels = vec![p];
    if p.level != ApproxLevel::Lda {
        levels.push(p.with_level(ApproxLevel::Lda));
        ctx.record(levels[1]);
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let vacuum = MotionalState::vacuum(p.dim);
    let mut rows = Vec::new();
    for q in &levels {
        let prog = PulseProgram::new(combined_pulse(t_d, lay), *q, lay)?;
        for (input, c_t, c_h) in [("T", one, zero), ("H", zero, one)] {
            let out = prog.execute(&HybridState::product(c_t, c_h, &vacuum)?)?;
            let (p_t, p_h) = out.coin_probabilities();
            let part = if input == "T" { &out.t_part } else { &out.h_part };
            let m = part.normalized()?;
            let a = m.mean_a();
            rows.push(BranchRow {
                level: q.level.name(),
                input,
                p_t,
                p_h,
                alpha_re: a.re,
                alpha_im: a.im,
                mean_n: m.mean_n(),
            });
        }
    }
    ctx.out.csv("branches.csv", &rows)?;
    let step = lda_step(&p);
    Ok(json!({
        "t_d_us": t_d * 1e6,
        "shift_duration_us": shift.total_duration() * 1e6,
        "walk_duration_us": walk.total_duration() * 1e6,
        "walk_events": walk.events.len(),
        "lda_step": {"re": step.re, "im": step.im, "abs": step.norm()},
    }))
}

pub fn scan_keys() -> Vec<Key> {
    let mut k = physics_keys(&[], true);
    k.extend(layout_keys().into_iter().filter(|k| k.name != "t-d-us"));
    k.extend(walk_keys());
    k.extend([
        Key::float("lo", 0.85, "scan start in units of π/δ"),
        Key::float("hi", 1.15, "scan end in units of π/δ"),
        Key::int("points", 61, "scan points"),
        Key::flag(
            "optimize",
            true,
            "add the golden-section optimum of P_T/P_H as an extra row",
        ),
        Key::float("opt-lo", 0.96, "optimizer bracket start in units of π/δ"),
        Key::float("opt-hi", 1.04, "optimizer bracket end in units of π/δ"),
        Key::float("opt-tol", 1e-4, "optimizer relative bracket width"),
        Key::float(
            "extrema-min",
            0.3,
            "smallest |P_T − P_H| reported as a splitting extremum",
        ),
    ]);
    k
}

#[derive(Serialize)]
struct ScanRow {
    kind: &'static str,
    t_d_us: f64,
    t_d_rel: f64,
    p_t: f64,
    p_h: f64,
    ratio: f64,
    splitting: f64,
}

fn point_json(s: &ScanPoint, half: f64) -> Value {
    json!({ "t_d_us": s.t_d * 1e6, "t_d_rel": s.t_d / half, "p_t": s.p_t, "p_h": s.p_h, "ratio": s.ratio() })
}

pub fn scan(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p = ctx.sim_params()?;
    let lay = layout(inp)?;
    let half = p.half_period();
    require(half.is_finite() && half > 0.0, "scan-td needs delta-hz > 0")?;
    let (steps, sym, phi) = (inp.usize("steps"), inp.bool("symmetric"), inp.f64("phi"));
    let make = |t: f64| walk_program(steps, t, sym, &p, lay, phi);

    let (lo, hi) = (inp.f64("lo"), inp.f64("hi"));
    let grid = scan_td(make, lo * half, hi * half, inp.usize("points"))?;
    let best = if inp.bool("optimize") {
        let (a, b) = (inp.f64("opt-lo"), inp.f64("opt-hi"));
        let tol = inp.f64("opt-tol");
        require(a > 0.0 && b > a, "optimizer bracket needs 0 < opt-lo < opt-hi")?;
        require(tol > 0.0 && tol < 1.0, "opt-tol must be in (0, 1)")?;
        Some(optimize_td(make, a * half, b * half, tol)?)
    } else {
        None
    };

    let mut rows: Vec<ScanRow> = grid.iter().map(|s| row("scan", s, half)).collect();
    if let Some(b) = &best {
        let at = rows.partition_point(|r| r.t_d_us <= b.t_d * 1e6);
        rows.insert(at, row("optimum", b, half));
    }
    ctx.out.csv("scan.csv", &rows)?;

    let top = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let maxima: Vec<Value> = ratio_maxima(&grid)
        .iter()
        .take(3)
        .map(|s| point_json(s, half))
        .collect();
    let extrema: Vec<Value> = splitting_extrema(&grid, inp.f64("extrema-min"))
        .iter()
        .map(|s| point_json(s, half))
        .collect();
    Ok(json!({
        "half_period_us": half * 1e6,
        "max_ratio": top,
        "optimum": best.as_ref().map(|b| point_json(b, half)),
        "ratio_maxima": maxima,
        "splitting_extrema": extrema,
    }))
}

fn row(kind: &'static str, s: &ScanPoint, half: f64) -> ScanRow {
    ScanRow {
        kind,
        t_d_us: s.t_d * 1e6,
        t_d_rel: s.t_d / half,
        p_t: s.p_t,
        p_h: s.p_h,
        ratio: s.ratio(),
        splitting: s.p_t - s.p_h,
    }
}

pub fn calibrate_keys() -> Vec<Key> {
    let mut k = physics_keys(&[], true);
    k.extend(layout_keys());
    k.push(Key::int("k-max", 4, "number of combined pulses"));
    k
}

#[derive(Serialize)]
struct CalRow {
    k: usize,
    mean_n: f64,
    overlap_next: Option<f64>,
    fidelity: f64,
    alpha_re: f64,
    alpha_im: f64,
}

#[derive(Serialize)]
struct CalPopRow {
    k: usize,
    n: usize,
    p: f64,
}

pub fn calibrate(ctx: &mut Ctx) -> Result<Value, CliError> {
    let inp = ctx.inputs;
    let p: SimParams = ctx.sim_params()?;
    let lay = layout(inp)?;
    let t_d = pulse_length(inp, &p)?;
    let cal = calibrate_positions(inp.usize("k-max"), &p, t_d, lay)?;
    ctx.out.csv(
        "positions.csv",
        cal.iter().map(|c| {
            let a = c.state.mean_a();
            CalRow {
                k: c.k,
                mean_n: c.mean_n,
                overlap_next: c.overlap_next,
                fidelity: c.fidelity,
                alpha_re: a.re,
                alpha_im: a.im,
            }
        }),
    )?;
    ctx.out.csv(
        "populations.csv",
        cal.iter().flat_map(|c| {
            c.state
                .populations()
                .into_iter()
                .enumerate()
                .map(move |(n, p)| CalPopRow { k: c.k, n, p })
        }),
    )?;
    let step = lda_step(&p);
    Ok(json!({
        "t_d_us": t_d * 1e6,
        "mean_n": cal.iter().map(|c| c.mean_n).collect::<Vec<_>>(),
        "overlap_next": cal.iter().filter_map(|c| c.overlap_next).collect::<Vec<_>>(),
        "fidelity": cal.iter().map(|c| c.fidelity).collect::<Vec<_>>(),
        "force_amplitude_n": force_amplitude(&p),
        "lda_step_abs": step.norm(),
    }))
}
