use ionwalk::params::{ApproxLevel, SimParams};
use ionwalk::pulse::*;

fn walk3(p: SimParams) -> impl Fn(f64) -> ionwalk::Result<PulseProgram> + Sync {
    move |td| walk_program(3, td, false, &p, StepLayout::default(), 0.0)
}

#[test]
fn calibrated_positions_3sb() {
    let p = SimParams::experimental();
    let cal = calibrate_positions(4, &p, p.half_period(), StepLayout::default()).unwrap();
    let mean_n = [0.0, 1.33, 4.71, 9.08, 13.50];
    let fid = [1.00, 1.00, 0.97, 0.90, 0.78];
    for (c, (n, f)) in cal.iter().zip(mean_n.iter().zip(fid)) {
        assert!((c.mean_n - n).abs() <= 0.1 * n + 1e-9, "k={} <n>={}", c.k, c.mean_n);
        assert!((c.fidelity - f).abs() <= 0.05, "k={} F={}", c.k, c.fidelity);
        if let Some(o) = c.overlap_next {
            assert!((o - 0.24).abs() <= 0.05, "k={} overlap={o}", c.k);
        }
    }
}

#[test]
fn lda_splittings_of_extended_scan() {
    let p = SimParams::experimental().with_level(ApproxLevel::Lda);
    let half = p.half_period();
    let scan = scan_td(walk3(p), 0.85 * half, 1.15 * half, 61).unwrap();
    let ext = splitting_extrema(&scan, 0.1);
    let near = |t: f64| ext.iter().any(|s| (s.t_d - t).abs() <= 0.1e-6 && s.p_h > s.p_t);
    assert!(near(4.6e-6) && near(5.4e-6), "{ext:?}");
    let main = ratio_maxima(&scan)[0];
    assert!((main.t_d - half).abs() < 0.02 * half);
    assert!((main.p_t - 0.75).abs() < 0.02);
}

#[test]
fn interference_vanishes_next_to_optimum() {
    let p = SimParams::experimental();
    let half = p.half_period();
    let best = optimize_td(walk3(p), 0.96 * half, 1.04 * half, 1e-4).unwrap();
    assert!((best.t_d - half).abs() < 0.02 * half);
    let scan = scan_td(walk3(p), 0.95 * best.t_d, 1.05 * best.t_d, 21).unwrap();
    let flat = |s: &&ScanPoint| (s.ratio() - 1.0).abs() < 0.1;
    assert!(scan.iter().filter(|s| s.t_d < best.t_d).any(|s| flat(&s)));
    assert!(scan.iter().filter(|s| s.t_d > best.t_d).any(|s| flat(&s)));
}

#[test]
fn program_export_lists_absolute_times() {
    let p = SimParams::experimental();
    let prog = walk_program(3, p.half_period(), true, &p, StepLayout::default(), 0.0).unwrap();
    let ex = prog.export();
    let json = serde_json::to_value(&ex).unwrap();
    let events = json["events"].as_array().unwrap();
    assert_eq!(events.len(), prog.events.len());
    let mut last = -1.0;
    for e in events {
        let t = e["start"].as_f64().unwrap();
        assert!(t >= last);
        last = t;
    }
    assert!((ex.total_duration - 3.0 * StepLayout::default().period() * p.half_period()).abs() < 1e-15);
}
