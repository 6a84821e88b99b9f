//! Registered scenarios. Each declares its keys and writes its artifacts
//! through a [`Ctx`], returning a JSON summary for the manifest.

mod dynamics;
mod kick;
mod readout;
mod sequence;
mod walk;

use ionwalk::pulse::StepLayout;
use ionwalk::SimParams;
use serde_json::Value;

use crate::config::{Inputs, Key};
use crate::error::CliError;
use crate::output::Output;

pub struct Ctx<'a> {
    pub inputs: &'a Inputs,
    pub out: &'a mut Output,
    pub seed: u64,
    pub sim: Vec<SimParams>,
}

impl Ctx<'_> {
    /// Resolved physical parameters, recorded for the manifest.
    pub fn sim_params(&mut self) -> Result<SimParams, CliError> {
        let p = self.inputs.sim_params()?;
        self.record(p);
        Ok(p)
    }

    pub fn record(&mut self, p: SimParams) {
        if !self.sim.contains(&p) {
            self.sim.push(p);
        }
    }
}

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: fn() -> Vec<Key>,
    pub run: fn(&mut Ctx) -> Result<Value, CliError>,
}

pub static SCENARIOS: [Scenario; 10] = [
    Scenario {
        name: "walk-ideal",
        about: "lattice walk: position tables, σ_N series and spreading velocity",
        keys: walk::keys,
        run: walk::run,
    },
    Scenario {
        name: "trajectory",
        about: "phase-space trajectories of a detuned dipole drive at several approximation levels",
        keys: dynamics::trajectory_keys,
        run: dynamics::trajectory,
    },
    Scenario {
        name: "resonant",
        about: "resonant excitation: Fock statistics, final populations and Wigner function",
        keys: dynamics::resonant_keys,
        run: dynamics::resonant,
    },
    Scenario {
        name: "stepwise",
        about: "alternating drive pulses and waits: per-pulse paths and rotation sense",
        keys: dynamics::stepwise_keys,
        run: dynamics::stepwise,
    },
    Scenario {
        name: "combined-pulse",
        about: "pulse program of one shift and of a walk, with branch results",
        keys: sequence::combined_keys,
        run: sequence::combined,
    },
    Scenario {
        name: "scan-td",
        about: "P_T/P_H of a multi-step walk program against the dipole pulse length",
        keys: sequence::scan_keys,
        run: sequence::scan,
    },
    Scenario {
        name: "calibrate",
        about: "position states after k combined pulses: ⟨n⟩, overlaps and coherent fidelity",
        keys: sequence::calibrate_keys,
        run: sequence::calibrate,
    },
    Scenario {
        name: "readout-roundtrip",
        about: "blue-sideband signal inversion on random Fock distributions",
        keys: readout::roundtrip_keys,
        run: readout::roundtrip,
    },
    Scenario {
        name: "walk-positions",
        about: "position distribution recovered from shifted Fock distributions",
        keys: readout::positions_keys,
        run: readout::positions,
    },
    Scenario {
        name: "kick-threshold",
        about: "longest photon-kick pulse reaching a target fidelity, with log-quadratic fits",
        keys: kick::keys,
        run: kick::run,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

pub fn require(ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Keys shared by scenarios that run combined pulses.
fn layout_keys() -> Vec<Key> {
    vec![
        Key::float("t-d-us", 0.0, "dipole pulse length T_D in μs; 0 means π/δ"),
        Key::float("wait", 4.0, "wait between the two dipole pulses, in units of T_D"),
        Key::float("post-wait", 6.0, "wait after the second coin swap, in units of T_D"),
    ]
}

fn layout(inputs: &Inputs) -> Result<StepLayout, CliError> {
    let (w, pw) = (inputs.f64("wait"), inputs.f64("post-wait"));
    require(w >= 0.0 && pw >= 0.0, "wait and post-wait must be >= 0")?;
    Ok(StepLayout::new(w).with_post_wait(pw))
}

fn pulse_length(inputs: &Inputs, p: &SimParams) -> Result<f64, CliError> {
    let t = inputs.f64("t-d-us");
    require(t >= 0.0, "t-d-us must be >= 0")?;
    Ok(if t == 0.0 { p.half_period() } else { t * 1e-6 })
}
