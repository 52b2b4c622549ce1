//! The two shipped benchmark cases and their decision-space descriptions.
//!
//! Both fields are channelized: a fixed-seed random walk paints high-
//! permeability streaks across a low-permeability background, which is what
//! makes placement optimization multimodal (a well on a channel drains or
//! floods far more rock than one a cell away).

use crate::error::{Error, Result};
use crate::reservoir::{
    DecodeMode, Economics, ReservoirCase, UnitSystem, WellControl, WellKind, WellTemplate,
    BBL_PER_CUBIC_METER,
};
use crate::space::{DecisionSpace, VariableKind};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed seed of the `channel2d` permeability field. Changing it changes the
/// benchmark, so it is part of the case definition.
pub const CHANNEL_FIELD_SEED: u64 = 1729;

/// Fixed seed of the `egglike` permeability field.
pub const EGG_FIELD_SEED: u64 = 8128;

/// Paints `channels` left-to-right random-walk streaks of value `channel`
/// (each `2·half_width + 1` cells tall) onto a `background` field.
///
/// The walk starts at a uniform random row and steps {down, flat, up} with
/// probabilities {¼, ½, ¼} per column, clamped to the grid. Row-major output,
/// `(j - 1)·nx + (i - 1)`.
pub fn channel_field(
    nx: usize,
    ny: usize,
    channels: usize,
    half_width: usize,
    background: f64,
    channel: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = vec![background; nx * ny];
    for _ in 0..channels {
        let mut j = rng.random_range(1..=ny as i64);
        for i in 1..=nx {
            for dj in -(half_width as i64)..=half_width as i64 {
                let jj = (j + dj).clamp(1, ny as i64) as usize;
                perm[(jj - 1) * nx + (i - 1)] = channel;
            }
            let step = match rng.random_range(0..4u32) {
                0 => -1,
                1 | 2 => 0,
                _ => 1,
            };
            j = (j + step).clamp(1, ny as i64);
        }
    }
    perm
}

/// Builds the decision space a case's wells imply: one integer (i, j) pair
/// per well, plus — in joint mode — one continuous rate per well per step,
/// well-major, bounded by each well's rate interval.
pub fn decision_space(case: &ReservoirCase) -> Result<DecisionSpace> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut kinds = Vec::new();
    for _ in &case.wells {
        lower.push(1.0);
        upper.push(case.nx as f64);
        kinds.push(VariableKind::Integer);
        lower.push(1.0);
        upper.push(case.ny as f64);
        kinds.push(VariableKind::Integer);
    }
    if case.mode == DecodeMode::Joint {
        for (w, well) in case.wells.iter().enumerate() {
            match well.control {
                WellControl::DecisionRate { lo, hi } => {
                    for _ in 0..case.num_steps {
                        lower.push(lo);
                        upper.push(hi);
                        kinds.push(VariableKind::Continuous);
                    }
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "joint mode requires decision-rate controls, well {w} has a fixed one"
                    )));
                }
            }
        }
    }
    DecisionSpace::new(lower, upper, kinds)
}

fn channel2d() -> ReservoirCase {
    let nx = 50;
    let ny = 50;
    let mut wells = Vec::new();
    for _ in 0..5 {
        wells.push(WellTemplate {
            kind: WellKind::Injector,
            control: WellControl::FixedRate { value: 1000.0 },
        });
    }
    for _ in 0..5 {
        wells.push(WellTemplate {
            kind: WellKind::Producer,
            control: WellControl::FixedBhp { value: 3000.0 },
        });
    }
    ReservoirCase {
        name: "channel2d".into(),
        units: UnitSystem::Field,
        mode: DecodeMode::PlacementOnly,
        nx,
        ny,
        dx: 100.0,
        dy: 100.0,
        dz: 20.0,
        perm: channel_field(nx, ny, 4, 1, 10.0, 1000.0, CHANNEL_FIELD_SEED),
        active: vec![true; nx * ny],
        porosity: 0.2,
        mu_o: 2.2,
        mu_w: 0.5,
        swc: 0.2,
        sor: 0.2,
        krw_max: 0.6,
        kro_max: 0.9,
        corey_w: 2.0,
        corey_o: 2.0,
        sw_init: 0.2,
        p_init: 6000.0,
        wells,
        economics: Economics {
            r_o: 80.0,
            r_w: 5.0,
            r_i: 5.0,
            b: 0.0,
        },
        num_steps: 20,
        dt_days: 360.0,
    }
}

fn egglike() -> ReservoirCase {
    let nx = 30;
    let ny = 30;
    // Elliptical outline: a cell is active when its centre lies inside the
    // ellipse centred mid-grid with semi-axes 14.2 × 11.6 cells.
    let mut active = vec![false; nx * ny];
    for j in 1..=ny {
        for i in 1..=nx {
            let u = (i as f64 - 0.5 - 15.0) / 14.2;
            let v = (j as f64 - 0.5 - 15.0) / 11.6;
            if u * u + v * v <= 1.0 {
                active[(j - 1) * nx + (i - 1)] = true;
            }
        }
    }
    let mut wells = Vec::new();
    for _ in 0..8 {
        wells.push(WellTemplate {
            kind: WellKind::Injector,
            control: WellControl::DecisionRate { lo: 0.0, hi: 80.0 },
        });
    }
    for _ in 0..4 {
        wells.push(WellTemplate {
            kind: WellKind::Producer,
            control: WellControl::DecisionRate { lo: 0.0, hi: 120.0 },
        });
    }
    // Prices are quoted per barrel; metric rates are m³/day, so convert.
    let per_m3 = BBL_PER_CUBIC_METER;
    ReservoirCase {
        name: "egglike".into(),
        units: UnitSystem::Metric,
        mode: DecodeMode::Joint,
        nx,
        ny,
        dx: 8.0,
        dy: 8.0,
        dz: 28.0,
        perm: channel_field(nx, ny, 3, 1, 50.0, 1000.0, EGG_FIELD_SEED),
        active,
        porosity: 0.2,
        mu_o: 5.0,
        mu_w: 1.0,
        swc: 0.1,
        sor: 0.1,
        krw_max: 0.75,
        kro_max: 0.8,
        corey_w: 3.0,
        corey_o: 4.0,
        sw_init: 0.1,
        p_init: 400.0,
        wells,
        economics: Economics {
            r_o: 80.0 * per_m3,
            r_w: 5.0 * per_m3,
            r_i: 5.0 * per_m3,
            b: 0.0,
        },
        num_steps: 10,
        dt_days: 360.0,
    }
}

/// Returns a shipped case and its decision space by name.
///
/// Known names: `channel2d` (50×50 field-unit placement problem, 20
/// dimensions) and `egglike` (30×30 metric joint placement-and-rates problem,
/// 144 dimensions).
pub fn make_case(name: &str) -> Result<(ReservoirCase, DecisionSpace)> {
    let case = match name {
        "channel2d" => channel2d(),
        "egglike" => egglike(),
        other => return Err(Error::UnknownName(other.to_string())),
    };
    case.validate()?;
    let space = decision_space(&case)?;
    Ok((case, space))
}
