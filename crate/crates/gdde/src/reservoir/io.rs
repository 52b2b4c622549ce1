//! Loading a custom case from structured text.
//!
//! A case is three documents: a TOML configuration (grid geometry, rock and
//! fluid properties, wells, economics, schedule), a permeability field CSV
//! (nx·ny values, row-major, commas and/or whitespace), and an optional 0/1
//! activity mask in the same format (absent means every cell is active).

use crate::error::{Error, Result};
use crate::reservoir::{DecodeMode, Economics, ReservoirCase, UnitSystem, WellTemplate};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseConfig {
    name: String,
    units: UnitSystem,
    mode: DecodeMode,
    grid: GridConfig,
    rock: RockConfig,
    fluids: FluidsConfig,
    init: InitConfig,
    economics: EconomicsConfig,
    schedule: ScheduleConfig,
    wells: Vec<WellTemplate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    dz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RockConfig {
    porosity: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FluidsConfig {
    mu_o: f64,
    mu_w: f64,
    swc: f64,
    sor: f64,
    krw_max: f64,
    kro_max: f64,
    corey_w: f64,
    corey_o: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitConfig {
    pressure: f64,
    sw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomicsConfig {
    oil_price: f64,
    water_cost: f64,
    injection_cost: f64,
    discount_rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleConfig {
    steps: usize,
    dt_days: f64,
}

/// Parses a comma- and/or whitespace-separated list of `expected` floats.
fn parse_grid_values(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    for token in text.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        let v: f64 = token
            .parse()
            .map_err(|_| Error::Parse(format!("{what}: not a number: {token:?}")))?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "{what}: expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

/// Assembles and validates a case from its three documents.
pub fn load_case(
    config_toml: &str,
    perm_csv: &str,
    mask_csv: Option<&str>,
) -> Result<ReservoirCase> {
    let config: CaseConfig =
        toml::from_str(config_toml).map_err(|e| Error::Parse(format!("case config: {e}")))?;
    let n = config.grid.nx * config.grid.ny;
    let perm = parse_grid_values(perm_csv, n, "permeability field")?;
    let active = match mask_csv {
        None => vec![true; n],
        Some(text) => parse_grid_values(text, n, "activity mask")?
            .into_iter()
            .map(|v| {
                if v == 0.0 {
                    Ok(false)
                } else if v == 1.0 {
                    Ok(true)
                } else {
                    Err(Error::Parse(format!(
                        "activity mask: expected 0 or 1, found {v}"
                    )))
                }
            })
            .collect::<Result<Vec<bool>>>()?,
    };
    let case = ReservoirCase {
        name: config.name,
        units: config.units,
        mode: config.mode,
        nx: config.grid.nx,
        ny: config.grid.ny,
        dx: config.grid.dx,
        dy: config.grid.dy,
        dz: config.grid.dz,
        perm,
        active,
        porosity: config.rock.porosity,
        mu_o: config.fluids.mu_o,
        mu_w: config.fluids.mu_w,
        swc: config.fluids.swc,
        sor: config.fluids.sor,
        krw_max: config.fluids.krw_max,
        kro_max: config.fluids.kro_max,
        corey_w: config.fluids.corey_w,
        corey_o: config.fluids.corey_o,
        sw_init: config.init.sw,
        p_init: config.init.pressure,
        wells: config.wells,
        economics: Economics {
            r_o: config.economics.oil_price,
            r_w: config.economics.water_cost,
            r_i: config.economics.injection_cost,
            b: config.economics.discount_rate,
        },
        num_steps: config.schedule.steps,
        dt_days: config.schedule.dt_days,
    };
    case.validate()?;
    Ok(case)
}
