//! Desk-scale 2D two-phase (oil–water) incompressible waterflood proxy.
//!
//! The reservoir stands in for an expensive commercial simulator: it is a
//! deterministic, multimodal black box mapping well placements (and optionally
//! per-step rate controls) to a net-present-value objective. The physics is a
//! standard IMPES scheme — an implicit five-point incompressible pressure
//! solve with harmonic inter-cell transmissibilities, Peaceman well coupling,
//! and an explicit upwind saturation update sub-stepped under a CFL limit.
//!
//! Submodules:
//! - [`sim`]: the pressure/transport engine ([`simulate`]).
//! - [`npv`]: rate series, the discounted-cash-flow objective, CSV export.
//! - [`cases`]: the two shipped cases (`channel2d`, `egglike`).
//! - [`io`]: loading a custom case from structured text + CSV field files.

pub mod cases;
pub mod io;
pub mod npv;
pub mod sim;

pub use cases::{decision_space, make_case, CHANNEL_FIELD_SEED, EGG_FIELD_SEED};
pub use io::load_case;
pub use npv::{npv, write_rates_csv, RateSeries, StepRates, WellStepRates};
pub use sim::{simulate, SimulationOutput};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// US barrel in cubic feet (42 gal × 231 in³/gal / 1728 in³/ft³), exact.
pub const BBL_PER_CUBIC_FOOT: f64 = 1728.0 / 9702.0;

/// US barrels per cubic metre (1 bbl = 0.158987294928 m³, exact).
pub const BBL_PER_CUBIC_METER: f64 = 1.0 / 0.158987294928;

/// Unit system of a case. All conversion constants live here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    /// bbl/day rates, psi pressures, ft lengths, mD permeability, cp viscosity.
    Field,
    /// m³/day rates, bar pressures, m lengths, mD permeability, cp viscosity.
    Metric,
}

impl UnitSystem {
    /// Darcy-law transmissibility constant: rate = C·k·A·Δp/(μ·L) in the
    /// system's units (k mD, μ cp; field: bbl/day·ft·psi, metric: m³/day·m·bar).
    pub fn darcy_constant(self) -> f64 {
        match self {
            UnitSystem::Field => 1.127e-3,
            UnitSystem::Metric => 8.527e-3,
        }
    }

    /// Wellbore radius used by the Peaceman well index.
    pub fn wellbore_radius(self) -> f64 {
        match self {
            UnitSystem::Field => 0.25, // ft
            UnitSystem::Metric => 0.1, // m
        }
    }

    /// Factor converting a cell volume (length³) into rate-volume units
    /// (bbl for field, m³ for metric).
    pub fn rate_volume_per_cell_volume(self) -> f64 {
        match self {
            UnitSystem::Field => BBL_PER_CUBIC_FOOT,
            UnitSystem::Metric => 1.0,
        }
    }
}

/// Whether a well injects water or produces fluids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellKind {
    Injector,
    Producer,
}

/// How a well is operated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WellControl {
    /// Rate-controlled at a fixed surface rate every step.
    FixedRate { value: f64 },
    /// Pressure-controlled at a fixed bottom-hole pressure (producers only).
    FixedBhp { value: f64 },
    /// Rate-controlled, with the per-step rates taken from the decision
    /// vector (joint placement/control optimization), bounded to `[lo, hi]`.
    DecisionRate { lo: f64, hi: f64 },
}

/// A well slot of a case: its kind plus its control mode. The actual cell is
/// chosen by the decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellTemplate {
    pub kind: WellKind,
    pub control: WellControl,
}

/// Prices and discounting for the cash-flow objective. Prices are per
/// rate-volume unit of the case (USD/bbl for field, USD/m³ for metric);
/// `b` is the annual discount fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    /// Oil sale price.
    pub r_o: f64,
    /// Produced-water handling cost.
    pub r_w: f64,
    /// Injected-water cost.
    pub r_i: f64,
    /// Annual discount rate (0.1 = 10 %/year).
    pub b: f64,
}

impl Economics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_o", self.r_o), ("r_w", self.r_w), ("r_i", self.r_i)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "price {name} must be non-negative and finite, got {v}"
                )));
            }
        }
        if !self.b.is_finite() || self.b <= -1.0 {
            return Err(Error::InvalidArgument(format!(
                "discount rate must be finite and > -1, got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// Which parts of the decision vector exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// `x = [i₁, j₁, …, i_nw, j_nw]`; controls come from the templates.
    PlacementOnly,
    /// Placement block followed by one rate per well per step (well-major);
    /// every well must be [`WellControl::DecisionRate`].
    Joint,
}

/// A 2D reservoir description: grid, rock, fluids, wells, economics, schedule.
///
/// Cells are addressed by 1-based coordinates `(i, j)` with `i ∈ [1, nx]`,
/// `j ∈ [1, ny]`; the row-major index of a cell is `(j−1)·nx + (i−1)`. All
/// per-cell vectors (`perm`, `active`) use that row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirCase {
    pub name: String,
    pub units: UnitSystem,
    pub mode: DecodeMode,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Per-cell permeability in mD, row-major.
    pub perm: Vec<f64>,
    /// Per-cell activity mask, row-major.
    pub active: Vec<bool>,
    pub porosity: f64,
    /// Oil and water viscosities in cp.
    pub mu_o: f64,
    pub mu_w: f64,
    /// Connate water and residual oil saturations.
    pub swc: f64,
    pub sor: f64,
    /// Corey endpoint relative permeabilities and exponents.
    pub krw_max: f64,
    pub kro_max: f64,
    pub corey_w: f64,
    pub corey_o: f64,
    /// Initial water saturation (uniform).
    pub sw_init: f64,
    /// Initial pressure (uniform), in the unit system's pressure unit.
    pub p_init: f64,
    /// Well slots, injectors first by convention of the shipped cases.
    pub wells: Vec<WellTemplate>,
    pub economics: Economics,
    /// Schedule: `num_steps` steps of `dt_days` days each.
    pub num_steps: usize,
    pub dt_days: f64,
}

impl ReservoirCase {
    /// Row-major cell index of 1-based coordinates `(i, j)`.
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.nx + (i - 1)
    }

    /// 1-based `(i, j)` coordinates of a row-major cell index.
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx + 1, cell / self.nx + 1)
    }

    /// Pore volume of one cell in rate-volume units (bbl or m³).
    pub fn cell_pore_volume(&self) -> f64 {
        self.dx * self.dy * self.dz * self.porosity * self.units.rate_volume_per_cell_volume()
    }

    pub fn num_injectors(&self) -> usize {
        self.wells
            .iter()
            .filter(|w| w.kind == WellKind::Injector)
            .count()
    }

    pub fn num_producers(&self) -> usize {
        self.wells
            .iter()
            .filter(|w| w.kind == WellKind::Producer)
            .count()
    }

    /// Checks every documented invariant; all other operations assume this.
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument(
                "grid must have at least one cell".into(),
            ));
        }
        for (name, v) in [("dx", self.dx), ("dy", self.dy), ("dz", self.dz)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "cell size {name} must be positive and finite, got {v}"
                )));
            }
        }
        let n = self.nx * self.ny;
        if self.perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.perm.len(),
            });
        }
        if self.active.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.active.len(),
            });
        }
        if !self.active.iter().any(|&a| a) {
            return Err(Error::InvalidArgument("no active cells".into()));
        }
        for c in 0..n {
            if self.active[c] && (!self.perm[c].is_finite() || self.perm[c] <= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "permeability of active cell {c} must be positive, got {}",
                    self.perm[c]
                )));
            }
        }
        if !(self.porosity > 0.0 && self.porosity <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "porosity must lie in (0, 1], got {}",
                self.porosity
            )));
        }
        for (name, v) in [("mu_o", self.mu_o), ("mu_w", self.mu_w)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "viscosity {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.swc >= 0.0 && self.sor >= 0.0 && self.swc + self.sor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "require Swc + Sor < 1 with both non-negative, got {} + {}",
                self.swc, self.sor
            )));
        }
        if !(self.sw_init >= self.swc && self.sw_init <= 1.0 - self.sor) {
            return Err(Error::InvalidArgument(format!(
                "initial water saturation {} outside [{}, {}]",
                self.sw_init,
                self.swc,
                1.0 - self.sor
            )));
        }
        for (name, v) in [
            ("krw_max", self.krw_max),
            ("kro_max", self.kro_max),
            ("corey_w", self.corey_w),
            ("corey_o", self.corey_o),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "relative-permeability parameter {name} must be positive, got {v}"
                )));
            }
        }
        if !self.p_init.is_finite() {
            return Err(Error::InvalidArgument(
                "initial pressure must be finite".into(),
            ));
        }
        if self.num_injectors() == 0 || self.num_producers() == 0 {
            return Err(Error::IllPosed(
                "need at least one injector and one producer".into(),
            ));
        }
        for (w, well) in self.wells.iter().enumerate() {
            match well.control {
                WellControl::FixedRate { value } => {
                    if !value.is_finite() || value < 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "well {w}: fixed rate must be non-negative, got {value}"
                        )));
                    }
                }
                WellControl::FixedBhp { value } => {
                    if well.kind != WellKind::Producer {
                        return Err(Error::InvalidArgument(format!(
                            "well {w}: pressure control is supported on producers only"
                        )));
                    }
                    if !value.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "well {w}: bottom-hole pressure must be finite"
                        )));
                    }
                }
                WellControl::DecisionRate { lo, hi } => {
                    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                        return Err(Error::InvalidArgument(format!(
                            "well {w}: decision-rate bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        self.economics.validate()?;
        if self.num_steps == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one step".into(),
            ));
        }
        if !self.dt_days.is_finite() || self.dt_days <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "step length must be positive, got {} days",
                self.dt_days
            )));
        }
        Ok(())
    }

    /// Nearest active cell to 1-based `(i, j)` by Euclidean distance between
    /// cell centers; ties resolve to the smallest row-major index.
    pub fn nearest_active(&self, i: usize, j: usize) -> usize {
        let mut best = usize::MAX;
        let mut best_d2 = f64::INFINITY;
        for cell in 0..self.nx * self.ny {
            if !self.active[cell] {
                continue;
            }
            let (ci, cj) = self.cell_coords(cell);
            let dxs = (ci as f64 - i as f64) * self.dx;
            let dys = (cj as f64 - j as f64) * self.dy;
            let d2 = dxs * dxs + dys * dys;
            if d2 < best_d2 {
                best_d2 = d2;
                best = cell;
            }
        }
        best
    }
}

/// Per-well control resolved from the templates and the decision vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedControl {
    /// Surface rate per schedule step (injection or production target).
    Rates(Vec<f64>),
    /// Constant bottom-hole pressure.
    Bhp(f64),
}

/// A concrete well configuration: one cell and one resolved control per
/// well slot of the case.
#[derive(Debug, Clone, PartialEq)]
pub struct WellLayout {
    /// Full-grid row-major cell index per well, template order.
    pub cells: Vec<usize>,
    pub controls: Vec<ResolvedControl>,
}

/// Decodes a decision vector into a well layout.
///
/// Placement block: `2·n_w` integers `[i₁, j₁, …]` (1-based coordinates,
/// clipped into the grid); a well aimed at an inactive cell is moved to the
/// nearest active cell (ties: smallest row-major index). Joint mode appends
/// one rate per well per step, well-major, each clipped to the well's bounds.
pub fn decode(x: &[f64], case: &ReservoirCase, mode: DecodeMode) -> Result<WellLayout> {
    let n_w = case.wells.len();
    let k = case.num_steps;
    let expected = match mode {
        DecodeMode::PlacementOnly => 2 * n_w,
        DecodeMode::Joint => 2 * n_w + n_w * k,
    };
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    let mut cells = Vec::with_capacity(n_w);
    for w in 0..n_w {
        let i = (x[2 * w].round() as i64).clamp(1, case.nx as i64) as usize;
        let j = (x[2 * w + 1].round() as i64).clamp(1, case.ny as i64) as usize;
        let cell = case.cell_index(i, j);
        cells.push(if case.active[cell] {
            cell
        } else {
            case.nearest_active(i, j)
        });
    }
    let mut controls = Vec::with_capacity(n_w);
    for (w, well) in case.wells.iter().enumerate() {
        let control = match (mode, well.control) {
            (DecodeMode::PlacementOnly, WellControl::FixedRate { value }) => {
                ResolvedControl::Rates(vec![value; k])
            }
            (DecodeMode::PlacementOnly, WellControl::FixedBhp { value }) => {
                ResolvedControl::Bhp(value)
            }
            (DecodeMode::PlacementOnly, WellControl::DecisionRate { .. }) => {
                return Err(Error::InvalidArgument(format!(
                    "well {w} is decision-controlled; placement-only decoding has no rates for it"
                )));
            }
            (DecodeMode::Joint, WellControl::DecisionRate { lo, hi }) => {
                let start = 2 * n_w + w * k;
                ResolvedControl::Rates(
                    x[start..start + k]
                        .iter()
                        .map(|&r| r.clamp(lo, hi))
                        .collect(),
                )
            }
            (DecodeMode::Joint, _) => {
                return Err(Error::InvalidArgument(format!(
                    "joint decoding requires every well to be decision-controlled; well {w} is not"
                )));
            }
        };
        controls.push(control);
    }
    Ok(WellLayout { cells, controls })
}

/// Full black-box objective: decode `x` with the case's own mode, simulate,
/// and discount the resulting cash flow.
pub fn npv_of(case: &ReservoirCase, x: &[f64]) -> Result<f64> {
    let layout = decode(x, case, case.mode)?;
    let output = simulate(case, &layout)?;
    npv(&output.series.steps, &case.economics, case.dt_days)
}
