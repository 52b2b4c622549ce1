//! Rate series produced by the simulator and the discounted cash-flow
//! objective over them.

use crate::error::{Error, Result};
use crate::reservoir::{Economics, WellKind};
use std::io::Write;

/// Field-wide surface rates of one schedule step (volume/day).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRates {
    /// Total oil production rate.
    pub q_o: f64,
    /// Total water production rate.
    pub q_w: f64,
    /// Total water injection rate.
    pub q_i: f64,
}

/// Per-well surface rates of one schedule step (volume/day). Producers carry
/// `oil`/`water`; injectors carry `injection`; the other fields are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WellStepRates {
    pub oil: f64,
    pub water: f64,
    pub injection: f64,
}

/// The full rate history of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    /// Field aggregates, one entry per schedule step.
    pub steps: Vec<StepRates>,
    /// `per_well[t][w]`: well `w`'s rates during step `t`.
    pub per_well: Vec<Vec<WellStepRates>>,
    /// Kind of each well slot, for self-contained export.
    pub well_kinds: Vec<WellKind>,
}

/// Discounted cash flow of a rate series:
/// `Σ_t (q_o·r_o − q_w·r_w − q_i·r_i)·Δt / (1 + b)^{p_t}` with `p_t` the
/// elapsed years at the end of step `t` (`t·Δt/365`).
pub fn npv(steps: &[StepRates], economics: &Economics, dt_days: f64) -> Result<f64> {
    economics.validate()?;
    if !dt_days.is_finite() || dt_days <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step length must be positive, got {dt_days} days"
        )));
    }
    let mut total = 0.0;
    for (t, s) in steps.iter().enumerate() {
        let cash =
            (s.q_o * economics.r_o - s.q_w * economics.r_w - s.q_i * economics.r_i) * dt_days;
        let elapsed_years = (t + 1) as f64 * dt_days / 365.0;
        total += cash / (1.0 + economics.b).powf(elapsed_years);
    }
    Ok(total)
}

/// Writes the series as CSV rows `step,well,phase,rate` (both indices
/// 1-based). Injectors emit one `water_inj` row per step; producers emit
/// `oil_prod` and `water_prod` rows.
pub fn write_rates_csv<W: Write>(mut w: W, series: &RateSeries) -> Result<()> {
    writeln!(w, "step,well,phase,rate")?;
    for (t, wells) in series.per_well.iter().enumerate() {
        for (idx, rates) in wells.iter().enumerate() {
            match series.well_kinds[idx] {
                WellKind::Injector => {
                    writeln!(w, "{},{},water_inj,{}", t + 1, idx + 1, rates.injection)?;
                }
                WellKind::Producer => {
                    writeln!(w, "{},{},oil_prod,{}", t + 1, idx + 1, rates.oil)?;
                    writeln!(w, "{},{},water_prod,{}", t + 1, idx + 1, rates.water)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn econ(b: f64) -> Economics {
        Economics {
            r_o: 80.0,
            r_w: 5.0,
            r_i: 5.0,
            b,
        }
    }

    #[test]
    fn zero_rates_are_worth_zero() {
        let steps = vec![
            StepRates {
                q_o: 0.0,
                q_w: 0.0,
                q_i: 0.0
            };
            7
        ];
        assert_eq!(npv(&steps, &econ(0.1), 360.0).unwrap(), 0.0);
    }

    #[test]
    fn single_undiscounted_term_is_exact() {
        // 100 vol/day of oil at 80 for 360 days, no discounting.
        let steps = [StepRates {
            q_o: 100.0,
            q_w: 0.0,
            q_i: 0.0,
        }];
        assert_eq!(npv(&steps, &econ(0.0), 360.0).unwrap(), 2_880_000.0);
    }

    #[test]
    fn second_step_discount_uses_elapsed_years() {
        // Constant oil rate over two 360-day steps at 10 %/year: the second
        // term divides by (1.1)^(720/365) = 1.2068445239007641.
        let steps = [
            StepRates {
                q_o: 100.0,
                q_w: 0.0,
                q_i: 0.0,
            },
            StepRates {
                q_o: 100.0,
                q_w: 0.0,
                q_i: 0.0,
            },
        ];
        let value = npv(&steps, &econ(0.1), 360.0).unwrap();
        let first = 2_880_000.0 / 1.1f64.powf(360.0 / 365.0);
        let second = 2_386_388.588557589;
        assert_relative_eq!(value, first + second, max_relative = 1e-9);
        assert_relative_eq!(
            1.1f64.powf(720.0 / 365.0),
            1.2068445239007641,
            max_relative = 1e-12
        );
    }

    #[test]
    fn water_costs_subtract() {
        let steps = [StepRates {
            q_o: 10.0,
            q_w: 4.0,
            q_i: 6.0,
        }];
        // (10·80 − 4·5 − 6·5)·360 = (800 − 20 − 30)·360 = 270 000.
        assert_eq!(npv(&steps, &econ(0.0), 360.0).unwrap(), 270_000.0);
    }

    #[test]
    fn zero_discount_matches_the_plain_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let steps: Vec<StepRates> = (0..12)
            .map(|_| StepRates {
                q_o: rng.random_range(0.0..500.0),
                q_w: rng.random_range(0.0..500.0),
                q_i: rng.random_range(0.0..500.0),
            })
            .collect();
        let e = econ(0.0);
        let plain: f64 = steps
            .iter()
            .map(|s| (s.q_o * e.r_o - s.q_w * e.r_w - s.q_i * e.r_i) * 360.0)
            .sum();
        assert_relative_eq!(npv(&steps, &e, 360.0).unwrap(), plain, max_relative = 1e-12);
    }

    #[test]
    fn negative_prices_and_bad_steps_are_rejected() {
        let steps = [StepRates {
            q_o: 1.0,
            q_w: 0.0,
            q_i: 0.0,
        }];
        let mut e = econ(0.0);
        e.r_w = -5.0;
        assert!(npv(&steps, &e, 360.0).is_err());
        let mut e = econ(0.0);
        e.b = -1.0;
        assert!(npv(&steps, &e, 360.0).is_err());
        assert!(npv(&steps, &econ(0.0), 0.0).is_err());
    }

    #[test]
    fn csv_export_writes_one_row_per_phase() {
        let series = RateSeries {
            steps: vec![StepRates {
                q_o: 750.5,
                q_w: 8.25,
                q_i: 1000.0,
            }],
            per_well: vec![vec![
                WellStepRates {
                    oil: 0.0,
                    water: 0.0,
                    injection: 1000.0,
                },
                WellStepRates {
                    oil: 750.5,
                    water: 8.25,
                    injection: 0.0,
                },
            ]],
            well_kinds: vec![WellKind::Injector, WellKind::Producer],
        };
        let mut buf = Vec::new();
        write_rates_csv(&mut buf, &series).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "step,well,phase,rate\n\
             1,1,water_inj,1000\n\
             1,2,oil_prod,750.5\n\
             1,2,water_prod,8.25\n"
        );
    }
}
