//! The IMPES engine: implicit incompressible pressure solve, explicit upwind
//! saturation transport.
//!
//! Per schedule step:
//! 1. resolve well rates (voidage-rescaling rate-controlled producers when no
//!    pressure-controlled well is present, so the incompressible system stays
//!    solvable);
//! 2. assemble the five-point pressure system with harmonic inter-cell
//!    transmissibilities of `k·λ_t(Sw)` and Peaceman-coupled wells, anchor one
//!    cell when every well is rate-controlled, and solve by banded Cholesky
//!    (relative residual must reach 1e−8);
//! 3. shut in any pressure-controlled producer whose cell pressure fell below
//!    its bottom-hole pressure (back-flow) and re-solve until none does;
//! 4. advance water saturation by explicit upwind fractional-flow transport,
//!    sub-stepped so the CFL number stays at or below 0.5;
//! 5. report per-well surface rates (producer phase split by the upstream —
//!    i.e. well-cell — fractional flow, time-averaged over the sub-steps).

use crate::error::{Error, Result};
use crate::reservoir::npv::{RateSeries, StepRates, WellStepRates};
use crate::reservoir::{ReservoirCase, ResolvedControl, WellKind, WellLayout};

/// Hard cap on CFL sub-steps per schedule step.
pub const MAX_SUBSTEPS: usize = 10_000;
/// Target CFL number for the explicit transport update.
const CFL_TARGET: f64 = 0.5;
/// Required relative residual of the pressure solve.
const RESIDUAL_TOL: f64 = 1e-8;

/// Everything a simulation run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub series: RateSeries,
    /// Final water saturation per cell, full grid row-major (inactive cells
    /// keep the initial saturation).
    pub sw: Vec<f64>,
    /// Last solved pressure per cell, full grid row-major (inactive cells
    /// keep the initial pressure).
    pub pressure: Vec<f64>,
}

/// A Corey exponent, specialized once so the per-cell transport loop never
/// re-dispatches. `powi` for small whole numbers, `powf` otherwise.
#[derive(Clone, Copy)]
enum CoreyExp {
    Int(i32),
    Gen(f64),
}

impl CoreyExp {
    fn new(exp: f64) -> Self {
        let i = exp as i32;
        if i as f64 == exp && (1..=8).contains(&i) {
            CoreyExp::Int(i)
        } else {
            CoreyExp::Gen(exp)
        }
    }

    #[inline]
    fn apply(self, base: f64) -> f64 {
        match self {
            CoreyExp::Int(i) => base.powi(i),
            CoreyExp::Gen(e) => base.powf(e),
        }
    }
}

/// Corey relative permeabilities and the derived flow functions, with the
/// per-evaluation constants folded up front (this sits in the innermost
/// transport loop).
struct Fluids {
    swc: f64,
    /// 1 / (1 − Swc − Sor).
    inv_span: f64,
    /// krw_max / μw.
    c_w: f64,
    /// kro_max / μo.
    c_o: f64,
    exp_w: CoreyExp,
    exp_o: CoreyExp,
}

impl Fluids {
    fn from_case(case: &ReservoirCase) -> Self {
        Fluids {
            swc: case.swc,
            inv_span: 1.0 / (1.0 - case.swc - case.sor),
            c_w: case.krw_max / case.mu_w,
            c_o: case.kro_max / case.mu_o,
            exp_w: CoreyExp::new(case.corey_w),
            exp_o: CoreyExp::new(case.corey_o),
        }
    }

    /// Normalized saturation in [0, 1].
    #[inline]
    fn s_eff(&self, sw: f64) -> f64 {
        ((sw - self.swc) * self.inv_span).clamp(0.0, 1.0)
    }

    /// Total mobility; strictly positive on [Swc, 1−Sor].
    #[inline]
    fn lambda_t(&self, sw: f64) -> f64 {
        let s = self.s_eff(sw);
        self.c_w * self.exp_w.apply(s) + self.c_o * self.exp_o.apply(1.0 - s)
    }

    /// Water fractional flow.
    #[inline]
    fn fw(&self, sw: f64) -> f64 {
        let s = self.s_eff(sw);
        let lw = self.c_w * self.exp_w.apply(s);
        lw / (lw + self.c_o * self.exp_o.apply(1.0 - s))
    }

    /// Upper bound on |dfw/dSw| over the mobile range, by dense sampling.
    /// Drives the CFL limit; the 0.5 target leaves margin for the sampling.
    fn max_fw_slope(&self) -> f64 {
        let n = 4000;
        let lo = self.swc;
        let hi = lo + 1.0 / self.inv_span;
        let h = (hi - lo) / n as f64;
        let mut prev = self.fw(lo);
        let mut max_slope: f64 = 0.0;
        for s in 1..=n {
            let cur = self.fw(lo + s as f64 * h);
            max_slope = max_slope.max((cur - prev).abs() / h);
            prev = cur;
        }
        max_slope.max(1.0)
    }
}

/// `x^E` as the same repeated-squaring multiply tree `powi` lowers to, but
/// written out so the loop vectorizer sees plain multiplies instead of an
/// intrinsic call. Bit-identical to `x.powi(E)` for these exponents.
#[inline(always)]
fn pow_small<const E: i32>(x: f64) -> f64 {
    match E {
        1 => x,
        2 => x * x,
        3 => (x * x) * x,
        4 => {
            let x2 = x * x;
            x2 * x2
        }
        _ => x.powi(E),
    }
}

/// One explicit saturation sub-step over every cell: apply the accumulated
/// water balance, clamp to the mobile range, and refresh the fractional
/// flow. Specializing on integer Corey exponents keeps the loop free of
/// branches and `powi` loops so the compiler can use SIMD division, which is
/// the throughput limit of the whole transport stage. Recomputing the
/// fractional flow of an unchanged saturation reproduces the same bits, so
/// the unconditional pass is exactly equivalent to a change-gated one.
fn saturation_pass<const EW: i32, const EO: i32>(
    sw: &mut [f64],
    fw_cell: &mut [f64],
    d_water: &[f64],
    scale: f64,
    fluids: &Fluids,
    sw_max: f64,
) {
    let swc = fluids.swc;
    let inv_span = fluids.inv_span;
    let c_w = fluids.c_w;
    let c_o = fluids.c_o;
    for ((s, f), &dv) in sw.iter_mut().zip(fw_cell.iter_mut()).zip(d_water) {
        let new = (*s + scale * dv).clamp(swc, sw_max);
        *s = new;
        let se = ((new - swc) * inv_span).clamp(0.0, 1.0);
        let lw = c_w * pow_small::<EW>(se);
        *f = lw / (lw + c_o * pow_small::<EO>(1.0 - se));
    }
}

type SaturationPass = fn(&mut [f64], &mut [f64], &[f64], f64, &Fluids, f64);

/// Pick a specialized saturation kernel for common integer Corey exponent
/// pairs; other exponents fall back to the scalar flow functions.
fn saturation_pass_for(fluids: &Fluids) -> Option<SaturationPass> {
    use CoreyExp::Int;
    match (fluids.exp_w, fluids.exp_o) {
        (Int(1), Int(1)) => Some(saturation_pass::<1, 1>),
        (Int(1), Int(2)) => Some(saturation_pass::<1, 2>),
        (Int(1), Int(3)) => Some(saturation_pass::<1, 3>),
        (Int(1), Int(4)) => Some(saturation_pass::<1, 4>),
        (Int(2), Int(1)) => Some(saturation_pass::<2, 1>),
        (Int(2), Int(2)) => Some(saturation_pass::<2, 2>),
        (Int(2), Int(3)) => Some(saturation_pass::<2, 3>),
        (Int(2), Int(4)) => Some(saturation_pass::<2, 4>),
        (Int(3), Int(1)) => Some(saturation_pass::<3, 1>),
        (Int(3), Int(2)) => Some(saturation_pass::<3, 2>),
        (Int(3), Int(3)) => Some(saturation_pass::<3, 3>),
        (Int(3), Int(4)) => Some(saturation_pass::<3, 4>),
        (Int(4), Int(1)) => Some(saturation_pass::<4, 1>),
        (Int(4), Int(2)) => Some(saturation_pass::<4, 2>),
        (Int(4), Int(3)) => Some(saturation_pass::<4, 3>),
        (Int(4), Int(4)) => Some(saturation_pass::<4, 4>),
        _ => None,
    }
}

/// Dot product with four independent accumulators so the adds pipeline
/// instead of forming one long dependency chain (this is the inner kernel of
/// the banded factorization, the hottest loop in a simulation).
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Symmetric positive-definite band matrix, lower triangle stored row-wise:
/// `data[i·(bw+1) + bw − (i − j)]` holds `A[i][j]` for `i − bw ≤ j ≤ i`.
#[derive(Clone)]
struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Adds `v` to `A[i][j]` (and implicitly `A[j][i]`); callers pass `j ≤ i`.
    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let at = self.idx(i, j);
        self.data[at] += v;
    }

    /// Dense symmetric matrix-vector product (for the residual check).
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    /// In-place banded Cholesky factorization `A = L·Lᵀ`.
    fn cholesky(mut self) -> Result<BandCholesky> {
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                // L[i][j0..j] and L[j][j0..j] are both contiguous in band
                // storage, so the update is a dense dot product.
                let len = j - j0;
                let ri = self.idx(i, j0);
                let rj = self.idx(j, j0);
                let sum =
                    self.data[ri + len] - dot(&self.data[ri..ri + len], &self.data[rj..rj + len]);
                if j == i {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::SolverFailure {
                            residual: f64::NAN,
                            message: format!(
                                "pressure matrix lost positive definiteness at row {i}"
                            ),
                        });
                    }
                    self.data[ri + len] = sum.sqrt();
                } else {
                    self.data[ri + len] = sum / self.data[rj + len];
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bw: self.bw,
            data: self.data,
        })
    }
}

/// The lower Cholesky factor in band storage.
struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Solves `L·Lᵀ·x = b` by forward and backward substitution.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            // Row i's sub-diagonal entries are contiguous in band storage.
            let row = &self.data[self.idx(i, j0)..self.idx(i, i)];
            y[i] = (b[i] - dot(row, &y[j0..i])) / self.data[self.idx(i, i)];
        }
        let mut x = vec![0.0; self.n];
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            // Column i of L has stride `bw` in band storage; walk it directly.
            let mut sum = y[i];
            for (below, xj) in x[i + 1..=hi].iter().enumerate() {
                sum -= self.data[self.idx(i + 1 + below, i)] * xj;
            }
            x[i] = sum / self.data[self.idx(i, i)];
        }
        x
    }
}

/// One inter-cell connection (compact indices, `a < b`).
struct Face {
    a: usize,
    b: usize,
    /// Geometric factor `C·A/L` so that `T = geo·H(k_a·λ_a, k_b·λ_b)`.
    geo: f64,
    perm_a: f64,
    perm_b: f64,
}

/// Harmonic mean of two positive conductivities.
#[inline]
fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

struct WellSim {
    /// Index into the case's well slots (reporting order).
    slot: usize,
    kind: WellKind,
    compact: usize,
    control: WellSimControl,
}

enum WellSimControl {
    /// Per-step surface rate targets (injection or production).
    Rates(Vec<f64>),
    /// Pressure-coupled producer: constant BHP and Peaceman index.
    Bhp { bhp: f64, wi: f64 },
}

fn validate_layout(case: &ReservoirCase, layout: &WellLayout) -> Result<()> {
    if layout.cells.len() != case.wells.len() || layout.controls.len() != case.wells.len() {
        return Err(Error::DimensionMismatch {
            expected: case.wells.len(),
            got: layout.cells.len().min(layout.controls.len()),
        });
    }
    for (w, (&cell, control)) in layout.cells.iter().zip(&layout.controls).enumerate() {
        if cell >= case.nx * case.ny {
            return Err(Error::InvalidArgument(format!(
                "well {w} sits outside the grid (cell {cell})"
            )));
        }
        if !case.active[cell] {
            return Err(Error::InvalidArgument(format!(
                "well {w} sits on inactive cell {cell}"
            )));
        }
        match control {
            ResolvedControl::Rates(rates) => {
                if rates.len() != case.num_steps {
                    return Err(Error::DimensionMismatch {
                        expected: case.num_steps,
                        got: rates.len(),
                    });
                }
                if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "well {w} has a negative or non-finite rate"
                    )));
                }
            }
            ResolvedControl::Bhp(bhp) => {
                if case.wells[w].kind != WellKind::Producer {
                    return Err(Error::InvalidArgument(format!(
                        "well {w}: pressure control is supported on producers only"
                    )));
                }
                if !bhp.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "well {w} has a non-finite bottom-hole pressure"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Runs the case under a concrete well layout. Pure and deterministic: the
/// same `(case, layout)` pair always yields a bit-identical output.
pub fn simulate(case: &ReservoirCase, layout: &WellLayout) -> Result<SimulationOutput> {
    simulate_impl(case, layout, false)
}

/// `force_general_transport` pins the transport stage to the face-list
/// scatter even on fully active grids, where the structured stencil would
/// normally run. The two produce bit-identical results (a test asserts it);
/// the flag exists only so that test can reach the general path.
fn simulate_impl(
    case: &ReservoirCase,
    layout: &WellLayout,
    force_general_transport: bool,
) -> Result<SimulationOutput> {
    case.validate()?;
    validate_layout(case, layout)?;

    let n = case.nx * case.ny;
    // Compact numbering of active cells, row-major order preserved.
    let mut compact = vec![usize::MAX; n];
    let mut cells = Vec::new();
    for (c, slot) in compact.iter_mut().enumerate() {
        if case.active[c] {
            *slot = cells.len();
            cells.push(c);
        }
    }
    let nc = cells.len();

    let darcy = case.units.darcy_constant();
    let mut faces = Vec::new();
    let geo_x = darcy * case.dy * case.dz / case.dx;
    let geo_y = darcy * case.dx * case.dz / case.dy;
    for (a_compact, &cell) in cells.iter().enumerate() {
        let (i, j) = case.cell_coords(cell);
        if i < case.nx && case.active[cell + 1] {
            faces.push(Face {
                a: a_compact,
                b: compact[cell + 1],
                geo: geo_x,
                perm_a: case.perm[cell],
                perm_b: case.perm[cell + 1],
            });
        }
        if j < case.ny && case.active[cell + case.nx] {
            faces.push(Face {
                a: a_compact,
                b: compact[cell + case.nx],
                geo: geo_y,
                perm_a: case.perm[cell],
                perm_b: case.perm[cell + case.nx],
            });
        }
    }
    let bw = faces.iter().map(|f| f.b - f.a).max().unwrap_or(0);
    // Endpoint indices flattened once for the transport scatter loop.
    let face_a: Vec<u32> = faces.iter().map(|f| f.a as u32).collect();
    let face_b: Vec<u32> = faces.iter().map(|f| f.b as u32).collect();
    // On a fully active grid the compact numbering equals the row-major cell
    // numbering, so transport can run as a structured five-point stencil
    // (vectorizable sweeps) instead of an indexed face scatter.
    let structured = !force_general_transport && nc == n;

    // Peaceman well index with the unit system's wellbore radius.
    let re = 0.14 * (case.dx * case.dx + case.dy * case.dy).sqrt();
    let rw = case.units.wellbore_radius();
    if re <= rw {
        return Err(Error::InvalidArgument(format!(
            "equivalent radius {re} must exceed the wellbore radius {rw}"
        )));
    }
    let wells: Vec<WellSim> = layout
        .cells
        .iter()
        .zip(&layout.controls)
        .enumerate()
        .map(|(slot, (&cell, control))| WellSim {
            slot,
            kind: case.wells[slot].kind,
            compact: compact[cell],
            control: match control {
                ResolvedControl::Rates(r) => WellSimControl::Rates(r.clone()),
                ResolvedControl::Bhp(bhp) => WellSimControl::Bhp {
                    bhp: *bhp,
                    wi: darcy * 2.0 * std::f64::consts::PI * case.perm[cell] * case.dz
                        / (re / rw).ln(),
                },
            },
        })
        .collect();
    let n_wells = wells.len();

    let fluids = Fluids::from_case(case);
    let sat_pass = saturation_pass_for(&fluids);
    let max_slope = fluids.max_fw_slope();
    let vp = case.cell_pore_volume();
    let dt = case.dt_days;

    let mut sw = vec![case.sw_init; nc];
    let mut pressure = vec![case.p_init; nc];
    let mut steps = Vec::with_capacity(case.num_steps);
    let mut per_well_series = Vec::with_capacity(case.num_steps);

    for t in 0..case.num_steps {
        // ---- well rates for this step -------------------------------------
        let mut inj_total = 0.0;
        let mut inj_rate = vec![0.0; n_wells];
        let mut prod_target = vec![0.0; n_wells];
        let mut has_bhp = false;
        for w in &wells {
            match (&w.control, w.kind) {
                (WellSimControl::Rates(r), WellKind::Injector) => {
                    inj_rate[w.slot] = r[t];
                    inj_total += r[t];
                }
                (WellSimControl::Rates(r), WellKind::Producer) => prod_target[w.slot] = r[t],
                (WellSimControl::Bhp { .. }, _) => has_bhp = true,
            }
        }
        if !has_bhp {
            // Closed incompressible system: production must equal injection.
            // Decoded producer rates are allocation targets, rescaled so the
            // totals match (voidage replacement); with nothing to rescale
            // against, the step cannot flow at all.
            let target_total: f64 = prod_target.iter().sum();
            if inj_total <= 0.0 || target_total <= 0.0 {
                steps.push(StepRates {
                    q_o: 0.0,
                    q_w: 0.0,
                    q_i: 0.0,
                });
                per_well_series.push(vec![WellStepRates::default(); n_wells]);
                continue;
            }
            let scale = inj_total / target_total;
            for r in &mut prod_target {
                *r *= scale;
            }
        }

        // ---- pressure solve with back-flow shut-in ------------------------
        let lambda: Vec<f64> = sw.iter().map(|&s| fluids.lambda_t(s)).collect();
        let shut_tol = 1e-12 * inj_total.max(1.0);
        let mut open = vec![true; n_wells];
        let mut bhp_rate = vec![0.0; n_wells];
        let solved_pressure;
        loop {
            let any_bhp_open = wells
                .iter()
                .any(|w| matches!(w.control, WellSimControl::Bhp { .. }) && open[w.slot]);
            let anchor = if any_bhp_open { None } else { Some(0usize) };
            if anchor.is_some() {
                // The anchored all-rate system drops one balance equation;
                // it only conserves mass if the sources cancel.
                let net: f64 = inj_total - prod_target.iter().sum::<f64>();
                let scale = inj_total.max(1.0);
                if net.abs() > 1e-9 * scale {
                    return Err(Error::SolverFailure {
                        residual: net.abs() / scale,
                        message: "rate-controlled wells do not balance (every \
                                  pressure-controlled producer is shut in)"
                            .into(),
                    });
                }
            }

            let mut a = BandMatrix::zeros(nc, bw);
            let mut rhs = vec![0.0; nc];
            for f in &faces {
                let t_face = f.geo * harmonic(f.perm_a * lambda[f.a], f.perm_b * lambda[f.b]);
                match anchor {
                    Some(anc) if f.a == anc => {
                        a.add(f.b, f.b, t_face);
                        rhs[f.b] += t_face * case.p_init;
                    }
                    Some(anc) if f.b == anc => {
                        a.add(f.a, f.a, t_face);
                        rhs[f.a] += t_face * case.p_init;
                    }
                    _ => {
                        a.add(f.a, f.a, t_face);
                        a.add(f.b, f.b, t_face);
                        a.add(f.b, f.a, -t_face);
                    }
                }
            }
            for w in &wells {
                if Some(w.compact) == anchor {
                    continue;
                }
                match &w.control {
                    WellSimControl::Rates(_) => {
                        let q = match w.kind {
                            WellKind::Injector => inj_rate[w.slot],
                            WellKind::Producer => -prod_target[w.slot],
                        };
                        rhs[w.compact] += q;
                    }
                    WellSimControl::Bhp { bhp, wi } if open[w.slot] => {
                        let wil = wi * lambda[w.compact];
                        a.add(w.compact, w.compact, wil);
                        rhs[w.compact] += wil * bhp;
                    }
                    WellSimControl::Bhp { .. } => {}
                }
            }
            if let Some(anc) = anchor {
                a.add(anc, anc, 1.0);
                rhs[anc] = case.p_init;
            }

            let a_copy = a.clone();
            let p = a.cholesky()?.solve(&rhs);
            let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let residual = a_copy
                .matvec(&p)
                .iter()
                .zip(&rhs)
                .map(|(ax, b)| (ax - b) * (ax - b))
                .sum::<f64>()
                .sqrt()
                / rhs_norm.max(f64::MIN_POSITIVE);
            if !(residual <= RESIDUAL_TOL) {
                return Err(Error::SolverFailure {
                    residual,
                    message: format!("pressure solve stalled at step {}", t + 1),
                });
            }

            let mut changed = false;
            for w in &wells {
                if let WellSimControl::Bhp { bhp, wi } = &w.control {
                    if open[w.slot] {
                        let q = wi * lambda[w.compact] * (p[w.compact] - bhp);
                        if q < -shut_tol {
                            open[w.slot] = false;
                            changed = true;
                        } else {
                            bhp_rate[w.slot] = q.max(0.0);
                        }
                    }
                }
            }
            if !changed {
                solved_pressure = p;
                break;
            }
            for w in &wells {
                if !open[w.slot] {
                    bhp_rate[w.slot] = 0.0;
                }
            }
        }
        pressure = solved_pressure;

        // ---- frozen fluxes and per-cell source terms ----------------------
        let flux: Vec<f64> = faces
            .iter()
            .map(|f| {
                let t_face = f.geo * harmonic(f.perm_a * lambda[f.a], f.perm_b * lambda[f.b]);
                t_face * (pressure[f.a] - pressure[f.b])
            })
            .collect();
        let mut inj_cell = vec![0.0; nc];
        let mut prod_cell = vec![0.0; nc];
        let mut prod_rate = vec![0.0; n_wells];
        for w in &wells {
            match w.kind {
                WellKind::Injector => inj_cell[w.compact] += inj_rate[w.slot],
                WellKind::Producer => {
                    let q = match &w.control {
                        WellSimControl::Rates(_) => prod_target[w.slot],
                        WellSimControl::Bhp { .. } => bhp_rate[w.slot],
                    };
                    prod_rate[w.slot] = q;
                    prod_cell[w.compact] += q;
                }
            }
        }

        // ---- CFL sub-step count -------------------------------------------
        let mut outflux = prod_cell.clone();
        for (f, &q) in faces.iter().zip(&flux) {
            if q >= 0.0 {
                outflux[f.a] += q;
            } else {
                outflux[f.b] -= q;
            }
        }
        let mut dt_sub_max = f64::INFINITY;
        for &out in &outflux {
            if out > 0.0 {
                dt_sub_max = dt_sub_max.min(CFL_TARGET * vp / (out * max_slope));
            }
        }
        let n_sub = if dt_sub_max.is_finite() {
            (dt / dt_sub_max).ceil().max(1.0) as usize
        } else {
            1
        };
        if n_sub > MAX_SUBSTEPS {
            return Err(Error::CflOverflow {
                required: n_sub,
                cap: MAX_SUBSTEPS,
            });
        }
        let dt_sub = dt / n_sub as f64;

        // ---- explicit upwind transport ------------------------------------
        // The flux field is frozen for the whole step, so each face's
        // upstream cell is fixed: precompute it once, then run the sub-steps
        // as three dense passes (face scatter, well sources, saturation
        // update). Dense and branch-free beats sparse front tracking here:
        // upwind transport spreads machine-epsilon water one cell per
        // sub-step, so the "wet" region covers the grid almost immediately.
        let face_up: Vec<u32> = faces
            .iter()
            .zip(&flux)
            .map(|(f, &q)| if q >= 0.0 { f.a as u32 } else { f.b as u32 })
            .collect();
        // Frozen fluxes split by direction for the structured stencil:
        // qx[c] is the flux through the face between c and c+1 (zero in the
        // last column), qy[c] between c and c+nx (zero in the last row).
        let mut qx = vec![0.0; if structured { nc } else { 0 }];
        let mut qy = vec![0.0; if structured { nc } else { 0 }];
        if structured {
            for (f, &q) in faces.iter().zip(&flux) {
                if f.b - f.a == 1 && case.nx != 1 {
                    qx[f.a] = q;
                } else {
                    qy[f.a] = q;
                }
            }
        }
        let mut wx = vec![0.0; if structured { nc } else { 0 }];
        let mut wy = vec![0.0; if structured { nc } else { 0 }];
        let mut fw_cell: Vec<f64> = sw.iter().map(|&s| fluids.fw(s)).collect();
        let inj_list: Vec<(u32, f64)> = wells
            .iter()
            .filter(|w| w.kind == WellKind::Injector && inj_rate[w.slot] > 0.0)
            .map(|w| (w.compact as u32, inj_rate[w.slot]))
            .collect();
        let prod_list: Vec<(usize, u32, f64)> = wells
            .iter()
            .filter(|w| w.kind == WellKind::Producer && prod_rate[w.slot] > 0.0)
            .map(|w| (w.slot, w.compact as u32, prod_rate[w.slot]))
            .collect();

        let mut produced_water = vec![0.0; n_wells];
        let mut d_water = vec![0.0; nc];
        let sw_max = 1.0 - case.sor;
        let scale = dt_sub / vp;
        for _ in 0..n_sub {
            if structured {
                // Per-face water rates as two directional sweeps; the
                // upstream select compiles to a SIMD blend.
                let nx = case.nx;
                for (((w, &q), &f0), &f1) in wx[..nc - 1]
                    .iter_mut()
                    .zip(&qx[..nc - 1])
                    .zip(&fw_cell[..nc - 1])
                    .zip(&fw_cell[1..])
                {
                    let up = if q >= 0.0 { f0 } else { f1 };
                    *w = up * q;
                }
                if nc > nx {
                    for (((w, &q), &f0), &f1) in wy[..nc - nx]
                        .iter_mut()
                        .zip(&qy[..nc - nx])
                        .zip(&fw_cell[..nc - nx])
                        .zip(&fw_cell[nx..])
                    {
                        let up = if q >= 0.0 { f0 } else { f1 };
                        *w = up * q;
                    }
                }
                // Water balance per cell, accumulated in the same order the
                // face scatter would apply it (y-in, x-in, x-out, y-out), so
                // both transport paths agree bit for bit. Boundary faces
                // hold exact zeros, which makes the shifted reads safe.
                d_water[0] = (0.0 - wx[0]) - wy[0];
                for c in 1..nx {
                    d_water[c] = (wx[c - 1] - wx[c]) - wy[c];
                }
                if nc > nx {
                    for ((((d, &win), &xin), &xout), &yout) in d_water[nx..]
                        .iter_mut()
                        .zip(&wy[..nc - nx])
                        .zip(&wx[nx - 1..nc - 1])
                        .zip(&wx[nx..])
                        .zip(&wy[nx..])
                    {
                        *d = ((win + xin) - xout) - yout;
                    }
                }
            } else {
                d_water.fill(0.0);
                for (((&up, &a), &b), &q) in face_up.iter().zip(&face_a).zip(&face_b).zip(&flux) {
                    // SAFETY: every face index was built from the compact
                    // cell numbering in this function, so all are < nc ==
                    // len of `fw_cell` and `d_water`.
                    unsafe {
                        let water = *fw_cell.get_unchecked(up as usize) * q;
                        *d_water.get_unchecked_mut(a as usize) -= water;
                        *d_water.get_unchecked_mut(b as usize) += water;
                    }
                }
            }
            for &(c, rate) in &inj_list {
                d_water[c as usize] += rate;
            }
            for &(slot, c, rate) in &prod_list {
                let f = fw_cell[c as usize];
                d_water[c as usize] -= f * rate;
                produced_water[slot] += f * rate * dt_sub;
            }
            match sat_pass {
                Some(pass) => pass(&mut sw, &mut fw_cell, &d_water, scale, &fluids, sw_max),
                None => {
                    for ((s, f), &dv) in sw.iter_mut().zip(fw_cell.iter_mut()).zip(&d_water) {
                        let new = (*s + scale * dv).clamp(case.swc, sw_max);
                        *s = new;
                        *f = fluids.fw(new);
                    }
                }
            }
        }

        // ---- report the step ----------------------------------------------
        let mut per_well = vec![WellStepRates::default(); n_wells];
        let mut q_o = 0.0;
        let mut q_w = 0.0;
        for w in &wells {
            match w.kind {
                WellKind::Injector => per_well[w.slot].injection = inj_rate[w.slot],
                WellKind::Producer => {
                    let water = produced_water[w.slot] / dt;
                    let total = prod_rate[w.slot];
                    per_well[w.slot].water = water;
                    per_well[w.slot].oil = total - water;
                    q_w += water;
                    q_o += total - water;
                }
            }
        }
        steps.push(StepRates {
            q_o,
            q_w,
            q_i: inj_total,
        });
        per_well_series.push(per_well);
    }

    let mut sw_full = vec![case.sw_init; n];
    let mut pressure_full = vec![case.p_init; n];
    for (c_compact, &cell) in cells.iter().enumerate() {
        sw_full[cell] = sw[c_compact];
        pressure_full[cell] = pressure[c_compact];
    }
    Ok(SimulationOutput {
        series: RateSeries {
            steps,
            per_well: per_well_series,
            well_kinds: case.wells.iter().map(|w| w.kind).collect(),
        },
        sw: sw_full,
        pressure: pressure_full,
    })
}
