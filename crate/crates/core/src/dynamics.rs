//! Propagation of the augmented coefficient dynamics and the dynamical
//! invariants of the observer network.
//!
//! With `Φ(t) = exp(A_a t)` the outputs are `C_a Φ(t) x_a(0)`; the row `k`,
//! column `j` entry of `C_a Φ(t)` is the coefficient of `x_aj(0)` in output
//! `k`. Everything here acts on those coefficients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::matrix_exp;
use crate::synthesis::{sym_extremes, AugmentedSystem, NetworkRealization};

/// Rate × step above which trace sampling is flagged as too coarse.
pub const GRID_RATE_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Grid must start at exactly 0 and be finite and strictly increasing.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        match times.first() {
            None => return Err(Error::BadGrid("empty grid".into())),
            Some(&t0) if t0 != 0.0 => {
                return Err(Error::BadGrid(format!("grid must start at 0, not {t0}")))
            }
            _ => {}
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::BadGrid(format!("non-finite time {t}")));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::BadGrid(format!(
                "times must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    /// `0, h, 2h, …` up to `t_max` (inclusive when it falls on the lattice).
    pub fn uniform(t_max: f64, step: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::BadGrid(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::BadGrid(format!("step must be positive, got {step}")));
        }
        let count = (t_max / step + 1e-9).floor() as usize;
        Self::new((0..=count).map(|k| k as f64 * step).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Common spacing, if the grid is uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.times[1];
        let ok = self
            .times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - k as f64 * h).abs() <= 1e-9 * h * (k.max(1) as f64));
        ok.then_some(h)
    }

    /// Largest spacing between consecutive samples.
    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// `Φ(t_k) = exp(A t_k)` on every grid point, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    grid: TimeGrid,
    phi: Vec<DMatrix<f64>>,
}

impl Propagator {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[DMatrix<f64>] {
        &self.phi
    }

    /// Lower-right `dim - 1` block of every sample. For the augmented system
    /// this is `exp(A_o t)`, since the first row of `A_a` vanishes.
    pub fn observer_block(&self) -> Propagator {
        let d = self.phi.first().map_or(0, |p| p.nrows().saturating_sub(1));
        Propagator {
            grid: self.grid.clone(),
            phi: self
                .phi
                .iter()
                .map(|p| p.view((1, 1), (d, d)).into_owned())
                .collect(),
        }
    }
}

/// Propagator of an arbitrary drift.
pub fn propagate_drift(a: &DMatrix<f64>, grid: &TimeGrid) -> Result<Propagator> {
    let phi = grid
        .times()
        .par_iter()
        .map(|&t| matrix_exp(a, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Propagator {
        grid: grid.clone(),
        phi,
    })
}

pub fn propagate(aug: &AugmentedSystem, grid: &TimeGrid) -> Result<Propagator> {
    propagate_drift(aug.a_a(), grid)
}

/// `‖Φ(2t) − Φ(t)²‖ / ‖Φ(t)‖²` (Frobenius).
pub fn semigroup_residual(a: &DMatrix<f64>, t: f64) -> Result<f64> {
    let p1 = matrix_exp(a, t)?;
    let p2 = matrix_exp(a, 2.0 * t)?;
    let sq = &p1 * &p1;
    Ok((p2 - sq).norm() / p1.norm().powi(2))
}

/// Coefficient traces `e_k C_a Φ_j(t)` and derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    grid: TimeGrid,
    /// One `len(grid) × (2N+1)` table per output row.
    traces: Vec<DMatrix<f64>>,
    running_avg: Option<Vec<DMatrix<f64>>>,
    residuals: Vec<(String, f64)>,
    max_rate: f64,
}

impl SimulationResult {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn traces(&self) -> &[DMatrix<f64>] {
        &self.traces
    }

    /// Samples of `e_row C_a Φ_col(t)`.
    pub fn trace(&self, row: usize, col: usize) -> Vec<f64> {
        self.traces[row].column(col).iter().copied().collect()
    }

    pub fn running_avg(&self) -> Option<&[DMatrix<f64>]> {
        self.running_avg.as_deref()
    }

    pub fn set_running_avg(&mut self, avg: Vec<DMatrix<f64>>) {
        self.running_avg = Some(avg);
    }

    pub fn residuals(&self) -> &[(String, f64)] {
        &self.residuals
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn push_residual(&mut self, name: impl Into<String>, value: f64) {
        self.residuals.push((name.into(), value));
    }

    /// Largest entry magnitude of the drift the traces came from.
    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// Builds a result from externally computed traces (one table per row).
    pub fn from_traces(grid: TimeGrid, traces: Vec<DMatrix<f64>>, max_rate: f64) -> Result<Self> {
        if traces.iter().any(|t| t.nrows() != grid.len()) {
            return Err(Error::Dimension(
                "trace length differs from grid length".into(),
            ));
        }
        Ok(Self {
            grid,
            traces,
            running_avg: None,
            residuals: Vec::new(),
            max_rate,
        })
    }
}

/// Residual name for the plant-output constancy check.
pub const PLANT_ROW_RESIDUAL: &str = "plant_row_constancy";

pub fn coefficient_traces(aug: &AugmentedSystem, prop: &Propagator) -> Result<SimulationResult> {
    let c_a = aug.c_a();
    let (rows, cols) = c_a.shape();
    if prop.phi.first().is_some_and(|p| p.nrows() != cols) {
        return Err(Error::Dimension(format!(
            "propagator is {0}x{0}, output map has {cols} columns",
            prop.phi[0].nrows()
        )));
    }
    let steps = prop.grid.len();
    let mut traces = vec![DMatrix::zeros(steps, cols); rows];
    let mut plant_dev = 0.0f64;
    for (ti, phi) in prop.phi.iter().enumerate() {
        let out = c_a * phi;
        for k in 0..rows {
            traces[k].row_mut(ti).copy_from(&out.row(k));
        }
        let mut dev = out.row(0).into_owned();
        dev[0] -= 1.0;
        plant_dev = plant_dev.max(dev.norm());
    }
    let max_rate = aug.a_a().amax();
    Ok(SimulationResult {
        grid: prop.grid.clone(),
        traces,
        running_avg: None,
        residuals: vec![(PLANT_ROW_RESIDUAL.to_string(), plant_dev)],
        max_rate,
    })
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::BadHorizon(t))
    }
}

/// Averaged propagator `(1/T)∫₀ᵀ Φ(t) dt` built from `Φ_o(T) = exp(A_o T)`.
///
/// With `w = A_o⁻¹ b` and `M = A_o⁻¹(Φ_o(T) − I)/T` the average is
/// `[[1, 0], [(M − I) w, M]]`.
fn averaged_propagator(
    a_o: &DMatrix<f64>,
    b: &DVector<f64>,
    phi_o: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>> {
    let d = a_o.nrows();
    let lu = a_o.clone().lu();
    let w = lu.solve(b).ok_or(Error::SingularDrift)?;
    let m = lu
        .solve(&(phi_o - DMatrix::identity(d, d)))
        .ok_or(Error::SingularDrift)?
        / t;
    if m.iter().chain(w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::SingularDrift);
    }
    let mut avg = DMatrix::zeros(d + 1, d + 1);
    avg[(0, 0)] = 1.0;
    let z_col = (&m - DMatrix::identity(d, d)) * &w;
    avg.view_mut((1, 0), (d, 1)).copy_from(&z_col);
    avg.view_mut((1, 1), (d, d)).copy_from(&m);
    Ok(avg)
}

/// `(1/T)∫₀ᵀ C_a Φ(t) dt`, `(N+1) × (2N+1)`.
pub fn time_average_closed_form(aug: &AugmentedSystem, horizon: f64) -> Result<DMatrix<f64>> {
    check_horizon(horizon)?;
    let a_o = aug.observer_drift();
    let phi_o = matrix_exp(&a_o, horizon)?;
    let avg = averaged_propagator(&a_o, &aug.coupling(), &phi_o, horizon)?;
    Ok(aug.c_a() * avg)
}

/// Closed-form running averages at every grid point of `prop` (`C_a` at `t = 0`).
pub fn running_average_closed_form(
    aug: &AugmentedSystem,
    prop: &Propagator,
) -> Result<Vec<DMatrix<f64>>> {
    let a_o = aug.observer_drift();
    let b = aug.coupling();
    let d = a_o.nrows();
    let c_a = aug.c_a();
    let (rows, cols) = c_a.shape();
    let steps = prop.grid.len();
    let samples = prop
        .grid
        .times()
        .par_iter()
        .zip(prop.phi.par_iter())
        .map(|(&t, phi)| {
            if t == 0.0 {
                Ok(c_a.clone())
            } else {
                let phi_o = phi.view((1, 1), (d, d)).into_owned();
                averaged_propagator(&a_o, &b, &phi_o, t).map(|avg| c_a * avg)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![DMatrix::zeros(steps, cols); rows];
    for (ti, s) in samples.iter().enumerate() {
        for k in 0..rows {
            out[k].row_mut(ti).copy_from(&s.row(k));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Composite Simpson, closed with a 3/8 panel at odd sample counts.
    Simpson,
    /// Composite trapezoid, used for nonuniform grids.
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridAdvisory {
    /// `max|A_a| · step` exceeds [`GRID_RATE_LIMIT`].
    GridTooCoarse { rate_times_step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverages {
    /// One `len(grid) × (2N+1)` table per output row.
    pub rows: Vec<DMatrix<f64>>,
    pub rule: QuadratureRule,
    pub advisory: Option<GridAdvisory>,
}

/// Cumulative integral `∫₀^{t_k} f` at every sample.
pub fn cumulative_integral(times: &[f64], values: &[f64], uniform_step: Option<f64>) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    match uniform_step {
        Some(h) if n >= 3 => {
            // even-index Simpson partial sums
            let mut even = vec![0.0; n];
            let mut k = 2;
            while k < n {
                even[k] = even[k - 2] + h / 3.0 * (values[k - 2] + 4.0 * values[k - 1] + values[k]);
                k += 2;
            }
            out[1] = h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2]);
            for k in 2..n {
                out[k] = if k % 2 == 0 {
                    even[k]
                } else {
                    even[k - 3]
                        + 3.0 * h / 8.0
                            * (values[k - 3]
                                + 3.0 * values[k - 2]
                                + 3.0 * values[k - 1]
                                + values[k])
                };
            }
        }
        _ => {
            for k in 1..n {
                out[k] = out[k - 1] + 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
            }
        }
    }
    out
}

/// Running averages `(1/t_k)∫₀^{t_k}` of every trace by numerical quadrature.
/// Independent of the closed form; used to cross-check it.
pub fn time_average_quadrature(result: &SimulationResult) -> RunningAverages {
    let times = result.grid.times();
    let step = result.grid.uniform_step();
    let rule = if step.is_some() && times.len() >= 3 {
        QuadratureRule::Simpson
    } else {
        QuadratureRule::Trapezoid
    };
    let rows = result
        .traces
        .iter()
        .map(|table| {
            let mut avg = DMatrix::zeros(table.nrows(), table.ncols());
            for (j, col) in table.column_iter().enumerate() {
                let values: Vec<f64> = col.iter().copied().collect();
                let integral = cumulative_integral(times, &values, step);
                for (k, (&t, s)) in times.iter().zip(integral).enumerate() {
                    avg[(k, j)] = if t == 0.0 { values[0] } else { s / t };
                }
            }
            avg
        })
        .collect();
    RunningAverages {
        rows,
        rule,
        advisory: grid_advisory(result),
    }
}

/// Flags sampling that is coarse relative to the fastest drift entry.
pub fn grid_advisory(result: &SimulationResult) -> Option<GridAdvisory> {
    let rate_times_step = result.max_rate * result.grid.max_step();
    (rate_times_step > GRID_RATE_LIMIT).then_some(GridAdvisory::GridTooCoarse { rate_times_step })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEntry {
    pub horizon: f64,
    /// `max_i ‖(1/T)∫₀ᵀ (e_{i+1} C_a Φ(t) − e_1ᵀ) dt‖₂`.
    pub deviation: f64,
    /// `K / T`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `K = ½ (√κ + 1) ‖R_o⁻¹Θ_o⁻¹‖ ‖C_o‖ ‖[−v | I]‖`.
    pub constant: f64,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    pub fn all_within_bound(&self) -> bool {
        self.entries.iter().all(|e| e.deviation <= e.bound)
    }

    /// `max(D·T) / min(D·T)` over the horizons.
    pub fn scaled_spread(&self) -> f64 {
        let scaled: Vec<f64> = self
            .entries
            .iter()
            .map(|e| e.deviation * e.horizon)
            .collect();
        let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Deviation of every observer row's time average from the plant row.
pub fn consensus_deviation(avg: &DMatrix<f64>) -> f64 {
    let mut target = DVector::zeros(avg.ncols());
    target[0] = 1.0;
    (1..avg.nrows())
        .map(|k| (avg.row(k).transpose() - &target).norm())
        .fold(0.0, f64::max)
}

pub fn check_convergence(
    aug: &AugmentedSystem,
    real: &NetworkRealization,
    horizons: &[f64],
) -> Result<ConvergenceReport> {
    let (lambda_min, lambda_max) = sym_extremes(real.r_o());
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            lambda_min,
            lambda_max,
        });
    }
    let kappa = lambda_max / lambda_min;
    let r_theta = real.theta_o() * real.r_o();
    let inv = r_theta.try_inverse().ok_or(Error::SingularDrift)?;
    let d = 2 * real.n();
    let mut shift = DMatrix::zeros(d, d + 1);
    shift
        .view_mut((0, 0), (d, 1))
        .copy_from(&(-real.offset_direction()));
    shift.view_mut((0, 1), (d, d)).fill_with_identity();
    let constant = 0.5
        * (kappa.sqrt() + 1.0)
        * spectral_norm(&inv)
        * spectral_norm(real.c_o())
        * spectral_norm(&shift);

    let entries = horizons
        .par_iter()
        .map(|&horizon| {
            let avg = time_average_closed_form(aug, horizon)?;
            Ok(ConvergenceEntry {
                horizon,
                deviation: consensus_deviation(&avg),
                bound: constant / horizon,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { constant, entries })
}

/// Max relative change of `x̃ᵀ R_o x̃` along `x̃(t) = Φ_o(t) x0`.
pub fn check_hamiltonian_conservation(
    real: &NetworkRealization,
    x0: &DVector<f64>,
    prop_o: &Propagator,
) -> Result<f64> {
    let r = real.r_o();
    if x0.len() != r.nrows() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, R_o is {}x{}",
            x0.len(),
            r.nrows(),
            r.ncols()
        )));
    }
    if x0.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroState);
    }
    let energy = |x: &DVector<f64>| x.dot(&(r * x));
    let h0 = energy(x0);
    Ok(prop_o
        .phi
        .iter()
        .map(|phi| ((energy(&(phi * x0)) - h0) / h0).abs())
        .fold(0.0, f64::max))
}

/// Max over the grid of `‖Φ Θ Φᵀ − Θ‖_F`.
pub fn symplectic_residual(theta: &DMatrix<f64>, prop: &Propagator) -> f64 {
    prop.phi
        .iter()
        .map(|phi| (phi * theta * phi.transpose() - theta).norm())
        .fold(0.0, f64::max)
}

pub fn check_symplectic_ccr(real: &NetworkRealization, prop_o: &Propagator) -> f64 {
    symplectic_residual(real.theta_o(), prop_o)
}

/// Max over the grid of `‖Φ_o(t)‖₂ / √(λ_max(R_o)/λ_min(R_o))`.
pub fn check_norm_bound(real: &NetworkRealization, prop_o: &Propagator) -> Result<f64> {
    let (lambda_min, lambda_max) = sym_extremes(real.r_o());
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            lambda_min,
            lambda_max,
        });
    }
    let bound = (lambda_max / lambda_min).sqrt();
    Ok(prop_o
        .phi
        .iter()
        .map(|phi| spectral_norm(phi) / bound)
        .fold(0.0, f64::max))
}

/// `max |Re λ(A)| / ‖A‖₂`; vanishes for a purely oscillatory drift.
pub fn spectrum_real_part_ratio(a: &DMatrix<f64>) -> f64 {
    let scale = spectral_norm(a);
    if scale == 0.0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re.abs())
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
        let g = TimeGrid::uniform(10.0, 0.01).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g.times()[1000] - 10.0).abs() < 1e-12);
        assert!((g.uniform_step().unwrap() - 0.01).abs() < 1e-15);
        assert!(TimeGrid::new(vec![0.0, 0.1, 0.3])
            .unwrap()
            .uniform_step()
            .is_none());
        assert!(TimeGrid::uniform(0.0, 0.1).is_err());
        assert!(TimeGrid::uniform(1.0, -0.1).is_err());
    }

    #[test]
    fn constant_trace_average() {
        let grid = TimeGrid::uniform(5.0, 0.1).unwrap();
        let table = DMatrix::from_element(grid.len(), 1, 3.5);
        let res = SimulationResult::from_traces(grid, vec![table], 1.0).unwrap();
        let avg = time_average_quadrature(&res);
        assert_eq!(avg.rule, QuadratureRule::Simpson);
        assert!(avg.rows[0].iter().all(|&x| (x - 3.5).abs() < 1e-13));
        assert!(avg.advisory.is_none());
    }

    #[test]
    fn sine_trace_average() {
        let grid = TimeGrid::uniform(20.0, 0.01).unwrap();
        let vals: Vec<f64> = grid.times().iter().map(|t| (2.0 * t).sin()).collect();
        let table = DMatrix::from_column_slice(grid.len(), 1, &vals);
        let res = SimulationResult::from_traces(grid.clone(), vec![table], 2.0).unwrap();
        let avg = time_average_quadrature(&res);
        for (k, &t) in grid.times().iter().enumerate().skip(1) {
            let exact = (1.0 - (2.0 * t).cos()) / 2.0;
            assert!((avg.rows[0][(k, 0)] * t - exact).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn trapezoid_on_nonuniform_grid() {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.5, 2.0]).unwrap();
        let table = DMatrix::from_column_slice(4, 1, &[0.0, 0.5, 1.5, 2.0]);
        let res = SimulationResult::from_traces(grid, vec![table], 1.0).unwrap();
        let avg = time_average_quadrature(&res);
        assert_eq!(avg.rule, QuadratureRule::Trapezoid);
        // average of f(t) = t over [0, T] is T/2, exact for trapezoid
        assert!((avg.rows[0][(3, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coarse_grid_advisory() {
        let grid = TimeGrid::uniform(5.0, 0.6).unwrap();
        let table = DMatrix::zeros(grid.len(), 1);
        let res = SimulationResult::from_traces(grid, vec![table], 10.0).unwrap();
        assert!(matches!(
            time_average_quadrature(&res).advisory,
            Some(GridAdvisory::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn bad_horizon() {
        assert!(check_horizon(0.0).is_err());
        assert!(check_horizon(-1.0).is_err());
        assert!(check_horizon(f64::NAN).is_err());
    }
}
