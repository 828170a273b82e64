//! Corrector fields `M₁…M₅`, `a` and the first-order price
//! `M₁ + aγv̄φ f + aγρM₂ + γφM₃ + γM₄ + γρM₅`, `f = x²∂²_xx M₁`.

mod leading;
mod step_three;

pub use leading::{m1_derivs, m1_price};

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::frac_processes::KernelTable;
use crate::mc_engine::{BaselineVol, MarketModel, PayoffSpec};
use crate::pde_kit::{
    apply_l, d_z, solve_backward, solve_by_transform, transform_constants, HeatRoute, ParabolicProblem,
    SpaceTimeGrid, Surface,
};

/// How the backward problems for `M₂`, `M₄`, `M₅` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Crank–Nicolson on every line.
    #[default]
    NumericPde,
    /// Exponential substitution plus heat-kernel solution when `v̄` is
    /// constant; Crank–Nicolson otherwise.
    ClosedFormWhereAvailable,
}

/// How `(M₃, a)` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepThreeRoute {
    /// Direct integration of `∂_z ã = q`, using `m ≡ 0`.
    #[default]
    Reduced,
    /// `m`, `q`, `n` by finite differences and the explicit double integral
    /// for `ã`. Fails with a non-finite field when `v̄` varies in time on
    /// typical grids.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    /// `None` selects [`SpaceTimeGrid::default_for`] around `x₀`.
    pub grid: Option<SpaceTimeGrid>,
    pub solver_path: SolverPath,
    pub step_three: StepThreeRoute,
    /// Use the triangular-integral formula in the heat-kernel step. The
    /// resulting correctors are for comparison output only.
    pub literal_step2: bool,
    /// `φ_t` at the pricing time.
    pub phi_value: f64,
    /// Nodes with `|∂_z f|` below this fraction of its maximum are masked.
    pub singular_tol: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            grid: None,
            solver_path: SolverPath::NumericPde,
            step_three: StepThreeRoute::Reduced,
            literal_step2: false,
            phi_value: 0.0,
            singular_tol: 1e-8,
        }
    }
}

impl ApproxConfig {
    pub fn resolve_grid(&self, x0: f64, horizon: f64) -> Result<SpaceTimeGrid> {
        let grid = match self.grid {
            Some(g) => g,
            None => SpaceTimeGrid::default_for(x0, horizon)?,
        };
        grid.check_contains(x0)?;
        ensure_domain(
            (grid.horizon() - horizon).abs() <= 1e-12 * horizon.max(1.0) && grid.t(0) == 0.0,
            "grid horizon",
            grid.horizon(),
            "grid spans [0, T]",
        )?;
        Ok(grid)
    }
}

/// Every field of the expansion on one grid. Independent of `γ`, `ρ`, `φ`.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub m1: Surface,
    pub m2: Surface,
    pub m3: Surface,
    pub m4: Surface,
    pub m5: Surface,
    pub a_field: Surface,
    /// `f = x²∂²_xx M₁`; the terminal level holds the limit 0.
    pub f_field: Surface,
    pub dm1_dx: Surface,
    pub d2m1_dxx: Surface,
    pub theta_table: KernelTable,
    pub payoff: PayoffSpec,
    pub mu: f64,
    pub baseline: BaselineVol,
    /// Nodes masked in the `(M₃, a)` step.
    pub masked_nodes: usize,
    /// Built with the triangular-integral formula; not a solution of the system.
    pub comparison_only: bool,
}

impl CorrectorSet {
    pub fn grid(&self) -> SpaceTimeGrid {
        self.m1.grid
    }

    pub fn horizon(&self) -> f64 {
        self.m1.grid.horizon()
    }

    fn strike(&self) -> f64 {
        self.payoff.strike().unwrap_or(0.0)
    }

    /// `M₁` at `(t, x)` from the closed form.
    pub fn leading_price(&self, t: f64, x: f64) -> Result<f64> {
        leading_value(&self.payoff, t, x, self.mu, &self.baseline, self.horizon())
    }

    /// `f = x²∂²_xx M₁` at `(t, x)` from the closed form (0 at `t = T`).
    pub fn gamma_term(&self, t: f64, x: f64) -> f64 {
        let var = self.baseline.integrated_variance(t, self.horizon());
        leading::gamma_field(t, x.ln(), self.strike(), self.mu, var, self.horizon()).0
    }
}

fn leading_value(payoff: &PayoffSpec, t: f64, x: f64, mu: f64, vbar: &BaselineVol, horizon: f64) -> Result<f64> {
    let call = |k: f64| crate::mc_engine::bs_reference(x, k, t, horizon, mu, vbar, true);
    match payoff {
        PayoffSpec::Call { strike } => call(*strike),
        PayoffSpec::Put { strike } => Ok(call(*strike)? - (x * (mu * (horizon - t)).exp() - strike)),
        PayoffSpec::Custom { .. } => Err(unsupported()),
    }
}

fn unsupported() -> Error {
    Error::Config("the closed-form leading term needs a call or put payoff".into())
}

/// `M₁`, `f`, `∂_x M₁`, `∂²_xx M₁` and `θ` on the grid; `M₂…M₅ = 0`, `a = 1`.
pub fn build_leading(model: &MarketModel, payoff: &PayoffSpec, grid: SpaceTimeGrid) -> Result<CorrectorSet> {
    let horizon = grid.horizon();
    model.validate(horizon)?;
    payoff.validate()?;
    let strike = match payoff {
        PayoffSpec::Call { strike } | PayoffSpec::Put { strike } => *strike,
        PayoffSpec::Custom { .. } => return Err(unsupported()),
    };
    let is_put = matches!(payoff, PayoffSpec::Put { .. });
    let (nt, nz) = (grid.n_t(), grid.n_z());
    let vbar = &model.baseline;
    let mu = model.mu;
    let mut m1 = Array2::zeros((nt, nz));
    let mut f = Array2::zeros((nt, nz));
    let mut dx = Array2::zeros((nt, nz));
    let mut dxx = Array2::zeros((nt, nz));
    for k in 0..nt {
        let t = grid.t(k);
        let var = vbar.integrated_variance(t, horizon);
        let growth = (mu * (horizon - t)).exp();
        for i in 0..nz {
            let z = grid.z(i);
            let x = z.exp();
            m1[(k, i)] = leading_value(payoff, t, x, mu, vbar, horizon)?;
            let (delta, gamma) = if var > 0.0 && strike > 0.0 {
                f[(k, i)] = leading::gamma_field(t, z, strike, mu, var, horizon).0;
                m1_derivs(t, x, strike, model, horizon)?
            } else {
                (if x > strike { growth } else { 0.0 }, 0.0)
            };
            dx[(k, i)] = if is_put { delta - growth } else { delta };
            dxx[(k, i)] = gamma;
        }
    }
    let theta_table = KernelTable::new(model.fou, grid.t_grid())?;
    let zeros = Surface::zeros(grid);
    Ok(CorrectorSet {
        m1: Surface::new(grid, m1)?,
        m2: zeros.clone(),
        m3: zeros.clone(),
        m4: zeros.clone(),
        m5: zeros,
        a_field: Surface::from_fn(grid, |_, _| 1.0),
        f_field: Surface::new(grid, f)?,
        dm1_dx: Surface::new(grid, dx)?,
        d2m1_dxx: Surface::new(grid, dxx)?,
        theta_table,
        payoff: payoff.clone(),
        mu,
        baseline: vbar.clone(),
        masked_nodes: 0,
        comparison_only: false,
    })
}

/// Solves `𝓛_v̄ M = source`, `M(T) = 0` along the configured route.
fn solve_corrector(c: &CorrectorSet, source: Surface, config: &ApproxConfig) -> Result<Surface> {
    let grid = c.grid();
    if source.values.iter().all(|&v| v == 0.0) {
        return Ok(Surface::zeros(grid));
    }
    let constant = c.baseline.is_constant();
    let problem = ParabolicProblem {
        mu: c.mu,
        vbar: c.baseline.clone(),
        source,
        terminal: vec![0.0; grid.n_z()],
    };
    let transform = |route| {
        let v = c.baseline.value(0.0);
        solve_by_transform(&problem, &grid, transform_constants(c.mu, v)?, route)
    };
    if config.literal_step2 {
        ensure_domain(
            constant,
            "vbar",
            c.baseline.value(0.0),
            "constant when the triangular-integral formula is requested",
        )?;
        return transform(HeatRoute::Triangular);
    }
    match config.solver_path {
        SolverPath::ClosedFormWhereAvailable if constant => transform(HeatRoute::Duhamel),
        _ => solve_backward(&problem, &grid),
    }
}

/// `∂_z f` in closed form on the corrector grid.
fn fz_field(c: &CorrectorSet) -> Surface {
    let g = c.grid();
    let horizon = g.horizon();
    let strike = c.strike();
    let values = Array2::from_shape_fn((g.n_t(), g.n_z()), |(k, i)| {
        let t = g.t(k);
        let var = c.baseline.integrated_variance(t, horizon);
        leading::gamma_field(t, g.z(i), strike, c.mu, var, horizon).1
    });
    Surface { grid: g, values }
}

/// Right-hand side of the `M₂` line, `-v̄(t)²θ_{t,T}∂_z f`.
pub fn m2_source(c: &CorrectorSet) -> Surface {
    let g = c.grid();
    let mut s = fz_field(c);
    for (k, mut row) in s.values.rows_mut().into_iter().enumerate() {
        let w = -c.baseline.value(g.t(k)).powi(2) * c.theta_table.theta_values[k];
        row.mapv_inplace(|v| w * v);
    }
    s
}

pub fn build_m2(c: &CorrectorSet, config: &ApproxConfig) -> Result<Surface> {
    solve_corrector(c, m2_source(c), config)
}

/// `(M₃, a)` with the number of nodes masked where `∂_z f` vanishes.
#[derive(Debug, Clone)]
pub struct StepThree {
    pub m3: Surface,
    pub a_field: Surface,
    pub masked_nodes: usize,
}

/// `ã = a - 1` from the configured route, then `M₃ = (1 - a)v̄ f`.
pub fn build_m3_and_a(c: &CorrectorSet, config: &ApproxConfig) -> Result<StepThree> {
    let g = c.grid();
    let fz = fz_field(c);
    let tilde = match config.step_three {
        StepThreeRoute::ClosedForm => step_three::closed_form(&c.f_field, &fz, c.mu, &c.baseline, config.singular_tol),
        StepThreeRoute::Reduced => step_three::reduced(&c.f_field, &fz, &c.baseline, config.singular_tol),
    };
    let a = tilde.values.mapv(|v| 1.0 + v);
    let mut m3 = Array2::zeros(a.dim());
    for k in 0..g.n_t() {
        let v = c.baseline.value(g.t(k));
        for i in 0..g.n_z() {
            m3[(k, i)] = (1.0 - a[(k, i)]) * v * c.f_field.values[(k, i)];
        }
    }
    let step = StepThree {
        m3: Surface::new(g, m3)?,
        a_field: Surface::new(g, a)?,
        masked_nodes: tilde.masked,
    };
    if !(step.m3.is_finite() && step.a_field.is_finite()) {
        return Err(Error::NonFiniteField {
            field: "a",
            masked: step.masked_nodes,
        });
    }
    Ok(step)
}

/// The field `m = 𝓛f/(v̄²∂_z f)` of the explicit `(M₃, a)` construction,
/// evaluated by finite differences; zero up to discretization error.
pub fn step_three_m_field(c: &CorrectorSet, singular_tol: f64) -> Surface {
    let (m, _, _) = step_three::m_field(&c.f_field, c.mu, &c.baseline, singular_tol);
    Surface { grid: c.grid(), values: m }
}

/// Right-hand sides of the `M₄` and `M₅` lines:
/// `-v̄ ∂_z M₃ θ_{t,T}` and `-M₂ 𝓛_v̄ a`.
pub fn m4_m5_sources(c: &CorrectorSet) -> (Surface, Surface) {
    let g = c.grid();
    let m3z = d_z(&c.m3);
    let la = apply_l(&c.a_field, c.mu, &c.baseline);
    let s4 = Array2::from_shape_fn((g.n_t(), g.n_z()), |(k, i)| {
        -c.baseline.value(g.t(k)) * m3z.values[(k, i)] * c.theta_table.theta_values[k]
    });
    let s5 = -(&c.m2.values * &la.values);
    (Surface { grid: g, values: s4 }, Surface { grid: g, values: s5 })
}

pub fn build_m4_m5(c: &CorrectorSet, config: &ApproxConfig) -> Result<(Surface, Surface)> {
    let (s4, s5) = m4_m5_sources(c);
    Ok((solve_corrector(c, s4, config)?, solve_corrector(c, s5, config)?))
}

/// The full pipeline `M₁ → M₂, (M₃, a) → M₄, M₅`.
pub fn build_correctors(
    model: &MarketModel,
    payoff: &PayoffSpec,
    horizon: f64,
    config: &ApproxConfig,
) -> Result<CorrectorSet> {
    let grid = config.resolve_grid(model.x0, horizon)?;
    let mut c = build_leading(model, payoff, grid)?;
    c.m2 = build_m2(&c, config)?;
    let step = build_m3_and_a(&c, config)?;
    c.m3 = step.m3;
    c.a_field = step.a_field;
    c.masked_nodes = step.masked_nodes;
    let (m4, m5) = build_m4_m5(&c, config)?;
    c.m4 = m4;
    c.m5 = m5;
    c.comparison_only = config.literal_step2;
    if c.masked_nodes > 0 {
        log::warn!("{} nodes masked where the z-derivative of f vanishes", c.masked_nodes);
    }
    Ok(c)
}

/// `M₁ + aγv̄φf + aγρM₂ + γφM₃ + γM₄ + γρM₅` at `(t, x)`, with `γ`, `ρ`, `v̄`
/// taken from `model`. `M₁` and `f` use their closed forms; the other
/// fields are interpolated at `(t, ln x)`.
pub fn assemble_price(c: &CorrectorSet, model: &MarketModel, t: f64, x: f64, phi: f64) -> Result<f64> {
    ensure_domain(x > 0.0, "x", x, "x > 0")?;
    let m1 = c.leading_price(t, x)?;
    let (gamma, rho) = (model.gamma, model.rho);
    if gamma == 0.0 {
        return Ok(m1);
    }
    let z = x.ln();
    let a = c.a_field.evaluate(t, z)?;
    let f = c.gamma_term(t, x);
    let m2 = c.m2.evaluate(t, z)?;
    let m3 = c.m3.evaluate(t, z)?;
    let m4 = c.m4.evaluate(t, z)?;
    let m5 = c.m5.evaluate(t, z)?;
    let v = model.baseline.value(t);
    Ok(m1 + a * gamma * v * phi * f + a * gamma * rho * m2 + gamma * phi * m3 + gamma * m4 + gamma * rho * m5)
}

/// Builds the correctors and evaluates the price at `(0, x₀)` with
/// `φ = config.phi_value`.
pub fn approx_price(model: &MarketModel, payoff: &PayoffSpec, horizon: f64, config: &ApproxConfig) -> Result<f64> {
    let c = build_correctors(model, payoff, horizon, config)?;
    assemble_price(&c, model, 0.0, model.x0, config.phi_value)
}

/// Region over which residuals are measured: time levels with
/// `t ≤ max_t_fraction · T` and nodes at least `z_trim` from either edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualWindow {
    pub max_t_fraction: f64,
    pub z_trim: f64,
}

impl Default for ResidualWindow {
    fn default() -> Self {
        Self {
            max_t_fraction: 0.9,
            z_trim: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualLine {
    pub name: &'static str,
    pub linf: f64,
    /// Root mean square over the window.
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub lines: Vec<ResidualLine>,
    pub masked_nodes: usize,
    pub comparison_only: bool,
}

impl ResidualReport {
    pub fn line(&self, name: &str) -> Option<&ResidualLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

/// Interior residuals of every line of the system, by finite differences.
pub fn residual_report(c: &CorrectorSet, window: ResidualWindow) -> ResidualReport {
    let g = c.grid();
    let (mu, vbar) = (c.mu, &c.baseline);
    let l = |s: &Surface| apply_l(s, mu, vbar).values;
    let la = l(&c.a_field);
    let vbar_at = Array2::from_shape_fn((g.n_t(), g.n_z()), |(k, _)| vbar.value(g.t(k)));
    let dvbar_at = Array2::from_shape_fn((g.n_t(), g.n_z()), |(k, _)| vbar.derivative(g.t(k)));
    let (s4, s5) = m4_m5_sources(c);
    let f = &c.f_field.values;
    let a = &c.a_field.values;

    let m1 = l(&c.m1);
    let m2 = l(&c.m2) - &m2_source(c).values;
    let mut m3 = l(&c.m3);
    Zip::from(&mut m3)
        .and(f)
        .and(a)
        .and(&la)
        .and(&vbar_at)
        .and(&dvbar_at)
        .for_each(|r, &f, &a, &la, &v, &dv| *r += f * (a * dv + v * la));
    let m4 = l(&c.m4) - &s4.values;
    let m5 = l(&c.m5) - &s5.values;
    let mut constraint = Array2::zeros(f.dim());
    Zip::from(&mut constraint)
        .and(f)
        .and(a)
        .and(&vbar_at)
        .and(&c.m3.values)
        .for_each(|r, &f, &a, &v, &m3| *r = (1.0 - a) * v * f - m3);

    let t_max = window.max_t_fraction * g.horizon();
    let (lo, hi) = (g.z_min() + window.z_trim, g.z_max() - window.z_trim);
    let norms = |name: &'static str, r: &Array2<f64>| {
        let (mut linf, mut sq, mut n) = (0.0_f64, 0.0, 0usize);
        for k in (0..g.n_t()).take_while(|&k| g.t(k) <= t_max + 1e-12) {
            for i in 0..g.n_z() {
                let z = g.z(i);
                if z < lo || z > hi {
                    continue;
                }
                let v = r[(k, i)];
                linf = linf.max(v.abs());
                sq += v * v;
                n += 1;
            }
        }
        ResidualLine {
            name,
            linf,
            l2: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
        }
    };
    ResidualReport {
        lines: vec![
            norms("M1", &m1),
            norms("M2", &m2),
            norms("M3", &m3),
            norms("M4", &m4),
            norms("M5", &m5),
            norms("constraint", &constraint),
        ],
        masked_nodes: c.masked_nodes,
        comparison_only: c.comparison_only,
    }
}
