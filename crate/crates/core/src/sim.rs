//! Fixed-step integration of the closed loop.
//!
//! The controller is continuous: every RK4 stage re-evaluates both control
//! laws on the stage state. Load changes are snapped onto step boundaries;
//! when `dt` does not divide an event time, the step that reaches the event
//! is shortened to land on it.

use crate::control::{controller_step, x_constant, ControlGains, ControlSignals};
use crate::error::{invalid, Error, Result, StateComponent};
use crate::model::{equilibrium, plant_derivatives, ConverterParams, PlantState};

pub const DEFAULT_DT: f64 = 1e-6;
pub const DEFAULT_T_END: f64 = 0.1;
pub const DEFAULT_CCM_TOL: f64 = 1e-9;
/// Any state component beyond this magnitude (A or V) counts as divergence.
pub const DEFAULT_DIVERGENCE_LIMIT: f64 = 1e6;

const COMPONENTS: [StateComponent; 4] = [
    StateComponent::IL1,
    StateComponent::IL2,
    StateComponent::Vo,
    StateComponent::D2,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadStep {
    /// Time at which this resistance takes effect (s).
    pub t: f64,
    /// Load resistance (ohm).
    pub resistance: f64,
}

/// Piecewise-constant load resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    steps: Vec<LoadStep>,
}

impl LoadSchedule {
    pub fn new(steps: Vec<LoadStep>) -> Result<Self> {
        let Some(first) = steps.first() else {
            return Err(Error::Schedule("schedule is empty".into()));
        };
        if first.t != 0.0 {
            return Err(Error::Schedule(format!(
                "first entry must be at t = 0, got {}",
                first.t
            )));
        }
        for s in &steps {
            if !s.t.is_finite() {
                return Err(Error::Schedule(format!("non-finite event time {}", s.t)));
            }
            if !(s.resistance.is_finite() && s.resistance > 0.0) {
                return Err(Error::Schedule(format!(
                    "resistance must be > 0, got {} at t = {}",
                    s.resistance, s.t
                )));
            }
        }
        if let Some(w) = steps.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::Schedule(format!(
                "event times must be strictly increasing ({} then {})",
                w[0].t, w[1].t
            )));
        }
        Ok(LoadSchedule { steps })
    }

    pub fn constant(resistance: f64) -> Result<Self> {
        Self::new(vec![LoadStep { t: 0.0, resistance }])
    }

    pub fn steps(&self) -> &[LoadStep] {
        &self.steps
    }

    /// Resistance in force at `t`; an event's own instant already uses the new value.
    pub fn active_load(&self, t: f64) -> Result<f64> {
        if !(t >= self.steps[0].t) {
            return Err(Error::Schedule(format!(
                "t = {t} precedes the first schedule entry"
            )));
        }
        let idx = self.steps.partition_point(|s| s.t <= t);
        Ok(self.steps[idx - 1].resistance)
    }

    /// Load changes after t = 0.
    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().skip(1).map(|s| s.t)
    }

    pub fn initial_resistance(&self) -> f64 {
        self.steps[0].resistance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub converter1: ConverterParams,
    pub converter2: ConverterParams,
    pub gains: ControlGains,
    /// Output voltage reference (V).
    pub vref: f64,
    pub load: LoadSchedule,
    /// Integration step (s).
    pub dt: f64,
    /// End time (s).
    pub t_end: f64,
    pub initial_state: PlantState,
}

impl Scenario {
    /// Reference setup with a constant 10 ohm load, cold start.
    pub fn reference_constant_load() -> Self {
        Scenario {
            converter1: ConverterParams::reference_converter1(),
            converter2: ConverterParams::reference_converter2(),
            gains: ControlGains::default(),
            vref: 8.0,
            load: LoadSchedule::constant(10.0).expect("valid"),
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            initial_state: PlantState::ZERO,
        }
    }

    /// Reference setup with the load stepping from 10 ohm to 15 ohm at 50 ms.
    pub fn reference_load_step() -> Self {
        Scenario {
            load: LoadSchedule::new(vec![
                LoadStep {
                    t: 0.0,
                    resistance: 10.0,
                },
                LoadStep {
                    t: 0.05,
                    resistance: 15.0,
                },
            ])
            .expect("valid"),
            ..Self::reference_constant_load()
        }
    }

    /// Analytic steady state for the initial load.
    pub fn initial_equilibrium(&self) -> Result<PlantState> {
        equilibrium(
            &self.converter1,
            &self.converter2,
            self.load.initial_resistance(),
            self.vref,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.converter1.validate()?;
        self.converter2.validate()?;
        self.gains.validate()?;
        x_constant(&self.converter1, &self.converter2, &self.gains)?;
        if !(self.vref.is_finite() && self.vref > 0.0) {
            return Err(invalid("Vref", format!("must be > 0, got {}", self.vref)));
        }
        let vin = self.converter1.vin.min(self.converter2.vin);
        if self.vref >= vin {
            return Err(Error::Infeasible {
                vref: self.vref,
                vin,
            });
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        // t_end = 0 is allowed and yields the initial record only
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        if !(0.0..=1.0).contains(&self.initial_state.d2) {
            return Err(invalid(
                "d2",
                format!("initial duty must be in [0, 1], got {}", self.initial_state.d2),
            ));
        }
        Ok(())
    }
}

/// One recorded sample of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub i_l1: f64,
    pub i_l2: f64,
    pub vo: f64,
    pub d1: f64,
    pub d2: f64,
    pub d2_dot: f64,
    pub e: f64,
    pub e2: f64,
    pub v1_lyap: f64,
    pub v2_lyap: f64,
    pub r_active: f64,
    pub sat1: bool,
    pub sat2: bool,
}

impl TraceRecord {
    pub fn new(t: f64, state: &PlantState, r: f64, c: &ControlSignals, d2_clamped: bool) -> Self {
        TraceRecord {
            t,
            i_l1: state.i_l1,
            i_l2: state.i_l2,
            vo: state.vo,
            d1: c.d1,
            d2: state.d2,
            d2_dot: c.d2_dot,
            e: c.e,
            e2: c.e2,
            v1_lyap: c.v1_lyap,
            v2_lyap: c.v2_lyap,
            r_active: r,
            sat1: c.d1_saturated,
            sat2: d2_clamped || c.d2_saturated,
        }
    }

    /// Difference of the per-unit converter currents.
    pub fn per_unit_diff(&self) -> f64 {
        self.e2
    }

    pub fn state(&self) -> PlantState {
        PlantState {
            i_l1: self.i_l1,
            i_l2: self.i_l2,
            vo: self.vo,
            d2: self.d2,
        }
    }

    pub fn saturated(&self) -> bool {
        self.sat1 || self.sat2
    }
}

/// Classical fourth-order Runge-Kutta step for `y' = f(t, y)`.
pub fn rk4<const N: usize, E>(
    t: f64,
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], E>,
) -> std::result::Result<[f64; N], E> {
    let offset = |k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &offset(&k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &offset(&k2, 0.5 * dt))?;
    let k4 = f(t + dt, &offset(&k3, dt))?;
    Ok(std::array::from_fn(|i| {
        y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub state: PlantState,
    /// `d2` left [0, 1] during the step and was clamped back.
    pub d2_clamped: bool,
}

fn first_non_finite(a: &[f64; 4]) -> Option<(StateComponent, f64)> {
    a.iter()
        .zip(COMPONENTS)
        .find(|(v, _)| !v.is_finite())
        .map(|(v, c)| (c, *v))
}

/// Advance the closed loop by one step of length `dt` starting at `t`.
pub fn rk4_step(state: &PlantState, t: f64, dt: f64, scenario: &Scenario) -> Result<StepOutput> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    let r = scenario.load.active_load(t)?;
    let (p1, p2, gains) = (&scenario.converter1, &scenario.converter2, &scenario.gains);
    let next = rk4(t, &state.to_array(), dt, |ts, y| {
        if let Some((component, value)) = first_non_finite(y) {
            return Err(Error::Divergence {
                t: ts,
                component,
                value,
            });
        }
        let s = PlantState::from_array(*y);
        let c = controller_step(&s, scenario.vref, r, p1, p2, gains)?;
        let d = plant_derivatives(&s, p1, p2, r, c.d1, c.d2_dot)?.to_array();
        match first_non_finite(&d) {
            Some((component, value)) => Err(Error::Divergence {
                t: ts,
                component,
                value,
            }),
            None => Ok(d),
        }
    })?;
    if let Some((component, value)) = first_non_finite(&next) {
        return Err(Error::Divergence {
            t: t + dt,
            component,
            value,
        });
    }
    let mut state = PlantState::from_array(next);
    let d2 = state.d2.clamp(0.0, 1.0);
    let d2_clamped = d2 != state.d2;
    state.d2 = d2;
    Ok(StepOutput { state, d2_clamped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Record every n-th integration step (plus event and final samples).
    pub record_every: usize,
    /// Inductor currents below `-ccm_tol` abort the run; `None` disables the check.
    pub ccm_tol: Option<f64>,
    pub divergence_limit: f64,
}

impl SimOptions {
    pub fn new(record_every: usize) -> Self {
        SimOptions {
            record_every,
            ccm_tol: Some(DEFAULT_CCM_TOL),
            divergence_limit: DEFAULT_DIVERGENCE_LIMIT,
        }
    }
}

impl Default for SimOptions {
    fn default() -> Self {
        Self::new(1)
    }
}

/// A trace together with the error that stopped it early, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: Vec<TraceRecord>,
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<Vec<TraceRecord>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.trace),
        }
    }
}

/// Number of steps covering `[start, end]` with nominal step `dt`; the last
/// step is shortened when `dt` does not divide the interval.
fn steps_between(start: f64, end: f64, dt: f64) -> u64 {
    let ratio = (end - start) / dt;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    (n as u64).max(1)
}

fn check_state(state: &PlantState, t: f64, opts: &SimOptions) -> Result<()> {
    let a = state.to_array();
    if let Some((component, value)) = a
        .iter()
        .zip(COMPONENTS)
        .find(|(v, _)| v.abs() > opts.divergence_limit)
        .map(|(v, c)| (c, *v))
    {
        return Err(Error::Divergence {
            t,
            component,
            value,
        });
    }
    if let Some(tol) = opts.ccm_tol {
        for (current, component) in [
            (state.i_l1, StateComponent::IL1),
            (state.i_l2, StateComponent::IL2),
        ] {
            if current < -tol {
                return Err(Error::CcmViolation {
                    t,
                    component,
                    current,
                });
            }
        }
    }
    Ok(())
}

/// Integrate `scenario` from 0 to `t_end`, failing on divergence or loss of CCM.
pub fn run(scenario: &Scenario, record_every: usize) -> Result<Vec<TraceRecord>> {
    run_with(scenario, &SimOptions::new(record_every)).into_result()
}

/// Like [`run`], but keeps the samples recorded before a failure.
pub fn run_with(scenario: &Scenario, opts: &SimOptions) -> RunOutcome {
    let mut trace = Vec::new();
    let error = integrate(scenario, opts, &mut trace).err();
    RunOutcome { trace, error }
}

fn integrate(scenario: &Scenario, opts: &SimOptions, trace: &mut Vec<TraceRecord>) -> Result<()> {
    scenario.validate()?;
    if opts.record_every == 0 {
        return Err(invalid("record_every", "must be >= 1"));
    }
    let (p1, p2, gains) = (&scenario.converter1, &scenario.converter2, &scenario.gains);
    let sample = |t: f64, s: &PlantState, r: f64, clamped: bool| -> Result<TraceRecord> {
        let c = controller_step(s, scenario.vref, r, p1, p2, gains)?;
        Ok(TraceRecord::new(t, s, r, &c, clamped))
    };

    let mut state = scenario.initial_state;
    let r0 = scenario.load.active_load(0.0)?;
    trace.push(sample(0.0, &state, r0, false)?);
    if scenario.t_end == 0.0 {
        return Ok(());
    }

    let mut breakpoints: Vec<f64> = scenario
        .load
        .event_times()
        .filter(|&t| t < scenario.t_end)
        .collect();
    breakpoints.push(scenario.t_end);

    let mut start = 0.0;
    let mut taken: u64 = 0;
    for (seg, &end) in breakpoints.iter().enumerate() {
        let r = scenario.load.active_load(start)?;
        let n = steps_between(start, end, scenario.dt);
        for i in 0..n {
            let t0 = start + i as f64 * scenario.dt;
            let t1 = if i + 1 == n {
                end
            } else {
                start + (i + 1) as f64 * scenario.dt
            };
            let out = rk4_step(&state, t0, t1 - t0, scenario)?;
            state = out.state;
            check_state(&state, t1, opts)?;
            taken += 1;

            let segment_end = i + 1 == n;
            if taken.is_multiple_of(opts.record_every as u64) || segment_end {
                trace.push(sample(t1, &state, r, out.d2_clamped)?);
            }
            if segment_end && seg + 1 < breakpoints.len() {
                // other side of the load event: same state, new resistance
                let r_new = scenario.load.active_load(end)?;
                trace.push(sample(t1, &state, r_new, out.d2_clamped)?);
            }
        }
        start = end;
    }
    Ok(())
}
