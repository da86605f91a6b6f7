//! Averaged plant model of two buck converters feeding one resistive load.
//!
//! Both converters see the same output node, so the two output capacitors
//! are lumped (`C = C1 + C2`) and only one voltage state is integrated.

use crate::error::{invalid, Error, Result};

/// Input voltage used when a scenario does not give one.
pub const DEFAULT_VIN: f64 = 16.0;

/// Physical constants of one converter, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterParams {
    /// Inductance (H).
    pub inductance: f64,
    /// Output capacitance (F).
    pub capacitance: f64,
    /// Input source voltage (V).
    pub vin: f64,
    /// Rated current (A).
    pub i_max: f64,
}

impl ConverterParams {
    pub fn new(inductance: f64, capacitance: f64, vin: f64, i_max: f64) -> Result<Self> {
        let p = ConverterParams {
            inductance,
            capacitance,
            vin,
            i_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("L", self.inductance)?;
        positive("C", self.capacitance)?;
        positive("Vin", self.vin)?;
        positive("Imax", self.i_max)
    }

    /// Converter 1 of the reference setup: 1 mH, 10 uF, 5 A rating.
    pub fn reference_converter1() -> Self {
        ConverterParams {
            inductance: 1e-3,
            capacitance: 10e-6,
            vin: DEFAULT_VIN,
            i_max: 5.0,
        }
    }

    /// Converter 2 of the reference setup: 1 mH, 10 uF, 2 A rating.
    pub fn reference_converter2() -> Self {
        ConverterParams {
            i_max: 2.0,
            ..Self::reference_converter1()
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(invalid(name, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Dynamic variables of the closed loop.
///
/// `d2` is a state because the sharing controller commands its rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub i_l1: f64,
    pub i_l2: f64,
    pub vo: f64,
    pub d2: f64,
}

impl PlantState {
    pub const ZERO: PlantState = PlantState {
        i_l1: 0.0,
        i_l2: 0.0,
        vo: 0.0,
        d2: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.i_l1, self.i_l2, self.vo, self.d2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        PlantState {
            i_l1: a[0],
            i_l2: a[1],
            vo: a[2],
            d2: a[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Time derivative of [`PlantState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantStateDerivative {
    pub di_l1: f64,
    pub di_l2: f64,
    pub dvo: f64,
    pub dd2: f64,
}

impl PlantStateDerivative {
    pub fn to_array(self) -> [f64; 4] {
        [self.di_l1, self.di_l2, self.dvo, self.dd2]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Lumped output capacitance seen by the shared node.
pub fn total_capacitance(p1: &ConverterParams, p2: &ConverterParams) -> f64 {
    p1.capacitance + p2.capacitance
}

/// Inductor current slope `(d * Vin - Vo) / L`.
pub fn inductor_current_rate(duty: f64, vo: f64, p: &ConverterParams) -> f64 {
    (duty * p.vin - vo) / p.inductance
}

/// Output voltage slope from the node current balance.
pub fn output_voltage_rate(state: &PlantState, ctot: f64, r: f64) -> f64 {
    (state.i_l1 + state.i_l2 - state.vo / r) / ctot
}

/// Averaged plant equations plus the commanded duty-2 rate.
pub fn plant_derivatives(
    state: &PlantState,
    p1: &ConverterParams,
    p2: &ConverterParams,
    r: f64,
    d1: f64,
    d2_dot: f64,
) -> Result<PlantStateDerivative> {
    if !state.is_finite() {
        return Err(Error::NonFinite("plant state"));
    }
    if !d1.is_finite() {
        return Err(Error::NonFinite("d1"));
    }
    if !d2_dot.is_finite() {
        return Err(Error::NonFinite("d2_dot"));
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("load resistance"));
    }
    if r <= 0.0 {
        return Err(invalid("R", format!("must be > 0, got {r}")));
    }
    Ok(PlantStateDerivative {
        di_l1: inductor_current_rate(d1, state.vo, p1),
        di_l2: inductor_current_rate(state.d2, state.vo, p2),
        dvo: output_voltage_rate(state, total_capacitance(p1, p2), r),
        dd2: d2_dot,
    })
}

/// Steady state with `Vo = Vref` and currents split in proportion to the ratings.
pub fn equilibrium(
    p1: &ConverterParams,
    p2: &ConverterParams,
    r: f64,
    vref: f64,
) -> Result<PlantState> {
    positive("R", r)?;
    positive("Vref", vref)?;
    let vin = p1.vin.min(p2.vin);
    if vref >= vin {
        return Err(Error::Infeasible { vref, vin });
    }
    let total = vref / r;
    let rating = p1.i_max + p2.i_max;
    // larger share by ratio, smaller by difference, so the two sum to `total` exactly
    let (i_l1, i_l2) = if p1.i_max >= p2.i_max {
        let i1 = p1.i_max * total / rating;
        (i1, total - i1)
    } else {
        let i2 = p2.i_max * total / rating;
        (total - i2, i2)
    };
    Ok(PlantState {
        i_l1,
        i_l2,
        vo: vref,
        d2: vref / p2.vin,
    })
}
