//! Backstepping control laws.
//!
//! Converter 1 regulates the output voltage: the inductor current `iL1` is the
//! virtual control, and the duty `d1` makes `diL1/dt` track the stabilizing
//! rate `W1`. Converter 2 enforces proportional current sharing: the output
//! voltage is its virtual control, and the law produces a duty *rate* for `d2`.
//!
//! The formulas here are the dimensionally consistent forms: the
//! voltage loop feeds forward `iL2` and `diL2/dt` unscaled, the duty
//! denominators are the input voltages, and the sharing law uses the
//! per-unit sharing error. With these forms the error dynamics and both
//! Lyapunov derivatives come out exactly as the design requires (see the
//! identity tests in `tests/identities.rs`).

use crate::error::{invalid, Error, Result};
use crate::model::{
    inductor_current_rate, output_voltage_rate, total_capacitance, ConverterParams, PlantState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    /// Voltage-loop gain (1/ohm).
    pub k1: f64,
    /// Sharing-loop gain (1/s).
    pub k2: f64,
    /// Smallest accepted |X| before the converter pair counts as degenerate.
    pub x_guard: f64,
    pub duty_min: f64,
    pub duty_max: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains {
            k1: 1.0,
            k2: 1.0,
            x_guard: 1e-3,
            duty_min: 0.0,
            duty_max: 1.0,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(invalid("k1", format!("must be > 0, got {}", self.k1)));
        }
        if !(self.k2.is_finite() && self.k2 > 0.0) {
            return Err(invalid("k2", format!("must be > 0, got {}", self.k2)));
        }
        if !(self.x_guard.is_finite() && self.x_guard > 0.0) {
            return Err(invalid(
                "x_guard",
                format!("must be > 0, got {}", self.x_guard),
            ));
        }
        let ok = self.duty_min.is_finite()
            && self.duty_max.is_finite()
            && 0.0 <= self.duty_min
            && self.duty_min < self.duty_max
            && self.duty_max <= 1.0;
        if !ok {
            return Err(invalid(
                "duty_min/duty_max",
                format!(
                    "need 0 <= duty_min < duty_max <= 1, got [{}, {}]",
                    self.duty_min, self.duty_max
                ),
            ));
        }
        Ok(())
    }
}

/// One evaluation of both controllers together with their diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlSignals {
    pub d1: f64,
    pub d2_dot: f64,
    /// Voltage error `Vref - Vo` (V).
    pub e: f64,
    /// Per-unit sharing error `iL1/I1m - iL2/I2m`.
    pub e2: f64,
    /// Virtual-control error `iL1D - iL1` (A).
    pub i_tilde: f64,
    /// Virtual-control error `VoD - Vo` (V).
    pub v_tilde: f64,
    pub v1_lyap: f64,
    pub v2_lyap: f64,
    pub d1_saturated: bool,
    /// `d2` sits on a bound and the commanded rate pushes it further out.
    pub d2_saturated: bool,
}

pub fn voltage_error(state: &PlantState, vref: f64) -> f64 {
    vref - state.vo
}

/// Model-based voltage error rate: `de/dt = -dVo/dt`.
pub fn voltage_error_rate(state: &PlantState, ctot: f64, r: f64) -> f64 {
    -output_voltage_rate(state, ctot, r)
}

/// Desired converter-1 current: `Vref/R - iL2 + k1 * e`.
pub fn desired_il1(state: &PlantState, vref: f64, r: f64, gains: &ControlGains) -> f64 {
    vref / r - state.i_l2 + gains.k1 * voltage_error(state, vref)
}

/// Stabilizing rate for `iL1`.
///
/// Chosen so that `V1 = (e^2 + i~^2)/2` decays as
/// `-(e^2/C)(1/R + k1) - i~^2` when `diL1/dt = W1`.
pub fn w1(di_l2: f64, e: f64, e_dot: f64, i_tilde: f64, gains: &ControlGains, ctot: f64) -> f64 {
    -di_l2 + i_tilde + e / ctot + gains.k1 * e_dot
}

/// Converter-1 duty realizing `diL1/dt = W1`, clamped to the duty bounds.
pub fn duty1(w1: f64, vo: f64, p1: &ConverterParams, gains: &ControlGains) -> Result<(f64, bool)> {
    if !(p1.vin > 0.0) {
        return Err(invalid("Vin1", format!("must be > 0, got {}", p1.vin)));
    }
    let raw = (p1.inductance * w1 + vo) / p1.vin;
    if raw.is_nan() {
        return Err(Error::NonFinite("d1"));
    }
    let d1 = raw.clamp(gains.duty_min, gains.duty_max);
    Ok((d1, d1 != raw))
}

pub fn sharing_error(state: &PlantState, p1: &ConverterParams, p2: &ConverterParams) -> f64 {
    state.i_l1 / p1.i_max - state.i_l2 / p2.i_max
}

/// Model-based rate of the sharing error for the applied duties.
pub fn sharing_error_rate(
    state: &PlantState,
    d1: f64,
    p1: &ConverterParams,
    p2: &ConverterParams,
) -> f64 {
    inductor_current_rate(d1, state.vo, p1) / p1.i_max
        - inductor_current_rate(state.d2, state.vo, p2) / p2.i_max
}

/// Coupling coefficient `X = 1/(I2m L2) - 1/(I1m L1)`, unchecked.
pub fn coupling(p1: &ConverterParams, p2: &ConverterParams) -> f64 {
    1.0 / (p2.i_max * p2.inductance) - 1.0 / (p1.i_max * p1.inductance)
}

/// [`coupling`] with the degeneracy guard applied.
pub fn x_constant(p1: &ConverterParams, p2: &ConverterParams, gains: &ControlGains) -> Result<f64> {
    let x = coupling(p1, p2);
    if !(x.abs() >= gains.x_guard) {
        return Err(Error::DegenerateCoupling {
            x,
            guard: gains.x_guard,
        });
    }
    Ok(x)
}

/// Output voltage that drives the sharing error as `de2/dt = -k2 e2`.
pub fn desired_vo(
    d1: f64,
    d2: f64,
    e2: f64,
    p1: &ConverterParams,
    p2: &ConverterParams,
    gains: &ControlGains,
) -> Result<f64> {
    let x = x_constant(p1, p2, gains)?;
    Ok((-d1 * p1.vin / (p1.i_max * p1.inductance) + d2 * p2.vin / (p2.i_max * p2.inductance)
        - gains.k2 * e2)
        / x)
}

/// Duty-rate command for converter 2.
///
/// `(I2m L2 / Vin2) * [X (dVo/dt + X e2 - V~o) + k2 de2/dt]`; along the
/// plant with `d1` frozen this gives `dV2/dt = -k2 e2^2 - V~o^2`.
pub fn d2_dot(
    e2: f64,
    e2_dot: f64,
    v_tilde: f64,
    vo_dot: f64,
    p2: &ConverterParams,
    x: f64,
    gains: &ControlGains,
) -> Result<f64> {
    if !(p2.vin > 0.0) {
        return Err(invalid("Vin2", format!("must be > 0, got {}", p2.vin)));
    }
    Ok(p2.i_max * p2.inductance / p2.vin * (x * (vo_dot + x * e2 - v_tilde) + gains.k2 * e2_dot))
}

pub fn lyapunov_v1(e: f64, i_tilde: f64) -> f64 {
    0.5 * (e * e + i_tilde * i_tilde)
}

pub fn lyapunov_v2(e2: f64, v_tilde: f64) -> f64 {
    0.5 * (e2 * e2 + v_tilde * v_tilde)
}

/// Evaluate both controllers on one measurement of the full state.
pub fn controller_step(
    state: &PlantState,
    vref: f64,
    r: f64,
    p1: &ConverterParams,
    p2: &ConverterParams,
    gains: &ControlGains,
) -> Result<ControlSignals> {
    let ctot = total_capacitance(p1, p2);

    // voltage loop
    let e = voltage_error(state, vref);
    let e_dot = voltage_error_rate(state, ctot, r);
    let i_tilde = desired_il1(state, vref, r, gains) - state.i_l1;
    let di_l2 = inductor_current_rate(state.d2, state.vo, p2);
    let (d1, d1_saturated) = duty1(w1(di_l2, e, e_dot, i_tilde, gains, ctot), state.vo, p1, gains)?;

    // sharing loop, on the duty actually applied
    let x = x_constant(p1, p2, gains)?;
    let e2 = sharing_error(state, p1, p2);
    let e2_dot = sharing_error_rate(state, d1, p1, p2);
    let v_tilde = desired_vo(d1, state.d2, e2, p1, p2, gains)? - state.vo;
    let vo_dot = output_voltage_rate(state, ctot, r);
    let d2_dot = d2_dot(e2, e2_dot, v_tilde, vo_dot, p2, x, gains)?;
    let d2_saturated = (state.d2 <= 0.0 && d2_dot < 0.0) || (state.d2 >= 1.0 && d2_dot > 0.0);

    Ok(ControlSignals {
        d1,
        d2_dot,
        e,
        e2,
        i_tilde,
        v_tilde,
        v1_lyap: lyapunov_v1(e, i_tilde),
        v2_lyap: lyapunov_v2(e2, v_tilde),
        d1_saturated,
        d2_saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::equilibrium;
    use approx::assert_relative_eq;

    fn refs() -> (ConverterParams, ConverterParams) {
        (
            ConverterParams::reference_converter1(),
            ConverterParams::reference_converter2(),
        )
    }

    fn at(vo: f64, i_l1: f64, i_l2: f64) -> PlantState {
        PlantState {
            i_l1,
            i_l2,
            vo,
            d2: 0.0,
        }
    }

    #[test]
    fn voltage_error_sign() {
        assert_eq!(voltage_error(&at(8.0, 0.0, 0.0), 8.0), 0.0);
        assert_eq!(voltage_error(&at(0.0, 0.0, 0.0), 8.0), 8.0);
        assert_eq!(voltage_error(&at(8.5, 0.0, 0.0), 8.0), -0.5);
    }

    #[test]
    fn desired_current_examples() {
        let g = ControlGains::default();
        let eq = at(8.0, 4.0 / 7.0, 8.0 / 35.0);
        assert_relative_eq!(desired_il1(&eq, 8.0, 10.0, &g), 4.0 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(desired_il1(&at(8.0, 0.0, 0.0), 8.0, 10.0, &g), 0.8);
        assert_relative_eq!(
            desired_il1(&at(7.0, 0.0, 0.0), 8.0, 10.0, &g),
            1.8,
            max_relative = 1e-14
        );
    }

    #[test]
    fn w1_examples() {
        let g = ControlGains::default();
        let ctot = 2e-5;
        assert_eq!(w1(0.0, 0.0, 0.0, 0.0, &g, ctot), 0.0);
        assert_eq!(w1(100.0, 0.0, 0.0, 0.0, &g, ctot), -100.0);

        // Vo = 7.9, R = 10, iL2 = 0.2, iL1 = iL1D = 0.7 so i~ = 0.
        // de/dt = (Vo/R - iL1 - iL2)/C = (0.79 - 0.9)/2e-5 = -5500.
        // W1 = e/C + k1 de/dt = 5000 - 5500 = -500.
        let s = at(7.9, 0.7, 0.2);
        let e = voltage_error(&s, 8.0);
        let e_dot = voltage_error_rate(&s, ctot, 10.0);
        let i_tilde = desired_il1(&s, 8.0, 10.0, &g) - s.i_l1;
        assert_relative_eq!(e, 0.1, max_relative = 1e-12);
        assert!(i_tilde.abs() < 1e-14);
        assert_relative_eq!(e_dot, -5500.0, max_relative = 1e-10);
        assert_relative_eq!(w1(0.0, e, e_dot, i_tilde, &g, ctot), -500.0, max_relative = 1e-9);
    }

    #[test]
    fn duty1_examples() {
        let (p1, _) = refs();
        let g = ControlGains::default();
        assert_eq!(duty1(0.0, 8.0, &p1, &g).unwrap(), (0.5, false));
        assert_eq!(duty1(0.0, 0.0, &p1, &g).unwrap(), (0.0, false));
        assert_eq!(duty1(1e6, 8.0, &p1, &g).unwrap(), (1.0, true));
        assert_eq!(duty1(-1e6, 8.0, &p1, &g).unwrap(), (0.0, true));
        let bad = ConverterParams { vin: 0.0, ..p1 };
        assert!(duty1(0.0, 8.0, &bad, &g).is_err());
    }

    #[test]
    fn sharing_error_examples() {
        let (p1, p2) = refs();
        assert!(sharing_error(&at(8.0, 4.0 / 7.0, 8.0 / 35.0), &p1, &p2).abs() < 1e-15);
        assert_eq!(sharing_error(&at(8.0, 0.0, 0.0), &p1, &p2), 0.0);
        assert_eq!(sharing_error(&at(8.0, 5.0, 0.0), &p1, &p2), 1.0);
    }

    #[test]
    fn x_constant_examples() {
        let (p1, p2) = refs();
        let g = ControlGains::default();
        assert_relative_eq!(x_constant(&p1, &p2, &g).unwrap(), 300.0, max_relative = 1e-12);
        assert_eq!(x_constant(&p2, &p1, &g).unwrap(), -x_constant(&p1, &p2, &g).unwrap());
        assert!(matches!(
            x_constant(&p1, &p1, &g),
            Err(Error::DegenerateCoupling { .. })
        ));
        // I1m L1 == I2m L2 with different factors
        let q = ConverterParams {
            inductance: 2.5e-3,
            ..p2
        };
        assert!(x_constant(&p1, &q, &g).is_err());
    }

    #[test]
    fn desired_vo_examples() {
        let (p1, p2) = refs();
        let g = ControlGains::default();
        assert_relative_eq!(
            desired_vo(0.5, 0.5, 0.0, &p1, &p2, &g).unwrap(),
            8.0,
            max_relative = 1e-12
        );
        assert_eq!(desired_vo(0.0, 0.0, 0.0, &p1, &p2, &g).unwrap(), 0.0);
        assert_relative_eq!(
            desired_vo(0.5, 0.5, 0.3, &p1, &p2, &g).unwrap(),
            7.999,
            max_relative = 1e-12
        );
    }

    #[test]
    fn d2_dot_examples() {
        let (_, p2) = refs();
        let g = ControlGains::default();
        assert_eq!(d2_dot(0.0, 0.0, 0.0, 0.0, &p2, 300.0, &g).unwrap(), 0.0);
        // (2e-3/16) * (300 * 3 - 0.01)
        assert_relative_eq!(
            d2_dot(0.01, -0.01, 0.0, 0.0, &p2, 300.0, &g).unwrap(),
            0.11249875,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            d2_dot(0.0, 0.0, 0.0, 1000.0, &p2, 300.0, &g).unwrap(),
            37.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lyapunov_values() {
        assert_eq!(lyapunov_v1(0.0, 0.0), 0.0);
        assert_eq!(lyapunov_v1(1.0, 0.0), 0.5);
        assert_eq!(lyapunov_v1(3.0, 4.0), 12.5);
        assert_eq!(lyapunov_v2(0.0, 0.0), 0.0);
        assert_eq!(lyapunov_v2(0.0, 2.0), 2.0);
        assert_relative_eq!(lyapunov_v2(0.6, 0.8), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn equilibrium_is_controller_fixed_point() {
        let (p1, p2) = refs();
        let g = ControlGains::default();
        let eq = equilibrium(&p1, &p2, 10.0, 8.0).unwrap();
        let c = controller_step(&eq, 8.0, 10.0, &p1, &p2, &g).unwrap();
        assert!((c.d1 - 0.5).abs() < 1e-10, "{c:?}");
        assert!(c.d2_dot.abs() < 1e-10, "{c:?}");
        assert!(c.e.abs() < 1e-12 && c.e2.abs() < 1e-12);
        assert!(c.i_tilde.abs() < 1e-12 && c.v_tilde.abs() < 1e-10);
        assert!(c.v1_lyap < 1e-20 && c.v2_lyap < 1e-20);
        assert!(!c.d1_saturated && !c.d2_saturated);
    }

    #[test]
    fn cold_start_pushes_both_duties_up() {
        let (p1, p2) = refs();
        let c = controller_step(&PlantState::ZERO, 8.0, 10.0, &p1, &p2, &ControlGains::default())
            .unwrap();
        assert!(c.d1 > 0.5);
        assert!(c.d2_dot > 0.0);
    }

    #[test]
    fn overloaded_converter1_shifts_load_to_converter2() {
        let (p1, p2) = refs();
        let s = PlantState {
            i_l1: 0.7,
            i_l2: 0.1,
            vo: 8.0,
            d2: 0.5,
        };
        assert!(sharing_error(&s, &p1, &p2) > 0.0);
        let c = controller_step(&s, 8.0, 10.0, &p1, &p2, &ControlGains::default()).unwrap();
        assert!(c.d2_dot > 0.0, "{c:?}");
    }

    #[test]
    fn gains_validation() {
        assert!(ControlGains::default().validate().is_ok());
        let bad = [
            ControlGains { k1: 0.0, ..Default::default() },
            ControlGains { k2: -1.0, ..Default::default() },
            ControlGains { x_guard: 0.0, ..Default::default() },
            ControlGains { duty_min: 0.5, duty_max: 0.5, ..Default::default() },
            ControlGains { duty_max: 1.5, ..Default::default() },
        ];
        for g in bad {
            assert!(g.validate().is_err(), "{g:?}");
        }
    }
}
