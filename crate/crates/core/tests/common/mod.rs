#![allow(dead_code)]

use buckshare::control::controller_step;
use buckshare::{equilibrium, ControlGains, ConverterParams, PlantState};
use rand::Rng;

/// A random operating point with an unsaturated converter-1 duty.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub p1: ConverterParams,
    pub p2: ConverterParams,
    pub gains: ControlGains,
    pub r: f64,
    pub vref: f64,
    pub state: PlantState,
}

fn converter<R: Rng>(rng: &mut R) -> ConverterParams {
    ConverterParams {
        inductance: rng.gen_range(0.2e-3..5e-3),
        capacitance: rng.gen_range(2e-6..50e-6),
        vin: rng.gen_range(10.0..48.0),
        i_max: rng.gen_range(0.5..10.0),
    }
}

/// Draw parameters, gains, load and a state near the matching equilibrium.
pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    loop {
        let p1 = converter(rng);
        let p2 = converter(rng);
        let gains = ControlGains {
            k1: rng.gen_range(0.05..20.0),
            k2: rng.gen_range(0.05..100.0),
            ..ControlGains::default()
        };
        let r = rng.gen_range(1.0..100.0);
        let vref = rng.gen_range(0.1..0.9) * p1.vin.min(p2.vin);
        let Ok(eq) = equilibrium(&p1, &p2, r, vref) else { continue };
        let i_scale = vref / r;
        let state = PlantState {
            i_l1: eq.i_l1 + i_scale * rng.gen_range(-0.3..0.3),
            i_l2: eq.i_l2 + i_scale * rng.gen_range(-0.3..0.3),
            vo: vref * (1.0 + rng.gen_range(-1e-3..1e-3)),
            d2: rng.gen_range(0.02..0.98),
        };
        let Ok(c) = controller_step(&state, vref, r, &p1, &p2, &gains) else { continue };
        if c.d1_saturated {
            continue;
        }
        return Point {
            p1,
            p2,
            gains,
            r,
            vref,
            state,
        };
    }
}

/// `|a - b|` relative to the sum of the magnitudes of the terms involved.
pub fn rel_residual(residual: f64, terms: &[f64]) -> f64 {
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if scale == 0.0 {
        residual.abs()
    } else {
        residual.abs() / scale
    }
}

/// Relative residuals of the four design identities at one point:
/// voltage error dynamics, sharing error dynamics, and the two Lyapunov
/// derivatives. Rates are taken from the plant equations and the chain rule
/// is written out here, independently of the control-law formulas.
pub fn identity_residuals(pt: &Point) -> [f64; 4] {
    use buckshare::control::{desired_vo, x_constant};
    use buckshare::plant_derivatives;

    let Point {
        p1,
        p2,
        gains,
        r,
        vref,
        state: s,
    } = *pt;
    let c = p1.capacitance + p2.capacitance;
    let (k1, k2) = (gains.k1, gains.k2);
    let sig = controller_step(&s, vref, r, &p1, &p2, &gains).unwrap();
    let f = plant_derivatives(&s, &p1, &p2, r, sig.d1, sig.d2_dot).unwrap();

    // voltage loop: C de/dt + e (1/R + k1) = i~, with i~ from the controller
    let e = vref - s.vo;
    let e_dot = -f.dvo;
    let r1 = rel_residual(
        c * e_dot + e * (1.0 / r + k1) - sig.i_tilde,
        &[c * e_dot, e * (1.0 / r + k1), sig.i_tilde],
    );
    let i_tilde = vref / r - s.i_l2 + k1 * e - s.i_l1;

    // sharing loop: de2/dt = -k2 e2 - X V~o
    let x = x_constant(&p1, &p2, &gains).unwrap();
    let e2 = s.i_l1 / p1.i_max - s.i_l2 / p2.i_max;
    let e2_dot = f.di_l1 / p1.i_max - f.di_l2 / p2.i_max;
    let vo_d = desired_vo(sig.d1, s.d2, e2, &p1, &p2, &gains).unwrap();
    let v_tilde = vo_d - s.vo;
    let r2 = rel_residual(
        e2_dot + k2 * e2 + x * v_tilde,
        &[e2_dot, k2 * e2, x * v_tilde],
    );

    // dV1/dt along the flow
    let i_tilde_dot = -f.di_l2 + k1 * e_dot - f.di_l1;
    let v1_dot = e * e_dot + i_tilde * i_tilde_dot;
    let v1_claim = -(e * e / c) * (1.0 / r + k1) - i_tilde * i_tilde;
    let r3 = rel_residual(
        v1_dot - v1_claim,
        &[e * e_dot, i_tilde * i_tilde_dot, v1_claim],
    );

    // dV2/dt along the flow with d1 frozen; VoD is affine in (d2, e2)
    let vo_d_dot =
        (f.dd2 * p2.vin / (p2.i_max * p2.inductance) - k2 * e2_dot) / x;
    let v_tilde_dot = vo_d_dot - f.dvo;
    let v2_dot = e2 * e2_dot + v_tilde * v_tilde_dot;
    let v2_claim = -k2 * e2 * e2 - v_tilde * v_tilde;
    let r4 = rel_residual(
        v2_dot - v2_claim,
        &[e2 * e2_dot, v_tilde * v_tilde_dot, v2_claim],
    );

    [r1, r2, r3, r4]
}
