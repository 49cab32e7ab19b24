//! Gaussian electrode potentials and the time-dependent segment voltages
//! that realize a moving harmonic well plus compensating force.
//!
//! Each voltage pair solves the two-constraint system: the total potential's
//! slope at `alpha(t)` equals `-m alpha''(t)` and its curvature equals
//! `m omega^2`. Voltage rates are exact time derivatives of the closed-form
//! solution (chain rule through `alpha` and its derivatives), so resistive
//! powers, which go as the rate squared, carry no differencing noise.

use crate::model::{check_transport_distance, IonSpecies, ReferenceTrap, TrapGeometry, TransportSpec};
use crate::trajectory::{kinematics, Kinematics, TransportPolynomial};
use crate::{Error, Result};

/// Electrode segment label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    One,
    Two,
}

impl Segment {
    /// Center of this segment's Gaussian potential on the trap axis (m).
    pub fn center(self, geom: &TrapGeometry) -> f64 {
        match self {
            Segment::One => 0.0,
            Segment::Two => geom.spacing(),
        }
    }
}

/// Segment voltages and their exact time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltagePair {
    pub u1: f64,
    pub u2: f64,
    pub u1_rate: f64,
    pub u2_rate: f64,
}

/// Dimensionless electrostatic potential of one segment,
/// `a exp(-(x - b_i)^2 / (2 c^2))`, or its first or second spatial
/// derivative (1/m, 1/m²).
///
/// Panics if `order > 2`.
pub fn phi(geom: &TrapGeometry, segment: Segment, x: f64, order: u32) -> f64 {
    assert!(order <= 2, "phi supports spatial derivatives up to order 2");
    gauss_derivs(geom, x - segment.center(geom))[order as usize]
}

// Gaussian and its first three spatial derivatives at offset u from the center.
fn gauss_derivs(geom: &TrapGeometry, u: f64) -> [f64; 4] {
    let c2 = geom.width() * geom.width();
    let g = geom.amplitude() * (-u * u / (2.0 * c2)).exp();
    [
        g,
        -(u / c2) * g,
        ((u * u - c2) / (c2 * c2)) * g,
        u * (3.0 * c2 - u * u) / (c2 * c2 * c2) * g,
    ]
}

/// Determinant factor of the two-voltage constraint system at position `x`.
///
/// The system's determinant is `phi1 phi2 d g / c^6` with
/// `g = c^2 - d x + x^2`, so `g > 0` is exactly the harmonic-solvability
/// guard. Returns `g` or the degenerate-geometry error.
pub(crate) fn solvability_guard(geom: &TrapGeometry, x: f64) -> Result<f64> {
    let c2 = geom.width() * geom.width();
    let g = c2 + x * (x - geom.spacing());
    if g <= 1e-12 * c2 {
        return Err(Error::DegenerateGeometry(format!(
            "the voltage system is singular at alpha = {x:e} m: \
             width^2 - spacing*alpha + alpha^2 = {g:e} m^2"
        )));
    }
    Ok(g)
}

/// Checks the guard once at its global minimum (`alpha = spacing/2`), so
/// integration loops can use the infallible raw evaluators.
pub(crate) fn assert_solvable(geom: &TrapGeometry) -> Result<()> {
    solvability_guard(geom, 0.5 * geom.spacing()).map(|_| ())
}

pub(crate) fn voltages_raw(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> VoltagePair {
    let x = kin.position;
    let g1 = gauss_derivs(geom, x);
    let g2 = gauss_derivs(geom, x - geom.spacing());
    let det = g2[2] * g1[1] - g2[1] * g1[2];
    let m = ion.mass();
    let q = ion.charge();
    let w2 = trap.omega() * trap.omega();

    let n1 = -m * (w2 * g2[1] + kin.acceleration * g2[2]);
    let n2 = m * (w2 * g1[1] + kin.acceleration * g1[2]);
    let u1 = n1 / (q * det);
    let u2 = n2 / (q * det);

    let ddet = (g2[3] * g1[1] - g2[1] * g1[3]) * kin.velocity;
    let dn1 = -m * (w2 * g2[2] * kin.velocity + kin.jerk * g2[2] + kin.acceleration * g2[3] * kin.velocity);
    let dn2 = m * (w2 * g1[2] * kin.velocity + kin.jerk * g1[2] + kin.acceleration * g1[3] * kin.velocity);
    VoltagePair {
        u1,
        u2,
        u1_rate: (dn1 - u1 * q * ddet) / (q * det),
        u2_rate: (dn2 - u2 * q * ddet) / (q * det),
    }
}

/// Segment voltages and rates for an arbitrary kinematic state of the moving
/// well (position, velocity, acceleration, jerk).
pub fn voltages_at(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> Result<VoltagePair> {
    solvability_guard(geom, kin.position)?;
    Ok(voltages_raw(geom, ion, trap, kin))
}

/// Segment voltages and rates at time `t` of the transport protocol.
pub fn voltages(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    spec: &TransportSpec,
    poly: &TransportPolynomial,
    t: f64,
) -> Result<VoltagePair> {
    check_transport_distance(geom, spec)?;
    let kin = kinematics(poly, spec, t)?;
    voltages_at(geom, ion, trap, &kin)
}

/// Physical potential `q [U_1 phi_1(x) + U_2 phi_2(x)]` along the trap axis (J).
pub fn total_potential(geom: &TrapGeometry, ion: &IonSpecies, pair: &VoltagePair, x: f64) -> f64 {
    ion.charge()
        * (pair.u1 * phi(geom, Segment::One, x, 0) + pair.u2 * phi(geom, Segment::Two, x, 0))
}

/// Spatial derivative of the physical potential (J/m); the force on the ion
/// is its negative.
pub(crate) fn total_potential_slope(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    pair: &VoltagePair,
    x: f64,
) -> f64 {
    ion.charge()
        * (pair.u1 * phi(geom, Segment::One, x, 1) + pair.u2 * phi(geom, Segment::Two, x, 1))
}

/// Trajectory of the total potential's minimum,
/// `alpha(t) + alpha''(t) / omega^2`: the compensating force displaces the
/// minimum away from the reference trajectory wherever the transport
/// accelerates.
pub fn trap_minimum(
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    trap: &ReferenceTrap,
    t: f64,
) -> Result<f64> {
    let kin = kinematics(poly, spec, t)?;
    Ok(kin.position + kin.acceleration / (trap.omega() * trap.omega()))
}
