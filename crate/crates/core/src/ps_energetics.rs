//! Energy and power of the transported ion (the primary system).
//!
//! The ion's energy against a fixed zero includes the purely time-dependent
//! shift `f(t)` of the potential: the electrode model pins the potential
//! value at the moving minimum, so the shift is not a free gauge. Dropping
//! it (`f = 0`) gives a formally valid but physically different energy
//! bookkeeping that is kept available for comparison.

use crate::electrostatics::{assert_solvable, solvability_guard};
use crate::model::{
    check_transport_distance, IonSpecies, ReferenceTrap, TrapGeometry, TransportSpec, HBAR_JS,
};
use crate::numerics::{find_sign_changes, integrate};
use crate::trajectory::{kinematics, kinematics_unchecked, Kinematics, TransportPolynomial};
use crate::Result;

/// Ion energy split into its physical contributions (J).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsEnergyBreakdown {
    /// Ground-state energy of the reference harmonic trap, ħω/2.
    pub zero_point: f64,
    /// Center-of-mass kinetic energy, m α̇²/2.
    pub kinetic: f64,
    /// Potential energy of the compensating tilt, −m α̈ α.
    pub tilt: f64,
    /// Time-dependent shift f(t) of the potential minimum (0 when disabled).
    pub shift: f64,
    /// Sum of the above.
    pub total: f64,
}

pub(crate) fn f_shift_raw(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> f64 {
    let c2 = geom.width() * geom.width();
    let d = geom.spacing();
    let a = kin.position;
    let g = c2 + a * (a - d);
    let m = ion.mass();
    let w2 = trap.omega() * trap.omega();
    m * a * kin.acceleration - c2 * m * (c2 * w2 + (d - 2.0 * a) * kin.acceleration) / g
}

/// Time-dependent energy shift of the potential minimum for an arbitrary
/// kinematic state (J).
pub fn f_shift_at(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> Result<f64> {
    solvability_guard(geom, kin.position)?;
    Ok(f_shift_raw(geom, ion, trap, kin))
}

/// Time-dependent energy shift `f(t)` along the transport protocol (J).
pub fn f_shift(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
) -> Result<f64> {
    check_transport_distance(geom, spec)?;
    let kin = kinematics(poly, spec, t)?;
    f_shift_at(geom, ion, trap, &kin)
}

/// Exact time derivative of [`f_shift`] (W).
pub fn f_shift_rate(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
) -> Result<f64> {
    check_transport_distance(geom, spec)?;
    let kin = kinematics(poly, spec, t)?;
    solvability_guard(geom, kin.position)?;
    let c2 = geom.width() * geom.width();
    let d = geom.spacing();
    let (a, v, ac, j) = (kin.position, kin.velocity, kin.acceleration, kin.jerk);
    let g = c2 + a * (a - d);
    let m = ion.mass();
    let w2 = trap.omega() * trap.omega();
    Ok(m * (v * ac + a * j) - c2 * m * (-2.0 * v * ac + (d - 2.0 * a) * j) / g
        + c2 * m * (c2 * w2 + (d - 2.0 * a) * ac) * (2.0 * a - d) * v / (g * g))
}

/// Ion energy at time `t`, with or without the shift term.
pub fn e_ps(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
    with_shift: bool,
) -> Result<PsEnergyBreakdown> {
    check_transport_distance(geom, spec)?;
    let kin = kinematics(poly, spec, t)?;
    let m = ion.mass();
    let zero_point = 0.5 * HBAR_JS * trap.omega();
    let kinetic = 0.5 * m * kin.velocity * kin.velocity;
    let tilt = -m * kin.acceleration * kin.position;
    let shift = if with_shift {
        f_shift_at(geom, ion, trap, &kin)?
    } else {
        0.0
    };
    Ok(PsEnergyBreakdown {
        zero_point,
        kinetic,
        tilt,
        shift,
        total: zero_point + kinetic + tilt + shift,
    })
}

pub(crate) fn p_ps_raw(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> f64 {
    let c2 = geom.width() * geom.width();
    let d = geom.spacing();
    let (a, v, ac, j) = (kin.position, kin.velocity, kin.acceleration, kin.jerk);
    let g = c2 + a * (a - d);
    let dm2a = d - 2.0 * a;
    let big_a = v * ac - c2 * dm2a * dm2a * v * ac / (g * g) - c2 * (-2.0 * v * ac + dm2a * j) / g;
    let big_b = c2 * c2 * (2.0 * a - d) * v / (g * g);
    let w2 = trap.omega() * trap.omega();
    ion.mass() * (big_a + big_b * w2)
}

/// Instantaneous ion power `dE_PS/dt` for an arbitrary kinematic state (W).
pub fn p_ps_at(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    kin: &Kinematics,
) -> Result<f64> {
    solvability_guard(geom, kin.position)?;
    Ok(p_ps_raw(geom, ion, trap, kin))
}

/// Instantaneous ion power `dE_PS/dt` at time `t` of the protocol (W).
pub fn p_ps(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
) -> Result<f64> {
    check_transport_distance(geom, spec)?;
    let kin = kinematics(poly, spec, t)?;
    p_ps_at(geom, ion, trap, &kin)
}

/// Ion power with the shift dropped: differentiating the `f = 0` energy
/// gives `-m alpha''' alpha`.
pub fn p_ps_f0_at(ion: &IonSpecies, kin: &Kinematics) -> f64 {
    -ion.mass() * kin.jerk * kin.position
}

/// The `f = 0` ion power at time `t` of the protocol (W).
pub fn p_ps_f0(
    ion: &IonSpecies,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
) -> Result<f64> {
    let kin = kinematics(poly, spec, t)?;
    Ok(p_ps_f0_at(ion, &kin))
}

/// Ion energy consumption `∫ |P_PS| dt` over the protocol (J).
///
/// With `with_shift` false the integrand is the `f = 0` power instead, which
/// is the comparison row of the optimization table.
pub fn e_ps_consumption(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    with_shift: bool,
) -> Result<f64> {
    check_transport_distance(geom, spec)?;
    assert_solvable(geom)?;
    let tf = spec.duration();
    let power = |t: f64| -> f64 {
        let kin = kinematics_unchecked(poly, spec, t);
        if with_shift {
            p_ps_raw(geom, ion, trap, &kin)
        } else {
            p_ps_f0_at(ion, &kin)
        }
    };
    // |P| has kinks at the sign changes; hand them to the quadrature
    let crossings = find_sign_changes(&power, 0.0, tf, 2048);
    let result = integrate(|t| power(t).abs(), 0.0, tf, 1e-8, &crossings)?;
    Ok(result.value)
}

/// Closed-form boundary power peak `60 d^2 m / t_f^3` of the quintic
/// protocol (W). For the parameters of interest (t_f below a microsecond)
/// the peak sits at the boundary times.
pub fn p_ps_peak(ion: &IonSpecies, spec: &TransportSpec) -> f64 {
    let d = spec.distance();
    60.0 * d * d * ion.mass() / spec.duration().powi(3)
}
