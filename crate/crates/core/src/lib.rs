//! Simulation and optimization of shortcut-to-adiabaticity ion transport in a
//! two-segment linear Paul trap, with full energy accounting for both the
//! shuttled ion (the primary system) and the dc electrode circuitry that
//! drives it (the control system).
//!
//! The trap axis potential is the sum of two Gaussian electrode potentials
//! whose voltages are synthesized so that the total potential is locally
//! harmonic around a moving center `alpha(t)` while a homogeneous force
//! cancels the inertial force of the moving frame. The ion then rides
//! `alpha(t)` without final excitation, and every joule spent by the ion and
//! by the RC-filtered electrode circuits can be tracked in closed form.
//!
//! Modules follow the physics pipeline:
//!
//! * [`model`] — physical parameters and shared domain types,
//! * [`trajectory`] — polynomial transport functions with the required
//!   boundary conditions,
//! * [`electrostatics`] — Gaussian potentials and segment voltage synthesis,
//! * [`ps_energetics`] — ion (primary system) energy, power and consumption,
//! * [`cs_energetics`] — electrode circuit (control system) powers and
//!   consumption,
//! * [`numerics`] — quadrature, ODE integration, derivative-free
//!   minimization, slope fitting,
//! * [`dynamics_oracle`] — direct classical integration of the ion motion as
//!   an independent check of the transport protocol,
//! * [`optimizer`] — consumption minimization over the free coefficients of
//!   a seventh-degree transport polynomial.

pub mod cs_energetics;
pub mod dynamics_oracle;
pub mod electrostatics;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod ps_energetics;
pub mod trajectory;

use model::{FilterCircuit, IonSpecies, PowerTrace, ReferenceTrap, TraceSample, TrapGeometry, TransportSpec};
use trajectory::TransportPolynomial;

/// Errors produced by the simulation and optimization routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A domain type was constructed with parameters violating its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A caller violated an operation's contract (argument out of its allowed set).
    #[error("contract violation: {0}")]
    Contract(String),
    /// An input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The electrode system cannot realize the requested harmonic potential.
    #[error("degenerate electrode geometry: {0}")]
    DegenerateGeometry(String),
    /// The adaptive quadrature exhausted its panel budget.
    #[error("quadrature did not converge after {evaluations} evaluations: \
             best estimate {value:e} with error estimate {error_estimate:e}")]
    QuadratureNonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },
    /// The explicit ODE integrator underflowed its step size.
    #[error("ODE step size underflow at t = {t:e} s: problem too stiff for the explicit integrator")]
    Stiffness { t: f64 },
    /// No minimization start point converged.
    #[error("optimization failed: {0}")]
    OptimizationFailed(String),
    /// A search bracket does not contain a unimodal minimum.
    #[error("bracket error: {0}")]
    Bracket(String),
    /// The simulated ion left the trapping region.
    #[error("ion escaped the trapping region: {0}")]
    Escape(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Samples every power and energy channel of the transport protocol on a
/// uniform time grid.
///
/// The columns cover the segment voltages with their rates, the capacitive
/// and resistive circuit powers, the signed and rectified circuit totals,
/// the ion power, the ion energy and the time-dependent shift of the
/// potential minimum.
pub fn sample_power_trace(
    geom: &TrapGeometry,
    ion: &IonSpecies,
    trap: &ReferenceTrap,
    filter: &FilterCircuit,
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    samples: usize,
) -> Result<PowerTrace> {
    if samples < 2 {
        return Err(Error::Contract(format!(
            "a power trace needs at least two samples, got {samples}"
        )));
    }
    model::check_transport_distance(geom, spec)?;
    electrostatics::assert_solvable(geom)?;

    let tf = spec.duration();
    let mut times = Vec::with_capacity(samples);
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = tf * (i as f64 / (samples - 1) as f64);
        let kin = trajectory::kinematics(poly, spec, t)?;
        let pair = electrostatics::voltages_at(geom, ion, trap, &kin)?;
        let cs = cs_energetics::cs_power(filter, &pair);
        let breakdown = ps_energetics::e_ps(geom, ion, trap, poly, spec, t, true)?;
        times.push(t);
        rows.push(TraceSample {
            u1: pair.u1,
            u2: pair.u2,
            u1_rate: pair.u1_rate,
            u2_rate: pair.u2_rate,
            p_c1: cs.p_c1,
            p_c2: cs.p_c2,
            p_r1: cs.p_r1,
            p_r2: cs.p_r2,
            p_cs_signed: cs.signed_total,
            p_cs_rectified: cs.rectified_total,
            p_ps: ps_energetics::p_ps(geom, ion, trap, poly, spec, t)?,
            e_ps: breakdown.total,
            f_shift: breakdown.shift,
        });
    }
    PowerTrace::new(times, rows)
}
