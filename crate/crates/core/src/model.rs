//! Physical parameters and shared domain types. Everything is stored in SI
//! base units; unit conversion happens only at interface boundaries.

use crate::trajectory::{make_quintic, TransportPolynomial};
use crate::{Error, Result};
use std::f64::consts::PI;

/// CODATA 2018 atomic mass constant (kg).
pub const ATOMIC_MASS_KG: f64 = 1.66053906660e-27;
/// CODATA 2018 elementary charge (C).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602176634e-19;
/// CODATA 2018 reduced Planck constant (J s).
pub const HBAR_JS: f64 = 1.054571817e-34;

/// Two-segment dc electrode geometry. Each segment produces a Gaussian
/// electrostatic potential `a * exp(-(x - b_i)^2 / (2 c^2))` with centers
/// fixed at `b_1 = 0` and `b_2 = spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapGeometry {
    amplitude: f64,
    width: f64,
    spacing: f64,
}

impl TrapGeometry {
    pub fn new(amplitude: f64, width: f64, spacing: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "electrode amplitude must be positive, got {amplitude}"
            )));
        }
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "segment spacing must be positive, got {spacing}"
            )));
        }
        // Harmonic solvability: width^2 - spacing*x + x^2 > 0 for all x in
        // [0, spacing]; the quadratic is minimal at x = spacing/2.
        if width <= 0.5 * spacing {
            return Err(Error::InvalidParameter(format!(
                "gaussian width {width} m cannot resolve a harmonic well anywhere \
                 between the segments; it must exceed half the spacing {spacing} m"
            )));
        }
        Ok(Self { amplitude, width, spacing })
    }

    /// Dimensionless electrostatic amplitude.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Gaussian width of each electrode potential (m).
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Distance between the two segment centers (m).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Segment centers along the trap axis (m).
    pub fn centers(&self) -> [f64; 2] {
        [0.0, self.spacing]
    }
}

/// Mass and charge of the shuttled ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    mass: f64,
    charge: f64,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ion mass must be positive, got {mass}"
            )));
        }
        if charge == 0.0 || !charge.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ion charge must be finite and nonzero, got {charge}"
            )));
        }
        Ok(Self { mass, charge })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }
}

/// Angular frequency of the reference harmonic trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceTrap {
    omega: f64,
}

impl ReferenceTrap {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trap angular frequency must be positive, got {omega}"
            )));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// First-order RC low-pass filter on each electrode circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCircuit {
    resistance: f64,
    capacitance: f64,
}

impl FilterCircuit {
    pub fn new(resistance: f64, capacitance: f64) -> Result<Self> {
        if !(resistance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "filter resistance must be nonnegative, got {resistance}"
            )));
        }
        if !(capacitance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "filter capacitance must be positive, got {capacitance}"
            )));
        }
        Ok(Self { resistance, capacitance })
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }

    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }
}

/// Duration, distance and reference trajectory of one transport protocol.
///
/// `distance` mirrors [`TrapGeometry::spacing`]; operations that take both
/// check the two agree.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSpec {
    duration: f64,
    distance: f64,
    polynomial: TransportPolynomial,
}

impl TransportSpec {
    pub fn new(duration: f64, distance: f64, polynomial: TransportPolynomial) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transport duration must be positive, got {duration}"
            )));
        }
        if !(distance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transport distance must be positive, got {distance}"
            )));
        }
        Ok(Self { duration, distance, polynomial })
    }

    /// Protocol duration t_f (s).
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Transport distance (m), equal to the segment spacing.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn polynomial(&self) -> &TransportPolynomial {
        &self.polynomial
    }

    /// Same duration and distance with a different reference trajectory.
    pub fn with_polynomial(&self, polynomial: TransportPolynomial) -> Self {
        Self { polynomial, ..self.clone() }
    }
}

/// One row of a [`PowerTrace`]: every voltage, power and energy channel of
/// the protocol at a single instant. All values in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub u1: f64,
    pub u2: f64,
    pub u1_rate: f64,
    pub u2_rate: f64,
    pub p_c1: f64,
    pub p_c2: f64,
    pub p_r1: f64,
    pub p_r2: f64,
    pub p_cs_signed: f64,
    pub p_cs_rectified: f64,
    pub p_ps: f64,
    pub e_ps: f64,
    pub f_shift: f64,
}

/// Sampled time series of the protocol's power and voltage channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    times: Vec<f64>,
    samples: Vec<TraceSample>,
}

impl PowerTrace {
    pub fn new(times: Vec<f64>, samples: Vec<TraceSample>) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::InvalidParameter(format!(
                "trace has {} times but {} samples",
                times.len(),
                samples.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter(
                "a power trace needs at least two samples".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "trace times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, samples })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Extracts one column as a vector, e.g. `trace.column(|s| s.p_ps)`.
    pub fn column(&self, f: impl Fn(&TraceSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
}

/// The reference parameter set used throughout: a ⁴⁰Ca⁺ ion shuttled 280 µm
/// between two segments in 0.418 µs, with a 2π×1.3 MHz reference trap and
/// 30 Ω / 1 nF electrode filters.
pub fn default_parameters() -> (TrapGeometry, IonSpecies, ReferenceTrap, FilterCircuit, TransportSpec) {
    let geom = TrapGeometry::new(0.2, 250e-6, 280e-6).expect("default geometry is valid");
    let ion = IonSpecies::new(40.0 * ATOMIC_MASS_KG, ELEMENTARY_CHARGE_C)
        .expect("default ion is valid");
    let trap = ReferenceTrap::new(2.0 * PI * 1.3e6).expect("default trap is valid");
    let filter = FilterCircuit::new(30.0, 1e-9).expect("default filter is valid");
    let spec = TransportSpec::new(0.418e-6, geom.spacing(), make_quintic())
        .expect("default transport spec is valid");
    (geom, ion, trap, filter, spec)
}

/// Transport distance and segment spacing are two views of the same length;
/// reject inputs where they drifted apart.
pub(crate) fn check_transport_distance(geom: &TrapGeometry, spec: &TransportSpec) -> Result<()> {
    let d = geom.spacing();
    if (spec.distance() - d).abs() > 1e-12 * d {
        return Err(Error::InvalidParameter(format!(
            "transport distance {:e} m does not match the segment spacing {:e} m",
            spec.distance(),
            d
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_match_reference_values() {
        let (geom, ion, trap, filter, spec) = default_parameters();
        assert_eq!(geom.amplitude(), 0.2);
        assert_eq!(geom.width(), 2.5e-4);
        assert_eq!(geom.spacing(), 2.8e-4);
        assert_eq!(geom.centers(), [0.0, 2.8e-4]);
        assert_eq!(spec.duration(), 4.18e-7);
        assert_eq!(spec.distance(), geom.spacing());
        assert_eq!(filter.resistance(), 30.0);
        assert_eq!(filter.capacitance(), 1e-9);
        assert_relative_eq!(trap.omega(), 2.0 * PI * 1.3e6);
        // mass of 40Ca+ as 40 atomic mass units, within 0.1% of the tabulated value
        assert_relative_eq!(ion.mass(), 6.642e-26, max_relative = 1e-3);
        assert_eq!(ion.charge(), 1.602176634e-19);
    }

    #[test]
    fn default_geometry_satisfies_solvability_guard() {
        let (geom, ..) = default_parameters();
        let margin = geom.width().powi(2) - geom.spacing().powi(2) / 4.0;
        assert_relative_eq!(margin, 4.29e-8, max_relative = 1e-12);
        assert!(margin > 0.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(TrapGeometry::new(0.0, 250e-6, 280e-6).is_err());
        assert!(TrapGeometry::new(0.2, -1e-6, 280e-6).is_err());
        assert!(TrapGeometry::new(0.2, 250e-6, 0.0).is_err());
        // width exactly half the spacing leaves no harmonic well at the midpoint
        assert!(TrapGeometry::new(0.2, 140e-6, 280e-6).is_err());
        assert!(TrapGeometry::new(0.2, 140.1e-6, 280e-6).is_ok());
        assert!(TrapGeometry::new(f64::NAN, 250e-6, 280e-6).is_err());

        assert!(IonSpecies::new(0.0, 1e-19).is_err());
        assert!(IonSpecies::new(1e-26, 0.0).is_err());
        assert!(ReferenceTrap::new(-1.0).is_err());
        assert!(FilterCircuit::new(-1.0, 1e-9).is_err());
        assert!(FilterCircuit::new(30.0, 0.0).is_err());
        // zero resistance is a legal idealization
        assert!(FilterCircuit::new(0.0, 1e-9).is_ok());

        let poly = make_quintic();
        assert!(TransportSpec::new(0.0, 2.8e-4, poly.clone()).is_err());
        assert!(TransportSpec::new(1e-6, -2.8e-4, poly).is_err());
    }

    #[test]
    fn power_trace_rejects_malformed_columns() {
        let row = TraceSample {
            u1: 0.0, u2: 0.0, u1_rate: 0.0, u2_rate: 0.0,
            p_c1: 0.0, p_c2: 0.0, p_r1: 0.0, p_r2: 0.0,
            p_cs_signed: 0.0, p_cs_rectified: 0.0,
            p_ps: 0.0, e_ps: 0.0, f_shift: 0.0,
        };
        assert!(PowerTrace::new(vec![0.0, 1.0], vec![row; 2]).is_ok());
        assert!(PowerTrace::new(vec![0.0, 1.0], vec![row; 3]).is_err());
        assert!(PowerTrace::new(vec![0.0], vec![row; 1]).is_err());
        assert!(PowerTrace::new(vec![1.0, 1.0], vec![row; 2]).is_err());
        assert!(PowerTrace::new(vec![1.0, 0.5], vec![row; 2]).is_err());
    }

    #[test]
    fn distance_mismatch_is_detected() {
        let (geom, .., spec) = default_parameters();
        assert!(check_transport_distance(&geom, &spec).is_ok());
        let off = TransportSpec::new(spec.duration(), 2.9e-4, spec.polynomial().clone()).unwrap();
        assert!(check_transport_distance(&geom, &off).is_err());
    }
}
