//! Polynomial transport functions `alpha(t)` with the boundary conditions
//! required for excitation-free transport: the trajectory starts and ends at
//! rest with zero acceleration, so the compensating force is continuous with
//! the force-free regions outside the protocol.

use crate::model::TransportSpec;
use crate::{Error, Result};

/// Dimensionless reference trajectory
/// `alpha(t) = d * sum_j a_j (t/t_f)^j` with coefficients stored in units of
/// the transport distance `d`.
///
/// Invariants enforced at construction: `a_0 = a_1 = a_2 = 0` (position,
/// velocity and acceleration vanish at `t = 0`), `sum a_j = 1`,
/// `sum j a_j = 0` and `sum j (j-1) a_j = 0` (the trajectory arrives at `d`
/// at rest with zero acceleration).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPolynomial {
    coeffs: Vec<f64>,
}

impl TransportPolynomial {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 4 {
            return Err(Error::InvalidParameter(
                "a transport polynomial needs degree at least 3 to satisfy the \
                 six boundary conditions"
                    .into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "transport polynomial coefficients must be finite".into(),
            ));
        }
        let scale: f64 = 1.0
            + coefficients
                .iter()
                .enumerate()
                .map(|(j, a)| (j * j) as f64 * a.abs())
                .sum::<f64>();
        let tol = 1e-10 * scale;
        for (j, a) in coefficients.iter().take(3).enumerate() {
            if a.abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "coefficient a_{j} = {a} must vanish: the trajectory starts at \
                     rest with zero acceleration"
                )));
            }
        }
        let total: f64 = coefficients.iter().sum();
        let vel: f64 = coefficients.iter().enumerate().map(|(j, a)| j as f64 * a).sum();
        let acc: f64 = coefficients
            .iter()
            .enumerate()
            .map(|(j, a)| (j * (j.saturating_sub(1))) as f64 * a)
            .sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "sum of coefficients is {total}, not 1: alpha(t_f) must equal the \
                 transport distance"
            )));
        }
        if vel.abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "sum of j*a_j is {vel}, not 0: the trajectory must arrive at rest"
            )));
        }
        if acc.abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "sum of j*(j-1)*a_j is {acc}, not 0: the trajectory must arrive with \
                 zero acceleration"
            )));
        }
        Ok(Self { coeffs: coefficients })
    }

    /// Coefficients in units of the transport distance, index = power of `t/t_f`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// The minimal smooth transport function
/// `alpha(t) = d [10 (t/t_f)^3 - 15 (t/t_f)^4 + 6 (t/t_f)^5]`.
pub fn make_quintic() -> TransportPolynomial {
    TransportPolynomial {
        coeffs: vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    }
}

/// A seventh-degree transport function with two free parameters.
///
/// `a6` and `a7` are the coefficients of `(t/t_f)^6` and `(t/t_f)^7` in
/// `alpha(t)` measured in meters (so the reference optimization data, with
/// values of order 10⁻², can be passed straight through); `distance` is the
/// transport distance used to normalize them. The cubic-to-quintic
/// coefficients solve the 3x3 linear system that restores the arrival
/// conditions `alpha(t_f) = d`, `alpha'(t_f) = 0`, `alpha''(t_f) = 0`.
pub fn make_septic(a6: f64, a7: f64, distance: f64) -> Result<TransportPolynomial> {
    if !(distance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transport distance must be positive, got {distance}"
        )));
    }
    if !a6.is_finite() || !a7.is_finite() {
        return Err(Error::InvalidParameter(
            "free septic coefficients must be finite".into(),
        ));
    }
    let c6 = a6 / distance;
    let c7 = a7 / distance;
    // Solution of  [1 1 1; 3 4 5; 6 12 20] (a3 a4 a5)' = (1-c6-c7, -6c6-7c7, -30c6-42c7)'
    let a3 = 10.0 - c6 - 3.0 * c7;
    let a4 = -15.0 + 3.0 * c6 + 8.0 * c7;
    let a5 = 6.0 - 3.0 * c6 - 6.0 * c7;
    TransportPolynomial::new(vec![0.0, 0.0, 0.0, a3, a4, a5, c6, c7])
}

/// Position and its first three time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
}

impl Kinematics {
    /// A state with all time derivatives zero (static trap holding `position`).
    pub fn at_rest(position: f64) -> Self {
        Self { position, velocity: 0.0, acceleration: 0.0, jerk: 0.0 }
    }
}

/// Evaluates `d^order alpha / dt^order` at time `t` by Horner's scheme on the
/// analytically differentiated coefficient sequence.
///
/// `order` must lie in `0..=3`; `t` must lie inside `[0, t_f]` (values are
/// not clamped).
pub fn eval(poly: &TransportPolynomial, spec: &TransportSpec, t: f64, order: u32) -> Result<f64> {
    if order > 3 {
        return Err(Error::Contract(format!(
            "derivative order {order} outside the supported range 0..=3"
        )));
    }
    check_time(spec, t)?;
    let k = order as usize;
    let s = t / spec.duration();
    let mut acc = 0.0;
    for j in (k..poly.coeffs.len()).rev() {
        let mut fac = 1.0;
        for i in 0..k {
            fac *= (j - i) as f64;
        }
        acc = acc * s + fac * poly.coeffs[j];
    }
    Ok(spec.distance() * acc / spec.duration().powi(order as i32))
}

/// All four trajectory derivatives at once.
pub fn kinematics(poly: &TransportPolynomial, spec: &TransportSpec, t: f64) -> Result<Kinematics> {
    check_time(spec, t)?;
    Ok(kinematics_unchecked(poly, spec, t))
}

/// Same as [`kinematics`] without the time-domain check; internal quadrature
/// and ODE callers guarantee `t` is inside the protocol window.
pub(crate) fn kinematics_unchecked(
    poly: &TransportPolynomial,
    spec: &TransportSpec,
    t: f64,
) -> Kinematics {
    let tf = spec.duration();
    let d = spec.distance();
    let s = t / tf;
    let (mut p0, mut p1, mut p2, mut p3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in (0..poly.coeffs.len()).rev() {
        let a = poly.coeffs[j];
        let jf = j as f64;
        p0 = p0 * s + a;
        if j >= 1 {
            p1 = p1 * s + jf * a;
        }
        if j >= 2 {
            p2 = p2 * s + jf * (jf - 1.0) * a;
        }
        if j >= 3 {
            p3 = p3 * s + jf * (jf - 1.0) * (jf - 2.0) * a;
        }
    }
    Kinematics {
        position: d * p0,
        velocity: d * p1 / tf,
        acceleration: d * p2 / (tf * tf),
        jerk: d * p3 / (tf * tf * tf),
    }
}

fn check_time(spec: &TransportSpec, t: f64) -> Result<()> {
    let tf = spec.duration();
    if !(0.0..=tf).contains(&t) {
        return Err(Error::Domain(format!(
            "t = {t:e} s lies outside the protocol window [0, {tf:e}] s"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_parameters;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn quintic_has_reference_coefficients() {
        let q = make_quintic();
        assert_eq!(q.coefficients(), &[0.0, 0.0, 0.0, 10.0, -15.0, 6.0]);
        assert_eq!(q.degree(), 5);
        let sum: f64 = q.coefficients().iter().sum();
        assert_eq!(sum, 1.0);
        let acc: f64 = q
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, a)| (j * j.saturating_sub(1)) as f64 * a)
            .sum();
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn septic_with_free_parameters_off_is_the_quintic() {
        let (geom, ..) = default_parameters();
        let s = make_septic(0.0, 0.0, geom.spacing()).unwrap();
        assert_eq!(&s.coefficients()[..6], make_quintic().coefficients());
        assert_eq!(s.coefficients()[6], 0.0);
        assert_eq!(s.coefficients()[7], 0.0);
    }

    #[test]
    fn septic_reference_parameter_sets_are_valid() {
        let (geom, .., spec) = default_parameters();
        for (a6, a7) in [(-0.0094, 0.0027), (-0.0195, -0.0049), (-0.0195, 0.0049)] {
            let p = make_septic(a6, a7, geom.spacing()).unwrap();
            let sum: f64 = p.coefficients().iter().sum();
            assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
            // arrival at rest, scaled by the velocity unit d/tf
            let spec7 = spec.with_polynomial(p);
            let vf = eval(spec7.polynomial(), &spec7, spec7.duration(), 1).unwrap();
            let scale = spec7.distance() / spec7.duration();
            assert_abs_diff_eq!(vf / scale, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_broken_boundary_conditions() {
        assert!(TransportPolynomial::new(vec![0.0, 0.0, 0.0]).is_err());
        assert!(TransportPolynomial::new(vec![0.1, 0.0, 0.0, 10.0, -15.0, 6.0]).is_err());
        assert!(TransportPolynomial::new(vec![0.0, 0.0, 0.0, 10.0, -15.0, 5.0]).is_err());
        assert!(TransportPolynomial::new(vec![0.0, 0.0, 0.0, 9.0, -14.0, 6.0]).is_err());
        assert!(TransportPolynomial::new(vec![0.0, 0.0, 0.0, f64::NAN, -15.0, 6.0]).is_err());
        assert!(TransportPolynomial::new(vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0]).is_ok());
    }

    #[test]
    fn eval_reference_points() {
        let (.., spec) = {
            let p = default_parameters();
            (p.0, p.4)
        };
        let q = make_quintic();
        let tf = spec.duration();
        let d = spec.distance();

        // odd symmetry about the midpoint
        let mid = eval(&q, &spec, 0.5 * tf, 0).unwrap();
        assert_relative_eq!(mid, 0.5 * d, max_relative = 1e-12);

        // third derivative at t = 0 is 60 d / tf^3 (differentiating the quintic
        // thrice leaves the constant term 6*5*4 * a3... checked against finite
        // differences below as well)
        let j0 = eval(&q, &spec, 0.0, 3).unwrap();
        assert_relative_eq!(j0, 60.0 * d / tf.powi(3), max_relative = 1e-12);

        // arrival at rest
        assert_eq!(eval(&q, &spec, tf, 1).unwrap(), 0.0);
        assert_eq!(eval(&q, &spec, tf, 2).unwrap(), 0.0);
        assert_eq!(eval(&q, &spec, tf, 0).unwrap(), d);
        assert_eq!(eval(&q, &spec, 0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_bad_order_and_time() {
        let (.., spec) = default_parameters();
        let q = make_quintic();
        assert!(matches!(eval(&q, &spec, 0.0, 4), Err(crate::Error::Contract(_))));
        assert!(matches!(eval(&q, &spec, -1e-9, 0), Err(crate::Error::Domain(_))));
        assert!(matches!(
            eval(&q, &spec, spec.duration() * 1.0000001, 0),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let (geom, .., spec) = default_parameters();
        let tf = spec.duration();
        let polys = [
            make_quintic(),
            make_septic(-0.0195, 0.0049, geom.spacing()).unwrap(),
        ];
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        let h = tf * 1e-6;
        for poly in &polys {
            for _ in 0..50 {
                let t = rng.gen_range(0.01..0.99) * tf;
                for order in 1..=3u32 {
                    let lo = eval(poly, &spec, t - h, order - 1).unwrap();
                    let hi = eval(poly, &spec, t + h, order - 1).unwrap();
                    let fd = (hi - lo) / (2.0 * h);
                    let exact = eval(poly, &spec, t, order).unwrap();
                    let scale = spec.distance() / tf.powi(order as i32);
                    assert_relative_eq!(fd / scale, exact / scale, epsilon = 1e-5, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn kinematics_agrees_with_eval() {
        let (geom, .., spec) = default_parameters();
        let p = make_septic(-0.0094, 0.0027, geom.spacing()).unwrap();
        for i in 0..=10 {
            let t = spec.duration() * (i as f64 / 10.0);
            let k = kinematics(&p, &spec, t).unwrap();
            assert_eq!(k.position, eval(&p, &spec, t, 0).unwrap());
            assert_eq!(k.velocity, eval(&p, &spec, t, 1).unwrap());
            assert_eq!(k.acceleration, eval(&p, &spec, t, 2).unwrap());
            assert_eq!(k.jerk, eval(&p, &spec, t, 3).unwrap());
        }
        let rest = Kinematics::at_rest(1e-4);
        assert_eq!(rest.position, 1e-4);
        assert_eq!(rest.velocity, 0.0);
    }

    proptest! {
        // every constructed septic satisfies the boundary conditions to the
        // stated relative tolerances
        #[test]
        fn septic_boundary_conditions(a6 in -0.06f64..0.06, a7 in -0.06f64..0.06) {
            let (geom, .., spec) = default_parameters();
            let p = make_septic(a6, a7, geom.spacing()).unwrap();
            let spec = spec.with_polynomial(p);
            let p = spec.polynomial();
            let tf = spec.duration();
            let d = spec.distance();
            for (t, order, want, scale) in [
                (0.0, 0, 0.0, d),
                (0.0, 1, 0.0, d / tf),
                (0.0, 2, 0.0, d / (tf * tf)),
                (tf, 0, d, d),
                (tf, 1, 0.0, d / tf),
                (tf, 2, 0.0, d / (tf * tf)),
            ] {
                let got = eval(p, &spec, t, order).unwrap();
                prop_assert!(((got - want) / scale).abs() < 1e-12);
            }
        }
    }
}
