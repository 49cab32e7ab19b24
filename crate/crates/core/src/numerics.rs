//! Shared numerical kernels: adaptive Gauss–Kronrod quadrature, an embedded
//! Runge–Kutta integrator, multi-start Nelder–Mead minimization and
//! log-log slope fitting.

use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::BinaryHeap;

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

// 15-point Kronrod nodes with the embedded 7-point Gauss rule (QUADPACK).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// value, error estimate, integral of |f| over one panel
fn qk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut fv = [0.0f64; 15];
    fv[14] = fc;
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    let mut res_abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let x = half * XGK[i];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[i] = f1;
        fv[7 + i] = f2;
        res_k += WGK[i] * (f1 + f2);
        res_abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            res_g += WG[(i - 1) / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((fv[i] - mean).abs() + (fv[7 + i] - mean).abs());
    }
    let err_raw = ((res_k - res_g) * half).abs();
    res_asc *= half.abs();
    res_abs *= half.abs();
    // QUADPACK error rescaling
    let mut err = err_raw;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if res_abs > tiny {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k * half, err, res_abs)
}

#[derive(Debug)]
struct Panel {
    err: f64,
    value: f64,
    resabs: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

const MAX_PANELS: usize = 4096;

/// Adaptive Gauss–Kronrod integration of `f` over `[t0, t1]`.
///
/// Supplied `breakpoints` (kink locations, e.g. zero crossings of a
/// rectified integrand) become panel boundaries so each panel sees a smooth
/// integrand. Converges when the accumulated error estimate drops below
/// `rel_tol * |value|` or the roundoff floor; exhausting the panel budget
/// yields [`Error::QuadratureNonConvergence`] carrying the best estimate.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    breakpoints: &[f64],
) -> Result<QuadratureResult> {
    if !(t0 < t1) {
        return Err(Error::Contract(format!(
            "integration bounds must satisfy t0 < t1, got [{t0:e}, {t1:e}]"
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::Contract(format!(
            "relative tolerance must be positive, got {rel_tol:e}"
        )));
    }
    let f_ref: &dyn Fn(f64) -> f64 = &f;

    let span = t1 - t0;
    let mut edges = vec![t0];
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| *p > t0 && *p < t1)
        .collect();
    pts.sort_by(f64::total_cmp);
    for p in pts {
        if p - edges.last().unwrap() > 1e-14 * span && t1 - p > 1e-14 * span {
            edges.push(p);
        }
    }
    edges.push(t1);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let (mut total_val, mut total_err, mut total_abs) = (0.0, 0.0, 0.0);
    for w in edges.windows(2) {
        let (v, e, r) = qk15(f_ref, w[0], w[1]);
        evaluations += 15;
        total_val += v;
        total_err += e;
        total_abs += r;
        heap.push(Panel { err: e, value: v, resabs: r, a: w[0], b: w[1] });
    }

    loop {
        // converged when the error is relatively small or at the roundoff
        // floor of the L1 mass (handles integrands that cancel to zero)
        if total_err <= (rel_tol * total_val.abs()).max(50.0 * f64::EPSILON * total_abs) {
            return Ok(QuadratureResult { value: total_val, error_estimate: total_err, evaluations });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence {
                value: total_val,
                error_estimate: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        total_val -= worst.value;
        total_err -= worst.err;
        total_abs -= worst.resabs;
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e, r) = qk15(f_ref, a, b);
            evaluations += 15;
            total_val += v;
            total_err += e;
            total_abs += r;
            heap.push(Panel { err: e, value: v, resabs: r, a, b });
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th- and embedded 4th-order weights
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = rhs(t, y)` with an adaptive embedded Runge–Kutta pair
/// (Dormand–Prince 5(4)), returning the state at each of `sample_times`.
///
/// Per-step local error is controlled against
/// `abs_tol[i] + rel_tol * |y_i|`; sample times are hit exactly by clipping
/// the step. Step-size underflow reports [`Error::Stiffness`].
pub fn ode_solve<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t_span: (f64, f64),
    rel_tol: f64,
    abs_tol: [f64; N],
    sample_times: &[f64],
) -> Result<Vec<[f64; N]>> {
    let (t0, t1) = t_span;
    if !(t0 < t1) {
        return Err(Error::Contract(format!(
            "time span must satisfy t0 < t1, got [{t0:e}, {t1:e}]"
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::Contract("relative tolerance must be positive".into()));
    }
    if sample_times.windows(2).any(|w| !(w[0] < w[1]))
        || sample_times.first().is_some_and(|s| *s < t0)
        || sample_times.last().is_some_and(|s| *s > t1)
    {
        return Err(Error::Contract(
            "sample times must be strictly increasing and inside the span".into(),
        ));
    }

    let span = t1 - t0;
    let h_min = 1e-14 * span;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = span / 100.0;
    let mut out = Vec::with_capacity(sample_times.len());
    let mut si = 0;
    while si < sample_times.len() && sample_times[si] <= t {
        out.push(y);
        si += 1;
    }

    while t < t1 {
        let target = if si < sample_times.len() { sample_times[si] } else { t1 };
        let mut h_try = h.min(target - t).max(h_min);
        let hits_target = h_try >= target - t;
        if hits_target {
            h_try = target - t;
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h_try * a * kj[i];
                    }
                }
            }
            k[stage + 1] = rhs(t + DP_C[stage] * h_try, &ys);
        }
        // 5th-order solution is the 6th stage state (FSAL tableau)
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = DP_A[5][j];
            if a != 0.0 {
                for i in 0..N {
                    y_new[i] += h_try * a * kj[i];
                }
            }
        }
        let mut err_norm: f64 = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += DP_E[j] * kj[i];
            }
            e *= h_try;
            let tol = abs_tol[i] + rel_tol * y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max((e / tol).abs());
        }

        if err_norm <= 1.0 {
            t = if hits_target { target } else { t + h_try };
            y = y_new;
            k1 = k[6];
            while si < sample_times.len() && sample_times[si] <= t {
                out.push(y);
                si += 1;
            }
        }
        let factor = if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h_try * factor).min(span);
        if h < h_min && t < t1 {
            return Err(Error::Stiffness { t });
        }
    }
    Ok(out)
}

/// Multi-start Nelder–Mead minimization of a two-variable objective.
///
/// Each start runs an independent simplex; a run converges when the simplex
/// diameter falls below `tolerance` and the value spread below
/// `tolerance * |best|`. The best converged result wins, ties broken by
/// lexicographic comparison of the points. Errors if no start converges.
pub fn minimize_2d(
    objective: impl Fn(f64, f64) -> f64 + Sync,
    starts: &[(f64, f64)],
    tolerance: f64,
) -> Result<((f64, f64), f64)> {
    if starts.is_empty() {
        return Err(Error::Contract("at least one start point is required".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Contract("tolerance must be positive".into()));
    }
    let runs: Vec<(bool, (f64, f64), f64)> = starts
        .par_iter()
        .map(|&(x0, y0)| nelder_mead(&objective, x0, y0, tolerance))
        .collect();

    let mut best: Option<(&(bool, (f64, f64), f64), usize)> = None;
    for (i, run) in runs.iter().enumerate() {
        if !run.0 {
            continue;
        }
        best = match best {
            None => Some((run, i)),
            Some((b, bi)) => {
                let better = run.2 < b.2
                    || (run.2 == b.2
                        && (run.1.0, run.1.1) < (b.1.0, b.1.1));
                if better {
                    Some((run, i))
                } else {
                    Some((b, bi))
                }
            }
        };
    }
    match best {
        Some((run, _)) => Ok((run.1, run.2)),
        None => {
            let trace: Vec<String> = runs
                .iter()
                .zip(starts)
                .map(|(r, s)| format!("start ({:e}, {:e}) -> f = {:e}", s.0, s.1, r.2))
                .collect();
            Err(Error::OptimizationFailed(format!(
                "no Nelder-Mead start converged within the iteration budget; {}",
                trace.join("; ")
            )))
        }
    }
}

fn nelder_mead(
    f: &(impl Fn(f64, f64) -> f64 + ?Sized),
    x0: f64,
    y0: f64,
    tolerance: f64,
) -> (bool, (f64, f64), f64) {
    const MAX_ITER: usize = 600;
    let step = |v: f64| 0.1 * v.abs() + 0.01;
    let mut simplex = [
        ((x0, y0), f(x0, y0)),
        ((x0 + step(x0), y0), f(x0 + step(x0), y0)),
        ((x0, y0 + step(y0)), f(x0, y0 + step(y0))),
    ];

    for _ in 0..MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0], simplex[2]);
        let diam = simplex
            .iter()
            .flat_map(|a| simplex.iter().map(move |b| (a.0.0 - b.0.0).hypot(a.0.1 - b.0.1)))
            .fold(0.0f64, f64::max);
        let spread = (worst.1 - best.1).abs();
        if diam < tolerance && spread <= tolerance * best.1.abs().max(f64::MIN_POSITIVE) {
            return (true, best.0, best.1);
        }

        let centroid = (
            0.5 * (simplex[0].0.0 + simplex[1].0.0),
            0.5 * (simplex[0].0.1 + simplex[1].0.1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - worst.0.0),
            centroid.1 + (centroid.1 - worst.0.1),
        );
        let fr = f(reflect.0, reflect.1);
        if fr < simplex[0].1 {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - worst.0.0),
                centroid.1 + 2.0 * (centroid.1 - worst.0.1),
            );
            let fe = f(expand.0, expand.1);
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let contracted = if fr < worst.1 {
                (
                    centroid.0 + 0.5 * (reflect.0 - centroid.0),
                    centroid.1 + 0.5 * (reflect.1 - centroid.1),
                )
            } else {
                (
                    centroid.0 + 0.5 * (worst.0.0 - centroid.0),
                    centroid.1 + 0.5 * (worst.0.1 - centroid.1),
                )
            };
            let fc = f(contracted.0, contracted.1);
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = (
                        anchor.0 + 0.5 * (v.0.0 - anchor.0),
                        anchor.1 + 0.5 * (v.0.1 - anchor.1),
                    );
                    v.1 = f(v.0.0, v.0.1);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (false, simplex[0].0, simplex[0].1)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Contract(format!(
            "slope fit needs matching arrays of at least 3 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain(
            "log-log slope fit requires strictly positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `n` evenly spaced points from `a` to `b` inclusive, endpoints exact.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            a + (b - a) * s
        })
        .collect()
}

/// Zero crossings of `f` on `[a, b]` located by scanning `n` uniform panels
/// and bisecting each sign change.
pub(crate) fn find_sign_changes(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let ts = linspace(a, b, n + 1);
    let vals: Vec<f64> = ts.iter().map(|t| f(*t)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        if vals[i] == 0.0 {
            out.push(ts[i]);
        } else if vals[i] * vals[i + 1] < 0.0 {
            let (mut lo, mut hi) = (ts[i], ts[i + 1]);
            let (mut flo, _) = (vals[i], vals[i + 1]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

/// Bisection root of `f` on a bracketing interval.
pub(crate) fn bisect_root(
    f: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::Domain(format!(
            "no sign change on [{lo:e}, {hi:e}]: cannot bracket a root"
        )));
    }
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization on a bracket assumed unimodal.
pub(crate) fn golden_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
