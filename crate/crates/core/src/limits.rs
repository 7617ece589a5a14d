//! Degenerations of the elliptic RS matrix and its non-relativistic limit.

use std::f64::consts::PI;

use crate::elliptic::{fit_gauge, sigma, TrivialTheta};
use crate::lax::{self, CMConfig, RSConfig};
use crate::linalg::{self, CMatrix};
use crate::{Error, Lattice, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitParameter {
    ImTau,
    Hbar,
}

/// Residuals along a one-parameter sweep. Failed points keep their slot with
/// a NaN residual and a matching entry in `failures`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSweep {
    pub parameter: LimitParameter,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub failures: Vec<(f64, String)>,
    /// Least-squares slope of `log error` against `log value`; `None` with
    /// fewer than two usable points.
    pub fitted_order: Option<f64>,
}

impl LimitSweep {
    fn run<F>(parameter: LimitParameter, values: &[f64], residual: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        check_monotone(values)?;
        let mut errors = Vec::with_capacity(values.len());
        let mut failures = Vec::new();
        for &v in values {
            match residual(v) {
                Ok(e) => errors.push(e),
                Err(err) => {
                    errors.push(f64::NAN);
                    failures.push((v, err.to_string()));
                }
            }
        }
        let fitted_order = fitted_order(values, &errors);
        Ok(Self {
            parameter,
            values: values.to_vec(),
            errors,
            failures,
            fitted_order,
        })
    }

    /// Whether the residual does not grow, as the parameter moves along the
    /// sweep, among points with `value ≥ from`. Changes below `noise_floor`
    /// are ignored.
    pub fn is_monotone_decreasing(&self, from: f64, noise_floor: f64) -> bool {
        let tail: Vec<f64> = self
            .values
            .iter()
            .zip(&self.errors)
            .filter(|(v, _)| **v >= from)
            .map(|(_, e)| *e)
            .collect();
        tail.iter().all(|e| e.is_finite()) && tail.windows(2).all(|w| w[1] <= w[0] + noise_floor)
    }
}

fn check_monotone(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("sweep values must be finite".into()));
    }
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::InvalidParameter("sweep values must be strictly monotone".into()));
    }
    Ok(())
}

/// Log-log least-squares slope over points with finite positive error.
pub fn fitted_order(values: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .zip(errors)
        .filter(|(v, e)| **v > 0.0 && e.is_finite() && **e > 0.0)
        .map(|(v, e)| (v.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Elliptic lattice `(π, iπt)`, which degenerates to the sine lattice.
pub fn degenerating_lattice(t: f64) -> Result<Lattice> {
    Lattice::elliptic(C64::new(PI, 0.0), C64::new(0.0, PI * t))
}

/// Validation tolerance of the per-point gauge fit.
const GAUGE_TOLERANCE: f64 = 1e-1;

/// Fits `σ_ell(x) = C·exp(Ax + Bx²)·sin x` near the origin.
pub fn trig_gauge(lat: &Lattice) -> Result<TrivialTheta> {
    let trig = Lattice::trigonometric();
    let validation: Vec<C64> = (0..5)
        .map(|k| C64::new(-0.8 + 0.4 * k as f64, 0.3 - 0.15 * k as f64))
        .collect();
    fit_gauge(
        |x| sigma(x, lat),
        |x| sigma(x, &trig),
        C64::new(0.41, 0.13),
        C64::new(0.4, 0.0),
        &validation,
        GAUGE_TOLERANCE,
    )
    .map_err(|e| Error::GaugeFitFailed(e.to_string()))
}

/// The trigonometric matrix with every σ factor replaced by its gauged
/// elliptic counterpart: entry `(k, k')` picks up
/// `exp(A(Σ num − Σ den) + B(Σ num² − Σ den²))` over its σ arguments.
fn gauged_trig_lax(conf: &RSConfig, z: C64, gauge: &TrivialTheta) -> Result<CMatrix> {
    let trig = RSConfig {
        lat: Lattice::trigonometric(),
        ..conf.clone()
    };
    let mut m = lax::hasegawa_lax(&trig, z)?.entries;
    let (q, h, n) = (&conf.q, conf.hbar, conf.n());
    let (a, b) = (gauge.linear, gauge.quadratic);
    for k in 0..n {
        for kp in 0..n {
            let mut num = vec![z + h + q[k] - q[kp]];
            let mut den = vec![z];
            for l in (0..n).filter(|&l| l != k) {
                num.push(h + q[l] - q[kp]);
                den.push(q[l] - q[k]);
            }
            let s1: C64 = num.iter().sum::<C64>() - den.iter().sum::<C64>();
            let s2: C64 = num.iter().map(|x| x * x).sum::<C64>() - den.iter().map(|x| x * x).sum::<C64>();
            m[(k, kp)] *= (a * s1 + b * s2).exp();
        }
    }
    Ok(m)
}

/// `max|A − B| / max|B|`.
pub fn relative_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b)) / linalg::max_abs(b)
}

/// Relative distance between the elliptic matrix on `(π, iπt)` and the gauged
/// trigonometric matrix, at the phase point and coupling of `conf`.
pub fn degeneration_residual(conf: &RSConfig, z: C64, t: f64) -> Result<f64> {
    let lat = degenerating_lattice(t)?;
    let ell = RSConfig { lat, ..conf.clone() };
    let gauge = trig_gauge(&lat)?;
    let l_ell = lax::hasegawa_lax(&ell, z)?.entries;
    let l_trig = gauged_trig_lax(conf, z, &gauge)?;
    Ok(relative_distance(&l_ell, &l_trig))
}

pub fn degeneration_sweep(conf: &RSConfig, z: C64, im_tau_values: &[f64]) -> Result<LimitSweep> {
    LimitSweep::run(LimitParameter::ImTau, im_tau_values, |t| {
        degeneration_residual(conf, z, t)
    })
}

/// Configuration at coupling `ħ` with positions from `cm` and `P = ħ·p`.
pub fn scaled_rs_config(cm: &CMConfig, hbar: f64) -> Result<RSConfig> {
    let p: Vec<C64> = cm.p.iter().map(|p| p * hbar).collect();
    RSConfig::new(cm.q.clone(), p, C64::new(hbar, 0.0), cm.lat)
}

/// `‖(L(ħ) − I)/ħ − L_CM‖ / ‖L_CM‖` (Frobenius) with `L(ħ)` the composition
/// matrix at `P = ħ·p` and `L_CM` the factorized CM matrix.
pub fn cm_limit_residual(cm: &CMConfig, z: C64, hbar: f64) -> Result<f64> {
    if hbar == 0.0 {
        return Err(Error::InvalidParameter("ħ must be nonzero".into()));
    }
    let n = cm.n();
    let l = lax::composition_lax(&scaled_rs_config(cm, hbar)?, z)?.entries;
    let quotient = (l - CMatrix::identity(n, n)) / C64::new(hbar, 0.0);
    let target = lax::factorized_cm_lax(cm, z)?.entries;
    Ok(linalg::frobenius(&(quotient - &target)) / linalg::frobenius(&target))
}

pub fn cm_limit_sweep(cm: &CMConfig, z: C64, hbar_values: &[f64]) -> Result<LimitSweep> {
    if hbar_values.contains(&0.0) {
        return Err(Error::InvalidParameter("ħ = 0 cannot be swept (division by ħ)".into()));
    }
    LimitSweep::run(LimitParameter::Hbar, hbar_values, |h| cm_limit_residual(cm, z, h))
}

/// One-particle quotient `(L(ħ) − 1)/ħ` at `p = 0`, that is
/// `(σ(z + ħ)/σ(z) − 1)/ħ = ζ(z) + ħ(ζ(z)² − ℘(z))/2 + O(ħ²)`.
pub fn scalar_cm_quotient(z: C64, hbar: f64, lat: &Lattice) -> Result<C64> {
    if hbar == 0.0 {
        return Err(Error::InvalidParameter("ħ must be nonzero".into()));
    }
    let conf = RSConfig::new(
        vec![C64::new(0.0, 0.0)],
        vec![C64::new(0.0, 0.0)],
        C64::new(hbar, 0.0),
        *lat,
    )?;
    let l = lax::composition_lax(&conf, z)?.entries[(0, 0)];
    Ok((l - 1.0) / hbar)
}

/// Limit of [`scalar_cm_quotient`] extrapolated from `ħ` and `ħ/2`, which
/// removes the first-order term.
pub fn extrapolated_scalar_quotient(z: C64, hbar: f64, lat: &Lattice) -> Result<C64> {
    Ok(2.0 * scalar_cm_quotient(z, hbar / 2.0, lat)? - scalar_cm_quotient(z, hbar, lat)?)
}

/// Distance of `q₀ − q∞ − nħ` from the lattice.
pub fn framing_constraint_check(conf: &RSConfig) -> f64 {
    let offset = conf.q_zero - conf.q_inf - conf.hbar * conf.n() as f64;
    conf.lat.distance_to_lattice(offset)
}
