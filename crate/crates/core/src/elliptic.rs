//! Weierstrass σ and ℘, theta functions with characteristics and their
//! trigonometric and rational degenerations.
//!
//! Elliptic lattices are spanned by `ω₁, ω₂` with `τ = ω₂/ω₁` in the upper
//! half plane. σ is evaluated through the odd theta function on the
//! normalized lattice `(1, τ)`:
//!
//! ```text
//! σ(z) = ω₁ · exp(η u²) · θ₁(u|τ) / θ₁'(0|τ),     u = z/ω₁
//! ```
//!
//! with `θ₁ = θ[½;½]` and `η = −θ₁'''(0)/(6θ₁'(0))`. The degenerate kinds use
//! `σ = sin z` (lattice `πℤ`) and `σ = z` (lattice `{0}`).

use std::f64::consts::PI;

use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Arguments closer than this to a lattice point are treated as poles.
pub const POLE_TOLERANCE: f64 = 1e-8;
const SERIES_TOLERANCE: f64 = 1e-16;
const SERIES_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Elliptic,
    Trigonometric,
    Rational,
}

/// Period data of an elliptic curve, or a degenerate (trigonometric or
/// rational) stand-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    kind: LatticeKind,
    omega1: C64,
    omega2: C64,
    tau: C64,
    eta1: C64,
    eta2: C64,
    unit_eta: C64,
    theta1_prime: C64,
}

impl Lattice {
    /// Lattice spanned by `omega1` and `omega2`; requires `Im(ω₂/ω₁) > 0`.
    pub fn elliptic(omega1: C64, omega2: C64) -> Result<Self> {
        if !(omega1.is_finite() && omega2.is_finite()) || omega1.norm() == 0.0 {
            return Err(Error::InvalidLattice(format!("periods {omega1}, {omega2}")));
        }
        let tau = omega2 / omega1;
        if !(tau.im > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "tau = omega2/omega1 = {tau} must have positive imaginary part"
            )));
        }
        let jet = odd_theta_jet(C64::new(0.0, 0.0), tau, 3);
        let theta1_prime = jet[1];
        let unit_eta = -jet[3] / (6.0 * theta1_prime);
        Ok(Self {
            kind: LatticeKind::Elliptic,
            omega1,
            omega2,
            tau,
            eta1: unit_eta / omega1,
            eta2: (unit_eta * tau - I * PI) / omega1,
            unit_eta,
            theta1_prime,
        })
    }

    /// The lattice `ℤ + τℤ`.
    pub fn from_tau(tau: C64) -> Result<Self> {
        Self::elliptic(C64::new(1.0, 0.0), tau)
    }

    /// `σ(z) = sin z`, lattice `πℤ`.
    pub fn trigonometric() -> Self {
        Self::degenerate(LatticeKind::Trigonometric, C64::new(PI, 0.0))
    }

    /// `σ(z) = z`, lattice `{0}`.
    pub fn rational() -> Self {
        Self::degenerate(LatticeKind::Rational, C64::new(f64::INFINITY, 0.0))
    }

    fn degenerate(kind: LatticeKind, omega1: C64) -> Self {
        let nan = C64::new(f64::NAN, f64::NAN);
        Self {
            kind,
            omega1,
            omega2: nan,
            tau: nan,
            eta1: C64::new(0.0, 0.0),
            eta2: nan,
            unit_eta: nan,
            theta1_prime: nan,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn is_elliptic(&self) -> bool {
        self.kind == LatticeKind::Elliptic
    }

    /// First period: `ω₁` (elliptic), `π` (trigonometric), `None` (rational).
    pub fn omega1(&self) -> Option<C64> {
        match self.kind {
            LatticeKind::Rational => None,
            _ => Some(self.omega1),
        }
    }

    pub fn omega2(&self) -> Option<C64> {
        self.is_elliptic().then_some(self.omega2)
    }

    pub fn tau(&self) -> Option<C64> {
        self.is_elliptic().then_some(self.tau)
    }

    /// Quasi-period constant with `σ(z+ω₁) = −e^{2η₁(z+ω₁/2)} σ(z)`.
    pub fn eta1(&self) -> Option<C64> {
        match self.kind {
            LatticeKind::Rational => None,
            _ => Some(self.eta1),
        }
    }

    pub fn eta2(&self) -> Option<C64> {
        self.is_elliptic().then_some(self.eta2)
    }

    /// `|η₁ω₂/2 − η₂ω₁/2 − iπ/2|` (zero for degenerate kinds).
    pub fn legendre_residual(&self) -> f64 {
        if !self.is_elliptic() {
            return 0.0;
        }
        (self.eta1 * self.omega2 * 0.5 - self.eta2 * self.omega1 * 0.5 - I * (PI / 2.0)).norm()
    }

    /// Euclidean distance from `z` to the nearest lattice point.
    pub fn distance_to_lattice(&self, z: C64) -> f64 {
        match self.kind {
            LatticeKind::Rational => z.norm(),
            LatticeKind::Trigonometric => {
                let k = (z.re / PI).round();
                (z - k * PI).norm()
            }
            LatticeKind::Elliptic => {
                let u = z / self.omega1;
                let y = u.im / self.tau.im;
                let x = u.re - y * self.tau.re;
                let (m0, n0) = (x.round(), y.round());
                let mut best = f64::INFINITY;
                for dm in -1..=1 {
                    for dn in -1..=1 {
                        let w = (m0 + dm as f64) + (n0 + dn as f64) * self.tau;
                        best = best.min((u - w).norm());
                    }
                }
                best * self.omega1.norm()
            }
        }
    }

    pub(crate) fn check_pole(&self, z: C64) -> Result<()> {
        let distance = self.distance_to_lattice(z);
        if distance < POLE_TOLERANCE {
            Err(Error::PoleAtLattice { z, distance })
        } else {
            Ok(())
        }
    }

    /// `η` of the normalized lattice `(1, τ)`.
    pub(crate) fn unit_eta(&self) -> C64 {
        self.unit_eta
    }
}

/// Characteristic `(a, b)` of `θ[a;b](z|τ) = Σₖ exp(πiτ(k+a)² + 2πi(k+a)(z+b))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaCharacteristic {
    pub a: C64,
    pub b: C64,
}

impl ThetaCharacteristic {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a: C64::new(a, 0.0),
            b: C64::new(b, 0.0),
        }
    }
}

/// Value and first three z-derivatives of `θ[a;b](z|τ)`. Only derivatives up
/// to `order` are accumulated; higher slots are zero.
pub(crate) fn theta_jet(a: C64, b: C64, z: C64, tau: C64, order: usize) -> [C64; 4] {
    let w = z + b;
    let center = (-a.re - w.im / tau.im).round();
    let term = |k: f64| {
        let m = a + k;
        let t = (I * PI * tau * m * m + 2.0 * PI * I * m * w).exp();
        let d = 2.0 * PI * I * m;
        let mut out = [C64::new(0.0, 0.0); 4];
        out[0] = t;
        for o in 1..=order {
            out[o] = out[o - 1] * d;
        }
        out
    };
    let mut sum = term(center);
    let mut used = 1;
    let mut step = 1.0;
    while used < SERIES_CAP {
        let hi = term(center + step);
        let lo = term(center - step);
        for o in 0..=order {
            sum[o] += hi[o] + lo[o];
        }
        used += 2;
        let converged = (0..=order).all(|o| {
            let t = hi[o].norm().max(lo[o].norm());
            t <= SERIES_TOLERANCE * sum[o].norm() || t < 1e-300
        });
        if converged {
            break;
        }
        step += 1.0;
    }
    sum
}

/// Jet of the odd theta function `θ[½;½](u|τ)`, summed over the pairs
/// `k, −1−k` so that oddness holds exactly in floating point.
pub(crate) fn odd_theta_jet(u: C64, tau: C64, order: usize) -> [C64; 4] {
    let mut sum = [C64::new(0.0, 0.0); 4];
    let peak = u.im.abs() / tau.im;
    for k in 0..SERIES_CAP / 2 {
        let m = k as f64 + 0.5;
        let base = I * PI * tau * m * m;
        let plus = (base + 2.0 * PI * I * m * u).exp();
        let minus = (base - 2.0 * PI * I * m * u).exp();
        let sign = if k % 2 == 0 { I } else { -I };
        let d = 2.0 * PI * I * m;
        let odd = sign * (plus - minus);
        let even = sign * (plus + minus);
        let terms = [odd, even * d, odd * d * d, even * d * d * d];
        for o in 0..=order {
            sum[o] += terms[o];
        }
        if m > peak + 1.0 {
            let converged = (0..=order).all(|o| {
                let t = terms[o].norm();
                t <= SERIES_TOLERANCE * sum[o].norm() || t < 1e-300
            });
            if converged {
                break;
            }
        }
    }
    sum
}

/// Theta function with characteristics.
pub fn theta_char(ch: ThetaCharacteristic, z: C64, tau: C64) -> Result<C64> {
    if !(tau.im > 0.0) {
        return Err(Error::NonConvergent(format!("Im tau = {} is not positive", tau.im)));
    }
    Ok(theta_jet(ch.a, ch.b, z, tau, 0)[0])
}

/// Weierstrass σ (or its degenerate counterpart).
pub fn sigma(z: C64, lat: &Lattice) -> C64 {
    match lat.kind {
        LatticeKind::Rational => z,
        LatticeKind::Trigonometric => z.sin(),
        LatticeKind::Elliptic => {
            let u = z / lat.omega1;
            let th = odd_theta_jet(u, lat.tau, 0)[0];
            lat.omega1 * (lat.unit_eta * u * u).exp() * th / lat.theta1_prime
        }
    }
}

/// Weierstrass ℘ = −(log σ)''.
pub fn wp(z: C64, lat: &Lattice) -> Result<C64> {
    lat.check_pole(z)?;
    Ok(match lat.kind {
        LatticeKind::Rational => 1.0 / (z * z),
        LatticeKind::Trigonometric => {
            let s = z.sin();
            1.0 / (s * s)
        }
        LatticeKind::Elliptic => {
            let u = z / lat.omega1;
            let [t0, t1, t2, _] = odd_theta_jet(u, lat.tau, 2);
            (-2.0 * lat.unit_eta - (t2 * t0 - t1 * t1) / (t0 * t0)) / (lat.omega1 * lat.omega1)
        }
    })
}

/// ζ = σ'/σ.
pub fn zeta(z: C64, lat: &Lattice) -> Result<C64> {
    lat.check_pole(z)?;
    Ok(match lat.kind {
        LatticeKind::Rational => 1.0 / z,
        LatticeKind::Trigonometric => z.cos() / z.sin(),
        LatticeKind::Elliptic => {
            let u = z / lat.omega1;
            let [t0, t1, _, _] = odd_theta_jet(u, lat.tau, 1);
            (2.0 * lat.unit_eta * u + t1 / t0) / lat.omega1
        }
    })
}

/// `Φ_q(z) = σ(z − q)/σ(z)`.
pub fn section_phi(q: C64, z: C64, lat: &Lattice) -> Result<C64> {
    lat.check_pole(z)?;
    Ok(sigma(z - q, lat) / sigma(z, lat))
}

/// Gauge factor `C·exp(A z + B z²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrivialTheta {
    /// A
    pub linear: C64,
    /// B
    pub quadratic: C64,
    /// C
    pub constant: C64,
    /// Largest relative residual over the validation points.
    pub residual: f64,
}

impl TrivialTheta {
    pub fn eval(&self, z: C64) -> C64 {
        self.constant * (self.linear * z + self.quadratic * z * z).exp()
    }
}

/// Fits `f(z) = C·exp(Az + Bz²)·g(z)` from the three points `base`,
/// `base + step`, `base + i·step`, then validates at `validation`.
///
/// Logarithms are taken of ratios between nearby points, so `step` must be
/// small enough that `|A·step|` and `|B·step·base|` stay below π.
pub fn fit_gauge<F, G>(f: F, g: G, base: C64, step: C64, validation: &[C64], tol: f64) -> Result<TrivialTheta>
where
    F: Fn(C64) -> C64,
    G: Fn(C64) -> C64,
{
    let pts = [base, base + step, base + I * step];
    let mut ratios = [C64::new(0.0, 0.0); 3];
    for (k, &z) in pts.iter().enumerate() {
        let (fz, gz) = (f(z), g(z));
        let scale = fz.norm().max(gz.norm());
        if !(scale.is_finite()) || gz.norm() <= 1e-12 * scale.max(1e-300) || fz.norm() <= 1e-12 * scale {
            return Err(Error::FitDegenerate(format!("sample point {z} is at or near a zero")));
        }
        ratios[k] = fz / gz;
    }
    let l2 = (ratios[1] / ratios[0]).ln();
    let l3 = (ratios[2] / ratios[0]).ln();
    let (d2, d3) = (pts[1] - pts[0], pts[2] - pts[0]);
    let (e2, e3) = (pts[1] * pts[1] - pts[0] * pts[0], pts[2] * pts[2] - pts[0] * pts[0]);
    let det = d2 * e3 - d3 * e2;
    if det.norm() == 0.0 {
        return Err(Error::FitDegenerate("collinear fit points".into()));
    }
    let linear = (l2 * e3 - l3 * e2) / det;
    let quadratic = (d2 * l3 - d3 * l2) / det;
    let constant = ratios[0] * (-linear * pts[0] - quadratic * pts[0] * pts[0]).exp();
    let mut fit = TrivialTheta {
        linear,
        quadratic,
        constant,
        residual: 0.0,
    };
    for &v in validation {
        let fv = f(v);
        let diff = (fv - fit.eval(v) * g(v)).norm();
        let rel = diff / fv.norm().max(1e-300);
        fit.residual = fit.residual.max(rel);
    }
    if !(fit.residual <= tol) {
        return Err(Error::FitDegenerate(format!(
            "validation residual {:e} exceeds {:e}",
            fit.residual, tol
        )));
    }
    Ok(fit)
}

/// Fits `σ(z − aω₂ − bω₁) = C·exp(Az + Bz²)·θ[½−a; ½−b](z/ω₁ | τ)`.
///
/// Both sides vanish exactly on `aω₂ + bω₁ + Λ`, so their ratio is a trivial
/// theta function. For `a = b = 0` the right side is the odd theta function.
pub fn fit_trivial_theta(ch: ThetaCharacteristic, lat: &Lattice) -> Result<TrivialTheta> {
    if !lat.is_elliptic() {
        return Err(Error::InvalidLattice(
            "trivial theta fit needs an elliptic lattice".into(),
        ));
    }
    let (w1, w2) = (lat.omega1, lat.omega2);
    let shift = ch.a * w2 + ch.b * w1;
    let (ta, tb) = (0.5 - ch.a, 0.5 - ch.b);
    let lhs = |z: C64| sigma(z - shift, lat);
    let rhs = |z: C64| theta_jet(ta, tb, z / w1, lat.tau, 0)[0];
    let base = shift + 0.37 * w1 + 0.29 * w2;
    let validation: Vec<C64> = (0..5)
        .map(|k| shift + (0.15 + 0.17 * k as f64) * w1 + (0.63 - 0.11 * k as f64) * w2)
        .collect();
    fit_gauge(lhs, rhs, base, 0.05 * w1, &validation, 1e-9)
}
