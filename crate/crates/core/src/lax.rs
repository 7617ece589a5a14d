//! Lax matrices of the Ruijsenaars-Schneider and Calogero-Moser systems.
//!
//! The central object is the σ-form RS matrix
//!
//! ```text
//! L(z)_{k,k'} = σ(z+ħ+q_k−q_k')/σ(z) · ∏_{l≠k} σ(ħ+q_l−q_k')/σ(q_l−q_k) · e^{P_k}
//! ```
//!
//! which is also produced as `diag(e^P)·Ξ⁻¹(z)·Ξ(z+nħ)` from a matrix `Ξ` of
//! level-n theta functions (the intertwining vectors).

use crate::cauchy::{shifted_inverse_product, SpectralMatrix, DISTINCTNESS};
use crate::elliptic::{sigma, theta_jet, wp, Lattice, LatticeKind};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

/// Phase-space point and coupling data of the RS system.
#[derive(Clone, Debug, PartialEq)]
pub struct RSConfig {
    pub q: Vec<C64>,
    /// Exponents with rapidities `θ_i = e^{P_i}`.
    pub p: Vec<C64>,
    pub hbar: C64,
    pub mu: C64,
    pub lat: Lattice,
    pub q_inf: C64,
    pub q_zero: C64,
}

impl RSConfig {
    /// Configuration with `μ = ħ`, `q∞ = 0` and `q₀ = q∞ + nħ`.
    pub fn new(q: Vec<C64>, p: Vec<C64>, hbar: C64, lat: Lattice) -> Result<Self> {
        let n = q.len() as f64;
        let conf = Self {
            q,
            p,
            hbar,
            mu: hbar,
            lat,
            q_inf: C64::new(0.0, 0.0),
            q_zero: hbar * n,
        };
        conf.validate()?;
        Ok(conf)
    }

    /// Moves the framing point `q∞`, keeping `q₀ = q∞ + nħ`.
    pub fn with_framing(mut self, q_inf: C64) -> Self {
        self.q_inf = q_inf;
        self.q_zero = q_inf + self.hbar * self.n() as f64;
        self
    }

    pub fn with_mu(mut self, mu: C64) -> Self {
        self.mu = mu;
        self
    }

    /// Same couplings and framing at another phase-space point.
    pub fn with_phase(&self, q: &[C64], p: &[C64]) -> Self {
        Self {
            q: q.to_vec(),
            p: p.to_vec(),
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() || self.q.len() != self.p.len() {
            return Err(Error::InvalidParameter(format!(
                "need equal nonzero numbers of positions and momenta, got {} and {}",
                self.q.len(),
                self.p.len()
            )));
        }
        check_distinct(&self.q, &self.lat)
    }
}

pub(crate) fn check_distinct(q: &[C64], lat: &Lattice) -> Result<()> {
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            if lat.distance_to_lattice(q[i] - q[j]) <= DISTINCTNESS {
                return Err(Error::DegenerateConfiguration(format!(
                    "positions {i} and {j} coincide"
                )));
            }
        }
    }
    Ok(())
}

/// Phase-space point and coupling of the CM system.
#[derive(Clone, Debug, PartialEq)]
pub struct CMConfig {
    pub q: Vec<C64>,
    pub p: Vec<C64>,
    pub g: C64,
    pub lat: Lattice,
}

impl CMConfig {
    pub fn new(q: Vec<C64>, p: Vec<C64>, g: C64, lat: Lattice) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::InvalidParameter(
                "positions and momenta must have equal nonzero length".into(),
            ));
        }
        check_distinct(&q, &lat)?;
        Ok(Self { q, p, g, lat })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Spin framing data; `f_{k,k'} = (U₀V₀)_{k,k'}·(U∞V∞)_{k',k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinFraming {
    pub u0: CMatrix,
    pub v0: CMatrix,
    pub u_inf: CMatrix,
    pub v_inf: CMatrix,
}

impl SpinFraming {
    /// Rank-`k` framing with all entries equal to one.
    pub fn unit(n: usize, k: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            u0: CMatrix::from_element(n, k, one),
            v0: CMatrix::from_element(k, n, one),
            u_inf: CMatrix::from_element(n, k, one),
            v_inf: CMatrix::from_element(k, n, one),
        }
    }

    pub fn k(&self) -> usize {
        self.u0.ncols()
    }

    pub fn coefficients(&self, n: usize) -> Result<CMatrix> {
        let k = self.k();
        let shapes = [
            (self.u0.shape(), (n, k)),
            (self.v0.shape(), (k, n)),
            (self.u_inf.shape(), (n, k)),
            (self.v_inf.shape(), (k, n)),
        ];
        if shapes.iter().any(|(a, b)| a != b) {
            return Err(Error::InvalidParameter(format!(
                "spin framing shapes do not match n = {n}, k = {k}"
            )));
        }
        let zero_side = &self.u0 * &self.v0;
        let inf_side = (&self.u_inf * &self.v_inf).transpose();
        Ok(zero_side.component_mul(&inf_side))
    }
}

/// Physical constants of the relativistic Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaxParams {
    pub m: f64,
    pub c: f64,
    pub nu: C64,
    pub kappa: C64,
}

impl Default for LaxParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            c: 1.0,
            nu: C64::new(1.0, 0.0),
            kappa: C64::new(0.0, 0.0),
        }
    }
}

impl LaxParams {
    /// `ν = 1`, `κ = g²/(2mc²)`, for which `H_RS − nmc² → H_CM` as `c → ∞`.
    pub fn nonrelativistic(m: f64, c: f64, g: C64) -> Self {
        Self {
            m,
            c,
            nu: C64::new(1.0, 0.0),
            kappa: g * g / (2.0 * m * c * c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need m > 0 and c > 0, got {} and {}",
                self.m, self.c
            )));
        }
        Ok(())
    }
}

/// Momentum normalization of the Ruijsenaars matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootNormalization {
    /// `e^{θ_i} ∏_{l≠i} f(q_i − q_l)` with the principal root
    /// `f = √(σ(μ)²(℘(μ) − ℘(q)))`.
    #[default]
    PrincipalRoot,
    /// `e^{θ_i} ∏_{l≠i} σ(q_i − q_l − μ)/σ(q_i − q_l)`, a branch-free
    /// redefinition of the rapidities.
    Factorized,
}

/// Ruijsenaars matrix plus a flag raised when a square-root radicand sits on
/// the negative real axis.
#[derive(Clone, Debug, PartialEq)]
pub struct RuijsenaarsLax {
    pub matrix: SpectralMatrix,
    pub near_branch_cut: bool,
}

fn require_elliptic(lat: &Lattice, what: &str) -> Result<()> {
    if lat.is_elliptic() {
        Ok(())
    } else {
        Err(Error::InvalidLattice(format!("{what} needs an elliptic lattice")))
    }
}

/// Level-n intertwining vector `θ[½ − j/n; n/2](w | nτ)` with
/// `w = (z − n⟨λ, ε̄_k⟩)/ω₁` and `⟨λ, ε̄_k⟩ = λ_k − mean(λ)`.
pub fn intertwining_vector(lam: &[C64], j: usize, k: usize, z: C64, lat: &Lattice) -> Result<C64> {
    require_elliptic(lat, "intertwining vectors")?;
    let n = lam.len();
    if k >= n {
        return Err(Error::InvalidParameter(format!("particle index {k} out of range")));
    }
    let w = intertwining_argument(lam, k, z, lat);
    Ok(level_theta(j % n, n, w, lat))
}

fn intertwining_argument(lam: &[C64], k: usize, z: C64, lat: &Lattice) -> C64 {
    let n = lam.len() as f64;
    let mean: C64 = lam.iter().sum::<C64>() / n;
    (z - n * (lam[k] - mean)) / lat.omega1().unwrap()
}

fn level_theta(j: usize, n: usize, w: C64, lat: &Lattice) -> C64 {
    let nf = n as f64;
    let a = C64::new(0.5 - j as f64 / nf, 0.0);
    let b = C64::new(nf / 2.0, 0.0);
    theta_jet(a, b, w, lat.tau().unwrap() * nf, 0)[0]
}

/// Matrix of raw intertwining vectors at `z − q∞`: row `j` is the
/// characteristic, column `k` the particle.
pub fn theta_xi_matrix(conf: &RSConfig, z: C64) -> Result<SpectralMatrix> {
    require_elliptic(&conf.lat, "the intertwining matrix")?;
    let n = conf.n();
    let mut entries = CMatrix::zeros(n, n);
    for k in 0..n {
        let w = intertwining_argument(&conf.q, k, z - conf.q_inf, &conf.lat);
        for j in 0..n {
            entries[(j, k)] = level_theta(j, n, w, &conf.lat);
        }
    }
    Ok(SpectralMatrix { entries, lambda: z })
}

/// [`theta_xi_matrix`] with column `k` multiplied by `exp(η w_k²/n)`, the
/// trivial theta factor that turns the theta-form product into the σ-form.
pub fn xi_matrix(conf: &RSConfig, z: C64) -> Result<SpectralMatrix> {
    let mut xi = theta_xi_matrix(conf, z)?;
    let n = conf.n();
    let eta = conf.lat.unit_eta();
    for k in 0..n {
        let w = intertwining_argument(&conf.q, k, z - conf.q_inf, &conf.lat);
        let gauge = (eta * w * w / n as f64).exp();
        for j in 0..n {
            xi.entries[(j, k)] *= gauge;
        }
    }
    Ok(xi)
}

fn exp_rows(m: &mut CMatrix, p: &[C64]) {
    for (k, pk) in p.iter().enumerate() {
        let e = pk.exp();
        for j in 0..m.ncols() {
            m[(k, j)] *= e;
        }
    }
}

/// `diag(e^P)·Ξ⁻¹(z)·Ξ(z+nħ)`; equals [`hasegawa_lax`] at `z − q∞`.
pub fn intertwining_product(conf: &RSConfig, z: C64) -> Result<SpectralMatrix> {
    conf.validate()?;
    let shift = conf.hbar * conf.n() as f64;
    let mut prod = shifted_inverse_product(|x| xi_matrix(conf, x).map(|m| m.entries), z, shift)?;
    exp_rows(&mut prod.entries, &conf.p);
    Ok(prod)
}

/// Geometric composition of the two Higgs fields, anchored so that it
/// equals [`hasegawa_lax`] at the same `z`.
pub fn composition_lax(conf: &RSConfig, z: C64) -> Result<SpectralMatrix> {
    let mut m = intertwining_product(conf, z + conf.q_inf)?;
    m.lambda = z;
    Ok(m)
}

/// The σ-form RS Lax matrix (all lattice kinds).
pub fn hasegawa_lax(conf: &RSConfig, z: C64) -> Result<SpectralMatrix> {
    conf.validate()?;
    let mut entries = spinless_entries(conf, z)?;
    exp_rows(&mut entries, &conf.p);
    Ok(SpectralMatrix { entries, lambda: z })
}

fn spinless_entries(conf: &RSConfig, z: C64) -> Result<CMatrix> {
    let lat = &conf.lat;
    lat.check_pole(z)?;
    let n = conf.n();
    let (q, h) = (&conf.q, conf.hbar);
    let sz = sigma(z, lat);
    let mut entries = CMatrix::zeros(n, n);
    for k in 0..n {
        for kp in 0..n {
            let mut v = sigma(z + h + q[k] - q[kp], lat) / sz;
            for l in (0..n).filter(|&l| l != k) {
                v *= sigma(h + q[l] - q[kp], lat) / sigma(q[l] - q[k], lat);
            }
            entries[(k, kp)] = v;
        }
    }
    Ok(entries)
}

/// Momenta `P` for which the diagonal weights of [`hasegawa_lax`] become the
/// symmetric ones, `e^{P_k} ∏_{l≠k} σ(ħ+q_l−q_k)/σ(q_l−q_k) =
/// e^{θ_k} ∏_{l≠k} √(σ(x+ħ)σ(x−ħ))/σ(x)` with `x = q_k − q_l`. The shift is a
/// gradient in `q`, so `(q, θ) ↦ (q, P)` is canonical.
pub fn momenta_from_rapidities(q: &[C64], theta: &[C64], hbar: C64, lat: &Lattice) -> Result<Vec<C64>> {
    check_distinct(q, lat)?;
    let n = q.len();
    let mut p = theta.to_vec();
    for k in 0..n {
        for l in (0..n).filter(|&l| l != k) {
            let x = q[k] - q[l];
            let s = sigma(x, lat);
            p[k] += 0.5 * ((sigma(x + hbar, lat) / s).ln() - (sigma(x - hbar, lat) / s).ln());
        }
    }
    Ok(p)
}

/// Spin RS matrix: the spinless matrix (with `P = 0`) weighted entrywise by
/// the framing coefficients.
pub fn spin_lax(conf: &RSConfig, spin: &SpinFraming, z: C64) -> Result<SpectralMatrix> {
    conf.validate()?;
    let f = spin.coefficients(conf.n())?;
    let entries = spinless_entries(conf, z)?.component_mul(&f);
    Ok(SpectralMatrix { entries, lambda: z })
}

/// Ruijsenaars matrix
/// `L'_{ij} = e^{θ_i}∏_{l≠i}f(q_i−q_l) · σ(q_i−q_j+λ)σ(μ)/(σ(λ)σ(q_i−q_j+μ))`
/// with `θ_i = P_i/(mc)`.
pub fn ruijsenaars_lax(
    conf: &RSConfig,
    params: &LaxParams,
    lambda: C64,
    normalization: RootNormalization,
) -> Result<RuijsenaarsLax> {
    conf.validate()?;
    params.validate()?;
    let lat = &conf.lat;
    let (n, mu, q) = (conf.n(), conf.mu, &conf.q);
    lat.check_pole(lambda)?;
    lat.check_pole(mu)?;
    let (s_lam, s_mu) = (sigma(lambda, lat), sigma(mu, lat));
    let mut near_branch_cut = false;
    let mut prefactor = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = (conf.p[i] / (params.m * params.c)).exp();
        for l in (0..n).filter(|&l| l != i) {
            let x = q[i] - q[l];
            match normalization {
                RootNormalization::PrincipalRoot => {
                    let radicand = s_mu * s_mu * (wp(mu, lat)? - wp(x, lat)?);
                    if radicand.re < 0.0 && radicand.im.abs() <= 1e-8 * radicand.norm() {
                        near_branch_cut = true;
                    }
                    v *= radicand.sqrt();
                }
                RootNormalization::Factorized => {
                    v *= sigma(x - mu, lat) / sigma(x, lat);
                }
            }
        }
        prefactor.push(v);
    }
    let mut entries = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let x = q[i] - q[j];
            lat.check_pole(x + mu)?;
            entries[(i, j)] = prefactor[i] * sigma(x + lambda, lat) * s_mu / (s_lam * sigma(x + mu, lat));
        }
    }
    Ok(RuijsenaarsLax {
        matrix: SpectralMatrix { entries, lambda },
        near_branch_cut,
    })
}

/// Krichever matrix
/// `σ(λ+q_ij)/(σ(λ+μ)σ(q_ij−μ)) · [σ(z−μ)/σ(z+μ)]^{(q_ij−μ)/(2μ)}`, principal
/// branch of the power.
pub fn krichever_lax(conf: &RSConfig, z: C64, lambda: C64) -> Result<SpectralMatrix> {
    conf.validate()?;
    let lat = &conf.lat;
    let (n, mu, q) = (conf.n(), conf.mu, &conf.q);
    if mu.norm() == 0.0 {
        return Err(Error::ZeroMu);
    }
    lat.check_pole(lambda + mu)?;
    lat.check_pole(z - mu)?;
    lat.check_pole(z + mu)?;
    let log_ratio = (sigma(z - mu, lat) / sigma(z + mu, lat)).ln();
    let s = sigma(lambda + mu, lat);
    let mut entries = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let x = q[i] - q[j];
            lat.check_pole(x - mu)?;
            let power = ((x - mu) / (2.0 * mu) * log_ratio).exp();
            entries[(i, j)] = sigma(lambda + x, lat) / (s * sigma(x - mu, lat)) * power;
        }
    }
    Ok(SpectralMatrix { entries, lambda })
}

/// CM Lax matrix. Rational kind: `δ_ij p_i + g(1−δ_ij)(1/(q_i−q_j) − 1/λ)`,
/// with `λ = None` dropping the spectral term. Elliptic and trigonometric
/// kinds use `−g σ(x−λ)/(σ(x)σ(λ))`, which reduces to the rational entry.
pub fn cm_lax(conf: &CMConfig, lambda: Option<C64>) -> Result<SpectralMatrix> {
    check_distinct(&conf.q, &conf.lat)?;
    let n = conf.n();
    let lat = &conf.lat;
    if let Some(l) = lambda {
        if l.norm() == 0.0 {
            return Err(Error::ZeroLambda);
        }
    }
    let mut entries = CMatrix::zeros(n, n);
    for i in 0..n {
        entries[(i, i)] = conf.p[i];
    }
    let off = |x: C64| -> Result<C64> {
        match (lat.kind(), lambda) {
            (LatticeKind::Rational, None) => Ok(conf.g * (1.0 / x)),
            (LatticeKind::Rational, Some(l)) => Ok(conf.g * (1.0 / x - 1.0 / l)),
            (_, Some(l)) => {
                lat.check_pole(l)?;
                Ok(-conf.g * sigma(x - l, lat) / (sigma(x, lat) * sigma(l, lat)))
            }
            (_, None) => Err(Error::InvalidParameter(
                "elliptic and trigonometric CM matrices need a spectral parameter".into(),
            )),
        }
    };
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            entries[(i, j)] = off(conf.q[i] - conf.q[j])?;
        }
    }
    Ok(SpectralMatrix {
        entries,
        lambda: lambda.unwrap_or(C64::new(f64::INFINITY, 0.0)),
    })
}

/// Step of the central difference used for `Ξ'`.
pub const XI_DERIVATIVE_STEP: f64 = 1e-6;

/// Factorized CM matrix `diag(p) + n·Ξ⁻¹(z)Ξ'(z)` with `Ξ'` by central
/// differences.
pub fn factorized_cm_lax(conf: &CMConfig, z: C64) -> Result<SpectralMatrix> {
    factorized_cm_lax_with_step(conf, z, XI_DERIVATIVE_STEP)
}

pub fn factorized_cm_lax_with_step(conf: &CMConfig, z: C64, step: f64) -> Result<SpectralMatrix> {
    require_elliptic(&conf.lat, "the factorized CM matrix")?;
    let n = conf.n();
    let zero = C64::new(0.0, 0.0);
    let rs = RSConfig::new(conf.q.clone(), vec![zero; n], zero, conf.lat)?;
    let xi = xi_matrix(&rs, z)?.entries;
    let d = (xi_matrix(&rs, z + step)?.entries - xi_matrix(&rs, z - step)?.entries) / C64::new(2.0 * step, 0.0);
    let mut entries = linalg::solve(&xi, &d)? * C64::new(n as f64, 0.0);
    for i in 0..n {
        entries[(i, i)] += conf.p[i];
    }
    Ok(SpectralMatrix { entries, lambda: z })
}

/// Pair potential: ℘, 1/sin² or 1/x².
pub fn pair_potential(x: C64, lat: &Lattice) -> Result<C64> {
    wp(x, lat)
}

/// `H_CM = ½Σp² + (g²/2)Σ_{i≠j} f(q_i − q_j)` (unit mass).
pub fn cm_hamiltonian(conf: &CMConfig) -> Result<C64> {
    let n = conf.n();
    let mut h: C64 = conf.p.iter().map(|p| p * p).sum::<C64>() * 0.5;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            h += conf.g * conf.g * 0.5 * pair_potential(conf.q[i] - conf.q[j], &conf.lat)?;
        }
    }
    Ok(h)
}

/// `mc² Σ_i cosh(θ_i/(mc)) ∏_{k≠i}(ν + κ f(q_k − q_i))` with `θ_i = p_i`.
pub fn relativistic_hamiltonian(q: &[C64], theta: &[C64], lat: &Lattice, params: &LaxParams) -> Result<C64> {
    params.validate()?;
    let mc = params.m * params.c;
    let mut h = C64::new(0.0, 0.0);
    for i in 0..q.len() {
        let mut term = (theta[i] / mc).cosh();
        for k in (0..q.len()).filter(|&k| k != i) {
            term *= params.nu + params.kappa * pair_potential(q[k] - q[i], lat)?;
        }
        h += term;
    }
    Ok(h * mc * params.c)
}

/// Lax matrices that generate Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LaxFamily {
    Hasegawa,
    Composition,
    Ruijsenaars(RootNormalization),
}

/// Evaluates a family at spectral point `z` (λ for the Ruijsenaars matrix).
pub fn evaluate(family: LaxFamily, conf: &RSConfig, z: C64) -> Result<CMatrix> {
    Ok(match family {
        LaxFamily::Hasegawa => hasegawa_lax(conf, z)?.entries,
        LaxFamily::Composition => composition_lax(conf, z)?.entries,
        LaxFamily::Ruijsenaars(norm) => ruijsenaars_lax(conf, &LaxParams::default(), z, norm)?.matrix.entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{fit_trivial_theta, ThetaCharacteristic};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lat() -> Lattice {
        Lattice::from_tau(c(0.0, 1.0)).unwrap()
    }

    fn conf3(lat: Lattice) -> RSConfig {
        RSConfig::new(
            vec![c(0.12, 0.03), c(-0.27, 0.11), c(0.35, -0.08)],
            vec![c(0.2, 0.05), c(-0.1, 0.0), c(0.05, -0.1)],
            c(0.13, 0.04),
            lat,
        )
        .unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        let scale = linalg::max_abs(b).max(1e-300);
        (a - b).iter().all(|d| d.norm() <= tol * scale)
    }

    #[test]
    fn single_particle_hasegawa() {
        let conf = RSConfig::new(vec![c(0.1, 0.0)], vec![c(0.3, 0.1)], c(0.2, 0.05), lat()).unwrap();
        let z = c(0.31, 0.17);
        let l = hasegawa_lax(&conf, z).unwrap();
        let expected = sigma(z + conf.hbar, &conf.lat) / sigma(z, &conf.lat) * conf.p[0].exp();
        assert!((l.entries[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_coupling_collapses_to_diagonal() {
        for l in [lat(), Lattice::trigonometric(), Lattice::rational()] {
            let mut conf = conf3(l);
            conf.hbar = c(0.0, 0.0);
            let m = hasegawa_lax(&conf, c(0.31, 0.17)).unwrap().entries;
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { conf.p[i].exp() } else { c(0.0, 0.0) };
                    assert!((m[(i, j)] - expected).norm() < 1e-12);
                }
            }
            if l.is_elliptic() {
                let comp = composition_lax(&conf, c(0.31, 0.17)).unwrap().entries;
                assert!(close(&comp, &m, 1e-12));
            }
        }
    }

    #[test]
    fn composition_equals_hasegawa() {
        for tau in [c(0.0, 1.0), c(0.3, 0.8)] {
            let conf = conf3(Lattice::from_tau(tau).unwrap()).with_framing(c(0.21, -0.07));
            let z = c(0.31, 0.17);
            let a = hasegawa_lax(&conf, z).unwrap().entries;
            let b = composition_lax(&conf, z).unwrap().entries;
            assert!(close(&b, &a, 1e-10));
        }
    }

    #[test]
    fn composition_on_scaled_lattice() {
        let l = Lattice::elliptic(c(1.3, 0.4), c(-0.2, 1.1)).unwrap();
        let conf = conf3(l);
        let z = c(0.31, 0.17);
        let a = hasegawa_lax(&conf, z).unwrap().entries;
        let b = composition_lax(&conf, z).unwrap().entries;
        assert!(close(&b, &a, 1e-10));
    }

    #[test]
    fn raw_theta_product_is_theta_form_lax() {
        let l = lat();
        let conf = conf3(l);
        let z = c(0.31, 0.17);
        let shift = conf.hbar * 3.0;
        let raw = shifted_inverse_product(|x| theta_xi_matrix(&conf, x).map(|m| m.entries), z, shift).unwrap();
        let half = c(0.5, 0.0);
        let th = |x: C64| theta_jet(half, half, x, c(0.0, 1.0), 0)[0];
        let q = &conf.q;
        let h = conf.hbar;
        for k in 0..3 {
            for kp in 0..3 {
                let mut v = th(z + h + q[k] - q[kp]) / th(z);
                for m in (0..3).filter(|&m| m != k) {
                    v *= th(h + q[m] - q[kp]) / th(q[m] - q[k]);
                }
                assert!((raw.entries[(k, kp)] - v).norm() < 1e-10 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn cocycle() {
        let conf = conf3(lat());
        let z = c(0.31, 0.17);
        let shift = conf.hbar * 3.0;
        let a = intertwining_product(&conf, z).unwrap().entries;
        let mut back = conf.clone();
        back.hbar = -conf.hbar;
        back.p = conf.p.iter().map(|p| -p).collect();
        let b = intertwining_product(&back, z + shift).unwrap().entries;
        // strip the momentum factors from both products
        let mut b_plain = b.clone();
        exp_rows(&mut b_plain, &conf.p);
        let mut a_plain = a.clone();
        exp_rows(&mut a_plain, &back.p);
        assert!(close(&(a_plain * b_plain), &CMatrix::identity(3, 3), 1e-10));
    }

    #[test]
    fn intertwining_vector_quasi_periodicity() {
        let l = lat();
        let lam = [c(0.1, 0.0), c(-0.3, 0.1), c(0.25, 0.05)];
        let z = c(0.2, 0.1);
        for j in 0..3 {
            let a = intertwining_vector(&lam, j, 1, z + 1.0, &l).unwrap();
            let b = intertwining_vector(&lam, j, 1, z, &l).unwrap();
            let factor = (2.0 * PI * crate::C64::i() * (0.5 - j as f64 / 3.0)).exp();
            assert!((a - factor * b).norm() < 1e-12 * b.norm());
        }
        let diag = [c(0.4, 0.1); 3];
        let v = intertwining_vector(&diag, 2, 0, z, &l).unwrap();
        let zero = intertwining_vector(&[c(0.0, 0.0); 3], 2, 0, z, &l).unwrap();
        assert!((v - zero).norm() < 1e-14);
    }

    #[test]
    fn intertwining_vector_is_shifted_sigma_on_level_lattice() {
        let n = 3;
        let tau = c(0.2, 0.9);
        let l = Lattice::from_tau(tau).unwrap();
        let level = Lattice::from_tau(tau * n as f64).unwrap();
        let lam = [c(0.1, 0.0), c(-0.3, 0.1), c(0.25, 0.05)];
        for j in 0..n {
            let a = j as f64 / n as f64;
            let b = (1.0 - n as f64) / 2.0;
            let fit = fit_trivial_theta(ThetaCharacteristic::new(a, b), &level).unwrap();
            let shift = a * level.omega2().unwrap() + b;
            for z in [c(0.13, 0.4), c(-0.2, 0.7), c(0.45, -0.3)] {
                let w = intertwining_argument(&lam, 1, z, &l);
                let v = intertwining_vector(&lam, j, 1, z, &l).unwrap();
                let s = sigma(w - shift, &level);
                let rel = (s - fit.eval(w) * v).norm() / s.norm();
                assert!(rel < 1e-8, "j = {j}: {rel:e}");
            }
        }
    }

    #[test]
    fn xi_matrix_shapes() {
        let one = RSConfig::new(vec![c(0.1, 0.0)], vec![c(0.0, 0.0)], c(0.1, 0.0), lat()).unwrap();
        assert_eq!(xi_matrix(&one, c(0.3, 0.2)).unwrap().n(), 1);
        let conf = conf3(lat());
        let d = linalg::det(&xi_matrix(&conf, c(0.31, 0.17)).unwrap().entries);
        assert!(d.norm() > 1e-6);
    }

    #[test]
    fn ruijsenaars_single_particle_and_diagonal() {
        let one = RSConfig::new(vec![c(0.1, 0.0)], vec![c(0.3, 0.1)], c(0.2, 0.05), lat()).unwrap();
        let l = ruijsenaars_lax(
            &one,
            &LaxParams::default(),
            c(0.4, 0.2),
            RootNormalization::PrincipalRoot,
        )
        .unwrap();
        assert!((l.matrix.entries[(0, 0)] - one.p[0].exp()).norm() < 1e-14);

        let conf = conf3(lat());
        let l = ruijsenaars_lax(
            &conf,
            &LaxParams::default(),
            c(0.4, 0.2),
            RootNormalization::PrincipalRoot,
        )
        .unwrap();
        for i in 0..3 {
            let mut expected = conf.p[i].exp();
            for m in (0..3).filter(|&m| m != i) {
                let s = sigma(conf.mu, &conf.lat);
                let r = s * s * (wp(conf.mu, &conf.lat).unwrap() - wp(conf.q[i] - conf.q[m], &conf.lat).unwrap());
                expected *= r.sqrt();
            }
            assert!((l.matrix.entries[(i, i)] - expected).norm() < 1e-12 * expected.norm());
        }
    }

    #[test]
    fn ruijsenaars_spectrum_matches_hasegawa() {
        let conf = conf3(Lattice::from_tau(c(0.3, 0.8)).unwrap());
        let z = c(0.31, 0.17);
        let lam = z + conf.mu;
        let rl = ruijsenaars_lax(&conf, &LaxParams::default(), lam, RootNormalization::Factorized).unwrap();
        let scale = sigma(z, &conf.lat) / sigma(lam, &conf.lat);
        let h: Vec<C64> = linalg::eigenvalues(&hasegawa_lax(&conf, z).unwrap().entries)
            .into_iter()
            .map(|e| e * scale)
            .collect();
        let r = linalg::eigenvalues(&rl.matrix.entries);
        assert!(linalg::matched_deviation(&h, &r) < 1e-10);
    }

    #[test]
    fn principal_root_squares_to_sigma_product() {
        let conf = conf3(lat());
        let lat = conf.lat;
        for x in [c(0.3, 0.1), c(-0.2, 0.4)] {
            let s = sigma(conf.mu, &lat);
            let f2 = s * s * (wp(conf.mu, &lat).unwrap() - wp(x, &lat).unwrap());
            let other = sigma(x + conf.mu, &lat) * sigma(x - conf.mu, &lat) / (sigma(x, &lat) * sigma(x, &lat));
            assert!((f2 - other).norm() < 1e-10 * other.norm());
        }
    }

    #[test]
    fn krichever_diagonal_and_errors() {
        let conf = conf3(lat());
        let (z, lam) = (c(0.31, 0.17), c(0.4, 0.2));
        let m = krichever_lax(&conf, z, lam).unwrap();
        let mu = conf.mu;
        let l = &conf.lat;
        let bracket = sigma(z - mu, l) / sigma(z + mu, l);
        let expected = sigma(lam, l) / (sigma(lam + mu, l) * sigma(-mu, l)) * (-0.5 * bracket.ln()).exp();
        assert!((m.entries[(1, 1)] - expected).norm() < 1e-12 * expected.norm());
        assert!(m.entries.iter().all(|v| v.is_finite()));
        let zero = conf.clone().with_mu(c(0.0, 0.0));
        assert!(matches!(krichever_lax(&zero, z, lam), Err(Error::ZeroMu)));
    }

    #[test]
    fn spin_reduces_to_spinless() {
        let conf = conf3(lat());
        let z = c(0.31, 0.17);
        let spin = spin_lax(&conf, &SpinFraming::unit(3, 1), z).unwrap().entries;
        let mut free = conf.clone();
        free.p = vec![c(0.0, 0.0); 3];
        let spinless = hasegawa_lax(&free, z).unwrap().entries;
        assert_eq!(spin, spinless);

        let mut doubled = SpinFraming::unit(3, 1);
        doubled.u0 *= c(2.0, 0.0);
        let d = spin_lax(&conf, &doubled, z).unwrap().entries;
        assert!(close(&d, &(spin * c(2.0, 0.0)), 1e-15));
    }

    #[test]
    fn spin_shape_mismatch() {
        let conf = conf3(lat());
        assert!(spin_lax(&conf, &SpinFraming::unit(2, 1), c(0.3, 0.1)).is_err());
    }

    #[test]
    fn cm_free_and_two_body() {
        let free = CMConfig::new(
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(-0.5, 0.0)],
            c(0.0, 0.0),
            Lattice::rational(),
        )
        .unwrap();
        let m = cm_lax(&free, Some(c(0.7, 0.0))).unwrap().entries;
        assert_eq!(m, linalg::diag(&free.p));

        let two = CMConfig::new(
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0); 2],
            c(1.0, 0.0),
            Lattice::rational(),
        )
        .unwrap();
        let m = cm_lax(&two, None).unwrap().entries;
        assert_eq!(m[(0, 1)], c(-1.0, 0.0));
        assert_eq!(m[(1, 0)], c(1.0, 0.0));
        assert!(matches!(cm_lax(&two, Some(c(0.0, 0.0))), Err(Error::ZeroLambda)));
    }

    #[test]
    fn cm_trace_square_has_opposite_coupling_sign() {
        let q = vec![c(0.1, 0.2), c(-0.7, 0.05), c(0.9, -0.3)];
        let p = vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0)];
        let g = c(0.8, 0.1);
        let conf = CMConfig::new(q.clone(), p.clone(), g, Lattice::rational()).unwrap();
        let m = cm_lax(&conf, None).unwrap().entries;
        let tr2 = (&m * &m).trace();
        let flipped = CMConfig::new(q, p, g * c(0.0, 1.0), Lattice::rational()).unwrap();
        assert!((tr2 - 2.0 * cm_hamiltonian(&flipped).unwrap()).norm() < 1e-12);
        assert!((tr2 - 2.0 * cm_hamiltonian(&conf).unwrap()).norm() > 1e-2);
    }

    #[test]
    fn cm_elliptic_entry_has_rational_limit() {
        let q = vec![c(0.001, 0.0), c(-0.002, 0.0005)];
        let p = vec![c(0.0, 0.0); 2];
        let lam = c(0.003, 0.001);
        let ell = cm_lax(
            &CMConfig::new(q.clone(), p.clone(), c(1.0, 0.0), lat()).unwrap(),
            Some(lam),
        )
        .unwrap();
        let rat = cm_lax(
            &CMConfig::new(q, p, c(1.0, 0.0), Lattice::rational()).unwrap(),
            Some(lam),
        )
        .unwrap();
        assert!((ell.entries[(0, 1)] - rat.entries[(0, 1)]).norm() < 1e-3 * rat.entries[(0, 1)].norm());
    }

    #[test]
    fn factorized_cm_single_particle_is_zeta() {
        let conf = CMConfig::new(vec![c(0.2, 0.1)], vec![c(0.0, 0.0)], c(1.0, 0.0), lat()).unwrap();
        let z = c(0.31, 0.17);
        let m = factorized_cm_lax(&conf, z).unwrap();
        let zeta = crate::elliptic::zeta(z, &conf.lat).unwrap();
        assert!((m.entries[(0, 0)] - zeta).norm() < 1e-8);
    }

    #[test]
    fn factorized_cm_trace_is_log_det_derivative() {
        let conf = CMConfig::new(
            vec![c(0.12, 0.03), c(-0.27, 0.11), c(0.35, -0.08)],
            vec![c(0.2, 0.0), c(-0.1, 0.3), c(0.0, 0.1)],
            c(1.0, 0.0),
            lat(),
        )
        .unwrap();
        let z = c(0.31, 0.17);
        let m = factorized_cm_lax(&conf, z).unwrap();
        let rs = RSConfig::new(conf.q.clone(), vec![c(0.0, 0.0); 3], c(0.0, 0.0), conf.lat).unwrap();
        let h = 1e-4;
        let ld = |x: C64| linalg::det(&xi_matrix(&rs, x).unwrap().entries).ln();
        let dlog = (ld(z + h) - ld(z - h)) / (2.0 * h);
        let ps: C64 = conf.p.iter().sum();
        assert!((m.entries.trace() - ps - 3.0 * dlog).norm() < 1e-6);
    }

    #[test]
    fn nonrelativistic_limit_of_product_hamiltonian() {
        let l = lat();
        let cm = CMConfig::new(
            vec![c(0.1, 0.05), c(-0.3, 0.1)],
            vec![c(0.4, 0.0), c(-0.2, 0.1)],
            c(0.7, 0.0),
            l,
        )
        .unwrap();
        let target = cm_hamiltonian(&cm).unwrap();
        let err = |cc: f64| {
            let params = LaxParams::nonrelativistic(1.0, cc, cm.g);
            let h = relativistic_hamiltonian(&cm.q, &cm.p, &l, &params).unwrap();
            (h - 2.0 * cc * cc - target).norm()
        };
        let (e1, e2) = (err(10.0), err(20.0));
        assert!(e2 < e1 / 3.5 && e2 < 1e-2, "{e1:e} {e2:e}");
    }

    #[test]
    fn invalid_params() {
        let conf = conf3(lat());
        let bad = LaxParams {
            m: 0.0,
            ..LaxParams::default()
        };
        assert!(ruijsenaars_lax(&conf, &bad, c(0.4, 0.2), RootNormalization::PrincipalRoot).is_err());
        assert!(RSConfig::new(vec![c(0.1, 0.0), c(1.1, 0.0)], vec![c(0.0, 0.0); 2], c(0.1, 0.0), lat()).is_err());
    }
}
