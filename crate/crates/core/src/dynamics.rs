//! Hamiltonian flows generated by Lax matrices.
//!
//! Hamiltonians are holomorphic functions of the canonical pairs `(q_i, p_i)`
//! with `θ_i = e^{p_i}`. Gradients are Richardson-extrapolated central
//! differences taken along the real axis of each coordinate.

use std::fmt;

use crate::cauchy::DISTINCTNESS;
use crate::lax::{self, LaxFamily, LaxParams, RSConfig, RootNormalization};
use crate::linalg::{self, CMatrix};
use crate::{Error, Lattice, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<C64>,
    pub p: Vec<C64>,
}

impl PhasePoint {
    pub fn new(q: Vec<C64>, p: Vec<C64>) -> Self {
        Self { q, p }
    }

    pub fn of(conf: &RSConfig) -> Self {
        Self::new(conf.q.clone(), conf.p.clone())
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    fn to_state(&self) -> Vec<C64> {
        self.q.iter().chain(self.p.iter()).copied().collect()
    }

    fn from_state(s: &[C64]) -> Self {
        let n = s.len() / 2;
        Self::new(s[..n].to_vec(), s[n..].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// Largest matched eigenvalue deviation from the initial spectrum.
    pub spectral_drift: Vec<f64>,
    /// `|H(t) − H(0)|`.
    pub energy_drift: Vec<f64>,
}

impl Trajectory {
    fn start(point: PhasePoint) -> Self {
        Self {
            times: vec![0.0],
            points: vec![point],
            spectral_drift: vec![0.0],
            energy_drift: vec![0.0],
        }
    }

    pub fn max_spectral_drift(&self) -> f64 {
        self.spectral_drift.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().unwrap()
    }
}

/// Integration stopped early; `partial` holds every accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct Aborted {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "integration aborted at t = {}: {}",
            self.partial.times.last().unwrap(),
            self.error
        )
    }
}

impl std::error::Error for Aborted {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HamiltonianFamily {
    /// `Tr L^i` of the chosen Lax family.
    TracePower(u32),
    /// `Tr(L' + L'⁻¹)` of the Ruijsenaars matrix.
    RsCosh,
    /// `(1/(i+1)) Tr (η₀η∞)^{i+1}` of the composition matrix.
    HitchinComponent(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub family: HamiltonianFamily,
    pub lax_family: LaxFamily,
    pub eval_z: C64,
}

impl HamiltonianSpec {
    pub fn trace_power(i: u32, eval_z: C64) -> Self {
        Self {
            family: HamiltonianFamily::TracePower(i),
            lax_family: LaxFamily::Hasegawa,
            eval_z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            HamiltonianFamily::TracePower(0) | HamiltonianFamily::HitchinComponent(0) => {
                Err(Error::InvalidParameter("Hamiltonian index must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn trace_of_power(m: &CMatrix, k: u32) -> C64 {
    let mut acc = m.clone();
    for _ in 1..k {
        acc = &acc * m;
    }
    acc.trace()
}

/// Value of the Hamiltonian at the phase point stored in `conf`.
pub fn hamiltonian(spec: &HamiltonianSpec, conf: &RSConfig) -> Result<C64> {
    spec.validate()?;
    match spec.family {
        HamiltonianFamily::TracePower(i) => Ok(trace_of_power(&lax::evaluate(spec.lax_family, conf, spec.eval_z)?, i)),
        HamiltonianFamily::HitchinComponent(i) => {
            let m = lax::composition_lax(conf, spec.eval_z)?.entries;
            Ok(trace_of_power(&m, i + 1) / (i + 1) as f64)
        }
        HamiltonianFamily::RsCosh => {
            let norm = match spec.lax_family {
                LaxFamily::Ruijsenaars(norm) => norm,
                _ => RootNormalization::PrincipalRoot,
            };
            let l = lax::ruijsenaars_lax(conf, &LaxParams::default(), spec.eval_z, norm)?
                .matrix
                .entries;
            let inv = linalg::inverse(&l)?;
            Ok((l + inv).trace())
        }
    }
}

/// Finite-difference scheme for gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifference {
    pub step: f64,
    /// Combine steps `h` and `h/2` as `(4D(h/2) − D(h))/3`.
    pub richardson: bool,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: true,
        }
    }
}

impl FiniteDifference {
    pub fn plain(step: f64) -> Self {
        Self {
            step,
            richardson: false,
        }
    }

    /// Smallest pair separation the scheme tolerates.
    pub fn collision_margin(&self) -> f64 {
        10.0 * self.step
    }

    fn central<F: Fn(C64) -> Result<C64>>(f: &F, x: C64, h: C64) -> Result<C64> {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    }

    /// Derivative along direction `dir` (1 or i).
    pub fn derivative<F: Fn(C64) -> Result<C64>>(&self, f: F, x: C64, dir: C64) -> Result<C64> {
        let h = dir * self.step;
        let d1 = Self::central(&f, x, h)?;
        if !self.richardson {
            return Ok(d1);
        }
        let d2 = Self::central(&f, x, h * 0.5)?;
        Ok((4.0 * d2 - d1) / 3.0)
    }
}

/// `∂H/∂q` and `∂H/∂p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub dq: Vec<C64>,
    pub dp: Vec<C64>,
}

/// Fails when two positions are closer than the scheme's margin modulo `lat`.
pub fn check_collisions(q: &[C64], lat: &Lattice, fd: &FiniteDifference) -> Result<()> {
    let margin = fd.collision_margin().max(DISTINCTNESS);
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            let d = lat.distance_to_lattice(q[i] - q[j]);
            if d < margin {
                return Err(Error::CollisionImminent { i, j, margin: d });
            }
        }
    }
    Ok(())
}

/// Gradient of an arbitrary phase-space function.
pub fn gradient<H>(h: &H, point: &PhasePoint, fd: &FiniteDifference) -> Result<Gradient>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    gradient_along(h, point, fd, C64::new(1.0, 0.0))
}

fn gradient_along<H>(h: &H, point: &PhasePoint, fd: &FiniteDifference, dir: C64) -> Result<Gradient>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    let n = point.n();
    let state = point.to_state();
    let mut grad = vec![C64::new(0.0, 0.0); 2 * n];
    for (k, g) in grad.iter_mut().enumerate() {
        let x0 = state[k];
        *g = fd.derivative(
            |x| {
                let mut s = state.clone();
                s[k] = x;
                h(&PhasePoint::from_state(&s))
            },
            x0,
            dir,
        )?;
    }
    Ok(Gradient {
        dp: grad.split_off(n),
        dq: grad,
    })
}

/// Largest mismatch between derivatives taken along the real and imaginary
/// axes; zero for a holomorphic function.
pub fn holomorphy_defect<H>(h: &H, point: &PhasePoint, fd: &FiniteDifference) -> Result<f64>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    let re = gradient_along(h, point, fd, C64::new(1.0, 0.0))?;
    let im = gradient_along(h, point, fd, C64::new(0.0, 1.0))?;
    let pairs = re.dq.iter().zip(&im.dq).chain(re.dp.iter().zip(&im.dp));
    Ok(pairs.fold(0.0, |acc, (a, b)| acc.max((a - b).norm())))
}

/// `{A, B} = Σ ∂A/∂q ∂B/∂p − ∂A/∂p ∂B/∂q`.
pub fn bracket<A, B>(a: &A, b: &B, point: &PhasePoint, fd: &FiniteDifference) -> Result<C64>
where
    A: Fn(&PhasePoint) -> Result<C64>,
    B: Fn(&PhasePoint) -> Result<C64>,
{
    let ga = gradient(a, point, fd)?;
    let gb = gradient(b, point, fd)?;
    Ok((0..point.n()).map(|i| ga.dq[i] * gb.dp[i] - ga.dp[i] * gb.dq[i]).sum())
}

/// Hamilton's equations `(dq, dp) = (∂H/∂p, −∂H/∂q)`.
pub fn vector_field<H>(h: &H, point: &PhasePoint, fd: &FiniteDifference) -> Result<(Vec<C64>, Vec<C64>)>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    let g = gradient(h, point, fd)?;
    Ok((g.dp, g.dq.into_iter().map(|v| -v).collect()))
}

fn spec_function<'a>(spec: &'a HamiltonianSpec, conf: &'a RSConfig) -> impl Fn(&PhasePoint) -> Result<C64> + 'a {
    move |pt: &PhasePoint| hamiltonian(spec, &conf.with_phase(&pt.q, &pt.p))
}

pub fn hamiltonian_vector_field(
    spec: &HamiltonianSpec,
    point: &PhasePoint,
    conf: &RSConfig,
    fd: &FiniteDifference,
) -> Result<(Vec<C64>, Vec<C64>)> {
    spec.validate()?;
    check_collisions(&point.q, &conf.lat, fd)?;
    vector_field(&spec_function(spec, conf), point, fd)
}

pub fn poisson_bracket(
    a: &HamiltonianSpec,
    b: &HamiltonianSpec,
    point: &PhasePoint,
    conf: &RSConfig,
    fd: &FiniteDifference,
) -> Result<C64> {
    check_collisions(&point.q, &conf.lat, fd)?;
    bracket(&spec_function(a, conf), &spec_function(b, conf), point, fd)
}

fn rk4_step<F>(field: &F, y: &[C64], dt: f64) -> Result<Vec<C64>>
where
    F: Fn(&[C64]) -> Result<Vec<C64>>,
{
    let axpy = |a: &[C64], k: &[C64], s: f64| -> Vec<C64> { a.iter().zip(k).map(|(x, d)| x + d * s).collect() };
    let k1 = field(y)?;
    let k2 = field(&axpy(y, &k1, dt / 2.0))?;
    let k3 = field(&axpy(y, &k2, dt / 2.0))?;
    let k4 = field(&axpy(y, &k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
        .collect())
}

fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_end > 0, got {dt} and {t_end}"
        )));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((1..=steps).map(|k| (k as f64 * dt).min(t_end)).collect())
}

/// Spectrum recorded along a flow.
pub type SpectrumFn<'a> = &'a dyn Fn(&PhasePoint) -> Result<Vec<C64>>;

/// Everything [`integrate_with`] needs besides the Hamiltonian.
pub struct FlowSetup<'a> {
    pub lat: Option<&'a Lattice>,
    pub fd: FiniteDifference,
    /// Spectrum whose drift is recorded; `None` records zeros.
    pub spectrum: Option<SpectrumFn<'a>>,
}

/// Fixed-step RK4 on Hamilton's equations.
pub fn integrate_with<H>(
    h: &H,
    start: &PhasePoint,
    setup: &FlowSetup<'_>,
    t_end: f64,
    dt: f64,
) -> std::result::Result<Trajectory, Aborted>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    let mut traj = Trajectory::start(start.clone());
    let abort = |error: Error, partial: &Trajectory| Aborted {
        error,
        partial: partial.clone(),
    };
    let grid = time_grid(t_end, dt).map_err(|e| abort(e, &traj))?;
    let prepare = |pt: &PhasePoint| -> Result<(C64, Vec<C64>)> {
        if let Some(lat) = setup.lat {
            check_collisions(&pt.q, lat, &setup.fd)?;
        }
        let spec = match setup.spectrum {
            Some(s) => s(pt)?,
            None => Vec::new(),
        };
        Ok((h(pt)?, spec))
    };
    let (h0, spec0) = prepare(start).map_err(|e| abort(e, &traj))?;
    let field = |y: &[C64]| -> Result<Vec<C64>> {
        let pt = PhasePoint::from_state(y);
        if let Some(lat) = setup.lat {
            check_collisions(&pt.q, lat, &setup.fd)?;
        }
        let (dq, dp) = vector_field(h, &pt, &setup.fd)?;
        Ok(dq.into_iter().chain(dp).collect())
    };
    let mut t = 0.0;
    let mut y = start.to_state();
    for t_next in grid {
        let next = rk4_step(&field, &y, t_next - t).map_err(|e| abort(e, &traj))?;
        let pt = PhasePoint::from_state(&next);
        let (h1, spec1) = prepare(&pt).map_err(|e| abort(e, &traj))?;
        traj.times.push(t_next);
        traj.points.push(pt);
        traj.energy_drift.push((h1 - h0).norm());
        traj.spectral_drift.push(if spec0.is_empty() {
            0.0
        } else {
            linalg::matched_deviation(&spec0, &spec1)
        });
        t = t_next;
        y = next;
    }
    Ok(traj)
}

/// Integrates the flow of `spec`, recording the drift of the spectrum of
/// the spec's Lax family at `eval_z`.
pub fn integrate(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    conf: &RSConfig,
    t_end: f64,
    dt: f64,
    fd: &FiniteDifference,
) -> std::result::Result<Trajectory, Aborted> {
    if let Err(error) = spec.validate() {
        return Err(Aborted {
            error,
            partial: Trajectory::start(start.clone()),
        });
    }
    let spectrum = |pt: &PhasePoint| -> Result<Vec<C64>> {
        let m = lax::evaluate(spec.lax_family, &conf.with_phase(&pt.q, &pt.p), spec.eval_z)?;
        Ok(linalg::eigenvalues(&m))
    };
    let setup = FlowSetup {
        lat: Some(&conf.lat),
        fd: *fd,
        spectrum: Some(&spectrum),
    };
    integrate_with(&spec_function(spec, conf), start, &setup, t_end, dt)
}

/// Same flow written in the multiplicative coordinates `(q, θ = e^p)` with
/// symplectic form `Σ dθ/θ ∧ dq`: `dq = θ ∂H/∂θ`, `dθ = −θ ∂H/∂q`. `h` takes
/// `(q, θ)`; the returned trajectory stores `θ` in the `p` slot.
pub fn integrate_multiplicative<H>(
    h: &H,
    start: &PhasePoint,
    lat: Option<&Lattice>,
    fd: &FiniteDifference,
    t_end: f64,
    dt: f64,
) -> std::result::Result<Trajectory, Aborted>
where
    H: Fn(&PhasePoint) -> Result<C64>,
{
    let mut traj = Trajectory::start(start.clone());
    let grid = time_grid(t_end, dt).map_err(|error| Aborted {
        error,
        partial: traj.clone(),
    })?;
    let field = |y: &[C64]| -> Result<Vec<C64>> {
        let pt = PhasePoint::from_state(y);
        if let Some(lat) = lat {
            check_collisions(&pt.q, lat, fd)?;
        }
        let g = gradient(h, &pt, fd)?;
        let dq = pt.p.iter().zip(&g.dp).map(|(th, d)| th * d);
        let dth = pt.p.iter().zip(&g.dq).map(|(th, d)| -th * d);
        Ok(dq.chain(dth).collect())
    };
    let h0 = h(start).map_err(|error| Aborted {
        error,
        partial: traj.clone(),
    })?;
    let mut t = 0.0;
    let mut y = start.to_state();
    for t_next in grid {
        let step = rk4_step(&field, &y, t_next - t).and_then(|next| {
            let pt = PhasePoint::from_state(&next);
            let e = h(&pt)?;
            Ok((next, pt, e))
        });
        let (next, pt, e) = step.map_err(|error| Aborted {
            error,
            partial: traj.clone(),
        })?;
        traj.times.push(t_next);
        traj.points.push(pt);
        traj.energy_drift.push((e - h0).norm());
        traj.spectral_drift.push(0.0);
        t = t_next;
        y = next;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::sigma;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ell() -> Lattice {
        Lattice::from_tau(c(0.1, 1.0)).unwrap()
    }

    /// Repulsive regime: imaginary ħ, symmetric-gauge momenta from small
    /// real rapidities.
    fn physical(n: usize) -> RSConfig {
        let lat = ell();
        let q: Vec<C64> = (0..n).map(|k| c(0.3 * k as f64 + 0.01 * (k * k) as f64, 0.0)).collect();
        let theta: Vec<C64> = (0..n).map(|k| c(0.01 * k as f64 - 0.01, 0.0)).collect();
        let hbar = c(0.0, 0.05);
        let p = lax::momenta_from_rapidities(&q, &theta, hbar, &lat).unwrap();
        RSConfig::new(q, p, hbar, lat).unwrap()
    }

    fn conf2() -> RSConfig {
        RSConfig::new(
            vec![c(0.1, 0.02), c(-0.25, 0.05)],
            vec![c(0.2, 0.0), c(-0.1, 0.05)],
            c(0.15, 0.0),
            ell(),
        )
        .unwrap()
    }

    #[test]
    fn single_particle_values() {
        let conf = RSConfig::new(vec![c(0.1, 0.0)], vec![c(0.3, 0.1)], c(0.2, 0.0), ell()).unwrap();
        let z = c(0.3, 0.2);
        let h = hamiltonian(&HamiltonianSpec::trace_power(1, z), &conf).unwrap();
        let expected = sigma(z + conf.hbar, &conf.lat) / sigma(z, &conf.lat) * conf.p[0].exp();
        assert!((h - expected).norm() < 1e-14);

        let cosh = HamiltonianSpec {
            family: HamiltonianFamily::RsCosh,
            lax_family: LaxFamily::Hasegawa,
            eval_z: z,
        };
        let h = hamiltonian(&cosh, &conf).unwrap();
        assert!((h - 2.0 * conf.p[0].cosh()).norm() < 1e-13);
    }

    #[test]
    fn trace_square_is_eigenvalue_square_sum() {
        let conf = conf2();
        let z = c(0.3, 0.2);
        let h = hamiltonian(&HamiltonianSpec::trace_power(2, z), &conf).unwrap();
        let ev = linalg::eigenvalues(&lax::hasegawa_lax(&conf, z).unwrap().entries);
        let s: C64 = ev.iter().map(|e| e * e).sum();
        assert!((h - s).norm() < 1e-10);
    }

    #[test]
    fn hitchin_component_matches_trace_power() {
        let conf = conf2();
        let z = c(0.3, 0.2);
        let a = hamiltonian(
            &HamiltonianSpec {
                family: HamiltonianFamily::HitchinComponent(1),
                lax_family: LaxFamily::Composition,
                eval_z: z,
            },
            &conf,
        )
        .unwrap();
        let b = hamiltonian(&HamiltonianSpec::trace_power(2, z), &conf).unwrap();
        assert!((a - b / 2.0).norm() < 1e-9);
    }

    #[test]
    fn index_zero_rejected() {
        let spec = HamiltonianSpec::trace_power(0, c(0.3, 0.2));
        assert!(hamiltonian(&spec, &conf2()).is_err());
    }

    #[test]
    fn free_particle_field() {
        let conf = RSConfig::new(vec![c(0.1, 0.0)], vec![c(0.3, 0.1)], c(0.2, 0.0), ell()).unwrap();
        let spec = HamiltonianSpec::trace_power(1, c(0.3, 0.2));
        let fd = FiniteDifference::default();
        let (dq, dp) = hamiltonian_vector_field(&spec, &PhasePoint::of(&conf), &conf, &fd).unwrap();
        let h = hamiltonian(&spec, &conf).unwrap();
        assert!((dq[0] - h).norm() < 1e-10);
        assert!(dp[0].norm() < 1e-10);

        let traj = integrate(&spec, &PhasePoint::of(&conf), &conf, 0.5, 0.05, &fd).unwrap();
        assert_eq!(traj.times.len(), 11);
        assert!((traj.last().q[0] - conf.q[0] - 0.5 * h).norm() < 1e-10);
    }

    #[test]
    fn constant_hamiltonian_is_stationary() {
        let start = PhasePoint::new(vec![c(0.1, 0.0), c(0.4, 0.0)], vec![c(0.0, 0.0); 2]);
        let constant = |_: &PhasePoint| Ok(c(3.0, 1.0));
        let setup = FlowSetup {
            lat: None,
            fd: FiniteDifference::default(),
            spectrum: None,
        };
        let traj = integrate_with(&constant, &start, &setup, 0.1, 0.01).unwrap();
        assert!(traj.points.iter().all(|p| *p == start));
        let (dq, dp) = vector_field(&constant, &start, &setup.fd).unwrap();
        assert!(dq.iter().chain(&dp).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn canonical_brackets() {
        let fd = FiniteDifference::default();
        let pt = PhasePoint::new(vec![c(0.1, 0.0), c(0.4, 0.0)], vec![c(0.2, 0.0), c(0.3, 0.0)]);
        for i in 0..2 {
            for j in 0..2 {
                let qi = move |x: &PhasePoint| Ok(x.q[i]);
                let pj = move |x: &PhasePoint| Ok(x.p[j]);
                let b = bracket(&qi, &pj, &pt, &fd).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((b - expected).norm() < 1e-12);
                assert!(bracket(&qi, &qi, &pt, &fd).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn self_bracket_vanishes() {
        let conf = conf2();
        let spec = HamiltonianSpec::trace_power(2, c(0.3, 0.2));
        let b = poisson_bracket(
            &spec,
            &spec,
            &PhasePoint::of(&conf),
            &conf,
            &FiniteDifference::default(),
        )
        .unwrap();
        assert!(b.norm() < 1e-14);
    }

    #[test]
    fn step_halving_ratio() {
        let conf = conf2();
        let spec = HamiltonianSpec::trace_power(2, c(0.3, 0.2));
        let pt = PhasePoint::of(&conf);
        let f = spec_function(&spec, &conf);
        let grads: Vec<Gradient> = [2e-2, 1e-2, 5e-3]
            .iter()
            .map(|&h| gradient(&f, &pt, &FiniteDifference::plain(h)).unwrap())
            .collect();
        for k in 0..2 {
            let r = (grads[0].dq[k] - grads[1].dq[k]).norm() / (grads[1].dq[k] - grads[2].dq[k]).norm();
            assert!((r - 4.0).abs() < 0.2, "ratio {r}");
        }
    }

    #[test]
    fn hamiltonian_is_holomorphic() {
        let conf = conf2();
        let spec = HamiltonianSpec::trace_power(2, c(0.3, 0.2));
        let d = holomorphy_defect(
            &spec_function(&spec, &conf),
            &PhasePoint::of(&conf),
            &FiniteDifference::default(),
        )
        .unwrap();
        assert!(d < 1e-9);
    }

    #[test]
    fn collision_aborts_with_partial_trajectory() {
        let fd = FiniteDifference::default();
        let start = PhasePoint::new(vec![c(0.0, 0.0), c(0.01, 0.0)], vec![c(0.0, 0.0); 2]);
        // approach velocity −1 closes the gap at t = 0.01
        let attract = |x: &PhasePoint| Ok(x.p[0] * 0.5 - x.p[1] * 0.5);
        let lat = Lattice::rational();
        let setup = FlowSetup {
            lat: Some(&lat),
            fd,
            spectrum: None,
        };
        let err = integrate_with(&attract, &start, &setup, 1.0, 1e-3).unwrap_err();
        assert!(matches!(err.error, Error::CollisionImminent { i: 0, j: 1, .. }));
        assert!(err.partial.times.len() > 5 && err.partial.times.len() < 12);
    }

    #[test]
    fn multiplicative_coordinates_agree() {
        let conf = physical(2);
        let spec = HamiltonianSpec::trace_power(2, c(0.3, 0.2));
        let fd = FiniteDifference::default();
        let start = PhasePoint::of(&conf);
        let additive = integrate(&spec, &start, &conf, 0.1, 1e-2, &fd).unwrap();
        let h_theta = |x: &PhasePoint| {
            let p: Vec<C64> = x.p.iter().map(|t| t.ln()).collect();
            hamiltonian(&spec, &conf.with_phase(&x.q, &p))
        };
        let mstart = PhasePoint::new(start.q.clone(), start.p.iter().map(|p| p.exp()).collect());
        let mult = integrate_multiplicative(&h_theta, &mstart, Some(&conf.lat), &fd, 0.1, 1e-2).unwrap();
        let (a, b) = (additive.last(), mult.last());
        for i in 0..2 {
            assert!((a.q[i] - b.q[i]).norm() < 1e-8);
            assert!((a.p[i] - b.p[i].ln()).norm() < 1e-8);
        }
    }

    #[test]
    fn short_flow_is_isospectral() {
        let conf = physical(3);
        let spec = HamiltonianSpec::trace_power(2, c(0.37, 0.21));
        let traj = integrate(
            &spec,
            &PhasePoint::of(&conf),
            &conf,
            0.2,
            1e-3,
            &FiniteDifference::default(),
        )
        .unwrap();
        assert!(traj.max_spectral_drift() < 1e-8, "{}", traj.max_spectral_drift());
        assert!(traj.max_energy_drift() < 1e-10);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }
}
