//! The five subcommands. Each returns its report; files go to `out`.

use num_complex::Complex64 as C64;
use rslax_core::dynamics::{integrate, FiniteDifference, HamiltonianFamily, HamiltonianSpec, PhasePoint, Trajectory};
use rslax_core::lax::{self, LaxFamily, LaxParams, RootNormalization, SpinFraming};
use rslax_core::limits::{cm_limit_sweep, degeneration_sweep, LimitParameter, LimitSweep};
use rslax_core::linalg::{self, CMatrix};
use rslax_core::reductions::{self, OrbitSpec, ReductionKind, ReductionPair};
use serde::{Deserialize, Serialize};

use crate::checks;
use crate::config::{complexes, CmSpec, ComplexValue, ExperimentConfig, RsSpec};
use crate::output::{json_complexes, matrix_rows, num, CheckRow, JsonComplex, OutputDir, RunReport};
use crate::CliError;

fn invalid(what: &str) -> impl Fn(rslax_core::Error) -> CliError + '_ {
    move |e| CliError::ConfigInvalid(format!("{what}: {e}"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    /// Subset of check names; all checks when absent.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
}

pub fn verify(cfg: &ExperimentConfig, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    let params: VerifyParams = cfg.params()?;
    let rows = checks::run_checks(params.checks.as_deref(), report.seed, report.tol_scale)?;
    report.checks = rows.into_iter().map(|(_, row)| row).collect();
    let header = ["name", "status", "residual", "tolerance"].map(String::from).to_vec();
    let table: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|r| {
            let status = if r.passed() { "pass" } else { "fail" };
            vec![r.name.clone(), status.into(), num(r.residual), num(r.tolerance)]
        })
        .collect();
    out.write_csv("checks.csv", &header, &table)
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFamily {
    Hasegawa,
    Composition,
    Ruijsenaars,
    Krichever,
    Spin,
    Cm,
    FactorizedCm,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    PrincipalRoot,
    Factorized,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramingSpec {
    pub u0: Vec<Vec<ComplexValue>>,
    pub v0: Vec<Vec<ComplexValue>>,
    pub u_inf: Vec<Vec<ComplexValue>>,
    pub v_inf: Vec<Vec<ComplexValue>>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<ComplexValue>]) -> Result<CMatrix, CliError> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if r == 0 || cols == 0 || rows.iter().any(|row| row.len() != cols) {
        return Err(CliError::ConfigInvalid(format!(
            "framing.{name}: need a nonempty rectangular array"
        )));
    }
    Ok(CMatrix::from_fn(r, cols, |i, j| rows[i][j].into()))
}

impl FramingSpec {
    fn build(&self) -> Result<SpinFraming, CliError> {
        Ok(SpinFraming {
            u0: matrix_from_rows("u0", &self.u0)?,
            v0: matrix_from_rows("v0", &self.v0)?,
            u_inf: matrix_from_rows("u_inf", &self.u_inf)?,
            v_inf: matrix_from_rows("v_inf", &self.v_inf)?,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaxCommandParams {
    pub family: MatrixFamily,
    #[serde(default)]
    pub rs: Option<RsSpec>,
    #[serde(default)]
    pub cm: Option<CmSpec>,
    /// Spectral parameter `z`.
    #[serde(default)]
    pub z: Option<ComplexValue>,
    /// Second spectral parameter (Ruijsenaars, Krichever, CM).
    #[serde(default)]
    pub lambda: Option<ComplexValue>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub framing: Option<FramingSpec>,
}

#[derive(Serialize)]
struct LaxSummary {
    family: MatrixFamily,
    n: usize,
    spectral_parameter: Option<JsonComplex>,
    eigenvalues: Vec<JsonComplex>,
    trace: JsonComplex,
    determinant: JsonComplex,
    #[serde(skip_serializing_if = "Option::is_none")]
    near_branch_cut: Option<bool>,
}

pub fn lax_matrix(cfg: &ExperimentConfig, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    let p: LaxCommandParams = cfg.params()?;
    let need = |v: Option<ComplexValue>, name: &str| {
        v.map(C64::from)
            .ok_or_else(|| CliError::ConfigInvalid(format!("params.{name} is required for family {:?}", p.family)))
    };
    let rs = || {
        p.rs.as_ref()
            .ok_or_else(|| CliError::ConfigInvalid(format!("params.rs is required for family {:?}", p.family)))?
            .build()
    };
    let cm = || {
        p.cm.as_ref()
            .ok_or_else(|| CliError::ConfigInvalid(format!("params.cm is required for family {:?}", p.family)))?
            .build()
    };
    let mut near_branch_cut = None;
    let (m, spectral) = match p.family {
        MatrixFamily::Hasegawa | MatrixFamily::Composition => {
            let conf = rs()?;
            let z = need(p.z, "z")?;
            let family = if p.family == MatrixFamily::Hasegawa {
                LaxFamily::Hasegawa
            } else {
                LaxFamily::Composition
            };
            let m = lax::evaluate(family, &conf, z).map_err(invalid("lax"))?;
            if conf.lat.is_elliptic() {
                let other = if family == LaxFamily::Hasegawa {
                    LaxFamily::Composition
                } else {
                    LaxFamily::Hasegawa
                };
                let row = match lax::evaluate(other, &conf, z) {
                    Ok(o) => CheckRow::judge(
                        "hasegawa_matches_composition",
                        linalg::max_abs(&(&m - &o)) / linalg::max_abs(&m),
                        1e-7 * report.tol_scale,
                        None,
                    ),
                    Err(e) => CheckRow::failed("hasegawa_matches_composition", 1e-7 * report.tol_scale, e.to_string()),
                };
                report.checks.push(row);
            }
            (m, Some(z))
        }
        MatrixFamily::Ruijsenaars => {
            let conf = rs()?;
            let lam = need(p.lambda, "lambda")?;
            let norm = match p.normalization {
                Normalization::PrincipalRoot => RootNormalization::PrincipalRoot,
                Normalization::Factorized => RootNormalization::Factorized,
            };
            let r = lax::ruijsenaars_lax(&conf, &LaxParams::default(), lam, norm).map_err(invalid("lax"))?;
            near_branch_cut = Some(r.near_branch_cut);
            (r.matrix.entries, Some(lam))
        }
        MatrixFamily::Krichever => {
            let conf = rs()?;
            let (z, lam) = (need(p.z, "z")?, need(p.lambda, "lambda")?);
            (
                lax::krichever_lax(&conf, z, lam).map_err(invalid("lax"))?.entries,
                Some(z),
            )
        }
        MatrixFamily::Spin => {
            let conf = rs()?;
            let z = need(p.z, "z")?;
            let framing = p
                .framing
                .as_ref()
                .ok_or_else(|| CliError::ConfigInvalid("params.framing is required for family Spin".into()))?
                .build()?;
            (
                lax::spin_lax(&conf, &framing, z).map_err(invalid("lax"))?.entries,
                Some(z),
            )
        }
        MatrixFamily::Cm => {
            let conf = cm()?;
            let lam = p.lambda.map(C64::from);
            (lax::cm_lax(&conf, lam).map_err(invalid("lax"))?.entries, lam)
        }
        MatrixFamily::FactorizedCm => {
            let conf = cm()?;
            let z = need(p.z, "z")?;
            (
                lax::factorized_cm_lax(&conf, z).map_err(invalid("lax"))?.entries,
                Some(z),
            )
        }
    };
    let non_finite = m.iter().filter(|z| !(z.re.is_finite() && z.im.is_finite())).count();
    report.checks.push(CheckRow::judge(
        "finite_entries",
        non_finite as f64,
        0.5 * report.tol_scale,
        None,
    ));
    let mut eigenvalues = linalg::eigenvalues(&m);
    linalg::sort_lexicographic(&mut eigenvalues);
    let summary = LaxSummary {
        family: p.family,
        n: m.nrows(),
        spectral_parameter: spectral.map(Into::into),
        eigenvalues: json_complexes(&eigenvalues),
        trace: m.trace().into(),
        determinant: linalg::det(&m).into(),
        near_branch_cut,
    };
    let (header, rows) = matrix_rows(&m);
    out.write_csv("matrix.csv", &header, &rows)?;
    out.write_json("lax.json", &summary)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    TracePower,
    RsCosh,
    Hitchin,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowLax {
    #[default]
    Hasegawa,
    Composition,
    Ruijsenaars,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianParams {
    pub kind: HamiltonianKind,
    #[serde(default = "one")]
    pub index: u32,
    #[serde(default)]
    pub lax: FlowLax,
    pub z: ComplexValue,
}

fn one() -> u32 {
    1
}

impl HamiltonianParams {
    fn build(&self) -> Result<HamiltonianSpec, CliError> {
        let family = match self.kind {
            HamiltonianKind::TracePower => HamiltonianFamily::TracePower(self.index),
            HamiltonianKind::RsCosh => HamiltonianFamily::RsCosh,
            HamiltonianKind::Hitchin => HamiltonianFamily::HitchinComponent(self.index),
        };
        let lax_family = match self.lax {
            FlowLax::Hasegawa => LaxFamily::Hasegawa,
            FlowLax::Composition => LaxFamily::Composition,
            FlowLax::Ruijsenaars => LaxFamily::Ruijsenaars(RootNormalization::Factorized),
        };
        let spec = HamiltonianSpec {
            family,
            lax_family,
            eval_z: self.z.into(),
        };
        spec.validate().map_err(invalid("params.hamiltonian"))?;
        Ok(spec)
    }
}

fn default_drift_tolerance() -> f64 {
    1e-6
}

fn default_energy_tolerance() -> f64 {
    1e-8
}

fn default_fd_step() -> f64 {
    FiniteDifference::default().step
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub rs: RsSpec,
    pub hamiltonian: HamiltonianParams,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_true")]
    pub richardson: bool,
    #[serde(default = "default_drift_tolerance")]
    pub drift_tolerance: f64,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
}

#[derive(Serialize)]
struct EvolveSummary {
    n: usize,
    steps: usize,
    completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    t_final: f64,
    max_spectral_drift: f64,
    max_energy_drift: f64,
    final_q: Vec<JsonComplex>,
    final_p: Vec<JsonComplex>,
}

pub fn evolve(cfg: &ExperimentConfig, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    let p: EvolveParams = cfg.params()?;
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        return Err(CliError::ConfigInvalid(format!(
            "params.dt: must be positive, got {}",
            p.dt
        )));
    }
    if !(p.t_end > 0.0 && p.t_end.is_finite()) {
        return Err(CliError::ConfigInvalid(format!(
            "params.t_end: must be positive, got {}",
            p.t_end
        )));
    }
    if !(p.fd_step > 0.0 && p.fd_step.is_finite()) {
        return Err(CliError::ConfigInvalid(format!(
            "params.fd_step: must be positive, got {}",
            p.fd_step
        )));
    }
    let conf = p.rs.build()?;
    let spec = p.hamiltonian.build()?;
    let fd = FiniteDifference {
        step: p.fd_step,
        richardson: p.richardson,
    };
    let (traj, error) = match integrate(&spec, &PhasePoint::of(&conf), &conf, p.t_end, p.dt, &fd) {
        Ok(t) => (t, None),
        Err(aborted) => (aborted.partial, Some(aborted.error.to_string())),
    };
    let scale = report.tol_scale;
    report.checks.push(match &error {
        None => CheckRow::judge("flow_completed", 0.0, 0.5 * scale, None),
        Some(e) => CheckRow::judge("flow_completed", 1.0, 0.5 * scale, Some(e.clone())),
    });
    report.checks.push(CheckRow::judge(
        "max_spectral_drift",
        traj.max_spectral_drift(),
        p.drift_tolerance * scale,
        None,
    ));
    report.checks.push(CheckRow::judge(
        "max_energy_drift",
        traj.max_energy_drift(),
        p.energy_tolerance * scale,
        None,
    ));
    write_trajectory(out, &traj)?;
    let last = traj.last();
    let summary = EvolveSummary {
        n: conf.n(),
        steps: traj.times.len() - 1,
        completed: error.is_none(),
        error,
        t_final: *traj.times.last().unwrap(),
        max_spectral_drift: traj.max_spectral_drift(),
        max_energy_drift: traj.max_energy_drift(),
        final_q: json_complexes(&last.q),
        final_p: json_complexes(&last.p),
    };
    out.write_json("evolve.json", &summary)
}

fn write_trajectory(out: &mut OutputDir, traj: &Trajectory) -> Result<(), CliError> {
    let n = traj.points[0].n();
    let mut header = vec!["t".to_string()];
    for var in ["q", "p"] {
        for i in 0..n {
            header.push(format!("re_{var}{i}"));
            header.push(format!("im_{var}{i}"));
        }
    }
    header.push("spectral_drift".into());
    let rows: Vec<Vec<String>> = traj
        .times
        .iter()
        .zip(&traj.points)
        .zip(&traj.spectral_drift)
        .map(|((t, pt), drift)| {
            let mut row = vec![num(*t)];
            for z in pt.q.iter().chain(&pt.p) {
                row.push(num(z.re));
                row.push(num(z.im));
            }
            row.push(num(*drift));
            row
        })
        .collect();
    out.write_csv("trajectory.csv", &header, &rows)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Degeneration,
    Cm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitParams {
    pub sweep: SweepKind,
    /// Defaults to `Im τ ∈ {5, 10, 20}` or `ħ ∈ {1e-2, 5e-3, 2.5e-3}`.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    pub z: ComplexValue,
    /// Phase point for the degeneration sweep; its lattice is ignored.
    #[serde(default)]
    pub rs: Option<RsSpec>,
    #[serde(default)]
    pub cm: Option<CmSpec>,
    /// Accepted band for the fitted order; `[0.85, 1.15]` for the CM sweep.
    #[serde(default)]
    pub order_band: Option<[f64; 2]>,
    /// Monotonicity is checked for parameter values at least this large;
    /// `5` for the degeneration sweep.
    #[serde(default)]
    pub monotone_from: Option<f64>,
}

#[derive(Serialize)]
struct LimitSummary {
    parameter: &'static str,
    values: Vec<f64>,
    residuals: Vec<f64>,
    failures: Vec<(f64, String)>,
    /// `null` when fewer than two points have a usable residual.
    fitted_order: Option<f64>,
}

/// Changes smaller than this are treated as rounding when checking monotonicity.
pub const MONOTONE_NOISE_FLOOR: f64 = 1e-13;

pub fn limit(cfg: &ExperimentConfig, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    let p: LimitParams = cfg.params()?;
    let (values, order_band, monotone_from) = match p.sweep {
        SweepKind::Degeneration => (
            p.values.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0]),
            p.order_band,
            p.monotone_from.or(Some(5.0)),
        ),
        SweepKind::Cm => (
            p.values.clone().unwrap_or_else(|| vec![1e-2, 5e-3, 2.5e-3]),
            p.order_band.or(Some([0.85, 1.15])),
            p.monotone_from,
        ),
    };
    if values.is_empty() {
        return Err(CliError::ConfigInvalid("params.values: need at least one point".into()));
    }
    let z: C64 = p.z.into();
    let sweep: LimitSweep = match p.sweep {
        SweepKind::Degeneration => {
            let spec = p
                .rs
                .as_ref()
                .ok_or_else(|| CliError::ConfigInvalid("params.rs is required for the degeneration sweep".into()))?;
            let conf = spec.build()?;
            if values.iter().any(|&t| !(t > 0.0)) {
                return Err(CliError::ConfigInvalid("params.values: Im tau must be positive".into()));
            }
            degeneration_sweep(&conf, z, &values).map_err(invalid("params.values"))?
        }
        SweepKind::Cm => {
            let spec =
                p.cm.as_ref()
                    .ok_or_else(|| CliError::ConfigInvalid("params.cm is required for the CM sweep".into()))?;
            cm_limit_sweep(&spec.build()?, z, &values).map_err(invalid("params.values"))?
        }
    };
    let scale = report.tol_scale;
    report.checks.push(CheckRow::judge(
        "points_evaluated",
        sweep.failures.len() as f64,
        0.5 * scale,
        (!sweep.failures.is_empty()).then(|| format!("{} point(s) failed", sweep.failures.len())),
    ));
    if let (Some([lo, hi]), Some(order)) = (order_band, sweep.fitted_order) {
        let centre = (lo + hi) / 2.0;
        report.checks.push(CheckRow::judge(
            "fitted_order",
            (order - centre).abs(),
            (hi - lo) / 2.0 * scale,
            Some(format!("order {order}")),
        ));
    }
    if let Some(from) = monotone_from {
        let tail: Vec<f64> = sweep
            .values
            .iter()
            .zip(&sweep.errors)
            .filter(|(v, _)| **v >= from)
            .map(|(_, e)| *e)
            .collect();
        let increase = tail.windows(2).fold(0.0, |m: f64, w| m.max(w[1] - w[0]));
        let increase = if tail.iter().all(|e| e.is_finite()) {
            increase
        } else {
            f64::NAN
        };
        report.checks.push(CheckRow::judge(
            "monotone_residual",
            increase,
            MONOTONE_NOISE_FLOOR * scale,
            None,
        ));
    }
    let parameter = match sweep.parameter {
        LimitParameter::ImTau => "im_tau",
        LimitParameter::Hbar => "hbar",
    };
    let header = vec!["parameter".to_string(), "residual".to_string()];
    let rows: Vec<Vec<String>> = sweep
        .values
        .iter()
        .zip(&sweep.errors)
        .map(|(v, e)| vec![num(*v), num(*e)])
        .collect();
    out.write_csv("sweep.csv", &header, &rows)?;
    let summary = LimitSummary {
        parameter,
        values: sweep.values.clone(),
        residuals: sweep.errors.clone(),
        failures: sweep.failures.clone(),
        fitted_order: sweep.fitted_order,
    };
    out.write_json("sweep.json", &summary)
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceKind {
    RationalCm,
    TrigCm,
    RationalRs,
    TrigRs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceParams {
    pub kind: ReduceKind,
    /// Positions (CM kinds) or rapidities (RS kinds).
    pub positions: Vec<ComplexValue>,
    /// Momenta for the rational CM kind.
    #[serde(default)]
    pub momenta: Option<Vec<ComplexValue>>,
    /// Coupling for the orbit `O`; ignored by the trig RS kind.
    #[serde(default)]
    pub g: Option<ComplexValue>,
    /// Rank-one orbit `I + uvᵀ` for the trig RS kind.
    #[serde(default)]
    pub u: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub v: Option<Vec<ComplexValue>>,
    /// Free diagonal (RS kinds) or gauge (trig CM).
    #[serde(default)]
    pub diagonal: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub dualize: bool,
}

#[derive(Serialize)]
struct ReduceSummary {
    kind: ReduceKind,
    n: usize,
    residual: f64,
    positions: Vec<JsonComplex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_positions: Option<Vec<JsonComplex>>,
}

fn sorted(mut v: Vec<C64>) -> Vec<C64> {
    linalg::sort_lexicographic(&mut v);
    v
}

pub fn reduce(cfg: &ExperimentConfig, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    let p: ReduceParams = cfg.params()?;
    let x = complexes(&p.positions);
    let n = x.len();
    let required = |v: &Option<Vec<ComplexValue>>, name: &str| -> Result<Vec<C64>, CliError> {
        let v = v
            .as_ref()
            .ok_or_else(|| CliError::ConfigInvalid(format!("params.{name} is required for kind {:?}", p.kind)))?;
        if v.len() != n {
            return Err(CliError::ConfigInvalid(format!(
                "params.{name}: expected {n} entries, got {}",
                v.len()
            )));
        }
        Ok(complexes(v))
    };
    let coupling = || -> Result<OrbitSpec, CliError> {
        let g =
            p.g.ok_or_else(|| CliError::ConfigInvalid(format!("params.g is required for kind {:?}", p.kind)))?;
        Ok(OrbitSpec::coupling(g.into()))
    };
    let (pair, orbit): (ReductionPair, OrbitSpec) = match p.kind {
        ReduceKind::RationalCm => {
            let orbit = coupling()?;
            let pair = reductions::solve_rational_cm(&x, &required(&p.momenta, "momenta")?, &orbit);
            (pair.map_err(invalid("reduce"))?, orbit)
        }
        ReduceKind::TrigCm => {
            let orbit = coupling()?;
            let pair = reductions::solve_trig_cm(&x, &orbit, &required(&p.diagonal, "diagonal")?);
            (pair.map_err(invalid("reduce"))?, orbit)
        }
        ReduceKind::RationalRs => {
            let orbit = coupling()?;
            let pair = reductions::solve_rational_rs(&x, &orbit, &required(&p.diagonal, "diagonal")?);
            (pair.map_err(invalid("reduce"))?, orbit)
        }
        ReduceKind::TrigRs => {
            let orbit = OrbitSpec::rank_one(required(&p.u, "u")?, required(&p.v, "v")?);
            let pair = reductions::solve_trig_rs(&x, &orbit, &required(&p.diagonal, "diagonal")?);
            (pair.map_err(invalid("reduce"))?, orbit)
        }
    };
    let scale = report.tol_scale;
    let residual = match pair.kind {
        ReductionKind::TrigCM => pair.orbit_residual(&orbit),
        _ => pair.residual(&orbit),
    };
    let residual = residual.unwrap_or(f64::NAN);
    report
        .checks
        .push(CheckRow::judge("moment_map_residual", residual, 1e-10 * scale, None));
    let mut dual_positions = None;
    if p.dualize {
        let round_trip = reductions::dualize(&pair).and_then(|d| {
            let back = reductions::dualize(&d)?;
            Ok((d, back))
        });
        match round_trip {
            Ok((dual, back)) => {
                let original = sorted(pair.positions());
                let gap = original
                    .iter()
                    .zip(back.positions())
                    .fold(0.0, |m: f64, (a, b)| m.max((a - b).norm()));
                report
                    .checks
                    .push(CheckRow::judge("dualize_involution", gap, 1e-8 * scale, None));
                let (header, rows) = matrix_rows(&dual.x);
                out.write_csv("dual_x.csv", &header, &rows)?;
                let (header, rows) = matrix_rows(&dual.y);
                out.write_csv("dual_y.csv", &header, &rows)?;
                dual_positions = Some(json_complexes(&dual.positions()));
            }
            Err(e) => report
                .checks
                .push(CheckRow::failed("dualize_involution", 1e-8 * scale, e.to_string())),
        }
    }
    let (header, rows) = matrix_rows(&pair.x);
    out.write_csv("x.csv", &header, &rows)?;
    let (header, rows) = matrix_rows(&pair.y);
    out.write_csv("y.csv", &header, &rows)?;
    let summary = ReduceSummary {
        kind: p.kind,
        n,
        residual,
        positions: json_complexes(&pair.positions()),
        dual_positions,
    };
    out.write_json("reduce.json", &summary)
}
