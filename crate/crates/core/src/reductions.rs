//! Moment-map equations on diagonal gauge slices and the duality swap.
//!
//! With `O = g(𝟙𝟙ᵀ − I)` and `O' = I + uvᵀ` the four equations are
//!
//! ```text
//! rational CM   [X, Y]       = O      X = diag(q)
//! trig CM       X Y X⁻¹ − Y  ∈ orbit(O)   Y = diag(q)
//! rational RS   X Y X⁻¹ − Y  = O      X = diag(e^θ)
//! trig RS       X Y X⁻¹ Y⁻¹  = O'     X = diag(e^θ)
//! ```

use nalgebra::DVector;

use crate::cauchy::DISTINCTNESS;
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionKind {
    RationalCM,
    TrigCM,
    RationalRS,
    TrigRS,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionPair {
    pub x: CMatrix,
    pub y: CMatrix,
    pub kind: ReductionKind,
}

/// Coupling `g` of `O` and the rank-one data `u`, `v` of `O'`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSpec {
    pub g: C64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

impl OrbitSpec {
    pub fn coupling(g: C64) -> Self {
        Self {
            g,
            u: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn rank_one(u: Vec<C64>, v: Vec<C64>) -> Self {
        Self {
            g: C64::new(0.0, 0.0),
            u,
            v,
        }
    }

    /// `g(𝟙𝟙ᵀ − I)`.
    pub fn o(&self, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(0.0, 0.0) } else { self.g })
    }

    /// `I + uvᵀ`.
    pub fn o_prime(&self) -> CMatrix {
        let n = self.u.len();
        let u = DVector::from_column_slice(&self.u);
        let v = DVector::from_column_slice(&self.v);
        CMatrix::identity(n, n) + u * v.transpose()
    }

    /// `vᵀu`.
    pub fn pairing(&self) -> C64 {
        self.u.iter().zip(&self.v).map(|(a, b)| a * b).sum()
    }
}

impl ReductionPair {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// The member that is diagonal on the slice (`Y` for trig CM, `X`
    /// otherwise).
    pub fn diagonal_member(&self) -> &CMatrix {
        match self.kind {
            ReductionKind::TrigCM => &self.y,
            _ => &self.x,
        }
    }

    /// Diagonal of [`Self::diagonal_member`].
    pub fn positions(&self) -> Vec<C64> {
        self.diagonal_member().diagonal().iter().copied().collect()
    }

    /// `[X, Y]`, `XYX⁻¹ − Y` or `XYX⁻¹Y⁻¹` according to the kind.
    pub fn moment_map(&self) -> Result<CMatrix> {
        let (x, y) = (&self.x, &self.y);
        Ok(match self.kind {
            ReductionKind::RationalCM => x * y - y * x,
            ReductionKind::TrigCM | ReductionKind::RationalRS => x * y * linalg::inverse(x)? - y,
            ReductionKind::TrigRS => x * y * linalg::inverse(x)? * linalg::inverse(y)?,
        })
    }

    /// Size-normalized Frobenius distance of the moment map from its target
    /// (`O` for the additive kinds, `O'` for trig RS). For trig CM, whose
    /// target is only fixed up to the orbit, this is [`Self::orbit_residual`].
    pub fn residual(&self, orbit: &OrbitSpec) -> Result<f64> {
        let n = self.n();
        let target = match self.kind {
            ReductionKind::TrigCM => return self.orbit_residual(orbit),
            ReductionKind::TrigRS => orbit.o_prime(),
            _ => orbit.o(n),
        };
        Ok(linalg::frobenius(&(self.moment_map()? - target)) / n as f64)
    }

    /// Distance of the moment map from the conjugation orbit of its target.
    /// Additive kinds: `μ + gI` must have rank one and `tr μ = 0`. Trig RS:
    /// `M − I` must have rank one and `det M` must equal `det O'` or its
    /// inverse (duality inverts the moment map).
    pub fn orbit_residual(&self, orbit: &OrbitSpec) -> Result<f64> {
        let n = self.n();
        let m = self.moment_map()?;
        Ok(match self.kind {
            ReductionKind::TrigRS => {
                let shifted = &m - CMatrix::identity(n, n);
                let d = linalg::det(&m);
                let target = C64::new(1.0, 0.0) + orbit.pairing();
                let det_gap = (d - target).norm().min((d * target - 1.0).norm());
                rank_one_defect(&shifted).max(det_gap)
            }
            _ => {
                let shifted = &m + CMatrix::identity(n, n) * orbit.g;
                rank_one_defect(&shifted).max(m.trace().norm() / n as f64)
            }
        })
    }
}

/// Largest 2×2 minor relative to the squared largest entry.
pub fn rank_one_defect(m: &CMatrix) -> f64 {
    let scale = linalg::max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let (r, c) = m.shape();
    let mut worst = 0.0f64;
    for i in 0..r {
        for k in i + 1..r {
            for j in 0..c {
                for l in j + 1..c {
                    let minor = m[(i, j)] * m[(k, l)] - m[(i, l)] * m[(k, j)];
                    worst = worst.max(minor.norm());
                }
            }
        }
    }
    worst / (scale * scale)
}

fn check_distinct(values: &[C64], what: &str) -> Result<()> {
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).norm() <= DISTINCTNESS {
                return Err(Error::DegenerateConfiguration(format!("{what} {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

fn check_len(len: usize, n: usize, what: &str) -> Result<()> {
    if len != n {
        return Err(Error::InvalidParameter(format!(
            "{what} has length {len}, expected {n}"
        )));
    }
    Ok(())
}

/// `X = diag(q)`, `Y_ii = p_i`, `Y_ij = g/(q_i − q_j)`.
pub fn solve_rational_cm(q: &[C64], p: &[C64], orbit: &OrbitSpec) -> Result<ReductionPair> {
    let n = q.len();
    check_len(p.len(), n, "momentum vector")?;
    check_distinct(q, "positions")?;
    let y = CMatrix::from_fn(n, n, |i, j| if i == j { p[i] } else { orbit.g * (1.0 / (q[i] - q[j])) });
    Ok(ReductionPair {
        x: linalg::diag(q),
        y,
        kind: ReductionKind::RationalCM,
    })
}

/// `X = diag(e^θ)`, `Y_ii = diag_free_i`, `Y_ij = g/(e^{θ_i−θ_j} − 1)`.
pub fn solve_rational_rs(theta: &[C64], orbit: &OrbitSpec, diag_free: &[C64]) -> Result<ReductionPair> {
    let n = theta.len();
    check_len(diag_free.len(), n, "diagonal data")?;
    let e: Vec<C64> = theta.iter().map(|t| t.exp()).collect();
    check_distinct(&e, "exponentials")?;
    let y = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag_free[i]
        } else {
            orbit.g / ((theta[i] - theta[j]).exp() - 1.0)
        }
    });
    Ok(ReductionPair {
        x: linalg::diag(&e),
        y,
        kind: ReductionKind::RationalRS,
    })
}

/// Relative residual above which a least-squares solve counts as
/// inconsistent.
const CONSISTENCY: f64 = 1e-9;

/// `Y = diag(q)` and `X` with `X_jj = gauge_j` solving
/// `XY − YX = g(𝟙wᵀ − I)X` for some `w`. The weights `w` are fixed by the
/// requirement that a nonzero `X` exists; they always satisfy `Σw = n`, which
/// puts `g(𝟙wᵀ − I)` in the orbit of `O`. `X` then comes from a dense linear
/// solve in its `n²` entries.
pub fn solve_trig_cm(q: &[C64], orbit: &OrbitSpec, gauge: &[C64]) -> Result<ReductionPair> {
    let n = q.len();
    check_len(gauge.len(), n, "gauge")?;
    check_distinct(q, "positions")?;
    if gauge.iter().any(|c| c.norm() == 0.0) {
        return Err(Error::InvalidParameter("gauge entries must be nonzero".into()));
    }
    let g = orbit.g;
    let pair = |x: CMatrix| ReductionPair {
        x,
        y: linalg::diag(q),
        kind: ReductionKind::TrigCM,
    };
    if g.norm() == 0.0 {
        return Ok(pair(linalg::diag(gauge)));
    }
    let w = orbit_weights(q, g)?;

    let idx = |i: usize, j: usize| i + n * j;
    let mut a = CMatrix::zeros(n * n + n, n * n);
    let mut b = DVector::<C64>::zeros(n * n + n);
    for j in 0..n {
        for i in 0..n {
            let row = idx(i, j);
            a[(row, idx(i, j))] += q[j] - q[i] + g;
            for k in 0..n {
                a[(row, idx(k, j))] -= g * w[k];
            }
        }
        a[(n * n + j, idx(j, j))] = C64::new(1.0, 0.0);
        b[n * n + j] = gauge[j];
    }
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-13)
        .map_err(|e| Error::NoSolution(e.to_string()))?;
    let miss = (&a * &sol - &b).norm() / b.norm();
    if !(miss <= CONSISTENCY) {
        return Err(Error::NoSolution(format!(
            "linear system inconsistent (relative residual {miss:e})"
        )));
    }
    let x = CMatrix::from_fn(n, n, |i, j| sol[idx(i, j)]);
    linalg::check_nonsingular(&x).map_err(|_| Error::NoSolution("solution X is singular".into()))?;
    Ok(pair(x))
}

/// Solves `Σ_i w_i/(q_j − q_i + g) = 1/g` for every `j`.
fn orbit_weights(q: &[C64], g: C64) -> Result<Vec<C64>> {
    let n = q.len();
    let scale = q.iter().fold(g.norm(), |acc, v| acc.max(v.norm()));
    for j in 0..n {
        for i in 0..n {
            if (q[j] - q[i] + g).norm() <= 1e-12 * scale {
                return Err(Error::NoSolution(format!(
                    "resonant configuration: q_{j} − q_{i} + g vanishes"
                )));
            }
        }
    }
    let c = CMatrix::from_fn(n, n, |j, i| 1.0 / (q[j] - q[i] + g));
    let rhs = CMatrix::from_element(n, 1, 1.0 / g);
    let w = linalg::solve(&c, &rhs).map_err(|_| Error::NoSolution("orbit weights are undetermined".into()))?;
    Ok(w.iter().copied().collect())
}

/// `X = diag(e^θ)` and `Y` with `XYX⁻¹Y⁻¹ = I + uvᵀ`.
///
/// Taking determinants forces `vᵀu = 0`, and with `X` diagonal the rank-one
/// relation `(e^{θ_i−θ_j} − 1)Y_ij = u_i(vᵀY)_j` closes only when `u` and `v`
/// have disjoint supports. Then `Y = diag(y) + N` with
/// `N_ij = u_i v_j y_j/(e^{θ_i−θ_j} − 1)`, `y = diag_free`.
pub fn solve_trig_rs(theta: &[C64], orbit: &OrbitSpec, diag_free: &[C64]) -> Result<ReductionPair> {
    let n = theta.len();
    check_len(diag_free.len(), n, "diagonal data")?;
    check_len(orbit.u.len(), n, "u")?;
    check_len(orbit.v.len(), n, "v")?;
    let e: Vec<C64> = theta.iter().map(|t| t.exp()).collect();
    check_distinct(&e, "exponentials")?;
    let (u, v) = (&orbit.u, &orbit.v);
    let scale = u.iter().chain(v).fold(0.0f64, |a, b| a.max(b.norm())).max(1.0);
    if (C64::new(1.0, 0.0) + orbit.pairing()).norm() <= 1e-12 {
        return Err(Error::InvalidParameter("1 + vᵀu vanishes".into()));
    }
    if orbit.pairing().norm() > 1e-12 * scale * scale {
        return Err(Error::NoSolution(format!(
            "det(XYX⁻¹Y⁻¹) = 1 but 1 + vᵀu = {}",
            C64::new(1.0, 0.0) + orbit.pairing()
        )));
    }
    let tiny = 1e-14 * scale;
    if let Some(i) = (0..n).find(|&i| u[i].norm() > tiny && v[i].norm() > tiny) {
        return Err(Error::NoSolution(format!("u and v overlap at index {i}")));
    }
    if diag_free.iter().any(|y| y.norm() == 0.0) {
        return Err(Error::SingularY);
    }
    let y = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag_free[i]
        } else if u[i].norm() > tiny && u[j].norm() <= tiny {
            u[i] * v[j] * diag_free[j] / ((theta[i] - theta[j]).exp() - 1.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(ReductionPair {
        x: linalg::diag(&e),
        y,
        kind: ReductionKind::TrigRS,
    })
}

/// Relative eigenvalue separation below which dualization refuses.
pub const EIGEN_SEPARATION: f64 = 1e-9;

/// Eigen-decomposition sorted by (Re, Im) with columns scaled so that
/// `S⁻¹𝟙 = 𝟙`, which keeps `O`-shaped moment maps in the same shape.
fn sorted_eigenbasis(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = m.nrows();
    let (values, vecs) = linalg::eigen_decomposition(m, EIGEN_SEPARATION)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let sorted: Vec<C64> = order.iter().map(|&k| values[k]).collect();
    let mut s = CMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    let ones = CMatrix::from_element(n, 1, C64::new(1.0, 0.0));
    let c = linalg::solve(&s, &ones).map_err(|e| Error::NonDiagonalizable(e.to_string()))?;
    let cmax = c.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    for j in 0..n {
        if c[j].norm() <= 1e-12 * cmax {
            // 𝟙 has no component along this eigenvector; keep unit norm
            continue;
        }
        for i in 0..n {
            s[(i, j)] *= c[j];
        }
    }
    Ok((sorted, s))
}

/// Conjugates the pair so that its non-diagonal member becomes diagonal.
///
/// * rational CM: `(Λ, (S⁻¹XS)ᵀ)` where `Y = SΛS⁻¹`, again a rational CM pair
///   with `[X', Y'] = O`;
/// * trig CM ↔ rational RS: conjugation by the eigenbasis of the non-diagonal
///   member, swapping the kind;
/// * trig RS: `(Λ, S⁻¹XS)`, whose moment map is the inverse of the
///   conjugated original.
pub fn dualize(pair: &ReductionPair) -> Result<ReductionPair> {
    let conj = |s: &CMatrix, m: &CMatrix| -> Result<CMatrix> { linalg::solve(s, &(m * s)) };
    match pair.kind {
        ReductionKind::RationalCM => {
            let (lam, s) = sorted_eigenbasis(&pair.y)?;
            Ok(ReductionPair {
                x: linalg::diag(&lam),
                y: conj(&s, &pair.x)?.transpose(),
                kind: ReductionKind::RationalCM,
            })
        }
        ReductionKind::TrigCM => {
            let (lam, s) = sorted_eigenbasis(&pair.x)?;
            Ok(ReductionPair {
                x: linalg::diag(&lam),
                y: conj(&s, &pair.y)?,
                kind: ReductionKind::RationalRS,
            })
        }
        ReductionKind::RationalRS => {
            let (lam, s) = sorted_eigenbasis(&pair.y)?;
            Ok(ReductionPair {
                x: conj(&s, &pair.x)?,
                y: linalg::diag(&lam),
                kind: ReductionKind::TrigCM,
            })
        }
        ReductionKind::TrigRS => {
            let (lam, s) = sorted_eigenbasis(&pair.y)?;
            Ok(ReductionPair {
                x: linalg::diag(&lam),
                y: conj(&s, &pair.x)?,
                kind: ReductionKind::TrigRS,
            })
        }
    }
}
