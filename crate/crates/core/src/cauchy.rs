//! Elliptic Cauchy matrices with spectral parameter, their Frobenius
//! determinant and minors, and the shifted inverse product `F⁻¹(z)F(z+u)`.

use crate::elliptic::{sigma, Lattice};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};

/// Minimum distance from the lattice for differences of positions.
pub const DISTINCTNESS: f64 = 1e-6;

/// Entry formula of the Cauchy matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EntryConvention {
    /// `σ(q_i − r_j + λ) / (σ(λ) σ(q_i − r_j))`; `q∞` is unused. Its
    /// determinant is the closed form returned by [`frobenius_determinant`].
    #[default]
    Frobenius,
    /// `σ(q_i − r_j − λ) / (σ(λ − q∞) σ(q_i − r_j − q∞))`. Equals minus the
    /// Frobenius entry at `r_j + q∞` and `q∞ − λ`.
    Displayed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauchyMatrixSpec {
    pub qs: Vec<C64>,
    pub rs: Vec<C64>,
    pub q_inf: C64,
    pub lat: Lattice,
}

impl CauchyMatrixSpec {
    pub fn new(qs: Vec<C64>, rs: Vec<C64>, q_inf: C64, lat: Lattice) -> Result<Self> {
        let spec = Self { qs, rs, q_inf, lat };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.qs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.qs.is_empty() || self.qs.len() != self.rs.len() {
            return Err(Error::InvalidParameter(format!(
                "need equal nonzero lengths, got {} and {}",
                self.qs.len(),
                self.rs.len()
            )));
        }
        for (i, q) in self.qs.iter().enumerate() {
            for (j, r) in self.rs.iter().enumerate() {
                if self.lat.distance_to_lattice(q - r) < DISTINCTNESS {
                    return Err(Error::DegenerateConfiguration(format!("q_{i} coincides with r_{j}")));
                }
            }
        }
        Ok(())
    }

    /// Parameters `(q, r, λ)` and sign such that this convention equals
    /// `sign · Frobenius(q, r, λ)` entrywise.
    fn frobenius_form(&self, lambda: C64, convention: EntryConvention) -> (Vec<C64>, C64, f64) {
        match convention {
            EntryConvention::Frobenius => (self.rs.clone(), lambda, 1.0),
            EntryConvention::Displayed => (
                self.rs.iter().map(|r| r + self.q_inf).collect(),
                self.q_inf - lambda,
                -1.0,
            ),
        }
    }
}

/// An evaluated matrix together with the spectral point it was built at.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMatrix {
    pub entries: CMatrix,
    pub lambda: C64,
}

impl SpectralMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

pub fn build_elliptic_cauchy(
    spec: &CauchyMatrixSpec,
    lambda: C64,
    convention: EntryConvention,
) -> Result<SpectralMatrix> {
    let lat = &spec.lat;
    let n = spec.n();
    let (num_shift, den_lambda, den_shift) = match convention {
        EntryConvention::Frobenius => (lambda, lambda, C64::new(0.0, 0.0)),
        EntryConvention::Displayed => (-lambda, lambda - spec.q_inf, -spec.q_inf),
    };
    lat.check_pole(den_lambda)?;
    let s_lambda = sigma(den_lambda, lat);
    let mut entries = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = spec.qs[i] - spec.rs[j];
            lat.check_pole(d + den_shift)?;
            entries[(i, j)] = sigma(d + num_shift, lat) / (s_lambda * sigma(d + den_shift, lat));
        }
    }
    Ok(SpectralMatrix { entries, lambda })
}

fn closed_form(qs: &[C64], rs: &[C64], lambda: C64, lat: &Lattice) -> Result<C64> {
    let n = qs.len();
    for i in 0..n {
        for j in 0..n {
            if lat.distance_to_lattice(qs[i] - rs[j]) < DISTINCTNESS {
                return Err(Error::DegenerateConfiguration(format!("q_{i} coincides with r_{j}")));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if lat.distance_to_lattice(qs[i] - qs[j]) < DISTINCTNESS
                || lat.distance_to_lattice(rs[i] - rs[j]) < DISTINCTNESS
            {
                return Ok(C64::new(0.0, 0.0));
            }
        }
    }
    lat.check_pole(lambda)?;
    let shift: C64 = qs.iter().zip(rs).map(|(q, r)| q - r).sum();
    let mut value = sigma(lambda + shift, lat) / sigma(lambda, lat);
    for i in 0..n {
        for j in i + 1..n {
            value *= sigma(qs[i] - qs[j], lat) * sigma(rs[j] - rs[i], lat);
        }
    }
    for q in qs {
        for r in rs {
            value /= sigma(q - r, lat);
        }
    }
    Ok(value)
}

/// Closed-form determinant of [`build_elliptic_cauchy`].
pub fn frobenius_determinant(spec: &CauchyMatrixSpec, lambda: C64, convention: EntryConvention) -> Result<C64> {
    let (rs, lam, sign) = spec.frobenius_form(lambda, convention);
    let value = closed_form(&spec.qs, &rs, lam, &spec.lat)?;
    Ok(value * sign.powi(spec.n() as i32))
}

/// Closed-form determinant of the matrix with row `k` and column `l`
/// (zero-based) deleted. It is the Frobenius determinant of the reduced
/// index sets `q \ q_k`, `r \ r_l`.
pub fn minor_determinant(
    spec: &CauchyMatrixSpec,
    lambda: C64,
    k: usize,
    l: usize,
    convention: EntryConvention,
) -> Result<C64> {
    let n = spec.n();
    if k >= n || l >= n {
        return Err(Error::InvalidParameter(format!(
            "minor ({k}, {l}) out of range for n = {n}"
        )));
    }
    let (rs, lam, sign) = spec.frobenius_form(lambda, convention);
    let qs: Vec<C64> = spec
        .qs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, q)| *q)
        .collect();
    let rs: Vec<C64> = rs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != l)
        .map(|(_, r)| *r)
        .collect();
    if qs.is_empty() {
        spec.lat.check_pole(lam)?;
        return Ok(C64::new(1.0, 0.0));
    }
    let value = closed_form(&qs, &rs, lam, &spec.lat)?;
    Ok(value * sign.powi(n as i32 - 1))
}

/// Classical Cauchy determinant `det[1/(x_i − y_j)]`.
pub fn classical_cauchy_determinant(xs: &[C64], ys: &[C64]) -> C64 {
    let n = xs.len();
    let mut value = C64::new(1.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            value *= (xs[j] - xs[i]) * (ys[i] - ys[j]);
        }
    }
    for x in xs {
        for y in ys {
            value /= x - y;
        }
    }
    value
}

/// `F⁻¹(z)·F(z+u)` by LU solve.
pub fn shifted_inverse_product<F>(f: F, z: C64, u: C64) -> Result<SpectralMatrix>
where
    F: Fn(C64) -> Result<CMatrix>,
{
    let a = f(z)?;
    let b = f(z + u)?;
    Ok(SpectralMatrix {
        entries: linalg::solve(&a, &b)?,
        lambda: z,
    })
}

/// `F⁻¹(z)·F(z+u)` by Cramer's rule: entry `(i, j)` is the determinant of
/// `F(z)` with column `i` replaced by column `j` of `F(z+u)`, over `det F(z)`.
pub fn shifted_inverse_product_det_ratio<F>(f: F, z: C64, u: C64) -> Result<SpectralMatrix>
where
    F: Fn(C64) -> Result<CMatrix>,
{
    let a = f(z)?;
    let b = f(z + u)?;
    let d = linalg::check_nonsingular(&a)?;
    let n = a.nrows();
    let mut entries = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut m = a.clone();
            m.set_column(i, &b.column(j));
            entries[(i, j)] = linalg::det(&m) / d;
        }
    }
    Ok(SpectralMatrix { entries, lambda: z })
}
