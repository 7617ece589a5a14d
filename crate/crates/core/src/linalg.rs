//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

pub type CMatrix = DMatrix<C64>;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Determinant by partial-pivot LU.
pub fn det(m: &CMatrix) -> C64 {
    if m.nrows() == 0 {
        return one();
    }
    m.clone().lu().determinant()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|det| < 1e-12·(max |entry|)ⁿ` counts as singular.
pub fn singularity_threshold(m: &CMatrix) -> f64 {
    1e-12 * max_abs(m).powi(m.nrows() as i32)
}

pub fn check_nonsingular(m: &CMatrix) -> Result<C64> {
    let d = det(m);
    let threshold = singularity_threshold(m);
    if !(d.norm() >= threshold) || d.norm() == 0.0 {
        return Err(Error::SingularMatrix {
            det: d.norm(),
            threshold,
        });
    }
    Ok(d)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    check_nonsingular(m)?;
    m.clone().lu().try_inverse().ok_or(Error::SingularMatrix {
        det: 0.0,
        threshold: singularity_threshold(m),
    })
}

/// Solves `A X = B`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_nonsingular(a)?;
    a.clone().lu().solve(b).ok_or(Error::SingularMatrix {
        det: 0.0,
        threshold: singularity_threshold(a),
    })
}

pub fn diag(v: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let (_, t) = m.clone().schur().unpack();
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// Eigenvalues and unit-norm eigenvectors (as columns) via back-substitution
/// on the Schur form. Fails when two eigenvalues are closer than `sep`
/// relative to the spectral scale.
pub fn eigen_decomposition(m: &CMatrix, sep: f64) -> Result<(Vec<C64>, CMatrix)> {
    let n = m.nrows();
    let (q, t) = m.clone().schur().unpack();
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.norm()));
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() < sep * scale {
                return Err(Error::RepeatedEigenvalues {
                    a: values[i],
                    b: values[j],
                });
            }
        }
    }
    let mut vecs = CMatrix::zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        let mut x = vec![zero(); n];
        x[k] = one();
        for i in (0..k).rev() {
            let mut s = zero();
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            x[i] = -s / (t[(i, i)] - lam);
        }
        let col = &q * nalgebra::DVector::from_vec(x);
        let norm = col.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonDiagonalizable(format!("eigenvector {k} is degenerate")));
        }
        vecs.set_column(k, &(col / C64::new(norm, 0.0)));
    }
    Ok((values, vecs))
}

/// Greedy nearest-neighbour pairing; returns the largest paired distance.
pub fn matched_deviation(reference: &[C64], current: &[C64]) -> f64 {
    let mut pairs = Vec::with_capacity(reference.len() * current.len());
    for (i, a) in reference.iter().enumerate() {
        for (j, b) in current.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_ref = vec![false; reference.len()];
    let mut used_cur = vec![false; current.len()];
    let mut worst = 0.0f64;
    for (d, i, j) in pairs {
        if !used_ref[i] && !used_cur[j] {
            used_ref[i] = true;
            used_cur[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Sorts complex numbers by (Re, Im).
pub fn sort_lexicographic(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> CMatrix {
        CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.5),
                c(-0.3, 0.2),
                c(0.7, 0.0),
                c(0.2, -1.0),
                c(2.0, 0.1),
                c(0.0, 0.4),
                c(0.5, 0.5),
                c(-1.2, 0.3),
                c(0.3, -0.6),
            ],
        )
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        let m = sample();
        let (vals, vecs) = eigen_decomposition(&m, 1e-10).unwrap();
        for k in 0..3 {
            let v = vecs.column(k).into_owned();
            let r = &m * &v - &v * vals[k];
            assert!(r.norm() < 1e-12);
        }
        let tr: C64 = vals.iter().sum();
        assert!((tr - m.trace()).norm() < 1e-12);
        let pr: C64 = vals.iter().product();
        assert!((pr - det(&m)).norm() < 1e-12);
    }

    #[test]
    fn singular_detection() {
        let mut m = sample();
        let row = m.row(0).into_owned();
        m.set_row(2, &row);
        assert!(matches!(inverse(&m), Err(Error::SingularMatrix { .. })));
        assert!(inverse(&sample()).is_ok());
    }

    #[test]
    fn repeated_eigenvalues_rejected() {
        let m = diag(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            eigen_decomposition(&m, 1e-10),
            Err(Error::RepeatedEigenvalues { .. })
        ));
    }

    #[test]
    fn greedy_matching_ignores_order() {
        let a = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 1.0)];
        let b = [c(3.0, 1.0), c(1.0, 1e-9), c(2.0, 0.0)];
        assert!((matched_deviation(&a, &b) - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn empty_determinant_is_one() {
        assert_eq!(det(&CMatrix::zeros(0, 0)), one());
    }
}
