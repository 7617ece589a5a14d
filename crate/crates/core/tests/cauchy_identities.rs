use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rslax_core::cauchy::{
    build_elliptic_cauchy, classical_cauchy_determinant, frobenius_determinant, minor_determinant,
    shifted_inverse_product, shifted_inverse_product_det_ratio, CauchyMatrixSpec, EntryConvention,
};
use rslax_core::elliptic::{theta_char, ThetaCharacteristic};
use rslax_core::linalg::{self, CMatrix};
use rslax_core::Lattice;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const CONVENTIONS: [EntryConvention; 2] = [EntryConvention::Frobenius, EntryConvention::Displayed];

/// `n` points spread along the cell diagonal with jitter, so pairwise
/// separations stay of order `1/n`.
fn spread(n: usize, offset: f64, jitter: &[(f64, f64)]) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let t = (i as f64 + offset) / n as f64;
            c(
                0.9 * t - 0.45 + 0.2 * jitter[i].0 / n as f64,
                0.6 * t - 0.3 + 0.2 * jitter[i].1 / n as f64,
            )
        })
        .collect()
}

prop_compose! {
    fn cauchy_case(max_n: usize)(n in 1..=max_n)(
        n in Just(n),
        jq in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n),
        jr in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n),
        tau_re in -0.4..0.4f64,
        tau_im in 0.7..1.5f64,
        lam in (0.05..0.4f64, 0.05..0.4f64),
        q_inf in (-0.2..0.2f64, -0.2..0.2f64),
    ) -> (CauchyMatrixSpec, C64) {
        let lat = Lattice::from_tau(c(tau_re, tau_im)).unwrap();
        let qs = spread(n, 0.0, &jq);
        let rs = spread(n, 0.5, &jr);
        (CauchyMatrixSpec::new(qs, rs, c(q_inf.0, q_inf.1), lat).unwrap(), c(lam.0, lam.1))
    }
}

fn minor(m: &CMatrix, k: usize, l: usize) -> CMatrix {
    m.clone().remove_row(k).remove_column(l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn determinant_closed_form((spec, lam) in cauchy_case(6)) {
        for conv in CONVENTIONS {
            let direct = linalg::det(&build_elliptic_cauchy(&spec, lam, conv).unwrap().entries);
            let closed = frobenius_determinant(&spec, lam, conv).unwrap();
            prop_assert!((closed - direct).norm() < 1e-8 * direct.norm(), "{conv:?}: {closed} vs {direct}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn minor_closed_form((spec, lam) in cauchy_case(5)) {
        for conv in CONVENTIONS {
            let m = build_elliptic_cauchy(&spec, lam, conv).unwrap().entries;
            for k in 0..spec.n() {
                for l in 0..spec.n() {
                    let direct = linalg::det(&minor(&m, k, l));
                    let closed = minor_determinant(&spec, lam, k, l, conv).unwrap();
                    prop_assert!((closed - direct).norm() < 1e-8 * direct.norm().max(1e-300), "({k},{l})");
                }
            }
        }
    }

    #[test]
    fn cramer_inverse_from_minors((spec, lam) in cauchy_case(5)) {
        let m = build_elliptic_cauchy(&spec, lam, EntryConvention::Frobenius).unwrap().entries;
        let n = spec.n();
        let det = frobenius_determinant(&spec, lam, EntryConvention::Frobenius).unwrap();
        let mut cramer = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                cramer[(i, j)] = sign * minor_determinant(&spec, lam, j, i, EntryConvention::Frobenius).unwrap() / det;
            }
        }
        let inv = linalg::inverse(&m).unwrap();
        prop_assert!(linalg::max_abs(&(&cramer - &inv)) < 1e-8 * linalg::max_abs(&inv));
    }

    #[test]
    fn shifted_product_cocycle(
        n in 1..=4usize,
        a in prop::collection::vec(-0.5..0.5f64, 16),
        b in prop::collection::vec(-0.5..0.5f64, 16),
        z in (0.1..0.4f64, 0.05..0.3f64),
        u in (-0.3..0.3f64, -0.2..0.2f64),
    ) {
        let tau = c(0.1, 1.0);
        let f = |x: C64| -> rslax_core::Result<CMatrix> {
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let ch = ThetaCharacteristic::new(a[i * 4 + j], b[i * 4 + j]);
                    m[(i, j)] = theta_char(ch, x + 0.1 * i as f64 - 0.07 * j as f64, tau)?;
                }
            }
            Ok(m)
        };
        let (z, u) = (c(z.0, z.1), c(u.0, u.1));
        let Ok(forward) = shifted_inverse_product(f, z, u) else { return Ok(()) };
        let Ok(back) = shifted_inverse_product(f, z + u, -u) else { return Ok(()) };
        let prod = &forward.entries * &back.entries;
        prop_assert!(linalg::max_abs(&(prod - CMatrix::identity(n, n))) < 1e-8);
        let cramer = shifted_inverse_product_det_ratio(f, z, u).unwrap();
        prop_assert!(linalg::max_abs(&(&cramer.entries - &forward.entries)) < 1e-9 * linalg::max_abs(&forward.entries).max(1.0));
    }

    #[test]
    fn rational_kind_is_classical_cauchy(
        jq in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
        jr in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
        lam in (0.1..1.0f64, -0.5..0.5f64),
    ) {
        let (qs, rs) = (spread(4, 0.0, &jq), spread(4, 0.5, &jr));
        let lam = c(lam.0, lam.1);
        let spec = CauchyMatrixSpec::new(qs.clone(), rs.clone(), c(0.0, 0.0), Lattice::rational()).unwrap();
        // rational entries are 1/(q−r) + 1/λ, a rank-one update of the classical matrix
        let base = classical_cauchy_determinant(&qs, &rs);
        let cm = CMatrix::from_fn(4, 4, |i, j| 1.0 / (qs[i] - rs[j]));
        prop_assert!((linalg::det(&cm) - base).norm() < 1e-10 * base.norm());
        let cinv = linalg::inverse(&cm).unwrap();
        let ones_sum: C64 = cinv.iter().sum();
        let expected = base * (1.0 + ones_sum / lam);
        let closed = frobenius_determinant(&spec, lam, EntryConvention::Frobenius).unwrap();
        prop_assert!((closed - expected).norm() < 1e-10 * expected.norm().max(1.0), "{closed} vs {expected}");
    }
}
