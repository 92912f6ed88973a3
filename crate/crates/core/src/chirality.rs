//! Em-chirality measures of a far-field matrix and the derivative of the
//! Hilbert-Schmidt relaxation.
//!
//! Blocks pair up as `++` with `--` and `+-` with `-+`. `chi_2` compares the
//! singular value sequences of the paired blocks, `chi_HS` only their norms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farfield::Blocks;
use crate::C64;

/// Block norms below this fraction of the total norm leave the domain where
/// `chi_HS` is differentiable.
pub const TOL_X: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiralityReport {
    pub chi2: f64,
    pub chi_hs: f64,
    pub hs_norm: f64,
    pub j2: f64,
    pub j_hs: f64,
    /// Descending singular values per block in the order `++, +-, -+, --`.
    pub singular_values: [Vec<f64>; 4],
    pub block_norms: [f64; 4],
}

fn descending(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

fn seq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

fn ratio(x: f64, total: f64) -> f64 {
    if total > 0.0 {
        x / total
    } else {
        0.0
    }
}

/// `chi_HS` from the four block norms `++, +-, -+, --`.
pub fn chi_hs_from_norms(n: &[f64; 4]) -> f64 {
    ((n[0] - n[3]).powi(2) + (n[1] - n[2]).powi(2)).sqrt()
}

/// All measures of a square matrix with the helicity block layout.
pub fn measure(t: &DMatrix<C64>) -> Result<ChiralityReport> {
    if t.nrows() != t.ncols() || t.nrows() % 2 != 0 {
        return Err(Error::Dimension { expected: t.nrows() + t.nrows() % 2, got: t.ncols() });
    }
    let b = Blocks::of(t);
    let mut sv: [Vec<f64>; 4] = Default::default();
    for (slot, m) in sv.iter_mut().zip([&b.pp, &b.pm, &b.mp, &b.mm]) {
        *slot = descending(m)?;
    }
    let norms = b.norms();
    let chi2 = (seq_distance(&sv[0], &sv[3]) + seq_distance(&sv[1], &sv[2])).sqrt();
    let chi_hs = chi_hs_from_norms(&norms);
    let hs_norm = t.norm();
    Ok(ChiralityReport {
        chi2,
        chi_hs,
        hs_norm,
        j2: ratio(chi2, hs_norm),
        j_hs: ratio(chi_hs, hs_norm),
        singular_values: sv,
        block_norms: norms,
    })
}

/// Checks that `G` lies in the differentiability domain of `chi_HS`.
pub fn check_domain(g: &DMatrix<C64>) -> Result<[f64; 4]> {
    let norms = Blocks::of(g).norms();
    let total = g.norm();
    let floor = TOL_X * total;
    if !(total > 0.0) || norms.iter().any(|&x| !(x > floor)) {
        return Err(Error::DomainX(format!("block norms {norms:?} against total {total:e}")));
    }
    let chi = chi_hs_from_norms(&norms);
    if !(chi > 0.0) {
        return Err(Error::DomainX("chi_HS vanishes".into()));
    }
    Ok(norms)
}

fn hs_inner_re(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// The matrix `G~` with `(chi_HS)'[G] H = Re <G~, H>_HS`.
pub fn chi_hs_gradient(g: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = check_domain(g)?;
    let chi = chi_hs_from_norms(&n);
    let b = Blocks::of(g);
    // Partner of ++ is --, of +- is -+.
    let scale = |own: f64, partner: f64| C64::from((1.0 - partner / own) / chi);
    let out = Blocks {
        pp: &b.pp * scale(n[0], n[3]),
        pm: &b.pm * scale(n[1], n[2]),
        mp: &b.mp * scale(n[2], n[1]),
        mm: &b.mm * scale(n[3], n[0]),
    };
    Ok(out.reassemble())
}

/// `(chi_HS)'[G] H`.
pub fn chi_hs_derivative(g: &DMatrix<C64>, h: &DMatrix<C64>) -> Result<f64> {
    Ok(hs_inner_re(&chi_hs_gradient(g)?, h))
}

/// The matrix `W` with `J_HS'[T] H = Re <W, H>_HS`.
pub fn j_hs_weight(t: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let g = chi_hs_gradient(t)?;
    let norm = t.norm();
    let chi = chi_hs_from_norms(&Blocks::of(t).norms());
    Ok(g / C64::from(norm) - t * C64::from(chi / norm.powi(3)))
}

/// `J_HS'` along each derivative matrix.
pub fn j_hs_gradient(t: &DMatrix<C64>, derivatives: &[DMatrix<C64>]) -> Result<DVector<f64>> {
    let w = j_hs_weight(t)?;
    Ok(DVector::from_iterator(derivatives.len(), derivatives.iter().map(|d| hs_inner_re(&w, d))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random(q: usize, r: &mut impl Rng) -> DMatrix<C64> {
        DMatrix::from_fn(q, q, |_, _| C64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5))
    }

    fn embed(pp: &DMatrix<C64>, pm: &DMatrix<C64>, mp: &DMatrix<C64>, mm: &DMatrix<C64>) -> DMatrix<C64> {
        Blocks { pp: pp.clone(), pm: pm.clone(), mp: mp.clone(), mm: mm.clone() }.reassemble()
    }

    #[test]
    fn equal_diagonal_blocks_are_achiral() {
        let mut r = rng(1);
        let a = random(8, &mut r);
        let z = DMatrix::zeros(8, 8);
        let rep = measure(&embed(&a, &z, &z, &a)).unwrap();
        assert!(rep.chi2 < 1e-12 && rep.chi_hs == 0.0);
    }

    #[test]
    fn single_block_is_maximal() {
        let mut r = rng(2);
        let a = random(8, &mut r);
        let z = DMatrix::zeros(8, 8);
        let rep = measure(&embed(&a, &z, &z, &z)).unwrap();
        assert!((rep.chi2 - rep.hs_norm).abs() < 1e-12 * rep.hs_norm);
        assert!((rep.chi_hs - rep.hs_norm).abs() < 1e-12 * rep.hs_norm);
        assert!((rep.j2 - 1.0).abs() < 1e-12 && (rep.j_hs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_matches_independent_svd() {
        let mut r = rng(3);
        let t = random(16, &mut r);
        let rep = measure(&t).unwrap();
        let sv = |m: DMatrix<C64>| {
            let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s
        };
        let b = Blocks::of(&t);
        let (a, d) = (sv(b.pp), sv(b.mm));
        let (c, e) = (sv(b.pm), sv(b.mp));
        let mut acc = 0.0;
        for i in 0..8 {
            acc += (a[i] - d[i]).powi(2) + (c[i] - e[i]).powi(2);
        }
        assert!((rep.chi2 - acc.sqrt()).abs() < 1e-12);
        let total: f64 = rep.singular_values.iter().flatten().map(|s| s * s).sum();
        assert!((total - rep.hs_norm.powi(2)).abs() < 1e-10 * total);
    }

    #[test]
    fn euler_relation() {
        let mut r = rng(4);
        let g = random(16, &mut r);
        let d = chi_hs_derivative(&g, &g).unwrap();
        assert!((d - measure(&g).unwrap().chi_hs).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_direction_is_flat() {
        let mut r = rng(5);
        let g = random(16, &mut r);
        // Blockwise orthogonal to G: each block projected off its G block.
        let mut h = Blocks::of(&random(16, &mut r));
        let gb = Blocks::of(&g);
        for (hb, gbk) in [(&mut h.pp, &gb.pp), (&mut h.pm, &gb.pm), (&mut h.mp, &gb.mp), (&mut h.mm, &gb.mm)] {
            let c = gbk.dotc(hb) / gbk.dotc(gbk);
            *hb -= gbk * c;
        }
        let d = chi_hs_derivative(&g, &h.reassemble()).unwrap();
        assert!(d.abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut r = rng(6);
        for _ in 0..5 {
            let g = random(16, &mut r);
            let h = random(16, &mut r);
            let tau = 1e-6;
            let f = |s: f64| measure(&(&g + &h * C64::from(s))).unwrap().chi_hs;
            let fd = (f(tau) - f(-tau)) / (2.0 * tau);
            let d = chi_hs_derivative(&g, &h).unwrap();
            assert!((d - fd).abs() < 1e-5 * d.abs().max(1e-3), "{d} {fd}");
        }
    }

    #[test]
    fn j_gradient_matches_central_difference() {
        let mut r = rng(7);
        let t = random(16, &mut r);
        let hs: Vec<DMatrix<C64>> = (0..3).map(|_| random(16, &mut r)).collect();
        let g = j_hs_gradient(&t, &hs).unwrap();
        for (i, h) in hs.iter().enumerate() {
            let tau = 1e-6;
            let f = |s: f64| measure(&(&t + h * C64::from(s))).unwrap().j_hs;
            let fd = (f(tau) - f(-tau)) / (2.0 * tau);
            assert!((g[i] - fd).abs() < 1e-5 * g[i].abs().max(1e-3));
        }
        let zero = j_hs_gradient(&t, &[DMatrix::zeros(16, 16)]).unwrap();
        assert_eq!(zero[0], 0.0);
        let scaled: Vec<DMatrix<C64>> = hs.iter().map(|h| h * C64::from(3.0)).collect();
        let g3 = j_hs_gradient(&(&t * C64::from(3.0)), &scaled).unwrap();
        assert!((&g3 - &g).norm() < 1e-12 * g3.norm());
    }

    #[test]
    fn zero_block_measures_but_leaves_domain() {
        let mut r = rng(8);
        let a = random(8, &mut r);
        let z = DMatrix::zeros(8, 8);
        let t = embed(&a, &a, &z, &a);
        assert!(measure(&t).is_ok());
        assert!(matches!(chi_hs_gradient(&t), Err(Error::DomainX(_))));
        let sym = embed(&a, &a, &a, &a);
        assert!(matches!(chi_hs_gradient(&sym), Err(Error::DomainX(_))));
    }

    fn arb_matrix(q: usize) -> impl Strategy<Value = DMatrix<C64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), q * q)
            .prop_map(move |v| DMatrix::from_iterator(q, q, v.into_iter().map(|(a, b)| C64::new(a, b))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn measure_bounds(t in arb_matrix(6)) {
            let rep = measure(&t).unwrap();
            let tol = 1e-12 * rep.hs_norm;
            prop_assert!(rep.chi_hs >= 0.0);
            prop_assert!(rep.chi_hs <= rep.chi2 + tol);
            prop_assert!(rep.chi2 <= rep.hs_norm + tol);
            prop_assert!(rep.j_hs <= 1.0 + 1e-12 && rep.j2 <= 1.0 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn homogeneous_and_swap_symmetric(t in arb_matrix(8), re in -3.0f64..3.0, im in -4.0f64..4.0) {
            let c = C64::new(re, im);
            prop_assume!(c.norm() > 0.1);
            let a = measure(&t).unwrap();
            let b = measure(&(&t * c)).unwrap();
            let s = c.norm();
            prop_assert!((b.chi2 - s * a.chi2).abs() <= 1e-10 * s * a.hs_norm);
            prop_assert!((b.chi_hs - s * a.chi_hs).abs() <= 1e-10 * s * a.hs_norm);
            prop_assert!((b.hs_norm - s * a.hs_norm).abs() <= 1e-12 * s * a.hs_norm);
            prop_assert!((b.j_hs - a.j_hs).abs() < 1e-12);
            let bl = Blocks::of(&t);
            let swapped = Blocks { pp: bl.mm.clone(), pm: bl.mp.clone(), mp: bl.pm.clone(), mm: bl.pp.clone() }.reassemble();
            let w = measure(&swapped).unwrap();
            prop_assert_eq!(w.chi2, a.chi2);
            prop_assert_eq!(w.chi_hs, a.chi_hs);
        }
    }
}
