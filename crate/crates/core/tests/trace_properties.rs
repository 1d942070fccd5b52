use gjs_core::gjs::{GjsModel, StandardKernel, TensorElement};
use gjs_core::kac::{self, KacAlgebra, Vector};
use gjs_core::ncpart::{tuples, FunctionTable};
use gjs_core::AlgebraicReal;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::cmp::Ordering;

fn coeff() -> impl Strategy<Value = AlgebraicReal> {
    (-3i64..=3, -2i64..=2).prop_map(|(a, b)| AlgebraicReal::from_integer(a) + AlgebraicReal::rational(b, 2) * AlgebraicReal::sqrt(-3))
}

fn element(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(coeff(), dim)
}

fn algebra(name: &str) -> KacAlgebra {
    kac::builtin(name).unwrap().0
}

const ALGEBRAS: [&str; 4] = ["c3", "s3", "dual-c3", "dual-s3"];

fn pick() -> impl Strategy<Value = (KacAlgebra, Vector, Vector)> {
    (0..ALGEBRAS.len()).prop_flat_map(|i| {
        let k = algebra(ALGEBRAS[i]);
        let n = k.dim();
        (Just(k), element(n), element(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_is_a_positive_trace((k, a, b) in pick()) {
        prop_assert_eq!(k.phi(&k.mul(&a, &b)), k.phi(&k.mul(&b, &a)));
        let norm = k.phi(&k.mul(&k.star(&a), &a));
        prop_assert!(norm.is_real());
        prop_assert_ne!(norm.signum_real().unwrap(), Ordering::Less);
        prop_assert_eq!(k.phi(&k.star(&a)), k.phi(&a).conj());
    }

    #[test]
    fn antipode_and_star_reverse_products((k, a, b) in pick()) {
        let ab = k.mul(&a, &b);
        prop_assert_eq!(k.antipode(&ab), k.mul(&k.antipode(&b), &k.antipode(&a)));
        prop_assert_eq!(k.star(&ab), k.mul(&k.star(&b), &k.star(&a)));
        prop_assert_eq!(k.counit(&ab), &k.counit(&a) * &k.counit(&b));
    }

    #[test]
    fn tau1_is_cyclic(word in prop::collection::vec(0usize..6, 1..=6), shift in 0usize..6) {
        let model = GjsModel::builtin("dual-s3").unwrap();
        let k = model.algebra();
        let alphabet: Vec<Vector> = (0..k.dim()).map(|i| k.basis_vector(i)).collect();
        let table = model.tau1_table(&StandardKernel, &alphabet).unwrap();
        let mut rotated = word.clone();
        rotated.rotate_left(shift % word.len());
        prop_assert_eq!(table.eval(&word).unwrap(), table.eval(&rotated).unwrap());
    }
}

/// `G_ij = τ₁(w_i† w_j)` over all basis words of length ≤ 2, as the real
/// symmetric embedding of a Hermitian matrix.
fn gram(name: &str) -> DMatrix<f64> {
    let model = GjsModel::builtin(name).unwrap();
    let k = model.algebra();
    let alphabet: Vec<Vector> = (0..k.dim()).map(|i| k.basis_vector(i)).collect();
    let table = model.tau1_table(&StandardKernel, &alphabet).unwrap();
    let ids: Vec<usize> = (0..k.dim()).collect();
    let mut words = vec![Vec::new()];
    words.extend(tuples(&ids, 2));
    let m = words.len();
    let mut g = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for (i, wi) in words.iter().enumerate() {
        let di = TensorElement::basis_word(wi.clone()).dagger(k);
        for (j, wj) in words.iter().enumerate() {
            let prod = di.mul(&TensorElement::basis_word(wj.clone()));
            let mut v = AlgebraicReal::zero();
            for (w, c) in prod.terms() {
                v += c * &table.eval(w).unwrap();
            }
            let (re, im) = (v.to_f64(), v.imag_f64());
            g[(i, j)] = re;
            g[(i + m, j + m)] = re;
            g[(i, j + m)] = -im;
            g[(i + m, j)] = im;
        }
    }
    g
}

#[test]
fn tau1_gram_matrices_are_positive_semidefinite() {
    for name in ["c2", "c3", "dual-s3"] {
        let g = gram(name);
        let asym = (&g - g.transpose()).abs().max();
        assert!(asym < 1e-9, "{name}: not Hermitian ({asym:e})");
        let min = g.symmetric_eigen().eigenvalues.min();
        assert!(min > -1e-9, "{name}: eigenvalue {min}");
    }
}

#[test]
fn tau1_of_tensor_elements_is_linear() {
    let model = GjsModel::builtin("c2").unwrap();
    let e = TensorElement::basis_word(vec![1, 1]);
    let f = TensorElement::basis_word(vec![0]);
    let two = AlgebraicReal::from_integer(2);
    let sum = e.scale(&two).add(&f);
    let want = &(&two * &e.tau1(&model).unwrap()) + &f.tau1(&model).unwrap();
    assert_eq!(sum.tau1(&model).unwrap(), want);
    assert_eq!(e.tau1(&model).unwrap(), AlgebraicReal::sqrt(2) + AlgebraicReal::one());
}
