use gjs_core::gjs::{crossed_multiply, dagger, CrossedElement, TensorElement};
use gjs_core::kac::{self, KacAlgebra};
use gjs_core::AlgebraicReal;
use proptest::prelude::*;

fn algebra(name: &str) -> KacAlgebra {
    kac::builtin(name).unwrap().0
}

fn crossed(dim: usize) -> impl Strategy<Value = CrossedElement> {
    let term = (prop::collection::vec(0..dim, 0..=2), 0..dim, -3i64..=3, -1i64..=1);
    prop::collection::vec(term, 1..=3).prop_map(|terms| {
        terms.into_iter().fold(CrossedElement::zero(), |acc, (w, a, x, y)| {
            let c = AlgebraicReal::from_integer(x) + AlgebraicReal::from_integer(y) * AlgebraicReal::sqrt(-1);
            acc.add(&CrossedElement::term(w, a, c))
        })
    })
}

fn triple(name: &'static str) -> impl Strategy<Value = (&'static str, CrossedElement, CrossedElement, CrossedElement)> {
    let n = algebra(name).dim();
    (Just(name), crossed(n), crossed(n), crossed(n))
}

fn cases() -> impl Strategy<Value = (&'static str, CrossedElement, CrossedElement, CrossedElement)> {
    prop_oneof![triple("c3"), triple("dual-c3"), triple("dual-s3")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiplication_is_associative((name, u, v, w) in cases()) {
        let k = algebra(name);
        let left = crossed_multiply(&k, &crossed_multiply(&k, &u, &v), &w);
        let right = crossed_multiply(&k, &u, &crossed_multiply(&k, &v, &w));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dagger_is_an_involutive_antihomomorphism((name, u, v, _w) in cases()) {
        let k = algebra(name);
        prop_assert_eq!(dagger(&k, &dagger(&k, &u)), u.clone());
        let uv = crossed_multiply(&k, &u, &v);
        prop_assert_eq!(dagger(&k, &uv), crossed_multiply(&k, &dagger(&k, &v), &dagger(&k, &u)));
    }

    #[test]
    fn degree_is_additive((name, u, v, _w) in cases()) {
        let k = algebra(name);
        let uv = crossed_multiply(&k, &u, &v);
        let (du, dv) = (u.degrees(), v.degrees());
        for d in uv.degrees() {
            prop_assert!(du.iter().any(|a| dv.iter().any(|b| a + b == d)));
        }
    }
}

#[test]
fn embeddings_are_multiplicative() {
    for name in ["c3", "dual-s3"] {
        let k = algebra(name);
        let n = k.dim();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (k.basis_vector(i), k.basis_vector(j));
                let ab = crossed_multiply(&k, &CrossedElement::acting(&a), &CrossedElement::acting(&b));
                assert_eq!(ab, CrossedElement::acting(&k.mul(&a, &b)), "{name}: {i}·{j}");
                let (w, v) = (TensorElement::basis_word(vec![i]), TensorElement::basis_word(vec![j, i]));
                let wv = crossed_multiply(&k, &CrossedElement::from_tensor(&k, &w), &CrossedElement::from_tensor(&k, &v));
                assert_eq!(wv, CrossedElement::from_tensor(&k, &w.mul(&v)));
            }
        }
    }
}

#[test]
fn dagger_restricts_to_the_tensor_dagger() {
    let k = algebra("dual-s3");
    let w = TensorElement::basis_word(vec![1, 4]).add(&TensorElement::basis_word(vec![5]).scale(&AlgebraicReal::sqrt(-1)));
    assert_eq!(dagger(&k, &CrossedElement::from_tensor(&k, &w)), CrossedElement::from_tensor(&k, &w.dagger(&k)));
    let a = k.basis_vector(3);
    assert_eq!(dagger(&k, &CrossedElement::acting(&a)), CrossedElement::acting(&k.star(&a)));
}

/// `(1 ⋊ a)(v ⋊ 1) = α_{a₍₁₎}(v) ⋊ a₍₂₎`: for a group-like `g`, `g` acts
/// letterwise by left multiplication and passes through unchanged.
#[test]
fn group_like_elements_act_diagonally() {
    let k = algebra("s3");
    let g = k.basis_vector(4);
    let v = TensorElement::basis_word(vec![1, 2]);
    let got = crossed_multiply(&k, &CrossedElement::acting(&g), &CrossedElement::from_tensor(&k, &v));
    let acted: Vec<_> = [1, 2].iter().map(|&i| k.mul(&g, &k.basis_vector(i))).collect();
    let moved = TensorElement::from_letters(&acted);
    let want = crossed_multiply(&k, &CrossedElement::from_tensor(&k, &moved), &CrossedElement::acting(&g));
    assert_eq!(got, want);
}
