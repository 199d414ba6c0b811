//! Randomized structural invariants: exact-coefficient ring laws,
//! canonicalization idempotence and sign consistency, trace cyclicity and
//! the defining Clifford relation, and moment symmetry.

use proptest::prelude::*;
use wres::clifford::{clifford_trace, CliffordGenerator, CliffordPolynomial, CliffordWord};
use wres::coefficients::{qm_add, qm_eval, qm_mul, CoefficientQm, GaussianRational, PolyZ};
use wres::sphere::sphere_moment;
use wres::tensor::{
    canonicalize_polynomial, project_to_basis, IndexLabel, TensorFactor, TensorMonomial,
    TensorPolynomial,
};

type C = CoefficientQm;

/// Coefficient with affine numerator factors, a pole-free denominator, and
/// a chosen `i` parity.
fn arb_coeff(parity: i64) -> impl Strategy<Value = C> {
    (
        -6i64..=6,
        -6i64..=6,
        -4i64..=4,
        -4i64..=4,
        1i64..=6,
        prop::bool::ANY,
        prop::bool::ANY,
    )
        .prop_map(move |(a1, b1, a2, b2, k, second, poly_den)| {
            let den = if poly_den {
                PolyZ::affine(1, k)
            } else {
                PolyZ::constant(k)
            };
            let mut c = C::from_parts(PolyZ::affine(a1, b1), den, parity);
            if second {
                c = qm_mul(&c, &C::from_parts(PolyZ::affine(a2, b2), PolyZ::constant(1), 0));
            }
            c
        })
}

fn any_coeff() -> impl Strategy<Value = C> {
    (0i64..=3).prop_flat_map(arb_coeff)
}

/// Real coefficient (parity 2 exercises the sign-folding path).
fn real_coeff() -> impl Strategy<Value = C> {
    prop_oneof![arb_coeff(0), arb_coeff(2)]
}

fn gauss_mul(a: &GaussianRational, b: &GaussianRational) -> GaussianRational {
    GaussianRational {
        re: &a.re * &b.re - &a.im * &b.im,
        im: &a.re * &b.im + &a.im * &b.re,
    }
}

fn gauss_add(a: &GaussianRational, b: &GaussianRational) -> GaussianRational {
    GaussianRational {
        re: &a.re + &b.re,
        im: &a.im + &b.im,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_commutes(a in any_coeff(), b in any_coeff()) {
        prop_assert_eq!(qm_mul(&a, &b), qm_mul(&b, &a));
    }

    #[test]
    fn sum_commutes_and_associates(
        parity in 0i64..=1,
        abc in (0i64..=1).prop_flat_map(|p| (arb_coeff(p), arb_coeff(p), arb_coeff(p))),
    ) {
        let _ = parity;
        let (a, b, c) = abc;
        prop_assert_eq!(qm_add(&a, &b), qm_add(&b, &a));
        prop_assert_eq!(qm_add(&qm_add(&a, &b), &c), qm_add(&a, &qm_add(&b, &c)));
    }

    #[test]
    fn reduction_is_idempotent(a in any_coeff()) {
        let again = C::from_parts(
            a.numerator().clone(),
            a.denominator().clone(),
            i64::from(a.i_power()),
        );
        prop_assert_eq!(again, a);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(
        pair in (0i64..=1).prop_flat_map(|p| (arb_coeff(p), arb_coeff(p))),
    ) {
        let (a, b) = pair;
        for m in [1i64, 2, 3, 5] {
            let ea = qm_eval(&a, m).unwrap();
            let eb = qm_eval(&b, m).unwrap();
            prop_assert_eq!(qm_eval(&qm_mul(&a, &b), m).unwrap(), gauss_mul(&ea, &eb));
            prop_assert_eq!(qm_eval(&qm_add(&a, &b), m).unwrap(), gauss_add(&ea, &eb));
        }
    }
}

const RIEM_SYMMETRIES: [([usize; 4], i64); 8] = [
    ([0, 1, 2, 3], 1),
    ([1, 0, 2, 3], -1),
    ([0, 1, 3, 2], -1),
    ([1, 0, 3, 2], 1),
    ([2, 3, 0, 1], 1),
    ([3, 2, 0, 1], -1),
    ([2, 3, 1, 0], -1),
    ([3, 2, 1, 0], 1),
];

fn arb_perm4() -> impl Strategy<Value = [usize; 4]> {
    Just([0usize, 1, 2, 3]).prop_shuffle().prop_map(|v| [v[0], v[1], v[2], v[3]])
}

/// Fully contracted four-vector invariant monomial: one of the three basis
/// shapes with randomized slot assignment, optionally weighted by a frame
/// self-contraction.
fn arb_invariant_monomial() -> impl Strategy<Value = TensorPolynomial> {
    (0usize..3, arb_perm4(), 0usize..8, real_coeff(), prop::bool::ANY).prop_map(
        |(family, perm, sym_no, coeff, frame_loop)| {
            let u: Vec<u8> = perm.iter().map(|&k| k as u8 + 1).collect();
            let a = IndexLabel::fresh();
            let b = IndexLabel::fresh();
            let mut factors = match family {
                0 => vec![
                    TensorFactor::ScalarS,
                    TensorFactor::U(u[0], a),
                    TensorFactor::U(u[1], a),
                    TensorFactor::U(u[2], b),
                    TensorFactor::U(u[3], b),
                ],
                1 => {
                    let c = IndexLabel::fresh();
                    vec![
                        TensorFactor::U(u[0], a),
                        TensorFactor::U(u[1], a),
                        TensorFactor::U(u[2], b),
                        TensorFactor::U(u[3], c),
                        TensorFactor::Ric(b, c),
                    ]
                }
                _ => {
                    let c = IndexLabel::fresh();
                    let d = IndexLabel::fresh();
                    let slots = [a, b, c, d];
                    let (sym, _) = RIEM_SYMMETRIES[sym_no];
                    let mut f = vec![TensorFactor::Riem(
                        slots[sym[0]],
                        slots[sym[1]],
                        slots[sym[2]],
                        slots[sym[3]],
                    )];
                    for (k, &lab) in slots.iter().enumerate() {
                        f.push(TensorFactor::U(u[k], lab));
                    }
                    f
                }
            };
            if frame_loop {
                let f = IndexLabel::fresh();
                factors.push(TensorFactor::Delta(f, f));
            }
            TensorPolynomial::from_monomial(TensorMonomial::new(coeff, factors))
        },
    )
}

fn riem_on_u(slots: [IndexLabel; 4], attach: [IndexLabel; 4], u: &[usize; 4]) -> TensorPolynomial {
    let mut f = vec![TensorFactor::Riem(slots[0], slots[1], slots[2], slots[3])];
    for (k, &lab) in u.iter().enumerate() {
        f.push(TensorFactor::U(k as u8 + 1, attach[lab]));
    }
    TensorPolynomial::from_monomial(TensorMonomial::new(C::one(), f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalization_is_idempotent(p in arb_invariant_monomial()) {
        let once = canonicalize_polynomial(&p, false).unwrap();
        let twice = canonicalize_polynomial(&once, false).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn curvature_permutations_canonicalize_sign_consistently(
        sym_no in 0usize..8,
        u_perm in arb_perm4(),
    ) {
        let labels = [
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
        ];
        let (sym, sign) = RIEM_SYMMETRIES[sym_no];
        let base = riem_on_u(labels, labels, &u_perm);
        let permuted = [labels[sym[0]], labels[sym[1]], labels[sym[2]], labels[sym[3]]];
        let varied = riem_on_u(permuted, labels, &u_perm);
        let lhs = canonicalize_polynomial(&varied, false).unwrap();
        let rhs = canonicalize_polynomial(&base, false)
            .unwrap()
            .scale(&C::from_int(sign));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cyclic_curvature_sum_canonicalizes_to_zero(u_perm in arb_perm4(), c in any_coeff()) {
        let l = [
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
            IndexLabel::fresh(),
        ];
        let total = riem_on_u([l[0], l[1], l[2], l[3]], l, &u_perm)
            .add(&riem_on_u([l[0], l[2], l[3], l[1]], l, &u_perm))
            .add(&riem_on_u([l[0], l[3], l[1], l[2]], l, &u_perm))
            .scale(&c);
        let canon = canonicalize_polynomial(&total, false).unwrap();
        prop_assert!(canon.is_zero());
    }

    #[test]
    fn projection_is_linear(a in arb_invariant_monomial(), b in arb_invariant_monomial()) {
        let pa = project_to_basis(&canonicalize_polynomial(&a, false).unwrap()).unwrap();
        let pb = project_to_basis(&canonicalize_polynomial(&b, false).unwrap()).unwrap();
        let pab =
            project_to_basis(&canonicalize_polynomial(&a.add(&b), false).unwrap()).unwrap();
        prop_assert_eq!(pab.coefficients, pa.add(&pb).coefficients);
    }
}

fn concrete_word(indices: &[u32]) -> CliffordPolynomial {
    CliffordPolynomial::from_word(CliffordWord::from_generators(
        indices
            .iter()
            .map(|&i| CliffordGenerator::BasisVec(IndexLabel::Concrete(i)))
            .collect(),
    ))
}

/// Word over abstract summed labels, each appearing exactly twice.
fn paired_word(pairs: usize, seed: &[usize]) -> CliffordPolynomial {
    let labels: Vec<IndexLabel> = (0..pairs).map(|_| IndexLabel::fresh()).collect();
    let mut occurrences: Vec<IndexLabel> = Vec::with_capacity(2 * pairs);
    for l in &labels {
        occurrences.push(*l);
        occurrences.push(*l);
    }
    // Deterministic shuffle by the provided rank sequence.
    for (i, &r) in seed.iter().enumerate().take(occurrences.len()) {
        let j = i + r % (occurrences.len() - i);
        occurrences.swap(i, j);
    }
    CliffordPolynomial::from_word(CliffordWord::from_generators(
        occurrences
            .into_iter()
            .map(CliffordGenerator::BasisVec)
            .collect(),
    ))
}

fn canon_trace(p: &CliffordPolynomial) -> TensorPolynomial {
    canonicalize_polynomial(&clifford_trace(p).unwrap(), false).unwrap()
}

fn rotated(indices: &[u32], by: usize) -> Vec<u32> {
    if indices.is_empty() {
        return Vec::new();
    }
    let mut v = indices.to_vec();
    v.rotate_left(by % indices.len());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trace_is_invariant_under_rotation(
        indices in prop::collection::vec(0u32..6, 0..=8),
        by in 0usize..8,
    ) {
        let base = canon_trace(&concrete_word(&indices));
        let turned = canon_trace(&concrete_word(&rotated(&indices, by)));
        prop_assert_eq!(base, turned);
    }

    #[test]
    fn paired_abstract_trace_is_invariant_under_rotation(
        pairs in 1usize..=4,
        seed in prop::collection::vec(0usize..64, 8),
        by in 0usize..8,
    ) {
        let p = paired_word(pairs, &seed);
        let base = canon_trace(&p);
        let mut rot = p.terms[0].generators.clone();
        rot.rotate_left(by % (2 * pairs));
        let turned = canon_trace(&CliffordPolynomial::from_word(
            CliffordWord::from_generators(rot),
        ));
        prop_assert_eq!(base, turned);
    }

    #[test]
    fn trace_satisfies_the_defining_relation(
        x in prop::collection::vec(0u32..4, 0..=6),
        i in 0u32..4,
        j in 0u32..4,
    ) {
        let mut ij = vec![i, j];
        ij.extend_from_slice(&x);
        let mut ji = vec![j, i];
        ji.extend_from_slice(&x);
        let lhs = canonicalize_polynomial(
            &clifford_trace(&concrete_word(&ij))
                .unwrap()
                .add(&clifford_trace(&concrete_word(&ji)).unwrap()),
            false,
        )
        .unwrap();
        let rhs = if i == j {
            canon_trace(&concrete_word(&x)).scale(&C::from_int(-2))
        } else {
            TensorPolynomial::default()
        };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn odd_words_trace_to_zero(indices in prop::collection::vec(0u32..6, 1..=7)) {
        prop_assume!(indices.len() % 2 == 1);
        prop_assert!(clifford_trace(&concrete_word(&indices)).unwrap().is_zero());
    }

    #[test]
    fn moments_are_symmetric_in_their_indices(
        indices in prop::collection::vec(0u32..4, 0..=8),
    ) {
        let labels: Vec<IndexLabel> =
            indices.iter().map(|&i| IndexLabel::Concrete(i)).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        let a = canonicalize_polynomial(&sphere_moment(&labels).result, false).unwrap();
        let b = canonicalize_polynomial(&sphere_moment(&sorted).result, false).unwrap();
        prop_assert_eq!(a, b);
    }
}
