//! Clifford word algebra over abstract generators, with reduction by the
//! relation `c(e_i)c(e_j) + c(e_j)c(e_i) = -2 delta_ij` and normalized trace
//! `tr[.]/tr[id]` via perfect-matching expansion.
//!
//! Macro generators `c(u_i)` and `c(xi)` expand into basis generators with
//! component factors `U(i,a)` / `Xi(a)` on the coefficient; `c(dx_j)` is
//! identified with `c(e_j)` because everything is evaluated in normal
//! coordinates at the base point, where the coframe is orthonormal.

use crate::coefficients::CoefficientQm;
use crate::tensor::{
    canonicalize_monomial, merge_terms, IndexLabel, TensorError, TensorFactor, TensorMonomial,
    TensorPolynomial,
};
use std::collections::BTreeMap;

/// One noncommuting generator of a Clifford word.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum CliffordGenerator {
    /// `c(e_a)` for a frame index label.
    BasisVec(IndexLabel),
    /// `c(u_i)`, slot in 1..=4; expands as `sum_a U(i,a) c(e_a)`.
    SlotVec(u8),
    /// `c(xi)`; expands as `sum_a Xi(a) c(e_a)`.
    XiVec,
    /// `c(dx_j)`; equals `c(e_j)` at the base point of normal coordinates.
    DxVec(IndexLabel),
}

use CliffordGenerator::*;

/// A coefficient times an ordered product of generators.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CliffordWord {
    pub coeff: TensorMonomial,
    pub generators: Vec<CliffordGenerator>,
}

impl CliffordWord {
    pub fn new(coeff: TensorMonomial, generators: Vec<CliffordGenerator>) -> Self {
        CliffordWord { coeff, generators }
    }

    pub fn from_generators(generators: Vec<CliffordGenerator>) -> Self {
        CliffordWord::new(TensorMonomial::one(), generators)
    }
}

/// Sum of Clifford words.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CliffordPolynomial {
    pub terms: Vec<CliffordWord>,
}

impl CliffordPolynomial {
    pub fn zero() -> Self {
        CliffordPolynomial { terms: Vec::new() }
    }

    pub fn from_word(w: CliffordWord) -> Self {
        CliffordPolynomial { terms: vec![w] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        merge_clifford_terms(terms)
    }

    pub fn scale(&self, c: &CoefficientQm) -> Self {
        CliffordPolynomial {
            terms: self
                .terms
                .iter()
                .map(|w| {
                    CliffordWord::new(
                        TensorMonomial::new(
                            crate::coefficients::qm_mul(&w.coeff.coeff, c),
                            w.coeff.factors.clone(),
                        ),
                        w.generators.clone(),
                    )
                })
                .filter(|w| !w.coeff.coeff.is_zero())
                .collect(),
        }
    }
}

/// Merge words with equal generator sequences and structurally equal factor
/// lists; drop zero terms.
pub fn merge_clifford_terms(terms: Vec<CliffordWord>) -> CliffordPolynomial {
    let mut map: BTreeMap<(Vec<CliffordGenerator>, Vec<TensorFactor>, u8), CoefficientQm> =
        BTreeMap::new();
    for w in terms {
        if w.coeff.coeff.is_zero() {
            continue;
        }
        let key = (
            w.generators.clone(),
            w.coeff.factors.clone(),
            w.coeff.coeff.i_power(),
        );
        match map.get_mut(&key) {
            Some(c) => *c = crate::coefficients::qm_add(c, &w.coeff.coeff),
            None => {
                map.insert(key, w.coeff.coeff);
            }
        }
    }
    let terms = map
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((generators, factors, _), coeff)| {
            CliffordWord::new(TensorMonomial::new(coeff, factors), generators)
        })
        .collect();
    CliffordPolynomial { terms }
}

/// Expand `SlotVec`, `XiVec`, and `DxVec` macro generators into `BasisVec`
/// generators with fresh summed component indices on the coefficient.
pub fn expand_macros(p: &CliffordPolynomial) -> CliffordPolynomial {
    let terms = p
        .terms
        .iter()
        .map(|w| {
            let mut coeff = w.coeff.clone();
            let generators = w
                .generators
                .iter()
                .map(|g| match *g {
                    BasisVec(l) => BasisVec(l),
                    DxVec(l) => BasisVec(l),
                    SlotVec(slot) => {
                        let a = IndexLabel::fresh();
                        coeff.factors.push(TensorFactor::U(slot, a));
                        BasisVec(a)
                    }
                    XiVec => {
                        let a = IndexLabel::fresh();
                        coeff.factors.push(TensorFactor::Xi(a));
                        BasisVec(a)
                    }
                })
                .collect();
            CliffordWord::new(coeff, generators)
        })
        .collect();
    CliffordPolynomial { terms }
}

/// Reduce one word of `BasisVec` generators to a sum of strictly ordered,
/// repetition-free words using the Clifford relation. Equal adjacent
/// generators annihilate into `-delta(a,a)`; an out-of-order adjacent pair
/// swaps with a sign and spawns a `-2 delta` term.
pub fn clifford_reduce(w: &CliffordWord) -> CliffordPolynomial {
    let mut stack = vec![w.clone()];
    let mut done: Vec<CliffordWord> = Vec::new();
    while let Some(term) = stack.pop() {
        let gens = &term.generators;
        let mut acted = false;
        for i in 0..gens.len().saturating_sub(1) {
            let (la, lb) = match (gens[i], gens[i + 1]) {
                (BasisVec(a), BasisVec(b)) => (a, b),
                _ => panic!("clifford_reduce requires expanded basis generators"),
            };
            if la == lb {
                let mut coeff = term.coeff.clone();
                coeff.coeff = coeff.coeff.neg();
                coeff.factors.push(TensorFactor::Delta(la, lb));
                let mut generators = gens.clone();
                generators.drain(i..=i + 1);
                stack.push(CliffordWord::new(coeff, generators));
                acted = true;
                break;
            }
            if la > lb {
                let mut swapped = term.clone();
                swapped.coeff.coeff = swapped.coeff.coeff.neg();
                swapped.generators.swap(i, i + 1);
                stack.push(swapped);

                let mut coeff = term.coeff.clone();
                coeff.coeff = crate::coefficients::qm_mul(
                    &coeff.coeff,
                    &CoefficientQm::from_int(-2),
                );
                coeff.factors.push(TensorFactor::Delta(la, lb));
                let mut generators = gens.clone();
                generators.drain(i..=i + 1);
                stack.push(CliffordWord::new(coeff, generators));
                acted = true;
                break;
            }
        }
        if !acted {
            done.push(term);
        }
    }
    // Canonicalize coefficients (deltas may contract into component factors)
    // and merge.
    let mut out = Vec::new();
    for w in done {
        match canonicalize_monomial(&w.coeff, true) {
            Ok(p) => {
                for t in p.terms {
                    out.push(CliffordWord::new(t, w.generators.clone()));
                }
            }
            Err(e) => panic!("invalid coefficient in clifford_reduce: {e}"),
        }
    }
    merge_clifford_terms(out)
}

/// All perfect matchings of positions 0..len as (p,q) pairs with p<q; the
/// count for len = 2k is (2k-1)!!.
pub(crate) fn perfect_matchings(len: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(len % 2 == 0);
    fn rec(free: &mut Vec<usize>, acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(acc.clone());
            return;
        }
        let p = free.remove(0);
        for qi in 0..free.len() {
            let q = free.remove(qi);
            acc.push((p, q));
            rec(free, acc, out);
            acc.pop();
            free.insert(qi, q);
        }
        free.insert(0, p);
    }
    let mut free: Vec<usize> = (0..len).collect();
    let mut out = Vec::new();
    rec(&mut free, &mut Vec::new(), &mut out);
    out
}

fn crossing_sign(matching: &[(usize, usize)]) -> i8 {
    let mut crossings = 0usize;
    for i in 0..matching.len() {
        for j in (i + 1)..matching.len() {
            let (a, b) = matching[i];
            let (c, d) = matching[j];
            let (a, b, c, d) = if a < c { (a, b, c, d) } else { (c, d, a, b) };
            if a < c && c < b && b < d {
                crossings += 1;
            }
        }
    }
    if crossings % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Normalized trace `tr[p]/tr[id]` as a tensor polynomial.
///
/// Macros are expanded internally. A word of 2k basis generators contributes
/// the sum over perfect matchings of positions, each weighted by its crossing
/// sign times `prod (-delta)` over matched label pairs; odd words vanish.
pub fn clifford_trace(p: &CliffordPolynomial) -> Result<TensorPolynomial, TensorError> {
    let expanded = expand_macros(p);
    let mut out: Vec<TensorMonomial> = Vec::new();
    for w in &expanded.terms {
        let labels: Vec<IndexLabel> = w
            .generators
            .iter()
            .map(|g| match g {
                BasisVec(l) => *l,
                _ => unreachable!("expand_macros left a macro generator"),
            })
            .collect();
        if labels.len() % 2 == 1 {
            continue;
        }
        let k = labels.len() / 2;
        for matching in perfect_matchings(labels.len()) {
            let sign = crossing_sign(&matching);
            let mut mono = w.coeff.clone();
            // Each matched pair contributes (-delta); fold the k minus signs
            // and the crossing sign into the coefficient.
            let total_sign = if (k % 2 == 1) != (sign < 0) { -1 } else { 1 };
            if total_sign < 0 {
                mono.coeff = mono.coeff.neg();
            }
            for (p_, q_) in &matching {
                mono.factors
                    .push(TensorFactor::Delta(labels[*p_], labels[*q_]));
            }
            out.extend(canonicalize_monomial(&mono, true)?.terms);
        }
    }
    Ok(merge_terms(out))
}

/// Plain-text rendering of a word for audit output.
pub fn render_word(w: &CliffordWord) -> String {
    let mut parts = vec![format!("{}", w.coeff)];
    for g in &w.generators {
        parts.push(match g {
            BasisVec(l) => format!("c({l:?})"),
            SlotVec(i) => format!("c(u{i})"),
            XiVec => "c(xi)".to_string(),
            DxVec(l) => format!("c(dx {l:?})"),
        });
    }
    parts.join(" ")
}

pub fn render_clifford_polynomial(p: &CliffordPolynomial) -> String {
    if p.terms.is_empty() {
        return "0".to_string();
    }
    p.terms
        .iter()
        .map(render_word)
        .collect::<Vec<_>>()
        .join("  +  ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientQm as C;
    use crate::tensor::{canonicalize_polynomial, TensorFactor::*};

    fn cw(gens: Vec<CliffordGenerator>) -> CliffordWord {
        CliffordWord::from_generators(gens)
    }

    fn conc(v: u32) -> CliffordGenerator {
        BasisVec(IndexLabel::Concrete(v))
    }

    fn canon(p: &TensorPolynomial) -> TensorPolynomial {
        canonicalize_polynomial(p, false).unwrap()
    }

    /// g(u_i,u_j) as a tensor monomial factor pair with a shared fresh index.
    fn g_pair(i: u8, j: u8, id: u32) -> Vec<TensorFactor> {
        vec![
            U(i, IndexLabel::Summed(id)),
            U(j, IndexLabel::Summed(id)),
        ]
    }

    #[test]
    fn same_concrete_square_is_minus_one() {
        let p = clifford_reduce(&cw(vec![conc(1), conc(1)]));
        assert_eq!(p.terms.len(), 1);
        assert!(p.terms[0].generators.is_empty());
        assert!(p.terms[0].coeff.factors.is_empty());
        assert_eq!(p.terms[0].coeff.coeff, C::from_int(-1));
    }

    #[test]
    fn anticommutator_is_minus_two_delta() {
        let a = IndexLabel::Summed(0);
        let b = IndexLabel::Summed(1);
        let sum = CliffordPolynomial {
            terms: vec![
                cw(vec![BasisVec(a), BasisVec(b)]),
                cw(vec![BasisVec(b), BasisVec(a)]),
            ],
        };
        let mut merged: Vec<CliffordWord> = Vec::new();
        for t in &sum.terms {
            merged.extend(clifford_reduce(t).terms);
        }
        let p = merge_clifford_terms(merged);
        assert_eq!(p.terms.len(), 1);
        let t = &p.terms[0];
        assert!(t.generators.is_empty());
        assert_eq!(t.coeff.factors, vec![Delta(a, b)]);
        assert_eq!(t.coeff.coeff, C::from_int(-2));
    }

    #[test]
    fn sandwich_reduces_to_single_generator() {
        // c(e1)c(e2)c(e1) = +c(e2) for distinct concrete indices.
        let p = clifford_reduce(&cw(vec![conc(1), conc(2), conc(1)]));
        assert_eq!(p.terms.len(), 1);
        let t = &p.terms[0];
        assert_eq!(t.generators, vec![conc(2)]);
        assert!(t.coeff.factors.is_empty());
        assert_eq!(t.coeff.coeff, C::from_int(1));
    }

    #[test]
    fn summed_square_gives_minus_2m() {
        // sum_a c(e_a)c(e_a) = -2m.
        let a = IndexLabel::Summed(0);
        let p = clifford_reduce(&cw(vec![BasisVec(a), BasisVec(a)]));
        assert_eq!(p.terms.len(), 1);
        let t = &p.terms[0];
        assert!(t.generators.is_empty());
        assert!(t.coeff.factors.is_empty());
        assert_eq!(t.coeff.coeff, C::affine_over(-2, 0, 1));
    }

    #[test]
    fn odd_word_traces_to_zero() {
        let p = CliffordPolynomial::from_word(cw(vec![conc(1), conc(2), conc(3)]));
        assert!(clifford_trace(&p).unwrap().is_zero());
    }

    #[test]
    fn four_slot_trace_matches_three_pairings() {
        // tr[c(u1)c(u2)c(u3)c(u4)]/tr[id] = g12 g34 - g13 g24 + g14 g23.
        let p = CliffordPolynomial::from_word(cw(vec![
            SlotVec(1),
            SlotVec(2),
            SlotVec(3),
            SlotVec(4),
        ]));
        let got = canon(&clifford_trace(&p).unwrap());
        let mut f1 = g_pair(1, 2, 0);
        f1.extend(g_pair(3, 4, 1));
        let mut f2 = g_pair(1, 3, 0);
        f2.extend(g_pair(2, 4, 1));
        let mut f3 = g_pair(1, 4, 0);
        f3.extend(g_pair(2, 3, 1));
        let expected = canon(&TensorPolynomial {
            terms: vec![
                TensorMonomial::new(C::from_int(1), f1),
                TensorMonomial::new(C::from_int(-1), f2),
                TensorMonomial::new(C::from_int(1), f3),
            ],
        });
        assert_eq!(got, expected);
    }

    #[test]
    fn frame_sandwich_trace_true_values() {
        // sum_f tr[c(u1)c(u2)c(e_f)c(u3)c(u4)c(e_f)]/tr[id]
        //   = -2m g12 g34 + (2m-4) g13 g24 - (2m-4) g14 g23.
        // The identity follows from sum_f c_f c_p c_q c_f = -(2m-4) c_p c_q
        // + 4 delta_pq and is cross-checked numerically in the oracle tests.
        let f = IndexLabel::fresh();
        let p = CliffordPolynomial::from_word(cw(vec![
            SlotVec(1),
            SlotVec(2),
            BasisVec(f),
            SlotVec(3),
            SlotVec(4),
            BasisVec(f),
        ]));
        let got = canon(&clifford_trace(&p).unwrap());
        let mut f1 = g_pair(1, 2, 0);
        f1.extend(g_pair(3, 4, 1));
        let mut f2 = g_pair(1, 3, 0);
        f2.extend(g_pair(2, 4, 1));
        let mut f3 = g_pair(1, 4, 0);
        f3.extend(g_pair(2, 3, 1));
        let expected = canon(&TensorPolynomial {
            terms: vec![
                TensorMonomial::new(C::affine_over(-2, 0, 1), f1),
                TensorMonomial::new(C::affine_over(2, -4, 1), f2),
                TensorMonomial::new(C::affine_over(-2, 4, 1), f3),
            ],
        });
        assert_eq!(got, expected);
    }

    #[test]
    fn matching_count_is_double_factorial() {
        for k in 1..=5usize {
            let n = 2 * k;
            let expected: usize = (1..=n).step_by(2).product();
            assert_eq!(perfect_matchings(n).len(), expected, "2k = {n}");
        }
    }

    #[test]
    fn trace_is_cyclic() {
        // Deterministic pseudo-random concrete words of even and odd length.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let len = rng.gen_range(2..=8);
            let word: Vec<CliffordGenerator> =
                (0..len).map(|_| conc(rng.gen_range(1..=5))).collect();
            let mut rotated = word.clone();
            let r = rng.gen_range(0..len);
            rotated.rotate_left(r);
            let t1 = canon(
                &clifford_trace(&CliffordPolynomial::from_word(cw(word))).unwrap(),
            );
            let t2 = canon(
                &clifford_trace(&CliffordPolynomial::from_word(cw(rotated))).unwrap(),
            );
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn trace_respects_clifford_relation() {
        // tr[c_i c_j X] + tr[c_j c_i X] = -2 delta_ij tr[X].
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let len = rng.gen_range(0..=6);
            let x: Vec<CliffordGenerator> =
                (0..len).map(|_| conc(rng.gen_range(1..=4))).collect();
            let i = rng.gen_range(1..=4);
            let j = rng.gen_range(1..=4);
            let mut w1 = vec![conc(i), conc(j)];
            w1.extend(x.iter().cloned());
            let mut w2 = vec![conc(j), conc(i)];
            w2.extend(x.iter().cloned());
            let lhs = clifford_trace(&CliffordPolynomial {
                terms: vec![cw(w1), cw(w2)],
            })
            .unwrap();
            let tx = clifford_trace(&CliffordPolynomial::from_word(cw(x))).unwrap();
            let factor = if i == j { C::from_int(-2) } else { C::zero() };
            let rhs = tx.scale(&factor);
            assert_eq!(canon(&lhs), canon(&rhs));
        }
    }

    #[test]
    fn reduce_and_trace_agree_on_random_words() {
        // Trace of the reduced polynomial equals trace of the raw word.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..25 {
            let len = rng.gen_range(2..=6);
            let word: Vec<CliffordGenerator> =
                (0..len).map(|_| conc(rng.gen_range(1..=4))).collect();
            let raw = canon(
                &clifford_trace(&CliffordPolynomial::from_word(cw(word.clone()))).unwrap(),
            );
            let reduced = clifford_reduce(&cw(word));
            let traced = canon(&clifford_trace(&reduced).unwrap());
            assert_eq!(raw, traced);
        }
    }

    #[test]
    fn expand_macros_produces_component_factors() {
        let p = expand_macros(&CliffordPolynomial::from_word(cw(vec![
            SlotVec(2),
            XiVec,
            DxVec(IndexLabel::Concrete(3)),
        ])));
        assert_eq!(p.terms.len(), 1);
        let t = &p.terms[0];
        assert_eq!(t.generators.len(), 3);
        assert!(matches!(t.generators[2], BasisVec(IndexLabel::Concrete(3))));
        assert_eq!(t.coeff.factors.len(), 2);
        assert!(t
            .coeff
            .factors
            .iter()
            .any(|f| matches!(f, U(2, _))));
        assert!(t.coeff.factors.iter().any(|f| matches!(f, Xi(_))));
    }
}
