//! Exact moments of xi-monomials over the unit cosphere S^{n-1}, symbolic in
//! n = 2m, via the pairing recursion
//!
//!   I(g1..gk) = 1/(n+k-2) * sum_{j>=2} delta(g1,gj) I(g2..^gj..gk),
//!   I() = Vol(S^{n-1}),
//!
//! with the volume factor carried as a symbolic tag throughout.

use crate::coefficients::{CoefficientQm, PolyZ};
use crate::tensor::{IndexLabel, TensorFactor, TensorMonomial, TensorPolynomial};
use std::collections::BTreeMap;
use std::sync::Mutex;
use std::sync::OnceLock;

/// Moment of a xi-monomial over the cosphere, divided by nothing: the
/// `Vol(S^{n-1})` factor is symbolic, the rational part lives in `result`.
#[derive(Clone, Debug)]
pub struct SphereMoment {
    pub degree: usize,
    /// Delta-pairing sum with exact coefficients; empty polynomial for odd
    /// degree.
    pub result: TensorPolynomial,
}

/// Memoized pairing patterns over placeholder labels XiSlot(0..k-1).
fn moment_pattern(k: usize) -> TensorPolynomial {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, TensorPolynomial>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&k) {
        return p.clone();
    }
    let result = if k == 0 {
        TensorPolynomial::from_monomial(TensorMonomial::one())
    } else if k % 2 == 1 {
        TensorPolynomial::zero()
    } else {
        // 1/(n + k - 2) with n = 2m.
        let head = CoefficientQm::from_parts(
            PolyZ::constant(1),
            PolyZ::affine(2, (k as i64) - 2),
            0,
        );
        let sub = moment_pattern(k - 2);
        let mut terms = Vec::new();
        for j in 1..k {
            // Remaining placeholders in order, renamed onto XiSlot(0..k-3).
            let remaining: Vec<usize> = (1..k).filter(|&t| t != j).collect();
            for t in &sub.terms {
                let mut factors = vec![TensorFactor::Delta(
                    IndexLabel::XiSlot(0),
                    IndexLabel::XiSlot(j as u32),
                )];
                for f in &t.factors {
                    factors.push(rename_xislots(f, &remaining));
                }
                terms.push(TensorMonomial::new(
                    crate::coefficients::qm_mul(&t.coeff, &head),
                    factors,
                ));
            }
        }
        TensorPolynomial { terms }
    };
    cache.lock().unwrap().insert(k, result.clone());
    result
}

/// Map XiSlot(t) -> XiSlot(remaining[t]) inside one factor.
fn rename_xislots(f: &TensorFactor, remaining: &[usize]) -> TensorFactor {
    let r = |l: IndexLabel| match l {
        IndexLabel::XiSlot(t) => IndexLabel::XiSlot(remaining[t as usize] as u32),
        other => other,
    };
    match *f {
        TensorFactor::Delta(a, b) => TensorFactor::Delta(r(a), r(b)),
        _ => unreachable!("moment patterns contain only delta factors"),
    }
}

/// Exact cosphere moment of the xi-monomial with the given index labels.
/// The result divides out nothing: multiply by Vol(S^{n-1}) to interpret.
pub fn sphere_moment(indices: &[IndexLabel]) -> SphereMoment {
    let k = indices.len();
    let pattern = moment_pattern(k);
    let mut terms = Vec::new();
    for t in &pattern.terms {
        let factors = t
            .factors
            .iter()
            .map(|f| match *f {
                TensorFactor::Delta(a, b) => {
                    let sub = |l: IndexLabel| match l {
                        IndexLabel::XiSlot(t) => indices[t as usize],
                        other => other,
                    };
                    TensorFactor::Delta(sub(a), sub(b))
                }
                _ => unreachable!(),
            })
            .collect();
        terms.push(TensorMonomial::new(t.coeff.clone(), factors));
    }
    SphereMoment {
        degree: k,
        result: TensorPolynomial { terms },
    }
}

/// Integrate a composed symbol over the unit cosphere.
///
/// Every term must be an x0 value of xi-order exactly -2m (the residue
/// homogeneity), so the `||xi||` power is 1 on the sphere and only the
/// component monomial integrates: it becomes the delta-pairing moment sum,
/// contracted into the coefficient. `c(xi)` macro generators turn into basis
/// generators whose component joins the moment. The `Vol(S^{2m-1})` factor
/// stays symbolic, as in [`sphere_moment`].
pub fn integrate_symbol(
    expr: &crate::symbols::SymbolExpr,
) -> Result<crate::clifford::CliffordPolynomial, crate::symbols::SymbolError> {
    use crate::clifford::{merge_clifford_terms, CliffordGenerator, CliffordWord};
    use crate::symbols::{render_symbol_term, SymbolError};
    let mut words = Vec::new();
    for term in &expr.terms {
        if !term.x_mon.is_empty() || !term.w_factors.is_empty() || !term.du_factors.is_empty() {
            return Err(SymbolError::NotAtBasePoint(render_symbol_term(term)));
        }
        let (gm, gc) = term.xi_order();
        if (gm, gc) != (-2, 0) {
            return Err(SymbolError::OrderMismatch {
                got_m: gm,
                got_c: gc,
                want_m: -2,
                want_c: 0,
                term: render_symbol_term(term),
            });
        }
        let mut xi_labels = term.xi_mon.clone();
        let word: Vec<CliffordGenerator> = term
            .word
            .iter()
            .map(|g| match g {
                CliffordGenerator::XiVec => {
                    let l = IndexLabel::fresh();
                    xi_labels.push(l);
                    CliffordGenerator::BasisVec(l)
                }
                other => other.clone(),
            })
            .collect();
        let moment = sphere_moment(&xi_labels);
        for mono in &moment.result.terms {
            let mut factors = term.tensor.factors.clone();
            factors.extend(mono.factors.iter().cloned());
            words.push(CliffordWord::new(
                TensorMonomial::new(
                    crate::coefficients::qm_mul(&term.tensor.coeff, &mono.coeff),
                    factors,
                ),
                word.clone(),
            ));
        }
    }
    Ok(merge_clifford_terms(words))
}
