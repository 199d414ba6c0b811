//! Indexed tensor monomials and polynomials: Kronecker deltas, Riemann,
//! Ricci, scalar curvature, slot vectors u1..u4, and xi components, with
//! contraction, Riemann-symmetry canonicalization, and projection onto the
//! fixed 11-element invariant basis.
//!
//! Conventions fixed here and used by every other module:
//! - `Ric(a,b) = sum_l R(l,a,l,b)`, `s = sum_a Ric(a,a)`;
//! - `delta(a,a)` summed over the frame gives `2m`;
//! - first Bianchi eliminates the Riemann arrangement whose second canonical
//!   index is the largest of the last three, rewriting
//!   `R(w,z,x,y) -> R(w,y,x,z) - R(w,x,y,z)` for `w<x<y<z`.

use crate::coefficients::{qm_add, qm_mul, CoefficientQm};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

/// Reserved id range for canonically renamed bound indices; freshly allocated
/// ids stay below it.
const CANON_BASE: u32 = 1_000_000;

static NEXT_ID: AtomicU32 = AtomicU32::new(0);

/// Allocate a fresh summed-index id, unique process-wide.
pub fn fresh_id() -> u32 {
    let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
    assert!(id < CANON_BASE, "fresh-id space exhausted");
    id
}

/// Abstract index label. `Summed` ids pair up across a monomial's factor
/// slots (and the slots of any structure the monomial is a coefficient of);
/// `Concrete` values are used by numeric paths; `XiSlot` is a placeholder
/// kind reserved for memoized sphere moments.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum IndexLabel {
    Concrete(u32),
    XiSlot(u32),
    Summed(u32),
}

impl IndexLabel {
    pub fn summed(id: u32) -> Self {
        IndexLabel::Summed(id)
    }

    pub fn fresh() -> Self {
        IndexLabel::Summed(fresh_id())
    }
}

/// One multiplicative factor of a tensor monomial.
///
/// Variant order matters: factor sorting puts the u-slot components first so
/// that canonical renaming names their indices in slot order, which makes the
/// Riemann index arrangement encode the u-attachment pattern directly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TensorFactor {
    /// Component u^slot_index, slot in 1..=4.
    U(u8, IndexLabel),
    /// Component xi_index.
    Xi(IndexLabel),
    /// Riemann tensor R(i,j,k,l), antisymmetric in (i,j) and (k,l),
    /// symmetric under pair exchange.
    Riem(IndexLabel, IndexLabel, IndexLabel, IndexLabel),
    /// Ricci tensor, symmetric.
    Ric(IndexLabel, IndexLabel),
    /// Kronecker delta, symmetric.
    Delta(IndexLabel, IndexLabel),
    /// Scalar curvature s.
    ScalarS,
}

use TensorFactor::*;

impl TensorFactor {
    fn labels(&self) -> Vec<IndexLabel> {
        match *self {
            U(_, a) | Xi(a) => vec![a],
            Ric(a, b) | Delta(a, b) => vec![a, b],
            Riem(a, b, c, d) => vec![a, b, c, d],
            ScalarS => vec![],
        }
    }

    fn rename(&self, map: &BTreeMap<IndexLabel, IndexLabel>) -> TensorFactor {
        let r = |l: IndexLabel| *map.get(&l).unwrap_or(&l);
        match *self {
            U(s, a) => U(s, r(a)),
            Xi(a) => Xi(r(a)),
            Ric(a, b) => Ric(r(a), r(b)),
            Delta(a, b) => Delta(r(a), r(b)),
            Riem(a, b, c, d) => Riem(r(a), r(b), r(c), r(d)),
            ScalarS => ScalarS,
        }
    }

    /// Normalize internal index order using the factor's own symmetries,
    /// returning the sign picked up. Returns `None` when the factor is
    /// identically zero by antisymmetry (same label in an antisymmetric pair).
    fn normalize(&self) -> Option<(TensorFactor, i8)> {
        match *self {
            Ric(a, b) => Some((Ric(a.min(b), a.max(b)), 1)),
            Delta(a, b) => Some((Delta(a.min(b), a.max(b)), 1)),
            Riem(a, b, c, d) => {
                let mut images: Vec<([IndexLabel; 4], i8)> = Vec::with_capacity(8);
                for exch in [false, true] {
                    for sf in [false, true] {
                        for sl in [false, true] {
                            let (mut p, mut q, mut r, mut s) = (a, b, c, d);
                            if exch {
                                std::mem::swap(&mut p, &mut r);
                                std::mem::swap(&mut q, &mut s);
                            }
                            if sf {
                                std::mem::swap(&mut p, &mut q);
                            }
                            if sl {
                                std::mem::swap(&mut r, &mut s);
                            }
                            images.push(([p, q, r, s], if sf != sl { -1 } else { 1 }));
                        }
                    }
                }
                let (min_tup, min_sign) = *images.iter().min_by_key(|(t, _)| *t).unwrap();
                if images.iter().any(|(t, s)| *t == min_tup && *s != min_sign) {
                    return None;
                }
                let [p, q, r, s] = min_tup;
                Some((Riem(p, q, r, s), min_sign))
            }
            other => Some((other, 1)),
        }
    }
}

/// Errors from tensor manipulation.
#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("summed index {0:?} occurs more than twice in one monomial")]
    IndexOccursTooOften(u32),
    #[error("summed index {0:?} is unpaired in a context that requires a closed monomial")]
    UnpairedIndex(u32),
    #[error("monomial outside the invariant basis span: {0}")]
    UnrecognizedInvariant(String),
}

/// Product of tensor factors with an exact coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorMonomial {
    pub coeff: CoefficientQm,
    pub factors: Vec<TensorFactor>,
}

impl TensorMonomial {
    pub fn new(coeff: CoefficientQm, factors: Vec<TensorFactor>) -> Self {
        TensorMonomial { coeff, factors }
    }

    pub fn one() -> Self {
        TensorMonomial::new(CoefficientQm::one(), Vec::new())
    }

    pub fn constant(c: CoefficientQm) -> Self {
        TensorMonomial::new(c, Vec::new())
    }

    /// Census of summed ids over the factor list.
    fn occurrences(&self) -> BTreeMap<u32, usize> {
        let mut occ = BTreeMap::new();
        for f in &self.factors {
            for l in f.labels() {
                if let IndexLabel::Summed(id) = l {
                    *occ.entry(id).or_insert(0) += 1;
                }
            }
        }
        occ
    }
}

/// Sum of tensor monomials with like terms merged.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TensorPolynomial {
    pub terms: Vec<TensorMonomial>,
}

impl TensorPolynomial {
    pub fn zero() -> Self {
        TensorPolynomial { terms: Vec::new() }
    }

    pub fn from_monomial(m: TensorMonomial) -> Self {
        TensorPolynomial { terms: vec![m] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut all = self.terms.clone();
        all.extend(other.terms.iter().cloned());
        merge_terms(all)
    }

    pub fn scale(&self, c: &CoefficientQm) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TensorMonomial::new(qm_mul(&t.coeff, c), t.factors.clone()))
            .filter(|t| !t.coeff.is_zero())
            .collect();
        TensorPolynomial { terms }
    }

    pub fn neg(&self) -> Self {
        self.scale(&CoefficientQm::from_int(-1))
    }
}

/// Merge structurally equal factor lists; drop zero coefficients. Terms that
/// differ only in the i power of the coefficient are kept separate.
pub fn merge_terms(terms: Vec<TensorMonomial>) -> TensorPolynomial {
    let mut map: BTreeMap<(Vec<TensorFactor>, u8), CoefficientQm> = BTreeMap::new();
    for t in terms {
        if t.coeff.is_zero() {
            continue;
        }
        let key = (t.factors.clone(), t.coeff.i_power());
        match map.get_mut(&key) {
            Some(c) => *c = qm_add(c, &t.coeff),
            None => {
                map.insert(key, t.coeff);
            }
        }
    }
    let terms = map
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((factors, _), coeff)| TensorMonomial { coeff, factors })
        .collect();
    TensorPolynomial { terms }
}

/// Result of one local-rule pass over a monomial's factor list.
enum RuleOutcome {
    Unchanged,
    Zero,
    Changed,
}

/// Apply delta contractions, Ricci traces, and Riemann repeated-index rules
/// until none applies. Mutates in place; multiplies signs and scalars into
/// the coefficient.
fn contract_fixpoint(m: &mut TensorMonomial) -> RuleOutcome {
    let mut changed_any = false;
    loop {
        match contract_once(m) {
            RuleOutcome::Zero => return RuleOutcome::Zero,
            RuleOutcome::Changed => changed_any = true,
            RuleOutcome::Unchanged => {
                return if changed_any {
                    RuleOutcome::Changed
                } else {
                    RuleOutcome::Unchanged
                }
            }
        }
    }
}

fn contract_once(m: &mut TensorMonomial) -> RuleOutcome {
    let occ = m.occurrences();
    // Delta rules.
    for (fi, f) in m.factors.iter().enumerate() {
        if let Delta(x, y) = *f {
            if x == y {
                m.factors.remove(fi);
                if let IndexLabel::Summed(_) = x {
                    // Both occurrences of the id sit on this delta: frame trace.
                    m.coeff = qm_mul(&m.coeff, &CoefficientQm::affine_over(2, 0, 1));
                }
                return RuleOutcome::Changed;
            }
            if let (IndexLabel::Concrete(a), IndexLabel::Concrete(b)) = (x, y) {
                if a != b {
                    return RuleOutcome::Zero;
                }
            }
            // Substitute away a summed index whose partner lies in another
            // factor slot of this monomial.
            for (old, new) in [(x, y), (y, x)] {
                if let IndexLabel::Summed(id) = old {
                    if occ.get(&id) == Some(&2) {
                        m.factors.remove(fi);
                        let mut map = BTreeMap::new();
                        map.insert(IndexLabel::Summed(id), new);
                        for g in m.factors.iter_mut() {
                            *g = g.rename(&map);
                        }
                        return RuleOutcome::Changed;
                    }
                }
            }
        }
    }
    // Ricci trace.
    for (fi, f) in m.factors.iter().enumerate() {
        if let Ric(x, y) = *f {
            if x == y {
                if let IndexLabel::Summed(_) = x {
                    m.factors[fi] = ScalarS;
                    return RuleOutcome::Changed;
                }
            }
        }
    }
    // Riemann repeated summed index within one factor.
    for (fi, f) in m.factors.iter().enumerate() {
        if let Riem(a, b, c, d) = *f {
            let idx = [a, b, c, d];
            let mut rep: Option<(usize, usize)> = None;
            'outer: for p in 0..4 {
                for q in (p + 1)..4 {
                    if idx[p] == idx[q] {
                        if let IndexLabel::Summed(_) = idx[p] {
                            rep = Some((p, q));
                            break 'outer;
                        }
                    }
                }
            }
            if let Some((p, q)) = rep {
                let replacement = match (p, q) {
                    (0, 1) | (2, 3) => None,
                    (0, 2) => Some((Ric(idx[1], idx[3]), 1)),
                    (1, 3) => Some((Ric(idx[0], idx[2]), 1)),
                    (0, 3) => Some((Ric(idx[1], idx[2]), -1)),
                    (1, 2) => Some((Ric(idx[0], idx[3]), -1)),
                    _ => unreachable!(),
                };
                match replacement {
                    None => return RuleOutcome::Zero,
                    Some((ric, sign)) => {
                        m.factors[fi] = ric;
                        if sign < 0 {
                            m.coeff = m.coeff.neg();
                        }
                        return RuleOutcome::Changed;
                    }
                }
            }
        }
    }
    // Per-factor index normalization and factor sorting.
    let mut changed = false;
    for f in m.factors.iter_mut() {
        match f.normalize() {
            None => return RuleOutcome::Zero,
            Some((nf, sign)) => {
                if nf != *f {
                    *f = nf;
                    changed = true;
                }
                if sign < 0 {
                    m.coeff = m.coeff.neg();
                    changed = true;
                }
            }
        }
    }
    if !m.factors.is_sorted() {
        m.factors.sort();
        changed = true;
    }
    if changed {
        RuleOutcome::Changed
    } else {
        RuleOutcome::Unchanged
    }
}

/// Canonical renaming search for a closed monomial: over all renamings of
/// bound summed ids compatible with the signature grouping, pick the
/// lexicographically least (factors, then sign) after per-factor
/// normalization and sorting. Detects self-antisymmetric monomials (the same
/// minimal factor list reachable with both signs) as zero.
fn relabel_canonical(m: &TensorMonomial) -> Option<TensorMonomial> {
    let occ = m.occurrences();
    let bound: Vec<u32> = occ
        .iter()
        .filter(|&(_, &c)| c == 2)
        .map(|(&id, _)| id)
        .collect();
    if bound.is_empty() {
        let mut out = m.clone();
        out.factors.sort();
        return Some(out);
    }

    // Group ids by an invariant signature: the sorted multiset of
    // (factor kind, u-slot) homes.
    let mut sig: BTreeMap<u32, Vec<(u8, u8)>> = BTreeMap::new();
    for f in &m.factors {
        let kind: (u8, u8) = match f {
            U(s, _) => (0, *s),
            Xi(_) => (1, 0),
            Riem(..) => (2, 0),
            Ric(..) => (3, 0),
            Delta(..) => (4, 0),
            ScalarS => (5, 0),
        };
        for l in f.labels() {
            if let IndexLabel::Summed(id) = l {
                if occ[&id] == 2 {
                    sig.entry(id).or_default().push(kind);
                }
            }
        }
    }
    for v in sig.values_mut() {
        v.sort();
    }
    let mut groups: BTreeMap<Vec<(u8, u8)>, Vec<u32>> = BTreeMap::new();
    for id in &bound {
        groups.entry(sig[id].clone()).or_default().push(*id);
    }
    let group_list: Vec<Vec<u32>> = groups.into_values().collect();
    let total: usize = group_list.iter().map(|g| factorial(g.len())).product();
    assert!(total <= 1 << 16, "relabel search blowup: {total} assignments");

    // Target names are assigned in blocks per group, in group order.
    let mut block_start = Vec::new();
    let mut acc = 0u32;
    for g in &group_list {
        block_start.push(acc);
        acc += g.len() as u32;
    }

    let mut best: Option<(Vec<TensorFactor>, i8)> = None;
    let mut zero = false;
    let mut perm_state: Vec<Vec<usize>> = group_list
        .iter()
        .map(|g| (0..g.len()).collect())
        .collect();
    loop {
        // Build the renaming for the current permutation of each group.
        let mut map = BTreeMap::new();
        for (gi, g) in group_list.iter().enumerate() {
            for (pos, &idpos) in perm_state[gi].iter().enumerate() {
                map.insert(
                    IndexLabel::Summed(g[idpos]),
                    IndexLabel::Summed(CANON_BASE + block_start[gi] + pos as u32),
                );
            }
        }
        let mut sign: i8 = 1;
        let mut factors = Vec::with_capacity(m.factors.len());
        let mut dead = false;
        for f in &m.factors {
            match f.rename(&map).normalize() {
                None => {
                    dead = true;
                    break;
                }
                Some((nf, s)) => {
                    factors.push(nf);
                    sign *= s;
                }
            }
        }
        if !dead {
            factors.sort();
            match &best {
                None => best = Some((factors, sign)),
                Some((bf, bs)) => {
                    if factors < *bf {
                        best = Some((factors, sign));
                        zero = false;
                    } else if factors == *bf && sign != *bs {
                        zero = true;
                    }
                }
            }
        }
        if !next_assignment(&mut perm_state) {
            break;
        }
    }
    let (factors, sign) = best?;
    if zero {
        return None;
    }
    let coeff = if sign < 0 { m.coeff.neg() } else { m.coeff.clone() };
    Some(TensorMonomial { coeff, factors })
}

fn factorial(k: usize) -> usize {
    (1..=k).product::<usize>().max(1)
}

/// Advance a product-of-permutations state; false when exhausted.
fn next_assignment(state: &mut [Vec<usize>]) -> bool {
    for perm in state.iter_mut() {
        if next_permutation(perm) {
            return true;
        }
        // Reset this group and carry.
        let n = perm.len();
        perm.clear();
        perm.extend(0..n);
    }
    false
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// First-Bianchi elimination on a fully canonical closed monomial: if some
/// Riemann factor's arrangement has its second index larger than both last
/// ones, split per `R(w,z,x,y) = R(w,y,x,z) - R(w,x,y,z)`.
fn bianchi_split(m: &TensorMonomial) -> Option<(TensorMonomial, TensorMonomial)> {
    for (fi, f) in m.factors.iter().enumerate() {
        if let Riem(a, b, c, d) = *f {
            let distinct = {
                let mut v = [a, b, c, d];
                v.sort();
                v.windows(2).all(|w| w[0] != w[1])
            };
            if distinct && b > c && b > d {
                let mut m1 = m.clone();
                m1.factors[fi] = Riem(a, d, c, b);
                let mut m2 = m.clone();
                m2.factors[fi] = Riem(a, c, d, b);
                m2.coeff = m2.coeff.neg();
                return Some((m1, m2));
            }
        }
    }
    None
}

/// Full canonicalization of one monomial into a canonical polynomial.
///
/// Open summed ids (single occurrence in the factor list) are permitted when
/// `allow_open`; they are left untouched by renaming and Bianchi splitting is
/// skipped for factors carrying them. With `allow_open = false` an unpaired
/// id is an error.
pub fn canonicalize_monomial(
    mono: &TensorMonomial,
    allow_open: bool,
) -> Result<TensorPolynomial, TensorError> {
    let occ = mono.occurrences();
    for (&id, &c) in &occ {
        if c > 2 {
            return Err(TensorError::IndexOccursTooOften(id));
        }
        if c == 1 && !allow_open {
            return Err(TensorError::UnpairedIndex(id));
        }
    }
    if mono.coeff.is_zero() {
        return Ok(TensorPolynomial::zero());
    }
    let mut work = mono.clone();
    if let RuleOutcome::Zero = contract_fixpoint(&mut work) {
        return Ok(TensorPolynomial::zero());
    }
    if work.coeff.is_zero() {
        return Ok(TensorPolynomial::zero());
    }
    let has_open = work.occurrences().values().any(|&c| c == 1);
    if has_open {
        // Light normalization only; structural merging happens on equal raw
        // factor lists.
        return Ok(TensorPolynomial::from_monomial(work));
    }
    let canon = match relabel_canonical(&work) {
        None => return Ok(TensorPolynomial::zero()),
        Some(c) => c,
    };
    if let Some((m1, m2)) = bianchi_split(&canon) {
        let p1 = canonicalize_monomial(&m1, allow_open)?;
        let p2 = canonicalize_monomial(&m2, allow_open)?;
        return Ok(p1.add(&p2));
    }
    Ok(TensorPolynomial::from_monomial(canon))
}

/// Spec operation: canonicalize a closed monomial. Bianchi rewriting can
/// split one monomial into two, so the result is a polynomial.
pub fn canonicalize(mono: &TensorMonomial) -> Result<TensorPolynomial, TensorError> {
    canonicalize_monomial(mono, false)
}

/// Canonicalize every term and merge.
pub fn canonicalize_polynomial(
    p: &TensorPolynomial,
    allow_open: bool,
) -> Result<TensorPolynomial, TensorError> {
    let mut out = Vec::new();
    for t in &p.terms {
        out.extend(canonicalize_monomial(t, allow_open)?.terms);
    }
    Ok(merge_terms(out))
}

/// Rename the bound summed ids of a monomial to fresh ones; open ids are kept.
pub fn refresh_bound_ids(m: &TensorMonomial) -> TensorMonomial {
    let occ = m.occurrences();
    let mut map = BTreeMap::new();
    for (&id, &c) in &occ {
        if c == 2 {
            map.insert(IndexLabel::Summed(id), IndexLabel::fresh());
        }
    }
    TensorMonomial {
        coeff: m.coeff.clone(),
        factors: m.factors.iter().map(|f| f.rename(&map)).collect(),
    }
}

/// Product of tensor polynomials. Bound ids of each side are refreshed so the
/// two operands cannot collide accidentally; ids open on both sides refer to
/// the same index and contract across the product (that is how expressions
/// like `delta(a,b) * Ric(a,b) = s` are formed).
pub fn tp_mul(a: &TensorPolynomial, b: &TensorPolynomial) -> TensorPolynomial {
    let mut out = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            let fa = refresh_bound_ids(ta);
            let fb = refresh_bound_ids(tb);
            let mut factors = fa.factors.clone();
            factors.extend(fb.factors.iter().cloned());
            let mono = TensorMonomial::new(qm_mul(&fa.coeff, &fb.coeff), factors);
            match canonicalize_monomial(&mono, true) {
                Ok(p) => out.extend(p.terms),
                Err(e) => panic!("tp_mul produced an invalid monomial: {e}"),
            }
        }
    }
    merge_terms(out)
}

/// Symbolic prefactor tag carried by an invariant vector.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Prefactor {
    /// No prefactor (bare density).
    None,
    /// `Vol(S^{2m-1}) * tr[id]` = `(2 pi^m / Gamma(m)) * 2^m`.
    VolTr,
    /// Negated form of `VolTr`.
    NegVolTr,
}

impl Prefactor {
    pub fn render_plain(&self) -> &'static str {
        match self {
            Prefactor::None => "",
            Prefactor::VolTr => "2^m * (2 pi^m / Gamma(m))",
            Prefactor::NegVolTr => "-2^m * (2 pi^m / Gamma(m))",
        }
    }

    pub fn render_latex(&self) -> &'static str {
        match self {
            Prefactor::None => "",
            Prefactor::VolTr => r"2^{m}\frac{2\pi^{m}}{\Gamma(m)}",
            Prefactor::NegVolTr => r"-2^{m}\frac{2\pi^{m}}{\Gamma(m)}",
        }
    }
}

/// Number of basis invariants.
pub const BASIS_DIM: usize = 11;

/// Plain-text names of the 11 basis invariants, in the fixed order.
pub const BASIS_NAMES: [&str; BASIS_DIM] = [
    "s g(u1,u2)g(u3,u4)",
    "s g(u1,u3)g(u2,u4)",
    "s g(u1,u4)g(u2,u3)",
    "g(u1,u2)Ric(u3,u4)",
    "g(u3,u4)Ric(u1,u2)",
    "g(u1,u3)Ric(u2,u4)",
    "g(u2,u4)Ric(u1,u3)",
    "g(u1,u4)Ric(u2,u3)",
    "g(u2,u3)Ric(u1,u4)",
    "R(u1,u2,u3,u4)",
    "R(u1,u3,u2,u4)",
];

/// LaTeX names of the basis invariants.
pub const BASIS_NAMES_LATEX: [&str; BASIS_DIM] = [
    r"s\,g(u_1,u_2)g(u_3,u_4)",
    r"s\,g(u_1,u_3)g(u_2,u_4)",
    r"s\,g(u_1,u_4)g(u_2,u_3)",
    r"g(u_1,u_2)\mathrm{Ric}(u_3,u_4)",
    r"g(u_3,u_4)\mathrm{Ric}(u_1,u_2)",
    r"g(u_1,u_3)\mathrm{Ric}(u_2,u_4)",
    r"g(u_2,u_4)\mathrm{Ric}(u_1,u_3)",
    r"g(u_1,u_4)\mathrm{Ric}(u_2,u_3)",
    r"g(u_2,u_3)\mathrm{Ric}(u_1,u_4)",
    r"R(u_1,u_2,u_3,u_4)",
    r"R(u_1,u_3,u_2,u_4)",
];

/// Exact coefficients over the fixed basis, plus a symbolic prefactor tag.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InvariantVector {
    pub coefficients: [CoefficientQm; BASIS_DIM],
    pub prefactor: Prefactor,
}

impl InvariantVector {
    pub fn zero() -> Self {
        InvariantVector {
            coefficients: std::array::from_fn(|_| CoefficientQm::zero()),
            prefactor: Prefactor::None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.prefactor, other.prefactor, "prefactor mismatch in sum");
        InvariantVector {
            coefficients: std::array::from_fn(|i| {
                qm_add(&self.coefficients[i], &other.coefficients[i])
            }),
            prefactor: self.prefactor,
        }
    }

    pub fn scale(&self, c: &CoefficientQm) -> Self {
        InvariantVector {
            coefficients: std::array::from_fn(|i| qm_mul(&self.coefficients[i], c)),
            prefactor: self.prefactor,
        }
    }

    pub fn with_prefactor(mut self, p: Prefactor) -> Self {
        self.prefactor = p;
        self
    }
}

/// Build the canonical form of basis element `slot` (0-based).
fn basis_monomial(slot: usize) -> TensorMonomial {
    let a = IndexLabel::fresh();
    let b = IndexLabel::fresh();
    let c = IndexLabel::fresh();
    let d = IndexLabel::fresh();
    let one = CoefficientQm::one();
    let f = match slot {
        0 => vec![ScalarS, U(1, a), U(2, a), U(3, b), U(4, b)],
        1 => vec![ScalarS, U(1, a), U(3, a), U(2, b), U(4, b)],
        2 => vec![ScalarS, U(1, a), U(4, a), U(2, b), U(3, b)],
        3 => vec![U(1, a), U(2, a), Ric(c, d), U(3, c), U(4, d)],
        4 => vec![U(3, a), U(4, a), Ric(c, d), U(1, c), U(2, d)],
        5 => vec![U(1, a), U(3, a), Ric(c, d), U(2, c), U(4, d)],
        6 => vec![U(2, a), U(4, a), Ric(c, d), U(1, c), U(3, d)],
        7 => vec![U(1, a), U(4, a), Ric(c, d), U(2, c), U(3, d)],
        8 => vec![U(2, a), U(3, a), Ric(c, d), U(1, c), U(4, d)],
        9 => vec![Riem(a, b, c, d), U(1, a), U(2, b), U(3, c), U(4, d)],
        10 => vec![Riem(a, b, c, d), U(1, a), U(3, b), U(2, c), U(4, d)],
        _ => unreachable!(),
    };
    TensorMonomial::new(one, f)
}

/// Canonical factor lists of the 11 basis elements.
fn basis_table() -> Vec<Vec<TensorFactor>> {
    let mut table = Vec::with_capacity(BASIS_DIM);
    for slot in 0..BASIS_DIM {
        let p = canonicalize(&basis_monomial(slot)).expect("basis canonicalization");
        assert_eq!(p.terms.len(), 1, "basis element {slot} did not stay a single monomial");
        assert!(p.terms[0].coeff.is_one(), "basis element {slot} picked up a sign");
        table.push(p.terms[0].factors.clone());
    }
    let mut sorted = table.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), BASIS_DIM, "basis canonical forms collide");
    table
}

/// Project a closed polynomial onto the invariant basis.
///
/// Every canonical monomial must match one of the 11 basis patterns exactly;
/// anything else reports `UnrecognizedInvariant` with the offending monomial
/// rendered.
pub fn project_to_basis(p: &TensorPolynomial) -> Result<InvariantVector, TensorError> {
    let canon = canonicalize_polynomial(p, false)?;
    let table = basis_table();
    let mut out = InvariantVector::zero();
    for t in &canon.terms {
        match table.iter().position(|fs| *fs == t.factors) {
            Some(slot) => {
                out.coefficients[slot] = qm_add(&out.coefficients[slot], &t.coeff);
            }
            None => {
                return Err(TensorError::UnrecognizedInvariant(render_monomial(t)));
            }
        }
    }
    Ok(out)
}

/// Human-readable monomial rendering with stable local index names.
pub fn render_monomial(m: &TensorMonomial) -> String {
    let mut names: BTreeMap<IndexLabel, String> = BTreeMap::new();
    let mut alphabet = ('a'..='z').map(|c| c.to_string());
    let mut name = |l: IndexLabel, names: &mut BTreeMap<IndexLabel, String>| -> String {
        match l {
            IndexLabel::Concrete(v) => format!("{v}"),
            IndexLabel::XiSlot(v) => format!("xi{v}"),
            IndexLabel::Summed(_) => names
                .entry(l)
                .or_insert_with(|| alphabet.next().unwrap_or_else(|| "z?".into()))
                .clone(),
        }
    };
    let mut parts = vec![format!("{}", m.coeff)];
    for f in &m.factors {
        let s = match *f {
            U(slot, i) => format!("u{slot}_{}", name(i, &mut names)),
            Xi(i) => format!("xi_{}", name(i, &mut names)),
            Riem(a, b, c, d) => format!(
                "R({},{},{},{})",
                name(a, &mut names),
                name(b, &mut names),
                name(c, &mut names),
                name(d, &mut names)
            ),
            Ric(a, b) => format!("Ric({},{})", name(a, &mut names), name(b, &mut names)),
            Delta(a, b) => format!("delta({},{})", name(a, &mut names), name(b, &mut names)),
            ScalarS => "s".to_string(),
        };
        parts.push(s);
    }
    parts.join(" ")
}

pub fn render_polynomial(p: &TensorPolynomial) -> String {
    if p.terms.is_empty() {
        return "0".to_string();
    }
    p.terms
        .iter()
        .map(render_monomial)
        .collect::<Vec<_>>()
        .join("  +  ")
}

impl fmt::Display for TensorMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_monomial(self))
    }
}

impl fmt::Display for TensorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_polynomial(self))
    }
}
