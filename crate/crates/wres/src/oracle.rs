//! Dense-matrix numeric oracle. Everything here is evaluated with floating
//! point gamma matrices and random curvature tensors, independently of the
//! symbolic engine: per-item values are recomputed directly from cached
//! matrix traces and cosphere moments, then compared against the symbolic
//! vectors evaluated on the same random data.

use crate::clifford::{CliffordGenerator, CliffordPolynomial};
use crate::coefficients::{qm_eval, ratio_to_f64, CoeffError};
use crate::functionals::{compute_p, compute_q, EngineError};
use crate::tensor::{IndexLabel, TensorFactor, TensorMonomial, TensorPolynomial, BASIS_DIM};
use ndarray::{Array1, Array2, Array4};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("numeric evaluation cannot handle {0}")]
    Unsupported(String),
    #[error("expected a real value, got imaginary part in {0}")]
    NotReal(String),
}

/// Gamma matrix representation: 2m anticommuting matrices of size 2^m with
/// square -id, built from Pauli blocks.
pub struct GammaRep {
    pub m: usize,
    pub n: usize,
    pub dim: usize,
    pub gs: Vec<Array2<Complex64>>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli(k: usize) -> Array2<Complex64> {
    match k {
        0 => Array2::from_shape_vec((2, 2), vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        1 => Array2::from_shape_vec((2, 2), vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        2 => Array2::from_shape_vec((2, 2), vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        _ => Array2::from_shape_vec((2, 2), vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
    .unwrap()
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Build the representation for half-dimension m.
pub fn gamma_rep(m: usize) -> GammaRep {
    assert!((1..=3).contains(&m), "gamma representation limited to m in 1..=3");
    let mut gs = Vec::new();
    for k in 1..=m {
        for p in [1usize, 2] {
            let mut mat = Array2::from_shape_vec((1, 1), vec![c(1., 0.)]).unwrap();
            for _ in 0..k - 1 {
                mat = kron(&mat, &pauli(3));
            }
            mat = kron(&mat, &pauli(p));
            for _ in 0..m - k {
                mat = kron(&mat, &pauli(0));
            }
            gs.push(mat.mapv(|z| z * c(0., 1.)));
        }
    }
    GammaRep {
        m,
        n: 2 * m,
        dim: 1usize << m,
        gs,
    }
}

/// Normalized trace of a matrix product: tr[prod] / tr[id].
pub fn numeric_trace(rep: &GammaRep, mats: &[&Array2<Complex64>]) -> Complex64 {
    let mut prod = Array2::<Complex64>::eye(rep.dim);
    for m in mats {
        prod = prod.dot(*m);
    }
    let mut tr = c(0., 0.);
    for i in 0..rep.dim {
        tr += prod[[i, i]];
    }
    tr / c(rep.dim as f64, 0.)
}

fn trace_dot(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    let (r, _) = a.dim();
    let mut tr = c(0., 0.);
    for i in 0..r {
        for j in 0..r {
            tr += a[[i, j]] * b[[j, i]];
        }
    }
    tr
}

/// One random evaluation point: a curvature tensor with all four classical
/// symmetries, its contractions, and four direction vectors.
pub struct DrawData {
    pub riem: Array4<f64>,
    pub ric: Array2<f64>,
    pub s: f64,
    pub us: [Array1<f64>; 4],
}

/// Random curvature with pair antisymmetry, pair exchange symmetry, and the
/// first cyclic identity enforced by projection.
pub fn random_curvature(n: usize, rng: &mut ChaCha8Rng) -> Array4<f64> {
    let mut a = Array4::<f64>::zeros((n, n, n, n));
    for idx in a.iter_mut() {
        *idx = rng.gen_range(-1.0..1.0);
    }
    let perm = |t: &Array4<f64>, p: [usize; 4]| -> Array4<f64> {
        let mut out = Array4::<f64>::zeros((n, n, n, n));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let src = [i, j, k, l];
                        out[[src[p[0]], src[p[1]], src[p[2]], src[p[3]]]] = t[[i, j, k, l]];
                    }
                }
            }
        }
        out
    };
    // Antisymmetrize both pairs, symmetrize the pair exchange.
    let a1 = perm(&a, [1, 0, 2, 3]);
    a = (a - a1) * 0.5;
    let a2 = perm(&a, [0, 1, 3, 2]);
    a = (a - a2) * 0.5;
    let a3 = perm(&a, [2, 3, 0, 1]);
    a = (a + a3) * 0.5;
    // First cyclic identity: subtract a third of the cyclic sum over the
    // last three slots.
    let c1 = perm(&a, [0, 2, 3, 1]);
    let c2 = perm(&a, [0, 3, 1, 2]);
    let b = &a - &((&a + &c1 + &c2) / 3.0);
    b
}

pub fn random_draw(n: usize, rng: &mut ChaCha8Rng) -> DrawData {
    let riem = random_curvature(n, rng);
    let mut ric = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let mut v = 0.0;
            for l in 0..n {
                v += riem[[l, a, l, b]];
            }
            ric[[a, b]] = v;
        }
    }
    let s = (0..n).map(|a| ric[[a, a]]).sum();
    let mut mk = || Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0)));
    let us = [mk(), mk(), mk(), mk()];
    DrawData { riem, ric, s, us }
}

fn dfact(k: i64) -> f64 {
    let mut v = 1.0;
    let mut x = k;
    while x > 1 {
        v *= x as f64;
        x -= 2;
    }
    v
}

/// Cosphere average of a xi monomial: product of (count-1)!! over the
/// pairing counts, divided by prod_k (n + 2k).
pub fn moment_value(idx: &[usize], n: usize) -> f64 {
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let mut counts: BTreeMap<usize, i64> = BTreeMap::new();
    for &i in idx {
        *counts.entry(i).or_insert(0) += 1;
    }
    if counts.values().any(|&c| c % 2 == 1) {
        return 0.0;
    }
    let half = (idx.len() / 2) as i64;
    let num: f64 = counts.values().map(|&c| dfact(c - 1)).product();
    let den: f64 = (0..half).map(|k| (n as i64 + 2 * k) as f64).product();
    num / den
}

/// Values of the 11 basis invariants at a draw.
pub fn basis_values(d: &DrawData) -> [f64; BASIS_DIM] {
    let g = |i: usize, j: usize| d.us[i].dot(&d.us[j]);
    let rc = |i: usize, j: usize| {
        let n = d.us[i].len();
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                v += d.us[i][a] * d.ric[[a, b]] * d.us[j][b];
            }
        }
        v
    };
    let r4 = |p: [usize; 4]| {
        let n = d.us[0].len();
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for e in 0..n {
                        v += d.riem[[a, b, cc, e]]
                            * d.us[p[0]][a]
                            * d.us[p[1]][b]
                            * d.us[p[2]][cc]
                            * d.us[p[3]][e];
                    }
                }
            }
        }
        v
    };
    [
        d.s * g(0, 1) * g(2, 3),
        d.s * g(0, 2) * g(1, 3),
        d.s * g(0, 3) * g(1, 2),
        g(0, 1) * rc(2, 3),
        g(2, 3) * rc(0, 1),
        g(0, 2) * rc(1, 3),
        g(1, 3) * rc(0, 2),
        g(0, 3) * rc(1, 2),
        g(1, 2) * rc(0, 3),
        // R(u1,u2,u3,u4) then R(u1,u3,u2,u4).
        r4([0, 1, 2, 3]),
        {
            let n = d.us[0].len();
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for cc in 0..n {
                        for e in 0..n {
                            v += d.riem[[a, cc, b, e]]
                                * d.us[0][a]
                                * d.us[1][b]
                                * d.us[2][cc]
                                * d.us[3][e];
                        }
                    }
                }
            }
            v
        },
    ]
}

/// Evaluate a basis vector's coefficients at integer m and dot with the
/// numeric basis values. Coefficients must be real.
pub fn eval_vector(
    v: &crate::tensor::InvariantVector,
    m_value: i64,
    basis: &[f64; BASIS_DIM],
) -> Result<f64, OracleError> {
    let mut acc = 0.0;
    for (slot, coeff) in v.coefficients.iter().enumerate() {
        let g = qm_eval(coeff, m_value)?;
        if !g.im.is_zero() {
            return Err(OracleError::NotReal(format!("slot {slot}: {coeff}")));
        }
        acc += ratio_to_f64(&g.re) * basis[slot];
    }
    Ok(acc)
}

/// Cached normalized traces of the slot words with zero, one, or two
/// appended frame generators.
pub struct TraceTables {
    pub t_base: Complex64,
    pub t0: Vec<Vec<Complex64>>,
    pub t1: Vec<Vec<Vec<Vec<Complex64>>>>,
}

pub fn trace_tables(rep: &GammaRep, d: &DrawData) -> TraceTables {
    let n = rep.n;
    let us: Vec<Array2<Complex64>> = d
        .us
        .iter()
        .map(|u| {
            let mut mat = Array2::<Complex64>::zeros((rep.dim, rep.dim));
            for a in 0..n {
                mat = mat + rep.gs[a].mapv(|z| z * c(u[a], 0.));
            }
            mat
        })
        .collect();
    let u01 = us[0].dot(&us[1]);
    let u23 = us[2].dot(&us[3]);
    let t_base = {
        let v = trace_dot(&u01, &u23);
        v / c(rep.dim as f64, 0.)
    };
    let mut t0 = vec![vec![c(0., 0.); n]; n];
    let mut t1 = vec![vec![vec![vec![c(0., 0.); n]; n]; n]; n];
    for f in 0..n {
        let pf = u01.dot(&rep.gs[f]).dot(&u23);
        for g in 0..n {
            let pfg = pf.dot(&rep.gs[g]);
            t0[f][g] = trace_dot(&pf, &rep.gs[g]) / c(rep.dim as f64, 0.);
            for s in 0..n {
                let pfgs = pfg.dot(&rep.gs[s]);
                for t in 0..n {
                    t1[f][g][s][t] = trace_dot(&pfgs, &rep.gs[t]) / c(rep.dim as f64, 0.);
                }
            }
        }
    }
    TraceTables { t_base, t0, t1 }
}

/// Direct numeric values of every item, computed from the trace tables and
/// moments without consulting the symbolic engine.
pub fn direct_items(rep: &GammaRep, d: &DrawData, tt: &TraceTables) -> Vec<(String, f64)> {
    let n = rep.n;
    let m = rep.m as f64;
    let mut out: Vec<(String, f64)> = Vec::new();
    let real = |z: Complex64| z.re;

    // First functional items.
    let mut ric_mom = 0.0;
    for a in 0..n {
        ric_mom += d.ric[[a, a]] * moment_value(&[a, a], n);
    }
    let i1 = (m * (m - 1.0) / 3.0) * ric_mom * real(tt.t_base);
    // Four-slot word followed by the two connection generators, diagonal
    // curvature slots forced by the second moment.
    let u_mats: Vec<Array2<Complex64>> = (0..4).map(|s| dense_u(rep, d, s)).collect();
    let p4 = u_mats[0].dot(&u_mats[1]).dot(&u_mats[2]).dot(&u_mats[3]);
    let mut i2 = 0.0;
    for s in 0..n {
        let p4s = p4.dot(&rep.gs[s]);
        for t in 0..n {
            let tr = (trace_dot(&p4s, &rep.gs[t]) / c(rep.dim as f64, 0.)).re;
            for a in 0..n {
                let mom = moment_value(&[a, a], n);
                i2 += -(m * (m - 1.0) / 4.0) * d.riem[[a, a, t, s]] * mom * tr;
            }
        }
    }
    let i3 = -((m - 1.0) / 4.0) * d.s * real(tt.t_base);
    out.push(("I-1".into(), i1));
    out.push(("I-2".into(), i2));
    out.push(("I-3".into(), i3));
    out.push(("P-density".into(), i1 + i2 + i3));

    // Second functional items.
    let mut ii1 = 0.0;
    for j in 0..n {
        for p in 0..n {
            for s in 0..n {
                for t in 0..n {
                    ii1 += (1.0 / 8.0) * d.riem[[j, p, t, s]] * real(tt.t1[j][p][s][t]);
                }
            }
        }
    }
    let mut ii3a = 0.0;
    let mut ii3b = 0.0;
    let mut ii3c = 0.0;
    for f in 0..n {
        for g in 0..n {
            let t0fg = real(tt.t0[f][g]);
            ii3c += (m / 4.0) * d.s * moment_value(&[f, g], n) * t0fg;
            for a in 0..n {
                for b in 0..n {
                    let mom4 = moment_value(&[f, g, a, b], n);
                    if mom4 == 0.0 {
                        continue;
                    }
                    ii3a += -(m * (m + 1.0) / 3.0) * d.ric[[a, b]] * mom4 * t0fg;
                    for t in 0..n {
                        for s in 0..n {
                            ii3b += (m * (m + 1.0) / 4.0)
                                * d.riem[[b, a, t, s]]
                                * mom4
                                * real(tt.t1[f][g][s][t]);
                        }
                    }
                }
            }
        }
    }
    let ii3 = ii3a + ii3b + ii3c;
    let mut ii4a = 0.0;
    let mut ii4b = 0.0;
    for j in 0..n {
        for a in 0..n {
            for g in 0..n {
                let mom2 = moment_value(&[a, g], n);
                if mom2 == 0.0 {
                    continue;
                }
                let pair0 = real(tt.t0[j][g]) + real(tt.t0[g][j]);
                ii4a += (2.0 * m / 3.0) * d.ric[[a, j]] * mom2 * pair0;
                for s in 0..n {
                    for t in 0..n {
                        ii4b += -(m / 4.0)
                            * d.riem[[j, a, t, s]]
                            * mom2
                            * (real(tt.t1[j][g][s][t]) + real(tt.t1[g][j][s][t]));
                    }
                }
            }
        }
    }
    let ii4 = ii4a + ii4b;
    let mut ii6 = 0.0;
    for j in 0..n {
        for l in 0..n {
            let pair0 = real(tt.t0[l][j]) + real(tt.t0[j][l]);
            for a in 0..n {
                for b in 0..n {
                    let mom2 = moment_value(&[a, b], n);
                    if mom2 == 0.0 {
                        continue;
                    }
                    ii6 += -(m / 6.0)
                        * (d.riem[[a, l, b, j]] + d.riem[[a, j, b, l]])
                        * mom2
                        * pair0;
                }
            }
        }
    }
    out.push(("II-1".into(), ii1));
    out.push(("II-2".into(), 0.0));
    out.push(("II-3-A".into(), ii3a));
    out.push(("II-3-B".into(), ii3b));
    out.push(("II-3-C".into(), ii3c));
    out.push(("II-3".into(), ii3));
    out.push(("II-4-A".into(), ii4a));
    out.push(("II-4-B".into(), ii4b));
    out.push(("II-4".into(), ii4));
    out.push(("II-5".into(), 0.0));
    out.push(("II-6".into(), ii6));
    out.push(("Q-density".into(), ii1 + ii3 + ii4 + ii6));
    out
}

fn dense_u(rep: &GammaRep, d: &DrawData, slot: usize) -> Array2<Complex64> {
    let mut mat = Array2::<Complex64>::zeros((rep.dim, rep.dim));
    for a in 0..rep.n {
        mat = mat + rep.gs[a].mapv(|z| z * c(d.us[slot][a], 0.));
    }
    mat
}

/// Numeric value of a tensor polynomial at a draw: abstract summed indices
/// are enumerated over the frame, slot vectors read the draw's directions.
pub fn eval_tensor_polynomial(
    p: &TensorPolynomial,
    d: &DrawData,
    m_value: i64,
) -> Result<Complex64, OracleError> {
    let n = d.us[0].len();
    let mut total = c(0., 0.);
    for mono in &p.terms {
        total += eval_tensor_monomial(mono, d, n, m_value)?;
    }
    Ok(total)
}

fn label_slots(factors: &[TensorFactor]) -> Vec<IndexLabel> {
    let mut labels = Vec::new();
    let mut push = |l: &IndexLabel| {
        if let IndexLabel::Summed(_) = l {
            if !labels.contains(l) {
                labels.push(*l);
            }
        }
    };
    for f in factors {
        match f {
            TensorFactor::U(_, l) | TensorFactor::Xi(l) => push(l),
            TensorFactor::Delta(a, b) | TensorFactor::Ric(a, b) => {
                push(a);
                push(b);
            }
            TensorFactor::Riem(a, b, cc, e) => {
                push(a);
                push(b);
                push(cc);
                push(e);
            }
            TensorFactor::ScalarS => {}
        }
    }
    labels
}

fn resolve(l: &IndexLabel, assign: &BTreeMap<IndexLabel, usize>) -> Result<usize, OracleError> {
    match l {
        IndexLabel::Concrete(k) => Ok(*k as usize),
        IndexLabel::Summed(_) => assign
            .get(l)
            .copied()
            .ok_or_else(|| OracleError::Unsupported("unbound summed index".into())),
        IndexLabel::XiSlot(_) => Err(OracleError::Unsupported(
            "xi placeholder outside the integrand".into(),
        )),
    }
}

fn eval_tensor_monomial(
    mono: &TensorMonomial,
    d: &DrawData,
    n: usize,
    m_value: i64,
) -> Result<Complex64, OracleError> {
    let g = qm_eval(&mono.coeff, m_value)?;
    let coeff = c(ratio_to_f64(&g.re), ratio_to_f64(&g.im));
    let labels = label_slots(&mono.factors);
    let mut assign: BTreeMap<IndexLabel, usize> = BTreeMap::new();
    let mut total = c(0., 0.);
    let mut counter = vec![0usize; labels.len()];
    loop {
        for (i, l) in labels.iter().enumerate() {
            assign.insert(*l, counter[i]);
        }
        let mut v = 1.0;
        for f in &mono.factors {
            v *= match f {
                TensorFactor::U(slot, l) => d.us[(*slot - 1) as usize][resolve(l, &assign)?],
                TensorFactor::Xi(_) => {
                    return Err(OracleError::Unsupported("xi factor".into()))
                }
                TensorFactor::Delta(a, b) => {
                    if resolve(a, &assign)? == resolve(b, &assign)? {
                        1.0
                    } else {
                        0.0
                    }
                }
                TensorFactor::Ric(a, b) => d.ric[[resolve(a, &assign)?, resolve(b, &assign)?]],
                TensorFactor::Riem(a, b, cc, e) => d.riem[[
                    resolve(a, &assign)?,
                    resolve(b, &assign)?,
                    resolve(cc, &assign)?,
                    resolve(e, &assign)?,
                ]],
                TensorFactor::ScalarS => d.s,
            };
            if v == 0.0 {
                break;
            }
        }
        total += coeff * c(v, 0.);
        // Odometer over the assignments.
        let mut pos = 0;
        loop {
            if pos == labels.len() {
                return Ok(total);
            }
            counter[pos] += 1;
            if counter[pos] < n {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
    }
}

/// Dense value of a Clifford polynomial's normalized trace: summed labels
/// in generators and coefficients are enumerated, slot and frame generators
/// become matrices, and the product trace is taken per assignment.
pub fn eval_clifford_dense(
    rep: &GammaRep,
    d: &DrawData,
    p: &CliffordPolynomial,
    m_value: i64,
) -> Result<Complex64, OracleError> {
    let n = rep.n;
    let us: Vec<Array2<Complex64>> = (0..4).map(|s| dense_u(rep, d, s)).collect();
    let mut total = c(0., 0.);
    for word in &p.terms {
        let mut labels = label_slots(&word.coeff.factors);
        for gen in &word.generators {
            match gen {
                CliffordGenerator::BasisVec(l) | CliffordGenerator::DxVec(l) => {
                    if let IndexLabel::Summed(_) = l {
                        if !labels.contains(l) {
                            labels.push(*l);
                        }
                    }
                }
                CliffordGenerator::SlotVec(_) => {}
                CliffordGenerator::XiVec => {
                    return Err(OracleError::Unsupported("xi generator".into()))
                }
            }
        }
        let gq = qm_eval(&word.coeff.coeff, m_value)?;
        let coeff = c(ratio_to_f64(&gq.re), ratio_to_f64(&gq.im));
        let mut counter = vec![0usize; labels.len()];
        let mut assign: BTreeMap<IndexLabel, usize> = BTreeMap::new();
        'outer: loop {
            for (i, l) in labels.iter().enumerate() {
                assign.insert(*l, counter[i]);
            }
            let mut v = 1.0;
            for f in &word.coeff.factors {
                v *= match f {
                    TensorFactor::U(slot, l) => d.us[(*slot - 1) as usize][resolve(l, &assign)?],
                    TensorFactor::Xi(_) => {
                        return Err(OracleError::Unsupported("xi factor".into()))
                    }
                    TensorFactor::Delta(a, b) => {
                        if resolve(a, &assign)? == resolve(b, &assign)? {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    TensorFactor::Ric(a, b) => d.ric[[resolve(a, &assign)?, resolve(b, &assign)?]],
                    TensorFactor::Riem(a, b, cc, e) => d.riem[[
                        resolve(a, &assign)?,
                        resolve(b, &assign)?,
                        resolve(cc, &assign)?,
                        resolve(e, &assign)?,
                    ]],
                    TensorFactor::ScalarS => d.s,
                };
            }
            if v != 0.0 {
                let mut mats: Vec<&Array2<Complex64>> = Vec::new();
                for gen in &word.generators {
                    match gen {
                        CliffordGenerator::SlotVec(s) => mats.push(&us[(*s - 1) as usize]),
                        CliffordGenerator::BasisVec(l) | CliffordGenerator::DxVec(l) => {
                            mats.push(&rep.gs[resolve(l, &assign)?])
                        }
                        CliffordGenerator::XiVec => unreachable!(),
                    }
                }
                total += coeff * c(v, 0.) * numeric_trace(rep, &mats);
            }
            let mut pos = 0;
            loop {
                if pos == labels.len() {
                    break 'outer;
                }
                counter[pos] += 1;
                if counter[pos] < n {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
        }
    }
    Ok(total)
}

/// Memoized products of generator matrices, keyed by the sequence of slot
/// numbers (negative) and frame indices (non-negative).
pub struct ProductCache {
    dim: usize,
    map: std::collections::HashMap<Vec<i16>, Array2<Complex64>>,
}

impl ProductCache {
    pub fn new(dim: usize) -> Self {
        ProductCache {
            dim,
            map: std::collections::HashMap::new(),
        }
    }

    fn product(
        &mut self,
        key: &[i16],
        us: &[Array2<Complex64>],
        gs: &[Array2<Complex64>],
    ) -> Array2<Complex64> {
        if key.is_empty() {
            return Array2::eye(self.dim);
        }
        if let Some(p) = self.map.get(key) {
            return p.clone();
        }
        let head = self.product(&key[..key.len() - 1], us, gs);
        let last = key[key.len() - 1];
        let mat = if last < 0 {
            &us[(-last - 1) as usize]
        } else {
            &gs[last as usize]
        };
        let p = head.dot(mat);
        self.map.insert(key.to_vec(), p.clone());
        p
    }

    pub fn trace(
        &mut self,
        key: &[i16],
        us: &[Array2<Complex64>],
        gs: &[Array2<Complex64>],
    ) -> Complex64 {
        let p = self.product(key, us, gs);
        let mut tr = c(0., 0.);
        for i in 0..self.dim {
            tr += p[[i, i]];
        }
        tr / c(self.dim as f64, 0.)
    }
}

/// Numeric value of a composed symbol at x0: summed labels are enumerated
/// over the frame, xi labels are averaged by the closed-form moment, and
/// each word becomes a dense matrix product trace. This path shares only
/// the composition output with the symbolic pipeline; trace, integration,
/// and projection are all replaced by dense arithmetic.
pub fn numeric_integrand(
    rep: &GammaRep,
    d: &DrawData,
    expr: &crate::symbols::SymbolExpr,
    m_value: i64,
    cache: &mut ProductCache,
) -> Result<f64, OracleError> {
    use crate::symbols::SymbolTerm;
    let n = rep.n;
    let us: Vec<Array2<Complex64>> = (0..4).map(|s| dense_u(rep, d, s)).collect();
    let mut total = c(0., 0.);
    for term in &expr.terms {
        total += numeric_term(rep, d, term, m_value, n, &us, cache)?;
    }
    fn numeric_term(
        rep: &GammaRep,
        d: &DrawData,
        term: &SymbolTerm,
        m_value: i64,
        n: usize,
        us: &[Array2<Complex64>],
        cache: &mut ProductCache,
    ) -> Result<Complex64, OracleError> {
        if !term.x_mon.is_empty() || !term.w_factors.is_empty() || !term.du_factors.is_empty() {
            return Err(OracleError::Unsupported(
                "integrand term carries Taylor data away from x0".into(),
            ));
        }
        let gq = qm_eval(&term.tensor.coeff, m_value)?;
        let coeff = c(ratio_to_f64(&gq.re), ratio_to_f64(&gq.im));
        // Summed labels from factors, xi monomial, and word generators; one
        // synthetic xi label per contracted xi generator.
        let mut labels = label_slots(&term.tensor.factors);
        let add = |l: &IndexLabel, labels: &mut Vec<IndexLabel>| {
            if let IndexLabel::Summed(_) = l {
                if !labels.contains(l) {
                    labels.push(*l);
                }
            }
        };
        for l in &term.xi_mon {
            add(l, &mut labels);
        }
        let mut word_syms: Vec<Option<IndexLabel>> = Vec::new();
        let mut xi_synthetic: Vec<IndexLabel> = Vec::new();
        for gen in &term.word {
            match gen {
                CliffordGenerator::BasisVec(l) | CliffordGenerator::DxVec(l) => {
                    add(l, &mut labels);
                    word_syms.push(Some(*l));
                }
                CliffordGenerator::SlotVec(_) => word_syms.push(None),
                CliffordGenerator::XiVec => {
                    let fresh = IndexLabel::fresh();
                    labels.push(fresh);
                    xi_synthetic.push(fresh);
                    word_syms.push(Some(fresh));
                }
            }
        }
        let mut counter = vec![0usize; labels.len()];
        let mut assign: BTreeMap<IndexLabel, usize> = BTreeMap::new();
        let mut acc = c(0., 0.);
        'outer: loop {
            for (i, l) in labels.iter().enumerate() {
                assign.insert(*l, counter[i]);
            }
            // Moment of the xi monomial including contracted xi generators.
            let mut xi_idx: Vec<usize> = Vec::new();
            for l in &term.xi_mon {
                xi_idx.push(resolve(l, &assign)?);
            }
            for l in &xi_synthetic {
                xi_idx.push(resolve(l, &assign)?);
            }
            let mom = moment_value(&xi_idx, n);
            if mom != 0.0 {
                let mut v = mom;
                for f in &term.tensor.factors {
                    v *= match f {
                        TensorFactor::U(slot, l) => {
                            d.us[(*slot - 1) as usize][resolve(l, &assign)?]
                        }
                        TensorFactor::Xi(_) => {
                            return Err(OracleError::Unsupported(
                                "xi tensor factor in a word integrand".into(),
                            ))
                        }
                        TensorFactor::Delta(a, b) => {
                            if resolve(a, &assign)? == resolve(b, &assign)? {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        TensorFactor::Ric(a, b) => {
                            d.ric[[resolve(a, &assign)?, resolve(b, &assign)?]]
                        }
                        TensorFactor::Riem(a, b, cc, e) => d.riem[[
                            resolve(a, &assign)?,
                            resolve(b, &assign)?,
                            resolve(cc, &assign)?,
                            resolve(e, &assign)?,
                        ]],
                        TensorFactor::ScalarS => d.s,
                    };
                    if v == 0.0 {
                        break;
                    }
                }
                if v != 0.0 {
                    let mut key: Vec<i16> = Vec::with_capacity(term.word.len());
                    for (gen, sym) in term.word.iter().zip(&word_syms) {
                        match (gen, sym) {
                            (CliffordGenerator::SlotVec(s), None) => key.push(-(*s as i16)),
                            (_, Some(l)) => key.push(resolve(l, &assign)? as i16),
                            _ => unreachable!(),
                        }
                    }
                    acc += c(v, 0.) * cache.trace(&key, us, &rep.gs);
                }
            }
            let mut pos = 0;
            loop {
                if pos == labels.len() {
                    break 'outer;
                }
                counter[pos] += 1;
                if counter[pos] < n {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
        }
        Ok(coeff * acc)
    }
    if total.im.abs() > 1e-9 {
        return Err(OracleError::NotReal(format!(
            "integrand value {total} has an imaginary part"
        )));
    }
    Ok(total.re)
}

/// Evaluate one functional's density at a draw from its pre-integration
/// item symbols.
pub fn numeric_functional(
    name: crate::functionals::FunctionalName,
    d: &DrawData,
    m: usize,
) -> Result<f64, OracleError> {
    let r = match name {
        crate::functionals::FunctionalName::P => compute_p()?,
        crate::functionals::FunctionalName::Q => compute_q()?,
    };
    let rep = gamma_rep(m);
    let mut cache = ProductCache::new(rep.dim);
    let mut total = 0.0;
    for item in &r.items {
        // Top-level items only; sub-items would double-count.
        if matches!(item.tag.as_str(), "I-1" | "I-2" | "I-3" | "II-1" | "II-2" | "II-3" | "II-4" | "II-5" | "II-6") {
            total += numeric_integrand(&rep, d, &item.expr, m as i64, &mut cache)?;
        }
    }
    Ok(total)
}

/// One line of the cross-check: an item, its symbolic value at the draw,
/// the direct dense value, and their relative deviation.
#[derive(Clone, Debug)]
pub struct CrossCheckLine {
    pub tag: String,
    pub symbolic: f64,
    pub direct: f64,
    pub rel: f64,
}

/// Outcome of the full numeric cross-check at one half-dimension.
pub struct OracleOutcome {
    pub m: usize,
    pub draws: usize,
    pub max_rel: f64,
    pub ok: bool,
    pub worst: Vec<CrossCheckLine>,
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / f64::max(1.0, b.abs())
}

/// Evaluate every item of both functionals three ways at random draws: the
/// projected symbolic vector on the numeric basis, the engine's own
/// pre-integration symbol evaluated densely, and the hand-built direct
/// formula. All pairs must agree within the tolerance.
pub fn cross_check(
    m: usize,
    draws: usize,
    seed: u64,
    tolerance: f64,
) -> Result<OracleOutcome, OracleError> {
    if !(2..=3).contains(&m) {
        return Err(OracleError::Unsupported(format!(
            "cross-check requires m in 2..=3, got {m}"
        )));
    }
    let p = compute_p()?;
    let q = compute_q()?;
    let rep = gamma_rep(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    let mut worst: BTreeMap<String, CrossCheckLine> = BTreeMap::new();
    for _ in 0..draws {
        let d = random_draw(rep.n, &mut rng);
        let tt = trace_tables(&rep, &d);
        let basis = basis_values(&d);
        let direct: BTreeMap<String, f64> = direct_items(&rep, &d, &tt).into_iter().collect();
        let mut cache = ProductCache::new(rep.dim);
        let mut record = |tag: &str, sym: f64, dir: f64, max_rel: &mut f64| {
            let r = rel_dev(sym, dir);
            *max_rel = f64::max(*max_rel, r);
            let line = CrossCheckLine {
                tag: tag.to_string(),
                symbolic: sym,
                direct: dir,
                rel: r,
            };
            let e = worst.entry(tag.to_string()).or_insert_with(|| line.clone());
            if r >= e.rel {
                *e = line;
            }
        };
        for res in [&p, &q] {
            for item in &res.items {
                let sym = eval_vector(&item.vector, m as i64, &basis)?;
                let dir = direct[&item.tag];
                record(&item.tag, sym, dir, &mut max_rel);
                let dense = numeric_integrand(&rep, &d, &item.expr, m as i64, &mut cache)?;
                record(&format!("{} integrand", item.tag), dense, dir, &mut max_rel);
            }
        }
        let psym = eval_vector(&p.density, m as i64, &basis)?;
        record("P-density", psym, direct["P-density"], &mut max_rel);
        let qsym = eval_vector(&q.density, m as i64, &basis)?;
        record("Q-density", qsym, direct["Q-density"], &mut max_rel);
    }
    Ok(OracleOutcome {
        m,
        draws,
        ok: max_rel <= tolerance,
        max_rel,
        worst: worst.into_values().collect(),
    })
}
