//! Exact scalar arithmetic: rational functions of the half dimension `m` over
//! the integers, times a tracked power of the imaginary unit.
//!
//! The dimension symbol `n` never appears; it is replaced by `2m` at
//! construction time everywhere in the engine. Degrees stay tiny, so
//! polynomials are dense big-integer arrays and reduction always runs to
//! completion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Dense integer-coefficient polynomial in `m`; index = degree.
/// Invariant: no trailing zero coefficients (the zero polynomial is empty).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyZ(Vec<BigInt>);

impl PolyZ {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        PolyZ(coeffs)
    }

    pub fn zero() -> Self {
        PolyZ(Vec::new())
    }

    pub fn constant(c: i64) -> Self {
        Self::new(vec![BigInt::from(c)])
    }

    /// The monomial `m`.
    pub fn m() -> Self {
        Self::new(vec![BigInt::zero(), BigInt::one()])
    }

    /// `a*m + b`.
    pub fn affine(a: i64, b: i64) -> Self {
        Self::new(vec![BigInt::from(b), BigInt::from(a)])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.0.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeff(&self, deg: usize) -> BigInt {
        self.0.get(deg).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn neg(&self) -> Self {
        PolyZ(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        let mut out = Vec::with_capacity(len);
        for d in 0..len {
            out.push(self.coeff(d) + other.coeff(d));
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.0.iter().map(|c| c * k).collect())
    }

    pub fn eval(&self, m: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.0.iter().rev() {
            acc = acc * m + c;
        }
        acc
    }

    /// Gcd of all coefficients, carrying the sign of the leading coefficient;
    /// zero polynomial has content 0.
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.0 {
            g = num_integer::gcd(g, c.abs());
        }
        if self.leading().is_negative() {
            -g
        } else {
            g
        }
    }

    /// Exact division by a nonzero scalar; panics if any coefficient fails to
    /// divide (internal misuse).
    pub fn div_scalar_exact(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero(), "division by zero scalar");
        Self::new(
            self.0
                .iter()
                .map(|c| {
                    let (q, r) = num_integer::div_rem(c.clone(), k.clone());
                    assert!(r.is_zero(), "inexact scalar division in PolyZ");
                    q
                })
                .collect(),
        )
    }

    fn primitive(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.div_scalar_exact(&self.content())
    }

    /// Exact polynomial division; panics unless `other` divides `self`.
    pub fn div_exact(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Self::zero();
        }
        let mut rem: Vec<BigRational> = self
            .0
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        let dlen = other.0.len();
        let dlead = BigRational::from_integer(other.leading());
        let qlen = rem.len() + 1 - dlen;
        let mut quot = vec![BigRational::zero(); qlen];
        for qi in (0..qlen).rev() {
            let c = rem[qi + dlen - 1].clone() / dlead.clone();
            if !c.is_zero() {
                for (di, dc) in other.0.iter().enumerate() {
                    rem[qi + di] -= c.clone() * BigRational::from_integer(dc.clone());
                }
            }
            quot[qi] = c;
        }
        assert!(rem.iter().all(|c| c.is_zero()), "inexact polynomial division");
        Self::new(
            quot.into_iter()
                .map(|c| {
                    assert!(c.denom().is_one(), "nonintegral quotient in div_exact");
                    c.numer().clone()
                })
                .collect(),
        )
    }

    /// Polynomial gcd over Z, primitive with positive leading coefficient
    /// (times the gcd of contents).
    pub fn gcd(&self, other: &Self) -> Self {
        if self.is_zero() {
            return Self::new(other.0.clone()).normalize_sign();
        }
        if other.is_zero() {
            return self.clone().normalize_sign();
        }
        let content = num_integer::gcd(self.content().abs(), other.content().abs());
        let mut a = self.primitive().normalize_sign();
        let mut b = other.primitive().normalize_sign();
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive().normalize_sign();
            a = b;
            b = r;
        }
        a.scale(&content)
    }

    fn normalize_sign(self) -> Self {
        if self.leading().is_negative() {
            self.neg()
        } else {
            self
        }
    }

    /// Pseudo-remainder of `self` by `other` (`other` nonzero,
    /// deg(self) >= deg(other)); sign conventions irrelevant to gcd use.
    fn pseudo_rem(&self, other: &Self) -> Self {
        let mut rem = self.clone();
        let dlead = other.leading();
        while !rem.is_zero() && rem.degree() >= other.degree() {
            let shift = rem.degree() - other.degree();
            let rlead = rem.leading();
            let mut shifted = vec![BigInt::zero(); shift];
            shifted.extend(other.0.iter().map(|c| c * &rlead));
            rem = rem.scale(&dlead).sub(&Self::new(shifted));
        }
        rem
    }
}

impl fmt::Debug for PolyZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_poly(self))
    }
}

/// Render degree-descending, e.g. `2m^2 - m + 3`.
pub fn render_poly(p: &PolyZ) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for deg in (0..=p.degree()).rev() {
        let c = p.coeff(deg);
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else if c.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let show_coeff = !mag.is_one() || deg == 0;
        if show_coeff {
            out.push_str(&mag.to_string());
        }
        match deg {
            0 => {}
            1 => out.push('m'),
            d => out.push_str(&format!("m^{d}")),
        }
    }
    out
}

/// Errors from coefficient arithmetic and evaluation.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CoeffError {
    #[error("denominator vanishes at m = {0}")]
    PoleAtM(i64),
    #[error("sum of a real and an imaginary coefficient must be kept two-component")]
    MixedImaginary,
}

/// Exact rational function of `m` times `i^i_pow`.
///
/// Invariants: the fraction is reduced with positive-leading denominator;
/// `i_pow` is 0 or 1 (even powers of `i` are absorbed into the sign, so a
/// stored value is either purely real or purely imaginary); the zero
/// coefficient is `0/1` with `i_pow = 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoefficientQm {
    num: PolyZ,
    den: PolyZ,
    i_pow: u8,
}

impl CoefficientQm {
    /// Build from raw parts with any `i` exponent; reduces and normalizes.
    pub fn from_parts(num: PolyZ, den: PolyZ, i_power: i64) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut c = CoefficientQm {
            num,
            den,
            i_pow: i_power.rem_euclid(4) as u8,
        };
        c.normalize();
        c
    }

    fn normalize(&mut self) {
        // i^2 = -1, i^3 = -i.
        if self.i_pow >= 2 {
            self.num = self.num.neg();
            self.i_pow -= 2;
        }
        if self.num.is_zero() {
            self.den = PolyZ::constant(1);
            self.i_pow = 0;
            return;
        }
        let g = self.num.gcd(&self.den);
        self.num = self.num.div_exact(&g);
        self.den = self.den.div_exact(&g);
        if self.den.leading().is_negative() {
            self.num = self.num.neg();
            self.den = self.den.neg();
        }
    }

    pub fn zero() -> Self {
        Self::from_parts(PolyZ::zero(), PolyZ::constant(1), 0)
    }

    pub fn one() -> Self {
        Self::from_parts(PolyZ::constant(1), PolyZ::constant(1), 0)
    }

    pub fn from_int(k: i64) -> Self {
        Self::from_parts(PolyZ::constant(k), PolyZ::constant(1), 0)
    }

    pub fn rational(p: i64, q: i64) -> Self {
        assert!(q != 0);
        Self::from_parts(PolyZ::constant(p), PolyZ::constant(q), 0)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::from_parts(PolyZ::constant(1), PolyZ::constant(1), 1)
    }

    /// The symbol `m`.
    pub fn m() -> Self {
        Self::from_parts(PolyZ::m(), PolyZ::constant(1), 0)
    }

    /// `(a*m + b) / q`.
    pub fn affine_over(a: i64, b: i64, q: i64) -> Self {
        assert!(q != 0);
        Self::from_parts(PolyZ::affine(a, b), PolyZ::constant(q), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.i_pow == 0 && self.num == PolyZ::constant(1) && self.den == PolyZ::constant(1)
    }

    pub fn is_imaginary(&self) -> bool {
        self.i_pow == 1
    }

    pub fn i_power(&self) -> u8 {
        self.i_pow
    }

    pub fn numerator(&self) -> &PolyZ {
        &self.num
    }

    pub fn denominator(&self) -> &PolyZ {
        &self.den
    }

    pub fn neg(&self) -> Self {
        CoefficientQm {
            num: self.num.neg(),
            den: self.den.clone(),
            i_pow: self.i_pow,
        }
    }

    /// Multiply by `i` once.
    pub fn times_i(&self) -> Self {
        Self::from_parts(self.num.clone(), self.den.clone(), self.i_pow as i64 + 1)
    }

    /// Sign of the value for large m: sign of the leading numerator
    /// coefficient (denominator is positive-leading by invariant).
    pub fn leading_sign(&self) -> i8 {
        if self.num.is_zero() {
            0
        } else if self.num.leading().is_negative() {
            -1
        } else {
            1
        }
    }
}

/// Exact sum. Precondition: both operands carry the same `i` power (the zero
/// coefficient matches anything); a mixed sum must be kept two-component by
/// the caller.
pub fn qm_add(a: &CoefficientQm, b: &CoefficientQm) -> CoefficientQm {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    assert_eq!(
        a.i_pow, b.i_pow,
        "qm_add across different i powers; keep components separate"
    );
    let num = a.num.mul(&b.den).add(&b.num.mul(&a.den));
    let den = a.den.mul(&b.den);
    CoefficientQm::from_parts(num, den, a.i_pow as i64)
}

pub fn qm_sub(a: &CoefficientQm, b: &CoefficientQm) -> CoefficientQm {
    qm_add(a, &b.neg())
}

/// Exact product; `i` powers add modulo 4 with `i^2 = -1` absorbed as a sign.
pub fn qm_mul(a: &CoefficientQm, b: &CoefficientQm) -> CoefficientQm {
    CoefficientQm::from_parts(
        a.num.mul(&b.num),
        a.den.mul(&b.den),
        a.i_pow as i64 + b.i_pow as i64,
    )
}

/// Exact Gaussian rational, the result type of evaluation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn zero() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn real(r: BigRational) -> Self {
        GaussianRational {
            re: r,
            im: BigRational::zero(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Numeric value of the real part.
    pub fn re_f64(&self) -> f64 {
        ratio_to_f64(&self.re)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Exact conversion is unnecessary; magnitudes here are tiny.
    let nf = num.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

/// Exact substitution m := m_value.
pub fn qm_eval(a: &CoefficientQm, m_value: i64) -> Result<GaussianRational, CoeffError> {
    let m = BigInt::from(m_value);
    let den = a.den.eval(&m);
    if den.is_zero() {
        return Err(CoeffError::PoleAtM(m_value));
    }
    let v = BigRational::new(a.num.eval(&m), den);
    Ok(if a.i_pow == 1 {
        GaussianRational {
            re: BigRational::zero(),
            im: v,
        }
    } else {
        GaussianRational::real(v)
    })
}

impl fmt::Display for CoefficientQm {
    /// Renders as `p(m)/q(m)` with an `i*` prefix when imaginary.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let prefix = if self.i_pow == 1 { "i*" } else { "" };
        let num = render_poly(&self.num);
        if self.den == PolyZ::constant(1) {
            write!(f, "{prefix}{num}")
        } else {
            let num_str = if self.num.degree() > 0 {
                format!("({num})")
            } else {
                num
            };
            let den = render_poly(&self.den);
            let den_str = if self.den.degree() > 0 {
                format!("({den})")
            } else {
                den
            };
            write!(f, "{prefix}{num_str}/{den_str}")
        }
    }
}

impl fmt::Debug for CoefficientQm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> CoefficientQm {
        CoefficientQm::rational(p, d)
    }

    #[test]
    fn rational_addition() {
        assert_eq!(qm_add(&q(1, 2), &q(1, 3)), q(5, 6));
    }

    #[test]
    fn common_denominator_addition() {
        // m/(m+1) + 1/(m+1) = 1
        let a = CoefficientQm::from_parts(PolyZ::m(), PolyZ::affine(1, 1), 0);
        let b = CoefficientQm::from_parts(PolyZ::constant(1), PolyZ::affine(1, 1), 0);
        assert_eq!(qm_add(&a, &b), CoefficientQm::one());
    }

    #[test]
    fn part_one_summary_coefficient() {
        // (m-1)/6 + (-(m-1)/4) = -(m-1)/12
        let a = CoefficientQm::affine_over(1, -1, 6);
        let b = CoefficientQm::affine_over(1, -1, 4).neg();
        assert_eq!(qm_add(&a, &b), CoefficientQm::affine_over(1, -1, 12).neg());
    }

    #[test]
    fn i_squared_is_minus_one() {
        let ii = qm_mul(&CoefficientQm::i(), &CoefficientQm::i());
        assert_eq!(ii, CoefficientQm::from_int(-1));
        assert!(!ii.is_imaginary());
    }

    #[test]
    fn item_one_coefficient_product() {
        // m(m-1)/3 * 1/(2m) = (m-1)/6
        let a = CoefficientQm::from_parts(PolyZ::m().mul(&PolyZ::affine(1, -1)), PolyZ::constant(3), 0);
        let b = CoefficientQm::from_parts(PolyZ::constant(1), PolyZ::m().scale(&2.into()), 0);
        assert_eq!(qm_mul(&a, &b), CoefficientQm::affine_over(1, -1, 6));
    }

    #[test]
    fn item_two_three_coefficient_product() {
        // m(m+1)/3 * 1/(2m(2m+2)) = 1/12
        let a = CoefficientQm::from_parts(PolyZ::m().mul(&PolyZ::affine(1, 1)), PolyZ::constant(3), 0);
        let den = PolyZ::m().scale(&2.into()).mul(&PolyZ::affine(2, 2));
        let b = CoefficientQm::from_parts(PolyZ::constant(1), den, 0);
        assert_eq!(qm_mul(&a, &b), q(1, 12));
    }

    #[test]
    fn eval_examples() {
        let c = CoefficientQm::affine_over(1, -1, 12);
        assert_eq!(qm_eval(&c, 1).unwrap(), GaussianRational::real(BigRational::zero()));
        assert_eq!(
            qm_eval(&c, 2).unwrap(),
            GaussianRational::real(BigRational::new(1.into(), 12.into()))
        );
        let den = PolyZ::m().scale(&2.into()).mul(&PolyZ::affine(2, 2));
        let d = CoefficientQm::from_parts(PolyZ::constant(1), den, 0);
        assert_eq!(
            qm_eval(&d, 2).unwrap(),
            GaussianRational::real(BigRational::new(1.into(), 24.into()))
        );
    }

    #[test]
    fn eval_pole_detected() {
        let c = CoefficientQm::from_parts(PolyZ::constant(1), PolyZ::affine(1, -2), 0);
        assert_eq!(qm_eval(&c, 2), Err(CoeffError::PoleAtM(2)));
        assert!(qm_eval(&c, 3).is_ok());
    }

    #[test]
    fn reduction_is_idempotent_and_sign_normalized() {
        // (2m-2)/(-4) reduces to -(m-1)/2 with positive denominator.
        let c = CoefficientQm::from_parts(PolyZ::affine(2, -2), PolyZ::constant(-4), 0);
        assert_eq!(c, CoefficientQm::affine_over(1, -1, 2).neg());
        let again = CoefficientQm::from_parts(c.num.clone(), c.den.clone(), c.i_pow as i64);
        assert_eq!(c, again);
    }

    #[test]
    fn display_forms() {
        assert_eq!(CoefficientQm::affine_over(1, -1, 12).to_string(), "(m - 1)/12");
        assert_eq!(q(-2, 3).to_string(), "-2/3");
        assert_eq!(CoefficientQm::i().to_string(), "i*1");
        assert_eq!(CoefficientQm::zero().to_string(), "0");
        let c = CoefficientQm::from_parts(PolyZ::constant(1), PolyZ::m().scale(&2.into()), 0);
        assert_eq!(c.to_string(), "1/(2m)");
    }

    #[test]
    fn mul_commutes_add_associates() {
        let xs = [
            q(3, 7),
            CoefficientQm::affine_over(2, 5, 3),
            CoefficientQm::from_parts(PolyZ::m().mul(&PolyZ::m()), PolyZ::affine(1, 4), 0),
        ];
        for a in &xs {
            for b in &xs {
                assert_eq!(qm_mul(a, b), qm_mul(b, a));
                for c in &xs {
                    assert_eq!(qm_add(&qm_add(a, b), c), qm_add(a, &qm_add(b, c)));
                }
            }
        }
    }
}
