//! Polynomials in bosonic creation and annihilation operators.
//!
//! A polynomial is a list of terms, each an ordered product ("word") of
//! ladder operators with a complex coefficient. Order inside a word is
//! significant; nothing is normal-ordered automatically.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use smallvec::SmallVec;

/// A single ladder operator `a_k` or `a_k†`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder(u16);

impl Ladder {
    pub fn annihilate(mode: usize) -> Self {
        Ladder((mode as u16) << 1)
    }

    pub fn create(mode: usize) -> Self {
        Ladder(((mode as u16) << 1) | 1)
    }

    pub fn new(mode: usize, dagger: bool) -> Self {
        if dagger {
            Self::create(mode)
        } else {
            Self::annihilate(mode)
        }
    }

    #[inline]
    pub fn mode(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_dagger(self) -> bool {
        self.0 & 1 == 1
    }

    /// Hermitian conjugate.
    #[inline]
    pub fn adjoint(self) -> Self {
        Ladder(self.0 ^ 1)
    }

    /// Dense index `2 * mode + dagger`, used for two-point lookup tables.
    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dagger() {
            write!(f, "a{}†", self.mode())
        } else {
            write!(f, "a{}", self.mode())
        }
    }
}

/// Ordered product of ladder operators. The empty word is the identity.
pub type Word = SmallVec<[Ladder; 8]>;

/// Sum of `coefficient * word` terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorPolynomial {
    terms: Vec<(Complex64, Word)>,
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::monomial(c, &[])
    }

    pub fn identity() -> Self {
        Self::constant(1.0)
    }

    pub fn monomial(c: impl Into<Complex64>, factors: &[Ladder]) -> Self {
        let c = c.into();
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        Self {
            terms: vec![(c, factors.iter().copied().collect())],
        }
    }

    /// `a_k`.
    pub fn annihilation(mode: usize) -> Self {
        Self::monomial(1.0, &[Ladder::annihilate(mode)])
    }

    /// `a_k†`.
    pub fn creation(mode: usize) -> Self {
        Self::monomial(1.0, &[Ladder::create(mode)])
    }

    /// Photon number `a_k† a_k`.
    pub fn number(mode: usize) -> Self {
        Self::monomial(1.0, &[Ladder::create(mode), Ladder::annihilate(mode)])
    }

    /// `N_i - N_j`.
    pub fn number_difference(i: usize, j: usize) -> Self {
        Self::number(i) - Self::number(j)
    }

    /// Builds a polynomial from raw terms, merging duplicate words.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Complex64, Word)>,
    {
        Self {
            terms: terms.into_iter().collect(),
        }
        .simplified()
    }

    pub fn terms(&self) -> &[(Complex64, Word)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum number of factors in any term.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    /// Largest mode index referenced, if any.
    pub fn max_mode(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(_, w)| w.iter().map(|l| l.mode()))
            .max()
    }

    /// Coefficient of the identity word.
    pub fn constant_term(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|(_, w)| w.is_empty())
            .map(|(c, _)| *c)
            .sum()
    }

    /// Copy with the identity word removed.
    pub fn without_constant(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(_, w)| !w.is_empty())
                .cloned()
                .collect(),
        }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self {
            terms: self.terms.iter().map(|(k, w)| (k * c, w.clone())).collect(),
        }
        .simplified()
    }

    /// Hermitian conjugate: conjugate coefficients, reverse and adjoint each word.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(c, w)| (c.conj(), w.iter().rev().map(|l| l.adjoint()).collect()))
                .collect(),
        }
        .simplified()
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// `sum_i weights[i] * polys[i]`.
    pub fn linear_combination(parts: &[(f64, &OperatorPolynomial)]) -> Self {
        Self::from_terms(
            parts
                .iter()
                .flat_map(|(w, p)| p.terms.iter().map(move |(c, word)| (c * w, word.clone()))),
        )
    }

    /// Replaces every ladder operator by a linear combination of ladder
    /// operators. `substitution(l)` returns `Some(terms)` to replace `l` or
    /// `None` to keep it.
    pub fn substitute<F>(&self, substitution: F) -> Self
    where
        F: Fn(Ladder) -> Option<Vec<(Complex64, Ladder)>>,
    {
        let mut cache: HashMap<Ladder, Vec<(Complex64, Ladder)>> = HashMap::new();
        let mut out: Vec<(Complex64, Word)> = Vec::new();
        for (coeff, word) in &self.terms {
            let mut partial: Vec<(Complex64, Word)> = vec![(*coeff, Word::new())];
            for &l in word {
                let image = cache
                    .entry(l)
                    .or_insert_with(|| substitution(l).unwrap_or_else(|| vec![(1.0.into(), l)]));
                let mut next = Vec::with_capacity(partial.len() * image.len());
                for (c, w) in &partial {
                    for (k, m) in image.iter() {
                        let mut nw = w.clone();
                        nw.push(*m);
                        next.push((c * k, nw));
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        Self::from_terms(out)
    }

    /// Merges duplicate words and drops exact zeros. Resulting term order is
    /// the order of first appearance, so summation is deterministic.
    pub fn simplified(self) -> Self {
        let mut index: HashMap<Word, usize> = HashMap::with_capacity(self.terms.len());
        let mut merged: Vec<(Complex64, Word)> = Vec::with_capacity(self.terms.len());
        for (c, w) in self.terms {
            match index.get(&w) {
                Some(&i) => merged[i].0 += c,
                None => {
                    index.insert(w.clone(), merged.len());
                    merged.push((c, w));
                }
            }
        }
        merged.retain(|(c, _)| c.re != 0.0 || c.im != 0.0);
        Self { terms: merged }
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: Self) -> OperatorPolynomial {
        OperatorPolynomial::from_terms(self.terms.iter().chain(rhs.terms.iter()).cloned())
    }
}

impl Add for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: Self) -> OperatorPolynomial {
        &self + &rhs
    }
}

impl Sub for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: Self) -> OperatorPolynomial {
        OperatorPolynomial::from_terms(
            self.terms
                .iter()
                .cloned()
                .chain(rhs.terms.iter().map(|(c, w)| (-c, w.clone()))),
        )
    }
}

impl Sub for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: Self) -> OperatorPolynomial {
        &self - &rhs
    }
}

impl Neg for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> OperatorPolynomial {
        self.scale(-1.0)
    }
}

impl Mul for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: Self) -> OperatorPolynomial {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, wa) in &self.terms {
            for (b, wb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.push((a * b, w));
            }
        }
        OperatorPolynomial::from_terms(out)
    }
}

impl Mul for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: Self) -> OperatorPolynomial {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_encoding_round_trips() {
        for mode in [0usize, 1, 7, 300] {
            for dagger in [false, true] {
                let l = Ladder::new(mode, dagger);
                assert_eq!(l.mode(), mode);
                assert_eq!(l.is_dagger(), dagger);
                assert_eq!(l.adjoint().adjoint(), l);
                assert_ne!(l.adjoint(), l);
            }
        }
    }

    #[test]
    fn number_difference_cancels_itself() {
        let d = OperatorPolynomial::number_difference(0, 1);
        assert!((&d - &d).is_empty());
        assert_eq!(d.degree(), 2);
    }

    #[test]
    fn order_is_preserved_in_products() {
        let a = OperatorPolynomial::annihilation(0);
        let ad = OperatorPolynomial::creation(0);
        let p = &a * &ad;
        let q = &ad * &a;
        assert_ne!(p, q);
        assert_eq!(q, OperatorPolynomial::number(0));
    }

    #[test]
    fn adjoint_of_number_is_number() {
        let n = OperatorPolynomial::number(2);
        assert_eq!(n.adjoint(), n);
        let x = OperatorPolynomial::monomial(
            Complex64::new(0.0, 1.0),
            &[Ladder::create(0), Ladder::annihilate(1)],
        );
        let xd = x.adjoint();
        assert_eq!(xd.terms()[0].0, Complex64::new(0.0, -1.0));
        assert_eq!(
            xd.terms()[0].1.as_slice(),
            &[Ladder::create(1), Ladder::annihilate(0)]
        );
    }

    #[test]
    fn substitution_expands_linearly() {
        // a0 -> (a0 + a1)/sqrt2 applied to a0† a0
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = OperatorPolynomial::number(0).substitute(|l| {
            (l.mode() == 0).then(|| {
                vec![
                    (s.into(), Ladder::new(0, l.is_dagger())),
                    (s.into(), Ladder::new(1, l.is_dagger())),
                ]
            })
        });
        assert_eq!(p.len(), 4);
        for (c, _) in p.terms() {
            assert!((c.re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let d = OperatorPolynomial::number_difference(0, 1);
        assert_eq!(d.pow(2), &d * &d);
        assert_eq!(d.pow(0), OperatorPolynomial::identity());
    }
}
