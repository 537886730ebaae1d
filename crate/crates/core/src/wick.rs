//! Exact moments of operator polynomials over Gaussian states.
//!
//! Every ladder operator is split as `a = <a> + δa`. Each term of a polynomial
//! expands into displacement products times ordered fluctuation words, and a
//! fluctuation word is evaluated as the sum over perfect matchings of its
//! ordered two-point functions.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{HoloError, Result};
use crate::gaussian::{BogoliubovFrame, GaussianState};
use crate::operator::{Ladder, OperatorPolynomial, Word};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance on the imaginary part of a Hermitian expectation.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Ordered two-point functions `<x y>` of fluctuation operators plus the
/// displacement of every ladder operator, indexed by [`Ladder`] code.
#[derive(Clone, Debug)]
pub struct TwoPointTable {
    num_modes: usize,
    pairs: Vec<Complex64>,
    displacement: Vec<Complex64>,
}

impl TwoPointTable {
    pub fn new(state: &GaussianState) -> Self {
        let n = state.num_modes();
        let dim = 2 * n;
        let aa = state.moment_aa();
        let nn = state.moment_adag_a();
        let mut pairs = vec![ZERO; dim * dim];
        for j in 0..n {
            for k in 0..n {
                let (a_j, ad_j) = (Ladder::annihilate(j).code(), Ladder::create(j).code());
                let (a_k, ad_k) = (Ladder::annihilate(k).code(), Ladder::create(k).code());
                // <δa_j δa_k>
                pairs[a_j * dim + a_k] = aa[(j, k)];
                // <δa_j† δa_k†> = <δa_k δa_j>*
                pairs[ad_j * dim + ad_k] = aa[(k, j)].conj();
                // <δa_j† δa_k>
                pairs[ad_j * dim + a_k] = nn[(j, k)];
                // <δa_j δa_k†> = <δa_k† δa_j> + [a_j, a_k†]
                pairs[a_j * dim + ad_k] = nn[(k, j)] + if j == k { 1.0 } else { 0.0 };
            }
        }
        let mut displacement = vec![ZERO; dim];
        for k in 0..n {
            let d = state.displacement()[k];
            displacement[Ladder::annihilate(k).code()] = d;
            displacement[Ladder::create(k).code()] = d.conj();
        }
        Self {
            num_modes: n,
            pairs,
            displacement,
        }
    }

    /// Pairs of the vacuum with the displacement of `state`.
    fn vacuum_pairs(state: &GaussianState) -> Self {
        let mut t = Self::new(state);
        let dim = 2 * t.num_modes;
        t.pairs.iter_mut().for_each(|p| *p = ZERO);
        for k in 0..t.num_modes {
            t.pairs[Ladder::annihilate(k).code() * dim + Ladder::create(k).code()] = Complex64::new(1.0, 0.0);
        }
        t
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    /// `<x y>` for fluctuation operators, `x` preceding `y`.
    #[inline]
    pub fn pair_value(&self, x: Ladder, y: Ladder) -> Complex64 {
        self.pairs[x.code() * 2 * self.num_modes + y.code()]
    }

    #[inline]
    pub fn displacement(&self, x: Ladder) -> Complex64 {
        self.displacement[x.code()]
    }

    /// Zero-mean Wick sum over perfect matchings of an ordered fluctuation word.
    pub fn wick(&self, word: &[Ladder]) -> Complex64 {
        let n = word.len();
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if n % 2 == 1 {
            return ZERO;
        }
        assert!(n <= 64, "fluctuation word too long: {n}");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        self.matchings(word, mask)
    }

    fn matchings(&self, word: &[Ladder], mask: u64) -> Complex64 {
        if mask == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let first = mask.trailing_zeros() as usize;
        let rest = mask & !(1u64 << first);
        let mut acc = ZERO;
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let p = self.pair_value(word[first], word[j]);
            if p != ZERO {
                acc += p * self.matchings(word, rest & !(1u64 << j));
            }
        }
        acc
    }

    fn check(&self, poly: &OperatorPolynomial) -> Result<()> {
        match poly.max_mode() {
            Some(m) if m >= self.num_modes => Err(HoloError::UnknownMode {
                mode: m,
                num_modes: self.num_modes,
            }),
            _ => Ok(()),
        }
    }
}

/// A polynomial whose ladder operators stand for zero-mean fluctuations `δa`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationPolynomial(OperatorPolynomial);

impl FluctuationPolynomial {
    pub fn as_polynomial(&self) -> &OperatorPolynomial {
        &self.0
    }

    pub fn constant_term(&self) -> Complex64 {
        self.0.constant_term()
    }

    pub fn without_constant(&self) -> Self {
        Self(self.0.without_constant())
    }

    /// Operator product. Fluctuation forms multiply like the operators they
    /// represent, so factors can be transformed separately.
    pub fn product(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.scale(c))
    }

    pub fn linear_combination(parts: &[(f64, &Self)]) -> Self {
        let inner: Vec<(f64, &OperatorPolynomial)> = parts.iter().map(|(w, f)| (*w, &f.0)).collect();
        Self(OperatorPolynomial::linear_combination(&inner))
    }
}

/// Image of every fluctuation ladder (by code) in a Bogoliubov frame.
type FrameImage = Vec<Vec<(Complex64, Ladder)>>;

/// Per-mode `#a − #a†` of a word; a vacuum contraction needs all zeros.
fn charge(word: &[Ladder], modes: usize) -> Vec<i8> {
    let mut q = vec![0i8; modes];
    for l in word {
        q[l.mode()] += if l.is_dagger() { -1 } else { 1 };
    }
    q
}

/// Moment engine bound to one Gaussian state.
#[derive(Clone, Debug)]
pub struct MomentEngine {
    table: TwoPointTable,
    frame: Option<FrameImage>,
}

impl MomentEngine {
    pub fn new(state: &GaussianState) -> Self {
        Self {
            table: TwoPointTable::new(state),
            frame: None,
        }
    }

    /// Engine that evaluates fluctuations in the Bogoliubov frame of a pure
    /// state. Results agree with [`Self::new`] but keep full relative
    /// precision for strongly squeezed inputs.
    pub fn with_frame(state: &GaussianState, frame: &BogoliubovFrame) -> Result<Self> {
        let err = frame.moment_error(state)?;
        let size = state
            .moment_aa()
            .iter()
            .chain(state.moment_adag_a().iter())
            .map(|z| z.norm())
            .fold(1.0, f64::max);
        if !(err <= 1e-9 * size) {
            return Err(HoloError::Domain(format!(
                "frame does not reproduce the state moments (error {err:e})"
            )));
        }
        let n = state.num_modes();
        let (u, v) = (frame.u(), frame.v());
        let mut image: FrameImage = vec![Vec::new(); 2 * n];
        for j in 0..n {
            for l in 0..n {
                let (uj, vj) = (u[(j, l)], v[(j, l)]);
                let (y, yd) = (Ladder::annihilate(l), Ladder::create(l));
                let a = &mut image[Ladder::annihilate(j).code()];
                if uj != ZERO {
                    a.push((uj, y));
                }
                if vj != ZERO {
                    a.push((vj, yd));
                }
                let ad = &mut image[Ladder::create(j).code()];
                if uj != ZERO {
                    ad.push((uj.conj(), yd));
                }
                if vj != ZERO {
                    ad.push((vj.conj(), y));
                }
            }
        }
        Ok(Self {
            table: TwoPointTable::vacuum_pairs(state),
            frame: Some(image),
        })
    }

    /// Contraction table; vacuum pairs on a framed engine.
    pub fn table(&self) -> &TwoPointTable {
        &self.table
    }

    /// Substitutes `a → <a> + δa` term by term; branches with a vanishing
    /// displacement are pruned. A framed engine then rewrites each `δa` in
    /// the frame modes.
    pub fn fluctuation_form(&self, poly: &OperatorPolynomial) -> Result<FluctuationPolynomial> {
        self.table.check(poly)?;
        let mut out: Vec<(Complex64, Word)> = Vec::new();
        for (c, w) in poly.terms() {
            let mut partial: Vec<(Complex64, Word)> = vec![(*c, Word::new())];
            for &l in w.iter() {
                let d = self.table.displacement(l);
                if d == ZERO {
                    for (_, pw) in partial.iter_mut() {
                        pw.push(l);
                    }
                } else {
                    let mut next = Vec::with_capacity(partial.len() * 2);
                    for (pc, pw) in partial {
                        next.push((pc * d, pw.clone()));
                        let mut kept = pw;
                        kept.push(l);
                        next.push((pc, kept));
                    }
                    partial = next;
                }
            }
            out.extend(partial);
        }
        let fluct = OperatorPolynomial::from_terms(out);
        Ok(FluctuationPolynomial(match &self.frame {
            None => fluct,
            Some(image) => fluct.substitute(|l| Some(image[l.code()].clone())),
        }))
    }

    /// `<F>` together with `sum |term contributions|` as a cancellation scale.
    fn evaluate_fluct(&self, f: &FluctuationPolynomial) -> (Complex64, f64) {
        let mut total = ZERO;
        let mut scale = 0.0;
        let n = self.table.num_modes;
        for (c, w) in f.0.terms() {
            if self.frame.is_some() && charge(w, n).iter().any(|&q| q != 0) {
                continue;
            }
            let v = c * self.table.wick(w);
            total += v;
            scale += v.norm();
        }
        (total, scale)
    }

    /// `<P Q>` for fluctuation polynomials, without materialising the product.
    /// Outer terms are evaluated in parallel and reduced in a fixed order.
    fn evaluate_product(&self, p: &FluctuationPolynomial, q: &FluctuationPolynomial) -> (Complex64, f64) {
        if self.frame.is_some() {
            return self.evaluate_vacuum_product(p, q);
        }
        let qt = q.0.terms();
        let partial: Vec<(Complex64, f64)> = p
            .0
            .terms()
            .par_iter()
            .map(|(cp, wp)| {
                let mut word: Vec<Ladder> = Vec::with_capacity(16);
                let mut sum = ZERO;
                let mut scale = 0.0;
                for (cq, wq) in qt {
                    if (wp.len() + wq.len()) % 2 == 1 {
                        continue;
                    }
                    word.clear();
                    word.extend_from_slice(wp);
                    word.extend_from_slice(wq);
                    let w = self.table.wick(&word);
                    if w != ZERO {
                        let v = cp * cq * w;
                        sum += v;
                        scale += v.norm();
                    }
                }
                (sum, scale)
            })
            .collect();
        partial
            .into_iter()
            .fold((ZERO, 0.0), |(s, k), (v, m)| (s + v, k + m))
    }

    /// [`Self::evaluate_product`] in vacuum, pairing only terms whose
    /// charges cancel.
    fn evaluate_vacuum_product(&self, p: &FluctuationPolynomial, q: &FluctuationPolynomial) -> (Complex64, f64) {
        let n = self.table.num_modes;
        let qt = q.0.terms();
        let mut by_charge: HashMap<Vec<i8>, Vec<usize>> = HashMap::new();
        for (i, (_, w)) in qt.iter().enumerate() {
            by_charge.entry(charge(w, n)).or_default().push(i);
        }
        let partial: Vec<(Complex64, f64)> = p
            .0
            .terms()
            .par_iter()
            .map(|(cp, wp)| {
                let want: Vec<i8> = charge(wp, n).iter().map(|q| -q).collect();
                let Some(matches) = by_charge.get(&want) else {
                    return (ZERO, 0.0);
                };
                let mut word: Vec<Ladder> = Vec::with_capacity(16);
                let mut sum = ZERO;
                let mut scale = 0.0;
                for &i in matches {
                    let (cq, wq) = &qt[i];
                    word.clear();
                    word.extend_from_slice(wp);
                    word.extend_from_slice(wq);
                    let w = self.table.wick(&word);
                    if w != ZERO {
                        let v = cp * cq * w;
                        sum += v;
                        scale += v.norm();
                    }
                }
                (sum, scale)
            })
            .collect();
        partial
            .into_iter()
            .fold((ZERO, 0.0), |(s, k), (v, m)| (s + v, k + m))
    }

    /// `<P>` for an arbitrary (not necessarily Hermitian) polynomial.
    pub fn expectation(&self, poly: &OperatorPolynomial) -> Result<Complex64> {
        let f = self.fluctuation_form(poly)?;
        Ok(self.evaluate_fluct(&f).0)
    }

    /// `<P>` for a Hermitian polynomial; fails if the imaginary part is not
    /// negligible.
    pub fn real_expectation(&self, poly: &OperatorPolynomial) -> Result<f64> {
        self.real_expectation_of(&self.fluctuation_form(poly)?)
    }

    /// `<F>` for a Hermitian fluctuation polynomial.
    pub fn real_expectation_of(&self, f: &FluctuationPolynomial) -> Result<f64> {
        let (v, scale) = self.evaluate_fluct(f);
        hermitian(v, scale)
    }

    /// Like [`Self::real_expectation`], also returning the sum of absolute
    /// term contributions so callers can tell an exact zero from cancellation noise.
    pub fn real_expectation_with_scale(&self, poly: &OperatorPolynomial) -> Result<(f64, f64)> {
        self.real_expectation_with_scale_of(&self.fluctuation_form(poly)?)
    }

    pub fn real_expectation_with_scale_of(&self, f: &FluctuationPolynomial) -> Result<(f64, f64)> {
        let (v, scale) = self.evaluate_fluct(f);
        Ok((hermitian(v, scale)?, scale))
    }

    /// `<P²> − <P>²`, computed on the fluctuation form with the constant
    /// term removed so large coherent amplitudes do not cancel catastrophically.
    pub fn variance(&self, poly: &OperatorPolynomial) -> Result<f64> {
        self.variance_of(&self.fluctuation_form(poly)?)
    }

    /// `Var[F]` for a Hermitian fluctuation polynomial.
    pub fn variance_of(&self, full: &FluctuationPolynomial) -> Result<f64> {
        let c = full.constant_term();
        let f = full.without_constant();
        let (m, ms) = self.evaluate_fluct(&f);
        hermitian(m + c, ms + c.norm())?;
        let mean = hermitian(m, ms)?;
        let (sq, ss) = self.evaluate_product(&f, &f);
        Ok(hermitian(sq, ss)? - mean * mean)
    }

    /// Symmetrised covariance `<(AB + BA)/2> − <A><B>`.
    pub fn covariance(&self, a: &OperatorPolynomial, b: &OperatorPolynomial) -> Result<f64> {
        self.covariance_of(&self.fluctuation_form(a)?, &self.fluctuation_form(b)?)
    }

    /// Symmetrised covariance of two Hermitian fluctuation polynomials.
    pub fn covariance_of(&self, fa: &FluctuationPolynomial, fb: &FluctuationPolynomial) -> Result<f64> {
        let (ca, cb) = (fa.constant_term(), fb.constant_term());
        let (fa, fb) = (fa.without_constant(), fb.without_constant());
        let (ma, sa) = self.evaluate_fluct(&fa);
        let (mb, sb) = self.evaluate_fluct(&fb);
        hermitian(ma + ca, sa + ca.norm())?;
        hermitian(mb + cb, sb + cb.norm())?;
        let (ma, mb) = (hermitian(ma, sa)?, hermitian(mb, sb)?);
        // For Hermitian A, B: <BA> = <AB>*, so the symmetrised mean is Re<AB>.
        let (ab, _) = self.evaluate_product(&fa, &fb);
        Ok(ab.re - ma * mb)
    }

    /// `<(N_i − N_j)^order>` for `order` in `1..=4`.
    pub fn number_difference_moment(&self, modes: (usize, usize), order: u32) -> Result<f64> {
        if order > 4 {
            return Err(HoloError::UnsupportedDegree {
                degree: order as usize,
                max: 4,
            });
        }
        if order == 0 {
            return Err(HoloError::Domain("moment order must be at least 1".into()));
        }
        let d = OperatorPolynomial::number_difference(modes.0, modes.1);
        self.real_expectation(&d.pow(order))
    }
}

fn hermitian(v: Complex64, scale: f64) -> Result<f64> {
    let tol = HERMITIAN_TOL * scale.max(v.re.abs()).max(f64::MIN_POSITIVE);
    if v.im.abs() > tol {
        return Err(HoloError::NonHermitian { re: v.re, im: v.im });
    }
    Ok(v.re)
}

/// `<P>` on a Gaussian state.
pub fn expectation(poly: &OperatorPolynomial, state: &GaussianState) -> Result<Complex64> {
    MomentEngine::new(state).expectation(poly)
}

/// `Var[P]` for Hermitian `P`.
pub fn variance(poly: &OperatorPolynomial, state: &GaussianState) -> Result<f64> {
    MomentEngine::new(state).variance(poly)
}

/// Symmetrised covariance of Hermitian `A` and `B`.
pub fn covariance(a: &OperatorPolynomial, b: &OperatorPolynomial, state: &GaussianState) -> Result<f64> {
    MomentEngine::new(state).covariance(a, b)
}

/// `<(N_i − N_j)^order>`.
pub fn number_difference_moment(modes: (usize, usize), order: u32, state: &GaussianState) -> Result<f64> {
    MomentEngine::new(state).number_difference_moment(modes, order)
}
