//! Exact exponent bookkeeping for the cubic INLS in three dimensions.
//!
//! Everything here is carried out in arbitrary precision rationals. The
//! admissibility relations are strict inequalities in places, and their
//! truth must not depend on rounding.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExponentError {
    #[error("b = {0} is outside [0, 1/2)")]
    OutOfRange(String),
    #[error("theta = {theta} fails admissibility of {which}")]
    InfeasibleTheta { theta: String, which: &'static str },
    #[error("no feasible theta for b = {0}")]
    EmptyRange(String),
    #[error("cannot parse rational {0:?}: expected p/q")]
    Parse(String),
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Formats a rational as `p/q`, always with an explicit denominator.
pub fn format_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<BigRational, ExponentError> {
    let err = || ExponentError::Parse(s.to_string());
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p = BigInt::from_str(p).map_err(|_| err())?;
    let q = BigInt::from_str(q).map_err(|_| err())?;
    if q.is_zero() {
        return Err(err());
    }
    Ok(BigRational::new(p, q))
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Critical Sobolev index s_c = (1 + b)/2.
///
/// b = 0 (the classical cubic NLS) is accepted as the reference endpoint.
pub fn critical_index(b: &BigRational) -> Result<BigRational, ExponentError> {
    if b.is_negative() || *b >= rat(1, 2) {
        return Err(ExponentError::OutOfRange(format_rational(b)));
    }
    Ok((BigRational::one() + b) / rat(2, 1))
}

/// Model parameters: the weight exponent b and the derived critical index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InlsParams {
    b: BigRational,
    s_c: BigRational,
}

impl InlsParams {
    pub fn new(b: BigRational) -> Result<Self, ExponentError> {
        let s_c = critical_index(&b)?;
        Ok(Self { b, s_c })
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn s_c(&self) -> &BigRational {
        &self.s_c
    }

    pub fn b_f64(&self) -> f64 {
        to_f64(&self.b)
    }

    pub fn s_c_f64(&self) -> f64 {
        to_f64(&self.s_c)
    }
}

impl FromStr for InlsParams {
    type Err = ExponentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(parse_rational(s)?)
    }
}

impl fmt::Display for InlsParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b={}", format_rational(&self.b))
    }
}

impl Serialize for InlsParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(&self.b))
    }
}

/// Time exponent of a Strichartz pair. Only L2 pairs may use infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exponent {
    Finite(BigRational),
    Infinity,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(x) => f.write_str(&format_rational(x)),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairClass {
    L2,
    HsDot,
    HsDotDual,
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairClass::L2 => "L2",
            PairClass::HsDot => "HsDot",
            PairClass::HsDotDual => "HsDotDual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentPair {
    pub q: Exponent,
    pub r: BigRational,
    pub class: PairClass,
}

impl ExponentPair {
    pub fn new(q: Exponent, r: BigRational, class: PairClass) -> Self {
        Self { q, r, class }
    }

    pub fn finite(q: BigRational, r: BigRational, class: PairClass) -> Self {
        Self::new(Exponent::Finite(q), r, class)
    }

    /// (q, r) as floats, with q = +inf for the infinite exponent.
    pub fn as_f64(&self) -> (f64, f64) {
        let q = match &self.q {
            Exponent::Finite(q) => to_f64(q),
            Exponent::Infinity => f64::INFINITY,
        };
        (q, to_f64(&self.r))
    }
}

/// Exact admissibility test for the pair's declared class, with s = s_c.
pub fn check_admissible(pair: &ExponentPair, params: &InlsParams) -> bool {
    let r = &pair.r;
    if !r.is_positive() {
        return false;
    }
    let two_over_q = match &pair.q {
        Exponent::Finite(q) if q.is_positive() => rat(2, 1) / q,
        Exponent::Finite(_) => return false,
        Exponent::Infinity if pair.class == PairClass::L2 => BigRational::zero(),
        Exponent::Infinity => return false,
    };
    let base = rat(3, 2) - rat(3, 1) / r;
    let six = rat(6, 1);
    let s = params.s_c();
    let sobolev_end = &six / (rat(3, 1) - rat(2, 1) * s);
    match pair.class {
        PairClass::L2 => two_over_q == base && *r >= rat(2, 1) && *r <= six,
        PairClass::HsDot => two_over_q == base - s && *r >= sobolev_end && *r < six,
        PairClass::HsDotDual => two_over_q == base + s && *r > sobolev_end && *r < six,
    }
}

/// The four auxiliary exponents used to estimate the nonlinearity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingExponents {
    pub theta: BigRational,
    pub q_hat: BigRational,
    pub r_hat: BigRational,
    pub a_tilde: BigRational,
    pub a_hat: BigRational,
}

impl WorkingExponents {
    /// (q_hat, r_hat), L2-admissible.
    pub fn l2_pair(&self) -> ExponentPair {
        ExponentPair::finite(self.q_hat.clone(), self.r_hat.clone(), PairClass::L2)
    }

    /// (a_hat, r_hat), Ḣ^{s_c}-admissible.
    pub fn hs_pair(&self) -> ExponentPair {
        ExponentPair::finite(self.a_hat.clone(), self.r_hat.clone(), PairClass::HsDot)
    }

    /// (a_tilde, r_hat), Ḣ^{-s_c}-admissible.
    pub fn dual_pair(&self) -> ExponentPair {
        ExponentPair::finite(self.a_tilde.clone(), self.r_hat.clone(), PairClass::HsDotDual)
    }

    pub fn pairs(&self) -> [ExponentPair; 3] {
        [self.l2_pair(), self.hs_pair(), self.dual_pair()]
    }
}

pub fn working_exponents(
    params: &InlsParams,
    theta: &BigRational,
) -> Result<WorkingExponents, ExponentError> {
    let infeasible = |which| ExponentError::InfeasibleTheta {
        theta: format_rational(theta),
        which,
    };
    let b = params.b();
    let one = BigRational::one();
    let four_minus = rat(4, 1) - theta;

    let q_den = rat(6, 1) + rat(2, 1) * b - theta * (&one + b);
    let r_den = rat(2, 1) * (rat(3, 1) - b) - theta * (rat(2, 1) - b);
    let at_den = (rat(7, 1) + rat(2, 1) * b - rat(3, 1) * theta)
        - (rat(2, 1) - b) * (&one - theta);
    let ah_den = &one - b;
    if !theta.is_positive() || !four_minus.is_positive() {
        return Err(infeasible("positivity"));
    }
    for den in [&q_den, &r_den, &at_den, &ah_den] {
        if !den.is_positive() {
            return Err(infeasible("positivity"));
        }
    }

    let w = WorkingExponents {
        theta: theta.clone(),
        q_hat: rat(4, 1) * &four_minus / q_den,
        r_hat: rat(6, 1) * &four_minus / r_den,
        a_tilde: rat(2, 1) * &four_minus / at_den,
        a_hat: rat(2, 1) * &four_minus / ah_den,
    };
    if !check_admissible(&w.l2_pair(), params) {
        return Err(infeasible("(q_hat, r_hat) as L2"));
    }
    if !check_admissible(&w.hs_pair(), params) {
        return Err(infeasible("(a_hat, r_hat) as HsDot"));
    }
    if !check_admissible(&w.dual_pair(), params) {
        return Err(infeasible("(a_tilde, r_hat) as HsDotDual"));
    }
    Ok(w)
}

/// Which of the scattered upper bounds on theta is the tightest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaConstraint {
    /// theta < 2, needed for the working exponents to exist.
    WorkingExponents,
    /// theta(2 - 2b) < 1 - 2b, i.e. the auxiliary r-bar stays below 6.
    GradientPairRange,
    /// theta < 2/3 from the interpolation step of the compactness argument.
    Interpolation,
}

/// Open interval (lower, upper) of admissible theta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaRange {
    pub lower: BigRational,
    pub upper: BigRational,
    pub binding: ThetaConstraint,
}

impl ThetaRange {
    pub fn contains(&self, theta: &BigRational) -> bool {
        *theta > self.lower && *theta < self.upper
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lower + &self.upper) / rat(2, 1)
    }

    /// `count` equally spaced interior points.
    pub fn samples(&self, count: usize) -> Vec<BigRational> {
        let width = &self.upper - &self.lower;
        let denom = BigRational::from_integer(BigInt::from(count + 1));
        (1..=count)
            .map(|k| &self.lower + &width * BigRational::from_integer(BigInt::from(k)) / &denom)
            .collect()
    }

    /// True if `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &ThetaRange) -> bool {
        self.lower >= other.lower && self.upper <= other.upper
    }
}

/// The auxiliary exponent r-bar = 12(1-θ)/(3-2b-θ(4-2b)).
pub fn r_bar(b: &BigRational, theta: &BigRational) -> Option<BigRational> {
    let den = rat(3, 1) - rat(2, 1) * b - theta * (rat(4, 1) - rat(2, 1) * b);
    if den.is_zero() {
        return None;
    }
    Some(rat(12, 1) * (BigRational::one() - theta) / den)
}

/// Feasible theta interval for weight exponent `b`.
///
/// Takes the raw exponent rather than [`InlsParams`] so the degenerate case
/// b = 1/2 can be probed; it returns `EmptyRange` there.
pub fn theta_range(b: &BigRational) -> Result<ThetaRange, ExponentError> {
    if b.is_negative() {
        return Err(ExponentError::OutOfRange(format_rational(b)));
    }
    let one = BigRational::one();
    let two = rat(2, 1);
    let gap = &one - &two * b;
    if !gap.is_positive() || *b >= one {
        return Err(ExponentError::EmptyRange(format_rational(b)));
    }
    let candidates = [
        (two.clone(), ThetaConstraint::WorkingExponents),
        (&gap / (&two - &two * b), ThetaConstraint::GradientPairRange),
        (rat(2, 3), ThetaConstraint::Interpolation),
    ];
    let (upper, binding) = candidates
        .into_iter()
        .min_by(|x, y| x.0.cmp(&y.0))
        .expect("non-empty");
    if !upper.is_positive() {
        return Err(ExponentError::EmptyRange(format_rational(b)));
    }
    Ok(ThetaRange {
        lower: BigRational::zero(),
        upper,
        binding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(b: &str) -> InlsParams {
        b.parse().unwrap()
    }

    #[test]
    fn critical_index_values() {
        assert_eq!(critical_index(&rat(0, 1)).unwrap(), rat(1, 2));
        assert_eq!(critical_index(&rat(3, 10)).unwrap(), rat(13, 20));
        assert!(matches!(
            critical_index(&rat(1, 2)),
            Err(ExponentError::OutOfRange(_))
        ));
        assert!(critical_index(&rat(-1, 10)).is_err());
    }

    #[test]
    fn s_c_bounds() {
        for k in 1..50 {
            let s = p(&format!("{k}/100")).s_c().clone();
            assert!(s > rat(1, 2) && s < rat(3, 4));
        }
    }

    #[test]
    fn parse_rejects_decimals() {
        assert!(parse_rational("0.25").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(parse_rational(" 1/4 ").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("0").unwrap(), rat(0, 1));
    }

    #[test]
    fn admissible_examples() {
        let params = p("1/4");
        let inf2 = ExponentPair::new(Exponent::Infinity, rat(2, 1), PairClass::L2);
        assert!(check_admissible(&inf2, &params));
        let gamma = ExponentPair::finite(rat(10, 3), rat(10, 3), PairClass::L2);
        assert!(check_admissible(&gamma, &params));
        let four = ExponentPair::finite(rat(4, 1), rat(4, 1), PairClass::L2);
        assert!(!check_admissible(&four, &params));
        // (2, 6) is the L2 endpoint
        let endpoint = ExponentPair::finite(rat(2, 1), rat(6, 1), PairClass::L2);
        assert!(check_admissible(&endpoint, &params));
    }

    #[test]
    fn infinity_only_for_l2() {
        let params = p("1/4");
        let r = rat(6, 1) / (rat(3, 1) - rat(2, 1) * params.s_c());
        let pair = ExponentPair::new(Exponent::Infinity, r, PairClass::HsDot);
        assert!(!check_admissible(&pair, &params));
    }

    #[test]
    fn working_exponents_quarter() {
        let params = p("1/4");
        let w = working_exponents(&params, &rat(1, 1)).unwrap();
        assert_eq!(w.q_hat, rat(16, 7));
        assert_eq!(w.r_hat, rat(24, 5));
        assert_eq!(w.a_hat, rat(8, 1));
        assert_eq!(w.a_tilde, rat(4, 3));
        assert_eq!(rat(2, 1) / &w.q_hat, rat(3, 2) - rat(3, 1) / &w.r_hat);
        assert!(matches!(
            working_exponents(&params, &rat(2, 1)),
            Err(ExponentError::InfeasibleTheta { .. })
        ));
        assert!(working_exponents(&params, &rat(0, 1)).is_err());
    }

    #[test]
    fn theta_range_examples() {
        let r = theta_range(&rat(1, 4)).unwrap();
        assert_eq!(r.upper, rat(1, 3));
        assert_eq!(r.binding, ThetaConstraint::GradientPairRange);
        assert_eq!(theta_range(&rat(49, 100)).unwrap().upper, rat(1, 51));
        assert!(matches!(
            theta_range(&rat(1, 2)),
            Err(ExponentError::EmptyRange(_))
        ));
        assert_eq!(theta_range(&rat(0, 1)).unwrap().upper, rat(1, 2));
    }

    #[test]
    fn r_bar_inside_range() {
        let b = rat(1, 4);
        let range = theta_range(&b).unwrap();
        let lo = rat(6, 1) / (rat(2, 1) - &b);
        for theta in range.samples(10) {
            let rb = r_bar(&b, &theta).unwrap();
            assert!(rb > lo && rb < rat(6, 1));
        }
        let rb = r_bar(&b, &range.upper).unwrap();
        assert_eq!(rb, rat(6, 1));
    }

    #[test]
    fn format_always_has_denominator() {
        assert_eq!(format_rational(&rat(8, 1)), "8/1");
        assert_eq!(format_rational(&rat(26, 8)), "13/4");
    }
}
