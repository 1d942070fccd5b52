//! Tracial direct sums of `ℂ`, `M_d(ℂ)`, `L𝐙` and interpolated free group
//! factors `LF(r)`, with the closed-form free product and ampliation rules.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::algnum::{AlgError, AlgebraicReal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VnError {
    #[error("invalid expression: {0}")]
    Invalid(String),
    #[error("no rule for {0}")]
    Unsupported(String),
    #[error("{0} is not a factor")]
    NotAFactor(String),
    #[error("proof chain disagrees with closed form: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

/// A summand type. `LF(1)` is `L𝐙` and is printed as such.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    C,
    Matrix(usize),
    LF(AlgebraicReal),
}

impl Atom {
    pub fn lz() -> Self {
        Atom::LF(AlgebraicReal::one())
    }

    fn normalized(self) -> Self {
        match self {
            Atom::Matrix(1) => Atom::C,
            a => a,
        }
    }

    pub fn is_lz(&self) -> bool {
        matches!(self, Atom::LF(r) if r.is_one())
    }

    /// `ℂ`, matrix algebras and `LF(r)` with `r > 1`.
    pub fn is_factor(&self) -> bool {
        !self.is_lz()
    }

    fn rank(&self) -> u8 {
        match self {
            Atom::C => 0,
            Atom::Matrix(_) => 1,
            Atom::LF(_) => 2,
        }
    }

    fn order(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Atom::Matrix(a), Atom::Matrix(b)) => a.cmp(b),
            (Atom::LF(a), Atom::LF(b)) => a.compare(b).unwrap_or(Ordering::Equal),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::C => write!(f, "C"),
            Atom::Matrix(d) => write!(f, "M{d}"),
            a if a.is_lz() => write!(f, "LZ"),
            Atom::LF(r) => write!(f, "LF({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Summand {
    pub atom: Atom,
    pub weight: AlgebraicReal,
}

/// A tracial direct sum with positive weights summing to 1. Equal atoms
/// are distinct summands and are never merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VNExpression {
    summands: Vec<Summand>,
}

fn rat(n: i64, d: i64) -> AlgebraicReal {
    AlgebraicReal::rational(n, d)
}

fn one() -> AlgebraicReal {
    AlgebraicReal::one()
}

fn ge(a: &AlgebraicReal, b: &AlgebraicReal) -> Result<bool, VnError> {
    Ok(a.compare(b)? != Ordering::Less)
}

impl VNExpression {
    /// Drops zero-weight summands, validates and sorts the rest.
    pub fn new(summands: Vec<(Atom, AlgebraicReal)>) -> Result<Self, VnError> {
        let mut out = Vec::with_capacity(summands.len());
        let mut total = AlgebraicReal::zero();
        for (atom, weight) in summands {
            if weight.is_zero() {
                continue;
            }
            if !weight.is_positive() {
                return Err(VnError::Invalid(format!("weight {weight} is not positive")));
            }
            let atom = atom.normalized();
            match &atom {
                Atom::Matrix(0) => return Err(VnError::Invalid("M0 is not an algebra".into())),
                Atom::LF(r) if r.compare(&one())? == Ordering::Less => {
                    return Err(VnError::Invalid(format!("LF({r}) needs r ≥ 1")))
                }
                _ => {}
            }
            total += &weight;
            out.push(Summand { atom, weight });
        }
        if !total.is_one() {
            return Err(VnError::Invalid(format!("weights sum to {total}")));
        }
        out.sort_by(|a, b| {
            a.atom
                .order(&b.atom)
                .then_with(|| a.weight.compare(&b.weight).unwrap_or(Ordering::Equal))
        });
        Ok(Self { summands: out })
    }

    pub fn factor(atom: Atom) -> Self {
        Self::new(vec![(atom, one())]).expect("single summand of weight 1")
    }

    pub fn c() -> Self {
        Self::factor(Atom::C)
    }

    pub fn lf(r: AlgebraicReal) -> Result<Self, VnError> {
        Self::new(vec![(Atom::LF(r), one())])
    }

    /// `(1−α)ℂ ⊕ α L𝐙`.
    pub fn c_plus_lz(alpha: AlgebraicReal) -> Result<Self, VnError> {
        Self::new(vec![(Atom::C, &one() - &alpha), (Atom::lz(), alpha)])
    }

    /// `⊕_i M_{d_i}` with the left-regular weights `d_i²/n`.
    pub fn multi_matrix(profile: &[usize]) -> Result<Self, VnError> {
        let n: usize = profile.iter().map(|d| d * d).sum();
        if n == 0 {
            return Err(VnError::Invalid("empty profile".into()));
        }
        Self::new(
            profile
                .iter()
                .map(|&d| (Atom::Matrix(d), rat((d * d) as i64, n as i64)))
                .collect(),
        )
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    /// The atom of a single-summand expression.
    pub fn as_factor(&self) -> Option<&Atom> {
        match self.summands.as_slice() {
            [s] => Some(&s.atom),
            _ => None,
        }
    }

    /// `r` of a single `LF(r)` summand.
    pub fn lf_parameter(&self) -> Option<&AlgebraicReal> {
        match self.as_factor() {
            Some(Atom::LF(r)) => Some(r),
            _ => None,
        }
    }

    /// `(α, r)` for `(1−α)ℂ ⊕ α LF(r)`, with `α = 1` for a lone `LF(r)`.
    fn c_plus_lf(&self) -> Option<(AlgebraicReal, AlgebraicReal)> {
        match self.summands.as_slice() {
            [Summand { atom: Atom::LF(r), .. }] => Some((one(), r.clone())),
            [Summand { atom: Atom::C, .. }, Summand { atom: Atom::LF(r), weight }] => Some((weight.clone(), r.clone())),
            _ => None,
        }
    }

    /// Dimensions of a multi-matrix algebra with left-regular weights.
    fn left_regular_profile(&self) -> Option<Vec<usize>> {
        let dims: Vec<usize> = self
            .summands
            .iter()
            .map(|s| match s.atom {
                Atom::C => Some(1),
                Atom::Matrix(d) => Some(d),
                Atom::LF(_) => None,
            })
            .collect::<Option<_>>()?;
        let n: usize = dims.iter().map(|d| d * d).sum();
        let regular = self
            .summands
            .iter()
            .zip(&dims)
            .all(|(s, &d)| s.weight == rat((d * d) as i64, n as i64));
        regular.then_some(dims)
    }
}

impl fmt::Display for VNExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(a) = self.as_factor() {
            return write!(f, "{a}");
        }
        for (i, s) in self.summands.iter().enumerate() {
            if i > 0 {
                write!(f, " ⊕ ")?;
            }
            if s.weight.is_rational() {
                write!(f, "{}·{}", s.weight, s.atom)?;
            } else {
                write!(f, "({})·{}", s.weight, s.atom)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum AtomJson {
    C,
    LZ,
    M { d: usize },
    LF { r: AlgebraicReal },
}

#[derive(Serialize, Deserialize)]
struct SummandJson {
    atom: AtomJson,
    weight: AlgebraicReal,
}

#[derive(Serialize, Deserialize)]
struct ExpressionJson {
    summands: Vec<SummandJson>,
}

impl Serialize for VNExpression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ExpressionJson {
            summands: self
                .summands
                .iter()
                .map(|x| SummandJson {
                    atom: match &x.atom {
                        Atom::C => AtomJson::C,
                        Atom::Matrix(d) => AtomJson::M { d: *d },
                        a if a.is_lz() => AtomJson::LZ,
                        Atom::LF(r) => AtomJson::LF { r: r.clone() },
                    },
                    weight: x.weight.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VNExpression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = ExpressionJson::deserialize(d)?;
        VNExpression::new(
            raw.summands
                .into_iter()
                .map(|s| {
                    let atom = match s.atom {
                        AtomJson::C => Atom::C,
                        AtomJson::LZ => Atom::lz(),
                        AtomJson::M { d } => Atom::Matrix(d),
                        AtomJson::LF { r } => Atom::LF(r),
                    };
                    (atom, s.weight)
                })
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// `α·d` as a positive integer, if it is one.
fn integral_multiple(alpha: &AlgebraicReal, d: usize) -> Option<usize> {
    let q: BigRational = alpha.to_rational()? * BigRational::from_integer(BigInt::from(d));
    (q.is_integer() && q.is_positive()).then(|| q.to_integer().to_usize()).flatten()
}

fn ampliate_atom(atom: &Atom, alpha: &AlgebraicReal) -> Result<Atom, VnError> {
    if !alpha.is_positive() {
        return Err(VnError::Invalid(format!("ampliation by {alpha}")));
    }
    match atom {
        Atom::LF(r) => {
            // LF(r)_α = LF((r − 1)/α² + 1)
            let a2 = alpha * alpha;
            Ok(Atom::LF(&(&(r - &one()) / &a2) + &one()))
        }
        Atom::C => integral_multiple(alpha, 1)
            .map(|m| Atom::Matrix(m).normalized())
            .ok_or_else(|| VnError::Unsupported(format!("ampliation of C by {alpha}"))),
        Atom::Matrix(d) => integral_multiple(alpha, *d)
            .map(|m| Atom::Matrix(m).normalized())
            .ok_or_else(|| VnError::Unsupported(format!("ampliation of M{d} by {alpha}"))),
    }
}

/// `M_α` of a single atom.
pub fn ampliate(e: &VNExpression, alpha: &AlgebraicReal) -> Result<VNExpression, VnError> {
    let atom = e
        .as_factor()
        .ok_or_else(|| VnError::Unsupported(format!("ampliation of the direct sum {e}")))?;
    Ok(VNExpression::factor(ampliate_atom(atom, alpha)?))
}

/// Given `M_d(A)`, recovers `A` by compressing each summand by `1/d`; the
/// weights are unchanged.
pub fn deampliate_matrix(e: &VNExpression, d: usize) -> Result<VNExpression, VnError> {
    if d == 0 {
        return Err(VnError::Invalid("d = 0".into()));
    }
    let inv = rat(1, d as i64);
    if let Some(s) = e.summands.iter().find(|s| d > 1 && !s.atom.is_factor()) {
        return Err(VnError::NotAFactor(s.atom.to_string()));
    }
    let mut out = Vec::with_capacity(e.summands.len());
    for s in &e.summands {
        let atom = if d == 1 { s.atom.clone() } else { ampliate_atom(&s.atom, &inv)? };
        out.push((atom, s.weight.clone()));
    }
    VNExpression::new(out)
}

/// Branch selector for the piecewise rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The branch whose condition is an upper-bound inequality `≥`.
    Large,
    Small,
}

fn unit_interval(x: &AlgebraicReal) -> Result<bool, VnError> {
    Ok(x.signum_real()? != Ordering::Less && x.compare(&one())? != Ordering::Greater)
}

/// `((1−α)ℂ ⊕ α LF(r)) * ((1−β)ℂ ⊕ β LF(s))` through the named branch.
/// `Large` requires `α + β ≥ 1`, `Small` requires `α + β ≤ 1`.
pub fn dykprop_branch(
    r: &AlgebraicReal,
    alpha: &AlgebraicReal,
    s: &AlgebraicReal,
    beta: &AlgebraicReal,
    branch: Branch,
) -> Result<VNExpression, VnError> {
    if !ge(r, &one())? || !ge(s, &one())? || !unit_interval(alpha)? || !unit_interval(beta)? {
        return Err(VnError::Invalid("needs r, s ≥ 1 and 0 ≤ α, β ≤ 1".into()));
    }
    let sum = alpha + beta;
    let two = rat(2, 1);
    match branch {
        Branch::Large => {
            if !ge(&sum, &one())? {
                return Err(VnError::Invalid(format!("α + β = {sum} < 1")));
            }
            let part = |x: &AlgebraicReal, a: &AlgebraicReal| &(x * &(a * a)) + &(&(&two * a) * &(&one() - a));
            VNExpression::lf(&part(r, alpha) + &part(s, beta))
        }
        Branch::Small => {
            if !ge(&one(), &sum)? {
                return Err(VnError::Invalid(format!("α + β = {sum} > 1")));
            }
            let num = &(&(r * &(alpha * alpha)) + &(s * &(beta * beta))) + &(&rat(4, 1) * &(alpha * beta));
            let param = &num / &(&sum * &sum);
            VNExpression::new(vec![(Atom::C, &one() - &sum), (Atom::LF(param), sum)])
        }
    }
}

fn dykprop(r: &AlgebraicReal, alpha: &AlgebraicReal, s: &AlgebraicReal, beta: &AlgebraicReal) -> Result<VNExpression, VnError> {
    let branch = if ge(&(alpha + beta), &one())? { Branch::Large } else { Branch::Small };
    dykprop_branch(r, alpha, s, beta, branch)
}

/// `((1−α)ℂ ⊕ α LF(r)) * M_d(ℂ)`. `Large` requires `α ≥ d⁻²`, `Small`
/// requires `α ≤ d⁻²`.
pub fn dyk2_branch(r: &AlgebraicReal, alpha: &AlgebraicReal, d: usize, branch: Branch) -> Result<VNExpression, VnError> {
    if !ge(r, &one())? || !unit_interval(alpha)? || d == 0 {
        return Err(VnError::Invalid("needs r ≥ 1, 0 ≤ α ≤ 1, d ≥ 1".into()));
    }
    let d2 = rat(1, (d * d) as i64);
    let d4 = &d2 * &d2;
    match branch {
        Branch::Large => {
            if !ge(alpha, &d2)? {
                return Err(VnError::Invalid(format!("α = {alpha} < d⁻²")));
            }
            let param = &(&(&(r * &(alpha * alpha)) + &(&(&rat(2, 1) * alpha) * &(&one() - alpha))) + &one()) - &d2;
            VNExpression::lf(param)
        }
        Branch::Small => {
            if !ge(&d2, alpha)? {
                return Err(VnError::Invalid(format!("α = {alpha} > d⁻²")));
            }
            let ad2 = alpha * &rat((d * d) as i64, 1);
            let param = &(&(&(r * &d4) - &(&rat(2, 1) * &d4)) + &one()) + &d2;
            VNExpression::new(vec![(Atom::Matrix(d), &one() - &ad2), (Atom::LF(param), ad2)])
        }
    }
}

fn dyk2(r: &AlgebraicReal, alpha: &AlgebraicReal, d: usize) -> Result<VNExpression, VnError> {
    let branch = if ge(alpha, &rat(1, (d * d) as i64))? { Branch::Large } else { Branch::Small };
    dyk2_branch(r, alpha, d, branch)
}

/// `((1−α)ℂ ⊕ α L𝐙) * A` for a multi-matrix `A = ⊕ M_{d_i}` with weights
/// `w_i`: `LF(2α − α² + 1 − Σ w_i²/d_i²)`. Needs `α ≥ w_i/d_i` for every `i`,
/// so that no minimal projection of `A` meets the atom.
fn dyk3(alpha: &AlgebraicReal, a: &VNExpression, dims: &[usize]) -> Result<VNExpression, VnError> {
    let mut free_dim = one();
    for (s, &d) in a.summands.iter().zip(dims) {
        let min_proj = s.weight.scale(&BigRational::new(1.into(), BigInt::from(d)));
        if !ge(alpha, &min_proj)? {
            return Err(VnError::Unsupported(format!(
                "free product with a minimal projection of trace {min_proj} > α = {alpha}"
            )));
        }
        free_dim -= &(&min_proj * &min_proj);
    }
    let param = &(&(&rat(2, 1) * alpha) - &(alpha * alpha)) + &free_dim;
    VNExpression::lf(param)
}

/// Free product by the closed-form rules: `ℂ` is the identity; `LF * LF`;
/// two `ℂ ⊕ LF` sums; `ℂ ⊕ LF` with `M_d`; `ℂ ⊕ L𝐙` with a left-regular
/// multi-matrix algebra.
pub fn free_product(e1: &VNExpression, e2: &VNExpression) -> Result<VNExpression, VnError> {
    if e1.as_factor() == Some(&Atom::C) {
        return Ok(e2.clone());
    }
    if e2.as_factor() == Some(&Atom::C) {
        return Ok(e1.clone());
    }
    if let (Some(r), Some(s)) = (e1.lf_parameter(), e2.lf_parameter()) {
        return VNExpression::lf(r + s);
    }
    if let (Some((a, r)), Some((b, s))) = (e1.c_plus_lf(), e2.c_plus_lf()) {
        return dykprop(&r, &a, &s, &b);
    }
    for (x, y) in [(e1, e2), (e2, e1)] {
        if let (Some((a, r)), Some(Atom::Matrix(d))) = (x.c_plus_lf(), y.as_factor()) {
            return dyk2(&r, &a, *d);
        }
    }
    for (x, y) in [(e1, e2), (e2, e1)] {
        if let (Some((a, r)), Some(dims)) = (x.c_plus_lf(), y.left_regular_profile()) {
            if r.is_one() {
                return dyk3(&a, y, &dims);
            }
        }
    }
    Err(VnError::Unsupported(format!("the free product ({e1}) * ({e2})")))
}

/// `((1−δ⁻¹)ℂ ⊕ δ⁻¹L𝐙)^{*N}` via the named branch. `Large` requires `N ≥ δ`.
pub fn power_free_product_branch(delta: &AlgebraicReal, n: usize, branch: Branch) -> Result<VNExpression, VnError> {
    if !ge(delta, &one())? || delta.is_one() || n == 0 {
        return Err(VnError::Invalid("needs δ > 1 and N ≥ 1".into()));
    }
    let nn = rat(n as i64, 1);
    let di = delta.inv()?;
    match branch {
        Branch::Large => {
            if !ge(&nn, delta)? {
                return Err(VnError::Invalid(format!("N = {n} < δ")));
            }
            VNExpression::lf(&nn * &(&(&rat(2, 1) * &di) - &(&di * &di)))
        }
        Branch::Small => {
            if !ge(delta, &nn)? {
                return Err(VnError::Invalid(format!("N = {n} > δ")));
            }
            let w = &nn * &di;
            VNExpression::new(vec![(Atom::C, &one() - &w), (Atom::LF(&rat(2, 1) - &rat(1, n as i64)), w)])
        }
    }
}

pub fn power_free_product(delta: &AlgebraicReal, n: usize) -> Result<VNExpression, VnError> {
    let branch = if ge(&rat(n as i64, 1), delta)? { Branch::Large } else { Branch::Small };
    power_free_product_branch(delta, n, branch)
}

/// `M(γ)` for an irrep of dimension `d` in a Kac algebra of dimension `n`:
/// free product with `M_d`, compression by `1/d`, checked against the
/// closed form `((1−δ⁻¹)ℂ ⊕ δ⁻¹L𝐙)^{*d²}`.
pub fn m_gamma(d: usize, n: usize) -> Result<VNExpression, VnError> {
    if d == 0 || d * d > n || n < 2 {
        return Err(VnError::Invalid(format!("need 1 ≤ d² ≤ n, n > 1 (d = {d}, n = {n})")));
    }
    let delta = AlgebraicReal::sqrt(n as i64);
    let base = VNExpression::c_plus_lz(delta.inv()?)?;
    let with_matrix = free_product(&base, &VNExpression::factor(Atom::Matrix(d)))?;
    let chain = deampliate_matrix(&with_matrix, d)?;
    let closed = power_free_product(&delta, d * d)?;
    if chain != closed {
        return Err(VnError::Mismatch(format!("{chain} vs {closed}")));
    }
    Ok(closed)
}

fn profile_dim(profile: &[usize]) -> Result<usize, VnError> {
    if profile.is_empty() || profile.contains(&0) {
        return Err(VnError::Invalid("profile entries must be positive".into()));
    }
    let n: usize = profile.iter().map(|d| d * d).sum();
    if n < 2 {
        return Err(VnError::Invalid("needs n = Σd² > 1".into()));
    }
    Ok(n)
}

/// `M₁ = *_γ M(γ)`.
pub fn compute_m1(profile: &[usize]) -> Result<VNExpression, VnError> {
    let n = profile_dim(profile)?;
    let mut acc = VNExpression::c();
    for &d in profile {
        acc = free_product(&acc, &m_gamma(d, n)?)?;
    }
    Ok(acc)
}

/// `M₂ = ((1−δ⁻¹)ℂ ⊕ δ⁻¹L𝐙) * H` with `H` carrying its left-regular trace.
pub fn compute_m2(profile: &[usize]) -> Result<VNExpression, VnError> {
    let n = profile_dim(profile)?;
    let delta = AlgebraicReal::sqrt(n as i64);
    let base = VNExpression::c_plus_lz(delta.inv()?)?;
    free_product(&base, &VNExpression::multi_matrix(profile)?)
}

/// `M₀ = (M₂)_{1/n}`.
pub fn compute_m0(profile: &[usize]) -> Result<VNExpression, VnError> {
    let n = profile_dim(profile)?;
    ampliate(&compute_m2(profile)?, &rat(1, n as i64))
}

/// All dimension profiles (non-increasing) with `Σd² = n`.
pub fn profiles(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for d in (1..=max).rev() {
            if d * d <= rest {
                cur.push(d);
                rec(rest - d * d, d, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    let max = (1..=n).take_while(|d| d * d <= n).last().unwrap_or(0);
    rec(n, max, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(d: i64) -> AlgebraicReal {
        AlgebraicReal::sqrt(d)
    }

    fn lf(r: AlgebraicReal) -> VNExpression {
        VNExpression::lf(r).unwrap()
    }

    #[test]
    fn ampliation_examples() {
        assert_eq!(ampliate(&lf(rat(3, 1)), &rat(1, 2)).unwrap(), lf(rat(9, 1)));
        assert_eq!(ampliate(&lf(s(2)), &one()).unwrap(), lf(s(2)));
        assert_eq!(ampliate(&VNExpression::factor(Atom::Matrix(2)), &rat(1, 2)).unwrap(), VNExpression::c());
        assert_eq!(ampliate(&VNExpression::c(), &rat(3, 1)).unwrap(), VNExpression::factor(Atom::Matrix(3)));
        assert!(matches!(ampliate(&VNExpression::c(), &rat(1, 2)), Err(VnError::Unsupported(_))));
        let sum = VNExpression::c_plus_lz(rat(1, 2)).unwrap();
        assert!(matches!(ampliate(&sum, &rat(2, 1)), Err(VnError::Unsupported(_))));
    }

    #[test]
    fn deampliation_examples() {
        assert_eq!(deampliate_matrix(&lf(rat(3, 1)), 2).unwrap(), lf(rat(9, 1)));
        assert_eq!(deampliate_matrix(&VNExpression::factor(Atom::Matrix(2)), 2).unwrap(), VNExpression::c());
        let e = VNExpression::new(vec![(Atom::Matrix(2), rat(1, 2)), (Atom::LF(rat(2, 1)), rat(1, 2))]).unwrap();
        let want = VNExpression::new(vec![(Atom::C, rat(1, 2)), (Atom::LF(rat(5, 1)), rat(1, 2))]).unwrap();
        assert_eq!(deampliate_matrix(&e, 2).unwrap(), want);
        let lz = VNExpression::c_plus_lz(rat(1, 2)).unwrap();
        assert!(matches!(deampliate_matrix(&lz, 2), Err(VnError::NotAFactor(_))));
        assert_eq!(deampliate_matrix(&lz, 1).unwrap(), lz);
    }

    #[test]
    fn free_product_examples() {
        assert_eq!(free_product(&lf(rat(2, 1)), &lf(rat(3, 1))).unwrap(), lf(rat(5, 1)));
        let half = VNExpression::c_plus_lz(rat(1, 2)).unwrap();
        assert_eq!(free_product(&half, &half).unwrap(), lf(rat(3, 2)));
        let quarter = VNExpression::c_plus_lz(rat(1, 4)).unwrap();
        let m2 = VNExpression::factor(Atom::Matrix(2));
        assert_eq!(free_product(&quarter, &m2).unwrap(), lf(rat(19, 16)));
        assert_eq!(free_product(&m2, &quarter).unwrap(), lf(rat(19, 16)));
        assert_eq!(free_product(&VNExpression::c(), &m2).unwrap(), m2);
        let mixed = VNExpression::new(vec![(Atom::Matrix(2), rat(1, 2)), (Atom::LF(rat(2, 1)), rat(1, 2))]).unwrap();
        match free_product(&mixed, &mixed) {
            Err(VnError::Unsupported(msg)) => assert!(msg.contains("free product")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_branch_of_dykprop() {
        let tenth = VNExpression::c_plus_lz(rat(1, 10)).unwrap();
        // (α+β)⁻²(α² + β² + 4αβ) = 25·(6/100)
        let want = VNExpression::new(vec![(Atom::C, rat(4, 5)), (Atom::LF(rat(3, 2)), rat(1, 5))]).unwrap();
        assert_eq!(free_product(&tenth, &tenth).unwrap(), want);
    }

    #[test]
    fn small_branch_of_dyk2() {
        let e = VNExpression::c_plus_lz(rat(1, 8)).unwrap();
        let got = free_product(&e, &VNExpression::factor(Atom::Matrix(2))).unwrap();
        let want = VNExpression::new(vec![
            (Atom::Matrix(2), rat(1, 2)),
            (Atom::LF(rat(1, 16) - rat(2, 16) + rat(5, 4)), rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn power_free_product_examples() {
        let d = s(3);
        assert_eq!(power_free_product(&d, 1).unwrap(), VNExpression::c_plus_lz(d.inv().unwrap()).unwrap());
        assert_eq!(power_free_product(&s(2), 2).unwrap(), lf(&rat(2, 1) * &s(2) - rat(1, 1)));
        let two = rat(2, 1);
        let large = power_free_product_branch(&two, 2, Branch::Large).unwrap();
        let small = power_free_product_branch(&two, 2, Branch::Small).unwrap();
        assert_eq!(large, lf(rat(3, 2)));
        assert_eq!(large, small);
    }

    #[test]
    fn power_free_product_matches_iterated_dykprop() {
        for n in [2i64, 3, 5, 6, 7, 10] {
            let delta = s(n);
            let base = VNExpression::c_plus_lz(delta.inv().unwrap()).unwrap();
            let mut acc = base.clone();
            for k in 2..=8 {
                acc = free_product(&acc, &base).unwrap();
                assert_eq!(acc, power_free_product(&delta, k).unwrap(), "n = {n}, N = {k}");
            }
        }
    }

    #[test]
    fn m_gamma_examples() {
        assert_eq!(m_gamma(1, 5).unwrap(), VNExpression::c_plus_lz(s(5).inv().unwrap()).unwrap());
        assert_eq!(m_gamma(2, 16).unwrap(), lf(rat(7, 4)));
        let r = &(&rat(4, 3) * &s(6)) - &rat(2, 3);
        assert_eq!(m_gamma(2, 6).unwrap(), lf(r));
        assert!(m_gamma(3, 8).is_err());
    }

    #[test]
    fn m_gamma_chain_matches_closed_form() {
        for n in 2..=16 {
            for d in (1..=n).take_while(|d| d * d <= n) {
                m_gamma(d, n).unwrap();
            }
        }
    }

    #[test]
    fn factor_examples() {
        assert_eq!(compute_m1(&[1, 1]).unwrap(), lf(&rat(2, 1) * &s(2) - rat(1, 1)));
        assert_eq!(compute_m1(&[1, 1, 1, 1]).unwrap(), lf(rat(3, 1)));
        assert_eq!(compute_m1(&[1, 1, 2]).unwrap(), lf(&rat(2, 1) * &s(6) - rat(1, 1)));
        assert_eq!(compute_m2(&[1, 1, 1, 1]).unwrap(), lf(rat(3, 2)));
        assert_eq!(compute_m2(&[1, 1]).unwrap(), lf(s(2)));
        assert_eq!(compute_m2(&[1, 1, 2]).unwrap(), lf(&s(6) * &rat(1, 3) + rat(2, 3)));
        assert_eq!(compute_m0(&[1, 1, 1, 1]).unwrap(), lf(rat(9, 1)));
        assert_eq!(compute_m0(&[1, 1]).unwrap(), lf(&rat(4, 1) * &s(2) - rat(3, 1)));
        assert!(compute_m1(&[1]).is_err());
        assert_eq!(deampliate_matrix(&compute_m2(&[1, 1, 2]).unwrap(), 6).unwrap(), compute_m0(&[1, 1, 2]).unwrap());
    }

    #[test]
    fn factors_depend_only_on_dimension() {
        for n in 2..=12i64 {
            let sq = s(n);
            let m1 = lf(&(&rat(2, 1) * &sq) - &one());
            let m2 = lf(&(&(&rat(2, 1) / &sq) - &rat(2, n)) + &one());
            let m0 = lf(&(&(&rat(2 * n, 1) * &sq) - &rat(2 * n, 1)) + &one());
            for p in profiles(n as usize) {
                assert_eq!(compute_m1(&p).unwrap(), m1, "{p:?}");
                assert_eq!(compute_m2(&p).unwrap(), m2, "{p:?}");
                assert_eq!(compute_m0(&p).unwrap(), m0, "{p:?}");
            }
        }
    }

    #[test]
    fn profile_enumeration() {
        assert_eq!(profiles(4), vec![vec![2], vec![1, 1, 1, 1]]);
        assert_eq!(profiles(6), vec![vec![2, 1, 1], vec![1; 6]]);
        assert!(profiles(12).contains(&vec![3, 1, 1, 1]));
        assert!(profiles(12).contains(&vec![2, 2, 2]));
    }

    #[test]
    fn display_and_json() {
        let e = VNExpression::c_plus_lz(rat(1, 4)).unwrap();
        assert_eq!(e.to_string(), "3/4·C ⊕ 1/4·LZ");
        assert_eq!(lf(&rat(2, 1) * &s(6) - rat(1, 1)).to_string(), "LF(2√6 - 1)");
        let js = serde_json::to_string(&e).unwrap();
        assert_eq!(
            js,
            r#"{"summands":[{"atom":{"kind":"C"},"weight":{"1":["3","4"]}},{"atom":{"kind":"LZ"},"weight":{"1":["1","4"]}}]}"#
        );
        assert_eq!(serde_json::from_str::<VNExpression>(&js).unwrap(), e);
        let m = VNExpression::factor(Atom::Matrix(3));
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"summands":[{"atom":{"kind":"M","d":3},"weight":{"1":["1","1"]}}]}"#);
        assert!(serde_json::from_str::<VNExpression>(r#"{"summands":[{"atom":{"kind":"C"},"weight":{"1":["1","2"]}}]}"#).is_err());
    }

    #[test]
    fn invalid_expressions() {
        assert!(VNExpression::new(vec![(Atom::C, rat(1, 2))]).is_err());
        assert!(VNExpression::new(vec![(Atom::C, rat(3, 2)), (Atom::C, rat(-1, 2))]).is_err());
        assert!(VNExpression::lf(rat(1, 2)).is_err());
        assert_eq!(VNExpression::new(vec![(Atom::C, one()), (Atom::lz(), AlgebraicReal::zero())]).unwrap(), VNExpression::c());
    }

    proptest! {
        #[test]
        fn ampliation_composes(a in 1i64..20, b in 1i64..20, c in 1i64..20, d in 1i64..20, r in 1i64..10) {
            let (alpha, beta) = (rat(a, b), rat(c, d));
            let x = lf(&rat(r, 1) + &s(2));
            let twice = ampliate(&ampliate(&x, &alpha).unwrap(), &beta).unwrap();
            prop_assert_eq!(twice, ampliate(&x, &(&alpha * &beta)).unwrap());
        }

        #[test]
        fn lf_products_commute_and_associate(a in 1i64..30, b in 1i64..30, c in 1i64..30) {
            let (x, y, z) = (lf(rat(a + 2, 2)), lf(&rat(b, 1) + &s(3)), lf(rat(c + 1, 1)));
            prop_assert_eq!(free_product(&x, &y).unwrap(), free_product(&y, &x).unwrap());
            let left = free_product(&free_product(&x, &y).unwrap(), &z).unwrap();
            let right = free_product(&x, &free_product(&y, &z).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn c_plus_lf_products_commute(a in 1i64..10, b in 1i64..10, r in 1i64..5, t in 1i64..5) {
            let x = VNExpression::new(vec![(Atom::C, &one() - &rat(a, 10)), (Atom::LF(rat(r, 1)), rat(a, 10))]).unwrap();
            let y = VNExpression::new(vec![(Atom::C, &one() - &rat(b, 10)), (Atom::LF(rat(t, 1)), rat(b, 10))]).unwrap();
            prop_assert_eq!(free_product(&x, &y).unwrap(), free_product(&y, &x).unwrap());
        }
    }
}
