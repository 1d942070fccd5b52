//! Floating-point moments of the Marchenko–Pastur law, computed by quadrature
//! of its density. Serves as an analytic check on the combinatorial moments.
//!
//! Arithmetic is double-double: the grid moments reach ~10¹⁰ and are checked
//! to an absolute 10⁻⁶, below one f64 ulp of the inputs' rounding.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::Serialize;
use twofloat::{consts::PI, TwoFloat};

use crate::algnum::AlgebraicReal;

pub const MAX_MOMENT: usize = 12;

const MAX_INTERVALS: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpError {
    #[error("rate and jump must be positive and finite (got {rate}, {jump})")]
    InvalidParams { rate: f64, jump: f64 },
    #[error("{0} is not a positive real number")]
    NotPositiveReal(String),
    #[error("moment order {k} exceeds {max}")]
    OrderCap { k: usize, max: usize },
    #[error("quadrature did not reach {tol:e} (estimate {estimate:e} after {intervals} intervals)")]
    NoConvergence { tol: f64, estimate: f64, intervals: usize },
}

fn dd(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// `a / b` with two correction steps; the crate's own double-double quotient
/// is only f64-accurate.
fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    TwoFloat::new_add(q1, q2) + r.hi() / b.hi()
}

fn powu(x: TwoFloat, n: usize) -> TwoFloat {
    (0..n).fold(dd(1.0), |acc, _| acc * x)
}

fn bigint_dd(n: &BigInt) -> TwoFloat {
    let hi = n.to_f64().unwrap_or(f64::NAN);
    let lo = BigInt::from_f64(hi).map(|h| (n - h).to_f64().unwrap_or(0.0)).unwrap_or(0.0);
    TwoFloat::new_add(hi, lo)
}

/// Double-double value of a real algebraic number.
pub fn to_double_double(x: &AlgebraicReal) -> Result<TwoFloat, MpError> {
    let mut acc = dd(0.0);
    for (d, c) in x.terms() {
        if d < 0 {
            return Err(MpError::NotPositiveReal(x.to_string()));
        }
        let q = div(bigint_dd(c.numer()), bigint_dd(c.denom()));
        acc += if d == 1 { q } else { q * dd(d as f64).sqrt() };
    }
    Ok(acc)
}

/// Free Poisson law with rate `λ` and jump size `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreePoissonParams {
    rate: TwoFloat,
    jump: TwoFloat,
}

impl FreePoissonParams {
    pub fn new(rate: f64, jump: f64) -> Result<Self, MpError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(rate) && ok(jump) {
            Ok(Self { rate: dd(rate), jump: dd(jump) })
        } else {
            Err(MpError::InvalidParams { rate, jump })
        }
    }

    /// Parameters given exactly, e.g. a jump of `√6`.
    pub fn exact(rate: &AlgebraicReal, jump: &AlgebraicReal) -> Result<Self, MpError> {
        for x in [rate, jump] {
            if !x.is_real() || !x.is_positive() {
                return Err(MpError::NotPositiveReal(x.to_string()));
            }
        }
        Ok(Self { rate: to_double_double(rate)?, jump: to_double_double(jump)? })
    }

    pub fn rate(&self) -> f64 {
        self.rate.hi()
    }

    pub fn jump(&self) -> f64 {
        self.jump.hi()
    }

    pub fn atom_mass(&self) -> f64 {
        (1.0 - self.rate.hi()).max(0.0)
    }

    fn support_dd(&self) -> (TwoFloat, TwoFloat) {
        let s = self.rate.sqrt();
        let one = dd(1.0);
        (self.jump * (one - s) * (one - s), self.jump * (one + s) * (one + s))
    }

    /// `[α(1−√λ)², α(1+√λ)²]`.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.support_dd();
        (a.hi(), b.hi())
    }

    /// Absolutely continuous part `√((b−x)(x−a)) / (2παx)`.
    pub fn density(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a || x >= b || x <= 0.0 {
            return 0.0;
        }
        ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * self.jump.hi() * x)
    }

    /// `∫ xᵏ ρ(x) dx`. With `x = c + R t` and `t = (3u − u³)/2` the edge
    /// factor `√(1−t²) dt` becomes `¾ (1−u²)² √(4−u²) du`, analytic on `[−1, 1]`.
    fn density_integral(&self, k: usize, tol: f64) -> Result<Quadrature, MpError> {
        let (a, b) = self.support_dd();
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        let scale = div(r * r * 3.0, dd(8.0) * PI * self.jump);
        let f = |u: TwoFloat| {
            let u2 = u * u;
            let t = u * (dd(3.0) - u2) / 2.0;
            let x = c + r * t;
            let edge = (dd(1.0) - u2) * (dd(1.0) - u2) * (dd(4.0) - u2).sqrt();
            let xk1 = if k == 0 {
                if x <= 0.0 {
                    return dd(0.0);
                }
                div(dd(1.0), x)
            } else {
                powu(x, k - 1)
            };
            scale * edge * xk1
        };
        integrate(f, dd(-1.0), dd(1.0), tol)
    }
}

impl Serialize for FreePoissonParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FreePoissonParams", 3)?;
        st.serialize_field("rate", &self.rate())?;
        st.serialize_field("jump", &self.jump())?;
        st.serialize_field("atom_mass", &self.atom_mass())?;
        st.end()
    }
}

/// A quadrature result; `value + residual` is the double-double estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    #[serde(skip)]
    pub residual: f64,
    pub error: f64,
}

impl Quadrature {
    fn from_dd(v: TwoFloat, error: f64) -> Self {
        Self { value: v.hi(), residual: v.lo(), error }
    }

    fn as_dd(&self) -> TwoFloat {
        TwoFloat::new_add(self.value, self.residual)
    }

    /// `|estimate − exact|` evaluated in double-double.
    pub fn deviation(&self, exact: &AlgebraicReal) -> Result<f64, MpError> {
        Ok((self.as_dd() - to_double_double(exact)?).abs().hi())
    }
}

pub fn atom_mass(params: &FreePoissonParams) -> f64 {
    params.atom_mass()
}

/// `k`-th moment: the density integral plus the atom at 0 (only at `k = 0`).
pub fn mp_moment(params: &FreePoissonParams, k: usize, tol: f64) -> Result<Quadrature, MpError> {
    if k > MAX_MOMENT {
        return Err(MpError::OrderCap { k, max: MAX_MOMENT });
    }
    let q = params.density_integral(k, tol)?;
    if k == 0 {
        let one = dd(1.0);
        let atom = if params.rate < one { one - params.rate } else { dd(0.0) };
        return Ok(Quadrature::from_dd(q.as_dd() + atom, q.error));
    }
    Ok(q)
}

/// Mass of the absolutely continuous part, `min(1, λ)` in theory.
pub fn density_mass(params: &FreePoissonParams, tol: f64) -> Result<Quadrature, MpError> {
    params.density_integral(0, tol)
}

struct Rule {
    nodes: Vec<TwoFloat>,
    weights: Vec<TwoFloat>,
}

/// Gauss–Legendre rule on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = dd(guess);
        let mut dp = dd(0.0);
        for _ in 0..100 {
            let (mut p0, mut p1) = (dd(1.0), x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = (x * p1 * (2.0 * jf - 1.0) - p0 * (jf - 1.0)) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = div((p0 - x * p1) * (n as f64), dd(1.0) - x * x);
            let step = div(p1, dp);
            x -= step;
            if step.abs() < 1e-33 {
                break;
            }
        }
        nodes.push(x);
        weights.push(div(dd(2.0), (dd(1.0) - x * x) * dp * dp));
    }
    Rule { nodes, weights }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (gauss_legendre(7), gauss_legendre(15)))
}

fn apply<F: Fn(TwoFloat) -> TwoFloat>(rule: &Rule, f: &F, c: TwoFloat, h: TwoFloat) -> TwoFloat {
    let mut acc = dd(0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += *w * f(c + h * *x);
    }
    acc * h
}

fn pair<F: Fn(TwoFloat) -> TwoFloat>(f: &F, a: TwoFloat, b: TwoFloat) -> (TwoFloat, f64) {
    let (low, high) = rules();
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let fine = apply(high, f, c, h);
    let coarse = apply(low, f, c, h);
    (fine, (fine - coarse).abs().hi())
}

/// Adaptive integration with an embedded 7/15-point Gauss pair, bisecting
/// the interval with the largest error estimate until the total is below
/// `tol`.
pub fn integrate<F: Fn(TwoFloat) -> TwoFloat>(f: F, a: TwoFloat, b: TwoFloat, tol: f64) -> Result<Quadrature, MpError> {
    let mut parts = vec![(a, b, pair(&f, a, b))];
    loop {
        let value = parts.iter().fold(dd(0.0), |s, p| s + p.2 .0);
        let error: f64 = parts.iter().map(|p| p.2 .1).sum::<f64>() + 1e-28 * value.hi().abs();
        if error <= tol {
            return Ok(Quadrature::from_dd(value, error));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(MpError::NoConvergence { tol, estimate: error, intervals: parts.len() });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = (lo + hi) / 2.0;
        parts.push((lo, mid, pair(&f, lo, mid)));
        parts.push((mid, hi, pair(&f, mid, hi)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gjs::free_poisson_moment;

    fn p(rate: f64, jump: f64) -> FreePoissonParams {
        FreePoissonParams::new(rate, jump).unwrap()
    }

    #[test]
    fn moment_examples() {
        let q = mp_moment(&p(1.0, 1.0), 2, 1e-10).unwrap();
        assert!((q.value - 2.0).abs() < 1e-6);
        assert!((mp_moment(&p(0.5, 2.0), 1, 1e-10).unwrap().value - 1.0).abs() < 1e-6);
        assert!((mp_moment(&p(0.5, 2f64.sqrt()), 0, 1e-10).unwrap().value - 1.0).abs() < 1e-6);
        assert!(matches!(mp_moment(&p(1.0, 1.0), 13, 1e-6), Err(MpError::OrderCap { .. })));
    }

    #[test]
    fn atom_examples() {
        assert_eq!(atom_mass(&p(0.5, 1.0)), 0.5);
        assert_eq!(atom_mass(&p(1.0, 1.0)), 0.0);
        assert_eq!(atom_mass(&p(2.0, 1.0)), 0.0);
    }

    #[test]
    fn invalid_params() {
        assert!(FreePoissonParams::new(0.0, 1.0).is_err());
        assert!(FreePoissonParams::new(1.0, f64::NAN).is_err());
        assert!(FreePoissonParams::new(-1.0, 1.0).is_err());
        assert!(FreePoissonParams::exact(&AlgebraicReal::i(), &AlgebraicReal::one()).is_err());
    }

    #[test]
    fn gauss_rules_are_exact_on_polynomials() {
        let (g7, g15) = rules();
        for (rule, deg) in [(g7, 13), (g15, 29)] {
            for m in 0..=deg {
                let got = apply(rule, &|x: TwoFloat| powu(x, m), dd(0.0), dd(1.0));
                let want = if m % 2 == 1 { dd(0.0) } else { div(dd(2.0), dd(m as f64 + 1.0)) };
                assert!((got - want).abs() < 1e-30, "degree {m}: {got:?}");
            }
        }
    }

    #[test]
    fn integrator_on_known_integrals() {
        let q = integrate(|x: TwoFloat| x.sqrt(), dd(0.0), dd(1.0), 1e-12).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() <= q.error.max(1e-15));
        let blowup = integrate(|x: TwoFloat| div(dd(1.0), x), dd(0.0), dd(1.0), 1e-9);
        assert!(matches!(blowup, Err(MpError::NoConvergence { .. })));
    }

    #[test]
    fn exact_conversion() {
        let x = AlgebraicReal::rational(1, 3) + AlgebraicReal::sqrt(6);
        let v = to_double_double(&x).unwrap();
        assert!((v - (dd(1.0) / 3.0 + dd(6.0).sqrt())).abs() < 1e-30);
    }

    #[test]
    fn density_mass_is_min_of_one_and_rate() {
        for rate in [0.5, 1.0, 2.0] {
            for jump in [1.0, 2f64.sqrt(), 6f64.sqrt()] {
                let q = density_mass(&p(rate, jump), 1e-12).unwrap();
                assert!((q.value - rate.min(1.0)).abs() < 1e-8, "{rate} {jump}: {}", q.value);
            }
        }
        let f = p(0.5, 1.0);
        let (a, b) = f.support();
        assert!((a - (1.0 - 0.5f64.sqrt()).powi(2)).abs() < 1e-15);
        assert!(f.density((a + b) / 2.0) > 0.0);
        assert_eq!(f.density(a / 2.0), 0.0);
    }

    #[test]
    fn quadrature_matches_combinatorial_moments() {
        let rates = [(1, 2), (1, 1), (2, 1)];
        let jumps = [AlgebraicReal::one(), AlgebraicReal::sqrt(2), AlgebraicReal::sqrt(6)];
        for (num, den) in rates {
            let rate = AlgebraicReal::rational(num, den);
            for jump in &jumps {
                let params = FreePoissonParams::exact(&rate, jump).unwrap();
                for k in 0..=10 {
                    let exact = free_poisson_moment(&rate, jump, k).unwrap();
                    let q = mp_moment(&params, k, 1e-9).unwrap();
                    let dev = q.deviation(&exact).unwrap();
                    assert!(dev <= 1e-6, "rate {rate} jump {jump} k {k}: off by {dev:e}");
                }
            }
        }
    }
}
