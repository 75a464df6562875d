//! Bounded-precision 2-adic numbers, the additive character `ψ` of `Q₂`,
//! the filtration `𝔓ⁿ` of the order `𝔘`, the field `E = Q₂(α)` and the
//! characters `ψ_α`.
//!
//! `ψ` is the character trivial on `2Z₂` with `ψ(x) = e^{πi·r(x)}`, where
//! `r(x)` is the dyadic expansion of `x` truncated at `2⁰`. This makes
//! `ψ(1/2) = √−1`; the other admissible character is its conjugate.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::cyclolinalg::{GaussRat, Rat};
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 32;
const MAX_PRECISION: u32 = 64;

/// `2^val · unit` with `unit` odd and known modulo `2^prec`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dyadic {
    /// Exact zero, valuation `+∞`.
    Zero,
    /// Known only to be `≡ 0 mod 2^at_least`.
    Small { at_least: i64 },
    Value { val: i64, unit: u128, prec: u32 },
}

fn mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

fn insufficient(what: &str) -> Error {
    Error::InsufficientPrecision(what.to_string())
}

fn v2(x: &BigInt) -> i64 {
    x.trailing_zeros().map_or(0, |t| t as i64)
}

/// Inverse of an odd number modulo `2^bits` by Newton iteration.
fn inv_odd(u: u128, bits: u32) -> u128 {
    let mut x: u128 = 1;
    for _ in 0..7 {
        x = x.wrapping_mul(2u128.wrapping_sub(u.wrapping_mul(x)));
    }
    x & mask(bits)
}

impl Dyadic {
    pub fn from_rat(x: &Rat, prec: u32) -> Self {
        if x.is_zero() {
            return Dyadic::Zero;
        }
        let (n, d) = (x.numer(), x.denom());
        let val = v2(n) - v2(d);
        let m = BigInt::one() << prec;
        let on = (n >> v2(n) as usize).mod_floor(&m).to_u128().expect("fits");
        let od = (d >> v2(d) as usize).mod_floor(&m).to_u128().expect("fits");
        Dyadic::Value {
            val,
            unit: (on.wrapping_mul(inv_odd(od, prec))) & mask(prec),
            prec,
        }
    }

    pub fn from_int(n: i64, prec: u32) -> Self {
        Self::from_rat(&Rat::from_integer(n.into()), prec)
    }

    /// `+∞` for an exact zero; an error if the value is an unresolved zero.
    pub fn valuation(&self) -> Result<Option<i64>> {
        match self {
            Dyadic::Zero => Ok(None),
            Dyadic::Small { .. } => Err(insufficient("valuation of an unresolved zero")),
            Dyadic::Value { val, .. } => Ok(Some(*val)),
        }
    }

    /// Decides `v(x) ≥ n`.
    pub fn val_at_least(&self, n: i64) -> Result<bool> {
        match self {
            Dyadic::Zero => Ok(true),
            Dyadic::Small { at_least } if *at_least >= n => Ok(true),
            Dyadic::Small { .. } => Err(insufficient("valuation bound")),
            Dyadic::Value { val, .. } => Ok(*val >= n),
        }
    }

    pub fn is_unit(&self) -> Result<bool> {
        Ok(self.valuation()? == Some(0))
    }

    /// Absolute precision: the value is known modulo `2^abs`.
    fn abs_prec(&self) -> i64 {
        match self {
            Dyadic::Zero => i64::MAX,
            Dyadic::Small { at_least } => *at_least,
            Dyadic::Value { val, prec, .. } => val + *prec as i64,
        }
    }

    pub fn neg(&self) -> Self {
        match *self {
            Dyadic::Value { val, unit, prec } => Dyadic::Value {
                val,
                unit: unit.wrapping_neg() & mask(prec),
                prec,
            },
            other => other,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let abs = self.abs_prec().min(o.abs_prec());
        let (a, b) = match (self, o) {
            (Dyadic::Zero, _) => return *o,
            (_, Dyadic::Zero) => return *self,
            (Dyadic::Small { .. }, Dyadic::Small { .. }) => return Dyadic::Small { at_least: abs },
            _ => (self, o),
        };
        let vmin = [a, b]
            .iter()
            .filter_map(|x| match x {
                Dyadic::Value { val, .. } => Some(*val),
                _ => None,
            })
            .min()
            .expect("one operand has a value");
        if abs <= vmin {
            return Dyadic::Small { at_least: abs };
        }
        let bits = ((abs - vmin) as u32).min(126);
        let abs = vmin + bits as i64;
        let scaled = |x: &Dyadic| match x {
            Dyadic::Value { val, unit, .. } => {
                let shift = (val - vmin) as u32;
                if shift >= bits {
                    0
                } else {
                    (unit << shift) & mask(bits)
                }
            }
            _ => 0,
        };
        let s = scaled(a).wrapping_add(scaled(b)) & mask(bits);
        if s == 0 {
            return Dyadic::Small { at_least: abs };
        }
        let tz = s.trailing_zeros();
        Dyadic::Value {
            val: vmin + tz as i64,
            unit: s >> tz,
            prec: bits - tz,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        match (self, o) {
            (Dyadic::Zero, _) | (_, Dyadic::Zero) => Dyadic::Zero,
            (Dyadic::Small { at_least }, Dyadic::Value { val, .. }) | (Dyadic::Value { val, .. }, Dyadic::Small { at_least }) => {
                Dyadic::Small { at_least: at_least + val }
            }
            (Dyadic::Small { at_least: a }, Dyadic::Small { at_least: b }) => Dyadic::Small { at_least: a + b },
            (Dyadic::Value { val: v1, unit: u1, prec: p1 }, Dyadic::Value { val: v2, unit: u2, prec: p2 }) => {
                let prec = (*p1).min(*p2);
                Dyadic::Value {
                    val: v1 + v2,
                    unit: u1.wrapping_mul(*u2) & mask(prec),
                    prec,
                }
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match *self {
            Dyadic::Value { val, unit, prec } => Ok(Dyadic::Value {
                val: -val,
                unit: inv_odd(unit, prec),
                prec,
            }),
            Dyadic::Zero => Err(Error::Singular),
            Dyadic::Small { .. } => Err(insufficient("inverse of an unresolved zero")),
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    /// Equality up to the joint precision of both operands.
    pub fn congruent(&self, o: &Self) -> bool {
        matches!(self.sub(o), Dyadic::Zero | Dyadic::Small { .. })
    }

    /// `x mod 2^bits` for `x ∈ Z₂`, as a nonnegative integer.
    pub fn residue(&self, bits: u32) -> Result<u128> {
        match *self {
            Dyadic::Zero => Ok(0),
            Dyadic::Small { at_least } if at_least >= bits as i64 => Ok(0),
            Dyadic::Value { val, unit, prec } if val >= 0 && val + prec as i64 >= bits as i64 => {
                if val >= bits as i64 {
                    Ok(0)
                } else {
                    Ok((unit << val) & mask(bits))
                }
            }
            Dyadic::Value { val, .. } if val < 0 => Err(Error::InconsistentInputs("residue of a non-integral value".into())),
            _ => Err(insufficient("residue")),
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dyadic::Zero => write!(f, "0"),
            Dyadic::Small { at_least } => write!(f, "O(2^{at_least})"),
            Dyadic::Value { val, unit, prec } => write!(f, "2^{val}*{unit} + O(2^{})", val + *prec as i64),
        }
    }
}

/// `e^{2πi·num/2^log_den}`, exponent kept reduced mod 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    num: u128,
    log_den: u32,
}

impl RootOfUnity {
    pub fn one() -> Self {
        RootOfUnity { num: 0, log_den: 0 }
    }

    pub fn new(num: i128, log_den: u32) -> Self {
        let m = 1i128 << log_den;
        RootOfUnity {
            num: num.rem_euclid(m) as u128,
            log_den,
        }
        .reduced()
    }

    fn reduced(mut self) -> Self {
        while self.log_den > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.log_den -= 1;
        }
        if self.log_den == 0 {
            self.num = 0;
        }
        self
    }

    /// Exponent `q` with value `e^{2πiq}`, as `(numerator, denominator)`.
    pub fn exponent(&self) -> (u128, u128) {
        (self.num, 1u128 << self.log_den)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = self.log_den.max(o.log_den);
        let a = self.num << (d - self.log_den);
        let b = o.num << (d - o.log_den);
        RootOfUnity {
            num: (a + b) & mask(d),
            log_den: d,
        }
        .reduced()
    }

    pub fn conj(&self) -> Self {
        RootOfUnity::new(-(self.num as i128), self.log_den)
    }

    /// Value in `Q(√−1)` when the order divides 4.
    pub fn to_gauss(&self) -> Option<GaussRat> {
        match (self.num, self.log_den) {
            (0, 0) => Some(GaussRat::from_ints(1, 0)),
            (1, 1) => Some(GaussRat::from_ints(-1, 0)),
            (1, 2) => Some(GaussRat::from_ints(0, 1)),
            (3, 2) => Some(GaussRat::from_ints(0, -1)),
            _ => None,
        }
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_gauss() {
            Some(g) => write!(f, "{g}"),
            None => write!(f, "e^(2*pi*i*{}/{})", self.num, 1u128 << self.log_den),
        }
    }
}

/// `ψ(x)`; needs `x` modulo `2Z₂`.
pub fn psi(x: &Dyadic) -> Result<RootOfUnity> {
    match *x {
        Dyadic::Zero => Ok(RootOfUnity::one()),
        Dyadic::Small { at_least } if at_least >= 1 => Ok(RootOfUnity::one()),
        Dyadic::Small { .. } => Err(insufficient("psi argument known below 2Z2")),
        Dyadic::Value { val, .. } if val >= 1 => Ok(RootOfUnity::one()),
        Dyadic::Value { val, unit, prec } => {
            if val + (prec as i64) < 1 {
                return Err(insufficient("psi argument known below 2Z2"));
            }
            // r(x) = (u mod 2^{1−v})·2^v, ψ = e^{2πi·r/2}
            let bits = (1 - val) as u32;
            if bits > 120 {
                return Err(insufficient("psi denominator"));
            }
            Ok(RootOfUnity::new((unit & mask(bits)) as i128, bits))
        }
    }
}

/// `ψ` of an exact rational, retrying once at doubled precision.
pub fn psi_rat(x: &Rat) -> Result<RootOfUnity> {
    with_precision(|k| psi(&Dyadic::from_rat(x, k)))
}

/// Runs `f` at the default precision, doubling once on
/// `InsufficientPrecision`.
pub fn with_precision<T>(f: impl Fn(u32) -> Result<T>) -> Result<T> {
    let mut k = DEFAULT_PRECISION;
    loop {
        match f(k) {
            Err(Error::InsufficientPrecision(_)) if k < MAX_PRECISION => k *= 2,
            other => return other,
        }
    }
}

/// 2×2 matrix over `Q₂`.
pub type M2 = [[Dyadic; 2]; 2];

pub fn m2_from_rats(m: [[Rat; 2]; 2], prec: u32) -> M2 {
    m.map(|r| r.map(|x| Dyadic::from_rat(&x, prec)))
}

pub fn m2_from_ints(m: [[i64; 2]; 2], prec: u32) -> M2 {
    m.map(|r| r.map(|x| Dyadic::from_int(x, prec)))
}

pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]))))
}

pub fn m2_sub(a: &M2, b: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].sub(&b[i][j])))
}

pub fn m2_identity(prec: u32) -> M2 {
    m2_from_ints([[1, 0], [0, 1]], prec)
}

pub fn m2_det(a: &M2) -> Dyadic {
    a[0][0].mul(&a[1][1]).sub(&a[0][1].mul(&a[1][0]))
}

pub fn m2_inv(a: &M2) -> Result<M2> {
    let d = m2_det(a).inv()?;
    Ok([
        [a[1][1].mul(&d), a[0][1].neg().mul(&d)],
        [a[1][0].neg().mul(&d), a[0][0].mul(&d)],
    ])
}

fn m2_trace(a: &M2) -> Dyadic {
    a[0][0].add(&a[1][1])
}

/// Index `n` of `𝔓ⁿ`, or of `U_𝔘ⁿ = 1 + 𝔓ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FiltrationLevel(pub i64);

/// `m ∈ 𝔓ⁿ`: `𝔓^{2k} = 2^k𝔘` and `𝔓^{2k+1} = 2^kΠ𝔘` with `Π = [[0,1],[2,0]]`.
pub fn in_filtration(m: &M2, n: FiltrationLevel) -> Result<bool> {
    let k = n.0.div_euclid(2);
    let bounds = if n.0.rem_euclid(2) == 0 {
        [[k, k], [k + 1, k]]
    } else {
        [[k + 1, k], [k + 1, k + 1]]
    };
    for i in 0..2 {
        for j in 0..2 {
            if !m[i][j].val_at_least(bounds[i][j])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `m ∈ U_𝔘ⁿ`, `n ≥ 1`.
pub fn in_unit_filtration(m: &M2, n: FiltrationLevel) -> Result<bool> {
    if n.0 < 1 {
        return Err(Error::InconsistentInputs(format!("U^{} is not defined", n.0)));
    }
    let prec = match m[0][0] {
        Dyadic::Value { prec, .. } => prec,
        _ => DEFAULT_PRECISION,
    };
    in_filtration(&m2_sub(m, &m2_identity(prec)), n)
}

/// `(D, t)` of `α(D,t) = (1/8)[[0,1],[2D,2t]]`, kept as given; only
/// `D mod 4` and `t mod 2` matter for `ψ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphaDatum {
    pub d: i64,
    pub t: i64,
}

impl AlphaDatum {
    pub fn new(d: i64, t: i64) -> Result<Self> {
        if d % 2 == 0 {
            return Err(Error::InconsistentInputs(format!("D = {d} must be odd")));
        }
        Ok(AlphaDatum { d, t })
    }

    /// Canonical class `(±1, 0|1)`.
    pub fn class(&self) -> (i64, i64) {
        (if self.d.rem_euclid(4) == 1 { 1 } else { -1 }, self.t.rem_euclid(2))
    }

    pub fn matrix(&self, prec: u32) -> M2 {
        let e = |n: i64| Dyadic::from_rat(&Rat::new(n.into(), 8.into()), prec);
        [[e(0), e(1)], [e(2 * self.d), e(2 * self.t)]]
    }

    /// Generator `[[0,1],[2D,2t]] = 8α` of `E = Q₂(α)`, a uniformizer.
    pub fn uniformizer(&self, prec: u32) -> M2 {
        m2_from_ints([[0, 1], [2 * self.d, 2 * self.t]], prec)
    }
}

/// `ψ_α(x) = ψ(tr(α(x − 1)))` on `U_𝔘³`.
pub fn psi_alpha(a: &AlphaDatum, x: &M2) -> Result<RootOfUnity> {
    if !in_unit_filtration(x, FiltrationLevel(3))? {
        return Err(Error::InconsistentInputs("psi_alpha argument not in U^3".into()));
    }
    let prec = match x[0][0] {
        Dyadic::Value { prec, .. } => prec,
        _ => DEFAULT_PRECISION,
    };
    let y = m2_sub(x, &m2_identity(prec));
    psi(&m2_trace(&m2_mul(&a.matrix(prec), &y)))
}

/// Exact-rational convenience wrapper for [`psi_alpha`].
pub fn psi_alpha_rat(a: &AlphaDatum, x: [[Rat; 2]; 2]) -> Result<RootOfUnity> {
    with_precision(|k| psi_alpha(a, &m2_from_rats(x.clone(), k)))
}

/// Closed form on `x − 1 = [[4x₁, 2x₂],[4x₃, 4x₄]]`: `½x₃ + ½Dx₂ + t·x₄`.
pub fn psi_alpha_closed_form(a: &AlphaDatum, x: [[Rat; 2]; 2]) -> Result<RootOfUnity> {
    let one = Rat::one();
    let x2 = (&x[0][1]) / Rat::from_integer(2.into());
    let x3 = (&x[1][0]) / Rat::from_integer(4.into());
    let x4 = (&x[1][1] - &one) / Rat::from_integer(4.into());
    let half = Rat::new(1.into(), 2.into());
    let arg = &half * x3 + &half * Rat::from_integer(a.d.into()) * x2 + Rat::from_integer(a.t.into()) * x4;
    psi_rat(&arg)
}

/// Decomposition `g = Π_D^n · [[x,y],[2Dy,x]]` with `x` a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EUnit {
    pub n: i64,
    pub x: Dyadic,
    pub y: Dyadic,
}

fn pow_uniformizer(pi: &M2, n: i64) -> Result<M2> {
    let prec = match pi[0][1] {
        Dyadic::Value { prec, .. } => prec,
        _ => DEFAULT_PRECISION,
    };
    let base = if n < 0 { m2_inv(pi)? } else { *pi };
    let mut out = m2_identity(prec);
    for _ in 0..n.unsigned_abs() {
        out = m2_mul(&out, &base);
    }
    Ok(out)
}

/// Membership of `g` in `E^×` for `E = Q₂(Π_D)`, `Π_D = [[0,1],[2D,0]]`.
pub fn in_e_units(g: &M2, d: i64) -> Result<Option<EUnit>> {
    let a = AlphaDatum::new(d, 0)?;
    let prec = match g[0][0] {
        Dyadic::Value { prec, .. } => prec,
        _ => DEFAULT_PRECISION,
    };
    let Some(n) = m2_det(g).valuation()? else { return Err(Error::Singular) };
    let h = m2_mul(&pow_uniformizer(&a.uniformizer(prec), -n)?, g);
    let two_d = Dyadic::from_int(2 * d, prec);
    let shape = h[0][0].congruent(&h[1][1]) && h[1][0].congruent(&two_d.mul(&h[0][1]));
    if shape && h[0][0].is_unit()? && h[0][1].val_at_least(0)? {
        Ok(Some(EUnit { n, x: h[0][0], y: h[0][1] }))
    } else {
        Ok(None)
    }
}

/// `g ∈ J_α = E^× U_𝔘³`: strip the uniformizer power from the determinant
/// valuation, then try the four classes of `O_E^×/(1 + 𝔭_E³)`.
pub fn in_j_alpha(g: &M2, a: &AlphaDatum) -> Result<bool> {
    let prec = match g[0][0] {
        Dyadic::Value { prec, .. } => prec,
        _ => DEFAULT_PRECISION,
    };
    let Some(n) = m2_det(g).valuation()? else { return Err(Error::Singular) };
    let pi = a.uniformizer(prec);
    let h = m2_mul(&pow_uniformizer(&pi, -n)?, g);
    for x in [1, 3] {
        for y in [0, 1] {
            let e = m2_from_ints([[x, y], [2 * a.d * y, x + 2 * a.t * y]], prec);
            let r = m2_mul(&m2_inv(&e)?, &h);
            if in_unit_filtration(&r, FiltrationLevel(3))? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

pub fn in_j_alpha_rat(g: [[Rat; 2]; 2], a: &AlphaDatum) -> Result<bool> {
    with_precision(|k| in_j_alpha(&m2_from_rats(g.clone(), k), a))
}

/// Normal form of `α = (1/8)[[2a, b],[2c, 2d]]` up to conjugation:
/// `D ≡ bc − 2ad mod 4`, `t ≡ a + d mod 2`.
pub fn alpha_normal_form(a: &Dyadic, b: &Dyadic, c: &Dyadic, d: &Dyadic) -> Result<AlphaDatum> {
    if !b.is_unit()? || !c.is_unit()? {
        return Err(Error::NilpotentRisk(format!("b = {b}, c = {c} must be units")));
    }
    let two = Dyadic::from_int(2, DEFAULT_PRECISION);
    let disc = b.mul(c).sub(&two.mul(a).mul(d));
    let dd = disc.residue(2)?;
    let tt = a.add(d).residue(1)?;
    AlphaDatum::new(if dd == 1 { 1 } else { -1 }, tt as i64)
}

/// `s(D) = ψ_{α(D,0)}([[1,2],[4,1]]) + ψ_{α(D,0)}([[1,−2],[−4,1]])`.
pub fn alpha_sign_sum(d: i64) -> Result<GaussRat> {
    let a = AlphaDatum::new(d, 0)?;
    let r = |n: i64| Rat::from_integer(n.into());
    let mut total = GaussRat::from_ints(0, 0);
    for s in [1, -1] {
        let x = [[r(1), r(2 * s)], [r(4 * s), r(1)]];
        let v = psi_alpha_rat(&a, x)?
            .to_gauss()
            .ok_or_else(|| Error::InconsistentInputs("character value outside Q(i)".into()))?;
        total = &total + &v;
    }
    Ok(total)
}

/// Absolute value helper for the display of classes.
pub fn unit_class_mod4(x: i64) -> i64 {
    if x.rem_euclid(4) == 1 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn g(re: i64, im: i64) -> GaussRat {
        GaussRat::from_ints(re, im)
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi_rat(&q(1, 1)).unwrap().to_gauss(), Some(g(-1, 0)));
        assert_eq!(psi_rat(&q(1, 2)).unwrap().to_gauss(), Some(g(0, 1)));
        assert_eq!(psi_rat(&q(-1, 2)).unwrap().to_gauss(), Some(g(0, -1)));
        assert_eq!(psi_rat(&q(2, 15)).unwrap(), RootOfUnity::one());
        assert_eq!(psi_rat(&q(1, 3)).unwrap().to_gauss(), Some(g(-1, 0)));
        assert_eq!(psi_rat(&q(1, 8)).unwrap().exponent(), (1, 16));
    }

    fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
        let num = rng.gen_range(-1000i64..=1000);
        let den = (1i64 << rng.gen_range(0..8)) * (2 * rng.gen_range(0..20) + 1);
        q(num, den)
    }

    #[test]
    fn psi_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let (x, y) = (random_rat(&mut rng), random_rat(&mut rng));
            let lhs = psi_rat(&(&x + &y)).unwrap();
            assert_eq!(lhs, psi_rat(&x).unwrap().mul(&psi_rat(&y).unwrap()), "{x} {y}");
            assert_eq!(psi_rat(&x).unwrap().mul(&psi_rat(&-x.clone()).unwrap()), RootOfUnity::one());
        }
    }

    #[test]
    fn arithmetic_tracks_precision() {
        let a = Dyadic::from_rat(&q(3, 5), 8);
        let b = Dyadic::from_rat(&q(-3, 5), 8);
        assert!(matches!(a.add(&b), Dyadic::Small { at_least: 8 }));
        assert!(a.add(&b).valuation().is_err());
        let c = Dyadic::from_rat(&q(7, 12), 10);
        assert_eq!(c.valuation().unwrap(), Some(-2));
        assert!(c.mul(&c.inv().unwrap()).congruent(&Dyadic::from_int(1, 10)));
        assert_eq!(Dyadic::from_rat(&q(1, 3), 6).residue(6).unwrap(), 43);
    }

    #[test]
    fn filtration_examples() {
        let k = DEFAULT_PRECISION;
        let pi = m2_from_ints([[0, 1], [2, 0]], k);
        assert!(in_filtration(&pi, FiltrationLevel(1)).unwrap());
        assert!(!in_filtration(&pi, FiltrationLevel(2)).unwrap());
        let x = m2_from_ints([[5, 2], [4, 5]], k);
        assert!(in_unit_filtration(&x, FiltrationLevel(3)).unwrap());
        let alpha = m2_from_rats([[q(0, 1), q(1, 8)], [q(-2, 8), q(0, 1)]], k);
        assert!(in_filtration(&alpha, FiltrationLevel(-5)).unwrap());
        assert!(!in_filtration(&alpha, FiltrationLevel(-4)).unwrap());
    }

    #[test]
    fn psi_alpha_examples() {
        let r = |n: i64| q(n, 1);
        let x = [[r(1), r(2)], [r(4), r(1)]];
        assert_eq!(psi_alpha_rat(&AlphaDatum::new(-1, 0).unwrap(), x.clone()).unwrap(), RootOfUnity::one());
        assert_eq!(
            psi_alpha_rat(&AlphaDatum::new(1, 0).unwrap(), x).unwrap().to_gauss(),
            Some(g(-1, 0))
        );
        let id = [[r(1), r(0)], [r(0), r(1)]];
        assert_eq!(psi_alpha_rat(&AlphaDatum::new(1, 1).unwrap(), id).unwrap(), RootOfUnity::one());
        let five = [[r(5), r(0)], [r(0), r(5)]];
        for d in [1, -1] {
            let v = psi_alpha_rat(&AlphaDatum::new(d, 1).unwrap(), five.clone()).unwrap();
            assert_eq!(v.to_gauss(), Some(g(-1, 0)));
        }
    }

    fn random_u3(rng: &mut ChaCha8Rng) -> [[Rat; 2]; 2] {
        let mut e = || {
            let den = 2 * rng.gen_range(0..10) + 1;
            q(rng.gen_range(-50..=50), den)
        };
        let (a, b, c, d) = (e(), e(), e(), e());
        [[q(1, 1) + q(4, 1) * a, q(2, 1) * b], [q(4, 1) * c, q(1, 1) + q(4, 1) * d]]
    }

    #[test]
    fn psi_alpha_depends_on_classes_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let x = random_u3(&mut rng);
            for (d, t) in [(1, 0), (-1, 0), (1, 1), (-1, 1)] {
                let a = AlphaDatum::new(d, t).unwrap();
                let shifted = AlphaDatum::new(d + 4 * rng.gen_range(-3..=3), t + 2 * rng.gen_range(-3..=3)).unwrap();
                let v = psi_alpha_rat(&a, x.clone()).unwrap();
                assert_eq!(v, psi_alpha_rat(&shifted, x.clone()).unwrap());
                assert_eq!(v, psi_alpha_closed_form(&a, x.clone()).unwrap());
            }
        }
    }

    #[test]
    fn e_units() {
        let k = DEFAULT_PRECISION;
        let u = in_e_units(&m2_from_ints([[1, 1], [-2, 1]], k), -1).unwrap().unwrap();
        assert_eq!(u.n, 0);
        assert!(u.x.congruent(&Dyadic::from_int(1, k)) && u.y.congruent(&Dyadic::from_int(1, k)));
        let p = in_e_units(&m2_from_ints([[0, 1], [-2, 0]], k), -1).unwrap().unwrap();
        assert_eq!(p.n, 1);
        assert!(p.x.congruent(&Dyadic::from_int(1, k)) && matches!(p.y, Dyadic::Zero | Dyadic::Small { .. }));
        assert!(in_e_units(&m2_from_ints([[1, 0], [0, 2]], k), -1).unwrap().is_none());
    }

    #[test]
    fn j_alpha_membership() {
        let a = AlphaDatum::new(-1, 0).unwrap();
        let r = |n: i64| q(n, 1);
        assert!(in_j_alpha_rat([[r(5), r(2)], [r(4), r(5)]], &a).unwrap());
        // [[1,1],[−2,1]]·[[5,2],[4,5]]
        assert!(in_j_alpha_rat([[r(9), r(7)], [r(-6), r(1)]], &a).unwrap());
        assert!(!in_j_alpha_rat([[r(1), r(0)], [r(0), r(3)]], &a).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = random_u3(&mut rng);
            let y = m2_from_rats(random_u3(&mut rng), 32);
            let e = m2_from_ints([[3, 1], [-2, 3]], 32);
            let gx = m2_mul(&e, &m2_from_rats(x, 32));
            assert!(in_j_alpha(&gx, &a).unwrap());
            assert!(in_j_alpha(&m2_mul(&gx, &y), &a).unwrap());
        }
    }

    #[test]
    fn alpha_normal_forms() {
        let k = DEFAULT_PRECISION;
        let z = |n| Dyadic::from_int(n, k);
        assert_eq!(alpha_normal_form(&z(0), &z(1), &z(-1), &z(0)).unwrap().class(), (-1, 0));
        assert_eq!(alpha_normal_form(&z(1), &z(1), &z(1), &z(1)).unwrap().class(), (-1, 0));
        assert!(matches!(
            alpha_normal_form(&z(0), &z(2), &z(1), &z(0)),
            Err(Error::NilpotentRisk(_))
        ));
    }

    #[test]
    fn sign_sums() {
        assert_eq!(alpha_sign_sum(1).unwrap(), g(-2, 0));
        assert_eq!(alpha_sign_sum(-1).unwrap(), g(2, 0));
    }
}
