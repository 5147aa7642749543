use super::gcd::gcd;
use super::poly::{Monomial, MultiPoly};
use super::var::VarId;
use super::{ExactError, Field, Rational, Ring};
use num::{One, Zero};
use std::collections::HashMap;
use std::fmt;

/// Reduced quotient of polynomials. The denominator is kept free of `eps`
/// and of jet variables, and is monic in the monomial order.
#[derive(Clone, Eq, Hash)]
pub struct MultiRat {
    num: MultiPoly,
    den: MultiPoly,
}

impl MultiRat {
    pub fn zero() -> MultiRat {
        MultiRat { num: MultiPoly::zero(), den: MultiPoly::one() }
    }
    pub fn one() -> MultiRat {
        MultiRat::from_poly(MultiPoly::one())
    }
    pub fn from_poly(p: MultiPoly) -> MultiRat {
        MultiRat { num: p, den: MultiPoly::one() }
    }
    pub fn constant(c: Rational) -> MultiRat {
        MultiRat::from_poly(MultiPoly::constant(c))
    }
    pub fn int(c: i64) -> MultiRat {
        MultiRat::from_poly(MultiPoly::int(c))
    }
    pub fn var(v: VarId) -> MultiRat {
        MultiRat::from_poly(MultiPoly::var(v))
    }

    /// Reduce `num/den` to canonical form.
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<MultiRat, ExactError> {
        if den.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(MultiRat::zero());
        }
        let (mut num, mut den) = (num, den);
        if den.contains_var(VarId::eps()) {
            let (d0, d1) = den.split_eps();
            let conj = d0.sub(&d1.mul(&MultiPoly::var(VarId::eps())));
            num = num.mul(&conj);
            den = d0.mul(&d0).sub(&d1.mul(&d1));
            if den.is_zero() {
                return Err(ExactError::DivisionByZero);
            }
        }
        loop {
            let (q0, q1) = den.split_jet();
            if q1.is_zero() {
                break;
            }
            if q0.is_zero() {
                return Err(ExactError::DivisionByZero);
            }
            let conj = q0.sub(&q1);
            num = num.mul(&conj);
            den = den.mul(&conj);
        }
        if num.is_zero() {
            return Ok(MultiRat::zero());
        }
        let mg = num.monomial_content().gcd(&den.monomial_content());
        if !mg.is_one() {
            num = num.div_monomial(&mg).unwrap();
            den = den.div_monomial(&mg).unwrap();
        }
        if !den.is_constant() && !num.is_constant() {
            let g = gcd(&num, &den);
            if !g.is_constant() {
                num = num.exact_div(&g).expect("gcd divides numerator");
                den = den.exact_div(&g).expect("gcd divides denominator");
            }
        }
        Ok(Self::monic(num, den))
    }

    fn monic(num: MultiPoly, den: MultiPoly) -> MultiRat {
        let lc = den.leading().unwrap().1.clone();
        if lc.is_one() {
            MultiRat { num, den }
        } else {
            let r = lc.recip();
            MultiRat { num: num.scale(&r), den: den.scale(&r) }
        }
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }
    pub fn den(&self) -> &MultiPoly {
        &self.den
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }
    pub fn is_poly(&self) -> bool {
        self.den.is_one()
    }
    pub fn as_constant(&self) -> Option<Rational> {
        Some(self.num.as_constant()? / self.den.as_constant()?)
    }
    pub fn contains_var(&self, v: VarId) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }
    pub fn vars(&self) -> std::collections::BTreeSet<VarId> {
        let mut s = self.num.vars();
        s.extend(self.den.vars());
        s
    }

    pub fn add(&self, o: &MultiRat) -> MultiRat {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return MultiRat::new(self.num.add(&o.num), self.den.clone()).unwrap();
        }
        if o.den.is_one() {
            return MultiRat { num: self.num.add(&o.num.mul(&self.den)), den: self.den.clone() }.renorm();
        }
        if self.den.is_one() {
            return MultiRat { num: o.num.add(&self.num.mul(&o.den)), den: o.den.clone() }.renorm();
        }
        let g = gcd(&self.den, &o.den);
        let d1 = self.den.exact_div(&g).unwrap();
        let d2 = o.den.exact_div(&g).unwrap();
        let num = self.num.mul(&d2).add(&o.num.mul(&d1));
        MultiRat::new(num, d1.mul(&o.den)).unwrap()
    }

    /// Reduce after adding a polynomial to a reduced fraction; only the
    /// content can need cancelling.
    fn renorm(self) -> MultiRat {
        if self.num.is_zero() {
            return MultiRat::zero();
        }
        self
    }

    pub fn neg(&self) -> MultiRat {
        MultiRat { num: self.num.neg(), den: self.den.clone() }
    }
    pub fn sub(&self, o: &MultiRat) -> MultiRat {
        self.add(&o.neg())
    }
    pub fn scale(&self, c: &Rational) -> MultiRat {
        if c.is_zero() {
            return MultiRat::zero();
        }
        MultiRat { num: self.num.scale(c), den: self.den.clone() }
    }
    pub fn mul_poly(&self, p: &MultiPoly) -> MultiRat {
        MultiRat::new(self.num.mul(p), self.den.clone()).unwrap()
    }
    pub fn mul(&self, o: &MultiRat) -> MultiRat {
        if self.is_zero() || o.is_zero() {
            return MultiRat::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return MultiRat::from_poly(self.num.mul(&o.num));
        }
        let g1 = if o.den.is_one() { MultiPoly::one() } else { gcd(&self.num, &o.den) };
        let g2 = if self.den.is_one() { MultiPoly::one() } else { gcd(&o.num, &self.den) };
        let n1 = self.num.exact_div(&g1).unwrap();
        let d2 = o.den.exact_div(&g1).unwrap();
        let n2 = o.num.exact_div(&g2).unwrap();
        let d1 = self.den.exact_div(&g2).unwrap();
        let num = n1.mul(&n2);
        if num.is_zero() {
            return MultiRat::zero();
        }
        let den = d1.mul(&d2);
        if num.contains_family(|v| v.is_eps() || v.is_jet()) {
            return MultiRat::new(num, den).unwrap();
        }
        Self::monic(num, den)
    }
    pub fn inv(&self) -> Result<MultiRat, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if self.num.contains_family(|v| v.is_eps() || v.is_jet()) {
            return MultiRat::new(self.den.clone(), self.num.clone());
        }
        Ok(Self::monic(self.den.clone(), self.num.clone()))
    }
    pub fn div(&self, o: &MultiRat) -> Result<MultiRat, ExactError> {
        Ok(self.mul(&o.inv()?))
    }
    pub fn pow(&self, e: i32) -> Result<MultiRat, ExactError> {
        let b = if e < 0 { self.inv()? } else { self.clone() };
        let mut r = MultiRat::one();
        for _ in 0..e.unsigned_abs() {
            r = r.mul(&b);
        }
        Ok(r)
    }

    pub fn partial_derivative(&self, v: VarId) -> MultiRat {
        let dn = self.num.partial_derivative(v);
        if self.den.is_one() || !self.den.contains_var(v) {
            return MultiRat::new(dn, self.den.clone()).unwrap();
        }
        let dd = self.den.partial_derivative(v);
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        MultiRat::new(num, self.den.mul(&self.den)).unwrap()
    }

    /// Evaluate at rational values; variables without a value are an error.
    pub fn evaluate(&self, f: &dyn Fn(VarId) -> Option<Rational>) -> Result<Rational, ExactError> {
        let miss = |p: &MultiPoly| {
            p.vars().into_iter().find(|v| f(*v).is_none()).map(|v| ExactError::Unassigned(v.to_string()))
        };
        let n = match self.num.eval_rational(f) {
            Some(n) => n,
            None => return Err(miss(&self.num).unwrap()),
        };
        let d = match self.den.eval_rational(f) {
            Some(d) => d,
            None => return Err(miss(&self.den).unwrap()),
        };
        if d.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        Ok(n / d)
    }

    /// Evaluate numerator and denominator in a field and divide.
    pub fn eval_in<F: Field>(&self, one: &F, f: &mut dyn FnMut(VarId) -> F) -> Result<F, F::Error> {
        let mut cache: HashMap<VarId, F> = HashMap::new();
        let mut g = |v: VarId| -> F { cache.entry(v).or_insert_with(|| f(v)).clone() };
        let n = self.num.eval_in(one, &mut g);
        if self.den.is_one() {
            return Ok(n);
        }
        let d = self.den.eval_in(one, &mut g);
        n.div(&d)
    }

    /// Substitute rational functions for variables.
    pub fn substitute(&self, map: &HashMap<VarId, MultiRat>) -> Result<MultiRat, ExactError> {
        if !self.vars().iter().any(|v| map.contains_key(v)) {
            return Ok(self.clone());
        }
        self.eval_in(&MultiRat::one(), &mut |v| map.get(&v).cloned().unwrap_or_else(|| MultiRat::var(v)))
    }
    pub fn substitute1(&self, v: VarId, r: &MultiRat) -> Result<MultiRat, ExactError> {
        let mut m = HashMap::new();
        m.insert(v, r.clone());
        self.substitute(&m)
    }

    pub fn map_vars(&self, f: impl Fn(VarId) -> VarId + Copy) -> MultiRat {
        MultiRat::new(self.num.map_vars(f), self.den.map_vars(f)).unwrap()
    }
    pub fn shift_sites(&self, d: i64) -> MultiRat {
        MultiRat { num: self.num.shift_sites(d), den: self.den.shift_sites(d) }
    }

    /// Equality by cross-multiplication.
    pub fn equals(&self, o: &MultiRat) -> bool {
        (self.num == o.num && self.den == o.den) || self.num.mul(&o.den) == o.num.mul(&self.den)
    }

    /// Numerator monomial scaled by the denominator, used for valuations.
    pub fn leading_monomial(&self) -> Option<Monomial> {
        self.num.leading().map(|t| t.0.clone())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for MultiRat {
    fn eq(&self, o: &Self) -> bool {
        self.equals(o)
    }
}

impl fmt::Display for MultiRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
impl fmt::Debug for MultiRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Ring for MultiRat {
    fn add(&self, o: &Self) -> Self {
        MultiRat::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        MultiRat::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        MultiRat::mul(self, o)
    }
    fn neg(&self) -> Self {
        MultiRat::neg(self)
    }
    fn scale(&self, c: &Rational) -> Self {
        MultiRat::scale(self, c)
    }
    fn vanishes(&self) -> bool {
        MultiRat::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        MultiRat::zero()
    }
    fn one_like(&self) -> Self {
        MultiRat::one()
    }
}

impl Field for MultiRat {
    type Error = ExactError;
    fn inv(&self) -> Result<Self, ExactError> {
        MultiRat::inv(self)
    }
}

impl From<MultiPoly> for MultiRat {
    fn from(p: MultiPoly) -> MultiRat {
        MultiRat::from_poly(p)
    }
}
impl From<Rational> for MultiRat {
    fn from(c: Rational) -> MultiRat {
        MultiRat::constant(c)
    }
}
