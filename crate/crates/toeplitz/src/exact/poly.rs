use super::var::{Family, VarId};
use super::Rational;
use num::{BigInt, One, Signed, Zero};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Sorted list of `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub SmallVec<[(VarId, u32); 4]>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(SmallVec::new())
    }
    pub fn var(v: VarId, e: u32) -> Monomial {
        let mut m = Monomial::one();
        if e > 0 {
            m.0.push((v, e));
        }
        m
    }
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
    pub fn degree(&self, v: VarId) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map(|p| p.1).unwrap_or(0)
    }
    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|p| p.1).sum()
    }

    /// Product with the ring reductions: `eps^2 = 1` and jet truncation.
    /// Returns `None` when the product vanishes.
    pub fn mul(&self, o: &Monomial) -> Option<Monomial> {
        let mut out: SmallVec<[(VarId, u32); 4]> = SmallVec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            let next = if j >= o.0.len() || (i < self.0.len() && self.0[i].0 < o.0[j].0) {
                i += 1;
                self.0[i - 1]
            } else if i >= self.0.len() || o.0[j].0 < self.0[i].0 {
                j += 1;
                o.0[j - 1]
            } else {
                i += 1;
                j += 1;
                (self.0[i - 1].0, self.0[i - 1].1 + o.0[j - 1].1)
            };
            out.push(next);
        }
        Monomial(out).reduce()
    }

    fn reduce(mut self) -> Option<Monomial> {
        let mut jet_deg = 0u32;
        let mut jet_cap = u32::MAX;
        self.0.retain(|(v, e)| {
            if v.is_eps() {
                *e %= 2;
                return *e > 0;
            }
            if v.is_jet() {
                jet_deg += *e;
                jet_cap = jet_cap.min((v.index().rem_euclid(64)) as u32);
            }
            true
        });
        if jet_deg >= jet_cap {
            return None;
        }
        Some(self)
    }

    /// Divide by `o` if it divides `self`.
    pub fn div(&self, o: &Monomial) -> Option<Monomial> {
        let mut out = self.0.clone();
        for &(v, e) in o.0.iter() {
            let pos = out.iter().position(|p| p.0 == v)?;
            if out[pos].1 < e {
                return None;
            }
            out[pos].1 -= e;
            if out[pos].1 == 0 {
                out.remove(pos);
            }
        }
        Some(Monomial(out))
    }

    pub fn gcd(&self, o: &Monomial) -> Monomial {
        let mut out = SmallVec::new();
        for &(v, e) in self.0.iter() {
            let f = o.degree(v);
            if f > 0 {
                out.push((v, e.min(f)));
            }
        }
        Monomial(out)
    }

    pub fn without(&self, v: VarId) -> Monomial {
        Monomial(self.0.iter().copied().filter(|p| p.0 != v).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        let (a, b) = (&self.0, &o.0);
        let n = a.len().min(b.len());
        for i in 0..n {
            if a[i].0 != b[i].0 {
                return if a[i].0 < b[i].0 { Ordering::Greater } else { Ordering::Less };
            }
            if a[i].1 != b[i].1 {
                return a[i].1.cmp(&b[i].1);
            }
        }
        a.len().cmp(&b.len())
    }
}
impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(v, e) in self.0.iter() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse multivariate polynomial over the rationals, terms sorted by
/// decreasing monomial.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: Vec<(Monomial, Rational)>,
}

impl MultiPoly {
    pub fn zero() -> MultiPoly {
        MultiPoly { terms: Vec::new() }
    }
    pub fn one() -> MultiPoly {
        MultiPoly::constant(Rational::one())
    }
    pub fn constant(c: Rational) -> MultiPoly {
        if c.is_zero() {
            MultiPoly::zero()
        } else {
            MultiPoly { terms: vec![(Monomial::one(), c)] }
        }
    }
    pub fn int(c: i64) -> MultiPoly {
        MultiPoly::constant(Rational::from_integer(c.into()))
    }
    pub fn var(v: VarId) -> MultiPoly {
        MultiPoly::term(Monomial::var(v, 1), Rational::one())
    }
    pub fn term(m: Monomial, c: Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        match m.reduce() {
            Some(m) => MultiPoly { terms: vec![(m, c)] },
            None => MultiPoly::zero(),
        }
    }
    /// Build from unsorted terms, merging duplicates.
    pub fn from_terms(ts: impl IntoIterator<Item = (Monomial, Rational)>) -> MultiPoly {
        let mut map: HashMap<Monomial, Rational> = HashMap::new();
        for (m, c) in ts {
            if let Some(m) = m.reduce() {
                *map.entry(m).or_insert_with(Rational::zero) += c;
            }
        }
        Self::from_map(map)
    }
    fn from_map(map: HashMap<Monomial, Rational>) -> MultiPoly {
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        MultiPoly { terms }
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 if self.terms[0].0.is_one() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }
    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }
    pub fn leading(&self) -> Option<&(Monomial, Rational)> {
        self.terms.first()
    }
    /// Constant term.
    pub fn constant_term(&self) -> Rational {
        self.terms
            .iter()
            .find(|t| t.0.is_one())
            .map(|t| t.1.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, o: &MultiPoly) -> MultiPoly {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < o.terms.len() {
            match self.terms[i].0.cmp(&o.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(o.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &o.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&o.terms[j..]);
        MultiPoly { terms: out }
    }
    pub fn neg(&self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
    pub fn sub(&self, o: &MultiPoly) -> MultiPoly {
        self.add(&o.neg())
    }
    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }
    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        let ts = self.terms.iter().filter_map(|(n, d)| n.mul(m).map(|p| (p, d * c)));
        if m.0.iter().any(|p| p.0.is_eps() || p.0.is_jet()) {
            MultiPoly::from_terms(ts)
        } else {
            MultiPoly { terms: ts.collect() }
        }
    }
    pub fn mul(&self, o: &MultiPoly) -> MultiPoly {
        if self.is_zero() || o.is_zero() {
            return MultiPoly::zero();
        }
        if o.terms.len() == 1 {
            return self.mul_term(&o.terms[0].0, &o.terms[0].1);
        }
        if self.terms.len() == 1 {
            return o.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut map: HashMap<Monomial, Rational> = HashMap::with_capacity(self.terms.len() * o.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                if let Some(m) = m1.mul(m2) {
                    let p = c1 * c2;
                    match map.get_mut(&m) {
                        Some(e) => *e += p,
                        None => {
                            map.insert(m, p);
                        }
                    }
                }
            }
        }
        MultiPoly::from_map(map)
    }
    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut r = MultiPoly::one();
        let mut b = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.iter().flat_map(|(m, _)| m.0.iter().map(|p| p.0)).collect()
    }
    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.iter().any(|(m, _)| m.degree(v) > 0)
    }
    pub fn contains_family(&self, f: impl Fn(VarId) -> bool) -> bool {
        self.terms.iter().any(|(m, _)| m.0.iter().any(|p| f(p.0)))
    }
    pub fn degree(&self, v: VarId) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree(v)).max().unwrap_or(0)
    }
    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.total_degree()).max().unwrap_or(0)
    }

    pub fn partial_derivative(&self, v: VarId) -> MultiPoly {
        let ts = self.terms.iter().filter_map(|(m, c)| {
            let e = m.degree(v);
            if e == 0 {
                return None;
            }
            let mut m2 = m.clone();
            let pos = m2.0.iter().position(|p| p.0 == v).unwrap();
            if e == 1 {
                m2.0.remove(pos);
            } else {
                m2.0[pos].1 -= 1;
            }
            Some((m2, c * Rational::from_integer(BigInt::from(e))))
        });
        MultiPoly::from_terms(ts)
    }

    /// Coefficients in `v`: `result[i]` multiplies `v^i`.
    pub fn to_univariate(&self, v: VarId) -> Vec<MultiPoly> {
        let d = self.degree(v) as usize;
        let mut parts: Vec<Vec<(Monomial, Rational)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let e = m.degree(v) as usize;
            parts[e].push((m.without(v), c.clone()));
        }
        parts
            .into_iter()
            .map(|mut ts| {
                ts.sort_by(|a, b| b.0.cmp(&a.0));
                MultiPoly { terms: ts }
            })
            .collect()
    }
    pub fn from_univariate(v: VarId, cs: &[MultiPoly]) -> MultiPoly {
        let mut acc = MultiPoly::zero();
        for (i, c) in cs.iter().enumerate() {
            acc = acc.add(&c.mul_term(&Monomial::var(v, i as u32), &Rational::one()));
        }
        acc
    }
    /// Coefficient of `v^e`.
    pub fn coeff_of(&self, v: VarId, e: u32) -> MultiPoly {
        let ts: Vec<_> = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree(v) == e)
            .map(|(m, c)| (m.without(v), c.clone()))
            .collect();
        let mut ts = ts;
        ts.sort_by(|a, b| b.0.cmp(&a.0));
        MultiPoly { terms: ts }
    }

    /// Substitute `v := q`.
    pub fn substitute(&self, v: VarId, q: &MultiPoly) -> MultiPoly {
        if !self.contains_var(v) {
            return self.clone();
        }
        let cs = self.to_univariate(v);
        let mut acc = MultiPoly::zero();
        for c in cs.iter().rev() {
            acc = acc.mul(q).add(c);
        }
        acc
    }

    /// Rename variables through `f`.
    pub fn map_vars(&self, f: impl Fn(VarId) -> VarId) -> MultiPoly {
        MultiPoly::from_terms(self.terms.iter().map(|(m, c)| {
            let mut prod: BTreeMap<VarId, u32> = BTreeMap::new();
            for &(v, e) in m.0.iter() {
                *prod.entry(f(v)).or_insert(0) += e;
            }
            (Monomial(prod.into_iter().collect()), c.clone())
        }))
    }
    pub fn shift_sites(&self, d: i64) -> MultiPoly {
        self.map_vars(|v| v.shift_site(d))
    }

    /// Evaluate in any ring, Horner-style in the leading variable.
    pub fn eval_in<R: super::Ring>(&self, one: &R, f: &mut dyn FnMut(VarId) -> R) -> R {
        let mut cache: HashMap<VarId, R> = HashMap::new();
        let mut g = |v: VarId| -> R { cache.entry(v).or_insert_with(|| f(v)).clone() };
        self.eval_rec(one, &mut g)
    }
    fn eval_rec<R: super::Ring>(&self, one: &R, g: &mut dyn FnMut(VarId) -> R) -> R {
        if let Some(c) = self.as_constant() {
            return one.scale(&c);
        }
        let v = self.terms[0].0 .0[0].0;
        let cs = self.to_univariate(v);
        let x = g(v);
        let mut acc = one.zero_like();
        for c in cs.iter().rev() {
            acc = acc.mul(&x);
            if !c.is_zero() {
                acc = acc.add(&c.eval_rec(one, g));
            }
        }
        acc
    }
    pub fn eval_rational(&self, f: &dyn Fn(VarId) -> Option<Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        let mut cache: HashMap<VarId, Rational> = HashMap::new();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in m.0.iter() {
                let x = match cache.get(&v) {
                    Some(x) => x.clone(),
                    None => {
                        let x = f(v)?;
                        cache.insert(v, x.clone());
                        x
                    }
                };
                t *= num::pow(x, e as usize);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Gcd of the integer numerators over lcm of denominators, signed by the
    /// leading coefficient.
    pub fn content(&self) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for (_, c) in &self.terms {
            g = num::integer::gcd(g, c.numer().clone());
            l = num::integer::lcm(l, c.denom().clone());
        }
        let r = Rational::new(g, l);
        if self.terms[0].1.is_negative() {
            -r
        } else {
            r
        }
    }
    pub fn primitive(&self) -> MultiPoly {
        if self.is_zero() {
            return MultiPoly::zero();
        }
        self.scale(&self.content().recip())
    }
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let first = match it.next() {
            Some(t) => t.0.clone(),
            None => return Monomial::one(),
        };
        it.fold(first, |g, t| g.gcd(&t.0))
    }
    pub fn div_monomial(&self, m: &Monomial) -> Option<MultiPoly> {
        let mut ts = Vec::with_capacity(self.terms.len());
        for (n, c) in &self.terms {
            ts.push((n.div(m)?, c.clone()));
        }
        Some(MultiPoly { terms: ts })
    }

    /// Exact division, `None` when `o` does not divide `self`.
    pub fn exact_div(&self, o: &MultiPoly) -> Option<MultiPoly> {
        if o.is_zero() {
            return None;
        }
        if let Some(c) = o.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if o.terms.len() == 1 {
            return self.div_monomial(&o.terms[0].0).map(|p| p.scale(&o.terms[0].1.recip()));
        }
        let (lm, lc) = o.terms[0].clone();
        let lci = lc.recip();
        let mut rem = self.clone();
        let mut q: Vec<(Monomial, Rational)> = Vec::new();
        while let Some((m, c)) = rem.terms.first().cloned() {
            let qm = m.div(&lm)?;
            let qc = &c * &lci;
            rem = rem.sub(&o.mul_term(&qm, &qc));
            q.push((qm, qc));
        }
        Some(MultiPoly::from_terms(q))
    }

    /// Leading variable of the leading term, if any.
    pub fn main_var(&self) -> Option<VarId> {
        self.terms.first().and_then(|t| t.0 .0.first().map(|p| p.0))
    }

    /// Split `p = p0 + eps*p1`.
    pub fn split_eps(&self) -> (MultiPoly, MultiPoly) {
        let e = VarId::eps();
        (self.coeff_of(e, 0), self.coeff_of(e, 1))
    }
    /// Split into jet-free part and the rest.
    pub fn split_jet(&self) -> (MultiPoly, MultiPoly) {
        let (a, b): (Vec<_>, Vec<_>) =
            self.terms.iter().cloned().partition(|(m, _)| !m.0.iter().any(|p| p.0.is_jet()));
        (MultiPoly { terms: a }, MultiPoly { terms: b })
    }

    /// Drop every term whose `t`-family degree is at least `n`.
    pub fn truncate_in(&self, v: VarId, n: u32) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().filter(|(m, _)| m.degree(v) < n).cloned().collect() }
    }

    pub fn families(&self) -> BTreeSet<Family> {
        self.vars().into_iter().map(|v| v.family()).collect()
    }
}

pub(crate) fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&a))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&MultiPoly> for &MultiPoly {
            type Output = MultiPoly;
            fn $m(self, o: &MultiPoly) -> MultiPoly {
                MultiPoly::$f(self, o)
            }
        }
        impl std::ops::$tr<MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, o: MultiPoly) -> MultiPoly {
                MultiPoly::$f(&self, &o)
            }
        }
    };
}
binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl std::ops::Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly::neg(self)
    }
}
impl std::ops::Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly::neg(&self)
    }
}
