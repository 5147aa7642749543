//! Multivariate polynomial gcd over the rationals.

use super::poly::{Monomial, MultiPoly};
use super::var::VarId;
use super::Rational;
use num::{BigInt, Integer, One, ToPrimitive, Zero};
use std::collections::{BTreeSet, HashMap};

const PRIMES: [u64; 3] = [2_147_483_647, 2_147_483_629, 2_147_483_587];

fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}
fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    r
}
fn invm(a: u64, p: u64) -> u64 {
    powm(a, p - 2, p)
}
fn rat_mod(c: &Rational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let n = c.numer().mod_floor(&pb).to_u64()?;
    let d = c.denom().mod_floor(&pb).to_u64()?;
    if d == 0 {
        return None;
    }
    Some(mulm(n, invm(d, p), p))
}

/// Dense image in `v` of `a` with every other variable evaluated mod `p`.
fn image(a: &MultiPoly, v: VarId, pt: &HashMap<VarId, u64>, p: u64) -> Option<Vec<u64>> {
    let mut out = vec![0u64; a.degree(v) as usize + 1];
    for (m, c) in a.terms() {
        let mut t = rat_mod(c, p)?;
        let mut e = 0usize;
        for &(w, k) in m.0.iter() {
            if w == v {
                e = k as usize;
            } else {
                t = mulm(t, powm(pt[&w], k as u64, p), p);
            }
        }
        out[e] = (out[e] + t) % p;
    }
    Some(out)
}

fn trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn gcd_deg_mod(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> usize {
    trim(&mut a);
    trim(&mut b);
    loop {
        if b.len() == 1 && b[0] == 0 {
            return a.len() - 1;
        }
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        let inv = invm(*b.last().unwrap(), p);
        while a.len() >= b.len() && !(a.len() == 1 && a[0] == 0) {
            let q = mulm(*a.last().unwrap(), inv, p);
            let s = a.len() - b.len();
            for (i, bi) in b.iter().enumerate() {
                a[s + i] = (a[s + i] + p - mulm(q, *bi, p)) % p;
            }
            a.pop();
            if a.is_empty() {
                a.push(0);
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
}

struct Lcg(u64);
impl Lcg {
    fn next(&mut self, p: u64) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        2 + (self.0 >> 11) % (p - 3)
    }
}

/// Rigorous test that `gcd(a, b)` is free of `v`. Returns `false` when
/// inconclusive.
fn gcd_free_of(a: &MultiPoly, b: &MultiPoly, v: VarId, vars: &BTreeSet<VarId>) -> bool {
    let mut rng = Lcg(0x9e37_79b9_7f4a_7c15 ^ v.raw() as u64);
    let (da, db) = (a.degree(v) as usize, b.degree(v) as usize);
    for &p in PRIMES.iter() {
        for _ in 0..2 {
            let pt: HashMap<VarId, u64> = vars.iter().map(|&w| (w, rng.next(p))).collect();
            let (ia, ib) = match (image(a, v, &pt, p), image(b, v, &pt, p)) {
                (Some(x), Some(y)) => (x, y),
                _ => break,
            };
            if ia[da] == 0 || ib[db] == 0 {
                continue;
            }
            if gcd_deg_mod(ia, ib, p) == 0 {
                return true;
            }
        }
    }
    false
}

fn normalize(g: MultiPoly) -> MultiPoly {
    if g.is_zero() {
        return g;
    }
    g.primitive()
}

/// Content of `a` viewed as a polynomial in `v`.
pub fn content_in(a: &MultiPoly, v: VarId) -> MultiPoly {
    let cs = a.to_univariate(v);
    let mut g = MultiPoly::zero();
    for c in cs.iter().filter(|c| !c.is_zero()) {
        g = gcd(&g, c);
        if g.is_constant() {
            return MultiPoly::one();
        }
    }
    g
}

fn prem(a: &[MultiPoly], b: &[MultiPoly]) -> Vec<MultiPoly> {
    let mut r: Vec<MultiPoly> = a.to_vec();
    let lb = b.last().unwrap().clone();
    let db = b.len() - 1;
    while r.len() > db && !r.is_empty() {
        let lr = r.last().unwrap().clone();
        let s = r.len() - 1 - db;
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for (i, bi) in b.iter().enumerate() {
            r[s + i] = r[s + i].sub(&lr.mul(bi));
        }
        r.pop();
        while r.last().map(|c| c.is_zero()).unwrap_or(false) {
            r.pop();
        }
    }
    r
}

fn univariate_gcd(a: &MultiPoly, b: &MultiPoly, v: VarId) -> MultiPoly {
    let mut x: Vec<Rational> = a.to_univariate(v).iter().map(|c| c.as_constant().unwrap()).collect();
    let mut y: Vec<Rational> = b.to_univariate(v).iter().map(|c| c.as_constant().unwrap()).collect();
    let trimr = |z: &mut Vec<Rational>| {
        while z.last().map(|c| c.is_zero()).unwrap_or(false) {
            z.pop();
        }
    };
    trimr(&mut x);
    trimr(&mut y);
    while !y.is_empty() {
        let lc = y.last().unwrap().recip();
        while x.len() >= y.len() && !x.is_empty() {
            let q = x.last().unwrap() * &lc;
            let s = x.len() - y.len();
            for (i, yi) in y.iter().enumerate() {
                x[s + i] = &x[s + i] - &q * yi;
            }
            x.pop();
            trimr(&mut x);
        }
        std::mem::swap(&mut x, &mut y);
    }
    let cs: Vec<MultiPoly> = x.into_iter().map(MultiPoly::constant).collect();
    normalize(MultiPoly::from_univariate(v, &cs))
}

/// Normalized gcd: primitive with integer coefficients and positive
/// leading coefficient. `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return normalize(b.clone());
    }
    if b.is_zero() {
        return normalize(a.clone());
    }
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    if a == b {
        return normalize(a.clone());
    }
    let (ma, mb) = (a.monomial_content(), b.monomial_content());
    let mg = ma.gcd(&mb);
    let a1 = a.div_monomial(&ma).unwrap();
    let b1 = b.div_monomial(&mb).unwrap();
    let g = gcd_nomono(&a1, &b1);
    normalize(g.mul_term(&mg, &Rational::one()))
}

fn gcd_nomono(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    let va = a.vars();
    let vb = b.vars();
    if let Some(&v) = va.iter().find(|v| !vb.contains(v)) {
        return gcd(&content_in(a, v), b);
    }
    if let Some(&v) = vb.iter().find(|v| !va.contains(v)) {
        return gcd(a, &content_in(b, v));
    }
    if va.len() == 1 {
        return univariate_gcd(a, b, *va.iter().next().unwrap());
    }
    if let Some(q) = a.exact_div(b) {
        let _ = q;
        return normalize(b.clone());
    }
    if let Some(q) = b.exact_div(a) {
        let _ = q;
        return normalize(a.clone());
    }
    for &v in va.iter() {
        if gcd_free_of(a, b, v, &va) {
            return gcd(&content_in(a, v), &content_in(b, v));
        }
    }
    let v = *va.iter().min_by_key(|&&v| a.degree(v).max(b.degree(v))).unwrap();
    let (ca, cb) = (content_in(a, v), content_in(b, v));
    let c = gcd(&ca, &cb);
    let pa = a.exact_div(&ca).unwrap();
    let pb = b.exact_div(&cb).unwrap();
    let (mut r0, mut r1) = (pa.to_univariate(v), pb.to_univariate(v));
    if r0.len() < r1.len() {
        std::mem::swap(&mut r0, &mut r1);
    }
    let g = loop {
        let r = prem(&r0, &r1);
        if r.is_empty() {
            break MultiPoly::from_univariate(v, &r1);
        }
        if r.len() == 1 {
            break MultiPoly::one();
        }
        let rp = MultiPoly::from_univariate(v, &r);
        let cr = content_in(&rp, v);
        let rp = rp.exact_div(&cr).unwrap().primitive();
        r0 = r1;
        r1 = rp.to_univariate(v);
    };
    let cg = content_in(&g, v);
    let g = g.exact_div(&cg).unwrap();
    normalize(g.mul(&c))
}

/// Monomial with exponents that divide every term of `a`.
pub fn monomial_gcd(a: &MultiPoly) -> Monomial {
    a.monomial_content()
}
