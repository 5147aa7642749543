//! Truncated Laurent series in one formal variable over [`MultiRat`].

use crate::exact::{ExactError, Field, MultiPoly, MultiRat, Rational, Ring, VarId};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

/// Truncation marker for series known exactly.
pub const EXACT: i64 = i64::MAX / 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("zero leading coefficient")]
    ZeroLeadingCoefficient,
    #[error("series is not reversible")]
    NotReversible,
    #[error("singular jacobian in implicit reparametrization")]
    SingularJacobian,
    #[error("series variables differ")]
    VariableMismatch,
    #[error("inverse of an exact non-monomial series needs a truncation order")]
    InfiniteExpansion,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SeriesVar {
    #[serde(rename = "t")]
    T,
    #[serde(rename = "lambda")]
    Lambda,
}

impl SeriesVar {
    pub fn symbol(self) -> VarId {
        match self {
            SeriesVar::T => VarId::t(),
            SeriesVar::Lambda => VarId::lambda(),
        }
    }
}

fn sat_add(a: i64, b: i64) -> i64 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        (a + b).min(EXACT)
    }
}

/// `Σ coeffs[i] var^(val+i) + O(var^trunc)`; absent trailing coefficients
/// below `trunc` are zero.
#[derive(Clone, PartialEq)]
pub struct LSeries {
    var: SeriesVar,
    val: i64,
    coeffs: Vec<MultiRat>,
    trunc: i64,
}

impl LSeries {
    /// Normalizing constructor: strips leading zeros and anything at or
    /// above `trunc`.
    pub fn new(var: SeriesVar, val: i64, coeffs: Vec<MultiRat>, trunc: i64) -> LSeries {
        let trunc = trunc.min(EXACT);
        let mut coeffs = coeffs;
        let keep = if trunc >= EXACT { coeffs.len() } else { (trunc - val).max(0) as usize };
        coeffs.truncate(keep);
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => LSeries { var, val: trunc, coeffs: Vec::new(), trunc },
            Some(i) => LSeries { var, val: val + i as i64, coeffs: coeffs.split_off(i), trunc },
        }
    }
    pub fn zero(var: SeriesVar, trunc: i64) -> LSeries {
        LSeries::new(var, trunc, Vec::new(), trunc)
    }
    pub fn constant(var: SeriesVar, c: MultiRat) -> LSeries {
        LSeries::new(var, 0, vec![c], EXACT)
    }
    pub fn monomial(var: SeriesVar, c: MultiRat, p: i64) -> LSeries {
        LSeries::new(var, p, vec![c], EXACT)
    }
    /// The series variable itself.
    pub fn gen(var: SeriesVar) -> LSeries {
        LSeries::monomial(var, MultiRat::one(), 1)
    }
    pub fn big_o(var: SeriesVar, p: i64) -> LSeries {
        LSeries::zero(var, p)
    }

    pub fn var(&self) -> SeriesVar {
        self.var
    }
    pub fn valuation(&self) -> i64 {
        self.val
    }
    pub fn trunc(&self) -> i64 {
        self.trunc
    }
    pub fn is_exact(&self) -> bool {
        self.trunc >= EXACT
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn coeffs(&self) -> &[MultiRat] {
        &self.coeffs
    }
    /// Last stored power + 1 (or `trunc` if smaller).
    fn end(&self) -> i64 {
        self.val + self.coeffs.len() as i64
    }
    /// Coefficient of `var^p`; `None` when `p >= trunc`.
    pub fn coeff(&self, p: i64) -> Option<MultiRat> {
        if p >= self.trunc {
            return None;
        }
        if p < self.val || p >= self.end() {
            return Some(MultiRat::zero());
        }
        Some(self.coeffs[(p - self.val) as usize].clone())
    }
    fn c(&self, p: i64) -> MultiRat {
        if p < self.val || p >= self.end() {
            MultiRat::zero()
        } else {
            self.coeffs[(p - self.val) as usize].clone()
        }
    }
    pub fn leading(&self) -> Option<&MultiRat> {
        self.coeffs.first()
    }
    /// Lower the truncation order.
    pub fn truncate(&self, t: i64) -> LSeries {
        LSeries::new(self.var, self.val, self.coeffs.clone(), self.trunc.min(t))
    }
    pub fn with_var(&self, var: SeriesVar) -> LSeries {
        LSeries { var, ..self.clone() }
    }
    pub fn map_coeffs(&self, f: impl Fn(&MultiRat) -> MultiRat) -> LSeries {
        LSeries::new(self.var, self.val, self.coeffs.iter().map(f).collect(), self.trunc)
    }
    pub fn try_map_coeffs(&self, f: impl Fn(&MultiRat) -> Result<MultiRat, ExactError>) -> Result<LSeries, ExactError> {
        let cs: Result<Vec<_>, _> = self.coeffs.iter().map(f).collect();
        Ok(LSeries::new(self.var, self.val, cs?, self.trunc))
    }

    pub fn add(&self, o: &LSeries) -> LSeries {
        debug_assert_eq!(self.var, o.var);
        let trunc = self.trunc.min(o.trunc);
        let ends = [self, o].into_iter().filter(|x| !x.is_zero());
        let lo = ends.clone().map(|x| x.val).min().unwrap_or(trunc).min(trunc);
        let hi = ends.map(|x| x.end()).max().unwrap_or(lo).min(trunc);
        let cs = (lo..hi).map(|p| self.c(p).add(&o.c(p))).collect();
        LSeries::new(self.var, lo, cs, trunc)
    }
    pub fn neg(&self) -> LSeries {
        LSeries { coeffs: self.coeffs.iter().map(|c| c.neg()).collect(), ..self.clone() }
    }
    pub fn sub(&self, o: &LSeries) -> LSeries {
        self.add(&o.neg())
    }
    pub fn scale_rat(&self, c: &MultiRat) -> LSeries {
        if c.is_zero() {
            return LSeries::zero(self.var, sat_add(self.trunc, 0));
        }
        self.map_coeffs(|a| a.mul(c))
    }
    pub fn mul(&self, o: &LSeries) -> LSeries {
        debug_assert_eq!(self.var, o.var);
        let trunc = sat_add(self.val, o.trunc).min(sat_add(o.val, self.trunc));
        if self.is_zero() || o.is_zero() {
            return LSeries::zero(self.var, trunc);
        }
        let val = self.val + o.val;
        let hi = (self.end() + o.end() - 1).min(trunc);
        let mut cs = Vec::with_capacity((hi - val).max(0) as usize);
        for p in val..hi {
            let mut acc = MultiRat::zero();
            for i in self.val..self.end() {
                let j = p - i;
                if j < o.val {
                    break;
                }
                if j >= o.end() {
                    continue;
                }
                let a = &self.coeffs[(i - self.val) as usize];
                let b = &o.coeffs[(j - o.val) as usize];
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            cs.push(acc);
        }
        LSeries::new(self.var, val, cs, trunc)
    }
    /// Multiply by `var^p`.
    pub fn shift(&self, p: i64) -> LSeries {
        LSeries::new(self.var, self.val + p, self.coeffs.clone(), sat_add(self.trunc, p))
    }

    /// Inverse to the honest truncation.
    pub fn invert(&self) -> Result<LSeries, SeriesError> {
        let lead = match self.coeffs.first() {
            Some(c) => c.clone(),
            None => return Err(SeriesError::ZeroLeadingCoefficient),
        };
        let li = lead.inv()?;
        if self.is_exact() {
            if self.coeffs.len() == 1 {
                return Ok(LSeries::monomial(self.var, li, -self.val));
            }
            return Err(SeriesError::InfiniteExpansion);
        }
        let rel = self.trunc - self.val;
        let mut g: Vec<MultiRat> = Vec::with_capacity(rel as usize);
        g.push(li.clone());
        for m in 1..rel {
            let mut acc = MultiRat::zero();
            for i in 1..=m.min(self.coeffs.len() as i64 - 1) {
                let a = &self.coeffs[i as usize];
                if !a.is_zero() {
                    acc = acc.add(&a.mul(&g[(m - i) as usize]));
                }
            }
            g.push(acc.mul(&li).neg());
        }
        Ok(LSeries::new(self.var, -self.val, g, -self.val + rel))
    }
    /// Inverse after truncating an exact series at relative order `rel`.
    pub fn invert_to(&self, rel: i64) -> Result<LSeries, SeriesError> {
        if self.is_exact() && self.coeffs.len() > 1 {
            return self.truncate(self.val + rel).invert();
        }
        self.invert()
    }
    pub fn div(&self, o: &LSeries) -> Result<LSeries, SeriesError> {
        Ok(self.mul(&o.invert()?))
    }
    pub fn pow(&self, e: i64) -> Result<LSeries, SeriesError> {
        let b = if e < 0 { self.invert()? } else { self.clone() };
        let mut r = LSeries::constant(self.var, MultiRat::one());
        for _ in 0..e.unsigned_abs() {
            r = r.mul(&b);
        }
        Ok(r)
    }

    pub fn differentiate(&self) -> LSeries {
        let cs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale(&Rational::from_integer((self.val + i as i64).into())))
            .collect();
        LSeries::new(self.var, self.val - 1, cs, sat_add(self.trunc, -1))
    }

    /// `f(s)` for `val s >= 1`; the result lives in `s`'s variable.
    pub fn compose(&self, s: &LSeries) -> Result<LSeries, SeriesError> {
        if s.is_zero() || s.val < 1 {
            return Err(SeriesError::ZeroLeadingCoefficient);
        }
        let var = s.var;
        if self.is_zero() {
            let t = if self.is_exact() { EXACT } else { self.trunc * s.val };
            return Ok(LSeries::zero(var, t));
        }
        // f = t^v * u(t), u a unit
        let v = self.val;
        let rel = self.trunc.saturating_sub(v);
        let mut acc = if self.is_exact() {
            LSeries::zero(var, EXACT)
        } else {
            LSeries::zero(var, 0)
        };
        let n = if self.is_exact() { self.coeffs.len() as i64 } else { rel };
        for i in (0..n).rev() {
            acc = acc.mul(s).add(&LSeries::constant(var, self.c(v + i)));
        }
        let sv = if v < 0 && s.is_exact() && s.coeffs.len() > 1 {
            if self.is_exact() {
                return Err(SeriesError::InfiniteExpansion);
            }
            s.truncate(s.val + rel * s.val).pow(v)?
        } else {
            s.pow(v)?
        };
        Ok(acc.mul(&sv))
    }

    /// Compositional inverse of `s = c1*t + ...`.
    pub fn reverse(&self) -> Result<LSeries, SeriesError> {
        if self.val != 1 || self.is_zero() {
            return Err(SeriesError::NotReversible);
        }
        let target = match self.var {
            SeriesVar::T => SeriesVar::Lambda,
            SeriesVar::Lambda => SeriesVar::T,
        };
        let c1 = self.coeffs[0].clone();
        let c1i = c1.inv().map_err(|_| SeriesError::NotReversible)?;
        let lam = LSeries::gen(target);
        let limit = if self.is_exact() { return Err(SeriesError::InfiniteExpansion) } else { self.trunc };
        let mut r = lam.scale_rat(&c1i).truncate(2);
        let higher = self.sub(&LSeries::monomial(self.var, c1.clone(), 1));
        for _ in 2..limit {
            let h = higher.compose(&r)?;
            let next = lam.sub(&h).scale_rat(&c1i);
            r = next.truncate(limit);
        }
        Ok(r.truncate(limit))
    }

    /// Expand a rational function of `var.symbol()` around 0 up to `trunc`.
    pub fn from_rat(var: SeriesVar, r: &MultiRat, trunc: i64) -> Result<LSeries, SeriesError> {
        let v = var.symbol();
        let to_series = |p: &MultiPoly| {
            let cs: Vec<MultiRat> = p.to_univariate(v).into_iter().map(MultiRat::from_poly).collect();
            LSeries::new(var, 0, cs, EXACT)
        };
        let n = to_series(r.num());
        let d = to_series(r.den());
        if d.is_exact() && d.coeffs.len() == 1 {
            return Ok(n.mul(&d.invert()?).truncate(trunc));
        }
        let dv = d.val;
        let rel = trunc - n.val + dv + 1;
        let di = d.truncate(dv + rel.max(1)).invert()?;
        Ok(n.mul(&di).truncate(trunc))
    }

    /// Substitute rational values / functions into the coefficients.
    pub fn substitute(&self, map: &HashMap<VarId, MultiRat>) -> Result<LSeries, ExactError> {
        self.try_map_coeffs(|c| c.substitute(map))
    }
    /// Evaluate coefficientwise at rational parameter values.
    pub fn evaluate_coeffs(&self, f: &dyn Fn(VarId) -> Option<Rational>) -> Result<Vec<Rational>, ExactError> {
        self.coeffs.iter().map(|c| c.evaluate(f)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variable": self.var,
            "valuation": self.val,
            "trunc": if self.is_exact() { serde_json::Value::Null } else { self.trunc.into() },
            "coeffs": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for LSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = match self.var {
            SeriesVar::T => "t",
            SeriesVar::Lambda => "lambda",
        };
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})*{sym}^{}", self.val + i as i64)?;
        }
        if !self.is_exact() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "O({sym}^{})", self.trunc)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
impl fmt::Debug for LSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Ring for LSeries {
    fn add(&self, o: &Self) -> Self {
        LSeries::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        LSeries::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        LSeries::mul(self, o)
    }
    fn neg(&self) -> Self {
        LSeries::neg(self)
    }
    fn scale(&self, c: &Rational) -> Self {
        self.scale_rat(&MultiRat::constant(c.clone()))
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        LSeries::zero(self.var, EXACT)
    }
    fn one_like(&self) -> Self {
        LSeries::constant(self.var, MultiRat::one())
    }
}

impl Field for LSeries {
    type Error = SeriesError;
    fn inv(&self) -> Result<Self, SeriesError> {
        self.invert()
    }
}

/// Solve the family `x_k(t; a) = alpha_k` for `a_k(t; alpha)`.
///
/// `targets[i] = (a_i, alpha_i)`: series `family[i]` has constant term
/// `a_i` up to a linear change of variables.
pub fn implicit_reparam(
    family: &[LSeries],
    targets: &[(VarId, VarId)],
) -> Result<HashMap<VarId, LSeries>, SeriesError> {
    let based: Vec<(VarId, MultiRat)> = targets.iter().map(|(a, al)| (*a, MultiRat::var(*al))).collect();
    implicit_reparam_at(family, &based)
}

/// Series `a(t) = base + O(t)` for each parameter such that every member of
/// `family` has constant value `family[i](0)` evaluated at the base point.
/// Jet parameters use base `0`.
pub fn implicit_reparam_at(
    family: &[LSeries],
    targets: &[(VarId, MultiRat)],
) -> Result<HashMap<VarId, LSeries>, SeriesError> {
    if family.is_empty() {
        return Ok(HashMap::new());
    }
    let var = family[0].var;
    let n = family.len();
    assert_eq!(n, targets.len());
    let trunc = family.iter().map(|f| f.trunc).min().unwrap();
    let rename: HashMap<VarId, MultiRat> = targets.iter().cloned().collect();
    // Jacobian of the constant-term map at the base point
    let mut jac = vec![vec![MultiRat::zero(); n]; n];
    for (i, f) in family.iter().enumerate() {
        let c0 = f.coeff(0).unwrap_or_else(MultiRat::zero);
        for (j, (a, _)) in targets.iter().enumerate() {
            jac[i][j] = c0.partial_derivative(*a).substitute(&rename)?;
        }
    }
    let identity = (0..n).all(|i| (0..n).all(|j| jac[i][j] == if i == j { MultiRat::one() } else { MultiRat::zero() }));
    let mut sol: HashMap<VarId, LSeries> =
        targets.iter().map(|(a, b)| (*a, LSeries::constant(var, b.clone()))).collect();
    for order in 1..trunc {
        let mut resid = Vec::with_capacity(n);
        for f in family.iter() {
            let sub = substitute_series(f, &sol, order + 1)?;
            let r = sub.coeff(order).ok_or(SeriesError::SingularJacobian)?;
            resid.push(r);
        }
        let neg: Vec<MultiRat> = resid.iter().map(|r| r.neg()).collect();
        let corr = if identity { neg } else { crate::exact::linalg::solve(&jac, &neg).ok_or(SeriesError::SingularJacobian)? };
        for (j, (a, _)) in targets.iter().enumerate() {
            let s = sol.get(a).unwrap();
            let upd = s.add(&LSeries::monomial(var, corr[j].clone(), order));
            sol.insert(*a, upd);
        }
    }
    Ok(sol.into_iter().map(|(k, v)| (k, v.truncate(trunc))).collect())
}

/// Substitute parameter series into the coefficients of `f` (both in the
/// same variable) and truncate at `trunc`.
pub fn substitute_series(f: &LSeries, map: &HashMap<VarId, LSeries>, trunc: i64) -> Result<LSeries, SeriesError> {
    let var = f.var;
    let mut acc = LSeries::zero(var, f.trunc.min(trunc));
    let one = LSeries::constant(var, MultiRat::one());
    let taylor = if map.is_empty() { None } else { TaylorPowers::new(map, var, trunc - f.val) };
    for (i, c) in f.coeffs.iter().enumerate() {
        let p = f.val + i as i64;
        if p >= trunc {
            break;
        }
        if c.is_zero() {
            continue;
        }
        let rel = trunc - p;
        let cs = if let Some(t) = taylor.as_ref().and_then(|tp| tp.apply(c, rel, var)) {
            t
        } else if c.vars().iter().any(|v| map.contains_key(v)) {
            c.eval_in(&one, &mut |v| match map.get(&v) {
                Some(s) => s.truncate(rel.max(1)),
                None => LSeries::constant(var, MultiRat::var(v)),
            })?
        } else {
            LSeries::constant(var, c.clone())
        };
        acc = acc.add(&cs.shift(p));
    }
    Ok(acc.truncate(trunc))
}

/// Powers `h^α/α!` for a substitution `v ↦ v + h_v`, `h_v = O(t)`.
struct TaylorPowers {
    vars: Vec<VarId>,
    /// Multi-index, its total degree and `h^α/α!`.
    powers: Vec<(Vec<u32>, u32, LSeries)>,
}

impl TaylorPowers {
    fn new(map: &HashMap<VarId, LSeries>, var: SeriesVar, max_deg: i64) -> Option<TaylorPowers> {
        let mut vars: Vec<VarId> = map.keys().copied().collect();
        vars.sort();
        let mut hs = Vec::with_capacity(vars.len());
        for v in &vars {
            let s = &map[v];
            if s.val < 0 || s.coeff(0) != Some(MultiRat::var(*v)) {
                return None;
            }
            hs.push(s.sub(&LSeries::constant(var, MultiRat::var(*v))).truncate(max_deg.max(1)));
        }
        let mut powers = vec![(vec![0u32; vars.len()], 0u32, LSeries::constant(var, MultiRat::one()))];
        // extend each multi-index by raising its last nonzero slot or a later one
        let mut i = 0;
        while i < powers.len() {
            let (alpha, deg, h) = powers[i].clone();
            if (deg as i64) + 1 < max_deg {
                let start = alpha.iter().rposition(|&e| e > 0).unwrap_or(0);
                for j in start..vars.len() {
                    let mut b = alpha.clone();
                    b[j] += 1;
                    let c = Rational::new(1.into(), (b[j] as i64).into());
                    let next = h.mul(&hs[j]).scale_rat(&MultiRat::constant(c)).truncate(max_deg);
                    powers.push((b, deg + 1, next));
                }
            }
            i += 1;
        }
        Some(TaylorPowers { vars, powers })
    }

    /// `c(v + h)` truncated at relative order `rel`.
    fn apply(&self, c: &MultiRat, rel: i64, var: SeriesVar) -> Option<LSeries> {
        if self.vars.iter().any(|v| c.den().contains_var(*v)) {
            return None;
        }
        let mut derivs: Vec<MultiPoly> = Vec::with_capacity(self.powers.len());
        let mut acc = LSeries::zero(var, rel);
        for (alpha, deg, h) in &self.powers {
            let d = if *deg == 0 {
                c.num().clone()
            } else {
                // parent: lower the last nonzero slot
                let j = alpha.iter().rposition(|&e| e > 0).unwrap();
                let mut parent = alpha.clone();
                parent[j] -= 1;
                let pi = self.powers.iter().position(|(a, _, _)| *a == parent).unwrap();
                derivs[pi].partial_derivative(self.vars[j])
            };
            if (*deg as i64) < rel && !d.is_zero() {
                acc = acc.add(&h.truncate(rel).scale_rat(&MultiRat::from_poly(d.clone())));
            }
            derivs.push(d);
        }
        let den = MultiRat::from_poly(c.den().clone()).inv().ok()?;
        Some(acc.scale_rat(&den).truncate(rel))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn c(n: i64, d: i64) -> MultiRat {
        MultiRat::constant(q(n, d))
    }
    fn ser(val: i64, cs: &[(i64, i64)], trunc: i64) -> LSeries {
        LSeries::new(SeriesVar::T, val, cs.iter().map(|&(n, d)| c(n, d)).collect(), trunc)
    }

    #[test]
    fn product_truncation() {
        let a = ser(1, &[(1, 1)], 3);
        let b = ser(-1, &[(1, 1)], 2);
        let p = a.mul(&b);
        assert_eq!(p.trunc(), 2);
        assert_eq!(p.coeff(0), Some(MultiRat::one()));
        assert_eq!(p.coeff(1), Some(MultiRat::zero()));
        assert_eq!(p.coeff(2), None);
    }

    #[test]
    fn geometric_inverse() {
        let f = ser(0, &[(1, 1), (1, 1)], 5);
        let g = f.invert().unwrap();
        for p in 0..5 {
            assert_eq!(g.coeff(p).unwrap(), c(if p % 2 == 0 { 1 } else { -1 }, 1));
        }
        let h = LSeries::monomial(SeriesVar::T, c(2, 1), 1).invert().unwrap();
        assert_eq!(h.valuation(), -1);
        assert_eq!(h.leading().unwrap(), &c(1, 2));
    }

    #[test]
    fn derivative_of_pole() {
        let f = LSeries::monomial(SeriesVar::T, MultiRat::one(), -1);
        let d = f.differentiate();
        assert_eq!(d.valuation(), -2);
        assert_eq!(d.leading().unwrap(), &c(-1, 1));
    }

    #[test]
    fn composition_examples() {
        let f = LSeries::monomial(SeriesVar::T, MultiRat::one(), 2);
        let s = LSeries::new(SeriesVar::Lambda, 1, vec![c(1, 1), c(1, 1)], 4);
        let r = f.compose(&s).unwrap();
        assert_eq!(r.coeff(2).unwrap(), c(1, 1));
        assert_eq!(r.coeff(3).unwrap(), c(2, 1));
        assert_eq!(r.trunc(), 5);
        let g = LSeries::monomial(SeriesVar::T, MultiRat::one(), -1);
        let s2 = LSeries::monomial(SeriesVar::Lambda, c(2, 1), 1);
        let r2 = g.compose(&s2).unwrap();
        assert_eq!(r2.valuation(), -1);
        assert_eq!(r2.leading().unwrap(), &c(1, 2));
    }

    #[test]
    fn reversion_example() {
        let s = ser(1, &[(2, 1), (1, 1)], 3);
        let r = s.reverse().unwrap();
        assert_eq!(r.coeff(1).unwrap(), c(1, 2));
        assert_eq!(r.coeff(2).unwrap(), c(-1, 8));
        let back = s.compose(&r).unwrap();
        assert_eq!(back.coeff(1).unwrap(), MultiRat::one());
        assert_eq!(back.coeff(2).unwrap(), MultiRat::zero());
    }
}
