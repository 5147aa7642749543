//! Banded Lax matrices on a finite lattice window.

use crate::exact::{q, Family, MultiPoly, MultiRat, Rational, Ring, VarId};
use crate::series::LSeries;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LaxError {
    #[error("window too small for entry ({0}, {1})")]
    WindowTooSmall(i64, i64),
    #[error("mismatch: {0}")]
    MismatchReport(String),
}

/// Coefficient rings that can host a free symbol.
pub trait Coeff: Ring {
    fn from_var(v: VarId, like: &Self) -> Option<Self>;
    /// Embed a parameter value.
    fn from_rat(r: &MultiRat, like: &Self) -> Option<Self>;
}
impl Coeff for MultiPoly {
    fn from_var(v: VarId, _: &Self) -> Option<Self> {
        Some(MultiPoly::var(v))
    }
    fn from_rat(r: &MultiRat, _: &Self) -> Option<Self> {
        r.is_poly().then(|| r.num().clone())
    }
}
impl Coeff for MultiRat {
    fn from_var(v: VarId, _: &Self) -> Option<Self> {
        Some(MultiRat::var(v))
    }
    fn from_rat(r: &MultiRat, _: &Self) -> Option<Self> {
        Some(r.clone())
    }
}
impl Coeff for LSeries {
    fn from_var(v: VarId, like: &Self) -> Option<Self> {
        Some(LSeries::constant(like.var(), MultiRat::var(v)))
    }
    fn from_rat(r: &MultiRat, like: &Self) -> Option<Self> {
        Some(LSeries::constant(like.var(), r.clone()))
    }
}
impl Coeff for Rational {
    fn from_var(_: VarId, _: &Self) -> Option<Self> {
        None
    }
    fn from_rat(r: &MultiRat, _: &Self) -> Option<Self> {
        r.as_constant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// Fresh symbols `xo_k`, `yo_k` outside the window.
    Generic,
    Zero,
    /// `x_k = y_k = 0` for `k < 0` and `x_0 = y_0 = 1`.
    SemiInfinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    L1,
    L2,
}

/// Site values `x_k, y_k` for `k_min <= k <= k_max`.
#[derive(Clone, Debug)]
pub struct LatticeWindow<R> {
    pub k_min: i64,
    pub k_max: i64,
    pub xs: Vec<R>,
    pub ys: Vec<R>,
    pub self_dual: bool,
    pub boundary: Boundary,
    proto: R,
}

impl<R: Coeff> LatticeWindow<R> {
    pub fn new(k_min: i64, xs: Vec<R>, ys: Option<Vec<R>>, boundary: Boundary) -> LatticeWindow<R> {
        let proto = xs[0].one_like();
        let k_max = k_min + xs.len() as i64 - 1;
        let self_dual = ys.is_none();
        let ys = ys.unwrap_or_else(|| xs.clone());
        assert_eq!(xs.len(), ys.len());
        LatticeWindow { k_min, k_max, xs, ys, self_dual, boundary, proto }
    }
    pub fn contains(&self, k: i64) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }
    fn outside(&self, k: i64, fam: Family) -> R {
        match self.boundary {
            Boundary::Zero => self.proto.zero_like(),
            Boundary::SemiInfinite if k < 0 => self.proto.zero_like(),
            Boundary::SemiInfinite if k == 0 => self.proto.clone(),
            _ => {
                let fam = if self.self_dual { Family::XO } else { fam };
                R::from_var(VarId::new(fam, k), &self.proto).unwrap_or_else(|| self.proto.zero_like())
            }
        }
    }
    pub fn x(&self, k: i64) -> R {
        if self.boundary == Boundary::SemiInfinite && k <= 0 {
            return if k < 0 { self.proto.zero_like() } else { self.proto.clone() };
        }
        if self.contains(k) {
            self.xs[(k - self.k_min) as usize].clone()
        } else {
            self.outside(k, Family::XO)
        }
    }
    pub fn y(&self, k: i64) -> R {
        if self.self_dual {
            return self.x(k);
        }
        if self.boundary == Boundary::SemiInfinite && k <= 0 {
            return if k < 0 { self.proto.zero_like() } else { self.proto.clone() };
        }
        if self.contains(k) {
            self.ys[(k - self.k_min) as usize].clone()
        } else {
            self.outside(k, Family::YO)
        }
    }
    pub fn v(&self, k: i64) -> R {
        self.proto.sub(&self.x(k).mul(&self.y(k)))
    }
    pub fn one(&self) -> R {
        self.proto.clone()
    }
    /// `sigma`: swap the roles of `x` and `y` inside the window.
    pub fn sigma(&self) -> LatticeWindow<R> {
        LatticeWindow { xs: self.ys.clone(), ys: self.xs.clone(), ..self.clone() }
    }

    /// Entry of `L1` or `L2`.
    pub fn lax_entry(&self, which: Which, i: i64, j: i64) -> R {
        match which {
            Which::L1 if j - i <= 1 => {
                let e = self.x(i).mul(&self.y(j - 1)).neg();
                if i + 1 == j {
                    e.add(&self.proto)
                } else {
                    e
                }
            }
            Which::L2 if j - i >= -1 => {
                let e = self.y(j).mul(&self.x(i - 1)).neg();
                if j + 1 == i {
                    e.add(&self.proto)
                } else {
                    e
                }
            }
            _ => self.proto.zero_like(),
        }
    }
}

impl LatticeWindow<MultiPoly> {
    /// Window of free symbols `x_k`, `y_k`.
    pub fn symbolic(k_min: i64, k_max: i64, self_dual: bool) -> LatticeWindow<MultiPoly> {
        let xs = (k_min..=k_max).map(|k| MultiPoly::var(VarId::x(k))).collect();
        let ys = if self_dual { None } else { Some((k_min..=k_max).map(|k| MultiPoly::var(VarId::y(k))).collect()) };
        LatticeWindow::new(k_min, xs, ys, Boundary::Generic)
    }
}

/// Square matrix over a contiguous index range.
#[derive(Clone, Debug)]
pub struct BandedMatrix<R> {
    pub lo: i64,
    pub hi: i64,
    /// Entries are zero when `j - i > upper` or `i - j > lower`.
    pub lower: i64,
    pub upper: i64,
    pub rows: Vec<Vec<R>>,
}

impl<R: Ring> BandedMatrix<R> {
    pub fn get(&self, i: i64, j: i64) -> &R {
        &self.rows[(i - self.lo) as usize][(j - self.lo) as usize]
    }
    pub fn transpose(&self) -> BandedMatrix<R> {
        let n = self.rows.len();
        let rows = (0..n).map(|i| (0..n).map(|j| self.rows[j][i].clone()).collect()).collect();
        BandedMatrix { lo: self.lo, hi: self.hi, lower: self.upper, upper: self.lower, rows }
    }
}

/// `L1` or `L2` restricted to the window rows and columns.
pub fn build_lax<R: Coeff>(w: &LatticeWindow<R>, which: Which) -> BandedMatrix<R> {
    let rows = (w.k_min..=w.k_max)
        .map(|i| (w.k_min..=w.k_max).map(|j| w.lax_entry(which, i, j)).collect())
        .collect();
    let n = w.k_max - w.k_min;
    let (lower, upper) = match which {
        Which::L1 => (n, 1),
        Which::L2 => (1, n),
    };
    BandedMatrix { lo: w.k_min, hi: w.k_max, lower, upper, rows }
}

/// Memoized entries of `L1^s` and `L2^s` on the bi-infinite lattice.
pub struct LaxPowers<'a, R> {
    w: &'a LatticeWindow<R>,
    memo: RefCell<HashMap<(bool, u32, i64, i64), R>>,
}

impl<'a, R: Coeff> LaxPowers<'a, R> {
    pub fn new(w: &'a LatticeWindow<R>) -> Self {
        LaxPowers { w, memo: RefCell::new(HashMap::new()) }
    }
    pub fn window(&self) -> &LatticeWindow<R> {
        self.w
    }

    /// `(L^s)_{ij}` as a finite path sum.
    pub fn entry(&self, which: Which, s: u32, i: i64, j: i64) -> R {
        let key = (which == Which::L1, s, i, j);
        if let Some(r) = self.memo.borrow().get(&key) {
            return r.clone();
        }
        let r = if s == 0 {
            if i == j {
                self.w.one()
            } else {
                self.w.one().zero_like()
            }
        } else {
            let s1 = s as i64;
            let range = match which {
                Which::L1 => (j - s1 + 1)..=(i + 1),
                Which::L2 => (i - 1)..=(j + s1 - 1),
            };
            let mut acc = self.w.one().zero_like();
            for l in range {
                let a = self.w.lax_entry(which, i, l);
                if a.vanishes() {
                    continue;
                }
                let b = self.entry(which, s - 1, l, j);
                if !b.vanishes() {
                    acc = acc.add(&a.mul(&b));
                }
            }
            acc
        };
        self.memo.borrow_mut().insert(key, r.clone());
        r
    }

    /// Entry with the edge-freeness check.
    pub fn entry_checked(&self, which: Which, s: u32, i: i64, j: i64) -> Result<R, LaxError> {
        let s1 = s as i64;
        let lo = i.min(j) - s1;
        let hi = i.max(j) + s1;
        if self.w.boundary == Boundary::Generic && (lo < self.w.k_min || hi > self.w.k_max) {
            return Err(LaxError::WindowTooSmall(i, j));
        }
        Ok(self.entry(which, s, i, j))
    }
}

/// Entry of the `s`-th power of `L1` or `L2`.
pub fn matrix_power_entry<R: Coeff>(w: &LatticeWindow<R>, which: Which, s: u32, i: i64, j: i64) -> Result<R, LaxError> {
    LaxPowers::new(w).entry_checked(which, s, i, j)
}

/// `-(1/i) Σ_r (L_l^i)_{rr}` over the rows whose diagonal entry is edge-free.
pub fn hamiltonian<R: Coeff>(w: &LatticeWindow<R>, which: Which, i: u32) -> Result<R, LaxError> {
    let s = i as i64;
    let (lo, hi) = (w.k_min + s, w.k_max - s);
    if lo > hi {
        return Err(LaxError::WindowTooSmall(lo, hi));
    }
    let p = LaxPowers::new(w);
    let mut acc = w.one().zero_like();
    for r in lo..=hi {
        acc = acc.add(&p.entry(which, i, r, r));
    }
    Ok(acc.scale(&q(-1, s)))
}

/// One named check of a structural report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct StructureReport {
    pub checks: Vec<Check>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Whether the lattice variables of `p` lie in `x_a..=x_b` and `y_c..=y_d`
/// (couplings `u_i` are allowed).
pub fn support_within(p: &MultiPoly, xr: (i64, i64), yr: (i64, i64)) -> Result<(), String> {
    for v in p.vars() {
        let ok = match v.family() {
            Family::X => (xr.0..=xr.1).contains(&v.index()),
            Family::Y => (yr.0..=yr.1).contains(&v.index()),
            Family::U => true,
            _ => false,
        };
        if !ok {
            return Err(format!("unexpected variable {v}"));
        }
    }
    Ok(())
}

fn xv(k: i64) -> MultiPoly {
    MultiPoly::var(VarId::x(k))
}
fn yv(k: i64) -> MultiPoly {
    MultiPoly::var(VarId::y(k))
}
fn vv(k: i64) -> MultiPoly {
    MultiPoly::one().sub(&xv(k).mul(&yv(k)))
}
fn prod(ks: impl Iterator<Item = i64>) -> MultiPoly {
    ks.fold(MultiPoly::one(), |a, k| a.mul(&vv(k)))
}

/// Support statements and displayed terms for the diagonal and first
/// subdiagonal entries of `L1^s`.
pub fn verify_appendix_structure(s: u32) -> Result<StructureReport, LaxError> {
    let si = s as i64;
    let k = 0i64;
    let w = LatticeWindow::symbolic(k - 2 * si - 2, k + 2 * si + 2, false);
    let p = LaxPowers::new(&w);
    let mut rep = StructureReport::default();

    let d = p.entry_checked(Which::L1, s, k, k)?;
    let sup = support_within(&d, (k - si + 1, k + si - 1), (k - si, k + si - 2));
    rep.push(Check::new(format!("L1^{s} diagonal support"), sup.is_ok(), sup.err().unwrap_or_default()));

    // displayed terms of the diagonal entry
    let line1 = xv(k + si - 1).mul(&yv(k - 1)).mul(&prod((1..si).map(|i| k + i - 1))).neg();
    let mut shown = line1.clone();
    let trailing = xv(k).mul(&yv(k - si)).mul(&prod((1..si).map(|i| k - i))).neg();
    if s >= 3 {
        let p2 = prod((1..si - 1).map(|i| k + i - 1));
        let line2 = xv(k + si - 2).pow(2).mul(&yv(k + si - 3)).mul(&yv(k - 1)).mul(&p2);
        let sum: MultiPoly = (1..si - 1).fold(MultiPoly::zero(), |a, j| a.add(&xv(k + j - 1).mul(&yv(k + j - 2))));
        let inner = yv(k - 2).mul(&vv(k - 1)).sub(&yv(k - 1).mul(&sum).scale(&q(2, 1)));
        let line3 = xv(k + si - 2).mul(&inner).mul(&p2).neg();
        shown = shown.add(&line2).add(&line3).add(&trailing);
        let rem = d.sub(&shown);
        let sup = support_within(&rem, (k - si + 2, k + si - 3), (k - si + 1, k + si - 3));
        rep.push(Check::new(
            format!("L1^{s} diagonal remainder support"),
            sup.is_ok(),
            sup.err().unwrap_or_default(),
        ));
    } else {
        // s = 2: the third line coincides with the trailing term
        let line2 = xv(k).pow(2).mul(&yv(k - 1).pow(2));
        let rem = d.sub(&shown).sub(&line2).sub(&trailing);
        rep.push(Check::new(
            "L1^2 diagonal displayed terms",
            rem.is_zero(),
            if rem.is_zero() { String::new() } else { format!("remainder {rem}") },
        ));
    }

    let sd = p.entry_checked(Which::L1, s, k + 1, k)?;
    let t1 = xv(k + si).mul(&yv(k - 1)).mul(&prod((1..si).map(|i| k + i))).neg();
    let t2 = xv(k + 1).mul(&yv(k - si)).mul(&prod((1..si).map(|i| k - i))).neg();
    let rem = sd.sub(&t1).sub(&t2);
    let sup = support_within(&rem, (k - si + 2, k + si - 1), (k - si + 1, k + si - 2));
    rep.push(Check::new(format!("L1^{s} subdiagonal remainder support"), sup.is_ok(), sup.err().unwrap_or_default()));
    Ok(rep)
}

/// Variables of the `x`/`y` families appearing in `p`, as site indices.
pub fn site_support(p: &MultiPoly) -> (BTreeSet<i64>, BTreeSet<i64>) {
    let mut xs = BTreeSet::new();
    let mut ys = BTreeSet::new();
    for v in p.vars() {
        match v.family() {
            Family::X | Family::XO => {
                xs.insert(v.index());
            }
            Family::Y | Family::YO => {
                ys.insert(v.index());
            }
            _ => {}
        }
    }
    (xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_window_gives_shift() {
        let w = LatticeWindow::new(0, vec![MultiPoly::zero(); 5], Some(vec![MultiPoly::zero(); 5]), Boundary::Zero);
        let l = build_lax(&w, Which::L1);
        for i in 0..5 {
            for j in 0..5 {
                let want = if j == i + 1 { MultiPoly::one() } else { MultiPoly::zero() };
                assert_eq!(l.get(i, j), &want);
            }
        }
    }

    #[test]
    fn square_diagonal_matches_dense_product() {
        let w = LatticeWindow::symbolic(-6, 6, false);
        let l = build_lax(&w, Which::L1);
        let mut dense = MultiPoly::zero();
        for m in -6..=6 {
            dense = dense.add(&l.get(0, m).mul(l.get(m, 0)));
        }
        let e = matrix_power_entry(&w, Which::L1, 2, 0, 0).unwrap();
        assert_eq!(e, dense);
        let want = xv(1).mul(&yv(-1)).mul(&vv(0)).neg().sub(&xv(0).mul(&yv(-2)).mul(&vv(-1))).add(&xv(0).pow(2).mul(&yv(-1).pow(2)));
        assert_eq!(e, want);
    }

    #[test]
    fn sigma_transposes() {
        let w = LatticeWindow::symbolic(-3, 3, false);
        let sw = w.sigma();
        let a = build_lax(&sw, Which::L1);
        let b = build_lax(&w, Which::L2).transpose();
        for i in -2..=3 {
            for j in -2..=3 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn first_hamiltonians() {
        let w = LatticeWindow::symbolic(-4, 4, false);
        let h1 = hamiltonian(&w, Which::L1, 1).unwrap();
        let h2 = hamiltonian(&w, Which::L2, 1).unwrap();
        let want = (-3..=3).fold(MultiPoly::zero(), |a, i| a.add(&xv(i).mul(&yv(i - 1)).sub(&xv(i - 1).mul(&yv(i)))));
        assert_eq!(h1.sub(&h2), want);
    }

    #[test]
    fn window_too_small() {
        let w = LatticeWindow::symbolic(-2, 2, false);
        assert!(matrix_power_entry(&w, Which::L1, 3, 0, 0).is_err());
    }
}

#[cfg(test)]
mod appendix_tests {
    use super::*;

    #[test]
    fn appendix_structure_small_s() {
        for s in 2..=4 {
            let rep = verify_appendix_structure(s).unwrap();
            assert!(rep.passed(), "s={s}: {:?}", rep.first_failure());
        }
    }
}
