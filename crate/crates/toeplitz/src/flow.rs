//! The first Toeplitz flow, its principal-balance Laurent solutions and the
//! automorphism `σ`.

use crate::exact::{linalg, ExactError, Family, MultiRat, VarId};
use crate::gamma::{gamma_on_series, RecursionSpec};
use crate::lax::{Boundary, Check, Coeff, LatticeWindow, StructureReport};
use crate::series::{LSeries, SeriesError, SeriesVar};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("inconsistent balance equations at order {order}, site {site}: {detail}")]
    Inconsistent { order: i64, site: i64, detail: String },
    #[error("nonzero residual at site {site}, power {power}: {value}")]
    NonzeroResidual { site: i64, power: i64, value: String },
    #[error("dependence table mismatch: {0}")]
    MismatchReport(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    SelfDual,
    General,
}

impl Mode {
    pub fn self_dual(self) -> bool {
        self == Mode::SelfDual
    }
}

/// `(v_k(x_{k+1}-x_{k-1}), v_k(y_{k+1}-y_{k-1}))`.
pub fn flow_rhs<R: Coeff>(w: &LatticeWindow<R>, k: i64) -> (R, R) {
    let v = w.v(k);
    let fx = v.mul(&w.x(k + 1).sub(&w.x(k - 1)));
    let fy = if w.self_dual { fx.clone() } else { v.mul(&w.y(k + 1).sub(&w.y(k - 1))) };
    (fx, fy)
}

/// Values assigned to balance parameters; unassigned parameters stay free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub values: HashMap<VarId, MultiRat>,
}

impl Params {
    pub fn new() -> Params {
        Params::default()
    }
    pub fn get(&self, v: VarId) -> MultiRat {
        self.values.get(&v).cloned().unwrap_or_else(|| MultiRat::var(v))
    }
    pub fn set(&mut self, v: VarId, r: MultiRat) {
        self.values.insert(v, r);
    }
    pub fn with(mut self, v: VarId, r: MultiRat) -> Params {
        self.set(v, r);
        self
    }
}

/// True for the symbols used as balance parameters.
pub fn is_parameter(v: VarId) -> bool {
    matches!(
        v.family(),
        Family::A | Family::B | Family::APlus | Family::AMinus | Family::ANear | Family::Eps | Family::DA | Family::DB
    )
}

/// Coefficient matrix of one near-pole block at one order.
#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub order: i64,
    pub site: i64,
    #[serde(serialize_with = "ser_matrix")]
    pub matrix: Vec<Vec<MultiRat>>,
}

fn ser_matrix<S: serde::Serializer>(m: &[Vec<MultiRat>], s: S) -> Result<S::Ok, S::Error> {
    let t: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
    serde::Serialize::serialize(&t, s)
}

/// Laurent solution in `t` on the window `[n-H, n+H]`.
#[derive(Debug, Clone)]
pub struct BalanceSolution {
    pub n: i64,
    pub mode: Mode,
    pub k_min: i64,
    pub k_max: i64,
    /// Requested number of coefficients per site.
    pub order: i64,
    pub xs: Vec<LSeries>,
    pub ys: Option<Vec<LSeries>>,
    pub params: Params,
    pub constraints: Vec<(String, MultiRat)>,
    pub blocks: Vec<BlockRecord>,
}

impl BalanceSolution {
    pub fn x(&self, k: i64) -> LSeries {
        self.xs[(k - self.k_min) as usize].clone()
    }
    pub fn y(&self, k: i64) -> LSeries {
        match &self.ys {
            Some(ys) => ys[(k - self.k_min) as usize].clone(),
            None => self.x(k),
        }
    }
    /// Window padded by `pad` undetermined sites on each side.
    pub fn window(&self, pad: i64) -> LatticeWindow<LSeries> {
        let o = LSeries::big_o(SeriesVar::T, 0);
        let padv = |v: &Vec<LSeries>| {
            let mut out = vec![o.clone(); pad as usize];
            out.extend(v.iter().cloned());
            out.extend(std::iter::repeat(o.clone()).take(pad as usize));
            out
        };
        LatticeWindow::new(self.k_min - pad, padv(&self.xs), self.ys.as_ref().map(padv), Boundary::Zero)
    }
    /// Parameter symbols occurring in the solution.
    pub fn free_parameters(&self) -> BTreeSet<VarId> {
        let mut s = BTreeSet::new();
        for f in self.xs.iter().chain(self.ys.iter().flatten()) {
            for c in f.coeffs() {
                s.extend(c.vars().into_iter().filter(|v| is_parameter(*v)));
            }
        }
        s
    }
    /// Sites whose first `order` coefficients are all determined.
    pub fn edge_free(&self) -> Vec<i64> {
        (self.k_min..=self.k_max)
            .filter(|&k| {
                let need = if k == self.n { self.order - 1 } else { self.order };
                self.x(k).trunc() >= need && self.y(k).trunc() >= need
            })
            .collect()
    }
    pub fn substitute(&self, map: &HashMap<VarId, MultiRat>) -> Result<BalanceSolution, FlowError> {
        let sub = |v: &Vec<LSeries>| -> Result<Vec<LSeries>, ExactError> { v.iter().map(|s| s.substitute(map)).collect() };
        let mut out = self.clone();
        out.xs = sub(&self.xs)?;
        out.ys = match &self.ys {
            Some(ys) => Some(sub(ys)?),
            None => None,
        };
        for (_, c) in out.constraints.iter_mut() {
            *c = c.substitute(map)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sites: Vec<serde_json::Value> = (self.k_min..=self.k_max)
            .map(|k| {
                let mut e = serde_json::json!({ "k": k, "x": self.x(k).to_json() });
                if self.ys.is_some() {
                    e["y"] = self.y(k).to_json();
                }
                e
            })
            .collect();
        let params: BTreeMap<String, String> =
            self.params.values.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        serde_json::json!({
            "pole_site": self.n,
            "mode": self.mode,
            "order": self.order,
            "sites": sites,
            "free_parameters": self.free_parameters().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "assigned": params,
            "constraints": self.constraints.iter().map(|(d, c)| serde_json::json!({"nonzero": d, "value": c.to_string()})).collect::<Vec<_>>(),
            "blocks": self.blocks,
        })
    }
}

fn ser(val: i64, cs: &[MultiRat]) -> LSeries {
    LSeries::new(SeriesVar::T, val, cs.to_vec(), val + cs.len() as i64)
}

/// Split an expression affine in `unk` into its constant and coefficients.
fn affine_parts(e: &MultiRat, unk: &[VarId]) -> Option<(MultiRat, Vec<MultiRat>)> {
    let zero: HashMap<VarId, MultiRat> = unk.iter().map(|u| (*u, MultiRat::zero())).collect();
    let c0 = e.substitute(&zero).ok()?;
    let mut cs = Vec::with_capacity(unk.len());
    for u in unk {
        let d = e.partial_derivative(*u);
        if unk.iter().any(|w| d.contains_var(*w)) {
            return None;
        }
        cs.push(d);
    }
    Some((c0, cs))
}

struct State {
    n: i64,
    lo: i64,
    sd: bool,
    cx: Vec<Vec<MultiRat>>,
    cy: Vec<Vec<MultiRat>>,
}

impl State {
    fn val(&self, k: i64) -> i64 {
        if k == self.n {
            -1
        } else {
            0
        }
    }
    fn idx(&self, k: i64) -> usize {
        (k - self.lo) as usize
    }
    fn window(&self, extra: &HashMap<i64, (MultiRat, MultiRat)>) -> LatticeWindow<LSeries> {
        let o = LSeries::big_o(SeriesVar::T, 0);
        let mk = |cs: &Vec<Vec<MultiRat>>, y: bool| -> Vec<LSeries> {
            let mut out = vec![o.clone()];
            for (i, c) in cs.iter().enumerate() {
                let k = self.lo + i as i64;
                let mut c = c.clone();
                if let Some((ex, ey)) = extra.get(&k) {
                    c.push(if y { ey.clone() } else { ex.clone() });
                }
                out.push(ser(self.val(k), &c));
            }
            out.push(o.clone());
            out
        };
        let xs = mk(&self.cx, false);
        let ys = if self.sd { None } else { Some(mk(&self.cy, true)) };
        LatticeWindow::new(self.lo - 1, xs, ys, Boundary::Zero)
    }
    /// `ż_k - rhs_k` on a window.
    fn residual(&self, w: &LatticeWindow<LSeries>, k: i64) -> (LSeries, LSeries) {
        let (fx, fy) = flow_rhs(w, k);
        (w.x(k).differentiate().sub(&fx), w.y(k).differentiate().sub(&fy))
    }
}

/// Principal balance around the pole site `n` on `[n-hw, n+hw]`, with
/// `order` coefficients per site.
pub fn solve_balance(mode: Mode, n: i64, hw: i64, order: i64, params: &Params) -> Result<BalanceSolution, FlowError> {
    assert!(hw >= 2 && order >= 1);
    let sd = mode.self_dual();
    let p = |v: VarId| params.get(v);
    let lo = n - hw;
    let hi = n + hw;
    let size = (hi - lo + 1) as usize;
    let mut st = State { n, lo, sd, cx: vec![Vec::new(); size], cy: vec![Vec::new(); size] };
    let mut constraints = Vec::new();
    let (am, ap) = (p(VarId::a(n - 1)), p(VarId::a(n + 1)));
    let eps = p(VarId::eps());
    if sd {
        for k in lo..=hi {
            let c = match k - n {
                0 => eps.scale(&crate::exact::q(-1, 2)),
                1 => eps.neg(),
                -1 => eps.clone(),
                _ => eps.mul(&p(VarId::a(k))),
            };
            let i = st.idx(k);
            st.cx[i].push(c);
        }
    } else {
        let d = am.sub(&ap);
        let g = ap.mul(&am).mul(&d);
        constraints.push(("a_{n+1} a_{n-1} (a_{n+1} - a_{n-1})".to_string(), g.clone()));
        if g.is_zero() {
            return Err(FlowError::DegenerateParameters("a_{n+1} a_{n-1} (a_{n+1} - a_{n-1}) vanishes".into()));
        }
        for k in lo..=hi {
            let (x, y) = match k - n {
                0 => (am.mul(&ap).div(&d)?, MultiRat::one().neg().div(&d)?),
                1 => (ap.clone(), ap.inv()?),
                -1 => (am.clone(), am.inv()?),
                _ => (p(VarId::a(k)), p(VarId::b(k))),
            };
            let i = st.idx(k);
            st.cx[i].push(x);
            st.cy[i].push(y);
        }
    }
    let mut blocks = Vec::new();
    let mut near_alive = true;
    let empty = HashMap::new();
    for r in 0..order - 1 {
        let w = st.window(&empty);
        let mut updates: Vec<(usize, MultiRat, MultiRat)> = Vec::new();
        for k in lo..=hi {
            if (k - n).abs() <= 1 {
                continue;
            }
            let i = st.idx(k);
            if st.cx[i].len() as i64 != r + 1 {
                continue;
            }
            let (fx, fy) = flow_rhs(&w, k);
            let (Some(cx), Some(cy)) = (fx.coeff(r), fy.coeff(r)) else { continue };
            let div = crate::exact::q(1, r + 1);
            updates.push((i, cx.scale(&div), cy.scale(&div)));
        }
        if near_alive {
            near_alive = solve_near(&mut st, r, params, &mut blocks)?;
        }
        for (i, x, y) in updates {
            st.cx[i].push(x);
            if !sd {
                st.cy[i].push(y);
            }
        }
    }
    let mk = |cs: &Vec<Vec<MultiRat>>| -> Vec<LSeries> {
        cs.iter().enumerate().map(|(i, c)| ser(st.val(lo + i as i64), c)).collect()
    };
    Ok(BalanceSolution {
        n,
        mode,
        k_min: lo,
        k_max: hi,
        order,
        xs: mk(&st.cx),
        ys: if sd { None } else { Some(mk(&st.cy)) },
        params: params.clone(),
        constraints,
        blocks,
    })
}

/// Solve the near-pole block for coefficient index `r + 1`. Returns false
/// when the block can no longer be determined inside the window.
fn solve_near(st: &mut State, r: i64, params: &Params, blocks: &mut Vec<BlockRecord>) -> Result<bool, FlowError> {
    let n = st.n;
    let sd = st.sd;
    if (n - 1..=n + 1).any(|k| st.cx[st.idx(k)].len() as i64 != r + 1) {
        return Ok(false);
    }
    let ux = |k: i64| VarId::unknown(k - n + 1);
    let uy = |k: i64| VarId::unknown(k - n + 4);
    let mut extra = HashMap::new();
    for k in n - 1..=n + 1 {
        let x = MultiRat::var(ux(k));
        let y = if sd { x.clone() } else { MultiRat::var(uy(k)) };
        extra.insert(k, (x, y));
    }
    let w = st.window(&extra);
    let mut eqs: HashMap<i64, Vec<MultiRat>> = HashMap::new();
    for k in n - 1..=n + 1 {
        let (rx, ry) = st.residual(&w, k);
        let pw = st.val(k) + r;
        let (Some(ex), Some(ey)) = (rx.coeff(pw), ry.coeff(pw)) else { return Ok(false) };
        eqs.insert(k, if sd { vec![ex] } else { vec![ex, ey] });
    }
    let own = |k: i64| if sd { vec![ux(k)] } else { vec![ux(k), uy(k)] };
    let p = |v: VarId| params.get(v);
    let eps = p(VarId::eps());
    let bad = |k: i64, d: &str| FlowError::Inconsistent { order: r, site: k, detail: d.to_string() };
    let mut solved: HashMap<VarId, MultiRat> = HashMap::new();
    for k in [n - 1, n + 1, n] {
        let unk = own(k);
        let mut sys = Vec::new();
        for e in &eqs[&k] {
            let e = e.substitute(&solved)?;
            let all: Vec<VarId> = (0..6).map(VarId::unknown).collect();
            let (c0, cs) = affine_parts(&e, &all).ok_or_else(|| bad(k, "equation not affine in the unknowns"))?;
            for (j, u) in all.iter().enumerate() {
                if !unk.contains(u) && !cs[j].is_zero() {
                    return Err(bad(k, "equation couples to another site"));
                }
            }
            let cs: Vec<MultiRat> = unk.iter().map(|u| cs[all.iter().position(|w| w == u).unwrap()].clone()).collect();
            sys.push((c0, cs));
        }
        let mat: Vec<Vec<MultiRat>> = sys.iter().map(|(_, c)| c.clone()).collect();
        let rhs: Vec<MultiRat> = sys.iter().map(|(c, _)| c.neg()).collect();
        blocks.push(BlockRecord { order: r, site: k, matrix: mat.clone() });
        let det = linalg::det(&mat);
        let vals: Vec<MultiRat> = if !det.is_zero() {
            linalg::solve(&mat, &rhs).ok_or_else(|| bad(k, "singular block"))?
        } else if r == 0 {
            rank_drop(st, k, &mat, &rhs, &eps, params).map_err(|d| bad(k, &d))?
        } else {
            return Err(bad(k, "block singular beyond order 0"));
        };
        for (u, v) in unk.iter().zip(vals) {
            solved.insert(*u, v);
        }
    }
    for k in n - 1..=n + 1 {
        let i = st.idx(k);
        st.cx[i].push(solved[&ux(k)].clone());
        if !sd {
            st.cy[i].push(solved[&uy(k)].clone());
        }
    }
    Ok(true)
}

/// Insert the free parameter where the order-zero block is singular and
/// check the remaining equations.
fn rank_drop(
    st: &State,
    k: i64,
    mat: &[Vec<MultiRat>],
    rhs: &[MultiRat],
    eps: &MultiRat,
    params: &Params,
) -> Result<Vec<MultiRat>, String> {
    let n = st.n;
    let p = |v: VarId| params.get(v);
    let apm = |s: i64| if s > 0 { p(VarId::a_plus()) } else { p(VarId::a_minus()) };
    let residual_ok = |vals: &[MultiRat]| {
        mat.iter().zip(rhs).all(|(row, b)| {
            let lhs = row.iter().zip(vals).fold(MultiRat::zero(), |a, (c, v)| a.add(&c.mul(v)));
            lhs.sub(b).is_zero()
        })
    };
    let s = k - n;
    let vals = if st.sd {
        if s == 0 {
            return Err("self-dual pole block singular".into());
        }
        vec![eps.mul(&apm(s)).scale(&crate::exact::q(4, 1))]
    } else {
        if linalg::rank(mat) != 1 {
            return Err("order-zero block does not have rank one".into());
        }
        let am = p(VarId::a(n - 1));
        let ap = p(VarId::a(n + 1));
        if s != 0 {
            let (near, far) = if s > 0 { (ap, am) } else { (am, ap) };
            let a = apm(s);
            vec![near.mul(&a), a.neg().div(&far).map_err(|e| e.to_string())?]
        } else {
            let x = am.mul(&ap).mul(&p(VarId::a_near())).div(&am.sub(&ap)).map_err(|e| e.to_string())?;
            let row = mat.iter().zip(rhs).find(|(row, _)| !row[1].is_zero()).ok_or("no equation for y_n")?;
            let y = row.1.sub(&row.0[0].mul(&x)).div(&row.0[1]).map_err(|e| e.to_string())?;
            vec![x, y]
        }
    };
    if !residual_ok(&vals) {
        return Err("order-zero equations are not proportional".into());
    }
    Ok(vals)
}

/// Per-site residual of the flow on `b`: the number of determined
/// coefficients of `ż_k - rhs_k`, failing on the first nonzero one.
pub fn balance_residual(b: &BalanceSolution) -> Result<Vec<(i64, i64)>, FlowError> {
    let w = b.window(1);
    let mut out = Vec::new();
    for k in b.k_min..=b.k_max {
        let (fx, fy) = flow_rhs(&w, k);
        let rx = w.x(k).differentiate().sub(&fx);
        let ry = w.y(k).differentiate().sub(&fy);
        for r in [&rx, &ry] {
            if let Some(c) = r.coeffs().iter().position(|c| !c.is_zero()) {
                return Err(FlowError::NonzeroResidual {
                    site: k,
                    power: r.valuation() + c as i64,
                    value: r.coeffs()[c].to_string(),
                });
            }
        }
        out.push((k, rx.trunc().min(ry.trunc())));
    }
    Ok(out)
}

/// Parameter symbols of the general balance as listed in the dependence
/// table: `a_k`, `b_k`, `a_±`, `a`; `b_{n±1}` stands for `a_{n±1}`.
fn table_sym(n: i64, name: &str, k: i64) -> VarId {
    match name {
        "a" => VarId::a(k),
        "b" if (k - n).abs() == 1 => VarId::a(k),
        "b" => VarId::b(k),
        "ap" => VarId::a_plus(),
        "am" => VarId::a_minus(),
        "a0" => VarId::a_near(),
        _ => unreachable!(),
    }
}

fn param_support(c: &MultiRat) -> BTreeSet<VarId> {
    c.vars().into_iter().filter(|v| is_parameter(*v)).collect()
}

/// Check the general balance's coefficients against the dependence table.
pub fn check_dependence_table(b: &BalanceSolution) -> Result<StructureReport, FlowError> {
    if b.mode != Mode::General || b.order < 3 {
        return Err(FlowError::MismatchReport("needs a general balance with at least three orders".into()));
    }
    let n = b.n;
    type Cell = Vec<(&'static str, i64)>;
    // (label, site, is_y, columns); offsets relative to the row site, except
    // "ap"/"am"/"a0" which ignore the offset. `sg` flips the sign for n±1 rows.
    let mut rows: Vec<(String, i64, bool, [Cell; 3])> = vec![
        ("x_n".into(), n, false, [vec![("a", 1), ("a", -1)], vec![("a0", 0)], vec![("am", 0), ("ap", 0), ("a", 2), ("b", 2), ("a", -2), ("b", -2)]]),
        ("y_n".into(), n, true, [vec![("a", 1), ("a", -1)], vec![("a0", 0), ("ap", 0), ("am", 0)], vec![("a", 2), ("b", 2), ("a", -2), ("b", -2)]]),
    ];
    for s in [1i64, -1] {
        let (pm, mp) = if s > 0 { ("ap", "am") } else { ("am", "ap") };
        let k = n + s;
        rows.push((format!("x_{{n{}1}}", if s > 0 { "+" } else { "-" }), k, false, [
            vec![("a", 0)],
            vec![(pm, 0)],
            vec![("a", s), ("b", s), (mp, 0), ("a0", 0), ("a", -2 * s)],
        ]));
        rows.push((format!("y_{{n{}1}}", if s > 0 { "+" } else { "-" }), k, true, [
            vec![("a", 0)],
            vec![("a", -2 * s), (pm, 0)],
            vec![("a", s), ("b", s), (mp, 0), ("a0", 0)],
        ]));
        let k = n + 2 * s;
        rows.push((format!("x_{{n{}2}}", if s > 0 { "+" } else { "-" }), k, false, [
            vec![("a", 0)],
            vec![("a", s), ("a", -s), ("b", 0)],
            vec![("a", 2 * s), ("b", s), (pm, 0)],
        ]));
        rows.push((format!("y_{{n{}2}}", if s > 0 { "+" } else { "-" }), k, true, [
            vec![("b", 0)],
            vec![("b", s), ("b", -s), ("a", 0)],
            vec![("b", 2 * s), ("a", s), (pm, 0), ("a", -3 * s)],
        ]));
    }
    for k in b.k_min..=b.k_max {
        if (k - n).abs() <= 2 {
            continue;
        }
        rows.push((format!("x_{k}"), k, false, [
            vec![("a", 0)],
            vec![("a", 1), ("a", -1), ("b", 0)],
            vec![("a", 2), ("b", 1), ("a", -2), ("b", -1)],
        ]));
        rows.push((format!("y_{k}"), k, true, [
            vec![("b", 0)],
            vec![("b", 1), ("b", -1), ("a", 0)],
            vec![("b", 2), ("a", 1), ("b", -2), ("a", -1)],
        ]));
    }
    let mut rep = StructureReport::default();
    let mut mismatch = None;
    for (label, k, is_y, cols) in rows {
        let s = if is_y { b.y(k) } else { b.x(k) };
        let base = if k == n { -1 } else { 0 };
        let mut listed = BTreeSet::new();
        for (j, col) in cols.iter().enumerate() {
            let Some(c) = s.coeff(base + j as i64) else { continue };
            for (name, off) in col {
                let site = k + off;
                if (site < b.k_min || site > b.k_max) && matches!(*name, "a" | "b") {
                    continue;
                }
                listed.insert(table_sym(n, name, site));
            }
            let got = param_support(&c);
            let ok = got.is_subset(&listed);
            let strict = ok && got != listed;
            let detail = format!(
                "{label}^({j}): support {:?}{}",
                got.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                if strict { " (strictly contained in the listed set)" } else { "" }
            );
            if !ok && mismatch.is_none() {
                mismatch = Some(detail.clone());
            }
            rep.push(Check::new(format!("dependence {label}^({j})"), ok, detail));
        }
    }
    // z_k^(2) = ½ č_k č_{k+1} c_{k+2} + (free of c_{k+2})
    for k in b.k_min..=b.k_max {
        if (n - 4..=n + 1).contains(&k) || k + 2 > b.k_max {
            continue;
        }
        let (ak, bk, ak1, bk1) = (VarId::a(k), VarId::b(k), VarId::a(k + 1), VarId::b(k + 1));
        let ch = |a: VarId, bb: VarId| MultiRat::one().sub(&MultiRat::var(a).mul(&MultiRat::var(bb)));
        let half = ch(ak, bk).mul(&ch(ak1, bk1)).scale(&crate::exact::q(1, 2));
        let (Some(x2), Some(y2)) = (b.x(k).coeff(2), b.y(k).coeff(2)) else { continue };
        let ok = x2.partial_derivative(VarId::a(k + 2)) == half
            && x2.partial_derivative(VarId::b(k + 2)).is_zero()
            && y2.partial_derivative(VarId::b(k + 2)) == half
            && y2.partial_derivative(VarId::a(k + 2)).is_zero();
        if !ok && mismatch.is_none() {
            mismatch = Some(format!("z_{k}^(2) dependence on c_{}", k + 2));
        }
        rep.push(Check::new(format!("z_{k}^(2) leading dependence"), ok, ""));
    }
    match mismatch {
        Some(m) => Err(FlowError::MismatchReport(m)),
        None => Ok(rep),
    }
}

/// `σ` on balance parameters around the pole site `n`.
pub fn sigma_params(n: i64) -> Result<HashMap<VarId, MultiRat>, FlowError> {
    let v = MultiRat::var;
    let (am, ap) = (v(VarId::a(n - 1)), v(VarId::a(n + 1)));
    let (pm, pp) = (v(VarId::a_minus()), v(VarId::a_plus()));
    let mut m = HashMap::new();
    m.insert(VarId::a(n - 1), am.inv()?);
    m.insert(VarId::a(n + 1), ap.inv()?);
    m.insert(VarId::a_plus(), pp.mul(&ap).div(&am)?.neg());
    m.insert(VarId::a_minus(), pm.mul(&am).div(&ap)?.neg());
    let shift = ap.mul(&pp).sub(&am.mul(&pm)).div(&ap.sub(&am))?;
    m.insert(VarId::a_near(), v(VarId::a_near()).neg().sub(&shift));
    Ok(m)
}

/// `σ` on a rational expression: `a_k ↔ b_k` away from `n±1`, plus
/// [`sigma_params`].
pub fn sigma_rat(n: i64, r: &MultiRat) -> Result<MultiRat, FlowError> {
    let mut m = sigma_params(n)?;
    for w in r.vars() {
        match w.family() {
            Family::A if (w.index() - n).abs() != 1 => {
                m.insert(w, MultiRat::var(VarId::b(w.index())));
            }
            Family::B => {
                m.insert(w, MultiRat::var(VarId::a(w.index())));
            }
            _ => {}
        }
    }
    Ok(r.substitute(&m)?)
}

/// `σ` on a recursion spec: `u_i ↔ u_{-i}`.
pub fn sigma_spec(spec: &RecursionSpec) -> RecursionSpec {
    if spec.self_dual {
        return spec.clone();
    }
    let mut s = spec.clone();
    s.u = spec.u.iter().map(|(i, c)| (-i, c.clone())).collect();
    s
}

/// `σ` on a general balance: swap `x` and `y` and apply `σ` to every
/// coefficient.
pub fn sigma_balance(b: &BalanceSolution) -> Result<BalanceSolution, FlowError> {
    let ys = b.ys.as_ref().ok_or_else(|| FlowError::MismatchReport("σ of a self-dual balance".into()))?;
    let map = |v: &Vec<LSeries>| -> Result<Vec<LSeries>, FlowError> {
        v.iter()
            .map(|s| {
                let cs: Result<Vec<MultiRat>, FlowError> = s.coeffs().iter().map(|c| sigma_rat(b.n, c)).collect();
                Ok(LSeries::new(SeriesVar::T, s.valuation(), cs?, s.trunc()))
            })
            .collect()
    };
    let mut out = b.clone();
    out.xs = map(ys)?;
    out.ys = Some(map(&b.xs)?);
    Ok(out)
}

/// `Ω = a_{n-1}a_{n+1}/(a_{n+1}-a_{n-1})² (a_{n-1}(2a-a_+) - a_{n+1}(2a-a_-))`.
pub fn omega(n: i64) -> MultiRat {
    let v = MultiRat::var;
    let (am, ap) = (v(VarId::a(n - 1)), v(VarId::a(n + 1)));
    let a2 = v(VarId::a_near()).scale(&crate::exact::q(2, 1));
    let d = ap.sub(&am);
    let inner = am.mul(&a2.sub(&v(VarId::a_plus()))).sub(&ap.mul(&a2.sub(&v(VarId::a_minus()))));
    am.mul(&ap).mul(&inner).div(&d.mul(&d)).expect("nonzero symbolic denominator")
}

/// Right-hand side of the `σ(Ω)` identity.
pub fn sigma_omega_expected(n: i64) -> MultiRat {
    let v = MultiRat::var;
    let bm = v(VarId::a(n - 1)).inv().unwrap();
    let bp = v(VarId::a(n + 1)).inv().unwrap();
    omega(n).mul(&bm).mul(&bp).add(&v(VarId::a_plus()).mul(&bm)).sub(&v(VarId::a_minus()).mul(&bp))
}

/// Residuals of the differential equations satisfied by `Γ_k`, `Γ̃_k` along
/// the balance, with `u_{±1}` shifted by `t`.
pub fn check_gamma_ode(spec: &RecursionSpec, b: &BalanceSolution) -> Result<StructureReport, FlowError> {
    let pad = spec.n as i64 + 1;
    let w = b.window(pad);
    let sd = spec.self_dual;
    let lo = b.k_min - 1;
    let hi = b.k_max + 1;
    let gs: HashMap<i64, (LSeries, LSeries)> =
        (lo..=hi).map(|k| (k, gamma_on_series(spec, &w, k, true))).collect();
    let mut rep = StructureReport::default();
    for k in b.k_min..=b.k_max {
        let (g, gt) = &gs[&k];
        let v = w.v(k);
        let mut res = vec![g.differentiate().sub(&v.mul(&gs[&(k + 1)].0.sub(&gs[&(k - 1)].0)))];
        if !sd {
            let cross = w.x(k).mul(gt).sub(&w.y(k).mul(g));
            res[0] = res[0].sub(&w.x(k + 1).sub(&w.x(k - 1)).mul(&cross));
            let rt = gt
                .differentiate()
                .sub(&v.mul(&gs[&(k + 1)].1.sub(&gs[&(k - 1)].1)))
                .add(&w.y(k + 1).sub(&w.y(k - 1)).mul(&cross));
            res.push(rt);
        }
        for r in &res {
            if let Some(c) = r.coeffs().iter().position(|c| !c.is_zero()) {
                return Err(FlowError::NonzeroResidual {
                    site: k,
                    power: r.valuation() + c as i64,
                    value: r.coeffs()[c].to_string(),
                });
            }
        }
        let det = res.iter().map(|r| r.trunc()).min().unwrap();
        rep.push(Check::new(format!("Gamma ODE at k={k}"), true, format!("residual O(t^{det})")));
    }
    Ok(rep)
}

/// The block matrices of `site` as affine functions of the order `r`,
/// interpolated from the recorded orders and validated on all of them.
pub fn block_in_r(b: &BalanceSolution, site: i64) -> Option<Vec<Vec<MultiRat>>> {
    let recs: Vec<&BlockRecord> = b.blocks.iter().filter(|r| r.site == site).collect();
    let m0 = &recs.iter().find(|r| r.order == 0)?.matrix;
    let m1 = &recs.iter().find(|r| r.order == 1)?.matrix;
    let rr = MultiRat::var(VarId::r());
    let dim = m0.len();
    let sym: Vec<Vec<MultiRat>> = (0..dim)
        .map(|i| (0..dim).map(|j| m0[i][j].add(&rr.mul(&m1[i][j].sub(&m0[i][j])))).collect())
        .collect();
    for rec in &recs {
        let at = HashMap::from([(VarId::r(), MultiRat::int(rec.order))]);
        for i in 0..dim {
            for j in 0..dim {
                if sym[i][j].substitute(&at).ok()? != rec.matrix[i][j] {
                    return None;
                }
            }
        }
    }
    Some(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn c(n: i64, d: i64) -> MultiRat {
        MultiRat::constant(q(n, d))
    }
    fn v(x: VarId) -> MultiRat {
        MultiRat::var(x)
    }

    #[test]
    fn rhs_trivial_windows() {
        let w = LatticeWindow::new(0, vec![q(0, 1); 3], Some(vec![q(0, 1); 3]), Boundary::Zero);
        assert_eq!(flow_rhs(&w, 1), (q(0, 1), q(0, 1)));
        let w = LatticeWindow::new(0, vec![q(2, 1); 3], Some(vec![q(5, 1); 3]), Boundary::Zero);
        assert_eq!(flow_rhs(&w, 1), (q(0, 1), q(0, 1)));
    }

    #[test]
    fn self_dual_low_orders() {
        let b = solve_balance(Mode::SelfDual, 0, 6, 3, &Params::new()).unwrap();
        let e = v(VarId::eps());
        let (ap, am) = (v(VarId::a_plus()), v(VarId::a_minus()));
        let xp = b.x(1);
        assert_eq!(xp.coeff(1).unwrap(), e.mul(&ap).scale(&q(4, 1)));
        let want = e.mul(&ap).scale(&q(4, 1)).mul(&v(VarId::a(2)).scale(&q(2, 1)).sub(&am.add(&ap)));
        assert_eq!(xp.coeff(2).unwrap(), want);
        let x0 = b.x(0);
        assert_eq!(x0.coeff(0).unwrap(), e.scale(&q(-1, 2)).mul(&ap.sub(&am)));
        balance_residual(&b).unwrap();
    }

    #[test]
    fn general_low_orders() {
        let b = solve_balance(Mode::General, 0, 6, 3, &Params::new()).unwrap();
        let (am1, ap1) = (v(VarId::a(-1)), v(VarId::a(1)));
        let (ap, am, a) = (v(VarId::a_plus()), v(VarId::a_minus()), v(VarId::a_near()));
        let d = am1.sub(&ap1);
        assert_eq!(b.x(0).coeff(-1).unwrap(), ap1.mul(&am1).div(&d).unwrap());
        assert_eq!(b.y(0).coeff(-1).unwrap(), d.neg().inv().unwrap());
        let y1 = a.add(&ap1.mul(&ap).sub(&am1.mul(&am)).div(&ap1.sub(&am1)).unwrap());
        assert_eq!(b.y(0).coeff(0).unwrap(), y1.div(&d).unwrap());
        assert_eq!(b.x(1).coeff(1).unwrap(), ap1.mul(&ap));
        assert_eq!(b.y(-1).coeff(1).unwrap(), am.div(&ap1).unwrap().neg());
        balance_residual(&b).unwrap();
    }

    #[test]
    fn degenerate_parameters_rejected() {
        let p = Params::new().with(VarId::a(1), c(2, 1)).with(VarId::a(-1), c(2, 1));
        assert!(matches!(solve_balance(Mode::General, 0, 4, 2, &p), Err(FlowError::DegenerateParameters(_))));
    }

    #[test]
    fn sigma_is_an_involution() {
        let n = 0;
        let m = sigma_params(n).unwrap();
        for (k, val) in &m {
            let back = sigma_rat(n, val).unwrap();
            assert_eq!(back, v(*k), "{k}");
        }
    }

    #[test]
    fn sigma_omega() {
        let s = sigma_rat(0, &omega(0)).unwrap();
        assert_eq!(s, sigma_omega_expected(0));
    }

    #[test]
    fn self_dual_second_order_far_sites() {
        let n = 0;
        let b = solve_balance(Mode::SelfDual, n, 7, 3, &Params::new()).unwrap();
        let e = v(VarId::eps());
        let a = |k: i64| match k - n {
            0 => MultiRat::zero(),
            1 => c(-1, 1),
            -1 => c(1, 1),
            _ => v(VarId::a(k)),
        };
        let ch = |k: i64| MultiRat::one().sub(&a(k).mul(&a(k)));
        for k in [-5i64, -4, -3, -2, 2, 3, 4, 5] {
            let kappa = match k - n {
                2 => v(VarId::a_plus()).scale(&q(-4, 1)),
                -2 => v(VarId::a_minus()).scale(&q(4, 1)),
                _ => MultiRat::zero(),
            };
            let d = a(k + 1).sub(&a(k - 1));
            let inner = a(k - 2)
                .mul(&ch(k - 1))
                .add(&a(k + 2).mul(&ch(k + 1)))
                .sub(&a(k).mul(&d.mul(&d).add(&c(2, 1)).sub(&a(k - 1).mul(&a(k + 1)).scale(&q(2, 1)))))
                .add(&kappa);
            let want = e.mul(&ch(k)).mul(&inner).scale(&q(1, 2));
            assert_eq!(b.x(k).coeff(1).unwrap(), e.mul(&ch(k)).mul(&d), "k={k}");
            assert_eq!(b.x(k).coeff(2).unwrap(), want, "k={k}");
        }
        let (ap, am) = (v(VarId::a_plus()), v(VarId::a_minus()));
        let dd = ap.sub(&am);
        let t2 = dd
            .mul(&dd)
            .add(&ap.mul(&v(VarId::a(2))).sub(&am.mul(&v(VarId::a(-2)))).add(&c(1, 1)).sub(&ap.mul(&am).scale(&q(2, 1))).scale(&q(4, 1)))
            .scale(&q(1, 3));
        assert_eq!(b.x(0).coeff(1).unwrap(), e.scale(&q(-1, 2)).mul(&t2));
    }

    #[test]
    fn self_dual_v_series() {
        let b = solve_balance(Mode::SelfDual, 0, 6, 3, &Params::new()).unwrap();
        let w = b.window(1);
        let (ap, am) = (v(VarId::a_plus()), v(VarId::a_minus()));
        assert_eq!(w.v(1).coeff(1).unwrap(), ap.scale(&q(8, 1)));
        assert_eq!(w.v(-1).coeff(1).unwrap(), am.scale(&q(-8, 1)));
        let v0 = w.v(0);
        assert_eq!(v0.valuation(), -2);
        assert_eq!(v0.coeff(-2).unwrap(), c(-1, 4));
        assert_eq!(v0.coeff(-1).unwrap(), ap.sub(&am).scale(&q(-1, 2)));
    }

    #[test]
    fn block_determinants() {
        let rr = MultiRat::var(VarId::r());
        for mode in [Mode::General, Mode::SelfDual] {
            let b = solve_balance(mode, 0, 6, 5, &Params::new()).unwrap();
            for site in [-1i64, 0, 1] {
                let m = block_in_r(&b, site).expect("affine in r");
                let d = linalg::det(&m);
                if mode == Mode::General {
                    let want = if site == 0 { rr.mul(&rr.add(&c(2, 1))) } else { rr.mul(&rr.add(&c(1, 1))) };
                    assert_eq!(d, want, "site {site}");
                } else {
                    let e = v(VarId::eps());
                    let want = if site == 0 { e.scale(&q(-1, 2)).mul(&rr.add(&c(2, 1))) } else { rr.clone() };
                    let ratio = d.div(&want).unwrap();
                    assert!(!ratio.contains_var(VarId::r()), "site {site}: {d}");
                }
            }
        }
    }

    #[test]
    fn dependence_table_holds() {
        let b = solve_balance(Mode::General, 0, 7, 3, &Params::new()).unwrap();
        let rep = check_dependence_table(&b).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn sigma_maps_balance_to_itself() {
        let b = solve_balance(Mode::General, 0, 5, 3, &Params::new()).unwrap();
        let s = sigma_balance(&b).unwrap();
        for k in b.k_min..=b.k_max {
            assert_eq!(s.x(k), b.x(k), "x_{k}");
            assert_eq!(s.y(k), b.y(k), "y_{k}");
        }
    }

    #[test]
    fn gamma_ode_self_dual_and_general() {
        let spec = RecursionSpec::rational(1, &[(1, q(2, 3))], true, 0).unwrap();
        let b = solve_balance(Mode::SelfDual, 0, 6, 4, &Params::new()).unwrap();
        assert!(check_gamma_ode(&spec, &b).unwrap().passed());
        let spec = RecursionSpec::rational(2, &[(1, q(1, 2)), (-1, q(2, 1)), (2, q(1, 3)), (-2, q(3, 1))], false, 0).unwrap();
        let mut p = Params::new();
        for k in -8..=8 {
            p.set(VarId::a(k), c(k + 11, 7));
            p.set(VarId::b(k), c(3, k.abs() + 2));
        }
        p.set(VarId::a_plus(), c(1, 5));
        p.set(VarId::a_minus(), c(-2, 9));
        p.set(VarId::a_near(), c(4, 3));
        let b = solve_balance(Mode::General, 0, 7, 4, &p).unwrap();
        assert!(check_gamma_ode(&spec, &b).unwrap().passed());
    }
}
