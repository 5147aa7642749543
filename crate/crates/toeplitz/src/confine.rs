//! Tangency conditions, parameter restriction and the confined Laurent
//! solutions in the parameter `λ`.

use crate::exact::{linalg, ExactError, Family, MultiPoly, MultiRat, Rational, VarId};
use crate::flow::{is_parameter, solve_balance, BalanceSolution, FlowError, Mode, Params};
use crate::gamma::{build_gamma, gamma_on_series, GammaError, RecursionSpec};
use crate::lax::{Boundary, Check, LatticeWindow, StructureReport};
use crate::series::{implicit_reparam_at, substitute_series, LSeries, SeriesError, SeriesVar};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfineError {
    #[error("step {step}: condition is not affine in the unknowns ({detail})")]
    NonlinearStep { step: String, detail: String },
    #[error("step {step}: the coefficient of the unknowns vanishes")]
    SingularLeadingCoefficient { step: String },
    #[error("step {step}: unexpected parameters {vars:?}")]
    UnexpectedParameter { step: String, vars: Vec<String> },
    #[error("step {step}: {var} must be absent")]
    PresentParameter { step: String, var: String },
    #[error("step {step}: balance truncation too low for {what}")]
    InsufficientOrder { step: String, what: String },
    #[error("redundant condition does not vanish: {0}")]
    RedundancyFailure(String),
    #[error("parameters left unrestricted: {0:?}")]
    Unrestricted(Vec<String>),
    #[error("tangency residual at site {site}, power {power}: {value}")]
    NonzeroResidual { site: i64, power: i64, value: String },
    #[error("confinement failure at site {site}: {detail}")]
    ConfinementFailure { site: i64, detail: String },
    #[error("lambda(t) is not reversible")]
    NotReversible,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Gamma(#[from] GammaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    Gamma,
    GammaTilde,
}

/// Coefficient of `t^power` in `Γ_k(t)` or `Γ̃_k(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub component: Component,
    pub k: i64,
    pub power: i64,
}

impl Condition {
    pub fn gamma(k: i64, power: i64) -> Condition {
        Condition { component: Component::Gamma, k, power }
    }
    pub fn gamma_tilde(k: i64, power: i64) -> Condition {
        Condition { component: Component::GammaTilde, k, power }
    }
    fn label(&self) -> String {
        let g = match self.component {
            Component::Gamma => "Gamma",
            Component::GammaTilde => "GammaTilde",
        };
        format!("{g}_{}^({})", self.k, self.power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Unknown {
    Direct(VarId),
    /// The condition is affine in `1/v`.
    Reciprocal(VarId),
}

impl Unknown {
    pub fn var(self) -> VarId {
        match self {
            Unknown::Direct(v) | Unknown::Reciprocal(v) => v,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub label: String,
    pub conditions: Vec<Condition>,
    pub unknowns: Vec<Unknown>,
    /// Parameters that must not occur in the conditions.
    pub absent: Vec<VarId>,
}

/// Ordered restriction steps for one mode, order `N` and pole site `n`.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionPlan {
    pub mode: Mode,
    pub order: usize,
    pub pole: i64,
    pub half_width: i64,
    pub steps: Vec<Step>,
    /// Parameters kept free.
    pub free: Vec<VarId>,
    /// Conditions implied by the others.
    pub redundant: Vec<Condition>,
}

fn both(k: i64, p: i64) -> Vec<Condition> {
    vec![Condition::gamma(k, p), Condition::gamma_tilde(k, p)]
}
fn pair(k: i64) -> Vec<Unknown> {
    vec![Unknown::Direct(VarId::a(k)), Unknown::Direct(VarId::b(k))]
}

impl RestrictionPlan {
    /// The plan for the window `[n-hw, n+hw]`.
    pub fn new(mode: Mode, order: usize, n: i64, hw: i64) -> RestrictionPlan {
        let nn = order as i64;
        let mut steps = Vec::new();
        let step = |label: String, conditions: Vec<Condition>, unknowns: Vec<Unknown>| Step {
            label,
            conditions,
            unknowns,
            absent: Vec::new(),
        };
        let (free, redundant) = match mode {
            Mode::SelfDual => {
                let d = |v: VarId| vec![Unknown::Direct(v)];
                for j in 1..=hw - 2 * nn {
                    steps.push(step(format!("(1) Gamma_{}", n - nn - j), vec![Condition::gamma(n - nn - j, 0)], d(VarId::a(n - 2 * nn - j))));
                }
                if nn == 1 {
                    steps.push(step("(4) Gamma_{n-1}".into(), vec![Condition::gamma(n - 1, 0)], d(VarId::a_minus())));
                    steps.push(step("(5) Gamma_{n+1}".into(), vec![Condition::gamma(n + 1, 0)], d(VarId::a_plus())));
                } else {
                    steps.push(step("(4) Gamma_{n-N}".into(), vec![Condition::gamma(n - nn, 0)], d(VarId::a_minus())));
                    steps.push(step("(5) Gamma_{n-N+1}".into(), vec![Condition::gamma(n - nn + 1, 0)], d(VarId::a_plus())));
                    for i in 2..nn {
                        steps.push(step(format!("(6) Gamma_{}", n - nn + i), vec![Condition::gamma(n - nn + i, 0)], d(VarId::a(n + i))));
                    }
                    let mut s9 = step("(9) Gamma_{n+1}".into(), vec![Condition::gamma(n + 1, 0)], d(VarId::a(n + nn)));
                    s9.absent.push(VarId::a(n + nn + 1));
                    steps.push(s9);
                }
                steps.push(step("(10) Gamma_n".into(), vec![Condition::gamma(n, 0)], d(VarId::a(n + nn + 1))));
                for j in 2..=hw - nn {
                    steps.push(step(format!("(11) Gamma_{}", n + j), vec![Condition::gamma(n + j, 0)], d(VarId::a(n + nn + j))));
                }
                ((n - 2 * nn..=n - 2).map(VarId::a).collect(), Vec::new())
            }
            Mode::General => {
                for j in 1..=hw - 2 * nn {
                    steps.push(step(format!("(1) Delta_{}", n - nn - j), both(n - nn - j, 0), pair(n - 2 * nn - j)));
                }
                steps.push(step(
                    "(4) Delta_{n-N}".into(),
                    both(n - nn, 0),
                    vec![Unknown::Direct(VarId::a_minus()), Unknown::Reciprocal(VarId::a(n + 1))],
                ));
                if nn == 1 {
                    steps.push(step("(5) Gamma_{n+1}".into(), vec![Condition::gamma(n + 1, 0)], vec![Unknown::Direct(VarId::a_plus())]));
                    steps.push(step("(9a) Gamma_{n-1}^(1)".into(), vec![Condition::gamma(n - 1, 1)], vec![Unknown::Direct(VarId::a_near())]));
                } else {
                    steps.push(step(
                        "(5) Delta_{n-N+1}".into(),
                        both(n - nn + 1, 0),
                        vec![Unknown::Direct(VarId::a_plus()), Unknown::Direct(VarId::a_near())],
                    ));
                    for i in 2..nn {
                        steps.push(step(format!("(6) Delta_{}", n - nn + i), both(n - nn + i, 0), pair(n + i)));
                    }
                    steps.push(step("(9a) Gamma_{n-1}^(1)".into(), vec![Condition::gamma(n - 1, 1)], vec![Unknown::Direct(VarId::a(n + nn))]));
                    let mut s9 = step("(9b) Gamma_{n+1}".into(), vec![Condition::gamma(n + 1, 0)], vec![Unknown::Direct(VarId::b(n + nn))]);
                    s9.absent.push(VarId::a(n + nn + 1));
                    steps.push(s9);
                }
                steps.push(step("(10) Delta_n".into(), both(n, 0), pair(n + nn + 1)));
                for j in 2..=hw - nn {
                    steps.push(step(format!("(11) Delta_{}", n + j), both(n + j, 0), pair(n + nn + j)));
                }
                let mut free: Vec<VarId> = (n - 2 * nn..=n - 2).flat_map(|k| [VarId::a(k), VarId::b(k)]).collect();
                free.push(VarId::a(n - 1));
                (free, vec![Condition::gamma_tilde(n + 1, 0)])
            }
        };
        RestrictionPlan { mode, order, pole: n, half_width: hw, steps, free, redundant }
    }
}

impl RestrictionPlan {
    /// The plan cut after the last step whose label starts with `prefix`.
    pub fn through(&self, prefix: &str) -> RestrictionPlan {
        let mut p = self.clone();
        if let Some(i) = p.steps.iter().rposition(|s| s.label.starts_with(prefix)) {
            p.steps.truncate(i + 1);
        }
        p
    }
}

/// The tangency conditions whose vanishing forces `Γ(t) ≡ 0`.
pub fn tangency_conditions(spec: &RecursionSpec, k_range: (i64, i64)) -> Vec<Condition> {
    let n = spec.pole_site;
    let mut out = Vec::new();
    for k in k_range.0..=k_range.1 {
        if spec.self_dual {
            out.push(Condition::gamma(k, 0));
        } else if k == n + 1 {
            out.push(Condition::gamma(k, 0));
        } else {
            out.extend(both(k, 0));
        }
    }
    if !spec.self_dual {
        out.push(Condition::gamma(n - 1, 1));
    }
    out
}

/// `Γ_k(t)` and `Γ̃_k(t)` (time-dependent couplings) on a balance.
pub fn gamma_series(spec: &RecursionSpec, b: &BalanceSolution, k: i64) -> (LSeries, LSeries) {
    let w = b.window(spec.n as i64 + 1);
    gamma_on_series(spec, &w, k, true)
}

/// Value of a condition on the balance after substituting `values` into the
/// sites it involves.
pub fn condition_value(
    spec: &RecursionSpec,
    b: &BalanceSolution,
    c: Condition,
    values: &HashMap<VarId, MultiRat>,
) -> Result<Option<MultiRat>, ConfineError> {
    let nn = spec.n as i64;
    let lo = c.k - nn;
    let hi = c.k + nn;
    let o = LSeries::big_o(SeriesVar::T, 0);
    let get = |k: i64, y: bool| -> Result<LSeries, ExactError> {
        if k < b.k_min || k > b.k_max {
            return Ok(o.clone());
        }
        let s = if y { b.y(k) } else { b.x(k) };
        s.substitute(values)
    };
    let mut xs = vec![o.clone()];
    let mut ys = vec![o.clone()];
    for k in lo..=hi {
        xs.push(get(k, false)?);
        if b.ys.is_some() {
            ys.push(get(k, true)?);
        }
    }
    xs.push(o.clone());
    ys.push(o);
    let w = LatticeWindow::new(lo - 1, xs, b.ys.as_ref().map(|_| ys), Boundary::Zero);
    let (g, gt) = gamma_on_series(spec, &w, c.k, true);
    let s = match c.component {
        Component::Gamma => g,
        Component::GammaTilde => gt,
    };
    Ok(s.coeff(c.power))
}

/// Report of one executed restriction step.
#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub label: String,
    pub solved: Vec<(String, String)>,
    /// Determinant of the linear system in the unknowns.
    pub determinant: String,
}

/// Outcome of the parameter restriction.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub plan: RestrictionPlan,
    /// Assigned values of every balance parameter in the window.
    pub params: Params,
    pub steps: Vec<StepReport>,
}

fn free_symbols(c: &MultiRat) -> BTreeSet<VarId> {
    c.vars().into_iter().filter(|v| is_parameter(*v) && !v.is_jet() && !v.is_eps()).collect()
}

/// Run `plan` on the balance with the plateau values in `base` and report
/// every solved parameter.
pub fn restrict_parameters(spec: &RecursionSpec, plan: &RestrictionPlan, base: &Params) -> Result<Restriction, ConfineError> {
    let mode = plan.mode;
    let n = plan.pole;
    let mut values: HashMap<VarId, MultiRat> = base.values.clone();
    let mut reports = Vec::new();
    // balances by order, computed on demand
    let mut cache: Vec<Option<BalanceSolution>> = vec![None; 10];
    for step in &plan.steps {
        let mut conds = Vec::new();
        for order in 1..=cache.len() {
            if cache[order - 1].is_none() {
                cache[order - 1] = Some(solve_balance(mode, n, plan.half_width, order as i64, base)?);
            }
            let bal = cache[order - 1].as_ref().unwrap();
            conds.clear();
            for c in &step.conditions {
                match condition_value(spec, bal, *c, &values)? {
                    Some(v) => conds.push(v),
                    None => break,
                }
            }
            if conds.len() == step.conditions.len() {
                break;
            }
        }
        if conds.len() < step.conditions.len() {
            return Err(ConfineError::InsufficientOrder { step: step.label.clone(), what: "condition".into() });
        }
        let unk: BTreeSet<VarId> = step.unknowns.iter().map(|u| u.var()).collect();
        for c in &conds {
            for a in &step.absent {
                if c.contains_var(*a) {
                    return Err(ConfineError::PresentParameter { step: step.label.clone(), var: a.to_string() });
                }
            }
            let extra: Vec<String> = free_symbols(c).difference(&unk).map(|v| v.to_string()).collect();
            if !extra.is_empty() {
                return Err(ConfineError::UnexpectedParameter { step: step.label.clone(), vars: extra });
            }
        }
        let (sol, det) = match solve_affine(&step.label, &conds, &step.unknowns) {
            Err(ConfineError::NonlinearStep { .. }) if conds.len() > 1 => solve_triangular(&step.label, &conds, &step.unknowns)?,
            r => r?,
        };
        let mut solved = Vec::new();
        for (u, v) in step.unknowns.iter().zip(sol) {
            solved.push((u.var().to_string(), v.to_string()));
            values.insert(u.var(), v);
        }
        // earlier values may mention the new unknowns only through `values`
        let newly: HashMap<VarId, MultiRat> = step.unknowns.iter().map(|u| (u.var(), values[&u.var()].clone())).collect();
        for (k, v) in values.iter_mut() {
            if !newly.contains_key(k) && v.vars().iter().any(|x| newly.contains_key(x)) {
                *v = v.substitute(&newly)?;
            }
        }
        reports.push(StepReport { label: step.label.clone(), solved, determinant: det.to_string() });
    }
    Ok(Restriction { plan: plan.clone(), params: Params { values }, steps: reports })
}

/// Solve conditions jointly affine in the unknowns (reciprocal unknowns
/// replaced by fresh symbols). Returns the values and the determinant.
fn solve_affine(label: &str, conds: &[MultiRat], unknowns: &[Unknown]) -> Result<(Vec<MultiRat>, MultiRat), ConfineError> {
    let fresh: Vec<VarId> = (0..unknowns.len() as i64).map(|i| VarId::unknown(20 + i)).collect();
    let mut rename = HashMap::new();
    for (u, f) in unknowns.iter().zip(&fresh) {
        let val = match u {
            Unknown::Direct(_) => MultiRat::var(*f),
            Unknown::Reciprocal(_) => MultiRat::var(*f).inv()?,
        };
        rename.insert(u.var(), val);
    }
    let nonlinear = |detail: String| ConfineError::NonlinearStep { step: label.to_string(), detail };
    let zero: HashMap<VarId, MultiRat> = fresh.iter().map(|f| (*f, MultiRat::zero())).collect();
    let mut mat = Vec::new();
    let mut rhs = Vec::new();
    for c in conds {
        let e = c.substitute(&rename)?;
        let c0 = e.substitute(&zero).map_err(|_| nonlinear("not defined at zero".into()))?;
        let mut row = Vec::new();
        for f in &fresh {
            let d = e.partial_derivative(*f);
            if fresh.iter().any(|g| d.contains_var(*g)) {
                return Err(nonlinear(format!("in {f}")));
            }
            row.push(d);
        }
        mat.push(row);
        rhs.push(c0.neg());
    }
    let singular = || ConfineError::SingularLeadingCoefficient { step: label.to_string() };
    let det = linalg::det(&mat);
    if det.is_zero() {
        return Err(singular());
    }
    let sol = linalg::solve(&mat, &rhs).ok_or_else(singular)?;
    let vals = unknowns
        .iter()
        .zip(sol)
        .map(|(u, s)| match u {
            Unknown::Direct(_) => Ok(s),
            Unknown::Reciprocal(_) => s.inv(),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((vals, det))
}

/// Solve a system that becomes affine one unknown at a time: repeatedly
/// pick a condition involving a single unsolved unknown.
fn solve_triangular(label: &str, conds: &[MultiRat], unknowns: &[Unknown]) -> Result<(Vec<MultiRat>, MultiRat), ConfineError> {
    let mut known: HashMap<VarId, MultiRat> = HashMap::new();
    let mut used = vec![false; conds.len()];
    let mut det = MultiRat::one();
    while known.len() < unknowns.len() {
        let mut progress = false;
        for (i, c) in conds.iter().enumerate() {
            if used[i] {
                continue;
            }
            let e = c.substitute(&known)?;
            let open: Vec<Unknown> = unknowns.iter().copied().filter(|u| !known.contains_key(&u.var()) && e.contains_var(u.var())).collect();
            if open.len() != 1 {
                continue;
            }
            let (v, d) = solve_affine(label, &[e], &open)?;
            det = det.mul(&d);
            known.insert(open[0].var(), v[0].clone());
            used[i] = true;
            progress = true;
        }
        if !progress {
            return Err(ConfineError::NonlinearStep { step: label.to_string(), detail: "no triangular order".into() });
        }
    }
    Ok((unknowns.iter().map(|u| known[&u.var()].clone()).collect(), det))
}

/// Sites `k` whose `Γ_k` involves only edge-free balance sites.
pub fn gamma_edge_free(spec: &RecursionSpec, b: &BalanceSolution) -> Vec<i64> {
    let ef: BTreeSet<i64> = b.edge_free().into_iter().collect();
    let nn = spec.n as i64;
    (b.k_min..=b.k_max).filter(|k| (k - nn..=k + nn).all(|j| ef.contains(&j))).collect()
}

/// Balance at order `m` with the restricted parameters, and a report that
/// `Γ_k(t)`, `Γ̃_k(t)` vanish to their propagated order at every edge-free
/// site, that no parameter beyond the plan's free set survives, and that
/// the redundant conditions vanish.
pub fn verify_restriction(
    spec: &RecursionSpec,
    r: &Restriction,
    m: i64,
) -> Result<(BalanceSolution, StructureReport), ConfineError> {
    let plan = &r.plan;
    let b = solve_balance(plan.mode, plan.pole, plan.half_width, m, &r.params)?;
    let mut rep = StructureReport::default();
    let free: BTreeSet<VarId> = plan.free.iter().copied().collect();
    let left: Vec<String> = b
        .free_parameters()
        .into_iter()
        .filter(|v| !v.is_jet() && !v.is_eps() && !free.contains(v))
        .map(|v| v.to_string())
        .collect();
    if !left.is_empty() {
        return Err(ConfineError::Unrestricted(left));
    }
    for c in &plan.redundant {
        let v = condition_value(spec, &b, *c, &HashMap::new())?
            .ok_or_else(|| ConfineError::RedundancyFailure(format!("{} undetermined", c.label())))?;
        if !v.is_zero() {
            return Err(ConfineError::RedundancyFailure(format!("{} = {v}", c.label())));
        }
        rep.push(Check::new(format!("redundant {}", c.label()), true, "vanishes"));
    }
    let sites = gamma_edge_free(spec, &b);
    let mut worst = i64::MAX;
    for &k in &sites {
        let (g, gt) = gamma_series(spec, &b, k);
        for s in [&g, &gt] {
            if let Some(i) = s.coeffs().iter().position(|c| !c.is_zero()) {
                return Err(ConfineError::NonzeroResidual {
                    site: k,
                    power: s.valuation() + i as i64,
                    value: s.coeffs()[i].to_string(),
                });
            }
            worst = worst.min(s.trunc());
        }
    }
    rep.push(Check::new(
        "Gamma vanishes along the restricted balance",
        !sites.is_empty(),
        format!("sites {:?}..{:?}: O(t^{worst})", sites.first(), sites.last()),
    ));
    Ok((b, rep))
}

/// Pole structure of `Γ_n` on an unrestricted balance: the self-dual simple
/// pole, the general double pole and the two-way identity.
pub fn check_pole_structure(spec: &RecursionSpec, b: &BalanceSolution) -> Result<StructureReport, ConfineError> {
    let n = b.n;
    let mut rep = StructureReport::default();
    let g0 = |k: i64| -> Result<(MultiRat, MultiRat), ConfineError> {
        let (g, gt) = gamma_series(spec, b, k);
        let f = |s: &LSeries| s.coeff(0).ok_or(ConfineError::InsufficientOrder { step: "pole".into(), what: format!("site {k}") });
        Ok((f(&g)?, f(&gt)?))
    };
    let (gn, gtn) = gamma_series(spec, b, n);
    for k in [n - 1, n + 1] {
        let (g, _) = gamma_series(spec, b, k);
        rep.push(Check::new(format!("Gamma_{k} is regular"), g.valuation() >= 0, g.valuation().to_string()));
    }
    let (gm, gtm) = g0(n - 1)?;
    let (gp, gtp) = g0(n + 1)?;
    if spec.self_dual {
        let want = gp.sub(&gm).scale(&crate::exact::q(1, 4));
        let got = gn.coeff(-1).unwrap_or_else(MultiRat::zero);
        rep.push(Check::new("Gamma_n pole coefficient", gn.valuation() >= -1 && got == want, got.to_string()));
        return Ok(rep);
    }
    let v = MultiRat::var;
    let (am, ap, pm, pp) = (v(VarId::a(n - 1)), v(VarId::a(n + 1)), v(VarId::a_minus()), v(VarId::a_plus()));
    let d2 = am.sub(&ap).mul(&am.sub(&ap));
    let want = ap.mul(&ap).div(&pm.mul(&d2))?.mul(&gm.sub(&am.mul(&am).mul(&gtm)));
    let want_t = ap.mul(&am).div(&pm.mul(&d2))?.mul(&gm.div(&am.mul(&am))?.sub(&gtm));
    let got = gn.coeff(-2).unwrap_or_else(MultiRat::zero);
    let got_t = gtn.coeff(-2).unwrap_or_else(MultiRat::zero);
    rep.push(Check::new("Gamma_n t^-2 coefficient", gn.valuation() >= -2 && got == want, got.to_string()));
    rep.push(Check::new("GammaTilde_n t^-2 coefficient", gtn.valuation() >= -2 && got_t == want_t, got_t.to_string()));
    let lhs = pm.mul(&gtp.sub(&gp.div(&ap.mul(&ap))?));
    let rhs = pp.mul(&gm.div(&am.mul(&am))?.sub(&gtm));
    rep.push(Check::new("two-way identity", lhs == rhs, lhs.sub(&rhs).to_string()));
    Ok(rep)
}

/// Replace the time jet `s` by the series variable: `Σ c_i(s) t^i` becomes
/// `Σ c_ij t^(i+j)`.
pub fn merge_time_jet(f: &LSeries, s: VarId) -> LSeries {
    let mut acc = LSeries::zero(SeriesVar::T, f.trunc());
    for (i, c) in f.coeffs().iter().enumerate() {
        let p = f.valuation() + i as i64;
        if !c.contains_var(s) {
            acc = acc.add(&LSeries::monomial(SeriesVar::T, c.clone(), p));
            continue;
        }
        let den = MultiRat::from_poly(c.den().clone());
        for (j, cj) in c.num().to_univariate(s).into_iter().enumerate() {
            if cj.is_zero() {
                continue;
            }
            let term = MultiRat::from_poly(cj).div(&den).expect("nonzero denominator");
            acc = acc.add(&LSeries::monomial(SeriesVar::T, term, p + j as i64));
        }
    }
    acc.truncate(f.trunc())
}

/// Drop jet monomials of degree >= 2 and move the remaining jets to cap 2.
fn linearize_jets(c: &MultiRat) -> MultiRat {
    if !c.vars().iter().any(|v| v.is_jet()) {
        return c.clone();
    }
    let num = MultiPoly::from_terms(
        c.num()
            .terms()
            .iter()
            .filter(|(m, _)| m.0.iter().filter(|(v, _)| v.is_jet()).map(|(_, e)| *e).sum::<u32>() < 2)
            .cloned(),
    )
    .map_vars(lin_jet);
    MultiRat::new(num, c.den().clone()).expect("nonzero denominator")
}

fn lin_jet(v: VarId) -> VarId {
    if v.is_jet() && !v.is_time_jet() {
        VarId::jet_at(v.jet_site(), 2, v.family() == Family::DB)
    } else {
        v
    }
}

/// Rational seed values for the free plateau parameters.
#[derive(Debug, Clone)]
pub struct Seeds {
    /// Self-dual: `a_k` for the plateau; general: `(a_k, b_k)`.
    pub plateau: Vec<(Rational, Rational)>,
    /// General only: `a_{n-1}`.
    pub near: Rational,
    /// `None` keeps `ε` symbolic.
    pub eps: Option<i64>,
}

/// Formal solution of the recursion with constant couplings.
#[derive(Debug, Clone)]
pub struct ConfinedSolution {
    pub n: i64,
    pub mode: Mode,
    /// Constant couplings `U`.
    pub spec: RecursionSpec,
    pub k_min: i64,
    pub k_max: i64,
    pub xs: Vec<LSeries>,
    pub ys: Option<Vec<LSeries>>,
    /// Surviving free parameters with the plateau value they control.
    pub parameters: Vec<(String, VarId, MultiRat)>,
    pub eps: MultiRat,
    pub t_of_lambda: LSeries,
    pub restriction: Vec<StepReport>,
}

impl ConfinedSolution {
    pub fn x(&self, k: i64) -> LSeries {
        self.xs[(k - self.k_min) as usize].clone()
    }
    pub fn y(&self, k: i64) -> LSeries {
        match &self.ys {
            Some(ys) => ys[(k - self.k_min) as usize].clone(),
            None => self.x(k),
        }
    }
    /// Free parameters including `λ`.
    pub fn parameter_count(&self) -> usize {
        self.parameters.len() + 1
    }
    pub fn window(&self, pad: i64) -> LatticeWindow<LSeries> {
        let o = LSeries::big_o(SeriesVar::Lambda, 0);
        let padv = |v: &Vec<LSeries>| {
            let mut out = vec![o.clone(); pad as usize];
            out.extend(v.iter().cloned());
            out.extend(std::iter::repeat(o.clone()).take(pad as usize));
            out
        };
        LatticeWindow::new(self.k_min - pad, padv(&self.xs), self.ys.as_ref().map(padv), Boundary::Zero)
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
        serde_json::json!({
            "pole_site": self.n,
            "mode": self.mode,
            "spec": self.spec,
            "eps": self.eps.to_string(),
            "parameters": self.parameters.iter().map(|(name, v, val)| serde_json::json!({"name": name, "jet": v.to_string(), "value": val.to_string()})).collect::<Vec<_>>(),
            "parameter_count": self.parameter_count(),
            "t_of_lambda": self.t_of_lambda.to_json(),
            "restriction": self.restriction,
            "sites": sites,
        })
    }
}

/// Build the confined solution around `spec.pole_site` with `m` orders in `λ`.
///
/// The plateau parameters are the seeds plus jets; the couplings `u_{±1}`
/// are shifted by a time jet which is merged into `t` after restriction.
pub fn build_confined(spec: &RecursionSpec, seeds: &Seeds, m: i64) -> Result<ConfinedSolution, ConfineError> {
    let nn = spec.n as i64;
    let n = spec.pole_site;
    let mode = if spec.self_dual { Mode::SelfDual } else { Mode::General };
    let hw = 2 * nn + m + 2;
    let cap = (m + 2) as u32;
    let s = VarId::time_jet(cap);
    let sv = MultiRat::var(s);
    let shifted = spec.with_u1(spec.u(1).sub(&sv), spec.u(-1).sub(&sv));
    let mut base = Params::new();
    let eps = match seeds.eps {
        Some(e) => MultiRat::int(e),
        None => MultiRat::var(VarId::eps()),
    };
    base.set(VarId::eps(), eps.clone());
    let mut jets: Vec<(String, VarId, VarId, Rational)> = Vec::new();
    let plateau: Vec<i64> = (n - 2 * nn..=n - 2).collect();
    assert_eq!(seeds.plateau.len(), plateau.len());
    for (k, (a, b)) in plateau.iter().zip(&seeds.plateau) {
        jets.push((format!("alpha_{k}"), VarId::a(*k), VarId::jet_at(*k, cap, false), a.clone()));
        if !spec.self_dual {
            jets.push((format!("beta_{k}"), VarId::b(*k), VarId::jet_at(*k, cap, true), b.clone()));
        }
    }
    if !spec.self_dual {
        jets.push((format!("alpha_{}", n - 1), VarId::a(n - 1), VarId::jet_at(n - 1, cap, false), seeds.near.clone()));
    }
    for (_, p, j, a) in &jets {
        base.set(*p, MultiRat::constant(a.clone()).add(&MultiRat::var(*j)));
    }
    let plan = RestrictionPlan::new(mode, spec.n, n, hw);
    let restr = restrict_parameters(&shifted, &plan, &base)?;
    let b = solve_balance(mode, n, hw, m, &restr.params)?;
    let merge = |v: &Vec<LSeries>| -> Vec<LSeries> { v.iter().map(|f| merge_time_jet(f, s)).collect() };
    let xs = merge(&b.xs);
    let ys = b.ys.as_ref().map(merge);
    let site = |v: &Vec<LSeries>, k: i64| v[(k - b.k_min) as usize].clone();
    // plateau family and its reparametrization
    let mut family = Vec::new();
    let mut targets = Vec::new();
    for k in &plateau {
        family.push(site(&xs, *k));
        targets.push((VarId::jet_at(*k, cap, false), MultiRat::var(VarId::jet_at(*k, cap, false))));
        if let Some(ys) = &ys {
            family.push(site(ys, *k));
            targets.push((VarId::jet_at(*k, cap, true), MultiRat::var(VarId::jet_at(*k, cap, true))));
        }
    }
    if !spec.self_dual {
        family.push(site(&xs, n - 1));
        targets.push((VarId::jet_at(n - 1, cap, false), MultiRat::var(VarId::jet_at(n - 1, cap, false))));
    }
    let reparam = implicit_reparam_at(&family, &targets)?;
    let limit = m + 1;
    let sub = |v: &Vec<LSeries>| -> Result<Vec<LSeries>, SeriesError> {
        v.iter().map(|f| substitute_series(f, &reparam, limit)).collect()
    };
    let xs = sub(&xs)?;
    let ys = match &ys {
        Some(v) => Some(sub(v)?),
        None => None,
    };
    let lam_t = match &ys {
        None => site(&xs, n - 1).sub(&LSeries::constant(SeriesVar::T, eps.clone())),
        Some(ys) => {
            let c0 = site(ys, n - 1).coeff(0).ok_or(ConfineError::NotReversible)?;
            site(ys, n - 1).sub(&LSeries::constant(SeriesVar::T, c0))
        }
    };
    if lam_t.valuation() != 1 {
        return Err(ConfineError::NotReversible);
    }
    let t_of_l = lam_t.reverse().map_err(|_| ConfineError::NotReversible)?;
    let to_lambda = |v: &Vec<LSeries>| -> Result<Vec<LSeries>, SeriesError> {
        v.iter()
            .map(|f| {
                let g = f.compose(&t_of_l)?;
                let keep = if f.valuation() < 0 { m - 1 } else { m };
                Ok(g.map_coeffs(linearize_jets).truncate(keep))
            })
            .collect()
    };
    let xs_l = to_lambda(&xs)?;
    let ys_l = match &ys {
        Some(v) => Some(to_lambda(v)?),
        None => None,
    };
    let parameters = jets
        .iter()
        .map(|(name, _, j, a)| {
            let val = MultiRat::constant(a.clone()).add(&MultiRat::var(lin_jet(*j)));
            (name.clone(), lin_jet(*j), val)
        })
        .collect();
    Ok(ConfinedSolution {
        n,
        mode,
        spec: spec.clone(),
        k_min: b.k_min,
        k_max: b.k_max,
        xs: xs_l,
        ys: ys_l,
        parameters,
        eps,
        t_of_lambda: t_of_l.map_coeffs(linearize_jets),
        restriction: restr.steps,
    })
}

fn exact_const(s: &LSeries, c: &MultiRat) -> bool {
    s.coeffs().is_empty() && c.is_zero() || s.valuation() >= 0 && s.coeff(0) == Some(c.clone()) && s.coeffs().iter().skip(if s.valuation() == 0 { 1 } else { 0 }).all(|x| x.is_zero())
}

/// Shape invariants of a confined solution, `Γ_k = O(λ^M')` with constant
/// couplings, and agreement with forward iteration of the recursion from
/// the seed below the pole.
pub fn verify_confinement(c: &ConfinedSolution) -> Result<StructureReport, ConfineError> {
    let n = c.n;
    let nn = c.spec.n as i64;
    let mut rep = StructureReport::default();
    let fail = |site: i64, detail: String| ConfineError::ConfinementFailure { site, detail };
    let value = |name: &str| c.parameters.iter().find(|p| p.0 == name).map(|p| p.2.clone());
    for k in n - 2 * nn..=n - 2 {
        let a = value(&format!("alpha_{k}")).ok_or_else(|| fail(k, "missing parameter".into()))?;
        let want = if c.mode == Mode::SelfDual { c.eps.mul(&a) } else { a };
        if !exact_const(&c.x(k), &want) {
            return Err(fail(k, format!("plateau x: {}", c.x(k))));
        }
        if c.mode == Mode::General {
            let bv = value(&format!("beta_{k}")).ok_or_else(|| fail(k, "missing parameter".into()))?;
            if !exact_const(&c.y(k), &bv) {
                return Err(fail(k, format!("plateau y: {}", c.y(k))));
            }
        }
    }
    rep.push(Check::new("plateau", true, "x_k = alpha_k exactly"));
    let lam = LSeries::gen(SeriesVar::Lambda);
    let near_ok = match c.mode {
        Mode::SelfDual => c.x(n - 1).sub(&LSeries::constant(SeriesVar::Lambda, c.eps.clone())).sub(&lam).is_zero(),
        Mode::General => {
            let a = value(&format!("alpha_{}", n - 1)).ok_or_else(|| fail(n - 1, "missing parameter".into()))?;
            let inv = linearize_jets(&a.inv()?);
            exact_const(&c.x(n - 1), &a) && c.y(n - 1).sub(&LSeries::constant(SeriesVar::Lambda, inv)).sub(&lam).is_zero()
        }
    };
    if !near_ok {
        return Err(fail(n - 1, format!("x = {}, y = {}", c.x(n - 1), c.y(n - 1))));
    }
    rep.push(Check::new("site n-1", true, "normalized by lambda"));
    for s in [c.x(n), c.y(n)] {
        if s.valuation() != -1 {
            return Err(fail(n, format!("valuation {}", s.valuation())));
        }
    }
    rep.push(Check::new("simple pole at n", true, "val = -1"));
    if c.mode == Mode::SelfDual && c.x(n + 1).coeff(0) != Some(c.eps.neg()) {
        return Err(fail(n + 1, format!("constant term {:?}", c.x(n + 1).coeff(0))));
    }
    for k in c.k_min..=c.k_max {
        if k != n && (c.x(k).valuation() < 0 || c.y(k).valuation() < 0) {
            return Err(fail(k, "unexpected pole".into()));
        }
    }
    rep.push(Check::new("no other poles", true, format!("{}..{}", c.k_min, c.k_max)));
    let want = if c.mode == Mode::SelfDual { 2 * nn } else { 4 * nn } as usize;
    rep.push(Check::new("free parameters", c.parameter_count() == want, format!("{} including lambda", c.parameter_count())));
    // constant-coupling recursion
    let w = c.window(nn + 1);
    let mut worst = i64::MAX;
    let mut checked = 0;
    for k in c.k_min + nn..=c.k_max - nn {
        let g = build_gamma(&c.spec, &w, k);
        for s in std::iter::once(&g.gamma).chain(g.gamma_tilde.iter()) {
            if let Some(i) = s.coeffs().iter().position(|x| !x.is_zero()) {
                return Err(ConfineError::NonzeroResidual { site: k, power: s.valuation() + i as i64, value: s.coeffs()[i].to_string() });
            }
            if s.trunc() > 0 {
                worst = worst.min(s.trunc());
                checked += 1;
            }
        }
    }
    rep.push(Check::new("recursion holds", checked > 0, format!("O(lambda^{worst}) at {checked} relations")));
    // forward iteration oracle
    let seed_lo = n - 2 * nn;
    let trunc = c.x(n - 1).trunc().min(c.x(n - 2).trunc()).max(2);
    let cut = |s: LSeries| if s.is_exact() { s.truncate(trunc) } else { s };
    let xs: Vec<LSeries> = (seed_lo..n).map(|k| cut(c.x(k))).collect();
    let ys: Option<Vec<LSeries>> = c.ys.as_ref().map(|_| (seed_lo..n).map(|k| cut(c.y(k))).collect());
    let steps = (c.k_max - n + 1).min(3);
    let (fx, fy) = crate::verify::iterate(&c.spec, seed_lo, xs, ys, steps as usize)?;
    let mut compared = 0;
    for j in 0..steps {
        let k = n + j;
        let idx = (k - seed_lo) as usize;
        let pairs: Vec<(LSeries, LSeries)> = match &fy {
            Some(fy) => vec![(fx[idx].clone(), c.x(k)), (fy[idx].clone(), c.y(k))],
            None => vec![(fx[idx].clone(), c.x(k))],
        };
        for (a, b) in pairs {
            let top = a.trunc().min(b.trunc());
            for p in a.valuation().min(b.valuation())..top {
                if a.coeff(p) != b.coeff(p) {
                    return Err(fail(k, format!("forward iteration differs at lambda^{p}")));
                }
                compared += 1;
            }
        }
    }
    rep.push(Check::new("forward iteration agrees", compared > 0, format!("{compared} coefficients")));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    #[test]
    fn self_dual_order_one_closed_form() {
        for n in [-2i64, 0, 3] {
            for u1 in [q(1, 1), q(2, 3)] {
                let spec = RecursionSpec::rational(1, &[(1, u1.clone())], true, n).unwrap();
                let plan = RestrictionPlan::new(Mode::SelfDual, 1, n, 4).through("(5)");
                let base = Params::new().with(VarId::a(n - 2), MultiRat::constant(q(1, 3)));
                let r = restrict_parameters(&spec, &plan, &base).unwrap();
                for s in [1i64, -1] {
                    let v = if s > 0 { VarId::a_plus() } else { VarId::a_minus() };
                    let want = MultiRat::constant(q(-(n + s), 1) / (q(4, 1) * &u1));
                    assert_eq!(r.params.get(v), want, "n={n} s={s}");
                }
            }
        }
    }

    #[test]
    fn merge_time_jet_shifts_powers() {
        let s = VarId::time_jet(6);
        let c = MultiRat::int(1).add(&MultiRat::var(s).scale(&q(2, 1)));
        let f = LSeries::new(SeriesVar::T, 0, vec![c.clone(), c], 4);
        let g = merge_time_jet(&f, s);
        assert_eq!(g.coeff(0), Some(MultiRat::int(1)));
        assert_eq!(g.coeff(1), Some(MultiRat::int(3)));
        assert_eq!(g.coeff(2), Some(MultiRat::int(2)));
        assert_eq!(g.coeff(3), Some(MultiRat::zero()));
    }

    fn plateau(mode: Mode, nn: i64, n: i64) -> Params {
        let mut p = Params::new().with(VarId::eps(), MultiRat::int(1));
        for (i, k) in (n - 2 * nn..=n - 2).enumerate() {
            p.set(VarId::a(k), MultiRat::constant(q(i as i64 + 2, 7)));
            if mode == Mode::General {
                p.set(VarId::b(k), MultiRat::constant(q(3, i as i64 + 5)));
            }
        }
        if mode == Mode::General {
            p.set(VarId::a(n - 1), MultiRat::constant(q(5, 3)));
        }
        p
    }

    fn restrict_and_verify(mode: Mode, nn: usize, spec: RecursionSpec, n: i64) {
        let hw = 2 * nn as i64 + 8;
        let plan = RestrictionPlan::new(mode, nn, n, hw);
        let r = restrict_parameters(&spec, &plan, &plateau(mode, nn as i64, n)).unwrap();
        let (_, rep) = verify_restriction(&spec, &r, 6).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
    }

    #[test]
    fn tangency_propagates_self_dual_one() {
        let spec = RecursionSpec::rational(1, &[(1, q(2, 3))], true, 20).unwrap();
        restrict_and_verify(Mode::SelfDual, 1, spec, 20);
    }

    #[test]
    fn tangency_propagates_general_one() {
        let spec = RecursionSpec::rational(1, &[(1, q(2, 3)), (-1, q(3, 2))], false, 20).unwrap();
        restrict_and_verify(Mode::General, 1, spec, 20);
    }

    #[test]
    fn tangency_propagates_self_dual_two() {
        let spec = RecursionSpec::rational(2, &[(1, q(2, 3)), (2, q(1, 5))], true, 20).unwrap();
        restrict_and_verify(Mode::SelfDual, 2, spec, 20);
    }

    #[test]
    fn tangency_propagates_general_two() {
        let spec = RecursionSpec::rational(2, &[(1, q(2, 3)), (-1, q(3, 2)), (2, q(1, 5)), (-2, q(-2, 7))], false, 20).unwrap();
        restrict_and_verify(Mode::General, 2, spec, 20);
    }

    #[test]
    fn pole_structure_one_and_two() {
        for (mode, nn) in [(Mode::SelfDual, 1usize), (Mode::General, 1), (Mode::SelfDual, 2), (Mode::General, 2)] {
            let spec = match (mode, nn) {
                (Mode::SelfDual, 1) => RecursionSpec::rational(1, &[(1, q(2, 3))], true, 20),
                (Mode::General, 1) => RecursionSpec::rational(1, &[(1, q(2, 3)), (-1, q(3, 2))], false, 20),
                (Mode::SelfDual, _) => RecursionSpec::rational(2, &[(1, q(2, 3)), (2, q(1, 5))], true, 20),
                _ => RecursionSpec::rational(2, &[(1, q(2, 3)), (-1, q(3, 2)), (2, q(1, 5)), (-2, q(-2, 7))], false, 20),
            }
            .unwrap();
            let mut p = Params::new();
            if mode == Mode::SelfDual {
                p.set(VarId::eps(), MultiRat::int(-1));
            }
            let b = solve_balance(mode, 20, 2 * nn as i64 + 2, 4, &p).unwrap();
            let rep = check_pole_structure(&spec, &b).unwrap();
            assert!(rep.passed(), "{mode:?} {nn}: {:?}", rep.first_failure());
        }
    }

    #[test]
    fn confined_self_dual_one() {
        let spec = RecursionSpec::rational(1, &[(1, q(2, 3))], true, 20).unwrap();
        let seeds = Seeds { plateau: vec![(q(1, 3), q(0, 1))], near: q(0, 1), eps: Some(1) };
        let c = build_confined(&spec, &seeds, 6).unwrap();
        let rep = verify_confinement(&c).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
        assert_eq!(c.parameter_count(), 2);
    }

    #[test]
    fn confined_general_one() {
        let spec = RecursionSpec::rational(1, &[(1, q(2, 3)), (-1, q(3, 2))], false, 20).unwrap();
        let seeds = Seeds { plateau: vec![(q(2, 7), q(3, 5))], near: q(5, 3), eps: None };
        let c = build_confined(&spec, &seeds, 4).unwrap();
        let rep = verify_confinement(&c).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
        assert_eq!(c.parameter_count(), 4);
    }
}
