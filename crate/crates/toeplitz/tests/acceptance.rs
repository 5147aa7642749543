//! Acceptance criteria 1-12, one line each.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};
use toeplitz::confine::{
    build_confined, check_pole_structure, restrict_parameters, verify_confinement, verify_restriction, ConfinedSolution,
    RestrictionPlan, Seeds,
};
use toeplitz::exact::{linalg, q, MultiRat, Rational, VarId};
use toeplitz::flow::{
    block_in_r, omega, sigma_balance, sigma_omega_expected, sigma_params, sigma_rat, solve_balance, Mode, Params,
};
use toeplitz::gamma::{gamma_by_definition, sigma_poly, two_path_check, verify_gamma_structure, RecursionSpec};
use toeplitz::lax::{verify_appendix_structure, StructureReport};
use toeplitz::series::{implicit_reparam, LSeries, SeriesVar};
use toeplitz::verify::numeric_shadow;

type Outcome = Result<String, String>;

fn ensure(ok: bool, what: impl std::fmt::Display) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn passed(rep: &StructureReport, what: &str) -> Result<usize, String> {
    match rep.first_failure() {
        Some(c) => Err(format!("{what}: {} ({})", c.name, c.detail)),
        None => Ok(rep.checks.len()),
    }
}

fn c(n: i64, d: i64) -> MultiRat {
    MultiRat::constant(q(n, d))
}

fn v(x: VarId) -> MultiRat {
    MultiRat::var(x)
}

const GAMMA_CASES: [(usize, bool); 5] = [(1, false), (2, false), (1, true), (2, true), (3, true)];

fn sd_spec(n: i64) -> RecursionSpec {
    RecursionSpec::rational(1, &[(1, q(2, 3))], true, n).unwrap()
}

fn spec(mode: Mode, nn: usize, n: i64) -> RecursionSpec {
    let u: Vec<(i64, Rational)> = match (mode, nn) {
        (Mode::SelfDual, 1) => vec![(1, q(2, 3))],
        (Mode::General, 1) => vec![(1, q(2, 3)), (-1, q(3, 2))],
        (Mode::SelfDual, _) => vec![(1, q(2, 3)), (2, q(1, 5))],
        _ => vec![(1, q(2, 3)), (-1, q(3, 2)), (2, q(1, 5)), (-2, q(-2, 7))],
    };
    RecursionSpec::rational(nn, &u, mode == Mode::SelfDual, n).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for (nn, sd) in GAMMA_CASES {
        let rep = two_path_check(nn, sd, 3..8).map_err(|e| e.to_string())?;
        total += passed(&rep, &format!("N={nn} self_dual={sd}"))?;
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(60), format!("took {el:?}"))?;
    Ok(format!("{total} site checks agree in {:.1}s", el.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let mut count = 0;
    for n in [-2i64, 0, 3] {
        for u1 in [q(1, 1), q(2, 3)] {
            let spec = RecursionSpec::rational(1, &[(1, u1.clone())], true, n).unwrap();
            let plan = RestrictionPlan::new(Mode::SelfDual, 1, n, 4).through("(5)");
            let base = Params::new().with(VarId::a(n - 2), c(1, 3));
            let r = restrict_parameters(&spec, &plan, &base).map_err(|e| format!("n={n}: {e}"))?;
            for (s, var) in [(1i64, VarId::a_plus()), (-1, VarId::a_minus())] {
                let want = MultiRat::constant(q(-(n + s), 1) / (q(4, 1) * &u1));
                let got = r.params.get(var);
                ensure(got == want, format!("n={n} u1={u1}: {var} = {got}, expected {want}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("a_+- = -(n+-1)/(4u1) in {count} cases"))
}

fn criterion_3() -> Outcome {
    let n = 0;
    let b = solve_balance(Mode::SelfDual, n, 7, 3, &Params::new()).map_err(|e| e.to_string())?;
    let e = v(VarId::eps());
    let (ap, am) = (v(VarId::a_plus()), v(VarId::a_minus()));
    let xp = b.x(1);
    ensure(xp.coeff(1) == Some(e.mul(&ap).scale(&q(4, 1))), "x_{n+1} at t")?;
    let want = e.mul(&ap).scale(&q(4, 1)).mul(&v(VarId::a(2)).scale(&q(2, 1)).sub(&am.add(&ap)));
    ensure(xp.coeff(2) == Some(want), "x_{n+1} at t^2")?;
    ensure(b.x(0).coeff(0) == Some(e.scale(&q(-1, 2)).mul(&ap.sub(&am))), "x_n at t^0")?;
    let dd = ap.sub(&am);
    let t2 = dd
        .mul(&dd)
        .add(&ap.mul(&v(VarId::a(2))).sub(&am.mul(&v(VarId::a(-2)))).add(&c(1, 1)).sub(&ap.mul(&am).scale(&q(2, 1))).scale(&q(4, 1)))
        .scale(&q(1, 3));
    ensure(b.x(0).coeff(1) == Some(e.scale(&q(-1, 2)).mul(&t2)), "x_n at t^1")?;
    let a = |k: i64| match k - n {
        0 => MultiRat::zero(),
        1 => c(-1, 1),
        -1 => c(1, 1),
        _ => v(VarId::a(k)),
    };
    let ch = |k: i64| MultiRat::one().sub(&a(k).mul(&a(k)));
    for k in [-5i64, -4, -3, -2, 2, 3, 4, 5] {
        let kappa = match k - n {
            2 => ap.scale(&q(-4, 1)),
            -2 => am.scale(&q(4, 1)),
            _ => MultiRat::zero(),
        };
        let d = a(k + 1).sub(&a(k - 1));
        let inner = a(k - 2)
            .mul(&ch(k - 1))
            .add(&a(k + 2).mul(&ch(k + 1)))
            .sub(&a(k).mul(&d.mul(&d).add(&c(2, 1)).sub(&a(k - 1).mul(&a(k + 1)).scale(&q(2, 1)))))
            .add(&kappa);
        ensure(b.x(k).coeff(1) == Some(e.mul(&ch(k)).mul(&d)), format!("x_{k} at t"))?;
        ensure(b.x(k).coeff(2) == Some(e.mul(&ch(k)).mul(&inner).scale(&q(1, 2))), format!("x_{k} at t^2"))?;
    }
    Ok("pole neighbours and far sites through t^2, kappa_{n+-2} = -+4a_+-".into())
}

fn criterion_4() -> Outcome {
    let b = solve_balance(Mode::General, 0, 6, 5, &Params::new()).map_err(|e| e.to_string())?;
    let (am1, ap1) = (v(VarId::a(-1)), v(VarId::a(1)));
    let (ap, am, a) = (v(VarId::a_plus()), v(VarId::a_minus()), v(VarId::a_near()));
    let d = am1.sub(&ap1);
    ensure(b.x(0).coeff(-1) == Some(ap1.mul(&am1).div(&d).unwrap()), "x_n at t^-1")?;
    ensure(b.y(0).coeff(-1) == Some(d.neg().inv().unwrap()), "y_n at t^-1")?;
    let y1 = a.add(&ap1.mul(&ap).sub(&am1.mul(&am)).div(&ap1.sub(&am1)).unwrap());
    ensure(b.y(0).coeff(0) == Some(y1.div(&d).unwrap()), "y_n at t^0")?;
    ensure(b.x(1).coeff(1) == Some(ap1.mul(&ap)), "x_{n+1} at t")?;
    ensure(b.y(-1).coeff(1) == Some(am.div(&ap1).unwrap().neg()), "y_{n-1} at t")?;
    let rr = v(VarId::r());
    for site in [-1i64, 0, 1] {
        let m = block_in_r(&b, site).ok_or(format!("block at n{site:+} not affine in r"))?;
        let want = rr.mul(&rr.add(&MultiRat::int(if site == 0 { 2 } else { 1 })));
        let det = linalg::det(&m);
        ensure(det == want, format!("det at n{site:+} = {det}"))?;
    }
    Ok("low orders and block determinants r(r+1), r(r+2), r(r+1)".into())
}

fn criterion_5() -> Outcome {
    let mut total = 0;
    for (mode, nn) in [(Mode::SelfDual, 1usize), (Mode::General, 1), (Mode::SelfDual, 2), (Mode::General, 2)] {
        let mut p = Params::new();
        if mode == Mode::SelfDual {
            p.set(VarId::eps(), MultiRat::int(1));
        }
        let b = solve_balance(mode, 20, 2 * nn as i64 + 2, 4, &p).map_err(|e| e.to_string())?;
        let rep = check_pole_structure(&spec(mode, nn, 20), &b).map_err(|e| e.to_string())?;
        total += passed(&rep, &format!("{mode:?} N={nn}"))?;
    }
    Ok(format!("{total} pole-coefficient checks"))
}

fn plateau(mode: Mode, nn: i64, n: i64) -> Params {
    let mut p = Params::new().with(VarId::eps(), MultiRat::int(1));
    for (i, k) in (n - 2 * nn..=n - 2).enumerate() {
        p.set(VarId::a(k), c(i as i64 + 2, 7));
        if mode == Mode::General {
            p.set(VarId::b(k), c(3, i as i64 + 5));
        }
    }
    if mode == Mode::General {
        p.set(VarId::a(n - 1), c(5, 3));
    }
    p
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let n = 20;
    let mut total = 0;
    let mut precision = Vec::new();
    for (mode, nn) in [(Mode::SelfDual, 1usize), (Mode::General, 1), (Mode::SelfDual, 2), (Mode::General, 2)] {
        let s = spec(mode, nn, n);
        let plan = RestrictionPlan::new(mode, nn, n, 2 * nn as i64 + 8);
        let what = format!("{mode:?} N={nn}");
        let r = restrict_parameters(&s, &plan, &plateau(mode, nn as i64, n)).map_err(|e| format!("{what}: {e}"))?;
        let (_, rep) = verify_restriction(&s, &r, 6).map_err(|e| format!("{what}: {e}"))?;
        total += passed(&rep, &what)?;
        let last = rep.checks.last().map(|k| k.detail.rsplit(": ").next().unwrap_or("").to_string()).unwrap_or_default();
        precision.push(last);
    }
    let el = start.elapsed();
    ensure(el < Duration::from_secs(600), format!("took {el:?}"))?;
    Ok(format!("{total} checks, Gamma and Gamma~ vanish up to {} from a balance to t^6, in {:.1}s", precision.join("/"), el.as_secs_f64()))
}

struct Confined {
    sd: ConfinedSolution,
    general: ConfinedSolution,
    sd_report: StructureReport,
    general_report: StructureReport,
}

fn confined() -> Result<Confined, String> {
    let sd = build_confined(&sd_spec(20), &Seeds { plateau: vec![(q(1, 3), q(0, 1))], near: q(0, 1), eps: Some(1) }, 6)
        .map_err(|e| format!("self-dual: {e}"))?;
    let gen_spec = spec(Mode::General, 1, 20);
    let general = build_confined(&gen_spec, &Seeds { plateau: vec![(q(2, 7), q(3, 5))], near: q(5, 3), eps: None }, 4)
        .map_err(|e| format!("general: {e}"))?;
    let sd_report = verify_confinement(&sd).map_err(|e| e.to_string())?;
    let general_report = verify_confinement(&general).map_err(|e| e.to_string())?;
    Ok(Confined { sd, general, sd_report, general_report })
}

fn criterion_7(c: &Confined) -> Outcome {
    let a = passed(&c.sd_report, "self-dual")?;
    let b = passed(&c.general_report, "general")?;
    ensure(c.sd.parameter_count() == 2, format!("self-dual count {}", c.sd.parameter_count()))?;
    ensure(c.general.parameter_count() == 4, format!("general count {}", c.general.parameter_count()))?;
    Ok(format!("{} checks; parameters 2 (self-dual) and 4 (general)", a + b))
}

fn criterion_8(c: &Confined) -> Outcome {
    let mut details = Vec::new();
    for (rep, what) in [(&c.sd_report, "self-dual"), (&c.general_report, "general")] {
        let chk = rep.checks.iter().find(|k| k.name == "forward iteration agrees").ok_or(format!("{what}: not run"))?;
        ensure(chk.passed, format!("{what}: {}", chk.detail))?;
        details.push(format!("{what} {}", chk.detail));
    }
    Ok(details.join(", "))
}

fn criterion_9() -> Outcome {
    // x(t; a) = a + f1(a) t + f2(a) t^2 with generic quadratic f1, f2
    let a = VarId::a(0);
    let alpha = VarId::alpha(0);
    let coef = |name: &str| v(VarId::named(name));
    let quad = |p: &str, x: &MultiRat| coef(&format!("{p}0")).add(&coef(&format!("{p}1")).mul(x)).add(&coef(&format!("{p}2")).mul(x).mul(x));
    let (va, val) = (v(a), v(alpha));
    let fam = LSeries::new(SeriesVar::T, 0, vec![va.clone(), quad("c", &va), quad("d", &va)], 3);
    let sol = implicit_reparam(&[fam], &[(a, alpha)]).map_err(|e| e.to_string())?;
    let g = &sol[&a];
    let f1 = quad("c", &val);
    let f1p = coef("c1").add(&coef("c2").mul(&val).scale(&q(2, 1)));
    ensure(g.coeff(0) == Some(val.clone()), "constant term")?;
    ensure(g.coeff(1) == Some(f1.neg()), format!("g1 = {:?}", g.coeff(1)))?;
    let want = f1.mul(&f1p).sub(&quad("d", &val));
    ensure(g.coeff(2) == Some(want), format!("g2 = {:?}", g.coeff(2)))?;
    Ok("g1 = -f1, g2 = f1 f1' - f2".into())
}

fn criterion_10() -> Outcome {
    let mut total = 0;
    for s in 2..=4 {
        let rep = verify_appendix_structure(s).map_err(|e| e.to_string())?;
        total += passed(&rep, &format!("s={s}"))?;
    }
    for (nn, sd) in GAMMA_CASES {
        let rep = verify_gamma_structure(nn, sd).map_err(|e| e.to_string())?;
        total += passed(&rep, &format!("Gamma N={nn} self_dual={sd}"))?;
    }
    Ok(format!("{total} structure checks"))
}

fn criterion_11() -> Outcome {
    for nn in [1usize, 2] {
        let (g, gt) = gamma_by_definition(nn, false, 0).map_err(|e| e.to_string())?;
        ensure(sigma_poly(&g) == gt, format!("sigma(Gamma) != Gamma~ for N={nn}"))?;
        ensure(sigma_poly(&gt) == g, format!("sigma(Gamma~) != Gamma for N={nn}"))?;
    }
    let m: HashMap<VarId, MultiRat> = sigma_params(0).map_err(|e| e.to_string())?;
    for (k, val) in &m {
        let back = sigma_rat(0, val).map_err(|e| e.to_string())?;
        ensure(back == v(*k), format!("sigma^2 != id on {k}"))?;
    }
    let b = solve_balance(Mode::General, 0, 5, 3, &Params::new()).map_err(|e| e.to_string())?;
    let s = sigma_balance(&b).map_err(|e| e.to_string())?;
    for k in b.k_min..=b.k_max {
        ensure(s.x(k) == b.x(k) && s.y(k) == b.y(k), format!("sigma moves the balance at {k}"))?;
    }
    ensure(sigma_rat(0, &omega(0)).map_err(|e| e.to_string())? == sigma_omega_expected(0), "sigma(Omega)")?;
    Ok("sigma(Gamma) = Gamma~, sigma^2 = id, balance and Omega".into())
}

fn criterion_12(c: &Confined) -> Outcome {
    let rep = numeric_shadow(&c.sd, &q(1, 1000), 6)?;
    passed(&rep, "numeric shadow")?;
    let spike = rep.checks.iter().find(|k| k.name.starts_with("pole spike")).map(|k| k.detail.clone()).unwrap_or_default();
    Ok(format!("lambda = 1/1000, |x_n| = {spike}, Q(lambda) trace matches the rational iteration"))
}

fn run(id: u32, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match out {
        Ok(d) => {
            println!("criterion {id}: PASS - {d} [{secs:.1}s]");
            true
        }
        Err(d) => {
            println!("criterion {id}: FAIL - {d} [{secs:.1}s]");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run(1, criterion_1);
    ok &= run(2, criterion_2);
    ok &= run(3, criterion_3);
    ok &= run(4, criterion_4);
    ok &= run(5, criterion_5);
    ok &= run(6, criterion_6);
    let conf = catch_unwind(confined).unwrap_or_else(|_| Err("panic while building".into()));
    match &conf {
        Ok(c) => {
            ok &= run(7, || criterion_7(c));
            ok &= run(8, || criterion_8(c));
        }
        Err(e) => {
            for id in [7, 8] {
                ok &= run(id, || Err(format!("confined build failed: {e}")));
            }
        }
    }
    ok &= run(9, criterion_9);
    ok &= run(10, criterion_10);
    ok &= run(11, criterion_11);
    match &conf {
        Ok(c) => ok &= run(12, || criterion_12(c)),
        Err(e) => ok &= run(12, || Err(format!("confined build failed: {e}"))),
    }
    if !ok {
        std::process::exit(1);
    }
}
