//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use gsh::adversarial::{cs_singular_rhs, homogeneous_kernel_family, hormander_pair, HORMANDER_LAMBDAS};
use gsh::diophantine::{dc_check, liouville_violation_sequence, DcStatus};
use gsh::fourier::{analyze_partial, synthesize, CTrig, DecayClass, GridSpec};
use gsh::global_solver::{apply_operator, random_field, solve, SolveOptions};
use gsh::harmonics::{wigner_matrix, EulerAngles};
use gsh::numerics::{rat, rat_int, HalfInt};
use gsh::ode_solver::{compatibility, compatibility_holds, solve_mode, Branch, Method, ModeOde};
use gsh::operator_model::{catalog, classify, detect_cs, gauge_reduce, symbol_l0, ClassifyOptions, EvolutionOperator, RealFn, Witness};
use gsh::sublevel::{connected_all_m, connectedness_family, primitive, Connectivity, FamilyVerdict};
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn wigner_unitarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut unit, mut conj) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let y = EulerAngles::new(rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..PI), rng.gen_range(-2.0 * PI..2.0 * PI));
        for l2 in 0..=10 {
            let t = wigner_matrix(HalfInt::new(l2), &y).map_err(|e| e.to_string())?;
            let d = t.len();
            for i in 0..d {
                for j in 0..d {
                    let s: Complex64 = (0..d).map(|k| t[i][k] * t[j][k].conj()).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    unit = unit.max((s - e).norm());
                    // conj t_mn = (-1)^(n-m) t_{-m,-n}
                    let sign = if (j as i64 - i as i64) % 2 == 0 { 1.0 } else { -1.0 };
                    conj = conj.max((t[i][j].conj() - t[d - 1 - i][d - 1 - j] * sign).norm());
                }
            }
        }
    }
    check(unit <= 1e-12 && conj <= 1e-12, || format!("unitarity {unit:.2e}, conjugation {conj:.2e}"))?;
    Ok(format!("max |TT*-I| {unit:.2e}, conjugation {conj:.2e}"))
}

fn fourier_round_trip() -> Outcome {
    let n_t = 16;
    let f = random_field(1, 1, n_t, 4, 4, 0.0, 2).map_err(|e| e.to_string())?;
    let spec = GridSpec::for_bound(1, 1, n_t, 4);
    let g = synthesize(&f, &spec).map_err(|e| e.to_string())?;
    let back = analyze_partial(&g, 4).map_err(|e| e.to_string())?;
    let rt = back.max_diff(&f);
    let plancherel = (g.l2_norm_sq() - f.l2_norm_sq()).abs() / f.l2_norm_sq();
    check(rt <= 1e-10 && plancherel <= 1e-9, || format!("round trip {rt:.2e}, Plancherel {plancherel:.2e}"))?;
    Ok(format!("{} modes, round trip {rt:.2e}, Plancherel {plancherel:.2e}", f.table.len()))
}

fn random_trig(rng: &mut ChaCha8Rng, bw: i64, amp: f64) -> CTrig {
    CTrig::from_coeffs((-bw..=bw).map(|k| (k, c(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))))
}

fn ode_solver() -> Outcome {
    let n = 64;
    let cst = c(0.3, 0.7);
    let ode = ModeOde::new(CTrig::constant(cst), vec![c(1.0, 0.0); n]);
    let u = solve_mode(&ode, Branch::Auto, Complex64::zero()).map_err(|e| e.to_string())?.u;
    let err_const = u.iter().map(|v| (v - 1.0 / cst).norm()).fold(0.0, f64::max);
    check(err_const <= 1e-12, || format!("constant theta error {err_const:.2e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0.0f64;
    for _ in 0..20 {
        let mut theta = random_trig(&mut rng, 3, 0.4);
        let mean = c(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..0.8) + rng.gen_range(-3i64..3) as f64);
        theta = theta.add(&CTrig::constant(mean - theta.mean()));
        let g = random_trig(&mut rng, 4, 1.0).samples(n);
        let ode = ModeOde::new(theta, g);
        let um = solve_mode(&ode, Branch::Minus, Complex64::zero()).map_err(|e| e.to_string())?.u;
        let up = solve_mode(&ode, Branch::Plus, Complex64::zero()).map_err(|e| e.to_string())?.u;
        agree = agree.max(um.iter().zip(&up).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    check(agree <= 1e-10, || format!("branch disagreement {agree:.2e}"))?;

    // theta = i: int g e^{Theta} = 2 pi for g = e^{-it}
    let theta = CTrig::constant(c(0.0, 1.0));
    let g: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
    let ode = ModeOde::with_resonance(theta, g, true);
    let comp = compatibility(&ode);
    let rejected = !compatibility_holds(&ode) && solve_mode(&ode, Branch::Auto, Complex64::zero()).is_err();
    check(rejected && (comp.norm() - 2.0 * PI).abs() < 1e-9, || format!("resonant case not rejected (compatibility {comp})"))?;
    Ok(format!("1/c error {err_const:.2e}, branch agreement {agree:.2e}, rejected |int| = {:.6}", comp.norm()))
}

fn manufactured_solve() -> Outcome {
    let op = catalog::rotating_connected();
    let u_star = random_field(1, 1, 128, 6, 3, 0.3, 4).map_err(|e| e.to_string())?;
    let g = apply_operator(&op, &u_star).map_err(|e| e.to_string())?;
    let rep = solve(&op, &g, &SolveOptions::default()).map_err(|e| e.to_string())?;
    check(rep.residual_sup <= 1e-8, || format!("residual {:.2e}", rep.residual_sup))?;
    let mut nonres = 0usize;
    let mut rec = 0.0f64;
    for (m, meth) in &rep.methods {
        if matches!(meth, Method::Minus | Method::Plus) {
            nonres += 1;
            let (a, b) = (&rep.u.table[m], &u_star.table[m]);
            rec = rec.max(a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        }
    }
    check(rec <= 1e-8, || format!("non-resonant recovery {rec:.2e}"))?;
    // every mode of this operator is resonant; recovery is also exercised where it is not vacuous
    let op2 = catalog::span_one_irrational_damping();
    let g2 = apply_operator(&op2, &u_star).map_err(|e| e.to_string())?;
    let rep2 = solve(&op2, &g2, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let rec2 = rep2.u.max_diff(&u_star);
    check(rec2 <= 1e-8 && rep2.residual_sup <= 1e-8, || format!("damped recovery {rec2:.2e}"))?;
    Ok(format!(
        "{} modes, residual {:.2e}, non-resonant {nonres} (recovery {rec:.2e}); damped companion recovery {rec2:.2e}",
        rep.methods.len(),
        rep.residual_sup
    ))
}

fn golden_table() -> Outcome {
    let opts = ClassifyOptions::default();
    let mut lines = Vec::new();
    for (name, op, gs, gh) in catalog::golden() {
        let cl = classify(&op, &opts);
        if let Some(s) = gs {
            check(cl.gs.status == s, || format!("{name}: GS {:?} expected {s:?}", cl.gs.status))?;
            lines.push(format!("{name} GS {:?}", s));
        }
        if let Some(s) = gh {
            check(cl.gh.status == s, || format!("{name}: GH {:?} expected {s:?}", cl.gh.status))?;
            lines.push(format!("{name} GH {:?}", s));
        }
        if name == "cubic_sine_sphere" {
            match &cl.gs.witness {
                Some(Witness::Sublevel(w)) if (w.m - 1.0 / 3.0).abs() < 1e-9 && w.xi == vec![0] && w.alpha == vec![HalfInt::int(1)] => {}
                other => return Err(format!("cubic_sine_sphere witness {other:?}")),
            }
        }
    }
    Ok(format!("{} verdicts match", lines.len()))
}

fn sublevel_analysis() -> Outcome {
    let op = catalog::cubic_sine_sphere();
    let f = primitive(&op, &[0], &[HalfInt::int(1)]);
    let (m, arcs) = match connected_all_m(&f).map_err(|e| e.to_string())? {
        Connectivity::Disconnected { m, arcs } => (m, arcs),
        Connectivity::Connected => return Err("connected".into()),
    };
    check((m - 1.0 / 3.0).abs() < 1e-9 && arcs.len() == 2, || format!("m = {m}, {} arcs", arcs.len()))?;
    // F = 1/3 - 3/8 cos 2t + 1/24 cos 6t: maxima 2/3 at pi/2, 3pi/2
    let (_, _, max, argmax) = gsh::fourier::trig::real_range(&f.to_ctrig());
    let exact_arg = [PI / 2.0, 3.0 * PI / 2.0];
    let arg_err = exact_arg.iter().map(|a| (a - argmax).abs()).fold(f64::INFINITY, f64::min);
    let val_err = (f.eval(PI / 2.0) - 2.0 / 3.0).abs().max((f.eval(3.0 * PI / 2.0) - 2.0 / 3.0).abs());
    check((max - 2.0 / 3.0).abs() <= 1e-9 && arg_err <= 1e-9 && val_err <= 1e-12, || format!("max {max} at {argmax}"))?;
    Ok(format!("m = 1/3, arcs {arcs:.4?}, max F = {max:.12} at t = {argmax:.9}"))
}

fn dc_exact() -> Outcome {
    let cst = |a, b| (RealFn::rational(a), RealFn::rational(b));
    let op = EvolutionOperator::with_rational_q(vec![cst(rat_int(0), rat(1, 2)), cst(rat_int(0), rat(1, 3))], vec![], (rat(1, 5), rat_int(0)));
    let r = dc_check(&op, 12);
    let eps = r.epsilon.clone().ok_or("no certified floor")?;
    check(eps >= rat(1, 30), || format!("epsilon {eps}"))?;
    let eps2 = &eps * &eps;
    let mut count = 0usize;
    for tau in -12i64..=12 {
        for x1 in -12i64..=12 {
            for x2 in -12i64..=12 {
                let s = symbol_l0(&op, tau, &[x1, x2], &[]).map_err(|e| e.to_string())?.exact.ok_or("inexact symbol")?;
                let n2 = &s.re * &s.re + &s.im * &s.im;
                if !n2.is_zero() && n2 < eps2 {
                    return Err(format!("|sigma| below floor at ({tau},{x1},{x2})"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("epsilon = {eps}, {count} lattice points swept exactly"))
}

fn liouville_violation() -> Outcome {
    let mut out = Vec::new();
    for (name, op) in [("liouville_torus", catalog::liouville_torus()), ("liouville_sphere", catalog::liouville_sphere())] {
        let seq = liouville_violation_sequence(&op, 6).map_err(|e| e.to_string())?;
        check(seq.terms.len() == 6, || format!("{name}: {} terms", seq.terms.len()))?;
        for t in &seq.terms {
            check(t.verified && t.log_sigma <= t.log_bound, || format!("{name} n={}: log|sigma| {} > {}", t.n, t.log_sigma, t.log_bound))?;
        }
        let st = dc_check(&op, 6);
        check(matches!(st.status, DcStatus::Fails { .. }), || format!("{name}: dc {}", st.status_name()))?;
        out.push(format!("{name} log|sigma_6| = {:.1}", seq.terms[5].log_sigma));
    }
    Ok(out.join(", "))
}

fn cs_certificate() -> Outcome {
    let op = catalog::sine_sphere_half();
    let w = detect_cs(&op, 16).ok_or("no CS witness")?;
    let cs = cs_singular_rhs(&op, &w, 10).map_err(|e| e.to_string())?;
    check(cs.g_decay == Some(DecayClass::RapidDecay), || format!("g decay {:?}", cs.g_decay))?;
    check(cs.lower_exponent >= -0.6, || format!("exponent {}", cs.lower_exponent))?;
    let cap = (2.0 * PI).ln() + 2.0 * PI * op.q_re.approx.abs();
    let worst = cs.terms.iter().map(|t| t.log_u_sup).fold(f64::NEG_INFINITY, f64::max);
    check(worst <= cap && cs.verified(), || format!("log sup |u| {worst} above {cap}"))?;
    Ok(format!("{} terms, exponent {:.3}, max log|u| {worst:.3} <= {cap:.3}", cs.terms.len(), cs.lower_exponent))
}

fn hormander_certificate() -> Outcome {
    let op = catalog::cubic_sine_sphere();
    let w = match connectedness_family(&op, 8).map_err(|e| e.to_string())? {
        FamilyVerdict::Disconnected(w) => w,
        other => return Err(format!("{other:?}")),
    };
    let hp = hormander_pair(&op, &w, &[1, 5, 10]).map_err(|e| e.to_string())?;
    let p0 = hp.evaluations[0].pairing;
    let drift = hp.evaluations.iter().map(|e| (e.pairing - p0).abs() / p0.abs()).fold(0.0, f64::max);
    check(drift <= 1e-9, || format!("pairing drift {drift:.2e}"))?;
    let omega = hp.omega();
    check(omega < 0.0, || format!("omega {omega}"))?;
    for l in HORMANDER_LAMBDAS {
        check(hp.evaluations.iter().all(|e| e.log_bounds.iter().any(|b| b.0 == l)), || format!("lambda {l} missing"))?;
        let n0 = hp.decreasing_from(l);
        for n in n0..n0 + 50 {
            let step = hp.log_bound(l, n + 1) - hp.log_bound(l, n);
            check(step < 0.0, || format!("lambda {l}: bound increases at n = {n}"))?;
        }
        let far = hp.log_bound(l, 100_001) - hp.log_bound(l, 100_000);
        check((far - omega).abs() < 1e-3, || format!("asymptotic slope {far} vs {omega}"))?;
    }
    Ok(format!(
        "pairing {p0:.12} (drift {drift:.1e}), omega = {omega:.6}, decreasing from n = {:?}",
        HORMANDER_LAMBDAS.map(|l| hp.decreasing_from(l))
    ))
}

fn homogeneous_kernel() -> Outcome {
    let op = catalog::pure_sphere_rotation();
    let k = homogeneous_kernel_family(&op, 16, 64).map_err(|e| e.to_string())?;
    let max_at_zero = k.u.table.values().map(|v| v[0].norm()).fold(0.0, f64::max);
    check(k.residual <= 1e-10, || format!("residual {:.2e}", k.residual))?;
    check((k.min_at_zero - 1.0).abs() <= 1e-12 && (max_at_zero - 1.0).abs() <= 1e-12, || format!("|u(0)| in [{}, {max_at_zero}]", k.min_at_zero))?;
    Ok(format!("{} modes, residual {:.2e}, |u(0)| = 1", k.u.table.len(), k.residual))
}

fn gauge_invariance() -> Outcome {
    let opts = ClassifyOptions::default();
    let mut worst = 0.0f64;
    for (name, op, _, _) in catalog::golden() {
        let (reduced, gauge) = gauge_reduce(&op);
        let (a, b) = (classify(&op, &opts), classify(&reduced, &opts));
        check(a.gs.to_json() == b.gs.to_json() && a.gh.to_json() == b.gh.to_json(), || format!("{name}: verdicts differ"))?;
        let u = random_field(op.r, op.s, 64, 3, 3, 0.2, 5).map_err(|e| e.to_string())?;
        let lhs = apply_operator(&op, &gauge.apply(&u, false)).map_err(|e| e.to_string())?;
        let rhs = gauge.apply(&apply_operator(&reduced, &u).map_err(|e| e.to_string())?, false);
        let res = lhs.max_diff(&rhs) / (1.0 + rhs.sup_norm());
        check(res <= 1e-10, || format!("{name}: conjugation residual {res:.2e}"))?;
        worst = worst.max(res);
    }
    Ok(format!("8 operators, conjugation residual {worst:.2e}"))
}

fn main() {
    let criteria: Vec<(u32, &str, Duration, fn() -> Outcome)> = vec![
        (1, "Wigner unitarity", Duration::from_secs(5), wigner_unitarity),
        (2, "Fourier round trip", Duration::from_secs(10), fourier_round_trip),
        (3, "ODE solver", Duration::from_secs(5), ode_solver),
        (4, "manufactured global solve", Duration::from_secs(30), manufactured_solve),
        (5, "golden classification table", Duration::from_secs(20), golden_table),
        (6, "sublevel analysis", Duration::from_secs(2), sublevel_analysis),
        (7, "DC exact path", Duration::from_secs(5), dc_exact),
        (8, "Liouville violation", Duration::from_secs(10), liouville_violation),
        (9, "CS counterexample certificate", Duration::from_secs(30), cs_certificate),
        (10, "Hormander violation certificate", Duration::from_secs(30), hormander_certificate),
        (11, "homogeneous kernel", Duration::from_secs(5), homogeneous_kernel),
        (12, "gauge invariance", Duration::from_secs(20), gauge_invariance),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > limit => Err(format!("took {:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs())),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({:.2}s): {detail}", took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name} ({:.2}s): {detail}", took.as_secs_f64());
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
