//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits nonzero on failure.

use std::f64::consts::TAU;

use mixmeas::asymptotics::{
    comparison_check, log_grid, min_energy, rate_sweep_first, rate_sweep_second, tail_rate, Verdict,
};
use mixmeas::densities::normalization_constant;
use mixmeas::mixed::{gaussian_second, mixed_first, mixed_second, sign_change_threshold, steiner_check};
use mixmeas::oracles::{body_tail_mass, cross_check, inradius_bruteforce, test_matrix, StepSchedule};
use mixmeas::{inradius, Angle, Error, MeasureSpec, SupportBody2D, Vec2};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn disk(r: f64) -> SupportBody2D {
    SupportBody2D::disk(r).unwrap()
}

fn ellipse(a: f64, b: f64) -> SupportBody2D {
    SupportBody2D::ellipse(a, b).unwrap()
}

fn square() -> SupportBody2D {
    SupportBody2D::square(1.0).unwrap()
}

fn fourier_bodies() -> Vec<SupportBody2D> {
    [
        (1.0, vec![0.3], vec![]),
        (1.5, vec![0.0, 0.1], vec![0.0, 0.05]),
        (2.0, vec![0.2, 0.1, 0.05], vec![]),
        (1.2, vec![-0.1, 0.08], vec![0.1, 0.0, 0.0, 0.01]),
        (1.0, vec![0.0, 0.0, 0.04], vec![0.05, 0.03]),
    ]
    .into_iter()
    .map(|(a0, c, s)| SupportBody2D::fourier(a0, c, s).unwrap())
    .collect()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

/// Ball identity for the second-order measure and its zero crossing.
fn ball_identity() -> Outcome {
    let d = disk(1.0);
    let g = MeasureSpec::gaussian_unnormalized();
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let v = mixed_second(&d, &d, &d, &g, t).map_err(e)?.value.to_f64();
        let exact = TAU * (-0.5 * t * t).exp() * (1.0 - t * t);
        // at t = 1 the exact value is 0; measure against the size of the terms
        let scale = if exact == 0.0 { TAU * (-0.5 * t * t).exp() } else { exact.abs() };
        worst = worst.max((v - exact).abs() / scale);
    }
    let t0 = sign_change_threshold(&d, &d, &d, &g, 0.5, 2.0, 1e-12).map_err(e)?;
    check(
        worst <= 1e-8 && (t0 - 1.0).abs() <= 1e-8,
        format!("max rel err {worst:.2e}, zero crossing at {t0:.12}"),
    )
}

/// Gaussian representation equals the general one under the Gaussian spec.
fn gaussian_reduction() -> Outcome {
    let a = ellipse(2.0, 1.0);
    let g = MeasureSpec::gaussian();
    let mut worst: f64 = 0.0;
    for bc in [disk(1.0), ellipse(1.5, 0.7)] {
        for t in [1.0, 2.0, 3.0] {
            let x = gaussian_second(&a, &bc, &bc, t).map_err(e)?.value;
            let y = mixed_second(&a, &bc, &bc, &g, t).map_err(e)?.value;
            worst = worst.max(x.relative_difference(y));
        }
    }
    check(worst <= 1e-10, format!("max rel diff {worst:.2e}"))
}

/// Closed forms against finite differences of the measure itself.
fn definition_oracles() -> Outcome {
    let schedule = StepSchedule::default();
    let (mut first, mut second): (f64, f64) = (0.0, 0.0);
    for case in test_matrix() {
        let cc = cross_check(&case, &schedule).map_err(|err| format!("{}: {err}", case.name))?;
        first = first.max(cc.first_rel);
        second = second.max(cc.second_rel);
    }
    check(
        first <= 1e-4 && second <= 1e-3,
        format!("6 configurations, max first rel {first:.2e}, max second rel {second:.2e}"),
    )
}

/// First-order rate toward −1.
fn first_order_rate() -> Outcome {
    let g = MeasureSpec::gaussian_unnormalized();
    let grid = [2.5, 5.0, 7.5, 10.0, 12.0, 14.0];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, k) in [("disk", disk(1.0)), ("ellipse", ellipse(2.0, 1.0)), ("square", square())] {
        let s = rate_sweep_first(&k, &disk(1.0), &g, &grid).map_err(e)?;
        let r5 = s.ratio_near(5.0).ok_or("undefined ratio at 5")?;
        let r14 = s.ratio_near(14.0).ok_or("undefined ratio at 14")?;
        ok &= (r14 + 1.0).abs() <= 0.1 && (r14 + 1.0).abs() < (r5 + 1.0).abs();
        notes.push(format!("{name} {r5:.4}→{r14:.4}"));
        if name == "disk" {
            let worst = grid
                .iter()
                .zip(&s.ratios)
                .map(|(&t, r)| (r.unwrap() - (-1.0 + (TAU * t).ln() / (0.5 * t * t))).abs())
                .fold(0.0, f64::max);
            ok &= worst <= 1e-8;
            notes.push(format!("closed-form err {worst:.1e}"));
        }
    }
    check(ok, notes.join(", "))
}

/// Second-order rate toward −1.
fn second_order_rate() -> Outcome {
    let g = MeasureSpec::gaussian_unnormalized();
    let d = disk(1.0);
    let s = rate_sweep_second(&ellipse(2.0, 1.0), &d, &d, &g, &[6.0, 9.0, 12.0]).map_err(e)?;
    let r12 = s.last_ratio().ok_or("undefined ratio at 12")?;
    let s = rate_sweep_second(&d, &d, &d, &g, &[10.0]).map_err(e)?;
    let r10 = s.last_ratio().ok_or("undefined ratio at 10")?;
    let exact = ((TAU * 99.0).ln() - 50.0) / 50.0;
    check(
        (r12 + 1.0).abs() <= 0.12 && (r10 - exact).abs() <= 1e-6,
        format!("ellipse ratio(12) = {r12:.4}, disks ratio(10) = {r10:.8} (closed form {exact:.8})"),
    )
}

/// Minimal energy `min |x_A|²` is the squared Euclidean inradius.
fn gaussian_rate_function() -> Outcome {
    let m = min_energy(&ellipse(2.0, 1.0)).map_err(e)?.min_value;
    let mut worst: f64 = 0.0;
    for a in fourier_bodies() {
        let energy = min_energy(&a).map_err(e)?.min_value;
        let r = inradius(&a, &disk(1.0)).map_err(e)?.r;
        worst = worst.max((energy - r * r).abs());
    }
    check(
        (m - 1.0).abs() <= 1e-8 && worst <= 1e-7,
        format!("ellipse min energy {m:.12}, max |E − r²| over 5 bodies {worst:.1e}"),
    )
}

/// Tail rate for a probability measure.
fn tail_rate_check() -> Outcome {
    let g = MeasureSpec::gaussian();
    let s = tail_rate(&disk(1.0), &g, &log_grid(2.0, 14.0, 16).unwrap()).map_err(e)?;
    let worst = s.ratios.iter().map(|r| (r.unwrap() + 1.0).abs()).fold(0.0, f64::max);
    let sq = tail_rate(&square(), &g, &[12.0]).map_err(e)?.last_ratio().ok_or("undefined")?;
    check(
        worst <= 1e-6 && (sq + 1.0).abs() <= 0.1,
        format!("disk max |ratio + 1| {worst:.1e}, square ratio(12) = {sq:.4}"),
    )
}

/// Comparison harness verdicts.
fn comparison_harness() -> Outcome {
    let g = MeasureSpec::gaussian_unnormalized();
    let d = disk(1.0);
    let grid = log_grid(5.0, 15.0, 16).unwrap();
    let big = SupportBody2D::square(2.0).unwrap();
    let hold = comparison_check(&big, &d, 1.0, &d, &g, &grid).map_err(e)?;
    let viol = comparison_check(&big, &d, 3.0, &d, &g, &grid).map_err(e)?;
    let mut ok = hold.holds_on_grid
        && hold.verdict == Verdict::Consistent
        && hold.inradius_check.inclusion_holds
        && viol.verdict == Verdict::Violated
        && viol.first_violation_t.is_some_and(|t| t <= 6.0);
    let mut contradictions = 0;
    for k in [square(), big.clone(), ellipse(2.0, 1.0), disk(1.5), fourier_bodies()[3].clone()] {
        for r in [0.5, 1.0, 1.5, 3.0] {
            match comparison_check(&k, &d, r, &d, &g, &grid) {
                Ok(rep) => {
                    let bad = match rep.verdict {
                        Verdict::Consistent => !rep.inradius_check.inclusion_holds,
                        Verdict::Violated | Verdict::Inconclusive { .. } => rep.inradius_check.inclusion_holds,
                        Verdict::NotImplied => false,
                    };
                    contradictions += bad as usize;
                }
                Err(Error::InvariantViolation(_)) => contradictions += 1,
                Err(err) => return Err(e(err)),
            }
        }
    }
    ok &= contradictions == 0;
    check(
        ok,
        format!(
            "R=1 {:?}, R=3 {:?} first violation at t = {:?}, {contradictions} contradictions in 20 configurations",
            hold.verdict, viol.verdict, viol.first_violation_t
        ),
    )
}

/// Inradius, gauge and Steiner checks.
fn geometry_suite() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let pairs = [
        (ellipse(2.0, 1.0), disk(1.0), 1.0),
        (square(), SupportBody2D::diamond(1.0).unwrap(), 1.0),
        (disk(3.0), ellipse(2.0, 1.0), 1.5),
    ];
    let mut worst: f64 = 0.0;
    for (k, l, exact) in &pairs {
        let r = inradius(k, l).map_err(e)?.r;
        let brute = inradius_bruteforce(k, l, 1 << 20).map_err(e)?;
        worst = worst.max((r - exact).abs()).max((r - brute).abs());
    }
    ok &= worst <= 1e-7;
    notes.push(format!("inradius err {worst:.1e}"));

    let mut bodies = vec![disk(1.0), ellipse(2.0, 1.0), square(), SupportBody2D::diamond(1.0).unwrap()];
    bodies.extend(fourier_bodies());
    let n = 4096;
    let dirs: Vec<Angle> = (0..n).map(|i| Angle::new(TAU * i as f64 / n as f64)).collect();
    let (mut duality, mut homog, mut euler, mut boundary): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for k in &bodies {
        for j in 0..64 {
            let x = Angle::new(0.1 + TAU * j as f64 / 64.0).unit() * (0.3 + j as f64 / 32.0);
            let g = k.gauge(x);
            let scan = dirs.iter().map(|&u| x.dot(u.unit()) / k.support(u)).fold(f64::MIN, f64::max);
            // the scan can only undershoot the supremum
            duality = duality.max(if scan > g * (1.0 + 1e-12) { f64::INFINITY } else { (g - scan) / g });
            for lambda in [0.5, 2.0, 10.0] {
                homog = homog.max((k.gauge(x * lambda) - lambda * g).abs() / (lambda * g));
            }
            if k.is_c2plus() {
                let grad = k.gauge_gradient(x).map_err(e)?;
                euler = euler.max((grad.dot(x) - g).abs());
            }
        }
        if k.is_c2plus() {
            for i in 0..1024 {
                let p = k.boundary_point(Angle::new(TAU * i as f64 / 1024.0)).map_err(e)?;
                boundary = boundary.max((k.gauge(p.x) - 1.0).abs());
            }
        }
    }
    ok &= duality <= 1e-5 && homog <= 1e-15 && euler <= 1e-9 && boundary <= 1e-9;
    notes.push(format!(
        "duality {duality:.1e}, homogeneity {homog:.1e}, Euler {euler:.1e}, boundary {boundary:.1e}"
    ));

    let g = MeasureSpec::gaussian_unnormalized();
    let e2 = ellipse(2.0, 1.0);
    let base = mixed_first(&e2, &disk(1.0), &g, 2.0).map_err(e)?.value;
    let mut hom: f64 = 0.0;
    for lambda in [0.5, 3.0] {
        let v = mixed_first(&e2, &disk(lambda), &g, 2.0).map_err(e)?.value;
        hom = hom.max(v.relative_difference(base.scale(lambda)));
    }
    ok &= hom <= 1e-12;
    notes.push(format!("second-argument homogeneity {hom:.1e}"));

    let s1 = steiner_check(&disk(1.0), &disk(1.0), &[1.0]).map_err(e)?;
    let s2 = steiner_check(&square(), &disk(1.0), &[0.5]).map_err(e)?;
    ok &= s1 < 1e-8 && s2 < 1e-7;
    notes.push(format!("Steiner {s1:.1e}, {s2:.1e}"));
    check(ok, notes.join(", "))
}

/// Normalization constant and tail probabilities.
fn normalization() -> Outcome {
    let z = normalization_constant(&MeasureSpec::gaussian_unnormalized()).map_err(e)?;
    let g = MeasureSpec::gaussian();
    let mut ok = (z / TAU - 1.0).abs() <= 1e-8;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let verts = vec![Vec2::new(2.0, 0.0), Vec2::new(-1.0, 1.5), Vec2::new(-1.0, -1.5)];
    let triangle = SupportBody2D::polygon(verts).unwrap();
    for k in [disk(1.0), ellipse(2.0, 1.0), square(), triangle, fourier_bodies()[1].clone()] {
        for t in [0.05, 0.5, 1.0, 2.0, 5.0] {
            let p = body_tail_mass(&k, &g, t).map_err(e)?.to_f64();
            ok &= p > 0.0 && p < 1.0;
            range = (range.0.min(p), range.1.max(p));
        }
    }
    check(
        ok,
        format!("Z/2π − 1 = {:.1e}, tails in [{:.2e}, {:.6}]", z / TAU - 1.0, range.0, range.1),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ball identity for the second-order measure", ball_identity),
        ("Gaussian reduction", gaussian_reduction),
        ("definition-oracle equivalence", definition_oracles),
        ("first-order rate", first_order_rate),
        ("second-order rate", second_order_rate),
        ("Gaussian rate function", gaussian_rate_function),
        ("tail rate", tail_rate_check),
        ("comparison harness", comparison_harness),
        ("geometry suite", geometry_suite),
        ("normalization", normalization),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
