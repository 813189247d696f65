//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use saddlepoint::generate::{box_instance, entropy_instance, rng_from_seed, tilted_instance, transport_instance};
use saddlepoint::measures::push_moments;
use saddlepoint::oracles::entropy_oracle_grid;
use saddlepoint::{
    box_sign_violations, dual_objective_at, kkt_report, norm_identity_check, norm_lambda, ot_oracle_vertices,
    pgauge_sandwich, slackness_check, solve_box, solve_equality, solve_ot, young_residual, Constraint, ConvexGaugeSpec,
    DiscreteMeasure, FamilyTag, FeatureMap, IntegrandFamily, MomentProblem, MomentVector, SolveOptions, Theta,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn built_in() -> Vec<IntegrandFamily<f64>> {
    FamilyTag::BUILT_IN
        .iter()
        .map(|&t| IntegrandFamily::from_tag(t).unwrap())
        .collect()
}

fn dual_equality() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let (mut converged, mut worst) = (0, 0.0f64);
    let mut bad = Vec::new();
    for i in 0..100 {
        let n = rng.gen_range(2..=50);
        let k = rng.gen_range(1..=5usize).min(n);
        let p = entropy_instance(&mut rng, n, k).unwrap();
        let s = solve_equality(&p, &SolveOptions::default()).unwrap();
        if !s.dual.converged {
            continue;
        }
        converged += 1;
        let d = s.dual.dual_value;
        let err = (s.primal.value - d).abs() / (1.0 + d.abs());
        worst = worst.max(err);
        if err > 1e-8 {
            bad.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && converged == 100 && secs < 10.0,
        format!("{converged}/100 converged, worst relative gap {worst:.2e}, {secs:.2}s, failing {bad:?}"),
    )
}

fn bernoulli(target: [f64; 2]) -> MomentProblem<f64> {
    MomentProblem::equality(
        DiscreteMeasure::from_weights(vec![0.5, 0.5]).unwrap(),
        IntegrandFamily::relative_entropy(),
        FeatureMap::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
        target.to_vec(),
    )
    .unwrap()
}

fn closed_form() -> Outcome {
    let s = solve_equality(&bernoulli([1.0, 0.75]), &SolveOptions::default()).unwrap();
    let value = s.primal.value;
    let expected = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    let y = &s.dual.y;
    let pass = (value - expected).abs() <= 1e-8
        && (value - 0.130812).abs() <= 1e-6
        && (y[0] - 0.5f64.ln()).abs() <= 1e-8
        && (y[1] - 3.0f64.ln()).abs() <= 1e-8;
    outcome(pass, format!("value {value:.9}, y = ({:.9}, {:.9})", y[0], y[1]))
}

fn grid_oracle() -> Outcome {
    let h = 1e-3;
    let mut rng = rng_from_seed(3);
    let mut failures = Vec::new();
    let mut worst_bound = 0.0f64;
    for i in 0..20 {
        let n = rng.gen_range(2..=3);
        let k = rng.gen_range(1..=2usize);
        let (p, _) = tilted_instance(&mut rng, n, k).unwrap();
        let s = solve_equality(&p, &SolveOptions::default()).unwrap();
        let rep = entropy_oracle_grid(&p, h, 4.0 * h).unwrap();
        let Some(oracle) = rep.value else {
            failures.push(format!("#{i} no grid point"));
            continue;
        };
        worst_bound = worst_bound.max(rep.bound);
        let v = s.primal.value;
        if !(s.dual.converged && v >= oracle - 1e-9 && v <= oracle + rep.bound) {
            failures.push(format!("#{i} solver {v:.6} oracle {oracle:.6} L·h {:.2e}", rep.bound));
        }
    }
    outcome(
        failures.is_empty(),
        format!("20 instances, largest L·h {worst_bound:.2e} {failures:?}"),
    )
}

fn kantorovich() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..200 {
        let mut rng = rng_from_seed(seed);
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=4);
        let p = transport_instance(&mut rng, m, n).unwrap();
        let s = solve_ot(&p).unwrap();
        let oracle = ot_oracle_vertices(&p).unwrap().cost;
        let cost = p.cost_of(&s.plan);
        let gap = s.certificate.gap;
        let slack = slackness_check(&p, &s.plan, &s.potentials, 1e-9);
        worst = (worst.0.max((cost - oracle).abs()), worst.1.max(gap));
        if (cost - oracle).abs() > 1e-9 || !(0.0..=1e-9).contains(&gap) || !slack.is_empty() {
            failures.push(seed);
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "200 seeds, worst |cost − oracle| {:.1e}, worst gap {:.1e}, failing seeds {failures:?}",
            worst.0, worst.1
        ),
    )
}

fn representation() -> Outcome {
    let mut rng = rng_from_seed(5);
    let (mut worst, mut weakest_perturbation) = (0.0f64, f64::INFINITY);
    for _ in 0..30 {
        let n = rng.gen_range(2..=20);
        let k = rng.gen_range(1..=4usize).min(n);
        let p = entropy_instance(&mut rng, n, k).unwrap();
        let s = solve_equality(&p, &SolveOptions::default()).unwrap();
        if !s.dual.converged {
            return outcome(false, "a solve did not converge".into());
        }
        worst = worst.max(s.certificate.kkt.representation_residual);
        for z in 0..n {
            let mut w = s.primal.q.weights().to_vec();
            w[z] += 0.01;
            let q = p.reference().with_weights(w).unwrap();
            let r = kkt_report(&p, &q, &s.dual.y).unwrap().representation_residual;
            weakest_perturbation = weakest_perturbation.min(r);
        }
    }
    outcome(
        worst <= 1e-8 && weakest_perturbation > 5e-3,
        format!("worst residual {worst:.1e}, smallest perturbed residual {weakest_perturbation:.4}"),
    )
}

fn young() -> Outcome {
    let mut rng = rng_from_seed(6);
    let (mut worst, mut worst_zero) = (0.0f64, 0.0f64);
    for _ in 0..30 {
        let n = rng.gen_range(2..=30);
        let k = rng.gen_range(1..=4usize).min(n);
        let p = entropy_instance(&mut rng, n, k).unwrap();
        let s = solve_equality(&p, &SolveOptions::default()).unwrap();
        worst = worst.max(s.certificate.young_residual);
        let at_zero = young_residual(&p, &s.primal.q, &vec![0.0; k]).unwrap();
        worst_zero = worst_zero.max((at_zero - s.primal.value).abs() / (1e-12 + s.primal.value.abs()));
    }
    outcome(
        worst <= 1e-10 && worst_zero <= 1e-9,
        format!("worst residual {worst:.1e}, worst relative mismatch at y = 0 {worst_zero:.1e}"),
    )
}

fn random_theta(rng: &mut impl Rng, fam: &IntegrandFamily<f64>, d: usize) -> Theta<f64> {
    let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..2.0)).collect();
    match rng.gen_range(0..3) {
        0 => Theta::Lambda {
            family: fam.clone(),
            weights,
        },
        1 => Theta::LambdaMax {
            family: fam.clone(),
            weights,
        },
        _ => Theta::SymmetricPhi {
            family: fam.clone(),
            weights,
        },
    }
}

fn sandwich() -> Outcome {
    let mut rng = rng_from_seed(7);
    let families = built_in();
    let mut failures = 0;
    let mut cases = 0;
    for (d, count) in [(1usize, 200usize), (2, 50)] {
        for i in 0..count {
            let fam = &families[i % families.len()];
            let spec = ConvexGaugeSpec::new(random_theta(&mut rng, fam, d));
            let r: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = pgauge_sandwich(&spec, &r).unwrap();
            cases += 1;
            if !s.ok {
                failures += 1;
            }
        }
    }
    let square = ConvexGaugeSpec::new(Theta::Power {
        exponent: 2.0f64,
        weights: vec![1.0],
    });
    let q = pgauge_sandwich(&square, &[2.0]).unwrap();
    let closed = (q.lower - 0.5).abs() < 1e-9 && (q.mid - 2.0).abs() < 1e-9 && (q.upper - 2.0).abs() < 1e-9;
    outcome(
        failures == 0 && closed,
        format!(
            "{}/{cases} cases hold, quadratic at r = 2 gives ({:.6}, {:.6}, {:.6})",
            cases - failures,
            q.lower,
            q.mid,
            q.upper
        ),
    )
}

fn norm_identity() -> Outcome {
    let mut rng = rng_from_seed(8);
    let families = built_in();
    let (mut disagree, mut axioms) = (0, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let fam = &families[i % families.len()];
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=3usize).min(n);
        let p = entropy_instance(&mut rng, n, k).unwrap();
        let (r, t) = (p.reference(), p.features());
        let y: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c: f64 = rng.gen_range(-3.0..3.0);
        let check = norm_identity_check(r, fam, t, &y).unwrap();
        worst = worst.max((check.lambda - check.phi).abs());
        if !check.agree {
            disagree += 1;
        }
        let ny = check.lambda;
        let nv = norm_lambda(r, fam, t, &v).unwrap();
        let sum: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + b).collect();
        let nsum = norm_lambda(r, fam, t, &sum).unwrap();
        let scaled: Vec<f64> = y.iter().map(|a| c * a).collect();
        let nscaled = norm_lambda(r, fam, t, &scaled).unwrap();
        let ok = ny > 0.0
            && nsum <= ny + nv + 1e-8
            && (nscaled - c.abs() * ny).abs() <= 1e-8 * (1.0 + nscaled)
            && norm_lambda(r, fam, t, &vec![0.0; k]).unwrap() == 0.0;
        if !ok {
            axioms += 1;
        }
    }
    outcome(
        disagree == 0 && axioms == 0,
        format!("100 vectors, worst |Λ − Φ| {worst:.1e}, {disagree} disagreements, {axioms} axiom violations"),
    )
}

fn box_kkt() -> Outcome {
    let mut rng = rng_from_seed(9);
    let opts = SolveOptions::default();
    let mut failures = Vec::new();
    let mut active = 0;
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = rng.gen_range(3..=20);
        let k = rng.gen_range(1..=4usize).min(n);
        let p = box_instance(&mut rng, n, k).unwrap();
        let s = solve_box(&p, &opts).unwrap();
        let Constraint::Box { lower, upper } = p.constraint() else {
            unreachable!()
        };
        let signs = box_sign_violations(lower, upper, &s.target, &s.dual.y, 1e-8);
        let support = s.certificate.kkt.support_condition_residual;
        worst = worst.max(support);
        active += s.bounds.iter().filter(|b| **b != saddlepoint::BoundState::Free).count();
        if !s.dual.converged || !signs.is_empty() || support > 1e-8 || !s.certificate.passes() {
            failures.push(format!(
                "#{i} {:?} signs {signs:?} support {support:.1e}",
                s.dual.status
            ));
        }
        // a point box must give the equality solve exactly
        let centre = push_moments(p.features(), &p.recover_primal(&s.dual.y).unwrap().q)
            .unwrap()
            .into_inner();
        let point = p
            .with_constraint(Constraint::Box {
                lower: centre.clone(),
                upper: centre.clone(),
            })
            .unwrap();
        let eq = p
            .with_constraint(Constraint::Equality(MomentVector::new(centre).unwrap()))
            .unwrap();
        let a = solve_box(&point, &opts).unwrap();
        let b = solve_equality(&eq, &opts).unwrap();
        if a.dual != b.dual || a.primal != b.primal || a.certificate != b.certificate {
            failures.push(format!("#{i} point box differs from equality solve"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("50 boxes, {active} active bounds, worst support residual {worst:.1e} {failures:?}"),
    )
}

fn derivatives() -> Outcome {
    let mut rng = rng_from_seed(10);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for fam in built_in() {
        let mut done = 0;
        while done < 50 {
            let n = rng.gen_range(2..=8);
            let k = rng.gen_range(1..=3usize).min(n);
            let base = entropy_instance(&mut rng, n, k).unwrap();
            let p = MomentProblem::new(
                base.reference().clone(),
                fam.clone(),
                base.features().clone(),
                base.constraint().clone(),
            )
            .unwrap();
            let target = p.target().unwrap().to_vec();
            let y: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let e = dual_objective_at(&p, &target, &y).unwrap();
            if !e.feasible {
                continue;
            }
            done += 1;
            for i in 0..k {
                let step = 1e-5 * (1.0 + y[i].abs());
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[i] += step;
                minus[i] -= step;
                let ep = dual_objective_at(&p, &target, &plus).unwrap();
                let em = dual_objective_at(&p, &target, &minus).unwrap();
                let fd = (ep.value - em.value) / (2.0 * step);
                worst_g = worst_g.max((fd - e.gradient[i]).abs() / (1.0 + e.gradient[i].abs()));
                for j in 0..k {
                    let fd = (ep.gradient[j] - em.gradient[j]) / (2.0 * step);
                    let h = e.hessian[j * k + i];
                    worst_h = worst_h.max((fd - h).abs() / (1.0 + h.abs()));
                }
            }
        }
    }
    outcome(
        worst_g <= 1e-6 && worst_h <= 1e-5,
        format!("4 families × 50 points, worst gradient error {worst_g:.1e}, worst Hessian error {worst_h:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("dual equality", dual_equality),
        ("closed-form Bernoulli tilt", closed_form),
        ("grid oracle equivalence", grid_oracle),
        ("Kantorovich duality", kantorovich),
        ("representation formula", representation),
        ("Young identity", young),
        ("gauge sandwich", sandwich),
        ("norm identity", norm_identity),
        ("box KKT", box_kkt),
        ("gradient and Hessian", derivatives),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        all &= o.pass;
        println!(
            "criterion {:>2} {} {name}: {} ({:.2}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
