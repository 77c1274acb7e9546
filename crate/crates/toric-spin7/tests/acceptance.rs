// Acceptance suite, one PASS/FAIL line per criterion.  Runs without the
// libtest harness so the lines are always shown.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use toric_spin7::diagonal::{diag_curvature_forms, example_family, reduced_residuals, reducible_example, FAMILY_NAMES};
use toric_spin7::flat_models::{model, singular_graph, verify_moment_identities, EdgeKind, ModelKind, NuBox};
use toric_spin7::forms::PolyForm;
use toric_spin7::linalg::rank;
use toric_spin7::pde_grid::{solve_r31, GridSpec, SorOptions};
use toric_spin7::poly::{nu, q, Poly, Q};
use toric_spin7::riemann::{holonomy_report, MetricChart};
use toric_spin7::spin7::SymMatrixField;
use toric_spin7::torsion::gl4::{random_invertible, residual_field, scaling_weight};
use toric_spin7::torsion::oracle::{
    correspondence_matrix, derive_correspondence, formula_deviations, random_field, random_point, solve_z_at, FieldKind,
};
use toric_spin7::torsion::potential::{potential_construct, Grid4, PotentialOptions, SampledV};
use toric_spin7::torsion::{curvature_matrices, divergence_residual, is_divergence_free, oracle_domega, oracle_dphi};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let elapsed = t.elapsed();
    if elapsed > budget {
        o.pass = false;
        o.detail.push_str(&format!("; over budget {:.1?}", budget));
    }
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id:2} {name} ({:.2?}): {}", elapsed, o.detail);
    o
}

fn families() -> Outcome {
    let mut bad = Vec::new();
    for name in FAMILY_NAMES {
        let f = example_family(name).unwrap();
        let v = f.to_matrix();
        let ok = divergence_residual(&v).iter().all(Poly::is_zero)
            && reduced_residuals(&f).is_zero()
            && oracle_dphi(&v, &curvature_matrices(&v)).unwrap().is_zero()
            && oracle_domega(&v).iter().all(PolyForm::is_zero);
        if !ok {
            bad.push(name);
        }
    }
    outcome(bad.is_empty(), format!("{} families exact, failing {:?}", FAMILY_NAMES.len(), bad))
}

fn two(i: usize, j: usize, c: Poly) -> PolyForm {
    PolyForm::gens(&[i, j]).mul_poly(&c)
}

fn sum(forms: Vec<PolyForm>) -> PolyForm {
    forms.into_iter().fold(PolyForm::zero(), |a, b| &a + &b)
}

fn displays() -> Outcome {
    let lc = [
        two(2, 3, -nu(2)),
        two(3, 0, nu(3)),
        two(0, 1, -nu(0)),
        two(1, 2, nu(1)),
    ];
    let tp = [
        sum(vec![
            two(1, 2, -(&nu(1).pow(2) * &nu(2))),
            two(3, 1, -(&nu(3).pow(2) * &nu(1))),
            two(2, 3, -(&nu(2).pow(2) * &nu(3))),
        ]),
        two(0, 3, -nu(3)),
        two(0, 1, -nu(1)),
        two(0, 2, -nu(2)),
    ];
    let mut ok = true;
    for (name, expected) in [("linear-cycle", &lc), ("triple-product", &tp)] {
        let f = example_family(name).unwrap();
        ok &= curvature_matrices(&f.to_matrix()).omega() == *expected;
        ok &= diag_curvature_forms(&f) == *expected;
    }
    outcome(ok, "curvature forms of linear-cycle and triple-product as displayed")
}

fn oracle_equivalence() -> Outcome {
    let kinds = [FieldKind::Affine, FieldKind::UnitTriangular, FieldKind::SparseDiagonal, FieldKind::Termwise, FieldKind::CurlCurl];
    let mut fields = Vec::new();
    for (k, kind) in kinds.into_iter().enumerate() {
        for s in 0..6u64 {
            fields.push(random_field(kind, 1000 * k as u64 + s));
        }
    }
    let (mut div_free, mut deviations, mut unexpected) = (0, 0, 0);
    for (i, v) in fields.iter().enumerate() {
        let points: Vec<Vec<Q>> = (0..2).map(|s| random_point(7 * i as u64 + s)).collect();
        if is_divergence_free(v) {
            div_free += 1;
            match formula_deviations(v, &points) {
                Ok(d) => deviations += d.len(),
                Err(_) => unexpected += 1,
            }
        } else if points.iter().all(|p| solve_z_at(v, p).is_ok()) {
            unexpected += 1;
        }
    }
    let solutions: Vec<SymMatrixField> = fields.iter().filter(|v| is_divergence_free(v)).cloned().collect();
    let derived = derive_correspondence(&solutions);
    let corr_ok = matches!(&derived, Ok(m) if *m == correspondence_matrix()) && rank(&correspondence_matrix()) == 10;
    let pass = div_free > 0 && deviations == 0 && unexpected == 0 && corr_ok;
    outcome(
        pass,
        format!(
            "{} fields, {div_free} divergence-free, {deviations} deviations, {unexpected} oracle failures, correspondence {}",
            fields.len(),
            if corr_ok { "matches" } else { "differs" }
        ),
    )
}

const POINTS: [[f64; 4]; 3] = [[1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 1.5, 2.5], [1.5, 2.5, 1.2, 3.1]];

fn holonomy() -> Outcome {
    let f = example_family("linear-cycle").unwrap();
    let chart = MetricChart::new(&f.to_matrix()).unwrap();
    let r = holonomy_report("linear-cycle", &chart, &POINTS, 0.02).unwrap();
    let pass = r.ricci_rel_norm < 1e-6 && r.membership_max_defect < 1e-6 && r.span_dim == 21 && r.min_gap >= 1e3;
    outcome(
        pass,
        format!(
            "ricci {:.1e}, membership {:.1e}, span {}, gap {:.1e}",
            r.ricci_rel_norm, r.membership_max_defect, r.span_dim, r.min_gap
        ),
    )
}

fn flat_identities() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for kind in [ModelKind::StabT2, ModelKind::StabS1] {
        let m = model(kind);
        exact &= m.moment_identities_hold()
            && m.brackets_vanish()
            && m.phi_is_closed()
            && m.phi_is_invariant()
            && m.nu_is_invariant()
            && m.orbits_are_isotropic();
        for _ in 0..100 {
            let p: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
            worst = worst.max(verify_moment_identities(&m, &p));
        }
    }
    outcome(exact && worst < 1e-10, format!("exact identities {exact}, max moment defect {worst:.1e}"))
}

fn graphs() -> Outcome {
    let bx: NuBox = [(-1.0, 1.0); 4];
    let t2 = singular_graph(&model(ModelKind::StabT2), &bx);
    let s1 = singular_graph(&model(ModelKind::StabS1), &bx);
    let t2_ok = t2.edges.len() == 3 && t2.directions_primitive() && t2.direction_sum() == [0; 4];
    let s1_ok = s1.edges.len() == 1 && s1.edges[0].kind == EdgeKind::Line && s1.edges[0].dir == [0, 0, 0, 1];
    let dirs: Vec<[i64; 4]> = t2.edges.iter().map(|e| e.dir).collect();
    outcome(t2_ok && s1_ok, format!("stab-T2 directions {dirs:?}, stab-S1 line {s1_ok}"))
}

struct PdeNumbers {
    cubic: [f64; 2],
    trilinear: f64,
    quartic: [f64; 2],
}

fn r31_error(n: usize, exact: &Poly) -> f64 {
    let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, n).unwrap();
    let (u, _) = solve_r31(&spec, |p| exact.eval_f64(p), &SorOptions::default()).unwrap();
    u.interior_max_error(|p| exact.eval_f64(p))
}

fn pde(numbers: &mut Option<PdeNumbers>) -> Outcome {
    let cubic = toric_spin7::diagonal::cubic_v0();
    let trilinear = &(&nu(1) * &nu(2)) * &nu(3);
    let quartic = &nu(1).pow(4) - &(&(&nu(1) * &nu(2)) * &nu(3).pow(2)).scale(&q(6));
    let n = PdeNumbers {
        cubic: [r31_error(17, &cubic), r31_error(33, &cubic)],
        trilinear: r31_error(33, &trilinear),
        quartic: [r31_error(17, &quartic), r31_error(33, &quartic)],
    };
    let ratio = n.cubic[0] / n.cubic[1];
    let pass = (3.5..=4.5).contains(&ratio) && n.trilinear <= 1e-9;
    let detail = format!(
        "cubic errors {:.2e} -> {:.2e} ratio {:.2}, trilinear {:.1e}, quartic ratio {:.2}",
        n.cubic[0],
        n.cubic[1],
        ratio,
        n.trilinear,
        n.quartic[0] / n.quartic[1]
    );
    *numbers = Some(n);
    outcome(pass, detail)
}

fn potential() -> Outcome {
    let f = example_family("linear-cycle").unwrap();
    let grid = Grid4::cube(1.0, 2.0, 17).unwrap();
    let sampled = SampledV::from_field(&f.to_matrix(), grid);
    let pf = potential_construct(&sampled, PotentialOptions::default()).unwrap();
    let (rt, sym) = (pf.roundtrip_error(&sampled), pf.symmetry_defect());
    outcome(rt < 1e-10 && sym < 1e-10, format!("round-trip {rt:.1e}, symmetry {sym:.1e}"))
}

fn naturality() -> Outcome {
    let mut preserved = 0;
    let mut total = 0;
    for name in FAMILY_NAMES {
        let v = example_family(name).unwrap().to_matrix();
        for seed in 0..10 {
            let w = random_invertible(seed).transform(&v);
            total += 1;
            if residual_field(&w).upper().iter().all(Poly::is_zero) && is_divergence_free(&w) {
                preserved += 1;
            }
        }
    }
    let bad = [
        SymMatrixField::diag([nu(1).pow(2), Poly::one(), Poly::one(), Poly::one()]),
        SymMatrixField::diag([&Poly::one() + &nu(0).pow(2), Poly::one(), Poly::int(2), Poly::one()]),
        random_field(FieldKind::Affine, 3),
        random_field(FieldKind::UnitTriangular, 4),
        random_field(FieldKind::SparseDiagonal, 5),
        random_field(FieldKind::CurlCurl, 6),
    ];
    let mut weights = Vec::new();
    for v in &bad {
        for t in [q(2), q(3)] {
            weights.push(scaling_weight(v, &t));
        }
    }
    let consistent = weights[0].is_some() && weights.iter().all(|w| *w == weights[0]);
    outcome(
        preserved == total && consistent,
        format!("{preserved}/{total} transformed solutions exact, residual weights {weights:?}"),
    )
}

fn reducible() -> Outcome {
    let f = reducible_example();
    let chart = MetricChart::new(&f.to_matrix()).unwrap();
    let r = holonomy_report("reducible", &chart, &POINTS, 0.02).unwrap();
    outcome(r.span_dim <= 15, format!("span {}", r.span_dim))
}

fn main() {
    let s = Duration::from_secs;
    let mut pde_numbers = None;
    let results = [
        run(1, "exact family verification", s(10), families),
        run(2, "curvature displays", s(10), displays),
        run(3, "oracle equivalence", s(60), oracle_equivalence),
        run(4, "holonomy certification", s(60), holonomy),
        run(5, "flat-model identities", s(10), flat_identities),
        run(6, "trivalent graph", s(1), graphs),
        run(7, "PDE convergence", s(120), || pde(&mut pde_numbers)),
        run(8, "potential round-trip", s(60), potential),
        run(9, "naturality", s(120), naturality),
        run(10, "degeneration bound", s(60), reducible),
    ];
    for (i, r) in results.iter().enumerate() {
        if i != 6 {
            assert!(r.pass, "criterion {} failed: {}", i + 1, r.detail);
        }
    }
    // The cubic is reproduced by the stencil, so both errors sit at the
    // solver tolerance and their ratio carries no order information.
    // The quartic shows the second-order rate instead.
    let n = pde_numbers.expect("criterion 7 ran");
    assert!(!results[6].pass);
    assert!(n.cubic.iter().all(|e| *e <= 1e-9), "cubic errors {:?}", n.cubic);
    assert!(n.trilinear <= 1e-9);
    let rq = n.quartic[0] / n.quartic[1];
    assert!((3.5..=4.5).contains(&rq), "quartic ratio {rq}");
}
