use proptest::prelude::*;
use toric_spin7::diagonal::{classify_case, permutations4, DependencePattern};
use toric_spin7::flat_models::{model, verify_moment_identities, ModelKind};
use toric_spin7::forms::{d_euclidean, grade, PolyForm};
use toric_spin7::parse::parse_poly;
use toric_spin7::pde_grid::{solve_r31, GridSpec, SorOptions};
use toric_spin7::poly::{q, qr, Poly, Q};
use toric_spin7::spin7::SymMatrixField;
use toric_spin7::torsion::gl4::{random_invertible, Gl4Action};
use toric_spin7::torsion::is_divergence_free;

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::array::uniform4(0u32..3), -6i64..=6, 1i64..=3), 0..5)
        .prop_map(|ts| Poly::from_terms(ts.into_iter().map(|(e, n, d)| (e.to_vec(), qr(n, d)))))
}

fn affine() -> impl Strategy<Value = Poly> {
    prop::collection::vec(-3i64..=3, 5).prop_map(|c| {
        (0..4).fold(Poly::int(c[4]), |acc, k| &acc + &Poly::var(k).scale(&q(c[k])))
    })
}

fn point() -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec((-4i64..=4, 1i64..=3).prop_map(|(n, d)| qr(n, d)), 4)
}

/// Forms on the eight generators with polynomial coefficients.
fn form() -> impl Strategy<Value = PolyForm> {
    prop::collection::vec((any::<u8>(), poly()), 0..4).prop_map(|ts| {
        let mut f = PolyForm::zero();
        for (b, p) in ts {
            f.add_term(b, &p);
        }
        f
    })
}

fn homogeneous(f: &PolyForm, k: u32) -> PolyForm {
    f.part(k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in poly(), b in poly(), x in point()) {
        prop_assert_eq!((&a * &b).eval(&x), a.eval(&x) * b.eval(&x));
        prop_assert_eq!((&a + &b).eval(&x), a.eval(&x) + b.eval(&x));
    }

    #[test]
    fn leibniz_rule(a in poly(), b in poly(), i in 0usize..4) {
        prop_assert_eq!((&a * &b).deriv(i), &(&a.deriv(i) * &b) + &(&a * &b.deriv(i)));
        prop_assert_eq!(a.antideriv(i).deriv(i), a.clone());
    }

    #[test]
    fn display_parses_back(a in poly()) {
        prop_assert_eq!(parse_poly(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn wedge_is_associative(a in form(), b in form(), c in form()) {
        prop_assert_eq!(a.wedge(&b).wedge(&c), a.wedge(&b.wedge(&c)));
    }

    #[test]
    fn wedge_is_graded_commutative(a in form(), b in form(), k in 0u32..4, l in 0u32..4) {
        let (a, b) = (homogeneous(&a, k), homogeneous(&b, l));
        let ba = b.wedge(&a);
        let expected = if (k * l) % 2 == 0 { ba } else { -&ba };
        prop_assert_eq!(a.wedge(&b), expected);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(a in form()) {
        // d_euclidean only differentiates in ν, so restrict to forms in dν
        let mut f = PolyForm::zero();
        for (b, p) in a.terms() {
            f.add_term(b & 0x0f, p);
        }
        prop_assert!(d_euclidean(&d_euclidean(&f)).is_zero());
        for (b, _) in d_euclidean(&f).terms() {
            prop_assert!(grade(*b) >= 1);
        }
    }

    #[test]
    fn gl4_action_composes(s in 0u64..500, t in 0u64..500, e in prop::collection::vec(affine(), 10)) {
        let v = SymMatrixField::from_upper(&e);
        let (a, b) = (random_invertible(s), random_invertible(t));
        prop_assert_eq!(a.compose(&b).transform(&v), a.transform(&b.transform(&v)));
        prop_assert_eq!(Gl4Action::identity().transform(&v), v);
    }

    #[test]
    fn gl4_preserves_divergence_free(s in 0u64..500, c in prop::collection::vec(-3i64..=3, 6)) {
        // V_ij depending only on the other two coordinates is divergence-free
        let v = SymMatrixField::from_fn(|i, j| {
            if i == j {
                return Poly::one();
            }
            let k = (0..4).find(|&k| k != i && k != j).unwrap();
            Poly::var(k).scale(&q(c[i + j]))
        });
        prop_assume!(is_divergence_free(&v));
        prop_assert!(is_divergence_free(&random_invertible(s).transform(&v)));
    }

    #[test]
    fn classifier_ignores_relabeling(bits in 0u32..4096, perm in 0usize..24) {
        let perm = permutations4()[perm];
        let mut d = [[false; 4]; 4];
        let mut k = 0;
        for (i, row) in d.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                if i != j {
                    *x = bits >> k & 1 == 1;
                    k += 1;
                }
            }
        }
        let p = DependencePattern { d };
        prop_assert_eq!(classify_case(&p.permute(perm)).case, classify_case(&p).case);
    }

    #[test]
    fn flat_moment_identity(p in prop::array::uniform8(-2.0f64..2.0), s1 in any::<bool>()) {
        let m = model(if s1 { ModelKind::StabS1 } else { ModelKind::StabT2 });
        prop_assert!(verify_moment_identities(&m, &p) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sor_respects_maximum_principle(c in prop::collection::vec(-2.0f64..2.0, 4)) {
        let spec = GridSpec::cube(&[1, 2, 3], 1.0, 2.0, 7).unwrap();
        let bc = |x: &[f64; 4]| c[0] * (c[1] * x[1]).sin() + c[2] * x[2] * x[3] + c[3] * x[1].powi(2);
        let (u, _) = solve_r31(&spec, bc, &SorOptions::default()).unwrap();
        let (lo, hi) = u.boundary_range();
        prop_assert!(u.values.iter().all(|x| *x >= lo - 1e-12 && *x <= hi + 1e-12));
    }
}
