use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore_core::basis::{spanning_monomials, SpherePolynomial, TestBasis};
use willmore_core::catalog::{self, FourEndOptions};
use willmore_core::chart::Mobius;
use willmore_core::geometry::SphereFunction;
use willmore_core::quadrature::QuadratureSpec;
use willmore_core::variation::*;
use willmore_core::weierstrass::MinimalImmersion;

fn plane() -> MinimalImmersion {
    catalog::plane(0.5).build().unwrap()
}

fn four_end() -> MinimalImmersion {
    catalog::four_end(&FourEndOptions::default())
        .unwrap()
        .input
        .build()
        .unwrap()
}

fn random_polynomial(rng: &mut ChaCha8Rng, degree: u32) -> SpherePolynomial {
    SpherePolynomial::new(
        spanning_monomials(degree)
            .into_iter()
            .map(|e| (rng.gen_range(-1.0..1.0), e))
            .collect(),
    )
}

#[test]
fn constant_field_cancels_on_plane() {
    let one = SpherePolynomial::constant(1.0);
    let a = assemble_q(&plane(), &FunctionList(vec![&one]), &DEFAULT_RADII, &QuadratureSpec::default()).unwrap();
    assert!(a.q[(0, 0)].abs() < 1e-6, "{}", a.q[(0, 0)]);
    // Both pieces blow up like 1/R^2 and cancel.
    let r = a.radii.len() - 1;
    assert!(a.interior[r][(0, 0)] > 1e3);
    assert!((a.interior[r][(0, 0)] / a.counterterm[r][(0, 0)] - 1.0).abs() < 1e-6);
}

#[test]
fn interior_part_is_positive_semidefinite() {
    let imm = four_end();
    let basis = TestBasis::new(2, &imm.end_locations()).unwrap();
    let a = assemble_q(&imm, &basis, &DEFAULT_RADII, &QuadratureSpec::default()).unwrap();
    for m in &a.interior {
        let ev = m.clone().symmetric_eigenvalues();
        let top = ev.amax();
        assert!(ev.iter().all(|&x| x >= -1e-12 * top), "{ev}");
    }
}

#[test]
fn nonnegative_on_fields_vanishing_at_ends() {
    let imm = four_end();
    let basis = TestBasis::new(3, &imm.end_locations()).unwrap();
    let a = assemble_q(&imm, &basis, &DEFAULT_RADII, &QuadratureSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let c = basis.random_vanishing(&mut rng);
        let v = basis.combination(&c);
        for e in &imm.ends {
            let s = willmore_core::chart::sphere_point(e.location);
            assert!(v.value_at(s).abs() < 1e-10);
        }
        let c = nalgebra::DVector::from_vec(c);
        let q = (c.transpose() * &a.q * &c)[(0, 0)];
        assert!(q >= -1e-8, "{q}");
    }
}

#[test]
fn invariant_under_rotation_and_inversion() {
    let imm = four_end();
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = random_polynomial(&mut rng, 2);
    for mu in [Mobius::rotation(0.7), Mobius::inversion()] {
        let d = mobius_invariance_check(&imm, &v, &mu, &DEFAULT_RADII, &quad).unwrap();
        assert!(d < 1e-6, "{d}");
    }
}

#[test]
fn zero_field_gives_zero_row() {
    let imm = four_end();
    let zero = SpherePolynomial::new(vec![]);
    let v = SpherePolynomial::new(vec![(1.0, [0, 0, 1]), (0.5, [1, 0, 0])]);
    let a = assemble_q(&imm, &FunctionList(vec![&v, &zero]), &DEFAULT_RADII, &QuadratureSpec::default()).unwrap();
    assert_eq!(a.q[(1, 1)], 0.0);
    assert_eq!(a.q[(0, 1)], 0.0);
    assert!(a.q[(0, 0)] > 0.0);
}

#[test]
fn hessian_matches_finite_differences_on_plane() {
    let imm = plane();
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let v = random_polynomial(&mut rng, 2);
        let (q, _) = q_value(&imm, &v, &DEFAULT_RADII, &quad).unwrap();
        let fd = fd_hessian_oracle(&imm, &v, &[0.02, 0.01, 0.005, 0.0025], &quad).unwrap();
        assert!((fd.value - q).abs() < 1e-3 * q.abs().max(1e-3), "{} vs {q}", fd.value);
    }
}

#[test]
fn negative_count_is_monotone_in_degree() {
    let imm = four_end();
    let quad = QuadratureSpec::default();
    let mut last = 0;
    for d in 0..=3 {
        let basis = TestBasis::new(d, &imm.end_locations()).unwrap();
        let a = assemble_q(&imm, &basis, &DEFAULT_RADII, &quad).unwrap();
        let rep = inertia(&a, &basis.gram, imm.end_count(), None).unwrap();
        assert!(rep.negative_count >= last);
        assert!(rep.verdict);
        last = rep.negative_count;
    }
}

#[test]
fn rejects_bad_radii() {
    let one = SpherePolynomial::constant(1.0);
    let quad = QuadratureSpec::default();
    for radii in [&[0.2, 0.1, 0.05][..], &[0.1, 0.2, 0.05, 0.01], &[0.2, 0.1, 0.0, -0.1]] {
        assert!(assemble_q(&plane(), &FunctionList(vec![&one]), radii, &quad).is_err());
    }
}
