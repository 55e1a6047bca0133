use num_complex::Complex64 as C64;
use proptest::prelude::*;
use willmore_core::catalog::{self, FourEndOptions};
use willmore_core::rational::{ComplexPolynomial, Point, RationalFunction, POLE_TOL};
use willmore_core::weierstrass::{build_from_f, null_residual};

fn complex(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn separated(points: &[C64], gap: f64) -> bool {
    points
        .iter()
        .enumerate()
        .all(|(i, p)| points[i + 1..].iter().all(|q| (p - q).norm() > gap))
}

/// Rotation matrix from an axis-angle vector.
fn rotation(v: [f64; 3]) -> [[f64; 3]; 3] {
    let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if t < 1e-12 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let k = [v[0] / t, v[1] / t, v[2] / t];
    let (s, c) = t.sin_cos();
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let cross = match (i, j) {
                (0, 1) => -k[2],
                (0, 2) => k[1],
                (1, 0) => k[2],
                (1, 2) => -k[0],
                (2, 0) => -k[1],
                (2, 1) => k[0],
                _ => 0.0,
            };
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = c * id + s * cross + (1.0 - c) * k[i] * k[j];
        }
    }
    r
}

fn plane_f() -> [RationalFunction; 3] {
    let z = RationalFunction::z();
    [z.clone(), z.scale(C64::new(0.0, -1.0)), RationalFunction::zero()]
}

fn transformed(f: &[RationalFunction; 3], c: f64, r: [[f64; 3]; 3]) -> [RationalFunction; 3] {
    std::array::from_fn(|i| {
        (0..3).fold(RationalFunction::zero(), |acc, j| acc.add(&f[j].scale(C64::new(c * r[i][j], 0.0))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residues_of_a_form_sum_to_zero(
        poles in prop::collection::vec(complex(2.0), 1..5),
        amps in prop::collection::vec(complex(2.0), 5),
        top in prop::collection::vec(complex(1.0), 3),
    ) {
        prop_assume!(separated(&poles, 0.1));
        let mut r = RationalFunction::polynomial(ComplexPolynomial::new(top));
        for (k, p) in poles.iter().enumerate() {
            let den = ComplexPolynomial::linear(*p).pow(1 + k % 2);
            let term = RationalFunction::new(ComplexPolynomial::constant(amps[k]), den).unwrap();
            r = r.add(&term);
        }
        let s = r.residue_sum(POLE_TOL).unwrap();
        prop_assert!(s.norm() < 1e-9, "{s}");
    }

    #[test]
    fn antiderivative_differentiates_back(
        poles in prop::collection::vec(complex(2.0), 1..4),
        amps in prop::collection::vec(complex(2.0), 4),
        top in prop::collection::vec(complex(1.0), 3),
        z in complex(3.0),
    ) {
        prop_assume!(separated(&poles, 0.2));
        prop_assume!(poles.iter().all(|p| (p - z).norm() > 0.2));
        let mut r = RationalFunction::polynomial(ComplexPolynomial::new(top));
        for (k, p) in poles.iter().enumerate() {
            let den = ComplexPolynomial::linear(*p).pow(2);
            let term = RationalFunction::new(ComplexPolynomial::constant(amps[k]), den).unwrap();
            r = r.add(&term);
        }
        let f = r.antiderivative(POLE_TOL).unwrap();
        let d = f.derivative().eval(z);
        let want = r.eval(z);
        prop_assert!((d - want).norm() < 1e-8 * want.norm().max(1.0), "{d} vs {want}");
    }

    #[test]
    fn roots_are_recovered(roots in prop::collection::vec(complex(2.0), 1..7)) {
        prop_assume!(separated(&roots, 0.05));
        let p = ComplexPolynomial::from_roots(&roots);
        let found = p.roots();
        prop_assert_eq!(found.len(), roots.len());
        for r in &roots {
            let d = found.iter().map(|q| (q - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8, "{} missing (distance {})", r, d);
        }
    }

    #[test]
    fn plane_images_are_null_and_scale_residues(
        c in 0.1f64..5.0,
        axis in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let f = transformed(&plane_f(), c, rotation(axis));
        let imm = build_from_f(&f).unwrap();
        prop_assert!(imm.null_residual < 1e-10);
        let phi: [RationalFunction; 3] = std::array::from_fn(|j| f[j].derivative());
        prop_assert!(null_residual(&phi, &imm.end_locations(), 9, 200) < 1e-10);
        prop_assert_eq!(imm.end_count(), 1);
        let rn = imm.ends[0].residue_norm;
        prop_assert!((rn - 2.0 * c * c).abs() < 1e-10 * c * c, "{} vs {}", rn, 2.0 * c * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn four_end_family_is_null_with_zero_residue_sums(euler in prop::array::uniform3(0.1f64..1.2)) {
        let opts = FourEndOptions { euler, ..FourEndOptions::default() };
        let fe = catalog::four_end(&opts);
        prop_assume!(fe.is_ok());
        let fe = fe.unwrap();
        let imm = fe.input.build().unwrap();
        prop_assert_eq!(imm.end_count(), 4);
        prop_assert!(imm.null_residual < 1e-10);
        for fj in &imm.f {
            let s = fj.residue_sum(POLE_TOL).unwrap();
            prop_assert!(s.norm() < 1e-9, "{}", s);
        }
        prop_assert!(imm.ends.iter().all(|e| e.planar && e.location != Point::Infinity));
    }
}
