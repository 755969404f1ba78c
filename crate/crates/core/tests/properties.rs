use num_complex::Complex64 as C;
use proptest::prelude::*;

use toboggan::contour::{build_line, map_two_branch, state_by_arc, ContourSpec};
use toboggan::descriptor::{is_allowed, pt_image, pt_symmetrize, reduce, EnumerationMode, Letter, Word};
use toboggan::io::{read_contour_csv, write_contour_csv};

fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec(0usize..4, 0..10).prop_map(|v| Word(v.into_iter().map(|i| Letter::ALL[i]).collect()))
}

proptest! {
    #[test]
    fn reduced_words_are_allowed(w in word()) {
        let r = reduce(&w);
        prop_assert!(is_allowed(&r, EnumerationMode::FreeGroup));
        prop_assert_eq!(reduce(&w.concat(&w.inverse())), Word::empty());
    }

    #[test]
    fn symmetrized_words_are_fixed_by_pt(w in word()) {
        prop_assume!(!w.is_empty());
        let full = pt_symmetrize(&w).unwrap();
        prop_assert_eq!(pt_image(&full), full);
    }

    /// Mirror symmetry of the map: x(-z̄) = -x(z)* on the lower half plane.
    #[test]
    fn map_commutes_with_the_pt_reflection(re in -1.8f64..1.8, im in -1.5f64..-0.05, k in 0usize..3) {
        let kappa = [2.4, 3.0, 5.0][k];
        let z = C::new(re, im);
        prop_assume!((z - 1.0).norm() > 0.02 && (z + 1.0).norm() > 0.02);
        let x = map_two_branch(z, kappa, Some(&state_by_arc(z, kappa).unwrap())).unwrap().0;
        let m = -z.conj();
        let xm = map_two_branch(m, kappa, Some(&state_by_arc(m, kappa).unwrap())).unwrap().0;
        prop_assert!((xm + x.conj()).norm() < 1e-10 * (1.0 + x.norm()), "{} vs {}", x, xm);
    }

    #[test]
    fn written_contours_interpolate_back(eps in 0.0f64..1.0, a in -5.0f64..0.0, len in 0.5f64..5.0, t in 0.0f64..1.0) {
        let c = build_line(&ContourSpec::line(eps, (a, a + len), 41)).unwrap();
        let mut buf = Vec::new();
        write_contour_csv(&c, &mut buf).unwrap();
        let back = read_contour_csv(buf.as_slice()).unwrap();
        let s = a + t * len;
        let x = back.point_at(s).unwrap().x;
        prop_assert!((x - C::new(s, -eps)).norm() < 1e-10);
    }
}
