use proptest::prelude::*;
use std::f64::consts::PI;
use wlab_core::complexkit::SampledLine;
use wlab_core::diffpoly::DiffPoly;
use wlab_core::io::{read_line_dump, write_line_dump};
use wlab_core::kdvflow::{degenerate_lame, strip_pole, winding};
use wlab_core::C64;

fn monomial(orders: &[u32]) -> DiffPoly {
    orders.iter().fold(DiffPoly::u(0).mul(&DiffPoly::u(0)), |acc, &k| acc.mul(&DiffPoly::u(k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn winding_counts_exponential_turns(k in -6i32..=6, eps in 0.0f64..0.5, phase in 0.0f64..1.0) {
        let line = SampledLine::horizontal(0.0, 0.0, 64, 1.0, |z| {
            (C64::new(0.0, 2.0 * PI * k as f64) * z).exp() * (1.0 + eps * (C64::new(0.0, 2.0 * PI) * (z + phase)).cos())
        });
        prop_assert!((winding(&line.values) - k as f64).abs() < 1e-9);
    }

    #[test]
    fn strip_moments_locate_a_lattice_pole(re in -0.1f64..0.1, im in 0.0f64..1.0) {
        let p = C64::new(re, im);
        let f = |z: C64| degenerate_lame(z, p);
        let left = SampledLine::vertical(-0.25, 64, 1.0, f);
        let right = SampledLine::vertical(0.25, 64, 1.0, f);
        let (z, c2) = strip_pole(&left, &right, C64::new(0.0, 0.5), 0.0).unwrap();
        let dz = z - p;
        let wrapped = C64::new(dz.re, dz.im - dz.im.round());
        prop_assert!(wrapped.norm() < 1e-8, "{z} vs {p}");
        prop_assert!((c2 + 2.0).norm() < 1e-8);
    }

    #[test]
    fn total_derivative_obeys_leibniz(a in prop::collection::vec(0u32..4, 0..3), b in prop::collection::vec(0u32..4, 0..3)) {
        let (p, q) = (monomial(&a), monomial(&b).add(&DiffPoly::u(1)));
        let d = |x: &DiffPoly| x.total_derivative();
        prop_assert_eq!(d(&p.add(&q)), d(&p).add(&d(&q)));
        prop_assert_eq!(d(&p.mul(&q)), d(&p).mul(&q).add(&p.mul(&d(&q))));
    }

    #[test]
    fn line_dump_round_trips(vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 8..40)) {
        let n = vals.len();
        let line = SampledLine::horizontal(0.0, 0.0, n, 1.0, |_| C64::new(0.0, 0.0))
            .with_values(vals.iter().map(|&(a, b)| C64::new(a, b)).collect());
        let mut buf = Vec::new();
        write_line_dump(&line, &mut buf).unwrap();
        prop_assert_eq!(buf.len(), 8 + 8 * n);
        let back = read_line_dump(&buf).unwrap();
        for (x, y) in back.iter().zip(&line.values) {
            prop_assert_eq!((x.re as f32, x.im as f32), (y.re as f32, y.im as f32));
        }
    }
}
