use nilflow::analysis::{ks_distance, Ecdf};
use nilflow::birkhoff::{cocycle_residual, weyl_sum, z_equivariance_check, WeylSumSpec};
use nilflow::heis::{exp_lie, reduce};
use nilflow::moduli::{golden_frame, reduce_fundamental, renorm, ModularPoint};
use nilflow::phase::Phase;
use nilflow::spectral::{CharLabel, Observable};
use nilflow::{par, GroupElement, Lattice};
use proptest::prelude::*;

fn element() -> impl Strategy<Value = GroupElement> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y, z)| GroupElement::new(x, y, z))
}

fn close(a: GroupElement, b: GroupElement, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol * (1.0 + a.x.abs().max(a.y.abs()).max(a.z.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_law_is_associative(a in element(), b in element(), c in element()) {
        prop_assert!(close((a * b) * c, a * (b * c), 1e-12));
    }

    #[test]
    fn inverse_cancels(a in element()) {
        prop_assert!(close(a * a.inverse(), GroupElement::IDENTITY, 1e-12));
    }

    #[test]
    fn one_parameter_subgroups(p in -3.0..3.0f64, q in -3.0..3.0f64, r in -3.0..3.0f64, s in -5.0..5.0f64, t in -5.0..5.0f64) {
        prop_assert!(close(exp_lie(p, q, r, s) * exp_lie(p, q, r, t), exp_lie(p, q, r, s + t), 1e-12));
    }

    #[test]
    fn reduction_is_idempotent_and_in_domain(g in element(), k in 1u32..5) {
        let lattice = Lattice::new(k).unwrap();
        let once = reduce(g, lattice);
        prop_assert!((0.0..1.0).contains(&once.x) && (0.0..1.0).contains(&once.y));
        prop_assert!(once.z >= 0.0 && once.z < lattice.center_period());
        prop_assert_eq!(reduce(once, lattice), once);
    }

    #[test]
    fn phase_addition_is_exact_mod_one(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let s = (Phase::from_cycles(a) + Phase::from_cycles(b)).cycles();
        let d = (s - (a + b).rem_euclid(1.0)).abs();
        prop_assert!(d.min(1.0 - d) < 1e-14);
    }

    #[test]
    fn serial_and_parallel_sums_agree_bitwise(y in 0.0..1.0f64, z in 0.0..1.0f64, m in -4i64..4, terms in 1u64..300_000) {
        let ssp = golden_frame(Lattice::UNIT).return_params().unwrap();
        let spec = WeylSumSpec { label: CharLabel::new(m, 1).unwrap(), ssp, y, z, terms };
        let one = par::with_threads(1, || weyl_sum(&spec));
        let many = par::with_threads(4, || weyl_sum(&spec));
        prop_assert_eq!(one.re.to_bits(), many.re.to_bits());
        prop_assert_eq!(one.im.to_bits(), many.im.to_bits());
    }

    #[test]
    fn weyl_sums_are_bounded_by_length(y in 0.0..1.0f64, z in 0.0..1.0f64, terms in 0u64..5000) {
        let ssp = golden_frame(Lattice::UNIT).return_params().unwrap();
        let s = weyl_sum(&WeylSumSpec { label: CharLabel::new(0, 1).unwrap(), ssp, y, z, terms });
        prop_assert!(s.norm() <= terms as f64 + 1e-9);
    }

    #[test]
    fn cocycle_and_equivariance(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64, t1 in 0.0..300.0f64, t2 in 0.0..300.0f64, tz in -3.0..3.0f64) {
        let lattice = Lattice::UNIT;
        let a = golden_frame(lattice);
        let f = Observable::single(lattice, CharLabel::new(1, 1).unwrap());
        let p = GroupElement::new(x, y, z);
        prop_assert!(cocycle_residual(&f, &a, p, t1, t2).unwrap() < 1e-10);
        prop_assert!(z_equivariance_check(&f, &a, p, t1, tz).unwrap() < 1e-10);
    }

    #[test]
    fn renormalization_is_a_flow(s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let a = golden_frame(Lattice::UNIT);
        let two = renorm(&renorm(&a, s), t);
        let one = renorm(&a, s + t);
        for (u, v) in [(two.a, one.a), (two.b, one.b), (two.c, one.c), (two.d, one.d)] {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn fundamental_domain_reduction_is_idempotent(re in -20.0..20.0f64, im in 0.01..5.0f64) {
        let z = reduce_fundamental(ModularPoint::new(re, im).unwrap());
        prop_assert!(z.in_fundamental_domain(1e-9));
        let again = reduce_fundamental(z);
        prop_assert!((again.re - z.re).abs() < 1e-9 && (again.im - z.im).abs() < 1e-9);
    }

    #[test]
    fn ks_distance_is_a_metric(a in prop::collection::vec(-5.0..5.0f64, 100..300), b in prop::collection::vec(-5.0..5.0f64, 100..300)) {
        let ea = Ecdf::new(a, 0).unwrap();
        let eb = Ecdf::new(b, 0).unwrap();
        let d = ks_distance(&ea, &eb);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_distance(&eb, &ea));
        prop_assert_eq!(ks_distance(&ea, &ea), 0.0);
    }

    #[test]
    fn quantiles_are_monotone(v in prop::collection::vec(-5.0..5.0f64, 100..300), q1 in 0.0..1.0f64, q2 in 0.0..1.0f64) {
        let e = Ecdf::new(v, 0).unwrap();
        let (lo, hi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(e.quantile(lo) <= e.quantile(hi));
    }
}
