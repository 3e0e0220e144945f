//! Cross-checks against references that share no code with the library.

use std::f64::consts::TAU;

use nilflow::birkhoff::{ergodic_integral, weyl_partial_sums, weyl_sum, WeylSumSpec};
use nilflow::line_model::{LineFunction, LineGrid};
use nilflow::moduli::{golden_frame, rotation_frame, sqrt2_frame};
use nilflow::spectral::{invariant_distribution, CharLabel, LadderFunction, Observable};
use nilflow::timechange::{coboundary_obstructions, coboundary_of, flow_v, v_time, TimeChange};
use nilflow::{Complex64, GroupElement, Lattice};

fn cis(cycles: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * cycles)
}

#[allow(clippy::too_many_arguments)]
/// Walks the skew-shift in plain f64, reducing mod 1 after every step.
fn skew_shift_sum(label: CharLabel, rho: f64, sigma: f64, sign: f64, k: f64, y: f64, z: f64, terms: u64) -> Complex64 {
    let (mut y, mut z) = (y, z);
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..terms {
        acc += cis((label.m as f64 * y + label.n as f64 * k * z).fract());
        z = (z + sign * y + sigma).rem_euclid(1.0 / k);
        y = (y + rho).rem_euclid(1.0);
    }
    acc
}

#[test]
fn weyl_sum_matches_orbit_walk() {
    for (frame, k) in [(golden_frame(Lattice::UNIT), 1u32), (sqrt2_frame(Lattice::new(3).unwrap()), 3)] {
        let ssp = frame.return_params().unwrap();
        for label in [CharLabel::new(0, 1).unwrap(), CharLabel::new(2, -1).unwrap(), CharLabel::new(-1, 2).unwrap()] {
            let spec = WeylSumSpec { label, ssp, y: 0.3141, z: 0.0271, terms: 5000 };
            let oracle =
                skew_shift_sum(label, ssp.rho, ssp.sigma, ssp.y_sign as f64, k as f64, spec.y, spec.z, spec.terms);
            let fast = weyl_sum(&spec);
            assert!((fast - oracle).norm() < 1e-8, "{label:?}: {fast} vs {oracle}");
        }
    }
}

#[test]
fn rotation_with_zero_angle_is_a_geometric_series() {
    // ρ = 0: phases are linear in j, S_J = (w^J − 1)/(w − 1)
    let lattice = Lattice::UNIT;
    let sigma = 0.1234567;
    let frame = rotation_frame(0.0, sigma, lattice);
    let ssp = frame.return_params().unwrap();
    let label = CharLabel::new(0, 1).unwrap();
    let (y, z, terms) = (0.271, 0.5, 100_000u64);
    let w = cis(ssp.y_sign as f64 * y + ssp.sigma);
    let closed = cis(z) * (w.powf(terms as f64) - 1.0) / (w - 1.0);
    let got = weyl_sum(&WeylSumSpec { label, ssp, y, z, terms });
    assert!((got - closed).norm() < 1e-9, "{got} vs {closed}");
}

#[test]
fn partial_sums_agree_with_prefix_sums() {
    let ssp = golden_frame(Lattice::UNIT).return_params().unwrap();
    let label = CharLabel::new(1, 1).unwrap();
    let spec = WeylSumSpec { label, ssp, y: 0.6, z: 0.2, terms: 3000 };
    for (j, s) in weyl_partial_sums(&spec, 700) {
        let oracle = skew_shift_sum(label, ssp.rho, ssp.sigma, ssp.y_sign as f64, 1.0, spec.y, spec.z, j);
        assert!((s - oracle).norm() < 1e-9, "j = {j}");
    }
}

/// Composite Simpson of `f(φ_s x)` over `[0, T]`.
fn flow_quadrature(f: &Observable, frame: &nilflow::Frame, x: GroupElement, time: f64, steps: usize) -> Complex64 {
    let h = time / steps as f64;
    let at = |s: f64| f.eval(frame, frame.nilflow(x, s)).unwrap();
    let mut acc = at(0.0) + at(time);
    for i in 1..steps {
        acc += at(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn ergodic_integral_matches_pointwise_quadrature() {
    let lattice = Lattice::UNIT;
    let frame = golden_frame(lattice);
    let f = Observable::new(
        lattice,
        vec![
            (CharLabel::new(0, 1).unwrap(), Complex64::new(1.0, 0.0)),
            (CharLabel::new(3, 1).unwrap(), Complex64::new(-0.4, 0.25)),
        ],
    );
    for (x, time) in [(GroupElement::new(0.2, 0.7, 0.4), 17.3), (GroupElement::new(0.9, 0.05, 0.66), 41.0)] {
        let fast = ergodic_integral(&f, &frame, x, time).unwrap().value;
        let slow = flow_quadrature(&f, &frame, x, time, 400_000);
        assert!((fast - slow).norm() < 1e-7, "{fast} vs {slow}");
    }
}

#[test]
fn gaussian_fourier_transform_is_closed_form() {
    // f = e^{−2u²}, f̂(ω) = ½ e^{−ω²/8}
    let grid = LineGrid::new(1 << 14, 32.0).unwrap();
    let f = LineFunction::gaussian(grid);
    let spec = f.fourier();
    let worst =
        (0..grid.len()).map(|k| (spec[k] - 0.5 * (-grid.frequency(k).powi(2) / 8.0).exp()).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
    // ‖f‖² = √(π/4)
    assert!((f.l2_norm().powi(2) - (std::f64::consts::PI / 4.0).sqrt()).abs() < 1e-12);
}

#[test]
fn coboundaries_have_no_obstruction() {
    let lattice = Lattice::new(2).unwrap();
    let ssp = golden_frame(lattice).return_params().unwrap();
    let label = CharLabel::new(1, 1).unwrap();
    let ladder = LadderFunction {
        label,
        coeffs: vec![(0, Complex64::new(1.0, 0.5)), (2, Complex64::new(-0.3, 0.0)), (-1, Complex64::new(0.0, 2.0))],
    };
    let cob = coboundary_of(lattice, &ladder, &ssp);
    for (_, d) in coboundary_obstructions(&cob, &ssp).unwrap() {
        assert!(d.norm() < 1e-12, "{d}");
    }
    // while the generator itself is obstructed
    assert!(invariant_distribution(label, &ssp, &ladder).unwrap().norm() > 1e-3);
}

#[test]
fn time_change_duality() {
    let lattice = Lattice::UNIT;
    let frame = golden_frame(lattice);
    let base = Observable::single(lattice, CharLabel::new(0, 1).unwrap());
    let tc = TimeChange::new(base, 0.25, &frame).unwrap();
    let x = GroupElement::new(0.31, 0.42, 0.53);
    for s in [0.5, 3.7, 25.0, 180.0] {
        let t = v_time(&tc, x, s).unwrap();
        let walked = nilflow::timechange::flow_v_many(&tc, x, &[t]).unwrap()[0].x_time;
        assert!((walked - s).abs() < 1e-8 * s.max(1.0), "s = {s}: {walked}");
    }
    // reduces to the nilflow when α ≡ 1
    let trivial = TimeChange::trivial(&frame).unwrap();
    let p = flow_v(&trivial, x, 12.5).unwrap();
    assert!(p.max_abs_diff(frame.nilflow(x, 12.5)) < 1e-12);
}
