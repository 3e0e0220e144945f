//! Fixed Gauss–Legendre panels and adaptive Simpson quadrature.

// nodes and weights are quoted to the published digits
#![allow(clippy::excessive_precision)]

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

const GL10: [(f64, f64); 10] = [
    (-0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_3),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_3),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
];

fn panel(rule: &[(f64, f64)], f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// 5-point Gauss–Legendre on `[a, b]`.
pub fn gauss5(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    panel(&GL5, &mut f, a, b)
}

/// 10-point Gauss–Legendre on `[a, b]`.
pub fn gauss10(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    panel(&GL10, &mut f, a, b)
}

/// Composite 10-point Gauss–Legendre over `panels` equal panels.
pub fn gauss10_composite(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = crate::sum::NeumaierSum::new();
    for k in 0..panels {
        let lo = a + k as f64 * h;
        acc.add(panel(&GL10, &mut f, lo, lo + h));
    }
    acc.value()
}

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_are_exact_on_polynomials() {
        let p = |x: f64| 3.0 * x.powi(11) - x.powi(4) + 2.0;
        let exact = 3.0 / 12.0 - 1.0 / 5.0 + 2.0;
        assert!((gauss5(p, 0.0, 1.0) - exact).abs() > 1e-6);
        assert!((gauss10(p, 0.0, 1.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn simpson_integrates_smooth_function() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn composite_gauss_handles_oscillation() {
        let v = gauss10_composite(|x| (20.0 * x).cos(), 0.0, 1.0, 20);
        assert!((v - 20f64.sin() / 20.0).abs() < 1e-14);
    }
}
