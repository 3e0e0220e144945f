use nilflow::birkhoff::{weyl_sum, WeylSumSpec};
use nilflow::moduli::golden_frame;
use nilflow::spectral::CharLabel;
use nilflow::Lattice;
fn main() {
    let spec = WeylSumSpec {
        label: CharLabel::new(1, 1).unwrap(),
        ssp: golden_frame(Lattice::UNIT).return_params().unwrap(),
        y: 0.1,
        z: 0.2,
        terms: 100_000_000,
    };
    let t = std::time::Instant::now();
    let s = weyl_sum(&spec);
    let dt = t.elapsed().as_secs_f64();
    println!("{s} {:.3e} terms/s", spec.terms as f64 / dt);
}
