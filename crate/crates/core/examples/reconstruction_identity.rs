//! With the true parameters, the filter states rebuild the plant state
//! exactly: x_t = S_t p + F^t x_0.

use adaptive_observer::filter_bank::{build_f, FilterBankState};
use adaptive_observer::lti::{ParameterVector, SystemRealization};
use nalgebra::{DMatrix, DVector};

fn main() -> adaptive_observer::Result<()> {
    let plant = SystemRealization::from_canonical(&[1.52, -0.6], DMatrix::from_column_slice(2, 1, &[0.43, -0.35]), 1)?;
    let f_vec = [1.49, -0.55];
    let f = build_f(&f_vec, 1);
    let p = ParameterVector::pack(&plant.a_vec(), &f_vec, plant.b())?.p;

    let mut bank = FilterBankState::new(f.clone(), plant.dims())?;
    let mut x = DVector::from_vec(vec![1.0, -0.5]);
    let mut free = x.clone();
    let mut worst: f64 = 0.0;
    for t in 0..2000 {
        let u = DVector::from_element(1, (0.2 * t as f64).sin());
        let (x_next, y) = plant.simulate_step(&x, &u)?;
        bank.advance(&y, &u)?;
        free = &f * free;
        let rebuilt = bank.assemble() * &p + &free;
        worst = worst.max((&x_next - &rebuilt).norm() / x_next.norm().max(1.0));
        if t % 500 == 499 {
            println!(
                "t={:4}  x={:+.6} {:+.6}  rebuilt={:+.6} {:+.6}",
                t + 1,
                x_next[0],
                x_next[1],
                rebuilt[0],
                rebuilt[1]
            );
        }
        x = x_next;
    }
    println!("max relative reconstruction error over 2000 steps: {worst:.3e}");
    Ok(())
}
