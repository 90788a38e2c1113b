//! Build the observable canonical realization of a 2x2 transfer matrix and
//! pack its parameter vector against a chosen filter polynomial.

use adaptive_observer::lti::{is_schur_stable, realize_observable_canonical, ParameterVector, TransferFunctionSpec, SCHUR_TOL};
use nalgebra::DMatrix;

fn main() -> adaptive_observer::Result<()> {
    // G(s) = (N_1 s^2 + N_2 s + N_3) / (s^3 - 0.4 s^2 - 0.11 s - 0.1)
    let tf = TransferFunctionSpec::new(
        vec![-0.4, -0.11, -0.1],
        vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.2, -5.0]),
            DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.1, 0.9]),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.2, -1.0, -1.1]),
        ],
    )?;
    let sys = realize_observable_canonical(&tf);
    let dims = sys.dims();
    println!("q={} m={} r={} n={} d={}", dims.q(), dims.m(), dims.r(), dims.n(), dims.d());
    println!("A ={}B ={}C ={}", sys.a(), sys.b(), sys.c());
    println!("Schur stable: {}", is_schur_stable(sys.a(), SCHUR_TOL)?);

    let f_vec = [0.4, 0.21, 0.2];
    let pv = ParameterVector::pack(&sys.a_vec(), &f_vec, sys.b())?;
    let p: Vec<String> = pv.p.iter().map(|v| format!("{v:.4}")).collect();
    println!("p = [{}]", p.join(", "));

    let (a_vec, b) = ParameterVector::unpack(&pv.p, &f_vec, dims)?;
    assert_eq!(a_vec.as_slice(), sys.a_vec().as_slice());
    assert_eq!(&b, sys.b());
    Ok(())
}
