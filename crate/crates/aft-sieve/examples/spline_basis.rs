//! Build a clamped cubic B-spline basis, verify partition of unity, and
//! interpolate a linear function through its Greville abscissae.

use std::sync::Arc;

use aft_sieve::{KnotPlacement, KnotVector, SplineBasis, SplineFunction};
use nalgebra::DVector;

fn main() -> aft_sieve::Result<()> {
    let knots = KnotVector::build((0.0, 1.0), 3, 4, &KnotPlacement::EqualSpaced)?;
    let basis = SplineBasis::new(knots);
    println!(
        "cubic basis on [{}, {}]: q = {} functions, breakpoints {:?}",
        basis.a(),
        basis.b(),
        basis.q(),
        basis.breakpoints()
    );

    // Partition of unity: the basis values sum to 1 everywhere in [a, b].
    for &t in &[0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
        let vals = basis.eval(t)?;
        println!("t = {t:4}: sum of basis = {:.15}", vals.sum());
    }

    // A linear function lies in every spline space of order >= 2; setting
    // gamma_j to the Greville abscissae reproduces t |-> t exactly.
    let gamma = DVector::from_vec(basis.greville());
    let line = SplineFunction::new(Arc::new(basis), gamma)?;
    for &t in &[0.2, 0.37, 0.81] {
        println!(
            "s({t}) = {:.12}, s'({t}) = {:.12}",
            line.eval(t)?,
            line.eval_deriv(t, 1)?
        );
    }
    Ok(())
}
