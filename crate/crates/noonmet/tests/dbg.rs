use noonmet::bounds;
use noonmet::fockspace;
use noonmet::model::{LossProfile, Scenario};

#[test]
fn dbg_case() {
    let s = Scenario::with_generic_phases(2, 2, LossProfile::new(vec![0.4, 0.8, 0.8]).unwrap())
        .unwrap();
    let p = bounds::optimal_weights(&s).unwrap();
    let rho = fockspace::build_lossy_state(&s, &p).unwrap();
    let eig = rho.matrix().clone().symmetric_eigen();

    for i in 0..eig.eigenvalues.len() {
        let v = eig.eigenvectors.column(i);
        let residual = (rho.matrix() * v - v * nalgebra::Complex::from(eig.eigenvalues[i])).norm();
        println!(
            "i={i} lambda={:+.12e} |rho v - lambda v| = {:.3e}",
            eig.eigenvalues[i],
            residual
        );
    }
    let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
    let mut worst = 0.0f64;
    for r in 0..gram.nrows() {
        for c in 0..gram.ncols() {
            let expected = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - nalgebra::Complex::from(expected)).norm());
        }
    }
    println!("worst gram residual = {worst:.3e}");

    let recomposed = &eig.eigenvectors
        * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(nalgebra::Complex::from))
        * eig.eigenvectors.adjoint();
    let diff = (rho.matrix() - recomposed).map(|z| z.norm()).max();
    println!("recomposition residual = {diff:.3e}");
}
