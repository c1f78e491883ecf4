//! The coordinate-descent regression path: how coefficients enter the
//! model as the penalty relaxes.
//!
//! Run with: cargo run --example lasso_path

use coocnet::seeding::rng_from_seed;
use coocnet::solvers::{lambda_max, lasso_path, log_spaced_grid};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> coocnet::Result<()> {
    let mut rng = rng_from_seed(3);
    let n = 120;
    let p = 8;

    // Three informative columns, five pure noise.
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        y[i] = 2.0 * x[[i, 0]] - 1.2 * x[[i, 3]] + 0.6 * x[[i, 5]]
            + 0.5 * rng.sample::<f64, _>(StandardNormal);
    }

    let lm = lambda_max(&x, &y);
    println!("smallest all-zero penalty: {lm:.4}\n");
    let grid = log_spaced_grid(lm, lm * 1e-3, 12);
    let fits = lasso_path(&x, &y, &grid)?;

    println!("{:>10}  {:>4}  {:>6}  coefficients", "lambda", "nnz", "sweeps");
    for fit in &fits {
        let nnz = fit.weights.iter().filter(|&&w| w != 0.0).count();
        let coefs: Vec<String> = fit.weights.iter().map(|w| format!("{w:+.2}")).collect();
        println!(
            "{:>10.4}  {:>4}  {:>6}  [{}]",
            fit.lambda,
            nnz,
            fit.iterations,
            coefs.join(", ")
        );
    }

    let last = fits.last().unwrap();
    println!(
        "\nat the weakest penalty the truth (+2.00, -1.20, +0.60) reads {:+.2}, {:+.2}, {:+.2}",
        last.weights[0], last.weights[3], last.weights[5]
    );
    Ok(())
}
