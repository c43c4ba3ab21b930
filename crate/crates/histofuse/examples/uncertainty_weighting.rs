//! The homoscedastic uncertainty weighting in isolation: how the joint
//! objective trades the two task losses through the learnable
//! log-variances, and where the lambdas settle.
//!
//!     cargo run --example uncertainty_weighting

use histofuse::objective::{joint_loss, lambda_grad};

fn main() {
    let eta = 0.2;

    println!("joint loss surface at fixed task losses (L_A = 1.0, L_B = 0.5):");
    println!("{:>8} {:>8} {:>10}", "lam_A", "lam_B", "joint");
    for la in [-1.0, 0.0, 1.0, 2.0] {
        for lb in [-1.0, 0.0, 1.0] {
            println!(
                "{la:>8.1} {lb:>8.1} {:>10.4}",
                joint_loss(1.0, 0.5, la, lb, eta)
            );
        }
    }

    // gradient descent on lambda alone: stationary point at e^{-lambda} = eta / L
    println!("\ndescending lambda with the closed-form gradient (L = 1.0, eta = 0.2):");
    let mut lambda = 0.0f64;
    let lr = 0.05;
    for step in 0..=60 {
        if step % 10 == 0 {
            println!(
                "  step {step:>3}: lambda = {lambda:+.5}, grad = {:+.5}, task weight e^-lambda = {:.4}",
                lambda_grad(1.0, lambda, eta),
                (-lambda).exp()
            );
        }
        lambda -= lr * lambda_grad(1.0, lambda, eta);
    }
    for _ in 0..20_000 {
        lambda -= 0.01 * lambda_grad(1.0, lambda, eta);
    }
    println!(
        "  converged: lambda = {lambda:.6} (ln(1/eta) = ln 5 = {:.6})",
        (5.0f64).ln()
    );

    // the noisier task is down-weighted automatically
    println!("\nstationary weights for unequal task losses (eta = 0.2):");
    println!("{:>8} {:>12} {:>14}", "L_task", "lambda*", "weight e^-l*");
    for l in [0.25, 0.5, 1.0, 2.0, 4.0] {
        // solve -e^{-lam} L + eta = 0  =>  lam = ln(L / eta)
        let lam = (l / eta).ln();
        println!("{l:>8.2} {lam:>12.4} {:>14.4}", (-lam).exp());
    }
    println!("\na task with larger loss gets a larger log-variance and a smaller weight,");
    println!("while the eta term keeps both log-variances from growing without bound");
}
