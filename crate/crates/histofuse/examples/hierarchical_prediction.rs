//! The hierarchical head pair and the induced three-way distribution:
//! coarse non-tumor/tumor times fine non-viable/viable.
//!
//!     cargo run --example hierarchical_prediction

use histofuse::model::{compose_dist3, predict_class, HierarchicalPrediction};

fn main() {
    println!("factorized three-way distribution: (p_A0, p_A1*p_B0, p_A1*p_B1)\n");
    let cases = [
        ("confident non-tumor", [0.95, 0.05], [0.5, 0.5]),
        ("confident viable", [0.05, 0.95], [0.1, 0.9]),
        ("tumor, fine head torn", [0.2, 0.8], [0.5, 0.5]),
        ("borderline everywhere", [0.5, 0.5], [0.5, 0.5]),
        ("worked example", [0.3, 0.7], [0.4, 0.6]),
    ];
    const NAMES: [&str; 3] = ["non-tumor", "non-viable", "viable"];
    for (desc, p_a, p_b) in cases {
        let pred = HierarchicalPrediction::from_probs(p_a, p_b);
        let class = predict_class(&pred.dist3);
        println!(
            "{desc:<24} p_A = [{:.2}, {:.2}]  p_B = [{:.2}, {:.2}]",
            p_a[0], p_a[1], p_b[0], p_b[1]
        );
        println!(
            "{:<24} dist3 = [{:.3}, {:.3}, {:.3}]  ->  {} (sums to {:.6})\n",
            "",
            pred.dist3[0],
            pred.dist3[1],
            pred.dist3[2],
            NAMES[class as usize],
            pred.dist3.iter().sum::<f64>()
        );
    }

    // the composition is a distribution for any head outputs
    println!("normalization holds for arbitrary head probabilities:");
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let a = (i as f64 * 0.7297) % 1.0;
        let b = (i as f64 * 0.3911) % 1.0;
        let d = compose_dist3([a, 1.0 - a], [b, 1.0 - b]);
        worst = worst.max((d.iter().sum::<f64>() - 1.0).abs());
    }
    println!("  worst |sum - 1| over 1000 grid points: {worst:.2e}");
}
