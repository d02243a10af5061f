//! Value convergence does not force distance convergence.
//!
//! Along the walk `z_k = (-(k+1), 1)` inside the parabolic domain
//! `{x + y^2 <= 1}`, the objective `x + sqrt(x^2 + y^2)` sinks strictly to
//! its minimum 0 while the distance to the optimal set (the nonpositive
//! half-axis) stays pinned at exactly 1. Level-bounded problems cannot do
//! this, which is why the level-boundedness route upgrades the sublinear
//! rate.

use isqa::problems::counterexample_trace;

fn main() {
    let trace = counterexample_trace(10_000);
    println!("      k            z_k            F(z_k)    dist(z_k, X)");
    for &k in &[0usize, 1, 10, 100, 1_000, 10_000] {
        let row = trace[k];
        println!(
            "{k:7}  ({:9.1}, {:3.1})  {:12.6e}  {:12}",
            row.point.0, row.point.1, row.value, row.distance
        );
    }
    let strictly_decreasing = trace.windows(2).all(|p| p[1].value < p[0].value);
    println!("\nstrictly decreasing values: {strictly_decreasing}");
    println!(
        "distance constant at 1:     {}",
        trace.iter().all(|r| r.distance == 1.0)
    );
}
