//! Decomposes a random square matrix and reports reconstruction and
//! orthogonality errors.
//!
//! ```text
//! cargo run --release --example svd -- 300
//! ```

use orthoalign::numerics::{matmul_tn, svd, DenseMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> orthoalign::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = DenseMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng))?;

    let start = std::time::Instant::now();
    let s = svd(&m)?;
    let elapsed = start.elapsed();

    let residual = s.reconstruct().sub(&m)?.max_abs() / m.max_abs();
    let eye = DenseMatrix::identity(n);
    let u_err = matmul_tn(&s.u, &s.u)?.sub(&eye)?.max_abs();
    let v_err = matmul_tn(&s.v, &s.v)?.sub(&eye)?.max_abs();
    println!("{n}x{n} in {elapsed:.2?}");
    println!("sigma max {:.4}, min {:.4e}", s.sigma[0], s.sigma[n - 1]);
    println!("relative reconstruction error {residual:.2e}");
    println!("orthogonality error U {u_err:.2e}, V {v_err:.2e}");
    Ok(())
}
