//! Reproduces the blob-coefficient calibration that fixed
//! `bem::DEFAULT_BLOB_COEFF`: sweep the coefficient on the sphere across
//! refinement levels and report drag/torque errors against the analytic
//! values.
//!
//! Run with `cargo run --release -p stokeprop --example calibrate_blob`.

use std::f64::consts::PI;
use stokeprop::bem::{resistance_tensors, solve_rigid_modes, BemConfig};
use stokeprop::mesh::icosphere;

fn main() {
    let coeffs: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("blob coefficient"))
        .collect();
    let coeffs = if coeffs.is_empty() {
        vec![0.25, 0.35, 0.45, 0.55, 0.65, 0.8, 1.0]
    } else {
        coeffs
    };
    let levels: Vec<u32> = std::env::var("LEVELS")
        .map(|s| s.split(',').map(|t| t.parse().expect("level")).collect())
        .unwrap_or_else(|_| vec![1, 2, 3]);

    println!("coeff  level panels  K11_err    Theta11_err");
    for &coeff in &coeffs {
        let config = BemConfig {
            blob_coeff: coeff,
            ..BemConfig::default()
        };
        for &level in &levels {
            let mesh = icosphere::<f64>(1.0, level);
            let sol = solve_rigid_modes(&mesh, 1.0, &config).expect("solve");
            let set = resistance_tensors(&sol).expect("tensors");
            let k_err = (set.k[(0, 0)] - 6.0 * PI) / (6.0 * PI);
            let t_err = (set.theta[(0, 0)] - 8.0 * PI) / (8.0 * PI);
            println!(
                "{coeff:<6} {level:<5} {:<7} {k_err:+.5}   {t_err:+.5}",
                mesh.panel_count()
            );
        }
    }
}
