mod common;

use common::random_matrix;
use onebit_idd::estimator::*;
use onebit_idd::linalg::CMatrix;
use onebit_idd::modem::complex_gaussian;
use onebit_idd::quantization::quantize_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quantized_pilots(h: &CMatrix, pilots: &PilotBlock, s2: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let y = h.mul(&pilots.pilots).unwrap();
    CMatrix::from_fn(h.rows(), pilots.tau(), |r, t| quantize_sample(y[(r, t)] + complex_gaussian(rng, s2)))
}

fn mse(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.sub(b).unwrap();
    d.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>() / d.as_slice().len() as f64
}

#[test]
fn fast_path_equals_dense_reference_on_small_dims() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in 1..=4 {
        for tau in 1..=6 {
            for k in 1..=tau.min(3) {
                let pilots = build_pilot_matrix(k, tau, 1.0).unwrap();
                let h = random_matrix(m, k, &mut rng);
                let y = quantized_pilots(&h, &pilots, 0.2, &mut rng);
                let fast = blmmse_estimate(&y, &pilots, 0.2).unwrap();
                let dense = blmmse_estimate_dense(&y, &pilots, 0.2).unwrap();
                let scale = dense.max_abs().max(1e-300);
                assert!(fast.sub(&dense).unwrap().max_abs() / scale < 1e-10, "m={m} k={k} tau={tau}");
            }
        }
    }
}

#[test]
fn blmmse_beats_scaled_least_squares() {
    let (m, k, tau) = (32, 9, 70);
    let s2 = 0.1; // 10 dB
    let pilots = build_pilot_matrix(k, tau, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut e_bl, mut e_ls) = (0.0, 0.0);
    for _ in 0..1000 {
        let h = random_matrix(m, k, &mut rng);
        let y = quantized_pilots(&h, &pilots, s2, &mut rng);
        e_bl += mse(&blmmse_estimate(&y, &pilots, s2).unwrap(), &h);
        e_ls += mse(&scaled_ls_estimate(&y, &pilots, s2).unwrap(), &h);
    }
    assert!(e_bl < e_ls, "BLMMSE {e_bl} vs scaled LS {e_ls}");
    assert!(e_bl / 1000.0 < 1.0);
}
