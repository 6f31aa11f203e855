//! Acceptance suite. Runs each criterion at its stated tolerance and sample
//! size and prints one PASS/FAIL line per criterion. The process exits with a
//! failure status when any criterion fails.
//!
//! Comparisons between receivers use common random numbers: two simulators
//! with the same seed see identical bits, channels and noise for every block,
//! so a difference in BER is judged against the standard error of the paired
//! per-block difference.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::{quantized_moments, random_hpd, random_matrix};
use onebit_idd::detector::{build_filter, DetectorKind};
use onebit_idd::estimator::{blmmse_estimate, blmmse_estimate_dense, build_pilot_matrix};
use onebit_idd::ldpc::{box_plus, LdpcCode, QuantizerParams, QuasiUniformQuantizer, SpaDecoder};
use onebit_idd::linalg::CMatrix;
use onebit_idd::modem::{complex_gaussian, SoftSymbolBelief};
use onebit_idd::quantization::{arcsine_covariance, cross_covariance, quantize_sample};
use onebit_idd::sim::{run_ber_sweep, write_csv, BerRecord, CsiMode, Simulator, Switch, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Per-block bit errors of one SNR point, indexed `[block][iteration]`.
struct BlockErrors {
    errors: Vec<Vec<u64>>,
    bits_per_block: u64,
    users: usize,
}

impl BlockErrors {
    fn run(sim: &Simulator, snr_index: usize, blocks: u64) -> Self {
        let cfg = sim.config();
        let sigma_n2 = cfg.noise_variance(cfg.snr[snr_index]);
        let scaling = sim.run_training_phase(snr_index, sigma_n2).expect("training");
        let errors = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let tallies = sim.simulate_block(snr_index, sigma_n2, b, &scaling).expect("block");
                tallies.iter().map(|t| t.bit_errors).collect()
            })
            .collect();
        BlockErrors {
            errors,
            bits_per_block: (cfg.users * sim.code().k()) as u64,
            users: cfg.users,
        }
    }

    fn frames(&self) -> usize {
        self.errors.len() * self.users
    }

    fn ber(&self, it: usize) -> f64 {
        let total: u64 = self.errors.iter().map(|e| e[it]).sum();
        total as f64 / (self.errors.len() as u64 * self.bits_per_block) as f64
    }
}

/// Mean and standard error of `BER(a, ia) - BER(b, ib)` over paired blocks.
fn paired_difference(a: &BlockErrors, ia: usize, b: &BlockErrors, ib: usize) -> (f64, f64) {
    assert_eq!(a.errors.len(), b.errors.len());
    let n = a.errors.len() as f64;
    let d: Vec<f64> = a
        .errors
        .iter()
        .zip(&b.errors)
        .map(|(x, y)| (x[ia] as f64 - y[ib] as f64) / a.bits_per_block as f64)
        .collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn figure_setup(snr: Vec<f64>) -> SystemConfig {
    SystemConfig {
        users: 12,
        antennas: 32,
        snr,
        csi: CsiMode::Perfect,
        iterations: 3,
        workers: 0,
        ..Default::default()
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_cov, mut worst_cross) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let c = random_hpd(n, 0.05, &mut rng);
        let (qq, qy) = quantized_moments(&c, 1_000_000, &mut rng);
        worst_cov = worst_cov.max(arcsine_covariance(&c).unwrap().sub(&qq).unwrap().max_abs());
        worst_cross = worst_cross.max(cross_covariance(&c).unwrap().sub(&qy).unwrap().max_abs());
    }
    check(
        worst_cov < 0.01 && worst_cross < 0.01,
        format!("20 matrices, 1e6 draws: max |cov err| {worst_cov:.4}, max |cross err| {worst_cross:.4} (< 0.01)"),
    )
}

fn criterion_2() -> Outcome {
    let grid: Vec<f64> = (0..200).map(|i| -15.0 + 30.0 * i as f64 / 199.0).collect();
    let mut worst = 0.0f64;
    for &x in &grid {
        for &y in &grid {
            let oracle = 2.0 * ((x / 2.0).tanh() * (y / 2.0).tanh()).atanh();
            worst = worst.max((box_plus(x, y) - oracle).abs());
        }
    }
    check(worst < 1e-9, format!("200x200 grid on [-15, 15]^2: max deviation {worst:.2e} (< 1e-9)"))
}

fn criterion_3() -> Outcome {
    let q = QuasiUniformQuantizer::new(QuantizerParams {
        delta: 0.25,
        growth: 1.3,
        levels: 6,
    })
    .unwrap();
    let (a, b, c) = (q.quantize(0.3), q.quantize(2.0), q.quantize(100.0));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let odd = (0..10_000).all(|_| {
        let x: f64 = rng.random_range(-50.0..50.0);
        q.quantize(-x) == -q.quantize(x)
    });
    let ok = (a - 0.25).abs() < 1e-12 && (b - 1.95).abs() < 1e-12 && (c - 9.41228).abs() < 1e-5 && odd;
    check(ok, format!("Q(0.3) = {a}, Q(2.0) = {b}, Q(100) = {c:.6}, odd symmetry on 1e4 points: {odd}"))
}

fn criterion_4() -> Outcome {
    let code = LdpcCode::construct(512, 0.5, 1).unwrap();
    let decoder = SpaDecoder::new(&code);
    let ebn0 = 10f64.powf(0.3);
    let rate = code.k() as f64 / code.n() as f64;
    let coded_s2 = 1.0 / (2.0 * rate * ebn0);
    let uncoded_s2 = 1.0 / (2.0 * ebn0);
    let frames = 10_000u64;
    let (coded_errors, uncoded_errors) = (0..frames)
        .into_par_iter()
        .map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE ^ f);
            let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
            let cw = code.encode(&msg).unwrap();
            let coded = Normal::new(0.0, coded_s2.sqrt()).unwrap();
            let lc: Vec<f64> = cw
                .iter()
                .map(|&b| 2.0 * (1.0 - 2.0 * b as f64 + coded.sample(&mut rng)) / coded_s2)
                .collect();
            let out = decoder.decode(&lc, None, 50);
            let coded_err = code
                .extract_message(&out.hard_bits)
                .iter()
                .zip(&msg)
                .filter(|(a, b)| a != b)
                .count() as u64;
            let uncoded = Normal::new(0.0, uncoded_s2.sqrt()).unwrap();
            let uncoded_err = cw
                .iter()
                .filter(|&&b| ((1.0 - 2.0 * b as f64 + uncoded.sample(&mut rng)) < 0.0) != (b == 1))
                .count() as u64;
            (coded_err, uncoded_err)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let coded_ber = coded_errors as f64 / (frames * code.k() as u64) as f64;
    let uncoded_ber = uncoded_errors as f64 / (frames * code.n() as u64) as f64;
    let ok = coded_ber < 1e-3 && (uncoded_ber / 2.3e-2 - 1.0).abs() <= 0.2;
    check(
        ok,
        format!("Eb/N0 3 dB, {frames} frames: coded BER {coded_ber:.2e} (< 1e-3), uncoded BER {uncoded_ber:.3e} (2.3e-2 +-20%)"),
    )
}

/// Criteria 5 and 6 share one K=12, M=32 perfect-CSI run per detector.
struct FigureRun {
    snr: Vec<f64>,
    lra: Vec<BlockErrors>,
    baseline: Vec<BlockErrors>,
}

const FIGURE_SNR: [f64; 5] = [-6.0, -5.0, -4.0, -3.0, -2.0];
const FIGURE_BLOCKS: u64 = 1667;

fn figure_run() -> FigureRun {
    let snr = FIGURE_SNR.to_vec();
    let lra = Simulator::new(figure_setup(snr.clone())).unwrap();
    let baseline = Simulator::new(SystemConfig {
        detector: DetectorKind::MmseBaseline,
        ..figure_setup(snr.clone())
    })
    .unwrap();
    FigureRun {
        lra: (0..snr.len()).map(|i| BlockErrors::run(&lra, i, FIGURE_BLOCKS)).collect(),
        baseline: (0..snr.len()).map(|i| BlockErrors::run(&baseline, i, FIGURE_BLOCKS)).collect(),
        snr,
    }
}

fn criterion_5(run: &FigureRun) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut checked = 0;
    for (i, snr) in run.snr.iter().enumerate() {
        let first = run.lra[i].ber(0);
        if !(1e-3..=1e-1).contains(&first) {
            continue;
        }
        for it in 0..3 {
            checked += 1;
            let (d, se) = paired_difference(&run.baseline[i], it, &run.lra[i], it);
            let pass = d > 2.0 * se;
            ok &= pass;
            if it == 0 || !pass {
                lines.push(format!(
                    "{snr:+} dB it{}: LRA {:.3e} vs MMSE {:.3e} (gap {:.1} se)",
                    it + 1,
                    run.lra[i].ber(it),
                    run.baseline[i].ber(it),
                    d / se
                ));
            }
        }
    }
    ok &= checked > 0;
    check(
        ok,
        format!("{} frames/point, {checked} comparisons; {}", run.lra[0].frames(), lines.join("; ")),
    )
}

fn criterion_6(run: &FigureRun) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    // mid-SNR: the interior points of the grid
    for i in 1..run.snr.len() - 1 {
        let r = &run.lra[i];
        let (gain, se_gain) = paired_difference(r, 0, r, 1);
        let (rise, se_rise) = paired_difference(r, 2, r, 1);
        let pass = gain > 2.0 * se_gain && rise <= 2.0 * se_rise;
        ok &= pass;
        lines.push(format!(
            "{:+} dB: it1 {:.3e}, it2 {:.3e}, it3 {:.3e}",
            run.snr[i],
            r.ber(0),
            r.ber(1),
            r.ber(2)
        ));
    }
    check(ok, lines.join("; "))
}

fn criterion_7(run: &FigureRun) -> Outcome {
    // highest simulated SNR whose final-iteration reference BER is in band
    let Some(i) = (0..run.snr.len()).rev().find(|&i| (1e-5..=1e-3).contains(&run.lra[i].ber(2))) else {
        return Err("no SNR point with reference BER in [1e-5, 1e-3]".into());
    };
    let snr = vec![run.snr[i]];
    let blocks = 8334;
    let plain = Simulator::new(figure_setup(snr.clone())).unwrap();
    let tuned = Simulator::new(SystemConfig {
        quantizer: Switch::ON,
        scaling: Switch::ON,
        ..figure_setup(snr)
    })
    .unwrap();
    let a = BlockErrors::run(&plain, 0, blocks);
    let b = BlockErrors::run(&tuned, 0, blocks);
    let (d, se) = paired_difference(&b, 2, &a, 2);
    check(
        d <= 2.0 * se,
        format!(
            "{:+} dB, {} frames, final iteration: quantizer+scaling {:.3e} vs plain {:.3e} (diff {:+.2e}, se {:.2e})",
            run.snr[i],
            a.frames(),
            b.ber(2),
            a.ber(2),
            d,
            se
        ),
    )
}

fn criterion_8() -> Outcome {
    let setup = |csi| SystemConfig {
        users: 9,
        antennas: 32,
        tau: 70,
        snr: vec![-6.0, -4.0, -2.0],
        csi,
        workers: 0,
        ..Default::default()
    };
    let perfect = Simulator::new(setup(CsiMode::Perfect)).unwrap();
    let estimated = Simulator::new(setup(CsiMode::Blmmse)).unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, snr) in perfect.config().snr.iter().enumerate() {
        let p = BlockErrors::run(&perfect, i, 300);
        let e = BlockErrors::run(&estimated, i, 300);
        for it in 0..3 {
            let (d, se) = paired_difference(&e, it, &p, it);
            ok &= d > 2.0 * se;
        }
        lines.push(format!("{snr:+} dB final: estimated {:.3e} vs perfect {:.3e}", e.ber(2), p.ber(2)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for m in 1..=4 {
        for tau in 1..=6 {
            for k in 1..=tau.min(3) {
                let pilots = build_pilot_matrix(k, tau, 1.0).unwrap();
                let h = random_matrix(m, k, &mut rng);
                let y = h.mul(&pilots.pilots).unwrap();
                let y = CMatrix::from_fn(m, tau, |r, t| quantize_sample(y[(r, t)] + complex_gaussian(&mut rng, 0.3)));
                let fast = blmmse_estimate(&y, &pilots, 0.3).unwrap();
                let dense = blmmse_estimate_dense(&y, &pilots, 0.3).unwrap();
                worst = worst.max(fast.sub(&dense).unwrap().max_abs());
            }
        }
    }
    ok &= worst < 1e-10;
    lines.push(format!("fast vs dense estimator max diff {worst:.1e} (< 1e-10)"));
    check(ok, lines.join("; "))
}

fn criterion_9() -> Outcome {
    let f = build_filter(&CMatrix::identity(1), 1.0, &SoftSymbolBelief::zero(1), 0).unwrap();
    let err = (f.w[0].re - 1.0 / PI.sqrt()).abs() + f.w[0].im.abs();
    check(err < 1e-12, format!("w = {:.15}, |w - 1/sqrt(pi)| = {err:.1e} (< 1e-12)", f.w[0].re))
}

fn counts_csv(records: &[BerRecord]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ber.csv");
    let stripped: Vec<BerRecord> = records.iter().map(|r| BerRecord { seconds: 0.0, ..r.clone() }).collect();
    write_csv(&stripped, &path).unwrap();
    std::fs::read_to_string(path).unwrap()
}

fn criterion_10() -> Outcome {
    let base = SystemConfig {
        snr: vec![-5.0, -3.0],
        trials: 48,
        batch: 8,
        quantizer: Switch::ON,
        scaling: Switch::ON,
        csi: CsiMode::Blmmse,
        ..Default::default()
    };
    let reference = counts_csv(&run_ber_sweep(&SystemConfig { workers: 1, ..base.clone() }).unwrap());
    let mut ok = true;
    for workers in [1, 4, 16] {
        let again = counts_csv(&run_ber_sweep(&SystemConfig { workers, ..base.clone() }).unwrap());
        ok &= again == reference;
    }
    check(ok, "K=12 estimated CSI with quantizer and scaling, reruns at 1/4/16 workers give identical CSV counts".into())
}

fn report(name: &str, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {name} [{secs:.1}s]: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL criterion {name} [{secs:.1}s]: {detail}");
            false
        }
    }
}

fn main() {
    // answer libtest-style listing probes without running anything
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut passed = 0;
    let mut total = 0;
    let mut tally = |name: &str, run: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        total += 1;
        passed += report(name, t, run()) as usize;
    };
    tally("1 (arcsine law)", &criterion_1);
    tally("2 (box-plus)", &criterion_2);
    tally("3 (quantizer table)", &criterion_3);
    tally("4 (LDPC over BPSK-AWGN)", &criterion_4);
    let t = Instant::now();
    let run = figure_run();
    println!("     K=12 M=32 sweep for criteria 5-7 took {:.1}s", t.elapsed().as_secs_f64());
    tally("5 (LRA-MMSE vs MMSE)", &|| criterion_5(&run));
    tally("6 (IDD iteration gain)", &|| criterion_6(&run));
    tally("7 (quantizer + scaling)", &|| criterion_7(&run));
    tally("8 (BLMMSE CSI)", &criterion_8);
    tally("9 (scalar filter)", &criterion_9);
    tally("10 (reproducibility)", &criterion_10);
    println!("acceptance: {passed}/{total} criteria passed");
    if passed != total {
        std::process::exit(1);
    }
}
