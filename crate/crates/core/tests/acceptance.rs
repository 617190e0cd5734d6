//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dmgradar::airlink::channel::complex_normal;
use dmgradar::airlink::db_to_lin;
use dmgradar::bench::config::{ExperimentKind, ExperimentSpec};
use dmgradar::bench::{run_experiment, ResultTable};
use dmgradar::dsp::IqStream;
use dmgradar::frame::{assemble_frame, FrameLayout, Modulation, Preamble, DEFAULT_HEADER_LEN, STF_LEN};
use dmgradar::golay::generate_golay_pair;
use dmgradar::radar::crlb::{crlb_range, crlb_velocity_exact_contiguous, crlb_velocity_single};
use dmgradar::radar::detect::{cfar_threshold, preamble_correlation, preamble_statistic_variance};
use dmgradar::radar::estimate::moose_multi_frame;
use dmgradar::sync::{synchronize, CefEstimator, SyncConfig, CEF_PEAK_BIN};

const TS: f64 = 1.0 / 1.76e9;
const LAMBDA: f64 = 0.005;

const FAST_RUNTIME: Duration = Duration::from_secs(1);
const CFAR_RUNTIME: Duration = Duration::from_secs(30);
const CEF_TOL: f64 = 1e-9;
const RANGE_SIGMA_MM: (f64, f64) = (0.7, 0.8);
const VELOCITY_SIGMA_45DB: (f64, f64) = (0.095, 0.115);
const EXACT_VS_SINGLE_REL: f64 = 0.01;
const CFAR_DRAWS: usize = 100_000;
const CFAR_SIGMAS: f64 = 3.0;
const DETECT_TRIALS: usize = 2000;
const PD_MIN_LOW: f64 = 0.88;
const PD_MIN_HIGH: f64 = 0.995;
const RANGE_TRIALS: usize = 500;
const RANGE_MSE_MAX: f64 = 0.01;
const RANGE_CRLB_GAP_MAX: f64 = 2e-4;
const VELOCITY_TRIALS: usize = 500;
const VELOCITY_GAP_DB: f64 = 3.0;
const MOOSE_EXACT_REL: f64 = 1e-9;
const TRADEOFF_TRIALS: usize = 200;
const TRADEOFF_RATE_MIN: f64 = 1e9;
const TRADEOFF_RMSE_MAX: f64 = 0.1;
const MAP_DELAY_BINS: [f64; 2] = [168.0, 118.0];
const MAP_DELAY_WIDTH_MAX: f64 = 2.0;
const MAP_VELOCITY_RES: f64 = 34.375;
const MAP_VELOCITY_REL: f64 = 0.10;
const LONG_CPI_FRAMES: usize = 578;
const LONG_CPI_MIN_S: f64 = 4.2e-3;
const LONG_CPI_SEPARATION_MAX: f64 = 0.6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn value(t: &ResultTable, metric: &str, x: f64, y: Option<f64>) -> f64 {
    t.value(metric, x, y).unwrap_or_else(|| panic!("missing {metric} at {x}"))
}

fn golay_complementarity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0i64;
    for n in [128usize, 256, 512] {
        let pair = generate_golay_pair(n).expect("standard length");
        let (ra, rb) = (pair.a.autocorr(), pair.b.autocorr());
        for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
            let want = if i == n - 1 { 2 * n as i64 } else { 0 };
            worst = worst.max((x + y - want).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(worst == 0 && elapsed < FAST_RUNTIME, format!("max residue {worst}, {elapsed:.2?}"))
}

fn cef_delta() -> Outcome {
    let start = Instant::now();
    let preamble = Preamble::standard();
    let layout = FrameLayout::new(12800, DEFAULT_HEADER_LEN).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let frame = assemble_frame(&layout, &preamble, Modulation::Bpsk, &mut rng).unwrap();
    let (amp, h0, delay) = (2.0, Complex64::from_polar(0.7, 1.1), 300usize);
    let mut y = vec![Complex64::default(); delay];
    y.extend(frame.iter().map(|s| s * amp * h0));
    let stream = IqStream::new(y, 1.0 / TS, 0.0).unwrap();
    let timing = synchronize(&stream, 1, &preamble, &SyncConfig::default()).unwrap();
    let h = CefEstimator::new(&preamble).estimate(&stream.samples, timing.fine_start + STF_LEN).unwrap();
    let peak_err = (h[CEF_PEAK_BIN] - amp * h0).norm();
    let other = h.iter().enumerate().filter(|(l, _)| *l != CEF_PEAK_BIN).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        timing.fine_start == delay && peak_err < CEF_TOL && other < CEF_TOL && elapsed < FAST_RUNTIME,
        format!(
            "start {} (true {delay}), |peak err| {peak_err:.1e}, max other {other:.1e}, {elapsed:.2?}",
            timing.fine_start
        ),
    )
}

fn crlb_checks() -> Outcome {
    let sr = crlb_range(1.0, 2048, 1.76e9).unwrap().sqrt() * 1e3;
    let sv = crlb_velocity_single(db_to_lin(45.0), 2048, TS, LAMBDA).unwrap().sqrt();
    let mut worst = 0.0f64;
    for z in [0.0, 10.0, 20.0, 45.0] {
        let s = crlb_velocity_single(db_to_lin(z), 2048, TS, LAMBDA).unwrap();
        let e = crlb_velocity_exact_contiguous(db_to_lin(z), 2048, 1, 12800, TS, LAMBDA).unwrap();
        worst = worst.max((e / s - 1.0).abs());
    }
    let pass = (RANGE_SIGMA_MM.0..=RANGE_SIGMA_MM.1).contains(&sr)
        && (VELOCITY_SIGMA_45DB.0..=VELOCITY_SIGMA_45DB.1).contains(&sv)
        && worst < EXACT_VS_SINGLE_REL;
    outcome(pass, format!("σ_ρ {sr:.4} mm, σ_v(45 dB) {sv:.4} m/s, exact vs single-frame {:.3}%", worst * 100.0))
}

fn cfar_calibration() -> Outcome {
    let start = Instant::now();
    let preamble = Preamble::standard();
    let x = preamble.symbols();
    let var = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut noise = vec![Complex64::default(); x.len()];
    let stats: Vec<f64> = (0..CFAR_DRAWS)
        .map(|_| {
            for v in noise.iter_mut() {
                *v = complex_normal(&mut rng, var);
            }
            preamble_correlation(&noise, x, 0).unwrap()
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for pfa in [1e-1, 1e-2, 1e-3] {
        let thr = cfar_threshold(preamble_statistic_variance(var, x.len()), pfa).unwrap();
        let rate = stats.iter().filter(|&&s| s > thr).count() as f64 / CFAR_DRAWS as f64;
        let sigma = (pfa * (1.0 - pfa) / CFAR_DRAWS as f64).sqrt();
        pass &= (rate - pfa).abs() <= CFAR_SIGMAS * sigma;
        parts.push(format!("{pfa:.0e}→{rate:.2e} ({:.1}σ)", (rate - pfa) / sigma));
    }
    let elapsed = start.elapsed();
    outcome(pass && elapsed < CFAR_RUNTIME, format!("{}, {elapsed:.1?}", parts.join(", ")))
}

fn detection() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (pfa, z, min) in [(1e-4, -24.3, PD_MIN_LOW), (1e-6, -20.5, PD_MIN_HIGH)] {
        let mut spec = ExperimentSpec::for_kind(ExperimentKind::Detect);
        spec.trials = DETECT_TRIALS;
        spec.seed = 7;
        spec.detect.pfa = pfa;
        spec.sweep.scnr_db = vec![z];
        let t = run_experiment(&spec).unwrap();
        let pd = value(&t, "pd", z, None);
        pass &= pd >= min;
        parts.push(format!("Pd({z} dB, pfa {pfa:.0e}) = {pd:.4} (min {min})"));
    }
    outcome(pass, parts.join(", "))
}

fn range_estimation() -> Outcome {
    let mut spec = ExperimentSpec::for_kind(ExperimentKind::Range);
    spec.trials = RANGE_TRIALS;
    spec.sweep.scnr_db = vec![0.0, 5.0, 10.0];
    let t = run_experiment(&spec).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &z in &spec.sweep.scnr_db {
        let mse = value(&t, "mse_m2", z, None);
        let bound = value(&t, "crlb_m2", z, None);
        pass &= mse <= RANGE_MSE_MAX && (mse - bound).abs() <= RANGE_CRLB_GAP_MAX;
        parts.push(format!("{z} dB: MSE {mse:.2e} m², CRLB {bound:.2e} m²"));
    }
    outcome(pass, parts.join("; "))
}

fn velocity_estimation() -> Outcome {
    let mut spec = ExperimentSpec::for_kind(ExperimentKind::Velocity);
    spec.trials = VELOCITY_TRIALS;
    spec.sweep.scnr_db = vec![0.0, 10.0, 20.0];
    let t = run_experiment(&spec).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &z in &spec.sweep.scnr_db {
        let mse = value(&t, "mse_m2s2", z, None);
        let bound = value(&t, "crlb_eq27", z, None);
        let gap = 10.0 * (mse / bound).log10();
        pass &= gap.abs() <= VELOCITY_GAP_DB;
        parts.push(format!("{z} dB: {gap:+.2} dB"));
    }

    // Noiseless tone blocks with Doppler inside ±1/(2KTs).
    let (k, m) = (41285usize, 2usize);
    let x = Preamble::standard().symbols().to_vec();
    let mut worst = 0.0f64;
    for nu in [-20_000.0, -3_000.0, 150.0, 9_000.0, 21_000.0] {
        let blocks: Vec<Vec<Complex64>> = (0..m)
            .map(|f| {
                x.iter()
                    .enumerate()
                    .map(|(n, s)| s * Complex64::from_polar(1.0, 2.0 * PI * nu * (n + f * k) as f64 * TS))
                    .collect()
            })
            .collect();
        let est = moose_multi_frame(&blocks, k, TS).unwrap();
        worst = worst.max((est / nu - 1.0).abs());
    }
    pass &= worst <= MOOSE_EXACT_REL;
    parts.push(format!("noiseless rel. error {worst:.1e}"));
    outcome(pass, format!("MSE vs bound: {}", parts.join(", ")))
}

fn tradeoff() -> Outcome {
    let mut spec = ExperimentSpec::for_kind(ExperimentKind::Tradeoff);
    spec.trials = TRADEOFF_TRIALS;
    spec.sweep.cpi = vec![0.06e-3];
    spec.sweep.frames = vec![2, 4, 8];
    spec.velocity.tradeoff_scnr_db = 10.0;
    let t = run_experiment(&spec).unwrap();
    let mut found = Vec::new();
    for &m in &spec.sweep.frames {
        let y = Some(m as f64);
        let rate = value(&t, "data_rate_bps", 0.06e-3, y);
        let rmse = value(&t, "velocity_rmse_mps", 0.06e-3, y);
        if rate >= TRADEOFF_RATE_MIN && rmse <= TRADEOFF_RMSE_MAX {
            found.push(format!("M={m}: {:.2} Gbps, {rmse:.3} m/s", rate / 1e9));
        }
    }
    let pass = !found.is_empty();
    outcome(pass, if pass { found.join("; ") } else { "no frame count meets both targets".into() })
}

fn multi_target_map() -> Outcome {
    let spec = ExperimentSpec::for_kind(ExperimentKind::Ddmap);
    let t = run_experiment(&spec).unwrap();
    let n = value(&t, "detections", 0.0, None) as usize;
    let mut bins = Vec::new();
    let mut delay_w = 0.0f64;
    let mut vel_w = Vec::new();
    for i in 0..n {
        bins.push(value(&t, &format!("target{i}.delay_bin"), 0.0, None));
        delay_w = delay_w.max(value(&t, &format!("target{i}.delay_3db_bins"), 0.0, None));
        vel_w.push(value(&t, &format!("target{i}.velocity_3db_mps"), 0.0, None));
    }
    let peaks_ok = bins.len() == 2 && MAP_DELAY_BINS.iter().all(|b| bins.contains(b));
    let delay_ok = delay_w <= MAP_DELAY_WIDTH_MAX;
    let vel_ok = !vel_w.is_empty() && vel_w.iter().all(|w| (w / MAP_VELOCITY_RES - 1.0).abs() <= MAP_VELOCITY_REL);

    let mut long = ExperimentSpec::for_kind(ExperimentKind::Ddmap);
    long.scenario.m = LONG_CPI_FRAMES;
    let t_int = long.scenario.m as f64 * long.scenario.k as f64 / long.scenario.symbol_rate;
    let lt = run_experiment(&long).unwrap();
    let sep = value(&lt, "target0.velocity_3db_mps", 0.0, None);
    let long_ok = t_int >= LONG_CPI_MIN_S && sep <= LONG_CPI_SEPARATION_MAX;

    let vel_list: Vec<String> = vel_w.iter().map(|w| format!("{w:.2}")).collect();
    outcome(
        peaks_ok && delay_ok && vel_ok && long_ok,
        format!(
            "peaks {bins:?} [{}], delay 3-dB {delay_w:.2} bins [{}], Doppler 3-dB {} m/s vs {MAP_VELOCITY_RES}±{:.0}% [{}], \
             T_int {:.2} ms → 3-dB {sep:.3} m/s [{}]",
            ok(peaks_ok),
            ok(delay_ok),
            vel_list.join("/"),
            MAP_VELOCITY_REL * 100.0,
            ok(vel_ok),
            t_int * 1e3,
            ok(long_ok),
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_dmgradar");
    let runs = [
        vec!["detect", "--scnr", "-22,-20", "--trials", "60", "--seed", "11"],
        vec!["velocity", "--scnr", "0,10", "--trials", "40", "--seed", "3"],
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "2", "8"]
            .iter()
            .map(|w| {
                let out = Command::new(exe).args(&args).args(["--workers", w]).output().expect("binary runs");
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        pass &= same;
        parts.push(format!("{}: {}", args[0], if same { "identical" } else { "differs" }));
    }
    outcome(pass, format!("workers 1/2/8 → {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Golay complementarity", golay_complementarity),
        ("CEF channel-estimate delta", cef_delta),
        ("CRLB formulas", crlb_checks),
        ("CFAR calibration", cfar_calibration),
        ("detection probability", detection),
        ("range estimation", range_estimation),
        ("velocity estimation", velocity_estimation),
        ("rate/accuracy trade-off", tradeoff),
        ("multi-target delay-Doppler map", multi_target_map),
        ("worker-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
