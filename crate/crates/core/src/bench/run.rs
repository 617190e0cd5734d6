//! Experiment runners: one Monte Carlo pipeline per experiment kind.

use std::fs::File;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentKind, ExperimentSpec, Training, VelocityMode};
use super::metrics::{ambiguity_function, data_rate, mean_hw, mse_hw, pair_ambiguity, proportion};
use super::sim::{jittered, Capture, Link};
use super::table::{fmt_sig9, Point, ResultTable};
use crate::airlink::array::{select_beams, DftCodebook};
use crate::airlink::budget::link_budget_sweep;
use crate::airlink::channel::{comm_path_gain, random_phase, CommLink};
use crate::airlink::synth::{echoes_from_targets, Echo};
use crate::airlink::{db_to_lin, lin_to_db, C};
use crate::error::{Error, Result};
use crate::frame::{CpiSymbols, PREAMBLE_LEN, SHORT_LEN, STF_LEN};
use crate::golay::{generate_golay_pair, GolaySeq};
use crate::radar::crlb::{crlb_range, crlb_velocity_exact_contiguous, crlb_velocity_multi, crlb_velocity_single};
use crate::radar::detect::{
    cef_statistic, cef_statistic_variance, cfar_threshold, preamble_energy, preamble_statistic_variance, StatSource,
};
use crate::radar::estimate::{
    doppler_to_velocity, moose_multi_frame, moose_single_frame, SINGLE_FRAME_ND, SINGLE_FRAME_P,
};
use crate::radar::map::{build_delay_doppler_map, detect_targets_map, DelayDopplerMap};
use crate::radar::resolutions;
use crate::seed::derive_seed;
use crate::sync::{CefEstimator, ChannelEstimateMatrix, FineTiming, CEF_PEAK_BIN};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "DMGRADAR_WORKERS";

/// Worker count: explicit value, then [`WORKERS_ENV`], then the spec; 0 means
/// the pool default.
pub fn resolve_workers(explicit: Option<usize>, spec: &ExperimentSpec) -> Result<usize> {
    if let Some(n) = explicit {
        return Ok(n);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a count, got `{v}`"))),
        Err(_) => Ok(spec.workers),
    }
}

/// Runs the experiment on a dedicated pool of `workers` threads (0 picks the
/// default). Output does not depend on the worker count.
pub fn run_with_workers(spec: &ExperimentSpec, workers: usize) -> Result<ResultTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

/// Runs every sweep point of `spec` on the current thread pool. A point that
/// fails yields an error row and the sweep continues.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Ambiguity => run_ambiguity(spec),
        ExperimentKind::Detect => Ok(run_detect(spec)),
        ExperimentKind::Range => Ok(run_range(spec)),
        ExperimentKind::Velocity => Ok(run_velocity(spec)),
        ExperimentKind::Tradeoff => Ok(run_tradeoff(spec)),
        ExperimentKind::Linkbudget => run_linkbudget(spec),
        ExperimentKind::Ddmap => Ok(run_ddmap(spec)),
        ExperimentKind::Crlb => Ok(run_crlb(spec)),
    }
}

/// Runs `spec.trials` trials of sweep point `point` in parallel. Trial `t`
/// draws from its own stream seeded by `(seed, point, t)`; results come back
/// in trial order.
fn trials<T: Send>(
    spec: &ExperimentSpec,
    point: usize,
    f: impl Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[point as u64, t as u64]));
            f(t, &mut rng)
        })
        .collect()
}

fn point_or_error<T>(table: &mut ResultTable, p: &Point, trials: usize, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            table.push_error(p, trials, &e.to_string());
            None
        }
    }
}

/// Single-target trial setup: jittered target, fresh CPI and unit echo.
fn single_target(spec: &ExperimentSpec, link: &Link, m: usize, rng: &mut ChaCha8Rng) -> Result<(CpiSymbols, Echo)> {
    let sc = &spec.scenario;
    let target = jittered(&sc.targets[0], link.ts, sc.jitter_range, rng);
    let src = link.source(m, rng.random())?;
    let echo = link.unit_echo(&target, rng);
    Ok((src, echo))
}

fn run_detect(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let opts = spec.detect;
    for (i, &z) in spec.sweep.scnr_db.iter().enumerate() {
        let p = Point::new("scnr_db", z);
        let res = (|| {
            let link = Link::new(&spec.scenario, spec.scenario.k)?;
            let var = link.sample_variance_for_scnr(z)?;
            let noise_var = match opts.stat {
                StatSource::Preamble => preamble_statistic_variance(var, PREAMBLE_LEN),
                StatSource::CefPeak => cef_statistic_variance(var),
            };
            let threshold = cfar_threshold(noise_var, opts.pfa)?;
            let stats = trials(spec, i, |_, rng| {
                let (src, echo) = single_target(spec, &link, 1, rng)?;
                let (first, count) = link.window(&[echo])?;
                let statistic = |echoes: &[Echo], rng: &mut ChaCha8Rng| -> Result<f64> {
                    let mf = link.stream(&src, echoes, var, first, count, rng)?;
                    match opts.stat {
                        StatSource::Preamble => {
                            preamble_energy(&mf, link.q, &link.preamble, echo.delay, link.ts, opts.gate)
                        }
                        StatSource::CefPeak => {
                            let cap = link.synchronize(first, &mf)?;
                            let block = cap.block(&link, &src, echoes, var, STF_LEN, 2 * 512, 0, rng)?;
                            Ok(cef_statistic(&CefEstimator::new(&link.preamble).estimate(&block, 0)?))
                        }
                    }
                };
                let h1 = statistic(&[echo], rng)?;
                let h0 = statistic(&[], rng)?;
                Ok((h1, h0))
            })?;
            Ok((threshold, stats))
        })();
        let Some((threshold, stats)) = point_or_error(&mut table, &p, spec.trials, res) else { continue };
        let n = stats.len();
        let (pd, pd_hw) = proportion(stats.iter().filter(|s| s.0 > threshold).count(), n);
        let (fa, fa_hw) = proportion(stats.iter().filter(|s| s.1 > threshold).count(), n);
        let h1: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let (mean, mean_w) = mean_hw(&h1);
        table.push(&p, "pd", pd, n, pd_hw);
        table.push(&p, "pfa_empirical", fa, n, fa_hw);
        table.push(&p, "threshold", threshold, n, 0.0);
        table.push(&p, "mean_statistic", mean, n, mean_w);
    }
    table
}

fn run_range(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let sc = &spec.scenario;
    let p_train = match sc.sync.fine {
        FineTiming::Cef => 2 * 512,
        FineTiming::Stf | FineTiming::PhaseBoundary => SINGLE_FRAME_P,
    };
    for (i, &z) in spec.sweep.scnr_db.iter().enumerate() {
        let p = Point::new("scnr_db", z);
        let res = (|| {
            let link = Link::new(sc, sc.k)?;
            let var = link.sample_variance_for_scnr(z)?;
            let errs = trials(spec, i, |_, rng| {
                let target = jittered(&sc.targets[0], link.ts, sc.jitter_range, rng);
                let src = link.source(1, rng.random())?;
                let echo = link.unit_echo(&target, rng);
                let cap = link.capture(&src, &[echo], var, rng)?;
                let fine = cap.range(&link) - target.range;
                // Detection index sits one short block into the STF plateau.
                let coarse = cap.timing.coarse_start.map(|c| {
                    let start = (cap.first_symbol + c as i64 - SHORT_LEN as i64) as f64 * link.ts;
                    C * start / 2.0 - target.range
                });
                Ok((fine, coarse))
            })?;
            Ok((crlb_range(db_to_lin(z), p_train, sc.crlb_bandwidth)?, errs))
        })();
        let Some((bound, errs)) = point_or_error(&mut table, &p, spec.trials, res) else { continue };
        let n = errs.len();
        let fine: Vec<f64> = errs.iter().map(|e| e.0).collect();
        let coarse: Vec<f64> = errs.iter().filter_map(|e| e.1).collect();
        let (mse, hw) = mse_hw(&fine);
        let (bias, bias_hw) = mean_hw(&fine);
        table.push(&p, "mse_m2", mse, n, hw);
        table.push(&p, "bias_m", bias, n, bias_hw);
        table.push(&p, "crlb_m2", bound, n, 0.0);
        let (det, det_hw) = proportion(coarse.len(), n);
        table.push(&p, "coarse_detect_rate", det, n, det_hw);
        if !coarse.is_empty() {
            let (cm, chw) = mse_hw(&coarse);
            table.push(&p, "coarse_mse_m2", cm, coarse.len(), chw);
        }
    }
    table
}

/// Velocity estimate from frame-0 timing and the training blocks of every frame.
#[allow(clippy::too_many_arguments)]
fn estimate_velocity(
    link: &Link,
    cap: &Capture,
    src: &CpiSymbols,
    echoes: &[Echo],
    var: f64,
    m: usize,
    mode: VelocityMode,
    p_train: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let doppler = if m == 1 || mode == VelocityMode::SingleFrame {
        let block = cap.block(link, src, echoes, var, 0, SINGLE_FRAME_P, 0, rng)?;
        moose_single_frame(&block, SINGLE_FRAME_ND, link.ts)?
    } else {
        let blocks =
            (0..m).map(|f| cap.block(link, src, echoes, var, 0, p_train, f, rng)).collect::<Result<Vec<_>>>()?;
        moose_multi_frame(&blocks, link.k, link.ts)?
    };
    Ok(doppler_to_velocity(doppler, link.wavelength))
}

fn training_len(t: Training) -> usize {
    match t {
        Training::Preamble => PREAMBLE_LEN,
        Training::Stf => SINGLE_FRAME_P,
    }
}

fn run_velocity(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let sc = &spec.scenario;
    let opts = spec.velocity;
    let single = opts.mode == VelocityMode::SingleFrame || sc.m == 1;
    let p_train = if single { SINGLE_FRAME_P } else { training_len(opts.training) };
    for (i, &z) in spec.sweep.scnr_db.iter().enumerate() {
        let p = Point::new("scnr_db", z);
        let res = (|| {
            let link = Link::new(sc, sc.k)?;
            let var = link.sample_variance_for_scnr(z)?;
            let zeta = db_to_lin(z);
            let bounds = if single {
                vec![
                    ("crlb_eq26", crlb_velocity_single(zeta, p_train, link.ts, link.wavelength)?),
                    (
                        "crlb_exact",
                        crlb_velocity_exact_contiguous(
                            link.symbol_snr(zeta),
                            p_train,
                            1,
                            sc.k,
                            link.ts,
                            link.wavelength,
                        )?,
                    ),
                ]
            } else {
                vec![
                    ("crlb_eq27", crlb_velocity_multi(zeta, p_train, sc.m, sc.k, link.ts, link.wavelength)?),
                    (
                        "crlb_exact",
                        crlb_velocity_exact_contiguous(
                            link.symbol_snr(zeta),
                            p_train,
                            sc.m,
                            sc.k,
                            link.ts,
                            link.wavelength,
                        )?,
                    ),
                ]
            };
            let errs = trials(spec, i, |_, rng| {
                let (src, echo) = single_target(spec, &link, sc.m, rng)?;
                let cap = link.capture(&src, &[echo], var, rng)?;
                let v = estimate_velocity(&link, &cap, &src, &[echo], var, sc.m, opts.mode, p_train, rng)?;
                Ok(v - sc.targets[0].velocity)
            })?;
            Ok((bounds, errs))
        })();
        let Some((bounds, errs)) = point_or_error(&mut table, &p, spec.trials, res) else { continue };
        let n = errs.len();
        let (mse, hw) = mse_hw(&errs);
        let (bias, bias_hw) = mean_hw(&errs);
        table.push(&p, "mse_m2s2", mse, n, hw);
        table.push(&p, "bias_mps", bias, n, bias_hw);
        for (name, v) in bounds {
            table.push(&p, name, v, n, 0.0);
        }
    }
    table
}

fn run_tradeoff(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let sc = &spec.scenario;
    let lb = &sc.link;
    let z = spec.velocity.tradeoff_scnr_db;
    let mut point = 0;
    for &cpi in &spec.sweep.cpi {
        for &m in &spec.sweep.frames {
            let p = Point::new("cpi_s", cpi).with_y("frames", m as f64);
            point += 1;
            let res = (|| {
                let ts = sc.ts();
                let n_sym = (cpi / ts).round() as usize;
                let k = n_sym.checked_div(m).unwrap_or(0);
                if k < PREAMBLE_LEN + sc.header_len {
                    return Err(Error::Infeasible(format!(
                        "{m} frames of {k} symbols cannot carry the {PREAMBLE_LEN}-symbol preamble and {}-symbol header",
                        sc.header_len
                    )));
                }
                let k_cd = k - PREAMBLE_LEN - sc.header_len;
                let link = Link::new(sc, k)?;
                let var = link.sample_variance_for_scnr(z)?;
                let target = sc.targets[0];
                let beams = select_beams(
                    &sc.array,
                    &DftCodebook::for_array(&sc.array),
                    target.azimuth_deg,
                    target.elevation_deg,
                )?;
                let tx_mw = db_to_lin(lb.tx_power_dbm());
                let noise_mw = lb.noise_floor_mw();
                let zeta = db_to_lin(z);
                let bound = if m == 1 {
                    crlb_velocity_exact_contiguous(link.symbol_snr(zeta), SINGLE_FRAME_P, 1, k, ts, link.wavelength)?
                } else {
                    crlb_velocity_exact_contiguous(link.symbol_snr(zeta), PREAMBLE_LEN, m, k, ts, link.wavelength)?
                };
                let out = trials(spec, point - 1, |_, rng| {
                    let (src, echo) = single_target(spec, &link, m, rng)?;
                    let cap = link.capture(&src, &[echo], var, rng)?;
                    let v = estimate_velocity(
                        &link,
                        &cap,
                        &src,
                        &[echo],
                        var,
                        m,
                        VelocityMode::MultiFrame,
                        PREAMBLE_LEN,
                        rng,
                    )?;
                    let comm = CommLink {
                        array: sc.array,
                        beams: beams.clone(),
                        azimuth_deg: target.azimuth_deg,
                        elevation_deg: target.elevation_deg,
                        path_gain: comm_path_gain(lb.wavelength, sc.comm_distance, lb.pl_exponent),
                        rician_k: db_to_lin(lb.rician_k_db),
                        doppler: target.velocity / link.wavelength,
                        frame_interval: k as f64 * ts,
                        alpha0: random_phase(rng),
                    };
                    let snr: Vec<f64> =
                        (0..m).map(|f| tx_mw * comm.coefficient(f, rng).norm_sqr() / noise_mw).collect();
                    Ok((v - target.velocity, data_rate(m, k_cd, ts, cpi, &snr)?))
                })?;
                Ok((k, k_cd, bound, out))
            })();
            let Some((k, k_cd, bound, out)) = point_or_error(&mut table, &p, spec.trials, res) else { continue };
            let n = out.len();
            let errs: Vec<f64> = out.iter().map(|o| o.0).collect();
            let rates: Vec<f64> = out.iter().map(|o| o.1).collect();
            let (mse, hw) = mse_hw(&errs);
            let rmse = mse.sqrt();
            let (rate, rate_hw) = mean_hw(&rates);
            table.push(&p, "frame_symbols", k as f64, n, 0.0);
            table.push(&p, "data_symbols", k_cd as f64, n, 0.0);
            table.push(&p, "velocity_mse_m2s2", mse, n, hw);
            table.push(&p, "velocity_rmse_mps", rmse, n, if rmse > 0.0 { hw / (2.0 * rmse) } else { 0.0 });
            table.push(&p, "crlb_exact", bound, n, 0.0);
            table.push(&p, "data_rate_bps", rate, n, rate_hw);
        }
    }
    table
}

fn run_linkbudget(spec: &ExperimentSpec) -> Result<ResultTable> {
    let mut table = ResultTable::default();
    for &pl in &spec.sweep.pl_exponents {
        let lb = crate::airlink::budget::LinkBudget { pl_exponent: pl, ..spec.scenario.link };
        for pt in link_budget_sweep(&lb, &spec.sweep.distances)? {
            let p = Point::new("distance_m", pt.distance).with_y("pl_exponent", pl);
            table.push(&p, "comm_snr_db", pt.comm_snr_db, 1, 0.0);
            table.push(&p, "radar_scnr_db", pt.radar_scnr_db, 1, 0.0);
        }
    }
    Ok(table)
}

fn run_crlb(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let sc = &spec.scenario;
    let (ts, lambda) = (sc.ts(), sc.wavelength);
    for &z in &spec.sweep.scnr_db {
        let p = Point::new("scnr_db", z);
        let zeta = db_to_lin(z);
        let rows = (|| {
            Ok::<_, Error>(vec![
                ("crlb_range_stf_m2", crlb_range(zeta, SINGLE_FRAME_P, sc.crlb_bandwidth)?),
                ("crlb_range_cef_m2", crlb_range(zeta, 2 * 512, sc.crlb_bandwidth)?),
                ("crlb_velocity_eq26_m2s2", crlb_velocity_single(zeta, SINGLE_FRAME_P, ts, lambda)?),
                ("crlb_velocity_eq27_m2s2", crlb_velocity_multi(zeta, PREAMBLE_LEN, sc.m, sc.k, ts, lambda)?),
                (
                    "crlb_velocity_exact_m2s2",
                    crlb_velocity_exact_contiguous(zeta, PREAMBLE_LEN, sc.m, sc.k, ts, lambda)?,
                ),
            ])
        })();
        let Some(rows) = point_or_error(&mut table, &p, 1, rows) else { continue };
        for (name, v) in rows {
            table.push(&p, name, v, 1, 0.0);
        }
    }
    table
}

fn run_ambiguity(spec: &ExperimentSpec) -> Result<ResultTable> {
    let opts = spec.ambiguity;
    let ts = spec.scenario.ts();
    let pair = generate_golay_pair(opts.length)?;
    let (a, b) = (pair.a.to_complex(), pair.b.to_complex());
    let concat = GolaySeq::concat(&[&pair.a, &pair.b]).to_complex();
    let lags: Vec<i64> = (-(opts.max_lag as i64)..=opts.max_lag as i64).collect();
    let dopplers: Vec<f64> = if opts.doppler_points <= 1 {
        vec![0.0]
    } else {
        let step = 2.0 * opts.doppler_max / (opts.doppler_points - 1) as f64;
        (0..opts.doppler_points).map(|i| -opts.doppler_max + step * i as f64).collect()
    };
    let af_pair = pair_ambiguity(&a, &b, &lags, &dopplers, ts)?;
    let af_concat = ambiguity_function(&concat, &lags, &dopplers, ts)?;
    let mut table = ResultTable::default();
    for (i, &lag) in lags.iter().enumerate() {
        for (j, &nu) in dopplers.iter().enumerate() {
            let p = Point::new("lag", lag as f64).with_y("doppler_hz", nu);
            table.push(&p, "af_pair", af_pair[i][j], 1, 0.0);
            table.push(&p, "af_concat", af_concat[i][j], 1, 0.0);
        }
    }
    Ok(table)
}

/// Channel estimates of every frame of the CPI from the frame-0 timing.
fn channel_estimates(
    link: &Link,
    cap: &Capture,
    src: &CpiSymbols,
    echoes: &[Echo],
    var: f64,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelEstimateMatrix> {
    let est = CefEstimator::new(&link.preamble);
    let rows = (0..m)
        .map(|f| {
            let block = cap.block(link, src, echoes, var, STF_LEN, 2 * 512, f, rng)?;
            est.estimate(&block, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let origin = cap.delay(link) / link.ts - CEF_PEAK_BIN as f64;
    ChannelEstimateMatrix::new(rows, origin)
}

fn run_ddmap(spec: &ExperimentSpec) -> ResultTable {
    let mut table = ResultTable::default();
    let sc = &spec.scenario;
    let opts = &spec.ddmap;
    let res = (|| {
        let link = Link::new(sc, sc.k)?;
        let lead = sc.targets[0];
        let beams = select_beams(&sc.array, &DftCodebook::for_array(&sc.array), lead.azimuth_deg, lead.elevation_deg)?;
        let tx_mw = db_to_lin(sc.link.tx_power_dbm());
        let var = link.sample_variance_for_noise(sc.link.noise_floor_mw())?;
        let occupied = sc.rrc.occupied_bandwidth(sc.symbol_rate);
        let (dr, dv) = resolutions(occupied, sc.m as f64 * sc.k as f64 * link.ts, sc.wavelength)?;
        let out = trials(spec, 0, |t, rng| {
            let src = link.source(sc.m, rng.random())?;
            let echoes = echoes_from_targets(&sc.targets, tx_mw, &sc.array, &beams, rng)?;
            let cap = link.capture(&src, &echoes, var, rng)?;
            let h = channel_estimates(&link, &cap, &src, &echoes, var, sc.m, rng)?;
            let map = build_delay_doppler_map(&h, opts.zero_pad, sc.k, link.ts)?;
            let hits = detect_targets_map(&map, map.background_variance(var), opts.pfa, link.wavelength)?;
            if t == 0 {
                if let Some(path) = &opts.map_csv {
                    write_map_csv(
                        path,
                        &map,
                        &hits.iter().map(|d| d.delay_bin).collect::<Vec<_>>(),
                        opts.map_margin,
                        link.wavelength,
                    )?;
                }
            }
            let mut rows = vec![
                ("sync_delay_symbols".to_string(), cap.delay(&link) / link.ts),
                ("detections".to_string(), hits.len() as f64),
            ];
            let strongest = hits.first().map(|d| d.power).unwrap_or(1.0);
            for (i, d) in hits.iter().enumerate() {
                let col = d.doppler_bin.rem_euclid(map.doppler_bins() as i64) as usize;
                rows.extend([
                    (format!("target{i}.delay_bin"), d.delay_symbols.round()),
                    (format!("target{i}.delay_symbols"), d.delay_symbols),
                    (format!("target{i}.range_m"), d.range),
                    (format!("target{i}.velocity_mps"), d.velocity),
                    (format!("target{i}.relative_power_db"), lin_to_db(d.power / strongest)),
                    (format!("target{i}.delay_3db_bins"), map.delay_width_3db(d.delay_bin, col)),
                    (
                        format!("target{i}.doppler_3db_bins"),
                        map.doppler_width_3db(d.delay_bin, col) / map.zero_pad() as f64,
                    ),
                    (format!("target{i}.velocity_3db_mps"), map.velocity_width_3db(d.delay_bin, col, link.wavelength)),
                ]);
            }
            Ok(rows)
        })?;
        Ok((dr, dv, out))
    })();
    let p0 = Point::new("trial", 0.0);
    let Some((dr, dv, out)) = point_or_error(&mut table, &p0, spec.trials, res) else { return table };
    table.push(&p0, "range_resolution_m", dr, 1, 0.0);
    table.push(&p0, "velocity_resolution_mps", dv, 1, 0.0);
    for (t, rows) in out.into_iter().enumerate() {
        let p = Point::new("trial", t as f64);
        for (name, v) in rows {
            table.push(&p, &name, v, 1, 0.0);
        }
    }
    table
}

/// Map magnitude in dB over the delay rows around `rows` (or around the
/// strongest cell when `rows` is empty).
pub fn write_map_csv(path: &Path, map: &DelayDopplerMap, rows: &[usize], margin: usize, wavelength: f64) -> Result<()> {
    let centres: Vec<usize> = if rows.is_empty() { vec![map.peak().0] } else { rows.to_vec() };
    let lo = centres.iter().min().copied().unwrap_or(0).saturating_sub(margin);
    let hi = (centres.iter().max().copied().unwrap_or(0) + margin).min(map.delay_bins() - 1);
    let peak = map.peak().2.max(f64::MIN_POSITIVE);
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["delay_symbols", "range_m", "doppler_bin", "velocity_mps", "magnitude_db"])?;
    let n = map.doppler_bins();
    for l in lo..=hi {
        // Columns in ascending signed order, negative Doppler first.
        for c in (n / 2..n).chain(0..n / 2) {
            let mag: Complex64 = map.cell(l, c);
            w.write_record([
                fmt_sig9(map.delay_symbols(l)),
                fmt_sig9(map.range(l)),
                map.signed_bin(c).to_string(),
                fmt_sig9(map.velocity(c, wavelength)),
                fmt_sig9(lin_to_db(mag.norm_sqr() / peak)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
