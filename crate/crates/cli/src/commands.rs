use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use arspi_core::analysis::write_events_csv;
use arspi_core::ingest::parse_mtr_csv;
use arspi_core::mcmc::psrf;
use arspi_core::{
    acf, arspi_series, dic, extract_events, format_f64, mismatch, moving_total, pacf, parse_precip_csv, return_period,
    run_chains, simulate_series, spi_series, spi_series_by_month, ArspiParams, Characteristic, IndexKind, IndexSeries,
    McmcConfig, MismatchKind, MtrSeries, Param, Pi0, PosteriorDraws, PredictiveConfig, PriorConfig, Rng, YearMonth,
};

use crate::config::ConfigFile;
use crate::svg::{line_plot, Series};
use crate::{meta, ArspiCommand, Cli, Command, DataArgs, SimulateArgs, UsageError};

const DEFAULT_WINDOW: usize = 3;
const DEFAULT_THRESHOLDS: [f64; 3] = [-1.0, -1.5, -2.0];
const RETURN_LEVEL_QUANTILES: [f64; 3] = [0.5, 0.75, 0.9];

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Spi { data, per_month } => {
            let per_month = per_month || cfg.pick_opt::<bool>(None, "per_month")?.unwrap_or(false);
            cmd_spi(&cfg, &data, per_month)
        }
        Command::Arspi {
            command: ArspiCommand::Fit { data, chains, iterations, burn_in, thin, seed, alpha_variance },
        } => {
            let d = McmcConfig::default();
            let mcmc = McmcConfig {
                n_chains: cfg.pick(chains, "chains", d.n_chains)?,
                iterations: cfg.pick(iterations, "iterations", d.iterations)?,
                burn_in: cfg.pick(burn_in, "burn_in", d.burn_in)?,
                thin: cfg.pick(thin, "thin", d.thin)?,
                base_seed: cfg.pick(seed, "seed", d.base_seed)?,
                prior: PriorConfig {
                    alpha_variance: cfg.pick(alpha_variance, "alpha_variance", d.prior.alpha_variance)?,
                },
                ..d
            };
            mcmc.validate().map_err(|e| UsageError(e.to_string()))?;
            cmd_arspi_fit(&cfg, &data, &mcmc)
        }
        Command::Arspi { command: ArspiCommand::Index { data, posterior, m, seed } } => {
            let d = PredictiveConfig::default();
            let pcfg = PredictiveConfig { m: cfg.pick(m, "m", d.m)?, seed: cfg.pick(seed, "seed", d.seed)? };
            if pcfg.m == 0 {
                return Err(UsageError("m must be at least 1".into()).into());
            }
            cmd_arspi_index(&cfg, &data, cfg.path(posterior, "posterior"), &pcfg)
        }
        Command::Analyze { window, out_dir, spi, arspi, thresholds } => {
            let window = cfg.pick(window, "window", DEFAULT_WINDOW)?;
            let out = out_dir_of(&cfg, out_dir)?;
            let thresholds = cfg.thresholds(thresholds, &DEFAULT_THRESHOLDS)?;
            let spi = spi.unwrap_or_else(|| out.join(format!("spi_{window}.csv")));
            let arspi = arspi.unwrap_or_else(|| out.join(format!("arspi_{window}.csv")));
            cmd_analyze(window, &out, &spi, &arspi, &thresholds)
        }
        Command::Simulate(args) => cmd_simulate(&cfg, args),
        Command::Acf { data, max_lag, log } => {
            let max_lag = cfg.pick(max_lag, "max_lag", 36)?;
            cmd_acf(&cfg, &data, max_lag, log)
        }
    }
}

fn out_dir_of(cfg: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = cfg.path(flag, "out_dir").unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

struct Loaded {
    window: usize,
    out: PathBuf,
    mtr: MtrSeries,
    input_sha256: String,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(cfg: &ConfigFile, data: &DataArgs) -> Result<Loaded> {
    let window = cfg.pick(data.window, "window", DEFAULT_WINDOW)?;
    if window == 0 {
        return Err(UsageError("window must be at least 1".into()).into());
    }
    let out = out_dir_of(cfg, data.out_dir.clone())?;
    let (bytes, mtr) = if let Some(p) = cfg.path(data.mtr.clone(), "mtr") {
        let bytes = read_file(&p)?;
        let mtr = parse_mtr_csv(bytes.as_slice(), window).with_context(|| format!("reading {}", p.display()))?;
        (bytes, mtr)
    } else if let Some(p) = cfg.path(data.input.clone(), "input") {
        let bytes = read_file(&p)?;
        let precip = parse_precip_csv(bytes.as_slice()).with_context(|| format!("reading {}", p.display()))?;
        (bytes, moving_total(&precip, window)?)
    } else {
        return Err(UsageError("one of --input or --mtr is required".into()).into());
    };
    Ok(Loaded { window, out, mtr, input_sha256: meta::sha256_hex(&bytes) })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn fractional_years(index: &IndexSeries) -> Vec<f64> {
    index.records().iter().map(|r| r.month.year as f64 + (r.month.month as f64 - 1.0) / 12.0).collect()
}

fn index_plot(title: &str, series: &[(&str, &IndexSeries)]) -> String {
    let xs: Vec<Vec<f64>> = series.iter().map(|(_, s)| fractional_years(s)).collect();
    let ys: Vec<Vec<f64>> = series.iter().map(|(_, s)| s.values()).collect();
    let lines: Vec<Series> =
        series.iter().zip(xs.iter().zip(&ys)).map(|((label, _), (x, y))| Series { label, x, y }).collect();
    line_plot(title, "year", "index", &lines)
}

fn index_csv(index: &IndexSeries) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    index.write_csv(&mut buf)?;
    Ok(buf)
}

fn cmd_spi(cfg: &ConfigFile, data: &DataArgs, per_month: bool) -> Result<()> {
    let l = load(cfg, data)?;
    let spi = if per_month { spi_series_by_month(&l.mtr)? } else { spi_series(&l.mtr)? };
    write_bytes(&l.out.join(format!("spi_{}.csv", l.window)), &index_csv(&spi)?)?;
    let svg = index_plot(&format!("SPI, {}-month moving totals", l.window), &[("SPI", &spi)]);
    write_bytes(&l.out.join(format!("spi_{}.svg", l.window)), svg.as_bytes())
}

fn summary_text(window: usize, mcmc: &McmcConfig, draws: &PosteriorDraws, mtr: &MtrSeries) -> Result<String> {
    let mut s = String::new();
    s.push_str(&format!("ARSPI posterior summary, window {window}\n"));
    s.push_str(&format!(
        "chains {}, iterations {}, burn-in {}, thin {}, seed {}, retained {}\n\n",
        mcmc.n_chains,
        mcmc.iterations,
        mcmc.burn_in,
        mcmc.thin,
        mcmc.base_seed,
        draws.total()
    ));
    s.push_str(&format!("{:<12}{:>14}{:>14}{:>10}{:>12}\n", "parameter", "mean", "sd", "psrf", "acceptance"));
    let mean = draws.mean()?;
    for p in Param::ALL {
        let r = psrf(draws, p).map(|v| format!("{v:.4}")).unwrap_or_else(|_| "NA".into());
        let acc: f64 =
            draws.chains.iter().map(|c| c.acceptance.get(p.index()).copied().unwrap_or(f64::NAN)).sum::<f64>()
                / draws.chains.len() as f64;
        s.push_str(&format!("{:<12}{:>14.6}{:>14.6}{:>10}{:>12.4}\n", p.name(), p.get(&mean), draws.sd(p)?, r, acc));
    }
    let d = dic(draws, mtr, Pi0::for_series(mtr))?;
    s.push_str("\nDIC\n");
    s.push_str(&format!("{:<8}{:>16}{:>16}{:>12}{:>16}\n", "window", "d_bar", "d_at_mean", "p_d", "dic"));
    s.push_str(&format!("{:<8}{:>16.4}{:>16.4}{:>12.4}{:>16.4}\n", window, d.d_bar, d.d_at_mean, d.p_d, d.dic));
    Ok(s)
}

fn cmd_arspi_fit(cfg: &ConfigFile, data: &DataArgs, mcmc: &McmcConfig) -> Result<()> {
    let l = load(cfg, data)?;
    let draws = run_chains(&l.mtr, mcmc)?;

    let mut posterior = Vec::new();
    draws.write_csv(&mut posterior)?;
    let path = l.out.join(format!("posterior_{}.csv", l.window));
    write_bytes(&path, &posterior)?;
    meta::write(
        &meta::sidecar_path(&path),
        &[
            ("window", l.window.to_string()),
            ("chains", mcmc.n_chains.to_string()),
            ("iterations", mcmc.iterations.to_string()),
            ("burn_in", mcmc.burn_in.to_string()),
            ("thin", mcmc.thin.to_string()),
            ("seed", mcmc.base_seed.to_string()),
            ("alpha_variance", format_f64(mcmc.prior.alpha_variance)),
            ("input_sha256", l.input_sha256.clone()),
            ("sha256", meta::sha256_hex(&posterior)),
        ],
    )?;

    let mut trace = create(&l.out.join(format!("trace_{}.csv", l.window)))?;
    draws.write_traces(&mut trace)?;
    let summary = summary_text(l.window, mcmc, &draws, &l.mtr)?;
    write_bytes(&l.out.join(format!("summary_{}.txt", l.window)), summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}

fn cmd_arspi_index(
    cfg: &ConfigFile,
    data: &DataArgs,
    posterior: Option<PathBuf>,
    pcfg: &PredictiveConfig,
) -> Result<()> {
    let l = load(cfg, data)?;
    let post_path = posterior.unwrap_or_else(|| l.out.join(format!("posterior_{}.csv", l.window)));
    let bytes = read_file(&post_path)?;
    meta::verify(&post_path, &bytes)?;
    let draws =
        PosteriorDraws::read_csv(bytes.as_slice()).with_context(|| format!("reading {}", post_path.display()))?;

    let arspi = arspi_series(&draws, &l.mtr, pcfg)?;
    let csv = index_csv(&arspi)?;
    let path = l.out.join(format!("arspi_{}.csv", l.window));
    write_bytes(&path, &csv)?;
    meta::write(
        &meta::sidecar_path(&path),
        &[
            ("window", l.window.to_string()),
            ("m", pcfg.m.to_string()),
            ("seed", pcfg.seed.to_string()),
            ("epsilon", format_f64(pcfg.epsilon())),
            ("posterior", post_path.display().to_string()),
            ("posterior_sha256", meta::sha256_hex(&bytes)),
            ("sha256", meta::sha256_hex(&csv)),
        ],
    )?;
    let svg = index_plot(&format!("ARSPI, {}-month moving totals", l.window), &[("ARSPI", &arspi)]);
    write_bytes(&l.out.join(format!("arspi_{}.svg", l.window)), svg.as_bytes())?;

    let spi_path = l.out.join(format!("spi_{}.csv", l.window));
    if spi_path.exists() {
        let spi = IndexSeries::read_csv(read_file(&spi_path)?.as_slice(), l.window)
            .with_context(|| format!("reading {}", spi_path.display()))?;
        let svg = index_plot(
            &format!("SPI and ARSPI, {}-month moving totals", l.window),
            &[("SPI", &spi), ("ARSPI", &arspi)],
        );
        write_bytes(&l.out.join(format!("compare_{}.svg", l.window)), svg.as_bytes())?;
    }
    Ok(())
}

/// Linear-interpolation sample quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn read_index(path: &Path, window: usize, kind: IndexKind) -> Result<IndexSeries> {
    let index = IndexSeries::read_csv(read_file(path)?.as_slice(), window)
        .with_context(|| format!("reading {}", path.display()))?;
    if index.kind() != kind {
        return Err(UsageError(format!("{} does not hold a {} column", path.display(), kind.column())).into());
    }
    Ok(index)
}

fn cmd_analyze(window: usize, out: &Path, spi_path: &Path, arspi_path: &Path, thresholds: &[f64]) -> Result<()> {
    let spi = read_index(spi_path, window, IndexKind::Spi)?;
    let arspi = read_index(arspi_path, window, IndexKind::Arspi)?;

    let report = mismatch(&spi, &arspi)?;
    report.write_csv(create(&out.join(format!("mismatch_{window}.csv")))?)?;
    let mut summary =
        String::from("window,aligned,type1_count,type1_rate_pct,type2_count,type2_rate_pct,total_rate_pct\n");
    summary.push_str(&format!(
        "{window},{},{},{},{},{},{}\n",
        report.aligned_len,
        report.count(MismatchKind::Type1),
        format_f64(100.0 * report.rate(MismatchKind::Type1)),
        report.count(MismatchKind::Type2),
        format_f64(100.0 * report.rate(MismatchKind::Type2)),
        format_f64(100.0 * report.total_rate()),
    ));
    write_bytes(&out.join(format!("mismatch_summary_{window}.csv")), summary.as_bytes())?;

    for (name, index) in [("spi", &spi), ("arspi", &arspi)] {
        for &thr in thresholds {
            let events = extract_events(index, thr);
            let tag = format!("{name}_{window}_{}", format_f64(thr));
            write_events_csv(&events, create(&out.join(format!("events_{tag}.csv")))?)?;

            let mut table = String::from("characteristic,level,return_years\n");
            if !events.is_empty() {
                for c in Characteristic::ALL {
                    let mut vals: Vec<f64> = events.iter().map(|e| e.characteristic(c)).collect();
                    vals.sort_by(f64::total_cmp);
                    for q in RETURN_LEVEL_QUANTILES {
                        let level = quantile(&vals, q);
                        let t = return_period(&events, c, level, index.years())?;
                        table.push_str(&format!("{},{},{t}\n", c.as_str(), format_f64(level)));
                    }
                }
            }
            write_bytes(&out.join(format!("return_periods_{tag}.csv")), table.as_bytes())?;
        }
    }
    print!("{summary}");
    Ok(())
}

/// Posterior means for the 3-month window reported with the original analysis.
const TABLE3_3MTR: [f64; 5] = [0.3756, 0.7220, 0.4411, -6.8149, 0.0026];

fn cmd_simulate(cfg: &ConfigFile, a: SimulateArgs) -> Result<()> {
    let [b1, b2, s, al, ph] = TABLE3_3MTR;
    let p = ArspiParams::new(
        a.beta1.unwrap_or(b1),
        a.beta2.unwrap_or(b2),
        a.sigma.unwrap_or(s),
        a.alpha.unwrap_or(al),
        a.phi.unwrap_or(ph),
    );
    p.validate().map_err(|e| UsageError(e.to_string()))?;
    let window = cfg.pick(a.window, "window", DEFAULT_WINDOW)?;
    let seed = cfg.pick(a.seed, "seed", 1u64)?;
    let out = out_dir_of(cfg, a.out_dir)?;
    if window == 0 {
        return Err(UsageError("window must be at least 1".into()).into());
    }
    let pi0 = a.pi0.unwrap_or_else(|| p.stationary_pi().clamp(1e-12, 1.0 - 1e-12));
    let r0 = a.r0.unwrap_or_else(|| (p.beta1 / (1.0 - p.beta2)).exp());
    let sim = simulate_series(&p, a.length, pi0, r0, &mut Rng::new(seed))?;
    let start = YearMonth::new(1893, 1)?.offset(window - 1);
    let mtr = MtrSeries::from_totals(window, window - 1, start, sim.values().to_vec())?;

    mtr.write_csv(create(&out.join(format!("simulated_{window}.csv")))?)?;
    p.write_csv(create(&out.join(format!("truth_{window}.csv")))?)?;
    Ok(())
}

fn cmd_acf(cfg: &ConfigFile, data: &DataArgs, max_lag: usize, log: bool) -> Result<()> {
    let l = load(cfg, data)?;
    let values: Vec<f64> = if log { l.mtr.encoded().iter().map(|v| v.ln()).collect() } else { l.mtr.values().to_vec() };
    let a = acf(&values, max_lag)?;
    let p = pacf(&values, max_lag)?;
    a.write_csv(create(&l.out.join(format!("acf_{}.csv", l.window)))?)?;
    p.write_csv(create(&l.out.join(format!("pacf_{}.csv", l.window)))?)?;
    let lags: Vec<f64> = (0..=max_lag).map(|k| k as f64).collect();
    let band_hi = vec![a.confidence_band; lags.len()];
    let band_lo = vec![-a.confidence_band; lags.len()];
    let svg = line_plot(
        &format!("ACF and PACF, {}-month moving totals", l.window),
        "lag",
        "coefficient",
        &[
            Series { label: "ACF", x: &lags, y: &a.coefficients },
            Series { label: "PACF", x: &lags, y: &p.coefficients },
            Series { label: "+band", x: &lags, y: &band_hi },
            Series { label: "-band", x: &lags, y: &band_lo },
        ],
    );
    write_bytes(&l.out.join(format!("acf_{}.svg", l.window)), svg.as_bytes())
}
