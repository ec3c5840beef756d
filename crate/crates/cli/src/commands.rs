use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bifractal::asymptotics::asymptotic_law_with;
use bifractal::montecarlo::{full_n_list, write_rows, NSummary, FULL_REPS};
use bifractal::{
    check_matern_validity, estimate_path, gls_weights, local_expansion, matern_rate_exponents,
    ols_weights, phi0_matrix, rate_exponents, run_experiment, trajectory_dimension,
    CovarianceModel, EstimatorKind, ExperimentConfig, GaussianSampler, LocalExpansion, SamplePath,
    SeedSpec, Validity, WeightVector,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::exit::CliError;
use crate::figures;

/// Spectral grid used by the validity report.
const FREQ_GRID: usize = 512;

fn build_model(config: &RunConfig) -> Result<CovarianceModel, CliError> {
    Ok(CovarianceModel::matern(config.model.params())?)
}

fn case_label(exp: &LocalExpansion) -> &'static str {
    if exp.is_equality_case() {
        "equality"
    } else {
        "strict"
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialising {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

/// Up to ten decimals, trailing zeros dropped.
fn short(v: f64) -> String {
    let s = format!("{v:.10}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn validate(config_path: &Path) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let params = config.model.params();
    println!(
        "model: matern nu = ({}, {}, {}), a = ({}, {}, {}), sigma = ({}, {}), rho = {}",
        params.nu11,
        params.nu22,
        params.nu12,
        params.a11,
        params.a22,
        params.a12,
        params.sigma1,
        params.sigma2,
        params.rho
    );
    let mut valid = true;
    match local_expansion(&params) {
        Ok(exp) => {
            println!(
                "local expansion: c11 = {:.6}, c22 = {:.6}, c12 = {:.6}",
                exp.c11, exp.c22, exp.c12
            );
            println!(
                "                 alpha = ({}, {}, {}), beta = ({}, {}, {})",
                short(exp.alpha11),
                short(exp.alpha22),
                short(exp.alpha12),
                short(exp.beta11),
                short(exp.beta22),
                short(exp.beta12)
            );
            println!("expansion verdict: valid ({} case)", case_label(&exp));
        }
        Err(e) => {
            valid = false;
            println!("expansion verdict: invalid ({e})");
        }
    }
    match check_matern_validity(&params, FREQ_GRID) {
        Ok(Validity::Valid) => println!("spectral verdict: valid"),
        Ok(Validity::Invalid(reason)) => {
            valid = false;
            println!("spectral verdict: invalid ({reason})");
        }
        Err(e) => {
            valid = false;
            println!("spectral verdict: invalid ({e})");
        }
    }
    match trajectory_dimension(2.0 * params.nu11, 2.0 * params.nu22) {
        Ok(d) => println!("trajectory dimension: {d:.4}"),
        Err(e) => println!("trajectory dimension: undefined ({e})"),
    }
    if valid {
        Ok(())
    } else {
        Err(CliError::InvalidModel(
            "model fails the validity checks".into(),
        ))
    }
}

fn sample_stats(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn simulate(
    config_path: &Path,
    n: usize,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let config = RunConfig::load(config_path)?;
    let model = build_model(&config)?;
    let seed = seed.unwrap_or_else(|| config.experiment.seed());
    let sampler = GaussianSampler::new(&model, n)?;
    // Replicate 0 of an experiment at this grid size and seed.
    let path = sampler.draw(SeedSpec::for_grid(seed, n, 0));
    let dir = config.output_dir(out);
    create_dir(&dir)?;
    let file = dir.join(format!("path_n{n}_seed{seed}.csv"));
    let mut w = BufWriter::new(File::create(&file)?);
    path.write_csv(&mut w)?;
    w.flush()?;

    let exp = model.expansion();
    println!("wrote {} ({n} rows)", file.display());
    println!("cholesky jitter: {:e}", sampler.jitter());
    for (i, (x, s2)) in [(&path.x1, exp.sigma1_sq), (&path.x2, exp.sigma2_sq)]
        .into_iter()
        .enumerate()
    {
        let (mean, var) = sample_stats(x);
        println!(
            "x{}: mean {mean:.4}, sample variance {var:.4} (model variance {s2})",
            i + 1
        );
    }
    Ok(file)
}

pub fn estimate(
    csv: &Path,
    m: Option<usize>,
    kind: EstimatorKind,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let file = File::open(csv).map_err(|e| CliError::Config(format!("{}: {e}", csv.display())))?;
    let path = SamplePath::read_csv(BufReader::new(file))?;
    let m = m.unwrap_or_else(|| bifractal::default_m(path.n()));
    let record = estimate_path(&path, m, kind)?;
    let value = serde_json::to_value(&record)
        .map_err(|e| CliError::Config(format!("serialising estimate: {e}")))?;
    if let Some(dir) = out {
        create_dir(dir)?;
        let stem = csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "path".into());
        write_json(&dir.join(format!("{stem}_estimate.json")), &value)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("estimate serialises")
    );
    Ok(())
}

fn weights_for(kind: EstimatorKind, m: usize, n: usize, nu: f64) -> Result<WeightVector, CliError> {
    Ok(match kind {
        EstimatorKind::Ols => ols_weights(m)?,
        EstimatorKind::Gls => gls_weights(m, n, nu)?,
    })
}

pub struct AsymptoticsArgs<'a> {
    pub config: &'a Path,
    pub m: Option<usize>,
    pub kind: Option<EstimatorKind>,
    pub n: Option<usize>,
    pub out: Option<&'a Path>,
}

pub fn asymptotics(args: AsymptoticsArgs) -> Result<PathBuf, CliError> {
    let config = RunConfig::load(args.config)?;
    let model = build_model(&config)?;
    let exp = model.expansion();
    let m = args.m.unwrap_or_else(|| config.experiment.m());
    let kind = args.kind.unwrap_or_else(|| config.experiment.kind());
    let n = args
        .n
        .unwrap_or_else(|| config.experiment.n_list().into_iter().max().unwrap_or(1000));
    let w1 = weights_for(kind, m, n, exp.alpha11 / 2.0)?;
    let w2 = weights_for(kind, m, n, exp.alpha22 / 2.0)?;
    let phi = phi0_matrix(exp, m, config.experiment.tol());
    let law = asymptotic_law_with(exp, &w1, &w2, &phi)?;
    let rates = rate_exponents(exp);
    let matern_rates = matern_rate_exponents(exp);
    let weights = match kind {
        EstimatorKind::Ols => json!({ "kind": kind }),
        EstimatorKind::Gls => json!({ "kind": kind, "n": n, "plugin": "true nu" }),
    };
    let value = json!({
        "case": case_label(exp),
        "expansion": exp,
        "m": m,
        "weights": weights,
        "phi0": phi.to_json(),
        "law_alpha": law,
        "law_nu": law.nu_scale(),
        "rate_exponents": rates,
        "matern_rate_exponents": matern_rates,
    });
    let dir = config.output_dir(args.out);
    create_dir(&dir)?;
    let file = dir.join(format!("{}_asymptotics.json", config.case()));
    write_json(&file, &value)?;

    let c = law.covariance;
    println!("case: {}", case_label(exp));
    println!("limit covariance of sqrt(n)(alpha-hat - alpha), {kind} weights, m = {m}:");
    println!("  [[{:.6}, {:.6}],", c[0][0], c[0][1]);
    println!("   [{:.6}, {:.6}]]", c[1][0], c[1][1]);
    println!("  correlation {:.6}", law.correlation);
    println!(
        "phi0 truncation: max cutoff {}, max tail bound {:e} (tol {:e})",
        phi.max_cutoff, phi.max_tail_bound, phi.tol
    );
    println!(
        "rate exponents (generic): bias ({}, {}), mse ({}, {}), cross {}",
        short(rates.bias[0]),
        short(rates.bias[1]),
        short(rates.mse[0]),
        short(rates.mse[1]),
        short(rates.cross)
    );
    println!(
        "rate exponents (matern): bias ({}, {}), mse ({}, {}), cross {}",
        short(matern_rates.bias[0]),
        short(matern_rates.bias[1]),
        short(matern_rates.mse[0]),
        short(matern_rates.mse[1]),
        short(matern_rates.cross)
    );
    println!("wrote {}", file.display());
    Ok(file)
}

pub struct ExperimentArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub kind: Option<EstimatorKind>,
    pub reps: Option<usize>,
    pub dry_run: bool,
    pub full_scale: bool,
}

pub fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let config = RunConfig::load(args.config)?;
    let model = build_model(&config)?;
    let ex = &config.experiment;
    let (mut n_list, mut reps) = (ex.n_list(), ex.reps());
    if args.full_scale {
        n_list = full_n_list();
        reps = FULL_REPS;
    }
    if let Some(n) = args.n {
        n_list = vec![n];
    }
    if let Some(r) = args.reps {
        reps = r;
    }
    let exp_config = ExperimentConfig {
        model,
        n_list,
        reps,
        m: args.m.unwrap_or_else(|| ex.m()),
        kind: args.kind.unwrap_or_else(|| ex.kind()),
        base_seed: args.seed.unwrap_or_else(|| ex.seed()),
        tol: ex.tol(),
    };
    exp_config.validate()?;
    let case = config.case();
    println!(
        "{case}: {} grid sizes x {} replicates, m = {}, {} weights, base seed {}",
        exp_config.n_list.len(),
        exp_config.reps,
        exp_config.m,
        exp_config.kind,
        exp_config.base_seed
    );
    if args.dry_run {
        println!("{:>6} {:>6}  {:<18}  streams", "n", "R", "grid key");
        for &n in &exp_config.n_list {
            let key = SeedSpec::for_grid(exp_config.base_seed, n, 0).base_seed;
            println!(
                "{n:>6} {:>6}  {key:#018x}  0..{}",
                exp_config.reps,
                exp_config.reps - 1
            );
        }
        return Ok(());
    }

    let dir = config.output_dir(args.out);
    create_dir(&dir)?;
    let csv_path = dir.join(format!("{case}_summary.csv"));
    let json_path = dir.join(format!("{case}_summary.json"));
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    writeln!(csv, "n,metric,component,value")?;
    csv.flush()?;

    let echo = exp_config.echo();
    let mut rows: Vec<NSummary> = Vec::new();
    let mut io_error: Option<CliError> = None;
    let result = run_experiment(&exp_config, |row| {
        if io_error.is_some() {
            return;
        }
        rows.push(row.clone());
        println!(
            "n = {:>5}: mean ({:.4}, {:.4}), variance ({:.3e}, {:.3e}), cross-cov {:.3e}, excluded {}",
            row.n,
            row.components[0].mean,
            row.components[1].mean,
            row.components[0].variance,
            row.components[1].variance,
            row.cross_cov,
            row.excluded
        );
        let flushed = write_rows(&mut csv, row)
            .and_then(|_| csv.flush())
            .map_err(CliError::from)
            .and_then(|_| {
                write_json(
                    &json_path,
                    &json!({ "config": echo, "complete": false, "per_n": rows }),
                )
            });
        if let Err(e) = flushed {
            io_error = Some(e);
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let summary = result?;

    write_json(
        &json_path,
        &json!({
            "config": echo,
            "complete": true,
            "coverage": [summary.coverage(1), summary.coverage(2)],
            "summary": summary,
        }),
    )?;
    let panels = [
        ("ci", figures::intervals(&summary, &case)),
        ("bias_variance", figures::bias_variance(&summary, &case)),
        ("cross_cov", figures::cross_covariance(&summary, &case)),
    ];
    for (name, plot) in panels {
        let file = dir.join(format!("{case}_{name}.svg"));
        fs::write(&file, plot.render())
            .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
    }
    let s = &summary.slopes;
    let slope = |f: &Option<bifractal::RateFit>| {
        f.as_ref()
            .map(|f| format!("{:.3}", f.slope))
            .unwrap_or_else(|| "n/a".into())
    };
    println!(
        "slopes: |bias| {} / {}, variance {} / {}, |cross-cov| {}",
        slope(&s.bias[0]),
        slope(&s.bias[1]),
        slope(&s.variance[0]),
        slope(&s.variance[1]),
        slope(&s.cross_cov)
    );
    println!(
        "coverage: {}/{} and {}/{}",
        summary.coverage(1),
        summary.per_n.len(),
        summary.coverage(2),
        summary.per_n.len()
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
