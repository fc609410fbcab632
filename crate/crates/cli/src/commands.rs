//! Thin adapters from parsed arguments to the core library.

use std::fs;

use serde::Serialize;
use sibuya_core::dist::{
    crp_sn_pmf, kn_mean, kn_pmf, marginal_pmf, occupancy_pmf, progeny_pmf, renewal_pmf_recursive,
    tilted_kn_pmf, OccupancyLaw, OccupancyVector,
};
use sibuya_core::export::{
    exact_string, label_string, parse_exact, to_csv, to_json, Mass, PmfRecord, RatePoint,
    RunManifest, StirlingRecord,
};
use sibuya_core::simulate::estimate::run_trials;
use sibuya_core::simulate::{
    chi_square_gof, crp_chain, estimate_kn_limit, estimate_stable_limit, forest_run,
    leaf_statistics, progeny_run, ChiSquareReport, RngStream,
};
use sibuya_core::stirling::{
    build_triangle, stirling_alt_sum, stirling_bell_table, stirling_faa_di_bruno,
};
use sibuya_core::thermo::{
    classify_increasing_rescaled, classify_rescaled, free_energy_oracle, rate_function,
    regular_boundary_c2, solve_z_rho, ThermoSolution,
};
use sibuya_core::verify::verify_identities;
use sibuya_core::{AlphaParam, Error, Exact, Pmf};

use crate::args::{Command, Common, Format, KnQuantity, ModeArg, RescaleKind, Route, SimTarget};

/// Largest `n` for which the joint occupancy law is enumerated.
const JOINT_MAX_N: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

type Result<T> = std::result::Result<T, CliError>;

/// Rendered output in both formats; only the requested one is produced.
fn render<T: Serialize>(
    format: Format,
    value: &T,
    csv: impl FnOnce() -> Result<String>,
) -> Result<String> {
    match format {
        Format::Json => Ok(to_json(value)? + "\n"),
        Format::Csv => csv(),
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn pmf_record(pmf: Pmf<Exact>, mode: ModeArg) -> PmfRecord {
    match mode {
        ModeArg::Exact => PmfRecord::from_pmf(&pmf),
        ModeArg::Float => PmfRecord::from_pmf(&pmf.to_f64()),
    }
}

fn pmf_output(common: &Common, record: &PmfRecord) -> Result<String> {
    render(common.format, record, || Ok(record.to_csv()?))
}

pub fn run(command: Command) -> Result<()> {
    let text = match &command {
        Command::Progeny {
            common,
            n_max,
            mode,
        } => {
            let record = match mode {
                ModeArg::Exact => {
                    PmfRecord::from_pmf(&progeny_pmf::<Exact>(&common.alpha, *n_max)?)
                }
                ModeArg::Float => PmfRecord::from_pmf(&progeny_pmf::<f64>(&common.alpha, *n_max)?),
            };
            pmf_output(common, &record)?
        }
        Command::Stirling {
            common,
            n_max,
            route,
        } => stirling(common, *n_max, *route)?,
        Command::Kn {
            common,
            n,
            what,
            c1,
            theta,
            mode,
        } => kn(common, *n, *what, c1.as_deref(), theta.as_deref(), *mode)?,
        Command::Occupancy {
            common,
            n,
            k,
            marginal,
            parts,
        } => occupancy(common, *n, *k, *marginal, parts.as_deref())?,
        Command::Thermo { common, rho, r, k } => thermo(common, *rho, r, *k)?,
        Command::Rescale {
            common,
            c1,
            c2,
            kind,
        } => {
            let family = match kind {
                RescaleKind::SimplyGenerated => {
                    let c2 = c2.unwrap_or_else(|| regular_boundary_c2(&common.alpha, *c1));
                    classify_rescaled(&common.alpha, *c1, c2)?
                }
                RescaleKind::Increasing => {
                    if c2.is_some() {
                        return Err(CliError::Usage(
                            "--c2 is fixed by --c1 for increasing trees".into(),
                        ));
                    }
                    classify_increasing_rescaled(&common.alpha, *c1)?
                }
            };
            render(common.format, &family, || Ok(to_csv(&[&family])?))?
        }
        Command::Simulate { .. } => simulate(&command)?,
        Command::Verify { common, n_max } => {
            let report = verify_identities(&common.alpha, *n_max)?;
            let text = render(common.format, &report, || Ok(to_csv(&report.checks)?))?;
            emit(common, &text)?;
            if !report.all_passed() {
                let names: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
                return Err(CliError::CheckFailed(names.join("; ")));
            }
            return Ok(());
        }
    };
    emit(command.common(), &text)
}

fn stirling(common: &Common, n_max: usize, route: Route) -> Result<String> {
    let alpha = &common.alpha;
    let table = build_triangle(alpha, n_max);
    let by_entry =
        |f: &dyn Fn(usize, usize) -> sibuya_core::Result<Exact>| -> Result<Vec<Vec<Exact>>> {
            let mut rows = vec![Vec::new(); n_max + 1];
            rows[0] = vec![Exact::from_integer(1.into())];
            for (n, row) in rows.iter_mut().enumerate().skip(1) {
                row.push(Exact::from_integer(0.into()));
                for k in 1..=n {
                    row.push(f(n, k)?);
                }
            }
            Ok(rows)
        };
    let alt = || by_entry(&|n, k| stirling_alt_sum(alpha, n, k));
    let comp = || by_entry(&|n, k| stirling_faa_di_bruno(alpha, n, k));
    let rows = match route {
        Route::Recurrence => table.rows().to_vec(),
        Route::AlternatingSum => alt()?,
        Route::Compositions => comp()?,
        Route::Bell => stirling_bell_table(alpha, n_max),
        Route::All => {
            let routes = [
                ("alternating sum", alt()?),
                ("composition sum", comp()?),
                ("Bell", stirling_bell_table(alpha, n_max)),
            ];
            for (name, rows) in routes {
                for n in 1..=n_max {
                    for k in 1..=n {
                        if Some(&rows[n][k]) != table.get(n, k) {
                            return Err(CliError::CheckFailed(format!(
                                "{name} route differs at n={n}, k={k}"
                            )));
                        }
                    }
                }
            }
            table.rows().to_vec()
        }
    };
    let mut record = StirlingRecord::from_table(&table)?;
    record.stirling = sibuya_core::export::triangle_entries(&rows);
    render(common.format, &record, || {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            k: usize,
            stirling: String,
            forest_count: String,
        }
        let csv_rows = record
            .stirling
            .iter()
            .zip(&record.forest_counts)
            .map(|(s, c)| {
                Ok(Row {
                    n: s.n,
                    k: s.k,
                    stirling: exact_string(&s.value()?),
                    forest_count: exact_string(&c.value()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(to_csv(&csv_rows)?)
    })
}

fn required<'a>(value: Option<&'a str>, flag: &str) -> Result<&'a str> {
    value.ok_or_else(|| CliError::Usage(format!("{flag} is required here")))
}

fn kn(
    common: &Common,
    n: usize,
    what: KnQuantity,
    c1: Option<&str>,
    theta: Option<&str>,
    mode: ModeArg,
) -> Result<String> {
    let alpha = &common.alpha;
    let record = match what {
        KnQuantity::Law => match mode {
            ModeArg::Exact => PmfRecord::from_pmf(&kn_pmf::<Exact>(alpha, n)?),
            ModeArg::Float => PmfRecord::from_pmf(&kn_pmf::<f64>(alpha, n)?),
        },
        KnQuantity::Mean => {
            #[derive(Serialize)]
            struct MeanRecord {
                alpha: AlphaParam,
                n: usize,
                mean: Mass,
            }
            let mean = match mode {
                ModeArg::Exact => Mass::Exact(exact_string(&kn_mean::<Exact>(alpha, n)?)),
                ModeArg::Float => Mass::Float(kn_mean::<f64>(alpha, n)?),
            };
            let record = MeanRecord {
                alpha: alpha.clone(),
                n,
                mean,
            };
            return render(common.format, &record, || Ok(to_csv(&[&record])?));
        }
        KnQuantity::Tilted => {
            let c1 = parse_exact(required(c1, "--c1")?)?;
            pmf_record(tilted_kn_pmf(alpha, &c1, n)?, mode)
        }
        KnQuantity::Crp => {
            let theta = parse_exact(required(theta, "--theta")?)?;
            match mode {
                ModeArg::Exact => PmfRecord::from_pmf(&crp_sn_pmf::<Exact>(alpha, &theta, n)?),
                ModeArg::Float => {
                    let theta = sibuya_core::numerics::exact_to_f64(&theta);
                    PmfRecord::from_pmf(&crp_sn_pmf::<f64>(alpha, &theta, n)?)
                }
            }
        }
        KnQuantity::Renewal => pmf_record(renewal_pmf_recursive(alpha, n)?, mode),
    };
    pmf_output(common, &record)
}

fn occupancy(
    common: &Common,
    n: usize,
    k: usize,
    marginal: bool,
    parts: Option<&[usize]>,
) -> Result<String> {
    let alpha = &common.alpha;
    if let Some(parts) = parts {
        if marginal {
            return Err(CliError::Usage(
                "--parts and --marginal are exclusive".into(),
            ));
        }
        let v = OccupancyVector::new(parts.to_vec())?;
        if v.total() != n || v.k() != k {
            return Err(Error::InvalidArgument(format!(
                "parts {parts:?} are not a composition of n={n} into k={k}"
            ))
            .into());
        }
        #[derive(Serialize)]
        struct PartsRecord {
            alpha: AlphaParam,
            parts: String,
            probability: String,
        }
        let record = PartsRecord {
            alpha: alpha.clone(),
            parts: label_string(&sibuya_core::Label::Parts(parts.to_vec())),
            probability: exact_string(&occupancy_pmf(alpha, &v)?),
        };
        return render(common.format, &record, || Ok(to_csv(&[&record])?));
    }
    let pmf = if marginal {
        marginal_pmf(alpha, n, k)?
    } else {
        if n > JOINT_MAX_N {
            return Err(Error::SizeGuard {
                what: "n",
                value: n,
                limit: JOINT_MAX_N,
            }
            .into());
        }
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got n={n}, k={k}")).into());
        }
        OccupancyLaw::new(alpha, n).joint_pmf(n, k)?
    };
    pmf_output(common, &PmfRecord::from_pmf(&pmf))
}

#[derive(Serialize)]
struct FreeEnergyCheck {
    k: usize,
    n: usize,
    /// `−(1/k) log [z^n]Φ^k` from exact coefficients.
    finite: f64,
    limit: f64,
    /// Gaussian local-limit term expected between the two.
    correction: f64,
}

#[derive(Serialize)]
struct ThermoRecord {
    solution: ThermoSolution,
    rates: Vec<RatePoint>,
    free_energy_check: Option<FreeEnergyCheck>,
}

fn thermo(common: &Common, rho: f64, rs: &[f64], k: Option<usize>) -> Result<String> {
    let alpha = &common.alpha;
    let solution = solve_z_rho(alpha, rho)?;
    let rates = rs
        .iter()
        .map(|&r| {
            Ok(RatePoint {
                rho,
                r,
                f: rate_function(alpha, rho, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let free_energy_check = match k {
        Some(k) => {
            let n = (rho * k as f64).round() as usize;
            Some(FreeEnergyCheck {
                k,
                n,
                finite: free_energy_oracle(alpha, n, k)?,
                limit: solution.free_energy,
                correction: solution.finite_k_correction(k)?,
            })
        }
        None => None,
    };
    let record = ThermoRecord {
        solution,
        rates,
        free_energy_check,
    };
    render(common.format, &record, || {
        if record.rates.is_empty() {
            Ok(to_csv(&[&record.solution])?)
        } else {
            Ok(to_csv(&record.rates)?)
        }
    })
}

/// Histogram of the table count after `n` customers.
#[derive(Serialize)]
struct CrpRun {
    alpha: AlphaParam,
    theta: f64,
    n: usize,
    trials: u64,
    /// `counts[k−1]` runs ended with `k` tables.
    counts: Vec<u64>,
    expected: Vec<f64>,
    chi_square: ChiSquareReport,
}

#[derive(Serialize)]
struct HistRow {
    value: String,
    count: u64,
    expected: Option<f64>,
}

fn hist_rows(counts: &[u64], expected: &[f64], tail: bool) -> Vec<HistRow> {
    let last = counts.len();
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistRow {
            value: if tail && i + 1 == last {
                format!(">{i}")
            } else {
                (i + 1).to_string()
            },
            count,
            expected: expected.get(i).copied(),
        })
        .collect()
}

fn wrap<T>(command: &str, seed: u64, stream: u64, trials: u64, report: T) -> RunManifest<T> {
    RunManifest {
        command: command.to_string(),
        seed,
        stream,
        trials,
        report,
    }
}

fn simulate(command: &Command) -> Result<String> {
    let Command::Simulate {
        common,
        what,
        trials,
        seed,
        stream,
        n,
        k,
        theta,
        bins,
        cap,
        lambda,
        attachment,
    } = command
    else {
        unreachable!("dispatched on Simulate");
    };
    let alpha = &common.alpha;
    let rng = RngStream::new(*seed, *stream);
    let name = format!(
        "simulate {}",
        clap::ValueEnum::to_possible_value(what)
            .expect("named")
            .get_name()
    );
    let format = common.format;
    if let Some(sampler) = what.progeny_sampler() {
        let run = wrap(
            &name,
            *seed,
            *stream,
            *trials,
            progeny_run(alpha, sampler, *trials, *bins, *cap, &rng)?,
        );
        return render(format, &run, || {
            Ok(to_csv(&hist_rows(
                &run.report.counts,
                &run.report.expected,
                true,
            ))?)
        });
    }
    match what {
        SimTarget::Forest => {
            let run = wrap(
                &name,
                *seed,
                *stream,
                *trials,
                forest_run(alpha, *n, *trials, (*attachment).into(), &rng)?,
            );
            render(format, &run, || {
                Ok(to_csv(&hist_rows(
                    &run.report.counts,
                    &run.report.expected,
                    false,
                ))?)
            })
        }
        SimTarget::Crp => {
            let theta = theta.unwrap_or(alpha.value());
            let expected = crp_sn_pmf::<f64>(alpha, &theta, *n)?;
            if *trials == 0 {
                return Err(Error::InvalidArgument("need at least 1 trial".into()).into());
            }
            let finals = run_trials(&rng, *trials, |r| {
                crp_chain(alpha, theta, *n, r).map(|t| t.final_tables())
            });
            let mut counts = vec![0u64; *n];
            for tables in finals {
                counts[tables? - 1] += 1;
            }
            let expected: Vec<f64> = (1..=*n as u64).map(|v| expected.prob(v)).collect();
            let chi_square = chi_square_gof(&counts, &expected)?;
            let run = wrap(
                &name,
                *seed,
                *stream,
                *trials,
                CrpRun {
                    alpha: alpha.clone(),
                    theta,
                    n: *n,
                    trials: *trials,
                    counts,
                    expected,
                    chi_square,
                },
            );
            render(format, &run, || {
                Ok(to_csv(&hist_rows(
                    &run.report.counts,
                    &run.report.expected,
                    false,
                ))?)
            })
        }
        SimTarget::KnLimit => {
            let run = wrap(
                &name,
                *seed,
                *stream,
                *trials,
                estimate_kn_limit(alpha, *n, *trials, &rng)?,
            );
            render(format, &run, || Ok(to_csv(&run.report.moments)?))
        }
        SimTarget::StableLimit => {
            let run = wrap(
                &name,
                *seed,
                *stream,
                *trials,
                estimate_stable_limit(alpha, *k, *trials, lambda, &rng)?,
            );
            render(format, &run, || Ok(to_csv(&run.report.entries)?))
        }
        SimTarget::Leaves => {
            let run = wrap(
                &name,
                *seed,
                *stream,
                *trials,
                leaf_statistics(alpha, *n, *trials, &rng)?,
            );
            render(format, &run, || Ok(to_csv(&run.report.histogram)?))
        }
        SimTarget::Sibuya | SimTarget::Sequential | SimTarget::Bgw => unreachable!("handled above"),
    }
}
