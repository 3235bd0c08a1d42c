use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use prevalence::bathtub::bathtub_ratio;
use prevalence::estimate::{estimate_on_domain, refine, RefineOptions};
use prevalence::mle::{self, FitOptions, FitResult, Label, Normalization};
use prevalence::sim::Scenario;
use prevalence::{Bathtub, Density, DomainSet, MixturePopulation, Objective, ProbabilityModel};
use serde::Serialize;

use crate::{BathtubArgs, Command, EstimateArgs, FiguresArgs, FitArgs, ModelArgs, OptimizeArgs, SimulateArgs};

/// Q-hat range of the variance curves; the ends show the divergence.
const CURVE_LO: f64 = 1e-3;
const CURVE_HI: f64 = 1.0 - 1e-3;

#[derive(Debug)]
pub struct CommandError(String);

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<prevalence::Error> for CommandError {
    fn from(e: prevalence::Error) -> Self {
        CommandError(e.to_string())
    }
}

type Outcome = Result<(), CommandError>;

fn at(path: &Path) -> impl Fn(String) -> CommandError + '_ {
    move |msg| CommandError(format!("{}: {msg}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CommandError> {
    let text = fs::read_to_string(path).map_err(|e| at(path)(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| at(path)(e.to_string()))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| CommandError(e.to_string()))?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| at(p)(e.to_string())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CommandError(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Outcome {
    let err = at(path);
    let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
    w.write_record(header).map_err(|e| err(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|e| err(e.to_string()))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| at(dir)(e.to_string()))
}

fn load_models(args: &ModelArgs) -> Result<(ProbabilityModel, ProbabilityModel), CommandError> {
    Ok((read_json(&args.pos_model)?, read_json(&args.neg_model)?))
}

fn population(args: &ModelArgs, q: f64) -> Result<MixturePopulation, CommandError> {
    let (p, n) = load_models(args)?;
    Ok(MixturePopulation::new(q, p, n)?)
}

/// `count` midpoints of equal cells over the model support.
fn support_grid(support: prevalence::Interval, count: usize) -> Vec<f64> {
    let h = support.width() / count as f64;
    (0..count).map(|i| support.lo + (i as f64 + 0.5) * h).collect()
}

fn curve_grid(count: usize) -> Vec<f64> {
    let h = (CURVE_HI - CURVE_LO) / (count - 1) as f64;
    (0..count).map(|i| CURVE_LO + h * i as f64).collect()
}

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Fit(a) => fit(a),
        Command::Bathtub(a) => bathtub(a),
        Command::Optimize(a) => optimize(a),
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Figures(a) => figures(a),
    }
}

#[derive(Serialize)]
struct FitMetadata<'a> {
    #[serde(flatten)]
    result: &'a FitResult,
    label: Label,
    source: String,
    fitted_count: usize,
    /// Normalized values above the support that were left out of the fit.
    dropped_above_support: usize,
}

fn fit(a: FitArgs) -> Outcome {
    let neg = mle::read_csv(&a.neg_csv, Label::NegativeTraining)?;
    let pos = mle::read_csv(&a.pos_csv, Label::PositiveTraining)?;
    let (batches, norm) = mle::normalize(&[neg, pos], a.epsilon)?;
    create_dir(&a.out)?;
    write_json(Some(&a.out.join("normalization.json")), &norm)?;

    let opts = FitOptions { starts: a.starts, seed: a.seed, ..FitOptions::default() };
    let jobs = [("negative", &a.neg_csv, a.families.0), ("positive", &a.pos_csv, a.families.1)];
    let mut unconverged = Vec::new();
    for ((name, source, family), batch) in jobs.into_iter().zip(&batches) {
        let mut kept = batch.clone();
        kept.values.retain(|r| *r <= opts.support.hi);
        let dropped = batch.len() - kept.len();
        if dropped > 0 {
            eprintln!("warning: {dropped} {name} values exceed the normalized support and were not fitted");
        }
        let result = mle::fit(family, &kept, &opts).map_err(|e| at(source)(e.to_string()))?;
        write_json(Some(&a.out.join(format!("{name}.json"))), &result.model)?;
        let meta = FitMetadata {
            result: &result,
            label: batch.label,
            source: source.display().to_string(),
            fitted_count: kept.len(),
            dropped_above_support: dropped,
        };
        write_json(Some(&a.out.join(format!("{name}.fit.json"))), &meta)?;
        if !result.converged {
            unconverged.push(name);
        }
    }
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CommandError(format!("fit did not converge for: {}", unconverged.join(", "))))
    }
}

fn bathtub(a: BathtubArgs) -> Outcome {
    let pop = population(&a.models, a.q)?;
    let solution = Bathtub::new(pop.clone()).solve(a.q_hat, a.branch)?;
    if let Some(path) = &a.csv {
        let rows =
            support_grid(pop.support(), a.points).into_iter().map(|r| vec![r, bathtub_ratio(&pop, r), pop.pdf(r)]);
        write_csv(path, &["r", "ratio", "q_pdf"], rows)?;
    }
    write_json(a.out.as_deref(), &solution)
}

fn optimize(a: OptimizeArgs) -> Outcome {
    let pop = population(&a.models, a.q)?;
    let result = Objective::new(pop).minimize(a.grid, a.tol)?;
    if let Some(path) = &a.trace_csv {
        let rows = result
            .trace
            .iter()
            .map(|t| vec![t.q_hat, t.sigma2_plus, t.sigma2_minus, t.p_minus_n_plusbranch, t.n_minus_p_minusbranch]);
        write_csv(path, &["q_hat", "sigma2_plus", "sigma2_minus", "diff_plus", "diff_minus"], rows)?;
    }
    write_json(a.out.as_deref(), &result)
}

#[derive(Serialize)]
struct EstimateOutput {
    estimate: prevalence::EstimateReport,
    refinement: Option<prevalence::RefinementTrace>,
}

fn estimate(a: EstimateArgs) -> Outcome {
    let (p, n) = load_models(&a.models)?;
    let mut batch = mle::read_csv(&a.test_csv, Label::Test)?;
    if let Some(path) = &a.normalization {
        let norm: Normalization = read_json(path)?;
        batch = batch.with_normalization(norm);
    }
    let output = match &a.domain {
        Some(path) => {
            let set: DomainSet = read_json(path)?;
            EstimateOutput { estimate: estimate_on_domain(&batch.values, &p, &n, &set)?, refinement: None }
        }
        None => {
            let opts = RefineOptions { tol: a.tol, max_iter: a.max_iter, grid_size: a.grid, ..Default::default() };
            let (trace, report) = refine(&batch.values, &p, &n, a.q0.unwrap_or(0.5), &opts)?;
            EstimateOutput { estimate: report, refinement: Some(trace) }
        }
    };
    write_json(a.out.as_deref(), &output)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut scenario: Scenario = read_json(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let (report, trials) = scenario.run()?;
    if let Some(path) = &a.trials_csv {
        let rows = trials.iter().enumerate().map(|(i, e)| vec![i as f64, *e]);
        write_csv(path, &["trial", "estimate"], rows)?;
    }
    write_json(a.out.as_deref(), &report)
}

fn figures(a: FiguresArgs) -> Outcome {
    let pop = population(&a.models, a.q)?;
    let objective = Objective::new(pop.clone());
    // fails loudly on a pair that cannot separate the classes
    objective.minimize(prevalence::objective::DEFAULT_GRID_SIZE, prevalence::objective::DEFAULT_TOL)?;
    create_dir(&a.out)?;

    let rs = support_grid(pop.support(), a.points);
    write_csv(
        &a.out.join("fig1_left.csv"),
        &["r", "n_pdf", "p_pdf"],
        rs.iter().map(|r| vec![*r, pop.negative().pdf(*r), pop.positive().pdf(*r)]),
    )?;
    write_csv(
        &a.out.join("fig1_right.csv"),
        &["r", "ratio", "q_pdf"],
        rs.iter().map(|r| vec![*r, bathtub_ratio(&pop, *r), pop.pdf(*r)]),
    )?;

    let trace = objective.trace(&curve_grid(a.points));
    write_csv(
        &a.out.join("fig2_left.csv"),
        &["q_hat", "diff_plus", "diff_minus"],
        trace.iter().map(|t| vec![t.q_hat, t.p_minus_n_plusbranch, t.n_minus_p_minusbranch]),
    )?;
    write_csv(
        &a.out.join("fig2_right.csv"),
        &["q_hat", "sigma2_plus", "sigma2_minus"],
        trace.iter().map(|t| vec![t.q_hat, t.sigma2_plus, t.sigma2_minus]),
    )
}
