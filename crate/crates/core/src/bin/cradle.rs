use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cradle::experiments::{
    fit_alpha_sweep, load_config, run_sweep, write_field_csv, write_sweep_csv, write_sweep_metadata,
    SweepParameter,
};
use cradle::lattice::{build_hamiltonian, build_modified_hamiltonian, BondInput};
use cradle::observables::{analytic_receiving_time, default_window, effective_coupling, find_peak};
use cradle::photonstats::{
    read_records_csv, simulate_counts, simulate_trials, write_estimates_csv, write_records_csv,
    ClickCounts, Estimator, PairLaw, SourceKind, SourceModel,
};
use cradle::propagator::{probability_map, Propagator, StateVector};
use cradle::{ChainSpec, CouplingLaw, Error, PeakRule};

#[derive(Parser)]
#[command(name = "cradle", version, about = "Boundary-controlled waveguide chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report couplings and closed-form estimates for a chain geometry.
    Layout(LayoutArgs),
    /// Propagate an excitation from site 1 and write the probability field.
    Evolve(EvolveArgs),
    /// Run the parameter sweep defined in a config file.
    Sweep(SweepArgs),
    /// Monte Carlo click statistics of a photon source.
    Stats(StatsArgs),
}

#[derive(Args)]
struct LayoutArgs {
    /// Total number of waveguides N.
    #[arg(long)]
    sites: usize,
    /// Interior pitch, um.
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "coupling_strong",
        required_unless_present = "coupling_strong"
    )]
    pitch_strong: Option<f64>,
    /// Interior coupling J, 1/mm.
    #[arg(long, allow_hyphen_values = true)]
    coupling_strong: Option<f64>,
    /// End-bond pitch, um.
    #[arg(
        long,
        allow_hyphen_values = true,
        conflicts_with = "coupling_weak",
        required_unless_present = "coupling_weak"
    )]
    pitch_weak: Option<f64>,
    /// End-bond coupling Jw, 1/mm.
    #[arg(long, allow_hyphen_values = true)]
    coupling_weak: Option<f64>,
    /// Coupling law `A,k` for J(p) = A·exp(−k·p), A in 1/mm and k in 1/um.
    #[arg(long, value_parser = parse_law)]
    law: Option<CouplingLaw>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    /// First interior local maximum.
    First,
    /// Highest point of the first revival lobe.
    Lobe,
}

#[derive(Args)]
struct PeakArgs {
    /// Which maximum of the receiving-site population is reported.
    #[arg(long, value_enum, default_value = "first")]
    peak_rule: RuleArg,
    /// Lobe end threshold, as a fraction of the running maximum.
    #[arg(long, default_value_t = 0.5)]
    lobe_drop: f64,
}

impl PeakArgs {
    fn rule(&self) -> Result<PeakRule, Error> {
        match self.peak_rule {
            RuleArg::First => Ok(PeakRule::FirstLocalMaximum),
            RuleArg::Lobe if self.lobe_drop > 0.0 && self.lobe_drop < 1.0 => Ok(PeakRule::RevivalLobe {
                drop_fraction: self.lobe_drop,
            }),
            RuleArg::Lobe => Err(Error::InvalidParameter {
                name: "--lobe-drop",
                reason: format!("must lie in (0, 1), got {}", self.lobe_drop),
            }),
        }
    }
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Propagation length covered, mm.
    #[arg(long)]
    z_max: f64,
    /// Grid step, mm.
    #[arg(long)]
    z_step: f64,
    /// Output CSV (z_mm, site_index, probability).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    peak: PeakArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Config with a `sweep` block.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (param_name, param_value, tau_mm, eta).
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON metadata file.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[command(flatten)]
    peak: PeakArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Heralded,
    Thermal,
    Coherent,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    Bernoulli,
    Poisson,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, value_enum, required_unless_present = "input")]
    source: Option<SourceArg>,
    /// Mean pair or photon number per gate.
    #[arg(long, required_unless_present = "input")]
    mu: Option<f64>,
    /// Number of gates.
    #[arg(long, required_unless_present = "input")]
    trials: Option<u64>,
    #[arg(long, required_unless_present = "input")]
    seed: Option<u64>,
    /// Signal transmission.
    #[arg(long, default_value_t = 1.0)]
    eta_t: f64,
    /// Herald detection efficiency.
    #[arg(long, default_value_t = 1.0)]
    eta_h: f64,
    /// Dark-count probability per detector and gate.
    #[arg(long, default_value_t = 0.0)]
    dark: f64,
    /// Pair-number law of the heralded source.
    #[arg(long, value_enum, default_value = "bernoulli")]
    pairs: PairsArg,
    /// Estimate from an existing records CSV instead of simulating.
    #[arg(long, conflicts_with_all = ["source", "mu", "trials", "seed", "records"])]
    input: Option<PathBuf>,
    /// Output CSV (estimator, value, stderr, n_gates).
    #[arg(long)]
    out: PathBuf,
    /// Also write per-gate records (gate, d1, d2, d3).
    #[arg(long)]
    records: Option<PathBuf>,
    /// Report bootstrap standard errors from this many resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
}

fn parse_law(s: &str) -> Result<CouplingLaw, String> {
    let (a, k) = s
        .split_once(',')
        .ok_or_else(|| format!("expected A,k, got {s:?}"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("amplitude: {e}"))?;
    let k: f64 = k.trim().parse().map_err(|e| format!("decay: {e}"))?;
    CouplingLaw::new(a, k).map_err(|e| e.to_string())
}

fn run_layout(args: &LayoutArgs) -> Result<(), Error> {
    let law = args.law.unwrap_or_default();
    if args.sites < 3 {
        return Err(Error::InvalidParameter {
            name: "--sites",
            reason: format!("need at least 3 sites, got {}", args.sites),
        });
    }
    for (name, value) in [
        ("--pitch-strong", args.pitch_strong),
        ("--coupling-strong", args.coupling_strong),
        ("--pitch-weak", args.pitch_weak),
        ("--coupling-weak", args.coupling_weak),
    ] {
        if let Some(v) = value.filter(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be positive and finite, got {v}"),
            });
        }
    }
    let (spec, notes) = ChainSpec::resolve(
        args.sites,
        BondInput {
            pitch_um: args.pitch_strong,
            coupling_per_mm: args.coupling_strong,
        },
        BondInput {
            pitch_um: args.pitch_weak,
            coupling_per_mm: args.coupling_weak,
        },
        &law,
    )?;
    for n in notes {
        eprintln!("note: {n}");
    }
    let threshold = 1.0 / (spec.n_sites as f64).sqrt();
    println!("n_sites = {}", spec.n_sites);
    println!("J_per_mm = {:.6}", spec.strong_coupling);
    println!("Jw_per_mm = {:.6}", spec.weak_coupling);
    println!("alpha = {:.6}", spec.alpha());
    println!("J_eff_per_mm = {:.6}", effective_coupling(&spec)?);
    println!("tau_analytic_mm = {:.4}", analytic_receiving_time(&spec)?);
    println!("alpha_threshold = {threshold:.6}");
    println!("transfer_regime = {}", spec.in_transfer_regime());
    Ok(())
}

fn run_evolve(args: &EvolveArgs) -> Result<(), Error> {
    let rule = args.peak.rule()?;
    let cfg = load_config(&args.config)?;
    for n in &cfg.notes {
        eprintln!("note: {n}");
    }
    let h = match &cfg.defect {
        Some(d) => build_modified_hamiltonian(&cfg.spec, d, &cfg.law)?,
        None => build_hamiltonian(&cfg.spec)?,
    };
    let psi0 = StateVector::localized(h.dim(), 1)?;
    let field = probability_map(&h, &psi0, args.z_max, args.z_step)?;
    write_field_csv(&field, &args.out)?;
    let window = match cfg.window {
        Some(w) => w,
        None => default_window(&cfg.spec)?,
    };
    let peak = find_peak(&Propagator::new(&h)?, cfg.spec.n_sites, window, rule)?;
    println!("rows = {}", field.z.len() * field.n_sites());
    println!("tau_mm = {:.6}", peak.tau);
    println!("eta = {:.6}", peak.eta);
    Ok(())
}

fn run_sweep_cmd(args: &SweepArgs) -> Result<(), Error> {
    let rule = args.peak.rule()?;
    let cfg = load_config(&args.config)?;
    for n in &cfg.notes {
        eprintln!("note: {n}");
    }
    let mut plan = cfg.plan.ok_or_else(|| Error::Config {
        path: args.config.display().to_string(),
        message: "no sweep block".into(),
    })?;
    plan.rule = rule;
    let result = run_sweep(&plan)?;
    write_sweep_csv(&result, &args.out)?;
    if let Some(meta) = &args.meta {
        write_sweep_metadata(&result.metadata, meta)?;
    }
    println!("parameter = {}", result.parameter);
    println!("points = {}", result.points.len());
    if result.parameter == SweepParameter::WeakPitch && result.points.len() >= 2 {
        let alpha = fit_alpha_sweep(result)?;
        println!("slope_mm = {:.6}", alpha.fit.slope);
        println!("intercept_mm = {:.6}", alpha.fit.intercept);
        println!("residual_rms_mm = {:.6}", alpha.fit.residual_rms);
        println!("implied_J_per_mm = {:.6}", alpha.implied_strong_coupling);
    }
    Ok(())
}

fn run_stats(args: &StatsArgs) -> Result<(), Error> {
    let counts = match &args.input {
        Some(path) => {
            let records = read_records_csv(path)?;
            if records.is_empty() {
                return Err(Error::EmptyRecords);
            }
            ClickCounts::from_records(&records)
        }
        None => {
            // clap guarantees these when --input is absent.
            let (Some(source), Some(mu), Some(trials), Some(seed)) =
                (args.source, args.mu, args.trials, args.seed)
            else {
                unreachable!("required arguments enforced by the parser");
            };
            let model = SourceModel {
                kind: match source {
                    SourceArg::Heralded => SourceKind::HeraldedPair,
                    SourceArg::Thermal => SourceKind::Thermal,
                    SourceArg::Coherent => SourceKind::Coherent,
                },
                mean: mu,
                transmission: args.eta_t,
                herald_efficiency: args.eta_h,
                dark_count: args.dark,
                pair_law: match args.pairs {
                    PairsArg::Bernoulli => PairLaw::Bernoulli,
                    PairsArg::Poisson => PairLaw::Poisson,
                },
            };
            model.validate()?;
            if let Some(path) = &args.records {
                write_records_csv(simulate_trials(&model, trials, seed)?, path)?;
            }
            simulate_counts(&model, trials, seed)?
        }
    };

    println!(
        "counts: n_gates={} n1={} n2={} n3={} n12={} n13={} n23={} n123={}",
        counts.n_gates,
        counts.n1(),
        counts.n2(),
        counts.n3(),
        counts.n12(),
        counts.n13(),
        counts.n23(),
        counts.n123()
    );
    let mut estimates = Vec::new();
    for est in [
        Estimator::G2Zero,
        Estimator::CrossCorrelation,
        Estimator::SignalAutocorrelation,
    ] {
        match est.estimate(&counts) {
            Ok(e) => {
                print!("{} = {:.6} +/- {:.6}", est.name(), e.value, e.std_error);
                if let Some(n) = args.bootstrap {
                    let seed = args.seed.unwrap_or(0);
                    match est.bootstrap_std_error(&counts, n, seed) {
                        Ok(se) => print!(" (bootstrap {se:.6})"),
                        Err(err) => print!(" (bootstrap unavailable: {err})"),
                    }
                }
                println!();
                estimates.push((est, e));
            }
            Err(err) => eprintln!("note: {} undefined: {err}", est.name()),
        }
    }
    if estimates.is_empty() {
        return Err(Error::InsufficientSingles {
            n1: counts.n1(),
            n23_sum: counts.n2() + counts.n3(),
            n_gates: counts.n_gates,
        });
    }
    write_estimates_csv(&estimates, &args.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Layout(a) => run_layout(a),
        Command::Evolve(a) => run_evolve(a),
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Stats(a) => run_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
