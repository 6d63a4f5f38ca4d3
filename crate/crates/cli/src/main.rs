use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use misspec_core::agents::{read_jsonl, write_jsonl, Demonstration, Generator};
use misspec_core::coop::{ci_fixed_point, ci_residuals, GameFile};
use misspec_core::estimation::{fit_alpha, group_by_individual, model_comparison, DEFAULT_GRID_STEP};
use misspec_core::experiment::{
    generate_population, run_ci_check, run_likelihood_demo, run_matrix, run_mixture_sweep, run_theory_check,
    write_cells_csv, write_manifest, AccuracyCell, ExperimentConfig, Manifest, MixtureKind, DEFAULT_SEED,
    DEFAULT_TILT,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "misspec", version, about = "Reward inference from literal and pedagogic demonstrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

/// Experiment settings; flags override the config file.
#[derive(Args, Clone)]
struct RunArgs {
    /// `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled grid name (bands, corridors, islands, grass) or grid file path
    #[arg(long = "grid", num_args = 1..)]
    grids: Vec<String>,
    #[arg(long)]
    tau_l: Option<f64>,
    #[arg(long)]
    tau_p: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p_demo: Option<f64>,
    /// Pedagogic planning lookahead
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap resamples per accuracy cell
    #[arg(long)]
    resamples: Option<usize>,
    /// Comma-separated: literal, pedagogic, mixture, mixture(a)
    #[arg(long, value_delimiter = ',')]
    robots: Vec<String>,
    /// Comma-separated generators, e.g. literal,pedagogic,action-mixture(0.5)
    #[arg(long, value_delimiter = ',')]
    humans: Vec<String>,
    /// Output directory; results go to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if !self.grids.is_empty() {
            cfg.grids = self.grids.clone();
        }
        let p = &mut cfg.params;
        if let Some(v) = self.tau_l {
            p.tau_literal = v;
        }
        if let Some(v) = self.tau_p {
            p.tau_pedagogic = v;
        }
        if let Some(v) = self.kappa {
            p.kappa = v;
        }
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.horizon {
            p.plan_horizon = v;
        }
        if let Some(v) = self.p_demo {
            cfg.p_demo = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.resamples {
            cfg.resamples = v;
        }
        if !self.robots.is_empty() {
            cfg.robots = self.robots.clone();
        }
        if !self.humans.is_empty() {
            cfg.humans = self.humans.clone();
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy of each robot against each human
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Accuracy across mixture weights
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// action or demonstration
        #[arg(long, default_value = "action")]
        kind: MixtureKind,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Sample demonstrations as JSON lines
    Generate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "pedagogic")]
        human: Generator,
        #[arg(long, default_value_t = 100)]
        individuals: usize,
        #[arg(long, default_value_t = 1)]
        demos_each: usize,
    },
    /// Maximum-likelihood action-mixture weight for recorded demonstrations
    FitAlpha {
        #[command(flatten)]
        run: RunArgs,
        /// Demonstration JSON lines file
        #[arg(long)]
        demos: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
        grid_step: f64,
        #[arg(long)]
        per_individual: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Per-individual comparison of the literal and pedagogic models
    CompareModels {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Ranking check of the one-step response hierarchy on random games
    VerifyRanking {
        #[arg(long, default_value_t = 1000)]
        games: usize,
        #[arg(long, default_value_t = 5)]
        max_types: usize,
        #[arg(long, default_value_t = 6)]
        max_signals: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TILT)]
        tilt: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Cooperative-inference fixed point of a teacher matrix, or a batch of random ones
    CiSolve {
        /// JSON file with `prior` and `teacher`
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        random: usize,
        #[arg(long, default_value_t = 6)]
        max_size: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Predictive versus inferential likelihood reversal example
    Claim2 {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn cells_text(cells: &[AccuracyCell]) -> String {
    let mut s = String::new();
    for c in cells {
        s.push_str(&format!(
            "{:<24} {:<16} {:.3}  [{:.3}, {:.3}]  n={}\n",
            c.human, c.robot, c.accuracy, c.ci.lo, c.ci.hi, c.n
        ));
    }
    s
}

fn render_cells(cells: &[AccuracyCell], format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_cells_csv(&mut buf, cells)?;
            String::from_utf8(buf)?
        }
        Format::Json => serde_json::to_string_pretty(cells)? + "\n",
        Format::Text => cells_text(cells),
    })
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Text => "txt",
    }
}

/// Writes `content` into `dir/file` with a manifest, or prints it.
fn emit<C: Serialize>(
    out: Option<&Path>,
    file: &str,
    content: &str,
    command: &str,
    seed: u64,
    config: &C,
) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
            write_manifest(dir, &Manifest::new(command, seed, vec![file.to_string()], config))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn load_demos(path: &Path) -> Result<Vec<Demonstration>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Bundled grids plus any grid the user named, so demonstrations on either
/// resolve by id.
fn demo_catalog(run: &RunArgs) -> Result<(ExperimentConfig, misspec_core::agents::Catalog)> {
    let mut cfg = run.config()?;
    if !run.grids.is_empty() {
        let mut grids: Vec<String> = misspec_core::experiment::bundled_grid_names()
            .into_iter()
            .map(String::from)
            .collect();
        grids.extend(run.grids.iter().cloned());
        cfg.grids = grids;
    }
    let catalog = cfg.validate()?;
    Ok((cfg, catalog))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { run, format } => {
            let cfg = run.config()?;
            let cells = run_matrix(&cfg)?;
            let file = format!("matrix.{}", extension(format));
            emit(cfg.out.as_deref(), &file, &render_cells(&cells, format)?, "simulate", cfg.seed, &cfg)?;
        }
        Command::Sweep {
            run,
            kind,
            values,
            format,
        } => {
            let cfg = run.config()?;
            let cells = run_mixture_sweep(&cfg, kind, &values)?;
            #[derive(Serialize)]
            struct SweepConfig<'a> {
                kind: MixtureKind,
                values: &'a [f64],
                #[serde(flatten)]
                experiment: &'a ExperimentConfig,
            }
            let echo = SweepConfig {
                kind,
                values: &values,
                experiment: &cfg,
            };
            let file = format!("sweep.{}", extension(format));
            emit(cfg.out.as_deref(), &file, &render_cells(&cells, format)?, "sweep", cfg.seed, &echo)?;
        }
        Command::Generate {
            run,
            human,
            individuals,
            demos_each,
        } => {
            let cfg = run.config()?;
            let catalog = cfg.validate()?;
            let demos = generate_population(&catalog, &cfg.params, human, individuals, demos_each, cfg.seed)?;
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &demos)?;
            emit(cfg.out.as_deref(), "demos.jsonl", &String::from_utf8(buf)?, "generate", cfg.seed, &cfg)?;
        }
        Command::FitAlpha {
            run,
            demos,
            grid_step,
            per_individual,
            format,
        } => {
            let (cfg, catalog) = demo_catalog(&run)?;
            let demos = load_demos(&demos)?;
            let fit = fit_alpha(&catalog, &demos, &cfg.params, grid_step, per_individual)?;
            let content = match format {
                Format::Json => serde_json::to_string_pretty(&fit)? + "\n",
                Format::Csv => {
                    let mut s = String::from("alpha,mean_nll\n");
                    for (a, v) in fit.alphas.iter().zip(&fit.mean_nll) {
                        s.push_str(&format!("{a},{v}\n"));
                    }
                    s
                }
                Format::Text => {
                    let mut s = format!(
                        "alpha_hat {}\nmean NLL per demonstration at alpha_hat {:.6}\ndemonstrations {}\n",
                        fit.alpha_hat,
                        fit.mean_nll[fit.alphas.iter().position(|&a| a == fit.alpha_hat).unwrap_or(0)],
                        demos.len()
                    );
                    for (id, a) in fit.per_individual.iter().flatten() {
                        s.push_str(&format!("{id} {a}\n"));
                    }
                    s
                }
            };
            let file = format!("fit.{}", extension(format));
            emit(cfg.out.as_deref(), &file, &content, "fit-alpha", cfg.seed, &cfg)?;
        }
        Command::CompareModels { run, demos, format } => {
            let (cfg, catalog) = demo_catalog(&run)?;
            let demos = load_demos(&demos)?;
            let cmp = model_comparison(&catalog, &group_by_individual(&demos), &cfg.params)?;
            let content = match format {
                Format::Json => serde_json::to_string_pretty(&cmp)? + "\n",
                Format::Csv => {
                    let mut s = String::from("individual,loglik_literal,loglik_pedagogic,better\n");
                    for r in &cmp.individuals {
                        s.push_str(&format!("{},{},{},{}\n", r.id, r.loglik_literal, r.loglik_pedagogic, r.better));
                    }
                    s
                }
                Format::Text => format!(
                    "individuals {}\nliteral better {:.3}\npedagogic better {:.3}\n",
                    cmp.individuals.len(),
                    cmp.literal_fraction,
                    cmp.pedagogic_fraction
                ),
            };
            let file = format!("comparison.{}", extension(format));
            emit(cfg.out.as_deref(), &file, &content, "compare-models", cfg.seed, &cfg)?;
        }
        Command::VerifyRanking {
            games,
            max_types,
            max_signals,
            seed,
            tilt,
            format,
        } => {
            let report = run_theory_check(games, max_types, max_signals, seed, tilt)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Text => {
                    println!("games {}", report.n_games);
                    println!("passes {}", report.passes);
                    println!("violations {}", report.violations.len());
                    match report.min_slack {
                        Some(s) => println!("min slack {s:e}"),
                        None => println!("min slack n/a"),
                    }
                    for v in &report.violations {
                        println!("violation game {} seed {} chain {:?}", v.game, v.seed, v.check.chain);
                    }
                }
                Format::Csv => bail!("verify-ranking supports text and json output"),
            }
            return Ok(report.violations.is_empty());
        }
        Command::CiSolve {
            input,
            random,
            max_size,
            seed,
            tol,
            max_iter,
            format,
        } => {
            if let Some(path) = input {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let file: GameFile = serde_json::from_str(&text)?;
                let (game, h0) = file.into_parts()?;
                let sol = ci_fixed_point(&h0, &game.prior, max_iter, tol)?;
                let (eq_learner, eq_teacher) = ci_residuals(&sol.teacher, &sol.learner, &game.prior);
                #[derive(Serialize)]
                struct Solved<'a> {
                    converged: bool,
                    iterations: usize,
                    teacher: &'a [Vec<f64>],
                    learner: &'a [Vec<f64>],
                    learner_residual: f64,
                    teacher_residual: f64,
                }
                let out = Solved {
                    converged: sol.converged,
                    iterations: sol.iterations,
                    teacher: sol.teacher.rows(),
                    learner: sol.learner.posterior(),
                    learner_residual: eq_learner,
                    teacher_residual: eq_teacher,
                };
                match format {
                    Format::Json => println!("{}", serde_json::to_string_pretty(&out)?),
                    _ => {
                        println!("converged {} after {} iterations", out.converged, out.iterations);
                        println!("residuals learner {eq_learner:e} teacher {eq_teacher:e}");
                        println!("teacher p(d|theta):");
                        for row in out.teacher {
                            println!("  {row:?}");
                        }
                        println!("learner p(theta|d), one row per signal:");
                        for row in out.learner {
                            println!("  {row:?}");
                        }
                    }
                }
                return Ok(sol.converged);
            }
            let report = run_ci_check(random, max_size, seed, max_iter, tol)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                _ => {
                    println!("matrices {}", report.n_matrices);
                    println!("converged {}", report.converged);
                    println!("max iterations {}", report.max_iterations_used);
                    println!("max learner residual {:e}", report.max_learner_residual);
                    println!("max teacher residual {:e}", report.max_teacher_residual);
                }
            }
            return Ok(report.failures.is_empty());
        }
        Command::Claim2 { format } => {
            let report = run_likelihood_demo()?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Csv => {
                    println!("quantity,exact,float,printed");
                    for v in &report.values {
                        println!("{},{},{},{}", v.quantity, v.exact, v.float, v.printed);
                    }
                }
                Format::Text => {
                    for v in &report.values {
                        println!(
                            "{:<12} exact {:<9} float {:.12e}  printed {}",
                            v.quantity, v.exact, v.float, v.printed
                        );
                    }
                    println!("predictive prefers m1: {}", report.predictive_prefers_m1);
                    println!("inferential prefers m2: {}", report.inferential_prefers_m2);
                    println!(
                        "reversal {}",
                        if report.reversal { "confirmed" } else { "not found" }
                    );
                    println!("note: {}", report.note);
                }
            }
            return Ok(report.reversal);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
