//! Command-line front end for the nqac pipeline.
//!
//! Exit codes: 0 success, 2 validation failure, 3 capacity exceeded,
//! 1 anything else. `NQAC_WORKERS` bounds the worker pool.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nqac::analysis::{data_collapse, fit_effective_beta, fit_power_law, BoostEntry, CurvePoint};
use nqac::chimera::{decode_chains, embed_complete, embed_problem};
use nqac::experiment::{run_optimization_experiment, run_sampling_experiment, ExperimentConfig};
use nqac::ising::EnergyHistogram;
use nqac::nesting::{decode_code_to_logical, nest};
use nqac::reads::ReadSet;
use nqac::samplers::{sample_exact, sample_mcmc};
use nqac::{io, Error};

#[derive(Parser)]
#[command(name = "nqac", version, about = "Nested quantum annealing correction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 16)]
    cols: usize,
    #[arg(long, default_value_t = 4)]
    shore: usize,
    /// Dead qubit indices to exclude.
    #[arg(long, value_delimiter = ',')]
    dead: Vec<usize>,
}

impl GraphArgs {
    fn build(&self) -> nqac::Result<nqac::chimera::ChimeraGraph> {
        nqac::chimera::build_chimera(self.rows, self.cols, self.shore, &self.dead)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Nest a logical instance at level C.
    Encode {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a balanced clique embedding.
    Embed {
        /// Number of code qubits to embed.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an embedding file against a graph.
    ValidateEmbedding {
        #[arg(long)]
        embedding: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Draw reads from an instance with the exact or MCMC backend.
    Sample {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1000)]
        reads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `exact` or `mcmc`.
        #[arg(long, default_value = "exact")]
        backend: String,
        /// Sweeps at the target beta for the MCMC backend.
        #[arg(long, default_value_t = 64)]
        sweeps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode physical reads: chain majority vote, then code majority vote.
    Decode {
        #[arg(long)]
        nested: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        reads: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        chain_penalty: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the effective inverse temperature of a read set.
    FitBeta {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        reads: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 20.0)]
        hi: f64,
    },
    /// Data-collapse success curves from a fig1a-schema CSV.
    Collapse {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        m0: Option<f64>,
    },
    /// Fit mu_C ~ C^eta from a `C,mu` CSV.
    PowerLaw {
        #[arg(long)]
        boosts: PathBuf,
    },
    /// Run the optimization experiment described by a config file.
    RunOpt {
        #[arg(long)]
        config: PathBuf,
        /// Export all known figures here after the run.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Run the sampling experiment described by a config file.
    RunSampling {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Re-export one figure from a (cached) experiment run.
    Export {
        #[arg(long)]
        config: PathBuf,
        /// Figure id, e.g. fig1a, fig1b, fig2, fig3, fig4.
        #[arg(long)]
        figure: String,
        #[arg(long)]
        dir: PathBuf,
        /// `opt` or `sampling`.
        #[arg(long, default_value = "opt")]
        kind: String,
    },
}

fn load_config(path: &PathBuf) -> nqac::Result<ExperimentConfig> {
    ExperimentConfig::from_toml(&io::load(path)?)
}

fn read_curves_csv(path: &PathBuf) -> nqac::Result<Vec<(usize, Vec<CurvePoint>)>> {
    let text = io::load(path)?;
    let mut curves: Vec<(usize, Vec<CurvePoint>)> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('C') || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: k + 1,
                msg: "expected C,alpha,p_median,p25,p75".into(),
            });
        }
        let bad = |msg: &str| Error::Parse {
            line: k + 1,
            msg: msg.into(),
        };
        let c: usize = fields[0].parse().map_err(|_| bad("bad C"))?;
        let point = CurvePoint {
            alpha: fields[1].parse().map_err(|_| bad("bad alpha"))?,
            median: fields[2].parse().map_err(|_| bad("bad median"))?,
            p25: fields[3].parse().map_err(|_| bad("bad p25"))?,
            p75: fields[4].parse().map_err(|_| bad("bad p75"))?,
        };
        match curves.iter_mut().find(|(cc, _)| *cc == c) {
            Some((_, points)) => points.push(point),
            None => curves.push((c, vec![point])),
        }
    }
    if curves.is_empty() {
        return Err(Error::Input("no curve rows found".into()));
    }
    Ok(curves)
}

fn run(command: Command) -> nqac::Result<()> {
    match command {
        Command::Encode {
            instance,
            c,
            gamma,
            out,
        } => {
            let problem = io::read_instance(&io::load(&instance)?)?;
            let nested = nest(&problem, c, gamma)?;
            io::save(&out, &io::write_nested(&nested))?;
            println!(
                "nested C={c} gamma={gamma}: {} code qubits, {} couplings",
                nested.n_code_qubits(),
                nested.problem.edges().len()
            );
        }
        Command::Embed { m, seed, graph, out } => {
            let graph = graph.build()?;
            let embedding = embed_complete(m, &graph, seed)?;
            io::save(&out, &io::write_embedding(&embedding))?;
            println!(
                "embedded K_{m}: {} chains of length {}, {} qubits",
                m,
                embedding.chain_length,
                embedding.n_qubits_used()
            );
        }
        Command::ValidateEmbedding { embedding, graph } => {
            let graph = graph.build()?;
            let embedding = io::read_embedding(&io::load(&embedding)?)?;
            embedding.validate(&graph)?;
            println!("embedding valid");
        }
        Command::Sample {
            instance,
            beta,
            reads,
            seed,
            backend,
            sweeps,
            out,
        } => {
            let problem = io::read_instance(&io::load(&instance)?)?;
            let set = match backend.as_str() {
                "exact" => sample_exact(&problem, beta, reads, seed)?,
                "mcmc" => {
                    let schedule = [(0.25 * beta, sweeps / 4), (0.5 * beta, sweeps / 4), (beta, sweeps)];
                    sample_mcmc(&problem, &schedule, reads, seed)?
                }
                other => return Err(Error::Input(format!("unknown backend `{other}`"))),
            };
            io::save(&out, &io::write_reads(&set))?;
            println!("{} reads at beta={beta} via {backend}", set.len());
        }
        Command::Decode {
            nested,
            embedding,
            reads,
            chain_penalty,
            seed,
            graph,
            out,
        } => {
            let graph = graph.build()?;
            let nested = io::read_nested(&io::load(&nested)?)?;
            let embedding = io::read_embedding(&io::load(&embedding)?)?;
            let physical = embed_problem(&nested, &graph, &embedding, chain_penalty)?;
            let raw = io::read_reads(&io::load(&reads)?)?;
            let mut tie_rng = ChaCha8Rng::seed_from_u64(seed);
            let chains = decode_chains(&raw, &physical, &mut tie_rng)?;
            let logical = chains
                .reads
                .configs
                .iter()
                .map(|code| decode_code_to_logical(code, nested.c, &mut tie_rng))
                .collect::<nqac::Result<Vec<_>>>()?;
            let mut decoded = ReadSet::new(logical, chains.reads.provenance.clone())?;
            decoded.provenance.c = Some(nested.c);
            io::save(&out, &io::write_reads(&decoded))?;
            println!(
                "decoded {} reads, broken-chain fraction {:.4}",
                decoded.len(),
                chains.broken_chain_fraction
            );
        }
        Command::FitBeta {
            instance,
            reads,
            lo,
            hi,
        } => {
            let problem = io::read_instance(&io::load(&instance)?)?;
            let set = io::read_reads(&io::load(&reads)?)?;
            let empirical = EnergyHistogram::from_samples(
                &problem,
                &set.configs,
                Some(&set.weights),
                nqac::ising::DEFAULT_ENERGY_TOLERANCE,
            )?;
            let search = nqac::analysis::BetaSearch {
                lo,
                hi,
                ..Default::default()
            };
            let fit = fit_effective_beta(&empirical, &problem, search)?;
            println!("beta {} tv {}", fit.beta, fit.distance);
        }
        Command::Collapse { curves, m0 } => {
            let curves = read_curves_csv(&curves)?;
            let borrowed: Vec<(usize, &[CurvePoint])> =
                curves.iter().map(|(c, p)| (*c, p.as_slice())).collect();
            let fit = data_collapse(&borrowed, m0)?;
            println!("m0 {}", fit.m0);
            for e in &fit.entries {
                println!("C {} mu {} low {} high {}", e.c, e.mu, e.low, e.high);
            }
            if let Some(pl) = fit.power_law {
                println!(
                    "eta {} err {}{}",
                    pl.eta,
                    pl.uncertainty,
                    if pl.degenerate { " (degenerate)" } else { "" }
                );
            }
        }
        Command::PowerLaw { boosts } => {
            let text = io::load(&boosts)?;
            let mut entries = Vec::new();
            for (k, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('C') || line.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 2 {
                    return Err(Error::Parse {
                        line: k + 1,
                        msg: "expected C,mu".into(),
                    });
                }
                let c: usize = fields[0].parse().map_err(|_| Error::Parse {
                    line: k + 1,
                    msg: "bad C".into(),
                })?;
                let mu: f64 = fields[1].parse().map_err(|_| Error::Parse {
                    line: k + 1,
                    msg: "bad mu".into(),
                })?;
                entries.push(BoostEntry {
                    c,
                    mu,
                    low: mu,
                    high: mu,
                });
            }
            let fit = fit_power_law(&entries)?;
            println!(
                "eta {} err {}{}",
                fit.eta,
                fit.uncertainty,
                if fit.degenerate { " (degenerate)" } else { "" }
            );
        }
        Command::RunOpt { config, export } => {
            let config = load_config(&config)?;
            let run = run_optimization_experiment(&config)?;
            println!("run {} ({} points)", run.record.content_hash, run.record.points.len());
            if let Some(boost) = &run.boost {
                for e in &boost.entries {
                    println!("C {} mu {}", e.c, e.mu);
                }
                if let Some(pl) = boost.power_law {
                    println!("eta {} err {}", pl.eta, pl.uncertainty);
                }
            } else if let Some(err) = &run.boost_error {
                println!("collapse unavailable: {err}");
            }
            if let Some(dir) = export.or(config.output_dir.clone()) {
                for figure in ["fig1a", "fig1b", "fig2", "fig4"] {
                    match run.export_csv(figure, &dir) {
                        Ok(path) => println!("wrote {}", path.display()),
                        Err(e) => println!("skipped {figure}: {e}"),
                    }
                }
            }
        }
        Command::RunSampling { config, export } => {
            let config = load_config(&config)?;
            let run = run_sampling_experiment(&config)?;
            println!("run {} ({} points)", run.record.content_hash, run.record.points.len());
            if let Some(dir) = export.or(config.output_dir.clone()) {
                for figure in ["fig3", "fig4"] {
                    match run.export_csv(figure, &dir) {
                        Ok(path) => println!("wrote {}", path.display()),
                        Err(e) => println!("skipped {figure}: {e}"),
                    }
                }
            }
        }
        Command::Export {
            config,
            figure,
            dir,
            kind,
        } => {
            let config = load_config(&config)?;
            let path = match kind.as_str() {
                "opt" => run_optimization_experiment(&config)?.export_csv(&figure, &dir)?,
                "sampling" => run_sampling_experiment(&config)?.export_csv(&figure, &dir)?,
                other => return Err(Error::Input(format!("unknown run kind `{other}`"))),
            };
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() {
    if let Ok(workers) = std::env::var("NQAC_WORKERS") {
        if let Ok(n) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
