use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvkl::granger::{self, Nonlinearity, VarSpec};
use mvkl::pipeline;
use mvkl::{bounds, io, GramSet, ModelFile, MvklError, Penalty, RunConfig};

/// Multiple kernel learning for vector-valued regression and Granger graphs.
#[derive(Parser)]
#[command(name = "mvkl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a regression model on a panel CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the objective trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Predict with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer a causal graph from a panel.
    Granger {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// N x N graph CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Write weights below this value as zero.
        #[arg(long)]
        threshold: Option<f64>,
        /// Directory for per-node model files and output kernels.
        #[arg(long)]
        models_dir: Option<PathBuf>,
    },
    /// Objective-versus-time traces over a cg_eps x sdp_iter grid.
    Bench {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print generalization bounds for a saved model.
    Bounds {
        #[arg(long)]
        model: PathBuf,
        /// Radius of the norm ball of the hypothesis class.
        #[arg(long)]
        lambda_norm: f64,
    },
    /// Simulate a sparse vector autoregression.
    Simulate {
        #[arg(long, default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 300)]
        len: usize,
        #[arg(long, default_value_t = 2)]
        lag: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = Plant::Linear)]
        plant: Plant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Panel CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the true adjacency as a graph CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Plant {
    Linear,
    Tanh,
}

fn exit_code(e: &MvklError) -> u8 {
    match e {
        MvklError::Config { .. }
        | MvklError::InvalidSpec(_)
        | MvklError::InvalidRegularization(_)
        | MvklError::Unsupported(_) => 2,
        MvklError::NumericalFailure(_) => 4,
        _ => 3,
    }
}

fn load_config(path: Option<&Path>) -> mvkl::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            MvklError::Io(err) => MvklError::Config {
                key: "<file>".into(),
                msg: format!("{}: {err}", p.display()),
            },
            other => other,
        }),
        None => Ok(RunConfig::default()),
    }
}

fn env_workers() -> mvkl::Result<Option<usize>> {
    match std::env::var("MVKL_WORKERS") {
        Ok(v) => v.trim().parse::<usize>().ok().filter(|w| *w > 0).map(Some).ok_or_else(|| MvklError::Config {
            key: "MVKL_WORKERS".into(),
            msg: format!("expected a positive integer, got `{v}`"),
        }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> mvkl::Result<()> {
    match cli.command {
        Command::Fit {
            data,
            config,
            out,
            trace,
        } => {
            let cfg = load_config(config.as_deref())?;
            let panel = io::read_panel(&data)?;
            let file = pipeline::fit_panel(&panel, &cfg)?;
            file.save(&out)?;
            if let Some(t) = trace {
                io::write_trace(&t, &file.model.trace)?;
            }
            let last = file.model.trace.last().map_or(f64::NAN, |p| p.objective);
            println!(
                "fitted {} kernels on {} samples; objective {last:.6e} after {} sweeps",
                file.model.dictionary.len(),
                file.model.x_train.nrows(),
                file.model.trace.len().saturating_sub(1)
            );
        }
        Command::Predict { model, data, out } => {
            let file = ModelFile::load(&model)?;
            let panel = io::read_panel(&data)?;
            let pred = pipeline::predict_panel(&file, &panel)?;
            let p = &file.preprocessing;
            io::write_series(&out, &pred.times, &p.output_nodes, &p.output_dims, &pred.values)?;
            if let Ok(r) = pipeline::training_rmse(&file, &panel, &pred) {
                println!("rmse {:.6e}", r.mean);
            }
        }
        Command::Granger {
            data,
            config,
            out,
            threshold,
            models_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let panel = io::read_panel(&data)?;
            let (result, files) = pipeline::granger_panel(&panel, &cfg, env_workers()?)?;
            io::write_graph(&out, &result.graph, threshold)?;
            if let Some(dir) = models_dir {
                std::fs::create_dir_all(&dir)?;
                for (fit, file) in result.fits.iter().zip(&files) {
                    file.save(&dir.join(format!("{}.model.json", fit.node)))?;
                    io::write_matrix(&dir.join(format!("{}.L.csv", fit.node)), fit.output_kernel())?;
                }
            }
            println!("graph over {} nodes written to {}", panel.nodes().len(), out.display());
        }
        Command::Bench { data, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let panel = io::read_panel(&data)?;
            let rows = pipeline::bench_panel(&panel, &cfg)?;
            io::write_bench(&out, &rows)?;
            let best = mvkl::bench::best_final_objective(&rows).unwrap_or(f64::NAN);
            println!("variant\tseconds_to_1pct\tfinal_objective");
            for v in mvkl::bench::variant_grid(&cfg.bench.cg_eps, &cfg.bench.sdp_iter) {
                let reach = mvkl::bench::time_to_reach(&rows, &v.label, best, 0.01);
                let last = rows.iter().rev().find(|r| r.variant == v.label).map_or(f64::NAN, |r| r.objective);
                let reach = reach.map_or("-".to_string(), |s| format!("{s:.4}"));
                println!("{}\t{reach}\t{last:.6e}", v.label);
            }
        }
        Command::Bounds { model, lambda_norm } => {
            let file = ModelFile::load(&model)?;
            let m = &file.model;
            let p = match m.config.penalty {
                Penalty::Lp { p } => p,
                Penalty::Elastic { .. } => {
                    return Err(MvklError::Unsupported("bounds cover l_p penalties only".into()));
                }
            };
            let gs = GramSet::build(&m.dictionary, &m.x_train)?;
            let kappa = gs.max_diagonal();
            let tau = m.state.output_kernel.tau();
            let l = gs.samples();
            let report = bounds::bound_report(lambda_norm, p, gs.len(), kappa, tau, l)?;
            let tr_l = m.output_kernel().trace().max(0.0);
            let u: Vec<f64> = gs.mats().iter().map(|k| (k.trace().max(0.0) * tr_l).sqrt()).collect();
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
            let general = |part| fmt(bounds::general_bound(lambda_norm, p, &u, l, part).ok());
            println!("m = {}, l = {l}, p = {p}, kappa = {kappa:.6e}, tau = {tau:.6e}", gs.len());
            println!("part\tseparable\tsample");
            println!("A\t{}\t{}", fmt(Some(report.part_a)), general(bounds::BoundPart::A));
            println!("B\t{}\t{}", fmt(report.part_b), general(bounds::BoundPart::B));
            println!("C\t{}\t{}", fmt(report.part_c), general(bounds::BoundPart::C));
            println!("C (min over r)\t{}\t-", fmt(report.part_c_minimized));
        }
        Command::Simulate {
            nodes,
            dim,
            len,
            lag,
            density,
            noise,
            plant,
            seed,
            out,
            truth,
        } => {
            let spec = VarSpec {
                nodes,
                dim,
                len,
                lag,
                density,
                nonlinearity: match plant {
                    Plant::Linear => Nonlinearity::Linear,
                    Plant::Tanh => Nonlinearity::Tanh,
                },
                noise,
                seed,
            };
            let sim = granger::generate_synthetic_var(&spec)?;
            io::write_panel(&out, &sim.panel)?;
            if let Some(t) = truth {
                let graph = mvkl::CausalGraph {
                    labels: sim.panel.nodes().to_vec(),
                    weights: sim.adjacency.map(|b| if b { 1.0 } else { 0.0 }),
                };
                io::write_graph(&t, &graph, None)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
