//! Command-line front end: train/build/query/add/reconfigure plus the
//! synthetic-data, ground-truth, and benchmark commands. Thin wrappers over
//! the library; see `examples/` for API-level walkthroughs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rii::bench::{self, KRule};
use rii::io::{self, VecsFormat};
use rii::{
    index::default_num_centers, opq, BuildOptions, CalibrationMode, Codebook, RiiIndex, SubsetIds,
    Target,
};

#[derive(Parser)]
#[command(
    name = "rii",
    about = "Reconfigurable inverted index for ANN search",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic Gaussian-mixture dataset (fvecs).
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 64)]
        clusters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a codebook (and optionally a rotation) and store it as an
    /// empty index.
    Train {
        /// Training vectors (fvecs/bvecs).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "Z", default_value_t = 256)]
        z: usize,
        #[arg(long, default_value_t = rii::pq::DEFAULT_TRAIN_ITERS)]
        iters: usize,
        /// Train an optimized-PQ rotation as well.
        #[arg(long)]
        opq: bool,
        #[arg(long, default_value_t = opq::DEFAULT_OPQ_ITERS)]
        opq_iters: usize,
        #[arg(long)]
        seed: u64,
        /// Output index file.
        #[arg(long)]
        index: PathBuf,
    },
    /// Encode a dataset and build the searchable index.
    Build {
        /// Base vectors (fvecs/bvecs).
        #[arg(long)]
        dataset: PathBuf,
        /// Reuse a trained codebook/rotation from `rii train`.
        #[arg(long)]
        trained: Option<PathBuf>,
        /// Subspace count, when training inline.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "Z", default_value_t = 256)]
        z: usize,
        #[arg(long, default_value_t = rii::pq::DEFAULT_TRAIN_ITERS)]
        iters: usize,
        #[arg(long)]
        opq: bool,
        #[arg(long, default_value_t = opq::DEFAULT_OPQ_ITERS)]
        opq_iters: usize,
        /// Cap on inline-training vectors.
        #[arg(long, default_value_t = 100_000)]
        train_limit: usize,
        /// Number of coarse centers; defaults to ceil(sqrt(N)).
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// Derive the switching threshold from the cost model instead of
        /// timing.
        #[arg(long)]
        analytic_theta: bool,
        #[arg(long)]
        index: PathBuf,
    },
    /// Append vectors to an existing index.
    Add {
        #[arg(long)]
        index: PathBuf,
        /// Vectors to append (fvecs/bvecs).
        #[arg(long)]
        dataset: PathBuf,
        /// Output path; defaults to rewriting --index.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-cluster the stored codes for the current database size.
    Reconfigure {
        #[arg(long)]
        index: PathBuf,
        /// New center count; defaults to ceil(sqrt(N)).
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        analytic_theta: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run queries, optionally restricted to a random subset.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long = "R", default_value_t = 10)]
        r: usize,
        /// Candidate budget; defaults to the index's stored value.
        #[arg(long = "L")]
        l: Option<usize>,
        /// Restrict the search to a random subset of this size.
        #[arg(long)]
        subset_size: Option<usize>,
        /// Seed for the random subset (required with --subset-size).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute exact ground truth (ivecs).
    Gt {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long = "R", default_value_t = 100)]
        r: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recall/latency sweep over candidate budgets (whole-database search).
    BenchRecall {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Exact ground truth (ivecs).
        #[arg(long)]
        groundtruth: PathBuf,
        #[arg(long = "R", default_value_t = 1)]
        r: usize,
        /// Candidate budgets; repeatable. Defaults to the index's value.
        #[arg(long = "L")]
        l: Vec<usize>,
        #[arg(long)]
        seed: u64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Subset-search benchmark: native subset queries vs post-checking over
    /// an exact scan.
    BenchSubset {
        #[arg(long)]
        index: PathBuf,
        /// The vectors the index was built from (for the exact baseline).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Subset sizes; repeatable.
        #[arg(long)]
        subset_size: Vec<usize>,
        /// Result counts; repeatable.
        #[arg(long = "R")]
        r: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Growth benchmark: latency before and after reconfiguring a grown
    /// synthetic index.
    BenchReconfigure {
        #[arg(long)]
        initial_n: usize,
        #[arg(long, default_value_t = 32)]
        d: usize,
        #[arg(long = "M", default_value_t = 8)]
        m: usize,
        /// Growth factors; repeatable (e.g. --growth 1 --growth 10).
        #[arg(long)]
        growth: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Re-run threshold calibration on an existing index.
    Calibrate {
        #[arg(long)]
        index: PathBuf,
        /// Candidate budgets to calibrate over; repeatable.
        #[arg(long = "L")]
        l: Vec<usize>,
        /// Trial queries (fvecs/bvecs); defaults to reconstructions sampled
        /// from the index.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes to stdout, exiting quietly when the consumer (e.g. `head`)
/// closed the pipe.
fn print_out(content: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(content.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

fn load_vectors(path: &Path) -> Result<Vec<Vec<f32>>> {
    let format = VecsFormat::from_path(path)?;
    io::read_vectors(path, format)
        .with_context(|| format!("loading vectors from {}", path.display()))
}

fn load_index(path: &Path) -> Result<RiiIndex> {
    RiiIndex::load_from_path(path).with_context(|| format!("loading index {}", path.display()))
}

fn save_index(idx: &RiiIndex, path: &Path) -> Result<()> {
    let bytes = idx
        .save_to_path(path)
        .with_context(|| format!("saving index {}", path.display()))?;
    eprintln!("wrote {} ({bytes} bytes)", path.display());
    Ok(())
}

fn emit_report(report: &bench::BenchReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, report.to_csv())
                .with_context(|| format!("writing report {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print_out(&report.to_csv()),
    }
    Ok(())
}

fn train_codebook(
    training: &[Vec<f32>],
    m: usize,
    z: usize,
    iters: usize,
    use_opq: bool,
    opq_iters: usize,
    seed: u64,
) -> Result<(Codebook, Option<opq::Rotation>)> {
    if use_opq {
        let (rot, cb) = opq::train_rotation_with_iters(training, m, z, iters, opq_iters, seed)
            .context("training rotation")?;
        Ok((cb, Some(rot)))
    } else {
        let cb = Codebook::train(training, m, z, iters, seed).context("training codebook")?;
        Ok((cb, None))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            n,
            d,
            clusters,
            seed,
            out,
        } => {
            let data = bench::generate_synthetic(n, d, clusters, seed);
            io::write_fvecs(&out, &data).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} ({n} x {d})", out.display());
        }
        Command::Train {
            dataset,
            m,
            z,
            iters,
            opq: use_opq,
            opq_iters,
            seed,
            index,
        } => {
            let training = load_vectors(&dataset)?;
            let (cb, rotation) = train_codebook(&training, m, z, iters, use_opq, opq_iters, seed)?;
            let idx = RiiIndex::build_with(
                cb,
                &[],
                0,
                seed,
                BuildOptions {
                    rotation,
                    calibration: CalibrationMode::Timed,
                },
            )
            .context("assembling trained index")?;
            save_index(&idx, &index)?;
        }
        Command::Build {
            dataset,
            trained,
            m,
            z,
            iters,
            opq: use_opq,
            opq_iters,
            train_limit,
            k,
            seed,
            analytic_theta,
            index,
        } => {
            let base = load_vectors(&dataset)?;
            if base.is_empty() {
                bail!("dataset {} is empty", dataset.display());
            }
            let (cb, rotation) = match trained {
                Some(path) => {
                    let t = load_index(&path)?;
                    (t.codebook().clone(), t.rotation().cloned())
                }
                None => {
                    let m = m.context("--M is required when no --trained index is given")?;
                    let limit = base.len().min(train_limit);
                    train_codebook(&base[..limit], m, z, iters, use_opq, opq_iters, seed)?
                }
            };
            let k = k.unwrap_or_else(|| default_num_centers(base.len()));
            let calibration = if analytic_theta {
                CalibrationMode::Analytic
            } else {
                CalibrationMode::Timed
            };
            let idx = RiiIndex::build_with(
                cb,
                &base,
                k,
                seed,
                BuildOptions {
                    rotation,
                    calibration,
                },
            )
            .context("building index")?;
            eprintln!(
                "built index: N={} K={k} theta={}{}",
                idx.num_vectors(),
                idx.theta(),
                if idx.theta_is_analytic() {
                    " (analytic)"
                } else {
                    ""
                }
            );
            save_index(&idx, &index)?;
        }
        Command::Add {
            index,
            dataset,
            out,
        } => {
            let mut idx = load_index(&index)?;
            let new = load_vectors(&dataset)?;
            for v in &new {
                idx.add(v).context("appending vector")?;
            }
            eprintln!("added {} vectors, N={}", new.len(), idx.num_vectors());
            save_index(&idx, out.as_deref().unwrap_or(&index))?;
        }
        Command::Reconfigure {
            index,
            k,
            seed,
            analytic_theta,
            out,
        } => {
            let mut idx = load_index(&index)?;
            let k = k.unwrap_or_else(|| default_num_centers(idx.num_vectors()));
            let mode = if analytic_theta {
                CalibrationMode::Analytic
            } else {
                CalibrationMode::Timed
            };
            let start = std::time::Instant::now();
            idx.reconfigure_with(k, seed, mode)
                .context("reconfiguring")?;
            eprintln!(
                "reconfigured to K={k} in {:.1} ms, theta={}",
                start.elapsed().as_secs_f64() * 1e3,
                idx.theta()
            );
            save_index(&idx, out.as_deref().unwrap_or(&index))?;
        }
        Command::Query {
            index,
            queries,
            r,
            l,
            subset_size,
            seed,
        } => {
            let idx = load_index(&index)?;
            let queries = load_vectors(&queries)?;
            let subset = match subset_size {
                Some(size) => {
                    let seed = seed.context("--seed is required with --subset-size")?;
                    Some(SubsetIds::sample(idx.num_vectors(), size, seed)?)
                }
                None => None,
            };
            for (qi, q) in queries.iter().enumerate() {
                let target = match &subset {
                    Some(s) => Target::Subset(s),
                    None => Target::All,
                };
                let (hits, path) = idx
                    .query_with_path(q, r, target, l)
                    .with_context(|| format!("query {qi}"))?;
                let rendered: Vec<String> = hits
                    .iter()
                    .map(|h| format!("{}:{:.4}", h.id, h.distance))
                    .collect();
                print_out(&format!("query {qi} [{path:?}]: {}\n", rendered.join(" ")));
            }
        }
        Command::Gt {
            dataset,
            queries,
            r,
            out,
        } => {
            let base = load_vectors(&dataset)?;
            let queries = load_vectors(&queries)?;
            let truth = bench::ground_truth(&base, &queries, r);
            let rows: Vec<Vec<i32>> = truth
                .into_iter()
                .map(|row| row.into_iter().map(|id| id as i32).collect())
                .collect();
            io::write_ivecs(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} ({} queries, top-{r})", out.display(), rows.len());
        }
        Command::BenchRecall {
            index,
            queries,
            groundtruth,
            r,
            l,
            seed,
            report,
        } => {
            let idx = load_index(&index)?;
            let queries = load_vectors(&queries)?;
            let truth: Vec<Vec<u32>> = io::read_ivecs(&groundtruth)
                .context("loading ground truth")?
                .into_iter()
                .map(|row| row.into_iter().map(|id| id as u32).collect())
                .collect();
            let l_grid = if l.is_empty() {
                vec![idx.default_l()]
            } else {
                l
            };
            let out = bench::bench_recall(
                &idx,
                &queries,
                &truth,
                &l_grid,
                r,
                seed,
                &index.display().to_string(),
            )
            .context("recall benchmark")?;
            emit_report(&out, report.as_deref())?;
        }
        Command::BenchSubset {
            index,
            dataset,
            queries,
            subset_size,
            r,
            seed,
            report,
        } => {
            let idx = load_index(&index)?;
            let base = load_vectors(&dataset)?;
            let queries = load_vectors(&queries)?;
            let sizes = if subset_size.is_empty() {
                vec![100, 1000, 10_000]
            } else {
                subset_size
            };
            let r_list = if r.is_empty() { vec![1, 10, 100] } else { r };
            let out = bench::bench_subset(
                &idx,
                &base,
                &queries,
                &sizes,
                &r_list,
                seed,
                &dataset.display().to_string(),
            )
            .context("subset benchmark")?;
            emit_report(&out, report.as_deref())?;
        }
        Command::BenchReconfigure {
            initial_n,
            d,
            m,
            growth,
            seed,
            report,
        } => {
            let factors = if growth.is_empty() {
                vec![1, 10]
            } else {
                growth
            };
            let dataset = format!("synthetic-n{initial_n}-d{d}-seed{seed}");
            let out =
                bench::bench_reconfigure(initial_n, d, m, &factors, KRule::SqrtOfN, seed, &dataset)
                    .context("reconfigure benchmark")?;
            emit_report(&out, report.as_deref())?;
        }
        Command::Calibrate {
            index,
            l,
            queries,
            seed,
            out,
        } => {
            let mut idx = load_index(&index)?;
            let trial = match queries {
                Some(path) => load_vectors(&path)?,
                None => {
                    let n = idx.num_vectors();
                    SubsetIds::sample(n, n.min(3), seed)?
                        .ids()
                        .iter()
                        .map(|&id| idx.reconstruct(id))
                        .collect::<rii::Result<Vec<_>>>()?
                }
            };
            let l_grid = if l.is_empty() {
                vec![idx.default_l()]
            } else {
                l
            };
            let outcome = idx
                .calibrate_threshold(&l_grid, &trial, seed)
                .context("calibrating threshold")?;
            for (l, crossover) in &outcome.per_budget {
                print_out(&format!("L={l} crossover={crossover:.0}\n"));
            }
            print_out(&format!(
                "theta={}{}\n",
                outcome.theta,
                if outcome.analytic { " (analytic)" } else { "" }
            ));
            save_index(&idx, out.as_deref().unwrap_or(&index))?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
