//! `knnctc bench`: search latency for the brute-force and partitioned
//! paths over a datastore, asserting that both return identical results.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use knnctc_core::{auto_partitions, brute_force_search, rng::SplitMix64, KnnIndex};

use crate::error::{CliError, Result};
use crate::store_io::read_store;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Datastore to benchmark
    #[arg(long)]
    pub store: PathBuf,
    /// Number of random queries [default: 100]
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    /// Neighbors per query [default: 1024]
    #[arg(long, default_value_t = 1024)]
    pub k: usize,
    /// Timed repetitions over the query set [default: 3]
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Partition count for the fast path [default: auto]
    #[arg(long)]
    pub partitions: Option<usize>,
}

const QUERY_SEED: u64 = 0xBE7C_AB1E_D00D_FEED;

fn stats_line(name: &str, latencies: &mut [f64]) -> String {
    latencies.sort_by(f64::total_cmp);
    let n = latencies.len();
    let mean = latencies.iter().sum::<f64>() / n as f64;
    let median = latencies[n / 2];
    let p99 = latencies[((n as f64 * 0.99) as usize).min(n - 1)];
    format!(
        "{name}: mean_us={:.2} median_us={:.2} p99_us={:.2} qps={:.0}",
        mean * 1e6,
        median * 1e6,
        p99 * 1e6,
        1.0 / mean
    )
}

pub fn run(args: &BenchArgs) -> Result<()> {
    if args.queries == 0 || args.repeat == 0 || args.k == 0 {
        return Err(CliError::usage("--queries, --k and --repeat must be >= 1"));
    }
    let ds = read_store(&args.store)?;
    if ds.is_empty() {
        return Err(CliError::usage_in(&args.store, "store has no entries"));
    }
    let partitions = args.partitions.unwrap_or_else(|| auto_partitions(ds.count()));
    let index = KnnIndex::build(&ds, partitions)?;
    println!(
        "store: {} entries={} dim={} partitions={}",
        args.store.display(),
        ds.count(),
        ds.dim(),
        index.n_partitions()
    );

    // Queries: a stored key plus Gaussian jitter, deterministic in the seed.
    let mut rng = SplitMix64::new(QUERY_SEED);
    let queries: Vec<Vec<f32>> = (0..args.queries)
        .map(|_| {
            let base = ds.key(rng.next_range(ds.count() as u64) as usize);
            base.iter()
                .map(|&x| x + 0.1 * rng.next_gaussian() as f32)
                .collect()
        })
        .collect();

    // Warmup plus equality check on every query.
    for q in &queries {
        let brute = brute_force_search(&ds, q, args.k)?;
        let fast = index.search(q, args.k)?;
        if brute != fast {
            return Err(CliError::data(format!(
                "{}: partitioned search disagrees with the full scan",
                args.store.display()
            )));
        }
    }

    let mut brute_lat = Vec::with_capacity(args.queries * args.repeat);
    let mut fast_lat = Vec::with_capacity(args.queries * args.repeat);
    for _ in 0..args.repeat {
        for q in &queries {
            let t0 = Instant::now();
            let brute = brute_force_search(&ds, q, args.k)?;
            brute_lat.push(t0.elapsed().as_secs_f64());
            let t1 = Instant::now();
            let fast = index.search(q, args.k)?;
            fast_lat.push(t1.elapsed().as_secs_f64());
            if brute != fast {
                return Err(CliError::data(format!(
                    "{}: partitioned search disagrees with the full scan",
                    args.store.display()
                )));
            }
        }
    }
    println!("{}", stats_line("brute_force", &mut brute_lat));
    println!("{}", stats_line("partitioned", &mut fast_lat));
    println!("exact: true");
    Ok(())
}
