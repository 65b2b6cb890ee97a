//! The `oocmat` command line: data generation, conversion, algorithm runs,
//! fused/unfused benchmarks and DAG listings. Reports are `key=value` lines
//! on stdout.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dag::Matrix;
use crate::datasets;
use crate::engine::{BackingKind, Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::ml;
use crate::sparse::{self, CsrGraph};
use crate::storage::{parse_dense_text, write_dense_text, DenseMatrix, ElemType};

#[derive(Parser, Debug)]
#[command(name = "oocmat", version, about = "Out-of-core matrix engine with fused generalized operations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(flatten)]
    pub algo: AlgoOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Chunk-pool budget, e.g. 512M or 4G
    #[arg(long = "mem-budget", global = true, value_parser = parse_size, default_value = "4G")]
    pub mem_budget: usize,
    /// Bytes per cache-sized slice of the widest node
    #[arg(long = "cache-budget", global = true, value_parser = parse_size, default_value = "256K")]
    pub cache_budget: usize,
    /// Bytes of I/O partitions per scheduler task
    #[arg(long = "io-batch", global = true, value_parser = parse_size, default_value = "64M")]
    pub io_batch: usize,
    /// Where materialized matrices live
    #[arg(long, global = true, value_enum, default_value = "memory")]
    pub backing: Backing,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Directory for temporary files [default: system temp dir]
    #[arg(long, global = true)]
    pub tmpdir: Option<PathBuf>,
    /// Rows per I/O partition (power of two)
    #[arg(long = "part-rows", global = true, default_value_t = 1 << 16)]
    pub part_rows: usize,
}

#[derive(Args, Debug, Clone)]
pub struct AlgoOpts {
    /// Clusters for kmeans, components for pca, classes for generators
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long = "max-iters", global = true)]
    pub max_iters: Option<usize>,
    /// PageRank damping factor
    #[arg(long, global = true, default_value_t = 0.15)]
    pub damping: f64,
    /// PageRank convergence threshold [default: 0.01/n]
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Center columns before PCA
    #[arg(long, global = true)]
    pub center: bool,
    /// Logistic regression loss-decrease threshold
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backing {
    Memory,
    File,
}

impl From<Backing> for BackingKind {
    fn from(b: Backing) -> Self {
        match b {
            Backing::Memory => BackingKind::Memory,
            Backing::File => BackingKind::File,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Output path; `.flmx` is native, anything else delimited text
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        p: usize,
        /// Distance between neighbouring blob centers
        #[arg(long, default_value_t = 10.0)]
        sep: f64,
        /// Per-coordinate standard deviation of blobs
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Out-degree of generated graphs
        #[arg(long, default_value_t = 8)]
        degree: usize,
        /// Gap between the two logistic2d classes
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
    },
    /// Run an algorithm and print a report
    Run {
        #[arg(value_enum)]
        algorithm: Algorithm,
        /// Data matrix, edge list or sparse file (Sigma for mvrnorm)
        #[arg(long)]
        input: PathBuf,
        /// Labels: ground truth for kmeans, targets for classifiers
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Where to write the fitted model or result
        #[arg(long)]
        output: Option<PathBuf>,
        /// Rows to sample for mvrnorm
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Compare fused/unfused and memory/file execution of one algorithm
    Bench {
        #[arg(value_enum)]
        algorithm: BenchAlgorithm,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Print the DAG of a canned program
    Dag {
        #[arg(value_enum)]
        program: DagProgram,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        p: usize,
    },
    /// Convert between delimited text, native dense and sparse files
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Element type when reading text
        #[arg(long, value_enum, default_value = "f64")]
        elem: Elem,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Blobs,
    Logistic2d,
    Uniform,
    Normal,
    Graph,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Correlation,
    Pca,
    Kmeans,
    Logistic,
    NaiveBayes,
    Lda,
    Pagerank,
    Mvrnorm,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchAlgorithm {
    Correlation,
    Pca,
    Kmeans,
    Logistic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DagProgram {
    KmeansIter,
    LogregIter,
    Corr,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elem {
    F64,
    I64,
}

/// Parses `4096`, `256K`, `64M`, `4G` (binary units).
pub fn parse_size(s: &str) -> std::result::Result<usize, String> {
    let s = s.trim();
    let (num, shift) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 10),
        Some('M') => (&s[..s.len() - 1], 20),
        Some('G') => (&s[..s.len() - 1], 30),
        _ => (s, 0),
    };
    let v: usize = num.trim().parse().map_err(|_| format!("bad size {s:?}"))?;
    v.checked_mul(1 << shift).ok_or_else(|| format!("size {s:?} overflows"))
}

/// Ordered `key=value` report lines.
#[derive(Default, Debug)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn put(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn put_list(&mut self, key: &str, values: &[f64]) {
        let s: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.put(key, s.join(","));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

impl GlobalOpts {
    pub fn engine_config(&self) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            workers: self.workers.unwrap_or(d.workers),
            memory_budget: self.mem_budget,
            chunk_bytes: d.chunk_bytes.min(self.mem_budget),
            cache_budget: self.cache_budget,
            io_batch_bytes: self.io_batch,
            part_rows: self.part_rows,
            backing: self.backing.into(),
            tmpdir: self.tmpdir.clone().unwrap_or(d.tmpdir),
            ..d
        }
    }

    fn echo(&self, r: &mut Report, cfg: &EngineConfig) {
        r.put("workers", cfg.workers);
        r.put("mem_budget", cfg.memory_budget);
        r.put("cache_budget", cfg.cache_budget);
        r.put("io_batch", cfg.io_batch_bytes);
        r.put("backing", cfg.backing.name());
        r.put("seed", self.seed);
        r.put("tmpdir", cfg.tmpdir.display());
        r.put("part_rows", cfg.part_rows);
    }
}

/// Whether a run reached its stopping rule; drives the exit code.
enum Outcome {
    Done,
    NotConverged,
}

fn ext(p: &Path) -> &str {
    p.extension().and_then(|e| e.to_str()).unwrap_or("")
}

fn text_delimiter(p: &Path) -> char {
    if ext(p) == "csv" {
        ','
    } else {
        ' '
    }
}

/// Loads a dense matrix: native `.flmx` files honour the backing, text is
/// parsed into memory.
pub fn load_dense(engine: &Engine, path: &Path, ty: ElemType) -> Result<Matrix> {
    if ext(path) == "flmx" {
        engine.load_native_backed(path, engine.config().backing)
    } else {
        engine.load_dense_text(path, text_delimiter(path), ty)
    }
}

fn load_text_local(path: &Path, ty: ElemType) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dense_text(&text, text_delimiter(path), ty)
}

fn load_labels(engine: &Engine, path: &Path) -> Result<Matrix> {
    let m = load_dense(engine, path, ElemType::I64)?;
    if m.elem_type().is_float() {
        m.cast(ElemType::I64)
    } else {
        Ok(m)
    }
}

fn load_graph(engine: &Engine, path: &Path) -> Result<(CsrGraph, usize)> {
    if ext(path) == "flsx" {
        Ok((CsrGraph::open(engine, path)?, 0))
    } else {
        sparse::load_sparse_edges(engine, path, None)
    }
}

fn save_dense(m: &Matrix, path: &Path) -> Result<()> {
    if ext(path) == "flmx" {
        m.save_native(path)
    } else {
        save_local(&m.to_local()?, path)
    }
}

fn save_local(m: &DenseMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, write_dense_text(m, text_delimiter(path))).map_err(|e| Error::io(path, e))
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    p.as_ref().ok_or_else(|| Error::invalid(format!("--{what} is required")))
}

fn io_fields(r: &mut Report, engine: &Engine, before: crate::storage::IoSnapshot, start: Instant) {
    let d = engine.io().snapshot().since(&before);
    r.put("seconds", format!("{:.6}", start.elapsed().as_secs_f64()));
    r.put("bytes_read", d.bytes_read);
    r.put("bytes_written", d.bytes_written);
    r.put("peak_pool_bytes", engine.pool_stats().high_water_bytes);
}

fn cmd_gen(cli: &Cli, kind: GenKind, out: &Path, n: usize, p: usize, sep: f64, sigma: f64, degree: usize, margin: f64) -> Result<Report> {
    let cfg = cli.global.engine_config();
    let engine = Engine::new(cfg.clone())?;
    let seed = cli.global.seed;
    let mut r = Report::default();
    r.put("command", "gen");
    r.put("kind", format!("{kind:?}").to_lowercase());
    cli.global.echo(&mut r, &cfg);
    let start = Instant::now();
    let before = engine.io().snapshot();
    let label_path = |out: &Path| -> PathBuf {
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
        let e = if ext(out).is_empty() { "txt" } else { ext(out) };
        out.with_file_name(format!("{stem}.labels.{e}"))
    };
    match kind {
        GenKind::Graph => {
            let edges = datasets::random_graph(n, degree, seed);
            std::fs::write(out, datasets::edges_to_text(&edges)).map_err(|e| Error::io(out, e))?;
            r.put("n", n);
            r.put("edges", edges.len());
        }
        GenKind::Uniform | GenKind::Normal => {
            let x = if kind == GenKind::Uniform {
                engine.runif_matrix(n, p, seed)?
            } else {
                engine.rnorm_matrix(n, p, seed)?
            };
            save_dense(&x, out)?;
            r.put("n", n);
            r.put("p", p);
        }
        GenKind::Blobs | GenKind::Logistic2d => {
            let (x, y) = if kind == GenKind::Blobs {
                datasets::blobs(&engine, n, p, cli.algo.k.unwrap_or(3), sep, sigma, seed)?
            } else {
                datasets::logistic2d(&engine, n, margin, seed)?
            };
            let lp = label_path(out);
            y.set_cache(crate::dag::CacheWhere::Memory);
            save_dense(&x, out)?;
            save_dense(&y, &lp)?;
            r.put("n", x.nrow());
            r.put("p", x.ncol());
            r.put("labels", lp.display());
        }
    }
    r.put("output", out.display());
    io_fields(&mut r, &engine, before, start);
    Ok(r)
}

fn cmd_run(cli: &Cli, algorithm: Algorithm, input: &Path, labels: &Option<PathBuf>, output: &Option<PathBuf>, n: usize) -> Result<(Report, Outcome)> {
    let cfg = cli.global.engine_config();
    let engine = Engine::new(cfg.clone())?;
    let a = &cli.algo;
    let seed = cli.global.seed;
    let mut r = Report::default();
    r.put("command", "run");
    r.put("algorithm", format!("{algorithm:?}").to_lowercase());
    cli.global.echo(&mut r, &cfg);
    let mut outcome = Outcome::Done;
    let start = Instant::now();
    let before = engine.io().snapshot();
    match algorithm {
        Algorithm::Correlation => {
            let x = load_dense(&engine, input, ElemType::F64)?;
            let before = engine.io().snapshot();
            let c = ml::correlation(&x)?;
            let read = engine.io().snapshot().since(&before).bytes_read;
            r.put("n", x.nrow());
            r.put("p", x.ncol());
            r.put("input_bytes", x.nrow() * x.ncol() * 8);
            r.put("pass_bytes_read", read);
            if let Some(o) = output {
                save_local(&c, o)?;
            }
        }
        Algorithm::Pca => {
            let x = load_dense(&engine, input, ElemType::F64)?;
            let k = a.k.unwrap_or(x.ncol()).min(x.ncol());
            let res = ml::pca(&x, k, a.center)?;
            r.put("k", k);
            r.put("center", a.center);
            r.put("sweeps", res.sweeps);
            r.put_list("eigenvalues", &res.values[..k]);
            if let Some(o) = output {
                save_local(&res.vectors, o)?;
            }
        }
        Algorithm::Kmeans => {
            let x = load_dense(&engine, input, ElemType::F64)?;
            let k = a.k.unwrap_or(10);
            let res = ml::kmeans(&x, k, a.max_iters.unwrap_or(100), seed)?;
            r.put("k", k);
            r.put("iterations", res.iterations);
            r.put("moved_last", res.moved_last);
            r.put("converged", res.converged);
            r.put("objective", res.objective.last().unwrap());
            if let Some(lp) = labels {
                let truth = load_labels(&engine, lp)?.to_local()?.to_i64_vec();
                let got = res.assignment.to_local()?.to_i64_vec();
                r.put("ari", ml::adjusted_rand_index(&got, &truth));
            }
            if let Some(o) = output {
                save_local(&res.centers, o)?;
            }
            if !res.converged {
                outcome = Outcome::NotConverged;
            }
        }
        Algorithm::Logistic => {
            let x = load_dense(&engine, input, ElemType::F64)?;
            let y = load_dense(&engine, require(labels, "labels")?, ElemType::F64)?;
            let m = ml::logistic_regression(&x, &y, a.max_iters.unwrap_or(1000), a.tol)?;
            let pred = m.predict(&x)?.cast(ElemType::I64)?.to_local()?.to_i64_vec();
            let truth = y.cast(ElemType::I64)?.to_local()?.to_i64_vec();
            r.put("iterations", m.iterations);
            r.put("passes", m.passes);
            r.put("converged", m.converged);
            r.put("logloss", m.logloss_trace.last().unwrap());
            r.put("accuracy", ml::accuracy(&pred, &truth));
            if let Some(o) = output {
                save_local(&DenseMatrix::from_f64(1, m.theta.len(), m.theta.clone())?, o)?;
            }
            if !m.converged {
                outcome = Outcome::NotConverged;
            }
        }
        Algorithm::NaiveBayes | Algorithm::Lda => {
            let x = load_dense(&engine, input, ElemType::F64)?;
            let y = load_labels(&engine, require(labels, "labels")?)?;
            let (pred, model) = if algorithm == Algorithm::NaiveBayes {
                let m = ml::naive_bayes_train(&x, &y, a.k, ml::NB_EPSILON)?;
                let rows: Vec<Vec<f64>> = (0..m.k())
                    .map(|c| [&m.means[c * m.p..(c + 1) * m.p], &m.variances[c * m.p..(c + 1) * m.p]].concat())
                    .collect();
                (m.predict(&x)?, DenseMatrix::from_rows(&rows)?)
            } else {
                let m = ml::lda_train(&x, &y, a.k)?;
                let rows: Vec<Vec<f64>> = (0..m.k()).map(|c| m.means[c * m.p..(c + 1) * m.p].to_vec()).collect();
                (m.predict(&x)?, DenseMatrix::from_rows(&rows)?)
            };
            let pred = pred.to_local()?.to_i64_vec();
            let truth = y.to_local()?.to_i64_vec();
            r.put("classes", model.nrow());
            r.put("accuracy", ml::accuracy(&pred, &truth));
            if let Some(o) = output {
                save_local(&model, o)?;
            }
        }
        Algorithm::Pagerank => {
            let (g, dups) = load_graph(&engine, input)?;
            let st = ml::pagerank(&g, a.damping, a.epsilon, a.max_iters.unwrap_or(100))?;
            r.put("n", g.n());
            r.put("nnz", g.nnz());
            r.put("duplicates", dups);
            r.put("damping", st.damping);
            r.put("epsilon", st.epsilon);
            r.put("iterations", st.iterations);
            r.put("converged", st.converged);
            r.put("last_delta", st.last_delta);
            if g.n() <= 20 {
                r.put_list("pr", &st.pr);
            }
            if let Some(o) = output {
                save_local(&DenseMatrix::column_f64(st.pr.clone()), o)?;
            }
            if !st.converged {
                outcome = Outcome::NotConverged;
            }
        }
        Algorithm::Mvrnorm => {
            let sigma = load_text_local(input, ElemType::F64)?;
            let mu = vec![0.0; sigma.nrow()];
            let x = ml::mvrnorm(&engine, n, &mu, &sigma, seed)?;
            let o = require(output, "output")?;
            save_dense(&x, o)?;
            r.put("n", n);
            r.put("p", sigma.nrow());
        }
    }
    io_fields(&mut r, &engine, before, start);
    Ok((r, outcome))
}

const MODES: [(bool, Backing); 4] = [
    (true, Backing::Memory),
    (false, Backing::Memory),
    (true, Backing::File),
    (false, Backing::File),
];

fn bench_once(engine: &Engine, algorithm: BenchAlgorithm, input: &Path, labels: Option<&Path>, cli: &Cli) -> Result<Vec<f64>> {
    let x = load_dense(engine, input, ElemType::F64)?;
    Ok(match algorithm {
        BenchAlgorithm::Correlation => ml::correlation(&x)?.to_f64_vec(),
        BenchAlgorithm::Pca => ml::pca(&x, cli.algo.k.unwrap_or(x.ncol()).min(x.ncol()), cli.algo.center)?.values,
        BenchAlgorithm::Kmeans => {
            let k = cli.algo.k.unwrap_or(10);
            ml::kmeans(&x, k, cli.algo.max_iters.unwrap_or(10), cli.global.seed)?
                .centers
                .to_f64_vec()
        }
        BenchAlgorithm::Logistic => {
            let path = labels.ok_or_else(|| Error::invalid("--labels is required"))?;
            let y = load_dense(engine, path, ElemType::F64)?;
            ml::logistic_regression(&x, &y, cli.algo.max_iters.unwrap_or(20), cli.algo.tol)?.theta
        }
    })
}

fn cmd_bench(cli: &Cli, algorithm: BenchAlgorithm, input: &Path, labels: &Option<PathBuf>) -> Result<Report> {
    let base = cli.global.engine_config();
    let mut r = Report::default();
    r.put("command", "bench");
    r.put("algorithm", format!("{algorithm:?}").to_lowercase());
    cli.global.echo(&mut r, &base);
    let mut rows = Vec::new();
    let mut reference: Option<(String, Vec<f64>)> = None;
    for (fused, backing) in MODES {
        let cfg = EngineConfig {
            fused,
            backing: backing.into(),
            ..base.clone()
        };
        let engine = Engine::new(cfg)?;
        let mode = format!("{}-{}", if fused { "fused" } else { "unfused" }, BackingKind::from(backing).name());
        let before = engine.io().snapshot();
        let start = Instant::now();
        let result = bench_once(&engine, algorithm, input, labels.as_deref(), cli)?;
        let secs = start.elapsed().as_secs_f64();
        let io = engine.io().snapshot().since(&before);
        match &reference {
            None => reference = Some((mode.clone(), result)),
            Some((ref_mode, want)) => {
                let same = want.len() == result.len()
                    && want.iter().zip(&result).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    let (idx, diff) = want
                        .iter()
                        .zip(&result)
                        .map(|(a, b)| (a - b).abs())
                        .enumerate()
                        .fold((0, 0.0), |m, (i, d)| if d > m.1 { (i, d) } else { m });
                    return Err(Error::Numerical(format!(
                        "results differ between {ref_mode} and {mode}: max |diff| {diff:e} at index {idx}"
                    )));
                }
            }
        }
        rows.push(format!(
            "{mode},{fused},{},{secs:.6},{},{},{}",
            BackingKind::from(backing).name(),
            io.bytes_read,
            io.bytes_written,
            engine.pool_stats().high_water_bytes
        ));
    }
    r.put("results_equal", true);
    r.put("table.columns", "mode,fused,backing,seconds,bytes_read,bytes_written,peak_pool_bytes");
    for row in rows {
        r.put("table.row", row);
    }
    Ok(r)
}

/// The listing printed by `oocmat dag`: the DAG one iteration of `program` builds; `k` defaults to 10 clusters.
pub fn dag_listing(program: DagProgram, n: usize, p: usize, k: Option<usize>, seed: u64) -> Result<String> {
    let engine = Engine::new(EngineConfig::default())?;
    let x = engine.runif_matrix(n, p, seed)?;
    let outputs = match program {
        DagProgram::Corr => vec![x.col_sums()?, x.crossprod(&x)?],
        DagProgram::KmeansIter => {
            let k = k.unwrap_or(10).min(n);
            let c = engine.runif_matrix(k, p, seed ^ 1)?.to_local()?;
            let step = ml::KmeansStep::build(&x, &c, None)?;
            step.labels.set_cache(crate::dag::CacheWhere::Memory);
            vec![step.centers()?, step.objective]
        }
        DagProgram::LogregIter => {
            let y = engine.runif_matrix(n, 1, seed ^ 2)?.gt_scalar(0.5)?.cast(ElemType::F64)?;
            let (loss, grad) = ml::loss_grad_dag(&x, &y, &[vec![0.0; p]])?;
            vec![loss, grad]
        }
    };
    Ok(Matrix::dump_all(&outputs))
}

fn cmd_convert(cli: &Cli, input: &Path, output: &Path, elem: Elem) -> Result<Report> {
    let cfg = cli.global.engine_config();
    let engine = Engine::new(cfg)?;
    let ty = match elem {
        Elem::F64 => ElemType::F64,
        Elem::I64 => ElemType::I64,
    };
    let mut r = Report::default();
    r.put("command", "convert");
    r.put("input", input.display());
    r.put("output", output.display());
    if ext(output) == "flsx" {
        let (g, dups) = sparse::load_sparse_edges(&engine, input, None)?;
        g.save(output)?;
        r.put("n", g.n());
        r.put("nnz", g.nnz());
        r.put("duplicates", dups);
    } else {
        let m = load_dense(&engine, input, ty)?;
        save_dense(&m, output)?;
        r.put("n", m.nrow());
        r.put("p", m.ncol());
        r.put("elem", m.elem_type().name());
    }
    Ok(r)
}

/// Exit status for an error category.
pub fn exit_code(category: &str) -> i32 {
    match category {
        "usage" => 2,
        "format" => 3,
        "io" => 4,
        "memory" => 5,
        "numerical" => 6,
        _ => 7,
    }
}

/// Runs a parsed command line, returning the report text and exit code.
pub fn execute(cli: &Cli) -> (String, i32) {
    let res = match &cli.command {
        Command::Gen {
            kind,
            out,
            n,
            p,
            sep,
            sigma,
            degree,
            margin,
        } => cmd_gen(cli, *kind, out, *n, *p, *sep, *sigma, *degree, *margin).map(|r| (r, Outcome::Done)),
        Command::Run {
            algorithm,
            input,
            labels,
            output,
            n,
        } => cmd_run(cli, *algorithm, input, labels, output, *n),
        Command::Bench {
            algorithm,
            input,
            labels,
        } => cmd_bench(cli, *algorithm, input, labels).map(|r| (r, Outcome::Done)),
        Command::Dag { program, n, p } => {
            return match dag_listing(*program, *n, *p, cli.algo.k, cli.global.seed) {
                Ok(s) => (s, 0),
                Err(e) => error_report(&e),
            }
        }
        Command::Convert { input, output, elem } => cmd_convert(cli, input, output, *elem).map(|r| (r, Outcome::Done)),
    };
    match res {
        Ok((mut r, outcome)) => {
            let code = match outcome {
                Outcome::Done => 0,
                Outcome::NotConverged => 1,
            };
            r.put("status", if code == 0 { "ok" } else { "not_converged" });
            (r.render(), code)
        }
        Err(e) => error_report(&e),
    }
}

fn error_report(e: &Error) -> (String, i32) {
    let mut r = Report::default();
    r.put("status", "error");
    r.put("error_category", e.category());
    r.put("error", e.to_string().replace('\n', " "));
    (r.render(), exit_code(e.category()))
}

/// Entry point of the `oocmat` binary.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (text, code) = execute(&cli);
    print!("{text}");
    if code >= 2 {
        eprintln!("oocmat: {}", text.lines().find_map(|l| l.strip_prefix("error=")).unwrap_or("failed"));
    }
    code
}
