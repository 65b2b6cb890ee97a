//! Random GenOp programs for the fusion-equivalence checks.

use std::path::Path;

use oocmat::genops::{AggFn, BinaryFn, MapFn};
use oocmat::storage::{DenseMatrix, ElemType};
use oocmat::{BackingKind, CacheWhere, Engine, EngineConfig, Matrix};
use proptest::prelude::*;

use super::{agg_fn, binary_fn, bits, map_fn, value_agg_fn};

#[derive(Clone, Debug)]
pub enum Step {
    Map { src: usize, f: MapFn },
    Zip { a: usize, b: usize, f: BinaryFn },
    Row { src: usize, v: Vec<f64>, f: BinaryFn },
    /// `mapply_col(src, agg_row(other, g), f)`
    ColOfAgg { src: usize, other: usize, g: AggFn, f: BinaryFn },
    /// `mapply_row(src, agg_col(src, g), Sub)`: consumes a sink.
    Center { src: usize, g: AggFn },
    Prod { src: usize, b: Vec<f64>, f1: BinaryFn, f2: AggFn },
    /// `t(sapply(t(src), f))`
    Flip { src: usize, f: MapFn },
    Select { src: usize, perm: Vec<usize> },
    Cache { src: usize, file: bool },
}

#[derive(Clone, Debug)]
pub enum Sink {
    Agg { src: usize, g: AggFn },
    AggCol { src: usize, g: AggFn },
    GroupbyRow { src: usize, g: AggFn },
    Groupby { src: usize, g: AggFn },
    Crossprod { a: usize, b: usize },
    Whole { src: usize },
}

/// Inputs are var 0 (`f64`), var 1 (small `i64`) and var 2 (`u8` flags).
#[derive(Clone, Debug)]
pub struct Program {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub part_rows: usize,
    pub cache_budget: usize,
    pub x: Vec<f64>,
    pub y: Vec<i64>,
    pub z: Vec<u8>,
    pub row_labels: Vec<i64>,
    pub cell_labels: Vec<i64>,
    pub steps: Vec<Step>,
    pub sinks: Vec<Sink>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunCfg {
    pub workers: usize,
    pub fused: bool,
    pub file: bool,
}

pub fn all_configs() -> Vec<RunCfg> {
    let mut v = Vec::new();
    for fused in [true, false] {
        for file in [false, true] {
            for workers in [1, 4, 8] {
                v.push(RunCfg { workers, fused, file });
            }
        }
    }
    v
}

pub type Bits = (usize, usize, ElemType, Vec<u8>);

const INPUTS: usize = 3;

fn step(nvars: usize, p: usize) -> BoxedStrategy<Step> {
    let var = 0..nvars;
    prop_oneof![
        3 => (var.clone(), map_fn()).prop_map(|(src, f)| Step::Map { src, f }),
        3 => (var.clone(), var.clone(), binary_fn()).prop_map(|(a, b, f)| Step::Zip { a, b, f }),
        2 => (var.clone(), prop::collection::vec(-3.0f64..3.0, p), binary_fn())
            .prop_map(|(src, v, f)| Step::Row { src, v, f }),
        2 => (var.clone(), var.clone(), agg_fn(), binary_fn())
            .prop_map(|(src, other, g, f)| Step::ColOfAgg { src, other, g, f }),
        1 => (var.clone(), value_agg_fn()).prop_map(|(src, g)| Step::Center { src, g }),
        2 => (var.clone(), prop::collection::vec(-2.0f64..2.0, p * p), binary_fn(), value_agg_fn())
            .prop_map(|(src, b, f1, f2)| Step::Prod { src, b, f1, f2 }),
        1 => (var.clone(), map_fn()).prop_map(|(src, f)| Step::Flip { src, f }),
        1 => (var.clone(), Just((0..p).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|(src, perm)| Step::Select { src, perm }),
        1 => (var, any::<bool>()).prop_map(|(src, file)| Step::Cache { src, file }),
    ]
    .boxed()
}

fn steps(count: usize, p: usize) -> BoxedStrategy<Vec<Step>> {
    let mut s: BoxedStrategy<Vec<Step>> = Just(Vec::new()).boxed();
    for i in 0..count {
        s = (s, step(INPUTS + i, p))
            .prop_map(|(mut v, st)| {
                v.push(st);
                v
            })
            .boxed();
    }
    s
}

fn sink(nvars: usize) -> BoxedStrategy<Sink> {
    let var = 0..nvars;
    prop_oneof![
        (var.clone(), agg_fn()).prop_map(|(src, g)| Sink::Agg { src, g }),
        (var.clone(), agg_fn()).prop_map(|(src, g)| Sink::AggCol { src, g }),
        (var.clone(), value_agg_fn()).prop_map(|(src, g)| Sink::GroupbyRow { src, g }),
        (var.clone(), value_agg_fn()).prop_map(|(src, g)| Sink::Groupby { src, g }),
        (var.clone(), var.clone()).prop_map(|(a, b)| Sink::Crossprod { a, b }),
        var.prop_map(|src| Sink::Whole { src }),
    ]
    .boxed()
}

pub fn program() -> impl Strategy<Value = Program> {
    (
        1..=200usize,
        1..=5usize,
        1..=4usize,
        prop::sample::select(vec![8usize, 16, 32]),
        prop::sample::select(vec![64usize, 256, 4096]),
        1..=6usize,
    )
        .prop_flat_map(|(n, p, k, part_rows, cache_budget, depth)| {
            let nvars = INPUTS + depth;
            (
                Just((n, p, k, part_rows, cache_budget)),
                prop::collection::vec(-4.0f64..4.0, n * p),
                prop::collection::vec(-9i64..9, n * p),
                prop::collection::vec(0u8..2, n * p),
                prop::collection::vec(0..k as i64, n),
                prop::collection::vec(0..k as i64, n * p),
                steps(depth, p),
                prop::collection::vec(sink(nvars), 1..=3),
            )
        })
        .prop_map(|((n, p, k, part_rows, cache_budget), x, y, z, row_labels, cell_labels, steps, mut sinks)| {
            sinks.push(Sink::Whole {
                src: INPUTS + steps.len() - 1,
            });
            Program {
                n,
                p,
                k,
                part_rows,
                cache_budget,
                x,
                y,
                z,
                row_labels,
                cell_labels,
                steps,
                sinks,
            }
        })
}

fn build(prog: &Program, e: &Engine, kind: BackingKind) -> oocmat::Result<Vec<Matrix>> {
    let (n, p) = (prog.n, prog.p);
    let load = |d: DenseMatrix| e.from_local_backed(&d, kind);
    let mut vars = vec![
        load(DenseMatrix::from_f64(n, p, prog.x.clone())?)?,
        load(DenseMatrix::from_i64(n, p, prog.y.clone())?)?,
        load(DenseMatrix::new(n, p, oocmat::storage::Buffer::U8(prog.z.clone()))?)?,
    ];
    let row_labels = load(DenseMatrix::column_i64(prog.row_labels.clone()))?;
    let cell_labels = load(DenseMatrix::from_i64(n, p, prog.cell_labels.clone())?)?;
    for st in &prog.steps {
        let m = match st {
            Step::Map { src, f } => vars[*src].sapply(*f)?,
            Step::Zip { a, b, f } => vars[*a].mapply(&vars[*b], *f)?,
            Step::Row { src, v, f } => {
                let v = e.from_local(&DenseMatrix::column_f64(v.clone()))?;
                vars[*src].mapply_row(&v, *f)?
            }
            Step::ColOfAgg { src, other, g, f } => {
                let w = vars[*other].agg_row(*g)?;
                vars[*src].mapply_col(&w, *f)?
            }
            Step::Center { src, g } => {
                let c = vars[*src].agg_col(*g)?;
                vars[*src].mapply_row(&c, BinaryFn::Sub)?
            }
            Step::Prod { src, b, f1, f2 } => {
                let b = e.from_local(&DenseMatrix::from_f64(p, p, b.clone())?)?;
                vars[*src].inner_prod(&b, *f1, *f2)?
            }
            Step::Flip { src, f } => vars[*src].t().sapply(*f)?.t(),
            Step::Select { src, perm } => vars[*src].select_cols(perm)?,
            Step::Cache { src, file } => {
                let m = vars[*src].clone();
                m.set_cache(if *file { CacheWhere::File } else { CacheWhere::Memory });
                m
            }
        };
        vars.push(m);
    }
    let mut out = Vec::new();
    for s in &prog.sinks {
        out.push(match s {
            Sink::Agg { src, g } => vars[*src].agg(*g)?,
            Sink::AggCol { src, g } => vars[*src].agg_col(*g)?,
            Sink::GroupbyRow { src, g } => vars[*src].groupby_row(&row_labels, *g, prog.k)?,
            Sink::Groupby { src, g } => vars[*src].groupby(&cell_labels, *g, prog.k)?,
            Sink::Crossprod { a, b } => vars[*a].crossprod(&vars[*b])?,
            Sink::Whole { src } => vars[*src].clone(),
        });
    }
    Ok(out)
}

/// Runs the program; an error anywhere yields its category.
pub fn run(prog: &Program, cfg: RunCfg, dir: &Path) -> Result<Vec<Bits>, String> {
    let e = Engine::new(EngineConfig {
        workers: cfg.workers,
        part_rows: prog.part_rows,
        cache_budget: prog.cache_budget,
        chunk_bytes: 1 << 20,
        memory_budget: 256 << 20,
        backing: if cfg.file { BackingKind::File } else { BackingKind::Memory },
        tmpdir: dir.to_path_buf(),
        fused: cfg.fused,
        ..EngineConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let kind = e.config().backing;
    let res = build(prog, &e, kind).and_then(|outs| outs.iter().map(|m| m.to_local().map(|d| bits(&d))).collect());
    res.map_err(|e| e.category().to_string())
}

/// Runs every configuration and reports the first disagreement.
pub fn check_program(prog: &Program, dir: &Path) -> Result<(), String> {
    let configs = all_configs();
    let base = run(prog, configs[0], dir);
    for &cfg in &configs[1..] {
        let got = run(prog, cfg, dir);
        if got != base {
            let show = |r: &Result<Vec<Bits>, String>| match r {
                Ok(v) => format!("{} outputs", v.len()),
                Err(c) => format!("error {c}"),
            };
            let which = match (&base, &got) {
                (Ok(a), Ok(b)) => a.iter().zip(b).position(|(x, y)| x != y),
                _ => None,
            };
            return Err(format!(
                "{cfg:?} differs from {:?}: {} vs {} (first differing output {which:?})",
                configs[0],
                show(&got),
                show(&base)
            ));
        }
    }
    Ok(())
}
