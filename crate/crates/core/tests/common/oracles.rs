//! Scalar-loop oracles for the learning drivers.

use oocmat::ml::{self, LdaModel, NaiveBayesModel};
use oocmat::sparse::CsrGraph;
use oocmat::storage::DenseMatrix;
use oocmat::{BackingKind, Engine, Matrix};

/// Uniform entries in `[-1, 3)`.
pub fn rand_dense(n: usize, p: usize, seed: u64) -> DenseMatrix {
    let rng = oocmat::Rng::new(seed);
    DenseMatrix::from_f64(n, p, (0..(n * p) as u64).map(|c| rng.uniform_at(c) * 4.0 - 1.0).collect()).unwrap()
}

pub fn rows(d: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..d.nrow()).map(|i| d.row_f64(i)).collect()
}

pub fn labels_of(m: &Matrix) -> Vec<i64> {
    m.to_local().unwrap().to_i64_vec()
}

/// Pearson correlation from centered columns.
pub fn two_pass_corr(x: &[Vec<f64>], p: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut c = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for r in x {
                let (u, v) = (r[a] - mean[a], r[b] - mean[b]);
                sab += u * v;
                saa += u * u;
                sbb += v * v;
            }
            c[a * p + b] = sab / (saa * sbb).sqrt();
        }
    }
    c
}

/// Roots of the characteristic polynomial of a symmetric 3x3 matrix,
/// descending, by the trigonometric solution of the depressed cubic.
pub fn cubic_eigenvalues(a: &[f64]) -> [f64; 3] {
    let tr = a[0] + a[4] + a[8];
    let minors = a[0] * a[4] - a[1] * a[3] + a[0] * a[8] - a[2] * a[6] + a[4] * a[8] - a[5] * a[7];
    let det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6]);
    // λ³ − tr λ² + minors λ − det with λ = t + tr/3.
    let s = tr / 3.0;
    let p = minors - tr * tr / 3.0;
    let q = -2.0 * s * s * s + minors * s - det;
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut r = [0.0; 3];
    for (k, v) in r.iter_mut().enumerate() {
        *v = s + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
    }
    r.sort_by(|a, b| b.partial_cmp(a).unwrap());
    r
}

/// Gaussian naive Bayes labels from the model's parameters, one row at a time.
pub fn nb_oracle(m: &NaiveBayesModel, x: &[Vec<f64>]) -> Vec<i64> {
    let p = m.p;
    x.iter()
        .map(|row| {
            let mut best = (f64::NEG_INFINITY, 0);
            for c in 0..m.k() {
                let mut s = m.priors[c].ln();
                for j in 0..p {
                    let v = m.variances[c * p + j];
                    let dx = row[j] - m.means[c * p + j];
                    s += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - dx * dx / (2.0 * v);
                }
                if s > best.0 {
                    best = (s, c as i64);
                }
            }
            best.1
        })
        .collect()
}

/// Class means, pooled within-class covariance and class counts.
pub fn lda_fit_oracle(x: &[Vec<f64>], y: &[i64], k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = x[0].len();
    let n = x.len();
    let mut mu = vec![0.0; k * p];
    let mut cnt = vec![0.0; k];
    for (row, &l) in x.iter().zip(y) {
        cnt[l as usize] += 1.0;
        for j in 0..p {
            mu[l as usize * p + j] += row[j];
        }
    }
    for c in 0..k {
        for j in 0..p {
            mu[c * p + j] /= cnt[c];
        }
    }
    let mut w = vec![0.0; p * p];
    for (row, &l) in x.iter().zip(y) {
        let c = l as usize;
        for a in 0..p {
            for b in 0..p {
                w[a * p + b] += (row[a] - mu[c * p + a]) * (row[b] - mu[c * p + b]);
            }
        }
    }
    for v in &mut w {
        *v /= (n - k) as f64;
    }
    (mu, w, cnt)
}

/// Linear discriminant labels from the model's means, inverse and priors.
pub fn lda_oracle(m: &LdaModel, x: &[Vec<f64>]) -> Vec<i64> {
    let (p, k) = (m.p, m.k());
    let wi = &m.inverse;
    x.iter()
        .map(|row| {
            let mut best = (f64::NEG_INFINITY, 0);
            for c in 0..k {
                let m_c = &m.means[c * p..(c + 1) * p];
                let (mut lin, mut quad) = (0.0, 0.0);
                for a in 0..p {
                    for b in 0..p {
                        lin += row[a] * wi[a * p + b] * m_c[b];
                        quad += m_c[a] * wi[a * p + b] * m_c[b];
                    }
                }
                let s = lin - 0.5 * quad + m.priors[c].ln();
                if s > best.0 {
                    best = (s, c as i64);
                }
            }
            best.1
        })
        .collect()
}

/// Mean log-loss with the overflow-safe softplus.
pub fn scalar_loss(x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let z: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
        s += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
    }
    s / x.len() as f64
}

/// Power iteration over a dense adjacency; repeated edges count once and
/// vertices without out-edges contribute nothing.
pub fn dense_pagerank(n: usize, edges: &[(usize, usize)], d: f64, iters: usize) -> Vec<f64> {
    let mut adj = vec![false; n * n];
    for &(a, b) in edges {
        adj[a * n + b] = true;
    }
    let deg: Vec<f64> = (0..n).map(|a| (0..n).filter(|&b| adj[a * n + b]).count() as f64).collect();
    let mut pr = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let mut next = vec![(1.0 - d) / n as f64; n];
        for a in 0..n {
            if deg[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if adj[a * n + b] {
                    next[b] += d * pr[a] / deg[a];
                }
            }
        }
        pr = next;
    }
    pr
}

/// Unbiased sample covariance, `p×p` row-major.
pub fn sample_cov(d: &DenseMatrix) -> Vec<f64> {
    let p = d.ncol();
    let r = rows(d);
    let n = r.len() as f64;
    let mean: Vec<f64> = (0..p).map(|j| r.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let mut c = vec![0.0; p * p];
    for row in &r {
        for a in 0..p {
            for b in 0..p {
                c[a * p + b] += (row[a] - mean[a]) * (row[b] - mean[b]) / (n - 1.0);
            }
        }
    }
    c
}

fn bits(v: Vec<f64>) -> Vec<u64> {
    v.into_iter().map(|x| x.to_bits()).collect()
}

/// Every driver's output on one dataset, as raw bits or labels.
#[derive(Debug, PartialEq)]
pub struct Outputs {
    pub corr: Vec<u64>,
    pub pca: Vec<u64>,
    pub kmeans: Vec<u64>,
    pub logistic: Vec<u64>,
    pub nb: Vec<i64>,
    pub lda: Vec<i64>,
    pub pagerank: Vec<u64>,
    pub mvrnorm: Vec<u64>,
}

/// Runs every driver; `y` holds 0/1 labels and `edges` a graph on `d.nrow()`
/// vertices.
pub fn run_all(e: &Engine, backing: BackingKind, d: &DenseMatrix, y: &DenseMatrix, edges: &[(usize, usize)]) -> Outputs {
    let x = e.from_local_backed(d, backing).unwrap();
    let yl = e.from_local_backed(y, backing).unwrap();
    let km = ml::kmeans(&x, 4, 10, 3).unwrap();
    let lr = ml::logistic_regression(&x, &yl, 10, 1e-6).unwrap();
    let nb = ml::naive_bayes_train(&x, &yl, None, ml::NB_EPSILON).unwrap();
    let lda = ml::lda_train(&x, &yl, None).unwrap();
    let (g, _) = CsrGraph::from_edges(e, d.nrow(), edges).unwrap();
    let pr = ml::pagerank(&g, 0.85, None, 50).unwrap();
    let p = d.ncol();
    let mut sigma = vec![0.0; p * p];
    for i in 0..p {
        sigma[i * p + i] = 1.0 + i as f64;
        if i > 0 {
            sigma[i * p + i - 1] = 0.3;
            sigma[(i - 1) * p + i] = 0.3;
        }
    }
    let sigma = DenseMatrix::from_f64(p, p, sigma).unwrap();
    let mv = ml::mvrnorm(e, 2000, &vec![1.0; p], &sigma, 5).unwrap();
    Outputs {
        corr: bits(ml::correlation(&x).unwrap().to_f64_vec()),
        pca: bits(ml::pca(&x, 3, true).unwrap().values),
        kmeans: bits(km.centers.to_f64_vec()),
        logistic: bits(lr.theta),
        nb: labels_of(&nb.predict(&x).unwrap()),
        lda: labels_of(&lda.predict(&x).unwrap()),
        pagerank: bits(pr.pr),
        mvrnorm: bits(mv.col_sums().unwrap().to_local().unwrap().to_f64_vec()),
    }
}
