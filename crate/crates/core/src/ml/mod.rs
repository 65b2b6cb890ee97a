//! Statistics and machine-learning drivers written against the matrix API.
//! The drivers run on the calling thread; heavy work happens in engine
//! passes.

mod classify;
mod kmeans;
pub mod linalg;
mod logistic;
mod metrics;
mod pagerank;
mod stats;

pub use classify::{lda_train, naive_bayes_train, LdaModel, NaiveBayesModel, NB_EPSILON};
pub use kmeans::{init_centers, kmeans, kmeans_from, KmeansResult, KmeansStep};
pub use logistic::{logistic_loss_grad, logistic_regression, loss_grad_dag, LogisticModel, ARMIJO_C, BATCH, ETA_MIN, SHRINK};
pub use metrics::{accuracy, adjusted_rand_index};
pub use pagerank::{pagerank, PagerankState};
pub use stats::{correlation, mvrnorm, pca, PcaResult, MVRNORM_TOL};
