//! Response vectors, test statistics and permutation tests.

mod classic;
mod data;
mod permutation;
mod response;
mod statistic;
mod table;

pub use classic::{
    bh_fdr, chi2_2x2, independence_equals_equality, keyword_table, nonce_p_closed, Chi2Result, IndependenceCheck,
};
pub use data::{read_responses, response_rows, write_responses, write_rows, DataRow};
pub use permutation::{
    binomial, factorial, permutation_test, Method, MethodUsed, PermutationOptions, PermutationResult, Tail,
    DEFAULT_EXACT_BUDGET, DEFAULT_MC_SAMPLES,
};
pub use response::{AdRecord, Reload, Response, ResponseVector, Session};
pub use statistic::{
    context_equals_treatment, stat_kw, stat_mean_diff, stat_nonce, stat_prc, stat_sim, ConstantStatistic,
    ContextOracle, KwStatistic, MeanDiffStatistic, NonceStatistic, PrcStatistic, SimStatistic, StatKernel,
    TestStatistic,
};
pub use table::{PValueRow, PValueTable};
