#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lessketch/less.hpp"
#include "lessketch/matrix.hpp"

namespace lessketch {

/// One Monte Carlo comparison: `statistic` against `reference` under the
/// check's rule.
struct McReport {
    std::string claim_id;
    std::size_t trials = 0;
    double statistic = 0.0;
    double reference = 0.0;
    bool passed = false;
    double standard_error = 0.0;
    std::string note;  // free-form detail, not part of the CSV schema
};

/// CSV columns: claim_id,trials,statistic,reference,passed,stderr
void write_reports_csv(std::ostream& out, std::span<const McReport> reports, bool header = true);

// ---------------------------------------------------------------- isotropy

struct IsotropyOptions {
    /// Orthonormal n x d basis: compare mean(U^T x x^T U) with I_d. Without
    /// one, the full n x n form mean(x x^T) is compared with I_n.
    const DenseMatrix* basis = nullptr;
    /// Multiply trials by min(100, ceil(0.1 / min p)) when min p < 0.1.
    bool auto_scale = true;
    std::size_t batches = 20;
    std::size_t threads = 0;
};

/// Statistic: max-entry deviation of the empirical second moment from I.
/// Passes iff <= 5 max(1, sigma) / sqrt(T) + 1e-3, sigma being the largest
/// per-entry standard deviation (estimated from batch means).
/// Throws std::invalid_argument for fewer than 1000 trials.
McReport check_isotropy(std::size_t n, std::size_t d, std::span<const double> scores, const LessConfig& cfg,
                        std::size_t trials, const IsotropyOptions& options = {});

// ---------------------------------------------------------- subspace embedding

/// Failure frequency of 1/(1+eta) <= eig(U^T S^T S U) <= 1+eta over fresh
/// sketches; passes iff <= 0.05. Scores default to exact ones.
McReport check_subspace_embedding(const DenseMatrix& a, const LessConfig& cfg, double eta, std::size_t trials,
                                  std::span<const double> scores = {}, std::size_t threads = 0);

/// (lambda_min, lambda_max) of U^T S^T S U for one sketch of the rows of u.
std::pair<double, double> embedding_extremes(const DenseMatrix& u, std::span<const double> probabilities,
                                             const LessConfig& cfg);

// ------------------------------------------------------------ moment scaling

struct MomentOptions {
    double delta = 0.1;
    /// Negative control: LessUniform rows with density s / n instead of
    /// leverage-based probabilities.
    bool uniform = false;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

/// For each s: the p-th root of mean((tr C - z^T C z)^p), z = U^T x for a
/// LESS row x. Rules: non-increasing in s up to 2 combined SE; the ratio to
/// the largest s stays below the shape 1 + sqrt(d p ln(d/delta) / s) ratio
/// plus 2 relative SE. One report per s, then a summary report.
std::vector<McReport> check_moment_scaling(const DenseMatrix& u, const DenseMatrix& c,
                                           std::span<const double> s_values, int p, std::size_t trials,
                                           const MomentOptions& options = {});

/// Exact Var(z^T z) for C = I: sum l_i^2 / p_i + 2 d - 3 sum l_i^2.
double quadratic_form_variance(std::span<const double> leverage, std::span<const double> probabilities);

// ---------------------------------------------------------- sparsifier norm

struct SparsifierOptions {
    double threshold_scale = 1.0;  // diagnostic multiplier on the threshold
    bool uniform = false;          // negative control: p_i = s / n
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

/// 1 + 3 d ln(d/delta) / s for s < d, else 1 + 3 ln(d/delta).
double sparsifier_threshold(std::size_t d, double s, double delta);

/// Exceedance frequency of ||U_xi^T U_xi|| >= threshold; passes iff
/// <= delta + 3 sqrt(delta (1 - delta) / T).
McReport check_sparsifier_norm(const DenseMatrix& u, double s, double delta, std::size_t trials,
                               const SparsifierOptions& options = {});

// ------------------------------------------------------- trace concentration

struct TraceOptions {
    double size_factor = 4.0;  // second sketch size = size_factor * m
    bool reuse_seed = false;   // diagnostic: every trial uses the same sketch
    std::size_t threads = 0;
};

/// 95th percentile of |tr Q - mean tr Q|, Q = (gamma A^T S^T S A)^{-1}, at
/// m and size_factor * m. Statistic is their ratio; passes iff <= 0.75.
McReport check_trace_concentration(const DenseMatrix& a, const LessConfig& cfg, std::size_t trials,
                                   const TraceOptions& options = {});

// ------------------------------------------------------------ inversion bias

struct InversionOptions {
    double gamma_override = 0.0;  // > 0 replaces m / (m - d); 1 is the uncorrected control
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

struct InversionBias {
    double corrected = 0.0;    // ||mean(Q_gamma) - (A^T A)^{-1}||
    double uncorrected = 0.0;  // ||mean(Q_1) - (A^T A)^{-1}||
    double corrected_se = 0.0;
    double uncorrected_se = 0.0;
    std::size_t rank_deficient = 0;
};

InversionBias measure_inversion_bias(const DenseMatrix& a, std::size_t m, double s, std::size_t trials,
                                     const InversionOptions& options = {});

/// Statistic: corrected / uncorrected deviation; passes iff <= 0.5.
McReport check_inversion_bias(const DenseMatrix& a, std::size_t m, double s, std::size_t trials,
                              const InversionOptions& options = {});

// ------------------------------------------------------- least-squares bias

struct LsBiasOptions {
    bool dense_gaussian = false;        // diagnostic: dense Gaussian sketch
    bool scale_by_probability = true;   // false: negative control
    bool trim = false;                  // drop trials outside the eta = 1/2 embedding event
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

struct LsBiasEstimate {
    std::size_t m = 0;
    double s = 0.0;
    double statistic = 0.0;     // ||A(mean x~ - x*)||^2 / L(x*)
    double standard_error = 0.0;
    double noise_floor = 0.0;   // expected statistic for an unbiased estimator
    double mean_excess = 0.0;   // mean relative excess loss of single estimates
    std::size_t used = 0;
    std::size_t rank_deficient = 0;
    std::size_t outside_event = 0;  // trials failing the eta = 1/2 embedding condition
};

LsBiasEstimate estimate_ls_bias(const DenseMatrix& a, const DenseVector& b, std::size_t m, double s,
                                std::size_t trials, const LsBiasOptions& options = {});

/// One report per (m, s), then rule reports: "ls_bias_sparsity" at each m when
/// several s are given (largest s <= smallest s + 2 SE) and "ls_bias_m_scaling"
/// at each s when several m are given (bias(m2) <= bias(m1) m1 / m2 + 2 SE).
/// Throws ConsistentSystem.
std::vector<McReport> check_ls_bias(const DenseMatrix& a, const DenseVector& b, std::span<const std::size_t> m_values,
                                    std::span<const double> s_values, std::size_t trials,
                                    const LsBiasOptions& options = {});

}  // namespace lessketch
