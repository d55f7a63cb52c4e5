#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lessketch/matrix.hpp"
#include "lessketch/random.hpp"

namespace lessketch {

enum class SketchMode {
    LeverageLess,  // p_i = min(1, s * beta1 * l_i / d)
    LessUniform,   // p_i = density
    Subsample,     // p_i = min(1, l_i / d): about one nonzero per sketch row
};

std::string to_string(SketchMode mode);
/// Accepts "less", "lessuniform", "subsample" (case-insensitive).
SketchMode parse_sketch_mode(const std::string& text);

struct LessConfig {
    std::size_t m = 1;
    double s = 1.0;
    double beta1 = 1.0;
    SketchMode mode = SketchMode::LeverageLess;
    double density = 1.0;  // LessUniform only
    std::uint64_t seed = 0;
    /// Diagnostic: drop the 1/sqrt(p_i) factor. Breaks isotropy on purpose.
    bool scale_by_probability = true;

    /// Throws std::invalid_argument on m = 0, s <= 0, beta1 < 1 or density outside (0, 1].
    void validate() const;
};

/// Nonzeros of one column of S (the coefficients of one data row).
struct SketchColumn {
    std::vector<std::uint32_t> row_indices;  // strictly increasing, < m
    std::vector<double> values;
};

/// Probabilities are floored here before the 1/sqrt(p) scaling.
inline constexpr double kProbabilityFloor = 1e-300;

double inclusion_probability(double score, const LessConfig& cfg, std::size_t d);

/// Column with Binomial(m, p) nonzeros at distinct uniform rows, each
/// +-1/(sqrt(m) sqrt(p)) with a fair sign. Expected work O(m p).
SketchColumn sample_column(double p, std::size_t m, CounterRng& rng);

/// Keyed variant used by the streaming accumulator: the count and rows come
/// from the stream (seed, data_row) and the sign of entry j from
/// (seed, data_row, j), so any process can regenerate the column.
SketchColumn draw_column(const LessConfig& cfg, double p, std::size_t data_row);

/// Streaming accumulator for (SA, Sb). A shard keeps only the sketch rows r
/// with r % shard_count == shard_index, stored at local row r / shard_count;
/// the shards of one configuration partition the full sketch exactly.
class SketchAccumulator {
public:
    SketchAccumulator(const LessConfig& cfg, std::size_t d, std::size_t shard_index = 0, std::size_t shard_count = 1);

    /// Adds row i (i = rows_ingested()) with approximate score `score`.
    void ingest_row(std::span<const double> row, double label, double score);
    /// Same with the inclusion probability supplied directly.
    void ingest_row_with_probability(std::span<const double> row, double label, double p);

    const LessConfig& config() const noexcept { return cfg_; }
    std::size_t dims() const noexcept { return d_; }
    std::size_t rows_ingested() const noexcept { return rows_ingested_; }
    std::size_t local_rows() const noexcept { return local_rows_; }
    double probability_sum() const noexcept { return probability_sum_; }

    const DenseMatrix& sa() const noexcept { return sa_; }
    const DenseVector& sb() const noexcept { return sb_; }
    DenseMatrix& mutable_sa() noexcept { return sa_; }
    DenseVector& mutable_sb() noexcept { return sb_; }

private:
    LessConfig cfg_;
    std::size_t d_;
    std::size_t shard_index_;
    std::size_t shard_count_;
    std::size_t local_rows_;
    std::size_t rows_ingested_ = 0;
    double probability_sum_ = 0.0;
    DenseMatrix sa_;
    DenseVector sb_;
};

/// Number of sketch rows a shard owns.
std::size_t shard_rows(std::size_t m, std::size_t shard_index, std::size_t shard_count);

/// sum_i p_i: the expected number of nonzeros in one row of S.
double expected_nnz_per_sketch_row(const LessConfig& cfg, std::span<const double> scores, std::size_t d);

}  // namespace lessketch
