#include "lessketch/less.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace lessketch {

std::string to_string(SketchMode mode) {
    switch (mode) {
        case SketchMode::LeverageLess: return "less";
        case SketchMode::LessUniform: return "lessuniform";
        case SketchMode::Subsample: return "subsample";
    }
    return "unknown";
}

SketchMode parse_sketch_mode(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "less") return SketchMode::LeverageLess;
    if (t == "lessuniform") return SketchMode::LessUniform;
    if (t == "subsample") return SketchMode::Subsample;
    throw std::invalid_argument("unknown sketch mode '" + text + "'");
}

void LessConfig::validate() const {
    if (m == 0) throw std::invalid_argument("LessConfig: m must be >= 1");
    if (m > 0xFFFFFFFFu) throw std::invalid_argument("LessConfig: m too large");
    if (!(s > 0.0)) throw std::invalid_argument("LessConfig: s must be positive");
    if (!(beta1 >= 1.0)) throw std::invalid_argument("LessConfig: beta1 must be >= 1");
    if (mode == SketchMode::LessUniform && !(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("LessConfig: density must lie in (0, 1]");
}

double inclusion_probability(double score, const LessConfig& cfg, std::size_t d) {
    switch (cfg.mode) {
        case SketchMode::LessUniform: return cfg.density;
        case SketchMode::Subsample: return std::min(1.0, score / static_cast<double>(d));
        case SketchMode::LeverageLess: break;
    }
    return std::min(1.0, cfg.s * cfg.beta1 * score / static_cast<double>(d));
}

namespace {

double entry_magnitude(double p, std::size_t m, bool scale_by_probability) {
    const double root_m = std::sqrt(static_cast<double>(m));
    if (!scale_by_probability) return 1.0 / root_m;
    return 1.0 / (root_m * std::sqrt(std::max(p, kProbabilityFloor)));
}

}  // namespace

SketchColumn sample_column(double p, std::size_t m, CounterRng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_column: p outside [0, 1]");
    SketchColumn col;
    const auto k = static_cast<std::uint32_t>(sample_binomial(m, p, rng));
    if (k == 0) return col;
    col.row_indices = sample_distinct_sorted(static_cast<std::uint32_t>(m), k, rng);
    const double mag = entry_magnitude(p, m, true);
    col.values.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        // one fresh bit per entry
        col.values.push_back((rng() >> 63) ? -mag : mag);
    }
    return col;
}

SketchColumn draw_column(const LessConfig& cfg, double p, std::size_t data_row) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("draw_column: p outside [0, 1]");
    SketchColumn col;
    CounterRng rng(cfg.seed, StreamTag::ColumnDraw, data_row);
    const auto k = static_cast<std::uint32_t>(sample_binomial(cfg.m, p, rng));
    if (k == 0) return col;
    col.row_indices = sample_distinct_sorted(static_cast<std::uint32_t>(cfg.m), k, rng);
    const double mag = entry_magnitude(p, cfg.m, cfg.scale_by_probability);
    col.values.reserve(k);
    for (std::uint32_t j : col.row_indices) col.values.push_back(mag * rademacher_sign(cfg.seed, data_row, j));
    return col;
}

std::size_t shard_rows(std::size_t m, std::size_t shard_index, std::size_t shard_count) {
    if (shard_index >= m) return 0;
    return (m - shard_index + shard_count - 1) / shard_count;
}

SketchAccumulator::SketchAccumulator(const LessConfig& cfg, std::size_t d, std::size_t shard_index,
                                     std::size_t shard_count)
    : cfg_(cfg), d_(d), shard_index_(shard_index), shard_count_(shard_count),
      local_rows_(shard_count == 0 ? 0 : shard_rows(cfg.m, shard_index, shard_count)),
      sa_(std::max<std::size_t>(local_rows_, 1), std::max<std::size_t>(d, 1)),
      sb_(std::max<std::size_t>(local_rows_, 1)) {
    cfg_.validate();
    if (d == 0) throw std::invalid_argument("SketchAccumulator: d must be >= 1");
    if (shard_count == 0 || shard_index >= shard_count)
        throw std::invalid_argument("SketchAccumulator: bad shard");
    if (local_rows_ == 0) throw std::invalid_argument("SketchAccumulator: shard owns no sketch rows");
}

void SketchAccumulator::ingest_row(std::span<const double> row, double label, double score) {
    ingest_row_with_probability(row, label, inclusion_probability(score, cfg_, d_));
}

void SketchAccumulator::ingest_row_with_probability(std::span<const double> row, double label, double p) {
    if (row.size() != d_) throw std::invalid_argument("ingest_row: row length != d");
    for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("ingest_row: non-finite entry");
    if (!std::isfinite(label)) throw std::invalid_argument("ingest_row: non-finite label");

    const SketchColumn col = draw_column(cfg_, p, rows_ingested_);
    for (std::size_t t = 0; t < col.row_indices.size(); ++t) {
        const std::size_t r = col.row_indices[t];
        if (r % shard_count_ != shard_index_) continue;
        const std::size_t local = r / shard_count_;
        const double v = col.values[t];
        axpy(v, row, sa_.row(local));
        sb_[local] += v * label;
    }
    probability_sum_ += p;
    ++rows_ingested_;
}

double expected_nnz_per_sketch_row(const LessConfig& cfg, std::span<const double> scores, std::size_t d) {
    double total = 0.0;
    for (double l : scores) total += inclusion_probability(l, cfg, d);
    return total;
}

}  // namespace lessketch
