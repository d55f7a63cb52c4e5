#include "lessketch/leverage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lessketch/linalg.hpp"
#include "lessketch/random.hpp"

namespace lessketch {

LeverageScores exact_leverage_scores(const DenseMatrix& a) {
    const QrFactors f = thin_qr(a);
    LeverageScores out;
    out.exact = true;
    out.scores.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) out.scores[i] = squared_norm(f.q.row(i));
    return out;
}

double score_floor(std::size_t n, std::size_t d) {
    return 1e-12 * static_cast<double>(d) / static_cast<double>(std::max<std::size_t>(n, 1));
}

Preconditioner make_preconditioner(DenseMatrix p, std::size_t k, std::uint64_t seed, std::size_t n) {
    if (k == 0) throw std::invalid_argument("make_preconditioner: k must be >= 1");
    const std::size_t d = p.rows();
    if (p.cols() != d) throw std::invalid_argument("make_preconditioner: P must be square");
    DenseMatrix g(d, k);
    CounterRng rng(seed, StreamTag::Gaussian, 0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < k; ++j) g(i, j) = rng.gaussian();
    DenseMatrix reduced = matmul(p, g);
    return {std::move(p), std::move(reduced), 1.0 / static_cast<double>(k), score_floor(n, d)};
}

Preconditioner make_identity_probe(DenseMatrix p, std::size_t n) {
    const std::size_t d = p.rows();
    DenseMatrix reduced = p;
    return {std::move(p), std::move(reduced), 1.0, score_floor(n, d)};
}

Preconditioner preconditioner_from_r(const DenseMatrix& r_storage, std::size_t k, std::uint64_t seed,
                                     std::size_t n) {
    const std::size_t d = r_storage.cols();
    if (r_storage.rows() < d) throw RankDeficient("preconditioner: sketch has fewer rows than columns");
    DenseMatrix r(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) r(i, j) = r_storage(i, j);
    return make_preconditioner(upper_triangular_inverse(r), k, seed, n);
}

LessConfig preconditioner_sketch_config(std::size_t n, std::size_t d, std::size_t m, double s, std::uint64_t seed) {
    const double log_d = std::log(static_cast<double>(std::max<std::size_t>(d, 1)));
    const double per_row = std::max(s, log_d * log_d);
    LessConfig cfg;
    cfg.m = m;
    cfg.s = s;
    cfg.mode = SketchMode::LessUniform;
    cfg.density = std::min(1.0, per_row / static_cast<double>(std::max<std::size_t>(n, 1)));
    cfg.seed = seed;
    return cfg;
}

Preconditioner build_preconditioner(RowStream& a_stream, const LessConfig& embed_cfg, std::size_t k,
                                    std::uint64_t seed) {
    if (embed_cfg.mode != SketchMode::LessUniform)
        throw std::invalid_argument("build_preconditioner: pass-one sketch must be LessUniform");
    const std::size_t d = a_stream.cols();
    if (embed_cfg.m < d) throw RankDeficient("preconditioner sketch has m < d rows");
    SketchAccumulator acc(embed_cfg, d);
    a_stream.open();
    RowView row;
    while (a_stream.next(row)) acc.ingest_row_with_probability(row.values, 0.0, embed_cfg.density);
    if (acc.rows_ingested() < d) throw RankDeficient("preconditioner: fewer rows than columns");
    householder_in_place(acc.mutable_sa(), {});
    return preconditioner_from_r(acc.sa(), k, seed, acc.rows_ingested());
}

double approx_leverage_score(std::span<const double> row, const Preconditioner& pre) {
    const DenseMatrix& g = pre.reduced;
    double total = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.rows(); ++i) acc += row[i] * g(i, j);
        total += acc * acc;
    }
    return std::max(pre.probe_scale * total, pre.floor);
}

LeverageScores approx_leverage_scores(const DenseMatrix& a, const Preconditioner& pre) {
    if (a.cols() != pre.dims()) throw std::invalid_argument("approx_leverage_scores: dimension mismatch");
    LeverageScores out;
    out.scores.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) out.scores[i] = approx_leverage_score(a.row(i), pre);
    return out;
}

void record_empirical_betas(LeverageScores& approx, const LeverageScores& exact) {
    if (approx.scores.size() != exact.scores.size())
        throw std::invalid_argument("record_empirical_betas: length mismatch");
    double ratio = 0.0;
    double sum = 0.0;
    double d = 0.0;
    for (std::size_t i = 0; i < approx.scores.size(); ++i) {
        ratio = std::max(ratio, exact.scores[i] / approx.scores[i]);
        sum += approx.scores[i];
        d += exact.scores[i];
    }
    approx.beta1 = std::max(1.0, ratio);
    approx.beta2 = std::max(1.0, sum / std::round(d));
}

}  // namespace lessketch
