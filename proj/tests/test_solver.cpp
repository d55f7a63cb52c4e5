#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lessketch/data.hpp"
#include "lessketch/errors.hpp"
#include "lessketch/leverage.hpp"
#include "lessketch/linalg.hpp"
#include "lessketch/solver.hpp"
#include "oracle.hpp"

using namespace lessketch;

namespace {

LessConfig config(std::size_t m, double s, std::uint64_t seed) {
    LessConfig c;
    c.m = m;
    c.s = s;
    c.seed = seed;
    return c;
}

SketchAccumulator sketch(const DenseMatrix& a, const DenseVector& b, std::span<const double> scores,
                         const LessConfig& cfg) {
    SketchAccumulator acc(cfg, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) acc.ingest_row(a.row(i), b[i], scores[i]);
    return acc;
}

Preconditioner exact_preconditioner(const DenseMatrix& a) {
    return make_identity_probe(upper_triangular_inverse(thin_qr(a).r), a.rows());
}

SynthProblem problem(std::size_t n, std::size_t d, std::uint64_t seed) {
    SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    return synth_problem(spec);
}

}  // namespace

TEST_CASE("solve_sketched recovers x0 on a consistent system") {
    const DenseMatrix a = oracle::to_dense(oracle::random_gaussian(300, 6, 1));
    const DenseVector x0{1, -1, 2, 0.5, -3, 0.25};
    const DenseVector b = matvec(a, x0.span());
    const LeverageScores ls = exact_leverage_scores(a);
    const EstimateBundle e = solve_sketched(sketch(a, b, ls.scores, config(40, 4, 3)), exact_preconditioner(a));
    CHECK(norm2((e.x - x0).span()) <= 1e-8 * norm2(x0.span()));
    CHECK(e.cg_iters >= 1);
    CHECK(e.seed == 3);
}

TEST_CASE("a sketch proportional to A returns x*") {
    const auto ra = oracle::random_gaussian(20, 3, 2);
    const auto rb = oracle::random_vector(20, 3);
    const DenseMatrix a = oracle::to_dense(ra);
    const DenseVector b = oracle::to_dense(rb);
    SketchAccumulator acc(config(20, 1, 4), 3);
    acc.mutable_sa() = 2.5 * a;
    acc.mutable_sb() = 2.5 * b;
    const EstimateBundle e = solve_sketched(std::move(acc), exact_preconditioner(a));
    CHECK(oracle::max_abs_diff(oracle::vec(e.x.span()), oracle::least_squares(ra, rb)) <= 1e-9);
}

TEST_CASE("solve_sketched and the direct sketched solve agree with an oracle on (SA, Sb)") {
    const SynthProblem p = problem(400, 5, 9);
    const LeverageScores ls = exact_leverage_scores(p.a);
    SketchAccumulator acc = sketch(p.a, p.b, ls.scores, config(30, 4, 10));
    const auto ref = oracle::least_squares(oracle::from_dense(acc.sa()), oracle::vec(acc.sb().span()));
    SketchAccumulator copy = acc;
    const EstimateBundle cg = solve_sketched(std::move(acc), exact_preconditioner(p.a));
    const EstimateBundle direct = solve_sketched_direct(std::move(copy));
    CHECK(oracle::max_abs_diff(oracle::vec(cg.x.span()), ref) <= 1e-8 * (1 + oracle::norm(ref)));
    CHECK(oracle::max_abs_diff(oracle::vec(direct.x.span()), ref) <= 1e-8 * (1 + oracle::norm(ref)));
}

TEST_CASE("solve_sketched reports a degenerate sketch") {
    const DenseMatrix a = oracle::to_dense(oracle::random_gaussian(50, 4, 5));
    const DenseVector b(50, 1.0);
    SketchAccumulator acc(config(2, 1, 1), 4);  // m < d
    for (std::size_t i = 0; i < 50; ++i) acc.ingest_row_with_probability(a.row(i), b[i], 0.5);
    CHECK_THROWS_AS(solve_sketched(std::move(acc), exact_preconditioner(a)), RankDeficient);
}

TEST_CASE("single sketches have median relative excess loss at most 1") {
    const SynthProblem p = problem(1000, 10, 21);
    const LeverageScores ls = exact_leverage_scores(p.a);
    const LossOracle oracle_loss(p.a, p.b);
    const Preconditioner pre = exact_preconditioner(p.a);
    std::vector<double> errs;
    for (std::uint64_t t = 0; t < 50; ++t) {
        const EstimateBundle e = solve_sketched(sketch(p.a, p.b, ls.scores, config(60, 8, 100 + t)), pre);
        errs.push_back(oracle_loss.relative_excess_loss(e.x.span()));
    }
    std::nth_element(errs.begin(), errs.begin() + 25, errs.end());
    CHECK(errs[25] <= 1.0);
}

TEST_CASE("gamma factor") {
    CHECK(gamma_factor(16, 8) == doctest::Approx(2.0));
    CHECK(gamma_factor(80, 8) == doctest::Approx(10.0 / 9.0));
    CHECK_THROWS_AS(gamma_factor(8, 8), GammaUndefined);
    CHECK_THROWS_AS(gamma_factor(3, 8), GammaUndefined);
}

TEST_CASE("gamma-corrected inverse covariance") {
    const std::size_t d = 8, m = 80;
    const DenseMatrix u = thin_qr(oracle::to_dense(oracle::random_gaussian(400, d, 31))).q;
    const LeverageScores ls = exact_leverage_scores(u);
    const DenseVector zero(400);
    const std::size_t reps = 2000;
    DenseMatrix corrected(d, d), uncorrected(d, d);
    for (std::size_t t = 0; t < reps; ++t) {
        const SketchAccumulator acc = sketch(u, zero, ls.scores, config(m, 8, 7000 + t));
        const GammaInverse gi = gamma_inverse_covariance(acc);
        CHECK(gi.gamma == doctest::Approx(10.0 / 9.0));
        CHECK(max_abs_entry(gi.q - gi.q.transposed()) <= 1e-10);
        corrected = corrected + (1.0 / reps) * gi.q;
        uncorrected = uncorrected + (1.0 / reps) * sketched_inverse_covariance(acc);
    }
    const DenseMatrix eye = DenseMatrix::identity(d);
    const double dc = symmetric_spectral_norm(corrected - eye);
    const double du = symmetric_spectral_norm(uncorrected - eye);
    CHECK(dc <= 0.5 * du);
    // inversion inflates; the correction moves the trace back toward d
    CHECK(trace(uncorrected) > static_cast<double>(d));
    CHECK(std::abs(trace(corrected) - d) < std::abs(trace(uncorrected) - d));
}

TEST_CASE("gamma inverse needs m > d") {
    SketchAccumulator acc(config(3, 1, 1), 3);
    acc.mutable_sa() = DenseMatrix::identity(3);
    CHECK_THROWS_AS(gamma_inverse_covariance(acc), GammaUndefined);
}

TEST_CASE("average_estimates") {
    const EstimateBundle one{DenseVector{1, 2, 3}, 1, 0};
    const EstimateBundle neg{DenseVector{-1, -2, -3}, 1, 1};
    const std::vector<EstimateBundle> single{one};
    CHECK(average_estimates(single) == one.x);
    const std::vector<EstimateBundle> pair{one, neg};
    const DenseVector z = average_estimates(pair);
    for (std::size_t j = 0; j < 3; ++j) CHECK(z[j] == 0.0);
    CHECK_THROWS_AS(average_estimates(std::span<const EstimateBundle>{}), EmptyInput);
    const std::vector<EstimateBundle> ragged{one, EstimateBundle{DenseVector{1, 2}, 1, 2}};
    CHECK_THROWS(average_estimates(ragged));
}

TEST_CASE("averaging 64 estimates beats the median single estimate") {
    const SynthProblem p = problem(2000, 10, 41);
    const LeverageScores ls = exact_leverage_scores(p.a);
    const LossOracle oracle_loss(p.a, p.b);
    const Preconditioner pre = exact_preconditioner(p.a);
    std::vector<EstimateBundle> bundles;
    std::vector<double> single;
    for (std::uint64_t t = 0; t < 64; ++t) {
        bundles.push_back(solve_sketched(sketch(p.a, p.b, ls.scores, config(40, 8, 500 + t)), pre));
        single.push_back(oracle_loss.relative_excess_loss(bundles.back().x.span()));
    }
    std::nth_element(single.begin(), single.begin() + 32, single.end());
    CHECK(oracle_loss.relative_excess_loss(average_estimates(bundles).span()) < single[32]);
}

TEST_CASE("relative excess loss examples") {
    const DenseMatrix a{{1}, {1}};
    const DenseVector b{0, 2};
    const std::vector<double> zero{0.0};
    CHECK(relative_excess_loss(a, b, zero) == doctest::Approx(1.0));
    const LossOracle o(a, b);
    CHECK(o.optimal_loss() == doctest::Approx(2.0));
    CHECK(o.relative_excess_loss(o.x_star().span()) == doctest::Approx(0.0));
    CHECK_THROWS_AS(LossOracle(a, DenseVector{1, 1}).relative_excess_loss(zero), ConsistentSystem);
}

TEST_CASE("Pythagorean identity and non-negativity on random x") {
    const auto ra = oracle::random_gaussian(40, 5, 61);
    const auto rb = oracle::random_vector(40, 62);
    const DenseMatrix a = oracle::to_dense(ra);
    const DenseVector b = oracle::to_dense(rb);
    const LossOracle o(a, b);
    const double lstar = oracle::loss(ra, rb, oracle::least_squares(ra, rb));
    CHECK(o.optimal_loss() == doctest::Approx(lstar).epsilon(1e-10));
    for (unsigned t = 0; t < 20; ++t) {
        const auto x = oracle::random_vector(5, 70 + t);
        const double direct = (oracle::loss(ra, rb, x) - lstar) / lstar;
        const double rel = o.relative_excess_loss(x);
        CHECK(rel >= -1e-9);
        CHECK(rel == doctest::Approx(direct).epsilon(1e-8));
        CHECK(o.loss(x) == doctest::Approx(oracle::loss(ra, rb, x)).epsilon(1e-12));
    }
}
