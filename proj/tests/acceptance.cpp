// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance                 run all criteria
//   acceptance --criterion N   run only criterion N (exit 0 iff it passes)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lessketch/data.hpp"
#include "lessketch/distributed.hpp"
#include "lessketch/experiment.hpp"
#include "lessketch/leverage.hpp"
#include "lessketch/linalg.hpp"
#include "lessketch/random.hpp"
#include "lessketch/solver.hpp"
#include "lessketch/verify.hpp"

using namespace lessketch;

namespace {

// ---- pinned tolerances and configurations
constexpr std::uint64_t kSeed = 20240611;

constexpr double kIsotropyTol = 0.05;
constexpr double kIsotropySeconds = 60.0;
constexpr double kScoreSumTol = 1e-9;
constexpr double kSolverRelTol = 1e-8;
constexpr double kEmbeddingFailureRate = 0.05;
constexpr double kInversionRatio = 0.5;
constexpr double kLsBiasSeconds = 600.0;
constexpr double kFreeLunchQ1Ratio = 0.5;
constexpr double kFreeLunchPlateauFactor = 2.0;
constexpr double kFreeLunchSeconds = 1200.0;
constexpr double kDecayRatio = 0.4;
constexpr double kVarianceBound = 2.5;

// heavy-tailed rows with heteroscedastic noise, so that subsampling bias is visible at q = 256
constexpr double kFreeLunchTailDf = 2.0;
constexpr double kFreeLunchHetero = 0.75;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DenseMatrix orthonormal(std::size_t n, std::size_t d, std::uint64_t seed) {
    SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.noise = 0.0;
    spec.seed = seed;
    return thin_qr(synth_problem(spec).a).q;
}

DenseMatrix gaussian_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    CounterRng rng(seed, StreamTag::Generic, 0);
    DenseMatrix a(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.gaussian();
    return a;
}

// ------------------------------------------------------------------ criteria

Outcome criterion_1() {
    const std::size_t n = 200, d = 8, trials = 100000;
    const DenseMatrix u = orthonormal(n, d, kSeed);
    const LeverageScores ls = exact_leverage_scores(u);
    LessConfig cfg;
    cfg.s = 8;
    cfg.seed = kSeed;
    IsotropyOptions opts;
    opts.basis = &u;
    opts.auto_scale = false;
    const auto t0 = std::chrono::steady_clock::now();
    const McReport r = check_isotropy(n, d, ls.scores, cfg, trials, opts);
    const double secs = seconds_since(t0);
    return {r.statistic <= kIsotropyTol && secs <= kIsotropySeconds,
            fmt("max-entry deviation %.4g (tol %.2g), T = %zu, %.1f s", r.statistic, kIsotropyTol, r.trials, secs)};
}

Outcome criterion_2() {
    double worst = 0.0;
    for (std::size_t t = 0; t < 20; ++t) {
        CounterRng rng(kSeed, StreamTag::Generic, 1000 + t);
        const std::size_t d = 2 + rng.below(19);
        const std::size_t n = d + 1 + rng.below(500 - d);
        const DenseMatrix a = gaussian_matrix(n, d, derive_seed(kSeed, t));
        const LeverageScores ls = exact_leverage_scores(a);
        double sum = 0.0;
        for (double l : ls.scores) sum += l;
        worst = std::max(worst, std::abs(sum - static_cast<double>(d)));
    }
    return {worst <= kScoreSumTol, fmt("max |sum l - d| = %.3g over 20 matrices", worst)};
}

Outcome criterion_3() {
    const std::size_t n = 200, d = 15;
    double worst_err = 0.0;
    std::size_t worst_iters = 0;
    bool ok = true;
    for (std::size_t t = 0; t < 20; ++t) {
        const DenseMatrix a = gaussian_matrix(n, d, derive_seed(kSeed, 100 + t));
        CounterRng rng(kSeed, StreamTag::Generic, 2000 + t);
        DenseVector b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = rng.gaussian();
        const DenseMatrix p = upper_triangular_inverse(thin_qr(a).r);
        const CgSolution cg = pcg_normal(a, b.span(), p, 1e-14, d + 2);
        const DenseVector ref = lstsq_exact(a, b.span());
        const double err = norm2((cg.x - ref).span()) / norm2(ref.span());
        worst_err = std::max(worst_err, err);
        worst_iters = std::max(worst_iters, cg.iterations);
        ok = ok && err <= kSolverRelTol && cg.iterations <= d + 2;
    }
    return {ok, fmt("max relative error %.3g, max iterations %zu (limit %zu)", worst_err, worst_iters, d + 2)};
}

Outcome criterion_4() {
    const std::size_t d = 10;
    const DenseMatrix u = orthonormal(50 * d, d, kSeed);
    LessConfig cfg;
    cfg.m = 80;
    cfg.s = 8;
    cfg.seed = kSeed;
    const McReport main = check_subspace_embedding(u, cfg, 0.5, 200);
    LessConfig neg = cfg;
    neg.m = d;
    const McReport control = check_subspace_embedding(u, neg, 0.5, 200);
    return {main.statistic <= kEmbeddingFailureRate && !control.passed,
            fmt("failure rate %.3f at m = 80 (limit %.2f); control m = d failure rate %.3f", main.statistic,
                kEmbeddingFailureRate, control.statistic)};
}

Outcome criterion_5() {
    const DenseMatrix a = orthonormal(400, 8, derive_seed(kSeed, 5));
    InversionOptions opts;
    opts.seed = kSeed;
    const InversionBias ib = measure_inversion_bias(a, 80, 8, 5000, opts);
    const double ratio = ib.corrected / ib.uncorrected;
    return {ratio <= kInversionRatio, fmt("corrected %.4g / uncorrected %.4g = %.3f (limit %.2f), rank-deficient %zu",
                                          ib.corrected, ib.uncorrected, ratio, kInversionRatio, ib.rank_deficient)};
}

SynthProblem ls_bias_problem() {
    SynthSpec spec;
    spec.n = 2000;
    spec.d = 16;
    spec.noise = 1.0;
    spec.seed = derive_seed(kSeed, 6);
    return synth_problem(spec);
}

Outcome criterion_6() {
    const SynthProblem p = ls_bias_problem();
    LsBiasOptions opts;
    opts.seed = kSeed;
    const auto t0 = std::chrono::steady_clock::now();
    const LsBiasEstimate s1 = estimate_ls_bias(p.a, p.b, 96, 1, 4000, opts);
    const LsBiasEstimate s16 = estimate_ls_bias(p.a, p.b, 96, 16, 4000, opts);
    const double secs = seconds_since(t0);
    const double se = std::hypot(s1.standard_error, s16.standard_error);
    const double limit = s1.statistic + 2 * se;
    return {s16.statistic <= limit && secs <= kLsBiasSeconds,
            fmt("bias(s=16) %.4g <= bias(s=1) %.4g + 2 SE = %.4g; %.1f s", s16.statistic, s1.statistic, limit, secs)};
}

Outcome criterion_7() {
    const SynthProblem p = ls_bias_problem();
    LsBiasOptions opts;
    opts.seed = derive_seed(kSeed, 7);
    const LsBiasEstimate m64 = estimate_ls_bias(p.a, p.b, 64, 8, 4000, opts);
    const LsBiasEstimate m128 = estimate_ls_bias(p.a, p.b, 128, 8, 4000, opts);
    const double se = std::hypot(m64.standard_error, m128.standard_error);
    const double limit = 0.5 * m64.statistic + 2 * se;
    return {m128.statistic <= limit,
            fmt("bias(m=128) %.4g <= 0.5 bias(m=64) %.4g + 2 SE = %.4g", m128.statistic, m64.statistic, limit)};
}

struct FreeLunch {
    std::vector<ExperimentRow> rows;
    std::vector<std::size_t> ms;  // ascending
    double seconds = 0.0;
};

const FreeLunch& free_lunch_run() {
    static const FreeLunch result = [] {
        SynthSpec spec;
        spec.n = 2000;
        spec.d = 20;
        spec.tail_df = kFreeLunchTailDf;
        spec.hetero = kFreeLunchHetero;
        spec.seed = derive_seed(kSeed, 8);
        const SynthProblem p = synth_problem(spec);
        ExperimentConfig cfg;
        cfg.configs = budget_configs(512, 4);
        cfg.repeats = 100;
        cfg.seed = kSeed;
        const auto t0 = std::chrono::steady_clock::now();
        FreeLunch out;
        out.rows = experiment_averaging(p.a, p.b, cfg);
        out.seconds = seconds_since(t0);
        for (const auto& c : cfg.configs) out.ms.push_back(c.m);
        std::sort(out.ms.begin(), out.ms.end());
        return out;
    }();
    return result;
}

double rel_err(const std::vector<ExperimentRow>& rows, std::size_t m, std::size_t q) {
    for (const auto& r : rows)
        if (r.m == m && r.q == q) return r.mean_rel_err;
    throw std::logic_error("missing experiment row");
}

Outcome criterion_8() {
    const FreeLunch& fl = free_lunch_run();
    const std::size_t small = fl.ms.front(), large = fl.ms.back();
    const double ratio = rel_err(fl.rows, large, 1) / rel_err(fl.rows, small, 1);
    double lo = 1e300, hi = 0.0;
    for (std::size_t m : fl.ms) {
        lo = std::min(lo, rel_err(fl.rows, m, 256));
        hi = std::max(hi, rel_err(fl.rows, m, 256));
    }
    const bool a = ratio <= kFreeLunchQ1Ratio;
    const bool b = hi <= kFreeLunchPlateauFactor * lo;
    return {a && b && fl.seconds <= kFreeLunchSeconds,
            fmt("(a) q=1 ratio m%zu/m%zu = %.3f (limit %.2f); (b) q=256 spread %.3f (limit %.1f); %.1f s", large,
                small, ratio, kFreeLunchQ1Ratio, hi / lo, kFreeLunchPlateauFactor, fl.seconds)};
}

Outcome criterion_9() {
    const FreeLunch& fl = free_lunch_run();
    const std::size_t large = fl.ms.back();
    const double ratio = rel_err(fl.rows, large, 4) / rel_err(fl.rows, large, 1);
    return {ratio <= kDecayRatio, fmt("m=%zu: err(q=4)/err(q=1) = %.3f (limit %.2f)", large, ratio, kDecayRatio)};
}

Outcome criterion_10() {
    SynthSpec spec;
    spec.n = 2000;
    spec.d = 20;
    spec.seed = derive_seed(kSeed, 10);
    const SynthProblem p = synth_problem(spec);
    const std::size_t d = 20, m = 120, k = kDefaultProbeWidth, q = 8;
    LessConfig cfg;
    cfg.m = m;
    cfg.s = 8;
    TwoPassOptions par;
    par.threads = 4;
    TwoPassOptions seq = par;
    seq.threads = 1;
    const DistributedResult rp = run_two_pass(p.a, p.b, q, cfg, kSeed, par);
    const DistributedResult rs = run_two_pass(p.a, p.b, q, cfg, kSeed, seq);
    const std::size_t cap = m * d + d * k + 8 * d;
    bool ledgers_ok = rp.per_machine.size() == q;
    std::size_t peak = 0;
    for (const auto& l : rp.per_machine) {
        ledgers_ok = ledgers_ok && l.passes == 2 && l.estimate_words == d && l.peak_words <= cap;
        peak = std::max(peak, l.peak_words);
    }
    bool identical = rp.x_hat.size() == rs.x_hat.size();
    for (std::size_t j = 0; identical && j < d; ++j)
        identical = std::bit_cast<std::uint64_t>(rp.x_hat[j]) == std::bit_cast<std::uint64_t>(rs.x_hat[j]);
    for (std::size_t i = 0; identical && i < q; ++i)
        for (std::size_t j = 0; j < d; ++j)
            identical = identical &&
                        std::bit_cast<std::uint64_t>(rp.estimates[i].x[j]) ==
                                        std::bit_cast<std::uint64_t>(rs.estimates[i].x[j]);
    return {ledgers_ok && identical, fmt("passes = 2, uplink = d: %s; peak %zu <= cap %zu; parallel == sequential: %s",
                                         ledgers_ok ? "yes" : "no", peak, cap, identical ? "yes" : "no")};
}

Outcome criterion_11() {
    SynthSpec spec;
    spec.n = 1000;
    spec.d = 10;
    spec.seed = derive_seed(kSeed, 11);
    const SynthProblem p = synth_problem(spec);
    const std::size_t n = 1000, d = 10, trials = 2000;
    MatrixRowSource rows(p.a, &p.b);
    const Preconditioner pre = build_preconditioner(
        rows, preconditioner_sketch_config(n, d, 60, 8, derive_seed(kSeed, 111)), kDefaultProbeWidth,
        derive_seed(kSeed, 112));
    const DataServer server(p.a, p.b);
    const LossOracle oracle(p.a, p.b);
    std::vector<double> ratio(trials);
    run_indexed(trials, 0, [&](std::size_t t) {
        LessConfig cfg;
        cfg.m = 60;
        cfg.s = 8;
        cfg.seed = derive_seed(kSeed, 1000 + t);
        CostLedger ledger;
        const EstimateBundle e = run_single_pass_estimator(server, cfg, &pre, ledger);
        ratio[t] = oracle.loss(e.x.span()) / oracle.optimal_loss();
    });
    double sum = 0.0;
    for (double r : ratio) sum += r;
    const double mean = sum / trials;
    return {mean <= kVarianceBound, fmt("mean ||Ax~ - b||^2 / L(x*) = %.4f (limit %.1f)", mean, kVarianceBound)};
}

Outcome criterion_12() {
    std::ostringstream detail;
    bool ok = true;
    auto note = [&](const std::string& name, bool pass, const McReport& r) {
        detail << name << (pass ? " ok" : " BAD") << " (" << r.statistic << " vs " << r.reference << "); ";
        ok = ok && pass;
    };

    // moment scaling: d = 8, C = I, p = 2, s in {1, 4, d, 16}
    {
        const std::size_t n = 500, d = 8;
        const DenseMatrix u = orthonormal(n, d, derive_seed(kSeed, 12));
        const std::vector<double> s_values{1, 4, 8, 16};
        MomentOptions opts;
        opts.seed = kSeed;
        const auto main = check_moment_scaling(u, DenseMatrix::identity(d), s_values, 2, 20000, opts);
        note("moment", main.back().passed, main.back());
        DenseMatrix coherent(n, d);
        for (std::size_t j = 0; j < d; ++j) coherent(j, j) = 1.0;
        MomentOptions neg = opts;
        neg.uniform = true;
        const auto control = check_moment_scaling(coherent, DenseMatrix::identity(d), s_values, 2, 20000, neg);
        note("moment-control", !control.back().passed, control.back());
    }
    // sparsifier: d = 8, s = 4, delta = 0.1, 2000 trials
    {
        const DenseMatrix u = orthonormal(500, 8, derive_seed(kSeed, 13));
        SparsifierOptions opts;
        opts.seed = kSeed;
        const McReport main = check_sparsifier_norm(u, 4, 0.1, 2000, opts);
        note("sparsifier", main.passed, main);
        DenseMatrix coherent(200, 8);
        for (std::size_t j = 0; j < 8; ++j) coherent(j, j) = 1.0;
        SparsifierOptions neg = opts;
        neg.uniform = true;
        const McReport control = check_sparsifier_norm(coherent, 4, 0.1, 2000, neg);
        note("sparsifier-control", !control.passed, control);
    }
    // trace concentration: d = 8, m = 2d vs 8d
    {
        const DenseMatrix a = orthonormal(400, 8, derive_seed(kSeed, 14));
        LessConfig cfg;
        cfg.m = 16;
        cfg.s = 8;
        cfg.seed = kSeed;
        const McReport main = check_trace_concentration(a, cfg, 2000);
        note("trace", main.passed, main);
        TraceOptions neg;
        neg.size_factor = 1.0;
        const McReport control = check_trace_concentration(a, cfg, 2000, neg);
        note("trace-control", !control.passed, control);
    }
    return {ok, detail.str()};
}

const std::vector<std::function<Outcome()>>& criteria() {
    static const std::vector<std::function<Outcome()>> all{criterion_1, criterion_2,  criterion_3,  criterion_4,
                                                           criterion_5, criterion_6,  criterion_7,  criterion_8,
                                                           criterion_9, criterion_10, criterion_11, criterion_12};
    return all;
}

bool run(std::size_t id) {
    Outcome o;
    try {
        o = criteria()[id - 1]();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (o.passed ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    return o.passed;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
        const long id = std::strtol(argv[2], nullptr, 10);
        if (id < 1 || id > static_cast<long>(criteria().size())) {
            std::cerr << "criterion must be in 1.." << criteria().size() << '\n';
            return 2;
        }
        return run(static_cast<std::size_t>(id)) ? 0 : 1;
    }
    if (argc != 1) {
        std::cerr << "usage: acceptance [--criterion N]\n";
        return 2;
    }
    bool all = true;
    for (std::size_t id = 1; id <= criteria().size(); ++id) all = run(id) && all;
    return all ? 0 : 1;
}
