#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <bit>

#include "lessketch/data.hpp"
#include "lessketch/distributed.hpp"
#include "lessketch/errors.hpp"
#include "lessketch/linalg.hpp"
#include "oracle.hpp"

using namespace lessketch;

namespace {

SynthProblem problem(std::size_t n, std::size_t d, std::uint64_t seed) {
    SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    return synth_problem(spec);
}

LessConfig config(std::size_t m, double s) {
    LessConfig c;
    c.m = m;
    c.s = s;
    return c;
}

bool bit_equal(const DenseVector& x, const DenseVector& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (std::bit_cast<std::uint64_t>(x[j]) != std::bit_cast<std::uint64_t>(y[j])) return false;
    return true;
}

}  // namespace

TEST_CASE("stream handle discipline") {
    const DenseMatrix a = oracle::to_dense(oracle::random_gaussian(5, 2, 1));
    const DenseVector b(5, 1.0);
    CostLedger ledger;
    StreamHandle h(a, b, ledger);
    RowView row;
    CHECK_THROWS_AS(h.next(row), PassViolation);
    h.open();
    std::size_t seen = 0;
    while (h.next(row)) {
        CHECK(row.index == seen);
        CHECK(row.values[0] == a(seen, 0));
        ++seen;
    }
    CHECK(seen == 5);
    h.open();
    CHECK(h.position() == 0);
    CHECK(h.opens() == 2);
    while (h.next(row)) {
    }
    CHECK(ledger.passes == 2);
    CHECK(ledger.rows_read == 10);
}

TEST_CASE("a q = 1 run returns the single machine estimate") {
    const SynthProblem p = problem(500, 5, 3);
    const DistributedResult r = run_two_pass(p.a, p.b, 1, config(30, 4), 11);
    REQUIRE(r.per_machine.size() == 1);
    CHECK(r.q == 1);
    CHECK(r.per_machine[0].passes == 2);
    CHECK(bit_equal(r.x_hat, r.estimates[0].x));
}

TEST_CASE("identical seeds make identical estimates") {
    const SynthProblem p = problem(500, 5, 4);
    TwoPassOptions opts;
    opts.identical_seeds = true;
    const DistributedResult r = run_two_pass(p.a, p.b, 2, config(30, 4), 12, opts);
    CHECK(bit_equal(r.estimates[0].x, r.estimates[1].x));
    for (std::size_t j = 0; j < 5; ++j) CHECK(r.x_hat[j] == doctest::Approx(r.estimates[0].x[j]).epsilon(1e-15));
}

TEST_CASE("ledgers, uplink and the space cap") {
    const std::size_t d = 20, m = 120, k = kDefaultProbeWidth;
    const SynthProblem p = problem(2000, d, 5);
    const DistributedResult r = run_two_pass(p.a, p.b, 6, config(m, 8), 13);
    CHECK(r.space_cap == default_space_cap(m, d, k));
    for (const auto& l : r.per_machine) {
        CHECK(l.passes == 2);
        CHECK(l.rows_read == 2 * 2000);
        CHECK(l.estimate_words == d);
        CHECK(l.words_communicated >= d);
        CHECK(l.words_received >= d * d);
        CHECK(l.peak_words <= m * d + d * k + 8 * d);
    }
    const PassAudit audit = audit_single_pass(r.per_machine, 2);
    CHECK(audit.max_passes == 2);
    CHECK(audit.machines == 6);
    CHECK_THROWS_AS(audit_single_pass(r.per_machine, 1), PassViolation);
}

TEST_CASE("an undersized space cap is reported") {
    const SynthProblem p = problem(300, 4, 6);
    TwoPassOptions opts;
    opts.space_cap = 10;
    CHECK_THROWS_AS(run_two_pass(p.a, p.b, 2, config(20, 4), 14, opts), MachineFailed);
    const DataServer server(p.a, p.b);
    CostLedger ledger;
    LessConfig c = config(20, 4);
    c.mode = SketchMode::LessUniform;
    c.density = 0.05;
    CHECK_THROWS_AS(run_single_pass_estimator(server, c, nullptr, ledger, 10), SpaceCapExceeded);
}

TEST_CASE("averaging across 64 machines beats the median machine by 4x") {
    const SynthProblem p = problem(2000, 20, 7);
    const DistributedResult r = run_two_pass(p.a, p.b, 64, config(120, 8), 15);
    const LossOracle o(p.a, p.b);
    std::vector<double> single;
    for (const auto& e : r.estimates) single.push_back(o.relative_excess_loss(e.x.span()));
    std::nth_element(single.begin(), single.begin() + 32, single.end());
    CHECK(o.relative_excess_loss(r.x_hat.span()) <= single[32] / 4);
}

TEST_CASE("parallel and sequential runs are bit-identical") {
    const SynthProblem p = problem(800, 6, 8);
    TwoPassOptions seq, par;
    seq.threads = 1;
    par.threads = 4;
    const DistributedResult a = run_two_pass(p.a, p.b, 8, config(40, 4), 16, seq);
    const DistributedResult b = run_two_pass(p.a, p.b, 8, config(40, 4), 16, par);
    CHECK(bit_equal(a.x_hat, b.x_hat));
    for (std::size_t i = 0; i < 8; ++i) CHECK(bit_equal(a.estimates[i].x, b.estimates[i].x));
}

TEST_CASE("machine j's estimate depends only on (seed, j)") {
    const SynthProblem p = problem(800, 6, 9);
    TwoPassOptions opts;
    opts.pass_one_rows = 48;
    const DistributedResult four = run_two_pass(p.a, p.b, 4, config(40, 4), 17, opts);
    const DistributedResult eight = run_two_pass(p.a, p.b, 8, config(40, 4), 17, opts);
    for (std::size_t j = 0; j < 4; ++j) CHECK(bit_equal(four.estimates[j].x, eight.estimates[j].x));
}

TEST_CASE("run_machines_parallel") {
    auto make = [](std::size_t count) {
        std::vector<MachineTask> tasks;
        for (std::size_t j = 0; j < count; ++j)
            tasks.push_back([j] {
                CounterRng rng(99, StreamTag::Generic, j);
                DenseVector x(3);
                for (std::size_t k = 0; k < 3; ++k) x[k] = rng.gaussian();
                return EstimateBundle{x, j, j};
            });
        return tasks;
    };
    CHECK(run_machines_parallel({}, 4).empty());
    const auto seq = run_machines_parallel(make(64), 1);
    const auto par = run_machines_parallel(make(64), 8);
    REQUIRE(seq.size() == 64);
    for (std::size_t j = 0; j < 64; ++j) {
        CHECK(bit_equal(seq[j].x, par[j].x));
        CHECK(par[j].seed == j);
    }
}

TEST_CASE("failures surface as MachineFailed with the lowest failing index and its cause") {
    auto failing = [](std::size_t idx) {
        if (idx == 3) throw RankDeficient("boom");
        if (idx == 5) throw DataError("bad");
    };
    try {
        run_indexed(8, 1, failing);
        FAIL("expected MachineFailed");
    } catch (const MachineFailed& e) {
        CHECK(e.machine_id() == 3);
        CHECK(e.cause() == MachineFailed::Cause::Numerical);
    }
    try {
        run_indexed(8, 1, [](std::size_t idx) {
            if (idx == 2) throw DataError("bad row");
        });
        FAIL("expected MachineFailed");
    } catch (const MachineFailed& e) {
        CHECK(e.cause() == MachineFailed::Cause::Data);
    }
    try {
        run_indexed(4, 2, [](std::size_t) { throw PassViolation("reopen"); });
        FAIL("expected MachineFailed");
    } catch (const MachineFailed& e) {
        CHECK(e.machine_id() == 0);
        CHECK(e.cause() == MachineFailed::Cause::Protocol);
    }
}

TEST_CASE("fail-fast stops scheduling new machines") {
    std::atomic<std::size_t> started{0};
    CHECK_THROWS_AS(run_indexed(1000, 1,
                                [&](std::size_t idx) {
                                    ++started;
                                    if (idx == 0) throw NumericalError("first");
                                }),
                    MachineFailed);
    CHECK(started.load() == 1);
}

TEST_CASE("pass audit of the single-pass estimator and a triple re-open") {
    const SynthProblem p = problem(400, 4, 10);
    const DataServer server(p.a, p.b);
    const Preconditioner pre = make_preconditioner(upper_triangular_inverse(thin_qr(p.a).r), 8, 3, 400);
    std::vector<CostLedger> ledgers(3);
    for (std::size_t j = 0; j < 3; ++j) {
        ledgers[j].machine_id = j;
        LessConfig c = config(24, 4);
        c.seed = j;
        (void)run_single_pass_estimator(server, c, &pre, ledgers[j]);
    }
    CHECK(audit_single_pass(ledgers, 1).max_passes == 1);

    CostLedger bad;
    auto h = server.open_handle(bad);
    h.open();
    h.open();
    h.open();
    const std::vector<CostLedger> one{bad};
    CHECK_THROWS_AS(audit_single_pass(one, 1), PassViolation);
}

TEST_CASE("worker_threads honours LESS_THREADS") {
    ::setenv("LESS_THREADS", "3", 1);
    CHECK(worker_threads() == 3);
    ::unsetenv("LESS_THREADS");
    CHECK(worker_threads() >= 1);
}
