#include "lessketch/distributed.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "lessketch/errors.hpp"
#include "lessketch/linalg.hpp"
#include "lessketch/random.hpp"

namespace lessketch {

namespace {

// derive_seed indices reserved for the shared pass-one draws
constexpr std::uint64_t kPassOneSketchStream = 0xFFFFFFFF00000001ull;
constexpr std::uint64_t kProbeStream = 0xFFFFFFFF00000002ull;

bool needs_scores(SketchMode mode) { return mode != SketchMode::LessUniform; }

void check_cap(const CostLedger& ledger, std::size_t cap) {
    if (cap > 0 && ledger.peak_words > cap)
        throw SpaceCapExceeded("machine " + std::to_string(ledger.machine_id) + " held " +
                               std::to_string(ledger.peak_words) + " words, cap " + std::to_string(cap));
}

[[noreturn]] void rethrow_as_machine_failure(std::size_t id, const std::exception_ptr& err) {
    try {
        std::rethrow_exception(err);
    } catch (const MachineFailed&) {
        throw;
    } catch (const NumericalError& e) {
        throw MachineFailed(id, MachineFailed::Cause::Numerical, e.what());
    } catch (const DataError& e) {
        throw MachineFailed(id, MachineFailed::Cause::Data, e.what());
    } catch (const PassViolation& e) {
        throw MachineFailed(id, MachineFailed::Cause::Protocol, e.what());
    } catch (const SpaceCapExceeded& e) {
        throw MachineFailed(id, MachineFailed::Cause::Protocol, e.what());
    } catch (const std::exception& e) {
        throw MachineFailed(id, MachineFailed::Cause::Other, e.what());
    }
}

}  // namespace

void SpaceMeter::acquire(std::size_t words) noexcept {
    live_ += words;
    ledger_.peak_words = std::max(ledger_.peak_words, live_);
}

void SpaceMeter::release(std::size_t words) noexcept { live_ -= std::min(words, live_); }

void StreamHandle::open() {
    ++ledger_.passes;
    pos_ = 0;
    delivered_ = 0;
    index_sum_ = 0;
    is_open_ = true;
}

bool StreamHandle::next(RowView& out) {
    if (!is_open_) throw PassViolation("stream read before open()");
    const std::size_t n = a_.rows();
    if (pos_ >= n) {
        // exhaustion: each row exactly once, in order
        if (delivered_ != n || index_sum_ != n * (n - 1) / 2)
            throw PassViolation("stream checksum mismatch on machine " + std::to_string(ledger_.machine_id));
        is_open_ = false;
        return false;
    }
    out.index = pos_;
    out.values = a_.row(pos_);
    out.label = b_[pos_];
    ++delivered_;
    index_sum_ += pos_;
    ++ledger_.rows_read;
    ++pos_;
    return true;
}

DataServer::DataServer(const DenseMatrix& a, const DenseVector& b) : a_(a), b_(b) {
    if (b.size() != a.rows())
        throw DimensionMismatch("DataServer: b has " + std::to_string(b.size()) + " entries for " +
                                std::to_string(a.rows()) + " rows");
}

std::size_t worker_threads() {
    if (const char* env = std::getenv("LESS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void run_indexed(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (threads == 0) threads = worker_threads();
    threads = std::min(threads, count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto work = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (std::size_t i = 0; i < count; ++i)
        if (errors[i]) rethrow_as_machine_failure(i, errors[i]);
}

std::vector<EstimateBundle> run_machines_parallel(const std::vector<MachineTask>& machines, std::size_t threads) {
    std::vector<EstimateBundle> out(machines.size());
    run_indexed(machines.size(), threads, [&](std::size_t i) { out[i] = machines[i](); });
    return out;
}

std::size_t pass_two_stream_words(std::size_t m, std::size_t d, std::size_t k, bool needs_probe) {
    return m * d + m + (needs_probe ? d * k : 0) + (d + 1) + 1;
}

std::size_t default_space_cap(std::size_t m, std::size_t d, std::size_t k) { return m * (d + 1) + d * k + 8 * d; }

EstimateBundle run_single_pass_estimator(const DataServer& server, const LessConfig& cfg, const Preconditioner* pre,
                                         CostLedger& ledger, std::size_t space_cap, double tol) {
    cfg.validate();
    const std::size_t d = server.cols();
    const std::size_t m = cfg.m;
    const bool probe = needs_scores(cfg.mode);
    if (probe && pre == nullptr) throw std::invalid_argument("leverage-based sketches need a preconditioner");
    if (pre && pre->dims() != d) throw std::invalid_argument("preconditioner dimension mismatch");

    SpaceMeter meter(ledger);
    StreamHandle stream = server.open_handle(ledger);
    SketchAccumulator acc(cfg, d);
    meter.acquire(m * d + m);
    if (probe) meter.acquire(d * pre->probe_width());
    meter.acquire(d + 1);  // current row and label
    meter.acquire(1);      // its score / probability
    stream.open();
    RowView row;
    while (stream.next(row)) {
        const double p =
            probe ? inclusion_probability(approx_leverage_score(row.values, *pre), cfg, d) : cfg.density;
        acc.ingest_row_with_probability(row.values, row.label, p);
    }
    meter.release(d + 2);
    if (probe) meter.release(d * pre->probe_width());
    check_cap(ledger, space_cap);

    // in-place Householder: reflector coefficients, then only R and Q^T Sb survive
    meter.acquire(d);
    meter.release(d + (m > d ? (m - d) * (d + 1) : 0));
    meter.acquire(8 * d);  // CG work vectors and the estimate
    EstimateBundle est = pre ? solve_sketched(std::move(acc), *pre, tol) : solve_sketched_direct(std::move(acc));
    check_cap(ledger, space_cap);
    ledger.words_communicated += d;
    ledger.estimate_words = d;
    meter.release(meter.live());
    return est;
}

DistributedResult run_two_pass(const DenseMatrix& a, const DenseVector& b, std::size_t q, const LessConfig& cfg,
                               std::uint64_t seed, const TwoPassOptions& options) {
    cfg.validate();
    if (q == 0) throw std::invalid_argument("run_two_pass: q must be >= 1");
    const DataServer server(a, b);
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    const std::size_t k = options.probe_width;
    const std::size_t m1 = std::max(options.pass_one_rows ? options.pass_one_rows : cfg.m, q);
    if (m1 < d) throw RankDeficient("preconditioner sketch has m < d rows; increase m");
    const std::size_t cap = options.space_cap ? options.space_cap : default_space_cap(cfg.m, d, k);
    const LessConfig pass_one = preconditioner_sketch_config(n, d, m1, cfg.s, derive_seed(seed, kPassOneSketchStream));

    DistributedResult result;
    result.q = q;
    result.space_cap = cap;
    result.per_machine.resize(q);
    for (std::size_t j = 0; j < q; ++j) result.per_machine[j].machine_id = j;

    // pass one: sketch rows sharded by r mod q
    std::vector<DenseMatrix> shards(q, DenseMatrix(1, 1));
    run_indexed(q, options.threads, [&](std::size_t j) {
        CostLedger& ledger = result.per_machine[j];
        SpaceMeter meter(ledger);
        StreamHandle stream = server.open_handle(ledger);
        SketchAccumulator acc(pass_one, d, j, q);
        meter.acquire(acc.local_rows() * (d + 1));
        meter.acquire(d + 1);
        stream.open();
        RowView row;
        while (stream.next(row)) acc.ingest_row_with_probability(row.values, 0.0, pass_one.density);
        check_cap(ledger, cap);
        ledger.words_communicated += acc.local_rows() * d;
        shards[j] = acc.sa();
    });

    // server: assemble, factor, broadcast P and P G
    DenseMatrix sketch(m1, d);
    for (std::size_t r = 0; r < m1; ++r) {
        const auto src = shards[r % q].row(r / q);
        std::copy(src.begin(), src.end(), sketch.row(r).begin());
    }
    shards.clear();
    householder_in_place(sketch, {});
    const Preconditioner pre = preconditioner_from_r(sketch, k, derive_seed(seed, kProbeStream), n);
    for (auto& ledger : result.per_machine) ledger.words_received += d * d + (needs_scores(cfg.mode) ? d * k : 0);

    // pass two: independent single-pass estimators
    result.estimates.resize(q);
    run_indexed(q, options.threads, [&](std::size_t j) {
        LessConfig local = cfg;
        local.seed = derive_seed(seed, options.identical_seeds ? 0 : j);
        result.estimates[j] = run_single_pass_estimator(server, local, &pre, result.per_machine[j], cap, options.tol);
    });
    result.x_hat = average_estimates(result.estimates);
    return result;
}

PassAudit audit_single_pass(std::span<const CostLedger> ledgers, std::size_t declared) {
    PassAudit audit{declared, 0, ledgers.size()};
    for (const auto& l : ledgers) {
        audit.max_passes = std::max(audit.max_passes, l.passes);
        if (l.passes != declared)
            throw PassViolation("machine " + std::to_string(l.machine_id) + " opened its stream " +
                                std::to_string(l.passes) + " times; protocol declares " + std::to_string(declared));
    }
    return audit;
}

}  // namespace lessketch
