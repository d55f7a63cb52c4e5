#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lessketch/leverage.hpp"
#include "lessketch/less.hpp"
#include "lessketch/matrix.hpp"
#include "lessketch/rows.hpp"
#include "lessketch/solver.hpp"

namespace lessketch {

/// Per-machine counters. Words are 64-bit reals.
struct CostLedger {
    std::size_t machine_id = 0;
    std::size_t passes = 0;              // stream opens
    std::size_t rows_read = 0;
    std::size_t peak_words = 0;          // max live words held locally
    std::size_t words_communicated = 0;  // uplink to the server, all passes
    std::size_t estimate_words = 0;      // uplink of the final estimate
    std::size_t words_received = 0;      // broadcast from the server
};

/// Tracks live words for one machine and keeps the peak in a ledger.
class SpaceMeter {
public:
    explicit SpaceMeter(CostLedger& ledger) : ledger_(ledger) {}
    void acquire(std::size_t words) noexcept;
    void release(std::size_t words) noexcept;
    std::size_t live() const noexcept { return live_; }

private:
    CostLedger& ledger_;
    std::size_t live_ = 0;
};

/// Sequential stream over the server's rows for one machine. Every open()
/// counts as a pass; a completed pass is checked to have delivered each row
/// exactly once in order.
class StreamHandle final : public RowStream {
public:
    StreamHandle(const DenseMatrix& a, const DenseVector& b, CostLedger& ledger) : a_(a), b_(b), ledger_(ledger) {}

    void open() override;
    bool next(RowView& out) override;
    std::size_t cols() const noexcept override { return a_.cols(); }

    std::size_t machine_id() const noexcept { return ledger_.machine_id; }
    std::size_t position() const noexcept { return pos_; }
    std::size_t opens() const noexcept { return ledger_.passes; }

private:
    const DenseMatrix& a_;
    const DenseVector& b_;
    CostLedger& ledger_;
    std::size_t pos_ = 0;
    std::size_t delivered_ = 0;
    std::size_t index_sum_ = 0;
    bool is_open_ = false;
};

/// In-process data server: read-only (A, b) behind per-machine stream handles.
class DataServer {
public:
    DataServer(const DenseMatrix& a, const DenseVector& b);
    StreamHandle open_handle(CostLedger& ledger) const { return StreamHandle(a_, b_, ledger); }
    std::size_t rows() const noexcept { return a_.rows(); }
    std::size_t cols() const noexcept { return a_.cols(); }
    const DenseMatrix& a() const noexcept { return a_; }
    const DenseVector& b() const noexcept { return b_; }

private:
    const DenseMatrix& a_;
    const DenseVector& b_;
};

/// Worker count from LESS_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_threads();

/// Runs fn(0..count-1) on up to `threads` workers (0 = worker_threads()).
/// Fail-fast: after the first failure no new index starts, and the failure
/// with the lowest index is rethrown as MachineFailed.
void run_indexed(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

using MachineTask = std::function<EstimateBundle()>;

/// Results in task order; identical to a sequential run whenever the tasks
/// are deterministic and share no mutable state.
std::vector<EstimateBundle> run_machines_parallel(const std::vector<MachineTask>& machines, std::size_t threads = 0);

/// Words a pass-two machine holds while streaming: sketch, labels, probe,
/// row buffer and a scalar.
std::size_t pass_two_stream_words(std::size_t m, std::size_t d, std::size_t k, bool needs_probe);
/// Default cap m (d + 1) + d k + 8 d.
std::size_t default_space_cap(std::size_t m, std::size_t d, std::size_t k);

/// Single-pass estimator of one machine given a shared preconditioner: one
/// stream open, local LESS sketch, CG solve, d words uplinked.
/// Throws SpaceCapExceeded when space_cap > 0 and the peak exceeds it.
EstimateBundle run_single_pass_estimator(const DataServer& server, const LessConfig& cfg,
                                         const Preconditioner* pre, CostLedger& ledger, std::size_t space_cap = 0,
                                         double tol = kDefaultCgTolerance);

struct TwoPassOptions {
    std::size_t probe_width = kDefaultProbeWidth;
    std::size_t pass_one_rows = 0;     // 0: same as cfg.m (raised to q when q is larger)
    std::size_t space_cap = 0;         // 0: default_space_cap
    std::size_t threads = 0;           // 0: worker_threads()
    bool identical_seeds = false;      // diagnostic: every machine uses the same sketch seed
    double tol = kDefaultCgTolerance;
};

struct DistributedResult {
    DenseVector x_hat;
    std::vector<CostLedger> per_machine;
    std::vector<EstimateBundle> estimates;
    std::size_t q = 0;
    std::size_t space_cap = 0;
};

/// Two parallel passes. Pass one: machine j sketches the LessUniform rows
/// r = j mod q and ships them; the server factors the assembled sketch and
/// broadcasts P and the probe P G. Pass two: every machine runs the
/// single-pass estimator with seed derive_seed(seed, j). x_hat is the mean.
DistributedResult run_two_pass(const DenseMatrix& a, const DenseVector& b, std::size_t q, const LessConfig& cfg,
                               std::uint64_t seed, const TwoPassOptions& options = {});

struct PassAudit {
    std::size_t declared = 0;
    std::size_t max_passes = 0;
    std::size_t machines = 0;
};

/// Throws PassViolation if any machine's pass count differs from `declared`.
PassAudit audit_single_pass(std::span<const CostLedger> ledgers, std::size_t declared);

}  // namespace lessketch
