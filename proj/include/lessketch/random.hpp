#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace lessketch {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;
/// Deterministic child seed for (parent, index).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Domain tags separate independent uses of the same (seed, index) pair.
enum class StreamTag : std::uint32_t {
    ColumnDraw = 1,   // binomial count + index subset for one sketch column
    ColumnSign = 2,   // Rademacher sign of one (data row, sketch row) entry
    Gaussian = 3,     // probe matrices, synthetic data, dense controls
    Generic = 4,
};

/// Counter-based generator keyed by (seed, tag, index). Any two distinct keys
/// give independent streams, and a stream can be regenerated anywhere without
/// shared state. Meets UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform in (0, 1).
    double uniform_open() noexcept;
    /// Uniform integer in [0, bound), bound >= 1; Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept;
    double gaussian() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;  // 32-bit words consumed from block_
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stateless sign of entry (data_row, sketch_row): one Philox block per call,
/// keyed by the seed, so a column's signs do not depend on draw order.
double rademacher_sign(std::uint64_t seed, std::uint64_t data_row, std::uint64_t sketch_row) noexcept;

/// Exact Binomial(trials, p) draw: sequential inversion when
/// trials * min(p, 1-p) < 10, otherwise Hormann's BTRS transformed rejection.
std::uint64_t sample_binomial(std::uint64_t trials, double p, CounterRng& rng);

/// `count` distinct indices drawn uniformly from [0, universe) by Floyd's
/// algorithm, returned in increasing order.
std::vector<std::uint32_t> sample_distinct_sorted(std::uint32_t universe, std::uint32_t count, CounterRng& rng);

}  // namespace lessketch
