#include "lessketch/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace lessketch {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(mix64(parent) ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

CounterRng::CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
           static_cast<std::uint32_t>(index >> 32)} {}

void CounterRng::refill() noexcept {
    block_ = philox4x32(ctr_, key_);
    ++ctr_[0];
    used_ = 0;
}

CounterRng::result_type CounterRng::operator()() noexcept {
    if (used_ > 2) refill();
    const std::uint64_t v = (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
    used_ += 2;
    return v;
}

double CounterRng::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<__uint128_t>((*this)()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::gaussian() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double rademacher_sign(std::uint64_t seed, std::uint64_t data_row, std::uint64_t sketch_row) noexcept {
    const auto block = philox4x32({static_cast<std::uint32_t>(sketch_row), static_cast<std::uint32_t>(StreamTag::ColumnSign),
                                   static_cast<std::uint32_t>(data_row), static_cast<std::uint32_t>(data_row >> 32)},
                                  {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (block[0] & 1u) ? -1.0 : 1.0;
}

namespace {

std::uint64_t binomial_inversion(std::uint64_t n, double p, CounterRng& rng) {
    const double q = 1.0 - p;
    const double ratio = p / q;
    const double a = static_cast<double>(n + 1) * ratio;
    double prob = std::pow(q, static_cast<double>(n));
    double u = rng.uniform();
    std::uint64_t x = 0;
    while (u > prob) {
        u -= prob;
        ++x;
        if (x > n) {
            // rounding left a sliver of mass past n; restart
            x = 0;
            prob = std::pow(q, static_cast<double>(n));
            u = rng.uniform();
            continue;
        }
        prob *= a / static_cast<double>(x) - ratio;
    }
    return x;
}

// Hormann (1993), "The generation of binomial random variates", algorithm BTRS.
std::uint64_t binomial_btrs(std::uint64_t n, double p, CounterRng& rng) {
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const double mode = std::floor((nd + 1.0) * p);
    const double h = std::lgamma(mode + 1.0) + std::lgamma(nd - mode + 1.0);
    for (;;) {
        const double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + c);
        if (k < 0.0 || k > nd) continue;
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (us <= 0.0) continue;
        v = std::log(v * alpha / (a / (us * us) + b));
        if (v <= h - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) + (k - mode) * lpq)
            return static_cast<std::uint64_t>(k);
    }
}

}  // namespace

std::uint64_t sample_binomial(std::uint64_t trials, double p, CounterRng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_binomial: p outside [0, 1]");
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    if (p > 0.5) return trials - sample_binomial(trials, 1.0 - p, rng);
    if (static_cast<double>(trials) * p < 10.0) return binomial_inversion(trials, p, rng);
    return binomial_btrs(trials, p, rng);
}

std::vector<std::uint32_t> sample_distinct_sorted(std::uint32_t universe, std::uint32_t count, CounterRng& rng) {
    if (count > universe) throw std::invalid_argument("sample_distinct_sorted: count exceeds universe");
    std::vector<std::uint32_t> out;
    if (count == 0) return out;
    out.reserve(count);
    if (count == universe) {
        for (std::uint32_t i = 0; i < universe; ++i) out.push_back(i);
        return out;
    }
    // Floyd: for j in [universe - count, universe) pick t in [0, j]; take t
    // unless already taken, in which case take j.
    if (static_cast<std::uint64_t>(count) * 8 >= universe) {
        std::vector<char> taken(universe, 0);
        for (std::uint32_t j = universe - count; j < universe; ++j) {
            const auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
            taken[taken[t] ? j : t] = 1;
        }
        for (std::uint32_t i = 0; i < universe; ++i)
            if (taken[i]) out.push_back(i);
        return out;
    }
    if (count <= 16) {
        for (std::uint32_t j = universe - count; j < universe; ++j) {
            const auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
            const bool seen = std::find(out.begin(), out.end(), t) != out.end();
            out.push_back(seen ? j : t);
        }
    } else {
        std::unordered_set<std::uint32_t> taken;
        taken.reserve(count * 2);
        for (std::uint32_t j = universe - count; j < universe; ++j) {
            const auto t = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
            const std::uint32_t pick = taken.count(t) ? j : t;
            taken.insert(pick);
            out.push_back(pick);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lessketch
