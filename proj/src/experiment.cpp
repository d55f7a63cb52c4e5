#include "lessketch/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lessketch/distributed.hpp"
#include "lessketch/errors.hpp"
#include "lessketch/leverage.hpp"
#include "lessketch/random.hpp"
#include "lessketch/solver.hpp"

namespace lessketch {

void ExperimentConfig::validate(std::size_t d) const {
    if (q_grid.empty()) throw std::invalid_argument("experiment: q grid is empty");
    if (q_grid.front() == 0) throw std::invalid_argument("experiment: q must be >= 1");
    for (std::size_t i = 1; i < q_grid.size(); ++i)
        if (q_grid[i] <= q_grid[i - 1]) throw std::invalid_argument("experiment: q grid must be strictly ascending");
    if (configs.empty()) throw std::invalid_argument("experiment: no sketch configurations");
    if (repeats == 0) throw std::invalid_argument("experiment: repeats must be >= 1");
    const double budget = static_cast<double>(configs.front().m) * configs.front().nnz;
    for (const auto& c : configs) {
        if (c.m <= d)
            throw std::invalid_argument("experiment: m = " + std::to_string(c.m) + " must exceed d = " +
                                        std::to_string(d));
        if (!(c.nnz > 0.0)) throw std::invalid_argument("experiment: nnz must be positive");
        if (std::abs(static_cast<double>(c.m) * c.nnz - budget) > 1e-9 * budget)
            throw std::invalid_argument("experiment: every configuration must have the same budget m * nnz");
    }
}

std::vector<SketchShape> budget_configs(std::size_t budget, std::size_t count) {
    if (count == 0 || count > 62) throw std::invalid_argument("budget_configs: count out of range");
    std::vector<SketchShape> out;
    // nnz exponents spread evenly over [0, count], so 4 configs span 16x
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t slot = count - 1 - k;
        const std::size_t e =
            count == 1 ? 0 : static_cast<std::size_t>(std::lround(static_cast<double>(slot * count) / (count - 1)));
        const std::size_t nnz = std::size_t{1} << e;
        if (budget % nnz != 0)
            throw std::invalid_argument("budget " + std::to_string(budget) + " is not divisible by nnz " +
                                        std::to_string(nnz));
        out.push_back({budget / nnz, static_cast<double>(nnz)});
    }
    return out;
}

std::vector<ExperimentRow> experiment_averaging(const DenseMatrix& a, const DenseVector& b,
                                                const ExperimentConfig& cfg) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    cfg.validate(d);
    const DataServer server(a, b);
    const LossOracle oracle(a, b);
    const std::size_t q_max = cfg.q_grid.back();

    // leverage-based modes share one preconditioner, as in the two-pass protocol
    std::optional<Preconditioner> pre;
    if (cfg.mode != SketchMode::LessUniform) {
        MatrixRowSource rows(a, &b);
        const LessConfig pass_one = preconditioner_sketch_config(n, d, std::max<std::size_t>(4 * d, 2 * d + 16), 8.0,
                                                                 derive_seed(cfg.seed, 0xA11CE));
        pre = build_preconditioner(rows, pass_one, kDefaultProbeWidth, derive_seed(cfg.seed, 0xB0B));
    }

    std::vector<ExperimentRow> out;
    for (std::size_t c = 0; c < cfg.configs.size(); ++c) {
        const SketchShape& shape = cfg.configs[c];
        LessConfig base;
        base.m = shape.m;
        base.mode = cfg.mode;
        base.s = shape.nnz;
        base.density = std::min(1.0, shape.nnz / static_cast<double>(n));

        const std::uint64_t config_seed = derive_seed(cfg.seed, c);
        std::vector<DenseVector> estimates(cfg.repeats * q_max);
        try {
            run_indexed(estimates.size(), cfg.threads, [&](std::size_t idx) {
                const std::size_t rep = idx / q_max;
                const std::size_t machine = idx % q_max;
                LessConfig local = base;
                local.seed = derive_seed(derive_seed(config_seed, rep), machine);
                CostLedger ledger;
                ledger.machine_id = machine;
                estimates[idx] =
                    run_single_pass_estimator(server, local, pre ? &*pre : nullptr, ledger).x;
            });
        } catch (const MachineFailed& e) {
            throw MachineFailed(e.machine_id(), e.cause(),
                                "config " + std::to_string(c) + " (m=" + std::to_string(shape.m) + "): " + e.what());
        }

        for (std::size_t q : cfg.q_grid) {
            std::vector<double> errs(cfg.repeats);
            for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
                std::vector<double> mean(d, 0.0);
                for (std::size_t j = 0; j < q; ++j) axpy(1.0 / static_cast<double>(q), estimates[rep * q_max + j].span(), mean);
                errs[rep] = oracle.relative_excess_loss(mean);
            }
            double sum = 0.0;
            for (double e : errs) sum += e;
            const double mean = sum / static_cast<double>(cfg.repeats);
            double ss = 0.0;
            for (double e : errs) ss += (e - mean) * (e - mean);
            const double sd = cfg.repeats > 1 ? std::sqrt(ss / static_cast<double>(cfg.repeats - 1)) : 0.0;
            out.push_back({c, shape.m, shape.nnz, q, mean, sd / std::sqrt(static_cast<double>(cfg.repeats)),
                           cfg.repeats, cfg.seed});
        }
    }
    return out;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "config_id,m,nnz,q,mean_rel_err,stderr,repeats,seed\n";
    const auto old = out.precision(10);
    for (const auto& r : rows)
        out << r.config_id << ',' << r.m << ',' << r.nnz << ',' << r.q << ',' << r.mean_rel_err << ','
            << r.stderr_rel_err << ',' << r.repeats << ',' << r.seed << '\n';
    out.precision(old);
}

}  // namespace lessketch
