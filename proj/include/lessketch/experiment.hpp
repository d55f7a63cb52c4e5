#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lessketch/less.hpp"
#include "lessketch/matrix.hpp"

namespace lessketch {

struct SketchShape {
    std::size_t m = 0;
    double nnz = 1.0;  // expected nonzeros per sketch row
};

struct ExperimentConfig {
    std::vector<std::size_t> q_grid{1, 4, 16, 64, 256};
    std::vector<SketchShape> configs;
    std::size_t repeats = 100;
    std::uint64_t seed = 0;
    SketchMode mode = SketchMode::LessUniform;
    std::size_t threads = 0;

    /// Throws std::invalid_argument: empty or non-ascending q grid, no
    /// configs, m <= d, zero repeats, or unequal budgets m * nnz.
    void validate(std::size_t d) const;
};

/// `count` shapes with nnz = 2^e for e spread evenly over [0, count] (4 configs: 16, 8, 2, 1), m = budget / nnz.
std::vector<SketchShape> budget_configs(std::size_t budget, std::size_t count);

struct ExperimentRow {
    std::size_t config_id = 0;
    std::size_t m = 0;
    double nnz = 0.0;
    std::size_t q = 0;
    double mean_rel_err = 0.0;
    double stderr_rel_err = 0.0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
};

/// For each shape and repeat, draws max(q_grid) independent single-pass
/// estimates; the q-machine average uses the first q of them. Rows are
/// ordered by config then q.
std::vector<ExperimentRow> experiment_averaging(const DenseMatrix& a, const DenseVector& b,
                                                const ExperimentConfig& cfg);

/// Header: config_id,m,nnz,q,mean_rel_err,stderr,repeats,seed
void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace lessketch
