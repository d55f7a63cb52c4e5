#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lessketch/matrix.hpp"

namespace lessketch {

struct LibsvmRecord {
    double label = 0.0;
    std::vector<std::pair<std::size_t, double>> features;  // 1-based index, strictly increasing
};

struct Dataset {
    DenseMatrix a;
    DenseVector b;
};

/// Parses "label idx:val idx:val ..." lines. Blank lines and '#' comments are
/// skipped. d = d_hint when given, else the largest index seen.
/// Throws ParseError(line, reason) (reason "EmptyInput" when no record is
/// found) and DimensionMismatch.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> d_hint = std::nullopt);
Dataset parse_libsvm_file(const std::string& path, std::optional<std::size_t> d_hint = std::nullopt);
/// Parses one line; throws ParseError tagged with `line_no`.
LibsvmRecord parse_libsvm_line(const std::string& line, std::size_t line_no);

/// Writes nonzero entries only, with round-trip precision.
void write_libsvm(std::ostream& out, const DenseMatrix& a, const DenseVector& b);

/// Keeps the first `rows` rows (no-op when rows >= n).
Dataset truncate_rows(Dataset data, std::size_t rows);

struct Standardization {
    std::vector<double> column_norms;  // original Euclidean norm of each column
    std::size_t zero_columns = 0;      // columns left untouched because their norm is 0
};

/// Scales every nonzero column of a to unit Euclidean norm.
Standardization standardize_columns(DenseMatrix& a);

struct SynthSpec {
    std::size_t n = 2000;
    std::size_t d = 20;
    double noise = 1.0;  // noise_sigma
    double cond = 1.0;   // ratio of largest to smallest singular value
    std::uint64_t seed = 0;
    /// Row weights of the left factor drawn from a Student-t with this many
    /// degrees of freedom (0: Gaussian rows, i.e. Haar left factor).
    double tail_df = 0.0;
    /// Noise standard deviation on row i scales with (n l_i / d)^(hetero / 2).
    double hetero = 0.0;
};

struct SynthProblem {
    DenseMatrix a;
    DenseVector b;
    DenseVector x_true;
};

/// A = L diag(sigma) R^T with sigma geometric from 1 down to 1/cond, L with
/// orthonormal columns and R a Haar orthogonal matrix; b = A x_true + noise.
SynthProblem synth_problem(const SynthSpec& spec);

/// Parses "n=2000,d=20,noise=0.5,cond=10,seed=3,tail=1.5,hetero=1".
SynthSpec parse_synth_spec(const std::string& text, SynthSpec base = {});

}  // namespace lessketch
