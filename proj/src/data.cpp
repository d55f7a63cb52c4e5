#include "lessketch/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lessketch/errors.hpp"
#include "lessketch/linalg.hpp"
#include "lessketch/random.hpp"

namespace lessketch {

namespace {

bool parse_double(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_index(std::string_view token, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

LibsvmRecord parse_libsvm_line(const std::string& line, std::size_t line_no) {
    std::string_view rest = line;
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    rest = strip(rest);
    LibsvmRecord rec;
    std::size_t pos = 0;
    auto next_token = [&](std::string_view& tok) {
        while (pos < rest.size() && std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
        if (pos >= rest.size()) return false;
        const std::size_t start = pos;
        while (pos < rest.size() && !std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
        tok = rest.substr(start, pos - start);
        return true;
    };
    std::string_view tok;
    if (!next_token(tok)) throw ParseError(line_no, "MissingLabel");
    if (!parse_double(tok, rec.label)) throw ParseError(line_no, "BadLabel");
    if (!std::isfinite(rec.label)) throw ParseError(line_no, "NonFiniteValue");
    std::size_t previous = 0;
    while (next_token(tok)) {
        const auto colon = tok.find(':');
        if (colon == std::string_view::npos) throw ParseError(line_no, "MissingColon");
        std::size_t index = 0;
        double value = 0.0;
        if (!parse_index(tok.substr(0, colon), index)) throw ParseError(line_no, "BadIndex");
        if (index == 0) throw ParseError(line_no, "ZeroIndex");
        if (!parse_double(tok.substr(colon + 1), value)) throw ParseError(line_no, "BadValue");
        if (!std::isfinite(value)) throw ParseError(line_no, "NonFiniteValue");
        if (index <= previous) throw ParseError(line_no, "NonIncreasingIndex");
        previous = index;
        rec.features.emplace_back(index, value);
    }
    return rec;
}

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> d_hint) {
    std::vector<LibsvmRecord> records;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_index = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = strip(std::string_view(line).substr(0, std::min(line.find('#'), line.size())));
        if (body.empty()) continue;
        records.push_back(parse_libsvm_line(line, line_no));
        if (!records.back().features.empty()) max_index = std::max(max_index, records.back().features.back().first);
    }
    if (records.empty()) throw ParseError(line_no, "EmptyInput");
    if (d_hint && *d_hint < max_index)
        throw DimensionMismatch("feature index " + std::to_string(max_index) + " exceeds declared dimension " +
                                std::to_string(*d_hint));
    const std::size_t d = d_hint ? *d_hint : max_index;
    if (d == 0) throw DimensionMismatch("no features in input and no dimension given");
    DenseMatrix a(records.size(), d);
    DenseVector b(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        b[i] = records[i].label;
        for (const auto& [index, value] : records[i].features) a(i, index - 1) = value;
    }
    return {std::move(a), std::move(b)};
}

Dataset parse_libsvm_file(const std::string& path, std::optional<std::size_t> d_hint) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_libsvm(in, d_hint);
}

void write_libsvm(std::ostream& out, const DenseMatrix& a, const DenseVector& b) {
    if (b.size() != a.rows()) throw DimensionMismatch("write_libsvm: label count != rows");
    char buf[64];
    auto put = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, ptr - buf);
    };
    for (std::size_t i = 0; i < a.rows(); ++i) {
        put(b[i]);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) == 0.0) continue;
            out << ' ' << (j + 1) << ':';
            put(a(i, j));
        }
        out << '\n';
    }
}

Dataset truncate_rows(Dataset data, std::size_t rows) {
    if (rows == 0 || rows >= data.a.rows()) return data;
    data.a.truncate_rows(rows);
    std::vector<double> labels(data.b.values().begin(), data.b.values().begin() + static_cast<std::ptrdiff_t>(rows));
    data.b = DenseVector(std::move(labels));
    return data;
}

Standardization standardize_columns(DenseMatrix& a) {
    Standardization out;
    out.column_norms.assign(a.cols(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
        out.column_norms[j] = std::sqrt(s);
    }
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double norm = out.column_norms[j];
        if (norm == 0.0) {
            ++out.zero_columns;
            continue;
        }
        for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) /= norm;
    }
    return out;
}

SynthProblem synth_problem(const SynthSpec& spec) {
    const std::size_t n = spec.n;
    const std::size_t d = spec.d;
    if (d == 0 || n <= d) throw std::invalid_argument("synth_problem: need n > d >= 1");
    if (!(spec.cond >= 1.0)) throw std::invalid_argument("synth_problem: cond must be >= 1");
    if (!(spec.noise >= 0.0)) throw std::invalid_argument("synth_problem: noise must be >= 0");
    if (spec.tail_df < 0.0) throw std::invalid_argument("synth_problem: tail_df must be >= 0");

    CounterRng rng(spec.seed, StreamTag::Gaussian, 0);
    DenseMatrix g(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (spec.tail_df > 0.0) w = std::student_t_distribution<double>(spec.tail_df)(rng);
        for (std::size_t j = 0; j < d; ++j) g(i, j) = w * rng.gaussian();
    }
    const DenseMatrix left = thin_qr(g).q;

    DenseMatrix h(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) h(i, j) = rng.gaussian();
    const DenseMatrix right = thin_qr(h).q;

    // A = L diag(sigma) R^T
    DenseMatrix scaled_rt(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double t = d == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(d - 1);
        const double sigma = std::pow(spec.cond, -t);
        for (std::size_t j = 0; j < d; ++j) scaled_rt(k, j) = sigma * right(j, k);
    }
    SynthProblem out{matmul(left, scaled_rt), DenseVector(n), DenseVector(d)};
    for (std::size_t j = 0; j < d; ++j) out.x_true[j] = rng.gaussian();
    const DenseVector clean = matvec(out.a, out.x_true.span());

    std::vector<double> scale(n, 1.0);
    if (spec.hetero != 0.0) {
        double mean_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double rel = squared_norm(left.row(i)) * static_cast<double>(n) / static_cast<double>(d);
            scale[i] = std::pow(std::max(rel, 1e-300), spec.hetero / 2.0);
            mean_sq += scale[i] * scale[i];
        }
        const double norm = std::sqrt(mean_sq / static_cast<double>(n));
        for (double& v : scale) v /= norm;
    }
    for (std::size_t i = 0; i < n; ++i) out.b[i] = clean[i] + spec.noise * scale[i] * rng.gaussian();
    return out;
}

SynthSpec parse_synth_spec(const std::string& text, SynthSpec base) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto trimmed = strip(item);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) throw std::invalid_argument("synthetic spec item '" + item + "' lacks '='");
        const std::string key(strip(trimmed.substr(0, eq)));
        const std::string_view value = strip(trimmed.substr(eq + 1));
        double v = 0.0;
        if (!parse_double(value, v)) throw std::invalid_argument("synthetic spec value for '" + key + "' is not a number");
        auto as_count = [&] {
            if (v < 0 || v != std::floor(v)) throw std::invalid_argument("synthetic spec '" + key + "' must be a count");
            return static_cast<std::size_t>(v);
        };
        if (key == "n") base.n = as_count();
        else if (key == "d") base.d = as_count();
        else if (key == "noise" || key == "sigma") base.noise = v;
        else if (key == "cond") base.cond = v;
        else if (key == "seed") base.seed = as_count();
        else if (key == "tail") base.tail_df = v;
        else if (key == "hetero") base.hetero = v;
        else throw std::invalid_argument("unknown synthetic spec key '" + key + "'");
    }
    return base;
}

}  // namespace lessketch
