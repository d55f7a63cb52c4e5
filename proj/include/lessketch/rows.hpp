#pragma once

#include <cstddef>
#include <span>

#include "lessketch/matrix.hpp"

namespace lessketch {

/// One row/label pair handed out by a stream. The span is valid until the
/// next call to next() or open().
struct RowView {
    std::size_t index = 0;
    std::span<const double> values;
    double label = 0.0;
};

/// Sequential row source: open() (re)starts the stream, next() yields rows in
/// order until it returns false.
class RowStream {
public:
    virtual ~RowStream() = default;
    virtual void open() = 0;
    virtual bool next(RowView& out) = 0;
    virtual std::size_t cols() const noexcept = 0;
};

/// Streams the rows of an in-memory matrix, with labels when b is given.
class MatrixRowSource final : public RowStream {
public:
    explicit MatrixRowSource(const DenseMatrix& a, const DenseVector* b = nullptr) : a_(a), b_(b) {}

    void open() override { pos_ = 0; }
    bool next(RowView& out) override {
        if (pos_ >= a_.rows()) return false;
        out.index = pos_;
        out.values = a_.row(pos_);
        out.label = b_ ? (*b_)[pos_] : 0.0;
        ++pos_;
        return true;
    }
    std::size_t cols() const noexcept override { return a_.cols(); }

private:
    const DenseMatrix& a_;
    const DenseVector* b_;
    std::size_t pos_ = 0;
};

}  // namespace lessketch
