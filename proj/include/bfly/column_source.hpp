#ifndef BFLY_COLUMN_SOURCE_HPP
#define BFLY_COLUMN_SOURCE_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace bfly {

// Sequential access to the columns of an implicitly defined matrix, in index
// order, one contiguous range at a time.  reset() replays from column 0.
class ColumnSource {
public:
    virtual ~ColumnSource() = default;
    virtual Eigen::Index rows() const = 0;
    virtual Eigen::Index cols() const = 0;
    // Fills `out` with the next out.cols() columns.
    virtual void next_columns(Eigen::Ref<Eigen::MatrixXd> out) = 0;
    virtual void reset() = 0;
};

class DenseColumnSource final : public ColumnSource {
public:
    explicit DenseColumnSource(Eigen::MatrixXd a) : a_(std::move(a)) {}

    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }

    void next_columns(Eigen::Ref<Eigen::MatrixXd> out) override {
        if (next_ + out.cols() > a_.cols())
            throw std::out_of_range("DenseColumnSource: past the last column");
        out = a_.middleCols(next_, out.cols());
        next_ += out.cols();
    }

    void reset() override { next_ = 0; }

private:
    Eigen::MatrixXd a_;
    Eigen::Index next_ = 0;
};

// Reads out all columns; replays the source from the start first.
inline Eigen::MatrixXd materialize(ColumnSource& source) {
    source.reset();
    Eigen::MatrixXd a(source.rows(), source.cols());
    source.next_columns(a);
    return a;
}

} // namespace bfly

#endif
