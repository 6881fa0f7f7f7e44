#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "squall/bitset.hpp"
#include "squall/errors.hpp"
#include "squall/value_traits.hpp"

namespace squall {

using index_t = std::uint64_t;

enum class OptimizationDirection { Min, Max };

/// Maps each state to a contiguous block of matrix rows, one row per
/// nondeterministic choice. Deterministic models use the trivial grouping
/// (state s owns exactly row s).
struct RowGrouping {
    std::vector<index_t> group_offsets;  // length num_states + 1

    static RowGrouping trivial(index_t num_states) {
        RowGrouping g;
        g.group_offsets.resize(num_states + 1);
        for (index_t s = 0; s <= num_states; ++s) g.group_offsets[s] = s;
        return g;
    }

    index_t num_states() const { return group_offsets.empty() ? 0 : group_offsets.size() - 1; }
    index_t num_rows() const { return group_offsets.empty() ? 0 : group_offsets.back(); }
    index_t group_begin(index_t state) const { return group_offsets[state]; }
    index_t group_end(index_t state) const { return group_offsets[state + 1]; }
    index_t group_size(index_t state) const { return group_offsets[state + 1] - group_offsets[state]; }

    bool is_trivial() const {
        for (index_t s = 0; s < num_states(); ++s)
            if (group_size(s) != 1) return false;
        return true;
    }

    /// The state owning a given row (binary search).
    index_t state_of_row(index_t row) const {
        auto it = std::upper_bound(group_offsets.begin(), group_offsets.end(), row);
        return static_cast<index_t>(it - group_offsets.begin()) - 1;
    }

    void validate() const {
        if (group_offsets.empty()) throw InputError("row grouping: empty offsets");
        if (group_offsets.front() != 0) throw InputError("row grouping: offsets must start at 0");
        for (index_t s = 0; s < num_states(); ++s)
            if (group_offsets[s + 1] <= group_offsets[s])
                throw InputError("row grouping: state " + std::to_string(s) + " has no rows");
    }
};

/// Compressed row-major sparse matrix over the numeric field V.
/// Columns within a row are strictly increasing; duplicate entries passed to
/// the builder are summed.
template <typename V>
class SparseMatrix {
  public:
    SparseMatrix() : num_rows_(0), num_cols_(0), row_offsets_{0} {}
    SparseMatrix(index_t num_rows, index_t num_cols, std::vector<index_t> row_offsets,
                 std::vector<index_t> col_indices, std::vector<V> values)
        : num_rows_(num_rows),
          num_cols_(num_cols),
          row_offsets_(std::move(row_offsets)),
          col_indices_(std::move(col_indices)),
          values_(std::move(values)) {
        validate();
    }

    index_t num_rows() const { return num_rows_; }
    index_t num_cols() const { return num_cols_; }
    index_t num_entries() const { return static_cast<index_t>(values_.size()); }

    std::vector<index_t> const& row_offsets() const { return row_offsets_; }
    std::vector<index_t> const& col_indices() const { return col_indices_; }
    std::vector<V> const& values() const { return values_; }

    index_t row_begin(index_t row) const { return row_offsets_[row]; }
    index_t row_end(index_t row) const { return row_offsets_[row + 1]; }
    index_t col(index_t entry) const { return col_indices_[entry]; }
    V const& value(index_t entry) const { return values_[entry]; }

    V row_sum(index_t row) const {
        V sum = ValueTraits<V>::zero();
        for (index_t e = row_begin(row); e < row_end(row); ++e) sum += values_[e];
        return sum;
    }

    /// Entry (row, col), zero when absent. Binary search within the row.
    V get(index_t row, index_t column) const {
        auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_begin(row));
        auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_end(row));
        auto it = std::lower_bound(first, last, column);
        if (it != last && *it == column) return values_[static_cast<std::size_t>(it - col_indices_.begin())];
        return ValueTraits<V>::zero();
    }

    bool operator==(SparseMatrix const& other) const = default;

    void validate() const {
        if (row_offsets_.size() != num_rows_ + 1) throw InputError("matrix: row offset length mismatch");
        if (row_offsets_.front() != 0) throw InputError("matrix: row offsets must start at 0");
        if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size())
            throw InputError("matrix: entry count mismatch");
        for (index_t r = 0; r < num_rows_; ++r) {
            if (row_offsets_[r + 1] < row_offsets_[r]) throw InputError("matrix: decreasing row offsets");
            for (index_t e = row_begin(r); e < row_end(r); ++e) {
                if (col_indices_[e] >= num_cols_) throw InputError("matrix: column index out of range");
                if (e > row_begin(r) && col_indices_[e] <= col_indices_[e - 1])
                    throw InputError("matrix: columns not strictly increasing in row " + std::to_string(r));
            }
        }
    }

  private:
    index_t num_rows_;
    index_t num_cols_;
    std::vector<index_t> row_offsets_;
    std::vector<index_t> col_indices_;
    std::vector<V> values_;
};

/// Accumulates (row, col, value) triplets and produces a canonical
/// SparseMatrix: columns sorted per row, duplicates summed.
template <typename V>
class MatrixBuilder {
  public:
    MatrixBuilder(index_t num_rows, index_t num_cols) : num_rows_(num_rows), num_cols_(num_cols) {}

    /// Adjusts the dimensions, e.g. to shrink a generous initial estimate to
    /// the rows actually added. Entries already added must stay in range.
    void resize(index_t num_rows, index_t num_cols) {
        num_rows_ = num_rows;
        num_cols_ = num_cols;
    }

    void add(index_t row, index_t column, V value) {
        if (row >= num_rows_ || column >= num_cols_) throw InputError("matrix builder: index out of range");
        triplets_.push_back({row, column, std::move(value)});
    }

    SparseMatrix<V> build() {
        std::stable_sort(triplets_.begin(), triplets_.end(), [](Triplet const& a, Triplet const& b) {
            return a.row != b.row ? a.row < b.row : a.column < b.column;
        });
        std::vector<index_t> offsets(num_rows_ + 1, 0);
        std::vector<index_t> cols;
        std::vector<V> values;
        cols.reserve(triplets_.size());
        values.reserve(triplets_.size());
        std::size_t i = 0;
        for (index_t r = 0; r < num_rows_; ++r) {
            offsets[r] = static_cast<index_t>(cols.size());
            while (i < triplets_.size() && triplets_[i].row == r) {
                index_t c = triplets_[i].column;
                V sum = triplets_[i].value;
                ++i;
                while (i < triplets_.size() && triplets_[i].row == r && triplets_[i].column == c) {
                    sum += triplets_[i].value;
                    ++i;
                }
                cols.push_back(c);
                values.push_back(std::move(sum));
            }
        }
        offsets[num_rows_] = static_cast<index_t>(cols.size());
        return SparseMatrix<V>(num_rows_, num_cols_, std::move(offsets), std::move(cols), std::move(values));
    }

  private:
    struct Triplet {
        index_t row;
        index_t column;
        V value;
    };
    index_t num_rows_;
    index_t num_cols_;
    std::vector<Triplet> triplets_;
};

/// result[r] = sum_j A[r,j] * x[j]. Summation order is left-to-right within
/// each row, so results are reproducible bit for bit.
template <typename V>
std::vector<V> multiply(SparseMatrix<V> const& matrix, std::vector<V> const& x) {
    if (x.size() != matrix.num_cols()) throw InputError("multiply: vector length mismatch");
    std::vector<V> result(matrix.num_rows(), ValueTraits<V>::zero());
    for (index_t r = 0; r < matrix.num_rows(); ++r) {
        V sum = ValueTraits<V>::zero();
        for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e) sum += matrix.value(e) * x[matrix.col(e)];
        result[r] = sum;
    }
    return result;
}

/// One Bellman step: result[s] = opt over the rows of s of the row product.
/// The choice vector records the argopt as an offset within the group; ties
/// break toward the lowest row.
template <typename V>
std::pair<std::vector<V>, std::vector<index_t>> multiply_and_reduce(SparseMatrix<V> const& matrix,
                                                                    RowGrouping const& grouping,
                                                                    std::vector<V> const& x,
                                                                    OptimizationDirection dir) {
    if (x.size() != matrix.num_cols()) throw InputError("multiply_and_reduce: vector length mismatch");
    if (grouping.num_rows() != matrix.num_rows()) throw InputError("multiply_and_reduce: grouping/matrix mismatch");
    index_t n = grouping.num_states();
    std::vector<V> result(n, ValueTraits<V>::zero());
    std::vector<index_t> choices(n, 0);
    for (index_t s = 0; s < n; ++s) {
        V best = ValueTraits<V>::zero();
        index_t best_choice = 0;
        for (index_t row = grouping.group_begin(s); row < grouping.group_end(s); ++row) {
            V sum = ValueTraits<V>::zero();
            for (index_t e = matrix.row_begin(row); e < matrix.row_end(row); ++e)
                sum += matrix.value(e) * x[matrix.col(e)];
            if (row == grouping.group_begin(s) || (dir == OptimizationDirection::Max ? sum > best : sum < best)) {
                best = sum;
                best_choice = row - grouping.group_begin(s);
            }
        }
        result[s] = best;
        choices[s] = best_choice;
    }
    return {std::move(result), std::move(choices)};
}

/// Result of restricting a matrix to a subset of states/rows.
template <typename V>
struct Submatrix {
    SparseMatrix<V> matrix;
    RowGrouping grouping;
    std::vector<index_t> old_to_new_state;  // full length; npos for dropped states
    std::vector<index_t> new_to_old_state;
    std::vector<index_t> new_to_old_row;

    static constexpr index_t npos = static_cast<index_t>(-1);
};

/// Restricts to kept states (and optionally kept rows; only whole rows are
/// ever dropped). Columns outside the kept states are dropped; entries are
/// never renormalized. Empty keep set gives a 0 x 0 matrix.
template <typename V>
Submatrix<V> submatrix(SparseMatrix<V> const& matrix, RowGrouping const& grouping, Bitset const& keep_states,
                       Bitset const* keep_rows = nullptr) {
    index_t n = grouping.num_states();
    if (keep_states.size() != n) throw InputError("submatrix: keep_states size mismatch");
    if (keep_rows && keep_rows->size() != matrix.num_rows()) throw InputError("submatrix: keep_rows size mismatch");

    Submatrix<V> result;
    result.old_to_new_state.assign(n, Submatrix<V>::npos);
    for (index_t s = 0; s < n; ++s) {
        if (!keep_states.get(s)) continue;
        result.old_to_new_state[s] = static_cast<index_t>(result.new_to_old_state.size());
        result.new_to_old_state.push_back(s);
    }
    index_t new_n = static_cast<index_t>(result.new_to_old_state.size());

    result.grouping.group_offsets.resize(new_n + 1);
    result.grouping.group_offsets[0] = 0;
    std::vector<index_t> offsets;
    std::vector<index_t> cols;
    std::vector<V> values;
    offsets.push_back(0);
    for (index_t new_s = 0; new_s < new_n; ++new_s) {
        index_t old_s = result.new_to_old_state[new_s];
        for (index_t row = grouping.group_begin(old_s); row < grouping.group_end(old_s); ++row) {
            if (keep_rows && !keep_rows->get(row)) continue;
            result.new_to_old_row.push_back(row);
            for (index_t e = matrix.row_begin(row); e < matrix.row_end(row); ++e) {
                index_t new_c = result.old_to_new_state[matrix.col(e)];
                if (new_c == Submatrix<V>::npos) continue;
                cols.push_back(new_c);
                values.push_back(matrix.value(e));
            }
            offsets.push_back(static_cast<index_t>(cols.size()));
        }
        result.grouping.group_offsets[new_s + 1] = static_cast<index_t>(offsets.size()) - 1;
    }
    index_t new_rows = static_cast<index_t>(offsets.size()) - 1;
    result.matrix =
        SparseMatrix<V>(new_rows, new_n, std::move(offsets), std::move(cols), std::move(values));
    return result;
}

/// Transposes the matrix (used by backward-reachability and steady-state
/// computations). Values carried along unchanged.
template <typename V>
SparseMatrix<V> transpose(SparseMatrix<V> const& matrix) {
    MatrixBuilder<V> builder(matrix.num_cols(), matrix.num_rows());
    for (index_t r = 0; r < matrix.num_rows(); ++r)
        for (index_t e = matrix.row_begin(r); e < matrix.row_end(r); ++e)
            builder.add(matrix.col(e), r, matrix.value(e));
    return builder.build();
}

}  // namespace squall
