#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tiltperm/numerics.hpp"

namespace tiltperm {

/// Observed b x k complete block design, rows centered to mean zero.
/// Column order is the treatment order of the input.
class BlockDesign {
 public:
  Eigen::Index blocks() const noexcept { return x_.rows(); }
  Eigen::Index treatments() const noexcept { return x_.cols(); }
  const Matrix& values() const noexcept { return x_; }

 private:
  friend BlockDesign make_design(const Matrix& raw);
  explicit BlockDesign(Matrix x) : x_(std::move(x)) {}
  Matrix x_;
};

/// Validates (b >= 2, k >= 2, finite entries) and subtracts each row's mean.
BlockDesign make_design(const Matrix& raw);

/// Per-row count of entries equal to their left neighbour after sorting.
struct TieReport {
  std::vector<int> duplicates_per_row;
  int total() const;
};

/// The conditioning object of the permutation test: every row sorted
/// ascending, the column means of the sorted matrix, and the total sum of
/// squares. Also used for the centered sub-blocks of the boundary
/// decomposition, which is why it may be built with a single block.
class SortedDesign {
 public:
  /// `sorted_rows` must have ascending rows; they are centered here.
  static SortedDesign from_sorted_rows(const Matrix& sorted_rows);

  Eigen::Index blocks() const noexcept { return a_.rows(); }
  Eigen::Index treatments() const noexcept { return a_.cols(); }
  const Matrix& a() const noexcept { return a_; }
  const Vector& col_means() const noexcept { return col_means_; }
  double total_ss() const noexcept { return total_ss_; }
  const TieReport& ties() const noexcept { return ties_; }

  /// max_j |col_means_j|; zero only for constant data.
  double scale() const noexcept { return scale_; }

 private:
  SortedDesign() = default;
  Matrix a_;
  Vector col_means_;
  double total_ss_ = 0.0;
  double scale_ = 0.0;
  TieReport ties_;
};

SortedDesign sort_design(const BlockDesign& d);

/// Treatment means of the first k-1 columns; the k-th is minus their sum.
Vector reduced_means(const BlockDesign& d);

/// Column means of an arbitrary row-centered matrix, first k-1 entries.
Vector reduced_means(const Matrix& centered);

constexpr int kMaxTreatments = 10;

/// All k! permutations of {0..k-1} in lexicographic order. Element i's first
/// k-1 entries form the index vector pi used in the cumulant generating
/// function; the last entry completes it to a full permutation.
class PermutationSet {
 public:
  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return count_; }
  /// Full permutation (length k) of element i.
  std::span<const std::uint8_t> full(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  /// The index vector (first k-1 entries) of element i.
  std::span<const std::uint8_t> element(std::size_t i) const {
    return full(i).first(static_cast<std::size_t>(k_ - 1));
  }

 private:
  friend PermutationSet enumerate_pi(int k);
  int k_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Throws CapacityError for k > 10, ValidationError for k < 1.
PermutationSet enumerate_pi(int k);

/// Process-wide cache of enumerate_pi results; thread-safe.
const PermutationSet& cached_permutations(int k);

/// Reads a design in the CSV contract: one row per block, k numeric columns,
/// optional header line, '.' decimal point. Throws ParseError with 1-based
/// row/column on failure.
BlockDesign read_design_csv(std::istream& in);
BlockDesign read_design_csv_file(const std::string& path);

}  // namespace tiltperm
