#include "tiltperm/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string_view>

#include "tiltperm/errors.hpp"

namespace tiltperm {

BlockDesign make_design(const Matrix& raw) {
  if (raw.rows() < 2) throw ValidationError("design needs at least 2 blocks (rows)");
  if (raw.cols() < 2) throw ValidationError("design needs at least 2 treatments (columns)");
  if (!raw.allFinite()) throw ValidationError("design contains non-finite entries");
  Matrix x = raw;
  x.colwise() -= raw.rowwise().mean();
  return BlockDesign(std::move(x));
}

int TieReport::total() const {
  return std::accumulate(duplicates_per_row.begin(), duplicates_per_row.end(), 0);
}

SortedDesign SortedDesign::from_sorted_rows(const Matrix& sorted_rows) {
  if (sorted_rows.rows() < 1 || sorted_rows.cols() < 2) {
    throw ContractViolation("SortedDesign: need >= 1 block and >= 2 treatments");
  }
  SortedDesign s;
  s.a_ = sorted_rows;
  s.a_.colwise() -= sorted_rows.rowwise().mean();
  s.ties_.duplicates_per_row.assign(static_cast<std::size_t>(s.a_.rows()), 0);
  for (Eigen::Index i = 0; i < s.a_.rows(); ++i) {
    for (Eigen::Index j = 1; j < s.a_.cols(); ++j) {
      if (sorted_rows(i, j) < sorted_rows(i, j - 1)) {
        throw ContractViolation("SortedDesign: rows must be ascending");
      }
      if (sorted_rows(i, j) == sorted_rows(i, j - 1)) ++s.ties_.duplicates_per_row[i];
    }
  }
  s.col_means_ = s.a_.colwise().mean().transpose();
  // Centering can leave ascending neighbours out of order by one ulp.
  std::sort(s.col_means_.begin(), s.col_means_.end());
  s.total_ss_ = s.a_.squaredNorm();
  s.scale_ = s.col_means_.cwiseAbs().maxCoeff();
  return s;
}

SortedDesign sort_design(const BlockDesign& d) {
  Matrix sorted = d.values();
  for (Eigen::Index i = 0; i < sorted.rows(); ++i) {
    auto row = sorted.row(i);
    std::stable_sort(row.begin(), row.end());
  }
  return SortedDesign::from_sorted_rows(sorted);
}

Vector reduced_means(const Matrix& centered) {
  const Eigen::Index k = centered.cols();
  return centered.colwise().mean().head(k - 1).transpose();
}

Vector reduced_means(const BlockDesign& d) { return reduced_means(d.values()); }

PermutationSet enumerate_pi(int k) {
  if (k < 1) throw ValidationError("enumerate_pi: k must be >= 1");
  if (k > kMaxTreatments) {
    throw CapacityError("enumerate_pi: k = " + std::to_string(k) + " exceeds the limit of " +
                        std::to_string(kMaxTreatments) + " treatments (k! terms per block)");
  }
  PermutationSet set;
  set.k_ = k;
  std::vector<std::uint8_t> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), std::uint8_t{0});
  do {
    set.data_.insert(set.data_.end(), perm.begin(), perm.end());
  } while (std::next_permutation(perm.begin(), perm.end()));
  set.count_ = set.data_.size() / static_cast<std::size_t>(k);
  return set;
}

const PermutationSet& cached_permutations(int k) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<PermutationSet>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[k];
  if (!slot) slot = std::make_unique<PermutationSet>(enumerate_pi(k));
  return *slot;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_number(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  const auto result = std::from_chars(field.data(), end, out);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

}  // namespace

BlockDesign read_design_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  long width = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    const auto fields = split_fields(content);
    std::vector<double> values(fields.size());
    long bad_column = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_number(fields[j], values[j])) {
        bad_column = static_cast<long>(j) + 1;
        break;
      }
    }
    if (bad_column != 0) {
      if (first_content_line) {
        // A non-numeric first line is the optional header.
        first_content_line = false;
        width = static_cast<long>(fields.size());
        continue;
      }
      throw ParseError("row " + std::to_string(line_no) + ", column " +
                           std::to_string(bad_column) + ": '" +
                           std::string(fields[static_cast<std::size_t>(bad_column - 1)]) +
                           "' is not a finite decimal number",
                       line_no, bad_column);
    }
    first_content_line = false;
    if (width >= 0 && static_cast<long>(values.size()) != width) {
      throw ParseError("row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                           " columns, found " + std::to_string(values.size()),
                       line_no, 0);
    }
    width = static_cast<long>(values.size());
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("no data rows found", line_no, 0);
  Matrix raw(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (long j = 0; j < width; ++j) raw(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return make_design(raw);
}

BlockDesign read_design_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open design file '" + path + "'");
  return read_design_csv(in);
}

}  // namespace tiltperm
