#pragma once

// Penalized change-point search over one-hot encoded categorical sequences
// with the RBF kernel segment cost
//
//   c(a, b) = (b - a) - 1/(b - a) * sum_{a <= i, j < b} exp(-gamma * |y_i - y_j|^2).
//
// c(a, b) is the within-segment scatter in the kernel feature space, so
// splitting a segment never increases the cost. PELT pruning relies on it.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "branchdrift/diagnostics.hpp"

namespace branchdrift::changepoint {

using Index = Eigen::Index;

template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n points in {0,1}^k, row i is the one-hot vector of label i.
template <typename Scalar = double>
struct EncodedSequence {
  PointMatrix<Scalar> points;
  std::vector<int> categories;  // 0-based label of each row

  Index size() const { return points.rows(); }
  Index alphabet() const { return points.cols(); }
};

/// Labels are 1-based arc labels in [1, k].
template <typename Scalar = double>
EncodedSequence<Scalar> encode(std::span<const int> labels, int k) {
  if (k < 1) throw ParameterError("alphabet size must be positive");
  EncodedSequence<Scalar> enc;
  enc.points = PointMatrix<Scalar>::Zero(static_cast<Index>(labels.size()), k);
  enc.categories.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > k)
      throw ParameterError("label " + std::to_string(labels[i]) + " outside 1.." + std::to_string(k));
    enc.points(static_cast<Index>(i), labels[i] - 1) = Scalar(1);
    enc.categories.push_back(labels[i] - 1);
  }
  return enc;
}

/// Bandwidth by the median heuristic: 1 / median of the pairwise squared
/// distances (i < j, median as the mean of the two middle values for an even
/// count). Returns 1 when the median is zero.
template <typename Derived>
typename Derived::Scalar median_gamma(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  if (n < 2) throw ParameterError("median_gamma needs at least two points");

  // Group identical rows; pairwise distances then come with multiplicities.
  std::map<std::vector<Scalar>, std::uint64_t> groups;
  for (Index i = 0; i < n; ++i) {
    std::vector<Scalar> row(static_cast<std::size_t>(points.cols()));
    for (Index j = 0; j < points.cols(); ++j) row[static_cast<std::size_t>(j)] = points(i, j);
    ++groups[row];
  }
  std::vector<std::pair<const std::vector<Scalar>*, std::uint64_t>> g;
  for (const auto& [row, count] : groups) g.emplace_back(&row, count);

  std::vector<std::pair<Scalar, std::uint64_t>> weighted;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (g[a].second > 1) weighted.emplace_back(Scalar(0), g[a].second * (g[a].second - 1) / 2);
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      Scalar d2 = 0;
      for (std::size_t j = 0; j < g[a].first->size(); ++j) {
        Scalar diff = (*g[a].first)[j] - (*g[b].first)[j];
        d2 += diff * diff;
      }
      weighted.emplace_back(d2, g[a].second * g[b].second);
    }
  }
  std::sort(weighted.begin(), weighted.end());
  const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  auto order_stat = [&](std::uint64_t rank) {  // 0-based rank in the sorted distance list
    std::uint64_t seen = 0;
    for (const auto& [d, w] : weighted) {
      seen += w;
      if (rank < seen) return d;
    }
    return weighted.back().first;
  };
  Scalar median = total % 2 == 1 ? order_stat(total / 2)
                                  : (order_stat(total / 2 - 1) + order_stat(total / 2)) / Scalar(2);
  return median > Scalar(0) ? Scalar(1) / median : Scalar(1);
}

/// Direct double loop over the segment. Reference implementation.
template <typename Derived>
typename Derived::Scalar rbf_segment_cost(const Eigen::MatrixBase<Derived>& points,
                                          typename Derived::Scalar gamma, Index a, Index b) {
  using Scalar = typename Derived::Scalar;
  if (a < 0 || b > points.rows() || b - a < 1)
    throw PreconditionError("segment [" + std::to_string(a) + ", " + std::to_string(b) + ") is empty or out of range");
  Scalar sum = 0;
  for (Index i = a; i < b; ++i)
    for (Index j = a; j < b; ++j) sum += std::exp(-gamma * (points.row(i) - points.row(j)).squaredNorm());
  const Scalar len = static_cast<Scalar>(b - a);
  return std::max(Scalar(0), len - sum / len);
}

/// Segment cost from a precomputed Gram matrix and its 2-D prefix sums.
/// O(n^2) memory, O(1) per query; works for arbitrary points.
template <typename Scalar = double>
class GramRbfCost {
 public:
  template <typename Derived>
  GramRbfCost(const Eigen::MatrixBase<Derived>& points, Scalar gamma) : n_(points.rows()) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(n_, n_);
    for (Index i = 0; i < n_; ++i)
      for (Index j = i; j < n_; ++j)
        gram(i, j) = gram(j, i) = std::exp(-gamma * (points.row(i) - points.row(j)).squaredNorm());
    prefix_ = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_ + 1, n_ + 1);
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < n_; ++j)
        prefix_(i + 1, j + 1) = gram(i, j) + prefix_(i, j + 1) + prefix_(i + 1, j) - prefix_(i, j);
  }

  Index size() const { return n_; }

  Scalar operator()(Index a, Index b) const {
    if (a < 0 || b > n_ || b - a < 1) throw PreconditionError("empty or out-of-range segment");
    const Scalar block = prefix_(b, b) - prefix_(a, b) - prefix_(b, a) + prefix_(a, a);
    const Scalar len = static_cast<Scalar>(b - a);
    return std::max(Scalar(0), len - block / len);
  }

 private:
  Index n_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> prefix_;
};

/// Segment cost for one-hot points from per-label prefix counts. Equal
/// labels have kernel value 1, distinct labels exp(-2 gamma), so with label
/// counts c_l and length L the kernel block sum is
/// S + (L^2 - S) exp(-2 gamma), S = sum_l c_l^2.
template <typename Scalar = double>
class CategoricalRbfCost {
 public:
  CategoricalRbfCost(const EncodedSequence<Scalar>& enc, Scalar gamma)
      : n_(enc.size()), off_diagonal_(std::exp(Scalar(-2) * gamma)) {
    const Index k = enc.alphabet();
    counts_ = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(n_ + 1, k);
    for (Index i = 0; i < n_; ++i) {
      counts_.row(i + 1) = counts_.row(i);
      ++counts_(i + 1, enc.categories[static_cast<std::size_t>(i)]);
    }
  }

  Index size() const { return n_; }

  Scalar operator()(Index a, Index b) const {
    if (a < 0 || b > n_ || b - a < 1) throw PreconditionError("empty or out-of-range segment");
    std::int64_t same = 0;
    for (Index l = 0; l < counts_.cols(); ++l) {
      const std::int64_t c = counts_(b, l) - counts_(a, l);
      same += c * c;
    }
    const std::int64_t len = b - a;
    const Scalar block = static_cast<Scalar>(same) + static_cast<Scalar>(len * len - same) * off_diagonal_;
    const Scalar L = static_cast<Scalar>(len);
    return std::max(Scalar(0), L - block / L);
  }

 private:
  Index n_;
  Scalar off_diagonal_;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts_;
};

struct Segmentation {
  std::vector<Index> breakpoints;  // strictly increasing, each in (0, n)
  Index n = 0;
  double total_cost = 0.0;  // segment costs + penalty * (segments - 1)
  double penalty = 0.0;

  std::size_t segment_count() const { return n == 0 ? 0 : breakpoints.size() + 1; }
  /// Segment boundaries [0, b_1, ..., n].
  std::vector<Index> bounds() const {
    std::vector<Index> out{0};
    out.insert(out.end(), breakpoints.begin(), breakpoints.end());
    if (n > 0) out.push_back(n);
    return out;
  }
};

/// Sum of segment costs plus penalty per change for an explicit breakpoint list.
template <typename Cost>
double segmentation_cost(const Cost& cost, std::span<const Index> breakpoints, double penalty) {
  double total = 0;
  Index prev = 0;
  for (Index b : breakpoints) {
    total += static_cast<double>(cost(prev, b));
    prev = b;
  }
  if (cost.size() > 0) total += static_cast<double>(cost(prev, cost.size()));
  return total + penalty * static_cast<double>(breakpoints.size());
}

namespace detail {

inline constexpr double kTieTolerance = 1e-10;
inline constexpr double kPruneMargin = 1e-9;

inline double scaled(double tol, double v) { return tol * std::max(1.0, std::abs(v)); }

// Best prefix solutions, shared by both searches so their tie-breaks agree.
struct PrefixTable {
  std::vector<double> value;  // cost with one penalty per segment
  std::vector<std::vector<Index>> breakpoints;

  explicit PrefixTable(Index n) : value(static_cast<std::size_t>(n + 1), 0.0), breakpoints(static_cast<std::size_t>(n + 1)) {}
};

// Among admissible last breakpoints `candidates` for the prefix ending at
// `end`, keeps those within tolerance of the minimum and picks the one with
// the fewest breakpoints, then the lexicographically smallest list.
template <typename Cost>
void select_best(const Cost& cost, double penalty, PrefixTable& table, Index end,
                 std::span<const Index> candidates, std::vector<double>& values) {
  values.resize(candidates.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Index t = candidates[i];
    values[i] = table.value[static_cast<std::size_t>(t)] + static_cast<double>(cost(t, end)) + penalty;
    best = std::min(best, values[i]);
  }
  const double limit = best + scaled(kTieTolerance, best);
  std::optional<Index> chosen;
  auto count = [&](Index t) { return table.breakpoints[static_cast<std::size_t>(t)].size() + (t > 0 ? 1 : 0); };
  auto lex_less = [&](Index x, Index y) {  // compares bkps(x)+[x] with bkps(y)+[y], same length
    std::vector<Index> lx = table.breakpoints[static_cast<std::size_t>(x)];
    std::vector<Index> ly = table.breakpoints[static_cast<std::size_t>(y)];
    if (x > 0) lx.push_back(x);
    if (y > 0) ly.push_back(y);
    return lx < ly;
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (values[i] > limit) continue;
    const Index t = candidates[i];
    if (!chosen || count(t) < count(*chosen) || (count(t) == count(*chosen) && lex_less(t, *chosen))) chosen = t;
  }
  const auto e = static_cast<std::size_t>(end);
  const auto c = static_cast<std::size_t>(*chosen);
  double chosen_value = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i] == *chosen) chosen_value = values[i];
  table.value[e] = chosen_value;
  table.breakpoints[e] = table.breakpoints[c];
  if (*chosen > 0) table.breakpoints[e].push_back(*chosen);
}

template <typename Cost>
Segmentation trivial(const Cost& cost, double penalty) {
  Segmentation s;
  s.n = cost.size();
  s.penalty = penalty;
  s.total_cost = s.n > 0 ? static_cast<double>(cost(0, s.n)) : 0.0;
  return s;
}

inline void check_parameters(double penalty, Index min_size) {
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw ParameterError("penalty must be finite and non-negative");
  if (min_size < 1) throw ParameterError("min_size must be at least 1");
}

}  // namespace detail

/// Exact penalized segmentation by dynamic programming without pruning,
/// O(n^2) cost evaluations. Ties: fewest breakpoints, then lexicographically
/// smallest breakpoint list. Throws ResourceError when n exceeds `max_n`.
template <typename Cost>
Segmentation exact_dp(const Cost& cost, double penalty, Index min_size = 2, Index max_n = 2000) {
  detail::check_parameters(penalty, min_size);
  const Index n = cost.size();
  if (n > max_n)
    throw ResourceError("exact search limited to " + std::to_string(max_n) + " points, got " + std::to_string(n));
  if (n < 2 * min_size) return detail::trivial(cost, penalty);

  detail::PrefixTable table(n);
  std::vector<Index> candidates;
  std::vector<double> values;
  for (Index end = min_size; end <= n; ++end) {
    candidates.assign(1, 0);
    for (Index t = min_size; t + min_size <= end; ++t) candidates.push_back(t);
    detail::select_best(cost, penalty, table, end, candidates, values);
  }
  Segmentation s;
  s.n = n;
  s.penalty = penalty;
  s.breakpoints = table.breakpoints[static_cast<std::size_t>(n)];
  s.total_cost = table.value[static_cast<std::size_t>(n)] - penalty;
  return s;
}

/// Pruned exact linear time search. A candidate t is discarded once some
/// later prefix end s satisfies F(t) + c(t, s) > F(s) (beyond a small
/// margin), and only for ends at least min_size past s, where s itself is an
/// admissible predecessor. Returns the same segmentation as exact_dp.
template <typename Cost>
Segmentation pelt(const Cost& cost, double penalty, Index min_size = 2) {
  detail::check_parameters(penalty, min_size);
  const Index n = cost.size();
  if (n < 2 * min_size) return detail::trivial(cost, penalty);

  struct Active {
    Index t;
    Index pruned_at;  // -1 while unpruned
  };
  detail::PrefixTable table(n);
  std::vector<Active> active{{0, -1}};
  std::vector<Index> candidates;
  std::vector<double> values;

  for (Index end = min_size; end <= n; ++end) {
    if (end - min_size >= min_size) active.push_back({end - min_size, -1});
    std::erase_if(active, [&](const Active& a) { return a.pruned_at >= 0 && a.pruned_at <= end - min_size; });
    candidates.clear();
    for (const Active& a : active) candidates.push_back(a.t);

    detail::select_best(cost, penalty, table, end, candidates, values);
    const double f_end = table.value[static_cast<std::size_t>(end)];
    for (std::size_t i = 0; i < active.size(); ++i) {
      // values[i] includes one penalty; the pruning test compares without it.
      if (active[i].pruned_at < 0 && values[i] - penalty > f_end + detail::scaled(detail::kPruneMargin, f_end))
        active[i].pruned_at = end;
    }
  }
  Segmentation s;
  s.n = n;
  s.penalty = penalty;
  s.breakpoints = table.breakpoints[static_cast<std::size_t>(n)];
  s.total_cost = table.value[static_cast<std::size_t>(n)] - penalty;
  return s;
}

enum class SearchMethod { pelt, exact };

template <typename Cost>
Segmentation segment(const Cost& cost, SearchMethod method, double penalty, Index min_size = 2) {
  return method == SearchMethod::pelt ? pelt(cost, penalty, min_size) : exact_dp(cost, penalty, min_size);
}

/// Breakpoints for each penalty of a sweep.
template <typename Cost>
std::vector<std::pair<double, Segmentation>> penalty_sweep(const Cost& cost, std::span<const double> penalties,
                                                            SearchMethod method = SearchMethod::pelt,
                                                            Index min_size = 2) {
  std::vector<std::pair<double, Segmentation>> out;
  for (double p : penalties) out.emplace_back(p, segment(cost, method, p, min_size));
  return out;
}

}  // namespace branchdrift::changepoint
