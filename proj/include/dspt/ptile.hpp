#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "dspt/geom.hpp"
#include "dspt/range_tree.hpp"
#include "dspt/synopsis.hpp"

namespace dspt {

/// Percentile predicate: fraction of a dataset inside `region` must fall in
/// [theta_lo, theta_hi]. theta_hi == 1 makes it a threshold predicate.
/// Interval endpoints are interpreted at 1e-12 granularity everywhere (index
/// and oracle alike).
struct ptile_predicate {
  rect region;
  double theta_lo = 0.0;
  double theta_hi = 1.0;
};

/// AND/OR tree over percentile predicates (no negation).
struct ptile_expression {
  enum class op { leaf, conj, disj };

  op kind = op::leaf;
  ptile_predicate pred;  // leaf payload
  std::vector<ptile_expression> children;

  static ptile_expression leaf(ptile_predicate p);
  static ptile_expression conj(std::vector<ptile_expression> kids);
  static ptile_expression disj(std::vector<ptile_expression> kids);

  std::size_t leaf_count() const;
  void collect_leaves(std::vector<const ptile_predicate*>& out) const;
};

/// Disjunctive normal form: each inner vector is one conjunction of
/// predicates. Distributing OR over AND can repeat leaves; that is fine, the
/// shared dedup set keeps reporting duplicate-free.
std::vector<std::vector<ptile_predicate>> to_dnf(const ptile_expression& e);

/// All combinatorially different rectangles defined by a point set: per-axis
/// lower/upper bounds drawn from the axis coordinate values, lower <= upper,
/// deduplicated. Degenerate rectangles included.
std::vector<rect> enumerate_comb_rectangles(const std::vector<point_t>& coreset);

/// All ordered pairs (inner, outer) from the family with inner ⊆ outer and no
/// third member strictly between them (inner ⊂ mid ⊂⊂ outer). Quadratic
/// pairwise check with a per-axis rank prune; intended for construction-time
/// families and test oracles.
std::vector<std::pair<rect, rect>> enumerate_maximal_pairs(const std::vector<rect>& family);

/// Names of the supported index layouts.
enum class ptile_mode { threshold, range, expression };

struct ptile_build_params {
  double eps = 0.1;        // public epsilon; internally halved
  double failure = 0.05;   // per-build failure probability
  double delta = 0.0;      // global synopsis error bound
  std::uint64_t seed = 0;
  double size_constant = 0.5;            // constant in the coreset size formula
  std::size_t m = 1;                     // predicates per conjunction (expression mode)
  std::size_t per_dataset_cap = 200000;  // expression-mode lifted points per dataset
  std::optional<rect> bound;             // bounding box (range/expression modes)
  /// Lift every maximal pair instead of only the query-reachable ones
  /// (test reference; quadratically larger).
  bool full_pair_set = false;
};

struct report_entry {
  int index = 0;
  std::vector<double> measures;  // coreset estimate per leaf predicate
};

struct ptile_query_result {
  std::vector<report_entry> entries;  // enumeration order, duplicate-free
  bool weakened_contract = false;     // some synopsis declared an unknown delta
  query_stats stats;
};

/// The percentile-aware index: per-dataset coresets lifted into index space
/// and stored in weighted range trees. Immutable after build except for
/// synopsis insert/remove, which require exclusive access. Queries are
/// concurrent-safe; each owns its dedup set.
class ptile_index {
 public:
  using synopsis_ref = std::pair<int, const synopsis*>;

  static ptile_index build_threshold(const std::vector<synopsis_ref>& synopses,
                                     const ptile_build_params& params);
  static ptile_index build_range(const std::vector<synopsis_ref>& synopses,
                                 const ptile_build_params& params);
  /// m >= 2 conjunction index; also carries the m=1 tree for disjunctions.
  static ptile_index build_expression(const std::vector<synopsis_ref>& synopses,
                                      const ptile_build_params& params);

  ptile_query_result query_threshold(const rect& r, double a_theta,
                                     std::optional<double> slack = std::nullopt) const;
  ptile_query_result query_range(const rect& r, double theta_lo, double theta_hi,
                                 std::optional<double> slack = std::nullopt) const;
  ptile_query_result query_expression(const ptile_expression& e,
                                      std::optional<double> slack = std::nullopt) const;

  /// Literal delete-then-reinsert query loop. Semantically identical to the
  /// streaming queries; kept as a test reference. Temporarily mutates the
  /// tree, so it needs exclusive access.
  std::vector<int> query_threshold_reference(const rect& r, double a_theta,
                                             std::optional<double> slack = std::nullopt);
  std::vector<int> query_range_reference(const rect& r, double theta_lo, double theta_hi,
                                         std::optional<double> slack = std::nullopt);

  void insert_synopsis(int id, const synopsis& s);
  void remove_synopsis(int id);

  ptile_mode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  std::size_t arity() const { return m_; }
  double eps() const { return eps_user_; }
  double failure() const { return failure_; }
  double delta() const { return delta_; }
  std::uint64_t seed() const { return seed_; }
  double size_constant() const { return size_constant_; }
  std::size_t per_dataset_cap() const { return cap_; }
  bool full_pair_set() const { return full_pair_set_; }
  bool delta_known() const { return delta_known_; }
  const std::optional<rect>& bound() const { return bound_; }
  std::size_t dataset_count() const { return entries_.size(); }
  std::vector<int> dataset_ids() const;

  const std::vector<point_t>& coreset_of(int id) const;
  const std::vector<weighted_point>& lifted_of(int id) const;
  /// Coreset estimate of the measure of R for one dataset.
  rat64 estimate(int id, const rect& r) const;

  /// Raw parts access for persistence.
  struct entry {
    std::vector<point_t> coreset;
    std::vector<weighted_point> lifted;         // main tree points
    std::vector<weighted_point> lifted_single;  // m=1 tree points (expression mode)
  };
  const std::map<int, entry>& entries() const { return entries_; }
  static ptile_index from_parts(ptile_mode mode, std::size_t dim, const ptile_build_params& params,
                                bool delta_known, std::map<int, entry> entries);

 private:
  ptile_index(ptile_mode mode, std::size_t dim, const ptile_build_params& params, bool delta_known);

  static ptile_index build_common(const std::vector<synopsis_ref>& synopses,
                                  const ptile_build_params& params, ptile_mode mode);
  entry make_entry(int id, const synopsis& s, std::size_t repo_size) const;
  void insert_entry(int id, entry e);
  double effective_slack(std::optional<double> slack) const;
  tree_region threshold_region(const rect& r, double a_theta, double slack) const;
  tree_region range_region(const rect& r, double theta_lo, double theta_hi, double slack) const;
  tree_region expression_region(const std::vector<const ptile_predicate*>& conjunct,
                                double slack) const;
  std::vector<int> stream_tags(const range_tree& tree, const tree_region& region,
                               std::set<int>& seen, query_stats* stats) const;

  ptile_mode mode_;
  std::size_t dim_;
  std::size_t m_;
  double eps_user_;
  double failure_;
  double delta_;
  std::uint64_t seed_;
  double size_constant_;
  std::size_t cap_;
  bool full_pair_set_;
  std::optional<rect> bound_;
  bool delta_known_;
  std::map<int, entry> entries_;
  range_tree tree_;
  std::optional<range_tree> single_tree_;  // expression mode only
};

/// Exact structure for percentile queries over 1-dimensional datasets with the
/// interval theta fixed at construction. Every dataset contributes one
/// 4-dimensional tuple per point plus one sentinel; a query maps to an orthant
/// that matches at most one tuple per dataset.
class exact1d_index {
 public:
  static exact1d_index build(const std::vector<dataset>& repo, double theta_lo, double theta_hi);

  /// Exactly the qualifying dataset ids for query interval [lo, hi].
  std::vector<int> query(double lo, double hi, query_stats* stats = nullptr) const;

  double theta_lo() const { return theta_lo_; }
  double theta_hi() const { return theta_hi_; }

 private:
  exact1d_index() : tree_(4, 0) {}

  double theta_lo_ = 0.0;
  double theta_hi_ = 1.0;
  range_tree tree_;
};

}  // namespace dspt
