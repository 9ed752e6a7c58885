#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dspt/range_tree.hpp"
#include "dspt/synopsis.hpp"

namespace dspt {

/// Centrally symmetric set of unit directions within chord distance eps of
/// every point of the sphere. Covering is validated by random probes at build.
struct eps_net {
  std::vector<point_t> dirs;  // deterministic (sorted) order; v in net => -v in net
  double eps = 0.0;
  std::size_t dim = 0;

  std::size_t size() const { return dirs.size(); }
};

/// Native constructions for d <= 3; higher dimensions use a probe-verified
/// greedy packing and are experimental.
eps_net build_eps_net(double eps, std::size_t d, std::uint64_t seed = 0,
                      std::size_t probe_count = 100000);

/// Index of the net member closest to u (Euclidean); ties break toward the
/// lexicographically smaller direction.
std::size_t nearest_net_index(const eps_net& net, const point_t& u);
const point_t& nearest_net_vector(const eps_net& net, const point_t& u);

/// Preference predicate: the k-th largest inner product with `direction` must
/// reach `threshold` (theta = [threshold, 1], one-sided).
struct pref_predicate {
  point_t direction;
  std::size_t k = 1;
  double threshold = 0.0;
};

/// One reported dataset with its stored score estimate per predicate.
struct pref_report_entry {
  int index = 0;
  std::vector<double> scores;
};

struct pref_query_result {
  std::vector<pref_report_entry> entries;  // duplicate-free
  std::vector<int> excluded;               // datasets with fewer than k points
  bool weakened_contract = false;
  query_stats stats;
};

struct pref_build_params {
  double eps = 0.1;  // public epsilon; the net is built at eps/2
  double delta = 0.0;
  std::size_t k = 1;
  std::size_t m = 1;                  // predicates per conjunction
  std::uint64_t seed = 0;
  std::size_t max_subsets = 200000;   // guard on the number of per-subset trees
  std::size_t probe_count = 100000;   // net covering validation probes
};

/// The preference-aware index: one score per (net direction, dataset) computed
/// eagerly from the synopses, a 1-dimensional tree per direction, and (in
/// conjunction mode) an m-dimensional tree per m-subset of net directions.
class pref_index {
 public:
  using synopsis_ref = std::pair<int, const synopsis*>;

  static pref_index build(const std::vector<synopsis_ref>& synopses, const pref_build_params& params);
  /// m >= 2 conjunction variant; m == 1 degenerates to build().
  static pref_index build_conj(const std::vector<synopsis_ref>& synopses,
                               const pref_build_params& params);

  pref_query_result query(const point_t& u, double threshold,
                          std::optional<double> slack = std::nullopt) const;
  pref_query_result query_and(const std::vector<pref_predicate>& preds,
                              std::optional<double> slack = std::nullopt) const;
  pref_query_result query_or(const std::vector<pref_predicate>& preds,
                             std::optional<double> slack = std::nullopt) const;

  void insert_synopsis(int id, const synopsis& s);
  void remove_synopsis(int id);

  const eps_net& net() const { return net_; }
  double eps() const { return eps_user_; }
  double delta() const { return delta_; }
  std::size_t k() const { return k_; }
  std::size_t arity() const { return m_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t max_subsets() const { return max_subsets_; }
  bool delta_known() const { return delta_known_; }
  const std::vector<int>& excluded_ids() const { return excluded_; }
  std::vector<int> dataset_ids() const;
  /// Stored score estimate for (net direction index, dataset id).
  double gamma(std::size_t net_index, int id) const;

  /// Raw parts access for persistence: per-dataset score row over net_.dirs.
  const std::map<int, std::vector<double>>& score_rows() const { return scores_; }
  static pref_index from_parts(eps_net net, const pref_build_params& params, std::size_t dim,
                               bool delta_known, std::map<int, std::vector<double>> scores,
                               std::vector<int> excluded);

 private:
  pref_index() = default;

  void build_trees();
  void insert_row(int id, const std::vector<double>& row);
  double effective_slack(std::optional<double> slack) const;
  std::vector<int> report_single(std::size_t net_index, double cutoff, query_stats* stats) const;

  eps_net net_;
  double eps_user_ = 0.0;
  double delta_ = 0.0;
  std::size_t k_ = 1;
  std::size_t m_ = 1;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t max_subsets_ = 0;
  bool delta_known_ = true;
  std::map<int, std::vector<double>> scores_;  // id -> score per net direction
  std::vector<int> excluded_;                  // support smaller than k
  std::vector<range_tree> trees_;              // one per net direction
  std::map<std::vector<std::size_t>, range_tree> conj_trees_;  // sorted m-subset -> tree
};

}  // namespace dspt
