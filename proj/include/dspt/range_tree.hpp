#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dspt/geom.hpp"
#include "dspt/rational.hpp"

namespace dspt {

/// A point in index space: real coordinates, zero or more exact rational
/// weights (the conjunction index folds m weight axes in), and the dataset
/// index it was generated from.
struct weighted_point {
  point_t coords;
  std::vector<rat64> weights;
  int tag = 0;
};

/// Closed weight interval. Endpoints are exact rationals; stored weights are
/// compared against them by cross multiplication, never through doubles.
struct weight_interval {
  rat64 lo{0, 1};
  rat64 hi{1, 1};

  bool contains(const rat64& w) const { return lo <= w && w <= hi; }
};

/// Coordinate orthant plus per-axis weight intervals; the (R, I) pair of a
/// weighted range-reporting query.
struct tree_region {
  std::vector<axis_bound> coords;
  std::vector<weight_interval> weights;
};

/// Per-query cost counters, filled when a caller passes a stats sink.
struct query_stats {
  std::size_t nodes_visited = 0;
  std::size_t points_enumerated = 0;

  void merge(const query_stats& o) {
    nodes_visited += o.nodes_visited;
    points_enumerated += o.points_enumerated;
  }
};

class range_stream;

/// Multi-dimensional orthogonal range reporting over weighted, tagged points.
///
/// The structure is a collection of static balanced trees managed with the
/// logarithmic method: inserts go into a fresh bucket and equal-rank buckets
/// merge, deletes tombstone a tag globally and trigger a physical purge once
/// tombstoned points outnumber live ones. Queries on a fixed state are safe
/// concurrently; insert/delete require exclusive access.
class range_tree {
 public:
  range_tree(std::size_t coord_dim, std::size_t weight_dim);

  static range_tree build(std::vector<weighted_point> pts, std::size_t coord_dim,
                          std::size_t weight_dim);

  std::size_t coord_dim() const { return coord_dim_; }
  std::size_t weight_dim() const { return weight_dim_; }
  /// Live (non-tombstoned) point count.
  std::size_t size() const { return live_total_; }

  /// All live points inside the region. No duplicates, order unspecified.
  std::vector<weighted_point> report(const tree_region& q, query_stats* stats = nullptr) const;

  /// One arbitrary live point inside the region, or nothing. Short-circuits
  /// without materializing the full result.
  std::optional<weighted_point> report_first(const tree_region& q, query_stats* stats = nullptr) const;

  /// Lazy stream over the live points inside the region. `skip` is evaluated
  /// at the moment a point is reached, so the consumer may grow its skip set
  /// between pulls; each qualifying point is produced at most once.
  range_stream enumerate(const tree_region& q, std::function<bool(int)> skip,
                         query_stats* stats = nullptr) const;

  void insert_points(std::vector<weighted_point> pts);
  /// Tombstone every live point carrying `tag`; no-op for unknown tags.
  void delete_tag(int tag);

  /// All live points (testing / rebuild support).
  std::vector<weighted_point> live_points() const;

 private:
  friend class range_stream;

  struct node {
    std::uint32_t begin = 0, end = 0;  // point range in the bucket
    std::int32_t left = -1, right = -1;
  };

  struct bucket {
    std::vector<weighted_point> pts;
    std::vector<node> nodes;     // nodes[0] is the root when pts nonempty
    std::vector<double> cbox;    // per node: coord_dim mins then coord_dim maxs
    std::vector<rat64> wbox;     // per node: weight_dim mins then weight_dim maxs
  };

  void check_region(const tree_region& q) const;
  bucket build_bucket(std::vector<weighted_point> pts) const;
  std::int32_t build_node(bucket& b, std::uint32_t begin, std::uint32_t end,
                          const std::vector<double>& root_span) const;
  bool is_live(const weighted_point& p) const { return !dead_tags_.count(p.tag); }
  void purge();
  void merge_equal_rank_buckets();

  bool box_disjoint(const bucket& b, std::int32_t id, const tree_region& q) const;
  bool box_covered(const bucket& b, std::int32_t id, const tree_region& q) const;
  static bool point_in_region(const weighted_point& p, const tree_region& q);

  std::size_t coord_dim_;
  std::size_t weight_dim_;
  std::vector<bucket> buckets_;
  std::unordered_set<int> dead_tags_;
  std::unordered_map<int, std::size_t> live_per_tag_;
  std::size_t live_total_ = 0;
  std::size_t physical_total_ = 0;
};

/// Pull-based cursor over a range query; see range_tree::enumerate. Holds a
/// read claim on the tree for its lifetime: the tree must not be mutated while
/// a stream is open.
class range_stream {
 public:
  /// Next qualifying point, or nullptr when exhausted. The returned pointer is
  /// valid until the next call.
  const weighted_point* next();

 private:
  friend class range_tree;
  struct frame {
    const range_tree::bucket* b;
    std::int32_t node;
    bool covered;
  };

  range_stream(const range_tree& t, tree_region q, std::function<bool(int)> skip, query_stats* stats);

  const range_tree* tree_;
  tree_region region_;
  std::function<bool(int)> skip_;
  query_stats* stats_;
  std::vector<frame> stack_;
  const range_tree::bucket* scan_bucket_ = nullptr;
  std::uint32_t scan_pos_ = 0, scan_end_ = 0;
  bool scan_covered_ = false;
};

}  // namespace dspt
