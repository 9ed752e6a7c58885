#pragma once

#include <limits>
#include <vector>

namespace dspt {

using point_t = std::vector<double>;

/// Axis-parallel rectangle given by its two opposite corners. Degenerate
/// (zero-volume) rectangles are first-class; `lo == hi` is a point.
struct rect {
  point_t lo;
  point_t hi;

  rect() = default;
  rect(point_t lo_, point_t hi_);

  std::size_t dim() const { return lo.size(); }
  bool contains_point(const point_t& p) const;  // closed on all faces
};

/// One-coordinate constraint of an orthant. Unconstrained sides sit at
/// +/- infinity and are closed.
struct axis_bound {
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_open = false;
  double hi = std::numeric_limits<double>::infinity();
  bool hi_open = false;

  bool contains(double x) const {
    if (lo_open ? !(x > lo) : !(x >= lo)) return false;
    if (hi_open ? !(x < hi) : !(x <= hi)) return false;
    return true;
  }
  bool constrained() const {
    return lo != -std::numeric_limits<double>::infinity() ||
           hi != std::numeric_limits<double>::infinity();
  }
};

/// Axis-parallel region with one (possibly one-sided, possibly open) bound per
/// coordinate. Query rectangles lift to orthants in the index space.
struct orthant {
  std::vector<axis_bound> bounds;

  std::size_t dim() const { return bounds.size(); }
  bool contains(const point_t& p) const;
};

/// Box that strictly contains all data and all admissible query rectangles.
struct bounding_box {
  rect box;

  bounding_box() = default;
  explicit bounding_box(rect r) : box(std::move(r)) {}

  std::size_t dim() const { return box.dim(); }
  /// Positive margin on every axis.
  bool strictly_contains_point(const point_t& p) const;
  bool strictly_contains_rect(const rect& r) const;
};

/// Closed containment: outer.lo <= inner.lo and inner.hi <= outer.hi
/// coordinatewise. All comparisons exact, no epsilon fudging.
bool rect_contains(const rect& outer, const rect& inner);

/// Strict containment: the boundary of `inner` may not touch the boundary of
/// `outer` on any coordinate.
bool rect_strictly_contains(const rect& outer, const rect& inner);

/// Corner-merge encoding of a rectangle into R^{2d}: (lo_1..lo_d, hi_1..hi_d).
point_t lift_rect(const rect& r);
rect unlift_rect(const point_t& q);

/// Corner-merge encoding of a nested pair (inner, outer) into R^{4d}:
/// (inner.lo, outer.lo, inner.hi, outer.hi) blockwise. Requires
/// rect_contains(outer, inner).
point_t lift_pair(const rect& inner, const rect& outer);
std::pair<rect, rect> unlift_pair(const point_t& q);

/// Orthant in R^{2d} whose membership over lifted rectangles is equivalent to
/// closed containment in R: first d coordinates >= R.lo (closed), last d
/// <= R.hi (closed).
orthant threshold_orthant(const rect& r);

/// Orthant in R^{4d} over lifted pairs: inner block closed against R, outer
/// block strictly outside R ( lift_pair(a,b) inside iff a ⊆ R and b strictly
/// contains R ). R must be strictly inside the bounding box.
orthant range_orthant(const rect& r, const bounding_box& box);

/// Orthogonal projections of each point onto the 2d facets of the box,
/// deduplicated. Each input point must lie inside the box.
std::vector<point_t> project_to_facets(const std::vector<point_t>& pts, const bounding_box& box);

}  // namespace dspt
