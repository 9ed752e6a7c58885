#include "dspt/geom.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dspt {

namespace {

void check_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

void check_finite(const point_t& p, const char* what) {
  for (double c : p)
    if (!std::isfinite(c)) throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
}

}  // namespace

rect::rect(point_t lo_, point_t hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  check_same_dim(lo.size(), hi.size(), "rect");
  if (lo.empty()) throw std::invalid_argument("rect: dimension must be >= 1");
  check_finite(lo, "rect");
  check_finite(hi, "rect");
  for (std::size_t h = 0; h < lo.size(); ++h)
    if (lo[h] > hi[h]) throw std::invalid_argument("rect: lo > hi on some axis");
}

bool rect::contains_point(const point_t& p) const {
  check_same_dim(p.size(), dim(), "rect::contains_point");
  for (std::size_t h = 0; h < dim(); ++h)
    if (p[h] < lo[h] || p[h] > hi[h]) return false;
  return true;
}

bool orthant::contains(const point_t& p) const {
  if (p.size() != bounds.size()) throw std::invalid_argument("orthant::contains: dimension mismatch");
  for (std::size_t h = 0; h < bounds.size(); ++h)
    if (!bounds[h].contains(p[h])) return false;
  return true;
}

bool bounding_box::strictly_contains_point(const point_t& p) const {
  check_same_dim(p.size(), dim(), "bounding_box");
  for (std::size_t h = 0; h < dim(); ++h)
    if (!(p[h] > box.lo[h] && p[h] < box.hi[h])) return false;
  return true;
}

bool bounding_box::strictly_contains_rect(const rect& r) const {
  return strictly_contains_point(r.lo) && strictly_contains_point(r.hi);
}

bool rect_contains(const rect& outer, const rect& inner) {
  check_same_dim(outer.dim(), inner.dim(), "rect_contains");
  for (std::size_t h = 0; h < outer.dim(); ++h)
    if (outer.lo[h] > inner.lo[h] || inner.hi[h] > outer.hi[h]) return false;
  return true;
}

bool rect_strictly_contains(const rect& outer, const rect& inner) {
  check_same_dim(outer.dim(), inner.dim(), "rect_strictly_contains");
  for (std::size_t h = 0; h < outer.dim(); ++h)
    if (!(outer.lo[h] < inner.lo[h] && inner.hi[h] < outer.hi[h])) return false;
  return true;
}

point_t lift_rect(const rect& r) {
  point_t q;
  q.reserve(2 * r.dim());
  q.insert(q.end(), r.lo.begin(), r.lo.end());
  q.insert(q.end(), r.hi.begin(), r.hi.end());
  return q;
}

rect unlift_rect(const point_t& q) {
  if (q.empty() || q.size() % 2 != 0) throw std::invalid_argument("unlift_rect: bad length");
  const std::size_t d = q.size() / 2;
  return rect(point_t(q.begin(), q.begin() + d), point_t(q.begin() + d, q.end()));
}

point_t lift_pair(const rect& inner, const rect& outer) {
  check_same_dim(inner.dim(), outer.dim(), "lift_pair");
  if (!rect_contains(outer, inner)) throw std::invalid_argument("lift_pair: containment violated");
  point_t q;
  q.reserve(4 * inner.dim());
  q.insert(q.end(), inner.lo.begin(), inner.lo.end());
  q.insert(q.end(), outer.lo.begin(), outer.lo.end());
  q.insert(q.end(), inner.hi.begin(), inner.hi.end());
  q.insert(q.end(), outer.hi.begin(), outer.hi.end());
  return q;
}

std::pair<rect, rect> unlift_pair(const point_t& q) {
  if (q.empty() || q.size() % 4 != 0) throw std::invalid_argument("unlift_pair: bad length");
  const std::size_t d = q.size() / 4;
  rect inner(point_t(q.begin(), q.begin() + d), point_t(q.begin() + 2 * d, q.begin() + 3 * d));
  rect outer(point_t(q.begin() + d, q.begin() + 2 * d), point_t(q.begin() + 3 * d, q.end()));
  return {inner, outer};
}

orthant threshold_orthant(const rect& r) {
  const std::size_t d = r.dim();
  orthant o;
  o.bounds.resize(2 * d);
  for (std::size_t h = 0; h < d; ++h) {
    o.bounds[h].lo = r.lo[h];          // rho.lo >= R.lo, closed
    o.bounds[d + h].hi = r.hi[h];      // rho.hi <= R.hi, closed
  }
  return o;
}

orthant range_orthant(const rect& r, const bounding_box& box) {
  check_same_dim(r.dim(), box.dim(), "range_orthant");
  if (!box.strictly_contains_rect(r))
    throw std::invalid_argument("range_orthant: query rectangle not strictly inside bounding box");
  const std::size_t d = r.dim();
  orthant o;
  o.bounds.resize(4 * d);
  for (std::size_t h = 0; h < d; ++h) {
    o.bounds[h].lo = r.lo[h];                                 // rho.lo >= R.lo, closed
    o.bounds[d + h].hi = r.lo[h], o.bounds[d + h].hi_open = true;   // hat.lo < R.lo, open
    o.bounds[2 * d + h].hi = r.hi[h];                         // rho.hi <= R.hi, closed
    o.bounds[3 * d + h].lo = r.hi[h], o.bounds[3 * d + h].lo_open = true;  // hat.hi > R.hi, open
  }
  return o;
}

std::vector<point_t> project_to_facets(const std::vector<point_t>& pts, const bounding_box& box) {
  const std::size_t d = box.dim();
  std::set<point_t> out;
  for (const point_t& p : pts) {
    check_same_dim(p.size(), d, "project_to_facets");
    if (!box.box.contains_point(p))
      throw std::invalid_argument("project_to_facets: point outside bounding box");
    for (std::size_t h = 0; h < d; ++h) {
      point_t lo_proj = p, hi_proj = p;
      lo_proj[h] = box.box.lo[h];
      hi_proj[h] = box.box.hi[h];
      out.insert(std::move(lo_proj));
      out.insert(std::move(hi_proj));
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace dspt
