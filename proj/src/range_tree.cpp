#include "dspt/range_tree.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace dspt {

namespace {
constexpr std::uint32_t kLeafSize = 16;

std::size_t size_rank(std::size_t n) { return std::bit_width(n); }
}  // namespace

range_tree::range_tree(std::size_t coord_dim, std::size_t weight_dim)
    : coord_dim_(coord_dim), weight_dim_(weight_dim) {
  if (coord_dim == 0) throw std::invalid_argument("range_tree: coordinate dimension must be >= 1");
}

range_tree range_tree::build(std::vector<weighted_point> pts, std::size_t coord_dim,
                             std::size_t weight_dim) {
  range_tree t(coord_dim, weight_dim);
  if (!pts.empty()) {
    for (const weighted_point& p : pts) {
      if (p.coords.size() != coord_dim || p.weights.size() != weight_dim)
        throw std::invalid_argument("range_tree::build: mixed dimensions");
      t.live_per_tag_[p.tag]++;
    }
    t.live_total_ = pts.size();
    t.physical_total_ = pts.size();
    t.buckets_.push_back(t.build_bucket(std::move(pts)));
  }
  return t;
}

range_tree::bucket range_tree::build_bucket(std::vector<weighted_point> pts) const {
  bucket b;
  b.pts = std::move(pts);
  if (b.pts.empty()) return b;
  b.nodes.reserve(4 * b.pts.size() / kLeafSize + 4);
  // Span of the whole bucket, used to normalize split-dimension widths.
  std::vector<double> root_span(coord_dim_, 1.0);
  std::vector<double> lo(coord_dim_), hi(coord_dim_);
  for (std::size_t i = 0; i < b.pts.size(); ++i)
    for (std::size_t h = 0; h < coord_dim_; ++h) {
      const double c = b.pts[i].coords[h];
      if (i == 0 || c < lo[h]) lo[h] = c;
      if (i == 0 || c > hi[h]) hi[h] = c;
    }
  for (std::size_t h = 0; h < coord_dim_; ++h)
    root_span[h] = hi[h] > lo[h] ? hi[h] - lo[h] : 1.0;
  build_node(b, 0, static_cast<std::uint32_t>(b.pts.size()), root_span);
  return b;
}

std::int32_t range_tree::build_node(bucket& b, std::uint32_t begin, std::uint32_t end,
                                    const std::vector<double>& root_span) const {
  const std::int32_t id = static_cast<std::int32_t>(b.nodes.size());
  b.nodes.push_back(node{begin, end, -1, -1});
  const std::size_t cbase = b.cbox.size();
  b.cbox.resize(cbase + 2 * coord_dim_);
  const std::size_t wbase = b.wbox.size();
  b.wbox.resize(wbase + 2 * weight_dim_, rat64(0, 1));
  for (std::uint32_t i = begin; i < end; ++i) {
    const weighted_point& p = b.pts[i];
    for (std::size_t h = 0; h < coord_dim_; ++h) {
      if (i == begin || p.coords[h] < b.cbox[cbase + h]) b.cbox[cbase + h] = p.coords[h];
      if (i == begin || p.coords[h] > b.cbox[cbase + coord_dim_ + h])
        b.cbox[cbase + coord_dim_ + h] = p.coords[h];
    }
    for (std::size_t h = 0; h < weight_dim_; ++h) {
      if (i == begin || p.weights[h] < b.wbox[wbase + h]) b.wbox[wbase + h] = p.weights[h];
      if (i == begin || b.wbox[wbase + weight_dim_ + h] < p.weights[h])
        b.wbox[wbase + weight_dim_ + h] = p.weights[h];
    }
  }
  if (end - begin > kLeafSize) {
    // Split the relatively widest dimension; weight spreads compare on [0,1].
    std::size_t dim = 0;
    double widest = -1.0;
    for (std::size_t h = 0; h < coord_dim_; ++h) {
      const double w = (b.cbox[cbase + coord_dim_ + h] - b.cbox[cbase + h]) / root_span[h];
      if (w > widest) {
        widest = w;
        dim = h;
      }
    }
    for (std::size_t h = 0; h < weight_dim_; ++h) {
      const double w = b.wbox[wbase + weight_dim_ + h].to_double() - b.wbox[wbase + h].to_double();
      if (w > widest) {
        widest = w;
        dim = coord_dim_ + h;
      }
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    auto first = b.pts.begin() + begin, nth = b.pts.begin() + mid, last = b.pts.begin() + end;
    if (widest > 0.0) {
      if (dim < coord_dim_) {
        std::nth_element(first, nth, last, [dim](const weighted_point& a, const weighted_point& c) {
          return a.coords[dim] < c.coords[dim];
        });
      } else {
        const std::size_t w = dim - coord_dim_;
        std::nth_element(first, nth, last, [w](const weighted_point& a, const weighted_point& c) {
          return a.weights[w] < c.weights[w];
        });
      }
    }
    const std::int32_t left = build_node(b, begin, mid, root_span);
    const std::int32_t right = build_node(b, mid, end, root_span);
    b.nodes[id].left = left;
    b.nodes[id].right = right;
  }
  return id;
}

void range_tree::check_region(const tree_region& q) const {
  if (q.coords.size() != coord_dim_ || q.weights.size() != weight_dim_)
    throw std::invalid_argument("range_tree: query region dimension mismatch");
  for (const weight_interval& wi : q.weights)
    if (wi.hi < wi.lo) throw std::invalid_argument("range_tree: weight interval lower > upper");
}

bool range_tree::box_disjoint(const bucket& b, std::int32_t id, const tree_region& q) const {
  const double* cbox = b.cbox.data() + static_cast<std::size_t>(id) * 2 * coord_dim_;
  for (std::size_t h = 0; h < coord_dim_; ++h) {
    const axis_bound& ab = q.coords[h];
    const double cmin = cbox[h], cmax = cbox[coord_dim_ + h];
    if (ab.lo_open ? !(cmax > ab.lo) : !(cmax >= ab.lo)) return true;
    if (ab.hi_open ? !(cmin < ab.hi) : !(cmin <= ab.hi)) return true;
  }
  const rat64* wbox = b.wbox.data() + static_cast<std::size_t>(id) * 2 * weight_dim_;
  for (std::size_t h = 0; h < weight_dim_; ++h) {
    if (wbox[weight_dim_ + h] < q.weights[h].lo || q.weights[h].hi < wbox[h]) return true;
  }
  return false;
}

bool range_tree::box_covered(const bucket& b, std::int32_t id, const tree_region& q) const {
  const double* cbox = b.cbox.data() + static_cast<std::size_t>(id) * 2 * coord_dim_;
  for (std::size_t h = 0; h < coord_dim_; ++h) {
    const axis_bound& ab = q.coords[h];
    if (!ab.contains(cbox[h]) || !ab.contains(cbox[coord_dim_ + h])) return false;
  }
  const rat64* wbox = b.wbox.data() + static_cast<std::size_t>(id) * 2 * weight_dim_;
  for (std::size_t h = 0; h < weight_dim_; ++h) {
    if (!q.weights[h].contains(wbox[h]) || !q.weights[h].contains(wbox[weight_dim_ + h]))
      return false;
  }
  return true;
}

bool range_tree::point_in_region(const weighted_point& p, const tree_region& q) {
  for (std::size_t h = 0; h < q.coords.size(); ++h)
    if (!q.coords[h].contains(p.coords[h])) return false;
  for (std::size_t h = 0; h < q.weights.size(); ++h)
    if (!q.weights[h].contains(p.weights[h])) return false;
  return true;
}

std::vector<weighted_point> range_tree::report(const tree_region& q, query_stats* stats) const {
  check_region(q);
  std::vector<weighted_point> out;
  query_stats local;
  for (const bucket& b : buckets_) {
    if (b.pts.empty()) continue;
    local.nodes_visited++;
    if (box_disjoint(b, 0, q)) continue;
    std::vector<std::pair<std::int32_t, bool>> stack{{0, box_covered(b, 0, q)}};
    while (!stack.empty()) {
      auto [id, covered] = stack.back();
      stack.pop_back();
      const node& nd = b.nodes[static_cast<std::size_t>(id)];
      if (nd.left < 0 || covered) {
        for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
          const weighted_point& p = b.pts[i];
          if (!is_live(p)) continue;
          if (covered || point_in_region(p, q)) {
            local.points_enumerated++;
            out.push_back(p);
          }
        }
      } else {
        for (std::int32_t child : {nd.left, nd.right}) {
          local.nodes_visited++;
          if (box_disjoint(b, child, q)) continue;
          stack.push_back({child, box_covered(b, child, q)});
        }
      }
    }
  }
  if (stats) stats->merge(local);
  return out;
}

std::optional<weighted_point> range_tree::report_first(const tree_region& q,
                                                       query_stats* stats) const {
  check_region(q);
  query_stats local;
  std::optional<weighted_point> found;
  for (const bucket& b : buckets_) {
    if (found) break;
    if (b.pts.empty()) continue;
    local.nodes_visited++;
    if (box_disjoint(b, 0, q)) continue;
    std::vector<std::pair<std::int32_t, bool>> stack{{0, box_covered(b, 0, q)}};
    while (!stack.empty() && !found) {
      auto [id, covered] = stack.back();
      stack.pop_back();
      const node& nd = b.nodes[static_cast<std::size_t>(id)];
      if (nd.left < 0 || covered) {
        for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
          const weighted_point& p = b.pts[i];
          if (!is_live(p)) continue;
          if (covered || point_in_region(p, q)) {
            local.points_enumerated++;
            found = p;
            break;
          }
        }
      } else {
        for (std::int32_t child : {nd.left, nd.right}) {
          local.nodes_visited++;
          if (box_disjoint(b, child, q)) continue;
          stack.push_back({child, box_covered(b, child, q)});
        }
      }
    }
  }
  if (stats) stats->merge(local);
  return found;
}

range_stream range_tree::enumerate(const tree_region& q, std::function<bool(int)> skip,
                                   query_stats* stats) const {
  check_region(q);
  return range_stream(*this, q, std::move(skip), stats);
}

void range_tree::insert_points(std::vector<weighted_point> pts) {
  if (pts.empty()) return;
  bool needs_purge = false;
  for (const weighted_point& p : pts) {
    if (p.coords.size() != coord_dim_ || p.weights.size() != weight_dim_)
      throw std::invalid_argument("range_tree::insert_points: dimension mismatch");
    if (dead_tags_.count(p.tag)) needs_purge = true;
  }
  // A tombstoned tag is being re-introduced; flush the tombstones first so the
  // old points do not come back to life.
  if (needs_purge) purge();
  for (const weighted_point& p : pts) live_per_tag_[p.tag]++;
  live_total_ += pts.size();
  physical_total_ += pts.size();
  buckets_.push_back(build_bucket(std::move(pts)));
  merge_equal_rank_buckets();
}

void range_tree::merge_equal_rank_buckets() {
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i + 1 < buckets_.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < buckets_.size() && !merged; ++j) {
        if (size_rank(buckets_[i].pts.size()) != size_rank(buckets_[j].pts.size())) continue;
        std::vector<weighted_point> all = std::move(buckets_[i].pts);
        all.insert(all.end(), std::make_move_iterator(buckets_[j].pts.begin()),
                   std::make_move_iterator(buckets_[j].pts.end()));
        buckets_.erase(buckets_.begin() + static_cast<std::ptrdiff_t>(j));
        buckets_.erase(buckets_.begin() + static_cast<std::ptrdiff_t>(i));
        buckets_.push_back(build_bucket(std::move(all)));
        merged = true;
      }
    }
  }
}

void range_tree::delete_tag(int tag) {
  auto it = live_per_tag_.find(tag);
  if (it == live_per_tag_.end() || it->second == 0) return;  // unknown tag: no-op
  dead_tags_.insert(tag);
  live_total_ -= it->second;
  live_per_tag_.erase(it);
  if (physical_total_ > 0 && physical_total_ - live_total_ > physical_total_ / 2) purge();
}

void range_tree::purge() {
  std::vector<weighted_point> live = live_points();
  buckets_.clear();
  dead_tags_.clear();
  physical_total_ = live.size();
  live_total_ = live.size();
  if (!live.empty()) buckets_.push_back(build_bucket(std::move(live)));
}

std::vector<weighted_point> range_tree::live_points() const {
  std::vector<weighted_point> out;
  out.reserve(live_total_);
  for (const bucket& b : buckets_)
    for (const weighted_point& p : b.pts)
      if (is_live(p)) out.push_back(p);
  return out;
}

range_stream::range_stream(const range_tree& t, tree_region q, std::function<bool(int)> skip,
                           query_stats* stats)
    : tree_(&t), region_(std::move(q)), skip_(std::move(skip)), stats_(stats) {
  stack_.reserve(64);
  for (const range_tree::bucket& b : tree_->buckets_) {
    if (b.pts.empty()) continue;
    if (stats_) stats_->nodes_visited++;
    if (tree_->box_disjoint(b, 0, region_)) continue;
    stack_.push_back({&b, 0, tree_->box_covered(b, 0, region_)});
  }
}

const weighted_point* range_stream::next() {
  for (;;) {
    while (scan_bucket_ && scan_pos_ < scan_end_) {
      const weighted_point& p = scan_bucket_->pts[scan_pos_++];
      if (!tree_->is_live(p)) continue;
      if (!scan_covered_ && !range_tree::point_in_region(p, region_)) continue;
      if (stats_) stats_->points_enumerated++;
      if (skip_ && skip_(p.tag)) continue;
      return &scan_bucket_->pts[scan_pos_ - 1];
    }
    scan_bucket_ = nullptr;
    if (stack_.empty()) return nullptr;
    frame f = stack_.back();
    stack_.pop_back();
    const range_tree::node& nd = f.b->nodes[static_cast<std::size_t>(f.node)];
    if (nd.left < 0 || f.covered) {
      scan_bucket_ = f.b;
      scan_pos_ = nd.begin;
      scan_end_ = nd.end;
      scan_covered_ = f.covered;
    } else {
      for (std::int32_t child : {nd.right, nd.left}) {
        if (stats_) stats_->nodes_visited++;
        if (tree_->box_disjoint(*f.b, child, region_)) continue;
        stack_.push_back({f.b, child, tree_->box_covered(*f.b, child, region_)});
      }
    }
  }
}

}  // namespace dspt
