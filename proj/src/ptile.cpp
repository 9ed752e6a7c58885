#include "dspt/ptile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dspt/rng.hpp"

namespace dspt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-axis sorted distinct coordinate values of a point set.
std::vector<std::vector<double>> axis_values(const std::vector<point_t>& pts, std::size_t d) {
  std::vector<std::vector<double>> vals(d);
  for (const point_t& p : pts)
    for (std::size_t h = 0; h < d; ++h) vals[h].push_back(p[h]);
  for (auto& v : vals) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return vals;
}

int rank_of(const std::vector<double>& vals, double x) {
  auto it = std::lower_bound(vals.begin(), vals.end(), x);
  if (it == vals.end() || *it != x) return -1;
  return static_cast<int>(it - vals.begin());
}

/// d-dimensional prefix counts over rank-compressed points; answers closed
/// rank-box counting queries by inclusion-exclusion.
struct rank_grid {
  std::size_t d;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stride;
  std::vector<std::uint32_t> pre;

  rank_grid(const std::vector<std::vector<double>>& vals, const std::vector<point_t>& pts)
      : d(vals.size()) {
    sizes.resize(d);
    stride.assign(d, 1);
    std::size_t total = 1;
    for (std::size_t h = 0; h < d; ++h) {
      sizes[h] = vals[h].size();
      stride[h] = total;
      total *= sizes[h] + 1;
    }
    pre.assign(total, 0);
    for (const point_t& p : pts) {
      std::size_t idx = 0;
      for (std::size_t h = 0; h < d; ++h) {
        const int r = rank_of(vals[h], p[h]);
        if (r < 0) throw std::logic_error("rank_grid: point coordinate missing from value set");
        idx += static_cast<std::size_t>(r + 1) * stride[h];
      }
      pre[idx]++;
    }
    // Prefix-sum along each axis.
    for (std::size_t h = 0; h < d; ++h) {
      for (std::size_t i = 0; i < total; ++i) {
        const std::size_t coord = (i / stride[h]) % (sizes[h] + 1);
        if (coord > 0) pre[i] += pre[i - stride[h]];
      }
    }
  }

  /// Number of points with lo[h] <= rank_h <= hi[h] for all h.
  std::uint32_t count(const std::vector<int>& lo, const std::vector<int>& hi) const {
    std::uint32_t out = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      std::size_t idx = 0;
      bool neg = false;
      for (std::size_t h = 0; h < d; ++h) {
        if (mask & (std::size_t{1} << h)) {
          idx += static_cast<std::size_t>(lo[h]) * stride[h];
          neg = !neg;
        } else {
          idx += static_cast<std::size_t>(hi[h] + 1) * stride[h];
        }
      }
      out += neg ? -pre[idx] : pre[idx];
    }
    return out;
  }
};

/// Visit every rank tuple (lo, hi) with lo <= hi per axis, lexicographically.
template <typename F>
void for_each_rank_rect(const std::vector<std::size_t>& sizes, F&& fn) {
  const std::size_t d = sizes.size();
  std::vector<int> lo(d, 0), hi(d, 0);
  for (;;) {
    fn(lo, hi);
    std::size_t h = d;
    while (h > 0) {
      --h;
      if (hi[h] + 1 < static_cast<int>(sizes[h])) {
        hi[h]++;
        break;
      }
      if (lo[h] + 1 < static_cast<int>(sizes[h])) {
        lo[h]++;
        hi[h] = lo[h];
        break;
      }
      lo[h] = 0;
      hi[h] = 0;
      if (h == 0) return;
    }
  }
}

rect rect_from_ranks(const std::vector<std::vector<double>>& vals, const std::vector<int>& lo,
                     const std::vector<int>& hi) {
  const std::size_t d = vals.size();
  point_t plo(d), phi(d);
  for (std::size_t h = 0; h < d; ++h) {
    plo[h] = vals[h][static_cast<std::size_t>(lo[h])];
    phi[h] = vals[h][static_cast<std::size_t>(hi[h])];
  }
  return rect(std::move(plo), std::move(phi));
}

void check_theta(double lo, double hi) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
    throw std::invalid_argument("theta interval must satisfy 0 <= a <= b <= 1");
}

rat64 slack_endpoint(double theta, double slack, bool add) {
  const rat64 t = endpoint_from_double(theta);
  const rat64 s = endpoint_from_double(slack);
  return add ? endpoint_add(t, s) : endpoint_sub(t, s);
}

}  // namespace

ptile_expression ptile_expression::leaf(ptile_predicate p) {
  ptile_expression e;
  e.kind = op::leaf;
  e.pred = std::move(p);
  return e;
}

ptile_expression ptile_expression::conj(std::vector<ptile_expression> kids) {
  if (kids.empty()) throw std::invalid_argument("ptile_expression: empty conjunction");
  ptile_expression e;
  e.kind = op::conj;
  e.children = std::move(kids);
  return e;
}

ptile_expression ptile_expression::disj(std::vector<ptile_expression> kids) {
  if (kids.empty()) throw std::invalid_argument("ptile_expression: empty disjunction");
  ptile_expression e;
  e.kind = op::disj;
  e.children = std::move(kids);
  return e;
}

std::size_t ptile_expression::leaf_count() const {
  if (kind == op::leaf) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

void ptile_expression::collect_leaves(std::vector<const ptile_predicate*>& out) const {
  if (kind == op::leaf) {
    out.push_back(&pred);
    return;
  }
  for (const auto& c : children) c.collect_leaves(out);
}

std::vector<std::vector<ptile_predicate>> to_dnf(const ptile_expression& e) {
  switch (e.kind) {
    case ptile_expression::op::leaf:
      return {{e.pred}};
    case ptile_expression::op::disj: {
      std::vector<std::vector<ptile_predicate>> out;
      for (const auto& c : e.children) {
        auto sub = to_dnf(c);
        out.insert(out.end(), std::make_move_iterator(sub.begin()),
                   std::make_move_iterator(sub.end()));
      }
      return out;
    }
    case ptile_expression::op::conj: {
      std::vector<std::vector<ptile_predicate>> out{{}};
      for (const auto& c : e.children) {
        auto sub = to_dnf(c);
        std::vector<std::vector<ptile_predicate>> next;
        next.reserve(out.size() * sub.size());
        for (const auto& a : out)
          for (const auto& b : sub) {
            std::vector<ptile_predicate> merged = a;
            merged.insert(merged.end(), b.begin(), b.end());
            next.push_back(std::move(merged));
          }
        out = std::move(next);
      }
      return out;
    }
  }
  throw std::logic_error("to_dnf: bad expression kind");
}

std::vector<rect> enumerate_comb_rectangles(const std::vector<point_t>& coreset) {
  if (coreset.empty()) throw std::invalid_argument("enumerate_comb_rectangles: empty coreset");
  const std::size_t d = coreset.front().size();
  const auto vals = axis_values(coreset, d);
  std::vector<std::size_t> sizes(d);
  std::size_t total = 1;
  for (std::size_t h = 0; h < d; ++h) {
    sizes[h] = vals[h].size();
    total *= sizes[h] * (sizes[h] + 1) / 2;
  }
  std::vector<rect> out;
  out.reserve(total);
  for_each_rank_rect(sizes, [&](const std::vector<int>& lo, const std::vector<int>& hi) {
    out.push_back(rect_from_ranks(vals, lo, hi));
  });
  return out;
}

std::vector<std::pair<rect, rect>> enumerate_maximal_pairs(const std::vector<rect>& family) {
  std::vector<std::pair<rect, rect>> out;
  if (family.empty()) return out;
  const std::size_t d = family.front().dim();
  // Rank table over all boundary values that occur in the family.
  std::vector<std::vector<double>> vals(d);
  for (const rect& r : family)
    for (std::size_t h = 0; h < d; ++h) {
      vals[h].push_back(r.lo[h]);
      vals[h].push_back(r.hi[h]);
    }
  for (auto& v : vals) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  // A pair (inner, outer) admits an intermediate iff outer is strictly larger
  // on every axis and some axis leaves a whole value strictly between the
  // boundaries.
  for (const rect& inner : family) {
    for (const rect& outer : family) {
      if (!rect_contains(outer, inner)) continue;
      bool strict_all = true, slack_any = false;
      for (std::size_t h = 0; h < d && strict_all; ++h) {
        const int ci = rank_of(vals[h], outer.lo[h]);
        const int ai = rank_of(vals[h], inner.lo[h]);
        const int bi = rank_of(vals[h], inner.hi[h]);
        const int ei = rank_of(vals[h], outer.hi[h]);
        if (ci == ai || ei == bi) strict_all = false;
        if (ai - ci >= 2 || ei - bi >= 2) slack_any = true;
      }
      if (!(strict_all && slack_any)) out.emplace_back(inner, outer);
    }
  }
  return out;
}

ptile_index::ptile_index(ptile_mode mode, std::size_t dim, const ptile_build_params& params,
                         bool delta_known)
    : mode_(mode),
      dim_(dim),
      m_(params.m),
      eps_user_(params.eps),
      failure_(params.failure),
      delta_(params.delta),
      seed_(params.seed),
      size_constant_(params.size_constant),
      cap_(params.per_dataset_cap),
      full_pair_set_(params.full_pair_set),
      bound_(params.bound),
      delta_known_(delta_known),
      tree_(mode == ptile_mode::threshold ? 2 * dim
                                          : (mode == ptile_mode::range ? 4 * dim : 4 * params.m * dim),
            mode == ptile_mode::expression ? params.m : 1) {
  if (!(eps_user_ > 0.0 && eps_user_ < 1.0))
    throw std::invalid_argument("ptile_index: eps must be in (0,1)");
  if (!(failure_ > 0.0 && failure_ < 1.0))
    throw std::invalid_argument("ptile_index: failure must be in (0,1)");
  if (!(delta_ >= 0.0 && delta_ < 1.0))
    throw std::invalid_argument("ptile_index: delta must be in [0,1)");
  if (mode != ptile_mode::threshold && !bound_)
    throw std::invalid_argument("ptile_index: range/expression modes need a bounding box");
  if (mode == ptile_mode::expression) {
    if (m_ < 2) throw std::invalid_argument("ptile_index: expression mode needs m >= 2");
    single_tree_.emplace(4 * dim, 1);
  } else {
    m_ = 1;
  }
  if (bound_ && bound_->dim() != dim_)
    throw std::invalid_argument("ptile_index: bounding box dimension mismatch");
}

ptile_index ptile_index::build_common(const std::vector<synopsis_ref>& synopses,
                                      const ptile_build_params& params, ptile_mode mode) {
  if (synopses.empty()) throw std::invalid_argument("ptile_index: empty repository");
  const std::size_t d = synopses.front().second->dim();
  bool delta_known = true;
  for (const auto& [id, s] : synopses) {
    if (s->dim() != d) throw std::invalid_argument("ptile_index: dataset dimension mismatch");
    if (!s->rect_error().has_value()) delta_known = false;
  }
  ptile_index idx(mode, d, params, delta_known);
  for (const auto& [id, s] : synopses) idx.insert_entry(id, idx.make_entry(id, *s, synopses.size()));
  return idx;
}

ptile_index ptile_index::build_threshold(const std::vector<synopsis_ref>& synopses,
                                         const ptile_build_params& params) {
  return build_common(synopses, params, ptile_mode::threshold);
}

ptile_index ptile_index::build_range(const std::vector<synopsis_ref>& synopses,
                                     const ptile_build_params& params) {
  return build_common(synopses, params, ptile_mode::range);
}

ptile_index ptile_index::build_expression(const std::vector<synopsis_ref>& synopses,
                                          const ptile_build_params& params) {
  if (params.m == 1) return build_range(synopses, params);
  return build_common(synopses, params, ptile_mode::expression);
}

ptile_index::entry ptile_index::make_entry(int id, const synopsis& s, std::size_t repo_size) const {
  if (s.dim() != dim_) throw std::invalid_argument("ptile_index: dataset dimension mismatch");
  entry e;
  e.coreset = draw_coreset(s, eps_user_ / 2.0, failure_, repo_size,
                           derive_seed(seed_, seed_purpose::coreset, static_cast<std::uint64_t>(id)),
                           size_constant_);
  const std::int64_t den = static_cast<std::int64_t>(e.coreset.size());

  auto vals = axis_values(e.coreset, dim_);
  if (mode_ != ptile_mode::threshold) {
    const bounding_box box(*bound_);
    for (const point_t& p : e.coreset)
      if (!box.strictly_contains_point(p))
        throw std::invalid_argument("ptile_index: data outside the bounding box");
    // Facet projections only contribute the box bounds to each axis value set.
    for (std::size_t h = 0; h < dim_; ++h) {
      vals[h].insert(vals[h].begin(), bound_->lo[h]);
      vals[h].push_back(bound_->hi[h]);
    }
  }
  const rank_grid grid(vals, e.coreset);
  std::vector<std::size_t> sizes(dim_);
  for (std::size_t h = 0; h < dim_; ++h) sizes[h] = vals[h].size();

  if (mode_ == ptile_mode::threshold) {
    for_each_rank_rect(sizes, [&](const std::vector<int>& lo, const std::vector<int>& hi) {
      weighted_point p;
      p.coords = lift_rect(rect_from_ranks(vals, lo, hi));
      p.weights = {rat64(grid.count(lo, hi), den)};
      p.tag = id;
      e.lifted.push_back(std::move(p));
    });
    return e;
  }

  // Range and expression modes lift nested pairs. Only pairs whose outer
  // rectangle steps exactly one value past the inner on every axis can ever
  // match a query orthant (the outer block constraints are strict), so those
  // are the ones stored; full_pair_set lifts every maximal pair instead as a
  // cross-check reference.
  std::vector<weighted_point> pair_points;
  if (full_pair_set_) {
    std::vector<rect> family;
    for_each_rank_rect(sizes, [&](const std::vector<int>& lo, const std::vector<int>& hi) {
      family.push_back(rect_from_ranks(vals, lo, hi));
    });
    for (const auto& [inner, outer] : enumerate_maximal_pairs(family)) {
      std::vector<int> lo(dim_), hi(dim_);
      for (std::size_t h = 0; h < dim_; ++h) {
        lo[h] = rank_of(vals[h], inner.lo[h]);
        hi[h] = rank_of(vals[h], inner.hi[h]);
      }
      weighted_point p;
      p.coords = lift_pair(inner, outer);
      p.weights = {rat64(grid.count(lo, hi), den)};
      p.tag = id;
      pair_points.push_back(std::move(p));
    }
  } else {
    for_each_rank_rect(sizes, [&](const std::vector<int>& lo, const std::vector<int>& hi) {
      std::vector<int> olo(dim_), ohi(dim_);
      for (std::size_t h = 0; h < dim_; ++h) {
        if (lo[h] == 0 || hi[h] + 1 >= static_cast<int>(sizes[h])) return;
        olo[h] = lo[h] - 1;
        ohi[h] = hi[h] + 1;
      }
      weighted_point p;
      p.coords = lift_pair(rect_from_ranks(vals, lo, hi), rect_from_ranks(vals, olo, ohi));
      p.weights = {rat64(grid.count(lo, hi), den)};
      p.tag = id;
      pair_points.push_back(std::move(p));
    });
  }

  if (mode_ == ptile_mode::range) {
    e.lifted = std::move(pair_points);
    return e;
  }

  // Expression mode: every ordered m-tuple of pairs becomes one point in
  // R^{4md} carrying m weights.
  double projected = 1.0;
  for (std::size_t t = 0; t < m_; ++t) projected *= static_cast<double>(pair_points.size());
  if (projected > static_cast<double>(cap_))
    throw std::runtime_error("ptile_index: expression lift exceeds per-dataset cap");
  e.lifted_single = pair_points;
  std::vector<std::size_t> slot(m_, 0);
  if (!pair_points.empty()) {
    for (;;) {
      weighted_point p;
      p.tag = id;
      p.coords.reserve(4 * m_ * dim_);
      p.weights.reserve(m_);
      for (std::size_t t = 0; t < m_; ++t) {
        const weighted_point& src = pair_points[slot[t]];
        p.coords.insert(p.coords.end(), src.coords.begin(), src.coords.end());
        p.weights.push_back(src.weights[0]);
      }
      e.lifted.push_back(std::move(p));
      std::size_t t = m_;
      bool done = false;
      while (t > 0) {
        --t;
        if (++slot[t] < pair_points.size()) break;
        slot[t] = 0;
        if (t == 0) done = true;
      }
      if (done) break;
    }
  }
  return e;
}

void ptile_index::insert_entry(int id, entry e) {
  if (entries_.count(id)) throw std::invalid_argument("ptile_index: duplicate dataset id");
  tree_.insert_points(e.lifted);
  if (single_tree_) single_tree_->insert_points(e.lifted_single);
  entries_.emplace(id, std::move(e));
}

void ptile_index::insert_synopsis(int id, const synopsis& s) {
  if (!s.rect_error().has_value()) delta_known_ = false;
  insert_entry(id, make_entry(id, s, entries_.size() + 1));
}

void ptile_index::remove_synopsis(int id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::invalid_argument("ptile_index: unknown dataset id");
  entries_.erase(it);
  tree_.delete_tag(id);
  if (single_tree_) single_tree_->delete_tag(id);
}

std::vector<int> ptile_index::dataset_ids() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

const std::vector<point_t>& ptile_index::coreset_of(int id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::invalid_argument("ptile_index: unknown dataset id");
  return it->second.coreset;
}

const std::vector<weighted_point>& ptile_index::lifted_of(int id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::invalid_argument("ptile_index: unknown dataset id");
  return it->second.lifted;
}

rat64 ptile_index::estimate(int id, const rect& r) const {
  const std::vector<point_t>& coreset = coreset_of(id);
  std::int64_t count = 0;
  for (const point_t& p : coreset)
    if (r.contains_point(p)) ++count;
  return rat64(count, static_cast<std::int64_t>(coreset.size()));
}

double ptile_index::effective_slack(std::optional<double> slack) const {
  if (slack) return *slack;
  return eps_user_ / 2.0 + (delta_known_ ? delta_ : 0.0);
}

tree_region ptile_index::threshold_region(const rect& r, double a_theta, double slack) const {
  tree_region q;
  q.coords = threshold_orthant(r).bounds;
  q.weights = {weight_interval{slack_endpoint(a_theta, slack, false), rat64(1, 1)}};
  return q;
}

tree_region ptile_index::range_region(const rect& r, double theta_lo, double theta_hi,
                                      double slack) const {
  tree_region q;
  q.coords = range_orthant(r, bounding_box(*bound_)).bounds;
  q.weights = {weight_interval{slack_endpoint(theta_lo, slack, false),
                               slack_endpoint(theta_hi, slack, true)}};
  return q;
}

tree_region ptile_index::expression_region(const std::vector<const ptile_predicate*>& conjunct,
                                           double slack) const {
  tree_region q;
  q.coords.assign(4 * m_ * dim_, axis_bound{});
  q.weights.assign(m_, weight_interval{});
  for (std::size_t t = 0; t < conjunct.size(); ++t) {
    const orthant block = range_orthant(conjunct[t]->region, bounding_box(*bound_));
    std::copy(block.bounds.begin(), block.bounds.end(), q.coords.begin() + 4 * dim_ * t);
    q.weights[t] = weight_interval{slack_endpoint(conjunct[t]->theta_lo, slack, false),
                                   slack_endpoint(conjunct[t]->theta_hi, slack, true)};
  }
  return q;
}

std::vector<int> ptile_index::stream_tags(const range_tree& tree, const tree_region& region,
                                          std::set<int>& seen, query_stats* stats) const {
  std::vector<int> out;
  range_stream stream = tree.enumerate(region, [&seen](int tag) { return seen.count(tag) > 0; }, stats);
  while (const weighted_point* p = stream.next()) {
    seen.insert(p->tag);
    out.push_back(p->tag);
  }
  return out;
}

ptile_query_result ptile_index::query_threshold(const rect& r, double a_theta,
                                                std::optional<double> slack) const {
  if (mode_ != ptile_mode::threshold)
    throw std::invalid_argument("query_threshold: index was not built in threshold mode");
  if (r.dim() != dim_) throw std::invalid_argument("query_threshold: dimension mismatch");
  check_theta(a_theta, 1.0);
  ptile_query_result res;
  res.weakened_contract = !delta_known_;
  std::set<int> seen;
  for (int tag : stream_tags(tree_, threshold_region(r, a_theta, effective_slack(slack)), seen,
                             &res.stats))
    res.entries.push_back({tag, {estimate(tag, r).to_double()}});
  return res;
}

ptile_query_result ptile_index::query_range(const rect& r, double theta_lo, double theta_hi,
                                            std::optional<double> slack) const {
  if (mode_ == ptile_mode::threshold)
    throw std::invalid_argument("query_range: index was not built in range mode");
  if (r.dim() != dim_) throw std::invalid_argument("query_range: dimension mismatch");
  check_theta(theta_lo, theta_hi);
  const range_tree& tree = mode_ == ptile_mode::range ? tree_ : *single_tree_;
  ptile_query_result res;
  res.weakened_contract = !delta_known_;
  std::set<int> seen;
  for (int tag :
       stream_tags(tree, range_region(r, theta_lo, theta_hi, effective_slack(slack)), seen, &res.stats))
    res.entries.push_back({tag, {estimate(tag, r).to_double()}});
  return res;
}

ptile_query_result ptile_index::query_expression(const ptile_expression& e,
                                                 std::optional<double> slack) const {
  const double s = effective_slack(slack);
  ptile_query_result res;
  res.weakened_contract = !delta_known_;
  std::vector<const ptile_predicate*> leaves;
  e.collect_leaves(leaves);
  for (const ptile_predicate* p : leaves) check_theta(p->theta_lo, p->theta_hi);

  std::set<int> seen;
  std::vector<int> tags;
  for (const std::vector<ptile_predicate>& conjunct : to_dnf(e)) {
    std::vector<int> part;
    if (conjunct.size() == 1) {
      const ptile_predicate& p = conjunct.front();
      if (mode_ == ptile_mode::threshold) {
        if (p.theta_hi != 1.0)
          throw std::invalid_argument(
              "query_expression: threshold-mode index only answers [a,1] predicates");
        part = stream_tags(tree_, threshold_region(p.region, p.theta_lo, s), seen, &res.stats);
      } else {
        const range_tree& tree = mode_ == ptile_mode::range ? tree_ : *single_tree_;
        part = stream_tags(tree, range_region(p.region, p.theta_lo, p.theta_hi, s), seen, &res.stats);
      }
    } else {
      if (mode_ != ptile_mode::expression)
        throw std::invalid_argument("query_expression: conjunction needs an expression-mode index");
      if (conjunct.size() > m_)
        throw std::invalid_argument("query_expression: conjunction arity exceeds the built m");
      std::vector<const ptile_predicate*> refs;
      refs.reserve(conjunct.size());
      for (const ptile_predicate& p : conjunct) refs.push_back(&p);
      part = stream_tags(tree_, expression_region(refs, s), seen, &res.stats);
    }
    tags.insert(tags.end(), part.begin(), part.end());
  }
  for (int tag : tags) {
    report_entry entry{tag, {}};
    entry.measures.reserve(leaves.size());
    for (const ptile_predicate* p : leaves)
      entry.measures.push_back(estimate(tag, p->region).to_double());
    res.entries.push_back(std::move(entry));
  }
  return res;
}

std::vector<int> ptile_index::query_threshold_reference(const rect& r, double a_theta,
                                                        std::optional<double> slack) {
  if (mode_ != ptile_mode::threshold)
    throw std::invalid_argument("query_threshold_reference: wrong index mode");
  check_theta(a_theta, 1.0);
  const tree_region region = threshold_region(r, a_theta, effective_slack(slack));
  std::vector<int> out;
  while (auto p = tree_.report_first(region)) {
    out.push_back(p->tag);
    tree_.delete_tag(p->tag);
  }
  for (int tag : out) tree_.insert_points(entries_.at(tag).lifted);
  return out;
}

std::vector<int> ptile_index::query_range_reference(const rect& r, double theta_lo, double theta_hi,
                                                    std::optional<double> slack) {
  if (mode_ != ptile_mode::range)
    throw std::invalid_argument("query_range_reference: wrong index mode");
  check_theta(theta_lo, theta_hi);
  const tree_region region = range_region(r, theta_lo, theta_hi, effective_slack(slack));
  std::vector<int> out;
  while (auto p = tree_.report_first(region)) {
    out.push_back(p->tag);
    tree_.delete_tag(p->tag);
  }
  for (int tag : out) tree_.insert_points(entries_.at(tag).lifted);
  return out;
}

ptile_index ptile_index::from_parts(ptile_mode mode, std::size_t dim,
                                    const ptile_build_params& params, bool delta_known,
                                    std::map<int, entry> entries) {
  ptile_index idx(mode, dim, params, delta_known);
  for (auto& [id, e] : entries) idx.insert_entry(id, std::move(e));
  return idx;
}

exact1d_index exact1d_index::build(const std::vector<dataset>& repo, double theta_lo,
                                   double theta_hi) {
  check_theta(theta_lo, theta_hi);
  const rat64 a = endpoint_from_double(theta_lo);
  const rat64 b = endpoint_from_double(theta_hi);
  exact1d_index idx;
  idx.theta_lo_ = theta_lo;
  idx.theta_hi_ = theta_hi;
  std::vector<weighted_point> tuples;
  for (const dataset& ds : repo) {
    if (ds.dim() != 1) throw std::invalid_argument("exact1d_index: datasets must be 1-dimensional");
    std::vector<double> pts;
    pts.reserve(ds.size());
    for (const point_t& p : ds.points) pts.push_back(p[0]);
    std::sort(pts.begin(), pts.end());
    if (std::adjacent_find(pts.begin(), pts.end()) != pts.end())
      throw std::invalid_argument("exact1d_index: duplicate coordinates within a dataset");
    const std::int64_t n = static_cast<std::int64_t>(pts.size());
    // Count thresholds: the predicate a <= c/n <= b over integer counts c is
    // c >= ceil(a*n) and c <= floor(b*n), evaluated on the endpoint grid.
    const std::int64_t ta =
        static_cast<std::int64_t>((static_cast<__int128>(a.num) * n + a.den - 1) / a.den);
    const std::int64_t tb = static_cast<std::int64_t>(static_cast<__int128>(b.num) * n / b.den);
    auto tuple = [&](double q, double r, double p, double s) {
      weighted_point w;
      w.coords = {q, r, p, s};
      w.tag = ds.id;
      tuples.push_back(std::move(w));
    };
    // Sentinel for "no point of the dataset is <= the query's upper corner";
    // it reports the dataset exactly when an empty intersection qualifies.
    tuple(-kInf, ta == 0 ? kInf : -kInf, -kInf, pts.front());
    for (std::int64_t j = 0; j < n; ++j) {
      const double q = j >= tb ? pts[static_cast<std::size_t>(j - tb)] : -kInf;
      double r = kInf;
      if (ta > 0) r = j - ta + 1 >= 0 ? pts[static_cast<std::size_t>(j - ta + 1)] : -kInf;
      const double s = j + 1 < n ? pts[static_cast<std::size_t>(j + 1)] : kInf;
      tuple(q, r, pts[static_cast<std::size_t>(j)], s);
    }
  }
  idx.tree_ = range_tree::build(std::move(tuples), 4, 0);
  return idx;
}

std::vector<int> exact1d_index::query(double lo, double hi, query_stats* stats) const {
  if (!(lo <= hi)) throw std::invalid_argument("exact1d_index: bad query interval");
  tree_region q;
  q.coords.resize(4);
  q.coords[0].hi = lo, q.coords[0].hi_open = true;  // q < R^-
  q.coords[1].lo = lo;                              // r >= R^-
  q.coords[2].hi = hi;                              // p <= R^+
  q.coords[3].lo = hi, q.coords[3].lo_open = true;  // s > R^+
  std::vector<int> out;
  for (const weighted_point& p : tree_.report(q, stats)) out.push_back(p.tag);
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw std::logic_error("exact1d_index: duplicate report");
  return out;
}

}  // namespace dspt
