#include "dspt/pref.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "dspt/rng.hpp"

namespace dspt {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_unit(const point_t& v) {
  if (std::fabs(vector_norm(v) - 1.0) > 1e-9)
    throw std::invalid_argument("direction must be a unit vector");
}

double chord2(const point_t& a, const point_t& b) {
  double s = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    const double d = a[h] - b[h];
    s += d * d;
  }
  return s;
}

point_t negate(const point_t& v) {
  point_t out(v.size());
  for (std::size_t h = 0; h < v.size(); ++h) out[h] = -v[h];
  return out;
}

point_t random_unit(std::mt19937_64& eng, std::size_t d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  point_t v(d);
  for (;;) {
    double norm2 = 0.0;
    for (std::size_t h = 0; h < d; ++h) {
      v[h] = gauss(eng);
      norm2 += v[h] * v[h];
    }
    if (norm2 > 1e-12) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& c : v) c *= inv;
      return v;
    }
  }
}

void sort_dirs(std::vector<point_t>& dirs) {
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
}

double probe_covering(const std::vector<point_t>& dirs, std::size_t d, std::size_t probes,
                      std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < probes; ++t) {
    const point_t u = random_unit(eng, d);
    double best = std::numeric_limits<double>::infinity();
    for (const point_t& c : dirs) best = std::min(best, chord2(u, c));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace

eps_net build_eps_net(double eps, std::size_t d, std::uint64_t seed, std::size_t probe_count) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("build_eps_net: eps must be in (0,1)");
  if (d < 1) throw std::invalid_argument("build_eps_net: dimension must be >= 1");
  eps_net net;
  net.eps = eps;
  net.dim = d;

  if (d == 1) {
    net.dirs = {{-1.0}, {1.0}};
    return net;
  }

  if (d == 2) {
    const std::size_t count = 2 * static_cast<std::size_t>(std::ceil(kPi / std::asin(eps / 2.0)));
    net.dirs.reserve(count);
    for (std::size_t j = 0; j < count / 2; ++j) {
      const double angle = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(count);
      point_t v{std::cos(angle), std::sin(angle)};
      net.dirs.push_back(negate(v));
      net.dirs.push_back(std::move(v));
    }
  } else if (d == 3) {
    // Latitude/longitude grid with arc step eps/2, symmetrized by exact
    // negation.
    const double step = eps / 2.0;
    const std::size_t rings = static_cast<std::size_t>(std::ceil(kPi / step));
    std::vector<point_t> half;
    for (std::size_t i = 0; i <= rings; ++i) {
      const double polar = kPi * static_cast<double>(i) / static_cast<double>(rings);
      const double sp = std::sin(polar);
      const std::size_t ring_count =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * kPi * sp / step)));
      for (std::size_t j = 0; j < ring_count; ++j) {
        const double azim = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(ring_count);
        half.push_back({sp * std::cos(azim), sp * std::sin(azim), std::cos(polar)});
      }
    }
    for (std::size_t i = 0, n = half.size(); i < n; ++i) half.push_back(negate(half[i]));
    net.dirs = std::move(half);
  } else {
    // Experimental: greedy eps/2-packing from random candidates, then patch
    // any probe the packing missed.
    std::mt19937_64 eng(derive_seed(seed, seed_purpose::net, d));
    const double keep2 = (eps / 2.0) * (eps / 2.0);
    std::size_t stale = 0;
    while (stale < 2000) {
      const point_t cand = random_unit(eng, d);
      double best = std::numeric_limits<double>::infinity();
      for (const point_t& c : net.dirs) best = std::min(best, chord2(cand, c));
      if (best > keep2) {
        net.dirs.push_back(negate(cand));
        net.dirs.push_back(cand);
        stale = 0;
      } else {
        ++stale;
      }
    }
    std::mt19937_64 probe_eng(derive_seed(seed, seed_purpose::probe, d));
    for (std::size_t t = 0; t < probe_count; ++t) {
      const point_t u = random_unit(probe_eng, d);
      double best = std::numeric_limits<double>::infinity();
      for (const point_t& c : net.dirs) best = std::min(best, chord2(u, c));
      if (best > eps * eps) {
        net.dirs.push_back(negate(u));
        net.dirs.push_back(u);
      }
    }
  }

  sort_dirs(net.dirs);
  const double covered =
      probe_covering(net.dirs, d, probe_count, derive_seed(seed, seed_purpose::probe, 7919 + d));
  if (covered > eps) throw std::runtime_error("build_eps_net: probe validation failed");
  return net;
}

std::size_t nearest_net_index(const eps_net& net, const point_t& u) {
  check_unit(u);
  if (u.size() != net.dim) throw std::invalid_argument("nearest_net_index: dimension mismatch");
  std::size_t best = 0;
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.dirs.size(); ++i) {
    const double d2 = chord2(u, net.dirs[i]);
    if (d2 < best2 || (d2 == best2 && net.dirs[i] < net.dirs[best])) {
      best = i;
      best2 = d2;
    }
  }
  return best;
}

const point_t& nearest_net_vector(const eps_net& net, const point_t& u) {
  return net.dirs[nearest_net_index(net, u)];
}

pref_index pref_index::build(const std::vector<synopsis_ref>& synopses,
                             const pref_build_params& params) {
  if (synopses.empty()) throw std::invalid_argument("pref_index: empty repository");
  if (params.k == 0) throw std::invalid_argument("pref_index: k must be >= 1");
  if (!(params.delta >= 0.0 && params.delta < 1.0))
    throw std::invalid_argument("pref_index: delta must be in [0,1)");
  pref_index idx;
  idx.eps_user_ = params.eps;
  idx.delta_ = params.delta;
  idx.k_ = params.k;
  idx.m_ = std::max<std::size_t>(1, params.m);
  idx.seed_ = params.seed;
  idx.max_subsets_ = params.max_subsets;
  idx.dim_ = synopses.front().second->dim();
  idx.net_ = build_eps_net(params.eps / 2.0, idx.dim_, params.seed, params.probe_count);

  if (idx.m_ >= 2) {
    // C(|net|, m) per-subset trees; fail loudly instead of thrashing.
    double subsets = 1.0;
    for (std::size_t t = 0; t < idx.m_; ++t)
      subsets *= static_cast<double>(idx.net_.size() - t) / static_cast<double>(t + 1);
    if (subsets > static_cast<double>(idx.max_subsets_))
      throw std::runtime_error("pref_index: m-subset tree count exceeds cap");
  }

  for (const auto& [id, s] : synopses) {
    if (s->dim() != idx.dim_) throw std::invalid_argument("pref_index: dataset dimension mismatch");
    if (!s->score_error().has_value()) idx.delta_known_ = false;
    if (s->support_size() < idx.k_) {
      idx.excluded_.push_back(id);
      continue;
    }
    std::vector<double> row;
    row.reserve(idx.net_.size());
    for (const point_t& v : idx.net_.dirs) row.push_back(s->score(v, idx.k_));
    if (idx.scores_.count(id)) throw std::invalid_argument("pref_index: duplicate dataset id");
    idx.scores_.emplace(id, std::move(row));
  }
  std::sort(idx.excluded_.begin(), idx.excluded_.end());
  idx.build_trees();
  return idx;
}

pref_index pref_index::build_conj(const std::vector<synopsis_ref>& synopses,
                                  const pref_build_params& params) {
  return build(synopses, params);
}

void pref_index::build_trees() {
  trees_.clear();
  conj_trees_.clear();
  for (std::size_t vi = 0; vi < net_.size(); ++vi) trees_.emplace_back(1, 0);
  if (m_ >= 2) {
    std::vector<std::size_t> subset(m_);
    // Iterate all sorted m-subsets of net indices.
    for (std::size_t t = 0; t < m_; ++t) subset[t] = t;
    if (net_.size() >= m_) {
      for (;;) {
        conj_trees_.emplace(subset, range_tree(m_, 0));
        std::size_t t = m_;
        bool done = true;
        while (t > 0) {
          --t;
          if (subset[t] + (m_ - t) < net_.size()) {
            subset[t]++;
            for (std::size_t r = t + 1; r < m_; ++r) subset[r] = subset[r - 1] + 1;
            done = false;
            break;
          }
        }
        if (done) break;
      }
    }
  }
  for (const auto& [id, row] : scores_) insert_row(id, row);
}

void pref_index::insert_row(int id, const std::vector<double>& row) {
  for (std::size_t vi = 0; vi < net_.size(); ++vi) {
    weighted_point p;
    p.coords = {row[vi]};
    p.tag = id;
    trees_[vi].insert_points({std::move(p)});
  }
  for (auto& [subset, tree] : conj_trees_) {
    weighted_point p;
    p.coords.reserve(m_);
    for (std::size_t vi : subset) p.coords.push_back(row[vi]);
    p.tag = id;
    tree.insert_points({std::move(p)});
  }
}

void pref_index::insert_synopsis(int id, const synopsis& s) {
  if (s.dim() != dim_) throw std::invalid_argument("pref_index: dataset dimension mismatch");
  if (scores_.count(id) || std::binary_search(excluded_.begin(), excluded_.end(), id))
    throw std::invalid_argument("pref_index: duplicate dataset id");
  if (!s.score_error().has_value()) delta_known_ = false;
  if (s.support_size() < k_) {
    excluded_.insert(std::upper_bound(excluded_.begin(), excluded_.end(), id), id);
    return;
  }
  std::vector<double> row;
  row.reserve(net_.size());
  for (const point_t& v : net_.dirs) row.push_back(s.score(v, k_));
  insert_row(id, row);
  scores_.emplace(id, std::move(row));
}

void pref_index::remove_synopsis(int id) {
  auto ex = std::lower_bound(excluded_.begin(), excluded_.end(), id);
  if (ex != excluded_.end() && *ex == id) {
    excluded_.erase(ex);
    return;
  }
  auto it = scores_.find(id);
  if (it == scores_.end()) throw std::invalid_argument("pref_index: unknown dataset id");
  scores_.erase(it);
  for (range_tree& t : trees_) t.delete_tag(id);
  for (auto& [subset, tree] : conj_trees_) tree.delete_tag(id);
}

std::vector<int> pref_index::dataset_ids() const {
  std::vector<int> out;
  out.reserve(scores_.size());
  for (const auto& [id, row] : scores_) out.push_back(id);
  return out;
}

double pref_index::gamma(std::size_t net_index, int id) const {
  auto it = scores_.find(id);
  if (it == scores_.end()) throw std::invalid_argument("pref_index: unknown dataset id");
  return it->second.at(net_index);
}

double pref_index::effective_slack(std::optional<double> slack) const {
  if (slack) return *slack;
  return eps_user_ / 2.0 + (delta_known_ ? delta_ : 0.0);
}

std::vector<int> pref_index::report_single(std::size_t net_index, double cutoff,
                                           query_stats* stats) const {
  tree_region q;
  q.coords.resize(1);
  q.coords[0].lo = cutoff;
  std::vector<int> out;
  for (const weighted_point& p : trees_[net_index].report(q, stats)) out.push_back(p.tag);
  std::sort(out.begin(), out.end());
  return out;
}

pref_query_result pref_index::query(const point_t& u, double threshold,
                                    std::optional<double> slack) const {
  check_unit(u);
  if (u.size() != dim_) throw std::invalid_argument("pref_index: dimension mismatch");
  pref_query_result res;
  res.excluded = excluded_;
  res.weakened_contract = !delta_known_;
  const std::size_t vi = nearest_net_index(net_, u);
  for (int id : report_single(vi, threshold - effective_slack(slack), &res.stats))
    res.entries.push_back({id, {gamma(vi, id)}});
  return res;
}

pref_query_result pref_index::query_and(const std::vector<pref_predicate>& preds,
                                        std::optional<double> slack) const {
  if (preds.empty()) throw std::invalid_argument("pref_index: empty conjunction");
  if (preds.size() == 1) return query(preds.front().direction, preds.front().threshold, slack);
  if (preds.size() > m_)
    throw std::invalid_argument("pref_index: conjunction arity exceeds the built m");
  pref_query_result res;
  res.excluded = excluded_;
  res.weakened_contract = !delta_known_;
  const double s = effective_slack(slack);

  std::vector<std::size_t> nearest(preds.size());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    check_unit(preds[t].direction);
    if (preds[t].k != k_) throw std::invalid_argument("pref_index: predicate k mismatch");
    nearest[t] = nearest_net_index(net_, preds[t].direction);
  }

  std::vector<std::size_t> sorted = nearest;
  std::sort(sorted.begin(), sorted.end());
  const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();

  std::vector<int> ids;
  if (distinct && preds.size() == m_) {
    // Pad missing subset positions never occurs here: arity == m.
    auto it = conj_trees_.find(sorted);
    if (it == conj_trees_.end()) throw std::logic_error("pref_index: missing subset tree");
    tree_region q;
    q.coords.resize(m_);
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const std::size_t pos =
          static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), nearest[t]) -
                                   sorted.begin());
      q.coords[pos].lo = preds[t].threshold - s;
    }
    for (const weighted_point& p : it->second.report(q, &res.stats)) ids.push_back(p.tag);
    std::sort(ids.begin(), ids.end());
  } else {
    // Colliding nearest vectors (or arity below m): intersect the
    // single-predicate answers; both contract directions survive.
    for (std::size_t t = 0; t < preds.size(); ++t) {
      std::vector<int> part = report_single(nearest[t], preds[t].threshold - s, &res.stats);
      if (t == 0) {
        ids = std::move(part);
      } else {
        std::vector<int> merged;
        std::set_intersection(ids.begin(), ids.end(), part.begin(), part.end(),
                              std::back_inserter(merged));
        ids = std::move(merged);
      }
    }
  }
  for (int id : ids) {
    pref_report_entry entry{id, {}};
    for (std::size_t t = 0; t < preds.size(); ++t) entry.scores.push_back(gamma(nearest[t], id));
    res.entries.push_back(std::move(entry));
  }
  return res;
}

pref_query_result pref_index::query_or(const std::vector<pref_predicate>& preds,
                                       std::optional<double> slack) const {
  if (preds.empty()) throw std::invalid_argument("pref_index: empty disjunction");
  pref_query_result res;
  res.excluded = excluded_;
  res.weakened_contract = !delta_known_;
  const double s = effective_slack(slack);
  std::set<int> seen;
  std::vector<std::size_t> nearest(preds.size());
  for (std::size_t t = 0; t < preds.size(); ++t) {
    check_unit(preds[t].direction);
    nearest[t] = nearest_net_index(net_, preds[t].direction);
  }
  for (std::size_t t = 0; t < preds.size(); ++t) {
    for (int id : report_single(nearest[t], preds[t].threshold - s, &res.stats)) {
      if (!seen.insert(id).second) continue;
      pref_report_entry entry{id, {}};
      for (std::size_t r = 0; r < preds.size(); ++r) entry.scores.push_back(gamma(nearest[r], id));
      res.entries.push_back(std::move(entry));
    }
  }
  return res;
}

pref_index pref_index::from_parts(eps_net net, const pref_build_params& params, std::size_t dim,
                                  bool delta_known, std::map<int, std::vector<double>> scores,
                                  std::vector<int> excluded) {
  pref_index idx;
  idx.net_ = std::move(net);
  idx.eps_user_ = params.eps;
  idx.delta_ = params.delta;
  idx.k_ = params.k;
  idx.m_ = std::max<std::size_t>(1, params.m);
  idx.seed_ = params.seed;
  idx.max_subsets_ = params.max_subsets;
  idx.dim_ = dim;
  idx.delta_known_ = delta_known;
  idx.scores_ = std::move(scores);
  idx.excluded_ = std::move(excluded);
  idx.build_trees();
  return idx;
}

}  // namespace dspt
