#include "dspt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "dspt/rng.hpp"

namespace dspt {

std::size_t repository::total_points() const {
  std::size_t n = 0;
  for (const dataset& d : datasets) n += d.size();
  return n;
}

const dataset& repository::by_id(int id) const {
  for (const dataset& d : datasets)
    if (d.id == id) return d;
  throw std::invalid_argument("repository: unknown dataset id");
}

rat64 eval_percentile(const dataset& p, const rect& r) {
  if (p.dim() != r.dim()) throw std::invalid_argument("eval_percentile: dimension mismatch");
  std::int64_t inside = 0;
  for (const point_t& pt : p.points)
    if (r.contains_point(pt)) ++inside;
  return rat64(inside, static_cast<std::int64_t>(p.size()));
}

double eval_topk(const dataset& p, const point_t& v, std::size_t k) {
  if (std::fabs(vector_norm(v) - 1.0) > 1e-9)
    throw std::invalid_argument("eval_topk: direction must be a unit vector");
  return kth_largest_inner_product(p.points, v, k);
}

bool eval_ptile_predicate(const dataset& p, const ptile_predicate& pred) {
  const rat64 m = eval_percentile(p, pred.region);
  return endpoint_from_double(pred.theta_lo) <= m && m <= endpoint_from_double(pred.theta_hi);
}

bool eval_pref_predicate(const dataset& p, const pref_predicate& pred) {
  if (pred.k > p.size()) return false;
  return eval_topk(p, pred.direction, pred.k) >= pred.threshold;
}

namespace {

bool eval_expression(const dataset& d, const ptile_expression& e) {
  switch (e.kind) {
    case ptile_expression::op::leaf:
      return eval_ptile_predicate(d, e.pred);
    case ptile_expression::op::conj:
      for (const auto& c : e.children)
        if (!eval_expression(d, c)) return false;
      return true;
    case ptile_expression::op::disj:
      for (const auto& c : e.children)
        if (eval_expression(d, c)) return true;
      return false;
  }
  throw std::logic_error("eval_expression: bad kind");
}

}  // namespace

std::vector<int> brute_force_query(const repository& repo, const ptile_expression& e) {
  std::vector<int> out;
  for (const dataset& d : repo.datasets)
    if (eval_expression(d, e)) out.push_back(d.id);
  std::sort(out.begin(), out.end());
  return out;
}

rect set_intersection_instance::pair_rect(std::size_t i, std::size_t j) const {
  if (i < 1 || i > sets.size() || j < 1 || j > sets.size())
    throw std::invalid_argument("pair_rect: set index out of range");
  const double m = static_cast<double>(total_size);
  const double mi = static_cast<double>(i * set_size);
  const double mi_prev = static_cast<double>((i - 1) * set_size);
  const double mj = static_cast<double>(j * set_size);
  const double mj_prev = static_cast<double>((j - 1) * set_size);
  return rect({-mi, mj_prev + 1.0 - m}, {mj, m - mi_prev - 1.0});
}

std::vector<int> set_intersection_instance::intersection(std::size_t i, std::size_t j) const {
  std::vector<int> a = sets.at(i - 1), b = sets.at(j - 1), out;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

set_intersection_instance set_intersection_from_sets(std::vector<std::vector<int>> sets) {
  if (sets.size() < 2) throw std::invalid_argument("set_intersection: need g >= 2 sets");
  const std::size_t t = sets.front().size();
  std::map<int, std::size_t> mult;
  for (const auto& s : sets) {
    if (s.size() != t) throw std::invalid_argument("set_intersection: sets must share one size");
    std::set<int> uniq(s.begin(), s.end());
    if (uniq.size() != s.size()) throw std::invalid_argument("set_intersection: repeated element in a set");
    for (int u : s) mult[u]++;
  }
  std::size_t c = mult.begin()->second;
  for (const auto& [u, cnt] : mult)
    if (cnt != c) throw std::invalid_argument("set_intersection: collection is not uniform");

  set_intersection_instance inst;
  inst.set_size = t;
  inst.multiplicity = c;
  inst.total_size = sets.size() * t;
  const double m = static_cast<double>(inst.total_size);

  std::map<int, dataset> data;
  for (const auto& [u, cnt] : mult) data[u] = dataset{u, {}};
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t k = 0; k < t; ++k) {
      const double x = static_cast<double>(k + 1 + i * t);
      dataset& d = data[sets[i][k]];
      d.points.push_back({-x, -x + m});  // on L: y = x + M
      d.points.push_back({x, x - m});    // on L': y = x - M
    }
  }
  for (auto& [u, d] : data) inst.repo.datasets.push_back(std::move(d));
  inst.sets = std::move(sets);
  return inst;
}

set_intersection_instance gen_set_intersection_instance(std::size_t g, std::size_t t,
                                                        std::uint64_t seed) {
  if (g < 2 || t < 1) throw std::invalid_argument("gen_set_intersection_instance: need g >= 2, t >= 1");
  // Pick a multiplicity c with c | g*t, c <= g, and 1.5 * 2c/t in (1, 2] so
  // the fixed threshold 1.5/t separates |P ∩ rho| = 2 from smaller counts.
  std::size_t chosen = 0;
  double best_gap = 1e9;
  for (std::size_t c = 1; c <= g; ++c) {
    if ((g * t) % c != 0) continue;
    if (!(3 * c > t && 3 * c <= 2 * t)) continue;
    const double gap = std::fabs(static_cast<double>(c) - static_cast<double>(t) / 2.0);
    if (gap < best_gap) {
      best_gap = gap;
      chosen = c;
    }
  }
  if (chosen == 0)
    throw std::invalid_argument("gen_set_intersection_instance: uniformity unsatisfiable for g, t");
  const std::size_t q = g * t / chosen;

  std::vector<int> universe(q);
  std::iota(universe.begin(), universe.end(), 1);
  std::mt19937_64 eng(derive_seed(seed, seed_purpose::instance, g * 131071 + t));
  std::shuffle(universe.begin(), universe.end(), eng);

  // Deal the shuffled universe cyclically: g blocks of t consecutive elements.
  // Every element lands in exactly g*t/q sets, never twice in one set.
  std::vector<std::vector<int>> sets(g, std::vector<int>(t));
  std::size_t pos = 0;
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t k = 0; k < t; ++k) sets[i][k] = universe[pos++ % q];
  for (auto& s : sets) std::shuffle(s.begin(), s.end(), eng);
  return set_intersection_from_sets(std::move(sets));
}

std::optional<pref_predicate> halfspace_pref_instance::map_halfspace(const halfspace& h) const {
  if (std::fabs(vector_norm(h.normal) - 1.0) > 1e-9)
    throw std::invalid_argument("map_halfspace: normal must be a unit vector");
  if (h.offset <= 0.0) return std::nullopt;  // origin inside or on the boundary
  return pref_predicate{h.normal, 1, h.offset};
}

std::vector<int> halfspace_pref_instance::direct_filter(const halfspace& h) const {
  std::vector<int> out;
  for (const dataset& d : repo.datasets) {
    double dot = 0.0;
    for (std::size_t i = 0; i < h.normal.size(); ++i) dot += h.normal[i] * d.points.front()[i];
    if (dot >= h.offset) out.push_back(d.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

halfspace_pref_instance gen_halfspace_pref_instance(std::size_t n, std::size_t d,
                                                    std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("gen_halfspace_pref_instance: need d >= 2");
  if (n < 1) throw std::invalid_argument("gen_halfspace_pref_instance: need n >= 1");
  std::mt19937_64 eng(derive_seed(seed, seed_purpose::instance, n * 31 + d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  halfspace_pref_instance inst;
  for (std::size_t i = 0; i < n; ++i) {
    point_t p(d);
    for (;;) {
      double norm2 = 0.0;
      for (std::size_t h = 0; h < d; ++h) {
        p[h] = unit(eng);
        norm2 += p[h] * p[h];
      }
      if (norm2 <= 1.0) break;
    }
    inst.repo.datasets.push_back(dataset{static_cast<int>(i + 1), {p}});
  }
  return inst;
}

repository gen_random_repository(std::size_t n_datasets, std::size_t n_min, std::size_t n_max,
                                 std::size_t d, point_distribution dist, std::uint64_t seed,
                                 bool unit_ball) {
  if (n_datasets == 0 || n_min == 0 || n_min > n_max || d == 0)
    throw std::invalid_argument("gen_random_repository: bad parameters");
  repository repo;
  for (std::size_t i = 0; i < n_datasets; ++i) {
    std::mt19937_64 eng(derive_seed(seed, seed_purpose::instance, i + 1));
    std::uniform_int_distribution<std::size_t> size_pick(n_min, n_max);
    const std::size_t n = size_pick(eng);
    dataset ds{static_cast<int>(i + 1), {}};
    ds.points.reserve(n);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.5, 0.25);
    std::vector<point_t> centers;
    if (dist == point_distribution::clustered) {
      std::uniform_int_distribution<std::size_t> kpick(1, 4);
      const std::size_t kc = kpick(eng);
      for (std::size_t c = 0; c < kc; ++c) {
        point_t ctr(d);
        for (std::size_t h = 0; h < d; ++h) ctr[h] = uni(eng);
        centers.push_back(std::move(ctr));
      }
    }
    std::normal_distribution<double> blob(0.0, 0.08);
    std::uniform_int_distribution<std::size_t> which(0, centers.empty() ? 0 : centers.size() - 1);

    for (std::size_t j = 0; j < n; ++j) {
      point_t p(d);
      switch (dist) {
        case point_distribution::uniform:
          for (std::size_t h = 0; h < d; ++h) p[h] = uni(eng);
          break;
        case point_distribution::gaussian:
          for (std::size_t h = 0; h < d; ++h) p[h] = gauss(eng);
          break;
        case point_distribution::clustered: {
          const point_t& ctr = centers[which(eng)];
          for (std::size_t h = 0; h < d; ++h) p[h] = ctr[h] + blob(eng);
          break;
        }
      }
      if (unit_ball) {
        for (double& c : p) c = 2.0 * c - 1.0;
        const double norm = vector_norm(p);
        if (norm > 1.0)
          for (double& c : p) c /= norm;
      }
      ds.points.push_back(std::move(p));
    }
    repo.datasets.push_back(std::move(ds));
  }
  return repo;
}

}  // namespace dspt
