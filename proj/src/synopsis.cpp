#include "dspt/synopsis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dspt/rng.hpp"

namespace dspt {

namespace {

void check_unit(const point_t& v) {
  if (std::fabs(vector_norm(v) - 1.0) > 1e-9)
    throw std::invalid_argument("direction must be a unit vector");
}

double inner(const point_t& a, const point_t& b) {
  double s = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) s += a[h] * b[h];
  return s;
}

}  // namespace

double vector_norm(const point_t& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double kth_largest_inner_product(const std::vector<point_t>& pts, const point_t& v, std::size_t k) {
  if (k == 0 || k > pts.size())
    throw std::invalid_argument("kth_largest_inner_product: k out of range");
  std::vector<double> scores;
  scores.reserve(pts.size());
  for (const point_t& p : pts) {
    if (p.size() != v.size())
      throw std::invalid_argument("kth_largest_inner_product: dimension mismatch");
    scores.push_back(inner(p, v));
  }
  std::nth_element(scores.begin(), scores.begin() + (k - 1), scores.end(), std::greater<double>());
  return scores[k - 1];
}

exact_synopsis::exact_synopsis(dataset data, bool exact_coreset)
    : data_(std::move(data)), exact_coreset_(exact_coreset) {
  if (data_.points.empty()) throw std::invalid_argument("exact_synopsis: empty dataset");
  dim_ = data_.points.front().size();
  for (const point_t& p : data_.points)
    if (p.size() != dim_) throw std::invalid_argument("exact_synopsis: mixed dimensions");
}

std::vector<point_t> exact_synopsis::sample(std::size_t kappa, std::uint64_t seed) const {
  if (kappa == 0) throw std::invalid_argument("sample: kappa must be >= 1");
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<point_t> out;
  out.reserve(kappa);
  for (std::size_t i = 0; i < kappa; ++i) out.push_back(data_.points[pick(eng)]);
  return out;
}

double exact_synopsis::score(const point_t& v, std::size_t k) const {
  check_unit(v);
  return kth_largest_inner_product(data_.points, v, k);
}

histogram_synopsis::histogram_synopsis(rect box, std::size_t resolution, std::size_t n,
                                       std::map<std::uint64_t, std::uint64_t> cells,
                                       std::optional<double> certified_rect_error)
    : box_(std::move(box)),
      resolution_(resolution),
      n_(n),
      cells_(std::move(cells)),
      certified_rect_error_(certified_rect_error) {
  if (resolution_ == 0) throw std::invalid_argument("histogram_synopsis: resolution must be >= 1");
  if (n_ == 0) throw std::invalid_argument("histogram_synopsis: empty dataset");
  std::uint64_t total = 0;
  cumulative_.reserve(cells_.size());
  for (const auto& [flat, count] : cells_) {
    total += count;
    cumulative_.emplace_back(flat, total);
  }
  if (total != n_) throw std::invalid_argument("histogram_synopsis: cell counts do not sum to n");
}

std::uint64_t histogram_synopsis::flat_cell_of(const point_t& p) const {
  const std::size_t d = dim();
  std::uint64_t flat = 0, stride = 1;
  for (std::size_t h = 0; h < d; ++h) {
    const double span = box_.hi[h] - box_.lo[h];
    std::int64_t idx =
        span > 0 ? static_cast<std::int64_t>((p[h] - box_.lo[h]) / span * static_cast<double>(resolution_))
                 : 0;
    idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(resolution_) - 1);
    flat += static_cast<std::uint64_t>(idx) * stride;
    stride *= resolution_;
  }
  return flat;
}

rect histogram_synopsis::cell_bounds(std::uint64_t flat) const {
  const std::size_t d = dim();
  point_t lo(d), hi(d);
  for (std::size_t h = 0; h < d; ++h) {
    const std::uint64_t idx = flat % resolution_;
    flat /= resolution_;
    const double span = box_.hi[h] - box_.lo[h];
    lo[h] = box_.lo[h] + span * static_cast<double>(idx) / static_cast<double>(resolution_);
    hi[h] = box_.lo[h] + span * static_cast<double>(idx + 1) / static_cast<double>(resolution_);
  }
  return rect(std::move(lo), std::move(hi));
}

histogram_synopsis histogram_synopsis::build(const dataset& data, std::size_t resolution,
                                             const rect& box, std::size_t probe_count,
                                             std::uint64_t probe_seed) {
  if (resolution == 0) throw std::invalid_argument("build_histogram: resolution must be >= 1");
  if (data.points.empty()) throw std::invalid_argument("build_histogram: empty dataset");
  const std::size_t d = box.dim();
  std::map<std::uint64_t, std::uint64_t> cells;
  histogram_synopsis shell(box, resolution, data.size(), {{0, data.size()}}, std::nullopt);
  for (const point_t& p : data.points) {
    if (p.size() != d) throw std::invalid_argument("build_histogram: dimension mismatch");
    if (!box.contains_point(p))
      throw std::invalid_argument("build_histogram: point outside bounding box");
    cells[shell.flat_cell_of(p)]++;
  }
  histogram_synopsis hist(box, resolution, data.size(), std::move(cells), std::nullopt);

  // Analytic boundary bound: any rectangle boundary cuts at most two axis
  // slabs per dimension, and each partially covered cell contributes at most
  // its full mass to the error.
  double analytic = 0.0;
  for (std::size_t h = 0; h < d; ++h) {
    std::map<std::uint64_t, std::uint64_t> slab;
    for (const auto& [flat, count] : hist.cells_) {
      std::uint64_t f = flat;
      for (std::size_t g = 0; g < h; ++g) f /= resolution;
      slab[f % resolution] += count;
    }
    std::uint64_t worst = 0;
    for (const auto& [idx, count] : slab) worst = std::max(worst, count);
    analytic += 2.0 * static_cast<double>(worst) / static_cast<double>(data.size());
  }

  double probe_max = 0.0;
  std::mt19937_64 eng(probe_seed);
  for (std::size_t t = 0; t < probe_count; ++t) {
    point_t lo(d), hi(d);
    for (std::size_t h = 0; h < d; ++h) {
      std::uniform_real_distribution<double> coord(box.lo[h], box.hi[h]);
      double a = coord(eng), b = coord(eng);
      lo[h] = std::min(a, b);
      hi[h] = std::max(a, b);
    }
    rect probe(std::move(lo), std::move(hi));
    std::size_t in = 0;
    for (const point_t& p : data.points)
      if (probe.contains_point(p)) ++in;
    const double truth = static_cast<double>(in) / static_cast<double>(data.size());
    probe_max = std::max(probe_max, std::fabs(truth - hist.rect_mass(probe)));
  }
  hist.certified_rect_error_ = std::min(probe_max + analytic, 0.999999);
  return hist;
}

double histogram_synopsis::rect_mass(const rect& r) const {
  if (r.dim() != dim()) throw std::invalid_argument("rect_mass: dimension mismatch");
  const std::size_t d = dim();
  double mass = 0.0;
  for (const auto& [flat, count] : cells_) {
    const rect cell = cell_bounds(flat);
    double frac = 1.0;
    for (std::size_t h = 0; h < d && frac > 0.0; ++h) {
      const double lo = std::max(cell.lo[h], r.lo[h]);
      const double hi = std::min(cell.hi[h], r.hi[h]);
      const double span = cell.hi[h] - cell.lo[h];
      frac *= hi > lo && span > 0 ? (hi - lo) / span : 0.0;
    }
    mass += frac * static_cast<double>(count) / static_cast<double>(n_);
  }
  return mass;
}

rat64 histogram_synopsis::total_mass() const {
  std::uint64_t total = 0;
  for (const auto& [flat, count] : cells_) total += count;
  return rat64(static_cast<std::int64_t>(total), static_cast<std::int64_t>(n_));
}

std::vector<point_t> histogram_synopsis::sample(std::size_t kappa, std::uint64_t seed) const {
  if (kappa == 0) throw std::invalid_argument("sample: kappa must be >= 1");
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, n_ - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<point_t> out;
  out.reserve(kappa);
  for (std::size_t i = 0; i < kappa; ++i) {
    const std::uint64_t r = pick(eng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r,
                               [](std::uint64_t v, const auto& e) { return v < e.second; });
    const rect cell = cell_bounds(it->first);
    point_t p(dim());
    for (std::size_t h = 0; h < dim(); ++h)
      p[h] = cell.lo[h] + unit(eng) * (cell.hi[h] - cell.lo[h]);
    out.push_back(std::move(p));
  }
  return out;
}

double histogram_synopsis::score(const point_t& v, std::size_t k) const {
  check_unit(v);
  if (k == 0 || k > n_) throw std::invalid_argument("score: k out of range");
  // Optimistic per-cell bound: the corner maximizing the inner product.
  std::vector<std::pair<double, std::uint64_t>> bounds;
  bounds.reserve(cells_.size());
  for (const auto& [flat, count] : cells_) {
    const rect cell = cell_bounds(flat);
    double ub = 0.0;
    for (std::size_t h = 0; h < dim(); ++h) ub += std::max(v[h] * cell.lo[h], v[h] * cell.hi[h]);
    bounds.emplace_back(ub, count);
  }
  std::sort(bounds.begin(), bounds.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::uint64_t seen = 0;
  for (const auto& [ub, count] : bounds) {
    seen += count;
    if (seen >= k) return ub;
  }
  return bounds.back().first;
}

std::optional<double> histogram_synopsis::score_error() const {
  double diag = 0.0;
  for (std::size_t h = 0; h < dim(); ++h) {
    const double side = (box_.hi[h] - box_.lo[h]) / static_cast<double>(resolution_);
    diag += side * side;
  }
  return std::sqrt(diag);
}

std::size_t coreset_size(double eps, double failure, std::size_t repo_size, double size_constant) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("coreset_size: eps must be in (0,1)");
  if (!(failure > 0.0 && failure < 1.0))
    throw std::invalid_argument("coreset_size: failure must be in (0,1)");
  if (repo_size == 0) throw std::invalid_argument("coreset_size: empty repository");
  const double raw =
      size_constant / (eps * eps) * std::log(static_cast<double>(repo_size) / failure);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(raw)));
}

std::vector<point_t> draw_coreset(const synopsis& s, double eps, double failure,
                                  std::size_t repo_size, std::uint64_t seed, double size_constant) {
  if (s.exact_coreset_mode()) {
    const std::vector<point_t>* raw = s.raw_points();
    if (!raw) throw std::logic_error("draw_coreset: exact-coreset synopsis without raw points");
    return *raw;
  }
  return s.sample(coreset_size(eps, failure, repo_size, size_constant), seed);
}

}  // namespace dspt
