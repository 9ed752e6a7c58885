#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "dspt/geom.hpp"
#include "dspt/rational.hpp"

namespace dspt {

/// A finite point set with a repository-wide index.
struct dataset {
  int id = 0;
  std::vector<point_t> points;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

/// k-th largest inner product of the points with a unit direction; ties keep
/// multiplicity. Shared by the exact synopsis and the brute-force oracle so
/// both sides make bit-identical decisions.
double kth_largest_inner_product(const std::vector<point_t>& pts, const point_t& v, std::size_t k);

double vector_norm(const point_t& v);

/// Compressed representation of a dataset. Exposes random sampling (for the
/// percentile indexes) and a k-th-score oracle (for the preference indexes),
/// each with a declared error bound; `std::nullopt` marks an unknown bound.
class synopsis {
 public:
  virtual ~synopsis() = default;

  virtual std::size_t dim() const = 0;
  /// Number of underlying points (bounds the admissible k for score()).
  virtual std::size_t support_size() const = 0;

  /// kappa i.i.d. draws from the synopsis distribution; deterministic given
  /// the seed.
  virtual std::vector<point_t> sample(std::size_t kappa, std::uint64_t seed) const = 0;

  /// Estimate of the k-th largest inner product with unit direction v.
  virtual double score(const point_t& v, std::size_t k) const = 0;

  /// Error bound for rectangle-mass estimates.
  virtual std::optional<double> rect_error() const = 0;
  /// Error bound for score() estimates.
  virtual std::optional<double> score_error() const = 0;

  /// True when coreset() must return the raw points instead of sampling.
  virtual bool exact_coreset_mode() const { return false; }
  virtual const std::vector<point_t>* raw_points() const { return nullptr; }
};

/// The dataset itself as its own synopsis: delta = 0, sampling is uniform with
/// replacement, scores are exact.
class exact_synopsis : public synopsis {
 public:
  explicit exact_synopsis(dataset data, bool exact_coreset = false);

  std::size_t dim() const override { return dim_; }
  std::size_t support_size() const override { return data_.size(); }
  std::vector<point_t> sample(std::size_t kappa, std::uint64_t seed) const override;
  double score(const point_t& v, std::size_t k) const override;
  std::optional<double> rect_error() const override { return 0.0; }
  std::optional<double> score_error() const override { return 0.0; }
  bool exact_coreset_mode() const override { return exact_coreset_; }
  const std::vector<point_t>* raw_points() const override { return &data_.points; }

 private:
  dataset data_;
  std::size_t dim_;
  bool exact_coreset_;
};

/// Uniform grid over the bounding box with exact rational per-cell masses.
/// Sampling draws a cell proportionally to its count and a position uniformly
/// inside it. The rectangle-error certificate is probe-based plus an analytic
/// boundary-cell bound and is deliberately conservative.
class histogram_synopsis : public synopsis {
 public:
  /// Cell counts as a sparse map from flat cell index; masses are count/n.
  histogram_synopsis(rect box, std::size_t resolution, std::size_t n,
                     std::map<std::uint64_t, std::uint64_t> cells,
                     std::optional<double> certified_rect_error);

  static histogram_synopsis build(const dataset& data, std::size_t resolution, const rect& box,
                                  std::size_t probe_count, std::uint64_t probe_seed);

  std::size_t dim() const override { return box_.dim(); }
  std::size_t support_size() const override { return n_; }
  std::vector<point_t> sample(std::size_t kappa, std::uint64_t seed) const override;
  double score(const point_t& v, std::size_t k) const override;
  std::optional<double> rect_error() const override { return certified_rect_error_; }
  std::optional<double> score_error() const override;

  const rect& box() const { return box_; }
  std::size_t resolution() const { return resolution_; }
  const std::map<std::uint64_t, std::uint64_t>& cells() const { return cells_; }
  /// Probability mass the synopsis distribution assigns to R.
  double rect_mass(const rect& r) const;
  /// Sum of all cell masses; exactly 1 by construction.
  rat64 total_mass() const;

  std::uint64_t flat_cell_of(const point_t& p) const;
  rect cell_bounds(std::uint64_t flat) const;

  void set_certified_rect_error(std::optional<double> e) { certified_rect_error_ = e; }

 private:
  rect box_;
  std::size_t resolution_;
  std::size_t n_;
  std::map<std::uint64_t, std::uint64_t> cells_;
  std::optional<double> certified_rect_error_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cumulative_;  // (flat, cumulative count)
};

/// Size of the random coreset: ceil(c * eps^-2 * ln(N / failure)).
std::size_t coreset_size(double eps, double failure, std::size_t repo_size, double size_constant = 0.5);

/// Draw the per-dataset coreset. In exact-coreset mode this is the raw point
/// set (a 0-sample); otherwise coreset_size() samples from the synopsis.
std::vector<point_t> draw_coreset(const synopsis& s, double eps, double failure,
                                  std::size_t repo_size, std::uint64_t seed,
                                  double size_constant = 0.5);

}  // namespace dspt
