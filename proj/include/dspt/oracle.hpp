#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dspt/geom.hpp"
#include "dspt/pref.hpp"
#include "dspt/ptile.hpp"
#include "dspt/rational.hpp"
#include "dspt/synopsis.hpp"

namespace dspt {

/// A collection of datasets sharing one dimension; ids are unique.
struct repository {
  std::vector<dataset> datasets;

  std::size_t dim() const { return datasets.empty() ? 0 : datasets.front().dim(); }
  std::size_t total_points() const;
  const dataset& by_id(int id) const;
};

/// |P ∩ R| / |P| as an exact rational (closed rectangle membership).
rat64 eval_percentile(const dataset& p, const rect& r);

/// k-th largest inner product with a unit direction (full sort, exact).
double eval_topk(const dataset& p, const point_t& v, std::size_t k);

/// Predicate truth with theta endpoints on the shared 1e-12 grid.
bool eval_ptile_predicate(const dataset& p, const ptile_predicate& pred);
bool eval_pref_predicate(const dataset& p, const pref_predicate& pred);

/// Exact Q_Pi by evaluating every predicate on every dataset. Returned ids are
/// sorted ascending.
std::vector<int> brute_force_query(const repository& repo, const ptile_expression& e);

/// Adversarial percentile instance derived from uniform set intersection: each
/// universe element becomes a 2-point-per-membership planar dataset on two
/// parallel lines, and each pair (i, j) of sets has a rectangle whose
/// percentile answer is exactly the intersection.
struct set_intersection_instance {
  std::vector<std::vector<int>> sets;  // g sets over universe {1..q}
  repository repo;                     // dataset per universe element, id = element
  std::size_t set_size = 0;            // t: |S_i| for every i
  std::size_t multiplicity = 0;        // sets containing each element
  std::size_t total_size = 0;          // M = g * t

  /// Rectangle whose intersection with the instance points is exactly the
  /// line-L points of set i plus the line-L' points of set j (1-based).
  rect pair_rect(std::size_t i, std::size_t j) const;
  /// Threshold that singles out datasets with two points in the rectangle.
  double theta_lo() const { return 1.5 / static_cast<double>(set_size); }
  /// Direct set-intersection answer, sorted.
  std::vector<int> intersection(std::size_t i, std::size_t j) const;
};

/// Random uniform collection of g sets of size t (round-robin assignment over
/// a shuffled universe, equal per-element multiplicity). Throws when no
/// multiplicity in (t/3, 2t/3] with c | g*t and c <= g exists.
set_intersection_instance gen_set_intersection_instance(std::size_t g, std::size_t t,
                                                        std::uint64_t seed);
/// Same construction from explicitly given uniform sets.
set_intersection_instance set_intersection_from_sets(std::vector<std::vector<int>> sets);

/// Halfspace {x : <normal, x> >= offset} with a unit normal.
struct halfspace {
  point_t normal;
  double offset = 0.0;
};

/// Preference instance from halfspace reporting: n singleton datasets in the
/// first orthant of the unit ball; a halfspace not containing the origin maps
/// to one preference predicate with matching answers.
struct halfspace_pref_instance {
  repository repo;

  /// Predicate equivalent to the halfspace, or nullopt when the halfspace
  /// contains or touches the origin (rejected; the rotated construction is
  /// out of scope).
  std::optional<pref_predicate> map_halfspace(const halfspace& h) const;
  std::vector<int> direct_filter(const halfspace& h) const;
};

halfspace_pref_instance gen_halfspace_pref_instance(std::size_t n, std::size_t d,
                                                    std::uint64_t seed);

enum class point_distribution { uniform, gaussian, clustered };

/// Reproducible random repository; `unit_ball` rescales every point to norm
/// at most 1 for preference workloads.
repository gen_random_repository(std::size_t n_datasets, std::size_t n_min, std::size_t n_max,
                                 std::size_t d, point_distribution dist, std::uint64_t seed,
                                 bool unit_ball = false);

}  // namespace dspt
