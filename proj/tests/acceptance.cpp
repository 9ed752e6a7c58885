// Acceptance harness: one criterion per function, one PASS/FAIL line each.
// Run with no arguments for the full suite or with criterion numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dspt/io.hpp"
#include "dspt/oracle.hpp"
#include "dspt/pref.hpp"
#include "dspt/ptile.hpp"
#include "dspt/rng.hpp"

using namespace dspt;

namespace {

struct owned_repo {
  repository repo;
  std::vector<std::unique_ptr<synopsis>> owners;
  std::vector<ptile_index::synopsis_ref> refs;

  static owned_repo exact(repository r, bool exact_coreset) {
    owned_repo out;
    out.repo = std::move(r);
    for (const dataset& d : out.repo.datasets) {
      out.owners.push_back(std::make_unique<exact_synopsis>(d, exact_coreset));
      out.refs.emplace_back(d.id, out.owners.back().get());
    }
    return out;
  }
};

std::vector<int> ids_of(const ptile_query_result& r) {
  std::vector<int> out;
  for (const report_entry& e : r.entries) out.push_back(e.index);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ids_of(const pref_query_result& r) {
  std::vector<int> out;
  for (const pref_report_entry& e : r.entries) out.push_back(e.index);
  std::sort(out.begin(), out.end());
  return out;
}

rect interval(double lo, double hi) { return rect({lo}, {hi}); }

rect random_rect_in(std::mt19937_64& eng, const rect& inner) {
  const std::size_t d = inner.dim();
  point_t lo(d), hi(d);
  for (std::size_t h = 0; h < d; ++h) {
    std::uniform_real_distribution<double> coord(inner.lo[h], inner.hi[h]);
    const double a = coord(eng), b = coord(eng);
    lo[h] = std::min(a, b);
    hi[h] = std::max(a, b);
  }
  return rect(std::move(lo), std::move(hi));
}

point_t random_unit(std::mt19937_64& eng, std::size_t d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  point_t v(d);
  double norm = 0.0;
  while (norm < 1e-9) {
    for (double& c : v) c = gauss(eng);
    norm = vector_norm(v);
  }
  for (double& c : v) c /= norm;
  return v;
}

repository running_example() {
  repository repo;
  repo.datasets.push_back(dataset{1, {{1.0}, {7.0}, {9.0}}});
  repo.datasets.push_back(dataset{2, {{2.0}, {4.0}, {6.0}, {10.0}}});
  return repo;
}

// ---------------------------------------------------------------------------
// 1. Running-example fidelity (exact, < 1 s).
bool criterion1(std::string& detail) {
  const owned_repo fixture = owned_repo::exact(running_example(), /*exact_coreset=*/true);
  ptile_build_params params;
  params.eps = 0.005;
  params.failure = 0.1;
  params.delta = 0.0;
  params.bound = interval(-1, 13);
  const ptile_index tidx = ptile_index::build_threshold(fixture.refs, params);
  const ptile_index ridx = ptile_index::build_range(fixture.refs, params);

  bool ok = ids_of(tidx.query_threshold(interval(3, 8), 0.2)) == std::vector<int>{1, 2};
  ok = ok && ids_of(ridx.query_range(interval(3, 8), 0.2, 0.4)) == std::vector<int>{1};

  std::map<std::vector<double>, rat64> weights;
  for (int id : tidx.dataset_ids())
    for (const weighted_point& p : tidx.lifted_of(id)) weights.emplace(p.coords, p.weights[0]);
  for (int id : ridx.dataset_ids())
    for (const weighted_point& p : ridx.lifted_of(id)) weights.emplace(p.coords, p.weights[0]);
  ok = ok && weights.count({1, 7}) && weights.at({1, 7}) == rat64(2, 3);
  ok = ok && weights.count({7, 1, 7, 9}) && weights.at({7, 1, 7, 9}) == rat64(1, 3);
  ok = ok && weights.count({4, 2, 6, 10}) && weights.at({4, 2, 6, 10}) == rat64(2, 4);
  detail = "threshold {1,2}, range {1}, lifted weights 2/3, 1/3, 2/4";
  return ok;
}

// ---------------------------------------------------------------------------
// 2. Exact-coreset oracle equality over 1000 random instances.
bool criterion2(std::string& detail) {
  std::size_t mismatches = 0;
  const std::size_t trials = 1000;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 eng(derive_seed(2024, 2, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t d = trial % 2 + 1;
    const bool envelope = trial % 100 == 99;  // occasionally push the stated bounds
    std::uniform_int_distribution<std::size_t> npick(2, envelope ? 50 : (d == 1 ? 30 : 16));
    const std::size_t n_datasets = envelope && d == 1 ? 50 : npick(eng);
    const std::size_t n_max = d == 1 ? (envelope ? 200 : 40) : 9;
    const repository repo = gen_random_repository(n_datasets, 1, n_max, d,
                                                  point_distribution::uniform, 77000 + trial);
    const owned_repo inst = owned_repo::exact(repo, true);
    ptile_build_params params;
    params.eps = 0.005;
    params.failure = 0.1;
    params.bound = d == 1 ? interval(-0.5, 1.5) : rect({-0.5, -0.5}, {1.5, 1.5});
    const ptile_index tidx = ptile_index::build_threshold(inst.refs, params);
    const ptile_index ridx = ptile_index::build_range(inst.refs, params);
    for (int q = 0; q < 4; ++q) {
      rect r = random_rect_in(eng, d == 1 ? interval(-0.1, 1.1)
                                          : rect({-0.1, -0.1}, {1.1, 1.1}));
      const double a = unit(eng), b = a + (1.0 - a) * unit(eng);
      if (ids_of(tidx.query_threshold(r, a, 0.0)) !=
          brute_force_query(repo, ptile_expression::leaf({r, a, 1.0})))
        ++mismatches;
      if (ids_of(ridx.query_range(r, a, b, 0.0)) !=
          brute_force_query(repo, ptile_expression::leaf({r, a, b})))
        ++mismatches;
    }
  }
  std::ostringstream ss;
  ss << trials << " instances, " << mismatches << " mismatching queries";
  detail = ss.str();
  return mismatches == 0;
}

// ---------------------------------------------------------------------------
// 3. Sampled-coreset sandwich at eps=0.1, failure=0.05, delta=0.
bool criterion3(std::string& detail) {
  const double eps = 0.1, failure = 0.05;
  const std::size_t trials = 500;
  std::size_t complete_trials = 0, sandwich_violations = 0, disc_checked = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 eng(derive_seed(31415, 3, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t d = trial % 2 + 1;
    std::uniform_int_distribution<std::size_t> npick(2, 5);
    const repository repo =
        gen_random_repository(npick(eng), d == 1 ? 8 : 6, d == 1 ? 30 : 12, d,
                              point_distribution::uniform, 88000 + trial);
    const owned_repo inst = owned_repo::exact(repo, /*exact_coreset=*/false);
    ptile_build_params params;
    params.eps = eps;
    params.failure = failure;
    params.seed = derive_seed(1618, 33, trial);
    params.bound = d == 1 ? interval(-0.5, 1.5) : rect({-0.5, -0.5}, {1.5, 1.5});
    const ptile_index idx = ptile_index::build_range(inst.refs, params);

    bool complete = true, disc_ok = true;
    for (int q = 0; q < 3; ++q) {
      const rect r = random_rect_in(eng, d == 1 ? interval(-0.1, 1.1)
                                                : rect({-0.1, -0.1}, {1.1, 1.1}));
      const double a = unit(eng), b = a + (1.0 - a) * unit(eng);
      const auto got = ids_of(idx.query_range(r, a, b));
      const auto want = brute_force_query(repo, ptile_expression::leaf({r, a, b}));
      if (!std::includes(got.begin(), got.end(), want.begin(), want.end())) complete = false;
      for (const dataset& ds : repo.datasets) {
        const double est = idx.estimate(ds.id, r).to_double();
        if (std::fabs(est - eval_percentile(ds, r).to_double()) > eps / 2.0) disc_ok = false;
      }
      if (disc_ok) {
        for (int id : got) {
          const double m = eval_percentile(repo.by_id(id), r).to_double();
          if (!(m >= a - eps - 1e-12 && m <= b + eps + 1e-12)) ++sandwich_violations;
        }
      }
    }
    if (complete) ++complete_trials;
    if (disc_ok) ++disc_checked;
  }
  std::ostringstream ss;
  ss << complete_trials << "/" << trials << " trials complete (need >= 465); "
     << sandwich_violations << " sandwich violations over " << disc_checked
     << " discrepancy-checked trials";
  detail = ss.str();
  return complete_trials >= 465 && sandwich_violations == 0;
}

// ---------------------------------------------------------------------------
// 4. Federated delta propagation through histogram synopses.
bool criterion4(std::string& detail) {
  const double eps = 0.5, failure = 0.05;
  const std::size_t n_repos = 5, trials = 500;
  struct fed_repo {
    repository raw;
    std::vector<std::unique_ptr<histogram_synopsis>> hists;
    double delta = 0.0;
  };
  std::vector<fed_repo> repos;
  double worst_cert = 0.0;
  for (std::size_t rseed = 0; rseed < n_repos; ++rseed) {
    fed_repo fr;
    fr.raw = gen_random_repository(4, 2000, 2000, 1,
                                   rseed % 2 ? point_distribution::gaussian
                                             : point_distribution::uniform,
                                   4200 + rseed);
    const rect box = interval(-1.0, 2.0);
    for (dataset& ds : fr.raw.datasets)
      for (point_t& p : ds.points) p[0] = std::clamp(p[0], -0.9, 1.9);
    for (const dataset& ds : fr.raw.datasets) {
      fr.hists.push_back(std::make_unique<histogram_synopsis>(histogram_synopsis::build(
          ds, 512, box, 2000, derive_seed(4242, 4, rseed * 101 + ds.id))));
      fr.delta = std::max(fr.delta, *fr.hists.back()->rect_error());
    }
    worst_cert = std::max(worst_cert, fr.delta);
    repos.push_back(std::move(fr));
  }
  if (worst_cert > 0.05) {
    detail = "certified delta exceeded 0.05: " + std::to_string(worst_cert);
    return false;
  }

  std::size_t good_trials = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const fed_repo& fr = repos[trial % n_repos];
    std::mt19937_64 eng(derive_seed(5150, 4, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ptile_index::synopsis_ref> refs;
    for (std::size_t i = 0; i < fr.hists.size(); ++i)
      refs.emplace_back(fr.raw.datasets[i].id, fr.hists[i].get());
    ptile_build_params params;
    params.eps = eps;
    params.failure = failure;
    params.delta = fr.delta;
    params.seed = derive_seed(999, 44, trial);
    params.bound = interval(-1.0, 2.0);
    const ptile_index idx = ptile_index::build_range(refs, params);
    bool ok = true;
    for (int q = 0; q < 2; ++q) {
      const rect r = random_rect_in(eng, interval(-0.99, 1.99));
      const double a = unit(eng), b = a + (1.0 - a) * unit(eng);
      for (int id : ids_of(idx.query_range(r, a, b))) {
        const double m = eval_percentile(fr.raw.by_id(id), r).to_double();
        if (!(m >= a - eps - 2.0 * fr.delta - 1e-12 && m <= b + eps + 2.0 * fr.delta + 1e-12))
          ok = false;
      }
    }
    if (ok) ++good_trials;
  }
  std::ostringstream ss;
  ss << "certified delta <= " << worst_cert << "; " << good_trials << "/" << trials
     << " trials inside the sandwich (need >= 475)";
  detail = ss.str();
  return good_trials >= 475;
}

// ---------------------------------------------------------------------------
// 5. Exact 1-d structure vs oracle on 10^4 (repository, query) pairs.
bool criterion5(std::string& detail) {
  std::size_t mismatches = 0, pairs = 0;
  for (std::size_t rep = 0; rep < 100; ++rep) {
    std::mt19937_64 eng(derive_seed(55, 5, rep));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> npick(2, 8);
    const repository repo = gen_random_repository(npick(eng), 1, 30, 1,
                                                  point_distribution::uniform, 66000 + rep);
    const double a = unit(eng) * 0.8;
    const double b = a + (1.0 - a) * unit(eng);
    const exact1d_index idx = exact1d_index::build(repo.datasets, a, b);
    for (int q = 0; q < 100; ++q) {
      double lo, hi;
      if (q % 4 == 0) {
        // Corners on actual data coordinates.
        const dataset& ds = repo.datasets[static_cast<std::size_t>(q) % repo.datasets.size()];
        lo = ds.points[static_cast<std::size_t>(q) % ds.size()][0];
        hi = std::max(lo, ds.points[static_cast<std::size_t>(q / 2) % ds.size()][0]);
      } else {
        const double x = unit(eng), y = unit(eng);
        lo = std::min(x, y);
        hi = std::max(x, y);
      }
      ++pairs;
      // query() itself throws on duplicate reports.
      if (idx.query(lo, hi) !=
          brute_force_query(repo, ptile_expression::leaf({interval(lo, hi), a, b})))
        ++mismatches;
    }
  }
  std::ostringstream ss;
  ss << pairs << " pairs, " << mismatches << " mismatches, zero duplicates";
  detail = ss.str();
  return mismatches == 0 && pairs == 10000;
}

// ---------------------------------------------------------------------------
// 6. Set-intersection instances answered exactly through the threshold index.
bool criterion6(std::string& detail) {
  const std::vector<std::pair<std::size_t, std::size_t>> shapes{
      {5, 4}, {8, 6}, {10, 8}, {20, 10}, {40, 16}};
  std::size_t mismatches = 0, queries = 0;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto [g, t] = shapes[s];
    const set_intersection_instance inst = gen_set_intersection_instance(g, t, 700 + s);
    const owned_repo repo = owned_repo::exact(inst.repo, /*exact_coreset=*/true);
    ptile_build_params params;
    params.eps = 0.005;
    params.failure = 0.1;
    const ptile_index idx = ptile_index::build_threshold(repo.refs, params);
    for (std::size_t i = 1; i <= g; ++i)
      for (std::size_t j = 1; j <= g; ++j) {
        ++queries;
        if (ids_of(idx.query_threshold(inst.pair_rect(i, j), inst.theta_lo(), 0.0)) !=
            inst.intersection(i, j))
          ++mismatches;
      }
  }
  std::ostringstream ss;
  ss << queries << " pair queries across " << shapes.size() << " instances, " << mismatches
     << " mismatches";
  detail = ss.str();
  return mismatches == 0;
}

// ---------------------------------------------------------------------------
// 7. Preference guarantees: deterministic completeness, eps-soundness, and the
//    halfspace fixture.
bool criterion7(std::string& detail) {
  const double eps = 0.05;
  const std::size_t trials = 500;
  std::size_t completeness_violations = 0, soundness_violations = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 eng(derive_seed(777, 7, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t k = trial % 2 == 0 ? 1 : 3;
    std::uniform_int_distribution<std::size_t> npick(3, 10);
    const repository repo = gen_random_repository(npick(eng), 3, 50, 2,
                                                  point_distribution::gaussian, 91000 + trial,
                                                  /*unit_ball=*/true);
    owned_repo inst = owned_repo::exact(repo, false);
    std::vector<pref_index::synopsis_ref> refs;
    for (const auto& [id, syn] : inst.refs) refs.emplace_back(id, syn);
    pref_build_params params;
    params.eps = eps;
    params.k = k;
    params.probe_count = trial == 0 ? 100000 : 2000;  // full net validation once
    const pref_index idx = pref_index::build(refs, params);
    for (int q = 0; q < 2; ++q) {
      const point_t u = random_unit(eng, 2);
      const double a = 2.0 * unit(eng) - 1.0;
      const auto got = ids_of(idx.query(u, a));
      for (const dataset& ds : repo.datasets) {
        const double truth = eval_topk(ds, u, k);
        const bool reported = std::binary_search(got.begin(), got.end(), ds.id);
        if (truth >= a && !reported) ++completeness_violations;
        if (reported && truth < a - eps - 1e-12) ++soundness_violations;
      }
    }
  }

  // Halfspace-reduction fixture; exact answers for net directions at slack 0.
  std::size_t halfspace_mismatches = 0;
  const halfspace_pref_instance inst = gen_halfspace_pref_instance(100, 2, 404);
  owned_repo fixture = owned_repo::exact(inst.repo, false);
  std::vector<pref_index::synopsis_ref> refs;
  for (const auto& [id, syn] : fixture.refs) refs.emplace_back(id, syn);
  pref_build_params params;
  params.eps = eps;
  params.k = 1;
  params.probe_count = 2000;
  const pref_index idx = pref_index::build(refs, params);
  std::mt19937_64 eng(derive_seed(777, 77, 0));
  std::uniform_real_distribution<double> offset(0.05, 0.9);
  for (int q = 0; q < 200; ++q) {
    const halfspace h{idx.net().dirs[(static_cast<std::size_t>(q) * 13) % idx.net().size()],
                      offset(eng)};
    const auto pred = inst.map_halfspace(h);
    if (!pred) continue;
    if (ids_of(idx.query(pred->direction, pred->threshold, 0.0)) != inst.direct_filter(h))
      ++halfspace_mismatches;
  }

  std::ostringstream ss;
  ss << trials << " trials: " << completeness_violations << " completeness and "
     << soundness_violations << " soundness violations; halfspace mismatches: "
     << halfspace_mismatches;
  detail = ss.str();
  return completeness_violations == 0 && soundness_violations == 0 && halfspace_mismatches == 0;
}

// ---------------------------------------------------------------------------
// 8. Streaming dedup enumeration equals the literal delete/re-insert loop.
bool criterion8(std::string& detail) {
  std::size_t mismatches = 0;
  const std::size_t trials = 200;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 eng(derive_seed(88, 8, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t d = trial % 2 + 1;
    std::uniform_int_distribution<std::size_t> npick(2, 10);
    const repository repo = gen_random_repository(npick(eng), 2, d == 1 ? 20 : 8, d,
                                                  point_distribution::clustered, 10100 + trial);
    const bool sampled = trial % 4 == 3;
    const owned_repo inst = owned_repo::exact(repo, !sampled);
    ptile_build_params params;
    params.eps = sampled ? 0.3 : 0.01;
    params.failure = 0.1;
    params.seed = trial;
    params.bound = d == 1 ? interval(-0.5, 1.5) : rect({-0.5, -0.5}, {1.5, 1.5});
    ptile_index tidx = ptile_index::build_threshold(inst.refs, params);
    ptile_index ridx = ptile_index::build_range(inst.refs, params);
    for (int q = 0; q < 3; ++q) {
      const rect r = random_rect_in(eng, d == 1 ? interval(-0.1, 1.1)
                                                : rect({-0.1, -0.1}, {1.1, 1.1}));
      const double a = unit(eng), b = a + (1.0 - a) * unit(eng);
      auto sorted = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return v;
      };
      if (ids_of(tidx.query_threshold(r, a)) != sorted(tidx.query_threshold_reference(r, a)))
        ++mismatches;
      if (ids_of(ridx.query_range(r, a, b)) != sorted(ridx.query_range_reference(r, a, b)))
        ++mismatches;
    }
  }
  std::ostringstream ss;
  ss << trials << " instances, " << mismatches << " mismatching queries";
  detail = ss.str();
  return mismatches == 0;
}

// ---------------------------------------------------------------------------
// 9. Dynamization: insert/delete sequences match fresh rebuilds.
bool criterion9(std::string& detail) {
  std::size_t mismatches = 0;
  const std::size_t sequences = 100;
  for (std::size_t seq = 0; seq < sequences; ++seq) {
    std::mt19937_64 eng(derive_seed(99, 9, seq));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ptile_build_params params;
    params.eps = 0.01;
    params.failure = 0.1;
    params.bound = interval(-0.5, 1.5);

    // Pool of candidate datasets; the live set starts with the first four.
    const repository pool = gen_random_repository(10, 2, 10, 1,
                                                  point_distribution::uniform, 12000 + seq);
    owned_repo all = owned_repo::exact(pool, true);
    std::set<int> live{1, 2, 3, 4};
    std::vector<ptile_index::synopsis_ref> initial;
    for (int id : live) initial.push_back(all.refs[static_cast<std::size_t>(id) - 1]);
    ptile_index tidx = ptile_index::build_threshold(initial, params);
    ptile_index ridx = ptile_index::build_range(initial, params);

    for (int step = 0; step < 6; ++step) {
      // Mutate: insert a pooled dataset or delete a live one.
      std::vector<int> absent, present(live.begin(), live.end());
      for (int id = 1; id <= 10; ++id)
        if (!live.count(id)) absent.push_back(id);
      const bool do_insert =
          absent.empty() ? false : (present.size() <= 2 ? true : unit(eng) < 0.5);
      if (do_insert) {
        const int id = absent[static_cast<std::size_t>(unit(eng) * 1000.0) % absent.size()];
        tidx.insert_synopsis(id, *all.owners[static_cast<std::size_t>(id) - 1]);
        ridx.insert_synopsis(id, *all.owners[static_cast<std::size_t>(id) - 1]);
        live.insert(id);
      } else {
        const int id = present[static_cast<std::size_t>(unit(eng) * 1000.0) % present.size()];
        tidx.remove_synopsis(id);
        ridx.remove_synopsis(id);
        live.erase(id);
      }

      repository current;
      std::vector<ptile_index::synopsis_ref> current_refs;
      for (int id : live) {
        current.datasets.push_back(pool.datasets[static_cast<std::size_t>(id) - 1]);
        current_refs.push_back(all.refs[static_cast<std::size_t>(id) - 1]);
      }
      const ptile_index tfresh = ptile_index::build_threshold(current_refs, params);
      const ptile_index rfresh = ptile_index::build_range(current_refs, params);
      for (int q = 0; q < 10; ++q) {
        const rect r = random_rect_in(eng, interval(-0.1, 1.1));
        const double a = unit(eng), b = a + (1.0 - a) * unit(eng);
        if (ids_of(tidx.query_threshold(r, a, 0.0)) != ids_of(tfresh.query_threshold(r, a, 0.0)))
          ++mismatches;
        if (ids_of(ridx.query_range(r, a, b, 0.0)) != ids_of(rfresh.query_range(r, a, b, 0.0)))
          ++mismatches;
      }
    }
  }
  std::ostringstream ss;
  ss << sequences << " sequences, " << mismatches << " divergent queries";
  detail = ss.str();
  return mismatches == 0;
}

// ---------------------------------------------------------------------------
// 10. Output sensitivity at N = 10^4: enumeration bound and >= 10x speedup
//     over the linear-scan baseline.
bool criterion10(std::string& detail) {
  const std::size_t n_datasets = 10000;
  repository repo;
  for (std::size_t i = 1; i <= n_datasets; ++i) {
    const double base = 2.0 * static_cast<double>(i);
    repo.datasets.push_back(
        dataset{static_cast<int>(i), {{base}, {base + 0.3}, {base + 0.6}, {base + 0.9}}});
  }
  const owned_repo inst = owned_repo::exact(repo, true);
  ptile_build_params params;
  params.eps = 0.01;
  params.failure = 0.1;
  const ptile_index idx = ptile_index::build_threshold(inst.refs, params);
  std::size_t max_q = 0;
  for (int id : idx.dataset_ids()) max_q = std::max(max_q, idx.lifted_of(id).size());

  std::mt19937_64 eng(derive_seed(1010, 10, 0));
  std::uniform_int_distribution<std::size_t> start(1, n_datasets - 10);
  std::uniform_int_distribution<std::size_t> span(1, 10);
  struct workload_query {
    rect r;
    std::size_t expect_out;
  };
  std::vector<workload_query> queries;
  for (int q = 0; q < 200; ++q) {
    const std::size_t first = start(eng), count = span(eng);
    const double lo = 2.0 * static_cast<double>(first) - 0.05;
    const double hi = 2.0 * static_cast<double>(first + count - 1) + 1.0;
    queries.push_back({interval(lo, hi), count});
  }

  bool bounds_ok = true;
  std::vector<double> speedups;
  for (int pass = 0; pass < 2; ++pass) {  // first pass warms caches
    speedups.clear();
    for (const workload_query& wq : queries) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = idx.query_threshold(wq.r, 0.5, 0.0);
      const auto t1 = std::chrono::steady_clock::now();
      const std::size_t out = res.entries.size();
      if (out != wq.expect_out) bounds_ok = false;
      if (res.stats.points_enumerated > out * max_q) bounds_ok = false;

      const auto b0 = std::chrono::steady_clock::now();
      std::size_t baseline_out = 0;
      for (const dataset& ds : repo.datasets) {
        std::size_t in = 0;
        for (const point_t& p : ds.points)
          if (wq.r.contains_point(p)) ++in;
        if (2 * in >= ds.size()) ++baseline_out;  // theta = [0.5, 1]
      }
      const auto b1 = std::chrono::steady_clock::now();
      if (baseline_out != out) bounds_ok = false;
      const double wall = std::chrono::duration<double, std::nano>(t1 - t0).count();
      const double base = std::chrono::duration<double, std::nano>(b1 - b0).count();
      speedups.push_back(base / std::max(1.0, wall));
    }
  }
  std::nth_element(speedups.begin(), speedups.begin() + speedups.size() / 2, speedups.end());
  const double median = speedups[speedups.size() / 2];
  std::ostringstream ss;
  ss << "enumeration bound " << (bounds_ok ? "held" : "VIOLATED") << "; median speedup "
     << median << "x (need >= 10x)";
  detail = ss.str();
  return bounds_ok && median >= 10.0;
}

// ---------------------------------------------------------------------------
// 11. m = 2 conjunction/disjunction variants match the oracle on tiny
//     instances for both index families.
bool criterion11(std::string& detail) {
  std::size_t mismatches = 0;
  // Percentile side: 100 trials.
  for (std::size_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 eng(derive_seed(1111, 11, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> npick(2, 10);
    const repository repo = gen_random_repository(npick(eng), 1, 3, 1,
                                                  point_distribution::uniform, 13000 + trial);
    const owned_repo inst = owned_repo::exact(repo, true);
    ptile_build_params params;
    params.eps = 0.005;
    params.failure = 0.1;
    params.m = 2;
    params.bound = interval(-0.5, 1.5);
    const ptile_index idx = ptile_index::build_expression(inst.refs, params);
    for (int q = 0; q < 2; ++q) {
      auto rand_pred = [&] {
        const double a = unit(eng), b = unit(eng);
        return ptile_predicate{interval(std::min(a, b) - 0.05, std::max(a, b) + 0.05),
                               0.4 * unit(eng), 0.5 + 0.5 * unit(eng)};
      };
      const ptile_expression conj = ptile_expression::conj(
          {ptile_expression::leaf(rand_pred()), ptile_expression::leaf(rand_pred())});
      if (ids_of(idx.query_expression(conj, 0.0)) != brute_force_query(repo, conj)) ++mismatches;
      const ptile_expression disj = ptile_expression::disj(
          {ptile_expression::leaf(rand_pred()), ptile_expression::leaf(rand_pred())});
      if (ids_of(idx.query_expression(disj, 0.0)) != brute_force_query(repo, disj)) ++mismatches;
    }
  }
  // Preference side: 100 trials with query directions from the net.
  for (std::size_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 eng(derive_seed(1111, 12, trial));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> npick(2, 10);
    const repository repo = gen_random_repository(npick(eng), 1, 3, 2,
                                                  point_distribution::uniform, 14000 + trial,
                                                  /*unit_ball=*/true);
    owned_repo inst = owned_repo::exact(repo, false);
    std::vector<pref_index::synopsis_ref> refs;
    for (const auto& [id, syn] : inst.refs) refs.emplace_back(id, syn);
    pref_build_params params;
    params.eps = 0.8;
    params.k = 1;
    params.m = 2;
    params.probe_count = 2000;
    const pref_index idx = pref_index::build_conj(refs, params);
    for (int q = 0; q < 2; ++q) {
      const point_t u1 =
          idx.net().dirs[(trial * 3 + static_cast<std::size_t>(q)) % idx.net().size()];
      const point_t u2 = idx.net().dirs[(trial * 7 + 5) % idx.net().size()];
      const double a1 = 2.0 * unit(eng) - 1.0, a2 = 2.0 * unit(eng) - 1.0;
      std::vector<int> want_and, want_or;
      for (const dataset& ds : repo.datasets) {
        const bool p1 = eval_topk(ds, u1, 1) >= a1;
        const bool p2 = eval_topk(ds, u2, 1) >= a2;
        if (p1 && p2) want_and.push_back(ds.id);
        if (p1 || p2) want_or.push_back(ds.id);
      }
      const std::vector<pref_predicate> preds{{u1, 1, a1}, {u2, 1, a2}};
      if (ids_of(idx.query_and(preds, 0.0)) != want_and) ++mismatches;
      if (ids_of(idx.query_or(preds, 0.0)) != want_or) ++mismatches;
    }
  }
  std::ostringstream ss;
  ss << "200 trials (ptile + pref), " << mismatches << " mismatches";
  detail = ss.str();
  return mismatches == 0;
}

using criterion_fn = bool (*)(std::string&);

struct criterion_entry {
  int number;
  const char* name;
  criterion_fn fn;
};

const criterion_entry kCriteria[] = {
    {1, "running-example fidelity", criterion1},
    {2, "exact-coreset oracle equality", criterion2},
    {3, "sampled-coreset sandwich", criterion3},
    {4, "federated delta propagation", criterion4},
    {5, "exact 1-d structure", criterion5},
    {6, "set-intersection fixture", criterion6},
    {7, "preference guarantees", criterion7},
    {8, "dedup enumeration vs delete/re-insert", criterion8},
    {9, "dynamization consistency", criterion9},
    {10, "output sensitivity", criterion10},
    {11, "conjunction variants", criterion11},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const criterion_entry& c : kCriteria) {
    if (!wanted.empty() && !wanted.count(c.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d [%s]: %s - %s (%.1fs)\n", c.number, c.name, ok ? "PASS" : "FAIL",
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
