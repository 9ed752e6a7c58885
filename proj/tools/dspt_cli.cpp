// Command-line front end: build, query, verify, bench, update.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dspt/io.hpp"
#include "dspt/oracle.hpp"
#include "dspt/rng.hpp"

namespace {

using namespace dspt;
using nlohmann::json;

std::size_t worker_count() {
  if (const char* env = std::getenv("DSPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

template <typename Fn>
void parallel_trials(std::size_t trials, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), trials == 0 ? std::size_t{1} : trials);
  if (workers <= 1) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < trials; t += workers) fn(t);
    });
  for (auto& th : pool) th.join();
}

std::vector<ptile_index::synopsis_ref> synopsis_refs(const loaded_repository& repo) {
  std::vector<ptile_index::synopsis_ref> refs;
  refs.reserve(repo.synopses.size());
  for (const auto& [id, syn] : repo.synopses) refs.emplace_back(id, syn.get());
  return refs;
}

index_kind kind_of_mode(const std::string& mode) {
  if (mode == "ptile-threshold") return index_kind::ptile_threshold;
  if (mode == "ptile-range") return index_kind::ptile_range;
  if (mode == "ptile-expr") return index_kind::ptile_expression;
  if (mode == "pref") return index_kind::pref_single;
  if (mode == "pref-conj") return index_kind::pref_conjunction;
  throw std::runtime_error("unknown mode: " + mode);
}

stored_index build_index(const std::string& mode, const loaded_repository& repo, double eps,
                         double failure, std::optional<double> delta_flag, std::uint64_t seed,
                         std::size_t m, std::size_t k, std::size_t cap, double size_constant,
                         bool log_sizes) {
  const index_kind kind = kind_of_mode(mode);
  const double delta = delta_flag ? *delta_flag : repo.delta_bound.value_or(0.0);
  if (kind == index_kind::pref_single || kind == index_kind::pref_conjunction) {
    pref_build_params params;
    params.eps = eps;
    params.delta = delta;
    params.k = k;
    params.m = kind == index_kind::pref_conjunction ? m : 1;
    params.seed = seed;
    std::vector<pref_index::synopsis_ref> refs;
    for (const auto& [id, syn] : repo.synopses) refs.emplace_back(id, syn.get());
    return stored_index{kind, kind == index_kind::pref_conjunction
                                  ? pref_index::build_conj(refs, params)
                                  : pref_index::build(refs, params)};
  }
  ptile_build_params params;
  params.eps = eps;
  params.failure = failure;
  params.delta = delta;
  params.seed = seed;
  params.size_constant = size_constant;
  params.m = m;
  params.per_dataset_cap = cap;
  params.bound = repo.bound;
  ptile_index built = [&] {
    switch (kind) {
      case index_kind::ptile_threshold:
        return ptile_index::build_threshold(synopsis_refs(repo), params);
      case index_kind::ptile_range:
        return ptile_index::build_range(synopsis_refs(repo), params);
      default:
        return ptile_index::build_expression(synopsis_refs(repo), params);
    }
  }();
  stored_index out{kind, std::move(built)};
  if (log_sizes) {
    const ptile_index& idx = out.ptile();
    for (int id : idx.dataset_ids())
      std::cerr << "dataset " << id << ": coreset=" << idx.coreset_of(id).size()
                << " lifted=" << idx.lifted_of(id).size() << "\n";
  }
  return out;
}

ptile_expression expression_of(const ptile_query& q) {
  std::vector<ptile_expression> leaves;
  leaves.reserve(q.predicates.size());
  for (const ptile_predicate& p : q.predicates) leaves.push_back(ptile_expression::leaf(p));
  if (leaves.size() == 1) return leaves.front();
  return q.conjunction ? ptile_expression::conj(std::move(leaves))
                       : ptile_expression::disj(std::move(leaves));
}

int run_query(const stored_index& idx, const parsed_query& q) {
  if (std::holds_alternative<pref_query>(q)) {
    if (idx.kind != index_kind::pref_single && idx.kind != index_kind::pref_conjunction)
      throw std::runtime_error("query kind does not match index mode");
    const pref_query& pq = std::get<pref_query>(q);
    if (pq.k != idx.pref().k()) throw std::runtime_error("query k does not match the built index");
    pref_query_result res;
    if (pq.predicates.size() == 1)
      res = idx.pref().query(pq.predicates.front().direction, pq.predicates.front().threshold,
                             pq.slack);
    else if (pq.conjunction)
      res = idx.pref().query_and(pq.predicates, pq.slack);
    else
      res = idx.pref().query_or(pq.predicates, pq.slack);
    write_result_jsonl(std::cout, res);
    return 0;
  }
  if (idx.kind == index_kind::pref_single || idx.kind == index_kind::pref_conjunction)
    throw std::runtime_error("query kind does not match index mode");
  const ptile_query& pq = std::get<ptile_query>(q);
  const ptile_query_result res = idx.ptile().query_expression(expression_of(pq), pq.slack);
  write_result_jsonl(std::cout, res);
  return 0;
}

struct verify_totals {
  std::size_t trials = 0;
  std::size_t completeness_violations = 0;
  std::size_t soundness_violations = 0;
  std::size_t failed_trials = 0;
};

rect random_query_rect(std::mt19937_64& eng, const rect& inner_box) {
  const std::size_t d = inner_box.dim();
  point_t lo(d), hi(d);
  for (std::size_t h = 0; h < d; ++h) {
    std::uniform_real_distribution<double> coord(inner_box.lo[h], inner_box.hi[h]);
    const double a = coord(eng), b = coord(eng);
    lo[h] = std::min(a, b);
    hi[h] = std::max(a, b);
  }
  return rect(std::move(lo), std::move(hi));
}

int run_verify(const std::string& mode, const manifest& mf, std::size_t trials, std::uint64_t seed,
               double eps, double failure, std::size_t k) {
  loaded_repository repo = load_repository(mf, seed);
  if (repo.raw.datasets.size() != repo.synopses.size())
    throw std::runtime_error("verify needs raw datasets for every entry");
  const stored_index idx =
      build_index(mode, repo, eps, failure, std::nullopt, seed, 2, k, 200000, 0.5, false);
  const double delta = repo.delta_bound.value_or(0.0);
  const bool exact_mode = delta == 0.0;

  rect data_box = repo.bound.value_or([&] {
    point_t lo = repo.raw.datasets.front().points.front();
    point_t hi = lo;
    for (const dataset& ds : repo.raw.datasets)
      for (const point_t& p : ds.points)
        for (std::size_t h = 0; h < p.size(); ++h) {
          lo[h] = std::min(lo[h], p[h]);
          hi[h] = std::max(hi[h], p[h]);
        }
    for (std::size_t h = 0; h < lo.size(); ++h) {
      const double margin = 0.1 * (hi[h] - lo[h]) + 1e-3;
      lo[h] -= margin;
      hi[h] += margin;
    }
    return rect(lo, hi);
  }());
  // Keep query rectangles strictly inside the box.
  rect inner = data_box;
  for (std::size_t h = 0; h < inner.dim(); ++h) {
    const double margin = 1e-6 * (inner.hi[h] - inner.lo[h] + 1.0);
    inner.lo[h] += margin;
    inner.hi[h] -= margin;
  }

  std::vector<verify_totals> per_worker(trials);
  parallel_trials(trials, [&](std::size_t t) {
    std::mt19937_64 eng(derive_seed(seed, seed_purpose::query, t));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    verify_totals& tally = per_worker[t];
    tally.trials = 1;
    bool failed = false;

    if (idx.kind == index_kind::pref_single) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      point_t u(repo.dimension);
      double norm = 0.0;
      while (norm < 1e-9) {
        for (double& c : u) c = gauss(eng);
        norm = vector_norm(u);
      }
      for (double& c : u) c /= norm;
      const double a = unit(eng);
      const pref_query_result res = idx.pref().query(u, a);
      std::vector<int> got;
      for (const auto& e : res.entries) got.push_back(e.index);
      std::sort(got.begin(), got.end());
      for (const dataset& ds : repo.raw.datasets) {
        if (ds.size() < k) continue;
        const double truth = eval_topk(ds, u, k);
        const bool reported = std::binary_search(got.begin(), got.end(), ds.id);
        if (truth >= a && !reported) {
          tally.completeness_violations++;
          failed = true;
        }
        if (reported && truth < a - eps - 2.0 * delta - 1e-12) {
          tally.soundness_violations++;
          failed = true;
        }
      }
    } else {
      const rect r = random_query_rect(eng, inner);
      const double a = unit(eng);
      const bool threshold = idx.kind == index_kind::ptile_threshold;
      const double b = threshold ? 1.0 : a + (1.0 - a) * unit(eng);
      const ptile_query_result res = threshold ? idx.ptile().query_threshold(r, a)
                                               : idx.ptile().query_range(r, a, b);
      std::vector<int> got;
      for (const auto& e : res.entries) got.push_back(e.index);
      std::sort(got.begin(), got.end());
      const rat64 lo_ok = endpoint_sub(endpoint_from_double(a),
                                       endpoint_from_double(eps + 2.0 * delta + 1e-12));
      const rat64 hi_ok = endpoint_add(endpoint_from_double(b),
                                       endpoint_from_double(eps + 2.0 * delta + 1e-12));
      for (const dataset& ds : repo.raw.datasets) {
        const rat64 m = eval_percentile(ds, r);
        const bool qualifies =
            endpoint_from_double(a) <= m && m <= endpoint_from_double(b);
        const bool reported = std::binary_search(got.begin(), got.end(), ds.id);
        if (qualifies && !reported) {
          tally.completeness_violations++;
          failed = true;
        }
        if (reported && !(lo_ok <= m && m <= hi_ok)) {
          tally.soundness_violations++;
          failed = true;
        }
      }
    }
    if (failed) tally.failed_trials = 1;
  });

  verify_totals total;
  for (const verify_totals& t : per_worker) {
    total.trials += t.trials;
    total.completeness_violations += t.completeness_violations;
    total.soundness_violations += t.soundness_violations;
    total.failed_trials += t.failed_trials;
  }
  std::cout << "trials: " << total.trials << "\n"
            << "completeness_violations: " << total.completeness_violations << "\n"
            << "soundness_violations: " << total.soundness_violations << "\n"
            << "empirical_failure_rate: "
            << static_cast<double>(total.failed_trials) / std::max<std::size_t>(1, total.trials)
            << " (configured failure: " << failure << ")\n";
  if (exact_mode && repo.synopses.size() > 0) {
    bool all_exact_coreset = true;
    for (const manifest_entry& e : mf.entries)
      if (e.synopsis != "exact-coreset") all_exact_coreset = false;
    if (all_exact_coreset && total.completeness_violations > 0) {
      std::cout << "FAIL: completeness must be exact in exact-coreset mode\n";
      return 1;
    }
  }
  return 0;
}

int run_bench(const stored_index& idx, const std::string& workload_path) {
  const json workload = json::parse([&] {
    std::ifstream in(workload_path);
    if (!in) throw std::runtime_error("cannot open workload: " + workload_path);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }());
  json per_query = json::array();
  std::vector<double> speedups;
  for (const json& jq : workload.at("queries")) {
    const parsed_query q = parse_query_json(jq.dump());
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t out_count = 0;
    query_stats stats;
    if (std::holds_alternative<ptile_query>(q)) {
      const ptile_query& pq = std::get<ptile_query>(q);
      const ptile_query_result res = idx.ptile().query_expression(expression_of(pq), pq.slack);
      out_count = res.entries.size();
      stats = res.stats;
    } else {
      const pref_query& pq = std::get<pref_query>(q);
      const pref_query_result res = pq.predicates.size() == 1
                                        ? idx.pref().query(pq.predicates.front().direction,
                                                           pq.predicates.front().threshold, pq.slack)
                                        : (pq.conjunction ? idx.pref().query_and(pq.predicates, pq.slack)
                                                          : idx.pref().query_or(pq.predicates, pq.slack));
      out_count = res.entries.size();
      stats = res.stats;
    }
    const auto t1 = std::chrono::steady_clock::now();

    // Baseline: linear scan over the per-dataset summaries held by the index.
    std::size_t baseline_out = 0;
    const auto b0 = std::chrono::steady_clock::now();
    if (std::holds_alternative<ptile_query>(q)) {
      const ptile_query& pq = std::get<ptile_query>(q);
      const ptile_index& p = idx.ptile();
      const double slack = pq.slack.value_or(p.eps() / 2.0 + p.delta());
      for (int id : p.dataset_ids()) {
        bool keep = pq.conjunction;
        for (const ptile_predicate& pred : pq.predicates) {
          const double est = p.estimate(id, pred.region).to_double();
          const bool pass = est >= pred.theta_lo - slack && est <= pred.theta_hi + slack;
          keep = pq.conjunction ? (keep && pass) : (keep || pass);
        }
        if (keep) ++baseline_out;
      }
    } else {
      const pref_query& pq = std::get<pref_query>(q);
      const pref_index& p = idx.pref();
      const double slack = pq.slack.value_or(p.eps() / 2.0 + p.delta());
      const std::size_t vi = nearest_net_index(p.net(), pq.predicates.front().direction);
      for (int id : p.dataset_ids())
        if (p.gamma(vi, id) >= pq.predicates.front().threshold - slack) ++baseline_out;
    }
    const auto b1 = std::chrono::steady_clock::now();

    const double wall = std::chrono::duration<double, std::nano>(t1 - t0).count();
    const double baseline = std::chrono::duration<double, std::nano>(b1 - b0).count();
    speedups.push_back(baseline / std::max(1.0, wall));
    per_query.push_back(json{{"wall_ns", wall},
                             {"out", out_count},
                             {"points_enumerated", stats.points_enumerated},
                             {"nodes_visited", stats.nodes_visited},
                             {"baseline_ns", baseline},
                             {"baseline_out", baseline_out}});
  }
  json report{{"queries", per_query}};
  if (!speedups.empty()) {
    std::vector<double> s = speedups;
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    report["median_speedup"] = s[s.size() / 2];
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distribution-aware dataset search index"};
  app.require_subcommand(1);

  std::string manifest_path, mode = "ptile-threshold", out_path, index_path, query_arg,
              workload_path, add_manifest;
  double eps = 0.1, failure = 0.05, size_constant = 0.5;
  std::optional<double> delta_flag, slack;
  std::uint64_t seed = 0;
  std::size_t m = 2, k = 1, cap = 200000, trials = 100;
  std::vector<int> remove_ids;

  CLI::App* build = app.add_subcommand("build", "build an index from a manifest");
  build->add_option("--manifest", manifest_path)->required();
  build->add_option("--mode", mode)
      ->check(CLI::IsMember({"ptile-threshold", "ptile-range", "ptile-expr", "pref", "pref-conj"}));
  build->add_option("--eps", eps);
  build->add_option("--failure", failure);
  double delta_value = -1.0;
  build->add_option("--delta", delta_value);
  build->add_option("--seed", seed);
  build->add_option("--m", m);
  build->add_option("--k", k);
  build->add_option("--cap", cap);
  build->add_option("--size-constant", size_constant);
  build->add_option("--out", out_path)->required();

  CLI::App* query = app.add_subcommand("query", "run one query against an index");
  query->add_option("--index", index_path)->required();
  query->add_option("--query", query_arg, "query JSON file, or inline JSON starting with '{'")
      ->required();
  double slack_value = -1.0;
  query->add_option("--slack", slack_value);

  CLI::App* verify = app.add_subcommand("verify", "randomized comparison against the oracle");
  verify->add_option("--manifest", manifest_path)->required();
  verify->add_option("--mode", mode)
      ->check(CLI::IsMember({"ptile-threshold", "ptile-range", "pref"}));
  verify->add_option("--trials", trials);
  verify->add_option("--seed", seed);
  verify->add_option("--eps", eps);
  verify->add_option("--failure", failure);
  verify->add_option("--k", k);

  CLI::App* bench = app.add_subcommand("bench", "time queries against a linear-scan baseline");
  bench->add_option("--index", index_path)->required();
  bench->add_option("--workload", workload_path)->required();

  CLI::App* update = app.add_subcommand("update", "insert or remove synopses in an index");
  update->add_option("--index", index_path)->required();
  update->add_option("--add", add_manifest);
  update->add_option("--remove", remove_ids);
  update->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      if (delta_value >= 0.0) delta_flag = delta_value;
      const manifest mf = load_manifest(manifest_path);
      const loaded_repository repo = load_repository(mf, seed);
      const stored_index idx = build_index(mode, repo, eps, failure, delta_flag, seed, m, k, cap,
                                           size_constant, true);
      save_index(idx, out_path);
      std::cerr << "index written to " << out_path << "\n";
      return 0;
    }
    if (*query) {
      const stored_index idx = load_index(index_path);
      std::string text = query_arg;
      if (!text.empty() && text.front() != '{') text = [&] {
        std::ifstream in(query_arg);
        if (!in) throw std::runtime_error("cannot open query file: " + query_arg);
        return std::string(std::istreambuf_iterator<char>(in), {});
      }();
      parsed_query q = parse_query_json(text);
      if (slack_value >= 0.0) {
        if (std::holds_alternative<ptile_query>(q)) std::get<ptile_query>(q).slack = slack_value;
        else std::get<pref_query>(q).slack = slack_value;
      }
      return run_query(idx, q);
    }
    if (*verify) return run_verify(mode, load_manifest(manifest_path), trials, seed, eps, failure, k);
    if (*bench) return run_bench(load_index(index_path), workload_path);
    if (*update) {
      stored_index idx = load_index(index_path);
      const bool is_pref =
          idx.kind == index_kind::pref_single || idx.kind == index_kind::pref_conjunction;
      for (int id : remove_ids) {
        if (is_pref) idx.pref().remove_synopsis(id);
        else idx.ptile().remove_synopsis(id);
      }
      if (!add_manifest.empty()) {
        const manifest mf = load_manifest(add_manifest);
        const loaded_repository repo = load_repository(mf, is_pref ? idx.pref().seed() : idx.ptile().seed());
        for (const auto& [id, syn] : repo.synopses) {
          if (is_pref) idx.pref().insert_synopsis(id, *syn);
          else idx.ptile().insert_synopsis(id, *syn);
        }
      }
      save_index(idx, out_path);
      std::cerr << "index written to " << out_path << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
