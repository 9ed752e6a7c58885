#include <doctest.h>

#include <stdexcept>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dspt/io.hpp"
#include "dspt/oracle.hpp"

using namespace dspt;

namespace {

struct temp_dir {
  std::filesystem::path path;
  temp_dir() {
    path = std::filesystem::temp_directory_path() /
           ("dspt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~temp_dir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("csv round trip with header detection") {
  temp_dir dir;
  {
    std::ofstream out(dir.file("d.csv"));
    out << "x,y\n1.5,2\n3,4\n";
  }
  const dataset d = load_dataset_csv(dir.file("d.csv"), 7);
  CHECK(d.id == 7);
  REQUIRE(d.points.size() == 2);
  CHECK(d.points[0] == point_t{1.5, 2.0});
  save_dataset_csv(d, dir.file("copy.csv"));
  CHECK(load_dataset_csv(dir.file("copy.csv"), 7).points == d.points);
}

TEST_CASE("jsonl datasets") {
  temp_dir dir;
  {
    std::ofstream out(dir.file("d.jsonl"));
    out << "[0.25, 1]\n[2, 3]\n";
  }
  const dataset d = load_dataset_jsonl(dir.file("d.jsonl"), 2);
  REQUIRE(d.points.size() == 2);
  CHECK(d.points[1] == point_t{2.0, 3.0});
}

TEST_CASE("histogram json round trip") {
  dataset data{1, {{0.5}, {1.5}, {1.7}}};
  const histogram_synopsis h = histogram_synopsis::build(data, 4, rect({0.0}, {2.0}), 100, 3);
  temp_dir dir;
  save_histogram_json(h, dir.file("h.json"));
  const histogram_synopsis back = load_histogram_json(dir.file("h.json"));
  CHECK(back.resolution() == 4);
  CHECK(back.cells() == h.cells());
  CHECK(back.support_size() == 3);
  REQUIRE(back.rect_error().has_value());
  CHECK(*back.rect_error() == doctest::Approx(*h.rect_error()));
}

TEST_CASE("manifest round trip and repository loading") {
  temp_dir dir;
  save_dataset_csv(dataset{1, {{1.0}, {7.0}, {9.0}}}, dir.file("a.csv"));
  save_dataset_csv(dataset{2, {{2.0}, {4.0}, {6.0}, {10.0}}}, dir.file("b.csv"));
  manifest m;
  m.name = "fixture";
  m.dimension = 1;
  m.bound = rect({0.0}, {12.0});
  m.entries.push_back({1, dir.file("a.csv"), "csv", "exact-coreset", 0, std::nullopt, false});
  m.entries.push_back({2, dir.file("b.csv"), "csv", "exact-coreset", 0, std::nullopt, false});
  save_manifest(m, dir.file("m.json"));
  const manifest back = load_manifest(dir.file("m.json"));
  CHECK(back.dimension == 1);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].synopsis == "exact-coreset");

  const loaded_repository repo = load_repository(back, 5);
  CHECK(repo.synopses.size() == 2);
  CHECK(repo.raw.datasets.size() == 2);
  REQUIRE(repo.delta_bound.has_value());
  CHECK(*repo.delta_bound == 0.0);
}

TEST_CASE("query json parsing") {
  const parsed_query q1 = parse_query_json(
      R"({"kind":"ptile","rects":[[3],[8]],"thetas":[[0.2,1]],"combine":"and"})");
  REQUIRE(std::holds_alternative<ptile_query>(q1));
  const ptile_query& p1 = std::get<ptile_query>(q1);
  REQUIRE(p1.predicates.size() == 1);
  CHECK(p1.predicates[0].region.lo == point_t{3.0});
  CHECK(p1.predicates[0].theta_hi == 1.0);

  const parsed_query q2 = parse_query_json(
      R"({"kind":"ptile","rects":[[[0,0],[1,1]],[[2,2],[3,3]]],"thetas":[[0,0.5],[0.5,1]],"combine":"or","slack":0.0})");
  const ptile_query& p2 = std::get<ptile_query>(q2);
  REQUIRE(p2.predicates.size() == 2);
  CHECK_FALSE(p2.conjunction);
  REQUIRE(p2.slack.has_value());

  const parsed_query q3 = parse_query_json(
      R"({"kind":"pref","vectors":[[1,0]],"k":2,"thresholds":[0.4],"combine":"and"})");
  const pref_query& p3 = std::get<pref_query>(q3);
  CHECK(p3.k == 2);
  CHECK(p3.predicates[0].k == 2);
  CHECK(p3.predicates[0].threshold == doctest::Approx(0.4));

  CHECK_THROWS(parse_query_json(R"({"kind":"nope"})"));
  // Round trip through the canonical writer.
  CHECK_NOTHROW(parse_query_json(query_to_json(q2)));
}

TEST_CASE("index persistence round trips and is byte-deterministic") {
  temp_dir dir;
  repository repo;
  repo.datasets.push_back(dataset{1, {{1.0}, {7.0}, {9.0}}});
  repo.datasets.push_back(dataset{2, {{2.0}, {4.0}, {6.0}, {10.0}}});
  std::vector<std::unique_ptr<exact_synopsis>> owners;
  std::vector<ptile_index::synopsis_ref> refs;
  for (const dataset& d : repo.datasets) {
    owners.push_back(std::make_unique<exact_synopsis>(d, true));
    refs.emplace_back(d.id, owners.back().get());
  }
  ptile_build_params params;
  params.eps = 0.005;
  params.failure = 0.1;
  params.bound = rect({0.0}, {12.0});
  params.seed = 42;

  const stored_index idx{index_kind::ptile_range,
                         ptile_index::build_range(refs, params)};
  save_index(idx, dir.file("a.dspt"));
  save_index(stored_index{index_kind::ptile_range, ptile_index::build_range(refs, params)},
             dir.file("b.dspt"));
  CHECK(slurp(dir.file("a.dspt")) == slurp(dir.file("b.dspt")));  // same seed, same bytes

  const stored_index back = load_index(dir.file("a.dspt"));
  CHECK(back.kind == index_kind::ptile_range);
  CHECK(back.ptile().eps() == params.eps);
  auto got = back.ptile().query_range(rect({3.0}, {8.0}), 0.2, 0.4);
  REQUIRE(got.entries.size() == 1);
  CHECK(got.entries[0].index == 1);

  // Pref round trip.
  std::vector<std::unique_ptr<exact_synopsis>> powners;
  std::vector<pref_index::synopsis_ref> prefs;
  repository ball = gen_random_repository(5, 2, 8, 2, point_distribution::uniform, 3, true);
  for (const dataset& d : ball.datasets) {
    powners.push_back(std::make_unique<exact_synopsis>(d));
    prefs.emplace_back(d.id, powners.back().get());
  }
  pref_build_params pparams;
  pparams.eps = 0.5;
  pparams.k = 1;
  save_index(stored_index{index_kind::pref_single, pref_index::build(prefs, pparams)},
             dir.file("p.dspt"));
  const stored_index pback = load_index(dir.file("p.dspt"));
  CHECK(pback.pref().k() == 1);
  CHECK(pback.pref().dataset_ids().size() == 5);

  CHECK_THROWS(load_index(dir.file("missing.dspt")));
}

TEST_CASE("result jsonl shape") {
  ptile_query_result r;
  r.entries.push_back({4, {0.25}});
  std::ostringstream out;
  write_result_jsonl(out, r);
  CHECK(out.str() == "{\"index\":4,\"measures\":[0.25]}\n");
}
