#include "dspt/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dspt/rng.hpp"

namespace dspt {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(tok, &used);
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    return used == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ';' || c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (std::string& tok : out) {
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.erase(tok.begin());
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.pop_back();
  }
  return out;
}

rect rect_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi"))
    throw std::runtime_error("rect json needs lo/hi arrays");
  return rect(j.at("lo").get<point_t>(), j.at("hi").get<point_t>());
}

json rect_to_json(const rect& r) { return json{{"lo", r.lo}, {"hi", r.hi}}; }

// --- binary container ------------------------------------------------------

class byte_writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void write_rect(const rect& r) {
    doubles(r.lo);
    doubles(r.hi);
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class byte_reader {
 public:
  explicit byte_reader(std::string data) : data_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  rect read_rect() {
    auto lo = doubles();
    auto hi = doubles();
    return rect(std::move(lo), std::move(hi));
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw std::runtime_error("index file truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string data_;
  std::size_t pos_ = 0;
};

void write_points(byte_writer& w, const std::vector<weighted_point>& pts) {
  w.u64(pts.size());
  for (const weighted_point& p : pts) {
    w.doubles(p.coords);
    w.u64(p.weights.size());
    for (const rat64& r : p.weights) {
      w.i64(r.num);
      w.i64(r.den);
    }
    w.i64(p.tag);
  }
}

std::vector<weighted_point> read_points(byte_reader& r) {
  const std::uint64_t n = r.u64();
  std::vector<weighted_point> pts(n);
  for (auto& p : pts) {
    p.coords = r.doubles();
    const std::uint64_t wn = r.u64();
    p.weights.resize(wn);
    for (auto& w : p.weights) {
      w.num = r.i64();
      w.den = r.i64();
    }
    p.tag = static_cast<int>(r.i64());
  }
  return pts;
}

constexpr char kMagic[5] = {'D', 'S', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

dataset load_dataset_csv(const std::string& path, int id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  dataset d{id, {}};
  std::string line;
  bool first = true;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    point_t p;
    p.reserve(toks.size());
    bool ok = !toks.empty();
    for (const std::string& tok : toks) {
      double v;
      if (!parse_double(tok, v)) {
        ok = false;
        break;
      }
      p.push_back(v);
    }
    if (!ok) {
      if (first) {
        first = false;  // header row
        continue;
      }
      throw std::runtime_error("bad CSV row in " + path + ": " + line);
    }
    if (dim == 0) dim = p.size();
    if (p.size() != dim) throw std::runtime_error("inconsistent CSV arity in " + path);
    d.points.push_back(std::move(p));
    first = false;
  }
  if (d.points.empty()) throw std::runtime_error("empty dataset: " + path);
  return d;
}

dataset load_dataset_jsonl(const std::string& path, int id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  dataset d{id, {}};
  std::string line;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (!j.is_array()) throw std::runtime_error("JSONL rows must be arrays in " + path);
    point_t p = j.get<point_t>();
    if (dim == 0) dim = p.size();
    if (p.size() != dim) throw std::runtime_error("inconsistent JSONL arity in " + path);
    d.points.push_back(std::move(p));
  }
  if (d.points.empty()) throw std::runtime_error("empty dataset: " + path);
  return d;
}

void save_dataset_csv(const dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.precision(17);
  for (const point_t& p : d.points) {
    for (std::size_t h = 0; h < p.size(); ++h) out << (h ? "," : "") << p[h];
    out << "\n";
  }
}

histogram_synopsis load_histogram_json(const std::string& path) {
  const json j = json::parse(read_file(path));
  const rect box = rect_from_json(j.at("box"));
  const std::size_t resolution = j.at("resolution").get<std::size_t>();
  std::map<std::uint64_t, std::uint64_t> cells;
  std::size_t n = 0;
  for (const auto& [key, val] : j.at("cells").items()) {
    if (!val.is_array() || val.size() != 2)
      throw std::runtime_error("histogram cells must map to [count, n]");
    cells[std::stoull(key)] = val[0].get<std::uint64_t>();
    n = val[1].get<std::size_t>();
  }
  std::optional<double> cert;
  if (j.contains("certified_delta")) cert = j.at("certified_delta").get<double>();
  return histogram_synopsis(box, resolution, n, std::move(cells), cert);
}

void save_histogram_json(const histogram_synopsis& h, const std::string& path) {
  json cells = json::object();
  for (const auto& [flat, count] : h.cells())
    cells[std::to_string(flat)] = json::array({count, h.support_size()});
  json j{{"box", rect_to_json(h.box())}, {"resolution", h.resolution()}, {"cells", cells}};
  if (h.rect_error()) j["certified_delta"] = *h.rect_error();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write histogram: " + path);
  out << j.dump(2) << "\n";
}

manifest load_manifest(const std::string& path) {
  const json j = json::parse(read_file(path));
  manifest m;
  m.name = j.value("name", "");
  m.dimension = j.at("dimension").get<std::size_t>();
  if (j.contains("bounding_box")) m.bound = rect_from_json(j.at("bounding_box"));
  int next_id = 1;
  for (const json& e : j.at("datasets")) {
    manifest_entry entry;
    entry.id = e.value("id", next_id);
    next_id = entry.id + 1;
    entry.path = e.at("path").get<std::string>();
    entry.format = e.value("format", "csv");
    entry.synopsis = e.value("synopsis", "exact");
    entry.resolution = e.value("resolution", std::size_t{0});
    if (e.contains("delta")) {
      if (e.at("delta").is_string()) {
        if (e.at("delta").get<std::string>() != "unknown")
          throw std::runtime_error("manifest delta must be a number or \"unknown\"");
        entry.delta_unknown = true;
      } else {
        entry.delta = e.at("delta").get<double>();
        if (!(*entry.delta >= 0.0 && *entry.delta < 1.0))
          throw std::runtime_error("manifest delta must be in [0,1)");
      }
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void save_manifest(const manifest& m, const std::string& path) {
  json datasets = json::array();
  for (const manifest_entry& e : m.entries) {
    json je{{"id", e.id}, {"path", e.path}, {"format", e.format}, {"synopsis", e.synopsis}};
    if (e.resolution) je["resolution"] = e.resolution;
    if (e.delta_unknown)
      je["delta"] = "unknown";
    else if (e.delta)
      je["delta"] = *e.delta;
    datasets.push_back(std::move(je));
  }
  json j{{"name", m.name}, {"dimension", m.dimension}, {"datasets", datasets}};
  if (m.bound) j["bounding_box"] = rect_to_json(*m.bound);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

loaded_repository load_repository(const manifest& m, std::uint64_t seed) {
  loaded_repository out;
  out.bound = m.bound;
  out.dimension = m.dimension;
  double delta_max = 0.0;
  bool delta_all_known = true;
  for (const manifest_entry& e : m.entries) {
    std::unique_ptr<synopsis> syn;
    if (e.format == "histogram") {
      auto hist = std::make_unique<histogram_synopsis>(load_histogram_json(e.path));
      if (e.delta_unknown) hist->set_certified_rect_error(std::nullopt);
      else if (e.delta) hist->set_certified_rect_error(*e.delta);
      syn = std::move(hist);
    } else {
      dataset d = e.format == "jsonl" ? load_dataset_jsonl(e.path, e.id)
                                      : load_dataset_csv(e.path, e.id);
      if (d.dim() != m.dimension)
        throw std::runtime_error("dataset dimension mismatch in " + e.path);
      out.raw.datasets.push_back(d);
      if (e.synopsis == "histogram") {
        if (!m.bound) throw std::runtime_error("histogram synopsis needs a manifest bounding box");
        if (e.resolution == 0) throw std::runtime_error("histogram synopsis needs a resolution");
        auto hist = std::make_unique<histogram_synopsis>(histogram_synopsis::build(
            d, e.resolution, *m.bound, 2000,
            derive_seed(seed, seed_purpose::probe, static_cast<std::uint64_t>(e.id))));
        if (e.delta_unknown) hist->set_certified_rect_error(std::nullopt);
        else if (e.delta) hist->set_certified_rect_error(*e.delta);
        syn = std::move(hist);
      } else {
        syn = std::make_unique<exact_synopsis>(std::move(d), e.synopsis == "exact-coreset");
      }
    }
    if (e.delta_unknown || !syn->rect_error().has_value()) delta_all_known = false;
    else delta_max = std::max(delta_max, *syn->rect_error());
    out.synopses.emplace_back(e.id, std::move(syn));
  }
  if (delta_all_known) out.delta_bound = delta_max;
  return out;
}

parsed_query parse_query_json(const std::string& text) {
  const json j = json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ptile") {
    ptile_query q;
    const json& rects = j.at("rects");
    std::vector<rect> regions;
    if (rects.is_array() && rects.size() == 2 && rects[0].is_array() && !rects[0].empty() &&
        rects[0][0].is_number()) {
      regions.push_back(rect(rects[0].get<point_t>(), rects[1].get<point_t>()));
    } else {
      for (const json& r : rects) {
        if (!r.is_array() || r.size() != 2)
          throw std::runtime_error("each rect must be [[lo...],[hi...]]");
        regions.push_back(rect(r[0].get<point_t>(), r[1].get<point_t>()));
      }
    }
    const json& thetas = j.at("thetas");
    if (thetas.size() != regions.size())
      throw std::runtime_error("rects and thetas must have equal length");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const json& th = thetas[i];
      if (!th.is_array() || th.size() != 2) throw std::runtime_error("each theta must be [a,b]");
      q.predicates.push_back(
          ptile_predicate{regions[i], th[0].get<double>(), th[1].get<double>()});
    }
    q.conjunction = j.value("combine", "and") == "and";
    if (j.contains("slack")) q.slack = j.at("slack").get<double>();
    return q;
  }
  if (kind == "pref") {
    pref_query q;
    q.k = j.at("k").get<std::size_t>();
    for (const json& v : j.at("vectors")) {
      pref_predicate p;
      p.direction = v.get<point_t>();
      p.k = q.k;
      q.predicates.push_back(std::move(p));
    }
    const json& th = j.at("thresholds");
    if (th.size() != q.predicates.size())
      throw std::runtime_error("vectors and thresholds must have equal length");
    for (std::size_t i = 0; i < q.predicates.size(); ++i)
      q.predicates[i].threshold = th[i].get<double>();
    q.conjunction = j.value("combine", "and") == "and";
    if (j.contains("slack")) q.slack = j.at("slack").get<double>();
    return q;
  }
  throw std::runtime_error("unknown query kind: " + kind);
}

std::string query_to_json(const parsed_query& q) {
  json j;
  if (std::holds_alternative<ptile_query>(q)) {
    const ptile_query& p = std::get<ptile_query>(q);
    j["kind"] = "ptile";
    json rects = json::array(), thetas = json::array();
    for (const ptile_predicate& pred : p.predicates) {
      rects.push_back(json::array({pred.region.lo, pred.region.hi}));
      thetas.push_back(json::array({pred.theta_lo, pred.theta_hi}));
    }
    j["rects"] = rects;
    j["thetas"] = thetas;
    j["combine"] = p.conjunction ? "and" : "or";
    if (p.slack) j["slack"] = *p.slack;
  } else {
    const pref_query& p = std::get<pref_query>(q);
    j["kind"] = "pref";
    json vectors = json::array(), thresholds = json::array();
    for (const pref_predicate& pred : p.predicates) {
      vectors.push_back(pred.direction);
      thresholds.push_back(pred.threshold);
    }
    j["vectors"] = vectors;
    j["thresholds"] = thresholds;
    j["k"] = p.k;
    j["combine"] = p.conjunction ? "and" : "or";
    if (p.slack) j["slack"] = *p.slack;
  }
  return j.dump();
}

void write_result_jsonl(std::ostream& out, const ptile_query_result& r) {
  for (const report_entry& e : r.entries) {
    json j{{"index", e.index}, {"measures", e.measures}};
    if (r.weakened_contract) j["weakened_contract"] = true;
    out << j.dump() << "\n";
  }
}

void write_result_jsonl(std::ostream& out, const pref_query_result& r) {
  for (const pref_report_entry& e : r.entries) {
    json j{{"index", e.index}, {"measures", e.scores}};
    if (!r.excluded.empty()) j["excluded"] = r.excluded;
    if (r.weakened_contract) j["weakened_contract"] = true;
    out << j.dump() << "\n";
  }
}

void save_index(const stored_index& idx, const std::string& path) {
  byte_writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(idx.kind));
  if (idx.kind == index_kind::pref_single || idx.kind == index_kind::pref_conjunction) {
    const pref_index& p = idx.pref();
    w.f64(p.eps());
    w.f64(p.delta());
    w.u64(p.k());
    w.u64(p.arity());
    w.u64(p.dim());
    w.u64(p.seed());
    w.u64(p.max_subsets());
    w.u8(p.delta_known() ? 1 : 0);
    w.f64(p.net().eps);
    w.u64(p.net().size());
    for (const point_t& v : p.net().dirs) w.doubles(v);
    w.u64(p.score_rows().size());
    for (const auto& [id, row] : p.score_rows()) {
      w.i64(id);
      w.doubles(row);
    }
    w.u64(p.excluded_ids().size());
    for (int id : p.excluded_ids()) w.i64(id);
  } else {
    const ptile_index& p = idx.ptile();
    w.u8(static_cast<std::uint8_t>(p.mode()));
    w.u64(p.dim());
    w.f64(p.eps());
    w.f64(p.failure());
    w.f64(p.delta());
    w.u64(p.seed());
    w.f64(p.size_constant());
    w.u64(p.arity());
    w.u64(p.per_dataset_cap());
    w.u8(p.full_pair_set() ? 1 : 0);
    w.u8(p.bound() ? 1 : 0);
    if (p.bound()) w.write_rect(*p.bound());
    w.u8(p.delta_known() ? 1 : 0);
    w.u64(p.entries().size());
    for (const auto& [id, e] : p.entries()) {
      w.i64(id);
      w.u64(e.coreset.size());
      for (const point_t& pt : e.coreset) w.doubles(pt);
      write_points(w, e.lifted);
      write_points(w, e.lifted_single);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index: " + path);
  out << w.str();
}

stored_index load_index(const std::string& path) {
  byte_reader r(read_file(path));
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c)) throw std::runtime_error("not a DSPT1 index file");
  if (r.u32() != kVersion) throw std::runtime_error("unsupported index version");
  const index_kind kind = static_cast<index_kind>(r.u8());
  if (kind == index_kind::pref_single || kind == index_kind::pref_conjunction) {
    pref_build_params params;
    params.eps = r.f64();
    params.delta = r.f64();
    params.k = r.u64();
    params.m = r.u64();
    const std::size_t dim = r.u64();
    params.seed = r.u64();
    params.max_subsets = r.u64();
    const bool delta_known = r.u8() != 0;
    eps_net net;
    net.eps = r.f64();
    net.dim = dim;
    const std::uint64_t nc = r.u64();
    net.dirs.reserve(nc);
    for (std::uint64_t i = 0; i < nc; ++i) net.dirs.push_back(r.doubles());
    std::map<int, std::vector<double>> scores;
    const std::uint64_t ns = r.u64();
    for (std::uint64_t i = 0; i < ns; ++i) {
      const int id = static_cast<int>(r.i64());
      scores[id] = r.doubles();
    }
    std::vector<int> excluded(r.u64());
    for (auto& id : excluded) id = static_cast<int>(r.i64());
    return stored_index{kind, pref_index::from_parts(std::move(net), params, dim, delta_known,
                                                     std::move(scores), std::move(excluded))};
  }
  const ptile_mode mode = static_cast<ptile_mode>(r.u8());
  const std::size_t dim = r.u64();
  ptile_build_params params;
  params.eps = r.f64();
  params.failure = r.f64();
  params.delta = r.f64();
  params.seed = r.u64();
  params.size_constant = r.f64();
  params.m = r.u64();
  params.per_dataset_cap = r.u64();
  params.full_pair_set = r.u8() != 0;
  if (r.u8() != 0) params.bound = r.read_rect();
  const bool delta_known = r.u8() != 0;
  std::map<int, ptile_index::entry> entries;
  const std::uint64_t ne = r.u64();
  for (std::uint64_t i = 0; i < ne; ++i) {
    const int id = static_cast<int>(r.i64());
    ptile_index::entry e;
    const std::uint64_t cs = r.u64();
    e.coreset.reserve(cs);
    for (std::uint64_t c = 0; c < cs; ++c) e.coreset.push_back(r.doubles());
    e.lifted = read_points(r);
    e.lifted_single = read_points(r);
    entries.emplace(id, std::move(e));
  }
  return stored_index{kind,
                      ptile_index::from_parts(mode, dim, params, delta_known, std::move(entries))};
}

}  // namespace dspt
