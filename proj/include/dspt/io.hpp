#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dspt/oracle.hpp"
#include "dspt/pref.hpp"
#include "dspt/ptile.hpp"
#include "dspt/synopsis.hpp"

namespace dspt {

/// Dataset files: CSV (one row per point, d numeric columns, optional header)
/// or JSONL (one JSON array per line).
dataset load_dataset_csv(const std::string& path, int id);
dataset load_dataset_jsonl(const std::string& path, int id);
void save_dataset_csv(const dataset& d, const std::string& path);

/// Histogram synopsis JSON: box, resolution, and a sparse cell map
/// {flat-cell-index: [count, n]}.
histogram_synopsis load_histogram_json(const std::string& path);
void save_histogram_json(const histogram_synopsis& h, const std::string& path);

/// One repository entry of a manifest.
struct manifest_entry {
  int id = 0;
  std::string path;
  std::string format;    // csv | jsonl | histogram
  std::string synopsis;  // exact | exact-coreset | histogram
  std::size_t resolution = 0;             // histogram synopsis built from raw data
  std::optional<double> delta;            // declared error bound
  bool delta_unknown = false;             // declared as "unknown"
};

struct manifest {
  std::string name;
  std::size_t dimension = 0;
  std::optional<rect> bound;
  std::vector<manifest_entry> entries;
};

manifest load_manifest(const std::string& path);
void save_manifest(const manifest& m, const std::string& path);

/// Materialized repository input: synopses (owning) plus raw datasets where
/// the manifest provides them (exact modes and histograms built from raw
/// files; empty for pre-built histogram files).
struct loaded_repository {
  std::vector<std::pair<int, std::unique_ptr<synopsis>>> synopses;
  repository raw;  // datasets with raw points available
  std::optional<rect> bound;
  std::size_t dimension = 0;
  /// Largest known synopsis rectangle-error bound; unset when any entry
  /// declared "unknown".
  std::optional<double> delta_bound;
};

loaded_repository load_repository(const manifest& m, std::uint64_t seed);

/// Queries as accepted on the CLI.
struct ptile_query {
  std::vector<ptile_predicate> predicates;
  bool conjunction = true;  // "combine": "and" | "or"
  std::optional<double> slack;
};

struct pref_query {
  std::vector<pref_predicate> predicates;
  std::size_t k = 1;
  bool conjunction = true;
  std::optional<double> slack;
};

using parsed_query = std::variant<ptile_query, pref_query>;

parsed_query parse_query_json(const std::string& text);
std::string query_to_json(const parsed_query& q);

/// Result lines: {"index": j, "measures": [...]} per reported index.
void write_result_jsonl(std::ostream& out, const ptile_query_result& r);
void write_result_jsonl(std::ostream& out, const pref_query_result& r);

/// Index persistence; versioned binary container with magic "DSPT1".
enum class index_kind : std::uint8_t {
  ptile_threshold = 0,
  ptile_range = 1,
  ptile_expression = 2,
  pref_single = 3,
  pref_conjunction = 4,
};

struct stored_index {
  index_kind kind;
  std::variant<ptile_index, pref_index> index;

  ptile_index& ptile() { return std::get<ptile_index>(index); }
  const ptile_index& ptile() const { return std::get<ptile_index>(index); }
  pref_index& pref() { return std::get<pref_index>(index); }
  const pref_index& pref() const { return std::get<pref_index>(index); }
};

void save_index(const stored_index& idx, const std::string& path);
stored_index load_index(const std::string& path);

}  // namespace dspt
