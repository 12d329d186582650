#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treecal/engine.hpp"

namespace treecal {

/// One experiment. Every field maps to a config key of the same name.
struct RunConfig {
  std::string domain = "simplex";  ///< simplex | l2ball | l1ball | box
  std::size_t d = 3;
  double radius = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  /// constant | vertex-cycle | iid-vertices | iid-dirichlet | drifting | farthest-vertex
  std::string adversary = "iid-dirichlet";
  Vector constant;  ///< empty: vertex 0
  std::size_t period = 0;
  std::vector<double> weights;
  std::vector<double> alpha{1.0};
  Vector start;  ///< empty: vertex 0
  Vector end;    ///< empty: last vertex

  /// treecal | treeswap-ftl | treeswap-btl | sample-treecal
  std::string algorithm = "treecal";
  int H = 4;
  int L = 3;
  std::uint64_t T = 0;  ///< 0: S * H^L
  std::uint64_t S = 1;

  std::string regularizer = "euclidean";  ///< euclidean | negentropy
  std::vector<NormKind> norms{NormKind::L1, NormKind::L2};
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";  ///< csv | json
  std::string run_id = "1";

  std::vector<int> sweep_H;
  std::vector<int> sweep_L;
  std::vector<std::uint64_t> sweep_T;
  std::vector<std::size_t> sweep_d;
  std::vector<std::uint64_t> sweep_seeds;
};

/// Sets one key from its textual value. Throws ConfigError for unknown keys
/// and unparsable values.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; `#` starts a comment; blank lines ignored.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Total rounds actually played (T, or S * H^L when T = 0).
std::uint64_t effective_T(const RunConfig& cfg);
Domain make_domain(const RunConfig& cfg);
AdversarySpec make_adversary_spec(const RunConfig& cfg, const Domain& domain);
Regularizer make_regularizer(const RunConfig& cfg, const Domain& domain);
/// Throws ConfigError naming the violated constraint.
void validate_config(const RunConfig& cfg);

/// Seeds derived from cfg.seed: one child stream per adversary and sampler.
std::uint64_t adversary_seed(const RunConfig& cfg);
std::uint64_t sampler_seed(const RunConfig& cfg);

struct ReportRow {
  std::string run_id;
  std::string algorithm;
  std::string domain;
  std::size_t d = 0;
  int H = 0;
  int L = 0;
  std::uint64_t T = 0;
  std::uint64_t S = 0;
  std::string adversary;
  std::string regularizer;
  std::string norm;  ///< "-" for norm-free metrics
  std::string metric;
  double value = 0.0;
  double b_realized = 0.0;
  std::optional<double> bound;
  std::optional<bool> bound_ok;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  /// False for rows that report a check without failing the run.
  bool enforced = true;
};

/// Column order of the CSV output.
const std::vector<std::string>& csv_columns();
std::string csv_header();
std::string to_csv(const ReportRow& row);
/// CSV without the wall_ms column, for reproducibility comparisons.
std::string to_csv_stable(const ReportRow& row);
void write_rows(std::ostream& out, const std::vector<ReportRow>& rows, const std::string& format);

/// True when every enforced bound row holds.
bool rows_ok(const std::vector<ReportRow>& rows);

struct ExperimentOutput {
  std::vector<ReportRow> rows;
  /// The transcript scored by the norm rows (the pure transcript, shown as
  /// point masses, for sample-treecal).
  std::optional<Transcript> transcript;
  std::vector<AssignmentEvent> assignments;
};

/// Runs the full protocol for one configuration and scores it.
ExperimentOutput run_experiment_full(const RunConfig& cfg, bool record_assignments = false);
std::vector<ReportRow> run_experiment(const RunConfig& cfg);

struct SweepResult {
  std::vector<ReportRow> rows;
  std::vector<std::string> skipped;  ///< reasons for invalid grid points
  std::size_t runs = 0;
};

/// Cartesian product over (H, L, T, d), lexicographic, then seeds. Empty axes
/// keep the base value.
SweepResult run_sweep(const RunConfig& base);

}  // namespace treecal
