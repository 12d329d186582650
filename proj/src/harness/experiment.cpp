#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "treecal/errors.hpp"
#include "treecal/harness.hpp"

namespace treecal {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Calibration restricted to keys whose point differs from `base`.
double nonbase_calibration(const Transcript& tr, NormKind kind, const Vector& base) {
  const GroupKey base_key = make_group_key(base, std::nullopt, false);
  double total = 0.0;
  for (const auto& [key, g] : conditional_means(tr, false)) {
    if (key.coords == base_key.coords) continue;
    total += g.mass * distance(g.nu, g.point, kind);
  }
  return total;
}

bool regularizer_matches(const std::string& regularizer, NormKind kind) {
  return (regularizer == "euclidean" && kind == NormKind::L2) ||
         (regularizer == "negentropy" && kind == NormKind::L1);
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "run_id", "algorithm",   "domain", "d",          "H",     "L",        "T",
      "S",      "adversary",   "regularizer", "norm",  "metric", "value", "b_realized",
      "bound",  "bound_ok",    "seed",   "wall_ms"};
  return cols;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string to_csv_stable(const ReportRow& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.algorithm << ',' << r.domain << ',' << r.d << ',' << r.H << ','
     << r.L << ',' << r.T << ',' << r.S << ',' << r.adversary << ',' << r.regularizer << ','
     << r.norm << ',' << r.metric << ',' << format_double(r.value) << ','
     << format_double(r.b_realized) << ',' << (r.bound ? format_double(*r.bound) : "") << ','
     << (r.bound_ok ? (*r.bound_ok ? "true" : "false") : "") << ',' << r.seed;
  return os.str();
}

std::string to_csv(const ReportRow& r) {
  std::ostringstream os;
  os << to_csv_stable(r) << ',' << std::fixed << std::setprecision(3) << r.wall_ms;
  return os.str();
}

void write_rows(std::ostream& out, const std::vector<ReportRow>& rows, const std::string& format) {
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json o = {{"run_id", r.run_id},   {"algorithm", r.algorithm},
                          {"domain", r.domain},   {"d", r.d},
                          {"H", r.H},             {"L", r.L},
                          {"T", r.T},             {"S", r.S},
                          {"adversary", r.adversary}, {"regularizer", r.regularizer},
                          {"norm", r.norm},       {"metric", r.metric},
                          {"value", r.value},     {"b_realized", r.b_realized},
                          {"seed", r.seed},       {"wall_ms", r.wall_ms}};
      o["bound"] = r.bound ? nlohmann::json(*r.bound) : nlohmann::json(nullptr);
      o["bound_ok"] = r.bound_ok ? nlohmann::json(*r.bound_ok) : nlohmann::json(nullptr);
      arr.push_back(std::move(o));
    }
    out << arr.dump(2) << '\n';
    return;
  }
  if (format != "csv") throw ConfigError("format must be csv or json");
  out << csv_header() << '\n';
  for (const auto& r : rows) out << to_csv(r) << '\n';
}

bool rows_ok(const std::vector<ReportRow>& rows) {
  for (const auto& r : rows) {
    if (r.enforced && r.bound_ok && !*r.bound_ok) return false;
  }
  return true;
}

ExperimentOutput run_experiment_full(const RunConfig& cfg, bool record_assignments) {
  validate_config(cfg);
  const Domain domain = make_domain(cfg);
  const Regularizer R = make_regularizer(cfg, domain);
  const std::uint64_t T = effective_T(cfg);
  const Adversary adversary(make_adversary_spec(cfg, domain), domain, adversary_seed(cfg), T);

  const auto started = std::chrono::steady_clock::now();
  ExperimentOutput out;
  std::optional<Transcript> inner;
  if (cfg.algorithm == "treecal") {
    TreeCalOptions opts;
    opts.record_assignments = record_assignments;
    RunResult r = treecal_run(domain, T, cfg.H, cfg.L, adversary, opts);
    out.transcript = std::move(r.transcript);
    out.assignments = std::move(r.assignments);
  } else if (cfg.algorithm == "treeswap-ftl" || cfg.algorithm == "treeswap-btl") {
    TreeSwapOptions opts;
    opts.record_assignments = record_assignments;
    const SubroutineFactory factory =
        cfg.algorithm == "treeswap-ftl" ? follow_the_leader() : be_the_leader();
    RunResult r = treeswap_run(factory, R, adversary, domain, T, cfg.H, cfg.L, opts);
    out.transcript = std::move(r.transcript);
    out.assignments = std::move(r.assignments);
  } else {
    SampleTreeCalResult r =
        sample_treecal_run(domain, T, cfg.H, cfg.L, cfg.S, adversary, sampler_seed(cfg));
    out.transcript = r.pure.as_transcript();
    inner = std::move(r.inner);
  }
  const Transcript& tr = *out.transcript;
  const double b = realized_loss_cap(tr, R);
  const auto Td = static_cast<double>(T);

  auto add = [&](const std::string& norm, const std::string& metric, double value,
                 std::optional<double> bound = std::nullopt, bool enforced = true) {
    ReportRow row;
    row.run_id = cfg.run_id;
    row.algorithm = cfg.algorithm;
    row.domain = cfg.domain;
    row.d = domain.dim();
    row.H = cfg.H;
    row.L = cfg.L;
    row.T = T;
    row.S = cfg.S;
    row.adversary = adversary.name();
    row.regularizer = R.name();
    row.norm = norm;
    row.metric = metric;
    row.value = value;
    row.b_realized = b;
    row.bound = bound;
    if (bound) row.bound_ok = value <= *bound;
    row.seed = cfg.seed;
    row.enforced = enforced;
    out.rows.push_back(std::move(row));
  };

  const bool sampled = cfg.algorithm == "sample-treecal";
  for (NormKind kind : cfg.norms) {
    const std::string nn = to_string(kind);
    const double cal = calibration_error(tr, NormDistance{kind}, false);
    const double cal_sq = calibration_error(tr, SquaredNormDistance{kind}, false);
    const double per_round = cal / Td;
    if (sampled) {
      add(nn, "pure_cal", cal);
      add(nn, "pure_cal_sq", cal_sq);
      add(nn, "inner_cal", calibration_error(*inner, NormDistance{kind}, false));
      add(nn, "inner_cal_sq", calibration_error(*inner, SquaredNormDistance{kind}, false));
      add(nn, "cauchy", per_round * per_round, cal_sq / Td + 1e-9);
      continue;
    }
    add(nn, "cal", cal);
    add(nn, "cal_sq", cal_sq);
    add(nn, "cal_labeled", calibration_error(tr, NormDistance{kind}, true));
    add(nn, "cal_sq_labeled", calibration_error(tr, SquaredNormDistance{kind}, true));
    add(nn, "cal_nonbase", nonbase_calibration(tr, kind, domain.base_point()));
    add(nn, "cauchy", per_round * per_round, cal_sq / Td + 1e-9);
    if (cfg.algorithm != "treeswap-btl" && regularizer_matches(cfg.regularizer, kind)) {
      const double diam = domain.diameter(kind);
      const double H = cfg.H;
      const double L = cfg.L;
      add(nn, "proof_chain_bound", cal_sq, 6.0 * b * Td / L + 2.0 * diam * diam * Td / H);
      add(nn, "earthmover_h2_flag", cal_sq, 6.0 * b * Td / L + 2.0 * diam * diam * Td / (H * H),
          false);
    }
  }

  if (!sampled) {
    add("-", "cal_bregman", calibration_error(tr, BregmanDistance{R}, false));
    const double swap = swap_regret_bregman(tr, R, true, SwapAudit::On);
    add("-", "cal_bregman_labeled", calibration_error(tr, BregmanDistance{R}, true));
    add("-", "swap_regret_labeled", swap);
    if (cfg.algorithm == "treeswap-btl") {
      add("-", "treeswap_bound", swap, 3.0 * b * Td / cfg.L + 1e-6);
    }
  }

  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  for (auto& row : out.rows) row.wall_ms = ms;
  return out;
}

std::vector<ReportRow> run_experiment(const RunConfig& cfg) {
  return run_experiment_full(cfg).rows;
}

SweepResult run_sweep(const RunConfig& base) {
  const std::vector<int> Hs = base.sweep_H.empty() ? std::vector<int>{base.H} : base.sweep_H;
  const std::vector<int> Ls = base.sweep_L.empty() ? std::vector<int>{base.L} : base.sweep_L;
  const std::vector<std::uint64_t> Ts =
      base.sweep_T.empty() ? std::vector<std::uint64_t>{base.T} : base.sweep_T;
  const std::vector<std::size_t> ds =
      base.sweep_d.empty() ? std::vector<std::size_t>{base.d} : base.sweep_d;
  const std::vector<std::uint64_t> seeds =
      base.sweep_seeds.empty() ? std::vector<std::uint64_t>{base.seed} : base.sweep_seeds;

  SweepResult result;
  for (int H : Hs) {
    for (int L : Ls) {
      for (std::uint64_t T : Ts) {
        for (std::size_t d : ds) {
          for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.H = H;
            cfg.L = L;
            cfg.T = T;
            cfg.d = d;
            cfg.seed = seed;
            cfg.run_id = std::to_string(result.runs + 1);
            try {
              validate_config(cfg);
            } catch (const ConfigError& e) {
              std::ostringstream why;
              why << "H=" << H << " L=" << L << " T=" << T << " d=" << d << " seed=" << seed
                  << ": " << e.what();
              result.skipped.push_back(why.str());
              continue;
            }
            auto rows = run_experiment(cfg);
            result.rows.insert(result.rows.end(), rows.begin(), rows.end());
            ++result.runs;
          }
        }
      }
    }
  }
  return result;
}

}  // namespace treecal
