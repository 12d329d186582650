// Command-line front end: run, sweep, verify, trace.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "treecal/errors.hpp"
#include "treecal/harness.hpp"
#include "treecal/transcript_io.hpp"
#include "treecal/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config, "key = value config file");
  app->add_option("--out", flags.out, "output path (default stdout)");
  app->add_option("--seed", flags.seed, "master seed");
  app->add_option("--format", flags.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->allow_extras();
}

/// Remaining `--key value` or `--key=value` arguments override config keys.
void apply_overrides(treecal::RunConfig& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw treecal::ConfigError("unexpected argument '" + arg + "'");
    arg.erase(0, 2);
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      treecal::apply_config_value(cfg, arg.substr(0, eq), arg.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) throw treecal::ConfigError("missing value for --" + arg);
    treecal::apply_config_value(cfg, arg, extras[++i]);
  }
}

treecal::RunConfig build_config(const CommonFlags& flags, const std::vector<std::string>& extras) {
  treecal::RunConfig cfg;
  if (!flags.config.empty()) cfg = treecal::load_config_file(flags.config, cfg);
  apply_overrides(cfg, extras);
  if (!flags.out.empty()) cfg.out = flags.out;
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.format.empty()) cfg.format = flags.format;
  return cfg;
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online calibration experiments: TreeCal, TreeSwap, SampleTreeCal"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one configuration and print metric rows");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "run the Cartesian product of sweep_* axes");
  add_common(sweep, sweep_flags);

  CommonFlags trace_flags;
  CLI::App* trace = app.add_subcommand("trace", "dump the transcript and assignments as JSON lines");
  add_common(trace, trace_flags);

  std::string suite = "fast";
  std::uint64_t verify_seed = 1;
  bool inject_fault = false;
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--suite", suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_flag("--inject-fault", inject_fault, "disable TreeCal's running-mean update");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      const treecal::RunConfig cfg = build_config(run_flags, run->remaining());
      const auto rows = treecal::run_experiment(cfg);
      with_output(cfg.out, [&](std::ostream& os) { treecal::write_rows(os, rows, cfg.format); });
      return treecal::rows_ok(rows) ? kExitOk : kExitCheckFailed;
    }
    if (*sweep) {
      const treecal::RunConfig cfg = build_config(sweep_flags, sweep->remaining());
      const auto result = treecal::run_sweep(cfg);
      for (const auto& why : result.skipped) std::cerr << "skipped " << why << '\n';
      if (result.runs == 0) {
        std::cerr << "config error: no valid grid point\n";
        return kExitConfig;
      }
      with_output(cfg.out,
                  [&](std::ostream& os) { treecal::write_rows(os, result.rows, cfg.format); });
      std::cerr << result.runs << " runs, " << result.skipped.size() << " skipped\n";
      return treecal::rows_ok(result.rows) ? kExitOk : kExitCheckFailed;
    }
    if (*trace) {
      const treecal::RunConfig cfg = build_config(trace_flags, trace->remaining());
      const auto output = treecal::run_experiment_full(cfg, true);
      with_output(cfg.out, [&](std::ostream& os) {
        treecal::write_trace_jsonl(os, *output.transcript, output.assignments);
      });
      return kExitOk;
    }
    if (*verify) {
      treecal::VerifyOptions opts;
      opts.suite = suite == "full" ? treecal::VerifySuite::Full : treecal::VerifySuite::Fast;
      opts.seed = verify_seed;
      opts.inject_fault = inject_fault;
      const auto results = treecal::run_verify(opts);
      treecal::print_verify(std::cout, results);
      const bool ok = treecal::verify_ok(results);
      std::cout << (ok ? "verify: all invariants hold\n" : "verify: FAILURES\n");
      return ok ? kExitOk : kExitCheckFailed;
    }
  } catch (const treecal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}
