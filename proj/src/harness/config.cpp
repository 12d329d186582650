#include <charconv>
#include <fstream>
#include <sstream>

#include "treecal/errors.hpp"
#include "treecal/harness.hpp"

namespace treecal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("invalid value for " + key + ": '" + text + "'");
  }
  return value;
}

template <class T>
std::vector<T> parse_numbers(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (v == o) return true;
  }
  return false;
}

}  // namespace

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "domain") {
    cfg.domain = value;
  } else if (key == "d") {
    cfg.d = parse_number<std::size_t>(key, value);
  } else if (key == "radius") {
    cfg.radius = parse_number<double>(key, value);
  } else if (key == "lo") {
    cfg.lo = parse_number<double>(key, value);
  } else if (key == "hi") {
    cfg.hi = parse_number<double>(key, value);
  } else if (key == "adversary") {
    cfg.adversary = value;
  } else if (key == "constant") {
    cfg.constant = parse_numbers<double>(key, value);
  } else if (key == "period") {
    cfg.period = parse_number<std::size_t>(key, value);
  } else if (key == "weights") {
    cfg.weights = parse_numbers<double>(key, value);
  } else if (key == "alpha") {
    cfg.alpha = parse_numbers<double>(key, value);
  } else if (key == "start") {
    cfg.start = parse_numbers<double>(key, value);
  } else if (key == "end") {
    cfg.end = parse_numbers<double>(key, value);
  } else if (key == "algorithm") {
    cfg.algorithm = value;
  } else if (key == "H") {
    cfg.H = parse_number<int>(key, value);
  } else if (key == "L") {
    cfg.L = parse_number<int>(key, value);
  } else if (key == "T") {
    cfg.T = parse_number<std::uint64_t>(key, value);
  } else if (key == "S") {
    cfg.S = parse_number<std::uint64_t>(key, value);
  } else if (key == "regularizer") {
    cfg.regularizer = value;
  } else if (key == "norms") {
    cfg.norms.clear();
    try {
      for (const auto& item : split_list(value)) cfg.norms.push_back(parse_norm(item));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid norms: ") + e.what());
    }
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    cfg.format = value;
  } else if (key == "run_id") {
    cfg.run_id = value;
  } else if (key == "sweep_H") {
    cfg.sweep_H = parse_numbers<int>(key, value);
  } else if (key == "sweep_L") {
    cfg.sweep_L = parse_numbers<int>(key, value);
  } else if (key == "sweep_T") {
    cfg.sweep_T = parse_numbers<std::uint64_t>(key, value);
  } else if (key == "sweep_d") {
    cfg.sweep_d = parse_numbers<std::size_t>(key, value);
  } else if (key == "sweep_seeds") {
    cfg.sweep_seeds = parse_numbers<std::uint64_t>(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::move(base));
}

std::uint64_t effective_T(const RunConfig& cfg) {
  if (cfg.T != 0) return cfg.T;
  if (cfg.H < 2 || cfg.L < 1) throw ConfigError("H must be at least 2 and L at least 1");
  try {
    return cfg.S * checked_pow(static_cast<std::uint64_t>(cfg.H), cfg.L);
  } catch (const std::overflow_error&) {
    throw ConfigError("H^L does not fit in 64 bits");
  }
}

Domain make_domain(const RunConfig& cfg) {
  if (cfg.d == 0) throw ConfigError("d must be positive");
  if (cfg.domain == "simplex") return Domain::simplex(cfg.d);
  if (cfg.domain == "l2ball" || cfg.domain == "l1ball") {
    if (!(cfg.radius > 0.0)) throw ConfigError("radius must be positive");
    return cfg.domain == "l2ball" ? Domain::l2_ball(cfg.d, cfg.radius)
                                  : Domain::l1_ball(cfg.d, cfg.radius);
  }
  if (cfg.domain == "box") {
    if (!(cfg.lo < cfg.hi)) throw ConfigError("box needs lo < hi");
    return Domain::box(cfg.d, cfg.lo, cfg.hi);
  }
  throw ConfigError("unknown domain '" + cfg.domain + "'");
}

AdversarySpec make_adversary_spec(const RunConfig& cfg, const Domain& domain) {
  const auto& a = cfg.adversary;
  if (a == "constant") return ConstantOutcome{cfg.constant.empty() ? domain.vertex(0) : cfg.constant};
  if (a == "vertex-cycle") return VertexCycle{cfg.period};
  if (a == "iid-vertices") return IidVertices{cfg.weights};
  if (a == "iid-dirichlet") return IidDirichlet{cfg.alpha};
  if (a == "drifting") {
    return DriftingMean{cfg.start.empty() ? domain.vertex(0) : cfg.start,
                        cfg.end.empty() ? domain.vertex(domain.vertex_count() - 1) : cfg.end};
  }
  if (a == "farthest-vertex") return FarthestVertex{};
  throw ConfigError("unknown adversary '" + a + "'");
}

Regularizer make_regularizer(const RunConfig& cfg, const Domain& domain) {
  if (cfg.regularizer == "euclidean") return Regularizer::euclidean(domain);
  if (cfg.regularizer == "negentropy") {
    if (domain.kind() != DomainKind::Simplex) {
      throw ConfigError("negentropy regularizer requires a simplex domain");
    }
    return Regularizer::negative_entropy(domain);
  }
  throw ConfigError("unknown regularizer '" + cfg.regularizer + "'");
}

void validate_config(const RunConfig& cfg) {
  const Domain domain = make_domain(cfg);
  make_regularizer(cfg, domain);
  if (!one_of(cfg.algorithm, {"treecal", "treeswap-ftl", "treeswap-btl", "sample-treecal"})) {
    throw ConfigError("unknown algorithm '" + cfg.algorithm + "'");
  }
  if (!one_of(cfg.format, {"csv", "json"})) throw ConfigError("format must be csv or json");
  if (cfg.norms.empty()) throw ConfigError("norms must list at least one norm");
  if (cfg.S == 0) throw ConfigError("S must be positive");
  if (cfg.algorithm != "sample-treecal" && cfg.S != 1) {
    throw ConfigError("S applies only to sample-treecal");
  }
  const std::uint64_t T = effective_T(cfg);
  if (T % cfg.S != 0) {
    throw ConfigError("S = " + std::to_string(cfg.S) + " must divide T = " + std::to_string(T));
  }
  validate_tree_shape(T / cfg.S, cfg.H, cfg.L);
  const Adversary adv(make_adversary_spec(cfg, domain), domain, 0, T);
  if (cfg.algorithm == "treeswap-btl" && adv.adaptive()) {
    throw ConfigError("treeswap-btl needs an oblivious adversary");
  }
}

std::uint64_t adversary_seed(const RunConfig& cfg) {
  return Rng(cfg.seed).child(streams::kAdversary).seed();
}

std::uint64_t sampler_seed(const RunConfig& cfg) {
  return Rng(cfg.seed).child(streams::kSampler).seed();
}

}  // namespace treecal
