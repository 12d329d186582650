#include "treecal/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "treecal/errors.hpp"
#include "treecal/harness.hpp"
#include "treecal/reductions.hpp"

namespace treecal {

bool transcripts_match(const Transcript& a, const Transcript& b, double tol, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.size() != b.size()) return fail("lengths differ");
  for (std::size_t t = 0; t < a.size(); ++t) {
    const auto& fa = a[t].forecast.atoms;
    const auto& fb = b[t].forecast.atoms;
    if (a[t].outcome != b[t].outcome) return fail("outcome differs at round " + std::to_string(t + 1));
    if (fa.size() != fb.size()) return fail("atom count differs at round " + std::to_string(t + 1));
    for (std::size_t i = 0; i < fa.size(); ++i) {
      if (fa[i].label != fb[i].label || fa[i].weight != fb[i].weight) {
        return fail("label or weight differs at round " + std::to_string(t + 1));
      }
      if (fa[i].point.size() != fb[i].point.size() ||
          distance(fa[i].point, fb[i].point, NormKind::LInf) > tol) {
        return fail("point differs at round " + std::to_string(t + 1));
      }
    }
  }
  return true;
}

std::size_t count_mean_update_violations(std::span<const AssignmentEvent> events,
                                         std::span<const Vector> outcomes, const Vector& base,
                                         int H, int L, double tol) {
  std::size_t bad = 0;
  for (const auto& e : events) {
    if (e.prefix.empty() || e.prefix.back() == 0) {
      if (e.action != base) ++bad;
      continue;
    }
    const Label parent(e.prefix.begin(), e.prefix.end() - 1);
    const std::uint64_t first = interval_of(e.level - 1, parent, H, L).first;
    const std::uint64_t stop = interval_of(e.level, e.prefix, H, L).first;
    Vector mean(base.size(), 0.0);
    for (std::uint64_t s = first; s < stop; ++s) add_scaled(mean, outcomes[s - 1], 1.0);
    for (double& x : mean) x /= static_cast<double>(stop - first);
    if (distance(mean, e.action, NormKind::LInf) > tol) ++bad;
  }
  return bad;
}

namespace {

class Ledger {
 public:
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    InvariantResult& r = slot(name);
    ++r.checks;
    if (!ok) {
      if (r.failures == 0) r.first_failure = detail;
      ++r.failures;
    }
  }
  std::vector<InvariantResult> results() const { return results_; }

 private:
  InvariantResult& slot(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, results_.size()).first;
      results_.push_back({name, 0, 0, ""});
    }
    return results_[it->second];
  }
  std::vector<InvariantResult> results_;
  std::map<std::string, std::size_t> index_;
};

struct Shape {
  int H;
  int L;
  std::uint64_t T;
};

Shape random_shape(Rng& rng, int max_H = 4, int max_L = 4) {
  const int H = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_H - 1)));
  const int L = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_L - 1)));
  const std::uint64_t lo = checked_pow(static_cast<std::uint64_t>(H), L - 1);
  const std::uint64_t hi = lo * static_cast<std::uint64_t>(H);
  return {H, L, lo + rng.below(hi - lo + 1)};
}

Domain random_domain(Rng& rng) {
  if (rng.below(4) == 0) return Domain::box(1 + rng.below(3), 0.0, 1.0);
  return Domain::simplex(2 + rng.below(4));
}

AdversarySpec random_oblivious_spec(Rng& rng, const Domain& domain) {
  switch (rng.below(5)) {
    case 0: return ConstantOutcome{sample_point(domain, rng)};
    case 1: return VertexCycle{1 + rng.below(domain.vertex_count() + 2)};
    case 2: {
      std::vector<double> w(domain.vertex_count());
      for (double& x : w) x = rng.uniform() + 0.01;
      return IidVertices{w};
    }
    case 3:
      if (domain.kind() == DomainKind::Simplex) return IidDirichlet{{0.3 + rng.uniform()}};
      [[fallthrough]];
    default: return DriftingMean{sample_point(domain, rng), sample_point(domain, rng)};
  }
}

/// Small transcript over Simplex(d) whose atoms come from a three-point pool,
/// so that keys repeat across rounds.
Transcript small_transcript(Rng& rng, bool labeled) {
  const Domain domain = Domain::simplex(2 + rng.below(2));
  std::vector<Vector> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(sample_point(domain, rng));
  const std::uint64_t T = 1 + rng.below(8);
  std::vector<Round> rounds;
  for (std::uint64_t t = 0; t < T; ++t) {
    Round r;
    const std::size_t k = 1 + rng.below(3);
    double total = 0.0;
    std::vector<double> w(k);
    for (double& x : w) total += (x = rng.uniform() + 0.05);
    for (std::size_t i = 0; i < k; ++i) {
      std::optional<Label> label;
      if (labeled) label = Label{static_cast<int>(i)};
      const std::size_t pick = labeled ? rng.below(3) : i;
      r.forecast.atoms.push_back({pool[pick], label, w[i] / total});
    }
    r.outcome = rng.below(2) == 0 ? domain.vertex(rng.below(domain.dim())) : sample_point(domain, rng);
    rounds.push_back(std::move(r));
  }
  return Transcript(domain, std::move(rounds));
}

void check_cauchy(Ledger& ledger, const Transcript& tr) {
  const auto T = static_cast<double>(tr.size());
  for (NormKind k : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
    const double c = calibration_error(tr, NormDistance{k}, false) / T;
    const double c2 = calibration_error(tr, SquaredNormDistance{k}, false) / T;
    ledger.check("metrics.cauchy", c * c <= c2 + 1e-9, to_string(k));
  }
}

double brute_force_swap(std::span<const Vector> menu, std::span<const std::vector<double>> dists,
                        std::span<const Vector> losses) {
  const std::size_t m = menu.size();
  std::vector<std::size_t> pi(m, 0);
  double base = 0.0;
  for (std::size_t t = 0; t < dists.size(); ++t) {
    for (std::size_t i = 0; i < m; ++i) base += dists[t][i] * dot(losses[t], menu[i]);
  }
  double best = 0.0;
  while (true) {
    double swapped = 0.0;
    for (std::size_t t = 0; t < dists.size(); ++t) {
      for (std::size_t i = 0; i < m; ++i) swapped += dists[t][i] * dot(losses[t], menu[pi[i]]);
    }
    best = std::max(best, base - swapped);
    std::size_t pos = 0;
    while (pos < m && ++pi[pos] == m) pi[pos++] = 0;
    if (pos == m) break;
  }
  return best;
}

}  // namespace

std::vector<InvariantResult> run_verify(const VerifyOptions& options) {
  const bool full = options.suite == VerifySuite::Full;
  const std::size_t scale = full ? 5 : 1;
  Rng root(options.seed);
  Ledger ledger;

  // Tree index arithmetic, exhaustive for H, L <= 4.
  for (int H = 2; H <= 4; ++H) {
    for (int L = 1; L <= 4; ++L) {
      const std::uint64_t n = checked_pow(static_cast<std::uint64_t>(H), L);
      for (std::uint64_t t = 1; t <= n; ++t) {
        const auto digits = digits_base_h(t, H, L);
        ledger.check("geometry.digits_roundtrip", round_from_digits(digits, H) == t);
        for (int l = 0; l <= L; ++l) {
          const auto iv = interval_of(l, std::span<const int>(digits).first(l), H, L);
          ledger.check("geometry.interval_membership", iv.contains(t));
          if (l < L) {
            Label prefix(digits.begin(), digits.begin() + l);
            std::uint64_t next = iv.first;
            bool ok = true;
            for (int h = 0; h < H; ++h) {
              prefix.push_back(h);
              const auto child = interval_of(l + 1, prefix, H, L);
              ok = ok && child.first == next;
              next = child.last + 1;
              prefix.pop_back();
            }
            ledger.check("geometry.interval_partition", ok && next == iv.last + 1);
          }
        }
      }
    }
  }

  {
    Rng rng = root.child(10);
    const std::vector<Domain> domains{Domain::simplex(3), Domain::l2_ball(3, 1.0),
                                      Domain::l1_ball(4, 2.0), Domain::box(2, -1.0, 3.0)};
    for (std::size_t i = 0; i < 500 * scale; ++i) {
      const Domain& dom = domains[i % domains.size()];
      const Vector a = sample_point(dom, rng);
      const Vector b = sample_point(dom, rng);
      const Vector c = sample_point(dom, rng);
      const double s = 4.0 * rng.uniform() - 2.0;
      for (NormKind k : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
        const Vector ab = subtract(a, b);
        const Vector bc = subtract(b, c);
        Vector ac = ab;
        add_scaled(ac, bc, 1.0);
        ledger.check("geometry.norm_axioms",
                     norm_value(ac, k) <= norm_value(ab, k) + norm_value(bc, k) + 1e-12 &&
                         std::abs(norm_value(scaled(ab, s), k) - std::abs(s) * norm_value(ab, k)) <=
                             1e-12 * (1.0 + norm_value(ab, k)));
        ledger.check("geometry.diameter_bound", distance(a, b, k) <= dom.diameter(k) + 1e-12);
      }
    }
  }

  {
    Rng rng = root.child(11);
    const Domain simplex = Domain::simplex(4);
    const Domain ball = Domain::l2_ball(3, 1.0);
    const std::vector<std::pair<Regularizer, Domain>> regs{
        {Regularizer::euclidean(simplex), simplex},
        {Regularizer::negative_entropy(simplex), simplex},
        {Regularizer::euclidean(ball), ball}};
    for (std::size_t i = 0; i < 300 * scale; ++i) {
      const auto& [R, dom] = regs[i % regs.size()];
      const Vector y = sample_point(dom, rng);
      const Vector p = sample_point(dom, rng);
      ledger.check("scoring.bregman_self_zero", bregman(R, y, y) == 0.0);
      ledger.check("scoring.bregman_nonnegative", bregman(R, y, p) >= -1e-9);
      const Regularizer C = center_regularizer(R, dom);
      ledger.check("scoring.affine_invariance",
                   std::abs(bregman(C, y, p) - bregman(R, y, p)) <= 1e-10);

      std::vector<Vector> pts;
      std::vector<double> w;
      double total = 0.0;
      for (std::size_t k = 0; k < 1 + rng.below(5); ++k) {
        pts.push_back(sample_point(dom, rng));
        w.push_back(rng.uniform() + 0.01);
        total += w.back();
      }
      for (double& x : w) x /= total;
      const auto mm = mixture_minimizer(pts, w, R);
      double lhs = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k) lhs += w[k] * bregman(R, pts[k], p);
      ledger.check("scoring.bias_variance",
                   std::abs(lhs - (bregman(R, mm.mean, p) + mm.jensen_gap)) <= 1e-9);
    }
  }

  std::vector<Transcript> produced;

  {
    Rng rng = root.child(12);
    for (std::size_t i = 0; i < 100 * scale; ++i) {
      const bool labeled = rng.below(2) == 0;
      Transcript tr = small_transcript(rng, labeled);
      for (const Regularizer& R :
           {Regularizer::euclidean(tr.domain()), Regularizer::negative_entropy(tr.domain())}) {
        bool ok = true;
        try {
          swap_regret_bregman(tr, R, labeled, SwapAudit::On);
        } catch (const ProtocolError&) {
          ok = false;
        }
        ledger.check("metrics.swap_equals_calibration", ok, R.name());
      }
      for (NormKind k : {NormKind::L1, NormKind::L2}) {
        ledger.check("metrics.labeled_refinement",
                     calibration_error(tr, SquaredNormDistance{k}, true) >=
                         calibration_error(tr, SquaredNormDistance{k}, false) - 1e-9);
      }
      std::vector<Round> rounds(tr.rounds().begin(), tr.rounds().end());
      std::reverse(rounds.begin(), rounds.end());
      if (rounds.size() > 2) std::swap(rounds[0], rounds[rounds.size() / 2]);
      const Transcript permuted(tr.domain(), std::move(rounds));
      for (const Distance& dist : std::vector<Distance>{
               NormDistance{NormKind::L1}, SquaredNormDistance{NormKind::L2},
               BregmanDistance{Regularizer::negative_entropy(tr.domain())}}) {
        ledger.check("metrics.permutation_stability",
                     calibration_error(tr, dist, labeled) == calibration_error(permuted, dist, labeled));
      }
      produced.push_back(std::move(tr));
    }

    for (std::size_t i = 0; i < 100 * scale; ++i) {
      const std::size_t m = 1 + rng.below(3);
      const std::size_t d = 2;
      std::vector<Vector> menu;
      while (menu.size() < m) {
        Vector v{std::floor(rng.uniform() * 5.0) - 2.0, std::floor(rng.uniform() * 5.0) - 2.0};
        if (std::find(menu.begin(), menu.end(), v) == menu.end()) menu.push_back(v);
      }
      const std::size_t T = 1 + rng.below(5);
      std::vector<std::vector<double>> dists;
      std::vector<Vector> losses;
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> dist(m);
        double total = 0.0;
        for (double& x : dist) total += (x = rng.uniform());
        for (double& x : dist) x /= total;
        dists.push_back(dist);
        Vector v(d);
        for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
        losses.push_back(v);
      }
      ledger.check("metrics.swap_finite_enumeration",
                   std::abs(swap_regret_finite(menu, dists, losses) -
                            brute_force_swap(menu, dists, losses)) <= 1e-12);
    }
  }

  {
    Rng rng = root.child(13);
    for (std::size_t i = 0; i < 40 * scale; ++i) {
      const Domain domain = random_domain(rng);
      const Shape s = random_shape(rng);
      const Adversary adv(random_oblivious_spec(rng, domain), domain, rng(), s.T);
      const auto outcomes = adv.stream(s.T);
      TreeCalOptions opts;
      opts.record_assignments = true;
      opts.fault_skip_mean_update = options.inject_fault;
      TreeCal tc(domain, s.T, s.H, s.L, opts);
      RunResult live = run_forecaster(tc, outcomes);
      RunResult swap = treeswap_run(follow_the_leader(), Regularizer::euclidean(domain), outcomes,
                                    domain, s.H, s.L);
      std::string why;
      ledger.check("engine.treecal_treeswap_equivalence",
                   transcripts_match(live.transcript, swap.transcript, 1e-12, &why), why);
      ledger.check("engine.mean_update",
                   count_mean_update_violations(tc.assignments(), outcomes, domain.base_point(),
                                                s.H, s.L, 1e-9) == 0);
      produced.push_back(live.transcript);
    }
  }

  {
    Rng rng = root.child(14);
    for (std::size_t i = 0; i < 15 * scale; ++i) {
      const Domain domain = Domain::simplex(2 + rng.below(3));
      const Shape s = random_shape(rng, 4, full ? 5 : 4);
      const Adversary adv(random_oblivious_spec(rng, domain), domain, rng(), s.T);
      const auto outcomes = adv.stream(s.T);
      const Regularizer R = i % 2 == 0 ? Regularizer::euclidean(domain)
                                       : Regularizer::negative_entropy(domain);
      RunResult btl = treeswap_run(be_the_leader(), R, outcomes, domain, s.H, s.L);
      for (const auto& node : audit_nodes(domain, outcomes, s.H, s.L)) {
        ledger.check("engine.btl_zero_regret",
                     node_external_regret(node, node.btl, R, s.H, s.L) <= 1e-9);
        for (NormKind k : {NormKind::L1, NormKind::L2}) {
          const double diam = domain.diameter(k);
          ledger.check("engine.btl_movement", node_movement(node, k) <= 2.0 * diam * diam + 1e-9);
        }
      }
      const double b = realized_loss_cap(btl.transcript, R);
      const double swap = swap_regret_bregman(btl.transcript, R, true);
      ledger.check("engine.treeswap_bound",
                   swap <= 3.0 * b * static_cast<double>(s.T) / s.L + 1e-6);
      produced.push_back(std::move(btl.transcript));
    }
  }

  {
    for (int L = 2; L <= (full ? 5 : 4); ++L) {
      for (std::uint64_t seed = 1; seed <= 2 * scale; ++seed) {
        for (const std::string reg : {"euclidean", "negentropy"}) {
          RunConfig cfg;
          cfg.domain = "simplex";
          cfg.d = 3;
          cfg.H = 4;
          cfg.L = L;
          cfg.adversary = "iid-dirichlet";
          cfg.regularizer = reg;
          cfg.norms = {reg == "euclidean" ? NormKind::L2 : NormKind::L1};
          cfg.seed = options.seed * 1000 + seed;
          ExperimentOutput out = run_experiment_full(cfg);
          for (const auto& row : out.rows) {
            if (row.metric == "proof_chain_bound") {
              ledger.check("engine.proof_chain_bound", *row.bound_ok,
                           reg + " L=" + std::to_string(L));
            }
          }
          if (seed == 1) {
            const auto again = run_experiment(cfg);
            bool same = again.size() == out.rows.size();
            for (std::size_t r = 0; same && r < again.size(); ++r) {
              same = to_csv_stable(again[r]) == to_csv_stable(out.rows[r]);
            }
            ledger.check("engine.determinism", same);
          }
          produced.push_back(std::move(*out.transcript));
        }
      }
    }
  }

  {
    Rng rng = root.child(15);
    const std::vector<Domain> domains{Domain::simplex(4), Domain::l2_ball(2, 1.5),
                                      Domain::l1_ball(3, 1.0), Domain::box(3, 0.0, 2.0)};
    for (const auto& domain : domains) {
      for (int k = 0; k < 5; ++k) {
        const AdversarySpec spec = random_oblivious_spec(rng, domain);
        const std::uint64_t seed = rng();
        const Adversary a(spec, domain, seed, 1000);
        const Adversary b(spec, domain, seed, 1000);
        for (std::uint64_t t = 1; t <= 100 * scale; ++t) {
          const Vector y = a.next_outcome(t);
          ledger.check("adversaries.membership", domain.contains(y));
          ledger.check("adversaries.replay", y == b.next_outcome(t));
        }
      }
      const Adversary adaptive(FarthestVertex{}, domain, 1, 1);
      const Forecast f = Forecast::point_mass(sample_point(domain, rng));
      ledger.check("adversaries.membership", domain.contains(adaptive.next_outcome(1, &f)));
    }
    for (int H = 2; H <= 4; ++H) {
      for (int L = 1; L <= 4; ++L) {
        const Domain domain = Domain::simplex(3);
        const std::uint64_t T = checked_pow(static_cast<std::uint64_t>(H), L);
        const Adversary adv(ConstantOutcome{domain.vertex(1)}, domain, 0, T);
        RunResult r = treecal_run(domain, T, H, L, adv);
        const GroupKey base = make_group_key(domain.base_point(), std::nullopt, false);
        double nonbase = 0.0;
        for (const auto& [key, g] : conditional_means(r.transcript, false)) {
          if (key.coords != base.coords) nonbase += g.mass * distance(g.nu, g.point, NormKind::L1);
        }
        ledger.check("adversaries.constant_nonbase_zero", nonbase == 0.0);
      }
    }
  }

  {
    Rng rng = root.child(16);
    for (std::size_t i = 0; i < 5 * scale; ++i) {
      const Domain domain = Domain::simplex(3);
      const std::uint64_t T = 64;
      const AdversarySpec spec =
          i % 2 == 0 ? AdversarySpec{VertexCycle{2 + rng.below(3)}} : AdversarySpec{IidDirichlet{{0.5}}};
      const Adversary adv(spec, domain, rng(), T);
      const auto outcomes = adv.stream(T);
      TreeCal tc(domain, T, 4, 3);
      const FiniteMenu menu = FiniteMenu::cube_vertices(3);
      const SwapReduction red = calibrated_to_swap(tc, menu, outcomes, NormKind::L1);
      ledger.check("reductions.swap_inequality", red.swap_regret <= red.bound + 1e-6);
    }

    for (std::size_t i = 0; i < 300 * scale; ++i) {
      const Domain ball = Domain::l1_ball(1 + rng.below(4), 1.0);
      const Vector y = sample_point(ball, rng);
      const Vector back = project_simplex_to_l1ball(embed_l1ball_to_simplex(y));
      ledger.check("reductions.embedding_roundtrip", distance(back, y, NormKind::LInf) <= 1e-15);
    }
    for (std::size_t i = 0; i < 4 * scale; ++i) {
      const std::size_t d = 1 + rng.below(3);
      const Domain simplex = Domain::simplex(2 * d + 1);
      const Adversary adv(IidDirichlet{{0.5}}, simplex, rng(), 27);
      RunResult r = treecal_run(simplex, 27, 3, 3, adv);
      const Transcript pushed = pushforward_l1ball(r.transcript);
      ledger.check("reductions.pushforward_nonexpansive",
                   calibration_error(pushed, NormDistance{NormKind::L1}, false) <=
                       calibration_error(r.transcript, NormDistance{NormKind::L1}, false) + 1e-9);
      produced.push_back(std::move(r.transcript));
    }
  }

  for (const auto& tr : produced) check_cauchy(ledger, tr);
  return ledger.results();
}

bool verify_ok(const std::vector<InvariantResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const InvariantResult& r) { return r.failures == 0; });
}

void print_verify(std::ostream& out, const std::vector<InvariantResult>& results) {
  for (const auto& r : results) {
    out << (r.failures == 0 ? "PASS " : "FAIL ") << std::left << std::setw(40) << r.name
        << " checks=" << r.checks << " failures=" << r.failures;
    if (r.failures != 0 && !r.first_failure.empty()) out << " first: " << r.first_failure;
    out << '\n';
  }
}

}  // namespace treecal
