#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "treecal/errors.hpp"
#include "treecal/metrics.hpp"
#include "treecal/rng.hpp"
#include "treecal/transcript_io.hpp"

using namespace treecal;

namespace {

Transcript two_round() {
  const Domain s2 = Domain::simplex(2);
  return Transcript(s2, {{Forecast::point_mass({0.7, 0.3}), {1, 0}},
                         {Forecast::point_mass({0.7, 0.3}), {0, 1}}});
}

Transcript random_transcript(Rng& rng, std::size_t d, std::size_t T, bool labeled) {
  const Domain dom = Domain::simplex(d);
  std::vector<Vector> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(sample_point(dom, rng));
  std::vector<Round> rounds;
  for (std::size_t t = 0; t < T; ++t) {
    Round r;
    const std::size_t k = 1 + rng.below(3);
    std::vector<double> w(k);
    double total = 0.0;
    for (double& x : w) total += (x = rng.uniform() + 0.1);
    for (std::size_t i = 0; i < k; ++i) {
      std::optional<Label> label;
      if (labeled) label = Label{static_cast<int>(i)};
      r.forecast.atoms.push_back({pool[labeled ? rng.below(3) : i], label, w[i] / total});
    }
    r.outcome = rng.below(2) ? dom.vertex(rng.below(d)) : sample_point(dom, rng);
    rounds.push_back(std::move(r));
  }
  return Transcript(dom, std::move(rounds));
}

}  // namespace

TEST_CASE("conditional means examples") {
  const Domain s2 = Domain::simplex(2);
  {
    const Transcript tr(s2, {{Forecast::point_mass({0.4, 0.6}), {1, 0}}});
    const auto g = conditional_means(tr, false);
    REQUIRE(g.size() == 1);
    CHECK(g.begin()->second.mass == 1.0);
    CHECK(g.begin()->second.nu == Vector{1, 0});
    CHECK(g.begin()->second.point == Vector{0.4, 0.6});
  }
  {
    const auto g = conditional_means(two_round(), false);
    REQUIRE(g.size() == 1);
    CHECK(g.begin()->second.mass == 2.0);
    CHECK(g.begin()->second.nu == Vector{0.5, 0.5});
  }
  {
    Forecast f;
    f.atoms = {{{0.5, 0.5}, Label{0}, 0.5}, {{0.5, 0.5}, Label{1}, 0.5}};
    const Transcript tr(s2, {{f, {1, 0}}, {f, {0, 1}}});
    const auto labeled = conditional_means(tr, true);
    CHECK(labeled.size() == 2);
    for (const auto& [k, g] : labeled) CHECK(g.mass == 1.0);
    CHECK(conditional_means(tr, false).size() == 1);
  }
}

TEST_CASE("masses sum to T") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Transcript tr = random_transcript(rng, 3, 1 + rng.below(20), i % 2 == 0);
    double total = 0.0;
    for (const auto& [k, g] : conditional_means(tr, i % 2 == 0)) {
      CHECK(g.mass > 0.0);
      total += g.mass;
    }
    CHECK(total == doctest::Approx(static_cast<double>(tr.size())).epsilon(1e-12));
  }
}

TEST_CASE("calibration examples") {
  const Domain s2 = Domain::simplex(2);
  const Transcript constant(s2, {{Forecast::point_mass({0.2, 0.8}), {0.2, 0.8}},
                                 {Forecast::point_mass({0.2, 0.8}), {0.2, 0.8}}});
  CHECK(calibration_error(constant, NormDistance{NormKind::L1}, false) == 0.0);
  CHECK(calibration_error(constant, BregmanDistance{Regularizer::negative_entropy(s2)}, false) == 0.0);
  const Transcript tr = two_round();
  CHECK(calibration_error(tr, NormDistance{NormKind::L1}, false) == doctest::Approx(0.8));
  CHECK(calibration_error(tr, SquaredNormDistance{NormKind::L1}, false) == doctest::Approx(0.32));
}

TEST_CASE("calibration matches the linear-scan oracle") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const bool labeled = i % 2 == 0;
    const Transcript tr = random_transcript(rng, 2 + rng.below(3), 1 + rng.below(12), labeled);
    for (bool lab : {false, true}) {
      CHECK(calibration_error(tr, NormDistance{NormKind::L1}, lab) ==
            doctest::Approx(oracle::calibration(tr, lab, oracle::l1)).epsilon(1e-12));
      CHECK(calibration_error(tr, SquaredNormDistance{NormKind::L2}, lab) ==
            doctest::Approx(oracle::calibration(tr, lab, oracle::l2sq)).epsilon(1e-12));
      CHECK(calibration_error(tr, BregmanDistance{Regularizer::negative_entropy(tr.domain())}, lab) ==
            doctest::Approx(oracle::calibration(tr, lab, oracle::kl)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pure calibration examples") {
  const Domain s2 = Domain::simplex(2);
  {
    const PureTranscript pt(s2, {{{0.3, 0.7}, {1, 0}}});
    CHECK(pure_calibration_error(pt, NormDistance{NormKind::L1}) == doctest::Approx(1.4));
  }
  {
    std::vector<PureRound> rounds;
    for (int t = 0; t < 6; ++t) rounds.push_back({{0.9, 0.1}, t % 2 == 0 ? Vector{1, 0} : Vector{0, 1}});
    const PureTranscript pt(s2, rounds);
    CHECK(pure_calibration_error(pt, NormDistance{NormKind::L1}) == doctest::Approx(6 * 0.8));
    CHECK(pure_calibration_error(pt, NormDistance{NormKind::L2}) ==
          doctest::Approx(6 * std::sqrt(2 * 0.16)));
  }
  {
    Rng rng(2);
    std::vector<PureRound> rounds;
    double expected = 0.0;
    for (int t = 0; t < 10; ++t) {
      const Vector p = sample_point(s2, rng);
      const Vector y = s2.vertex(rng.below(2));
      expected += oracle::l1(p, y);
      rounds.push_back({p, y});
    }
    CHECK(pure_calibration_error(PureTranscript(s2, rounds), NormDistance{NormKind::L1}) ==
          doctest::Approx(expected));
  }
}

TEST_CASE("swap regret closed form") {
  const Domain s2 = Domain::simplex(2);
  const Transcript perfect(s2, {{Forecast::point_mass({1, 0}), {1, 0}}});
  CHECK(swap_regret_bregman(perfect, Regularizer::euclidean(s2), false, SwapAudit::On) == 0.0);
  Rng rng(21);
  for (int i = 0; i < 30; ++i) {
    const Transcript tr = random_transcript(rng, 3, 1 + rng.below(8), i % 2 == 1);
    const bool lab = i % 2 == 1;
    CHECK(swap_regret_bregman(tr, Regularizer::euclidean(tr.domain()), lab) ==
          doctest::Approx(calibration_error(tr, SquaredNormDistance{NormKind::L2}, lab)).epsilon(1e-12));
  }
}

TEST_CASE("swap audit agrees with closed form and with a grid of swap targets") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 2 + rng.below(2);
    const bool labeled = i % 3 == 0;
    const Transcript tr = random_transcript(rng, d, 1 + rng.below(8), labeled);
    for (const Regularizer& R :
         {Regularizer::euclidean(tr.domain()), Regularizer::negative_entropy(tr.domain())}) {
      const double closed = swap_regret_bregman(tr, R, labeled, SwapAudit::On);
      const double direct = swap_regret_bregman_direct(tr, R, labeled);
      CHECK(std::abs(closed - direct) <= 1e-9);
      // Per key, best grid target: sup over a finite set of swaps bounded by the closed form.
      const auto grid = oracle::simplex_grid(d, 0.02);
      double grid_regret = 0.0;
      for (const auto& g : oracle::group(tr, labeled)) {
        double played = 0.0;
        double best = INFINITY;
        for (const auto& r : tr.rounds()) {
          for (const auto& a : r.forecast.atoms) {
            if (a.point == g.point && (labeled ? a.label : std::nullopt) == g.label) {
              played += a.weight * bregman(R, r.outcome, a.point);
            }
          }
        }
        for (const auto& q : grid) {
          double loss = 0.0;
          for (const auto& r : tr.rounds()) {
            for (const auto& a : r.forecast.atoms) {
              if (a.point == g.point && (labeled ? a.label : std::nullopt) == g.label) {
                loss += a.weight * bregman(R, r.outcome, q);
              }
            }
          }
          best = std::min(best, loss);
        }
        grid_regret += played - best;
      }
      CHECK(grid_regret <= closed + 1e-9);
      if (R.kind() == RegularizerKind::Euclidean) {
        // Grid step 0.02 caps the shortfall at mass * (step * sqrt(d))^2.
        CHECK(closed - grid_regret <= static_cast<double>(tr.size()) * 0.0004 * d + 1e-9);
      }
    }
  }
}

TEST_CASE("swap_regret_finite examples") {
  const std::vector<Vector> menu{{1, 0}, {0, 1}};
  {
    const std::vector<std::vector<double>> dists{{1, 0}};
    const std::vector<Vector> losses{{0, 1}};
    CHECK(swap_regret_finite(menu, dists, losses) == 0.0);
  }
  {
    const std::vector<std::vector<double>> dists{{1, 0}, {1, 0}};
    const std::vector<Vector> losses{{1, 0}, {1, 0}};
    CHECK(swap_regret_finite(menu, dists, losses) == 2.0);
  }
  {
    const std::vector<Vector> menu3{{1, 0}, {0, 1}, {1, 1}};
    const std::vector<std::vector<double>> dists{{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    const std::vector<Vector> losses{{1, -1}, {-1, 1}};
    CHECK(swap_regret_finite(menu3, dists, losses) == doctest::Approx(0.0).scale(1.0));
  }
  CHECK_THROWS_AS(swap_regret_finite({}, {}, {}), std::domain_error);
}

TEST_CASE("swap_regret_finite matches enumeration over all swap functions") {
  Rng rng(13);
  for (int i = 0; i < 300; ++i) {
    const std::size_t m = 1 + rng.below(3);
    std::vector<Vector> menu;
    while (menu.size() < m) {
      Vector v{static_cast<double>(rng.below(5)) - 2, static_cast<double>(rng.below(5)) - 2};
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
      losses.push_back({rng.normal(), rng.normal()});
    }
    const double v = swap_regret_finite(menu, dists, losses);
    CHECK(v >= 0.0);
    CHECK(v == doctest::Approx(oracle::swap_regret_enumerated(menu, dists, losses)).epsilon(1e-12));
  }
}

TEST_CASE("Cauchy relation and labeled refinement") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const Transcript tr = random_transcript(rng, 2 + rng.below(4), 1 + rng.below(30), i % 2 == 0);
    const auto T = static_cast<double>(tr.size());
    for (NormKind k : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
      const double c = calibration_error(tr, NormDistance{k}, false) / T;
      CHECK(c * c <= calibration_error(tr, SquaredNormDistance{k}, false) / T + 1e-9);
      CHECK(calibration_error(tr, SquaredNormDistance{k}, true) >=
            calibration_error(tr, SquaredNormDistance{k}, false) - 1e-9);
    }
  }
}

TEST_CASE("permuting rounds leaves metrics bit-identical") {
  Rng rng(19);
  for (int i = 0; i < 50; ++i) {
    const bool labeled = i % 2 == 0;
    const Transcript tr = random_transcript(rng, 3, 2 + rng.below(15), labeled);
    std::vector<Round> rounds(tr.rounds().begin(), tr.rounds().end());
    for (std::size_t j = rounds.size() - 1; j > 0; --j) std::swap(rounds[j], rounds[rng.below(j + 1)]);
    const Transcript shuffled(tr.domain(), rounds);
    for (const Distance& dist :
         std::vector<Distance>{NormDistance{NormKind::L1}, SquaredNormDistance{NormKind::L2},
                               BregmanDistance{Regularizer::negative_entropy(tr.domain())}}) {
      CHECK(calibration_error(tr, dist, labeled) == calibration_error(shuffled, dist, labeled));
    }
  }
}

TEST_CASE("quantized keys merge equal averages computed in different orders") {
  const Vector a{0.1 + 0.2, 0.7};
  const Vector b{0.3, 0.7};
  REQUIRE(a != b);
  CHECK(make_group_key(a, std::nullopt, false) == make_group_key(b, std::nullopt, false));
  CHECK(make_group_key(a, Label{0}, true) != make_group_key(b, Label{1}, true));
  CHECK(make_group_key(a, Label{0}, false) == make_group_key(b, Label{1}, false));
  CHECK_FALSE(make_group_key(Vector{0.3}, std::nullopt, false) ==
              make_group_key(Vector{0.3 + 1e-10}, std::nullopt, false));
}

TEST_CASE("transcript validation") {
  const Domain s2 = Domain::simplex(2);
  CHECK_THROWS_AS(Transcript(s2, {}), std::domain_error);
  Forecast bad;
  bad.atoms = {{{0.5, 0.5}, std::nullopt, 0.6}};
  CHECK_THROWS_AS(Transcript(s2, {{bad, {1, 0}}}), std::domain_error);
  Forecast dup;
  dup.atoms = {{{0.5, 0.5}, Label{0}, 0.5}, {{1, 0}, Label{0}, 0.5}};
  CHECK_THROWS_AS(Transcript(s2, {{dup, {1, 0}}}), std::domain_error);
  CHECK_THROWS_AS(Transcript(s2, {{Forecast::point_mass({2, -1}), {1, 0}}}), std::domain_error);
  CHECK_THROWS_AS(Transcript(s2, {{Forecast::point_mass({1, 0}), {0.5, 0.6}}}), std::domain_error);
  Forecast neg;
  neg.atoms = {{{1, 0}, std::nullopt, 1.5}, {{0, 1}, std::nullopt, -0.5}};
  CHECK_THROWS_AS(Transcript(s2, {{neg, {1, 0}}}), std::domain_error);
}

TEST_CASE("JSON-lines round trip is bit-exact") {
  Rng rng(23);
  const Transcript tr = random_transcript(rng, 4, 25, true);
  std::stringstream ss;
  write_transcript_jsonl(ss, tr);
  const Transcript back = read_transcript_jsonl(ss, tr.domain());
  REQUIRE(back.size() == tr.size());
  for (std::size_t t = 0; t < tr.size(); ++t) {
    CHECK(back[t].outcome == tr[t].outcome);
    REQUIRE(back[t].forecast.atoms.size() == tr[t].forecast.atoms.size());
    for (std::size_t i = 0; i < tr[t].forecast.atoms.size(); ++i) {
      CHECK(back[t].forecast.atoms[i].point == tr[t].forecast.atoms[i].point);
      CHECK(back[t].forecast.atoms[i].label == tr[t].forecast.atoms[i].label);
      CHECK(back[t].forecast.atoms[i].weight == tr[t].forecast.atoms[i].weight);
    }
  }
}

TEST_CASE("JSON-lines format and trace events") {
  const Transcript tr = two_round();
  const std::string line = round_to_jsonl(1, tr[0]);
  CHECK(line == R"({"atoms":[[[0.7,0.3],null,1.0]],"outcome":[1.0,0.0],"t":1})");
  std::stringstream ss;
  const std::vector<AssignmentEvent> events{{1, 1, {0}, {0.5, 0.5}}, {2, 1, {1}, {1, 0}}};
  write_trace_jsonl(ss, tr, events);
  const std::string text = ss.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find(R"("event":"assign")") != std::string::npos);
  const Transcript back = read_transcript_jsonl(ss, tr.domain());
  CHECK(back.size() == 2);
  std::stringstream broken("{\"t\": 1, \"atoms\": 3}\n");
  CHECK_THROWS_AS(read_transcript_jsonl(broken, tr.domain()), std::runtime_error);
}

TEST_CASE("realized loss cap") {
  const Domain s2 = Domain::simplex(2);
  const Transcript tr(s2, {{Forecast::point_mass({0.5, 0.5}), {1, 0}},
                           {Forecast::point_mass({0.25, 0.75}), {0, 1}}});
  const Regularizer E = Regularizer::euclidean(s2);
  // Largest of ||y - p||^2 over both points and both outcomes: (1,0) vs (0.25,0.75).
  CHECK(realized_loss_cap(tr, E) == doctest::Approx(2 * 0.75 * 0.75));
  const Regularizer N = Regularizer::negative_entropy(s2);
  CHECK(realized_loss_cap(tr, N) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("forecast mean") {
  Forecast f;
  f.atoms = {{{1, 0}, std::nullopt, 0.25}, {{0, 1}, std::nullopt, 0.75}};
  CHECK(f.mean() == Vector{0.25, 0.75});
}
