#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "treecal/engine.hpp"
#include "treecal/errors.hpp"
#include "treecal/verify.hpp"

using namespace treecal;

namespace {

std::vector<Vector> scalar_stream(std::initializer_list<double> ys) {
  std::vector<Vector> out;
  for (double y : ys) out.push_back({y});
  return out;
}

}  // namespace

TEST_CASE("tree shape validation") {
  CHECK_NOTHROW(TreeCal(Domain::simplex(3), 27, 3, 3));
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 27, 3, 2), ConfigError);
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 8, 3, 3), ConfigError);
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 4, 1, 2), ConfigError);
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 1, 2, 0), ConfigError);
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 5, 2, 70), ConfigError);
  CHECK_NOTHROW(TreeCal(Domain::simplex(3), 9, 3, 3));
  TreeCalOptions bad;
  bad.base_point = Vector{2, 0, 0};
  CHECK_THROWS_AS(TreeCal(Domain::simplex(3), 9, 3, 2, bad), ConfigError);
}

TEST_CASE("first round forecasts the base point at every level") {
  TreeCal tc(Domain::box(1, 0, 1), 4, 2, 2);
  CHECK(tc.path_actions()[0] == Vector{0.5});
  CHECK(tc.path_actions()[1] == Vector{0.5});
  const Forecast f = tc.forecast(1);
  REQUIRE(f.atoms.size() == 2);
  CHECK(f.atoms[0].label == Label{0});
  CHECK(f.atoms[1].label == Label{0, 0});
  CHECK(f.atoms[0].weight == 0.5);
  TreeCal three(Domain::simplex(3), 27, 3, 3);
  const Forecast g = three.forecast(1);
  REQUIRE(g.atoms.size() == 3);
  for (const auto& a : g.atoms) CHECK(a.point == Domain::simplex(3).base_point());
  CHECK(g.atoms[2].label == Label{0, 0, 0});
}

TEST_CASE("hand trace on Box(1, 0, 1), H = 2, L = 2") {
  TreeCal tc(Domain::box(1, 0, 1), 4, 2, 2);
  tc.forecast(1);
  tc.observe(1, {1.0});
  const Forecast f2 = tc.forecast(2);
  CHECK(f2.atoms[0].point == Vector{0.5});
  CHECK(f2.atoms[0].label == Label{0});
  CHECK(f2.atoms[1].point == Vector{1.0});
  CHECK(f2.atoms[1].label == Label{0, 1});
  tc.observe(2, {0.0});
  const Forecast f3 = tc.forecast(3);
  CHECK(f3.atoms[0].point == Vector{0.5});  // (y1 + y2) / 2
  CHECK(f3.atoms[0].label == Label{1});
  CHECK(f3.atoms[1].point == Vector{0.5});  // fresh subtree: base point
  CHECK(f3.atoms[1].label == Label{1, 0});
}

TEST_CASE("assigned actions for y = (1, 0, 1, 1)") {
  TreeCalOptions opts;
  opts.record_assignments = true;
  TreeCal tc(Domain::box(1, 0, 1), 4, 2, 2, opts);
  run_forecaster(tc, scalar_stream({1, 0, 1, 1}));
  auto find = [&](const Label& prefix) -> Vector {
    for (const auto& e : tc.assignments()) {
      if (e.prefix == prefix) return e.action;
    }
    return {};
  };
  CHECK(find({0, 1}) == Vector{1.0});
  CHECK(find({1}) == Vector{0.5});
  CHECK(find({1, 1}) == Vector{1.0});
  CHECK(find({1, 0}) == Vector{0.5});
  CHECK(tc.assignments().size() == 6);
}

TEST_CASE("constant outcomes make every later sibling play the constant") {
  const Domain dom = Domain::simplex(3);
  const Vector y{0.2, 0.3, 0.5};
  TreeCalOptions opts;
  opts.record_assignments = true;
  TreeCal tc(dom, 64, 4, 3, opts);
  run_forecaster(tc, std::vector<Vector>(64, y));
  for (const auto& e : tc.assignments()) {
    if (e.prefix.back() == 0) {
      CHECK(e.action == dom.base_point());
    } else {
      CHECK(oracle::linf(e.action, y) <= 1e-15);
    }
  }
}

TEST_CASE("protocol errors") {
  TreeCal tc(Domain::simplex(2), 4, 2, 2);
  CHECK_THROWS_AS(tc.forecast(2), ProtocolError);
  CHECK_THROWS_AS(tc.observe(2, {1, 0}), ProtocolError);
  CHECK_THROWS_AS(tc.observe(1, {2, 0}), std::domain_error);
  tc.forecast(1);
  tc.observe(1, {1, 0});
  CHECK_THROWS_AS(tc.observe(1, {1, 0}), ProtocolError);
  for (std::uint64_t t = 2; t <= 4; ++t) {
    tc.forecast(t);
    tc.observe(t, {0, 1});
  }
  CHECK_THROWS_AS(tc.forecast(5), ProtocolError);
}

TEST_CASE("TreeCal matches the direct per-round definition") {
  Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const int H = 2 + static_cast<int>(rng.below(3));
    const int L = 1 + static_cast<int>(rng.below(4));
    const std::uint64_t full = oracle::ipow(static_cast<std::uint64_t>(H), L);
    const std::uint64_t T = full / static_cast<std::uint64_t>(H) + rng.below(full - full / H + 1);
    const Domain dom = trial % 3 == 0 ? Domain::box(2, -1, 1) : Domain::simplex(2 + rng.below(3));
    std::vector<Vector> outcomes;
    for (std::uint64_t t = 0; t < T; ++t) outcomes.push_back(sample_point(dom, rng));
    TreeCal tc(dom, T, H, L);
    const RunResult r = run_forecaster(tc, outcomes);
    for (std::uint64_t t = 1; t <= T; ++t) {
      const auto& atoms = r.transcript[t - 1].forecast.atoms;
      const auto digits = oracle::digits(t, H, L);
      REQUIRE(atoms.size() == static_cast<std::size_t>(L));
      for (int l = 1; l <= L; ++l) {
        const Vector expected = oracle::treecal_action(outcomes, dom.base_point(), t, H, L, l);
        CHECK(oracle::linf(atoms[l - 1].point, expected) <= 1e-12);
        CHECK(*atoms[l - 1].label == Label(digits.begin(), digits.begin() + l));
        CHECK(atoms[l - 1].weight == 1.0 / L);
      }
    }
  }
}

TEST_CASE("custom base point") {
  TreeCalOptions opts;
  opts.base_point = Vector{1, 0};
  TreeCal tc(Domain::simplex(2), 4, 2, 2, opts);
  CHECK(tc.forecast(1).atoms[0].point == Vector{1, 0});
  TreeSwapOptions sopts;
  sopts.base_point = Vector{1, 0};
  const auto outcomes = std::vector<Vector>(4, Vector{0, 1});
  TreeCal plain(Domain::simplex(2), 4, 2, 2, opts);
  const auto a = run_forecaster(plain, outcomes);
  const auto b = treeswap_run(follow_the_leader(), Regularizer::euclidean(Domain::simplex(2)), outcomes,
                              Domain::simplex(2), 2, 2, sopts);
  CHECK(transcripts_match(a.transcript, b.transcript, 0.0));
}

TEST_CASE("ftl and btl actions") {
  const Vector base{0.5, 0.5};
  CHECK(ftl_action({}, base) == base);
  const std::vector<IntervalLoss> one{{{0.2, 0.8}, 4, 1, {0}}};
  CHECK(ftl_action(one, base) == Vector{0.2, 0.8});
  CHECK(btl_action(one) == Vector{0.2, 0.8});
  const std::vector<IntervalLoss> two{{{1, 0}, 3, 1, {0}}, {{0, 1}, 1, 1, {1}}};
  CHECK(ftl_action(two, base) == Vector{0.75, 0.25});
  const std::vector<IntervalLoss> eq{{{1, 0}, 2, 1, {0}}, {{0, 1}, 2, 1, {1}}, {{0.5, 0.5}, 2, 1, {2}}};
  CHECK(oracle::linf(btl_action(eq), Vector{0.5, 0.5}) <= 1e-15);
  CHECK_THROWS_AS(btl_action({}), std::domain_error);
}

TEST_CASE("TreeSwap with FTL reproduces TreeCal exactly") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const int H = 2 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const std::uint64_t full = oracle::ipow(static_cast<std::uint64_t>(H), L);
    const std::uint64_t T = full / static_cast<std::uint64_t>(H) + rng.below(full - full / H + 1);
    const Domain dom = Domain::simplex(2 + rng.below(4));
    const Adversary adv(IidDirichlet{{0.5}}, dom, rng(), T);
    const auto outcomes = adv.stream(T);
    TreeCal tc(dom, T, H, L);
    const auto a = run_forecaster(tc, outcomes);
    const auto b = treeswap_run(follow_the_leader(), Regularizer::euclidean(dom), outcomes, dom, H, L);
    std::string why;
    CHECK_MESSAGE(transcripts_match(a.transcript, b.transcript, 0.0, &why), why);
  }
}

TEST_CASE("constant subroutine plays the base point everywhere") {
  const Domain dom = Domain::simplex(3);
  const Adversary adv(VertexCycle{}, dom, 0, 27);
  const auto r = treeswap_run(constant_action(), Regularizer::euclidean(dom), adv, dom, 27, 3, 3);
  for (const auto& round : r.transcript.rounds()) {
    CHECK(round.forecast.atoms.size() == 3);
    for (const auto& a : round.forecast.atoms) CHECK(a.point == dom.base_point());
  }
}

TEST_CASE("subroutine returning a non-member is a protocol error") {
  const Domain dom = Domain::simplex(2);
  const Adversary adv(VertexCycle{}, dom, 0, 4);
  CHECK_THROWS_AS(
      treeswap_run(constant_action(Vector{2, -1}), Regularizer::euclidean(dom), adv, dom, 4, 2, 2),
      ProtocolError);
}

TEST_CASE("BTL refuses adaptive adversaries and needs the stream") {
  const Domain dom = Domain::simplex(3);
  const Adversary adaptive(FarthestVertex{}, dom, 0, 9);
  CHECK_THROWS_AS(treeswap_run(be_the_leader(), Regularizer::euclidean(dom), adaptive, dom, 9, 3, 2),
                  ConfigError);
  CHECK_THROWS_AS(TreeSwap(dom, Regularizer::euclidean(dom), be_the_leader(), 9, 3, 2), ConfigError);
  const Adversary oblivious(VertexCycle{}, dom, 0, 9);
  CHECK_NOTHROW(treeswap_run(be_the_leader(), Regularizer::euclidean(dom), oblivious, dom, 9, 3, 2));
}

TEST_CASE("BTL plays the running mean including the current interval") {
  const Domain dom = Domain::box(1, 0, 1);
  const auto outcomes = scalar_stream({1, 0, 1, 1});
  const auto r = treeswap_run(be_the_leader(), Regularizer::euclidean(dom), outcomes, dom, 2, 2);
  // Round 1: level 1 sees child (0) = mean(1, 0); level 2 sees child (0,0) = 1.
  CHECK(r.transcript[0].forecast.atoms[0].point == Vector{0.5});
  CHECK(r.transcript[0].forecast.atoms[1].point == Vector{1.0});
  CHECK(r.transcript[1].forecast.atoms[1].point == Vector{0.5});
  CHECK(r.transcript[2].forecast.atoms[0].point == Vector{0.75});
  CHECK(r.transcript[3].forecast.atoms[1].point == Vector{1.0});
}

TEST_CASE("BTL per-node regret, movement and transcript agreement") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int H = 2 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const std::uint64_t T = oracle::ipow(static_cast<std::uint64_t>(H), L) - rng.below(H);
    const Domain dom = Domain::simplex(3);
    const Adversary adv(IidVertices{{0.6, 0.3, 0.1}}, dom, rng(), T);
    const auto outcomes = adv.stream(T);
    const Regularizer R = trial % 2 ? Regularizer::euclidean(dom) : Regularizer::negative_entropy(dom);
    const auto btl = treeswap_run(be_the_leader(), R, outcomes, dom, H, L);
    for (const auto& node : audit_nodes(dom, outcomes, H, L)) {
      CHECK(node_external_regret(node, node.btl, R, H, L) <= 1e-9);
      CHECK(node_external_regret(node, node.ftl, R, H, L) >= -1e-9);
      for (NormKind k : {NormKind::L1, NormKind::L2}) {
        const double diam = dom.diameter(k);
        CHECK(node_movement(node, k) <= 2 * diam * diam + 1e-9);
      }
      // The transcript's level-(l+1) atoms in child h play node.btl[h].
      for (std::size_t h = 0; h < node.children.size(); ++h) {
        Label prefix = node.prefix;
        prefix.push_back(static_cast<int>(h));
        const auto first = interval_of(node.level + 1, prefix, H, L).first;
        const auto& atom = btl.transcript[first - 1].forecast.atoms[node.level];
        CHECK(*atom.label == prefix);
        CHECK(atom.point == node.btl[h]);
      }
    }
  }
}

TEST_CASE("treeswap bound holds for BTL") {
  Rng rng(88);
  for (int trial = 0; trial < 10; ++trial) {
    const Domain dom = Domain::simplex(2 + rng.below(3));
    const int H = 2 + static_cast<int>(rng.below(3));
    const int L = 2 + static_cast<int>(rng.below(3));
    const std::uint64_t T = oracle::ipow(static_cast<std::uint64_t>(H), L);
    const Adversary adv(IidDirichlet{{0.4}}, dom, rng(), T);
    const Regularizer R = Regularizer::euclidean(dom);
    const auto r = treeswap_run(be_the_leader(), R, adv, dom, T, H, L);
    const double b = realized_loss_cap(r.transcript, R);
    CHECK(swap_regret_bregman(r.transcript, R, true, SwapAudit::On) <= 3 * b * T / L + 1e-6);
  }
}

TEST_CASE("mean-update checker flags the injected fault") {
  const Domain dom = Domain::simplex(2);
  const Adversary adv(IidVertices{}, dom, 9, 16);
  const auto outcomes = adv.stream(16);
  TreeCalOptions ok;
  ok.record_assignments = true;
  TreeCal good(dom, 16, 2, 4, ok);
  run_forecaster(good, outcomes);
  CHECK(count_mean_update_violations(good.assignments(), outcomes, dom.base_point(), 2, 4, 1e-9) == 0);
  TreeCalOptions faulty = ok;
  faulty.fault_skip_mean_update = true;
  TreeCal bad(dom, 16, 2, 4, faulty);
  run_forecaster(bad, outcomes);
  CHECK(count_mean_update_violations(bad.assignments(), outcomes, dom.base_point(), 2, 4, 1e-9) > 0);
}

TEST_CASE("SampleTreeCal") {
  const Domain dom = Domain::simplex(3);
  CHECK_THROWS_AS(sample_treecal_run(dom, 27 * 4 + 1, 3, 3, 4, Adversary(VertexCycle{}, dom, 0, 109), 1),
                  ConfigError);
  CHECK_THROWS_AS(sample_treecal_run(dom, 27, 3, 3, 0, Adversary(VertexCycle{}, dom, 0, 27), 1),
                  ConfigError);

  SUBCASE("S = 1 samples the forecast atoms") {
    const Adversary adv(IidDirichlet{{1.0}}, dom, 4, 27);
    const auto r = sample_treecal_run(dom, 27, 3, 3, 1, adv, 99);
    REQUIRE(r.pure.size() == 27);
    for (std::size_t t = 0; t < 27; ++t) {
      const auto& atoms = r.inner[t].forecast.atoms;
      const bool is_atom = std::any_of(atoms.begin(), atoms.end(), [&](const Atom& a) {
        return a.point == r.pure.rounds()[t].prediction;
      });
      CHECK(is_atom);
      CHECK(r.inner[t].outcome == r.pure.rounds()[t].outcome);
    }
  }

  SUBCASE("block means feed the inner forecaster") {
    const std::uint64_t S = 8;
    const Adversary adv(IidVertices{}, dom, 5, 27 * S);
    const auto r = sample_treecal_run(dom, 27 * S, 3, 3, S, adv, 7);
    for (std::size_t i = 0; i < 27; ++i) {
      Vector mean(3, 0.0);
      for (std::size_t s = 0; s < S; ++s) {
        for (int k = 0; k < 3; ++k) mean[k] += r.pure.rounds()[i * S + s].outcome[k];
      }
      for (double& x : mean) x /= S;
      CHECK(oracle::linf(mean, r.inner[i].outcome) <= 1e-12);
    }
  }

  SUBCASE("constant stream yields point masses and sampled points equal to atoms") {
    const Adversary adv(ConstantOutcome{{1, 0, 0}}, dom, 0, 27 * 4);
    const auto r = sample_treecal_run(dom, 27 * 4, 3, 3, 4, adv, 3);
    for (std::size_t t = 0; t < r.pure.size(); ++t) {
      const auto& p = r.pure.rounds()[t].prediction;
      CHECK((p == Vector{1, 0, 0} || p == dom.base_point()));
    }
  }

  SUBCASE("deterministic given seeds") {
    const Adversary adv(IidDirichlet{{0.7}}, dom, 12, 27 * 16);
    const auto a = sample_treecal_run(dom, 27 * 16, 3, 3, 16, adv, 8);
    const auto b = sample_treecal_run(dom, 27 * 16, 3, 3, 16, adv, 8);
    for (std::size_t t = 0; t < a.pure.size(); ++t) {
      CHECK(a.pure.rounds()[t].prediction == b.pure.rounds()[t].prediction);
      CHECK(a.pure.rounds()[t].outcome == b.pure.rounds()[t].outcome);
    }
  }
}

TEST_CASE("runs are bit-identical for identical seeds") {
  const Domain dom = Domain::simplex(4);
  const Adversary a(IidDirichlet{{0.3}}, dom, 42, 81);
  const Adversary b(IidDirichlet{{0.3}}, dom, 42, 81);
  const auto ra = treecal_run(dom, 81, 3, 4, a);
  const auto rb = treecal_run(dom, 81, 3, 4, b);
  CHECK(transcripts_match(ra.transcript, rb.transcript, 0.0));
}
