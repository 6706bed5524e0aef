#include <algorithm>
#include <map>
#include <set>

#include "hwnas/errors.hpp"
#include "hwnas/moo.hpp"
#include "hwnas/rng.hpp"
#include "vendor/doctest.h"

using namespace hwnas;

namespace {

ObjectiveVector vec(std::vector<double> values, std::vector<Sense> senses) {
  ObjectiveVector v;
  v.values = std::move(values);
  v.senses = std::move(senses);
  for (std::size_t i = 0; i < v.values.size(); ++i) v.names.push_back("o" + std::to_string(i));
  return v;
}

// Definition-level dominance: no worse everywhere, better somewhere, on the
// canonical minimizing values.
bool dominates_oracle(const ObjectiveVector& a, const ObjectiveVector& b) {
  bool better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.canonical(i) > b.canonical(i)) return false;
    if (a.canonical(i) < b.canonical(i)) better = true;
  }
  return better;
}

// Peel non-dominated layers one at a time.
std::vector<std::vector<std::size_t>> peeling_oracle(const std::vector<ObjectiveVector>& points) {
  std::vector<std::size_t> alive(points.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::vector<std::vector<std::size_t>> fronts;
  while (!alive.empty()) {
    std::vector<std::size_t> front, rest;
    for (std::size_t i : alive) {
      bool dominated = false;
      for (std::size_t j : alive) {
        if (i != j && dominates_oracle(points[j], points[i])) {
          dominated = true;
          break;
        }
      }
      (dominated ? rest : front).push_back(i);
    }
    fronts.push_back(std::move(front));
    alive = std::move(rest);
  }
  return fronts;
}

// Single-choice everywhere except the first width position, so the genome
// space collapses to |width0 choices| networks.
SearchSpaceConfig line_space(std::vector<int> width0_choices) {
  SearchSpaceConfig space;
  space.num_layers_choices = {4};
  space.width_choices[0] = std::move(width0_choices);
  for (int i = 1; i < kMaxHiddenLayers; ++i) space.width_choices[i] = {8};
  space.activation_choices = {Activation::ReLU};
  space.batchnorm_choices = {false};
  space.lr_choices = {0.001};
  space.l1_choices = {0.0};
  space.dropout_choices = {0.0};
  space.input_dim = 4;
  space.num_classes = 2;
  return space;
}

}  // namespace

TEST_CASE("dominates agrees with the definition on the exhaustive grid") {
  const std::vector<Sense> all_min(3, Sense::kMinimize);
  const std::vector<Sense> mixed = {Sense::kMaximize, Sense::kMinimize, Sense::kMinimize};
  for (const auto& senses : {all_min, mixed}) {
    std::vector<ObjectiveVector> grid;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          grid.push_back(vec({double(a), double(b), double(c)}, senses));
    for (const ObjectiveVector& a : grid) {
      for (const ObjectiveVector& b : grid) {
        CHECK(dominates(a, b) == dominates_oracle(a, b));
      }
    }
  }
}

TEST_CASE("dominates rejects mismatched vectors") {
  const auto a = vec({1.0, 2.0}, {Sense::kMinimize, Sense::kMinimize});
  const auto b = vec({1.0}, {Sense::kMinimize});
  CHECK_THROWS_AS((void)dominates(a, b), ConfigError);
  auto c = vec({1.0, 2.0}, {Sense::kMinimize, Sense::kMaximize});
  CHECK_THROWS_AS((void)dominates(a, c), ConfigError);
}

TEST_CASE("non_dominated_sort equals the peeling oracle") {
  Rng rng(0xf00d);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ObjectiveVector> points;
    const std::vector<Sense> senses = {Sense::kMaximize, Sense::kMinimize, Sense::kMinimize};
    for (int i = 0; i < 60; ++i) {
      // small grid so duplicates and ties are common
      points.push_back(vec({double(rng.uniform_index(5)), double(rng.uniform_index(5)),
                            double(rng.uniform_index(5))},
                           senses));
    }
    auto fronts = non_dominated_sort(points);
    auto expected = peeling_oracle(points);
    REQUIRE(fronts.size() == expected.size());
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      auto got = fronts[f];
      auto want = expected[f];
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      CHECK(got == want);
    }
  }
}

TEST_CASE("crowding distance hand example") {
  // [DERIVED] single objective (0,5,10): boundaries inf, middle (10-0)/10
  const std::vector<Sense> one_min = {Sense::kMinimize};
  std::vector<ObjectiveVector> front = {vec({0.0}, one_min), vec({5.0}, one_min),
                                        vec({10.0}, one_min)};
  const auto d = crowding_distance(front);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == kInfCrowding);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == kInfCrowding);
}

TEST_CASE("crowding distance front-size and zero-range rules") {
  const std::vector<Sense> senses = {Sense::kMinimize, Sense::kMinimize};
  std::vector<ObjectiveVector> pair = {vec({0.0, 1.0}, senses), vec({1.0, 0.0}, senses)};
  for (double d : crowding_distance(pair)) CHECK(d == kInfCrowding);

  // a constant objective contributes nothing
  std::vector<ObjectiveVector> flat = {vec({0.0, 7.0}, senses), vec({5.0, 7.0}, senses),
                                       vec({10.0, 7.0}, senses)};
  const auto d = crowding_distance(flat);
  CHECK(d[0] == kInfCrowding);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == kInfCrowding);

  // fully constant front: interior distances collapse to zero
  std::vector<ObjectiveVector> same = {vec({3.0, 3.0}, senses), vec({3.0, 3.0}, senses),
                                       vec({3.0, 3.0}, senses)};
  const auto ds = crowding_distance(same);
  CHECK(ds[1] == 0.0);
}

TEST_CASE("crowding distance boundary rule on random fronts") {
  Rng rng(31);
  const std::vector<Sense> senses = {Sense::kMinimize, Sense::kMaximize};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ObjectiveVector> front;
    for (int i = 0; i < 12; ++i) front.push_back(vec({rng.uniform(), rng.uniform()}, senses));
    const auto d = crowding_distance(front);
    for (std::size_t k = 0; k < senses.size(); ++k) {
      std::size_t lo = 0, hi = 0;
      for (std::size_t i = 1; i < front.size(); ++i) {
        if (front[i].canonical(k) < front[lo].canonical(k)) lo = i;
        if (front[i].canonical(k) > front[hi].canonical(k)) hi = i;
      }
      CHECK(d[lo] == kInfCrowding);
      CHECK(d[hi] == kInfCrowding);
    }
  }
}

TEST_CASE("evolve exhausts a small space and archives every trade-off") {
  // 10 genomes; objectives (x, x) under (maximize, minimize) are mutually
  // non-dominated, so the archive must hold the whole space.
  const SearchSpaceConfig space = line_space({10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  std::map<std::string, int> calls;
  const Evaluator evaluator = [&](const ArchitectureGenome& g, int) {
    calls[genome_key(g)]++;
    const double x = g.widths[0] / 10.0;
    return EvalResult{{x, x}, false};
  };
  SearchConfig cfg;
  cfg.population_size = 4;
  cfg.total_trials = 40;
  cfg.objective_set = ObjectiveSet::kNac;
  cfg.seed = 2024;
  const SearchResult result = evolve(space, evaluator, cfg);

  CHECK(result.trials.size() == 10);
  CHECK(result.archive.size() == 10);
  for (const auto& [key, n] : calls) CHECK(n == 1);

  std::set<int> widths;
  for (const Individual& ind : result.archive) widths.insert(ind.genome.widths[0]);
  CHECK(widths.size() == 10);
}

TEST_CASE("evolve is deterministic in the seed") {
  const SearchSpaceConfig space = line_space({10, 20, 30, 40, 50, 60, 70, 80});
  const Evaluator evaluator = [](const ArchitectureGenome& g, int) {
    const double x = g.widths[0] / 10.0;
    return EvalResult{{1.0 / x, x * x}, false};
  };
  SearchConfig cfg;
  cfg.population_size = 4;
  cfg.total_trials = 12;
  cfg.objective_set = ObjectiveSet::kNac;
  cfg.seed = 7;
  const SearchResult a = evolve(space, evaluator, cfg);
  const SearchResult b = evolve(space, evaluator, cfg);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].genome_key == b.trials[i].genome_key);
    CHECK(a.trials[i].objectives.values == b.trials[i].objectives.values);
  }
  REQUIRE(a.archive.size() == b.archive.size());
}

TEST_CASE("failed trials get the worst-case penalty vector") {
  const SearchSpaceConfig space = line_space({10, 20});
  const Evaluator evaluator = [](const ArchitectureGenome& g, int) {
    if (g.widths[0] == 20) return EvalResult{{}, true};
    return EvalResult{{0.5, 100.0}, false};
  };
  SearchConfig cfg;
  cfg.population_size = 2;
  cfg.total_trials = 4;
  cfg.objective_set = ObjectiveSet::kNac;
  cfg.seed = 5;
  const SearchResult result = evolve(space, evaluator, cfg);

  const TrialRecord* failed = nullptr;
  const TrialRecord* ok = nullptr;
  for (const TrialRecord& rec : result.trials) {
    (rec.failed ? failed : ok) = &rec;
  }
  REQUIRE(failed != nullptr);
  REQUIRE(ok != nullptr);
  CHECK(failed->objectives.values[0] == 0.0);  // maximized objective floors at 0
  if (failed->trial_index > ok->trial_index) {
    CHECK(failed->objectives.values[1] == 10.0 * 100.0);
  } else {
    CHECK(failed->objectives.values[1] == 1e9);
  }
  // the successful point dominates the penalty, so the archive is clean
  REQUIRE(result.archive.size() == 1);
  CHECK(result.archive[0].genome.widths[0] == 10);
}

TEST_CASE("non-finite evaluator values are treated as failures") {
  const SearchSpaceConfig space = line_space({10, 20});
  const Evaluator evaluator = [](const ArchitectureGenome& g, int) {
    if (g.widths[0] == 20) {
      return EvalResult{{std::numeric_limits<double>::quiet_NaN(), 1.0}, false};
    }
    return EvalResult{{0.5, 100.0}, false};
  };
  SearchConfig cfg;
  cfg.population_size = 2;
  cfg.total_trials = 4;
  cfg.objective_set = ObjectiveSet::kNac;
  cfg.seed = 5;
  const SearchResult result = evolve(space, evaluator, cfg);
  int failed = 0;
  for (const TrialRecord& rec : result.trials) failed += rec.failed;
  CHECK(failed == 1);
}

TEST_CASE("archive entries are mutually non-dominated") {
  const SearchSpaceConfig space = line_space({10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  const Evaluator evaluator = [](const ArchitectureGenome& g, int) {
    const double x = g.widths[0] / 10.0;
    // a mix of dominated and trade-off points
    const double acc = x <= 5 ? x / 10.0 : 0.5;
    return EvalResult{{acc, x * x}, false};
  };
  SearchConfig cfg;
  cfg.population_size = 4;
  cfg.total_trials = 30;
  cfg.objective_set = ObjectiveSet::kNac;
  cfg.seed = 77;
  const SearchResult result = evolve(space, evaluator, cfg);
  REQUIRE_FALSE(result.archive.empty());
  for (const Individual& a : result.archive) {
    for (const Individual& b : result.archive) {
      CHECK_FALSE(dominates(a.objectives, b.objectives));
    }
  }
}

TEST_CASE("pareto_filter keeps strictly better accuracy only") {
  std::vector<Individual> archive(3);
  const std::vector<Sense> senses = {Sense::kMaximize, Sense::kMinimize};
  archive[0].objectives = vec({0.2, 1.0}, senses);
  archive[1].objectives = vec({0.5, 2.0}, senses);
  archive[2].objectives = vec({0.8, 3.0}, senses);
  for (Individual& ind : archive) ind.objectives.names = {"accuracy", "bops"};
  const auto kept = pareto_filter(archive, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].objectives.values[0] == 0.8);

  for (Individual& ind : archive) ind.objectives.names = {"acc", "bops"};
  CHECK_THROWS_AS(pareto_filter(archive, 0.5), ConfigError);
}

TEST_CASE("search config validation") {
  SearchConfig cfg;
  cfg.population_size = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.population_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.population_size = 4;
  cfg.total_trials = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.total_trials = 8;
  cfg.crossover_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.crossover_prob = 0.9;
  cfg.epochs_per_trial = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.epochs_per_trial = 1;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("objective set helpers") {
  CHECK(objective_set_from_string("snacpack") == ObjectiveSet::kSnacPack);
  CHECK(objective_set_from_string("nac") == ObjectiveSet::kNac);
  CHECK_THROWS_AS(objective_set_from_string("other"), ConfigError);
  CHECK(objective_names(ObjectiveSet::kSnacPack) ==
        std::vector<std::string>{"accuracy", "est_avg_resources", "est_clock_cycles"});
  CHECK(objective_names(ObjectiveSet::kNac) == std::vector<std::string>{"accuracy", "bops"});
  CHECK(objective_senses(ObjectiveSet::kSnacPack).front() == Sense::kMaximize);
  CHECK(to_string(ObjectiveSet::kNac) == "nac");
}
