#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hwnas/arch_space.hpp"

namespace hwnas {

enum class Sense { kMinimize, kMaximize };

// Objective values as reported (accuracy stays a fraction); comparisons go
// through the canonical minimizing form.
struct ObjectiveVector {
  std::vector<double> values;
  std::vector<Sense> senses;
  std::vector<std::string> names;

  double canonical(std::size_t i) const {
    return senses[i] == Sense::kMinimize ? values[i] : -values[i];
  }
  std::size_t size() const { return values.size(); }
};

// Strict Pareto dominance: no worse everywhere, better somewhere. Throws
// ConfigError on mismatched dimensions or senses.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

struct Individual {
  ArchitectureGenome genome;
  ObjectiveVector objectives;
  int rank = 0;
  double crowding = 0.0;
  int trial_index = -1;
};

// Fast non-dominated sort; front 0 holds the non-dominated indices, front k
// the points non-dominated once earlier fronts are removed.
std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<ObjectiveVector>& objectives);

// Per-objective normalized neighbor gaps; boundary points get +inf and
// zero-range objectives contribute nothing. Fronts of size <= 2 are all +inf.
std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front);

inline constexpr double kInfCrowding = std::numeric_limits<double>::infinity();

enum class ObjectiveSet { kSnacPack, kNac };

ObjectiveSet objective_set_from_string(const std::string& s);
std::string to_string(ObjectiveSet set);
std::vector<std::string> objective_names(ObjectiveSet set);
std::vector<Sense> objective_senses(ObjectiveSet set);

struct SearchConfig {
  int population_size = 20;
  int total_trials = 500;
  int epochs_per_trial = 5;
  std::uint64_t seed = 0;
  ObjectiveSet objective_set = ObjectiveSet::kSnacPack;
  double crossover_prob = 0.9;
  // <= 0 means the space default of one expected flip per genome
  double mutation_rate = -1.0;

  void validate() const;
};

struct TrialRecord {
  int trial_index = -1;
  ArchitectureGenome genome;
  std::string genome_key;
  ObjectiveVector objectives;
  bool failed = false;
};

// Evaluator contract: return the as-reported objective values for a genome,
// or failed=true to request the worst-case penalty vector. Values must be
// finite when failed is false.
struct EvalResult {
  std::vector<double> values;
  bool failed = false;
};
using Evaluator = std::function<EvalResult(const ArchitectureGenome&, int trial_index)>;
using TrialObserver = std::function<void(const TrialRecord&)>;

struct SearchResult {
  std::vector<Individual> archive;  // non-dominated over every evaluated genome
  std::vector<TrialRecord> trials;  // one row per evaluator invocation
};

// NSGA-II generational loop. Genomes are cached by key, so re-encountered
// duplicates cost no trials; evaluation is sequential in trial order, which
// keeps the failed-trial penalties and the trial log byte-reproducible.
SearchResult evolve(const SearchSpaceConfig& space, const Evaluator& evaluator,
                    const SearchConfig& cfg, const TrialObserver& observer = nullptr);

// Archive entries with accuracy strictly above the threshold, order kept.
std::vector<Individual> pareto_filter(const std::vector<Individual>& archive,
                                      double min_accuracy);

}  // namespace hwnas
