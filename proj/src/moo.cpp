#include "hwnas/moo.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hwnas/errors.hpp"
#include "hwnas/rng.hpp"

namespace hwnas {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size() || a.senses != b.senses) {
    throw ConfigError("dominance comparison across mismatched objective vectors");
  }
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double av = a.canonical(i);
    const double bv = b.canonical(i);
    if (av > bv) return false;
    if (av < bv) strictly_better = true;
  }
  return strictly_better;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<ObjectiveVector>& objectives) {
  const std::size_t n = objectives.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dom_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(objectives[i], objectives[j])) {
        dominated[i].push_back(j);
        ++dom_count[j];
      } else if (dominates(objectives[j], objectives[i])) {
        dominated[j].push_back(i);
        ++dom_count[i];
      }
    }
  }

  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (dom_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<std::size_t> next;
    for (std::size_t i : current) {
      for (std::size_t j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInfCrowding);
    return dist;
  }
  const std::size_t m = front[0].size();
  std::vector<std::size_t> order(n);
  for (std::size_t obj = 0; obj < m; ++obj) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = front[a].canonical(obj);
      const double vb = front[b].canonical(obj);
      return va != vb ? va < vb : a < b;
    });
    const double range = front[order[n - 1]].canonical(obj) - front[order[0]].canonical(obj);
    if (range <= 0.0) continue;
    dist[order[0]] = kInfCrowding;
    dist[order[n - 1]] = kInfCrowding;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (dist[order[i]] == kInfCrowding) continue;
      dist[order[i]] +=
          (front[order[i + 1]].canonical(obj) - front[order[i - 1]].canonical(obj)) / range;
    }
  }
  return dist;
}

ObjectiveSet objective_set_from_string(const std::string& s) {
  if (s == "snacpack") return ObjectiveSet::kSnacPack;
  if (s == "nac") return ObjectiveSet::kNac;
  throw ConfigError("unknown objective_set: " + s + " (expected 'snacpack' or 'nac')");
}

std::string to_string(ObjectiveSet set) {
  return set == ObjectiveSet::kSnacPack ? "snacpack" : "nac";
}

std::vector<std::string> objective_names(ObjectiveSet set) {
  if (set == ObjectiveSet::kSnacPack) {
    return {"accuracy", "est_avg_resources", "est_clock_cycles"};
  }
  return {"accuracy", "bops"};
}

std::vector<Sense> objective_senses(ObjectiveSet set) {
  if (set == ObjectiveSet::kSnacPack) {
    return {Sense::kMaximize, Sense::kMinimize, Sense::kMinimize};
  }
  return {Sense::kMaximize, Sense::kMinimize};
}

void SearchConfig::validate() const {
  if (population_size < 2 || population_size % 2 != 0) {
    throw ConfigError("population_size must be even and >= 2");
  }
  if (total_trials < population_size) {
    throw ConfigError("total_trials must be >= population_size");
  }
  if (epochs_per_trial < 0) throw ConfigError("epochs_per_trial must be >= 0");
  if (crossover_prob < 0.0 || crossover_prob > 1.0) {
    throw ConfigError("crossover_prob must be in [0,1]");
  }
}

namespace {

void assign_ranks_and_crowding(std::vector<Individual>& pop) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(pop.size());
  for (const Individual& ind : pop) objs.push_back(ind.objectives);
  const auto fronts = non_dominated_sort(objs);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<ObjectiveVector> front_objs;
    front_objs.reserve(fronts[f].size());
    for (std::size_t idx : fronts[f]) front_objs.push_back(objs[idx]);
    const std::vector<double> crowd = crowding_distance(front_objs);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      pop[fronts[f][k]].rank = static_cast<int>(f);
      pop[fronts[f][k]].crowding = crowd[k];
    }
  }
}

const Individual& tournament(const std::vector<Individual>& pop, Rng& rng) {
  const Individual& a = pop[rng.uniform_index(pop.size())];
  const Individual& b = pop[rng.uniform_index(pop.size())];
  if (a.rank != b.rank) return a.rank < b.rank ? a : b;
  if (a.crowding != b.crowding) return a.crowding > b.crowding ? a : b;
  return rng.bernoulli(0.5) ? a : b;
}

std::vector<Individual> environmental_selection(std::vector<Individual> combined,
                                                std::size_t target) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(combined.size());
  for (const Individual& ind : combined) objs.push_back(ind.objectives);
  const auto fronts = non_dominated_sort(objs);

  std::vector<Individual> next;
  next.reserve(target);
  for (std::size_t f = 0; f < fronts.size() && next.size() < target; ++f) {
    std::vector<ObjectiveVector> front_objs;
    front_objs.reserve(fronts[f].size());
    for (std::size_t idx : fronts[f]) front_objs.push_back(objs[idx]);
    const std::vector<double> crowd = crowding_distance(front_objs);

    std::vector<std::size_t> order(fronts[f].size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (next.size() + fronts[f].size() > target) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return crowd[a] != crowd[b] ? crowd[a] > crowd[b] : a < b;
      });
    }
    for (std::size_t i : order) {
      if (next.size() >= target) break;
      Individual ind = combined[fronts[f][i]];
      ind.rank = static_cast<int>(f);
      ind.crowding = crowd[i];
      next.push_back(std::move(ind));
    }
  }
  return next;
}

}  // namespace

SearchResult evolve(const SearchSpaceConfig& space, const Evaluator& evaluator,
                    const SearchConfig& cfg, const TrialObserver& observer) {
  cfg.validate();
  space.validate();
  const double mutation_rate =
      cfg.mutation_rate > 0.0 ? cfg.mutation_rate : space.default_mutation_rate();

  const std::vector<std::string> names = objective_names(cfg.objective_set);
  const std::vector<Sense> senses = objective_senses(cfg.objective_set);
  const std::size_t n_obj = names.size();

  SearchResult result;
  Rng rng(cfg.seed);

  struct CacheEntry {
    ObjectiveVector objectives;
    int trial_index;
  };
  std::unordered_map<std::string, CacheEntry> cache;
  // Worst canonical value per objective among successful trials, for the
  // failed-trial penalty.
  std::vector<double> worst(n_obj, 0.0);
  bool any_success = false;
  int trials_used = 0;

  auto penalty_vector = [&]() {
    std::vector<double> values(n_obj);
    for (std::size_t i = 0; i < n_obj; ++i) {
      if (senses[i] == Sense::kMaximize) {
        values[i] = 0.0;
      } else {
        values[i] = (any_success && worst[i] > 0.0) ? 10.0 * worst[i] : 1e9;
      }
    }
    return values;
  };

  // Returns nullptr when the trial budget is exhausted and the genome is not
  // cached.
  auto evaluate_genome = [&](const ArchitectureGenome& genome) -> const CacheEntry* {
    const std::string key = genome_key(genome);
    if (auto it = cache.find(key); it != cache.end()) return &it->second;
    if (trials_used >= cfg.total_trials) return nullptr;

    const int trial_index = trials_used++;
    EvalResult eval = evaluator(genome, trial_index);

    TrialRecord record;
    record.trial_index = trial_index;
    record.genome = genome;
    record.genome_key = key;
    record.failed = eval.failed;
    if (!eval.failed) {
      if (eval.values.size() != n_obj) {
        throw ConfigError("evaluator returned " + std::to_string(eval.values.size()) +
                          " objectives, expected " + std::to_string(n_obj));
      }
      for (double v : eval.values) {
        if (!std::isfinite(v)) {
          eval.failed = true;
          record.failed = true;
          break;
        }
      }
    }
    record.objectives.senses = senses;
    record.objectives.names = names;
    record.objectives.values = record.failed ? penalty_vector() : eval.values;
    if (!record.failed) {
      for (std::size_t i = 0; i < n_obj; ++i) {
        if (senses[i] == Sense::kMinimize) {
          worst[i] = any_success ? std::max(worst[i], record.objectives.values[i])
                                 : record.objectives.values[i];
        }
      }
      any_success = true;
    }

    auto [it, inserted] = cache.emplace(key, CacheEntry{record.objectives, trial_index});
    result.trials.push_back(record);
    if (observer) observer(result.trials.back());
    return &it->second;
  };

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int i = 0; i < cfg.population_size; ++i) {
    Individual ind;
    ind.genome = sample(space, rng);
    const CacheEntry* entry = evaluate_genome(ind.genome);
    ind.objectives = entry->objectives;
    ind.trial_index = entry->trial_index;
    pop.push_back(std::move(ind));
  }

  // A space smaller than the budget stops making progress once fully cached;
  // bail out after a run of generations that consume no trials.
  int stale_generations = 0;
  while (trials_used < cfg.total_trials && stale_generations < 50) {
    assign_ranks_and_crowding(pop);

    std::vector<ArchitectureGenome> offspring;
    offspring.reserve(static_cast<std::size_t>(cfg.population_size));
    while (offspring.size() < static_cast<std::size_t>(cfg.population_size)) {
      const ArchitectureGenome& pa = tournament(pop, rng).genome;
      const ArchitectureGenome& pb = tournament(pop, rng).genome;
      ArchitectureGenome c1 = pa;
      ArchitectureGenome c2 = pb;
      if (rng.uniform() < cfg.crossover_prob) {
        std::tie(c1, c2) = crossover(pa, pb, rng);
      }
      offspring.push_back(mutate(c1, space, mutation_rate, rng));
      if (offspring.size() < static_cast<std::size_t>(cfg.population_size)) {
        offspring.push_back(mutate(c2, space, mutation_rate, rng));
      }
    }

    const int trials_before = trials_used;
    bool budget_hit = false;
    std::vector<Individual> children;
    children.reserve(offspring.size());
    for (ArchitectureGenome& genome : offspring) {
      const CacheEntry* entry = evaluate_genome(genome);
      if (entry == nullptr) {
        budget_hit = true;
        break;
      }
      Individual child;
      child.genome = std::move(genome);
      child.objectives = entry->objectives;
      child.trial_index = entry->trial_index;
      children.push_back(std::move(child));
    }
    if (budget_hit) break;

    std::vector<Individual> combined = std::move(pop);
    combined.insert(combined.end(), std::make_move_iterator(children.begin()),
                    std::make_move_iterator(children.end()));
    pop = environmental_selection(std::move(combined),
                                  static_cast<std::size_t>(cfg.population_size));
    stale_generations = trials_used == trials_before ? stale_generations + 1 : 0;
  }

  std::vector<ObjectiveVector> all_objs;
  all_objs.reserve(result.trials.size());
  for (const TrialRecord& rec : result.trials) all_objs.push_back(rec.objectives);
  const auto fronts = non_dominated_sort(all_objs);
  if (!fronts.empty()) {
    std::vector<ObjectiveVector> front_objs;
    front_objs.reserve(fronts[0].size());
    for (std::size_t idx : fronts[0]) front_objs.push_back(all_objs[idx]);
    const std::vector<double> crowd = crowding_distance(front_objs);
    for (std::size_t k = 0; k < fronts[0].size(); ++k) {
      const TrialRecord& rec = result.trials[fronts[0][k]];
      Individual ind;
      ind.genome = rec.genome;
      ind.objectives = rec.objectives;
      ind.rank = 0;
      ind.crowding = crowd[k];
      ind.trial_index = rec.trial_index;
      result.archive.push_back(std::move(ind));
    }
  }
  return result;
}

std::vector<Individual> pareto_filter(const std::vector<Individual>& archive,
                                      double min_accuracy) {
  std::vector<Individual> out;
  for (const Individual& ind : archive) {
    const auto& names = ind.objectives.names;
    const auto it = std::find(names.begin(), names.end(), "accuracy");
    if (it == names.end()) throw ConfigError("archive objectives carry no 'accuracy' entry");
    const std::size_t idx = static_cast<std::size_t>(it - names.begin());
    if (ind.objectives.values[idx] > min_accuracy) out.push_back(ind);
  }
  return out;
}

}  // namespace hwnas
