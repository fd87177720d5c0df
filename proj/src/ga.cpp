#include "pemfc/ga.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "pemfc/errors.hpp"

namespace pemfc {

int GaSettings::elite_count() const {
  const int e = static_cast<int>(
      std::lround(resolved_elit_ratio() * population_size));
  return std::max(1, e);
}

int GaSettings::parent_pool_size() const {
  const int p =
      static_cast<int>(std::lround(parents_portion * population_size));
  return std::clamp(p, 2, population_size);
}

void GaSettings::validate() const {
  if (population_size < 4)
    throw ValidationError("population_size", "must be at least 4");
  if (!(parents_portion > 0.0 && parents_portion < 1.0))
    throw ValidationError("parents_portion", "must lie in (0, 1)");
  if (max_iterations < 1)
    throw ValidationError("max_iterations", "must be at least 1");
  if (mutation_probability && !(*mutation_probability >= 0.0 &&
                                *mutation_probability <= 1.0))
    throw ValidationError("mutation_probability", "must lie in [0, 1]");
  if (elite_count() > parent_pool_size())
    throw ValidationError("elit_ratio",
                          "elite count exceeds the parent pool");
}

void CalibrationProblem::validate() const {
  base.validate();
  if (experiments.size() < 3)
    throw ValidationError("experiments",
                          "at least three polarization curves required");
  for (const auto& e : experiments) {
    if (e.points.size() < 5)
      throw ValidationError("experiments",
                            "curve \"" + e.name + "\" has fewer than 5 points");
    for (std::size_t k = 1; k < e.points.size(); ++k)
      if (e.points[k].first <= e.points[k - 1].first)
        throw ValidationError(
            "experiments", "curve \"" + e.name + "\" currents not increasing");
  }
  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    const Bounds& b = base.undetermined.bounds(k);
    if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi))
      throw ValidationError(UndeterminedParameters::names()[k] + "_bounds",
                            "bounds must be finite with lo < hi");
  }
}

namespace {

void hash_mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

std::uint64_t hash_double(double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, sizeof(u));
  return u;
}

}  // namespace

std::uint64_t CalibrationProblem::hash() const {
  std::uint64_t h = 0xC0FFEE;
  for (const auto& e : experiments) {
    hash_mix(h, hash_double(e.operating.T_fc));
    hash_mix(h, hash_double(e.operating.P_des));
    hash_mix(h, hash_double(e.operating.Phi_c_des));
    hash_mix(h, hash_double(e.operating.Phi_a_des));
    hash_mix(h, hash_double(e.operating.S_a));
    hash_mix(h, hash_double(e.operating.S_c));
    for (auto& [i, u] : e.points) {
      hash_mix(h, hash_double(i));
      hash_mix(h, hash_double(u));
    }
  }
  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    hash_mix(h, hash_double(base.undetermined.bounds(k).lo));
    hash_mix(h, hash_double(base.undetermined.bounds(k).hi));
  }
  hash_mix(h, hash_double(base.operating.T_fc));
  hash_mix(h, static_cast<std::uint64_t>(base.computing.n_gdl));
  return h;
}

double fitness(const Genome& genome, const CalibrationProblem& problem) {
  try {
    double worst = 0.0;
    for (const auto& exp : problem.experiments) {
      FuelCellConfig cfg = problem.base;
      cfg.operating = exp.operating;
      cfg.undetermined.from_array(genome);

      std::vector<double> currents;
      currents.reserve(exp.points.size());
      for (auto& [i, u] : exp.points) currents.push_back(i);

      auto curve = run_polarization_at(cfg, currents, problem.sim);
      if (curve.collapsed || curve.points.size() != exp.points.size())
        return kFitnessPenalty;
      for (std::size_t k = 0; k < exp.points.size(); ++k) {
        const double u_exp = exp.points[k].second;
        const double dev =
            std::abs(curve.points[k].second - u_exp) / std::abs(u_exp);
        worst = std::max(worst, dev);
      }
    }
    return worst;
  } catch (const std::exception&) {
    return kFitnessPenalty;
  }
}

int roulette_select(std::span<const double> fitnesses, std::mt19937_64& rng) {
  const std::size_t n = fitnesses.size();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double draw = u01(rng);
  if (n == 1) return 0;
  const auto [lo, hi] = std::minmax_element(fitnesses.begin(), fitnesses.end());
  const double range = *hi - *lo;
  double total = 0.0;
  for (double f : fitnesses) total += (*hi - f) + 0.01 * range;
  if (total <= 0.0)  // all equal: uniform pick
    return static_cast<int>(std::min(n - 1, static_cast<std::size_t>(draw * n)));
  double acc = 0.0;
  const double target = draw * total;
  for (std::size_t k = 0; k < n; ++k) {
    acc += (*hi - fitnesses[k]) + 0.01 * range;
    if (target <= acc) return static_cast<int>(k);
  }
  return static_cast<int>(n - 1);
}

int effective_workers(int requested) {
  if (const char* env = std::getenv("PEMFC_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

// Evaluate all individuals lacking a fitness, order-independently.
void evaluate_population(std::vector<Individual>& pop,
                         const std::vector<bool>& needs_eval,
                         const ObjectiveFn& objective, int workers) {
  std::vector<int> todo;
  for (std::size_t k = 0; k < pop.size(); ++k)
    if (needs_eval[k]) todo.push_back(static_cast<int>(k));
  if (todo.empty()) return;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= todo.size()) return;
      Individual& ind = pop[todo[j]];
      ind.fitness = objective(ind.genome);
    }
  };
  const int nw = std::min<int>(workers, static_cast<int>(todo.size()));
  if (nw <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(nw);
  for (int k = 0; k < nw; ++k) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

}  // namespace

// ---- checkpoint serialization (little-endian POD stream) ----

namespace {

constexpr char kMagic[8] = {'P', 'E', 'M', 'G', 'A', '0', '0', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointMismatch("truncated checkpoint file");
  return v;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(tmp, "cannot open for writing");
    os.write(kMagic, sizeof(kMagic));
    put<std::uint64_t>(os, problem_hash);
    put<std::uint32_t>(os, generation);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(population.size()));
    put<std::uint32_t>(os, UndeterminedParameters::kCount);
    for (const auto& ind : population) {
      for (double g : ind.genome) put(os, g);
      put(os, ind.fitness);
    }
    for (double g : best_genome) put(os, g);
    put(os, best_fitness);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(history.size()));
    for (const auto& h : history) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(h.generation));
      put(os, h.best);
      put(os, h.mean);
      put(os, h.wall_seconds);
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(rng_state.size()));
    os.write(rng_state.data(),
             static_cast<std::streamsize>(rng_state.size()));
    if (!os) throw IoError(tmp, "write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError(path, "atomic rename failed");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open checkpoint");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointMismatch("not a calibration checkpoint file");
  Checkpoint cp;
  cp.problem_hash = get<std::uint64_t>(is);
  cp.generation = get<std::uint32_t>(is);
  const auto pop_n = get<std::uint32_t>(is);
  const auto n_params = get<std::uint32_t>(is);
  if (n_params != UndeterminedParameters::kCount)
    throw CheckpointMismatch("parameter count differs");
  cp.population.resize(pop_n);
  for (auto& ind : cp.population) {
    for (double& g : ind.genome) g = get<double>(is);
    ind.fitness = get<double>(is);
  }
  for (double& g : cp.best_genome) g = get<double>(is);
  cp.best_fitness = get<double>(is);
  const auto hist_n = get<std::uint32_t>(is);
  cp.history.resize(hist_n);
  for (auto& h : cp.history) {
    h.generation = static_cast<int>(get<std::uint32_t>(is));
    h.best = get<double>(is);
    h.mean = get<double>(is);
    h.wall_seconds = get<double>(is);
  }
  const auto rng_n = get<std::uint32_t>(is);
  cp.rng_state.resize(rng_n);
  is.read(cp.rng_state.data(), rng_n);
  if (!is) throw CheckpointMismatch("truncated checkpoint file");
  return cp;
}

EvolveResult evolve_objective(
    const ObjectiveFn& objective,
    const std::array<Bounds, UndeterminedParameters::kCount>& bounds,
    const GaSettings& settings, std::uint64_t problem_hash,
    const std::optional<Checkpoint>& resume,
    const std::string& checkpoint_path, const ProgressFn& progress) {
  settings.validate();
  const auto wall0 = std::chrono::steady_clock::now();

  const int n_params = UndeterminedParameters::kCount;
  const int pop_n = settings.population_size;
  const int n_elite = settings.elite_count();
  const int n_parents = settings.parent_pool_size();
  const double p_mut = settings.resolved_mutation_probability(n_params);
  const int workers = effective_workers(settings.workers);

  EvolveResult result;
  result.population_size_warning = pop_n < 100 || pop_n > 200;

  std::mt19937_64 rng(settings.rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto draw_in = [&](const Bounds& b) {
    return b.lo + (b.hi - b.lo) * u01(rng);
  };

  std::vector<Individual> pop(pop_n);
  std::vector<bool> needs_eval(pop_n, true);

  // Sorted parents -> elites copied unchanged -> roulette pairs from the top
  // parents_portion pool -> one-point crossover -> per-gene uniform mutation.
  std::uniform_int_distribution<int> cut_dist(1, n_params - 1);
  auto variation = [&] {
    std::vector<double> pool_fitness(n_parents);
    for (int k = 0; k < n_parents; ++k) pool_fitness[k] = pop[k].fitness;
    std::vector<Individual> next(pop_n);
    std::vector<bool> next_needs(pop_n, true);
    for (int k = 0; k < n_elite; ++k) {
      next[k] = pop[k];
      next_needs[k] = false;
    }
    for (int k = n_elite; k < pop_n; ++k) {
      const int pa = roulette_select(pool_fitness, rng);
      const int pb = roulette_select(pool_fitness, rng);
      const int cut = cut_dist(rng);
      Individual child;
      for (int g = 0; g < n_params; ++g)
        child.genome[g] = g < cut ? pop[pa].genome[g] : pop[pb].genome[g];
      for (int g = 0; g < n_params; ++g)
        if (u01(rng) < p_mut) child.genome[g] = draw_in(bounds[g]);
      next[k] = child;
    }
    pop = std::move(next);
    needs_eval = std::move(next_needs);
  };

  int first_gen = 1;  // 1-based generation index of the next evaluation
  result.best_fitness = std::numeric_limits<double>::infinity();

  if (resume) {
    if (resume->problem_hash != problem_hash)
      throw CheckpointMismatch("checkpoint belongs to a different problem");
    if (static_cast<int>(resume->population.size()) != pop_n)
      throw CheckpointMismatch("checkpoint population size differs");
    pop = resume->population;
    std::istringstream is(resume->rng_state);
    is >> rng;
    result.history = resume->history;
    result.best_genome = resume->best_genome;
    result.best_fitness = resume->best_fitness;
    result.generations_run = static_cast<int>(resume->generation);
    if (result.generations_run >= settings.max_iterations) return result;
    variation();  // the restored rng stream continues exactly
    first_gen = result.generations_run + 1;
  } else {
    for (auto& ind : pop)
      for (int k = 0; k < n_params; ++k) ind.genome[k] = draw_in(bounds[k]);
  }

  for (int gen = first_gen; gen <= settings.max_iterations; ++gen) {
    evaluate_population(pop, needs_eval, objective, workers);
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Individual& a, const Individual& b) {
                       return a.fitness < b.fitness;
                     });
    if (pop.front().fitness < result.best_fitness) {
      result.best_fitness = pop.front().fitness;
      result.best_genome = pop.front().genome;
    }

    GenerationStats stats;
    stats.generation = gen;
    stats.best = result.best_fitness;
    double sum = 0.0;
    for (const auto& ind : pop) sum += ind.fitness;
    stats.mean = sum / pop_n;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
            .count();
    result.history.push_back(stats);
    if (progress) progress(stats);
    result.generations_run = gen;

    if (!checkpoint_path.empty()) {
      Checkpoint cp;
      cp.generation = static_cast<std::uint32_t>(gen);
      cp.population = pop;
      cp.best_genome = result.best_genome;
      cp.best_fitness = result.best_fitness;
      cp.problem_hash = problem_hash;
      cp.history = result.history;
      std::ostringstream os;
      os << rng;
      cp.rng_state = os.str();
      cp.save(checkpoint_path);
    }

    if (gen >= settings.max_iterations) break;
    if (settings.wall_clock_budget > 0.0 &&
        stats.wall_seconds >= settings.wall_clock_budget)
      break;
    variation();
  }
  return result;
}

EvolveResult evolve(const CalibrationProblem& problem,
                    const GaSettings& settings,
                    const std::optional<Checkpoint>& resume,
                    const std::string& checkpoint_path,
                    const ProgressFn& progress) {
  problem.validate();
  std::array<Bounds, UndeterminedParameters::kCount> bounds;
  for (int k = 0; k < UndeterminedParameters::kCount; ++k)
    bounds[k] = problem.base.undetermined.bounds(k);
  auto objective = [&problem](const Genome& g) { return fitness(g, problem); };
  return evolve_objective(objective, bounds, settings, problem.hash(), resume,
                          checkpoint_path, progress);
}

}  // namespace pemfc
