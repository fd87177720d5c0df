#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pemfc/config.hpp"
#include "pemfc/drivers.hpp"

namespace pemfc {

enum class CrossoverType { one_point };
enum class MutationType { uniform_per_gene };
enum class SelectionType { roulette };

struct GaSettings {
  int max_iterations = 1500;
  int population_size = 160;
  // Per-gene mutation probability; default 0.33 / n_parameters when unset.
  std::optional<double> mutation_probability;
  // Elite fraction; default 1 / population_size when unset.
  std::optional<double> elit_ratio;
  double parents_portion = 0.2;
  CrossoverType crossover_type = CrossoverType::one_point;
  MutationType mutation_type = MutationType::uniform_per_gene;
  SelectionType selection_type = SelectionType::roulette;
  std::uint64_t rng_seed = 0;
  int workers = 0;            // 0 = hardware concurrency
  double wall_clock_budget = 0.0;  // s; 0 = unlimited

  double resolved_mutation_probability(int n_params) const {
    return mutation_probability.value_or(0.33 / n_params);
  }
  double resolved_elit_ratio() const {
    return elit_ratio.value_or(1.0 / population_size);
  }
  int elite_count() const;
  int parent_pool_size() const;
  void validate() const;  // throws ValidationError
};

struct ExperimentCurve {
  std::string name;
  OperatingConditions operating;
  std::vector<std::pair<double, double>> points;  // (i A/m^2, U_exp V)
};

struct CalibrationProblem {
  FuelCellConfig base;                  // bounds and fixed parameters
  std::vector<ExperimentCurve> experiments;
  std::string objective = "max_rel_dev";
  PolarizationOptions sim;              // fitness simulation settings

  void validate() const;  // >= 3 experiments, >= 5 points each, sane bounds
  std::uint64_t hash() const;           // identifies the problem in checkpoints
};

using Genome = std::array<double, UndeterminedParameters::kCount>;

// Maximum relative voltage deviation across all experiments and points;
// simulation failures score the fixed penalty 10.0.
double fitness(const Genome& genome, const CalibrationProblem& problem);
constexpr double kFitnessPenalty = 10.0;

// Minimization-adapted roulette selection over raw fitness scores:
// weight_k = (max_f - f_k) + eps*range. Consumes exactly one rng draw.
int roulette_select(std::span<const double> fitnesses, std::mt19937_64& rng);

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double wall_seconds = 0.0;
};

struct Individual {
  Genome genome{};
  double fitness = 0.0;
};

struct EvolveResult {
  Genome best_genome{};
  double best_fitness = 0.0;
  std::vector<GenerationStats> history;
  int generations_run = 0;
  bool population_size_warning = false;  // outside the recommended [100, 200]
};

struct Checkpoint {
  std::uint32_t generation = 0;
  std::vector<Individual> population;   // evaluated
  Genome best_genome{};
  double best_fitness = 0.0;
  std::string rng_state;
  std::uint64_t problem_hash = 0;
  std::vector<GenerationStats> history;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);  // throws on mismatch
};

using ProgressFn = std::function<void(const GenerationStats&)>;
using ObjectiveFn = std::function<double(const Genome&)>;

// Generation-synchronous real-coded GA: sort, copy elites, fill a top-
// fraction parent pool, roulette-select pairs, one-point crossover, per-gene
// uniform mutation. Deterministic for a fixed seed, including across
// checkpoint resume; objective evaluations run on a worker pool and must be
// pure.
EvolveResult evolve_objective(
    const ObjectiveFn& objective,
    const std::array<Bounds, UndeterminedParameters::kCount>& bounds,
    const GaSettings& settings, std::uint64_t problem_hash,
    const std::optional<Checkpoint>& resume = std::nullopt,
    const std::string& checkpoint_path = "",
    const ProgressFn& progress = nullptr);

// Calibration entry point: the objective is `fitness` over the problem.
EvolveResult evolve(const CalibrationProblem& problem,
                    const GaSettings& settings,
                    const std::optional<Checkpoint>& resume = std::nullopt,
                    const std::string& checkpoint_path = "",
                    const ProgressFn& progress = nullptr);

// Shared helper: worker count honoring the PEMFC_WORKERS env override.
int effective_workers(int requested);

}  // namespace pemfc
