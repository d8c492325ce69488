#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsmrn/graph.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn {

struct MethodScore {
  std::string method;
  std::optional<double> mape;  // empty when nothing was scored
  std::optional<double> rmse;
  std::size_t scored = 0;
  double train_ms = 0.0;
  double predict_ms = 0.0;
};

struct StepScore {
  std::string method;
  int step = 0;  // snapshot index (online) or horizon (prediction)
  double mape = 0.0;
  double rmse = 0.0;
  std::size_t scored = 0;
  double ms = 0.0;
};

struct ExperimentReport {
  std::string task;
  bool empty_holdout = false;
  std::vector<MethodScore> methods;
  std::vector<StepScore> steps;
  std::vector<std::pair<std::string, std::string>> config;

  const MethodScore* find(std::string_view method) const;
  /// Mean of the per-step MAPE values recorded for `method`.
  double mean_step_mape(std::string_view method) const;
};

/// Key/value echo of every hyperparameter, for reports.
std::vector<std::pair<std::string, std::string>> describe(const Hyperparams& hyper);

struct CompletionConfig {
  Hyperparams hyper;
  double mask_rate = 0.2;
  std::uint64_t mask_seed = 7;
  int knn_k = 5;
};

/// Hides `mask_rate` of the observed entries and scores the global,
/// incremental, per-snapshot naive and KNN completions on them.
ExperimentReport run_completion_experiment(const RoadNetwork& network, const SnapshotSeries& series,
                                           const CompletionConfig& config);

struct PredictionConfig {
  Hyperparams hyper;
  int window = 10;   // snapshots used for training
  int horizon = 1;   // spans predicted past the window
};

/// Learns on snapshots [0, window) with the global and incremental learners
/// and scores h-step-ahead predictions on snapshots window .. window+h-1.
ExperimentReport run_prediction_experiment(const RoadNetwork& network, const SnapshotSeries& series,
                                           const PredictionConfig& config);

enum class OnlineStrategy { kInc, kOld, kNaive, kAll };

std::string_view to_string(OnlineStrategy strategy);
OnlineStrategy parse_strategy(std::string_view name);

struct OnlineConfig {
  Hyperparams hyper;
  int window = 10;
  std::vector<OnlineStrategy> strategies{OnlineStrategy::kInc};
};

/// Batch-window forecasting: global learning on each window of `window`
/// snapshots, then one-step predictions over the next window with each
/// strategy, revealing the truth after every step.
ExperimentReport run_online_forecast(const RoadNetwork& network, const SnapshotSeries& series,
                                     const OnlineConfig& config);

/// Predicted values at every observed entry of `truth`, from latents U.
std::vector<double> predict_on_pattern(const Matrix& U, const Matrix& B, const SparseMatrix& truth);

}  // namespace lsmrn
