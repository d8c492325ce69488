#include "lsmrn/experiments.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

#include "lsmrn/baselines.hpp"
#include "lsmrn/data.hpp"
#include "lsmrn/errors.hpp"
#include "lsmrn/global_learning.hpp"
#include "lsmrn/incremental.hpp"
#include "lsmrn/metrics.hpp"

namespace lsmrn {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<double> observed_values(const SparseMatrix& truth) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(truth.nonZeros()));
  for (Eigen::Index i = 0; i < truth.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(truth, i); it; ++it) out.push_back(it.value());
  }
  return out;
}

MethodScore score(std::string method, std::span<const double> truth, std::span<const double> predicted) {
  MethodScore s;
  s.method = std::move(method);
  s.scored = truth.size();
  if (!truth.empty()) {
    s.mape = lsmrn::mape(truth, predicted);
    s.rmse = lsmrn::rmse(truth, predicted);
  }
  return s;
}

// Accumulates per-step truth/prediction pairs into one pooled score.
struct Pool {
  std::vector<double> truth;
  std::vector<double> predicted;
  double train_ms = 0.0;
  double predict_ms = 0.0;
  void add(std::span<const double> t, std::span<const double> p) {
    truth.insert(truth.end(), t.begin(), t.end());
    predicted.insert(predicted.end(), p.begin(), p.end());
  }
  MethodScore finish(std::string method) const {
    MethodScore s = score(std::move(method), truth, predicted);
    s.train_ms = train_ms;
    s.predict_ms = predict_ms;
    return s;
  }
};

}  // namespace

const MethodScore* ExperimentReport::find(std::string_view method) const {
  for (const auto& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

double ExperimentReport::mean_step_mape(std::string_view method) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : steps) {
    if (s.method == method) {
      sum += s.mape;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

std::vector<std::pair<std::string, std::string>> describe(const Hyperparams& hyper) {
  return {
      {"k", std::to_string(hyper.k)},
      {"lambda", format_number(hyper.lambda)},
      {"gamma", format_number(hyper.gamma)},
      {"delta", format_number(hyper.delta)},
      {"phi", format_number(hyper.phi)},
      {"C", format_number(hyper.C)},
      {"tol", format_number(hyper.tol)},
      {"max_iters", std::to_string(hyper.max_iters)},
      {"seed", std::to_string(hyper.seed)},
  };
}

std::vector<double> predict_on_pattern(const Matrix& U, const Matrix& B, const SparseMatrix& truth) {
  return observed_values(masked_product(truth, U, B));
}

ExperimentReport run_completion_experiment(const RoadNetwork& network, const SnapshotSeries& series,
                                           const CompletionConfig& config) {
  config.hyper.validate();
  if (series.num_snapshots() < 1) throw DataError("completion needs at least one snapshot");
  if (network.num_vertices() != series.num_vertices()) throw DataError("network and series disagree on n");

  ExperimentReport report;
  report.task = "completion";
  report.config = describe(config.hyper);
  report.config.emplace_back("T", std::to_string(series.num_snapshots()));
  report.config.emplace_back("mask_rate", format_number(config.mask_rate));
  report.config.emplace_back("mask_seed", std::to_string(config.mask_seed));
  report.config.emplace_back("knn_k", std::to_string(config.knn_k));

  auto [masked, mask] = mask_holdout(series, config.mask_rate, config.mask_seed);
  if (mask.empty()) {
    report.empty_holdout = true;
    return report;
  }
  std::vector<double> truth;
  truth.reserve(mask.size());
  for (const auto& e : mask.entries) truth.push_back(e.value);

  auto score_state = [&](const std::string& name, const LatentState& state, double train_ms) {
    Stopwatch watch;
    std::vector<double> predicted;
    predicted.reserve(mask.size());
    for (const auto& e : mask.entries) {
      predicted.push_back(edge_value(state.U[static_cast<std::size_t>(e.t)], state.B, e.src, e.dst));
    }
    MethodScore s = score(name, truth, predicted);
    s.train_ms = train_ms;
    s.predict_ms = watch.elapsed_ms();
    report.methods.push_back(std::move(s));
  };

  const LaplacianTriple laplacian = build_proximity_laplacian(network);
  {
    Stopwatch watch;
    const GlobalLearnResult global = global_learn(masked, laplacian, config.hyper);
    score_state("global", global.state, watch.elapsed_ms());
  }
  {
    Stopwatch watch;
    const IncrementalLearnResult inc = incremental_learn(masked, network, laplacian, config.hyper);
    score_state("incremental", inc.state, watch.elapsed_ms());
  }
  {
    Stopwatch watch;
    std::vector<Matrix> us;
    std::vector<Matrix> bs;
    for (int t = 0; t < masked.num_snapshots(); ++t) {
      GlobalLearnResult one = global_learn(masked.slice(t, 1), laplacian, config.hyper);
      us.push_back(std::move(one.state.U.front()));
      bs.push_back(std::move(one.state.B));
    }
    const double train_ms = watch.elapsed_ms();
    Stopwatch predict_watch;
    std::vector<double> predicted;
    predicted.reserve(mask.size());
    for (const auto& e : mask.entries) {
      const auto t = static_cast<std::size_t>(e.t);
      predicted.push_back(edge_value(us[t], bs[t], e.src, e.dst));
    }
    MethodScore s = score("naive", truth, predicted);
    s.train_ms = train_ms;
    s.predict_ms = predict_watch.elapsed_ms();
    report.methods.push_back(std::move(s));
  }
  if (network.has_coords()) {
    Stopwatch watch;
    const SnapshotSeries completed = knn_complete(masked, network, config.knn_k);
    std::vector<double> predicted;
    predicted.reserve(mask.size());
    for (const auto& e : mask.entries) predicted.push_back(completed.snapshot(e.t).coeff(e.src, e.dst));
    MethodScore s = score("knn", truth, predicted);
    s.predict_ms = watch.elapsed_ms();
    report.methods.push_back(std::move(s));
  }
  return report;
}

ExperimentReport run_prediction_experiment(const RoadNetwork& network, const SnapshotSeries& series,
                                           const PredictionConfig& config) {
  config.hyper.validate();
  if (config.horizon < 1) throw ConfigError("prediction horizon must be >= 1");
  if (config.window < 1) throw ConfigError("training window T must be >= 1");
  if (series.num_snapshots() < config.window + config.horizon) {
    throw DataError("prediction needs T + h = " + std::to_string(config.window + config.horizon) +
                    " snapshots, series has " + std::to_string(series.num_snapshots()));
  }

  ExperimentReport report;
  report.task = "prediction";
  report.config = describe(config.hyper);
  report.config.emplace_back("T", std::to_string(config.window));
  report.config.emplace_back("h", std::to_string(config.horizon));

  const LaplacianTriple laplacian = build_proximity_laplacian(network);
  const SnapshotSeries train = series.slice(0, config.window);

  auto evaluate = [&](const std::string& name, const LatentState& state, double train_ms) {
    Pool pool;
    pool.train_ms = train_ms;
    for (int step = 1; step <= config.horizon; ++step) {
      Stopwatch watch;
      const SparseMatrix& truth_matrix = series.snapshot(config.window + step - 1);
      const std::vector<double> predicted = predict_on_pattern(propagate_latent(state, step), state.B, truth_matrix);
      const double ms = watch.elapsed_ms();
      pool.predict_ms += ms;
      const std::vector<double> truth = observed_values(truth_matrix);
      if (truth.empty()) continue;
      report.steps.push_back({name, step, mape(truth, predicted), rmse(truth, predicted), truth.size(), ms});
      pool.add(truth, predicted);
    }
    report.methods.push_back(pool.finish(name));
  };

  {
    Stopwatch watch;
    const GlobalLearnResult global = global_learn(train, laplacian, config.hyper);
    evaluate("global", global.state, watch.elapsed_ms());
  }
  {
    Stopwatch watch;
    const IncrementalLearnResult inc = incremental_learn(train, network, laplacian, config.hyper);
    evaluate("incremental", inc.state, watch.elapsed_ms());
  }
  return report;
}

std::string_view to_string(OnlineStrategy strategy) {
  switch (strategy) {
    case OnlineStrategy::kInc: return "inc";
    case OnlineStrategy::kOld: return "old";
    case OnlineStrategy::kNaive: return "naive";
    case OnlineStrategy::kAll: return "all";
  }
  return "unknown";
}

OnlineStrategy parse_strategy(std::string_view name) {
  if (name == "inc") return OnlineStrategy::kInc;
  if (name == "old") return OnlineStrategy::kOld;
  if (name == "naive") return OnlineStrategy::kNaive;
  if (name == "all") return OnlineStrategy::kAll;
  throw ConfigError("unknown online strategy '" + std::string(name) + "' (expected inc, old, naive or all)");
}

ExperimentReport run_online_forecast(const RoadNetwork& network, const SnapshotSeries& series,
                                     const OnlineConfig& config) {
  config.hyper.validate();
  const int T = config.window;
  if (T < 1) throw ConfigError("window length T must be >= 1");
  if (config.strategies.empty()) throw ConfigError("no online strategy selected");
  const int length = series.num_snapshots();
  if (length < 2 * T) {
    throw DataError("online forecasting needs at least 2T = " + std::to_string(2 * T) + " snapshots, stream has " +
                    std::to_string(length));
  }

  ExperimentReport report;
  report.task = "online";
  report.config = describe(config.hyper);
  report.config.emplace_back("T", std::to_string(T));

  const LaplacianTriple laplacian = build_proximity_laplacian(network);
  const SccOrdering ordering = update_ordering(network, config.hyper.seed);
  std::vector<Pool> pools(config.strategies.size());

  for (int boundary = T; boundary < length; boundary += T) {
    Stopwatch window_watch;
    const GlobalLearnResult window = global_learn(series.slice(boundary - T, T), laplacian, config.hyper);
    const double window_ms = window_watch.elapsed_ms();
    const LatentState& base = window.state;
    const int steps = std::min(T, length - boundary);

    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      const OnlineStrategy strategy = config.strategies[s];
      Pool& pool = pools[s];
      pool.train_ms += window_ms;
      Matrix current = base.U.back();

      for (int i = 1; i <= steps; ++i) {
        const int target = boundary + i - 1;
        const SparseMatrix& truth_matrix = series.snapshot(target);
        Stopwatch watch;
        std::vector<double> predicted;
        switch (strategy) {
          case OnlineStrategy::kInc: {
            if (i > 1) {
              current = incremental_update(current, base.B, series.snapshot(target - 1), ordering, config.hyper).U;
            }
            predicted = predict_on_pattern(current * base.A, base.B, truth_matrix);
            break;
          }
          case OnlineStrategy::kOld:
            predicted = predict_on_pattern(propagate_latent(base, i), base.B, truth_matrix);
            break;
          case OnlineStrategy::kNaive: {
            const GlobalLearnResult latest = global_learn(series.slice(target - 1, 1), laplacian, config.hyper);
            predicted = predict_on_pattern(latest.state.U.front(), latest.state.B, truth_matrix);
            break;
          }
          case OnlineStrategy::kAll: {
            const GlobalLearnResult all = global_learn(series.slice(0, target), laplacian, config.hyper);
            predicted = predict_on_pattern(propagate_latent(all.state, 1), all.state.B, truth_matrix);
            break;
          }
        }
        const double ms = watch.elapsed_ms();
        pool.predict_ms += ms;
        const std::vector<double> truth = observed_values(truth_matrix);
        if (truth.empty()) continue;
        report.steps.push_back(
            {std::string(to_string(strategy)), target, mape(truth, predicted), rmse(truth, predicted), truth.size(), ms});
        pool.add(truth, predicted);
      }
    }
  }
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    report.methods.push_back(pools[s].finish(std::string(to_string(config.strategies[s]))));
  }
  return report;
}

}  // namespace lsmrn
