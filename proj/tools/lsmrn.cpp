#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "lsmrn/lsmrn.hpp"

namespace fs = std::filesystem;
using namespace lsmrn;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

struct InputFlags {
  std::string network;
  std::string coords;
  std::string series;
  std::string readings;
  double span = 5.0;
  int T = 0;
};

struct Options {
  InputFlags in;
  Hyperparams hyper;
  std::string out;
  double mask_rate = 0.2;
  std::uint64_t mask_seed = 7;
  int knn_k = 5;
  int horizon = 1;
  std::vector<std::string> strategies{"inc"};

  SyntheticConfig synth;
  SyntheticConfig bench;
  bool identity_transition = false;
  int repeats = 3;

  Options() {
    bench.n = 1000;
    bench.edge_density = 5.0;
    bench.noise_sd = 1.0;
    bench.drift = 0.05;
  }
};

void add_input_flags(CLI::App* cmd, InputFlags& in, bool window_T) {
  cmd->add_option("--network", in.network, "Edge list CSV (src,dst)")->required();
  cmd->add_option("--coords", in.coords, "Vertex coordinates CSV (vertex,x,y)");
  auto* series = cmd->add_option("--series", in.series, "Snapshot archive directory");
  auto* readings = cmd->add_option("--readings", in.readings, "Raw readings CSV (timestamp,src,dst,speed)");
  series->excludes(readings);
  cmd->add_option("--span", in.span, "Minutes per snapshot when reading raw readings")->capture_default_str();
  cmd->add_option("--T", in.T,
                  window_T ? "Window length in snapshots (0 = 10)" : "Use only the first T snapshots (0 = all)")
      ->capture_default_str();
}

void add_hyper_flags(CLI::App* cmd, Hyperparams& h) {
  cmd->add_option("--k", h.k, "Latent rank")->capture_default_str();
  cmd->add_option("--lambda", h.lambda, "Laplacian weight")->capture_default_str();
  cmd->add_option("--gamma", h.gamma, "Transition weight")->capture_default_str();
  cmd->add_option("--delta", h.delta, "Insensitivity band (speed units)")->capture_default_str();
  cmd->add_option("--phi", h.phi, "Candidate removal threshold on squared row change")->capture_default_str();
  cmd->add_option("--C", h.C, "Aggressiveness cap")->capture_default_str();
  cmd->add_option("--tol", h.tol, "Relative objective change that stops global learning")->capture_default_str();
  cmd->add_option("--max-iters", h.max_iters, "Iteration and sweep cap")->capture_default_str();
  cmd->add_option("--seed", h.seed, "Initialization seed")->capture_default_str();
}

void add_synth_flags(CLI::App* cmd, SyntheticConfig& c, bool& identity) {
  cmd->add_option("--n", c.n, "Vertices")->capture_default_str();
  cmd->add_option("--density", c.edge_density, "Mean out-degree")->capture_default_str();
  cmd->add_option("--noise", c.noise_sd, "Gaussian noise sd")->capture_default_str();
  cmd->add_option("--missing", c.missing_rate, "Fraction of unobserved entries")->capture_default_str();
  cmd->add_option("--drift", c.drift, "Log-normal drift sd per step")->capture_default_str();
  cmd->add_option("--mean-speed", c.mean_speed, "Mean speed of the first snapshot")->capture_default_str();
  cmd->add_option("--T", c.T, "Snapshots")->capture_default_str();
  cmd->add_option("--span", c.span, "Minutes per snapshot")->capture_default_str();
  cmd->add_flag("--identity", identity, "Planted transition A* = I");
}

int derived_snapshot_count(const std::vector<ReadingRecord>& readings, double span) {
  double last = 0.0;
  for (const auto& r : readings) last = std::max(last, r.timestamp);
  return static_cast<int>(std::floor(last / span)) + 1;
}

struct Loaded {
  RoadNetwork network;
  SnapshotSeries series;
};

Loaded load(const InputFlags& in, bool truncate) {
  if (in.series.empty() && in.readings.empty()) throw ConfigError("one of --series or --readings is required");
  if (!(in.span > 0.0)) throw ConfigError("--span must be positive");
  if (in.T < 0) throw ConfigError("--T must be >= 0");
  Loaded l{io::read_network(in.network, in.coords), {}};
  if (!in.series.empty()) {
    l.series = io::read_series_archive(in.series, l.network);
  } else {
    const auto readings = io::read_readings(in.readings);
    const auto r = build_snapshot_series(readings, l.network, in.span, derived_snapshot_count(readings, in.span));
    l.series = r.series;
  }
  if (truncate && in.T > 0) {
    if (in.T > l.series.num_snapshots()) {
      throw DataError("--T " + std::to_string(in.T) + " exceeds the " + std::to_string(l.series.num_snapshots()) +
                      " available snapshots");
    }
    l.series = l.series.slice(0, in.T);
  }
  return l;
}

fs::path out_dir(const Options& o) {
  if (o.out.empty()) return {};
  fs::create_directories(o.out);
  return o.out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void print_fit(const SnapshotSeries& series, const LatentState& state) {
  std::vector<double> truth, pred;
  for (int t = 0; t < series.num_snapshots(); ++t) {
    const SparseMatrix& g = series.snapshot(t);
    const auto p = predict_on_pattern(state.U[static_cast<std::size_t>(t)], state.B, g);
    for (Eigen::Index i = 0; i < g.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(g, i); it; ++it) truth.push_back(it.value());
    pred.insert(pred.end(), p.begin(), p.end());
  }
  if (truth.empty()) {
    std::cout << "no observed entries to score the fit on\n";
    return;
  }
  std::cout << "training fit: MAPE " << mape(truth, pred) << "  RMSE " << rmse(truth, pred) << "  over "
            << truth.size() << " observed entries\n";
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) throw ConfigError("synth needs --out");
  SyntheticConfig cfg = o.synth;
  if (o.identity_transition) cfg.transition = PlantedTransition::kIdentity;
  const auto inst = generate_synthetic(cfg);
  const fs::path dir = out_dir(o);
  io::write_network(dir / "network.csv", inst.network);
  io::write_coords(dir / "coords.csv", inst.network);
  io::write_series_archive(dir / "series", inst.series);
  io::write_readings(dir / "readings.csv", series_to_readings(inst.series));
  Hyperparams planted;
  planted.k = cfg.k;
  io::write_model(dir / "planted.model", inst.planted, planted);
  std::cout << "synthetic network: " << inst.network.num_vertices() << " vertices, " << inst.network.num_edges()
            << " edges\n"
            << "series: " << inst.series.num_snapshots() << " snapshots of " << cfg.span << " min, "
            << inst.series.observed_count() << " observed entries\n"
            << "written to " << dir.string() << '\n';
  return 0;
}

int cmd_ingest(const Options& o) {
  if (o.out.empty()) throw ConfigError("ingest needs --out");
  if (o.in.readings.empty()) throw ConfigError("ingest needs --readings");
  if (!(o.in.span > 0.0)) throw ConfigError("--span must be positive");
  const auto network = io::read_network(o.in.network, o.in.coords);
  const auto readings = io::read_readings(o.in.readings);
  const int T = o.in.T > 0 ? o.in.T : derived_snapshot_count(readings, o.in.span);
  const auto r = build_snapshot_series(readings, network, o.in.span, T);
  io::write_series_archive(o.out, r.series);
  std::cout << "ingested " << readings.size() << " readings into " << T << " snapshots of " << o.in.span << " min\n"
            << "accepted " << r.accepted << ", outside window " << r.rejected_out_of_window << ", non-positive speed "
            << r.rejected_nonpositive << '\n'
            << "observed entries: " << r.series.observed_count() << '\n'
            << "archive written to " << o.out << '\n';
  return 0;
}

int cmd_learn(const Options& o) {
  const auto l = load(o.in, true);
  const auto lap = build_proximity_laplacian(l.network);
  const auto start = std::chrono::steady_clock::now();
  const auto r = global_learn(l.series, lap, o.hyper);
  const double ms = elapsed_ms(start);
  const auto terms = objective_terms(r.state, l.series, lap, o.hyper);
  std::cout << "global learning on " << l.series.num_snapshots() << " snapshots, n=" << l.series.num_vertices()
            << ", k=" << o.hyper.k << '\n'
            << "iterations " << r.iterations << (r.converged ? " (converged)" : " (iteration cap)") << ", " << ms
            << " ms\n"
            << "objective " << terms.total() << " = reconstruction " << terms.reconstruction << " + laplacian "
            << terms.laplacian << " + transition " << terms.transition << '\n';
  print_fit(l.series, r.state);
  if (const fs::path dir = out_dir(o); !dir.empty()) {
    io::write_model(dir / "model.txt", r.state, o.hyper);
    io::write_trace(dir / "trace.csv", r.objective_trace);
    std::cout << "model and trace written to " << dir.string() << '\n';
  }
  return 0;
}

int cmd_learn_inc(const Options& o) {
  const auto l = load(o.in, true);
  const auto lap = build_proximity_laplacian(l.network);
  const auto start = std::chrono::steady_clock::now();
  const auto r = incremental_learn(l.series, l.network, lap, o.hyper);
  const double ms = elapsed_ms(start);
  std::size_t unconverged = 0;
  for (const auto& u : r.updates) unconverged += u.converged ? 0 : 1;
  std::cout << "incremental learning on " << l.series.num_snapshots() << " snapshots, n=" << l.series.num_vertices()
            << ", k=" << o.hyper.k << ", " << ms << " ms\n"
            << r.updates.size() << " incremental updates, " << unconverged << " hit the sweep cap; transition fit "
            << r.transition_iterations << " iterations\n";
  print_fit(l.series, r.state);
  if (const fs::path dir = out_dir(o); !dir.empty()) {
    io::write_model(dir / "model.txt", r.state, o.hyper);
    std::ofstream out(dir / "updates.csv");
    out << "t,sweeps,converged,initial_candidates,adjust_calls,edge_visits,degenerate_edges\n";
    for (std::size_t i = 0; i < r.updates.size(); ++i) {
      const auto& u = r.updates[i];
      out << i + 1 << ',' << u.sweeps << ',' << (u.converged ? 1 : 0) << ',' << u.initial_candidates << ','
          << u.adjust_calls << ',' << u.edge_visits << ',' << u.degenerate_edges << '\n';
    }
    if (!out) throw DataError("cannot write " + (dir / "updates.csv").string());
    std::cout << "model and update log written to " << dir.string() << '\n';
  }
  return 0;
}

void emit_report(const Options& o, const ExperimentReport& report, bool with_steps) {
  io::print_report(std::cout, report);
  if (const fs::path dir = out_dir(o); !dir.empty()) {
    io::write_report_csv(dir / "methods.csv", with_steps ? dir / "steps.csv" : fs::path{}, report);
    std::cout << "report written to " << dir.string() << '\n';
  }
}

int cmd_complete(const Options& o) {
  const auto l = load(o.in, true);
  CompletionConfig c;
  c.hyper = o.hyper;
  c.mask_rate = o.mask_rate;
  c.mask_seed = o.mask_seed;
  c.knn_k = o.knn_k;
  const auto report = run_completion_experiment(l.network, l.series, c);
  emit_report(o, report, false);
  if (const fs::path dir = out_dir(o); !dir.empty()) {
    io::write_mask(dir / "mask.csv", mask_holdout(l.series, o.mask_rate, o.mask_seed).second);
  }
  return 0;
}

int cmd_predict(const Options& o) {
  const auto l = load(o.in, false);
  PredictionConfig p;
  p.hyper = o.hyper;
  p.window = o.in.T > 0 ? o.in.T : 10;
  p.horizon = o.horizon;
  emit_report(o, run_prediction_experiment(l.network, l.series, p), true);
  return 0;
}

int cmd_online(const Options& o) {
  const auto l = load(o.in, false);
  OnlineConfig c;
  c.hyper = o.hyper;
  c.window = o.in.T > 0 ? o.in.T : 10;
  c.strategies.clear();
  for (const auto& s : o.strategies) c.strategies.push_back(parse_strategy(s));
  const auto report = run_online_forecast(l.network, l.series, c);
  emit_report(o, report, true);
  std::cout << "mean per-step MAPE:";
  for (const auto s : c.strategies) std::cout << ' ' << to_string(s) << '=' << report.mean_step_mape(to_string(s));
  std::cout << '\n';
  return 0;
}

int cmd_bench(const Options& o) {
  if (o.repeats < 1) throw ConfigError("--repeats must be >= 1");
  SyntheticConfig cfg = o.bench;
  cfg.seed = o.hyper.seed;
  if (o.identity_transition) cfg.transition = PlantedTransition::kIdentity;
  if (cfg.T < 2) throw ConfigError("bench needs --T >= 2");
  const auto inst = generate_synthetic(cfg);
  const auto lap = build_proximity_laplacian(inst.network);
  const auto ordering = update_ordering(inst.network, o.hyper.seed);

  std::vector<double> global_ms, inc_ms;
  GlobalLearnResult global;
  for (int rep = 0; rep < o.repeats; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    global = global_learn(inst.series, lap, o.hyper);
    global_ms.push_back(elapsed_ms(start));
  }
  for (int rep = 0; rep < o.repeats; ++rep) {
    double total = 0.0;
    for (int t = 1; t < cfg.T; ++t) {
      const auto start = std::chrono::steady_clock::now();
      const auto u = incremental_update(global.state.U[static_cast<std::size_t>(t - 1)], global.state.B,
                                        inst.series.snapshot(t), ordering, o.hyper);
      total += elapsed_ms(start);
    }
    inc_ms.push_back(total / (cfg.T - 1));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double g = median(global_ms);
  const double i = median(inc_ms);
  std::cout << "bench: n=" << inst.network.num_vertices() << ", edges=" << inst.network.num_edges() << ", T=" << cfg.T
            << ", k=" << o.hyper.k << ", repeats=" << o.repeats << '\n'
            << std::fixed << std::setprecision(1) << "global_learn over the window: " << g << " ms (median, "
            << global.iterations << " iterations)\n"
            << "incremental_update per timestamp: " << i << " ms (median)\n"
            << "speedup: " << g / std::max(i, 1e-9) << "x\n";
  if (const fs::path dir = out_dir(o); !dir.empty()) {
    std::ofstream out(dir / "bench.csv");
    out << "repeat,global_ms,incremental_ms_per_timestamp\n";
    for (int rep = 0; rep < o.repeats; ++rep) out << rep << ',' << global_ms[rep] << ',' << inc_ms[rep] << '\n';
    if (!out) throw DataError("cannot write " + (dir / "bench.csv").string());
    std::cout << "timings written to " << dir.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent space model for road networks: learning, completion and forecasting of edge speeds"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic network and speed series");
  synth->add_option("--k", o.synth.k, "Planted latent rank")->capture_default_str();
  synth->add_option("--seed", o.synth.seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->required();
  add_synth_flags(synth, o.synth, o.identity_transition);

  auto* ingest = app.add_subcommand("ingest", "Aggregate raw readings into a snapshot archive");
  add_input_flags(ingest, o.in, false);
  ingest->add_option("--out", o.out, "Archive directory")->required();

  auto experiment = [&](const char* name, const char* help, bool window_T) {
    auto* cmd = app.add_subcommand(name, help);
    add_input_flags(cmd, o.in, window_T);
    add_hyper_flags(cmd, o.hyper);
    cmd->add_option("--out", o.out, "Directory for CSV outputs");
    return cmd;
  };
  auto* learn = experiment("learn", "Global multiplicative-update learning", false);
  auto* learn_inc = experiment("learn-inc", "Incremental learning", false);
  auto* complete = experiment("complete", "Hold-out completion experiment", false);
  complete->add_option("--mask-rate", o.mask_rate, "Fraction of observed entries hidden")->capture_default_str();
  complete->add_option("--mask-seed", o.mask_seed, "Hold-out sampling seed")->capture_default_str();
  complete->add_option("--knn", o.knn_k, "Neighbours for the KNN baseline")->capture_default_str();
  auto* predict = experiment("predict", "h-step-ahead prediction experiment", true);
  predict->set_help_flag("--help", "Print this help message and exit");
  predict->add_option("--h", o.horizon, "Prediction horizon in spans")->capture_default_str();
  auto* online = experiment("online", "Batch-window online forecasting", true);
  online->add_option("--strategy", o.strategies, "inc, old, naive or all (repeatable)")
      ->delimiter(',')
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Time global learning against per-timestamp incremental updates");
  add_hyper_flags(bench, o.hyper);
  add_synth_flags(bench, o.bench, o.identity_transition);
  bench->add_option("--repeats", o.repeats, "Timing repetitions (median reported)")->capture_default_str();
  bench->add_option("--out", o.out, "Directory for bench.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    o.hyper.validate();
    if (*synth) return cmd_synth(o);
    if (*ingest) return cmd_ingest(o);
    if (*learn) return cmd_learn(o);
    if (*learn_inc) return cmd_learn_inc(o);
    if (*complete) return cmd_complete(o);
    if (*predict) return cmd_predict(o);
    if (*online) return cmd_online(o);
    if (*bench) return cmd_bench(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
