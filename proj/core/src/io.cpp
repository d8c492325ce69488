#include "lsmrn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "lsmrn/errors.hpp"

namespace lsmrn::io {
namespace {

constexpr std::string_view kModelMagic = "lsmrn-model";
constexpr int kModelVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Reads a header-checked CSV, invoking `row` with the fields of every
// non-empty data line. Errors carry file:line.
class CsvReader {
 public:
  CsvReader(const fs::path& path, std::vector<std::string_view> header) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in_, line)) throw DataError(path.string() + ": empty file, expected a header");
    ++line_no_;
    const auto got = split(line);
    if (got != header) {
      std::string expected;
      for (auto h : header) expected += (expected.empty() ? "" : ",") + std::string(h);
      throw DataError(path.string() + ": header '" + std::string(trim(line)) + "' does not match '" + expected + "'");
    }
    width_ = header.size();
  }

  template <typename F>
  void for_each(F&& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      const auto fields = split(line);
      if (fields.size() != width_) fail("expected " + std::to_string(width_) + " fields");
      row(fields);
    }
  }

  template <typename T>
  T parse(std::string_view field) const {
    T value{};
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end) fail("cannot parse '" + std::string(field) + "'");
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t width_ = 0;
  std::size_t line_no_ = 0;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string snapshot_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04d.csv", t);
  return buf;
}

}  // namespace

RoadNetwork read_network(const fs::path& edges_path, const fs::path& coords_path, int num_vertices) {
  std::vector<Edge> edges;
  int max_id = -1;
  {
    CsvReader csv(edges_path, {"src", "dst"});
    csv.for_each([&](const auto& f) {
      const Edge e{csv.parse<VertexId>(f[0]), csv.parse<VertexId>(f[1])};
      if (e.src < 0 || e.dst < 0) csv.fail("negative vertex id");
      max_id = std::max({max_id, e.src, e.dst});
      edges.push_back(e);
    });
  }

  std::vector<Point> coords;
  if (!coords_path.empty()) {
    std::map<int, Point> by_id;
    CsvReader csv(coords_path, {"vertex", "x", "y"});
    csv.for_each([&](const auto& f) {
      const int v = csv.parse<int>(f[0]);
      if (v < 0) csv.fail("negative vertex id");
      if (!by_id.emplace(v, Point{csv.parse<double>(f[1]), csv.parse<double>(f[2])}).second) {
        csv.fail("duplicate vertex " + std::to_string(v));
      }
    });
    const int count = static_cast<int>(by_id.size());
    if (count == 0 || by_id.rbegin()->first != count - 1) {
      throw DataError(coords_path.string() + ": coordinates must cover vertices 0..n-1 exactly once");
    }
    for (const auto& [v, p] : by_id) coords.push_back(p);
    if (num_vertices == 0) num_vertices = count;
  }
  if (num_vertices == 0) num_vertices = max_id + 1;
  return RoadNetwork(num_vertices, std::move(edges), std::move(coords));
}

void write_network(const fs::path& edges_path, const RoadNetwork& network) {
  auto out = open_out(edges_path);
  out << "src,dst\n";
  for (const Edge& e : network.edges()) out << e.src << ',' << e.dst << '\n';
}

void write_coords(const fs::path& coords_path, const RoadNetwork& network) {
  auto out = open_out(coords_path);
  out << "vertex,x,y\n";
  const auto coords = network.coords();
  for (std::size_t v = 0; v < coords.size(); ++v) out << v << ',' << coords[v].x << ',' << coords[v].y << '\n';
}

std::vector<ReadingRecord> read_readings(const fs::path& path) {
  std::vector<ReadingRecord> out;
  CsvReader csv(path, {"timestamp", "src", "dst", "speed"});
  csv.for_each([&](const auto& f) {
    out.push_back({csv.parse<double>(f[0]), csv.parse<VertexId>(f[1]), csv.parse<VertexId>(f[2]),
                   csv.parse<double>(f[3])});
  });
  return out;
}

void write_readings(const fs::path& path, std::span<const ReadingRecord> readings) {
  auto out = open_out(path);
  out << "timestamp,src,dst,speed\n";
  for (const auto& r : readings) out << r.timestamp << ',' << r.src << ',' << r.dst << ',' << r.speed << '\n';
}

SnapshotSeries read_series_archive(const fs::path& dir, const RoadNetwork& network) {
  std::map<std::string, std::string> manifest;
  {
    CsvReader csv(dir / "manifest.csv", {"key", "value"});
    csv.for_each([&](const auto& f) { manifest[std::string(f[0])] = std::string(f[1]); });
  }
  auto field = [&](const std::string& key) {
    auto it = manifest.find(key);
    if (it == manifest.end()) throw DataError((dir / "manifest.csv").string() + ": missing key '" + key + "'");
    return it->second;
  };
  const int n = std::stoi(field("n"));
  const int T = std::stoi(field("T"));
  const double span = std::stod(field("span"));
  if (n != network.num_vertices()) {
    throw DataError("series archive has n=" + std::to_string(n) + " but the network has " +
                    std::to_string(network.num_vertices()) + " vertices");
  }

  std::vector<SparseMatrix> snapshots;
  for (int t = 0; t < T; ++t) {
    std::vector<Eigen::Triplet<double>> triplets;
    CsvReader csv(dir / snapshot_name(t), {"src", "dst", "speed"});
    csv.for_each([&](const auto& f) {
      const auto src = csv.parse<VertexId>(f[0]);
      const auto dst = csv.parse<VertexId>(f[1]);
      if (src < 0 || dst < 0 || src >= n || dst >= n) csv.fail("vertex id out of range");
      triplets.emplace_back(src, dst, csv.parse<double>(f[2]));
    });
    SparseMatrix g(n, n);
    g.setFromTriplets(triplets.begin(), triplets.end());
    snapshots.push_back(std::move(g));
  }
  return SnapshotSeries(network, std::move(snapshots), span);
}

void write_series_archive(const fs::path& dir, const SnapshotSeries& series) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "manifest.csv");
    out << "key,value\n"
        << "n," << series.num_vertices() << '\n'
        << "T," << series.num_snapshots() << '\n'
        << "span," << series.span_minutes() << '\n';
  }
  for (int t = 0; t < series.num_snapshots(); ++t) {
    auto out = open_out(dir / snapshot_name(t));
    out << "src,dst,speed\n";
    const SparseMatrix& g = series.snapshot(t);
    for (Eigen::Index i = 0; i < g.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(g, i); it; ++it) out << i << ',' << it.col() << ',' << it.value() << '\n';
    }
  }
}

HoldoutMask read_mask(const fs::path& path) {
  HoldoutMask mask;
  CsvReader csv(path, {"t", "src", "dst", "true_speed"});
  csv.for_each([&](const auto& f) {
    mask.entries.push_back(
        {csv.parse<int>(f[0]), csv.parse<VertexId>(f[1]), csv.parse<VertexId>(f[2]), csv.parse<double>(f[3])});
  });
  std::sort(mask.entries.begin(), mask.entries.end());
  return mask;
}

void write_mask(const fs::path& path, const HoldoutMask& mask) {
  auto out = open_out(path);
  out << "t,src,dst,true_speed\n";
  for (const auto& e : mask.entries) out << e.t << ',' << e.src << ',' << e.dst << ',' << e.value << '\n';
}

void write_model(std::ostream& out, const LatentState& state, const Hyperparams& hyper) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << kModelMagic << " v" << kModelVersion << '\n';
  out << "n " << state.num_vertices() << '\n';
  out << "k " << state.rank() << '\n';
  out << "T " << state.num_snapshots() << '\n';
  out << "lambda " << hyper.lambda << '\n'
      << "gamma " << hyper.gamma << '\n'
      << "delta " << hyper.delta << '\n'
      << "phi " << hyper.phi << '\n'
      << "C " << hyper.C << '\n'
      << "tol " << hyper.tol << '\n'
      << "max_iters " << hyper.max_iters << '\n'
      << "seed " << hyper.seed << '\n';
  auto matrix = [&](const std::string& name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
      out << '\n';
    }
  };
  for (int t = 0; t < state.num_snapshots(); ++t) matrix("U" + std::to_string(t), state.U[static_cast<std::size_t>(t)]);
  matrix("B", state.B);
  matrix("A", state.A);
  out.flags(flags);
  out.precision(precision);
}

void write_model(const fs::path& path, const LatentState& state, const Hyperparams& hyper) {
  auto out = open_out(path);
  write_model(out, state, hyper);
}

ModelFile read_model(std::istream& in) {
  auto expect_key = [&](const std::string& key) {
    std::string got;
    if (!(in >> got) || got != key) throw DataError("model file: expected '" + key + "', got '" + got + "'");
  };
  std::string magic;
  std::string version;
  if (!(in >> magic >> version) || magic != kModelMagic) throw DataError("not a model file");
  if (version != "v" + std::to_string(kModelVersion)) throw DataError("unsupported model version " + version);

  auto read_number = [&](const std::string& key, auto& value) {
    expect_key(key);
    std::string token;
    if (!(in >> token)) throw DataError("model file: missing value for '" + key + "'");
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw DataError("model file: bad value '" + token + "' for '" + key + "'");
    }
  };

  ModelFile file;
  int n = 0;
  int k = 0;
  int T = 0;
  read_number("n", n);
  read_number("k", k);
  read_number("T", T);
  read_number("lambda", file.hyper.lambda);
  read_number("gamma", file.hyper.gamma);
  read_number("delta", file.hyper.delta);
  read_number("phi", file.hyper.phi);
  read_number("C", file.hyper.C);
  read_number("tol", file.hyper.tol);
  read_number("max_iters", file.hyper.max_iters);
  read_number("seed", file.hyper.seed);
  file.hyper.k = k;
  if (n <= 0 || k <= 0 || T <= 0) throw DataError("model file: non-positive dimensions");

  auto matrix = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    expect_key(name);
    if (!(in >> r >> c) || r != rows || c != cols) throw DataError("model file: bad shape for " + name);
    Matrix m(rows, cols);
    std::string token;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> token)) throw DataError("model file: truncated matrix " + name);
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), m(i, j));
        if (ec != std::errc() || ptr != token.data() + token.size()) {
          throw DataError("model file: bad number '" + token + "' in " + name);
        }
      }
    }
    return m;
  };
  for (int t = 0; t < T; ++t) file.state.U.push_back(matrix("U" + std::to_string(t), n, k));
  file.state.B = matrix("B", k, k);
  file.state.A = matrix("A", k, k);
  return file;
}

ModelFile read_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_model(in);
}

void write_trace(const fs::path& path, std::span<const double> trace) {
  auto out = open_out(path);
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

void write_sweep_diagnostics(const fs::path& path, std::span<const SweepDiagnostics> diagnostics) {
  auto out = open_out(path);
  out << "sweep,candidates,violated_edges,max_violation\n";
  for (const auto& d : diagnostics) {
    out << d.sweep << ',' << d.candidates << ',' << d.violated_edges << ',' << d.max_violation << '\n';
  }
}

void write_report_csv(const fs::path& methods_path, const fs::path& steps_path, const ExperimentReport& report) {
  {
    auto out = open_out(methods_path);
    out << "task,method,mape,rmse,scored,train_ms,predict_ms\n";
    for (const auto& m : report.methods) {
      out << report.task << ',' << m.method << ',';
      if (m.mape) out << *m.mape;
      out << ',';
      if (m.rmse) out << *m.rmse;
      out << ',' << m.scored << ',' << m.train_ms << ',' << m.predict_ms << '\n';
    }
  }
  if (!steps_path.empty()) {
    auto out = open_out(steps_path);
    out << "method,step,mape,rmse,scored,ms\n";
    for (const auto& s : report.steps) {
      out << s.method << ',' << s.step << ',' << s.mape << ',' << s.rmse << ',' << s.scored << ',' << s.ms << '\n';
    }
  }
}

void print_report(std::ostream& out, const ExperimentReport& report) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "task: " << report.task << '\n';
  out << "config:";
  for (const auto& [key, value] : report.config) out << ' ' << key << '=' << value;
  out << '\n';
  if (report.empty_holdout) {
    out << "hold-out set is empty; no metrics computed\n";
    out.flags(flags);
    out.precision(precision);
    return;
  }
  out << std::left << std::setw(14) << "method" << std::right << std::setw(10) << "MAPE" << std::setw(12) << "RMSE"
      << std::setw(10) << "scored" << std::setw(12) << "train_ms" << std::setw(12) << "predict_ms" << '\n';
  out << std::fixed;
  for (const auto& m : report.methods) {
    out << std::left << std::setw(14) << m.method << std::right << std::setprecision(4);
    if (m.mape) {
      out << std::setw(10) << *m.mape << std::setw(12) << *m.rmse;
    } else {
      out << std::setw(10) << "-" << std::setw(12) << "-";
    }
    out << std::setw(10) << m.scored << std::setprecision(1) << std::setw(12) << m.train_ms << std::setw(12)
        << m.predict_ms << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace lsmrn::io
