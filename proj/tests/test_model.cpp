#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "lsmrn/data.hpp"
#include "lsmrn/errors.hpp"
#include "lsmrn/model.hpp"
#include "oracles.hpp"

using namespace lsmrn;
using fixture::sparse;

namespace {

// n=2, k=1, T=2 instance whose objective terms were evaluated by hand:
// reconstruction (3-1)^2 + (1-1)^2 + (4-1)^2 = 13, laplacian (1-2)^2 + (2-1)^2 = 2,
// transition (2-1.5)^2 + (1-3)^2 = 4.25.
struct HandInstance {
  RoadNetwork network{2, {{0, 1}, {1, 0}}};
  SnapshotSeries series{network, {sparse(2, {{0, 1, 3.0}}), sparse(2, {{0, 1, 1.0}, {1, 0, 4.0}})}, 5.0};
  LatentState state;
  Hyperparams hyper;
  HandInstance() {
    state.U = {Matrix{{1.0}, {2.0}}, Matrix{{2.0}, {1.0}}};
    state.B = Matrix{{0.5}};
    state.A = Matrix{{1.5}};
    hyper.k = 1;
    hyper.lambda = 1.0;
    hyper.gamma = 1.0;
  }
};

double relative_error(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.norm(), 1e-12);
  return (got - want).norm() / scale;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("series validation") {
  const RoadNetwork g(3, {{0, 1}, {1, 2}});
  CHECK_THROWS_AS(SnapshotSeries(g, {sparse(3, {{0, 2, 5.0}})}, 5.0), DataError);
  CHECK_THROWS_AS(SnapshotSeries(g, {sparse(3, {{0, 1, -1.0}})}, 5.0), DataError);
  CHECK_THROWS_AS(SnapshotSeries(g, {sparse(2, {})}, 5.0), DataError);
  CHECK_THROWS_AS(SnapshotSeries(g, {sparse(3, {})}, 0.0), ConfigError);

  // explicit zeros are not observations
  SnapshotSeries s(g, {sparse(3, {{0, 1, 0.0}, {1, 2, 7.0}})}, 5.0);
  CHECK(s.observed_count(0) == 1);
  CHECK(s.snapshot(0).coeff(1, 2) == 7.0);
  CHECK_THROWS_AS(s.snapshot(1), std::out_of_range);
  CHECK_THROWS_AS(s.slice(0, 2), std::out_of_range);
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK_NOTHROW(h.validate());
  h.k = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.lambda = -1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.max_iters = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.delta = -0.5;
  CHECK_THROWS_AS(h.validate(), ConfigError);
}

TEST_CASE("initialization is seeded, positive and identity-A for one snapshot") {
  const auto a = initialize_state(5, 3, 2, 9);
  const auto b = initialize_state(5, 3, 2, 9);
  CHECK(a.U[0] == b.U[0]);
  CHECK(a.B == b.B);
  CHECK((a.U[1].array() > 0.0).all());
  CHECK((a.U[1].array() <= 1.0).all());
  CHECK(initialize_state(5, 3, 1, 9).A == Matrix::Identity(3, 3));
  CHECK(initialize_state(5, 3, 2, 10).U[0] != a.U[0]);
}

TEST_CASE("reconstruction examples") {
  LatentState s;
  s.U = {Matrix::Zero(4, 2)};
  s.B = Matrix::Ones(2, 2);
  s.A = Matrix::Identity(2, 2);
  CHECK(reconstruct_snapshot(s, 0).isZero());

  s.U = {Matrix::Ones(4, 1)};
  s.B = Matrix{{5.0}};
  s.A = Matrix::Identity(1, 1);
  CHECK(reconstruct_snapshot(s, 0) == Matrix::Constant(4, 4, 5.0));
  CHECK_THROWS_AS(reconstruct_snapshot(s, 1), std::out_of_range);
  CHECK_THROWS_AS(reconstruct_snapshot(s, -1), std::out_of_range);
}

TEST_CASE("planted reconstruction matches the generated series") {
  SyntheticConfig cfg;
  cfg.n = 30;
  cfg.T = 3;
  cfg.seed = 4;
  const auto inst = generate_synthetic(cfg);
  for (int t = 0; t < 3; ++t) {
    const Matrix R = reconstruct_snapshot(inst.planted, t);
    const SparseMatrix& G = inst.series.snapshot(t);
    for (Eigen::Index i = 0; i < G.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(G, i); it; ++it) CHECK(R(i, it.col()) == doctest::Approx(it.value()).epsilon(1e-12));
  }
}

TEST_CASE("prediction examples") {
  LatentState s;
  s.U = {Matrix{{1.0}}};
  s.B = Matrix{{1.0}};
  s.A = Matrix{{2.0}};
  CHECK(predict_ahead(s, 3)(0, 0) == 64.0);
  CHECK_THROWS_AS(predict_ahead(s, 0), ConfigError);

  auto r = initialize_state(6, 3, 2, 3);
  r.A = Matrix::Identity(3, 3);
  for (int h = 1; h <= 4; ++h) CHECK(predict_ahead(r, h).isApprox(reconstruct_snapshot(r, 1)));
  r.A = Matrix::Zero(3, 3);
  CHECK(predict_ahead(r, 2).isZero());
}

TEST_CASE("one-step prediction equals reconstruction with U_T A") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = initialize_state(7, 3, 3, trial);
    LatentState moved = s;
    moved.U.back() = s.U.back() * s.A;
    const Matrix p = predict_ahead(s, 1);
    CHECK(p.isApprox(reconstruct_snapshot(moved, 2)));
    CHECK((p.array() >= 0.0).all());
    CHECK((predict_ahead(s, 3).array() >= 0.0).all());
  }
}

TEST_CASE("masked product only touches the pattern") {
  const auto inst = fixture::random_instance(9, 3, 1, 2);
  const SparseMatrix& G = inst.series.snapshot(0);
  const SparseMatrix M = masked_product(G, inst.state.U[0], inst.state.B);
  const Matrix full = reconstruct_snapshot(inst.state, 0);
  CHECK(M.nonZeros() == G.nonZeros());
  for (Eigen::Index i = 0; i < M.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(M, i); it; ++it) CHECK(it.value() == doctest::Approx(full(i, it.col())));
}

TEST_CASE("objective on the hand instance") {
  HandInstance h;
  const auto lap = build_proximity_laplacian(h.network);
  const auto terms = objective_terms(h.state, h.series, lap, h.hyper);
  CHECK(terms.reconstruction == doctest::Approx(13.0));
  CHECK(terms.laplacian == doctest::Approx(2.0));
  CHECK(terms.transition == doctest::Approx(4.25));
  CHECK(evaluate_objective(h.state, h.series, lap, h.hyper) == doctest::Approx(19.25));
}

TEST_CASE("objective trivial cases") {
  // exact fit with no regularization
  SyntheticConfig cfg;
  cfg.n = 15;
  cfg.T = 2;
  const auto inst = generate_synthetic(cfg);
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  h.k = 3;
  h.lambda = 0;
  h.gamma = 0;
  CHECK(evaluate_objective(inst.planted, inst.series, lap, h) == doctest::Approx(0.0).epsilon(1e-18).scale(1.0));

  // U = 0 leaves the squared observations
  LatentState zero = inst.planted;
  for (auto& u : zero.U) u.setZero();
  double sq = 0.0;
  for (const auto& g : inst.series.snapshots()) sq += g.squaredNorm();
  CHECK(evaluate_objective(zero, inst.series, lap, h) == doctest::Approx(sq));
}

TEST_CASE("objective matches the element-wise oracle on random instances") {
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = fixture::random_instance(8, 3, 3, 100 + trial);
    const auto lap = build_proximity_laplacian(inst.network);
    Hyperparams h;
    h.k = 3;
    h.lambda = 0.7;
    h.gamma = 1.3;
    std::vector<oracle::DenseMatrix> G;
    for (const auto& g : inst.series.snapshots()) G.push_back(oracle::to_dense(g));
    const std::vector<Edge> edges(inst.network.edges().begin(), inst.network.edges().end());
    const double expected = oracle::objective_by_elements(inst.state, G, edges, 8, h.lambda, h.gamma);
    const double got = evaluate_objective(inst.state, inst.series, lap, h);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("objective rejects inconsistent dimensions") {
  HandInstance h;
  const auto lap = build_proximity_laplacian(h.network);
  LatentState bad = h.state;
  bad.U.pop_back();
  CHECK_THROWS_AS(evaluate_objective(bad, h.series, lap, h.hyper), DataError);
  bad = h.state;
  bad.B = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(evaluate_objective(bad, h.series, lap, h.hyper), DataError);
}

TEST_CASE("gradient vanishes at an exact fit without regularization") {
  SyntheticConfig cfg;
  cfg.n = 12;
  cfg.T = 3;
  const auto inst = generate_synthetic(cfg);
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  h.k = 3;
  h.lambda = 0;
  h.gamma = 0;
  for (int t = 0; t < 3; ++t) {
    const Matrix g = gradient_wrt_latent(inst.planted, inst.series, lap, h, t);
    CHECK(g.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("laplacian-only gradient is 2 lambda L U") {
  auto inst = fixture::random_instance(10, 2, 2, 7, 0.0, true);
  const auto lap = build_proximity_laplacian(inst.network);
  Hyperparams h;
  h.k = 2;
  h.lambda = 2.5;
  h.gamma = 0;
  for (int t = 0; t < 2; ++t) {
    const Matrix expected = 2.0 * h.lambda * (lap.L * inst.state.U[t]);
    CHECK(relative_error(gradient_wrt_latent(inst.state, inst.series, lap, h, t), expected) < 1e-12);
  }
  CHECK_THROWS_AS(gradient_wrt_latent(inst.state, inst.series, lap, h, 2), std::out_of_range);
}

TEST_CASE("gradient matches central finite differences term by term") {
  struct Weights {
    double lambda, gamma;
    bool data;
  };
  const Weights cases[] = {{0.0, 0.0, true}, {1.5, 0.0, false}, {0.0, 1.5, false}, {0.8, 0.6, true}};
  for (const Weights& w : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto inst = fixture::random_instance(7, 3, 3, 300 + trial, 0.7, !w.data);
      const auto lap = build_proximity_laplacian(inst.network);
      Hyperparams h;
      h.k = 3;
      h.lambda = w.lambda;
      h.gamma = w.gamma;
      auto f = [&](const LatentState& s) { return evaluate_objective(s, inst.series, lap, h); };
      for (int t = 0; t < 3; ++t) {
        const Matrix fd = oracle::finite_difference(inst.state, t, 1e-6, f);
        const Matrix g = gradient_wrt_latent(inst.state, inst.series, lap, h, t);
        CHECK(relative_error(g, fd) < 1e-4);
      }
    }
  }
}

}  // TEST_SUITE
