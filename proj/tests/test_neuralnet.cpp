#include <cmath>
#include <numeric>

#include "doctest.h"
#include "logad/csv.hpp"
#include "logad/errors.hpp"
#include "logad/neuralnet.hpp"
#include "nn_oracle.hpp"
#include "test_util.hpp"

using namespace logad;

namespace {

LstmModel unit_model() {
  LstmModel m = init_model({1, 1, 1, 0});
  m.params.W << 0.1, 0.2, 0.3, 0.4;
  m.params.U << 0.5, -0.4, 0.3, 0.2;
  m.params.b << 0.01, 0.02, 0.03, 0.04;
  m.params.Wd << 2.0;
  m.params.bd << -0.5;
  m.reset_state(1);
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

WindowedDataset lanes_for(const std::vector<double>& series, std::size_t steps, std::size_t batch) {
  return assign_lanes(make_windows(series_frame(series), steps), batch);
}

}  // namespace

TEST_CASE("init_model") {
  const LstmConfig cfg{3, 8, 2, 11};
  const auto a = init_model(cfg);
  const auto b = init_model(cfg);
  CHECK(serialize_model(a) == serialize_model(b));
  CHECK(serialize_model(a) != serialize_model(init_model({3, 8, 2, 12})));
  CHECK(a.params.W.rows() == 32);
  CHECK(a.params.W.cols() == 3);
  CHECK(a.params.U.rows() == 32);
  CHECK(a.params.U.cols() == 8);
  CHECK(a.params.Wd.rows() == 2);
  CHECK((a.params.b.segment(8, 8).array() == 1.0).all());
  CHECK((a.params.b.head(8).array() == 0.0).all());
  CHECK((a.params.b.tail(16).array() == 0.0).all());
  CHECK(a.params.bd.isZero());
  const double r = std::sqrt(6.0 / (3 + 32));
  CHECK(a.params.W.cwiseAbs().maxCoeff() <= r);
  // U is 4H x H: its columns are orthonormal
  const Matrix gram = a.params.U.transpose() * a.params.U;
  CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.state.h.isZero());
}

TEST_CASE("forward on a zero network returns the head bias") {
  LstmModel m = init_model({2, 4, 1, 1});
  m.params.for_each([](auto& x) { x.setZero(); });
  m.params.bd << 0.7;
  m.reset_state(3);
  std::mt19937_64 rng(1);
  const auto y = forward(m, test::random_sequence(rng, 5, 2, 3), true);
  CHECK((y.array() == 0.7).all());

  // zero input, zero state, b = 0: g = 0, c = 0, h = 0
  LstmModel z = init_model({2, 4, 1, 1});
  z.params.b.setZero();
  z.params.bd << -1.25;
  z.reset_state(2);
  const auto y2 = forward(z, Sequence(3, Matrix::Zero(2, 2)), true);
  CHECK((y2.array() == -1.25).all());
  CHECK(z.state.h.isZero());
  CHECK(z.state.c.isZero());
}

TEST_CASE("single-unit forward matches hand evaluation") {
  auto m = unit_model();
  CHECK(forward(m, {scalar(0.5)}, false)(0, 0) == doctest::Approx(-0.39762324078384076).epsilon(1e-14));
  CHECK(forward(m, {scalar(0.5), scalar(-1.0)}, false)(0, 0) == doctest::Approx(-0.5654777382042442).epsilon(1e-14));
  CHECK(m.state.h.isZero());
  forward(m, {scalar(0.5)}, true);
  CHECK_FALSE(m.state.h.isZero());
  // carrying the state across two one-step calls equals one two-step call
  CHECK(forward(m, {scalar(-1.0)}, true)(0, 0) == doctest::Approx(-0.5654777382042442).epsilon(1e-14));
}

TEST_CASE("forward rejects mismatched shapes") {
  LstmModel m = init_model({2, 3, 1, 0});
  m.reset_state(2);
  CHECK_THROWS_AS(forward(m, {Matrix::Zero(1, 2)}, false), ShapeError);
  CHECK_THROWS_AS(forward(m, {Matrix::Zero(2, 3)}, false), ShapeError);
  CHECK_THROWS_AS(forward(m, {}, false), ShapeError);
}

TEST_CASE("losses") {
  Matrix p(1, 2), t(1, 2);
  p << 2, 4;
  t << 1, 2;
  CHECK(loss_mae(p, t) == 1.5);
  CHECK(loss_mae(t, t) == 0.0);
  CHECK(loss_msle(t, t) == 0.0);
  CHECK(loss_msle(scalar(std::exp(1.0) - 1.0), scalar(0.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(loss_msle(scalar(-1.0), scalar(0.0)), DomainError);
  CHECK_THROWS_AS(loss_msle(scalar(0.0), scalar(-2.0)), DomainError);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.9, 3.0);
  for (int i = 0; i < 50; ++i) {
    Matrix a(2, 3), b(2, 3);
    for (Eigen::Index k = 0; k < 6; ++k) {
      a.data()[k] = u(rng);
      b.data()[k] = u(rng);
    }
    CHECK(loss_mae(a, b) > 0.0);
    CHECK(loss_msle(a, b) > 0.0);
  }
}

TEST_CASE("backward simple cases") {
  LstmModel m = init_model({1, 3, 1, 4});
  m.reset_state(4);
  std::mt19937_64 rng(3);
  const auto x = test::random_sequence(rng, 2, 1, 4);
  ForwardCache cache;
  const Matrix pred = forward(m, x, false, &cache);
  Matrix target = pred;
  target(0, 0) += 1.0;
  target(0, 1) -= 1.0;
  target(0, 2) -= 1.0;
  const auto g = backward(m, cache, loss_gradient(LossKind::mae, pred, target));
  // sign(pred - target) = [-1, 1, 1, 0] averaged over 4 samples
  CHECK(g.bd(0) == doctest::Approx(0.25));

  const auto zero = backward(m, cache, loss_gradient(LossKind::mae, pred, pred));
  zero.for_each([](const auto& blk) { CHECK(blk.isZero()); });
}

TEST_CASE("analytic gradients match finite differences") {
  std::uint64_t seed = 100;
  for (LossKind kind : {LossKind::mae, LossKind::msle}) {
    for (std::size_t hidden : {1u, 3u, 8u}) {
      for (std::size_t steps : {1u, 5u}) {
        const auto r = test::gradient_check(seed++, hidden, steps, 2, 2, 3, kind);
        INFO("hidden " << hidden << " steps " << steps << " loss " << to_string(kind));
        CHECK(r.max_rel_error < 1e-4);
      }
    }
  }
}

TEST_CASE("adam") {
  auto make = [] {
    LstmModel m = init_model({1, 1, 1, 0});
    m.params.for_each([](auto& x) { x.setZero(); });
    return m.params;
  };
  auto p = make();
  auto opt = AdamState::for_params(p);
  auto g = LstmParams::zeros_like(p);
  adam_step(p, opt, g, 0.1);
  p.for_each([](const auto& x) { CHECK(x.isZero()); });
  CHECK(opt.t == 1);

  g.for_each([](auto& x) { x.setOnes(); });
  p = make();
  opt = AdamState::for_params(p);
  adam_step(p, opt, g, 0.1);
  CHECK(p.bd(0) == doctest::Approx(-0.099999990000001).epsilon(1e-14));
  CHECK(p.W(2, 0) == doctest::Approx(-0.099999990000001).epsilon(1e-14));
  adam_step(p, opt, g, 0.1);
  CHECK(p.bd(0) == doctest::Approx(-0.1999999800000013).epsilon(1e-14));

  p = make();
  opt = AdamState::for_params(p);
  adam_step(p, opt, g, 0.1);
  g.for_each([](auto& x) { x.setConstant(-0.5); });
  adam_step(p, opt, g, 0.1);
  CHECK(p.bd(0) == doctest::Approx(-0.12663369059660912).epsilon(1e-13));
}

TEST_CASE("training learns a constant") {
  const std::vector<double> series(60, 0.4);
  const auto tr = lanes_for(series, 3, 3);
  const auto va = lanes_for(std::vector<double>(15, 0.4), 3, 3);
  LstmModel m = init_model({1, 8, 1, 5});
  Hyperparameters hp;
  hp.epochs = 50;
  const auto rep = train(m, tr, va, hp);
  CHECK(rep.epochs.size() == 50);
  CHECK(rep.final_train_loss() < 0.01);
  CHECK(rep.final_train_loss() < rep.epochs.front().train_loss);
  const auto pred = predict_series(m, tr);
  CHECK(pred.mae.size() == tr.samples);
  CHECK(*std::max_element(pred.mae.begin(), pred.mae.end()) < 0.02);
}

TEST_CASE("training is deterministic") {
  std::vector<double> s(80);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sin(0.3 * double(i)) * 0.5 + 0.5;
  const auto tr = lanes_for(std::vector<double>(s.begin(), s.begin() + 64), 4, 4);
  const auto va = lanes_for(std::vector<double>(s.begin() + 64, s.end()), 4, 4);
  Hyperparameters hp;
  hp.epochs = 5;
  for (LossKind kind : {LossKind::mae, LossKind::msle}) {
    hp.loss = kind;
    LstmModel a = init_model({1, 6, 1, 9});
    LstmModel b = init_model({1, 6, 1, 9});
    const auto ra = train(a, tr, va, hp);
    const auto rb = train(b, tr, va, hp);
    CHECK(ra.epochs == rb.epochs);
    CHECK(serialize_model(a) == serialize_model(b));
  }
}

TEST_CASE("training reports divergence") {
  const auto tr = lanes_for(std::vector<double>(20, 0.5), 2, 2);
  LstmModel m = init_model({1, 4, 1, 1});
  m.params.bd << std::numeric_limits<double>::quiet_NaN();
  Hyperparameters hp;
  hp.epochs = 3;
  try {
    train(m, tr, tr, hp);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 0);
  }
  CHECK_THROWS_AS(Hyperparameters{1.5}.validate(), ConfigError);
}

TEST_CASE("predict_series") {
  const auto one = lanes_for({0.1, 0.2, 0.3}, 2, 1);
  LstmModel m = init_model({1, 4, 1, 2});
  const auto p = predict_series(m, one);
  CHECK(p.predictions.rows() == 1);
  CHECK(p.mae.size() == 1);

  // B = 1: one lane walks all windows in order, carrying state between them
  std::vector<double> series(13);
  for (std::size_t i = 0; i < series.size(); ++i) series[i] = 0.05 * double(i);
  const auto ds = lanes_for(series, 3, 1);
  LstmModel n = init_model({1, 5, 1, 3});
  const auto got = predict_series(n, ds);
  std::vector<std::vector<double>> stream;
  for (std::size_t k = 0; k < ds.samples; ++k)
    for (std::size_t t = 0; t < 3; ++t) stream.push_back({ds.input(k)[t]});
  const auto ref = test::scalar_recurrence(n.params, stream);
  for (std::size_t k = 0; k < ds.samples; ++k) {
    CHECK(std::abs(got.predictions(static_cast<Eigen::Index>(k), 0) - ref[k * 3 + 2][0]) < 1e-12);
    CHECK(got.mae[k] == doctest::Approx(std::abs(ref[k * 3 + 2][0] - ds.target(k)[0])).epsilon(1e-10));
  }
}

TEST_CASE("stateful pass equals the scalar recurrence") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = test::stateful_equivalence(seed, 6, 2, 2, 4, 25);
    CHECK(r.compared == 50);
    CHECK(r.max_abs_diff <= 1e-12);
  }
}

TEST_CASE("model persistence") {
  test::TempDir dir;
  const auto path = dir.file("m.bin");
  LstmModel m = init_model({2, 5, 2, 8});
  std::mt19937_64 rng(4);
  test::jitter(m, rng, 0.1);
  save_model(m, path);
  const auto first = csv::read_file(path);
  save_model(m, path);
  CHECK(csv::read_file(path) == first);
  LstmModel back = load_model(path);
  CHECK(back.config == m.config);
  CHECK(back.params.W == m.params.W);
  CHECK(back.params.U == m.params.U);
  CHECK(back.params.bd == m.params.bd);
  const auto x = test::random_sequence(rng, 3, 2, 1);
  m.reset_state(1);
  back.reset_state(1);
  CHECK(forward(m, x, false) == forward(back, x, false));

  // header claims hidden 6 but the blocks are sized for 5
  std::string bytes = serialize_model(m);
  const std::size_t hidden_at = 9 + 8 + 8;
  bytes[hidden_at] = 6;
  CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
  CHECK_THROWS_AS(deserialize_model(first.substr(0, first.size() - 3)), FormatError);
  CHECK_THROWS_AS(deserialize_model("garbage"), FormatError);
  CHECK_THROWS_AS(load_model(dir.file("absent.bin")), IoError);
}

TEST_CASE("train report csv") {
  TrainReport r;
  r.epochs = {{0.5, 0.25}, {0.125, 0.1}};
  CHECK(format_train_report(r) == "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.125,0.1\n");
}
