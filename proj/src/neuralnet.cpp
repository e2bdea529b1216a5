#include "logad/neuralnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <array>
#include <cstring>

#include <fmt/format.h>

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

std::string shape(const Matrix& m) { return fmt::format("{}x{}", m.rows(), m.cols()); }

Matrix glorot_uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-r, r);
  Matrix m(rows, cols);
  // row-major fill so the draw order does not depend on Eigen's storage order
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

// Orthonormal columns via QR of a Gaussian matrix, signs fixed by diag(R).
Matrix orthogonal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = dist(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

void check_finite_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) throw DivergenceError(epoch);
}

}  // namespace

std::string_view to_string(LossKind k) { return k == LossKind::mae ? "mae" : "msle"; }

LossKind parse_loss(std::string_view s) {
  if (s == "mae") return LossKind::mae;
  if (s == "msle") return LossKind::msle;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

void LstmConfig::validate() const {
  if (input_dim == 0 || hidden_units == 0 || output_dim == 0) {
    throw ConfigError("LSTM dimensions must be at least 1");
  }
}

LstmParams LstmParams::zeros_like(const LstmParams& p) {
  return {Matrix::Zero(p.W.rows(), p.W.cols()), Matrix::Zero(p.U.rows(), p.U.cols()),
          Vector::Zero(p.b.size()), Matrix::Zero(p.Wd.rows(), p.Wd.cols()),
          Vector::Zero(p.bd.size())};
}

std::size_t LstmParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const auto& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool LstmParams::all_finite() const {
  bool ok = true;
  for_each([&](const auto& m) { ok = ok && m.allFinite(); });
  return ok;
}

void LstmModel::reset_state(std::size_t lanes) {
  const auto h = static_cast<Eigen::Index>(config.hidden_units);
  state.h = Matrix::Zero(h, static_cast<Eigen::Index>(lanes));
  state.c = Matrix::Zero(h, static_cast<Eigen::Index>(lanes));
}

LstmModel init_model(const LstmConfig& cfg) {
  cfg.validate();
  const auto in = static_cast<Eigen::Index>(cfg.input_dim);
  const auto h = static_cast<Eigen::Index>(cfg.hidden_units);
  const auto out = static_cast<Eigen::Index>(cfg.output_dim);

  std::mt19937_64 rng(cfg.seed);
  LstmModel model;
  model.config = cfg;
  model.params.W = glorot_uniform(rng, 4 * h, in);
  model.params.U = orthogonal(rng, 4 * h, h);
  model.params.b = Vector::Zero(4 * h);
  model.params.b.segment(h, h).setOnes();
  model.params.Wd = glorot_uniform(rng, out, h);
  model.params.bd = Vector::Zero(out);
  model.reset_state(1);
  return model;
}

Matrix forward(LstmModel& model, const Sequence& inputs, bool carry_state, ForwardCache* cache) {
  const auto& p = model.params;
  const auto hdim = static_cast<Eigen::Index>(model.config.hidden_units);
  if (inputs.empty()) throw ShapeError("forward needs at least one step");
  const Eigen::Index batch = inputs.front().cols();
  for (const auto& x : inputs) {
    if (x.rows() != p.W.cols() || x.cols() != batch) {
      throw ShapeError(fmt::format("input step is {}, expected {}x{}", shape(x), p.W.cols(), batch));
    }
  }
  if (model.state.h.rows() != hdim || model.state.h.cols() != batch) {
    throw ShapeError(fmt::format("lane state is {}, batch needs {}x{}", shape(model.state.h), hdim, batch));
  }

  Matrix h = model.state.h;
  Matrix c = model.state.c;
  if (cache) {
    cache->inputs = inputs;
    cache->gates.clear();
    cache->h_prev.clear();
    cache->c_prev.clear();
    cache->tanh_c.clear();
  }
  Matrix z(4 * hdim, batch);
  for (const auto& x : inputs) {
    z.noalias() = p.W * x;
    z.noalias() += p.U * h;
    z.colwise() += p.b;
    // i, f, o squashed by the logistic function; candidate g by tanh
    z.topRows(2 * hdim) = sigmoid(z.topRows(2 * hdim));
    z.middleRows(2 * hdim, hdim) = z.middleRows(2 * hdim, hdim).array().tanh().matrix();
    z.bottomRows(hdim) = sigmoid(z.bottomRows(hdim));
    const auto i = z.topRows(hdim).array();
    const auto f = z.middleRows(hdim, hdim).array();
    const auto g = z.middleRows(2 * hdim, hdim).array();
    const auto o = z.bottomRows(hdim).array();
    if (cache) {
      cache->h_prev.push_back(h);
      cache->c_prev.push_back(c);
    }
    c = (f * c.array() + i * g).matrix();
    Matrix tc = c.array().tanh().matrix();
    h = (o * tc.array()).matrix();
    if (cache) {
      cache->gates.push_back(z);
      cache->tanh_c.push_back(std::move(tc));
    }
  }
  Matrix pred = p.Wd * h;
  pred.colwise() += p.bd;
  if (cache) cache->h_last = h;
  if (carry_state) {
    model.state.h = std::move(h);
    model.state.c = std::move(c);
  }
  return pred;
}

double loss_mae(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("loss: prediction " + shape(pred) + " vs target " + shape(target));
  }
  return (pred - target).array().abs().mean();
}

double loss_msle(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("loss: prediction " + shape(pred) + " vs target " + shape(target));
  }
  if ((pred.array() <= -1.0).any() || (target.array() <= -1.0).any()) {
    throw DomainError("MSLE is undefined for values <= -1");
  }
  return (pred.array().log1p() - target.array().log1p()).square().mean();
}

double compute_loss(LossKind kind, const Matrix& pred, const Matrix& target) {
  return kind == LossKind::mae ? loss_mae(pred, target) : loss_msle(pred, target);
}

Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target) {
  const double n = static_cast<double>(pred.size());
  if (kind == LossKind::mae) {
    return ((pred - target).array().sign() / n).matrix();
  }
  if ((pred.array() <= -1.0).any() || (target.array() <= -1.0).any()) {
    throw DomainError("MSLE is undefined for values <= -1");
  }
  return (2.0 * (pred.array().log1p() - target.array().log1p()) / (1.0 + pred.array()) / n).matrix();
}

LstmParams backward(const LstmModel& model, const ForwardCache& cache, const Matrix& dpred) {
  const auto& p = model.params;
  const auto hdim = static_cast<Eigen::Index>(model.config.hidden_units);
  LstmParams grads = LstmParams::zeros_like(p);

  grads.Wd.noalias() = dpred * cache.h_last.transpose();
  grads.bd = dpred.rowwise().sum();

  Matrix dh = p.Wd.transpose() * dpred;
  Matrix dc = Matrix::Zero(dh.rows(), dh.cols());
  Matrix dz(4 * hdim, dh.cols());
  for (std::size_t t = cache.gates.size(); t-- > 0;) {
    const auto& gates = cache.gates[t];
    const auto i = gates.topRows(hdim).array();
    const auto f = gates.middleRows(hdim, hdim).array();
    const auto g = gates.middleRows(2 * hdim, hdim).array();
    const auto o = gates.bottomRows(hdim).array();
    const auto tc = cache.tanh_c[t].array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(hdim) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(hdim, hdim) = (dc.array() * cache.c_prev[t].array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * hdim, hdim) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.bottomRows(hdim) = (dh.array() * tc * o * (1.0 - o)).matrix();

    grads.W.noalias() += dz * cache.inputs[t].transpose();
    grads.U.noalias() += dz * cache.h_prev[t].transpose();
    grads.b += dz.rowwise().sum();
    dh.noalias() = p.U.transpose() * dz;
    dc.array() *= f;
  }
  return grads;
}

AdamState AdamState::for_params(const LstmParams& p) {
  AdamState s;
  s.m = LstmParams::zeros_like(p);
  s.v = LstmParams::zeros_like(p);
  return s;
}

void adam_step(LstmParams& params, AdamState& opt, const LstmParams& grads, double learning_rate) {
  ++opt.t;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
  };
  update(params.W, opt.m.W, opt.v.W, grads.W);
  update(params.U, opt.m.U, opt.v.U, grads.U);
  update(params.b, opt.m.b, opt.v.b, grads.b);
  update(params.Wd, opt.m.Wd, opt.v.Wd, grads.Wd);
  update(params.bd, opt.m.bd, opt.v.bd, grads.bd);
}

void Hyperparameters::validate() const {
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) {
    throw ConfigError("learning rate must lie in (0, 1)");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
}

Sequence gather_inputs(const WindowedDataset& ds, std::size_t batch) {
  const auto lanes = static_cast<Eigen::Index>(ds.batch_size);
  Sequence seq(ds.steps, Matrix(static_cast<Eigen::Index>(ds.features), lanes));
  for (Eigen::Index lane = 0; lane < lanes; ++lane) {
    const auto in = ds.input(ds.sample_at(batch, static_cast<std::size_t>(lane)));
    for (std::size_t t = 0; t < ds.steps; ++t) {
      for (std::size_t f = 0; f < ds.features; ++f) {
        seq[t](static_cast<Eigen::Index>(f), lane) = in[t * ds.features + f];
      }
    }
  }
  return seq;
}

Matrix gather_targets(const WindowedDataset& ds, std::size_t batch) {
  const auto lanes = static_cast<Eigen::Index>(ds.batch_size);
  Matrix y(static_cast<Eigen::Index>(ds.features), lanes);
  for (Eigen::Index lane = 0; lane < lanes; ++lane) {
    const auto target = ds.target(ds.sample_at(batch, static_cast<std::size_t>(lane)));
    for (std::size_t f = 0; f < ds.features; ++f) y(static_cast<Eigen::Index>(f), lane) = target[f];
  }
  return y;
}

namespace {

void check_dataset(const LstmModel& model, const WindowedDataset& ds, const char* what) {
  if (ds.batch_size == 0) throw DatasetError(std::string(what) + " dataset has no lane layout");
  if (ds.features != model.config.input_dim || ds.features != model.config.output_dim) {
    throw ShapeError(fmt::format("{} dataset has {} features, model expects {} in / {} out", what,
                                 ds.features, model.config.input_dim, model.config.output_dim));
  }
}

}  // namespace

SeriesPrediction predict_series(LstmModel& model, const WindowedDataset& ds) {
  check_dataset(model, ds, "prediction");
  SeriesPrediction out;
  out.predictions.resize(static_cast<Eigen::Index>(ds.samples), static_cast<Eigen::Index>(ds.features));
  out.mae.assign(ds.samples, 0.0);
  model.reset_state(ds.batch_size);
  for (std::size_t k = 0; k < ds.batches(); ++k) {
    const Matrix pred = forward(model, gather_inputs(ds, k), true);
    for (std::size_t lane = 0; lane < ds.batch_size; ++lane) {
      const std::size_t s = ds.sample_at(k, lane);
      const auto target = ds.target(s);
      double err = 0.0;
      for (std::size_t f = 0; f < ds.features; ++f) {
        const double v = pred(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(lane));
        out.predictions(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) = v;
        err += std::abs(v - target[f]);
      }
      out.mae[s] = err / static_cast<double>(ds.features);
    }
  }
  return out;
}

double evaluate(LstmModel& model, const WindowedDataset& ds, LossKind kind) {
  const auto pred = predict_series(model, ds);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> target(
      ds.targets.data(), static_cast<Eigen::Index>(ds.samples), static_cast<Eigen::Index>(ds.features));
  return compute_loss(kind, pred.predictions, target);
}

TrainReport train(LstmModel& model, const WindowedDataset& train_set, const WindowedDataset& val_set,
                  const Hyperparameters& hp, const EpochCallback& on_epoch) {
  hp.validate();
  check_dataset(model, train_set, "training");
  check_dataset(model, val_set, "validation");
  const auto start = std::chrono::steady_clock::now();

  std::vector<Sequence> inputs;
  std::vector<Matrix> targets;
  for (std::size_t k = 0; k < train_set.batches(); ++k) {
    inputs.push_back(gather_inputs(train_set, k));
    targets.push_back(gather_targets(train_set, k));
  }

  AdamState opt = AdamState::for_params(model.params);
  opt.beta1 = hp.adam_beta1;
  opt.beta2 = hp.adam_beta2;
  opt.epsilon = hp.adam_epsilon;

  TrainReport report;
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    model.reset_state(train_set.batch_size);
    try {
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix pred = forward(model, inputs[k], true, &cache);
        const Matrix dpred = loss_gradient(hp.loss, pred, targets[k]);
        const LstmParams grads = backward(model, cache, dpred);
        adam_step(model.params, opt, grads, hp.learning_rate);
      }
      EpochLoss losses;
      losses.train_loss = evaluate(model, train_set, hp.loss);
      losses.val_loss = evaluate(model, val_set, hp.loss);
      check_finite_loss(losses.train_loss, epoch);
      check_finite_loss(losses.val_loss, epoch);
      report.epochs.push_back(losses);
      if (on_epoch) on_epoch(epoch, losses);
    } catch (const DomainError&) {
      throw DivergenceError(epoch);
    }
  }
  report.wall_time = std::chrono::steady_clock::now() - start;
  return report;
}

// ---- persistence ----------------------------------------------------------
//
// All integers are little-endian u64, all reals little-endian IEEE-754 binary64.
//   magic "LOGADLSTM" (9 bytes) | u64 version=1
//   u64 input_dim | u64 hidden_units | u64 output_dim | u64 seed
//   W (4H x in) | U (4H x H) | b (4H) | Wd (out x H) | bd (out)   -- row-major
// Nothing follows the last block.

namespace {

constexpr std::string_view kMagic = "LOGADLSTM";
constexpr std::uint64_t kVersion = 1;

template <typename T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

void put_u64(std::string& out, std::uint64_t v) {
  const auto le = to_le(v);
  out.append(reinterpret_cast<const char*>(&le), sizeof le);
}

void put_block(std::string& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) throw FormatError("model file truncated");
    std::uint64_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return to_le(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix block(std::size_t rows, std::size_t cols) {
    if (remaining() < rows * cols * 8) throw FormatError("model file truncated or has the wrong dimensions");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    }
    return m;
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("model file truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const LstmModel& model) {
  std::string out(kMagic);
  put_u64(out, kVersion);
  put_u64(out, model.config.input_dim);
  put_u64(out, model.config.hidden_units);
  put_u64(out, model.config.output_dim);
  put_u64(out, model.config.seed);
  put_block(out, model.params.W);
  put_block(out, model.params.U);
  put_block(out, model.params.b);
  put_block(out, model.params.Wd);
  put_block(out, model.params.bd);
  return out;
}

LstmModel deserialize_model(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw FormatError("not a model file (bad magic)");
  if (const auto v = in.u64(); v != kVersion) {
    throw FormatError("unsupported model file version " + std::to_string(v));
  }
  LstmModel model;
  model.config.input_dim = in.u64();
  model.config.hidden_units = in.u64();
  model.config.output_dim = in.u64();
  model.config.seed = in.u64();
  const auto& c = model.config;
  constexpr std::uint64_t kMaxDim = 1u << 20;
  if (c.input_dim == 0 || c.hidden_units == 0 || c.output_dim == 0 || c.input_dim > kMaxDim ||
      c.hidden_units > kMaxDim || c.output_dim > kMaxDim) {
    throw FormatError("model file has invalid dimensions");
  }
  const std::size_t h = c.hidden_units;
  const std::size_t expected =
      8 * (4 * h * c.input_dim + 4 * h * h + 4 * h + c.output_dim * h + c.output_dim);
  if (in.remaining() != expected) {
    throw FormatError(fmt::format("model file holds {} weight bytes, dimensions need {}", in.remaining(),
                                  expected));
  }
  model.params.W = in.block(4 * h, c.input_dim);
  model.params.U = in.block(4 * h, h);
  model.params.b = in.block(4 * h, 1);
  model.params.Wd = in.block(c.output_dim, h);
  model.params.bd = in.block(c.output_dim, 1);
  model.reset_state(1);
  return model;
}

void save_model(const LstmModel& model, const std::string& path) {
  csv::write_file(path, serialize_model(model));
}

LstmModel load_model(const std::string& path) { return deserialize_model(csv::read_file(path)); }

std::string format_train_report(const TrainReport& report) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    out += fmt::format("{},{},{}\n", e + 1, csv::format_double(report.epochs[e].train_loss),
                       csv::format_double(report.epochs[e].val_loss));
  }
  return out;
}

}  // namespace logad
