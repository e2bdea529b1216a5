#pragma once

// Single-layer LSTM with a linear dense head, trained statefully with truncated
// BPTT and Adam.
//
// Gate layout inside W, U and b is [input | forget | candidate | output], each
// block `hidden_units` rows tall. Lane states are stored column-wise
// (hidden_units x lanes), so lane j of every batch is column j.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "logad/featurizer.hpp"

namespace logad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class LossKind { mae, msle };

std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view s);

struct LstmConfig {
  std::size_t input_dim = 1;
  std::size_t hidden_units = 128;
  std::size_t output_dim = 1;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const LstmConfig&) const = default;
};

struct LstmParams {
  Matrix W;   // 4H x input_dim
  Matrix U;   // 4H x H
  Vector b;   // 4H
  Matrix Wd;  // output_dim x H
  Vector bd;  // output_dim

  /// Same shapes, all zeros.
  static LstmParams zeros_like(const LstmParams& p);
  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Applies f to each (mine, theirs...) block pair in a fixed order: W, U, b, Wd, bd.
  template <typename F>
  void for_each(F&& f) {
    f(W); f(U); f(b); f(Wd); f(bd);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(W); f(U); f(b); f(Wd); f(bd);
  }
};

struct LaneState {
  Matrix h;  // H x lanes
  Matrix c;  // H x lanes
};

class LstmModel {
 public:
  LstmConfig config;
  LstmParams params;
  LaneState state;

  /// Zeroes the state and sizes it for `lanes` parallel lanes.
  void reset_state(std::size_t lanes);
  std::size_t lanes() const noexcept { return static_cast<std::size_t>(state.h.cols()); }
};

/// Glorot-uniform W and Wd, orthogonal U, zero biases except a forget-gate bias of 1.
/// Fully determined by cfg.seed.
LstmModel init_model(const LstmConfig& cfg);

/// steps entries, each input_dim x batch.
using Sequence = std::vector<Matrix>;

/// Activations kept for backpropagation through one window.
struct ForwardCache {
  Sequence inputs;
  std::vector<Matrix> gates;   // per step, 4H x B, post-activation
  std::vector<Matrix> h_prev;  // per step, H x B
  std::vector<Matrix> c_prev;
  std::vector<Matrix> tanh_c;  // tanh of the new cell state
  Matrix h_last;
};

/// Runs the recurrence for every lane and returns output_dim x batch predictions.
/// With carry_state the final lane states replace model.state; otherwise the state
/// is left as it was before the call. Throws ShapeError on dimension mismatch.
Matrix forward(LstmModel& model, const Sequence& inputs, bool carry_state,
               ForwardCache* cache = nullptr);

double loss_mae(const Matrix& pred, const Matrix& target);
/// Throws DomainError when any value is <= -1.
double loss_msle(const Matrix& pred, const Matrix& target);
double compute_loss(LossKind kind, const Matrix& pred, const Matrix& target);

/// d(loss)/d(pred). MAE uses sign(0) = 0.
Matrix loss_gradient(LossKind kind, const Matrix& pred, const Matrix& target);

/// Exact gradients through the cached window. The state entering the window is
/// treated as a constant.
LstmParams backward(const LstmModel& model, const ForwardCache& cache, const Matrix& dpred);

struct AdamState {
  LstmParams m;
  LstmParams v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  static AdamState for_params(const LstmParams& p);
};

void adam_step(LstmParams& params, AdamState& opt, const LstmParams& grads, double learning_rate);

struct Hyperparameters {
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  LossKind loss = LossKind::mae;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;

  void validate() const;
};

struct EpochLoss {
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const EpochLoss&) const = default;
};

struct TrainReport {
  std::vector<EpochLoss> epochs;
  std::chrono::duration<double> wall_time{};

  double final_train_loss() const { return epochs.back().train_loss; }
  double final_val_loss() const { return epochs.back().val_loss; }
};

/// Input rows and targets of batch `k`, lanes laid out per dataset.sample_at().
Sequence gather_inputs(const WindowedDataset& ds, std::size_t batch);
Matrix gather_targets(const WindowedDataset& ds, std::size_t batch);

/// Called after every epoch with (epoch index, losses).
using EpochCallback = std::function<void(std::size_t, const EpochLoss&)>;

/// Stateful training. Both datasets must have lanes assigned. Throws DivergenceError
/// carrying the epoch index when a loss becomes non-finite.
TrainReport train(LstmModel& model, const WindowedDataset& train_set,
                  const WindowedDataset& val_set, const Hyperparameters& hp,
                  const EpochCallback& on_epoch = {});

struct SeriesPrediction {
  Matrix predictions;        // samples x output_dim, chronological
  std::vector<double> mae;   // per sample
};

/// Stateful pass from zero state in lane order; results re-ordered chronologically.
SeriesPrediction predict_series(LstmModel& model, const WindowedDataset& ds);

/// Loss of `kind` over the whole dataset from a zero state.
double evaluate(LstmModel& model, const WindowedDataset& ds, LossKind kind);

/// Binary container; layout documented in the README.
std::string serialize_model(const LstmModel& model);
LstmModel deserialize_model(std::string_view bytes);
void save_model(const LstmModel& model, const std::string& path);
/// Throws IoError when unreadable, FormatError when malformed.
LstmModel load_model(const std::string& path);

/// TrainReport as CSV `epoch,train_loss,val_loss`.
std::string format_train_report(const TrainReport& report);

}  // namespace logad
