#pragma once

// The neural intent classifier: token embedding, parallel same-padding 1-d
// convolution branches (one per kernel size) with ReLU, per-position
// concatenation, a single LSTM layer read out at each sequence's true final
// step, and a linear head. Forward, loss and the full analytic backward
// pass are hand-written over Eigen dense types; everything runs in double
// and is bit-reproducible given the seed.
//
// Batched calls process examples row-by-row with the same kernels as
// single-example calls, so batching and padding width never change results.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phintent/corpus.hpp"

namespace phintent {

struct NNError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfig : NNError {
  explicit InvalidConfig(const std::string& why)
      : NNError("invalid network config: " + why) {}
};

struct IndexOutOfRange : NNError {
  explicit IndexOutOfRange(int idx)
      : NNError("token index outside vocabulary: " + std::to_string(idx)),
        index(idx) {}
  int index;
};

struct LengthMismatch : NNError {
  explicit LengthMismatch(const std::string& why)
      : NNError("bad batch lengths: " + why) {}
};

struct CacheMismatch : NNError {
  CacheMismatch() : NNError("forward cache does not match this batch") {}
};

struct NNConfig {
  int vocab_size = 0;   // including PAD at index 0
  int embed_dim = 128;
  int conv_channels = 128;            // per branch
  std::vector<int> kernel_sizes = {3, 5};  // odd, one branch each
  int lstm_hidden = 128;
  int num_intents = 0;
  static constexpr int pad_index = 0;

  int concat_dim() const {
    return conv_channels * static_cast<int>(kernel_sizes.size());
  }
  void validate() const;  // throws InvalidConfig
};

// One convolution branch; weight columns are laid out as k blocks of
// embed_dim (tap-major), so tap j multiplies weight.middleCols(j*D, D).
struct ConvBranch {
  int kernel = 0;
  Eigen::MatrixXd weight;  // channels x (embed_dim * kernel)
  Eigen::VectorXd bias;    // channels
};

// Parameter bundle; the same layout doubles as the gradient container.
struct NNModel {
  NNConfig config;
  Eigen::MatrixXd embedding;  // vocab_size x embed_dim, PAD row all zero
  std::vector<ConvBranch> branches;
  Eigen::MatrixXd lstm_wx;  // 4H x F, gate rows ordered [input,forget,cell,output]
  Eigen::MatrixXd lstm_wh;  // 4H x H
  Eigen::VectorXd lstm_b;   // 4H
  Eigen::MatrixXd out_w;    // num_intents x H
  Eigen::VectorXd out_b;    // num_intents
};

// Named view over every trainable tensor, in a fixed order. Matrices are
// stored column-major.
struct TensorRef {
  std::string name;
  double* data;
  std::ptrdiff_t size;
  int rows, cols;
};
std::vector<TensorRef> model_tensors(NNModel& model);

struct ConstTensorRef {
  std::string name;
  const double* data;
  std::ptrdiff_t size;
  int rows, cols;
};
std::vector<ConstTensorRef> model_tensors(const NNModel& model);

// Zero tensors with the same shapes.
NNModel zeros_like(const NNConfig& config);

// Glorot-uniform weights (bound sqrt(6/(rows+cols)) per tensor), zero
// biases except the LSTM forget gate at 1, zero PAD embedding row.
NNModel init_model(const NNConfig& config, std::uint64_t seed);

// Padded token batch. Rows beyond each true length must hold PAD.
struct Batch {
  Eigen::MatrixXi tokens;    // B x W
  std::vector<int> lengths;  // true lengths, each in [1, W]
};

Batch make_batch(std::span<const Utterance* const> utterances);
Batch make_batch(const std::vector<Utterance>& utterances);

// Everything the backward pass needs, per example (stored to true length).
struct ExampleTrace {
  std::vector<int> tokens;
  Eigen::MatrixXd emb;                    // D x L
  std::vector<Eigen::MatrixXd> conv_pre;  // per branch: C x L, pre-ReLU
  Eigen::MatrixXd x;                      // F x L, post-ReLU concat
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;  // H x L
  Eigen::MatrixXd cell, hidden;                    // H x L
  Eigen::VectorXd logits;
};

struct ForwardCache {
  std::vector<ExampleTrace> examples;
};

struct ForwardResult {
  Eigen::MatrixXd logits;  // B x num_intents
  ForwardCache cache;
};

ForwardResult forward(const NNModel& model, const Batch& batch);

struct LossAndGrads {
  double loss = 0.0;
  NNModel grads;
};

// Mean softmax cross-entropy over the batch plus exact analytic gradients
// for every tensor. Per-example contributions are combined with a pairwise
// (recursive halving) reduction, so duplicating a batch reproduces the
// original loss and gradients bit-for-bit. PAD-row embedding gradients are
// forced to zero.
LossAndGrads loss_and_backward(const NNModel& model, const Batch& batch,
                               const std::vector<int>& labels,
                               const ForwardCache& cache);

// Loss only, same reduction (used by the finite-difference checker).
double batch_loss(const NNModel& model, const Batch& batch,
                  const std::vector<int>& labels);

// Single-sequence logits.
Eigen::VectorXd nn_logits(const NNModel& model, std::span<const int> phones);

// Argmax of the logits; ties break toward the lowest intent index.
int nn_predict(const NNModel& model, const Utterance& u);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class OptimizerKind { kSgd, kAdam };

struct TrainHyper {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 30;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamSettings adam;
  std::uint64_t seed = 1;
  bool shuffle = true;
  // Stop after the first epoch whose full-pass training accuracy reaches
  // this value (fraction in [0,1]); disabled when unset.
  std::optional<double> stop_train_accuracy;
};

struct EpochStats {
  double mean_loss = 0.0;       // example-weighted over the epoch's batches
  double train_accuracy = 0.0;  // full pass with the post-epoch model
};

struct TrainHistory {
  std::vector<EpochStats> epochs;  // one entry per epoch actually run
};

struct TrainResult {
  NNModel model;
  TrainHistory history;
};

TrainResult train_nn(const Corpus& train, const NNConfig& config,
                     const TrainHyper& hyper);

// --- Gradient checking ------------------------------------------------------

struct TensorCheck {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  bool all_pass = false;
  double h = 0.0, tol = 0.0;
};

// Central finite differences of batch_loss, elementwise per tensor.
NNModel numeric_gradients(const NNModel& model, const Batch& batch,
                          const std::vector<int>& labels, double h);

// Per-tensor max of |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport compare_gradients(NNModel& analytic, NNModel& numeric,
                                  double h, double tol);

// Builds a seeded model and batch for `config`, then compares analytic
// gradients against central differences.
GradCheckReport grad_check(const NNConfig& config, std::uint64_t seed,
                           double h, double tol);

}  // namespace phintent
