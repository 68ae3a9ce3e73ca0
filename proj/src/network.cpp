#include "phintent/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phintent/rng.hpp"

namespace phintent {

void NNConfig::validate() const {
  if (vocab_size < 2) throw InvalidConfig("vocab_size must be >= 2");
  if (embed_dim < 1) throw InvalidConfig("embed_dim must be >= 1");
  if (conv_channels < 1) throw InvalidConfig("conv_channels must be >= 1");
  if (kernel_sizes.empty()) {
    throw InvalidConfig("kernel_sizes must be non-empty");
  }
  for (int k : kernel_sizes) {
    if (k < 1 || k % 2 == 0) {
      throw InvalidConfig("kernel sizes must be odd and >= 1");
    }
  }
  if (lstm_hidden < 1) throw InvalidConfig("lstm_hidden must be >= 1");
  if (num_intents < 1) throw InvalidConfig("num_intents must be >= 1");
}

NNModel zeros_like(const NNConfig& config) {
  NNModel m;
  m.config = config;
  const int D = config.embed_dim, C = config.conv_channels;
  const int H = config.lstm_hidden, F = config.concat_dim();
  m.embedding = Eigen::MatrixXd::Zero(config.vocab_size, D);
  for (int k : config.kernel_sizes) {
    ConvBranch b;
    b.kernel = k;
    b.weight = Eigen::MatrixXd::Zero(C, D * k);
    b.bias = Eigen::VectorXd::Zero(C);
    m.branches.push_back(std::move(b));
  }
  m.lstm_wx = Eigen::MatrixXd::Zero(4 * H, F);
  m.lstm_wh = Eigen::MatrixXd::Zero(4 * H, H);
  m.lstm_b = Eigen::VectorXd::Zero(4 * H);
  m.out_w = Eigen::MatrixXd::Zero(config.num_intents, H);
  m.out_b = Eigen::VectorXd::Zero(config.num_intents);
  return m;
}

std::vector<TensorRef> model_tensors(NNModel& model) {
  std::vector<TensorRef> refs;
  auto push = [&refs](const std::string& name, Eigen::MatrixXd& m) {
    refs.push_back({name, m.data(), m.size(), static_cast<int>(m.rows()),
                    static_cast<int>(m.cols())});
  };
  auto push_vec = [&refs](const std::string& name, Eigen::VectorXd& v) {
    refs.push_back({name, v.data(), v.size(), static_cast<int>(v.size()), 1});
  };
  push("embedding", model.embedding);
  for (std::size_t b = 0; b < model.branches.size(); ++b) {
    push("conv" + std::to_string(b) + ".weight", model.branches[b].weight);
    push_vec("conv" + std::to_string(b) + ".bias", model.branches[b].bias);
  }
  push("lstm.wx", model.lstm_wx);
  push("lstm.wh", model.lstm_wh);
  push_vec("lstm.bias", model.lstm_b);
  push("out.weight", model.out_w);
  push_vec("out.bias", model.out_b);
  return refs;
}

std::vector<ConstTensorRef> model_tensors(const NNModel& model) {
  auto refs = model_tensors(const_cast<NNModel&>(model));  // read-only view
  std::vector<ConstTensorRef> out;
  out.reserve(refs.size());
  for (const auto& r : refs) {
    out.push_back({r.name, r.data, r.size, r.rows, r.cols});
  }
  return out;
}

NNModel init_model(const NNConfig& config, std::uint64_t seed) {
  config.validate();
  NNModel model = zeros_like(config);
  Rng rng(seed);
  for (auto& t : model_tensors(model)) {
    if (t.name.ends_with(".bias")) continue;
    double bound = std::sqrt(6.0 / (t.rows + t.cols));
    for (std::ptrdiff_t i = 0; i < t.size; ++i) {
      t.data[i] = (2.0 * rng.next_real() - 1.0) * bound;
    }
  }
  // Forget-gate bias starts at 1 so early training does not wipe the cell.
  const int H = config.lstm_hidden;
  model.lstm_b.segment(H, H).setOnes();
  model.embedding.row(NNConfig::pad_index).setZero();
  return model;
}

Batch make_batch(std::span<const Utterance* const> utterances) {
  if (utterances.empty()) throw LengthMismatch("empty batch");
  int width = 0;
  for (const auto* u : utterances) {
    if (u->phones.empty()) throw LengthMismatch("utterance of length 0");
    width = std::max(width, static_cast<int>(u->phones.size()));
  }
  Batch batch;
  batch.tokens = Eigen::MatrixXi::Constant(
      static_cast<int>(utterances.size()), width, NNConfig::pad_index);
  batch.lengths.reserve(utterances.size());
  for (std::size_t b = 0; b < utterances.size(); ++b) {
    const auto& phones = utterances[b]->phones;
    for (std::size_t t = 0; t < phones.size(); ++t) {
      batch.tokens(static_cast<int>(b), static_cast<int>(t)) = phones[t];
    }
    batch.lengths.push_back(static_cast<int>(phones.size()));
  }
  return batch;
}

Batch make_batch(const std::vector<Utterance>& utterances) {
  std::vector<const Utterance*> ptrs;
  ptrs.reserve(utterances.size());
  for (const auto& u : utterances) ptrs.push_back(&u);
  return make_batch(ptrs);
}

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& a) {
  return 1.0 / (1.0 + (-a).exp());
}

// Forward for one sequence; positions outside [0, L) contribute nothing to
// conv windows, which matches PAD-at-zero embeddings for any padded width.
ExampleTrace run_example(const NNModel& model, std::span<const int> tokens) {
  const auto& cfg = model.config;
  const int D = cfg.embed_dim, C = cfg.conv_channels, H = cfg.lstm_hidden;
  const int F = cfg.concat_dim();
  const int L = static_cast<int>(tokens.size());

  ExampleTrace tr;
  tr.tokens.assign(tokens.begin(), tokens.end());
  tr.emb.resize(D, L);
  for (int t = 0; t < L; ++t) {
    int tok = tokens[t];
    if (tok < 0 || tok >= cfg.vocab_size) throw IndexOutOfRange(tok);
    tr.emb.col(t) = model.embedding.row(tok).transpose();
  }

  tr.x.resize(F, L);
  tr.conv_pre.resize(model.branches.size());
  for (std::size_t b = 0; b < model.branches.size(); ++b) {
    const auto& br = model.branches[b];
    const int off = (br.kernel - 1) / 2;
    auto& pre = tr.conv_pre[b];
    pre.resize(C, L);
    for (int t = 0; t < L; ++t) {
      pre.col(t) = br.bias;
      for (int j = 0; j < br.kernel; ++j) {
        int s = t + j - off;
        if (s < 0 || s >= L) continue;
        pre.col(t).noalias() += br.weight.middleCols(j * D, D) * tr.emb.col(s);
      }
    }
    tr.x.middleRows(static_cast<int>(b) * C, C) = pre.cwiseMax(0.0);
  }

  tr.gate_i.resize(H, L);
  tr.gate_f.resize(H, L);
  tr.gate_g.resize(H, L);
  tr.gate_o.resize(H, L);
  tr.cell.resize(H, L);
  tr.hidden.resize(H, L);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd a(4 * H);
  for (int t = 0; t < L; ++t) {
    a = model.lstm_b;
    a.noalias() += model.lstm_wx * tr.x.col(t);
    a.noalias() += model.lstm_wh * h_prev;
    tr.gate_i.col(t) = sigmoid(a.head(H).array());
    tr.gate_f.col(t) = sigmoid(a.segment(H, H).array());
    tr.gate_g.col(t) = a.segment(2 * H, H).array().tanh();
    tr.gate_o.col(t) = sigmoid(a.tail(H).array());
    tr.cell.col(t) = tr.gate_f.col(t).cwiseProduct(c_prev) +
                     tr.gate_i.col(t).cwiseProduct(tr.gate_g.col(t));
    tr.hidden.col(t) =
        tr.gate_o.col(t).cwiseProduct(tr.cell.col(t).array().tanh().matrix());
    h_prev = tr.hidden.col(t);
    c_prev = tr.cell.col(t);
  }

  tr.logits = model.out_b;
  tr.logits.noalias() += model.out_w * tr.hidden.col(L - 1);
  return tr;
}

void validate_batch(const NNConfig& cfg, const Batch& batch) {
  const int B = static_cast<int>(batch.tokens.rows());
  const int W = static_cast<int>(batch.tokens.cols());
  if (static_cast<int>(batch.lengths.size()) != B) {
    throw LengthMismatch("lengths size != batch rows");
  }
  for (int b = 0; b < B; ++b) {
    int len = batch.lengths[b];
    if (len < 1 || len > W) {
      throw LengthMismatch("length out of [1, width]");
    }
    for (int t = 0; t < W; ++t) {
      int tok = batch.tokens(b, t);
      if (tok < 0 || tok >= cfg.vocab_size) throw IndexOutOfRange(tok);
      if (t >= len && tok != NNConfig::pad_index) {
        throw LengthMismatch("non-PAD token beyond true length");
      }
    }
  }
}

// Softmax cross-entropy for one example; fills dlogits with
// softmax(logits) - onehot(label).
double example_loss(const Eigen::VectorXd& logits, int label,
                    Eigen::VectorXd* dlogits) {
  double m = logits.maxCoeff();
  Eigen::ArrayXd e = (logits.array() - m).exp();
  double z = e.sum();
  if (dlogits) {
    *dlogits = (e / z).matrix();
    (*dlogits)(label) -= 1.0;
  }
  return m + std::log(z) - logits(label);
}

// Pairwise (recursive halving) reductions: summing a batch that consists of
// two copies of a smaller batch yields exactly twice the smaller sum, which
// keeps mean loss/gradients invariant under batch duplication.
double reduce_sum(std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return v[lo];
  std::size_t mid = lo + (hi - lo) / 2;
  return reduce_sum(v, lo, mid) + reduce_sum(v, mid, hi);
}

void add_model(NNModel& a, const NNModel& b) {
  a.embedding += b.embedding;
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    a.branches[i].weight += b.branches[i].weight;
    a.branches[i].bias += b.branches[i].bias;
  }
  a.lstm_wx += b.lstm_wx;
  a.lstm_wh += b.lstm_wh;
  a.lstm_b += b.lstm_b;
  a.out_w += b.out_w;
  a.out_b += b.out_b;
}

NNModel reduce_models(std::vector<NNModel>& v, std::size_t lo,
                      std::size_t hi) {
  if (hi - lo == 1) return std::move(v[lo]);
  std::size_t mid = lo + (hi - lo) / 2;
  NNModel left = reduce_models(v, lo, mid);
  NNModel right = reduce_models(v, mid, hi);
  add_model(left, right);
  return left;
}

void scale_model(NNModel& m, double factor) {
  m.embedding *= factor;
  for (auto& b : m.branches) {
    b.weight *= factor;
    b.bias *= factor;
  }
  m.lstm_wx *= factor;
  m.lstm_wh *= factor;
  m.lstm_b *= factor;
  m.out_w *= factor;
  m.out_b *= factor;
}

// Backward for one example; gradients land in `g`.
void backward_example(const NNModel& model, const ExampleTrace& tr, int label,
                      NNModel& g) {
  const auto& cfg = model.config;
  const int D = cfg.embed_dim, C = cfg.conv_channels, H = cfg.lstm_hidden;
  const int F = cfg.concat_dim();
  const int L = static_cast<int>(tr.tokens.size());

  Eigen::VectorXd dlogits;
  example_loss(tr.logits, label, &dlogits);

  g.out_w.noalias() += dlogits * tr.hidden.col(L - 1).transpose();
  g.out_b += dlogits;

  Eigen::MatrixXd dx(F, L);
  Eigen::VectorXd dh = model.out_w.transpose() * dlogits;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd da(4 * H);
  const Eigen::VectorXd zero_h = Eigen::VectorXd::Zero(H);
  for (int t = L - 1; t >= 0; --t) {
    auto i = tr.gate_i.col(t).array();
    auto f = tr.gate_f.col(t).array();
    auto gg = tr.gate_g.col(t).array();
    auto o = tr.gate_o.col(t).array();
    Eigen::ArrayXd tanh_c = tr.cell.col(t).array().tanh();
    const Eigen::VectorXd& c_prev = t > 0 ? tr.cell.col(t - 1) : zero_h;
    const Eigen::VectorXd& h_prev = t > 0 ? tr.hidden.col(t - 1) : zero_h;

    Eigen::ArrayXd d_out = dh.array() * tanh_c;
    Eigen::ArrayXd dc_all = dc.array() + dh.array() * o * (1.0 - tanh_c.square());
    Eigen::ArrayXd d_in = dc_all * gg;
    Eigen::ArrayXd d_forget = dc_all * c_prev.array();
    Eigen::ArrayXd d_cellin = dc_all * i;

    da.head(H) = (d_in * i * (1.0 - i)).matrix();
    da.segment(H, H) = (d_forget * f * (1.0 - f)).matrix();
    da.segment(2 * H, H) = (d_cellin * (1.0 - gg.square())).matrix();
    da.tail(H) = (d_out * o * (1.0 - o)).matrix();

    g.lstm_wx.noalias() += da * tr.x.col(t).transpose();
    g.lstm_wh.noalias() += da * h_prev.transpose();
    g.lstm_b += da;
    dx.col(t).noalias() = model.lstm_wx.transpose() * da;
    dh.noalias() = model.lstm_wh.transpose() * da;
    dc = (dc_all * f).matrix();
  }

  Eigen::MatrixXd demb = Eigen::MatrixXd::Zero(D, L);
  for (std::size_t b = 0; b < model.branches.size(); ++b) {
    const auto& br = model.branches[b];
    auto& gbr = g.branches[b];
    const int off = (br.kernel - 1) / 2;
    for (int t = 0; t < L; ++t) {
      Eigen::VectorXd dpre =
          dx.col(t).segment(static_cast<int>(b) * C, C).cwiseProduct(
              (tr.conv_pre[b].col(t).array() > 0.0).cast<double>().matrix());
      gbr.bias += dpre;
      for (int j = 0; j < br.kernel; ++j) {
        int s = t + j - off;
        if (s < 0 || s >= L) continue;
        gbr.weight.middleCols(j * D, D).noalias() +=
            dpre * tr.emb.col(s).transpose();
        demb.col(s).noalias() +=
            br.weight.middleCols(j * D, D).transpose() * dpre;
      }
    }
  }
  for (int t = 0; t < L; ++t) {
    g.embedding.row(tr.tokens[t]) += demb.col(t).transpose();
  }
  g.embedding.row(NNConfig::pad_index).setZero();
}

}  // namespace

ForwardResult forward(const NNModel& model, const Batch& batch) {
  validate_batch(model.config, batch);
  const int B = static_cast<int>(batch.tokens.rows());

  ForwardResult result;
  result.logits.resize(B, model.config.num_intents);
  result.cache.examples.reserve(B);
  for (int b = 0; b < B; ++b) {
    std::vector<int> tokens(batch.lengths[b]);
    for (int t = 0; t < batch.lengths[b]; ++t) tokens[t] = batch.tokens(b, t);
    ExampleTrace tr = run_example(model, tokens);
    result.logits.row(b) = tr.logits.transpose();
    result.cache.examples.push_back(std::move(tr));
  }
  return result;
}

LossAndGrads loss_and_backward(const NNModel& model, const Batch& batch,
                               const std::vector<int>& labels,
                               const ForwardCache& cache) {
  const std::size_t B = batch.lengths.size();
  if (B == 0 || cache.examples.size() != B || labels.size() != B) {
    throw CacheMismatch();
  }
  for (std::size_t b = 0; b < B; ++b) {
    const auto& tokens = cache.examples[b].tokens;
    if (static_cast<int>(tokens.size()) != batch.lengths[b]) {
      throw CacheMismatch();
    }
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t] != batch.tokens(static_cast<int>(b),
                                    static_cast<int>(t))) {
        throw CacheMismatch();
      }
    }
    if (labels[b] < 0 || labels[b] >= model.config.num_intents) {
      throw IndexOutOfRange(labels[b]);
    }
  }

  std::vector<double> losses(B);
  std::vector<NNModel> grads;
  grads.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    losses[b] = example_loss(cache.examples[b].logits, labels[b], nullptr);
    NNModel g = zeros_like(model.config);
    backward_example(model, cache.examples[b], labels[b], g);
    grads.push_back(std::move(g));
  }

  LossAndGrads out{reduce_sum(losses, 0, B) / static_cast<double>(B),
                   reduce_models(grads, 0, B)};
  scale_model(out.grads, 1.0 / static_cast<double>(B));
  return out;
}

double batch_loss(const NNModel& model, const Batch& batch,
                  const std::vector<int>& labels) {
  validate_batch(model.config, batch);
  const std::size_t B = batch.lengths.size();
  if (B == 0 || labels.size() != B) throw CacheMismatch();
  std::vector<double> losses(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<int> tokens(batch.lengths[b]);
    for (int t = 0; t < batch.lengths[b]; ++t) {
      tokens[t] = batch.tokens(static_cast<int>(b), t);
    }
    ExampleTrace tr = run_example(model, tokens);
    losses[b] = example_loss(tr.logits, labels[b], nullptr);
  }
  return reduce_sum(losses, 0, B) / static_cast<double>(B);
}

Eigen::VectorXd nn_logits(const NNModel& model, std::span<const int> phones) {
  if (phones.empty()) throw LengthMismatch("utterance of length 0");
  return run_example(model, phones).logits;
}

namespace {

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace

int nn_predict(const NNModel& model, const Utterance& u) {
  return argmax_lowest(nn_logits(model, u.phones));
}

namespace {

void apply_update(NNModel& model, NNModel& grads, NNModel& m1, NNModel& m2,
                  long step, const TrainHyper& hyper) {
  auto pt = model_tensors(model);
  auto gt = model_tensors(grads);
  auto m1t = model_tensors(m1);
  auto m2t = model_tensors(m2);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    Eigen::Map<Eigen::ArrayXd> p(pt[i].data, pt[i].size);
    Eigen::Map<Eigen::ArrayXd> g(gt[i].data, gt[i].size);
    if (hyper.optimizer == OptimizerKind::kSgd) {
      p -= hyper.learning_rate * g;
      continue;
    }
    Eigen::Map<Eigen::ArrayXd> m(m1t[i].data, m1t[i].size);
    Eigen::Map<Eigen::ArrayXd> v(m2t[i].data, m2t[i].size);
    const auto& a = hyper.adam;
    m = a.beta1 * m + (1.0 - a.beta1) * g;
    v = a.beta2 * v + (1.0 - a.beta2) * g.square();
    double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
    double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
    p -= hyper.learning_rate * (m / c1) / ((v / c2).sqrt() + a.epsilon);
  }
}

double training_accuracy(const NNModel& model, const Corpus& corpus) {
  std::size_t correct = 0;
  for (const auto& u : corpus.utterances) {
    if (nn_predict(model, u) == u.intent) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(corpus.utterances.size());
}

}  // namespace

TrainResult train_nn(const Corpus& train, const NNConfig& config,
                     const TrainHyper& hyper) {
  config.validate();
  if (train.utterances.empty()) throw EmptyCorpus();
  if (config.num_intents < 2) {
    throw InvalidConfig("training needs at least 2 intents");
  }
  if (config.vocab_size != train.inventory.size() ||
      config.num_intents != train.labels.size()) {
    throw InvalidConfig("config does not match corpus inventory/labels");
  }
  if (!(hyper.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (hyper.batch_size < 1) {
    throw std::invalid_argument("batch_size must be >= 1");
  }
  if (hyper.max_epochs < 1) {
    throw std::invalid_argument("max_epochs must be >= 1");
  }

  NNModel model = init_model(config, derive_seed(hyper.seed, "nn-init"));
  NNModel m1 = zeros_like(config);
  NNModel m2 = zeros_like(config);
  Rng shuffle_rng(derive_seed(hyper.seed, "nn-shuffle"));

  const std::size_t n = train.utterances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    if (hyper.shuffle) shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(hyper.batch_size)) {
      std::size_t end =
          std::min(n, start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<const Utterance*> ptrs;
      std::vector<int> labels;
      ptrs.reserve(end - start);
      labels.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(&train.utterances[order[i]]);
        labels.push_back(train.utterances[order[i]].intent);
      }
      Batch batch = make_batch(ptrs);
      ForwardResult fr = forward(model, batch);
      LossAndGrads lg = loss_and_backward(model, batch, labels, fr.cache);
      loss_sum += lg.loss * static_cast<double>(end - start);
      ++step;
      apply_update(model, lg.grads, m1, m2, step, hyper);
    }
    double accuracy = training_accuracy(model, train);
    result.history.epochs.push_back(
        {loss_sum / static_cast<double>(n), accuracy});
    if (hyper.stop_train_accuracy &&
        accuracy >= *hyper.stop_train_accuracy) {
      break;
    }
  }
  result.model = std::move(model);
  return result;
}

NNModel numeric_gradients(const NNModel& model, const Batch& batch,
                          const std::vector<int>& labels, double h) {
  NNModel probe = model;  // perturbed in place, element by element
  NNModel numeric = zeros_like(model.config);
  auto pt = model_tensors(probe);
  auto nt = model_tensors(numeric);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    for (std::ptrdiff_t j = 0; j < pt[i].size; ++j) {
      double saved = pt[i].data[j];
      pt[i].data[j] = saved + h;
      double up = batch_loss(probe, batch, labels);
      pt[i].data[j] = saved - h;
      double down = batch_loss(probe, batch, labels);
      pt[i].data[j] = saved;
      nt[i].data[j] = (up - down) / (2.0 * h);
    }
  }
  return numeric;
}

GradCheckReport compare_gradients(NNModel& analytic, NNModel& numeric,
                                  double h, double tol) {
  GradCheckReport report;
  report.h = h;
  report.tol = tol;
  report.all_pass = true;
  auto at = model_tensors(analytic);
  auto nt = model_tensors(numeric);
  for (std::size_t i = 0; i < at.size(); ++i) {
    double worst = 0.0;
    for (std::ptrdiff_t j = 0; j < at[i].size; ++j) {
      double a = at[i].data[j], n = nt[i].data[j];
      double denom = std::max({std::abs(a), std::abs(n), 1e-8});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
    bool pass = worst < tol;
    report.all_pass = report.all_pass && pass;
    report.tensors.push_back({at[i].name, worst, pass});
  }
  return report;
}

namespace {

// Central differences are only a valid oracle at a well-conditioned test
// point: a ReLU pre-activation within a few h of zero puts a kink inside
// the difference stencil, and a true gradient far below the evaluation
// noise floor (~eps/h) drowns in roundoff. Neither is a property of the
// gradients under test, so ill-conditioned draws are rejected.
bool well_conditioned_point(const ForwardCache& cache, const NNModel& grads,
                            double h) {
  const double kink_margin = 8.0 * h;
  for (const auto& tr : cache.examples) {
    for (const auto& pre : tr.conv_pre) {
      if (pre.cwiseAbs().minCoeff() < kink_margin) return false;
    }
  }
  const double grad_floor = 1e-6;
  for (const auto& t : model_tensors(grads)) {
    for (std::ptrdiff_t j = 0; j < t.size; ++j) {
      double a = std::abs(t.data[j]);
      if (a != 0.0 && a < grad_floor) return false;
    }
  }
  return true;
}

}  // namespace

GradCheckReport grad_check(const NNConfig& config, std::uint64_t seed,
                           double h, double tol) {
  config.validate();
  if (!(h > 0.0)) throw std::invalid_argument("h must be > 0");

  constexpr int kMaxDraws = 64;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    std::string tag = ":" + std::to_string(attempt);
    NNModel model =
        init_model(config, derive_seed(seed, "gradcheck-init" + tag));

    // A small batch with uneven lengths, including the minimal length 1.
    Rng rng(derive_seed(seed, "gradcheck-batch" + tag));
    const std::vector<int> lens = {1, 3, 5, 8};
    std::vector<Utterance> utterances;
    std::vector<int> labels;
    for (int len : lens) {
      Utterance u;
      u.language = "check";
      u.intent = static_cast<int>(rng.next_index(config.num_intents));
      for (int t = 0; t < len; ++t) {
        u.phones.push_back(
            1 + static_cast<int>(rng.next_index(config.vocab_size - 1)));
      }
      labels.push_back(u.intent);
      utterances.push_back(std::move(u));
    }
    Batch batch = make_batch(utterances);

    ForwardResult fr = forward(model, batch);
    LossAndGrads lg = loss_and_backward(model, batch, labels, fr.cache);
    if (attempt + 1 < kMaxDraws &&
        !well_conditioned_point(fr.cache, lg.grads, h)) {
      continue;
    }
    NNModel numeric = numeric_gradients(model, batch, labels, h);
    return compare_gradients(lg.grads, numeric, h, tol);
  }
  throw std::logic_error("unreachable");  // the final draw always runs
}

}  // namespace phintent
