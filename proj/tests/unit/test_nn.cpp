#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "phintent/network.hpp"
#include "phintent/rng.hpp"
#include "support/builders.hpp"

using namespace phintent;

namespace {

NNConfig tiny_config(int vocab = 12, int intents = 3) {
  NNConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = 8;
  cfg.conv_channels = 6;
  cfg.kernel_sizes = {3, 5};
  cfg.lstm_hidden = 10;
  cfg.num_intents = intents;
  return cfg;
}

bool models_equal(const NNModel& a, const NNModel& b) {
  auto ta = model_tensors(a);
  auto tb = model_tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].size != tb[i].size) return false;
    for (std::ptrdiff_t j = 0; j < ta[i].size; ++j) {
      if (ta[i].data[j] != tb[i].data[j]) return false;
    }
  }
  return true;
}

Utterance make_utterance(Rng& rng, int vocab, int len, int intent = 0) {
  Utterance u;
  u.language = "l";
  u.intent = intent;
  for (int t = 0; t < len; ++t) {
    u.phones.push_back(1 + static_cast<int>(rng.next_index(vocab - 1)));
  }
  return u;
}

}  // namespace

TEST_CASE("init is deterministic with zero PAD row and forget bias 1") {
  NNConfig cfg = tiny_config();
  NNModel a = init_model(cfg, 9);
  NNModel b = init_model(cfg, 9);
  CHECK(models_equal(a, b));
  NNModel c = init_model(cfg, 10);
  CHECK(!models_equal(a, c));

  CHECK(a.embedding.row(0).isZero(0.0));
  const int H = cfg.lstm_hidden;
  for (int i = 0; i < 4 * H; ++i) {
    bool forget_gate = i >= H && i < 2 * H;
    CHECK(a.lstm_b(i) == (forget_gate ? 1.0 : 0.0));
  }
  for (const auto& br : a.branches) CHECK(br.bias.isZero(0.0));
  CHECK(a.out_b.isZero(0.0));
}

TEST_CASE("init draws stay inside the fan-based bound") {
  NNConfig cfg = tiny_config();
  cfg.vocab_size = 128;
  cfg.embed_dim = 128;
  NNModel m = init_model(cfg, 4);
  double bound = std::sqrt(6.0 / 256.0);  // 128 x 128 tensor
  CHECK(m.embedding.cwiseAbs().maxCoeff() <= bound);
  CHECK(m.embedding.cwiseAbs().maxCoeff() > 0.5 * bound);
}

TEST_CASE("forward on a length-1 batch runs one LSTM step") {
  NNConfig cfg = tiny_config();
  NNModel m = init_model(cfg, 1);
  Rng rng(2);
  std::vector<Utterance> utts{make_utterance(rng, cfg.vocab_size, 1)};
  ForwardResult fr = forward(m, make_batch(utts));
  CHECK(fr.logits.rows() == 1);
  CHECK(fr.logits.cols() == cfg.num_intents);
  CHECK(fr.cache.examples[0].hidden.cols() == 1);
}

TEST_CASE("same-padding convolution preserves sequence length") {
  NNConfig cfg = tiny_config();
  NNModel m = init_model(cfg, 1);
  Rng rng(3);
  std::vector<Utterance> utts{make_utterance(rng, cfg.vocab_size, 7)};
  ForwardResult fr = forward(m, make_batch(utts));
  for (const auto& pre : fr.cache.examples[0].conv_pre) {
    CHECK(pre.cols() == 7);  // k = 3 and k = 5 branches both
  }
}

TEST_CASE("tiny convolution matches a by-hand computation") {
  // One branch, k = 3, 1 channel, embed_dim 1: the conv is a moving dot
  // product with the kernel over [prev, here, next] with zero boundaries.
  NNConfig cfg;
  cfg.vocab_size = 4;
  cfg.embed_dim = 1;
  cfg.conv_channels = 1;
  cfg.kernel_sizes = {3};
  cfg.lstm_hidden = 2;
  cfg.num_intents = 2;
  NNModel m = zeros_like(cfg);
  m.embedding(1, 0) = 1.0;
  m.embedding(2, 0) = 2.0;
  m.embedding(3, 0) = 3.0;
  m.branches[0].weight << 10.0, 100.0, 1000.0;  // taps at -1, 0, +1
  m.branches[0].bias(0) = 0.5;

  Utterance u;
  u.language = "l";
  u.intent = 0;
  u.phones = {1, 2, 3};
  std::vector<Utterance> utts{u};
  ForwardResult fr = forward(m, make_batch(utts));
  const auto& pre = fr.cache.examples[0].conv_pre[0];
  CHECK(pre(0, 0) == doctest::Approx(0.5 + 100.0 * 1 + 1000.0 * 2));
  CHECK(pre(0, 1) == doctest::Approx(0.5 + 10.0 * 1 + 100.0 * 2 + 1000.0 * 3));
  CHECK(pre(0, 2) == doctest::Approx(0.5 + 10.0 * 2 + 100.0 * 3));
}

TEST_CASE("zeroed output layer gives uniform softmax and ln(K) loss") {
  NNConfig cfg = tiny_config(12, 4);
  NNModel m = init_model(cfg, 5);
  m.out_w.setZero();
  m.out_b.setZero();
  Rng rng(4);
  std::vector<Utterance> utts;
  std::vector<int> labels;
  for (int i = 0; i < 3; ++i) {
    utts.push_back(make_utterance(rng, cfg.vocab_size, 4 + i, i % 4));
    labels.push_back(i % 4);
  }
  Batch batch = make_batch(utts);
  ForwardResult fr = forward(m, batch);
  CHECK(fr.logits.isZero(0.0));
  CHECK(batch_loss(m, batch, labels) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(nn_predict(m, utts[0]) == 0);  // uniform logits tie to intent 0
}

TEST_CASE("softmax normalizes: output-bias gradients sum to zero") {
  // d(loss)/d(out_b) for one example is softmax(logits) - onehot, so its
  // coordinates must sum to 0 exactly when the softmax sums to 1.
  NNConfig cfg = tiny_config(10, 5);
  NNModel model = init_model(cfg, 21);
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Utterance> utts{
        make_utterance(rng, cfg.vocab_size,
                       1 + static_cast<int>(rng.next_index(7)))};
    std::vector<int> labels{static_cast<int>(rng.next_index(5))};
    Batch batch = make_batch(utts);
    ForwardResult fr = forward(model, batch);
    LossAndGrads lg = loss_and_backward(model, batch, labels, fr.cache);
    CHECK(std::abs(lg.grads.out_b.sum()) < 1e-12);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  GradCheckReport report = grad_check(tiny_config(), 7, 1e-5, 1e-4);
  CHECK(report.all_pass);
  CHECK(report.tensors.size() == 10);
  std::set<std::string> names;
  for (const auto& t : report.tensors) {
    names.insert(t.name);
    INFO(t.name, " err=", t.max_rel_err);
    CHECK(t.pass);
  }
  CHECK(names.size() == 10);  // every tensor reported exactly once
}

TEST_CASE("gradient checker flags a corrupted tensor") {
  NNConfig cfg = tiny_config();
  NNModel model = init_model(cfg, 7);
  Rng rng(8);
  std::vector<Utterance> utts;
  std::vector<int> labels;
  for (int i = 0; i < 3; ++i) {
    utts.push_back(make_utterance(rng, cfg.vocab_size, 3 + 2 * i, i % 3));
    labels.push_back(i % 3);
  }
  Batch batch = make_batch(utts);
  ForwardResult fr = forward(model, batch);
  LossAndGrads lg = loss_and_backward(model, batch, labels, fr.cache);
  NNModel numeric = numeric_gradients(model, batch, labels, 1e-5);

  GradCheckReport clean = compare_gradients(lg.grads, numeric, 1e-5, 1e-4);
  CHECK(clean.all_pass);

  lg.grads.lstm_wx *= 1.1;  // corrupt one analytic gradient by +10%
  GradCheckReport corrupted = compare_gradients(lg.grads, numeric, 1e-5, 1e-4);
  CHECK(!corrupted.all_pass);
  for (const auto& t : corrupted.tensors) {
    if (t.name == "lstm.wx") {
      CHECK(!t.pass);
    } else {
      CHECK(t.pass);
    }
  }

  GradCheckReport lax = compare_gradients(
      lg.grads, numeric, 1e-5, std::numeric_limits<double>::infinity());
  CHECK(lax.all_pass);
}

TEST_CASE("duplicating the batch reproduces loss and gradients exactly") {
  NNConfig cfg = tiny_config();
  NNModel model = init_model(cfg, 11);
  Rng rng(12);
  std::vector<Utterance> utts;
  std::vector<int> labels;
  for (int i = 0; i < 3; ++i) {  // odd count on purpose
    utts.push_back(make_utterance(rng, cfg.vocab_size, 2 + i, i % 3));
    labels.push_back(i % 3);
  }
  std::vector<Utterance> doubled = utts;
  doubled.insert(doubled.end(), utts.begin(), utts.end());
  std::vector<int> doubled_labels = labels;
  doubled_labels.insert(doubled_labels.end(), labels.begin(), labels.end());

  Batch batch = make_batch(utts);
  Batch big = make_batch(doubled);
  ForwardResult fr = forward(model, batch);
  ForwardResult fr2 = forward(model, big);
  LossAndGrads a = loss_and_backward(model, batch, labels, fr.cache);
  LossAndGrads b = loss_and_backward(model, big, doubled_labels, fr2.cache);
  CHECK(a.loss == b.loss);
  CHECK(models_equal(a.grads, b.grads));
}

TEST_CASE("padding width never changes logits") {
  NNConfig cfg = tiny_config();
  NNModel model = init_model(cfg, 13);
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    int len = 1 + static_cast<int>(rng.next_index(9));
    Utterance u = make_utterance(rng, cfg.vocab_size, len);

    auto padded_logits = [&](int width) {
      Batch batch;
      batch.tokens = Eigen::MatrixXi::Constant(1, width, NNConfig::pad_index);
      for (int t = 0; t < len; ++t) batch.tokens(0, t) = u.phones[t];
      batch.lengths = {len};
      return forward(model, batch).logits;
    };
    Eigen::MatrixXd narrow = padded_logits(len);
    Eigen::MatrixXd wide = padded_logits(len + 7);
    for (int i = 0; i < narrow.cols(); ++i) {
      CHECK(narrow(0, i) == wide(0, i));
    }
  }
}

TEST_CASE("batched predictions equal single-utterance predictions") {
  NNConfig cfg = tiny_config();
  NNModel model = init_model(cfg, 15);
  Rng rng(16);
  std::vector<Utterance> utts;
  for (int i = 0; i < 5; ++i) {
    utts.push_back(make_utterance(rng, cfg.vocab_size,
                                  1 + static_cast<int>(rng.next_index(8))));
  }
  ForwardResult fr = forward(model, make_batch(utts));
  for (std::size_t b = 0; b < utts.size(); ++b) {
    Eigen::VectorXd single = nn_logits(model, utts[b].phones);
    for (int i = 0; i < single.size(); ++i) {
      CHECK(fr.logits(static_cast<int>(b), i) == single(i));
    }
  }
}

TEST_CASE("forward validates tokens and lengths") {
  NNConfig cfg = tiny_config();
  NNModel model = init_model(cfg, 17);
  Batch batch;
  batch.tokens = Eigen::MatrixXi::Constant(1, 3, 1);
  batch.lengths = {3};
  batch.tokens(0, 2) = cfg.vocab_size;  // out of range
  CHECK_THROWS_AS(forward(model, batch), IndexOutOfRange);

  batch.tokens(0, 2) = 1;
  batch.lengths = {2};  // non-PAD token beyond true length
  CHECK_THROWS_AS(forward(model, batch), LengthMismatch);

  batch.lengths = {2, 2};
  CHECK_THROWS_AS(forward(model, batch), LengthMismatch);

  batch.lengths = {4};
  CHECK_THROWS_AS(forward(model, batch), LengthMismatch);
}

TEST_CASE("training is deterministic and fits a separable set") {
  Rng rng(18);
  Corpus corpus =
      phintent::testing::separable_corpus(rng, 16, 2, 8, 10, 4);
  NNConfig cfg = tiny_config(corpus.inventory.size(), corpus.labels.size());
  TrainHyper hyper;
  hyper.batch_size = 4;
  hyper.max_epochs = 120;
  hyper.seed = 3;
  hyper.stop_train_accuracy = 1.0;

  TrainResult a = train_nn(corpus, cfg, hyper);
  TrainResult b = train_nn(corpus, cfg, hyper);
  CHECK(models_equal(a.model, b.model));
  REQUIRE(!a.history.epochs.empty());
  CHECK(a.history.epochs.size() == b.history.epochs.size());
  CHECK(a.history.epochs.size() <= 120);
  CHECK(a.history.epochs.back().train_accuracy == 1.0);

  // Final history entry equals a fresh evaluation of the final model.
  std::size_t correct = 0;
  for (const auto& u : corpus.utterances) {
    correct += nn_predict(a.model, u) == u.intent;
  }
  CHECK(static_cast<double>(correct) / corpus.size() ==
        a.history.epochs.back().train_accuracy);
}

TEST_CASE("history length equals epochs run without early stopping") {
  Rng rng(19);
  Corpus corpus = phintent::testing::separable_corpus(rng, 12, 2, 4, 8, 3);
  NNConfig cfg = tiny_config(corpus.inventory.size(), corpus.labels.size());
  TrainHyper hyper;
  hyper.batch_size = 8;
  hyper.max_epochs = 5;
  TrainResult r = train_nn(corpus, cfg, hyper);
  CHECK(r.history.epochs.size() == 5);
}

TEST_CASE("train_nn validates inputs") {
  Rng rng(20);
  Corpus corpus = phintent::testing::separable_corpus(rng, 12, 2, 4, 8, 3);
  NNConfig cfg = tiny_config(corpus.inventory.size(), corpus.labels.size());
  CHECK_THROWS_AS(train_nn(Corpus{}, cfg, TrainHyper{}), EmptyCorpus);
  NNConfig bad = cfg;
  bad.vocab_size += 1;
  CHECK_THROWS_AS(train_nn(corpus, bad, TrainHyper{}), InvalidConfig);
  TrainHyper hyper;
  hyper.learning_rate = 0.0;
  CHECK_THROWS_AS(train_nn(corpus, cfg, hyper), std::invalid_argument);
  NNConfig even = cfg;
  even.kernel_sizes = {4};
  CHECK_THROWS_AS(init_model(even, 1), InvalidConfig);
}
