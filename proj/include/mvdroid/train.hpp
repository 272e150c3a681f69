#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvdroid/checkpoint.hpp"
#include "mvdroid/config.hpp"
#include "mvdroid/model.hpp"

namespace mvd {

template <typename S>
struct Example {
  SampleInput<S> input;
  int label = 0;  // 1 = malicious
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_acc = 0;
};

std::string history_csv(const std::vector<EpochRecord>& history);

/// Tracks the best (lowest) loss and says stop once `patience` epochs pass
/// without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double loss) {
    if (loss < best_loss_) {
      best_loss_ = loss;
      best_epoch_ = epoch;
      improved_ = true;
    } else {
      improved_ = false;
    }
    return epoch - best_epoch_ >= patience_;
  }
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

/// Per-class shuffled split; round(fraction * class size) samples of each
/// class go to the second list. Both lists are returned sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<int>& labels,
                                                                               double fraction, std::uint64_t seed);

template <typename S>
ad::Vec<S> one_hot_label(int label) {
  ad::Vec<S> t = ad::Vec<S>::Zero(2);
  t[label == 1 ? 1 : 0] = S(1);
  return t;
}

inline int predicted_class(double p_benign, double p_malicious) { return p_malicious > p_benign ? 1 : 0; }

/// Probabilities of the malicious class, eval mode.
template <typename S>
std::vector<double> predict_malicious(const Model<S>& model, const std::vector<Example<S>>& data) {
  std::mt19937_64 rng(0);
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(static_cast<double>(model.forward(ex.input, false, rng).value()[1]));
  return out;
}

struct LossAccuracy {
  double loss = 0;
  double accuracy = 0;
};

template <typename S>
LossAccuracy measure(const Model<S>& model, const std::vector<Example<S>>& data) {
  std::mt19937_64 rng(0);
  LossAccuracy r;
  for (const auto& ex : data) {
    const auto probs = model.forward(ex.input, false, rng);
    r.loss += static_cast<double>(ad::cross_entropy(probs, one_hot_label<S>(ex.label)).item());
    const int pred = predicted_class(static_cast<double>(probs.value()[0]), static_cast<double>(probs.value()[1]));
    r.accuracy += pred == ex.label ? 1.0 : 0.0;
  }
  if (!data.empty()) {
    r.loss /= static_cast<double>(data.size());
    r.accuracy /= static_cast<double>(data.size());
  }
  return r;
}

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::vector<NamedArray> best;
};

/// Minibatch Adam on the summed cross-entropy. Early stopping watches the
/// validation loss, or the eval-mode training loss when `val` is empty.
/// The model is left holding the best parameters.
template <typename S>
TrainResult train_model(Model<S>& model, const std::vector<Example<S>>& train, const std::vector<Example<S>>& val,
                        const TrainConfig& cfg, std::uint64_t seed,
                        const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "no training samples");
  const auto positives = std::count_if(train.begin(), train.end(), [](const auto& e) { return e.label == 1; });
  if (positives == 0 || positives == static_cast<long>(train.size()))
    throw Error(ErrorCode::SingleClassDataset, "training samples are all one class");
  if (cfg.batch_size == 0) throw Error(ErrorCode::BadConfig, "batch_size must be positive");

  auto& store = model.params();
  if (cfg.freeze_encoders) store.freeze(Model<S>::encoder_prefixes());
  ad::Adam<S> adam(ad::AdamOptions{.learning_rate = cfg.learning_rate});
  std::mt19937_64 rng(seed);
  EarlyStopping stopper(cfg.patience);
  TrainResult result;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      store.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train[order[i]];
        auto loss = ad::cross_entropy(model.forward(ex.input, true, rng), one_hot_label<S>(ex.label));
        total += static_cast<double>(loss.item());
        loss.backward();
      }
      adam.step(store, static_cast<double>(end - start));
    }
    const LossAccuracy watch = measure(model, val.empty() ? train : val);
    EpochRecord rec{epoch, total / static_cast<double>(train.size()), watch.loss, watch.accuracy};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    const bool stop = stopper.update(epoch, watch.loss);
    if (stopper.improved()) {
      result.best = snapshot(store);
      result.best_epoch = epoch;
    }
    if (stop) break;
  }
  restore(store, result.best);
  store.zero_grad();
  return result;
}

}  // namespace mvd
