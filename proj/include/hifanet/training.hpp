#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "hifanet/autodiff.hpp"
#include "hifanet/baselines.hpp"
#include "hifanet/observation.hpp"
#include "json.hpp"

namespace hifanet {

struct TrainConfig {
  double lr0 = 0.1;
  double decay_factor = 0.5;
  std::size_t decay_every = 30;  // epochs
  std::size_t epochs = 100;
  std::size_t batch_size = 64;   // groups per step
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr0 > 0)) throw ConfigInvalid("train config: lr0 must be positive");
    if (!(decay_factor > 0 && decay_factor <= 1)) throw ConfigInvalid("train config: decay_factor must be in (0, 1]");
    if (decay_every == 0 || epochs == 0 || batch_size == 0)
      throw ConfigInvalid("train config: decay_every, epochs and batch_size must be positive");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, lr0, decay_factor, decay_every, epochs, batch_size,
                                                seed)

inline double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_every));
}

/// Plain SGD, no momentum or weight decay. Gradients are cleared afterwards.
inline void sgd_step(num::ParamStore& params, double lr) {
  for (auto& [name, t] : params)
    if (!t.has_grad()) throw MissingGradients("parameter " + name + " has no gradient buffer");
  for (auto& [_, t] : params) {
    auto g = t.grad();
    auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    t.zero_grad();
  }
}

inline num::Var cross_entropy_loss(num::Var logits, std::span<const int> labels) {
  return num::cross_entropy(logits, labels);
}

struct MetricsReport {
  double miou = 0.0;
  double avg_accuracy = 0.0;
  double overall_accuracy = 0.0;
  std::vector<double> per_class_iou;  // NaN for classes absent from both truth and prediction
  std::vector<std::vector<std::uint64_t>> confusion;  // [truth][prediction]
};

/// IoU_c = TP / (TP + FP + FN), averaged over classes with TP + FP + FN > 0.
/// Average accuracy is macro recall over classes that occur in the ground truth.
inline MetricsReport metrics_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                              std::size_t class_count) {
  if (truth.empty()) throw EmptyDataset("no points to evaluate");
  if (truth.size() != predicted.size()) throw MismatchedLengths("truth and prediction lengths differ");
  MetricsReport r;
  r.confusion.assign(class_count, std::vector<std::uint64_t>(class_count, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || std::size_t(truth[i]) >= class_count || predicted[i] < 0 ||
        std::size_t(predicted[i]) >= class_count)
      throw LabelOutOfRange("label outside [0, class_count)");
    ++r.confusion[truth[i]][predicted[i]];
  }
  r.per_class_iou.assign(class_count, std::nan(""));
  double iou_sum = 0.0, recall_sum = 0.0;
  std::size_t present = 0, seen = 0;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    std::uint64_t tp = r.confusion[c][c], fn = 0, fp = 0;
    for (std::size_t o = 0; o < class_count; ++o) {
      if (o == c) continue;
      fn += r.confusion[c][o];
      fp += r.confusion[o][c];
    }
    correct += tp;
    if (tp + fp + fn > 0) {
      r.per_class_iou[c] = double(tp) / double(tp + fp + fn);
      iou_sum += r.per_class_iou[c];
      ++seen;
    }
    if (tp + fn > 0) {
      ++present;
      recall_sum += double(tp) / double(tp + fn);
    }
  }
  r.miou = iou_sum / double(seen);
  r.avg_accuracy = recall_sum / double(present);
  r.overall_accuracy = double(correct) / double(truth.size());
  return r;
}

/// Row-wise argmax; the first maximum wins.
inline std::vector<int> argmax_rows(const num::Tensor& logits) {
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = logits.data() + r * cols;
    out[r] = static_cast<int>(std::max_element(row, row + cols) - row);
  }
  return out;
}

inline constexpr std::size_t kEvalBatch = 64;

/// Predicted labels for every point of every group, in dataset order.
inline std::vector<int> predict(Model& model, std::span<const ObservationTensor> groups) {
  std::vector<int> out;
  for (std::size_t start = 0; start < groups.size(); start += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, groups.size() - start);
    Batch batch = make_batch(groups.subspan(start, count));
    num::Tape tape;
    auto pred = argmax_rows(model.forward(tape, batch).value());
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

inline std::vector<int> ground_truth(std::span<const ObservationTensor> groups) {
  std::vector<int> out;
  for (const auto& g : groups) out.insert(out.end(), g.labels.begin(), g.labels.end());
  return out;
}

inline MetricsReport evaluate(Model& model, std::span<const ObservationTensor> groups) {
  if (groups.empty()) throw EmptyDataset("cannot evaluate on an empty dataset");
  for (const auto& g : groups) check_against(g, model.config);
  return metrics_from_predictions(ground_truth(groups), predict(model, groups), model.config.class_count);
}

/// Deterministic image-aggregation baseline evaluated the same way.
inline MetricsReport evaluate_vote(std::span<const ObservationTensor> groups, std::size_t patch_size,
                                   std::size_t bof, std::size_t class_count) {
  if (groups.empty()) throw EmptyDataset("cannot evaluate on an empty dataset");
  std::vector<int> predicted;
  for (const auto& g : groups) {
    auto p = majority_vote(VoteInput::from(g), patch_size, bof, class_count);
    predicted.insert(predicted.end(), p.begin(), p.end());
  }
  return metrics_from_predictions(ground_truth(groups), predicted, class_count);
}

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double miou = 0.0;
  double avg_accuracy = 0.0;
};

inline void write_history_csv(std::ostream& os, std::span<const EpochRecord> history) {
  os << "epoch,lr,loss,miou,avg_accuracy\n";
  os.precision(10);
  for (const auto& h : history)
    os << h.epoch << ',' << h.lr << ',' << h.loss << ',' << h.miou << ',' << h.avg_accuracy << '\n';
}

/// SGD over shuffled batches of groups. Loss is the mean cross-entropy over
/// the points of a batch; the per-epoch metrics come from the predictions
/// made during that epoch's forward passes.
inline std::vector<EpochRecord> train(Model& model, std::span<const ObservationTensor> groups,
                                      const TrainConfig& cfg,
                                      const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (groups.empty()) throw EmptyDataset("cannot train on an empty dataset");
  for (const auto& g : groups) check_against(g, model.config);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  model.params.ensure_grads();
  model.params.zero_grads();

  std::vector<EpochRecord> history;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = lr_schedule(epoch, cfg);
    double loss_sum = 0.0;
    std::vector<int> truth, predicted;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<const ObservationTensor*> members;
      for (std::size_t i = 0; i < count; ++i) members.push_back(&groups[order[start + i]]);
      Batch batch = make_batch(std::span<const ObservationTensor* const>(members));

      num::Tape tape;
      num::Var logits = model.forward(tape, batch);
      num::Var loss = cross_entropy_loss(logits, batch.labels);
      tape.backward(loss);
      sgd_step(model.params, lr);

      loss_sum += loss.value().item() * double(batch.labels.size());
      auto pred = argmax_rows(logits.value());
      predicted.insert(predicted.end(), pred.begin(), pred.end());
      truth.insert(truth.end(), batch.labels.begin(), batch.labels.end());
    }
    const MetricsReport m = metrics_from_predictions(truth, predicted, model.config.class_count);
    EpochRecord rec{epoch + 1, lr, loss_sum / double(truth.size()), m.miou, m.avg_accuracy};
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

}  // namespace hifanet
