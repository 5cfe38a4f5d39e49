#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cxrs/augment.hpp"
#include "cxrs/autograd.hpp"
#include "cxrs/dataset.hpp"
#include "cxrs/error.hpp"
#include "cxrs/nn.hpp"
#include "cxrs/optim.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/scoring.hpp"
#include "cxrs/tensor.hpp"

namespace cxrs {

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  AdamConfig optimizer;
  AugmentConfig augment;
  bool augment_enabled = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    optimizer.lr > 0 ? void() : throw ValidationError("learning rate must be > 0");
    augment.validate();
  }
};

struct TrainStats {
  std::size_t steps = 0;
  double final_epoch_loss = 0.0;  // mean over the last epoch's batches
};

namespace detail {

inline Tensor batch_tensor(const std::vector<const Image*>& images) {
  const std::size_t h = static_cast<std::size_t>(images.front()->height);
  const std::size_t w = static_cast<std::size_t>(images.front()->width);
  Tensor t({images.size(), 1, h, w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i]->pixels.begin(), images[i]->pixels.end(),
              t.data.begin() + static_cast<std::ptrdiff_t>(i * h * w));
  }
  return t;
}

}  // namespace detail

// Stochastic-gradient training with online augmentation: every epoch shuffles
// the training set and re-draws each image's transforms from a stream keyed
// by (seed, epoch, position), so runs are reproducible on any thread count.
inline TrainStats train_model(SeverityNet& net, const std::vector<const CxrRecord*>& train,
                              TargetKind kind, const TrainingConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  for (const auto* rec : train) {
    if (rec->pixels.width != static_cast<int>(net.config().input_width) ||
        rec->pixels.height != static_cast<int>(net.config().input_height)) {
      throw ValidationError("training image '" + rec->image_id +
                            "' does not match the network input size");
    }
  }

  Adam opt(net.parameters(), cfg.optimizer);
  const std::uint64_t shuffle_stream = derive_seed(cfg.seed, 0x51a0f1eULL);
  const std::uint64_t augment_stream = derive_seed(cfg.augment.seed, cfg.seed);

  TrainStats stats;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(shuffle_stream, epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Image> augmented;
      std::vector<const Image*> views;
      Tensor target({end - start});
      for (std::size_t k = start; k < end; ++k) {
        const CxrRecord& rec = *train[order[k]];
        if (cfg.augment_enabled) {
          Rng aug_rng(derive_seed(augment_stream, epoch * train.size() + k));
          augmented.push_back(apply_augmentations(rec.pixels, cfg.augment, aug_rng));
        } else {
          augmented.push_back(rec.pixels);
        }
        target.data[k - start] = rec.label(kind);
      }
      for (const Image& img : augmented) views.push_back(&img);

      opt.zero_grad();
      auto loss = autograd::mse_loss(net.forward(detail::batch_tensor(views)), target);
      const double loss_value = loss->value.data[0];
      if (!std::isfinite(loss_value)) {
        throw TrainingError("training diverged: loss is non-finite at epoch " +
                            std::to_string(epoch + 1));
      }
      autograd::backward(loss);
      opt.step();
      ++stats.steps;
      epoch_loss += loss_value;
      ++batches;
    }
    if (batches > 0) stats.final_epoch_loss = epoch_loss / static_cast<double>(batches);
  }
  return stats;
}

// Forward-only scoring in bounded batches.
inline std::vector<double> predict_records(const SeverityNet& net,
                                           const std::vector<const CxrRecord*>& records,
                                           std::size_t batch_size = 8) {
  std::vector<double> out;
  out.reserve(records.size());
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t end = std::min(records.size(), start + batch_size);
    std::vector<const Image*> views;
    for (std::size_t k = start; k < end; ++k) views.push_back(&records[k]->pixels);
    const auto pred = net.forward(detail::batch_tensor(views));
    for (std::size_t i = 0; i < end - start; ++i) out.push_back(pred->value.data[i]);
  }
  return out;
}

}  // namespace cxrs
