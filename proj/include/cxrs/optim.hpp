#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cxrs/autograd.hpp"
#include "cxrs/error.hpp"

namespace cxrs {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed set of named parameters. Steps are
// deterministic; a non-finite gradient aborts with the offending name.
class Adam {
 public:
  explicit Adam(std::vector<std::pair<std::string, autograd::Var>> params,
                AdamConfig config = {})
      : params_(std::move(params)), config_(config) {
    if (config_.lr <= 0.0 || config_.beta1 < 0.0 || config_.beta1 >= 1.0 ||
        config_.beta2 < 0.0 || config_.beta2 >= 1.0 || config_.epsilon <= 0.0) {
      throw ValidationError("optimizer hyperparameters out of range");
    }
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].second->value.numel(), 0.0);
      v_[i].assign(params_[i].second->value.numel(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& [name, var] : params_) var->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& [name, var] = params_[i];
      var->ensure_grad();
      auto& value = var->value.data;
      const auto& grad = var->grad;
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = grad[j];
        if (!std::isfinite(g)) {
          throw TrainingError("non-finite gradient in parameter '" + name +
                              "' at step " + std::to_string(t_));
        }
        m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g;
        v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m_[i][j] / bc1;
        const double v_hat = v_[i][j] / bc2;
        value[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<std::pair<std::string, autograd::Var>> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace cxrs
