#pragma once

#include <cstdint>

#include "embrec/nd/parameters.hpp"

namespace embrec::train {

struct OptimizerConfig {
  double lr0 = 0.1;
  double momentum = 0.9;
  double decay = 1e-6;
};

// SGD with Nesterov momentum. Gradients passed to step() must be taken at
// lookahead(params) = params + momentum * velocity.
class NesterovOptimizer {
 public:
  explicit NesterovOptimizer(OptimizerConfig config = {}) : config_(config) {}

  // lr0 / (1 + decay * t) for the next step.
  double learning_rate() const;
  std::uint64_t steps() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

  nd::ParameterSet lookahead(const nd::ParameterSet& params) const;

  // v <- momentum * v - lr_t * g; w <- w + v; t <- t + 1. Parameters without a
  // gradient entry are left untouched. Throws ContractError on shape mismatch
  // or a gradient for an unknown parameter.
  void step(nd::ParameterSet& params, const nd::GradMap& grads);

  const nd::ParameterSet& velocity() const { return velocity_; }

 private:
  OptimizerConfig config_;
  nd::ParameterSet velocity_;
  std::uint64_t t_ = 0;
};

}  // namespace embrec::train
