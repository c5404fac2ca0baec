#include "embrec/train/optimizer.hpp"

#include "embrec/errors.hpp"

namespace embrec::train {

double NesterovOptimizer::learning_rate() const {
  return config_.lr0 / (1.0 + config_.decay * static_cast<double>(t_));
}

nd::ParameterSet NesterovOptimizer::lookahead(const nd::ParameterSet& params) const {
  nd::ParameterSet out = params;
  const auto mu = static_cast<float>(config_.momentum);
  for (auto& [name, value] : out) {
    const auto it = velocity_.find(name);
    if (it == velocity_.end()) continue;
    auto w = value.values();
    const auto v = it->second.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += mu * v[i];
  }
  return out;
}

void NesterovOptimizer::step(nd::ParameterSet& params, const nd::GradMap& grads) {
  for (const auto& [name, g] : grads) {
    const auto it = params.find(name);
    if (it == params.end()) throw ContractError("optimizer: gradient for unknown parameter " + name);
    if (it->second.shape() != g.shape()) {
      throw ContractError("optimizer: gradient shape " + nd::to_string(g.shape()) + " for " + name +
                          " does not match " + nd::to_string(it->second.shape()));
    }
  }
  const auto lr = static_cast<float>(learning_rate());
  const auto mu = static_cast<float>(config_.momentum);
  for (const auto& [name, g] : grads) {
    nd::Tensor& w = params.at(name);
    auto vit = velocity_.try_emplace(name, w.shape(), 0.0f).first;
    auto v = vit->second.values();
    auto wv = w.values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < wv.size(); ++i) {
      v[i] = mu * v[i] - lr * gv[i];
      wv[i] += v[i];
    }
  }
  ++t_;
}

}  // namespace embrec::train
