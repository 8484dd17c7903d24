#ifndef HISTRED_TRAIN_OPTIMIZER_HPP
#define HISTRED_TRAIN_OPTIMIZER_HPP

#include <cmath>
#include <map>
#include <string>

#include "histred/model/params.hpp"

namespace histred::train {

/// Adam with bias correction; no weight decay, no schedule.
class Adam {
 public:
  Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every parameter that has an entry in `grads`.
  void step(model::ParamStore& params, const model::ParamStore& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& [name, g] : grads) {
      auto& p = params.at(name);
      auto& m = m_[name];
      auto& v = v_[name];
      if (m.size() == 0) {
        m = model::Matrix::Zero(p.rows(), p.cols());
        v = model::Matrix::Zero(p.rows(), p.cols());
      }
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v.array() + (1.0 - beta2_) * g.array().square();
      p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, model::Matrix> m_, v_;
};

}  // namespace histred::train

#endif  // HISTRED_TRAIN_OPTIMIZER_HPP
