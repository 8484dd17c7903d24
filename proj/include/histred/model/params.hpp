#ifndef HISTRED_MODEL_PARAMS_HPP
#define HISTRED_MODEL_PARAMS_HPP

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "histred/model/autodiff.hpp"

namespace histred::model {

using ad::Matrix;
using ad::Tape;
using ad::Var;

/// Named parameter matrices. Ordered by name, which fixes checkpoint layout and optimizer order.
using ParamStore = std::map<std::string, Matrix>;

/// Binds store entries to leaves of one tape, creating each leaf on first use.
class Binder {
 public:
  Binder(Tape& tape, const ParamStore& store, bool requires_grad = true)
      : tape_(tape), store_(store), requires_grad_(requires_grad) {}

  Var operator()(const std::string& name) {
    if (auto it = bound_.find(name); it != bound_.end()) return it->second;
    auto it = store_.find(name);
    if (it == store_.end()) throw std::out_of_range("unknown parameter: " + name);
    const Var v = tape_.leaf(it->second, requires_grad_);
    bound_.emplace(name, v);
    return v;
  }

  Tape& tape() { return tape_; }

  /// Gradients of every bound parameter after tape().backward().
  ParamStore gradients() const {
    ParamStore g;
    for (const auto& [name, v] : bound_) g.emplace(name, tape_.grad(v));
    return g;
  }

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool requires_grad_;
  std::map<std::string, Var> bound_;
};

inline Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

inline constexpr double kInitStddev = 0.02;

inline bool all_finite(const ParamStore& store) {
  for (const auto& [_, m] : store)
    if (!m.allFinite()) return false;
  return true;
}

inline std::size_t parameter_count(const ParamStore& store) {
  std::size_t n = 0;
  for (const auto& [_, m] : store) n += static_cast<std::size_t>(m.size());
  return n;
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_PARAMS_HPP
