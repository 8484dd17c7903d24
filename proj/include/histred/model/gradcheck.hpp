#ifndef HISTRED_MODEL_GRADCHECK_HPP
#define HISTRED_MODEL_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "histred/model/params.hpp"

namespace histred::model {

/// Builds a scalar (1 x 1) objective from parameters bound on the given binder.
using Objective = std::function<Var(Binder&)>;

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor)
  double analytic_norm = 0.0;
  std::size_t checked = 0;
};

inline double evaluate_objective(const ParamStore& store, const Objective& f) {
  Tape t;
  Binder p(t, store, false);
  return t.value(f(p))(0, 0);
}

/// Compares reverse-mode gradients with central differences for every parameter in `names`
/// (all parameters when empty). At most `max_entries` randomly chosen coordinates are probed per
/// parameter (0 = all).
inline std::vector<GradCheckEntry> check_gradients(ParamStore store, const Objective& f,
                                                   std::vector<std::string> names = {}, double step = 1e-5,
                                                   std::size_t max_entries = 0, std::uint64_t seed = 0) {
  Tape t;
  Binder p(t, store);
  const Var out = f(p);
  t.backward(out);
  const auto analytic = p.gradients();
  if (names.empty())
    for (const auto& [n, _] : store) names.push_back(n);

  std::mt19937_64 rng(seed);
  std::vector<GradCheckEntry> report;
  for (const auto& name : names) {
    auto& m = store.at(name);
    const Matrix ga = analytic.contains(name) ? analytic.at(name) : Matrix::Zero(m.rows(), m.cols());
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(m.size()));
    std::iota(coords.begin(), coords.end(), 0);
    if (max_entries && coords.size() > max_entries) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_entries);
    }
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (auto c : coords) {
      const Eigen::Index i = c % m.rows(), j = c / m.rows();
      const double orig = m(i, j);
      m(i, j) = orig + step;
      const double fp = evaluate_objective(store, f);
      m(i, j) = orig - step;
      const double fm = evaluate_objective(store, f);
      m(i, j) = orig;
      const double num = (fp - fm) / (2.0 * step);
      diff2 += (ga(i, j) - num) * (ga(i, j) - num);
      a2 += ga(i, j) * ga(i, j);
      n2 += num * num;
    }
    const double denom = std::max(std::sqrt(a2) + std::sqrt(n2), 1e-10);
    report.push_back({name, std::sqrt(diff2) / denom, std::sqrt(a2), coords.size()});
  }
  return report;
}

inline double max_relative_error(const std::vector<GradCheckEntry>& r) {
  double m = 0.0;
  for (const auto& e : r) m = std::max(m, e.relative_error);
  return m;
}

}  // namespace histred::model

#endif  // HISTRED_MODEL_GRADCHECK_HPP
