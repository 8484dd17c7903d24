#ifndef HISTRED_TRAIN_TRAINER_HPP
#define HISTRED_TRAIN_TRAINER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <mutex>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "histred/corpus.hpp"
#include "histred/model/re_model.hpp"
#include "histred/train/metrics.hpp"
#include "histred/train/optimizer.hpp"

namespace histred::train {

/// Full-size values: lr 5e-5, batch 8, 200 epochs with Adam. Desk-scale runs raise lr.
struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 200;
  std::size_t max_steps = 0;  // 0 = no cap
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool eval_train = false;  // also score the training set after each epoch
  std::string device = "cpu";
  std::string precision = "f64";

  void validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"max_steps", c.max_steps},         {"beta1", c.beta1},           {"beta2", c.beta2},
          {"eps", c.eps},                     {"seed", c.seed},             {"eval_train", c.eval_train},
          {"device", c.device},               {"precision", c.precision}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.seed = j.value("seed", c.seed);
  c.eval_train = j.value("eval_train", c.eval_train);
  c.device = j.value("device", c.device);
  c.precision = j.value("precision", c.precision);
  return c;
}

class DivergedError : public std::runtime_error {
 public:
  explicit DivergedError(std::size_t step)
      : std::runtime_error("DivergedError: non-finite loss at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct MetricsRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::string split;
  std::optional<EvalResult> eval;
  std::optional<double> loss;
};

inline nlohmann::json to_json(const MetricsRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"step", r.step}, {"split", r.split}};
  j["P"] = r.eval ? nlohmann::json(r.eval->precision) : nlohmann::json();
  j["R"] = r.eval ? nlohmann::json(r.eval->recall) : nlohmann::json();
  j["F1"] = r.eval ? nlohmann::json(r.eval->micro_f1) : nlohmann::json();
  j["loss"] = r.loss ? nlohmann::json(*r.loss) : nlohmann::json();
  return j;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Prediction {
  std::string doc_id;
  std::string subject_id;
  std::string object_id;
  std::string subject_surface;
  std::string object_surface;
  int label = kNoRelation;
  double confidence = 0.0;
};

namespace trainer_detail {

/// Runs fn(i) for i in [0, n) on `workers` threads; each index is visited exactly once.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::string surface_of(const Document& doc, const std::string& id) {
  const Entity* e = doc.find_entity(id);
  return e && !e->mentions_kor.empty() ? e->mentions_kor.front().surface : id;
}

}  // namespace trainer_detail

/// Argmax predictions (no_relation rows dropped) for every document. Output is ordered by document.
inline std::vector<Prediction> predict(const model::ReModel& m, const std::vector<Document>& docs, std::size_t workers = 1) {
  std::vector<std::vector<Prediction>> per(docs.size());
  trainer_detail::parallel_for(docs.size(), workers, [&](std::size_t i) {
    const auto in = m.featurize(docs[i]);
    if (in.entities.size() < 2) return;
    const auto logits = m.predict_logits(in);
    for (Eigen::Index r = 0; r < logits.scores.rows(); ++r) {
      Eigen::Index best = 0;
      const Eigen::RowVectorXd row = logits.scores.row(r);
      row.maxCoeff(&best);
      if (best == kNoRelation) continue;
      const double z = (row.array() - row(best)).exp().sum();
      const auto& [s, o] = logits.pairs[static_cast<std::size_t>(r)];
      per[i].push_back({docs[i].doc_id, s, o, trainer_detail::surface_of(docs[i], s), trainer_detail::surface_of(docs[i], o),
                        static_cast<int>(best), 1.0 / z});
    }
  });
  std::vector<Prediction> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

/// Triples are keyed by dataset position, so duplicate doc_ids cannot collide.
inline std::set<Triple> gold_triples(const std::vector<Document>& docs) {
  std::set<Triple> g;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (const auto& r : docs[i].relations)
      g.insert({std::to_string(i), r.subject_id, r.object_id, static_cast<int>(r.label)});
  return g;
}

inline EvalResult evaluate(const model::ReModel& m, const std::vector<Document>& docs, std::size_t workers = 1) {
  std::vector<std::vector<Triple>> per(docs.size());
  trainer_detail::parallel_for(docs.size(), workers, [&](std::size_t i) {
    const auto in = m.featurize(docs[i]);
    if (in.entities.size() < 2) return;
    const auto logits = m.predict_logits(in);
    for (Eigen::Index r = 0; r < logits.scores.rows(); ++r) {
      Eigen::Index best = 0;
      logits.scores.row(r).maxCoeff(&best);
      if (best == kNoRelation) continue;
      const auto& [s, o] = logits.pairs[static_cast<std::size_t>(r)];
      per[i].push_back({std::to_string(i), s, o, static_cast<int>(best)});
    }
  });
  std::set<Triple> pred;
  for (auto& v : per) pred.insert(v.begin(), v.end());
  return score_triples(pred, gold_triples(docs));
}

// ---------------------------------------------------------------------------
// Training

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_record;
};

struct TrainResult {
  model::ReModel best;       // parameters at the best validation F1 (earliest on ties)
  model::ParamStore final_params;
  std::vector<MetricsRecord> log;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double best_valid_f1 = -1.0;
  std::size_t skipped_instances = 0;  // fewer than two entities after truncation
  std::size_t truncated_entities = 0;
  std::size_t dropped_gold = 0;
};

/// Mean loss and gradients for one batch. Returns the batch's mean loss.
inline double batch_gradients(const model::ReModel& m, const std::vector<const model::ModelInput*>& batch,
                              model::ParamStore& grads) {
  grads.clear();
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto* in : batch) {
    ad::Tape t;
    model::Binder p(t, m.params());
    const auto fwd = m.forward(p, *in);
    const auto targets = model::pair_targets(in->pair_ids, in->gold);
    const ad::Var l = ad::cross_entropy(t, fwd.logits, targets);
    total += t.value(l)(0, 0);
    t.backward(l);
    for (auto& [name, g] : p.gradients()) {
      auto it = grads.find(name);
      if (it == grads.end())
        grads.emplace(name, g * inv);
      else
        it->second += g * inv;
    }
  }
  return total * inv;
}

/// Trains `initial` in place of a copy and returns the best-validation snapshot plus the metrics log.
inline TrainResult train(model::ReModel initial, const std::vector<Document>& train_set,
                         const std::vector<Document>& valid_set, const TrainConfig& tc, const TrainHooks& hooks = {}) {
  tc.validate();
  if (train_set.empty() || valid_set.empty()) throw std::invalid_argument("train: empty train or valid set");
  model::ReModel current = std::move(initial);
  TrainResult result{current, {}, {}, 0, 0, -1.0, 0, 0, 0};

  std::vector<model::ModelInput> inputs;
  for (const auto& d : train_set) {
    auto in = current.featurize(d);
    result.truncated_entities += in.truncated_entities;
    result.dropped_gold += in.dropped_gold;
    if (in.entities.size() < 2) {
      ++result.skipped_instances;
      continue;
    }
    inputs.push_back(std::move(in));
  }
  if (inputs.empty()) throw std::invalid_argument("train: no trainable instances");

  Adam opt(tc.learning_rate, tc.beta1, tc.beta2, tc.eps);
  std::mt19937_64 rng(tc.seed);
  std::vector<std::size_t> order(inputs.size());
  model::ParamStore grads;
  auto emit = [&](MetricsRecord r) {
    if (hooks.on_record) hooks.on_record(r);
    result.log.push_back(std::move(r));
  };

  bool done = false;
  for (std::size_t epoch = 1; epoch <= tc.epochs && !done; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      std::vector<const model::ModelInput*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + tc.batch_size); ++k) batch.push_back(&inputs[order[k]]);
      const double l = batch_gradients(current, batch, grads);
      ++result.steps;
      if (!std::isfinite(l)) throw DivergedError(result.steps);
      opt.step(current.params(), grads);
      loss_sum += l;
      ++batches;
      if (tc.max_steps && result.steps >= tc.max_steps) {
        done = true;
        break;
      }
    }
    MetricsRecord tr{epoch, result.steps, "train", std::nullopt, loss_sum / static_cast<double>(batches)};
    if (tc.eval_train) tr.eval = evaluate(current, train_set);
    emit(std::move(tr));
    const auto ve = evaluate(current, valid_set);
    emit({epoch, result.steps, "valid", ve, std::nullopt});
    if (ve.micro_f1 > result.best_valid_f1) {
      result.best_valid_f1 = ve.micro_f1;
      result.best_epoch = epoch;
      result.best.params() = current.params();
    }
  }
  result.final_params = current.params();
  return result;
}

inline TrainResult train(const model::ModelConfig& mc, const std::vector<Document>& train_set,
                         const std::vector<Document>& valid_set, const TrainConfig& tc, const TrainHooks& hooks = {}) {
  return train(model::ReModel::for_corpus(mc, train_set), train_set, valid_set, tc, hooks);
}

}  // namespace histred::train

#endif  // HISTRED_TRAIN_TRAINER_HPP
