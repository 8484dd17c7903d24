#ifndef HISTRED_TRAIN_METRICS_HPP
#define HISTRED_TRAIN_METRICS_HPP

#include <array>
#include <compare>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "histred/taxonomy.hpp"

namespace histred::train {

/// A relational fact keyed at entity granularity.
struct Triple {
  std::string doc_id;
  std::string subject_id;
  std::string object_id;
  int label = 0;

  auto operator<=>(const Triple&) const = default;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double micro_f1 = 0.0;
  Confusion total;
  std::array<Confusion, kNumGoldRelations> per_relation{};
};

inline EvalResult from_counts(const Confusion& c) {
  EvalResult r;
  r.total = c;
  r.precision = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn ? double(c.tp) / double(c.tp + c.fn) : 0.0;
  r.micro_f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

/// Micro-averaged scores of predicted against gold triples. no_relation triples are ignored on both sides.
inline EvalResult score_triples(const std::set<Triple>& predicted, const std::set<Triple>& gold) {
  std::array<Confusion, kNumGoldRelations> per{};
  auto bucket = [&per](int label) -> Confusion* {
    return label >= 0 && label < static_cast<int>(kNumGoldRelations) ? &per[static_cast<std::size_t>(label)] : nullptr;
  };
  for (const auto& p : predicted)
    if (auto* c = bucket(p.label)) ++(gold.contains(p) ? c->tp : c->fp);
  for (const auto& g : gold)
    if (auto* c = bucket(g.label); c && !predicted.contains(g)) ++c->fn;
  Confusion total;
  for (const auto& c : per) total += c;
  auto r = from_counts(total);
  r.per_relation = per;
  return r;
}

inline nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumGoldRelations; ++i) {
    const auto& c = r.per_relation[i];
    if (c.tp + c.fp + c.fn == 0) continue;
    per[std::string(kRelationTypeNames[i])] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
  }
  return {{"precision", r.precision}, {"recall", r.recall}, {"micro_f1", r.micro_f1},
          {"tp", r.total.tp},         {"fp", r.total.fp},    {"fn", r.total.fn},
          {"per_relation", per}};
}

}  // namespace histred::train

#endif  // HISTRED_TRAIN_METRICS_HPP
