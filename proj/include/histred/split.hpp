#ifndef HISTRED_SPLIT_HPP
#define HISTRED_SPLIT_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "histred/corpus.hpp"

namespace histred {

enum class Split { Train, Valid, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

struct SplitResult {
  std::vector<Document> train;
  std::vector<Document> valid;
  std::vector<Document> test;
  // assignment[i] is the split of input document i
  std::vector<Split> assignment;
  std::uint64_t seed = 0;
  std::size_t bucket_size = 4;
};

/// Per-bucket quotas for a 2:1:1 ratio; leftovers go train, then valid, then test.
inline std::array<std::size_t, 3> bucket_quotas(std::size_t b) {
  std::array<std::size_t, 3> q = {b / 2, b / 4, b / 4};
  std::size_t rem = b - q[0] - q[1] - q[2];
  for (std::size_t i = 0; rem > 0; i = (i + 1) % 3, --rem) ++q[i];
  return q;
}

/// Sorts by Korean length, cuts consecutive buckets, and shuffles 2:1:1 inside each bucket.
inline SplitResult split_train_valid_test(const std::vector<Document>& docs, std::uint64_t seed,
                                          std::size_t bucket_size = 4) {
  if (docs.empty()) throw EmptyCorpus();
  if (bucket_size < 4) throw std::invalid_argument("bucket_size must be >= 4");

  std::vector<std::size_t> lengths(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) lengths[i] = korean_char_count(docs[i]);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lengths[a] != lengths[b]) return lengths[a] < lengths[b];
    return docs[a].doc_id < docs[b].doc_id;
  });

  SplitResult out;
  out.seed = seed;
  out.bucket_size = bucket_size;
  out.assignment.assign(docs.size(), Split::Train);
  std::mt19937_64 rng(seed);
  for (std::size_t start = 0; start < order.size(); start += bucket_size) {
    const std::size_t end = std::min(order.size(), start + bucket_size);
    const auto q = bucket_quotas(end - start);
    std::vector<Split> labels;
    labels.insert(labels.end(), q[0], Split::Train);
    labels.insert(labels.end(), q[1], Split::Valid);
    labels.insert(labels.end(), q[2], Split::Test);
    // Fisher-Yates with explicit draws so the result does not depend on std::shuffle's implementation.
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng() % i]);
    for (std::size_t k = start; k < end; ++k) out.assignment[order[k]] = labels[k - start];
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    switch (out.assignment[i]) {
      case Split::Train: out.train.push_back(docs[i]); break;
      case Split::Valid: out.valid.push_back(docs[i]); break;
      case Split::Test: out.test.push_back(docs[i]); break;
    }
  }
  return out;
}

/// Plain-text manifest: two header lines, then "doc_id<TAB>split" in input order.
inline void write_split_manifest(std::ostream& out, const std::vector<Document>& docs, const SplitResult& split,
                                 std::string_view tool_version) {
  out << "# histred split manifest (" << tool_version << ")\n";
  out << "# seed=" << split.seed << " bucket_size=" << split.bucket_size << " train=" << split.train.size()
      << " valid=" << split.valid.size() << " test=" << split.test.size() << '\n';
  for (std::size_t i = 0; i < docs.size(); ++i) out << docs[i].doc_id << '\t' << to_string(split.assignment[i]) << '\n';
}

}  // namespace histred

#endif  // HISTRED_SPLIT_HPP
