// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "hybridprune/error.hpp"
#include "hybridprune/random.hpp"

namespace hybridprune {

std::string_view to_string(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::TokenMajority: return "token-majority";
    case GeneratorKind::PatternPresence: return "pattern-presence";
    case GeneratorKind::PositionParity: return "position-sensitive-parity";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(std::string_view text) {
  for (GeneratorKind k :
       {GeneratorKind::TokenMajority, GeneratorKind::PatternPresence, GeneratorKind::PositionParity}) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorKind::Parse, "unknown generator kind '" + std::string(text) + "'");
}

void SyntheticTaskSpec::validate() const {
  auto require = [this](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidConfig, "task '" + name + "': " + what);
  };
  require(seq_len >= 2, "seq_len must be at least 2");
  require(num_classes >= 2, "num_classes must be at least 2");
  require(train_size >= num_classes && test_size >= num_classes, "train and test splits need one example per class");
  switch (generator) {
    case GeneratorKind::TokenMajority:
      require(vocab_size >= 2 * num_classes, "token-majority needs vocab_size >= 2 * num_classes");
      require(seq_len >= num_classes, "token-majority needs seq_len >= num_classes");
      break;
    case GeneratorKind::PatternPresence:
      require(num_classes == 2, "pattern-presence is a binary task");
      require(vocab_size >= 4, "pattern-presence needs vocab_size >= 4");
      break;
    case GeneratorKind::PositionParity:
      require(num_classes == 2, "position-sensitive-parity is a binary task");
      require(vocab_size >= 4, "position-sensitive-parity needs vocab_size >= 4");
      break;
  }
}

namespace {

class SequenceSampler {
 public:
  SequenceSampler(const SyntheticTaskSpec& spec, std::mt19937_64& rng)
      : spec_(spec), rng_(rng), token_(0, static_cast<int>(spec.vocab_size) - 1) {
    // Pattern tokens differ per task seed.
    std::vector<int> ids(spec.vocab_size);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng_);
    first_ = ids[0];
    second_ = ids[1];
  }

  std::vector<int> draw(int label) {
    std::vector<int> seq(spec_.seq_len);
    for (;;) {
      for (int& t : seq) t = token_(rng_);
      if (label_of(seq, label) == label) return seq;
    }
  }

 private:
  bool has_bigram(const std::vector<int>& seq) const {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      if (seq[i] == first_ && seq[i + 1] == second_) return true;
    }
    return false;
  }

  // Label of seq; may plant or destroy a pattern to steer toward `target`.
  int label_of(std::vector<int>& seq, int target) {
    const auto classes = static_cast<int>(spec_.num_classes);
    switch (spec_.generator) {
      case GeneratorKind::TokenMajority: {
        std::vector<int> counts(spec_.num_classes, 0);
        for (int t : seq) ++counts[static_cast<std::size_t>(t % classes)];
        const int best = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        if (std::count(counts.begin(), counts.end(), counts[static_cast<std::size_t>(best)]) > 1) return -1;
        return best;
      }
      case GeneratorKind::PatternPresence: {
        if (target == 1 && !has_bigram(seq)) {
          std::uniform_int_distribution<std::size_t> pos(0, seq.size() - 2);
          const std::size_t p = pos(rng_);
          seq[p] = first_;
          seq[p + 1] = second_;
        } else if (target == 0 && std::bernoulli_distribution(0.5)(rng_)) {
          // Negatives often carry the first token alone so presence of a
          // single token is not enough.
          std::uniform_int_distribution<std::size_t> pos(0, seq.size() - 1);
          seq[pos(rng_)] = first_;
        }
        return has_bigram(seq) ? 1 : 0;
      }
      case GeneratorKind::PositionParity:
        return (seq.front() % 2) ^ (seq.back() % 2);
    }
    return -1;
  }

  const SyntheticTaskSpec& spec_;
  std::mt19937_64& rng_;
  std::uniform_int_distribution<int> token_;
  int first_ = 0;
  int second_ = 1;
};

}  // namespace

TaskSplits generate_task(const SyntheticTaskSpec& spec) {
  spec.validate();
  auto rng = make_rng(spec.seed, Stream::Task);
  SequenceSampler sampler(spec, rng);
  std::set<std::vector<int>> seen;

  auto make_split = [&](const std::string& split, std::size_t n) {
    Dataset d{split, spec.seq_len, spec.vocab_size, spec.num_classes, {}, {}};
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % spec.num_classes);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (int y : labels) {
      std::vector<int> seq;
      do {
        seq = sampler.draw(y);
      } while (!seen.insert(seq).second);
      d.push_back(seq, y);
    }
    return d;
  };

  TaskSplits out;
  out.train = make_split("train", spec.train_size);
  out.val = make_split("val", spec.val_size);
  out.test = make_split("test", spec.test_size);
  return out;
}

Dataset stratified_trim(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "stratified_trim: fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  auto rng = make_rng(seed, Stream::Trim, static_cast<std::uint32_t>(std::lround(fraction * 1e6)));
  std::vector<std::vector<std::size_t>> by_label(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_label.at(static_cast<std::size_t>(data.labels[i])).push_back(i);

  std::vector<std::size_t> picked;
  for (std::size_t c = 0; c < by_label.size(); ++c) {
    auto& idx = by_label[c];
    if (idx.empty()) continue;
    const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (take == 0) {
      fail(ErrorKind::InvalidArgument, "stratified_trim: fraction " + std::to_string(fraction) +
                                           " leaves class " + std::to_string(c) + " (" +
                                           std::to_string(idx.size()) + " examples) empty");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    picked.insert(picked.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::shuffle(picked.begin(), picked.end(), rng);
  Dataset out = subset(data, picked);
  out.split = data.split + "-trim";
  return out;
}

}  // namespace hybridprune
