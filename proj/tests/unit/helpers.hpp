#pragma once

#include <doctest.h>

#include <string>
#include <vector>

#include "polyrl/types.hpp"

#define CHECK_CODE(expr, expected)                                   \
  do {                                                               \
    bool thrown_ = false;                                            \
    try {                                                            \
      (void)(expr);                                                  \
    } catch (const polyrl::Error& e_) {                              \
      thrown_ = true;                                                \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());             \
    }                                                                \
    CHECK_MESSAGE(thrown_, "expected an error from " #expr);         \
  } while (0)

namespace testutil {

inline polyrl::GenerationBatch batch(const std::vector<double>& rewards,
                                     const std::vector<int>& clusters = {}) {
  polyrl::GenerationBatch b;
  b.prompt = {"p", "test"};
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    b.generations.push_back({"g" + std::to_string(i), std::to_string(i), i});
    b.rewards.emplace_back(rewards[i]);
  }
  if (!clusters.empty()) b.clusters = polyrl::make_clusters(clusters);
  return b;
}

}  // namespace testutil
