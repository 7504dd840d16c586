#pragma once

#include <variant>

#include "qtag/cv_kernel.hpp"
#include "qtag/dataset.hpp"
#include "qtag/kernel_matrix.hpp"
#include "qtag/qubit_kernel.hpp"

namespace qtag {

using EmbeddingSpec = std::variant<QubitEmbeddingSpec, CvEmbeddingSpec>;

inline bool is_qubit(const EmbeddingSpec& s) {
  return std::holds_alternative<QubitEmbeddingSpec>(s);
}

inline KernelMatrix gram(const Dataset& X, const EmbeddingSpec& spec, int threads = 0) {
  return std::visit(
      [&](const auto& s) -> KernelMatrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, QubitEmbeddingSpec>) {
          return qubit_gram(X, s, threads);
        } else {
          return cv_gram(X, s, threads);
        }
      },
      spec);
}

inline KernelMatrix cross_gram(const Dataset& X, const Dataset& Y,
                               const EmbeddingSpec& spec, int threads = 0) {
  return std::visit(
      [&](const auto& s) -> KernelMatrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, QubitEmbeddingSpec>) {
          return qubit_cross_gram(X, Y, s, threads);
        } else {
          return cv_cross_gram(X, Y, s, threads);
        }
      },
      spec);
}

}  // namespace qtag
