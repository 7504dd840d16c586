#pragma once

#include <cstdint>
#include <string>

#include "qtag/dataset.hpp"
#include "qtag/embedding.hpp"
#include "qtag/kernel_matrix.hpp"

namespace qtag {

// FNV-1a over the raw feature/label bytes.
std::uint64_t dataset_digest(const Dataset& d);

// Cache content key: hash of (embedding spec, dataset digest).
std::string gram_cache_filename(const EmbeddingSpec& spec, const Dataset& d);

// Computes the symmetric Gram, loading/storing a cache file under cache_dir
// when it is non-empty.
KernelMatrix gram_cached(const Dataset& d, const EmbeddingSpec& spec, int threads,
                         const std::string& cache_dir);

}  // namespace qtag
