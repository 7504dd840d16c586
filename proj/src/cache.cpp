#include "qtag/cache.hpp"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "qtag/serialize.hpp"

namespace qtag {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t dataset_digest(const Dataset& d) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t f = d.feature_count;
  fnv_bytes(h, &f, sizeof(f));
  for (const auto& e : d.events) {
    fnv_bytes(h, &e.label, sizeof(e.label));
    fnv_bytes(h, e.features.data(), e.features.size() * sizeof(double));
  }
  return h;
}

std::string gram_cache_filename(const EmbeddingSpec& spec, const Dataset& d) {
  std::uint64_t h = kFnvOffset;
  const std::string key = spec_to_json(spec).dump();
  fnv_bytes(h, key.data(), key.size());
  const std::uint64_t digest = dataset_digest(d);
  fnv_bytes(h, &digest, sizeof(digest));
  char buf[48];
  std::snprintf(buf, sizeof(buf), "qgrm-%016llx.bin", static_cast<unsigned long long>(h));
  return buf;
}

KernelMatrix gram_cached(const Dataset& d, const EmbeddingSpec& spec, int threads,
                         const std::string& cache_dir) {
  if (cache_dir.empty()) return gram(d, spec, threads);

  fs::path path = fs::path(cache_dir) / gram_cache_filename(spec, d);
  if (fs::exists(path)) {
    KernelMatrix k = load_kernel(path.string());
    if (k.symmetric && k.rows() == d.size() && k.cols() == d.size()) return k;
    // stale or foreign file under our key; fall through and recompute
  }
  KernelMatrix k = gram(d, spec, threads);
  fs::create_directories(cache_dir);
  // Write via a unique temp name so concurrent runs never observe a partial
  // file; the final rename is atomic.
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  save_kernel(tmp.string(), k);
  fs::rename(tmp, path);
  return k;
}

}  // namespace qtag
