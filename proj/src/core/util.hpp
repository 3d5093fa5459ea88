#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relrefine {

enum class errc {
  io,
  parse,
  validation,
  config,
  usage,
  internal,
};

class error : public std::runtime_error {
 public:
  error(errc kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  errc kind() const { return kind_; }

 private:
  errc kind_;
};

[[noreturn]] void fail(errc kind, const std::string& message);

// ---- UTF-8 ----------------------------------------------------------------

// Lenient decoder: malformed sequences come back as U+FFFD, one replacement
// per offending byte, so downstream token counts stay stable.
std::vector<char32_t> utf8_decode(std::string_view text);
void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(const std::vector<char32_t>& cps);

// Simple 1:1 fold covering ASCII, Latin-1, Latin Extended-A/Additional,
// Greek and Cyrillic base blocks. No full case mapping (ß stays ß).
char32_t fold_char(char32_t cp);
std::string fold_text(std::string_view text);

bool is_space_char(char32_t cp);
bool is_punct_char(char32_t cp);

// ---- small string helpers --------------------------------------------------

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

// ---- hashing ---------------------------------------------------------------

class sha256 {
 public:
  sha256();
  void update(const void* data, size_t len);
  // Hex digest; the hasher must not be reused afterwards.
  std::string finish();

 private:
  void process_block(const uint8_t* block);
  uint32_t state_[8];
  uint64_t total_len_;
  uint8_t buffer_[64];
  size_t buffer_len_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

// Stable 64-bit string hash (FNV-1a), used to derive per-language seeds.
uint64_t stable_hash64(std::string_view s);

// ---- deterministic randomness ----------------------------------------------

using rng_engine = std::mt19937_64;

// Unbiased-enough bounded draw; plain modulo keeps the stream layout obvious
// and reproducible across platforms.
uint64_t rng_below(rng_engine& rng, uint64_t n);
double rng_unit(rng_engine& rng);
double rng_range(rng_engine& rng, double lo, double hi);

template <typename T>
void rng_shuffle(std::vector<T>& items, rng_engine& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// ---- misc ------------------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Runs fn(i) for i in [0, n). jobs <= 1 runs inline; results must not depend
// on scheduling, callers only ever write to disjoint slots.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

std::string format_utc_timestamp(int64_t unix_seconds);

}  // namespace relrefine
