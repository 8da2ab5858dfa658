#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpseg {

// Error kinds map 1:1 to CLI exit codes: usage=1, data=2, numeric=3.
class Error : public std::runtime_error {
 public:
  enum class Kind { Usage = 1, Data = 2, Numeric = 3 };
  Error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error(Kind::Usage, m) {}
};
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(Kind::Data, m) {}
};
struct DimensionError : DataError {
  explicit DimensionError(const std::string& m) : DataError(m) {}
};
struct FormatError : DataError {
  explicit FormatError(const std::string& m) : DataError(m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(Kind::Numeric, m) {}
};

// Seeded RNG built on mt19937_64 with portable derived draws. The standard
// distributions are implementation-defined, so uniform/normal are derived
// from raw 64-bit draws to keep runs bit-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    // splitmix64; avoids mt19937_64's large state while staying portable.
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(next_u64() % uint64_t(hi - lo + 1));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Worker count for the embarrassingly parallel stages (flow precompute,
// evaluation). TPSEG_THREADS overrides; defaults to hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Partitions across thread_count() workers when
// more than one is available, otherwise runs inline. fn must not throw across
// workers; exceptions are rethrown on the caller thread after join.
void parallel_for(int n, const std::function<void(int)>& fn);

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("NaN detected in ") + what);
}

}  // namespace tpseg
