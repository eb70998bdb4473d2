#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gist {

// Error taxonomy. The C API maps each type onto a status code; inside the
// core everything is exceptions.
struct GistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : GistError {
    using GistError::GistError;
};
struct ParseError : GistError {
    int line;
    ParseError(int line_, const std::string& msg)
        : GistError("parse error at line " + std::to_string(line_) + ": " + msg), line(line_) {}
};
struct InvariantError : GistError {
    using GistError::GistError;
};
struct ConfigError : GistError {
    using GistError::GistError;
};
struct ContractViolation : GistError {
    using GistError::GistError;
};
struct DivergenceError : GistError {
    int epoch;
    DivergenceError(int epoch_, const std::string& msg)
        : GistError("non-finite loss at epoch " + std::to_string(epoch_) + ": " + msg), epoch(epoch_) {}
};

// Shortest round-trip decimal formatting. All exported numbers go through
// this so reruns produce byte-identical files.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_double_fixed(double v, int prec) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, prec);
    return std::string(buf, res.ptr);
}

// FNV-1a 64-bit content digest, used for manifest checksums and input
// digests in error reports. Not cryptographic.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}
inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }
std::string hex64(uint64_t v);
uint64_t digest_file(const std::string& path);

// SplitMix64, used to derive independent sub-stream seeds from a master
// seed (per dyad, per stream) so parallel generation stays deterministic.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
inline uint64_t mix_seed(uint64_t master, uint64_t a, uint64_t b = 0) {
    uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (a + 1)) ^ (0xc2b2ae3d27d4eb4full * (b + 1));
    return splitmix64(s);
}

// Deterministic RNG: xoshiro-free, stdlib-distribution-free so the exact
// stream does not depend on the standard library implementation.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bull) {
        // warm up so nearby seeds decorrelate
        for (int i = 0; i < 4; ++i) next();
    }
    uint64_t next() { return splitmix64(state_); }
    // uniform in [0,1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Box-Muller; spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }
    double exponential(double rate) {
        double u = uniform();
        while (u <= 1e-300) u = uniform();
        return -std::log(u) / rate;
    }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(next() % uint64_t(hi - lo + 1));
    }

  private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Minimal JSON string escaping for hand-built writers (session lines, CSV-
// adjacent JSON blobs). UTF-8 payload bytes pass through untouched.
std::string json_escape(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace gist
