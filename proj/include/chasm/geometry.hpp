#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chasm/error.hpp"

namespace chasm {

// Clamp applied to dot products before arccos. Keeps the arccos derivative
// finite at +-1 while perturbing the flip probability by < 2e-4.
inline constexpr double kDotClampEps = 1e-7;

// ln(1e-300): floor for log CDF values once the true CDF underflows to 0.
inline constexpr double kLogCdfFloor = -690.77552789821368;

// L2-normalized embedding. values has norm 1 (within 1e-12 of rounding).
struct UnitVector {
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
};

// n-bit code packed little-endian into 64-bit words: bit k of the code is
// bit (k % 64) of word k/64. Unused high bits of the last word stay zero.
class BinaryHash {
public:
    BinaryHash() = default;
    explicit BinaryHash(int n_bits);
    BinaryHash(int n_bits, std::vector<std::uint64_t> words);

    int size_bits() const { return n_bits_; }
    std::size_t word_count() const { return words_.size(); }
    std::span<const std::uint64_t> words() const { return words_; }

    bool bit(int k) const {
        return (words_[static_cast<std::size_t>(k) >> 6] >> (k & 63)) & 1u;
    }
    void set_bit(int k, bool value) {
        const std::uint64_t mask = std::uint64_t{1} << (k & 63);
        if (value)
            words_[static_cast<std::size_t>(k) >> 6] |= mask;
        else
            words_[static_cast<std::size_t>(k) >> 6] &= ~mask;
    }

    bool operator==(const BinaryHash&) const = default;

private:
    int n_bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// Histogram of Hamming distances observed over a number of trials.
// counts[d] is how often distance d occurred; sum(counts) == trials.
struct HammingHistogram {
    std::vector<std::uint64_t> counts;
    std::uint64_t trials = 0;
};

// x / ||x||_2. Throws DegenerateInputError for the zero vector.
UnitVector l2_normalize(std::span<const double> x);

// Probability that a given sign bit differs between two unit vectors:
// arccos(y1 . y2) / pi, with the dot product clamped to [-1+eps, 1-eps].
double bit_flip_probability(const UnitVector& y1, const UnitVector& y2,
                            double clamp_eps = kDotClampEps);

// Sign binarization: bit k = 1 iff x[k] > 0 (zero maps to 0).
BinaryHash binarize(std::span<const double> x);

// Number of differing bit positions. Throws on length mismatch.
int hamming_distance(const BinaryHash& h1, const BinaryHash& h2);

// Binomial CDF family. All three compute in log space so that tails down to
// the 1e-300 floor keep full relative precision; see BinomTable for the
// summation strategy. The free functions rebuild the n-row per call -- use a
// BinomTable directly when evaluating many p values at fixed n.
double binom_cdf(int r, int n, double p);
double log_binom_cdf(int r, int n, double p);
double binom_pmf(int k, int n, double p);

// Caches log C(n, k) for one n and evaluates the binomial CDF, its log and
// the derivative with respect to p.
//
// log_cdf sums pmf terms in log space with a running log-sum-exp anchored at
// the largest term. When the lower tail dominates it is returned directly;
// when the upper tail dominates, log1p(-upper) recovers ln F near 0 without
// cancellation. Values below the 1e-300 floor are clamped to kLogCdfFloor,
// where the function is treated as locally constant (zero derivative).
class BinomTable {
public:
    explicit BinomTable(int n);

    int n() const { return n_; }

    double log_cdf(int r, double p) const;
    double cdf(int r, double p) const { return unchecked_exp_cdf(r, p); }

    // dF/dp = -n * C(n-1, r) * p^r * (1-p)^(n-1-r); 0 for r == n.
    double cdf_dp(int r, double p) const;

    // d/dp ln F(r; n, p), i.e. cdf_dp / cdf evaluated without underflow.
    // Returns 0 where log_cdf sits on the floor.
    double log_cdf_dp(int r, double p) const;

    double log_pmf(int k, double p) const;

private:
    double unchecked_exp_cdf(int r, double p) const;
    double tail_log_sum(int k_begin, int k_end, double log_p, double log_q) const;

    int n_;
    std::vector<double> log_choose_;  // log C(n, k), k = 0..n
};

// Two uniformly random unit vectors in R^n separated by exactly the angle
// theta: y1 uniform on the sphere, y2 = cos(theta) y1 + sin(theta) u with
// u uniform on the subsphere orthogonal to y1.
std::pair<UnitVector, UnitVector> sample_hypersphere_pair(int n, double theta,
                                                          std::mt19937_64& rng);

// Histogram of hamming_distance(binarize(y1), binarize(y2)) over sampled
// pairs at angle theta. Trials are processed in fixed chunks of 8192; chunk
// c uses a fresh mt19937_64 seeded by the c-th draw from rng, so the result
// depends only on the seed, never on the thread count.
HammingHistogram mc_hamming_distribution(int n, double theta, std::uint64_t trials,
                                         std::mt19937_64& rng, int threads = 1);

// CLI text form of a hash: "<bits>:<hex of the packed words as a little-
// endian byte stream>", e.g. bit 0 set in a 64-bit hash is "64:01000000…".
std::string format_hash_hex(const BinaryHash& h);
BinaryHash parse_hash_hex(std::string_view text);

}  // namespace chasm
