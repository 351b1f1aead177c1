#include "chasm/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace chasm {

namespace {

std::size_t words_for_bits(int n_bits) {
    return (static_cast<std::size_t>(n_bits) + 63) / 64;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

BinaryHash::BinaryHash(int n_bits) : n_bits_(n_bits), words_(words_for_bits(n_bits), 0) {
    if (n_bits < 1) throw std::invalid_argument("BinaryHash: bit count must be >= 1");
}

BinaryHash::BinaryHash(int n_bits, std::vector<std::uint64_t> words)
    : n_bits_(n_bits), words_(std::move(words)) {
    if (n_bits < 1) throw std::invalid_argument("BinaryHash: bit count must be >= 1");
    if (words_.size() != words_for_bits(n_bits))
        throw std::invalid_argument("BinaryHash: word count does not match bit count");
    if (n_bits % 64 != 0) {
        const std::uint64_t unused = words_.back() >> (n_bits % 64);
        if (unused != 0)
            throw std::invalid_argument("BinaryHash: unused high bits must be zero");
    }
}

UnitVector l2_normalize(std::span<const double> x) {
    double norm_sq = 0.0;
    for (double v : x) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0 || !std::isfinite(norm))
        throw DegenerateInputError("l2_normalize: zero or non-finite input vector");
    UnitVector y;
    y.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y.values[i] = x[i] / norm;
    return y;
}

double bit_flip_probability(const UnitVector& y1, const UnitVector& y2, double clamp_eps) {
    if (y1.dim() != y2.dim())
        throw std::invalid_argument("bit_flip_probability: dimension mismatch");
    const double u = std::clamp(dot(y1.values, y2.values), -1.0 + clamp_eps, 1.0 - clamp_eps);
    return std::acos(u) / std::numbers::pi_v<double>;
}

BinaryHash binarize(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("binarize: empty input");
    BinaryHash h(static_cast<int>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] > 0.0) h.set_bit(static_cast<int>(k), true);
    return h;
}

int hamming_distance(const BinaryHash& h1, const BinaryHash& h2) {
    if (h1.size_bits() != h2.size_bits())
        throw std::invalid_argument("hamming_distance: length mismatch");
    int d = 0;
    const auto w1 = h1.words();
    const auto w2 = h2.words();
    for (std::size_t i = 0; i < w1.size(); ++i) d += std::popcount(w1[i] ^ w2[i]);
    return d;
}

// ---------------------------------------------------------------------------
// Binomial CDF

BinomTable::BinomTable(int n) : n_(n), log_choose_(static_cast<std::size_t>(n) + 1) {
    if (n < 1) throw std::invalid_argument("BinomTable: n must be >= 1");
    const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
    for (int k = 0; k <= n; ++k) {
        log_choose_[k] = lg_n1 - std::lgamma(static_cast<double>(k) + 1.0) -
                         std::lgamma(static_cast<double>(n - k) + 1.0);
    }
}

double BinomTable::log_pmf(int k, double p) const {
    if (k < 0 || k > n_) throw std::invalid_argument("log_pmf: k out of range");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("log_pmf: p outside [0, 1]");
    if (p == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p == 1.0) return k == n_ ? 0.0 : -std::numeric_limits<double>::infinity();
    return log_choose_[k] + k * std::log(p) + (n_ - k) * std::log1p(-p);
}

// Log-sum-exp of log pmf terms for k in [k_begin, k_end]. The pmf is
// unimodal, so the scan starts at the in-range maximum and walks outward,
// adding terms in decreasing order.
double BinomTable::tail_log_sum(int k_begin, int k_end, double log_p, double log_q) const {
    auto term = [&](int k) { return log_choose_[k] + k * log_p + (n_ - k) * log_q; };
    // Mode of the pmf is floor((n+1) p); clamp into the requested range.
    const double p = std::exp(log_p);
    int k_max = static_cast<int>(std::floor((n_ + 1) * p));
    k_max = std::clamp(k_max, k_begin, k_end);
    // The floor estimate can be off by one; take the larger neighbor.
    if (k_max + 1 <= k_end && term(k_max + 1) > term(k_max)) ++k_max;
    if (k_max - 1 >= k_begin && term(k_max - 1) > term(k_max)) --k_max;

    const double anchor = term(k_max);
    if (!std::isfinite(anchor)) return anchor;
    double sum = 1.0;
    for (int k = k_max - 1; k >= k_begin; --k) {
        const double t = std::exp(term(k) - anchor);
        sum += t;
        if (t < 1e-18 * sum) break;
    }
    for (int k = k_max + 1; k <= k_end; ++k) {
        const double t = std::exp(term(k) - anchor);
        sum += t;
        if (t < 1e-18 * sum) break;
    }
    return anchor + std::log(sum);
}

double BinomTable::log_cdf(int r, double p) const {
    if (r < 0 || r > n_) throw std::invalid_argument("log_binom_cdf: r outside [0, n]");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("log_binom_cdf: p outside [0, 1]");
    if (r == n_ || p == 0.0) return 0.0;
    if (p == 1.0) return kLogCdfFloor;

    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double lower = tail_log_sum(0, r, log_p, log_q);
    const double upper = tail_log_sum(r + 1, n_, log_p, log_q);
    if (lower <= upper) return std::max(lower, kLogCdfFloor);
    // F is close to 1; compute ln F = log1p(-(1-F)) from the complement.
    return std::max(std::log1p(-std::exp(upper)), kLogCdfFloor);
}

double BinomTable::unchecked_exp_cdf(int r, double p) const {
    return std::exp(log_cdf(r, p));
}

double BinomTable::cdf_dp(int r, double p) const {
    if (r < 0 || r > n_) throw std::invalid_argument("binom_cdf_dp: r outside [0, n]");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("binom_cdf_dp: p outside [0, 1]");
    if (r == n_) return 0.0;  // F == 1 identically
    // -n * C(n-1, r) * p^r * (1-p)^(n-1-r), evaluated in log space.
    if (p == 0.0) return r == 0 ? -static_cast<double>(n_) : 0.0;
    if (p == 1.0) return r == n_ - 1 ? -static_cast<double>(n_) : 0.0;
    const double log_choose_n1 = std::lgamma(static_cast<double>(n_)) -
                                 std::lgamma(static_cast<double>(r) + 1.0) -
                                 std::lgamma(static_cast<double>(n_ - r));
    const double log_abs = std::log(static_cast<double>(n_)) + log_choose_n1 +
                           r * std::log(p) + (n_ - 1 - r) * std::log1p(-p);
    return -std::exp(log_abs);
}

double BinomTable::log_cdf_dp(int r, double p) const {
    if (r == n_) return 0.0;
    const double lf = log_cdf(r, p);
    if (lf <= kLogCdfFloor) return 0.0;  // floored region is locally constant
    if (p == 0.0) return r == 0 ? -static_cast<double>(n_) : 0.0;
    if (p == 1.0) return cdf_dp(r, p);  // F in the floor only when r < n-1
    const double log_choose_n1 = std::lgamma(static_cast<double>(n_)) -
                                 std::lgamma(static_cast<double>(r) + 1.0) -
                                 std::lgamma(static_cast<double>(n_ - r));
    const double log_abs = std::log(static_cast<double>(n_)) + log_choose_n1 +
                           r * std::log(p) + (n_ - 1 - r) * std::log1p(-p);
    return -std::exp(log_abs - lf);
}

double binom_cdf(int r, int n, double p) { return BinomTable(n).cdf(r, p); }

double log_binom_cdf(int r, int n, double p) { return BinomTable(n).log_cdf(r, p); }

double binom_pmf(int k, int n, double p) {
    const double lp = BinomTable(n).log_pmf(k, p);
    return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

// ---------------------------------------------------------------------------
// Hypersphere sampling

std::pair<UnitVector, UnitVector> sample_hypersphere_pair(int n, double theta,
                                                          std::mt19937_64& rng) {
    if (n < 2) throw std::invalid_argument("sample_hypersphere_pair: n must be >= 2");
    if (theta < 0.0 || theta > std::numbers::pi_v<double>)
        throw std::invalid_argument("sample_hypersphere_pair: theta outside [0, pi]");
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> g(n);
    for (double& v : g) v = normal(rng);
    UnitVector y1 = l2_normalize(g);

    // Uniform direction in the orthogonal complement of y1: draw a fresh
    // Gaussian vector and project y1 out. Resample on (vanishingly rare)
    // near-parallel draws.
    UnitVector u;
    for (;;) {
        for (double& v : g) v = normal(rng);
        const double c = dot(g, y1.values);
        double norm_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            g[i] -= c * y1.values[i];
            norm_sq += g[i] * g[i];
        }
        if (norm_sq > 1e-24) {
            u = l2_normalize(g);
            break;
        }
    }

    UnitVector y2;
    y2.values.resize(n);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (int i = 0; i < n; ++i) y2.values[i] = ct * y1.values[i] + st * u.values[i];
    return {std::move(y1), std::move(y2)};
}

namespace {

constexpr std::uint64_t kMcChunk = 8192;

void mc_run_chunk(int n, double theta, std::uint64_t trials, std::uint64_t seed,
                  std::vector<std::uint64_t>& counts) {
    std::mt19937_64 rng(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        auto [y1, y2] = sample_hypersphere_pair(n, theta, rng);
        ++counts[hamming_distance(binarize(y1.values), binarize(y2.values))];
    }
}

}  // namespace

HammingHistogram mc_hamming_distribution(int n, double theta, std::uint64_t trials,
                                         std::mt19937_64& rng, int threads) {
    if (trials < 1) throw std::invalid_argument("mc_hamming_distribution: trials must be >= 1");
    const std::uint64_t chunk_count = (trials + kMcChunk - 1) / kMcChunk;
    std::vector<std::uint64_t> seeds(chunk_count);
    for (auto& s : seeds) s = rng();

    const int worker_count = std::max(1, threads);
    std::vector<std::vector<std::uint64_t>> partial(
        worker_count, std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));

    auto work = [&](int w) {
        for (std::uint64_t c = w; c < chunk_count; c += worker_count) {
            const std::uint64_t lo = c * kMcChunk;
            const std::uint64_t count = std::min(kMcChunk, trials - lo);
            mc_run_chunk(n, theta, count, seeds[c], partial[w]);
        }
    };
    if (worker_count == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (int w = 0; w < worker_count; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    HammingHistogram hist;
    hist.trials = trials;
    hist.counts.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& part : partial)
        for (std::size_t d = 0; d < hist.counts.size(); ++d) hist.counts[d] += part[d];
    return hist;
}

// ---------------------------------------------------------------------------
// Hash text form

std::string format_hash_hex(const BinaryHash& h) {
    static const char* digits = "0123456789abcdef";
    std::string out = std::to_string(h.size_bits());
    out.push_back(':');
    for (std::uint64_t w : h.words()) {
        for (int byte = 0; byte < 8; ++byte) {
            const unsigned v = static_cast<unsigned>((w >> (8 * byte)) & 0xff);
            out.push_back(digits[v >> 4]);
            out.push_back(digits[v & 0xf]);
        }
    }
    return out;
}

BinaryHash parse_hash_hex(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ParseError("hash literal: missing ':' separator");
    int n_bits = 0;
    for (char c : text.substr(0, colon)) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ParseError("hash literal: bad bit length");
        n_bits = n_bits * 10 + (c - '0');
        if (n_bits > 1 << 20) throw ParseError("hash literal: bit length too large");
    }
    if (n_bits < 1) throw ParseError("hash literal: bit length must be >= 1");

    const std::string_view hex = text.substr(colon + 1);
    const std::size_t expect = words_for_bits(n_bits) * 16;
    if (hex.size() != expect)
        throw ParseError("hash literal: expected " + std::to_string(expect) +
                         " hex digits, got " + std::to_string(hex.size()));
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    std::vector<std::uint64_t> words(words_for_bits(n_bits), 0);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("hash literal: bad hex digit");
        const std::uint64_t byte = static_cast<std::uint64_t>(hi << 4 | lo);
        words[i / 16] |= byte << (8 * ((i / 2) % 8));
    }
    if (n_bits % 64 != 0 && (words.back() >> (n_bits % 64)) != 0)
        throw ParseError("hash literal: bits set beyond the stated length");
    return BinaryHash(n_bits, std::move(words));
}

}  // namespace chasm
