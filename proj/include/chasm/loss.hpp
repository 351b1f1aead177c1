#pragma once

#include <array>
#include <span>
#include <vector>

#include "chasm/frame.hpp"
#include "chasm/geometry.hpp"
#include "chasm/matrix.hpp"

namespace chasm {

// Frame-pair classes, ordered by time separation:
//   H0  same shot, |dt| <= t0     (must hash together)
//   H1  same shot, |dt| >  t0
//   H2  same video, different shot
//   H3  different videos          (must not hash together)
enum class PairClass : int { H0 = 0, H1 = 1, H2 = 2, H3 = 3 };

// Per-class weights for the three pairwise loss terms, indexed by PairClass.
struct ClassWeightTable {
    std::array<double, 4> u1{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> u2{0.0, 5.0, 5e2, 1e5};
    std::array<double, 4> u3{0.0, 0.0, 1e2, 2e4};
};

struct LossConfig {
    int n = 64;               // hash size in bits
    int radius = 3;           // Hamming radius r
    int substring_count = 4;  // number of vertical slices (must divide n)
    double t0 = 2.0 / 15.0;   // same-shot time window, seconds
    double lambda4 = 2.0;     // skew term weight
    double lambda5 = 1e-5;    // weight-decay term weight
    ClassWeightTable weights;
    double clamp_eps = kDotClampEps;

    int substring_width() const { return n / substring_count; }
    void validate() const;
};

// One training batch: row i of logits is the embedding of frames[i].
struct Batch {
    Matrix logits;  // b x n
    std::vector<FrameRef> frames;
};

// J = -j1 - j2 - j3 + lambda4 j4 + lambda5 j5, with j1..j3 <= 0 and
// j4, j5 >= 0, so total >= 0.
struct LossBreakdown {
    double j1 = 0.0;
    double j2 = 0.0;
    double j3 = 0.0;
    double j4 = 0.0;
    double j5 = 0.0;
    double total = 0.0;
};

PairClass classify_pair(const FrameRef& a, const FrameRef& b, double t0);

// b x b weight matrices for the three pairwise terms. Entry (i, j) carries
// the table weight of the pair's class; diagonals are zeroed (a frame never
// pairs with itself) and the matrices are symmetric.
struct WeightMatrices {
    Matrix u1;
    Matrix u2;
    Matrix u3;
};
WeightMatrices class_weight_matrices(std::span<const FrameRef> frames,
                                     const ClassWeightTable& table, double t0);

// Pairwise flip probabilities: `full` from the L2-row-normalized whole
// matrix, `slices` one matrix per contiguous vertical slice, each slice
// row-normalized independently. Throws DegenerateInputError if any row of
// any slice is all zero.
struct FlipProbabilities {
    Matrix full;
    std::vector<Matrix> slices;
};
FlipProbabilities pairwise_flip_probabilities(const Matrix& logits, int substring_count,
                                              double clamp_eps = kDotClampEps);

// d/dp of the binomial CDF: -n * C(n-1, r) * p^r * (1-p)^(n-1-r).
double binom_cdf_dp(int r, int n, double p);

// The five loss terms. j5 = ||model_weights||^2 (0 when the caller supplies
// none); everything else is a function of the batch alone. Pairwise averages
// divide by b^2.
LossBreakdown loss_terms(const Batch& batch, const LossConfig& config,
                         std::span<const double> model_weights = {});

// dJ/dlogits: analytic gradient of loss_terms' total with respect to the
// batch matrix. The chain runs class weights -> ln F (binomial CDF) ->
// arccos -> row normalization, per slice for the substring term, plus the
// skew penalty. Entries whose dot products were clamped get zero pairwise
// gradient (the clamped arccos is locally constant there).
Matrix loss_gradient(const Batch& batch, const LossConfig& config);

}  // namespace chasm
