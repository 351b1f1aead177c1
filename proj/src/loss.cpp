#include "chasm/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chasm/error.hpp"

namespace chasm {

void LossConfig::validate() const {
    if (n < 1) throw std::invalid_argument("LossConfig: n must be >= 1");
    if (radius < 0 || radius > n) throw std::invalid_argument("LossConfig: radius outside [0, n]");
    if (substring_count < 1 || n % substring_count != 0)
        throw std::invalid_argument("LossConfig: substring_count must divide n");
    if (lambda4 < 0.0 || lambda5 < 0.0)
        throw std::invalid_argument("LossConfig: lambda4 and lambda5 must be >= 0");
    if (t0 < 0.0) throw std::invalid_argument("LossConfig: t0 must be >= 0");
    if (clamp_eps <= 0.0 || clamp_eps >= 1.0)
        throw std::invalid_argument("LossConfig: clamp_eps outside (0, 1)");
}

PairClass classify_pair(const FrameRef& a, const FrameRef& b, double t0) {
    if (a.video_id != b.video_id) return PairClass::H3;
    if (a.shot_id != b.shot_id) return PairClass::H2;
    return std::abs(a.timestamp - b.timestamp) <= t0 ? PairClass::H0 : PairClass::H1;
}

WeightMatrices class_weight_matrices(std::span<const FrameRef> frames,
                                     const ClassWeightTable& table, double t0) {
    const std::size_t b = frames.size();
    if (b < 2) throw std::invalid_argument("class_weight_matrices: need at least 2 frames");
    WeightMatrices w{Matrix(b, b), Matrix(b, b), Matrix(b, b)};
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = i + 1; j < b; ++j) {
            const auto cls = static_cast<int>(classify_pair(frames[i], frames[j], t0));
            w.u1(i, j) = w.u1(j, i) = table.u1[cls];
            w.u2(i, j) = w.u2(j, i) = table.u2[cls];
            w.u3(i, j) = w.u3(j, i) = table.u3[cls];
        }
    }
    return w;
}

namespace {

// Row-normalized view of one contiguous column block of the batch, with the
// clamped pairwise dot products and flip probabilities.
struct PairBlock {
    Matrix y;                      // b x width, L2-normalized rows
    std::vector<double> row_norm;  // pre-normalization row norms
    Matrix u;                      // clamped y_i . y_j
    Matrix p;                      // arccos(u) / pi
    std::vector<std::uint8_t> clamped;  // row-major b*b flags
};

PairBlock make_pair_block(const Matrix& logits, std::size_t col_begin, std::size_t width,
                          double clamp_eps) {
    const std::size_t b = logits.rows();
    PairBlock block;
    block.y = Matrix(b, width);
    block.row_norm.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
        double norm_sq = 0.0;
        for (std::size_t k = 0; k < width; ++k) {
            const double v = logits(i, col_begin + k);
            if (!std::isfinite(v))
                throw DegenerateInputError("batch logits contain a non-finite value");
            norm_sq += v * v;
        }
        if (norm_sq == 0.0)
            throw DegenerateInputError("batch row " + std::to_string(i) +
                                       " is zero within columns [" + std::to_string(col_begin) +
                                       ", " + std::to_string(col_begin + width) + ")");
        block.row_norm[i] = std::sqrt(norm_sq);
        for (std::size_t k = 0; k < width; ++k)
            block.y(i, k) = logits(i, col_begin + k) / block.row_norm[i];
    }

    block.u = Matrix(b, b);
    block.p = Matrix(b, b);
    block.clamped.assign(b * b, 0);
    const double lo = -1.0 + clamp_eps;
    const double hi = 1.0 - clamp_eps;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < width; ++k) dot += block.y(i, k) * block.y(j, k);
            const double clamped_dot = std::clamp(dot, lo, hi);
            block.u(i, j) = clamped_dot;
            block.p(i, j) = std::acos(clamped_dot) / std::numbers::pi_v<double>;
            block.clamped[i * b + j] = (dot <= lo || dot >= hi) ? 1 : 0;
        }
    }
    return block;
}

void check_batch(const Batch& batch, const LossConfig& config) {
    config.validate();
    if (batch.logits.rows() < 2) throw std::invalid_argument("batch must have b >= 2 rows");
    if (batch.logits.cols() != static_cast<std::size_t>(config.n))
        throw std::invalid_argument("batch width does not match config.n");
    if (batch.frames.size() != batch.logits.rows())
        throw std::invalid_argument("frame list length does not match batch rows");
}

// Sum of w(i,j) * ln F(r; n, p_of(i,j)) over all off-diagonal entries,
// divided by b^2. Fixed (i, j) iteration order keeps the reduction
// deterministic.
template <typename POf>
double weighted_log_cdf_avg(const Matrix& weights, const BinomTable& table, int r, POf&& p_of) {
    const std::size_t b = weights.rows();
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            if (i == j) continue;
            const double w = weights(i, j);
            if (w == 0.0) continue;
            sum += w * table.log_cdf(r, p_of(i, j));
        }
    }
    return sum / (static_cast<double>(b) * static_cast<double>(b));
}

// Skew penalty: (1 / (n b)) * || sum_i (x^i)^3 ||^2, cube elementwise.
double skew_term(const Matrix& logits) {
    const std::size_t b = logits.rows();
    const std::size_t n = logits.cols();
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            const double v = logits(i, k);
            s += v * v * v;
        }
        sum_sq += s * s;
    }
    return sum_sq / (static_cast<double>(n) * static_cast<double>(b));
}

}  // namespace

FlipProbabilities pairwise_flip_probabilities(const Matrix& logits, int substring_count,
                                              double clamp_eps) {
    if (logits.rows() < 2) throw std::invalid_argument("need at least 2 rows");
    if (substring_count < 1 || logits.cols() % substring_count != 0)
        throw std::invalid_argument("substring_count must divide the column count");
    const std::size_t width = logits.cols() / substring_count;

    FlipProbabilities out;
    out.full = make_pair_block(logits, 0, logits.cols(), clamp_eps).p;
    out.slices.reserve(substring_count);
    for (int l = 0; l < substring_count; ++l)
        out.slices.push_back(make_pair_block(logits, l * width, width, clamp_eps).p);
    return out;
}

double binom_cdf_dp(int r, int n, double p) { return BinomTable(n).cdf_dp(r, p); }

LossBreakdown loss_terms(const Batch& batch, const LossConfig& config,
                         std::span<const double> model_weights) {
    check_batch(batch, config);
    const auto weights = class_weight_matrices(batch.frames, config.weights, config.t0);
    const int m = config.substring_width();
    const BinomTable full_table(config.n);
    const BinomTable slice_table(m);

    const auto full = make_pair_block(batch.logits, 0, batch.logits.cols(), config.clamp_eps);

    LossBreakdown out;
    out.j1 = weighted_log_cdf_avg(weights.u1, full_table, config.radius,
                                  [&](std::size_t i, std::size_t j) { return full.p(i, j); });
    out.j2 = weighted_log_cdf_avg(weights.u2, full_table, config.n - config.radius - 1,
                                  [&](std::size_t i, std::size_t j) { return 1.0 - full.p(i, j); });
    for (int l = 0; l < config.substring_count; ++l) {
        const auto slice =
            make_pair_block(batch.logits, static_cast<std::size_t>(l) * m, m, config.clamp_eps);
        out.j3 += weighted_log_cdf_avg(weights.u3, slice_table, m - 1, [&](std::size_t i, std::size_t j) {
            return 1.0 - slice.p(i, j);
        });
    }
    out.j4 = skew_term(batch.logits);
    for (double w : model_weights) out.j5 += w * w;
    out.total = -out.j1 - out.j2 - out.j3 + config.lambda4 * out.j4 + config.lambda5 * out.j5;
    return out;
}

namespace {

// Accumulates the gradient of one pairwise term through arccos and row
// normalization, for the column block starting at col_begin. du holds
// d(total)/d(u_ij) for this block.
void add_block_gradient(const PairBlock& block, const Matrix& du, std::size_t col_begin,
                        Matrix& grad) {
    const std::size_t b = block.y.rows();
    const std::size_t width = block.y.cols();
    // grad_y = (du + du^T) y
    Matrix grad_y(b, width);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double g = du(i, j) + du(j, i);
            if (g == 0.0) continue;
            for (std::size_t k = 0; k < width; ++k) grad_y(i, k) += g * block.y(j, k);
        }
    }
    // Through y = x / ||x||: grad_x = (grad_y - (grad_y . y) y) / ||x||.
    for (std::size_t i = 0; i < b; ++i) {
        double proj = 0.0;
        for (std::size_t k = 0; k < width; ++k) proj += grad_y(i, k) * block.y(i, k);
        for (std::size_t k = 0; k < width; ++k)
            grad(i, col_begin + k) +=
                (grad_y(i, k) - proj * block.y(i, k)) / block.row_norm[i];
    }
}

}  // namespace

Matrix loss_gradient(const Batch& batch, const LossConfig& config) {
    check_batch(batch, config);
    const std::size_t b = batch.logits.rows();
    const double b_sq = static_cast<double>(b) * static_cast<double>(b);
    const auto weights = class_weight_matrices(batch.frames, config.weights, config.t0);
    const int m = config.substring_width();
    const BinomTable full_table(config.n);
    const BinomTable slice_table(m);
    const double pi = std::numbers::pi_v<double>;

    Matrix grad(b, batch.logits.cols());

    // Full-width block carries -J1 - J2.
    {
        const auto block = make_pair_block(batch.logits, 0, batch.logits.cols(), config.clamp_eps);
        Matrix du(b, b);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < b; ++j) {
                if (i == j || block.clamped[i * b + j]) continue;
                const double w1 = weights.u1(i, j);
                const double w2 = weights.u2(i, j);
                if (w1 == 0.0 && w2 == 0.0) continue;
                const double p = block.p(i, j);
                double d_total_dp = 0.0;
                if (w1 != 0.0)
                    d_total_dp -= w1 * full_table.log_cdf_dp(config.radius, p);
                if (w2 != 0.0)
                    d_total_dp += w2 * full_table.log_cdf_dp(config.n - config.radius - 1, 1.0 - p);
                const double dp_du = -1.0 / (pi * std::sqrt(1.0 - block.u(i, j) * block.u(i, j)));
                du(i, j) = d_total_dp / b_sq * dp_du;
            }
        }
        add_block_gradient(block, du, 0, grad);
    }

    // Each slice carries its share of -J3.
    for (int l = 0; l < config.substring_count; ++l) {
        const std::size_t col_begin = static_cast<std::size_t>(l) * m;
        const auto block = make_pair_block(batch.logits, col_begin, m, config.clamp_eps);
        Matrix du(b, b);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < b; ++j) {
                if (i == j || block.clamped[i * b + j]) continue;
                const double w3 = weights.u3(i, j);
                if (w3 == 0.0) continue;
                const double d_total_dp =
                    w3 * slice_table.log_cdf_dp(m - 1, 1.0 - block.p(i, j));
                const double dp_du = -1.0 / (pi * std::sqrt(1.0 - block.u(i, j) * block.u(i, j)));
                du(i, j) = d_total_dp / b_sq * dp_du;
            }
        }
        add_block_gradient(block, du, col_begin, grad);
    }

    // Skew penalty: d/dx_ik of lambda4 * J4 = lambda4 * 6/(n b) * S_k * x_ik^2.
    if (config.lambda4 != 0.0) {
        const std::size_t n = batch.logits.cols();
        const double scale = config.lambda4 * 6.0 / (static_cast<double>(n) * static_cast<double>(b));
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                const double v = batch.logits(i, k);
                s += v * v * v;
            }
            for (std::size_t i = 0; i < b; ++i) {
                const double v = batch.logits(i, k);
                grad(i, k) += scale * s * v * v;
            }
        }
    }
    return grad;
}

}  // namespace chasm
