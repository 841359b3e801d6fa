#include "jsmf/recover.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "jsmf/error.hpp"
#include "jsmf/parallel.hpp"

namespace jsmf {

EGResult recover_row_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& h,
                          double row_sq_norm, const EGConfig& cfg) {
    const Eigen::Index k = gram.rows();
    if (cfg.step_size <= 0.0) throw ComputeError("EG step size must be positive");

    EGResult out;
    out.coefficients = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    if (k == 1) {
        out.converged = true;
        return out;
    }

    Eigen::VectorXd& c = out.coefficients;
    Eigen::VectorXd gc = gram * c;
    auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& gx) {
        return row_sq_norm - 2.0 * x.dot(h) + x.dot(gx);
    };
    // Projected-gradient max-norm on the simplex: the multiplicative-update
    // geometry scales the gradient by the current point, so the stationarity
    // measure is max_k |c_k (g_k - lambda)| with lambda = c . g.
    auto kkt_residual = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
        const double lambda = x.dot(grad);
        return (x.array() * (grad.array() - lambda)).abs().maxCoeff();
    };

    double obj = objective(c, gc);
    Eigen::VectorXd grad(k), expo(k), candidate(k);
    for (int t = 0; t < cfg.max_iterations; ++t) {
        out.iterations = t + 1;
        grad = 2.0 * (gc - h);
        out.kkt_residual = kkt_residual(c, grad);
        if (out.kkt_residual <= cfg.kkt_tolerance) {
            out.converged = true;
            return out;
        }
        // Multiplicative update; the common exponent shift cancels in the
        // renormalization and guards against overflow.
        expo = -cfg.step_size * grad;
        const double shift = expo.maxCoeff();
        candidate = c.array() * (expo.array() - shift).exp();
        const double mass = candidate.sum();
        if (!(mass > 0.0)) break;  // all mass underflowed; keep current point
        candidate /= mass;
        c = candidate;
        gc.noalias() = gram * c;
        const double next_obj = objective(c, gc);
        if (next_obj > obj + 1e-15 * std::abs(obj)) out.monotone = false;
        obj = next_obj;
    }
    grad = 2.0 * (gc - h);
    out.kkt_residual = kkt_residual(c, grad);
    out.converged = out.kkt_residual <= cfg.kkt_tolerance;
    return out;
}

EGResult recover_row(const Eigen::VectorXd& row, const Eigen::MatrixXd& anchor_rows,
                     const EGConfig& cfg) {
    if (anchor_rows.cols() != row.size())
        throw ComputeError("anchor rows and target row have mismatched dimension");
    const Eigen::MatrixXd gram = anchor_rows * anchor_rows.transpose();
    const Eigen::VectorXd h = anchor_rows * row;
    return recover_row_gram(gram, h, row.squaredNorm(), cfg);
}

Eigen::MatrixXd recover_theta(const Eigen::MatrixXd& Cbar, const AnchorSet& anchors,
                              const EGConfig& cfg, int threads, ThetaStats* stats) {
    const Eigen::Index n = Cbar.rows();
    const auto k = static_cast<Eigen::Index>(anchors.indices.size());
    if (k < 1) throw ComputeError("anchor set is empty");

    Eigen::MatrixXd anchor_rows(k, Cbar.cols());
    for (Eigen::Index j = 0; j < k; ++j)
        anchor_rows.row(j) = Cbar.row(anchors.indices[static_cast<size_t>(j)]);
    const Eigen::MatrixXd gram = anchor_rows * anchor_rows.transpose();
    const Eigen::MatrixXd ht = Cbar * anchor_rows.transpose();  // n x k

    Eigen::MatrixXd theta(n, k);
    std::vector<EGResult> results(static_cast<size_t>(n));
    parallel_for(n, threads, [&](std::int64_t i) {
        results[static_cast<size_t>(i)] = recover_row_gram(
            gram, ht.row(i).transpose(), Cbar.row(i).squaredNorm(), cfg);
        theta.row(i) = results[static_cast<size_t>(i)].coefficients.transpose();
    });

    if (stats) {
        *stats = ThetaStats{};
        for (const auto& r : results) {
            if (!r.converged) ++stats->non_converged;
            if (!r.monotone) ++stats->non_monotone;
            stats->max_kkt_residual = std::max(stats->max_kkt_residual, r.kkt_residual);
        }
    }
    return theta;
}

Eigen::MatrixXd recover_B(const Eigen::MatrixXd& Theta, const Eigen::VectorXd& p_X) {
    if (Theta.rows() != p_X.size())
        throw ComputeError("Theta and p_X have mismatched dimension");
    Eigen::MatrixXd b = p_X.asDiagonal() * Theta;
    for (Eigen::Index col = 0; col < b.cols(); ++col) {
        const double mass = b.col(col).sum();
        if (!(mass > 0.0))
            throw ComputeError("cluster " + std::to_string(col) + " received no probability");
        b.col(col) /= mass;
    }
    return b;
}

Eigen::MatrixXd recover_A_anchor(const Eigen::MatrixXd& C, const std::vector<std::int32_t>& S,
                                 const Eigen::MatrixXd& B, double eps_d) {
    const auto k = static_cast<Eigen::Index>(S.size());
    Eigen::VectorXd d(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const std::int32_t s = S[static_cast<size_t>(i)];
        if (s < 0 || s >= B.rows()) throw ComputeError("anchor index out of range");
        d(i) = B(s, i);
        if (!(d(i) > eps_d))
            throw ComputeError("anchor " + std::to_string(i) +
                               " has vanishing topic probability B(s_k, k) = " +
                               std::to_string(d(i)));
    }
    Eigen::MatrixXd a(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c)
            a(r, c) = C(S[static_cast<size_t>(r)], S[static_cast<size_t>(c)]) / (d(r) * d(c));
    return a;
}

Eigen::MatrixXd recover_A_lsq(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    if (cod.rank() < B.cols())
        throw ComputeError("B is rank deficient (rank " + std::to_string(cod.rank()) +
                           " of " + std::to_string(B.cols()) + ")");
    const Eigen::MatrixXd pinv = cod.pseudoInverse();
    Eigen::MatrixXd a = pinv * C * pinv.transpose();
    return 0.5 * (a + a.transpose());
}

std::vector<std::int32_t> top_objects(const Eigen::VectorXd& weights, int m) {
    std::vector<std::int32_t> order(static_cast<size_t>(weights.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (weights(a) != weights(b)) return weights(a) > weights(b);
        return a < b;
    });
    order.resize(static_cast<size_t>(std::min<Eigen::Index>(m, weights.size())));
    return order;
}

void write_top_words(const Eigen::MatrixXd& B, const std::vector<std::string>& labels,
                     int m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
        const auto top = top_objects(B.col(k), m);
        for (size_t t = 0; t < top.size(); ++t) {
            if (t > 0) out << ' ';
            const auto idx = static_cast<size_t>(top[t]);
            out << (idx < labels.size() ? labels[idx] : std::to_string(top[t]));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace jsmf
