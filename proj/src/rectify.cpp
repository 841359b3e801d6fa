#include "jsmf/rectify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "jsmf/error.hpp"
#include "jsmf/io.hpp"

namespace jsmf {

RectifyMethod rectify_method_from_string(const std::string& name) {
    if (name == "none" || name == "baseline") return RectifyMethod::None;
    if (name == "dc") return RectifyMethod::DC;
    if (name == "ap") return RectifyMethod::AP;
    throw IoError("unknown rectification method \"" + name + "\" (expected baseline, dc or ap)");
}

std::string to_string(RectifyMethod method) {
    switch (method) {
        case RectifyMethod::None: return "baseline";
        case RectifyMethod::DC: return "dc";
        case RectifyMethod::AP: return "ap";
    }
    return "?";
}

void write_convergence_csv(const std::string& path, const ConvergenceTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,movement,ratio\n";
    for (size_t t = 0; t < trace.movements.size(); ++t)
        out << (t + 1) << ',' << format_double(trace.movements[t]) << ','
            << format_double(trace.ratios[t]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// One Lanczos expansion step with two-pass reorthogonalization against every
// basis vector computed so far.
double orthogonalize(const Eigen::MatrixXd& V, Eigen::Index cols, Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass) {
        if (cols == 0) break;
        const auto basis = V.leftCols(cols);
        w.noalias() -= basis * (basis.transpose() * w);
    }
    return w.norm();
}

}  // namespace

TruncatedEig truncated_eig_lanczos(const MatVec& op, Eigen::Index n, int k,
                                   const EigOptions& opts) {
    if (n < 1) throw ComputeError("eigensolver requires n >= 1");
    k = static_cast<int>(std::min<Eigen::Index>(k, n));
    if (k < 1) throw ComputeError("eigensolver requires k >= 1");

    const int nev = static_cast<int>(std::min<Eigen::Index>(k + opts.buffer, n));
    const Eigen::Index m =
        opts.max_subspace > 0
            ? std::min<Eigen::Index>(opts.max_subspace, n)
            : std::min<Eigen::Index>(std::max<Eigen::Index>(2 * nev + 12, 30), n);

    std::mt19937_64 rng(opts.start_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit = [&](Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
        v.normalize();
    };

    Eigen::MatrixXd V(n, m);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd v(n), w(n);
    random_unit(v);

    Eigen::Index locked = 0;      // kept Ritz vectors after a thick restart
    Eigen::VectorXd kept_values;  // their Ritz values
    Eigen::VectorXd kept_coupling;

    Eigen::VectorXd last_residuals;
    const double tiny = std::numeric_limits<double>::min();

    for (int restart = 0; restart <= opts.max_restarts; ++restart) {
        // Assemble the projected matrix for this cycle: diag of kept Ritz
        // values plus their coupling through the restart vector.
        T.setZero();
        for (Eigen::Index i = 0; i < locked; ++i) {
            T(i, i) = kept_values(i);
            T(i, locked) = kept_coupling(i);
            T(locked, i) = kept_coupling(i);
        }
        V.col(locked) = v;

        double beta_last = 0.0;
        Eigen::Index built = locked;  // columns of V holding basis vectors
        for (Eigen::Index j = locked; j < m; ++j) {
            built = j + 1;
            op(V.col(j), w);
            if (j == locked && locked > 0)
                w.noalias() -= V.leftCols(locked) * kept_coupling;
            const double alpha = V.col(j).dot(w);
            T(j, j) = alpha;
            w.noalias() -= alpha * V.col(j);
            if (j > locked) w.noalias() -= T(j, j - 1) * V.col(j - 1);
            double beta = orthogonalize(V, built, w);
            if (beta <= 1e4 * tiny || !(beta > 0.0)) {
                // Invariant subspace; continue in a fresh random direction.
                random_unit(w);
                beta = orthogonalize(V, built, w);
                if (beta < 1e-12) {  // space exhausted
                    beta_last = 0.0;
                    break;
                }
                w /= beta;
                beta = 0.0;
            } else {
                w /= beta;
            }
            if (j + 1 < m) {
                T(j + 1, j) = beta;
                T(j, j + 1) = beta;
                V.col(j + 1) = w;
            } else {
                beta_last = beta;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T.topLeftCorner(built, built));
        if (small.info() != Eigen::Success)
            throw ComputeError("projected eigensolve failed inside the Lanczos iteration");
        // Eigen returns ascending order; walk from the back for the largest.
        const Eigen::VectorXd& theta = small.eigenvalues();
        const Eigen::MatrixXd& s = small.eigenvectors();

        double scale = 1e-30;
        for (Eigen::Index i = 0; i < built; ++i) scale = std::max(scale, std::abs(theta(i)));

        const int want = static_cast<int>(std::min<Eigen::Index>(nev, built));
        Eigen::VectorXd residuals(want);
        bool all_converged = true;
        for (int i = 0; i < want; ++i) {
            const Eigen::Index col = built - 1 - i;
            residuals(i) = std::abs(beta_last * s(built - 1, col));
            if (residuals(i) > opts.tolerance * scale) all_converged = false;
        }
        last_residuals = residuals;

        if (all_converged || built >= n) {
            const int out_k = std::min<int>(k, want);
            TruncatedEig result;
            result.values.resize(out_k);
            result.vectors.resize(n, out_k);
            for (int i = 0; i < out_k; ++i) {
                const Eigen::Index col = built - 1 - i;
                result.values(i) = theta(col);
                result.vectors.col(i).noalias() = V.leftCols(built) * s.col(col);
            }
            return result;
        }

        // Thick restart: keep the best Ritz vectors plus the residual
        // direction and continue.
        const Eigen::Index keep =
            std::min<Eigen::Index>(built - 1, nev + std::min<Eigen::Index>(8, m - nev));
        Eigen::MatrixXd kept(n, keep);
        Eigen::VectorXd values(keep), coupling(keep);
        for (Eigen::Index i = 0; i < keep; ++i) {
            const Eigen::Index col = built - 1 - i;
            values(i) = theta(col);
            coupling(i) = beta_last * s(built - 1, col);
            kept.col(i).noalias() = V.leftCols(built) * s.col(col);
        }
        V.leftCols(keep) = kept;
        kept_values = values;
        kept_coupling = coupling;
        locked = keep;
        v = w;  // residual direction, orthogonal to the kept vectors
    }

    std::string msg = "Lanczos eigensolver did not converge; residual norms:";
    for (Eigen::Index i = 0; i < last_residuals.size(); ++i)
        msg += " " + format_double(last_residuals(i));
    throw ComputeError(msg);
}

TruncatedEig truncated_eig_dense(const Eigen::MatrixXd& C, int k) {
    if (C.rows() != C.cols()) throw ComputeError("eigensolver expects a square matrix");
    const Eigen::Index n = C.rows();
    k = static_cast<int>(std::min<Eigen::Index>(k, n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success)
        throw ComputeError("dense symmetric eigendecomposition failed");
    TruncatedEig result;
    result.values.resize(k);
    result.vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
        result.values(i) = eig.eigenvalues()(n - 1 - i);
        result.vectors.col(i) = eig.eigenvectors().col(n - 1 - i);
    }
    return result;
}

TruncatedEig truncated_eig(const Eigen::MatrixXd& C, int k, const EigOptions& opts) {
    if (C.rows() != C.cols()) throw ComputeError("eigensolver expects a square matrix");
    if (C.rows() <= opts.dense_threshold) return truncated_eig_dense(C, k);
    MatVec op = [&C](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = C * x; };
    return truncated_eig_lanczos(op, C.rows(), k, opts);
}

Eigen::MatrixXd project_psd_k(const Eigen::MatrixXd& C, int k, const EigOptions& opts) {
    const TruncatedEig top = truncated_eig(C, k, opts);
    const Eigen::Index n = C.rows();
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < top.values.size() && i < k; ++i)
        if (top.values(i) > 0.0) ++kept;
    if (kept == 0) return Eigen::MatrixXd::Zero(n, n);
    const auto u = top.vectors.leftCols(kept);
    const auto lambda = top.values.head(kept);
    Eigen::MatrixXd p(n, n);
    p.noalias() = u * lambda.asDiagonal() * u.transpose();
    p = ((p + p.transpose()) * 0.5).eval();
    return p;
}

Eigen::MatrixXd project_nor(const Eigen::MatrixXd& C) {
    const double n2 = static_cast<double>(C.rows()) * static_cast<double>(C.cols());
    const double shift = (1.0 - C.sum()) / n2;
    return C.array() + shift;
}

Eigen::MatrixXd project_nn(const Eigen::MatrixXd& C) { return C.cwiseMax(0.0); }

ApResult rectify_ap(const Eigen::MatrixXd& C, const RectifyConfig& cfg) {
    if (cfg.ap_iterations < 1) throw ComputeError("ap_iterations must be >= 1");
    if (cfg.K < 1 || cfg.K >= C.rows())
        throw ComputeError("rectification requires 1 <= K < N");
    EigOptions eopts;
    eopts.tolerance = cfg.eig_tolerance;
    eopts.dense_threshold = cfg.dense_threshold;

    ApResult out;
    out.C = C;
    Eigen::MatrixXd prev;
    for (int t = 0; t < cfg.ap_iterations; ++t) {
        prev = out.C;
        out.C = project_psd_k(out.C, cfg.K, eopts);
        out.C = project_nor(out.C);
        out.C = project_nn(out.C);
        const double movement = (out.C - prev).norm();
        const double prev_movement =
            out.trace.movements.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : out.trace.movements.back();
        out.trace.movements.push_back(movement);
        out.trace.ratios.push_back(prev_movement > 0.0
                                       ? movement / prev_movement
                                       : std::numeric_limits<double>::quiet_NaN());
        if (cfg.early_stop && movement < cfg.early_stop_tol) break;
    }
    return out;
}

DcResult rectify_dc(const Eigen::MatrixXd& C, const RectifyConfig& cfg) {
    if (cfg.K < 1 || cfg.K >= C.rows())
        throw ComputeError("rectification requires 1 <= K < N");
    EigOptions eopts;
    eopts.tolerance = cfg.eig_tolerance;
    eopts.dense_threshold = cfg.dense_threshold;

    DcResult out;
    out.C = C;
    Eigen::VectorXd d = C.diagonal();
    out.converged = (cfg.dc_max_iterations == 0);
    for (int t = 0; t < cfg.dc_max_iterations; ++t) {
        out.iterations = t + 1;
        out.C.diagonal() = d;
        const Eigen::MatrixXd p = project_psd_k(out.C, cfg.K, eopts);
        const Eigen::VectorXd d_next = p.diagonal().cwiseMax(0.0);
        const double change = (d_next - d).lpNorm<Eigen::Infinity>();
        d = d_next;
        if (change < cfg.dc_tolerance) {
            out.converged = true;
            break;
        }
    }
    out.C.diagonal() = d;

    // Restore entry sum 1 with a uniform shift on the diagonal only.
    const double shift = (1.0 - out.C.sum()) / static_cast<double>(C.rows());
    out.C.diagonal() = (out.C.diagonal().array() + shift).cwiseMax(0.0);
    return out;
}

}  // namespace jsmf
