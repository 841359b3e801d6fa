#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace jsmf {

enum class RectifyMethod { None, DC, AP };

RectifyMethod rectify_method_from_string(const std::string& name);
std::string to_string(RectifyMethod method);

struct RectifyConfig {
    int K = 10;                    // target rank (number of clusters)
    int ap_iterations = 150;
    RectifyMethod method = RectifyMethod::AP;
    double eig_tolerance = 1e-9;
    int dc_max_iterations = 100;
    double dc_tolerance = 1e-10;
    // Dimension at or below which the rank-K projection uses a dense
    // eigendecomposition instead of the Lanczos solver.
    int dense_threshold = 2000;
    bool early_stop = false;       // stop AP once movement < early_stop_tol
    double early_stop_tol = 1e-12;
};

// Per-iteration Frobenius movement of the AP iterate and consecutive ratios.
// ratios[0] is NaN; ratios[t] is NaN where movements[t-1] == 0.
struct ConvergenceTrace {
    std::vector<double> movements;
    std::vector<double> ratios;
};

void write_convergence_csv(const std::string& path, const ConvergenceTrace& trace);

struct EigOptions {
    double tolerance = 1e-9;       // relative residual ||Cu - lu|| <= tol * ||C||
    int dense_threshold = 2000;
    int buffer = 8;                // extra requested pairs beyond K
    int max_subspace = 0;          // 0 -> chosen from the request size
    int max_restarts = 200;
    std::uint64_t start_seed = 0x6a736d66ULL;  // deterministic start vector
};

struct TruncatedEig {
    Eigen::MatrixXd vectors;  // n x k, orthonormal columns
    Eigen::VectorXd values;   // k algebraically largest, descending
};

using MatVec = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Top-k algebraic eigenpairs of a symmetric operator via thick-restart
// Lanczos with full reorthogonalization. Throws ComputeError with the
// residual norms when the solver does not converge.
TruncatedEig truncated_eig_lanczos(const MatVec& op, Eigen::Index n, int k,
                                   const EigOptions& opts = {});

// Dense-oracle path (full symmetric eigendecomposition, top-k extracted).
TruncatedEig truncated_eig_dense(const Eigen::MatrixXd& C, int k);

// Dispatches on opts.dense_threshold.
TruncatedEig truncated_eig(const Eigen::MatrixXd& C, int k, const EigOptions& opts = {});

// Nearest (Frobenius) matrix that is PSD with rank <= K: keep the K largest
// positive eigenvalues, zero everything else.
Eigen::MatrixXd project_psd_k(const Eigen::MatrixXd& C, int k, const EigOptions& opts = {});

// Nearest matrix with entry sum 1: uniform additive shift.
Eigen::MatrixXd project_nor(const Eigen::MatrixXd& C);

// Nearest entrywise non-negative matrix: clip at zero.
Eigen::MatrixXd project_nn(const Eigen::MatrixXd& C);

struct ApResult {
    Eigen::MatrixXd C;
    ConvergenceTrace trace;
};

// Alternating projection PSD_K -> NOR -> NN, run for cfg.ap_iterations
// rounds (ending on NN, so the result is entrywise non-negative exactly).
ApResult rectify_ap(const Eigen::MatrixXd& C, const RectifyConfig& cfg);

struct DcResult {
    Eigen::MatrixXd C;
    bool converged = true;
    int iterations = 0;
};

// Diagonal completion: fixed-point iteration d <- max(0, diag(PSD_K(C; d)))
// touching only the diagonal, then a uniform diagonal shift restoring entry
// sum 1 (clipped at zero). Off-diagonal entries are never modified.
DcResult rectify_dc(const Eigen::MatrixXd& C, const RectifyConfig& cfg);

}  // namespace jsmf
