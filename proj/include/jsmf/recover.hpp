#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "jsmf/anchors.hpp"

namespace jsmf {

struct EGConfig {
    double step_size = 50.0;    // eta
    int max_iterations = 500;
    double kkt_tolerance = 1e-7;
};

struct EGResult {
    Eigen::VectorXd coefficients;  // point on the K-simplex
    bool converged = false;
    bool monotone = true;          // objective never increased
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Simplex-constrained least squares min_c ||row - anchor_rows^T c||_2^2 by
// exponentiated gradient: c <- c .* exp(-2 eta (G c - h)) renormalized, with
// G = anchor_rows anchor_rows^T and h = anchor_rows row. Stops when the
// projected-gradient max-norm max_k |c_k (g_k - c.g)| drops below
// kkt_tolerance, g being the objective gradient.
EGResult recover_row(const Eigen::VectorXd& row, const Eigen::MatrixXd& anchor_rows,
                     const EGConfig& cfg = {});

// Same solve given the precomputed Gram matrix and linear term.
EGResult recover_row_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& h,
                          double row_sq_norm, const EGConfig& cfg = {});

struct ThetaStats {
    std::int64_t non_converged = 0;
    std::int64_t non_monotone = 0;
    double max_kkt_residual = 0.0;
};

// Runs recover_row for every row of Cbar (rows are independent; parallel over
// objects). Theta(i, :) are the simplex coefficients of row i.
Eigen::MatrixXd recover_theta(const Eigen::MatrixXd& Cbar, const AnchorSet& anchors,
                              const EGConfig& cfg = {}, int threads = 1,
                              ThetaStats* stats = nullptr);

// Bayes rule: B_ik = Theta_ik p_X(i) / sum_i' Theta_i'k p_X(i'). Throws when
// a cluster receives no probability mass.
Eigen::MatrixXd recover_B(const Eigen::MatrixXd& Theta, const Eigen::VectorXd& p_X);

// Anchor-submatrix recovery A = D^-1 C_SS D^-1 with D_kk = B(s_k, k).
// Throws when some D_kk <= eps_d.
Eigen::MatrixXd recover_A_anchor(const Eigen::MatrixXd& C, const std::vector<std::int32_t>& S,
                                 const Eigen::MatrixXd& B, double eps_d = 1e-12);

// Unconstrained Frobenius minimizer A = B^+ C (B^T)^+, symmetrized; the
// comparison baseline. Throws when B is rank deficient.
Eigen::MatrixXd recover_A_lsq(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B);

// Indices of the m largest entries, ties broken by the lower index.
std::vector<std::int32_t> top_objects(const Eigen::VectorXd& weights, int m);

// One topic per line: the top-m labels by B column weight.
void write_top_words(const Eigen::MatrixXd& B, const std::vector<std::string>& labels,
                     int m, const std::string& path);

}  // namespace jsmf
