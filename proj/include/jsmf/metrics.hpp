#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "jsmf/corpus.hpp"

namespace jsmf {

struct MetricsReport {
    std::string method;
    int K = 0;
    std::int64_t N = 0;
    double recovery = 0.0;
    double approximation = 0.0;
    double dominancy = 0.0;  // NaN when undefined
    double specificity = 0.0;
    double dissimilarity = 0.0;
    double coherence = 0.0;
    bool dominancy_defined = true;
    bool specificity_finite = true;
};

// Mean l2 residual of reconstructing each row of Cbar from the anchor rows
// with the simplex coefficients Theta. Evaluated against whatever Cbar is
// passed in; the pipeline passes the original, unrectified matrix.
double recovery_error(const Eigen::MatrixXd& Cbar, const Eigen::MatrixXd& Theta,
                      const std::vector<std::int32_t>& S);

// || C - B A B^T ||_F against the original C.
double approximation_error(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& A);

// (1/K) sum_k A_kk / sum_l A_kl; NaN (defined=false) when some row sums to 0.
double dominancy(const Eigen::MatrixXd& A, bool* defined = nullptr);

// (1/K) sum_k KL(B(:,k) || p_X); 0 log(0/q) = 0, positive mass where
// p_X = 0 makes the value +inf (finite=false).
double specificity(const Eigen::MatrixXd& B, const Eigen::VectorXd& p_X,
                   bool* finite = nullptr);

// Average count of objects in each cluster's top-m that appear in no other
// cluster's top-m.
double dissimilarity(const Eigen::MatrixXd& B, int top_m = 20);

// (1/K) sum_k sum_{x1 != x2 in Top_k} log((D2(x1,x2) + eps) / D1(x2)) with
// document and co-document frequencies from the corpus; ordered pairs.
double coherence(const Eigen::MatrixXd& B, const Corpus& corpus, int top_m = 20,
                 double eps = 1.0);

void append_metrics_csv(const std::string& path, const MetricsReport& report);
void write_metrics_json(const std::string& path, const MetricsReport& report);
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

}  // namespace jsmf
