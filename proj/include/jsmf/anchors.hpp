#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace jsmf {

// Result of the greedy pivoted Gram-Schmidt selection over the rows of Cbar.
struct AnchorSet {
    std::vector<std::int32_t> indices;   // s_1..s_K in pivot order
    std::vector<double> residual_norms;  // residual norm of each pivot when chosen
    Eigen::MatrixXd basis;               // K x N orthonormal rows
};

// Selects K rows by pivoted QR: repeatedly pick the row with the largest
// squared residual (ties to the lower index), orthonormalize it against the
// current basis, and downdate every squared residual by the squared inner
// product with the new basis vector. Rows are walked through their nonzeros,
// so sparse inputs only pay for their support. Rows listed in exclude carry
// zero residual weight and are never picked (row_normalize substitutes a
// uniform row for zero-marginal objects; those cannot be anchors).
AnchorSet select_anchors(const Eigen::MatrixXd& Cbar, int k,
                         const std::vector<std::int32_t>& exclude = {});

void write_anchors_json(const AnchorSet& anchors, const std::vector<std::string>& labels,
                        const std::string& path);
AnchorSet read_anchors_json(const std::string& path);

// Top-2 principal components of the mean-centered rows: coordinates(i, :) is
// the 2D embedding of row i. Deterministic sign convention (largest-magnitude
// loading positive).
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& Cbar);

// CSV with one row per object: index, label, x, y, is_anchor.
void export_embedding(const Eigen::MatrixXd& Cbar, const AnchorSet& anchors,
                      const std::vector<std::string>& labels, const std::string& out_path);

}  // namespace jsmf
