#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "jsmf/corpus.hpp"

namespace jsmf {

// Per-document co-occurrence contribution, stored on the document's support:
// block(a, b) is the entry for object pair (support[a], support[b]).
struct DocCooccurrence {
    std::vector<std::int32_t> support;
    Eigen::MatrixXd block;

    Eigen::MatrixXd to_dense(std::int32_t n) const;
    double sum() const { return block.sum(); }
};

// (H H^T - diag(H)) / (n_m (n_m - 1)) for a single document.
// Requires length >= 2.
DocCooccurrence doc_cooccurrence(const Document& doc, std::int32_t n);

// Mean of the per-document contributions over all documents with length >= 2.
// Shorter documents are skipped (counted in skipped_documents when given);
// throws ComputeError when no document is admissible. The accumulation order
// per entry is document order for every thread count, so results are bitwise
// identical to the sequential run.
Eigen::MatrixXd build_cooccurrence(const Corpus& corpus, int threads = 1,
                                   std::int64_t* skipped_documents = nullptr);

struct RowNormalized {
    Eigen::MatrixXd Cbar;          // rows on the probability simplex
    Eigen::VectorXd p_X;           // marginals, p_X(i) = sum_j C(i, j)
    std::vector<std::int32_t> zero_rows;  // rows that had zero marginal
};

// Divides each row by its marginal. Zero-marginal rows become uniform and are
// reported in zero_rows. Requires C entrywise >= 0.
RowNormalized row_normalize(const Eigen::MatrixXd& C);

}  // namespace jsmf
