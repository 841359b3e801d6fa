#include "jsmf/cooccur.hpp"

#include <algorithm>
#include <thread>

#include "jsmf/error.hpp"

namespace jsmf {

Eigen::MatrixXd DocCooccurrence::to_dense(std::int32_t n) const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    const auto s = static_cast<Eigen::Index>(support.size());
    for (Eigen::Index a = 0; a < s; ++a)
        for (Eigen::Index b = 0; b < s; ++b)
            dense(support[static_cast<size_t>(a)], support[static_cast<size_t>(b)]) =
                block(a, b);
    return dense;
}

DocCooccurrence doc_cooccurrence(const Document& doc, std::int32_t n) {
    if (doc.length < 2)
        throw ComputeError("co-occurrence undefined for a document with " +
                           std::to_string(doc.length) + " tokens");
    DocCooccurrence out;
    out.support.reserve(doc.counts.size());
    Eigen::VectorXd h(static_cast<Eigen::Index>(doc.counts.size()));
    for (size_t a = 0; a < doc.counts.size(); ++a) {
        const auto [idx, cnt] = doc.counts[a];
        if (idx < 0 || idx >= n)
            throw ComputeError("object index " + std::to_string(idx) +
                               " outside matrix dimension " + std::to_string(n));
        out.support.push_back(idx);
        h(static_cast<Eigen::Index>(a)) = static_cast<double>(cnt);
    }
    const double d = static_cast<double>(doc.length) * static_cast<double>(doc.length - 1);
    out.block = (h * h.transpose() - Eigen::MatrixXd(h.asDiagonal())) / d;
    return out;
}

Eigen::MatrixXd build_cooccurrence(const Corpus& corpus, int threads,
                                   std::int64_t* skipped_documents) {
    const std::int32_t n = corpus.num_objects();
    std::int64_t admissible = 0, skipped = 0;
    for (const auto& d : corpus.documents) (d.length >= 2 ? admissible : skipped)++;
    if (skipped_documents) *skipped_documents = skipped;
    if (admissible == 0)
        throw ComputeError("no document has at least 2 tokens; cannot estimate co-occurrence");

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);

    // Each worker owns a contiguous row range and scans all documents in
    // order, so every entry accumulates in document order regardless of the
    // thread count.
    auto accumulate_rows = [&](std::int32_t row_lo, std::int32_t row_hi) {
        for (const auto& doc : corpus.documents) {
            if (doc.length < 2) continue;
            const double d =
                static_cast<double>(doc.length) * static_cast<double>(doc.length - 1);
            const auto& counts = doc.counts;
            const auto lo = std::lower_bound(
                counts.begin(), counts.end(), std::make_pair(row_lo, INT32_C(0)));
            for (auto it = lo; it != counts.end() && it->first < row_hi; ++it) {
                const auto i = static_cast<Eigen::Index>(it->first);
                const double hi_count = static_cast<double>(it->second);
                for (const auto& [j, cnt_j] : counts) {
                    const double hj_count = static_cast<double>(cnt_j);
                    const double numer = static_cast<std::int32_t>(i) == j
                                             ? hi_count * hj_count - hi_count
                                             : hi_count * hj_count;
                    C(i, static_cast<Eigen::Index>(j)) += numer / d;
                }
            }
        }
    };

    const int workers = std::max(1, std::min<int>(threads, n));
    if (workers == 1) {
        accumulate_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const std::int32_t lo = static_cast<std::int32_t>(
                static_cast<std::int64_t>(n) * w / workers);
            const std::int32_t hi = static_cast<std::int32_t>(
                static_cast<std::int64_t>(n) * (w + 1) / workers);
            pool.emplace_back(accumulate_rows, lo, hi);
        }
        for (auto& t : pool) t.join();
    }

    C /= static_cast<double>(admissible);
    return C;
}

RowNormalized row_normalize(const Eigen::MatrixXd& C) {
    if (C.rows() != C.cols()) throw ComputeError("row_normalize expects a square matrix");
    if ((C.array() < 0.0).any())
        throw ComputeError("row_normalize expects an entrywise non-negative matrix");
    const Eigen::Index n = C.rows();
    RowNormalized out;
    out.p_X = C.rowwise().sum();
    out.Cbar.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = out.p_X(i);
        if (p > 0.0) {
            out.Cbar.row(i) = C.row(i) / p;
        } else {
            out.Cbar.row(i).setConstant(1.0 / static_cast<double>(n));
            out.zero_rows.push_back(static_cast<std::int32_t>(i));
        }
    }
    return out;
}

}  // namespace jsmf
