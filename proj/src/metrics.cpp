#include "jsmf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "jsmf/error.hpp"
#include "jsmf/io.hpp"
#include "jsmf/recover.hpp"

namespace jsmf {

double recovery_error(const Eigen::MatrixXd& Cbar, const Eigen::MatrixXd& Theta,
                      const std::vector<std::int32_t>& S) {
    const Eigen::Index n = Cbar.rows();
    const auto k = static_cast<Eigen::Index>(S.size());
    if (Theta.rows() != n || Theta.cols() != k)
        throw ComputeError("Theta does not match Cbar rows and anchor count");
    Eigen::MatrixXd anchor_rows(k, Cbar.cols());
    for (Eigen::Index j = 0; j < k; ++j) {
        const std::int32_t s = S[static_cast<size_t>(j)];
        if (s < 0 || s >= n) throw ComputeError("anchor index out of range");
        anchor_rows.row(j) = Cbar.row(s);
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        total += (Cbar.row(i) - Theta.row(i) * anchor_rows).norm();
    return total / static_cast<double>(n);
}

double approximation_error(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& A) {
    if (B.rows() != C.rows() || B.cols() != A.rows() || A.rows() != A.cols())
        throw ComputeError("dimension mismatch in approximation error");
    return (C - B * A * B.transpose()).norm();
}

double dominancy(const Eigen::MatrixXd& A, bool* defined) {
    const Eigen::Index k = A.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double row_sum = A.row(i).sum();
        if (row_sum == 0.0) {
            if (defined) *defined = false;
            return std::numeric_limits<double>::quiet_NaN();
        }
        total += A(i, i) / row_sum;
    }
    if (defined) *defined = true;
    return total / static_cast<double>(k);
}

double specificity(const Eigen::MatrixXd& B, const Eigen::VectorXd& p_X, bool* finite) {
    if (B.rows() != p_X.size()) throw ComputeError("B and p_X have mismatched dimension");
    if (finite) *finite = true;
    double total = 0.0;
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            const double p = B(i, k);
            if (p == 0.0) continue;  // 0 log(0/q) = 0
            if (p_X(i) == 0.0) {
                if (finite) *finite = false;
                return std::numeric_limits<double>::infinity();
            }
            total += p * std::log(p / p_X(i));
        }
    }
    return total / static_cast<double>(B.cols());
}

double dissimilarity(const Eigen::MatrixXd& B, int top_m) {
    const Eigen::Index k = B.cols();
    std::vector<std::vector<std::int32_t>> tops(static_cast<size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) tops[static_cast<size_t>(c)] = top_objects(B.col(c), top_m);

    double total = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        std::set<std::int32_t> others;
        for (Eigen::Index o = 0; o < k; ++o) {
            if (o == c) continue;
            others.insert(tops[static_cast<size_t>(o)].begin(), tops[static_cast<size_t>(o)].end());
        }
        int unique = 0;
        for (std::int32_t obj : tops[static_cast<size_t>(c)])
            if (!others.count(obj)) ++unique;
        total += unique;
    }
    return total / static_cast<double>(k);
}

double coherence(const Eigen::MatrixXd& B, const Corpus& corpus, int top_m, double eps) {
    if (B.rows() != corpus.num_objects())
        throw ComputeError("B rows do not match the corpus vocabulary");
    const Eigen::Index k = B.cols();
    std::vector<std::vector<std::int32_t>> tops(static_cast<size_t>(k));
    std::set<std::int32_t> needed;
    for (Eigen::Index c = 0; c < k; ++c) {
        tops[static_cast<size_t>(c)] = top_objects(B.col(c), top_m);
        needed.insert(tops[static_cast<size_t>(c)].begin(), tops[static_cast<size_t>(c)].end());
    }

    // Document and co-document frequencies restricted to the needed objects.
    std::vector<std::int32_t> order(needed.begin(), needed.end());
    std::vector<std::int32_t> position(static_cast<size_t>(corpus.num_objects()), -1);
    for (size_t t = 0; t < order.size(); ++t) position[static_cast<size_t>(order[t])] =
        static_cast<std::int32_t>(t);

    const auto u = order.size();
    std::vector<std::int64_t> d1(u, 0);
    std::vector<std::int64_t> d2(u * u, 0);
    std::vector<std::int32_t> present;
    for (const auto& doc : corpus.documents) {
        present.clear();
        for (const auto& [idx, cnt] : doc.counts) {
            const std::int32_t pos = position[static_cast<size_t>(idx)];
            if (pos >= 0) present.push_back(pos);
        }
        for (size_t a = 0; a < present.size(); ++a) {
            ++d1[static_cast<size_t>(present[a])];
            for (size_t b = a + 1; b < present.size(); ++b) {
                ++d2[static_cast<size_t>(present[a]) * u + static_cast<size_t>(present[b])];
                ++d2[static_cast<size_t>(present[b]) * u + static_cast<size_t>(present[a])];
            }
        }
    }

    double total = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto& top = tops[static_cast<size_t>(c)];
        for (size_t a = 0; a < top.size(); ++a) {
            for (size_t b = 0; b < top.size(); ++b) {
                if (a == b) continue;
                const auto pa = static_cast<size_t>(position[static_cast<size_t>(top[a])]);
                const auto pb = static_cast<size_t>(position[static_cast<size_t>(top[b])]);
                const double df = static_cast<double>(d1[pb]);
                if (df == 0.0)
                    throw ComputeError("coherence undefined: top object " +
                                       std::to_string(top[b]) + " occurs in no document");
                const double co = static_cast<double>(d2[pa * u + pb]);
                total += std::log((co + eps) / df);
            }
        }
    }
    return total / static_cast<double>(k);
}

std::string metrics_csv_header() {
    return "method,K,recovery,approximation,dominancy,specificity,dissimilarity,coherence";
}

std::string metrics_csv_row(const MetricsReport& r) {
    std::string row = r.method + "," + std::to_string(r.K);
    for (double v : {r.recovery, r.approximation, r.dominancy, r.specificity,
                     r.dissimilarity, r.coherence})
        row += "," + format_double(v);
    return row;
}

void append_metrics_csv(const std::string& path, const MetricsReport& report) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot open for writing: " + path);
    if (fresh) out << metrics_csv_header() << '\n';
    out << metrics_csv_row(report) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_metrics_json(const std::string& path, const MetricsReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["K"] = r.K;
    j["N"] = r.N;
    j["recovery"] = r.recovery;
    j["approximation"] = r.approximation;
    j["dominancy"] = r.dominancy_defined ? nlohmann::json(r.dominancy) : nlohmann::json();
    j["dominancy_defined"] = r.dominancy_defined;
    j["specificity"] =
        r.specificity_finite ? nlohmann::json(r.specificity) : nlohmann::json();
    j["specificity_finite"] = r.specificity_finite;
    j["dissimilarity"] = r.dissimilarity;
    j["coherence"] = r.coherence;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace jsmf
