#include "jsmf/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "jsmf/error.hpp"
#include "jsmf/io.hpp"
#include "jsmf/rectify.hpp"

namespace jsmf {

namespace {

// Compressed rows of Cbar; dense inputs simply carry full support.
struct SparseRows {
    std::vector<std::vector<std::int32_t>> cols;
    std::vector<std::vector<double>> vals;

    explicit SparseRows(const Eigen::MatrixXd& m) {
        const Eigen::Index n = m.rows();
        cols.resize(static_cast<size_t>(n));
        vals.resize(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                if (v != 0.0) {
                    cols[static_cast<size_t>(i)].push_back(static_cast<std::int32_t>(j));
                    vals[static_cast<size_t>(i)].push_back(v);
                }
            }
        }
    }

    double dot_dense(size_t row, const Eigen::VectorXd& q) const {
        double acc = 0.0;
        const auto& c = cols[row];
        const auto& v = vals[row];
        for (size_t t = 0; t < c.size(); ++t) acc += v[t] * q(c[t]);
        return acc;
    }

    double squared_norm(size_t row) const {
        double acc = 0.0;
        for (double v : vals[row]) acc += v * v;
        return acc;
    }

    void add_to(size_t row, Eigen::VectorXd& target) const {
        const auto& c = cols[row];
        const auto& v = vals[row];
        for (size_t t = 0; t < c.size(); ++t) target(c[t]) += v[t];
    }
};

}  // namespace

AnchorSet select_anchors(const Eigen::MatrixXd& Cbar, int k,
                         const std::vector<std::int32_t>& exclude) {
    const Eigen::Index n = Cbar.rows();
    if (k < 1 || static_cast<Eigen::Index>(k) > n)
        throw ComputeError("anchor selection requires 1 <= K <= N");

    const SparseRows rows(Cbar);
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) residual(i) = rows.squared_norm(static_cast<size_t>(i));

    AnchorSet out;
    out.basis.resize(k, Cbar.cols());
    std::vector<bool> selected(static_cast<size_t>(n), false);
    for (std::int32_t banned : exclude)
        if (banned >= 0 && banned < n) selected[static_cast<size_t>(banned)] = true;

    for (int step = 0; step < k; ++step) {
        Eigen::Index pivot = -1;
        double best = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (selected[static_cast<size_t>(i)]) continue;
            if (pivot < 0 || residual(i) > best) {
                pivot = i;
                best = residual(i);
            }
        }
        if (pivot < 0 || best <= 1e-12)
            throw ComputeError("effective rank below K: max residual " +
                               format_double(pivot < 0 ? 0.0 : best) + " at pivot " +
                               std::to_string(step));

        // Orthonormalize the pivot row against the basis (two passes).
        Eigen::VectorXd q = Eigen::VectorXd::Zero(Cbar.cols());
        rows.add_to(static_cast<size_t>(pivot), q);
        for (int pass = 0; pass < 2 && step > 0; ++pass) {
            const auto basis = out.basis.topRows(step);
            q.noalias() -= basis.transpose() * (basis * q);
        }
        const double norm = q.norm();
        if (norm <= 1e-12)
            throw ComputeError("effective rank below K: pivot row " + std::to_string(pivot) +
                               " is numerically in the current span");
        q /= norm;

        out.indices.push_back(static_cast<std::int32_t>(pivot));
        out.residual_norms.push_back(std::sqrt(best));
        out.basis.row(step) = q.transpose();
        selected[static_cast<size_t>(pivot)] = true;

        // Downdate squared residuals by the projection onto q; clamp the
        // rounding underflow at zero.
        for (Eigen::Index i = 0; i < n; ++i) {
            if (selected[static_cast<size_t>(i)]) continue;
            const double proj = rows.dot_dense(static_cast<size_t>(i), q);
            residual(i) = std::max(0.0, residual(i) - proj * proj);
        }
        residual(pivot) = 0.0;
    }
    return out;
}

void write_anchors_json(const AnchorSet& anchors, const std::vector<std::string>& labels,
                        const std::string& path) {
    nlohmann::json j;
    j["indices"] = anchors.indices;
    std::vector<std::string> anchor_labels;
    for (std::int32_t idx : anchors.indices) {
        anchor_labels.push_back(idx >= 0 && static_cast<size_t>(idx) < labels.size()
                                    ? labels[static_cast<size_t>(idx)]
                                    : std::string());
    }
    j["labels"] = anchor_labels;
    j["residual_norms"] = anchors.residual_norms;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

AnchorSet read_anchors_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad anchor json " + path + ": " + e.what());
    }
    AnchorSet anchors;
    anchors.indices = j.at("indices").get<std::vector<std::int32_t>>();
    if (j.contains("residual_norms"))
        anchors.residual_norms = j.at("residual_norms").get<std::vector<double>>();
    return anchors;
}

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& Cbar) {
    const Eigen::Index n = Cbar.rows();
    if (n < 2) throw ComputeError("2D embedding requires at least 2 rows");

    const Eigen::RowVectorXd mean = Cbar.colwise().mean();
    const Eigen::MatrixXd centered = Cbar.rowwise() - mean;

    // Top-2 eigenvectors of X^T X through matvecs; no need to form the Gram.
    MatVec op = [&centered](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        y.noalias() = centered.transpose() * (centered * x);
    };
    EigOptions opts;
    opts.tolerance = 1e-12;
    const TruncatedEig pcs = truncated_eig_lanczos(op, Cbar.cols(), 2, opts);

    Eigen::MatrixXd components = pcs.vectors;
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
        Eigen::Index arg = 0;
        components.col(c).cwiseAbs().maxCoeff(&arg);
        if (components(arg, c) < 0.0) components.col(c) = -components.col(c);
    }
    return centered * components;
}

void export_embedding(const Eigen::MatrixXd& Cbar, const AnchorSet& anchors,
                      const std::vector<std::string>& labels, const std::string& out_path) {
    const Eigen::MatrixXd coords = pca_2d(Cbar);
    std::vector<bool> is_anchor(static_cast<size_t>(Cbar.rows()), false);
    for (std::int32_t idx : anchors.indices)
        if (idx >= 0 && idx < Cbar.rows()) is_anchor[static_cast<size_t>(idx)] = true;

    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    out << "index,label,x,y,is_anchor\n";
    for (Eigen::Index i = 0; i < Cbar.rows(); ++i) {
        const std::string label =
            static_cast<size_t>(i) < labels.size() ? labels[static_cast<size_t>(i)] : "";
        out << i << ',' << label << ',' << format_double(coords(i, 0)) << ','
            << format_double(coords(i, 1)) << ',' << (is_anchor[static_cast<size_t>(i)] ? 1 : 0)
            << '\n';
    }
    if (!out) throw IoError("write failed: " + out_path);
}

}  // namespace jsmf
