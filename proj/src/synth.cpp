#include "jsmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "jsmf/error.hpp"
#include "jsmf/parallel.hpp"

namespace jsmf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for document m under the run seed.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 1)));
}

Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& alpha, std::mt19937_64& rng) {
    Eigen::VectorXd w(alpha.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        std::gamma_distribution<double> gamma(alpha(i), 1.0);
        w(i) = gamma(rng);
        total += w(i);
    }
    if (total <= 0.0) {
        // All gammas underflowed (very small alpha); fall back to a vertex.
        std::uniform_int_distribution<Eigen::Index> pick(0, alpha.size() - 1);
        w.setZero();
        w(pick(rng)) = 1.0;
        return w;
    }
    return w / total;
}

// Multinomial via a chain of conditional binomials.
void draw_multinomial(const Eigen::VectorXd& p, std::int64_t n, std::mt19937_64& rng,
                      std::vector<std::pair<std::int32_t, std::int32_t>>& out) {
    out.clear();
    std::int64_t remaining = n;
    double mass = 1.0;
    for (Eigen::Index i = 0; i < p.size() && remaining > 0; ++i) {
        const double pi = p(i);
        if (pi <= 0.0) continue;
        std::int64_t draw;
        if (pi >= mass) {
            draw = remaining;
        } else {
            std::binomial_distribution<std::int64_t> bin(remaining, std::min(1.0, pi / mass));
            draw = bin(rng);
        }
        if (draw > 0)
            out.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(draw));
        remaining -= draw;
        mass -= pi;
        if (mass <= 0.0) break;
    }
    if (remaining > 0 && !out.empty()) out.back().second += static_cast<std::int32_t>(remaining);
}

}  // namespace

PlantedBasis generate_planted(int n, int k, double anchor_weight, std::uint64_t seed,
                              double fill_concentration) {
    if (n < 1 || k < 1 || k > n) throw ComputeError("planted basis requires 1 <= K <= N");
    if (!(anchor_weight > 0.0) || anchor_weight > 1.0)
        throw ComputeError("anchor_weight must lie in (0, 1]");
    if (!(fill_concentration > 0.0)) throw ComputeError("fill_concentration must be positive");

    PlantedBasis out;
    std::mt19937_64 rng(splitmix64(seed));

    // K distinct anchor rows, assigned to columns in ascending order.
    std::vector<std::int32_t> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    out.anchors.assign(all.begin(), all.begin() + k);
    std::sort(out.anchors.begin(), out.anchors.end());

    out.B = Eigen::MatrixXd::Zero(n, k);
    if (n == k) {
        for (int c = 0; c < k; ++c) out.B(out.anchors[static_cast<size_t>(c)], c) = 1.0;
        return out;
    }

    std::vector<bool> is_anchor(static_cast<size_t>(n), false);
    for (std::int32_t a : out.anchors) is_anchor[static_cast<size_t>(a)] = true;
    std::vector<std::int32_t> free_rows;
    for (std::int32_t i = 0; i < n; ++i)
        if (!is_anchor[static_cast<size_t>(i)]) free_rows.push_back(i);

    const Eigen::VectorXd fill = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(free_rows.size()), fill_concentration);
    for (int c = 0; c < k; ++c) {
        out.B(out.anchors[static_cast<size_t>(c)], c) = anchor_weight;
        const Eigen::VectorXd rest = draw_dirichlet(fill, rng);
        for (size_t t = 0; t < free_rows.size(); ++t)
            out.B(free_rows[t], c) = (1.0 - anchor_weight) * rest(static_cast<Eigen::Index>(t));
    }
    return out;
}

DocLengthLaw DocLengthLaw::constant(int length) {
    DocLengthLaw law;
    law.kind = Kind::Constant;
    law.constant_length = length;
    return law;
}

DocLengthLaw DocLengthLaw::shifted_poisson(int shift, double mean) {
    DocLengthLaw law;
    law.kind = Kind::ShiftedPoisson;
    law.shift = shift;
    law.poisson_mean = mean;
    return law;
}

SyntheticCorpus sample_corpus(const Eigen::MatrixXd& B_true, const Eigen::VectorXd& alpha,
                              std::int64_t num_documents, const DocLengthLaw& law,
                              std::uint64_t seed, int threads,
                              const std::vector<std::string>* labels) {
    const Eigen::Index n = B_true.rows();
    const Eigen::Index k = B_true.cols();
    if (alpha.size() != k) throw ComputeError("alpha dimension does not match B columns");
    if ((alpha.array() <= 0.0).any()) throw ComputeError("alpha must be positive elementwise");
    if (num_documents < 1) throw ComputeError("need at least one document");
    if (law.kind == DocLengthLaw::Kind::Constant && law.constant_length < 2)
        throw ComputeError("constant document length must be >= 2");
    if (law.kind == DocLengthLaw::Kind::ShiftedPoisson && law.shift < 2)
        throw ComputeError("shifted-Poisson document length needs shift >= 2");

    SyntheticCorpus out;
    out.W.resize(k, num_documents);
    out.corpus.documents.resize(static_cast<size_t>(num_documents));
    if (labels && static_cast<Eigen::Index>(labels->size()) == n) {
        out.corpus.vocabulary = *labels;
    } else {
        out.corpus.vocabulary.resize(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            out.corpus.vocabulary[static_cast<size_t>(i)] = "obj" + std::to_string(i);
    }

    parallel_for(num_documents, threads, [&](std::int64_t m) {
        std::mt19937_64 rng = stream_rng(seed, static_cast<std::uint64_t>(m));
        const Eigen::VectorXd w = draw_dirichlet(alpha, rng);
        out.W.col(m) = w;
        std::int64_t length = law.kind == DocLengthLaw::Kind::Constant
                                  ? law.constant_length
                                  : law.shift + std::poisson_distribution<std::int64_t>(
                                                    law.poisson_mean)(rng);
        const Eigen::VectorXd p = B_true * w;
        Document& doc = out.corpus.documents[static_cast<size_t>(m)];
        draw_multinomial(p, length, rng, doc.counts);
        doc.recompute_length();
    });

    out.corpus.recompute_doc_freq();
    out.A_M_star = (out.W * out.W.transpose()) / static_cast<double>(num_documents);
    return out;
}

Eigen::MatrixXd exact_posterior(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A) {
    if (B.cols() != A.rows() || A.rows() != A.cols())
        throw ComputeError("dimension mismatch forming B A B^T");
    return B * A * B.transpose();
}

Eigen::MatrixXd dirichlet_second_moment(const Eigen::VectorXd& alpha) {
    if ((alpha.array() <= 0.0).any()) throw ComputeError("alpha must be positive elementwise");
    const double a0 = alpha.sum();
    Eigen::MatrixXd m = alpha * alpha.transpose();
    m.diagonal() += alpha;
    return m / (a0 * (a0 + 1.0));
}

SemiSyntheticResult semi_synthetic(const Corpus& source, const Eigen::MatrixXd& B_learned,
                                   const Eigen::VectorXd& alpha, std::uint64_t seed,
                                   int threads) {
    const Eigen::Index n = B_learned.rows();
    const Eigen::Index k = B_learned.cols();
    if (n != source.num_objects())
        throw ComputeError("B rows do not match the source vocabulary");
    if (alpha.size() != k) throw ComputeError("alpha dimension does not match B columns");

    // Plant anchors: each column claims its strongest not-yet-claimed row,
    // that row's other entries drop to zero, then columns renormalize.
    Eigen::MatrixXd b = B_learned;
    std::vector<std::int32_t> anchors(static_cast<size_t>(k), -1);
    std::vector<bool> claimed(static_cast<size_t>(n), false);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index best = -1;
        double best_val = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (claimed[static_cast<size_t>(i)]) continue;
            if (b(i, c) > best_val) {
                best_val = b(i, c);
                best = i;
            }
        }
        if (best < 0 || !(best_val > 0.0))
            throw ComputeError("cannot plant an anchor for cluster " + std::to_string(c));
        anchors[static_cast<size_t>(c)] = static_cast<std::int32_t>(best);
        claimed[static_cast<size_t>(best)] = true;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index a = anchors[static_cast<size_t>(c)];
        for (Eigen::Index o = 0; o < k; ++o)
            if (o != c) b(a, o) = 0.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        const double mass = b.col(c).sum();
        if (!(mass > 0.0)) throw ComputeError("cluster " + std::to_string(c) + " lost all mass");
        b.col(c) /= mass;
    }

    // Regenerate with the source's own document lengths.
    SemiSyntheticResult out;
    const std::int64_t m_docs = source.num_documents();
    out.model.B_true = b;
    out.model.alpha = alpha;
    out.model.anchors = anchors;
    out.model.W.resize(k, m_docs);
    out.corpus.vocabulary = source.vocabulary;
    out.corpus.documents.resize(static_cast<size_t>(m_docs));

    parallel_for(m_docs, threads, [&](std::int64_t m) {
        std::mt19937_64 rng = stream_rng(seed, static_cast<std::uint64_t>(m));
        const Eigen::VectorXd w = draw_dirichlet(alpha, rng);
        out.model.W.col(m) = w;
        const Eigen::VectorXd p = b * w;
        Document& doc = out.corpus.documents[static_cast<size_t>(m)];
        draw_multinomial(p, source.documents[static_cast<size_t>(m)].length, rng, doc.counts);
        doc.recompute_length();
    });

    out.corpus.recompute_doc_freq();
    out.model.A_M_star = (out.model.W * out.model.W.transpose()) / static_cast<double>(m_docs);
    return out;
}

std::vector<int> match_columns(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols())
        throw ComputeError("column matching requires equal shapes");
    const int k = static_cast<int>(X.cols());
    Eigen::MatrixXd cost(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            cost(i, j) = (X.col(i) - Y.col(j)).lpNorm<1>();

    // Hungarian algorithm with potentials, O(k^3).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(k) + 1, 0.0), v(static_cast<size_t>(k) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(k) + 1, 0);  // column j -> row
    std::vector<int> way(static_cast<size_t>(k) + 1, 0);
    for (int i = 1; i <= k; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(k) + 1, inf);
        std::vector<bool> used(static_cast<size_t>(k) + 1, false);
        do {
            used[static_cast<size_t>(j0)] = true;
            const int i0 = match[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= k; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= k; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> result(static_cast<size_t>(k), -1);
    for (int j = 1; j <= k; ++j)
        if (match[static_cast<size_t>(j)] > 0) result[static_cast<size_t>(match[static_cast<size_t>(j)]) - 1] = j - 1;
    return result;
}

double matched_l1_distance(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    const std::vector<int> perm = match_columns(X, Y);
    double total = 0.0;
    for (size_t i = 0; i < perm.size(); ++i)
        total += (X.col(static_cast<Eigen::Index>(i)) - Y.col(perm[i])).lpNorm<1>();
    return total / static_cast<double>(perm.size());
}

void write_planted_json(const PlantedModel& model, const std::string& path) {
    nlohmann::json j;
    j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
    j["anchors"] = model.anchors;
    j["K"] = model.B_true.cols();
    j["N"] = model.B_true.rows();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace jsmf
