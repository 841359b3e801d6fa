#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "jsmf/anchors.hpp"
#include "jsmf/cooccur.hpp"
#include "jsmf/error.hpp"
#include "jsmf/synth.hpp"
#include "support/test_helpers.hpp"

using namespace jsmf;

namespace {

// Reference dense pivoted Gram-Schmidt: keeps explicit residual vectors and
// recomputes their norms every step.
std::vector<int> reference_pivot_sequence(const Eigen::MatrixXd& m, int k) {
    Eigen::MatrixXd residual = m;
    std::vector<bool> used(static_cast<size_t>(m.rows()), false);
    std::vector<int> pivots;
    for (int step = 0; step < k; ++step) {
        int best = -1;
        double best_norm = -1.0;
        for (int i = 0; i < m.rows(); ++i) {
            if (used[static_cast<size_t>(i)]) continue;
            const double nrm = residual.row(i).squaredNorm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = i;
            }
        }
        REQUIRE(best >= 0);
        // Every unselected row's residual is dominated by the pivot's.
        for (int i = 0; i < m.rows(); ++i)
            if (!used[static_cast<size_t>(i)])
                CHECK(residual.row(i).squaredNorm() <= best_norm + 1e-15);
        used[static_cast<size_t>(best)] = true;
        pivots.push_back(best);
        const Eigen::RowVectorXd q = residual.row(best) / residual.row(best).norm();
        for (int i = 0; i < m.rows(); ++i) {
            if (used[static_cast<size_t>(i)]) continue;
            residual.row(i) -= residual.row(i).dot(q) * q;
        }
        residual.row(best).setZero();
    }
    return pivots;
}

}  // namespace

TEST_CASE("select_anchors hand-run example") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 0, 0, 0, 1, 0, .5, .5, 0;
    const AnchorSet s = select_anchors(m, 2);
    CHECK(s.indices == std::vector<std::int32_t>{0, 1});
    CHECK(s.residual_norms[0] == doctest::Approx(1.0));
    CHECK(s.residual_norms[1] == doctest::Approx(1.0));
}

TEST_CASE("select_anchors on the identity picks indices in order") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
    const AnchorSet s = select_anchors(eye, 5);
    CHECK(s.indices == std::vector<std::int32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("select_anchors recovers planted anchors from the exact posterior") {
    const PlantedBasis planted = generate_planted(40, 5, 0.4, 3);
    const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(5, 0.3);
    const Eigen::MatrixXd c_star = exact_posterior(planted.B, dirichlet_second_moment(alpha));
    const RowNormalized rn = row_normalize(c_star);
    const AnchorSet s = select_anchors(rn.Cbar, 5);
    std::vector<std::int32_t> sorted = s.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == planted.anchors);
}

TEST_CASE("select_anchors basis is orthonormal and errors below rank") {
    const Eigen::MatrixXd m = testing::random_row_stochastic(20, 20, 8);
    const AnchorSet s = select_anchors(m, 6);
    const Eigen::MatrixXd gram = s.basis * s.basis.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd rank2(6, 4);
    rank2.setZero();
    rank2.col(0).setConstant(0.5);
    rank2.col(1).setConstant(0.5);
    rank2.row(0) << 1, 0, 0, 0;
    CHECK_THROWS_WITH_AS(select_anchors(rank2, 4), doctest::Contains("effective rank below"),
                         ComputeError);
}

TEST_CASE("select_anchors matches the dense reference on 100 random instances") {
    int matches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd m =
            testing::random_row_stochastic(50, 50, 1000 + static_cast<std::uint64_t>(trial));
        const int k = 12;
        const AnchorSet s = select_anchors(m, k);
        const std::vector<int> ref = reference_pivot_sequence(m, k);
        bool same = true;
        for (int i = 0; i < k; ++i)
            if (s.indices[static_cast<size_t>(i)] != ref[static_cast<size_t>(i)]) same = false;
        if (same) ++matches;
    }
    CHECK(matches == 100);
}

TEST_CASE("select_anchors is permutation covariant on tie-free instances") {
    const Eigen::MatrixXd m = testing::random_row_stochastic(30, 30, 77);
    const int k = 8;
    const AnchorSet base = select_anchors(m, k);

    std::mt19937_64 rng(5);
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd permuted(30, 30);
    for (int i = 0; i < 30; ++i) permuted.row(perm[static_cast<size_t>(i)]) = m.row(i);

    const AnchorSet shuffled = select_anchors(permuted, k);
    for (int i = 0; i < k; ++i)
        CHECK(shuffled.indices[static_cast<size_t>(i)] ==
              perm[static_cast<size_t>(base.indices[static_cast<size_t>(i)])]);
}

TEST_CASE("anchors json round trip") {
    const Eigen::MatrixXd m = testing::random_row_stochastic(10, 10, 2);
    const AnchorSet s = select_anchors(m, 3);
    const auto dir = testing::temp_dir("anchors");
    std::vector<std::string> labels;
    for (int i = 0; i < 10; ++i) labels.push_back("obj" + std::to_string(i));
    write_anchors_json(s, labels, (dir / "a.json").string());
    const AnchorSet back = read_anchors_json((dir / "a.json").string());
    CHECK(back.indices == s.indices);
    REQUIRE(back.residual_norms.size() == s.residual_norms.size());
    for (size_t i = 0; i < s.residual_norms.size(); ++i)
        CHECK(back.residual_norms[i] == doctest::Approx(s.residual_norms[i]));
}

TEST_CASE("pca_2d centers coordinates and captures rank-2 structure exactly") {
    // Centered part has rank 2 by construction.
    const int n = 20;
    Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
    a.array() -= a.mean();
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = std::sin(0.7 * i);
    b.array() -= b.mean();
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Random(n);
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Random(n);
    const Eigen::RowVectorXd mean = Eigen::RowVectorXd::Constant(n, 0.3);
    const Eigen::MatrixXd x =
        Eigen::VectorXd::Ones(n) * mean + a * u + b * v;

    const Eigen::MatrixXd coords = pca_2d(x);
    REQUIRE(coords.rows() == n);
    REQUIRE(coords.cols() == 2);
    CHECK(std::abs(coords.col(0).mean()) <= 1e-10);
    CHECK(std::abs(coords.col(1).mean()) <= 1e-10);

    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    // Orthonormal components: captured variance equals total variance when
    // the reconstruction is exact.
    CHECK(std::abs(centered.squaredNorm() - coords.squaredNorm()) <=
          1e-8 * std::max(1.0, centered.squaredNorm()));
}

TEST_CASE("pca_2d agrees with a dense SVD oracle up to sign") {
    const Eigen::MatrixXd m = testing::random_row_stochastic(50, 50, 9);
    const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::MatrixXd coords = pca_2d(m);
    for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd oracle = centered * svd.matrixV().col(c);
        const double diff_plus = (coords.col(c) - oracle).norm();
        const double diff_minus = (coords.col(c) + oracle).norm();
        CHECK(std::min(diff_plus, diff_minus) <= 1e-8 * std::max(1.0, oracle.norm()));
    }
}

TEST_CASE("export_embedding writes one row per object and errors on tiny input") {
    const Eigen::MatrixXd m = testing::random_row_stochastic(8, 8, 4);
    const AnchorSet s = select_anchors(m, 2);
    std::vector<std::string> labels;
    for (int i = 0; i < 8; ++i) labels.push_back("w" + std::to_string(i));
    const auto dir = testing::temp_dir("embed");
    export_embedding(m, s, labels, (dir / "e.csv").string());

    std::ifstream in(dir / "e.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,label,x,y,is_anchor");
    int rows = 0, anchor_rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        if (line.back() == '1') ++anchor_rows;
    }
    CHECK(rows == 8);
    CHECK(anchor_rows == 2);

    CHECK_THROWS_AS(pca_2d(Eigen::MatrixXd::Ones(1, 1)), ComputeError);
}
