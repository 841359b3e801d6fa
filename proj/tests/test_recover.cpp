#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "jsmf/anchors.hpp"
#include "jsmf/cooccur.hpp"
#include "jsmf/error.hpp"
#include "jsmf/recover.hpp"
#include "jsmf/synth.hpp"
#include "support/test_helpers.hpp"

using namespace jsmf;

namespace {

Eigen::MatrixXd random_anchor_rows(int k, int n, std::uint64_t seed) {
    return testing::random_row_stochastic(k, n, seed);
}

}  // namespace

TEST_CASE("recover_row returns the vertex when the target is an anchor row") {
    // Step size scales with the squared row norms, which shrink like 1/N;
    // these few-dimensional rows need a larger eta than the corpus default.
    const Eigen::MatrixXd rows = random_anchor_rows(4, 12, 3);
    EGConfig cfg;
    cfg.step_size = 200.0;
    cfg.max_iterations = 5000;
    cfg.kkt_tolerance = 1e-14;
    const EGResult r = recover_row(rows.row(1).transpose(), rows, cfg);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
    expected(1) = 1.0;
    CHECK((r.coefficients - expected).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("recover_row recovers a planted convex combination") {
    const Eigen::MatrixXd rows = random_anchor_rows(4, 15, 8);
    const Eigen::VectorXd target =
        (0.5 * rows.row(0) + 0.5 * rows.row(1)).transpose();
    EGConfig cfg;
    cfg.step_size = 200.0;
    cfg.max_iterations = 5000;
    cfg.kkt_tolerance = 1e-14;
    const EGResult r = recover_row(target, rows, cfg);
    Eigen::VectorXd expected(4);
    expected << .5, .5, 0, 0;
    CHECK((r.coefficients - expected).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("recover_row with a single anchor is the trivial simplex") {
    const Eigen::MatrixXd rows = random_anchor_rows(1, 10, 4);
    const EGResult r = recover_row(testing::random_simplex(10, 5), rows);
    REQUIRE(r.coefficients.size() == 1);
    CHECK(r.coefficients(0) == 1.0);
    CHECK(r.converged);
}

TEST_CASE("recover_row iterates stay on the simplex and the objective is monotone") {
    const Eigen::MatrixXd rows = random_anchor_rows(6, 20, 12);
    const Eigen::VectorXd target = testing::random_simplex(20, 13);
    const Eigen::MatrixXd gram = rows * rows.transpose();
    const Eigen::VectorXd h = rows * target;
    for (int iters = 1; iters <= 40; ++iters) {
        EGConfig cfg;
        cfg.max_iterations = iters;
        cfg.kkt_tolerance = 0.0;  // never stop early
        const EGResult r = recover_row_gram(gram, h, target.squaredNorm(), cfg);
        CHECK(r.coefficients.minCoeff() >= 0.0);
        CHECK(r.coefficients.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.monotone);
    }
}

TEST_CASE("EG satisfies KKT with monotone objective on random rows") {
    // Unit-scale version of the solver check: 200 random rows at the default
    // step size.
    const int k = 10, n = 100;
    const Eigen::MatrixXd rows = random_anchor_rows(k, n, 21);
    EGConfig cfg;
    cfg.max_iterations = 500;
    cfg.kkt_tolerance = 1e-7;
    int bad = 0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::VectorXd target = testing::random_simplex(n, 500 + static_cast<std::uint64_t>(t));
        const EGResult r = recover_row(target, rows, cfg);
        if (!r.monotone || r.kkt_residual > 1e-6) ++bad;
    }
    CHECK(bad <= 2);  // >= 99% of rows
}

TEST_CASE("recover_theta is deterministic across thread counts") {
    const Eigen::MatrixXd cbar = testing::random_row_stochastic(30, 30, 31);
    const AnchorSet anchors = select_anchors(cbar, 5);
    const Eigen::MatrixXd t1 = recover_theta(cbar, anchors, {}, 1);
    const Eigen::MatrixXd t4 = recover_theta(cbar, anchors, {}, 4);
    CHECK((t1 - t4).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < t1.rows(); ++i)
        CHECK(t1.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("recover_B applies Bayes rule") {
    SUBCASE("identity") {
        const Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(3, 3);
        const Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
        CHECK((recover_B(theta, p) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
              0.0);
    }
    SUBCASE("degenerate column errors") {
        Eigen::MatrixXd theta(2, 2);
        theta << 1, 0, 1, 0;
        Eigen::VectorXd p(2);
        p << .3, .7;
        CHECK_THROWS_WITH_AS(recover_B(theta, p), doctest::Contains("received no probability"),
                             ComputeError);
    }
    SUBCASE("identity check on random input") {
        const Eigen::MatrixXd theta = testing::random_row_stochastic(10, 4, 6);
        const Eigen::VectorXd p = testing::random_simplex(10, 7);
        const Eigen::MatrixXd b = recover_B(theta, p);
        for (int k = 0; k < 4; ++k) {
            CHECK(b.col(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
            const double mass = (theta.col(k).array() * p.array()).sum();
            for (int i = 0; i < 10; ++i)
                CHECK(b(i, k) * mass == doctest::Approx(theta(i, k) * p(i)).epsilon(1e-12));
        }
        CHECK(b.minCoeff() >= 0.0);
    }
}

TEST_CASE("recover_A_anchor inverts the diagonal submatrix") {
    SUBCASE("identity anchor block gives the plain submatrix") {
        const int n = 8, k = 3;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, k);
        b.row(0) = Eigen::RowVector3d(1, 0, 0);
        b.row(3) = Eigen::RowVector3d(0, 1, 0);
        b.row(5) = Eigen::RowVector3d(0, 0, 1);
        const std::vector<std::int32_t> s{0, 3, 5};
        const Eigen::MatrixXd c = testing::random_symmetric(n, 40).cwiseAbs();
        const Eigen::MatrixXd a = recover_A_anchor(c, s, b);
        for (int r = 0; r < k; ++r)
            for (int cc = 0; cc < k; ++cc)
                CHECK(a(r, cc) == c(s[static_cast<size_t>(r)], s[static_cast<size_t>(cc)]));
    }
    SUBCASE("forward construction inverts exactly") {
        const PlantedBasis planted = generate_planted(20, 4, 0.35, 50);
        const Eigen::MatrixXd a0 =
            dirichlet_second_moment(Eigen::VectorXd::Constant(4, 0.4));
        const Eigen::MatrixXd c_star = exact_posterior(planted.B, a0);
        const Eigen::MatrixXd a =
            recover_A_anchor(c_star, planted.anchors, planted.B);
        CHECK((a - a0).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("vanishing anchor probability raises") {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
        b(0, 0) = 0.5;
        b(2, 0) = 0.5;
        b(1, 1) = 0.0;  // anchor row 1 carries no mass for its own topic
        b(3, 1) = 1.0;
        const std::vector<std::int32_t> s{0, 1};
        const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 4, 0.1);
        CHECK_THROWS_WITH_AS(recover_A_anchor(c, s, b),
                             doctest::Contains("vanishing topic probability"), ComputeError);
    }
}

TEST_CASE("recover_A_lsq behaviors") {
    SUBCASE("consistent system recovers A exactly") {
        const PlantedBasis planted = generate_planted(15, 3, 0.4, 60);
        const Eigen::MatrixXd a0 =
            dirichlet_second_moment(Eigen::VectorXd::Constant(3, 0.7));
        const Eigen::MatrixXd c = exact_posterior(planted.B, a0);
        const Eigen::MatrixXd a = recover_A_lsq(c, planted.B);
        CHECK((a - a0).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("orthonormal B reduces to congruence") {
        Eigen::MatrixXd b(4, 2);
        b << 1, 0, 0, 1, 0, 0, 0, 0;
        const Eigen::MatrixXd c = testing::random_symmetric(4, 61);
        const Eigen::MatrixXd a = recover_A_lsq(c, b);
        CHECK((a - b.transpose() * c * b).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("rank-deficient B raises") {
        Eigen::MatrixXd b(4, 2);
        b.col(0).setConstant(0.25);
        b.col(1).setConstant(0.25);
        const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(4, 4);
        CHECK_THROWS_WITH_AS(recover_A_lsq(c, b), doctest::Contains("rank deficient"),
                             ComputeError);
    }
    SUBCASE("noisy baseline inference produces a negative entry") {
        // Seeded instance exhibiting the indefinite least-squares pathology.
        const int n = 100, k = 10;
        const PlantedBasis planted = generate_planted(n, k, 0.15, 1, 0.25);
        Eigen::VectorXd alpha(k);
        for (int i = 0; i < k; ++i) alpha(i) = 2.0 * std::pow(0.55, i);
        const SyntheticCorpus sc =
            sample_corpus(planted.B, alpha, 250, DocLengthLaw::constant(15), 107, 4);
        const Eigen::MatrixXd c = build_cooccurrence(sc.corpus, 4);
        const RowNormalized rn = row_normalize(c);
        const AnchorSet anchors = select_anchors(rn.Cbar, k, rn.zero_rows);
        const Eigen::MatrixXd theta = recover_theta(rn.Cbar, anchors, {}, 4);
        const Eigen::MatrixXd b = recover_B(theta, rn.p_X);
        const Eigen::MatrixXd a = recover_A_lsq(c, b);
        CHECK(a.minCoeff() < 0.0);
    }
}

TEST_CASE("noiseless planted pipeline reproduces B and A") {
    const int n = 30, k = 4;
    const PlantedBasis planted = generate_planted(n, k, 0.35, 70);
    const Eigen::MatrixXd a0 = dirichlet_second_moment(Eigen::VectorXd::Constant(k, 0.5));
    const Eigen::MatrixXd c_star = exact_posterior(planted.B, a0);
    const RowNormalized rn = row_normalize(c_star);
    const AnchorSet anchors = select_anchors(rn.Cbar, k);

    EGConfig cfg;
    cfg.max_iterations = 5000;
    cfg.kkt_tolerance = 1e-12;
    const Eigen::MatrixXd theta = recover_theta(rn.Cbar, anchors, cfg, 2);
    const Eigen::MatrixXd b = recover_B(theta, rn.p_X);
    const Eigen::MatrixXd a = recover_A_anchor(c_star, anchors.indices, b);

    // Column order follows the pivot order; match through the planted anchors.
    Eigen::MatrixXd b_matched(n, k), a_matched(k, k);
    std::vector<int> to_true(static_cast<size_t>(k), -1);
    for (int j = 0; j < k; ++j) {
        const auto it = std::find(planted.anchors.begin(), planted.anchors.end(),
                                  anchors.indices[static_cast<size_t>(j)]);
        REQUIRE(it != planted.anchors.end());
        to_true[static_cast<size_t>(j)] = static_cast<int>(it - planted.anchors.begin());
    }
    for (int j = 0; j < k; ++j) b_matched.col(to_true[static_cast<size_t>(j)]) = b.col(j);
    for (int r = 0; r < k; ++r)
        for (int c2 = 0; c2 < k; ++c2)
            a_matched(to_true[static_cast<size_t>(r)], to_true[static_cast<size_t>(c2)]) = a(r, c2);

    CHECK((b_matched - planted.B).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((a_matched - a0).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("anchor permutation permutes the factors and leaves B A B^T invariant") {
    const Eigen::MatrixXd cbar = testing::random_row_stochastic(25, 25, 90);
    const Eigen::MatrixXd craw = cbar / 25.0;  // consistent joint matrix
    const RowNormalized rn = row_normalize(craw);
    AnchorSet anchors = select_anchors(rn.Cbar, 4);

    EGConfig cfg;
    cfg.max_iterations = 2000;
    cfg.kkt_tolerance = 1e-10;
    const Eigen::MatrixXd theta = recover_theta(rn.Cbar, anchors, cfg, 1);
    const Eigen::MatrixXd b = recover_B(theta, rn.p_X);
    const Eigen::MatrixXd a = recover_A_anchor(craw, anchors.indices, b);

    AnchorSet permuted = anchors;
    const std::vector<int> perm{2, 0, 3, 1};
    for (int j = 0; j < 4; ++j)
        permuted.indices[static_cast<size_t>(j)] =
            anchors.indices[static_cast<size_t>(perm[static_cast<size_t>(j)])];
    const Eigen::MatrixXd theta_p = recover_theta(rn.Cbar, permuted, cfg, 1);
    const Eigen::MatrixXd b_p = recover_B(theta_p, rn.p_X);
    const Eigen::MatrixXd a_p = recover_A_anchor(craw, permuted.indices, b_p);

    for (int j = 0; j < 4; ++j) {
        CHECK((b_p.col(j) - b.col(perm[static_cast<size_t>(j)])).cwiseAbs().maxCoeff() <= 1e-10);
        for (int i = 0; i < 4; ++i)
            CHECK(a_p(j, i) == doctest::Approx(a(perm[static_cast<size_t>(j)],
                                                 perm[static_cast<size_t>(i)]))
                                   .epsilon(1e-10));
    }
    const Eigen::MatrixXd recon = b * a * b.transpose();
    const Eigen::MatrixXd recon_p = b_p * a_p * b_p.transpose();
    CHECK((recon - recon_p).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("top_objects breaks ties toward the lower index") {
    Eigen::VectorXd w(5);
    w << .2, .5, .2, .6, .5;
    CHECK(top_objects(w, 3) == std::vector<std::int32_t>{3, 1, 4});
    CHECK(top_objects(w, 10) == std::vector<std::int32_t>{3, 1, 4, 0, 2});
}

TEST_CASE("write_top_words emits one line per topic") {
    Eigen::MatrixXd b(4, 2);
    b << .7, .1, .2, .2, .05, .6, .05, .1;
    std::vector<std::string> labels{"alpha", "beta", "gamma", "delta"};
    const auto dir = testing::temp_dir("topwords");
    write_top_words(b, labels, 2, (dir / "tw.txt").string());
    std::ifstream in(dir / "tw.txt");
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(l1 == "alpha beta");
    CHECK(l2 == "gamma beta");
}
