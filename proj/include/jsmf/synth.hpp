#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "jsmf/corpus.hpp"

namespace jsmf {

// Column-stochastic basis with one planted anchor row per column: the
// anchor-row submatrix is diagonal with positive diagonal.
struct PlantedBasis {
    Eigen::MatrixXd B;                  // N x K
    std::vector<std::int32_t> anchors;  // ascending; anchors[k] is column k's anchor
};

// Builds a separable basis: K distinct anchor rows (chosen by seed, assigned
// to columns in ascending order) carry anchor_weight of their column's mass;
// the rest of each column is a seeded symmetric-Dirichlet draw over the
// non-anchor rows. fill_concentration < 1 yields heavy-tailed columns (a few
// frequent objects, many rare ones). With N == K the basis is the identity.
PlantedBasis generate_planted(int n, int k, double anchor_weight, std::uint64_t seed,
                              double fill_concentration = 1.0);

struct DocLengthLaw {
    enum class Kind { Constant, ShiftedPoisson };
    Kind kind = Kind::Constant;
    int constant_length = 100;
    int shift = 2;          // minimum length under the Poisson law
    double poisson_mean = 0.0;

    static DocLengthLaw constant(int length);
    static DocLengthLaw shifted_poisson(int shift, double mean);
};

struct SyntheticCorpus {
    Corpus corpus;
    Eigen::MatrixXd W;         // K x M per-document topic draws
    Eigen::MatrixXd A_M_star;  // (1/M) sum_m W_m W_m^T
};

// Samples W_m ~ Dirichlet(alpha) and H_m ~ Multinomial(n_m, B W_m). Each
// document uses an RNG stream derived from (seed, m), so output is
// independent of scheduling and bitwise fixed by the seed.
SyntheticCorpus sample_corpus(const Eigen::MatrixXd& B_true, const Eigen::VectorXd& alpha,
                              std::int64_t num_documents, const DocLengthLaw& law,
                              std::uint64_t seed, int threads = 1,
                              const std::vector<std::string>* labels = nullptr);

// C* = B A B^T.
Eigen::MatrixXd exact_posterior(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A);

// Closed-form E[W W^T] for W ~ Dirichlet(alpha):
// (diag(alpha) + alpha alpha^T) / (alpha0 (alpha0 + 1)).
Eigen::MatrixXd dirichlet_second_moment(const Eigen::VectorXd& alpha);

struct PlantedModel {
    Eigen::MatrixXd B_true;
    Eigen::VectorXd alpha;
    std::vector<std::int32_t> anchors;
    Eigen::MatrixXd W;
    Eigen::MatrixXd A_M_star;
};

struct SemiSyntheticResult {
    Corpus corpus;
    PlantedModel model;
};

// Treats a learned B as ground truth: plants anchors by making each column's
// strongest row exclusive to it, renormalizes, then regenerates the corpus
// with the source's document lengths and W_m ~ Dirichlet(alpha).
SemiSyntheticResult semi_synthetic(const Corpus& source, const Eigen::MatrixXd& B_learned,
                                   const Eigen::VectorXd& alpha, std::uint64_t seed,
                                   int threads = 1);

// Minimum-cost assignment on l1 column distances (Hungarian algorithm).
// Returns per-column-of-X the matched column of Y.
std::vector<int> match_columns(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Mean l1 column distance after optimal matching.
double matched_l1_distance(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

void write_planted_json(const PlantedModel& model, const std::string& path);

}  // namespace jsmf
