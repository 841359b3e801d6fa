#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsmf/anchors.hpp"
#include "jsmf/cooccur.hpp"
#include "jsmf/corpus.hpp"
#include "jsmf/metrics.hpp"
#include "jsmf/recover.hpp"
#include "jsmf/rectify.hpp"

namespace jsmf {

// Everything the end-to-end run needs; serializable as "key = value" lines
// under [sections], so a run can be reproduced from its manifest.
struct PipelineConfig {
    // [input]
    std::string docword_path;
    std::string vocab_path;
    std::string stopword_path;
    // [output]
    std::string out_dir = "out";
    // [model]
    int K = 10;
    std::string method = "ap";  // baseline | dc | ap
    // [curation]
    int target_vocab = 0;  // 0 keeps every object present after stopword removal
    int min_doc_length = 5;
    // [rectify]
    int ap_iterations = 150;
    double eig_tolerance = 1e-9;
    int dc_max_iterations = 100;
    double dc_tolerance = 1e-10;
    int dense_threshold = 2000;
    // [eg]
    double eg_step_size = 50.0;
    int eg_max_iterations = 500;
    double eg_kkt_tolerance = 1e-7;
    // [metrics]
    int top_m = 20;
    double coherence_eps = 1.0;
    // [run]
    std::int64_t seed = -1;  // required (>= 0) for synthetic generation
    int threads = 1;
};

struct SweepSpec {
    std::vector<int> k_list;
    std::vector<std::string> methods;
    int workers = 1;
};

std::string serialize_config(const PipelineConfig& cfg);
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config_file(const std::string& path);
std::string config_hash(const PipelineConfig& cfg);

// In-memory model fit on an already-curated corpus: co-occurrence,
// rectification, anchors, recovery and metrics.
struct ModelArtifacts {
    Eigen::MatrixXd C;
    RowNormalized rn_original;
    Eigen::MatrixXd C_rect;      // equals C for the baseline method
    RowNormalized rn_rect;
    ConvergenceTrace trace;      // AP only
    bool dc_converged = true;
    AnchorSet anchors;
    Eigen::MatrixXd Theta;
    Eigen::MatrixXd B;
    Eigen::MatrixXd A;
    ThetaStats theta_stats;
    MetricsReport metrics;
    std::int64_t skipped_documents = 0;
};

ModelArtifacts run_model(const Corpus& curated, const PipelineConfig& cfg);

// Variant that reuses a precomputed co-occurrence matrix (sweeps share it).
ModelArtifacts run_model_with_cooccurrence(const Corpus& curated, const Eigen::MatrixXd& C,
                                           const PipelineConfig& cfg);

// Full file-based run: load, curate, fit, write every artifact and a
// manifest recording the config hash and version. Returns the metrics.
MetricsReport run_pipeline(const PipelineConfig& cfg);

// (method, K) grid over a shared corpus and co-occurrence. Each cell writes
// cells/<method>_K<k>/cell.json; completed cells are reused on rerun, and the
// final metrics grid CSV is assembled in a fixed (method, K) order.
void run_sweep(const PipelineConfig& base, const SweepSpec& spec);

}  // namespace jsmf
