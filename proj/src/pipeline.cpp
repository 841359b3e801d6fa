#include "jsmf/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jsmf/error.hpp"
#include "jsmf/io.hpp"
#include "jsmf/parallel.hpp"
#include "jsmf/version.hpp"

namespace fs = std::filesystem;

namespace jsmf {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string serialize_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "[input]\n";
    out << "docword = " << cfg.docword_path << '\n';
    out << "vocab = " << cfg.vocab_path << '\n';
    out << "stopwords = " << cfg.stopword_path << '\n';
    out << "[output]\n";
    out << "out_dir = " << cfg.out_dir << '\n';
    out << "[model]\n";
    out << "k = " << cfg.K << '\n';
    out << "method = " << cfg.method << '\n';
    out << "[curation]\n";
    out << "target_vocab = " << cfg.target_vocab << '\n';
    out << "min_doc_length = " << cfg.min_doc_length << '\n';
    out << "[rectify]\n";
    out << "ap_iterations = " << cfg.ap_iterations << '\n';
    out << "eig_tolerance = " << format_double(cfg.eig_tolerance) << '\n';
    out << "dc_max_iterations = " << cfg.dc_max_iterations << '\n';
    out << "dc_tolerance = " << format_double(cfg.dc_tolerance) << '\n';
    out << "dense_threshold = " << cfg.dense_threshold << '\n';
    out << "[eg]\n";
    out << "step_size = " << format_double(cfg.eg_step_size) << '\n';
    out << "max_iterations = " << cfg.eg_max_iterations << '\n';
    out << "kkt_tolerance = " << format_double(cfg.eg_kkt_tolerance) << '\n';
    out << "[metrics]\n";
    out << "top_m = " << cfg.top_m << '\n';
    out << "coherence_eps = " << format_double(cfg.coherence_eps) << '\n';
    out << "[run]\n";
    out << "seed = " << cfg.seed << '\n';
    out << "threads = " << cfg.threads << '\n';
    return out.str();
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw IoError("config line " + std::to_string(line_no) +
                          ": expected key = value, got \"" + t + "\"");
        const std::string key = section + "." + trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "input.docword") cfg.docword_path = value;
            else if (key == "input.vocab") cfg.vocab_path = value;
            else if (key == "input.stopwords") cfg.stopword_path = value;
            else if (key == "output.out_dir") cfg.out_dir = value;
            else if (key == "model.k") cfg.K = std::stoi(value);
            else if (key == "model.method") cfg.method = value;
            else if (key == "curation.target_vocab") cfg.target_vocab = std::stoi(value);
            else if (key == "curation.min_doc_length") cfg.min_doc_length = std::stoi(value);
            else if (key == "rectify.ap_iterations") cfg.ap_iterations = std::stoi(value);
            else if (key == "rectify.eig_tolerance") cfg.eig_tolerance = std::stod(value);
            else if (key == "rectify.dc_max_iterations") cfg.dc_max_iterations = std::stoi(value);
            else if (key == "rectify.dc_tolerance") cfg.dc_tolerance = std::stod(value);
            else if (key == "rectify.dense_threshold") cfg.dense_threshold = std::stoi(value);
            else if (key == "eg.step_size") cfg.eg_step_size = std::stod(value);
            else if (key == "eg.max_iterations") cfg.eg_max_iterations = std::stoi(value);
            else if (key == "eg.kkt_tolerance") cfg.eg_kkt_tolerance = std::stod(value);
            else if (key == "metrics.top_m") cfg.top_m = std::stoi(value);
            else if (key == "metrics.coherence_eps") cfg.coherence_eps = std::stod(value);
            else if (key == "run.seed") cfg.seed = std::stoll(value);
            else if (key == "run.threads") cfg.threads = std::stoi(value);
            else
                throw IoError("config line " + std::to_string(line_no) + ": unknown key \"" +
                              key + "\"");
        } catch (const std::invalid_argument&) {
            throw IoError("config line " + std::to_string(line_no) + ": bad value \"" + value +
                          "\" for " + key);
        } catch (const std::out_of_range&) {
            throw IoError("config line " + std::to_string(line_no) + ": value out of range: " +
                          value);
        }
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_hash(const PipelineConfig& cfg) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_config(cfg))));
    return hex;
}

ModelArtifacts run_model_with_cooccurrence(const Corpus& curated, const Eigen::MatrixXd& C,
                                           const PipelineConfig& cfg) {
    const RectifyMethod method = rectify_method_from_string(cfg.method);

    ModelArtifacts art;
    art.C = C;
    art.rn_original = row_normalize(art.C);

    RectifyConfig rcfg;
    rcfg.K = cfg.K;
    rcfg.ap_iterations = cfg.ap_iterations;
    rcfg.method = method;
    rcfg.eig_tolerance = cfg.eig_tolerance;
    rcfg.dc_max_iterations = cfg.dc_max_iterations;
    rcfg.dc_tolerance = cfg.dc_tolerance;
    rcfg.dense_threshold = cfg.dense_threshold;

    switch (method) {
        case RectifyMethod::None:
            art.C_rect = art.C;
            art.rn_rect = art.rn_original;
            break;
        case RectifyMethod::AP: {
            ApResult ap = rectify_ap(art.C, rcfg);
            art.C_rect = std::move(ap.C);
            art.trace = std::move(ap.trace);
            art.rn_rect = row_normalize(art.C_rect);
            break;
        }
        case RectifyMethod::DC: {
            DcResult dc = rectify_dc(art.C, rcfg);
            art.C_rect = std::move(dc.C);
            art.dc_converged = dc.converged;
            if (!dc.converged)
                std::cerr << "warning: diagonal completion stopped before reaching tolerance "
                          << cfg.dc_tolerance << " within " << cfg.dc_max_iterations
                          << " iterations\n";
            art.rn_rect = row_normalize(art.C_rect);
            break;
        }
    }

    // Zero-marginal objects were given uniform rows by row_normalize; they
    // carry no co-occurrence evidence and are barred from anchor selection.
    art.anchors = select_anchors(art.rn_rect.Cbar, cfg.K, art.rn_rect.zero_rows);

    EGConfig eg;
    eg.step_size = cfg.eg_step_size;
    eg.max_iterations = cfg.eg_max_iterations;
    eg.kkt_tolerance = cfg.eg_kkt_tolerance;
    art.Theta = recover_theta(art.rn_rect.Cbar, art.anchors, eg, cfg.threads, &art.theta_stats);
    art.B = recover_B(art.Theta, art.rn_rect.p_X);

    if (method == RectifyMethod::None) {
        art.A = recover_A_lsq(art.C, art.B);
    } else {
        art.A = recover_A_anchor(art.C_rect, art.anchors.indices, art.B);
        // The recovered cluster pair distribution sums to the model's
        // explained mass; rescale so A is a proper joint distribution.
        const double mass = art.A.sum();
        if (!(mass > 0.0)) throw ComputeError("recovered A has no mass");
        art.A /= mass;
    }

    MetricsReport& m = art.metrics;
    m.method = cfg.method;
    m.K = cfg.K;
    m.N = art.C.rows();
    // Every metric is evaluated against the original co-occurrence. Recovery
    // reconstructs original rows from original anchor rows, so the simplex
    // coefficients are refit on the original matrix when the model was
    // inferred from a rectified one.
    if (method == RectifyMethod::None) {
        m.recovery = recovery_error(art.rn_original.Cbar, art.Theta, art.anchors.indices);
    } else {
        const Eigen::MatrixXd theta_eval =
            recover_theta(art.rn_original.Cbar, art.anchors, eg, cfg.threads, nullptr);
        m.recovery = recovery_error(art.rn_original.Cbar, theta_eval, art.anchors.indices);
    }
    m.approximation = approximation_error(art.C, art.B, art.A);
    m.dominancy = dominancy(art.A, &m.dominancy_defined);
    m.specificity = specificity(art.B, art.rn_original.p_X, &m.specificity_finite);
    m.dissimilarity = dissimilarity(art.B, cfg.top_m);
    m.coherence = coherence(art.B, curated, cfg.top_m, cfg.coherence_eps);
    return art;
}

ModelArtifacts run_model(const Corpus& curated, const PipelineConfig& cfg) {
    std::int64_t skipped = 0;
    const Eigen::MatrixXd C = build_cooccurrence(curated, cfg.threads, &skipped);
    if (skipped > 0)
        std::cerr << "warning: skipped " << skipped << " documents with fewer than 2 tokens\n";
    ModelArtifacts art = run_model_with_cooccurrence(curated, C, cfg);
    art.skipped_documents = skipped;
    return art;
}

namespace {

Corpus load_and_curate(const PipelineConfig& cfg, CurationRemap* remap) {
    if (cfg.docword_path.empty() || cfg.vocab_path.empty())
        throw IoError("docword and vocab paths are required");
    Corpus raw = load_uci(cfg.docword_path, cfg.vocab_path);
    CurationConfig ccfg;
    ccfg.target_vocab = cfg.target_vocab;
    ccfg.min_doc_length = cfg.min_doc_length;
    if (!cfg.stopword_path.empty()) ccfg.stopwords = load_stopwords(cfg.stopword_path);
    return curate(raw, ccfg, remap);
}

void write_json_atomic(const nlohmann::json& j, const fs::path& path) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
    nlohmann::json j;
    j["method"] = m.method;
    j["K"] = m.K;
    j["N"] = m.N;
    j["recovery"] = m.recovery;
    j["approximation"] = m.approximation;
    j["dominancy"] = m.dominancy_defined ? nlohmann::json(m.dominancy) : nlohmann::json();
    j["dominancy_defined"] = m.dominancy_defined;
    j["specificity"] = m.specificity_finite ? nlohmann::json(m.specificity) : nlohmann::json();
    j["specificity_finite"] = m.specificity_finite;
    j["dissimilarity"] = m.dissimilarity;
    j["coherence"] = m.coherence;
    return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
    MetricsReport m;
    m.method = j.at("method").get<std::string>();
    m.K = j.at("K").get<int>();
    m.N = j.at("N").get<std::int64_t>();
    m.recovery = j.at("recovery").get<double>();
    m.approximation = j.at("approximation").get<double>();
    m.dominancy_defined = j.at("dominancy_defined").get<bool>();
    m.dominancy = m.dominancy_defined ? j.at("dominancy").get<double>()
                                      : std::numeric_limits<double>::quiet_NaN();
    m.specificity_finite = j.at("specificity_finite").get<bool>();
    m.specificity = m.specificity_finite ? j.at("specificity").get<double>()
                                         : std::numeric_limits<double>::infinity();
    m.dissimilarity = j.at("dissimilarity").get<double>();
    m.coherence = j.at("coherence").get<double>();
    return m;
}

}  // namespace

MetricsReport run_pipeline(const PipelineConfig& cfg) {
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);

    CurationRemap remap;
    const Corpus curated = load_and_curate(cfg, &remap);
    write_uci(curated, (out_dir / "docword_curated.txt").string(),
              (out_dir / "vocab_curated.txt").string());
    write_remap_json(remap, (out_dir / "curation_remap.json").string());

    const ModelArtifacts art = run_model(curated, cfg);

    write_square_matrix((out_dir / "cooccurrence.bin").string(), art.C);
    const RectifyMethod method = rectify_method_from_string(cfg.method);
    if (method != RectifyMethod::None) {
        write_square_matrix((out_dir / "cooccurrence_rectified.bin").string(), art.C_rect);
        if (method == RectifyMethod::AP)
            write_convergence_csv((out_dir / "convergence.csv").string(), art.trace);
    }
    write_anchors_json(art.anchors, curated.vocabulary, (out_dir / "anchors.json").string());
    export_embedding(art.rn_rect.Cbar, art.anchors, curated.vocabulary,
                     (out_dir / "embedding.csv").string());
    write_matrix((out_dir / "B.bin").string(), art.B);
    write_matrix_csv((out_dir / "B.csv").string(), art.B);
    write_matrix((out_dir / "A.bin").string(), art.A);
    write_matrix_csv((out_dir / "A.csv").string(), art.A);
    write_matrix((out_dir / "theta.bin").string(), art.Theta);
    write_matrix_csv((out_dir / "theta.csv").string(), art.Theta);
    write_top_words(art.B, curated.vocabulary, cfg.top_m, (out_dir / "top_words.txt").string());

    {
        std::ofstream mcsv(out_dir / "metrics.csv");
        if (!mcsv) throw IoError("cannot open for writing: " + (out_dir / "metrics.csv").string());
        mcsv << metrics_csv_header() << '\n' << metrics_csv_row(art.metrics) << '\n';
    }
    write_metrics_json((out_dir / "metrics.json").string(), art.metrics);

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config_hash"] = config_hash(cfg);
    manifest["config"] = serialize_config(cfg);
    manifest["documents"] = curated.num_documents();
    manifest["objects"] = curated.num_objects();
    manifest["skipped_documents"] = art.skipped_documents;
    manifest["zero_marginal_rows"] = art.rn_original.zero_rows.size();
    manifest["eg_non_converged_rows"] = art.theta_stats.non_converged;
    manifest["artifacts"] = {
        {"cooccurrence", "cooccurrence.bin"},
        {"anchors", "anchors.json"},
        {"B", "B.bin"},
        {"A", "A.bin"},
        {"theta", "theta.bin"},
        {"metrics", "metrics.csv"},
        {"top_words", "top_words.txt"},
        {"embedding", "embedding.csv"},
    };
    if (method != RectifyMethod::None)
        manifest["artifacts"]["cooccurrence_rectified"] = "cooccurrence_rectified.bin";
    if (method == RectifyMethod::AP) manifest["artifacts"]["convergence"] = "convergence.csv";
    write_json_atomic(manifest, out_dir / "manifest.json");
    return art.metrics;
}

void run_sweep(const PipelineConfig& base, const SweepSpec& spec) {
    if (spec.k_list.empty()) throw IoError("sweep requires a non-empty K list");
    if (spec.methods.empty()) throw IoError("sweep requires at least one method");
    for (const auto& m : spec.methods) rectify_method_from_string(m);  // validate early

    const fs::path out_dir(base.out_dir);
    const fs::path cells_dir = out_dir / "cells";
    fs::create_directories(cells_dir);

    const Corpus curated = load_and_curate(base, nullptr);
    std::int64_t skipped = 0;
    const Eigen::MatrixXd C = build_cooccurrence(curated, base.threads, &skipped);

    // Canonical cell order: methods by enum order, K ascending.
    struct Cell {
        std::string method;
        int k = 0;
        fs::path dir;
    };
    std::vector<std::string> methods = spec.methods;
    std::sort(methods.begin(), methods.end(), [](const std::string& a, const std::string& b) {
        return static_cast<int>(rectify_method_from_string(a)) <
               static_cast<int>(rectify_method_from_string(b));
    });
    methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
    std::vector<int> k_list = spec.k_list;
    std::sort(k_list.begin(), k_list.end());
    k_list.erase(std::unique(k_list.begin(), k_list.end()), k_list.end());

    std::vector<Cell> cells;
    for (const auto& m : methods)
        for (int k : k_list)
            cells.push_back({m, k, cells_dir / (m + "_K" + std::to_string(k))});

    parallel_for(static_cast<std::int64_t>(cells.size()), spec.workers, [&](std::int64_t idx) {
        const Cell& cell = cells[static_cast<size_t>(idx)];
        const fs::path cell_json = cell.dir / "cell.json";
        if (fs::exists(cell_json)) {
            try {
                std::ifstream in(cell_json);
                nlohmann::json j;
                in >> j;
                if (j.contains("status")) return;  // completed earlier
            } catch (...) {
                // fall through and recompute
            }
        }
        fs::create_directories(cell.dir);
        PipelineConfig cfg = base;
        cfg.method = cell.method;
        cfg.K = cell.k;
        cfg.threads = 1;  // cells already run concurrently
        nlohmann::json j;
        try {
            const ModelArtifacts art = run_model_with_cooccurrence(curated, C, cfg);
            j["status"] = "ok";
            j["metrics"] = metrics_to_json(art.metrics);
        } catch (const Error& e) {
            j["status"] = "failed";
            j["error"] = e.what();
            j["method"] = cell.method;
            j["K"] = cell.k;
        }
        write_json_atomic(j, cell_json);
    });

    // Assemble the grid in canonical order.
    std::ofstream grid(out_dir / "metrics.csv");
    if (!grid) throw IoError("cannot open for writing: " + (out_dir / "metrics.csv").string());
    grid << metrics_csv_header() << '\n';
    nlohmann::json manifest_cells = nlohmann::json::array();
    for (const Cell& cell : cells) {
        std::ifstream in(cell.dir / "cell.json");
        if (!in) throw IoError("missing cell result: " + (cell.dir / "cell.json").string());
        nlohmann::json j;
        in >> j;
        nlohmann::json entry;
        entry["method"] = cell.method;
        entry["K"] = cell.k;
        entry["status"] = j.at("status");
        if (j.at("status") == "ok") {
            grid << metrics_csv_row(metrics_from_json(j.at("metrics"))) << '\n';
        } else {
            MetricsReport nan_row;
            nan_row.method = cell.method;
            nan_row.K = cell.k;
            nan_row.recovery = nan_row.approximation = nan_row.dominancy =
                nan_row.specificity = nan_row.dissimilarity = nan_row.coherence =
                    std::numeric_limits<double>::quiet_NaN();
            grid << metrics_csv_row(nan_row) << '\n';
            entry["error"] = j.at("error");
        }
        manifest_cells.push_back(entry);
    }
    grid.close();

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config_hash"] = config_hash(base);
    manifest["config"] = serialize_config(base);
    manifest["cells"] = manifest_cells;
    write_json_atomic(manifest, out_dir / "sweep_manifest.json");
}

}  // namespace jsmf
