#include "jsmf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jsmf/error.hpp"

namespace jsmf {

std::int64_t Document::recompute_length() {
    length = 0;
    for (const auto& [idx, cnt] : counts) length += cnt;
    return length;
}

std::int64_t Corpus::total_tokens() const {
    std::int64_t total = 0;
    for (const auto& d : documents) total += d.length;
    return total;
}

double Corpus::mean_length() const {
    if (documents.empty()) return 0.0;
    return static_cast<double>(total_tokens()) / static_cast<double>(documents.size());
}

void Corpus::recompute_doc_freq() {
    doc_freq.assign(vocabulary.size(), 0);
    for (const auto& d : documents)
        for (const auto& [idx, cnt] : d.counts) ++doc_freq[static_cast<size_t>(idx)];
}

void Corpus::validate() const {
    const auto n = static_cast<std::int32_t>(vocabulary.size());
    for (size_t m = 0; m < documents.size(); ++m) {
        const Document& d = documents[m];
        std::int64_t sum = 0;
        std::int32_t prev = -1;
        for (const auto& [idx, cnt] : d.counts) {
            if (idx < 0 || idx >= n)
                throw ComputeError("document " + std::to_string(m) + " references object " +
                                   std::to_string(idx) + " outside vocabulary of size " +
                                   std::to_string(n));
            if (cnt < 1)
                throw ComputeError("document " + std::to_string(m) +
                                   " has non-positive count for object " + std::to_string(idx));
            if (idx <= prev)
                throw ComputeError("document " + std::to_string(m) +
                                   " has unsorted or duplicate object indices");
            prev = idx;
            sum += cnt;
        }
        if (sum != d.length)
            throw ComputeError("document " + std::to_string(m) + " length " +
                               std::to_string(d.length) + " does not match count sum " +
                               std::to_string(sum));
    }
    if (!doc_freq.empty()) {
        Corpus fresh;
        fresh.vocabulary = vocabulary;
        fresh.documents = documents;
        fresh.recompute_doc_freq();
        if (fresh.doc_freq != doc_freq) throw ComputeError("doc_freq is stale");
    }
}

namespace {

std::int64_t parse_count_line(const std::string& line, std::int64_t line_no,
                              const char* what) {
    std::stringstream ss(line);
    std::int64_t value = 0;
    if (!(ss >> value))
        throw IoError("line " + std::to_string(line_no) + ": expected " + what +
                      ", got \"" + line + "\"");
    std::string rest;
    if (ss >> rest)
        throw IoError("line " + std::to_string(line_no) + ": trailing content after " +
                      std::string(what));
    return value;
}

}  // namespace

Corpus load_uci(const std::string& docword_path, const std::string& vocab_path) {
    std::ifstream in(docword_path);
    if (!in) throw IoError("cannot open: " + docword_path);

    std::string line;
    std::int64_t line_no = 0;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line))
            throw IoError("line " + std::to_string(line_no + 1) + ": missing " +
                          std::string(what) + " in " + docword_path);
        ++line_no;
    };

    next_line("document count header");
    const std::int64_t m_docs = parse_count_line(line, line_no, "document count");
    next_line("vocabulary size header");
    const std::int64_t v_size = parse_count_line(line, line_no, "vocabulary size");
    next_line("nonzero count header");
    const std::int64_t nnz = parse_count_line(line, line_no, "nonzero count");
    if (m_docs < 0 || v_size < 0 || nnz < 0)
        throw IoError("negative header value in " + docword_path);

    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> counts(
        static_cast<size_t>(m_docs));
    std::int64_t seen = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (seen == nnz)
            throw IoError("line " + std::to_string(line_no) +
                          ": more entries than the NNZ header declared");
        std::stringstream ss(line);
        std::int64_t doc_id = 0, word_id = 0, count = 0;
        if (!(ss >> doc_id >> word_id >> count))
            throw IoError("line " + std::to_string(line_no) +
                          ": expected \"docID wordID count\", got \"" + line + "\"");
        if (doc_id < 1 || doc_id > m_docs)
            throw IoError("line " + std::to_string(line_no) + ": docID " +
                          std::to_string(doc_id) + " out of range [1, " +
                          std::to_string(m_docs) + "]");
        if (word_id < 1 || word_id > v_size)
            throw IoError("line " + std::to_string(line_no) + ": wordID " +
                          std::to_string(word_id) + " out of range [1, " +
                          std::to_string(v_size) + "]");
        if (count < 1)
            throw IoError("line " + std::to_string(line_no) + ": non-positive count " +
                          std::to_string(count));
        counts[static_cast<size_t>(doc_id - 1)].emplace_back(
            static_cast<std::int32_t>(word_id - 1), static_cast<std::int32_t>(count));
        ++seen;
    }
    if (seen != nnz)
        throw IoError("NNZ mismatch in " + docword_path + ": header declared " +
                      std::to_string(nnz) + " entries, file has " + std::to_string(seen));

    Corpus corpus;
    corpus.documents.resize(static_cast<size_t>(m_docs));
    for (size_t m = 0; m < counts.size(); ++m) {
        auto& c = counts[m];
        std::sort(c.begin(), c.end());
        // Merge duplicate (doc, word) pairs, should the producer emit any.
        auto& out = corpus.documents[m].counts;
        for (const auto& [idx, cnt] : c) {
            if (!out.empty() && out.back().first == idx)
                out.back().second += cnt;
            else
                out.emplace_back(idx, cnt);
        }
        corpus.documents[m].recompute_length();
    }

    std::ifstream vin(vocab_path);
    if (!vin) throw IoError("cannot open: " + vocab_path);
    std::string label;
    std::int64_t vline = 0;
    while (std::getline(vin, label)) {
        ++vline;
        while (!label.empty() && (label.back() == '\r' || label.back() == '\n'))
            label.pop_back();
        if (label.empty() &&
            static_cast<std::int64_t>(corpus.vocabulary.size()) >= v_size)
            continue;  // trailing blank lines
        corpus.vocabulary.push_back(label);
    }
    if (static_cast<std::int64_t>(corpus.vocabulary.size()) != v_size)
        throw IoError("vocabulary file " + vocab_path + " has " +
                      std::to_string(corpus.vocabulary.size()) + " labels, docword header declared " +
                      std::to_string(v_size));

    corpus.recompute_doc_freq();
    return corpus;
}

void write_uci(const Corpus& corpus, const std::string& docword_path,
               const std::string& vocab_path) {
    std::ofstream out(docword_path);
    if (!out) throw IoError("cannot open for writing: " + docword_path);
    std::int64_t nnz = 0;
    for (const auto& d : corpus.documents) nnz += static_cast<std::int64_t>(d.counts.size());
    out << corpus.num_documents() << '\n'
        << corpus.num_objects() << '\n'
        << nnz << '\n';
    for (std::int64_t m = 0; m < corpus.num_documents(); ++m)
        for (const auto& [idx, cnt] : corpus.documents[static_cast<size_t>(m)].counts)
            out << (m + 1) << ' ' << (idx + 1) << ' ' << cnt << '\n';
    if (!out) throw IoError("write failed: " + docword_path);

    std::ofstream vout(vocab_path);
    if (!vout) throw IoError("cannot open for writing: " + vocab_path);
    for (const auto& label : corpus.vocabulary) vout << label << '\n';
    if (!vout) throw IoError("write failed: " + vocab_path);
}

Corpus curate(const Corpus& corpus, const CurationConfig& config, CurationRemap* remap) {
    if (config.min_doc_length < 2)
        throw IoError("min_doc_length must be >= 2, got " +
                      std::to_string(config.min_doc_length));
    const std::int32_t n = corpus.num_objects();
    const std::int64_t m_docs = corpus.num_documents();

    std::unordered_set<std::string> stop(config.stopwords.begin(), config.stopwords.end());

    // Corpus term frequency and document frequency over the input corpus.
    std::vector<std::int64_t> tf(static_cast<size_t>(n), 0);
    std::vector<std::int64_t> df(static_cast<size_t>(n), 0);
    for (const auto& d : corpus.documents) {
        for (const auto& [idx, cnt] : d.counts) {
            tf[static_cast<size_t>(idx)] += cnt;
            ++df[static_cast<size_t>(idx)];
        }
    }

    // Selection pool: objects that are not stopwords and occur somewhere.
    std::vector<std::int32_t> pool;
    pool.reserve(static_cast<size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) {
        if (df[static_cast<size_t>(i)] == 0) continue;
        if (stop.count(corpus.vocabulary[static_cast<size_t>(i)])) continue;
        pool.push_back(i);
    }
    const std::int32_t target =
        config.target_vocab > 0 ? config.target_vocab : static_cast<std::int32_t>(pool.size());
    if (target < 1) throw IoError("curation produced an empty target vocabulary");
    if (target > static_cast<std::int32_t>(pool.size()))
        throw IoError("target_vocab " + std::to_string(target) +
                      " exceeds the surviving vocabulary of " + std::to_string(pool.size()) +
                      " objects");

    // tf-idf ranking, ties broken by lower original index.
    std::vector<double> score(static_cast<size_t>(n), 0.0);
    for (std::int32_t i : pool) {
        const auto si = static_cast<size_t>(i);
        score[si] = static_cast<double>(tf[si]) *
                    std::log(static_cast<double>(m_docs) / static_cast<double>(df[si]));
    }
    std::stable_sort(pool.begin(), pool.end(), [&](std::int32_t a, std::int32_t b) {
        const double sa = score[static_cast<size_t>(a)];
        const double sb = score[static_cast<size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    pool.resize(static_cast<size_t>(target));
    std::sort(pool.begin(), pool.end());

    std::vector<std::int32_t> old_to_new(static_cast<size_t>(n), -1);
    for (size_t k = 0; k < pool.size(); ++k) old_to_new[static_cast<size_t>(pool[k])] =
        static_cast<std::int32_t>(k);

    // Rewrite documents over the selected vocabulary and drop short ones.
    Corpus curated;
    std::vector<std::int64_t> kept_docs;
    for (std::int64_t m = 0; m < m_docs; ++m) {
        const Document& d = corpus.documents[static_cast<size_t>(m)];
        Document nd;
        for (const auto& [idx, cnt] : d.counts) {
            const std::int32_t ni = old_to_new[static_cast<size_t>(idx)];
            if (ni >= 0) nd.counts.emplace_back(ni, cnt);
        }
        nd.recompute_length();
        if (nd.length < config.min_doc_length) continue;
        curated.documents.push_back(std::move(nd));
        kept_docs.push_back(m);
    }
    if (curated.documents.empty())
        throw ComputeError("curation dropped every document (min_doc_length " +
                           std::to_string(config.min_doc_length) + ")");

    // Dropping documents can empty an object; prune those so every retained
    // object appears in at least one document.
    std::vector<std::int64_t> df2(pool.size(), 0);
    for (const auto& d : curated.documents)
        for (const auto& [idx, cnt] : d.counts) ++df2[static_cast<size_t>(idx)];
    std::vector<std::int32_t> compact(pool.size(), -1);
    std::vector<std::int32_t> kept_objects;
    for (size_t k = 0; k < pool.size(); ++k) {
        if (df2[k] == 0) continue;
        compact[k] = static_cast<std::int32_t>(kept_objects.size());
        kept_objects.push_back(pool[k]);
    }
    if (kept_objects.size() != pool.size()) {
        for (auto& d : curated.documents) {
            for (auto& [idx, cnt] : d.counts)
                idx = compact[static_cast<size_t>(idx)];
        }
    }

    curated.vocabulary.reserve(kept_objects.size());
    for (std::int32_t old : kept_objects)
        curated.vocabulary.push_back(corpus.vocabulary[static_cast<size_t>(old)]);
    curated.recompute_doc_freq();

    if (remap) {
        remap->kept_objects = kept_objects;
        remap->kept_documents = std::move(kept_docs);
    }
    return curated;
}

void write_remap_json(const CurationRemap& remap, const std::string& path) {
    nlohmann::json j;
    j["kept_objects"] = remap.kept_objects;
    j["kept_documents"] = remap.kept_documents;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n' ||
                                 line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        words.push_back(line);
    }
    return words;
}

}  // namespace jsmf
