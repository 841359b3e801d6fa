#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace jsmf {

// Sparse object-count vector for one training example. Entries are
// (object index, count) with count >= 1, sorted by index; length is the
// total token count.
struct Document {
    std::vector<std::pair<std::int32_t, std::int32_t>> counts;
    std::int64_t length = 0;

    std::int64_t recompute_length();
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<std::string> vocabulary;
    // doc_freq[i] = number of documents containing object i.
    std::vector<std::int64_t> doc_freq;

    std::int64_t num_documents() const { return static_cast<std::int64_t>(documents.size()); }
    std::int32_t num_objects() const { return static_cast<std::int32_t>(vocabulary.size()); }
    std::int64_t total_tokens() const;
    double mean_length() const;

    void recompute_doc_freq();
    // Throws ComputeError when an invariant is broken (bad index, count < 1,
    // stale length or doc_freq).
    void validate() const;
};

struct CurationConfig {
    std::vector<std::string> stopwords;
    // Number of objects to keep, ranked by tf-idf; 0 keeps every object that
    // appears in at least one document.
    std::int32_t target_vocab = 0;
    std::int32_t min_doc_length = 5;
};

// Mapping from curated indices back to the source corpus.
struct CurationRemap {
    std::vector<std::int32_t> kept_objects;    // new object index -> old object index
    std::vector<std::int64_t> kept_documents;  // new document position -> old position
};

// Reads the UCI bag-of-words format: three header lines M, V, NNZ followed by
// NNZ lines "docID wordID count" (1-indexed), plus a vocabulary file with one
// label per line. Empty documents are preserved.
Corpus load_uci(const std::string& docword_path, const std::string& vocab_path);

// Writes a corpus back out in the same UCI format.
void write_uci(const Corpus& corpus, const std::string& docword_path,
               const std::string& vocab_path);

// Removes stopwords, keeps the target_vocab objects with the highest
// tf * log(M / doc_freq) score (ties broken by lower original index), drops
// documents shorter than min_doc_length, prunes objects left with no
// documents, and recomputes doc_freq.
Corpus curate(const Corpus& corpus, const CurationConfig& config,
              CurationRemap* remap = nullptr);

void write_remap_json(const CurationRemap& remap, const std::string& path);

// One lowercase label per line; '#' lines and blanks ignored.
std::vector<std::string> load_stopwords(const std::string& path);

}  // namespace jsmf
