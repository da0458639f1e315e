#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bubble {

/// Normalizes text into terms: ASCII-lowercased, split on Unicode whitespace,
/// leading/trailing punctuation stripped per term (internal punctuation such
/// as hyphens is kept), empty terms dropped. No stemming, no stopword list —
/// the same tokenizer feeds term frequencies, overlap sets and token counts,
/// so selection decisions stay reproducible from the trace alone.
std::vector<std::string> tokenize(std::string_view text);

/// Term count of tokenize(text). This is the token estimate t_i used for all
/// budget arithmetic.
int count_tokens(std::string_view text);

/// Content-derived chunk identifier: FNV-1a over the full provenance tuple.
/// Identical inputs always map to the same id; re-ingesting a document yields
/// stable ids regardless of what else is in the corpus.
std::string make_chunk_id(std::string_view source_doc, std::string_view section_label,
                          int row_number, std::string_view text);

// One retrieval unit: a spreadsheet row, a paragraph, or a fixed-length
// segment of one.
struct Chunk {
    std::string chunk_id;
    std::string text;
    std::string section_label;  // sheet name, or synthesized label for text docs
    std::string bucket;         // coarse budget group
    int row_number = 0;
    std::string source_doc;
    int token_count = 0;
};

enum class SourceKind { structured_row, plain_text, other_doc };

/// Structured rows budget under their own section; unstructured sources fall
/// into the coarse "Text" / "Other" buckets.
std::string assign_bucket(const Chunk& chunk, SourceKind kind);

struct RowRecord {
    std::string source_doc;
    std::string section_label;
    int row_number = 0;
    std::string text;
};

struct IngestReport {
    int rows_seen = 0;
    int rows_skipped = 0;
};

class Corpus {
public:
    Corpus() = default;

    // Validates position uniqueness and id uniqueness, then computes corpus
    // statistics. Throws AllRowsEmpty / DuplicatePosition.
    static Corpus from_chunks(std::vector<Chunk> chunks, int rows_skipped = 0);

    const std::vector<Chunk>& chunks() const { return chunks_; }
    int chunk_count() const { return static_cast<int>(chunks_.size()); }
    double avg_chunk_tokens() const { return avg_tokens_; }
    int median_chunk_tokens() const { return median_tokens_; }  // lower median on even counts
    int rows_skipped() const { return rows_skipped_; }

    int doc_freq(const std::string& term) const;
    const std::map<std::string, int>& doc_freq_map() const { return doc_freq_; }

    const Chunk* find(std::string_view chunk_id) const;

    void save(const std::filesystem::path& path) const;
    static Corpus load(const std::filesystem::path& path);

private:
    std::vector<Chunk> chunks_;
    std::map<std::string, int> doc_freq_;
    double avg_tokens_ = 0.0;
    int median_tokens_ = 0;
    int rows_skipped_ = 0;
};

/// Builds a corpus from structured rows. Whitespace-only rows are skipped and
/// counted, not treated as errors — enterprise sheets are sparse.
Corpus ingest_rows(const std::vector<RowRecord>& rows, IngestReport* report = nullptr);

/// Splits unstructured text on blank-line paragraph boundaries; paragraphs
/// over max_chunk_tokens are further split at term boundaries. Section labels
/// are synthesized as "<source_doc>#<paragraph ordinal>".
std::vector<Chunk> ingest_text(std::string_view source_doc, std::string_view text,
                               int max_chunk_tokens, SourceKind kind = SourceKind::plain_text);

}  // namespace bubble
