#include "bubble/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "bubble/errors.hpp"
#include "bubble/util.hpp"

namespace bubble {

namespace {

// Decodes the next UTF-8 code point; malformed bytes are consumed one at a
// time and passed through as-is so tokenization never fails on dirty input.
char32_t next_codepoint(std::string_view s, size_t& i) {
    unsigned char b0 = s[i];
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return b0; }
    if (i + len > s.size()) { ++i; return b0; }
    for (int k = 1; k < len; ++k) {
        unsigned char bk = s[i + k];
        if ((bk & 0xC0) != 0x80) { ++i; return b0; }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

bool is_space_cp(char32_t c) {
    switch (c) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return (c >= 0x2000 && c <= 0x200A);
    }
}

// Edge punctuation is stripped from both ends of a term. ASCII: anything that
// is not a letter or digit. Non-ASCII: a small set of common punctuation
// marks; everything else non-ASCII counts as a word character.
bool is_strippable_cp(char32_t c) {
    if (c < 0x80) {
        bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        return !alnum;
    }
    switch (c) {
        case 0xA1: case 0xAB: case 0xB7: case 0xBB: case 0xBF:
        case 0x2013: case 0x2014: case 0x2018: case 0x2019:
        case 0x201C: case 0x201D: case 0x2022: case 0x2026:
            return true;
        default:
            return false;
    }
}

void append_lowered(std::string& out, std::string_view src, size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
        char c = src[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
        out += c;
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> terms;
    struct Cp { char32_t cp; size_t begin; size_t end; };
    std::vector<Cp> token;
    token.reserve(32);

    auto flush = [&]() {
        if (token.empty()) return;
        size_t lo = 0, hi = token.size();
        while (lo < hi && is_strippable_cp(token[lo].cp)) ++lo;
        while (hi > lo && is_strippable_cp(token[hi - 1].cp)) --hi;
        if (lo < hi) {
            std::string term;
            term.reserve(token[hi - 1].end - token[lo].begin);
            append_lowered(term, text, token[lo].begin, token[hi - 1].end);
            terms.push_back(std::move(term));
        }
        token.clear();
    };

    size_t i = 0;
    while (i < text.size()) {
        size_t begin = i;
        char32_t cp = next_codepoint(text, i);
        if (is_space_cp(cp)) {
            flush();
        } else {
            token.push_back({cp, begin, i});
        }
    }
    flush();
    return terms;
}

int count_tokens(std::string_view text) {
    return static_cast<int>(tokenize(text).size());
}

std::string make_chunk_id(std::string_view source_doc, std::string_view section_label,
                          int row_number, std::string_view text) {
    std::string preimage;
    preimage.reserve(source_doc.size() + section_label.size() + text.size() + 16);
    preimage.append(source_doc);
    preimage += '\x1f';
    preimage.append(section_label);
    preimage += '\x1f';
    preimage += std::to_string(row_number);
    preimage += '\x1f';
    preimage.append(text);
    return to_hex16(fnv1a64(preimage));
}

std::string assign_bucket(const Chunk& chunk, SourceKind kind) {
    switch (kind) {
        case SourceKind::structured_row: return chunk.section_label;
        case SourceKind::plain_text: return "Text";
        case SourceKind::other_doc: return "Other";
    }
    return "Other";
}

Corpus Corpus::from_chunks(std::vector<Chunk> chunks, int rows_skipped) {
    if (chunks.empty()) throw AllRowsEmpty();

    Corpus corpus;
    std::set<std::string> positions;
    std::set<std::string> ids;
    for (const auto& c : chunks) {
        std::string pos = c.source_doc + '\x1f' + c.section_label + '\x1f' + std::to_string(c.row_number);
        if (!positions.insert(pos).second) {
            throw DuplicatePosition(c.source_doc + " / " + c.section_label + " / row " +
                                    std::to_string(c.row_number));
        }
        if (!ids.insert(c.chunk_id).second) {
            throw DataError("chunk id collision: " + c.chunk_id);
        }
    }

    long long total = 0;
    std::vector<int> counts;
    counts.reserve(chunks.size());
    for (const auto& c : chunks) {
        total += c.token_count;
        counts.push_back(c.token_count);
        std::unordered_set<std::string> seen;
        for (auto& term : tokenize(c.text)) {
            if (seen.insert(term).second) corpus.doc_freq_[term] += 1;
        }
    }
    std::sort(counts.begin(), counts.end());
    corpus.avg_tokens_ = static_cast<double>(total) / static_cast<double>(chunks.size());
    corpus.median_tokens_ = counts[(counts.size() - 1) / 2];
    corpus.rows_skipped_ = rows_skipped;
    corpus.chunks_ = std::move(chunks);
    return corpus;
}

int Corpus::doc_freq(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
}

const Chunk* Corpus::find(std::string_view chunk_id) const {
    for (const auto& c : chunks_) {
        if (c.chunk_id == chunk_id) return &c;
    }
    return nullptr;
}

Corpus ingest_rows(const std::vector<RowRecord>& rows, IngestReport* report) {
    std::vector<Chunk> chunks;
    chunks.reserve(rows.size());
    int skipped = 0;
    for (const auto& row : rows) {
        int tokens = count_tokens(row.text);
        if (tokens == 0) {
            ++skipped;
            continue;
        }
        Chunk c;
        c.text = row.text;
        c.section_label = row.section_label;
        c.row_number = row.row_number;
        c.source_doc = row.source_doc;
        c.token_count = tokens;
        c.chunk_id = make_chunk_id(row.source_doc, row.section_label, row.row_number, row.text);
        c.bucket = assign_bucket(c, SourceKind::structured_row);
        chunks.push_back(std::move(c));
    }
    if (report) {
        report->rows_seen = static_cast<int>(rows.size());
        report->rows_skipped = skipped;
    }
    return Corpus::from_chunks(std::move(chunks), skipped);
}

std::vector<Chunk> ingest_text(std::string_view source_doc, std::string_view text,
                               int max_chunk_tokens, SourceKind kind) {
    if (max_chunk_tokens < 1) throw UsageError("max_chunk_tokens must be >= 1");

    // Paragraphs are blank-line separated. Windows newlines are tolerated.
    std::vector<std::string> paragraphs;
    {
        std::string current;
        size_t i = 0;
        auto is_blank = [](const std::string& line) {
            return count_tokens(line) == 0;
        };
        std::string line;
        while (i <= text.size()) {
            if (i == text.size() || text[i] == '\n') {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (is_blank(line)) {
                    if (!current.empty()) paragraphs.push_back(current);
                    current.clear();
                } else {
                    if (!current.empty()) current += ' ';
                    current += line;
                }
                line.clear();
                if (i == text.size()) break;
            } else {
                line += text[i];
            }
            ++i;
        }
        if (!current.empty()) paragraphs.push_back(current);
    }

    std::vector<Chunk> chunks;
    int row = 0;
    for (size_t p = 0; p < paragraphs.size(); ++p) {
        auto terms = tokenize(paragraphs[p]);
        if (terms.empty()) continue;
        std::string label = std::string(source_doc) + "#" + std::to_string(p);
        // Segment at term boundaries; each segment holds at most
        // max_chunk_tokens terms of the normalized text.
        for (size_t off = 0; off < terms.size(); off += static_cast<size_t>(max_chunk_tokens)) {
            size_t end = std::min(terms.size(), off + static_cast<size_t>(max_chunk_tokens));
            std::string segment;
            for (size_t k = off; k < end; ++k) {
                if (k > off) segment += ' ';
                segment += terms[k];
            }
            Chunk c;
            c.text = segment;
            c.section_label = label;
            c.row_number = row++;
            c.source_doc = std::string(source_doc);
            c.token_count = static_cast<int>(end - off);
            c.chunk_id = make_chunk_id(c.source_doc, c.section_label, c.row_number, c.text);
            c.bucket = assign_bucket(c, kind);
            chunks.push_back(std::move(c));
        }
    }
    return chunks;
}

void Corpus::save(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["format_version"] = 1;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : chunks_) {
        arr.push_back({{"chunk_id", c.chunk_id},
                       {"text", c.text},
                       {"section_label", c.section_label},
                       {"bucket", c.bucket},
                       {"row_number", c.row_number},
                       {"source_doc", c.source_doc},
                       {"token_count", c.token_count}});
    }
    doc["chunks"] = std::move(arr);
    doc["stats"] = {{"chunk_count", chunk_count()},
                    {"avg_chunk_tokens", avg_tokens_},
                    {"median_chunk_tokens", median_tokens_},
                    {"rows_skipped", rows_skipped_},
                    {"doc_freq", doc_freq_}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    out << doc.dump(2) << '\n';
}

Corpus Corpus::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corpus file is not valid JSON: " + path.string() + " (" + e.what() + ")");
    }
    if (!doc.contains("format_version")) throw DataError("corpus file missing format_version");
    if (doc["format_version"].get<int>() != 1) {
        throw DataError("unsupported corpus format_version " + doc["format_version"].dump());
    }

    Corpus corpus;
    for (const auto& j : doc.at("chunks")) {
        Chunk c;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.text = j.at("text").get<std::string>();
        c.section_label = j.at("section_label").get<std::string>();
        c.bucket = j.at("bucket").get<std::string>();
        c.row_number = j.at("row_number").get<int>();
        c.source_doc = j.at("source_doc").get<std::string>();
        c.token_count = j.at("token_count").get<int>();
        corpus.chunks_.push_back(std::move(c));
    }
    const auto& stats = doc.at("stats");
    corpus.avg_tokens_ = stats.at("avg_chunk_tokens").get<double>();
    corpus.median_tokens_ = stats.at("median_chunk_tokens").get<int>();
    corpus.rows_skipped_ = stats.at("rows_skipped").get<int>();
    corpus.doc_freq_ = stats.at("doc_freq").get<std::map<std::string, int>>();
    if (stats.at("chunk_count").get<int>() != corpus.chunk_count()) {
        throw DataError("corpus file stats are inconsistent with chunk list");
    }
    if (corpus.chunks_.empty()) throw EmptyCorpus();
    return corpus;
}

}  // namespace bubble
