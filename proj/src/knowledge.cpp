#include "modnet/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "modnet/binio.hpp"
#include "modnet/wordlists.hpp"

namespace modnet {

std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool title_passes_noun_filter(const std::string& title) {
    std::istringstream ss(title);
    std::string word;
    bool any = false;
    while (ss >> word) {
        any = true;
        const bool capitalized = std::isupper(static_cast<unsigned char>(word.front())) != 0;
        if (!capitalized && !is_common_noun(lower(word))) return false;
    }
    return any;
}

}  // namespace

IngestResult ingest_abstracts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open abstracts file: " + path);

    IngestResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            std::cerr << "warning: abstracts line " << line_no << " has no tab, skipped\n";
            ++result.malformed;
            continue;
        }
        const std::string title = line.substr(0, tab);
        std::string text = line.substr(tab + 1);
        if (!title_passes_noun_filter(title)) {
            ++result.dropped;
            continue;
        }
        AbstractDoc doc;
        doc.id = static_cast<int>(result.docs.size());
        doc.title = title;
        doc.token_count = tokenize_text(text).size();
        doc.text = std::move(text);
        result.docs.push_back(std::move(doc));
    }
    if (result.docs.empty()) {
        throw FormatError("abstracts: no documents passed the noun filter in " + path);
    }
    return result;
}

std::vector<std::string> extract_query_nouns(const std::vector<std::string>& question_tokens) {
    std::vector<std::string> nouns;
    std::set<std::string> seen;
    for (const std::string& raw : question_tokens) {
        for (const std::string& tok : tokenize_text(raw)) {
            if (is_stop_or_closed_class(tok)) continue;
            if (seen.insert(tok).second) nouns.push_back(tok);
        }
    }
    return nouns;
}

KbIndex KbIndex::build(const std::vector<AbstractDoc>& docs, const EmbeddingTable& embeddings) {
    KbIndex index;
    index.doc_lengths_.reserve(docs.size());
    index.titles_.reserve(docs.size());

    double total_len = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const AbstractDoc& doc = docs[i];
        if (doc.id != static_cast<int>(i)) {
            throw Error("kb index: doc ids must be dense and in order");
        }
        std::map<std::string, std::uint32_t> tf;
        for (const std::string& tok : tokenize_text(doc.text)) ++tf[tok];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(i), count});
        }
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(doc.token_count));
        index.titles_.push_back(doc.title);
        total_len += static_cast<double>(doc.token_count);
    }
    index.avg_doc_length_ = docs.empty() ? 0.0 : total_len / static_cast<double>(docs.size());

    index.vector_dim_ = embeddings.dim();
    index.vectors_.reserve(docs.size());
    for (const AbstractDoc& doc : docs) {
        index.vectors_.push_back(idf_weighted_doc_vector(doc, embeddings, index));
    }
    return index;
}

double KbIndex::idf(const std::string& term) const {
    const auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(doc_count());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<SearchHit> KbIndex::search(const std::vector<std::string>& terms,
                                       std::size_t k) const {
    if (k == 0) throw Error("kb search: k must be at least 1");
    std::vector<std::string> unique_terms;
    for (const std::string& t : terms) {
        if (std::find(unique_terms.begin(), unique_terms.end(), t) == unique_terms.end()) {
            unique_terms.push_back(t);
        }
    }

    std::map<std::uint32_t, double> scores;
    for (const std::string& term : unique_terms) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double term_idf = idf(term);
        for (const Posting& p : it->second) {
            const double tf = static_cast<double>(p.tf);
            const double norm_len =
                static_cast<double>(doc_lengths_[p.doc]) / avg_doc_length_;
            const double tf_part =
                tf * (kBm25K1 + 1.0) / (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * norm_len));
            scores[p.doc] += term_idf * tf_part;
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) hits.push_back({static_cast<int>(doc), score});
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

const std::vector<double>& KbIndex::doc_vector(int doc_id) const {
    return vectors_.at(static_cast<std::size_t>(doc_id));
}

std::vector<double> KbIndex::question_vector(const std::vector<std::string>& question_tokens,
                                             std::size_t k) const {
    std::vector<double> out(vector_dim_, 0.0);
    const std::vector<std::string> nouns = extract_query_nouns(question_tokens);
    if (nouns.empty()) return out;
    const std::vector<SearchHit> hits = search(nouns, k);
    if (hits.empty()) return out;
    for (const SearchHit& hit : hits) {
        const std::vector<double>& v = vectors_[static_cast<std::size_t>(hit.doc)];
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += v[d];
    }
    for (double& x : out) x /= static_cast<double>(hits.size());
    return out;
}

std::vector<double> idf_weighted_doc_vector(const AbstractDoc& doc,
                                            const EmbeddingTable& embeddings,
                                            const KbIndex& stats) {
    std::vector<double> acc(embeddings.dim(), 0.0);
    double weight_sum = 0.0;
    for (const std::string& tok : tokenize_text(doc.text)) {
        if (!embeddings.contains(tok)) continue;
        const double w = stats.idf(tok);
        const Tensor e = embeddings.lookup(tok);
        for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += w * e[d];
        weight_sum += w;
    }
    if (weight_sum == 0.0) return acc;  // nothing embeddable: the zero vector
    double norm = 0.0;
    for (double& x : acc) {
        x /= weight_sum;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return acc;
    for (double& x : acc) x /= norm;
    return acc;
}

namespace {

constexpr char kKbMagic[] = "MODNKB01";

}  // namespace

void KbIndex::save(const std::string& path) const {
    using nlohmann::json;

    std::vector<std::uint8_t> payload;
    json terms = json::array();
    for (const auto& [term, plist] : postings_) {
        json t;
        t["t"] = term;
        t["df"] = plist.size();
        t["offset"] = payload.size();
        for (const Posting& p : plist) {
            binio::put_u32(payload, p.doc);
            binio::put_u32(payload, p.tf);
        }
        terms.push_back(std::move(t));
    }
    json docs = json::array();
    for (std::size_t i = 0; i < doc_lengths_.size(); ++i) {
        json d;
        d["id"] = i;
        d["title"] = titles_[i];
        d["len"] = doc_lengths_[i];
        d["vec_offset"] = payload.size();
        for (double v : vectors_[i]) binio::put_f64(payload, v);
        docs.push_back(std::move(d));
    }

    json header;
    header["format_version"] = 1;
    header["doc_count"] = doc_lengths_.size();
    header["avg_doc_len"] = avg_doc_length_;
    header["vector_dim"] = vector_dim_;
    header["terms"] = std::move(terms);
    header["docs"] = std::move(docs);
    const std::string header_text = header.dump();

    std::vector<std::uint8_t> bytes;
    bytes.insert(bytes.end(), kKbMagic, kKbMagic + 8);
    binio::put_u64(bytes, header_text.size());
    bytes.insert(bytes.end(), header_text.begin(), header_text.end());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    binio::write_file(path, bytes);
}

KbIndex KbIndex::load(const std::string& path) {
    using nlohmann::json;

    const std::vector<std::uint8_t> bytes = binio::read_file(path);
    binio::Reader r{bytes.data(), bytes.size(), 0, "kb index " + path};
    if (r.bytes(8) != kKbMagic) throw FormatError("kb index " + path + ": bad magic");
    const std::uint64_t header_len = r.u64();
    json header;
    try {
        header = json::parse(r.bytes(header_len));
    } catch (const json::exception& e) {
        throw FormatError("kb index " + path + ": bad header: " + e.what());
    }
    if (header.at("format_version").get<int>() != 1) {
        throw FormatError("kb index " + path + ": unsupported format version");
    }

    KbIndex index;
    index.avg_doc_length_ = header.at("avg_doc_len").get<double>();
    index.vector_dim_ = header.at("vector_dim").get<std::size_t>();
    const std::size_t payload_start = r.at;
    binio::Reader payload{bytes.data() + payload_start, bytes.size() - payload_start, 0,
                          "kb index " + path};

    for (const json& t : header.at("terms")) {
        payload.at = t.at("offset").get<std::size_t>();
        const std::size_t df = t.at("df").get<std::size_t>();
        std::vector<Posting>& plist = index.postings_[t.at("t").get<std::string>()];
        plist.reserve(df);
        for (std::size_t i = 0; i < df; ++i) {
            Posting p;
            p.doc = payload.u32();
            p.tf = payload.u32();
            plist.push_back(p);
        }
    }
    const json& docs = header.at("docs");
    const std::size_t doc_count = header.at("doc_count").get<std::size_t>();
    if (docs.size() != doc_count) {
        throw FormatError("kb index " + path + ": doc manifest does not match doc_count");
    }
    index.doc_lengths_.resize(doc_count);
    index.titles_.resize(doc_count);
    index.vectors_.resize(doc_count);
    for (const json& d : docs) {
        const std::size_t id = d.at("id").get<std::size_t>();
        if (id >= doc_count) throw FormatError("kb index " + path + ": doc id out of range");
        index.doc_lengths_[id] = d.at("len").get<std::uint32_t>();
        index.titles_[id] = d.at("title").get<std::string>();
        payload.at = d.at("vec_offset").get<std::size_t>();
        std::vector<double>& vec = index.vectors_[id];
        vec.resize(index.vector_dim_);
        for (double& v : vec) v = payload.f64();
    }
    return index;
}

}  // namespace modnet

namespace modnet::binio {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing file: " + path);
}

}  // namespace modnet::binio
