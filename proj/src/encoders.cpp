#include "modnet/encoders.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace modnet {

EmbeddingTable EmbeddingTable::from_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (token.empty() || vals.empty()) {
            throw FormatError("embeddings: malformed line " + std::to_string(line_no) + " in " +
                              path);
        }
        if (table.dim_ == 0) table.dim_ = vals.size();
        if (vals.size() != table.dim_) {
            throw FormatError("embeddings: line " + std::to_string(line_no) + " has " +
                              std::to_string(vals.size()) + " values, expected " +
                              std::to_string(table.dim_));
        }
        const std::size_t n = vals.size();
        Tensor t = Tensor::from({n}, std::move(vals));
        t.set_requires_grad(true);
        table.vecs_.emplace(token, t);
    }
    if (table.vecs_.empty()) throw FormatError("embeddings: no entries in " + path);
    return table;
}

Tensor EmbeddingTable::lookup(const std::string& token) const {
    auto it = vecs_.find(token);
    if (it != vecs_.end()) return it->second;
    it = vecs_.find(kUnkToken);
    if (it == vecs_.end()) throw Error("embedding table has no <unk> entry");
    return it->second;
}

Tensor EmbeddingTable::insert(const std::string& token, Tensor vec) {
    if (vec.size() != dim_) {
        throw DimensionError("embedding for '" + token + "' has dimension " +
                             std::to_string(vec.size()) + ", table wants " + std::to_string(dim_));
    }
    auto [it, fresh] = vecs_.emplace(token, vec);
    if (!fresh) throw Error("embedding already present: " + token);
    return it->second;
}

Tensor EmbeddingTable::insert_random(const std::string& token, std::mt19937_64& rng) {
    const double s = std::sqrt(3.0 / static_cast<double>(dim_));
    std::uniform_real_distribution<double> dist(-s, s);
    std::vector<double> vals(dim_);
    for (double& v : vals) v = dist(rng);
    Tensor t = Tensor::from({dim_}, std::move(vals));
    t.set_requires_grad(true);
    return insert(token, t);
}

void EmbeddingTable::ensure_specials(std::mt19937_64& rng) {
    if (!vecs_.count(kUnkToken)) insert_random(kUnkToken, rng);
    if (!vecs_.count(kPadToken)) {
        Tensor pad = Tensor::zeros({dim_});
        insert(kPadToken, pad);  // requires_grad stays false: padding never trains
    }
}

std::size_t EmbeddedSeq::real_length() const {
    std::size_t n = 0;
    for (bool m : mask) n += m ? 1 : 0;
    return n;
}

EmbeddedSeq embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                         std::size_t max_len) {
    if (max_len == 0) throw Error("embed_tokens: max_len must be positive");
    std::vector<std::string> toks = tokens;
    if (toks.empty()) toks.push_back(kUnkToken);
    if (toks.size() > max_len) toks.resize(max_len);

    EmbeddedSeq seq;
    seq.steps.reserve(max_len);
    seq.mask.reserve(max_len);
    for (const std::string& t : toks) {
        seq.steps.push_back(table.lookup(t));
        seq.mask.push_back(true);
    }
    const Tensor pad = table.lookup(kPadToken);
    while (seq.steps.size() < max_len) {
        seq.steps.push_back(pad);
        seq.mask.push_back(false);
    }
    return seq;
}

namespace {

const char* kGates[] = {"i", "f", "o", "g"};

}  // namespace

void init_lstm_params(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden) {
    for (const char* gate : kGates) {
        const std::string base = prefix + "/" + gate + "/";
        store.create_matrix(base + "W", hidden, input_dim);
        store.create_matrix(base + "U", hidden, hidden);
        store.create_zeros(base + "b", {hidden});
    }
}

Tensor lstm_encode(Tape& tape, const EmbeddedSeq& seq, const ParameterStore& store,
                   const std::string& prefix, std::size_t hidden, const Tensor& h0) {
    if (h0.defined() && (h0.shape().size() != 1 || h0.size() != hidden)) {
        throw DimensionError("lstm_encode: h0 " + shape_str(h0.shape()) + " vs hidden " +
                             std::to_string(hidden));
    }
    Tensor wi = store.get(prefix + "/i/W"), ui = store.get(prefix + "/i/U"),
           bi = store.get(prefix + "/i/b");
    Tensor wf = store.get(prefix + "/f/W"), uf = store.get(prefix + "/f/U"),
           bf = store.get(prefix + "/f/b");
    Tensor wo = store.get(prefix + "/o/W"), uo = store.get(prefix + "/o/U"),
           bo = store.get(prefix + "/o/b");
    Tensor wg = store.get(prefix + "/g/W"), ug = store.get(prefix + "/g/U"),
           bg = store.get(prefix + "/g/b");

    Tensor h = h0.defined() ? h0 : Tensor::zeros({hidden});
    Tensor c = Tensor::zeros({hidden});
    for (std::size_t t = 0; t < seq.steps.size(); ++t) {
        if (!seq.mask[t]) continue;
        const Tensor& x = seq.steps[t];
        Tensor ig = tape.sigmoid(tape.add(tape.matvec(wi, x), tape.matvec(ui, h, bi)));
        Tensor fg = tape.sigmoid(tape.add(tape.matvec(wf, x), tape.matvec(uf, h, bf)));
        Tensor og = tape.sigmoid(tape.add(tape.matvec(wo, x), tape.matvec(uo, h, bo)));
        Tensor gg = tape.tanh(tape.add(tape.matvec(wg, x), tape.matvec(ug, h, bg)));
        c = tape.add(tape.mul(fg, c), tape.mul(ig, gg));
        h = tape.mul(og, tape.tanh(c));
    }
    return h;
}

Tensor project_context(Tape& tape, const Tensor& hidden, const ParameterStore& store,
                       ContextRole role) {
    const std::string base = role == ContextRole::kQuestion ? "fusion/q_proj/" : "fusion/c_proj/";
    return tape.matvec(store.get(base + "W"), hidden, store.get(base + "b"));
}

}  // namespace modnet
