#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "modnet/params.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kPadToken = "<pad>";

/// Token -> embedding vector. All vectors share one dimension; <pad> is the
/// zero vector and never trains. Vectors may be registered in a
/// ParameterStore by the owning model, in which case they train with
/// everything else.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    /// One line per token: token, space, dim space-separated decimals.
    static EmbeddingTable from_text_file(const std::string& path);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vecs_.size(); }
    bool contains(const std::string& token) const { return vecs_.count(token) > 0; }

    /// OOV tokens resolve to <unk>.
    Tensor lookup(const std::string& token) const;

    Tensor insert(const std::string& token, Tensor vec);
    Tensor insert_random(const std::string& token, std::mt19937_64& rng);

    /// Creates <unk> (random, trainable) and <pad> (zeros, frozen) if absent.
    void ensure_specials(std::mt19937_64& rng);

    const std::map<std::string, Tensor>& entries() const { return vecs_; }

private:
    std::size_t dim_ = 0;
    std::map<std::string, Tensor> vecs_;
};

/// A padded, embedded token sequence: max_len step vectors plus a mask that
/// marks the real tokens.
struct EmbeddedSeq {
    std::vector<Tensor> steps;
    std::vector<bool> mask;

    std::size_t real_length() const;
};

/// Pads or truncates to max_len; OOV maps to <unk>; an empty sequence
/// becomes a single <unk> token. Pure lookup, the table is not modified.
EmbeddedSeq embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                         std::size_t max_len);

/// Creates the four gate parameter triples (W, U, b) under
/// "<prefix>/<gate>/" for gates i, f, o, g.
void init_lstm_params(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden);

/// Standard single-layer LSTM over the unmasked positions. Initial hidden is
/// h0 when given (dimension checked) else zeros; the initial cell is always
/// zeros. Returns the hidden state after the last unmasked position, so
/// trailing padding can never change the result.
Tensor lstm_encode(Tape& tape, const EmbeddedSeq& seq, const ParameterStore& store,
                   const std::string& prefix, std::size_t hidden, const Tensor& h0 = {});

enum class ContextRole { kQuestion, kCaption };

/// m = W_proj * hidden + b_proj, projecting the encoder state into the
/// answer-vocabulary dimension.
Tensor project_context(Tape& tape, const Tensor& hidden, const ParameterStore& store,
                       ContextRole role);

}  // namespace modnet
