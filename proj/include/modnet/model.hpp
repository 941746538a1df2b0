#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modnet/data.hpp"
#include "modnet/encoders.hpp"
#include "modnet/fusion.hpp"
#include "modnet/knowledge.hpp"
#include "modnet/layout.hpp"
#include "modnet/modules.hpp"
#include "modnet/params.hpp"
#include "modnet/vocab.hpp"

namespace modnet {

/// Model variants mirroring the ablation rows: plain module network, caption
/// information, caption attention, knowledge-base seeding, caption only.
enum class Variant { kNmn, kNmnCap, kNmnCapAttn, kNmnKb, kCapOnly };

Variant variant_from_string(const std::string& name);
const char* to_string(Variant variant);

bool variant_uses_nmn(Variant v);           // every variant except cap-only
bool variant_uses_caption_lstm(Variant v);  // nmn+cap
bool variant_uses_attention(Variant v);     // nmn+capattn, cap-only
bool variant_uses_kb(Variant v);            // nmn+kb

/// Everything needed to rebuild a model; serialized in full into the
/// checkpoint header so a checkpoint is self-describing.
struct RunConfig {
    Variant variant = Variant::kNmn;

    std::size_t answers_k = 64;      // answer classes before <other>
    std::size_t d_emb = 64;          // overridden by a loaded embedding file
    std::size_t q_hidden = 128;
    std::size_t c_hidden = 64;
    std::size_t attn_k = 200;
    std::size_t measure_hidden = 256;
    std::size_t kb_topk = 3;
    std::size_t kb_dim = 0;          // set from the kb index
    std::size_t batch = 32;
    std::size_t max_epochs = 12;
    std::size_t patience = 1;
    std::size_t max_q_len = 20;
    std::size_t max_c_len = 20;
    ParseMode parse_mode = ParseMode::kShort;
    TopPolicy top_policy;
    std::uint64_t seed = 0;

    // Dataset dimensions, fixed at training time.
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    // Recorded for provenance; not used after training.
    std::string data_path;
    std::string val_path;
    std::string embeddings_path;
    std::string index_path;

    std::string to_json_text() const;
    static RunConfig from_json_text(const std::string& text);
};

struct Model {
    RunConfig cfg;
    AnswerVocab vocab;
    ParameterStore params;
    EmbeddingTable embeddings;

    explicit Model(RunConfig config) : cfg(std::move(config)), params(cfg.seed) {}

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    /// Builds the vocabulary, fixes dataset dimensions, prepares the
    /// training instances, creates every parameter the variant needs (find
    /// words and embeddings from the training data) and freezes the store.
    void init_for_training(std::vector<Instance>& train, const EmbeddingTable* pretrained,
                           const KbIndex* index);

    /// Normalizes features, compiles layouts per config, fills targets and
    /// kb vectors. Requires the vocabulary; never creates parameters.
    void prepare_instances(std::vector<Instance>& instances, const KbIndex* index) const;

    /// Full forward pass for one prepared instance; returns the answer
    /// distribution (softmax output, length vocab.num_classes()).
    Tensor forward(Tape& tape, const Instance& inst) const;

    std::size_t num_classes() const { return vocab.num_classes(); }
};

}  // namespace modnet
