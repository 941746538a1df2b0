#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modnet/layout.hpp"
#include "modnet/tensor.hpp"
#include "modnet/vocab.hpp"

namespace modnet {

/// One VQA example. features are raw on load; the training/eval pipeline
/// normalizes them and fills the derived fields (layout, target, kb_vector).
struct Instance {
    std::string id;
    std::vector<std::string> question;
    std::vector<std::string> caption;
    std::vector<std::string> answers;  // 1..10 human answers
    Tensor features;                   // D x H x W
    std::optional<std::vector<DepToken>> dep_parse;
    std::optional<std::string> layout_text;

    // Derived by the pipeline, not part of the file format.
    std::optional<Layout> layout;
    std::vector<double> kb_vector;
    std::size_t target = 0;
    std::string top_answer;
};

/// instances.jsonl: one JSON object per line with id, question, caption,
/// answers, features {shape,data} or features_ref {path,offset,shape},
/// optional dep_parse, optional layout. Relative feature paths resolve
/// against the jsonl's directory.
std::vector<Instance> load_instances_jsonl(const std::string& path);
void write_instances_jsonl(const std::string& path, const std::vector<Instance>& instances);

/// Most frequent answer string; ties break lexicographically.
std::string most_frequent_answer(const std::vector<std::string>& answers);

/// Top-k answers by frequency over all human answers of all instances.
AnswerVocab build_answer_vocab(const std::vector<Instance>& instances, std::size_t k);

/// (x - mean) / max(std, 1e-8) over the whole grid, population std.
Tensor normalize_features(const Tensor& grid);

enum class SynthTemplates { kAll, kColor, kCount, kExists };

struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n = 200;
    std::size_t height = 5;
    std::size_t width = 5;
    std::size_t channels = 16;  // >= 8: shape one-hots, color one-hots, noise
    double caption_rate = 1.0;  // probability the caption contains the answer
    double noise = 0.05;
    SynthTemplates templates = SynthTemplates::kAll;
    std::size_t emb_dim = 64;
};

struct SynthData {
    std::vector<Instance> instances;
    std::map<std::string, std::vector<double>> embeddings;
    std::vector<std::pair<std::string, std::string>> abstracts;  // title, text
};

/// Deterministic scenes of colored shapes rendered to one-hot(+noise)
/// feature grids, with templated questions, exact answers, matching
/// dependency parses, captions that contain the answer token with the
/// configured probability, plus embeddings and a small abstract corpus.
SynthData gen_synthetic(const SynthConfig& config);

void write_embeddings_file(const std::string& path,
                           const std::map<std::string, std::vector<double>>& embeddings);
void write_abstracts_file(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& abstracts);

const std::vector<std::string>& synth_colors();
const std::vector<std::string>& synth_shapes();

}  // namespace modnet
