#include "modnet/model.hpp"

#include <set>

#include "json.hpp"

namespace modnet {

using nlohmann::json;

Variant variant_from_string(const std::string& name) {
    if (name == "nmn") return Variant::kNmn;
    if (name == "nmn+cap") return Variant::kNmnCap;
    if (name == "nmn+capattn") return Variant::kNmnCapAttn;
    if (name == "nmn+kb") return Variant::kNmnKb;
    if (name == "cap-only") return Variant::kCapOnly;
    throw Error("unknown model variant: " + name +
                " (expected nmn, nmn+cap, nmn+capattn, nmn+kb or cap-only)");
}

const char* to_string(Variant variant) {
    switch (variant) {
        case Variant::kNmn: return "nmn";
        case Variant::kNmnCap: return "nmn+cap";
        case Variant::kNmnCapAttn: return "nmn+capattn";
        case Variant::kNmnKb: return "nmn+kb";
        case Variant::kCapOnly: return "cap-only";
    }
    return "?";
}

bool variant_uses_nmn(Variant v) {
    return v != Variant::kCapOnly;
}
bool variant_uses_caption_lstm(Variant v) {
    return v == Variant::kNmnCap;
}
bool variant_uses_attention(Variant v) {
    return v == Variant::kNmnCapAttn || v == Variant::kCapOnly;
}
bool variant_uses_kb(Variant v) {
    return v == Variant::kNmnKb;
}

std::string RunConfig::to_json_text() const {
    json j;
    j["variant"] = to_string(variant);
    j["answers_k"] = answers_k;
    j["d_emb"] = d_emb;
    j["q_hidden"] = q_hidden;
    j["c_hidden"] = c_hidden;
    j["attn_k"] = attn_k;
    j["measure_hidden"] = measure_hidden;
    j["kb_topk"] = kb_topk;
    j["kb_dim"] = kb_dim;
    j["batch"] = batch;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["max_q_len"] = max_q_len;
    j["max_c_len"] = max_c_len;
    j["parse_mode"] = parse_mode == ParseMode::kShort ? "short" : "longest";
    j["measure_for_count"] = top_policy.measure_for_count;
    j["measure_for_yesno"] = top_policy.measure_for_yesno;
    j["seed"] = seed;
    j["channels"] = channels;
    j["height"] = height;
    j["width"] = width;
    j["data_path"] = data_path;
    j["val_path"] = val_path;
    j["embeddings_path"] = embeddings_path;
    j["index_path"] = index_path;
    return j.dump();
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: bad JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.answers_k = j.at("answers_k").get<std::size_t>();
    cfg.d_emb = j.at("d_emb").get<std::size_t>();
    cfg.q_hidden = j.at("q_hidden").get<std::size_t>();
    cfg.c_hidden = j.at("c_hidden").get<std::size_t>();
    cfg.attn_k = j.at("attn_k").get<std::size_t>();
    cfg.measure_hidden = j.at("measure_hidden").get<std::size_t>();
    cfg.kb_topk = j.at("kb_topk").get<std::size_t>();
    cfg.kb_dim = j.at("kb_dim").get<std::size_t>();
    cfg.batch = j.at("batch").get<std::size_t>();
    cfg.max_epochs = j.at("max_epochs").get<std::size_t>();
    cfg.patience = j.at("patience").get<std::size_t>();
    cfg.max_q_len = j.at("max_q_len").get<std::size_t>();
    cfg.max_c_len = j.at("max_c_len").get<std::size_t>();
    cfg.parse_mode =
        j.at("parse_mode").get<std::string>() == "short" ? ParseMode::kShort : ParseMode::kLongest;
    cfg.top_policy.measure_for_count = j.at("measure_for_count").get<bool>();
    cfg.top_policy.measure_for_yesno = j.at("measure_for_yesno").get<bool>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.channels = j.at("channels").get<std::size_t>();
    cfg.height = j.at("height").get<std::size_t>();
    cfg.width = j.at("width").get<std::size_t>();
    cfg.data_path = j.value("data_path", "");
    cfg.val_path = j.value("val_path", "");
    cfg.embeddings_path = j.value("embeddings_path", "");
    cfg.index_path = j.value("index_path", "");
    return cfg;
}

namespace {

void collect_find_words(const Layout& layout, std::set<std::string>& words) {
    if (layout.kind == ModuleKind::kFind) words.insert(layout.word);
    for (const Layout& child : layout.children) collect_find_words(child, words);
}

}  // namespace

void Model::init_for_training(std::vector<Instance>& train, const EmbeddingTable* pretrained,
                              const KbIndex* index) {
    if (train.empty()) throw Error("training set is empty");

    if (train.front().features.shape().size() != 3) {
        throw DimensionError("features must be DxHxW, got " +
                             shape_str(train.front().features.shape()));
    }
    cfg.channels = train.front().features.shape()[0];
    cfg.height = train.front().features.shape()[1];
    cfg.width = train.front().features.shape()[2];
    if (variant_uses_kb(cfg.variant)) {
        if (index == nullptr) throw Error("the nmn+kb variant needs a kb index");
        cfg.kb_dim = index->vector_dim();
    }

    vocab = build_answer_vocab(train, cfg.answers_k);
    prepare_instances(train, index);

    // Embeddings: pretrained entries first (they fix d_emb), then anything
    // the training data mentions, in dataset order.
    if (pretrained != nullptr) {
        cfg.d_emb = pretrained->dim();
        embeddings = EmbeddingTable(cfg.d_emb);
        for (const auto& [token, vec] : pretrained->entries()) embeddings.insert(token, vec);
    } else {
        embeddings = EmbeddingTable(cfg.d_emb);
    }
    embeddings.ensure_specials(params.rng());
    for (const Instance& inst : train) {
        for (const std::string& tok : inst.question) {
            if (!embeddings.contains(tok)) embeddings.insert_random(tok, params.rng());
        }
        for (const std::string& tok : inst.caption) {
            if (!embeddings.contains(tok)) embeddings.insert_random(tok, params.rng());
        }
    }
    for (const auto& [token, vec] : embeddings.entries()) params.put("embed/" + token, vec);

    const std::size_t classes = vocab.num_classes();
    init_fusion_head(params, classes, cfg.q_hidden);
    init_lstm_params(params, "lstm/question", cfg.d_emb, cfg.q_hidden);
    if (variant_uses_caption_lstm(cfg.variant)) {
        init_caption_projection(params, classes, cfg.c_hidden);
        init_lstm_params(params, "lstm/caption", cfg.d_emb, cfg.c_hidden);
    }
    if (variant_uses_attention(cfg.variant)) {
        init_attention_params(params, classes, cfg.d_emb, cfg.attn_k);
    }
    if (variant_uses_kb(cfg.variant)) {
        init_kb_seed(params, cfg.kb_dim, cfg.q_hidden);
    }
    if (variant_uses_nmn(cfg.variant)) {
        init_nmn_params(params, cfg.channels, cfg.height, cfg.width, classes,
                        cfg.measure_hidden);
        std::set<std::string> words;
        for (const Instance& inst : train) {
            if (inst.layout) collect_find_words(*inst.layout, words);
        }
        for (const std::string& word : words) ensure_find_word(params, word, cfg.channels);
    }
    params.freeze();
}

void Model::prepare_instances(std::vector<Instance>& instances, const KbIndex* index) const {
    for (Instance& inst : instances) {
        if (inst.features.shape() != Shape{cfg.channels, cfg.height, cfg.width}) {
            throw DimensionError("instance " + inst.id + ": features " +
                                 shape_str(inst.features.shape()) + " vs dataset " +
                                 shape_str({cfg.channels, cfg.height, cfg.width}));
        }
        inst.features = normalize_features(inst.features);
        inst.top_answer = most_frequent_answer(inst.answers);
        inst.target = vocab.index_or_other(inst.top_answer);

        if (variant_uses_nmn(cfg.variant)) {
            if (inst.layout_text) {
                inst.layout = parse_layout(*inst.layout_text);
            } else if (inst.dep_parse) {
                inst.layout = compile_from_parse(*inst.dep_parse, cfg.parse_mode,
                                                 TopModule::kAuto, cfg.top_policy);
            } else {
                throw Error("instance " + inst.id + " has neither a layout nor a dep parse");
            }
            type_check(*inst.layout);
        }
        if (variant_uses_kb(cfg.variant)) {
            if (index == nullptr) throw Error("the nmn+kb variant needs a kb index");
            inst.kb_vector = index->question_vector(inst.question, cfg.kb_topk);
        }
    }
}

Tensor Model::forward(Tape& tape, const Instance& inst) const {
    EmbeddedSeq question = embed_tokens(inst.question, embeddings, cfg.max_q_len);

    Tensor h0;
    if (variant_uses_kb(cfg.variant)) {
        if (inst.kb_vector.size() != cfg.kb_dim) {
            throw DimensionError("instance " + inst.id + ": kb vector of " +
                                 std::to_string(inst.kb_vector.size()) + " vs configured " +
                                 std::to_string(cfg.kb_dim));
        }
        h0 = kb_seed(tape, Tensor::from({cfg.kb_dim}, inst.kb_vector), params);
    }
    Tensor hq = lstm_encode(tape, question, params, "lstm/question", cfg.q_hidden, h0);
    Tensor m_q = project_context(tape, hq, params, ContextRole::kQuestion);

    Tensor pred_nmn;
    if (variant_uses_nmn(cfg.variant)) {
        if (!inst.layout) throw Error("instance " + inst.id + " was not prepared (no layout)");
        pred_nmn = assemble_and_run(tape, *inst.layout, ImageGrid{inst.features}, params);
    }

    switch (cfg.variant) {
        case Variant::kNmn:
        case Variant::kNmnKb:
            return caption_info_head(tape, pred_nmn, m_q, Tensor::zeros({num_classes()}), params);
        case Variant::kNmnCap: {
            EmbeddedSeq caption = embed_tokens(inst.caption, embeddings, cfg.max_c_len);
            Tensor hc = lstm_encode(tape, caption, params, "lstm/caption", cfg.c_hidden);
            Tensor m_c = project_context(tape, hc, params, ContextRole::kCaption);
            return caption_info_head(tape, pred_nmn, m_q, m_c, params);
        }
        case Variant::kNmnCapAttn: {
            EmbeddedSeq caption = embed_tokens(inst.caption, embeddings, cfg.max_c_len);
            AttentionResult attn = caption_attention(tape, m_q, caption, params);
            return caption_attn_head(tape, pred_nmn, m_q, attn, params);
        }
        case Variant::kCapOnly: {
            EmbeddedSeq caption = embed_tokens(inst.caption, embeddings, cfg.max_c_len);
            AttentionResult attn = caption_attention(tape, m_q, caption, params);
            return caption_only_head(tape, m_q, attn, params);
        }
    }
    throw Error("unreachable variant");
}

}  // namespace modnet
