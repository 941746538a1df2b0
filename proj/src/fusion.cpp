#include "modnet/fusion.hpp"

namespace modnet {

void init_fusion_head(ParameterStore& store, std::size_t num_classes, std::size_t q_hidden) {
    store.create_matrix("fusion/head/W", num_classes, num_classes);
    store.create_zeros("fusion/head/b", {num_classes});
    store.create_matrix("fusion/q_proj/W", num_classes, q_hidden);
    store.create_zeros("fusion/q_proj/b", {num_classes});
}

void init_caption_projection(ParameterStore& store, std::size_t num_classes,
                             std::size_t c_hidden) {
    store.create_matrix("fusion/c_proj/W", num_classes, c_hidden);
    store.create_zeros("fusion/c_proj/b", {num_classes});
}

void init_attention_params(ParameterStore& store, std::size_t num_classes, std::size_t d_emb,
                           std::size_t attn_k) {
    store.create_matrix("fusion/attn/WQ", attn_k, num_classes);
    store.create_matrix("fusion/attn/WC", attn_k, d_emb);
    store.create_matrix("fusion/attn/Wh", 1, attn_k);
    store.create_matrix("fusion/chat_proj/W", num_classes, d_emb);
    store.create_zeros("fusion/chat_proj/b", {num_classes});
}

void init_kb_seed(ParameterStore& store, std::size_t kb_dim, std::size_t q_hidden) {
    store.create_matrix("kb/seed_proj/W", q_hidden, kb_dim);
    store.create_zeros("kb/seed_proj/b", {q_hidden});
}

Tensor caption_info_head(Tape& tape, const Tensor& pred_nmn, const Tensor& m_q, const Tensor& m_c,
                         const ParameterStore& store) {
    Tensor mixed = tape.relu(tape.add(tape.add(pred_nmn, m_q), m_c));
    Tensor logits = tape.matvec(store.get("fusion/head/W"), mixed, store.get("fusion/head/b"));
    return tape.softmax(logits);
}

AttentionResult caption_attention(Tape& tape, const Tensor& m_q, const EmbeddedSeq& caption,
                                  const ParameterStore& store) {
    Tensor wq = store.get("fusion/attn/WQ");
    Tensor wc = store.get("fusion/attn/WC");
    Tensor wh = store.get("fusion/attn/Wh");

    Tensor question_gate = tape.sigmoid(tape.matvec(wq, m_q));
    std::vector<Tensor> h_cols, score_parts;
    h_cols.reserve(caption.steps.size());
    for (const Tensor& c_i : caption.steps) {
        Tensor h_i = tape.mul(question_gate, tape.sigmoid(tape.matvec(wc, c_i)));
        score_parts.push_back(tape.matvec(wh, h_i));
        h_cols.push_back(std::move(h_i));
    }

    AttentionResult result;
    result.h_matrix = tape.concat_cols(h_cols);
    result.a = tape.masked_softmax(tape.concat(score_parts), caption.mask);
    result.c_hat = tape.matvec(tape.concat_cols(caption.steps), result.a);
    return result;
}

Tensor caption_attn_head(Tape& tape, const Tensor& pred_nmn, const Tensor& m_q,
                         const AttentionResult& attn, const ParameterStore& store) {
    Tensor lifted = tape.matvec(store.get("fusion/chat_proj/W"), attn.c_hat,
                                store.get("fusion/chat_proj/b"));
    return caption_info_head(tape, pred_nmn, m_q, lifted, store);
}

Tensor caption_only_head(Tape& tape, const Tensor& m_q, const Tensor& m_c,
                         const ParameterStore& store) {
    return caption_info_head(tape, Tensor::zeros(m_q.shape()), m_q, m_c, store);
}

Tensor caption_only_head(Tape& tape, const Tensor& m_q, const AttentionResult& attn,
                         const ParameterStore& store) {
    return caption_attn_head(tape, Tensor::zeros(m_q.shape()), m_q, attn, store);
}

Tensor kb_seed(Tape& tape, const Tensor& kb_vector, const ParameterStore& store) {
    Tensor w = store.get("kb/seed_proj/W");
    if (kb_vector.size() != w.cols()) {
        throw DimensionError("kb_seed: vector has " + std::to_string(kb_vector.size()) +
                             " dimensions, projection wants " + std::to_string(w.cols()));
    }
    return tape.tanh(tape.matvec(w, kb_vector, store.get("kb/seed_proj/b")));
}

std::size_t argmax_index(const Tensor& dist) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[best]) best = i;
    }
    return best;
}

std::string predict_answer(const Tensor& dist, const AnswerVocab& vocab) {
    if (dist.size() != vocab.num_classes()) {
        throw DimensionError("predict_answer: distribution of " + std::to_string(dist.size()) +
                             " vs vocabulary of " + std::to_string(vocab.num_classes()));
    }
    return vocab.token(argmax_index(dist));
}

}  // namespace modnet
