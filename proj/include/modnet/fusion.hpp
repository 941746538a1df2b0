#pragma once

#include <string>

#include "modnet/encoders.hpp"
#include "modnet/params.hpp"
#include "modnet/tensor.hpp"
#include "modnet/vocab.hpp"

namespace modnet {

/// Soft attention over caption positions: per-position probabilities a,
/// the attended caption vector c_hat and the hidden interaction matrix H.
struct AttentionResult {
    Tensor a;         // [N], masked positions exactly 0
    Tensor c_hat;     // [d_emb]
    Tensor h_matrix;  // [k x N]
};

/// Creates the shared head fusion/head/{W,b} and the context projections
/// fusion/q_proj and (optionally) fusion/c_proj.
void init_fusion_head(ParameterStore& store, std::size_t num_classes, std::size_t q_hidden);
void init_caption_projection(ParameterStore& store, std::size_t num_classes,
                             std::size_t c_hidden);

/// Creates fusion/attn/{WQ,WC,Wh} and the c_hat lift fusion/chat_proj/{W,b}.
void init_attention_params(ParameterStore& store, std::size_t num_classes, std::size_t d_emb,
                           std::size_t attn_k);

/// Creates kb/seed_proj/{W,b} mapping a kb vector to the question LSTM seed.
void init_kb_seed(ParameterStore& store, std::size_t kb_dim, std::size_t q_hidden);

/// Pred_V = softmax(W . relu((pred_nmn + m_Q) + m_C) + b). The plain head is
/// this with m_C = 0, so ablations differ by exactly one term.
Tensor caption_info_head(Tape& tape, const Tensor& pred_nmn, const Tensor& m_q, const Tensor& m_c,
                         const ParameterStore& store);

/// h_i = sigmoid(W_Q m_Q) * sigmoid(W_C c_i); a = softmax over unmasked
/// positions of W_h H; c_hat = sum_i a_i c_i.
AttentionResult caption_attention(Tape& tape, const Tensor& m_q, const EmbeddedSeq& caption,
                                  const ParameterStore& store);

/// As caption_info_head with the attended caption vector lifted into the
/// answer dimension by fusion/chat_proj.
Tensor caption_attn_head(Tape& tape, const Tensor& pred_nmn, const Tensor& m_q,
                         const AttentionResult& attn, const ParameterStore& store);

/// The corresponding head with pred_nmn replaced by the zero vector.
Tensor caption_only_head(Tape& tape, const Tensor& m_q, const Tensor& m_c,
                         const ParameterStore& store);
Tensor caption_only_head(Tape& tape, const Tensor& m_q, const AttentionResult& attn,
                         const ParameterStore& store);

/// h0 = tanh(W_seed . kb_vector + b_seed); a zero kb vector with zero bias
/// reproduces the unseeded zero initial state exactly.
Tensor kb_seed(Tape& tape, const Tensor& kb_vector, const ParameterStore& store);

/// Index of the largest entry; ties break to the lowest index.
std::size_t argmax_index(const Tensor& dist);

std::string predict_answer(const Tensor& dist, const AnswerVocab& vocab);

}  // namespace modnet
