#pragma once

#include <string>

#include "modnet/layout.hpp"
#include "modnet/params.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

/// Visual features for one image, shape D x H x W (channels first),
/// normalized before use.
struct ImageGrid {
    Tensor features;

    std::size_t channels() const { return features.shape()[0]; }
    std::size_t height() const { return features.shape()[1]; }
    std::size_t width() const { return features.shape()[2]; }
};

ImageGrid make_image_grid(Tensor features);

/// Nonnegative H x W weighting over grid positions. Nonnegativity holds by
/// construction: Find applies relu, And multiplies.
struct AttentionMap {
    Tensor weights;
};

inline constexpr double kDescribeEpsilon = 1e-8;
inline constexpr const char* kUnkWord = "<unk>";

/// Creates the shared module parameters: describe/{W,b}, measure/{W1,b1,W2,b2}
/// and the unknown-word entry find/<unk>/{w,b}.
void init_nmn_params(ParameterStore& store, std::size_t channels, std::size_t height,
                     std::size_t width, std::size_t num_classes, std::size_t measure_hidden);

/// Creates find/<word>/{w,b} if absent (and the store is not frozen).
void ensure_find_word(ParameterStore& store, const std::string& word, std::size_t channels);

/// Resolves the parameter name for a Find word: the word's own entry when
/// present, else the shared <unk> entry.
std::string find_param_base(const ParameterStore& store, const std::string& word);

/// att[y,x] = relu(w_word . image[:,y,x] + b_word); a 1x1 convolution.
AttentionMap find_forward(Tape& tape, const ImageGrid& image, const std::string& word,
                          const ParameterStore& store);

/// Elementwise product of two attention maps.
AttentionMap and_forward(Tape& tape, const AttentionMap& a, const AttentionMap& b);

/// Attention-weighted average of image features (mass-normalized with an
/// epsilon guard), then a linear layer to pre-softmax label scores.
Tensor describe_forward(Tape& tape, const ImageGrid& image, const AttentionMap& att,
                        const ParameterStore& store);

/// Flattened attention through a two-layer relu MLP to pre-softmax label
/// scores; the trailing softmax lives in the answer head.
Tensor measure_forward(Tape& tape, const AttentionMap& att, const ParameterStore& store);

/// Post-order execution of a type-checked layout over the image; returns the
/// root pre-softmax label scores. Module errors propagate with the layout
/// path prepended.
Tensor assemble_and_run(Tape& tape, const Layout& layout, const ImageGrid& image,
                        const ParameterStore& store);

}  // namespace modnet
