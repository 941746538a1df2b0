#include "modnet/modules.hpp"

namespace modnet {

ImageGrid make_image_grid(Tensor features) {
    if (features.shape().size() != 3) {
        throw DimensionError("image grid must be DxHxW, got " + shape_str(features.shape()));
    }
    return ImageGrid{std::move(features)};
}

void init_nmn_params(ParameterStore& store, std::size_t channels, std::size_t height,
                     std::size_t width, std::size_t num_classes, std::size_t measure_hidden) {
    store.create_matrix("describe/W", num_classes, channels);
    store.create_zeros("describe/b", {num_classes});
    store.create_matrix("measure/W1", measure_hidden, height * width);
    store.create_zeros("measure/b1", {measure_hidden});
    store.create_matrix("measure/W2", num_classes, measure_hidden);
    store.create_zeros("measure/b2", {num_classes});
    ensure_find_word(store, kUnkWord, channels);
}

void ensure_find_word(ParameterStore& store, const std::string& word, std::size_t channels) {
    const std::string base = "find/" + word + "/";
    if (store.contains(base + "w")) return;
    store.create_vector(base + "w", channels, channels, 1);
    store.create_zeros(base + "b", {1});
}

std::string find_param_base(const ParameterStore& store, const std::string& word) {
    const std::string base = "find/" + word + "/";
    if (store.contains(base + "w")) return base;
    return std::string("find/") + kUnkWord + "/";
}

AttentionMap find_forward(Tape& tape, const ImageGrid& image, const std::string& word,
                          const ParameterStore& store) {
    const std::string base = find_param_base(store, word);
    Tensor w = store.get(base + "w");
    if (w.size() != image.channels()) {
        throw DimensionError("find(" + word + "): weight has " + std::to_string(w.size()) +
                             " channels, image has " + std::to_string(image.channels()));
    }
    Tensor pre = tape.conv1x1(image.features, w, store.get(base + "b"));
    return AttentionMap{tape.relu(pre)};
}

AttentionMap and_forward(Tape& tape, const AttentionMap& a, const AttentionMap& b) {
    return AttentionMap{tape.mul(a.weights, b.weights)};
}

Tensor describe_forward(Tape& tape, const ImageGrid& image, const AttentionMap& att,
                        const ParameterStore& store) {
    Tensor pooled = tape.attention_pool(image.features, att.weights, kDescribeEpsilon);
    return tape.matvec(store.get("describe/W"), pooled, store.get("describe/b"));
}

Tensor measure_forward(Tape& tape, const AttentionMap& att, const ParameterStore& store) {
    Tensor w1 = store.get("measure/W1");
    if (att.weights.size() != w1.cols()) {
        throw DimensionError("measure: attention " + shape_str(att.weights.shape()) +
                             " differs from trained size " + std::to_string(w1.cols()));
    }
    Tensor flat = tape.reshape(att.weights, {att.weights.size()});
    Tensor hidden = tape.relu(tape.matvec(w1, flat, store.get("measure/b1")));
    return tape.matvec(store.get("measure/W2"), hidden, store.get("measure/b2"));
}

namespace {

AttentionMap run_attention_node(Tape& tape, const Layout& node, const ImageGrid& image,
                                const ParameterStore& store, const std::string& path) {
    try {
        switch (node.kind) {
            case ModuleKind::kFind:
                return find_forward(tape, image, node.word, store);
            case ModuleKind::kAnd: {
                AttentionMap a =
                    run_attention_node(tape, node.children[0], image, store, path + "/0");
                AttentionMap b =
                    run_attention_node(tape, node.children[1], image, store, path + "/1");
                return and_forward(tape, a, b);
            }
            default:
                throw FormatError(std::string(to_string(node.kind)) +
                                  " does not produce an attention map");
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error("at " + path + ": " + e.what());
    }
}

}  // namespace

Tensor assemble_and_run(Tape& tape, const Layout& layout, const ImageGrid& image,
                        const ParameterStore& store) {
    type_check(layout);
    try {
        AttentionMap att = run_attention_node(tape, layout.children[0], image, store, "root/0");
        if (layout.kind == ModuleKind::kDescribe) {
            return describe_forward(tape, image, att, store);
        }
        return measure_forward(tape, att, store);
    } catch (const DimensionError& e) {
        throw DimensionError("layout " + print_layout(layout) + ": " + e.what());
    }
}

}  // namespace modnet
