#include "modnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modnet {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor Tensor::zeros(Shape shape) {
    return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double value) {
    auto d = std::make_shared<TensorData>();
    d->values.assign(shape_numel(shape), value);
    d->shape = std::move(shape);
    return Tensor(std::move(d));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor: shape " + shape_str(shape) + " wants " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value) {
    return from({1}, {value});
}

std::size_t Tensor::rows() const {
    if (d_->shape.size() != 2) {
        throw DimensionError("tensor: rows() on non-matrix " + shape_str(d_->shape));
    }
    return d_->shape[0];
}

std::size_t Tensor::cols() const {
    if (d_->shape.size() != 2) {
        throw DimensionError("tensor: cols() on non-matrix " + shape_str(d_->shape));
    }
    return d_->shape[1];
}

void Tensor::ensure_grad() {
    if (d_->grad.size() != d_->values.size()) d_->grad.assign(d_->values.size(), 0.0);
}

void Tensor::zero_grad() {
    d_->grad.assign(d_->values.size(), 0.0);
}

void Tensor::clear_grad() {
    d_->grad.clear();
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) d_->grad[i] += g[i];
}

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

double sigmoid_scalar(double v) {
    return 1.0 / (1.0 + std::exp(-v));
}

}  // namespace

Tensor Tape::push(TapeRecord rec, Shape out_shape) {
    rec.output = Tensor::zeros(std::move(out_shape));
    eval_record(rec);
    Tensor out = rec.output;
    producer_[out.data()] = records_.size();
    records_.push_back(std::move(rec));
    return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    return push({Op::kAdd, {a, b}, {}}, a.shape());
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    return push({Op::kMul, {a, b}, {}}, a.shape());
}

Tensor Tape::relu(const Tensor& x) {
    return push({Op::kRelu, {x}, {}}, x.shape());
}

Tensor Tape::sigmoid(const Tensor& x) {
    return push({Op::kSigmoid, {x}, {}}, x.shape());
}

Tensor Tape::tanh(const Tensor& x) {
    return push({Op::kTanh, {x}, {}}, x.shape());
}

Tensor Tape::matvec(const Tensor& w, const Tensor& x) {
    return matvec(w, x, Tensor());
}

Tensor Tape::matvec(const Tensor& w, const Tensor& x, const Tensor& bias) {
    if (w.shape().size() != 2 || x.shape().size() != 1 || w.cols() != x.size()) {
        throw DimensionError("matvec: dimension mismatch: W " + shape_str(w.shape()) + " vs x " +
                             shape_str(x.shape()));
    }
    if (bias.defined() && (bias.shape().size() != 1 || bias.size() != w.rows())) {
        throw DimensionError("matvec: bias " + shape_str(bias.shape()) + " vs W " +
                             shape_str(w.shape()));
    }
    std::vector<Tensor> in = {w, x};
    if (bias.defined()) in.push_back(bias);
    return push({Op::kMatVec, std::move(in), {}}, {w.rows()});
}

Tensor Tape::masked_softmax(const Tensor& scores, const std::vector<bool>& mask) {
    if (scores.shape().size() != 1 || mask.size() != scores.size()) {
        throw DimensionError("masked_softmax: scores " + shape_str(scores.shape()) + " vs mask of " +
                             std::to_string(mask.size()));
    }
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
        throw Error("masked_softmax: all positions masked");
    }
    TapeRecord rec{Op::kMaskedSoftmax, {scores}, {}};
    rec.mask.assign(mask.begin(), mask.end());
    return push(std::move(rec), scores.shape());
}

Tensor Tape::softmax(const Tensor& scores) {
    return masked_softmax(scores, std::vector<bool>(scores.size(), true));
}

Tensor Tape::conv1x1(const Tensor& image, const Tensor& w, const Tensor& bias) {
    if (image.shape().size() != 3) {
        throw DimensionError("conv1x1: image must be DxHxW, got " + shape_str(image.shape()));
    }
    if (w.shape().size() != 1 || w.size() != image.shape()[0]) {
        throw DimensionError("conv1x1: weight " + shape_str(w.shape()) +
                             " does not match image channels " + shape_str(image.shape()));
    }
    if (bias.shape().size() != 1 || bias.size() != 1) {
        throw DimensionError("conv1x1: bias must be a scalar, got " + shape_str(bias.shape()));
    }
    return push({Op::kConv1x1, {image, w, bias}, {}}, {image.shape()[1], image.shape()[2]});
}

Tensor Tape::attention_pool(const Tensor& image, const Tensor& att, double epsilon) {
    if (image.shape().size() != 3 || att.shape().size() != 2 ||
        image.shape()[1] != att.shape()[0] || image.shape()[2] != att.shape()[1]) {
        throw DimensionError("attention_pool: image " + shape_str(image.shape()) + " vs attention " +
                             shape_str(att.shape()));
    }
    TapeRecord rec{Op::kAttentionPool, {image, att}, {}};
    rec.c = epsilon;
    return push(std::move(rec), {image.shape()[0]});
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.size()) {
        throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    return push({Op::kReshape, {x}, {}}, std::move(shape));
}

Tensor Tape::concat(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw DimensionError("concat: no inputs");
    std::size_t total = 0;
    for (const Tensor& t : xs) total += t.size();
    return push({Op::kConcat, xs, {}}, {total});
}

Tensor Tape::concat_cols(const std::vector<Tensor>& cols) {
    if (cols.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t d = cols.front().size();
    for (const Tensor& t : cols) {
        if (t.shape().size() != 1 || t.size() != d) {
            throw DimensionError("concat_cols: column " + shape_str(t.shape()) + " vs expected [" +
                                 std::to_string(d) + "]");
        }
    }
    return push({Op::kConcatCols, cols, {}}, {d, cols.size()});
}

Tensor Tape::pick(const Tensor& x, std::size_t index) {
    if (index >= x.size()) {
        throw DimensionError("pick: index " + std::to_string(index) + " out of range for " +
                             shape_str(x.shape()));
    }
    TapeRecord rec{Op::kPick, {x}, {}};
    rec.index = index;
    return push(std::move(rec), {1});
}

Tensor Tape::log_clamped(const Tensor& x, double floor) {
    TapeRecord rec{Op::kLogClamped, {x}, {}};
    rec.c = floor;
    return push(std::move(rec), x.shape());
}

Tensor Tape::scale(const Tensor& x, double factor) {
    TapeRecord rec{Op::kScale, {x}, {}};
    rec.c = factor;
    return push(std::move(rec), x.shape());
}

Tensor Tape::sum(const Tensor& x) {
    return push({Op::kSum, {x}, {}}, {1});
}

void Tape::eval_record(TapeRecord& rec) const {
    const std::vector<Tensor>& in = rec.inputs;
    std::vector<double>& out = rec.output.values();
    switch (rec.op) {
        case Op::kAdd:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[0][i] + in[1][i];
            break;
        case Op::kMul:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[0][i] * in[1][i];
            break;
        case Op::kRelu:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[0][i] > 0.0 ? in[0][i] : 0.0;
            break;
        case Op::kSigmoid:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(in[0][i]);
            break;
        case Op::kTanh:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(in[0][i]);
            break;
        case Op::kMatVec: {
            const Tensor& w = in[0];
            const Tensor& x = in[1];
            const std::size_t m = w.rows(), n = w.cols();
            for (std::size_t i = 0; i < m; ++i) {
                double acc = in.size() > 2 ? in[2][i] : 0.0;
                const double* row = w.values().data() + i * n;
                for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
                out[i] = acc;
            }
            break;
        }
        case Op::kMaskedSoftmax: {
            // Max-subtraction for numerical stability; masked entries are
            // exactly zero and never touch the exponentials.
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < out.size(); ++i) {
                if (rec.mask[i] && in[0][i] > mx) mx = in[0][i];
            }
            double z = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = rec.mask[i] ? std::exp(in[0][i] - mx) : 0.0;
                z += out[i];
            }
            for (std::size_t i = 0; i < out.size(); ++i) out[i] /= z;
            break;
        }
        case Op::kConv1x1: {
            const Tensor& img = in[0];
            const std::size_t depth = img.shape()[0], hw = out.size();
            for (std::size_t p = 0; p < hw; ++p) {
                double acc = in[2][0];
                for (std::size_t d = 0; d < depth; ++d) acc += in[1][d] * img[d * hw + p];
                out[p] = acc;
            }
            break;
        }
        case Op::kAttentionPool: {
            const Tensor& img = in[0];
            const Tensor& att = in[1];
            const std::size_t depth = img.shape()[0], hw = att.size();
            double mass = 0.0;
            for (std::size_t p = 0; p < hw; ++p) mass += att[p];
            const double denom = mass + rec.c;
            for (std::size_t d = 0; d < depth; ++d) {
                double acc = 0.0;
                for (std::size_t p = 0; p < hw; ++p) acc += att[p] * img[d * hw + p];
                out[d] = acc / denom;
            }
            break;
        }
        case Op::kReshape:
            out = in[0].values();
            break;
        case Op::kConcat: {
            std::size_t at = 0;
            for (const Tensor& t : in) {
                for (std::size_t i = 0; i < t.size(); ++i) out[at++] = t[i];
            }
            break;
        }
        case Op::kConcatCols: {
            const std::size_t d = in.front().size(), n = in.size();
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < d; ++i) out[i * n + j] = in[j][i];
            }
            break;
        }
        case Op::kPick:
            out[0] = in[0][rec.index];
            break;
        case Op::kLogClamped:
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = std::log(in[0][i] > rec.c ? in[0][i] : rec.c);
            }
            break;
        case Op::kScale:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[0][i] * rec.c;
            break;
        case Op::kSum: {
            double acc = 0.0;
            for (std::size_t i = 0; i < in[0].size(); ++i) acc += in[0][i];
            out[0] = acc;
            break;
        }
    }
}

bool Tape::wants_grad(const Tensor& t) const {
    return t.requires_grad() || producer_.count(t.data()) > 0;
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw DimensionError("backward: loss must be a scalar, got " +
                             (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
    }
    if (producer_.find(loss.data()) == producer_.end()) {
        throw Error("backward: loss tensor was not produced by this tape");
    }

    std::unordered_map<const TensorData*, std::vector<double>> grads;
    grads[loss.data()] = {1.0};
    auto buf = [&](const Tensor& t) -> std::vector<double>& {
        auto it = grads.find(t.data());
        if (it == grads.end()) it = grads.emplace(t.data(), std::vector<double>(t.size(), 0.0)).first;
        return it->second;
    };

    for (std::size_t r = records_.size(); r-- > 0;) {
        const TapeRecord& rec = records_[r];
        auto git = grads.find(rec.output.data());
        if (git == grads.end()) continue;
        const std::vector<double> g = git->second;  // copy: buf() may rehash the map
        const std::vector<Tensor>& in = rec.inputs;

        switch (rec.op) {
            case Op::kAdd:
                if (wants_grad(in[0])) {
                    auto& ga = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (wants_grad(in[1])) {
                    auto& gb = buf(in[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                }
                break;
            case Op::kMul:
                if (wants_grad(in[0])) {
                    auto& ga = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * in[1][i];
                }
                if (wants_grad(in[1])) {
                    auto& gb = buf(in[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * in[0][i];
                }
                break;
            case Op::kRelu:
                // Subgradient at exactly 0 is 0.
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        if (in[0][i] > 0.0) gx[i] += g[i];
                    }
                }
                break;
            case Op::kSigmoid:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double y = rec.output[i];
                        gx[i] += g[i] * y * (1.0 - y);
                    }
                }
                break;
            case Op::kTanh:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        const double y = rec.output[i];
                        gx[i] += g[i] * (1.0 - y * y);
                    }
                }
                break;
            case Op::kMatVec: {
                const Tensor& w = in[0];
                const Tensor& x = in[1];
                const std::size_t m = w.rows(), n = w.cols();
                if (wants_grad(w)) {
                    auto& gw = buf(w);
                    for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += g[i] * x[j];
                    }
                }
                if (wants_grad(x)) {
                    auto& gx = buf(x);
                    for (std::size_t i = 0; i < m; ++i) {
                        const double* row = w.values().data() + i * n;
                        for (std::size_t j = 0; j < n; ++j) gx[j] += g[i] * row[j];
                    }
                }
                if (in.size() > 2 && wants_grad(in[2])) {
                    auto& gb = buf(in[2]);
                    for (std::size_t i = 0; i < m; ++i) gb[i] += g[i];
                }
                break;
            }
            case Op::kMaskedSoftmax: {
                if (!wants_grad(in[0])) break;
                double dot = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (rec.mask[i]) dot += rec.output[i] * g[i];
                }
                auto& gx = buf(in[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (rec.mask[i]) gx[i] += rec.output[i] * (g[i] - dot);
                }
                break;
            }
            case Op::kConv1x1: {
                const Tensor& img = in[0];
                const std::size_t depth = img.shape()[0], hw = g.size();
                if (wants_grad(img)) {
                    auto& gi = buf(img);
                    for (std::size_t d = 0; d < depth; ++d) {
                        for (std::size_t p = 0; p < hw; ++p) gi[d * hw + p] += g[p] * in[1][d];
                    }
                }
                if (wants_grad(in[1])) {
                    auto& gw = buf(in[1]);
                    for (std::size_t d = 0; d < depth; ++d) {
                        double acc = 0.0;
                        for (std::size_t p = 0; p < hw; ++p) acc += g[p] * img[d * hw + p];
                        gw[d] += acc;
                    }
                }
                if (wants_grad(in[2])) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < hw; ++p) acc += g[p];
                    buf(in[2])[0] += acc;
                }
                break;
            }
            case Op::kAttentionPool: {
                const Tensor& img = in[0];
                const Tensor& att = in[1];
                const std::size_t depth = img.shape()[0], hw = att.size();
                double mass = 0.0;
                for (std::size_t p = 0; p < hw; ++p) mass += att[p];
                const double denom = mass + rec.c;
                if (wants_grad(img)) {
                    auto& gi = buf(img);
                    for (std::size_t d = 0; d < depth; ++d) {
                        for (std::size_t p = 0; p < hw; ++p) {
                            gi[d * hw + p] += g[d] * att[p] / denom;
                        }
                    }
                }
                if (wants_grad(att)) {
                    auto& ga = buf(att);
                    for (std::size_t p = 0; p < hw; ++p) {
                        double acc = 0.0;
                        for (std::size_t d = 0; d < depth; ++d) {
                            acc += g[d] * (img[d * hw + p] - rec.output[d]) / denom;
                        }
                        ga[p] += acc;
                    }
                }
                break;
            }
            case Op::kReshape:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                }
                break;
            case Op::kConcat: {
                std::size_t at = 0;
                for (const Tensor& t : in) {
                    if (wants_grad(t)) {
                        auto& gt = buf(t);
                        for (std::size_t i = 0; i < t.size(); ++i) gt[i] += g[at + i];
                    }
                    at += t.size();
                }
                break;
            }
            case Op::kConcatCols: {
                const std::size_t d = in.front().size(), n = in.size();
                for (std::size_t j = 0; j < n; ++j) {
                    if (!wants_grad(in[j])) continue;
                    auto& gc = buf(in[j]);
                    for (std::size_t i = 0; i < d; ++i) gc[i] += g[i * n + j];
                }
                break;
            }
            case Op::kPick:
                if (wants_grad(in[0])) buf(in[0])[rec.index] += g[0];
                break;
            case Op::kLogClamped:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        if (in[0][i] > rec.c) gx[i] += g[i] / in[0][i];
                    }
                }
                break;
            case Op::kScale:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * rec.c;
                }
                break;
            case Op::kSum:
                if (wants_grad(in[0])) {
                    auto& gx = buf(in[0]);
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
                }
                break;
        }
    }

    // Flush accumulated gradients into every requires_grad tensor this tape
    // touched, exactly once per distinct buffer.
    std::unordered_map<const TensorData*, Tensor> seen;
    for (const TapeRecord& rec : records_) {
        for (const Tensor& t : rec.inputs) seen.emplace(t.data(), t);
        seen.emplace(rec.output.data(), rec.output);
    }
    for (auto& [ptr, t] : seen) {
        if (!t.requires_grad()) continue;
        Tensor mut = t;
        mut.ensure_grad();
        auto it = grads.find(ptr);
        if (it != grads.end()) mut.accumulate_grad(it->second);
    }
}

void Tape::replay() {
    for (TapeRecord& rec : records_) eval_record(rec);
}

}  // namespace modnet
