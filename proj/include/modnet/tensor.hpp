#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "modnet/errors.hpp"

namespace modnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward() touches this tensor
    bool requires_grad = false;
    std::string name;  // set for named parameters, empty otherwise
};

/// Dense row-major tensor of doubles with shared storage. Copies alias the
/// same buffer, which is how parameter tying works: every module instance
/// holding the same Tensor reads and updates one set of values.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    std::size_t size() const { return d_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double operator[](std::size_t i) const { return d_->values[i]; }
    double& operator[](std::size_t i) { return d_->values[i]; }
    const std::vector<double>& values() const { return d_->values; }
    std::vector<double>& values() { return d_->values; }

    bool requires_grad() const { return d_->requires_grad; }
    Tensor& set_requires_grad(bool on) {
        d_->requires_grad = on;
        return *this;
    }

    bool has_grad() const { return !d_->grad.empty(); }
    const std::vector<double>& grad() const { return d_->grad; }
    void ensure_grad();
    void zero_grad();
    void clear_grad();
    void accumulate_grad(const std::vector<double>& g);

    const std::string& name() const { return d_->name; }
    Tensor& set_name(std::string name) {
        d_->name = std::move(name);
        return *this;
    }

    /// Identity of the underlying buffer; two tensors are tied iff equal.
    TensorData* data() const { return d_.get(); }

private:
    explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<TensorData> d_;
};

enum class Op : std::uint8_t {
    kAdd,
    kMul,
    kRelu,
    kSigmoid,
    kTanh,
    kMatVec,
    kMaskedSoftmax,
    kConv1x1,
    kAttentionPool,
    kReshape,
    kConcat,
    kConcatCols,
    kPick,
    kLogClamped,
    kScale,
    kSum,
};

struct TapeRecord {
    Op op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::vector<std::uint8_t> mask;  // kMaskedSoftmax: 1 = position participates
    std::size_t index = 0;           // kPick
    double c = 0.0;  // kScale factor, kLogClamped floor, kAttentionPool epsilon
};

/// Records every primitive applied during one forward pass, in topological
/// order. backward() runs reverse-mode accumulation over the records;
/// replay() recomputes all outputs from the saved inputs through the same
/// code paths, so replayed values are bit-identical.
///
/// A tape is confined to a single thread and is rebuilt per forward pass;
/// layouts differ per instance so the graph is always dynamic.
class Tape {
public:
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor relu(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor tanh(const Tensor& x);
    Tensor matvec(const Tensor& w, const Tensor& x);
    Tensor matvec(const Tensor& w, const Tensor& x, const Tensor& bias);
    Tensor masked_softmax(const Tensor& scores, const std::vector<bool>& mask);
    Tensor softmax(const Tensor& scores);
    Tensor conv1x1(const Tensor& image, const Tensor& w, const Tensor& bias);
    Tensor attention_pool(const Tensor& image, const Tensor& att, double epsilon);
    Tensor reshape(const Tensor& x, Shape shape);
    Tensor concat(const std::vector<Tensor>& xs);
    Tensor concat_cols(const std::vector<Tensor>& cols);
    Tensor pick(const Tensor& x, std::size_t index);
    Tensor log_clamped(const Tensor& x, double floor);
    Tensor scale(const Tensor& x, double factor);
    Tensor sum(const Tensor& x);

    /// Reverse-mode sweep from a scalar loss node. Gradients are accumulated
    /// into the .grad of every requires_grad tensor reachable on this tape;
    /// tensors the loss does not depend on are left with zero contributions.
    void backward(const Tensor& loss);

    /// Recomputes every record's output values from its recorded inputs.
    void replay();

    std::size_t size() const { return records_.size(); }
    const TapeRecord& record(std::size_t i) const { return records_[i]; }

private:
    Tensor push(TapeRecord rec, Shape out_shape);
    void eval_record(TapeRecord& rec) const;
    bool wants_grad(const Tensor& t) const;

    std::vector<TapeRecord> records_;
    std::unordered_map<const TensorData*, std::size_t> producer_;
};

}  // namespace modnet
