#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "modnet/tensor.hpp"

namespace modnet {

/// Named map from parameter identifiers to tensors; the single source of
/// truth for all trainable weights. Two lookups of the same name return the
/// same buffer, which is what ties Find modules with equal words.
///
/// Naming scheme: "find/<word>/w", "describe/W", "measure/W1",
/// "lstm/<which>/<gate>/W", "fusion/<name>", "kb/seed_proj/W",
/// "embed/<token>".
class ParameterStore {
public:
    explicit ParameterStore(std::uint64_t seed = 0) : rng_(seed) {}

    bool contains(const std::string& name) const { return params_.count(name) > 0; }
    Tensor get(const std::string& name) const;

    /// Glorot-uniform init: uniform(-s, s) with s = sqrt(6/(fan_in+fan_out)).
    Tensor create_matrix(const std::string& name, std::size_t rows, std::size_t cols);
    Tensor create_vector(const std::string& name, std::size_t n, std::size_t fan_in,
                         std::size_t fan_out);
    Tensor create_zeros(const std::string& name, Shape shape);

    /// Registers an externally built tensor (checkpoint load, embeddings).
    Tensor put(const std::string& name, Tensor t);

    void zero_grads();

    /// Once frozen no new parameters may be created; unseen words fall back
    /// to their <unk> entries.
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    std::size_t size() const { return params_.size(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    std::mt19937_64& rng() { return rng_; }

private:
    void check_writable(const std::string& name) const;

    std::map<std::string, Tensor> params_;
    std::mt19937_64 rng_;
    bool frozen_ = false;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_entry;  // "name[i]" of the entry attaining the max
};

/// Central-difference gradient check of a scalar function against the
/// reverse-mode gradients of every entry in the store.
///
/// f must build its graph on the supplied tape and return the scalar loss;
/// it must be deterministic and must not create parameters. Relative error
/// per entry is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckResult gradient_check(const std::function<Tensor(Tape&)>& f, ParameterStore& params,
                               double epsilon);

}  // namespace modnet
