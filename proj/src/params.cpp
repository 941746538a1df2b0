#include "modnet/params.hpp"

#include <algorithm>
#include <cmath>

namespace modnet {

Tensor ParameterStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("parameter not found: " + name);
    return it->second;
}

void ParameterStore::check_writable(const std::string& name) const {
    if (frozen_) throw Error("parameter store is frozen, cannot create: " + name);
    if (params_.count(name)) throw Error("parameter already exists: " + name);
}

Tensor ParameterStore::create_matrix(const std::string& name, std::size_t rows, std::size_t cols) {
    check_writable(name);
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-s, s);
    std::vector<double> v(rows * cols);
    for (double& x : v) x = dist(rng_);
    Tensor t = Tensor::from({rows, cols}, std::move(v));
    t.set_requires_grad(true).set_name(name);
    params_.emplace(name, t);
    return t;
}

Tensor ParameterStore::create_vector(const std::string& name, std::size_t n, std::size_t fan_in,
                                     std::size_t fan_out) {
    check_writable(name);
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng_);
    Tensor t = Tensor::from({n}, std::move(v));
    t.set_requires_grad(true).set_name(name);
    params_.emplace(name, t);
    return t;
}

Tensor ParameterStore::create_zeros(const std::string& name, Shape shape) {
    check_writable(name);
    Tensor t = Tensor::zeros(std::move(shape));
    t.set_requires_grad(true).set_name(name);
    params_.emplace(name, t);
    return t;
}

Tensor ParameterStore::put(const std::string& name, Tensor t) {
    if (params_.count(name)) throw Error("parameter already exists: " + name);
    t.set_name(name);
    params_.emplace(name, t);
    return t;
}

void ParameterStore::zero_grads() {
    for (auto& [name, t] : params_) {
        Tensor mut = t;
        mut.zero_grad();
    }
}

GradCheckResult gradient_check(const std::function<Tensor(Tape&)>& f, ParameterStore& params,
                               double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) {
        throw Error("gradient_check: epsilon must lie in [1e-7, 1e-4], got " +
                    std::to_string(epsilon));
    }

    params.zero_grads();
    {
        Tape tape;
        Tensor loss = f(tape);
        tape.backward(loss);
    }
    std::map<std::string, std::vector<double>> analytic;
    for (const auto& [name, t] : params) analytic[name] = t.grad();

    auto loss_value = [&]() {
        Tape tape;
        Tensor loss = f(tape);
        return loss[0];
    };

    GradCheckResult result;
    for (const auto& [name, t] : params) {
        Tensor mut = t;
        for (std::size_t i = 0; i < mut.size(); ++i) {
            const double saved = mut[i];
            mut[i] = saved + epsilon;
            const double up = loss_value();
            mut[i] = saved - epsilon;
            const double down = loss_value();
            mut[i] = saved;

            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic[name][i];
            if (!std::isfinite(numeric) || !std::isfinite(a)) {
                throw Error("gradient_check: non-finite value at " + name + "[" +
                            std::to_string(i) + "]");
            }
            const double rel =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_entry = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

}  // namespace modnet
