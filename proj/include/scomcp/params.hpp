// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "scomcp/autodiff.hpp"
#include "scomcp/rng.hpp"

namespace scomcp::nn {

// Named parameter registry. Insertion order is the serialization order.
class ParamStore {
public:
    Var add(const std::string& name, Tensor init) {
        if (map_.count(name)) throw std::invalid_argument("ParamStore::add: duplicate " + name);
        auto v = leaf(std::move(init), true);
        order_.push_back(name);
        map_[name] = v;
        return v;
    }
    Var get(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) throw std::out_of_range("ParamStore::get: missing " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return map_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }

    void set_trainable_all(bool trainable) {
        for (auto& [k, v] : map_) v->requires_grad = trainable;
    }
    void set_trainable_prefix(const std::string& prefix, bool trainable) {
        for (auto& [k, v] : map_)
            if (k.rfind(prefix, 0) == 0) v->requires_grad = trainable;
    }
    void zero_grad() {
        for (auto& [k, v] : map_) v->clear_grad();
    }

    // FNV-1a over the raw value bytes of every parameter under prefix
    uint64_t hash_prefix(const std::string& prefix) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& name : order_) {
            if (name.rfind(prefix, 0) != 0) continue;
            const Tensor& t = map_.at(name)->val;
            const unsigned char* p = reinterpret_cast<const unsigned char*>(t.data());
            const size_t nbytes = static_cast<size_t>(t.size()) * sizeof(double);
            for (size_t i = 0; i < nbytes; ++i) {
                h ^= p[i];
                h *= 0x100000001b3ULL;
            }
        }
        return h;
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, Var> map_;
};

// He-normal init for a linear / conv weight with the given fan-in
inline Tensor he_init(int rows, int cols, int fan_in, std::mt19937_64& rng) {
    return Tensor::randn(rows, cols, rng, std::sqrt(2.0 / fan_in));
}

struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> state;  // m, v

    // applies one step to every trainable parameter carrying gradient, then
    // clears all gradients; grad_scale folds the 1/batch averaging in
    void step(ParamStore& params, double lr, double grad_scale) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (const auto& name : params.names()) {
            Var p = params.get(name);
            if (!p->requires_grad || p->grad.size() == 0) continue;
            auto& [m, v] = state[name];
            if (m.size() != p->val.size()) {
                m = Tensor::zeros(p->val.rows(), p->val.cols());
                v = Tensor::zeros(p->val.rows(), p->val.cols());
            }
            for (int64_t i = 0; i < p->val.size(); ++i) {
                const double g = p->grad[i] * grad_scale;
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                p->val[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
            }
        }
        for (const auto& name : params.names()) params.get(name)->clear_grad();
    }
};

}  // namespace scomcp::nn
