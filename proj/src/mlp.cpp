#include "headwayrl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "headwayrl/rng.hpp"

namespace headwayrl {

void Mlp::build_views() {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs at least two layers");
    for (int n : sizes_)
        if (n < 1) throw std::invalid_argument("layer sizes must be positive");
    layers_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        LayerView v;
        v.in = sizes_[l];
        v.out = sizes_[l + 1];
        v.w_off = off;
        off += static_cast<std::size_t>(v.in) * static_cast<std::size_t>(v.out);
        v.b_off = off;
        off += static_cast<std::size_t>(v.out);
        layers_.push_back(v);
    }
    if (params_.empty()) params_.assign(off, 0.0);
    if (params_.size() != off)
        throw std::invalid_argument("parameter vector does not match layer sizes");
}

Mlp::Mlp(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    build_views();
    Rng rng(seed);
    for (const auto& v : layers_) {
        const double sigma = std::sqrt(2.0 / static_cast<double>(v.in));
        for (std::size_t i = 0; i < static_cast<std::size_t>(v.in) * v.out; ++i)
            params_[v.w_off + i] = sigma * rng.normal();
        // biases stay zero
    }
}

Mlp::Mlp(std::vector<int> sizes, std::vector<double> params)
    : sizes_(std::move(sizes)), params_(std::move(params)) {
    build_views();
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != sizes_.front())
        throw std::invalid_argument("input size mismatch");
    std::vector<double> cur = x, next;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& v = layers_[l];
        next.assign(static_cast<std::size_t>(v.out), 0.0);
        for (int o = 0; o < v.out; ++o) {
            const double* w = &params_[v.w_off + static_cast<std::size_t>(o) * v.in];
            double acc = params_[v.b_off + static_cast<std::size_t>(o)];
            for (int i = 0; i < v.in; ++i) acc += w[i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = acc;
        }
        if (l + 1 < layers_.size())
            for (auto& a : next) a = a > 0.0 ? a : 0.0;
        cur.swap(next);
    }
    return cur;
}

double Mlp::td_loss_grad(const std::vector<std::vector<double>>& states,
                         const std::vector<int>& actions, const std::vector<double>& targets,
                         std::vector<double>& grad) const {
    const std::size_t B = states.size();
    if (actions.size() != B || targets.size() != B)
        throw std::invalid_argument("batch arrays must have equal length");
    if (B == 0) throw std::invalid_argument("empty batch");

    grad.assign(params_.size(), 0.0);
    double loss = 0.0;

    // per-sample activations (post-nonlinearity), layer 0 = input
    std::vector<std::vector<double>> act(layers_.size() + 1);
    std::vector<double> delta, delta_prev;

    for (std::size_t b = 0; b < B; ++b) {
        act[0] = states[b];
        if (static_cast<int>(act[0].size()) != sizes_.front())
            throw std::invalid_argument("input size mismatch");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& v = layers_[l];
            act[l + 1].assign(static_cast<std::size_t>(v.out), 0.0);
            for (int o = 0; o < v.out; ++o) {
                const double* w = &params_[v.w_off + static_cast<std::size_t>(o) * v.in];
                double acc = params_[v.b_off + static_cast<std::size_t>(o)];
                for (int i = 0; i < v.in; ++i) acc += w[i] * act[l][static_cast<std::size_t>(i)];
                if (l + 1 < layers_.size() && acc < 0.0) acc = 0.0;
                act[l + 1][static_cast<std::size_t>(o)] = acc;
            }
        }

        const int a = actions[b];
        if (a < 0 || a >= sizes_.back()) throw std::invalid_argument("action out of range");
        const double err = act.back()[static_cast<std::size_t>(a)] - targets[b];
        loss += err * err;

        // output delta: gradient flows only through the taken action's head
        delta.assign(static_cast<std::size_t>(sizes_.back()), 0.0);
        delta[static_cast<std::size_t>(a)] = 2.0 * err / static_cast<double>(B);

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& v = layers_[l];
            for (int o = 0; o < v.out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                double* gw = &grad[v.w_off + static_cast<std::size_t>(o) * v.in];
                for (int i = 0; i < v.in; ++i) gw[i] += d * act[l][static_cast<std::size_t>(i)];
                grad[v.b_off + static_cast<std::size_t>(o)] += d;
            }
            if (l == 0) break;
            delta_prev.assign(static_cast<std::size_t>(v.in), 0.0);
            for (int o = 0; o < v.out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                const double* w = &params_[v.w_off + static_cast<std::size_t>(o) * v.in];
                for (int i = 0; i < v.in; ++i) delta_prev[static_cast<std::size_t>(i)] += d * w[i];
            }
            // ReLU mask of the layer below
            for (int i = 0; i < v.in; ++i)
                if (act[l][static_cast<std::size_t>(i)] <= 0.0)
                    delta_prev[static_cast<std::size_t>(i)] = 0.0;
            delta.swap(delta_prev);
        }
    }
    return loss / static_cast<double>(B);
}

double Mlp::td_loss(const std::vector<std::vector<double>>& states,
                    const std::vector<int>& actions,
                    const std::vector<double>& targets) const {
    const std::size_t B = states.size();
    if (actions.size() != B || targets.size() != B || B == 0)
        throw std::invalid_argument("bad batch");
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        auto q = forward(states[b]);
        const double err = q[static_cast<std::size_t>(actions[b])] - targets[b];
        loss += err * err;
    }
    return loss / static_cast<double>(B);
}

void Mlp::sgd_step(const std::vector<double>& grad, double learning_rate) {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= learning_rate * grad[i];
}

} // namespace headwayrl
