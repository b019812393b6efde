#pragma once

#include <cstdint>
#include <vector>

namespace headwayrl {

/// Plain fully-connected ReLU network with a linear output layer.
/// Parameters live in one flat vector (per layer: row-major weights, then
/// biases) so gradient checks, SGD and serialization stay trivial.
/// Inference is re-entrant; trained snapshots can be shared read-only.
class Mlp {
public:
    Mlp() = default;
    /// sizes = {in, hidden..., out}; weights ~ N(0, sqrt(2/fan_in)), biases 0
    Mlp(std::vector<int> sizes, std::uint64_t seed);
    /// wrap existing parameters (checkpoint load)
    Mlp(std::vector<int> sizes, std::vector<double> params);

    const std::vector<int>& sizes() const { return sizes_; }
    std::size_t param_count() const { return params_.size(); }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }

    std::vector<double> forward(const std::vector<double>& x) const;

    /// Mean squared error of q(s_i)[a_i] against target_i over the batch.
    /// Fills grad (resized to param_count) and returns the loss.
    double td_loss_grad(const std::vector<std::vector<double>>& states,
                        const std::vector<int>& actions, const std::vector<double>& targets,
                        std::vector<double>& grad) const;

    /// same loss without the gradient (finite-difference checks, reporting)
    double td_loss(const std::vector<std::vector<double>>& states,
                   const std::vector<int>& actions, const std::vector<double>& targets) const;

    void sgd_step(const std::vector<double>& grad, double learning_rate);

private:
    struct LayerView {
        std::size_t w_off; // [out][in] row-major
        std::size_t b_off;
        int in, out;
    };
    void build_views();

    std::vector<int> sizes_;
    std::vector<double> params_;
    std::vector<LayerView> layers_;
};

} // namespace headwayrl
