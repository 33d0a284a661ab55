#pragma once
/// @file optim.hpp
/// Adam over a named subset of model parameters.

#include <string>
#include <vector>

#include "hinet/nn.hpp"

namespace hinet {

class Adam {
public:
    /// Owns first/second-moment slots for `params` (shared NodeRefs).
    Adam(std::vector<ParamEntry> params, double beta1, double beta2, double eps = 1e-8);

    /// One update with the given learning rate.  Parameters whose gradient
    /// was never touched this step are treated as having zero gradient.
    void step(double lr);

    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }

    const std::vector<ParamEntry>& params() const { return params_; }
    Tensor& slot_m(size_t i) { return m_[i]; }
    Tensor& slot_v(size_t i) { return v_[i]; }

private:
    std::vector<ParamEntry> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

/// Model parameters split into the two adversarially-trained groups.
std::vector<ParamEntry> discriminator_params(const ParamStore& store);
std::vector<ParamEntry> generator_side_params(const ParamStore& store);

}  // namespace hinet
