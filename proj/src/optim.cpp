#include "hinet/optim.hpp"

#include <cmath>

namespace hinet {

Adam::Adam(std::vector<ParamEntry> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    HINET_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ConfigError,
                "adam betas must lie in [0, 1)");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.push_back(Tensor::zeros(p.node->value.shape()));
        v_.push_back(Tensor::zeros(p.node->value.shape()));
    }
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double step_size = lr / bc1;
    const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
    for (size_t i = 0; i < params_.size(); ++i) {
        Node& p = *params_[i].node;
        Tensor& g = p.ensure_grad();
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        const int64_t n = p.value.size();
        for (int64_t j = 0; j < n; ++j) {
            const double gj = g[j];
            const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
            const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double denom = std::sqrt(vj) * inv_sqrt_bc2 + eps_;
            p.value[j] = static_cast<float>(p.value[j] - step_size * mj / denom);
        }
    }
}

std::vector<ParamEntry> discriminator_params(const ParamStore& store) {
    std::vector<ParamEntry> out;
    for (const auto& p : store.params())
        if (p.name.rfind("disc.", 0) == 0) out.push_back(p);
    return out;
}

std::vector<ParamEntry> generator_side_params(const ParamStore& store) {
    std::vector<ParamEntry> out;
    for (const auto& p : store.params())
        if (p.name.rfind("disc.", 0) != 0) out.push_back(p);
    return out;
}

}  // namespace hinet
