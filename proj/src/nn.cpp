#include "hinet/nn.hpp"

namespace hinet {

NodeRef ParamStore::add_param(const std::string& name, Tensor init) {
    HINET_CHECK(param_index_.count(name) == 0, ConfigError, "duplicate parameter name: ", name);
    param_index_[name] = params_.size();
    params_.push_back({name, Graph::param(std::move(init))});
    return params_.back().node;
}

Tensor* ParamStore::add_buffer(const std::string& name, Tensor init) {
    HINET_CHECK(buffer_index_.count(name) == 0, ConfigError, "duplicate buffer name: ", name);
    buffer_index_[name] = buffers_.size();
    buffers_.emplace_back(name, std::move(init));
    return &buffers_.back().second;
}

std::vector<std::pair<std::string, Tensor*>> ParamStore::buffers() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.reserve(buffers_.size());
    for (auto& [name, t] : buffers_) out.emplace_back(name, &t);
    return out;
}

NodeRef ParamStore::find_param(const std::string& name) const {
    auto it = param_index_.find(name);
    HINET_CHECK(it != param_index_.end(), ConfigError, "unknown parameter: ", name);
    return params_[it->second].node;
}

Tensor* ParamStore::find_buffer(const std::string& name) {
    auto it = buffer_index_.find(name);
    HINET_CHECK(it != buffer_index_.end(), ConfigError, "unknown buffer: ", name);
    return &buffers_[it->second].second;
}

std::vector<std::string> ParamStore::param_names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.name);
    return out;
}

int64_t ParamStore::total_param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.node->value.size();
    return n;
}

void ParamStore::zero_grads(const std::string& prefix) {
    for (auto& p : params_) {
        if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
        if (!p.node->grad.empty()) p.node->grad.fill(0.0f);
    }
}

Conv2d::Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int stride,
               RandomSource& rng, bool bias)
    : stride(stride) {
    Tensor weight({out_ch, in_ch, 3, 3});
    for (int64_t i = 0; i < weight.size(); ++i)
        weight[i] = static_cast<float>(rng.normal(0.0, kInitStddev));
    w = store.add_param(prefix + ".weight", std::move(weight));
    if (bias) b = store.add_param(prefix + ".bias", Tensor::zeros({out_ch}));
}

NodeRef Conv2d::forward(Graph& g, const NodeRef& x) const {
    return conv2d(g, x, w, b, stride, pad);
}

BatchNorm2d::BatchNorm2d(ParamStore& store, const std::string& prefix, int channels,
                         double momentum, double eps)
    : momentum(momentum), eps(eps) {
    gamma = store.add_param(prefix + ".scale", Tensor::full({channels}, 1.0f));
    beta = store.add_param(prefix + ".shift", Tensor::zeros({channels}));
    running_mean = store.add_buffer(prefix + ".running_mean", Tensor::zeros({channels}));
    running_var = store.add_buffer(prefix + ".running_var", Tensor::full({channels}, 1.0f));
}

NodeRef BatchNorm2d::forward(Graph& g, const NodeRef& x) const {
    return batchnorm2d(g, x, gamma, beta, *running_mean, *running_var, momentum, eps);
}

}  // namespace hinet
