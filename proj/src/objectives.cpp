#include "hinet/objectives.hpp"

namespace hinet {

NodeRef reconstruction_loss(Graph& g,
                            const std::vector<std::pair<NodeRef, NodeRef>>& pairs) {
    NodeRef total = scalar_const(g, 0.0);
    for (const auto& [x, xhat] : pairs) total = scalar_add(g, total, l1_mean(g, x, xhat));
    return total;
}

GeneratorLossParts generator_objective(Graph& g, const NodeRef& d_fake, const NodeRef& yhat,
                                       const NodeRef& y, double lambda1, bool strict_minimax) {
    HINET_CHECK(lambda1 >= 0.0, ConfigError, "lambda1 must be non-negative, got ", lambda1);
    GeneratorLossParts parts;
    parts.adv = strict_minimax
                    ? scalar_scale(g, bce_term(g, d_fake, false, kScoreClampEps), -1.0)
                    : bce_term(g, d_fake, true, kScoreClampEps);
    parts.l1 = l1_mean(g, y, yhat);
    parts.total = scalar_add(g, parts.adv, scalar_scale(g, parts.l1, lambda1));
    return parts;
}

NodeRef discriminator_objective(Graph& g, const NodeRef& d_real, const NodeRef& d_fake) {
    return scalar_add(g, bce_term(g, d_real, true, kScoreClampEps),
                      bce_term(g, d_fake, false, kScoreClampEps));
}

}  // namespace hinet
