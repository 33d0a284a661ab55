#pragma once
/// @file objectives.hpp
/// Training losses, assembled from graph ops so one code path serves both
/// training and loss reporting.

#include <utility>
#include <vector>

#include "hinet/graph.hpp"

namespace hinet {

/// Clamp applied to discriminator scores inside the log terms, keeping every
/// loss finite for any score in [0, 1].
inline constexpr double kScoreClampEps = 1e-7;

/// Sum over modalities of mean |x - x_reconstructed|.
NodeRef reconstruction_loss(Graph& g,
                            const std::vector<std::pair<NodeRef, NodeRef>>& pairs);

struct GeneratorLossParts {
    NodeRef adv;    ///< adversarial term on the fake score map
    NodeRef l1;     ///< mean |target - synthesized|
    NodeRef total;  ///< adv + lambda1 * l1
};

/// Generator-side objective.  The default adversarial term is the
/// non-saturating form mean(-log D(fake)); strict_minimax instead uses
/// mean(log(1 - D(fake))), the literal minimax term, which has weak
/// gradients early in training.
GeneratorLossParts generator_objective(Graph& g, const NodeRef& d_fake, const NodeRef& yhat,
                                       const NodeRef& y, double lambda1, bool strict_minimax);

/// mean(-log D(real)) + mean(-log(1 - D(fake))), averaged over batch and
/// score-map positions.
NodeRef discriminator_objective(Graph& g, const NodeRef& d_real, const NodeRef& d_fake);

}  // namespace hinet
