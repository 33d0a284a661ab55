#include "hinet/graph.hpp"

namespace hinet {

void Graph::backward(const NodeRef& loss) {
    HINET_CHECK(record_, NumericError, "backward() requires a recording graph");
    HINET_CHECK(loss && loss->value.size() == 1, DimensionError,
                "backward() needs a scalar loss node");
    loss->ensure_grad().fill(1.0f);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
        Node& n = **it;
        if (!n.grad.empty() && n.backward) n.backward();
    }
}

}  // namespace hinet
