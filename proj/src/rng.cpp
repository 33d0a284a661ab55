#include "hinet/rng.hpp"

#include <sstream>

#include "hinet/common.hpp"

namespace hinet {

std::string RandomSource::state_str() const {
    std::ostringstream os;
    os << eng_;
    os << ' ' << (have_spare_ ? 1 : 0);
    if (have_spare_) {
        os.precision(17);
        os << ' ' << spare_;
    }
    return os.str();
}

void RandomSource::restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    int flag = 0;
    is >> flag;
    HINET_CHECK(!is.fail(), DataError, "malformed random source state");
    have_spare_ = flag != 0;
    if (have_spare_) {
        is >> spare_;
        HINET_CHECK(!is.fail(), DataError, "malformed random source state (spare value)");
    }
}

}  // namespace hinet
