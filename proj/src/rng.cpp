#include "ptfprg/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ptfprg {

double CounterRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = uniform01();
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double c = std::cos(2.0 * M_PI * v);
    double s = std::sin(2.0 * M_PI * v);
    spare_ = r * s;
    has_spare_ = true;
    return r * c;
}

uint64_t RngBitSource::read(int nbits) {
    if (nbits < 1 || nbits > 64) throw std::invalid_argument("RngBitSource::read: nbits out of range");
    uint64_t out = 0;
    int need = nbits;
    while (need > 0) {
        if (avail_ == 0) {
            buf_ = rng_.next();
            avail_ = 64;
        }
        int take = need < avail_ ? need : avail_;
        uint64_t chunk = buf_ >> (64 - take);
        out = (take == 64) ? chunk : ((out << take) | chunk);
        buf_ = (take == 64) ? 0 : (buf_ << take);
        avail_ -= take;
        need -= take;
    }
    total_ += nbits;
    return out;
}

}  // namespace ptfprg
