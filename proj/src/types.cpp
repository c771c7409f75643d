#include "durem/types.hpp"

#include <algorithm>
#include <cctype>

namespace durem {

Directionality parse_directionality(std::string_view code) {
    std::string upper(code);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    auto mode_of = [&](char c) {
        if (c == 'D') return Mode::directed;
        if (c == 'U') return Mode::undirected;
        throw ConfigError("directionality must be one of DD, UU, DU, UD; got '" + std::string(code) + "'");
    };
    if (upper.size() != 2) {
        throw ConfigError("directionality must be one of DD, UU, DU, UD; got '" + std::string(code) + "'");
    }
    return Directionality{mode_of(upper[0]), mode_of(upper[1])};
}

std::string to_string(Directionality dir) {
    std::string out;
    out += dir.start == Mode::directed ? 'D' : 'U';
    out += dir.end == Mode::directed ? 'D' : 'U';
    return out;
}

std::string_view to_string(Side side) { return side == Side::start ? "start" : "end"; }

std::string_view to_string(Mode mode) { return mode == Mode::directed ? "directed" : "undirected"; }

DyadSpace::DyadSpace(std::size_t n_actors, Mode mode) : n_(n_actors), mode_(mode) {
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            if (i == j) continue;
            if (mode_ == Mode::undirected && j < i) continue;
            pairs_.emplace_back(static_cast<ActorIndex>(i), static_cast<ActorIndex>(j));
        }
    }
    size_ = pairs_.size();
}

DyadIndex DyadSpace::index(ActorIndex i, ActorIndex j) const {
    if (i == j || i >= n_ || j >= n_) {
        throw std::out_of_range("dyad (" + std::to_string(i) + "," + std::to_string(j) + ") is not in the dyad space");
    }
    if (mode_ == Mode::directed) {
        return static_cast<DyadIndex>(i * (n_ - 1) + (j < i ? j : j - 1));
    }
    if (i > j) std::swap(i, j);
    // Row i of the upper triangle starts after sum_{r<i} (n-1-r) pairs.
    const std::size_t row_start = i * (2 * n_ - i - 1) / 2;
    return static_cast<DyadIndex>(row_start + (j - i - 1));
}

}  // namespace durem
