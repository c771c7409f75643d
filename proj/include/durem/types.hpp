#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace durem {

using Time = double;
using ActorIndex = std::uint32_t;
using DyadIndex = std::uint32_t;

enum class Mode { directed, undirected };

// Which of the two rate models a statistic, weight or risk set belongs to.
enum class Side { start, end };

struct Directionality {
    Mode start{Mode::directed};
    Mode end{Mode::directed};

    // Representation used for "is this pair busy": unordered whenever either
    // side is undirected.
    [[nodiscard]] Mode coarse() const {
        return (start == Mode::undirected || end == Mode::undirected) ? Mode::undirected : Mode::directed;
    }
    [[nodiscard]] Mode mode(Side side) const { return side == Side::start ? start : end; }

    friend bool operator==(const Directionality&, const Directionality&) = default;
};

// Parses "DD", "UU", "DU" or "UD" (start mode first).
Directionality parse_directionality(std::string_view code);
std::string to_string(Directionality dir);
std::string_view to_string(Side side);
std::string_view to_string(Mode mode);

// Thrown for malformed configuration or inconsistent model specifications.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when a computation leaves the representable range (rate overflow,
// singular Hessian, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense enumeration of the dyads over `n` actors. Directed dyads are ordered
// pairs (i, j), i != j, enumerated row by row; undirected dyads are pairs
// i < j in lexicographic order.
class DyadSpace {
public:
    DyadSpace() = default;
    DyadSpace(std::size_t n_actors, Mode mode);

    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] std::size_t n_actors() const { return n_; }
    [[nodiscard]] Mode mode() const { return mode_; }

    // Index of (i, j); undirected spaces accept either orientation.
    [[nodiscard]] DyadIndex index(ActorIndex i, ActorIndex j) const;
    [[nodiscard]] std::pair<ActorIndex, ActorIndex> actors(DyadIndex d) const { return pairs_[d]; }

private:
    std::size_t n_{0};
    Mode mode_{Mode::directed};
    std::size_t size_{0};
    std::vector<std::pair<ActorIndex, ActorIndex>> pairs_;
};

}  // namespace durem
