#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alchemy {

struct PopulationRecord {
    std::uint64_t collision_index = 0;
    // Labels in column order.
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    std::uint64_t soup_size = 0;

    std::optional<std::uint64_t> count(const std::string& label) const {
        for (const auto& [l, c] : counts)
            if (l == label) return c;
        return std::nullopt;
    }

    friend bool operator==(const PopulationRecord&, const PopulationRecord&) = default;
};

}  // namespace alchemy
