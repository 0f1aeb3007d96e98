#pragma once

#include <stdexcept>
#include <string>

namespace farmmind {

enum class Season { spring = 0, summer = 1, autumn = 2, winter = 3 };

inline const char* to_string(Season s) {
    switch (s) {
        case Season::spring: return "spring";
        case Season::summer: return "summer";
        case Season::autumn: return "autumn";
        case Season::winter: return "winter";
    }
    throw std::logic_error("invalid season value");
}

inline Season season_from_string(const std::string& s) {
    if (s == "spring") return Season::spring;
    if (s == "summer") return Season::summer;
    if (s == "autumn") return Season::autumn;
    if (s == "winter") return Season::winter;
    throw std::invalid_argument("unknown season: " + s);
}

}  // namespace farmmind
