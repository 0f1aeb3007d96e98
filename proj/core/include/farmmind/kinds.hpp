#pragma once

#include <stdexcept>
#include <string>

namespace farmmind {

/// Auxiliary-data kind requested by the reasoning model: multi-temporal
/// imagery (tag <reg-1>) or an enlarged, wider-footprint image (tag <reg-2>).
enum class QueryKind { temporal, enlarge };

inline const char* to_string(QueryKind k) {
    return k == QueryKind::temporal ? "temporal" : "enlarge";
}

inline QueryKind query_kind_from_string(const std::string& s) {
    if (s == "temporal")
        return QueryKind::temporal;
    if (s == "enlarge")
        return QueryKind::enlarge;
    throw std::invalid_argument("unknown query kind: " + s);
}

}  // namespace farmmind
