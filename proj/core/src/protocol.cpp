#include "farmmind/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace farmmind {

namespace detail {
// Generated from core/templates/ at build time.
const char* embedded_template(const std::string& name);
}  // namespace detail

const char* to_string(ParseErrorCode code) {
    switch (code) {
        case ParseErrorCode::no_directive: return "no_directive";
        case ParseErrorCode::conflicting_directive: return "conflicting_directive";
        case ParseErrorCode::no_selection: return "no_selection";
        case ParseErrorCode::contradictory_selection: return "contradictory_selection";
        case ParseErrorCode::selection_out_of_range: return "selection_out_of_range";
        case ParseErrorCode::missing_verdict: return "missing_verdict";
        case ParseErrorCode::ambiguous_verdict: return "ambiguous_verdict";
    }
    return "unknown";
}

const char* to_string(VerdictValue v) {
    return v == VerdictValue::yes ? "yes" : "no";
}

ParseError::ParseError(ParseErrorCode code, std::string raw_text,
                       const std::string& message)
    : std::runtime_error(message), code_(code), raw_text_(std::move(raw_text)) {}

namespace {

std::string lowercase(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!current.empty() && current.back() == '\r')
                current.pop_back();
            lines.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    lines.push_back(std::move(current));
    return lines;
}

const char* tag_for(QueryKind kind) {
    return kind == QueryKind::temporal ? "<reg-1>" : "<reg-2>";
}

std::size_t find_tag(const std::string& lowered, QueryKind kind, std::size_t from = 0) {
    return lowered.find(tag_for(kind), from);
}

}  // namespace

int count_directive_tags(const std::string& text, QueryKind kind) {
    const std::string lowered = lowercase(text);
    int count = 0;
    std::size_t pos = 0;
    while ((pos = find_tag(lowered, kind, pos)) != std::string::npos) {
        ++count;
        pos += 7;  // strlen("<reg-k>")
    }
    return count;
}

QueryDirective parse_directive(const std::string& model_text, int region_id) {
    const int n_temporal = count_directive_tags(model_text, QueryKind::temporal);
    const int n_enlarge = count_directive_tags(model_text, QueryKind::enlarge);
    if (n_temporal == 0 && n_enlarge == 0)
        throw ParseError(ParseErrorCode::no_directive, model_text,
                         "reply contains no <reg-1>/<reg-2> directive tag");
    if (n_temporal + n_enlarge > 1)
        throw ParseError(ParseErrorCode::conflicting_directive, model_text,
                         "reply must contain exactly one directive tag, found " +
                             std::to_string(n_temporal + n_enlarge));

    const QueryKind kind = n_temporal == 1 ? QueryKind::temporal : QueryKind::enlarge;
    const std::string lowered = lowercase(model_text);
    const std::size_t pos = find_tag(lowered, kind);
    std::string rationale = model_text;
    rationale.erase(pos, 7);

    QueryDirective directive;
    directive.kind = kind;
    directive.rationale_text = trim(rationale);
    directive.region_id = region_id;
    return directive;
}

SelectionResult parse_selection(const std::string& model_text,
                                const std::vector<int>& offered_indices) {
    if (offered_indices.empty())
        throw std::invalid_argument("parse_selection requires a non-empty offered set");

    static const std::regex slot_re(R"(^\s*selected\s*:\s*([0-9]+)\s*[.!]?\s*$)",
                                    std::regex::icase);
    std::set<int> slot_values;
    for (const std::string& line : split_lines(model_text)) {
        std::smatch m;
        if (std::regex_match(line, m, slot_re))
            slot_values.insert(std::stoi(m[1].str()));
    }

    std::set<int> found = slot_values;
    if (found.empty()) {
        // No answer line at all: accept a single unambiguous candidate
        // reference in prose.
        static const std::regex ref_re(R"((?:image|candidate)\s*#?\s*([0-9]+))",
                                       std::regex::icase);
        auto begin = std::sregex_iterator(model_text.begin(), model_text.end(), ref_re);
        for (auto it = begin; it != std::sregex_iterator(); ++it)
            found.insert(std::stoi((*it)[1].str()));
    }

    if (found.empty())
        throw ParseError(ParseErrorCode::no_selection, model_text,
                         "reply names no candidate selection");
    if (found.size() > 1)
        throw ParseError(ParseErrorCode::contradictory_selection, model_text,
                         "reply names multiple contradictory candidates");

    const int chosen = *found.begin();
    if (std::find(offered_indices.begin(), offered_indices.end(), chosen) ==
        offered_indices.end())
        throw ParseError(ParseErrorCode::selection_out_of_range, model_text,
                         "selected candidate " + std::to_string(chosen) +
                             " is not in the offered set");

    SelectionResult result;
    result.chosen_index = chosen;
    result.rationale_text = trim(model_text);
    return result;
}

Verdict parse_verdict(const std::string& model_text) {
    static const std::regex slot_re(R"(^\s*answer\s*:\s*(yes|no)\b.*$)",
                                    std::regex::icase);
    std::set<std::string> values;
    for (const std::string& line : split_lines(model_text)) {
        std::smatch m;
        if (std::regex_match(line, m, slot_re))
            values.insert(lowercase(m[1].str()));
    }
    if (values.empty())
        throw ParseError(ParseErrorCode::missing_verdict, model_text,
                         "reply has no ANSWER: yes|no line");
    if (values.size() > 1)
        throw ParseError(ParseErrorCode::ambiguous_verdict, model_text,
                         "reply contains contradictory ANSWER lines");

    Verdict verdict;
    verdict.value = *values.begin() == "yes" ? VerdictValue::yes : VerdictValue::no;
    verdict.rationale_text = trim(model_text);
    return verdict;
}

namespace {

std::string strip_comment_lines(const std::string& body) {
    std::ostringstream out;
    bool first = true;
    for (const std::string& line : split_lines(body)) {
        if (!line.empty() && line.front() == '#')
            continue;
        if (!first)
            out << '\n';
        out << line;
        first = false;
    }
    return out.str();
}

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = {
        "attribution", "selection_temporal", "selection_enlarge", "verdict_temporal",
        "verdict_enlarge"};
    return names;
}

}  // namespace

PromptLibrary::PromptLibrary() {
    for (const std::string& name : template_names())
        templates_[name] = strip_comment_lines(detail::embedded_template(name));
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    PromptLibrary lib;
    lib.templates_.clear();
    for (const std::string& name : template_names()) {
        const auto path = dir / (name + ".txt");
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("missing prompt template: " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        lib.templates_[name] = strip_comment_lines(buf.str());
    }
    return lib;
}

const std::string& PromptLibrary::raw_template(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw std::invalid_argument("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& slots) const {
    std::string out = raw_template(name);
    for (const auto& [key, value] : slots) {
        const std::string needle = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    if (out.find("{{") != std::string::npos)
        throw std::logic_error("unresolved placeholder in template " + name);
    return out;
}

namespace {

std::map<std::string, std::string> region_slots(const AmbiguityRegion& region,
                                                const PatchMeta& patch) {
    return {{"patch_id", patch.patch_id},
            {"region_id", std::to_string(region.region_id)},
            {"x_min", std::to_string(region.bbox.x_min)},
            {"y_min", std::to_string(region.bbox.y_min)},
            {"x_max", std::to_string(region.bbox.x_max)},
            {"y_max", std::to_string(region.bbox.y_max)}};
}

}  // namespace

std::string PromptLibrary::render_prompt_i(const AmbiguityRegion& region,
                                           const PatchMeta& patch) const {
    return render("attribution", region_slots(region, patch));
}

std::string PromptLibrary::render_prompt_ii(const AmbiguityRegion& region,
                                            const PatchMeta& patch,
                                            const std::vector<CandidateSummary>& candidates,
                                            QueryKind kind) const {
    if (candidates.empty())
        throw std::invalid_argument("selection prompt needs at least one candidate");
    std::ostringstream lines;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CandidateSummary& c = candidates[i];
        if (i)
            lines << '\n';
        std::ostringstream fp;
        fp.precision(10);
        fp << "[" << c.footprint.lon_min << ", " << c.footprint.lat_min << ", "
           << c.footprint.lon_max << ", " << c.footprint.lat_max << "]";
        lines << "Image " << c.index << ": season=" << to_string(c.season)
              << ", scene=" << c.scene_id << ", footprint=" << fp.str() << ", size="
              << c.width << "x" << c.height << "px";
    }
    auto slots = region_slots(region, patch);
    slots["candidate_count"] = std::to_string(candidates.size());
    slots["candidate_lines"] = lines.str();
    return render(kind == QueryKind::temporal ? "selection_temporal" : "selection_enlarge",
                  slots);
}

std::string PromptLibrary::render_prompt_iii(const AmbiguityRegion& region,
                                             const PatchMeta& patch,
                                             QueryKind kind) const {
    return render(kind == QueryKind::temporal ? "verdict_temporal" : "verdict_enlarge",
                  region_slots(region, patch));
}

std::string format_reminder_suffix(const std::string& stage_hint) {
    return "\n\nREMINDER: your previous reply did not follow the required output "
           "format. End with exactly one line of the form " +
           stage_hint + " and no other machine-readable lines.";
}

}  // namespace farmmind
