#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "farmmind/ambiguity.hpp"
#include "farmmind/geo.hpp"
#include "farmmind/kinds.hpp"
#include "farmmind/season.hpp"

namespace farmmind {

enum class ParseErrorCode {
    no_directive,
    conflicting_directive,
    no_selection,
    contradictory_selection,
    selection_out_of_range,
    missing_verdict,
    ambiguous_verdict,
};

const char* to_string(ParseErrorCode code);

/// Raised whenever a model reply does not conform to the mandated output
/// format. Parsers never guess: non-conforming text always lands here, and
/// the raw reply rides along for the trace.
class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorCode code, std::string raw_text, const std::string& message);

    ParseErrorCode code() const { return code_; }
    const std::string& raw_text() const { return raw_text_; }

private:
    ParseErrorCode code_;
    std::string raw_text_;
};

/// Result of the attribution stage: which auxiliary data kind to fetch.
struct QueryDirective {
    QueryKind kind = QueryKind::temporal;
    std::string rationale_text;
    int region_id = 0;
};

/// Result of the optimal-auxiliary-selection stage; index is 1-based over
/// the offered candidates.
struct SelectionResult {
    int chosen_index = 0;
    std::string rationale_text;
};

enum class VerdictValue { yes, no };

const char* to_string(VerdictValue v);

/// The final yes/no farmland determination from multi-image reasoning.
struct Verdict {
    VerdictValue value = VerdictValue::no;
    std::string rationale_text;
};

/// Patch-level metadata threaded through prompts and traces.
struct PatchMeta {
    std::string patch_id;
    Season season = Season::spring;
    std::string country;
    std::string province;
};

/// Lightweight candidate description used when rendering selection prompts.
struct CandidateSummary {
    int index = 0;  // 1-based position in the offered set
    std::string scene_id;
    Season season = Season::spring;
    GeoBox footprint;
    int width = 0;
    int height = 0;
};

/// Counts case-insensitive occurrences of the directive tag for `kind`
/// (`<reg-1>` temporal, `<reg-2>` enlarge) anywhere in the text.
int count_directive_tags(const std::string& text, QueryKind kind);

/// Exactly one tag across both kinds parses to that kind; zero tags is
/// no_directive, anything else conflicting_directive.
QueryDirective parse_directive(const std::string& model_text, int region_id = 0);

/// Keys on the mandated `SELECTED: <n>` answer line; when no answer line is
/// present at all, falls back to a single unambiguous "image N" /
/// "candidate N" reference. Validates membership in `offered_indices`.
SelectionResult parse_selection(const std::string& model_text,
                                const std::vector<int>& offered_indices);

/// Keys on the mandated `ANSWER: yes|no` line only; yes/no tokens elsewhere
/// in the reply are ignored.
Verdict parse_verdict(const std::string& model_text);

/// Prompt templates: versioned text files with {{name}} placeholders.
/// Comment lines starting with '#' are stripped when loading. The built-in
/// set is embedded at build time from core/templates/.
class PromptLibrary {
public:
    /// Built-in templates.
    PromptLibrary();
    /// Loads attribution.txt, selection_temporal.txt, selection_enlarge.txt,
    /// verdict_temporal.txt, verdict_enlarge.txt from a directory.
    static PromptLibrary from_directory(const std::filesystem::path& dir);

    std::string render_prompt_i(const AmbiguityRegion& region,
                                const PatchMeta& patch) const;
    std::string render_prompt_ii(const AmbiguityRegion& region, const PatchMeta& patch,
                                 const std::vector<CandidateSummary>& candidates,
                                 QueryKind kind) const;
    std::string render_prompt_iii(const AmbiguityRegion& region, const PatchMeta& patch,
                                  QueryKind kind) const;

    const std::string& raw_template(const std::string& name) const;

private:
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& slots) const;

    std::map<std::string, std::string> templates_;
};

/// Appended to a repeated model call after a ParseError.
std::string format_reminder_suffix(const std::string& stage_hint);

}  // namespace farmmind
