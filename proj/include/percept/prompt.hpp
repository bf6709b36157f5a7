#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "percept/episode.hpp"
#include "percept/sampler.hpp"

namespace percept {

/// CoT suffix appended verbatim to instruction bodies when requested.
inline constexpr std::string_view kCotSentence = "Do it step by step and explain your answer";

/// Label key naming the positive property of each dimension. Label 1 always
/// denotes the named property (competent / surprising / clear intentions).
std::string_view label_key(PerceptionDimension dim);

/// Instruction bodies. The defaults are embedded; the same texts ship under
/// assets/templates/ and can be overridden per experiment. Experiments pin
/// template_hash so results are traceable to exact wording.
struct TemplateSet {
    std::array<std::string, 3> body;  // indexed by PerceptionDimension, no CoT suffix
};

const TemplateSet& default_templates();
TemplateSet load_templates(const std::string& dir);
std::string template_hash(const TemplateSet& templates);

struct InstructionTemplate {
    PerceptionDimension dimension{PerceptionDimension::Competence};
    bool cot{false};
    std::string body;
};

enum class ExampleRole { Demonstration, Query };

/// String form of one example. Demonstrations carry exactly one label line;
/// queries carry none.
struct SerializedExample {
    std::string text;
    ExampleRole role{ExampleRole::Demonstration};
};

/// Full model input per context assembly: instruction, demonstrations from
/// other users, demonstrations from the evaluated user, and the query.
struct PromptContext {
    InstructionTemplate instruction;
    std::vector<SerializedExample> nonpersonalized;
    std::vector<SerializedExample> personalized;
    SerializedExample query;

    int k() const {
        return static_cast<int>(nonpersonalized.size() + personalized.size());
    }
};

struct ParsedPrediction {
    BinaryLabel label{BinaryLabel::Negative};
    std::string raw;
};

/// Serializes observations section by section (goal, robot, follower,
/// pedestrians), dropping sections below the ablation level. One line per
/// timestep, "t=<k>: (x, y, cos, sin)" with 2-decimal fixed-point numbers;
/// unknown points render as the literal token `unknown`.
SerializedExample serialize_example(const ObservationSet& obs, PerceptionDimension dim,
                                    std::optional<BinaryLabel> label,
                                    AblationLevel ablation = AblationLevel::Full);

/// Convenience overload for dataset examples.
SerializedExample serialize_example(const LabeledExample& example, bool include_label,
                                    AblationLevel ablation = AblationLevel::Full);

InstructionTemplate build_instruction(PerceptionDimension dim, bool cot,
                                      const TemplateSet& templates = default_templates());

/// Assembles a context, preserving demonstration order. Throws
/// InvalidArgument when the query carries a label line.
PromptContext build_context(InstructionTemplate instruction,
                            std::vector<SerializedExample> nonpersonalized,
                            std::vector<SerializedExample> personalized,
                            SerializedExample query);

/// Deterministic prompt layout: instruction, non-personalized demos,
/// personalized demos (marked as coming from the same person), query, and an
/// answer cue.
std::string render_prompt(const PromptContext& context);

/// Extracts the predicted label: last occurrence of the dimension's label
/// key followed by 0/1, else the last standalone 0/1 token. Tolerant of CoT
/// preambles. Throws UnparseableResponse when no label can be extracted.
ParsedPrediction parse_response(std::string_view raw, PerceptionDimension dim);

/// ceil(character count / 4); a documented heuristic, not a tokenizer.
std::size_t estimate_tokens(std::string_view text);

// ---- Inverse parsing ---------------------------------------------------------
// Reads serialized example text back into observations. Coordinates come back
// exactly as printed (2-decimal), so headings are only approximately
// unit-norm. Used by the deterministic mock completion backend and by
// round-trip tests.

struct ParsedExampleText {
    ObservationSet observations;
    std::optional<BinaryLabel> label;
    std::optional<PerceptionDimension> dimension;
};

ParsedExampleText parse_example_text(std::string_view text);

struct ParsedPromptText {
    std::vector<ParsedExampleText> demonstrations;
    ObservationSet query;
    PerceptionDimension dimension{PerceptionDimension::Competence};
};

ParsedPromptText parse_prompt_text(std::string_view prompt);

}  // namespace percept
