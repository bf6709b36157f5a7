#include "percept/prompt.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "percept/rng.hpp"

namespace percept {

std::string_view label_key(PerceptionDimension dim) {
    switch (dim) {
        case PerceptionDimension::Competence: return "competent";
        case PerceptionDimension::Surprise: return "surprising";
        case PerceptionDimension::Intention: return "clear-intention";
    }
    throw InvalidArgument("unknown perception dimension");
}

namespace {

constexpr std::string_view kScaffold =
    "You are given observations recorded by a mobile robot while it guided a person, "
    "called the follower, toward a goal location inside a building.\n"
    "Each example lists the goal position (x, y) in meters, followed by the robot "
    "trajectory, the follower trajectory, and the trajectories of other nearby "
    "pedestrians. Trajectories are sampled one second apart in the robot's coordinate "
    "frame at the first timestep; each entry is (x, y, cos, sin) giving the position in "
    "meters and the heading direction. The token unknown means the person was not "
    "detected at that timestep.\n";

std::string make_body(std::string_view question, std::string_view directive) {
    std::string body(kScaffold);
    body += question;
    body += "\n";
    body += directive;
    return body;
}

TemplateSet make_default_templates() {
    TemplateSet t;
    t.body[0] = make_body(
        "Decide whether the follower perceived the robot as competent at navigating.",
        "Respond with `competent: 1` if the robot navigated competently, or `competent: "
        "0` if it did not.");
    t.body[1] = make_body(
        "Decide whether the follower found the robot's navigation behavior surprising.",
        "Respond with `surprising: 1` if the behavior was surprising, or `surprising: 0` "
        "if it was not.");
    t.body[2] = make_body(
        "Decide whether the robot's intentions during navigation were clear to the "
        "follower.",
        "Respond with `clear-intention: 1` if the robot's intentions were clear, or "
        "`clear-intention: 0` if they were not.");
    return t;
}

const char* template_file_name(PerceptionDimension dim) {
    switch (dim) {
        case PerceptionDimension::Competence: return "competence.txt";
        case PerceptionDimension::Surprise: return "surprise.txt";
        case PerceptionDimension::Intention: return "intention.txt";
    }
    throw InvalidArgument("unknown perception dimension");
}

/// Formats a coordinate with 2-decimal fixed point; negative zero collapses
/// to "0.00" so the rounded representation is unique.
void append_coord(std::string& out, double v) {
    double r = std::round(v * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;  // clear the sign of -0.0
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", r);
    out += buf;
}

void append_track(std::string& out, const TimedTrack& track) {
    for (std::size_t t = 0; t < track.size(); ++t) {
        out += "t=" + std::to_string(t) + ": ";
        if (track[t].has_value()) {
            out += "(";
            append_coord(out, track[t]->x);
            out += ", ";
            append_coord(out, track[t]->y);
            out += ", ";
            append_coord(out, track[t]->cos_h);
            out += ", ";
            append_coord(out, track[t]->sin_h);
            out += ")";
        } else {
            out += "unknown";
        }
        out += "\n";
    }
}

bool is_label_line(std::string_view line) {
    for (PerceptionDimension dim : kAllDimensions) {
        const std::string_view key = label_key(dim);
        if (line.size() == key.size() + 3 && line.substr(0, key.size()) == key &&
            line.substr(key.size(), 2) == ": " &&
            (line.back() == '0' || line.back() == '1')) {
            return true;
        }
    }
    return false;
}

}  // namespace

const TemplateSet& default_templates() {
    static const TemplateSet t = make_default_templates();
    return t;
}

TemplateSet load_templates(const std::string& dir) {
    TemplateSet t;
    for (PerceptionDimension dim : kAllDimensions) {
        const std::string path = dir + "/" + template_file_name(dim);
        std::ifstream in(path);
        if (!in) throw Error("cannot open template: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string body = buf.str();
        while (!body.empty() && body.back() == '\n') body.pop_back();
        if (body.empty()) throw InvalidArgument("template body is empty: " + path);
        t.body[dimension_index(dim)] = std::move(body);
    }
    return t;
}

std::string template_hash(const TemplateSet& templates) {
    std::uint64_t h = hash64("template-v1");
    for (const std::string& body : templates.body) {
        h = derive_seed(h, hash64(body));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SerializedExample serialize_example(const ObservationSet& obs, PerceptionDimension dim,
                                    std::optional<BinaryLabel> label,
                                    AblationLevel ablation) {
    std::string text = "goal: (";
    append_coord(text, obs.goal.x);
    text += ", ";
    append_coord(text, obs.goal.y);
    text += ")\n";
    text += "robot trajectory:\n";
    append_track(text, obs.robot_track);
    if (ablation != AblationLevel::GoalRobot) {
        text += "follower trajectory:\n";
        append_track(text, obs.follower_track);
    }
    if (ablation == AblationLevel::Full) {
        text += "pedestrian trajectories:\n";
        if (obs.pedestrian_tracks.empty()) {
            text += "none\n";
        } else {
            for (std::size_t p = 0; p < obs.pedestrian_tracks.size(); ++p) {
                text += "pedestrian " + std::to_string(p + 1) + ":\n";
                append_track(text, obs.pedestrian_tracks[p]);
            }
        }
    }
    if (label.has_value()) {
        text += std::string(label_key(dim)) + ": " + std::to_string(label_value(*label)) +
                "\n";
        return SerializedExample{std::move(text), ExampleRole::Demonstration};
    }
    return SerializedExample{std::move(text), ExampleRole::Query};
}

SerializedExample serialize_example(const LabeledExample& example, bool include_label,
                                    AblationLevel ablation) {
    return serialize_example(example.observations, example.dimension,
                             include_label ? std::optional<BinaryLabel>(example.label)
                                           : std::nullopt,
                             ablation);
}

InstructionTemplate build_instruction(PerceptionDimension dim, bool cot,
                                      const TemplateSet& templates) {
    InstructionTemplate out;
    out.dimension = dim;
    out.cot = cot;
    out.body = templates.body[dimension_index(dim)];
    if (cot) {
        out.body += "\n";
        out.body += kCotSentence;
    }
    return out;
}

PromptContext build_context(InstructionTemplate instruction,
                            std::vector<SerializedExample> nonpersonalized,
                            std::vector<SerializedExample> personalized,
                            SerializedExample query) {
    if (query.role != ExampleRole::Query) {
        throw InvalidArgument("build_context: query must have the query role");
    }
    std::istringstream lines(query.text);
    std::string line;
    while (std::getline(lines, line)) {
        if (is_label_line(line)) {
            throw InvalidArgument("build_context: query must not contain a label line");
        }
    }
    PromptContext context;
    context.instruction = std::move(instruction);
    context.nonpersonalized = std::move(nonpersonalized);
    context.personalized = std::move(personalized);
    context.query = std::move(query);
    return context;
}

std::string render_prompt(const PromptContext& context) {
    std::string out = context.instruction.body;
    out += "\n";
    int example_no = 1;
    if (!context.nonpersonalized.empty()) {
        out += "\nHere are labeled examples from other people:\n";
        for (const SerializedExample& demo : context.nonpersonalized) {
            out += "\nExample " + std::to_string(example_no++) + ":\n";
            out += demo.text;
        }
    }
    if (!context.personalized.empty()) {
        out += "\nHere are labeled examples from the same person whose perception you are "
               "predicting:\n";
        for (const SerializedExample& demo : context.personalized) {
            out += "\nExample " + std::to_string(example_no++) + ":\n";
            out += demo.text;
        }
    }
    out += "\nNow predict for the following observations.\n\n";
    out += context.query.text;
    out += std::string(label_key(context.instruction.dimension)) + ":\n";
    return out;
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

/// True when position p in `text` holds a 0/1 digit that stands alone (not
/// part of a longer number or word).
bool standalone_binary_digit(std::string_view text, std::size_t p) {
    if (text[p] != '0' && text[p] != '1') return false;
    if (p > 0) {
        const char prev = text[p - 1];
        if (is_word_char(prev) || prev == '.' || prev == '-') return false;
    }
    if (p + 1 < text.size()) {
        const char next = text[p + 1];
        if (is_word_char(next)) return false;
        if (next == '.' && p + 2 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[p + 2]))) {
            return false;  // decimal fraction, not a label
        }
    }
    return true;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

ParsedPrediction parse_response(std::string_view raw, PerceptionDimension dim) {
    const std::string lowered = to_lower(raw);
    const std::string key = to_lower(label_key(dim));

    // Pass 1: last "<key> ... 0/1" occurrence.
    std::size_t pos = lowered.rfind(key);
    while (pos != std::string::npos) {
        const bool word_boundary = pos == 0 || !is_word_char(lowered[pos - 1]);
        if (word_boundary) {  // skip substrings of longer words, e.g. "incompetent"
            std::size_t p = pos + key.size();
            // Skip separators LLMs commonly emit: colon, equals, markdown emphasis.
            std::size_t skipped = 0;
            while (p < lowered.size() && skipped < 8) {
                const char c = lowered[p];
                if (c == ' ' || c == '\t' || c == ':' || c == '=' || c == '*' ||
                    c == '`' || c == '"' || c == '\'') {
                    ++p;
                    ++skipped;
                } else {
                    break;
                }
            }
            if (p < lowered.size() && standalone_binary_digit(lowered, p)) {
                return ParsedPrediction{label_from_int(lowered[p] - '0'), std::string(raw)};
            }
        }
        if (pos == 0) break;
        pos = lowered.rfind(key, pos - 1);
    }

    // Pass 2: last standalone 0/1 token anywhere.
    for (std::size_t i = lowered.size(); i-- > 0;) {
        if (standalone_binary_digit(lowered, i)) {
            return ParsedPrediction{label_from_int(lowered[i] - '0'), std::string(raw)};
        }
    }
    throw UnparseableResponse("no label found for key '" + key + "' in response");
}

std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;
}

// ---- Inverse parsing ---------------------------------------------------------

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

double parse_number(std::string_view token) {
    try {
        return std::stod(std::string(token));
    } catch (const std::exception&) {
        throw InvalidArgument("example text: malformed number: " + std::string(token));
    }
}

/// Parses "(a, b)" or "(a, b, c, d)" into its components.
std::vector<double> parse_tuple(std::string_view text) {
    const std::size_t open = text.find('(');
    const std::size_t close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw InvalidArgument("example text: expected a parenthesized tuple");
    }
    std::vector<double> values;
    std::string_view inner = text.substr(open + 1, close - open - 1);
    std::size_t start = 0;
    while (start < inner.size()) {
        std::size_t comma = inner.find(',', start);
        if (comma == std::string_view::npos) comma = inner.size();
        values.push_back(parse_number(inner.substr(start, comma - start)));
        start = comma + 1;
    }
    return values;
}

/// Parses consecutive "t=<k>: ..." lines starting at `i`; advances `i` past them.
TimedTrack parse_track_lines(const std::vector<std::string_view>& lines, std::size_t& i) {
    TimedTrack track;
    while (i < lines.size() && lines[i].substr(0, 2) == "t=") {
        const std::string_view line = lines[i];
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw InvalidArgument("example text: malformed timestep line");
        }
        const std::size_t expected = track.size();
        if (parse_number(line.substr(2, colon - 2)) != static_cast<double>(expected)) {
            throw InvalidArgument("example text: timestep indices must start at 0 and be "
                                  "consecutive");
        }
        const std::string_view rest = line.substr(colon + 1);
        if (rest.find("unknown") != std::string_view::npos) {
            track.push_back(std::nullopt);
        } else {
            const std::vector<double> v = parse_tuple(rest);
            if (v.size() != 4) {
                throw InvalidArgument("example text: timestep tuple must have 4 values");
            }
            track.push_back(OrientedPose{v[0], v[1], v[2], v[3]});
        }
        ++i;
    }
    return track;
}

}  // namespace

ParsedExampleText parse_example_text(std::string_view text) {
    const std::vector<std::string_view> lines = split_lines(text);
    ParsedExampleText out;
    std::size_t i = 0;
    if (i >= lines.size() || lines[i].substr(0, 6) != "goal: ") {
        throw InvalidArgument("example text: must start with a goal line");
    }
    const std::vector<double> goal = parse_tuple(lines[i]);
    if (goal.size() != 2) throw InvalidArgument("example text: goal must be (x, y)");
    out.observations.goal = Vec2{goal[0], goal[1]};
    ++i;

    if (i >= lines.size() || lines[i] != "robot trajectory:") {
        throw InvalidArgument("example text: missing robot trajectory section");
    }
    ++i;
    out.observations.robot_track = parse_track_lines(lines, i);
    const std::size_t steps = out.observations.robot_track.size();
    if (steps == 0) throw InvalidArgument("example text: empty robot trajectory");

    if (i < lines.size() && lines[i] == "follower trajectory:") {
        ++i;
        out.observations.follower_track = parse_track_lines(lines, i);
        if (out.observations.follower_track.size() != steps) {
            throw InvalidArgument("example text: follower track length mismatch");
        }
    } else {
        out.observations.follower_track.assign(steps, std::nullopt);
    }

    if (i < lines.size() && lines[i] == "pedestrian trajectories:") {
        ++i;
        if (i < lines.size() && lines[i] == "none") {
            ++i;
        } else {
            while (i < lines.size() && lines[i].substr(0, 11) == "pedestrian ") {
                ++i;
                TimedTrack track = parse_track_lines(lines, i);
                if (track.size() != steps) {
                    throw InvalidArgument("example text: pedestrian track length mismatch");
                }
                out.observations.pedestrian_tracks.push_back(std::move(track));
            }
        }
    }

    if (i < lines.size() && is_label_line(lines[i])) {
        const std::string_view line = lines[i];
        const std::size_t colon = line.find(':');
        const std::string_view key = line.substr(0, colon);
        for (PerceptionDimension dim : kAllDimensions) {
            if (label_key(dim) == key) out.dimension = dim;
        }
        out.label = label_from_int(line.back() - '0');
        ++i;
    }
    if (i != lines.size()) {
        throw InvalidArgument("example text: trailing content after example");
    }
    return out;
}

ParsedPromptText parse_prompt_text(std::string_view prompt) {
    const std::vector<std::string_view> lines = split_lines(prompt);
    ParsedPromptText out;

    // The final line is the answer cue "<key>:".
    if (lines.empty() || lines.back().empty() || lines.back().back() != ':') {
        throw InvalidArgument("prompt text: missing answer cue line");
    }
    const std::string_view cue_key = lines.back().substr(0, lines.back().size() - 1);
    bool found_dim = false;
    for (PerceptionDimension dim : kAllDimensions) {
        if (label_key(dim) == cue_key) {
            out.dimension = dim;
            found_dim = true;
        }
    }
    if (!found_dim) {
        throw InvalidArgument("prompt text: unknown answer cue: " + std::string(cue_key));
    }

    auto block_text = [&](std::size_t first, std::size_t past_last) {
        std::string text;
        for (std::size_t j = first; j < past_last; ++j) {
            text += std::string(lines[j]) + "\n";
        }
        return text;
    };

    std::size_t query_marker = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] == "Now predict for the following observations.") {
            query_marker = i;
        }
    }
    if (query_marker == lines.size()) {
        throw InvalidArgument("prompt text: missing query marker");
    }

    // Demonstration blocks: "Example N:" followed by example lines up to the
    // next blank line.
    for (std::size_t i = 0; i < query_marker; ++i) {
        if (lines[i].substr(0, 8) != "Example " || lines[i].back() != ':') continue;
        const std::size_t first = i + 1;
        std::size_t past = first;
        while (past < query_marker && !lines[past].empty()) ++past;
        ParsedExampleText demo = parse_example_text(block_text(first, past));
        if (!demo.label.has_value()) {
            throw InvalidArgument("prompt text: demonstration without a label line");
        }
        out.demonstrations.push_back(std::move(demo));
        i = past;
    }

    // Query block: after the marker's blank line, up to the cue line.
    std::size_t first = query_marker + 1;
    while (first < lines.size() && lines[first].empty()) ++first;
    ParsedExampleText query = parse_example_text(block_text(first, lines.size() - 1));
    if (query.label.has_value()) {
        throw InvalidArgument("prompt text: query must not carry a label");
    }
    out.query = std::move(query.observations);
    return out;
}

}  // namespace percept
