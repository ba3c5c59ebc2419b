#pragma once

/**
 * Natural-language task plumbing: prompts, constraint lists, and the
 * subtasks a task decomposes into.
 */

#include <cctype>
#include <string>
#include <vector>

namespace gridnav {

// Canonical form: lowercased, whitespace runs collapsed to single spaces,
// trailing punctuation stripped. Cache keys match on this, never on raw text.
inline std::string normalize_prompt(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    while (!out.empty()) {
        char c = out.back();
        if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':')
            out.pop_back();
        else
            break;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

struct TaskPrompt {
    std::string text;
    std::string normalized;

    TaskPrompt() = default;
    explicit TaskPrompt(std::string t) : text(std::move(t)), normalized(normalize_prompt(text)) {}

    friend bool operator==(const TaskPrompt& a, const TaskPrompt& b) {
        return a.normalized == b.normalized;
    }
};

struct ConstraintSet {
    std::vector<std::string> items;
};

enum class SubtaskKind : uint8_t { RoomToRoom, RoomToObject, Other };

struct Subtask {
    TaskPrompt prompt;
    SubtaskKind kind = SubtaskKind::Other;
    std::string target;  // landmark or region id in the scene graph

    friend bool operator==(const Subtask& a, const Subtask& b) {
        return a.prompt == b.prompt && a.kind == b.kind && a.target == b.target;
    }
};

}  // namespace gridnav
