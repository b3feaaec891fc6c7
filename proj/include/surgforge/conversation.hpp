#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "surgforge/errors.hpp"
#include "surgforge/text.hpp"
#include "surgforge/types.hpp"

namespace surgforge {

// Defaults follow the printed single-round format; both are configurable
// because trained models may use different literals.
inline constexpr std::string_view kDefaultVideoToken = "<video>";
inline constexpr std::string_view kDefaultStopToken = "<STOP>";

namespace detail {

inline constexpr std::string_view kUserPrefix = "User: ";
inline constexpr std::string_view kAssistantPrefix = "Assistant: ";

struct TextCursor {
    std::string_view text;

    std::size_t line_of(std::size_t offset) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < offset && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        return line;
    }

    std::size_t column_of(std::size_t offset) const {
        std::size_t col = 1;
        for (std::size_t i = 0; i < offset && i < text.size(); ++i)
            col = (text[i] == '\n') ? 1 : col + 1;
        return col;
    }

    [[noreturn]] void fail(const std::string& reason, std::size_t offset) const {
        throw ParseError(reason, line_of(offset), column_of(offset));
    }
};

}  // namespace detail

/// Full invariant check for a renderable conversation: alternating turns,
/// and contents free of both tokens so the rendered text contains exactly
/// one video placeholder and an unambiguous stop grammar.
inline void validate_conversation(const Conversation& conv, std::string_view video_token,
                                  std::string_view stop_token) {
    if (video_token.empty() || stop_token.empty())
        throw InvalidConversation("video and stop tokens must be non-empty");
    validate_structure(conv);
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        if (contains(conv.turns[i].content, video_token))
            throw InvalidConversation("turn " + std::to_string(i + 1) +
                                      " content contains the video placeholder");
        if (contains(conv.turns[i].content, stop_token))
            throw InvalidConversation("turn " + std::to_string(i + 1) +
                                      " content contains the stop token");
    }
}

/// Renders the line-per-turn training format. Turn 1 composes the question
/// with the video placeholder on the side selected by `video_placement`;
/// later turns carry the question alone.
inline std::string render_conversation(const Conversation& conv,
                                       std::string_view video_token = kDefaultVideoToken,
                                       std::string_view stop_token = kDefaultStopToken) {
    validate_conversation(conv, video_token, stop_token);
    std::string out;
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        const Turn& turn = conv.turns[i];
        out += (turn.role == Role::user) ? detail::kUserPrefix : detail::kAssistantPrefix;
        if (i == 0) {
            if (conv.video_placement == VideoPlacement::after_question) {
                out += turn.content;
                out += ' ';
                out += video_token;
            } else {
                out += video_token;
                out += ' ';
                out += turn.content;
            }
        } else {
            out += turn.content;
        }
        out += stop_token;
        out += '\n';
    }
    return out;
}

/// Inverse of render_conversation. Recovers turns and video placement;
/// identity fields (id, clip_id, source_url) are not part of the rendered
/// text and come back empty.
inline Conversation parse_conversation(std::string_view text,
                                       std::string_view video_token = kDefaultVideoToken,
                                       std::string_view stop_token = kDefaultStopToken) {
    if (video_token.empty() || stop_token.empty())
        throw InvalidConversation("video and stop tokens must be non-empty");

    detail::TextCursor cursor{text};
    const std::string terminator = std::string(stop_token) + "\n";

    Conversation conv;
    std::size_t offset = 0;
    std::size_t turn_index = 0;
    while (offset < text.size()) {
        const std::size_t end = text.find(terminator, offset);
        if (end == std::string_view::npos)
            cursor.fail("turn is not terminated by the stop token", offset);

        std::string_view chunk = text.substr(offset, end - offset);
        const bool user_turn = (turn_index % 2 == 0);
        const std::string_view prefix =
            user_turn ? detail::kUserPrefix : detail::kAssistantPrefix;
        if (chunk.substr(0, prefix.size()) != prefix)
            cursor.fail("expected turn to start with '" + std::string(prefix) + "'", offset);

        std::string content(chunk.substr(prefix.size()));
        if (turn_index == 0) {
            const std::string lead = std::string(video_token) + " ";
            const std::string tail = " " + std::string(video_token);
            if (content.size() > lead.size() && content.compare(0, lead.size(), lead) == 0) {
                conv.video_placement = VideoPlacement::before_question;
                content = content.substr(lead.size());
            } else if (content.size() > tail.size() &&
                       content.compare(content.size() - tail.size(), tail.size(), tail) == 0) {
                conv.video_placement = VideoPlacement::after_question;
                content = content.substr(0, content.size() - tail.size());
            } else {
                cursor.fail("turn 1 must carry the video placeholder at either end",
                            offset + prefix.size());
            }
            if (contains(content, video_token))
                cursor.fail("more than one video placeholder in turn 1", offset + prefix.size());
        } else {
            if (contains(content, video_token))
                cursor.fail("video placeholder outside turn 1", offset + prefix.size());
        }
        if (content.empty())
            cursor.fail("empty turn content", offset + prefix.size());

        conv.turns.push_back(Turn{user_turn ? Role::user : Role::assistant, std::move(content)});
        offset = end + terminator.size();
        ++turn_index;
    }

    if (conv.turns.size() < 2 || conv.turns.size() % 2 != 0)
        cursor.fail("conversation must contain complete user/assistant rounds", text.size());
    return conv;
}

/// Rendered-text projection equality: turns and placement. Identity fields
/// are not recoverable from rendered text.
inline bool same_dialogue(const Conversation& a, const Conversation& b) {
    return a.turns == b.turns && a.video_placement == b.video_placement;
}

}  // namespace surgforge
