#pragma once

/**
 * Remote decision backend speaking a chat-completions style HTTP API.
 * Prompts are assembled from fixed template text plus rendered images;
 * replies are free text scanned for the first action phrase. Transport
 * failures retry with exponential backoff; a reachable-but-broken server
 * does not.
 */

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gridnav/backend.hpp"
#include "gridnav/errors.hpp"
#include "gridnav/task.hpp"

namespace gridnav {

struct VlmConfig {
    std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
    std::string model = "vlm-nav-1";
    std::string api_key;  // set from the environment, never from files or flags
    double timeout_s = 30.0;
    int max_retries = 3;
    double backoff_base_s = 1.0;  // doubles per retry
    double price_per_call_usd = 0.0;

    static VlmConfig from_env() {
        VlmConfig cfg;
        if (const char* key = std::getenv("VLM_API_KEY")) cfg.api_key = key;
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// Prompt assembly
// ---------------------------------------------------------------------------

struct PromptPart {
    enum class Kind : uint8_t { Text, GraphImage, FpvImage };
    Kind kind = Kind::Text;
    std::string text;  // Text parts only
};

struct PromptBundle {
    std::string system_text;           // fixed instruction line
    std::vector<PromptPart> user_parts;  // in presentation order
    std::string graph_ppm;
    std::string fpv_ppm;

    /// The full prompt with image slots shown as placeholders; this is the
    /// layout contract the templates are tested against.
    std::string render_text() const {
        std::string out = system_text;
        for (const PromptPart& p : user_parts) {
            out += "\n\n";
            switch (p.kind) {
                case PromptPart::Kind::Text: out += p.text; break;
                case PromptPart::Kind::GraphImage: out += "<Scene Graph>"; break;
                case PromptPart::Kind::FpvImage: out += "<Visual Observation>"; break;
            }
        }
        out += "\n";
        return out;
    }
};

inline PromptBundle build_exploration_prompt(const ConstraintSet& constraints,
                                             std::string graph_ppm, std::string fpv_ppm) {
    PromptBundle b;
    b.system_text =
        "Prompt: Generate simple step-by-step navigation instructions for a robot exploring an "
        "unknown environment. The robot can only perform the following actions: move forward, "
        "turn left, turn right, and stop.";
    std::string block =
        "Constraints:\n"
        "- Use only the allowed actions.\n"
        "- Return a single action.\n"
        "- Stop when exploration of the visible environment is complete or when further movement "
        "is unsafe.\n"
        "- Avoid visiting explored areas";
    for (const std::string& item : constraints.items) block += "\n- " + item;
    b.user_parts.push_back({PromptPart::Kind::Text, block});
    b.user_parts.push_back({PromptPart::Kind::GraphImage, {}});
    b.user_parts.push_back({PromptPart::Kind::FpvImage, {}});
    b.user_parts.push_back({PromptPart::Kind::Text, "Response: <One of the four actions>"});
    b.graph_ppm = std::move(graph_ppm);
    b.fpv_ppm = std::move(fpv_ppm);
    return b;
}

inline PromptBundle build_deployment_prompt(const std::string& task_text,
                                            const ConstraintSet& constraints,
                                            std::string graph_ppm, std::string fpv_ppm) {
    PromptBundle b;
    b.system_text =
        "Prompt: Move from your start location to a goal location using the provided top-down "
        "scene graph and camera view.";
    std::string head = "Task: " + task_text;
    if (!constraints.items.empty()) {
        head += "\n\nConstraints:";
        for (const std::string& item : constraints.items) head += "\n- " + item;
    }
    b.user_parts.push_back({PromptPart::Kind::Text, head});
    b.user_parts.push_back({PromptPart::Kind::GraphImage, {}});
    b.user_parts.push_back(
        {PromptPart::Kind::Text,
         "- SQUARE: Your starting position.\n"
         "- BLUE ARROW: Your current position & heading.\n"
         "- BLUE LINE: Your trajectory so far.\n"
         "- GRAY AREAS: Navigable floor where you can walk.\n"
         "- WHITE AREAS: Obstacles or walls you cannot walk through."});
    b.user_parts.push_back({PromptPart::Kind::FpvImage, {}});
    b.user_parts.push_back(
        {PromptPart::Kind::Text,
         "NAVIGATION RULES:\n"
         "- Use a top-down scene graph to determine the direction to move in.\n"
         "- Use only the allowed actions: move forward, turn left, turn right, and stop.\n"
         "- Never move into white areas; turn before they block the way.\n"
         "- Stop when you reach the goal location."});
    b.user_parts.push_back({PromptPart::Kind::Text, "Response: <One of the four actions>"});
    b.graph_ppm = std::move(graph_ppm);
    b.fpv_ppm = std::move(fpv_ppm);
    return b;
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

/// First action phrase mentioned anywhere in the reply, case-insensitively.
inline std::optional<Action> parse_action_text(const std::string& reply) {
    std::string low;
    low.reserve(reply.size());
    for (char c : reply) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    struct Phrase {
        const char* text;
        Action action;
    };
    static const Phrase kPhrases[] = {{"move forward", Action::MoveForward},
                                      {"turn left", Action::TurnLeft},
                                      {"turn right", Action::TurnRight},
                                      {"stop", Action::Stop}};
    std::optional<Action> best;
    size_t best_at = std::string::npos;
    for (const Phrase& p : kPhrases) {
        size_t at = low.find(p.text);
        if (at != std::string::npos && at < best_at) {
            best_at = at;
            best = p.action;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

namespace detail {

inline std::string base64_encode(const std::string& bytes) {
    static const char* kAlphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 2 < bytes.size()) {
        uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) |
                     (static_cast<uint8_t>(bytes[i + 1]) << 8) | static_cast<uint8_t>(bytes[i + 2]);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        uint32_t v = static_cast<uint8_t>(bytes[i]) << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) |
                     (static_cast<uint8_t>(bytes[i + 1]) << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading slash
};

inline EndpointParts split_endpoint(const std::string& endpoint) {
    size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw ProtocolError("endpoint '" + endpoint + "' has no scheme");
    size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace detail

inline nlohmann::json build_request_json(const VlmConfig& cfg, const PromptBundle& bundle) {
    nlohmann::json user_content = nlohmann::json::array();
    for (const PromptPart& p : bundle.user_parts) {
        switch (p.kind) {
            case PromptPart::Kind::Text:
                user_content.push_back({{"type", "text"}, {"text", p.text}});
                break;
            case PromptPart::Kind::GraphImage:
                user_content.push_back({{"type", "image"},
                                        {"media_type", "image/x-portable-pixmap"},
                                        {"data_base64", detail::base64_encode(bundle.graph_ppm)}});
                break;
            case PromptPart::Kind::FpvImage:
                user_content.push_back({{"type", "image"},
                                        {"media_type", "image/x-portable-pixmap"},
                                        {"data_base64", detail::base64_encode(bundle.fpv_ppm)}});
                break;
        }
    }
    nlohmann::json j;
    j["model"] = cfg.model;
    j["messages"] = {{{"role", "system"},
                      {"content", {{{"type", "text"}, {"text", bundle.system_text}}}}},
                     {{"role", "user"}, {"content", user_content}}};
    return j;
}

class VlmClient {
  public:
    explicit VlmClient(VlmConfig cfg) : cfg_(std::move(cfg)) {
        auto parts = detail::split_endpoint(cfg_.endpoint);
        base_ = parts.base;
        path_ = parts.path;
    }

    /// One decision round-trip. Retries only transport failures.
    Action decide(const PromptBundle& bundle) {
        const std::string body = build_request_json(cfg_, bundle).dump();
        std::string content;
        for (int attempt = 0;; ++attempt) {
            ++attempts_;
            httplib::Client cli(base_);
            cli.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            cli.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            cli.set_write_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            httplib::Headers headers;
            if (!cfg_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + cfg_.api_key);

            auto res = cli.Post(path_, headers, body, "application/json");
            if (!res) {
                if (attempt < cfg_.max_retries) {
                    double delay = cfg_.backoff_base_s * std::pow(2.0, attempt);
                    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
                    continue;
                }
                throw TransportError("VLM endpoint " + cfg_.endpoint + " unreachable after " +
                                     std::to_string(attempt + 1) + " attempts (" +
                                     httplib::to_string(res.error()) + ")");
            }
            if (res->status / 100 != 2)
                throw ProtocolError("VLM endpoint returned HTTP " + std::to_string(res->status));
            ++successful_calls_;

            nlohmann::json reply;
            try {
                reply = nlohmann::json::parse(res->body);
                content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw ProtocolError(std::string("VLM reply not understood: ") + e.what());
            }
            break;
        }
        auto action = parse_action_text(content);
        if (!action)
            throw UnparseableActionError("VLM reply contains no action phrase: \"" + content +
                                         "\"");
        return *action;
    }

    long successful_calls() const { return successful_calls_.load(); }
    long attempts() const { return attempts_.load(); }
    double cost_usd() const { return successful_calls_.load() * cfg_.price_per_call_usd; }
    const VlmConfig& config() const { return cfg_; }

  private:
    VlmConfig cfg_;
    std::string base_;
    std::string path_;
    std::atomic<long> successful_calls_{0};
    std::atomic<long> attempts_{0};
};

/// DecisionBackend adapter: exploration context renders the exploration
/// template, a context carrying a task renders the deployment one. The
/// subtask's canonical prompt is what the model is asked to achieve.
class VlmBackend : public DecisionBackend {
  public:
    explicit VlmBackend(VlmConfig cfg) : client_(std::move(cfg)) {}

    bool wants_images() const override { return true; }
    std::string name() const override { return "vlm"; }

    Action decide(const DecisionContext& ctx) override {
        ConstraintSet none;
        const ConstraintSet& constraints = ctx.constraints ? *ctx.constraints : none;
        std::string graph_ppm = ctx.graph_image ? *ctx.graph_image : std::string();
        std::string fpv_ppm = ctx.fpv_image ? *ctx.fpv_image : std::string();
        PromptBundle bundle;
        if (ctx.task || ctx.subtask) {
            const std::string& text =
                ctx.subtask ? ctx.subtask->prompt.text : ctx.task->text;
            bundle = build_deployment_prompt(text, constraints, std::move(graph_ppm),
                                             std::move(fpv_ppm));
        } else {
            bundle = build_exploration_prompt(constraints, std::move(graph_ppm),
                                              std::move(fpv_ppm));
        }
        return client_.decide(bundle);
    }

    VlmClient& client() { return client_; }

  private:
    VlmClient client_;
};

}  // namespace gridnav
