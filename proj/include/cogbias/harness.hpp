#ifndef COGBIAS_HARNESS_HPP
#define COGBIAS_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "io/jsonl.hpp"
#include "types.hpp"

/**
 * @file harness.hpp
 * @brief Test cases, answer extraction and administration over any chat transport.
 */

namespace cogbias {

struct CaseOption {
    std::string label;
    std::optional<double> value; ///< grid value for scale-pair cases

    bool operator==(const CaseOption&) const = default;
};

/** One pre-generated test instance with both prompt conditions. */
struct TestCase {
    BiasId bias;
    std::int64_t scenario_id = 0;
    std::int64_t instance_id = 0;
    std::string control_prompt;
    std::string treatment_prompt;
    std::vector<CaseOption> options;
    ScaleKind scale = ScaleKind::likert7;
    int k = 1;
    std::optional<std::string> target_option;

    bool operator==(const TestCase&) const = default;
};

inline TestCase case_from_json(const nlohmann::json& obj, std::size_t line) {
    using namespace io::internal;
    if (!obj.is_object()) {
        throw Error("expected a JSON object" + at_line(line));
    }
    TestCase c;
    auto bias_name = require_string(obj, "bias", line);
    auto b = find_bias(bias_name);
    if (!b) {
        throw Error("unknown bias '" + bias_name + "'" + at_line(line));
    }
    c.bias = *b;
    c.scenario_id = require_index(obj, "scenario_id", line);
    c.instance_id = require_index(obj, "instance_id", line);
    c.control_prompt = require_string(obj, "control_prompt", line);
    c.treatment_prompt = require_string(obj, "treatment_prompt", line);
    auto scale = scale_from_string(require_string(obj, "scale", line));
    if (!scale) {
        throw Error("unknown scale" + at_line(line));
    }
    c.scale = *scale;
    auto k = field(obj, "k");
    if (!k || !k->is_number_integer() || (k->get<int>() != 1 && k->get<int>() != -1)) {
        throw Error("field 'k' must be 1 or -1" + at_line(line));
    }
    c.k = k->get<int>();
    c.target_option = optional_string(obj, "target_option", line);

    auto options = field(obj, "options");
    if (!options || !options->is_array() || options->empty()) {
        throw Error("field 'options' must be a non-empty array" + at_line(line));
    }
    for (const auto& o : *options) {
        CaseOption opt;
        if (o.is_string()) {
            opt.label = o.get<std::string>();
        } else if (o.is_object()) {
            opt.label = require_string(o, "label", line);
            if (auto v = field(o, "value")) {
                if (!v->is_number()) {
                    throw Error("option 'value' must be a number" + at_line(line));
                }
                opt.value = v->get<double>();
            }
        } else {
            throw Error("options must be strings or {label, value} objects" + at_line(line));
        }
        if (opt.label.empty()) {
            throw Error("empty option label" + at_line(line));
        }
        c.options.push_back(std::move(opt));
    }
    if (c.scale == ScaleKind::target_choice) {
        if (!c.target_option) {
            throw Error("target-choice case without target_option" + at_line(line));
        }
    } else {
        for (const auto& o : c.options) {
            if (!o.value || !on_grid(c.scale, *o.value)) {
                throw Error("option '" + o.label + "' has no value on the " + std::string(to_string(c.scale)) + " grid" + at_line(line));
            }
        }
    }
    return c;
}

inline nlohmann::json case_to_json(const TestCase& c) {
    nlohmann::json j;
    j["bias"] = c.bias.name;
    j["scenario_id"] = c.scenario_id;
    j["instance_id"] = c.instance_id;
    j["control_prompt"] = c.control_prompt;
    j["treatment_prompt"] = c.treatment_prompt;
    j["options"] = nlohmann::json::array();
    for (const auto& o : c.options) {
        nlohmann::json opt{{"label", o.label}};
        if (o.value) {
            opt["value"] = *o.value;
        }
        j["options"].push_back(opt);
    }
    j["scale"] = to_string(c.scale);
    j["k"] = c.k;
    j["target_option"] = c.target_option ? nlohmann::json(*c.target_option) : nlohmann::json(nullptr);
    return j;
}

inline std::vector<TestCase> parse_cases(std::string_view text) {
    std::vector<TestCase> out;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (io::trim(line).empty()) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw Error("malformed JSON" + io::internal::at_line(line_no));
        }
        out.push_back(case_from_json(obj, line_no));
    }
    return out;
}

inline std::vector<TestCase> read_cases(const std::filesystem::path& path) {
    try {
        return parse_cases(io::read_text_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

struct Extraction {
    std::optional<std::string> label; ///< empty for a non-response
    bool ambiguous = false;           ///< more than one distinct option label occurs in the text
};

namespace internal {

inline bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool label_at(std::string_view text, std::size_t pos, std::string_view label) {
    if (text.compare(pos, label.size(), label) != 0) {
        return false;
    }
    bool left = pos == 0 || !word_char(text[pos - 1]) || !word_char(label.front());
    auto after = pos + label.size();
    bool right = after >= text.size() || !word_char(text[after]) || !word_char(label.back());
    return left && right;
}

}

/**
 * Scan `text` left to right; the first position where an option label occurs as a whole word
 * decides the answer. At one position the longest matching label wins ("10" versus "100").
 */
inline Extraction extract_answer(std::string_view text, std::span<const CaseOption> options) {
    Extraction out;
    std::vector<bool> seen(options.size(), false);
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        std::optional<std::size_t> best;
        for (std::size_t o = 0; o < options.size(); ++o) {
            const auto& label = options[o].label;
            if (!label.empty() && internal::label_at(text, pos, label)) {
                seen[o] = true;
                if (!best || label.size() > options[*best].label.size()) {
                    best = o;
                }
            }
        }
        if (best && !out.label) {
            out.label = options[*best].label;
        }
    }
    std::size_t distinct = 0;
    for (bool s : seen) {
        distinct += s;
    }
    out.ambiguous = distinct > 1;
    return out;
}

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 0;
    std::size_t max_tokens = 64;
};

struct ChatReply {
    bool ok = false;
    bool retryable = false;
    int status = 0;
    std::string content;
    std::string error;
};

/** Anything that answers one chat prompt. Implementations must be callable from several threads. */
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatReply complete(const ChatRequest& request) = 0;
};

/** Chat-completion request body: one user message. */
inline nlohmann::json chat_body(const ChatRequest& request) {
    return {{"model", request.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

/** Text of `choices[0].message.content`, if the body has that shape. */
inline std::optional<std::string> chat_content(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty()) {
        return std::nullopt;
    }
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
        return std::nullopt;
    }
    const auto& content = first["message"]["content"];
    if (!content.is_string()) {
        return std::nullopt;
    }
    return content.get<std::string>();
}

struct AdministerOptions {
    std::string run_id;
    std::string model;
    double temperature = 0;
    std::size_t max_tokens = 64;
    std::size_t concurrency = 4;
    std::size_t max_retries = 3;
    double backoff_seconds = 0.5;
    /** Waits between retries; replaceable so tests need not sleep. */
    std::function<void(double)> sleep = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
};

struct AdministerStats {
    std::size_t cases = 0;
    std::size_t records = 0;
    std::size_t answered = 0;
    std::size_t non_responses = 0;
    std::size_t failed_requests = 0; ///< gave up after the retry cap, or a non-retryable failure
    std::size_t unparsed = 0;        ///< completions that named no option
    std::size_t ambiguous = 0;       ///< completions naming more than one option
    std::size_t retries = 0;
    std::vector<std::string> errors; ///< distinct failure messages, sorted

    bool operator==(const AdministerStats&) const = default;
};

struct AdministerResult {
    std::vector<ResponseRecord> records;
    AdministerStats stats;
};

/**
 * Send both conditions of every case. Records come back as (case 0 control, case 0 treatment,
 * case 1 control, ...) whatever the completion order. Failed or unparseable completions become
 * non-responses; nothing is ever imputed.
 */
inline AdministerResult administer(std::span<const TestCase> cases, ChatTransport& transport, const AdministerOptions& options) {
    const std::size_t jobs = cases.size() * 2;
    struct Outcome {
        std::optional<Extraction> extraction;
        std::optional<std::string> error;
        std::size_t retries = 0;
    };
    std::vector<Outcome> outcomes(jobs);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            const auto& c = cases[j / 2];
            ChatRequest request{options.model, j % 2 == 0 ? c.control_prompt : c.treatment_prompt, options.temperature, options.max_tokens};
            auto& out = outcomes[j];
            for (std::size_t attempt = 0;; ++attempt) {
                ChatReply reply;
                try {
                    reply = transport.complete(request);
                } catch (const std::exception& e) {
                    reply.retryable = true;
                    reply.error = e.what();
                }
                if (reply.ok) {
                    out.extraction = extract_answer(reply.content, c.options);
                    break;
                }
                if (!reply.retryable || attempt >= options.max_retries) {
                    out.error = reply.error;
                    break;
                }
                ++out.retries;
                options.sleep(options.backoff_seconds * std::pow(2.0, static_cast<double>(attempt)));
            }
        }
    };
    const auto threads = std::max<std::size_t>(1, std::min(options.concurrency, jobs));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }

    AdministerResult result;
    auto& stats = result.stats;
    stats.cases = cases.size();
    for (std::size_t j = 0; j < jobs; ++j) {
        const auto& c = cases[j / 2];
        const auto& out = outcomes[j];
        ResponseRecord r;
        r.run_id = options.run_id;
        r.bias = c.bias;
        r.scenario_id = c.scenario_id;
        r.instance_id = c.instance_id;
        r.condition = j % 2 == 0 ? Condition::control : Condition::treatment;
        r.scale = c.scale;
        r.k = c.k;
        r.target_option = c.target_option;
        stats.retries += out.retries;
        if (out.error) {
            ++stats.failed_requests;
            if (std::find(stats.errors.begin(), stats.errors.end(), *out.error) == stats.errors.end()) {
                stats.errors.push_back(*out.error);
            }
        } else if (out.extraction) {
            stats.ambiguous += out.extraction->ambiguous;
            if (!out.extraction->label) {
                ++stats.unparsed;
            } else if (c.scale == ScaleKind::target_choice) {
                r.answer_option = out.extraction->label;
            } else {
                for (const auto& o : c.options) {
                    if (o.label == *out.extraction->label) {
                        r.answer_value = o.value;
                        break;
                    }
                }
            }
        }
        if (r.answered()) {
            ++stats.answered;
        } else {
            ++stats.non_responses;
        }
        result.records.push_back(std::move(r));
    }
    stats.records = result.records.size();
    std::sort(stats.errors.begin(), stats.errors.end());
    return result;
}

}

#endif
