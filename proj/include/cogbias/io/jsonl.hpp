#ifndef COGBIAS_IO_JSONL_HPP
#define COGBIAS_IO_JSONL_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "../types.hpp"
#include "csv.hpp"

namespace cogbias::io {

using json = nlohmann::json;

struct ResponseLog {
    std::vector<ResponseRecord> records;
    std::vector<std::string> warnings;
};

namespace internal {

inline std::string at_line(std::size_t line) {
    return " at line " + std::to_string(line);
}

inline const json* field(const json& obj, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) {
        return nullptr;
    }
    return &*it;
}

inline std::string require_string(const json& obj, const char* name, std::size_t line) {
    auto f = field(obj, name);
    if (!f) {
        throw Error(std::string("missing field '") + name + "'" + at_line(line));
    }
    if (!f->is_string()) {
        throw Error(std::string("field '") + name + "' must be a string" + at_line(line));
    }
    return f->get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* name, std::size_t line) {
    auto f = field(obj, name);
    if (!f) {
        return std::nullopt;
    }
    if (!f->is_string()) {
        throw Error(std::string("field '") + name + "' must be a string" + at_line(line));
    }
    return f->get<std::string>();
}

inline std::int64_t require_index(const json& obj, const char* name, std::size_t line) {
    auto f = field(obj, name);
    if (!f) {
        throw Error(std::string("missing field '") + name + "'" + at_line(line));
    }
    if (!f->is_number_integer()) {
        throw Error(std::string("field '") + name + "' must be an integer" + at_line(line));
    }
    auto v = f->get<std::int64_t>();
    if (v < 0) {
        throw Error(std::string("field '") + name + "' must be non-negative" + at_line(line));
    }
    return v;
}

}

/** Decode one JSON object into a record. `line` is only used in error messages. */
inline ResponseRecord record_from_json(const json& obj, std::size_t line) {
    using namespace internal;
    if (!obj.is_object()) {
        throw Error("expected a JSON object" + at_line(line));
    }
    ResponseRecord r;
    r.run_id = require_string(obj, "run_id", line);
    auto bias_name = require_string(obj, "bias", line);
    auto b = find_bias(bias_name);
    if (!b) {
        throw Error("unknown bias '" + bias_name + "'" + at_line(line));
    }
    r.bias = *b;
    r.scenario_id = require_index(obj, "scenario_id", line);
    r.instance_id = require_index(obj, "instance_id", line);
    auto condition = condition_from_string(require_string(obj, "condition", line));
    if (!condition) {
        throw Error("unknown condition" + at_line(line));
    }
    r.condition = *condition;
    auto scale = scale_from_string(require_string(obj, "scale", line));
    if (!scale) {
        throw Error("unknown scale" + at_line(line));
    }
    r.scale = *scale;
    if (auto f = field(obj, "answer_value")) {
        if (!f->is_number()) {
            throw Error("field 'answer_value' must be a number" + at_line(line));
        }
        r.answer_value = f->get<double>();
    }
    r.answer_option = optional_string(obj, "answer_option", line);
    auto k = field(obj, "k");
    if (!k) {
        throw Error("missing field 'k'" + at_line(line));
    }
    if (!k->is_number_integer()) {
        throw Error("field 'k' must be an integer" + at_line(line));
    }
    r.k = k->get<int>();
    r.target_option = optional_string(obj, "target_option", line);
    return r;
}

inline json record_to_json(const ResponseRecord& r) {
    json j;
    j["run_id"] = r.run_id;
    j["bias"] = r.bias.name;
    j["scenario_id"] = r.scenario_id;
    j["instance_id"] = r.instance_id;
    j["condition"] = to_string(r.condition);
    j["scale"] = to_string(r.scale);
    j["answer_value"] = r.answer_value ? json(*r.answer_value) : json(nullptr);
    j["answer_option"] = r.answer_option ? json(*r.answer_option) : json(nullptr);
    j["k"] = r.k;
    j["target_option"] = r.target_option ? json(*r.target_option) : json(nullptr);
    return j;
}

/** Parse JSONL text: one object per non-blank line; unknown fields are ignored. */
inline ResponseLog parse_responses(std::string_view text) {
    ResponseLog log;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error&) {
            throw Error("malformed JSON" + internal::at_line(line_no));
        }
        log.records.push_back(record_from_json(obj, line_no));
    }
    if (log.records.empty()) {
        log.warnings.push_back("no response records");
    }
    return log;
}

inline ResponseLog read_responses(const std::filesystem::path& path) {
    try {
        return parse_responses(read_text_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

inline std::string format_responses(std::span<const ResponseRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

inline void write_responses(const std::filesystem::path& path, std::span<const ResponseRecord> records) {
    write_text_file(path, format_responses(records));
}

}

#endif
