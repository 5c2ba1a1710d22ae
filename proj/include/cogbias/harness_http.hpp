#ifndef COGBIAS_HARNESS_HTTP_HPP
#define COGBIAS_HARNESS_HTTP_HPP

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>

#include "harness.hpp"
#include "io/config.hpp"

namespace cogbias {

/** Transport over HTTP(S) using the chat-completion wire shape. */
class HttpChatTransport : public ChatTransport {
public:
    explicit HttpChatTransport(io::EndpointConfig config) : config_(std::move(config)) {
        if (const char* token = std::getenv(config_.token_env.c_str())) {
            token_ = token;
        }
    }

    ChatReply complete(const ChatRequest& request) override {
        httplib::Client client(config_.base_url);
        auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
        auto secs = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
        client.set_connection_timeout(secs);
        client.set_read_timeout(secs);
        client.set_write_timeout(secs);
        httplib::Headers headers;
        if (!token_.empty()) {
            headers.emplace("Authorization", "Bearer " + token_);
        }
        auto res = client.Post(config_.path, headers, chat_body(request).dump(), "application/json");
        ChatReply reply;
        if (!res) {
            reply.retryable = true;
            reply.error = "connection failed: " + httplib::to_string(res.error());
            return reply;
        }
        reply.status = res->status;
        if (res->status != 200) {
            reply.retryable = res->status == 408 || res->status == 429 || res->status >= 500;
            reply.error = "HTTP " + std::to_string(res->status);
            return reply;
        }
        auto content = chat_content(res->body);
        if (!content) {
            reply.error = "malformed completion";
            return reply;
        }
        reply.ok = true;
        reply.content = *content;
        return reply;
    }

private:
    io::EndpointConfig config_;
    std::string token_;
};

inline AdministerOptions administer_options(const io::StudyConfig& cfg, std::string run_id) {
    AdministerOptions o;
    o.run_id = std::move(run_id);
    o.model = cfg.endpoint.model;
    o.temperature = cfg.endpoint.temperature;
    o.max_tokens = cfg.endpoint.max_tokens;
    o.concurrency = cfg.endpoint.concurrency;
    o.max_retries = cfg.endpoint.max_retries;
    o.backoff_seconds = cfg.endpoint.backoff_seconds;
    return o;
}

}

#endif
