#include "t2s/stub_server.hpp"

#include <httplib.h>

#include "t2s/util.hpp"

namespace t2s {

std::string last_question(const std::string& prompt, const std::string& question_prefix) {
    const std::string marker = question_prefix + " ";
    std::size_t pos = prompt.rfind("\n" + marker);
    std::size_t start;
    if (pos != std::string::npos) start = pos + 1 + marker.size();
    else if (prompt.rfind(marker, 0) == 0) start = marker.size();
    else return "";
    const std::size_t end = prompt.find('\n', start);
    return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

StubServer::StubServer(StubOptions options) : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

StubServer::~StubServer() { stop(); }

void StubServer::install_routes() {
    server_->Post(R"(.*/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
        const int n = ++requests_;
        {
            std::unique_lock lock(mu_);
            if (hang_budget_) {
                if (*hang_budget_ > 0) {
                    --*hang_budget_;
                } else {
                    cv_.wait(lock, [&] { return stopping_ || !hang_budget_; });
                    if (stopping_) {
                        res.status = 503;
                        return;
                    }
                }
            }
        }
        if (options_.delay.count() > 0) std::this_thread::sleep_for(options_.delay);
        if (n <= options_.fail_first) {
            res.status = 503;
            res.set_content(R"({"error":{"message":"warming up"}})", "application/json");
            return;
        }
        if (options_.mode == StubOptions::Mode::status) {
            res.status = options_.status;
            res.set_content(R"({"error":{"message":"stub failure"}})", "application/json");
            return;
        }
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"malformed JSON"}})", "application/json");
            return;
        }
        std::string prompt;
        if (body.contains("messages") && body["messages"].is_array() && !body["messages"].empty())
            prompt = body["messages"].back().value("content", "");
        std::string reply = options_.constant_reply;
        if (options_.mode == StubOptions::Mode::echo_gold) {
            auto it = options_.answers.find(last_question(prompt));
            if (it != options_.answers.end()) reply = it->second;
        }
        if (options_.fenced) reply = "Here is the query:\n```sql\n" + reply + "\n```";
        json out = {{"id", "stub-" + std::to_string(n)},
                    {"object", "chat.completion"},
                    {"model", body.value("model", "stub")},
                    {"choices", json::array({{{"index", 0},
                                              {"message", {{"role", "assistant"}, {"content", reply}}},
                                              {"finish_reason", "stop"}}})}};
        res.set_content(out.dump(), "application/json");
    });
}

int StubServer::start(const std::string& host, int port) {
    host_ = host;
    if (port == 0) port_ = server_->bind_to_any_port(host);
    else port_ = server_->bind_to_port(host, port) ? port : -1;
    if (port_ <= 0) throw std::runtime_error("stub server cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void StubServer::listen(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port)) throw std::runtime_error("stub server cannot listen on " + host + ":" + std::to_string(port));
}

void StubServer::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_) + "/v1"; }

void StubServer::hang_after(int n) {
    std::lock_guard lock(mu_);
    hang_budget_ = n;
}

void StubServer::release() {
    {
        std::lock_guard lock(mu_);
        hang_budget_.reset();
    }
    cv_.notify_all();
}

}  // namespace t2s
