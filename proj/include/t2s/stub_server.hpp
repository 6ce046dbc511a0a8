#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace t2s {

/// A local chat-completions service for tests and offline runs.
struct StubOptions {
    enum class Mode { echo_gold, constant, status };

    Mode mode = Mode::echo_gold;
    /// echo_gold: question text -> SQL answered for it. The question is taken
    /// from the last "Q: " line of the prompt. Unknown questions get `constant_reply`.
    std::map<std::string, std::string> answers;
    std::string constant_reply = "SELECT 1";
    int status = 500;          // status mode: every request fails with this code
    bool fenced = false;       // wrap replies in a ```sql fence with some chatter
    int fail_first = 0;        // answer the first n requests with 503
    std::chrono::milliseconds delay{0};
};

class StubServer {
public:
    explicit StubServer(StubOptions options);
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop() is called elsewhere.
    void listen(const std::string& host, int port);
    void stop();

    /// e.g. http://127.0.0.1:41234/v1
    std::string base_url() const;
    int request_count() const { return requests_.load(); }

    /// After `n` more answered requests, further requests block until
    /// release() or stop(). Used to freeze a client mid-run.
    void hang_after(int n);
    void release();

private:
    void install_routes();

    StubOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;
    std::atomic<int> requests_{0};
    std::mutex mu_;
    std::condition_variable cv_;
    std::optional<int> hang_budget_;
    bool stopping_ = false;
};

/// Question of the final "Q: " line in a prompt, or empty.
std::string last_question(const std::string& prompt, const std::string& question_prefix = "Q:");

}  // namespace t2s
