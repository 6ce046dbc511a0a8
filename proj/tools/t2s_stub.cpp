// Local chat-completions stub for offline pipeline runs.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "t2s/stub_server.hpp"
#include "t2s/util.hpp"

namespace {

std::map<std::string, std::string> load_answers(const t2s::fs::path& path) {
    const auto j = t2s::read_json_file(path);
    std::map<std::string, std::string> answers;
    if (j.is_object()) {
        for (const auto& [q, sql] : j.items()) answers[q] = sql.get<std::string>();
    } else if (j.is_array()) {
        // dataset records: question plus query / SQL
        for (const auto& r : j) {
            const std::string sql = r.contains("query") ? r["query"].get<std::string>() : r.value("SQL", "");
            answers[r.at("question").get<std::string>()] = sql;
        }
    } else {
        throw std::runtime_error("answers file must be an object or an array of records");
    }
    return answers;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chat-completions stub server"};
    std::string host = "127.0.0.1", mode = "echo-gold", answers_path;
    int port = 0;
    t2s::StubOptions opts;
    app.add_option("--host", host);
    app.add_option("--port", port, "0 picks a free port");
    app.add_option("--mode", mode, "echo-gold, constant or status")->check(CLI::IsMember({"echo-gold", "constant", "status"}));
    app.add_option("--answers", answers_path, "question -> SQL map, or dataset records");
    app.add_option("--reply", opts.constant_reply, "reply for constant mode and unknown questions");
    app.add_option("--status", opts.status, "HTTP status for status mode");
    app.add_flag("--fenced", opts.fenced, "wrap replies in a code fence");
    CLI11_PARSE(app, argc, argv);

    try {
        opts.mode = mode == "echo-gold"  ? t2s::StubOptions::Mode::echo_gold
                    : mode == "constant" ? t2s::StubOptions::Mode::constant
                                         : t2s::StubOptions::Mode::status;
        if (!answers_path.empty()) opts.answers = load_answers(answers_path);

        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);

        t2s::StubServer server(opts);
        server.start(host, port);
        std::cout << server.base_url() << std::endl;
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "t2s-stub: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
