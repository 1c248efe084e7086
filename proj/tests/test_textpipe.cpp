#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "top/text/chat_client.hpp"
#include "top/text/likelihood.hpp"
#include "top/text/prompt.hpp"

using namespace top;
using namespace top::text;

namespace {

UserHistory text_history(std::vector<std::string> items) {
    UserHistory h;
    for (auto& s : items) h.items.emplace_back(std::move(s));
    return h;
}

/// Random printable string over an alphabet that excludes the separator.
std::string random_text(Rng& rng, std::size_t max_len, const std::string& alphabet) {
    std::string s(rng.below(max_len + 1), ' ');
    for (char& c : s) c = alphabet[rng.below(alphabet.size())];
    return s;
}

PromptTemplates templates(std::string ip, std::string ic, std::string sep = "\n") {
    PromptTemplates t;
    t.preference_instruction = std::move(ip);
    t.paraphrase_instruction = std::move(ic);
    t.separator = std::move(sep);
    return t;
}

/// Local HTTP server answering /v1/chat/completions from a scripted status list.
class ScriptedServer {
public:
    explicit ScriptedServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
        svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const std::size_t i = hits_++;
            bodies_.push_back(req.body);
            auth_ = req.get_header_value("Authorization");
            const int status = i < statuses_.size() ? statuses_[i] : statuses_.back();
            res.status = status;
            if (status == 200) {
                nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "ok:" + std::to_string(i)}}}}}}};
                res.set_content(reply.dump(), "application/json");
            } else {
                res.set_content("{\"error\":\"scripted\"}", "application/json");
            }
        });
        port_ = svr_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { svr_.listen_after_bind(); });
        svr_.wait_until_ready();
    }
    ~ScriptedServer() {
        svr_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    std::size_t hits() const { return hits_; }
    const std::vector<std::string>& bodies() const { return bodies_; }
    const std::string& auth() const { return auth_; }

private:
    httplib::Server svr_;
    std::vector<int> statuses_;
    std::atomic<std::size_t> hits_{0};
    std::vector<std::string> bodies_;
    std::string auth_;
    int port_ = 0;
    std::thread thread_;
};

ChatEndpointConfig fast_config(const std::string& url, int retries) {
    ChatEndpointConfig cfg;
    cfg.base_url = url;
    cfg.max_retries = retries;
    cfg.timeout_s = 5.0;
    cfg.api_key_env = "TOP_TEST_UNSET_KEY";
    return cfg;
}

ChatClient::Sleeper record_sleeps(std::vector<double>& out) {
    return [&out](double s) { out.push_back(s); };
}

} // namespace

TEST(PreferencePrompt, SingleItem) {
    const auto t = templates("Summarize taste:", "Rewrite:");
    EXPECT_EQ(assemble_preference_prompt(t, text_history({"liked A"})), "Summarize taste:\nliked A");
}

TEST(PreferencePrompt, PreservesOrder) {
    const auto t = templates("Summarize taste:", "Rewrite:");
    EXPECT_EQ(assemble_preference_prompt(t, text_history({"r1", "r2"})), "Summarize taste:\nr1\nr2");
}

TEST(PreferencePrompt, LengthIdentityOnRandomInputs) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::string sep = random_text(rng, 3, "|#~") + "|";
        const auto t = templates(random_text(rng, 20, "abcxyz ") + "I", "C");
        std::vector<std::string> items(1 + rng.below(6));
        std::size_t expected = t.preference_instruction.size();
        for (auto& s : items) {
            s = random_text(rng, 15, "abc def\xc3\xa9");
            expected += s.size() + sep.size();
        }
        auto tt = t;
        tt.separator = sep;
        EXPECT_EQ(assemble_preference_prompt(tt, text_history(items)).size(), expected);
    }
}

TEST(PreferencePrompt, RejectsEmptyAndImageHistories) {
    const auto t = templates("I", "C");
    EXPECT_THROW(assemble_preference_prompt(t, UserHistory{}), InvalidArgument);
    UserHistory img;
    img.items.emplace_back(ImageRef{"a.png", std::nullopt});
    EXPECT_THROW(assemble_preference_prompt(t, img), ModalityError);
    UserHistory mixed = text_history({"x"});
    mixed.items.emplace_back(ImageRef{"a.png", std::nullopt});
    EXPECT_THROW(assemble_preference_prompt(t, mixed), ModalityError);
}

TEST(PreferencePrompt, RejectsEmptyInstruction) {
    EXPECT_THROW(assemble_preference_prompt(templates("", "C"), text_history({"x"})), InvalidArgument);
    EXPECT_THROW(assemble_paraphrase_prompt(templates("I", ""), Preference::text("p"), "x"), InvalidArgument);
}

TEST(ParaphrasePrompt, Concatenation) {
    const auto t = templates("I", "Rewrite:");
    EXPECT_EQ(assemble_paraphrase_prompt(t, Preference::text("likes horror"), "A calm tale."),
              "Rewrite:\nlikes horror\nA calm tale.");
}

TEST(ParaphrasePrompt, EmptyContent) {
    const auto t = templates("I", "Rewrite:");
    const auto s = assemble_paraphrase_prompt(t, Preference::text("likes horror"), "");
    EXPECT_EQ(s, "Rewrite:\nlikes horror\n");
    EXPECT_EQ(s.size(), std::string("Rewrite:").size() + std::string("likes horror").size() + 2);
}

TEST(ParaphrasePrompt, ComponentOrderOnRandomInputs) {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        // Disjoint alphabets make each part locatable without ambiguity.
        const std::string ic = "C" + random_text(rng, 10, "abc");
        const std::string p = "P" + random_text(rng, 10, "def");
        const std::string x = "X" + random_text(rng, 10, "ghi");
        const auto s = assemble_paraphrase_prompt(templates("I", ic, "|"), Preference::text(p), x);
        const auto pc = s.find(ic), pp = s.find(p), px = s.find(x);
        ASSERT_NE(pc, std::string::npos);
        ASSERT_NE(pp, std::string::npos);
        ASSERT_NE(px, std::string::npos);
        EXPECT_LT(pc, pp);
        EXPECT_LT(pp, px);
        EXPECT_EQ(s.size(), ic.size() + p.size() + x.size() + 2);
    }
}

TEST(ParaphrasePrompt, InjectiveGivenUnusedSeparator) {
    const auto t = templates("I", "C", "|");
    const auto a = assemble_paraphrase_prompt(t, Preference::text("ab"), "c");
    const auto b = assemble_paraphrase_prompt(t, Preference::text("a"), "bc");
    EXPECT_NE(a, b);
}

TEST(ParaphrasePrompt, RejectsNonTextPreference) {
    EXPECT_THROW(assemble_paraphrase_prompt(templates("I", "C"), Preference::embedding({1.0}), "x"), ModalityError);
}

TEST(Likelihood, CertainTokens) {
    TokenLogProbs lp{{"a", "b", "c"}, {0.0, 0.0, 0.0}};
    EXPECT_EQ(next_token_nll(lp), 0.0);
    EXPECT_EQ(perplexity(lp), 1.0);
}

TEST(Likelihood, HandComputed) {
    TokenLogProbs three{{"a", "b", "c"}, std::vector<double>(3, std::log(0.25))};
    EXPECT_NEAR(next_token_nll(three), 4.1589, 1e-4);
    TokenLogProbs one{{"a"}, {std::log(0.5)}};
    EXPECT_NEAR(next_token_nll(one), 0.6931, 1e-4);
    TokenLogProbs mixed{{"a", "b"}, {std::log(0.5), std::log(0.125)}};
    EXPECT_NEAR(perplexity(mixed), 4.0, 1e-12);
}

TEST(Likelihood, UniformOverFourAtAnyLength) {
    for (std::size_t n : {1u, 2u, 7u, 100u, 5000u}) {
        TokenLogProbs lp{std::vector<std::string>(n, "t"), std::vector<double>(n, -std::log(4.0))};
        EXPECT_NEAR(perplexity(lp), 4.0, 1e-9) << n;
    }
}

TEST(Likelihood, PerplexityIsExpOfMeanNll) {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        TokenLogProbs lp{std::vector<std::string>(n, "t"), {}};
        for (std::size_t i = 0; i < n; ++i) lp.logprobs.push_back(std::log(rng.uniform(1e-6, 1.0)));
        EXPECT_EQ(perplexity(lp), std::exp(next_token_nll(lp) / static_cast<double>(n)));
        EXPECT_GE(perplexity(lp), 1.0);
        EXPECT_GE(next_token_nll(lp), 0.0);
    }
}

TEST(Likelihood, Errors) {
    EXPECT_THROW(next_token_nll(TokenLogProbs{}), InvalidArgument);
    EXPECT_THROW(perplexity(TokenLogProbs{}), InvalidArgument);
    EXPECT_THROW(next_token_nll(TokenLogProbs{{"a"}, {0.1}}), InvalidArgument);
    EXPECT_THROW(next_token_nll(TokenLogProbs{{"a", "b"}, {-0.1}}), InvalidArgument);
    EXPECT_THROW(next_token_nll(TokenLogProbs{{"a"}, {-INFINITY}}), InvalidArgument);
}

TEST(Likelihood, JsonForms) {
    auto a = logprobs_from_json(nlohmann::json::parse(R"({"tokens":["x","y"],"logprobs":[-0.5,-1.5]})"));
    EXPECT_EQ(a.tokens, (std::vector<std::string>{"x", "y"}));
    auto b = logprobs_from_json(nlohmann::json::parse(R"({"content":[{"token":"x","logprob":-0.5}]})"));
    EXPECT_EQ(b.logprobs, std::vector<double>{-0.5});
    auto c = logprobs_from_json(nlohmann::json::parse(R"({"logprobs":[-1.0]})"));
    EXPECT_EQ(c.tokens.size(), 1u);
}

TEST(ChatConfig, Validation) {
    ChatEndpointConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    auto bad = cfg;
    bad.timeout_s = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.max_retries = -1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.temperature = -0.1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.base_url = "ftp://x";
    EXPECT_THROW(ChatClient{bad}, ConfigError);
}

TEST(MockEndpoint, EchoesLastLine) {
    ChatEndpointConfig cfg;
    cfg.mock_prefix = "PREF:";
    const auto prompt = assemble_preference_prompt(templates("Summarize taste:", "C"), text_history({"r1", "r2"}));
    EXPECT_EQ(extract_preference(cfg, prompt).as_text(), "PREF:r2");
    EXPECT_EQ(paraphrase_text(cfg, "a\nb\nlast"), "PREF:last");
}

TEST(MockEndpoint, RoundTripsPromptBytes) {
    Rng rng(14);
    auto mock = std::make_shared<MockEchoTransport>();
    ChatClient client(ChatEndpointConfig{}, mock);
    std::vector<std::string> prompts;
    for (int i = 0; i < 50; ++i) {
        std::string p;
        const std::size_t n = rng.below(64);
        for (std::size_t k = 0; k < n; ++k) p.push_back(static_cast<char>(1 + rng.below(127)));
        p += "\xe4\xb8\xad\xe6\x96\x87";  // UTF-8 passes through
        prompts.push_back(p);
        client.complete(p);
    }
    const auto reqs = mock->requests();
    ASSERT_EQ(reqs.size(), prompts.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        const auto j = nlohmann::json::parse(reqs[i]);
        EXPECT_EQ(j.at("messages").at(0).at("content").get<std::string>(), prompts[i]);
        EXPECT_EQ(j.at("messages").at(0).at("role"), "user");
        EXPECT_EQ(j.at("model"), "gpt-4");
        EXPECT_DOUBLE_EQ(j.at("temperature").get<double>(), 0.7);
    }
}

TEST(ChatClientHttp, RetriesThenSucceeds) {
    ScriptedServer server({500, 500, 200});
    std::vector<double> sleeps;
    ChatClient client(fast_config(server.url(), 2), nullptr, record_sleeps(sleeps));
    const auto reply = client.complete("hello");
    EXPECT_EQ(reply.content, "ok:2");
    EXPECT_EQ(reply.attempts, 3);
    EXPECT_EQ(server.hits(), 3u);
    for (const auto& b : server.bodies()) EXPECT_EQ(nlohmann::json::parse(b)["messages"][0]["content"], "hello");
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_GE(sleeps[0], 0.4);
    EXPECT_LE(sleeps[0], 0.6);
    EXPECT_GE(sleeps[1], 0.8);
    EXPECT_LE(sleeps[1], 1.2);
}

TEST(ChatClientHttp, ExhaustionNamesFinalStatus) {
    ScriptedServer server({500, 503});
    std::vector<double> sleeps;
    ChatClient client(fast_config(server.url(), 1), nullptr, record_sleeps(sleeps));
    try {
        client.complete("x");
        FAIL() << "expected EndpointError";
    } catch (const EndpointError& e) {
        EXPECT_EQ(e.kind(), EndpointError::Kind::status);
        EXPECT_EQ(e.status(), 503);
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
    }
    EXPECT_EQ(server.hits(), 2u);
}

TEST(ChatClientHttp, ClientErrorIsNotRetried) {
    ScriptedServer server({401, 200});
    ChatClient client(fast_config(server.url(), 3), nullptr, [](double) {});
    try {
        client.complete("x");
        FAIL();
    } catch (const EndpointError& e) {
        EXPECT_EQ(e.kind(), EndpointError::Kind::status);
        EXPECT_EQ(e.status(), 401);
    }
    EXPECT_EQ(server.hits(), 1u);
}

TEST(ChatClientHttp, TooManyRequestsIsRetried) {
    ScriptedServer server({429, 200});
    ChatClient client(fast_config(server.url(), 1), nullptr, [](double) {});
    EXPECT_EQ(client.complete("x").content, "ok:1");
}

TEST(ChatClientHttp, SendsBearerToken) {
    ScriptedServer server({200});
    auto cfg = fast_config(server.url(), 0);
    cfg.api_key_env = "TOP_TEST_KEY_SET";
    ::setenv("TOP_TEST_KEY_SET", "sekret", 1);
    ChatClient(cfg).complete("x");
    EXPECT_EQ(server.auth(), "Bearer sekret");
}

TEST(ChatClientHttp, TransportFailure) {
    const int port = top::testing::unused_loopback_port();
    std::vector<double> sleeps;
    ChatClient client(fast_config("http://127.0.0.1:" + std::to_string(port), 2), nullptr, record_sleeps(sleeps));
    try {
        client.complete("x");
        FAIL();
    } catch (const EndpointError& e) {
        EXPECT_EQ(e.kind(), EndpointError::Kind::transport);
        EXPECT_EQ(e.status(), 0);
    }
    EXPECT_EQ(sleeps.size(), 2u);
}

namespace {

class FixedTransport : public Transport {
public:
    explicit FixedTransport(HttpResponse r) : r_(std::move(r)) {}
    HttpResponse post(const std::string&, const std::string&) override {
        ++calls;
        return r_;
    }
    int calls = 0;

private:
    HttpResponse r_;
};

} // namespace

TEST(ChatClientErrors, MalformedBody) {
    for (const char* body : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":{"content":3}}]})"}) {
        auto t = std::make_shared<FixedTransport>(HttpResponse{200, body, {}});
        ChatClient client(fast_config("mock://echo", 3), t, [](double) {});
        try {
            client.complete("x");
            FAIL() << body;
        } catch (const EndpointError& e) {
            EXPECT_EQ(e.kind(), EndpointError::Kind::malformed) << body;
        }
        EXPECT_EQ(t->calls, 1);
    }
}

TEST(ChatClientErrors, ParsesOptionalLogprobs) {
    auto t = std::make_shared<FixedTransport>(HttpResponse{
        200,
        R"({"choices":[{"message":{"content":"hi"},"logprobs":{"content":[{"token":"hi","logprob":-0.25}]}}]})",
        {}});
    ChatClient client(ChatEndpointConfig{}, t);
    const auto r = client.complete("x");
    ASSERT_TRUE(r.logprobs.has_value());
    EXPECT_EQ(r.logprobs->logprobs, std::vector<double>{-0.25});
}

TEST(ChatClientConcurrency, InFlightCapHonoured) {
    class SlowTransport : public Transport {
    public:
        HttpResponse post(const std::string& body, const std::string& b) override {
            const int now = ++active;
            int prev = peak.load();
            while (now > prev && !peak.compare_exchange_weak(prev, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            --active;
            return echo.post(body, b);
        }
        std::atomic<int> active{0}, peak{0};
        MockEchoTransport echo;
    };
    auto t = std::make_shared<SlowTransport>();
    ChatEndpointConfig cfg;
    cfg.max_in_flight = 3;
    ChatClient client(cfg, t);
    std::vector<std::thread> threads;
    std::vector<std::string> out(12);
    for (int i = 0; i < 12; ++i)
        threads.emplace_back([&, i] { out[i] = client.complete("q\n" + std::to_string(i)).content; });
    for (auto& th : threads) th.join();
    EXPECT_LE(t->peak.load(), 3);
    EXPECT_GE(t->peak.load(), 2);
    for (int i = 0; i < 12; ++i) EXPECT_EQ(out[i], std::to_string(i));
}

TEST(ChatClientBackoff, DelaysDoubleWithBoundedJitter) {
    ChatEndpointConfig cfg;
    ChatClient client(cfg, nullptr, nullptr, 99);
    for (int k = 0; k < 6; ++k) {
        const double d = client.backoff_delay(k);
        const double base = 0.5 * std::ldexp(1.0, k);
        EXPECT_GE(d, 0.8 * base);
        EXPECT_LE(d, 1.2 * base);
    }
}

TEST(Templates, LoadDropsTrailingNewline) {
    const auto dir = top::testing::scratch_dir("templates");
    {
        std::ofstream(dir / "t.txt") << "Rewrite this:\n";
    }
    EXPECT_EQ(load_template(dir / "t.txt"), "Rewrite this:");
    EXPECT_THROW(load_template(dir / "missing.txt"), InvalidArgument);
}
