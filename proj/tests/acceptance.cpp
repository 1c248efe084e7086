// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "style_fixtures.hpp"
#include "test_util.hpp"
#include "top/cli/app.hpp"
#include "top/dataset/anonymize.hpp"
#include "top/dataset/ops.hpp"
#include "top/diffusion/diffusion.hpp"
#include "top/io/png.hpp"
#include "top/metrics/report.hpp"
#include "top/metrics/rouge.hpp"
#include "top/metrics/ssim.hpp"
#include "top/style/histogram.hpp"
#include "top/style/losses.hpp"
#include "top/style/transfer.hpp"
#include "top/text/chat_client.hpp"
#include "top/text/likelihood.hpp"
#include "top/text/prompt.hpp"

namespace {

using namespace top;
namespace fs = std::filesystem;

/// Collects failed expectations for one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream ss;
        ss.precision(17);
        ss << what << ": got " << got << ", want " << want << " +/- " << tol;
        expect(std::abs(got - want) <= tol, ss.str());
    }
    bool ok() const { return failed_ == 0; }
    std::string summary() const {
        std::string s = std::to_string(failed_) + " failed";
        for (const auto& f : failures_) s += "; " + f;
        return s;
    }

private:
    std::vector<std::string> failures_;
    std::size_t failed_ = 0;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s; // wall-clock budget, 0 when none is set
    std::function<void(Checks&)> body;
};

// -- 1 ---------------------------------------------------------------------------

void rouge_oracle(Checks& c) {
    const oracle::SubsequenceTable table(7, 3);
    std::size_t pairs = 0, mismatches = 0;
    std::string first;
    for (std::size_t i = 1; i < table.seqs.size(); ++i) {
        for (std::size_t j = 1; j < table.seqs.size(); ++j) {
            const auto& cand = table.seqs[i];
            const auto& ref = table.seqs[j];
            const std::size_t lcs = table.lcs(i, j);
            const auto got = metrics::rouge_l(cand, ref);
            const double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
            const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
            // Harmonic mean of lcs/nc and lcs/nr, as one correctly rounded division.
            const double f = 2.0 * static_cast<double>(lcs) / static_cast<double>(cand.size() + ref.size());
            if (got.precision != p || got.recall != r || got.f != f) {
                if (mismatches++ == 0) first = "pair (" + std::to_string(i) + ", " + std::to_string(j) + ")";
            }
            ++pairs;
        }
    }
    c.expect(pairs == 3279u * 3279u, "pair count " + std::to_string(pairs));
    // The bitset table agrees with direct subsequence enumeration.
    for (std::size_t i = 1; i < table.seqs.size(); i += 37)
        for (std::size_t j = 1; j < table.seqs.size(); j += 41)
            c.expect(table.lcs(i, j) == oracle::brute_lcs(table.seqs[i], table.seqs[j]), "table vs brute_lcs");
    c.expect(mismatches == 0, std::to_string(mismatches) + " mismatches, first at " + first);

    const auto s = metrics::rouge_l(metrics::tokenize("the cat sat"), metrics::tokenize("the cat sat on the mat"));
    c.near(s.precision, 1.0, 1e-9, "worked example P");
    c.near(s.recall, 0.5, 1e-9, "worked example R");
    c.near(s.f, 0.6667, 1e-4, "worked example F (4 digits)");
    c.near(s.f, 2.0 / 3.0, 1e-9, "worked example F");
}

// -- 2 ---------------------------------------------------------------------------

void ssim_checks(Checks& c) {
    Rng rng(202);
    for (int i = 0; i < 20; ++i) {
        const auto x = testing::random_image(32, 32, rng);
        c.expect(metrics::ssim(x, x) == 1.0, "ssim(x, x) != 1 for image " + std::to_string(i));
    }
    const ImageTensor zero(32, 32, 0.0), one(32, 32, 1.0);
    const double c1 = metrics::SsimParams{}.c1();
    c.near(metrics::ssim(zero, one), c1 / (1.0 + c1), 1e-9, "constant pair vs C1/(1+C1)");
    c.near(metrics::ssim(zero, one), 9.999e-5, 1e-9, "constant pair vs 9.999e-5");
    for (int i = 0; i < 10; ++i) {
        const auto x = testing::random_image(32, 32, rng);
        const auto y = testing::random_image(32, 32, rng);
        c.near(metrics::ssim(x, y), oracle::naive_ssim(x, y), 1e-8, "naive reference pair " + std::to_string(i));
    }
}

// -- 3 ---------------------------------------------------------------------------

void style_math(Checks& c) {
    using namespace top::style;
    const FeatureMap f{0, 2, 1, 2, {1, 2, 3, 4}};
    const auto g = gram(f);
    c.expect(g.entries == std::vector<double>{5, 11, 11, 25}, "gram of [[1,2],[3,4]]");
    const GramMatrix zero{0, 2, {0, 0, 0, 0}};
    c.expect(style_loss_layer(g, zero, 2, 2) == 13.9375, "style_loss_layer worked example");
    const FeatureMap p{0, 2, 1, 2, {0, 2, 3, 0}};
    c.expect(content_loss(f, p) == 8.5, "content_loss worked example");
    const HistogramFeature a{2, {1, 0, 1, 0, 1, 0}};
    const HistogramFeature b{2, {1, 0, 1, 0, 1.0 - 0.5 / std::sqrt(2.0), 0.5 / std::sqrt(2.0)}};
    c.near(hist_distance(a, b), 0.5, 1e-15, "histogram distance fixture");
    c.near(hist_similarity(a, b, 1.0), std::exp(-0.5), 1e-12, "hist_similarity at gamma 1");
}

// -- 4 ---------------------------------------------------------------------------

void gradient_check(Checks& c) {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        style::LossConfig cfg;
        cfg.alpha = rng.uniform(0.1, 1.0);
        cfg.beta = std::pow(10.0, rng.uniform(1.0, 5.0));
        cfg.delta = rng.uniform(0.5, 3.0);
        cfg.gamma = rng.uniform(0.5, 10.0);
        cfg.bins = 8 + rng.below(25);
        const auto p = testing::make_problem(8, 4000 + trial, cfg, style::ConvBank(style::ConvBankSpec::standard(trial)));
        const auto at = testing::smooth_region_image(8, rng, cfg.bins);
        const double err = testing::fd_relative_error(p, at, cfg);
        c.expect(err <= 1e-4, "instance " + std::to_string(trial) + " relative error " + std::to_string(err));
    }
}

// -- 5 ---------------------------------------------------------------------------

void optimization_contract(Checks& c) {
    Rng rng(505);
    const auto content = testing::textured_image(32, 32, rng, 0.0);
    const auto style_img = testing::textured_image(32, 32, rng, 2.5);
    const style::ConvBank bank(style::ConvBankSpec::standard(5));

    style::LossConfig cfg;
    cfg.beta = 1e5;
    cfg.gamma = 1.0;
    cfg.max_iterations = 50;
    cfg.tolerance = 1e-12;
    const auto r = style::transfer(content, std::vector<ImageTensor>{style_img}, bank, cfg);
    c.expect(r.iterations == 50, "ran " + std::to_string(r.iterations) + " of 50 iterations");
    c.expect(r.losses.size() == r.iterations + 1, "loss sequence length");
    for (std::size_t i = 1; i < r.losses.size(); ++i)
        c.expect(r.losses[i] <= r.losses[i - 1], "loss increased at step " + std::to_string(i));
    c.expect(r.losses.back() < 0.9 * r.losses.front(),
             "final " + std::to_string(r.losses.back()) + " not below 0.9 x initial " + std::to_string(r.losses.front()));

    style::LossConfig fixed;
    fixed.beta = 0.0;
    fixed.delta = 0.0;
    const auto same = style::transfer(content, std::vector<ImageTensor>{style_img}, bank, fixed);
    c.expect(same.image == content, "beta = delta = 0 changed the content image");
}

// -- 6 ---------------------------------------------------------------------------

void diffusion_checks(Checks& c) {
    using namespace top::diffusion;
    std::vector<NoiseSchedule> schedules = {linear_schedule(1, 0.5, 0.5), linear_schedule(10, 0.01, 0.3),
                                            linear_schedule(100, 1e-4, 0.02), linear_schedule(1000, 1e-4, 0.02)};
    Rng rng(606);
    for (int i = 0; i < 20; ++i) {
        const double b1 = rng.uniform(1e-5, 0.05);
        schedules.push_back(linear_schedule(1 + rng.below(500), b1, rng.uniform(b1, 0.5)));
    }
    for (std::size_t k = 0; k < schedules.size(); ++k) {
        const auto& s = schedules[k];
        for (std::size_t t = 0; t <= s.steps(); ++t) {
            c.near(s.alpha(t) * s.alpha(t) + s.sigma(t) * s.sigma(t), 1.0, 1e-12,
                   "schedule " + std::to_string(k) + " t " + std::to_string(t));
            if (t > 0)
                c.expect(s.alpha_bar(t) < s.alpha_bar(t - 1),
                         "alpha_bar not decreasing, schedule " + std::to_string(k) + " t " + std::to_string(t));
        }
    }

    const auto s = linear_schedule(100, 1e-4, 0.02);
    const Denoiser optimal = [&s](std::span<const double> x, const ConditionEmbedding&, std::size_t t) {
        Tensor out(x.begin(), x.end());
        for (double& v : out) v *= s.sigma(t);
        return out;
    };
    const ConditionEmbedding none{};
    for (std::size_t t : {std::size_t{1}, std::size_t{50}, std::size_t{100}}) {
        const double est = estimate_simple_loss(optimal, none, t, s, 1, 100000, 6006);
        c.near(est, s.alpha_bar(t), 0.03 * s.alpha_bar(t), "Monte-Carlo simple loss at t " + std::to_string(t));
    }

    const std::vector<std::size_t> shape{3, 8, 8};
    const auto a = ddpm_sample(optimal, none, s, shape, 61);
    const auto b = ddpm_sample(optimal, none, s, shape, 61);
    const auto d = ddpm_sample(optimal, none, s, shape, 62);
    c.expect(a == b, "ddpm_sample differs for the same seed");
    c.expect(a != d, "ddpm_sample ignores the seed");
}

// -- 7 ---------------------------------------------------------------------------

std::string random_text(Rng& rng, std::size_t max_len, const std::string& alphabet) {
    std::string s(rng.below(max_len + 1), ' ');
    for (char& ch : s) ch = alphabet[rng.below(alphabet.size())];
    return s;
}

void text_plumbing(Checks& c) {
    using namespace top::text;
    for (std::size_t n : {1u, 2u, 3u, 10u, 1000u, 100000u}) {
        TokenLogProbs lp{std::vector<std::string>(n, "t"), std::vector<double>(n, -std::log(4.0))};
        c.near(perplexity(lp), 4.0, 1e-9, "uniform-over-4 perplexity at length " + std::to_string(n));
    }

    Rng rng(707);
    for (int trial = 0; trial < 100; ++trial) {
        PromptTemplates t;
        t.separator = random_text(rng, 2, "|#") + "~";
        t.preference_instruction = "I" + random_text(rng, 20, "abc xyz");
        t.paraphrase_instruction = "C" + random_text(rng, 20, "abc xyz");
        UserHistory h;
        std::size_t expected = t.preference_instruction.size();
        std::vector<std::string> items(1 + rng.below(8));
        for (std::size_t k = 0; k < items.size(); ++k) {
            items[k] = "H" + std::to_string(k) + "." + random_text(rng, 15, "def \xc3\xa9");
            expected += t.separator.size() + items[k].size();
            h.items.emplace_back(items[k]);
        }
        const auto prompt = assemble_preference_prompt(t, h);
        c.expect(prompt.size() == expected, "preference prompt length, instance " + std::to_string(trial));
        std::size_t pos = prompt.find(t.preference_instruction);
        c.expect(pos == 0, "instruction not first, instance " + std::to_string(trial));
        for (const auto& item : items) {
            const auto next = prompt.find(item, pos);
            c.expect(next != std::string::npos && next >= pos, "history order, instance " + std::to_string(trial));
            pos = next == std::string::npos ? pos : next + item.size();
        }

        const std::string pref = "P" + random_text(rng, 12, "ghi");
        const std::string content = "X" + random_text(rng, 12, "jkl");
        const auto para = assemble_paraphrase_prompt(t, Preference::text(pref), content);
        c.expect(para.size() == t.paraphrase_instruction.size() + pref.size() + content.size() + 2 * t.separator.size(),
                 "paraphrase prompt length, instance " + std::to_string(trial));
        const auto pc = para.find(t.paraphrase_instruction), pp = para.find(pref), px = para.find(content);
        c.expect(pc == 0 && pc < pp && pp < px && px != std::string::npos,
                 "paraphrase component order, instance " + std::to_string(trial));
    }

    auto mock = std::make_shared<MockEchoTransport>();
    ChatClient client(ChatEndpointConfig{}, mock);
    std::vector<std::string> prompts;
    for (int i = 0; i < 100; ++i) {
        std::string p;
        const std::size_t n = rng.below(200);
        for (std::size_t k = 0; k < n; ++k) p.push_back(static_cast<char>(1 + rng.below(127)));
        p += "\xe4\xb8\xad\xe6\x96\x87";
        prompts.push_back(p);
        client.complete(p);
    }
    const auto reqs = mock->requests();
    c.expect(reqs.size() == prompts.size(), "mock request count");
    for (std::size_t i = 0; i < std::min(reqs.size(), prompts.size()); ++i) {
        const auto j = nlohmann::json::parse(reqs[i]);
        c.expect(j.at("messages").at(0).at("content").get<std::string>() == prompts[i],
                 "mock prompt bytes differ, request " + std::to_string(i));
    }
}

// -- 8 ---------------------------------------------------------------------------

std::string random_userid(Rng& rng) {
    static const std::vector<std::string> alpha = {"a", "q", "z", "0", "9", "_", "-", ".", "\xc3\xa9", "\xe4\xb8\xad"};
    std::string s;
    const std::size_t n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) s += alpha[rng.below(alpha.size())];
    return s;
}

void dataset_checks(Checks& c) {
    using namespace top::dataset;
    const AesKey key = {0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07,
                        0x08, 0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f};
    const auto pt = from_hex("00112233445566778899aabbccddeeff");
    AesBlock block{};
    std::copy(pt.begin(), pt.end(), block.begin());
    c.expect(to_hex(aes128_encrypt_block(key, block)) == "69c4e0d86a7b0430d8cdb78070b4c55a", "FIPS-197 vector");

    Rng rng(808);
    std::set<std::string> ids, tokens;
    while (ids.size() < 10000) ids.insert(random_userid(rng));
    for (const auto& id : ids) {
        const auto tok = anonymize_userid(key, id);
        c.expect(tok == anonymize_userid(key, id), "non-deterministic for " + id);
        tokens.insert(tok);
    }
    c.expect(tokens.size() == ids.size(), std::to_string(ids.size() - tokens.size()) + " collisions");

    const std::vector<ImageRecord> recs = {{"a.png", "u1", 4.99, {}}, {"b.png", "u1", 5.0, {}},
                                           {"c.png", "u2", 5.01, {}}, {"d.png", "u2", 9.5, {}},
                                           {"e.png", "u3", 0.0, {}},  {"f.png", "u3", 5.0000001, {}}};
    const auto kept = filter_by_aesthetic(recs, 5.0);
    const std::vector<ImageRecord> want = {recs[2], recs[3], recs[5]};
    c.expect(kept == want, "filter at 5.0 kept " + std::to_string(kept.size()) + " rows");

    const std::vector<std::string> prefs = {"p0", "p1"};
    const std::vector<PieceIntro> intros = {{"n0", "i0"}, {"n1", "i1"}, {"n2", "i2"}};
    const auto rows = crossmatch(prefs, intros);
    c.expect(rows.size() == 6, "crossmatch row count " + std::to_string(rows.size()));
    for (std::size_t k = 0; k < std::min<std::size_t>(rows.size(), 6); ++k)
        c.expect(rows[k].preference == prefs[k / 3] && rows[k].piecename == intros[k % 3].piecename &&
                     rows[k].intro == intros[k % 3].intro,
                 "crossmatch row " + std::to_string(k) + " out of preference-major order");
}

// -- 9 ---------------------------------------------------------------------------

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void end_to_end(Checks& c) {
    const fs::path dir = testing::scratch_dir("acceptance_e2e");
    auto file = [&](const std::string& name, const std::string& body) {
        testing::write_text(dir / name, body);
        return (dir / name).string();
    };
    auto png = [&](const std::string& name, const ImageTensor& img) {
        io::write_png(dir / name, img);
        return (dir / name).string();
    };
    auto at = [&](const std::string& name) { return (dir / name).string(); };

    Rng rng(909);
    const auto content = png("content.png", testing::textured_image(32, 32, rng, 0.0));
    const auto style_img = png("style.png", testing::textured_image(32, 32, rng, 2.5));
    const auto cfg = file("style.json", R"({"seed": 9, "style": {"beta": 1e5, "gamma": 1.0, "max_iterations": 20}})");
    auto transfer = [&](const std::string& config, const std::string& out) {
        return cli_run({"style-transfer", "--content", content, "--history", style_img, "--config", config, "--out", out});
    };

    const auto a = transfer(cfg, at("a.png"));
    const auto b = transfer(cfg, at("b.png"));
    c.expect(a.code == 0 && b.code == 0, "style-transfer failed: " + a.err + b.err);
    c.expect(testing::read_bytes(dir / "a.png") == testing::read_bytes(dir / "b.png"), "same seed, different PNG bytes");
    c.expect(testing::read_bytes(dir / "a.png") != testing::read_bytes(content), "style-transfer left the image unchanged");

    // Identical text: Rouge-L under CPI.
    const auto text = file("o.txt", "The cat sat on the mat.\n");
    const auto same = file("c.txt", "The cat sat on the mat.\n");
    const auto pref = file("p.txt", "Likes cats.\n");
    const auto emb = file("emb.json", R"({"output": [0.1, 0.7], "content": [0.3, 0.1], "preference": [-0.5, 0.2]})");
    const auto lp = file("lp.json", R"({"tokens": ["a", "b"], "logprobs": [-0.5, -1.0]})");
    const auto mock = file("mock.json", R"({"endpoint": {"base_url": "mock://echo"}})");
    auto r = cli_run({"eval", "--output", text, "--content", same, "--pref", pref, "--embeddings", emb, "--logprobs", lp,
                      "--config", mock});
    c.expect(r.code == 0, "text eval failed: " + r.err);
    if (r.code == 0) {
        const auto report = metrics::TopReport::from_json(nlohmann::json::parse(r.out));
        c.expect(report.cpi.count("rouge_l_f") && report.cpi.at("rouge_l_f") == 1.0, "identical text CPI rouge_l_f != 1");
    }

    // Identical images: SSIM under CPI.
    r = cli_run({"eval", "--output", content, "--content", content, "--pref", style_img, "--config", cfg});
    c.expect(r.code == 0, "image eval failed: " + r.err);
    if (r.code == 0) {
        const auto report = metrics::TopReport::from_json(nlohmann::json::parse(r.out));
        c.expect(report.cpi.count("ssim") && report.cpi.at("ssim") == 1.0, "identical image CPI ssim != 1");
    }

    // Documented exit codes.
    auto expect_code = [&](const Run& run, int want, const std::string& what) {
        c.expect(run.code == want,
                 what + ": exit " + std::to_string(run.code) + ", want " + std::to_string(want) + " (" + run.err + ")");
    };
    expect_code(cli_run({"--help"}), 0, "help");
    expect_code(cli_run({}), 2, "no subcommand");
    expect_code(cli_run({"frobnicate"}), 2, "unknown subcommand");
    expect_code(cli_run({"style-transfer", "--content", content}), 2, "missing required flags");
    expect_code(cli_run({"extract-pref", "--history", at("none.txt"), "--config", mock, "--out", at("x.txt")}), 2,
                "missing input file");
    expect_code(transfer(file("bad.json", R"({"style": {"alpha": -1}})"), at("x.png")), 2, "invalid config value");
    expect_code(transfer(file("unknown.json", R"({"stlye": {}})"), at("x.png")), 2, "unknown config key");
    expect_code(cli_run({"eval", "--output", text, "--content", same, "--pref", pref, "--config", mock}), 2,
                "missing metric inputs");
    expect_code(cli_run({"dataset", "validate", "--kind", "comment", "--in", file("bad.jsonl", "{}\n")}), 2,
                "dataset validation failure");

    const auto down =
        file("down.json", "{\"endpoint\": {\"base_url\": \"http://127.0.0.1:" + std::to_string(testing::unused_loopback_port()) +
                              "\", \"max_retries\": 1, \"backoff_initial_s\": 0.0, \"timeout_s\": 2.0}}");
    expect_code(cli_run({"extract-pref", "--history", file("h.txt", "a\nb\n"), "--config", down, "--out", at("p_out.txt")}),
                3, "endpoint down");

    expect_code(cli_run({"style-transfer", "--content", at("missing.png"), "--history", style_img, "--config", cfg,
                         "--out", at("x.png")}),
                4, "missing image");
    expect_code(cli_run({"style-transfer", "--content", content, "--history", file("corrupt.png", "not a png"),
                         "--config", cfg, "--out", at("x.png")}),
                4, "corrupt image");

    const auto huge = file("huge.json", R"({"style": {"alpha": 1.7e308, "beta": 1.7e308, "delta": 1.7e308}})");
    expect_code(transfer(huge, at("x.png")), 5, "non-finite objective");
    c.expect(!fs::exists(dir / "x.png") && !fs::exists(dir / "p_out.txt"), "failed runs left output files");

#ifdef TOP_CLI_BINARY
    auto status = [](const std::string& args) {
        const int s = std::system((std::string(TOP_CLI_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    c.expect(status("--help") == 0, "binary help exit code");
    c.expect(status("--no-such-flag") == 2, "binary usage error exit code");
    c.expect(status("style-transfer --content " + at("missing.png") + " --history " + style_img + " --config " + cfg +
                    " --out " + at("x.png")) == 4,
             "binary image error exit code");
#endif
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "rouge_l exhaustive oracle and worked example", 10.0, rouge_oracle},
        {2, "ssim identity, closed form and naive reference", 0.0, ssim_checks},
        {3, "gram, style, content and histogram worked examples", 0.0, style_math},
        {4, "grad_total_loss vs central finite differences", 60.0, gradient_check},
        {5, "transfer monotone descent and fixed point", 60.0, optimization_contract},
        {6, "diffusion schedules, simple loss and sampler", 60.0, diffusion_checks},
        {7, "perplexity, prompt assembly and mock round trip", 0.0, text_plumbing},
        {8, "anonymize, filter and crossmatch", 0.0, dataset_checks},
        {9, "end-to-end CLI determinism, eval and exit codes", 0.0, end_to_end},
    };

    int failed = 0;
    for (const auto& cr : criteria) {
        Checks checks;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(checks);
        } catch (const std::exception& e) {
            checks.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cr.limit_s > 0.0) checks.expect(secs < cr.limit_s, "runtime " + std::to_string(secs) + " s over budget");

        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2f s", secs);
        if (checks.ok()) {
            std::cout << "PASS criterion " << cr.id << ": " << cr.name << " (" << timing << ")\n";
        } else {
            ++failed;
            std::cout << "FAIL criterion " << cr.id << ": " << cr.name << " (" << timing << "): " << checks.summary() << '\n';
        }
        std::cout.flush();
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
    return failed == 0 ? 0 : 1;
}
