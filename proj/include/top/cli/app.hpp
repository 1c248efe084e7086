#pragma once

// The `top` command line: subcommands, output staging and exit-code mapping.
// Exit codes: 0 ok, 2 config/usage/input, 3 endpoint, 4 image IO, 5 non-finite.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "top/config.hpp"
#include "top/core/pipeline.hpp"
#include "top/core/stages.hpp"
#include "top/dataset/anonymize.hpp"
#include "top/dataset/ops.hpp"
#include "top/dataset/records.hpp"
#include "top/error.hpp"
#include "top/io/montage.hpp"
#include "top/io/png.hpp"
#include "top/metrics/report.hpp"
#include "top/style/conv_bank.hpp"
#include "top/style/transfer.hpp"
#include "top/text/chat_client.hpp"
#include "top/text/likelihood.hpp"
#include "top/text/prompt.hpp"

namespace top::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kEndpoint = 3, kImageIo = 4, kNonFinite = 5 };

/// Maps an exception, looking through StageError nesting, to an exit code.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const StageError*>(&e)) {
        try {
            std::rethrow_if_nested(e);
        } catch (const std::exception& inner) {
            return exit_code_for(inner);
        } catch (...) {
            return kInternal;
        }
    }
    if (dynamic_cast<const text::EndpointError*>(&e)) return kEndpoint;
    if (dynamic_cast<const ImageIoError*>(&e)) return kImageIo;
    if (dynamic_cast<const NonFiniteError*>(&e)) return kNonFinite;
    if (dynamic_cast<const Error*>(&e)) return kUsage;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kUsage;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kUsage;
    return kInternal;
}

/// Message of `e` followed by the messages of any nested causes.
inline std::string describe(const std::exception& e) {
    std::string msg = e.what();
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        msg += ": " + describe(inner);
    } catch (...) {
    }
    return msg;
}

/// Outputs are written to sibling temp files and renamed into place on
/// commit(); anything not committed is removed on destruction.
class OutputFiles {
public:
    OutputFiles() = default;
    OutputFiles(const OutputFiles&) = delete;
    OutputFiles& operator=(const OutputFiles&) = delete;

    ~OutputFiles() {
        std::error_code ec;
        for (const auto& [tmp, _] : pending_) std::filesystem::remove(tmp, ec);
        if (!committed_)
            for (const auto& p : renamed_) std::filesystem::remove(p, ec);
    }

    std::filesystem::path stage(const std::filesystem::path& final_path) {
        thread_local std::mt19937_64 gen{std::random_device{}()};
        auto tmp = final_path;
        tmp += ".tmp-" + std::to_string(gen() % 1000000000ULL);
        pending_.emplace_back(tmp, final_path);
        return tmp;
    }

    void commit() {
        for (const auto& [tmp, dst] : pending_) {
            std::filesystem::rename(tmp, dst);
            renamed_.push_back(dst);
        }
        pending_.clear();
        committed_ = true;
    }

private:
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pending_;
    std::vector<std::filesystem::path> renamed_;
    bool committed_ = false;
};

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << bytes;
    out.close();
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

/// File contents without one trailing newline.
inline std::string read_text_arg(const std::filesystem::path& path) {
    std::string s = text::read_text_file(path);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

/// Non-blank lines of a text file, one history entry each.
inline std::vector<std::string> read_entries(const std::filesystem::path& path) {
    std::vector<std::string> out;
    for (auto& line : dataset::read_lines(path)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(std::move(line));
    }
    if (out.empty()) throw InvalidArgument(path.string() + " has no entries");
    return out;
}

inline bool is_png(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png";
}

/// Optional per-sample inputs for eval: embeddings and a precomputed aesthetic score.
inline metrics::EvalAux load_aux(const std::filesystem::path& path) {
    nlohmann::json j;
    {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open " + path.string());
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(path.string() + " is not valid JSON: " + e.what());
        }
    }
    if (!j.is_object()) throw InvalidArgument(path.string() + ": expected a JSON object");
    metrics::EvalAux aux;
    for (const auto& [k, v] : j.items()) {
        try {
            if (k == "output") aux.output_embedding = v.get<std::vector<double>>();
            else if (k == "content") aux.content_embedding = v.get<std::vector<double>>();
            else if (k == "preference") aux.preference_embedding = v.get<std::vector<double>>();
            else if (k == "aes_score") aux.output_aesthetic = v.get<double>();
            else throw InvalidArgument(path.string() + ": unknown key '" + k + "'");
        } catch (const nlohmann::json::exception&) {
            throw InvalidArgument(path.string() + ": key '" + k + "' has the wrong type");
        }
    }
    return aux;
}

struct EvalJob {
    std::filesystem::path output, content, pref;
    std::optional<std::filesystem::path> embeddings, logprobs;
};

inline metrics::TopReport run_eval_job(const EvalJob& job, const RunConfig& cfg,
                                       const std::shared_ptr<const style::ConvBank>& bank) {
    const bool image = is_png(job.output);
    if (image != is_png(job.content))
        throw ModalityError("output " + job.output.string() + " and content " + job.content.string() +
                            " are of different kinds");
    metrics::EvalAux aux;
    if (job.embeddings) aux = load_aux(*job.embeddings);
    if (job.logprobs) aux.output_logprobs = text::load_logprobs(*job.logprobs);

    metrics::EvalContext ctx;
    ctx.bank = bank;
    ctx.loss = cfg.loss;
    ctx.tokenizer = cfg.tokenizer;
    ctx.ssim = cfg.ssim;

    if (image) {
        const Content o(io::read_png(job.output));
        const Content c(io::read_png(job.content));
        const auto pref = Preference::style_target(
            style::aggregate_style_target({io::read_png(job.pref)}, *bank, cfg.loss.bins));
        return metrics::build_report(o, c, pref, cfg.image_metrics, aux, ctx);
    }
    const Content o(read_text_arg(job.output));
    const Content c(read_text_arg(job.content));
    return metrics::build_report(o, c, Preference::text(read_text_arg(job.pref)), cfg.text_metrics, aux, ctx);
}

/// Manifest rows: {"output", "content", "pref", "embeddings"?, "logprobs"?},
/// paths relative to the manifest's directory.
inline std::vector<EvalJob> load_manifest(const std::filesystem::path& path) {
    const auto base = path.parent_path();
    std::vector<EvalJob> jobs;
    std::size_t line_no = 0;
    for (const auto& line : dataset::read_lines(path)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw InvalidArgument("expected a JSON object");
            EvalJob job;
            auto resolve = [&](const std::string& p) { return detail::resolve(base, p); };
            for (const auto& [k, v] : j.items()) {
                const auto s = v.get<std::string>();
                if (k == "output") job.output = resolve(s);
                else if (k == "content") job.content = resolve(s);
                else if (k == "pref") job.pref = resolve(s);
                else if (k == "embeddings") job.embeddings = resolve(s);
                else if (k == "logprobs") job.logprobs = resolve(s);
                else throw InvalidArgument("unknown key '" + k + "'");
            }
            if (job.output.empty() || job.content.empty() || job.pref.empty())
                throw InvalidArgument("'output', 'content' and 'pref' are required");
            jobs.push_back(std::move(job));
        } catch (const std::exception& e) {
            throw ParseError(line_no, path.string() + ": " + e.what());
        }
    }
    if (jobs.empty()) throw InvalidArgument(path.string() + " lists no samples");
    return jobs;
}

/// Scores jobs on up to `workers` threads; results keep input order and the
/// first failure (by position) is rethrown.
inline std::vector<metrics::TopReport> run_eval_batch(const std::vector<EvalJob>& jobs, const RunConfig& cfg,
                                                      const std::shared_ptr<const style::ConvBank>& bank,
                                                      std::size_t workers) {
    std::vector<metrics::TopReport> reports(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                reports[i] = run_eval_job(jobs[i], cfg, bank);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, jobs.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

inline nlohmann::ordered_json breakdown_json(const style::TransferResult& r) {
    nlohmann::ordered_json j;
    j["content"] = r.breakdown.content;
    j["style"] = r.breakdown.style;
    j["histogram"] = r.breakdown.histogram;
    j["total"] = r.breakdown.total;
    j["style_layers"] = r.breakdown.style_layers;
    j["iterations"] = r.iterations;
    j["initial_objective"] = r.losses.front();
    j["final_objective"] = r.losses.back();
    return j;
}

class App {
public:
    App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& args) {
        CLI::App app{"Audience-targeted paraphrase of text and images", "top"};
        app.require_subcommand(1);
        std::function<void()> action;
        add_extract_pref(app, action);
        add_paraphrase_text(app, action);
        add_style_transfer(app, action);
        add_eval(app, action);
        add_dataset(app, action);

        std::vector<const char*> argv = {"top"};
        for (const auto& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            return app.exit(e, out_, err_) == 0 ? kOk : kUsage;
        }
        try {
            action();
            return kOk;
        } catch (const std::exception& e) {
            err_ << "top: error: " << describe(e) << '\n';
            return exit_code_for(e);
        }
    }

private:
    struct Common {
        std::string config;
        std::optional<std::uint64_t> seed;
    };

    static void add_common(CLI::App* sub, Common& c, bool config) {
        if (config) sub->add_option("--config", c.config, "Run configuration (JSON)")->required();
        sub->add_option("--seed", c.seed, "Seed for the convolution bank, optimizer and retry jitter");
    }

    RunConfig load(const Common& c) const {
        RunConfig cfg = load_config(c.config);
        if (c.seed) cfg.set_seed(*c.seed);
        return cfg;
    }

    void log(const std::string& msg) const { err_ << "top: " << msg << '\n'; }

    void add_extract_pref(CLI::App& app, std::function<void()>& action) {
        auto* sub = app.add_subcommand("extract-pref", "Summarize a text history into a preference");
        auto common = std::make_shared<Common>();
        auto history = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--history", *history, "History file, one entry per line")->required();
        sub->add_option("--out", *out, "Preference text output")->required();
        add_common(sub, *common, true);
        sub->callback([this, &action, common, history, out] {
            action = [this, common, history, out] {
                const RunConfig cfg = load(*common);
                UserHistory h;
                for (auto& e : read_entries(*history)) h.items.emplace_back(std::move(e));
                log("extract-pref: " + std::to_string(h.items.size()) + " history entries");
                StageRegistry reg;
                register_text_stages(reg, std::make_shared<text::ChatClient>(cfg.endpoint, nullptr, nullptr, cfg.seed),
                                     cfg.templates);
                const auto pref = reg.extractor(Modality::text).fn(h);
                OutputFiles files;
                write_file(files.stage(*out), pref.as_text());
                files.commit();
                log("wrote " + *out);
            };
        });
    }

    void add_paraphrase_text(CLI::App& app, std::function<void()>& action) {
        auto* sub = app.add_subcommand("paraphrase-text", "Rewrite a text for a preference");
        auto common = std::make_shared<Common>();
        auto content = std::make_shared<std::string>();
        auto pref = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--content", *content, "Content text file")->required();
        sub->add_option("--pref", *pref, "Preference text file")->required();
        sub->add_option("--out", *out, "Paraphrase output")->required();
        add_common(sub, *common, true);
        sub->callback([this, &action, common, content, pref, out] {
            action = [this, common, content, pref, out] {
                const RunConfig cfg = load(*common);
                const ContentInput c(read_text_arg(*content));
                const auto p = Preference::text(read_text_arg(*pref));
                StageRegistry reg;
                register_text_stages(reg, std::make_shared<text::ChatClient>(cfg.endpoint, nullptr, nullptr, cfg.seed),
                                     cfg.templates);
                log("paraphrase-text: " + *content);
                const auto o = reg.generator(Modality::text).fn(c, p);
                OutputFiles files;
                write_file(files.stage(*out), o.text());
                files.commit();
                log("wrote " + *out);
            };
        });
    }

    void add_style_transfer(CLI::App& app, std::function<void()>& action) {
        auto* sub = app.add_subcommand("style-transfer", "Restyle an image towards a history of images");
        auto common = std::make_shared<Common>();
        auto content = std::make_shared<std::string>();
        auto history = std::make_shared<std::vector<std::string>>();
        auto out = std::make_shared<std::string>();
        auto montage_path = std::make_shared<std::string>();
        sub->add_option("--content", *content, "Content PNG")->required();
        sub->add_option("--history", *history, "History PNGs")->required()->expected(1, -1);
        sub->add_option("--out", *out, "Stylized PNG output")->required();
        sub->add_option("--montage", *montage_path, "Optional content | history | output strip");
        add_common(sub, *common, true);
        sub->callback([this, &action, common, content, history, out, montage_path] {
            action = [this, common, content, history, out, montage_path] {
                const RunConfig cfg = load(*common);
                const auto c = io::read_png(*content);
                std::vector<ImageTensor> h;
                for (const auto& p : *history) h.push_back(io::read_png(p));
                const style::ConvBank bank(cfg.bank);
                log("style-transfer: " + std::to_string(c.width()) + "x" + std::to_string(c.height()) + ", " +
                    std::to_string(h.size()) + " history images");
                const auto result = style::transfer(c, h, bank, cfg.loss);
                log("style-transfer: " + std::to_string(result.iterations) + " iterations");
                OutputFiles files;
                io::write_png(files.stage(*out), result.image);
                if (!montage_path->empty()) io::write_png(files.stage(*montage_path), io::montage(c, h, result.image));
                files.commit();
                out_ << breakdown_json(result).dump(2) << '\n';
            };
        });
    }

    void add_eval(CLI::App& app, std::function<void()>& action) {
        auto* sub = app.add_subcommand("eval", "Score an output against its content and preference");
        auto common = std::make_shared<Common>();
        auto job = std::make_shared<EvalJob>();
        auto embeddings = std::make_shared<std::string>();
        auto logprobs = std::make_shared<std::string>();
        auto manifest = std::make_shared<std::string>();
        auto jobs = std::make_shared<std::size_t>(std::max(1u, std::thread::hardware_concurrency()));
        auto* o = sub->add_option("--output", job->output, "Output text file or PNG");
        auto* c = sub->add_option("--content", job->content, "Content text file or PNG");
        auto* p = sub->add_option("--pref", job->pref, "Preference text file, or a style PNG for images");
        sub->add_option("--embeddings", *embeddings, "JSON with output/content/preference embeddings and aes_score");
        sub->add_option("--logprobs", *logprobs, "Output token logprobs (JSON)");
        auto* m = sub->add_option("--manifest", *manifest, "JSON-lines batch of samples")->excludes(o, c, p);
        sub->add_option("--jobs", *jobs, "Batch worker threads")->check(CLI::PositiveNumber);
        add_common(sub, *common, true);
        sub->callback([this, &action, common, job, embeddings, logprobs, manifest, jobs, o, c, p, m] {
            if (m->count() == 0 && (o->count() == 0 || c->count() == 0 || p->count() == 0))
                throw CLI::RequiredError("--output, --content and --pref (or --manifest)");
            action = [this, common, job, embeddings, logprobs, manifest, jobs] {
                const RunConfig cfg = load(*common);
                auto bank = std::make_shared<const style::ConvBank>(cfg.bank);
                if (manifest->empty()) {
                    EvalJob j = *job;
                    if (!embeddings->empty()) j.embeddings = *embeddings;
                    if (!logprobs->empty()) j.logprobs = *logprobs;
                    out_ << run_eval_job(j, cfg, bank).to_json().dump(2) << '\n';
                    return;
                }
                const auto batch = load_manifest(*manifest);
                log("eval: " + std::to_string(batch.size()) + " samples on " + std::to_string(*jobs) + " workers");
                const auto reports = run_eval_batch(batch, cfg, bank, *jobs);
                nlohmann::json j;
                j["reports"] = nlohmann::json::array();
                for (const auto& r : reports) j["reports"].push_back(r.to_json());
                j["mean"] = metrics::mean_report(reports).to_json();
                out_ << j.dump(2) << '\n';
            };
        });
    }

    void add_dataset(CLI::App& app, std::function<void()>& action) {
        auto* ds = app.add_subcommand("dataset", "Dataset maintenance");
        ds->require_subcommand(1);

        {
            auto* sub = ds->add_subcommand("anonymize", "Replace userids by AES tokens (key in TOP_AES_KEY)");
            auto common = std::make_shared<Common>();
            auto in = std::make_shared<std::string>();
            auto out = std::make_shared<std::string>();
            sub->add_option("--in", *in, "JSON-lines input")->required();
            sub->add_option("--out", *out, "JSON-lines output")->required();
            add_common(sub, *common, false);
            sub->callback([this, &action, in, out] {
                action = [this, in, out] {
                    const auto key = dataset::key_from_env();
                    const auto text = text::read_text_file(*in);
                    OutputFiles files;
                    write_file(files.stage(*out), dataset::anonymize_jsonl(text, key));
                    files.commit();
                    log("anonymized " + *in + " -> " + *out);
                };
            });
        }
        {
            auto* sub = ds->add_subcommand("filter", "Keep image rows whose aesthetic score exceeds a threshold");
            auto common = std::make_shared<Common>();
            auto in = std::make_shared<std::string>();
            auto out = std::make_shared<std::string>();
            auto threshold = std::make_shared<double>(dataset::kAestheticThreshold);
            sub->add_option("--in", *in, "Image records (JSON lines)")->required();
            sub->add_option("--out", *out, "Filtered records")->required();
            sub->add_option("--threshold", *threshold, "Strict lower bound on aes_score")->capture_default_str();
            add_common(sub, *common, false);
            sub->callback([this, &action, in, out, threshold] {
                action = [this, in, out, threshold] {
                    const auto rows = dataset::load_records_or_throw<dataset::ImageRecord>(*in);
                    const auto kept = dataset::filter_by_aesthetic(rows, *threshold);
                    OutputFiles files;
                    dataset::write_records(files.stage(*out), kept);
                    files.commit();
                    log("kept " + std::to_string(kept.size()) + " of " + std::to_string(rows.size()) + " rows");
                    out_ << nlohmann::json{{"input", rows.size()}, {"kept", kept.size()}}.dump() << '\n';
                };
            });
        }
        {
            auto* sub = ds->add_subcommand("crossmatch", "Pair every preference with every content item");
            auto common = std::make_shared<Common>();
            auto prefs = std::make_shared<std::string>();
            auto contents = std::make_shared<std::string>();
            auto out = std::make_shared<std::string>();
            sub->add_option("--prefs", *prefs, "Preferences, one per line")->required();
            sub->add_option("--contents", *contents, "JSON lines with piecename and intro")->required();
            sub->add_option("--out", *out, "Paraphrase records")->required();
            add_common(sub, *common, false);
            sub->callback([this, &action, prefs, contents, out] {
                action = [this, prefs, contents, out] {
                    const auto rows = dataset::crossmatch(read_entries(*prefs), load_pieces(*contents));
                    OutputFiles files;
                    dataset::write_records(files.stage(*out), rows);
                    files.commit();
                    log("wrote " + std::to_string(rows.size()) + " rows to " + *out);
                };
            });
        }
        {
            auto* sub = ds->add_subcommand("stats", "Count texts, images and users");
            auto common = std::make_shared<Common>();
            auto comments = std::make_shared<std::string>();
            auto paraphrases = std::make_shared<std::string>();
            auto images = std::make_shared<std::string>();
            auto json = std::make_shared<bool>(false);
            auto* a = sub->add_option("--comments", *comments, "Comment records");
            auto* b = sub->add_option("--paraphrases", *paraphrases, "Paraphrase records");
            auto* c = sub->add_option("--images", *images, "Image records");
            sub->add_flag("--json", *json, "Print JSON instead of a table");
            add_common(sub, *common, false);
            sub->callback([this, &action, comments, paraphrases, images, json, a, b, c] {
                if (a->count() + b->count() + c->count() == 0)
                    throw CLI::RequiredError("one of --comments, --paraphrases, --images");
                action = [this, comments, paraphrases, images, json] {
                    dataset::Manifest m;
                    if (!comments->empty()) m.comments = dataset::load_records_or_throw<dataset::CommentRecord>(*comments);
                    if (!paraphrases->empty())
                        m.paraphrases = dataset::load_records_or_throw<dataset::ParaphraseRecord>(*paraphrases);
                    if (!images->empty()) m.images = dataset::load_records_or_throw<dataset::ImageRecord>(*images);
                    const auto s = dataset::dataset_stats(m);
                    if (*json) out_ << s.to_json().dump(2) << '\n';
                    else out_ << s.to_table();
                };
            });
        }
        {
            auto* sub = ds->add_subcommand("validate", "Check a JSON-lines file against its record schema");
            auto common = std::make_shared<Common>();
            auto kind = std::make_shared<std::string>();
            auto in = std::make_shared<std::string>();
            auto base = std::make_shared<std::string>();
            auto require_output = std::make_shared<bool>(false);
            sub->add_option("--kind", *kind, "Record kind")->required()->check(
                CLI::IsMember({"comment", "paraphrase", "image"}));
            sub->add_option("--in", *in, "JSON-lines input")->required();
            sub->add_option("--base-dir", *base, "Directory image paths are relative to (default: the file's)");
            sub->add_flag("--require-output", *require_output, "Paraphrase rows must have an output");
            add_common(sub, *common, false);
            sub->callback([this, &action, kind, in, base, require_output] {
                action = [this, kind, in, base, require_output] {
                    dataset::ValidationOptions opt;
                    opt.require_output = *require_output;
                    opt.base_dir = base->empty() ? std::filesystem::path(*in).parent_path() : std::filesystem::path(*base);
                    if (opt.base_dir.empty()) opt.base_dir = ".";
                    std::vector<dataset::RecordIssue> issues;
                    std::size_t count = 0;
                    auto check = [&]<typename T>(T*) {
                        issues = dataset::validate_file<T>(*in, opt);
                        count = dataset::load_records<T>(*in).records.size();
                    };
                    if (*kind == "comment") check(static_cast<dataset::CommentRecord*>(nullptr));
                    else if (*kind == "paraphrase") check(static_cast<dataset::ParaphraseRecord*>(nullptr));
                    else check(static_cast<dataset::ImageRecord*>(nullptr));
                    for (const auto& i : issues) err_ << *in << ": " << i.to_string() << '\n';
                    out_ << nlohmann::json{{"file", *in}, {"records", count}, {"issues", issues.size()}}.dump() << '\n';
                    if (!issues.empty())
                        throw ParseError(issues.front().line, std::to_string(issues.size()) + " issue(s) in " + *in);
                };
            });
        }
    }

    static std::vector<dataset::PieceIntro> load_pieces(const std::filesystem::path& path) {
        std::vector<dataset::PieceIntro> out;
        std::size_t line_no = 0;
        for (const auto& line : dataset::read_lines(path)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                out.push_back({j.at("piecename").get<std::string>(), j.at("intro").get<std::string>()});
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(line_no, path.string() + ": " + e.what());
            }
        }
        return out;
    }

    std::ostream& out_;
    std::ostream& err_;
};

/// Runs the command line with `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return App(out, err).run(args);
}

} // namespace top::cli
