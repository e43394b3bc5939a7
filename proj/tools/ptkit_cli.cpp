// SPDX-License-Identifier: Apache-2.0
// ptkit command-line front end. Talks to the library only through ptkit.h.

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptkit/ptkit.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure : std::runtime_error {
    Failure(std::string status, const std::string& msg, long line = 0)
        : std::runtime_error(msg), status(std::move(status)), line(line) {}
    std::string status;
    long line;
};

void check(ptk_status s) {
    if (s != PTK_OK) throw Failure(ptk_status_name(s), ptk_last_error_message(), ptk_last_error_line());
}

struct Owned {
    char* p = nullptr;
    ~Owned() { ptk_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw Failure("internal", "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure("io", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Temp file in the destination directory, then rename.
void write_atomic(const std::string& path, const std::string& data) {
    const fs::path dst(path);
    fs::path tmp = dst;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Failure("io", "cannot write '" + tmp.string() + "'");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Failure("io", "short write to '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, dst, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Failure("io", "cannot rename onto '" + path + "'");
    }
}

// -- run context -----------------------------------------------------------------

struct Run {
    std::string subcommand;
    std::uint64_t seed = 0;
    unsigned shards = 1;
    std::string report_path;
    std::string manifest_path;
    std::string out_path;

    std::map<std::string, std::string> inputs;  // path -> digest
    std::string config_text;                     // every config file, concatenated
    std::vector<std::pair<std::string, std::string>> options;
    std::map<std::string, std::string> outputs;  // label -> digest

    std::string input(const std::string& path) {
        auto text = read_file(path);
        inputs[path] = sha256_hex(text);
        return text;
    }
    std::string config(const std::string& path) {
        auto text = read_file(path);
        inputs[path] = sha256_hex(text);
        config_text += path + "\n" + text + "\n";
        return text;
    }
    void option(const std::string& k, const std::string& v) { options.emplace_back(k, v); }

    void write(const std::string& label, const std::string& path, const std::string& data) {
        outputs[label] = sha256_hex(data);
        if (path.empty() || path == "-")
            std::cout << data << std::flush;
        else
            write_atomic(path, data);
    }
    void output(const std::string& data) { write("out", out_path, data); }
    void report(const json& r) {
        if (!report_path.empty()) write("report", report_path, r.dump(2) + "\n");
    }

    json manifest() const {
        std::string cfg = config_text;
        for (const auto& [k, v] : options) cfg += k + "=" + v + "\n";
        json in = json::object();
        for (const auto& [p, d] : inputs) in[p] = d;
        json out = json::object();
        for (const auto& [l, d] : outputs) out[l] = d;
        return {{"subcommand", subcommand},
                {"config_digest", sha256_hex(cfg)},
                {"seed", seed},
                {"input_digests", in},
                {"output_digests", out},
                {"tool_version", std::string("ptkit ") + ptk_version()}};
    }
};

// -- sharding ----------------------------------------------------------------------

struct JsonlShard {
    std::string text;
    long line_offset = 0;
    std::size_t index_offset = 0;
};

bool blank(std::string_view line) { return line.find_first_not_of(" \t\r") == std::string_view::npos; }

std::vector<std::string_view> split_lines(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        lines.push_back(rest.substr(0, nl));
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    }
    return lines;
}

// Contiguous record ranges; blank lines ride along so line numbers stay exact.
std::vector<JsonlShard> shard_jsonl(const std::string& text, unsigned k) {
    const auto lines = split_lines(text);
    std::vector<std::size_t> records;
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (!blank(lines[i])) records.push_back(i);
    k = std::max<unsigned>(1, std::min<std::size_t>(k, std::max<std::size_t>(records.size(), 1)));
    std::vector<JsonlShard> shards;
    for (unsigned s = 0; s < k; ++s) {
        const std::size_t r0 = records.size() * s / k, r1 = records.size() * (s + 1) / k;
        const std::size_t l0 = s == 0 ? 0 : records[r0];
        const std::size_t l1 = s + 1 == k ? lines.size() : records[r1];
        JsonlShard sh;
        sh.line_offset = static_cast<long>(l0);
        sh.index_offset = r0;
        for (std::size_t l = l0; l < l1; ++l) {
            sh.text += lines[l];
            sh.text += '\n';
        }
        shards.push_back(std::move(sh));
    }
    return shards;
}

// Keeps the lines whose key falls in `keep`; the others are blanked so that
// line numbers are unchanged.
std::string mask_lines(const std::vector<std::string_view>& lines, const std::vector<std::string>& keys,
                       const std::function<bool(const std::string&)>& keep) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!keys[i].empty() && keep(keys[i])) out += lines[i];
        out += '\n';
    }
    return out;
}

std::string key_of(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) return {};
    return it->is_string() ? it->get<std::string>() : it->dump();
}

// Reads `field` from every line (empty when absent). Malformed lines fail
// here, with their line number.
std::vector<std::string> line_keys(const std::vector<std::string_view>& lines, const char* field, bool& all_tagged) {
    std::vector<std::string> keys(lines.size());
    all_tagged = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (blank(lines[i])) continue;
        try {
            keys[i] = key_of(json::parse(lines[i]), field);
        } catch (const json::exception& e) {
            throw Failure("parse", "line " + std::to_string(i + 1) + ": malformed JSON: " + e.what(),
                          static_cast<long>(i + 1));
        }
        if (keys[i].empty()) all_tagged = false;
    }
    return keys;
}

template <class Fn>
void parallel(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n; ++i)
        threads.emplace_back([&, i] {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);  // first shard in order wins
}

// Runs fn on each shard and returns (concatenated output, merged report).
struct ShardResult {
    std::string out;
    std::string report;
};

ShardResult run_shards(std::size_t n, const std::function<ShardResult(std::size_t)>& fn) {
    std::vector<ShardResult> parts(n);
    parallel(n, [&](std::size_t i) { parts[i] = fn(i); });
    ShardResult merged = parts.front();
    for (std::size_t i = 1; i < n; ++i) {
        merged.out += parts[i].out;
        Owned m;
        check(ptk_report_merge(merged.report.c_str(), parts[i].report.c_str(), &m.p));
        merged.report = m.str();
    }
    return merged;
}

// -- subcommands -------------------------------------------------------------------------

struct Options {
    std::string in, group, verdicts, config, rules, rollouts, profiles, pattern, dims, mode = "auto", policy = "selective",
                                                                                    steps = "0..99";
    double strip_frac = 0.10, trunc_frac = 0.03;
    std::vector<std::size_t> budgets;
    std::vector<double> tokens;
    std::size_t pairs_per_prompt = 1;
    std::size_t experts = 128, topk = 6, router_steps = 2000, tokens_per_step = 512, window = 50;
    double update_rate = 1e-3, skew = 1.0, noise = 1.0, target_ratio = 1.2;
    bool no_trajectories = false;
};

void cmd_render(Run& run, const Options& o) {
    const auto text = run.input(o.in);
    run.option("mode", o.mode);
    const char* mode = o.mode == "auto" ? nullptr : o.mode.c_str();
    const auto shards = shard_jsonl(text, run.shards);
    std::vector<std::string> outs(shards.size());
    parallel(shards.size(), [&](std::size_t i) {
        Owned out;
        check(ptk_render_jsonl(shards[i].text.c_str(), mode, shards[i].line_offset, &out.p));
        outs[i] = out.str();
    });
    std::string all;
    std::size_t n = 0;
    for (auto& s : outs) {
        all += s;
        n += static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }
    run.output(all);
    run.report({{"records", n}, {"mode", o.mode}});
}

void cmd_sft_prep(Run& run, const Options& o) {
    const auto text = run.input(o.in);
    run.option("strip_frac", std::to_string(o.strip_frac));
    run.option("trunc_frac", std::to_string(o.trunc_frac));
    std::string b;
    for (auto x : o.budgets) b += std::to_string(x) + ",";
    run.option("budgets", b);
    const auto shards = shard_jsonl(text, run.shards);
    auto r = run_shards(shards.size(), [&](std::size_t i) {
        ptk_sft_options opts;
        ptk_sft_options_default(&opts);
        opts.strip_fraction = o.strip_frac;
        opts.trunc_fraction = o.trunc_frac;
        opts.seed = run.seed;
        if (!o.budgets.empty()) {
            opts.budgets = o.budgets.data();
            opts.n_budgets = o.budgets.size();
        }
        opts.index_offset = shards[i].index_offset;
        opts.line_offset = shards[i].line_offset;
        Owned out, rep;
        check(ptk_sft_prep_jsonl(shards[i].text.c_str(), &opts, &out.p, &rep.p));
        return ShardResult{out.str(), rep.str()};
    });
    run.output(r.out);
    json rep = json::parse(r.report);
    const double n = std::max<double>(1.0, rep["input_count"].get<double>());
    rep["stripped_fraction"] = rep["stripped"].get<double>() / n;
    rep["truncated_fraction"] = rep["truncated"].get<double>() / n;
    run.report(rep);
}

void cmd_score_group(Run& run, const Options& o) {
    const auto groups = run.input(o.group);
    const auto verdicts = run.input(o.verdicts);
    std::string cfg_text;
    if (!o.config.empty()) cfg_text = run.config(o.config);
    const char* cfg = o.config.empty() ? nullptr : cfg_text.c_str();

    const auto vlines = split_lines(verdicts);
    bool tagged = true;
    const auto vkeys = line_keys(vlines, "prompt_id", tagged);
    const auto shards = shard_jsonl(groups, tagged ? run.shards : 1);

    auto r = run_shards(shards.size(), [&](std::size_t i) {
        std::string vtext = verdicts;
        if (shards.size() > 1) {
            // Each shard sees only the verdicts of its own prompts.
            bool unused = true;
            const auto glines = split_lines(shards[i].text);
            const auto gkeys = line_keys(glines, "prompt_id", unused);
            std::vector<std::string> mine(gkeys.begin(), gkeys.end());
            std::sort(mine.begin(), mine.end());
            vtext = mask_lines(vlines, vkeys,
                               [&](const std::string& k) { return std::binary_search(mine.begin(), mine.end(), k); });
        }
        Owned out, rep;
        check(ptk_score_groups_jsonl(shards[i].text.c_str(), vtext.c_str(), cfg, shards[i].line_offset, &out.p, &rep.p));
        return ShardResult{out.str(), rep.str()};
    });
    if (shards.size() > 1) {
        // Verdicts for prompts that no shard owns are still an error.
        bool unused = true;
        auto gkeys = line_keys(split_lines(groups), "prompt_id", unused);
        std::sort(gkeys.begin(), gkeys.end());
        for (std::size_t i = 0; i < vkeys.size(); ++i)
            if (!vkeys[i].empty() && !std::binary_search(gkeys.begin(), gkeys.end(), vkeys[i]))
                throw Failure("coverage", "verdicts reference unknown prompt '" + vkeys[i] + "'");
    }
    run.output(r.out);
    run.report(json::parse(r.report));
}

std::pair<std::size_t, std::size_t> parse_steps(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const auto v = std::stoull(s);
            return {v, v};
        }
        return {std::stoull(s.substr(0, dots)), std::stoull(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw Failure("invalid_argument", "--steps expects A..B, got '" + s + "'");
    }
}

void cmd_curriculum(Run& run, const Options& o) {
    const auto profiles = run.input(o.profiles);
    const auto cfg = run.config(o.config);
    const auto [a, b] = parse_steps(o.steps);
    if (b < a) throw Failure("invalid_argument", "--steps range is empty");
    run.option("steps", o.steps);
    ptk_curriculum* raw = nullptr;
    check(ptk_curriculum_create(profiles.c_str(), cfg.c_str(), &run.seed, &raw));
    std::unique_ptr<ptk_curriculum, void (*)(ptk_curriculum*)> cur(raw, ptk_curriculum_destroy);

    const std::size_t n = b - a + 1;
    std::vector<std::string> lines(n);
    const std::size_t k = std::min<std::size_t>(std::max(1u, run.shards), n);
    parallel(k, [&](std::size_t s) {
        for (std::size_t i = n * s / k; i < n * (s + 1) / k; ++i) {
            Owned plan;
            check(ptk_curriculum_plan_json(cur.get(), a + i, &plan.p));
            lines[i] = plan.str() + "\n";
        }
    });
    std::string out;
    json means = json::array(), targets = json::array();
    for (const auto& l : lines) {
        out += l;
        const auto j = json::parse(l);
        means.push_back(j["mean_pass_rate"]);
        targets.push_back(j["target_mean"]);
    }
    run.output(out);
    run.report({{"first_step", a}, {"last_step", b}, {"target_mean", targets}, {"batch_mean_pass_rate", means}});
}

void cmd_lr(Run& run, const Options& o) {
    ptk_wsd_config cfg;
    ptk_wsd_config_default(&cfg);
    if (!o.config.empty()) check(ptk_wsd_config_parse(run.config(o.config).c_str(), &cfg));
    std::string out;
    json lrs = json::array();
    for (double t : o.tokens) {
        double lr = 0;
        check(ptk_wsd_lr(&cfg, t, &lr));
        out += json({{"tokens", t}, {"lr", lr}}).dump() + "\n";
        lrs.push_back(lr);
        run.option("tokens", json(t).dump());
    }
    run.output(out);
    run.report({{"tokens", o.tokens}, {"lr", lrs}, {"warmup_end", cfg.warmup_tokens},
                {"stable_end", cfg.stable_fraction * cfg.total_tokens}, {"total_tokens", cfg.total_tokens}});
}

void cmd_filter(Run& run, const Options& o) {
    const auto text = run.input(o.in);
    std::string rules;
    if (!o.rules.empty()) rules = run.config(o.rules);
    const auto shards = shard_jsonl(text, run.shards);
    auto r = run_shards(shards.size(), [&](std::size_t i) {
        Owned out, rep;
        check(ptk_filter_jsonl(shards[i].text.c_str(), o.rules.empty() ? nullptr : rules.c_str(),
                               shards[i].index_offset, shards[i].line_offset, &out.p, &rep.p));
        return ShardResult{out.str(), rep.str()};
    });
    run.output(r.out);
    run.report(json::parse(r.report));
}

void cmd_label_dpo(Run& run, const Options& o) {
    const auto text = run.input(o.rollouts);
    run.option("pairs_per_prompt", std::to_string(o.pairs_per_prompt));
    const auto lines = split_lines(text);
    bool tagged = true;
    const auto keys = line_keys(lines, "prompt_id", tagged);
    // Whole prompts go to one shard, in order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::size_t> rank;
    for (const auto& k : keys)
        if (!k.empty() && rank.emplace(k, order.size()).second) order.push_back(k);
    const std::size_t k = tagged ? std::max<std::size_t>(1, std::min<std::size_t>(run.shards, order.size())) : 1;

    auto r = run_shards(k, [&](std::size_t s) {
        const std::size_t p0 = order.size() * s / k, p1 = order.size() * (s + 1) / k;
        const std::string shard = k == 1 ? text : mask_lines(lines, keys, [&](const std::string& key) {
            const auto rk = rank.at(key);
            return rk >= p0 && rk < p1;
        });
        Owned out, rep;
        check(ptk_label_dpo_jsonl(shard.c_str(), run.seed, o.pairs_per_prompt, 0, &out.p, &rep.p));
        return ShardResult{out.str(), rep.str()};
    });
    run.output(r.out);
    run.report(json::parse(r.report));
}

void cmd_simulate(Run& run, const Options& o) {
    ptk_simulation_options opts;
    ptk_simulation_options_default(&opts);
    opts.router.n_experts = o.experts;
    opts.router.top_k = o.topk;
    opts.router.bias_update_rate = o.update_rate;
    opts.steps = o.router_steps;
    opts.tokens_per_step = o.tokens_per_step;
    opts.seed = run.seed;
    opts.skew = o.skew;
    opts.noise = o.noise;
    opts.window = o.window;
    opts.target_ratio = o.target_ratio;
    opts.include_trajectories = o.no_trajectories ? 0 : 1;
    for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
             {"experts", std::to_string(o.experts)},
             {"topk", std::to_string(o.topk)},
             {"steps", std::to_string(o.router_steps)},
             {"tokens_per_step", std::to_string(o.tokens_per_step)},
             {"update_rate", json(o.update_rate).dump()},
             {"skew", json(o.skew).dump()},
             {"noise", json(o.noise).dump()},
             {"window", std::to_string(o.window)},
             {"target_ratio", json(o.target_ratio).dump()}})
        run.option(k, v);
    Owned out;
    check(ptk_simulate_router_json(&opts, &out.p));
    const auto full = json::parse(out.p);
    // The report carries the full trace; the output is a one-line summary.
    json summary = json::object();
    for (const auto& [k, v] : full.items())
        if (!v.is_array()) summary[k] = v;
    run.output(summary.dump() + "\n");
    run.report(full);
}

void cmd_plan_quant(Run& run, const Options& o) {
    const auto pattern = run.input(o.pattern);
    std::string dims;
    if (!o.dims.empty()) dims = run.config(o.dims);
    run.option("policy", o.policy);
    Owned out;
    check(ptk_plan_quant_json(pattern.c_str(), o.policy.c_str(), o.dims.empty() ? nullptr : dims.c_str(), &out.p));
    const auto j = json::parse(out.p);
    run.output(j.dump(2) + "\n");
    run.report({{"policy", j["policy"]},
                {"summary", j["summary"]},
                {"kv_cache", j["kv_cache"]},
                {"conv1d", j["conv1d"]},
                {"memory", j["memory"]},
                {"warnings", j["warnings"]}});
}

void cmd_prompt_sensitivity(Run& run, const Options& o) {
    const auto text = run.input(o.in);
    Owned out;
    check(ptk_prompt_sensitivity_jsonl(text.c_str(), &out.p));
    const auto j = json::parse(out.p);
    run.output(j.dump() + "\n");
    run.report(j);
}

void emit_error(const std::string& subcommand, const std::string& status, const std::string& message, long line) {
    json err = {{"subcommand", subcommand}, {"status", status}, {"message", message}};
    if (line > 0) err["line"] = line;
    std::cerr << json({{"error", err}}).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ptkit: post-training data and reward tooling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("ptkit ") + ptk_version());

    Run run;
    Options o;

    const auto common = [&](CLI::App* sc, bool has_out = true) {
        sc->add_option("--seed", run.seed, "seed for every random decision");
        sc->add_option("--shards", run.shards, "worker count; output does not depend on it")->check(CLI::Range(1u, 256u));
        sc->add_option("--report", run.report_path, "write JSON metrics here");
        sc->add_option("--manifest", run.manifest_path, "write the run manifest here instead of stderr");
        if (has_out) sc->add_option("--out", run.out_path, "output path (stdout when omitted)");
    };

    std::map<CLI::App*, std::function<void()>> handlers;
    auto add = [&](const char* name, const char* help, std::function<void()> fn) {
        auto* sc = app.add_subcommand(name, help);
        handlers[sc] = std::move(fn);
        return sc;
    };

    auto* render = add("render-template", "render conversations to prompt text", [&] { cmd_render(run, o); });
    render->add_option("--in", o.in, "conversation JSONL")->required();
    render->add_option("--mode", o.mode, "reasoning mode override")->check(CLI::IsMember({"on", "off", "auto"}));
    common(render);

    auto* sft = add("sft-prep", "reasoning stripping and budget truncation", [&] { cmd_sft_prep(run, o); });
    sft->add_option("--in", o.in, "conversation JSONL")->required();
    sft->add_option("--strip-frac", o.strip_frac)->check(CLI::Range(0.0, 1.0));
    sft->add_option("--trunc-frac", o.trunc_frac)->check(CLI::Range(0.0, 1.0));
    sft->add_option("--budgets", o.budgets, "token budgets")->delimiter(',');
    common(sft);

    auto* score = add("score-group", "GenRM group scoring with length control", [&] { cmd_score_group(run, o); });
    score->add_option("--group", o.group, "response group JSONL")->required();
    score->add_option("--verdicts", o.verdicts, "pairwise verdict JSONL")->required();
    score->add_option("--config", o.config, "reward config");
    common(score);

    auto* cur = add("schedule-curriculum", "per-step curriculum batches", [&] { cmd_curriculum(run, o); });
    cur->add_option("--profiles", o.profiles, "task profile JSONL")->required();
    cur->add_option("--config", o.config, "curriculum config")->required();
    cur->add_option("--steps", o.steps, "inclusive range A..B");
    common(cur);

    auto* lr = add("lr", "warmup-stable-decay learning rate", [&] { cmd_lr(run, o); });
    lr->add_option("--tokens", o.tokens, "tokens seen")->required()->delimiter(',');
    lr->add_option("--config", o.config, "schedule config");
    common(lr);

    auto* filt = add("filter-data", "structural, repetition and alignment filters", [&] { cmd_filter(run, o); });
    filt->add_option("--in", o.in, "conversation JSONL")->required();
    filt->add_option("--rules", o.rules, "rules file");
    common(filt);

    auto* dpo = add("label-dpo", "build DPO preference pairs", [&] { cmd_label_dpo(run, o); });
    dpo->add_option("--rollouts", o.rollouts, "rollout JSONL")->required();
    dpo->add_option("--pairs-per-prompt", o.pairs_per_prompt)->check(CLI::PositiveNumber);
    common(dpo);

    auto* sim = add("simulate-router", "expert-bias balancing simulation", [&] { cmd_simulate(run, o); });
    sim->add_option("--experts", o.experts);
    sim->add_option("--topk", o.topk);
    sim->add_option("--steps", o.router_steps);
    sim->add_option("--tokens-per-step", o.tokens_per_step);
    sim->add_option("--update-rate", o.update_rate);
    sim->add_option("--skew", o.skew);
    sim->add_option("--noise", o.noise);
    sim->add_option("--window", o.window);
    sim->add_option("--target-ratio", o.target_ratio);
    sim->add_flag("--no-trajectories", o.no_trajectories, "omit per-step histograms and bias");
    common(sim);

    auto* pq = add("plan-quant", "selective mixed-precision plan", [&] { cmd_plan_quant(run, o); });
    pq->add_option("--pattern", o.pattern, "one layer kind per line")->required();
    pq->add_option("--policy", o.policy);
    pq->add_option("--dims", o.dims, "model dimension config");
    common(pq);

    auto* ps = add("prompt-sensitivity", "std of per-variant mean accuracy", [&] { cmd_prompt_sensitivity(run, o); });
    ps->add_option("--in", o.in, "variant score JSONL")->required();
    common(ps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        if (argc > 1 && argv[1][0] != '-') {
            const auto subs = app.get_subcommands([&](CLI::App* sc) { return sc->get_name() == argv[1]; });
            if (subs.empty()) msg = std::string("unknown subcommand '") + argv[1] + "'";
        }
        emit_error(argc > 1 ? argv[1] : "", "usage", msg, 0);
        std::cerr << app.help();
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    run.subcommand = chosen->get_name();
    try {
        handlers.at(chosen)();
        const auto manifest = run.manifest().dump(2) + "\n";
        if (run.manifest_path.empty())
            std::cerr << manifest;
        else
            write_atomic(run.manifest_path, manifest);
    } catch (const Failure& f) {
        emit_error(run.subcommand, f.status, f.what(), f.line);
        return 1;
    } catch (const std::exception& e) {
        emit_error(run.subcommand, "internal", e.what(), 0);
        return 1;
    }
    return 0;
}
