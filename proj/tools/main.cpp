// Command-line front end for the skill-learning pipeline: demonstration
// generation, mixture fitting, source refinement, evaluation, target
// refinement, and the displacement study.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/harness/commands.hpp"

using namespace kisgmm;

namespace {

harness::RunConfig make_config(const std::string& config_path, const std::string& skill,
                               uint64_t seed_override, bool has_seed,
                               const std::string& mode) {
    harness::RunConfig config;
    if (!config_path.empty()) config = harness::load_run_config(config_path);
    if (!skill.empty()) config.skill = sim::skill_from_string(skill);
    if (has_seed) config.seeds = {seed_override};
    if (!mode.empty()) config.mode = harness::mode_from_string(mode);
    config.validate();
    return config;
}

std::vector<sim::Variant> parse_variants(const std::string& csv) {
    std::vector<sim::Variant> out;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(sim::variant_from_string(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (out.empty()) throw ConfigError("no variants given");
    return out;
}

void print_report(const harness::EvalReport& report) {
    for (const auto& a : report.aggregates)
        std::printf("%-14s %s %-6s  %.3f +- %.3f (%d seeds)\n", harness::to_string(a.mode).c_str(),
                    a.variant.c_str(), sim::to_string(a.tier).c_str(), a.mean, a.stddev, a.seeds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KIS-GMM skill learning pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", skill, mode, variants_csv = "A,B,C,D";
    std::string demos_path, gmm_path, artifact_dir, target_variant = "B", tier = "none";
    uint64_t seed = 0;
    bool has_seed = false;

    app.add_option("--config", config_path, "RunConfig JSON file")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--skill", skill, "drawer|button");
    app.add_option("--mode", mode, "gmm|sacgmm|sacgmm_gt|keygmm|kisgmm_zero|kisgmm_refined");
    auto* seed_opt = app.add_option("--seed", seed, "single-seed override");

    auto* gen = app.add_subcommand("gen-demos", "record scripted-expert demonstrations");
    auto* fit = app.add_subcommand("fit", "fit the mixture dynamical system");
    fit->add_option("--demos", demos_path, "demonstrations JSON");
    auto* refine = app.add_subcommand("refine-source", "train the refinement and keypoint agents");
    refine->add_option("--gmm", gmm_path, "mixture JSON");
    auto* eval = app.add_subcommand("eval", "success-rate evaluation");
    eval->add_option("--checkpoints", artifact_dir, "artifact directory");
    eval->add_option("--variants", variants_csv, "comma-separated variants")->capture_default_str();
    eval->add_option("--tier", tier, "displacement tier none|easy|medium|hard")
        ->capture_default_str();
    auto* rt = app.add_subcommand("refine-target", "refine in a target environment");
    rt->add_option("--checkpoints", artifact_dir, "artifact directory");
    rt->add_option("--target", target_variant, "target variant")->capture_default_str();
    auto* disp = app.add_subcommand("displacement", "Easy/Medium/Hard displacement study");
    disp->add_option("--checkpoints", artifact_dir, "artifact directory");

    CLI11_PARSE(app, argc, argv);

    try {
        has_seed = seed_opt->count() > 0;
        auto config = make_config(config_path, skill, seed, has_seed, mode);
        if (artifact_dir.empty()) artifact_dir = out_dir;
        if (demos_path.empty())
            demos_path = out_dir + "/" + harness::demos_filename(config);
        if (gmm_path.empty()) gmm_path = out_dir + "/" + harness::gmm_filename(config);

        if (gen->parsed()) {
            const auto demos = harness::cmd_gen_demos(config, out_dir);
            std::printf("wrote %zu demonstrations\n", demos.trajectories.size());
        } else if (fit->parsed()) {
            const auto gmm = harness::cmd_fit(config, demos_path, out_dir);
            std::printf("fitted %d-component mixture\n", gmm.components);
        } else if (refine->parsed()) {
            const auto results = harness::cmd_refine_source(config, gmm_path, out_dir);
            for (size_t i = 0; i < results.size(); ++i)
                std::printf("seed %llu: success %.2f -> %.2f, key err %.4f m%s\n",
                            static_cast<unsigned long long>(config.seeds[i]),
                            results[i].initial_success, results[i].final_success,
                            results[i].key_val_error,
                            results[i].improvement_warning ? " [warning: no improvement]" : "");
        } else if (eval->parsed()) {
            const auto report = harness::cmd_eval(config, artifact_dir, out_dir,
                                                  parse_variants(variants_csv),
                                                  sim::tier_from_string(tier));
            print_report(report);
        } else if (rt->parsed()) {
            const auto results = harness::cmd_refine_target(
                config, artifact_dir, sim::variant_from_string(target_variant), out_dir);
            for (size_t i = 0; i < results.size(); ++i)
                std::printf("seed %llu: refined %d episodes to threshold, scratch %d\n",
                            static_cast<unsigned long long>(config.seeds[i]),
                            results[i].refined.episodes_to_threshold,
                            results[i].scratch.episodes_to_threshold);
        } else if (disp->parsed()) {
            const auto report = harness::cmd_displacement_study(config, artifact_dir, out_dir);
            print_report(report);
        }
        return 0;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", "command_failed"}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
