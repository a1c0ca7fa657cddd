#pragma once

#include "kisgmm/harness/train.hpp"

namespace kisgmm::harness {

// Artifact file naming inside an output/checkpoint directory.
std::string demos_filename(const RunConfig& config);
std::string gmm_filename(const RunConfig& config);
std::string sac_filename(const RunConfig& config, Mode mode, uint64_t seed);
std::string key_filename(const RunConfig& config, Mode mode, uint64_t seed);
std::string refined_sac_filename(const RunConfig& config, sim::Variant variant, uint64_t seed);
std::string refined_key_filename(const RunConfig& config, sim::Variant variant, uint64_t seed);

// gen-demos: scripted-expert demonstrations in the source scene; every
// trajectory ends successfully, failed episodes are regenerated.
dynsys::DemonstrationSet cmd_gen_demos(const RunConfig& config, const std::string& out_dir);

// fit: mixture fit of the demonstration file.
dynsys::GaussianMixtureParams cmd_fit(const RunConfig& config, const std::string& demos_path,
                                      const std::string& out_dir);

// refine-source: one training arm per seed, persisting agent/detector
// checkpoints and training metrics.
std::vector<SourceTrainResult> cmd_refine_source(const RunConfig& config,
                                                 const std::string& gmm_path,
                                                 const std::string& out_dir);

// eval: success rates for config.mode over the requested variants.
EvalReport cmd_eval(const RunConfig& config, const std::string& artifact_dir,
                    const std::string& out_dir,
                    const std::vector<sim::Variant>& variants,
                    sim::DisplacementTier tier = sim::DisplacementTier::None);

// refine-target: per-seed target refinement plus the from-scratch arm.
std::vector<TargetTrainResult> cmd_refine_target(const RunConfig& config,
                                                 const std::string& artifact_dir,
                                                 sim::Variant target,
                                                 const std::string& out_dir);

// displacement: Easy/Medium/Hard displacement study in the source scene.
EvalReport cmd_displacement_study(const RunConfig& config, const std::string& artifact_dir,
                                  const std::string& out_dir);

// Loads the artifact bundle a mode needs from directory files.
SkillArtifacts load_artifacts(const RunConfig& config, const std::string& artifact_dir, Mode mode,
                              uint64_t seed, std::optional<sim::Variant> refined_variant = {});

}  // namespace kisgmm::harness
