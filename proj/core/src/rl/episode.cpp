#include "kisgmm/rl/episode.hpp"

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::rl {

namespace {

Eigen::VectorXd random_bounded_action(const Eigen::VectorXd& scale, Rng& rng) {
    Eigen::VectorXd a(scale.size());
    for (int i = 0; i < scale.size(); ++i) a(i) = rng.uniform(-scale(i), scale(i));
    return a;
}

}  // namespace

EpisodeResult refinement_episode(sim::Env& env, const dynsys::GaussianMixtureParams& base_gmm,
                                 SacAgent* agent, const Vec3& reference,
                                 const EpisodeOptions& opt, Rng& rng) {
    if (opt.schedule.window < 1) throw ConfigError("episode: window must be >= 1");
    if ((opt.train || opt.store_transitions) && !agent)
        throw ConfigError("episode: training requires an agent");

    const int K = base_gmm.components;
    const Eigen::VectorXd scale =
        agent ? dynsys::action_scale_vector(K, agent->config().bounds) : Eigen::VectorXd();

    EpisodeResult result;
    auto obs = std::make_shared<const sim::Observation>(env.render());

    while (!env.episode_done()) {
        AgentState state;
        state.pose = env.state().effector;
        if (agent) state.latent = agent->encode(*obs);
        if (opt.collect_frames) result.frames.push_back(obs);

        Eigen::VectorXd action;
        if (!agent) {
            action = dynsys::action_to_vector(dynsys::RefinementAction::zeros(K));
        } else if (opt.train &&
                   agent->replay().size() < static_cast<size_t>(agent->config().warmup_transitions)) {
            action = random_bounded_action(scale, rng);
        } else {
            action = agent->sample_action(state, opt.stochastic, rng).action;
        }

        const auto refined = dynsys::apply_refinement(
            base_gmm, dynsys::action_from_vector(action, K),
            agent ? agent->config().bounds : dynsys::ActionBounds{});
        const dynsys::GmrModel controller(refined);

        double window_reward = 0.0;
        for (int w = 0; w < opt.schedule.window && !env.episode_done(); ++w) {
            const Vec3 v = controller.velocity(env.state().effector, reference);
            const auto sr = env.step(v, opt.schedule.control_dt);
            window_reward += sr.reward;
            ++result.steps;
        }
        result.episode_return += window_reward;
        ++result.decisions;

        auto next_obs = std::make_shared<const sim::Observation>(env.render());
        if (agent && (opt.store_transitions || opt.train)) {
            Transition t;
            t.state = state;
            t.action = action;
            t.reward = window_reward;
            t.next_state.pose = env.state().effector;
            t.next_state.latent = agent->encode(*next_obs);
            t.done = env.episode_done();
            t.obs = obs;
            t.next_obs = next_obs;
            if (opt.store_transitions) agent->replay().push(std::move(t));
            if (opt.train &&
                agent->replay().size() >= static_cast<size_t>(agent->config().warmup_transitions)) {
                const auto stats = agent->update_from_replay(rng);
                if (!stats.skipped) {
                    result.mean_critic_loss += stats.critic_loss;
                    result.mean_actor_loss += stats.actor_loss;
                    result.alpha = stats.alpha;
                    ++result.updates;
                }
            }
        }
        obs = std::move(next_obs);
    }
    if (opt.collect_frames) result.frames.push_back(obs);  // terminal frame

    if (result.updates > 0) {
        result.mean_critic_loss /= result.updates;
        result.mean_actor_loss /= result.updates;
    }
    result.success = env.succeeded();
    return result;
}

}  // namespace kisgmm::rl
