#include "kisgmm/rl/sac.hpp"

#include <algorithm>
#include <cmath>

#include "kisgmm/approx/checkpoint.hpp"
#include "kisgmm/approx/presets.hpp"
#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::rl {

namespace {

constexpr double kLog2 = 0.6931471805599453;
constexpr double kHalfLog2Pi = 0.9189385332046727;
constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;

double softplus(double x) {
    if (x > 20.0) return x;
    if (x < -20.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

approx::NetworkSpec encoder_spec(int latent_dim, uint64_t seed) {
    auto spec = approx::conv_backbone_spec(4, sim::kImageSize, sim::kImageSize, seed);
    const int feat = approx::conv_backbone_output(sim::kImageSize, sim::kImageSize);
    spec.layers.push_back(approx::DenseSpec{feat, latent_dim, approx::Activation::Linear});
    return spec;
}

nlohmann::json config_to_json(const SacConfig& c) {
    return {{"latent_dim", c.latent_dim},
            {"components", c.components},
            {"bound_prior", c.bounds.prior},
            {"bound_mean", c.bounds.mean},
            {"gamma", c.gamma},
            {"tau", c.tau},
            {"lr", c.lr},
            {"batch_size", c.batch_size},
            {"replay_capacity", c.replay_capacity},
            {"warmup_transitions", c.warmup_transitions},
            {"init_alpha", c.init_alpha},
            {"target_entropy", c.target_entropy},
            {"hidden", c.hidden},
            {"seed", c.seed}};
}

SacConfig config_from_json(const nlohmann::json& j) {
    SacConfig c;
    c.latent_dim = j.at("latent_dim");
    c.components = j.at("components");
    c.bounds.prior = j.at("bound_prior");
    c.bounds.mean = j.at("bound_mean");
    c.gamma = j.at("gamma");
    c.tau = j.at("tau");
    c.lr = j.at("lr");
    c.batch_size = j.at("batch_size");
    c.replay_capacity = j.at("replay_capacity").get<size_t>();
    c.warmup_transitions = j.at("warmup_transitions");
    c.init_alpha = j.at("init_alpha");
    c.target_entropy = j.at("target_entropy");
    c.hidden = j.at("hidden");
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

}  // namespace

SacAgent::SacAgent(SacConfig cfg)
    : cfg_(cfg),
      scale_(dynsys::action_scale_vector(cfg.components, cfg.bounds)),
      encoder_(encoder_spec(cfg.latent_dim, cfg.seed)),
      actor_(approx::mlp_spec(cfg.state_dim(), cfg.hidden, 2 * cfg.action_dim(),
                              hash_combine(cfg.seed, 1))),
      critic1_(approx::mlp_spec(cfg.state_dim() + cfg.action_dim(), cfg.hidden, 1,
                                hash_combine(cfg.seed, 2))),
      critic2_(approx::mlp_spec(cfg.state_dim() + cfg.action_dim(), cfg.hidden, 1,
                                hash_combine(cfg.seed, 3))),
      target1_(critic1_),
      target2_(critic2_),
      opt_encoder_({cfg.lr}),
      opt_actor_({cfg.lr}),
      opt_critic1_({cfg.lr}),
      opt_critic2_({cfg.lr}),
      log_alpha_(std::log(std::max(cfg.init_alpha, 1e-8))),
      target_entropy_(cfg.target_entropy != 0.0 ? cfg.target_entropy
                                                : -static_cast<double>(cfg.action_dim())),
      replay_(cfg.replay_capacity) {
    if (cfg.gamma < 0.0 || cfg.gamma >= 1.0) throw ConfigError("sac: gamma must be in [0, 1)");
    if (cfg.tau <= 0.0 || cfg.tau > 1.0) throw ConfigError("sac: tau must be in (0, 1]");
    if (cfg.batch_size < 1) throw ConfigError("sac: batch size must be >= 1");
}

Eigen::VectorXd SacAgent::encode(const sim::Observation& obs) {
    const auto input = sim::observation_to_input(obs);
    const auto out = encoder_.forward(input, false);
    return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<long>(out.size()));
}

Eigen::VectorXd SacAgent::state_vector(const AgentState& s) const {
    if (s.latent.size() != cfg_.latent_dim)
        throw ConfigError("sac: agent state latent dimension mismatch");
    Eigen::VectorXd v(cfg_.state_dim());
    v.head(cfg_.latent_dim) = s.latent;
    v.tail(3) = s.pose;
    return v;
}

SacAgent::PolicyEval SacAgent::policy_forward(const Eigen::VectorXd& state_vec,
                                              const Eigen::VectorXd* eps, bool record_tape) {
    const int da = cfg_.action_dim();
    const auto out =
        actor_.forward(std::span<const double>(state_vec.data(), state_vec.size()), record_tape);

    PolicyEval pe;
    pe.mean.resize(da);
    pe.log_std.resize(da);
    pe.eps = eps ? *eps : Eigen::VectorXd::Zero(da);
    pe.pre_squash.resize(da);
    pe.squashed.resize(da);
    pe.action.resize(da);
    pe.clamped.assign(da, false);
    for (int d = 0; d < da; ++d) {
        pe.mean(d) = out[d];
        const double raw = out[da + d];
        const double ls = std::clamp(raw, kLogStdMin, kLogStdMax);
        pe.clamped[d] = raw != ls;
        pe.log_std(d) = ls;
        const double u = pe.mean(d) + std::exp(ls) * pe.eps(d);
        const double t = std::tanh(u);
        pe.pre_squash(d) = u;
        pe.squashed(d) = t;
        pe.action(d) = scale_(d) * t;
        pe.log_prob += -0.5 * pe.eps(d) * pe.eps(d) - ls - kHalfLog2Pi -
                       2.0 * (kLog2 - u - softplus(-2.0 * u));
    }
    return pe;
}

ActionSample SacAgent::sample_action(const AgentState& state, bool stochastic, Rng& rng) {
    const int da = cfg_.action_dim();
    Eigen::VectorXd eps(da);
    if (stochastic)
        for (int d = 0; d < da; ++d) eps(d) = rng.normal();
    const auto pe =
        policy_forward(state_vector(state), stochastic ? &eps : nullptr, false);
    return {pe.action, pe.log_prob};
}

double SacAgent::log_prob(const AgentState& state, const Eigen::VectorXd& action) {
    const int da = cfg_.action_dim();
    if (action.size() != da) throw ConfigError("sac: action dimension mismatch");
    const auto svec = state_vector(state);
    const auto out = actor_.forward(std::span<const double>(svec.data(), svec.size()), false);

    double lp = 0.0;
    for (int d = 0; d < da; ++d) {
        const double mean = out[d];
        const double ls = std::clamp(out[da + d], kLogStdMin, kLogStdMax);
        const double sigma = std::exp(ls);
        const double t = std::clamp(action(d) / std::max(scale_(d), 1e-12), -1.0 + 1e-9, 1.0 - 1e-9);
        const double u = std::atanh(t);
        const double eps = (u - mean) / sigma;
        lp += -0.5 * eps * eps - ls - kHalfLog2Pi - 2.0 * (kLog2 - u - softplus(-2.0 * u));
    }
    return lp;
}

Eigen::VectorXd SacAgent::latent_for(const Transition& t, bool next, bool record_tape) {
    const auto& obs = next ? t.next_obs : t.obs;
    if (obs) {
        const auto input = sim::observation_to_input(*obs);
        const auto out = encoder_.forward(input, record_tape);
        return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<long>(out.size()));
    }
    return next ? t.next_state.latent : t.state.latent;
}

Eigen::VectorXd SacAgent::critic_targets(const std::vector<const Transition*>& batch, Rng& rng) {
    const int B = static_cast<int>(batch.size());
    const int ds = cfg_.state_dim(), da = cfg_.action_dim();
    Eigen::VectorXd y(B);
    Eigen::VectorXd input(ds + da);
    Eigen::VectorXd eps(da);
    for (int i = 0; i < B; ++i) {
        const auto& t = *batch[i];
        double boot = 0.0;
        if (cfg_.gamma > 0.0 && !t.done) {
            AgentState next{latent_for(t, true, false), t.next_state.pose};
            const auto svec = state_vector(next);
            for (int d = 0; d < da; ++d) eps(d) = rng.normal();
            const auto pe = policy_forward(svec, &eps, false);
            input.head(ds) = svec;
            input.tail(da) = pe.action;
            const std::span<const double> in(input.data(), static_cast<size_t>(input.size()));
            const double q1 = target1_.forward(in, false)[0];
            const double q2 = target2_.forward(in, false)[0];
            boot = cfg_.gamma * (std::min(q1, q2) - alpha() * pe.log_prob);
        }
        y(i) = t.reward + boot;
    }
    return y;
}

double SacAgent::critic_loss_probe(const std::vector<const Transition*>& batch,
                                   const Eigen::VectorXd& targets) {
    const int B = static_cast<int>(batch.size());
    const int ds = cfg_.state_dim(), da = cfg_.action_dim();
    const int dl = cfg_.latent_dim;

    encoder_.zero_grad();
    critic1_.zero_grad();
    critic2_.zero_grad();
    double critic_loss = 0.0;
    Eigen::VectorXd input(ds + da);
    for (int i = 0; i < B; ++i) {
        const auto& t = *batch[i];
        const bool through_encoder = static_cast<bool>(t.obs);
        const Eigen::VectorXd latent = latent_for(t, false, through_encoder);
        input.head(dl) = latent;
        input.segment(dl, 3) = t.state.pose;
        input.tail(da) = t.action;
        const std::span<const double> in(input.data(), static_cast<size_t>(input.size()));

        const double q1 = critic1_.forward(in, true)[0];
        const double q2 = critic2_.forward(in, true)[0];
        critic_loss += ((q1 - targets(i)) * (q1 - targets(i)) +
                        (q2 - targets(i)) * (q2 - targets(i))) / B;
        const auto gin1 = critic1_.backward(std::vector<double>{2.0 * (q1 - targets(i)) / B});
        const auto gin2 = critic2_.backward(std::vector<double>{2.0 * (q2 - targets(i)) / B});
        if (through_encoder) {
            std::vector<double> genc(dl);
            for (int k = 0; k < dl; ++k) genc[k] = gin1[k] + gin2[k];
            encoder_.backward(genc);
        }
    }
    return critic_loss;
}

SacAgent::ActorProbe SacAgent::actor_loss_probe(const std::vector<Eigen::VectorXd>& state_vecs,
                                                const Eigen::MatrixXd& eps) {
    const int B = static_cast<int>(state_vecs.size());
    const int ds = cfg_.state_dim(), da = cfg_.action_dim();

    actor_.zero_grad();
    ActorProbe probe;
    Eigen::VectorXd input(ds + da);
    std::vector<double> actor_grad(2 * da);
    for (int i = 0; i < B; ++i) {
        const Eigen::VectorXd eps_i = eps.row(i);
        const auto pe = policy_forward(state_vecs[i], &eps_i, true);

        input.head(ds) = state_vecs[i];
        input.tail(da) = pe.action;
        const std::span<const double> in(input.data(), static_cast<size_t>(input.size()));
        const double q1 = critic1_.forward(in, true)[0];
        const double q2 = critic2_.forward(in, true)[0];
        const bool use1 = q1 <= q2;
        const double qmin = use1 ? q1 : q2;
        probe.loss += (alpha() * pe.log_prob - qmin) / B;
        probe.mean_logpi += pe.log_prob / B;

        const auto gin = (use1 ? critic1_ : critic2_).backward(std::vector<double>{1.0});
        const double a = alpha();
        for (int d = 0; d < da; ++d) {
            const double tq = pe.squashed(d);
            const double dsq = scale_(d) * (1.0 - tq * tq);  // da/du
            const double ga = gin[ds + d];                   // dq/da
            const double du = a * 2.0 * tq - ga * dsq;       // dL/du (loss already has -q)
            actor_grad[d] = du / B;
            if (pe.clamped[d]) {
                actor_grad[da + d] = 0.0;
            } else {
                const double sig_eps = std::exp(pe.log_std(d)) * pe.eps(d);
                actor_grad[da + d] = (du * sig_eps - a) / B;
            }
        }
        actor_.backward(actor_grad);
    }
    return probe;
}

UpdateStats SacAgent::update(const std::vector<const Transition*>& batch, Rng& rng) {
    if (batch.empty()) throw ConfigError("sac: update needs a non-empty batch");
    const int B = static_cast<int>(batch.size());
    const int ds = cfg_.state_dim(), da = cfg_.action_dim();
    const int dl = cfg_.latent_dim;

    UpdateStats stats;
    const Eigen::VectorXd y = critic_targets(batch, rng);
    if (!y.allFinite()) {
        ++skipped_updates_;
        log::warn("sac: non-finite critic target, update skipped");
        stats.skipped = true;
        return stats;
    }
    stats.mean_target_q = y.mean();

    // critic (and encoder) regression toward y
    const double critic_loss = critic_loss_probe(batch, y);
    stats.critic_loss = critic_loss;
    if (!std::isfinite(critic_loss) || !critic1_.all_finite() || !critic2_.all_finite() ||
        !encoder_.all_finite()) {
        ++skipped_updates_;
        log::warn("sac: non-finite critic loss or gradient, update skipped");
        stats.skipped = true;
        return stats;
    }
    opt_critic1_.step(critic1_.params());
    opt_critic2_.step(critic2_.params());
    opt_encoder_.step(encoder_.params());

    // actor ascends min-Q - alpha log pi; encoder and critics held fixed,
    // latents recomputed with the just-updated encoder
    std::vector<Eigen::VectorXd> svecs;
    svecs.reserve(B);
    for (int i = 0; i < B; ++i) {
        const auto& t = *batch[i];
        Eigen::VectorXd svec(ds);
        svec.head(dl) = latent_for(t, false, false);
        svec.tail(3) = t.state.pose;
        svecs.push_back(std::move(svec));
    }
    Eigen::MatrixXd eps(B, da);
    for (int i = 0; i < B; ++i)
        for (int d = 0; d < da; ++d) eps(i, d) = rng.normal();

    const auto probe = actor_loss_probe(svecs, eps);
    stats.actor_loss = probe.loss;
    const double mean_logpi = probe.mean_logpi;
    if (!std::isfinite(probe.loss) || !actor_.all_finite()) {
        ++skipped_updates_;
        log::warn("sac: non-finite actor loss or gradient, actor step skipped");
        stats.skipped = true;
        return stats;
    }
    opt_actor_.step(actor_.params());

    // temperature step toward the entropy target
    log_alpha_ += cfg_.lr * (mean_logpi + target_entropy_);
    log_alpha_ = std::clamp(log_alpha_, -10.0, 3.0);
    stats.alpha = alpha();

    // Polyak averaging
    for (int c = 0; c < 2; ++c) {
        auto& critic = c == 0 ? critic1_ : critic2_;
        auto& target = c == 0 ? target1_ : target2_;
        for (size_t p = 0; p < critic.params().size(); ++p) {
            auto& tv = target.params()[p].values;
            const auto& cv = critic.params()[p].values;
            for (size_t k = 0; k < tv.size(); ++k)
                tv[k] = cfg_.tau * cv[k] + (1.0 - cfg_.tau) * tv[k];
        }
    }

    ++update_count_;
    return stats;
}

UpdateStats SacAgent::update_from_replay(Rng& rng) {
    const auto batch = replay_.sample(cfg_.batch_size, rng);
    return update(batch, rng);
}

void SacAgent::save(const std::string& path) const {
    approx::Checkpoint ck;
    ck.meta["kind"] = "sac";
    ck.meta["config"] = config_to_json(cfg_);
    ck.meta["log_alpha"] = log_alpha_;
    ck.meta["updates"] = update_count_;
    ck.meta["skipped_updates"] = skipped_updates_;
    ck.add_network("encoder", encoder_);
    ck.add_network("actor", actor_);
    ck.add_network("critic1", critic1_);
    ck.add_network("critic2", critic2_);
    ck.add_network("target1", target1_);
    ck.add_network("target2", target2_);

    const std::pair<const char*, const approx::AdamOptimizer*> opts[] = {
        {"encoder", &opt_encoder_}, {"actor", &opt_actor_},
        {"critic1", &opt_critic1_}, {"critic2", &opt_critic2_}};
    nlohmann::json steps;
    for (const auto& [name, opt] : opts) {
        steps[name] = opt->steps();
        const auto& m = opt->first_moments();
        const auto& v = opt->second_moments();
        for (size_t i = 0; i < m.size(); ++i) {
            ck.add_raw(std::string("adam/") + name + "/m" + std::to_string(i),
                       {static_cast<int>(m[i].size())}, m[i]);
            ck.add_raw(std::string("adam/") + name + "/v" + std::to_string(i),
                       {static_cast<int>(v[i].size())}, v[i]);
        }
    }
    ck.meta["adam_steps"] = steps;
    ck.save(path);
}

SacAgent SacAgent::load(const std::string& path) {
    const auto ck = approx::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "sac") throw ConfigError("sac: '" + path + "' is not a SAC checkpoint");
    SacAgent agent(config_from_json(ck.meta.at("config")));
    agent.encoder_ = ck.network("encoder");
    agent.actor_ = ck.network("actor");
    agent.critic1_ = ck.network("critic1");
    agent.critic2_ = ck.network("critic2");
    agent.target1_ = ck.network("target1");
    agent.target2_ = ck.network("target2");
    agent.log_alpha_ = ck.meta.at("log_alpha");
    agent.update_count_ = ck.meta.value("updates", 0);
    agent.skipped_updates_ = ck.meta.value("skipped_updates", 0);

    const std::pair<const char*, approx::AdamOptimizer*> opts[] = {
        {"encoder", &agent.opt_encoder_}, {"actor", &agent.opt_actor_},
        {"critic1", &agent.opt_critic1_}, {"critic2", &agent.opt_critic2_}};
    const std::pair<const char*, approx::Network*> nets[] = {
        {"encoder", &agent.encoder_}, {"actor", &agent.actor_},
        {"critic1", &agent.critic1_}, {"critic2", &agent.critic2_}};
    for (size_t n = 0; n < 4; ++n) {
        const std::string name = opts[n].first;
        const size_t ntensors = nets[n].second->params().size();
        std::vector<std::vector<double>> m, v;
        bool complete = true;
        for (size_t i = 0; i < ntensors; ++i) {
            const auto mk = "adam/" + name + "/m" + std::to_string(i);
            const auto vk = "adam/" + name + "/v" + std::to_string(i);
            if (!ck.has_raw(mk) || !ck.has_raw(vk)) {
                complete = false;
                break;
            }
            m.push_back(ck.raw(mk));
            v.push_back(ck.raw(vk));
        }
        if (complete && ck.meta.contains("adam_steps"))
            opts[n].second->restore(ck.meta["adam_steps"].value(name, 0), std::move(m),
                                    std::move(v));
    }
    return agent;
}

}  // namespace kisgmm::rl
