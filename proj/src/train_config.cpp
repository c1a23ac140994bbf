// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "hdrvox/trainer.hpp"

namespace hdrvox {

TrainConfig preset_config(const std::string& name) {
    TrainConfig c;  // the defaults are the desk-scale schedule
    if (name == "desk") return c;
    if (name == "baseline") {
        c.enable_tonemap = false;
        return c;
    }
    if (name == "smoke") {
        c.epochs = 2;
        c.iters_per_epoch = 100;
        c.rays_per_batch = 256;
        c.total_lr_steps = 200;
        c.sigma_lr_delay_steps = 50;
        c.ladder = {{{8, 8, 8}, 0}};
        c.tv_epochs = 1;
        c.sh_mask_epochs = 1;
        return c;
    }
    if (name == "paper") {
        c.epochs = 10;
        c.iters_per_epoch = 12800;
        c.rays_per_batch = 5000;
        c.total_lr_steps = 250000;
        c.sigma_lr_delay_steps = 12800;
        c.ladder = {{{128, 128, 64}, 0},
                    {{256, 256, 128}, 25600},
                    {{512, 512, 256}, 51200},
                    {{800, 800, 512}, 76800}};
        c.tv_epochs = 2;  // until the first upsampling
        c.sh_mask_epochs = 5;
        return c;
    }
    throw std::invalid_argument("preset_config: unknown preset " + name);
}

namespace {

std::vector<ResolutionStep> parse_ladder(const std::string& text) {
    // e.g. "16x16x16@0,32x32x32@6000,64x64x64@12000"
    std::vector<ResolutionStep> ladder;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        ResolutionStep step;
        char x1, x2, at;
        std::istringstream is(item);
        if (!(is >> step.res.nx >> x1 >> step.res.ny >> x2 >> step.res.nz >> at >>
              step.at_iteration) ||
            x1 != 'x' || x2 != 'x' || at != '@')
            throw std::invalid_argument("config: malformed ladder entry '" + item + "'");
        ladder.push_back(step);
    }
    if (ladder.empty()) throw std::invalid_argument("config: empty ladder");
    return ladder;
}

std::string format_ladder(const std::vector<ResolutionStep>& ladder) {
    std::ostringstream os;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (i) os << ",";
        os << ladder[i].res.nx << "x" << ladder[i].res.ny << "x" << ladder[i].res.nz << "@"
           << ladder[i].at_iteration;
    }
    return os.str();
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_train_config: cannot open " + path);

    // first pass: an optional preset line selects the base
    TrainConfig cfg;
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const auto& [k, v] : kv)
        if (k == "preset") cfg = preset_config(v);

    for (const auto& [k, v] : kv) {
        if (k == "preset") continue;
        else if (k == "epochs") cfg.epochs = std::stoi(v);
        else if (k == "iters_per_epoch") cfg.iters_per_epoch = std::stoi(v);
        else if (k == "rays_per_batch") cfg.rays_per_batch = std::stoi(v);
        else if (k == "lr_init") cfg.lr_init = std::stod(v);
        else if (k == "lr_final") cfg.lr_final = std::stod(v);
        else if (k == "sigma_lr_delay_steps") cfg.sigma_lr_delay_steps = std::stoll(v);
        else if (k == "total_lr_steps") cfg.total_lr_steps = std::stoll(v);
        else if (k == "lambda_tv_sigma") cfg.loss.lambda_tv_sigma = std::stod(v);
        else if (k == "lambda_tv_sh") cfg.loss.lambda_tv_sh = std::stod(v);
        else if (k == "lambda_smooth") cfg.loss.lambda_smooth = std::stod(v);
        else if (k == "tv_epsilon") cfg.loss.tv_epsilon = std::stod(v);
        else if (k == "mask_low") cfg.loss.mask_low = std::stod(v);
        else if (k == "mask_high") cfg.loss.mask_high = std::stod(v);
        else if (k == "alpha") cfg.alpha = std::stod(v);
        else if (k == "step_size") cfg.step_size = std::stod(v);
        else if (k == "ladder") cfg.ladder = parse_ladder(v);
        else if (k == "prune_tau") cfg.prune_tau = std::stod(v);
        else if (k == "tv_epochs") cfg.tv_epochs = std::stoi(v);
        else if (k == "sh_mask_epochs") cfg.sh_mask_epochs = std::stoi(v);
        else if (k == "seed") cfg.seed = std::stoull(v);
        else if (k == "deterministic") cfg.deterministic = parse_bool(v);
        else if (k == "threads") cfg.threads = std::stoi(v);
        else if (k == "rmsprop_beta") cfg.rmsprop_beta = std::stod(v);
        else if (k == "rmsprop_eps") cfg.rmsprop_eps = std::stod(v);
        else if (k == "trans_cutoff") cfg.trans_cutoff = std::stod(v);
        else if (k == "enable_tonemap") cfg.enable_tonemap = parse_bool(v);
        else if (k == "shared_crf") cfg.shared_crf = parse_bool(v);
        else if (k == "sh_mask_l2_only") cfg.sh_mask_l2_only = parse_bool(v);
        else if (k == "fold_dc_offset") cfg.fold_dc_offset = parse_bool(v);
        else if (k == "checkpoint_every_epochs") cfg.checkpoint_every_epochs = std::stoi(v);
        else if (k == "precision") cfg.precision = v;
        else throw std::invalid_argument("config: unknown key '" + k + "'");
    }
    cfg.validate();
    return cfg;
}

void save_train_config(const std::string& path, const TrainConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_train_config: cannot open " + path);
    out.precision(17);
    out << "epochs = " << cfg.epochs << "\n"
        << "iters_per_epoch = " << cfg.iters_per_epoch << "\n"
        << "rays_per_batch = " << cfg.rays_per_batch << "\n"
        << "lr_init = " << cfg.lr_init << "\n"
        << "lr_final = " << cfg.lr_final << "\n"
        << "sigma_lr_delay_steps = " << cfg.sigma_lr_delay_steps << "\n"
        << "total_lr_steps = " << cfg.total_lr_steps << "\n"
        << "lambda_tv_sigma = " << cfg.loss.lambda_tv_sigma << "\n"
        << "lambda_tv_sh = " << cfg.loss.lambda_tv_sh << "\n"
        << "lambda_smooth = " << cfg.loss.lambda_smooth << "\n"
        << "tv_epsilon = " << cfg.loss.tv_epsilon << "\n"
        << "mask_low = " << cfg.loss.mask_low << "\n"
        << "mask_high = " << cfg.loss.mask_high << "\n"
        << "alpha = " << cfg.alpha << "\n"
        << "step_size = " << cfg.step_size << "\n"
        << "ladder = " << format_ladder(cfg.ladder) << "\n"
        << "prune_tau = " << cfg.prune_tau << "\n"
        << "tv_epochs = " << cfg.tv_epochs << "\n"
        << "sh_mask_epochs = " << cfg.sh_mask_epochs << "\n"
        << "seed = " << cfg.seed << "\n"
        << "deterministic = " << (cfg.deterministic ? "true" : "false") << "\n"
        << "threads = " << cfg.threads << "\n"
        << "rmsprop_beta = " << cfg.rmsprop_beta << "\n"
        << "rmsprop_eps = " << cfg.rmsprop_eps << "\n"
        << "trans_cutoff = " << cfg.trans_cutoff << "\n"
        << "enable_tonemap = " << (cfg.enable_tonemap ? "true" : "false") << "\n"
        << "shared_crf = " << (cfg.shared_crf ? "true" : "false") << "\n"
        << "sh_mask_l2_only = " << (cfg.sh_mask_l2_only ? "true" : "false") << "\n"
        << "fold_dc_offset = " << (cfg.fold_dc_offset ? "true" : "false") << "\n"
        << "checkpoint_every_epochs = " << cfg.checkpoint_every_epochs << "\n"
        << "precision = " << cfg.precision << "\n";
}

}  // namespace hdrvox
