// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <sbmce/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    sbmce::tune_allocator();
    CLI::App app{"sbmce: score-based MIMO channel estimation"};
    app.require_subcommand(1);

    std::string config_path;
    sbmce::CliOverrides overrides;
    std::string data_dir, model_path, report_path;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("-c,--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--data-dir", data_dir, "override paths.data_dir");
        cmd->add_option("--model", model_path, "override paths.model_path");
        cmd->add_option("--report", report_path, "override paths.report_path");
        cmd->add_option("--seed", seed, "override every seed in the config");
    };

    CLI::App *gen = app.add_subcommand("gen-data", "generate train/val/test channel datasets");
    CLI::App *trn = app.add_subcommand("train", "train the score network");
    CLI::App *swp = app.add_subcommand("sweep", "NMSE sweep over SNR, written as CSV");
    CLI::App *est = app.add_subcommand("estimate", "estimate one channel from an observation file");
    for (CLI::App *cmd : {gen, trn, swp, est})
        add_common(cmd);

    std::string observation_path;
    sbmce::EstimateOptions est_opt;
    std::string delta_text;
    est->add_option("observation", observation_path, "observation JSON file")->required();
    est->add_option("-e,--estimator", est_opt.estimator, "estimator id from sweep.estimators");
    est->add_option("--delta", delta_text, "step skip for SBM estimators (integer or 'max')");
    est->add_option("-o,--output", est_opt.output, "output JSON (default: <observation>.estimate.json)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (CLI::App *cmd : {gen, trn, swp, est})
    {
        if (!cmd->parsed())
            continue;
        if (cmd->count("--data-dir"))
            overrides.data_dir = data_dir;
        if (cmd->count("--model"))
            overrides.model_path = model_path;
        if (cmd->count("--report"))
            overrides.report_path = report_path;
        if (cmd->count("--seed"))
            overrides.seed = seed;
    }

    if (gen->parsed())
        return sbmce::cmd_gen_data(config_path, overrides);
    if (trn->parsed())
        return sbmce::cmd_train(config_path, overrides);
    if (swp->parsed())
        return sbmce::cmd_sweep(config_path, overrides);

    if (!delta_text.empty())
    {
        if (delta_text == "max")
            est_opt.delta = 0;
        else
        {
            try
            {
                est_opt.delta = std::stoi(delta_text);
            }
            catch (const std::exception &)
            {
                std::cerr << "error: --delta must be an integer or 'max'\n";
                return 2;
            }
        }
    }
    return sbmce::cmd_estimate(config_path, observation_path, est_opt, overrides);
}
