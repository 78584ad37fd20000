#include "qcrb/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcrb/registry.hpp"

namespace qcrb {

using nlohmann::json;

namespace {

std::string format_g17(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

json policy_json() {
    const NumericPolicy& p = default_policy();
    return json{{"hermitian_tol", p.hermitian_tol},
                {"structural_tol", p.structural_tol},
                {"solver_tol", p.solver_tol},
                {"support_floor", p.support_floor},
                {"q_floor", p.q_floor},
                {"dq_floor", p.dq_floor},
                {"deriv_fd_step", p.deriv_fd_step},
                {"deriv_fd_tol", p.deriv_fd_tol},
                {"fisher_cond_cap", p.fisher_cond_cap},
                {"sld_cond_cap", p.sld_cond_cap},
                {"dim_cap", p.dim_cap},
                {"history_cap", p.history_cap}};
}

json matrix_to_json(const RMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const RVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

/// Everything a command needs, resolved from the merged config document.
struct ResolvedConfig {
    std::string command;
    json echo;
    StateModel model;
    RVector theta;
    WeightMatrix weight;
    SolverOptions solver;
    SolverOptions selector_solver;
    double selector_pitch = 1e-3;
    std::string preliminary;
    std::vector<long> n_grid;
    std::vector<long> n2_grid;
    long trials = 1000;
    std::uint64_t sim_seed = 1;
    int n_copies = 2;
    long diag_n = 1024;
    int n1 = 2;
    int workers = 0;
    std::string fisher_povm;
    std::string result_path;
    std::string table_path;
};

template <typename T>
T field_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

std::vector<long> long_list(const json& j, const std::string& key,
                            const std::vector<long>& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<std::vector<long>>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

ResolvedConfig resolve_config(const json& merged, const std::string& command) {
    if (!merged.is_object()) {
        throw ConfigError("config document must be a JSON object");
    }
    json model_section = merged.value("model", json::object());
    std::string model_name = field_or<std::string>(model_section, "name", "qubit-rotation1");
    std::map<std::string, double> model_params;
    if (model_section.contains("params")) {
        for (auto& [key, value] : model_section.at("params").items()) {
            if (!value.is_number()) {
                throw ConfigError("model parameter '" + key + "' must be numeric");
            }
            model_params[key] = value.get<double>();
        }
    }
    StateModel model = make_model(model_name, model_params);
    const int m = model.num_params();

    RVector theta(m);
    if (merged.contains("theta")) {
        auto values = field_or<std::vector<double>>(merged, "theta", {});
        if (static_cast<int>(values.size()) != m) {
            std::ostringstream msg;
            msg << "theta has " << values.size() << " entries; model '" << model_name
                << "' expects " << m;
            throw ConfigError(msg.str());
        }
        for (int i = 0; i < m; ++i) theta(i) = values[static_cast<size_t>(i)];
    } else {
        theta = model.domain().center();
    }
    if (!model.domain().contains(theta)) {
        throw ConfigError("theta lies outside the model's parameter box");
    }

    WeightMatrix weight = WeightMatrix::identity(m);
    if (merged.contains("weight") && !(merged.at("weight").is_string() &&
                                       merged.at("weight").get<std::string>() == "identity")) {
        auto rows = field_or<std::vector<std::vector<double>>>(merged, "weight", {});
        if (static_cast<int>(rows.size()) != m) {
            throw ConfigError("weight matrix must be m x m");
        }
        RMatrix g(m, m);
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != m) {
                throw ConfigError("weight matrix must be m x m");
            }
            for (int j = 0; j < m; ++j) g(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        try {
            weight = WeightMatrix(g);
        } catch (const InvalidOperator& e) {
            throw ConfigError(std::string("weight: ") + e.what());
        }
    }

    json solver_section = merged.value("solver", json::object());
    SolverOptions solver;
    solver.outcomes = field_or<int>(solver_section, "outcomes", 0);
    solver.restarts = field_or<int>(solver_section, "restarts", 8);
    solver.max_evals = field_or<long>(solver_section, "max_evals", 6000);
    solver.seed = field_or<std::uint64_t>(solver_section, "seed", 0x5eedu);
    solver.penalty = field_or<double>(solver_section, "penalty", 1e6);
    solver.eps_prime = field_or<double>(solver_section, "eps_prime", 1e-3);

    json selector_section = merged.value("selector", json::object());
    SolverOptions selector = solver;
    selector.restarts = field_or<int>(selector_section, "restarts", 2);
    selector.max_evals = field_or<long>(selector_section, "max_evals", 2500);

    json sim_section = merged.value("simulation", json::object());
    json output_section = merged.value("output", json::object());

    ResolvedConfig out{command,
                       merged,
                       std::move(model),
                       std::move(theta),
                       std::move(weight),
                       solver,
                       selector,
                       field_or<double>(selector_section, "pitch", 1e-3),
                       field_or<std::string>(sim_section, "preliminary", ""),
                       long_list(sim_section, "n_grid", {256, 1024, 4096}),
                       long_list(sim_section, "n2_grid", {64, 256, 1024}),
                       field_or<long>(sim_section, "trials", 1000),
                       field_or<std::uint64_t>(sim_section, "seed", 1),
                       field_or<int>(merged, "n", 2),
                       field_or<long>(sim_section, "n", 1024),
                       field_or<int>(sim_section, "n1", 2),
                       field_or<int>(merged, "workers", 0),
                       field_or<std::string>(merged.value("fisher", json::object()), "povm",
                                             "pauli6"),
                       field_or<std::string>(output_section, "result", ""),
                       field_or<std::string>(output_section, "table", "")};
    return out;
}

Povm preliminary_povm_for(const ResolvedConfig& cfg) {
    if (cfg.preliminary.empty()) {
        return default_preliminary_povm(cfg.model);
    }
    return make_povm(cfg.preliminary, cfg.model.dim());
}

json report_to_json(const MseReport& r) {
    json j{{"n", r.n},
           {"trials", r.trials},
           {"failed_trials", r.failed_trials},
           {"trace_mse", r.trace_mse},
           {"n_trace_mse", r.scaled_value},
           {"mc_stderr", r.mc_stderr},
           {"c_bound", r.c_bound},
           {"sld_bound", r.sld_bound},
           {"mse", matrix_to_json(r.mse)}};
    if (r.n_cn_bound) j["n_cn_bound"] = *r.n_cn_bound;
    return j;
}

json bound_to_json(const BoundResult& r) {
    return json{{"value", r.value},
                {"outcomes_used", r.outcomes_used},
                {"restarts_used", r.restarts_used},
                {"evaluations", r.evaluations},
                {"converged", r.converged},
                {"gap_estimate", r.gap_estimate}};
}

void ensure_parent_dir(const std::string& path) {
    std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
}

void write_result_file(const ResolvedConfig& cfg, const json& results, const json& diagnostics) {
    if (cfg.result_path.empty()) return;
    json document{{"version", json{{"tool", kToolName}, {"version", kToolVersion},
                                   {"numeric_policy", policy_json()}}},
                  {"config_echo", cfg.echo},
                  {"results", results},
                  {"diagnostics", diagnostics}};
    ensure_parent_dir(cfg.result_path);
    std::ofstream out(cfg.result_path);
    if (!out) {
        throw IoError("cannot open result file '" + cfg.result_path + "'");
    }
    out << document.dump(2) << "\n";
    if (!out) {
        throw IoError("failed writing result file '" + cfg.result_path + "'");
    }
}

int command_validate(const ResolvedConfig& cfg) {
    // Reaching this point means the model, theta, and G all resolved; also
    // validate the named measurements the config references.
    Povm preliminary = preliminary_povm_for(cfg);
    ValidationReport report = validate_povm(preliminary);
    if (!report.empty()) {
        throw ConfigError("preliminary measurement fails validation: " + report.front().axiom);
    }
    ValidationReport state_report = validate_density(cfg.model.state(cfg.theta));
    if (!state_report.empty()) {
        throw ConfigError("state at theta fails validation: " + state_report.front().axiom);
    }
    std::cout << "config ok: model " << cfg.model.name() << ", m = " << cfg.model.num_params()
              << ", dim = " << cfg.model.dim() << "\n";
    write_result_file(cfg, json{{"valid", true}}, json::object());
    return 0;
}

int command_fisher(const ResolvedConfig& cfg) {
    Povm p = make_povm(cfg.fisher_povm, cfg.model.dim());
    FisherMatrix classical = classical_fisher(cfg.model, p, cfg.theta);
    FisherMatrix sld = sld_fisher(cfg.model, cfg.theta);
    std::cout << "classical Fisher (" << cfg.fisher_povm << "): tr = "
              << format_g17(classical.matrix.trace()) << "\n"
              << "SLD Fisher: tr = " << format_g17(sld.matrix.trace()) << "\n";
    write_result_file(cfg,
                      json{{"classical_fisher", matrix_to_json(classical.matrix)},
                           {"sld_fisher", matrix_to_json(sld.matrix)},
                           {"povm", cfg.fisher_povm},
                           {"theta", vector_to_json(cfg.theta)}},
                      json::object());
    return 0;
}

int command_bound(const ResolvedConfig& cfg) {
    BoundResult res = cr_bound(cfg.model, cfg.theta, cfg.weight, cfg.solver);
    double sld_floor = weighted_inverse_objective(sld_fisher(cfg.model, cfg.theta).matrix,
                                                  cfg.weight, cfg.solver.penalty);
    std::cout << "C(G) = " << format_g17(res.value) << " (SLD floor "
              << format_g17(sld_floor) << ", gap estimate " << format_g17(res.gap_estimate)
              << ", outcomes " << res.outcomes_used << ", evaluations " << res.evaluations
              << ")\n";
    json results{{"bound", bound_to_json(res)}, {"sld_bound", sld_floor}};
    write_result_file(cfg, results, json::object());
    return 0;
}

int command_bound_n(const ResolvedConfig& cfg) {
    BoundSequence seq = quantum_cr_bound(cfg.model, cfg.theta, cfg.weight, cfg.n_copies,
                                         cfg.solver);
    json entries = json::array();
    for (const auto& entry : seq.entries) {
        std::cout << "n = " << entry.n << ": n*C^n = " << format_g17(entry.scaled_value) << "\n";
        entries.push_back(json{{"n", entry.n},
                               {"n_cn", entry.scaled_value},
                               {"cn", entry.result.value},
                               {"bound", bound_to_json(entry.result)}});
    }
    std::cout << "running min (upper bound for the collective limit) = "
              << format_g17(seq.liminf_upper_bound) << "\n";
    write_result_file(cfg,
                      json{{"sequence", entries}, {"liminf_upper_bound", seq.liminf_upper_bound}},
                      json::object());
    return 0;
}

int command_simulate(const ResolvedConfig& cfg) {
    BoundResult anchor = cr_bound(cfg.model, cfg.theta, cfg.weight, cfg.solver);
    AdaptiveStrategy strategy =
        solver_backed_strategy(cfg.model, cfg.weight, preliminary_povm_for(cfg), anchor,
                               cfg.selector_solver, cfg.selector_pitch, cfg.solver.eps_prime);
    StudyReferences refs;
    refs.c_bound = anchor.value;
    refs.sld_bound = weighted_inverse_objective(sld_fisher(cfg.model, cfg.theta).matrix,
                                                cfg.weight, cfg.solver.penalty);
    std::vector<MseReport> reports = mse_study(cfg.model, cfg.theta, strategy, cfg.n_grid,
                                               cfg.trials, cfg.sim_seed, cfg.weight, refs,
                                               cfg.workers);
    json out = json::array();
    long failed = 0;
    for (const MseReport& r : reports) {
        std::cout << "n = " << r.n << ": n*tr(G V) = " << format_g17(r.scaled_value)
                  << " +- " << format_g17(static_cast<double>(r.n) * r.mc_stderr)
                  << " (C = " << format_g17(r.c_bound) << ")\n";
        out.push_back(report_to_json(r));
        failed += r.failed_trials;
    }
    if (!cfg.table_path.empty()) emit_study_table(reports, cfg.table_path);
    write_result_file(cfg, json{{"reports", out}}, json{{"failed_trials", failed}});
    return 0;
}

int command_collective(const ResolvedConfig& cfg) {
    std::vector<MseReport> reports = block_collective_study(
        cfg.model, cfg.theta, cfg.weight, cfg.n1, cfg.n2_grid, cfg.trials, cfg.sim_seed,
        cfg.solver, cfg.selector_solver, cfg.selector_pitch, cfg.workers);
    json out = json::array();
    long failed = 0;
    for (const MseReport& r : reports) {
        std::cout << "n = " << r.n << " (blocks of " << cfg.n1
                  << "): n*tr(G V) = " << format_g17(r.scaled_value);
        if (r.n_cn_bound) std::cout << " (n1*C^n1 = " << format_g17(*r.n_cn_bound) << ")";
        std::cout << "\n";
        out.push_back(report_to_json(r));
        failed += r.failed_trials;
    }
    if (!cfg.table_path.empty()) emit_study_table(reports, cfg.table_path);
    write_result_file(cfg, json{{"reports", out}}, json{{"failed_trials", failed}});
    return 0;
}

int command_diagnostics(const ResolvedConfig& cfg) {
    BoundResult anchor = cr_bound(cfg.model, cfg.theta, cfg.weight, cfg.solver);
    AdaptiveStrategy strategy =
        solver_backed_strategy(cfg.model, cfg.weight, preliminary_povm_for(cfg), anchor,
                               cfg.selector_solver, cfg.selector_pitch, cfg.solver.eps_prime);
    RegularityReport report = regularity_diagnostics(cfg.model, cfg.theta, strategy, cfg.diag_n,
                                                     cfg.trials, cfg.sim_seed, cfg.weight,
                                                     cfg.workers);
    json consistency = json::array();
    for (const auto& point : report.consistency) {
        consistency.push_back(json{{"delta", point.delta}, {"prob_exceed", point.prob_exceed}});
        std::cout << "P(|check - true| > " << point.delta << ") = " << point.prob_exceed << "\n";
    }
    json bins = json::array();
    for (const auto& bin : report.conditional_mse) {
        bins.push_back(json{{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count},
                            {"scaled_mse", bin.scaled_mse}});
    }
    json continuity = json::array();
    for (const auto& point : report.continuity) {
        continuity.push_back(json{{"theta_prime", vector_to_json(point.theta_prime)},
                                  {"objective", point.objective}});
    }
    write_result_file(cfg,
                      json{{"consistency", consistency},
                           {"conditional_mse", bins},
                           {"continuity", continuity},
                           {"n", report.n},
                           {"trials", report.trials}},
                      json{{"failed_trials", report.failed_trials}});
    return 0;
}

} // namespace

std::string render_study_table(const std::vector<MseReport>& reports) {
    std::vector<const MseReport*> ordered;
    ordered.reserve(reports.size());
    for (const MseReport& r : reports) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const MseReport* a, const MseReport* b) { return a->n < b->n; });
    std::ostringstream out;
    out << "n,trials,trace_mse,n_trace_mse,mc_stderr,c_bound,sld_bound,n_cn_bound\n";
    for (const MseReport* r : ordered) {
        out << r->n << "," << r->trials << "," << format_g17(r->trace_mse) << ","
            << format_g17(r->scaled_value) << "," << format_g17(r->mc_stderr) << ","
            << format_g17(r->c_bound) << "," << format_g17(r->sld_bound) << ",";
        if (r->n_cn_bound) out << format_g17(*r->n_cn_bound);
        out << "\n";
    }
    return out.str();
}

void emit_study_table(const std::vector<MseReport>& reports, const std::string& path) {
    if (reports.empty()) {
        throw NoData("no study reports to emit");
    }
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open study table '" + path + "'");
    }
    out << render_study_table(reports);
    if (!out) {
        throw IoError("failed writing study table '" + path + "'");
    }
}

int run_main(const std::vector<std::string>& args) {
    CLI::App app{"Cramer-Rao bound computation and adaptive estimation studies "
                 "for finite-dimensional quantum models"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path, table_path, theta_arg, model_arg;
    long trials_arg = -1;
    long long seed_arg = -1;
    int workers_arg = -1;
    int n_arg = -1;
    int n1_arg = -1;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "check a config (model, theta, weight, measurements) and exit"},
        {"fisher", "classical and SLD Fisher information at theta"},
        {"bound", "measurement-optimized Cramer-Rao bound C(G)"},
        {"bound-n", "n-copy bounds C^n and the sequence n*C^n"},
        {"simulate", "two-stage adaptive Monte Carlo study over a sample-size grid"},
        {"collective", "block-collective study over groups of n1 copies"},
        {"diagnostics", "empirical regularity diagnostics for the two-stage scheme"}};
    for (const auto& [name, blurb] : commands) {
        CLI::App* sub = app.add_subcommand(name, blurb);
        sub->add_option("--config", config_path, "JSON config document");
        sub->add_option("--set", overrides, "override config fields, e.g. --set solver.seed=7");
        sub->add_option("--out", out_path, "result JSON path");
        sub->add_option("--table", table_path, "study table CSV path");
        sub->add_option("--theta", theta_arg, "comma-separated parameter values");
        sub->add_option("--model", model_arg, "registry model name");
        sub->add_option("--trials", trials_arg, "Monte Carlo trials");
        sub->add_option("--seed", seed_arg, "simulation master seed");
        sub->add_option("--workers", workers_arg, "worker threads (0 = auto)");
        sub->add_option("--n", n_arg, "copy count (bound-n) or sample count (diagnostics)");
        sub->add_option("--n1", n1_arg, "block size for collective studies");
    }

    try {
        std::vector<const char*> argv;
        argv.push_back("qcrb");
        for (const std::string& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends.
            return app.exit(e);
        }
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::string command = app.get_subcommands().front()->get_name();

    try {
        json merged = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                throw ConfigError("cannot open config file '" + config_path + "'");
            }
            try {
                in >> merged;
            } catch (const json::exception& e) {
                throw ConfigError(std::string("config parse failure: ") + e.what());
            }
            if (!merged.is_object()) {
                throw ConfigError("config document must be a JSON object");
            }
        }

        json recorded_overrides = json::array();
        auto apply_override = [&](const std::string& pointer, const json& value,
                                  const std::string& display) {
            try {
                merged[json::json_pointer(pointer)] = value;
            } catch (const json::exception& e) {
                throw ConfigError("override '" + display + "': " + e.what());
            }
            recorded_overrides.push_back(display);
        };
        for (const std::string& item : overrides) {
            auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("override '" + item + "' is not key=value");
            }
            std::string key = item.substr(0, eq);
            std::string raw = item.substr(eq + 1);
            std::string pointer = "/" + key;
            for (auto& c : pointer) {
                if (c == '.') c = '/';
            }
            json value;
            try {
                value = json::parse(raw);
            } catch (const json::exception&) {
                value = raw;  // plain string
            }
            apply_override(pointer, value, item);
        }
        if (!model_arg.empty()) apply_override("/model/name", model_arg, "model=" + model_arg);
        if (!theta_arg.empty()) {
            json values = json::array();
            std::stringstream ss(theta_arg);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    values.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ConfigError("cannot parse theta component '" + tok + "'");
                }
            }
            apply_override("/theta", values, "theta=" + theta_arg);
        }
        if (trials_arg >= 0) {
            apply_override("/simulation/trials", trials_arg,
                           "simulation.trials=" + std::to_string(trials_arg));
        }
        if (seed_arg >= 0) {
            apply_override("/simulation/seed", static_cast<std::uint64_t>(seed_arg),
                           "simulation.seed=" + std::to_string(seed_arg));
        }
        if (workers_arg >= 0) {
            apply_override("/workers", workers_arg, "workers=" + std::to_string(workers_arg));
        }
        if (n_arg >= 0) {
            if (command == "diagnostics") {
                apply_override("/simulation/n", n_arg, "simulation.n=" + std::to_string(n_arg));
            } else {
                apply_override("/n", n_arg, "n=" + std::to_string(n_arg));
            }
        }
        if (n1_arg >= 0) {
            apply_override("/simulation/n1", n1_arg, "simulation.n1=" + std::to_string(n1_arg));
        }
        if (!out_path.empty()) apply_override("/output/result", out_path, "output.result=" + out_path);
        if (!table_path.empty()) apply_override("/output/table", table_path, "output.table=" + table_path);
        merged["command"] = command;
        merged["overrides"] = recorded_overrides;

        ResolvedConfig cfg = resolve_config(merged, command);

        if (command == "validate") return command_validate(cfg);
        if (command == "fisher") return command_fisher(cfg);
        if (command == "bound") return command_bound(cfg);
        if (command == "bound-n") return command_bound_n(cfg);
        if (command == "simulate") return command_simulate(cfg);
        if (command == "collective") return command_collective(cfg);
        if (command == "diagnostics") return command_diagnostics(cfg);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace qcrb
