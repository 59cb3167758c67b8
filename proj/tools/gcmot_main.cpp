#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "gcmot/gcmot.hpp"

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest decimal that round-trips; locale-independent, so output bytes do
// not depend on the host environment.
std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, const char* flag) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw CliError(std::string(flag) + " expects a number, got '" + text + "'");
    return v;
}

// A parameter axis: a single value, or min:max:count for an even grid.
struct Range {
    double min = 0.0;
    double max = 0.0;
    int count = 1;
};

Range parse_range(const std::string& text, const char* flag) {
    if (text.empty()) throw CliError(std::string(flag) + " is required");
    std::vector<std::string> parts;
    std::size_t begin = 0;
    while (true) {
        const std::size_t colon = text.find(':', begin);
        if (colon == std::string::npos) {
            parts.push_back(text.substr(begin));
            break;
        }
        parts.push_back(text.substr(begin, colon - begin));
        begin = colon + 1;
    }
    Range r;
    if (parts.size() == 1) {
        r.min = r.max = parse_double(parts[0], flag);
        r.count = 1;
        return r;
    }
    if (parts.size() != 3)
        throw CliError(std::string(flag) + " expects VALUE or MIN:MAX:COUNT, got '" + text + "'");
    r.min = parse_double(parts[0], flag);
    r.max = parse_double(parts[1], flag);
    long long count = 0;
    const char* end = parts[2].data() + parts[2].size();
    auto [ptr, ec] = std::from_chars(parts[2].data(), end, count);
    if (ec != std::errc() || ptr != end || count < 1)
        throw CliError(std::string(flag) + " count must be a positive integer, got '" + parts[2] +
                       "'");
    if (!(r.min <= r.max))
        throw CliError(std::string(flag) + " range must have min <= max, got '" + text + "'");
    r.count = static_cast<int>(count);
    return r;
}

std::vector<double> grid_values(const Range& r) {
    std::vector<double> out(static_cast<std::size_t>(r.count));
    if (r.count == 1) {
        out[0] = r.min;
        return out;
    }
    for (int i = 0; i < r.count; ++i)
        out[static_cast<std::size_t>(i)] =
            r.min + (r.max - r.min) * static_cast<double>(i) / static_cast<double>(r.count - 1);
    return out;
}

std::string range_text(const Range& r) {
    if (r.count == 1) return fmt(r.min);
    return fmt(r.min) + ":" + fmt(r.max) + ":" + std::to_string(r.count);
}

// Raw option values as parsed; ranges stay text until resolve() interprets
// them per command.
struct RunConfig {
    std::string alpha_text = "3.8";
    std::string eps_text;
    int n = 100;
    double delta = 1e-6;
    int steps = 2000;
    int transient = 1000;
    int window = -1;  // -1 resolves to steps - transient
    int n_init = 100;
    std::uint64_t init_seed = 1;
    std::uint64_t noise_seed = 12345;
    double noise_amp = 1e-12;
    std::string out;
    int workers = 1;
    bool with_state = false;
    std::string config_path;
};

// Handles to the parsed options, so the config loader can tell which flags
// the command line actually supplied.
struct OptionRefs {
    CLI::Option* alpha = nullptr;
    CLI::Option* eps = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* delta = nullptr;
    CLI::Option* steps = nullptr;
    CLI::Option* transient = nullptr;
    CLI::Option* window = nullptr;
    CLI::Option* n_init = nullptr;
    CLI::Option* init_seed = nullptr;
    CLI::Option* noise_seed = nullptr;
    CLI::Option* noise_amp = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* workers = nullptr;
    CLI::Option* state = nullptr;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Plain key=value file, one pair per line; '#' or ';' starts a comment line.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError("cannot read config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        const std::size_t pos = text.find('=');
        const std::string where = path + ":" + std::to_string(lineno);
        if (pos == std::string::npos)
            throw CliError("config " + where + ": expected key=value, got '" + text + "'");
        const std::string key = trim(text.substr(0, pos));
        if (key.empty()) throw CliError("config " + where + ": empty key");
        kv[key] = trim(text.substr(pos + 1));
    }
    return kv;
}

long long parse_int(const std::string& text, const std::string& what) {
    long long v = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw CliError(what + " expects an integer, got '" + text + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw CliError(what + " expects a nonnegative integer, got '" + text + "'");
    return v;
}

// Merges config-file values into cfg; any flag given on the command line
// keeps its value. Unknown keys are rejected so typos cannot silently fall
// back to defaults.
void apply_config(RunConfig& cfg, const OptionRefs& opts) {
    if (cfg.config_path.empty()) return;
    auto kv = read_config_file(cfg.config_path);
    const auto take = [&kv](const char* key, CLI::Option* opt, auto&& assign) {
        if (opt == nullptr) return;
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        if (opt->count() == 0) assign(it->second);
        kv.erase(it);
    };
    const std::string where = "config " + cfg.config_path;
    take("alpha", opts.alpha, [&](const std::string& v) { cfg.alpha_text = v; });
    take("eps", opts.eps, [&](const std::string& v) { cfg.eps_text = v; });
    take("n", opts.n,
         [&](const std::string& v) { cfg.n = static_cast<int>(parse_int(v, where + " key n")); });
    take("delta", opts.delta,
         [&](const std::string& v) { cfg.delta = parse_double(v, "config key delta"); });
    take("steps", opts.steps, [&](const std::string& v) {
        cfg.steps = static_cast<int>(parse_int(v, where + " key steps"));
    });
    take("transient", opts.transient, [&](const std::string& v) {
        cfg.transient = static_cast<int>(parse_int(v, where + " key transient"));
    });
    take("window", opts.window, [&](const std::string& v) {
        cfg.window = static_cast<int>(parse_int(v, where + " key window"));
    });
    take("n-init", opts.n_init, [&](const std::string& v) {
        cfg.n_init = static_cast<int>(parse_int(v, where + " key n-init"));
    });
    take("init-seed", opts.init_seed,
         [&](const std::string& v) { cfg.init_seed = parse_u64(v, where + " key init-seed"); });
    take("noise-seed", opts.noise_seed,
         [&](const std::string& v) { cfg.noise_seed = parse_u64(v, where + " key noise-seed"); });
    take("noise-amp", opts.noise_amp,
         [&](const std::string& v) { cfg.noise_amp = parse_double(v, "config key noise-amp"); });
    take("out", opts.out, [&](const std::string& v) { cfg.out = v; });
    take("workers", opts.workers, [&](const std::string& v) {
        cfg.workers = static_cast<int>(parse_int(v, where + " key workers"));
    });
    take("state", opts.state, [&](const std::string& v) {
        if (v == "true" || v == "1")
            cfg.with_state = true;
        else if (v == "false" || v == "0")
            cfg.with_state = false;
        else
            throw CliError(where + " key state expects true or false, got '" + v + "'");
    });
    if (!kv.empty()) throw CliError(where + ": unknown key '" + kv.begin()->first + "'");
}

struct Resolved {
    Range alpha;
    Range eps;
    int n = 0;
    double delta = 0.0;
    int steps = 0;
    int transient = 0;
    int window = 0;
    int n_init = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t noise_seed = 0;
    double noise_amp = 0.0;
    std::string out;
    int workers = 1;
    bool with_state = false;
};

Resolved resolve(const RunConfig& cfg, bool alpha_range_allowed, bool eps_range_allowed) {
    Resolved r;
    r.alpha = parse_range(cfg.alpha_text, "--alpha");
    r.eps = parse_range(cfg.eps_text, "--eps");
    if (!alpha_range_allowed && r.alpha.count != 1)
        throw CliError("--alpha must be a single value for this command");
    if (!eps_range_allowed && r.eps.count != 1)
        throw CliError("--eps must be a single value for this command");
    if (!(r.alpha.min >= 0.0 && r.alpha.max <= 4.0))
        throw CliError("--alpha values must lie in [0, 4]");
    if (!(r.eps.min >= 0.0 && r.eps.max <= 1.0)) throw CliError("--eps values must lie in [0, 1]");
    if (cfg.n < 1) throw CliError("--n must be at least 1");
    if (!(cfg.delta > 0.0)) throw CliError("--delta must be positive");
    if (cfg.steps < 1) throw CliError("--steps must be at least 1");
    if (cfg.transient < 0) throw CliError("--transient must be nonnegative");
    r.window = cfg.window < 0 ? cfg.steps - cfg.transient : cfg.window;
    if (r.window < 1) throw CliError("analysis window must be at least 1 step");
    if (cfg.transient + r.window > cfg.steps)
        throw CliError("--transient plus --window must not exceed --steps");
    if (cfg.n_init < 1) throw CliError("--n-init must be at least 1");
    if (!(cfg.noise_amp >= 0.0)) throw CliError("--noise-amp must be nonnegative");
    if (!(cfg.noise_amp < cfg.delta))
        throw CliError("--noise-amp must stay below --delta so noise cannot split a cluster bin");
    if (cfg.workers < 1) throw CliError("--workers must be at least 1");
    if (cfg.out.empty()) throw CliError("--out must not be empty");
    r.n = cfg.n;
    r.delta = cfg.delta;
    r.steps = cfg.steps;
    r.transient = cfg.transient;
    r.n_init = cfg.n_init;
    r.init_seed = cfg.init_seed;
    r.noise_seed = cfg.noise_seed;
    r.noise_amp = cfg.noise_amp;
    r.out = cfg.out;
    r.workers = cfg.workers;
    r.with_state = cfg.with_state;
    return r;
}

gcmot::GcmParams base_params(const Resolved& r, double alpha, double eps) {
    gcmot::GcmParams p;
    p.alpha = alpha;
    p.epsilon = eps;
    p.n_elements = r.n;
    p.delta = r.delta;
    p.noise_amplitude = r.noise_amp;
    p.init_seed = r.init_seed;
    p.noise_seed = r.noise_seed;
    return p;
}

// Runs work(0..tasks-1) on up to `workers` threads. Worker count never
// changes which task computes what, only the wall-clock ordering, and callers
// write results into preallocated slots, so output stays identical.
void run_parallel(int tasks, int workers, const std::function<void(int)>& work) {
    workers = std::max(1, std::min(workers, tasks));
    if (workers == 1) {
        for (int i = 0; i < tasks; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto body = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= tasks) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    }
    if (failure) std::rethrow_exception(failure);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError("cannot open output file '" + path + "'");
    return out;
}

// Self-describing preamble: every parameter that affects the numbers, in a
// fixed order. Worker count and output path are omitted on purpose, they
// cannot change a single byte of the data rows.
void write_provenance(std::ostream& os, const char* command, const Resolved& r, bool ensemble) {
    os << "# gcmot " << command << "\n";
    os << "# alpha=" << range_text(r.alpha) << "\n";
    os << "# eps=" << range_text(r.eps) << "\n";
    os << "# n=" << r.n << "\n";
    os << "# delta=" << fmt(r.delta) << "\n";
    os << "# steps=" << r.steps << "\n";
    os << "# transient=" << r.transient << "\n";
    os << "# window=" << r.window << "\n";
    os << "# noise_amp=" << fmt(r.noise_amp) << "\n";
    os << "# noise_seed=" << r.noise_seed << "\n";
    if (ensemble) {
        os << "# n_init=" << r.n_init << "\n";
        os << "# seed_schedule=init_seed " << r.init_seed << "+r for r in 0.." << (r.n_init - 1)
           << ", shared noise_seed " << r.noise_seed << "\n";
    } else {
        os << "# init_seed=" << r.init_seed << "\n";
    }
}

void cmd_trajectory(const Resolved& r) {
    const gcmot::GcmParams params = base_params(r, r.alpha.min, r.eps.min);
    gcmot::validate(params);
    std::ofstream out = open_output(r.out);
    write_provenance(out, "trajectory", r, false);

    out << "step";
    if (r.with_state)
        for (int i = 1; i <= r.n; ++i) out << ",x" << i;
    out << ",effective_dimension,ot_distance\n";

    auto write_row = [&](const gcmot::SystemState& state, int ed, const std::string& ot_text) {
        out << state.time;
        if (r.with_state)
            for (double v : state.values) out << ',' << fmt(v);
        out << ',' << ed << ',' << ot_text << '\n';
    };

    std::optional<gcmot::SystemState> prev_state;
    gcmot::ClusteringPattern prev_pattern;
    gcmot::simulate_stream(params, r.steps, [&](const gcmot::SystemState& state) {
        gcmot::ClusteringPattern pattern = gcmot::cluster_pattern(state, r.delta);
        if (prev_state) {
            const double d = pattern == prev_pattern
                                 ? 0.0
                                 : gcmot::w1_1d(gcmot::cluster_distribution(prev_pattern),
                                                gcmot::cluster_distribution(pattern));
            write_row(*prev_state, prev_pattern.cluster_count(), fmt(d));
        }
        prev_state = state;
        prev_pattern = std::move(pattern);
    });
    // the final step has no successor to compare against
    write_row(*prev_state, prev_pattern.cluster_count(), "");
    if (!out) throw CliError("write failed for '" + r.out + "'");
}

void cmd_sweep_eps(const Resolved& r) {
    const std::vector<double> eps = grid_values(r.eps);
    const int tasks = static_cast<int>(eps.size()) * r.n_init;
    std::vector<gcmot::RunStatistics> results(static_cast<std::size_t>(tasks));
    run_parallel(tasks, r.workers, [&](int idx) {
        const int ei = idx / r.n_init;
        const int run = idx % r.n_init;
        gcmot::GcmParams p = base_params(r, r.alpha.min, eps[static_cast<std::size_t>(ei)]);
        p.init_seed = r.init_seed + static_cast<std::uint64_t>(run);
        results[static_cast<std::size_t>(idx)] =
            gcmot::run_statistics(p, r.steps, r.transient, r.window);
    });

    std::ofstream out = open_output(r.out);
    write_provenance(out, "sweep-eps", r, true);
    out << "epsilon,init_seed,ot_time_avg,ruin_entropy\n";
    for (int idx = 0; idx < tasks; ++idx) {
        const int ei = idx / r.n_init;
        const int run = idx % r.n_init;
        const auto& stats = results[static_cast<std::size_t>(idx)];
        out << fmt(eps[static_cast<std::size_t>(ei)]) << ','
            << (r.init_seed + static_cast<std::uint64_t>(run)) << ',' << fmt(stats.ot_time_avg)
            << ',' << fmt(stats.ruin_entropy) << '\n';
    }
    if (!out) throw CliError("write failed for '" + r.out + "'");
}

void cmd_sweep_grid(const Resolved& r) {
    const std::vector<double> alphas = grid_values(r.alpha);
    const std::vector<double> epsilons = grid_values(r.eps);
    const int points = static_cast<int>(alphas.size() * epsilons.size());
    const int tasks = points * r.n_init;
    std::vector<gcmot::RunStatistics> results(static_cast<std::size_t>(tasks));
    run_parallel(tasks, r.workers, [&](int idx) {
        const int point = idx / r.n_init;
        const int run = idx % r.n_init;
        const int ai = point / static_cast<int>(epsilons.size());
        const int ei = point % static_cast<int>(epsilons.size());
        gcmot::GcmParams p = base_params(r, alphas[static_cast<std::size_t>(ai)],
                                         epsilons[static_cast<std::size_t>(ei)]);
        p.init_seed = r.init_seed + static_cast<std::uint64_t>(run);
        results[static_cast<std::size_t>(idx)] =
            gcmot::run_statistics(p, r.steps, r.transient, r.window);
    });

    std::string seeds_text;
    if (r.n_init == 1)
        seeds_text = "init=" + std::to_string(r.init_seed);
    else
        seeds_text = "init=" + std::to_string(r.init_seed) + ".." +
                     std::to_string(r.init_seed + static_cast<std::uint64_t>(r.n_init - 1));
    seeds_text += ";noise=" + std::to_string(r.noise_seed);

    std::ofstream out = open_output(r.out);
    write_provenance(out, "sweep-grid", r, true);
    out << "alpha,epsilon,ot_time_avg_mean,ruin_entropy_mean,modal_final_ed,phase_label,n_init,"
           "seeds\n";
    for (int point = 0; point < points; ++point) {
        const int ai = point / static_cast<int>(epsilons.size());
        const int ei = point % static_cast<int>(epsilons.size());
        double ot_sum = 0.0;
        double entropy_sum = 0.0;
        std::map<int, int> final_ed_counts;
        for (int run = 0; run < r.n_init; ++run) {
            const auto& stats = results[static_cast<std::size_t>(point * r.n_init + run)];
            ot_sum += stats.ot_time_avg;
            entropy_sum += stats.ruin_entropy;
            ++final_ed_counts[stats.final_ed];
        }
        const double ot_mean = ot_sum / static_cast<double>(r.n_init);
        const double entropy_mean = entropy_sum / static_cast<double>(r.n_init);
        int modal_ed = 0, modal_count = -1;
        for (const auto& [ed, count] : final_ed_counts)
            if (count > modal_count) {  // map order makes ties resolve to the smallest ED
                modal_ed = ed;
                modal_count = count;
            }
        const gcmot::Phase phase = gcmot::classify_phase(ot_mean, modal_ed, r.n);
        out << fmt(alphas[static_cast<std::size_t>(ai)]) << ','
            << fmt(epsilons[static_cast<std::size_t>(ei)]) << ',' << fmt(ot_mean) << ','
            << fmt(entropy_mean) << ',' << modal_ed << ',' << gcmot::phase_name(phase) << ','
            << r.n_init << ',' << seeds_text << '\n';
    }
    if (!out) throw CliError("write failed for '" + r.out + "'");
}

OptionRefs add_common_options(CLI::App* cmd, RunConfig& cfg) {
    OptionRefs o;
    o.alpha = cmd->add_option("--alpha", cfg.alpha_text,
                              "Logistic parameter, VALUE or MIN:MAX:COUNT")
                  ->capture_default_str();
    o.eps = cmd->add_option("--eps", cfg.eps_text, "Coupling strength, VALUE or MIN:MAX:COUNT")
                ->capture_default_str();
    o.n = cmd->add_option("--n", cfg.n, "Number of lattice elements")->capture_default_str();
    o.delta = cmd->add_option("--delta", cfg.delta, "Clustering resolution")->capture_default_str();
    o.steps =
        cmd->add_option("--steps", cfg.steps, "Total map iterations per run")->capture_default_str();
    o.transient = cmd->add_option("--transient", cfg.transient, "Steps discarded before analysis")
                      ->capture_default_str();
    o.window =
        cmd->add_option("--window", cfg.window, "Analysis window length (default: steps - transient)");
    o.n_init = cmd->add_option("--n-init", cfg.n_init, "Ensemble size over initial conditions")
                   ->capture_default_str();
    o.init_seed =
        cmd->add_option("--init-seed", cfg.init_seed, "Base initial-condition seed; run r uses base + r")
            ->capture_default_str();
    o.noise_seed =
        cmd->add_option("--noise-seed", cfg.noise_seed, "Seed of the noise stream shared by all runs")
            ->capture_default_str();
    o.noise_amp = cmd->add_option("--noise-amp", cfg.noise_amp, "Noise amplitude, uniform on [-amp, amp]")
                      ->capture_default_str();
    o.out = cmd->add_option("--out", cfg.out, "Output CSV path")->capture_default_str();
    o.workers = cmd->add_option("--workers", cfg.workers, "Worker threads for ensemble and sweep runs")
                    ->capture_default_str();
    cmd->add_option("--config", cfg.config_path,
                    "Read key=value options from a file; command-line flags win");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled logistic lattice: trajectories, coupling sweeps, and phase grids"};
    app.require_subcommand(1);

    RunConfig traj_cfg, eps_cfg, grid_cfg;
    traj_cfg.out = "trajectory.csv";
    eps_cfg.out = "sweep_eps.csv";
    eps_cfg.eps_text = "0:0.5:26";
    grid_cfg.out = "sweep_grid.csv";
    grid_cfg.eps_text = "0:0.5:11";

    CLI::App* traj = app.add_subcommand("trajectory", "One run, per-step series CSV");
    OptionRefs traj_opts = add_common_options(traj, traj_cfg);
    traj_opts.state =
        traj->add_flag("--state", traj_cfg.with_state, "Include the x(i) columns in the output");

    CLI::App* sweep_eps = app.add_subcommand(
        "sweep-eps", "Ensemble statistics per coupling value, one row per run");
    OptionRefs eps_opts = add_common_options(sweep_eps, eps_cfg);

    CLI::App* sweep_grid = app.add_subcommand(
        "sweep-grid", "Ensemble means and phase labels over an (alpha, eps) grid");
    OptionRefs grid_opts = add_common_options(sweep_grid, grid_cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (traj->parsed()) {
            apply_config(traj_cfg, traj_opts);
            if (traj_cfg.eps_text.empty()) throw CliError("trajectory requires --eps");
            cmd_trajectory(resolve(traj_cfg, false, false));
        } else if (sweep_eps->parsed()) {
            apply_config(eps_cfg, eps_opts);
            cmd_sweep_eps(resolve(eps_cfg, false, true));
        } else if (sweep_grid->parsed()) {
            apply_config(grid_cfg, grid_opts);
            cmd_sweep_grid(resolve(grid_cfg, true, true));
        }
    } catch (const std::exception& e) {
        std::cerr << "gcmot: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
