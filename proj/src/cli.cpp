#include "mvb/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "format.hpp"
#include "mvb/io.hpp"
#include "mvb/ising.hpp"
#include "mvb/sparse.hpp"

namespace mvb::cli {

namespace {

struct Config {
    std::string input;
    std::string output;
    std::string model_output;
    double gtol = 1e-8;
    int max_iter = 0;  // 0: command default
    bool standardize = false;
    double lambda = 0.0;
    double ktol = 1e-6;
    int grid = 50;
    std::optional<std::uint64_t> seed;
    std::size_t n = 0;
    double tol = 0.0;
    std::string at;
    std::string y;
    std::string format;
    std::string to;
    std::string k_range = "1-10";
    int threads = 1;
    bool force_large = false;
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw std::invalid_argument(what + ": \"" + s + "\" is not a finite number");
    }
    return v;
}

int parse_int(const std::string& s, const std::string& what) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument(what + ": \"" + s + "\" is not an integer");
    }
    return v;
}

std::vector<double> parse_point(const std::string& text, std::size_t expected) {
    std::vector<double> x;
    if (!text.empty()) {
        for (const auto& part : split(text, ',')) x.push_back(parse_real(part, "--at"));
    }
    if (x.size() != expected) {
        throw std::invalid_argument("--at has " + std::to_string(x.size()) +
                                    " values, model expects " + std::to_string(expected));
    }
    return x;
}

Outcome parse_outcome(const std::string& text, int k) {
    std::vector<int> values;
    for (const auto& part : split(text, ',')) {
        if (part != "0" && part != "1") {
            throw std::invalid_argument("--y: \"" + part + "\" is not 0 or 1");
        }
        values.push_back(part == "1" ? 1 : 0);
    }
    if (static_cast<int>(values.size()) != k) {
        throw std::invalid_argument("--y has " + std::to_string(values.size()) +
                                    " values, distribution has k=" + std::to_string(k));
    }
    return Outcome::from_values(values);
}

Dataset load_dataset(const Config& cfg) {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open \"" + cfg.input + "\" for reading");
    return read_csv(in, cfg.force_large);
}

GeneralParams load_distribution(const std::string& text, bool force_large) {
    switch (detect_json_kind(text)) {
        case JsonKind::general:
            return general_from_json(text, force_large);
        case JsonKind::natural:
            return natural_to_general(natural_from_json(text, force_large));
        case JsonKind::ising:
            return natural_to_general(ising_to_mvb(ising_from_json(text)));
        case JsonKind::model:
            break;
    }
    throw std::invalid_argument("expected a parameter file, found a fitted model");
}

std::string with_fields(const std::string& model_json,
                        const std::function<void(nlohmann::ordered_json&)>& add) {
    auto j = nlohmann::ordered_json::parse(model_json);
    add(j);
    return j.dump(2) + "\n";
}

nlohmann::ordered_json kkt_json(const KktReport& rep, double ktol) {
    nlohmann::ordered_json j;
    j["satisfied"] = rep.satisfied;
    j["max_violation"] = rep.max_violation;
    j["ktol"] = ktol;
    return j;
}

void cmd_fit(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = load_dataset(cfg);
    FitOptions opts;
    opts.gtol = cfg.gtol;
    if (cfg.max_iter > 0) opts.max_iter = cfg.max_iter;
    opts.standardize = cfg.standardize;
    opts.threads = cfg.threads;
    opts.warn = [&](const std::string& w) { err << "WARNING: " << w << "\n"; };
    const MvbGlmModel model = fit(data, opts);
    if (!model.converged) {
        err << "WARNING: not converged after " << model.iterations << " iterations\n";
    }
    emit(to_json(model), cfg.output, out);
}

void cmd_fit_l1(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = load_dataset(cfg);
    L1Options opts;
    opts.ktol = cfg.ktol;
    if (cfg.max_iter > 0) opts.max_iter = cfg.max_iter;
    opts.threads = cfg.threads;
    const L1Fit res = fit_l1(data, PenaltySpec(data.k(), cfg.lambda), opts);
    if (!res.kkt.satisfied) {
        err << "WARNING: KKT violation " << format_double(res.kkt.max_violation)
            << " exceeds ktol\n";
    }
    emit(with_fields(to_json(res.model),
                     [&](nlohmann::ordered_json& j) {
                         j["lambda"] = cfg.lambda;
                         j["objective"] = res.objective;
                         j["kkt"] = kkt_json(res.kkt, cfg.ktol);
                     }),
         cfg.output, out);
}

void cmd_path(const Config& cfg, std::ostream& out, std::ostream& err) {
    const Dataset data = load_dataset(cfg);
    PathOptions opts;
    opts.grid_size = cfg.grid;
    opts.l1.ktol = cfg.ktol;
    if (cfg.max_iter > 0) opts.l1.max_iter = cfg.max_iter;
    opts.l1.threads = cfg.threads;
    const PathResult path = regularization_path(data, opts);
    for (std::size_t i = 0; i < path.kkt.size(); ++i) {
        if (!path.kkt[i].satisfied) {
            err << "WARNING: KKT violation at lambda " << format_double(path.grid[i]) << "\n";
        }
    }
    emit(path_to_csv(path), cfg.output, out);
    if (!cfg.model_output.empty()) {
        const std::size_t best = path.best_bic();
        write_text_file(cfg.model_output,
                        with_fields(to_json(path.models[best]), [&](nlohmann::ordered_json& j) {
                            j["lambda"] = path.grid[best];
                            j["bic"] = path.scores[best].bic;
                            j["kkt"] = kkt_json(path.kkt[best], cfg.ktol);
                        }));
    }
}

void cmd_structure(const Config& cfg, std::ostream& out) {
    const std::string text = read_text_file(cfg.input);
    Graph g;
    const JsonKind kind = detect_json_kind(text);
    if (kind == JsonKind::model) {
        const MvbGlmModel model = model_from_json(text, cfg.force_large);
        if (cfg.at.empty()) {
            g = extract_graph(model, std::nullopt, cfg.tol);
        } else {
            const auto x = parse_point(cfg.at, static_cast<std::size_t>(model.p()));
            g = extract_graph(model, std::span<const double>(x), cfg.tol);
        }
    } else {
        if (!cfg.at.empty()) throw std::invalid_argument("--at applies only to fitted models");
        NaturalParams f;
        if (kind == JsonKind::natural) {
            f = natural_from_json(text, cfg.force_large);
        } else if (kind == JsonKind::ising) {
            f = ising_to_mvb(ising_from_json(text));
        } else {
            f = general_to_natural(general_from_json(text, cfg.force_large));
        }
        g = extract_graph(f, cfg.tol);
    }
    emit(cfg.format == "dot" ? graph_to_dot(g) : graph_to_json(g), cfg.output, out);
}

void cmd_sample(const Config& cfg, std::ostream& out) {
    if (!cfg.seed) throw std::invalid_argument("sample requires --seed");
    const GeneralParams p = load_distribution(read_text_file(cfg.input), cfg.force_large);
    emit(outcomes_to_csv(sample(p, cfg.n, *cfg.seed), p.dim()), cfg.output, out);
}

void cmd_density(const Config& cfg, std::ostream& out) {
    const GeneralParams p = load_distribution(read_text_file(cfg.input), cfg.force_large);
    emit(format_double(p.prob(parse_outcome(cfg.y, p.dim()))) + "\n", cfg.output, out);
}

void cmd_convert(const Config& cfg, std::ostream& out) {
    const std::string text = read_text_file(cfg.input);
    const JsonKind kind = detect_json_kind(text);
    if (kind == JsonKind::model) {
        throw std::invalid_argument("convert takes a parameter file, not a model");
    }
    std::string to = cfg.to;
    if (to.empty()) to = kind == JsonKind::general ? "natural" : "general";

    NaturalParams f;
    std::optional<GeneralParams> p;
    switch (kind) {
        case JsonKind::natural:
            f = natural_from_json(text, cfg.force_large);
            break;
        case JsonKind::general:
            p = general_from_json(text, cfg.force_large);
            if (to != "general") f = general_to_natural(*p);
            break;
        case JsonKind::ising:
            f = ising_to_mvb(ising_from_json(text));
            break;
        case JsonKind::model:
            break;
    }
    std::string result;
    if (to == "natural") {
        result = to_json(f);
    } else if (to == "general") {
        result = to_json(p ? *p : natural_to_general(f));
    } else {
        result = to_json(mvb_to_ising(f));
    }
    emit(result, cfg.output, out);
}

void cmd_counts(const Config& cfg, std::ostream& out) {
    int lo = 0, hi = 0;
    const auto dash = cfg.k_range.find('-');
    if (dash == std::string::npos) {
        lo = hi = parse_int(cfg.k_range, "--k");
    } else {
        lo = parse_int(cfg.k_range.substr(0, dash), "--k");
        hi = parse_int(cfg.k_range.substr(dash + 1), "--k");
    }
    if (lo < 1 || hi < lo || hi > 63) {
        throw std::invalid_argument("--k must be N or A-B with 1 <= A <= B <= 63");
    }
    std::string text;
    if (cfg.format == "text") {
        char line[128];
        std::snprintf(line, sizeof line, "%4s %22s %8s %10s\n", "k", "multivariate_bernoulli",
                      "ising", "gaussian");
        text += line;
        for (int k = lo; k <= hi; ++k) {
            const auto c = parameter_counts(k);
            std::snprintf(line, sizeof line, "%4d %22llu %8llu %10llu\n", k,
                          static_cast<unsigned long long>(c.mvb),
                          static_cast<unsigned long long>(c.ising),
                          static_cast<unsigned long long>(c.gaussian));
            text += line;
        }
    } else {
        text = "k,mvb,ising,gaussian\n";
        for (int k = lo; k <= hi; ++k) {
            const auto c = parameter_counts(k);
            text += std::to_string(k) + "," + std::to_string(c.mvb) + "," +
                    std::to_string(c.ising) + "," + std::to_string(c.gaussian) + "\n";
        }
    }
    emit(text, cfg.output, out);
}

std::string one_line(std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    while (!msg.empty() && msg.back() == ' ') msg.pop_back();
    return msg;
}

int fail(std::ostream& err, int code, const std::string& msg) {
    err << "ERROR:" << code << ": " << one_line(msg) << "\n";
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Config cfg;
    CLI::App app{"Multivariate Bernoulli distributions: fitting, structure, sampling", "mvb"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--threads", cfg.threads, "Worker threads for likelihood passes")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--force-large-k", cfg.force_large, "Allow 15 < k <= 20");
        sub->add_option("--output", cfg.output, "Output file (default: standard output)");
    };

    auto* fit_cmd = app.add_subcommand("fit", "Newton fit of the multivariate Bernoulli GLM");
    fit_cmd->add_option("--input", cfg.input, "CSV with columns y1..yK, x1..xp")->required();
    fit_cmd->add_option("--gtol", cfg.gtol, "Gradient tolerance")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--max-iter", cfg.max_iter, "Iteration limit (default 100)")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_flag("--standardize", cfg.standardize, "Fit on standardized covariates");
    common(fit_cmd);

    auto* l1_cmd = app.add_subcommand("fit-l1", "L1-penalized fit at one lambda");
    l1_cmd->add_option("--input", cfg.input, "CSV with columns y1..yK, x1..xp")->required();
    l1_cmd->add_option("--lambda", cfg.lambda, "Penalty on covariate coefficients")
        ->required()
        ->check(CLI::NonNegativeNumber);
    l1_cmd->add_option("--ktol", cfg.ktol, "KKT tolerance")->check(CLI::PositiveNumber);
    l1_cmd->add_option("--max-iter", cfg.max_iter, "Iteration limit (default 20000)")
        ->check(CLI::PositiveNumber);
    common(l1_cmd);

    auto* path_cmd = app.add_subcommand("path", "Regularization path with AIC/BIC scores");
    path_cmd->add_option("--input", cfg.input, "CSV with columns y1..yK, x1..xp")->required();
    path_cmd->add_option("--grid", cfg.grid, "Number of lambda values")->check(CLI::PositiveNumber);
    path_cmd->add_option("--model-output", cfg.model_output, "JSON file for the best-BIC model");
    path_cmd->add_option("--ktol", cfg.ktol, "KKT tolerance")->check(CLI::PositiveNumber);
    path_cmd->add_option("--max-iter", cfg.max_iter, "Iteration limit per fit")
        ->check(CLI::PositiveNumber);
    common(path_cmd);

    auto* structure_cmd =
        app.add_subcommand("structure", "Read the graph from a model or parameters");
    structure_cmd->add_option("--input", cfg.input, "Model or parameter JSON")->required();
    structure_cmd->add_option("--at", cfg.at, "Covariate point, e.g. \"0.3,1.2\"");
    structure_cmd->add_option("--tol", cfg.tol, "Threshold on |f|")->check(CLI::NonNegativeNumber);
    structure_cmd->add_option("--format", cfg.format, "json or dot")
        ->check(CLI::IsMember({"json", "dot"}));
    common(structure_cmd);

    auto* sample_cmd = app.add_subcommand("sample", "Draw outcomes from a parameter file");
    sample_cmd->add_option("--input", cfg.input, "Natural or general parameter JSON")->required();
    sample_cmd->add_option("--n", cfg.n, "Number of draws")->required();
    sample_cmd->add_option("--seed", cfg.seed, "Random seed");
    common(sample_cmd);

    auto* density_cmd = app.add_subcommand("density", "Probability of one outcome");
    density_cmd->add_option("--input", cfg.input, "Natural or general parameter JSON")->required();
    density_cmd->add_option("--y", cfg.y, "Outcome values, e.g. \"1,0,1\"")->required();
    common(density_cmd);

    auto* convert_cmd = app.add_subcommand("convert", "Convert between parameterizations");
    convert_cmd->add_option("--input", cfg.input, "Natural, general or Ising JSON")->required();
    convert_cmd->add_option("--to", cfg.to, "natural, general or ising")
        ->check(CLI::IsMember({"natural", "general", "ising"}));
    common(convert_cmd);

    auto* counts_cmd = app.add_subcommand("counts", "Parameter counts: MVB, Ising, Gaussian");
    counts_cmd->add_option("--k", cfg.k_range, "Dimension N or range A-B (default 1-10)");
    counts_cmd->add_option("--format", cfg.format, "csv or text")
        ->check(CLI::IsMember({"csv", "text"}));
    common(counts_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return fail(err, kExitUsage, e.what());
    }

    try {
        if (fit_cmd->parsed()) {
            cmd_fit(cfg, out, err);
        } else if (l1_cmd->parsed()) {
            cmd_fit_l1(cfg, out, err);
        } else if (path_cmd->parsed()) {
            cmd_path(cfg, out, err);
        } else if (structure_cmd->parsed()) {
            cmd_structure(cfg, out);
        } else if (sample_cmd->parsed()) {
            cmd_sample(cfg, out);
        } else if (density_cmd->parsed()) {
            cmd_density(cfg, out);
        } else if (convert_cmd->parsed()) {
            cmd_convert(cfg, out);
        } else if (counts_cmd->parsed()) {
            cmd_counts(cfg, out);
        }
    } catch (const NumericError& e) {
        return fail(err, kExitNumeric, e.what());
    } catch (const std::exception& e) {
        return fail(err, kExitUsage, e.what());
    }
    return kExitOk;
}

}  // namespace mvb::cli
