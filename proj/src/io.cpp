#include "mvb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mvb {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

json parse(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
}

double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) throw std::invalid_argument(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw std::invalid_argument(where + ": not finite");
    return d;
}

int as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw std::invalid_argument(where + ": expected an integer");
    return v.get<int>();
}

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) {
        throw std::invalid_argument(std::string("missing field \"") + name + "\"");
    }
    return j.at(name);
}

// Canonical subset key within k nodes.
Subset subset_key(const std::string& key, int k) {
    Subset tau = parse_subset(key, k);
    if (to_string(tau) != key) {
        throw std::invalid_argument("subset key \"" + key + "\" is not in canonical form \"" +
                                    to_string(tau) + "\"");
    }
    return tau;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Index parsed from "y3" / "x12"; nullopt when the name has another shape.
std::optional<int> column_index(const std::string& name, char prefix) {
    if (name.size() < 2 || name[0] != prefix || name[1] == '0') return std::nullopt;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), v);
    if (ec != std::errc() || ptr != name.data() + name.size() || v < 1) return std::nullopt;
    return v;
}

std::optional<double> parse_number(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string to_json(const NaturalParams& f) {
    ordered_json j = ordered_json::object();
    for (Mask tau = 1; tau < lattice_size(f.dim()); ++tau) {
        j[to_string(Subset(tau, f.dim()))] = f[tau];
    }
    return dump(j);
}

std::string to_json(const GeneralParams& p) {
    ordered_json j;
    j["k"] = p.dim();
    j["probs"] = p.probs();
    return dump(j);
}

std::string to_json(const MvbGlmModel& model) {
    ordered_json j;
    j["k"] = model.k();
    j["p"] = model.p();
    ordered_json coef = ordered_json::object();
    for (Mask tau = 1; tau < lattice_size(model.k()); ++tau) {
        const Eigen::VectorXd c = model.coef().row(tau - 1).transpose();
        coef[to_string(Subset(tau, model.k()))] =
            std::vector<double>(c.data(), c.data() + c.size());
    }
    j["coef"] = std::move(coef);
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    j["final_nll"] = model.final_nll;
    return dump(j);
}

std::string to_json(const IsingParams& theta) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < theta.dim(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(theta.dim()));
        for (int j = 0; j < theta.dim(); ++j) row[j] = theta.theta()(i, j);
        rows.push_back(row);
    }
    ordered_json j;
    j["theta"] = std::move(rows);
    return dump(j);
}

NaturalParams natural_from_json(std::string_view text, bool force_large) {
    const json j = parse(text);
    if (!j.is_object() || j.empty()) {
        throw std::invalid_argument("natural parameters must be a nonempty JSON object");
    }
    int k = 0;
    for (const auto& [key, value] : j.items()) {
        for (int node : parse_node_list(key)) k = std::max(k, node);
    }
    check_dimension(k, force_large);
    std::vector<double> f(lattice_size(k), 0.0);
    for (const auto& [key, value] : j.items()) {
        const Subset tau = subset_key(key, k);
        f[tau.mask()] = as_double(value, "f^{" + key + "}");
    }
    return NaturalParams(k, std::move(f));
}

GeneralParams general_from_json(std::string_view text, bool force_large) {
    const json j = parse(text);
    const int k = as_int(field(j, "k"), "k");
    check_dimension(k, force_large);
    const json& probs = field(j, "probs");
    if (!probs.is_array() || probs.size() != lattice_size(k)) {
        throw std::invalid_argument("\"probs\" must be an array of 2^k numbers");
    }
    std::vector<double> p;
    p.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        p.push_back(as_double(probs[i], "probs[" + std::to_string(i) + "]"));
    }
    return GeneralParams(k, std::move(p));
}

MvbGlmModel model_from_json(std::string_view text, bool force_large) {
    const json j = parse(text);
    const int k = as_int(field(j, "k"), "k");
    const int p = as_int(field(j, "p"), "p");
    check_dimension(k, force_large);
    if (p < 0) throw std::invalid_argument("p must be nonnegative");
    const json& coef = field(j, "coef");
    if (!coef.is_object()) throw std::invalid_argument("\"coef\" must be an object");
    Eigen::MatrixXd c(static_cast<Eigen::Index>(lattice_size(k) - 1), p + 1);
    std::vector<bool> seen(lattice_size(k), false);
    for (const auto& [key, value] : coef.items()) {
        const Subset tau = subset_key(key, k);
        if (!value.is_array() || value.size() != static_cast<std::size_t>(p + 1)) {
            throw std::invalid_argument("coef[\"" + key + "\"] must hold p+1 numbers");
        }
        for (int i = 0; i <= p; ++i) {
            c(tau.mask() - 1, i) = as_double(value[static_cast<std::size_t>(i)],
                                             "coef[\"" + key + "\"][" + std::to_string(i) + "]");
        }
        seen[tau.mask()] = true;
    }
    for (Mask tau = 1; tau < lattice_size(k); ++tau) {
        if (!seen[tau]) {
            throw std::invalid_argument("coef is missing subset \"" + to_string(Subset(tau, k)) +
                                        "\"");
        }
    }
    MvbGlmModel model(k, std::move(c));
    if (j.contains("converged")) {
        if (!j.at("converged").is_boolean()) {
            throw std::invalid_argument("converged: expected a boolean");
        }
        model.converged = j.at("converged").get<bool>();
    }
    if (j.contains("iterations")) model.iterations = as_int(j.at("iterations"), "iterations");
    if (j.contains("final_nll")) model.final_nll = as_double(j.at("final_nll"), "final_nll");
    return model;
}

IsingParams ising_from_json(std::string_view text) {
    const json j = parse(text);
    const json& rows = field(j, "theta");
    if (!rows.is_array() || rows.empty()) throw std::invalid_argument("\"theta\" must be a matrix");
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd t(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != k) {
            throw std::invalid_argument("\"theta\" must be square");
        }
        for (Eigen::Index m = 0; m < k; ++m) {
            t(i, m) = as_double(row[static_cast<std::size_t>(m)], "theta");
        }
    }
    return IsingParams(std::move(t));
}

JsonKind detect_json_kind(std::string_view text) {
    const json j = parse(text);
    if (!j.is_object()) throw std::invalid_argument("parameter file must hold a JSON object");
    if (j.contains("coef")) return JsonKind::model;
    if (j.contains("probs")) return JsonKind::general;
    if (j.contains("theta")) return JsonKind::ising;
    return JsonKind::natural;
}

Dataset read_csv(std::istream& in, bool force_large) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        header = split_fields(line);
        break;
    }
    if (header.empty()) throw std::invalid_argument("no data rows");

    // column position of y_j / x_j
    std::map<int, std::size_t> ycol, xcol;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        auto& target = name.starts_with('y') ? ycol : xcol;
        const auto idx = column_index(name, name.starts_with('y') ? 'y' : 'x');
        if (!idx) {
            throw std::invalid_argument("header column " + std::to_string(c + 1) + " \"" + name +
                                        "\" is not of the form yN or xN");
        }
        if (!target.emplace(*idx, c).second) {
            throw std::invalid_argument("duplicate header column \"" + name + "\"");
        }
    }
    const int k = static_cast<int>(ycol.size());
    const int p = static_cast<int>(xcol.size());
    if (k == 0) throw std::invalid_argument("header has no outcome columns (y1..yK)");
    if (ycol.rbegin()->first != k) throw std::invalid_argument("outcome columns must be y1..yK");
    if (p > 0 && xcol.rbegin()->first != p) {
        throw std::invalid_argument("covariate columns must be x1..xp");
    }
    check_dimension(k, force_large);

    std::vector<Outcome> ys;
    std::vector<double> xs;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
        }
        auto where = [&](std::size_t c) {
            return "line " + std::to_string(line_no) + ", column " + header[c];
        };
        Mask bits = 0;
        for (const auto& [j, c] : ycol) {
            const std::string& v = fields[c];
            if (v.empty()) throw std::invalid_argument(where(c) + ": missing value");
            const auto num = parse_number(v);
            if (!num || (*num != 0.0 && *num != 1.0)) {
                throw std::invalid_argument(where(c) + ": outcome \"" + v + "\" is not 0 or 1");
            }
            if (*num == 1.0) bits |= Mask{1} << (j - 1);
        }
        ys.emplace_back(bits, k);
        for (const auto& [j, c] : xcol) {
            const std::string& v = fields[c];
            if (v.empty()) throw std::invalid_argument(where(c) + ": missing value");
            const auto num = parse_number(v);
            if (!num) {
                throw std::invalid_argument(where(c) + ": covariate \"" + v +
                                            "\" is not a finite number");
            }
            xs.push_back(*num);
        }
    }
    if (ys.empty()) throw std::invalid_argument("no data rows");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(ys.size()), p);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = xs[static_cast<std::size_t>(i * p + j)];
    }
    return Dataset(k, std::move(ys), std::move(x));
}

std::string outcomes_to_csv(const std::vector<Outcome>& rows, int k) {
    std::string out;
    for (int j = 1; j <= k; ++j) out += (j > 1 ? ",y" : "y") + std::to_string(j);
    out += '\n';
    for (const auto& y : rows) {
        for (int j = 1; j <= k; ++j) {
            if (j > 1) out += ',';
            out += static_cast<char>('0' + y.value(j));
        }
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\" for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open \"" + path + "\" for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing \"" + path + "\"");
}

}  // namespace mvb
