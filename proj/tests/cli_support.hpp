#pragma once

// Helpers for driving the command-line front end in-process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mvb/cli.hpp"

namespace cli_support {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

inline Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = mvb::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mvb_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

/// Contents of tests/golden/<name>. With MVB_UPDATE_GOLDEN set, `actual`
/// is written there first.
inline std::string golden(const std::string& name, const std::string& actual) {
    const std::filesystem::path p = std::filesystem::path(MVB_GOLDEN_DIR) / name;
    if (std::getenv("MVB_UPDATE_GOLDEN") != nullptr) spit(p, actual);
    if (!std::filesystem::exists(p)) return "<missing golden file " + p.string() + ">";
    return slurp(p);
}

struct GoldenCase {
    std::string file;
    std::vector<std::string> args;
};

/// Writes the inputs into `dir` and lists every command whose output is
/// pinned by a file in tests/golden.
inline std::vector<GoldenCase> golden_cases(const TempDir& dir) {
    spit(dir.file("uniform.json"), R"({"k": 2, "probs": [0.25, 0.25, 0.25, 0.25]})");
    spit(dir.file("pair.json"), R"({"1": 0.5, "2": -0.25, "1,2": 1.5})");
    spit(dir.file("p.json"), R"({"k": 2, "probs": [0.4, 0.3, 0.2, 0.1]})");
    spit(dir.file("model.json"), R"({"k": 3, "p": 1, "coef": {
        "1": [0.5, 0.0], "2": [0.0, 0.0], "1,2": [0.8, -0.1], "3": [0.0, 0.0],
        "1,3": [0.01, 0.3], "2,3": [0.0, 0.0], "1,2,3": [0.0, 0.2]}})");
    const std::string model = dir.file("model.json");
    return {
        {"counts_1_10.csv", {"counts"}},
        {"counts_1_5.txt", {"counts", "--k", "1-5", "--format", "text"}},
        {"convert_uniform_natural.json", {"convert", "--input", dir.file("uniform.json")}},
        {"convert_pair_ising.json", {"convert", "--input", dir.file("pair.json"), "--to", "ising"}},
        {"sample_k2_seed42.csv",
         {"sample", "--input", dir.file("p.json"), "--n", "25", "--seed", "42"}},
        {"structure_at_1.json", {"structure", "--input", model, "--tol", "0.05", "--at", "1"}},
        {"structure_at_1.dot",
         {"structure", "--input", model, "--tol", "0.05", "--at", "1", "--format", "dot"}},
    };
}

/// Natural parameters of the planted-edge model: main effects plus f^12.
inline const char* kPlantedEdgeModel = R"({"1": 0.2, "2": -0.2, "3": 0.1, "1,2": 1.2})";
inline constexpr const char* kPlantedEdgeSeed = "20240601";
inline constexpr const char* kPlantedEdgeN = "200000";

}  // namespace cli_support
