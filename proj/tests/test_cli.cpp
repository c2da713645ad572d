#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cli_support.hpp"
#include "mvb/io.hpp"

using namespace cli_support;

namespace {

bool has_prefix(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

int line_count(const std::string& s) {
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("counts reproduces the parameter-count table") {
    const auto r = run({"counts", "--k", "3"});
    CHECK(r.code == 0);
    CHECK(r.out == "k,mvb,ising,gaussian\n3,7,6,9\n");
    const auto all = run({"counts"});
    CHECK(all.out.find("\n1,1,1,2\n") != std::string::npos);
    CHECK(all.out.find("\n2,3,3,5\n") != std::string::npos);
    CHECK(all.out.find("\n10,1023,55,65\n") != std::string::npos);
}

TEST_CASE("convert between parameterizations") {
    TempDir dir("convert");
    spit(dir.file("uniform.json"), R"({"k": 2, "probs": [0.25, 0.25, 0.25, 0.25]})");
    const auto r = run({"convert", "--input", dir.file("uniform.json")});
    CHECK(r.code == 0);
    const auto f = mvb::natural_from_json(r.out);
    for (double v : f.values()) CHECK(v == 0.0);

    // natural -> general -> natural through files
    spit(dir.file("nat.json"), R"({"1": 0.3, "2": -1.1, "1,2": 0.7, "3": 2.0, "1,2,3": -0.4})");
    const auto forward =
        run({"convert", "--input", dir.file("nat.json"), "--output", dir.file("gen.json")});
    CHECK(forward.code == 0);
    const auto backward =
        run({"convert", "--input", dir.file("gen.json"), "--output", dir.file("back.json")});
    CHECK(backward.code == 0);
    const auto a = mvb::natural_from_json(slurp(dir.file("nat.json")));
    const auto b = mvb::natural_from_json(slurp(dir.file("back.json")));
    REQUIRE(a.dim() == b.dim());
    for (std::size_t m = 0; m < a.values().size(); ++m) {
        CHECK(std::abs(a.values()[m] - b.values()[m]) <= 1e-10);
    }

    // zero-probability cell: natural parameters do not exist
    spit(dir.file("degenerate.json"), R"({"k": 1, "probs": [0.0, 1.0]})");
    const auto bad = run({"convert", "--input", dir.file("degenerate.json")});
    CHECK(bad.code == 2);
    CHECK(has_prefix(bad.err, "ERROR:2: "));
    CHECK(run({"convert", "--input", dir.file("degenerate.json"), "--to", "general"}).code == 0);

    spit(dir.file("clique.json"), R"({"1,2,3": 0.2})");
    const auto not_pairwise = run({"convert", "--input", dir.file("clique.json"), "--to", "ising"});
    CHECK(not_pairwise.code == 1);
    CHECK(not_pairwise.err.find("not pairwise-representable") != std::string::npos);
}

TEST_CASE("sample and density") {
    TempDir dir("sample");
    spit(dir.file("p.json"), R"({"k": 2, "probs": [0.4, 0.3, 0.2, 0.1]})");
    const auto r = run({"sample", "--input", dir.file("p.json"), "--n", "25", "--seed", "42"});
    CHECK(r.code == 0);
    CHECK(line_count(r.out) == 26);
    CHECK(has_prefix(r.out, "y1,y2\n"));
    CHECK(run({"sample", "--input", dir.file("p.json"), "--n", "25", "--seed", "42"}).out == r.out);
    CHECK(run({"sample", "--input", dir.file("p.json"), "--n", "25", "--seed", "43"}).out != r.out);

    const auto missing_seed = run({"sample", "--input", dir.file("p.json"), "--n", "5"});
    CHECK(missing_seed.code == 1);
    CHECK(has_prefix(missing_seed.err, "ERROR:1: "));

    const auto d = run({"density", "--input", dir.file("p.json"), "--y", "0,1"});
    CHECK(d.code == 0);
    CHECK(d.out == "0.2\n");
    spit(dir.file("f.json"), R"({"1": 0.0, "2": 0.0})");
    CHECK(run({"density", "--input", dir.file("f.json"), "--y", "1,1"}).out == "0.25\n");
    CHECK(run({"density", "--input", dir.file("p.json"), "--y", "1"}).code == 1);
    CHECK(run({"density", "--input", dir.file("p.json"), "--y", "1,2"}).code == 1);
}

TEST_CASE("structure from a model file") {
    TempDir dir("structure");
    spit(dir.file("model.json"), R"({"k": 3, "p": 1, "coef": {
        "1": [0.5, 0.0], "2": [0.0, 0.0], "1,2": [0.8, -0.1], "3": [0.0, 0.0],
        "1,3": [0.01, 0.3], "2,3": [0.0, 0.0], "1,2,3": [0.0, 0.2]}})");
    const auto at_zero = run({"structure", "--input", dir.file("model.json"), "--tol", "0.05"});
    CHECK(at_zero.code == 0);
    CHECK(at_zero.out == "{\"nodes\":[1],\"edges\":[[1,2]],\"cliques\":[]}\n");
    CHECK(run({"structure", "--input", dir.file("model.json"), "--at", "1,2"}).code == 1);
    CHECK(run({"structure", "--input", dir.file("model.json"), "--at", "x"}).code == 1);
    CHECK(run({"structure", "--input", dir.file("model.json"), "--format", "csv"}).code == 1);
}

TEST_CASE("fit, fit-l1 and path on a small dataset") {
    TempDir dir("fit");
    std::string data = "y1,y2,x1\n";
    // deterministic, non-separable rows
    for (int i = 0; i < 60; ++i) {
        const double x = (i % 12) / 6.0 - 1.0;
        const int y1 = (i * 7 % 5) < 2 ? 1 : 0;
        const int y2 = (i * 3 % 4) == 0 || (i % 9 == 1) ? 1 : 0;
        data += std::to_string(y1) + "," + std::to_string(y2) + "," + std::to_string(x) + "\n";
    }
    spit(dir.file("d.csv"), data);

    const auto f = run({"fit", "--input", dir.file("d.csv"), "--output", dir.file("m.json")});
    CHECK(f.code == 0);
    CHECK(f.out.empty());
    const auto model = mvb::model_from_json(slurp(dir.file("m.json")));
    CHECK(model.converged);
    CHECK(run({"fit", "--input", dir.file("d.csv")}).out == slurp(dir.file("m.json")));
    CHECK(run({"fit", "--input", dir.file("d.csv"), "--threads", "4"}).out ==
          slurp(dir.file("m.json")));

    const auto l1 = run({"fit-l1", "--input", dir.file("d.csv"), "--lambda", "0.01"});
    CHECK(l1.code == 0);
    CHECK(l1.out.find("\"kkt\"") != std::string::npos);
    CHECK(l1.out.find("\"satisfied\": true") != std::string::npos);
    CHECK(mvb::model_from_json(l1.out).k() == 2);

    const auto path = run({"path", "--input", dir.file("d.csv"), "--grid", "6", "--model-output",
                           dir.file("best.json")});
    CHECK(path.code == 0);
    CHECK(has_prefix(path.out, "lambda,nll,df,aic,bic\n"));
    CHECK(line_count(path.out) == 7);
    CHECK(mvb::model_from_json(slurp(dir.file("best.json"))).p() == 1);
}

TEST_CASE("error paths exit nonzero with the machine-readable prefix") {
    TempDir dir("errors");
    spit(dir.file("bad.csv"), "y1,y2,x1\n1,0,0.5\n2,0,1\n");
    spit(dir.file("empty.csv"), "");
    spit(dir.file("big.json"), R"({"16": 0.1})");
    Eigen::Index n = 40;
    std::string sep = "y1,x1\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        sep += std::string(i >= n / 2 ? "1" : "0") + "," + std::to_string(i - n / 2 + 0.5) + "\n";
    }
    spit(dir.file("separated.csv"), sep);

    struct Case {
        std::vector<std::string> args;
        int code;
        std::string fragment;
    };
    const std::vector<Case> cases = {
        {{}, 1, ""},
        {{"bogus"}, 1, ""},
        {{"fit"}, 1, "--input"},
        {{"fit", "--input", dir.file("nope.csv")}, 1, "cannot open"},
        {{"fit", "--input", dir.file("bad.csv")}, 1, "line 3, column y1"},
        {{"fit", "--input", dir.file("empty.csv")}, 1, "no data rows"},
        {{"fit", "--input", dir.file("separated.csv")}, 2, "complete separation suspected"},
        {{"fit", "--input", dir.file("bad.csv"), "--gtol", "-1"}, 1, ""},
        {{"fit-l1", "--input", dir.file("bad.csv")}, 1, "--lambda"},
        {{"fit-l1", "--input", dir.file("separated.csv"), "--lambda", "-0.1"}, 1, ""},
        {{"counts", "--k", "3-1"}, 1, "--k"},
        {{"counts", "--format", "dot"}, 1, ""},
        {{"density", "--input", dir.file("big.json"), "--y", "1"}, 1, "force"},
        {{"convert", "--input", dir.file("empty.csv")}, 1, "invalid JSON"},
        {{"sample", "--input", dir.file("big.json"), "--n", "2", "--seed", "1", "--force-large-k"},
         0, ""},
    };
    for (const auto& c : cases) {
        std::string joined;
        for (const auto& a : c.args) joined += a + " ";
        CAPTURE(joined);
        const auto r = run(c.args);
        CHECK(r.code == c.code);
        if (c.code != 0) {
            CHECK(has_prefix(r.err, "ERROR:" + std::to_string(c.code) + ": "));
            CHECK(line_count(r.err) == 1);
            CHECK(r.err.find(c.fragment) != std::string::npos);
        }
    }
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"fit", "--help"}).out.find("--input") != std::string::npos);
}

TEST_CASE("golden outputs are byte-stable") {
    TempDir dir("golden");
    for (const auto& c : golden_cases(dir)) {
        CAPTURE(c.file);
        const auto first = run(c.args);
        CHECK(first.code == 0);
        CHECK(first.out == golden(c.file, first.out));
        CHECK(run(c.args).out == first.out);
    }
}

TEST_CASE("planted edge survives the sample, fit, structure pipeline") {
    TempDir dir("pipeline");
    spit(dir.file("planted.json"), kPlantedEdgeModel);
    REQUIRE(run({"sample", "--input", dir.file("planted.json"), "--n", kPlantedEdgeN, "--seed",
                 kPlantedEdgeSeed, "--output", dir.file("d.csv")})
                .code == 0);
    REQUIRE(run({"fit", "--input", dir.file("d.csv"), "--output", dir.file("m.json")}).code == 0);
    const auto g = run({"structure", "--input", dir.file("m.json"), "--tol", "0.05"});
    CHECK(g.code == 0);
    CHECK(g.out == "{\"nodes\":[1,2,3],\"edges\":[[1,2]],\"cliques\":[]}\n");
    CHECK(g.out == golden("planted_edge_graph.json", g.out));
}
