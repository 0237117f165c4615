#include <catch_amalgamated.hpp>

#include <bai/cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = bai::cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "bai_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string write(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kConfig = R"({
  "seed": 5, "trials": 40, "algorithms": ["UE", "SR", "SH", "RE", "RE-plugin"], "budgets": [8, 64, 256],
  "instances": [{"id": "sg", "family": {"gaussian": {"sigma2": 0.2}}, "K": 8,
                 "generator": "single_gap", "mu_star": 1.0, "delta": 0.5, "seed": 2}]
})";

}  // namespace

TEST_CASE("groups") {
    const auto r = run({"groups", "--K", "8"});
    CHECK(r.status == 0);
    CHECK(r.out == "group,size,members,dummies\nG1,4,2 4 6 8,\nG2,4,3 4 7 8,\nG3,4,5 6 7 8,\n");
    const auto padded = run({"groups", "--K", "5"});
    CHECK(padded.out.find("G3,4,5,6 7 8\n") != std::string::npos);
}

TEST_CASE("hardness of a single-gap instance") {
    const auto path = write("singlegap.json", R"({"family":{"gaussian":{"sigma2":0.1}},"K":16,"generator":"single_gap","mu_star":1,"delta":0.5})");
    const auto r = run({"hardness", "--instance", path});
    REQUIRE(r.status == 0);
    std::istringstream rows(r.out);
    std::string header, row;
    std::getline(rows, header);
    std::getline(rows, row);
    CHECK(header == "K,best_arm,H1,H1_suboptimal,H2,H3,H4,H4_tilde,four_K_H4,separability_margin,eta");
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    CHECK(f[2] == "64");
    CHECK(f[4] == "64");
    CHECK(f[5] == "64");
    CHECK(f[8] == "64");
    CHECK(f[10] == "1");
}

TEST_CASE("error reporting") {
    const auto missing = run({"simulate", "--config", "/nonexistent/exp.json"});
    CHECK(missing.status == 2);
    const auto j = nlohmann::json::parse(missing.err);
    CHECK(j.at("code") == "ConfigParse");
    CHECK(j.contains("message"));

    const auto unknown = run({"simulate", "--config", write("bad.json", R"({"budgets":[8],"instances":[],"extra":1})")});
    CHECK(unknown.status == 2);

    const auto bad_flag = run({"groups", "--K", "8", "--bogus"});
    CHECK(bad_flag.status == 2);
    CHECK(nlohmann::json::parse(bad_flag.err).at("code") == "ConfigParse");

    const auto bad_k = run({"groups", "--K", "1"});
    CHECK(bad_k.status == 4);
    CHECK(nlohmann::json::parse(bad_k.err).at("code") == "InvalidK");

    const auto no_iq = run({"case", "radar", "--plays", "100", "--trials", "1", "--iq", "/nonexistent/iq.csv"});
    CHECK(no_iq.status == 3);
    CHECK(nlohmann::json::parse(no_iq.err).at("code") == "IoFailure");

    const auto unwritable = run({"groups", "--K", "4", "--out", "/nonexistent/dir/out.csv"});
    CHECK(unwritable.status == 3);
}

TEST_CASE("simulate writes reproducible artifacts") {
    const auto cfg = write("exp.json", kConfig);
    const auto out1 = (scratch() / "r1.csv").string();
    const auto out2 = (scratch() / "r2.csv").string();
    const auto diag = (scratch() / "diag.json").string();
    REQUIRE(run({"simulate", "--config", cfg, "--out", out1, "--diagnostics", diag}).status == 0);
    REQUIRE(run({"simulate", "--config", cfg, "--out", out2}).status == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1).rfind("instance_id,algorithm,T,trials,errors,p_hat,ci_lo,ci_hi\n", 0) == 0);
    CHECK(slurp(out1).find("sg,RE-plugin,8,0,,,,") != std::string::npos);

    const auto d = nlohmann::json::parse(slurp(diag));
    REQUIRE(d.size() == 6);
    CHECK(d[0].at("diagnostics").at("groups").size() == 3);
    CHECK(d[0].at("algorithm") == "RE");
    // RE-plugin spends a tenth of T=8 on estimation, which is less than one pull per arm.
    CHECK(d[3].at("failure") == "BudgetTooSmall");
}

TEST_CASE("simulate with bounds and seed override") {
    const auto cfg = write("exp2.json", kConfig);
    const auto a = run({"simulate", "--config", cfg, "--with-bounds"});
    REQUIRE(a.status == 0);
    CHECK(a.out.rfind("instance_id,algorithm,T,trials,errors,p_hat,ci_lo,ci_hi,bound\n", 0) == 0);
    const auto b = run({"--seed", "99", "simulate", "--config", cfg});
    const auto c = run({"simulate", "--config", cfg});
    REQUIRE(b.status == 0);
    CHECK(b.out != c.out);
}

TEST_CASE("bounds, case studies and group-mean study") {
    const auto inst = write("inst.json", R"({"means":[1.0,0.5,0.5,0.5],"family":{"gaussian":{"sigma2":0.1}}})");
    const auto b = run({"bounds", "--instance", inst, "--budgets", "4:16:x2"});
    REQUIRE(b.status == 0);
    CHECK(b.out.find("T,algorithm,bound,bound_clipped\n") == 0);
    CHECK(b.out.find("\n4,SR,,\n") != std::string::npos);

    const auto jam = run({"case", "jammer", "--K", "16", "--noise-grid", "0.001:0.002:0.001", "--T", "64", "--trials", "20"});
    REQUIRE(jam.status == 0);
    CHECK(std::count(jam.out.begin(), jam.out.end(), '\n') == 1 + 2 * 4);

    const auto iq = write("iq.csv", "n,i,q\n0,1,0\n1,0,1\n2,-1,0\n");
    const auto radar = run({"case", "radar", "--plays", "240,480", "--trials", "5", "--iq", iq, "--noise-var", "0.01"});
    REQUIRE(radar.status == 0);
    CHECK(std::count(radar.out.begin(), radar.out.end(), '\n') == 1 + 2 * 4);

    const auto summary = (scratch() / "gmd.json").string();
    const auto g = run({"group-mean-dist", "--K", "16", "--samples", "2000", "--bins", "10", "--summary", summary});
    REQUIRE(g.status == 0);
    CHECK(std::count(g.out.begin(), g.out.end(), '\n') == 21);
    CHECK(nlohmann::json::parse(slurp(summary)).contains("mu_L"));
}

TEST_CASE("help") {
    const auto h = run({"--help"});
    CHECK(h.status == 0);
    CHECK(h.out.find("simulate") != std::string::npos);
}

TEST_CASE("shipped sample configs load") {
    const std::string dir = std::string(BAI_SOURCE_DIR) + "/configs/";
    const auto h = run({"hardness", "--instance", dir + "single_gap_k16.json"});
    REQUIRE(h.status == 0);
    CHECK(h.out.find("\n16,14,64,60,64,64,1,16,64,0.0625,1\n") != std::string::npos);
    CHECK(run({"hardness", "--instance", dir + "spread_gaps.json"}).status == 0);

    const auto families = nlohmann::json::parse(slurp(dir + "families.json"));
    CHECK_NOTHROW(bai::experiment_config_from_json(families));
    CHECK_NOTHROW(bai::experiment_config_from_json(nlohmann::json::parse(slurp(dir + "single_gap_k64.json"))));

    const auto radar = run({"case", "radar", "--plays", "1200", "--trials", "20", "--iq", dir + "iq_pulses.csv", "--noise-var", "0.5"});
    REQUIRE(radar.status == 0);
    CHECK(radar.out.find("radar,RE-oracle,1200,20,0,") != std::string::npos);
}
