#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace tdmd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tdmd_exp_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream is(p);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

ExperimentConfig base_config(const fs::path& out) {
    ExperimentConfig c;
    c.out = out.string();
    c.m = 10;
    c.n = 4;
    c.steps = 24;
    c.threads = 1;
    return c;
}

} // namespace

TEST(Config, JsonRoundTrip) {
    ExperimentConfig c;
    c.input = "data.tdt";
    c.generator = "vortex";
    c.transform = TransformKind::dst;
    c.methods = {DmdMethod::starm_dmd2, DmdMethod::dmd};
    c.gammas = {0.9, 0.123456789012345};
    c.rank = 3;
    c.batches = 7;
    c.rho_max = 5;
    c.seed = 0xffffffffffffULL;
    c.threads = 4;
    c.out = "results";
    const fs::path dir = scratch("config");
    save_config(c, dir / "c.json");
    EXPECT_EQ(load_config(dir / "c.json"), c);
    EXPECT_EQ(nlohmann::json::parse(nlohmann::json(c).dump()).get<ExperimentConfig>(), c);

    // Missing keys fall back to defaults.
    EXPECT_EQ(nlohmann::json::parse("{}").get<ExperimentConfig>(), ExperimentConfig{});
    std::ofstream(dir / "bad.json") << "{\"methods\": [\"nope\"]}";
    EXPECT_THROW(load_config(dir / "bad.json"), Error);
}

TEST(Decompose, EnergyAndRankModes) {
    const fs::path dir = scratch("decompose");
    ExperimentConfig c = base_config(dir);
    c.generator = "vortex";
    c.gammas = {1.0};
    EXPECT_LE(run_decompose(c).relative_error, 1e-11);
    c.gammas = {0.99};
    const DecomposeSummary s = run_decompose(c);
    EXPECT_LE(s.relative_error, 0.1);
    for (const char* f : {"U.tdt", "S.tdt", "V.tdt", "summary.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary.at("multirank").get<std::vector<Index>>(), s.multirank);
    EXPECT_EQ(summary.at("storage").get<Storage>(), s.storage);

    // Planted rank 2 per slice: the traveling wave.
    c.generator = "wave";
    c.rank = 2;
    EXPECT_LE(run_decompose(c).relative_error, 1e-8);
    const Tensor3 u = load_tdt(dir / "U.tdt");
    EXPECT_EQ(u.cols(), 2);
}

TEST(Compare, IdentityDynamicsIsExactForAllMethods) {
    const fs::path dir = scratch("compare_identity");
    oracle::Rng rng(1);
    const Transform t = make_dct(3);
    const Tensor3 c = gen_linear_starm(identity_tensor(5, t), oracle::random_tensor(rng, 5, 1, 3), 8, t);
    save_tdt(c, dir / "in.tdt");
    ExperimentConfig cfg = base_config(dir / "out");
    cfg.input = (dir / "in.tdt").string();
    const auto rows = run_compare(cfg);
    EXPECT_EQ(rows.size(), 9u);
    for (const auto& r : rows)
        EXPECT_LE(r.error.global, 1e-9) << to_string(r.method) << " " << r.gamma;

    const auto csv = read_csv(dir / "out" / "results.csv");
    ASSERT_EQ(csv.size(), 10u);
    EXPECT_EQ(csv[0], (std::vector<std::string>{"gamma", "method", "rank", "storage", "global_re"}));
    const auto sw = read_csv(dir / "out" / "statewise_re.csv");
    EXPECT_EQ(sw[0], (std::vector<std::string>{"state", "method", "re"}));
    EXPECT_EQ(sw.size(), 1u + 3u * 9u);
}

TEST(Compare, PlantedStarMSystemFavorsTensorModel) {
    const fs::path dir = scratch("compare_linear");
    ExperimentConfig cfg = base_config(dir);
    cfg.generator = "linear";
    cfg.m = 8;
    cfg.n = 6;
    cfg.steps = 40;
    const auto rows = run_compare(cfg);
    for (double g : cfg.gammas) {
        double re2 = -1, re_dmd = -1;
        Storage s2 = 0, s_dmd = 0;
        for (const auto& r : rows) {
            if (r.gamma != g)
                continue;
            if (r.method == DmdMethod::starm_dmd2) {
                re2 = r.error.global;
                s2 = r.storage;
            }
            if (r.method == DmdMethod::dmd) {
                re_dmd = r.error.global;
                s_dmd = r.storage;
            }
        }
        EXPECT_LE(re2, re_dmd) << g;
        EXPECT_LE(s_dmd, std::max<Storage>(s2, storage_count(DmdMethod::dmd, 8, 6, Index{1}, 0)));
    }
}

TEST(Compare, DeterministicAndThreadIndependent) {
    const fs::path a = scratch("det_a"), b = scratch("det_b"), p = scratch("det_p");
    ExperimentConfig cfg = base_config(a);
    cfg.generator = "vortex";
    run_compare(cfg);
    cfg.out = b.string();
    run_compare(cfg);
    EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
    EXPECT_EQ(slurp(a / "statewise_re.csv"), slurp(b / "statewise_re.csv"));
    cfg.out = p.string();
    cfg.threads = 3;
    run_compare(cfg);
    const auto x = read_csv(a / "results.csv"), y = read_csv(p / "results.csv");
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 1; i < x.size(); ++i)
        EXPECT_NEAR(std::stod(x[i][4]), std::stod(y[i][4]), 1e-9);
    set_num_threads(1);
}

TEST(Stream, SingleBatchMatchesInMemoryPipeline) {
    const fs::path dir = scratch("stream_one");
    ExperimentConfig cfg = base_config(dir);
    cfg.generator = "wave";
    cfg.methods = {DmdMethod::starm_dmd2};
    cfg.gammas = {0.999};
    cfg.batches = 1;
    const StreamReport rep = run_stream(cfg);
    ASSERT_EQ(rep.batch_re.size(), 1u);

    const ExperimentData d = prepare_data(cfg);
    const DmdModel mem = lowrank_dmd(tr_tsvdm2(d.snapshots, d.transform, 0.999), d.transform);
    const double re = relative_error(d.snapshots, reconstruct(mem, d.snapshots.cols() - 1)).global;
    EXPECT_NEAR(rep.batch_re[0].re, re, 1e-8);
}

TEST(Stream, TwentyBatchesOfTen) {
    const fs::path dir = scratch("stream_twenty");
    ExperimentConfig cfg = base_config(dir);
    cfg.generator = "vortex";
    cfg.m = 16;
    cfg.n = 6;
    cfg.steps = 199;
    cfg.batches = 20;
    cfg.rho_max = 6;
    cfg.gammas = {0.99999};
    const StreamReport rep = run_stream(cfg);
    const auto csv = read_csv(dir / "batch_re.csv");
    EXPECT_EQ(csv[0], (std::vector<std::string>{"batch", "method", "re"}));
    EXPECT_EQ(csv.size(), 1u + 2u * 20u);
    double first = -1, last = -1;
    for (const auto& r : rep.batch_re)
        if (r.method == DmdMethod::starm_dmd2) {
            if (r.batch == 1)
                first = r.re;
            last = r.re;
        }
    EXPECT_GE(first, 0.0);
    EXPECT_LE(last, std::max(first, 1e-6));

    // Serial reruns produce identical bytes.
    const std::string before = slurp(dir / "batch_re.csv");
    run_stream(cfg);
    EXPECT_EQ(slurp(dir / "batch_re.csv"), before);
}

TEST(Errors, StageIsNamed) {
    const fs::path dir = scratch("errors");
    ExperimentConfig cfg = base_config(dir);
    cfg.input = (dir / "missing.tdt").string();
    try {
        run_compare(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.message().rfind("input:", 0), 0u) << e.what();
        EXPECT_EQ(e.code(), ErrorCode::io_error);
    }
    cfg.input.clear();
    cfg.batches = 500;
    try {
        run_stream(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.message().rfind("batching:", 0), 0u) << e.what();
    }
    cfg.gammas.clear();
    EXPECT_THROW(run_compare(cfg), Error);
}
