#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdmd/datasets.hpp"

namespace tdmd {

/// Everything one experiment run needs. Round trips through JSON.
struct ExperimentConfig {
    std::string input;            ///< .tdt file or CSV directory; empty means use the generator
    std::string generator = "wave";
    Index m = 32;
    Index n = 16;
    Index steps = 99;             ///< horizon T, giving T+1 snapshots
    TransformKind transform = TransformKind::dct;
    std::vector<DmdMethod> methods{DmdMethod::dmd, DmdMethod::starm_dmd, DmdMethod::starm_dmd2};
    std::vector<double> gammas{0.99, 0.999, 0.99999};
    Index rank = 0;               ///< decompose: uniform rank when > 0, otherwise energy truncation
    Index batches = 1;
    Index rho_max = 0;            ///< 0 picks min(m, T+1)
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out = "out";

    bool operator==(const ExperimentConfig&) const = default;

    bool uses(DmdMethod method) const { return std::find(methods.begin(), methods.end(), method) != methods.end(); }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    std::vector<std::string> methods;
    for (DmdMethod mth : c.methods)
        methods.emplace_back(to_string(mth));
    j = nlohmann::json{{"input", c.input},   {"generator", c.generator},
                       {"m", c.m},           {"n", c.n},
                       {"steps", c.steps},   {"transform", std::string(to_string(c.transform))},
                       {"methods", methods}, {"gammas", c.gammas},
                       {"rank", c.rank},     {"batches", c.batches},
                       {"rho_max", c.rho_max}, {"seed", c.seed},
                       {"threads", c.threads}, {"out", c.out}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    ExperimentConfig d;
    c.input = j.value("input", d.input);
    c.generator = j.value("generator", d.generator);
    c.m = j.value("m", d.m);
    c.n = j.value("n", d.n);
    c.steps = j.value("steps", d.steps);
    c.transform = j.contains("transform") ? parse_transform_kind(j.at("transform").get<std::string>()) : d.transform;
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& s : j.at("methods"))
            c.methods.push_back(parse_dmd_method(s.get<std::string>()));
    } else {
        c.methods = d.methods;
    }
    c.gammas = j.value("gammas", d.gammas);
    c.rank = j.value("rank", d.rank);
    c.batches = j.value("batches", d.batches);
    c.rho_max = j.value("rho_max", d.rho_max);
    c.seed = j.value("seed", d.seed);
    c.threads = j.value("threads", d.threads);
    c.out = j.value("out", d.out);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorCode::io_error, "cannot open config " + path.string());
    try {
        return nlohmann::json::parse(is).get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
    }
}

inline void save_config(const ExperimentConfig& c, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
    os << nlohmann::json(c).dump(2) << '\n';
}

/// Shortest round-trip text for a double; identical across runs.
inline std::string format_number(double v) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace detail {

/// Runs one pipeline stage; failures are re-raised with the stage name in front.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.code(), name + ": " + e.message());
    }
}

inline std::string join_ranks(const std::vector<Index>& ranks) {
    std::string s;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (i > 0)
            s += ';';
        s += std::to_string(ranks[i]);
    }
    return s;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
    return os;
}

/// Number of singular values of a above max(rows, cols) * eps * sigma_max.
inline Index numerical_rank(const Matrix& a) {
    if (a.size() == 0)
        return 0;
    Eigen::BDCSVD<Matrix> svd(a);
    const RealVector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    const double cutoff = facewise::default_pinv_tolerance(a.rows(), a.cols()) * s(0);
    Index r = 0;
    while (r < s.size() && s(r) > cutoff)
        ++r;
    return r;
}

} // namespace detail

struct ExperimentData {
    Tensor3 snapshots;
    Transform transform = make_identity(1);
};

/// Loads or generates the trajectory and builds the transform for it.
inline ExperimentData prepare_data(const ExperimentConfig& c) {
    set_num_threads(c.threads);
    ExperimentData d;
    d.snapshots = detail::stage("input", [&] {
        if (!c.input.empty())
            return load_snapshots(c.input);
        TrajectorySpec spec;
        spec.kind = parse_trajectory_kind(c.generator);
        spec.m = c.m;
        spec.n = c.n;
        spec.steps = c.steps;
        spec.seed = c.seed;
        const Transform gen_t = make_transform(c.transform == TransformKind::data_driven ? TransformKind::dct : c.transform, c.n);
        return generate(spec, &gen_t);
    });
    detail::require(d.snapshots.cols() >= 2, ErrorCode::insufficient_data, "input: need at least two snapshots");
    d.transform = detail::stage("transform", [&] {
        return make_transform(c.transform, d.snapshots.tubes(), &d.snapshots);
    });
    return d;
}

namespace detail {

inline Tensor3 reconstruct_trajectory(const DmdModel& model, Index m, Index n, Index states) {
    Tensor3 rec = reconstruct(model, states - 1);
    if (model.method == DmdMethod::dmd)
        return fold(unfold(rec), m, n);
    return rec;
}

} // namespace detail

// ---------------------------------------------------------------------------

struct DecomposeSummary {
    std::vector<Index> multirank;
    double relative_error = 0.0;
    Storage storage = 0;
};

/// tr-tSVDM (rank > 0) or tr-tSVDMII (first γ). Writes U.tdt, S.tdt, V.tdt and summary.json.
inline DecomposeSummary run_decompose(const ExperimentConfig& c) {
    const ExperimentData d = prepare_data(c);
    const Tensor3& a = d.snapshots;
    TSvdM f = detail::stage("decompose", [&] {
        if (c.rank > 0)
            return tr_tsvdm(a, d.transform, c.rank);
        detail::require(!c.gammas.empty(), ErrorCode::invalid_parameter, "gamma list is empty");
        return tr_tsvdm2(a, d.transform, c.gammas.front());
    });
    DecomposeSummary s;
    s.multirank = f.multirank;
    s.relative_error = detail::stage("reconstruct", [&] {
        Tensor3 diff = a;
        diff -= reconstruct(f, d.transform);
        return diff.norm() / a.norm();
    });
    s.storage = d.transform.storage_cost();
    for (Index kj : f.multirank)
        s.storage += static_cast<Storage>(kj) * (a.rows() + a.cols() + 1);

    detail::stage("output", [&] {
        const std::filesystem::path out(c.out);
        std::filesystem::create_directories(out);
        save_tdt(f.U, out / "U.tdt");
        save_tdt(f.S, out / "S.tdt");
        save_tdt(f.V, out / "V.tdt");
        nlohmann::json j{{"shape", {a.rows(), a.cols(), a.tubes()}},
                         {"transform", std::string(to_string(d.transform.kind()))},
                         {"multirank", s.multirank},
                         {"relative_error", s.relative_error},
                         {"storage", s.storage}};
        if (c.rank > 0)
            j["rank"] = c.rank;
        else
            j["gamma"] = c.gammas.front();
        auto os = detail::open_output(out / "summary.json");
        os << j.dump(2) << '\n';
        return 0;
    });
    return s;
}

// ---------------------------------------------------------------------------

struct CompareRow {
    double gamma = 0.0;
    DmdMethod method = DmdMethod::dmd;
    std::string rank;
    Storage storage = 0;
    RelativeError error;
};

/**
 * Storage-matched comparison. For each γ, ⋆_M-DMDII runs first; its storage
 * fixes the largest DMD and ⋆_M-DMD ranks that fit in the same budget.
 * Writes results.csv and statewise_re.csv (largest γ).
 */
inline std::vector<CompareRow> run_compare(const ExperimentConfig& c) {
    detail::require(!c.gammas.empty(), ErrorCode::invalid_parameter, "gamma list is empty");
    const ExperimentData d = prepare_data(c);
    const Tensor3& data = d.snapshots;
    const Index m = data.rows(), n = data.tubes(), states = data.cols();
    const SnapshotPair pair = make_snapshot_pair(data);
    const Matrix x_mat = unfold(pair.X), y_mat = unfold(pair.Y);
    const Index dmd_max = detail::stage("dmd rank", [&] { return detail::numerical_rank(x_mat); });
    const Index starm_max = std::min(m, pair.X.cols());

    std::vector<CompareRow> rows;
    for (double gamma : c.gammas) {
        const DmdModel m2 = detail::stage("starm_dmd2", [&] {
            return star_m_dmd(pair.X, pair.Y, d.transform, Truncation::with_energy(gamma));
        });
        const Storage budget = m2.storage_flns;
        for (DmdMethod method : {DmdMethod::dmd, DmdMethod::starm_dmd, DmdMethod::starm_dmd2}) {
            if (!c.uses(method))
                continue;
            CompareRow row;
            row.gamma = gamma;
            row.method = method;
            const std::string name(to_string(method));
            DmdModel model = detail::stage(name, [&] {
                if (method == DmdMethod::dmd) {
                    const EqualizedRank k = equalized_rank(budget, method, m, n, 0, std::max<Index>(dmd_max, 1));
                    return exact_dmd(x_mat, y_mat, k.rank);
                }
                if (method == DmdMethod::starm_dmd) {
                    const EqualizedRank k = equalized_rank(budget, method, m, n, d.transform.storage_cost(), starm_max);
                    return star_m_dmd(pair.X, pair.Y, d.transform, Truncation::with_rank(k.rank));
                }
                return m2;
            });
            row.rank = method == DmdMethod::starm_dmd2 ? detail::join_ranks(model.multirank) : std::to_string(model.rank());
            row.storage = model.storage_flns;
            row.error = detail::stage(name + " reconstruction", [&] {
                return relative_error(data, detail::reconstruct_trajectory(model, m, n, states));
            });
            rows.push_back(std::move(row));
        }
    }

    detail::stage("output", [&] {
        const std::filesystem::path out(c.out);
        std::filesystem::create_directories(out);
        auto os = detail::open_output(out / "results.csv");
        os << "gamma,method,rank,storage,global_re\n";
        for (const CompareRow& r : rows)
            os << format_number(r.gamma) << ',' << to_string(r.method) << ',' << r.rank << ',' << r.storage << ','
               << format_number(r.error.global) << '\n';
        const double top = *std::max_element(c.gammas.begin(), c.gammas.end());
        auto ss = detail::open_output(out / "statewise_re.csv");
        ss << "state,method,re\n";
        for (const CompareRow& r : rows) {
            if (r.gamma != top)
                continue;
            for (std::size_t j = 0; j < r.error.statewise.size(); ++j)
                ss << j << ',' << to_string(r.method) << ',' << format_number(r.error.statewise[j]) << '\n';
        }
        return 0;
    });
    return rows;
}

// ---------------------------------------------------------------------------

struct StreamReport {
    struct BatchRow {
        Index batch = 0;
        DmdMethod method = DmdMethod::starm_dmd2;
        double re = 0.0;
    };
    std::vector<BatchRow> batch_re;
    std::vector<std::pair<DmdMethod, std::vector<double>>> statewise;
};

namespace detail {

/// Per-batch RE of the model available after each batch, on that batch's columns.
inline std::vector<double> batch_errors(const Tensor3& truth, const std::vector<std::pair<Index, Index>>& ranges,
                                        const StreamingResult& r) {
    std::vector<double> out;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
        const auto [first, count] = ranges[b];
        const Tensor3 rec = reconstruct(r.intermediates[b], first + count - 1);
        const RelativeError e = relative_error(truth.lateral_range(first, count), rec.lateral_range(first, count));
        out.push_back(e.global);
    }
    return out;
}

} // namespace detail

/**
 * Streaming ⋆_M-DMDII over b batches, plus streaming matrix DMD (n = 1,
 * M = [1]) when "dmd" is among the methods. Writes batch_re.csv and
 * statewise_re.csv for the final models.
 */
inline StreamReport run_stream(const ExperimentConfig& c) {
    detail::require(c.batches >= 1, ErrorCode::invalid_parameter, "batch count must be at least 1");
    detail::require(!c.gammas.empty(), ErrorCode::invalid_parameter, "gamma list is empty");
    const ExperimentData d = prepare_data(c);
    const Tensor3& data = d.snapshots;
    const Index m = data.rows(), p = data.cols(), n = data.tubes();
    const double gamma = c.gammas.front();
    const auto ranges = detail::stage("batching", [&] { return batch_ranges(p, c.batches); });

    StreamReport report;
    auto record = [&](DmdMethod method, const Tensor3& truth, const Transform& t, Index rho) {
        const std::string name = "stream " + std::string(to_string(method));
        const StreamingResult r = detail::stage(name, [&] {
            return streaming_dmd(batch_split(truth, c.batches), rho, gamma, t, c.seed, true);
        });
        const std::vector<double> errs = detail::stage(name + " batch errors", [&] {
            return detail::batch_errors(truth, ranges, r);
        });
        for (std::size_t b = 0; b < errs.size(); ++b)
            report.batch_re.push_back({static_cast<Index>(b + 1), method, errs[b]});
        const RelativeError fin = detail::stage(name + " reconstruction", [&] {
            return relative_error(truth, reconstruct(r.model, p - 1));
        });
        report.statewise.emplace_back(method, fin.statewise);
    };

    if (c.uses(DmdMethod::dmd)) {
        const Index rho = c.rho_max > 0 ? std::min(c.rho_max, std::min(m * n, p)) : std::min(m * n, p);
        record(DmdMethod::dmd, fold(unfold(data), m * n, 1), make_identity(1), rho);
    }
    const Index rho = c.rho_max > 0 ? c.rho_max : std::min(m, p);
    record(DmdMethod::starm_dmd2, data, d.transform, rho);

    detail::stage("output", [&] {
        const std::filesystem::path out(c.out);
        std::filesystem::create_directories(out);
        auto os = detail::open_output(out / "batch_re.csv");
        os << "batch,method,re\n";
        for (const auto& r : report.batch_re)
            os << r.batch << ',' << to_string(r.method) << ',' << format_number(r.re) << '\n';
        auto ss = detail::open_output(out / "statewise_re.csv");
        ss << "state,method,re\n";
        for (const auto& [method, errs] : report.statewise)
            for (std::size_t j = 0; j < errs.size(); ++j)
                ss << j << ',' << to_string(method) << ',' << format_number(errs[j]) << '\n';
        return 0;
    });
    return report;
}

} // namespace tdmd
