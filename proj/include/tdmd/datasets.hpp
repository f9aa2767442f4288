#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tdmd/streaming.hpp"

namespace tdmd {

// ---------------------------------------------------------------------------
// Generators. Grid convention: row i is x (m = n_x), tube k is y (n = n_y),
// lateral slice j is time.

/// Trajectory X_{t+1} = A ⋆ X_t for t = 0..steps-1; shape m x (steps+1) x n.
inline Tensor3 gen_linear_starm(const Tensor3& a, const Tensor3& x0, Index steps, const Transform& t,
                                double max_spectral_radius = 1.05) {
    detail::require(a.rows() == a.cols() && a.tubes() == t.size(), ErrorCode::invalid_dimension,
                    "operator must be m x m x n with n matching the transform");
    detail::require(x0.rows() == a.rows() && x0.cols() == 1 && x0.tubes() == a.tubes(), ErrorCode::invalid_dimension,
                    "initial state must be an m x 1 x n lateral slice");
    detail::require(steps >= 0, ErrorCode::invalid_parameter, "number of steps must be nonnegative");
    const Tensor3 a_hat = to_transform_domain(t, a);
    for (Index k = 0; k < a_hat.tubes(); ++k) {
        const double rho = a_hat.slice(k).size() == 0
                               ? 0.0
                               : Eigen::ComplexEigenSolver<Matrix>(a_hat.slice(k), false).eigenvalues().cwiseAbs().maxCoeff();
        detail::require(rho <= max_spectral_radius, ErrorCode::invalid_parameter,
                        "operator slice " + std::to_string(k) + " has spectral radius " + std::to_string(rho) +
                            " above the guard " + std::to_string(max_spectral_radius));
    }
    const Index m = a.rows(), n = a.tubes();
    Tensor3 out_hat(m, steps + 1, n, Domain::transform);
    Tensor3 state = to_transform_domain(t, x0);
    for (Index j = 0; j <= steps; ++j) {
        out_hat.set_lateral_range(j, state);
        if (j < steps)
            state = facewise::product(a_hat, state);
    }
    return to_standard_domain(t, out_hat);
}

/// u(x_i, y_k, t) = sin(kx x_i - c t) cos(ky y_k) on uniform grids over [0, 2π).
inline Tensor3 gen_traveling_wave(Index m, Index n, Index steps, double c, double kx, double ky) {
    detail::require(m >= 1 && n >= 1 && steps >= 0, ErrorCode::invalid_dimension, "wave dimensions must be positive");
    Tensor3 out(m, steps + 1, n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (Index k = 0; k < n; ++k) {
        const double y = two_pi * static_cast<double>(k) / static_cast<double>(n);
        for (Index j = 0; j <= steps; ++j)
            for (Index i = 0; i < m; ++i) {
                const double x = two_pi * static_cast<double>(i) / static_cast<double>(m);
                out(i, j, k) = std::sin(kx * x - c * static_cast<double>(j)) * std::cos(ky * y);
            }
    }
    return out;
}

struct Oscillator {
    double omega = 0.0;
    double lambda = 1.0;
    double phase = 0.0;
    double cx = 0.5, cy = 0.5; ///< blob center in [0,1)^2
    double width = 0.08;
};

struct VortexStreet {
    Tensor3 data;
    std::vector<cplx> eigenvalues; ///< λ e^{±iω} per oscillator
    std::vector<Oscillator> oscillators;
};

/**
 * Sum of oscillating blob pairs. Oscillator q contributes
 * λ^t (a(x,y) cos(ωt+φ) + b(x,y) sin(ωt+φ)) where b is a copy of a shifted
 * downstream. That keeps each pair in a 2-D invariant subspace, so the
 * Koopman spectrum is exactly {λ e^{±iω}}.
 */
inline VortexStreet gen_vortex_street(Index m, Index n, Index steps, const std::vector<Oscillator>& oscillators) {
    detail::require(m >= 1 && n >= 1 && steps >= 0, ErrorCode::invalid_dimension, "grid dimensions must be positive");
    VortexStreet out{Tensor3(m, steps + 1, n), {}, oscillators};
    RealMatrix blob_a(m, n), blob_b(m, n);
    for (const Oscillator& o : oscillators) {
        detail::require(std::abs(o.lambda) <= 1.0 && o.width > 0.0, ErrorCode::invalid_parameter,
                        "oscillator needs |lambda| <= 1 and positive width");
        const double shift = 1.5 * o.width;
        for (Index k = 0; k < n; ++k)
            for (Index i = 0; i < m; ++i) {
                const double x = static_cast<double>(i) / static_cast<double>(m);
                const double y = static_cast<double>(k) / static_cast<double>(n);
                const double s2 = 2.0 * o.width * o.width;
                const double dy = (y - o.cy) * (y - o.cy);
                blob_a(i, k) = std::exp(-((x - o.cx) * (x - o.cx) + dy) / s2);
                blob_b(i, k) = std::exp(-((x - o.cx - shift) * (x - o.cx - shift) + dy) / s2);
            }
        for (Index j = 0; j <= steps; ++j) {
            const double tj = static_cast<double>(j);
            const double amp = std::pow(o.lambda, tj);
            const double ca = amp * std::cos(o.omega * tj + o.phase);
            const double sb = amp * std::sin(o.omega * tj + o.phase);
            for (Index k = 0; k < n; ++k)
                for (Index i = 0; i < m; ++i)
                    out.data(i, j, k) += ca * blob_a(i, k) + sb * blob_b(i, k);
        }
        out.eigenvalues.push_back(std::polar(o.lambda, o.omega));
        out.eigenvalues.push_back(std::polar(o.lambda, -o.omega));
    }
    return out;
}

/// Seeded oscillators: ω_q ≈ 0.35 (q+1), λ_q = decay, centers staggered along the wake.
inline VortexStreet gen_vortex_street(Index m, Index n, Index steps, Index num_oscillators, double decay,
                                      std::uint64_t seed) {
    detail::require(num_oscillators >= 0, ErrorCode::invalid_parameter, "oscillator count must be nonnegative");
    auto gen = make_substream(seed, 0);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<Oscillator> osc;
    for (Index q = 0; q < num_oscillators; ++q) {
        Oscillator o;
        o.omega = 0.35 * static_cast<double>(q + 1) + jitter(gen);
        o.lambda = decay;
        o.phase = phase(gen);
        o.cx = 0.15 + 0.6 * (static_cast<double>(q) + 0.5) / static_cast<double>(num_oscillators) + jitter(gen);
        o.cy = q % 2 == 0 ? 0.35 + jitter(gen) : 0.65 + jitter(gen);
        o.width = 0.07 + 0.2 * std::abs(jitter(gen));
        osc.push_back(o);
    }
    return gen_vortex_street(m, n, steps, osc);
}

/// Random operator whose transform-domain slices are r_k Q_k, Q_k real orthogonal and r_k in [0.9, 1).
inline Tensor3 random_stable_operator(Index m, const Transform& t, std::uint64_t seed) {
    auto gen = make_substream(seed, 3);
    std::uniform_real_distribution<double> radius(0.9, 1.0);
    Tensor3 a_hat(m, m, t.size(), Domain::transform);
    for (Index k = 0; k < t.size(); ++k) {
        Eigen::HouseholderQR<RealMatrix> qr(standard_gaussian(m, m, gen));
        RealMatrix q = qr.householderQ() * RealMatrix::Identity(m, m);
        a_hat.slice(k) = (radius(gen) * q).cast<cplx>();
    }
    // A real transform maps real hat slices back to a real operator.
    return to_standard_domain(t, a_hat);
}

struct TrajectorySpec {
    enum class Kind { linear_starm, traveling_wave, vortex_street } kind = Kind::traveling_wave;
    Index m = 32;
    Index n = 16;
    Index steps = 99; ///< horizon T; the trajectory has T+1 snapshots
    double speed = 0.3;
    double kx = 2.0;
    double ky = 1.0;
    Index oscillators = 3;
    double decay = 0.995;
    std::uint64_t seed = 0;
};

inline std::string_view to_string(TrajectorySpec::Kind kind) {
    switch (kind) {
    case TrajectorySpec::Kind::linear_starm: return "linear";
    case TrajectorySpec::Kind::traveling_wave: return "wave";
    case TrajectorySpec::Kind::vortex_street: return "vortex";
    }
    return "?";
}

inline TrajectorySpec::Kind parse_trajectory_kind(std::string_view name) {
    if (name == "linear") return TrajectorySpec::Kind::linear_starm;
    if (name == "wave") return TrajectorySpec::Kind::traveling_wave;
    if (name == "vortex") return TrajectorySpec::Kind::vortex_street;
    throw Error(ErrorCode::invalid_parameter, "unknown generator '" + std::string(name) + "'");
}

/// The linear generator draws its operator with the given transform (DCT when none is given).
inline Tensor3 generate(const TrajectorySpec& spec, const Transform* t = nullptr) {
    switch (spec.kind) {
    case TrajectorySpec::Kind::traveling_wave:
        return gen_traveling_wave(spec.m, spec.n, spec.steps, spec.speed, spec.kx, spec.ky);
    case TrajectorySpec::Kind::vortex_street:
        return gen_vortex_street(spec.m, spec.n, spec.steps, spec.oscillators, spec.decay, spec.seed).data;
    case TrajectorySpec::Kind::linear_starm: {
        const Transform tt = t != nullptr && t->kind() != TransformKind::data_driven ? *t : make_dct(spec.n);
        auto gen = make_substream(spec.seed, 4);
        const Tensor3 x0 = Tensor3::from_real(standard_gaussian(spec.m, spec.n, gen), spec.m, 1);
        return gen_linear_starm(random_stable_operator(spec.m, tt, spec.seed), x0, spec.steps, tt);
    }
    }
    throw Error(ErrorCode::invalid_parameter, "unknown generator");
}

// ---------------------------------------------------------------------------
// Batching.

/// Contiguous [first, first+count) ranges; earlier batches take the remainder.
inline std::vector<std::pair<Index, Index>> batch_ranges(Index p, Index b) {
    detail::require(b >= 1 && b <= p, ErrorCode::invalid_parameter,
                    "batch count must lie in [1, " + std::to_string(p) + "], got " + std::to_string(b));
    std::vector<std::pair<Index, Index>> out;
    Index first = 0;
    for (Index i = 0; i < b; ++i) {
        const Index count = p / b + (i < p % b ? 1 : 0);
        out.emplace_back(first, count);
        first += count;
    }
    return out;
}

/// Full-shape batches, zero outside their own lateral range; they sum to C.
inline std::vector<Tensor3> batch_split(const Tensor3& c, Index b) {
    std::vector<Tensor3> out;
    for (auto [first, count] : batch_ranges(c.cols(), b)) {
        Tensor3 part(c.rows(), c.cols(), c.tubes(), c.domain());
        part.set_lateral_range(first, c.lateral_range(first, count));
        out.push_back(std::move(part));
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats.

enum class SnapshotFormat { tdt, csv_dir };

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i)
        b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), 8);
}

inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

inline std::uint64_t get_u64(std::istream& is, const std::string& file) {
    std::array<unsigned char, 8> b{};
    const auto offset = static_cast<long long>(is.tellg());
    is.read(reinterpret_cast<char*>(b.data()), 8);
    if (is.gcount() != 8)
        throw Error(ErrorCode::parse_error, file + ": truncated at byte offset " + std::to_string(offset));
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
        v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

inline double get_f64(std::istream& is, const std::string& file) {
    const auto offset = static_cast<long long>(is.tellg());
    const double d = std::bit_cast<double>(get_u64(is, file));
    if (!std::isfinite(d))
        throw Error(ErrorCode::parse_error, file + ": non-finite value at byte offset " + std::to_string(offset));
    return d;
}

} // namespace detail

/// "TDT1" | u8 complex flag | u64 LE m, p, n | f64 LE payload in storage order.
inline void save_tdt(const Tensor3& x, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    const bool complex = !x.is_real();
    os.write("TDT1", 4);
    os.put(static_cast<char>(complex ? 1 : 0));
    detail::put_u64(os, static_cast<std::uint64_t>(x.rows()));
    detail::put_u64(os, static_cast<std::uint64_t>(x.cols()));
    detail::put_u64(os, static_cast<std::uint64_t>(x.tubes()));
    const cplx* d = x.data();
    for (Index i = 0; i < x.size(); ++i) {
        detail::put_f64(os, d[i].real());
        if (complex)
            detail::put_f64(os, d[i].imag());
    }
    if (!os)
        throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

inline Tensor3 load_tdt(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::io_error, "cannot open " + file);
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (is.gcount() != 4 || std::string_view(magic.data(), 4) != "TDT1")
        throw Error(ErrorCode::parse_error, file + ": bad magic at byte offset 0, expected \"TDT1\"");
    const int flag = is.get();
    if (flag != 0 && flag != 1)
        throw Error(ErrorCode::parse_error, file + ": complex flag at byte offset 4 must be 0 or 1");
    const std::uint64_t m = detail::get_u64(is, file);
    const std::uint64_t p = detail::get_u64(is, file);
    const std::uint64_t n = detail::get_u64(is, file);
    constexpr std::uint64_t limit = std::uint64_t{1} << 40;
    if (m > limit || p > limit || n > limit || (m != 0 && p != 0 && n != 0 && m * p > limit / n))
        throw Error(ErrorCode::size_limit, file + ": header dimensions are implausibly large");
    Tensor3 x(static_cast<Index>(m), static_cast<Index>(p), static_cast<Index>(n));
    cplx* d = x.data();
    for (Index i = 0; i < x.size(); ++i) {
        const double re = detail::get_f64(is, file);
        const double im = flag == 1 ? detail::get_f64(is, file) : 0.0;
        d[i] = cplx(re, im);
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::parse_error,
                    file + ": trailing bytes after payload at byte offset " + std::to_string(static_cast<long long>(is.tellg())));
    return x;
}

namespace detail {

/// One m x n real matrix per file, comma separated, no header.
inline RealMatrix read_csv_matrix(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorCode::io_error, "cannot open " + file);
    std::vector<std::vector<double>> rows;
    std::string line;
    Index line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::vector<double> row;
        std::size_t pos = 0;
        Index col = 0;
        while (true) {
            ++col;
            const std::size_t end = std::min(line.find(',', pos), line.size());
            std::size_t b = pos, e = end;
            while (b < e && (line[b] == ' ' || line[b] == '\t'))
                ++b;
            while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t'))
                --e;
            double v = 0.0;
            const char* first = line.data() + b;
            const char* last = line.data() + e;
            if (first != last && *first == '+')
                ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            const std::string where = file + ": line " + std::to_string(line_no) + ", column " + std::to_string(col);
            if (ec != std::errc() || ptr != last || b == e)
                throw Error(ErrorCode::parse_error, where + ": cannot parse '" + line.substr(b, e - b) + "'");
            if (!std::isfinite(v))
                throw Error(ErrorCode::parse_error, where + ": non-finite value");
            row.push_back(v);
            if (end == line.size())
                break;
            pos = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::parse_error, file + ": line " + std::to_string(line_no) + " has " +
                                                    std::to_string(row.size()) + " columns, expected " +
                                                    std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw Error(ErrorCode::parse_error, file + ": no data");
    RealMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < out.rows(); ++i)
        for (Index k = 0; k < out.cols(); ++k)
            out(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return out;
}

} // namespace detail

/// Each file is one snapshot (m rows x n columns); lateral order is lexicographic filename order.
inline Tensor3 load_csv_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorCode::io_error, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    if (files.empty())
        throw Error(ErrorCode::insufficient_data, dir.string() + " contains no .csv files");
    std::optional<Tensor3> out;
    for (std::size_t j = 0; j < files.size(); ++j) {
        const RealMatrix snap = detail::read_csv_matrix(files[j]);
        if (!out)
            out.emplace(snap.rows(), static_cast<Index>(files.size()), snap.cols());
        if (snap.rows() != out->rows() || snap.cols() != out->tubes())
            throw Error(ErrorCode::invalid_dimension,
                        files[j].string() + ": snapshot is " + std::to_string(snap.rows()) + "x" +
                            std::to_string(snap.cols()) + ", expected " + std::to_string(out->rows()) + "x" +
                            std::to_string(out->tubes()));
        for (Index k = 0; k < snap.cols(); ++k)
            for (Index i = 0; i < snap.rows(); ++i)
                (*out)(i, static_cast<Index>(j), k) = snap(i, k);
    }
    return std::move(*out);
}

/// Writes snapshot j as <dir>/snap_<j>.csv with zero-padded index. Real parts only.
inline void save_csv_dir(const Tensor3& x, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::size_t width = std::to_string(std::max<Index>(x.cols() - 1, 0)).size();
    for (Index j = 0; j < x.cols(); ++j) {
        std::string idx = std::to_string(j);
        idx.insert(0, width - idx.size(), '0');
        std::ofstream os(dir / ("snap_" + idx + ".csv"));
        if (!os)
            throw Error(ErrorCode::io_error, "cannot write into " + dir.string());
        for (Index i = 0; i < x.rows(); ++i) {
            for (Index k = 0; k < x.tubes(); ++k) {
                std::array<char, 32> buf{};
                auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x(i, j, k).real());
                if (k > 0)
                    os << ',';
                os.write(buf.data(), res.ptr - buf.data());
            }
            os << '\n';
        }
    }
}

inline Tensor3 load_snapshots(const std::filesystem::path& path, SnapshotFormat format) {
    return format == SnapshotFormat::tdt ? load_tdt(path) : load_csv_dir(path);
}

/// Format follows the path: a ".tdt" file, anything else is a CSV directory.
inline Tensor3 load_snapshots(const std::filesystem::path& path) {
    return load_snapshots(path, std::filesystem::is_directory(path) ? SnapshotFormat::csv_dir : SnapshotFormat::tdt);
}

inline void save_snapshots(const Tensor3& x, const std::filesystem::path& path,
                           SnapshotFormat format = SnapshotFormat::tdt) {
    if (format == SnapshotFormat::tdt)
        save_tdt(x, path);
    else
        save_csv_dir(x, path);
}

} // namespace tdmd
