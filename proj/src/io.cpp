#include "qmeas/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qmeas/errors.hpp"
#include "qmeas/grid.hpp"
#include "qmeas/util.hpp"

namespace qmeas {
namespace {

constexpr char kMagic[4] = {'Q', 'T', 'R', 'J'};
constexpr std::uint16_t kSnapshotVersion = 1;

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return static_cast<std::size_t>(is.gcount()) == sizeof v;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const TrajectoryResult& r) {
    os << "t,q_mean,p_mean,q_var,p_var,qp_cov,norm,energy\n";
    for (const auto& p : r.points) {
        const auto& m = p.moments;
        os << fmt17(p.t) << ',' << fmt17(m.q_mean) << ',' << fmt17(m.p_mean) << ','
           << fmt17(m.q_var) << ',' << fmt17(m.p_var) << ',' << fmt17(m.qp_cov) << ','
           << fmt17(m.norm) << ',' << fmt17(p.energy) << '\n';
    }
}

void write_measurement_csv(std::ostream& os, const MeasurementRecord& rec) {
    const bool joint = !rec.p_outcomes.empty();
    if (rec.times.size() != rec.q_outcomes.size() ||
        (joint && rec.p_outcomes.size() != rec.q_outcomes.size()))
        throw NumericError("measurement record columns disagree in length");
    os << (joint ? "step,t,Qprime,Pdoubleprime\n" : "step,t,Qprime\n");
    for (std::size_t i = 0; i < rec.q_outcomes.size(); ++i) {
        os << (i + 1) << ',' << fmt17(rec.times[i]) << ',' << fmt17(rec.q_outcomes[i]);
        if (joint) os << ',' << fmt17(rec.p_outcomes[i]);
        os << '\n';
    }
}

void write_snapshot(const std::string& path, const WaveFunction& psi) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ResourceError("cannot write snapshot " + path);
    os.write(kMagic, 4);
    put(os, kSnapshotVersion);
    const GridSpec& spec = psi.grid().spec();
    put(os, static_cast<std::uint32_t>(spec.n_points));
    put(os, spec.x_min);
    put(os, spec.x_max);
    put(os, spec.hbar);
    for (const cplx& a : psi.amp()) {
        put(os, a.real());
        put(os, a.imag());
    }
    os.flush();
    if (!os) throw ResourceError("snapshot write failed: " + path);
}

WaveFunction read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read snapshot " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError(path + " is not a QTRJ snapshot");
    std::uint16_t version = 0;
    if (!get(is, version)) throw ConfigError("truncated snapshot " + path);
    if (version != kSnapshotVersion)
        throw ConfigError("unsupported snapshot version " + std::to_string(version) + " in " +
                          path);
    std::uint32_t n = 0;
    if (!get(is, n)) throw ConfigError("truncated snapshot " + path);
    if (n < 2 || n > (1u << 24))
        throw ConfigError("snapshot " + path + " has implausible point count " +
                          std::to_string(n));
    GridSpec spec;
    spec.n_points = static_cast<int>(n);
    if (!get(is, spec.x_min) || !get(is, spec.x_max) || !get(is, spec.hbar))
        throw ConfigError("truncated snapshot " + path);
    std::vector<cplx> amp(n);
    for (auto& a : amp) {
        double re = 0.0, im = 0.0;
        if (!get(is, re) || !get(is, im)) throw ConfigError("truncated snapshot " + path);
        a = cplx(re, im);
    }
    auto grid = std::make_shared<const Grid>(spec);  // revalidates the spec
    return WaveFunction(std::move(grid), std::move(amp));
}

}  // namespace qmeas
