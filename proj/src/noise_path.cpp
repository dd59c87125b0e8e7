#include "rim/noise_path.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "rim/format.hpp"
#include "rim/rng.hpp"

namespace rim {

namespace {

// substream ids under a path's stream seed
constexpr std::uint64_t kSubBrownianBack = 0;
constexpr std::uint64_t kSubBrownianFwd = 1;
constexpr std::uint64_t kSubOuResidual = 2;
constexpr std::uint64_t kSubBridge = 3;

static_assert(std::endian::native == std::endian::little,
              "path cache format assumes a little-endian host");

/// Maximum of a Brownian bridge between (a, b) over an interval of width dt,
/// sampled by inversion: P(M >= m) = exp(-2(m-a)(m-b)/dt) for m >= max(a,b).
double bridge_max(double a, double b, double dt, double u) {
    const double d = a - b;
    return 0.5 * ((a + b) + std::sqrt(d * d - 2.0 * dt * std::log(u)));
}

/// sup over [-tail, 0] of f(s) = sgn*w(s) + s, refined by per-interval
/// bridge maxima (the grid supremum alone biases the known Exp law of
/// 2*sup by ~0.58*sqrt(dt)).
double sup_drifted(const NoisePath& p, double sgn, Rng& rng) {
    const std::size_t i0 = p.i_zero();
    const std::size_t iback = p.grid.index_of(-p.tail_T);
    const double dt = p.grid.dt;
    double m = 0.0;  // s=0 contributes w(0)+0 = 0
    double prev = sgn * p.w[i0];
    for (std::size_t i = i0; i > iback; --i) {
        const double t_lo = p.grid.t(i - 1);
        const double f_lo = sgn * p.w[i - 1] + t_lo;
        const double f_hi = prev + p.grid.t(i);
        m = std::max(m, f_lo);
        m = std::max(m, bridge_max(f_lo, f_hi, dt, rng.next_uniform()));
        prev = sgn * p.w[i - 1];
    }
    return m;
}

void compute_backward_functionals(NoisePath& p) {
    Rng rng(splitmix64(p.seed + kSubBridge));
    p.k_tilde = sup_drifted(p, +1.0, rng);
    p.k_tilde_neg = sup_drifted(p, -1.0, rng);
    p.k_pm = (p.k_tilde + 1.0) + (p.k_tilde_neg + 1.0);
    z_at_zero(p);
}

void rebuild_zint(NoisePath& p) {
    const std::size_t n = p.grid.n_nodes();
    p.zint.assign(n, 0.0);
    const std::size_t i0 = p.i_zero();
    // exact per-step integral from the OU identity:
    //   int_{t_i}^{t_{i+1}} z ds = z_i - z_{i+1} + sigma*(w_{i+1}-w_i)
    for (std::size_t i = i0; i + 1 < n; ++i)
        p.zint[i + 1] = p.zint[i] + (p.z[i] - p.z[i + 1] + p.sigma * (p.w[i + 1] - p.w[i]));
    for (std::size_t i = i0; i > 0; --i)
        p.zint[i - 1] = p.zint[i] - (p.z[i - 1] - p.z[i] + p.sigma * (p.w[i] - p.w[i - 1]));
}

}  // namespace

NoisePath sample_brownian(const TimeGrid& grid, std::uint64_t stream_seed) {
    NoisePath p;
    p.grid = grid;
    p.seed = stream_seed;
    p.w.assign(grid.n_nodes(), 0.0);
    if (!(grid.t_start <= 0.0 && grid.t_end() >= 0.0) && !grid.is_node(0.0))
        throw std::invalid_argument("sample_brownian: grid must contain t=0");
    const std::size_t i0 = grid.index_of(0.0);
    const double sdt = std::sqrt(grid.dt);
    {
        Rng rng(splitmix64(stream_seed + kSubBrownianBack));
        for (std::size_t i = i0; i > 0; --i)
            p.w[i - 1] = p.w[i] + sdt * rng.next_normal();
    }
    {
        Rng rng(splitmix64(stream_seed + kSubBrownianFwd));
        for (std::size_t i = i0; i + 1 < grid.n_nodes(); ++i)
            p.w[i + 1] = p.w[i] + sdt * rng.next_normal();
    }
    p.tail_T = -grid.t_start;
    return p;
}

void derive_ou(NoisePath& path, double sigma, OuInit init, double tail_T) {
    if (sigma < 0.0) throw std::invalid_argument("derive_ou: sigma must be >= 0");
    if (path.w.size() != path.grid.n_nodes())
        throw std::invalid_argument("derive_ou: Brownian skeleton not filled");
    path.sigma = sigma;
    if (tail_T > 0.0) {
        if (-path.grid.t_start < tail_T - 1e-9)
            throw std::invalid_argument("derive_ou: grid does not cover [-tail_T, 0]");
        path.tail_T = tail_T;
    }
    const double dt = path.grid.dt;
    const std::size_t n = path.grid.n_nodes();
    const double decay = std::exp(-dt);
    const double c = -std::expm1(-dt);                  // Cov(dw, I)
    const double v_i = 0.5 * -std::expm1(-2.0 * dt);    // Var(I)
    const double cond_sd = std::sqrt(std::max(v_i - c * c / dt, 0.0));

    Rng rng(splitmix64(path.seed + kSubOuResidual));
    path.z.assign(n, 0.0);
    path.z[0] = (init == OuInit::Stationary) ? sigma * std::sqrt(0.5) * rng.next_normal() : 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dw = path.w[i + 1] - path.w[i];
        const double I = (c / dt) * dw + cond_sd * rng.next_normal();
        path.z[i + 1] = decay * path.z[i] + sigma * I;
    }
    rebuild_zint(path);
    compute_backward_functionals(path);
}

double z_at_zero(NoisePath& path, double tol) {
    const std::size_t i0 = path.i_zero();
    const std::size_t iback = path.grid.index_of(-path.tail_T);
    const double dt = path.grid.dt;
    double acc = 0.0;
    for (std::size_t i = iback; i < i0; ++i) {
        const double f_lo = std::exp(path.grid.t(i)) * path.w[i];
        const double f_hi = std::exp(path.grid.t(i + 1)) * path.w[i + 1];
        acc += 0.5 * dt * (f_lo + f_hi);
    }
    path.z0_quadrature = path.sigma * acc;
    path.z0_truncation_bound =
        path.sigma * std::exp(-path.tail_T) * (path.k_tilde + path.tail_T + 1.0);
    path.z0_truncation_warning = path.z0_truncation_bound > tol;
    return path.z0_quadrature;
}

KFunctionals compute_k_functionals(const NoisePath& path, double nu, double sigma,
                                   double eta) {
    if (sigma <= 0.0)
        throw std::domain_error("compute_k_functionals: K2 requires sigma > 0");
    KFunctionals out;
    out.k_tilde = path.k_tilde;
    out.k_pm = path.k_pm;
    const std::size_t i0 = path.i_zero();
    const std::size_t iback = path.grid.index_of(-path.tail_T);
    double sup = 0.0;
    for (std::size_t i = iback; i <= i0; ++i) {
        const double tau = path.grid.t(i);
        const double num = -std::expm1(nu * tau + sigma * path.w[i]);
        sup = std::max(sup, std::abs(num) / (sigma * std::exp(eta * -tau)));
    }
    out.k2 = sup;
    return out;
}

NoisePath shift_path(const NoisePath& path, double t_shift) {
    const std::size_t ishift = path.grid.index_of(t_shift);
    const std::size_t i0 = path.i_zero();
    // shifted window must still cover [-tail_T, 0]
    if (path.grid.t_start - t_shift > -path.tail_T + 1e-12)
        throw std::out_of_range("shift_path: shifted window underflows the stored grid");
    NoisePath out;
    out.grid = TimeGrid(path.grid.t_start - t_shift, path.grid.dt, path.grid.n_steps);
    out.sigma = path.sigma;
    out.tail_T = path.tail_T;
    out.seed = splitmix64(path.seed + 0x5157ULL + ishift - i0);
    const double w0 = path.w[ishift];
    const double zint0 = path.zint[ishift];
    out.w.resize(path.w.size());
    out.z.resize(path.z.size());
    out.zint.resize(path.zint.size());
    for (std::size_t i = 0; i < path.w.size(); ++i) {
        out.w[i] = path.w[i] - w0;
        out.z[i] = path.z[i];
        out.zint[i] = path.zint[i] - zint0;
    }
    compute_backward_functionals(out);
    return out;
}

NoisePath make_noise_path(const TimeGrid& grid, std::uint64_t stream_seed, double sigma,
                          OuInit init, double tail_T) {
    NoisePath p = sample_brownian(grid, stream_seed);
    derive_ou(p, sigma, init, tail_T);
    return p;
}

NoisePath NoisePath::from_arrays(const TimeGrid& grid, std::vector<double> w,
                                 std::vector<double> z, double sigma, double tail_T) {
    if (w.size() != grid.n_nodes() || z.size() != grid.n_nodes())
        throw std::invalid_argument("NoisePath::from_arrays: array length mismatch");
    NoisePath p;
    p.grid = grid;
    p.w = std::move(w);
    p.z = std::move(z);
    p.sigma = sigma;
    p.tail_T = tail_T > 0.0 ? tail_T : -grid.t_start;
    p.seed = 0;
    if (sigma > 0.0) {
        rebuild_zint(p);
    } else {
        // trapezoid; exact when z is the pure-decay solution is not required here
        const std::size_t n = grid.n_nodes();
        const std::size_t i0 = p.i_zero();
        p.zint.assign(n, 0.0);
        for (std::size_t i = i0; i + 1 < n; ++i)
            p.zint[i + 1] = p.zint[i] + 0.5 * grid.dt * (p.z[i] + p.z[i + 1]);
        for (std::size_t i = i0; i > 0; --i)
            p.zint[i - 1] = p.zint[i] - 0.5 * grid.dt * (p.z[i - 1] + p.z[i]);
    }
    // grid-only suprema (synthetic paths skip bridge refinement)
    const std::size_t i0 = p.i_zero();
    const std::size_t iback = grid.index_of(-p.tail_T);
    double m = 0.0, mneg = 0.0;
    for (std::size_t i = iback; i <= i0; ++i) {
        m = std::max(m, p.w[i] + grid.t(i));
        mneg = std::max(mneg, -p.w[i] + grid.t(i));
    }
    p.k_tilde = m;
    p.k_tilde_neg = mneg;
    p.k_pm = m + mneg + 2.0;
    z_at_zero(p);
    return p;
}

void write_path_csv(const NoisePath& path, std::ostream& os) {
    os << "t,w,z\n";
    for (std::size_t i = 0; i < path.grid.n_nodes(); ++i)
        os << fmt_g(path.grid.t(i)) << ',' << fmt_g(path.w[i]) << ',' << fmt_g(path.z[i])
           << '\n';
}

namespace {
constexpr char kPathMagic[8] = {'R', 'I', 'M', 'P', 'A', 'T', 'H', '1'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void write_path_cache(const NoisePath& path, const std::string& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("write_path_cache: cannot open " + file);
    os.write(kPathMagic, sizeof(kPathMagic));
    put(os, path.grid.t_start);
    put(os, path.grid.dt);
    const std::uint64_t n = path.grid.n_steps;
    put(os, n);
    put(os, path.sigma);
    put(os, path.tail_T);
    put(os, path.seed);
    os.write(reinterpret_cast<const char*>(path.w.data()),
             static_cast<std::streamsize>(path.w.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(path.z.data()),
             static_cast<std::streamsize>(path.z.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(path.zint.data()),
             static_cast<std::streamsize>(path.zint.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write_path_cache: write failed for " + file);
}

NoisePath read_path_cache(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("read_path_cache: cannot open " + file);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kPathMagic, sizeof(magic)) != 0)
        throw std::runtime_error("read_path_cache: bad magic in " + file);
    NoisePath p;
    double t_start = 0, dt = 0;
    std::uint64_t n = 0;
    get(is, t_start);
    get(is, dt);
    get(is, n);
    get(is, p.sigma);
    get(is, p.tail_T);
    get(is, p.seed);
    p.grid = TimeGrid(t_start, dt, n);
    p.w.resize(n + 1);
    p.z.resize(n + 1);
    p.zint.resize(n + 1);
    is.read(reinterpret_cast<char*>(p.w.data()),
            static_cast<std::streamsize>(p.w.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(p.z.data()),
            static_cast<std::streamsize>(p.z.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(p.zint.data()),
            static_cast<std::streamsize>(p.zint.size() * sizeof(double)));
    if (!is) throw std::runtime_error("read_path_cache: truncated file " + file);
    compute_backward_functionals(p);
    return p;
}

}  // namespace rim
